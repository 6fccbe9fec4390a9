use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use kppfront::cli::{list_presets, run, runner, sweep, RunConfig};
use kppfront::{Error, Result};

#[derive(Parser)]
#[command(name = "kppfront", version, about = "Spreading speeds of heterogeneous KPP fronts")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Source {
    /// JSON run config; may name a preset to merge over.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment.
    Run {
        #[command(flatten)]
        source: Source,
    },
    /// Run one experiment per parameter value and aggregate sweep.csv.
    Sweep {
        #[command(flatten)]
        source: Source,
        /// seed, b0, alpha, epsilon, or a dotted config path.
        #[arg(long)]
        param: String,
        /// Comma separated values.
        #[arg(long, value_delimiter = ',', num_args = 0..)]
        values: Vec<f64>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// List shipped presets.
    ListPresets,
}

fn load(source: &Source) -> Result<RunConfig> {
    let mut doc = match &source.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<serde_json::Value>(&text)
                .map_err(|e| Error::Config(format!("{}: malformed JSON: {e}", path.display())))?
        }
        None => serde_json::json!({}),
    };
    if let Some(p) = &source.preset {
        doc["preset"] = p.clone().into();
    }
    if doc.get("preset").is_none() && source.config.is_none() {
        return Err(Error::Config("give --config or --preset".into()));
    }
    if let Some(s) = source.seed {
        doc["seed"] = s.into();
    }
    if let Some(d) = &source.out_dir {
        doc["output"]["dir"] = d.display().to_string().into();
    }
    RunConfig::from_value(doc)
}

fn out_dir(cfg: &RunConfig) -> PathBuf {
    cfg.output.dir.as_ref().map(PathBuf::from).unwrap_or_else(|| runner::default_out_dir(cfg))
}

fn fmt(x: Option<f64>) -> String {
    x.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into())
}

fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::ListPresets => {
            for (name, desc) in list_presets() {
                println!("{name:<24} {desc}");
            }
            Ok(0)
        }
        Command::Run { source } => {
            let cfg = load(source)?;
            let out = run(&cfg, &out_dir(&cfg));
            if let Some(e) = &out.error {
                eprintln!("error: {e}");
            }
            if let (Some(s), false) = (&out.summary, cli.quiet) {
                let r = &s.report;
                println!("medium      {}", r.medium_id);
                println!("engine      {}", r.engine);
                println!("w_under     {:.6}   w_over      {:.6}", r.w_under, r.w_over);
                println!("w_star_emp  {}   w_upper_emp {}", fmt(r.w_star_emp), fmt(r.w_upper_emp));
                if let Some(g) = &s.gap {
                    println!("gap         {} (required > {})", fmt(g.observed_fraction), g.required_fraction);
                }
                println!("verdict     {}", if s.verdict { "PASS" } else { "FAIL" });
                println!("output      {}", out.dir.display());
            }
            Ok(out.exit_code)
        }
        Command::Sweep {
            source,
            param,
            values,
            workers,
        } => {
            let cfg = load(source)?;
            let out = sweep(&cfg, param, values, &out_dir(&cfg), *workers)?;
            if !cli.quiet {
                println!("{param:>12}  {:>9}  {:>9}  {:>9}  {:>9}  exit", "w_under", "w_over", "w_star", "w_upper");
                for r in &out.rows {
                    println!(
                        "{:>12}  {:>9}  {:>9}  {:>9}  {:>9}  {}",
                        r.value,
                        fmt(r.w_under),
                        fmt(r.w_over),
                        fmt(r.w_star_emp),
                        fmt(r.w_upper_emp),
                        r.exit_code
                    );
                }
                println!("output {}", out.dir.join("sweep.csv").display());
            }
            for r in out.rows.iter().filter_map(|r| r.error.as_ref()) {
                eprintln!("error: {r}");
            }
            Ok(out.exit_code)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
