//! Coefficient fields, nonlinearities and the media built from them.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassTag {
    Constant,
    Periodic,
    CompactPerturbation,
    TrigAlmostPeriodic,
    AsymptoticSum,
    RandomRealization,
    SlowOscillation,
}

impl ClassTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ClassTag::Constant => "constant",
            ClassTag::Periodic => "periodic",
            ClassTag::CompactPerturbation => "compact-perturbation",
            ClassTag::TrigAlmostPeriodic => "trig-almost-periodic",
            ClassTag::AsymptoticSum => "asymptotic-sum",
            ClassTag::RandomRealization => "random-realization",
            ClassTag::SlowOscillation => "slow-oscillation",
        }
    }
}

/// One cosine term `amplitude * cos(2*pi*harmonic*x/L + phase)` (periodic
/// media) or `amplitude * cos(harmonic*x + phase)` (almost periodic media,
/// where `harmonic` is an angular frequency).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub amplitude: f64,
    pub harmonic: f64,
    #[serde(default)]
    pub phase: f64,
}

impl Mode {
    pub fn new(amplitude: f64, harmonic: f64, phase: f64) -> Self {
        Mode { amplitude, harmonic, phase }
    }
}

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
type ReactionFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Constant(f64),
    /// `base + sum amp * cos(omega * x + phase)`; `wrap` reduces x modulo a period first.
    Trig {
        base: f64,
        terms: Vec<(f64, f64, f64)>,
        wrap: Option<f64>,
    },
    Bump { base: f64, amp: f64, radius: f64 },
    Transient { amp: f64, rate: f64 },
    Random(RandomCells),
    /// `profile(ln(1+|x|)^alpha)`.
    Slow { profile: Box<Repr>, alpha: f64 },
    Sum(Box<Repr>, Box<Repr>),
    /// `sign * inner(-x)`.
    Reflect(Box<Repr>, f64),
    Custom { value: ScalarFn, derivative: ScalarFn },
}

#[derive(Clone, Debug)]
struct RandomCells {
    seed: u64,
    tag: u64,
    cell: f64,
    half_width: f64,
    lo: f64,
    hi: f64,
}

impl RandomCells {
    fn cell_value(&self, k: i64) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(((k as u64) << 1) | self.tag);
        rng.gen_range(self.lo..self.hi)
    }

    /// Hat-kernel smoothing of the step at the nearest cell boundary.
    fn eval(&self, x: f64) -> (f64, f64) {
        let k = (x / self.cell).round();
        let t = (x - k * self.cell) / self.half_width;
        let k = k as i64;
        if t.abs() >= 1.0 {
            return (self.cell_value((x / self.cell).floor() as i64), 0.0);
        }
        let left = self.cell_value(k - 1);
        let right = self.cell_value(k);
        let jump = right - left;
        let s = if t <= 0.0 {
            0.5 * (1.0 + t) * (1.0 + t)
        } else {
            1.0 - 0.5 * (1.0 - t) * (1.0 - t)
        };
        (left + jump * s, jump * (1.0 - t.abs()) / self.half_width)
    }
}

impl Repr {
    fn value(&self, x: f64) -> f64 {
        match self {
            Repr::Constant(v) => *v,
            Repr::Trig { base, terms, wrap } => {
                let y = match wrap {
                    Some(l) => x.rem_euclid(*l),
                    None => x,
                };
                terms
                    .iter()
                    .fold(*base, |acc, &(amp, om, ph)| acc + amp * (om * y + ph).cos())
            }
            Repr::Bump { base, amp, radius } => {
                if x.abs() >= *radius {
                    *base
                } else {
                    base + amp * 0.5 * (1.0 + (PI * x / radius).cos())
                }
            }
            Repr::Transient { amp, rate } => amp * (-rate * x.abs()).exp(),
            Repr::Random(cells) => cells.eval(x).0,
            Repr::Slow { profile, alpha } => profile.value(slow_phase(x, *alpha)),
            Repr::Sum(l, r) => l.value(x) + r.value(x),
            Repr::Reflect(inner, sign) => sign * inner.value(-x),
            Repr::Custom { value, .. } => value(x),
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        match self {
            Repr::Constant(_) => 0.0,
            Repr::Trig { terms, wrap, .. } => {
                let y = match wrap {
                    Some(l) => x.rem_euclid(*l),
                    None => x,
                };
                terms
                    .iter()
                    .map(|&(amp, om, ph)| -amp * om * (om * y + ph).sin())
                    .sum()
            }
            Repr::Bump { amp, radius, .. } => {
                if x.abs() >= *radius {
                    0.0
                } else {
                    -amp * 0.5 * PI / radius * (PI * x / radius).sin()
                }
            }
            Repr::Transient { amp, rate } => -rate * x.signum() * amp * (-rate * x.abs()).exp(),
            Repr::Random(cells) => cells.eval(x).1,
            Repr::Slow { profile, alpha } => {
                let l = (1.0 + x.abs()).ln();
                if l == 0.0 {
                    return 0.0;
                }
                let dphi = alpha * l.powf(alpha - 1.0) * x.signum() / (1.0 + x.abs());
                profile.derivative(l.powf(*alpha)) * dphi
            }
            Repr::Sum(l, r) => l.derivative(x) + r.derivative(x),
            Repr::Reflect(inner, sign) => -sign * inner.derivative(-x),
            Repr::Custom { derivative, .. } => derivative(x),
        }
    }
}

fn slow_phase(x: f64, alpha: f64) -> f64 {
    (1.0 + x.abs()).ln().powf(alpha)
}

/// A real coefficient of the equation, with cached extremes from grid sampling.
#[derive(Clone)]
pub struct CoefficientField {
    repr: Arc<Repr>,
    class_tag: ClassTag,
    period: Option<f64>,
    support_radius: Option<f64>,
    sampled_inf: f64,
    sampled_sup: f64,
}

impl fmt::Debug for CoefficientField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientField")
            .field("class_tag", &self.class_tag)
            .field("period", &self.period)
            .field("support_radius", &self.support_radius)
            .field("sampled_inf", &self.sampled_inf)
            .field("sampled_sup", &self.sampled_sup)
            .finish()
    }
}

fn sample_extremes(repr: &Repr, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    let mut mn = f64::INFINITY;
    let mut mx = f64::NEG_INFINITY;
    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let v = repr.value(x);
        mn = mn.min(v);
        mx = mx.max(v);
    }
    (mn, mx)
}

impl CoefficientField {
    fn build(repr: Repr, class_tag: ClassTag, period: Option<f64>, support_radius: Option<f64>, window: (f64, f64), n: usize) -> Self {
        let (sampled_inf, sampled_sup) = match &repr {
            Repr::Constant(v) => (*v, *v),
            _ => sample_extremes(&repr, window.0, window.1, n),
        };
        CoefficientField {
            repr: Arc::new(repr),
            class_tag,
            period,
            support_radius,
            sampled_inf,
            sampled_sup,
        }
    }

    pub fn constant(v: f64) -> Self {
        Self::build(Repr::Constant(v), ClassTag::Constant, None, None, (0.0, 0.0), 1)
    }

    /// Trigonometric polynomial of period `period`; modes use integer harmonics.
    pub fn periodic(base: f64, modes: &[Mode], period: f64) -> Self {
        let terms: Vec<_> = modes
            .iter()
            .filter(|m| m.amplitude != 0.0)
            .map(|m| (m.amplitude, 2.0 * PI * m.harmonic / period, m.phase))
            .collect();
        if terms.is_empty() {
            return Self::constant(base);
        }
        Self::build(
            Repr::Trig { base, terms, wrap: Some(period) },
            ClassTag::Periodic,
            Some(period),
            None,
            (0.0, period),
            4097,
        )
    }

    /// Finite cosine sum with arbitrary angular frequencies.
    pub fn almost_periodic(base: f64, modes: &[Mode]) -> Self {
        let terms: Vec<_> = modes
            .iter()
            .filter(|m| m.amplitude != 0.0)
            .map(|m| (m.amplitude, m.harmonic, m.phase))
            .collect();
        Self::build(
            Repr::Trig { base, terms, wrap: None },
            ClassTag::TrigAlmostPeriodic,
            None,
            None,
            (0.0, 1.0e4),
            100_001,
        )
    }

    /// `base` plus a cosine-tapered bump supported in `[-radius, radius]`.
    pub fn bump(base: f64, amp: f64, radius: f64) -> Self {
        Self::build(
            Repr::Bump { base, amp, radius },
            ClassTag::CompactPerturbation,
            None,
            Some(radius),
            (-radius, radius),
            4097,
        )
    }

    /// Mollified piecewise-constant field with i.i.d. uniform cell values.
    pub fn random(seed: u64, tag: u64, cell: f64, range: (f64, f64)) -> Self {
        let cells = RandomCells {
            seed,
            tag,
            cell,
            half_width: cell / 8.0,
            lo: range.0,
            hi: range.1,
        };
        let step = cell / 16.0;
        let n = (2000.0 / step) as usize + 1;
        Self::build(Repr::Random(cells), ClassTag::RandomRealization, None, None, (-1000.0, 1000.0), n)
    }

    /// `profile(ln(1+|x|)^alpha)` for a periodic profile given by `profile_base`, `modes`, `period`.
    pub fn slowly_oscillating(profile_base: f64, modes: &[Mode], period: f64, alpha: f64) -> Self {
        let profile = CoefficientField::periodic(profile_base, modes, period);
        let (inf, sup) = (profile.sampled_inf, profile.sampled_sup);
        CoefficientField {
            repr: Arc::new(Repr::Slow {
                profile: Box::new((*profile.repr).clone()),
                alpha,
            }),
            class_tag: ClassTag::SlowOscillation,
            period: None,
            support_radius: None,
            sampled_inf: inf,
            sampled_sup: sup,
        }
    }

    /// Arbitrary field from closures; extremes sampled on `window`.
    pub fn custom<F, D>(value: F, derivative: D, window: (f64, f64)) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::build(
            Repr::Custom {
                value: Arc::new(value),
                derivative: Arc::new(derivative),
            },
            ClassTag::Constant,
            None,
            None,
            window,
            10_001,
        )
    }

    /// Pointwise sum; the class tag of `self` is kept unless overridden.
    pub fn plus(&self, other: &CoefficientField, tag: ClassTag, window: (f64, f64)) -> Self {
        let repr = Repr::Sum(Box::new((*self.repr).clone()), Box::new((*other.repr).clone()));
        let period = match (self.period, other.period, other.is_constant()) {
            (Some(p), _, true) => Some(p),
            _ => None,
        };
        let mut out = Self::build(repr, tag, period, self.support_radius, window, 100_001);
        if self.is_constant() && other.is_constant() {
            out.sampled_inf = self.sampled_inf + other.sampled_inf;
            out.sampled_sup = out.sampled_inf;
        }
        out
    }

    pub fn shifted(&self, m: f64) -> Self {
        let mut out = CoefficientField {
            repr: Arc::new(Repr::Sum(Box::new((*self.repr).clone()), Box::new(Repr::Constant(m)))),
            ..self.clone()
        };
        out.sampled_inf += m;
        out.sampled_sup += m;
        out
    }

    /// `x -> sign * self(-x)`.
    pub fn reflected(&self, sign: f64) -> Self {
        CoefficientField {
            repr: Arc::new(Repr::Reflect(Box::new((*self.repr).clone()), sign)),
            sampled_inf: if sign >= 0.0 { sign * self.sampled_inf } else { sign * self.sampled_sup },
            sampled_sup: if sign >= 0.0 { sign * self.sampled_sup } else { sign * self.sampled_inf },
            ..self.clone()
        }
    }

    /// Derivative field `q = a'` with extremes sampled on `window`.
    pub fn derivative_field(&self, window: (f64, f64)) -> Self {
        let base = self.clone();
        let base2 = self.clone();
        let h = 1e-5;
        let mut d = CoefficientField::custom(
            move |x| base.derivative(x),
            move |x| (base2.derivative(x + h) - base2.derivative(x - h)) / (2.0 * h),
            window,
        );
        d.class_tag = self.class_tag;
        d.period = self.period;
        d.support_radius = self.support_radius;
        if self.is_constant() {
            return CoefficientField::constant(0.0);
        }
        d
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.repr.value(x)
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        self.repr.derivative(x)
    }

    pub fn sample(&self, xs: impl IntoIterator<Item = f64>) -> Vec<f64> {
        xs.into_iter().map(|x| self.value(x)).collect()
    }

    pub fn class_tag(&self) -> ClassTag {
        self.class_tag
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn support_radius(&self) -> Option<f64> {
        self.support_radius
    }

    pub fn sampled_inf(&self) -> f64 {
        self.sampled_inf
    }

    pub fn sampled_sup(&self) -> f64 {
        self.sampled_sup
    }

    pub fn is_constant(&self) -> bool {
        matches!(*self.repr, Repr::Constant(_))
    }

    pub fn constant_value(&self) -> Option<f64> {
        match *self.repr {
            Repr::Constant(v) => Some(v),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormTag {
    Logistic,
    Custom,
}

/// Reaction term `f(x, s)` together with its linearization `c(x) = f_s(x, 0)`.
#[derive(Clone)]
pub struct Nonlinearity {
    pub linearization: CoefficientField,
    pub form: FormTag,
    custom: Option<ReactionFn>,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("linearization", &self.linearization)
            .field("form", &self.form)
            .finish()
    }
}

impl Nonlinearity {
    pub fn logistic(c: CoefficientField) -> Self {
        Nonlinearity {
            linearization: c,
            form: FormTag::Logistic,
            custom: None,
        }
    }

    pub fn custom<F>(c: CoefficientField, f: F) -> Self
    where
        F: Fn(f64, f64) -> f64 + Send + Sync + 'static,
    {
        Nonlinearity {
            linearization: c,
            form: FormTag::Custom,
            custom: Some(Arc::new(f)),
        }
    }

    pub fn eval(&self, x: f64, s: f64) -> f64 {
        match &self.custom {
            None => self.linearization.value(x) * s * (1.0 - s),
            Some(f) => f(x, s),
        }
    }

    /// Same as `eval` but reuses a precomputed `c(x)` for the logistic form.
    #[inline]
    pub fn eval_with(&self, c: f64, x: f64, s: f64) -> f64 {
        match &self.custom {
            None => c * s * (1.0 - s),
            Some(f) => f(x, s),
        }
    }
}

/// Declarative medium description, as found in run configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "class", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediumSpec {
    Homogeneous {
        a0: f64,
        #[serde(default)]
        q0: f64,
        c0: f64,
    },
    Periodic {
        period: f64,
        #[serde(default = "default_baselines")]
        baselines: [f64; 3],
        #[serde(default)]
        a_modes: Vec<Mode>,
        #[serde(default)]
        q_modes: Vec<Mode>,
        #[serde(default)]
        c_modes: Vec<Mode>,
        /// Take `q = a'` instead of `q_modes`.
        #[serde(default)]
        divergence_form: bool,
    },
    CompactPerturbation {
        b0: f64,
        bump_amplitude: f64,
        bump_radius: f64,
    },
    AlmostPeriodic {
        #[serde(default = "default_baselines")]
        baselines: [f64; 3],
        #[serde(default)]
        a_modes: Vec<Mode>,
        #[serde(default)]
        q_modes: Vec<Mode>,
        #[serde(default)]
        c_modes: Vec<Mode>,
    },
    Asymptotic {
        limit: Box<MediumSpec>,
        transient_amplitude: f64,
        decay_rate: f64,
    },
    RandomErgodic {
        seed: u64,
        correlation_length: f64,
        c_range: (f64, f64),
        a_range: (f64, f64),
    },
    SlowlyOscillating {
        #[serde(default = "one")]
        mu0_baseline: f64,
        #[serde(default)]
        mu0_modes: Vec<Mode>,
        #[serde(default = "one")]
        mu0_period: f64,
        alpha: f64,
    },
}

fn default_baselines() -> [f64; 3] {
    [1.0, 0.0, 1.0]
}

fn one() -> f64 {
    1.0
}

impl MediumSpec {
    pub fn build(&self) -> Result<Medium> {
        let mut m = match self {
            MediumSpec::Homogeneous { a0, q0, c0 } => Medium::homogeneous(*a0, *q0, *c0),
            MediumSpec::Periodic {
                period,
                baselines,
                a_modes,
                q_modes,
                c_modes,
                divergence_form,
            } => {
                if *divergence_form {
                    if !q_modes.is_empty() || baselines[1] != 0.0 {
                        return Err(Error::InvalidMedium(
                            "divergence-form periodic medium takes q = a', drop q_modes and the q baseline".into(),
                        ));
                    }
                    Medium::periodic_divergence(a_modes, c_modes, *period, baselines[0], baselines[2])
                } else {
                    Medium::periodic(a_modes, q_modes, c_modes, *period, *baselines)
                }
            }
            MediumSpec::CompactPerturbation {
                b0,
                bump_amplitude,
                bump_radius,
            } => Medium::compact_perturbation(*b0, *bump_amplitude, *bump_radius),
            MediumSpec::AlmostPeriodic {
                baselines,
                a_modes,
                q_modes,
                c_modes,
            } => Medium::almost_periodic(a_modes, q_modes, c_modes, *baselines),
            MediumSpec::Asymptotic {
                limit,
                transient_amplitude,
                decay_rate,
            } => {
                let lim = limit.build()?;
                Medium::asymptotic(&lim, *transient_amplitude, *decay_rate)
            }
            MediumSpec::RandomErgodic {
                seed,
                correlation_length,
                c_range,
                a_range,
            } => Medium::random_ergodic(*seed, *correlation_length, *c_range, *a_range),
            MediumSpec::SlowlyOscillating {
                mu0_baseline,
                mu0_modes,
                mu0_period,
                alpha,
            } => Medium::slowly_oscillating(*mu0_baseline, mu0_modes, *mu0_period, *alpha),
        }?;
        m.spec = Some(self.clone());
        Ok(m)
    }
}

/// Coefficients `a`, `q`, reaction `f` and metadata.
#[derive(Clone, Debug)]
pub struct Medium {
    pub a: CoefficientField,
    pub q: CoefficientField,
    pub f: Nonlinearity,
    /// Set when `q = a'`.
    pub divergence_form: bool,
    pub seed: Option<u64>,
    pub description: String,
    pub id: String,
    limit: Option<Arc<Medium>>,
    mu0_extremes: Option<(f64, f64)>,
    spec: Option<MediumSpec>,
}

impl Medium {
    fn assemble(a: CoefficientField, q: CoefficientField, c: CoefficientField, divergence_form: bool, description: String, id: &str) -> Self {
        Medium {
            a,
            q,
            f: Nonlinearity::logistic(c),
            divergence_form,
            seed: None,
            description,
            id: id.to_string(),
            limit: None,
            mu0_extremes: None,
            spec: None,
        }
    }

    /// Medium from arbitrary fields, without construction-time checks.
    pub fn from_parts(a: CoefficientField, q: CoefficientField, f: Nonlinearity, divergence_form: bool, id: &str) -> Self {
        Medium {
            a,
            q,
            f,
            divergence_form,
            seed: None,
            description: String::from("custom medium"),
            id: id.to_string(),
            limit: None,
            mu0_extremes: None,
            spec: None,
        }
    }

    pub fn homogeneous(a0: f64, q0: f64, c0: f64) -> Result<Self> {
        if !(a0 > 0.0) {
            return Err(Error::InvalidMedium(format!("diffusion a0 = {a0} must be positive")));
        }
        if !(c0 > 0.0) {
            return Err(Error::InvalidMedium(format!("growth rate c0 = {c0} must be positive")));
        }
        let margin = 4.0 * a0 * c0 - q0 * q0;
        if !(margin > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "4*a0*c0 - q0^2 = {margin} is not positive"
            )));
        }
        Ok(Self::assemble(
            CoefficientField::constant(a0),
            CoefficientField::constant(q0),
            CoefficientField::constant(c0),
            q0 == 0.0,
            format!("homogeneous a = {a0}, q = {q0}, c = {c0}"),
            "homogeneous",
        ))
    }

    pub fn periodic(a_modes: &[Mode], q_modes: &[Mode], c_modes: &[Mode], period: f64, baselines: [f64; 3]) -> Result<Self> {
        check_period(period)?;
        for m in a_modes.iter().chain(q_modes).chain(c_modes) {
            if m.harmonic.fract() != 0.0 {
                return Err(Error::InvalidMedium(format!(
                    "periodic modes need integer harmonics, got {}",
                    m.harmonic
                )));
            }
        }
        let a = CoefficientField::periodic(baselines[0], a_modes, period);
        let q = CoefficientField::periodic(baselines[1], q_modes, period);
        let c = CoefficientField::periodic(baselines[2], c_modes, period);
        let div = a.is_constant() && q.constant_value() == Some(0.0);
        let m = Self::assemble(a, q, c, div, format!("periodic, period {period}"), "periodic");
        m.require_valid((0.0, period), 4097)?;
        Ok(m)
    }

    /// Periodic medium in divergence form: `q = a'` exactly.
    pub fn periodic_divergence(a_modes: &[Mode], c_modes: &[Mode], period: f64, a_base: f64, c_base: f64) -> Result<Self> {
        let mut m = Self::periodic(a_modes, &[], c_modes, period, [a_base, 0.0, c_base])?;
        m.q = m.a.derivative_field((0.0, period));
        m.divergence_form = true;
        m.description = format!("periodic divergence form, period {period}");
        m.require_valid((0.0, period), 4097)?;
        Ok(m)
    }

    pub fn compact_perturbation(b0: f64, bump_amplitude: f64, bump_radius: f64) -> Result<Self> {
        if !(b0 > 0.0) || !(bump_radius > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "need b0 > 0 and bump_radius > 0, got {b0}, {bump_radius}"
            )));
        }
        if !(b0 + bump_amplitude.min(0.0) > 0.0) {
            return Err(Error::InvalidMedium(format!(
                "c dips to {} inside the bump",
                b0 + bump_amplitude
            )));
        }
        let c = if bump_amplitude == 0.0 {
            CoefficientField::constant(b0)
        } else {
            CoefficientField::bump(b0, bump_amplitude, bump_radius)
        };
        let mut m = Self::assemble(
            CoefficientField::constant(1.0),
            CoefficientField::constant(0.0),
            c,
            true,
            format!("compact perturbation b0 = {b0}, bump {bump_amplitude} on radius {bump_radius}"),
            "compact_perturbation",
        );
        m.f.linearization.support_radius = Some(bump_radius);
        m.f.linearization.class_tag = ClassTag::CompactPerturbation;
        Ok(m)
    }

    pub fn almost_periodic(a_modes: &[Mode], q_modes: &[Mode], c_modes: &[Mode], baselines: [f64; 3]) -> Result<Self> {
        // With incommensurate frequencies the infimum is base - sum |amp|, even if no sample attains it.
        for (name, base, modes) in [("a", baselines[0], a_modes), ("c", baselines[2], c_modes)] {
            let swing: f64 = modes.iter().map(|m| m.amplitude.abs()).sum();
            if swing >= base {
                return Err(Error::InvalidMedium(format!(
                    "{name} amplitudes sum to {swing}, not below the baseline {base}"
                )));
            }
        }
        let a = CoefficientField::almost_periodic(baselines[0], a_modes);
        let q = CoefficientField::almost_periodic(baselines[1], q_modes);
        let c = CoefficientField::almost_periodic(baselines[2], c_modes);
        let div = a_modes.iter().all(|m| m.amplitude == 0.0)
            && q_modes.iter().all(|m| m.amplitude == 0.0)
            && baselines[1] == 0.0;
        let m = Self::assemble(a, q, c, div, "almost periodic cosine sums".into(), "almost_periodic");
        m.require_valid((0.0, 1.0e4), 100_001)?;
        Ok(m)
    }

    /// `limit` with `amp * exp(-rate |x|)` added to `c`.
    pub fn asymptotic(limit: &Medium, transient_amplitude: f64, decay_rate: f64) -> Result<Self> {
        if limit.c().class_tag() != ClassTag::TrigAlmostPeriodic {
            return Err(Error::InvalidMedium(
                "asymptotic media need an almost periodic limit".into(),
            ));
        }
        if !(decay_rate > 0.0) {
            return Err(Error::InvalidMedium(format!("decay_rate = {decay_rate} must be positive")));
        }
        let transient = CoefficientField::build(
            Repr::Transient {
                amp: transient_amplitude,
                rate: decay_rate,
            },
            ClassTag::AsymptoticSum,
            None,
            None,
            (0.0, 0.0),
            1,
        );
        let window = (-1.0e3, 1.0e4);
        let c = limit.c().plus(&transient, ClassTag::AsymptoticSum, window);
        let mut m = Self::assemble(
            limit.a.clone(),
            limit.q.clone(),
            c,
            limit.divergence_form,
            format!("almost periodic limit plus transient {transient_amplitude}*exp(-{decay_rate}|x|)"),
            "asymptotic_ap",
        );
        m.limit = Some(Arc::new(limit.clone()));
        m.require_valid(window, 110_001)?;
        Ok(m)
    }

    pub fn random_ergodic(seed: u64, correlation_length: f64, c_range: (f64, f64), a_range: (f64, f64)) -> Result<Self> {
        if !(correlation_length > 0.0) {
            return Err(Error::InvalidMedium("correlation_length must be positive".into()));
        }
        for (name, (lo, hi)) in [("c", c_range), ("a", a_range)] {
            if !(lo > 0.0) {
                return Err(Error::InvalidMedium(format!("{name} range low end {lo} must be positive")));
            }
            if lo > hi {
                return Err(Error::InvalidMedium(format!("{name} range ({lo}, {hi}) is reversed")));
            }
        }
        let a = CoefficientField::random(seed, 1, correlation_length, a_range);
        let c = CoefficientField::random(seed, 0, correlation_length, c_range);
        let q = a.derivative_field((-1000.0, 1000.0));
        let mut m = Self::assemble(
            a,
            q,
            c,
            true,
            format!("random ergodic realization, seed {seed}, cell {correlation_length}"),
            "random_ergodic",
        );
        m.seed = Some(seed);
        Ok(m)
    }

    /// `c(x) = mu0(ln(1+|x|)^alpha)` with `a = 1`, `q = 0`.
    pub fn slowly_oscillating(mu0_baseline: f64, mu0_modes: &[Mode], mu0_period: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidMedium(format!("alpha = {alpha} must be positive")));
        }
        check_period(mu0_period)?;
        let profile = CoefficientField::periodic(mu0_baseline, mu0_modes, mu0_period);
        let (lo, hi) = (profile.sampled_inf(), profile.sampled_sup());
        if !(lo > 0.0) {
            return Err(Error::InvalidMedium(format!("min mu0 = {lo} must be positive")));
        }
        let c = if profile.is_constant() {
            profile
        } else {
            CoefficientField::slowly_oscillating(mu0_baseline, mu0_modes, mu0_period, alpha)
        };
        let mut m = Self::assemble(
            CoefficientField::constant(1.0),
            CoefficientField::constant(0.0),
            c,
            true,
            format!("slowly oscillating, alpha = {alpha}"),
            "slow_oscillation",
        );
        m.mu0_extremes = Some((lo, hi));
        Ok(m)
    }

    /// Same medium with `c` (and the logistic reaction built on it) shifted by `m`.
    pub fn with_growth_shift(&self, m: f64) -> Self {
        let mut out = self.clone();
        out.f = Nonlinearity::logistic(self.c().shifted(m));
        out.spec = None;
        out
    }

    /// Same medium with the drift replaced.
    pub fn with_drift(&self, q: CoefficientField) -> Self {
        let mut out = self.clone();
        out.q = q;
        out.divergence_form = false;
        out.spec = None;
        out
    }

    /// Mirror image `x -> -x`: `a(-x)`, `-q(-x)`, `c(-x)`. Divergence form is preserved.
    pub fn reflected(&self) -> Self {
        let c = self.c().reflected(1.0);
        let f = match self.f.form {
            FormTag::Logistic => Nonlinearity::logistic(c),
            FormTag::Custom => {
                let orig = self.f.clone();
                Nonlinearity::custom(c, move |x, s| orig.eval(-x, s))
            }
        };
        let mut out = self.clone();
        out.a = self.a.reflected(1.0);
        out.q = self.q.reflected(-1.0);
        out.f = f;
        out.spec = None;
        out.limit = self.limit.as_ref().map(|l| Arc::new(l.reflected()));
        out
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = id.to_string();
        self
    }

    #[inline]
    pub fn c(&self) -> &CoefficientField {
        &self.f.linearization
    }

    pub fn class_tag(&self) -> ClassTag {
        self.c().class_tag()
    }

    /// Common period of all three coefficients, when there is one.
    pub fn period(&self) -> Option<f64> {
        let fields = [&self.a, &self.q, self.c()];
        let mut period: Option<f64> = None;
        for f in fields {
            if f.is_constant() {
                continue;
            }
            match (f.period(), period) {
                (None, _) => return None,
                (Some(p), None) => period = Some(p),
                (Some(p), Some(prev)) => {
                    if (p - prev).abs() > 1e-12 * prev {
                        return None;
                    }
                }
            }
        }
        period.or_else(|| {
            if self.is_homogeneous() {
                Some(1.0)
            } else {
                None
            }
        })
    }

    pub fn is_homogeneous(&self) -> bool {
        self.a.is_constant() && self.q.is_constant() && self.c().is_constant()
    }

    pub fn limit(&self) -> Option<&Medium> {
        self.limit.as_deref()
    }

    /// `(min mu0, max mu0)` for slowly oscillating media.
    pub fn mu0_extremes(&self) -> Option<(f64, f64)> {
        self.mu0_extremes
    }

    pub fn spec(&self) -> Option<&MediumSpec> {
        self.spec.as_ref()
    }

    pub fn validate(&self, window: (f64, f64), sample_count: usize) -> ValidationReport {
        self.validate_with(window, sample_count, &ValidationOptions::default())
    }

    pub fn validate_with(&self, window: (f64, f64), sample_count: usize, opts: &ValidationOptions) -> ValidationReport {
        validate(self, window, sample_count, opts)
    }

    fn require_valid(&self, window: (f64, f64), n: usize) -> Result<()> {
        let rep = self.validate(window, n);
        match rep.first_failure() {
            None => Ok(()),
            Some(c) => Err(Error::InvalidMedium(format!(
                "{} fails with margin {:.6e} at x = {}",
                c.name, c.margin, c.witness_x
            ))),
        }
    }
}

fn check_period(period: f64) -> Result<()> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::InvalidMedium(format!("period = {period} must be positive")));
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ValidationOptions {
    /// Number of interior `s` samples for the reaction checks.
    pub s_samples: usize,
    /// The positivity margin `4ca - q^2` is only required for `|x| > radius`.
    pub hyp_pos_radius: f64,
    pub divergence_tol: f64,
    pub divergence_step: f64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            s_samples: 20,
            hyp_pos_radius: 0.0,
            divergence_tol: 1e-6,
            divergence_step: 1e-5,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Worst value of the checked quantity; nonnegative (positive for strict checks) means pass.
    pub margin: f64,
    pub witness_x: f64,
    pub witness_s: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub window: (f64, f64),
    pub sample_count: usize,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed)
    }
}

struct Worst {
    margin: f64,
    x: f64,
    s: Option<f64>,
}

impl Worst {
    fn new() -> Self {
        Worst {
            margin: f64::INFINITY,
            x: f64::NAN,
            s: None,
        }
    }

    fn see(&mut self, v: f64, x: f64, s: Option<f64>) {
        if v < self.margin || v.is_nan() {
            self.margin = v;
            self.x = x;
            self.s = s;
        }
    }

    fn check(self, name: &'static str, strict: bool) -> Check {
        let passed = if strict { self.margin > 0.0 } else { self.margin >= 0.0 };
        Check {
            name,
            passed,
            margin: self.margin,
            witness_x: self.x,
            witness_s: self.s,
        }
    }
}

fn validate(m: &Medium, window: (f64, f64), n: usize, opts: &ValidationOptions) -> ValidationReport {
    let (lo, hi) = window;
    let n = n.max(2);
    let ns = opts.s_samples.max(1);
    // Uniform samples plus a geometric cluster near s = 0, where KPP violations hide.
    let mut s_interior: Vec<f64> = (1..=ns).map(|j| j as f64 / (ns + 1) as f64).collect();
    s_interior.extend((2..=8).map(|k| 10f64.powi(-k)));
    s_interior.sort_by(f64::total_cmp);

    let mut inf_a = Worst::new();
    let mut endpoints = Worst::new();
    let mut kpp = Worst::new();
    let mut positive = Worst::new();
    let mut monostable = Worst::new();
    let mut divergence = Worst::new();
    let mut finite = Worst::new();

    for i in 0..n {
        let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let a = m.a.value(x);
        let q = m.q.value(x);
        let c = m.c().value(x);
        finite.see(if a.is_finite() && q.is_finite() && c.is_finite() { 1.0 } else { -1.0 }, x, None);
        inf_a.see(a, x, None);

        let f0 = m.f.eval(x, 0.0);
        let f1 = m.f.eval(x, 1.0);
        endpoints.see(-f0.abs().max(f1.abs()), x, None);

        // s = 0 is included so that a tangent linearization reports margin 0.
        kpp.see(0.0, x, Some(0.0));
        for &s in s_interior.iter().chain(std::iter::once(&1.0)) {
            let f = m.f.eval(x, s);
            // Relative slack keeps rounding in c*s*(1-s) from flagging exact KPP.
            let slack = 1e-14 * (c * s).abs();
            kpp.see(c * s - f + slack, x, Some(s));
        }
        for &s in &s_interior {
            positive.see(m.f.eval(x, s), x, Some(s));
        }
        if x.abs() > opts.hyp_pos_radius {
            monostable.see(4.0 * c * a - q * q, x, None);
        }
        if m.divergence_form {
            let h = opts.divergence_step;
            let da = (m.a.value(x + h) - m.a.value(x - h)) / (2.0 * h);
            // The centered quotient averages a' over [x-h, x+h]; allow the spread of q there.
            let spread = (m.q.value(x + h) - q).abs().max((m.q.value(x - h) - q).abs());
            divergence.see(opts.divergence_tol + spread - (q - da).abs(), x, None);
        }
    }

    let mut checks = vec![
        finite.check("finite", true),
        inf_a.check("inf_a", true),
        endpoints.check("hyp_f_endpoints", false),
        positive.check("hyp_f_positive", true),
        kpp.check("hyp_kpp", false),
    ];
    if monostable.margin.is_finite() || monostable.margin.is_nan() {
        checks.push(monostable.check("hyp_pos", true));
    } else {
        // No sample beyond the radius: nothing to check, report a neutral pass.
        checks.push(Check {
            name: "hyp_pos",
            passed: true,
            margin: f64::INFINITY,
            witness_x: hi,
            witness_s: None,
        });
    }
    if m.divergence_form {
        checks.push(divergence.check("divergence_form", false));
    }
    ValidationReport {
        window,
        sample_count: n,
        checks,
    }
}
