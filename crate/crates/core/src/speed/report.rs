use serde::Serialize;

use super::empirical::FrontSpeedEstimate;
use super::table::SpeedResult;

#[derive(Clone, Debug, Serialize)]
pub struct SandwichCheck {
    pub lower_ok: bool,
    pub ordered_ok: bool,
    pub upper_ok: bool,
}

/// Theoretical and empirical speeds with the sandwich verdict
/// `w_under (1 - tol) <= w_star_emp <= w_upper_emp <= w_over (1 + tol)`.
#[derive(Clone, Debug, Serialize)]
pub struct SpeedReport {
    pub medium_id: String,
    pub medium_description: String,
    pub engine: String,
    pub w_under: f64,
    pub w_over: f64,
    pub p_star_under: f64,
    pub p_star_over: f64,
    pub w_star_emp: Option<f64>,
    pub w_upper_emp: Option<f64>,
    pub tolerance: f64,
    pub checks: SandwichCheck,
    pub verdict: bool,
    pub seed: Option<u64>,
    pub config_hash: Option<String>,
}

pub fn speed_report(
    medium_id: &str,
    medium_description: &str,
    theory: &SpeedResult,
    empirical: &FrontSpeedEstimate,
    tolerance: f64,
) -> SpeedReport {
    let lower_ok = empirical.w_star_emp.is_some_and(|w| w >= theory.w_under * (1.0 - tolerance));
    let upper_ok = empirical.w_upper_emp.is_some_and(|w| w <= theory.w_over * (1.0 + tolerance));
    // The sup criteria are read off a grid, so allow one grid step of crossing.
    let ordered_ok = match (empirical.w_star_emp, empirical.w_upper_emp) {
        (Some(a), Some(b)) => a <= b + 0.011,
        _ => false,
    };
    SpeedReport {
        medium_id: medium_id.to_string(),
        medium_description: medium_description.to_string(),
        engine: theory.engine.clone(),
        w_under: theory.w_under,
        w_over: theory.w_over,
        p_star_under: theory.p_star_under,
        p_star_over: theory.p_star_over,
        w_star_emp: empirical.w_star_emp,
        w_upper_emp: empirical.w_upper_emp,
        tolerance,
        verdict: lower_ok && upper_ok && ordered_ok,
        checks: SandwichCheck {
            lower_ok,
            ordered_ok,
            upper_ok,
        },
        seed: None,
        config_hash: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn est(a: Option<f64>, b: Option<f64>) -> FrontSpeedEstimate {
        FrontSpeedEstimate {
            levels: vec![],
            w_star_emp: a,
            w_upper_emp: b,
            t_final: 1.0,
            window: (0.5, 1.0),
            snapshots_used: 1,
            flags: vec![],
        }
    }

    #[test]
    fn verdicts() {
        let th = SpeedResult {
            w_under: 2.0,
            w_over: 2.0,
            p_star_under: 1.0,
            p_star_over: 1.0,
            engine: "periodic".into(),
        };
        assert!(speed_report("h", "", &th, &est(Some(1.9), Some(1.95)), 0.1).verdict);
        assert!(!speed_report("h", "", &th, &est(Some(1.7), Some(1.95)), 0.1).verdict);
        assert!(!speed_report("h", "", &th, &est(Some(1.9), Some(2.3)), 0.1).verdict);
        assert!(!speed_report("h", "", &th, &est(Some(1.9), None), 0.1).verdict);
    }
}
