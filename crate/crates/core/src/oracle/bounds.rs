use crate::circuit::EigenvalueMode;

use super::{OracleError, QpeClosedForm};

/// `e^{2‖A‖t} / (2(LP - 1))`, a bound on the squared norm of the part of
/// the state that QPE places more than `LP` grid points away.
pub fn qpe_error_bound(big_l: usize, precision: f64, norm_a: f64, t: f64) -> Result<f64, OracleError> {
    let lp = big_l as f64 * precision;
    if !(lp > 1.0) {
        return Err(OracleError::InvalidPrecision { lp });
    }
    Ok((2.0 * norm_a * t).exp() / (2.0 * (lp - 1.0)))
}

/// Squared-norm bounds on the two precision errors: spreading of the
/// damping factor over the `±p` window, and grid rounding of the
/// eigenvalue.
pub fn precision_error_bounds(big_l: usize, precision: f64, norm_a: f64, t: f64) -> (f64, f64) {
    let l = big_l as f64;
    let p = (l * precision).ceil();
    let amp = (2.0 * norm_a * t).exp();
    let pr1 = amp * (norm_a * t * p / l).exp_m1().powi(2);
    let pr2 = amp * (norm_a * t / (2.0 * l)).exp_m1().powi(2);
    (pr1, pr2)
}

/// Eigenvalue that phase-register basis state `m` decodes to.
pub fn b_value(norm_a: f64, m: usize, big_l: usize, mode: EigenvalueMode) -> f64 {
    let (m, l) = (m as f64, big_l as f64);
    match mode {
        EigenvalueMode::RestrictedPositive => norm_a * (1.0 - m / l),
        EigenvalueMode::GeneralHermitian => norm_a * (1.0 - 2.0 * m / (l - 1.0)),
    }
}

/// True when `P ≥ 1/κ`, which lets the precision window reach the
/// smallest eigenvalue.
pub fn kappa_guard_violated(precision: f64, kappa: Option<f64>) -> bool {
    kappa.is_some_and(|k| precision >= 1.0 / k)
}

/// `e^{2‖A‖t} Σ_{|j|>p} |α_{j|i}|²` for eigenvalue `i`.
pub fn measured_qpe_error(qcf: &QpeClosedForm, i: usize, p: i64, norm_a: f64, t: f64) -> f64 {
    let tail: f64 = qcf
        .offsets()
        .filter(|j| j.abs() > p)
        .map(|j| qcf.alpha(i, j).norm_sqr())
        .sum();
    tail * (2.0 * norm_a * t).exp()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ErrorBudget {
    pub eps_qpe: f64,
    pub eps_pr_1: f64,
    pub eps_pr_2: f64,
    pub precision: f64,
    pub p: usize,
    /// Decoded eigenvalue of every phase-register basis state.
    pub b_grid: Vec<f64>,
    pub kappa_warning: bool,
}

impl ErrorBudget {
    pub fn evaluate(
        big_l: usize,
        precision: f64,
        norm_a: f64,
        t: f64,
        mode: EigenvalueMode,
        kappa: Option<f64>,
    ) -> Result<Self, OracleError> {
        let eps_qpe = qpe_error_bound(big_l, precision, norm_a, t)?;
        let (eps_pr_1, eps_pr_2) = precision_error_bounds(big_l, precision, norm_a, t);
        Ok(Self {
            eps_qpe,
            eps_pr_1,
            eps_pr_2,
            precision,
            p: (big_l as f64 * precision).ceil() as usize,
            b_grid: (0..big_l).map(|m| b_value(norm_a, m, big_l, mode)).collect(),
            kappa_warning: kappa_guard_violated(precision, kappa),
        })
    }
}
