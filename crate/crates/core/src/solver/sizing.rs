//! Register-size heuristics.

use std::f64::consts::LN_2;

/// Largest phase register the estimators will return by default.
pub const DEFAULT_L_CAP: usize = 14;

/// Coefficient of `‖A‖t / ln 2` in [`estimate_l_full`].
pub const L_FULL_C1: f64 = 2.0;
/// Additive safety margin in [`estimate_l_full`].
pub const L_FULL_C0: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SizingError {
    #[error("target error must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("condition number must be at least 1, got {0}")]
    InvalidKappa(f64),
    #[error("required phase register of {l} qubits exceeds the cap of {cap}")]
    Overflow { l: usize, cap: usize },
}

fn check_eps(eps: f64) -> Result<(), SizingError> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(SizingError::InvalidEpsilon(eps))
    }
}

/// `L`, a power of two no smaller than `max(2, ‖A‖t e^{‖A‖t} ‖x0‖ / ε)`.
pub fn estimate_big_l(norm_a: f64, t: f64, eps: f64, norm_x0: f64) -> Result<usize, SizingError> {
    estimate_big_l_capped(norm_a, t, eps, norm_x0, DEFAULT_L_CAP)
}

pub fn estimate_big_l_capped(
    norm_a: f64,
    t: f64,
    eps: f64,
    norm_x0: f64,
    cap: usize,
) -> Result<usize, SizingError> {
    check_eps(eps)?;
    let at = norm_a * t;
    let raw = at * at.exp() * norm_x0 / eps;
    let mut l = 1usize;
    while ((1u64 << l) as f64) < raw {
        l += 1;
        if l > cap {
            return Err(SizingError::Overflow { l, cap });
        }
    }
    if l > cap {
        return Err(SizingError::Overflow { l, cap });
    }
    Ok(1usize << l)
}

/// Unrounded `c1 ‖A‖t/ln2 + log2‖x0‖ + log2(1/ε) + log2 κ + c0`.
pub fn estimate_l_full_raw(
    norm_a: f64,
    t: f64,
    eps: f64,
    norm_x0: f64,
    kappa: f64,
) -> Result<f64, SizingError> {
    check_eps(eps)?;
    if !(kappa >= 1.0) {
        return Err(SizingError::InvalidKappa(kappa));
    }
    Ok(L_FULL_C1 * norm_a * t / LN_2 + norm_x0.log2() - eps.log2() + kappa.log2() + L_FULL_C0)
}

/// Phase-register size including the condition-number dependence.
pub fn estimate_l_full(
    norm_a: f64,
    t: f64,
    eps: f64,
    norm_x0: f64,
    kappa: f64,
) -> Result<usize, SizingError> {
    estimate_l_full_capped(norm_a, t, eps, norm_x0, kappa, DEFAULT_L_CAP)
}

pub fn estimate_l_full_capped(
    norm_a: f64,
    t: f64,
    eps: f64,
    norm_x0: f64,
    kappa: f64,
    cap: usize,
) -> Result<usize, SizingError> {
    let raw = estimate_l_full_raw(norm_a, t, eps, norm_x0, kappa)?;
    let l = ((raw - 1e-12).ceil().max(1.0)) as usize;
    if l > cap {
        return Err(SizingError::Overflow { l, cap });
    }
    Ok(l)
}
