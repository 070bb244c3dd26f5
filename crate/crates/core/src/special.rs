//! Normal-distribution helpers evaluated in log space.

use libm::erfc;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

/// Below this argument `log_ndtr` switches to the Mills-ratio continued fraction.
const TAIL_SWITCH: f64 = -8.0;

/// Standard normal density.
pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn ndtr(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Mills ratio `(1 - Φ(t)) / φ(t)` for large positive `t`, by the Laplace
/// continued fraction evaluated backwards.
fn mills_ratio(t: f64) -> f64 {
    let mut f = t;
    for k in (1..=80).rev() {
        f = t + k as f64 / f;
    }
    1.0 / f
}

/// `ln Φ(x)`, accurate over the whole real line.
pub fn log_ndtr(x: f64) -> f64 {
    if x < TAIL_SWITCH {
        let t = -x;
        -0.5 * t * t - LN_SQRT_2PI + mills_ratio(t).ln()
    } else if x > 5.0 {
        (-0.5 * erfc(x * FRAC_1_SQRT_2)).ln_1p()
    } else {
        ndtr(x).ln()
    }
}

/// `ln(1 - exp(a))` for `a <= 0`.
pub fn log1mexp(a: f64) -> f64 {
    if a > -std::f64::consts::LN_2 {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// `ln(Φ(hi) - Φ(lo))` for `lo <= hi`, choosing the tail that avoids cancellation.
pub fn log_ndtr_diff(lo: f64, hi: f64) -> f64 {
    debug_assert!(lo <= hi);
    if lo == hi {
        return f64::NEG_INFINITY;
    }
    if hi <= 0.0 {
        let lh = log_ndtr(hi);
        lh + log1mexp(log_ndtr(lo) - lh)
    } else if lo >= 0.0 {
        let ll = log_ndtr(-lo);
        ll + log1mexp(log_ndtr(-hi) - ll)
    } else {
        (1.0 - ndtr(lo) - ndtr(-hi)).ln()
    }
}

/// Numerically stable `ln Σ exp(x_i)`.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    if m == f64::INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}
