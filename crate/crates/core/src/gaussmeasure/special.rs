//! Normal CDF, the radial profile `Ψₙ(r) = P(n/2, r²/2)` and related constants.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use statrs::function::gamma::{gamma_lr, gamma_ur, ln_gamma};
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF `Φ(x)`.
pub fn phi(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Inverse of [`phi`]. Returns `-∞` at `p = 0` and `+∞` at `p = 1`.
pub fn phi_inv(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let mut x = -SQRT_2 * erfc_inv(2.0 * p);
    // Newton polish against the tail that is numerically better resolved.
    for _ in 0..3 {
        let d = normal_pdf(x);
        if d <= 0.0 {
            break;
        }
        let step = if x < 0.0 {
            (phi(x) - p) / d
        } else {
            ((1.0 - p) - phi(-x)) / d
        };
        x -= step;
        if step.abs() < 1e-16 * x.abs().max(1.0) {
            break;
        }
    }
    x
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x == f64::INFINITY {
        1.0
    } else {
        gamma_lr(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x == f64::INFINITY {
        0.0
    } else {
        gamma_ur(a, x)
    }
}

/// `cₙ` with `cₙ⁻¹ = 2^{n/2−1} Γ(n/2)`, so that `Ψₙ′(r) = cₙ r^{n−1} e^{−r²/2}`.
pub fn c_n(n: usize) -> f64 {
    ln_c_n(n).exp()
}

pub fn ln_c_n(n: usize) -> f64 {
    let h = 0.5 * n as f64;
    -((h - 1.0) * std::f64::consts::LN_2 + ln_gamma(h))
}

/// `Ψₙ(r) = γₙ(rB₂ⁿ)`.
pub fn psi_n(r: f64, n: usize) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    if r == f64::INFINITY {
        return 1.0;
    }
    gamma_p(0.5 * n as f64, 0.5 * r * r)
}

/// `1 − Ψₙ(r)` evaluated without cancellation.
pub fn psi_n_complement(r: f64, n: usize) -> f64 {
    if r <= 0.0 {
        return 1.0;
    }
    if r == f64::INFINITY {
        return 0.0;
    }
    gamma_q(0.5 * n as f64, 0.5 * r * r)
}

/// `Ψₙ′(r) = cₙ r^{n−1} e^{−r²/2}`.
pub fn psi_n_prime(r: f64, n: usize) -> f64 {
    if r <= 0.0 {
        return if n == 1 { c_n(1) } else { 0.0 };
    }
    (ln_c_n(n) + (n as f64 - 1.0) * r.ln() - 0.5 * r * r).exp()
}

/// `∫_{rB}|x|² dγₙ = nΨₙ(r) − cₙ rⁿ e^{−r²/2}`.
pub fn ball_second_moment(r: f64, n: usize) -> f64 {
    if r == f64::INFINITY {
        return n as f64;
    }
    if r <= 0.0 {
        return 0.0;
    }
    // Equivalent to n·P(n/2+1, r²/2); that form avoids cancellation for small r.
    n as f64 * gamma_p(0.5 * n as f64 + 1.0, 0.5 * r * r)
}

/// Inverse of [`psi_n`] on `[0, 1)`; `psi_n_inv(1) = ∞`.
pub fn psi_n_inv(p: f64, n: usize) -> f64 {
    if p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    invert_profile(n, p, false)
}

/// Radius `r` with `1 − Ψₙ(r) = q`, accurate when `q` is tiny.
pub fn psi_n_complement_inv(q: f64, n: usize) -> f64 {
    if q >= 1.0 {
        return 0.0;
    }
    if q <= 0.0 {
        return f64::INFINITY;
    }
    invert_profile(n, q, true)
}

fn invert_profile(n: usize, target: f64, upper: bool) -> f64 {
    // Work with whichever tail is smaller so Newton steps stay well conditioned.
    let (use_upper, t) = if upper {
        if target > 0.5 {
            (false, 1.0 - target)
        } else {
            (true, target)
        }
    } else if target > 0.5 {
        (true, 1.0 - target)
    } else {
        (false, target)
    };
    let f = |r: f64| {
        if use_upper {
            psi_n_complement(r, n)
        } else {
            psi_n(r, n)
        }
    };
    // Bracket: f is increasing for the lower tail, decreasing for the upper tail.
    let mut lo = 0.0;
    let mut hi = (n as f64).sqrt() + 1.0;
    let below = |v: f64| if use_upper { v > t } else { v < t };
    while below(f(hi)) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e3 {
            break;
        }
    }
    let mut r = if use_upper {
        0.5 * (lo + hi)
    } else {
        // Small-ball asymptotics Ψₙ(r) ≈ cₙ rⁿ / n.
        let guess = (n as f64 * t / c_n(n)).powf(1.0 / n as f64);
        if guess > lo && guess < hi {
            guess
        } else {
            0.5 * (lo + hi)
        }
    };
    for _ in 0..200 {
        let v = f(r);
        if below(v) {
            lo = r;
        } else {
            hi = r;
        }
        let d = psi_n_prime(r, n);
        let resid = if use_upper { t - v } else { v - t };
        let mut next = if d > 0.0 { r - resid / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - r).abs() <= 1e-15 * r.max(1e-300) || hi - lo <= 1e-15 * hi;
        r = next;
        if done {
            break;
        }
    }
    r
}
