//! Membership in a convex body known only through a support-point oracle.
//!
//! Wolfe's minimum-norm-point method on `Y = M − x`: `x ∈ M` iff the
//! minimum-norm point of `Y` is the origin. A separating direction ends the
//! search early, which is the common case for points outside `M`.

use super::MAX_DIM;

const MAX_CORRAL: usize = MAX_DIM + 1;

#[inline]
fn dotn(a: &[f64; MAX_DIM], b: &[f64; MAX_DIM], n: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..n {
        s += a[i] * b[i];
    }
    s
}

/// Decides `x ∈ M` where `support_point(d, out)` writes a maximiser of `⟨·, d⟩` over `M`.
/// `scale` bounds `|y|` for `y ∈ M − x`; tolerances are relative to it.
pub fn contains_by_min_norm(
    x: &[f64],
    scale: f64,
    mut support_point: impl FnMut(&[f64], &mut [f64]),
) -> bool {
    let n = x.len();
    debug_assert!(n <= MAX_DIM);
    let tol = 1e-12 * scale;
    let mut pts = [[0.0f64; MAX_DIM]; MAX_CORRAL];
    let mut w = [0.0f64; MAX_CORRAL];
    let mut dir = [0.0f64; MAX_DIM];
    let mut s = [0.0f64; MAX_DIM];

    // Start from the support point in direction x (any point of M would do).
    let xn: f64 = x.iter().map(|a| a * a).sum::<f64>();
    if xn > 0.0 {
        dir[..n].copy_from_slice(x);
    } else {
        dir[0] = 1.0;
    }
    support_point(&dir[..n], &mut s[..n]);
    for i in 0..n {
        pts[0][i] = s[i] - x[i];
    }
    w[0] = 1.0;
    let mut k = 1;
    let mut p = pts[0];

    for _ in 0..(60 * MAX_DIM) {
        let pp = dotn(&p, &p, n);
        if pp <= tol * tol {
            return true;
        }
        for i in 0..n {
            dir[i] = -p[i];
        }
        support_point(&dir[..n], &mut s[..n]);
        let mut q = [0.0f64; MAX_DIM];
        for i in 0..n {
            q[i] = s[i] - x[i];
        }
        let pq = dotn(&p, &q, n);
        let pnorm = pp.sqrt();
        if pq > tol * pnorm {
            // min over Y of ⟨p, y⟩ is positive: a separating hyperplane.
            return false;
        }
        if pp - pq <= 1e-13 * pp {
            // No descent possible; p is the minimum-norm point and |p| ≲ tol.
            return true;
        }
        if k == MAX_CORRAL {
            return pnorm <= 1e-9 * scale;
        }
        pts[k] = q;
        w[k] = 0.0;
        k += 1;

        // Minor cycles: move to the affine minimiser, clipping back into the simplex.
        loop {
            let mut alpha = [0.0f64; MAX_CORRAL];
            if !affine_min_norm(&pts, k, n, scale, &mut alpha) {
                // q is affinely dependent on the corral; no further progress.
                return dotn(&p, &p, n).sqrt() <= 1e-9 * scale;
            }
            if alpha[..k].iter().all(|&a| a > 1e-14) {
                w[..k].copy_from_slice(&alpha[..k]);
                break;
            }
            let mut theta = 1.0f64;
            for i in 0..k {
                if alpha[i] <= 1e-14 {
                    let denom = w[i] - alpha[i];
                    if denom > 0.0 {
                        theta = theta.min(w[i] / denom);
                    }
                }
            }
            for i in 0..k {
                w[i] = theta * alpha[i] + (1.0 - theta) * w[i];
            }
            // Drop vanishing weights, compacting the corral.
            let mut j = 0;
            for i in 0..k {
                if w[i] > 1e-14 {
                    pts[j] = pts[i];
                    w[j] = w[i];
                    j += 1;
                }
            }
            if j == k {
                // Guard against stalling on round-off: drop the smallest weight.
                let (imin, _) = w[..k]
                    .iter()
                    .enumerate()
                    .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
                for i in imin..k - 1 {
                    pts[i] = pts[i + 1];
                    w[i] = w[i + 1];
                }
                j = k - 1;
            }
            k = j;
            let total: f64 = w[..k].iter().sum();
            for v in w[..k].iter_mut() {
                *v /= total;
            }
            if k == 1 {
                break;
            }
        }
        p = [0.0; MAX_DIM];
        for j in 0..k {
            for i in 0..n {
                p[i] += w[j] * pts[j][i];
            }
        }
    }
    dotn(&p, &p, n).sqrt() <= 1e-9 * scale
}

/// Barycentric coordinates of the minimum-norm point of the affine hull of `pts[..k]`.
fn affine_min_norm(
    pts: &[[f64; MAX_DIM]; MAX_CORRAL],
    k: usize,
    n: usize,
    scale: f64,
    alpha: &mut [f64; MAX_CORRAL],
) -> bool {
    if k == 1 {
        alpha[0] = 1.0;
        return true;
    }
    // Minimise |y0 + Σ βⱼ (yⱼ − y0)|² over β: normal equations (DᵀD) β = −Dᵀ y0.
    let m = k - 1;
    let mut a = [0.0f64; MAX_DIM * MAX_DIM];
    let mut b = [0.0f64; MAX_DIM];
    let mut d = [[0.0f64; MAX_DIM]; MAX_DIM];
    for j in 0..m {
        for i in 0..n {
            d[j][i] = pts[j + 1][i] - pts[0][i];
        }
    }
    for r in 0..m {
        for c in r..m {
            let v = dotn(&d[r], &d[c], n);
            a[r * m + c] = v;
            a[c * m + r] = v;
        }
        b[r] = -dotn(&d[r], &pts[0], n);
    }
    if !cholesky_solve(&mut a[..m * m], &mut b[..m], m, 1e-24 * scale * scale) {
        return false;
    }
    let mut sum = 0.0;
    for j in 0..m {
        alpha[j + 1] = b[j];
        sum += b[j];
    }
    alpha[0] = 1.0 - sum;
    true
}

fn cholesky_solve(a: &mut [f64], b: &mut [f64], m: usize, tol: f64) -> bool {
    for j in 0..m {
        let mut diag = a[j * m + j];
        for k in 0..j {
            diag -= a[j * m + k] * a[j * m + k];
        }
        // Relative pivot test against the original diagonal.
        if diag <= tol.max(1e-13 * a[j * m + j]) {
            return false;
        }
        let l = diag.sqrt();
        a[j * m + j] = l;
        for i in j + 1..m {
            let mut v = a[i * m + j];
            for k in 0..j {
                v -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = v / l;
        }
    }
    for i in 0..m {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i * m + k] * b[k];
        }
        b[i] = v / a[i * m + i];
    }
    for i in (0..m).rev() {
        let mut v = b[i];
        for k in i + 1..m {
            v -= a[k * m + i] * b[k];
        }
        b[i] = v / a[i * m + i];
    }
    true
}
