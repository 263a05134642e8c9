//! The functional `∫‖∇²u‖²_HS + |∇u|² dγ_K` on grid solutions, with the
//! proof-side decomposition and the Brascamp–Lieb comparison.

use super::grid::{GridField, MaskedGrid, NodeClass, NO_UNKNOWN};
use super::solve::{solve_dirichlet, BoundaryData, PdeSolution};
use crate::bodies::Body;
use crate::error::{GbmError, Result};
use serde::{Deserialize, Serialize};

/// Finite-difference derivatives at one interior node.
#[derive(Clone, Copy, Debug, Default)]
pub struct NodeDerivatives {
    pub gx: f64,
    pub gy: f64,
    pub uxx: f64,
    pub uxy: f64,
    pub uyy: f64,
    /// Some 8-neighbour is not interior, so the stencil is one-sided or uses boundary data.
    pub flagged: bool,
}

/// Derivatives at every interior node, in interior order.
///
/// Gradients and pure second derivatives use three-point formulas on the actual
/// arm lengths; the mixed derivative averages differences of the two gradient
/// components, one-sided where a lattice neighbour is outside the body.
pub fn field_derivatives(grid: &MaskedGrid, field: &GridField) -> Vec<NodeDerivatives> {
    let h = grid.h;
    let u = &field.values;
    let rows = grid.interior_nodes();
    let mut out: Vec<NodeDerivatives> = Vec::with_capacity(rows.len());
    for (row, &k) in rows.iter().enumerate() {
        let t = grid.theta[row];
        let a = field.arms[row];
        let c = u[k];
        let d1 = |le: f64, lw: f64, fe: f64, fw: f64| {
            (lw * lw * (fe - c) - le * le * (fw - c)) / (le * lw * (le + lw))
        };
        let d2 = |le: f64, lw: f64, fe: f64, fw: f64| 2.0 * ((fe - c) / le + (fw - c) / lw) / (le + lw);
        let (le, lw, ln, ls) = (t[0] * h, t[1] * h, t[2] * h, t[3] * h);
        let w = grid.width();
        let flagged = [k + 1, k - 1, k + w, k - w, k + 1 + w, k - 1 + w, k + 1 - w, k - 1 - w]
            .iter()
            .any(|&m| grid.mask[m] != NodeClass::Interior);
        out.push(NodeDerivatives {
            gx: d1(le, lw, a[0], a[1]),
            gy: d1(ln, ls, a[2], a[3]),
            uxx: d2(le, lw, a[0], a[1]),
            uyy: d2(ln, ls, a[2], a[3]),
            uxy: 0.0,
            flagged,
        });
    }
    let at = |m: usize| grid.unknown[m];
    for (row, &k) in rows.iter().enumerate() {
        let nb = grid.neighbours(k);
        let diff = |plus: usize, minus: usize, comp: fn(&NodeDerivatives) -> f64| -> f64 {
            let (p, m) = (at(plus), at(minus));
            let here = comp(&out[row]);
            match (p != NO_UNKNOWN, m != NO_UNKNOWN) {
                (true, true) => (comp(&out[p]) - comp(&out[m])) / (2.0 * h),
                (true, false) => (comp(&out[p]) - here) / h,
                (false, true) => (here - comp(&out[m])) / h,
                (false, false) => f64::NAN,
            }
        };
        let dy_gx = diff(nb[2], nb[3], |d| d.gx);
        let dx_gy = diff(nb[0], nb[1], |d| d.gy);
        let v = match (dy_gx.is_nan(), dx_gy.is_nan()) {
            (false, false) => 0.5 * (dy_gx + dx_gy),
            (false, true) => dy_gx,
            (true, false) => dx_gy,
            (true, true) => 0.0,
        };
        out[row].uxy = v;
    }
    for (row, &k) in rows.iter().enumerate() {
        if out[row].flagged {
            if let Some(d) = quadratic_fit(grid, field, k) {
                out[row] = NodeDerivatives { flagged: true, ..d };
            }
        }
    }
    out
}

/// Least-squares quadratic through the known values within two lattice steps
/// (interior nodes and the boundary crossings of their arms).
fn quadratic_fit(grid: &MaskedGrid, field: &GridField, k: usize) -> Option<NodeDerivatives> {
    let h = grid.h;
    let w = grid.width() as isize;
    let mut ata = [0.0f64; 36];
    let mut atb = [0.0f64; 6];
    let mut count = 0;
    let mut push = |x: f64, y: f64, v: f64| {
        let basis = [1.0, x, y, x * x, x * y, y * y];
        for i in 0..6 {
            atb[i] += basis[i] * v;
            for j in 0..6 {
                ata[i * 6 + j] += basis[i] * basis[j];
            }
        }
        count += 1;
    };
    for dj in -2isize..=2 {
        for di in -2isize..=2 {
            let m = (k as isize + di + dj * w) as usize;
            let row = grid.unknown[m];
            if row == NO_UNKNOWN {
                continue;
            }
            let (x, y) = (di as f64, dj as f64);
            push(x, y, field.values[m]);
            for s in 0..4 {
                let t = grid.theta[row][s];
                if grid.unknown[grid.neighbours(m)[s]] == NO_UNKNOWN {
                    let (sx, sy) = super::grid::STEPS[s];
                    let (px, py) = (x + t * sx, y + t * sy);
                    if px.abs() <= 2.0 && py.abs() <= 2.0 {
                        push(px, py, field.arms[row][s]);
                    }
                }
            }
        }
    }
    if count < 10 {
        return None;
    }
    crate::numeric::solve_dense(&mut ata, &mut atb, 6, 1e-10)?;
    let c = atb;
    Some(NodeDerivatives {
        gx: c[1] / h,
        gy: c[2] / h,
        uxx: 2.0 * c[3] / (h * h),
        uxy: c[4] / (h * h),
        uyy: 2.0 * c[5] / (h * h),
        flagged: true,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// `∫‖∇̂²u‖²_HS dγ_K`.
    pub traceless_term: f64,
    /// `∫(Δu)²/n dγ_K`.
    pub laplacian_term: f64,
    /// `(2/n)∫x·∇u dγ_K`.
    pub drift_term: f64,
    /// `1/n`.
    pub constant: f64,
    /// `∫‖∇²(u − r)‖²_HS dγ_K` with `r = |x|²/(2n)`.
    pub shifted_hessian_term: f64,
    /// `max |‖∇²u‖² − ‖∇̂²u‖² − (Δu)²/n|` over nodes.
    pub trace_identity_gap: f64,
    /// `hessian_term − (shifted_hessian_term + drift_term + constant)`; zero when `𝓛u = 1` holds pointwise.
    pub break_hessian_gap: f64,
}

/// Both sides of the Brascamp–Lieb step applied to `∇(u − r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrascampLiebDiagnostic {
    /// `∫‖∇²(u − r)‖²_HS dγ_K`.
    pub full_lhs: f64,
    /// `∫‖∇̂²u‖²_HS dγ_K`.
    pub traceless_lhs: f64,
    /// `Σᵢ Var_{γ_K}(∂ᵢ(u − r))`.
    pub rhs: f64,
    /// `∫ 2|∇u|² + |x|²/n² + 1/n dγ_K`, the bound the chain ends at.
    pub chain_lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalReport {
    pub hessian_term: f64,
    pub gradient_term: f64,
    pub total: f64,
    pub decomposition: Decomposition,
    pub brascamp_lieb: BrascampLiebDiagnostic,
    /// Functional over unflagged nodes only, renormalised on them.
    pub interior_only_total: f64,
    pub flagged_nodes: usize,
    /// `γ_K`-mass of the flagged nodes.
    pub flagged_weight: f64,
    pub interior_nodes: usize,
    pub h: f64,
    /// Filled in from a refinement ladder when one was run.
    pub discretization_error: Option<f64>,
}

pub fn kl_functional(sol: &PdeSolution) -> FunctionalReport {
    let g = &sol.grid;
    let n = 2.0;
    let wts = g.measure_weights();
    let ders = field_derivatives(g, &sol.field());
    let mut acc = Acc::default();
    let mut trace_gap = 0.0f64;
    for (idx, &k) in g.interior_nodes().iter().enumerate() {
        let w = wts[idx];
        let d = ders[idx];
        let (x, y) = g.position(k);
        let hs = d.uxx * d.uxx + 2.0 * d.uxy * d.uxy + d.uyy * d.uyy;
        let lap = d.uxx + d.uyy;
        let tl = {
            let a = d.uxx - lap / n;
            let c = d.uyy - lap / n;
            a * a + 2.0 * d.uxy * d.uxy + c * c
        };
        trace_gap = trace_gap.max((hs - tl - lap * lap / n).abs());
        let shifted = {
            let a = d.uxx - 1.0 / n;
            let c = d.uyy - 1.0 / n;
            a * a + 2.0 * d.uxy * d.uxy + c * c
        };
        let grad2 = d.gx * d.gx + d.gy * d.gy;
        let (px, py) = (d.gx - x / n, d.gy - y / n);
        acc.hess += w * hs;
        acc.grad += w * grad2;
        acc.tl += w * tl;
        acc.lap += w * lap * lap / n;
        acc.drift += w * (2.0 / n) * (x * d.gx + y * d.gy);
        acc.shifted += w * shifted;
        acc.px += w * px;
        acc.py += w * py;
        acc.px2 += w * px * px;
        acc.py2 += w * py * py;
        acc.chain += w * (2.0 * grad2 + (x * x + y * y) / (n * n) + 1.0 / n);
        if d.flagged {
            acc.flagged += 1;
            acc.flagged_w += w;
        } else {
            acc.inner_w += w;
            acc.inner_total += w * (hs + grad2);
        }
    }
    let bl_rhs = (acc.px2 - acc.px * acc.px) + (acc.py2 - acc.py * acc.py);
    let constant = 1.0 / n;
    FunctionalReport {
        hessian_term: acc.hess,
        gradient_term: acc.grad,
        total: acc.hess + acc.grad,
        decomposition: Decomposition {
            traceless_term: acc.tl,
            laplacian_term: acc.lap,
            drift_term: acc.drift,
            constant,
            shifted_hessian_term: acc.shifted,
            trace_identity_gap: trace_gap,
            break_hessian_gap: acc.hess - (acc.shifted + acc.drift + constant),
        },
        brascamp_lieb: BrascampLiebDiagnostic {
            full_lhs: acc.shifted,
            traceless_lhs: acc.tl,
            rhs: bl_rhs,
            chain_lower_bound: acc.chain,
        },
        interior_only_total: if acc.inner_w > 0.0 { acc.inner_total / acc.inner_w } else { f64::NAN },
        flagged_nodes: acc.flagged,
        flagged_weight: acc.flagged_w,
        interior_nodes: g.interior_count(),
        h: g.h,
        discretization_error: None,
    }
}

#[derive(Default)]
struct Acc {
    hess: f64,
    grad: f64,
    tl: f64,
    lap: f64,
    drift: f64,
    shifted: f64,
    px: f64,
    py: f64,
    px2: f64,
    py2: f64,
    chain: f64,
    flagged: usize,
    flagged_w: f64,
    inner_w: f64,
    inner_total: f64,
}

/// `𝒢(u) = ∫ (1/n)(1 + x·∇u)² + |∇u|² dγ_K` by grid quadrature with centred gradients.
pub fn g_functional(grid: &MaskedGrid, u: &GridField) -> Result<f64> {
    if u.values.len() != grid.len() || u.arms.len() != grid.interior_count() {
        return Err(GbmError::DimensionMismatch { expected: grid.len(), got: u.values.len() });
    }
    let n = 2.0;
    let wts = grid.measure_weights();
    let ders = field_derivatives(grid, u);
    let mut total = 0.0;
    for (idx, &k) in grid.interior_nodes().iter().enumerate() {
        let d = ders[idx];
        let (x, y) = grid.position(k);
        let drift = 1.0 + x * d.gx + y * d.gy;
        total += wts[idx] * (drift * drift / n + d.gx * d.gx + d.gy * d.gy);
    }
    Ok(total)
}

/// One level of a refinement study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderLevel {
    pub h: f64,
    pub total: f64,
    pub interior_only_total: f64,
    pub iterations: usize,
    pub asymmetry: f64,
    pub bl_full_lhs: f64,
    pub bl_traceless_lhs: f64,
    pub bl_rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub boundary: String,
    pub levels: Vec<LadderLevel>,
    /// `τ_i = |T(h_i) − T(h_{i+1})|`, the first-order error estimate of level `i + 1`.
    pub tau: Vec<f64>,
    /// `τ_{i+1} / τ_i`; near ½ for a first-order scheme.
    pub tau_ratio: Vec<f64>,
    /// First-order Richardson value `2T(h/2) − T(h)` from the two finest levels.
    pub extrapolated: Option<f64>,
}

/// Solves `𝓛u = 1` at each spacing (coarse to fine) and records the functional.
pub fn convergence_ladder(body: &Body, boundary: BoundaryData, hs: &[f64]) -> Result<(Ladder, FunctionalReport)> {
    if hs.is_empty() {
        return Err(GbmError::invalid("empty refinement ladder"));
    }
    let mut levels = Vec::new();
    let mut last = None;
    for &h in hs {
        let sol = solve_dirichlet(body, |_, _| 1.0, boundary, h)?;
        let rep = kl_functional(&sol);
        levels.push(LadderLevel {
            h,
            total: rep.total,
            interior_only_total: rep.interior_only_total,
            iterations: sol.iterations,
            asymmetry: sol.asymmetry,
            bl_full_lhs: rep.brascamp_lieb.full_lhs,
            bl_traceless_lhs: rep.brascamp_lieb.traceless_lhs,
            bl_rhs: rep.brascamp_lieb.rhs,
        });
        last = Some(rep);
    }
    let tau: Vec<f64> = levels.windows(2).map(|w| (w[0].total - w[1].total).abs()).collect();
    let tau_ratio = tau.windows(2).map(|t| t[1] / t[0]).collect();
    let extrapolated = if levels.len() >= 2 {
        let m = levels.len();
        Some(2.0 * levels[m - 1].total - levels[m - 2].total)
    } else {
        None
    };
    let mut rep = last.expect("ladder has at least one level");
    rep.discretization_error = tau.last().copied();
    Ok((Ladder { boundary: boundary.describe(), levels, tau, tau_ratio, extrapolated }, rep))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_identity_is_algebraic() {
        let b = Body::cube(2, 0.8).unwrap();
        let s = solve_dirichlet(&b, |_, _| 1.0, BoundaryData::Quadratic { a: 0.6, b: 0.25, c: -0.4 }, 0.04)
            .unwrap();
        let r = kl_functional(&s);
        assert!(r.decomposition.trace_identity_gap < 1e-12 * (1.0 + r.hessian_term));
        let d = &r.decomposition;
        assert!((r.hessian_term - d.traceless_term - d.laplacian_term).abs() < 1e-10);
        assert!((r.total - r.hessian_term - r.gradient_term).abs() < 1e-14 * r.total);
    }

    #[test]
    fn quadratic_field_has_exact_derivatives() {
        let b = Body::ball(2, 1.0).unwrap();
        let g = MaskedGrid::new(&b, 0.05).unwrap();
        let f = GridField::sample(&g, |x, y| 0.3 * x * x + 0.7 * x * y - 0.2 * y * y + x);
        for (row, d) in field_derivatives(&g, &f).iter().enumerate() {
            let (x, y) = g.position(g.interior_nodes()[row]);
            assert!((d.uxx - 0.6).abs() < 1e-7 && (d.uyy + 0.4).abs() < 1e-7, "{d:?}");
            assert!((d.uxy - 0.7).abs() < 1e-7, "{d:?}");
            assert!((d.gx - (0.6 * x + 0.7 * y + 1.0)).abs() < 1e-9);
        }
    }
}
