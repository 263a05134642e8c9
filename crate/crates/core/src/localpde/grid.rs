//! Planar lattice restricted to a body, and the weighted OU operator on it.

use crate::bodies::{Body, Direction};
use crate::error::{GbmError, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeClass {
    /// Lattice point of the body; carries an unknown.
    Interior,
    /// Outside the body but next to an interior node; carries Dirichlet data.
    Boundary,
    Exterior,
}

/// Lattice `h·(i, j)` with `|i| ≤ mx`, `|j| ≤ my`, classified against a body.
#[derive(Clone, Debug)]
pub struct MaskedGrid {
    pub h: f64,
    pub mx: usize,
    pub my: usize,
    pub mask: Vec<NodeClass>,
    /// `e^{−|x|²/2} h² / (2π)`.
    pub gauss_weight: Vec<f64>,
    /// Position of each interior node in the unknown vector.
    pub(crate) unknown: Vec<usize>,
    pub(crate) interior: Vec<usize>,
    /// Per interior node, arm lengths (in units of `h`) toward E, W, N, S: 1 for a
    /// lattice neighbour inside the body, the boundary crossing otherwise.
    pub theta: Vec<[f64; 4]>,
}

/// Smallest admissible arm length; crossings closer than this are clamped.
pub const MIN_THETA: f64 = 1e-3;

/// Unit steps matching [`MaskedGrid::neighbours`].
pub(crate) const STEPS: [(f64, f64); 4] = [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)];

pub(crate) const NO_UNKNOWN: usize = usize::MAX;

pub fn gaussian(x: f64, y: f64) -> f64 {
    (-0.5 * (x * x + y * y)).exp()
}

/// Fraction `t ∈ (0, 1]` with `(x, y) + t·h·step` on the boundary, by bisection.
fn crossing(body: &Body, x: f64, y: f64, step: (f64, f64), h: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let p = [x + mid * h * step.0, y + mid * h * step.1];
        if body.contains_unchecked(&p) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (0.5 * (lo + hi)).max(MIN_THETA)
}

/// Values of a field at interior nodes and at the ends of cut arms.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    /// Per node; entries outside the body hold the field at the node itself.
    pub values: Vec<f64>,
    /// Per interior node and arm; the lattice neighbour's value for uncut arms.
    pub arms: Vec<[f64; 4]>,
}

impl GridField {
    /// Samples a function at the nodes and at boundary crossings.
    pub fn sample(grid: &MaskedGrid, f: impl Fn(f64, f64) -> f64) -> GridField {
        let values: Vec<f64> = (0..grid.len())
            .map(|k| {
                let (x, y) = grid.position(k);
                f(x, y)
            })
            .collect();
        let arms = grid
            .interior
            .iter()
            .enumerate()
            .map(|(row, &k)| {
                let (x, y) = grid.position(k);
                let nb = grid.neighbours(k);
                let mut a = [0.0; 4];
                for s in 0..4 {
                    let t = grid.theta[row][s];
                    a[s] = if t == 1.0 && grid.mask[nb[s]] == NodeClass::Interior {
                        values[nb[s]]
                    } else {
                        f(x + t * grid.h * STEPS[s].0, y + t * grid.h * STEPS[s].1)
                    };
                }
                a
            })
            .collect();
        GridField { values, arms }
    }

    /// Pointwise sum, for fields on the same grid.
    pub fn add(&self, other: &GridField) -> GridField {
        GridField {
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
            arms: self
                .arms
                .iter()
                .zip(&other.arms)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]])
                .collect(),
        }
    }
}

impl MaskedGrid {
    /// Classifies the lattice of spacing `h` against a planar symmetric body.
    pub fn new(body: &Body, h: f64) -> Result<MaskedGrid> {
        crate::error::ensure_dim(2, body.dim())?;
        if !(h > 0.0) || !h.is_finite() {
            return Err(GbmError::invalid(format!("grid spacing {h} must be positive")));
        }
        let f = body.flags();
        if !f.origin_symmetric {
            return Err(GbmError::invalid("PDE domains must be origin-symmetric"));
        }
        let ex = body.support(&Direction::axis(2, 0))?;
        let ey = body.support(&Direction::axis(2, 1))?;
        if !ex.is_finite() || !ey.is_finite() {
            return Err(GbmError::invalid("PDE domains must be bounded"));
        }
        let mx = (ex / h).ceil() as usize + 2;
        let my = (ey / h).ceil() as usize + 2;
        if (2 * mx + 1) * (2 * my + 1) > 20_000_000 {
            return Err(GbmError::invalid(format!("grid spacing {h} gives too many nodes")));
        }
        let (w, ht) = (2 * mx + 1, 2 * my + 1);
        let mut inside = vec![false; w * ht];
        for j in 0..ht {
            for i in 0..w {
                let p = [(i as f64 - mx as f64) * h, (j as f64 - my as f64) * h];
                inside[i + w * j] = body.contains_unchecked(&p);
            }
        }
        // Nodes on the boundary itself can be decided differently at ±x by inexact
        // membership oracles; keeping only mirror pairs makes the mask symmetric.
        let total = w * ht;
        let raw = inside.clone();
        for k in 0..total {
            inside[k] = raw[k] && raw[total - 1 - k];
        }
        let mut mask = vec![NodeClass::Exterior; total];
        for j in 0..ht {
            for i in 0..w {
                let k = i + w * j;
                if inside[k] {
                    if i == 0 || j == 0 || i == w - 1 || j == ht - 1 {
                        return Err(GbmError::invalid("body touches the lattice frame"));
                    }
                    mask[k] = NodeClass::Interior;
                }
            }
        }
        for j in 1..ht - 1 {
            for i in 1..w - 1 {
                let k = i + w * j;
                if mask[k] == NodeClass::Exterior
                    && [k - 1, k + 1, k - w, k + w].iter().any(|&m| inside[m])
                {
                    mask[k] = NodeClass::Boundary;
                }
            }
        }
        let mut unknown = vec![NO_UNKNOWN; total];
        let mut interior = Vec::new();
        for k in 0..total {
            if mask[k] == NodeClass::Interior {
                unknown[k] = interior.len();
                interior.push(k);
            }
        }
        if interior.is_empty() {
            return Err(GbmError::invalid(format!("no lattice points of spacing {h} in the body")));
        }
        let mut gauss_weight = vec![0.0; total];
        for (k, gw) in gauss_weight.iter_mut().enumerate() {
            let (x, y) = Self::pos(h, mx, my, k);
            *gw = gaussian(x, y) * h * h / (2.0 * PI);
        }
        let mut theta = vec![[1.0f64; 4]; interior.len()];
        for (row, &k) in interior.iter().enumerate() {
            let (x, y) = Self::pos(h, mx, my, k);
            let nb = [k + 1, k - 1, k + w, k - w];
            for s in 0..4 {
                if !inside[nb[s]] {
                    theta[row][s] = crossing(body, x, y, STEPS[s], h);
                }
            }
        }
        Ok(MaskedGrid { h, mx, my, mask, gauss_weight, unknown, interior, theta })
    }

    fn pos(h: f64, mx: usize, my: usize, k: usize) -> (f64, f64) {
        let w = 2 * mx + 1;
        ((((k % w) as f64) - mx as f64) * h, (((k / w) as f64) - my as f64) * h)
    }

    pub fn dim(&self) -> usize {
        2
    }

    /// Row length of the node array.
    pub fn width(&self) -> usize {
        2 * self.mx + 1
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn position(&self, k: usize) -> (f64, f64) {
        Self::pos(self.h, self.mx, self.my, k)
    }

    /// Bounding box half-extents `(mx·h, my·h)`.
    pub fn extent(&self) -> (f64, f64) {
        (self.mx as f64 * self.h, self.my as f64 * self.h)
    }

    /// Node index of `−x`.
    pub fn mirror(&self, k: usize) -> usize {
        self.len() - 1 - k
    }

    pub fn interior_nodes(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn boundary_count(&self) -> usize {
        self.mask.iter().filter(|c| **c == NodeClass::Boundary).count()
    }

    /// Neighbours east, west, north, south.
    pub(crate) fn neighbours(&self, k: usize) -> [usize; 4] {
        let w = self.width();
        [k + 1, k - 1, k + w, k - w]
    }

    /// `e^{−|m|²/2}` at the midpoints toward the four neighbours.
    pub(crate) fn edge_weights(&self, k: usize) -> [f64; 4] {
        let (x, y) = self.position(k);
        let hh = 0.5 * self.h;
        [gaussian(x + hh, y), gaussian(x - hh, y), gaussian(x, y + hh), gaussian(x, y - hh)]
    }

    /// Edge weights at the midpoints of the (possibly cut) arms of interior row `row`.
    pub(crate) fn arm_weights(&self, row: usize) -> [f64; 4] {
        let (x, y) = self.position(self.interior[row]);
        let t = self.theta[row];
        let hh = 0.5 * self.h;
        let mut out = [0.0; 4];
        for s in 0..4 {
            out[s] = gaussian(x + t[s] * hh * STEPS[s].0, y + t[s] * hh * STEPS[s].1);
        }
        out
    }

    /// Number of interior nodes with at least one cut arm.
    pub fn cut_count(&self) -> usize {
        self.theta.iter().filter(|t| t.iter().any(|&v| v < 1.0)).count()
    }

    pub fn is_known(&self, k: usize) -> bool {
        self.mask[k] != NodeClass::Exterior
    }

    /// Normalised `γ_K` quadrature weights over interior nodes, on dual cells.
    pub fn measure_weights(&self) -> Vec<f64> {
        let raw: Vec<f64> = (0..self.interior.len())
            .map(|row| self.gauss_weight[self.interior[row]] * self.cell_fraction(row))
            .collect();
        let total: f64 = raw.iter().sum();
        raw.iter().map(|w| w / total).collect()
    }

    /// Area of the dual cell of interior row `row` in units of `h²`: along each
    /// axis a cut arm contributes its whole length, a full arm half of it.
    pub fn cell_fraction(&self, row: usize) -> f64 {
        let k = self.interior[row];
        let nb = self.neighbours(k);
        let t = self.theta[row];
        let len = |s: usize| if self.unknown[nb[s]] == NO_UNKNOWN { t[s] } else { 0.5 };
        (len(0) + len(1)) * (len(2) + len(3))
    }

    /// Dual-cell estimate of `γ₂(K)`.
    pub fn lattice_measure(&self) -> f64 {
        (0..self.interior.len())
            .map(|row| self.gauss_weight[self.interior[row]] * self.cell_fraction(row))
            .sum()
    }
}

/// `𝓛u = Δu − x·∇u` in divergence form, `(1/w)∇·(w∇u)` with `w = e^{−|x|²/2}`,
/// evaluated at interior nodes. Other entries of the result are zero.
pub fn ou_apply(u: &[f64], grid: &MaskedGrid) -> Result<Vec<f64>> {
    if u.len() != grid.len() {
        return Err(GbmError::DimensionMismatch { expected: grid.len(), got: u.len() });
    }
    let mut out = vec![0.0; grid.len()];
    let h2 = grid.h * grid.h;
    for &k in &grid.interior {
        let (x, y) = grid.position(k);
        let wc = gaussian(x, y);
        let nb = grid.neighbours(k);
        let we = grid.edge_weights(k);
        let mut acc = 0.0;
        for s in 0..4 {
            acc += we[s] * (u[nb[s]] - u[k]);
        }
        out[k] = acc / (wc * h2);
    }
    Ok(out)
}

/// The cut-cell operator used by the solver: as [`ou_apply`], but a cut arm of
/// length `θh` ending at value `g` contributes `w (g − u)/θ`, i.e. the ghost value
/// linearly extrapolated through the boundary crossing.
pub fn ou_apply_field(field: &GridField, grid: &MaskedGrid) -> Result<Vec<f64>> {
    if field.values.len() != grid.len() || field.arms.len() != grid.interior_count() {
        return Err(GbmError::DimensionMismatch { expected: grid.len(), got: field.values.len() });
    }
    let mut out = vec![0.0; grid.len()];
    let h2 = grid.h * grid.h;
    for (row, &k) in grid.interior.iter().enumerate() {
        let (x, y) = grid.position(k);
        let wc = gaussian(x, y);
        let we = grid.arm_weights(row);
        let u = field.values[k];
        let mut acc = 0.0;
        for s in 0..4 {
            acc += we[s] * (field.arms[row][s] - u) / grid.theta[row][s];
        }
        out[k] = acc / (wc * h2);
    }
    Ok(out)
}
