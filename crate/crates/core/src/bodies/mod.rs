//! Symmetric convex and star-shaped bodies in ℝⁿ (n ≤ 6).
//!
//! A [`Body`] answers three oracles: the support function `h(θ)`, membership,
//! and the radial function `ρ(θ)`. Bodies are immutable and cheap to clone.
//!
//! Membership of Minkowski combinations is decided exactly (up to round-off)
//! by a minimum-norm-point search over the operands' support points. Geometric
//! means, and combinations involving them, have no support-point oracle; for
//! those membership is tested against the defining halfspaces on a direction
//! net followed by local refinement, which can only over-include points.

mod doc;
mod minnorm;
pub mod net;
mod polytope;

pub use doc::BodyDoc;
pub use net::{shared_net, DirectionNet, NetResolution};

use crate::error::{ensure_dim, GbmError, Result};
use crate::numeric::{dot, norm};
use std::fmt;
use std::sync::{Arc, OnceLock};

pub const MAX_DIM: usize = 6;

/// A unit vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Accepts `components` only if `| |θ| − 1 | ≤ 1e−12`.
    pub fn new(components: Vec<f64>) -> Result<Self> {
        let nrm = norm(&components);
        if (nrm - 1.0).abs() > 1e-12 {
            return Err(GbmError::invalid(format!("direction has norm {nrm}, expected 1")));
        }
        Ok(Direction(components))
    }

    pub fn normalized(v: &[f64]) -> Result<Self> {
        let nrm = norm(v);
        if !(nrm > 0.0) || !nrm.is_finite() {
            return Err(GbmError::invalid("cannot normalise a zero or non-finite vector"));
        }
        Ok(Direction(v.iter().map(|a| a / nrm).collect()))
    }

    pub fn axis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Direction(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn neg(&self) -> Self {
        Direction(self.0.iter().map(|a| -a).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Flags {
    pub origin_symmetric: bool,
    pub convex: bool,
    pub star_shaped: bool,
    /// Membership is decided on a direction net and may over-include points.
    pub approximate: bool,
}

#[derive(Clone, Debug)]
pub enum BodyKind {
    Ball { radius: f64 },
    Box { half_widths: Vec<f64> },
    /// Axis-aligned.
    Ellipsoid { semi_axes: Vec<f64> },
    /// `conv(±V)`; `facets` holds normals `a` with the body `{a·x ≤ 1}`.
    SymPolytope { vertices: Vec<Vec<f64>>, facets: Vec<Vec<f64>> },
    /// `{|x_axis| ≤ half_width, |x′| ≤ cap_radius}`; no cap means an infinite slab.
    Slab { axis: usize, half_width: f64, cap_radius: Option<f64> },
    /// One member of a parallel halfspace pair: `{⟨x, normal⟩ ≤ offset}`.
    Halfspace { normal: Vec<f64>, offset: f64 },
    MinkowskiCombo { lambda: f64, k: Body, l: Body },
    /// Intersection of `{⟨x,θ⟩ ≤ h_K(θ)^λ h_L(θ)^{1−λ}}` over all θ.
    GeometricMean { lambda: f64, k: Body, l: Body },
    Dilate { t: f64, body: Body },
    /// Finite union of star-shaped bodies.
    Union { parts: Vec<Body> },
}

impl BodyKind {
    pub fn name(&self) -> &'static str {
        match self {
            BodyKind::Ball { .. } => "ball",
            BodyKind::Box { .. } => "box",
            BodyKind::Ellipsoid { .. } => "ellipsoid",
            BodyKind::SymPolytope { .. } => "sym-polytope",
            BodyKind::Slab { .. } => "slab",
            BodyKind::Halfspace { .. } => "halfspace-pair",
            BodyKind::MinkowskiCombo { .. } => "minkowski-combo",
            BodyKind::GeometricMean { .. } => "geometric-mean",
            BodyKind::Dilate { .. } => "dilate",
            BodyKind::Union { .. } => "union",
        }
    }
}

struct GaugeNet {
    net: Arc<DirectionNet>,
    values: Vec<f64>,
}

struct Inner {
    dim: usize,
    kind: BodyKind,
    flags: Flags,
    /// The ball of this radius is contained in the body (0 when unknown).
    r_in: f64,
    /// The body is contained in the ball of this radius (may be ∞).
    r_out: f64,
    /// Lipschitz constant of θ ↦ h(θ) on the sphere.
    lipschitz: f64,
    /// Equivalent body with an exact closed form, when one was recognised.
    reduced: Option<Body>,
    has_support_points: bool,
    canonical: String,
    gauge: OnceLock<GaugeNet>,
}

#[derive(Clone)]
pub struct Body(Arc<Inner>);

impl fmt::Debug for Body {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Body({})", self.0.canonical)
    }
}

impl PartialEq for Body {
    fn eq(&self, other: &Self) -> bool {
        self.0.canonical == other.0.canonical
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 || dim > MAX_DIM {
        return Err(GbmError::invalid(format!("dimension {dim} outside 1..={MAX_DIM}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(GbmError::Degenerate(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(GbmError::invalid(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    Ok(())
}

impl Body {
    fn build(
        dim: usize,
        kind: BodyKind,
        flags: Flags,
        r_in: f64,
        r_out: f64,
        lipschitz: f64,
        reduced: Option<Body>,
    ) -> Body {
        let has_support_points = match &kind {
            BodyKind::Ball { .. }
            | BodyKind::Box { .. }
            | BodyKind::Ellipsoid { .. }
            | BodyKind::SymPolytope { .. } => true,
            BodyKind::Slab { cap_radius, .. } => cap_radius.is_some(),
            BodyKind::Halfspace { .. } | BodyKind::GeometricMean { .. } | BodyKind::Union { .. } => {
                false
            }
            BodyKind::MinkowskiCombo { k, l, .. } => {
                k.0.has_support_points && l.0.has_support_points
            }
            BodyKind::Dilate { body, .. } => body.0.has_support_points,
        };
        let canonical = doc::to_doc(dim, &kind).to_canonical_json();
        Body(Arc::new(Inner {
            dim,
            kind,
            flags,
            r_in,
            r_out,
            lipschitz,
            reduced,
            has_support_points,
            canonical,
            gauge: OnceLock::new(),
        }))
    }

    fn exact_flags(symmetric: bool) -> Flags {
        Flags { origin_symmetric: symmetric, convex: true, star_shaped: true, approximate: false }
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Body> {
        check_dim(dim)?;
        if !(radius > 0.0) {
            return Err(GbmError::Degenerate(format!("ball radius must be positive, got {radius}")));
        }
        let lip = if radius.is_finite() { radius } else { f64::INFINITY };
        Ok(Body::build(
            dim,
            BodyKind::Ball { radius },
            Body::exact_flags(true),
            radius,
            radius,
            lip,
            None,
        ))
    }

    /// Coordinate box `Π[−aᵢ, aᵢ]`.
    pub fn cuboid(half_widths: Vec<f64>) -> Result<Body> {
        let dim = half_widths.len();
        check_dim(dim)?;
        for &a in &half_widths {
            check_positive("box half-width", a)?;
        }
        let r_in = half_widths.iter().cloned().fold(f64::INFINITY, f64::min);
        let r_out = norm(&half_widths);
        Ok(Body::build(
            dim,
            BodyKind::Box { half_widths },
            Body::exact_flags(true),
            r_in,
            r_out,
            r_out,
            None,
        ))
    }

    pub fn cube(dim: usize, half_width: f64) -> Result<Body> {
        Body::cuboid(vec![half_width; dim])
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Body> {
        let dim = semi_axes.len();
        check_dim(dim)?;
        for &a in &semi_axes {
            check_positive("ellipsoid semi-axis", a)?;
        }
        let r_in = semi_axes.iter().cloned().fold(f64::INFINITY, f64::min);
        let r_out = semi_axes.iter().cloned().fold(0.0, f64::max);
        Ok(Body::build(
            dim,
            BodyKind::Ellipsoid { semi_axes },
            Body::exact_flags(true),
            r_in,
            r_out,
            r_out,
            None,
        ))
    }

    /// `conv(±V)`. Must be full-dimensional.
    pub fn sym_polytope(vertices: Vec<Vec<f64>>) -> Result<Body> {
        let dim = vertices.first().map(|v| v.len()).unwrap_or(0);
        check_dim(dim)?;
        for v in &vertices {
            ensure_dim(dim, v.len())?;
            if v.iter().any(|a| !a.is_finite()) {
                return Err(GbmError::invalid("non-finite polytope vertex"));
            }
        }
        let facets = polytope::symmetric_facets(dim, &vertices)?;
        let r_in = facets.iter().map(|a| 1.0 / norm(a)).fold(f64::INFINITY, f64::min);
        let r_out = vertices.iter().map(|v| norm(v)).fold(0.0, f64::max);
        Ok(Body::build(
            dim,
            BodyKind::SymPolytope { vertices, facets },
            Body::exact_flags(true),
            r_in,
            r_out,
            r_out,
            None,
        ))
    }

    /// Cross-polytope `conv(±r eᵢ)`.
    pub fn cross_polytope(dim: usize, r: f64) -> Result<Body> {
        let vertices = (0..dim)
            .map(|i| {
                let mut v = vec![0.0; dim];
                v[i] = r;
                v
            })
            .collect();
        Body::sym_polytope(vertices)
    }

    pub fn slab(dim: usize, axis: usize, half_width: f64, cap_radius: Option<f64>) -> Result<Body> {
        check_dim(dim)?;
        if axis >= dim {
            return Err(GbmError::invalid(format!("slab axis {axis} out of range for dim {dim}")));
        }
        check_positive("slab half-width", half_width)?;
        if let Some(c) = cap_radius {
            check_positive("slab cap radius", c)?;
        }
        let (r_in, r_out) = match cap_radius {
            Some(c) if dim > 1 => (half_width.min(c), (half_width * half_width + c * c).sqrt()),
            _ if dim == 1 => (half_width, half_width),
            _ => (half_width, f64::INFINITY),
        };
        Ok(Body::build(
            dim,
            BodyKind::Slab { axis, half_width, cap_radius },
            Body::exact_flags(true),
            r_in,
            r_out,
            r_out,
            None,
        ))
    }

    /// The truncated slab `{|x₁| ≤ ε, |x′|² ≤ 2n}`.
    pub fn truncated_slab(dim: usize, eps: f64) -> Result<Body> {
        Body::slab(dim, 0, eps, Some((2.0 * dim as f64).sqrt()))
    }

    /// `{⟨x, ν⟩ ≤ offset}` with `ν` normalised. Not origin-symmetric.
    pub fn halfspace(normal: Vec<f64>, offset: f64) -> Result<Body> {
        let dim = normal.len();
        check_dim(dim)?;
        if !offset.is_finite() {
            return Err(GbmError::invalid("halfspace offset must be finite"));
        }
        let nrm = norm(&normal);
        if !(nrm > 0.0) {
            return Err(GbmError::Degenerate("halfspace normal is zero".into()));
        }
        let (normal, offset) = if (nrm - 1.0).abs() <= 1e-15 {
            (normal, offset)
        } else {
            (normal.iter().map(|a| a / nrm).collect(), offset / nrm)
        };
        let flags = Flags {
            origin_symmetric: false,
            convex: true,
            star_shaped: offset > 0.0,
            approximate: false,
        };
        Ok(Body::build(
            dim,
            BodyKind::Halfspace { normal, offset },
            flags,
            offset.max(0.0),
            f64::INFINITY,
            f64::INFINITY,
            None,
        ))
    }

    /// `λK + (1−λ)L`.
    pub fn minkowski_combine(lambda: f64, k: &Body, l: &Body) -> Result<Body> {
        check_lambda(lambda)?;
        ensure_dim(k.dim(), l.dim())?;
        if !k.flags().convex || !l.flags().convex {
            return Err(GbmError::invalid("Minkowski combination requires convex operands"));
        }
        let mu = 1.0 - lambda;
        let reduced = reduce_combo(lambda, k.effective(), l.effective());
        let flags = Flags {
            origin_symmetric: k.flags().origin_symmetric && l.flags().origin_symmetric,
            convex: true,
            star_shaped: k.flags().star_shaped && l.flags().star_shaped,
            approximate: reduced.as_ref().map(|r| r.flags().approximate).unwrap_or(
                k.flags().approximate
                    || l.flags().approximate
                    || !(k.0.has_support_points && l.0.has_support_points),
            ),
        };
        let r_in = lambda * k.0.r_in + mu * l.0.r_in;
        let r_out = lambda * k.0.r_out + mu * l.0.r_out;
        let lip = lambda * k.0.lipschitz + mu * l.0.lipschitz;
        Ok(Body::build(
            k.dim(),
            BodyKind::MinkowskiCombo { lambda, k: k.clone(), l: l.clone() },
            flags,
            r_in,
            r_out,
            lip,
            reduced,
        ))
    }

    /// `K^λ L^{1−λ}` for origin-symmetric convex bodies with positive support.
    pub fn geometric_mean(lambda: f64, k: &Body, l: &Body) -> Result<Body> {
        check_lambda(lambda)?;
        ensure_dim(k.dim(), l.dim())?;
        for b in [k, l] {
            if !b.flags().convex || !b.flags().origin_symmetric {
                return Err(GbmError::invalid(
                    "geometric mean requires origin-symmetric convex operands",
                ));
            }
            if !(b.0.r_in > 0.0) {
                return Err(GbmError::Degenerate("operand has zero support in some direction".into()));
            }
            if !b.0.r_out.is_finite() {
                return Err(GbmError::Unsupported("geometric mean of unbounded bodies".into()));
            }
        }
        let mu = 1.0 - lambda;
        let reduced = reduce_geomean(lambda, k.effective(), l.effective());
        let r_in = k.0.r_in.powf(lambda) * l.0.r_in.powf(mu);
        let r_out = k.0.r_out.powf(lambda) * l.0.r_out.powf(mu);
        let lip = r_out * (lambda * k.0.lipschitz / k.0.r_in + mu * l.0.lipschitz / l.0.r_in);
        let flags = Flags {
            origin_symmetric: true,
            convex: true,
            star_shaped: true,
            approximate: reduced.as_ref().map(|r| r.flags().approximate).unwrap_or(true),
        };
        Ok(Body::build(
            k.dim(),
            BodyKind::GeometricMean { lambda, k: k.clone(), l: l.clone() },
            flags,
            r_in,
            r_out,
            lip,
            reduced,
        ))
    }

    /// `tK` for `t > 0`.
    pub fn dilate(t: f64, k: &Body) -> Result<Body> {
        check_positive("dilation factor", t)?;
        let reduced = reduce_dilate(t, k.effective());
        let flags = Flags {
            approximate: reduced.as_ref().map(|r| r.flags().approximate).unwrap_or(k.flags().approximate),
            ..*k.flags()
        };
        Ok(Body::build(
            k.dim(),
            BodyKind::Dilate { t, body: k.clone() },
            flags,
            t * k.0.r_in,
            t * k.0.r_out,
            t * k.0.lipschitz,
            reduced,
        ))
    }

    /// Finite union; star-shaped when every part is.
    pub fn union(parts: Vec<Body>) -> Result<Body> {
        let first = parts.first().ok_or_else(|| GbmError::invalid("empty union"))?;
        let dim = first.dim();
        for p in &parts {
            ensure_dim(dim, p.dim())?;
        }
        let flags = Flags {
            origin_symmetric: parts.iter().all(|p| p.flags().origin_symmetric),
            convex: parts.len() == 1 && first.flags().convex,
            star_shaped: parts.iter().all(|p| p.flags().star_shaped),
            approximate: parts.iter().any(|p| p.flags().approximate),
        };
        let r_in = parts.iter().map(|p| p.0.r_in).fold(0.0, f64::max);
        let r_out = parts.iter().map(|p| p.0.r_out).fold(0.0, f64::max);
        let lip = parts.iter().map(|p| p.0.lipschitz).fold(0.0, f64::max);
        Ok(Body::build(dim, BodyKind::Union { parts }, flags, r_in, r_out, lip, None))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn kind(&self) -> &BodyKind {
        &self.0.kind
    }

    pub fn flags(&self) -> &Flags {
        &self.0.flags
    }

    pub fn is_approximate(&self) -> bool {
        self.0.flags.approximate
    }

    /// The closed-form equivalent of this body if one was recognised, else the body itself.
    pub fn effective(&self) -> &Body {
        self.0.reduced.as_ref().unwrap_or(self)
    }

    pub fn inner_radius(&self) -> f64 {
        self.0.r_in
    }

    pub fn outer_radius(&self) -> f64 {
        self.0.r_out
    }

    /// Chordal covering radius of the direction net behind approximate membership.
    pub fn net_resolution(&self) -> Option<f64> {
        let e = self.effective();
        if e.uses_net() {
            Some(shared_net(e.dim(), NetResolution::Fine).covering_radius)
        } else {
            None
        }
    }

    fn uses_net(&self) -> bool {
        matches!(
            self.0.kind,
            BodyKind::GeometricMean { .. } | BodyKind::MinkowskiCombo { .. }
        ) && !self.0.has_support_points
    }

    pub fn canonical_json(&self) -> &str {
        &self.0.canonical
    }

    /// `h(θ) = sup_{y∈K} ⟨y, θ⟩`, `+∞` in unbounded directions.
    ///
    /// For geometric means this is the defining gauge `h_K^λ h_L^{1−λ}`, an
    /// upper bound of the true support function.
    pub fn support(&self, theta: &Direction) -> Result<f64> {
        ensure_dim(self.dim(), theta.dim())?;
        Ok(self.support_vec(theta.as_slice()))
    }

    /// Homogeneous extension of [`Body::support`] to arbitrary vectors. No dimension check.
    pub fn support_vec(&self, v: &[f64]) -> f64 {
        match &self.0.kind {
            BodyKind::Ball { radius } => radius * norm(v),
            BodyKind::Box { half_widths } => {
                half_widths.iter().zip(v).map(|(a, t)| a * t.abs()).sum()
            }
            BodyKind::Ellipsoid { semi_axes } => semi_axes
                .iter()
                .zip(v)
                .map(|(a, t)| a * a * t * t)
                .sum::<f64>()
                .sqrt(),
            BodyKind::SymPolytope { vertices, .. } => {
                vertices.iter().map(|p| dot(p, v).abs()).fold(0.0, f64::max)
            }
            BodyKind::Slab { axis, half_width, cap_radius } => {
                let along = half_width * v[*axis].abs();
                let perp = v
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i != axis)
                    .map(|(_, t)| t * t)
                    .sum::<f64>()
                    .sqrt();
                match cap_radius {
                    Some(c) => along + c * perp,
                    None if perp == 0.0 => along,
                    None => f64::INFINITY,
                }
            }
            BodyKind::Halfspace { normal, offset } => {
                let s = dot(normal, v);
                let nv = norm(v);
                if nv == 0.0 {
                    0.0
                } else if s > 0.0 && (nv * nv - s * s).max(0.0).sqrt() <= 1e-12 * nv {
                    s * offset
                } else {
                    f64::INFINITY
                }
            }
            BodyKind::MinkowskiCombo { lambda, k, l } => {
                lambda * k.support_vec(v) + (1.0 - lambda) * l.support_vec(v)
            }
            BodyKind::GeometricMean { lambda, k, l } => {
                k.support_vec(v).powf(*lambda) * l.support_vec(v).powf(1.0 - lambda)
            }
            BodyKind::Dilate { t, body } => t * body.support_vec(v),
            BodyKind::Union { parts } => {
                parts.iter().map(|p| p.support_vec(v)).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Writes a maximiser of `⟨·, v⟩` over the body into `out`. Returns `false`
    /// for kinds without a support-point oracle.
    pub fn support_point(&self, v: &[f64], out: &mut [f64]) -> bool {
        match &self.0.kind {
            BodyKind::Ball { radius } => {
                let nv = norm(v);
                for (o, t) in out.iter_mut().zip(v) {
                    *o = if nv > 0.0 { radius * t / nv } else { 0.0 };
                }
                true
            }
            BodyKind::Box { half_widths } => {
                for ((o, a), t) in out.iter_mut().zip(half_widths).zip(v) {
                    *o = if *t >= 0.0 { *a } else { -a };
                }
                true
            }
            BodyKind::Ellipsoid { semi_axes } => {
                let h = self.support_vec(v);
                for ((o, a), t) in out.iter_mut().zip(semi_axes).zip(v) {
                    *o = if h > 0.0 { a * a * t / h } else { 0.0 };
                }
                true
            }
            BodyKind::SymPolytope { vertices, .. } => {
                let mut best = f64::NEG_INFINITY;
                let mut idx = 0;
                let mut sign = 1.0;
                for (i, p) in vertices.iter().enumerate() {
                    let s = dot(p, v);
                    if s.abs() > best {
                        best = s.abs();
                        idx = i;
                        sign = if s >= 0.0 { 1.0 } else { -1.0 };
                    }
                }
                for (o, a) in out.iter_mut().zip(&vertices[idx]) {
                    *o = sign * a;
                }
                true
            }
            BodyKind::Slab { axis, half_width, cap_radius: Some(c) } => {
                let perp = v
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i != axis)
                    .map(|(_, t)| t * t)
                    .sum::<f64>()
                    .sqrt();
                for (i, o) in out.iter_mut().enumerate() {
                    *o = if i == *axis {
                        if v[i] >= 0.0 {
                            *half_width
                        } else {
                            -half_width
                        }
                    } else if perp > 0.0 {
                        c * v[i] / perp
                    } else {
                        0.0
                    };
                }
                true
            }
            BodyKind::MinkowskiCombo { lambda, k, l } => {
                let mut a = [0.0; MAX_DIM];
                let mut b = [0.0; MAX_DIM];
                let n = v.len();
                if !k.support_point(v, &mut a[..n]) || !l.support_point(v, &mut b[..n]) {
                    return false;
                }
                for i in 0..n {
                    out[i] = lambda * a[i] + (1.0 - lambda) * b[i];
                }
                true
            }
            BodyKind::Dilate { t, body } => {
                if !body.support_point(v, out) {
                    return false;
                }
                out.iter_mut().for_each(|o| *o *= t);
                true
            }
            _ => false,
        }
    }

    /// Membership oracle.
    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        ensure_dim(self.dim(), x.len())?;
        if x.iter().any(|a| !a.is_finite()) {
            return Err(GbmError::invalid("membership query with a non-finite point"));
        }
        Ok(self.contains_unchecked(x))
    }

    /// Membership without dimension or finiteness checks; the Monte Carlo hot path.
    pub fn contains_unchecked(&self, x: &[f64]) -> bool {
        if let Some(r) = &self.0.reduced {
            return r.contains_unchecked(x);
        }
        match &self.0.kind {
            BodyKind::Ball { radius } => dot(x, x) <= radius * radius,
            BodyKind::Box { half_widths } => half_widths.iter().zip(x).all(|(a, t)| t.abs() <= *a),
            BodyKind::Ellipsoid { semi_axes } => {
                semi_axes.iter().zip(x).map(|(a, t)| (t / a) * (t / a)).sum::<f64>() <= 1.0
            }
            BodyKind::SymPolytope { facets, .. } => facets.iter().all(|a| dot(a, x) <= 1.0),
            BodyKind::Slab { axis, half_width, cap_radius } => {
                if x[*axis].abs() > *half_width {
                    return false;
                }
                match cap_radius {
                    Some(c) => {
                        let perp: f64 = x
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| i != axis)
                            .map(|(_, t)| t * t)
                            .sum();
                        perp <= c * c
                    }
                    None => true,
                }
            }
            BodyKind::Halfspace { normal, offset } => dot(normal, x) <= *offset,
            BodyKind::Dilate { t, body } => {
                let mut y = [0.0; MAX_DIM];
                for (yi, xi) in y.iter_mut().zip(x) {
                    *yi = xi / t;
                }
                body.contains_unchecked(&y[..x.len()])
            }
            BodyKind::Union { parts } => parts.iter().any(|p| p.contains_unchecked(x)),
            BodyKind::MinkowskiCombo { .. } | BodyKind::GeometricMean { .. } => {
                let r2 = dot(x, x);
                if r2 <= self.0.r_in * self.0.r_in {
                    return true;
                }
                if r2 > self.0.r_out * self.0.r_out {
                    return false;
                }
                if self.0.has_support_points {
                    let scale = self.0.r_out + r2.sqrt();
                    minnorm::contains_by_min_norm(x, scale, |d, out| {
                        self.support_point(d, out);
                    })
                } else {
                    self.contains_by_net(x)
                }
            }
        }
    }

    fn gauge_net(&self) -> &GaugeNet {
        self.0.gauge.get_or_init(|| {
            let net = shared_net(self.dim(), NetResolution::Fine);
            let values = (0..net.len()).map(|i| self.support_vec(net.point(i))).collect();
            GaugeNet { net, values }
        })
    }

    fn contains_by_net(&self, x: &[f64]) -> bool {
        let g = self.gauge_net();
        let n = self.dim();
        let mut best = [(f64::INFINITY, 0usize); 3];
        for (j, &h) in g.values.iter().enumerate() {
            let s = h - dot(g.net.point(j), x);
            if s < 0.0 {
                return false;
            }
            if s < best[2].0 {
                best[2] = (s, j);
                if best[2].0 < best[1].0 {
                    best.swap(1, 2);
                    if best[1].0 < best[0].0 {
                        best.swap(0, 1);
                    }
                }
            }
        }
        let threshold = (self.0.lipschitz + norm(x)) * g.net.covering_radius;
        for &(s, j) in &best {
            if s >= threshold || s == f64::INFINITY {
                continue;
            }
            let m = match g.net.planar_count {
                Some(count) => self.refine_planar(x, j, count),
                None => self.refine_sphere(x, g.net.point(j), g.net.covering_radius, n),
            };
            if m < 0.0 {
                return false;
            }
        }
        true
    }

    fn slack(&self, x: &[f64], theta: &[f64]) -> f64 {
        self.support_vec(theta) - dot(theta, x)
    }

    fn refine_planar(&self, x: &[f64], j: usize, count: usize) -> f64 {
        let step = 2.0 * std::f64::consts::PI / count as f64;
        let centre = step * j as f64;
        let f = |phi: f64| self.slack(x, &[phi.cos(), phi.sin()]);
        let (mut a, mut b) = (centre - step, centre + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..60 {
            if fc < fd {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = f(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = f(d);
            }
            if fc.min(fd) < 0.0 || b - a < 1e-12 {
                break;
            }
        }
        fc.min(fd)
    }

    fn refine_sphere(&self, x: &[f64], start: &[f64], radius: f64, n: usize) -> f64 {
        let mut u = start.to_vec();
        let mut best = self.slack(x, &u);
        let mut step = radius;
        let mut trial = vec![0.0; n];
        while step > 1e-9 && best >= 0.0 {
            let mut improved = false;
            for i in 0..n {
                for sgn in [1.0, -1.0] {
                    trial.copy_from_slice(&u);
                    trial[i] += sgn * step;
                    let nr = norm(&trial);
                    trial.iter_mut().for_each(|a| *a /= nr);
                    let v = self.slack(x, &trial);
                    if v < best {
                        best = v;
                        u.copy_from_slice(&trial);
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best
    }

    /// `ρ(θ) = sup{r ≥ 0 : rθ ∈ K}`.
    pub fn radial(&self, theta: &Direction) -> Result<f64> {
        ensure_dim(self.dim(), theta.dim())?;
        if !self.flags().star_shaped {
            return Err(GbmError::invalid("radial function requires a star-shaped body"));
        }
        Ok(self.radial_unchecked(theta.as_slice()))
    }

    pub(crate) fn radial_unchecked(&self, t: &[f64]) -> f64 {
        if let Some(r) = &self.0.reduced {
            return r.radial_unchecked(t);
        }
        match &self.0.kind {
            BodyKind::Ball { radius } => radius / norm(t),
            BodyKind::Box { half_widths } => half_widths
                .iter()
                .zip(t)
                .map(|(a, s)| if *s == 0.0 { f64::INFINITY } else { a / s.abs() })
                .fold(f64::INFINITY, f64::min),
            BodyKind::Ellipsoid { semi_axes } => {
                1.0 / semi_axes.iter().zip(t).map(|(a, s)| (s / a) * (s / a)).sum::<f64>().sqrt()
            }
            BodyKind::SymPolytope { facets, .. } => {
                1.0 / facets.iter().map(|a| dot(a, t)).fold(0.0, f64::max)
            }
            BodyKind::Slab { axis, half_width, cap_radius } => {
                let along = t[*axis].abs();
                let a = if along == 0.0 { f64::INFINITY } else { half_width / along };
                let perp: f64 = t
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i != axis)
                    .map(|(_, s)| s * s)
                    .sum::<f64>()
                    .sqrt();
                let b = match cap_radius {
                    Some(c) if perp > 0.0 => c / perp,
                    _ => f64::INFINITY,
                };
                a.min(b)
            }
            BodyKind::Halfspace { normal, offset } => {
                let s = dot(normal, t);
                if *offset <= 0.0 {
                    0.0
                } else if s > 0.0 {
                    offset / s
                } else {
                    f64::INFINITY
                }
            }
            BodyKind::Dilate { t: s, body } => s * body.radial_unchecked(t),
            BodyKind::Union { parts } => {
                parts.iter().map(|p| p.radial_unchecked(t)).fold(0.0, f64::max)
            }
            BodyKind::MinkowskiCombo { .. } | BodyKind::GeometricMean { .. } => {
                self.radial_by_bisection(t)
            }
        }
    }

    fn radial_by_bisection(&self, t: &[f64]) -> f64 {
        let nt = norm(t);
        let mut lo = self.0.r_in / nt;
        let mut hi = self.0.r_out / nt;
        if !hi.is_finite() {
            hi = lo.max(1.0);
            let mut y = vec![0.0; t.len()];
            loop {
                y.iter_mut().zip(t).for_each(|(a, b)| *a = hi * b);
                if !self.contains_unchecked(&y) || hi > 1e12 {
                    break;
                }
                lo = hi;
                hi *= 2.0;
            }
            if hi > 1e12 {
                return f64::INFINITY;
            }
        }
        let mut y = vec![0.0; t.len()];
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            y.iter_mut().zip(t).for_each(|(a, b)| *a = mid * b);
            if self.contains_unchecked(&y) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn to_doc(&self) -> BodyDoc {
        doc::to_doc(self.dim(), &self.0.kind)
    }

    pub fn from_doc(d: &BodyDoc) -> Result<Body> {
        doc::from_doc(d)
    }

    pub fn to_json(&self) -> String {
        self.0.canonical.clone()
    }

    pub fn from_json(s: &str) -> Result<Body> {
        let d: BodyDoc = serde_json::from_str(s).map_err(|e| GbmError::Schema(e.to_string()))?;
        Body::from_doc(&d)
    }
}

impl serde::Serialize for Body {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> serde::Deserialize<'de> for Body {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = BodyDoc::deserialize(d)?;
        Body::from_doc(&doc).map_err(serde::de::Error::custom)
    }
}

/// Splits `tX` into `(t, X)`; bodies that are not dilates give `(1, self)`.
fn as_dilate(b: &Body) -> (f64, &Body) {
    match b.kind() {
        BodyKind::Dilate { t, body } => (*t, body.effective()),
        _ => (1.0, b),
    }
}

fn same_normal(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-15)
}

fn reduce_combo(lambda: f64, k: &Body, l: &Body) -> Option<Body> {
    let mu = 1.0 - lambda;
    if k == l {
        return Some(k.clone());
    }
    let kinds = (k.kind(), l.kind());
    let out = match kinds {
        (BodyKind::Ball { radius: a }, BodyKind::Ball { radius: b }) => {
            Body::ball(k.dim(), lambda * a + mu * b).ok()
        }
        (BodyKind::Box { half_widths: a }, BodyKind::Box { half_widths: b }) => {
            Body::cuboid(a.iter().zip(b).map(|(x, y)| lambda * x + mu * y).collect()).ok()
        }
        (
            BodyKind::Halfspace { normal: na, offset: a },
            BodyKind::Halfspace { normal: nb, offset: b },
        ) if same_normal(na, nb) => Body::halfspace(na.clone(), lambda * a + mu * b).ok(),
        _ => None,
    };
    if out.is_some() {
        return out;
    }
    let (s, bk) = as_dilate(k);
    let (t, bl) = as_dilate(l);
    if bk == bl {
        let d = Body::dilate(lambda * s + mu * t, bk).ok()?;
        return Some(d.effective().clone());
    }
    None
}

fn reduce_geomean(lambda: f64, k: &Body, l: &Body) -> Option<Body> {
    let mu = 1.0 - lambda;
    if k == l {
        return Some(k.clone());
    }
    if let (BodyKind::Ball { radius: a }, BodyKind::Ball { radius: b }) = (k.kind(), l.kind()) {
        return Body::ball(k.dim(), a.powf(lambda) * b.powf(mu)).ok();
    }
    let (s, bk) = as_dilate(k);
    let (t, bl) = as_dilate(l);
    if bk == bl {
        let d = Body::dilate(s.powf(lambda) * t.powf(mu), bk).ok()?;
        return Some(d.effective().clone());
    }
    None
}

fn reduce_dilate(t: f64, k: &Body) -> Option<Body> {
    if t == 1.0 {
        return Some(k.clone());
    }
    match k.kind() {
        BodyKind::Ball { radius } => Body::ball(k.dim(), t * radius).ok(),
        BodyKind::Box { half_widths } => {
            Body::cuboid(half_widths.iter().map(|a| t * a).collect()).ok()
        }
        BodyKind::Ellipsoid { semi_axes } => {
            Body::ellipsoid(semi_axes.iter().map(|a| t * a).collect()).ok()
        }
        BodyKind::SymPolytope { vertices, facets } => {
            let vertices: Vec<Vec<f64>> =
                vertices.iter().map(|v| v.iter().map(|a| t * a).collect()).collect();
            let facets: Vec<Vec<f64>> =
                facets.iter().map(|f| f.iter().map(|a| a / t).collect()).collect();
            let r_in = t * k.0.r_in;
            let r_out = t * k.0.r_out;
            Some(Body::build(
                k.dim(),
                BodyKind::SymPolytope { vertices, facets },
                *k.flags(),
                r_in,
                r_out,
                r_out,
                None,
            ))
        }
        BodyKind::Slab { axis, half_width, cap_radius } => {
            Body::slab(k.dim(), *axis, t * half_width, cap_radius.map(|c| t * c)).ok()
        }
        BodyKind::Halfspace { normal, offset } => Body::halfspace(normal.clone(), t * offset).ok(),
        BodyKind::Dilate { t: s, body } => {
            let d = Body::dilate(t * s, body).ok()?;
            Some(d.effective().clone())
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_examples() {
        let b = Body::ball(3, 2.0).unwrap();
        let th = Direction::normalized(&[1.0, 2.0, -1.0]).unwrap();
        assert_eq!(b.support(&th).unwrap(), 2.0);

        let k = Body::cube(2, 1.0).unwrap();
        let l = Body::cube(2, 2.0).unwrap();
        let m = Body::minkowski_combine(0.5, &k, &l).unwrap();
        assert_eq!(m.support(&Direction::axis(2, 0)).unwrap(), 1.5);

        let p = Body::sym_polytope(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let d = Direction::normalized(&[1.0, 1.0]).unwrap();
        assert!((p.support(&d).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn membership_examples() {
        let b = Body::ball(2, 1.0).unwrap();
        assert!(b.contains(&[0.0, 0.0]).unwrap());
        let q = Body::cube(2, 1.0).unwrap();
        assert!(!q.contains(&[1.0001, 0.0]).unwrap());
        let m = Body::minkowski_combine(0.5, &b, &Body::cuboid(vec![3.0, 0.1]).unwrap()).unwrap();
        assert!(m.contains(&[1.9, 0.0]).unwrap());
        assert!(!m.contains(&[2.01, 0.0]).unwrap());
        assert!(b.contains(&[0.0]).is_err());
    }

    #[test]
    fn radial_examples() {
        let b = Body::ball(2, 1.7).unwrap();
        assert_eq!(b.radial(&Direction::axis(2, 1)).unwrap(), 1.7);
        let q = Body::cuboid(vec![2.0, 3.0]).unwrap();
        assert_eq!(q.radial(&Direction::axis(2, 0)).unwrap(), 2.0);
        let c = Body::cube(2, 1.0).unwrap();
        let d = Direction::normalized(&[1.0, 1.0]).unwrap();
        assert!((c.radial(&d).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(Body::cuboid(vec![1.0, 0.0]).is_err());
        let b = Body::ball(2, 1.0).unwrap();
        assert!(Body::minkowski_combine(0.0, &b, &b).is_err());
        assert!(Body::minkowski_combine(1.0, &b, &b).is_err());
        assert!(Body::ball(7, 1.0).is_err());
        assert!(Direction::new(vec![1.0, 1e-5]).is_err());
    }

    #[test]
    fn reductions() {
        let a = Body::ball(2, 1.0).unwrap();
        let b = Body::ball(2, 3.0).unwrap();
        let m = Body::minkowski_combine(0.25, &a, &b).unwrap();
        assert!(matches!(m.effective().kind(), BodyKind::Ball { radius } if (*radius - 2.5).abs() < 1e-15));
        let p = Body::cross_polytope(3, 1.0).unwrap();
        let pp = Body::minkowski_combine(0.3, &p, &p).unwrap();
        assert_eq!(pp.effective(), &p);
        let d = Body::dilate(2.0, &p).unwrap();
        assert!(matches!(d.effective().kind(), BodyKind::SymPolytope { .. }));
        assert!(d.contains(&[1.9, 0.0, 0.0]).unwrap());
    }

    #[test]
    fn geometric_mean_of_box_pair() {
        let k = Body::cuboid(vec![2.0, 0.5]).unwrap();
        let l = Body::cuboid(vec![0.5, 2.0]).unwrap();
        let g = Body::geometric_mean(0.5, &k, &l).unwrap();
        assert!(g.is_approximate());
        assert!(g.contains(&[0.0, 0.0]).unwrap());
        // On the axes the gauge equals h_K^½ h_L^½ = 1.
        assert!(g.contains(&[0.99, 0.0]).unwrap());
        assert!(!g.contains(&[1.01, 0.0]).unwrap());
        assert!(g.net_resolution().is_some());
    }
}
