//! Facet enumeration for origin-symmetric polytopes `conv(±V)`.
//!
//! Every facet hyperplane `{a·x = 1}` passes through `n` affinely independent
//! points of `±V`, so enumerating `n`-subsets and keeping the planes that
//! bound every point is exhaustive. Fine for the small vertex counts used here.

use crate::error::{GbmError, Result};
use crate::numeric::{dot, solve_dense};

const MAX_SUBSETS: u64 = 5_000_000;
const BOUND_TOL: f64 = 1e-9;

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u64) / (i as u64 + 1);
    }
    acc
}

/// Returns facet normals `a` (symmetric under `a ↦ −a`) with `conv(±V) = {x : a·x ≤ 1 ∀a}`.
pub fn symmetric_facets(dim: usize, vertices: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(2 * vertices.len());
    for v in vertices {
        pts.push(v.clone());
        pts.push(v.iter().map(|a| -a).collect());
    }
    let total = binomial(pts.len(), dim);
    if total > MAX_SUBSETS {
        return Err(GbmError::Unsupported(format!(
            "facet enumeration over {total} vertex subsets exceeds the limit"
        )));
    }
    let scale = pts.iter().map(|p| dot(p, p).sqrt()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Err(GbmError::Degenerate("polytope vertices are all zero".into()));
    }
    if pts.len() < dim {
        return Err(GbmError::Degenerate("too few polytope vertices".into()));
    }
    let mut facets: Vec<Vec<f64>> = Vec::new();
    let mut idx: Vec<usize> = (0..dim).collect();
    let m = pts.len();
    let mut a = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    loop {
        for (r, &i) in idx.iter().enumerate() {
            a[r * dim..(r + 1) * dim].copy_from_slice(&pts[i]);
            rhs[r] = 1.0;
        }
        if solve_dense(&mut a, &mut rhs, dim, 1e-10 * scale).is_some() {
            let normal = &rhs;
            let bounded = pts.iter().all(|p| dot(normal, p) <= 1.0 + BOUND_TOL);
            if bounded && !facets.iter().any(|f| same(f, normal)) {
                facets.push(normal.clone());
            }
        }
        // next combination in lexicographic order
        let mut i = dim;
        while i > 0 && idx[i - 1] == i - 1 + m - dim {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        idx[i - 1] += 1;
        for j in i..dim {
            idx[j] = idx[j - 1] + 1;
        }
    }
    finish(dim, facets)
}

fn same(a: &[f64], b: &[f64]) -> bool {
    let s = dot(a, a).sqrt().max(dot(b, b).sqrt());
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-9 * s)
}

fn finish(dim: usize, facets: Vec<Vec<f64>>) -> Result<Vec<Vec<f64>>> {
    if facets.len() < 2 * dim {
        return Err(GbmError::Degenerate(
            "polytope is not full-dimensional".into(),
        ));
    }
    // Keep exactly one representative per ± pair and emit both signs.
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(facets.len());
    for f in &facets {
        let neg: Vec<f64> = f.iter().map(|a| -a).collect();
        if !out.iter().any(|g| same(g, f) || same(g, &neg)) {
            out.push(f.clone());
        }
    }
    let mut sym = Vec::with_capacity(2 * out.len());
    for f in out {
        sym.push(f.iter().map(|a| -a).collect());
        sym.push(f);
    }
    Ok(sym)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diamond_has_four_facets() {
        let f = symmetric_facets(2, &[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(f.len(), 4);
        for a in &f {
            assert!((a[0].abs() - 1.0).abs() < 1e-12 && (a[1].abs() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cube_from_corners() {
        let v = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, 1.0, -1.0],
            vec![1.0, -1.0, 1.0],
            vec![-1.0, 1.0, 1.0],
        ];
        let f = symmetric_facets(3, &v).unwrap();
        assert_eq!(f.len(), 6);
    }

    #[test]
    fn flat_polytope_is_rejected() {
        assert!(symmetric_facets(3, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]).is_err());
    }
}
