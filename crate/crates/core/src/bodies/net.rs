//! Deterministic direction nets on the unit sphere.
//!
//! In the plane the net is `N` equally spaced angles. In higher dimension it is
//! a cube-sphere: an `m^{n−1}` grid of cell centres on each of the `2n` faces of
//! `[−1, 1]ⁿ`, projected radially. Radial projection from `{|v| ≥ 1}` is
//! 1-Lipschitz, so the chordal covering radius is at most `√(n−1)/m`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

#[derive(Debug)]
pub struct DirectionNet {
    pub dim: usize,
    /// Row-major `len × dim`.
    pub points: Vec<f64>,
    /// Every unit vector lies within this chordal distance of some net point.
    pub covering_radius: f64,
    /// Planar nets only: number of equally spaced angles.
    pub planar_count: Option<usize>,
}

impl DirectionNet {
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn planar(count: usize) -> Self {
        let mut points = Vec::with_capacity(2 * count);
        for j in 0..count {
            let t = 2.0 * std::f64::consts::PI * j as f64 / count as f64;
            points.push(t.cos());
            points.push(t.sin());
        }
        DirectionNet {
            dim: 2,
            points,
            covering_radius: 2.0 * (std::f64::consts::PI / (2.0 * count as f64)).sin(),
            planar_count: Some(count),
        }
    }

    pub fn cube_sphere(dim: usize, m: usize) -> Self {
        assert!(dim >= 2 && m >= 1);
        let face_cells = m.pow(dim as u32 - 1);
        let mut points = Vec::with_capacity(2 * dim * face_cells * dim);
        let mut v = vec![0.0; dim];
        for axis in 0..dim {
            for sign in [1.0, -1.0] {
                for cell in 0..face_cells {
                    let mut c = cell;
                    let mut k = 0;
                    for (d, slot) in v.iter_mut().enumerate() {
                        if d == axis {
                            *slot = sign;
                            continue;
                        }
                        let idx = c % m;
                        c /= m;
                        *slot = -1.0 + (2.0 * idx as f64 + 1.0) / m as f64;
                        k += 1;
                    }
                    debug_assert_eq!(k, dim - 1);
                    let nrm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                    points.extend(v.iter().map(|a| a / nrm));
                }
            }
        }
        DirectionNet {
            dim,
            points,
            covering_radius: ((dim - 1) as f64).sqrt() / m as f64,
            planar_count: None,
        }
    }
}

/// Resolution presets: roughly 2048 directions in the plane and 8192 or more beyond.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NetResolution {
    Fine,
    Coarse,
}

fn build(dim: usize, res: NetResolution) -> DirectionNet {
    match (dim, res) {
        (2, NetResolution::Fine) => DirectionNet::planar(2048),
        (2, NetResolution::Coarse) => DirectionNet::planar(128),
        (d, NetResolution::Fine) => DirectionNet::cube_sphere(d, [37, 10, 6, 4][(d - 3).min(3)]),
        (d, NetResolution::Coarse) => DirectionNet::cube_sphere(d, [8, 4, 3, 2][(d - 3).min(3)]),
    }
}

/// Shared, lazily built nets keyed by dimension and resolution.
pub fn shared_net(dim: usize, res: NetResolution) -> Arc<DirectionNet> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, NetResolution), Arc<DirectionNet>>>> =
        OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("direction net cache poisoned");
    guard
        .entry((dim, res))
        .or_insert_with(|| Arc::new(build(dim, res)))
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn nets_are_unit_and_cover() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in 2..=5 {
            let net = build(dim, NetResolution::Coarse);
            for i in 0..net.len() {
                let p = net.point(i);
                let nrm: f64 = p.iter().map(|a| a * a).sum::<f64>().sqrt();
                assert!((nrm - 1.0).abs() < 1e-14);
            }
            for _ in 0..300 {
                let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
                let nrm: f64 = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.iter_mut().for_each(|a| *a /= nrm);
                let best = (0..net.len())
                    .map(|i| {
                        net.point(i)
                            .iter()
                            .zip(&v)
                            .map(|(a, b)| (a - b) * (a - b))
                            .sum::<f64>()
                            .sqrt()
                    })
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= net.covering_radius + 1e-12, "dim {dim}: {best}");
            }
        }
    }

    #[test]
    fn fine_sizes() {
        assert_eq!(build(2, NetResolution::Fine).len(), 2048);
        assert!(build(3, NetResolution::Fine).len() >= 8192);
    }
}
