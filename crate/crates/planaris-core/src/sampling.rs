//! Evenly spaced surface samples by weighted sample elimination.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Unused when std is linked elsewhere in the build and provides inherent float math.
#[allow(unused_imports)]
use num_traits::Float;

use crate::geom::{Point3, PointCloud, TriangleMesh, UnitVector3};
use crate::kdtree::KdTree;
use crate::{Error, Result};

const OVERSAMPLE: usize = 3;
const WEIGHT_EXPONENT: i32 = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    weight: f64,
    index: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight
            .total_cmp(&other.weight)
            .then(other.index.cmp(&self.index))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Uniform-by-area random points on `mesh` with their face normals.
pub fn sample_uniform(mesh: &TriangleMesh, n: usize, rng: &mut impl Rng) -> Result<(Vec<Point3>, Vec<UnitVector3>)> {
    let mut cdf = Vec::with_capacity(mesh.faces.len());
    let mut total = 0.0;
    for f in 0..mesh.faces.len() {
        total += mesh.face_area(f);
        cdf.push(total);
    }
    if !(total > 0.0) {
        return Err(Error::Degenerate("mesh has zero area"));
    }
    let mut points = Vec::with_capacity(n);
    let mut normals = Vec::with_capacity(n);
    for _ in 0..n {
        let r = rng.random::<f64>() * total;
        let f = cdf.partition_point(|&c| c <= r).min(cdf.len() - 1);
        let [a, b, c] = mesh.triangle(f);
        let (s, t): (f64, f64) = (rng.random(), rng.random());
        let su = s.sqrt();
        points.push(a + (b - a) * (su * (1.0 - t)) + (c - a) * (su * t));
        normals.push(mesh.face_normal(f).ok_or(Error::Degenerate("zero-area face"))?);
    }
    Ok((points, normals))
}

/// `n` points on `mesh` spread out by sample elimination.
///
/// Draws `3n` uniform samples, then repeatedly removes the sample with the
/// largest crowding weight `Σ (1 - d / 2r)^8` over neighbours closer than
/// `2r`, where `r` is the spacing of `n` ideally packed points on the mesh
/// area. Normals are face normals.
pub fn sample_mesh(mesh: &TriangleMesh, n: usize, seed: u64) -> Result<PointCloud> {
    if n == 0 {
        return Err(Error::InvalidInput("sample count must be at least 1".into()));
    }
    if mesh.faces.is_empty() {
        return Err(Error::Empty("mesh has no faces"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = OVERSAMPLE * n;
    let (points, normals) = sample_uniform(mesh, m, &mut rng)?;
    let area = mesh.area();
    let r_max = (area / (2.0 * 3f64.sqrt() * n as f64)).sqrt();
    let reach = 2.0 * r_max;
    let tree = KdTree::new(&points);
    let neighbours: Vec<Vec<(usize, f64)>> = crate::par::map_range(m, |i| {
        tree.within_radius(&points[i], reach)
            .into_iter()
            .filter(|&j| j != i)
            .map(|j| (j, (1.0 - (points[j] - points[i]).norm() / reach).powi(WEIGHT_EXPONENT)))
            .collect()
    });
    let mut weight: Vec<f64> = neighbours.iter().map(|nb| nb.iter().map(|&(_, w)| w).sum()).collect();
    let mut alive = alloc::vec![true; m];
    let mut heap: BinaryHeap<Entry> = (0..m).map(|i| Entry { weight: weight[i], index: i }).collect();
    let mut remaining = m;
    while remaining > n {
        let Some(top) = heap.pop() else { break };
        let i = top.index;
        if !alive[i] || top.weight != weight[i] {
            continue;
        }
        alive[i] = false;
        remaining -= 1;
        for &(j, w) in &neighbours[i] {
            if alive[j] {
                weight[j] -= w;
                heap.push(Entry { weight: weight[j], index: j });
            }
        }
    }
    let keep: Vec<usize> = (0..m).filter(|&i| alive[i]).collect();
    PointCloud::new(
        keep.iter().map(|&i| points[i]).collect(),
        Some(keep.iter().map(|&i| normals[i]).collect()),
    )
}
