//! Planar primitive extraction.
//!
//! Greedy sequential RANSAC: each round draws a batch of three-point plane
//! hypotheses, keeps the best-supported one, refines it by least squares and
//! removes its inliers from the pool. Hypotheses are sampled locally (the
//! second and third points come from the first point's neighbourhood), which
//! keeps small walls discoverable in large scenes.
//!
//! A point is an inlier of a plane when it lies within `epsilon` of it and its
//! normal is within `normal_threshold_deg` of the plane normal (sign ignored).

use alloc::vec::Vec;
// Unused when std is linked elsewhere in the build and provides inherent float math.
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::Unit;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::{PlaneParams, Point3, PointCloud, UnitVector3, Vec3};
use crate::kdtree::KdTree;
use crate::linalg::{canonical_sign, centroid_covariance, sorted_eigen};
use crate::{par, refit_plane, Error, Result};

/// Minimum inlier count for a plane to be accepted.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SupportThreshold {
    Count(usize),
    /// Fraction of the whole cloud.
    Fraction(f64),
}

impl SupportThreshold {
    pub fn resolve(&self, cloud_len: usize) -> usize {
        let n = match *self {
            SupportThreshold::Count(n) => n,
            SupportThreshold::Fraction(f) => (f * cloud_len as f64).ceil() as usize,
        };
        n.max(3)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RansacConfig {
    /// Inlier distance (m).
    pub epsilon: f64,
    /// Maximum angle between a point normal and the plane normal (degrees).
    pub normal_threshold_deg: f64,
    pub min_support: SupportThreshold,
    pub max_planes: usize,
    /// Hypotheses drawn per extraction round.
    pub candidates_per_round: usize,
    /// Neighbourhood size for local hypothesis sampling.
    pub sample_neighbors: usize,
    /// Points used to score hypotheses; the winner is re-scored on all points.
    pub score_sample_size: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.02,
            normal_threshold_deg: 25.0,
            min_support: SupportThreshold::Fraction(0.005),
            max_planes: 200,
            candidates_per_round: 1000,
            sample_neighbors: 64,
            score_sample_size: 8192,
            seed: 0,
        }
    }
}

impl RansacConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidConfig(msg.into()));
        if !(self.epsilon > 0.0) {
            return bad("epsilon must be positive");
        }
        if !(self.normal_threshold_deg > 0.0 && self.normal_threshold_deg <= 90.0) {
            return bad("normal_threshold_deg must lie in (0, 90]");
        }
        match self.min_support {
            SupportThreshold::Count(n) if n < 3 => return bad("min_support must be at least 3"),
            SupportThreshold::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return bad("min_support fraction must lie in (0, 1]")
            }
            _ => {}
        }
        if self.candidates_per_round == 0 || self.score_sample_size == 0 {
            return bad("candidates_per_round and score_sample_size must be positive");
        }
        if self.sample_neighbors < 3 {
            return bad("sample_neighbors must be at least 3");
        }
        Ok(())
    }
}

/// A vertex group: member point indices and their fitted plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarPrimitive {
    pub plane: PlaneParams,
    pub indices: Vec<usize>,
    /// Normalized mean of member point normals; the plane normal when the
    /// cloud has no normals.
    pub mean_normal: UnitVector3,
}

impl PlanarPrimitive {
    /// Builds a primitive from member indices. Without a plane, one is
    /// refit from the members. The plane is oriented towards the mean member
    /// normal when normals are available.
    pub fn from_members(
        cloud: &PointCloud,
        indices: Vec<usize>,
        plane: Option<PlaneParams>,
    ) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= cloud.len()) {
            return Err(Error::InvalidInput(alloc::format!(
                "member index {bad} out of range for {} points",
                cloud.len()
            )));
        }
        let plane = match plane {
            Some(p) => p,
            None => {
                let pts: Vec<Point3> = indices.iter().map(|&i| cloud.points[i]).collect();
                refit_plane(&pts)?
            }
        };
        let mean_normal = mean_normal(cloud, &indices).unwrap_or(*plane.normal());
        let plane = plane.oriented_towards(&mean_normal);
        Ok(Self {
            plane,
            indices,
            mean_normal,
        })
    }

    pub fn num_points(&self) -> usize {
        self.indices.len()
    }

    pub fn normal(&self) -> &UnitVector3 {
        self.plane.normal()
    }

    pub fn member_points<'a>(&'a self, cloud: &'a PointCloud) -> impl Iterator<Item = &'a Point3> + 'a {
        self.indices.iter().map(move |&i| &cloud.points[i])
    }

    pub fn rotated(&self, r: &crate::RigidRotation) -> PlanarPrimitive {
        PlanarPrimitive {
            plane: r.apply_plane(&self.plane),
            indices: self.indices.clone(),
            mean_normal: r.apply_unit(&self.mean_normal),
        }
    }
}

fn mean_normal(cloud: &PointCloud, indices: &[usize]) -> Option<UnitVector3> {
    let normals = cloud.normals.as_ref()?;
    let sum = indices.iter().fold(Vec3::zeros(), |acc, &i| acc + normals[i].into_inner());
    Unit::try_new(sum, 1e-12)
}

/// Normals from local PCA, with per-point degeneracy flags.
#[derive(Debug, Clone)]
pub struct EstimatedNormals {
    pub cloud: PointCloud,
    /// `true` where the neighbourhood had rank < 2; the normal there is a
    /// placeholder.
    pub degenerate: Vec<bool>,
}

/// Estimates a normal per point from its `k` nearest neighbours (the point
/// itself included): the covariance eigenvector of the smallest eigenvalue,
/// flipped to face the cloud centroid.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<EstimatedNormals> {
    if k < 3 {
        return Err(Error::InvalidConfig("normal estimation needs k >= 3".into()));
    }
    if cloud.len() < 3 {
        return Err(Error::Empty("normal estimation needs at least three points"));
    }
    let k = k.min(cloud.len());
    let tree = KdTree::new(&cloud.points);
    let centroid = cloud.centroid().expect("non-empty");
    let results = par::map_range(cloud.len(), |i| {
        let p = &cloud.points[i];
        let nn = tree.nearest(p, k);
        let (_, cov) = centroid_covariance(nn.iter().map(|&(j, _)| &cloud.points[j]).collect::<Vec<_>>())
            .expect("neighbourhood includes the query");
        let (values, vectors) = sorted_eigen(cov);
        let scale = values[2].max(f64::MIN_POSITIVE);
        let degenerate = values[2] <= 0.0 || values[1] <= 1e-12 * scale;
        let mut n = if degenerate { Vec3::z() } else { canonical_sign(vectors[0]) };
        if n.dot(&(centroid - p)) < 0.0 {
            n = -n;
        }
        (Unit::new_normalize(n), degenerate)
    });
    let (normals, degenerate) = results.into_iter().unzip();
    Ok(EstimatedNormals {
        cloud: PointCloud {
            points: cloud.points.clone(),
            normals: Some(normals),
        },
        degenerate,
    })
}

struct InlierTest<'a> {
    points: &'a [Point3],
    normals: &'a [UnitVector3],
    epsilon: f64,
    cos_threshold: f64,
}

impl InlierTest<'_> {
    #[inline]
    fn accepts(&self, plane: &PlaneParams, i: usize) -> bool {
        plane.signed_distance(&self.points[i]).abs() <= self.epsilon
            && plane.normal().dot(&self.normals[i]).abs() >= self.cos_threshold
    }

    fn collect(&self, plane: &PlaneParams, pool: &[usize]) -> Vec<usize> {
        pool.iter().copied().filter(|&i| self.accepts(plane, i)).collect()
    }

    fn count(&self, plane: &PlaneParams, pool: &[usize]) -> usize {
        pool.iter().filter(|&&i| self.accepts(plane, i)).count()
    }

    /// Least-squares plane through `members`, oriented along their mean normal.
    fn refit(&self, members: &[usize]) -> Option<PlaneParams> {
        let pts: Vec<Point3> = members.iter().map(|&i| self.points[i]).collect();
        let plane = refit_plane(&pts).ok()?;
        let sum = members
            .iter()
            .fold(Vec3::zeros(), |acc, &i| acc + self.normals[i].into_inner());
        Some(plane.oriented_towards(&sum))
    }
}

const MAX_REFINE_STEPS: usize = 12;
const MAX_FAILED_ROUNDS: usize = 3;

/// Detects planar primitives by greedy sequential RANSAC.
///
/// Returned primitives are disjoint, each member satisfies the distance and
/// normal tests against the primitive's final least-squares plane, and the
/// output is a pure function of the cloud and `cfg.seed`.
pub fn detect_planes(cloud: &PointCloud, cfg: &RansacConfig) -> Result<Vec<PlanarPrimitive>> {
    cfg.validate()?;
    if cloud.is_empty() {
        return Ok(Vec::new());
    }
    let normals = cloud.normals.as_deref().ok_or(Error::MissingNormals)?;
    let test = InlierTest {
        points: &cloud.points,
        normals,
        epsilon: cfg.epsilon,
        cos_threshold: cfg.normal_threshold_deg.to_radians().cos(),
    };
    let min_support = cfg.min_support.resolve(cloud.len());
    let tree = KdTree::new(&cloud.points);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut alive = alloc::vec![true; cloud.len()];
    let mut remaining: Vec<usize> = (0..cloud.len()).collect();
    let mut primitives = Vec::new();
    let mut failures = 0;

    while primitives.len() < cfg.max_planes
        && remaining.len() >= min_support
        && failures < MAX_FAILED_ROUNDS
    {
        let candidates = draw_candidates(&test, &tree, &alive, &remaining, cfg, &mut rng);
        if candidates.is_empty() {
            failures += 1;
            continue;
        }
        let sample: Vec<usize> = if remaining.len() <= cfg.score_sample_size {
            remaining.clone()
        } else {
            let mut picked = index::sample(&mut rng, remaining.len(), cfg.score_sample_size).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|k| remaining[k]).collect()
        };
        let scores = par::map_range(candidates.len(), |c| test.count(&candidates[c], &sample));
        let best = (0..candidates.len())
            .max_by(|&a, &b| scores[a].cmp(&scores[b]).then(b.cmp(&a)))
            .expect("non-empty");
        if scores[best] == 0 {
            failures += 1;
            continue;
        }
        let members = match refine(&test, candidates[best], &remaining) {
            Some((plane, members)) if members.len() >= min_support => (plane, members),
            _ => {
                failures += 1;
                continue;
            }
        };
        failures = 0;
        let (plane, members) = members;
        for &i in &members {
            alive[i] = false;
        }
        remaining.retain(|&i| alive[i]);
        let mean_normal = Unit::try_new(
            members
                .iter()
                .fold(Vec3::zeros(), |acc, &i| acc + normals[i].into_inner()),
            1e-12,
        )
        .unwrap_or(*plane.normal());
        log::debug!(
            "plane {}: {} points, n = ({:.4}, {:.4}, {:.4}), d = {:.4}",
            primitives.len(),
            members.len(),
            plane.a(),
            plane.b(),
            plane.c(),
            plane.d()
        );
        primitives.push(PlanarPrimitive {
            plane,
            indices: members,
            mean_normal,
        });
    }
    Ok(primitives)
}

fn draw_candidates(
    test: &InlierTest<'_>,
    tree: &KdTree,
    alive: &[bool],
    remaining: &[usize],
    cfg: &RansacConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<PlaneParams> {
    let mut out = Vec::with_capacity(cfg.candidates_per_round);
    let attempts = cfg.candidates_per_round * 4;
    for _ in 0..attempts {
        if out.len() == cfg.candidates_per_round {
            break;
        }
        let seed_idx = remaining[rng.random_range(0..remaining.len())];
        let neighborhood: Vec<usize> = tree
            .nearest(&test.points[seed_idx], cfg.sample_neighbors)
            .into_iter()
            .map(|(j, _)| j)
            .filter(|&j| j != seed_idx && alive[j])
            .collect();
        if neighborhood.len() < 2 {
            continue;
        }
        let pair = index::sample(rng, neighborhood.len(), 2);
        let tri = [seed_idx, neighborhood[pair.index(0)], neighborhood[pair.index(1)]];
        let [a, b, c] = tri.map(|i| test.points[i]);
        let (ab, ac) = (b - a, c - a);
        let cross = ab.cross(&ac);
        let len = cross.norm();
        if !(len > 1e-9 * ab.norm() * ac.norm()) || len == 0.0 {
            continue;
        }
        let n = Unit::new_unchecked(cross / len);
        if tri
            .iter()
            .any(|&i| n.dot(&test.normals[i]).abs() < test.cos_threshold)
        {
            continue;
        }
        let plane = PlaneParams::from_point_normal(&a, &n).oriented_towards(&test.normals[seed_idx]);
        out.push(plane);
    }
    out
}

/// Grows a hypothesis by alternating inlier collection and least-squares
/// refits, then trims members until all satisfy the final plane.
fn refine(test: &InlierTest<'_>, start: PlaneParams, pool: &[usize]) -> Option<(PlaneParams, Vec<usize>)> {
    let mut plane = start;
    let mut members = test.collect(&plane, pool);
    for _ in 0..MAX_REFINE_STEPS {
        let Some(next_plane) = test.refit(&members) else { break };
        let next = test.collect(&next_plane, pool);
        if next.len() < members.len() {
            break;
        }
        let grew = next.len() > members.len();
        plane = next_plane;
        members = next;
        if !grew {
            break;
        }
    }
    for _ in 0..MAX_REFINE_STEPS {
        let fitted = test.refit(&members)?;
        let kept: Vec<usize> = members.iter().copied().filter(|&i| test.accepts(&fitted, i)).collect();
        let stable = kept.len() == members.len();
        plane = fitted;
        members = kept;
        if stable {
            return Some((plane, members));
        }
    }
    // Did not settle: keep only members that pass the last plane.
    members.retain(|&i| test.accepts(&plane, i));
    Some((plane, members))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand_distr::{Distribution, Normal};

    fn unit(v: Vec3) -> UnitVector3 {
        Unit::new_normalize(v)
    }

    /// Points on a plane patch `origin + s·u + t·v`, s,t ∈ [0,1).
    fn patch(
        rng: &mut ChaCha8Rng,
        n: usize,
        origin: Vec3,
        u: Vec3,
        v: Vec3,
        normal: Vec3,
        out: &mut (Vec<Point3>, Vec<UnitVector3>),
    ) {
        for _ in 0..n {
            let s: f64 = rng.random();
            let t: f64 = rng.random();
            out.0.push(Point3::from(origin + u * s + v * t));
            out.1.push(unit(normal));
        }
    }

    fn unit_cube(per_face: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = (Vec::new(), Vec::new());
        let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
        let o = Vec3::zeros();
        patch(&mut rng, per_face, o, x, y, -z, &mut acc);
        patch(&mut rng, per_face, z, x, y, z, &mut acc);
        patch(&mut rng, per_face, o, x, z, -y, &mut acc);
        patch(&mut rng, per_face, y, x, z, y, &mut acc);
        patch(&mut rng, per_face, o, y, z, -x, &mut acc);
        patch(&mut rng, per_face, x, y, z, x, &mut acc);
        PointCloud::new(acc.0, Some(acc.1)).unwrap()
    }

    #[test]
    fn cube_yields_six_faces() {
        let cloud = unit_cube(10_000, 11);
        let cfg = RansacConfig {
            epsilon: 0.01,
            ..Default::default()
        };
        let prims = detect_planes(&cloud, &cfg).unwrap();
        assert_eq!(prims.len(), 6);
        // Ground truth: the generator's six faces, n·p + d = 0.
        let truth = [
            (Vec3::x(), 0.0),
            (Vec3::x(), -1.0),
            (Vec3::y(), 0.0),
            (Vec3::y(), -1.0),
            (Vec3::z(), 0.0),
            (Vec3::z(), -1.0),
        ];
        let mut matched = [false; 6];
        for p in &prims {
            let hit = truth.iter().position(|(n, d)| {
                let dot = p.normal().dot(n);
                let (pn, pd) = if dot < 0.0 { (-dot, -p.plane.d()) } else { (dot, p.plane.d()) };
                pn >= 0.5f64.to_radians().cos() && (pd - d).abs() <= 0.005
            });
            let hit = hit.expect("plane matches a cube face");
            assert!(!matched[hit]);
            matched[hit] = true;
        }
    }

    #[test]
    fn single_plane_consumes_almost_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut acc = (Vec::new(), Vec::new());
        patch(&mut rng, 5000, Vec3::zeros(), Vec3::x() * 3.0, Vec3::y() * 2.0, Vec3::z(), &mut acc);
        let cloud = PointCloud::new(acc.0, Some(acc.1)).unwrap();
        let prims = detect_planes(&cloud, &RansacConfig::default()).unwrap();
        assert_eq!(prims.len(), 1);
        assert!(prims[0].num_points() as f64 >= 0.99 * 5000.0);
    }

    fn random_volume(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let pts = (0..n)
            .map(|_| Point3::new(rng.random(), rng.random(), rng.random()))
            .collect();
        let ns = (0..n)
            .map(|_| {
                unit(Vec3::new(
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                    normal.sample(&mut rng),
                ))
            })
            .collect();
        PointCloud::new(pts, Some(ns)).unwrap()
    }

    #[test]
    fn random_volume_has_no_planes() {
        let cloud = random_volume(10_000, 3);
        let cfg = RansacConfig {
            min_support: SupportThreshold::Count(1000),
            ..Default::default()
        };
        // Oracle: the best support over many random trial planes (three random
        // points each) stays far below the support threshold.
        let test = InlierTest {
            points: &cloud.points,
            normals: cloud.normals.as_deref().unwrap(),
            epsilon: cfg.epsilon,
            cos_threshold: cfg.normal_threshold_deg.to_radians().cos(),
        };
        let all: Vec<usize> = (0..cloud.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut best = 0;
        for _ in 0..2000 {
            let idx = index::sample(&mut rng, cloud.len(), 3);
            let [a, b, c] = [0, 1, 2].map(|k| cloud.points[idx.index(k)]);
            let Some(n) = Unit::try_new((b - a).cross(&(c - a)), 1e-12) else { continue };
            let plane = PlaneParams::from_point_normal(&a, &n);
            best = best.max(test.count(&plane, &all));
        }
        assert!(best < 200, "oracle support {best}");
        let prims = detect_planes(&cloud, &cfg).unwrap();
        assert!(prims.is_empty());
    }

    #[test]
    fn empty_cloud_gives_no_planes() {
        let cloud = PointCloud::new(vec![], Some(vec![])).unwrap();
        assert!(detect_planes(&cloud, &RansacConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn missing_normals_is_an_error() {
        let cloud = PointCloud::new(vec![Point3::origin(); 5], None).unwrap();
        assert_eq!(detect_planes(&cloud, &RansacConfig::default()), Err(Error::MissingNormals));
    }

    #[test]
    fn members_satisfy_constraints_and_are_disjoint() {
        let cloud = unit_cube(3000, 21);
        let cfg = RansacConfig {
            epsilon: 0.01,
            normal_threshold_deg: 20.0,
            ..Default::default()
        };
        let prims = detect_planes(&cloud, &cfg).unwrap();
        let normals = cloud.normals.as_ref().unwrap();
        let mut seen = vec![false; cloud.len()];
        let cos = 20f64.to_radians().cos();
        for p in &prims {
            assert!(p.num_points() >= cfg.min_support.resolve(cloud.len()));
            for &i in &p.indices {
                assert!(!seen[i]);
                seen[i] = true;
                assert!(p.plane.signed_distance(&cloud.points[i]).abs() <= cfg.epsilon);
                assert!(p.normal().dot(&normals[i]).abs() >= cos);
            }
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let cloud = unit_cube(2000, 8);
        let cfg = RansacConfig {
            seed: 42,
            ..Default::default()
        };
        assert_eq!(detect_planes(&cloud, &cfg).unwrap(), detect_planes(&cloud, &cfg).unwrap());
    }

    #[test]
    fn normals_on_plane() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let pts: Vec<Point3> = (0..1000)
            .map(|_| Point3::new(rng.random(), rng.random(), 0.0))
            .collect();
        let est = estimate_normals(&PointCloud::new(pts, None).unwrap(), 10).unwrap();
        for n in est.cloud.normals.as_ref().unwrap() {
            assert!(n.z.abs() >= 2f64.to_radians().cos());
        }
        assert!(est.degenerate.iter().all(|d| !d));
    }

    #[test]
    fn normals_on_sphere_are_radial() {
        // Analytic oracle: the sphere normal at p is p itself.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = Normal::new(0.0, 1.0).unwrap();
        let pts: Vec<Point3> = (0..4000)
            .map(|_| {
                Point3::from(
                    Vec3::new(g.sample(&mut rng), g.sample(&mut rng), g.sample(&mut rng)).normalize(),
                )
            })
            .collect();
        let est = estimate_normals(&PointCloud::new(pts.clone(), None).unwrap(), 10).unwrap();
        let cos5 = 5f64.to_radians().cos();
        for (p, n) in pts.iter().zip(est.cloud.normals.as_ref().unwrap()) {
            assert!(n.dot(&p.coords).abs() >= cos5);
            // faces the centroid (inward)
            assert!(n.dot(&p.coords) < 0.0);
        }
    }

    #[test]
    fn collinear_neighbourhood_is_flagged() {
        let pts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        let est = estimate_normals(&PointCloud::new(pts, None).unwrap(), 3).unwrap();
        assert!(est.degenerate.iter().all(|&d| d));
    }

    #[test]
    fn config_validation() {
        let bad = RansacConfig {
            epsilon: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RansacConfig {
            normal_threshold_deg: 95.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = RansacConfig {
            min_support: SupportThreshold::Count(2),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
