//! Splitting primitives into ceiling, floor, walls and clutter.
//!
//! All functions assume a Z-aligned scene. Heights are measured from the
//! lowest point of the cloud.

use alloc::vec::Vec;
// Unused when std is linked elsewhere in the build and provides inherent float math.
#[allow(unused_imports)]
use num_traits::Float;


use crate::geom::{Point3, PointCloud, Vec3};
use crate::kdtree::KdTree;
use crate::ransac::PlanarPrimitive;
use crate::{par, Error, Result};

/// How "largest plane" is ranked when seeding ceiling and floor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum LargestPlaneMetric {
    /// Point count times the area of the horizontal bounding box.
    #[default]
    PointsTimesArea,
    Points,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SegmentationConfig {
    pub horizontal_angle_deg: f64,
    pub wall_angle_deg: f64,
    pub min_wall_height_m: f64,
    pub ceiling_frac: f64,
    pub floor_frac: f64,
    pub multistory_point_frac: f64,
    /// Top fraction of scene height in which tilted planes count as slanted
    /// ceilings.
    pub slanted_band_frac: f64,
    pub largest_by: LargestPlaneMetric,
    pub outlier_k: usize,
    pub outlier_std_ratio: f64,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        Self {
            horizontal_angle_deg: 20.0,
            wall_angle_deg: 85.0,
            min_wall_height_m: 1.5,
            ceiling_frac: 0.7,
            floor_frac: 0.9,
            multistory_point_frac: 0.10,
            slanted_band_frac: 0.3,
            largest_by: LargestPlaneMetric::PointsTimesArea,
            outlier_k: 20,
            outlier_std_ratio: 2.0,
        }
    }
}

impl SegmentationConfig {
    pub fn validate(&self) -> Result<()> {
        let frac = |v: f64| v > 0.0 && v <= 1.0;
        if !(self.horizontal_angle_deg > 0.0
            && self.horizontal_angle_deg < self.wall_angle_deg
            && self.wall_angle_deg < 90.0)
        {
            return Err(Error::InvalidConfig(
                "need 0 < horizontal_angle_deg < wall_angle_deg < 90".into(),
            ));
        }
        if !(frac(self.ceiling_frac)
            && frac(self.floor_frac)
            && frac(self.multistory_point_frac)
            && frac(self.slanted_band_frac))
        {
            return Err(Error::InvalidConfig("fractions must lie in (0, 1]".into()));
        }
        if !(self.min_wall_height_m >= 0.0 && self.outlier_std_ratio >= 0.0) {
            return Err(Error::InvalidConfig("negative wall height or std ratio".into()));
        }
        Ok(())
    }
}

/// Per-primitive quantities used by the classifiers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveStats {
    /// Angle between the plane normal and the Z axis, sign ignored (degrees).
    pub tilt_deg: f64,
    /// Mean member z above the scene datum.
    pub height: f64,
    pub min_z: f64,
    pub max_z: f64,
    pub bbox_xy_area: f64,
    pub num_points: usize,
    /// Z component of the mean member normal.
    pub facing_z: f64,
}

impl PrimitiveStats {
    pub fn vertical_extent(&self) -> f64 {
        self.max_z - self.min_z
    }
}

/// Primitive statistics plus the scene's vertical datum.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneStats {
    pub primitives: Vec<PrimitiveStats>,
    /// Lowest z of the whole cloud.
    pub z_min: f64,
    /// Scene height `max z - min z`.
    pub height: f64,
}

impl SceneStats {
    pub fn compute(cloud: &PointCloud, primitives: &[PlanarPrimitive]) -> Self {
        let bounds = cloud.bounds();
        let z_min = if bounds.is_empty() { 0.0 } else { bounds.min.z };
        let height = if bounds.is_empty() { 0.0 } else { bounds.max.z - bounds.min.z };
        let primitives = primitives
            .iter()
            .map(|p| {
                let (mut zmin, mut zmax, mut zsum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
                let (mut xlo, mut xhi, mut ylo, mut yhi) =
                    (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
                for q in p.member_points(cloud) {
                    zmin = zmin.min(q.z);
                    zmax = zmax.max(q.z);
                    zsum += q.z;
                    xlo = xlo.min(q.x);
                    xhi = xhi.max(q.x);
                    ylo = ylo.min(q.y);
                    yhi = yhi.max(q.y);
                }
                let n = p.num_points().max(1) as f64;
                PrimitiveStats {
                    tilt_deg: tilt_deg(&p.normal().into_inner()),
                    height: zsum / n - z_min,
                    min_z: zmin,
                    max_z: zmax,
                    bbox_xy_area: ((xhi - xlo) * (yhi - ylo)).max(0.0),
                    num_points: p.num_points(),
                    facing_z: p.mean_normal.z,
                }
            })
            .collect();
        Self {
            primitives,
            z_min,
            height,
        }
    }

    fn size(&self, i: usize, metric: LargestPlaneMetric) -> f64 {
        let s = &self.primitives[i];
        match metric {
            LargestPlaneMetric::Points => s.num_points as f64,
            LargestPlaneMetric::PointsTimesArea => s.num_points as f64 * s.bbox_xy_area,
        }
    }
}

/// Sign-agnostic angle between `n` and the Z axis, in degrees.
pub fn tilt_deg(n: &Vec3) -> f64 {
    let c = (n.z.abs() / n.norm()).min(1.0);
    c.acos().to_degrees()
}

/// Indices of primitives tilted less than `horizontal_angle_deg` from `Z`.
pub fn classify_horizontal(stats: &SceneStats, cfg: &SegmentationConfig) -> Vec<usize> {
    (0..stats.primitives.len())
        .filter(|&i| stats.primitives[i].tilt_deg < cfg.horizontal_angle_deg)
        .collect()
}

/// Ceiling and floor primitive sets.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct HorizontalSelection {
    pub ceiling: Vec<usize>,
    pub floor: Vec<usize>,
    pub ceiling_seed: Option<usize>,
    pub floor_seed: Option<usize>,
}

/// Picks ceiling and floor sets from the horizontal primitives.
///
/// Seeds are the largest horizontals in the upper and lower half of the
/// scene, preferring down-facing planes for the ceiling and up-facing planes
/// for the floor. A plane joins the ceiling when its height reaches
/// `ceiling_frac` of the ceiling seed's height, and the floor when its depth
/// below the scene top reaches `floor_frac` of the floor seed's depth. Any
/// remaining horizontal with at least `multistory_point_frac` of the largest
/// horizontal's points joins the ceiling if it faces down, the floor
/// otherwise.
pub fn select_ceiling_floor(
    horizontals: &[usize],
    stats: &SceneStats,
    cfg: &SegmentationConfig,
) -> HorizontalSelection {
    let mut out = HorizontalSelection::default();
    if horizontals.is_empty() {
        return out;
    }
    let s = |i: usize| &stats.primitives[i];
    let total = stats.height;
    let bigger = |a: usize, b: usize| {
        stats
            .size(a, cfg.largest_by)
            .total_cmp(&stats.size(b, cfg.largest_by))
    };
    if horizontals.len() == 1 {
        log::warn!("single horizontal plane; treating it as the floor");
        out.floor = horizontals.to_vec();
        out.floor_seed = Some(horizontals[0]);
        return out;
    }
    let upper: Vec<usize> = horizontals.iter().copied().filter(|&i| s(i).height >= total / 2.0).collect();
    let lower: Vec<usize> = horizontals.iter().copied().filter(|&i| s(i).height < total / 2.0).collect();
    let pick = |set: &[usize], prefer_down: bool, prefer_high: bool| -> Option<usize> {
        let facing: Vec<usize> = set
            .iter()
            .copied()
            .filter(|&i| if prefer_down { s(i).facing_z < 0.0 } else { s(i).facing_z > 0.0 })
            .collect();
        let pool = if facing.is_empty() { set.to_vec() } else { facing };
        pool.into_iter().max_by(|&a, &b| {
            bigger(a, b).then_with(|| {
                let h = s(a).height.total_cmp(&s(b).height);
                if prefer_high { h } else { h.reverse() }
            })
        })
    };
    out.ceiling_seed = pick(&upper, true, true);
    out.floor_seed = pick(&lower, false, false);
    let largest_points = horizontals.iter().map(|&i| s(i).num_points).max().unwrap_or(0) as f64;

    for &i in horizontals {
        let st = s(i);
        let is_ceiling = match out.ceiling_seed {
            Some(c) => i == c || st.height >= cfg.ceiling_frac * s(c).height,
            None => false,
        };
        let is_floor = match out.floor_seed {
            Some(f) => i == f || (total - st.height) >= cfg.floor_frac * (total - s(f).height),
            None => false,
        };
        if is_ceiling && Some(i) != out.floor_seed {
            out.ceiling.push(i);
        } else if is_floor {
            out.floor.push(i);
        } else if st.num_points as f64 >= cfg.multistory_point_frac * largest_points {
            if st.facing_z < 0.0 {
                out.ceiling.push(i);
            } else {
                out.floor.push(i);
            }
        }
    }
    if out.ceiling_seed.is_none() {
        log::warn!("no horizontal plane in the upper half of the scene; no ceiling");
    }
    if out.floor_seed.is_none() {
        log::warn!("no horizontal plane in the lower half of the scene; no floor");
    }
    out
}

/// Primitives tilted more than `wall_angle_deg` from `Z` whose members span
/// more than `min_wall_height_m` vertically.
pub fn select_walls(stats: &SceneStats, cfg: &SegmentationConfig) -> Vec<usize> {
    (0..stats.primitives.len())
        .filter(|&i| {
            let s = &stats.primitives[i];
            s.tilt_deg > cfg.wall_angle_deg && s.vertical_extent() > cfg.min_wall_height_m
        })
        .collect()
}

/// Tilted planes near the top of the scene that act as ceilings.
///
/// A primitive qualifies when its tilt lies in
/// `[horizontal_angle_deg, wall_angle_deg]`, its highest member lies in the
/// top `slanted_band_frac` of the scene, and it holds at least
/// `multistory_point_frac` of the largest horizontal-or-slanted primitive's
/// points.
pub fn select_slanted_ceilings(stats: &SceneStats, cfg: &SegmentationConfig) -> Vec<usize> {
    let band_floor = stats.z_min + (1.0 - cfg.slanted_band_frac) * stats.height;
    let candidates: Vec<usize> = (0..stats.primitives.len())
        .filter(|&i| stats.primitives[i].tilt_deg <= cfg.wall_angle_deg)
        .collect();
    let largest = candidates
        .iter()
        .map(|&i| stats.primitives[i].num_points)
        .max()
        .unwrap_or(0) as f64;
    candidates
        .into_iter()
        .filter(|&i| {
            let s = &stats.primitives[i];
            s.tilt_deg >= cfg.horizontal_angle_deg
                && s.max_z >= band_floor
                && s.num_points as f64 >= cfg.multistory_point_frac * largest
        })
        .collect()
}

/// Label of a primitive after segmentation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StructureLabel {
    Ceiling,
    SlantedCeiling,
    Floor,
    Wall,
    NonStructured,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSegmentation {
    /// Flat ceiling primitives.
    pub ceiling: Vec<usize>,
    /// Tilted ceiling primitives; clipped like ceilings, meshed oriented.
    pub slanted: Vec<usize>,
    pub floor: Vec<usize>,
    pub walls: Vec<usize>,
    /// Point indices not owned by any structured primitive.
    pub non_structured: Vec<usize>,
    pub labels: Vec<StructureLabel>,
    pub stats: SceneStats,
    pub params: SegmentationConfig,
}

impl SceneSegmentation {
    pub fn structured(&self) -> impl Iterator<Item = usize> + '_ {
        self.ceiling
            .iter()
            .chain(&self.slanted)
            .chain(&self.floor)
            .chain(&self.walls)
            .copied()
    }
}

/// Runs every classifier and splits off the non-structured points.
pub fn segment(
    cloud: &PointCloud,
    primitives: &[PlanarPrimitive],
    cfg: &SegmentationConfig,
) -> Result<SceneSegmentation> {
    cfg.validate()?;
    let stats = SceneStats::compute(cloud, primitives);
    let horizontals = classify_horizontal(&stats, cfg);
    let selection = select_ceiling_floor(&horizontals, &stats, cfg);
    let walls = select_walls(&stats, cfg);
    let mut labels = alloc::vec![StructureLabel::NonStructured; primitives.len()];
    for &i in &selection.ceiling {
        labels[i] = StructureLabel::Ceiling;
    }
    for &i in &selection.floor {
        labels[i] = StructureLabel::Floor;
    }
    for &i in &walls {
        labels[i] = StructureLabel::Wall;
    }
    let slanted: Vec<usize> = if selection.ceiling_seed.is_some() || !horizontals.is_empty() {
        select_slanted_ceilings(&stats, cfg)
            .into_iter()
            .filter(|&i| labels[i] == StructureLabel::NonStructured)
            .collect()
    } else {
        select_slanted_ceilings(&stats, cfg)
    };
    for &i in &slanted {
        labels[i] = StructureLabel::SlantedCeiling;
    }
    let pick = |l: StructureLabel| -> Vec<usize> { (0..labels.len()).filter(|&i| labels[i] == l).collect() };
    let mut seg = SceneSegmentation {
        ceiling: pick(StructureLabel::Ceiling),
        slanted: pick(StructureLabel::SlantedCeiling),
        floor: pick(StructureLabel::Floor),
        walls: pick(StructureLabel::Wall),
        non_structured: Vec::new(),
        labels,
        stats,
        params: cfg.clone(),
    };
    seg.non_structured = non_structured_indices(cloud.len(), primitives, &seg);
    Ok(seg)
}

fn non_structured_indices(n: usize, primitives: &[PlanarPrimitive], seg: &SceneSegmentation) -> Vec<usize> {
    let mut structured = alloc::vec![false; n];
    for i in seg.structured() {
        for &j in &primitives[i].indices {
            structured[j] = true;
        }
    }
    (0..n).filter(|&j| !structured[j]).collect()
}

/// Every point not owned by a structured primitive, including points that
/// RANSAC left unassigned.
pub fn extract_non_structured(cloud: &PointCloud, seg: &SceneSegmentation) -> PointCloud {
    cloud.select(&seg.non_structured)
}

/// Statistical outlier removal.
///
/// Drops points whose mean distance to their `k` nearest neighbours exceeds
/// `mean + std_ratio · std` of that statistic over the cloud. Returns the kept
/// indices in order. Clouds with at most `k` points are returned unchanged.
pub fn remove_outliers(cloud: &PointCloud, k: usize, std_ratio: f64) -> (PointCloud, Vec<usize>) {
    let n = cloud.len();
    if n == 0 {
        return (cloud.clone(), Vec::new());
    }
    if k == 0 || n < k + 1 {
        log::info!("outlier removal skipped: {n} points for k = {k}");
        return (cloud.clone(), (0..n).collect());
    }
    let tree = KdTree::new(&cloud.points);
    let mean_dist = par::map_range(n, |i| {
        let nn = tree.nearest(&cloud.points[i], k + 1);
        let sum: f64 = nn.iter().filter(|&&(j, _)| j != i).take(k).map(|&(_, d2)| d2.sqrt()).sum();
        sum / k as f64
    });
    let mu = mean_dist.iter().sum::<f64>() / n as f64;
    let var = mean_dist.iter().map(|d| (d - mu) * (d - mu)).sum::<f64>() / n as f64;
    let limit = mu + std_ratio * var.sqrt();
    let kept: Vec<usize> = (0..n).filter(|&i| mean_dist[i] <= limit).collect();
    (cloud.select(&kept), kept)
}

/// Mean z of a primitive's members (absolute, not datum-relative).
pub fn mean_height(cloud: &PointCloud, p: &PlanarPrimitive) -> f64 {
    let sum: f64 = p.member_points(cloud).map(|q: &Point3| q.z).sum();
    sum / p.num_points().max(1) as f64
}
