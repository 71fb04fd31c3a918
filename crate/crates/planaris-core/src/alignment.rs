//! Gravity and Manhattan alignment of a scene from its planar primitives.
//!
//! [`compute_z_rotation`] votes among near-horizontal primitives: each goes
//! into an upward or a downward list by the sign of its members' mean normal
//! z-component. The best-supported primitive of the longer list has its
//! normal rotated onto `+Z`. [`compute_xy_rotation`] then spins the scene
//! about `Z` so the dominant wall direction lies on the `X` axis.
//!
//! Both assume the input is roughly upright. [`compute_manhattan_frame`]
//! removes that assumption by first snapping the three dominant orthogonal
//! plane directions onto the coordinate axes.

use alloc::vec::Vec;
// Unused when std is linked elsewhere in the build and provides inherent float math.
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{Matrix3, Unit};

use crate::geom::{rotation_from_vector_to_vector, RigidRotation, UnitVector3, Vec3};
use crate::ransac::PlanarPrimitive;
use crate::{Error, PointCloud, Result};

/// Minimum `|c|` of a plane for it to vote in the up/down lists.
pub const DEFAULT_UP_THRESHOLD: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct AlignmentResult {
    pub rotation: RigidRotation,
    /// Size of the upward list `U`.
    pub upward: usize,
    /// Size of the downward list `D`.
    pub downward: usize,
    /// Index of the primitive whose normal was mapped onto `+Z`.
    pub chosen_plane: usize,
}

/// Rotation taking the best-supported primitive of the majority up/down list
/// onto `+Z`.
///
/// Only primitives with `|c| >= up_threshold` vote. The chosen normal is
/// oriented along its members' mean normal before being mapped to `+Z`. On a
/// tie between the lists the upward list wins.
pub fn compute_z_rotation(primitives: &[PlanarPrimitive], up_threshold: f64) -> Result<AlignmentResult> {
    let mut upward = Vec::new();
    let mut downward = Vec::new();
    for (i, p) in primitives.iter().enumerate() {
        if p.plane.c().abs() >= up_threshold {
            if p.mean_normal.z > 0.0 {
                upward.push(i);
            } else {
                downward.push(i);
            }
        }
    }
    let selected = if upward.len() >= downward.len() { &upward } else { &downward };
    let chosen = selected
        .iter()
        .copied()
        .max_by(|&a, &b| {
            primitives[a]
                .num_points()
                .cmp(&primitives[b].num_points())
                .then(b.cmp(&a))
        })
        .ok_or(Error::NoHorizontalSupport(up_threshold))?;
    let p = &primitives[chosen];
    let normal = p.plane.oriented_towards(&p.mean_normal).normal().into_inner();
    let normal = Unit::new_normalize(normal);
    Ok(AlignmentResult {
        rotation: rotation_from_vector_to_vector(&normal, &Vec3::z_axis()),
        upward: upward.len(),
        downward: downward.len(),
        chosen_plane: chosen,
    })
}

/// Azimuth of a horizontal direction folded into `[0, 90)` degrees.
fn rem90(a: f64) -> f64 {
    let r = a % 90.0;
    let r = if r < 0.0 { r + 90.0 } else { r };
    if r >= 90.0 {
        0.0
    } else {
        r
    }
}

fn folded_azimuth(n: &Vec3) -> f64 {
    let a = n.y.atan2(n.x).to_degrees();
    rem90(a)
}

/// Signed difference `a - b` on the 90°-periodic circle, in `[-45, 45)`.
fn folded_delta(a: f64, b: f64) -> f64 {
    rem90(a - b + 45.0) - 45.0
}

/// Rotation about `Z` aligning the dominant wall direction with `X`.
///
/// Wall normal azimuths (mod 90°) go into 1° bins centred on whole degrees,
/// weighted by support. The peak is refined by the weighted circular mean of
/// the azimuths within 1.5° of the peak centre. With no walls the identity is
/// returned.
pub fn compute_xy_rotation(walls: &[PlanarPrimitive]) -> RigidRotation {
    let mut bins = [0.0f64; 90];
    let mut samples = Vec::new();
    for w in walls {
        let n = w.plane.normal();
        let horizontal = Vec3::new(n.x, n.y, 0.0);
        if horizontal.norm() < 1e-9 {
            continue;
        }
        let az = folded_azimuth(&horizontal);
        let weight = w.num_points().max(1) as f64;
        bins[((az + 0.5).floor() as usize) % 90] += weight;
        samples.push((az, weight));
    }
    if samples.is_empty() {
        log::warn!("no wall primitives; skipping XY alignment");
        return RigidRotation::identity();
    }
    let peak = (0..90)
        .max_by(|&a, &b| bins[a].total_cmp(&bins[b]).then(b.cmp(&a)))
        .expect("90 bins") as f64;
    // Circular mean on the 90°-periodic circle: map angles through 4θ.
    let (mut s, mut c) = (0.0, 0.0);
    for &(az, w) in &samples {
        if folded_delta(az, peak).abs() <= 1.5 {
            let rad = (az * 4.0).to_radians();
            s += w * rad.sin();
            c += w * rad.cos();
        }
    }
    let dominant = rem90(s.atan2(c).to_degrees() / 4.0);
    let angle = folded_delta(dominant, 0.0);
    RigidRotation::about_z(-angle.to_radians())
}

/// Coarse rotation bringing the scene's three dominant orthogonal plane
/// directions onto the coordinate axes, with the up axis on `Z`.
///
/// The primary direction is the best-supported primitive normal; the
/// secondary is the best-supported normal within 10° of orthogonal to it.
/// Of the resulting three axes, the one along which the member points have
/// the smallest extent is taken as up (indoor scenes are wider than they are
/// tall), signed to agree with the current `+Z`; the horizontal axis nearer
/// the current `X` becomes `X`.
pub fn compute_manhattan_frame(cloud: &PointCloud, primitives: &[PlanarPrimitive]) -> RigidRotation {
    let mut order: Vec<usize> = (0..primitives.len()).collect();
    order.sort_by(|&a, &b| primitives[b].num_points().cmp(&primitives[a].num_points()).then(a.cmp(&b)));
    let Some(&first) = order.first() else {
        return RigidRotation::identity();
    };
    let a1 = primitives[first].normal().into_inner();
    let max_dot = 10f64.to_radians().sin();
    let a2 = order[1..]
        .iter()
        .map(|&i| primitives[i].normal().into_inner())
        .find(|n| n.dot(&a1).abs() <= max_dot)
        .map(|n| (n - a1 * n.dot(&a1)).normalize());
    let Some(a2) = a2 else {
        // Only one direction: take it as up.
        let up = if a1.z < 0.0 { -a1 } else { a1 };
        return rotation_from_vector_to_vector(&Unit::new_normalize(up), &Vec3::z_axis());
    };
    let a3 = a1.cross(&a2);
    let axes = [a1, a2, a3];
    let extents = axes.map(|axis| {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for p in primitives {
            for q in p.member_points(cloud) {
                let t = q.coords.dot(&axis);
                lo = lo.min(t);
                hi = hi.max(t);
            }
        }
        hi - lo
    });
    let up_idx = (0..3)
        .min_by(|&a, &b| extents[a].total_cmp(&extents[b]).then(a.cmp(&b)))
        .expect("three axes");
    let mut up = axes[up_idx];
    if up.z < 0.0 {
        up = -up;
    }
    // Of the two remaining axes, the one nearer the current X stays X, so an
    // already aligned scene keeps its frame.
    let (h1, h2) = (axes[(up_idx + 1) % 3], axes[(up_idx + 2) % 3]);
    let mut x = if h2.x.abs() > h1.x.abs() { h2 } else { h1 };
    if x.x < 0.0 {
        x = -x;
    }
    let y = up.cross(&x);
    // Rows are the new basis vectors, so R maps (x, y, up) onto (X, Y, Z).
    let m = Matrix3::from_rows(&[x.transpose(), y.transpose(), up.transpose()]);
    RigidRotation::from_matrix(m).unwrap_or_else(|_| {
        rotation_from_vector_to_vector(&Unit::new_normalize(up), &Vec3::z_axis())
    })
}

/// Full alignment: Manhattan frame, then Z, then XY.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneAlignment {
    pub rotation: RigidRotation,
    pub z: AlignmentResult,
}

/// Primitives whose normal is within `90° - wall_angle_deg` of horizontal.
pub fn vertical_primitives(primitives: &[PlanarPrimitive], wall_angle_deg: f64) -> Vec<PlanarPrimitive> {
    let max_c = (90.0 - wall_angle_deg).to_radians().sin();
    primitives
        .iter()
        .filter(|p| p.plane.c().abs() < max_c)
        .cloned()
        .collect()
}

/// Runs the three alignment steps and returns the composed rotation.
pub fn align_scene(
    cloud: &PointCloud,
    primitives: &[PlanarPrimitive],
    up_threshold: f64,
    wall_angle_deg: f64,
) -> Result<SceneAlignment> {
    let coarse = compute_manhattan_frame(cloud, primitives);
    let coarse_prims: Vec<PlanarPrimitive> = primitives.iter().map(|p| p.rotated(&coarse)).collect();
    let z = compute_z_rotation(&coarse_prims, up_threshold)?;
    let after_z = z.rotation.compose(&coarse);
    let z_prims: Vec<PlanarPrimitive> = primitives.iter().map(|p| p.rotated(&after_z)).collect();
    let xy = compute_xy_rotation(&vertical_primitives(&z_prims, wall_angle_deg));
    Ok(SceneAlignment {
        rotation: xy.compose(&after_z),
        z,
    })
}

/// Angle in degrees between `n` and the nearest of `±X`, `±Y`, `±Z`.
pub fn angle_to_nearest_axis(n: &UnitVector3) -> f64 {
    let m = n.x.abs().max(n.y.abs()).max(n.z.abs()).min(1.0);
    m.acos().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{PlaneParams, Point3};
    use alloc::vec;
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;

    fn prim(normal: Vec3, d: f64, count: usize, mean_normal: Vec3) -> PlanarPrimitive {
        let n = Unit::new_normalize(normal);
        PlanarPrimitive {
            plane: PlaneParams::new(n.x, n.y, n.z, d).unwrap(),
            indices: (0..count).collect(),
            mean_normal: Unit::new_normalize(mean_normal),
        }
    }

    #[test]
    fn aligned_floor_gives_identity() {
        let p = vec![
            prim(Vec3::z(), 0.0, 1000, Vec3::z()),
            prim(Vec3::x(), 0.0, 800, Vec3::x()),
        ];
        let r = compute_z_rotation(&p, DEFAULT_UP_THRESHOLD).unwrap();
        assert_relative_eq!(*r.rotation.matrix(), Matrix3::identity(), epsilon = 1e-6);
        assert_eq!((r.upward, r.downward, r.chosen_plane), (1, 0, 0));
    }

    #[test]
    fn recovers_known_rotation() {
        // Oracle: rotate a synthetic up-facing floor by R0; the result must
        // map R0·z back onto z.
        let r0 = RigidRotation::from_axis_angle(&Unit::new_normalize(Vec3::new(1.0, 2.0, 0.3)), 0.5);
        let floor = r0.apply_vector(&Vec3::z());
        let table = floor;
        let ceiling = -floor;
        let p = vec![
            prim(floor, 0.0, 5000, floor),
            prim(table, -0.8, 600, table),
            prim(ceiling, 2.8, 4000, ceiling),
        ];
        let r = compute_z_rotation(&p, DEFAULT_UP_THRESHOLD).unwrap();
        assert_eq!((r.upward, r.downward), (2, 1));
        assert_relative_eq!(r.rotation.apply_vector(&floor), Vec3::z(), epsilon = 1e-6);
    }

    #[test]
    fn majority_downward_list_maps_its_normal_up() {
        let p = vec![
            prim(Vec3::z(), 0.0, 9000, Vec3::z()),
            prim(Vec3::z(), -2.8, 4000, -Vec3::z()),
            prim(Vec3::z(), -2.0, 500, -Vec3::z()),
        ];
        let r = compute_z_rotation(&p, DEFAULT_UP_THRESHOLD).unwrap();
        assert_eq!(r.chosen_plane, 1);
        assert_relative_eq!(r.rotation.apply_vector(&-Vec3::z()), Vec3::z(), epsilon = 1e-9);
    }

    #[test]
    fn vertical_only_scene_is_an_error() {
        let p = vec![prim(Vec3::x(), 0.0, 100, Vec3::x()), prim(Vec3::y(), 0.0, 100, Vec3::y())];
        assert_eq!(
            compute_z_rotation(&p, DEFAULT_UP_THRESHOLD),
            Err(Error::NoHorizontalSupport(DEFAULT_UP_THRESHOLD))
        );
    }

    fn wall_at(azimuth_deg: f64, count: usize) -> PlanarPrimitive {
        let a = azimuth_deg.to_radians();
        let n = Vec3::new(a.cos(), a.sin(), 0.0);
        prim(n, 0.0, count, n)
    }

    fn residual_deg(r: &RigidRotation, azimuth_deg: f64) -> f64 {
        let a = azimuth_deg.to_radians();
        let n = r.apply_vector(&Vec3::new(a.cos(), a.sin(), 0.0));
        folded_delta(folded_azimuth(&n), 0.0).abs()
    }

    #[test]
    fn axis_walls_give_identity() {
        let r = compute_xy_rotation(&[wall_at(0.0, 100), wall_at(90.0, 100)]);
        assert!(r.angle() < 1e-9);
    }

    #[test]
    fn rotated_walls_are_undone() {
        let walls = [wall_at(30.0, 500), wall_at(120.0, 400), wall_at(210.0, 300), wall_at(300.0, 200)];
        let r = compute_xy_rotation(&walls);
        let (axis, angle) = r.axis_angle();
        assert!((axis.unwrap().z * angle.to_degrees() + 30.0).abs() < 1.0);
        for w in [30.0, 120.0, 210.0, 300.0] {
            assert!(residual_deg(&r, w) < 1.0);
        }
    }

    #[test]
    fn single_wall_at_45_maps_to_x() {
        let r = compute_xy_rotation(&[wall_at(45.0, 100)]);
        let n = r.apply_vector(&Vec3::new(1.0, 1.0, 0.0).normalize());
        assert!(angle_to_nearest_axis(&Unit::new_normalize(n)) < 1.0);
    }

    #[test]
    fn bin_edge_azimuths_are_not_biased() {
        // 0.49° and 0.51° straddle a bin boundary of half-degree bins; the
        // refined estimate lands between them either way.
        let r = compute_xy_rotation(&[wall_at(0.49, 100), wall_at(90.51, 100)]);
        assert!(residual_deg(&r, 0.49) < 0.05);
    }

    #[test]
    fn no_walls_is_identity() {
        assert_eq!(compute_xy_rotation(&[]), RigidRotation::identity());
    }

    #[test]
    fn plane_rotation_keeps_members_on_plane() {
        // z = 1 rotated a quarter turn about +x becomes y = -1.
        let plane = PlaneParams::new(0.0, 0.0, 1.0, -1.0).unwrap();
        let r = RigidRotation::from_axis_angle(&Vec3::x_axis(), core::f64::consts::FRAC_PI_2);
        let q = r.apply_plane(&plane);
        assert_relative_eq!(q.b(), -1.0, epsilon = 1e-12);
        assert_relative_eq!(q.d(), -1.0, epsilon = 1e-12);
        // n·p + d = 0 → -y - 1 = 0 → y = -1
        let member = r.apply_point(&Point3::new(3.0, -2.0, 1.0));
        assert_relative_eq!(member.y, -1.0, epsilon = 1e-12);
        assert!(q.signed_distance(&member).abs() < 1e-9);
    }

    #[test]
    fn quarter_turn_twice_is_half_turn() {
        let q = RigidRotation::about_z(core::f64::consts::FRAC_PI_2);
        let h = RigidRotation::about_z(core::f64::consts::PI);
        assert_relative_eq!(*q.compose(&q).matrix(), *h.matrix(), epsilon = 1e-12);
        let id = RigidRotation::identity();
        let p = Point3::new(1.0, 2.0, 3.0);
        assert_eq!(id.apply_point(&p), p);
    }
}
