//! Geometric domain types shared by every stage.

use alloc::vec::Vec;
// Unused when std is linked elsewhere in the build and provides inherent float math.
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::{Matrix3, Rotation3, Unit};

use crate::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Point3 = nalgebra::Point3<f64>;
pub type UnitVector3 = Unit<Vec3>;

const UNIT_TOL: f64 = 1e-9;

/// Plane `a·x + b·y + c·z + d = 0` with a unit normal `(a, b, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneParams {
    normal: UnitVector3,
    d: f64,
}

impl PlaneParams {
    /// Builds a plane from raw coefficients, rescaling so `(a, b, c)` is unit.
    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let n = Vec3::new(a, b, c);
        let len = n.norm();
        if !(len.is_finite() && d.is_finite()) || len < 1e-12 {
            return Err(Error::Degenerate("plane normal has zero length"));
        }
        Ok(Self {
            normal: Unit::new_unchecked(n / len),
            d: d / len,
        })
    }

    pub fn from_point_normal(point: &Point3, normal: &UnitVector3) -> Self {
        Self {
            normal: *normal,
            d: -normal.dot(&point.coords),
        }
    }

    pub fn a(&self) -> f64 {
        self.normal.x
    }

    pub fn b(&self) -> f64 {
        self.normal.y
    }

    pub fn c(&self) -> f64 {
        self.normal.z
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.a(), self.b(), self.c(), self.d]
    }

    pub fn normal(&self) -> &UnitVector3 {
        &self.normal
    }

    pub fn signed_distance(&self, p: &Point3) -> f64 {
        self.normal.dot(&p.coords) + self.d
    }

    /// Same plane with the normal (and `d`) negated.
    pub fn flipped(&self) -> Self {
        Self {
            normal: -self.normal,
            d: -self.d,
        }
    }

    /// Returns the plane oriented so its normal has a non-negative dot product
    /// with `reference`.
    pub fn oriented_towards(&self, reference: &Vec3) -> Self {
        if self.normal.dot(reference) < 0.0 {
            self.flipped()
        } else {
            *self
        }
    }

    pub fn project(&self, p: &Point3) -> Point3 {
        p - self.normal.into_inner() * self.signed_distance(p)
    }

    /// A point on the plane (the foot of the origin).
    pub fn origin_point(&self) -> Point3 {
        Point3::from(-self.normal.into_inner() * self.d)
    }

    /// Right-handed in-plane frame `(u, v)` with `u × v = n`.
    ///
    /// `u` is horizontal whenever the plane is not horizontal, so for walls
    /// `v` points up.
    pub fn frame(&self) -> (Vec3, Vec3) {
        let n = self.normal.into_inner();
        let up = Vec3::z();
        let side = up.cross(&n);
        let u = if side.norm() > 1e-6 {
            side.normalize()
        } else {
            let x = Vec3::x();
            (x - n * n.dot(&x)).normalize()
        };
        (u, n.cross(&u))
    }
}

/// Signed distance of `p` from `plane`: `a·x + b·y + c·z + d`.
pub fn plane_point_distance(p: &Point3, plane: &PlaneParams) -> f64 {
    plane.signed_distance(p)
}

/// Proper rotation of 3-space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidRotation(Rotation3<f64>);

impl Default for RigidRotation {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidRotation {
    pub fn identity() -> Self {
        Self(Rotation3::identity())
    }

    /// Validates orthonormality and `det = +1` within `1e-9`.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        let err = (m.transpose() * m - Matrix3::identity()).abs().max();
        let det = m.determinant();
        if !(err <= UNIT_TOL && (det - 1.0).abs() <= UNIT_TOL) {
            return Err(Error::InvalidInput(alloc::format!(
                "matrix is not a proper rotation (orthogonality error {err:e}, det {det})"
            )));
        }
        Ok(Self(Rotation3::from_matrix_unchecked(m)))
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::from_matrix(Matrix3::from_row_slice(&[
            rows[0][0], rows[0][1], rows[0][2], rows[1][0], rows[1][1], rows[1][2], rows[2][0],
            rows[2][1], rows[2][2],
        ]))
    }

    /// Rotation by `angle` radians about `axis` (right-hand rule).
    pub fn from_axis_angle(axis: &UnitVector3, angle: f64) -> Self {
        Self(Rotation3::from_axis_angle(axis, angle))
    }

    pub fn about_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vec3::z_axis(), angle)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        self.0.matrix()
    }

    pub fn rows(&self) -> [[f64; 3]; 3] {
        let m = self.0.matrix();
        [
            [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
            [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
            [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
        ]
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    /// `self ∘ first`: applies `first`, then `self`.
    pub fn compose(&self, first: &RigidRotation) -> Self {
        Self(self.0 * first.0)
    }

    pub fn angle(&self) -> f64 {
        self.0.angle()
    }

    /// Axis and angle (radians); the axis is `None` for the identity.
    pub fn axis_angle(&self) -> (Option<UnitVector3>, f64) {
        match self.0.axis_angle() {
            Some((axis, angle)) => (Some(axis), angle),
            None => (None, 0.0),
        }
    }

    pub fn apply_point(&self, p: &Point3) -> Point3 {
        self.0 * p
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.0 * v
    }

    pub fn apply_unit(&self, v: &UnitVector3) -> UnitVector3 {
        Unit::new_normalize(self.0 * v.into_inner())
    }

    /// Rotates a plane. The offset is unchanged because `R` preserves `n·p`.
    pub fn apply_plane(&self, plane: &PlaneParams) -> PlaneParams {
        PlaneParams {
            normal: self.apply_unit(&plane.normal),
            d: plane.d,
        }
    }
}

/// Rotation taking unit vector `src` onto `dst`.
///
/// For antiparallel inputs the result is a half turn about
/// `normalize(src × ê)`, where `ê` is the coordinate axis least aligned with
/// `src` (lowest index on ties).
pub fn rotation_from_vector_to_vector(src: &UnitVector3, dst: &UnitVector3) -> RigidRotation {
    let cross = src.cross(dst);
    let sin = cross.norm();
    let cos = src.dot(dst);
    if sin < 1e-12 {
        if cos > 0.0 {
            return RigidRotation::identity();
        }
        let abs = src.abs();
        let mut axis_idx = 0;
        for i in 1..3 {
            if abs[i] < abs[axis_idx] {
                axis_idx = i;
            }
        }
        let mut e = Vec3::zeros();
        e[axis_idx] = 1.0;
        let axis = Unit::new_normalize(src.cross(&e));
        return RigidRotation::from_axis_angle(&axis, core::f64::consts::PI);
    }
    let axis = Unit::new_unchecked(cross / sin);
    RigidRotation::from_axis_angle(&axis, sin.atan2(cos))
}

/// Angle in radians between two vectors.
pub fn angle_between(a: &Vec3, b: &Vec3) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Point3,
    pub max: Point3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Point3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: Point3::new(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Point3>) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn grow(&mut self, p: &Point3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Point3 {
        nalgebra::center(&self.min, &self.max)
    }

    pub fn dilated(&self, margin: f64) -> Aabb {
        let m = Vec3::repeat(margin);
        Aabb {
            min: self.min - m,
            max: self.max + m,
        }
    }

    pub fn contains(&self, p: &Point3) -> bool {
        (0..3).all(|i| p[i] >= self.min[i] && p[i] <= self.max[i])
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_sq(&self, p: &Point3) -> f64 {
        let mut acc = 0.0;
        for i in 0..3 {
            let v = p[i];
            let excess = if v < self.min[i] {
                self.min[i] - v
            } else if v > self.max[i] {
                v - self.max[i]
            } else {
                0.0
            };
            acc += excess * excess;
        }
        acc
    }
}

/// Scene sample: positions plus optional per-point unit normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3>,
    pub normals: Option<Vec<UnitVector3>>,
}

impl PointCloud {
    /// Validates that every coordinate is finite and that normals, when
    /// present, match the point count.
    pub fn new(points: Vec<Point3>, normals: Option<Vec<UnitVector3>>) -> Result<Self> {
        if let Some(i) = points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(alloc::format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        if let Some(n) = &normals {
            if n.len() != points.len() {
                return Err(Error::InvalidInput(alloc::format!(
                    "{} normals for {} points",
                    n.len(),
                    points.len()
                )));
            }
            if let Some(i) = n
                .iter()
                .position(|v| !v.iter().all(|c| c.is_finite()) || (v.norm() - 1.0).abs() > 1e-6)
            {
                return Err(Error::InvalidInput(alloc::format!("normal {i} is not a unit vector")));
            }
        }
        Ok(Self { points, normals })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    pub fn normal(&self, i: usize) -> Option<&UnitVector3> {
        self.normals.as_ref().map(|n| &n[i])
    }

    /// New cloud holding the given points (and their normals) in order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        PointCloud {
            points: indices.iter().map(|&i| self.points[i]).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| indices.iter().map(|&i| n[i]).collect()),
        }
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.points)
    }

    pub fn centroid(&self) -> Option<Point3> {
        if self.points.is_empty() {
            return None;
        }
        let sum = self.points.iter().fold(Vec3::zeros(), |acc, p| acc + p.coords);
        Some(Point3::from(sum / self.points.len() as f64))
    }

    pub fn rotated(&self, r: &RigidRotation) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| r.apply_point(p)).collect(),
            normals: self
                .normals
                .as_ref()
                .map(|n| n.iter().map(|v| r.apply_unit(v)).collect()),
        }
    }
}

/// Indexed triangle soup.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TriangleMesh {
    pub vertices: Vec<Point3>,
    pub faces: Vec<[usize; 3]>,
}

/// Faces smaller than this area (m²) are treated as degenerate.
pub const MIN_FACE_AREA: f64 = 1e-12;

impl TriangleMesh {
    pub fn new(vertices: Vec<Point3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let mesh = Self { vertices, faces };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks index bounds, finiteness and the minimum face area.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self
            .vertices
            .iter()
            .position(|p| !p.coords.iter().all(|c| c.is_finite()))
        {
            return Err(Error::InvalidInput(alloc::format!(
                "vertex {i} has a non-finite coordinate"
            )));
        }
        let n = self.vertices.len();
        for (fi, f) in self.faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n) {
                return Err(Error::InvalidInput(alloc::format!(
                    "face {fi} references a vertex outside 0..{n}"
                )));
            }
            if self.face_area(fi) <= MIN_FACE_AREA {
                return Err(Error::InvalidInput(alloc::format!("face {fi} is degenerate")));
            }
        }
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }

    pub fn triangle(&self, face: usize) -> [Point3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.triangle(face);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn area(&self) -> f64 {
        (0..self.faces.len()).map(|f| self.face_area(f)).sum()
    }

    pub fn face_normal(&self, face: usize) -> Option<UnitVector3> {
        let [a, b, c] = self.triangle(face);
        Unit::try_new((b - a).cross(&(c - a)), 1e-300)
    }

    /// Appends `other`, offsetting its indices.
    pub fn append(&mut self, other: &TriangleMesh) {
        let offset = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.faces.extend(
            other
                .faces
                .iter()
                .map(|f| [f[0] + offset, f[1] + offset, f[2] + offset]),
        );
    }

    pub fn bounds(&self) -> Aabb {
        Aabb::from_points(&self.vertices)
    }

    pub fn rotated(&self, r: &RigidRotation) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|p| r.apply_point(p)).collect(),
            faces: self.faces.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use core::f64::consts::{FRAC_PI_2, PI};

    fn unit(x: f64, y: f64, z: f64) -> UnitVector3 {
        Unit::new_normalize(Vec3::new(x, y, z))
    }

    #[test]
    fn distance_examples() {
        let z0 = PlaneParams::new(0.0, 0.0, 1.0, 0.0).unwrap();
        assert_eq!(plane_point_distance(&Point3::origin(), &z0), 0.0);
        assert_eq!(plane_point_distance(&Point3::new(0.0, 0.0, 2.0), &z0), 2.0);
        let s = 1.0 / 3f64.sqrt();
        let diag = PlaneParams::new(s, s, s, 0.0).unwrap();
        // (1,1,1)·(1,1,1)/√3 = 3/√3 = √3
        assert_relative_eq!(
            plane_point_distance(&Point3::new(1.0, 1.0, 1.0), &diag),
            3f64.sqrt(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn plane_normalizes_on_construction() {
        let p = PlaneParams::new(0.0, 0.0, 2.0, -4.0).unwrap();
        assert_eq!(p.coefficients(), [0.0, 0.0, 1.0, -2.0]);
        assert!(PlaneParams::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn rotation_identity_case() {
        let r = rotation_from_vector_to_vector(&Vec3::z_axis(), &Vec3::z_axis());
        assert_relative_eq!(*r.matrix(), Matrix3::identity(), epsilon = 1e-12);
    }

    #[test]
    fn rotation_x_to_z_is_quarter_turn_about_y() {
        let r = rotation_from_vector_to_vector(&Vec3::x_axis(), &Vec3::z_axis());
        assert_relative_eq!(r.apply_vector(&Vec3::x()), Vec3::z(), epsilon = 1e-12);
        let (axis, angle) = r.axis_angle();
        assert_relative_eq!(angle, FRAC_PI_2, epsilon = 1e-12);
        assert_relative_eq!(axis.unwrap().into_inner(), -Vec3::y(), epsilon = 1e-12);
    }

    #[test]
    fn rotation_antiparallel_is_half_turn() {
        let src = -Vec3::z_axis();
        let r = rotation_from_vector_to_vector(&src, &Vec3::z_axis());
        assert_relative_eq!(r.apply_vector(&src), Vec3::z(), epsilon = 1e-12);
        assert_relative_eq!(r.angle(), PI, epsilon = 1e-12);
        assert_relative_eq!(r.matrix().determinant(), 1.0, epsilon = 1e-12);
        // least-aligned axis of -z is x (first of the tied zeros); axis = -z × x = -y
        let (axis, _) = r.axis_angle();
        let axis = axis.unwrap().into_inner();
        assert_relative_eq!(axis.dot(&Vec3::y()).abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn from_matrix_rejects_reflection() {
        let m = Matrix3::from_diagonal(&Vec3::new(1.0, 1.0, -1.0));
        assert!(RigidRotation::from_matrix(m).is_err());
    }

    #[test]
    fn frame_is_right_handed_and_up_for_walls() {
        let wall = PlaneParams::new(0.0, -1.0, 0.0, 0.0).unwrap();
        let (u, v) = wall.frame();
        assert_relative_eq!(v, Vec3::z(), epsilon = 1e-12);
        assert_relative_eq!(u.cross(&v), wall.normal().into_inner(), epsilon = 1e-12);
        let floor = PlaneParams::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let (u, v) = floor.frame();
        assert_relative_eq!(u, Vec3::x(), epsilon = 1e-12);
        assert_relative_eq!(v, Vec3::y(), epsilon = 1e-12);
    }

    #[test]
    fn cloud_rejects_nan_and_length_mismatch() {
        assert!(PointCloud::new(alloc::vec![Point3::new(f64::NAN, 0.0, 0.0)], None).is_err());
        assert!(PointCloud::new(alloc::vec![Point3::origin()], Some(alloc::vec![])).is_err());
    }

    #[test]
    fn mesh_rejects_bad_faces() {
        let v = alloc::vec![
            Point3::origin(),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0)
        ];
        assert!(TriangleMesh::new(v.clone(), alloc::vec![[0, 1, 3]]).is_err());
        assert!(TriangleMesh::new(v.clone(), alloc::vec![[0, 1, 1]]).is_err());
        assert!(TriangleMesh::new(v, alloc::vec![[0, 1, 2]]).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_unit() -> impl Strategy<Value = UnitVector3> {
            (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
                .prop_filter("nonzero", |(x, y, z)| x * x + y * y + z * z > 1e-3)
                .prop_map(|(x, y, z)| unit(x, y, z))
        }

        fn arb_point() -> impl Strategy<Value = Point3> {
            (-10.0f64..10.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(x, y, z)| Point3::new(x, y, z))
        }

        proptest! {
            #[test]
            fn rotation_maps_src_to_dst(src in arb_unit(), dst in arb_unit()) {
                let r = rotation_from_vector_to_vector(&src, &dst);
                prop_assert!((r.apply_vector(&src) - dst.into_inner()).norm() < 1e-6);
                prop_assert!((r.matrix().determinant() - 1.0).abs() < 1e-9);
            }

            #[test]
            fn rotation_preserves_lengths_and_angles(
                src in arb_unit(), dst in arb_unit(), a in arb_point(), b in arb_point(), c in arb_point()
            ) {
                let r = rotation_from_vector_to_vector(&src, &dst);
                let (ra, rb, rc) = (r.apply_point(&a), r.apply_point(&b), r.apply_point(&c));
                prop_assert!(((ra - rb).norm() - (a - b).norm()).abs() < 1e-6);
                let before = (b - a).dot(&(c - a));
                let after = (rb - ra).dot(&(rc - ra));
                prop_assert!((before - after).abs() < 1e-6 * (1.0 + before.abs()));
            }

            #[test]
            fn distance_is_linear_and_flips_with_plane(
                n in arb_unit(), d in -5.0f64..5.0, p in arb_point(), q in arb_point(), t in -2.0f64..2.0
            ) {
                let plane = PlaneParams::from_point_normal(&Point3::origin(), &n);
                let plane = PlaneParams::new(plane.a(), plane.b(), plane.c(), d).unwrap();
                let mix = Point3::from(p.coords * t + q.coords * (1.0 - t));
                let lhs = plane_point_distance(&mix, &plane);
                let rhs = t * plane_point_distance(&p, &plane) + (1.0 - t) * plane_point_distance(&q, &plane);
                prop_assert!((lhs - rhs).abs() < 1e-9);
                prop_assert!((plane_point_distance(&p, &plane.flipped()) + plane_point_distance(&p, &plane)).abs() < 1e-12);
            }
        }
    }
}
