//! One rectangle per structured primitive.

use alloc::vec;
use alloc::vec::Vec;
// Unused when std is linked elsewhere in the build and provides inherent float math.
#[allow(unused_imports)]
use num_traits::Float;

use nalgebra::Unit;

use crate::geom::{PlaneParams, Point3, PointCloud, TriangleMesh, UnitVector3, Vec3};
use crate::ransac::PlanarPrimitive;
use crate::{Error, Result};

pub const DEFAULT_AXIS_TOL_DEG: f64 = 5.0;

/// Rectangles thinner than this in either direction are rejected.
const MIN_EXTENT: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum MeshKind {
    Wall,
    Ceiling,
    Floor,
    Slanted,
}

/// Simplified mesh of one primitive.
///
/// Freshly built meshes are rectangles with corners ordered
/// `(umin, vmin), (umax, vmin), (umax, vmax), (umin, vmax)` in the plane
/// frame and faces `[0, 1, 2], [0, 2, 3]`. For walls `v` points up, so the
/// vertical edges are `{0, 3}` and `{1, 2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarMesh {
    pub mesh: TriangleMesh,
    pub plane: PlaneParams,
    /// Index of the source primitive.
    pub source: usize,
    pub kind: MeshKind,
}

impl PlanarMesh {
    /// Rectangle spanning `[u0, u1] × [v0, v1]` in `plane`'s frame.
    pub fn rectangle(plane: PlaneParams, u: [f64; 2], v: [f64; 2], source: usize, kind: MeshKind) -> Result<Self> {
        if u[1] - u[0] < MIN_EXTENT || v[1] - v[0] < MIN_EXTENT {
            return Err(Error::Degenerate("rectangle extent below 1 mm"));
        }
        let (eu, ev) = plane.frame();
        let o = plane.origin_point();
        let at = |a: f64, b: f64| o + eu * a + ev * b;
        let vertices = vec![at(u[0], v[0]), at(u[1], v[0]), at(u[1], v[1]), at(u[0], v[1])];
        Ok(Self {
            mesh: TriangleMesh::new(vertices, vec![[0, 1, 2], [0, 2, 3]])?,
            plane,
            source,
            kind,
        })
    }

    pub fn is_rectangle(&self) -> bool {
        self.mesh.vertices.len() == 4 && self.mesh.faces == [[0, 1, 2], [0, 2, 3]]
    }

    /// The four corners of a rectangular mesh.
    pub fn corners(&self) -> Option<[Point3; 4]> {
        if !self.is_rectangle() {
            return None;
        }
        let v = &self.mesh.vertices;
        Some([v[0], v[1], v[2], v[3]])
    }

    pub fn normal(&self) -> &UnitVector3 {
        self.plane.normal()
    }

    /// In-plane coordinates of `p` in this mesh's frame.
    pub fn to_plane_coords(&self, p: &Point3) -> [f64; 2] {
        let (u, v) = self.plane.frame();
        let d = p - self.plane.origin_point();
        [d.dot(&u), d.dot(&v)]
    }
}

/// Index of the coordinate axis nearest to `n`, its sign, and the angle in
/// degrees.
pub fn nearest_axis(n: &UnitVector3) -> (usize, f64, f64) {
    let mut k = 0;
    for i in 1..3 {
        if n[i].abs() > n[k].abs() {
            k = i;
        }
    }
    let sign = if n[k] < 0.0 { -1.0 } else { 1.0 };
    (k, sign, n[k].abs().min(1.0).acos().to_degrees())
}

/// Fits a rectangle to a primitive's members.
///
/// When the normal is within `axis_tol_deg` of a coordinate axis it is
/// snapped to that axis and the plane is moved through the member centroid;
/// otherwise the fitted plane is kept. The rectangle spans the member
/// bounding box in the plane frame.
pub fn build_primitive_mesh(
    cloud: &PointCloud,
    prim: &PlanarPrimitive,
    source: usize,
    kind: MeshKind,
    axis_tol_deg: f64,
) -> Result<PlanarMesh> {
    if prim.num_points() < 3 {
        return Err(Error::Degenerate("primitive needs at least three members"));
    }
    let n = prim.normal();
    let (axis, sign, angle) = nearest_axis(n);
    let plane = if angle <= axis_tol_deg {
        let mut e = Vec3::zeros();
        e[axis] = sign;
        let centroid: Vec3 = prim.member_points(cloud).map(|p| p.coords).sum::<Vec3>() / prim.num_points() as f64;
        PlaneParams::from_point_normal(&Point3::from(centroid), &Unit::new_unchecked(e))
    } else {
        prim.plane
    };
    let (eu, ev) = plane.frame();
    let o = plane.origin_point();
    let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in prim.member_points(cloud) {
        let d = p - o;
        let (a, b) = (d.dot(&eu), d.dot(&ev));
        u0 = u0.min(a);
        u1 = u1.max(a);
        v0 = v0.min(b);
        v1 = v1.max(b);
    }
    PlanarMesh::rectangle(plane, [u0, u1], [v0, v1], source, kind)
}

/// Builds meshes for many primitives, in parallel when enabled.
pub fn build_meshes(
    cloud: &PointCloud,
    primitives: &[PlanarPrimitive],
    jobs: &[(usize, MeshKind)],
    axis_tol_deg: f64,
) -> Vec<Result<PlanarMesh>> {
    crate::par::map_range(jobs.len(), |i| {
        let (src, kind) = jobs[i];
        build_primitive_mesh(cloud, &primitives[src], src, kind, axis_tol_deg)
    })
}
