//! Cutting ceiling and floor rectangles along adjacent wall planes.

use alloc::vec::Vec;

use crate::adjacency::AdjacencyGraph;
use crate::geom::{PlaneParams, Point3, TriangleMesh, MIN_FACE_AREA};
use crate::planemesh::PlanarMesh;
use crate::polygon::{point_in_polygon, signed_area, simplify, triangulate, Vec2};
use crate::{Error, Result};

/// Vertices closer than this to a cutting plane are placed on it.
pub const SIDE_TOL: f64 = 1e-7;

const INSIDE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct ClipConfig {
    /// A fragment survives when more than this many slab points fall inside
    /// it. Zero keeps every fragment.
    pub th_clip: usize,
}

impl Default for ClipConfig {
    fn default() -> Self {
        Self { th_clip: 50 }
    }
}

impl ClipConfig {
    pub fn keeps(&self, support: usize) -> bool {
        self.th_clip == 0 || support > self.th_clip
    }
}

/// A convex or concave planar piece of a slab.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshFragment {
    /// Boundary loop, counter-clockwise about `plane`'s normal.
    pub polygon: Vec<Point3>,
    pub plane: PlaneParams,
    pub support: usize,
}

impl MeshFragment {
    pub fn new(polygon: Vec<Point3>, plane: PlaneParams) -> Self {
        let mut f = Self {
            polygon,
            plane,
            support: 0,
        };
        if signed_area(&f.polygon_2d()) < 0.0 {
            f.polygon.reverse();
        }
        f
    }

    /// The outline of a rectangular mesh, or its vertex loop otherwise.
    pub fn from_mesh(mesh: &PlanarMesh) -> Self {
        Self::new(mesh.mesh.vertices.clone(), mesh.plane)
    }

    pub fn polygon_2d(&self) -> Vec<Vec2> {
        let (u, v) = self.plane.frame();
        let o = self.plane.origin_point();
        self.polygon
            .iter()
            .map(|p| {
                let d = p - o;
                Vec2::new(d.dot(&u), d.dot(&v))
            })
            .collect()
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.polygon_2d()).abs()
    }

    /// Triangles facing along the plane normal.
    pub fn triangulation(&self) -> Result<TriangleMesh> {
        let poly = self.polygon_2d();
        let faces: Vec<[usize; 3]> = triangulate(&poly)
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| self.polygon[i]);
                0.5 * (b - a).cross(&(c - a)).norm() > MIN_FACE_AREA
            })
            .collect();
        TriangleMesh::new(self.polygon.clone(), faces)
    }
}

/// Splits `frag` along `cut` into the parts on its positive and negative
/// side. A side without area is `None`. A fragment lying in the cutting
/// plane comes back unchanged as the positive part. Supports are reset.
pub fn clip_polygon_by_plane(frag: &MeshFragment, cut: &PlaneParams) -> (Option<MeshFragment>, Option<MeshFragment>) {
    let d: Vec<f64> = frag
        .polygon
        .iter()
        .map(|p| {
            let s = cut.signed_distance(p);
            if s.abs() < SIDE_TOL {
                0.0
            } else {
                s
            }
        })
        .collect();
    if d.iter().all(|&s| s == 0.0) {
        let mut same = frag.clone();
        same.support = 0;
        return (Some(same), None);
    }
    let n = frag.polygon.len();
    let (mut pos, mut neg) = (Vec::new(), Vec::new());
    for i in 0..n {
        let j = (i + 1) % n;
        let (p, q) = (frag.polygon[i], frag.polygon[j]);
        let (di, dj) = (d[i], d[j]);
        if di >= 0.0 {
            pos.push(p);
        }
        if di <= 0.0 {
            neg.push(p);
        }
        if (di > 0.0 && dj < 0.0) || (di < 0.0 && dj > 0.0) {
            let x = p + (q - p) * (di / (di - dj));
            pos.push(x);
            neg.push(x);
        }
    }
    let finish = |loop_: Vec<Point3>| -> Option<MeshFragment> {
        if loop_.len() < 3 {
            return None;
        }
        let f = MeshFragment::new(loop_, frag.plane);
        let keep = simplify(&f.polygon_2d(), 1e-12);
        if keep.len() < 3 {
            return None;
        }
        let f = MeshFragment {
            polygon: keep.iter().map(|&i| f.polygon[i]).collect(),
            plane: f.plane,
            support: 0,
        };
        (f.area() > MIN_FACE_AREA).then_some(f)
    };
    (finish(pos), finish(neg))
}

fn to_2d(plane: &PlaneParams, points: &[Point3]) -> Vec<Vec2> {
    let (u, v) = plane.frame();
    let o = plane.origin_point();
    points
        .iter()
        .map(|p| {
            let d = p - o;
            Vec2::new(d.dot(&u), d.dot(&v))
        })
        .collect()
}

fn count_2d(poly: &[Vec2], points: &[Vec2]) -> usize {
    let (mut lo, mut hi) = (Vec2::repeat(f64::INFINITY), Vec2::repeat(f64::NEG_INFINITY));
    for p in poly {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let lo = lo.add_scalar(-INSIDE_TOL);
    let hi = hi.add_scalar(INSIDE_TOL);
    points
        .iter()
        .filter(|p| p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y)
        .filter(|p| point_in_polygon(p, poly, INSIDE_TOL))
        .count()
}

/// Points whose projection onto the fragment's plane falls inside it,
/// boundary included.
pub fn count_support(frag: &MeshFragment, points: &[Point3]) -> usize {
    count_2d(&frag.polygon_2d(), &to_2d(&frag.plane, points))
}

/// What one wall cut did to a slab.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClipStep {
    /// Position of the wall in the wall list.
    pub wall: usize,
    pub fragments_in: usize,
    pub fragments_out: usize,
    /// Support of every part produced by this cut, kept or not.
    pub supports: Vec<usize>,
    pub dropped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipOutcome {
    pub fragments: Vec<MeshFragment>,
    pub trace: Vec<ClipStep>,
}

impl ClipOutcome {
    pub fn area(&self) -> f64 {
        self.fragments.iter().map(MeshFragment::area).sum()
    }

    pub fn mesh(&self) -> Result<TriangleMesh> {
        let mut out = TriangleMesh::default();
        for f in &self.fragments {
            out.append(&f.triangulation()?);
        }
        Ok(out)
    }
}

/// Cuts `slab` by the plane of every wall adjacent to it, in ascending wall
/// order. Each cut replaces every fragment by its parts on both sides, and
/// a part survives only if [`ClipConfig::keeps`] its support.
///
/// `graph` holds the walls as nodes `0..walls.len()` and the slab as the
/// last node.
pub fn clip_structural_plane(
    slab: &PlanarMesh,
    slab_points: &[Point3],
    walls: &[PlanarMesh],
    graph: &AdjacencyGraph,
    cfg: &ClipConfig,
) -> Result<ClipOutcome> {
    if graph.num_nodes() != walls.len() + 1 {
        return Err(Error::InvalidInput("slab graph must have one node per wall plus the slab".into()));
    }
    let pts = to_2d(&slab.plane, slab_points);
    let mut start = MeshFragment::from_mesh(slab);
    start.support = count_2d(&start.polygon_2d(), &pts);
    let mut fragments = alloc::vec![start];
    let mut trace = Vec::new();
    for &w in graph.neighbors(walls.len()) {
        let mut next = Vec::new();
        let mut step = ClipStep {
            wall: w,
            fragments_in: fragments.len(),
            fragments_out: 0,
            supports: Vec::new(),
            dropped: 0,
        };
        for frag in &fragments {
            let (p, n) = clip_polygon_by_plane(frag, &walls[w].plane);
            for mut part in [p, n].into_iter().flatten() {
                part.support = count_2d(&part.polygon_2d(), &pts);
                step.supports.push(part.support);
                if cfg.keeps(part.support) {
                    next.push(part);
                } else {
                    step.dropped += 1;
                }
            }
        }
        step.fragments_out = next.len();
        trace.push(step);
        fragments = next;
        if fragments.is_empty() {
            return Err(Error::SlabUnsupported(cfg.th_clip));
        }
    }
    Ok(ClipOutcome { fragments, trace })
}
