//! Closing wall corners by moving rectangle edges onto shared intersection
//! lines.

use alloc::vec::Vec;

use nalgebra::Matrix3;

use crate::adjacency::AdjacencyGraph;
use crate::geom::{PlaneParams, Point3, Vec3};
use crate::linalg::solve3;
use crate::planemesh::PlanarMesh;
use crate::{par, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct VTransConfig {
    /// Pairs whose normal cross product has every component below this are
    /// treated as parallel.
    pub th_parallel: f64,
    /// Largest allowed vertex translation (m).
    pub th_sep: f64,
}

impl Default for VTransConfig {
    fn default() -> Self {
        Self {
            th_parallel: 0.001,
            th_sep: 0.5,
        }
    }
}

impl VTransConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.th_parallel > 0.0 && self.th_sep > 0.0) {
            return Err(Error::InvalidConfig("th_parallel and th_sep must be positive".into()));
        }
        Ok(())
    }
}

const MIN_DET: f64 = 1e-9;

/// A point on the line shared by two planes, taken on `z = 0`.
pub fn plane_intersection_point(a: &PlaneParams, b: &PlaneParams) -> Result<Point3> {
    #[rustfmt::skip]
    let m = Matrix3::new(
        0.0, 0.0, 1.0,
        a.a(), a.b(), a.c(),
        b.a(), b.b(), b.c(),
    );
    let rhs = Vec3::new(0.0, -a.d(), -b.d());
    solve3(&m, &rhs, MIN_DET)
        .map(Point3::from)
        .ok_or(Error::NoUniqueIntersection)
}

/// Direction of the intersection line, `n_i × n_j`, not normalized.
pub fn intersection_direction(ni: &Vec3, nj: &Vec3) -> Vec3 {
    ni.cross(nj)
}

/// True when every component of `dir` is below `th_parallel` in magnitude.
pub fn is_parallel(dir: &Vec3, th_parallel: f64) -> bool {
    dir.iter().all(|c| c.abs() < th_parallel)
}

/// Distance from `p` to the line through `x` with unit direction `d`.
pub fn point_line_distance(p: &Point3, x: &Point3, d: &Vec3) -> f64 {
    let r = p - x;
    (r - d * r.dot(d)).norm()
}

/// Line shared by two walls as `(point, unit direction)`, or `None` when the
/// planes are parallel or the system has no unique solution.
pub fn intersection_line(a: &PlaneParams, b: &PlaneParams, th_parallel: f64) -> Option<(Point3, Vec3)> {
    let dir = intersection_direction(&a.normal().into_inner(), &b.normal().into_inner());
    if is_parallel(&dir, th_parallel) {
        return None;
    }
    match plane_intersection_point(a, b) {
        Ok(x) => Some((x, dir.normalize())),
        Err(_) => {
            log::warn!("planes are not parallel but share no point on z = 0; skipped");
            None
        }
    }
}

/// One attempted vertex move.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Translation {
    /// Position of the wall in the input list.
    pub wall: usize,
    pub neighbor: usize,
    pub vertex: usize,
    pub distance: f64,
    pub applied: bool,
}

const VERTICAL_EDGES: [[usize; 2]; 2] = [[0, 3], [1, 2]];

/// Moves, for each wall and each of its neighbours, the wall's vertical edge
/// nearest the shared line onto that line. Moves longer than `th_sep` are
/// dropped. Neighbours are visited in ascending order and each sees the
/// wall's current corners; plane parameters never change, so walls are
/// independent of each other.
pub fn translate_wall_vertices(
    walls: &[PlanarMesh],
    graph: &AdjacencyGraph,
    cfg: &VTransConfig,
) -> Result<Vec<PlanarMesh>> {
    translate_wall_vertices_traced(walls, graph, cfg).map(|(w, _)| w)
}

pub fn translate_wall_vertices_traced(
    walls: &[PlanarMesh],
    graph: &AdjacencyGraph,
    cfg: &VTransConfig,
) -> Result<(Vec<PlanarMesh>, Vec<Translation>)> {
    cfg.validate()?;
    if graph.num_nodes() < walls.len() {
        return Err(Error::InvalidInput("adjacency graph has fewer nodes than walls".into()));
    }
    for w in walls {
        if !w.is_rectangle() {
            return Err(Error::NonRectangular(w.source));
        }
    }
    let per_wall = par::map_range(walls.len(), |i| translate_one(walls, graph, cfg, i));
    let mut out = Vec::with_capacity(walls.len());
    let mut trace = Vec::new();
    for (mesh, t) in per_wall {
        out.push(mesh);
        trace.extend(t);
    }
    Ok((out, trace))
}

fn translate_one(
    walls: &[PlanarMesh],
    graph: &AdjacencyGraph,
    cfg: &VTransConfig,
    i: usize,
) -> (PlanarMesh, Vec<Translation>) {
    let mut wall = walls[i].clone();
    let mut trace = Vec::new();
    for &j in graph.neighbors(i) {
        if j >= walls.len() {
            continue;
        }
        let Some((x, dir)) = intersection_line(&wall.plane, &walls[j].plane, cfg.th_parallel) else {
            continue;
        };
        let v = &wall.mesh.vertices;
        let edge_dist = |e: &[usize; 2]| {
            point_line_distance(&v[e[0]], &x, &dir) + point_line_distance(&v[e[1]], &x, &dir)
        };
        let edge = if edge_dist(&VERTICAL_EDGES[1]) < edge_dist(&VERTICAL_EDGES[0]) {
            VERTICAL_EDGES[1]
        } else {
            VERTICAL_EDGES[0]
        };
        for k in edge {
            let p = wall.mesh.vertices[k];
            let q = x + dir * (p - x).dot(&dir);
            let distance = (q - p).norm();
            let applied = distance <= cfg.th_sep;
            if applied {
                wall.mesh.vertices[k] = q;
            }
            trace.push(Translation {
                wall: i,
                neighbor: j,
                vertex: k,
                distance,
                applied,
            });
        }
    }
    (wall, trace)
}

/// Largest vertex displacement between two versions of the same walls.
pub fn max_displacement(before: &[PlanarMesh], after: &[PlanarMesh]) -> f64 {
    before
        .iter()
        .zip(after)
        .flat_map(|(a, b)| a.mesh.vertices.iter().zip(&b.mesh.vertices).map(|(p, q)| (p - q).norm()))
        .fold(0.0, f64::max)
}

/// Closest distance between two segments.
pub fn segment_distance(p0: &Point3, p1: &Point3, q0: &Point3, q1: &Point3) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.norm_squared();
    let e = d2.norm_squared();
    let f = d2.dot(&r);
    let (s, t);
    if a <= f64::EPSILON && e <= f64::EPSILON {
        return r.norm();
    }
    if a <= f64::EPSILON {
        s = 0.0;
        t = (f / e).clamp(0.0, 1.0);
    } else {
        let c = d1.dot(&r);
        if e <= f64::EPSILON {
            t = 0.0;
            s = (-c / a).clamp(0.0, 1.0);
        } else {
            let b = d1.dot(&d2);
            let denom = a * e - b * b;
            let mut s0 = if denom > 0.0 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
            let mut t0 = (b * s0 + f) / e;
            if t0 < 0.0 {
                t0 = 0.0;
                s0 = (-c / a).clamp(0.0, 1.0);
            } else if t0 > 1.0 {
                t0 = 1.0;
                s0 = ((b - c) / a).clamp(0.0, 1.0);
            }
            s = s0;
            t = t0;
        }
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Smallest distance between any vertical edge of `a` and any vertical edge
/// of `b`.
pub fn nearest_edge_distance(a: &PlanarMesh, b: &PlanarMesh) -> f64 {
    let (va, vb) = (&a.mesh.vertices, &b.mesh.vertices);
    let mut best = f64::INFINITY;
    for ea in VERTICAL_EDGES {
        for eb in VERTICAL_EDGES {
            best = best.min(segment_distance(&va[ea[0]], &va[ea[1]], &vb[eb[0]], &vb[eb[1]]));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adjacency::build_wall_adjacency;
    use crate::planemesh::MeshKind;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn plane(a: f64, b: f64, c: f64, d: f64) -> PlaneParams {
        PlaneParams::new(a, b, c, d).unwrap()
    }

    /// Wall on the vertical plane `plane` spanning horizontal coordinate
    /// `[s0, s1]` along its frame and z in `[0, h]`.
    fn wall(p: PlaneParams, s: [f64; 2], h: f64, id: usize) -> PlanarMesh {
        PlanarMesh::rectangle(p, s, [0.0, h], id, MeshKind::Wall).unwrap()
    }

    /// Wall along the x axis on `y = y0` covering `x ∈ [x0, x1]`.
    fn wall_y(y0: f64, x0: f64, x1: f64, id: usize) -> PlanarMesh {
        let p = plane(0.0, 1.0, 0.0, -y0);
        let (u, _) = p.frame();
        let a = [x0 * u.x, x1 * u.x];
        wall(p, [a[0].min(a[1]), a[0].max(a[1])], 2.8, id)
    }

    /// Wall on `x = x0` covering `y ∈ [y0, y1]`.
    fn wall_x(x0: f64, y0: f64, y1: f64, id: usize) -> PlanarMesh {
        let p = plane(1.0, 0.0, 0.0, -x0);
        let (u, _) = p.frame();
        let a = [y0 * u.y, y1 * u.y];
        wall(p, [a[0].min(a[1]), a[0].max(a[1])], 2.8, id)
    }

    #[test]
    fn intersection_points() {
        let x = plane_intersection_point(&plane(1.0, 0.0, 0.0, 0.0), &plane(0.0, 1.0, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(x, Point3::origin(), epsilon = 1e-12);
        let x = plane_intersection_point(&plane(1.0, 0.0, 0.0, -1.0), &plane(0.0, 1.0, 0.0, -2.0)).unwrap();
        assert_abs_diff_eq!(x, Point3::new(1.0, 2.0, 0.0), epsilon = 1e-12);
        let a = plane(1.0, 1.0, 0.0, -2.0);
        let b = plane(1.0, -1.0, 0.0, 0.0);
        let x = plane_intersection_point(&a, &b).unwrap();
        assert_abs_diff_eq!(x, Point3::new(1.0, 1.0, 0.0), epsilon = 1e-12);
        assert!(a.signed_distance(&x).abs() < 1e-9 && b.signed_distance(&x).abs() < 1e-9);
        assert_eq!(
            plane_intersection_point(&plane(1.0, 0.0, 0.0, 0.0), &plane(1.0, 0.0, 0.0, -3.0)),
            Err(Error::NoUniqueIntersection)
        );
    }

    #[test]
    fn directions() {
        assert_eq!(intersection_direction(&Vec3::x(), &Vec3::y()), Vec3::z());
        assert!(is_parallel(&intersection_direction(&Vec3::x(), &Vec3::x()), 0.001));
        let d = intersection_direction(&Vec3::x(), &Vec3::new(1.0, 1.0, 0.0).normalize());
        assert_abs_diff_eq!(d, Vec3::new(0.0, 0.0, 1.0 / 2f64.sqrt()), epsilon = 1e-12);
    }

    #[test]
    fn corner_gap_is_closed() {
        let walls = vec![wall_y(0.0, 0.0, 3.9, 0), wall_x(4.0, 0.0, 3.0, 1)];
        let cfg = VTransConfig::default();
        let g = build_wall_adjacency(&walls, &cfg);
        assert!(g.has_edge(0, 1));
        let out = translate_wall_vertices(&walls, &g, &cfg).unwrap();
        let xs: Vec<f64> = out[0].mesh.vertices.iter().map(|p| p.x).collect();
        assert!(xs.iter().filter(|&&x| (x - 4.0).abs() < 1e-9).count() == 2);
        assert!(nearest_edge_distance(&out[0], &out[1]) < 1e-9);
        for w in &out {
            for p in &w.mesh.vertices {
                assert!(w.plane.signed_distance(p).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn meeting_walls_are_a_fixed_point() {
        let walls = vec![wall_y(0.0, 0.0, 4.0, 0), wall_x(4.0, 0.0, 3.0, 1)];
        let cfg = VTransConfig::default();
        let g = build_wall_adjacency(&walls, &cfg);
        let out = translate_wall_vertices(&walls, &g, &cfg).unwrap();
        assert!(max_displacement(&walls, &out) < 1e-12);
    }

    #[test]
    fn far_pair_is_rejected_by_th_sep() {
        // Line x = 4.8, y = 0 lies 0.8 m beyond the first wall's end.
        let walls = vec![wall_y(0.0, 0.0, 4.0, 0), wall_x(4.8, 0.0, 3.0, 1)];
        let cfg = VTransConfig::default();
        let mut g = AdjacencyGraph::new(2);
        g.add_edge(0, 1);
        let (out, trace) = translate_wall_vertices_traced(&walls, &g, &cfg).unwrap();
        assert!(trace.iter().filter(|t| t.wall == 0).all(|t| !t.applied && (t.distance - 0.8).abs() < 1e-9));
        assert_eq!(out[0], walls[0]);
    }

    #[test]
    fn idempotent_on_a_room() {
        let walls = vec![
            wall_y(0.0, 0.05, 3.9, 0),
            wall_x(4.0, 0.1, 2.95, 1),
            wall_y(3.0, 0.0, 3.8, 2),
            wall_x(0.0, 0.2, 3.0, 3),
        ];
        let cfg = VTransConfig::default();
        let g = build_wall_adjacency(&walls, &cfg);
        let once = translate_wall_vertices(&walls, &g, &cfg).unwrap();
        let twice = translate_wall_vertices(&once, &g, &cfg).unwrap();
        assert!(max_displacement(&once, &twice) < 1e-9);
        for (i, j) in g.edges() {
            assert!(nearest_edge_distance(&once[i], &once[j]) < 1e-6);
        }
    }

    #[test]
    fn clipped_fragment_is_refused() {
        let mut w = wall_y(0.0, 0.0, 4.0, 7);
        w.mesh.vertices.push(Point3::new(2.0, 0.0, 3.0));
        w.mesh.faces.push([2, 4, 3]);
        let g = AdjacencyGraph::new(1);
        assert_eq!(
            translate_wall_vertices(&[w], &g, &VTransConfig::default()),
            Err(Error::NonRectangular(7))
        );
    }

    #[test]
    fn segment_distance_cases() {
        let o = Point3::origin();
        let d = segment_distance(&o, &Point3::new(1.0, 0.0, 0.0), &Point3::new(0.5, 1.0, 0.0), &Point3::new(0.5, 2.0, 0.0));
        assert_abs_diff_eq!(d, 1.0, epsilon = 1e-12);
        let d = segment_distance(&o, &Point3::new(0.0, 0.0, 1.0), &Point3::new(1.0, 1.0, 0.0), &Point3::new(1.0, 1.0, 1.0));
        assert_abs_diff_eq!(d, 2f64.sqrt(), epsilon = 1e-12);
    }
}
