//! Face counts and cloud-to-mesh distance.

use alloc::vec::Vec;

// Unused when std is linked elsewhere in the build and provides inherent float math.
#[allow(unused_imports)]
use num_traits::Float;

use crate::geom::{Aabb, Point3, TriangleMesh};
use crate::{par, Error, Result};

/// Closest point to `p` on triangle `abc`.
pub fn closest_point_on_triangle(p: &Point3, a: &Point3, b: &Point3, c: &Point3) -> Point3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}

pub fn point_triangle_distance_sq(p: &Point3, tri: &[Point3; 3]) -> f64 {
    (closest_point_on_triangle(p, &tri[0], &tri[1], &tri[2]) - p).norm_squared()
}

const BVH_LEAF: usize = 4;

#[derive(Debug, Clone)]
struct BvhNode {
    bounds: Aabb,
    /// Leaf range into `order` when `left == usize::MAX`.
    start: usize,
    end: usize,
    left: usize,
    right: usize,
}

/// Bounding-volume hierarchy over a mesh's triangles.
#[derive(Debug, Clone)]
pub struct Bvh {
    triangles: Vec<[Point3; 3]>,
    order: Vec<usize>,
    nodes: Vec<BvhNode>,
}

impl Bvh {
    pub fn new(mesh: &TriangleMesh) -> Self {
        let triangles: Vec<[Point3; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
        let mut bvh = Bvh {
            order: (0..triangles.len()).collect(),
            triangles,
            nodes: Vec::new(),
        };
        if !bvh.triangles.is_empty() {
            bvh.build(0, bvh.triangles.len());
        }
        bvh
    }

    fn bounds_of(&self, start: usize, end: usize) -> Aabb {
        let mut b = Aabb::empty();
        for &t in &self.order[start..end] {
            for p in &self.triangles[t] {
                b.grow(p);
            }
        }
        b
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        let bounds = self.bounds_of(start, end);
        self.nodes.push(BvhNode {
            bounds,
            start,
            end,
            left: usize::MAX,
            right: usize::MAX,
        });
        if end - start <= BVH_LEAF {
            return id;
        }
        let ext = bounds.extent();
        let axis = if ext.x >= ext.y && ext.x >= ext.z {
            0
        } else if ext.y >= ext.z {
            1
        } else {
            2
        };
        let tris = &self.triangles;
        let key = |t: usize| tris[t][0][axis] + tris[t][1][axis] + tris[t][2][axis];
        let mid = start + (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| key(a).total_cmp(&key(b)));
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id].left = left;
        self.nodes[id].right = right;
        id
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Squared distance from `p` to the nearest triangle.
    pub fn nearest_distance_sq(&self, p: &Point3) -> f64 {
        let mut best = f64::INFINITY;
        if self.nodes.is_empty() {
            return best;
        }
        let mut stack = alloc::vec![0usize];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.bounds.distance_sq(p) >= best {
                continue;
            }
            if node.left == usize::MAX {
                for &t in &self.order[node.start..node.end] {
                    best = best.min(point_triangle_distance_sq(p, &self.triangles[t]));
                }
            } else {
                let (l, r) = (node.left, node.right);
                let (dl, dr) = (self.nodes[l].bounds.distance_sq(p), self.nodes[r].bounds.distance_sq(p));
                // visit the nearer child first
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best
    }
}

fn rmse_from(sq: &[f64]) -> f64 {
    (sq.iter().sum::<f64>() / sq.len() as f64).sqrt()
}

/// Root mean square of each point's distance to the nearest mesh triangle.
pub fn point_mesh_rmse(points: &[Point3], mesh: &TriangleMesh) -> Result<f64> {
    if mesh.faces.is_empty() {
        return Err(Error::Empty("mesh has no faces"));
    }
    if points.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    let bvh = Bvh::new(mesh);
    let sq = par::map_range(points.len(), |i| bvh.nearest_distance_sq(&points[i]));
    Ok(rmse_from(&sq))
}

/// Same as [`point_mesh_rmse`] by scanning every triangle.
pub fn point_mesh_rmse_brute_force(points: &[Point3], mesh: &TriangleMesh) -> Result<f64> {
    if mesh.faces.is_empty() {
        return Err(Error::Empty("mesh has no faces"));
    }
    if points.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    let tris: Vec<[Point3; 3]> = (0..mesh.faces.len()).map(|f| mesh.triangle(f)).collect();
    let sq = par::map_range(points.len(), |i| {
        tris.iter()
            .map(|t| point_triangle_distance_sq(&points[i], t))
            .fold(f64::INFINITY, f64::min)
    });
    Ok(rmse_from(&sq))
}

/// Total triangle count.
pub fn count_faces<'a>(meshes: impl IntoIterator<Item = &'a TriangleMesh>) -> usize {
    meshes.into_iter().map(|m| m.faces.len()).sum()
}
