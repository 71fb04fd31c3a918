//! Which meshes take part in vertex translation and clipping together.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::geom::Aabb;
use crate::planemesh::PlanarMesh;
use crate::vtrans::{intersection_line, point_line_distance, VTransConfig};

/// Undirected graph over mesh positions `0..num_nodes`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AdjacencyGraph {
    edges: BTreeSet<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl AdjacencyGraph {
    pub fn new(num_nodes: usize) -> Self {
        Self {
            edges: BTreeSet::new(),
            neighbors: alloc::vec![Vec::new(); num_nodes],
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.neighbors.len()
    }

    /// Adds the undirected edge `{i, j}`. Self-edges are ignored.
    pub fn add_edge(&mut self, i: usize, j: usize) {
        assert!(i < self.num_nodes() && j < self.num_nodes(), "edge outside graph");
        if i == j {
            return;
        }
        let key = (i.min(j), i.max(j));
        if self.edges.insert(key) {
            for (a, b) in [(i, j), (j, i)] {
                let list = &mut self.neighbors[a];
                let at = list.partition_point(|&x| x < b);
                list.insert(at, b);
            }
        }
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    /// Neighbours of `i`, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    /// Edges as `(low, high)` pairs, ascending.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Graphviz rendering with one label per node.
    pub fn to_dot(&self, name: &str, labels: &[String]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "graph {name} {{");
        for i in 0..self.num_nodes() {
            let label = labels.get(i).map(String::as_str).unwrap_or("");
            let _ = writeln!(s, "  n{i} [label=\"{}\"];", label.replace('"', "'"));
        }
        for (a, b) in self.edges() {
            let _ = writeln!(s, "  n{a} -- n{b};");
        }
        s.push_str("}\n");
        s
    }
}

fn vertex_line_distance(m: &PlanarMesh, x: &crate::Point3, d: &crate::Vec3) -> f64 {
    m.mesh
        .vertices
        .iter()
        .map(|p| point_line_distance(p, x, d))
        .fold(f64::INFINITY, f64::min)
}

/// Wall pairs that are not parallel and whose shared line passes within
/// `th_sep` of a vertex of both walls.
pub fn build_wall_adjacency(walls: &[PlanarMesh], cfg: &VTransConfig) -> AdjacencyGraph {
    let n = walls.len();
    let rows = crate::par::map_range(n, |i| {
        let mut hits = Vec::new();
        for j in i + 1..n {
            let Some((x, d)) = intersection_line(&walls[i].plane, &walls[j].plane, cfg.th_parallel) else {
                continue;
            };
            if vertex_line_distance(&walls[i], &x, &d) <= cfg.th_sep
                && vertex_line_distance(&walls[j], &x, &d) <= cfg.th_sep
            {
                hits.push(j);
            }
        }
        hits
    });
    let mut g = AdjacencyGraph::new(n);
    for (i, row) in rows.into_iter().enumerate() {
        for j in row {
            g.add_edge(i, j);
        }
    }
    g
}

fn footprint_overlaps(a: &Aabb, b: &Aabb) -> bool {
    a.min.x <= b.max.x && b.min.x <= a.max.x && a.min.y <= b.max.y && b.min.y <= a.max.y
}

/// Graph with the walls as nodes `0..walls.len()` and the slab as the last
/// node, linked to every wall whose horizontal footprint meets the slab's
/// footprint dilated by `th_sep`.
pub fn build_ceiling_adjacency(slab: &PlanarMesh, walls: &[PlanarMesh], th_sep: f64) -> AdjacencyGraph {
    let n = walls.len();
    let mut g = AdjacencyGraph::new(n + 1);
    let zone = slab.mesh.bounds().dilated(th_sep);
    for (i, w) in walls.iter().enumerate() {
        if footprint_overlaps(&zone, &w.mesh.bounds()) {
            g.add_edge(n, i);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::PlaneParams;
    use crate::planemesh::MeshKind;
    use alloc::vec;

    fn wall_x(x0: f64, y0: f64, y1: f64, id: usize) -> PlanarMesh {
        let p = PlaneParams::new(1.0, 0.0, 0.0, -x0).unwrap();
        PlanarMesh::rectangle(p, [y0, y1], [0.0, 2.8], id, MeshKind::Wall).unwrap()
    }

    fn wall_y(y0: f64, x0: f64, x1: f64, id: usize) -> PlanarMesh {
        let p = PlaneParams::new(0.0, 1.0, 0.0, -y0).unwrap();
        PlanarMesh::rectangle(p, [-x1, -x0], [0.0, 2.8], id, MeshKind::Wall).unwrap()
    }

    fn room() -> Vec<PlanarMesh> {
        vec![
            wall_y(0.0, 0.0, 4.0, 0),
            wall_x(4.0, 0.0, 3.0, 1),
            wall_y(3.0, 0.0, 4.0, 2),
            wall_x(0.0, 0.0, 3.0, 3),
        ]
    }

    #[test]
    fn room_walls_form_a_cycle() {
        let g = build_wall_adjacency(&room(), &VTransConfig::default());
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 3), (1, 2), (2, 3)]);
        assert!(!g.has_edge(0, 2) && !g.has_edge(1, 3));
        for i in 0..4 {
            assert_eq!(g.degree(i), 2);
        }
    }

    #[test]
    fn hallway_pair_is_not_adjacent() {
        // The shared line (x = 4.8, y = 0) is 0.8 m beyond both walls' ends.
        let walls = vec![wall_y(0.0, 0.0, 4.0, 0), wall_x(4.8, 0.8, 3.0, 1)];
        let g = build_wall_adjacency(&walls, &VTransConfig::default());
        assert_eq!(g.num_edges(), 0);
        let wide = VTransConfig {
            th_sep: 1.2,
            ..Default::default()
        };
        assert!(build_wall_adjacency(&walls, &wide).has_edge(0, 1));
    }

    #[test]
    fn symmetric_and_permutation_stable() {
        let walls = room();
        let g = build_wall_adjacency(&walls, &VTransConfig::default());
        let perm = [2, 0, 3, 1];
        let shuffled: Vec<PlanarMesh> = perm.iter().map(|&i| walls[i].clone()).collect();
        let h = build_wall_adjacency(&shuffled, &VTransConfig::default());
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(h.has_edge(a, b), g.has_edge(perm[a], perm[b]));
                assert_eq!(g.has_edge(a, b), g.has_edge(b, a));
            }
        }
    }

    #[test]
    fn ceiling_neighbours() {
        let ceiling = PlanarMesh::rectangle(
            PlaneParams::new(0.0, 0.0, -1.0, 2.8).unwrap(),
            [0.0, 4.0],
            [-3.0, 0.0],
            9,
            MeshKind::Ceiling,
        )
        .unwrap();
        let mut walls = room();
        walls.push(wall_x(10.0, 0.0, 3.0, 4));
        // touches the ceiling boundary only through the dilation
        walls.push(wall_x(4.3, 0.0, 3.0, 5));
        let g = build_ceiling_adjacency(&ceiling, &walls, 0.5);
        assert_eq!(g.neighbors(6), &[0, 1, 2, 3, 5]);
        assert_eq!(g.degree(4), 0);
    }

    #[test]
    fn dot_output() {
        let mut g = AdjacencyGraph::new(2);
        g.add_edge(1, 0);
        g.add_edge(0, 0);
        let dot = g.to_dot("walls", &["a".into(), "b".into()]);
        assert!(dot.contains("n0 -- n1;"));
        assert_eq!(g.num_edges(), 1);
    }
}
