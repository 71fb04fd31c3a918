//! Planar polygon helpers: area, containment and triangulation.

use alloc::vec::Vec;

pub type Vec2 = nalgebra::Vector2<f64>;

/// Signed area, positive for counter-clockwise loops.
pub fn signed_area(poly: &[Vec2]) -> f64 {
    let n = poly.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        s += a.x * b.y - b.x * a.y;
    }
    0.5 * s
}

fn cross(o: &Vec2, a: &Vec2, b: &Vec2) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

fn on_segment(p: &Vec2, a: &Vec2, b: &Vec2, tol: f64) -> bool {
    let ab = b - a;
    let len2 = ab.norm_squared();
    if len2 == 0.0 {
        return (p - a).norm() <= tol;
    }
    let t = ((p - a).dot(&ab) / len2).clamp(0.0, 1.0);
    (a + ab * t - p).norm() <= tol
}

/// Even-odd containment test; points within `tol` of the boundary count as
/// inside.
pub fn point_in_polygon(p: &Vec2, poly: &[Vec2], tol: f64) -> bool {
    let n = poly.len();
    if n < 3 {
        return false;
    }
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (&poly[i], &poly[j]);
        if on_segment(p, a, b, tol) {
            return true;
        }
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Drops repeated vertices and vertices lying on the segment between their
/// neighbours. Returns the kept indices.
pub fn simplify(poly: &[Vec2], tol: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..poly.len()).collect();
    loop {
        let n = idx.len();
        if n < 3 {
            return idx;
        }
        let mut removed = false;
        for k in 0..n {
            let prev = &poly[idx[(k + n - 1) % n]];
            let cur = &poly[idx[k]];
            let next = &poly[idx[(k + 1) % n]];
            let base = (next - prev).norm();
            let dup = (cur - prev).norm() <= tol;
            let flat = base > 0.0 && cross(prev, cur, next).abs() / base <= tol;
            if dup || flat {
                idx.remove(k);
                removed = true;
                break;
            }
        }
        if !removed {
            return idx;
        }
    }
}

/// Ear-clipping triangulation of a simple polygon. Triangles index into
/// `poly` and follow its winding.
pub fn triangulate(poly: &[Vec2]) -> Vec<[usize; 3]> {
    let mut idx = simplify(poly, 1e-12);
    let mut out = Vec::new();
    if idx.len() < 3 {
        return out;
    }
    let ccw = signed_area(&idx.iter().map(|&i| poly[i]).collect::<Vec<_>>()) > 0.0;
    let convex = |a: &Vec2, b: &Vec2, c: &Vec2| {
        let z = cross(a, b, c);
        if ccw { z > 0.0 } else { z < 0.0 }
    };
    let mut guard = 0;
    while idx.len() > 3 && guard < 10 * poly.len() * poly.len() + 10 {
        guard += 1;
        let n = idx.len();
        let mut clipped = false;
        for k in 0..n {
            let (ia, ib, ic) = (idx[(k + n - 1) % n], idx[k], idx[(k + 1) % n]);
            let (a, b, c) = (&poly[ia], &poly[ib], &poly[ic]);
            if !convex(a, b, c) {
                continue;
            }
            let blocked = idx.iter().any(|&m| {
                if m == ia || m == ib || m == ic {
                    return false;
                }
                let p = &poly[m];
                let (d1, d2, d3) = (cross(a, b, p), cross(b, c, p), cross(c, a, p));
                if ccw {
                    d1 >= 0.0 && d2 >= 0.0 && d3 >= 0.0
                } else {
                    d1 <= 0.0 && d2 <= 0.0 && d3 <= 0.0
                }
            });
            if !blocked {
                out.push([ia, ib, ic]);
                idx.remove(k);
                clipped = true;
                break;
            }
        }
        if !clipped {
            // Not simple; fan the rest so the caller still gets full coverage.
            log::warn!("ear clipping stalled; falling back to a fan");
            for k in 1..idx.len() - 1 {
                out.push([idx[0], idx[k], idx[k + 1]]);
            }
            return out;
        }
    }
    out.push([idx[0], idx[1], idx[2]]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn v(x: f64, y: f64) -> Vec2 {
        Vec2::new(x, y)
    }

    fn l_shape() -> Vec<Vec2> {
        vec![v(0.0, 0.0), v(4.0, 0.0), v(4.0, 3.0), v(2.0, 3.0), v(2.0, 6.0), v(0.0, 6.0)]
    }

    fn tri_area(p: &[Vec2], t: &[usize; 3]) -> f64 {
        0.5 * cross(&p[t[0]], &p[t[1]], &p[t[2]])
    }

    #[test]
    fn areas() {
        assert_abs_diff_eq!(signed_area(&l_shape()), 18.0, epsilon = 1e-12);
        let mut cw = l_shape();
        cw.reverse();
        assert_abs_diff_eq!(signed_area(&cw), -18.0, epsilon = 1e-12);
    }

    #[test]
    fn containment_with_boundary() {
        let p = l_shape();
        assert!(point_in_polygon(&v(1.0, 5.0), &p, 1e-9));
        assert!(!point_in_polygon(&v(3.0, 5.0), &p, 1e-9));
        assert!(point_in_polygon(&v(4.0, 1.0), &p, 1e-9));
        assert!(point_in_polygon(&v(2.0, 4.0), &p, 1e-9));
        assert!(point_in_polygon(&v(0.0, 0.0), &p, 1e-9));
    }

    #[test]
    fn ear_clipping_l_shape() {
        let p = l_shape();
        let t = triangulate(&p);
        assert_eq!(t.len(), p.len() - 2);
        let total: f64 = t.iter().map(|t| tri_area(&p, t)).sum();
        assert_abs_diff_eq!(total, 18.0, epsilon = 1e-9);
        assert!(t.iter().all(|t| tri_area(&p, t) > 0.0));
    }

    #[test]
    fn collinear_vertices_are_dropped() {
        let p = vec![v(0.0, 0.0), v(1.0, 0.0), v(2.0, 0.0), v(2.0, 1.0), v(0.0, 1.0), v(0.0, 1.0)];
        assert_eq!(simplify(&p, 1e-12).len(), 4);
        let t = triangulate(&p);
        assert_eq!(t.len(), 2);
        let total: f64 = t.iter().map(|t| tri_area(&p, t)).sum();
        assert_abs_diff_eq!(total, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn clockwise_input_triangulates() {
        let mut p = l_shape();
        p.reverse();
        let t = triangulate(&p);
        let total: f64 = t.iter().map(|t| tri_area(&p, t)).sum();
        assert_abs_diff_eq!(total, -18.0, epsilon = 1e-9);
    }
}
