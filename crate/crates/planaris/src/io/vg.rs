//! Vertex-group (`.vg`) files: a point cloud plus planar point groups.
//!
//! ```text
//! num_points: N
//! x y z            (N lines)
//! num_colors: C    (C lines of r g b, skipped)
//! num_normals: N
//! nx ny nz         (N lines)
//! num_groups: G
//! group_type: 0
//! num_group_parameters: 4
//! group_parameters: a b c d
//! group_label: name
//! group_color: r g b
//! group_num_point: M
//! i0 i1 ...        (M indices, any line layout)
//! num_children: K  (K nested groups, flattened)
//! ```

use std::io::{BufRead, Write};

use nalgebra::Unit;
use planaris_core::{PlanarPrimitive, PlaneParams, Point3, PointCloud, UnitVector3, Vec3};

use super::FormatError;

#[derive(Debug, Clone, PartialEq)]
pub struct VertexGroupFile {
    pub cloud: PointCloud,
    pub primitives: Vec<PlanarPrimitive>,
}

struct Tokens<I> {
    lines: I,
    line: usize,
    pending: std::collections::VecDeque<String>,
}

impl<I: Iterator<Item = std::io::Result<String>>> Tokens<I> {
    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError::Parse { line: self.line, msg: msg.into() }
    }

    fn next_token(&mut self) -> Result<Option<String>, FormatError> {
        while self.pending.is_empty() {
            match self.lines.next() {
                None => return Ok(None),
                Some(l) => {
                    self.line += 1;
                    self.pending.extend(l?.split_whitespace().map(String::from));
                }
            }
        }
        Ok(self.pending.pop_front())
    }

    fn expect_token(&mut self, what: &str) -> Result<String, FormatError> {
        self.next_token()?
            .ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, FormatError> {
        let t = self.expect_token(what)?;
        t.parse().map_err(|_| self.err(format!("bad {what} '{t}'")))
    }

    /// Next `key:` token, skipping the values of unknown keys.
    fn key(&mut self, allowed: &[&str]) -> Result<Option<String>, FormatError> {
        loop {
            let Some(t) = self.next_token()? else { return Ok(None) };
            let Some(k) = t.strip_suffix(':') else {
                return Err(self.err(format!("expected a 'key:' token, found '{t}'")));
            };
            if allowed.contains(&k) {
                return Ok(Some(k.to_string()));
            }
            log::warn!("vg line {}: skipping unknown key '{k}'", self.line);
            self.pending.clear();
        }
    }

    fn expect_key(&mut self, key: &str) -> Result<(), FormatError> {
        match self.key(&[key])? {
            Some(_) => Ok(()),
            None => Err(self.err(format!("missing '{key}:'"))),
        }
    }

    fn rest_of_line(&mut self) -> Vec<String> {
        self.pending.drain(..).collect()
    }
}

struct RawGroup {
    id: usize,
    params: Option<[f64; 4]>,
    indices: Vec<usize>,
}

fn read_group<I: Iterator<Item = std::io::Result<String>>>(
    t: &mut Tokens<I>,
    out: &mut Vec<RawGroup>,
) -> Result<(), FormatError> {
    let id = out.len();
    let mut params = None;
    let mut indices = Vec::new();
    let keys = [
        "group_type",
        "num_group_parameters",
        "group_parameters",
        "group_label",
        "group_color",
        "group_num_point",
        "num_children",
    ];
    let mut num_params = 0usize;
    loop {
        let Some(key) = t.key(&keys)? else {
            return Err(t.err(format!("group {id} ends before 'num_children:'")));
        };
        match key.as_str() {
            "group_type" => {
                let ty: i64 = t.number("group type")?;
                if ty != 0 {
                    log::warn!("vg group {id}: group_type {ty} treated as a plane");
                }
            }
            "num_group_parameters" => num_params = t.number("parameter count")?,
            "group_parameters" => {
                let mut p = Vec::with_capacity(num_params);
                for _ in 0..num_params {
                    p.push(t.number::<f64>("group parameter")?);
                }
                if num_params == 4 {
                    params = Some([p[0], p[1], p[2], p[3]]);
                } else if num_params != 0 {
                    log::warn!("vg group {id}: {num_params} parameters ignored, plane refit from members");
                }
            }
            "group_label" | "group_color" => {
                t.rest_of_line();
            }
            "group_num_point" => {
                let m: usize = t.number("group point count")?;
                indices.reserve(m);
                for _ in 0..m {
                    indices.push(t.number::<usize>("point index")?);
                }
            }
            "num_children" => {
                let k: usize = t.number("child count")?;
                out.push(RawGroup { id, params, indices });
                for _ in 0..k {
                    read_group(t, out)?;
                }
                return Ok(());
            }
            _ => unreachable!(),
        }
    }
}

/// Reads a vertex-group file. Groups without a 4-parameter plane record get
/// a least-squares plane from their members.
pub fn read_vg(r: impl BufRead) -> Result<VertexGroupFile, FormatError> {
    let mut t = Tokens {
        lines: r.lines(),
        line: 0,
        pending: Default::default(),
    };
    t.expect_key("num_points")?;
    let n: usize = t.number("point count")?;
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x = t.number("x")?;
        let y = t.number("y")?;
        let z = t.number("z")?;
        points.push(Point3::new(x, y, z));
    }
    let mut normals = None;
    let mut raw = Vec::new();
    while let Some(key) = t.key(&["num_colors", "num_normals", "num_groups"])? {
        match key.as_str() {
            "num_colors" => {
                let c: usize = t.number("color count")?;
                for _ in 0..3 * c {
                    t.number::<f64>("color")?;
                }
            }
            "num_normals" => {
                let c: usize = t.number("normal count")?;
                if c != 0 && c != n {
                    return Err(t.err(format!("{c} normals for {n} points")));
                }
                let mut v = Vec::with_capacity(c);
                for _ in 0..c {
                    let x = t.number("nx")?;
                    let y = t.number("ny")?;
                    let z = t.number("nz")?;
                    v.push(unit_normal(Vec3::new(x, y, z)).ok_or_else(|| t.err("zero or non-finite normal"))?);
                }
                if c > 0 {
                    normals = Some(v);
                }
            }
            "num_groups" => {
                let g: usize = t.number("group count")?;
                for _ in 0..g {
                    read_group(&mut t, &mut raw)?;
                }
            }
            _ => unreachable!(),
        }
    }
    let cloud = PointCloud::new(points, normals)?;
    let mut owner: Vec<Option<usize>> = vec![None; cloud.len()];
    let mut primitives = Vec::with_capacity(raw.len());
    for g in raw {
        for &i in &g.indices {
            if i >= cloud.len() {
                return Err(FormatError::GroupIndex { group: g.id, index: i, len: cloud.len() });
            }
            if let Some(first) = owner[i] {
                return Err(FormatError::OverlappingGroups { point: i, first, second: g.id });
            }
            owner[i] = Some(g.id);
        }
        let plane = match g.params {
            Some([a, b, c, d]) => Some(PlaneParams::new(a, b, c, d)?),
            None => None,
        };
        primitives.push(PlanarPrimitive::from_members(&cloud, g.indices, plane)?);
    }
    Ok(VertexGroupFile { cloud, primitives })
}

/// Keeps bit-exact normals that are already unit length.
pub(crate) fn unit_normal(v: Vec3) -> Option<UnitVector3> {
    let n = v.norm();
    if !n.is_finite() || n < 1e-12 {
        return None;
    }
    Some(if (n - 1.0).abs() <= 1e-12 { Unit::new_unchecked(v) } else { Unit::new_normalize(v) })
}

pub fn write_vg(mut w: impl Write, cloud: &PointCloud, primitives: &[PlanarPrimitive]) -> Result<(), FormatError> {
    use std::fmt::Write as _;
    let mut out = String::new();
    let _ = writeln!(out, "num_points: {}", cloud.len());
    for p in &cloud.points {
        let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
    }
    let _ = writeln!(out, "num_colors: 0");
    match &cloud.normals {
        Some(ns) => {
            let _ = writeln!(out, "num_normals: {}", ns.len());
            for n in ns {
                let _ = writeln!(out, "{} {} {}", n.x, n.y, n.z);
            }
        }
        None => {
            let _ = writeln!(out, "num_normals: 0");
        }
    }
    let _ = writeln!(out, "num_groups: {}", primitives.len());
    for (g, prim) in primitives.iter().enumerate() {
        if let Some(&bad) = prim.indices.iter().find(|&&i| i >= cloud.len()) {
            return Err(FormatError::GroupIndex { group: g, index: bad, len: cloud.len() });
        }
        let [a, b, c, d] = prim.plane.coefficients();
        let _ = writeln!(out, "group_type: 0");
        let _ = writeln!(out, "num_group_parameters: 4");
        let _ = writeln!(out, "group_parameters: {a} {b} {c} {d}");
        let _ = writeln!(out, "group_label: group_{g}");
        let _ = writeln!(out, "group_color: 0 0 0");
        let _ = writeln!(out, "group_num_point: {}", prim.indices.len());
        let line: Vec<String> = prim.indices.iter().map(usize::to_string).collect();
        let _ = writeln!(out, "{}", line.join(" "));
        let _ = writeln!(out, "num_children: 0");
    }
    w.write_all(out.as_bytes())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_vg(params: &str, idx: &str) -> String {
        format!(
            "num_points: 5\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n5 5 5\nnum_colors: 0\nnum_normals: 0\nnum_groups: 1\n\
             group_type: 0\n{params}group_label: floor\ngroup_color: 0.1 0.2 0.3\ngroup_num_point: 4\n{idx}\nnum_children: 0\n"
        )
    }

    #[test]
    fn missing_parameters_are_refit() {
        let f = read_vg(square_vg("num_group_parameters: 0\n", "0 1\n2 3").as_bytes()).unwrap();
        assert_eq!(f.primitives.len(), 1);
        let n = f.primitives[0].normal();
        assert!(n.z.abs() > 1.0 - 1e-12);
        assert!(f.primitives[0].plane.d().abs() < 1e-12);
    }

    #[test]
    fn out_of_range_index_names_the_group() {
        let err = read_vg(square_vg("", "0 1 2 10").as_bytes()).unwrap_err();
        assert!(matches!(err, FormatError::GroupIndex { group: 0, index: 10, .. }), "{err}");
    }

    #[test]
    fn unknown_keys_are_skipped() {
        let text = square_vg("num_group_parameters: 4\ngroup_parameters: 0 0 1 0\nsome_extension: 1 2 3\n", "0 1 2 3");
        let f = read_vg(text.as_bytes()).unwrap();
        assert_eq!(f.primitives[0].indices, vec![0, 1, 2, 3]);
    }
}
