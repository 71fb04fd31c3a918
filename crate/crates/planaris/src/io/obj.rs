//! Wavefront OBJ, vertex and face records only.

use std::io::{BufRead, Write};

use planaris_core::{Point3, TriangleMesh};

use super::FormatError;

/// Reads `v` and `f` records. Polygons are fan-triangulated, negative
/// indices count back from the last vertex, and `v/vt/vn` tokens use the
/// vertex index. Other records are ignored.
pub fn read_obj(r: impl BufRead) -> Result<TriangleMesh, FormatError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let no = i + 1;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for v in &mut c {
                    let t = toks
                        .next()
                        .ok_or_else(|| FormatError::Parse { line: no, msg: "vertex needs three coordinates".into() })?;
                    *v = t
                        .parse()
                        .map_err(|_| FormatError::Parse { line: no, msg: format!("bad coordinate '{t}'") })?;
                }
                vertices.push(Point3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let mut idx = Vec::new();
                for t in toks {
                    let head = t.split('/').next().unwrap_or("");
                    let k: i64 = head
                        .parse()
                        .map_err(|_| FormatError::Parse { line: no, msg: format!("bad face index '{t}'") })?;
                    let resolved = match k {
                        0 => None,
                        k if k > 0 => Some(k as usize - 1),
                        k => vertices.len().checked_sub(k.unsigned_abs() as usize),
                    };
                    idx.push(resolved.ok_or_else(|| FormatError::Parse {
                        line: no,
                        msg: format!("face index {k} out of range"),
                    })?);
                }
                if idx.len() < 3 {
                    return Err(FormatError::Parse { line: no, msg: "face needs at least three vertices".into() });
                }
                for k in 1..idx.len() - 1 {
                    faces.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok(TriangleMesh::new(vertices, faces)?)
}

/// Writes `mesh` with shortest round-trip float formatting.
pub fn write_obj(mut w: impl Write, mesh: &TriangleMesh) -> Result<(), FormatError> {
    mesh.validate()?;
    let mut out = String::with_capacity(32 * (mesh.vertices.len() + mesh.faces.len()));
    use std::fmt::Write as _;
    for v in &mesh.vertices {
        let _ = writeln!(out, "v {} {} {}", v.x, v.y, v.z);
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    w.write_all(out.as_bytes())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polygons_and_relative_indices() {
        let text = "# quad\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvn 0 0 1\nf 1//1 2//1 3//1 4//1\nf -4 -3 -2\n";
        let m = read_obj(text.as_bytes()).unwrap();
        assert_eq!(m.faces, vec![[0, 1, 2], [0, 2, 3], [0, 1, 2]]);
    }

    #[test]
    fn bad_records() {
        assert!(matches!(
            read_obj("v 0 0\n".as_bytes()),
            Err(FormatError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            read_obj("v 0 0 0\nf 1 2 3\n".as_bytes()),
            Err(FormatError::Core(_))
        ));
    }
}
