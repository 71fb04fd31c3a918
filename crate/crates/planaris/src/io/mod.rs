//! Point cloud, mesh and vertex-group files.

pub mod obj;
pub mod ply;
pub mod vg;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use planaris_core::{Point3, PointCloud, TriangleMesh, Vec3};

use ply::{Element, PlyData, PlyFormat, ScalarType};
pub use vg::VertexGroupFile;

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("truncated file: {0}")]
    Truncated(String),
    #[error("{0}")]
    Invalid(String),
    #[error("group {group}: point index {index} out of range for {len} points")]
    GroupIndex { group: usize, index: usize, len: usize },
    #[error("point {point} belongs to both group {first} and group {second}")]
    OverlappingGroups { point: usize, first: usize, second: usize },
    #[error(transparent)]
    Core(#[from] planaris_core::Error),
}

/// A [`FormatError`] tagged with the file it came from.
#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct FileError {
    pub path: PathBuf,
    #[source]
    pub source: FormatError,
}

pub type Result<T> = std::result::Result<T, FileError>;

fn at<T>(path: &Path, r: std::result::Result<T, FormatError>) -> Result<T> {
    r.map_err(|source| FileError { path: path.to_path_buf(), source })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    at(path, File::open(path).map(BufReader::new).map_err(FormatError::from))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    at(path, File::create(path).map(BufWriter::new).map_err(FormatError::from))
}

fn extension(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_ascii_lowercase()
}

fn cloud_from_ply(data: &PlyData) -> std::result::Result<PointCloud, FormatError> {
    let v = data
        .element("vertex")
        .ok_or_else(|| FormatError::Invalid("no 'vertex' element".into()))?;
    let col = |n: &str| v.scalar(n);
    let (Some(x), Some(y), Some(z)) = (col("x"), col("y"), col("z")) else {
        return Err(FormatError::Invalid("vertex element lacks x, y or z".into()));
    };
    let mut points = Vec::with_capacity(v.count);
    for i in 0..v.count {
        let p = Point3::new(x[i], y[i], z[i]);
        if !p.coords.iter().all(|c| c.is_finite()) {
            return Err(FormatError::Invalid(format!("vertex {i} has a non-finite coordinate")));
        }
        points.push(p);
    }
    let normals = match (col("nx"), col("ny"), col("nz")) {
        (Some(nx), Some(ny), Some(nz)) => {
            let mut out = Vec::with_capacity(v.count);
            for i in 0..v.count {
                out.push(
                    vg::unit_normal(Vec3::new(nx[i], ny[i], nz[i]))
                        .ok_or_else(|| FormatError::Invalid(format!("vertex {i} has a zero or non-finite normal")))?,
                );
            }
            Some(out)
        }
        _ => None,
    };
    Ok(PointCloud::new(points, normals)?)
}

/// Reads a PLY point cloud; normals are loaded when `nx, ny, nz` exist.
pub fn load_point_cloud(path: &Path) -> Result<PointCloud> {
    let r = open(path)?;
    at(path, ply::read_ply(r).and_then(|d| cloud_from_ply(&d)))
}

/// Extra per-vertex integer columns written after positions and normals.
pub type ExtraColumn<'a> = (&'a str, ScalarType, Vec<f64>);

pub fn cloud_ply(cloud: &PointCloud, format: PlyFormat, extra: Vec<ExtraColumn<'_>>) -> PlyData {
    let n = cloud.len();
    let c = |k: usize| cloud.points.iter().map(|p| p[k]).collect();
    let mut v = Element::new("vertex", n)
        .with_scalar("x", ScalarType::F64, c(0))
        .with_scalar("y", ScalarType::F64, c(1))
        .with_scalar("z", ScalarType::F64, c(2));
    if let Some(ns) = &cloud.normals {
        for (k, name) in ["nx", "ny", "nz"].into_iter().enumerate() {
            v = v.with_scalar(name, ScalarType::F64, ns.iter().map(|q| q[k]).collect());
        }
    }
    for (name, ty, values) in extra {
        v = v.with_scalar(name, ty, values);
    }
    PlyData { format, elements: vec![v] }
}

pub fn save_point_cloud(path: &Path, cloud: &PointCloud, format: PlyFormat) -> Result<()> {
    save_ply(path, &cloud_ply(cloud, format, Vec::new()))
}

pub fn save_ply(path: &Path, data: &PlyData) -> Result<()> {
    let w = create(path)?;
    at(path, ply::write_ply(w, data))
}

fn mesh_from_ply(data: &PlyData) -> std::result::Result<TriangleMesh, FormatError> {
    let cloud = cloud_from_ply(data)?;
    let mut faces = Vec::new();
    if let Some(f) = data.element("face") {
        let lists = f
            .list(&["vertex_indices", "vertex_index"])
            .ok_or_else(|| FormatError::Invalid("face element lacks vertex_indices".into()))?;
        for l in lists {
            if l.len() < 3 {
                return Err(FormatError::Invalid("face with fewer than three vertices".into()));
            }
            for k in 1..l.len() - 1 {
                faces.push([l[0] as usize, l[k] as usize, l[k + 1] as usize]);
            }
        }
    }
    Ok(TriangleMesh::new(cloud.points, faces)?)
}

pub fn mesh_ply(mesh: &TriangleMesh, format: PlyFormat) -> PlyData {
    let c = |k: usize| mesh.vertices.iter().map(|p| p[k]).collect();
    PlyData {
        format,
        elements: vec![
            Element::new("vertex", mesh.vertices.len())
                .with_scalar("x", ScalarType::F64, c(0))
                .with_scalar("y", ScalarType::F64, c(1))
                .with_scalar("z", ScalarType::F64, c(2)),
            Element::new("face", mesh.faces.len()).with_list(
                "vertex_indices",
                ScalarType::U8,
                ScalarType::I32,
                mesh.faces.iter().map(|f| f.iter().map(|&i| i as u32).collect()).collect(),
            ),
        ],
    }
}

/// Reads an OBJ or PLY mesh, chosen by extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let r = open(path)?;
    match extension(path).as_str() {
        "obj" => at(path, obj::read_obj(r)),
        "ply" => at(path, ply::read_ply(r).and_then(|d| mesh_from_ply(&d))),
        other => at(path, Err(FormatError::Invalid(format!("unsupported mesh extension '{other}'")))),
    }
}

/// Writes an OBJ or binary PLY mesh, chosen by extension. Meshes with
/// out-of-range indices are refused before the file is created.
pub fn save_mesh(path: &Path, mesh: &TriangleMesh) -> Result<()> {
    at(path, mesh.validate().map_err(FormatError::from))?;
    match extension(path).as_str() {
        "obj" => {
            let w = create(path)?;
            at(path, obj::write_obj(w, mesh))
        }
        "ply" => save_ply(path, &mesh_ply(mesh, PlyFormat::BinaryLittleEndian)),
        other => at(path, Err(FormatError::Invalid(format!("unsupported mesh extension '{other}'")))),
    }
}

pub fn load_vg(path: &Path) -> Result<VertexGroupFile> {
    let r = open(path)?;
    at(path, vg::read_vg(r))
}

pub fn save_vg(path: &Path, cloud: &PointCloud, primitives: &[planaris_core::PlanarPrimitive]) -> Result<()> {
    let w = create(path)?;
    at(path, vg::write_vg(w, cloud, primitives))
}

/// Path with `.partial` appended to its file name.
pub fn partial_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".partial");
    path.with_file_name(name)
}
