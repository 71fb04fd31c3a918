//! The `synth`, `eval` and `sample` subcommands.

use std::path::Path;

use anyhow::Context;
use planaris_core::metrics::{count_faces, point_mesh_rmse};
use planaris_core::sampling::sample_mesh;
use planaris_core::synth::{generate_scene, SceneSpec, SurfaceLabel, SyntheticScene, WallSide};
use serde::Serialize;

use crate::io::{self, ply::PlyFormat, ply::ScalarType};
use crate::report::EvalReport;

pub fn label_code(l: SurfaceLabel) -> u8 {
    match l {
        SurfaceLabel::Wall => 0,
        SurfaceLabel::Ceiling => 1,
        SurfaceLabel::Floor => 2,
        SurfaceLabel::Object => 3,
        SurfaceLabel::Noise => 4,
    }
}

#[derive(Debug, Serialize)]
struct TruthSurface {
    label: SurfaceLabel,
    room: Option<usize>,
    story: Option<usize>,
    side: Option<WallSide>,
    plane: [f64; 4],
    area: f64,
    num_points: usize,
}

#[derive(Debug, Serialize)]
struct Truth<'a> {
    num_points: usize,
    /// Vertex `label` codes in the PLY file.
    label_codes: [(&'static str, u8); 5],
    surfaces: Vec<TruthSurface>,
    room_areas: &'a [f64],
    spec: &'a SceneSpec,
}

pub fn load_scene_spec(path: &Path) -> anyhow::Result<SceneSpec> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("{}: invalid scene spec", path.display()))
}

/// Writes the scene cloud (with `label` and `surface` columns) and its
/// ground truth JSON.
pub fn write_scene(scene: &SyntheticScene, spec: &SceneSpec, cloud: &Path, truth: &Path, format: PlyFormat) -> anyhow::Result<()> {
    let labels = scene.labels.iter().map(|&l| label_code(l) as f64).collect();
    let surface = scene.surface_of.iter().map(|s| s.map_or(-1.0, |k| k as f64)).collect();
    let data = io::cloud_ply(
        &scene.cloud,
        format,
        vec![("label", ScalarType::U8, labels), ("surface", ScalarType::I32, surface)],
    );
    io::save_ply(cloud, &data)?;
    let t = Truth {
        num_points: scene.cloud.len(),
        label_codes: [("wall", 0), ("ceiling", 1), ("floor", 2), ("object", 3), ("noise", 4)],
        surfaces: scene
            .surfaces
            .iter()
            .map(|s| TruthSurface {
                label: s.label,
                room: s.room.map(|r| r.0),
                story: s.room.map(|r| r.1),
                side: s.side,
                plane: s.plane.coefficients(),
                area: s.area,
                num_points: s.num_points,
            })
            .collect(),
        room_areas: &scene.room_areas,
        spec,
    };
    std::fs::write(truth, serde_json::to_string_pretty(&t)? + "\n").with_context(|| format!("cannot write {}", truth.display()))?;
    Ok(())
}

pub fn synth(spec_path: &Path, out: &Path, truth: Option<&Path>, seed: Option<u64>, ascii: bool) -> anyhow::Result<()> {
    let mut spec = load_scene_spec(spec_path)?;
    if let Some(s) = seed {
        spec.seed = s;
    }
    let scene = generate_scene(&spec)?;
    let truth = truth.map(Path::to_path_buf).unwrap_or_else(|| out.with_extension("json"));
    let format = if ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
    write_scene(&scene, &spec, out, &truth, format)?;
    log::info!("{} points, {} surfaces", scene.cloud.len(), scene.surfaces.len());
    Ok(())
}

pub fn eval(cloud: &Path, mesh: &Path) -> anyhow::Result<EvalReport> {
    let c = io::load_point_cloud(cloud)?;
    let m = io::load_mesh(mesh)?;
    let t0 = std::time::Instant::now();
    let rmse = point_mesh_rmse(&c.points, &m)?;
    Ok(EvalReport {
        num_points: c.len(),
        num_primitives: 0,
        num_faces: count_faces([&m]),
        rmse: Some(rmse),
        timings: vec![crate::report::StageTiming { stage: "metrics".into(), seconds: t0.elapsed().as_secs_f64() }],
    })
}

pub fn sample(mesh: &Path, count: usize, seed: u64, out: &Path, ascii: bool) -> anyhow::Result<()> {
    let m = io::load_mesh(mesh)?;
    let c = sample_mesh(&m, count, seed)?;
    let format = if ascii { PlyFormat::Ascii } else { PlyFormat::BinaryLittleEndian };
    io::save_point_cloud(out, &c, format)?;
    Ok(())
}
