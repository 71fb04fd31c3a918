//! End-to-end pipeline: primitives, alignment, segmentation, meshing,
//! wall enclosure, slab clipping and evaluation.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::path::{Path, PathBuf};
use std::time::Instant;

use planaris_core::adjacency::{build_ceiling_adjacency, build_wall_adjacency, AdjacencyGraph};
use planaris_core::alignment::{align_scene, SceneAlignment};
use planaris_core::mclip::{clip_structural_plane, ClipOutcome};
use planaris_core::metrics::{count_faces, point_mesh_rmse};
use planaris_core::planemesh::{build_meshes, nearest_axis, MeshKind, PlanarMesh};
use planaris_core::ransac::{detect_planes, estimate_normals};
use planaris_core::segmentation::{extract_non_structured, remove_outliers, segment, SceneSegmentation};
use planaris_core::vtrans::{max_displacement, translate_wall_vertices_traced, Translation};
use planaris_core::{PlanarPrimitive, Point3, PointCloud, RigidRotation, TriangleMesh};
use rayon::prelude::*;

use crate::config::PipelineConfig;
use crate::io::{self, ply::PlyFormat};
use crate::report::{
    AlignmentReport, Counts, PrimitiveReport, QualityFlags, RunReport, SkippedMesh, SlabReport, StageTiming,
    TranslationReport,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Normals,
    Primitives,
    Alignment,
    Segmentation,
    PlaneMesh,
    Adjacency,
    VertexTranslation,
    Clipping,
    Metrics,
    Write,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Load => "load",
            Stage::Normals => "normals",
            Stage::Primitives => "primitives",
            Stage::Alignment => "alignment",
            Stage::Segmentation => "segmentation",
            Stage::PlaneMesh => "planemesh",
            Stage::Adjacency => "adjacency",
            Stage::VertexTranslation => "vtrans",
            Stage::Clipping => "mclip",
            Stage::Metrics => "metrics",
            Stage::Write => "write",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("stage '{stage}' failed: {source}")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: anyhow::Error,
}

/// Artifacts available when a stage failed.
#[derive(Debug, Default)]
pub struct Partial {
    pub mesh: Option<TriangleMesh>,
    pub non_structured: Option<PointCloud>,
    pub report: RunReport,
}

#[derive(Debug, thiserror::Error)]
#[error("{error}")]
pub struct PipelineFailure {
    pub error: StageError,
    pub partial: Partial,
}

/// Where the primitives come from.
#[derive(Debug, Clone, PartialEq)]
pub enum PrimitiveSource {
    Detect,
    Given { primitives: Vec<PlanarPrimitive>, from_cache: bool },
}

#[derive(Debug, Clone)]
pub struct PipelineInput {
    pub cloud: PointCloud,
    pub primitives: PrimitiveSource,
}

#[derive(Debug, Clone)]
pub struct SlabResult {
    pub primitive: usize,
    pub kind: MeshKind,
    pub rectangle: PlanarMesh,
    pub graph: AdjacencyGraph,
    pub outcome: ClipOutcome,
    pub mesh: TriangleMesh,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    /// Input cloud with normals, in the input frame.
    pub input_cloud: PointCloud,
    /// Input cloud (with normals) in the output frame.
    pub cloud: PointCloud,
    /// Primitives in the output frame.
    pub primitives: Vec<PlanarPrimitive>,
    /// Primitives in the input frame, as detected.
    pub detected: Vec<PlanarPrimitive>,
    /// Input-to-output rotation.
    pub rotation: RigidRotation,
    pub alignment: Option<SceneAlignment>,
    pub segmentation: SceneSegmentation,
    /// Wall rectangles before vertex translation.
    pub wall_rectangles: Vec<PlanarMesh>,
    pub walls: Vec<PlanarMesh>,
    pub wall_graph: AdjacencyGraph,
    pub translations: Vec<Translation>,
    pub slabs: Vec<SlabResult>,
    /// Walls, then clipped slabs, in one mesh.
    pub structured_mesh: TriangleMesh,
    pub non_structured: PointCloud,
    pub report: RunReport,
}

impl PipelineResult {
    pub fn structured_points(&self) -> Vec<Point3> {
        self.segmentation
            .structured()
            .flat_map(|i| self.primitives[i].member_points(&self.cloud).copied())
            .collect()
    }

    pub fn adjacency_dot(&self) -> String {
        let wall_labels: Vec<String> = self.walls.iter().map(|w| format!("wall p{}", w.source)).collect();
        let mut out = self.wall_graph.to_dot("walls", &wall_labels);
        for s in &self.slabs {
            let mut labels = wall_labels.clone();
            labels.push(format!("{:?} p{}", s.kind, s.primitive).to_lowercase());
            out.push_str(&s.graph.to_dot(&format!("slab_{}", s.primitive), &labels));
        }
        out
    }
}

struct Run {
    report: RunReport,
    mesh: Option<TriangleMesh>,
    non_structured: Option<PointCloud>,
}

impl Run {
    fn stage<T, E>(&mut self, stage: Stage, f: impl FnOnce() -> Result<T, E>) -> Result<T, Box<PipelineFailure>>
    where
        E: Into<anyhow::Error>,
    {
        log::info!("stage {stage}");
        let t0 = Instant::now();
        let out = f();
        self.report.eval.timings.push(StageTiming {
            stage: stage.name().into(),
            seconds: t0.elapsed().as_secs_f64(),
        });
        out.map_err(|e| {
            let error = StageError { stage, source: e.into() };
            self.report.failed_stage = Some(stage.name().into());
            self.report.error = Some(format!("{:#}", error.source));
            Box::new(PipelineFailure {
                error,
                partial: Partial {
                    mesh: self.mesh.take(),
                    non_structured: self.non_structured.take(),
                    report: std::mem::take(&mut self.report),
                },
            })
        })
    }
}

fn wall_is_off_axis(p: &PlanarPrimitive) -> bool {
    nearest_axis(p.normal()).2 > QualityFlags::WALL_TOLERANCE_DEG
}

/// Runs every stage in memory.
pub fn run_pipeline(input: PipelineInput, cfg: &PipelineConfig) -> Result<PipelineResult, Box<PipelineFailure>> {
    let mut run = Run {
        report: RunReport::default(),
        mesh: None,
        non_structured: None,
    };
    run.stage(Stage::Load, || cfg.validate())?;
    let PipelineInput { cloud, primitives } = input;
    run.report.eval.num_points = cloud.len();

    let cloud = if cloud.has_normals() {
        cloud
    } else {
        run.stage(Stage::Normals, || estimate_normals(&cloud, cfg.normals_k).map(|e| e.cloud))?
    };

    let (detected, source) = match primitives {
        PrimitiveSource::Detect => (run.stage(Stage::Primitives, || detect_planes(&cloud, &cfg.ransac))?, "ransac"),
        PrimitiveSource::Given { primitives, from_cache } => (primitives, if from_cache { "cache" } else { "vg" }),
    };
    run.report.primitives_source = source.into();
    run.report.eval.num_primitives = detected.len();

    let (rotation, alignment) = if cfg.alignment.skip {
        run.report.alignment.skipped = true;
        (RigidRotation::identity(), None)
    } else {
        let a = run.stage(Stage::Alignment, || {
            align_scene(&cloud, &detected, cfg.alignment.up_threshold, cfg.segmentation.wall_angle_deg)
        })?;
        (a.rotation, Some(a))
    };
    let (axis, angle) = rotation.axis_angle();
    run.report.alignment = AlignmentReport {
        skipped: cfg.alignment.skip,
        chosen_plane: alignment.as_ref().map(|a| a.z.chosen_plane),
        upward: alignment.as_ref().map_or(0, |a| a.z.upward),
        downward: alignment.as_ref().map_or(0, |a| a.z.downward),
        angle_deg: angle.to_degrees(),
        axis: axis.map(|a| [a.x, a.y, a.z]),
        rotation: rotation.rows(),
    };
    let input_cloud = cloud;
    let cloud = input_cloud.rotated(&rotation);
    let primitives: Vec<PlanarPrimitive> = detected.iter().map(|p| p.rotated(&rotation)).collect();

    let seg = run.stage(Stage::Segmentation, || segment(&cloud, &primitives, &cfg.segmentation))?;
    run.report.primitives = (0..primitives.len())
        .map(|i| PrimitiveReport {
            id: i,
            label: seg.labels[i],
            tilt_deg: seg.stats.primitives[i].tilt_deg,
            height: seg.stats.primitives[i].height,
            support: primitives[i].num_points(),
        })
        .collect();
    let mut non_structured = extract_non_structured(&cloud, &seg);
    let mut outliers_removed = 0;
    if cfg.remove_outliers {
        let before = non_structured.len();
        non_structured = remove_outliers(&non_structured, seg.params.outlier_k, seg.params.outlier_std_ratio).0;
        outliers_removed = before - non_structured.len();
    }
    run.non_structured = Some(non_structured.clone());
    run.report.counts = Counts {
        ceiling: seg.ceiling.len(),
        slanted: seg.slanted.len(),
        floor: seg.floor.len(),
        walls: seg.walls.len(),
        non_structured_points: non_structured.len(),
        outliers_removed,
    };

    let jobs: Vec<(usize, MeshKind)> = seg
        .walls
        .iter()
        .map(|&i| (i, MeshKind::Wall))
        .chain(seg.ceiling.iter().map(|&i| (i, MeshKind::Ceiling)))
        .chain(seg.slanted.iter().map(|&i| (i, MeshKind::Slanted)))
        .chain(seg.floor.iter().map(|&i| (i, MeshKind::Floor)))
        .collect();
    let built = run.stage(Stage::PlaneMesh, || {
        Ok::<_, anyhow::Error>(build_meshes(&cloud, &primitives, &jobs, cfg.axis_tol_deg))
    })?;
    let mut wall_rectangles = Vec::new();
    let mut slab_rectangles = Vec::new();
    for ((src, kind), m) in jobs.iter().zip(built) {
        match m {
            Ok(m) if *kind == MeshKind::Wall => wall_rectangles.push(m),
            Ok(m) => slab_rectangles.push(m),
            Err(e) => {
                log::warn!("primitive {src}: no mesh ({e})");
                run.report.skipped_meshes.push(SkippedMesh { primitive: *src, reason: e.to_string() });
            }
        }
    }
    let mut preview = TriangleMesh::default();
    for m in wall_rectangles.iter().chain(&slab_rectangles) {
        preview.append(&m.mesh);
    }
    run.mesh = Some(preview);

    let wall_graph = run.stage(Stage::Adjacency, || {
        Ok::<_, anyhow::Error>(build_wall_adjacency(&wall_rectangles, &cfg.vtrans))
    })?;
    let (walls, translations) = run.stage(Stage::VertexTranslation, || {
        translate_wall_vertices_traced(&wall_rectangles, &wall_graph, &cfg.vtrans)
    })?;
    let applied = translations.iter().filter(|t| t.applied).count();
    run.report.vertex_translation = TranslationReport {
        adjacent_pairs: wall_graph.num_edges(),
        applied,
        rejected: translations.len() - applied,
        max_displacement: max_displacement(&wall_rectangles, &walls),
    };
    let mut preview = TriangleMesh::default();
    for m in walls.iter().chain(&slab_rectangles) {
        preview.append(&m.mesh);
    }
    run.mesh = Some(preview);

    let slabs = run.stage(Stage::Clipping, || {
        slab_rectangles
            .par_iter()
            .map(|slab| -> anyhow::Result<SlabResult> {
                let graph = build_ceiling_adjacency(slab, &walls, cfg.vtrans.th_sep);
                let pts: Vec<Point3> = primitives[slab.source].member_points(&cloud).copied().collect();
                let outcome = clip_structural_plane(slab, &pts, &walls, &graph, &cfg.clip)
                    .map_err(|e| anyhow::anyhow!("{:?} primitive {}: {e}", slab.kind, slab.source))?;
                let mesh = outcome.mesh()?;
                Ok(SlabResult {
                    primitive: slab.source,
                    kind: slab.kind,
                    rectangle: slab.clone(),
                    graph,
                    outcome,
                    mesh,
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    run.report.clipping = slabs
        .iter()
        .map(|s| SlabReport {
            primitive: s.primitive,
            kind: s.kind,
            adjacent_walls: s.graph.degree(walls.len()),
            fragments: s.outcome.fragments.len(),
            area: s.outcome.area(),
            trace: s.outcome.trace.clone(),
        })
        .collect();

    let mut structured_mesh = TriangleMesh::default();
    for w in &walls {
        structured_mesh.append(&w.mesh);
    }
    for s in &slabs {
        structured_mesh.append(&s.mesh);
    }
    run.mesh = Some(structured_mesh.clone());

    let structured_points: Vec<Point3> = seg
        .structured()
        .flat_map(|i| primitives[i].member_points(&cloud).copied())
        .collect();
    let rmse = run.stage(Stage::Metrics, || -> anyhow::Result<Option<f64>> {
        if structured_points.is_empty() || structured_mesh.faces.is_empty() {
            return Ok(None);
        }
        Ok(Some(point_mesh_rmse(&structured_points, &structured_mesh)?))
    })?;
    run.report.eval.rmse = rmse;
    run.report.eval.num_faces = count_faces(walls.iter().map(|w| &w.mesh).chain(slabs.iter().map(|s| &s.mesh)));

    let up_dev = primitives
        .iter()
        .map(|p| p.plane.c().abs().min(1.0))
        .fold(None, |m: Option<f64>, c| Some(m.map_or(c, |m| m.max(c))))
        .map(|c| c.acos().to_degrees());
    run.report.flags = QualityFlags {
        up_axis_deviation_deg: up_dev,
        off_axis_walls: seg.walls.iter().copied().filter(|&i| wall_is_off_axis(&primitives[i])).collect(),
        isolated_walls: (0..walls.len())
            .filter(|&i| wall_graph.degree(i) == 0)
            .map(|i| walls[i].source)
            .collect(),
        no_ceiling: seg.ceiling.is_empty() && seg.slanted.is_empty(),
        no_floor: seg.floor.is_empty(),
        degraded: false,
    }
    .finish();

    Ok(PipelineResult {
        input_cloud,
        cloud,
        primitives,
        detected,
        rotation,
        alignment,
        segmentation: seg,
        wall_rectangles,
        walls,
        wall_graph,
        translations,
        slabs,
        structured_mesh,
        non_structured,
        report: run.report,
    })
}

/// File locations for [`run_files`].
#[derive(Debug, Clone)]
pub struct RunPaths {
    pub input: PathBuf,
    pub output: PathBuf,
    pub report: Option<PathBuf>,
    pub dump_adjacency: Option<PathBuf>,
}

impl RunPaths {
    pub fn mesh(&self, cfg: &PipelineConfig) -> PathBuf {
        self.output.join(format!("structured.{}", cfg.mesh_format.extension()))
    }

    pub fn non_structured(&self) -> PathBuf {
        self.output.join("non_structured.ply")
    }

    pub fn report(&self) -> PathBuf {
        self.report.clone().unwrap_or_else(|| self.output.join("report.json"))
    }

    pub fn cache_dir(&self) -> PathBuf {
        self.output.join(".cache")
    }
}

fn is_vg(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("vg"))
}

/// Cache key over the input bytes and every setting that affects detection.
fn cache_key(bytes: &[u8], cfg: &PipelineConfig) -> String {
    let mut h = std::collections::hash_map::DefaultHasher::new();
    bytes.hash(&mut h);
    cfg.normals_k.hash(&mut h);
    serde_json::to_string(&cfg.ransac).expect("config serializes").hash(&mut h);
    format!("{:016x}", h.finish())
}

fn load_input(paths: &RunPaths, cfg: &PipelineConfig) -> anyhow::Result<(PipelineInput, Option<PathBuf>)> {
    if is_vg(&paths.input) {
        let f = io::load_vg(&paths.input)?;
        return Ok((
            PipelineInput {
                cloud: f.cloud,
                primitives: PrimitiveSource::Given { primitives: f.primitives, from_cache: false },
            },
            None,
        ));
    }
    if !cfg.cache {
        let cloud = io::load_point_cloud(&paths.input)?;
        return Ok((PipelineInput { cloud, primitives: PrimitiveSource::Detect }, None));
    }
    let bytes = std::fs::read(&paths.input)?;
    let cached = paths.cache_dir().join(format!("primitives-{}.vg", cache_key(&bytes, cfg)));
    if cached.exists() {
        match io::load_vg(&cached) {
            Ok(f) => {
                log::info!("reusing primitives from {}", cached.display());
                return Ok((
                    PipelineInput {
                        cloud: f.cloud,
                        primitives: PrimitiveSource::Given { primitives: f.primitives, from_cache: true },
                    },
                    None,
                ));
            }
            Err(e) => log::warn!("ignoring unreadable cache: {e}"),
        }
    }
    let cloud = io::load_point_cloud(&paths.input)?;
    Ok((PipelineInput { cloud, primitives: PrimitiveSource::Detect }, Some(cached)))
}

fn write_partials(paths: &RunPaths, cfg: &PipelineConfig, partial: &Partial) {
    let try_write = |what: &str, r: io::Result<()>| {
        if let Err(e) = r {
            log::error!("could not write partial {what}: {e}");
        }
    };
    let _ = std::fs::create_dir_all(&paths.output);
    if let Some(m) = &partial.mesh {
        let p = paths.mesh(cfg);
        // the format follows the real extension, the suffix is appended after
        let tmp = paths.output.join(format!(".partial-{}", p.file_name().unwrap().to_string_lossy()));
        try_write("mesh", io::save_mesh(&tmp, m));
        let _ = std::fs::rename(&tmp, io::partial_path(&p));
    }
    if let Some(c) = &partial.non_structured {
        try_write(
            "non-structured cloud",
            io::save_point_cloud(&io::partial_path(&paths.non_structured()), c, PlyFormat::BinaryLittleEndian),
        );
    }
    let report = io::partial_path(&paths.report());
    if let Err(e) = std::fs::write(&report, partial.report.to_json()) {
        log::error!("could not write partial report: {e}");
    }
}

fn write_report(path: &Path, report: &RunReport) -> std::io::Result<()> {
    let is_csv = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        std::fs::write(path, report.eval.to_csv())
    } else {
        std::fs::write(path, report.to_json())
    }
}

/// Loads the input, runs the pipeline and writes the structured mesh, the
/// non-structured cloud and the report under `paths.output`. On failure the
/// artifacts produced so far are written with a `.partial` suffix.
pub fn run_files(paths: &RunPaths, cfg: &PipelineConfig) -> Result<PipelineResult, Box<PipelineFailure>> {
    let fail = |stage: Stage, e: anyhow::Error, report: RunReport| {
        let mut report = report;
        report.failed_stage = Some(stage.name().into());
        report.error = Some(format!("{e:#}"));
        let partial = Partial { report, ..Default::default() };
        write_partials(paths, cfg, &partial);
        Box::new(PipelineFailure { error: StageError { stage, source: e }, partial })
    };
    let base_report = RunReport { input: Some(paths.input.display().to_string()), ..Default::default() };
    if let Err(e) = std::fs::create_dir_all(&paths.output) {
        return Err(fail(Stage::Write, e.into(), base_report));
    }
    let t0 = Instant::now();
    let (input, cache_to) = load_input(paths, cfg).map_err(|e| fail(Stage::Load, e, base_report.clone()))?;
    let load_seconds = t0.elapsed().as_secs_f64();

    let mut result = match run_pipeline(input, cfg) {
        Ok(r) => r,
        Err(mut f) => {
            f.partial.report.input = Some(paths.input.display().to_string());
            write_partials(paths, cfg, &f.partial);
            return Err(f);
        }
    };
    result.report.input = Some(paths.input.display().to_string());
    result.report.eval.timings.insert(0, StageTiming { stage: "read".into(), seconds: load_seconds });

    let t0 = Instant::now();
    let written = (|| -> anyhow::Result<()> {
        if let Some(cache) = cache_to {
            std::fs::create_dir_all(paths.cache_dir())?;
            io::save_vg(&cache, &result.input_cloud, &result.detected)?;
        }
        io::save_mesh(&paths.mesh(cfg), &result.structured_mesh)?;
        io::save_point_cloud(&paths.non_structured(), &result.non_structured, PlyFormat::BinaryLittleEndian)?;
        if let Some(dot) = &paths.dump_adjacency {
            std::fs::write(dot, result.adjacency_dot())?;
        }
        Ok(())
    })();
    result.report.eval.timings.push(StageTiming { stage: "write".into(), seconds: t0.elapsed().as_secs_f64() });
    if let Err(e) = written {
        let partial = Partial {
            mesh: Some(result.structured_mesh.clone()),
            non_structured: Some(result.non_structured.clone()),
            report: result.report.clone(),
        };
        return Err(fail(Stage::Write, e, partial.report));
    }
    if let Err(e) = write_report(&paths.report(), &result.report) {
        return Err(fail(Stage::Write, e.into(), result.report.clone()));
    }
    Ok(result)
}
