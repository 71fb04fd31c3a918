//! Run reports (JSON and CSV).

use planaris_core::mclip::ClipStep;
use planaris_core::planemesh::MeshKind;
use planaris_core::segmentation::StructureLabel;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

/// Face count, cloud-to-mesh RMSE and per-stage timings.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub num_points: usize,
    pub num_primitives: usize,
    pub num_faces: usize,
    /// Metres; `None` when no mesh was produced.
    pub rmse: Option<f64>,
    pub timings: Vec<StageTiming>,
}

impl EvalReport {
    pub fn total_seconds(&self) -> f64 {
        self.timings.iter().map(|t| t.seconds).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut head = vec!["num_points".to_string(), "num_primitives".into(), "num_faces".into(), "rmse_m".into()];
        let mut row = vec![
            self.num_points.to_string(),
            self.num_primitives.to_string(),
            self.num_faces.to_string(),
            self.rmse.map(|r| r.to_string()).unwrap_or_default(),
        ];
        for t in &self.timings {
            head.push(format!("{}_s", t.stage));
            row.push(t.seconds.to_string());
        }
        format!("{}\n{}\n", head.join(","), row.join(","))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub skipped: bool,
    pub chosen_plane: Option<usize>,
    pub upward: usize,
    pub downward: usize,
    pub angle_deg: f64,
    pub axis: Option<[f64; 3]>,
    /// Row-major rotation from the input frame to the output frame.
    pub rotation: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrimitiveReport {
    pub id: usize,
    pub label: StructureLabel,
    pub tilt_deg: f64,
    /// Mean height above the lowest point of the scene.
    pub height: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Counts {
    pub ceiling: usize,
    pub slanted: usize,
    pub floor: usize,
    pub walls: usize,
    pub non_structured_points: usize,
    pub outliers_removed: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TranslationReport {
    pub adjacent_pairs: usize,
    pub applied: usize,
    pub rejected: usize,
    pub max_displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlabReport {
    pub primitive: usize,
    pub kind: MeshKind,
    pub adjacent_walls: usize,
    pub fragments: usize,
    pub area: f64,
    pub trace: Vec<ClipStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedMesh {
    pub primitive: usize,
    pub reason: String,
}

/// Signs that the input was not axis aligned or the layout did not close.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct QualityFlags {
    /// Angle between `+Z` and the most horizontal primitive's normal.
    pub up_axis_deviation_deg: Option<f64>,
    /// Walls whose plane is more than 2° from every coordinate axis.
    pub off_axis_walls: Vec<usize>,
    /// Walls adjacent to no other wall.
    pub isolated_walls: Vec<usize>,
    pub no_ceiling: bool,
    pub no_floor: bool,
    pub degraded: bool,
}

impl QualityFlags {
    pub const UP_TOLERANCE_DEG: f64 = 1.0;
    pub const WALL_TOLERANCE_DEG: f64 = 2.0;

    pub fn finish(mut self) -> Self {
        self.degraded = self.up_axis_deviation_deg.map_or(true, |d| d > Self::UP_TOLERANCE_DEG)
            || !self.off_axis_walls.is_empty()
            || self.no_ceiling
            || self.no_floor;
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RunReport {
    pub input: Option<String>,
    /// `ransac`, `vg` or `cache`.
    pub primitives_source: String,
    pub eval: EvalReport,
    pub alignment: AlignmentReport,
    pub counts: Counts,
    pub primitives: Vec<PrimitiveReport>,
    pub vertex_translation: TranslationReport,
    pub clipping: Vec<SlabReport>,
    pub skipped_meshes: Vec<SkippedMesh>,
    pub flags: QualityFlags,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn num_fragments(&self) -> usize {
        self.clipping.iter().map(|s| s.fragments).sum()
    }
}
