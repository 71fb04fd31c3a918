//! Command-line interface definitions.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use planaris_core::ransac::SupportThreshold;
use planaris_core::segmentation::LargestPlaneMetric;

use crate::config::{ConfigError, MeshFormat, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "planaris", version, about = "Structured planar meshes from indoor point clouds")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
pub enum Command {
    /// Run the full pipeline on a PLY cloud or a VG file.
    Run(RunArgs),
    /// Generate a labelled synthetic scene from a TOML spec.
    Synth(SynthArgs),
    /// Face count and cloud-to-mesh RMSE of an existing mesh.
    Eval(EvalArgs),
    /// Sample an evenly spaced point cloud from a mesh.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LargestBy {
    PointsTimesArea,
    Points,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeshFormatArg {
    Obj,
    Ply,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Input cloud (.ply) or vertex groups (.vg).
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub output: PathBuf,
    /// TOML pipeline config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Report path (.json or .csv); defaults to <output>/report.json.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the wall and slab adjacency graphs as DOT.
    #[arg(long, value_name = "FILE")]
    pub dump_adjacency: Option<PathBuf>,
    /// Cap on worker threads.
    #[arg(long)]
    pub threads: Option<usize>,
    #[command(flatten)]
    pub overrides: Overrides,
}

/// Every tunable threshold, each overriding the config file.
#[derive(Debug, Default, Clone, Args)]
pub struct Overrides {
    /// RANSAC seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// RANSAC inlier distance (m).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// RANSAC normal deviation limit (deg).
    #[arg(long)]
    pub normal_threshold: Option<f64>,
    /// Minimum plane support: a count ("500"), a fraction ("0.005") or a
    /// percentage ("0.5%").
    #[arg(long, value_parser = parse_support)]
    pub min_support: Option<SupportThreshold>,
    #[arg(long)]
    pub max_planes: Option<usize>,
    /// RANSAC hypotheses per round.
    #[arg(long)]
    pub candidates: Option<usize>,
    /// Neighbours for normal estimation when the input has none.
    #[arg(long)]
    pub normals_k: Option<usize>,
    /// Skip Manhattan alignment.
    #[arg(long)]
    pub skip_alignment: bool,
    /// |c| above which a primitive votes for the up direction.
    #[arg(long)]
    pub up_threshold: Option<f64>,
    /// Largest tilt of a horizontal primitive (deg).
    #[arg(long)]
    pub horizontal_angle: Option<f64>,
    /// Smallest tilt of a wall (deg).
    #[arg(long)]
    pub wall_angle: Option<f64>,
    /// Smallest vertical extent of a wall (m).
    #[arg(long)]
    pub min_wall_height: Option<f64>,
    /// Ceiling candidates reach this fraction of the ceiling seed's height.
    #[arg(long)]
    pub ceiling_frac: Option<f64>,
    /// Floor candidates reach this fraction of the floor seed's depth below the scene top.
    #[arg(long)]
    pub floor_frac: Option<f64>,
    /// Point share that admits an extra ceiling or floor level.
    #[arg(long)]
    pub multistory_frac: Option<f64>,
    /// Top band of the scene height in which tilted planes are slanted ceilings.
    #[arg(long)]
    pub slanted_band: Option<f64>,
    #[arg(long, value_enum)]
    pub largest_by: Option<LargestBy>,
    #[arg(long)]
    pub outlier_k: Option<usize>,
    #[arg(long)]
    pub outlier_std: Option<f64>,
    /// Keep statistical outliers in the non-structured cloud.
    #[arg(long)]
    pub keep_outliers: bool,
    /// Snap rectangle normals within this angle of an axis (deg).
    #[arg(long)]
    pub axis_tol: Option<f64>,
    /// Components of n_i × n_j below this count as parallel.
    #[arg(long)]
    pub th_parallel: Option<f64>,
    /// Largest vertex translation (m).
    #[arg(long)]
    pub th_sep: Option<f64>,
    /// Slab fragments need more than this many points.
    #[arg(long)]
    pub th_clip: Option<usize>,
    #[arg(long, value_enum)]
    pub mesh_format: Option<MeshFormatArg>,
    /// Do not reuse or store cached primitives.
    #[arg(long)]
    pub no_cache: bool,
}

fn parse_support(s: &str) -> Result<SupportThreshold, String> {
    let s = s.trim();
    if let Some(p) = s.strip_suffix('%') {
        let v: f64 = p.trim().parse().map_err(|_| format!("bad percentage '{s}'"))?;
        return Ok(SupportThreshold::Fraction(v / 100.0));
    }
    if let Ok(n) = s.parse::<usize>() {
        return Ok(SupportThreshold::Count(n));
    }
    s.parse::<f64>()
        .map(SupportThreshold::Fraction)
        .map_err(|_| format!("bad support '{s}'"))
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        fn set<T: Clone>(dst: &mut T, v: &Option<T>) {
            if let Some(v) = v {
                *dst = v.clone();
            }
        }
        set(&mut cfg.ransac.seed, &self.seed);
        set(&mut cfg.ransac.epsilon, &self.epsilon);
        set(&mut cfg.ransac.normal_threshold_deg, &self.normal_threshold);
        set(&mut cfg.ransac.min_support, &self.min_support);
        set(&mut cfg.ransac.max_planes, &self.max_planes);
        set(&mut cfg.ransac.candidates_per_round, &self.candidates);
        set(&mut cfg.normals_k, &self.normals_k);
        if self.skip_alignment {
            cfg.alignment.skip = true;
        }
        set(&mut cfg.alignment.up_threshold, &self.up_threshold);
        let s = &mut cfg.segmentation;
        set(&mut s.horizontal_angle_deg, &self.horizontal_angle);
        set(&mut s.wall_angle_deg, &self.wall_angle);
        set(&mut s.min_wall_height_m, &self.min_wall_height);
        set(&mut s.ceiling_frac, &self.ceiling_frac);
        set(&mut s.floor_frac, &self.floor_frac);
        set(&mut s.multistory_point_frac, &self.multistory_frac);
        set(&mut s.slanted_band_frac, &self.slanted_band);
        if let Some(l) = self.largest_by {
            s.largest_by = match l {
                LargestBy::PointsTimesArea => LargestPlaneMetric::PointsTimesArea,
                LargestBy::Points => LargestPlaneMetric::Points,
            };
        }
        set(&mut s.outlier_k, &self.outlier_k);
        set(&mut s.outlier_std_ratio, &self.outlier_std);
        if self.keep_outliers {
            cfg.remove_outliers = false;
        }
        set(&mut cfg.axis_tol_deg, &self.axis_tol);
        set(&mut cfg.vtrans.th_parallel, &self.th_parallel);
        set(&mut cfg.vtrans.th_sep, &self.th_sep);
        set(&mut cfg.clip.th_clip, &self.th_clip);
        if let Some(f) = self.mesh_format {
            cfg.mesh_format = match f {
                MeshFormatArg::Obj => MeshFormat::Obj,
                MeshFormatArg::Ply => MeshFormat::Ply,
            };
        }
        if self.no_cache {
            cfg.cache = false;
        }
    }
}

impl RunArgs {
    /// Config file (or defaults) with the flag overrides applied, validated.
    pub fn resolve_config(&self) -> Result<PipelineConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        self.overrides.apply(&mut cfg);
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Scene spec (TOML).
    #[arg(long)]
    pub spec: PathBuf,
    /// Output cloud (.ply) with `label` and `surface` vertex properties.
    #[arg(long)]
    pub output: PathBuf,
    /// Ground truth JSON; defaults to the output path with a .json extension.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Overrides the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write ascii instead of binary PLY.
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub mesh: PathBuf,
    /// Report path (.json or .csv); printed to stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub ascii: bool,
}

/// Input paths a command needs to exist.
pub fn required_inputs(cmd: &Command) -> Vec<&Path> {
    match cmd {
        Command::Run(a) => std::iter::once(a.input.as_path()).chain(a.config.as_deref()).collect(),
        Command::Synth(a) => vec![&a.spec],
        Command::Eval(a) => vec![&a.cloud, &a.mesh],
        Command::Sample(a) => vec![&a.mesh],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_forms() {
        assert_eq!(parse_support("500"), Ok(SupportThreshold::Count(500)));
        assert_eq!(parse_support("0.005"), Ok(SupportThreshold::Fraction(0.005)));
        assert_eq!(parse_support("0.5%"), Ok(SupportThreshold::Fraction(0.005)));
        assert!(parse_support("lots").is_err());
    }
}
