use clap::Parser;
use planaris::cli::{Cli, Command, RunArgs};
use planaris::config::PipelineConfig;
use planaris_core::ransac::SupportThreshold;

fn run_args(extra: &[&str]) -> RunArgs {
    let mut argv = vec!["planaris", "run", "--input", "in.ply", "--output", "out"];
    argv.extend_from_slice(extra);
    match Cli::try_parse_from(argv).expect("flags parse").command {
        Command::Run(a) => a,
        _ => unreachable!(),
    }
}

fn resolved(extra: &[&str]) -> PipelineConfig {
    run_args(extra).resolve_config().expect("valid config")
}

#[test]
fn every_published_threshold_has_a_flag() {
    type Probe = (&'static [&'static str], fn(&PipelineConfig) -> f64, f64);
    let probes: [Probe; 12] = [
        (&["--epsilon", "0.03"], |c| c.ransac.epsilon, 0.03),
        (&["--horizontal-angle", "15"], |c| c.segmentation.horizontal_angle_deg, 15.0),
        (&["--wall-angle", "80"], |c| c.segmentation.wall_angle_deg, 80.0),
        (&["--min-wall-height", "1.2"], |c| c.segmentation.min_wall_height_m, 1.2),
        (&["--ceiling-frac", "0.75"], |c| c.segmentation.ceiling_frac, 0.75),
        (&["--floor-frac", "0.8"], |c| c.segmentation.floor_frac, 0.8),
        (&["--multistory-frac", "0.2"], |c| c.segmentation.multistory_point_frac, 0.2),
        (&["--up-threshold", "0.5"], |c| c.alignment.up_threshold, 0.5),
        (&["--th-parallel", "0.01"], |c| c.vtrans.th_parallel, 0.01),
        (&["--th-sep", "0.7"], |c| c.vtrans.th_sep, 0.7),
        (&["--th-clip", "25"], |c| c.clip.th_clip as f64, 25.0),
        (&["--axis-tol", "3"], |c| c.axis_tol_deg, 3.0),
    ];
    let defaults = PipelineConfig::default();
    for (flag, get, want) in probes {
        assert_ne!(get(&defaults), want, "{flag:?} probe equals the default");
        assert_eq!(get(&resolved(flag)), want, "{flag:?}");
    }
}

#[test]
fn defaults_match_the_published_values() {
    let c = PipelineConfig::default();
    assert_eq!(c.ransac.epsilon, 0.02);
    assert_eq!(c.segmentation.horizontal_angle_deg, 20.0);
    assert_eq!(c.segmentation.wall_angle_deg, 85.0);
    assert_eq!(c.segmentation.min_wall_height_m, 1.5);
    assert_eq!(c.segmentation.ceiling_frac, 0.7);
    assert_eq!(c.segmentation.floor_frac, 0.9);
    assert_eq!(c.segmentation.multistory_point_frac, 0.1);
    assert_eq!(c.alignment.up_threshold, 0.6);
    assert_eq!(c.vtrans.th_parallel, 0.001);
    assert_eq!(c.vtrans.th_sep, 0.5);
    assert_eq!(c.clip.th_clip, 50);
}

#[test]
fn other_flags_reach_the_config() {
    let c = resolved(&[
        "--seed",
        "9",
        "--normal-threshold",
        "30",
        "--min-support",
        "1%",
        "--max-planes",
        "12",
        "--candidates",
        "64",
        "--normals-k",
        "24",
        "--skip-alignment",
        "--slanted-band",
        "0.4",
        "--largest-by",
        "points",
        "--outlier-k",
        "8",
        "--outlier-std",
        "1.5",
        "--keep-outliers",
        "--mesh-format",
        "ply",
        "--no-cache",
    ]);
    assert_eq!(c.ransac.seed, 9);
    assert_eq!(c.ransac.normal_threshold_deg, 30.0);
    assert_eq!(c.ransac.min_support, SupportThreshold::Fraction(0.01));
    assert_eq!(c.ransac.max_planes, 12);
    assert_eq!(c.ransac.candidates_per_round, 64);
    assert_eq!(c.normals_k, 24);
    assert!(c.alignment.skip);
    assert_eq!(c.segmentation.slanted_band_frac, 0.4);
    assert_eq!(c.segmentation.outlier_k, 8);
    assert_eq!(c.segmentation.outlier_std_ratio, 1.5);
    assert!(!c.remove_outliers);
    assert_eq!(c.mesh_format.extension(), "ply");
    assert!(!c.cache);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.toml");
    std::fs::write(&path, "axis_tol_deg = 2.0\n[clip]\nth_clip = 25\n[vtrans]\nth_sep = 0.8\n").unwrap();
    let p = path.to_str().unwrap();
    let c = resolved(&["--config", p, "--th-clip", "60"]);
    assert_eq!(c.clip.th_clip, 60);
    assert_eq!(c.vtrans.th_sep, 0.8);
    assert_eq!(c.axis_tol_deg, 2.0);
}

#[test]
fn inconsistent_values_are_rejected() {
    assert!(run_args(&["--horizontal-angle", "50", "--wall-angle", "40"]).resolve_config().is_err());
    assert!(run_args(&["--th-sep=-1"]).resolve_config().is_err());
    assert!(Cli::try_parse_from(["planaris", "run", "--input", "a", "--output", "b", "--th-clip", "-3"]).is_err());
}
