use std::process::ExitCode;

use clap::{CommandFactory, Parser};
use planaris::cli::{required_inputs, Cli, Command};
use planaris::pipeline::{run_files, RunPaths};
use planaris::{commands, report::EvalReport};

const USAGE_ERROR: u8 = 2;

fn usage_error(msg: &str, sub: &str) -> ExitCode {
    let mut cmd = Cli::command();
    cmd.build();
    let usage = cmd
        .find_subcommand_mut(sub)
        .map(|c| c.render_usage().to_string())
        .unwrap_or_default();
    eprintln!("error: {msg}\n\n{usage}\n\nFor more information, try '--help'.");
    ExitCode::from(USAGE_ERROR)
}

fn write_eval(report: &EvalReport, path: Option<&std::path::Path>) -> anyhow::Result<()> {
    match path {
        Some(p) if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) => std::fs::write(p, report.to_csv())?,
        Some(p) => std::fs::write(p, serde_json::to_string_pretty(report)? + "\n")?,
        None => println!("{}", serde_json::to_string_pretty(report)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let sub = match &cli.command {
        Command::Run(_) => "run",
        Command::Synth(_) => "synth",
        Command::Eval(_) => "eval",
        Command::Sample(_) => "sample",
    };
    if let Some(p) = required_inputs(&cli.command).into_iter().find(|p| !p.exists()) {
        return usage_error(&format!("input not found: {}", p.display()), sub);
    }

    let outcome = match cli.command {
        Command::Run(args) => {
            let cfg = match args.resolve_config() {
                Ok(c) => c,
                Err(e) => return usage_error(&e.to_string(), sub),
            };
            if let Some(n) = args.threads {
                if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                    return usage_error(&format!("cannot set thread count: {e}"), sub);
                }
            }
            let paths = RunPaths {
                input: args.input,
                output: args.output,
                report: args.report,
                dump_adjacency: args.dump_adjacency,
            };
            match run_files(&paths, &cfg) {
                Ok(r) => {
                    let e = &r.report.eval;
                    println!(
                        "{} primitives, {} faces, rmse {} m, {:.2} s",
                        e.num_primitives,
                        e.num_faces,
                        e.rmse.map_or("n/a".into(), |v| format!("{v:.6}")),
                        e.total_seconds()
                    );
                    if r.report.flags.degraded {
                        eprintln!("warning: quality flags raised, see the report");
                    }
                    Ok(())
                }
                Err(f) => {
                    eprintln!("error: {}", f.error);
                    eprintln!("partial artifacts written with a .partial suffix in {}", paths.output.display());
                    return ExitCode::FAILURE;
                }
            }
        }
        Command::Synth(a) => commands::synth(&a.spec, &a.output, a.truth.as_deref(), a.seed, a.ascii),
        Command::Eval(a) => commands::eval(&a.cloud, &a.mesh).and_then(|r| write_eval(&r, a.report.as_deref())),
        Command::Sample(a) => commands::sample(&a.mesh, a.count, a.seed, &a.output, a.ascii),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {sub}: {e:#}");
            ExitCode::FAILURE
        }
    }
}
