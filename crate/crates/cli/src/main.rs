//! `sqmap`: sample random planar maps, square them, validate and render
//! the tilings, and run the statistical experiment suites.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error.

use clap::{Parser, Subcommand, ValueEnum};
use sqmap_core::combmap;
use sqmap_core::electric::SolveMode;
use sqmap_core::pipeline::{
    self, accumulation_probe, run_grow, run_sample, PipelineOptions, RunManifest,
};
use sqmap_core::squaring::{
    map_from_squaring, render_svg, square_map, squaring_from_json, squaring_to_json,
    validate_tiling, RenderOptions,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "sqmap", version, about = "Random planar maps and their squarings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Iterative,
    Rational,
}

impl From<ModeArg> for SolveMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Iterative => SolveMode::Iterative,
            ModeArg::Rational => SolveMode::Rational,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ExperimentArg {
    Threeconn,
    Width,
    Fourcorner,
    Hausdorff,
    Degtail,
}

#[derive(Subcommand)]
enum Command {
    /// Draw one pipeline sample and persist the full run directory.
    Sample {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Resample until the map is 3-connected.
        #[arg(long)]
        require_3conn: bool,
        /// Pin the hexagon diagonal index (0..=5).
        #[arg(long)]
        hex_index: Option<usize>,
        #[arg(long, value_enum, default_value = "iterative")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one coupled growth chain, squaring each snapshot.
    Grow {
        /// Comma-separated snapshot sizes, e.g. 10,20,40.
        #[arg(long, value_delimiter = ',')]
        schedule: Vec<usize>,
        #[arg(long)]
        seed: u64,
        #[arg(long, value_enum, default_value = "iterative")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Square a map read from JSON.
    Square {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "iterative")]
        mode: ModeArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a squaring to SVG.
    Render {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overlay the primal and facial lines.
        #[arg(long)]
        lines: bool,
        /// Mark the accumulation-point proxy.
        #[arg(long)]
        accumulation: bool,
        /// Draw degenerate squares too.
        #[arg(long)]
        include_degenerate: bool,
    },
    /// Validate a squaring read from JSON.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Rebuild the rooted map of a tiling read from squaring JSON.
    Unsquare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run an experiment suite.
    Stats {
        #[arg(long, value_enum)]
        experiment: ExperimentArg,
        #[arg(long)]
        n: Option<usize>,
        /// Comma-separated sizes for schedule-based experiments.
        #[arg(long, value_delimiter = ',')]
        schedule: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        samples: u64,
        /// Number of chains for the hausdorff experiment.
        #[arg(long, default_value_t = 20)]
        chains: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Sample {
            n,
            seed,
            require_3conn,
            hex_index,
            mode,
            out,
        } => {
            let opts = PipelineOptions {
                hex_index,
                require_three_connected: require_3conn,
                mode: mode.into(),
                ..Default::default()
            };
            let sample = run_sample(&out, n, seed, &opts)?;
            println!(
                "sample n={} hex={} three_connected={} squarable={} lambda={}",
                n,
                sample.hex_index,
                sample.three_connected,
                sample.squarable,
                sample
                    .solved
                    .as_ref()
                    .map_or("-".to_string(), |s| format!("{:.6}", s.lambda)),
            );
            if let Some(sol) = &sample.solved {
                if !sol.tiling.pass {
                    eprintln!("tiling validation failed: {:?}", sol.tiling);
                    return Ok(ExitCode::from(1));
                }
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Grow {
            schedule,
            seed,
            mode,
            out,
        } => {
            let opts = PipelineOptions {
                mode: mode.into(),
                ..Default::default()
            };
            let snaps = run_grow(&out, &schedule, seed, &opts)?;
            for s in &snaps {
                println!(
                    "n={:5} three_connected={} lambda={}",
                    s.n,
                    s.three_connected,
                    s.lambda.map_or("-".to_string(), |l| format!("{l:.6}")),
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Square { input, mode, out } => {
            let map = combmap::from_json(&std::fs::read_to_string(&input)?)?;
            let sq = square_map(&map, mode.into())?;
            pipeline::write_atomic(&out, squaring_to_json(&sq).as_bytes())?;
            let report = validate_tiling(&sq);
            println!(
                "squared: lambda={:.6} squares={} pass={}",
                sq.lambda,
                sq.squares.len(),
                report.pass
            );
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Render {
            input,
            out,
            lines,
            accumulation,
            include_degenerate,
        } => {
            let sq = squaring_from_json(&std::fs::read_to_string(&input)?)?;
            let opts = RenderOptions {
                draw_lines: lines,
                include_degenerate,
                fill_by_size: true,
                accumulation: accumulation.then(|| accumulation_probe(&sq)),
            };
            pipeline::write_atomic(&out, render_svg(&sq, &opts).as_bytes())?;
            println!("rendered {} squares", sq.squares.len());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { input } => {
            let sq = squaring_from_json(&std::fs::read_to_string(&input)?)?;
            let report = validate_tiling(&sq);
            println!(
                "overlap={:.3e} area_error={:.3e} coverage_deficit={:.3e} out_of_bounds={:.3e} pass={}",
                report.max_overlap,
                report.area_error,
                report.coverage_deficit,
                report.out_of_bounds,
                report.pass
            );
            Ok(if report.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Unsquare { input, out } => {
            let sq = squaring_from_json(&std::fs::read_to_string(&input)?)?;
            let rec = map_from_squaring(&sq.squares)?;
            pipeline::write_atomic(&out, combmap::to_json(&rec.map).as_bytes())?;
            println!(
                "reconstructed map: {} vertices, {} edges",
                rec.map.map.vertex_count(),
                rec.map.map.edge_count()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Stats {
            experiment,
            n,
            schedule,
            samples,
            chains,
            seed,
            out,
        } => {
            std::fs::create_dir_all(out.join("stats"))?;
            let (name, value): (&str, serde_json::Value) = match experiment {
                ExperimentArg::Threeconn => {
                    let n = n.ok_or("--n required for threeconn")?;
                    let r = pipeline::experiment_threeconn(n, samples, seed);
                    println!(
                        "threeconn n={} samples={} freq={:.5} (limit {:.5}, se {:.5})",
                        n, samples, r.frequency, r.limit_value, r.std_error
                    );
                    ("threeconn", serde_json::to_value(&r)?)
                }
                ExperimentArg::Width => {
                    let n = n.ok_or("--n required for width")?;
                    let r = pipeline::experiment_width(n, samples, seed);
                    println!(
                        "width n={} samples={} median={:.5} ks={:.4} p={:.4}",
                        n, samples, r.median_lambda, r.ks_statistic, r.p_value
                    );
                    ("width", serde_json::to_value(&r)?)
                }
                ExperimentArg::Fourcorner => {
                    let sched = if schedule.is_empty() {
                        vec![n.ok_or("--n or --schedule required")?]
                    } else {
                        schedule
                    };
                    let r = pipeline::experiment_fourcorner(&sched, samples, seed);
                    for at in &r.per_n {
                        println!(
                            "fourcorner n={} freq>=1 {:.4} mean {:.4} ({:?})",
                            at.n, at.frequency_at_least_one, at.mean_count, at.mode
                        );
                    }
                    ("fourcorner", serde_json::to_value(&r)?)
                }
                ExperimentArg::Hausdorff => {
                    let sched = if schedule.is_empty() {
                        vec![25, 100, 400]
                    } else {
                        schedule
                    };
                    let r = pipeline::experiment_hausdorff(&sched, chains, seed);
                    println!(
                        "hausdorff schedule={:?} medians={:?} decreasing_frac={:.3}",
                        r.schedule, r.medians, r.fraction_weakly_decreasing
                    );
                    ("hausdorff", serde_json::to_value(&r)?)
                }
                ExperimentArg::Degtail => {
                    let n = n.ok_or("--n required for degtail")?;
                    let r = pipeline::experiment_degree_tail(n, samples, seed);
                    println!(
                        "degtail n={} samples={} min_degree={} slope={:.4}",
                        n, samples, r.min_degree, r.slope
                    );
                    ("degtail", serde_json::to_value(&r)?)
                }
            };
            let manifest = RunManifest::new(
                "stats",
                seed,
                serde_json::json!({ "experiment": name, "samples": samples }),
            );
            pipeline::write_json(&out.join("manifest.json"), &manifest)?;
            pipeline::write_json(&out.join(format!("stats/{name}.json")), &value)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}
