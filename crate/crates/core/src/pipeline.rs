//! End-to-end pipeline (tree → closure → diagonal → inverse incidence map
//! → squaring), the statistical experiments built on it, and reproducible
//! run directories.
//!
//! All randomness is ChaCha8 keyed by a user seed; independent samples,
//! chains, and walks use distinct streams of the same seed, so results are
//! byte-reproducible and independent of scheduling.

use crate::closure::{
    add_diagonal, complete_closure, is_irreducible, partial_closure, unroot_second, ClosureError,
    DoublyRootedQuad, EdgeProvenance, SecondRootChoice,
};
use crate::combmap::{self, check_squarable, MapError, RootedMap};
use crate::contacts::four_corner_count;
use crate::electric::{
    dual_potentials, solve_potentials, total_current, ElectricError, Network, Potentials,
    SolveMode,
};
use crate::squaring::{
    build_squaring, hausdorff_distance, render_svg, squaring_to_json, validate_tiling,
    RenderOptions, Squaring, SquaringError, TilingReport,
};
use crate::stats;
use crate::treegrow::{sample_direct_rng, CountTable, GrowthChain, RootedBinaryTree, TreeError};
use crate::tutte::{tutte_inverse, tutte_inverse_with_darts, TutteError};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fs;
use std::path::Path;
use thiserror::Error;

pub const THREE_CONNECTED_LIMIT: f64 = 256.0 / 729.0;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Closure(#[from] ClosureError),
    #[error(transparent)]
    Tutte(#[from] TutteError),
    #[error(transparent)]
    Electric(#[from] ElectricError),
    #[error(transparent)]
    Squaring(#[from] SquaringError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("gave up after {0} rejections waiting for a 3-connected sample")]
    RejectionCap(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct PipelineOptions {
    /// Pin the hexagon diagonal; drawn uniformly from 0..6 when absent.
    pub hex_index: Option<usize>,
    /// Resample until the map is 3-connected.
    pub require_three_connected: bool,
    /// Solve the network and build the squaring.
    pub solve: bool,
    pub mode: SolveMode,
    pub max_rejections: u64,
    pub second_root: SecondRootChoice,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            hex_index: None,
            require_three_connected: false,
            solve: true,
            mode: SolveMode::Iterative,
            max_rejections: 1_000_000,
            second_root: SecondRootChoice::KeepOriginal,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolvedSample {
    pub potentials: Potentials,
    pub lambda: f64,
    pub squaring: Squaring,
    pub tiling: TilingReport,
}

#[derive(Debug, Clone)]
pub struct PipelineSample {
    pub n: usize,
    pub hex_index: usize,
    pub tree: RootedBinaryTree,
    pub quad: RootedMap,
    pub quad_provenance: Vec<EdgeProvenance>,
    pub map: RootedMap,
    pub three_connected: bool,
    pub squarable: bool,
    pub rejections: u64,
    pub solved: Option<SolvedSample>,
}

/// One full pipeline draw. Deterministic in the seed.
pub fn pipeline_sample(
    n: usize,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<PipelineSample, PipelineError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = CountTable::new();
    pipeline_sample_rng(n, &mut rng, &mut table, opts)
}

pub fn pipeline_sample_rng(
    n: usize,
    rng: &mut ChaCha8Rng,
    table: &mut CountTable,
    opts: &PipelineOptions,
) -> Result<PipelineSample, PipelineError> {
    let mut rejections = 0u64;
    loop {
        let tree = sample_direct_rng(n, rng, table);
        let hex_index = match opts.hex_index {
            Some(i) => i,
            None => rng.gen_range(0..6usize),
        };
        let dq = quad_of_tree(&tree, hex_index)?;
        let quad = unroot_second(&dq, opts.second_root);
        let three_connected = is_irreducible(&quad)?;
        if opts.require_three_connected && !three_connected {
            rejections += 1;
            if rejections >= opts.max_rejections {
                return Err(PipelineError::RejectionCap(rejections));
            }
            continue;
        }
        let map = tutte_inverse(&quad)?;
        let squarable = check_squarable(&map);
        let solved = if opts.solve && squarable {
            let net = Network::new(map.clone())?;
            let potentials = solve_potentials(&net, opts.mode)?;
            let lam = total_current(&net, &potentials);
            let dp = dual_potentials(&net, &lam, opts.mode)?;
            let squaring = build_squaring(&net, &potentials, &dp);
            let tiling = validate_tiling(&squaring);
            Some(SolvedSample {
                potentials,
                lambda: lam.value,
                squaring,
                tiling,
            })
        } else {
            None
        };
        return Ok(PipelineSample {
            n,
            hex_index,
            tree,
            quad_provenance: dq.provenance.clone(),
            quad,
            map,
            three_connected,
            squarable,
            rejections,
            solved,
        });
    }
}

/// Closure plus diagonal for a given tree.
pub fn quad_of_tree(
    tree: &RootedBinaryTree,
    hex_index: usize,
) -> Result<DoublyRootedQuad, PipelineError> {
    let pc = partial_closure(tree)?;
    let hq = complete_closure(&pc)?;
    Ok(add_diagonal(&hq, hex_index)?)
}

#[derive(Debug, Clone)]
pub struct GrowSnapshot {
    pub n: usize,
    pub tree: RootedBinaryTree,
    pub map: RootedMap,
    /// Stable identity per map vertex: the smallest dart of the snapshot
    /// tree that sits at the vertex and is anchored at an internal tree
    /// vertex. Tree darts keep their ids as the chain grows and internal
    /// tree vertices survive the closure, so equal keys across snapshots
    /// of one chain mean "the same vertex".
    pub vertex_tree_key: Vec<Option<usize>>,
    pub three_connected: bool,
    pub squarable: bool,
    pub lambda: Option<f64>,
    pub squaring: Option<Squaring>,
}

/// Snapshots of one coupled growth chain. The chain uses stream
/// `chain_stream` of the seed; the hexagon index is drawn once per chain
/// and shared by all snapshots.
pub fn grow_sequence(
    schedule: &[usize],
    seed: u64,
    chain_stream: u64,
    opts: &PipelineOptions,
) -> Result<Vec<GrowSnapshot>, PipelineError> {
    let n_max = schedule.iter().copied().max().unwrap_or(0);
    let mut chain_rng = ChaCha8Rng::seed_from_u64(seed);
    chain_rng.set_stream(chain_stream);
    let hex_index = opts
        .hex_index
        .unwrap_or_else(|| chain_rng.gen_range(0..6usize));
    let mut chain = GrowthChain::new_with_rng(seed, chain_rng);
    let mut out = Vec::new();
    let mut want: Vec<usize> = schedule.to_vec();
    want.sort_unstable();
    want.dedup();
    for &target in &want {
        if target == 0 {
            return Err(TreeError::SnapshotOutOfRange(0).into());
        }
        while chain.internal_count() < target {
            chain.grow_step();
        }
        let tree = chain.tree();
        let dq = quad_of_tree(&tree, hex_index)?;
        let quad = unroot_second(&dq, opts.second_root);
        let three_connected = is_irreducible(&quad)?;
        let (map, pdarts) = tutte_inverse_with_darts(&quad)?;
        let vertex_tree_key = vertex_tree_keys(&tree, &quad, &map, &pdarts);
        let squarable = check_squarable(&map);
        let (lambda, squaring) = if opts.solve && squarable {
            let net = Network::new(map.clone())?;
            let potentials = solve_potentials(&net, opts.mode)?;
            let lam = total_current(&net, &potentials);
            let dp = dual_potentials(&net, &lam, opts.mode)?;
            let sq = build_squaring(&net, &potentials, &dp);
            (Some(lam.value), Some(sq))
        } else {
            (None, None)
        };
        out.push(GrowSnapshot {
            n: target,
            tree,
            map,
            vertex_tree_key,
            three_connected,
            squarable,
            lambda,
            squaring,
        });
    }
    let _ = n_max;
    Ok(out)
}

/// Stable vertex keys for the image of a snapshot under the inverse
/// incidence bijection; see `GrowSnapshot::vertex_tree_key`.
fn vertex_tree_keys(
    tree: &RootedBinaryTree,
    quad: &RootedMap,
    map: &RootedMap,
    pdarts: &[usize],
) -> Vec<Option<usize>> {
    let tm = &tree.map.map;
    let tree_darts = tm.dart_count();
    let mut deg = vec![0usize; tm.vertex_count()];
    for d in 0..tree_darts {
        deg[tm.tail(d)] += 1;
    }
    let qm = &quad.map;
    let mut qkey: Vec<Option<usize>> = vec![None; qm.vertex_count()];
    for d in 0..qm.dart_count() {
        if d < tree_darts && deg[tm.tail(d)] == 3 {
            let qv = qm.tail(d);
            qkey[qv] = Some(qkey[qv].map_or(d, |k: usize| k.min(d)));
        }
    }
    let mut out = vec![None; map.map.vertex_count()];
    for (i, &qd) in pdarts.iter().enumerate() {
        out[map.map.tail(i)] = qkey[qm.tail(qd)];
    }
    out
}

/// Proxy for the accumulation point: centroid of the centers of the
/// smallest-decile squares (visualization aid only).
pub fn accumulation_probe(s: &Squaring) -> (f64, f64) {
    let nd = s.nondegenerate();
    if nd.is_empty() {
        return (s.lambda / 2.0, 0.5);
    }
    let mut sides: Vec<f64> = nd.iter().map(|q| q.side).collect();
    sides.sort_by(f64::total_cmp);
    // decile cutoff with slack so size ties land on the same side
    let cutoff = sides[(nd.len().saturating_sub(1)) / 10] * (1.0 + 1e-9) + 1e-15;
    let picked: Vec<_> = nd.iter().filter(|q| q.side <= cutoff).collect();
    let cx = picked.iter().map(|q| q.x + q.side / 2.0).sum::<f64>() / picked.len() as f64;
    let cy = picked.iter().map(|q| q.y - q.side / 2.0).sum::<f64>() / picked.len() as f64;
    (cx, cy)
}

// ---------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------

fn sample_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Serialize)]
pub struct ThreeConnResult {
    pub experiment: &'static str,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub hits: u64,
    pub frequency: f64,
    pub std_error: f64,
    pub limit_value: f64,
}

/// Frequency of 3-connectivity among unconditioned pipeline samples.
pub fn experiment_threeconn(n: usize, samples: u64, seed: u64) -> ThreeConnResult {
    assert!(samples > 0, "at least one sample required");
    let mut table = CountTable::new();
    table.tree_count(n);
    let hits: u64 = (0..samples)
        .into_par_iter()
        .map_init(
            || table.clone(),
            |tbl, i| {
                let mut rng = sample_stream(seed, i + 1);
                let opts = PipelineOptions {
                    solve: false,
                    ..Default::default()
                };
                let s = pipeline_sample_rng(n, &mut rng, tbl, &opts).expect("pipeline sample");
                s.three_connected as u64
            },
        )
        .sum();
    let f = hits as f64 / samples as f64;
    ThreeConnResult {
        experiment: "threeconn",
        n,
        samples,
        seed,
        hits,
        frequency: f,
        std_error: (f * (1.0 - f) / samples as f64).sqrt(),
        limit_value: THREE_CONNECTED_LIMIT,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WidthResult {
    pub experiment: &'static str,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub median_lambda: f64,
    pub min_lambda: f64,
    pub max_lambda: f64,
    pub ks_statistic: f64,
    pub p_value: f64,
    pub lambdas: Vec<f64>,
}

/// Width distribution among 3-connected samples, with a two-sample KS test
/// of log-width against its negation (the conditioned law is self-dual, so
/// the two should agree).
pub fn experiment_width(n: usize, samples: u64, seed: u64) -> WidthResult {
    let mut table = CountTable::new();
    table.tree_count(n);
    let lambdas: Vec<f64> = (0..samples)
        .into_par_iter()
        .map_init(
            || table.clone(),
            |tbl, i| {
                let mut rng = sample_stream(seed, i + 1);
                let opts = PipelineOptions {
                    require_three_connected: true,
                    ..Default::default()
                };
                let s = pipeline_sample_rng(n, &mut rng, tbl, &opts).expect("pipeline sample");
                s.solved.as_ref().expect("3-connected maps square").lambda
            },
        )
        .collect();
    let logs: Vec<f64> = lambdas.iter().map(|l| l.ln()).collect();
    let neg: Vec<f64> = logs.iter().map(|l| -l).collect();
    let (ks, p) = stats::ks_two_sample(&logs, &neg);
    WidthResult {
        experiment: "width",
        n,
        samples,
        seed,
        median_lambda: stats::median(&lambdas),
        min_lambda: lambdas.iter().copied().fold(f64::INFINITY, f64::min),
        max_lambda: lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ks_statistic: ks,
        p_value: p,
        lambdas,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FourCornerAt {
    pub n: usize,
    pub samples: u64,
    pub used: u64,
    pub mode: SolveMode,
    pub frequency_at_least_one: f64,
    pub mean_count: f64,
    pub counts: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourCornerResult {
    pub experiment: &'static str,
    pub seed: u64,
    pub per_n: Vec<FourCornerAt>,
    pub decreasing_trend: bool,
}

/// Frequency of squarings containing a point where four squares meet, per
/// size. Exact arithmetic below the documented size cutoff.
pub fn experiment_fourcorner(schedule: &[usize], samples: u64, seed: u64) -> FourCornerResult {
    let mut per_n = Vec::new();
    for (ni, &n) in schedule.iter().enumerate() {
        let mode = if n <= 500 {
            SolveMode::Rational
        } else {
            SolveMode::Iterative
        };
        let mut table = CountTable::new();
        table.tree_count(n);
        let counts: Vec<Option<usize>> = (0..samples)
            .into_par_iter()
            .map_init(
                || table.clone(),
                |tbl, i| {
                    let mut rng = sample_stream(seed, (ni as u64) << 32 | (i + 1));
                    let opts = PipelineOptions {
                        mode,
                        ..Default::default()
                    };
                    let s = pipeline_sample_rng(n, &mut rng, tbl, &opts).expect("pipeline sample");
                    s.solved.as_ref().map(|sol| four_corner_count(&sol.squaring))
                },
            )
            .collect();
        let used: Vec<usize> = counts.into_iter().flatten().collect();
        let freq = used.iter().filter(|&&c| c >= 1).count() as f64 / used.len().max(1) as f64;
        per_n.push(FourCornerAt {
            n,
            samples,
            used: used.len() as u64,
            mode,
            frequency_at_least_one: freq,
            mean_count: used.iter().sum::<usize>() as f64 / used.len().max(1) as f64,
            counts: used,
        });
    }
    let decreasing_trend = per_n
        .first()
        .zip(per_n.last())
        .map_or(true, |(a, b)| b.frequency_at_least_one <= a.frequency_at_least_one);
    FourCornerResult {
        experiment: "fourcorner",
        seed,
        per_n,
        decreasing_trend,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HausdorffResult {
    pub experiment: &'static str,
    pub schedule: Vec<usize>,
    pub chains: u64,
    pub chains_attempted: u64,
    pub seed: u64,
    /// distances[c][k] = d_H(S at schedule[k], S at schedule[k+1]) for
    /// chain c
    pub distances: Vec<Vec<f64>>,
    pub medians: Vec<f64>,
    pub bootstrap_rounds: usize,
    pub fraction_weakly_decreasing: f64,
}

/// Median Hausdorff distance between consecutive snapshot squarings of
/// coupled chains, with a bootstrap check that the medians weakly decrease
/// along the schedule. Chains with a non-squarable snapshot carry no
/// distances and are skipped; streams are consumed in order until `chains`
/// usable ones exist.
pub fn experiment_hausdorff(schedule: &[usize], chains: u64, seed: u64) -> HausdorffResult {
    let mut distances: Vec<Vec<f64>> = Vec::with_capacity(chains as usize);
    let mut attempted = 0u64;
    while (distances.len() as u64) < chains && attempted < chains * 16 {
        let batch: Vec<Option<Vec<f64>>> = (attempted..attempted + 16)
            .into_par_iter()
            .map(|c| {
                let snaps = grow_sequence(schedule, seed, c + 1, &PipelineOptions::default())
                    .expect("grow sequence");
                let sq: Vec<&Squaring> = snaps
                    .iter()
                    .filter_map(|s| s.squaring.as_ref())
                    .collect();
                if sq.len() != snaps.len() {
                    return None;
                }
                Some(
                    (0..sq.len() - 1)
                        .map(|k| hausdorff_distance(sq[k], sq[k + 1]))
                        .collect(),
                )
            })
            .collect();
        attempted += 16;
        for d in batch.into_iter().flatten() {
            if (distances.len() as u64) < chains {
                distances.push(d);
            }
        }
    }
    let rungs = schedule.len() - 1;
    let medians: Vec<f64> = (0..rungs)
        .map(|k| stats::median(&distances.iter().map(|d| d[k]).collect::<Vec<_>>()))
        .collect();
    let rounds = 1000;
    let oks = stats::bootstrap_indices(distances.len(), rounds, seed ^ 0x0B00_5EED, |idx| {
        let meds: Vec<f64> = (0..rungs)
            .map(|k| stats::median(&idx.iter().map(|&i| distances[i][k]).collect::<Vec<_>>()))
            .collect();
        meds.windows(2).all(|w| w[1] <= w[0]) as u64 as f64
    });
    HausdorffResult {
        experiment: "hausdorff",
        schedule: schedule.to_vec(),
        chains: distances.len() as u64,
        chains_attempted: attempted,
        seed,
        distances,
        medians,
        bootstrap_rounds: rounds,
        fraction_weakly_decreasing: oks.iter().sum::<f64>() / rounds as f64,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeTailResult {
    pub experiment: &'static str,
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    /// histogram[d] = number of samples with root degree d
    pub histogram: Vec<u64>,
    pub min_degree: usize,
    pub slope: f64,
    pub intercept: f64,
}

/// Tail of the root degree among 3-connected samples, with a log-linear
/// fit of the frequencies.
pub fn experiment_degree_tail(n: usize, samples: u64, seed: u64) -> DegreeTailResult {
    let mut table = CountTable::new();
    table.tree_count(n);
    let degrees: Vec<usize> = (0..samples)
        .into_par_iter()
        .map_init(
            || table.clone(),
            |tbl, i| {
                let mut rng = sample_stream(seed, i + 1);
                let opts = PipelineOptions {
                    require_three_connected: true,
                    solve: false,
                    ..Default::default()
                };
                let s = pipeline_sample_rng(n, &mut rng, tbl, &opts).expect("pipeline sample");
                s.map.map.degree(s.map.root_tail())
            },
        )
        .collect();
    let max_deg = degrees.iter().copied().max().unwrap_or(0);
    let mut histogram = vec![0u64; max_deg + 1];
    for d in &degrees {
        histogram[*d] += 1;
    }
    let pts: Vec<(f64, f64)> = histogram
        .iter()
        .enumerate()
        .filter(|&(_, &c)| c > 0)
        .map(|(d, &c)| (d as f64, (c as f64 / samples as f64).ln()))
        .collect();
    let (slope, intercept) = stats::linear_fit(&pts);
    DegreeTailResult {
        experiment: "degtail",
        n,
        samples,
        seed,
        min_degree: degrees.iter().copied().min().unwrap_or(0),
        histogram,
        slope,
        intercept,
    }
}

// ---------------------------------------------------------------------
// Run directories
// ---------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: u32,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub command: String,
    pub seed: u64,
    pub params: serde_json::Value,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, params: serde_json::Value) -> Self {
        RunManifest {
            version: 1,
            tool: "sqmap",
            tool_version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            params,
        }
    }
}

/// Write a file atomically (temp file in the same directory, then rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[derive(Serialize)]
struct TreeJson {
    version: u32,
    twin: Vec<usize>,
    next: Vec<usize>,
    root_dart: usize,
    outer_face_dart: Option<usize>,
    internal_count: usize,
}

#[derive(Serialize)]
struct QuadJson {
    version: u32,
    twin: Vec<usize>,
    next: Vec<usize>,
    root_dart: usize,
    outer_face_dart: Option<usize>,
    edge_provenance: Vec<EdgeProvenance>,
}

#[derive(Serialize)]
struct SampleDiagnostics {
    n: usize,
    hex_index: usize,
    three_connected: bool,
    squarable: bool,
    rejections: u64,
    lambda: Option<f64>,
    tiling: Option<TilingReport>,
    solver_mode: SolveMode,
}

/// Persist one pipeline sample as a run directory:
/// manifest.json, maps/, squarings/, svg/, stats/.
pub fn run_sample(
    dir: &Path,
    n: usize,
    seed: u64,
    opts: &PipelineOptions,
) -> Result<PipelineSample, PipelineError> {
    let sample = pipeline_sample(n, seed, opts)?;
    let manifest = RunManifest::new(
        "sample",
        seed,
        serde_json::json!({
            "n": n,
            "hex_index": opts.hex_index,
            "require_three_connected": opts.require_three_connected,
            "mode": opts.mode,
        }),
    );
    write_json(&dir.join("manifest.json"), &manifest)?;
    let t = &sample.tree.map;
    write_json(
        &dir.join("maps/tree.json"),
        &TreeJson {
            version: 1,
            twin: t.map.twin_perm().to_vec(),
            next: t.map.next_perm().to_vec(),
            root_dart: t.root_dart,
            outer_face_dart: t.outer_face_dart,
            internal_count: sample.tree.internal_count,
        },
    )?;
    write_json(
        &dir.join("maps/quad.json"),
        &QuadJson {
            version: 1,
            twin: sample.quad.map.twin_perm().to_vec(),
            next: sample.quad.map.next_perm().to_vec(),
            root_dart: sample.quad.root_dart,
            outer_face_dart: sample.quad.outer_face_dart,
            edge_provenance: sample.quad_provenance.clone(),
        },
    )?;
    write_atomic(
        &dir.join("maps/map.json"),
        combmap::to_json(&sample.map).as_bytes(),
    )?;
    if let Some(sol) = &sample.solved {
        write_atomic(
            &dir.join("squarings/squaring.json"),
            squaring_to_json(&sol.squaring).as_bytes(),
        )?;
        let acc = accumulation_probe(&sol.squaring);
        let svg = render_svg(
            &sol.squaring,
            &RenderOptions {
                draw_lines: false,
                accumulation: Some(acc),
                ..Default::default()
            },
        );
        write_atomic(&dir.join("svg/squaring.svg"), svg.as_bytes())?;
    }
    write_json(
        &dir.join("stats/diagnostics.json"),
        &SampleDiagnostics {
            n,
            hex_index: sample.hex_index,
            three_connected: sample.three_connected,
            squarable: sample.squarable,
            rejections: sample.rejections,
            lambda: sample.solved.as_ref().map(|s| s.lambda),
            tiling: sample.solved.as_ref().map(|s| s.tiling),
            solver_mode: opts.mode,
        },
    )?;
    Ok(sample)
}

#[derive(Serialize)]
struct GrowSummary {
    schedule: Vec<usize>,
    lambdas: Vec<Option<f64>>,
    three_connected: Vec<bool>,
    hausdorff_consecutive: Vec<f64>,
}

/// Persist the snapshots of one coupled chain.
pub fn run_grow(
    dir: &Path,
    schedule: &[usize],
    seed: u64,
    opts: &PipelineOptions,
) -> Result<Vec<GrowSnapshot>, PipelineError> {
    let snaps = grow_sequence(schedule, seed, 0, opts)?;
    let manifest = RunManifest::new(
        "grow",
        seed,
        serde_json::json!({ "schedule": schedule, "mode": opts.mode }),
    );
    write_json(&dir.join("manifest.json"), &manifest)?;
    for s in &snaps {
        write_atomic(
            &dir.join(format!("maps/map_{:05}.json", s.n)),
            combmap::to_json(&s.map).as_bytes(),
        )?;
        if let Some(sq) = &s.squaring {
            write_atomic(
                &dir.join(format!("squarings/sq_{:05}.json", s.n)),
                squaring_to_json(sq).as_bytes(),
            )?;
            write_atomic(
                &dir.join(format!("svg/sq_{:05}.svg", s.n)),
                render_svg(sq, &RenderOptions::default()).as_bytes(),
            )?;
        }
    }
    let mut hd = Vec::new();
    for w in snaps.windows(2) {
        if let (Some(a), Some(b)) = (&w[0].squaring, &w[1].squaring) {
            hd.push(hausdorff_distance(a, b));
        }
    }
    write_json(
        &dir.join("stats/summary.json"),
        &GrowSummary {
            schedule: snaps.iter().map(|s| s.n).collect(),
            lambdas: snaps.iter().map(|s| s.lambda).collect(),
            three_connected: snaps.iter().map(|s| s.three_connected).collect(),
            hausdorff_consecutive: hd,
        },
    )?;
    Ok(snaps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combmap::canonical_code;
    use crate::tutte::tutte_forward;

    #[test]
    fn n1_sample_has_five_edges() {
        let s = pipeline_sample(1, 11, &PipelineOptions::default()).unwrap();
        assert_eq!(s.map.map.edge_count(), 5);
        assert_eq!(s.quad.map.vertex_count(), 7);
    }

    #[test]
    fn sample_is_deterministic() {
        let a = pipeline_sample(30, 99, &PipelineOptions::default()).unwrap();
        let b = pipeline_sample(30, 99, &PipelineOptions::default()).unwrap();
        assert_eq!(canonical_code(&a.map), canonical_code(&b.map));
        assert_eq!(a.hex_index, b.hex_index);
        match (&a.solved, &b.solved) {
            (Some(x), Some(y)) => assert_eq!(x.squaring.squares, y.squaring.squares),
            (None, None) => {}
            _ => panic!("solve mismatch"),
        }
    }

    #[test]
    fn forward_of_pipeline_map_matches_quad() {
        for seed in 0..10 {
            let s = pipeline_sample(12, seed, &PipelineOptions::default()).unwrap();
            let q2 = tutte_forward(&s.map);
            assert_eq!(canonical_code(&q2), canonical_code(&s.quad));
        }
    }

    #[test]
    fn squarings_validate_along_a_chain() {
        let snaps = grow_sequence(&[5, 10, 20], 3, 0, &PipelineOptions::default()).unwrap();
        assert_eq!(snaps.len(), 3);
        for s in &snaps {
            if let Some(sq) = &s.squaring {
                assert!(validate_tiling(sq).pass);
            }
        }
    }

    #[test]
    fn accumulation_probe_of_k4_is_center() {
        let sq = crate::squaring::square_map(&crate::fixtures::k4(), SolveMode::Iterative).unwrap();
        let (cx, cy) = accumulation_probe(&sq);
        assert!((cx - 0.5).abs() < 1e-12 && (cy - 0.5).abs() < 1e-12);
    }

    #[test]
    fn zero_samples_is_an_error() {
        let result = std::panic::catch_unwind(|| experiment_threeconn(5, 0, 1));
        assert!(result.is_err());
    }
}
