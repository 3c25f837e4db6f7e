use log::info;

use super::config::{Experiment, ExperimentConfig, ModeChoice};
use super::generate::{gen_lp_instance, gen_query_instance};
use super::records::RunRecord;
use super::stream_rng;
use crate::error::{invalid, Result};
use crate::lpsolve::{
    constraint_index, scalar_private_solve, ConstraintOracle, LPInstance, LpSolveOutput, ScalarLpParams,
};
use crate::mechanism::SelectionMode;
use crate::mips::{measure_slack, IndexFlavor, MipsIndex, VectorSet};
use crate::mwem::{fast_mwem_with_index, mwem_classic, AugmentedIndex, Histogram, MwemOutput, MwemParams};

const STREAM_CLASSIC: u64 = 1;
const STREAM_FAST: u64 = 2;
const ALL_FLAVORS: [IndexFlavor; 3] = [IndexFlavor::Flat, IndexFlavor::Ivf, IndexFlavor::Hnsw];
const DEFAULT_ALPHA: f64 = 0.5;

/// Runs the configured experiment.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    match config.experiment {
        None => invalid("no experiment selected"),
        Some(Experiment::QueryParity) => run_query_parity(config),
        Some(Experiment::QueryErrorIndices) => run_query_error_indices(config),
        Some(Experiment::QueryScaling) => run_query_scaling(config),
        Some(Experiment::MarginStudy) => run_margin_study(config),
        Some(Experiment::NAblation) => run_n_ablation(config),
        Some(Experiment::LpParity | Experiment::LpScaling) => run_lp_experiments(config),
    }
}

/// Fields shared by every row of one run.
#[derive(Clone)]
struct RowBase {
    hash: String,
    seed: u64,
    experiment: Experiment,
    m: usize,
    u: Option<usize>,
    n: Option<usize>,
    d: Option<usize>,
}

impl RowBase {
    fn row(&self, flavor: &str, iteration: usize) -> RunRecord {
        RunRecord {
            config_hash: self.hash.clone(),
            seed: self.seed,
            experiment: self.experiment.to_string(),
            m: Some(self.m),
            u: self.u,
            n: self.n,
            d: self.d,
            flavor: flavor.to_string(),
            iteration,
            selected: None,
            error: None,
            samples_drawn: None,
            wall_nanos: None,
            build_nanos: None,
        }
    }

    fn mwem_rows(&self, flavor: &str, out: &MwemOutput, build_nanos: Option<u64>) -> Vec<RunRecord> {
        let mut head = self.row(flavor, 0);
        head.error = Some(out.trace.initial_error);
        head.build_nanos = build_nanos;
        let mut rows = vec![head];
        for (t, it) in out.trace.iterations.iter().enumerate() {
            let mut r = self.row(flavor, t + 1);
            r.selected = Some(it.selected);
            r.error = it.error;
            r.samples_drawn = Some(it.samples_drawn);
            r.wall_nanos = Some(it.selection_nanos);
            rows.push(r);
        }
        if let Some(last) = rows.last_mut() {
            last.error = Some(out.trace.final_error);
        }
        rows
    }

    /// `error(classic) − error(fast)` wherever both runs measured.
    fn diff_rows(&self, classic: &MwemOutput, fast: &MwemOutput) -> Vec<RunRecord> {
        let mut rows = Vec::new();
        let mut push = |t: usize, a: f64, b: f64| {
            let mut r = self.row("diff", t);
            r.error = Some(a - b);
            rows.push(r);
        };
        push(0, classic.trace.initial_error, fast.trace.initial_error);
        let pairs = classic.trace.iterations.iter().zip(&fast.trace.iterations).enumerate();
        let last = classic.trace.iterations.len();
        for (t, (a, b)) in pairs {
            if t + 1 == last {
                push(last, classic.trace.final_error, fast.trace.final_error);
            } else if let (Some(a), Some(b)) = (a.error, b.error) {
                push(t + 1, a, b);
            }
        }
        rows
    }

    fn lp_rows(&self, flavor: &str, out: &LpSolveOutput, alpha: f64, build_nanos: Option<u64>) -> Vec<RunRecord> {
        let mut head = self.row(flavor, 0);
        head.build_nanos = build_nanos;
        let mut rows = vec![head];
        for (t, it) in out.iterations.iter().enumerate() {
            let mut r = self.row(flavor, t + 1);
            r.selected = Some(it.selected);
            r.samples_drawn = Some(it.samples_drawn);
            r.wall_nanos = Some(it.selection_nanos);
            rows.push(r);
        }
        if let Some(last) = rows.last_mut() {
            last.error = Some(out.report.violated_fraction_at(alpha));
        }
        rows
    }
}

struct QueryInstance {
    h: Histogram,
    queries: VectorSet,
    u: usize,
    n: usize,
}

fn query_instance(u: usize, n: usize, m: usize, seed: u64) -> Result<QueryInstance> {
    let (h, queries) = gen_query_instance(u, n, m, seed)?;
    Ok(QueryInstance { h, queries, u, n })
}

fn mwem_params(config: &ExperimentConfig, inst: &QueryInstance, t: usize, error_every: usize) -> Result<MwemParams> {
    let alpha = config.alpha.unwrap_or(DEFAULT_ALPHA);
    Ok(MwemParams::new(alpha, config.epsilon, config.delta, inst.queries.len(), inst.u, inst.n)?
        .with_iterations(config.t.unwrap_or(t), inst.u)?
        .with_error_every(config.error_every.unwrap_or(error_every)))
}

/// Resolves the LazyEM mode for an index. Runtime mode without a configured
/// slack measures it on `probe`.
fn selection_mode(config: &ExperimentConfig, index: &MipsIndex, probe: &[f64], k: usize) -> Result<SelectionMode> {
    let choice = config
        .mode
        .unwrap_or(if index.is_exact() { ModeChoice::ExactSet } else { ModeChoice::Runtime });
    Ok(match choice {
        ModeChoice::ExactSet => SelectionMode::ExactSet,
        ModeChoice::Private => SelectionMode::Private { slack: config.slack.unwrap_or(0.0) },
        ModeChoice::Runtime => {
            let slack = match config.slack {
                Some(c) => c,
                None => measure_slack(index, &VectorSet::new(probe.to_vec(), probe.len())?, k)?,
            };
            SelectionMode::Runtime { slack }
        }
    })
}

fn classic_run(inst: &QueryInstance, params: &MwemParams, seed: u64) -> Result<MwemOutput> {
    mwem_classic(&inst.queries, &inst.h, params, &mut stream_rng(seed, STREAM_CLASSIC))
}

fn fast_run(
    config: &ExperimentConfig,
    inst: &QueryInstance,
    params: &MwemParams,
    flavor: IndexFlavor,
    seed: u64,
) -> Result<(MwemOutput, u64)> {
    let index = AugmentedIndex::build(&inst.queries, &config.index_config(flavor, seed))?;
    let uniform = 1.0 / inst.u as f64;
    let probe: Vec<f64> = inst.h.mass().iter().map(|x| x - uniform).collect();
    let mode = selection_mode(config, index.index(), &probe, params.k)?;
    if let SelectionMode::Runtime { slack } = mode {
        info!("{flavor}: runtime mode with slack {slack:.3e}");
    }
    let out = fast_mwem_with_index(&inst.queries, &index, &inst.h, params, mode, &mut stream_rng(seed, STREAM_FAST))?;
    Ok((out, index.build_nanos()))
}

/// Classic MWEM against Fast-MWEM over a flat index on the same instance,
/// with per-iteration error differences.
pub fn run_query_parity(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let experiment = Experiment::QueryParity;
    let hash = config.hash();
    let u = config.u.unwrap_or(config.pick(512, 3000));
    let n = config.n_or(&[500], &[500])[0];
    let t = config.pick(2000, 20000);
    let mut rows = Vec::new();
    for m in config.m_or(&[200, 500, 1000], &[200, 500, 1000]) {
        for seed in config.seeds(10) {
            info!("{experiment}: m = {m}, seed = {seed}");
            let inst = query_instance(u, n, m, seed)?;
            let params = mwem_params(config, &inst, t, 100)?;
            let base = RowBase { hash: hash.clone(), seed, experiment, m, u: Some(u), n: Some(n), d: None };
            let classic = classic_run(&inst, &params, seed)?;
            let (fast, build) = fast_run(config, &inst, &params, IndexFlavor::Flat, seed)?;
            rows.extend(base.mwem_rows("classic", &classic, None));
            rows.extend(base.mwem_rows("flat", &fast, Some(build)));
            rows.extend(base.diff_rows(&classic, &fast));
        }
    }
    Ok(rows)
}

/// Error traces of classic MWEM and Fast-MWEM over each index flavor.
pub fn run_query_error_indices(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let experiment = Experiment::QueryErrorIndices;
    let hash = config.hash();
    let u = config.u.unwrap_or(config.pick(512, 3000));
    let n = config.n_or(&[500], &[500])[0];
    let t = config.pick(2000, 20000);
    let mut rows = Vec::new();
    for m in config.m_or(&[1000], &[1000]) {
        for seed in config.seeds(1) {
            info!("{experiment}: m = {m}, seed = {seed}");
            let inst = query_instance(u, n, m, seed)?;
            let params = mwem_params(config, &inst, t, 100)?;
            let base = RowBase { hash: hash.clone(), seed, experiment, m, u: Some(u), n: Some(n), d: None };
            rows.extend(base.mwem_rows("classic", &classic_run(&inst, &params, seed)?, None));
            for flavor in config.flavors_or(&ALL_FLAVORS) {
                let (out, build) = fast_run(config, &inst, &params, flavor, seed)?;
                rows.extend(base.mwem_rows(flavor.as_str(), &out, Some(build)));
            }
        }
    }
    Ok(rows)
}

/// Per-iteration selection time, samples and build time of Fast-MWEM as
/// `m` grows, for each index flavor.
pub fn run_query_scaling(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let experiment = Experiment::QueryScaling;
    let hash = config.hash();
    let u = config.u.unwrap_or(config.pick(64, 3000));
    let n = config.n_or(&[500], &[500])[0];
    let t = config.pick(20, 100);
    let mut rows = Vec::new();
    for m in config.m_or(&[10_000, 30_000, 100_000], &[100_000, 300_000, 1_000_000, 1_500_000]) {
        for seed in config.seeds(1) {
            let inst = query_instance(u, n, m, seed)?;
            let params = mwem_params(config, &inst, t, 0)?;
            let base = RowBase { hash: hash.clone(), seed, experiment, m, u: Some(u), n: Some(n), d: None };
            for flavor in config.flavors_or(&ALL_FLAVORS) {
                info!("{experiment}: m = {m}, {flavor}, seed = {seed}");
                let (out, build) = fast_run(config, &inst, &params, flavor, seed)?;
                rows.extend(base.mwem_rows(flavor.as_str(), &out, Some(build)));
            }
        }
    }
    Ok(rows)
}

/// Samples drawn per Fast-MWEM round over a flat index; the extra-sample
/// count is `samples_drawn − k`.
pub fn run_margin_study(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let experiment = Experiment::MarginStudy;
    let hash = config.hash();
    let u = config.u.unwrap_or(128);
    let n = config.n_or(&[500], &[500])[0];
    let mut rows = Vec::new();
    for m in config.m_or(&[500, 2000, 20_000], &[500, 2000, 20_000]) {
        for seed in config.seeds(1) {
            info!("{experiment}: m = {m}, seed = {seed}");
            let inst = query_instance(u, n, m, seed)?;
            let params = mwem_params(config, &inst, 500, 0)?;
            let base = RowBase { hash: hash.clone(), seed, experiment, m, u: Some(u), n: Some(n), d: None };
            let flavor = config.flavors_or(&[IndexFlavor::Flat])[0];
            let (out, build) = fast_run(config, &inst, &params, flavor, seed)?;
            rows.extend(base.mwem_rows(flavor.as_str(), &out, Some(build)));
        }
    }
    Ok(rows)
}

/// Final errors of classic and flat Fast-MWEM as the record count grows,
/// with `T = n²` unless overridden.
pub fn run_n_ablation(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let experiment = Experiment::NAblation;
    let hash = config.hash();
    let u = config.u.unwrap_or(config.pick(512, 3000));
    let mut rows = Vec::new();
    for m in config.m_or(&[100], &[100]) {
        for n in config.n_or(&[10, 20, 40, 80], &[10, 20, 40, 80, 160]) {
            for seed in config.seeds(3) {
                info!("{experiment}: n = {n}, seed = {seed}");
                let inst = query_instance(u, n, m, seed)?;
                let params = mwem_params(config, &inst, n * n, 0)?;
                let base = RowBase { hash: hash.clone(), seed, experiment, m, u: Some(u), n: Some(n), d: None };
                let classic = classic_run(&inst, &params, seed)?;
                let (fast, _) = fast_run(config, &inst, &params, IndexFlavor::Flat, seed)?;
                for (flavor, out) in [("classic", &classic), ("flat", &fast)] {
                    let mut r = base.row(flavor, params.iterations);
                    r.error = Some(out.trace.final_error);
                    rows.push(r);
                }
            }
        }
    }
    Ok(rows)
}

fn lp_run(
    config: &ExperimentConfig,
    lp: &LPInstance,
    params: &ScalarLpParams,
    flavor: Option<IndexFlavor>,
    seed: u64,
) -> Result<(LpSolveOutput, Option<u64>)> {
    let Some(flavor) = flavor else {
        let out = scalar_private_solve(lp, params, ConstraintOracle::Exhaustive, &mut stream_rng(seed, STREAM_CLASSIC))?;
        return Ok((out, None));
    };
    let start = std::time::Instant::now();
    let index = constraint_index(lp, &config.index_config(flavor, seed))?;
    let build = start.elapsed().as_nanos() as u64;
    let d = lp.d();
    let mut probe = vec![1.0 / d as f64; d];
    probe.push(-1.0);
    let mode = selection_mode(config, &index, &probe, params.k)?;
    let oracle = ConstraintOracle::Lazy { index: &index, mode };
    let out = scalar_private_solve(lp, params, oracle, &mut stream_rng(seed, STREAM_FAST))?;
    Ok((out, Some(build)))
}

/// Scalar-private LP solving with the exhaustive mechanism against LazyEM
/// over each configured flavor. The parity experiment defaults to flat
/// only; the scaling experiment sweeps larger `m` over all flavors.
pub fn run_lp_experiments(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    let experiment = config.experiment.unwrap_or(Experiment::LpParity);
    let scaling = experiment == Experiment::LpScaling;
    let hash = config.hash();
    let d = config.d.unwrap_or(20);
    let alpha = config.alpha.unwrap_or(DEFAULT_ALPHA);
    let (grid, t, reps, flavors) = if scaling {
        (
            config.m_or(&[10_000, 30_000, 100_000], &[300_000, 1_000_000, 1_500_000]),
            config.pick(20, 100),
            1,
            config.flavors_or(&ALL_FLAVORS),
        )
    } else {
        (config.m_or(&[2000], &[2000]), config.pick(1000, 5000), 10, config.flavors_or(&[IndexFlavor::Flat]))
    };
    let mut rows = Vec::new();
    for m in grid {
        for seed in config.seeds(reps) {
            info!("{experiment}: m = {m}, seed = {seed}");
            let lp = gen_lp_instance(m, d, seed)?;
            let params = ScalarLpParams::new(&lp, alpha, config.epsilon, config.delta)?
                .with_iterations(config.t.unwrap_or(t), d)?;
            let base = RowBase { hash: hash.clone(), seed, experiment, m, u: None, n: None, d: Some(d) };
            let (out, _) = lp_run(config, &lp, &params, None, seed)?;
            rows.extend(base.lp_rows("exhaustive", &out, alpha, None));
            for &flavor in &flavors {
                let (out, build) = lp_run(config, &lp, &params, Some(flavor), seed)?;
                rows.extend(base.lp_rows(flavor.as_str(), &out, alpha, build));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            m: vec![20],
            u: Some(32),
            n: vec![50],
            d: Some(5),
            t: Some(12),
            repetitions: Some(2),
            error_every: Some(4),
            ..ExperimentConfig::for_experiment(experiment)
        }
    }

    fn strip_times(mut rows: Vec<RunRecord>) -> Vec<RunRecord> {
        for r in &mut rows {
            r.wall_nanos = None;
            r.build_nanos = None;
        }
        rows
    }

    #[test]
    fn every_experiment_runs_and_is_reproducible() {
        for e in Experiment::ALL {
            let c = tiny(e);
            let a = run_experiment(&c).unwrap();
            assert!(!a.is_empty(), "{e}");
            assert!(a.iter().all(|r| r.experiment == e.as_str() && r.config_hash == c.hash()));
            assert_eq!(strip_times(a), strip_times(run_experiment(&c).unwrap()), "{e}");
        }
    }

    #[test]
    fn parity_rows_are_paired() {
        let rows = run_query_parity(&tiny(Experiment::QueryParity)).unwrap();
        let count = |f: &str| rows.iter().filter(|r| r.flavor == f).count();
        assert_eq!(count("classic"), 2 * 13);
        assert_eq!(count("flat"), 2 * 13);
        // Iteration 0, rounds 4 and 8, and the final round.
        assert_eq!(count("diff"), 2 * 4);
    }

    #[test]
    fn missing_experiment_is_rejected() {
        assert!(run_experiment(&ExperimentConfig::default()).is_err());
    }
}
