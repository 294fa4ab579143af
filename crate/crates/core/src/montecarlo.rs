//! Seeded path ensembles, strong-error ladders and the checker/simulator
//! coherence test.
//!
//! Path `i` of an ensemble with root seed `r` uses `rng::path_seed(r, i)`,
//! so ensembles are reproducible and independent of the thread count.

use rayon::prelude::*;
use thiserror::Error;

use crate::manifold::{GeometryError, ImplicitManifold};
use crate::rng;
use crate::sde::{closed_form_for_path, simulate, BuiltinModel, PathRecord, SdeProblem, SimError};
use crate::stats::{compensated_sum, least_squares_slope, quantile_sorted, Summary};
use crate::viability::{check_manifold, CheckError, CheckOptions, Verdict, ViabilityReport};
use crate::Vector;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonteCarloError {
    #[error(transparent)]
    Simulation(#[from] SimError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error("step ladder needs at least 4 levels, got {0}")]
    InsufficientLadder(usize),
    #[error("step ladder {0:?} is not geometric")]
    NonGeometricLadder(Vec<usize>),
    #[error("all {0} paths failed")]
    AllPathsFailed(usize),
    #[error("{0}")]
    Invalid(String),
}

/// Size and seed of an ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnsembleConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub root_seed: u64,
    /// Number of leading paths returned in full.
    pub keep_paths: usize,
}

impl EnsembleConfig {
    pub fn new(n_paths: usize, n_steps: usize, root_seed: u64) -> Self {
        Self {
            n_paths,
            n_steps,
            root_seed,
            keep_paths: 0,
        }
    }

    pub fn keeping(mut self, count: usize) -> Self {
        self.keep_paths = count;
        self
    }
}

/// Simulates every path of the ensemble in parallel and maps it through `f`.
/// Results are in path order.
pub fn map_paths<T, F>(
    problem: &SdeProblem,
    config: &EnsembleConfig,
    f: F,
) -> Vec<Result<T, MonteCarloError>>
where
    T: Send,
    F: Fn(usize, PathRecord) -> Result<T, MonteCarloError> + Sync,
{
    (0..config.n_paths)
        .into_par_iter()
        .map(|i| {
            let seed = rng::path_seed(config.root_seed, i as u64);
            let path = simulate(problem, config.n_steps, seed)?;
            f(i, path)
        })
        .collect()
}

/// Per-path outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSummary {
    pub index: usize,
    pub seed: u64,
    /// Running supremum of `d_K` over grid nodes and post-jump states.
    pub sup_dist: f64,
    pub terminal_dist: f64,
    pub n_jumps: usize,
    /// `max_i |X_sim(s_i) − X_oracle(s_i)|` when an oracle is supplied.
    pub strong_error: Option<f64>,
}

/// Cross-path band of `d_K` and `|X|` at one grid node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeBand {
    pub time: f64,
    pub dist_q05: f64,
    pub dist_q50: f64,
    pub dist_q95: f64,
    pub radius_min: f64,
    pub radius_mean: f64,
    pub radius_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub config: EnsembleConfig,
    pub paths: Vec<PathSummary>,
    pub failures: Vec<(usize, MonteCarloError)>,
    pub sup_dist: Summary,
    pub terminal_dist: Summary,
    pub strong_error: Option<Summary>,
    pub bands: Vec<NodeBand>,
    pub kept: Vec<PathRecord>,
}

impl EnsembleStats {
    pub fn n_paths(&self) -> usize {
        self.config.n_paths
    }
}

/// Closed-form solution sampled along a simulated path.
pub type Oracle<'a> = &'a (dyn Fn(&PathRecord) -> Result<Vec<Vector>, SimError> + Sync);

pub fn run_ensemble(
    problem: &SdeProblem,
    manifold: &ImplicitManifold,
    config: &EnsembleConfig,
) -> Result<EnsembleStats, MonteCarloError> {
    run_ensemble_with_oracle(problem, manifold, config, None)
}

struct PathOutcome {
    summary: PathSummary,
    node_dist: Vec<f64>,
    node_radius: Vec<f64>,
    times: Vec<f64>,
    record: Option<PathRecord>,
}

/// Running supremum of `d_K` along a path, including post-jump states.
pub fn path_sup_distance(
    manifold: &ImplicitManifold,
    path: &PathRecord,
) -> Result<f64, GeometryError> {
    let mut sup = 0.0_f64;
    for x in &path.states {
        sup = sup.max(manifold.distance(x)?);
    }
    for jump in &path.jump_log {
        sup = sup.max(manifold.distance(&jump.post_state())?);
    }
    Ok(sup)
}

pub fn run_ensemble_with_oracle(
    problem: &SdeProblem,
    manifold: &ImplicitManifold,
    config: &EnsembleConfig,
    oracle: Option<Oracle<'_>>,
) -> Result<EnsembleStats, MonteCarloError> {
    if config.n_paths == 0 {
        return Err(MonteCarloError::Invalid(
            "ensemble needs at least one path".into(),
        ));
    }
    let results = map_paths(problem, config, |i, path| {
        let node_dist = path
            .states
            .iter()
            .map(|x| manifold.distance(x))
            .collect::<Result<Vec<f64>, _>>()?;
        let mut sup_dist = node_dist.iter().copied().fold(0.0, f64::max);
        for jump in &path.jump_log {
            sup_dist = sup_dist.max(manifold.distance(&jump.post_state())?);
        }
        let strong_error = match oracle {
            Some(o) => {
                let exact = o(&path)?;
                Some(
                    path.states
                        .iter()
                        .zip(&exact)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max),
                )
            }
            None => None,
        };
        Ok(PathOutcome {
            summary: PathSummary {
                index: i,
                seed: path.seed,
                sup_dist,
                terminal_dist: *node_dist.last().expect("non-empty path"),
                n_jumps: path.jump_log.len(),
                strong_error,
            },
            node_radius: path.states.iter().map(|x| x.norm()).collect(),
            node_dist,
            times: path.times.clone(),
            record: (i < config.keep_paths).then_some(path),
        })
    });

    let mut outcomes = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => failures.push((i, e)),
        }
    }
    if outcomes.is_empty() {
        return Err(MonteCarloError::AllPathsFailed(config.n_paths));
    }

    let sup: Vec<f64> = outcomes.iter().map(|o| o.summary.sup_dist).collect();
    let terminal: Vec<f64> = outcomes.iter().map(|o| o.summary.terminal_dist).collect();
    let strong: Vec<f64> = outcomes
        .iter()
        .filter_map(|o| o.summary.strong_error)
        .collect();

    let n_nodes = outcomes[0].node_dist.len();
    let bands = (0..n_nodes)
        .map(|k| {
            let mut d: Vec<f64> = outcomes.iter().map(|o| o.node_dist[k]).collect();
            d.sort_by(f64::total_cmp);
            let r: Vec<f64> = outcomes.iter().map(|o| o.node_radius[k]).collect();
            NodeBand {
                time: outcomes[0].times[k],
                dist_q05: quantile_sorted(&d, 0.05),
                dist_q50: quantile_sorted(&d, 0.5),
                dist_q95: quantile_sorted(&d, 0.95),
                radius_min: r.iter().copied().fold(f64::INFINITY, f64::min),
                radius_mean: compensated_sum(r.iter().copied()) / r.len() as f64,
                radius_max: r.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();

    let (paths, kept): (Vec<PathSummary>, Vec<Option<PathRecord>>) =
        outcomes.into_iter().map(|o| (o.summary, o.record)).unzip();
    Ok(EnsembleStats {
        config: *config,
        paths,
        failures,
        sup_dist: Summary::of(&sup).expect("non-empty"),
        terminal_dist: Summary::of(&terminal).expect("non-empty"),
        strong_error: Summary::of(&strong),
        bands,
        kept: kept.into_iter().flatten().collect(),
    })
}

/// Mean strong error at one step size.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceLevel {
    pub n_steps: usize,
    pub h: f64,
    pub mean_error: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub levels: Vec<ConvergenceLevel>,
    /// Least-squares slope of `log(mean error)` against `log(h)`; `None`
    /// when every level matched the oracle exactly.
    pub slope: Option<f64>,
}

impl ConvergenceReport {
    pub fn is_exact_match(&self) -> bool {
        self.slope.is_none()
    }
}

fn check_ladder(steps: &[usize]) -> Result<(), MonteCarloError> {
    if steps.len() < 4 {
        return Err(MonteCarloError::InsufficientLadder(steps.len()));
    }
    if steps.contains(&0) {
        return Err(MonteCarloError::NonGeometricLadder(steps.to_vec()));
    }
    let ratio = steps[1] as f64 / steps[0] as f64;
    let geometric = ratio != 1.0
        && steps
            .windows(2)
            .all(|w| ((w[1] as f64 / w[0] as f64) / ratio - 1.0).abs() < 1e-12);
    if geometric {
        Ok(())
    } else {
        Err(MonteCarloError::NonGeometricLadder(steps.to_vec()))
    }
}

/// Strong-error slope for any problem with a pathwise oracle. Every level
/// uses the same per-path seeds.
pub fn convergence_rate_with(
    problem: &SdeProblem,
    steps: &[usize],
    n_paths: usize,
    root_seed: u64,
    oracle: Oracle<'_>,
) -> Result<ConvergenceReport, MonteCarloError> {
    check_ladder(steps)?;
    if n_paths == 0 {
        return Err(MonteCarloError::Invalid(
            "convergence needs at least one path".into(),
        ));
    }
    let span = problem.horizon - problem.t0;
    if span <= 0.0 {
        return Err(MonteCarloError::Invalid(
            "convergence needs a positive horizon".into(),
        ));
    }
    let levels = steps
        .iter()
        .map(|&n| {
            let config = EnsembleConfig::new(n_paths, n, root_seed);
            let errors = map_paths(problem, &config, |_, path| {
                let exact = oracle(&path)?;
                Ok(path
                    .states
                    .iter()
                    .zip(&exact)
                    .map(|(a, b)| (a - b).norm())
                    .fold(0.0, f64::max))
            })
            .into_iter()
            .collect::<Result<Vec<f64>, _>>()?;
            let s = Summary::of(&errors).expect("n_paths >= 1");
            Ok(ConvergenceLevel {
                n_steps: n,
                h: span / n as f64,
                mean_error: s.mean,
                std_err: s.std_err,
            })
        })
        .collect::<Result<Vec<_>, MonteCarloError>>()?;

    if levels.iter().all(|l| l.mean_error == 0.0) {
        return Ok(ConvergenceReport {
            levels,
            slope: None,
        });
    }
    if levels.iter().any(|l| l.mean_error <= 0.0) {
        return Err(MonteCarloError::Invalid(
            "some but not all ladder levels have zero error".into(),
        ));
    }
    let xs: Vec<f64> = levels.iter().map(|l| l.h.ln()).collect();
    let ys: Vec<f64> = levels.iter().map(|l| l.mean_error.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    Ok(ConvergenceReport {
        levels,
        slope: Some(slope),
    })
}

/// Strong-error slope of a built-in model against its closed form on
/// `[t0, t1]`.
#[allow(clippy::too_many_arguments)]
pub fn convergence_rate(
    model: BuiltinModel,
    beta: f64,
    lambda: f64,
    t0: f64,
    t1: f64,
    steps: &[usize],
    n_paths: usize,
    root_seed: u64,
) -> Result<ConvergenceReport, MonteCarloError> {
    let problem = model.problem(beta, lambda, t0, t1)?;
    let oracle = move |p: &PathRecord| closed_form_for_path(model, beta, lambda, p);
    convergence_rate_with(&problem, steps, n_paths, root_seed, &oracle)
}

/// `|X_s|` of the rotation model with radial decay: the angular noise leaves
/// the radius deterministic.
pub fn decaying_rotation_radius(beta: f64, elapsed: f64) -> f64 {
    let (c, s) = (beta.cos(), beta.sin());
    (c * c + s * s * (-2.0 * elapsed).exp()).sqrt()
}

/// Inputs of [`coherence_test`].
#[derive(Debug, Clone)]
pub struct CoherenceSetup<'a> {
    pub problem: &'a SdeProblem,
    pub manifold: &'a ImplicitManifold,
    pub check_times: Vec<f64>,
    pub check_points: usize,
    pub check_options: CheckOptions,
    pub ensemble: EnsembleConfig,
    pub viab_stat_tol: f64,
    pub fail_floor: f64,
}

pub const DEFAULT_VIAB_STAT_TOL: f64 = 0.05;
pub const DEFAULT_FAIL_FLOOR: f64 = 0.3;

#[derive(Debug, Clone, PartialEq)]
pub struct CoherenceReport {
    pub checker: ViabilityReport,
    pub ensemble: EnsembleStats,
    pub mean_sup_dist: f64,
    pub mean_terminal_dist: f64,
    pub viab_stat_tol: f64,
    pub fail_floor: f64,
    /// PASS when the ensemble agrees with the checker's verdict.
    pub verdict: Verdict,
}

/// A checker PASS must come with a small mean `sup_t d_K`, a FAIL with a
/// mean terminal distance of at least `fail_floor`.
pub fn coherence_test(
    setup: &CoherenceSetup<'_>,
    seed: u64,
) -> Result<CoherenceReport, MonteCarloError> {
    let p = setup.problem;
    let checker = check_manifold(
        &p.coefficients,
        &p.jumps,
        setup.manifold,
        &setup.check_times,
        setup.check_points,
        &setup.check_options,
        seed,
    )?;
    let ensemble = run_ensemble(p, setup.manifold, &setup.ensemble)?;
    let mean_sup_dist = ensemble.sup_dist.mean;
    let mean_terminal_dist = ensemble.terminal_dist.mean;
    let coherent = match checker.verdict {
        Verdict::Pass => mean_sup_dist <= setup.viab_stat_tol,
        Verdict::Fail => mean_terminal_dist >= setup.fail_floor,
    };
    Ok(CoherenceReport {
        checker,
        ensemble,
        mean_sup_dist,
        mean_terminal_dist,
        viab_stat_tol: setup.viab_stat_tol,
        fail_floor: setup.fail_floor,
        verdict: Verdict::from_pass(coherent),
    })
}
