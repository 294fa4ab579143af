//! The four subcommands. Each writes its files into the output directory and
//! returns a summary plus an optional verdict.

use std::fmt::Write as _;
use std::io;
use std::path::PathBuf;

use svpkit::montecarlo::{self, EnsembleConfig, MonteCarloError};
use svpkit::sde::closed_form_for_path;
use svpkit::stats::Summary;
use svpkit::supersolution::{
    check_supersolution_with, default_slack_tol, radius_ladder, HessianMode,
};
use svpkit::viability::{check_manifold, time_grid};
use svpkit::{BuiltinModel, CheckError, PathRecord, TubeGrid, Vector, Verdict};
use thiserror::Error;

use crate::output::{float, header, indexed, OutputDir};
use crate::scenario::{ModelKind, Scenario, ScenarioError, ToleranceProfile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("output: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Check(#[from] CheckError),
    #[error(transparent)]
    MonteCarlo(#[from] MonteCarloError),
    #[error("{0}")]
    Usage(String),
}

/// Result of a successful run. `verdict` is `None` for commands that only
/// produce data.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub verdict: Option<Verdict>,
    pub summary: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.verdict {
            Some(Verdict::Fail) => 1,
            _ => 0,
        }
    }
}

pub const EXIT_ERROR: i32 = 2;

pub fn exit_code(result: &Result<Outcome, CliError>) -> i32 {
    match result {
        Ok(o) => o.exit_code(),
        Err(_) => EXIT_ERROR,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    Check,
    Simulate,
    Supersolution,
    /// Step counts; `None` uses the scenario's ladder.
    Convergence {
        ladder: Option<Vec<usize>>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Check => "check",
            Command::Simulate => "simulate",
            Command::Supersolution => "supersolution",
            Command::Convergence { .. } => "convergence",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub scenario: PathBuf,
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub profile: Option<ToleranceProfile>,
}

/// Parses `a..b` (step counts `2^a ..= 2^b`) or a comma-separated list of
/// step counts.
pub fn parse_ladder(spec: &str) -> Result<Vec<usize>, String> {
    let spec = spec.trim();
    if let Some((a, b)) = spec.split_once("..") {
        let lo: u32 = a
            .trim()
            .parse()
            .map_err(|_| format!("bad ladder start `{a}`"))?;
        let hi: u32 = b
            .trim()
            .parse()
            .map_err(|_| format!("bad ladder end `{b}`"))?;
        if lo > hi || hi >= usize::BITS {
            return Err(format!("ladder exponents {lo}..{hi} out of range"));
        }
        return Ok((lo..=hi).map(|k| 1usize << k).collect());
    }
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad step count `{s}`"))
        })
        .collect()
}

pub fn run(command: &Command, opts: &RunOptions) -> Result<Outcome, CliError> {
    let mut scenario = Scenario::load(&opts.scenario)?;
    if let Some(p) = opts.profile {
        scenario.numerics.profile = p;
    }
    let seed = opts.seed.unwrap_or(scenario.numerics.seed);
    let out = OutputDir::create(&opts.out)?;
    let (verdict, body) = match command {
        Command::Check => check(&scenario, seed, &out)?,
        Command::Simulate => simulate(&scenario, seed, &out)?,
        Command::Supersolution => supersolution(&scenario, seed, &out)?,
        Command::Convergence { ladder } => convergence(&scenario, seed, ladder.as_deref(), &out)?,
    };
    let mut summary = String::new();
    writeln!(summary, "command: {}", command.name()).unwrap();
    writeln!(summary, "scenario: {}", scenario.name).unwrap();
    writeln!(summary, "scenario_sha256: {}", scenario.hash).unwrap();
    writeln!(summary, "seed: {seed}").unwrap();
    summary.push_str(&body);
    out.text("summary.txt", &summary)?;
    Ok(Outcome { verdict, summary })
}

fn point_fields(x: &Vector) -> impl Iterator<Item = String> + '_ {
    x.iter().map(|v| float(*v))
}

fn fmt_point(x: &Vector) -> String {
    let parts: Vec<String> = x.iter().map(|v| format!("{v:.6}")).collect();
    format!("({})", parts.join(", "))
}

type Body = (Option<Verdict>, String);

fn check(s: &Scenario, seed: u64, out: &OutputDir) -> Result<Body, CliError> {
    let p = &s.problem;
    let n = &s.numerics;
    let times = time_grid(p.t0, p.horizon, n.check_times);
    let report = check_manifold(
        &p.coefficients,
        &p.jumps,
        &s.manifold,
        &times,
        n.check_points,
        &s.check_options(),
        seed,
    )?;

    let m = s.manifold.ambient_dim();
    let mut cols = header(&["time"]);
    cols.extend(indexed("x", m));
    cols.extend(header(&["kind", "index", "residual"]));
    let mut table = out.csv("check_residuals.csv", &cols)?;
    for sample in &report.samples {
        let kinds = [
            ("drift", &sample.drift),
            ("tangency", &sample.tangency),
            ("jump", &sample.jump),
        ];
        for (kind, values) in kinds {
            for (i, v) in values.iter().enumerate() {
                let mut row = vec![float(sample.time)];
                row.extend(point_fields(&sample.point));
                row.extend([kind.to_string(), (i + 1).to_string(), float(*v)]);
                table.row(&row)?;
            }
        }
    }
    table.finish()?;

    let tol = report.tolerances;
    let worst = report.worst_sample();
    let mut body = String::new();
    writeln!(
        body,
        "{} max residuals (drift {:.3e}, tangency {:.3e}, jump {:.3e})",
        report.verdict, report.max_drift, report.max_tangency, report.max_jump
    )
    .unwrap();
    writeln!(
        body,
        "tolerances (drift {:e}, tangency {:e}, jump {:e}), derivatives {:?}",
        tol.drift, tol.tangency, tol.jump, report.mode
    )
    .unwrap();
    writeln!(
        body,
        "verdicts: drift {}, tangency {}, jump {}",
        report.drift_verdict, report.tangency_verdict, report.jump_verdict
    )
    .unwrap();
    writeln!(
        body,
        "worst sample: t = {:.6}, x = {}, drift {:.6e}",
        worst.time,
        fmt_point(&worst.point),
        worst
            .drift
            .iter()
            .copied()
            .fold(0.0, |a: f64, b| if b.abs() > a.abs() { b } else { a })
    )
    .unwrap();
    writeln!(
        body,
        "sampled certificate over {} times x {} points on {}, not a proof",
        report.n_times,
        report.n_points,
        s.manifold.name()
    )
    .unwrap();
    Ok((Some(report.verdict), body))
}

fn builtin_oracle(
    s: &Scenario,
) -> Option<impl Fn(&PathRecord) -> Result<Vec<Vector>, svpkit::SimError> + Sync> {
    match s.model {
        ModelKind::Builtin {
            model,
            beta,
            lambda,
        } => Some(move |p: &PathRecord| closed_form_for_path(model, beta, lambda, p)),
        ModelKind::Expressions { .. } => None,
    }
}

fn summary_row(name: &str, s: &Summary) -> Vec<String> {
    let mut row = vec![name.to_string(), s.count.to_string()];
    row.extend(
        [
            s.mean, s.std_dev, s.std_err, s.min, s.q05, s.q50, s.q95, s.max,
        ]
        .map(float),
    );
    row
}

/// Reference radius of the built-in sphere models started at `|x0| = 1`.
fn reference_radius(model: BuiltinModel, beta: f64, elapsed: f64) -> f64 {
    match model {
        BuiltinModel::Rotation | BuiltinModel::ReflectedRotation => 1.0,
        BuiltinModel::DampedRotation => montecarlo::decaying_rotation_radius(beta, elapsed),
        BuiltinModel::Decay => (-elapsed).exp(),
    }
}

fn simulate(s: &Scenario, seed: u64, out: &OutputDir) -> Result<Body, CliError> {
    let p = &s.problem;
    let n = &s.numerics;
    let config =
        EnsembleConfig::new(n.n_paths, n.n_steps, seed).keeping(n.keep_paths.min(n.n_paths));
    let oracle = builtin_oracle(s);
    let stats = montecarlo::run_ensemble_with_oracle(
        p,
        &s.manifold,
        &config,
        oracle.as_ref().map(|o| o as montecarlo::Oracle<'_>),
    )?;

    let mut paths = out.csv(
        "paths.csv",
        &header(&[
            "path",
            "seed",
            "sup_dist",
            "terminal_dist",
            "n_jumps",
            "strong_error",
        ]),
    )?;
    for ps in &stats.paths {
        paths.row(&[
            ps.index.to_string(),
            ps.seed.to_string(),
            float(ps.sup_dist),
            float(ps.terminal_dist),
            ps.n_jumps.to_string(),
            ps.strong_error.map(float).unwrap_or_default(),
        ])?;
    }
    paths.finish()?;

    let mut ens = out.csv(
        "ensemble.csv",
        &header(&[
            "statistic",
            "count",
            "mean",
            "std_dev",
            "std_err",
            "min",
            "q05",
            "q50",
            "q95",
            "max",
        ]),
    )?;
    ens.row(&summary_row("sup_dist", &stats.sup_dist))?;
    ens.row(&summary_row("terminal_dist", &stats.terminal_dist))?;
    if let Some(e) = &stats.strong_error {
        ens.row(&summary_row("strong_error", e))?;
    }
    ens.finish()?;

    let mut bands = out.csv(
        "bands.csv",
        &header(&["time", "dist_q05", "dist_q50", "dist_q95"]),
    )?;
    for b in &stats.bands {
        bands.row(&[b.time, b.dist_q05, b.dist_q50, b.dist_q95].map(float))?;
    }
    bands.finish()?;

    if s.is_sphere() {
        let mut radius = out.csv(
            "radius.csv",
            &header(&[
                "time",
                "radius_min",
                "radius_mean",
                "radius_max",
                "reference",
            ]),
        )?;
        for b in &stats.bands {
            let reference = match s.model {
                ModelKind::Builtin { model, beta, .. } => {
                    float(reference_radius(model, beta, b.time - p.t0))
                }
                ModelKind::Expressions { .. } => String::new(),
            };
            radius.row(&[
                float(b.time),
                float(b.radius_min),
                float(b.radius_mean),
                float(b.radius_max),
                reference,
            ])?;
        }
        radius.finish()?;
    }

    let m = s.manifold.ambient_dim();
    let mut cols = header(&["time", "event", "mark"]);
    cols.extend(indexed("x", m));
    cols.push("dist".into());
    for (k, path) in stats.kept.iter().enumerate() {
        let mut t = out.csv(&format!("trajectory_{k}.csv"), &cols)?;
        let mut jumps = path.jump_log.iter().peekable();
        for (time, x) in path.times.iter().zip(&path.states) {
            while let Some(j) = jumps.next_if(|j| j.time <= *time) {
                let post = j.post_state();
                let mut row = vec![float(j.time), "jump".into(), (j.mark_index + 1).to_string()];
                row.extend(point_fields(&post));
                row.push(float(s.manifold.distance(&post).map_err(CheckError::from)?));
                t.row(&row)?;
            }
            let mut row = vec![float(*time), "node".into(), String::new()];
            row.extend(point_fields(x));
            row.push(float(s.manifold.distance(x).map_err(CheckError::from)?));
            t.row(&row)?;
        }
        t.finish()?;
    }

    let mut body = String::new();
    writeln!(
        body,
        "{} paths x {} steps (h = {:e}), {} failed",
        n.n_paths,
        n.n_steps,
        (p.horizon - p.t0) / n.n_steps as f64,
        stats.failures.len()
    )
    .unwrap();
    writeln!(
        body,
        "sup_dist mean {:.6e} (std err {:.3e}), q95 {:.6e}",
        stats.sup_dist.mean, stats.sup_dist.std_err, stats.sup_dist.q95
    )
    .unwrap();
    writeln!(body, "terminal_dist mean {:.6e}", stats.terminal_dist.mean).unwrap();
    if let Some(e) = &stats.strong_error {
        writeln!(
            body,
            "strong_error mean {:.6e} (std err {:.3e})",
            e.mean, e.std_err
        )
        .unwrap();
    }
    let total_jumps: usize = stats.paths.iter().map(|p| p.n_jumps).sum();
    writeln!(body, "jumps applied: {total_jumps}").unwrap();
    for (i, e) in &stats.failures {
        writeln!(body, "path {i} failed: {e}").unwrap();
    }
    Ok((None, body))
}

fn supersolution(s: &Scenario, seed: u64, out: &OutputDir) -> Result<Body, CliError> {
    let p = &s.problem;
    let n = &s.numerics;
    let lip = s.lipschitz(seed).map_err(CliError::Usage)?;
    let slack_tol = n
        .slack_tol
        .unwrap_or_else(|| default_slack_tol(&s.manifold, HessianMode::Auto));
    let times = TubeGrid::interior_times(p.t0, p.horizon, n.tube_times);

    let m = s.manifold.ambient_dim();
    let mut cols = header(&["radius", "time"]);
    cols.extend(indexed("x", m));
    cols.extend(header(&["distance", "generator", "slack"]));
    let mut table = out.csv("slack.csv", &cols)?;
    let mut ladder = out.csv(
        "ladder.csv",
        &header(&["radius", "evaluated", "skipped", "max_slack", "verdict"]),
    )?;

    let mut verdict = Verdict::Pass;
    let mut body = String::new();
    writeln!(
        body,
        "C = {} (mu = {}, int rho^2 = {}{}), slack tolerance {:e}",
        lip.c(),
        lip.mu(),
        lip.rho_sq_integral(),
        if lip.is_estimated() {
            ", estimated"
        } else {
            ""
        },
        slack_tol
    )
    .unwrap();
    for r in radius_ladder(n.tube_radius) {
        let grid = TubeGrid::sample(&s.manifold, n.tube_points, r, times.clone(), seed)
            .map_err(CheckError::from)?;
        let rep = check_supersolution_with(
            &p.coefficients,
            &p.jumps,
            &s.manifold,
            &lip,
            &grid,
            HessianMode::Auto,
            slack_tol,
        )?;
        for row in &rep.rows {
            let mut fields = vec![float(r), float(row.time)];
            fields.extend(point_fields(&row.point));
            fields.extend([row.distance, row.generator, row.slack].map(float));
            table.row(&fields)?;
        }
        ladder.row(&[
            float(r),
            rep.rows.len().to_string(),
            rep.skipped.to_string(),
            float(rep.max_slack),
            rep.verdict.to_string(),
        ])?;
        writeln!(
            body,
            "radius {r:e}: {} max slack {:.6e} over {} points ({} skipped)",
            rep.verdict,
            rep.max_slack,
            rep.rows.len(),
            rep.skipped
        )
        .unwrap();
        verdict = verdict.and(rep.verdict);
    }
    table.finish()?;
    ladder.finish()?;
    writeln!(body, "{verdict}").unwrap();
    Ok((Some(verdict), body))
}

fn convergence(
    s: &Scenario,
    seed: u64,
    ladder: Option<&[usize]>,
    out: &OutputDir,
) -> Result<Body, CliError> {
    let ModelKind::Builtin {
        model,
        beta,
        lambda,
    } = s.model
    else {
        return Err(CliError::Usage(
            "convergence needs a builtin model: expression models have no closed-form reference"
                .into(),
        ));
    };
    let p = &s.problem;
    let steps = ladder.unwrap_or(&s.numerics.ladder);
    let report = montecarlo::convergence_rate(
        model,
        beta,
        lambda,
        p.t0,
        p.horizon,
        steps,
        s.numerics.convergence_paths,
        seed,
    )?;
    let mut table = out.csv(
        "convergence.csv",
        &header(&["n_steps", "h", "mean_error", "std_err"]),
    )?;
    for l in &report.levels {
        table.row(&[
            l.n_steps.to_string(),
            float(l.h),
            float(l.mean_error),
            float(l.std_err),
        ])?;
    }
    table.finish()?;
    let mut body = String::new();
    writeln!(
        body,
        "{} levels x {} paths",
        report.levels.len(),
        s.numerics.convergence_paths
    )
    .unwrap();
    match report.slope {
        Some(slope) => writeln!(body, "fitted slope {slope:.6}").unwrap(),
        None => writeln!(
            body,
            "simulation matches the closed form exactly at every level"
        )
        .unwrap(),
    }
    Ok((None, body))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ladder_specs() {
        assert_eq!(parse_ladder("6..8").unwrap(), vec![64, 128, 256]);
        assert_eq!(parse_ladder("10, 20,40").unwrap(), vec![10, 20, 40]);
        assert_eq!(parse_ladder("7").unwrap(), vec![7]);
        assert!(parse_ladder("8..6").is_err());
        assert!(parse_ladder("a,b").is_err());
    }

    #[test]
    fn exit_codes_are_distinct() {
        let pass = Outcome {
            verdict: Some(Verdict::Pass),
            summary: String::new(),
        };
        let fail = Outcome {
            verdict: Some(Verdict::Fail),
            summary: String::new(),
        };
        let data = Outcome {
            verdict: None,
            summary: String::new(),
        };
        assert_eq!(exit_code(&Ok(pass)), 0);
        assert_eq!(exit_code(&Ok(fail)), 1);
        assert_eq!(exit_code(&Ok(data)), 0);
        assert_eq!(exit_code(&Err(CliError::Usage("x".into()))), 2);
    }
}
