//! Euler–Maruyama with exact-epoch compensated jumps.

use rand_distr::{Distribution, StandardNormal};

use super::{ensure_finite, CoefficientSet, JumpMeasure, SdeProblem, SimError};
use crate::rng;
use crate::Vector;

/// One applied jump.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub mark_index: usize,
    /// Left limit `X(τ−)` at which `γ` was evaluated.
    pub pre_state: Vector,
    /// `γ(τ, X(τ−), e)`.
    pub displacement: Vector,
}

impl JumpEvent {
    pub fn post_state(&self) -> Vector {
        &self.pre_state + &self.displacement
    }
}

/// A simulated càdlàg trajectory on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub times: Vec<f64>,
    /// State at each grid node (after any jumps at or before the node).
    pub states: Vec<Vector>,
    /// `W(s_i) − W(t0)` at each node, shared with closed-form oracles.
    pub brownian: Vec<Vector>,
    pub jump_log: Vec<JumpEvent>,
    pub seed: u64,
}

impl PathRecord {
    /// `N(s_i) − N(t0)` at each node.
    pub fn jump_counts(&self) -> Vec<u64> {
        let mut k = 0usize;
        self.times
            .iter()
            .map(|&s| {
                while k < self.jump_log.len() && self.jump_log[k].time <= s {
                    k += 1;
                }
                k as u64
            })
            .collect()
    }

    pub fn terminal(&self) -> &Vector {
        self.states.last().expect("paths have at least one node")
    }
}

/// Result of a single step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: Vector,
    pub jumps: Vec<JumpEvent>,
}

/// Advances `x` from `t` to `t + h`.
///
/// The continuous increment `b h + Σ σ_α ΔW_α − h Σ_e γ(t, x, e) n({e})` is
/// frozen at the step start. Jumps in `jumps_in_step` (epoch, mark index),
/// sorted by epoch in `(t, t + h]`, are applied at their epochs: the frozen
/// increment is spread linearly in time and each jump uses the state just
/// before it.
#[allow(clippy::too_many_arguments)]
pub fn euler_step(
    coeffs: &CoefficientSet,
    jumps: &JumpMeasure,
    t: f64,
    x: &Vector,
    h: f64,
    brownian_increment: &[f64],
    jumps_in_step: &[(f64, usize)],
) -> Result<StepOutcome, SimError> {
    debug_assert!(h > 0.0);
    let mut increment = ensure_finite(coeffs.drift(t, x), "drift", t, x)? * h;
    for (alpha, dw) in brownian_increment.iter().enumerate() {
        let sigma = ensure_finite(coeffs.diffusion_column(alpha, t, x), "diffusion", t, x)?;
        increment += sigma * *dw;
    }
    if coeffs.has_jump() && !jumps.is_empty() {
        let mut compensator = Vector::zeros(x.len());
        for m in jumps.marks() {
            compensator += ensure_finite(coeffs.jump(t, x, &m.value), "jump", t, x)? * m.weight;
        }
        increment -= compensator * h;
    }

    let mut y = x.clone();
    let mut applied = 0.0;
    let mut events = Vec::with_capacity(jumps_in_step.len());
    for &(tau, k) in jumps_in_step {
        let frac = ((tau - t) / h).clamp(applied, 1.0);
        y += &increment * (frac - applied);
        applied = frac;
        let displacement = ensure_finite(
            coeffs.jump(tau, &y, &jumps.marks()[k].value),
            "jump",
            tau,
            &y,
        )?;
        let pre_state = y.clone();
        y += &displacement;
        events.push(JumpEvent {
            time: tau,
            mark_index: k,
            pre_state,
            displacement,
        });
    }
    y += increment * (1.0 - applied);
    let state = ensure_finite(y, "state", t + h, x)?;
    Ok(StepOutcome {
        state,
        jumps: events,
    })
}

/// Simulates one path on a uniform grid of `n_steps` steps.
///
/// Jump epochs come from [`super::sample_jump_times`] and Brownian increments
/// from the Brownian stream of `seed`, so the result is a pure function of
/// `(problem, n_steps, seed)`.
pub fn simulate(problem: &SdeProblem, n_steps: usize, seed: u64) -> Result<PathRecord, SimError> {
    let jumps = super::sample_jump_times(&problem.jumps, problem.t0, problem.horizon, seed);
    simulate_with_jumps(problem, n_steps, seed, &jumps)
}

/// [`simulate`] with prescribed jump epochs.
pub fn simulate_with_jumps(
    problem: &SdeProblem,
    n_steps: usize,
    seed: u64,
    jump_times: &[(f64, usize)],
) -> Result<PathRecord, SimError> {
    let d = problem.coefficients.dim_noise();
    let (t0, t1) = (problem.t0, problem.horizon);
    if t1 == t0 {
        return Ok(PathRecord {
            times: vec![t0],
            states: vec![problem.x0.clone()],
            brownian: vec![Vector::zeros(d)],
            jump_log: Vec::new(),
            seed,
        });
    }
    if n_steps == 0 {
        return Err(SimError::Invalid("n_steps must be at least 1".into()));
    }
    if let Some(&(_, k)) = jump_times
        .iter()
        .find(|(_, k)| *k >= problem.jumps.marks().len())
    {
        return Err(SimError::Invalid(format!(
            "jump references unknown mark {k}"
        )));
    }

    let h = (t1 - t0) / n_steps as f64;
    let sqrt_h = h.sqrt();
    let mut rng = rng::stream(seed, rng::BROWNIAN_STREAM);

    let mut times = Vec::with_capacity(n_steps + 1);
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut brownian = Vec::with_capacity(n_steps + 1);
    let mut jump_log = Vec::with_capacity(jump_times.len());
    times.push(t0);
    states.push(problem.x0.clone());
    brownian.push(Vector::zeros(d));

    let mut x = problem.x0.clone();
    let mut w = Vector::zeros(d);
    let mut dw = vec![0.0; d];
    let mut next_jump = 0;
    for step in 0..n_steps {
        let t = t0 + step as f64 * h;
        let t_next = if step + 1 == n_steps {
            t1
        } else {
            t0 + (step + 1) as f64 * h
        };
        for (i, slot) in dw.iter_mut().enumerate() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *slot = z * sqrt_h;
            w[i] += *slot;
        }
        let first = next_jump;
        while next_jump < jump_times.len() && jump_times[next_jump].0 <= t_next {
            next_jump += 1;
        }
        let outcome = euler_step(
            &problem.coefficients,
            &problem.jumps,
            t,
            &x,
            t_next - t,
            &dw,
            &jump_times[first..next_jump],
        )
        .map_err(|e| SimError::AtStep {
            step,
            source: Box::new(e),
        })?;
        x = outcome.state;
        jump_log.extend(outcome.jumps);
        times.push(t_next);
        states.push(x.clone());
        brownian.push(w.clone());
    }
    Ok(PathRecord {
        times,
        states,
        brownian,
        jump_log,
        seed,
    })
}
