use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::SimError;
use crate::rng;
use crate::Vector;

/// The function `ρ(e)` bounding the jump amplitude's growth and Lipschitz constant.
pub type RhoFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;

/// One atom of the mark measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Mark {
    pub value: Vector,
    pub weight: f64,
}

/// A finite discrete mark measure `n(de) = Σ w_i δ_{e_i}`.
///
/// `total_mass = n(E)` is the jump intensity (jumps per unit time).
#[derive(Clone, Default)]
pub struct JumpMeasure {
    marks: Vec<Mark>,
    total_mass: f64,
    rho: Option<RhoFn>,
}

impl fmt::Debug for JumpMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JumpMeasure")
            .field("marks", &self.marks)
            .field("total_mass", &self.total_mass)
            .field("has_rho", &self.rho.is_some())
            .finish()
    }
}

impl JumpMeasure {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(marks: Vec<Mark>) -> Result<Self, SimError> {
        let dim = marks.first().map(|m| m.value.len());
        for m in &marks {
            if !(m.weight.is_finite() && m.weight > 0.0) {
                return Err(SimError::Invalid(format!(
                    "mark weights must be positive and finite, got {}",
                    m.weight
                )));
            }
            if Some(m.value.len()) != dim {
                return Err(SimError::Invalid(
                    "marks have inconsistent dimensions".into(),
                ));
            }
            if !m.value.iter().all(|v| v.is_finite()) {
                return Err(SimError::Invalid("mark coordinates must be finite".into()));
            }
        }
        let total_mass = marks.iter().map(|m| m.weight).sum();
        Ok(Self {
            marks,
            total_mass,
            rho: None,
        })
    }

    /// A single mark carrying all of the intensity.
    pub fn single(mark: Vector, weight: f64) -> Result<Self, SimError> {
        Self::new(vec![Mark {
            value: mark,
            weight,
        }])
    }

    pub fn with_rho(mut self, rho: RhoFn) -> Self {
        self.rho = Some(rho);
        self
    }

    pub fn marks(&self) -> &[Mark] {
        &self.marks
    }

    pub fn is_empty(&self) -> bool {
        self.marks.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn mark_dim(&self) -> usize {
        self.marks.first().map_or(0, |m| m.value.len())
    }

    pub fn rho(&self) -> Option<&RhoFn> {
        self.rho.as_ref()
    }

    /// `Σ ρ(e)² n({e})`, when `ρ` is attached.
    pub fn rho_sq_integral(&self) -> Option<f64> {
        let rho = self.rho.as_ref()?;
        Some(
            self.marks
                .iter()
                .map(|m| {
                    let r = rho(&m.value);
                    r * r * m.weight
                })
                .sum(),
        )
    }

    /// Index of the mark selected by a uniform draw `u ∈ [0, 1)`.
    fn pick(&self, u: f64) -> usize {
        let target = u * self.total_mass;
        let mut acc = 0.0;
        for (i, m) in self.marks.iter().enumerate() {
            acc += m.weight;
            if target < acc {
                return i;
            }
        }
        self.marks.len() - 1
    }

    pub(crate) fn sample_with<R: Rng>(&self, t0: f64, t1: f64, rng: &mut R) -> Vec<(f64, usize)> {
        if self.marks.is_empty() || self.total_mass <= 0.0 || t1 <= t0 {
            return Vec::new();
        }
        let inter_arrival = Exp::new(self.total_mass).expect("positive intensity");
        let mut out = Vec::new();
        let mut t = t0;
        loop {
            t += inter_arrival.sample(rng);
            if t > t1 {
                break;
            }
            let u: f64 = rng.random();
            out.push((t, self.pick(u)));
        }
        out
    }
}

/// Jump epochs on `(t0, t1]` with their mark indices, sorted by time.
///
/// Epochs form a Poisson process of rate `n(E)` (exponential inter-arrival
/// times); each mark is drawn independently with probability `w / n(E)`.
pub fn sample_jump_times(jumps: &JumpMeasure, t0: f64, t1: f64, seed: u64) -> Vec<(f64, usize)> {
    let mut rng = rng::stream(seed, rng::JUMP_STREAM);
    jumps.sample_with(t0, t1, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mark(v: f64, w: f64) -> Mark {
        Mark {
            value: Vector::from_vec(vec![v]),
            weight: w,
        }
    }

    #[test]
    fn empty_measure_never_jumps() {
        assert!(sample_jump_times(&JumpMeasure::empty(), 0.0, 100.0, 3).is_empty());
    }

    #[test]
    fn total_mass_is_sum_of_weights() {
        let m = JumpMeasure::new(vec![mark(1.0, 0.25), mark(2.0, 0.75)]).unwrap();
        assert_eq!(m.total_mass(), 1.0);
        assert_eq!(m.mark_dim(), 1);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(JumpMeasure::new(vec![mark(1.0, 0.0)]).is_err());
        assert!(JumpMeasure::new(vec![mark(1.0, f64::INFINITY)]).is_err());
        assert!(JumpMeasure::new(vec![
            mark(1.0, 1.0),
            Mark {
                value: Vector::from_vec(vec![1.0, 2.0]),
                weight: 1.0
            }
        ])
        .is_err());
    }

    #[test]
    fn epochs_sorted_within_interval_and_deterministic() {
        let m = JumpMeasure::single(Vector::from_vec(vec![1.0]), 5.0).unwrap();
        let a = sample_jump_times(&m, 0.5, 3.0, 11);
        assert_eq!(a, sample_jump_times(&m, 0.5, 3.0, 11));
        assert!(!a.is_empty());
        assert!(a.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(a.iter().all(|(t, _)| *t > 0.5 && *t <= 3.0));
    }

    #[test]
    fn rho_square_integral() {
        let m = JumpMeasure::new(vec![mark(1.0, 0.5), mark(3.0, 2.0)])
            .unwrap()
            .with_rho(Arc::new(|e: &Vector| e[0]));
        assert_eq!(m.rho_sq_integral(), Some(0.5 + 18.0));
    }
}
