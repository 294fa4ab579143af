use super::{CoefficientSet, JumpMeasure, SimError};
use crate::Vector;

/// Safety factor applied to sampled difference quotients when `μ` or `ρ`
/// has to be estimated.
pub const ESTIMATE_SAFETY: f64 = 1.25;

/// Lipschitz/growth constant `μ`, `∫ρ² dn` and the constant `C` of the
/// generator inequality, with `C ≥ 1 + 2μ + μ² + ∫ρ² dn`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzData {
    mu: f64,
    rho_sq_integral: f64,
    c: f64,
    estimated: bool,
}

impl LipschitzData {
    pub fn lower_bound(mu: f64, rho_sq_integral: f64) -> f64 {
        1.0 + 2.0 * mu + mu * mu + rho_sq_integral
    }

    pub fn new(mu: f64, rho_sq_integral: f64, c: f64) -> Result<Self, SimError> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(SimError::Invalid(format!(
                "mu must be finite and non-negative, got {mu}"
            )));
        }
        if !(rho_sq_integral.is_finite() && rho_sq_integral >= 0.0) {
            return Err(SimError::Invalid(format!(
                "rho square integral must be finite and non-negative, got {rho_sq_integral}"
            )));
        }
        let bound = Self::lower_bound(mu, rho_sq_integral);
        if !(c >= bound) {
            return Err(SimError::Invalid(format!(
                "C = {c} is below 1 + 2mu + mu^2 + int rho^2 = {bound}"
            )));
        }
        Ok(Self {
            mu,
            rho_sq_integral,
            c,
            estimated: false,
        })
    }

    /// Smallest admissible `C`.
    pub fn minimal(mu: f64, rho_sq_integral: f64) -> Result<Self, SimError> {
        Self::new(mu, rho_sq_integral, Self::lower_bound(mu, rho_sq_integral))
    }

    /// Uses a declared `μ` and the measure's own `ρ`.
    pub fn declared(mu: f64, jumps: &JumpMeasure) -> Result<Self, SimError> {
        let rho_sq = match jumps.rho_sq_integral() {
            Some(v) => v,
            None if jumps.is_empty() => 0.0,
            None => {
                return Err(SimError::Invalid(
                    "jump measure has marks but no rho function".into(),
                ))
            }
        };
        Self::minimal(mu, rho_sq)
    }

    /// Estimates `μ` and `ρ(e)` from sampled difference quotients scaled by
    /// [`ESTIMATE_SAFETY`]; the result is flagged as estimated.
    pub fn estimate(
        coeffs: &CoefficientSet,
        jumps: &JumpMeasure,
        samples: &[Vector],
        t: f64,
    ) -> Result<(Self, LipschitzQuotients), SimError> {
        let q = LipschitzQuotients::sample(coeffs, jumps, samples, t)?;
        let mu = ESTIMATE_SAFETY * q.lipschitz.max(q.growth);
        let rho_sq = jumps
            .marks()
            .iter()
            .zip(&q.rho)
            .map(|(m, r)| {
                let r = ESTIMATE_SAFETY * r;
                r * r * m.weight
            })
            .sum();
        let mut data = Self::minimal(mu, rho_sq)?;
        data.estimated = true;
        Ok((data, q))
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn rho_sq_integral(&self) -> f64 {
        self.rho_sq_integral
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn is_estimated(&self) -> bool {
        self.estimated
    }
}

/// Largest sampled difference and growth quotients of the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LipschitzQuotients {
    /// max (|b(x) − b(x')| + |σ(x) − σ(x')|) / |x − x'|
    pub lipschitz: f64,
    /// max (|b(x)| + |σ(x)|) / (1 + |x|)
    pub growth: f64,
    /// per mark: max of the jump Lipschitz and growth quotients
    pub rho: Vec<f64>,
}

fn sigma_matrix_norm(coeffs: &CoefficientSet, t: f64, x: &Vector, y: Option<&Vector>) -> f64 {
    (0..coeffs.dim_noise())
        .map(|a| {
            let s = coeffs.diffusion_column(a, t, x);
            let d = match y {
                Some(y) => s - coeffs.diffusion_column(a, t, y),
                None => s,
            };
            d.norm_squared()
        })
        .sum::<f64>()
        .sqrt()
}

impl LipschitzQuotients {
    /// Quotients over consecutive pairs of `samples`.
    pub fn sample(
        coeffs: &CoefficientSet,
        jumps: &JumpMeasure,
        samples: &[Vector],
        t: f64,
    ) -> Result<Self, SimError> {
        let mut lipschitz = 0.0_f64;
        let mut growth = 0.0_f64;
        let mut rho = vec![0.0_f64; jumps.marks().len()];
        for (i, x) in samples.iter().enumerate() {
            let bx = coeffs.drift(t, x);
            growth =
                growth.max((bx.norm() + sigma_matrix_norm(coeffs, t, x, None)) / (1.0 + x.norm()));
            for (k, m) in jumps.marks().iter().enumerate() {
                let g = coeffs.jump(t, x, &m.value);
                rho[k] = rho[k].max(g.norm() / (1.0 + x.norm()));
            }
            let Some(y) = samples.get(i + 1) else {
                continue;
            };
            let dist = (x - y).norm();
            if dist == 0.0 {
                continue;
            }
            let db = (&bx - coeffs.drift(t, y)).norm();
            lipschitz = lipschitz.max((db + sigma_matrix_norm(coeffs, t, x, Some(y))) / dist);
            for (k, m) in jumps.marks().iter().enumerate() {
                let dg = (coeffs.jump(t, x, &m.value) - coeffs.jump(t, y, &m.value)).norm();
                rho[k] = rho[k].max(dg / dist);
            }
        }
        if !(lipschitz.is_finite() && growth.is_finite() && rho.iter().all(|r| r.is_finite())) {
            return Err(SimError::Invalid("non-finite coefficient quotient".into()));
        }
        Ok(Self {
            lipschitz,
            growth,
            rho,
        })
    }

    /// True when every quotient is within `slack` of the declared constants.
    pub fn within(&self, mu: f64, jumps: &JumpMeasure, slack: f64) -> bool {
        let rho_ok = match jumps.rho() {
            Some(rho) => jumps
                .marks()
                .iter()
                .zip(&self.rho)
                .all(|(m, q)| *q <= rho(&m.value) + slack),
            None => jumps.is_empty(),
        };
        self.lipschitz <= mu + slack && self.growth <= mu + slack && rho_ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::BuiltinModel;

    #[test]
    fn constant_lower_bound_enforced() {
        assert!(LipschitzData::new(2.0, 0.0, 8.9).is_err());
        let l = LipschitzData::minimal(2.0, 0.0).unwrap();
        assert_eq!(l.c(), 9.0);
        assert!(!l.is_estimated());
        assert!(LipschitzData::new(-1.0, 0.0, 10.0).is_err());
    }

    #[test]
    fn declared_requires_rho_when_jumping() {
        let jumps = JumpMeasure::single(Vector::from_vec(vec![1.0]), 1.0).unwrap();
        assert!(LipschitzData::declared(2.0, &jumps).is_err());
        assert_eq!(
            LipschitzData::declared(2.0, &JumpMeasure::empty())
                .unwrap()
                .c(),
            9.0
        );
    }

    #[test]
    fn builtin_constants_dominate_sampled_quotients() {
        let samples: Vec<Vector> = (0..200)
            .map(|i| {
                let a = i as f64 * 0.37;
                Vector::from_vec(vec![a.cos() * 1.3, (1.7 * a).sin(), (0.3 * a).cos() - 0.5])
            })
            .collect();
        for model in [
            BuiltinModel::Rotation,
            BuiltinModel::DampedRotation,
            BuiltinModel::ReflectedRotation,
            BuiltinModel::Decay,
        ] {
            let lambda = 1.5;
            let coeffs = model.coefficients(lambda);
            let jumps = model.jump_measure(lambda);
            let lip = model.lipschitz(lambda);
            let q = LipschitzQuotients::sample(&coeffs, &jumps, &samples, 0.0).unwrap();
            assert!(q.within(lip.mu(), &jumps, 1e-12), "{model:?}: {q:?}");
        }
    }

    #[test]
    fn estimate_is_flagged_and_admissible() {
        let samples: Vec<Vector> = (0..50)
            .map(|i| Vector::from_vec(vec![1.0, (i as f64).sin(), (i as f64).cos()]))
            .collect();
        let coeffs = BuiltinModel::Rotation.coefficients(0.0);
        let (lip, q) =
            LipschitzData::estimate(&coeffs, &JumpMeasure::empty(), &samples, 0.0).unwrap();
        assert!(lip.is_estimated());
        assert!(lip.mu() >= q.lipschitz.max(q.growth));
        assert!(lip.c() >= LipschitzData::lower_bound(lip.mu(), 0.0));
    }
}
