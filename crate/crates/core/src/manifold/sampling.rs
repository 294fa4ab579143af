//! Samplers for points on `K` and in the tube around it.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Analytic, GeometryError, ImplicitManifold};
use crate::rng;
use crate::Vector;

/// A tube point `base + offset · normal`, with `base ∈ K`, unit `normal`
/// and `0 < offset ≤ radius`.
#[derive(Debug, Clone, PartialEq)]
pub struct TubePoint {
    pub base: Vector,
    pub normal: Vector,
    pub offset: f64,
    pub point: Vector,
}

fn gaussian<R: Rng>(dim: usize, rng: &mut R) -> Vector {
    Vector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

impl ImplicitManifold {
    /// Points on `K`: ambient Gaussian draws pushed onto `K`, rejecting draws
    /// that do not land within `on_manifold_tol`. Uniform on round spheres.
    pub fn sample_manifold(&self, count: usize, seed: u64) -> Result<Vec<Vector>, GeometryError> {
        let mut rng = rng::stream(seed, rng::SAMPLING_STREAM);
        let mut out = Vec::with_capacity(count);
        let max_attempts = 100 * count + 1000;
        let mut attempts = 0;
        while out.len() < count {
            attempts += 1;
            if attempts > max_attempts {
                return Err(GeometryError::Starvation { attempts });
            }
            let g = gaussian(self.ambient_dim, &mut rng);
            let candidate = match self.analytic {
                Some(Analytic::Sphere { radius }) => {
                    let n = g.norm();
                    if n < 1e-12 {
                        continue;
                    }
                    g * (radius / n)
                }
                None => match self.pull_to_manifold(g * self.sampling_scale) {
                    Some(p) => p,
                    None => continue,
                },
            };
            if self.residual(&candidate) <= self.tol.on_manifold_tol {
                out.push(candidate);
            }
        }
        Ok(out)
    }

    /// Minimum-norm Newton steps `b ← b − J⁺F(b)` onto `{F = 0}`.
    fn pull_to_manifold(&self, mut b: Vector) -> Option<Vector> {
        for _ in 0..60 {
            let f = self.constraint(&b);
            if !f.iter().all(|v| v.is_finite()) {
                return None;
            }
            if f.norm() <= 1e-14 * (1.0 + b.norm()) {
                return Some(b);
            }
            let j = self.constraint_jacobian(&b);
            let jjt = &j * j.transpose();
            let y = jjt.lu().solve(&f)?;
            let step = j.transpose() * y;
            if !step.iter().all(|v| v.is_finite()) {
                return None;
            }
            b -= step;
        }
        (self.residual(&b) <= self.tol.on_manifold_tol).then_some(b)
    }

    /// Tube points with offsets uniform in `(0, radius]`.
    pub fn sample_tube(
        &self,
        count: usize,
        radius: f64,
        seed: u64,
    ) -> Result<Vec<TubePoint>, GeometryError> {
        self.sample_tube_shell(count, 0.0, radius, seed)
    }

    /// Tube points with offsets uniform in `(inner, outer]`.
    ///
    /// For a fixed seed and ratio `inner / outer` the samples at different
    /// radii are exact rescalings of each other along the same normals.
    pub fn sample_tube_shell(
        &self,
        count: usize,
        inner: f64,
        outer: f64,
        seed: u64,
    ) -> Result<Vec<TubePoint>, GeometryError> {
        if !(outer > 0.0 && inner >= 0.0 && inner < outer) {
            return Err(GeometryError::Invalid(format!(
                "tube shell needs 0 <= inner < outer, got ({inner}, {outer}]"
            )));
        }
        if outer > self.tube_radius * (1.0 + 1e-12) {
            return Err(GeometryError::Invalid(format!(
                "tube radius {outer} exceeds the manifold's tube radius {}",
                self.tube_radius
            )));
        }
        let bases = self.sample_manifold(count, seed)?;
        let mut rng = rng::stream(seed.wrapping_add(1), rng::SAMPLING_STREAM);
        bases
            .into_iter()
            .map(|base| {
                let basis = self.normal_basis(&base)?;
                let normal = loop {
                    let c: Vec<f64> = (0..self.codim)
                        .map(|_| rng.sample(StandardNormal))
                        .collect();
                    let n = basis
                        .vectors
                        .iter()
                        .zip(&c)
                        .fold(Vector::zeros(self.ambient_dim), |acc, (v, ci)| {
                            acc + v * *ci
                        });
                    let norm = n.norm();
                    if norm > 1e-12 {
                        break n / norm;
                    }
                };
                let u: f64 = rng.random();
                let offset = outer - (outer - inner) * u;
                let point = &base + &normal * offset;
                Ok(TubePoint {
                    base,
                    normal,
                    offset,
                    point,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_samples_on_manifold() {
        let s = ImplicitManifold::unit_sphere();
        let pts = s.sample_manifold(1000, 3).unwrap();
        assert_eq!(pts.len(), 1000);
        assert!(pts.iter().all(|p| (p.norm() - 1.0).abs() <= 1e-12));
    }

    #[test]
    fn torus_samples_on_manifold() {
        let t = ImplicitManifold::torus(2.0, 0.5).unwrap();
        let pts = t.sample_manifold(200, 5).unwrap();
        assert!(pts.iter().all(|p| t.residual(p) <= 1e-9));
    }

    #[test]
    fn tube_samples_within_radius() {
        let s = ImplicitManifold::unit_sphere();
        let pts = s.sample_tube(500, 0.1, 8).unwrap();
        for p in &pts {
            let d2 = s.dist2(&p.point).unwrap();
            assert!(d2 > 0.0 && d2 <= 0.01, "{d2}");
        }
        assert!(s.sample_tube(5, 0.3, 8).is_err());
        assert!(s.sample_tube(5, 0.0, 8).is_err());
    }

    #[test]
    fn shells_rescale_exactly() {
        let s = ImplicitManifold::unit_sphere();
        let a = s.sample_tube_shell(20, 0.1, 0.2, 4).unwrap();
        let b = s.sample_tube_shell(20, 0.05, 0.1, 4).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert_eq!(p.base, q.base);
            assert_eq!(p.normal, q.normal);
            assert!((p.offset - 2.0 * q.offset).abs() < 1e-16);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let t = ImplicitManifold::torus(2.0, 0.5).unwrap();
        assert_eq!(
            t.sample_manifold(10, 1).unwrap(),
            t.sample_manifold(10, 1).unwrap()
        );
        assert_ne!(
            t.sample_manifold(10, 1).unwrap(),
            t.sample_manifold(10, 2).unwrap()
        );
    }
}
