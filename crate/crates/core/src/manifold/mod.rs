//! Geometry of a closed submanifold `K = {F = 0} ⊂ ℝ^m`.
//!
//! Projection `Π_K`, the squared distance `d²_K` with its gradient
//! `2(x − Π_K(x))` and Hessian, normal bases and point samplers. Inside the
//! tube of radius `tube_radius` (below the reach) the projection is unique
//! and `d²_K` is smooth.

mod sampling;

pub use sampling::TubePoint;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::{Matrix, Vector};

pub type ConstraintFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Vector) -> Matrix + Send + Sync>;

/// Fraction of the reach used as the default tube radius.
pub const DEFAULT_TUBE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("projection of {point:?} is not unique")]
    Ambiguous { point: Vec<f64> },
    #[error("projection of {point:?} did not converge after {iterations} iterations")]
    NoConvergence { point: Vec<f64>, iterations: usize },
    #[error("point {point:?} is at distance {distance} from K, outside the tube of radius {tube_radius}")]
    OutsideTube {
        point: Vec<f64>,
        distance: f64,
        tube_radius: f64,
    },
    #[error("point is not on K: constraint residual {residual}")]
    NotOnManifold { residual: f64 },
    #[error("constraint Jacobian is rank deficient (smallest singular value {smallest})")]
    RankDeficient { smallest: f64 },
    #[error("sampler gave up after {attempts} rejected draws")]
    Starvation { attempts: usize },
    #[error("{0}")]
    Invalid(String),
}

fn coords(x: &Vector) -> Vec<f64> {
    x.iter().copied().collect()
}

/// Numerical tolerances of the geometry routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryTolerances {
    pub proj_tol: f64,
    pub on_manifold_tol: f64,
    pub hess_fd_step: f64,
    pub rank_tol: f64,
    pub max_iter: usize,
}

impl Default for GeometryTolerances {
    fn default() -> Self {
        Self {
            proj_tol: 1e-10,
            on_manifold_tol: 1e-9,
            hess_fd_step: 1e-4,
            rank_tol: 1e-10,
            max_iter: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Analytic {
    /// Round sphere of the given radius centred at the origin.
    Sphere { radius: f64 },
}

/// `K` described as the zero set of `F: ℝ^m → ℝ^k`.
#[derive(Clone)]
pub struct ImplicitManifold {
    name: String,
    ambient_dim: usize,
    codim: usize,
    constraint: ConstraintFn,
    jacobian: JacobianFn,
    reach: f64,
    tube_radius: f64,
    sampling_scale: f64,
    analytic: Option<Analytic>,
    tol: GeometryTolerances,
}

impl fmt::Debug for ImplicitManifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ImplicitManifold")
            .field("name", &self.name)
            .field("ambient_dim", &self.ambient_dim)
            .field("codim", &self.codim)
            .field("reach", &self.reach)
            .field("tube_radius", &self.tube_radius)
            .field("analytic", &self.analytic)
            .finish()
    }
}

/// Orthonormal basis of the normal space at a point of `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalBasis {
    pub base_point: Vector,
    pub vectors: Vec<Vector>,
}

impl NormalBasis {
    /// Orthogonal projector onto the normal space.
    pub fn projector(&self) -> Matrix {
        let m = self.base_point.len();
        self.vectors
            .iter()
            .fold(Matrix::zeros(m, m), |acc, v| acc + v * v.transpose())
    }
}

impl ImplicitManifold {
    /// General implicit manifold. `reach` must be positive; the tube radius
    /// defaults to [`DEFAULT_TUBE_FRACTION`] of it.
    pub fn implicit(
        name: impl Into<String>,
        ambient_dim: usize,
        codim: usize,
        constraint: ConstraintFn,
        jacobian: JacobianFn,
        reach: f64,
    ) -> Result<Self, GeometryError> {
        if codim == 0 || codim >= ambient_dim {
            return Err(GeometryError::Invalid(format!(
                "codimension {codim} invalid in ambient dimension {ambient_dim}"
            )));
        }
        if !(reach.is_finite() && reach > 0.0) {
            return Err(GeometryError::Invalid(format!(
                "reach must be positive, got {reach}"
            )));
        }
        Ok(Self {
            name: name.into(),
            ambient_dim,
            codim,
            constraint,
            jacobian,
            reach,
            tube_radius: DEFAULT_TUBE_FRACTION * reach,
            sampling_scale: 1.0,
            analytic: None,
            tol: GeometryTolerances::default(),
        })
    }

    /// Implicit manifold whose Jacobian is taken by central differences.
    pub fn implicit_fd(
        name: impl Into<String>,
        ambient_dim: usize,
        codim: usize,
        constraint: ConstraintFn,
        reach: f64,
    ) -> Result<Self, GeometryError> {
        let f = constraint.clone();
        let jacobian: JacobianFn = Arc::new(move |x: &Vector| {
            let step = 1e-6 * (1.0 + x.norm());
            let cols: Vec<Vector> = (0..x.len())
                .map(|j| {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += step;
                    xm[j] -= step;
                    (f(&xp) - f(&xm)) / (2.0 * step)
                })
                .collect();
            Matrix::from_columns(&cols)
        });
        Self::implicit(name, ambient_dim, codim, constraint, jacobian, reach)
    }

    /// Round sphere `{|x| = radius}` in ℝ^dim with closed-form projection,
    /// distance and Hessian.
    pub fn sphere(dim: usize, radius: f64) -> Self {
        let r2 = radius * radius;
        let mut m = Self::implicit(
            format!("sphere(dim={dim}, r={radius})"),
            dim,
            1,
            Arc::new(move |x: &Vector| Vector::from_element(1, x.norm_squared() - r2)),
            Arc::new(|x: &Vector| Matrix::from_row_slice(1, x.len(), (x * 2.0).as_slice())),
            radius,
        )
        .expect("valid sphere");
        m.analytic = Some(Analytic::Sphere { radius });
        m.sampling_scale = radius;
        m
    }

    /// Unit sphere S² ⊂ ℝ³.
    pub fn unit_sphere() -> Self {
        let mut m = Self::sphere(3, 1.0);
        m.name = "sphere".into();
        m
    }

    /// Unit circle S¹ ⊂ ℝ², through the general implicit code path.
    pub fn circle() -> Self {
        let mut m = Self::sphere(2, 1.0).without_analytic();
        m.name = "circle".into();
        m
    }

    /// Torus of revolution around the x3 axis; implicit only.
    pub fn torus(major: f64, minor: f64) -> Result<Self, GeometryError> {
        if !(minor > 0.0 && major > minor) {
            return Err(GeometryError::Invalid(format!(
                "torus needs major > minor > 0, got {major}, {minor}"
            )));
        }
        let constraint: ConstraintFn = Arc::new(move |x: &Vector| {
            let rho = x[0].hypot(x[1]);
            Vector::from_element(1, (rho - major).powi(2) + x[2] * x[2] - minor * minor)
        });
        let jacobian: JacobianFn = Arc::new(move |x: &Vector| {
            let rho = x[0].hypot(x[1]);
            let s = 2.0 * (rho - major) / rho;
            Matrix::from_row_slice(1, 3, &[s * x[0], s * x[1], 2.0 * x[2]])
        });
        let mut m = Self::implicit(
            format!("torus(R={major}, r={minor})"),
            3,
            1,
            constraint,
            jacobian,
            minor.min(major - minor),
        )?;
        m.sampling_scale = major + minor;
        Ok(m)
    }

    /// Drops closed-form overrides so every query goes through the
    /// implicit description.
    pub fn without_analytic(mut self) -> Self {
        self.analytic = None;
        self
    }

    pub fn with_tube_radius(mut self, radius: f64) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius < self.reach) {
            return Err(GeometryError::Invalid(format!(
                "tube radius {radius} must lie in (0, reach = {})",
                self.reach
            )));
        }
        self.tube_radius = radius;
        Ok(self)
    }

    pub fn with_tolerances(mut self, tol: GeometryTolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_sampling_scale(mut self, scale: f64) -> Self {
        self.sampling_scale = scale;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn codim(&self) -> usize {
        self.codim
    }

    pub fn reach(&self) -> f64 {
        self.reach
    }

    pub fn tube_radius(&self) -> f64 {
        self.tube_radius
    }

    pub fn tolerances(&self) -> &GeometryTolerances {
        &self.tol
    }

    pub fn has_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    /// True when projection and `d²_K` are defined on all of ℝ^m minus a
    /// singular set, not just on the tube.
    pub fn has_global_projection(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn constraint(&self, x: &Vector) -> Vector {
        (self.constraint)(x)
    }

    pub fn constraint_jacobian(&self, x: &Vector) -> Matrix {
        (self.jacobian)(x)
    }

    pub fn residual(&self, x: &Vector) -> f64 {
        self.constraint(x).norm()
    }

    /// Nearest point of `K`; `a` must lie in the tube unless a closed-form
    /// projection is available.
    pub fn project(&self, a: &Vector) -> Result<Vector, GeometryError> {
        if let Some(Analytic::Sphere { radius }) = self.analytic {
            return sphere_project(a, radius);
        }
        let b = self.newton_project(a)?;
        let distance = (a - &b).norm();
        if distance > self.tube_radius * (1.0 + 1e-12) {
            return Err(GeometryError::OutsideTube {
                point: coords(a),
                distance,
                tube_radius: self.tube_radius,
            });
        }
        Ok(b)
    }

    /// Foot point reached by Newton's method without the tube check.
    ///
    /// Always a point of `K` with `a − b` normal at `b`; it is the nearest
    /// point whenever `|a − b|` is below the reach.
    pub fn project_local(&self, a: &Vector) -> Result<Vector, GeometryError> {
        if let Some(Analytic::Sphere { radius }) = self.analytic {
            return sphere_project(a, radius);
        }
        self.newton_project(a)
    }

    pub fn dist2(&self, x: &Vector) -> Result<f64, GeometryError> {
        if let Some(Analytic::Sphere { radius }) = self.analytic {
            let d = x.norm() - radius;
            return Ok(d * d);
        }
        Ok((x - self.project(x)?).norm_squared())
    }

    /// `d_K(x)`, evaluated through [`Self::project_local`] so it is also
    /// usable for points outside the tube (exact within the reach).
    pub fn distance(&self, x: &Vector) -> Result<f64, GeometryError> {
        if let Some(Analytic::Sphere { radius }) = self.analytic {
            return Ok((x.norm() - radius).abs());
        }
        Ok((x - self.project_local(x)?).norm())
    }

    /// `∇d²_K(x) = 2(x − Π_K(x))`.
    pub fn grad_dist2(&self, x: &Vector) -> Result<Vector, GeometryError> {
        Ok((x - self.project(x)?) * 2.0)
    }

    /// Hessian of `d²_K`: closed form for the sphere, otherwise central
    /// differences of the gradient with step `hess_fd_step`.
    pub fn hess_dist2(&self, x: &Vector) -> Result<Matrix, GeometryError> {
        if let Some(Analytic::Sphere { radius }) = self.analytic {
            return sphere_hessian(x, radius);
        }
        self.project(x)?;
        self.hess_dist2_fd(x)
    }

    /// Central-difference Hessian of `d²_K`, independent of any override.
    ///
    /// Steps `hess_fd_step` and half of it are combined by one Richardson
    /// extrapolation, which removes the leading `O(step²)` error term.
    pub fn hess_dist2_fd(&self, x: &Vector) -> Result<Matrix, GeometryError> {
        let h = self.tol.hess_fd_step;
        let coarse = self.central_hessian(x, h)?;
        let fine = self.central_hessian(x, 0.5 * h)?;
        Ok((fine * 4.0 - coarse) / 3.0)
    }

    fn central_hessian(&self, x: &Vector, h: f64) -> Result<Matrix, GeometryError> {
        let m = self.ambient_dim;
        let grad = |y: &Vector| -> Result<Vector, GeometryError> {
            Ok((y - self.project_local(y)?) * 2.0)
        };
        let mut hess = Matrix::zeros(m, m);
        for j in 0..m {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let col = (grad(&xp)? - grad(&xm)?) / (2.0 * h);
            hess.set_column(j, &col);
        }
        Ok((&hess + hess.transpose()) * 0.5)
    }

    /// Orthonormal normal basis at `x̄ ∈ K`, oriented along the constraint
    /// gradients.
    pub fn normal_basis(&self, xbar: &Vector) -> Result<NormalBasis, GeometryError> {
        let residual = self.residual(xbar);
        if !(residual <= self.tol.on_manifold_tol) {
            return Err(GeometryError::NotOnManifold { residual });
        }
        if let Some(Analytic::Sphere { .. }) = self.analytic {
            return Ok(NormalBasis {
                base_point: xbar.clone(),
                vectors: vec![xbar / xbar.norm()],
            });
        }
        let jac = self.constraint_jacobian(xbar);
        let smallest = jac
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !(smallest > self.tol.rank_tol) {
            return Err(GeometryError::RankDeficient { smallest });
        }
        let jt = jac.transpose();
        let q = jt.clone().qr().q();
        let vectors = (0..self.codim)
            .map(|i| {
                let v = q.column(i).into_owned();
                if v.dot(&jt.column(i)) < 0.0 {
                    -v
                } else {
                    v
                }
            })
            .collect();
        Ok(NormalBasis {
            base_point: xbar.clone(),
            vectors,
        })
    }

    /// Orthonormal basis of the tangent space at `x̄ ∈ K`.
    pub fn tangent_basis(&self, xbar: &Vector) -> Result<Vec<Vector>, GeometryError> {
        let normals = self.normal_basis(xbar)?;
        let m = self.ambient_dim;
        let mut basis: Vec<Vector> = normals.vectors.clone();
        let mut tangent = Vec::with_capacity(m - self.codim);
        for j in 0..m {
            let mut v = Vector::zeros(m);
            v[j] = 1.0;
            for _ in 0..2 {
                for b in &basis {
                    v -= b * b.dot(&v);
                }
            }
            let n = v.norm();
            if n > 1e-6 {
                let v = v / n;
                basis.push(v.clone());
                tangent.push(v);
            }
            if tangent.len() == m - self.codim {
                break;
            }
        }
        Ok(tangent)
    }

    /// Newton iteration on the Lagrange system
    /// `b − a − J(b)ᵀη = 0, F(b) = 0`, started from `(a, 0)`.
    fn newton_project(&self, a: &Vector) -> Result<Vector, GeometryError> {
        let (m, k) = (self.ambient_dim, self.codim);
        let ambiguous = || GeometryError::Ambiguous { point: coords(a) };
        let residual = |b: &Vector, eta: &Vector| -> Option<(Vector, Matrix)> {
            let f = self.constraint(b);
            let j = self.constraint_jacobian(b);
            if !(f.iter().chain(j.iter()).all(|v| v.is_finite())) {
                return None;
            }
            let r1 = b - a - j.transpose() * eta;
            let mut g = Vector::zeros(m + k);
            g.rows_mut(0, m).copy_from(&r1);
            g.rows_mut(m, k).copy_from(&f);
            Some((g, j))
        };

        let scale = 1.0 + a.norm();
        let mut b = a.clone();
        let mut eta = Vector::zeros(k);
        let (mut g, mut jac) = residual(&b, &eta).ok_or_else(ambiguous)?;
        for _ in 0..self.tol.max_iter {
            if g.norm() <= 1e-15 * scale {
                return Ok(b);
            }
            // Σ η_i ∇²F_i by central differences of the Jacobian
            let delta = 1e-6 * (1.0 + b.norm());
            let mut curvature = Matrix::zeros(m, m);
            if eta.iter().any(|v| *v != 0.0) {
                for c in 0..m {
                    let mut bp = b.clone();
                    let mut bm = b.clone();
                    bp[c] += delta;
                    bm[c] -= delta;
                    let dj = (self.constraint_jacobian(&bp) - self.constraint_jacobian(&bm))
                        / (2.0 * delta);
                    curvature.set_column(c, &(dj.transpose() * &eta));
                }
                curvature = (&curvature + curvature.transpose()) * 0.5;
            }
            let mut kkt = Matrix::zeros(m + k, m + k);
            kkt.view_mut((0, 0), (m, m))
                .copy_from(&(Matrix::identity(m, m) - curvature));
            kkt.view_mut((0, m), (m, k)).copy_from(&(-jac.transpose()));
            kkt.view_mut((m, 0), (k, m)).copy_from(&jac);
            let step = kkt.lu().solve(&(-&g)).ok_or_else(ambiguous)?;
            if !step.iter().all(|v| v.is_finite()) {
                return Err(ambiguous());
            }

            // backtracking on the residual norm
            let g_norm = g.norm();
            let mut alpha = 1.0;
            let mut accepted = None;
            for _ in 0..30 {
                let nb = &b + step.rows(0, m) * alpha;
                let ne = &eta + step.rows(m, k) * alpha;
                if let Some((ng, nj)) = residual(&nb, &ne) {
                    if ng.norm() < g_norm || alpha < 1e-8 {
                        accepted = Some((nb, ne, ng, nj));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((nb, ne, ng, nj)) = accepted else {
                return Err(ambiguous());
            };
            let moved = (&nb - &b).norm();
            b = nb;
            eta = ne;
            g = ng;
            jac = nj;
            if moved <= 1e-16 * scale {
                break;
            }
        }
        let f_norm = g.rows(m, k).norm();
        let normal_gap = g.rows(0, m).norm();
        if f_norm <= self.tol.proj_tol && normal_gap <= self.tol.proj_tol {
            Ok(b)
        } else {
            Err(GeometryError::NoConvergence {
                point: coords(a),
                iterations: self.tol.max_iter,
            })
        }
    }
}

fn sphere_project(a: &Vector, radius: f64) -> Result<Vector, GeometryError> {
    let r = a.norm();
    if !(r > 1e-12 * radius) {
        return Err(GeometryError::Ambiguous { point: coords(a) });
    }
    Ok(a * (radius / r))
}

/// `∇²(|x| − R)² = 2 n nᵀ + 2 (1 − R/|x|)(I − n nᵀ)` with `n = x/|x|`.
fn sphere_hessian(x: &Vector, radius: f64) -> Result<Matrix, GeometryError> {
    let r = x.norm();
    if !(r > 1e-12 * radius) {
        return Err(GeometryError::Ambiguous { point: coords(x) });
    }
    let m = x.len();
    let n = x / r;
    let nn = &n * n.transpose();
    Ok(&nn * 2.0 + (Matrix::identity(m, m) - &nn) * (2.0 * (1.0 - radius / r)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn sphere_radial_projection() {
        let s = ImplicitManifold::unit_sphere();
        assert_eq!(
            s.project(&v(&[2.0, 0.0, 0.0])).unwrap(),
            v(&[1.0, 0.0, 0.0])
        );
        assert!(matches!(
            s.project(&v(&[0.0, 0.0, 0.0])),
            Err(GeometryError::Ambiguous { .. })
        ));
    }

    #[test]
    fn sphere_general_route_center_is_ambiguous() {
        let s = ImplicitManifold::unit_sphere().without_analytic();
        assert!(matches!(
            s.project_local(&v(&[0.0, 0.0, 0.0])),
            Err(GeometryError::Ambiguous { .. })
        ));
    }

    #[test]
    fn circle_projection() {
        let c = ImplicitManifold::circle();
        // |a| = 1.5 is outside the 0.2 tube; the local projection still finds the foot
        let a = v(&[0.6 * 1.5, 0.8 * 1.5]);
        assert!(matches!(
            c.project(&a),
            Err(GeometryError::OutsideTube { .. })
        ));
        let b = c.project_local(&a).unwrap();
        assert!((b - v(&[0.6, 0.8])).norm() < 1e-12);
        let b = c.project(&v(&[0.6 * 1.1, 0.8 * 1.1])).unwrap();
        assert!((b - v(&[0.6, 0.8])).norm() < 1e-12);
    }

    #[test]
    fn sphere_dist2_and_grad() {
        let s = ImplicitManifold::unit_sphere();
        let on = v(&[1.0, 0.0, 0.0]);
        assert_eq!(s.dist2(&on).unwrap(), 0.0);
        assert_eq!(s.grad_dist2(&on).unwrap(), Vector::zeros(3));
        let x = v(&[1.1, 0.0, 0.0]);
        assert!((s.dist2(&x).unwrap() - 0.01).abs() < 1e-15);
        assert!((s.grad_dist2(&x).unwrap() - v(&[0.2, 0.0, 0.0])).norm() < 1e-15);
        let y = v(&[0.0, 1.5, 0.0]);
        assert!((s.grad_dist2(&y).unwrap() - v(&[0.0, 1.0, 0.0])).norm() < 1e-15);
    }

    #[test]
    fn sphere_hessian_on_manifold() {
        let s = ImplicitManifold::unit_sphere();
        let xbar = v(&[1.0, 0.0, 0.0]);
        let h = s.hess_dist2(&xbar).unwrap();
        let n = v(&[1.0, 0.0, 0.0]);
        assert!(((n.transpose() * &h * &n)[0] - 2.0).abs() < 1e-15);
        let t = v(&[0.0, 0.6, 0.8]);
        assert!((t.transpose() * &h * &t)[0].abs() < 1e-15);
        let eig = h.symmetric_eigenvalues();
        assert!(eig.iter().all(|e| *e >= -1e-12));
    }

    #[test]
    fn normal_bases() {
        let s = ImplicitManifold::unit_sphere();
        assert_eq!(
            s.normal_basis(&v(&[0.0, 0.0, 1.0])).unwrap().vectors,
            vec![v(&[0.0, 0.0, 1.0])]
        );
        let c = ImplicitManifold::circle();
        let th = 0.8_f64;
        let nb = c.normal_basis(&v(&[th.cos(), th.sin()])).unwrap();
        assert!((&nb.vectors[0] - v(&[th.cos(), th.sin()])).norm() < 1e-15);
        let torus = ImplicitManifold::torus(2.0, 0.5).unwrap();
        let nb = torus.normal_basis(&v(&[2.5, 0.0, 0.0])).unwrap();
        assert!((&nb.vectors[0] - v(&[1.0, 0.0, 0.0])).norm() < 1e-15);
        assert!(matches!(
            s.normal_basis(&v(&[1.1, 0.0, 0.0])),
            Err(GeometryError::NotOnManifold { .. })
        ));
    }

    #[test]
    fn torus_projection_matches_closed_form() {
        let torus = ImplicitManifold::torus(2.0, 0.5).unwrap();
        assert_eq!(torus.tube_radius(), 0.1);
        // closed form: nearest point on the tube circle around the core circle
        let (phi, theta) = (0.7_f64, 1.2_f64);
        let ring = 2.0 + 0.57 * theta.cos();
        let x = v(&[ring * phi.cos(), ring * phi.sin(), 0.57 * theta.sin()]);
        let rho = x[0].hypot(x[1]);
        let core = v(&[2.0 * x[0] / rho, 2.0 * x[1] / rho, 0.0]);
        let offset = &x - &core;
        let expect = &core + &offset * (0.5 / offset.norm());
        assert!((&x - &expect).norm() < 0.1);
        let b = torus.project(&x).unwrap();
        assert!((b - expect).norm() < 1e-10);
    }

    #[test]
    fn torus_axis_is_ambiguous() {
        let torus = ImplicitManifold::torus(2.0, 0.5).unwrap();
        assert!(torus.project_local(&v(&[0.0, 0.0, 0.2])).is_err());
    }

    #[test]
    fn tangent_basis_is_orthogonal_to_normal() {
        let torus = ImplicitManifold::torus(2.0, 0.5).unwrap();
        let xbar = v(&[0.0, 2.0, 0.5]);
        let t = torus.tangent_basis(&xbar).unwrap();
        let n = torus.normal_basis(&xbar).unwrap();
        assert_eq!(t.len(), 2);
        for ti in &t {
            assert!(ti.dot(&n.vectors[0]).abs() < 1e-12);
        }
        assert!(t[0].dot(&t[1]).abs() < 1e-12);
    }

    #[test]
    fn invalid_constructions() {
        assert!(ImplicitManifold::torus(0.5, 0.5).is_err());
        assert!(ImplicitManifold::unit_sphere()
            .with_tube_radius(1.5)
            .is_err());
        assert!(ImplicitManifold::unit_sphere()
            .with_tube_radius(0.0)
            .is_err());
    }
}
