//! Model parameters, time grids and single-level density matrices.

use nalgebra::{Matrix2, Vector4};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

const BLOCH_TOLERANCE: f64 = 1e-12;

/// Parameters of the level and its reservoir.
///
/// `epsilon_level` is the level energy, `mu` the reservoir chemical potential,
/// `gamma` the tunnel coupling and `temperature` the reservoir temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    epsilon_level: f64,
    mu: f64,
    gamma: f64,
    temperature: f64,
}

impl ModelParams {
    pub fn new(epsilon_level: f64, mu: f64, gamma: f64, temperature: f64) -> Result<Self> {
        if !epsilon_level.is_finite() || !mu.is_finite() {
            return Err(Error::InvalidParameter(
                "level energy and chemical potential must be finite".into(),
            ));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "coupling must be positive, got {gamma}"
            )));
        }
        if !(temperature.is_finite() && temperature >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "temperature must be non-negative, got {temperature}"
            )));
        }
        Ok(Self {
            epsilon_level,
            mu,
            gamma,
            temperature,
        })
    }

    /// Parameters in the dimensionless form used for plots: coupling 1,
    /// chemical potential 0, detuning `pi/2 * two_eps_over_pi` and
    /// temperature `pi_t_over_half_gamma / (2 pi)`.
    pub fn dimensionless(two_eps_over_pi: f64, pi_t_over_half_gamma: f64) -> Result<Self> {
        Self::new(
            0.5 * PI * two_eps_over_pi,
            0.0,
            1.0,
            0.5 * pi_t_over_half_gamma / PI,
        )
    }

    pub fn epsilon_level(&self) -> f64 {
        self.epsilon_level
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// Level energy measured from the chemical potential.
    pub fn detuning(&self) -> f64 {
        self.epsilon_level - self.mu
    }

    pub fn with_detuning(&self, detuning: f64) -> Result<Self> {
        Self::new(self.mu + detuning, self.mu, self.gamma, self.temperature)
    }

    pub fn with_temperature(&self, temperature: f64) -> Result<Self> {
        Self::new(self.epsilon_level, self.mu, self.gamma, temperature)
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(self.epsilon_level, self.mu, gamma, self.temperature)
    }

    /// Shortest physical time scale: `min(1/gamma, pi/|detuning|, 1/(pi T))`.
    pub fn resolution_scale(&self) -> f64 {
        let mut scale = 1.0 / self.gamma;
        let eps = self.detuning().abs();
        if eps > 0.0 {
            scale = scale.min(PI / eps);
        }
        if self.temperature > 0.0 {
            scale = scale.min(1.0 / (PI * self.temperature));
        }
        scale
    }
}

/// Uniform grid `t_k = k * t_end / n_steps`, `k = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, n_steps: usize) -> Result<Self> {
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid end must be positive, got {t_end}"
            )));
        }
        if n_steps < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 steps, got {n_steps}"
            )));
        }
        Ok(Self { t_end, n_steps })
    }

    /// Grid resolving the shortest time scale of `params` with at least
    /// `points_per_scale` points.
    pub fn resolved(params: &ModelParams, t_end: f64, points_per_scale: usize) -> Result<Self> {
        let dt_max = params.resolution_scale() / points_per_scale.max(20) as f64;
        let n = (t_end / dt_max).ceil().max(2.0) as usize;
        Self::new(t_end, n)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_end / self.n_steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            self.t_end
        } else {
            k as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    /// Fails when the spacing does not resolve the shortest time scale of
    /// `params` with at least 20 points.
    pub fn check_resolution(&self, params: &ModelParams) -> Result<()> {
        let needed = params.resolution_scale() / 20.0;
        if self.dt() > needed * (1.0 + 1e-12) {
            return Err(Error::Discretization(format!(
                "grid spacing {} exceeds {} required by the model time scales",
                self.dt(),
                needed
            )));
        }
        Ok(())
    }
}

/// State of the level: `rho = (1 + parity * (-1)^n) / 2 + field * d^dag + conj(field) * d`.
///
/// `parity` is the expectation value of `(-1)^n = 1 - 2n` and `field` is the
/// expectation value of `d`. Matrices use the ordering (occupied, empty).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix {
    parity: f64,
    field: Complex64,
}

impl DensityMatrix {
    pub fn new(parity: f64, field: Complex64) -> Result<Self> {
        if !parity.is_finite() || !field.re.is_finite() || !field.im.is_finite() {
            return Err(Error::InvalidParameter("state entries must be finite".into()));
        }
        let norm2 = parity * parity + 4.0 * field.norm_sqr();
        if norm2 > 1.0 + BLOCH_TOLERANCE {
            return Err(Error::NotPositive(format!(
                "Bloch vector length squared {norm2} exceeds 1"
            )));
        }
        Ok(Self { parity, field })
    }

    /// Diagonal state in the occupation basis.
    pub fn fermionic(parity: f64) -> Result<Self> {
        Self::new(parity, Complex64::new(0.0, 0.0))
    }

    pub fn parity(&self) -> f64 {
        self.parity
    }

    pub fn field(&self) -> Complex64 {
        self.field
    }

    pub fn occupation(&self) -> f64 {
        0.5 * (1.0 - self.parity)
    }

    /// Squared length of the Bloch vector, `parity^2 + |2 field|^2`.
    pub fn bloch_norm_sqr(&self) -> f64 {
        self.parity * self.parity + 4.0 * self.field.norm_sqr()
    }

    /// Eigenvalues `(1 - |b|)/2` and `(1 + |b|)/2`.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let b = self.bloch_norm_sqr().sqrt();
        [0.5 * (1.0 - b), 0.5 * (1.0 + b)]
    }

    pub fn to_matrix(&self) -> Matrix2<Complex64> {
        let half = 0.5;
        Matrix2::new(
            Complex64::new(half * (1.0 - self.parity), 0.0),
            self.field,
            self.field.conj(),
            Complex64::new(half * (1.0 + self.parity), 0.0),
        )
    }

    pub fn from_matrix(m: &Matrix2<Complex64>) -> Result<Self> {
        let trace = m[(0, 0)] + m[(1, 1)];
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!("trace {trace} is not 1")));
        }
        if (m[(0, 1)] - m[(1, 0)].conj()).norm() > 1e-10 {
            return Err(Error::InvalidParameter("matrix is not Hermitian".into()));
        }
        Self::new((m[(1, 1)] - m[(0, 0)]).re, m[(0, 1)])
    }

    /// Coordinates in the orthonormal operator basis
    /// `(1/sqrt2, d^dag, d, (-1)^n/sqrt2)`.
    pub fn coords(&self) -> Vector4<Complex64> {
        Vector4::new(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            self.field,
            self.field.conj(),
            Complex64::new(FRAC_1_SQRT_2 * self.parity, 0.0),
        )
    }

    pub fn from_coords(c: &Vector4<Complex64>) -> Result<Self> {
        let trace = c[0] * std::f64::consts::SQRT_2;
        if (trace - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(Error::InvalidParameter(format!("trace {trace} is not 1")));
        }
        if (c[1] - c[2].conj()).norm() > 1e-10 {
            return Err(Error::InvalidParameter("coordinates are not Hermitian".into()));
        }
        Self::new(c[3].re * std::f64::consts::SQRT_2, c[1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_coupling() {
        assert!(ModelParams::new(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(ModelParams::new(0.0, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn dimensionless_parameters() {
        let p = ModelParams::dimensionless(4.0, 10.0).unwrap();
        assert!((p.detuning() - 2.0 * PI).abs() < 1e-15);
        assert!((PI * p.temperature() - 5.0).abs() < 1e-14);
    }

    #[test]
    fn state_roundtrip() {
        let rho = DensityMatrix::new(0.3, Complex64::new(0.1, -0.2)).unwrap();
        let back = DensityMatrix::from_matrix(&rho.to_matrix()).unwrap();
        assert!((back.parity() - 0.3).abs() < 1e-15);
        let back = DensityMatrix::from_coords(&rho.coords()).unwrap();
        assert!((back.field() - rho.field()).norm() < 1e-15);
        assert!((rho.to_matrix().trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_outside_bloch_ball() {
        assert!(DensityMatrix::new(0.9, Complex64::new(0.3, 0.0)).is_err());
        assert!(DensityMatrix::new(1.0, Complex64::new(0.0, 0.0)).is_ok());
    }

    #[test]
    fn grid_resolution() {
        let p = ModelParams::dimensionless(20.0, 1e-3).unwrap();
        let g = TimeGrid::resolved(&p, 20.0, 20).unwrap();
        assert!(g.check_resolution(&p).is_ok());
        assert!(TimeGrid::new(20.0, 10).unwrap().check_resolution(&p).is_err());
        assert_eq!(g.time(g.n_steps()), 20.0);
    }
}
