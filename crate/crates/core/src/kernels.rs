//! Memory functions of the wideband reservoir.
//!
//! * `gamma(s) = 2T sin(eps s) / sinh(pi T s)`, the reservoir correlation
//!   function (at `T = 0`: `2 sin(eps s)/(pi s)`),
//! * `h(t) = int_0^t e^{-Gamma s/2} gamma(s) ds`, the time-local rate function,
//! * `g(t) = int_0^t sinh(Gamma (t-s)/2)/sinh(Gamma t/2) gamma(s) ds`, the
//!   propagator function, with `(1 - e^{-Gamma t}) g(t) = Gamma int_0^t e^{-Gamma (t-s)} h(s) ds`,
//! * `g(t, t')`, the divisor function obtained from
//!   `alpha(t, t') = alpha(t) - e^{-Gamma (t-t')} alpha(t')` with `alpha(t) = (1 - e^{-Gamma t}) g(t)`.
//!
//! Integrals are evaluated by adaptive Gauss–Kronrod quadrature with
//! breakpoints at the zeros `l pi / |eps|` of `gamma`.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{integrate, periodic_breakpoints, Tolerance};
use crate::special_functions::{digamma, expm1_ratio, lerch_phi};

fn tolerance() -> Tolerance {
    Tolerance {
        abs: 1e-13,
        rel: 1e-13,
        ..Tolerance::default()
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// `x / sinh(x)` for `x >= 0` without overflow.
fn x_over_sinh(x: f64) -> f64 {
    if x < 1e-4 {
        1.0 - x * x / 6.0
    } else if x > 20.0 {
        let e = (-x).exp();
        2.0 * x * e / (1.0 - e * e)
    } else {
        x / x.sinh()
    }
}

/// Reservoir correlation function `gamma(s)`; even in `s`, with
/// `gamma(0) = 2 eps / pi`.
pub fn gamma_kernel(p: &ModelParams, s: f64) -> f64 {
    let s = s.abs();
    let eps = p.detuning();
    2.0 / PI * eps * sinc(eps * s) * x_over_sinh(PI * p.temperature() * s)
}

/// `e^{-Gamma s/2} gamma(s)`, the integrand of `h` and the derivative `dh/dt`.
pub fn damped_gamma(p: &ModelParams, s: f64) -> f64 {
    (-0.5 * p.gamma() * s).exp() * gamma_kernel(p, s)
}

fn zero_spacing(p: &ModelParams) -> Option<f64> {
    let eps = p.detuning().abs();
    (eps > 0.0).then(|| PI / eps)
}

/// `int_a^b e^{-Gamma s/2} gamma(s) w(s) ds`.
fn integrate_damped<W: Fn(f64) -> f64>(p: &ModelParams, a: f64, b: f64, weight: W) -> Result<f64> {
    if b <= a || p.detuning() == 0.0 {
        return Ok(0.0);
    }
    let points = periodic_breakpoints(a, b, zero_spacing(p));
    let r = integrate(|s| damped_gamma(p, s) * weight(s), &points, tolerance())?;
    Ok(r.value)
}

fn check_time(t: f64) -> Result<()> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::NegativeTime(t));
    }
    if t.is_infinite() {
        return Err(Error::InvalidParameter(
            "use g_stationary for the infinite-time limit".into(),
        ));
    }
    Ok(())
}

/// `h(t)` by direct quadrature over `[0, t]`.
pub fn h_kernel(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    integrate_damped(p, 0.0, t, |_| 1.0)
}

/// `g(t)` by direct quadrature with the overflow-safe weight
/// `e^{-Gamma s/2} (1 - e^{-Gamma (t-s)}) / (1 - e^{-Gamma t})`.
pub fn g_kernel(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    if t == 0.0 {
        return Ok(0.0);
    }
    let gm = p.gamma();
    let denom = (-gm * t).exp_m1();
    integrate_damped(p, 0.0, t, |s| (-gm * (t - s)).exp_m1() / denom)
}

/// Divisor function `g(t, t')` for `t >= t'`, with `g(t, t) = h(t)` and
/// `g(t, 0) = g(t)`.
///
/// Uses `alpha(t, t') = (1 - e^{-Gamma (t-t')}) h(t') + int_{t'}^t e^{-Gamma s/2} gamma(s) (1 - e^{-Gamma (t-s)}) ds`,
/// which is the difference `alpha(t) - e^{-Gamma (t-t')} alpha(t')` written
/// without cancellation.
pub fn g_divisor(p: &ModelParams, t: f64, t_prime: f64, cache: Option<&KernelCache>) -> Result<f64> {
    check_time(t_prime)?;
    check_time(t)?;
    if t < t_prime {
        return Err(Error::InvalidParameter(format!(
            "divisor requires t >= t', got t = {t}, t' = {t_prime}"
        )));
    }
    let h_prime = match cache {
        Some(c) => c.h(t_prime)?,
        None => h_kernel(p, t_prime)?,
    };
    Ok(h_prime + divisor_increment(p, t, t_prime)?)
}

fn divisor_increment(p: &ModelParams, t: f64, t_prime: f64) -> Result<f64> {
    if t == t_prime {
        return Ok(0.0);
    }
    let gm = p.gamma();
    let denom = (-gm * (t - t_prime)).exp_m1();
    integrate_damped(p, t_prime, t, |s| (-gm * (t - s)).exp_m1() / denom)
}

/// `g(infinity) = h(infinity) = (2/pi) Im psi(1/2 + (Gamma/2 + i eps)/(2 pi T))`,
/// and `(2/pi) arctan(2 eps / Gamma)` at zero temperature.
pub fn g_stationary(p: &ModelParams) -> Result<f64> {
    let eps = p.detuning();
    let gm = p.gamma();
    let temp = p.temperature();
    if temp == 0.0 {
        return Ok(2.0 / PI * (2.0 * eps / gm).atan());
    }
    let z = Complex64::new(0.5 + gm / (4.0 * PI * temp), eps / (2.0 * PI * temp));
    Ok(2.0 / PI * digamma(z)?.im)
}

/// `dg/dt = Gamma / (1 - e^{-Gamma t}) (h - g)` from known `h(t)` and `g(t)`.
pub fn g_derivative_from(p: &ModelParams, t: f64, h: f64, g: f64) -> f64 {
    if t == 0.0 {
        return p.detuning() / PI;
    }
    p.gamma() / -(-p.gamma() * t).exp_m1() * (h - g)
}

/// `dg/dt` at time `t`.
pub fn g_derivative(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(g_derivative_from(p, t, h_kernel(p, t)?, g_kernel(p, t)?))
}

/// `dg/dt = (Gamma T / eps) (1 - cos(eps t)) / sinh^2(Gamma t / 2)`, valid
/// when the thermal decay rate `pi T` equals `Gamma/2`.
pub fn g_derivative_matched_temperature(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let gm = p.gamma();
    if (PI * p.temperature() - 0.5 * gm).abs() > 1e-12 * gm {
        return Err(Error::InvalidParameter(
            "closed form requires pi T = Gamma / 2".into(),
        ));
    }
    let eps = p.detuning();
    if t == 0.0 {
        return Ok(eps / PI);
    }
    if eps == 0.0 {
        return Ok(0.0);
    }
    let half = (0.5 * eps * t).sin();
    let sh = (0.5 * gm * t).sinh();
    Ok(gm * p.temperature() / eps * 2.0 * half * half / (sh * sh))
}

/// `g(t)` from its representation through the Lerch transcendent and the
/// digamma function (requires `T > 0` and `t > 0`).
///
/// Terms of the `Gamma`-decreasing branch whose denominators
/// `pi T (2n+1) - Gamma/2 + i eps` can vanish are summed in the combined
/// form `(e^{-z t} - 1)/z`, which is regular at `z = 0`.
pub fn g_lerch(p: &ModelParams, t: f64) -> Result<f64> {
    check_time(t)?;
    let temp = p.temperature();
    if temp <= 0.0 || t == 0.0 {
        return Err(Error::InvalidParameter(
            "Lerch representation needs T > 0 and t > 0".into(),
        ));
    }
    let eps = p.detuning();
    let gm = p.gamma();
    let pt = PI * temp;
    let x = (-2.0 * pt * t).exp();
    let prefactor = Complex64::new(-pt * t, -eps * t).exp();

    let a_plus = Complex64::new(0.5 + gm / (4.0 * pt), eps / (2.0 * pt));
    let s_plus = prefactor * lerch_phi(x, a_plus)? + (0.5 * gm * t).exp() * digamma(a_plus)?;

    let a_minus = Complex64::new(0.5 - gm / (4.0 * pt), eps / (2.0 * pt));
    let split = (gm / (4.0 * pt) + 1.0).ceil();
    if split > 1e7 {
        return Err(Error::OutOfDomain(format!(
            "temperature {temp} too low for the Lerch representation"
        )));
    }
    let n0 = split as usize;
    let damping = (-0.5 * gm * t).exp();
    let mut head = Complex64::new(0.0, 0.0);
    for n in 0..n0 {
        let z = Complex64::new(pt * (2.0 * n as f64 + 1.0) - 0.5 * gm, eps);
        head -= damping * 2.0 * pt * t * expm1_ratio(-z * t);
    }
    let shifted = a_minus + n0 as f64;
    let tail = prefactor * (-2.0 * pt * t * n0 as f64).exp() * lerch_phi(x, shifted)?
        + damping * digamma(shifted)?;
    let s_minus = head + tail;

    Ok((s_plus.im - s_minus.im) / (PI * (0.5 * gm * t).sinh()))
}

/// `h` and `alpha = (1 - e^{-Gamma t}) g` tabulated on a uniform grid, with
/// exact evaluation between grid points by quadrature over a single cell.
#[derive(Debug, Clone)]
pub struct KernelCache {
    params: ModelParams,
    dt: f64,
    h: Vec<f64>,
    alpha: Vec<f64>,
}

impl KernelCache {
    /// Default spacing `min(0.01/Gamma, 0.1 pi/|eps|)`.
    pub fn default_step(p: &ModelParams) -> f64 {
        let mut dt = 0.01 / p.gamma();
        if let Some(z) = zero_spacing(p) {
            dt = dt.min(0.1 * z);
        }
        dt
    }

    pub fn new(p: &ModelParams, t_max: f64) -> Result<Self> {
        Self::with_step(p, t_max, Self::default_step(p))
    }

    pub fn with_step(p: &ModelParams, t_max: f64, dt: f64) -> Result<Self> {
        check_time(t_max)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("cache step must be positive, got {dt}")));
        }
        let n = (t_max / dt).ceil().max(1.0) as usize;
        if n > 50_000_000 {
            return Err(Error::InvalidParameter(format!(
                "kernel cache with {n} cells is too large"
            )));
        }
        let gm = p.gamma();
        let cells: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|k| {
                let a = k as f64 * dt;
                let b = (k + 1) as f64 * dt;
                let dh = integrate_damped(p, a, b, |_| 1.0)?;
                let da = integrate_damped(p, a, b, |s| -(-gm * (b - s)).exp_m1())?;
                Ok((dh, da))
            })
            .collect::<Result<_>>()?;

        let decay = (-gm * dt).exp();
        let rise = -(-gm * dt).exp_m1();
        let mut h = Vec::with_capacity(n + 1);
        let mut alpha = Vec::with_capacity(n + 1);
        h.push(0.0);
        alpha.push(0.0);
        for (k, (dh, da)) in cells.into_iter().enumerate() {
            alpha.push(decay * alpha[k] + rise * h[k] + da);
            h.push(h[k] + dh);
        }
        Ok(Self {
            params: *p,
            dt,
            h,
            alpha,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn step(&self) -> f64 {
        self.dt
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn t_max(&self) -> f64 {
        (self.h.len() - 1) as f64 * self.dt
    }

    pub fn grid_time(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    pub fn h_grid(&self, k: usize) -> f64 {
        self.h[k]
    }

    pub fn alpha_grid(&self, k: usize) -> f64 {
        self.alpha[k]
    }

    pub fn g_grid(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.alpha[k] / -(-self.params.gamma() * self.grid_time(k)).exp_m1()
        }
    }

    fn anchor(&self, t: f64) -> usize {
        ((t / self.dt).floor() as usize).min(self.h.len() - 1)
    }

    pub fn h(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let k = self.anchor(t);
        let tk = self.grid_time(k);
        Ok(self.h[k] + integrate_damped(&self.params, tk, t, |_| 1.0)?)
    }

    /// `alpha(t) = (1 - e^{-Gamma t}) g(t)`.
    pub fn alpha(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let k = self.anchor(t);
        let tk = self.grid_time(k);
        let gm = self.params.gamma();
        let d = t - tk;
        let cell = integrate_damped(&self.params, tk, t, |s| -(-gm * (t - s)).exp_m1())?;
        Ok((-gm * d).exp() * self.alpha[k] - (-gm * d).exp_m1() * self.h[k] + cell)
    }

    pub fn g(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(self.alpha(t)? / -(-self.params.gamma() * t).exp_m1())
    }

    pub fn g_divisor(&self, t: f64, t_prime: f64) -> Result<f64> {
        g_divisor(&self.params, t, t_prime, Some(self))
    }

    /// `alpha(t, t') = (1 - e^{-Gamma (t - t')}) g(t, t')`.
    pub fn alpha_divisor(&self, t: f64, t_prime: f64) -> Result<f64> {
        let g = self.g_divisor(t, t_prime)?;
        Ok(-(-self.params.gamma() * (t - t_prime)).exp_m1() * g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(two_eps_over_pi: f64, pi_t: f64) -> ModelParams {
        ModelParams::dimensionless(two_eps_over_pi, pi_t).unwrap()
    }

    #[test]
    fn gamma_limits() {
        let p = params(4.0, 1.0);
        assert!((gamma_kernel(&p, 0.0) - 2.0 * p.detuning() / PI).abs() < 1e-14);
        assert_eq!(gamma_kernel(&p, 0.3), gamma_kernel(&p, -0.3));
        let cold = params(4.0, 0.0);
        let s = 0.7;
        let expected = 2.0 * (cold.detuning() * s).sin() / (PI * s);
        assert!((gamma_kernel(&cold, s) - expected).abs() < 1e-14);
        let hot = params(4.0, 2000.0);
        assert!(gamma_kernel(&hot, 10.0).is_finite());
    }

    #[test]
    fn kernels_vanish_at_zero() {
        let p = params(20.0, 1e-3);
        assert_eq!(h_kernel(&p, 0.0).unwrap(), 0.0);
        assert_eq!(g_kernel(&p, 0.0).unwrap(), 0.0);
        assert!(h_kernel(&p, -1.0).is_err());
    }

    #[test]
    fn stationary_value_matches_long_time_limit() {
        for (e, t) in [(20.0, 1e-3), (4.0, 10.0), (4.0, 1.0), (2.0, 0.0)] {
            let p = params(e, t);
            let g_inf = g_stationary(&p).unwrap();
            let h_far = h_kernel(&p, 80.0).unwrap();
            assert!((g_inf - h_far).abs() < 1e-3, "{e} {t}: {g_inf} {h_far}");
        }
        let zero_t = params(4.0, 0.0);
        let tiny_t = params(4.0, 1e-9);
        assert!((g_stationary(&zero_t).unwrap() - g_stationary(&tiny_t).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn cache_matches_direct_quadrature() {
        let p = params(20.0, 1e-3);
        let cache = KernelCache::new(&p, 5.0).unwrap();
        for t in [0.0, 0.013, 0.5, 1.2345, 4.99, 5.0, 6.0] {
            let h = h_kernel(&p, t).unwrap();
            let g = g_kernel(&p, t).unwrap();
            assert!((cache.h(t).unwrap() - h).abs() < 1e-11, "h at {t}");
            assert!((cache.g(t).unwrap() - g).abs() < 1e-11, "g at {t}");
        }
    }

    #[test]
    fn divisor_end_points() {
        let p = params(4.0, 1e-3);
        let cache = KernelCache::new(&p, 6.0).unwrap();
        let t = 3.3;
        assert!((cache.g_divisor(t, t).unwrap() - cache.h(t).unwrap()).abs() < 1e-14);
        assert!((cache.g_divisor(t, 0.0).unwrap() - cache.g(t).unwrap()).abs() < 1e-11);
        assert!(cache.g_divisor(1.0, 2.0).is_err());
    }

    #[test]
    fn matched_temperature_requires_condition() {
        let p = params(4.0, 1.0);
        assert!(g_derivative_matched_temperature(&p, 1.0).is_ok());
        assert!(g_derivative_matched_temperature(&params(4.0, 2.0), 1.0).is_err());
    }
}
