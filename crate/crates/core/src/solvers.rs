//! Time integration of the master equations and a microscopic reference.
//!
//! * [`integrate_tcl`]: adaptive Dormand–Prince integration of the
//!   time-local equation `d rho/dt = [-i L + Sigma_TCL(t)] rho`.
//! * [`integrate_nz`]: trapezoidal product integration of the time-nonlocal
//!   equation `d rho/dt = -i L rho + int_0^t Sigma(t - s) rho(s) ds`, with the
//!   delta part of the kernel applied locally.
//! * [`markov_only`] and [`born_markov`]: semigroup references.
//! * [`microscopic_oracle`]: exact single-particle evolution of the level
//!   coupled to a finite, uniformly discretized band.

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::kernels::KernelCache;
use crate::liouville::{
    born_markov_generator, coherent_generator, markov_generator, nz_kernel_local, nz_kernel_regular,
    tcl_generator_from_h, SuperOp,
};
use crate::model::{DensityMatrix, ModelParams, TimeGrid};
use crate::special_functions::fermi_occupation;

type C = Complex64;

/// States on a time grid, stored as operator-basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub coords: Vec<Vector4<C>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn parity(&self, k: usize) -> f64 {
        self.coords[k][3].re * std::f64::consts::SQRT_2
    }

    pub fn field(&self, k: usize) -> C {
        self.coords[k][1]
    }

    pub fn trace(&self, k: usize) -> C {
        self.coords[k][0] * std::f64::consts::SQRT_2
    }

    pub fn parities(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.parity(k)).collect()
    }

    pub fn state(&self, k: usize) -> Result<DensityMatrix> {
        DensityMatrix::from_coords(&self.coords[k])
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OdeTolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for OdeTolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
        }
    }
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// `y + step * sum_i c_i k_i`.
fn combine(y: &Vector4<C>, step: f64, terms: &[(&Vector4<C>, f64)]) -> Vector4<C> {
    let mut out = *y;
    for (k, c) in terms {
        out += *k * C::from(c * step);
    }
    out
}

/// Adaptive Dormand–Prince 5(4) integration of the linear system
/// `dy/dt = generator(t) y`, reporting the state at every grid time.
pub fn integrate_linear<G>(generator: G, y0: Vector4<C>, grid: &TimeGrid, tol: OdeTolerance) -> Result<Trajectory>
where
    G: Fn(f64) -> Result<Matrix4<C>>,
{
    let times = grid.times();
    let mut coords = Vec::with_capacity(times.len());
    coords.push(y0);
    let mut y = y0;
    let mut t = 0.0;
    let mut h = (grid.dt() * 0.5).max(1e-6);
    let rhs = |t: f64, y: &Vector4<C>| -> Result<Vector4<C>> { Ok(generator(t)? * y) };
    let mut k1 = rhs(t, &y)?;
    for &target in &times[1..] {
        while t < target {
            let last = target - t <= h * (1.0 + 1e-12);
            let step = if last { target - t } else { h };
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(Error::StepSizeUnderflow { t });
            }
            let k2 = rhs(t + step / 5.0, &combine(&y, step, &[(&k1, A21)]))?;
            let k3 = rhs(t + 0.3 * step, &combine(&y, step, &[(&k1, A31), (&k2, A32)]))?;
            let k4 = rhs(
                t + 0.8 * step,
                &combine(&y, step, &[(&k1, A41), (&k2, A42), (&k3, A43)]),
            )?;
            let k5 = rhs(
                t + 8.0 / 9.0 * step,
                &combine(&y, step, &[(&k1, A51), (&k2, A52), (&k3, A53), (&k4, A54)]),
            )?;
            let k6 = rhs(
                t + step,
                &combine(&y, step, &[(&k1, A61), (&k2, A62), (&k3, A63), (&k4, A64), (&k5, A65)]),
            )?;
            let y_new = combine(&y, step, &[(&k1, B1), (&k3, B3), (&k4, B4), (&k5, B5), (&k6, B6)]);
            let k7 = rhs(t + step, &y_new)?;
            let err_vec = combine(
                &Vector4::zeros(),
                step,
                &[(&k1, E1), (&k3, E3), (&k4, E4), (&k5, E5), (&k6, E6), (&k7, E7)],
            );
            let mut err = 0.0;
            for i in 0..4 {
                let scale = tol.atol + tol.rtol * y[i].norm().max(y_new[i].norm());
                err += (err_vec[i].norm() / scale).powi(2);
            }
            let err = (err / 4.0).sqrt();
            if err <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                k1 = k7;
            }
            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 && last {
                // Keep the proposed step for the next interval.
                h = h.max(step * factor).min(h * 5.0);
            } else {
                h = step * factor;
            }
        }
        coords.push(y);
    }
    Ok(Trajectory { times, coords })
}

/// Integrates the time-local master equation with the rate function
/// `h(t)` taken from `cache` (built here when absent).
pub fn integrate_tcl(
    p: &ModelParams,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
    cache: Option<&KernelCache>,
) -> Result<Trajectory> {
    let owned;
    let cache = match cache {
        Some(c) => c,
        None => {
            owned = KernelCache::new(p, grid.t_end())?;
            &owned
        }
    };
    let coherent = coherent_generator(p).matrix;
    integrate_linear(
        |t| Ok(coherent + tcl_generator_from_h(p, cache.h(t)?).matrix),
        rho0.coords(),
        grid,
        OdeTolerance::default(),
    )
}

/// Delay beyond which `e^{-Gamma s/2} |gamma(s)|` is bounded by `1e-12`.
pub fn memory_horizon(p: &ModelParams) -> f64 {
    let gm = p.gamma();
    let temp = p.temperature();
    let eps = p.detuning().abs();
    let bound = |s: f64| {
        let mut b = 2.0 * eps / PI;
        if s > 0.0 {
            let thermal = if temp > 0.0 {
                let x = PI * temp * s;
                if x > 700.0 {
                    0.0
                } else {
                    2.0 * temp / x.sinh()
                }
            } else {
                2.0 / (PI * s)
            };
            b = b.min(thermal);
        }
        (-0.5 * gm * s).exp() * b
    };
    if bound(0.0) < 1e-12 {
        return 0.0;
    }
    let mut hi = 1.0 / gm;
    while bound(hi) >= 1e-12 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if bound(mid) >= 1e-12 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Points per shortest time scale used by [`nz_grid`]. Keeps the
/// trapezoidal error below `1e-4` in parity for the usual parameter range.
pub const NZ_POINTS_PER_SCALE: usize = 40;

/// Default uniform grid for [`integrate_nz`].
pub fn nz_grid(p: &ModelParams, t_end: f64) -> Result<TimeGrid> {
    TimeGrid::resolved(p, t_end, NZ_POINTS_PER_SCALE)
}

/// Integrates the time-nonlocal master equation on `grid` with the
/// trapezoidal rule for both the time derivative and the memory integral.
/// The memory is truncated at [`memory_horizon`]. Second-order accurate in
/// the grid spacing.
pub fn integrate_nz(p: &ModelParams, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Trajectory> {
    grid.check_resolution(p)?;
    let dt = grid.dt();
    let n = grid.n_steps();
    let horizon = ((memory_horizon(p) / dt).ceil() as usize).min(n);
    let kernel: Vec<Matrix4<C>> = (0..=horizon)
        .map(|k| nz_kernel_regular(p, k as f64 * dt).matrix)
        .collect();
    let local = coherent_generator(p).add(&nz_kernel_local(p)).matrix;
    let half = C::from(0.5 * dt);
    let system = Matrix4::identity() - (local + kernel[0] * half) * half;
    let lu = system.lu();

    let mut coords = Vec::with_capacity(n + 1);
    coords.push(rho0.coords());
    let mut memory = Vector4::zeros();
    for step in 0..n {
        let next = step + 1;
        // Trapezoidal memory sum for t_{n+1}, without the j = n+1 endpoint.
        let mut rest = Vector4::zeros();
        let first = next.saturating_sub(horizon);
        for (j, y) in coords.iter().enumerate().skip(first) {
            let lag = next - j;
            let w = if j == 0 { 0.5 } else { 1.0 };
            rest += kernel[lag] * y * C::from(w * dt);
        }
        let y_n = coords[step];
        let f_n = local * y_n + memory;
        let rhs = y_n + (f_n + rest) * half;
        let y_next = lu
            .solve(&rhs)
            .ok_or_else(|| Error::IllConditioned("singular trapezoidal system".into()))?;
        memory = rest + kernel[0] * y_next * half;
        coords.push(y_next);
    }
    Ok(Trajectory {
        times: grid.times(),
        coords,
    })
}

fn semigroup(generator: &SuperOp, rho0: &DensityMatrix, times: &[f64]) -> Trajectory {
    let y0 = rho0.coords();
    let coords = times
        .iter()
        .map(|&t| generator.scale(C::from(t)).exp().matrix * y0)
        .collect();
    Trajectory {
        times: times.to_vec(),
        coords,
    }
}

/// Evolution under the long-time Markovian generator `-i L + Sigma_TCL(infinity)`.
pub fn markov_only(p: &ModelParams, rho0: &DensityMatrix, times: &[f64]) -> Result<Trajectory> {
    Ok(semigroup(&markov_generator(p)?, rho0, times))
}

/// Evolution under the Born–Markov generator with Fermi rates.
pub fn born_markov(p: &ModelParams, rho0: &DensityMatrix, times: &[f64]) -> Trajectory {
    semigroup(&born_markov_generator(p), rho0, times)
}

/// Discretized reservoir: `n_modes` levels at the midpoints of a uniform
/// partition of `[mu - W, mu + W]`, each coupled with amplitude
/// `sqrt(Gamma dw / (2 pi))`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteBand {
    pub n_modes: usize,
    pub half_bandwidth: f64,
}

impl DiscreteBand {
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_bandwidth / self.n_modes as f64
    }

    /// Time after which the finite mode spacing causes revivals.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing()
    }
}

/// Eigenvalue of the arrowhead Hamiltonian, stored relative to the bath
/// level just below it for accurate differences `lambda - omega_a`.
#[derive(Debug, Clone, Copy)]
struct ArrowRoot {
    /// Index of the bath level below the root (`-1` below the band).
    anchor: i64,
    offset: f64,
    /// Weight of the level in the eigenvector, `|U_0j|^2`.
    weight: f64,
}

struct Arrowhead {
    level: f64,
    coupling2: f64,
    bottom: f64,
    spacing: f64,
    n: usize,
}

impl Arrowhead {
    fn omega(&self, a: i64) -> f64 {
        self.bottom + a as f64 * self.spacing
    }

    /// `lambda - omega_a` for `lambda = omega_anchor + offset`.
    fn gap(&self, anchor: i64, offset: f64, a: usize) -> f64 {
        offset + (anchor - a as i64) as f64 * self.spacing
    }

    /// Secular function `lambda - level - sum v^2/(lambda - omega)` and its derivative.
    fn secular(&self, anchor: i64, offset: f64) -> (f64, f64) {
        let mut s = 0.0;
        let mut ds = 0.0;
        for a in 0..self.n {
            let inv = 1.0 / self.gap(anchor, offset, a);
            s += inv;
            ds += inv * inv;
        }
        let lambda = self.omega(anchor) + offset;
        (lambda - self.level - self.coupling2 * s, 1.0 + self.coupling2 * ds)
    }

    fn root_in(&self, anchor: i64, mut lo: f64, mut hi: f64) -> ArrowRoot {
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let (f, df) = self.secular(anchor, x);
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let newton = x - f / df;
            let next = if newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + lo.abs()) {
                x = next;
                break;
            }
            x = next;
        }
        let (_, df) = self.secular(anchor, x);
        ArrowRoot {
            anchor,
            offset: x,
            weight: 1.0 / df,
        }
    }

    fn roots(&self) -> Vec<ArrowRoot> {
        let v = self.coupling2.sqrt();
        let reach = (self.level - self.omega(0)).abs() + (self.n as f64).sqrt() * v + 1.0;
        let mut roots = Vec::with_capacity(self.n + 1);
        // Offsets of the outer roots are measured from the first and last
        // bath levels.
        roots.push(self.root_in(0, -reach - self.spacing * self.n as f64, 0.0));
        for a in 0..self.n - 1 {
            roots.push(self.root_in(a as i64, 0.0, self.spacing));
        }
        let last = (self.n - 1) as i64;
        let reach_top = (self.level - self.omega(last)).abs() + (self.n as f64).sqrt() * v + 1.0;
        roots.push(self.root_in(last, 0.0, reach_top + self.spacing * self.n as f64));
        roots
    }
}

/// Level occupation from exact evolution of the single-particle
/// correlation matrix `C(t) = e^{-iHt} C(0) e^{iHt}` of the level coupled to
/// a discretized band, starting from a product of the level state with
/// occupation `n0 = (1 - parity0)/2` and the thermal band.
///
/// The Hamiltonian has arrowhead form; its eigenvalues are the roots of the
/// secular equation (one between each pair of bath levels plus one outside
/// the band on each side) and the eigenvectors follow in closed form.
pub fn microscopic_oracle(
    p: &ModelParams,
    band: &DiscreteBand,
    parity0: f64,
    times: &[f64],
) -> Result<Vec<f64>> {
    if band.n_modes < 2 || !(band.half_bandwidth > 0.0) {
        return Err(Error::InvalidParameter("band needs at least two modes and W > 0".into()));
    }
    if !(-1.0..=1.0).contains(&parity0) {
        return Err(Error::InvalidParameter(format!("initial parity {parity0} outside [-1, 1]")));
    }
    let t_end = times.iter().copied().fold(0.0, f64::max);
    if t_end >= band.recurrence_time() {
        return Err(Error::Discretization(format!(
            "mode spacing {} gives recurrences at t = {}, before t_end = {t_end}",
            band.spacing(),
            band.recurrence_time()
        )));
    }
    let dw = band.spacing();
    let n = band.n_modes;
    let arrow = Arrowhead {
        level: p.epsilon_level(),
        coupling2: p.gamma() * dw / (2.0 * PI),
        bottom: p.mu() - band.half_bandwidth + 0.5 * dw,
        spacing: dw,
        n,
    };
    let roots = arrow.roots();
    let occupation: Vec<f64> = (0..n)
        .map(|a| fermi_occupation(arrow.omega(a as i64) - p.mu(), p.temperature()))
        .collect();
    let n0 = 0.5 * (1.0 - parity0);
    let v = arrow.coupling2.sqrt();

    let result = times
        .iter()
        .map(|&t| {
            let phases: Vec<C> = roots
                .iter()
                .map(|r| {
                    let lambda = arrow.omega(r.anchor) + r.offset;
                    C::new(0.0, -lambda * t).exp() * r.weight
                })
                .collect();
            // Amplitude on the level: sum_j |U_0j|^2 e^{-i lambda_j t}.
            let psi0: C = phases.iter().sum();
            let mut n_t = n0 * psi0.norm_sqr();
            for (a, &f) in occupation.iter().enumerate() {
                if f == 0.0 {
                    continue;
                }
                let mut psi = C::new(0.0, 0.0);
                for (r, ph) in roots.iter().zip(&phases) {
                    psi += ph / arrow.gap(r.anchor, r.offset, a);
                }
                n_t += f * (psi * v).norm_sqr();
            }
            n_t
        })
        .collect();
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::damped_gamma;
    use nalgebra::{DMatrix, SymmetricEigen};

    #[test]
    fn arrowhead_matches_dense_diagonalization() {
        let p = ModelParams::new(0.7, 0.1, 1.0, 0.5).unwrap();
        let band = DiscreteBand {
            n_modes: 40,
            half_bandwidth: 6.0,
        };
        let times = [0.0, 0.5, 1.7, 3.0];
        let fast = microscopic_oracle(&p, &band, -0.4, &times).unwrap();

        let n = band.n_modes;
        let dw = band.spacing();
        let v = (p.gamma() * dw / (2.0 * PI)).sqrt();
        let mut h = DMatrix::<f64>::zeros(n + 1, n + 1);
        h[(0, 0)] = p.epsilon_level();
        let mut occ = vec![0.5 * (1.0 + 0.4)];
        for a in 0..n {
            let w = p.mu() - band.half_bandwidth + (a as f64 + 0.5) * dw;
            h[(a + 1, a + 1)] = w;
            h[(0, a + 1)] = v;
            h[(a + 1, 0)] = v;
            occ.push(fermi_occupation(w - p.mu(), p.temperature()));
        }
        let eig = SymmetricEigen::new(h);
        for (k, &t) in times.iter().enumerate() {
            let mut n_t = 0.0;
            for a in 0..=n {
                let mut amp = C::new(0.0, 0.0);
                for j in 0..=n {
                    amp += eig.eigenvectors[(0, j)]
                        * eig.eigenvectors[(a, j)]
                        * C::new(0.0, -eig.eigenvalues[j] * t).exp();
                }
                n_t += occ[a] * amp.norm_sqr();
            }
            assert!((n_t - fast[k]).abs() < 1e-12, "t = {t}: {n_t} vs {}", fast[k]);
        }
    }

    #[test]
    fn oracle_rejects_recurrence() {
        let p = ModelParams::new(0.0, 0.0, 1.0, 0.0).unwrap();
        let band = DiscreteBand {
            n_modes: 20,
            half_bandwidth: 10.0,
        };
        assert!(matches!(
            microscopic_oracle(&p, &band, 0.0, &[0.0, 10.0]),
            Err(Error::Discretization(_))
        ));
    }

    #[test]
    fn memory_horizon_bounds_kernel() {
        let p = ModelParams::dimensionless(20.0, 1e-3).unwrap();
        let s = memory_horizon(&p);
        assert!(damped_gamma(&p, s).abs() <= 1e-12);
        assert!(s > 10.0);
    }

    #[test]
    fn nz_rejects_coarse_grid() {
        let p = ModelParams::dimensionless(20.0, 1e-3).unwrap();
        let rho = DensityMatrix::fermionic(0.0).unwrap();
        assert!(integrate_nz(&p, &rho, &TimeGrid::new(5.0, 10).unwrap()).is_err());
    }
}
