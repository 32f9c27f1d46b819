//! Divisibility classification and the observable signatures of memory:
//! reentrance, parity extrema, plateaus and transport-current reversals.
//!
//! All searches bracket roots on the kernel-cache grid and refine them by
//! bisection. Times are sought in `(T_MIN, t_max]` with `T_MIN = 1e-6 / Gamma`
//! to skip the trivial root at `t = 0`.

use rayon::prelude::*;
use std::f64::consts::PI;

use crate::env_info::info_measures;
use crate::error::{Error, Result};
use crate::kernels::{damped_gamma, KernelCache};
use crate::model::{DensityMatrix, ModelParams, TimeGrid};

/// Lower end of every root search, in units of `1/Gamma`.
pub const T_MIN: f64 = 1e-6;
/// Tolerance on `|h|` variation for the semigroup classification.
pub const SEMIGROUP_TOLERANCE: f64 = 1e-8;
/// Slack on `sup |h| <= 1` for CP-divisibility.
pub const CP_DIVISIBILITY_SLACK: f64 = 1e-9;
/// Default horizon of the reentrance search, in units of `1/Gamma`.
pub const REENTRANCE_HORIZON: f64 = 60.0;
/// Number of initial parities in a family scan.
pub const FAMILY_SIZE: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Semigroup,
    CpDivisible,
    NonCpDivisible,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Semigroup => "semigroup",
            Regime::CpDivisible => "cp-divisible",
            Regime::NonCpDivisible => "non-cp-divisible",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisibilityReport {
    pub regime: Regime,
    pub t_max: f64,
    /// Sorted, disjoint intervals where `|h(t)| <= 1`.
    pub cp_windows: Vec<(f64, f64)>,
    pub h_max: f64,
    /// One time per forbidden window where `|h| > 1`, at the largest `|h|` on the grid.
    pub witnesses: Vec<f64>,
}

impl DivisibilityReport {
    /// Complement of the CP windows in `[0, t_max]`: where `|h(t)| > 1`.
    pub fn forbidden_windows(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut start = 0.0;
        for &(a, b) in &self.cp_windows {
            if a > start {
                out.push((start, a));
            }
            start = b;
        }
        if start < self.t_max {
            out.push((start, self.t_max));
        }
        out
    }
}

/// Bisection for a sign change of `f` on `[a, b]`, stopping at an absolute
/// width of `1e-13 max(1, b)`.
fn bisect<F>(f: F, mut a: f64, mut b: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut fa = f(a)?;
    if fa == 0.0 {
        return Ok(a);
    }
    for _ in 0..200 {
        if b - a <= 1e-13 * b.max(1.0) {
            break;
        }
        let m = 0.5 * (a + b);
        let fm = f(m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if (fm > 0.0) == (fa > 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Sign changes of `f` between consecutive `samples`, refined by bisection.
fn scan_roots<F>(f: F, samples: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut roots = Vec::new();
    let Some(&first) = samples.first() else {
        return Ok(roots);
    };
    let mut prev_t = first;
    let mut prev = f(first)?;
    for &t in &samples[1..] {
        let cur = f(t)?;
        if cur == 0.0 {
            roots.push(t);
        } else if prev != 0.0 && (cur > 0.0) != (prev > 0.0) {
            roots.push(bisect(&f, prev_t, t)?);
        }
        prev_t = t;
        prev = cur;
    }
    Ok(roots)
}

/// `T_MIN / Gamma` followed by the cache grid times in `(T_MIN / Gamma, t_max]`,
/// ending exactly at `t_max`.
fn search_samples(cache: &KernelCache, t_max: f64) -> Vec<f64> {
    let t_min = T_MIN / cache.params().gamma();
    let mut samples = vec![t_min];
    let dt = cache.step();
    let mut k = (t_min / dt).floor() as usize + 1;
    loop {
        let t = k as f64 * dt;
        if t >= t_max {
            break;
        }
        samples.push(t);
        k += 1;
    }
    if t_max > t_min {
        samples.push(t_max);
    }
    samples
}

fn check_parity(parity0: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&parity0) {
        return Err(Error::InvalidParameter(format!("initial parity {parity0} outside [-1, 1]")));
    }
    Ok(())
}

/// Classifies the dynamics on `(0, t_max]` from the TCL rate `h(t)`.
pub fn classify_divisibility(cache: &KernelCache, t_max: f64) -> Result<DivisibilityReport> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidParameter(format!("t_max = {t_max} must be positive")));
    }
    let samples = search_samples(cache, t_max);
    let values: Vec<f64> = samples.iter().map(|&t| cache.h(t)).collect::<Result<_>>()?;
    let h_max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h_ref = values[0];
    if values.iter().all(|v| (v - h_ref).abs() <= SEMIGROUP_TOLERANCE) {
        return Ok(DivisibilityReport {
            regime: Regime::Semigroup,
            t_max,
            cp_windows: vec![(0.0, t_max)],
            h_max,
            witnesses: Vec::new(),
        });
    }
    let margin = |t: f64| -> Result<f64> { Ok(1.0 - cache.h(t)?.abs()) };
    let crossings = scan_roots(margin, &samples)?;
    let mut cp_windows = Vec::new();
    let mut witnesses = Vec::new();
    let mut inside = 1.0 - values[0].abs() >= 0.0;
    let mut start = 0.0;
    let mut bounds = crossings.clone();
    bounds.push(t_max);
    for &edge in &bounds {
        if inside {
            if edge > start {
                cp_windows.push((start, edge));
            }
        } else {
            let mut best = (start, 0.0f64);
            for (t, v) in samples.iter().zip(&values) {
                if *t >= start && *t <= edge && v.abs() > best.1 {
                    best = (*t, v.abs());
                }
            }
            witnesses.push(best.0);
        }
        inside = !inside;
        start = edge;
    }
    let regime = if h_max <= 1.0 + CP_DIVISIBILITY_SLACK {
        Regime::CpDivisible
    } else {
        Regime::NonCpDivisible
    };
    if regime == Regime::CpDivisible {
        cp_windows = vec![(0.0, t_max)];
        witnesses.clear();
    }
    Ok(DivisibilityReport {
        regime,
        t_max,
        cp_windows,
        h_max,
        witnesses,
    })
}

/// Minimum of `1 - |b(t)|^2` over all initial Bloch vectors: negative iff
/// the map sends some state outside the Bloch ball.
pub fn pp_minimum_from_g(gamma: f64, t: f64, g: f64) -> f64 {
    let decay = (-gamma * t).exp();
    let growth = -(-gamma * t).exp_m1();
    if g.abs() <= 1.0 {
        growth * (1.0 - g * g)
    } else {
        let b = decay * g.signum() + growth * g;
        1.0 - b * b
    }
}

pub fn pp_minimum(cache: &KernelCache, t: f64) -> Result<f64> {
    Ok(pp_minimum_from_g(cache.params().gamma(), t, cache.g(t)?))
}

/// Parity at `t` from the initial parity, `e^{-Gamma t} p0 + alpha(t)`.
pub fn parity_at(cache: &KernelCache, parity0: f64, t: f64) -> Result<f64> {
    Ok((-cache.params().gamma() * t).exp() * parity0 + cache.alpha(t)?)
}

/// Smallest `t_r` in `(T_MIN/Gamma, t_max]` with `g(t_r) = parity0`: the
/// evolution from `parity0` revisits its initial value at `t_r`.
pub fn reentrance_time_within(cache: &KernelCache, parity0: f64, t_max: f64) -> Result<Option<f64>> {
    check_parity(parity0)?;
    let samples = search_samples(cache, t_max);
    let residual = |t: f64| -> Result<f64> { Ok(cache.g(t)? - parity0) };
    Ok(scan_roots(residual, &samples)?.into_iter().next())
}

/// [`reentrance_time_within`] over [`REENTRANCE_HORIZON`].
pub fn reentrance_time(p: &ModelParams, parity0: f64) -> Result<Option<f64>> {
    let horizon = REENTRANCE_HORIZON / p.gamma();
    let cache = KernelCache::new(p, horizon)?;
    reentrance_time_within(&cache, parity0, horizon)
}

/// First return of a sampled parity trajectory to its initial value, found
/// from sign changes after `T_MIN` (times in units of `1/Gamma`) and located
/// by linear interpolation.
pub fn first_return(times: &[f64], parities: &[f64]) -> Option<f64> {
    let p0 = *parities.first()?;
    let mut prev: Option<(f64, f64)> = None;
    for (&t, &v) in times.iter().zip(parities) {
        if t <= T_MIN {
            continue;
        }
        let r = v - p0;
        if let Some((tp, rp)) = prev {
            if r == 0.0 || (r > 0.0) != (rp > 0.0) && rp != 0.0 {
                return Some(tp + (t - tp) * rp / (rp - r));
            }
        }
        prev = Some((t, r));
    }
    None
}

/// Times in `(T_MIN/Gamma, t_max]` where the parity starting from `parity0`
/// is stationary, i.e. `parity(t) = h(t)`.
pub fn extrema_times(cache: &KernelCache, parity0: f64, t_max: f64) -> Result<Vec<f64>> {
    check_parity(parity0)?;
    let samples = search_samples(cache, t_max);
    // parity(t) - h(t) = e^{-Gamma t} [parity0 - F(t)]; the scaled form does
    // not underflow at late times.
    scan_roots(|t| Ok(parity0 - extremum_initial_condition(cache, t)?), &samples)
}

/// Initial parity whose evolution is stationary at `t_e`:
/// `g(t_e) + e^{Gamma t_e} [h(t_e) - g(t_e)]`. Values outside `[-1, 1]`
/// mean that no state has an extremum at `t_e`.
pub fn extremum_initial_condition(cache: &KernelCache, t_e: f64) -> Result<f64> {
    if !(t_e > 0.0) {
        return Err(Error::InvalidParameter(format!("extremum time {t_e} must be positive")));
    }
    let g = cache.g(t_e)?;
    let h = cache.h(t_e)?;
    Ok(g + (cache.params().gamma() * t_e).exp() * (h - g))
}

/// `d parity/dt = -Gamma [parity(t) - h(t)]`.
pub fn parity_derivative(cache: &KernelCache, parity0: f64, t: f64) -> Result<f64> {
    Ok(-cache.params().gamma() * (parity_at(cache, parity0, t)? - cache.h(t)?))
}

/// `d^2 parity/dt^2` at a stationary point, `Gamma e^{-Gamma t/2} gamma(t)`.
pub fn curvature_at_extremum(p: &ModelParams, t_e: f64) -> f64 {
    p.gamma() * damped_gamma(p, t_e)
}

/// Zero of the memory kernel at `t_p = ell pi / |epsilon|` with the nearest
/// extremum of a given trajectory and its curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct PlateauPoint {
    pub ell: usize,
    pub t_p: f64,
    pub nearest_extremum: Option<f64>,
    pub curvature: Option<f64>,
}

/// Kernel zeros `ell pi / |epsilon| <= t_max`, and for `parity0` given the
/// curvature at the extremum nearest to each. Empty when `epsilon = 0`.
pub fn plateau_points(cache: &KernelCache, t_max: f64, parity0: Option<f64>) -> Result<Vec<PlateauPoint>> {
    let p = cache.params();
    let eps = p.detuning().abs();
    if eps == 0.0 {
        return Ok(Vec::new());
    }
    let extrema = match parity0 {
        Some(p0) => extrema_times(cache, p0, t_max)?,
        None => Vec::new(),
    };
    let count = (t_max * eps / PI).floor() as usize;
    Ok((1..=count)
        .map(|ell| {
            let t_p = ell as f64 * PI / eps;
            let nearest = extrema
                .iter()
                .copied()
                .min_by(|a, b| (a - t_p).abs().total_cmp(&(b - t_p).abs()));
            PlateauPoint {
                ell,
                t_p,
                nearest_extremum: nearest,
                curvature: nearest.map(|t| curvature_at_extremum(p, t)),
            }
        })
        .collect())
}

/// Per-time observables of a single trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub parity: f64,
    pub occupation: f64,
    /// `d<n>/dt`, positive when the level fills.
    pub current: f64,
    pub g: f64,
    pub h: f64,
    pub s_sys: f64,
    pub s_env: f64,
    pub s_env_modes: Option<[f64; 2]>,
    pub coherent_information: f64,
    pub mismatch: f64,
}

/// `d<n>/dt = (Gamma/2) [parity(t) - h(t)]`.
pub fn current(gamma: f64, parity: f64, h: f64) -> f64 {
    0.5 * gamma * (parity - h)
}

pub fn current_trace(cache: &KernelCache, rho0: &DensityMatrix, grid: &TimeGrid) -> Result<Vec<TraceRecord>> {
    let p = cache.params();
    grid.times()
        .into_par_iter()
        .map(|t| {
            let g = cache.g(t)?;
            let h = cache.h(t)?;
            let parity = parity_at(cache, rho0.parity(), t)?;
            let info = info_measures(p, t, rho0, g)?;
            Ok(TraceRecord {
                time: t,
                parity,
                occupation: 0.5 * (1.0 - parity),
                current: current(p.gamma(), parity, h),
                g,
                h,
                s_sys: info.s_sys,
                s_env: info.s_env,
                s_env_modes: info.s_env_modes,
                coherent_information: info.coherent_information,
                mismatch: info.mismatch,
            })
        })
        .collect()
}

/// Currents of a family of initial parities on a common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentFamily {
    pub parities: Vec<f64>,
    pub times: Vec<f64>,
    /// `currents[i][k]` for parity `i` at time `k`.
    pub currents: Vec<Vec<f64>>,
    /// Refined current zero-crossings per parity.
    pub crossings: Vec<Vec<f64>>,
}

impl CurrentFamily {
    /// All crossing times of the family, sorted.
    pub fn all_crossings(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.crossings.iter().flatten().copied().collect();
        all.sort_by(f64::total_cmp);
        all
    }

    /// Subintervals `[a, a + width)` of `(0, t_end]` that contain no crossing.
    pub fn empty_bins(&self, width: f64) -> Vec<(f64, f64)> {
        let t_end = self.times.last().copied().unwrap_or(0.0);
        let all = self.all_crossings();
        let n = (t_end / width - 1e-9).ceil().max(1.0) as usize;
        (0..n)
            .map(|k| (k as f64 * width, ((k + 1) as f64 * width).min(t_end)))
            .filter(|&(a, b)| {
                let last = b >= t_end;
                !all.iter().any(|&t| t >= a && (t < b || (last && t <= b)))
            })
            .collect()
    }
}

/// `n` equally spaced initial parities on `[-1, 1]`.
pub fn parity_family(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|k| -1.0 + 2.0 * k as f64 / (n - 1) as f64).collect(),
    }
}

/// Current traces for each initial parity. A zero-crossing of the current
/// for `parity0` is a root of `parity0 - F(t)`, with `F` the
/// [`extremum_initial_condition`]; crossings are refined on that residual.
pub fn current_family(cache: &KernelCache, parities: &[f64], grid: &TimeGrid) -> Result<CurrentFamily> {
    let gm = cache.params().gamma();
    let times = grid.times();
    let h: Vec<f64> = times.par_iter().map(|&t| cache.h(t)).collect::<Result<_>>()?;
    let alpha: Vec<f64> = times.par_iter().map(|&t| cache.alpha(t)).collect::<Result<_>>()?;
    let samples = search_samples(cache, grid.t_end());
    let rows: Vec<(Vec<f64>, Vec<f64>)> = parities
        .par_iter()
        .map(|&p0| {
            check_parity(p0)?;
            let currents = times
                .iter()
                .zip(h.iter().zip(&alpha))
                .map(|(&t, (&h, &a))| current(gm, (-gm * t).exp() * p0 + a, h))
                .collect();
            let crossings = scan_roots(|t| Ok(p0 - extremum_initial_condition(cache, t)?), &samples)?;
            Ok((currents, crossings))
        })
        .collect::<Result<_>>()?;
    let (currents, crossings) = rows.into_iter().unzip();
    Ok(CurrentFamily {
        parities: parities.to_vec(),
        times,
        currents,
        crossings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pp_minimum_matches_sphere_scan() {
        for &(t, g) in &[(0.3, 0.4), (1.2, -0.9), (0.5, 1.2), (2.0, -1.4)] {
            let closed = pp_minimum_from_g(1.0, t, g);
            let u: f64 = (-t as f64).exp();
            let brute = (0..=4000)
                .map(|k| {
                    let p0 = -1.0 + k as f64 / 2000.0;
                    let b = u * p0 + (1.0 - u) * g;
                    1.0 - b * b - u * (1.0 - p0 * p0)
                })
                .fold(f64::INFINITY, f64::min);
            assert!((closed - brute).abs() < 1e-6, "t={t} g={g}: {closed} vs {brute}");
        }
        assert_eq!(pp_minimum_from_g(1.0, 0.0, 0.7), 0.0);
    }

    #[test]
    fn zero_detuning_is_semigroup() {
        let p = ModelParams::dimensionless(0.0, 1.0).unwrap();
        let cache = KernelCache::new(&p, 5.0).unwrap();
        let r = classify_divisibility(&cache, 5.0).unwrap();
        assert_eq!(r.regime, Regime::Semigroup);
        assert!(r.forbidden_windows().is_empty());
    }

    #[test]
    fn forbidden_windows_complement_cp_windows() {
        let r = DivisibilityReport {
            regime: Regime::NonCpDivisible,
            t_max: 3.0,
            cp_windows: vec![(0.0, 1.0), (1.5, 2.0)],
            h_max: 1.1,
            witnesses: vec![1.2, 2.5],
        };
        assert_eq!(r.forbidden_windows(), vec![(1.0, 1.5), (2.0, 3.0)]);
    }

    #[test]
    fn first_return_interpolates() {
        let times = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(first_return(&times, &[0.5, 0.2, 0.4, 0.8]), Some(2.25));
        assert_eq!(first_return(&times, &[0.5, 0.4, 0.3, 0.2]), None);
    }

    #[test]
    fn parity_family_spacing() {
        let f = parity_family(41);
        assert_eq!(f.len(), 41);
        assert_eq!(f[0], -1.0);
        assert_eq!(f[40], 1.0);
        assert!((f[1] - f[0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn empty_bins_cover_gaps() {
        let fam = CurrentFamily {
            parities: vec![0.0],
            times: vec![0.0, 0.5, 1.0],
            currents: vec![vec![0.0; 3]],
            crossings: vec![vec![0.1, 1.0]],
        };
        assert_eq!(fam.empty_bins(0.25), vec![(0.25, 0.5), (0.5, 0.75)]);
    }
}
