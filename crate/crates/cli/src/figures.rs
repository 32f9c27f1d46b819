//! Data behind the figures, one CSV per id.

use std::f64::consts::PI;

use rayon::prelude::*;
use reslevel_core::diagnostics::{
    classify_divisibility, current_family, extremum_initial_condition, parity_family, plateau_points,
    reentrance_time_within, FAMILY_SIZE,
};
use reslevel_core::env_info::info_measures;
use reslevel_core::kernels::{g_stationary, gamma_kernel, KernelCache};
use reslevel_core::liouville::evolve_state_from_g;
use reslevel_core::{DensityMatrix, ModelParams, Result, TimeGrid};
use reslevel_validation::figure_params;

use crate::linspace;
use crate::table::render;

pub const FIGURE_IDS: [&str; 10] = ["3", "4", "5", "6", "7a", "7b", "8", "9", "11", "12"];

/// Initial parities of the reentrance families.
const REENTRANCE_PARITIES: [f64; 7] = [-1.0, -0.5, 0.0, 0.5, 0.8, 0.9, 1.0];

const ENTROPY_PARITIES: [f64; 3] = [-0.5, 0.0, 0.5];

/// Temperatures `pi T / (Gamma/2)` of the extremum-condition panels.
const EXTREMUM_TEMPERATURES: [f64; 3] = [0.01, 1.0, 1.5];

fn describe(p: &ModelParams) -> String {
    format!(
        "parameters: epsilon_level {} mu {} gamma_coupling {} temperature {}",
        p.epsilon_level(),
        p.mu(),
        p.gamma(),
        p.temperature()
    )
}

fn header(id: &str, p: &ModelParams) -> Vec<String> {
    vec![format!("reslevel figure {id}"), describe(p)]
}

fn kernels(p: &ModelParams) -> Result<String> {
    let t_end = 3.0;
    let cache = KernelCache::new(p, t_end)?;
    let rows = linspace(0.0, t_end, 1501)
        .into_par_iter()
        .map(|t| Ok(vec![t, gamma_kernel(p, t), cache.h(t)?, cache.g(t)?]))
        .collect::<Result<Vec<_>>>()?;
    let h_max = rows.iter().map(|r| r[2]).fold(f64::NEG_INFINITY, f64::max);
    let mut meta = header("3", p);
    meta.push(format!("max h: {h_max}"));
    Ok(render(&meta, &["t", "gamma", "h", "g"], &rows))
}

fn divisor_grid(p: &ModelParams) -> Result<String> {
    let t_end = 3.0;
    let cache = KernelCache::new(p, t_end)?;
    let times = linspace(0.0, t_end, 301);
    let rows = linspace(0.0, 1.0, 11)
        .into_par_iter()
        .map(|ratio| {
            times
                .iter()
                .map(|&t| Ok(vec![ratio, t, cache.g_divisor(t, ratio * t)?]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(render(&header("4", p), &["ratio", "t", "g_divisor"], &rows.concat()))
}

/// Parity families with the Markov-only comparison `g(t) -> g(infinity)`.
fn reentrance(id: &str, p: &ModelParams) -> Result<String> {
    let t_end = 6.0;
    let cache = KernelCache::new(p, t_end)?;
    let g_inf = g_stationary(p)?;
    let times = linspace(0.0, t_end, 601);
    let mut meta = header(id, p);
    meta.push(format!("g(infinity): {g_inf}"));
    let mut rows = Vec::new();
    for p0 in REENTRANCE_PARITIES {
        let rho0 = DensityMatrix::fermionic(p0)?;
        let t_r = reentrance_time_within(&cache, p0, t_end)?;
        meta.push(format!(
            "reentrance of parity {p0}: {}",
            t_r.map_or("none".to_string(), |t| t.to_string())
        ));
        let block = times
            .par_iter()
            .map(|&t| {
                let exact = evolve_state_from_g(p, t, &rho0, cache.g(t)?)?.parity();
                let markov = evolve_state_from_g(p, t, &rho0, g_inf)?.parity();
                Ok(vec![p0, t, exact, markov])
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(block);
    }
    Ok(render(&meta, &["parity0", "t", "parity", "parity_markov"], &rows))
}

fn currents(id: &str, p: &ModelParams) -> Result<String> {
    let t_end = 5.0;
    let cache = KernelCache::new(p, t_end)?;
    let grid = TimeGrid::new(t_end, 500)?;
    let parities = parity_family(FAMILY_SIZE);
    let family = current_family(&cache, &parities, &grid)?;
    let report = classify_divisibility(&cache, t_end)?;
    let mut meta = header(id, p);
    meta.push(format!("regime: {}", report.regime.name()));
    meta.push(format!("windows with |h| > 1: {:?}", report.forbidden_windows()));
    meta.push(format!("current zero-crossings: {}", family.all_crossings().len()));
    let mut rows = Vec::new();
    for (p0, currents) in family.parities.iter().zip(&family.currents) {
        rows.extend(family.times.iter().zip(currents).map(|(&t, &i)| vec![*p0, t, i]));
    }
    Ok(render(&meta, &["parity0", "t", "current"], &rows))
}

fn single(id: &str, p: &ModelParams, p0: f64, t_end: f64, mut meta: Vec<String>) -> Result<String> {
    let cache = KernelCache::new(p, t_end)?;
    let rho0 = DensityMatrix::fermionic(p0)?;
    meta.push(format!("initial parity: {p0}"));
    let rows = linspace(0.0, t_end, 601)
        .into_par_iter()
        .map(|t| {
            let g = cache.g(t)?;
            Ok(vec![t, evolve_state_from_g(p, t, &rho0, g)?.parity(), cache.h(t)?, g])
        })
        .collect::<Result<Vec<_>>>()?;
    let mut full = header(id, p);
    full.extend(meta);
    Ok(render(&full, &["t", "parity", "h", "g"], &rows))
}

/// Extremum at the second kernel zero, where the curvature vanishes.
fn plateau(p: &ModelParams) -> Result<String> {
    let cache = KernelCache::new(p, 6.0)?;
    let t_p = plateau_points(&cache, 6.0, None)?
        .into_iter()
        .find(|q| q.ell == 2)
        .map_or(2.0 * PI / p.detuning().abs(), |q| q.t_p);
    let p0 = extremum_initial_condition(&cache, t_p)?;
    let curvature = plateau_points(&cache, 6.0, Some(p0))?
        .into_iter()
        .find(|q| q.ell == 2)
        .and_then(|q| q.curvature);
    single("8", p, p0, 6.0, vec![format!("plateau time: {t_p}"), format!("curvature: {curvature:?}")])
}

/// Reentrance that touches its initial value at the second kernel zero.
fn touching(p: &ModelParams) -> Result<String> {
    let cache = KernelCache::new(p, 6.0)?;
    let t_touch = 2.0 * PI / p.detuning().abs();
    let p0 = cache.g(t_touch)?;
    let gap = cache.h(t_touch)? - p0;
    single("9", p, p0, 6.0, vec![format!("touching time: {t_touch}"), format!("h - g there: {gap:e}")])
}

/// Extremum condition at `epsilon = pi Gamma` for three temperatures.
fn extremum_condition() -> Result<String> {
    let t_end = 10.0;
    let times = linspace(0.01, t_end, 1000);
    let blocks = EXTREMUM_TEMPERATURES
        .par_iter()
        .map(|&y| {
            let p = ModelParams::dimensionless(2.0, y)?;
            let cache = KernelCache::new(&p, t_end)?;
            times
                .iter()
                .map(|&t| Ok(vec![y, t, extremum_initial_condition(&cache, t)?]))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let meta = vec![
        "reslevel figure 11".to_string(),
        "parameters: epsilon_level pi, mu 0, gamma_coupling 1, temperature from pi T / (gamma/2)".to_string(),
    ];
    Ok(render(&meta, &["pi_t_over_half_gamma", "t", "extremum_parity"], &blocks.concat()))
}

fn entropies(p: &ModelParams) -> Result<String> {
    let t_end = 6.0;
    let cache = KernelCache::new(p, t_end)?;
    let g_inf = g_stationary(p)?;
    let times = linspace(0.0, t_end, 601);
    let mut rows = Vec::new();
    for p0 in ENTROPY_PARITIES {
        let rho0 = DensityMatrix::fermionic(p0)?;
        let block = times
            .par_iter()
            .map(|&t| {
                let m = info_measures(p, t, &rho0, cache.g(t)?)?;
                let markov = info_measures(p, t, &rho0, g_inf)?;
                let [plus, minus] = m.s_env_modes.unwrap_or([f64::NAN; 2]);
                Ok(vec![
                    p0,
                    t,
                    m.s_sys,
                    m.s_env,
                    plus,
                    minus,
                    m.coherent_information,
                    m.mismatch,
                    markov.s_sys,
                    markov.mismatch,
                ])
            })
            .collect::<Result<Vec<_>>>()?;
        rows.extend(block);
    }
    let mut meta = header("12", p);
    meta.push("entropies in bits".to_string());
    Ok(render(
        &meta,
        &[
            "parity0",
            "t",
            "S_sys",
            "S_env",
            "S_env_plus",
            "S_env_minus",
            "I_c",
            "mismatch",
            "S_sys_markov",
            "mismatch_markov",
        ],
        &rows,
    ))
}

/// CSV for figure `id`, or `None` for an unknown id.
pub fn figure(id: &str) -> Option<Result<String>> {
    if id == "11" {
        return Some(extremum_condition());
    }
    let p = figure_params(id)?;
    Some(match id {
        "3" => kernels(&p),
        "4" => divisor_grid(&p),
        "5" | "6" => reentrance(id, &p),
        "7a" | "7b" => currents(id, &p),
        "8" => plateau(&p),
        "9" => touching(&p),
        "12" => entropies(&p),
        _ => return None,
    })
}
