//! Output columns and CSV rendering.

use std::fmt::Write as _;
use std::str::FromStr;

use reslevel_core::choi_kraus::choi_eigenvalues_closed;
use reslevel_core::diagnostics::{current, extremum_initial_condition};
use reslevel_core::env_info::info_measures;
use reslevel_core::kernels::{gamma_kernel, KernelCache};
use reslevel_core::liouville::evolve_state_from_g;
use reslevel_core::{DensityMatrix, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Column {
    T,
    Gamma,
    H,
    G,
    Parity,
    Occupation,
    Current,
    GDivisor,
    SSys,
    SEnv,
    SEnvPlus,
    SEnvMinus,
    Ic,
    Mismatch,
    Lambda0Plus,
    Lambda0Minus,
    Lambda1Plus,
    Lambda1Minus,
    /// Initial parity for which `t` is a stationary point of the parity.
    ExtremumParity,
}

impl Column {
    pub const ALL: [Column; 19] = [
        Column::T,
        Column::Gamma,
        Column::H,
        Column::G,
        Column::Parity,
        Column::Occupation,
        Column::Current,
        Column::GDivisor,
        Column::SSys,
        Column::SEnv,
        Column::SEnvPlus,
        Column::SEnvMinus,
        Column::Ic,
        Column::Mismatch,
        Column::Lambda0Plus,
        Column::Lambda0Minus,
        Column::Lambda1Plus,
        Column::Lambda1Minus,
        Column::ExtremumParity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Column::T => "t",
            Column::Gamma => "gamma",
            Column::H => "h",
            Column::G => "g",
            Column::Parity => "parity",
            Column::Occupation => "occupation",
            Column::Current => "current",
            Column::GDivisor => "g_divisor",
            Column::SSys => "S_sys",
            Column::SEnv => "S_env",
            Column::SEnvPlus => "S_env_plus",
            Column::SEnvMinus => "S_env_minus",
            Column::Ic => "I_c",
            Column::Mismatch => "mismatch",
            Column::Lambda0Plus => "lambda0_plus",
            Column::Lambda0Minus => "lambda0_minus",
            Column::Lambda1Plus => "lambda1_plus",
            Column::Lambda1Minus => "lambda1_minus",
            Column::ExtremumParity => "extremum_parity",
        }
    }
}

impl FromStr for Column {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Column::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown column `{s}`"))
    }
}

/// Every column at one time.
#[derive(Debug, Clone, Copy)]
pub struct Sample([f64; 19]);

impl Sample {
    pub fn get(&self, c: Column) -> f64 {
        self.0[c as usize]
    }
}

/// Evaluates all columns at `t`. The environment factor entropies are NaN
/// when the initial state carries a coherence.
pub fn sample(cache: &KernelCache, rho0: &DensityMatrix, divisor_ratio: f64, t: f64) -> Result<Sample> {
    let p = cache.params();
    let gm = p.gamma();
    let g = cache.g(t)?;
    let h = cache.h(t)?;
    let rho = evolve_state_from_g(p, t, rho0, g)?;
    let info = info_measures(p, t, rho0, g)?;
    let [plus, minus] = info.s_env_modes.unwrap_or([f64::NAN; 2]);
    let (l0, l1) = choi_eigenvalues_closed(gm, t, g);
    let extremum = if t > 0.0 { extremum_initial_condition(cache, t)? } else { 0.0 };
    Ok(Sample([
        t,
        gamma_kernel(p, t),
        h,
        g,
        rho.parity(),
        rho.occupation(),
        current(gm, rho.parity(), h),
        cache.g_divisor(t, divisor_ratio * t)?,
        info.s_sys,
        info.s_env,
        plus,
        minus,
        info.coherent_information,
        info.mismatch,
        l0[0],
        l0[1],
        l1[0],
        l1[1],
        extremum,
    ]))
}

/// 17 significant digits.
pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with `#` metadata lines, a header and one line per row.
pub fn render(meta: &[String], header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for m in meta {
        let _ = writeln!(out, "# {m}");
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| number(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
