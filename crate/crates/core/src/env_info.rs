//! State of the effective environment generated by the Kraus decomposition
//! and the entropic information measures derived from it.
//!
//! For Kraus operators `K_m` the environment state is
//! `rho_E[m, m'] = Tr(K_m rho0 K_m'^dag)`; labels are ordered
//! `(0,+), (0,-), (1,+), (1,-)`. Entropies are in bits.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use num_complex::Complex64;

use crate::choi_kraus::{kraus_closed_form, ClosedFormKraus};
use crate::error::{Error, Result};
use crate::liouville::evolve_state_from_g;
use crate::model::{DensityMatrix, ModelParams};

type C = Complex64;

/// Negative eigenvalues above this are treated as rounding and clamped.
pub const ENTROPY_CLAMP: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvState(pub Matrix4<C>);

impl EnvState {
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (self.0 + self.0.adjoint()) * C::new(0.5, 0.0);
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn entropy(&self) -> Result<f64> {
        entropy_bits(&self.eigenvalues())
    }

    /// Block `(k, k')` of the environment state, `k, k' in {0, 1}`.
    pub fn block(&self, k: usize, k_prime: usize) -> Matrix2<C> {
        self.0.fixed_view::<2, 2>(2 * k, 2 * k_prime).into_owned()
    }
}

pub fn env_state_from_kraus(ops: &[Matrix2<C>; 4], rho0: &DensityMatrix) -> EnvState {
    let rho = rho0.to_matrix();
    EnvState(Matrix4::from_fn(|m, n| (ops[m] * rho * ops[n].adjoint()).trace()))
}

/// Environment state at time `t` for a given `g = g(t)`, from the
/// closed-form Kraus operators.
pub fn env_state(p: &ModelParams, t: f64, rho0: &DensityMatrix, g: f64) -> Result<EnvState> {
    let k = kraus_closed_form(p, t, g)?;
    Ok(env_state_from_kraus(&k.operators(), rho0))
}

/// Environment blocks of a diagonal initial state written out explicitly:
/// the even block
/// `(lambda0_eta [1 + eta p0 (r - 1/r)/(r + 1/r)] delta - p0 2 sqrt(lambda0_+ lambda0_-)/(r + 1/r) (1 - delta)) / 2`
/// and the diagonal odd block `lambda1_eta (1 + eta p0) / 2`.
pub fn env_state_fermionic_closed(k: &ClosedFormKraus, parity0: f64) -> EnvState {
    let r = k.r;
    let s = r + 1.0 / r;
    let asym = (r - 1.0 / r) / s;
    let off = -parity0 * (k.lambda0[0] * k.lambda0[1]).sqrt() / s;
    let mut m = Matrix4::zeros();
    m[(0, 0)] = C::new(0.5 * k.lambda0[0] * (1.0 + parity0 * asym), 0.0);
    m[(1, 1)] = C::new(0.5 * k.lambda0[1] * (1.0 - parity0 * asym), 0.0);
    m[(0, 1)] = C::new(off, 0.0);
    m[(1, 0)] = C::new(off, 0.0);
    m[(2, 2)] = C::new(0.5 * k.lambda1[0] * (1.0 + parity0), 0.0);
    m[(3, 3)] = C::new(0.5 * k.lambda1[1] * (1.0 - parity0), 0.0);
    EnvState(m)
}

/// Cross block `rho_E[(0,eta'), (1,eta)] = Tr(K0_eta' rho0 K1_eta^dag)` for an
/// initial state with coherence `field = <d>`:
/// `sqrt(lambda0_eta' lambda1_eta / (r + 1/r))` times
/// `r^{-eta'/2} e^{-i epsilon t} <d>` for `eta = +` and `eta' r^{eta'/2} <d>^*` for `eta = -`.
pub fn env_cross_block_closed(k: &ClosedFormKraus, epsilon_level: f64, t: f64, field: C) -> Matrix2<C> {
    let s = k.r + 1.0 / k.r;
    let rot = C::new(0.0, -epsilon_level * t).exp();
    Matrix2::from_fn(|row, col| {
        let eta_p = if row == 0 { 1.0 } else { -1.0 };
        let amp = (k.lambda0[row] * k.lambda1[col] / s).sqrt();
        if col == 0 {
            rot * field * (amp * k.r.powf(-0.5 * eta_p))
        } else {
            field.conj() * (amp * eta_p * k.r.powf(0.5 * eta_p))
        }
    })
}

/// Spectra of the two factors of the environment state for a diagonal
/// initial state, indexed `[lambda][eta]` with `lambda, eta = +, -`:
/// `(1 + eta (sqrt([c + p0 g]^2 - (1 - g^2)(1 - p0^2)) + lambda (p0 - g)) / (c + 1)) / 2`,
/// `c = coth(Gamma t / 2)`.
pub fn env_mode_spectra(gamma: f64, t: f64, parity0: f64, g: f64) -> [[f64; 2]; 2] {
    // Multiply numerator and denominator by tanh(Gamma t/2) to stay finite at t = 0.
    let tau = (0.5 * gamma * t).tanh();
    let a = 1.0 + parity0 * g * tau;
    let root = (a * a - tau * tau * (1.0 - g * g) * (1.0 - parity0 * parity0)).max(0.0).sqrt();
    let mut out = [[0.0; 2]; 2];
    for (li, lambda) in [1.0, -1.0].iter().enumerate() {
        let x = (root + lambda * tau * (parity0 - g)) / (1.0 + tau);
        out[li] = [0.5 * (1.0 + x), 0.5 * (1.0 - x)];
    }
    out
}

/// Spectra the two environment factors approach at long times: the factor
/// `sigma = sign(p0 + g_inf)` carries the initial state and the other one
/// the stationary state.
pub fn env_mode_spectra_limit(parity0: f64, g_inf: f64) -> [[f64; 2]; 2] {
    let sigma = if parity0 + g_inf >= 0.0 { 1.0 } else { -1.0 };
    let initial = [0.5 * (1.0 + sigma * parity0), 0.5 * (1.0 - sigma * parity0)];
    let stationary = [0.5 * (1.0 + sigma * g_inf), 0.5 * (1.0 - sigma * g_inf)];
    if sigma > 0.0 {
        [initial, stationary]
    } else {
        [stationary, initial]
    }
}

/// Environment state for a diagonal initial state assembled from factor
/// spectra: the even block has eigenvalues `L+_eta L-_eta` and the odd block
/// is `diag(L+_+ L-_-, L+_- L-_+)`.
pub fn env_blocks_from_spectra(spectra: &[[f64; 2]; 2]) -> ([f64; 2], [f64; 2]) {
    let [plus, minus] = spectra;
    (
        [plus[0] * minus[0], plus[1] * minus[1]],
        [plus[0] * minus[1], plus[1] * minus[0]],
    )
}

/// Largest deviation between a diagonal-initial-state environment and the
/// block structure implied by `spectra`: the even-block eigenvalues (as
/// sets), the odd block entries and the vanishing cross blocks.
pub fn env_deviation_from_spectra(env: &EnvState, spectra: &[[f64; 2]; 2]) -> f64 {
    let (even, odd) = env_blocks_from_spectra(spectra);
    let even_block = env.block(0, 0);
    let h = (even_block + even_block.adjoint()) * C::new(0.5, 0.0);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    let mut expected = even.to_vec();
    expected.sort_by(f64::total_cmp);
    let mut dev: f64 = ev
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let odd_block = env.block(1, 1);
    dev = dev.max((odd_block[(0, 0)] - C::new(odd[0], 0.0)).norm());
    dev = dev.max((odd_block[(1, 1)] - C::new(odd[1], 0.0)).norm());
    dev = dev.max(odd_block[(0, 1)].norm()).max(odd_block[(1, 0)].norm());
    let cross = env.block(0, 1);
    dev.max(cross.iter().fold(0.0, |m, z| m.max(z.norm())))
}

/// Von Neumann entropy in bits of a spectrum. Eigenvalues in
/// `[-1e-12, 0)` are clamped to zero; more negative values are an error.
pub fn entropy_bits(eigenvalues: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &x in eigenvalues {
        if x < ENTROPY_CLAMP {
            return Err(Error::NotPositive(format!("eigenvalue {x:e} in entropy")));
        }
        if x > 0.0 {
            s -= x * x.log2();
        }
    }
    Ok(s)
}

pub fn state_entropy(rho: &DensityMatrix) -> Result<f64> {
    entropy_bits(&rho.eigenvalues())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoMeasures {
    /// Entropy of the initial state.
    pub s_initial: f64,
    /// Entropy of the evolved system state.
    pub s_sys: f64,
    /// Entropy of the effective environment.
    pub s_env: f64,
    /// Entropies of the two environment factors (diagonal initial states only).
    pub s_env_modes: Option<[f64; 2]>,
    /// `S_sys - S_env`.
    pub coherent_information: f64,
    /// `S(rho0) - I_c`, between 0 and `2 S(rho0)`.
    pub mismatch: f64,
}

/// Information measures at time `t` for a given `g = g(t)`.
pub fn info_measures(p: &ModelParams, t: f64, rho0: &DensityMatrix, g: f64) -> Result<InfoMeasures> {
    let s_initial = state_entropy(rho0)?;
    let rho_t = evolve_state_from_g(p, t, rho0, g)?;
    let s_sys = state_entropy(&rho_t)?;
    let (s_env, s_env_modes) = if rho0.field().norm() == 0.0 {
        let spectra = env_mode_spectra(p.gamma(), t, rho0.parity(), g);
        let plus = entropy_bits(&spectra[0])?;
        let minus = entropy_bits(&spectra[1])?;
        (plus + minus, Some([plus, minus]))
    } else {
        (env_state(p, t, rho0, g)?.entropy()?, None)
    };
    let coherent_information = s_sys - s_env;
    Ok(InfoMeasures {
        s_initial,
        s_sys,
        s_env,
        s_env_modes,
        coherent_information,
        mismatch: s_initial - coherent_information,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(1.1, 0.1, 1.0, 0.3).unwrap()
    }

    #[test]
    fn entropy_of_simple_spectra() {
        assert!((entropy_bits(&[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(entropy_bits(&[1.0, 0.0, -1e-13]).unwrap(), 0.0);
        assert!(entropy_bits(&[1.1, -0.1]).is_err());
    }

    #[test]
    fn environment_is_normalized() {
        let p = params();
        let rho0 = DensityMatrix::new(0.2, C::new(0.2, -0.1)).unwrap();
        for (t, g) in [(0.0, 0.0), (0.5, 0.3), (4.0, 0.8)] {
            let e = env_state(&p, t, &rho0, g).unwrap();
            assert!((e.trace() - 1.0).abs() < 1e-14);
            assert!(e.eigenvalues()[0] > -1e-14);
        }
    }

    #[test]
    fn explicit_fermionic_blocks_match_kraus_evaluation() {
        let p = params();
        for (t, g, p0) in [(0.3, 0.4, 0.5), (2.0, -0.7, -0.2), (9.0, 0.9, 1.0)] {
            let k = kraus_closed_form(&p, t, g).unwrap();
            let rho0 = DensityMatrix::fermionic(p0).unwrap();
            let numeric = env_state_from_kraus(&k.operators(), &rho0);
            let closed = env_state_fermionic_closed(&k, p0);
            let d = (numeric.0 - closed.0).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!(d < 1e-13, "t = {t}: {d}");
        }
    }

    #[test]
    fn factor_spectra_reproduce_environment() {
        let p = params();
        for (t, g, p0) in [(0.3, 0.4, 0.5), (2.0, -0.7, -0.2), (9.0, 0.9, 0.1)] {
            let e = env_state(&p, t, &DensityMatrix::fermionic(p0).unwrap(), g).unwrap();
            let spectra = env_mode_spectra(p.gamma(), t, p0, g);
            assert!(env_deviation_from_spectra(&e, &spectra) < 1e-13);
        }
    }

    #[test]
    fn cross_block_matches_kraus_evaluation() {
        let p = params();
        let rho0 = DensityMatrix::new(0.1, C::new(0.2, 0.15)).unwrap();
        for (t, g) in [(0.7, 0.4), (3.0, -0.6)] {
            let k = kraus_closed_form(&p, t, g).unwrap();
            let e = env_state_from_kraus(&k.operators(), &rho0);
            let closed = env_cross_block_closed(&k, p.epsilon_level(), t, rho0.field());
            let d = (e.block(0, 1) - closed).iter().fold(0.0f64, |m, z| m.max(z.norm()));
            assert!(d < 1e-14, "t = {t}: {d}");
        }
    }

    #[test]
    fn pure_environment_at_start() {
        let s = env_mode_spectra(1.0, 0.0, 0.3, 0.7);
        assert_eq!(s, [[1.0, 0.0], [1.0, 0.0]]);
    }
}
