//! Superoperators on the level's operator space.
//!
//! Operators are expanded in the orthonormal basis
//! `B = (1/sqrt2, d^dag, d, (-1)^n/sqrt2)` with the Hilbert–Schmidt product
//! `<A|B> = Tr A^dag B`; a superoperator `S` is stored as the matrix
//! `S_ij = <B_i|S(B_j)>`. Two-by-two matrices use the ordering
//! (occupied, empty), so `d^dag = |1><0|` sits at entry `(0, 1)`.

use nalgebra::{Matrix2, Matrix4, RowVector4, Vector4};
use num_complex::Complex64;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{Error, Result};
use crate::kernels::{g_stationary, gamma_kernel, KernelCache};
use crate::model::{DensityMatrix, ModelParams};
use crate::special_functions::{digamma, fermi_occupation};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);
const I: C = C::new(0.0, 1.0);

/// Propagator inversion is refused beyond this value of `Gamma t`.
pub const MAX_INVERSION_DECAY: f64 = 60.0;

/// The two signs `eta = +1, -1` labelling `d_+ = d^dag` and `d_- = d`.
pub const SIGNS: [f64; 2] = [1.0, -1.0];

pub fn creation() -> Matrix2<C> {
    Matrix2::new(ZERO, ONE, ZERO, ZERO)
}

pub fn annihilation() -> Matrix2<C> {
    Matrix2::new(ZERO, ZERO, ONE, ZERO)
}

/// `d_eta`: creation for `eta = +1`, annihilation for `eta = -1`.
pub fn ladder(eta: f64) -> Matrix2<C> {
    if eta > 0.0 {
        creation()
    } else {
        annihilation()
    }
}

pub fn number_operator() -> Matrix2<C> {
    Matrix2::new(ONE, ZERO, ZERO, ZERO)
}

/// `(-1)^n = 1 - 2n`.
pub fn parity_operator() -> Matrix2<C> {
    Matrix2::new(-ONE, ZERO, ZERO, ONE)
}

pub fn basis_operator(i: usize) -> Matrix2<C> {
    match i {
        0 => Matrix2::identity() * C::new(FRAC_1_SQRT_2, 0.0),
        1 => creation(),
        2 => annihilation(),
        3 => parity_operator() * C::new(FRAC_1_SQRT_2, 0.0),
        _ => panic!("operator basis has four elements"),
    }
}

/// Coordinates `c_i = Tr(B_i^dag X)`.
pub fn coords_of(x: &Matrix2<C>) -> Vector4<C> {
    Vector4::from_fn(|i, _| (basis_operator(i).adjoint() * x).trace())
}

pub fn operator_from_coords(c: &Vector4<C>) -> Matrix2<C> {
    (0..4).fold(Matrix2::zeros(), |acc, i| acc + basis_operator(i) * c[i])
}

/// Row vector representing the functional `X -> Tr(A^dag X)`.
pub fn bra_of(a: &Matrix2<C>) -> RowVector4<C> {
    coords_of(a).adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperOpKind {
    Propagator,
    Divisor,
    Generator,
    Kernel,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperOp {
    pub matrix: Matrix4<C>,
    pub kind: SuperOpKind,
}

impl SuperOp {
    pub fn new(matrix: Matrix4<C>, kind: SuperOpKind) -> Self {
        Self { matrix, kind }
    }

    pub fn identity() -> Self {
        Self::new(Matrix4::identity(), SuperOpKind::Propagator)
    }

    pub fn zero(kind: SuperOpKind) -> Self {
        Self::new(Matrix4::zeros(), kind)
    }

    /// Superoperator matrix of the linear map `f`.
    pub fn from_map<F: Fn(&Matrix2<C>) -> Matrix2<C>>(f: F, kind: SuperOpKind) -> Self {
        let mut m = Matrix4::zeros();
        for j in 0..4 {
            let image = coords_of(&f(&basis_operator(j)));
            m.set_column(j, &image);
        }
        Self::new(m, kind)
    }

    pub fn apply(&self, x: &Matrix2<C>) -> Matrix2<C> {
        operator_from_coords(&(self.matrix * coords_of(x)))
    }

    pub fn apply_coords(&self, c: &Vector4<C>) -> Vector4<C> {
        self.matrix * c
    }

    pub fn apply_state(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::from_coords(&(self.matrix * rho.coords()))
    }

    /// `self` after `other`.
    pub fn compose(&self, other: &SuperOp) -> SuperOp {
        SuperOp::new(self.matrix * other.matrix, self.kind)
    }

    pub fn scale(&self, factor: C) -> SuperOp {
        SuperOp::new(self.matrix * factor, self.kind)
    }

    pub fn add(&self, other: &SuperOp) -> SuperOp {
        SuperOp::new(self.matrix + other.matrix, self.kind)
    }

    pub fn sub(&self, other: &SuperOp) -> SuperOp {
        SuperOp::new(self.matrix - other.matrix, self.kind)
    }

    pub fn commutator(&self, other: &SuperOp) -> SuperOp {
        SuperOp::new(
            self.matrix * other.matrix - other.matrix * self.matrix,
            SuperOpKind::General,
        )
    }

    pub fn with_kind(mut self, kind: SuperOpKind) -> Self {
        self.kind = kind;
        self
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &SuperOp) -> f64 {
        (self.matrix - other.matrix).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    pub fn max_abs(&self) -> f64 {
        self.matrix.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Deviation from trace preservation, `max_j |<1|S(B_j)> - <1|B_j>|`.
    pub fn trace_defect(&self) -> f64 {
        let target = RowVector4::new(ONE, ZERO, ZERO, ZERO);
        (self.matrix.row(0) - target).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// Exponential via the eigendecomposition.
    ///
    /// All exponents built in this crate are lower triangular in the operator
    /// basis, so the spectrum is the diagonal and the eigenvectors follow by
    /// forward substitution. Other matrices, and defective or badly
    /// conditioned ones, use scaling and squaring of the Taylor series.
    pub fn exp(&self) -> SuperOp {
        let m = &self.matrix;
        let kind = match self.kind {
            SuperOpKind::Generator => SuperOpKind::Propagator,
            k => k,
        };
        if let Some(e) = exp_lower_triangular(m) {
            return SuperOp::new(e, kind);
        }
        SuperOp::new(exp_taylor(m), kind)
    }

    pub fn inverse(&self) -> Result<SuperOp> {
        self.matrix
            .try_inverse()
            .map(|m| SuperOp::new(m, self.kind))
            .ok_or_else(|| Error::IllConditioned("superoperator is singular".into()))
    }
}

fn is_lower_triangular(m: &Matrix4<C>) -> bool {
    (0..4).all(|i| (i + 1..4).all(|j| m[(i, j)] == ZERO))
}

fn exp_lower_triangular(m: &Matrix4<C>) -> Option<Matrix4<C>> {
    if !is_lower_triangular(m) {
        return None;
    }
    let scale = m.iter().fold(1.0f64, |s, z| s.max(z.norm()));
    let degenerate = 1e-12 * scale;
    let mut v = Matrix4::<C>::zeros();
    for j in 0..4 {
        let lambda = m[(j, j)];
        v[(j, j)] = ONE;
        for i in j + 1..4 {
            let num: C = (j..i).map(|k| m[(i, k)] * v[(k, j)]).sum();
            let gap = lambda - m[(i, i)];
            if gap.norm() <= degenerate {
                if num.norm() <= degenerate {
                    v[(i, j)] = ZERO;
                } else {
                    return None;
                }
            } else {
                v[(i, j)] = num / gap;
            }
        }
    }
    let v_inv = v.try_inverse()?;
    let cond = v.norm() * v_inv.norm();
    if !(cond < 1e8) {
        return None;
    }
    let d = Matrix4::from_diagonal(&Vector4::from_fn(|i, _| m[(i, i)].exp()));
    Some(v * d * v_inv)
}

fn exp_taylor(m: &Matrix4<C>) -> Matrix4<C> {
    let norm: f64 = (0..4)
        .map(|j| (0..4).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let a = m * C::new(0.5f64.powi(squarings), 0.0);
    let mut term = Matrix4::<C>::identity();
    let mut sum = term;
    for k in 1..=20 {
        term = term * a / C::new(k as f64, 0.0);
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// `L = [epsilon_level d^dag d, .]`; the coherent generator is `-i L`.
pub fn hamiltonian_superop(p: &ModelParams) -> SuperOp {
    let h = number_operator() * C::new(p.epsilon_level(), 0.0);
    SuperOp::from_map(|x| h * x - x * h, SuperOpKind::Generator)
}

/// `-i L`.
pub fn coherent_generator(p: &ModelParams) -> SuperOp {
    hamiltonian_superop(p).scale(-I)
}

/// `L_eta = d_eta . d_etabar - {d_etabar d_eta, .}/2`.
pub fn dissipator(eta: f64) -> SuperOp {
    let jump = ladder(eta);
    let jump_dag = jump.adjoint();
    let rate = jump_dag * jump;
    SuperOp::from_map(
        |x| jump * x * jump_dag - (rate * x + x * rate) * C::new(0.5, 0.0),
        SuperOpKind::Generator,
    )
}

/// `sum_eta c_eta L_eta`.
fn dissipator_combination(c_plus: f64, c_minus: f64) -> SuperOp {
    dissipator(1.0)
        .scale(C::new(c_plus, 0.0))
        .add(&dissipator(-1.0).scale(C::new(c_minus, 0.0)))
}

fn diagonal_part(p: &ModelParams, dt: f64) -> [C; 4] {
    let decay = -0.5 * p.gamma() * dt;
    let phase = p.epsilon_level() * dt;
    [
        ONE,
        C::new(decay, -phase).exp(),
        C::new(decay, phase).exp(),
        C::new((-p.gamma() * dt).exp(), 0.0),
    ]
}

fn structured(p: &ModelParams, dt: f64, g: f64, kind: SuperOpKind) -> SuperOp {
    let d = diagonal_part(p, dt);
    let mut m = Matrix4::from_diagonal(&Vector4::new(d[0], d[1], d[2], d[3]));
    m[(3, 0)] = C::new(-(-p.gamma() * dt).exp_m1() * g, 0.0);
    SuperOp::new(m, kind)
}

/// Closed-form propagator `Pi(t)` for a given value `g = g(t)`: the
/// coherences decay as `e^{(-/+ i epsilon - Gamma/2) t}` and the parity
/// relaxes as `p(t) = e^{-Gamma t} p(0) + (1 - e^{-Gamma t}) g`.
pub fn propagator_from_g(p: &ModelParams, t: f64, g: f64) -> SuperOp {
    structured(p, t, g, SuperOpKind::Propagator)
}

pub fn propagator(p: &ModelParams, t: f64, cache: Option<&KernelCache>) -> Result<SuperOp> {
    let g = match cache {
        Some(c) => c.g(t)?,
        None => crate::kernels::g_kernel(p, t)?,
    };
    Ok(propagator_from_g(p, t, g))
}

/// `exp(-i L t + (Gamma/2) t sum_eta [1 - eta g] L_eta)`.
pub fn propagator_exponential_from_g(p: &ModelParams, t: f64, g: f64) -> SuperOp {
    let half = 0.5 * p.gamma() * t;
    let exponent = coherent_generator(p)
        .scale(C::new(t, 0.0))
        .add(&dissipator_combination(half * (1.0 - g), half * (1.0 + g)));
    exponent.exp().with_kind(SuperOpKind::Propagator)
}

/// Closed-form divisor `Pi(t, t')` for a given value `g = g(t, t')`.
pub fn divisor_from_g(p: &ModelParams, t: f64, t_prime: f64, g: f64) -> SuperOp {
    structured(p, t - t_prime, g, SuperOpKind::Divisor)
}

pub fn divisor(p: &ModelParams, t: f64, t_prime: f64, cache: Option<&KernelCache>) -> Result<SuperOp> {
    let g = crate::kernels::g_divisor(p, t, t_prime, cache)?;
    Ok(divisor_from_g(p, t, t_prime, g))
}

/// `exp(-i L (t - t') + (Gamma/2)(t - t') sum_eta [1 - eta g(t,t')] L_eta)`.
pub fn divisor_exponential_from_g(p: &ModelParams, t: f64, t_prime: f64, g: f64) -> SuperOp {
    propagator_exponential_from_g(p, t - t_prime, g).with_kind(SuperOpKind::Divisor)
}

/// Propagator of the infinite-temperature limit, `g = 0`.
pub fn infinite_temperature_propagator(p: &ModelParams, t: f64) -> SuperOp {
    propagator_exponential_from_g(p, t, 0.0)
}

/// Inverse of the closed-form propagator from its spectral decomposition.
pub fn propagator_inverse_from_g(p: &ModelParams, t: f64, g: f64) -> Result<SuperOp> {
    if p.gamma() * t > MAX_INVERSION_DECAY {
        return Err(Error::IllConditioned(format!(
            "inverse propagator requested at Gamma t = {} > {MAX_INVERSION_DECAY}",
            p.gamma() * t
        )));
    }
    let sd = spectral_decomposition_from_g(p, t, g);
    let mut m = Matrix4::zeros();
    for k in 0..4 {
        m += sd.modes[k] * sd.amplitudes[k] / sd.eigenvalues[k];
    }
    Ok(SuperOp::new(m, SuperOpKind::General))
}

/// Time-local dissipative generator `Sigma_TCL = (Gamma/2) sum_eta [1 - eta h] L_eta`
/// for a given value `h = h(t)`.
pub fn tcl_generator_from_h(p: &ModelParams, h: f64) -> SuperOp {
    let half = 0.5 * p.gamma();
    dissipator_combination(half * (1.0 - h), half * (1.0 + h))
}

pub fn tcl_generator(p: &ModelParams, t: f64, cache: Option<&KernelCache>) -> Result<SuperOp> {
    let h = match cache {
        Some(c) => c.h(t)?,
        None => crate::kernels::h_kernel(p, t)?,
    };
    Ok(tcl_generator_from_h(p, h))
}

/// Time-local part `(Gamma/2) sum_eta L_eta` of the memory kernel, which
/// multiplies a delta function normalized on the half line.
pub fn nz_kernel_local(p: &ModelParams) -> SuperOp {
    let half = 0.5 * p.gamma();
    dissipator_combination(half, half).with_kind(SuperOpKind::Kernel)
}

/// Regular part `-(Gamma/2) sum_eta eta e^{-Gamma s/2} gamma(s) L_eta` of
/// the memory kernel at delay `s`.
pub fn nz_kernel_regular(p: &ModelParams, s: f64) -> SuperOp {
    let c = 0.5 * p.gamma() * (-0.5 * p.gamma() * s).exp() * gamma_kernel(p, s);
    dissipator_combination(-c, c).with_kind(SuperOpKind::Kernel)
}

/// Laplace transform `int_0^infinity e^{i z s} e^{-Gamma s/2} gamma(s) ds`
/// for `Im z > -Gamma/2`.
pub fn memory_function_laplace(p: &ModelParams, z: C) -> Result<C> {
    let eps = p.detuning();
    let gm = p.gamma();
    let temp = p.temperature();
    if !(z.im > -0.5 * gm) {
        return Err(Error::OutOfDomain(format!(
            "Laplace variable must satisfy Im z > -Gamma/2, got {z}"
        )));
    }
    let a = C::new(0.5 * gm, 0.0) - I * z;
    if temp == 0.0 {
        // int_0^inf e^{-a s} 2 sin(eps s)/(pi s) ds = (2/pi) arctan(eps / a)
        return Ok((C::new(eps, 0.0) / a).atan() * (2.0 / std::f64::consts::PI));
    }
    let two_pi_t = 2.0 * std::f64::consts::PI * temp;
    let mut sum = ZERO;
    for chi in SIGNS {
        let arg = C::new(0.5, 0.0) + (a + I * chi * eps) / two_pi_t;
        sum += chi * digamma(arg)?;
    }
    Ok(-I / std::f64::consts::PI * sum)
}

/// Laplace-transformed memory kernel
/// `Sigma(z) = (Gamma/2) sum_eta [1 + i (eta/pi) sum_chi chi psi(1/2 + (Gamma/2 - i(z - chi eps))/(2 pi T))] L_eta`.
pub fn nz_kernel_laplace(p: &ModelParams, z: C) -> Result<SuperOp> {
    let m = memory_function_laplace(p, z)?;
    let half = 0.5 * p.gamma();
    let plus = dissipator(1.0).scale((ONE - m) * half);
    let minus = dissipator(-1.0).scale((ONE + m) * half);
    Ok(plus.add(&minus).with_kind(SuperOpKind::Kernel))
}

/// Markovian generator `-i L + Sigma_TCL(infinity)`.
pub fn markov_generator(p: &ModelParams) -> Result<SuperOp> {
    Ok(coherent_generator(p).add(&tcl_generator_from_h(p, g_stationary(p)?)))
}

/// Born–Markov generator `-i L + Gamma sum_eta f(eta eps / T) L_eta`.
pub fn born_markov_generator(p: &ModelParams) -> SuperOp {
    let eps = p.detuning();
    let temp = p.temperature();
    let gm = p.gamma();
    coherent_generator(p).add(&dissipator_combination(
        gm * fermi_occupation(eps, temp),
        gm * fermi_occupation(-eps, temp),
    ))
}

/// `Pi(t) = sum_k lambda_k |m_k><a_k|` with right modes `m_k` (columns) and
/// left amplitudes `a_k` (rows) in the operator basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition {
    pub eigenvalues: [C; 4],
    pub modes: [Vector4<C>; 4],
    pub amplitudes: [RowVector4<C>; 4],
}

impl SpectralDecomposition {
    pub fn reconstruct(&self, kind: SuperOpKind) -> SuperOp {
        let mut m = Matrix4::zeros();
        for k in 0..4 {
            m += self.modes[k] * self.amplitudes[k] * self.eigenvalues[k];
        }
        SuperOp::new(m, kind)
    }

    /// Projector `|m_k><a_k|`.
    pub fn projector(&self, k: usize) -> Matrix4<C> {
        self.modes[k] * self.amplitudes[k]
    }
}

/// Ordering: stationary mode `(1 + x (-1)^n)/2` with amplitude `<1|`; the
/// coherences `d_eta^dag` with amplitudes `<d_eta^dag|`, `eta = +, -`; the
/// parity mode `(-1)^n` with amplitude `(<(-1)^n| - x <1|)/2`.
fn spectral_parts(x: f64) -> ([Vector4<C>; 4], [RowVector4<C>; 4]) {
    let identity = Matrix2::<C>::identity();
    let parity = parity_operator();
    let half = C::new(0.5, 0.0);
    let xc = C::new(x, 0.0);
    let modes = [
        coords_of(&((identity + parity * xc) * half)),
        coords_of(&annihilation()),
        coords_of(&creation()),
        coords_of(&parity),
    ];
    let amplitudes = [
        bra_of(&identity),
        bra_of(&annihilation()),
        bra_of(&creation()),
        (bra_of(&parity) - bra_of(&identity) * xc) * half,
    ];
    (modes, amplitudes)
}

pub fn spectral_decomposition_from_g(p: &ModelParams, t: f64, g: f64) -> SpectralDecomposition {
    let (modes, amplitudes) = spectral_parts(g);
    let d = diagonal_part(p, t);
    SpectralDecomposition {
        eigenvalues: [d[0], d[2], d[1], d[3]],
        modes,
        amplitudes,
    }
}

/// Spectral decomposition of `-i L + Sigma_TCL(t)` for `h = h(t)`, with
/// eigenvalues `0`, `i eta epsilon - Gamma/2` and `-Gamma`.
pub fn tcl_spectral_decomposition_from_h(p: &ModelParams, h: f64) -> SpectralDecomposition {
    let (modes, amplitudes) = spectral_parts(h);
    let gm = p.gamma();
    let e = p.epsilon_level();
    SpectralDecomposition {
        eigenvalues: [ZERO, C::new(-0.5 * gm, e), C::new(-0.5 * gm, -e), C::new(-gm, 0.0)],
        modes,
        amplitudes,
    }
}

/// State at time `t` for a given `g = g(t)`.
pub fn evolve_state_from_g(p: &ModelParams, t: f64, rho0: &DensityMatrix, g: f64) -> Result<DensityMatrix> {
    let decay = (-p.gamma() * t).exp();
    let parity = decay * rho0.parity() - (-p.gamma() * t).exp_m1() * g;
    let field = rho0.field() * C::new(-0.5 * p.gamma() * t, -p.epsilon_level() * t).exp();
    DensityMatrix::new(parity, field)
}

pub fn evolve_state(p: &ModelParams, t: f64, rho0: &DensityMatrix, cache: Option<&KernelCache>) -> Result<DensityMatrix> {
    let g = match cache {
        Some(c) => c.g(t)?,
        None => crate::kernels::g_kernel(p, t)?,
    };
    evolve_state_from_g(p, t, rho0, g)
}

/// Coordinates of `(1 + x (-1)^n)/2`.
pub fn stationary_mode(x: f64) -> Vector4<C> {
    Vector4::new(C::new(FRAC_1_SQRT_2, 0.0), ZERO, ZERO, C::new(x / SQRT_2, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> ModelParams {
        ModelParams::new(1.3, 0.2, 0.7, 0.4).unwrap()
    }

    #[test]
    fn basis_is_orthonormal() {
        for i in 0..4 {
            for j in 0..4 {
                let ip = (basis_operator(i).adjoint() * basis_operator(j)).trace();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - C::new(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn dissipator_structure() {
        // Braket form: L_eta = -(|d^dag><d^dag| + |d><d|)/2 - |P^><P^| - eta |P^><1^|
        for eta in SIGNS {
            let l = dissipator(eta).matrix;
            assert!((l[(1, 1)] + 0.5).norm() < 1e-15);
            assert!((l[(2, 2)] + 0.5).norm() < 1e-15);
            assert!((l[(3, 3)] + 1.0).norm() < 1e-15);
            assert!((l[(3, 0)] + eta).norm() < 1e-15);
            assert!(l.row(0).iter().all(|z| z.norm() < 1e-15));
        }
        let odd = dissipator(1.0).sub(&dissipator(-1.0));
        assert!(odd.compose(&odd).max_abs() < 1e-15);
    }

    #[test]
    fn closed_and_exponential_agree() {
        let p = params();
        for (t, g) in [(0.0, 0.0), (0.3, 0.4), (2.0, -0.9), (15.0, 0.99)] {
            let a = propagator_from_g(&p, t, g);
            let b = propagator_exponential_from_g(&p, t, g);
            assert!(a.max_abs_diff(&b) < 1e-13, "t = {t}");
        }
    }

    #[test]
    fn field_rotates_with_level_energy() {
        let p = params();
        let rho = DensityMatrix::new(0.1, C::new(0.3, 0.1)).unwrap();
        let t = 0.8;
        let out = propagator_from_g(&p, t, 0.5).apply_state(&rho).unwrap();
        let expected = rho.field() * C::new(-0.5 * p.gamma() * t, -p.epsilon_level() * t).exp();
        assert!((out.field() - expected).norm() < 1e-15);
        let direct = evolve_state_from_g(&p, t, &rho, 0.5).unwrap();
        assert!((direct.parity() - out.parity()).abs() < 1e-15);
    }

    #[test]
    fn spectral_reconstruction() {
        let p = params();
        let sd = spectral_decomposition_from_g(&p, 1.1, 0.37);
        let rec = sd.reconstruct(SuperOpKind::Propagator);
        assert!(rec.max_abs_diff(&propagator_from_g(&p, 1.1, 0.37)) < 1e-15);
        for k in 0..4 {
            for l in 0..4 {
                let ip = (sd.amplitudes[k] * sd.modes[l])[(0, 0)];
                let expected = if k == l { 1.0 } else { 0.0 };
                assert!((ip - C::new(expected, 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn inverse_refused_at_long_times() {
        let p = params();
        assert!(propagator_inverse_from_g(&p, 100.0, 0.2).is_err());
        let inv = propagator_inverse_from_g(&p, 3.0, 0.2).unwrap();
        let prod = inv.compose(&propagator_from_g(&p, 3.0, 0.2));
        assert!(prod.max_abs_diff(&SuperOp::identity()) < 1e-12);
    }

    #[test]
    fn taylor_fallback_matches_triangular_path() {
        let p = params();
        let gen = coherent_generator(&p).add(&tcl_generator_from_h(&p, 0.3)).scale(C::new(2.5, 0.0));
        let fast = gen.exp();
        let slow = SuperOp::new(exp_taylor(&gen.matrix), SuperOpKind::Propagator);
        assert!(fast.max_abs_diff(&slow) < 1e-13);
    }
}
