//! Choi matrices, complete-positivity tests and Kraus decompositions.
//!
//! The Choi matrix of `S` is `C = sum_{kl} S(|k><l|) (x) |k><l|`, so the map
//! `|eta><eta'| . |chi><chi'|` has Choi matrix `|eta eta'><chi' chi|`. Product
//! states are indexed `2 i + k` with `0 = occupied` and `1 = empty`.

use nalgebra::{Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{Error, Result};
use crate::liouville::{annihilation, creation, ladder, SuperOp, SuperOpKind, SIGNS};
use crate::model::ModelParams;

type C = Complex64;

/// Relative tolerance (with respect to the trace) below which a negative
/// Choi eigenvalue still counts as completely positive.
pub const CP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiMatrix(pub Matrix4<C>);

fn unit(i: usize, j: usize) -> Matrix2<C> {
    let mut m = Matrix2::zeros();
    m[(i, j)] = C::new(1.0, 0.0);
    m
}

pub fn choi(s: &SuperOp) -> ChoiMatrix {
    let mut c = Matrix4::zeros();
    for k in 0..2 {
        for l in 0..2 {
            let image = s.apply(&unit(k, l));
            for i in 0..2 {
                for j in 0..2 {
                    c[(2 * i + k, 2 * j + l)] = image[(i, j)];
                }
            }
        }
    }
    ChoiMatrix(c)
}

/// Inverse of [`choi`].
pub fn superop_from_choi(c: &ChoiMatrix, kind: SuperOpKind) -> SuperOp {
    SuperOp::from_map(
        |x| {
            let mut out = Matrix2::zeros();
            for k in 0..2 {
                for l in 0..2 {
                    for i in 0..2 {
                        for j in 0..2 {
                            out[(i, j)] += c.0[(2 * i + k, 2 * j + l)] * x[(k, l)];
                        }
                    }
                }
            }
            out
        },
        kind,
    )
}

impl ChoiMatrix {
    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Largest entry of `C - C^dag`.
    pub fn hermiticity_defect(&self) -> f64 {
        (self.0 - self.0.adjoint()).iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    fn hermitian_part(&self) -> Matrix4<C> {
        (self.0 + self.0.adjoint()) * C::new(0.5, 0.0)
    }

    pub fn eigen(&self) -> HermitianEigen {
        hermitian_eigen(&self.hermitian_part())
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 4] {
        self.eigen().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn is_completely_positive(&self) -> bool {
        self.min_eigenvalue() >= -CP_TOLERANCE * self.trace().abs().max(1.0)
    }
}

/// Eigenvalues in ascending order with orthonormal eigenvectors as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianEigen {
    pub values: [f64; 4],
    pub vectors: Matrix4<C>,
}

/// Eigendecomposition of a Hermitian 4x4 matrix by cyclic complex Jacobi
/// rotations. nalgebra's complex Hermitian solver returns inaccurate
/// eigenvectors for some Choi matrices (eigenvalues are fine), which breaks
/// Kraus extraction.
pub fn hermitian_eigen(h: &Matrix4<C>) -> HermitianEigen {
    let mut a = (h + h.adjoint()) * C::new(0.5, 0.0);
    let mut v = Matrix4::<C>::identity();
    let scale = a.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(f64::MIN_POSITIVE);
    for _ in 0..64 {
        let mut off = 0.0;
        for p in 0..4 {
            for q in p + 1..4 {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-17 * scale {
            break;
        }
        for p in 0..4 {
            for q in p + 1..4 {
                let beta = a[(p, q)];
                let modulus = beta.norm();
                if modulus <= 1e-300 {
                    continue;
                }
                let phase = beta / modulus;
                // Reduce to the real symmetric 2x2 problem with off-diagonal |beta|.
                let zeta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * modulus);
                let t = if zeta == 0.0 {
                    1.0
                } else {
                    zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let mut j = Matrix4::<C>::identity();
                j[(p, p)] = C::new(c, 0.0);
                j[(p, q)] = C::new(s, 0.0);
                j[(q, p)] = -phase.conj() * s;
                j[(q, q)] = phase.conj() * c;
                a = j.adjoint() * a * j;
                a[(p, q)] = C::new(0.0, 0.0);
                a[(q, p)] = C::new(0.0, 0.0);
                v *= j;
            }
        }
    }
    let mut order = [0usize, 1, 2, 3];
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));
    let values = order.map(|k| a[(k, k)].re);
    let vectors = Matrix4::from_fn(|i, k| v[(i, order[k])]);
    HermitianEigen { values, vectors }
}

/// Minimum Choi eigenvalue of `s`; non-negative exactly for completely
/// positive maps.
pub fn cp_minimum(s: &SuperOp) -> f64 {
    choi(s).min_eigenvalue()
}

/// Minimum eigenvalue of the Choi matrix of a generator projected onto the
/// complement of the maximally entangled vector. A generator of a
/// trace-preserving map generates completely positive evolution over
/// arbitrarily short intervals exactly when this is non-negative.
pub fn ccp_minimum(generator: &SuperOp) -> f64 {
    let c = choi(generator);
    let s = C::new(FRAC_1_SQRT_2, 0.0);
    let z = C::new(0.0, 0.0);
    let one = C::new(1.0, 0.0);
    let basis = [
        Vector4::new(s, z, z, -s),
        Vector4::new(z, one, z, z),
        Vector4::new(z, z, one, z),
    ];
    let h = c.hermitian_part();
    let reduced = Matrix3::from_fn(|a, b| (basis[a].adjoint() * h * basis[b])[(0, 0)]);
    SymmetricEigen::new(reduced)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Kraus operators, `S(X) = sum_k K_k X K_k^dag`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet {
    pub operators: Vec<Matrix2<C>>,
}

impl KrausSet {
    pub fn to_superop(&self, kind: SuperOpKind) -> SuperOp {
        superop_from_kraus(&self.operators, kind)
    }

    /// `sum_k K_k^dag K_k`, the identity for trace-preserving maps.
    pub fn completeness(&self) -> Matrix2<C> {
        self.operators
            .iter()
            .fold(Matrix2::zeros(), |acc, k| acc + k.adjoint() * k)
    }
}

pub fn superop_from_kraus(ops: &[Matrix2<C>], kind: SuperOpKind) -> SuperOp {
    SuperOp::from_map(
        |x| ops.iter().fold(Matrix2::zeros(), |acc, k| acc + k * x * k.adjoint()),
        kind,
    )
}

/// Kraus operators from the eigenvectors of the Choi matrix:
/// `K_{ik} = sqrt(lambda) v_{2i+k}`.
pub fn kraus_from_choi(c: &ChoiMatrix) -> Result<KrausSet> {
    let eig = c.eigen();
    let min = eig.values[0];
    if min < -CP_TOLERANCE * c.trace().abs().max(1.0) {
        return Err(Error::NotCompletelyPositive { min_eigenvalue: min });
    }
    let mut operators = Vec::new();
    for (n, &lambda) in eig.values.iter().enumerate() {
        if lambda <= 0.0 {
            continue;
        }
        let v = eig.vectors.column(n);
        let w = C::new(lambda.sqrt(), 0.0);
        operators.push(Matrix2::from_fn(|i, k| v[2 * i + k] * w));
    }
    Ok(KrausSet { operators })
}

/// Closed-form Kraus operators of the propagator at time `t`.
///
/// `K0_eta = sqrt(lambda0_eta) [eta r^{eta/2} d d^dag + r^{-eta/2} e^{-i epsilon t} d^dag d] / sqrt(r + 1/r)`
/// and `K1_eta = sqrt(lambda1_eta) d_eta`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormKraus {
    pub k0: [Matrix2<C>; 2],
    pub k1: [Matrix2<C>; 2],
    pub lambda0: [f64; 2],
    pub lambda1: [f64; 2],
    pub r: f64,
}

impl ClosedFormKraus {
    /// Operators in the order `K0_+, K0_-, K1_+, K1_-`.
    pub fn operators(&self) -> [Matrix2<C>; 4] {
        [self.k0[0], self.k0[1], self.k1[0], self.k1[1]]
    }

    pub fn to_superop(&self) -> SuperOp {
        superop_from_kraus(&self.operators(), SuperOpKind::Propagator)
    }
}

/// Choi eigenvalues `lambda0_eta = (1 + e^{-Gamma t})/2 + eta sqrt(e^{-Gamma t} + (alpha/2)^2)`
/// and `lambda1_eta = (1 - e^{-Gamma t})(1 - eta g)/2`, with `alpha = (1 - e^{-Gamma t}) g`.
pub fn choi_eigenvalues_closed(gamma: f64, t: f64, g: f64) -> ([f64; 2], [f64; 2]) {
    let decay = (-gamma * t).exp();
    let rise = -(-gamma * t).exp_m1();
    let half_alpha = 0.5 * rise * g;
    let root = (decay + half_alpha * half_alpha).sqrt();
    let mean = 0.5 * (1.0 + decay);
    (
        [mean + root, mean - root],
        [0.5 * rise * (1.0 - g), 0.5 * rise * (1.0 + g)],
    )
}

/// `r = e^{Gamma t/2} [alpha/2 + sqrt(e^{-Gamma t} + (alpha/2)^2)]`.
pub fn kraus_ratio(gamma: f64, t: f64, g: f64) -> f64 {
    let decay = (-gamma * t).exp();
    let half_alpha = -0.5 * (-gamma * t).exp_m1() * g;
    let root = (decay + half_alpha * half_alpha).sqrt();
    let bracket = if half_alpha >= 0.0 {
        half_alpha + root
    } else {
        decay / (root - half_alpha)
    };
    (0.5 * gamma * t).exp() * bracket
}

pub fn kraus_closed_form(p: &ModelParams, t: f64, g: f64) -> Result<ClosedFormKraus> {
    if g.abs() > 1.0 + 1e-12 {
        let (_, l1) = choi_eigenvalues_closed(p.gamma(), t, g);
        return Err(Error::NotCompletelyPositive {
            min_eigenvalue: l1[0].min(l1[1]),
        });
    }
    let g = g.clamp(-1.0, 1.0);
    let gm = p.gamma();
    let (lambda0, lambda1) = choi_eigenvalues_closed(gm, t, g);
    let lambda0 = [lambda0[0], lambda0[1].max(0.0)];
    let lambda1 = [lambda1[0].max(0.0), lambda1[1].max(0.0)];
    let r = kraus_ratio(gm, t, g);
    let norm = (r + 1.0 / r).sqrt();
    let rot = C::new(0.0, -p.epsilon_level() * t).exp();
    let empty = annihilation() * creation();
    let occupied = creation() * annihilation();
    let mut k0 = [Matrix2::zeros(); 2];
    for (n, eta) in SIGNS.iter().enumerate() {
        let a = eta * r.powf(0.5 * eta);
        let b = r.powf(-0.5 * eta);
        k0[n] = (empty * C::new(a, 0.0) + occupied * (rot * b)) * C::new(lambda0[n].sqrt() / norm, 0.0);
    }
    let k1 = [
        ladder(1.0) * C::new(lambda1[0].sqrt(), 0.0),
        ladder(-1.0) * C::new(lambda1[1].sqrt(), 0.0),
    ];
    Ok(ClosedFormKraus {
        k0,
        k1,
        lambda0,
        lambda1,
        r,
    })
}

/// Residual of one operator sum rule.
#[derive(Debug, Clone, PartialEq)]
pub struct SumRule {
    pub name: &'static str,
    pub residual: f64,
}

fn max_entry(m: &Matrix2<C>) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Operator sum rules of the closed-form Kraus operators. Each residual is
/// the largest entry of `lhs - rhs`.
pub fn sum_rules(p: &ModelParams, t: f64, g: f64, k: &ClosedFormKraus) -> Vec<SumRule> {
    let id = Matrix2::<C>::identity();
    let parity = crate::liouville::parity_operator();
    let rise = -(-p.gamma() * t).exp_m1();
    let sum = |f: &dyn Fn(&Matrix2<C>) -> Matrix2<C>, ops: &[Matrix2<C>]| {
        ops.iter().fold(Matrix2::zeros(), |acc, x| acc + f(x))
    };
    let k0 = &k.k0;
    let k1 = &k.k1;
    let mut rules = Vec::new();

    let completeness = sum(&|x| x.adjoint() * x, k0) + sum(&|x| x.adjoint() * x, k1);
    rules.push(SumRule {
        name: "trace preservation",
        residual: max_entry(&(completeness - id)),
    });
    let unit_image = sum(&|x| x * x.adjoint(), k0) + sum(&|x| x * x.adjoint(), k1);
    rules.push(SumRule {
        name: "image of identity",
        residual: max_entry(&(unit_image - id - parity * C::new(rise * g, 0.0))),
    });
    let normal = sum(&|x| x * x.adjoint() - x.adjoint() * x, k0);
    rules.push(SumRule {
        name: "even operators normal",
        residual: max_entry(&normal),
    });
    let odd = sum(&|x| x * x.adjoint() + x.adjoint() * x, k1);
    rules.push(SumRule {
        name: "odd operators",
        residual: max_entry(&(odd - id * C::new(rise, 0.0))),
    });
    // Pi(d_eta^dag) = e^{(i eta epsilon - Gamma/2) t} d_eta^dag; the adjoint
    // map carries the conjugate phase.
    for eta in SIGNS {
        let op = ladder(eta).adjoint();
        let phase = C::new(-0.5 * p.gamma() * t, eta * p.epsilon_level() * t).exp();
        let heis = sum(&|x| x.adjoint() * op * x, k0);
        rules.push(SumRule {
            name: "even Heisenberg coherence",
            residual: max_entry(&(heis - op * phase.conj())),
        });
        let schr = sum(&|x| x * op * x.adjoint(), k0);
        rules.push(SumRule {
            name: "even Schroedinger coherence",
            residual: max_entry(&(schr - op * phase)),
        });
        rules.push(SumRule {
            name: "odd Schroedinger coherence",
            residual: max_entry(&sum(&|x| x * op * x.adjoint(), k1)),
        });
        rules.push(SumRule {
            name: "odd Heisenberg coherence",
            residual: max_entry(&sum(&|x| x.adjoint() * op * x, k1)),
        });
    }
    rules
}
