//! Complex digamma, the Lerch transcendent at `s = 1`, the sine integral and
//! the Fermi function.

use num_complex::Complex64;
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// `B_{2k} / (2k)` for `k = 1..=8`.
const DIGAMMA_ASYMPTOTIC: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

const DIGAMMA_SHIFT: f64 = 12.0;
const DIGAMMA_MIN_RE: f64 = -50.0;
const POLE_DISTANCE: f64 = 1e-12;

/// Digamma function `psi(z) = Gamma'(z)/Gamma(z)` for `Re z > -50`.
///
/// The argument is shifted upward with `psi(z) = psi(z+1) - 1/z` until
/// `Re z > 12`, where the Bernoulli asymptotic series is summed.
pub fn digamma(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::OutOfDomain(format!("digamma of non-finite {z}")));
    }
    if z.re <= DIGAMMA_MIN_RE {
        return Err(Error::OutOfDomain(format!(
            "digamma requires Re z > {DIGAMMA_MIN_RE}, got {z}"
        )));
    }
    if z.re <= 0.5 {
        let nearest = z.re.round();
        let distance = Complex64::new(z.re - nearest, z.im).norm();
        if nearest <= 0.0 && distance < POLE_DISTANCE {
            return Err(Error::Pole {
                re: z.re,
                im: z.im,
                distance,
            });
        }
    }

    let mut w = z;
    let mut acc = Complex64::new(0.0, 0.0);
    while w.re < DIGAMMA_SHIFT {
        acc -= w.inv();
        w += 1.0;
    }

    let inv = w.inv();
    let inv2 = inv * inv;
    let mut series = Complex64::new(0.0, 0.0);
    let mut power = inv2;
    for c in DIGAMMA_ASYMPTOTIC {
        series += power * c;
        power *= inv2;
    }
    Ok(acc + w.ln() - 0.5 * inv - series)
}

const LERCH_DIRECT_LIMIT: f64 = 0.9;
const LERCH_TERM_RATIO: f64 = 1e-14;
const LERCH_MAX_TERMS: usize = 100_000_000;

/// Lerch transcendent `Phi(x, 1, a) = sum_{n>=0} x^n / (n + a)` for
/// `0 <= x < 1` and `Re a > 0`.
///
/// For `x <= 0.9` the series is summed until the remaining tail is below
/// `1e-14` of the partial sum. Above that, iterated Aitken extrapolation of
/// the partial sums is tried first and compensated direct summation is the
/// fallback.
pub fn lerch_phi(x: f64, a: Complex64) -> Result<Complex64> {
    if !(0.0..1.0).contains(&x) {
        return Err(Error::OutOfDomain(format!(
            "Lerch transcendent requires 0 <= x < 1, got {x}"
        )));
    }
    if !(a.re > 0.0) || !a.im.is_finite() {
        return Err(Error::OutOfDomain(format!(
            "Lerch transcendent requires Re a > 0, got {a}"
        )));
    }
    if x == 0.0 {
        return Ok(a.inv());
    }
    if x > LERCH_DIRECT_LIMIT {
        if let Some(v) = lerch_aitken(x, a) {
            return Ok(v);
        }
    }
    lerch_direct(x, a)
}

fn lerch_direct(x: f64, a: Complex64) -> Result<Complex64> {
    let tail_factor = 1.0 / (1.0 - x);
    let mut sum = NeumaierSum::default();
    let mut xn = 1.0;
    for n in 0..LERCH_MAX_TERMS {
        let term = xn / (a + n as f64);
        sum.add(term);
        xn *= x;
        let n1 = n as f64 + 1.0;
        // Once n + 1 > |a| the terms decrease and the geometric tail bounds
        // the remainder.
        if n1 * n1 > a.norm_sqr() {
            let next = xn / (a + n1).norm();
            let s = sum.value().norm();
            if next * tail_factor <= LERCH_TERM_RATIO * s || xn == 0.0 {
                return Ok(sum.value());
            }
        }
    }
    Err(Error::NonConvergence {
        what: "Lerch transcendent",
        detail: format!("x = {x}, a = {a} after {LERCH_MAX_TERMS} terms"),
    })
}

/// Iterated Aitken extrapolation on partial sums sampled every `stride`
/// terms. Returns `None` when two successive extrapolations disagree.
fn lerch_aitken(x: f64, a: Complex64) -> Option<Complex64> {
    // Sample so that the partial-sum errors shrink by roughly a factor 0.5
    // between samples; start past the point where terms decrease.
    let stride = ((0.7 / -x.ln()).ceil() as usize).max(1);
    let start = a.norm().ceil() as usize;
    let estimate = |samples: usize| -> Option<Complex64> {
        let mut partial = Vec::with_capacity(samples);
        let mut sum = NeumaierSum::default();
        let mut xn = 1.0;
        let mut n = 0usize;
        let mut next_sample = start;
        while partial.len() < samples {
            sum.add(xn / (a + n as f64));
            xn *= x;
            n += 1;
            if n > next_sample {
                partial.push(sum.value());
                next_sample += stride;
            }
        }
        let mut seq = partial;
        while seq.len() >= 3 {
            let mut next = Vec::with_capacity(seq.len() - 2);
            for w in seq.windows(3) {
                let step = w[2] - w[1];
                let d2 = w[2] - 2.0 * w[1] + w[0];
                if d2.norm() <= f64::MIN_POSITIVE * 1e6 {
                    next.push(w[2]);
                } else {
                    next.push(w[2] - step * step / d2);
                }
            }
            seq = next;
        }
        seq.last().copied()
    };
    let coarse = estimate(21)?;
    let fine = estimate(41)?;
    let scale = fine.norm();
    if (fine - coarse).norm() <= 1e-13 * scale && fine.re.is_finite() && fine.im.is_finite() {
        Some(fine)
    } else {
        None
    }
}

#[derive(Default, Clone, Copy)]
struct NeumaierSum {
    sum: Complex64,
    compensation: Complex64,
}

impl NeumaierSum {
    fn add(&mut self, v: Complex64) {
        let re = two_sum(self.sum.re, v.re);
        let im = two_sum(self.sum.im, v.im);
        self.sum = Complex64::new(re.0, im.0);
        self.compensation += Complex64::new(re.1, im.1);
    }

    fn value(&self) -> Complex64 {
        self.sum + self.compensation
    }
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = if a.abs() >= b.abs() {
        (a - s) + b
    } else {
        (b - s) + a
    };
    (s, err)
}

/// Sine integral `Si(x) = int_0^x sin(u)/u du`.
///
/// Power series for `|x| <= 4`; beyond that the auxiliary functions are
/// obtained from the continued fraction of `E1(i x)`.
pub fn sine_integral(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    let value = if ax == 0.0 {
        0.0
    } else if ax <= 4.0 {
        let x2 = ax * ax;
        let mut term = ax;
        let mut sum = ax;
        let mut k = 0.0;
        loop {
            k += 1.0;
            term *= -x2 / ((2.0 * k) * (2.0 * k + 1.0));
            let contribution = term / (2.0 * k + 1.0);
            sum += contribution;
            if contribution.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum
    } else if ax.is_infinite() {
        FRAC_PI_2
    } else {
        let (f, g) = auxiliary_fg(ax);
        FRAC_PI_2 - f * ax.cos() - g * ax.sin()
    };
    value.copysign(x)
}

/// Auxiliary functions `f(x)` and `g(x)` with `E1(ix) = (g(x) - i f(x)) e^{-ix}`,
/// i.e. `Si(x) = pi/2 - f cos x - g sin x`, from the modified Lentz evaluation
/// of the continued fraction for `E1(ix)`.
fn auxiliary_fg(x: f64) -> (f64, f64) {
    let tiny = 1e-300;
    let mut b = Complex64::new(1.0, x);
    let mut c = Complex64::new(1.0 / tiny, 0.0);
    let mut d = b.inv();
    let mut h = d;
    for i in 1..10_000 {
        let a = -((i * i) as f64);
        b += 2.0;
        d = (d * a + b).inv();
        c = b + c.inv() * a;
        let del = c * d;
        h *= del;
        if (del - 1.0).norm() < 1e-16 {
            break;
        }
    }
    // h = e^{ix} E1(ix) = g - i f
    (-h.im, h.re)
}

/// Fermi function `1/(e^x + 1)`, evaluated without overflow.
pub fn fermi(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x >= 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Fermi occupation `f(energy / temperature)` including the zero-temperature
/// step with `f(0) = 1/2`.
pub fn fermi_occupation(energy: f64, temperature: f64) -> f64 {
    if temperature > 0.0 {
        fermi(energy / temperature)
    } else if energy > 0.0 {
        0.0
    } else if energy < 0.0 {
        1.0
    } else {
        0.5
    }
}

/// `(e^w - 1) / w` for complex `w`, accurate near `w = 0`.
pub fn expm1_ratio(w: Complex64) -> Complex64 {
    if w.norm() < 0.1 {
        // Taylor series to w^10 / 11!.
        let mut term = Complex64::new(1.0, 0.0);
        let mut sum = term;
        for k in 2..=11 {
            term = term * w / k as f64;
            sum += term;
        }
        sum
    } else {
        (w.exp() - 1.0) / w
    }
}

/// `Im psi(1/2 + i y) = (pi/2) tanh(pi y)`.
pub fn digamma_half_line_imag(y: f64) -> f64 {
    FRAC_PI_2 * (PI * y).tanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn digamma_special_values() {
        assert!((digamma(c(1.0, 0.0)).unwrap().re + EULER_GAMMA).abs() < 1e-14);
        let half = digamma(c(0.5, 0.0)).unwrap();
        assert!((half.re - (-EULER_GAMMA - 2.0 * std::f64::consts::LN_2)).abs() < 1e-14);
        assert!(half.im.abs() < 1e-15);
    }

    #[test]
    fn digamma_half_line() {
        for y in [0.01, 0.3, 1.0, 4.0, 30.0] {
            let v = digamma(c(0.5, y)).unwrap();
            assert!((v.im - digamma_half_line_imag(y)).abs() < 1e-13, "y = {y}");
        }
    }

    #[test]
    fn digamma_recurrence_and_reflection() {
        for z in [c(0.3, 0.7), c(-3.4, 2.0), c(7.0, -12.0), c(-40.5, 0.2)] {
            let lhs = digamma(z + 1.0).unwrap();
            let rhs = digamma(z).unwrap() + z.inv();
            assert!((lhs - rhs).norm() < 1e-12 * lhs.norm().max(1.0), "z = {z}");
            // psi(1 - z) - psi(z) = pi cot(pi z)
            if (1.0 - z).re > DIGAMMA_MIN_RE {
                let refl = digamma(1.0 - z).unwrap() - digamma(z).unwrap();
                let cot = (PI * z).cos() / (PI * z).sin();
                assert!((refl - PI * cot).norm() < 1e-11 * refl.norm().max(1.0));
            }
        }
    }

    #[test]
    fn digamma_domain_errors() {
        assert!(matches!(digamma(c(-2.0, 0.0)), Err(Error::Pole { .. })));
        assert!(matches!(digamma(c(-60.0, 1.0)), Err(Error::OutOfDomain(_))));
        assert!(digamma(c(-2.0, 1e-6)).is_ok());
    }

    #[test]
    fn lerch_known_values() {
        // Phi(x, 1, 1) = -ln(1 - x) / x
        for x in [0.1, 0.5, 0.9, 0.95, 0.99, 0.999] {
            let v = lerch_phi(x, c(1.0, 0.0)).unwrap();
            let exact = -(1.0 - x).ln() / x;
            assert!((v.re - exact).abs() < 1e-12 * exact, "x = {x}: {v} vs {exact}");
            assert!(v.im.abs() < 1e-14);
        }
        assert_eq!(lerch_phi(0.0, c(2.0, 0.0)).unwrap(), c(0.5, 0.0));
    }

    #[test]
    fn lerch_domain_errors() {
        assert!(lerch_phi(1.0, c(1.0, 0.0)).is_err());
        assert!(lerch_phi(0.5, c(-1.0, 0.0)).is_err());
    }

    #[test]
    fn sine_integral_values() {
        assert!((sine_integral(PI) - 1.851_937_051_982_466).abs() < 1e-14);
        assert!((sine_integral(10.0) - 1.658_347_594_218_874).abs() < 1e-14);
        assert!((sine_integral(4.0) - 1.758_203_138_949_053).abs() < 1e-14);
        assert!((sine_integral(-2.0) + 1.605_412_976_802_695).abs() < 1e-14);
        assert!((sine_integral(1e8) - FRAC_PI_2).abs() < 1e-7);
    }

    #[test]
    fn fermi_symmetry_and_limits() {
        for x in [-800.0, -3.0, 0.0, 0.5, 40.0, 900.0] {
            assert!((fermi(x) + fermi(-x) - 1.0).abs() < 1e-15);
        }
        assert_eq!(fermi(0.0), 0.5);
        assert_eq!(fermi_occupation(1.0, 0.0), 0.0);
        assert_eq!(fermi_occupation(-1.0, 0.0), 1.0);
    }

    #[test]
    fn expm1_ratio_continuity() {
        for w in [c(0.0999, 0.0), c(0.1001, 0.0), c(0.07, 0.07), c(0.0, 0.0999)] {
            let direct = (w.exp() - 1.0) / w;
            assert!((expm1_ratio(w) - direct).norm() < 1e-14);
        }
        assert_eq!(expm1_ratio(c(0.0, 0.0)), c(1.0, 0.0));
    }
}
