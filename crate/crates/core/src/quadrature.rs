//! Globally adaptive 21-point Gauss–Kronrod quadrature with user breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_409_868,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

/// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_panels: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 1e-12,
            rel: 1e-12,
            max_panels: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        scaled = res_asc * (200.0 * scaled / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

/// One 21-point Kronrod panel with its embedded 10-point Gauss estimate.
pub fn gauss_kronrod_21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);
    let mut res_k = f_center * WGK[10];
    let mut res_g = 0.0;
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[10] * (f_center - mean).abs();
    for j in 0..10 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let abs_half = half.abs();
    let err = rescale_error((res_k - res_g) * half, res_abs * abs_half, res_asc * abs_half);
    (res_k * half, err)
}

/// Integrates `f` over `[points[0], points[last]]`, starting from the panels
/// delimited by the sorted `points` and bisecting the panel with the largest
/// error estimate until the total error meets the tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, points: &[f64], tol: Tolerance) -> Result<QuadResult> {
    if points.len() < 2 {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            panels: 0,
        });
    }
    if points.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidParameter(
            "quadrature breakpoints must be sorted".into(),
        ));
    }

    let mut panels: Vec<Panel> = Vec::with_capacity(points.len() - 1);
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in points.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (value, error) = gauss_kronrod_21(&f, w[0], w[1]);
        total += value;
        total_err += error;
        panels.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let target = |v: f64| tol.abs.max(tol.rel * v.abs());
    if total_err <= target(total) {
        return Ok(QuadResult {
            value: total,
            error: total_err,
            panels: panels.len(),
        });
    }

    let mut heap: BinaryHeap<Panel> = panels.into_iter().collect();
    while total_err > target(total) {
        if heap.len() >= tol.max_panels {
            return Err(Error::NonConvergence {
                what: "adaptive quadrature",
                detail: format!(
                    "error estimate {total_err:e} after {} panels on [{}, {}]",
                    heap.len(),
                    points[0],
                    points[points.len() - 1]
                ),
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            heap.push(Panel {
                error: 0.0,
                ..worst
            });
            total_err -= worst.error;
            continue;
        }
        let (v1, e1) = gauss_kronrod_21(&f, worst.a, mid);
        let (v2, e2) = gauss_kronrod_21(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to remove drift from the incremental updates.
    let value: f64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value,
        error,
        panels: heap.len(),
    })
}

/// Breakpoints for `[a, b]` with the interior points `period * l` added.
pub fn periodic_breakpoints(a: f64, b: f64, period: Option<f64>) -> Vec<f64> {
    let mut points = vec![a];
    if let Some(period) = period.filter(|p| p.is_finite() && *p > 0.0) {
        let first = (a / period).floor() as i64 + 1;
        let mut l = first;
        loop {
            let x = l as f64 * period;
            if x >= b {
                break;
            }
            if x > a {
                points.push(x);
            }
            l += 1;
        }
    }
    points.push(b);
    points
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_exact_for_degree_31() {
        let (v, _) = gauss_kronrod_21(&|x: f64| x.powi(30) + x.powi(31), -1.0, 1.0);
        assert!((v - 2.0 / 31.0).abs() < 1e-15);
    }

    #[test]
    fn gauss_weights_sum_to_two() {
        let s: f64 = 2.0 * WG.iter().sum::<f64>();
        assert!((s - 2.0).abs() < 1e-15);
        let sk: f64 = 2.0 * WGK[..10].iter().sum::<f64>() + WGK[10];
        assert!((sk - 2.0).abs() < 1e-15);
    }

    #[test]
    fn adaptive_handles_peaked_integrand() {
        let r = integrate(|x| 1.0 / (1e-4 + x * x), &[-1.0, 1.0], Tolerance::default()).unwrap();
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((r.value - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn oscillatory_with_breakpoints() {
        let pts = periodic_breakpoints(0.0, 50.0, Some(std::f64::consts::PI / 7.0));
        let r = integrate(|x| (7.0 * x).sin() * (-0.1 * x).exp(), &pts, Tolerance::default()).unwrap();
        let exact = (7.0 - (-5.0f64).exp() * (0.1 * (350.0f64).sin() + 7.0 * (350.0f64).cos())) / 49.01;
        assert!((r.value - exact).abs() < 1e-12);
    }

    #[test]
    fn breakpoints_are_interior() {
        let pts = periodic_breakpoints(0.5, 2.0, Some(0.5));
        assert_eq!(pts, vec![0.5, 1.0, 1.5, 2.0]);
        assert_eq!(periodic_breakpoints(0.0, 1.0, None), vec![0.0, 1.0]);
    }
}
