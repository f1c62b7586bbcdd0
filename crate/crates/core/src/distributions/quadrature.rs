use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

// Gauss-Kronrod 7/15 nodes on [-1, 1] (positive half, centre last).
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_bound: f64,
    pub evaluations: usize,
}

struct Panel {
    lo: f64,
    hi: f64,
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

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> (f64, f64) {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    let mut k = fc * WK[7];
    let mut g = fc * WG[3];
    for (i, (&x, &w)) in XK.iter().zip(WK.iter()).take(7).enumerate() {
        let dx = half * x;
        let pair = f(centre - dx) + f(centre + dx);
        k += w * pair;
        if i % 2 == 1 {
            g += WG[i / 2] * pair;
        }
    }
    (k * half, ((k - g) * half).abs())
}

/// Globally adaptive Gauss-Kronrod quadrature of `f` over the finite interval
/// `[lo, hi]`. Bisects the panel with the largest error estimate until the
/// summed estimate drops below `abs_tol`, or fails after `max_panels`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    let mut heap = BinaryHeap::new();
    let (value, error) = kronrod(&f, lo, hi);
    heap.push(Panel {
        lo,
        hi,
        value,
        error,
    });
    let mut evaluations = 15;
    loop {
        let total: f64 = heap.iter().map(|p| p.value).sum();
        let err: f64 = heap.iter().map(|p| p.error).sum();
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: err,
            });
        }
        if err <= abs_tol {
            return Ok(Quadrature {
                value: total,
                error_bound: err,
                evaluations,
            });
        }
        if heap.len() >= max_panels {
            return Err(Error::Quadrature {
                estimate: total,
                error_bound: err,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        for (a, b) in [(worst.lo, mid), (mid, worst.hi)] {
            let (value, error) = kronrod(&f, a, b);
            heap.push(Panel {
                lo: a,
                hi: b,
                value,
                error,
            });
        }
        evaluations += 30;
    }
}

/// Integrate `f` over the whole real line by mapping `s = centre + width·t/(1−t²)`
/// onto `t ∈ (−1, 1)`. The integrand must decay at least exponentially.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    centre: f64,
    width: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<Quadrature> {
    let mapped = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            return 0.0;
        }
        let s = centre + width * t / d;
        let v = f(s);
        if v == 0.0 {
            0.0
        } else {
            v * width * (1.0 + t * t) / (d * d)
        }
    };
    integrate(mapped, -1.0, 1.0, abs_tol, max_panels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_is_exact() {
        let q = integrate(|x| 3.0 * x * x, 0.0, 2.0, 1e-14, 10).unwrap();
        assert_abs_diff_eq!(q.value, 8.0, epsilon = 1e-13);
    }

    #[test]
    fn gaussian_over_real_line() {
        let q = integrate_real_line(|s| (-s * s).exp(), 0.3, 1.0, 1e-12, 500).unwrap();
        assert_abs_diff_eq!(q.value, std::f64::consts::PI.sqrt(), epsilon = 1e-11);
    }

    #[test]
    fn endpoint_log_singularity() {
        // ∫₀¹ ln x dx = −1
        let q = integrate(|x| if x > 0.0 { x.ln() } else { 0.0 }, 0.0, 1.0, 1e-10, 2000).unwrap();
        assert_abs_diff_eq!(q.value, -1.0, epsilon = 1e-9);
    }

    #[test]
    fn non_convergence_is_reported() {
        let r = integrate(|x| 1.0 / x, 0.0, 1.0, 1e-12, 20);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
