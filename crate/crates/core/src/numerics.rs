//! Small numerical kernels shared across the crate: order-fixed reductions,
//! ensemble statistics, least-squares slopes, quadrature and 1-D maximization.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Pairwise (cascade) summation. The split points depend only on the length,
/// so the result is bit-reproducible regardless of how the input was produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_complex(xs: &[Complex64]) -> Complex64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_complex(&xs[..mid]) + pairwise_sum_complex(&xs[mid..])
}

/// Running compensated (Neumaier) sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Compensated running sum over complex values (componentwise).
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedComplexSum {
    re: CompensatedSum,
    im: CompensatedSum,
}

impl CompensatedComplexSum {
    pub fn add(&mut self, z: Complex64) {
        self.re.add(z.re);
        self.im.add(z.im);
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re.value(), self.im.value())
    }
}

/// Sample mean with its CLT standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { mean: value, std_error: 0.0 }
    }

    /// `|mean - target| <= k * se`, with a tiny absolute slack so that
    /// zero-variance ensembles compare equal through rounding.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.mean - target).abs() <= k * self.std_error + 1e-12 * target.abs().max(1.0)
    }

    pub fn z_score(&self, target: f64) -> f64 {
        let d = self.mean - target;
        if self.std_error > 0.0 {
            d / self.std_error
        } else if d.abs() <= 1e-12 * target.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY.copysign(d)
        }
    }
}

/// Mean and standard error of a real sample, reduced pairwise.
pub fn estimate(xs: &[f64]) -> Estimate {
    let n = xs.len();
    assert!(n > 0, "empty sample");
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return Estimate { mean, std_error: 0.0 };
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n as f64 - 1.0);
    Estimate { mean, std_error: (var / n as f64).sqrt() }
}

/// Componentwise estimate of a complex sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexEstimate {
    pub re: Estimate,
    pub im: Estimate,
}

impl ComplexEstimate {
    pub fn mean(&self) -> Complex64 {
        Complex64::new(self.re.mean, self.im.mean)
    }

    pub fn within(&self, target: Complex64, k: f64) -> bool {
        self.re.within(target.re, k) && self.im.within(target.im, k)
    }
}

pub fn complex_estimate(zs: &[Complex64]) -> ComplexEstimate {
    let re: Vec<f64> = zs.iter().map(|z| z.re).collect();
    let im: Vec<f64> = zs.iter().map(|z| z.im).collect();
    ComplexEstimate { re: estimate(&re), im: estimate(&im) }
}

/// Ordinary least-squares line through `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope propagated from per-point errors when
    /// given, otherwise from the residuals.
    pub slope_std_error: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64], y_errors: Option<&[f64]>) -> LineFit {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2, "need at least two points for a slope");
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_std_error = match y_errors {
        Some(errs) => {
            let v: f64 = xs.iter().zip(errs).map(|(x, e)| (x - mx).powi(2) * e * e).sum();
            v.sqrt() / sxx
        }
        None if xs.len() > 2 => {
            let rss: f64 = xs
                .iter()
                .zip(ys)
                .map(|(x, y)| (y - intercept - slope * x).powi(2))
                .sum();
            (rss / (n - 2.0) / sxx).sqrt()
        }
        None => 0.0,
    };
    LineFit { slope, intercept, slope_std_error }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, 48)
}

/// Maximize `f` on `(lo, hi]`: grid pre-scan followed by golden-section
/// refinement in the bracket around the best grid point.
/// Returns `(argmax, max)`.
pub fn maximize<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, grid: usize) -> (f64, f64) {
    let grid = grid.max(3);
    let step = (hi - lo) / grid as f64;
    let mut best = (hi, f(hi));
    for i in 1..grid {
        let x = lo + step * i as f64;
        let y = f(x);
        if y > best.1 {
            best = (x, y);
        }
    }
    let mut a = (best.0 - step).max(lo + 1e-12 * (hi - lo));
    let mut b = (best.0 + step).min(hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    let y = f(x);
    if y > best.1 {
        (x, y)
    } else {
        best
    }
}

/// Bisection for a root of `f` in `[a, b]` with `f(a)` and `f(b)` of opposite
/// sign (or one of them zero).
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, f_tol: f64, x_tol: f64) -> f64 {
    let mut fa = f(a);
    if fa.abs() < f_tol {
        return a;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() < f_tol || (b - a) < x_tol {
            return m;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let xs: Vec<f64> = (1..=1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 500500.0);
    }

    #[test]
    fn compensated_sum_of_thirds() {
        let mut s = CompensatedSum::default();
        for _ in 0..3usize.pow(10) {
            s.add(1.0 / 3f64.powi(10));
        }
        assert!((s.value() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simpson_gaussian_mass() {
        let pdf = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let m = integrate(pdf, -12.0, 12.0, 1e-13);
        assert!((m - 1.0).abs() < 1e-11);
    }

    #[test]
    fn maximize_parabola() {
        let (x, y) = maximize(|q| -(q - 1.3).powi(2) + 2.0, 1.0, 2.0, 64);
        assert!((x - 1.3).abs() < 1e-6);
        assert!((y - 2.0).abs() < 1e-12);
    }

    #[test]
    fn maximize_endpoint() {
        let (x, y) = maximize(|q| (q - 1.0) / q, 1.0, 2.0, 64);
        assert_eq!(x, 2.0);
        assert_eq!(y, 0.5);
    }

    #[test]
    fn line_fit_exact() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 1.0).collect();
        let fit = fit_line(&xs, &ys, None);
        assert!((fit.slope - 0.5).abs() < 1e-14);
        assert!((fit.intercept + 1.0).abs() < 1e-14);
    }

    #[test]
    fn bisect_finds_four_thirds() {
        let r = bisect(|p| (p - 1.0) * (1.0 - 0.75 * p), 1.2, 2.0, 1e-14, 1e-14);
        assert!((r - 4.0 / 3.0).abs() < 1e-12);
    }
}
