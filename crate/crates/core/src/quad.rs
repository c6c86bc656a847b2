//! Quadrature and grid utilities shared by every numerical module.
//!
//! Everything here works on complex-valued integrands; real integrands are
//! handled by wrapping them in `Complex64::from`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F>(&self, a: f64, b: f64, mut f: F) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        self.mapped(a, b).map(|(x, w)| f(x) * w).sum()
    }

    /// Composite rule over the panels delimited by `breaks`.
    pub fn integrate_panels<F>(&self, breaks: &[f64], mut f: F) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        breaks
            .windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

// Gauss–Kronrod 10/21 abscissae and weights (QUADPACK qk21).
const XGK21: [f64; 11] = [
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
const WGK21: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_208_980_223_618,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];
const WG10: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// One Gauss–Kronrod 21-point panel: (Kronrod value, |Kronrod − Gauss|).
pub fn gk21<F>(a: f64, b: f64, f: &mut F) -> (Complex64, f64)
where
    F: FnMut(f64) -> Complex64,
{
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let fc = f(mid);
    let mut kron = fc * WGK21[10];
    let mut gauss = Complex64::new(0.0, 0.0);
    for j in 0..10 {
        let dx = half * XGK21[j];
        let s = f(mid - dx) + f(mid + dx);
        kron += s * WGK21[j];
        if j % 2 == 1 {
            gauss += s * WG10[j / 2];
        }
    }
    let kron = kron * half;
    let gauss = gauss * half;
    (kron, (kron - gauss).norm())
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
        }
    }
}

impl AdaptiveOptions {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub subdivisions: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Complex64,
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

/// Globally adaptive Gauss–Kronrod quadrature of a complex integrand over
/// `[a, b]`, with optional interior breakpoints (sorted or not, points outside
/// `(a, b)` are ignored).
pub fn adaptive<F>(
    mut f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    opts: AdaptiveOptions,
) -> Result<QuadResult>
where
    F: FnMut(f64) -> Complex64,
{
    if a == b {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            subdivisions: 0,
        });
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let mut pts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&p| p > lo && p < hi)
        .collect();
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    let mut edges = Vec::with_capacity(pts.len() + 2);
    edges.push(lo);
    edges.extend(pts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = Complex64::new(0.0, 0.0);
    let mut err = 0.0;
    for w in edges.windows(2) {
        let (value, error) = gk21(w[0], w[1], &mut f);
        total += value;
        err += error;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    let mut subdivisions = heap.len();
    while err > opts.abs_tol.max(opts.rel_tol * total.norm()) {
        if subdivisions >= opts.max_subdivisions {
            return Err(Error::Quadrature {
                tol: opts.abs_tol.max(opts.rel_tol * total.norm()),
                estimate: err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap holds at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel cannot be split further in floating point.
            return Err(Error::Quadrature {
                tol: opts.abs_tol.max(opts.rel_tol * total.norm()),
                estimate: err,
                subdivisions,
            });
        }
        let (v1, e1) = gk21(worst.a, mid, &mut f);
        let (v2, e2) = gk21(mid, worst.b, &mut f);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
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
        subdivisions += 1;
    }
    // Re-sum to shed the drift of the running total.
    let value: Complex64 = heap.iter().map(|p| p.value).sum();
    let error: f64 = heap.iter().map(|p| p.error).sum();
    Ok(QuadResult {
        value: value * sign,
        error,
        subdivisions,
    })
}

/// Uniform 1D grid description.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct UniformAxis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl UniformAxis {
    pub fn new(start: f64, end: f64, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {len}")));
        }
        if !(end > start) {
            return Err(Error::InvalidGrid(format!("empty range [{start}, {end}]")));
        }
        Ok(Self {
            start,
            step: (end - start) / (len - 1) as f64,
            len,
        })
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.len - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(|i| self.point(i))
    }

    pub fn contains(&self, x: f64) -> bool {
        let tol = 1e-12 * self.step;
        x >= self.start - tol && x <= self.end() + tol
    }

    /// Cell index and local coordinate `s ∈ [0, 1]` of `x`.
    pub fn locate(&self, x: f64) -> Result<(usize, f64)> {
        if !self.contains(x) {
            return Err(Error::OutOfGrid {
                value: x,
                lo: self.start,
                hi: self.end(),
            });
        }
        let pos = ((x - self.start) / self.step).clamp(0.0, (self.len - 1) as f64);
        let i = (pos.floor() as usize).min(self.len - 2);
        Ok((i, pos - i as f64))
    }
}

/// Cubic Hermite interpolation of `(values, derivatives)` sampled on a uniform axis.
/// Returns the value and the first derivative.
pub fn hermite<T>(axis: &UniformAxis, values: &[T], derivs: &[T], x: f64) -> Result<(T, T)>
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let (i, s) = axis.locate(x)?;
    let h = axis.step;
    let (v0, v1, d0, d1) = (values[i], values[i + 1], derivs[i], derivs[i + 1]);
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = v0 * h00 + d0 * (h10 * h) + v1 * h01 + d1 * (h11 * h);
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let deriv = v0 * dh00 + d0 * dh10 + v1 * dh01 + d1 * dh11;
    Ok((value, deriv))
}

/// Fourth-order finite-difference first and second derivatives on a uniform grid
/// (centred in the interior, one-sided five-point stencils at the edges).
pub fn five_point_derivatives<T>(values: &[T], h: f64) -> (Vec<T>, Vec<T>)
where
    T: Copy + Add<Output = T> + Sub<Output = T> + Mul<f64, Output = T>,
{
    let n = values.len();
    assert!(n >= 5, "five-point stencils need at least five samples");
    let f = values;
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    let c1 = 1.0 / (12.0 * h);
    let c2 = 1.0 / (12.0 * h * h);
    for i in 0..n {
        let (a, b) = match i {
            0 => (
                (f[0] * -25.0 + f[1] * 48.0 - f[2] * 36.0 + f[3] * 16.0 - f[4] * 3.0) * c1,
                (f[0] * 35.0 - f[1] * 104.0 + f[2] * 114.0 - f[3] * 56.0 + f[4] * 11.0) * c2,
            ),
            1 => (
                (f[0] * -3.0 - f[1] * 10.0 + f[2] * 18.0 - f[3] * 6.0 + f[4]) * c1,
                (f[0] * 11.0 - f[1] * 20.0 + f[2] * 6.0 + f[3] * 4.0 - f[4]) * c2,
            ),
            _ if i == n - 2 => {
                let g = |k: usize| f[n - 1 - k];
                (
                    (g(0) * -3.0 - g(1) * 10.0 + g(2) * 18.0 - g(3) * 6.0 + g(4)) * (-c1),
                    (g(0) * 11.0 - g(1) * 20.0 + g(2) * 6.0 + g(3) * 4.0 - g(4)) * c2,
                )
            }
            _ if i == n - 1 => {
                let g = |k: usize| f[n - 1 - k];
                (
                    (g(0) * -25.0 + g(1) * 48.0 - g(2) * 36.0 + g(3) * 16.0 - g(4) * 3.0)
                        * (-c1),
                    (g(0) * 35.0 - g(1) * 104.0 + g(2) * 114.0 - g(3) * 56.0 + g(4) * 11.0)
                        * c2,
                )
            }
            _ => (
                (f[i - 2] - f[i - 1] * 8.0 + f[i + 1] * 8.0 - f[i + 2]) * c1,
                (f[i - 2] * -1.0 + f[i - 1] * 16.0 - f[i] * 30.0 + f[i + 1] * 16.0 - f[i + 2])
                    * c2,
            ),
        };
        d1.push(a);
        d2.push(b);
    }
    (d1, d2)
}

/// Ordinary least squares of `y` on `x`: (slope, intercept, r²).
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(&a, &b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|&v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(&a, &b)| {
            let r = b - (intercept + slope * a);
            r * r
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(12);
        for k in 0..24u32 {
            let got = rule.integrate(-1.0, 2.0, |x| Complex64::from(x.powi(k as i32)));
            let want = (2f64.powi(k as i32 + 1) - (-1f64).powi(k as i32 + 1)) / (k as f64 + 1.0);
            assert!((got.re - want).abs() < 1e-12 * want.abs().max(1.0), "k={k}");
        }
        let s: f64 = rule.weights().iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn kronrod_exact_to_degree_31() {
        for k in [0, 5, 19, 31] {
            let (v, _) = gk21(0.0, 1.0, &mut |x: f64| Complex64::from(x.powi(k)));
            assert!((v.re - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 ln x dx = -1
        let r = adaptive(
            |x| Complex64::from(x.ln()),
            0.0,
            1.0,
            &[],
            AdaptiveOptions::with_tol(1e-13, 1e-13),
        )
        .unwrap();
        assert!((r.value.re + 1.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_reversed_limits_negate() {
        let f = |x: f64| Complex64::new(x.cos(), x.sin());
        let a = adaptive(f, 0.0, 2.0, &[], AdaptiveOptions::default()).unwrap();
        let b = adaptive(f, 2.0, 0.0, &[], AdaptiveOptions::default()).unwrap();
        assert!((a.value + b.value).norm() < 1e-14);
    }

    #[test]
    fn hermite_reproduces_cubics() {
        let axis = UniformAxis::new(-1.0, 1.0, 11).unwrap();
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x * x * x;
        let dp = |x: f64| -2.0 + x + 9.0 * x * x;
        let v: Vec<f64> = axis.points().map(p).collect();
        let d: Vec<f64> = axis.points().map(dp).collect();
        for &x in &[-0.93, -0.2, 0.0, 0.31, 0.999] {
            let (val, der) = hermite(&axis, &v, &d, x).unwrap();
            assert!((val - p(x)).abs() < 1e-13);
            assert!((der - dp(x)).abs() < 1e-12);
        }
        assert!(hermite(&axis, &v, &d, 1.5).is_err());
    }

    #[test]
    fn five_point_stencils_exact_for_quartics() {
        let h = 0.1;
        let xs: Vec<f64> = (0..9).map(|i| i as f64 * h).collect();
        let f: Vec<f64> = xs.iter().map(|x| x.powi(4) - x * x).collect();
        let (d1, d2) = five_point_derivatives(&f, h);
        for (i, x) in xs.iter().enumerate() {
            assert!((d1[i] - (4.0 * x.powi(3) - 2.0 * x)).abs() < 1e-10, "d1 at {i}");
            assert!((d2[i] - (12.0 * x * x - 2.0)).abs() < 1e-8, "d2 at {i}");
        }
    }

    #[test]
    fn linear_fit_recovers_power_law() {
        let ts = [25.0f64, 50.0, 100.0, 200.0, 400.0];
        let x: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        let y: Vec<f64> = ts.iter().map(|t| (3.0 * t.powf(-0.75)).ln()).collect();
        let (slope, intercept, r2) = linear_fit(&x, &y);
        assert!((slope + 0.75).abs() < 1e-12);
        assert!((intercept - 3f64.ln()).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
    }
}
