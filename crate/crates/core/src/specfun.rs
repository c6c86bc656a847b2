//! Complex special functions: gamma and the parabolic cylinder family.
//!
//! Branch convention (global to the crate): principal logarithm with
//! `arg ∈ (−π, π]`; complex powers are `exp(p · ln z)` on that branch.
//!
//! # Parabolic cylinder functions
//!
//! `U(a, y)` is evaluated by three regimes chosen on `|y|`:
//!
//! * `|y| ≤ series_radius`: the Maclaurin form
//!   `U(a,y) = e^{−y²/4}(U(a,0)u₁(a,y) + U′(a,0)u₂(a,y))`.  Its two series grow
//!   like `e^{|y|²/2}` while `U` decays, so the radius must stay small.
//! * `|y| ≥ asymptotic_radius`: the Poincaré expansion
//!   `U(a,y) ~ e^{−y²/4} y^{−a−½} Σ (−1)^s (a+½)_{2s} / (s! (2y²)^s)`.
//! * in between: Taylor-series integration of Weber's equation
//!   `w″ = (y²/4 + a) w` inward along the ray through `y`, started from the
//!   asymptotic value.  Inward integration of the recessive solution is stable
//!   for `|arg y| ≤ π/4`, which covers every contour used by the crate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS_P: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn check_pole(z: Complex64) -> Result<()> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.round() {
        return Err(Error::GammaPole(z.re));
    }
    Ok(())
}

fn lanczos_ln_gamma(z: Complex64) -> Complex64 {
    let z = z - 1.0;
    let mut x = Complex64::from(LANCZOS_P[0]);
    for (i, &p) in LANCZOS_P.iter().enumerate().skip(1) {
        x += p / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

/// `ln Γ(z)`.  For `Re z ≥ ½` this is the principal branch continuous from the
/// positive real axis; for `Re z < ½` it is `ln π − ln sin(πz) − ln Γ(1−z)` with
/// principal logarithms (so only `exp` of the result is branch-independent).
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    if z.re >= 0.5 {
        Ok(lanczos_ln_gamma(z))
    } else {
        let s = (PI * z).sin();
        Ok(PI.ln() - s.ln() - lanczos_ln_gamma(1.0 - z))
    }
}

/// Complex gamma function via Lanczos plus reflection for `Re z < ½`.
pub fn gamma(z: Complex64) -> Result<Complex64> {
    check_pole(z)?;
    if z.re >= 0.5 {
        Ok(lanczos_ln_gamma(z).exp())
    } else {
        let s = (PI * z).sin();
        Ok(PI / (s * lanczos_ln_gamma(1.0 - z).exp()))
    }
}

/// `1/Γ(z)`, entire: zero at the poles of Γ.
pub fn rgamma(z: Complex64) -> Complex64 {
    match gamma(z) {
        Ok(g) => 1.0 / g,
        Err(_) => Complex64::new(0.0, 0.0),
    }
}

/// Principal power `z^p = exp(p ln z)`; `0^p = 0` for `Re p > 0`.
pub fn cpow(z: Complex64, p: Complex64) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    (p * z.ln()).exp()
}

/// Tuning of the parabolic cylinder evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PcOptions {
    /// Relative truncation tolerance for every series.
    pub tol: f64,
    /// Largest |y| evaluated by the Maclaurin series.
    pub series_radius: f64,
    /// Term cap for the Maclaurin series.
    pub max_terms: usize,
    /// Smallest |y| evaluated by the asymptotic expansion.
    pub asymptotic_radius: f64,
    /// Maximal Taylor step along a ray in the intermediate regime.
    pub step: f64,
}

impl Default for PcOptions {
    fn default() -> Self {
        Self {
            tol: 1e-15,
            series_radius: 4.5,
            max_terms: 500,
            asymptotic_radius: 12.0,
            step: 0.5,
        }
    }
}

/// Largest `|arg y|` accepted outside the series disc.
pub const PC_SECTOR: f64 = PI / 4.0 + 0.05;

/// Evaluation bundle for the parabolic cylinder family at `(a, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PCValue {
    pub a: Complex64,
    pub y: Complex64,
    /// `U(a, y)`.
    pub u: Complex64,
    /// `A(a, y) = e^{y²/4} U(a, y)` (may be non-finite for large |y|).
    pub a_env: Complex64,
    /// `B(a, y) = A(a+1, y) A(a, y)`.
    pub b_env: Complex64,
}

/// `(U(a,0), U′(a,0))` from the gamma-function closed forms.
pub fn pc_at_zero(a: Complex64) -> Result<(Complex64, Complex64)> {
    let sqrt_pi = PI.sqrt();
    let two = Complex64::from(2.0);
    let u0 = sqrt_pi * rgamma(0.75 + a / 2.0) / cpow(two, a / 2.0 + 0.25);
    let du0 = -sqrt_pi * rgamma(0.25 + a / 2.0) / cpow(two, a / 2.0 - 0.25);
    Ok((u0, du0))
}

/// Maclaurin evaluation of `A(a,y)` and `dA/dy`.
fn series_envelope(
    a: Complex64,
    y: Complex64,
    opts: &PcOptions,
) -> Result<(Complex64, Complex64)> {
    let (u0, du0) = pc_at_zero(a)?;
    let y2 = y * y;
    // u1 = Σ c_k y^{2k}/(2k)!,  u2 = Σ d_k y^{2k+1}/(2k+1)!
    let mut t1 = Complex64::from(1.0); // c_k y^{2k}/(2k)!
    let mut t2 = y; // d_k y^{2k+1}/(2k+1)!
    let mut u1 = t1;
    let mut u2 = t2;
    let mut du1 = Complex64::new(0.0, 0.0);
    let mut du2 = Complex64::from(1.0);
    let mut k = 0usize;
    loop {
        k += 1;
        if k > opts.max_terms {
            return Err(Error::SeriesNonConvergence {
                terms: k,
                last: t1.norm().max(t2.norm()),
            });
        }
        let kf = k as f64;
        // derivative terms: d/dy [c y^{2k}/(2k)!] = c y^{2k-1}/(2k-1)! = term·(2k)/y
        t1 *= (a + 0.5 + 2.0 * (kf - 1.0)) * y2 / ((2.0 * kf - 1.0) * (2.0 * kf));
        t2 *= (a + 1.5 + 2.0 * (kf - 1.0)) * y2 / ((2.0 * kf) * (2.0 * kf + 1.0));
        u1 += t1;
        u2 += t2;
        if y != Complex64::new(0.0, 0.0) {
            du1 += t1 * (2.0 * kf) / y;
            du2 += t2 * (2.0 * kf + 1.0) / y;
        }
        let small = |t: Complex64, s: Complex64| t.norm() <= opts.tol * s.norm().max(1e-300);
        if k >= 2 && small(t1, u1) && small(t2, u2) {
            break;
        }
    }
    Ok((u0 * u1 + du0 * u2, u0 * du1 + du0 * du2))
}

/// Maclaurin-series evaluation within the configured radius.
pub fn pc_series(a: Complex64, y: Complex64, opts: &PcOptions) -> Result<PCValue> {
    if y.norm() > opts.series_radius {
        return Err(Error::SeriesRadius {
            abs: y.norm(),
            radius: opts.series_radius,
        });
    }
    let (env, _) = series_envelope(a, y, opts)?;
    let (env1, _) = series_envelope(a + 1.0, y, opts)?;
    let u = (-y * y / 4.0).exp() * env;
    Ok(PCValue {
        a,
        y,
        u,
        a_env: env,
        b_env: env1 * env,
    })
}

/// Poincaré asymptotic expansion of `U(a,y)`, valid for large |y|, `|arg y| < 3π/4`.
pub fn pc_asymptotic(a: Complex64, y: Complex64, opts: &PcOptions) -> Result<Complex64> {
    let inv = 1.0 / (2.0 * y * y);
    let mut term = Complex64::from(1.0);
    let mut sum = term;
    let mut prev = f64::INFINITY;
    for s in 1..200 {
        let sf = s as f64;
        term *= -(a + 0.5 + 2.0 * sf - 2.0) * (a + 0.5 + 2.0 * sf - 1.0) * inv / sf;
        let m = term.norm();
        if m > prev {
            // Divergent tail reached before the tolerance.
            return Err(Error::SeriesNonConvergence {
                terms: s,
                last: m,
            });
        }
        sum += term;
        prev = m;
        if m <= opts.tol * sum.norm() {
            return Ok((-y * y / 4.0 - (a + 0.5) * y.ln()).exp() * sum);
        }
    }
    Err(Error::SeriesNonConvergence {
        terms: 200,
        last: prev,
    })
}

/// One Taylor step of `w″ = (y²/4 + a) w` from `y0` to `y0 + h`.
fn taylor_step(
    a: Complex64,
    y0: Complex64,
    w: Complex64,
    dw: Complex64,
    h: Complex64,
    tol: f64,
) -> (Complex64, Complex64) {
    // With w = Σ c_n x^n about y0:
    //   c_{n+2}(n+2)(n+1) = (y0²/4 + a) c_n + (y0/2) c_{n−1} + ¼ c_{n−2}.
    let p0 = y0 * y0 / 4.0 + a;
    let p1 = y0 / 2.0;
    let mut c: Vec<Complex64> = Vec::with_capacity(64);
    c.push(w);
    c.push(dw);
    let mut val = w + dw * h;
    let mut der = dw;
    let mut hpow = h;
    let mut quiet = 0;
    for m in 2..400usize {
        let n = m - 2;
        let mut s = p0 * c[n];
        if n >= 1 {
            s += p1 * c[n - 1];
        }
        if n >= 2 {
            s += 0.25 * c[n - 2];
        }
        let cm = s / ((m * (m - 1)) as f64);
        c.push(cm);
        let hm1 = hpow;
        hpow *= h;
        let tv = cm * hpow;
        let td = cm * (m as f64) * hm1;
        val += tv;
        der += td;
        if tv.norm() <= tol * val.norm() && td.norm() <= tol * der.norm() {
            quiet += 1;
            if quiet >= 3 {
                break;
            }
        } else {
            quiet = 0;
        }
    }
    (val, der)
}

/// `U(a,y)` and `∂U/∂y` by the hybrid series / Taylor / asymptotic evaluator.
pub fn pc_u_with_derivative(
    a: Complex64,
    y: Complex64,
    opts: &PcOptions,
) -> Result<(Complex64, Complex64)> {
    let r = y.norm();
    if r <= opts.series_radius {
        let (env, denv) = series_envelope(a, y, opts)?;
        let e = (-y * y / 4.0).exp();
        return Ok((e * env, e * (denv - y / 2.0 * env)));
    }
    if y.arg().abs() > PC_SECTOR {
        return Err(Error::Sector {
            y: y.to_string(),
            max_arg: PC_SECTOR,
        });
    }
    let asym = |yy: Complex64| -> Result<(Complex64, Complex64)> {
        let u = pc_asymptotic(a, yy, opts)?;
        let u1 = pc_asymptotic(a + 1.0, yy, opts)?;
        Ok((u, -yy / 2.0 * u - (a + 0.5) * u1))
    };
    if r >= opts.asymptotic_radius {
        return asym(y);
    }
    let start = y * (opts.asymptotic_radius / r);
    let (mut w, mut dw) = asym(start)?;
    let n = ((opts.asymptotic_radius - r) / opts.step).ceil().max(1.0) as usize;
    let h = (y - start) / n as f64;
    let mut pos = start;
    for _ in 0..n {
        let (nw, ndw) = taylor_step(a, pos, w, dw, h, opts.tol * 1e-2);
        w = nw;
        dw = ndw;
        pos += h;
    }
    Ok((w, dw))
}

/// `U(a,y)` by the hybrid evaluator.
pub fn pc_u(a: Complex64, y: Complex64, opts: &PcOptions) -> Result<Complex64> {
    Ok(pc_u_with_derivative(a, y, opts)?.0)
}

/// Full [`PCValue`] bundle by the hybrid evaluator.
pub fn pc_value(a: Complex64, y: Complex64, opts: &PcOptions) -> Result<PCValue> {
    if y.norm() <= opts.series_radius {
        return pc_series(a, y, opts);
    }
    let u = pc_u(a, y, opts)?;
    let u1 = pc_u(a + 1.0, y, opts)?;
    let e = (y * y / 4.0).exp();
    Ok(PCValue {
        a,
        y,
        u,
        a_env: e * u,
        b_env: e * e * u * u1,
    })
}
