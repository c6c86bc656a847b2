//! The linear Schrödinger equation `i q_t + q_xx = 0`: exact solution,
//! Stokes split and higher-order long-time expansion.
//!
//! Conventions:
//!
//! * Fourier transform `q̂₀(ξ) = ∫ q₀(x) e^{2ixξ} dx`, inverse
//!   `q₀(x) = (1/π) ∫ q̂₀(z) e^{−2ixz} dz`.
//! * Phase `θ(z; z₀) = 2z² − 4z z₀` with `z₀ = −x/(4t)`, so that
//!   `q(x, t) = (1/π) ∫ q̂₀(z) e^{−2itθ(z; z₀)} dz = (1/π) ∫ q̂₀(z) e^{−2ixz − 4itz²} dz`
//!   solves the equation and `−2itθ = −4it(z − z₀)² + 4itz₀²`.
//! * Gaussian reference: `q₀ = e^{−x²}` gives `q̂₀ = √π e^{−ξ²}` and
//!   `q(x, t) = e^{−x²/(1+4it)}/√(1+4it)`.
//!
//! The expansion has the shape
//!
//! `q ≈ t^{−1/2} q̂₀(z₀) e^{−iπ/4} e^{ix²/4t}/(2√π)
//!      + Σ_k [t^{−k} q̂₀^{(2k−1)}(z₀) 2iβ_k + t^{−(2k+1)/2} q̂₀^{(2k)}(z₀) 2iγ_k] e^{4itz₀²}`.
//!
//! Two coefficient sets are registered.  `printed` evaluates the φ-integral
//! definitions of `β_k, γ_k` (each by two independent quadratures).
//! `stationary-phase` is the exact Taylor expansion of the Fourier integral
//! about `z₀`, `(1/π) Σ_m q̂₀^{(2m)}(z₀)/(2m)! · Γ(m+½)(4it)^{−(m+½)} e^{4itz₀²}`:
//! no odd derivatives and `2iγ_k = Γ(k+½)/((2k)! π (4i)^{k+½})`.
//! The printed constants differ from these, so the printed series stops
//! improving after its first correction.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};
use std::path::Path;
use std::sync::{Arc, RwLock};

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::alpha::{sector_quadrature, OracleOptions};
use crate::error::{Error, Result};
use crate::grid::ComplexGrid1D;
use crate::quad::{adaptive, AdaptiveOptions, GaussLegendre, UniformAxis};
use crate::registry::{Named, Registry};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Relative edge size of `q₀` accepted by the transforms.
pub const DECAY: f64 = 1e-10;

/// `q̂₀(ξ) = ∫ q₀(x) e^{2ixξ} dx` by the trapezoidal rule (spectrally
/// accurate for smooth data that has decayed at the grid ends).
pub fn fourier_hat(q0: &ComplexGrid1D, xi: f64) -> Result<Complex64> {
    fourier_moment(q0, xi, 0)
}

/// `q̂₀^{(j)}(ξ) = ∫ (2ix)^j q₀(x) e^{2ixξ} dx`.
pub fn fourier_moment(q0: &ComplexGrid1D, xi: f64, j: u32) -> Result<Complex64> {
    Ok(fourier_moments(q0, xi, j)?[j as usize])
}

/// `q̂₀^{(j)}(ξ)` for `j = 0..=max_order` in one pass.
pub fn fourier_moments(q0: &ComplexGrid1D, xi: f64, max_order: u32) -> Result<Vec<Complex64>> {
    q0.check_decay(DECAY)?;
    let ax = q0.axis();
    let mut out = vec![ZERO; max_order as usize + 1];
    for (i, v) in q0.vals().iter().enumerate() {
        let x = ax.point(i);
        let mut term = *v * Complex64::from_polar(1.0, 2.0 * x * xi);
        let m = 2.0 * I * x;
        for o in out.iter_mut() {
            *o += term;
            term *= m;
        }
    }
    for o in out.iter_mut() {
        *o *= ax.step;
    }
    Ok(out)
}

/// Exact solution by Fourier-multiplier evolution on a zero-padded periodic box.
///
/// The box is wide enough that the part of the spectrum above
/// `tol · max|spectrum|` cannot travel around it before `t_max` (group speed
/// `2|k|` for the multiplier `e^{−ik²t}`).
pub struct LinearOracle {
    x_start: f64,
    dx: f64,
    len: usize,
    /// `(k, c_k)` for the retained modes, `q(x, t) = Σ c_k e^{ik(x − x_start) − ik²t}`.
    modes: Vec<(f64, Complex64)>,
    /// All modes in FFT order (for whole-field evolution).
    spectrum: Vec<Complex64>,
    t_max: f64,
}

impl LinearOracle {
    pub fn new(q0: &ComplexGrid1D, t_max: f64, tol: f64) -> Result<Self> {
        if !(t_max >= 0.0) || !(tol > 0.0) {
            return Err(Error::Config(format!(
                "oracle needs t_max ≥ 0 and tol > 0 (got {t_max}, {tol})"
            )));
        }
        q0.check_decay(DECAY)?;
        let dx = q0.dx();
        let n0 = q0.len().next_power_of_two();
        // Spectral extent from an unpadded transform.
        let probe = periodic_spectrum(q0.vals(), n0);
        let kmax_mag = probe.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mut k_tol = 0.0f64;
        for (j, c) in probe.iter().enumerate() {
            if c.norm() > tol * kmax_mag {
                k_tol = k_tol.max(wavenumber(j, n0, dx).abs());
            }
        }
        let (lo, hi) = (q0.axis().start, q0.axis().end());
        let width = (hi - lo) + 4.0 * k_tol * t_max + 20.0;
        let len = ((width / dx).ceil() as usize).next_power_of_two().max(n0);
        let offset = (len - q0.len()) / 2;
        let x_start = lo - offset as f64 * dx;
        let mut buf = vec![ZERO; len];
        buf[offset..offset + q0.len()].copy_from_slice(q0.vals());
        let spectrum = periodic_spectrum(&buf, len);
        let cmax = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let modes = spectrum
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-3 * tol * cmax)
            .map(|(j, c)| (wavenumber(j, len, dx), *c / len as f64))
            .collect();
        Ok(Self {
            x_start,
            dx,
            len,
            modes,
            spectrum,
            t_max,
        })
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Half-width of the periodic box.
    pub fn box_half_width(&self) -> f64 {
        0.5 * self.len as f64 * self.dx
    }

    /// `q(x, t)` by direct summation over the retained modes.
    pub fn at(&self, x: f64, t: f64) -> Result<Complex64> {
        if !(t >= 0.0 && t <= self.t_max * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "t = {t} outside the oracle range [0, {}]",
                self.t_max
            )));
        }
        let y = x - self.x_start;
        Ok(self
            .modes
            .iter()
            .map(|&(k, c)| c * Complex64::from_polar(1.0, k * y - k * k * t))
            .sum())
    }

    /// Whole periodic field at time `t` (`x_j = x_start + j dx`).
    pub fn field(&self, t: f64) -> ComplexGrid1D {
        let mut planner = FftPlanner::new();
        let ifft = planner.plan_fft_inverse(self.len);
        let mut buf: Vec<Complex64> = self
            .spectrum
            .iter()
            .enumerate()
            .map(|(j, c)| {
                let k = wavenumber(j, self.len, self.dx);
                c * Complex64::from_polar(1.0 / self.len as f64, -k * k * t)
            })
            .collect();
        ifft.process(&mut buf);
        let end = self.x_start + (self.len - 1) as f64 * self.dx;
        UniformAxis::new(self.x_start, end, self.len)
            .and_then(|axis| ComplexGrid1D::new(axis, buf))
            .expect("uniform periodic axis")
    }
}

fn periodic_spectrum(vals: &[Complex64], n: usize) -> Vec<Complex64> {
    let mut buf = vals.to_vec();
    buf.resize(n, ZERO);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    buf
}

fn wavenumber(j: usize, n: usize, dx: f64) -> f64 {
    let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
    2.0 * PI * m / (n as f64 * dx)
}

/// `(1/π) ∫ q̂₀(z) e^{−2ixz − 4itz²} dz` by adaptive quadrature, with `q̂₀`
/// from [`fourier_hat`] — the independent check on [`LinearOracle`].
pub fn exact_by_quadrature(q0: &ComplexGrid1D, x: f64, t: f64, tol: f64) -> Result<Complex64> {
    q0.check_decay(DECAY)?;
    // Truncate where |q̂₀| is negligible.
    let peak = (0..=400)
        .map(|j| fourier_hat(q0, -20.0 + 0.1 * j as f64).map(|v| v.norm()))
        .collect::<Result<Vec<_>>>()?;
    let top = peak.iter().cloned().fold(0.0, f64::max);
    let mut zlo = 20.0f64;
    let mut zhi = -20.0f64;
    for (j, p) in peak.iter().enumerate() {
        if *p > 1e-3 * tol * top {
            let z = -20.0 + 0.1 * j as f64;
            zlo = zlo.min(z - 0.1);
            zhi = zhi.max(z + 0.1);
        }
    }
    if zlo >= zhi {
        return Ok(ZERO);
    }
    let n_breaks = ((zhi - zlo) * (8.0 * t + 2.0 * x.abs() + 1.0)).ceil().min(20000.0) as usize;
    let breaks: Vec<f64> = (1..n_breaks)
        .map(|j| zlo + (zhi - zlo) * j as f64 / n_breaks as f64)
        .collect();
    let mut err = None;
    let r = adaptive(
        |z| match fourier_hat(q0, z) {
            Ok(h) => h * Complex64::from_polar(1.0 / PI, -2.0 * x * z - 4.0 * t * z * z),
            Err(e) => {
                err.get_or_insert(e);
                ZERO
            }
        },
        zlo,
        zhi,
        &breaks,
        AdaptiveOptions {
            abs_tol: tol * 1e-2,
            rel_tol: tol,
            max_subdivisions: 4 * n_breaks + 4000,
        },
    )?;
    if let Some(e) = err {
        return Err(e);
    }
    Ok(r.value)
}

/// `(2n − 1)!!` with `(−1)!! = 1` (and `(−3)!! := 1`, the value used at `k = 1`).
pub fn double_factorial(n: i64) -> f64 {
    let mut acc = 1.0;
    let mut m = n;
    while m > 1 {
        acc *= m as f64;
        m -= 2;
    }
    acc
}

/// `Γ(k + ½) = (2k − 1)!! √π / 2^k`.
pub fn half_integer_gamma(k: usize) -> f64 {
    double_factorial(2 * k as i64 - 1) * PI.sqrt() / 2f64.powi(k as i32)
}

/// Expansion constants for `k = 1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaGamma {
    pub set: String,
    pub beta: Vec<Complex64>,
    pub gamma: Vec<Complex64>,
    /// Values from the second quadrature method (equal to the first for
    /// closed-form sets).
    pub beta_check: Vec<Complex64>,
    pub gamma_check: Vec<Complex64>,
    /// `max_k max(|β_k − β_k′|, |γ_k − γ_k′|)`.
    pub method_disagreement: f64,
}

/// Strategy producing `β_k, γ_k`.
pub trait CoefficientSet: Named + Send + Sync {
    fn coefficients(&self, n: usize, tol: f64) -> Result<BetaGamma>;
}

fn sqrt_pi_over_i() -> Complex64 {
    Complex64::from_polar(PI.sqrt(), -FRAC_PI_4)
}

/// Integrands of the φ-integral definitions, split as
/// `(regular part, part carrying 1/√cos 2φ)`.
fn beta_integrand(k: usize, phi: f64) -> Complex64 {
    let d = Complex64::from_polar(8.0, 2.0 * phi + PI / 2.0).powi(k as i32);
    let c = phi.cos();
    let first = 0.5 * (2.0 * phi).cos() * c.powi(2 * k as i32 - 2) / double_factorial(2 * k as i64 - 3);
    let second = I * Complex64::from_polar(1.0, phi) * (2.0 * phi).sin() * c.powi(2 * k as i32)
        / double_factorial(2 * k as i64);
    (first - second) / d
}

/// `γ_k` integrand multiplied by `√cos 2φ` (smooth on the closed interval).
fn gamma_integrand_times_root(k: usize, phi: f64) -> Complex64 {
    let d = Complex64::from_polar(8.0, 2.0 * phi + PI / 2.0).powi(k as i32);
    let c = phi.cos();
    let s = sqrt_pi_over_i();
    let first = 0.5 * s * (2.0 * phi).cos() * c.powi(2 * k as i32 - 2) / 2.0;
    let second = I * Complex64::from_polar(1.0, phi) * (2.0 * phi).sin() * c.powi(2 * k as i32 - 1) * s
        / (2.0 * double_factorial(2 * k as i64 - 1));
    (first - second) / d
}

/// The φ-integral definitions, evaluated by two methods:
/// adaptive Gauss–Kronrod directly in `φ` (the `1/√cos 2φ` endpoint
/// singularity of `γ_k` is integrable), and Gauss–Legendre after the
/// substitution `cos 2φ = s²` on `[−π/4, −π/8]`, which removes it.
pub struct Printed {
    cache: RwLock<HashMap<(usize, u64), BetaGamma>>,
}

impl Default for Printed {
    fn default() -> Self {
        Self {
            cache: RwLock::new(HashMap::new()),
        }
    }
}

impl Named for Printed {
    fn name(&self) -> &str {
        "printed"
    }
    fn description(&self) -> &str {
        "φ-integral definitions of β_k, γ_k, two-method quadrature"
    }
}

impl Printed {
    fn adaptive_value(k: usize, gamma: bool, tol: f64) -> Result<Complex64> {
        let opts = AdaptiveOptions {
            abs_tol: tol * 1e-2,
            rel_tol: tol * 1e-2,
            max_subdivisions: 4000,
        };
        // Integrate in w = φ + π/4 so that cos 2φ = sin 2w keeps full relative
        // precision next to the singular endpoint.
        let r = adaptive(
            |w| {
                let phi = w - FRAC_PI_4;
                if gamma {
                    gamma_integrand_times_root(k, phi) / (2.0 * w).sin().sqrt()
                } else {
                    beta_integrand(k, phi)
                }
            },
            0.0,
            FRAC_PI_4,
            &[],
            opts,
        )?;
        Ok(r.value)
    }

    fn substitution_value(k: usize, gamma: bool) -> Complex64 {
        let rule = GaussLegendre::new(30);
        let f = |phi: f64| {
            if gamma {
                gamma_integrand_times_root(k, phi) / (2.0 * phi).cos().sqrt()
            } else {
                beta_integrand(k, phi)
            }
        };
        // φ ∈ [−π/4, −π/8]: φ = −½ arccos(s²), dφ = s/√(1 − s⁴) ds, s ∈ [0, √cos(π/4)].
        let s_hi = (FRAC_PI_4.cos()).sqrt();
        let near = rule.integrate_panels(&[0.0, 0.25 * s_hi, 0.5 * s_hi, s_hi], |s| {
            let phi = -0.5 * (s * s).acos();
            let jac = s / (1.0 - s.powi(4)).sqrt();
            if gamma {
                // 1/√cos 2φ = 1/s cancels the s in the Jacobian.
                gamma_integrand_times_root(k, phi) / (1.0 - s.powi(4)).sqrt()
            } else {
                f(phi) * jac
            }
        });
        let far = rule.integrate_panels(&[-FRAC_PI_8, -FRAC_PI_8 / 2.0, 0.0], f);
        near + far
    }
}

impl CoefficientSet for Printed {
    fn coefficients(&self, n: usize, tol: f64) -> Result<BetaGamma> {
        if n == 0 {
            return Err(Error::Config("expansion order must be ≥ 1".into()));
        }
        let key = (n, tol.to_bits());
        if let Some(v) = self.cache.read().expect("cache lock").get(&key) {
            return Ok(v.clone());
        }
        let mut out = BetaGamma {
            set: self.name().into(),
            beta: vec![],
            gamma: vec![],
            beta_check: vec![],
            gamma_check: vec![],
            method_disagreement: 0.0,
        };
        for k in 1..=n {
            let b = Self::adaptive_value(k, false, tol)?;
            let g = Self::adaptive_value(k, true, tol)?;
            let b2 = Self::substitution_value(k, false);
            let g2 = Self::substitution_value(k, true);
            out.method_disagreement = out
                .method_disagreement
                .max((b - b2).norm())
                .max((g - g2).norm());
            out.beta.push(b);
            out.gamma.push(g);
            out.beta_check.push(b2);
            out.gamma_check.push(g2);
        }
        self.cache
            .write()
            .expect("cache lock")
            .insert(key, out.clone());
        Ok(out)
    }
}

/// Exact stationary-phase constants: `β_k = 0`,
/// `γ_k = Γ(k+½)/((2k)! π (4i)^{k+½}) / (2i)`.
pub struct StationaryPhase;

impl Named for StationaryPhase {
    fn name(&self) -> &str {
        "stationary-phase"
    }
    fn description(&self) -> &str {
        "Taylor expansion of the Fourier integral about z₀ (closed form)"
    }
}

impl StationaryPhase {
    pub fn gamma_k(k: usize) -> Complex64 {
        let kf = k as f64;
        let fact: f64 = (1..=2 * k).map(|j| j as f64).product();
        // (4i)^{−(k+½)} = 4^{−(k+½)} e^{−iπ(k+½)/2}.
        let mag = half_integer_gamma(k) / (fact * PI * 4f64.powf(kf + 0.5));
        Complex64::from_polar(mag, -PI / 2.0 * (kf + 0.5)) / (2.0 * I)
    }
}

impl CoefficientSet for StationaryPhase {
    fn coefficients(&self, n: usize, _tol: f64) -> Result<BetaGamma> {
        if n == 0 {
            return Err(Error::Config("expansion order must be ≥ 1".into()));
        }
        let beta = vec![ZERO; n];
        let gamma: Vec<Complex64> = (1..=n).map(Self::gamma_k).collect();
        Ok(BetaGamma {
            set: self.name().into(),
            beta_check: beta.clone(),
            gamma_check: gamma.clone(),
            beta,
            gamma,
            method_disagreement: 0.0,
        })
    }
}

/// Registered coefficient sets; `printed` is the default.
pub fn coefficient_registry() -> Registry<dyn CoefficientSet> {
    Registry::new("linear coefficient set")
        .with(Arc::new(Printed::default()) as Arc<dyn CoefficientSet>)
        .with(Arc::new(StationaryPhase) as Arc<dyn CoefficientSet>)
}

/// `β_k, γ_k` of the φ-integral definitions (the default set).
pub fn beta_gamma_constants(n: usize, tol: f64) -> Result<BetaGamma> {
    Printed::default().coefficients(n, tol)
}

/// Inputs of the `n`-term expansion at one stationary point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearExpansion {
    pub n_terms: usize,
    pub beta_coeffs: Vec<Complex64>,
    pub gamma_coeffs: Vec<Complex64>,
    /// `q̂₀^{(j)}(z₀)` for `j = 0..=2n`.
    pub qhat_derivs: Vec<Complex64>,
    pub z0: f64,
    pub coefficient_set: String,
}

impl LinearExpansion {
    /// Expansion data at `z₀ = −x/(4t)`.
    pub fn new(q0: &ComplexGrid1D, consts: &BetaGamma, x: f64, t: f64) -> Result<Self> {
        if !(t > 0.0) {
            return Err(Error::Config(format!("expansion needs t > 0, got {t}")));
        }
        let n = consts.beta.len();
        let z0 = -x / (4.0 * t);
        Ok(Self {
            n_terms: n,
            beta_coeffs: consts.beta.clone(),
            gamma_coeffs: consts.gamma.clone(),
            qhat_derivs: fourier_moments(q0, z0, 2 * n as u32)?,
            z0,
            coefficient_set: consts.set.clone(),
        })
    }

    /// Leading term `t^{−1/2} q̂₀(z₀) e^{−iπ/4} e^{ix²/4t} / (2√π)`.
    pub fn leading(&self, x: f64, t: f64) -> Complex64 {
        self.qhat_derivs[0] * Complex64::from_polar(0.5 / (PI * t).sqrt(), -FRAC_PI_4 + x * x / (4.0 * t))
    }

    /// Partial sum through order `m ≤ n_terms` (`m = 0` is the leading term).
    pub fn partial_sum(&self, x: f64, t: f64, m: usize) -> Complex64 {
        let ph = Complex64::from_polar(1.0, 4.0 * t * self.z0 * self.z0);
        let mut q = self.leading(x, t);
        for k in 1..=m.min(self.n_terms) {
            let kf = k as f64;
            q += 2.0 * I
                * ph
                * (t.powf(-kf) * self.qhat_derivs[2 * k - 1] * self.beta_coeffs[k - 1]
                    + t.powf(-(2.0 * kf + 1.0) / 2.0) * self.qhat_derivs[2 * k] * self.gamma_coeffs[k - 1]);
        }
        q
    }
}

/// The full `n`-term prediction.
pub fn linear_expansion(exp: &LinearExpansion, x: f64, t: f64) -> Complex64 {
    exp.partial_sum(x, t, exp.n_terms)
}

/// The two ∂̄-integrals of the Stokes split and the reconstructed solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StokesSplit {
    /// `∬_{Ω₊} ∂̄E e^{−2itθ} dA`, `Ω₊ = {arg(z − z₀) ∈ (3π/4, π)}`.
    pub omega_plus: Complex64,
    /// `∬_{Ω₋} ∂̄E e^{−2itθ} dA`, `Ω₋ = {arg(z − z₀) ∈ (−π/4, 0)}`.
    pub omega_minus: Complex64,
    /// The ray integral, equal to the leading term.
    pub leading: Complex64,
    /// `leading + (2i/π)(Ω₊ − Ω₋)`.
    pub reconstructed: Complex64,
}

/// Direct 2D quadrature of the Stokes split with
/// `E = cos(2 arg(z − z₀)) q̂₀(u) + (1 − cos(2 arg(z − z₀))) q̂₀(z₀)`, so that
/// `∂̄E = ½ cos 2φ q̂₀′(u) − (i e^{iφ}/ρ) sin 2φ (q̂₀(u) − q̂₀(z₀))`.
///
/// `qhat(u)` returns `(q̂₀(u), q̂₀′(u))`; `support` bounds `|u − z₀|` beyond
/// which `q̂₀` is negligible.
pub fn stokes_split<F>(qhat: F, x: f64, t: f64, support: f64, tol: f64) -> Result<StokesSplit>
where
    F: Fn(f64) -> (Complex64, Complex64),
{
    if !(t > 0.0) {
        return Err(Error::Config(format!("Stokes split needs t > 0, got {t}")));
    }
    let z0 = -x / (4.0 * t);
    let st = t.sqrt();
    let (h0, _) = qhat(z0);
    let opts = OracleOptions {
        rho_max: support * st,
        tol,
        ..OracleOptions::default()
    };
    let sector = |range: (f64, f64)| {
        sector_quadrature(range, opts.rho_max, &opts, |rp, phi| {
            let rho = rp / st;
            let u = z0 + rho * phi.cos();
            let (h, dh) = qhat(u);
            let e2 = Complex64::from_polar(1.0, 2.0 * phi);
            let dbar_rho = 0.5 * (2.0 * phi).cos() * dh * rho
                - I * Complex64::from_polar(1.0, phi) * (2.0 * phi).sin() * (h - h0);
            Ok(dbar_rho * (-4.0 * I * rp * rp * e2).exp() / st)
        })
    };
    let ph = Complex64::from_polar(1.0, 4.0 * t * z0 * z0);
    let omega_minus = sector((-FRAC_PI_4, 0.0))? * ph;
    let omega_plus = sector((3.0 * FRAC_PI_4, PI))? * ph;
    let leading = h0 * Complex64::from_polar(0.5 / (PI * t).sqrt(), -FRAC_PI_4 + x * x / (4.0 * t));
    Ok(StokesSplit {
        omega_plus,
        omega_minus,
        leading,
        reconstructed: leading + 2.0 * I / PI * (omega_plus - omega_minus),
    })
}

/// One row of a rate table: exact value and every partial sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRateRow {
    pub x: f64,
    pub t: f64,
    pub exact: Complex64,
    /// Partial sums of orders `0..=n`.
    pub predictions: Vec<Complex64>,
}

impl LinearRateRow {
    pub fn errors(&self) -> Vec<f64> {
        self.predictions.iter().map(|p| (p - self.exact).norm()).collect()
    }
}

/// Exact solution and partial sums at `x` for every `t` in `ts`.
pub fn linear_rate_table(
    q0: &ComplexGrid1D,
    oracle: &LinearOracle,
    consts: &BetaGamma,
    x: f64,
    ts: &[f64],
) -> Result<Vec<LinearRateRow>> {
    ts.iter()
        .map(|&t| {
            let exp = LinearExpansion::new(q0, consts, x, t)?;
            Ok(LinearRateRow {
                x,
                t,
                exact: oracle.at(x, t)?,
                predictions: (0..=exp.n_terms).map(|m| exp.partial_sum(x, t, m)).collect(),
            })
        })
        .collect()
}

/// CSV with columns `x, t, abs_exact, abs_pred_0.., err_0..`.
pub fn write_rate_csv(rows: &[LinearRateRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let n = rows.first().map_or(0, |r| r.predictions.len());
    let mut header = vec!["x".to_string(), "t".into(), "abs_exact".into()];
    header.extend((0..n).map(|m| format!("abs_pred_{m}")));
    header.extend((0..n).map(|m| format!("err_{m}")));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.x.to_string(), r.t.to_string(), r.exact.norm().to_string()];
        rec.extend(r.predictions.iter().map(|p| p.norm().to_string()));
        rec.extend(r.errors().iter().map(|e| e.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// JSON dump of the coefficient constants.
pub fn write_constants_json(consts: &BetaGamma, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    serde_json::to_writer_pretty(f, consts)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(lo: f64, hi: f64, n: usize) -> ComplexGrid1D {
        ComplexGrid1D::from_fn(lo, hi, n, |x| Complex64::from((-x * x).exp())).unwrap()
    }

    fn gaussian_exact(x: f64, t: f64) -> Complex64 {
        let d = Complex64::new(1.0, 4.0 * t);
        (-x * x / d).exp() / d.sqrt()
    }

    #[test]
    fn gaussian_transform_and_round_trip() {
        let q0 = gaussian(-12.0, 12.0, 1201);
        for xi in [-2.0, -0.3, 0.0, 0.7, 3.0] {
            let v = fourier_hat(&q0, xi).unwrap();
            assert!((v - PI.sqrt() * (-xi * xi).exp()).norm() < 1e-13);
        }
        // Inverse transform: (1/π)∫q̂₀ e^{−2ixz} dz at t = 0.
        let v = exact_by_quadrature(&q0, 0.6, 0.0, 1e-12).unwrap();
        assert!((v - (-0.36f64).exp()).norm() < 1e-10, "{v}");
        let zero = ComplexGrid1D::from_fn(-5.0, 5.0, 101, |_| ZERO).unwrap();
        assert_eq!(fourier_hat(&zero, 0.3).unwrap(), ZERO);
    }

    #[test]
    fn moments_are_derivatives() {
        let q0 = gaussian(-12.0, 12.0, 1201);
        // q̂₀ = √π e^{−ξ²}: q̂₀′ = −2ξ q̂₀, q̂₀″ = (4ξ² − 2) q̂₀.
        let xi = 0.4;
        let m = fourier_moments(&q0, xi, 2).unwrap();
        let h = PI.sqrt() * (-xi * xi).exp();
        assert!((m[1] - (-2.0 * xi * h)).norm() < 1e-12);
        assert!((m[2] - (4.0 * xi * xi - 2.0) * h).norm() < 1e-12);
    }

    #[test]
    fn oracle_matches_gaussian_and_conserves_mass() {
        let q0 = gaussian(-12.0, 12.0, 1201);
        let oracle = LinearOracle::new(&q0, 20.0, 1e-13).unwrap();
        for (x, t) in [(0.0, 0.0), (1.3, 0.0), (0.0, 1.0), (3.0, 5.0), (-20.0, 20.0)] {
            let v = oracle.at(x, t).unwrap();
            assert!((v - gaussian_exact(x, t)).norm() < 1e-9, "({x}, {t}): {v}");
        }
        let m0 = q0.mass();
        for t in [0.0, 7.0, 20.0] {
            assert!((oracle.field(t).mass() - m0).abs() < 1e-9 * m0);
        }
        let f = oracle.field(3.0);
        let x = f.xs()[f.len() / 2 + 37];
        assert!((f.vals()[f.len() / 2 + 37] - gaussian_exact(x, 3.0)).norm() < 1e-9);
    }

    #[test]
    fn oracle_agrees_with_direct_quadrature() {
        let q0 = ComplexGrid1D::from_fn(-30.0, 30.0, 1201, |x| {
            Complex64::from_polar(1.0 / x.cosh(), 0.3 * x)
        })
        .unwrap();
        let oracle = LinearOracle::new(&q0, 3.0, 1e-13).unwrap();
        for x in [-3.0, 0.0, 2.5] {
            let a = oracle.at(x, 3.0).unwrap();
            let b = exact_by_quadrature(&q0, x, 3.0, 1e-11).unwrap();
            assert!((a - b).norm() < 1e-9, "{x}: {a} vs {b}");
        }
    }

    #[test]
    fn printed_constants_two_methods() {
        let bg = beta_gamma_constants(3, 1e-12).unwrap();
        assert!(bg.method_disagreement < 1e-10, "{}", bg.method_disagreement);
        assert!(bg.gamma.iter().all(|g| g.re.is_finite() && g.im.is_finite()));
        // (2k−3)!! = 1 at k = 1.
        assert_eq!(double_factorial(-1), 1.0);
        assert_eq!(double_factorial(5), 15.0);
        // Different tolerance, same constants within it.
        let loose = Printed::default().coefficients(3, 1e-9).unwrap();
        for k in 0..3 {
            assert!((loose.beta[k] - bg.beta[k]).norm() < 1e-9);
            assert!((loose.gamma[k] - bg.gamma[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn stationary_phase_constants() {
        // 2iγ_k = Γ(k+½)/((2k)! π (4i)^{k+½}) with the principal power.
        assert!((half_integer_gamma(1) - 0.5 * PI.sqrt()).abs() < 1e-15);
        assert!((half_integer_gamma(3) - 15.0 / 8.0 * PI.sqrt()).abs() < 1e-14);
        for k in 1..=3usize {
            let kf = k as f64;
            let fact: f64 = (1..=2 * k).map(|j| j as f64).product();
            let direct = half_integer_gamma(k)
                / (fact * PI * Complex64::new(0.0, 4.0).powf(kf + 0.5));
            let g = StationaryPhase::gamma_k(k) * 2.0 * I;
            assert!((g - direct).norm() < 1e-15 * direct.norm().max(1.0), "{k}: {g} vs {direct}");
        }
    }

    #[test]
    fn registry_lists_both_sets() {
        let reg = coefficient_registry();
        assert_eq!(reg.default_name(), Some("printed"));
        assert!(reg.get("stationary-phase").is_ok());
    }

    #[test]
    fn zero_data_zero_prediction() {
        let zero = ComplexGrid1D::from_fn(-5.0, 5.0, 101, |_| ZERO).unwrap();
        let bg = StationaryPhase.coefficients(2, 1e-12).unwrap();
        let exp = LinearExpansion::new(&zero, &bg, 1.0, 10.0).unwrap();
        assert_eq!(linear_expansion(&exp, 1.0, 10.0), ZERO);
    }

    #[test]
    fn stationary_phase_series_improves_order_by_order() {
        let q0 = gaussian(-12.0, 12.0, 1201);
        let oracle = LinearOracle::new(&q0, 400.0, 1e-13).unwrap();
        let bg = StationaryPhase.coefficients(3, 1e-12).unwrap();
        let ts = [50.0, 100.0, 200.0, 400.0];
        let rows = linear_rate_table(&q0, &oracle, &bg, 0.0, &ts).unwrap();
        for m in 0..3 {
            let e: Vec<f64> = rows.iter().map(|r| r.errors()[m]).collect();
            let slope = (e[3] / e[0]).ln() / 8f64.ln();
            assert!(slope < -(m as f64 + 1.4), "order {m}: slope {slope}, {e:?}");
        }
    }

    #[test]
    fn leading_term_error_halves_per_doubling() {
        // At x = 0 the first correction is O(t^{−3/2}); off-centre the
        // t^{−1}-type terms appear through z₀ = −x/4t.
        let q0 = gaussian(-12.0, 12.0, 1201);
        let oracle = LinearOracle::new(&q0, 100.0, 1e-13).unwrap();
        let bg = beta_gamma_constants(1, 1e-12).unwrap();
        let rows = linear_rate_table(&q0, &oracle, &bg, 0.0, &[50.0, 100.0]).unwrap();
        let ratio = rows[0].errors()[0] / rows[1].errors()[0];
        assert!(ratio > 2.0, "{ratio}");
    }

    #[test]
    fn stokes_split_antisymmetry_and_reconstruction() {
        let qhat = |u: f64| {
            let h = Complex64::from(PI.sqrt() * (-u * u).exp());
            (h, -2.0 * u * h)
        };
        let t = 1.0;
        let s = stokes_split(qhat, 0.0, t, 7.0, 1e-10).unwrap();
        assert!((s.omega_plus + s.omega_minus).norm() < 1e-6, "{s:?}");
        assert!((s.reconstructed - gaussian_exact(0.0, t)).norm() < 1e-6, "{s:?}");
        // Off-centre the split is not antisymmetric, but the identity holds.
        let s = stokes_split(qhat, 1.0, t, 7.0, 1e-10).unwrap();
        assert!((s.reconstructed - gaussian_exact(1.0, t)).norm() < 1e-6, "{s:?}");
    }
}
