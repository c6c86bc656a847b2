//! The scalar Riemann–Hilbert problem on `(−∞, z₀]`.
//!
//! `δ(z) = e^{χ(z)}` with the Cauchy transform
//!
//! `χ(z) = (1/2πi) ∫_{−∞}^{z₀} F(s)/(s − z) ds`,  `F = ln(1 − |r|²)`,
//!
//! solves `δ₊ = δ₋ (1 − |r|²)` on the cut and `δ → 1` at infinity.  Near `z₀`,
//! `δ(z) ≈ (z − z₀)^{−iF(z₀)/2π} / c(z₀)` with
//!
//! `c(z₀) = exp((1/2πi) ∫_{−∞}^{z₀} ln(z₀ − s) F′(s) ds)`,
//!
//! and the regular local factor is `f(z) = c(z₀) δ(z) (z − z₀)^{iF(z₀)/2π}`.
//!
//! Two interchangeable Cauchy-transform strategies are registered:
//! `panel-exact` integrates the cubic Hermite interpolant of `F` against
//! `1/(s − z)` in closed form on every grid cell near `z` (Gauss–Legendre on
//! the distant ones); `subtracted-adaptive` removes a linear interpolant of `F`
//! analytically and integrates the remainder with adaptive Gauss–Kronrod.
//! Both see the same interpolant, so they agree to quadrature tolerance.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive, AdaptiveOptions, GaussLegendre};
use crate::registry::{Named, Registry};
use crate::scattering::{nu_omega_from_r, ScatteringData};
use crate::specfun::{gamma, ln_gamma};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Largest `|F|` tolerated at the left end of the scattering grid (the
/// truncated tail of the Cauchy integral).
pub const TAIL_DECAY: f64 = 1e-8;

/// Richardson sequence for boundary values on the cut.
pub const BOUNDARY_EPS: [f64; 3] = [1e-3, 5e-4, 2.5e-4];

/// Strategy for `∫_{lo}^{z₀} F(s)/(s − z) ds`.
pub trait CauchyTransform: Named + Send + Sync {
    fn integrate(&self, sd: &ScatteringData, z0: f64, z: Complex64) -> Result<Complex64>;
}

fn check_cut(sd: &ScatteringData, z0: f64, z: Complex64) -> Result<f64> {
    let (lo, hi) = sd.z_range();
    if !(z0 > lo && z0 <= hi) {
        return Err(Error::OutOfGrid { value: z0, lo, hi });
    }
    let f_lo = sd.f_vals[0];
    if f_lo.abs() >= TAIL_DECAY {
        return Err(Error::TailDecay(f_lo));
    }
    if z.im == 0.0 && z.re >= lo && z.re <= z0 {
        return Err(Error::OnCut(format!("z = {z} lies on [{lo}, {z0}]")));
    }
    Ok(lo)
}

/// Closed-form Cauchy integrals of the cubic Hermite interpolant near `z`.
pub struct PanelExact {
    /// Gauss–Legendre rules for distant cells, with the distance (in cells)
    /// beyond which each applies; ordered from nearest to farthest.  A rule of
    /// `n` nodes at distance `d·h` errs by roughly `(1/2d)^{2n}` relative.
    tiers: Vec<(f64, GaussLegendre)>,
    /// Cells whose distance to `z` is below `near · h` are integrated exactly.
    near: f64,
}

impl Default for PanelExact {
    fn default() -> Self {
        Self {
            tiers: vec![
                (8.0, GaussLegendre::new(6)),
                (32.0, GaussLegendre::new(3)),
                (256.0, GaussLegendre::new(2)),
            ],
            near: 8.0,
        }
    }
}

impl Named for PanelExact {
    fn name(&self) -> &str {
        "panel-exact"
    }
    fn description(&self) -> &str {
        "closed-form cell integrals of the cubic interpolant"
    }
}

impl PanelExact {
    /// Contribution of the grid cells `first..` up to `z₀` (the last one
    /// truncated at `z₀`).
    fn cells(&self, sd: &ScatteringData, z0: f64, z: Complex64, first: usize) -> Result<Complex64> {
        let axis = sd.axis();
        let h = axis.step;
        let (last, _) = axis.locate(z0)?;
        let mut total = ZERO;
        for i in first..=last {
            let a = axis.point(i);
            let b = (a + h).min(z0);
            if b <= a {
                continue;
            }
            let (v0, v1) = (sd.f_vals[i], sd.f_vals[i + 1]);
            let (d0, d1) = (sd.df_vals[i] * h, sd.df_vals[i + 1] * h);
            // P(τ) = p0 + p1 τ + p2 τ² + p3 τ³ on the full cell, τ = (s − a)/h.
            let p = [v0, d0, 3.0 * (v1 - v0) - 2.0 * d0 - d1, 2.0 * (v0 - v1) + d0 + d1];
            let dist = if z.re < a {
                Complex64::new(a - z.re, z.im).norm()
            } else if z.re > b {
                Complex64::new(z.re - b, z.im).norm()
            } else {
                z.im.abs()
            };
            if dist < self.near * h {
                // Re-expand about z: P = Σ c_k (s − z)^k.
                let tz = (z - a) / h;
                let c0 = ((p[3] * tz + p[2]) * tz + p[1]) * tz + p[0];
                let c1 = ((3.0 * p[3] * tz + 2.0 * p[2]) * tz + p[1]) / h;
                let c2 = (3.0 * p[3] * tz + p[2]) / (h * h);
                let c3 = Complex64::from(p[3] / (h * h * h));
                let (wa, wb) = (a - z, b - z);
                total += c0 * ((z - b).ln() - (z - a).ln())
                    + c1 * (wb - wa)
                    + c2 * (wb * wb - wa * wa) / 2.0
                    + c3 * (wb * wb * wb - wa * wa * wa) / 3.0;
            } else {
                let cells = dist / h;
                let rule = &self
                    .tiers
                    .iter()
                    .rev()
                    .find(|(d, _)| cells >= *d)
                    .unwrap_or(&self.tiers[0])
                    .1;
                total += rule.integrate(a, b, |s| {
                    let tau = (s - a) / h;
                    let val = ((p[3] * tau + p[2]) * tau + p[1]) * tau + p[0];
                    val / (s - z)
                });
            }
        }
        Ok(total)
    }
}

impl CauchyTransform for PanelExact {
    fn integrate(&self, sd: &ScatteringData, z0: f64, z: Complex64) -> Result<Complex64> {
        check_cut(sd, z0, z)?;
        self.cells(sd, z0, z, 0)
    }
}

/// Linear subtraction plus adaptive Gauss–Kronrod.
pub struct SubtractedAdaptive {
    pub opts: AdaptiveOptions,
}

impl Default for SubtractedAdaptive {
    fn default() -> Self {
        Self {
            opts: AdaptiveOptions {
                abs_tol: 1e-13,
                rel_tol: 1e-12,
                max_subdivisions: 40_000,
            },
        }
    }
}

impl Named for SubtractedAdaptive {
    fn name(&self) -> &str {
        "subtracted-adaptive"
    }
    fn description(&self) -> &str {
        "linear subtraction with analytic log, adaptive Gauss–Kronrod remainder"
    }
}

impl CauchyTransform for SubtractedAdaptive {
    fn integrate(&self, sd: &ScatteringData, z0: f64, z: Complex64) -> Result<Complex64> {
        let lo = check_cut(sd, z0, z)?;
        let f0 = sd.f_at(z0)?;
        let x = z.re.clamp(lo, z0);
        // L(s) = F(z₀) + m (s − z₀) interpolates F at x and z₀.
        let m = if z0 - x > 1e-9 {
            (f0 - sd.f_at(x)?) / (z0 - x)
        } else {
            0.0
        };
        let lin = |s: Complex64| f0 + m * (s - z0);
        let analytic = lin(z) * ((z - z0).ln() - (z - lo).ln()) + m * (z0 - lo);
        let eta = z.im.abs();
        let axis = sd.axis();
        let mut breaks: Vec<f64> = axis.points().filter(|&s| s > lo && s < z0 - 1e-9).collect();
        breaks.push(x);
        breaks.push(z0 - 1.0);
        for k in [1.0, 4.0, 16.0] {
            breaks.push(x - k * eta);
            breaks.push(x + k * eta);
        }
        let mut err = None;
        let res = adaptive(
            |s| match sd.f_at(s) {
                Ok(fs) => (fs - lin(Complex64::from(s))) / (s - z),
                Err(e) => {
                    err.get_or_insert(e);
                    ZERO
                }
            },
            lo,
            z0,
            &breaks,
            self.opts,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(analytic + res.value)
    }
}

pub fn cauchy_registry() -> Registry<dyn CauchyTransform> {
    Registry::new("Cauchy transform")
        .with(Arc::new(PanelExact::default()) as Arc<dyn CauchyTransform>)
        .with(Arc::new(SubtractedAdaptive::default()) as Arc<dyn CauchyTransform>)
}

/// `χ(z)` with the default (panel-exact) strategy.
pub fn chi(sd: &ScatteringData, z0: f64, z: Complex64) -> Result<Complex64> {
    chi_with(&PanelExact::default(), sd, z0, z)
}

pub fn chi_with(
    strategy: &dyn CauchyTransform,
    sd: &ScatteringData,
    z0: f64,
    z: Complex64,
) -> Result<Complex64> {
    Ok(strategy.integrate(sd, z0, z)? / (2.0 * PI * I))
}

/// `δ(z) = e^{χ(z)}`.
pub fn delta(sd: &ScatteringData, z0: f64, z: Complex64) -> Result<Complex64> {
    Ok(chi(sd, z0, z)?.exp())
}

/// Boundary value `χ±(s)` on the real axis from `s ± iε`, Richardson
/// extrapolated over [`BOUNDARY_EPS`] (assumes a smooth expansion in ε).
pub fn chi_boundary(sd: &ScatteringData, z0: f64, s: f64, side: f64) -> Result<Complex64> {
    let sign = side.signum();
    let v: Vec<Complex64> = BOUNDARY_EPS
        .iter()
        .map(|&e| chi(sd, z0, Complex64::new(s, sign * e)))
        .collect::<Result<_>>()?;
    let r1 = 2.0 * v[1] - v[0];
    let r2 = 2.0 * v[2] - v[1];
    Ok((4.0 * r2 - r1) / 3.0)
}

/// `δ±(s)` on the real axis.
pub fn delta_boundary(sd: &ScatteringData, z0: f64, s: f64, side: f64) -> Result<Complex64> {
    Ok(chi_boundary(sd, z0, s, side)?.exp())
}

/// `ln c(z₀) = (1/2πi) ∫ ln(z₀ − s) F′(s) ds`.
pub fn log_cz0(sd: &ScatteringData, z0: f64) -> Result<Complex64> {
    let lo = check_cut(sd, z0, Complex64::new(z0, 1.0))?;
    let breaks: Vec<f64> = sd.axis().points().filter(|&s| s > lo && s < z0 - 1e-9).collect();
    let opts = AdaptiveOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_subdivisions: 40_000,
    };
    let res = adaptive(
        |s| Complex64::from((z0 - s).ln() * sd.df_at(s).unwrap_or(f64::NAN)),
        lo,
        z0,
        &breaks,
        opts,
    )?;
    if !res.value.is_finite() {
        return Err(Error::Inconsistent("non-finite ln c(z₀) integrand".into()));
    }
    Ok(res.value / (2.0 * PI * I))
}

/// Integrated-by-parts form `(1/2πi) ∫ F″(s)(ln(z₀ − s) − 1)(z₀ − s) ds`.
pub fn log_cz0_by_parts(sd: &ScatteringData, z0: f64) -> Result<Complex64> {
    let lo = check_cut(sd, z0, Complex64::new(z0, 1.0))?;
    let breaks: Vec<f64> = sd.axis().points().filter(|&s| s > lo && s < z0 - 1e-9).collect();
    let opts = AdaptiveOptions {
        abs_tol: 1e-13,
        rel_tol: 1e-12,
        max_subdivisions: 40_000,
    };
    let res = adaptive(
        |s| {
            let w = z0 - s;
            let l = if w > 0.0 { (w.ln() - 1.0) * w } else { 0.0 };
            Complex64::from(sd.d2f_at(s).unwrap_or(f64::NAN) * l)
        },
        lo,
        z0,
        &breaks,
        opts,
    )?;
    if !res.value.is_finite() {
        return Err(Error::Inconsistent("non-finite by-parts integrand".into()));
    }
    Ok(res.value / (2.0 * PI * I))
}

/// Agreement demanded between the two forms of `c(z₀)`.
pub const CZ0_AGREEMENT: f64 = 1e-5;

/// `c(z₀)`, cross-checked against the integrated-by-parts form.
pub fn cz0_integral(sd: &ScatteringData, z0: f64) -> Result<Complex64> {
    let direct = log_cz0(sd, z0)?.exp();
    let parts = log_cz0_by_parts(sd, z0)?.exp();
    if (direct - parts).norm() > CZ0_AGREEMENT {
        return Err(Error::Disagreement {
            what: "c(z0) direct vs integrated by parts",
            lhs: direct.to_string(),
            rhs: parts.to_string(),
            tol: CZ0_AGREEMENT,
        });
    }
    Ok(direct)
}

/// `β` with `|β|² = 2ν` and
/// `arg β = π/4 + ln2·F/2π − arg Γ(iF/2π)`, `F = ln(1 − r_abs²)`.
pub fn beta_value(nu: f64, r_abs: f64) -> Result<Complex64> {
    check_nu(nu, r_abs)?;
    if r_abs == 0.0 {
        return Ok(ZERO);
    }
    let f = (1.0 - r_abs * r_abs).ln();
    let g = gamma(I * f / (2.0 * PI))?;
    let arg = PI / 4.0 + 2f64.ln() * f / (2.0 * PI) - g.arg();
    Ok(Complex64::from_polar((2.0 * nu).sqrt(), arg))
}

/// Same `β` with `arg Γ(−iν)` obtained from `ln Γ(1 − iν)` and the recurrence
/// `Γ(w) = Γ(1 + w)/w` (an independent gamma-evaluation path).
pub fn beta_value_recurrence(nu: f64, r_abs: f64) -> Result<Complex64> {
    check_nu(nu, r_abs)?;
    if r_abs == 0.0 {
        return Ok(ZERO);
    }
    let f = (1.0 - r_abs * r_abs).ln();
    let w = I * f / (2.0 * PI);
    let arg_gamma = ln_gamma(1.0 + w)?.im - w.arg();
    let arg = PI / 4.0 + 2f64.ln() * f / (2.0 * PI) - arg_gamma;
    Ok(Complex64::from_polar((2.0 * nu).sqrt(), arg))
}

fn check_nu(nu: f64, r_abs: f64) -> Result<()> {
    if !(0.0..1.0).contains(&r_abs) {
        return Err(Error::Inconsistent(format!("|r| = {r_abs} outside [0, 1)")));
    }
    let want = -(1.0 - r_abs * r_abs).ln() / (2.0 * PI);
    if (nu - want).abs() > 1e-12 * (1.0 + want) {
        return Err(Error::Inconsistent(format!(
            "ν = {nu} inconsistent with |r| = {r_abs} (expected {want})"
        )));
    }
    Ok(())
}

/// Constants of the four sectors adjacent to `z₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionConsts {
    pub a2_0: Complex64,
    pub a2_m1: Complex64,
    /// `B₁⁽⁰⁾ = β⁻¹(1−|r₀|²)^{−1/8} e^{i ln2 F₀/4π}`; undefined when `β = 0`.
    pub b1_0: Option<Complex64>,
    /// `B₁⁽¹⁾ = β⁻¹(1−|r₀|²)^{3/8} e^{i ln2 F₀/4π}`; undefined when `β = 0`.
    pub b1_1: Option<Complex64>,
    pub c1: Complex64,
    pub c3: Complex64,
    pub c4: Complex64,
    pub c6: Complex64,
    pub c22: Complex64,
}

/// Everything attached to one stationary point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalParams {
    pub z0: f64,
    pub r0: Complex64,
    pub dr0: Complex64,
    pub nu: f64,
    pub omega: f64,
    pub f0: f64,
    pub df0: f64,
    /// `ln c(z₀)` (principal value of the defining integral).
    pub log_c0: Complex64,
    pub c0: Complex64,
    pub beta: Complex64,
    /// Parabolic cylinder parameter `a = ½(1 + i|β|²) = ½ + iν`.
    pub a: Complex64,
    pub q_r0: Complex64,
    pub dq_r0: Complex64,
    pub consts: RegionConsts,
}

/// `q_r = r/(1−|r|²)`.
pub fn q_r(r: Complex64) -> Complex64 {
    r / (1.0 - r.norm_sqr())
}

/// `q_r′ = (r′ + r² conj(r′))/(1−|r|²)²`.
pub fn dq_r(r: Complex64, dr: Complex64) -> Complex64 {
    let d = 1.0 - r.norm_sqr();
    (dr + r * r * dr.conj()) / (d * d)
}

impl RegionConsts {
    pub fn compute(beta: Complex64, r0_abs: f64, f0: f64, omega: f64) -> Self {
        let one_m = 1.0 - r0_abs * r0_abs;
        let ln2 = 2f64.ln();
        let s2 = 1.0 / 2f64.sqrt();
        let ph = Complex64::from_polar(1.0, -ln2 * f0 / (4.0 * PI));
        let a2_0 = s2 * one_m.powf(-0.125) * Complex64::from_polar(1.0, -3.0 * PI / 4.0) * ph;
        let a2_m1 = s2 * one_m.powf(0.375) * Complex64::from_polar(1.0, PI / 4.0) * ph;
        let pb = Complex64::from_polar(1.0, ln2 * f0 / (4.0 * PI));
        let (b1_0, b1_1) = if beta.norm() > 0.0 {
            (
                Some(one_m.powf(-0.125) * pb / beta),
                Some(one_m.powf(0.375) * pb / beta),
            )
        } else {
            (None, None)
        };
        let c1 = beta * beta * a2_0 * a2_0;
        let c4 = beta * beta * a2_m1 * a2_m1;
        // β²(B₁)² with the β's cancelled analytically (finite at β = 0).
        let c6 = one_m.powf(-0.25) * pb * pb;
        let c3 = one_m.powf(0.75) * pb * pb;
        let a = Complex64::new(0.5, beta.norm_sqr() / 2.0);
        let c22 = -(2f64.sqrt() * Complex64::from_polar(1.0, -PI / 4.0) * (a + 0.5) * c1
            * Complex64::from_polar(1.0, -omega))
            / 2.0;
        Self {
            a2_0,
            a2_m1,
            b1_0,
            b1_1,
            c1,
            c3,
            c4,
            c6,
            c22,
        }
    }
}

impl LocalParams {
    pub fn compute(sd: &ScatteringData, z0: f64) -> Result<Self> {
        let (r0, _) = sd.r_at(z0)?;
        let (dr0, _) = sd.dr_at(z0)?;
        let (nu, omega) = nu_omega_from_r(r0);
        let f0 = sd.f_at(z0)?;
        let df0 = sd.df_at(z0)?;
        let (log_c0, c0) = if sd.is_trivial() {
            (ZERO, Complex64::from(1.0))
        } else {
            let c0 = cz0_integral(sd, z0)?;
            (log_cz0(sd, z0)?, c0)
        };
        let beta = beta_value(nu, r0.norm())?;
        let consts = RegionConsts::compute(beta, r0.norm(), f0, omega);
        Ok(Self {
            z0,
            r0,
            dr0,
            nu,
            omega,
            f0,
            df0,
            log_c0,
            c0,
            beta,
            a: Complex64::new(0.5, beta.norm_sqr() / 2.0),
            q_r0: q_r(r0),
            dq_r0: dq_r(r0, dr0),
            consts,
        })
    }
}

/// `f(z; z₀) = c(z₀) δ(z) (z − z₀)^{iF(z₀)/2π}` evaluated as one exponential
/// so that the logarithmic singularities of `χ` and the power cancel.
pub fn f_factor(lp: &LocalParams, sd: &ScatteringData, z: Complex64) -> Result<Complex64> {
    f_factor_with(&PanelExact::default(), lp, sd, z)
}

pub fn f_factor_with(
    strategy: &dyn CauchyTransform,
    lp: &LocalParams,
    sd: &ScatteringData,
    z: Complex64,
) -> Result<Complex64> {
    let w = z - lp.z0;
    if w.im == 0.0 && w.re <= 0.0 {
        return Err(Error::OnCut(format!("arg(z − z₀) = ±π at z = {z}")));
    }
    if sd.is_trivial() {
        return Ok(Complex64::from(1.0));
    }
    let chi = chi_with(strategy, sd, lp.z0, z)?;
    Ok((lp.log_c0 + chi + I * lp.f0 / (2.0 * PI) * w.ln()).exp())
}

/// Fast evaluator of `f(z; z₀)` for `z` near `z₀`.
///
/// The part of the cut farther than `radius` from `z₀` contributes a function
/// analytic in `|z − z₀| < radius`; it is replaced by its Taylor series about
/// `z₀` (moments precomputed once), while the near cells are integrated exactly
/// as in [`PanelExact`].  Points with `|z − z₀| > radius/2` fall back to the full
/// transform.
pub struct LocalFactor<'a> {
    lp: LocalParams,
    sd: &'a ScatteringData,
    exact: PanelExact,
    radius: f64,
    first_near: usize,
    moments: Vec<Complex64>,
}

impl<'a> LocalFactor<'a> {
    /// Number of Taylor terms; the series ratio is at most ½.
    const TERMS: usize = 56;

    pub fn new(lp: &LocalParams, sd: &'a ScatteringData, radius: f64) -> Result<Self> {
        let axis = sd.axis();
        let (lo, _) = sd.z_range();
        let exact = PanelExact::default();
        let split = lp.z0 - radius;
        let (first_near, moments) = if split <= lo {
            (0, Vec::new())
        } else {
            let (k, _) = axis.locate(split)?;
            let rule = GaussLegendre::new(8);
            let mut m = vec![ZERO; Self::TERMS];
            for i in 0..k {
                let a = axis.point(i);
                let h = axis.step;
                for (s, w) in rule.mapped(a, a + h) {
                    let fs = sd.f_at(s)?;
                    // Σ_k w F(s) (s − z₀)^{−k−1}
                    let inv = 1.0 / (s - lp.z0);
                    let mut p = w * fs * inv;
                    for mk in m.iter_mut() {
                        *mk += p;
                        p *= inv;
                    }
                }
            }
            (k, m.into_iter().map(Complex64::from).collect())
        };
        Ok(Self {
            lp: *lp,
            sd,
            exact,
            radius,
            first_near,
            moments,
        })
    }

    pub fn params(&self) -> &LocalParams {
        &self.lp
    }

    /// `χ(z)` using the cached far field when `|z − z₀| ≤ radius/2`.
    pub fn chi(&self, z: Complex64) -> Result<Complex64> {
        let w = z - self.lp.z0;
        if w.norm() > self.radius / 2.0 {
            return chi(self.sd, self.lp.z0, z);
        }
        check_cut(self.sd, self.lp.z0, z)?;
        let mut far = ZERO;
        for mk in self.moments.iter().rev() {
            far = far * w + mk;
        }
        let near = self.exact.cells(self.sd, self.lp.z0, z, self.first_near)?;
        Ok((far + near) / (2.0 * PI * I))
    }

    /// `f(z; z₀)`.
    pub fn f(&self, z: Complex64) -> Result<Complex64> {
        let w = z - self.lp.z0;
        if w.im == 0.0 && w.re <= 0.0 {
            return Err(Error::OnCut(format!("arg(z − z₀) = ±π at z = {z}")));
        }
        if self.sd.is_trivial() {
            return Ok(Complex64::from(1.0));
        }
        Ok((self.lp.log_c0 + self.chi(z)? + I * self.lp.f0 / (2.0 * PI) * w.ln()).exp())
    }
}

/// Truncated model `f^{±2} ≈ exp(±(F′(z₀)/πi)(z − z₀)(ln(z − z₀) − 1))`.
pub fn f_expansion(lp: &LocalParams, z: Complex64, sign: f64) -> Result<Complex64> {
    let w = z - lp.z0;
    if w.im == 0.0 && w.re < 0.0 {
        return Err(Error::OnCut(format!("arg(z − z₀) = ±π at z = {z}")));
    }
    if w == ZERO {
        return Ok(Complex64::from(1.0));
    }
    Ok((sign.signum() * lp.df0 / (PI * I) * w * (w.ln() - 1.0)).exp())
}

/// Write `Re z, Im z, Re δ, Im δ` on a rectangular grid (points on the cut skipped).
pub fn write_delta_csv(
    sd: &ScatteringData,
    z0: f64,
    re: (f64, f64, usize),
    im: (f64, f64, usize),
    path: &Path,
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["re_z", "im_z", "re_delta", "im_delta"])?;
    let lin = |(a, b, n): (f64, f64, usize), k: usize| {
        if n <= 1 {
            a
        } else {
            a + (b - a) * k as f64 / (n - 1) as f64
        }
    };
    for i in 0..re.2 {
        for j in 0..im.2 {
            let z = Complex64::new(lin(re, i), lin(im, j));
            match delta(sd, z0, z) {
                Ok(d) => w.write_record(&[
                    z.re.to_string(),
                    z.im.to_string(),
                    d.re.to_string(),
                    d.im.to_string(),
                ])?,
                Err(Error::OnCut(_)) => continue,
                Err(e) => return Err(e),
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::UniformAxis;

    /// A smooth, non-even reflection coefficient with known decay.
    fn model_sd(dz: f64) -> ScatteringData {
        let n = (12.0 / dz).round() as usize + 1;
        let axis = UniformAxis::new(-6.0, 6.0, n).unwrap();
        ScatteringData::from_fn(axis, |z| {
            Complex64::from_polar(0.5 * (-(z - 0.3) * (z - 0.3)).exp(), 0.4 * z)
        })
        .unwrap()
    }

    #[test]
    fn zero_density_gives_trivial_factors() {
        let axis = UniformAxis::new(-6.0, 6.0, 121).unwrap();
        let sd = ScatteringData::from_fn(axis, |_| ZERO).unwrap();
        let z = Complex64::new(0.2, 0.7);
        assert_eq!(chi(&sd, 0.0, z).unwrap(), ZERO);
        assert_eq!(cz0_integral(&sd, 0.0).unwrap(), Complex64::from(1.0));
        let lp = LocalParams::compute(&sd, 0.0).unwrap();
        assert_eq!(f_factor(&lp, &sd, z).unwrap(), Complex64::from(1.0));
        assert_eq!(lp.beta, ZERO);
    }

    #[test]
    fn strategies_agree() {
        let sd = model_sd(0.01);
        let adaptive = SubtractedAdaptive::default();
        let exact = PanelExact::default();
        for &z in &[
            Complex64::new(0.5, 1.0),
            Complex64::new(-1.2, 0.3),
            Complex64::new(-0.5, 1e-3),
            Complex64::new(0.3, -0.01),
            Complex64::new(2.0, 0.0),
        ] {
            let a = chi_with(&adaptive, &sd, 0.4, z).unwrap();
            let b = chi_with(&exact, &sd, 0.4, z).unwrap();
            assert!((a - b).norm() < 1e-10, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn grid_refinement() {
        let z = Complex64::new(0.4, 1.0);
        let a = chi(&model_sd(0.01), 0.4, z).unwrap();
        let b = chi(&model_sd(0.005), 0.4, z).unwrap();
        assert!((a - b).norm() < 1e-8, "{a} vs {b}");
    }

    #[test]
    fn jump_and_symmetry() {
        let sd = model_sd(0.01);
        let z0 = 0.4;
        for &s in &[-2.0, -0.7, 0.1, 0.35] {
            let ratio = delta_boundary(&sd, z0, s, 1.0).unwrap()
                / delta_boundary(&sd, z0, s, -1.0).unwrap();
            let want = 1.0 - sd.r_at(s).unwrap().0.norm_sqr();
            assert!((ratio - want).norm() < 1e-6, "s={s}: {ratio} vs {want}");
        }
        for &z in &[Complex64::new(0.3, 0.8), Complex64::new(-3.0, 0.05)] {
            let d = delta(&sd, z0, z).unwrap() * delta(&sd, z0, z.conj()).unwrap().conj();
            assert!((d - 1.0).norm() < 1e-12, "{d}");
        }
        assert!(matches!(chi(&sd, z0, Complex64::new(0.0, 0.0)), Err(Error::OnCut(_))));
    }

    #[test]
    fn delta_tends_to_one() {
        let sd = model_sd(0.01);
        let mut prev = f64::INFINITY;
        for &r in &[10.0, 20.0, 40.0, 80.0] {
            let z = Complex64::from_polar(r, PI / 3.0);
            let e = (delta(&sd, 0.4, z).unwrap() - 1.0).norm();
            assert!(e * r < 2.0 && e < prev);
            prev = e;
        }
    }

    #[test]
    fn cz0_forms_agree_and_are_unimodular() {
        let sd = model_sd(0.01);
        for &z0 in &[-0.5, 0.0, 0.4, 1.1] {
            let a = log_cz0(&sd, z0).unwrap();
            let b = log_cz0_by_parts(&sd, z0).unwrap();
            assert!((a.exp() - b.exp()).norm() < 1e-7, "z0={z0}");
            // The integrand is real, so ln c is purely imaginary.
            assert!(a.re.abs() < 1e-14);
        }
    }

    #[test]
    fn tail_decay_is_enforced() {
        let axis = UniformAxis::new(-1.0, 1.0, 201).unwrap();
        let sd = ScatteringData::from_fn(axis, |_| Complex64::from(0.3)).unwrap();
        assert!(matches!(chi(&sd, 0.0, Complex64::new(0.0, 1.0)), Err(Error::TailDecay(_))));
    }

    #[test]
    fn f_near_z0_and_local_model() {
        let sd = model_sd(0.01);
        let lp = LocalParams::compute(&sd, 0.4).unwrap();
        // f → 1 at z₀.
        let f = f_factor(&lp, &sd, Complex64::new(0.4, 1e-9)).unwrap();
        assert!((f - 1.0).norm() < 1e-7, "{f}");
        // Hölder bound: fitted exponent of |f²−1| along φ = π/8 is ≥ ½.
        let dir = Complex64::from_polar(1.0, PI / 8.0);
        let rs = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
        let es: Vec<f64> = rs
            .iter()
            .map(|&r| (f_factor(&lp, &sd, 0.4 + r * dir).unwrap().powi(2) - 1.0).norm().ln())
            .collect();
        let xs: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
        let (slope, _, _) = crate::quad::linear_fit(&xs, &es);
        assert!(slope >= 0.5, "{slope}");
        // Residual against the logarithmic model shrinks faster than |w ln w|.
        let mut prev = f64::INFINITY;
        for &r in &rs {
            let z = 0.4 + r * dir;
            let fe = f_expansion(&lp, z, 1.0).unwrap();
            let f2 = f_factor(&lp, &sd, z).unwrap().powi(2);
            let ratio = (f2 - fe).norm() / (r * r.ln().abs());
            assert!(ratio < prev, "{ratio}");
            prev = ratio;
        }
    }

    #[test]
    fn local_factor_matches_full_transform() {
        let sd = model_sd(0.01);
        let lp = LocalParams::compute(&sd, 0.4).unwrap();
        let lf = LocalFactor::new(&lp, &sd, 1.0).unwrap();
        for &(r, phi) in &[(0.001, 0.3), (0.2, 2.0), (0.45, -2.9), (0.3, -0.6), (2.0, 1.0)] {
            let z = lp.z0 + Complex64::from_polar(r, phi);
            let a = lf.f(z).unwrap();
            let b = f_factor(&lp, &sd, z).unwrap();
            assert!((a - b).norm() < 1e-12, "z={z}: {a} vs {b}");
        }
    }

    #[test]
    fn f_expansion_inverse_pair() {
        let sd = model_sd(0.02);
        let lp = LocalParams::compute(&sd, 0.4).unwrap();
        let z = Complex64::new(0.5, 0.2);
        let p = f_expansion(&lp, z, 1.0).unwrap() * f_expansion(&lp, z, -1.0).unwrap();
        assert!((p - 1.0).norm() < 1e-15);
        assert_eq!(f_expansion(&lp, Complex64::from(0.4), 1.0).unwrap(), Complex64::from(1.0));
    }

    #[test]
    fn beta_properties() {
        assert_eq!(beta_value(0.0, 0.0).unwrap(), ZERO);
        let r: f64 = 0.5;
        let nu = -(1.0 - r * r).ln() / (2.0 * PI);
        let b = beta_value(nu, r).unwrap();
        assert!((b.norm_sqr() - 2.0 * nu).abs() < 1e-14);
        let b2 = beta_value_recurrence(nu, r).unwrap();
        assert!((b - b2).norm() < 1e-10);
        assert!(beta_value(0.1, 0.5).is_err());
    }

    #[test]
    fn region_constant_identities() {
        let sd = model_sd(0.02);
        let lp = LocalParams::compute(&sd, 0.4).unwrap();
        let k = lp.consts;
        assert!((lp.r0 * k.c1 - lp.q_r0 * k.c4).norm() < 1e-14);
        assert!((k.c3 * lp.q_r0.conj() - k.c6 * lp.r0.conj()).norm() < 1e-14);
        let c6 = lp.beta * lp.beta * k.b1_0.unwrap().powi(2);
        let c3 = lp.beta * lp.beta * k.b1_1.unwrap().powi(2);
        assert!((c6 - k.c6).norm() < 1e-13 && (c3 - k.c3).norm() < 1e-13);
        assert!((lp.f0 + 2.0 * PI * lp.nu).abs() < 1e-8);
        assert!((lp.beta.norm_sqr() - 2.0 * lp.nu).abs() < 1e-14);
        assert!((lp.c0.norm() - 1.0).abs() < 1e-12);
    }
}
