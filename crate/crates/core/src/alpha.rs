//! Region integrals of the ∂̄-problem near the stationary point and their
//! `1/t` and `ln t / t` coefficients.
//!
//! Around `z₀` the four sectors carrying a non-analytic extension are
//!
//! | region | `φ = arg(z − z₀)` | parabolic cylinder factor | density      |
//! |--------|-------------------|---------------------------|--------------|
//! | Ω₁     | `(0, π/4)`        | `U²(a, y)`                | `r`          |
//! | Ω₃     | `(3π/4, π)`       | `U²(−a, −iy)`             | `conj q_r`   |
//! | Ω₄     | `(π, 5π/4)`       | `U²(a, −y)`               | `q_r`        |
//! | Ω₆     | `(−π/4, 0)`       | `U²(−a, iy)`              | `conj r`     |
//!
//! with `y = 2√2 e^{−iπ/4} t^{1/2}(z − z₀)`, `a = ½(1 + i|β|²)` and
//! `q_r = r/(1 − |r|²)`.  Writing the argument of `U` as `s = κ(φ)ρ√t`, every
//! coefficient reduces to a `φ`-integral of a `ρ`-integral of `U(±a, κρ)`
//! products.
//!
//! Each region integral expands as
//!
//! `Ω_i(t) = σ_i (α_{i,1} + α_{i,2})/t + α_{i,3} ln t/t + O(1/t)`
//!
//! (`σ₁ = −1`, otherwise `+1`), and `Σ_i α_{i,3} = 0`: the `ln t/t` terms cancel
//! pairwise between Ω₁/Ω₄ and Ω₃/Ω₆ under `φ → φ − π`.
//!
//! Two `ρ`-contour strategies evaluate the inner integrals: `steepest-descent`
//! rotates the ray `s = κρ` onto the positive real `s`-axis, where the
//! integrand decays like `e^{−s²/2}` (so the `φ`-dependence is the explicit
//! factor `κ^{−2}` or `κ^{−1}`), and `real-axis` integrates along real `ρ`
//! directly, truncating where the Gaussian factor `e^{−4ρ²|sin 2φ|}` drops
//! below `1e−16`.  The direct double quadrature of the full region integral
//! ([`region_integral_oracle`]) is the independent check on the expansion.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{adaptive, AdaptiveOptions, GaussLegendre};
use crate::registry::{Named, Registry};
use crate::rhp::{dq_r, f_factor, q_r, LocalFactor, LocalParams};
use crate::scattering::ScatteringData;
use crate::specfun::{pc_at_zero, pc_u, PcOptions};

const I: Complex64 = Complex64::new(0.0, 1.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `ln(1e16)`: Gaussian tail exponent at which `ρ`-integrals are truncated.
pub const TAIL_EXPONENT: f64 = 36.841_361_487_904_734;

/// Which reflection density a region's extension interpolates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    R,
    QR,
    ConjR,
    ConjQR,
}

impl Density {
    /// `(D, D′)` from `(r, r′)`.
    pub fn apply(self, r: Complex64, dr: Complex64) -> (Complex64, Complex64) {
        match self {
            Density::R => (r, dr),
            Density::QR => (q_r(r), dq_r(r, dr)),
            Density::ConjR => (r.conj(), dr.conj()),
            Density::ConjQR => (q_r(r).conj(), dq_r(r, dr).conj()),
        }
    }

    /// `e^{∓iω}` such that `D(z₀) · phase = |D(z₀)|`.
    pub fn phase(self, omega: f64) -> Complex64 {
        match self {
            Density::R | Density::QR => Complex64::from_polar(1.0, -omega),
            Density::ConjR | Density::ConjQR => Complex64::from_polar(1.0, omega),
        }
    }
}

/// Static description of one sector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub index: u8,
    pub phi_range: (f64, f64),
    /// `κ(φ)/e^{iφ}`: the parabolic cylinder argument is `κ(φ) ρ √t`.
    pub kappa_unit: Complex64,
    /// `+1` for `U(a, ·)`, `−1` for `U(−a, ·)`.
    pub pc_sign: f64,
    pub density: Density,
    /// Power of `f` multiplying the density (`−2` or `+2`).
    pub f_power: i32,
    /// Overall sign of `ρ∂̄E` relative to the Ω₁ template.
    pub dbar_sign: f64,
    /// Sign of `c_i ∬ U² ρ∂̄E` in the region integral.
    pub integral_sign: f64,
    /// Sign of `(α_{i,1} + α_{i,2})/t` in the expansion of the region integral.
    pub t_inverse_sign: f64,
}

impl RegionSpec {
    pub fn new(index: u8) -> Result<Self> {
        let base = 2.0 * SQRT_2;
        let em = Complex64::from_polar(base, -PI / 4.0);
        let ep = Complex64::from_polar(base, PI / 4.0);
        let spec = match index {
            1 => Self {
                index,
                phi_range: (0.0, PI / 4.0),
                kappa_unit: em,
                pc_sign: 1.0,
                density: Density::R,
                f_power: -2,
                dbar_sign: 1.0,
                integral_sign: 1.0,
                t_inverse_sign: -1.0,
            },
            3 => Self {
                index,
                phi_range: (3.0 * PI / 4.0, PI),
                kappa_unit: -ep,
                pc_sign: -1.0,
                density: Density::ConjQR,
                f_power: 2,
                dbar_sign: -1.0,
                integral_sign: 1.0,
                t_inverse_sign: 1.0,
            },
            4 => Self {
                index,
                phi_range: (PI, 5.0 * PI / 4.0),
                kappa_unit: -em,
                pc_sign: 1.0,
                density: Density::QR,
                f_power: -2,
                dbar_sign: 1.0,
                integral_sign: -1.0,
                t_inverse_sign: 1.0,
            },
            6 => Self {
                index,
                phi_range: (-PI / 4.0, 0.0),
                kappa_unit: ep,
                pc_sign: -1.0,
                density: Density::ConjR,
                f_power: 2,
                dbar_sign: -1.0,
                integral_sign: -1.0,
                t_inverse_sign: 1.0,
            },
            _ => {
                return Err(Error::Config(format!(
                    "region index {index} not in {{1, 3, 4, 6}}"
                )))
            }
        };
        Ok(spec)
    }

    /// All four regions in the order 1, 3, 4, 6.
    pub fn all() -> [Self; 4] {
        [1, 3, 4, 6].map(|i| Self::new(i).expect("valid index"))
    }

    pub fn kappa(&self, phi: f64) -> Complex64 {
        self.kappa_unit * Complex64::from_polar(1.0, phi)
    }

    /// Parabolic cylinder parameter (`a` or `−a`).
    pub fn pc_param(&self, lp: &LocalParams) -> Complex64 {
        lp.a * self.pc_sign
    }

    /// Region constant `c_i`.
    pub fn constant(&self, lp: &LocalParams) -> Complex64 {
        match self.index {
            1 => lp.consts.c1,
            3 => lp.consts.c3,
            4 => lp.consts.c4,
            _ => lp.consts.c6,
        }
    }

    /// `D(z₀)` and `D′(z₀)`.
    pub fn density_at_z0(&self, lp: &LocalParams) -> (Complex64, Complex64) {
        self.density.apply(lp.r0, lp.dr0)
    }

    pub fn contains(&self, phi: f64) -> bool {
        phi > self.phi_range.0 && phi < self.phi_range.1
    }
}

/// `ρ · ∂̄E_i(z₀ + ρe^{iφ})` — finite as `ρ → 0`.
///
/// `f` supplies the local factor; `None` forces `f ≡ 1`.
pub fn rho_dbar_e(
    region: &RegionSpec,
    lp: &LocalParams,
    sd: &ScatteringData,
    f: Option<&LocalFactor>,
    rho: f64,
    phi: f64,
) -> Result<Complex64> {
    let u = lp.z0 + rho * phi.cos();
    let (r, dr) = sd.r_at(u)?;
    let (d, dd) = region.density.apply(r, dr);
    let (d0, _) = region.density_at_z0(lp);
    let ph = region.density.phase(lp.omega);
    let fp = match f {
        Some(lf) => lf.f(lp.z0 + Complex64::from_polar(rho, phi))?.powi(region.f_power),
        None => Complex64::from(1.0),
    };
    let e = Complex64::from_polar(1.0, phi);
    let s2 = (2.0 * phi).sin();
    let c2 = (2.0 * phi).cos();
    Ok(region.dbar_sign
        * (I * e * s2 * (d0.norm() - fp * d * ph) + 0.5 * rho * c2 * fp * dd * ph))
}

/// `∂̄E_i` at polar coordinates `(ρ, φ)` about `z₀`, with the exact `f`.
pub fn dbar_e(
    region: &RegionSpec,
    lp: &LocalParams,
    sd: &ScatteringData,
    rho: f64,
    phi: f64,
) -> Result<Complex64> {
    if !(rho > 0.0) {
        return Err(Error::Inconsistent(format!("ρ = {rho} must be positive")));
    }
    let z = lp.z0 + Complex64::from_polar(rho, phi);
    let fp = f_factor(lp, sd, z)?.powi(region.f_power);
    let u = lp.z0 + rho * phi.cos();
    let (r, dr) = sd.r_at(u)?;
    let (d, dd) = region.density.apply(r, dr);
    let (d0, _) = region.density_at_z0(lp);
    let ph = region.density.phase(lp.omega);
    let e = Complex64::from_polar(1.0, phi);
    Ok(region.dbar_sign
        * (I * e / rho * (2.0 * phi).sin() * (d0.norm() - fp * d * ph)
            + 0.5 * (2.0 * phi).cos() * fp * dd * ph))
}

/// Which power of `A` multiplies the Gaussian in the `ln t / t` coefficients of
/// Ω₆ and Ω₃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum APower {
    /// `A²`, i.e. the integrand `U²(−a, s)`, matching Ω₁ and Ω₄.
    #[default]
    Squared,
    /// A single `A`, i.e. the integrand `e^{−s²/4} U(−a, s)`.
    Single,
}

/// Kernels integrated along `s = κρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `G(s) · ρ` with `G = U²(p, s)` (or `e^{−s²/4}U(p, s)` for [`APower::Single`]).
    LogTerm(APower),
    /// `U(p, s) U(p + 1, s)`.
    InverseTerm,
}

pub fn kernel_value(kernel: Kernel, p: Complex64, s: Complex64, opts: &PcOptions) -> Result<Complex64> {
    Ok(match kernel {
        Kernel::LogTerm(APower::Squared) => pc_u(p, s, opts)?.powi(2),
        Kernel::LogTerm(APower::Single) => (-s * s / 4.0).exp() * pc_u(p, s, opts)?,
        Kernel::InverseTerm => pc_u(p, s, opts)? * pc_u(p + 1.0, s, opts)?,
    })
}

/// Strategy for `J(φ) = ∫_0^∞ kernel(κ(φ)ρ) w(ρ) dρ` (`w = ρ` for the log term,
/// `1` for the inverse term).
pub trait RhoContour: Named + Send + Sync {
    fn integrate(
        &self,
        kernel: Kernel,
        p: Complex64,
        kappa: Complex64,
        opts: &AdaptiveOptions,
    ) -> Result<Complex64>;
}

/// Ray rotated onto the positive real `s`-axis.
pub struct SteepestDescent {
    /// Upper truncation in `s` (the integrand decays like `e^{−s²/2}`).
    pub s_max: f64,
}

impl Default for SteepestDescent {
    fn default() -> Self {
        Self { s_max: 12.0 }
    }
}

impl Named for SteepestDescent {
    fn name(&self) -> &str {
        "steepest-descent"
    }
    fn description(&self) -> &str {
        "rotate ρ-ray onto the real s-axis; κ-dependence explicit"
    }
}

impl RhoContour for SteepestDescent {
    fn integrate(
        &self,
        kernel: Kernel,
        p: Complex64,
        kappa: Complex64,
        opts: &AdaptiveOptions,
    ) -> Result<Complex64> {
        let pco = PcOptions::default();
        let mut err = None;
        let weight_power = matches!(kernel, Kernel::LogTerm(_));
        let res = adaptive(
            |s| match kernel_value(kernel, p, Complex64::from(s), &pco) {
                Ok(v) => {
                    if weight_power {
                        v * s
                    } else {
                        v
                    }
                }
                Err(e) => {
                    err.get_or_insert(e);
                    ZERO
                }
            },
            0.0,
            self.s_max,
            &[1.0, 2.0, 4.0, 4.5, 6.0, 8.0],
            *opts,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(if weight_power {
            res.value / (kappa * kappa)
        } else {
            res.value / kappa
        })
    }
}

/// Direct integration along real `ρ`.
#[derive(Default)]
pub struct RealAxis;

impl Named for RealAxis {
    fn name(&self) -> &str {
        "real-axis"
    }
    fn description(&self) -> &str {
        "integrate along real ρ up to the Gaussian truncation radius"
    }
}

impl RealAxis {
    /// Truncation radius `R` with `e^{−4R²|sin 2φ|} = 1e−16`, from the
    /// decay rate `Re(s²)/2ρ² = 4|sin 2φ|`.
    pub fn truncation(kappa: Complex64) -> f64 {
        let damp = (kappa * kappa).re / 2.0;
        (TAIL_EXPONENT / damp.max(1e-300)).sqrt()
    }
}

impl RhoContour for RealAxis {
    fn integrate(
        &self,
        kernel: Kernel,
        p: Complex64,
        kappa: Complex64,
        opts: &AdaptiveOptions,
    ) -> Result<Complex64> {
        let damp = (kappa * kappa).re / 2.0;
        if damp <= 0.0 {
            return Err(Error::Inconsistent(format!(
                "ray κ = {kappa} is not inside the decay sector"
            )));
        }
        let r_max = Self::truncation(kappa);
        // Breakpoints every 4π of the phase |Im κ²| ρ²/2.
        let freq = (kappa * kappa).im.abs() / 2.0;
        let mut breaks: Vec<f64> = vec![0.5, 1.0, 2.0];
        if freq > 0.0 {
            let n = (freq * r_max * r_max / (4.0 * PI)).ceil() as usize;
            breaks.extend((1..n).map(|k| (4.0 * PI * k as f64 / freq).sqrt()));
        }
        let pco = PcOptions::default();
        let weight_power = matches!(kernel, Kernel::LogTerm(_));
        let mut err = None;
        let mut opts = *opts;
        opts.max_subdivisions = opts.max_subdivisions.max(4 * breaks.len() + 100);
        let res = adaptive(
            |rho| match kernel_value(kernel, p, kappa * rho, &pco) {
                Ok(v) => {
                    if weight_power {
                        v * rho
                    } else {
                        v
                    }
                }
                Err(e) => {
                    err.get_or_insert(e);
                    ZERO
                }
            },
            0.0,
            r_max,
            &breaks,
            opts,
        )?;
        if let Some(e) = err {
            return Err(e);
        }
        Ok(res.value)
    }
}

pub fn contour_registry() -> Registry<dyn RhoContour> {
    Registry::new("ρ-contour")
        .with(Arc::new(SteepestDescent::default()) as Arc<dyn RhoContour>)
        .with(Arc::new(RealAxis) as Arc<dyn RhoContour>)
}

/// Tuning of the α quadratures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlphaOptions {
    /// Gauss–Legendre nodes in `φ` (all interior; the integrands are smooth).
    pub phi_nodes: usize,
    /// Absolute/relative tolerance of each `ρ`-integral.
    pub tol: f64,
    /// Power of `A` in the Ω₆/Ω₃ log coefficients.
    pub a_power: APower,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        Self {
            phi_nodes: 16,
            tol: 1e-12,
            a_power: APower::Squared,
        }
    }
}

impl AlphaOptions {
    fn quad(&self) -> AdaptiveOptions {
        AdaptiveOptions {
            abs_tol: self.tol,
            rel_tol: self.tol,
            max_subdivisions: 20_000,
        }
    }

    fn power_for(&self, region: &RegionSpec) -> APower {
        if region.pc_sign > 0.0 {
            APower::Squared
        } else {
            self.a_power
        }
    }
}

/// `∫ e^{−iφ} sin 2φ cos φ dφ` over a region's range, in closed form.
pub fn phi_cos_integral(range: (f64, f64)) -> Complex64 {
    // e^{−iφ} sin2φ cosφ = (e^{2iφ} − e^{−4iφ} + 1 − e^{−2iφ}) / 4i
    let prim = |p: f64| {
        (Complex64::from_polar(1.0, 2.0 * p) / (2.0 * I)
            + Complex64::from_polar(1.0, -4.0 * p) / (4.0 * I)
            + p
            + Complex64::from_polar(1.0, -2.0 * p) / (2.0 * I))
            / (4.0 * I)
    };
    prim(range.1) - prim(range.0)
}

/// Same integral by fixed-order Gauss–Legendre and by adaptive Gauss–Kronrod.
pub fn phi_cos_integral_quadrature(range: (f64, f64)) -> Result<(Complex64, Complex64)> {
    let g = |p: f64| Complex64::from_polar(1.0, -p) * (2.0 * p).sin() * p.cos();
    let fixed = GaussLegendre::new(20).integrate(range.0, range.1, g);
    let adapt = adaptive(g, range.0, range.1, &[], AdaptiveOptions::with_tol(1e-15, 1e-15))?;
    Ok((fixed, adapt.value))
}

/// `∫_range w(φ) J(φ) dφ` with `J` from the contour strategy.
fn phi_rho_integral(
    region: &RegionSpec,
    lp: &LocalParams,
    kernel: Kernel,
    weight: impl Fn(f64) -> Complex64,
    contour: &dyn RhoContour,
    opts: &AlphaOptions,
) -> Result<Complex64> {
    let rule = GaussLegendre::new(opts.phi_nodes);
    let p = region.pc_param(lp);
    let q = opts.quad();
    let mut total = ZERO;
    for (phi, w) in rule.mapped(region.phi_range.0, region.phi_range.1) {
        let j = contour.integrate(kernel, p, region.kappa(phi), &q)?;
        total += w * weight(phi) * j;
    }
    Ok(total)
}

/// `α_{i,3}`, the `ln t / t` coefficient of region `i`.
pub fn alpha3_coeff(
    region: &RegionSpec,
    lp: &LocalParams,
    contour: &dyn RhoContour,
    opts: &AlphaOptions,
) -> Result<Complex64> {
    let (d0, _) = region.density_at_z0(lp);
    let pref = lp.df0 * d0 * region.constant(lp) * region.density.phase(lp.omega) / (2.0 * PI);
    // Ω₁ carries −, Ω₄ +, Ω₆ +, Ω₃ − (the sign of ∂̄E and of the region
    // integral combined with the expansion of f^{∓2} − 1).
    let sign = match region.index {
        1 | 3 => -1.0,
        _ => 1.0,
    };
    if pref == ZERO {
        return Ok(ZERO);
    }
    let kernel = Kernel::LogTerm(opts.power_for(region));
    let integral = phi_rho_integral(
        region,
        lp,
        kernel,
        |phi| Complex64::from_polar((2.0 * phi).sin(), 2.0 * phi),
        contour,
        opts,
    )?;
    Ok(sign * pref * integral)
}

/// `(α_{i,1}, α_{i,2})`, the `1/t` coefficients of region `i`.
pub fn alpha12_coeffs(
    region: &RegionSpec,
    lp: &LocalParams,
    contour: &dyn RhoContour,
    opts: &AlphaOptions,
) -> Result<(Complex64, Complex64)> {
    let (_, dd0) = region.density_at_z0(lp);
    if dd0 == ZERO {
        return Ok((ZERO, ZERO));
    }
    let c = region.constant(lp);
    let ph = region.density.phase(lp.omega);
    let p = region.pc_param(lp);
    let (u0, _) = pc_at_zero(p)?;
    // Boundary term of the integration by parts at ρ = 0.
    let s1 = match region.index {
        1 | 4 | 6 => -1.0,
        _ => 1.0,
    };
    let a1 = s1 * u0 * u0 * dd0 * c * ph / 8.0 * phi_cos_integral(region.phi_range);
    // Derivative term: dA²/dρ = −2(p + ½) B(p, s) ds/dρ with
    // ds/dρ ∝ κ_unit / (2√2 e^{−iπ/4}).
    let chain = region.kappa_unit / Complex64::from_polar(2.0 * SQRT_2, -PI / 4.0);
    // The derivative term enters with the opposite sign to the boundary term.
    let s2 = -s1;
    let pref = s2 * SQRT_2 * Complex64::from_polar(1.0, -PI / 4.0) * chain * (p + 0.5) * dd0 * c * ph
        / 2.0;
    let integral = phi_rho_integral(
        region,
        lp,
        Kernel::InverseTerm,
        |phi| Complex64::from((2.0 * phi).sin() * phi.cos()),
        contour,
        opts,
    )?;
    Ok((a1, pref * integral))
}

/// The three coefficients of one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionAlphas {
    pub index: u8,
    pub alpha1: Complex64,
    pub alpha2: Complex64,
    pub alpha3: Complex64,
}

/// All twelve coefficients at one `z₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSet {
    pub z0: f64,
    /// Regions in the order 1, 3, 4, 6.
    pub regions: [RegionAlphas; 4],
    /// `Σ_i α_{i,3}`.
    pub sum_alpha3: Complex64,
    /// The assembled `ln t / t` coefficient of `q` (its modulus does not
    /// depend on `t`; the value is reported at `t = 1`).
    pub alpha1_total: Complex64,
    pub contour: String,
}

impl AlphaSet {
    pub fn region(&self, index: u8) -> Option<&RegionAlphas> {
        self.regions.iter().find(|r| r.index == index)
    }

    fn a3(&self, index: u8) -> Complex64 {
        self.region(index).map_or(ZERO, |r| r.alpha3)
    }

    /// `|α₁,₃ + α₄,₃| / |α₁,₃|` (0 when both vanish).
    pub fn residual_14(&self) -> f64 {
        rel(self.a3(1) + self.a3(4), self.a3(1))
    }

    /// `|α₃,₃ + α₆,₃| / |α₆,₃|`.
    pub fn residual_36(&self) -> f64 {
        rel(self.a3(3) + self.a3(6), self.a3(6))
    }

    /// Largest `|α_{i,3}|`.
    pub fn max_alpha3(&self) -> f64 {
        self.regions.iter().map(|r| r.alpha3.norm()).fold(0.0, f64::max)
    }
}

fn rel(num: Complex64, den: Complex64) -> f64 {
    if num == ZERO {
        0.0
    } else {
        num.norm() / (den.norm() + 1e-300)
    }
}

/// Compute all coefficients at `lp.z0`.
pub fn alpha_set(lp: &LocalParams, contour: &dyn RhoContour, opts: &AlphaOptions) -> Result<AlphaSet> {
    let mut out = Vec::with_capacity(4);
    for region in RegionSpec::all() {
        let (a1, a2) = alpha12_coeffs(&region, lp, contour, opts)?;
        let a3 = alpha3_coeff(&region, lp, contour, opts)?;
        out.push(RegionAlphas {
            index: region.index,
            alpha1: a1,
            alpha2: a2,
            alpha3: a3,
        });
    }
    let regions: [RegionAlphas; 4] = out.try_into().expect("four regions");
    let sum_alpha3 = regions.iter().map(|r| r.alpha3).sum();
    let mut set = AlphaSet {
        z0: lp.z0,
        regions,
        sum_alpha3,
        alpha1_total: ZERO,
        contour: contour.name().to_string(),
    };
    set.alpha1_total = assemble_alpha1(&set, lp, 1.0);
    Ok(set)
}

/// `(2t^{1/2})^{−2iν}`, unimodular for real `ν`.
pub fn scaling_phase(nu: f64, t: f64) -> Complex64 {
    Complex64::from_polar(1.0, -2.0 * nu * (2.0 * t.sqrt()).ln())
}

/// `α₁ = (2i/π) e^{iω} e^{2itθ(z₀)} c(z₀)^{−2} (2t^{1/2})^{−2iν} Σ α_{i,3}`
/// with `θ(z₀; z₀) = −2z₀²`.
pub fn assemble_alpha1(aset: &AlphaSet, lp: &LocalParams, t: f64) -> Complex64 {
    let theta0 = -2.0 * lp.z0 * lp.z0;
    2.0 * I / PI
        * Complex64::from_polar(1.0, lp.omega)
        * Complex64::from_polar(1.0, 2.0 * t * theta0)
        / (lp.c0 * lp.c0)
        * scaling_phase(lp.nu, t)
        * aset.sum_alpha3
}

/// Expected region integral from the coefficients, up to `O(1/t)` terms not
/// captured by `α_{i,1}, α_{i,2}`.
pub fn region_prediction(region: &RegionSpec, aset: &AlphaSet, t: f64) -> Complex64 {
    let r = aset.region(region.index).expect("all regions present");
    region.t_inverse_sign * (r.alpha1 + r.alpha2) / t + r.alpha3 * t.ln() / t
}

/// Tuning of the brute-force region integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOptions {
    /// Truncation of the rescaled radius `ρ√t`.
    pub rho_max: f64,
    /// Width of the fixed Gauss–Legendre panels in `ρ√t`.
    pub panel: f64,
    pub panel_nodes: usize,
    /// Tolerance of the inner adaptive `φ`-integral.
    pub tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            rho_max: 6.0,
            panel: 0.05,
            panel_nodes: 8,
            tol: 1e-10,
        }
    }
}

/// Brute-force double quadrature of
/// `± c_i ∬_{Ω_i} U²(±a, κρ√t) ρ∂̄E_i(ρ, φ) dρ dφ` with the exact `f`, `r`.
///
/// The radius is rescaled, `ρ = ρ′/√t`, and truncated at
/// `ρ′ = min(rho_max, √t · distance to the grid edge)`; beyond it the
/// integrand is a rapidly oscillating `O(ρ′^{−3})` function whose integral is
/// below `1e−3/(t ρ′⁴)` in relative terms.
pub fn region_integral_oracle(
    region: &RegionSpec,
    lp: &LocalParams,
    sd: &ScatteringData,
    t: f64,
    opts: &OracleOptions,
) -> Result<Complex64> {
    if !(t >= 1.0) {
        return Err(Error::Config(format!("oracle requires t ≥ 1, got {t}")));
    }
    if sd.is_trivial() {
        return Ok(ZERO);
    }
    let st = t.sqrt();
    let rho_max = sector_radius(lp, sd, t, opts);
    let lf = LocalFactor::new(lp, sd, local_factor_radius(lp, sd, t, rho_max))?;
    let p = region.pc_param(lp);
    let pco = PcOptions::default();
    let c = region.constant(lp);
    let total = sector_quadrature(region.phi_range, rho_max, opts, |rp, phi| {
        let u2 = kernel_value(Kernel::LogTerm(APower::Squared), p, region.kappa(phi) * rp, &pco)?;
        Ok(u2 * rho_dbar_e(region, lp, sd, Some(&lf), rp / st, phi)?)
    })?;
    Ok(region.integral_sign * c * total / st)
}

/// Truncation radius in `ρ′ = ρ√t`: `min(rho_max, √t · distance to the grid edge)`.
pub fn sector_radius(lp: &LocalParams, sd: &ScatteringData, t: f64, opts: &OracleOptions) -> f64 {
    let (lo, hi) = sd.z_range();
    let edge = (lp.z0 - lo).min(hi - lp.z0);
    opts.rho_max.min(t.sqrt() * edge * 0.999)
}

/// Radius of the [`LocalFactor`] cache that covers a sector of rescaled
/// radius `rho_max`.
pub fn local_factor_radius(lp: &LocalParams, sd: &ScatteringData, t: f64, rho_max: f64) -> f64 {
    let (lo, hi) = sd.z_range();
    let edge = (lp.z0 - lo).min(hi - lp.z0);
    (2.2 * rho_max / t.sqrt()).min(2.0 * edge)
}

/// `∫_0^{rho_max} dρ′ ∫_{φ range} g(ρ′, φ) dφ` over a sector in rescaled polar
/// coordinates.
///
/// The radius uses fixed Gauss–Legendre panels; the angle is adaptive with
/// breakpoints at multiples of the width `1/(8ρ′²)` of the Gaussian factor
/// `e^{−4ρ′²|sin 2φ|}` next to both edges of the sector.
pub fn sector_quadrature<G>(
    phi_range: (f64, f64),
    rho_max: f64,
    opts: &OracleOptions,
    mut g: G,
) -> Result<Complex64>
where
    G: FnMut(f64, f64) -> Result<Complex64>,
{
    let rule = GaussLegendre::new(opts.panel_nodes);
    let n_panels = (rho_max / opts.panel).ceil() as usize;
    let q = AdaptiveOptions {
        abs_tol: opts.tol * 1e-3,
        rel_tol: opts.tol,
        max_subdivisions: 4000,
    };
    let (plo, phi_hi) = phi_range;
    let mut total = ZERO;
    for k in 0..n_panels {
        let a = k as f64 * opts.panel;
        let b = ((k + 1) as f64 * opts.panel).min(rho_max);
        for (rp, w) in rule.mapped(a, b) {
            let scale = 1.0 / (8.0 * rp * rp).max(1.0);
            let mut breaks = Vec::new();
            for m in [1.0, 4.0, 16.0, 64.0] {
                if plo + m * scale < phi_hi - m * scale {
                    breaks.push(plo + m * scale);
                    breaks.push(phi_hi - m * scale);
                }
            }
            let mut err = None;
            let inner = adaptive(
                |phi| match g(rp, phi) {
                    Ok(v) => v,
                    Err(e) => {
                        err.get_or_insert(e);
                        ZERO
                    }
                },
                plo,
                phi_hi,
                &breaks,
                q,
            )?;
            if let Some(e) = err {
                return Err(e);
            }
            total += w * inner.value;
        }
    }
    Ok(total)
}

/// Serializable per-`z₀` report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaReport {
    pub z0: f64,
    pub params: LocalParams,
    pub alphas: AlphaSet,
    pub residual_14: f64,
    pub residual_36: f64,
    /// `|α₁| / max|α_{i,3}|`.
    pub alpha1_relative: f64,
    pub options: AlphaOptions,
}

impl AlphaReport {
    pub fn new(lp: &LocalParams, alphas: AlphaSet, options: AlphaOptions) -> Self {
        let alpha1_relative = rel(alphas.alpha1_total, Complex64::from(alphas.max_alpha3()));
        Self {
            z0: lp.z0,
            params: *lp,
            residual_14: alphas.residual_14(),
            residual_36: alphas.residual_36(),
            alpha1_relative,
            alphas,
            options,
        }
    }
}

/// `1/√2`, re-exported for callers building region constants by hand.
pub const INV_SQRT_2: f64 = FRAC_1_SQRT_2;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::UniformAxis;

    fn model_sd() -> ScatteringData {
        let axis = UniformAxis::new(-6.0, 6.0, 601).unwrap();
        ScatteringData::from_fn(axis, |z| {
            Complex64::from_polar(0.5 * (-(z - 0.3) * (z - 0.3)).exp(), 0.4 * z)
        })
        .unwrap()
    }

    #[test]
    fn region_table() {
        let all = RegionSpec::all();
        assert_eq!(all.map(|r| r.index), [1, 3, 4, 6]);
        assert_eq!(all[0].phi_range, (0.0, PI / 4.0));
        assert_eq!(all[1].phi_range, (3.0 * PI / 4.0, PI));
        assert_eq!(all[2].phi_range, (PI, 5.0 * PI / 4.0));
        assert_eq!(all[3].phi_range, (-PI / 4.0, 0.0));
        assert!(RegionSpec::new(2).is_err());
        // Every ray lies strictly inside the decay sector |arg s| < π/4.
        for r in all {
            for k in 1..20 {
                let phi = r.phi_range.0 + (r.phi_range.1 - r.phi_range.0) * k as f64 / 20.0;
                let arg = r.kappa(phi).arg();
                assert!(arg.abs() < PI / 4.0, "region {} φ={phi}: arg {arg}", r.index);
            }
        }
    }

    #[test]
    fn dbar_vanishes_for_flat_density() {
        let axis = UniformAxis::new(-6.0, 6.0, 601).unwrap();
        let sd = ScatteringData::from_fn(axis, |z| {
            Complex64::from_polar(0.4 * (-(z * z * z * z) / 50.0).exp(), 0.7)
        })
        .unwrap();
        let lp = LocalParams::compute(&sd, 0.0).unwrap();
        let r1 = RegionSpec::new(1).unwrap();
        // r′ = 0 at u = z₀ (φ = π/2 would keep u = z₀; use tiny ρ instead).
        let v = rho_dbar_e(&r1, &lp, &sd, None, 1e-6, PI / 8.0).unwrap();
        assert!(v.norm() < 1e-12, "{v}");
        // Sector boundaries: sin2φ = 0 at φ = 0; cos2φ = 0 at φ = π/4.
        let sd = model_sd();
        let lp = LocalParams::compute(&sd, 0.3).unwrap();
        let at0 = rho_dbar_e(&r1, &lp, &sd, None, 0.1, 0.0).unwrap();
        let (r, dr) = sd.r_at(0.4).unwrap();
        let want = 0.05 * dr * Complex64::from_polar(1.0, -lp.omega);
        assert!((at0 - want).norm() < 1e-14);
        let atq = rho_dbar_e(&r1, &lp, &sd, None, 0.1, PI / 4.0).unwrap();
        let u = 0.3 + 0.1 * (PI / 4.0).cos();
        let (ru, _) = sd.r_at(u).unwrap();
        let want = I * Complex64::from_polar(1.0, PI / 4.0)
            * (lp.r0.norm() - ru * Complex64::from_polar(1.0, -lp.omega));
        assert!((atq - want).norm() < 1e-14, "{atq} vs {want}");
        let _ = r;
    }

    #[test]
    fn dbar_with_independent_derivative() {
        let sd = model_sd();
        let lp = LocalParams::compute(&sd, 0.3).unwrap();
        let (rho, phi) = (0.1, PI / 8.0);
        let r1 = RegionSpec::new(1).unwrap();
        let got = dbar_e(&r1, &lp, &sd, rho, phi).unwrap();
        let u = 0.3 + rho * phi.cos();
        let h = 1e-4;
        let drfd = (sd.r_at(u + h).unwrap().0 - sd.r_at(u - h).unwrap().0) / (2.0 * h);
        let (r, _) = sd.r_at(u).unwrap();
        let f2 = f_factor(&lp, &sd, 0.3 + Complex64::from_polar(rho, phi)).unwrap().powi(-2);
        let ph = Complex64::from_polar(1.0, -lp.omega);
        let want = I * Complex64::from_polar(1.0, phi) / rho
            * (2.0 * phi).sin()
            * (lp.r0.norm() - f2 * r * ph)
            + 0.5 * (2.0 * phi).cos() * f2 * drfd * ph;
        assert!((got - want).norm() < 1e-6, "{got} vs {want}");
    }

    #[test]
    fn phi_integral_two_rules_and_closed_form() {
        for r in RegionSpec::all() {
            let exact = phi_cos_integral(r.phi_range);
            let (fixed, adapt) = phi_cos_integral_quadrature(r.phi_range).unwrap();
            assert!((fixed - adapt).norm() < 1e-12);
            assert!((fixed - exact).norm() < 1e-13, "{} {fixed} {exact}", r.index);
        }
    }

    #[test]
    fn contours_agree() {
        let sd = model_sd();
        let lp = LocalParams::compute(&sd, 0.3).unwrap();
        let q = AdaptiveOptions::with_tol(1e-12, 1e-12);
        for r in RegionSpec::all() {
            let p = r.pc_param(&lp);
            for &phi in &[r.phi_range.0 + 0.1, r.phi_range.1 - 0.2] {
                let k = r.kappa(phi);
                for kernel in [Kernel::LogTerm(APower::Squared), Kernel::LogTerm(APower::Single), Kernel::InverseTerm] {
                    let a = SteepestDescent::default().integrate(kernel, p, k, &q).unwrap();
                    let b = RealAxis.integrate(kernel, p, k, &q).unwrap();
                    assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()), "region {} {kernel:?}: {a} vs {b}", r.index);
                }
            }
        }
    }

    #[test]
    fn cancellation_and_assembly() {
        let sd = model_sd();
        let lp = LocalParams::compute(&sd, 0.8).unwrap();
        let opts = AlphaOptions::default();
        let set = alpha_set(&lp, &SteepestDescent::default(), &opts).unwrap();
        assert!(set.max_alpha3() > 1e-4);
        assert!(set.residual_14() < 1e-8, "{}", set.residual_14());
        assert!(set.residual_36() < 1e-8, "{}", set.residual_36());
        assert!(set.alpha1_total.norm() <= 4.0 * 1e-8 * set.max_alpha3());
        assert!((scaling_phase(lp.nu, 37.0).norm() - 1.0).abs() < 1e-15);
        // The printed single-A form also cancels (it changes both partners).
        let single = AlphaOptions { a_power: APower::Single, ..opts };
        let s2 = alpha_set(&lp, &SteepestDescent::default(), &single).unwrap();
        assert!(s2.residual_36() < 1e-8);
        assert!((s2.region(6).unwrap().alpha3 - set.region(6).unwrap().alpha3).norm() > 1e-6);
        // c₂,₂ rebuilt from its definition.
        let c22 = -SQRT_2 * Complex64::from_polar(1.0, -PI / 4.0) * (lp.a + 0.5) * lp.consts.c1
            * Complex64::from_polar(1.0, -lp.omega)
            / 2.0;
        assert!((c22 - lp.consts.c22).norm() < 1e-15);
        let a12 = set.region(1).unwrap().alpha2;
        let direct = -c22 * lp.dr0
            * phi_rho_integral(
                &RegionSpec::new(1).unwrap(),
                &lp,
                Kernel::InverseTerm,
                |phi| Complex64::from((2.0 * phi).sin() * phi.cos()),
                &SteepestDescent::default(),
                &opts,
            )
            .unwrap();
        assert!((a12 - direct).norm() < 1e-14 * (1.0 + a12.norm()));
    }

    #[test]
    fn trivial_data_gives_zero() {
        let axis = UniformAxis::new(-6.0, 6.0, 121).unwrap();
        let sd = ScatteringData::from_fn(axis, |_| ZERO).unwrap();
        let lp = LocalParams::compute(&sd, 0.1).unwrap();
        let set = alpha_set(&lp, &SteepestDescent::default(), &AlphaOptions::default()).unwrap();
        assert_eq!(set.max_alpha3(), 0.0);
        assert_eq!(set.alpha1_total, ZERO);
        let r1 = RegionSpec::new(1).unwrap();
        assert_eq!(region_integral_oracle(&r1, &lp, &sd, 10.0, &OracleOptions::default()).unwrap(), ZERO);
    }
}
