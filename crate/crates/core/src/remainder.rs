//! Remainder integrals of the Ω₁ expansion.
//!
//! After the `1/t` and `ln t/t` coefficients are peeled off the Ω₁ region
//! integral, four families of integrals are left over.  In the rescaled radius
//! `ρ′ = ρ√t` (so `u = z₀ + ρ′cos φ/√t`, `U² = U²(a, κρ′)`,
//! `B = U(a, κρ′)U(a+1, κρ′)`) they read
//!
//! | family   | definition                                                                               | bound             |
//! |----------|------------------------------------------------------------------------------------------|-------------------|
//! | `Î₂`     | `c₁e^{−iω}/(8√t) ∬ e^{−iφ} sin 2φ · U² (r(u) − r₀ − ρ r′(u) cos φ)/ρ′²`                  | `t^{−5/4}`        |
//! | `Ī₂,₂`   | `c₂,₂/√t ∬ sin 2φ · B (r(u) − r₀ − ρ r′(z₀) cos φ)/ρ′`                                  | `t^{−5/4}`        |
//! | `Ĩ₀`     | `c₁e^{−iω}/√t ∬ i e^{iφ} sin 2φ · U² (f^{−2} − 1)(r(u) − r₀)`                            | `ln t / t^{5/4}`  |
//! | `I₃`     | `c₁e^{−iω}/(2t) ∬ cos 2φ · U² ρ′ f^{−2} r′(u)`                                           | `t^{−1}`          |
//!
//! with `∬ = ∫_0^{π/4} dφ ∫_0^∞ dρ′`.  The bounds are upper bounds; for smooth
//! reflection coefficients the first three decay like `t^{−3/2}` (times `ln t`
//! for `Ĩ₀`), comfortably inside them.  They are evaluated by the same sector
//! quadrature as the region-integral oracle, truncated at `ρ′ ≤ rho_max`.
//!
//! The Taylor differences are `O(ρ²)` and are divided by `ρ′²` or `ρ′`; formed
//! directly they lose all digits as `ρ′ → 0`, which stalls the adaptive
//! quadrature at large `t`.  Below [`TAYLOR_SWITCH`] they are evaluated from
//! the cancellation-free integral forms
//! `r(z₀+h) − r₀ − h r′(z₀+h) = −h² ∫₀¹ τ r″(z₀+hτ) dτ` and
//! `r(z₀+h) − r₀ − h r′(z₀) = h² ∫₀¹ (1−τ) r″(z₀+hτ) dτ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::alpha::{
    kernel_value, local_factor_radius, sector_quadrature, sector_radius, APower, Kernel,
    OracleOptions,
};
use crate::error::{Error, Result};
use crate::rhp::{LocalFactor, LocalParams};
use crate::quad::GaussLegendre;
use crate::scattering::ScatteringData;
use crate::specfun::PcOptions;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Step `|h| = |u − z₀|` below which the Taylor differences use their
/// integral forms (a couple of grid cells of the default z-grid, where
/// Gauss–Legendre on the smooth `r″` interpolant is accurate).
pub const TAYLOR_SWITCH: f64 = 0.02;
const TAYLOR_NODES: usize = 8;

/// Where the derivative in a Taylor difference is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Derivative {
    /// `r(z₀+h) − r₀ − h r′(z₀+h)`.
    AtU,
    /// `r(z₀+h) − r₀ − h r′(z₀)`.
    AtZ0,
}

fn taylor_difference(
    sd: &ScatteringData,
    lp: &LocalParams,
    rule: &GaussLegendre,
    h: f64,
    (r, dr): (Complex64, Complex64),
    kind: Derivative,
) -> Result<Complex64> {
    if h.abs() >= TAYLOR_SWITCH {
        return Ok(match kind {
            Derivative::AtU => r - lp.r0 - h * dr,
            Derivative::AtZ0 => r - lp.r0 - h * lp.dr0,
        });
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (tau, w) in rule.mapped(0.0, 1.0) {
        let (_, d2r) = sd.dr_at(lp.z0 + h * tau)?;
        acc += w * d2r
            * match kind {
                Derivative::AtU => -tau,
                Derivative::AtZ0 => 1.0 - tau,
            };
    }
    Ok(h * h * acc)
}

/// The four remainder families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Remainder {
    /// `Î₂`.
    HatI2,
    /// `Ī₂,₂`.
    BarI22,
    /// `Ĩ₀`.
    TildeI0,
    /// `I₃`.
    I3,
}

impl Remainder {
    pub const ALL: [Self; 4] = [Self::HatI2, Self::BarI22, Self::TildeI0, Self::I3];

    pub fn label(self) -> &'static str {
        match self {
            Self::HatI2 => "hat_I2",
            Self::BarI22 => "bar_I22",
            Self::TildeI0 => "tilde_I0",
            Self::I3 => "I3",
        }
    }

    /// Exponent `p` of the bound `t^{−p}` (times `ln t` for `Ĩ₀`).
    pub fn bound_exponent(self) -> f64 {
        match self {
            Self::HatI2 | Self::BarI22 | Self::TildeI0 => 1.25,
            Self::I3 => 1.0,
        }
    }

    fn needs_f(self) -> bool {
        matches!(self, Self::TildeI0 | Self::I3)
    }
}

/// Default quadrature options for the remainder families.
///
/// The Taylor differences `r(u) − r₀ − ρr′cos φ` are formed in floating point
/// and divided by `ρ′²`, so near `ρ′ = 0` they carry round-off of order
/// `1e−16/ρ′²`; the inner tolerance is set above that noise floor.
pub fn default_options() -> OracleOptions {
    OracleOptions {
        tol: 1e-8,
        ..OracleOptions::default()
    }
}

/// Value of one remainder family at one time.
pub fn remainder_integral(
    which: Remainder,
    lp: &LocalParams,
    sd: &ScatteringData,
    t: f64,
    opts: &OracleOptions,
) -> Result<Complex64> {
    if !(t >= 1.0) {
        return Err(Error::Config(format!("remainder integrals need t ≥ 1, got {t}")));
    }
    if sd.is_trivial() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let st = t.sqrt();
    let rho_max = sector_radius(lp, sd, t, opts);
    let lf = if which.needs_f() {
        Some(LocalFactor::new(lp, sd, local_factor_radius(lp, sd, t, rho_max))?)
    } else {
        None
    };
    let a = lp.a;
    let pco = PcOptions::default();
    let kappa_unit = Complex64::from_polar(2.0 * std::f64::consts::SQRT_2, -PI / 4.0);
    let c1w = lp.consts.c1 * Complex64::from_polar(1.0, -lp.omega);
    let r0 = lp.r0;
    let rule = GaussLegendre::new(TAYLOR_NODES);

    let integral = sector_quadrature((0.0, PI / 4.0), rho_max, opts, |rp, phi| {
        let s = kappa_unit * Complex64::from_polar(rp, phi);
        let rho = rp / st;
        let (cp, sp) = (phi.cos(), phi.sin());
        let u = lp.z0 + rho * cp;
        let (r, dr) = sd.r_at(u)?;
        let f_m2 = |lf: &Option<LocalFactor>| -> Result<Complex64> {
            let lf = lf.as_ref().expect("local factor built for this family");
            Ok(lf.f(lp.z0 + Complex64::new(rho * cp, rho * sp))?.powi(-2))
        };
        let sin2 = (2.0 * phi).sin();
        Ok(match which {
            Remainder::HatI2 => {
                let u2 = kernel_value(Kernel::LogTerm(APower::Squared), a, s, &pco)?;
                let diff = taylor_difference(sd, lp, &rule, rho * cp, (r, dr), Derivative::AtU)?;
                Complex64::from_polar(sin2, -phi) * u2 * diff / (rp * rp)
            }
            Remainder::BarI22 => {
                let b = kernel_value(Kernel::InverseTerm, a, s, &pco)?;
                let diff = taylor_difference(sd, lp, &rule, rho * cp, (r, dr), Derivative::AtZ0)?;
                sin2 * b * diff / rp
            }
            Remainder::TildeI0 => {
                let u2 = kernel_value(Kernel::LogTerm(APower::Squared), a, s, &pco)?;
                I * Complex64::from_polar(sin2, phi) * u2 * (f_m2(&lf)? - 1.0) * (r - r0)
            }
            Remainder::I3 => {
                let u2 = kernel_value(Kernel::LogTerm(APower::Squared), a, s, &pco)?;
                (2.0 * phi).cos() * u2 * rp * f_m2(&lf)? * dr
            }
        })
    })?;

    Ok(match which {
        Remainder::HatI2 => c1w * integral / (8.0 * st),
        Remainder::BarI22 => lp.consts.c22 * integral / st,
        Remainder::TildeI0 => c1w * integral / st,
        Remainder::I3 => c1w * integral / (2.0 * t),
    })
}

/// One family evaluated on a time schedule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemainderSeries {
    pub family: Remainder,
    pub ts: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl RemainderSeries {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    /// `|I(t)| t^{p} / ln t` with `p` the bound exponent — bounded when the
    /// `ln t / t^{p}` bound holds.
    pub fn normalized_log(&self) -> Vec<f64> {
        let p = self.family.bound_exponent();
        self.ts
            .iter()
            .zip(&self.values)
            .map(|(&t, v)| v.norm() * t.powf(p) / t.ln())
            .collect()
    }
}

/// Evaluate `which` at every time in `ts`.
pub fn remainder_series(
    which: Remainder,
    lp: &LocalParams,
    sd: &ScatteringData,
    ts: &[f64],
    opts: &OracleOptions,
) -> Result<RemainderSeries> {
    let values = ts
        .iter()
        .map(|&t| remainder_integral(which, lp, sd, t, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(RemainderSeries {
        family: which,
        ts: ts.to_vec(),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::UniformAxis;

    fn model(c: f64) -> ScatteringData {
        let axis = UniformAxis::new(-6.0, 6.0, 1201).unwrap();
        ScatteringData::from_fn(axis, |z| {
            Complex64::from_polar(c * (-(z - 0.3f64).powi(2)).exp(), 0.4 * z)
        })
        .unwrap()
    }

    #[test]
    fn linear_reflection_kills_taylor_remainders() {
        // r(u) − r₀ − ρ r′ cos φ vanishes for r affine near z₀; the flat-top
        // cutoff only enters through derivatives of size (1.1/4)^16 ≈ 1e−9.
        let axis = UniformAxis::new(-6.0, 6.0, 1201).unwrap();
        let sd = ScatteringData::from_fn(axis, |z| {
            Complex64::new(0.1 + 0.02 * z, 0.01 * z) * (-(z / 4.0f64).powi(16)).exp()
        })
        .unwrap();
        let lp = LocalParams::compute(&sd, 0.5).unwrap();
        let opts = default_options();
        let scale = remainder_integral(Remainder::I3, &lp, &sd, 100.0, &opts).unwrap().norm();
        for which in [Remainder::HatI2, Remainder::BarI22] {
            let v = remainder_integral(which, &lp, &sd, 100.0, &opts).unwrap();
            assert!(v.norm() < 1e-6 * scale, "{which:?}: {v} vs {scale}");
        }
    }

    #[test]
    fn integral_form_matches_direct_difference() {
        let sd = model(0.5);
        let lp = LocalParams::compute(&sd, 0.8).unwrap();
        let rule = GaussLegendre::new(TAYLOR_NODES);
        for &h in &[0.019, -0.019, 0.012] {
            let rd = sd.r_at(lp.z0 + h).unwrap();
            for kind in [Derivative::AtU, Derivative::AtZ0] {
                let direct = match kind {
                    Derivative::AtU => rd.0 - lp.r0 - h * rd.1,
                    Derivative::AtZ0 => rd.0 - lp.r0 - h * lp.dr0,
                };
                let integral = taylor_difference(&sd, &lp, &rule, h, rd, kind).unwrap();
                // Both forms agree to the accuracy of the sampled derivatives
                // (five-point differences on a 0.01 grid, ~1e−9 absolute).
                assert!((direct - integral).norm() < 2e-9, "{h} {kind:?}: {direct} vs {integral}");
            }
        }
    }

    #[test]
    fn taylor_remainders_decay_faster_than_inverse_t() {
        let sd = model(0.5);
        let lp = LocalParams::compute(&sd, 0.8).unwrap();
        let opts = default_options();
        for which in [Remainder::HatI2, Remainder::BarI22] {
            let a = remainder_integral(which, &lp, &sd, 100.0, &opts).unwrap().norm();
            let b = remainder_integral(which, &lp, &sd, 400.0, &opts).unwrap().norm();
            // t^{−3/2} ⇒ ratio 8; anything steeper than t^{−5/4} gives > 5.66.
            assert!(a / b > 5.66, "{which:?}: {a} → {b}");
        }
    }
}
