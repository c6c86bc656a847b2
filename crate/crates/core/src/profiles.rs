//! Initial-data families `q₀(x)`.
//!
//! Each family is a [`InitialProfile`] trait object registered by name; a
//! [`ProfileSpec`] carries the family name plus the shape parameters shared by
//! all families:
//!
//! `q₀(x) = amplitude · shape((x − center)/width) · e^{i·chirp·x}`.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::ComplexGrid1D;
use crate::registry::{Named, Registry};

pub trait InitialProfile: Named + Send + Sync {
    /// The real, unit-height shape function `s(ξ)`.
    fn shape(&self, xi: f64) -> f64;

    /// Half-width (in units of `width`) beyond which `|s| < threshold`.
    fn support(&self, threshold: f64) -> f64;
}

pub struct Sech;

impl Named for Sech {
    fn name(&self) -> &str {
        "sech"
    }
    fn description(&self) -> &str {
        "amplitude·sech((x−c)/w)·e^{i·chirp·x}"
    }
}

impl InitialProfile for Sech {
    fn shape(&self, xi: f64) -> f64 {
        1.0 / xi.cosh()
    }
    fn support(&self, threshold: f64) -> f64 {
        (2.0 / threshold).ln()
    }
}

pub struct Gaussian;

impl Named for Gaussian {
    fn name(&self) -> &str {
        "gaussian"
    }
    fn description(&self) -> &str {
        "amplitude·exp(−((x−c)/w)²)·e^{i·chirp·x}"
    }
}

impl InitialProfile for Gaussian {
    fn shape(&self, xi: f64) -> f64 {
        (-xi * xi).exp()
    }
    fn support(&self, threshold: f64) -> f64 {
        (-threshold.ln()).sqrt()
    }
}

pub struct Zero;

impl Named for Zero {
    fn name(&self) -> &str {
        "zero"
    }
    fn description(&self) -> &str {
        "q₀ ≡ 0"
    }
}

impl InitialProfile for Zero {
    fn shape(&self, _xi: f64) -> f64 {
        0.0
    }
    fn support(&self, _threshold: f64) -> f64 {
        1.0
    }
}

/// All built-in families; `sech` is the default.
pub fn profile_registry() -> Registry<dyn InitialProfile> {
    Registry::new("initial profile")
        .with(Arc::new(Sech) as Arc<dyn InitialProfile>)
        .with(Arc::new(Gaussian) as Arc<dyn InitialProfile>)
        .with(Arc::new(Zero) as Arc<dyn InitialProfile>)
}

/// Serializable description of initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSpec {
    pub family: String,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub chirp: f64,
    /// Sampling half-box `[−L, L]` in x.
    pub half_box: f64,
    /// Sampling step in x.
    pub dx: f64,
}

impl Default for ProfileSpec {
    fn default() -> Self {
        Self {
            family: "sech".into(),
            amplitude: 0.3,
            width: 1.0,
            center: 0.0,
            chirp: 0.0,
            half_box: 30.0,
            dx: 0.02,
        }
    }
}

impl ProfileSpec {
    pub fn sech(amplitude: f64) -> Self {
        Self {
            amplitude,
            ..Self::default()
        }
    }

    pub fn gaussian(amplitude: f64) -> Self {
        Self {
            family: "gaussian".into(),
            amplitude,
            half_box: 12.0,
            ..Self::default()
        }
    }

    pub fn zero() -> Self {
        Self {
            family: "zero".into(),
            amplitude: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.half_box > 0.0 && self.dx > 0.0) {
            return Err(Error::Config(
                "profile width, half_box and dx must be positive".into(),
            ));
        }
        if !self.amplitude.is_finite() || !self.chirp.is_finite() || !self.center.is_finite() {
            return Err(Error::Config("profile parameters must be finite".into()));
        }
        Ok(())
    }

    /// A closure evaluating `q₀` exactly.
    pub fn evaluator(
        &self,
        registry: &Registry<dyn InitialProfile>,
    ) -> Result<impl Fn(f64) -> Complex64 + Send + Sync + Clone> {
        self.validate()?;
        let fam = registry.get(&self.family)?;
        let (amp, w, c, k) = (self.amplitude, self.width, self.center, self.chirp);
        Ok(move |x: f64| {
            amp * fam.shape((x - c) / w) * Complex64::from_polar(1.0, k * x)
        })
    }

    /// Sample on `[−half_box, half_box]` with spacing ≈ `dx`.
    pub fn sample(&self, registry: &Registry<dyn InitialProfile>) -> Result<ComplexGrid1D> {
        let f = self.evaluator(registry)?;
        let n = (2.0 * self.half_box / self.dx).round() as usize + 1;
        ComplexGrid1D::from_fn(-self.half_box, self.half_box, n, f)
    }

    /// Sample with the built-in registry.
    pub fn grid(&self) -> Result<ComplexGrid1D> {
        self.sample(&profile_registry())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_and_defaults() {
        let reg = profile_registry();
        assert_eq!(reg.default_name(), Some("sech"));
        assert_eq!(reg.names(), vec!["gaussian", "sech", "zero"]);
        let g = ProfileSpec::gaussian(0.5).grid().unwrap();
        assert!((g.eval(0.0).unwrap() - 0.5).norm() < 1e-15);
        assert!((g.eval(1.0).unwrap() - 0.5 * (-1f64).exp()).norm() < 1e-9);
        g.check_decay(1e-8).unwrap();
        ProfileSpec::sech(0.3).grid().unwrap().check_decay(1e-8).unwrap();
        assert_eq!(ProfileSpec::zero().grid().unwrap().max_abs(), 0.0);
    }

    #[test]
    fn support_bounds_are_tight_enough() {
        for fam in profile_registry().list() {
            if fam.name() == "zero" {
                continue;
            }
            let s = fam.support(1e-10);
            assert!(fam.shape(s) <= 1.0001e-10, "{}", fam.name());
            assert!(fam.shape(0.9 * s) > 1e-10, "{}", fam.name());
        }
    }

    #[test]
    fn rejects_unknown_family_and_bad_width() {
        let spec = ProfileSpec {
            family: "lorentzian".into(),
            ..ProfileSpec::default()
        };
        assert!(matches!(spec.grid(), Err(Error::UnknownName { .. })));
        let spec = ProfileSpec {
            width: 0.0,
            ..ProfileSpec::default()
        };
        assert!(spec.grid().is_err());
    }

    #[test]
    fn config_round_trip() {
        let s: ProfileSpec = serde_json::from_str(r#"{"family":"gaussian","amplitude":0.5}"#).unwrap();
        assert_eq!(s.family, "gaussian");
        assert_eq!(s.width, 1.0);
        let back: ProfileSpec = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(s, back);
    }
}
