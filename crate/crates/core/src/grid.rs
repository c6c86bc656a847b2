//! Sampled complex-valued functions on uniform real grids.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{five_point_derivatives, hermite, UniformAxis};

/// A complex function sampled on a uniform grid, with cached first derivatives
/// for C¹ cubic interpolation.
#[derive(Debug, Clone)]
pub struct ComplexGrid1D {
    axis: UniformAxis,
    vals: Vec<Complex64>,
    derivs: Vec<Complex64>,
}

impl ComplexGrid1D {
    pub fn new(axis: UniformAxis, vals: Vec<Complex64>) -> Result<Self> {
        if vals.len() != axis.len {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} grid points",
                vals.len(),
                axis.len
            )));
        }
        if axis.len < 5 {
            return Err(Error::InvalidGrid("need at least 5 samples".into()));
        }
        let (derivs, _) = five_point_derivatives(&vals, axis.step);
        Ok(Self { axis, vals, derivs })
    }

    /// Sample `f` on `len` uniformly spaced points of `[lo, hi]`.
    pub fn from_fn<F>(lo: f64, hi: f64, len: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> Complex64,
    {
        let axis = UniformAxis::new(lo, hi, len)?;
        let vals = axis.points().map(f).collect();
        Self::new(axis, vals)
    }

    /// Build from explicit abscissae, checking uniform spacing.
    pub fn from_samples(xs: &[f64], vals: Vec<Complex64>) -> Result<Self> {
        if xs.len() < 2 {
            return Err(Error::InvalidGrid("need at least 2 points".into()));
        }
        let axis = UniformAxis::new(xs[0], xs[xs.len() - 1], xs.len())?;
        for (i, &x) in xs.iter().enumerate() {
            if (x - axis.point(i)).abs() > 1e-12 * axis.step.max(x.abs()) + 1e-12 * axis.step {
                return Err(Error::InvalidGrid(format!(
                    "non-uniform spacing at index {i}"
                )));
            }
        }
        Self::new(axis, vals)
    }

    pub fn axis(&self) -> &UniformAxis {
        &self.axis
    }

    pub fn dx(&self) -> f64 {
        self.axis.step
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn xs(&self) -> Vec<f64> {
        self.axis.points().collect()
    }

    pub fn vals(&self) -> &[Complex64] {
        &self.vals
    }

    pub fn derivs(&self) -> &[Complex64] {
        &self.derivs
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Cubic Hermite interpolation (value only).
    pub fn eval(&self, x: f64) -> Result<Complex64> {
        Ok(hermite(&self.axis, &self.vals, &self.derivs, x)?.0)
    }

    /// Cubic Hermite interpolation: value and derivative.
    pub fn eval_with_derivative(&self, x: f64) -> Result<(Complex64, Complex64)> {
        hermite(&self.axis, &self.vals, &self.derivs, x)
    }

    /// Check `|q(edges)| < rel · max|q|`.
    pub fn check_decay(&self, rel: f64) -> Result<()> {
        let max = self.max_abs();
        let edge = self.vals[0].norm().max(self.vals[self.len() - 1].norm());
        if max > 0.0 && edge >= rel * max {
            return Err(Error::DecayViolation { edge, max });
        }
        Ok(())
    }

    /// Trapezoidal ∫|q|² dx (spectrally accurate for smooth decaying data).
    pub fn mass(&self) -> f64 {
        self.vals.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.axis.step
    }

    /// Write `x, Re, Im` rows.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "re", "im"])?;
        for (x, v) in self.axis.points().zip(&self.vals) {
            w.write_record(&[x.to_string(), v.re.to_string(), v.im.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut xs = Vec::new();
        let mut vals = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::Config(format!("missing column {i}")))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(e.to_string()))
            };
            xs.push(get(0)?);
            vals.push(Complex64::new(get(1)?, get(2)?));
        }
        Self::from_samples(&xs, vals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolates_smooth_function() {
        let g = ComplexGrid1D::from_fn(-5.0, 5.0, 1001, |x| {
            Complex64::new(x.cos(), (0.5 * x).sin()) * (-0.1 * x * x).exp()
        })
        .unwrap();
        for &x in &[-4.321f64, -0.0049, 1.2345, 4.999] {
            let want = Complex64::new(x.cos(), (0.5 * x).sin()) * (-0.1 * x * x).exp();
            assert!((g.eval(x).unwrap() - want).norm() < 1e-9);
        }
        assert!(g.eval(5.1).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let axis = UniformAxis::new(0.0, 1.0, 10).unwrap();
        assert!(ComplexGrid1D::new(axis, vec![Complex64::new(0.0, 0.0); 9]).is_err());
        let xs = [0.0, 0.1, 0.2, 0.35, 0.4, 0.5];
        assert!(ComplexGrid1D::from_samples(&xs, vec![Complex64::new(0.0, 0.0); 6]).is_err());
    }

    #[test]
    fn decay_check() {
        let g = ComplexGrid1D::from_fn(-30.0, 30.0, 601, |x| Complex64::from(0.3 / x.cosh()))
            .unwrap();
        g.check_decay(1e-8).unwrap();
        let h = ComplexGrid1D::from_fn(-3.0, 3.0, 61, |x| Complex64::from(0.3 / x.cosh())).unwrap();
        assert!(h.check_decay(1e-8).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let dir = std::env::temp_dir().join(format!("nlsasym-grid-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("g.csv");
        let g = ComplexGrid1D::from_fn(-1.0, 1.0, 21, |x| Complex64::new(x, x * x)).unwrap();
        g.write_csv(&path).unwrap();
        let h = ComplexGrid1D::read_csv(&path).unwrap();
        assert_eq!(g.len(), h.len());
        for (a, b) in g.vals().iter().zip(h.vals()) {
            assert!((a - b).norm() < 1e-15);
        }
        std::fs::remove_dir_all(&dir).ok();
    }
}
