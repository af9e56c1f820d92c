//! The two simulation designs: random low-frequency curves with a scaled
//! annual component (scheme 1), and four low frequencies plus a scaled
//! high-frequency disturbance (scheme 2).

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::basis::{FourierBasis, FunctionSet};
use crate::error::{Error, Result};
use crate::smoothing::{FunctionalSample, RawCurveSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Frequencies 1..3 at unit scale, the annual frequency scaled by `sqrt(L)`.
    Annual,
    /// Frequencies 1..4 at unit scale, frequency `hfd_frequency` scaled by `sqrt(L)`.
    HighFrequency,
}

impl Scheme {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Scheme::Annual),
            2 => Ok(Scheme::HighFrequency),
            _ => Err(Error::invalid(format!("unknown scheme {n}, expected 1 or 2"))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Scheme::Annual => 1,
            Scheme::HighFrequency => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub n_curves: usize,
    pub span: f64,
    pub years: usize,
    pub level: f64,
    pub hfd_frequency: usize,
    pub n_grid: usize,
    pub noise_sd: f64,
    pub seed: u64,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, level: f64, seed: u64) -> Self {
        Self {
            scheme,
            n_curves: 200,
            span: 100.0,
            years: 4,
            level,
            hfd_frequency: 19,
            n_grid: 201,
            noise_sd: 0.0,
            seed,
        }
    }

    /// Equispaced sampling times `j T / n`, `j = 0..n`.
    pub fn times(&self) -> Vec<f64> {
        (0..self.n_grid).map(|j| j as f64 * self.span / self.n_grid as f64).collect()
    }

    /// `(frequency, scale)` pairs of the generating model.
    fn sources(&self) -> Vec<(usize, f64)> {
        let scaled = self.level.sqrt();
        match self.scheme {
            Scheme::Annual => vec![(1, 1.0), (2, 1.0), (3, 1.0), (self.years, scaled)],
            Scheme::HighFrequency => {
                let mut s: Vec<(usize, f64)> = (1..=4).map(|k| (k, 1.0)).collect();
                s.push((self.hfd_frequency, scaled));
                s
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.level >= 0.0 && self.level.is_finite()) {
            return Err(Error::invalid(format!("level must be nonnegative, got {}", self.level)));
        }
        if self.n_curves < 2 {
            return Err(Error::invalid("need at least 2 curves"));
        }
        if !(self.span > 0.0 && self.span.is_finite()) {
            return Err(Error::invalid("span must be positive"));
        }
        if self.years == 0 {
            return Err(Error::invalid("years must be positive"));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::invalid("noise standard deviation must be nonnegative"));
        }
        match self.scheme {
            Scheme::Annual if self.years <= 3 => {
                return Err(Error::invalid("annual frequency must exceed the background frequencies 1..3"))
            }
            Scheme::HighFrequency if self.hfd_frequency % self.years == 0 || self.hfd_frequency <= 4 => {
                return Err(Error::invalid(format!(
                    "disturbance frequency {} must exceed 4 and not be a multiple of {} years",
                    self.hfd_frequency, self.years
                )))
            }
            _ => {}
        }
        let top = self.sources().iter().map(|s| s.0).max().expect("nonempty");
        if self.n_grid <= 2 * top {
            return Err(Error::invalid(format!(
                "{} grid points cannot resolve frequency {top}",
                self.n_grid
            )));
        }
        Ok(())
    }
}

/// Sampled curves together with their exact coefficients.
#[derive(Debug, Clone)]
pub struct SimulatedData {
    pub raw: RawCurveSet,
    pub truth: FunctionalSample,
}

/// Draw a sample. The model's coefficients of `sin(k w t)`, `cos(k w t)` are
/// converted to the orthonormal basis by the factor `sqrt(T / 2)`.
pub fn generate(config: &SchemeConfig) -> Result<SimulatedData> {
    config.validate()?;
    let basis = FourierBasis::saturated(config.span, config.n_grid)?;
    let to_orthonormal = (config.span / 2.0).sqrt();
    let sources = config.sources();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut coefs = DMatrix::zeros(config.n_curves, basis.dim());
    for i in 0..config.n_curves {
        for &(k, scale) in &sources {
            for index in [2 * k - 1, 2 * k] {
                let z: f64 = StandardNormal.sample(&mut rng);
                let slot = basis.slot_of(index).expect("frequency checked");
                coefs[(i, slot)] = scale * z * to_orthonormal;
            }
        }
    }
    let times = config.times();
    let mut values = &coefs * basis.design_matrix(&times).transpose();
    if config.noise_sd > 0.0 {
        let noise = Normal::new(0.0, config.noise_sd).map_err(|e| Error::invalid(e.to_string()))?;
        values.iter_mut().for_each(|v| *v += noise.sample(&mut rng));
    }
    let ids = (1..=config.n_curves).map(|i| format!("c{i}")).collect();
    Ok(SimulatedData {
        raw: RawCurveSet::new(times, values, ids)?,
        truth: FunctionalSample::new(FunctionSet::new(basis, coefs)?),
    })
}

/// Canonical scale levels for each scheme.
pub fn level_grid(scheme: Scheme) -> Vec<f64> {
    match scheme {
        Scheme::Annual => vec![0.0, 0.6, 0.8, 1.0, 1.1, 1.3],
        Scheme::HighFrequency => vec![0.5, 1.0, 5.0, 10.0],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::PeriodicSubBasis;

    #[test]
    fn levels() {
        assert_eq!(level_grid(Scheme::Annual).len(), 6);
        assert_eq!(level_grid(Scheme::HighFrequency).len(), 4);
        for s in [Scheme::Annual, Scheme::HighFrequency] {
            assert!(level_grid(s).windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn level_zero_has_no_annual_part() {
        let data = generate(&SchemeConfig::new(Scheme::Annual, 0.0, 5)).unwrap();
        let periodic = PeriodicSubBasis::all(data.truth.basis(), 4).unwrap();
        let c = data.truth.coefficients();
        for slot in periodic.slots() {
            assert!(c.column(slot).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn samples_match_truth() {
        let cfg = SchemeConfig::new(Scheme::HighFrequency, 5.0, 9);
        let data = generate(&cfg).unwrap();
        let t = cfg.times()[17];
        let direct = data.truth.basis().evaluate(&data.truth.coefficients().row(3).iter().copied().collect::<Vec<_>>(), t);
        assert!((direct - data.raw.values()[(3, 17)]).abs() < 1e-10);
        // unnormalized model value at the same point
        let omega = 2.0 * std::f64::consts::PI / cfg.span;
        let basis = data.truth.basis();
        let c = data.truth.coefficients();
        let mut model = 0.0;
        for k in [1, 2, 3, 4, 19] {
            let s = c[(3, basis.slot_of(2 * k - 1).unwrap())] / (cfg.span / 2.0).sqrt();
            let co = c[(3, basis.slot_of(2 * k).unwrap())] / (cfg.span / 2.0).sqrt();
            model += s * (k as f64 * omega * t).sin() + co * (k as f64 * omega * t).cos();
        }
        assert!((model - direct).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = SchemeConfig::new(Scheme::HighFrequency, 1.0, 0);
        cfg.hfd_frequency = 20;
        assert!(generate(&cfg).is_err());
        let mut cfg = SchemeConfig::new(Scheme::Annual, -1.0, 0);
        assert!(generate(&cfg).is_err());
        cfg.level = 1.0;
        cfg.n_grid = 8;
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn deterministic() {
        let mut cfg = SchemeConfig::new(Scheme::Annual, 1.0, 7);
        cfg.noise_sd = 0.1;
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a.raw.values(), b.raw.values());
    }
}
