//! Gaussian two-way relay channel: uplink MAC with relay noise and two
//! independent downlink branches.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedPath;

/// Transmit powers and noise variances, all in variance units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub p1: f64,
    pub p2: f64,
    pub pr: f64,
    pub sigma_r2: f64,
    pub sigma1_2: f64,
    pub sigma2_2: f64,
}

impl ChannelParams {
    /// Every power and noise variance equal to one.
    pub const UNIT: Self = Self {
        p1: 1.0,
        p2: 1.0,
        pr: 1.0,
        sigma_r2: 1.0,
        sigma1_2: 1.0,
        sigma2_2: 1.0,
    };

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("p1", self.p1),
            ("p2", self.p2),
            ("pr", self.pr),
            ("sigma_r2", self.sigma_r2),
            ("sigma1_2", self.sigma1_2),
            ("sigma2_2", self.sigma2_2),
        ];
        for (name, v) in fields {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    /// Exchange the roles of the two source nodes.
    pub fn swapped(&self) -> Self {
        Self {
            p1: self.p2,
            p2: self.p1,
            sigma1_2: self.sigma2_2,
            sigma2_2: self.sigma1_2,
            ..*self
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * libm::log10(x)
}

/// One block of i.i.d. zero-mean Gaussian noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDraw {
    pub z: Vec<f64>,
    pub variance: f64,
    pub path: SeedPath,
}

impl NoiseDraw {
    pub fn generate(n: usize, variance: f64, path: SeedPath) -> Self {
        let mut rng = path.rng();
        Self {
            z: gaussian_vector(n, variance, &mut rng),
            variance,
            path,
        }
    }
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, variance: f64, rng: &mut R) -> Vec<f64> {
    let sd = libm::sqrt(variance);
    (0..n)
        .map(|_| {
            let g: f64 = rng.sample(StandardNormal);
            sd * g
        })
        .collect()
}

/// `yR = x1 + x2 + zR`.
pub fn uplink<R: Rng + ?Sized>(x1: &[f64], x2: &[f64], sigma_r2: f64, rng: &mut R) -> Result<Vec<f64>> {
    if x1.len() != x2.len() {
        return Err(Error::DimensionMismatch {
            expected: x1.len(),
            got: x2.len(),
        });
    }
    let z = gaussian_vector(x1.len(), sigma_r2, rng);
    Ok(x1.iter().zip(x2).zip(&z).map(|((a, b), c)| a + b + c).collect())
}

/// `y_i = xR + z_i`.
pub fn downlink<R: Rng + ?Sized>(xr: &[f64], sigma_i2: f64, rng: &mut R) -> Vec<f64> {
    let z = gaussian_vector(xr.len(), sigma_i2, rng);
    xr.iter().zip(&z).map(|(a, b)| a + b).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerReport {
    pub power: f64,
    pub limit: f64,
    pub pass: bool,
}

/// Empirical `(1/n) Σ x_t²` against a hard limit (no tolerance).
pub fn audit_power(x: &[f64], limit: f64) -> PowerReport {
    let power = if x.is_empty() {
        0.0
    } else {
        x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
    };
    PowerReport {
        power,
        limit,
        pass: power <= limit,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use alloc::vec;

    #[test]
    fn zero_noise_is_exact_sum() {
        let mut rng = SeedPath::new(1, stream::RELAY_NOISE, 0).rng();
        assert_eq!(uplink(&[0.0, 0.0], &[0.0, 0.0], 0.0, &mut rng).unwrap(), vec![0.0, 0.0]);
        assert_eq!(uplink(&[1.5, -2.0], &[0.25, 1.0], 0.0, &mut rng).unwrap(), vec![1.75, -1.0]);
        assert_eq!(downlink(&[0.5, 3.0], 0.0, &mut rng), vec![0.5, 3.0]);
    }

    #[test]
    fn length_mismatch() {
        let mut rng = SeedPath::new(1, 1, 0).rng();
        assert!(uplink(&[0.0], &[0.0, 1.0], 1.0, &mut rng).is_err());
    }

    fn variance_within_3sigma(samples: &[f64], var: f64) {
        let n = samples.len() as f64;
        let est = samples.iter().map(|v| v * v).sum::<f64>() / n;
        // Var(z²) = 2σ⁴ for Gaussian z.
        let se = libm::sqrt(2.0 * var * var / n);
        assert!((est - var).abs() < 3.0 * se, "{est} vs {var} (se {se})");
    }

    #[test]
    fn uplink_noise_variance() {
        let mut rng = SeedPath::new(3, stream::RELAY_NOISE, 0).rng();
        let x1 = vec![0.3; 100_000];
        let x2 = vec![-1.1; 100_000];
        let y = uplink(&x1, &x2, 2.5, &mut rng).unwrap();
        let z: Vec<f64> = y.iter().map(|v| v - 0.3 + 1.1).collect();
        variance_within_3sigma(&z, 2.5);
    }

    #[test]
    fn downlink_noise_variance() {
        let mut rng = SeedPath::new(3, stream::NODE1_NOISE, 0).rng();
        let x = vec![0.7; 100_000];
        let y = downlink(&x, 0.4, &mut rng);
        let z: Vec<f64> = y.iter().map(|v| v - 0.7).collect();
        variance_within_3sigma(&z, 0.4);
    }

    #[test]
    fn noise_draw_reproducible() {
        let p = SeedPath::new(9, stream::NODE2_NOISE, 4);
        assert_eq!(NoiseDraw::generate(16, 1.0, p), NoiseDraw::generate(16, 1.0, p));
    }

    #[test]
    fn streams_uncorrelated() {
        let n = 50_000;
        let a = NoiseDraw::generate(n, 1.0, SeedPath::new(5, stream::RELAY_NOISE, 0)).z;
        let b = NoiseDraw::generate(n, 1.0, SeedPath::new(5, stream::NODE1_NOISE, 0)).z;
        let c = NoiseDraw::generate(n, 1.0, SeedPath::new(5, stream::NODE2_NOISE, 0)).z;
        let bound = 4.0 / libm::sqrt(n as f64);
        for (u, v) in [(&a, &b), (&a, &c), (&b, &c)] {
            let rho = corr(u, v);
            assert!(rho.abs() < bound, "rho = {rho}");
        }
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma) * (x - ma)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb) * (y - mb)).sum();
        cov / libm::sqrt(va * vb)
    }

    #[test]
    fn power_audit() {
        let r = audit_power(&[0.0; 8], 2.0);
        assert!(r.pass);
        assert_eq!(r.power, 0.0);
        let p: f64 = 3.0;
        let r = audit_power(&[libm::sqrt(p); 4], p);
        assert!(r.pass, "{r:?}");
        let r = audit_power(&[1.1 * libm::sqrt(p); 4], p);
        assert!(!r.pass);
        assert!((r.power - 1.21 * p).abs() < 1e-12);
    }

    #[test]
    fn db_conversion() {
        assert!((db_to_linear(20.0) - 100.0).abs() < 1e-9);
        assert!((linear_to_db(1000.0) - 30.0).abs() < 1e-9);
    }

    #[test]
    fn validation() {
        assert!(ChannelParams::UNIT.validate().is_ok());
        let bad = ChannelParams { sigma_r2: -1.0, ..ChannelParams::UNIT };
        assert!(bad.validate().is_err());
        let s = ChannelParams { p1: 2.0, sigma1_2: 3.0, ..ChannelParams::UNIT }.swapped();
        assert_eq!((s.p1, s.p2, s.sigma1_2, s.sigma2_2), (1.0, 2.0, 1.0, 3.0));
    }
}
