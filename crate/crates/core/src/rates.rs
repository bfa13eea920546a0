//! Closed-form rate regions and error exponents.
//!
//! Rates are in bits per real dimension. The Poltyrev exponent is in nats,
//! as is the exponent of the error bound `exp(-n E_P(μ))`.

use alloc::format;
use alloc::string::ToString;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    CutSet,
    Achievable,
}

/// The rectangle `[0, r1_max] × [0, r2_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRegion {
    pub r1_max: f64,
    pub r2_max: f64,
    pub kind: RegionKind,
}

/// `½ log2(1 + snr)`.
pub fn awgn_capacity(snr: f64) -> f64 {
    0.5 * libm::log2(1.0 + snr)
}

fn positive_part(x: f64) -> f64 {
    x.max(0.0)
}

fn require_noise(params: &ChannelParams) -> Result<()> {
    params.validate()?;
    for (name, v) in [
        ("sigma_r2", params.sigma_r2),
        ("sigma1_2", params.sigma1_2),
        ("sigma2_2", params.sigma2_2),
    ] {
        if v <= 0.0 {
            return Err(Error::InvalidParameter(format!("{name} must be > 0 for a finite rate bound")));
        }
    }
    Ok(())
}

fn downlink_terms(params: &ChannelParams) -> (f64, f64) {
    (
        awgn_capacity(params.pr / params.sigma2_2),
        awgn_capacity(params.pr / params.sigma1_2),
    )
}

/// Gaussian cut-set outer bound.
pub fn cutset_region(params: &ChannelParams) -> Result<RateRegion> {
    require_noise(params)?;
    let (dl1, dl2) = downlink_terms(params);
    Ok(RateRegion {
        r1_max: awgn_capacity(params.p1 / params.sigma_r2).min(dl1),
        r2_max: awgn_capacity(params.p2 / params.sigma_r2).min(dl2),
        kind: RegionKind::CutSet,
    })
}

/// Uplink suprema `[½ log2(P_i/(P1+P2) + P_i/σR²)]⁺` for reliable relay
/// decoding of the effective codeword.
pub fn code_rate_condition(params: &ChannelParams) -> Result<(f64, f64)> {
    require_noise(params)?;
    let total = params.p1 + params.p2;
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("P1 + P2 must be > 0".to_string()));
    }
    let term = |p: f64| positive_part(0.5 * libm::log2(p / total + p / params.sigma_r2));
    Ok((term(params.p1), term(params.p2)))
}

/// Region achieved by nested lattice uplink + structured-binning downlink.
pub fn achievable_region(params: &ChannelParams) -> Result<RateRegion> {
    let (u1, u2) = code_rate_condition(params)?;
    let (dl1, dl2) = downlink_terms(params);
    Ok(RateRegion {
        r1_max: u1.min(dl1),
        r2_max: u2.min(dl2),
        kind: RegionKind::Achievable,
    })
}

/// Componentwise `cutset - achievable`.
pub fn gap(params: &ChannelParams) -> Result<(f64, f64)> {
    let c = cutset_region(params)?;
    let a = achievable_region(params)?;
    Ok((c.r1_max - a.r1_max, c.r2_max - a.r2_max))
}

/// MMSE scaling `(P1+P2)/(P1+P2+σR²)`.
pub fn mmse_alpha(params: &ChannelParams) -> Result<f64> {
    params.validate()?;
    let total = params.p1 + params.p2;
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("P1 + P2 must be > 0 for the MMSE coefficient".to_string()));
    }
    Ok(total / (total + params.sigma_r2))
}

/// Upper bound on the per-dimension effective noise variance under MMSE
/// scaling: `(P1+P2)σR²/(P1+P2+σR²)`.
pub fn effective_noise_variance(params: &ChannelParams) -> Result<f64> {
    let alpha = mmse_alpha(params)?;
    Ok(alpha * params.sigma_r2)
}

/// Poltyrev exponent in nats:
/// `½[(μ-1) - ln μ]` on `[1,2]`, `½ ln(eμ/4)` on `[2,4]`, `μ/8` beyond.
pub fn poltyrev_exponent(mu: f64) -> Result<f64> {
    if !(mu >= 1.0) || mu.is_nan() {
        return Err(Error::InvalidParameter(format!("Poltyrev exponent needs mu >= 1, got {mu}")));
    }
    Ok(if mu <= 2.0 {
        0.5 * ((mu - 1.0) - libm::log(mu))
    } else if mu <= 4.0 {
        0.5 * libm::log(core::f64::consts::E * mu / 4.0)
    } else {
        mu / 8.0
    })
}

/// Asymptotic envelope of the relay decoding error probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentCurve {
    pub rate_target: f64,
    /// `R1*` in bits per dimension.
    pub threshold: f64,
    pub mu: f64,
    /// `E_P(μ)` in nats.
    pub exponent: f64,
    pub n: usize,
    /// `exp(-n E_P(μ))` with the vanishing correction taken as zero.
    pub bound: f64,
}

pub fn uplink_error_bound(n: usize, rate_target: f64, params: &ChannelParams) -> Result<ExponentCurve> {
    let (threshold, _) = code_rate_condition(params)?;
    if !(rate_target < threshold) {
        return Err(Error::InvalidParameter(format!(
            "rate target {rate_target} must be below R1* = {threshold}"
        )));
    }
    let mu = libm::exp2(2.0 * (threshold - rate_target));
    let exponent = poltyrev_exponent(mu)?;
    Ok(ExponentCurve {
        rate_target,
        threshold,
        mu,
        exponent,
        n,
        bound: libm::exp(-(n as f64) * exponent),
    })
}
