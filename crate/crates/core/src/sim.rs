//! Seeded Monte Carlo trial kernel.
//!
//! Trial `k` of a run draws everything it needs from seed paths
//! `(seed, stream, k)`, so any subset of trials can be evaluated in any order
//! (or on any thread) and summed into the same [`ErrorCounts`].
//!
//! The chain's coarse lattice `Λ1` always belongs to the stronger node. When
//! `P2 > P1` the node labels are swapped internally and mapped back in every
//! reported quantity.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Range};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainDescription, CosetLevel, LatticeChain, DEFAULT_ENUMERATION_CAP};
use crate::channel::{gaussian_vector, ChannelParams};
use crate::codec::{self, NodeId, RelayCodebook, SideInfo, DEFAULT_POWER_BACKOFF};
use crate::error::{Error, Result};
use crate::rates;
use crate::rng::{stream, SeedPath};
use crate::vecops;

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    UplinkOnly,
    EndToEnd,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::UplinkOnly => "uplink-only",
            Self::EndToEnd => "end-to-end",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlphaMode {
    Mmse,
    Fixed(f64),
}

fn default_backoff() -> f64 {
    DEFAULT_POWER_BACKOFF
}

fn default_cap() -> u64 {
    DEFAULT_ENUMERATION_CAP as u64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub chain: ChainDescription,
    pub params: ChannelParams,
    pub trials: u64,
    pub seed: u64,
    pub phase: Phase,
    pub alpha: AlphaMode,
    #[serde(default = "default_backoff")]
    pub backoff: f64,
    #[serde(default = "default_cap")]
    pub enumeration_cap: u64,
}

/// Error tallies over a set of trials, in external node labels.
///
/// `err_t1`/`err_t2` count downlink errors only on trials where the relay
/// decoded correctly, so `err_t1 / relay_ok` estimates the conditional
/// downlink error probability.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    pub trials: u64,
    pub err_t: u64,
    pub relay_ok: u64,
    pub err_t1: u64,
    pub err_t2: u64,
    pub err_t1_uncond: u64,
    pub err_t2_uncond: u64,
    pub err_e2e: u64,
}

impl Add for ErrorCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            trials: self.trials + o.trials,
            err_t: self.err_t + o.err_t,
            relay_ok: self.relay_ok + o.relay_ok,
            err_t1: self.err_t1 + o.err_t1,
            err_t2: self.err_t2 + o.err_t2,
            err_t1_uncond: self.err_t1_uncond + o.err_t1_uncond,
            err_t2_uncond: self.err_t2_uncond + o.err_t2_uncond,
            err_e2e: self.err_e2e + o.err_e2e,
        }
    }
}

impl AddAssign for ErrorCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl core::iter::Sum for ErrorCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

impl ErrorCounts {
    fn record(&mut self, t: &TrialRecord) {
        self.trials += 1;
        if t.relay_error {
            self.err_t += 1;
        } else {
            self.relay_ok += 1;
            self.err_t1 += u64::from(t.node1_error == Some(true));
            self.err_t2 += u64::from(t.node2_error == Some(true));
        }
        self.err_t1_uncond += u64::from(t.node1_error == Some(true));
        self.err_t2_uncond += u64::from(t.node2_error == Some(true));
        self.err_e2e += u64::from(t.message_error == Some(true));
    }

    /// Sample-level union bound: every end-to-end failure has a relay error
    /// or a conditional downlink error on the same trial.
    pub fn union_bound_holds(&self) -> bool {
        self.err_e2e <= self.err_t + self.err_t1 + self.err_t2
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let center = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)) / denom;
    let lo = if k == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if k == n { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// One simulated block, in external node labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    /// 1-based message indices; only available in end-to-end mode where the
    /// coset sets are enumerated.
    pub w1: Option<u64>,
    pub w2: Option<u64>,
    /// 1-based indices into `C_1`.
    pub t: Option<u64>,
    pub t_hat: Option<u64>,
    pub t1_hat: Option<u64>,
    pub t2_hat: Option<u64>,
    pub w1_hat: Option<u64>,
    pub w2_hat: Option<u64>,
    pub relay_error: bool,
    pub node1_error: Option<bool>,
    pub node2_error: Option<bool>,
    pub message_error: Option<bool>,
    /// Empirical block SNRs in dB.
    pub snr_up_db: f64,
    pub snr_dn1_db: Option<f64>,
    pub snr_dn2_db: Option<f64>,
}

/// A validated, ready-to-run configuration.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: SimConfig,
    chain: LatticeChain,
    /// Parameters in internal labels (node 1 owns Λ1).
    internal: ChannelParams,
    swapped: bool,
    alpha: f64,
    codebook: Option<RelayCodebook>,
}

impl Simulation {
    pub fn new(config: SimConfig) -> Result<Self> {
        if config.trials == 0 {
            return Err(Error::InvalidParameter("trial count must be at least 1".into()));
        }
        config.params.validate()?;
        let chain = config.chain.build()?;
        let swapped = config.params.p2 > config.params.p1;
        let internal = if swapped {
            config.params.swapped()
        } else {
            config.params
        };
        let alpha = match config.alpha {
            AlphaMode::Mmse => rates::mmse_alpha(&internal)?,
            AlphaMode::Fixed(a) => {
                if !(0.0..=1.0).contains(&a) {
                    return Err(Error::InvalidParameter(format!("alpha = {a} must lie in [0, 1]")));
                }
                a
            }
        };
        let codebook = match config.phase {
            Phase::UplinkOnly => None,
            Phase::EndToEnd => Some(RelayCodebook::build(
                &chain,
                internal.pr,
                config.seed,
                config.backoff,
                u128::from(config.enumeration_cap),
            )?),
        };
        Ok(Self {
            config,
            chain,
            internal,
            swapped,
            alpha,
            codebook,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn chain(&self) -> &LatticeChain {
        &self.chain
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn codebook(&self) -> Option<&RelayCodebook> {
        self.codebook.as_ref()
    }

    /// Coding rates `(r1, r2)` of external nodes 1 and 2.
    pub fn rates(&self) -> (f64, f64) {
        let (a, b) = (self.chain.rate(CosetLevel::One), self.chain.rate(CosetLevel::Two));
        if self.swapped {
            (b, a)
        } else {
            (a, b)
        }
    }

    pub fn run_range(&self, range: Range<u64>) -> Result<ErrorCounts> {
        let mut counts = ErrorCounts::default();
        for k in range {
            counts.record(&self.run_trial(k)?);
        }
        Ok(counts)
    }

    pub fn run(&self) -> Result<ErrorCounts> {
        self.run_range(0..self.config.trials)
    }

    /// Simulates block `index`.
    pub fn run_trial(&self, index: u64) -> Result<TrialRecord> {
        let chain = &self.chain;
        let n = chain.dimension();
        let seed = self.config.seed;
        let tol = chain.point_tol();

        let mut msg_rng = SeedPath::new(seed, stream::MESSAGES, index).rng();
        let (w1, w2, msg_idx) = match &self.codebook {
            Some(cb) => {
                let l1 = cb.leaders(CosetLevel::One);
                let l2 = cb.leaders(CosetLevel::Two);
                let i1 = msg_rng.random_range(0..l1.len());
                let i2 = msg_rng.random_range(0..l2.len());
                (l1[i1].clone(), l2[i2].clone(), Some((i1, i2)))
            }
            None => (
                chain.random_coset_leader(CosetLevel::One, &mut msg_rng),
                chain.random_coset_leader(CosetLevel::Two, &mut msg_rng),
                None,
            ),
        };
        let mut dither_rng = SeedPath::new(seed, stream::DITHERS, index).rng();
        let u1 = chain.coarse().sample_voronoi(&mut dither_rng);
        let u2 = chain.mid().sample_voronoi(&mut dither_rng);

        let x1 = codec::encode(chain, NodeId::One, &w1, &u1)?;
        let x2 = codec::encode(chain, NodeId::Two, &w2, &u2)?;
        let mut noise_rng = SeedPath::new(seed, stream::RELAY_NOISE, index).rng();
        let z_r = gaussian_vector(n, self.internal.sigma_r2, &mut noise_rng);
        let y_r: Vec<f64> = x1.iter().zip(&x2).zip(&z_r).map(|((a, b), z)| a + b + z).collect();

        let t_hat = codec::relay_decode(chain, &y_r, &u1, &u2, self.alpha)?.0;
        let t = {
            let q2 = chain.mid().quantize(&vecops::add(&w2, &u2))?;
            let s: Vec<f64> = w1.iter().zip(&w2).zip(&q2).map(|((a, b), c)| a + b - c).collect();
            chain.coarse().reduce(&s)?
        };
        let relay_error = !vecops::approx_eq(&t, &t_hat, tol);
        let snr_up_db = snr_db(vecops::norm_sq(&x1) + vecops::norm_sq(&x2), vecops::norm_sq(&z_r));

        let mut rec = TrialRecord {
            index,
            w1: None,
            w2: None,
            t: None,
            t_hat: None,
            t1_hat: None,
            t2_hat: None,
            w1_hat: None,
            w2_hat: None,
            relay_error,
            node1_error: None,
            node2_error: None,
            message_error: None,
            snr_up_db,
            snr_dn1_db: None,
            snr_dn2_db: None,
        };

        if let (Some(cb), Some((i1, i2))) = (&self.codebook, msg_idx) {
            let k_hat = cb.index_of(&t_hat).ok_or(Error::Membership("C_1"))?;
            let k_true = cb.index_of(&t).ok_or(Error::Membership("C_1"))?;
            let x_r = &cb.codewords()[k_hat];

            // Downlink noise streams follow the external node labels.
            let (s1, s2) = if self.swapped {
                (stream::NODE2_NOISE, stream::NODE1_NOISE)
            } else {
                (stream::NODE1_NOISE, stream::NODE2_NOISE)
            };
            let z1 = gaussian_vector(n, self.internal.sigma1_2, &mut SeedPath::new(seed, s1, index).rng());
            let z2 = gaussian_vector(n, self.internal.sigma2_2, &mut SeedPath::new(seed, s2, index).rng());
            let y1 = vecops::add(x_r, &z1);
            let y2 = vecops::add(x_r, &z2);

            let t1_hat = codec::node_decode_relay(cb, chain, &y1, SideInfo::Node1 { w1: &w1, u2: &u2 })?.0;
            let t2_hat = codec::node_decode_relay(cb, chain, &y2, SideInfo::Node2 { w2: &w2, u2: &u2 })?.0;
            let w2_hat = codec::recover_w2(chain, &t1_hat, &w1)?;
            let w1_hat = codec::recover_w1(chain, &t2_hat, &w2, &u2)?;

            let k1 = cb.index_of(&t1_hat).ok_or(Error::Membership("C_1"))?;
            let k2 = cb.index_of(&t2_hat).ok_or(Error::Membership("C_1"))?;
            let j1 = cb.index_in(CosetLevel::One, &w1_hat).ok_or(Error::Membership("C_1"))?;
            let j2 = cb.index_in(CosetLevel::Two, &w2_hat).ok_or(Error::Membership("C_2"))?;

            let node1_error = k1 != k_hat;
            let node2_error = k2 != k_hat;
            let message_error = j1 != i1 || j2 != i2;
            let dn1 = snr_db(vecops::norm_sq(x_r), vecops::norm_sq(&z1));
            let dn2 = snr_db(vecops::norm_sq(x_r), vecops::norm_sq(&z2));

            let one = |v: usize| Some(v as u64 + 1);
            rec.t = one(k_true);
            rec.t_hat = one(k_hat);
            rec.message_error = Some(message_error);
            // Internal node 1 decodes W2 with Λ1 side information, etc.
            if self.swapped {
                rec.w1 = one(i2);
                rec.w2 = one(i1);
                rec.w1_hat = one(j2);
                rec.w2_hat = one(j1);
                rec.t1_hat = one(k2);
                rec.t2_hat = one(k1);
                rec.node1_error = Some(node2_error);
                rec.node2_error = Some(node1_error);
                rec.snr_dn1_db = Some(dn2);
                rec.snr_dn2_db = Some(dn1);
            } else {
                rec.w1 = one(i1);
                rec.w2 = one(i2);
                rec.w1_hat = one(j1);
                rec.w2_hat = one(j2);
                rec.t1_hat = one(k1);
                rec.t2_hat = one(k2);
                rec.node1_error = Some(node1_error);
                rec.node2_error = Some(node2_error);
                rec.snr_dn1_db = Some(dn1);
                rec.snr_dn2_db = Some(dn2);
            }
        }
        Ok(rec)
    }

    /// Builds a result row from aggregated counts.
    pub fn row(&self, counts: &ErrorCounts, wall_ms: u64) -> SweepRow {
        let errors = match self.config.phase {
            Phase::UplinkOnly => counts.err_t,
            Phase::EndToEnd => counts.err_e2e,
        };
        let p_hat = errors as f64 / counts.trials.max(1) as f64;
        let (ci_lo, ci_hi) = wilson_interval(errors, counts.trials, Z_95);
        let (r1, r2) = self.rates();
        let p = &self.config.params;
        SweepRow {
            phase: self.config.phase,
            n: self.chain.dimension(),
            p1: p.p1,
            p2: p.p2,
            pr: p.pr,
            sigma_r2: p.sigma_r2,
            sigma1_2: p.sigma1_2,
            sigma2_2: p.sigma2_2,
            alpha: self.alpha,
            r1,
            r2,
            counts: *counts,
            p_hat,
            ci_lo,
            ci_hi,
            seed: self.config.seed,
            wall_ms,
            error: None,
        }
    }
}

fn snr_db(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * libm::log10(signal / noise)
    }
}

/// One sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub phase: Phase,
    pub n: usize,
    pub p1: f64,
    pub p2: f64,
    pub pr: f64,
    pub sigma_r2: f64,
    pub sigma1_2: f64,
    pub sigma2_2: f64,
    pub alpha: f64,
    pub r1: f64,
    pub r2: f64,
    pub counts: ErrorCounts,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
    pub wall_ms: u64,
    /// Set when the row could not be simulated.
    pub error: Option<String>,
}

impl SweepRow {
    pub fn failed(config: &SimConfig, err: &Error) -> Self {
        Self::failure(config.phase, &config.params, config.seed, format!("{err}"))
    }

    /// A row that could not be simulated, carrying only its inputs.
    pub fn failure(phase: Phase, p: &ChannelParams, seed: u64, message: String) -> Self {
        Self {
            phase,
            n: 0,
            p1: p.p1,
            p2: p.p2,
            pr: p.pr,
            sigma_r2: p.sigma_r2,
            sigma1_2: p.sigma1_2,
            sigma2_2: p.sigma2_2,
            alpha: f64::NAN,
            r1: f64::NAN,
            r2: f64::NAN,
            counts: ErrorCounts::default(),
            p_hat: f64::NAN,
            ci_lo: f64::NAN,
            ci_hi: f64::NAN,
            seed,
            wall_ms: 0,
            error: Some(message),
        }
    }

    /// Relay, node-1 and node-2 component estimates; the downlink ones are
    /// conditioned on relay success.
    pub fn components(&self) -> (f64, f64, f64) {
        let c = &self.counts;
        let ok = c.relay_ok.max(1) as f64;
        (
            c.err_t as f64 / c.trials.max(1) as f64,
            c.err_t1 as f64 / ok,
            c.err_t2 as f64 / ok,
        )
    }
}
