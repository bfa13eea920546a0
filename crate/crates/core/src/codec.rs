//! Uplink/downlink coding pipeline.
//!
//! Node `i` sends `X_i = (W_i + U_i) mod Λ_i`. The relay scales, removes the
//! dithers and lattice-decodes the effective codeword
//! `T = [W1 + W2 - Q2(W2 + U2)] mod Λ1 ∈ C_1`, then broadcasts the
//! Gaussian codeword `X_R(T)`. Each node searches only the codewords
//! consistent with its own message and inverts the binning map.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chain::{leader_index, CosetLevel, LatticeChain};
use crate::channel::gaussian_vector;
use crate::error::{Error, Result};
use crate::rng::{stream, SeedPath};
use crate::vecops;

pub use crate::rates::mmse_alpha;

/// Default relay power backoff: codewords are drawn with variance `P_R(1-δ)`.
pub const DEFAULT_POWER_BACKOFF: f64 = 0.05;
/// Draws allowed per relay codeword before giving up on the power constraint.
pub const MAX_CODEWORD_ATTEMPTS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeId {
    One,
    Two,
}

impl NodeId {
    pub fn number(self) -> u8 {
        match self {
            Self::One => 1,
            Self::Two => 2,
        }
    }

    pub fn level(self) -> CosetLevel {
        match self {
            Self::One => CosetLevel::One,
            Self::Two => CosetLevel::Two,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceMessage {
    pub node: NodeId,
    /// 1-based message index.
    pub index: u64,
    pub coset_leader: Vec<f64>,
}

impl SourceMessage {
    /// Message `index` (1-based) of `node`, via the canonical leader order.
    pub fn from_index(leaders: &[Vec<f64>], node: NodeId, index: u64) -> Result<Self> {
        if index == 0 || index as usize > leaders.len() {
            return Err(Error::InvalidParameter(format!(
                "message index {index} outside 1..={}",
                leaders.len()
            )));
        }
        Ok(Self {
            node,
            index,
            coset_leader: leaders[index as usize - 1].clone(),
        })
    }
}

/// Dither shared by a source and the relay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dither {
    pub node: NodeId,
    pub vector: Vec<f64>,
    pub path: Option<SeedPath>,
}

impl Dither {
    /// Checks that `vector` lies in the Voronoi region of the node's lattice.
    pub fn new(chain: &LatticeChain, node: NodeId, vector: Vec<f64>) -> Result<Self> {
        if !chain.shaping(node.level()).in_voronoi(&vector)? {
            return Err(Error::Membership("Voronoi region of the shaping lattice"));
        }
        Ok(Self {
            node,
            vector,
            path: None,
        })
    }

    pub fn sample<R: Rng + ?Sized>(chain: &LatticeChain, node: NodeId, rng: &mut R) -> Self {
        Self {
            node,
            vector: chain.shaping(node.level()).sample_voronoi(rng),
            path: None,
        }
    }

    /// Draws the dither of `node` for block `block` from the shared seed.
    pub fn from_seed(chain: &LatticeChain, node: NodeId, master: u64, block: u64) -> Self {
        let path = SeedPath::new(master, stream::DITHERS, block);
        let mut rng = path.rng();
        let u1 = chain.coarse().sample_voronoi(&mut rng);
        let u2 = chain.mid().sample_voronoi(&mut rng);
        Self {
            node,
            vector: match node {
                NodeId::One => u1,
                NodeId::Two => u2,
            },
            path: Some(path),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveCodeword(pub Vec<f64>);

/// `X_i = (W_i + U_i) mod Λ_i`.
pub fn encode_source(chain: &LatticeChain, msg: &SourceMessage, dither: &Dither) -> Result<Vec<f64>> {
    if msg.node != dither.node {
        return Err(Error::NodeMismatch {
            message: msg.node.number(),
            dither: dither.node.number(),
        });
    }
    encode(chain, msg.node, &msg.coset_leader, &dither.vector)
}

pub(crate) fn encode(chain: &LatticeChain, node: NodeId, w: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_len(chain, w)?;
    check_len(chain, u)?;
    chain.shaping(node.level()).reduce(&vecops::add(w, u))
}

fn check_len(chain: &LatticeChain, v: &[f64]) -> Result<()> {
    if v.len() != chain.dimension() {
        return Err(Error::DimensionMismatch {
            expected: chain.dimension(),
            got: v.len(),
        });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in [0, 1]")));
    }
    Ok(())
}

/// `(α yR - U1 - U2) mod Λ1`, the relay's dither-removed observation.
pub fn relay_observation(chain: &LatticeChain, y_r: &[f64], u1: &[f64], u2: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    check_len(chain, y_r)?;
    check_len(chain, u1)?;
    check_len(chain, u2)?;
    let v: Vec<f64> = y_r
        .iter()
        .zip(u1)
        .zip(u2)
        .map(|((y, a), b)| alpha * y - a - b)
        .collect();
    chain.coarse().reduce(&v)
}

/// Euclidean lattice decoding of the effective codeword at the relay.
pub fn relay_decode(
    chain: &LatticeChain,
    y_r: &[f64],
    u1: &[f64],
    u2: &[f64],
    alpha: f64,
) -> Result<EffectiveCodeword> {
    let obs = relay_observation(chain, y_r, u1, u2, alpha)?;
    let q = chain.fine().quantize(&obs)?;
    Ok(EffectiveCodeword(chain.coarse().reduce(&q)?))
}

fn effective_t_unchecked(chain: &LatticeChain, w1: &[f64], w2: &[f64], u2: &[f64]) -> Result<Vec<f64>> {
    let q2 = chain.mid().quantize(&vecops::add(w2, u2))?;
    let s: Vec<f64> = w1.iter().zip(w2).zip(&q2).map(|((a, b), c)| a + b - c).collect();
    chain.coarse().reduce(&s)
}

/// `T = [W1 + W2 - Q2(W2 + U2)] mod Λ1`.
pub fn compute_effective_t(chain: &LatticeChain, w1: &[f64], w2: &[f64], u2: &[f64]) -> Result<EffectiveCodeword> {
    check_len(chain, w1)?;
    check_len(chain, w2)?;
    check_len(chain, u2)?;
    if !chain.is_coset_leader(CosetLevel::One, w1)? {
        return Err(Error::Membership("C_1"));
    }
    if !chain.is_coset_leader(CosetLevel::Two, w2)? {
        return Err(Error::Membership("C_2"));
    }
    if !chain.mid().in_voronoi(u2)? {
        return Err(Error::Membership("Voronoi region of Λ2"));
    }
    Ok(EffectiveCodeword(effective_t_unchecked(chain, w1, w2, u2)?))
}

/// `Z̃ = -(1-α)(x1 + x2) + α zR`.
pub fn effective_noise(x1: &[f64], x2: &[f64], z_r: &[f64], alpha: f64) -> Vec<f64> {
    x1.iter()
        .zip(x2)
        .zip(z_r)
        .map(|((a, b), z)| -(1.0 - alpha) * (a + b) + alpha * z)
        .collect()
}

/// Downlink codebook: one i.i.d. Gaussian codeword per `t ∈ C_1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelayCodebook {
    /// `C_1` in canonical order; codeword `k` belongs to `leaders1[k]`.
    leaders1: Vec<Vec<f64>>,
    /// `C_2` in canonical order, for node 1's restricted search.
    leaders2: Vec<Vec<f64>>,
    codewords: Vec<Vec<f64>>,
    power: f64,
    backoff: f64,
    seed: u64,
    empirical_powers: Vec<f64>,
    tol: f64,
}

impl RelayCodebook {
    pub fn build(chain: &LatticeChain, power: f64, seed: u64, backoff: f64, cap: u128) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidParameter(format!("relay power {power} must be > 0")));
        }
        if !(0.0..1.0).contains(&backoff) {
            return Err(Error::InvalidParameter(format!("power backoff {backoff} must lie in [0, 1)")));
        }
        let leaders1 = chain.enumerate_coset_leaders(CosetLevel::One, cap)?;
        let leaders2 = chain.enumerate_coset_leaders(CosetLevel::Two, cap)?;
        let n = chain.dimension();
        let variance = power * (1.0 - backoff);
        let mut codewords = Vec::with_capacity(leaders1.len());
        let mut empirical_powers = Vec::with_capacity(leaders1.len());
        for k in 0..leaders1.len() {
            let mut rng = SeedPath::new(seed, stream::CODEBOOK, k as u64).rng();
            let mut accepted = None;
            for _ in 0..MAX_CODEWORD_ATTEMPTS {
                let x = gaussian_vector(n, variance, &mut rng);
                let p = vecops::norm_sq(&x) / n as f64;
                if p <= power {
                    accepted = Some((x, p));
                    break;
                }
            }
            let (x, p) = accepted.ok_or(Error::PowerConstraint(MAX_CODEWORD_ATTEMPTS))?;
            codewords.push(x);
            empirical_powers.push(p);
        }
        Ok(Self {
            leaders1,
            leaders2,
            codewords,
            power,
            backoff,
            seed,
            empirical_powers,
            tol: chain.point_tol(),
        })
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn backoff(&self) -> f64 {
        self.backoff
    }

    pub fn leaders(&self, level: CosetLevel) -> &[Vec<f64>] {
        match level {
            CosetLevel::One => &self.leaders1,
            CosetLevel::Two => &self.leaders2,
        }
    }

    pub fn codewords(&self) -> &[Vec<f64>] {
        &self.codewords
    }

    pub fn empirical_powers(&self) -> &[f64] {
        &self.empirical_powers
    }

    /// Mean of the per-codeword empirical powers.
    pub fn mean_power(&self) -> f64 {
        self.empirical_powers.iter().sum::<f64>() / self.empirical_powers.len() as f64
    }

    /// Canonical index of `t` in `C_1`.
    pub fn index_of(&self, t: &[f64]) -> Option<usize> {
        leader_index(&self.leaders1, t, self.tol)
    }

    /// Canonical index of `v` in the given coset set.
    pub fn index_in(&self, level: CosetLevel, v: &[f64]) -> Option<usize> {
        leader_index(self.leaders(level), v, self.tol)
    }

    /// `X_R(t)`.
    pub fn codeword(&self, t: &[f64]) -> Result<&[f64]> {
        self.index_of(t)
            .map(|k| self.codewords[k].as_slice())
            .ok_or(Error::Membership("C_1"))
    }
}

/// What a destination node knows when decoding the relay broadcast.
#[derive(Debug, Clone, Copy)]
pub enum SideInfo<'a> {
    /// Node 1 knows `W1` (and the shared dither `U2`).
    Node1 { w1: &'a [f64], u2: &'a [f64] },
    /// Node 2 knows `W2` and `U2`.
    Node2 { w2: &'a [f64], u2: &'a [f64] },
}

/// Indices (into `C_1`) of the codewords node `side` considers.
pub fn restricted_set(codebook: &RelayCodebook, chain: &LatticeChain, side: SideInfo<'_>) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    match side {
        SideInfo::Node1 { w1, u2 } => {
            check_len(chain, w1)?;
            check_len(chain, u2)?;
            for w2 in codebook.leaders(CosetLevel::Two) {
                let t = effective_t_unchecked(chain, w1, w2, u2)?;
                out.push(codebook.index_of(&t).ok_or(Error::Membership("C_1"))?);
            }
        }
        SideInfo::Node2 { w2, u2 } => {
            check_len(chain, w2)?;
            check_len(chain, u2)?;
            let q2 = chain.mid().quantize(&vecops::add(w2, u2))?;
            let offset = vecops::sub(w2, &q2);
            for w1 in codebook.leaders(CosetLevel::One) {
                let t = chain.coarse().reduce(&vecops::add(w1, &offset))?;
                out.push(codebook.index_of(&t).ok_or(Error::Membership("C_1"))?);
            }
        }
    }
    Ok(out)
}

/// Minimum-distance decoding of `y` over the node's restricted codebook.
/// Ties go to the lowest canonical index.
pub fn node_decode_relay(
    codebook: &RelayCodebook,
    chain: &LatticeChain,
    y: &[f64],
    side: SideInfo<'_>,
) -> Result<EffectiveCodeword> {
    check_len(chain, y)?;
    // Node 2's set is a translate of C_1 modulo Λ1, i.e. all of C_1.
    let candidates = match side {
        SideInfo::Node1 { .. } => restricted_set(codebook, chain, side)?,
        SideInfo::Node2 { w2, u2 } => {
            check_len(chain, w2)?;
            check_len(chain, u2)?;
            (0..codebook.len()).collect()
        }
    };
    let mut best: Option<(f64, usize)> = None;
    for k in candidates {
        let d = vecops::dist_sq(y, &codebook.codewords[k]);
        let better = match best {
            None => true,
            Some((bd, bk)) => d < bd || (d == bd && k < bk),
        };
        if better {
            best = Some((d, k));
        }
    }
    let (_, k) = best.ok_or(Error::Membership("restricted codebook"))?;
    Ok(EffectiveCodeword(codebook.leaders1[k].clone()))
}

/// Node 1: `Ŵ2 = (T̂1 - W1) mod Λ2`.
pub fn recover_w2(chain: &LatticeChain, t1_hat: &[f64], w1: &[f64]) -> Result<Vec<f64>> {
    check_len(chain, t1_hat)?;
    check_len(chain, w1)?;
    if !chain.is_coset_leader(CosetLevel::One, t1_hat)? {
        return Err(Error::Membership("C_1"));
    }
    if !chain.is_coset_leader(CosetLevel::One, w1)? {
        return Err(Error::Membership("C_1"));
    }
    chain.mid().reduce(&vecops::sub(t1_hat, w1))
}

/// Node 2: `Ŵ1 = [T̂2 - W2 + Q2(W2 + U2)] mod Λ1`.
pub fn recover_w1(chain: &LatticeChain, t2_hat: &[f64], w2: &[f64], u2: &[f64]) -> Result<Vec<f64>> {
    check_len(chain, t2_hat)?;
    check_len(chain, w2)?;
    check_len(chain, u2)?;
    if !chain.is_coset_leader(CosetLevel::One, t2_hat)? {
        return Err(Error::Membership("C_1"));
    }
    if !chain.is_coset_leader(CosetLevel::Two, w2)? {
        return Err(Error::Membership("C_2"));
    }
    let q2 = chain.mid().quantize(&vecops::add(w2, u2))?;
    let s: Vec<f64> = t2_hat.iter().zip(w2).zip(&q2).map(|((t, w), q)| t - w + q).collect();
    chain.coarse().reduce(&s)
}
