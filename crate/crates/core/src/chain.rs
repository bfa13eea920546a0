//! Nested lattice chains `Λ1 ⊆ Λ2 ⊆ ΛC` and their coset leaders.
//!
//! `C_i = ΛC mod Λi` is the message alphabet of node `i`. Its canonical
//! ordering (lexicographic on coordinates) is the message-index bijection:
//! message `k` (1-based) is the `k`-th leader.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hnf;
use crate::lattice::{Lattice, LatticeFamily, SecondMomentEstimate};
use crate::vecops;

pub const DEFAULT_ENUMERATION_CAP: u128 = 1 << 20;

/// Which shaping lattice a coset set is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CosetLevel {
    /// `C_1 = ΛC mod Λ1` (coarsest lattice, stronger node).
    One,
    /// `C_2 = ΛC mod Λ2`.
    Two,
}

impl CosetLevel {
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Self::One),
            2 => Some(Self::Two),
            _ => None,
        }
    }
}

/// `ΛC = scale·B`, `Λ2 = k2·scale·B`, `Λ1 = k1·k2·scale·B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelfSimilarSpec {
    pub n: usize,
    /// Row-major base generator, basis in columns.
    pub generator: Vec<f64>,
    pub k1: u32,
    pub k2: u32,
    pub scale: f64,
}

/// `ΛC = Z^n`, `Λi = {x ∈ Z^n : x mod p ∈ code(g_i)}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructionASpec {
    pub n: usize,
    pub p: u64,
    pub g1: Vec<Vec<u64>>,
    pub g2: Vec<Vec<u64>>,
}

/// Serialized chain: `{family, n, generator, k1, k2, scale}` or
/// `{family: "construction-A", n, p, g1, g2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family")]
pub enum ChainDescription {
    #[serde(rename = "scaled-cubic")]
    ScaledCubic(SelfSimilarSpec),
    #[serde(rename = "base-matrix")]
    BaseMatrix(SelfSimilarSpec),
    #[serde(rename = "construction-A")]
    ConstructionA(ConstructionASpec),
}

impl ChainDescription {
    pub fn build(&self) -> Result<LatticeChain> {
        LatticeChain::from_description(self.clone())
    }
}

#[derive(Debug, Clone)]
pub struct LatticeChain {
    description: ChainDescription,
    fine: Lattice,
    mid: Lattice,
    coarse: Lattice,
    /// HNF diagonals of Λ1 and Λ2 in ΛC coordinates.
    diag1: Vec<u128>,
    diag2: Vec<u128>,
    count1: u128,
    count2: u128,
}

impl LatticeChain {
    pub fn from_description(description: ChainDescription) -> Result<Self> {
        match &description {
            ChainDescription::ScaledCubic(s) | ChainDescription::BaseMatrix(s) => {
                let family = match description {
                    ChainDescription::ScaledCubic(_) => LatticeFamily::ScaledCubic,
                    _ => LatticeFamily::BaseMatrix,
                };
                if s.k1 == 0 || s.k2 == 0 {
                    return Err(Error::InvalidParameter("k1 and k2 must be at least 1".to_string()));
                }
                let base = Lattice::new(s.n, s.generator.clone(), family)?;
                let fine = base.scaled(s.scale)?;
                let mid = base.scaled(f64::from(s.k2) * s.scale)?;
                let coarse = base.scaled(f64::from(s.k1) * f64::from(s.k2) * s.scale)?;
                Self::assemble(description, fine, mid, coarse)
            }
            ChainDescription::ConstructionA(spec) => {
                let (mid, coarse) = construction_a_pair(spec)?;
                let fine = Lattice::scaled_cubic(spec.n, 1.0)?;
                Self::assemble(description, fine, mid, coarse)
            }
        }
    }

    fn assemble(description: ChainDescription, fine: Lattice, mid: Lattice, coarse: Lattice) -> Result<Self> {
        check_nested(&coarse, &mid, "Λ1 ⊄ Λ2")?;
        check_nested(&mid, &fine, "Λ2 ⊄ ΛC")?;
        let diag1 = coset_diagonal(&fine, &coarse)?;
        let diag2 = coset_diagonal(&fine, &mid)?;
        let count1 = diag1.iter().product();
        let count2 = diag2.iter().product();
        Ok(Self {
            description,
            fine,
            mid,
            coarse,
            diag1,
            diag2,
            count1,
            count2,
        })
    }

    pub fn description(&self) -> &ChainDescription {
        &self.description
    }

    pub fn dimension(&self) -> usize {
        self.fine.dimension()
    }

    /// ΛC.
    pub fn fine(&self) -> &Lattice {
        &self.fine
    }

    /// Λ2.
    pub fn mid(&self) -> &Lattice {
        &self.mid
    }

    /// Λ1.
    pub fn coarse(&self) -> &Lattice {
        &self.coarse
    }

    pub fn shaping(&self, level: CosetLevel) -> &Lattice {
        match level {
            CosetLevel::One => &self.coarse,
            CosetLevel::Two => &self.mid,
        }
    }

    /// `|C_level|`, exact.
    pub fn coset_count(&self, level: CosetLevel) -> u128 {
        match level {
            CosetLevel::One => self.count1,
            CosetLevel::Two => self.count2,
        }
    }

    /// Coding rate `(1/n) log2 |C_level|` in bits per dimension.
    pub fn rate(&self, level: CosetLevel) -> f64 {
        libm::log2(self.coset_count(level) as f64) / self.dimension() as f64
    }

    fn diag(&self, level: CosetLevel) -> &[u128] {
        match level {
            CosetLevel::One => &self.diag1,
            CosetLevel::Two => &self.diag2,
        }
    }

    /// Tolerance used to compare coset leaders and other fine-lattice points.
    pub fn point_tol(&self) -> f64 {
        self.fine.coord_tol() * 1e3
    }

    /// All of `C_level` in canonical (lexicographic) order.
    pub fn enumerate_coset_leaders(&self, level: CosetLevel, cap: u128) -> Result<Vec<Vec<f64>>> {
        let count = self.coset_count(level);
        if count > cap {
            return Err(Error::EnumerationCap { required: count, cap });
        }
        let shaping = self.shaping(level);
        let diag = self.diag(level);
        let mut leaders = Vec::with_capacity(count as usize);
        for idx in 0..count {
            let z = hnf::box_point(diag, idx);
            leaders.push(shaping.reduce(&self.fine.point(&z))?);
        }
        let tol = self.point_tol();
        leaders.sort_by(|a, b| vecops::lex_cmp(a, b, tol));
        if leaders.windows(2).any(|w| vecops::lex_cmp(&w[0], &w[1], tol) == Ordering::Equal) {
            return Err(Error::NotNested("coset representatives collide".to_string()));
        }
        Ok(leaders)
    }

    /// Uniform draw from `C_level` without enumerating it.
    pub fn random_coset_leader<R: Rng + ?Sized>(&self, level: CosetLevel, rng: &mut R) -> Vec<f64> {
        let z: Vec<i64> = self
            .diag(level)
            .iter()
            .map(|d| rng.random_range(0..*d as u64) as i64)
            .collect();
        let p = self.fine.point(&z);
        self.shaping(level)
            .reduce(&p)
            .expect("dimension fixed by construction")
    }

    /// `v ∈ ΛC` and `v mod Λ_level = v`.
    pub fn is_coset_leader(&self, level: CosetLevel, v: &[f64]) -> Result<bool> {
        Ok(self.fine.contains(v)? && self.shaping(level).in_voronoi(v)?)
    }

    /// Per-dimension second moments of (ΛC, Λ2, Λ1).
    pub fn second_moments(&self, budget: u64, seed: u64) -> Result<[SecondMomentEstimate; 3]> {
        Ok([
            self.fine.second_moment(budget, seed)?,
            self.mid.second_moment(budget, seed)?,
            self.coarse.second_moment(budget, seed)?,
        ])
    }
}

/// Position of `v` in a canonically ordered leader list.
pub fn leader_index(leaders: &[Vec<f64>], v: &[f64], tol: f64) -> Option<usize> {
    leaders
        .binary_search_by(|probe| vecops::lex_cmp(probe, v, tol))
        .ok()
}

/// Self-similar chain `k1·k2·s·B ⊆ k2·s·B ⊆ s·B`.
pub fn build_self_similar(base: &Lattice, k1: u32, k2: u32, scale: f64) -> Result<LatticeChain> {
    let spec = SelfSimilarSpec {
        n: base.dimension(),
        generator: base.generator().to_vec(),
        k1,
        k2,
        scale,
    };
    let d = match base.family() {
        LatticeFamily::ScaledCubic => ChainDescription::ScaledCubic(spec),
        _ => ChainDescription::BaseMatrix(spec),
    };
    LatticeChain::from_description(d)
}

/// Construction-A chain over GF(p): `Λ1 ⊆ Λ2 ⊆ Z^n` from nested codes.
pub fn build_construction_a(p: u64, n: usize, g2: Vec<Vec<u64>>, g1: Vec<Vec<u64>>) -> Result<LatticeChain> {
    LatticeChain::from_description(ChainDescription::ConstructionA(ConstructionASpec { n, p, g1, g2 }))
}

/// A self-similar chain scaled to second moments `(P1', P2)`.
#[derive(Debug, Clone)]
pub struct MatchedChain {
    pub chain: LatticeChain,
    pub k1: u32,
    /// Realized `P1' = k1^2 P2`.
    pub p1: f64,
    pub p2: f64,
    pub base_moment: SecondMomentEstimate,
}

/// Scales `base` so that `σ²(Λ2) = p2` and picks `k1 = round(sqrt(p1/p2))`.
/// Requires `p1 >= p2 > 0`.
pub fn build_power_matched(base: &Lattice, p1: f64, p2: f64, k2: u32, budget: u64, seed: u64) -> Result<MatchedChain> {
    if !(p2 > 0.0) || !(p1 >= p2) || !p1.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "power matching needs P1 >= P2 > 0, got P1={p1}, P2={p2}"
        )));
    }
    let base_moment = base.second_moment(budget, seed)?;
    let k1 = libm::round(libm::sqrt(p1 / p2)).max(1.0) as u32;
    let scale = libm::sqrt(p2 / base_moment.value) / f64::from(k2);
    let chain = build_self_similar(base, k1, k2, scale)?;
    Ok(MatchedChain {
        chain,
        k1,
        p1: f64::from(k1 * k1) * p2,
        p2,
        base_moment,
    })
}

fn check_nested(coarser: &Lattice, finer: &Lattice, what: &str) -> Result<()> {
    let tol = finer.coord_tol() * 1e3;
    for j in 0..coarser.dimension() {
        let col = coarser.basis_vector(j);
        let r = finer.reduce(&col)?;
        if r.iter().any(|v| v.abs() > tol) {
            return Err(Error::NotNested(format!("{what}: basis vector {j} not in finer lattice")));
        }
    }
    Ok(())
}

/// HNF diagonal of `sub` expressed in `fine` coordinates.
fn coset_diagonal(fine: &Lattice, sub: &Lattice) -> Result<Vec<u128>> {
    let n = fine.dimension();
    let mut m = vec![0i128; n * n];
    for j in 0..n {
        let z = fine
            .integer_coordinates(&sub.basis_vector(j))?
            .ok_or_else(|| Error::NotNested(format!("basis vector {j} not in fine lattice")))?;
        for i in 0..n {
            m[i * n + j] = i128::from(z[i]);
        }
    }
    let (_, diag) = hnf::lower_hnf(&m, n).ok_or_else(|| Error::NotNested("singular index matrix".to_string()))?;
    Ok(diag)
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1u64;
    b %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = (u128::from(acc) * u128::from(b) % u128::from(p)) as u64;
        }
        b = (u128::from(b) * u128::from(b) % u128::from(p)) as u64;
        e >>= 1;
    }
    acc
}

/// Reduced row echelon form over GF(p); returns nonzero rows and pivots.
fn rref_mod_p(rows: &[Vec<u64>], n: usize, p: u64) -> (Vec<Vec<u64>>, Vec<usize>) {
    let mut m: Vec<Vec<u64>> = rows.iter().map(|r| r.iter().map(|v| v % p).collect()).collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(sel) = (row..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(row, sel);
        let inv = pow_mod(m[row][col], p - 2, p);
        for v in m[row].iter_mut() {
            *v = (u128::from(*v) * u128::from(inv) % u128::from(p)) as u64;
        }
        for r in 0..m.len() {
            if r != row && m[r][col] != 0 {
                let f = m[r][col];
                for c in 0..n {
                    let sub = (u128::from(f) * u128::from(m[row][c]) % u128::from(p)) as u64;
                    m[r][c] = (m[r][c] + p - sub) % p;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    m.truncate(row);
    (m, pivots)
}

/// Basis rows of `code(g) + pZ^n`.
fn construction_a_basis(g: &[Vec<u64>], n: usize, p: u64) -> Vec<Vec<f64>> {
    let (rref, pivots) = rref_mod_p(g, n, p);
    let mut basis: Vec<Vec<f64>> = rref.iter().map(|r| r.iter().map(|v| *v as f64).collect()).collect();
    for j in (0..n).filter(|j| !pivots.contains(j)) {
        let mut e = vec![0.0; n];
        e[j] = p as f64;
        basis.push(e);
    }
    basis
}

fn construction_a_pair(spec: &ConstructionASpec) -> Result<(Lattice, Lattice)> {
    let ConstructionASpec { n, p, g1, g2 } = spec;
    let (n, p) = (*n, *p);
    if !is_prime(p) {
        return Err(Error::NotPrime(p));
    }
    for row in g1.iter().chain(g2) {
        if row.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: row.len(),
            });
        }
    }
    let (_, piv2) = rref_mod_p(g2, n, p);
    let stacked: Vec<Vec<u64>> = g2.iter().chain(g1).cloned().collect();
    let (_, piv_all) = rref_mod_p(&stacked, n, p);
    if piv_all.len() != piv2.len() {
        return Err(Error::NotNested("row space of g1 is not contained in that of g2".to_string()));
    }
    let mid = Lattice::from_basis_rows(&construction_a_basis(g2, n, p), LatticeFamily::ConstructionA)?;
    let coarse = Lattice::from_basis_rows(&construction_a_basis(g1, n, p), LatticeFamily::ConstructionA)?;
    Ok((mid, coarse))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::NamedBase;

    fn scalar_chain() -> LatticeChain {
        build_self_similar(&Lattice::scaled_cubic(1, 1.0).unwrap(), 2, 2, 1.0).unwrap()
    }

    #[test]
    fn scalar_chain_leaders() {
        let c = scalar_chain();
        assert_eq!(c.coarse().volume(), 4.0);
        assert_eq!(c.mid().volume(), 2.0);
        let l2 = c.enumerate_coset_leaders(CosetLevel::Two, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(l2, vec![vec![-1.0], vec![0.0]]);
        let l1 = c.enumerate_coset_leaders(CosetLevel::One, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(l1, vec![vec![-2.0], vec![-1.0], vec![0.0], vec![1.0]]);
        assert_eq!(c.rate(CosetLevel::One), 2.0);
        assert_eq!(c.rate(CosetLevel::Two), 1.0);
    }

    #[test]
    fn degenerate_chain() {
        let c = build_self_similar(&Lattice::scaled_cubic(1, 1.0).unwrap(), 1, 1, 1.0).unwrap();
        assert_eq!(c.rate(CosetLevel::One), 0.0);
        assert_eq!(c.rate(CosetLevel::Two), 0.0);
        assert_eq!(c.enumerate_coset_leaders(CosetLevel::One, 16).unwrap(), vec![vec![0.0]]);
        assert_eq!(c.enumerate_coset_leaders(CosetLevel::Two, 16).unwrap(), vec![vec![0.0]]);
    }

    #[test]
    fn e8_chain_counts_and_rates() {
        let e8 = NamedBase::E8.lattice(8).unwrap();
        let c = build_self_similar(&e8, 2, 2, 1.0).unwrap();
        assert_eq!(c.coset_count(CosetLevel::Two), 1 << 8);
        assert_eq!(c.coset_count(CosetLevel::One), 1 << 16);
        let ratio = c.coarse().volume() / c.fine().volume();
        assert!((ratio - 65536.0).abs() < 1e-6);
        let gap = c.rate(CosetLevel::One) - c.rate(CosetLevel::Two);
        assert!((gap - 1.0).abs() < 1e-12);
        // σ²(Λ1)/σ²(Λ2) = k1² for scaled copies; compare MC estimates on one seed.
        let m = c.second_moments(4000, 2).unwrap();
        assert!((m[2].value / m[1].value - 4.0).abs() < 1e-9);
        assert!((0.5 * libm::log2(m[2].value / m[1].value) - gap).abs() < 1e-9);
    }

    #[test]
    fn cap_refusal() {
        let e8 = NamedBase::E8.lattice(8).unwrap();
        let c = build_self_similar(&e8, 2, 2, 1.0).unwrap();
        let err = c.enumerate_coset_leaders(CosetLevel::One, 1000).unwrap_err();
        assert_eq!(err, Error::EnumerationCap { required: 65536, cap: 1000 });
    }

    #[test]
    fn leaders_are_reduced_and_nested() {
        let d4 = NamedBase::D4.lattice(4).unwrap();
        let c = build_self_similar(&d4, 2, 2, 0.5).unwrap();
        let l1 = c.enumerate_coset_leaders(CosetLevel::One, DEFAULT_ENUMERATION_CAP).unwrap();
        let l2 = c.enumerate_coset_leaders(CosetLevel::Two, DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(l1.len() as u128, c.coset_count(CosetLevel::One));
        let vr = c.coarse().volume() / c.fine().volume();
        assert!((l1.len() as f64 - vr).abs() < 1e-6);
        for v in &l1 {
            assert!(c.is_coset_leader(CosetLevel::One, v).unwrap());
        }
        // C_2 ⊆ C_1
        for v in &l2 {
            assert!(leader_index(&l1, v, c.point_tol()).is_some(), "{v:?}");
        }
    }

    #[test]
    fn construction_a_checkerboard() {
        let c = build_construction_a(2, 2, vec![vec![1, 1]], vec![]).unwrap();
        assert_eq!(c.coset_count(CosetLevel::Two), 2);
        assert_eq!(c.coset_count(CosetLevel::One), 4);
        assert_eq!(c.rate(CosetLevel::Two), 0.5);
        assert_eq!(c.rate(CosetLevel::One), 1.0);
        // Λ2 is the checkerboard: (1,1) in, (1,0) out.
        assert!(c.mid().contains(&[1.0, 1.0]).unwrap());
        assert!(!c.mid().contains(&[1.0, 0.0]).unwrap());
        // Coset oracle: Z^2 points mod Λ2 fall in exactly 2 classes.
        let leaders = c.enumerate_coset_leaders(CosetLevel::Two, 16).unwrap();
        for x in -3..=3 {
            for y in -3..=3 {
                let r = c.mid().reduce(&[f64::from(x), f64::from(y)]).unwrap();
                assert!(leader_index(&leaders, &r, c.point_tol()).is_some());
            }
        }
    }

    #[test]
    fn construction_a_equal_codes() {
        let g = vec![vec![1, 0, 1], vec![0, 1, 1]];
        let c = build_construction_a(3, 3, g.clone(), g).unwrap();
        assert_eq!(c.rate(CosetLevel::One), c.rate(CosetLevel::Two));
    }

    #[test]
    fn construction_a_ternary_scalar() {
        let c = build_construction_a(3, 1, vec![vec![1]], vec![]).unwrap();
        assert_eq!(c.coset_count(CosetLevel::Two), 1);
        assert_eq!(c.mid().volume(), 1.0);
        assert_eq!(c.coarse().volume(), 3.0);
        let gap = c.rate(CosetLevel::One) - c.rate(CosetLevel::Two);
        assert!((gap - libm::log2(3.0)).abs() < 1e-12);
        assert!((gap - 1.585).abs() < 1e-3);
    }

    #[test]
    fn construction_a_errors() {
        assert_eq!(build_construction_a(4, 1, vec![vec![1]], vec![]).unwrap_err(), Error::NotPrime(4));
        let err = build_construction_a(2, 2, vec![vec![1, 1]], vec![vec![1, 0]]).unwrap_err();
        assert!(matches!(err, Error::NotNested(_)));
    }

    #[test]
    fn self_similar_rejects_zero_k() {
        let z = Lattice::scaled_cubic(1, 1.0).unwrap();
        assert!(build_self_similar(&z, 0, 1, 1.0).is_err());
    }

    #[test]
    fn power_matching() {
        let z = Lattice::scaled_cubic(1, 1.0).unwrap();
        let m = build_power_matched(&z, 4.2, 1.0, 2, 0, 0).unwrap();
        assert_eq!(m.k1, 2);
        assert_eq!(m.p1, 4.0);
        let s2 = m.chain.mid().second_moment(0, 0).unwrap().value;
        assert!((s2 - 1.0).abs() < 1e-12);
        let s1 = m.chain.coarse().second_moment(0, 0).unwrap().value;
        assert!((s1 - 4.0).abs() < 1e-12);
        assert!(build_power_matched(&z, 1.0, 2.0, 2, 0, 0).is_err());
    }

    #[test]
    fn random_leader_is_member() {
        use rand::SeedableRng;
        let c = build_self_similar(&NamedBase::A2.lattice(2).unwrap(), 3, 2, 1.0).unwrap();
        let leaders = c.enumerate_coset_leaders(CosetLevel::One, 1 << 10).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let v = c.random_coset_leader(CosetLevel::One, &mut rng);
            assert!(leader_index(&leaders, &v, c.point_tol()).is_some());
        }
    }
}
