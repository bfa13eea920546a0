//! Full-rank lattices in R^n.
//!
//! A [`Lattice`] is `{ G z : z ∈ Z^n }` for a nonsingular generator `G`
//! whose columns are the basis vectors. `G` is stored row-major.
//!
//! Nearest-point quantization is exact: scaled cubic lattices use
//! coordinatewise rounding, everything else uses a Schnorr-Euchner
//! sphere search seeded by Babai rounding. Ties on Voronoi facets resolve to
//! the lexicographically *largest* lattice point, so that the residual
//! `x mod Λ` is the lexicographically smallest of the tied residuals (for
//! `2Z`, `3 mod 2Z = -1`).

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream, SeedPath};
use crate::vecops;

/// Largest supported dimension.
pub const MAX_DIMENSION: usize = 32;

/// Relative tolerance for "exact lattice point" assertions, applied after
/// normalizing to unit volume.
pub const EXACT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LatticeFamily {
    ScaledCubic,
    BaseMatrix,
    #[serde(rename = "construction-A")]
    ConstructionA,
}

/// Well-known base lattices with their standard generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NamedBase {
    /// The integer lattice Z^n.
    Z,
    /// Hexagonal lattice, unit minimum distance.
    A2,
    /// Checkerboard lattice D4.
    D4,
    /// Gosset lattice E8, unit volume.
    E8,
}

impl NamedBase {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "z" | "zn" | "cubic" => Some(Self::Z),
            "a2" | "hex" => Some(Self::A2),
            "d4" => Some(Self::D4),
            "e8" => Some(Self::E8),
            _ => None,
        }
    }

    /// Native dimension, `None` for `Z` which exists in every dimension.
    pub fn dimension(self) -> Option<usize> {
        match self {
            Self::Z => None,
            Self::A2 => Some(2),
            Self::D4 => Some(4),
            Self::E8 => Some(8),
        }
    }

    pub fn lattice(self, n: usize) -> Result<Lattice> {
        if let Some(d) = self.dimension() {
            if d != n {
                return Err(Error::DimensionMismatch { expected: d, got: n });
            }
        }
        match self {
            Self::Z => Lattice::scaled_cubic(n, 1.0),
            Self::A2 => {
                let h = libm::sqrt(3.0) / 2.0;
                Lattice::from_basis_rows(&[vec![1.0, 0.0], vec![0.5, h]], LatticeFamily::BaseMatrix)
            }
            Self::D4 => Lattice::from_basis_rows(
                &[
                    vec![-1.0, -1.0, 0.0, 0.0],
                    vec![1.0, -1.0, 0.0, 0.0],
                    vec![0.0, 1.0, -1.0, 0.0],
                    vec![0.0, 0.0, 1.0, -1.0],
                ],
                LatticeFamily::BaseMatrix,
            ),
            Self::E8 => {
                let mut rows = Vec::with_capacity(8);
                let mut first = vec![0.0; 8];
                first[0] = 2.0;
                rows.push(first);
                for i in 0..6 {
                    let mut r = vec![0.0; 8];
                    r[i] = -1.0;
                    r[i + 1] = 1.0;
                    rows.push(r);
                }
                rows.push(vec![0.5; 8]);
                Lattice::from_basis_rows(&rows, LatticeFamily::BaseMatrix)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentMethod {
    ClosedForm,
    MonteCarlo,
}

/// Per-dimension second moment of the Voronoi region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondMomentEstimate {
    pub value: f64,
    pub method: MomentMethod,
    pub sample_count: u64,
    pub standard_error: f64,
}

/// Serialized form of a lattice: `{family, n, generator}` with the
/// generator row-major and basis vectors in its columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeDescription {
    pub family: LatticeFamily,
    pub n: usize,
    pub generator: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeDescription", into = "LatticeDescription")]
pub struct Lattice {
    n: usize,
    generator: Vec<f64>,
    family: LatticeFamily,
    cubic_scale: Option<f64>,
    inverse: Vec<f64>,
    /// Upper-triangular factor of `G = QR`, row-major.
    r: Vec<f64>,
    /// Orthogonal factor of `G = QR`, row-major.
    q: Vec<f64>,
    volume: f64,
}

impl TryFrom<LatticeDescription> for Lattice {
    type Error = Error;

    fn try_from(d: LatticeDescription) -> Result<Self> {
        Lattice::new(d.n, d.generator, d.family)
    }
}

impl From<Lattice> for LatticeDescription {
    fn from(l: Lattice) -> Self {
        l.description()
    }
}

impl Lattice {
    /// Builds a lattice from a row-major generator whose columns are the basis.
    pub fn new(n: usize, generator: Vec<f64>, family: LatticeFamily) -> Result<Self> {
        if n == 0 || n > MAX_DIMENSION {
            return Err(Error::InvalidGenerator(alloc::format!(
                "dimension {n} outside 1..={MAX_DIMENSION}"
            )));
        }
        if generator.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: generator.len(),
            });
        }
        if generator.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGenerator("non-finite entry".to_string()));
        }

        let cubic_scale = if family == LatticeFamily::ScaledCubic {
            let a = generator[0];
            let diagonal = (0..n).all(|i| {
                (0..n).all(|j| {
                    let v = generator[i * n + j];
                    if i == j {
                        v == a
                    } else {
                        v == 0.0
                    }
                })
            });
            if !diagonal || a <= 0.0 {
                return Err(Error::InvalidGenerator(
                    "scaled-cubic generator must be a positive multiple of the identity".to_string(),
                ));
            }
            Some(a)
        } else {
            None
        };

        let g = DMatrix::from_row_slice(n, n, &generator);
        let det = g.clone().lu().determinant();
        if !det.is_finite() || det.abs() < 1e-300 {
            return Err(Error::SingularGenerator(det));
        }
        let volume = match cubic_scale {
            Some(a) => libm::pow(a, n as f64),
            None => det.abs(),
        };
        // Normalized singularity check: the basis must not be nearly degenerate.
        let col_norms: f64 = (0..n)
            .map(|j| libm::sqrt((0..n).map(|i| generator[i * n + j] * generator[i * n + j]).sum()))
            .product();
        if volume / col_norms < 1e-12 {
            return Err(Error::SingularGenerator(det));
        }

        let inv = g
            .clone()
            .try_inverse()
            .ok_or(Error::SingularGenerator(det))?;
        let qr = g.qr();
        let (q, r) = (qr.q(), qr.r());

        Ok(Self {
            n,
            family,
            cubic_scale,
            inverse: row_major(&inv),
            r: row_major(&r),
            q: row_major(&q),
            generator,
            volume,
        })
    }

    /// `a Z^n`.
    pub fn scaled_cubic(n: usize, a: f64) -> Result<Self> {
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            g[i * n + i] = a;
        }
        Self::new(n, g, LatticeFamily::ScaledCubic)
    }

    /// Builds a lattice from basis vectors given as rows.
    pub fn from_basis_rows(rows: &[Vec<f64>], family: LatticeFamily) -> Result<Self> {
        let n = rows.len();
        let mut g = vec![0.0; n * n];
        for (j, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            for (i, v) in row.iter().enumerate() {
                g[i * n + j] = *v;
            }
        }
        Self::new(n, g, family)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> LatticeFamily {
        self.family
    }

    /// Row-major generator; basis vectors are its columns.
    pub fn generator(&self) -> &[f64] {
        &self.generator
    }

    pub fn basis_vector(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.generator[i * self.n + j]).collect()
    }

    pub fn description(&self) -> LatticeDescription {
        LatticeDescription {
            family: self.family,
            n: self.n,
            generator: self.generator.clone(),
        }
    }

    /// `s Λ`, keeping the family tag.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(alloc::format!("scale {s} must be positive")));
        }
        Self::new(self.n, vecops::scale(&self.generator, s), self.family)
    }

    /// Voronoi-cell volume `|det G|`.
    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// Linear length scale `Vol^(1/n)`.
    pub fn unit_length(&self) -> f64 {
        libm::pow(self.volume, 1.0 / self.n as f64)
    }

    fn tie_tol_sq(&self) -> f64 {
        let l = self.unit_length();
        EXACT_TOL * l * l
    }

    /// Coordinate tolerance for lattice-point comparisons at this scale.
    pub fn coord_tol(&self) -> f64 {
        EXACT_TOL * self.unit_length()
    }

    /// `G z`.
    pub fn point(&self, z: &[i64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.generator[i * n + j] * z[j] as f64).sum())
            .collect()
    }

    /// `G^-1 x` (real coordinates).
    pub fn coordinates(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let n = self.n;
        Ok((0..n)
            .map(|i| (0..n).map(|j| self.inverse[i * n + j] * x[j]).sum())
            .collect())
    }

    /// Integer coordinates of a lattice point, or `None` if `x` is not one.
    pub fn integer_coordinates(&self, x: &[f64]) -> Result<Option<Vec<i64>>> {
        let c = self.coordinates(x)?;
        let z: Vec<i64> = c.iter().map(|v| libm::round(*v) as i64).collect();
        let back = self.point(&z);
        let tol = self.coord_tol().max(EXACT_TOL);
        Ok(vecops::approx_eq(&back, x, tol * 1e3).then_some(z))
    }

    pub fn contains(&self, x: &[f64]) -> Result<bool> {
        Ok(self.integer_coordinates(x)?.is_some())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Nearest lattice point to `x`.
    pub fn quantize(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.point(&self.closest_coords(x)))
    }

    /// Integer coordinates of the nearest lattice point.
    pub fn quantize_coords(&self, x: &[f64]) -> Result<Vec<i64>> {
        self.check_dim(x)?;
        Ok(self.closest_coords(x))
    }

    /// `x mod Λ = x - Q(x)`, a point of the fundamental Voronoi region.
    pub fn reduce(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let q = self.point(&self.closest_coords(x));
        Ok(vecops::sub(x, &q))
    }

    /// True if `x mod Λ = x` within tolerance.
    pub fn in_voronoi(&self, x: &[f64]) -> Result<bool> {
        let r = self.reduce(x)?;
        Ok(vecops::approx_eq(&r, x, self.coord_tol() * 1e3))
    }

    fn closest_coords(&self, x: &[f64]) -> Vec<i64> {
        if let Some(a) = self.cubic_scale {
            return x.iter().map(|v| round_half_up(v / a) as i64).collect();
        }
        self.sphere_search(x)
    }

    fn sphere_search(&self, x: &[f64]) -> Vec<i64> {
        let n = self.n;
        // Babai rounding gives the base point and the initial radius.
        let c: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| self.inverse[i * n + j] * x[j]).sum())
            .collect();
        let base: Vec<i64> = c.iter().map(|v| round_half_up(*v) as i64).collect();
        let residual = vecops::sub(x, &self.point(&base));
        // y = Q^T residual
        let y: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|k| self.q[k * n + i] * residual[k]).sum())
            .collect();

        let tol = self.tie_tol_sq();
        let mut search = Search {
            n,
            r: &self.r,
            y: &y,
            tol,
            radius_sq: vecops::norm_sq(&residual) + tol,
            best: f64::INFINITY,
            found: Vec::new(),
            z: vec![0; n],
        };
        search.descend(n - 1, 0.0);

        let best = search.best;
        let mut winner: Option<(Vec<i64>, Vec<f64>)> = None;
        let ctol = self.coord_tol();
        for (d, dz) in search.found {
            if d > best + tol {
                continue;
            }
            let p = self.point(&dz);
            let take = match &winner {
                None => true,
                Some((_, wp)) => vecops::lex_cmp(&p, wp, ctol) == Ordering::Greater,
            };
            if take {
                winner = Some((dz, p));
            }
        }
        let dz = winner.map(|(z, _)| z).unwrap_or_else(|| vec![0; n]);
        base.iter().zip(&dz).map(|(a, b)| a + b).collect()
    }

    /// Uniform sample from the fundamental Voronoi region.
    pub fn sample_voronoi<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let u: Vec<f64> = (0..self.n).map(|_| rng.random::<f64>()).collect();
        let n = self.n;
        let x: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| self.generator[i * n + j] * u[j]).sum())
            .collect();
        let q = self.point(&self.closest_coords(&x));
        vecops::sub(&x, &q)
    }

    /// Per-dimension second moment of the Voronoi region.
    ///
    /// Closed form for scaled cubic lattices (`a^2/12`). Otherwise `budget`
    /// points uniform on a fundamental parallelepiped are reduced mod the
    /// lattice and `|x|^2/n` is averaged; `budget == 0` is an error in that
    /// case.
    pub fn second_moment(&self, budget: u64, seed: u64) -> Result<SecondMomentEstimate> {
        if let Some(a) = self.cubic_scale {
            return Ok(SecondMomentEstimate {
                value: a * a / 12.0,
                method: MomentMethod::ClosedForm,
                sample_count: 0,
                standard_error: 0.0,
            });
        }
        if budget == 0 {
            return Err(Error::NoClosedForm);
        }
        let mut rng: ChaCha20Rng = SeedPath::new(seed, stream::SECOND_MOMENT, 0).rng();
        let n = self.n as f64;
        let (mut mean, mut m2) = (0.0f64, 0.0f64);
        for k in 1..=budget {
            let s = vecops::norm_sq(&self.sample_voronoi(&mut rng)) / n;
            let delta = s - mean;
            mean += delta / k as f64;
            m2 += delta * (s - mean);
        }
        let var = if budget > 1 { m2 / (budget - 1) as f64 } else { 0.0 };
        Ok(SecondMomentEstimate {
            value: mean,
            method: MomentMethod::MonteCarlo,
            sample_count: budget,
            standard_error: libm::sqrt(var / budget as f64),
        })
    }
}

struct Search<'a> {
    n: usize,
    r: &'a [f64],
    y: &'a [f64],
    tol: f64,
    radius_sq: f64,
    best: f64,
    found: Vec<(f64, Vec<i64>)>,
    z: Vec<i64>,
}

impl Search<'_> {
    fn descend(&mut self, level: usize, partial: f64) {
        let n = self.n;
        let rii = self.r[level * n + level];
        let mut s = self.y[level];
        for j in level + 1..n {
            s -= self.r[level * n + j] * self.z[j] as f64;
        }
        let center = s / rii;
        let rii2 = rii * rii;

        let start = round_half_up(center) as i64;
        let (mut lo, mut hi) = (start - 1, start + 1);
        let mut next = Some(start);
        while let Some(zi) = next {
            let off = center - zi as f64;
            let d = partial + rii2 * off * off;
            if d > self.radius_sq {
                break;
            }
            self.z[level] = zi;
            if level == 0 {
                self.leaf(d);
            } else {
                self.descend(level - 1, d);
            }
            // Zig-zag: take whichever unexplored neighbour is closer.
            let dlo = center - lo as f64;
            let dhi = hi as f64 - center;
            next = if dlo <= dhi {
                lo -= 1;
                Some(lo + 1)
            } else {
                hi += 1;
                Some(hi - 1)
            };
        }
    }

    fn leaf(&mut self, d: f64) {
        if d < self.best - self.tol {
            self.found.retain(|(fd, _)| *fd <= d + self.tol);
        }
        if d < self.best {
            self.best = d;
            self.radius_sq = d + self.tol;
        }
        if d <= self.best + self.tol {
            self.found.push((d, self.z.clone()));
        }
    }
}

fn round_half_up(v: f64) -> f64 {
    libm::floor(v + 0.5)
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push(m[(i, j)]);
        }
    }
    out
}
