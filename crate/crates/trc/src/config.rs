//! JSON run configuration and its merge with command-line flags.
//!
//! Every field is optional so a config file and a flag set can be layered:
//! `file.merge(flags)` keeps the file's value unless the flag layer sets it.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trc_core::chain::{build_power_matched, build_self_similar, ChainDescription};
use trc_core::channel::{db_to_linear, ChannelParams};
use trc_core::sim::{AlphaMode, Phase, SimConfig};
use trc_core::{LatticeChain, NamedBase};

use crate::error::{CliError, CliResult};

/// Default Monte Carlo budget when a base lattice has no closed-form
/// second moment.
pub const DEFAULT_MOMENT_SAMPLES: u64 = 100_000;
pub const DEFAULT_UPLINK_TRIALS: u64 = 100_000;
pub const DEFAULT_END_TO_END_TRIALS: u64 = 10_000;

/// Either a path to a chain JSON file or the chain inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChainSource {
    Path(PathBuf),
    Inline(ChainDescription),
}

/// `"mmse"` or a fixed number in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AlphaSpec {
    Named(String),
    Fixed(f64),
}

impl AlphaSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        if s.eq_ignore_ascii_case("mmse") {
            return Ok(Self::Named("mmse".into()));
        }
        s.parse::<f64>()
            .map(Self::Fixed)
            .map_err(|_| CliError::validation(format!("--alpha expects `mmse` or a number, got `{s}`")))
    }

    fn mode(&self) -> CliResult<AlphaMode> {
        match self {
            Self::Named(n) if n.eq_ignore_ascii_case("mmse") => Ok(AlphaMode::Mmse),
            Self::Named(n) => Err(CliError::validation(format!("alpha must be \"mmse\" or a number, got \"{n}\""))),
            Self::Fixed(a) => Ok(AlphaMode::Fixed(*a)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k2: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nr_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n2_db: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Phase>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<AlphaSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enumeration_cap: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moment_samples: Option<u64>,

    /// Sweep points, each layered over the rest of this config.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<RunConfig>>,
}

macro_rules! take {
    ($base:ident, $over:ident; $($f:ident),*) => {
        $( if $over.$f.is_some() { $base.$f = $over.$f; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::validation(format!("invalid JSON in {}: {e}", path.display())))?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes a relative chain path relative to the config file's directory.
    fn resolve_paths(&mut self, dir: &Path) {
        if let Some(ChainSource::Path(p)) = &mut self.chain {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
        for g in self.grid.iter_mut().flatten() {
            g.resolve_paths(dir);
        }
    }

    /// Layers `over` on top of `self`.
    pub fn merge(mut self, over: RunConfig) -> RunConfig {
        // A chain source and base-lattice fields are alternatives.
        if over.chain.is_some() {
            self.base = None;
            self.n = None;
            self.k1 = None;
            self.k2 = None;
            self.scale = None;
        }
        let base_fields = over.base.is_some()
            || over.n.is_some()
            || over.k1.is_some()
            || over.k2.is_some()
            || over.scale.is_some();
        if base_fields && over.chain.is_none() {
            self.chain = None;
        }
        // Linear and dB forms of the same quantity are alternatives too.
        if over.nr.is_some() || over.nr_db.is_some() {
            self.nr = None;
            self.nr_db = None;
        }
        if over.n1.is_some() || over.n1_db.is_some() {
            self.n1 = None;
            self.n1_db = None;
        }
        if over.n2.is_some() || over.n2_db.is_some() {
            self.n2 = None;
            self.n2_db = None;
        }
        take!(self, over; chain, base, n, k1, k2, scale, p1, p2, pr, nr, nr_db, n1, n1_db, n2, n2_db,
              trials, seed, mode, alpha, backoff, enumeration_cap, moment_samples, grid);
        self
    }

    pub fn params(&self) -> CliResult<ChannelParams> {
        fn pick(name: &str, lin: Option<f64>, db: Option<f64>) -> CliResult<f64> {
            match (lin, db) {
                (Some(_), Some(_)) => Err(CliError::validation(format!(
                    "--{name} and --{name}-db are mutually exclusive; give one"
                ))),
                (Some(v), None) => Ok(v),
                (None, Some(d)) => Ok(db_to_linear(d)),
                (None, None) => Ok(1.0),
            }
        }
        let p = ChannelParams {
            p1: self.p1.unwrap_or(1.0),
            p2: self.p2.unwrap_or(1.0),
            pr: self.pr.unwrap_or(1.0),
            sigma_r2: pick("nr", self.nr, self.nr_db)?,
            sigma1_2: pick("n1", self.n1, self.n1_db)?,
            sigma2_2: pick("n2", self.n2, self.n2_db)?,
        };
        p.validate()?;
        Ok(p)
    }

    fn has_base_fields(&self) -> bool {
        self.base.is_some() || self.n.is_some() || self.k1.is_some() || self.k2.is_some() || self.scale.is_some()
    }

    fn base_lattice(&self) -> CliResult<trc_core::Lattice> {
        let name = self.base.as_deref().unwrap_or("z");
        let base = NamedBase::parse(name)
            .ok_or_else(|| CliError::validation(format!("unknown base lattice `{name}`; use z, a2, d4 or e8")))?;
        let n = match (self.n, base.dimension()) {
            (Some(n), _) => n,
            (None, Some(d)) => d,
            (None, None) => 1,
        };
        Ok(base.lattice(n)?)
    }

    /// Chain with an explicit scale (default 1), without power matching.
    pub fn explicit_chain(&self) -> CliResult<LatticeChain> {
        if let Some(src) = &self.chain {
            if self.has_base_fields() {
                return Err(CliError::validation(
                    "a chain file cannot be combined with --base/--n/--k1/--k2/--scale",
                ));
            }
            return Ok(load_chain(src)?.build()?);
        }
        let base = self.base_lattice()?;
        Ok(build_self_similar(
            &base,
            self.k1.unwrap_or(1),
            self.k2.unwrap_or(2),
            self.scale.unwrap_or(1.0),
        )?)
    }

    /// Resolves a complete simulation config. Base-lattice chains without an
    /// explicit `scale` are power-matched to `(P1, P2)`, which replaces the
    /// stronger node's power by the realized `k1² P_weak`.
    pub fn sim_config(&self) -> CliResult<SimConfig> {
        let seed = self
            .seed
            .ok_or_else(|| CliError::validation("--seed is required for simulations (seeds are never implicit)"))?;
        let mut params = self.params()?;
        let chain = match &self.chain {
            Some(src) => {
                if self.has_base_fields() {
                    return Err(CliError::validation(
                        "a chain file cannot be combined with --base/--n/--k1/--k2/--scale",
                    ));
                }
                load_chain(src)?
            }
            None if self.scale.is_some() => self.explicit_chain()?.description().clone(),
            None => {
                if self.k1.is_some() {
                    return Err(CliError::validation(
                        "--k1 is derived from P1/P2 when power matching; pass --scale to fix the chain",
                    ));
                }
                let base = self.base_lattice()?;
                let strong_is_1 = params.p1 >= params.p2;
                let (hi, lo) = if strong_is_1 { (params.p1, params.p2) } else { (params.p2, params.p1) };
                let samples = self.moment_samples.unwrap_or(DEFAULT_MOMENT_SAMPLES);
                let m = build_power_matched(&base, hi, lo, self.k2.unwrap_or(2), samples, seed)?;
                if strong_is_1 {
                    params.p1 = m.p1;
                } else {
                    params.p2 = m.p1;
                }
                m.chain.description().clone()
            }
        };
        let mode = self.mode.unwrap_or(Phase::UplinkOnly);
        let trials = self.trials.unwrap_or(match mode {
            Phase::UplinkOnly => DEFAULT_UPLINK_TRIALS,
            Phase::EndToEnd => DEFAULT_END_TO_END_TRIALS,
        });
        let alpha = match &self.alpha {
            Some(a) => a.mode()?,
            None => AlphaMode::Mmse,
        };
        Ok(SimConfig {
            chain,
            params,
            trials,
            seed,
            phase: mode,
            alpha,
            backoff: self.backoff.unwrap_or(trc_core::codec::DEFAULT_POWER_BACKOFF),
            enumeration_cap: self
                .enumeration_cap
                .unwrap_or(trc_core::chain::DEFAULT_ENUMERATION_CAP as u64),
        })
    }

    /// Sweep configs in grid order; a config without a grid is a one-point sweep.
    pub fn grid_points(&self) -> Vec<RunConfig> {
        let mut base = self.clone();
        let grid = base.grid.take();
        match grid {
            Some(points) if !points.is_empty() => points.into_iter().map(|p| base.clone().merge(p)).collect(),
            _ => vec![base],
        }
    }
}

pub fn load_chain(src: &ChainSource) -> CliResult<ChainDescription> {
    match src {
        ChainSource::Inline(d) => Ok(d.clone()),
        ChainSource::Path(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| CliError::validation(format!("cannot read chain file {}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::validation(format!("invalid chain JSON in {}: {e}", p.display())))
        }
    }
}
