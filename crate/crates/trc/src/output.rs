//! File formats: sweep CSV, trial transcripts, gnuplot sidecars and the
//! JSON reports of the analysis subcommands.
//!
//! Floats are written with Rust's shortest round-trip formatting, so equal
//! values always produce equal bytes.

use std::io::Write;

use serde::Serialize;
use trc_core::lattice::{MomentMethod, SecondMomentEstimate};
use trc_core::rates::{self, ExponentCurve};
use trc_core::sim::{SweepRow, TrialRecord};
use trc_core::{ChainDescription, ChannelParams, CosetLevel, LatticeChain};

use crate::error::CliResult;

pub const SWEEP_HEADER: [&str; 22] = [
    "mode", "n", "p1", "p2", "pr", "nr", "n1", "n2", "alpha", "r1", "r2", "trials", "errT", "errT1", "errT2",
    "errE2E", "pHat", "ciLo", "ciHi", "seed", "wallMs", "error",
];

pub const TRANSCRIPT_HEADER: [&str; 16] = [
    "trial", "w1", "w2", "t", "tHat", "t1Hat", "t2Hat", "w1Hat", "w2Hat", "relayError", "node1Error",
    "node2Error", "messageError", "snrUpDb", "snrDn1Db", "snrDn2Db",
];

pub const RATES_HEADER: [&str; 14] = [
    "p1", "p2", "pr", "nr", "n1", "n2", "cutsetR1", "cutsetR2", "achievableR1", "achievableR2", "gap1", "gap2",
    "alpha", "effNoiseVar",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn sweep_record(r: &SweepRow) -> Vec<String> {
    let c = &r.counts;
    vec![
        r.phase.as_str().to_string(),
        r.n.to_string(),
        r.p1.to_string(),
        r.p2.to_string(),
        r.pr.to_string(),
        r.sigma_r2.to_string(),
        r.sigma1_2.to_string(),
        r.sigma2_2.to_string(),
        r.alpha.to_string(),
        r.r1.to_string(),
        r.r2.to_string(),
        c.trials.to_string(),
        c.err_t.to_string(),
        c.err_t1.to_string(),
        c.err_t2.to_string(),
        c.err_e2e.to_string(),
        r.p_hat.to_string(),
        r.ci_lo.to_string(),
        r.ci_hi.to_string(),
        r.seed.to_string(),
        r.wall_ms.to_string(),
        r.error.clone().unwrap_or_default(),
    ]
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record(sweep_record(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_transcript<W: Write>(out: W, records: &[TrialRecord]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRANSCRIPT_HEADER).map_err(csv_err)?;
    for t in records {
        w.write_record([
            t.index.to_string(),
            opt(t.w1),
            opt(t.w2),
            opt(t.t),
            opt(t.t_hat),
            opt(t.t1_hat),
            opt(t.t2_hat),
            opt(t.w1_hat),
            opt(t.w2_hat),
            u8::from(t.relay_error).to_string(),
            opt(t.node1_error.map(u8::from)),
            opt(t.node2_error.map(u8::from)),
            opt(t.message_error.map(u8::from)),
            t.snr_up_db.to_string(),
            opt(t.snr_dn1_db),
            opt(t.snr_dn2_db),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> crate::error::CliError {
    crate::error::CliError::runtime(format!("CSV write failed: {e}"))
}

#[derive(Debug, Clone, Serialize)]
pub struct Pair {
    pub r1: f64,
    pub r2: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapPair {
    pub g1: f64,
    pub g2: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RatesReport {
    pub cutset: Pair,
    pub achievable: Pair,
    pub gap: GapPair,
    pub alpha: f64,
    pub eff_noise_var: f64,
}

impl RatesReport {
    pub fn compute(p: &ChannelParams) -> trc_core::Result<Self> {
        let c = rates::cutset_region(p)?;
        let a = rates::achievable_region(p)?;
        Ok(Self {
            cutset: Pair { r1: c.r1_max, r2: c.r2_max },
            achievable: Pair { r1: a.r1_max, r2: a.r2_max },
            gap: GapPair { g1: c.r1_max - a.r1_max, g2: c.r2_max - a.r2_max },
            alpha: rates::mmse_alpha(p)?,
            eff_noise_var: rates::effective_noise_variance(p)?,
        })
    }

    pub fn record(&self, p: &ChannelParams) -> Vec<String> {
        [
            p.p1,
            p.p2,
            p.pr,
            p.sigma_r2,
            p.sigma1_2,
            p.sigma2_2,
            self.cutset.r1,
            self.cutset.r2,
            self.achievable.r1,
            self.achievable.r2,
            self.gap.g1,
            self.gap.g2,
            self.alpha,
            self.eff_noise_var,
        ]
        .iter()
        .map(f64::to_string)
        .collect()
    }
}

pub fn write_rates_csv<W: Write>(out: W, rows: &[(ChannelParams, RatesReport)]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RATES_HEADER).map_err(csv_err)?;
    for (p, r) in rows {
        w.write_record(r.record(p)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct MomentReport {
    pub value: f64,
    pub method: MomentMethod,
    pub sample_count: u64,
    pub standard_error: f64,
}

impl From<SecondMomentEstimate> for MomentReport {
    fn from(m: SecondMomentEstimate) -> Self {
        Self {
            value: m.value,
            method: m.method,
            sample_count: m.sample_count,
            standard_error: m.standard_error,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Levels<T> {
    pub fine: T,
    pub mid: T,
    pub coarse: T,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counts {
    pub c1: u128,
    pub c2: u128,
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LatticeReport {
    pub n: usize,
    pub chain: ChainDescription,
    pub volumes: Levels<f64>,
    pub coset_counts: Counts,
    pub rates: Pair,
    pub second_moments: Levels<MomentReport>,
}

impl LatticeReport {
    pub fn compute(chain: &LatticeChain, budget: u64, seed: u64) -> trc_core::Result<Self> {
        let [fine, mid, coarse] = chain.second_moments(budget, seed)?;
        Ok(Self {
            n: chain.dimension(),
            chain: chain.description().clone(),
            volumes: Levels {
                fine: chain.fine().volume(),
                mid: chain.mid().volume(),
                coarse: chain.coarse().volume(),
            },
            coset_counts: Counts {
                c1: chain.coset_count(CosetLevel::One),
                c2: chain.coset_count(CosetLevel::Two),
            },
            rates: Pair {
                r1: chain.rate(CosetLevel::One),
                r2: chain.rate(CosetLevel::Two),
            },
            second_moments: Levels {
                fine: fine.into(),
                mid: mid.into(),
                coarse: coarse.into(),
            },
        })
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ExponentRow {
    pub mu: f64,
    /// Nats.
    pub exponent: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

pub fn write_exponent_csv<W: Write>(out: W, rows: &[ExponentRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let with_bound = rows.first().is_some_and(|r| r.bound.is_some());
    if with_bound {
        w.write_record(["mu", "exponent", "bound"]).map_err(csv_err)?;
    } else {
        w.write_record(["mu", "exponent"]).map_err(csv_err)?;
    }
    for r in rows {
        let mut rec = vec![r.mu.to_string(), r.exponent.to_string()];
        if let Some(b) = r.bound {
            rec.push(b.to_string());
        }
        w.write_record(rec).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct EnvelopeReport {
    pub n: usize,
    pub rate_target: f64,
    pub threshold: f64,
    pub mu: f64,
    pub exponent: f64,
    pub bound: f64,
    /// Always `"asymptotic"`: vanishing correction terms are set to zero.
    pub envelope: &'static str,
}

impl From<ExponentCurve> for EnvelopeReport {
    fn from(c: ExponentCurve) -> Self {
        Self {
            n: c.n,
            rate_target: c.rate_target,
            threshold: c.threshold,
            mu: c.mu,
            exponent: c.exponent,
            bound: c.bound,
            envelope: "asymptotic",
        }
    }
}

/// Gnuplot script plotting error rate against uplink SNR and the rate
/// region of the first successful row.
pub fn gnuplot_script(csv_name: &str, stem: &str, rows: &[SweepRow]) -> String {
    let mut s = String::new();
    s.push_str("# generated by trc\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 900,600\n\n");
    s.push_str(&format!("set output '{stem}-pe.png'\n"));
    s.push_str("set logscale y\n");
    s.push_str("set xlabel 'uplink SNR P1/nr (dB)'\n");
    s.push_str("set ylabel 'error probability'\n");
    s.push_str("set key top right\n");
    s.push_str(&format!(
        "plot '{csv_name}' every ::1 using (10*log10($3/$6)):17:18:19 with yerrorlines title 'pHat (Wilson 95%)'\n\n"
    ));
    s.push_str("unset logscale y\n");

    if let Some(r) = rows.iter().find(|r| r.error.is_none()) {
        let p = ChannelParams {
            p1: r.p1,
            p2: r.p2,
            pr: r.pr,
            sigma_r2: r.sigma_r2,
            sigma1_2: r.sigma1_2,
            sigma2_2: r.sigma2_2,
        };
        if let (Ok(c), Ok(a)) = (rates::cutset_region(&p), rates::achievable_region(&p)) {
            s.push_str("$cutset << EOD\n");
            s.push_str(&rectangle(c.r1_max, c.r2_max));
            s.push_str("EOD\n$achievable << EOD\n");
            s.push_str(&rectangle(a.r1_max, a.r2_max));
            s.push_str("EOD\n");
            s.push_str(&format!("set output '{stem}-region.png'\n"));
            s.push_str("set xlabel 'R1 (bits/dim)'\n");
            s.push_str("set ylabel 'R2 (bits/dim)'\n");
            s.push_str(&format!(
                "plot $cutset with lines title 'cut-set', $achievable with lines title 'achievable', \
                 '{csv_name}' every ::1 using 10:11 with points pt 7 title 'simulated code rates'\n"
            ));
        }
    }
    s
}

fn rectangle(x: f64, y: f64) -> String {
    format!("0 0\n{x} 0\n{x} {y}\n0 {y}\n0 0\n")
}
