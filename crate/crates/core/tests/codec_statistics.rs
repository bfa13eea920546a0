//! Distributional properties of the coding pipeline.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use trc_core::chain::{build_self_similar, leader_index};
use trc_core::channel::gaussian_vector;
use trc_core::codec::{compute_effective_t, effective_noise};
use trc_core::rng::SeedPath;
use trc_core::sim::{wilson_interval, AlphaMode, Phase, SimConfig, Simulation};
use trc_core::{ChainDescription, ChannelParams, CosetLevel, Lattice, NamedBase};

/// 99.9% two-sided normal quantile.
const Z_999: f64 = 3.290_526_731_491_926;

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn effective_codeword_is_uniform_and_uncorrelated_with_noise() {
    let chain = build_self_similar(&NamedBase::A2.lattice(2).unwrap(), 2, 2, 1.0).unwrap();
    let leaders = chain.enumerate_coset_leaders(CosetLevel::One, 1 << 20).unwrap();
    let mut rng = SeedPath::new(8, 99, 0).rng();
    let samples = 40_000;
    let mut counts = vec![0u64; leaders.len()];
    let (mut t0, mut t1, mut z0, mut z1) = (vec![], vec![], vec![], vec![]);
    for _ in 0..samples {
        let w1 = chain.random_coset_leader(CosetLevel::One, &mut rng);
        let w2 = chain.random_coset_leader(CosetLevel::Two, &mut rng);
        let u1 = chain.coarse().sample_voronoi(&mut rng);
        let u2 = chain.mid().sample_voronoi(&mut rng);
        let x1 = chain.coarse().reduce(&add(&w1, &u1)).unwrap();
        let x2 = chain.mid().reduce(&add(&w2, &u2)).unwrap();
        let z = gaussian_vector(2, 0.3, &mut rng);
        let zt = effective_noise(&x1, &x2, &z, 0.8);
        let t = compute_effective_t(&chain, &w1, &w2, &u2).unwrap().0;
        counts[leader_index(&leaders, &t, chain.point_tol()).unwrap()] += 1;
        t0.push(t[0]);
        t1.push(t[1]);
        z0.push(zt[0]);
        z1.push(zt[1]);
    }
    let e = samples as f64 / leaders.len() as f64;
    let stat: f64 = counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    let p = ChiSquared::new((leaders.len() - 1) as f64).unwrap().sf(stat);
    assert!(p >= 1e-3, "T not uniform on C_1: p = {p}");

    let bound = 4.0 / (samples as f64).sqrt();
    for (t, z) in [(&t0, &z0), (&t0, &z1), (&t1, &z0), (&t1, &z1)] {
        let rho = corr(t, z);
        assert!(rho.abs() < bound, "rho = {rho}");
    }
}

fn cubic_chain(k1: u32, k2: u32) -> ChainDescription {
    build_self_similar(&Lattice::scaled_cubic(1, 1.0).unwrap(), k1, k2, 1.0)
        .unwrap()
        .description()
        .clone()
}

fn contains(k: u64, n: u64, p: f64) -> bool {
    let (lo, hi) = wilson_interval(k, n, Z_999);
    lo <= p && p <= hi
}

#[test]
fn swamped_relay_guesses_uniformly() {
    let cfg = SimConfig {
        chain: cubic_chain(2, 2),
        params: ChannelParams { sigma_r2: 1e6, ..ChannelParams::UNIT },
        trials: 20_000,
        seed: 12,
        phase: Phase::UplinkOnly,
        alpha: AlphaMode::Mmse,
        backoff: 0.05,
        enumeration_cap: 1 << 20,
    };
    let c = Simulation::new(cfg).unwrap().run().unwrap();
    assert!(contains(c.err_t, c.trials, 1.0 - 1.0 / 4.0), "{c:?}");
}

#[test]
fn swamped_downlink_guesses_within_restricted_sets() {
    // |C_1| = 4, |C_2| = 2: node 1 picks among 2 candidates, node 2 among 4.
    let cfg = SimConfig {
        chain: cubic_chain(2, 2),
        params: ChannelParams {
            p1: 4.0 / 3.0,
            p2: 1.0 / 3.0,
            pr: 1.0,
            sigma_r2: 0.0,
            sigma1_2: 1e8,
            sigma2_2: 1e8,
        },
        trials: 20_000,
        seed: 13,
        phase: Phase::EndToEnd,
        alpha: AlphaMode::Fixed(1.0),
        backoff: 0.05,
        enumeration_cap: 1 << 20,
    };
    let c = Simulation::new(cfg).unwrap().run().unwrap();
    assert_eq!(c.err_t, 0);
    assert!(contains(c.err_t1, c.relay_ok, 1.0 - 1.0 / 2.0), "{c:?}");
    assert!(contains(c.err_t2, c.relay_ok, 1.0 - 1.0 / 4.0), "{c:?}");
}

#[test]
fn uplink_error_falls_with_snr() {
    let chain = build_self_similar(&NamedBase::D4.lattice(4).unwrap(), 1, 2, 1.0).unwrap();
    let rates: Vec<(u64, u64)> = [0.6, 0.4, 0.25, 0.15, 0.1]
        .iter()
        .map(|&s| {
            let cfg = SimConfig {
                chain: chain.description().clone(),
                params: ChannelParams { sigma_r2: s, ..ChannelParams::UNIT },
                trials: 20_000,
                seed: 4,
                phase: Phase::UplinkOnly,
                alpha: AlphaMode::Mmse,
                backoff: 0.05,
                enumeration_cap: 1 << 20,
            };
            let c = Simulation::new(cfg).unwrap().run().unwrap();
            (c.err_t, c.trials)
        })
        .collect();
    for w in rates.windows(2) {
        let (a_lo, _) = wilson_interval(w[0].0, w[0].1, 1.96);
        let (_, b_hi) = wilson_interval(w[1].0, w[1].1, 1.96);
        assert!(w[1].0 <= w[0].0 || b_hi >= a_lo, "{rates:?}");
    }
    assert!(rates[4].0 < rates[0].0);
}

#[test]
fn symmetric_nodes_have_matching_downlink_errors() {
    let chain = build_self_similar(&Lattice::scaled_cubic(2, 1.0).unwrap(), 1, 3, 1.0).unwrap();
    let cfg = SimConfig {
        chain: chain.description().clone(),
        params: ChannelParams { sigma_r2: 0.05, sigma1_2: 0.4, sigma2_2: 0.4, ..ChannelParams::UNIT },
        trials: 20_000,
        seed: 21,
        phase: Phase::EndToEnd,
        alpha: AlphaMode::Mmse,
        backoff: 0.05,
        enumeration_cap: 1 << 20,
    };
    let c = Simulation::new(cfg).unwrap().run().unwrap();
    let (a_lo, a_hi) = wilson_interval(c.err_t1, c.relay_ok, 1.96);
    let (b_lo, b_hi) = wilson_interval(c.err_t2, c.relay_ok, 1.96);
    assert!(a_lo <= b_hi && b_lo <= a_hi, "{c:?}");
    assert!(c.err_t1 > 0);
}

#[test]
fn dithered_codewords_do_not_depend_on_message() {
    let chain = build_self_similar(&Lattice::scaled_cubic(1, 1.0).unwrap(), 1, 8, 1.0).unwrap();
    let leaders = chain.enumerate_coset_leaders(CosetLevel::Two, 64).unwrap();
    let mut rng = SeedPath::new(30, 99, 0).rng();
    let bins = 16;
    let half = chain.mid().unit_length() / 2.0;
    let mut hist = vec![vec![0u64; bins]; 2];
    for (h, w) in hist.iter_mut().zip([&leaders[0], &leaders[5]]) {
        for _ in 0..50_000 {
            let u = vec![rng.random_range(-half..half)];
            let x = chain.mid().reduce(&add(w, &u)).unwrap()[0];
            let b = (((x + half) / (2.0 * half)) * bins as f64).floor() as usize;
            h[b.min(bins - 1)] += 1;
        }
    }
    let (na, nb) = (50_000.0, 50_000.0);
    let mut stat = 0.0;
    for j in 0..bins {
        let col = (hist[0][j] + hist[1][j]) as f64;
        for (o, row) in [(hist[0][j] as f64, na), (hist[1][j] as f64, nb)] {
            let e = row * col / (na + nb);
            stat += (o - e).powi(2) / e;
        }
    }
    let p = ChiSquared::new((bins - 1) as f64).unwrap().sf(stat);
    assert!(p >= 1e-3, "p = {p}");
}
