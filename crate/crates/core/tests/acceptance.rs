//! Acceptance suite: one pass/fail line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use netbound::capacity::{blahut_arimoto, degraded_bc_lower_points, p2p_lower_point, SuperpositionAux};
use netbound::emulator::{threshold_experiment, EmulationStats, ExperimentConfig, P2pSource};
use netbound::info::{h2, star};
use netbound::model::{
    build_model, gaussian_bc_common_gap, gaussian_mac_gap, lower_model, upper_model_bc, upper_model_mac,
    upper_model_p2p, AuxSearch, Geometry, DEFAULT_GRID, DEFAULT_SLACK,
};
use netbound::netgraph::{butterfly, candidates, cut_value, multicast_capacity, noisy_butterfly, rho, CandidateOptions, Candidates};
use netbound::rng::stream;
use netbound::{Channel, Component, Dmc, GaussianBc, GaussianMac, Network, Rate, RateVector, Side};
use proptest::test_runner::{Config, TestRunner};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(budget: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    check(t < budget, format!("took {t:.2?}, limit {budget:?}"))
}

fn p2p_equality() -> Outcome {
    let start = Instant::now();
    let cases = [
        (Dmc::bsc(0.05), 1.0 - h2(0.05)),
        (Dmc::bsc(0.1), 1.0 - h2(0.1)),
        (Dmc::bsc(0.25), 1.0 - h2(0.25)),
        (Dmc::bec(0.3), 0.7),
    ];
    for (ch, closed) in &cases {
        let c = blahut_arimoto(ch, 1e-9).map_err(|e| e.to_string())?.capacity;
        check((c - closed).abs() <= 1e-6, format!("{}: capacity {c} vs {closed}", ch.name))?;
        let channel = Channel::Discrete(ch.clone());
        let lower = lower_model(&channel, &p2p_lower_point(ch, 1e-9).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let upper = upper_model_p2p(ch, DEFAULT_SLACK, 1e-9).map_err(|e| e.to_string())?;
        let (l, u) = (lower.rate(&[1], &[1]).to_f64(), upper.rate(&[1], &[1]).to_f64());
        check(
            (l - (u - DEFAULT_SLACK)).abs() <= 1e-9,
            format!("{}: lower {l} vs upper - slack {}", ch.name, u - DEFAULT_SLACK),
        )?;
    }
    within(Duration::from_secs(1), start)?;
    Ok(format!("4 channels, {:.2?}", start.elapsed()))
}

fn bc_example() -> Outcome {
    let (p1, p2) = (0.1, 0.1);
    let s = |a: f64, b: f64| star(a, b).unwrap();
    let ch = Dmc::bsc_bc(p1, p2, false);
    let channel = Channel::Discrete(ch.clone());
    let alpha = s(p1, p2);
    let pts = degraded_bc_lower_points(&ch, &[SuperpositionAux::binary_symmetric(alpha)]).map_err(|e| e.to_string())?;
    let lower = lower_model(&channel, &pts[0]).map_err(|e| e.to_string())?;
    let upper = upper_model_bc(&ch, DEFAULT_GRID, DEFAULT_SLACK).map_err(|e| e.to_string())?.minimal();
    let bound = upper.at_boundary();
    let r0 = 1.0 - h2(s(s(p1, p1), s(p2, p2)));
    let r1 = h2(s(s(p1, p1), p2)) - h2(p1);
    let r0u = 1.0 - h2(s(p1, p2));
    let r1u = h2(s(s(p1, p1), p2)) - h2(p1);
    let got = [
        lower.rate(&[1], &[1, 2]).to_f64(),
        lower.rate(&[1], &[1]).to_f64(),
        bound.rate(&[1], &[1, 2]).to_f64(),
        bound.rate(&[1], &[1]).to_f64(),
    ];
    for (name, g, want) in [("R0", got[0], r0), ("R1", got[1], r1), ("R0'", got[2], r0u), ("R1'", got[3], r1u)] {
        check((g - want).abs() <= 1e-9, format!("{name} = {g}, expected {want}"))?;
    }
    for (l, u) in got[..2].iter().zip(&got[2..]) {
        check(u >= l, format!("upper edge {u} below lower edge {l}"))?;
    }
    let c = Candidates {
        channel_id: ch.name.clone(),
        lowers: vec![lower],
        uppers: vec![upper],
    };
    let value = rho(&c).map_err(|e| e.to_string())?.value;
    let want = r0 / r0u;
    check((value - want).abs() <= 1e-9, format!("rho {value}, expected {want}"))?;
    Ok(format!("R0 {:.6} R1 {:.6} R0' {:.6} R1' {:.6} rho {value:.9}", got[0], got[1], got[2], got[3]))
}

fn mac_example() -> Outcome {
    let mut parts = Vec::new();
    for p in [0.0, 0.1, 0.3] {
        let start = Instant::now();
        let ch = Dmc::adder_mac(p);
        let merged = upper_model_mac(&ch, 0.0, DEFAULT_GRID, &AuxSearch::default(), DEFAULT_SLACK)
            .map_err(|e| e.to_string())?
            .r2;
        let want = 1.0 - h2(p);
        check((merged - want).abs() <= 2e-2, format!("p={p}: merged rate {merged} vs {want}"))?;
        let c = candidates(&Channel::Discrete(ch), &CandidateOptions::default()).map_err(|e| e.to_string())?;
        let value = rho(&c).map_err(|e| e.to_string())?.value;
        check(value >= want / 2.0 - 1e-9, format!("p={p}: rho {value} below {}", want / 2.0))?;
        within(Duration::from_secs(30), start)?;
        parts.push(format!("p={p}: merged {merged:.4} rho {value:.4} ({:.1?})", start.elapsed()));
    }
    Ok(parts.join("; "))
}

fn gaussian_gaps() -> Outcome {
    let snrs: Vec<f64> = (0..=24).map(|k| 10f64.powf(-3.0 + k as f64 / 4.0)).collect();
    let noise = 1.0;
    let mut mac = Vec::new();
    let mut bc = Vec::new();
    for &snr in &snrs {
        let p = snr * noise;
        mac.push(gaussian_mac_gap(&GaussianMac::new(p, p, noise).map_err(|e| e.to_string())?));
        let spec = GaussianBc::new(p, 1.0, 1.0, noise, 2.0 * noise, 0.0).map_err(|e| e.to_string())?;
        bc.push(gaussian_bc_common_gap(&spec).map_err(|e| e.to_string())?);
    }
    for (name, gaps) in [("MAC", &mac), ("BC", &bc)] {
        check(gaps.iter().all(|&g| (0.0..0.5).contains(&g)), format!("{name} gap outside [0, 0.5): {gaps:?}"))?;
        check(gaps.windows(2).all(|w| w[1] >= w[0] - 1e-12), format!("{name} gap not monotone"))?;
        check(gaps[0] < 0.01, format!("{name} gap {} at P/N=1e-3", gaps[0]))?;
    }
    let spot = gaussian_mac_gap(&GaussianMac::new(1.0, 1.0, 1.0).map_err(|e| e.to_string())?);
    let want = 0.5 * (5.0f64 / 3.0).log2();
    check((spot - want).abs() <= 1e-6, format!("MAC spot {spot} vs {want}"))?;
    Ok(format!(
        "max MAC {:.4}, max BC {:.4}, spot {spot:.6}",
        mac.iter().copied().fold(0.0, f64::max),
        bc.iter().copied().fold(0.0, f64::max)
    ))
}

fn cut_oracle() -> Outcome {
    let start = Instant::now();
    for seed in 0..100 {
        let net = random_network(seed, 10);
        min_cut_matches_enumeration(&net).map_err(|e| format!("network {seed}: {e}"))?;
    }
    let unit = multicast_capacity(&butterfly(Rate::Finite(1.0)), 1, &[6, 7]).map_err(|e| e.to_string())?;
    check(unit == Rate::Finite(2.0), format!("butterfly capacity {unit}"))?;
    let ch = Dmc::bsc(0.1);
    let channel = Channel::Discrete(ch.clone());
    let lower = lower_model(&channel, &p2p_lower_point(&ch, 1e-9).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let mut net = noisy_butterfly(&channel);
    for k in 1..=9 {
        net = net.replace(&format!("e{k}"), &lower).map_err(|e| e.to_string())?;
    }
    let noisy = multicast_capacity(&net, 1, &[6, 7]).map_err(|e| e.to_string())?.to_f64();
    let want = 2.0 * (1.0 - h2(0.1));
    check((noisy - want).abs() <= 1e-6, format!("noisy butterfly {noisy} vs {want}"))?;
    within(Duration::from_secs(10), start)?;
    Ok(format!("100 networks agree, butterfly 2, noisy butterfly {noisy:.6} ({:.2?})", start.elapsed()))
}

fn internal_nodes() -> Outcome {
    for k in 0..1000u64 {
        let mut rng = stream(6, &[k]);
        let sizes = [rng.random_range(2..=5usize), rng.random_range(2..=5usize)];
        let feeds: Vec<f64> = sizes.iter().map(|&n| (n as f64).log2()).collect();
        let own = rng.random_range(0.0..3.0);
        let other = rng.random_range(0.0..3.0);
        let merged = rng.random_range(0.0..3.0);
        let rates = RateVector::new()
            .with(&[1], &[1], Rate::Finite(own))
            .with(&[2], &[1], Rate::Finite(other))
            .with(&[1, 2], &[1], Rate::Finite(merged));
        let geom = Geometry {
            n_tx: 2,
            n_rx: 1,
            feed_caps: feeds.iter().map(|&f| Rate::Finite(f)).collect(),
        };
        let model = build_model("mac", Side::Upper, &geom, &rates, DEFAULT_SLACK).map_err(|e| e.to_string())?;
        let brute = brute_local_cut(&model, &[true, false], &[false]);
        let net = Network::new(
            3,
            vec![Component::Model { id: "mac".into(), model, v1: vec![1, 2], v2: vec![3] }],
            vec![],
        )
        .map_err(|e| e.to_string())?;
        let got = cut_value(&net, &[1]).map_err(|e| e.to_string())?.value;
        let want = Rate::Finite((own + merged).min(own + feeds[0]));
        check(got == want && brute == want, format!("draw {k}: cut {got}, enumeration {brute}, formula {want}"))?;
    }
    Ok("1000 draws exact".into())
}

fn emulator_threshold() -> Outcome {
    let start = Instant::now();
    let src = P2pSource::new(&Dmc::bsc(0.1), &[0.5, 0.5]).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig {
        rates: vec![0.3, 0.8],
        lengths: vec![6, 12, 16],
        trials: 2000,
        ..ExperimentConfig::default()
    };
    let rows = threshold_experiment(&src, &cfg).map_err(|e| e.to_string())?;
    let row = |r: f64, n: usize| -> Result<&EmulationStats, String> {
        rows.iter()
            .find(|s| s.rate == r && s.n == n)
            .ok_or_else(|| format!("missing row R={r} N={n}"))
    };
    let (a, b) = (row(0.8, 6)?, row(0.8, 12)?);
    let se = (a.failure_se.powi(2) + b.failure_se.powi(2)).sqrt();
    let drop = a.failure_rate - b.failure_rate;
    check(drop >= 3.0 * se, format!("R=0.8 failure drop {drop:.4} below 3 SE = {:.4}", 3.0 * se))?;
    let low = row(0.3, 16)?;
    check(low.failure_rate >= 0.9, format!("R=0.3 N=16 failure {}", low.failure_rate))?;
    let tv = b.tv.ok_or("no successful trials at R=0.8 N=12")?;
    check(tv < 0.15, format!("TV {tv} at R=0.8 N=12"))?;
    within(Duration::from_secs(120), start)?;
    Ok(format!(
        "R=0.8 failure {:.4} -> {:.4} ({:.1} SE), R=0.3 N=16 failure {:.4}, TV {tv:.4} (against p(x)W: {}) ({:.1?})",
        a.failure_rate,
        b.failure_rate,
        drop / se.max(f64::MIN_POSITIVE),
        low.failure_rate,
        b.tv_model.map_or("n/a".into(), |v| format!("{v:.4}")),
        start.elapsed()
    ))
}

fn invariants() -> Outcome {
    use proptest::prelude::*;
    let cfg = || Config { cases: 200, failure_persistence: None, ..Config::default() };
    TestRunner::new(cfg())
        .run(
            &(prop::collection::vec(2usize..4, 3), prop::collection::vec(0.001f64..1.0, 27)),
            |(shape, w)| chain_rule(&shape, &w),
        )
        .map_err(|e| format!("chain rule: {e}"))?;
    TestRunner::new(cfg())
        .run(&(2usize..5, 2usize..5).prop_flat_map(|(a, b)| p2p(a, b)), |ch| ba_monotone_and_certified(&ch))
        .map_err(|e| format!("capacity iterations: {e}"))?;
    TestRunner::new(cfg())
        .run(&binary_channel(), |ch| candidate_properties(&ch))
        .map_err(|e| format!("candidates: {e}"))?;
    Ok("3 suites x 200 cases".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("point-to-point model equality", p2p_equality),
        ("broadcast example", bc_example),
        ("multiple-access example", mac_example),
        ("Gaussian gaps", gaussian_gaps),
        ("cut oracle", cut_oracle),
        ("internal-node minimization", internal_nodes),
        ("emulator threshold", emulator_threshold),
        ("invariant suites", invariants),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS: {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL: {name}: {detail}", k + 1)
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
