//! Generators and property checks shared by the property and acceptance
//! suites.

#![allow(dead_code)]

use netbound::capacity::{blahut_arimoto_traced, p2p_lower_point};
use netbound::info::{conditional_mi, entropy, mutual_information};
use netbound::model::{build_model, AuxSearch, Geometry, ModelNode};
use netbound::netgraph::{candidates, cut_value, enumerate_min_cut, min_cut, rho, valid_pair, CandidateOptions, Candidates};
use netbound::rng::stream;
use netbound::{BitPipeModel, Channel, Component, Dmc, JointPmf, Network, Rate, RateVector, Role, Side};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|k| k.to_string()).collect()
}

/// Normalizes positive weights into a distribution.
pub fn normalize(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|x| x / s).collect()
}

pub fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, n).prop_map(|w| normalize(&w))
}

pub fn channel(role: Role, ins: &[usize], outs: &[usize], weights: &[f64]) -> Dmc {
    let rows: usize = ins.iter().product();
    let cols: usize = outs.iter().product();
    let t: Vec<f64> = weights
        .chunks(cols)
        .take(rows)
        .flat_map(|r| normalize(r))
        .collect();
    Dmc::new(
        "random",
        role,
        ins.iter().map(|&n| labels(n)).collect(),
        outs.iter().map(|&n| labels(n)).collect(),
        t,
    )
    .expect("well-formed random channel")
}

/// Random p2p channel with `nx` inputs and `ny` outputs.
pub fn p2p(nx: usize, ny: usize) -> impl Strategy<Value = Dmc> {
    prop::collection::vec(0.01f64..1.0, nx * ny).prop_map(move |w| channel(Role::P2p, &[nx], &[ny], &w))
}

/// Random binary channel of any role.
pub fn binary_channel() -> impl Strategy<Value = Dmc> {
    (0usize..3, prop::collection::vec(0.01f64..1.0, 8)).prop_map(|(k, w)| match k {
        0 => channel(Role::P2p, &[2], &[2], &w),
        1 => channel(Role::Bc, &[2], &[2, 2], &w),
        _ => channel(Role::Mac, &[2, 2], &[2], &w),
    })
}

pub fn fast_options() -> CandidateOptions {
    CandidateOptions {
        res: 9,
        aux: AuxSearch { starts: 2, seed: 7 },
        mac_points: 3,
        bc_points: 5,
        bc_members: 2,
        ..CandidateOptions::default()
    }
}

fn close(a: f64, b: f64, tol: f64, what: &str) -> Result<(), TestCaseError> {
    prop_assert!((a - b).abs() <= tol, "{what}: {a} vs {b}");
    Ok(())
}

/// Chain rules and mutual-information identities on a three-variable pmf.
pub fn chain_rule(shape: &[usize], weights: &[f64]) -> Result<(), TestCaseError> {
    let n: usize = shape.iter().product();
    let j = JointPmf::from_shape(shape, normalize(&weights[..n])).unwrap();
    let h = |a: &[usize]| j.entropy_axes(a);
    close(h(&[0, 1, 2]), h(&[0]) + (h(&[0, 1]) - h(&[0])) + (h(&[0, 1, 2]) - h(&[0, 1])), 1e-10, "H chain")?;
    let i_x_yz = mutual_information(&j, &[0], &[1, 2]).unwrap();
    let i_x_y = mutual_information(&j, &[0], &[1]).unwrap();
    let i_x_z_y = conditional_mi(&j, &[0], &[2], &[1]).unwrap();
    close(i_x_yz, i_x_y + i_x_z_y, 1e-10, "I chain")?;
    close(i_x_y, h(&[0]) + h(&[1]) - h(&[0, 1]), 1e-10, "I as entropies")?;
    close(i_x_y, mutual_information(&j, &[1], &[0]).unwrap(), 1e-10, "I symmetry")?;
    prop_assert!(i_x_y >= -1e-12 && i_x_z_y >= -1e-12);
    prop_assert!(entropy(&j) <= (n as f64).log2() + 1e-12);
    Ok(())
}

/// Tolerance loose enough for every random channel to converge within the
/// iteration cap.
pub const BA_TOL: f64 = 1e-6;

/// Mutual information along the iterates never decreases, and the returned
/// input certifies the rate.
pub fn ba_monotone_and_certified(ch: &Dmc) -> Result<(), TestCaseError> {
    let (r, trace) = blahut_arimoto_traced(ch, BA_TOL).unwrap();
    for w in trace.windows(2) {
        prop_assert!(w[1] >= w[0] - 1e-12, "trace decreased: {w:?}");
    }
    prop_assert!(r.lower_bracket <= r.capacity + 1e-12 && r.capacity <= r.upper_bracket + 1e-12);
    let p = p2p_lower_point(ch, BA_TOL).unwrap();
    let excess = p.certify(Some(ch)).unwrap();
    prop_assert!(excess <= 1e-9);
    Ok(())
}

fn patterns(m: &BitPipeModel) -> Vec<(Vec<bool>, Vec<bool>)> {
    let (t, r) = (m.geometry.n_tx, m.geometry.n_rx);
    let mut out = Vec::new();
    for a in 0..1u32 << t {
        for b in 0..1u32 << r {
            out.push((
                (0..t).map(|k| a >> k & 1 == 1).collect(),
                (0..r).map(|k| b >> k & 1 == 1).collect(),
            ));
        }
    }
    out
}

/// ρ lies in [0,1], shrinking the candidate lists never raises it, and
/// every upper candidate dominates every lower candidate on every cut.
pub fn candidate_properties(ch: &Dmc) -> Result<(), TestCaseError> {
    let c = candidates(&Channel::Discrete(ch.clone()), &fast_options()).unwrap();
    let full = rho(&c).unwrap().value;
    prop_assert!((0.0..=1.0).contains(&full), "rho {full}");
    for k in 1..=c.lowers.len() {
        let sub = Candidates {
            channel_id: c.channel_id.clone(),
            lowers: c.lowers[..k].to_vec(),
            uppers: c.uppers[..1].to_vec(),
        };
        prop_assert!(rho(&sub).unwrap().value <= full + 1e-12);
    }
    for lo in &c.lowers {
        for up in &c.uppers {
            prop_assert!(valid_pair(lo, up), "{} / {}", lo.channel_id, up.channel_id);
            for (tx, rx) in patterns(up) {
                let vu = up.local_cut(&tx, &rx, true).0;
                let vl = lo.local_cut(&tx, &rx, true).0;
                prop_assert!(vu.to_f64() >= vl.to_f64() - 1e-9, "{vu} < {vl} at {tx:?} {rx:?}");
            }
        }
    }
    Ok(())
}

/// Capacity with one eighth granularity, sometimes infinite.
fn cap<R: Rng>(rng: &mut R) -> Rate {
    if rng.random_bool(0.08) {
        Rate::Infinite
    } else {
        Rate::Finite(rng.random_range(0..=24) as f64 / 8.0)
    }
}

fn distinct<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    while out.len() < k {
        let v = rng.random_range(1..=m);
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

/// Seeded random deterministic network with pipes, broadcast models and
/// multiple-access models with internal nodes.
pub fn random_network(seed: u64, max_nodes: usize) -> Network {
    let mut rng = stream(seed, &[]);
    let m = rng.random_range(3..=max_nodes);
    let mut comps = Vec::new();
    for _ in 0..rng.random_range(m..=3 * m) {
        let e = distinct(&mut rng, m, 2);
        comps.push(Component::Pipe { from: e[0], to: e[1], cap: cap(&mut rng) });
    }
    for k in 0..rng.random_range(0..=2) {
        let e = distinct(&mut rng, m, 3);
        let rates = RateVector::new()
            .with(&[1], &[1, 2], cap(&mut rng))
            .with(&[1], &[1], cap(&mut rng))
            .with(&[1], &[2], cap(&mut rng));
        let geom = Geometry { n_tx: 1, n_rx: 2, feed_caps: vec![Rate::ZERO] };
        let model = build_model("bc", Side::Lower, &geom, &rates, 0.0).unwrap();
        comps.push(Component::Model { id: format!("b{k}"), model, v1: vec![e[0]], v2: vec![e[1], e[2]] });
    }
    for k in 0..rng.random_range(0..=2) {
        let e = distinct(&mut rng, m, 3);
        let rates = RateVector::new()
            .with(&[1], &[1], cap(&mut rng))
            .with(&[2], &[1], cap(&mut rng))
            .with(&[1, 2], &[1], cap(&mut rng));
        let geom = Geometry { n_tx: 2, n_rx: 1, feed_caps: vec![cap(&mut rng), cap(&mut rng)] };
        let model = build_model("mac", Side::Lower, &geom, &rates, 0.0).unwrap();
        comps.push(Component::Model { id: format!("m{k}"), model, v1: vec![e[0], e[1]], v2: vec![e[2]] });
    }
    Network::new(m, comps, Vec::new()).unwrap()
}

/// Max-flow min cut agrees with exhaustive enumeration for every ordered
/// pair of nodes.
pub fn min_cut_matches_enumeration(net: &Network) -> Result<(), String> {
    for u in 1..=net.nodes {
        for v in 1..=net.nodes {
            if u == v {
                continue;
            }
            let a = min_cut(net, u, v).map_err(|e| e.to_string())?;
            let b = enumerate_min_cut(net, u, v).map_err(|e| e.to_string())?;
            let ok = match (a.value, b.value) {
                (Rate::Finite(x), Rate::Finite(y)) => (x - y).abs() <= 1e-9,
                (x, y) => x == y,
            };
            if !ok {
                return Err(format!("{u}->{v}: max-flow {} vs enumeration {}", a.value, b.value));
            }
            let s = cut_value(net, &a.s).map_err(|e| e.to_string())?.value;
            if s != a.value && (s.to_f64() - a.value.to_f64()).abs() > 1e-9 {
                return Err(format!("{u}->{v}: returned set has value {s}, not {}", a.value));
            }
        }
    }
    Ok(())
}

/// Independent enumeration over internal-node placements of a model's cut
/// value, given which terminals are on the source side.
pub fn brute_local_cut(m: &BitPipeModel, tx_in: &[bool], rx_in: &[bool]) -> Rate {
    let k = m.internal.len();
    (0..1u64 << k)
        .map(|t| {
            let inside = |n: &ModelNode| match *n {
                ModelNode::Tx(i) => tx_in[i],
                ModelNode::Rx(j) => rx_in[j],
                ModelNode::Internal(v) => t >> v & 1 == 1,
            };
            let mut total = Rate::ZERO;
            for e in &m.edges {
                if inside(&e.src) && e.dst.iter().any(|d| !inside(d)) {
                    total = total + e.cap;
                }
            }
            total
        })
        .fold(Rate::Infinite, Rate::min)
}
