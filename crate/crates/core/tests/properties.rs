mod common;

use common::*;
use netbound::model::{gaussian_mac_gap, upper_model_bc};
use netbound::netgraph::cut_value;
use netbound::{Component, GaussianMac, Network, Rate};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn information_chain_rules(
        shape in prop::collection::vec(2usize..4, 3),
        w in prop::collection::vec(0.001f64..1.0, 27),
    ) {
        chain_rule(&shape, &w)?;
    }

    #[test]
    fn blahut_arimoto_is_monotone_and_certified(ch in p2p(3, 3)) {
        ba_monotone_and_certified(&ch)?;
    }

    #[test]
    fn min_cut_equals_enumeration(seed in any::<u64>()) {
        let net = random_network(seed, 8);
        min_cut_matches_enumeration(&net).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn cut_function_is_submodular(seed in any::<u64>(), a in any::<u16>(), b in any::<u16>()) {
        let net = random_network(seed, 8);
        let m = net.nodes;
        let set = |mask: u16| -> Vec<usize> { (1..=m).filter(|k| mask >> (k - 1) & 1 == 1).collect() };
        let val = |s: &[usize]| cut_value(&net, s).unwrap().value;
        let (sa, sb) = (set(a), set(b));
        let union: Vec<usize> = set(a | b);
        let inter: Vec<usize> = set(a & b);
        let lhs = val(&sa) + val(&sb);
        let rhs = val(&union) + val(&inter);
        prop_assert!(lhs.to_f64() >= rhs.to_f64() - 1e-9, "{lhs} < {rhs}");
    }

    #[test]
    fn cut_values_scale_with_rates(seed in any::<u64>(), scale in 0.0f64..4.0, mask in any::<u16>()) {
        let net = random_network(seed, 8);
        let scaled = Network::new(
            net.nodes,
            net.components
                .iter()
                .map(|c| match c {
                    Component::Pipe { from, to, cap } => Component::Pipe { from: *from, to: *to, cap: cap.scale(scale) },
                    Component::Model { id, model, v1, v2 } => {
                        let mut m = model.clone();
                        for e in &mut m.edges {
                            e.cap = e.cap.scale(scale);
                        }
                        Component::Model { id: id.clone(), model: m, v1: v1.clone(), v2: v2.clone() }
                    }
                    other => other.clone(),
                })
                .collect(),
            vec![],
        )
        .unwrap();
        let s: Vec<usize> = (1..=net.nodes).filter(|k| mask >> (k - 1) & 1 == 1).collect();
        let a = cut_value(&net, &s).unwrap().value.scale(scale);
        let b = cut_value(&scaled, &s).unwrap().value;
        match (a, b) {
            (Rate::Finite(x), Rate::Finite(y)) => prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs())),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn gaussian_mac_gap_below_half_bit(p1 in 1e-3f64..1e3, p2 in 1e-3f64..1e3, n in 1e-3f64..1e3) {
        let g = gaussian_mac_gap(&GaussianMac::new(p1.max(p2), p1.min(p2), n).unwrap());
        prop_assert!((0.0..0.5).contains(&g));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn candidates_are_ordered_and_rho_bounded(ch in binary_channel()) {
        candidate_properties(&ch)?;
    }

    #[test]
    fn broadcast_family_is_nested(w in prop::collection::vec(0.01f64..1.0, 8), extra in 0.0f64..1.0) {
        let ch = channel(netbound::Role::Bc, &[2], &[2, 2], &w);
        let fam = upper_model_bc(&ch, 9, 1e-4).unwrap();
        let lo = fam.minimal();
        let hi = fam.member(fam.min_common_rate() + extra).unwrap();
        let sum = |m: &netbound::BitPipeModel| m.rate(&[1], &[1, 2]).to_f64() + m.rate(&[1], &[1]).to_f64();
        prop_assert!(hi.rate(&[1], &[1, 2]) >= lo.rate(&[1], &[1, 2]));
        prop_assert!(sum(&hi) >= sum(&lo) - 1e-12);
    }
}
