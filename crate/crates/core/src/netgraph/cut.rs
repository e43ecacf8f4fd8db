//! Cut values, max-flow min-cut and cut-set checks on deterministic
//! networks.

use std::collections::VecDeque;

use serde::Serialize;

use super::{Component, Network};
use crate::error::{invalid, Error, Result};
use crate::model::ModelNode;
use crate::rate::Rate;

/// Largest node count for exhaustive cut enumeration.
pub const ENUMERATION_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentCut {
    pub component: String,
    pub value: Rate,
    /// Side of each internal node in the minimizing placement (true = in S).
    pub internal: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutReport {
    pub s: Vec<usize>,
    pub value: Rate,
    pub per_component: Vec<ComponentCut>,
}

fn members(in_s: &[bool]) -> Vec<usize> {
    (0..in_s.len()).filter(|&k| in_s[k]).map(|k| k + 1).collect()
}

/// Cut value for a membership vector indexed by node id minus one. With
/// `boundary`, upper-model edges count without their strictness margin.
pub fn cut_value_at(net: &Network, in_s: &[bool], boundary: bool) -> Result<CutReport> {
    if in_s.len() != net.nodes {
        return invalid("membership vector must cover every node");
    }
    let mut per_component = Vec::with_capacity(net.components.len());
    let mut value = Rate::ZERO;
    for c in &net.components {
        let cut = match c {
            Component::Noisy { id, .. } => return Err(Error::NoisyComponent(id.clone())),
            Component::Pipe { from, to, cap } => ComponentCut {
                component: c.id(),
                value: if in_s[from - 1] && !in_s[to - 1] { *cap } else { Rate::ZERO },
                internal: Vec::new(),
            },
            Component::Model { id, model, v1, v2 } => {
                let tx: Vec<bool> = v1.iter().map(|&n| in_s[n - 1]).collect();
                let rx: Vec<bool> = v2.iter().map(|&n| in_s[n - 1]).collect();
                let (v, internal) = model.local_cut(&tx, &rx, boundary);
                ComponentCut {
                    component: id.clone(),
                    value: v,
                    internal,
                }
            }
        };
        value = value + cut.value;
        per_component.push(cut);
    }
    Ok(CutReport {
        s: members(in_s),
        value,
        per_component,
    })
}

/// Cut value of the node set `s` (1-based ids).
pub fn cut_value(net: &Network, s: &[usize]) -> Result<CutReport> {
    let mut in_s = vec![false; net.nodes];
    for &n in s {
        if n == 0 || n > net.nodes {
            return invalid(format!("node {n} outside 1..={}", net.nodes));
        }
        in_s[n - 1] = true;
    }
    cut_value_at(net, &in_s, false)
}

struct FlowGraph {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<f64>,
}

impl FlowGraph {
    fn new(n: usize) -> Self {
        FlowGraph {
            adj: vec![Vec::new(); n],
            to: Vec::new(),
            cap: Vec::new(),
        }
    }

    fn add(&mut self, a: usize, b: usize, c: f64) {
        self.adj[a].push(self.to.len());
        self.to.push(b);
        self.cap.push(c);
        self.adj[b].push(self.to.len());
        self.to.push(a);
        self.cap.push(0.0);
    }

    fn levels(&self, s: usize, eps: f64) -> Vec<i64> {
        let mut level = vec![-1; self.adj.len()];
        level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(a) = q.pop_front() {
            for &e in &self.adj[a] {
                let b = self.to[e];
                if level[b] < 0 && self.cap[e] > eps {
                    level[b] = level[a] + 1;
                    q.push_back(b);
                }
            }
        }
        level
    }

    fn push(&mut self, a: usize, t: usize, f: f64, level: &[i64], it: &mut [usize], eps: f64) -> f64 {
        if a == t {
            return f;
        }
        while it[a] < self.adj[a].len() {
            let e = self.adj[a][it[a]];
            let b = self.to[e];
            if self.cap[e] > eps && level[b] == level[a] + 1 {
                let d = self.push(b, t, f.min(self.cap[e]), level, it, eps);
                if d > 0.0 {
                    self.cap[e] -= d;
                    self.cap[e ^ 1] += d;
                    return d;
                }
            }
            it[a] += 1;
        }
        0.0
    }

    /// Dinic's algorithm. Returns the flow value and the source side of a
    /// minimum cut.
    fn max_flow(&mut self, s: usize, t: usize, eps: f64) -> (f64, Vec<bool>) {
        let mut flow = 0.0;
        loop {
            let level = self.levels(s, eps);
            if level[t] < 0 {
                return (flow, level.iter().map(|&l| l >= 0).collect());
            }
            let mut it = vec![0; self.adj.len()];
            loop {
                let f = self.push(s, t, f64::INFINITY, &level, &mut it, eps);
                if f <= 0.0 {
                    break;
                }
                flow += f;
            }
        }
    }
}

/// Builds the expanded graph: internal nodes become graph nodes and every
/// multi-receiver hyperedge goes through an auxiliary node so its capacity
/// is charged once. Infinite capacities become `sentinel`.
fn expand(net: &Network) -> Result<(FlowGraph, f64)> {
    let mut finite_sum = 0.0;
    let mut n = net.nodes;
    for c in &net.components {
        match c {
            Component::Noisy { id, .. } => return Err(Error::NoisyComponent(id.clone())),
            Component::Pipe { cap, .. } => finite_sum += cap.finite().unwrap_or(0.0),
            Component::Model { model, .. } => {
                n += model.internal.len();
                for e in &model.edges {
                    finite_sum += e.cap.finite().unwrap_or(0.0);
                    if e.dst.len() > 1 {
                        n += 1;
                    }
                }
            }
        }
    }
    let sentinel = finite_sum + 1.0;
    let val = |r: Rate| r.finite().unwrap_or(sentinel);
    let mut g = FlowGraph::new(n);
    let mut next = net.nodes;
    for c in &net.components {
        match c {
            Component::Pipe { from, to, cap } => g.add(from - 1, to - 1, val(*cap)),
            Component::Model { model, v1, v2, .. } => {
                let base = next;
                next += model.internal.len();
                let index = |node: &ModelNode| match *node {
                    ModelNode::Tx(i) => v1[i] - 1,
                    ModelNode::Rx(j) => v2[j] - 1,
                    ModelNode::Internal(v) => base + v,
                };
                for e in &model.edges {
                    let src = index(&e.src);
                    if e.dst.len() == 1 {
                        g.add(src, index(&e.dst[0]), val(e.cap));
                    } else {
                        let aux = next;
                        next += 1;
                        g.add(src, aux, val(e.cap));
                        for d in &e.dst {
                            g.add(aux, index(d), sentinel);
                        }
                    }
                }
            }
            Component::Noisy { .. } => unreachable!("rejected above"),
        }
    }
    Ok((g, sentinel))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinCut {
    pub value: Rate,
    /// Source side of a minimizing cut (1-based node ids).
    pub s: Vec<usize>,
}

/// Minimum over node sets containing `u` and not `v` of the cut value,
/// computed by max-flow on the expanded graph.
pub fn min_cut(net: &Network, u: usize, v: usize) -> Result<MinCut> {
    if u == v {
        return invalid("min_cut endpoints must differ");
    }
    if u == 0 || v == 0 || u > net.nodes || v > net.nodes {
        return invalid("min_cut endpoints outside the network");
    }
    let (mut g, sentinel) = expand(net)?;
    let eps = 1e-14 * sentinel;
    let (f, side) = g.max_flow(u - 1, v - 1, eps);
    let value = if f > sentinel - 0.5 { Rate::Infinite } else { Rate::Finite(f) };
    Ok(MinCut {
        value,
        s: members(&side[..net.nodes]),
    })
}

/// Minimum cut by enumerating every separating node set.
pub fn enumerate_min_cut(net: &Network, u: usize, v: usize) -> Result<MinCut> {
    if u == v {
        return invalid("min_cut endpoints must differ");
    }
    let m = net.nodes;
    if m > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            m,
            cap: ENUMERATION_CAP,
        });
    }
    let mut best: Option<MinCut> = None;
    for mask in 0u64..(1 << m) {
        let in_s: Vec<bool> = (0..m).map(|k| mask >> k & 1 == 1).collect();
        if !in_s[u - 1] || in_s[v - 1] {
            continue;
        }
        let r = cut_value_at(net, &in_s, false)?;
        if best.as_ref().map_or(true, |b| r.value < b.value) {
            best = Some(MinCut { value: r.value, s: r.s });
        }
    }
    Ok(best.expect("at least one separating set"))
}

/// Minimum over sinks of the min-cut from the source.
pub fn multicast_capacity(net: &Network, source: usize, sinks: &[usize]) -> Result<Rate> {
    if sinks.is_empty() {
        return invalid("multicast needs at least one sink");
    }
    if sinks.contains(&source) {
        return invalid("multicast source cannot be a sink");
    }
    let mut best = Rate::Infinite;
    for &t in sinks {
        best = best.min(min_cut(net, source, t)?.value);
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolatedCut {
    pub s: Vec<usize>,
    pub demand: f64,
    pub value: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    pub violated: Vec<ViolatedCut>,
    /// Cut with the least spare capacity among those crossed by a demand.
    pub tightest: Option<ViolatedCut>,
}

/// Checks every cut against the demands that carry a rate. A multicast
/// demand counts once on a cut that separates its source from any sink.
/// This is an outer-bound check only.
pub fn cutset_feasibility(net: &Network) -> Result<Feasibility> {
    let m = net.nodes;
    if m > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            m,
            cap: ENUMERATION_CAP,
        });
    }
    let mut violated = Vec::new();
    let mut tightest: Option<(f64, ViolatedCut)> = None;
    for mask in 1u64..(1 << m) - 1 {
        let in_s: Vec<bool> = (0..m).map(|k| mask >> k & 1 == 1).collect();
        let demand: f64 = net
            .demands
            .iter()
            .filter(|d| in_s[d.source() - 1] && d.sinks().iter().any(|&t| !in_s[t - 1]))
            .filter_map(|d| d.rate())
            .sum();
        if demand <= 0.0 {
            continue;
        }
        let r = cut_value_at(net, &in_s, false)?;
        let spare = r.value.to_f64() - demand;
        let cut = ViolatedCut {
            s: r.s,
            demand,
            value: r.value,
        };
        if tightest.as_ref().map_or(true, |t| spare < t.0) {
            tightest = Some((spare, cut.clone()));
        }
        if spare < -1e-12 {
            violated.push(cut);
        }
    }
    Ok(Feasibility {
        feasible: violated.is_empty(),
        violated,
        tightest: tightest.map(|t| t.1),
    })
}

#[cfg(test)]
mod tests {
    use super::super::{butterfly, Demand};
    use super::*;
    use crate::info::{h2, Channel, Dmc};
    use crate::model::{build_model, Geometry, RateVector, Side};

    fn pipe(from: usize, to: usize, c: f64) -> Component {
        Component::Pipe {
            from,
            to,
            cap: Rate::Finite(c),
        }
    }

    #[test]
    fn path_min_cut_is_bottleneck() {
        let net = Network::new(4, vec![pipe(1, 2, 3.0), pipe(2, 3, 0.7), pipe(3, 4, 2.0)], vec![]).unwrap();
        assert_eq!(min_cut(&net, 1, 4).unwrap().value, Rate::Finite(0.7));
        assert_eq!(min_cut(&net, 4, 1).unwrap().value, Rate::ZERO);
        assert!(min_cut(&net, 2, 2).is_err());
    }

    #[test]
    fn butterfly_values() {
        let net = butterfly(Rate::Finite(1.0));
        assert_eq!(min_cut(&net, 1, 6).unwrap().value, Rate::Finite(2.0));
        assert_eq!(multicast_capacity(&net, 1, &[6, 7]).unwrap(), Rate::Finite(2.0));
        assert_eq!(enumerate_min_cut(&net, 1, 7).unwrap().value, Rate::Finite(2.0));
    }

    #[test]
    fn infinite_pipes_are_symbolic() {
        let net = Network::new(
            3,
            vec![
                Component::Pipe { from: 1, to: 2, cap: Rate::Infinite },
                Component::Pipe { from: 2, to: 3, cap: Rate::Infinite },
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(min_cut(&net, 1, 3).unwrap().value, Rate::Infinite);
        assert_eq!(cut_value(&net, &[1]).unwrap().value, Rate::Infinite);
    }

    #[test]
    fn broadcast_edge_charged_once() {
        let ch = Channel::Discrete(Dmc::bsc_bc(0.1, 0.1, false));
        let m = build_model(
            "bc",
            Side::Lower,
            &Geometry::of(&ch),
            &RateVector::new().with(&[1], &[1, 2], Rate::Finite(0.4)),
            0.0,
        )
        .unwrap();
        let net = Network::new(
            4,
            vec![
                Component::Model {
                    id: "bc".into(),
                    model: m,
                    v1: vec![1],
                    v2: vec![2, 3],
                },
                pipe(2, 4, 1.0),
                pipe(3, 4, 1.0),
            ],
            vec![],
        )
        .unwrap();
        assert_eq!(cut_value(&net, &[1]).unwrap().value, Rate::Finite(0.4));
        assert_eq!(min_cut(&net, 1, 4).unwrap().value, Rate::Finite(0.4));
    }

    #[test]
    fn non_separating_component_contributes_zero() {
        let net = Network::new(2, vec![pipe(1, 2, 1.0)], vec![]).unwrap();
        assert_eq!(cut_value(&net, &[2]).unwrap().value, Rate::ZERO);
        assert_eq!(cut_value(&net, &[1, 2]).unwrap().value, Rate::ZERO);
    }

    #[test]
    fn noisy_network_rejected() {
        let ch = Channel::Discrete(Dmc::bsc(0.1));
        let net = super::super::noisy_butterfly(&ch);
        assert!(matches!(cut_value(&net, &[1]), Err(Error::NoisyComponent(_))));
        assert!(matches!(min_cut(&net, 1, 6), Err(Error::NoisyComponent(_))));
    }

    #[test]
    fn cutset_examples() {
        let mk = |r: f64| {
            Network::new(
                4,
                vec![pipe(1, 3, 1.0), pipe(2, 3, 1.0), pipe(3, 4, 1.0)],
                vec![
                    Demand::Unicast { from: 1, to: 4, rate: Some(r) },
                    Demand::Unicast { from: 2, to: 4, rate: Some(r) },
                ],
            )
            .unwrap()
        };
        let f = cutset_feasibility(&mk(0.4)).unwrap();
        assert!(f.feasible);
        let f = cutset_feasibility(&mk(0.6)).unwrap();
        assert!(!f.feasible);
        assert!(f.violated.iter().any(|c| c.s == vec![1, 2, 3]));
        let single = Network::new(2, vec![pipe(1, 2, 1.0)], vec![Demand::Unicast { from: 1, to: 2, rate: Some(1.5) }]).unwrap();
        assert!(!cutset_feasibility(&single).unwrap().feasible);
    }

    #[test]
    fn butterfly_of_bsc_lower_models() {
        let ch = Dmc::bsc(0.1);
        let c = Channel::Discrete(ch.clone());
        let mut net = super::super::noisy_butterfly(&c);
        let lo = crate::model::lower_model(&c, &crate::capacity::p2p_lower_point(&ch, 1e-12).unwrap()).unwrap();
        for k in 1..=9 {
            net = net.replace(&format!("e{k}"), &lo).unwrap();
        }
        let v = multicast_capacity(&net, 1, &[6, 7]).unwrap().to_f64();
        assert!((v - 2.0 * (1.0 - h2(0.1))).abs() < 1e-9);
    }

    #[test]
    fn too_many_nodes_for_enumeration() {
        let net = Network::new(21, vec![pipe(1, 2, 1.0)], vec![]).unwrap();
        assert!(matches!(cutset_feasibility(&net), Err(Error::EnumerationCap { .. })));
    }
}
