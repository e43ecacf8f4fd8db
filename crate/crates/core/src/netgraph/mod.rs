//! Networks of channels and bit-pipe models, cut values and gap metrics.

mod cut;
mod gap;

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{invalid, Error, Result};
use crate::info::Channel;
use crate::model::BitPipeModel;
use crate::rate::Rate;

pub use cut::{
    cut_value, cut_value_at, cutset_feasibility, enumerate_min_cut, min_cut, multicast_capacity, CutReport,
    ComponentCut, Feasibility, MinCut, ViolatedCut, ENUMERATION_CAP,
};
pub use gap::{
    bounds, candidates, delta, network_gaps, rho, valid_pair, BoundReport, CandidateOptions, Candidates,
    DemandBound, GapReport, RhoEstimate,
};

/// A network element. Node ids are 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Component {
    Noisy {
        id: String,
        channel: Channel,
        v1: Vec<usize>,
        v2: Vec<usize>,
    },
    Model {
        id: String,
        model: BitPipeModel,
        v1: Vec<usize>,
        v2: Vec<usize>,
    },
    Pipe {
        from: usize,
        to: usize,
        cap: Rate,
    },
}

impl Component {
    pub fn id(&self) -> String {
        match self {
            Component::Noisy { id, .. } | Component::Model { id, .. } => id.clone(),
            Component::Pipe { from, to, .. } => format!("pipe {from}->{to}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Demand {
    Unicast {
        from: usize,
        to: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
    },
    Multicast {
        from: usize,
        sinks: Vec<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rate: Option<f64>,
    },
}

impl Demand {
    pub fn source(&self) -> usize {
        match self {
            Demand::Unicast { from, .. } | Demand::Multicast { from, .. } => *from,
        }
    }

    pub fn sinks(&self) -> Vec<usize> {
        match self {
            Demand::Unicast { to, .. } => vec![*to],
            Demand::Multicast { sinks, .. } => sinks.clone(),
        }
    }

    pub fn rate(&self) -> Option<f64> {
        match self {
            Demand::Unicast { rate, .. } | Demand::Multicast { rate, .. } => *rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub nodes: usize,
    pub components: Vec<Component>,
    pub demands: Vec<Demand>,
}

fn check_nodes(m: usize, ids: &[usize], what: &str) -> Result<()> {
    if let Some(n) = ids.iter().find(|&&n| n == 0 || n > m) {
        return invalid(format!("{what} node {n} outside 1..={m}"));
    }
    Ok(())
}

fn check_endpoints(m: usize, id: &str, v1: &[usize], v2: &[usize], arity: (usize, usize)) -> Result<()> {
    check_nodes(m, v1, id)?;
    check_nodes(m, v2, id)?;
    if (v1.len(), v2.len()) != arity {
        return invalid(format!(
            "component `{id}` needs {} transmitters and {} receivers, got {} and {}",
            arity.0,
            arity.1,
            v1.len(),
            v2.len()
        ));
    }
    let mut all: Vec<usize> = v1.iter().chain(v2).copied().collect();
    all.sort_unstable();
    all.dedup();
    if all.len() != v1.len() + v2.len() {
        return invalid(format!("component `{id}` reuses a node among its terminals"));
    }
    Ok(())
}

impl Network {
    pub fn new(nodes: usize, components: Vec<Component>, demands: Vec<Demand>) -> Result<Network> {
        if nodes == 0 {
            return invalid("a network needs at least one node");
        }
        let mut ids = Vec::new();
        for c in &components {
            match c {
                Component::Noisy { id, channel, v1, v2 } => {
                    check_endpoints(nodes, id, v1, v2, channel.arity())?;
                    ids.push(id.clone());
                }
                Component::Model { id, model, v1, v2 } => {
                    check_endpoints(nodes, id, v1, v2, (model.geometry.n_tx, model.geometry.n_rx))?;
                    ids.push(id.clone());
                }
                Component::Pipe { from, to, cap } => {
                    check_nodes(nodes, &[*from, *to], "bit pipe")?;
                    if from == to {
                        return invalid(format!("bit pipe {from}->{to} is a self-loop"));
                    }
                    if cap.to_f64() < 0.0 || cap.to_f64().is_nan() {
                        return invalid("bit-pipe capacities must be nonnegative");
                    }
                }
            }
        }
        let n_ids = ids.len();
        ids.sort();
        ids.dedup();
        if ids.len() != n_ids {
            return invalid("component ids must be unique");
        }
        for d in &demands {
            check_nodes(nodes, &[d.source()], "demand")?;
            let sinks = d.sinks();
            check_nodes(nodes, &sinks, "demand")?;
            if sinks.is_empty() {
                return invalid("a demand needs at least one sink");
            }
            if sinks.contains(&d.source()) {
                return invalid("demand endpoints must be distinct");
            }
            if d.rate().is_some_and(|r| !(r >= 0.0) || !r.is_finite()) {
                return invalid("demand rates must be finite and nonnegative");
            }
        }
        Ok(Network {
            nodes,
            components,
            demands,
        })
    }

    pub fn is_deterministic(&self) -> bool {
        !self.components.iter().any(|c| matches!(c, Component::Noisy { .. }))
    }

    /// Noisy components as `(index, id, channel)`.
    pub fn noisy(&self) -> Vec<(usize, &str, &Channel)> {
        self.components
            .iter()
            .enumerate()
            .filter_map(|(k, c)| match c {
                Component::Noisy { id, channel, .. } => Some((k, id.as_str(), channel)),
                _ => None,
            })
            .collect()
    }

    /// Replaces the noisy component `id` with a bit-pipe model on the same
    /// terminals.
    pub fn replace(&self, id: &str, model: &BitPipeModel) -> Result<Network> {
        let mut out = self.clone();
        let slot = out
            .components
            .iter_mut()
            .find(|c| matches!(c, Component::Noisy { id: i, .. } if i == id))
            .ok_or_else(|| Error::Invalid(format!("no noisy component `{id}`")))?;
        let Component::Noisy { v1, v2, .. } = slot else {
            unreachable!("matched above")
        };
        if (model.geometry.n_tx, model.geometry.n_rx) != (v1.len(), v2.len()) {
            return invalid(format!(
                "model terminals ({}, {}) do not match component `{id}` ({}, {})",
                model.geometry.n_tx,
                model.geometry.n_rx,
                v1.len(),
                v2.len()
            ));
        }
        *slot = Component::Model {
            id: id.to_string(),
            model: model.clone(),
            v1: v1.clone(),
            v2: v2.clone(),
        };
        Ok(out)
    }

    /// Parses the network file format. Channel and model references given as
    /// strings are paths resolved relative to `base`.
    pub fn from_json(v: &Value, base: Option<&Path>) -> Result<Network> {
        let perr = |m: String| Error::Parse(m);
        let nodes = v
            .get("nodes")
            .and_then(Value::as_u64)
            .ok_or_else(|| perr("network is missing integer `nodes`".into()))? as usize;
        let comps = match v.get("components") {
            None => Vec::new(),
            Some(c) => c
                .as_array()
                .ok_or_else(|| perr("`components` must be an array".into()))?
                .clone(),
        };
        let ends = |c: &Value, key: &str| -> Result<Vec<usize>> {
            serde_json::from_value(c.get(key).cloned().unwrap_or(Value::Null))
                .map_err(|e| perr(format!("component `{key}`: {e}")))
        };
        let mut components = Vec::new();
        for (k, c) in comps.iter().enumerate() {
            let id = c
                .get("id")
                .and_then(Value::as_str)
                .map_or_else(|| format!("c{}", k + 1), String::from);
            if let Some(p) = c.get("bitpipe") {
                #[derive(Deserialize)]
                struct Pipe {
                    from: usize,
                    to: usize,
                    cap: Rate,
                }
                let p: Pipe = serde_json::from_value(p.clone()).map_err(|e| perr(format!("bitpipe: {e}")))?;
                components.push(Component::Pipe {
                    from: p.from,
                    to: p.to,
                    cap: p.cap,
                });
            } else if let Some(m) = c.get("model") {
                let model = match m {
                    Value::String(path) => {
                        let p = base.map_or_else(|| Path::new(path).to_path_buf(), |b| b.join(path));
                        let text = std::fs::read_to_string(&p)
                            .map_err(|e| perr(format!("cannot read model `{}`: {e}", p.display())))?;
                        let v: Value = serde_json::from_str(&text)
                            .map_err(|e| perr(format!("model `{}`: {e}", p.display())))?;
                        BitPipeModel::from_json(&v)?
                    }
                    other => BitPipeModel::from_json(other)?,
                };
                components.push(Component::Model {
                    id,
                    model,
                    v1: ends(c, "V1")?,
                    v2: ends(c, "V2")?,
                });
            } else if let Some(r) = c.get("ref") {
                let channel = match r {
                    Value::String(path) => {
                        let p = base.map_or_else(|| Path::new(path).to_path_buf(), |b| b.join(path));
                        let text = std::fs::read_to_string(&p)
                            .map_err(|e| perr(format!("cannot read channel `{}`: {e}", p.display())))?;
                        Channel::parse_str(&text)?
                    }
                    other => Channel::from_json(other)?,
                };
                components.push(Component::Noisy {
                    id,
                    channel,
                    v1: ends(c, "V1")?,
                    v2: ends(c, "V2")?,
                });
            } else {
                return Err(perr(format!("component {} has no `ref`, `model` or `bitpipe`", k + 1)));
            }
        }
        let demands: Vec<Demand> = match v.get("demands") {
            None => Vec::new(),
            Some(d) => serde_json::from_value(d.clone()).map_err(|e| perr(format!("demands: {e}")))?,
        };
        Network::new(nodes, components, demands)
    }

    pub fn to_json(&self) -> Value {
        let comps: Vec<Value> = self
            .components
            .iter()
            .map(|c| match c {
                Component::Noisy { id, channel, v1, v2 } => {
                    json!({"id": id, "ref": channel.to_json(), "V1": v1, "V2": v2})
                }
                Component::Model { id, model, v1, v2 } => {
                    json!({"id": id, "model": model.to_json(), "V1": v1, "V2": v2})
                }
                Component::Pipe { from, to, cap } => json!({"bitpipe": {"from": from, "to": to, "cap": cap}}),
            })
            .collect();
        json!({"nodes": self.nodes, "components": comps, "demands": self.demands})
    }
}

/// Unit-capacity butterfly: source 1, relays 2 and 3, coding edge 4->5,
/// sinks 6 and 7.
pub fn butterfly(cap: Rate) -> Network {
    let edges = [(1, 2), (1, 3), (2, 4), (3, 4), (4, 5), (2, 6), (3, 7), (5, 6), (5, 7)];
    let components = edges
        .iter()
        .map(|&(from, to)| Component::Pipe { from, to, cap })
        .collect();
    Network::new(
        7,
        components,
        vec![Demand::Multicast {
            from: 1,
            sinks: vec![6, 7],
            rate: None,
        }],
    )
    .expect("well-formed")
}

/// The butterfly with every edge replaced by a copy of `channel`.
pub fn noisy_butterfly(channel: &Channel) -> Network {
    let b = butterfly(Rate::Finite(1.0));
    let components = b
        .components
        .iter()
        .enumerate()
        .map(|(k, c)| match c {
            Component::Pipe { from, to, .. } => Component::Noisy {
                id: format!("e{}", k + 1),
                channel: channel.clone(),
                v1: vec![*from],
                v2: vec![*to],
            },
            _ => unreachable!("butterfly has only pipes"),
        })
        .collect();
    Network::new(7, components, b.demands).expect("well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::Dmc;
    use crate::model::{build_model, Geometry, RateVector, Side};

    #[test]
    fn replace_removes_noisy_component() {
        let ch = Channel::Discrete(Dmc::bsc(0.1));
        let net = Network::new(
            2,
            vec![Component::Noisy {
                id: "a".into(),
                channel: ch.clone(),
                v1: vec![1],
                v2: vec![2],
            }],
            vec![],
        )
        .unwrap();
        let m = build_model(
            "a",
            Side::Lower,
            &Geometry::of(&ch),
            &RateVector::new().with(&[1], &[1], Rate::Finite(0.5)),
            0.0,
        )
        .unwrap();
        let out = net.replace("a", &m).unwrap();
        assert!(out.is_deterministic());
        assert!(!net.is_deterministic());
        assert!(net.replace("b", &m).is_err());
    }

    #[test]
    fn replace_all_leaves_deterministic_network() {
        let ch = Channel::Discrete(Dmc::bsc(0.1));
        let mut net = noisy_butterfly(&ch);
        let m = build_model(
            "e",
            Side::Lower,
            &Geometry::of(&ch),
            &RateVector::new().with(&[1], &[1], Rate::Finite(0.5)),
            0.0,
        )
        .unwrap();
        let ids: Vec<String> = net.noisy().iter().map(|n| n.1.to_string()).collect();
        for id in ids {
            net = net.replace(&id, &m).unwrap();
        }
        assert!(net.is_deterministic());
    }

    #[test]
    fn replace_rejects_terminal_mismatch() {
        let ch = Channel::Discrete(Dmc::bsc(0.1));
        let net = noisy_butterfly(&ch);
        let mac = Channel::Discrete(Dmc::adder_mac(0.1));
        let m = build_model(
            "m",
            Side::Lower,
            &Geometry::of(&mac),
            &RateVector::new().with(&[1], &[1], Rate::Finite(0.5)),
            0.0,
        )
        .unwrap();
        assert!(net.replace("e1", &m).is_err());
    }

    #[test]
    fn network_validation() {
        let ch = Channel::Discrete(Dmc::adder_mac(0.1));
        let bad = Network::new(
            3,
            vec![Component::Noisy {
                id: "m".into(),
                channel: ch.clone(),
                v1: vec![1, 3],
                v2: vec![3],
            }],
            vec![],
        );
        assert!(bad.is_err());
        let bad = Network::new(2, vec![], vec![Demand::Unicast { from: 1, to: 1, rate: None }]);
        assert!(bad.is_err());
        let bad = Network::new(2, vec![Component::Pipe { from: 1, to: 3, cap: Rate::ZERO }], vec![]);
        assert!(bad.is_err());
    }

    #[test]
    fn json_round_trip() {
        let ch = Channel::Discrete(Dmc::bsc(0.1));
        let net = noisy_butterfly(&ch);
        let back = Network::from_json(&net.to_json(), None).unwrap();
        assert_eq!(back, net);
        let text = r#"{"nodes": 2, "components": [{"bitpipe": {"from": 1, "to": 2, "cap": "inf"}}],
                       "demands": [{"type": "unicast", "from": 1, "to": 2, "rate": 0.5}]}"#;
        let net = Network::from_json(&serde_json::from_str(text).unwrap(), None).unwrap();
        assert_eq!(net.components[0], Component::Pipe { from: 1, to: 2, cap: Rate::Infinite });
    }
}
