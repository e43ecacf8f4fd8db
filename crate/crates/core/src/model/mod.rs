//! Lower and upper bounding bit-pipe models for single channels.

mod check;
mod gaussian;
pub mod mac;
pub mod ic;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::capacity::{blahut_arimoto, RegionPoint, Witness};
use crate::error::{invalid, Error, Result};
use crate::grid::simplex_grid;
use crate::info::{Channel, Dmc, GaussianChannelSpec, Role};
use crate::rate::Rate;
use crate::rng::DEFAULT_SEED;

pub use check::{check_upper_conditions, InequalityMargin, MarginReport};
pub use gaussian::{
    gaussian_bc_common_gap, gaussian_bc_models, gaussian_mac_candidates, gaussian_mac_gap,
    gaussian_mac_models,
};
pub use ic::{upper_model_ic, IcUpper, IcVariant};
pub use mac::{upper_model_mac, upper_model_mac_oriented, MacUpper, MacUpperSolver};

pub const DEFAULT_SLACK: f64 = 1e-4;
pub const DEFAULT_GRID: usize = 33;

/// A transmitter set `A` and receiver set `B`, both as sorted 1-based
/// positions within the channel's terminal lists.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EdgeKey {
    #[serde(rename = "A")]
    pub a: Vec<usize>,
    #[serde(rename = "B")]
    pub b: Vec<usize>,
}

impl EdgeKey {
    pub fn new(a: &[usize], b: &[usize]) -> EdgeKey {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort_unstable();
        a.dedup();
        b.sort_unstable();
        b.dedup();
        EdgeKey { a, b }
    }

    fn validate(&self, n_tx: usize, n_rx: usize) -> Result<()> {
        if self.a.is_empty() || self.b.is_empty() {
            return invalid(format!("edge key {self} has an empty side"));
        }
        if self.a.iter().any(|&i| i == 0 || i > n_tx) || self.b.iter().any(|&j| j == 0 || j > n_rx) {
            return invalid(format!(
                "edge key {self} lies outside a channel with {n_tx} transmitters and {n_rx} receivers"
            ));
        }
        Ok(())
    }
}

impl std::fmt::Display for EdgeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let side = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        write!(f, "{{{}}}->{{{}}}", side(&self.a), side(&self.b))
    }
}

/// Bit-pipe rates indexed by edge key. Absent keys carry rate zero.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateVector {
    entries: BTreeMap<EdgeKey, Rate>,
}

impl RateVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, a: &[usize], b: &[usize], rate: Rate) -> Self {
        self.set(EdgeKey::new(a, b), rate).expect("valid rate");
        self
    }

    pub fn set(&mut self, key: EdgeKey, rate: Rate) -> Result<()> {
        if let Rate::Finite(v) = rate {
            if !v.is_finite() || v < 0.0 {
                return invalid(format!("rate {v} on {key} is negative or not finite"));
            }
        }
        self.entries.insert(key, rate);
        Ok(())
    }

    pub fn get(&self, key: &EdgeKey) -> Rate {
        self.entries.get(key).copied().unwrap_or(Rate::ZERO)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EdgeKey, &Rate)> {
        self.entries.iter()
    }

    pub fn nonzero(&self) -> impl Iterator<Item = (&EdgeKey, &Rate)> {
        self.entries.iter().filter(|(_, r)| !r.is_zero())
    }
}

/// Terminal counts and the capacity of the feed edges from each transmitter
/// into internal nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub n_tx: usize,
    pub n_rx: usize,
    pub feed_caps: Vec<Rate>,
}

impl Geometry {
    pub fn of(channel: &Channel) -> Geometry {
        match channel {
            Channel::Discrete(d) => Geometry {
                n_tx: d.inputs().len(),
                n_rx: d.outputs().len(),
                feed_caps: d
                    .input_sizes()
                    .iter()
                    .map(|&n| Rate::Finite((n as f64).log2()))
                    .collect(),
            },
            Channel::Gaussian(_) => {
                let (n_tx, n_rx) = channel.arity();
                Geometry {
                    n_tx,
                    n_rx,
                    feed_caps: vec![Rate::Infinite; n_tx],
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelNode {
    Tx(usize),
    Rx(usize),
    Internal(usize),
}

/// Identity of a model edge, used to compare models edge by edge.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EdgeId {
    Hyper(EdgeKey),
    Feed { tx: usize, set: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEdge {
    pub id: EdgeId,
    pub src: ModelNode,
    pub dst: Vec<ModelNode>,
    pub cap: Rate,
    /// Strictness margin included in `cap`; `cap - slack` is the boundary
    /// value of the open family the edge belongs to.
    pub slack: f64,
}

impl ModelEdge {
    pub fn boundary(&self) -> Rate {
        match self.cap {
            Rate::Finite(v) => Rate::Finite((v - self.slack).max(0.0)),
            Rate::Infinite => Rate::Infinite,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Lower,
    Upper,
}

/// The bit-pipe model C(R): one broadcast edge per nonzero rate, internal
/// nodes `v^A` for multi-transmitter sets, and feed edges into them.
#[derive(Debug, Clone, PartialEq)]
pub struct BitPipeModel {
    pub channel_id: String,
    pub side: Side,
    pub geometry: Geometry,
    pub rates: RateVector,
    pub slack: f64,
    pub internal: Vec<Vec<usize>>,
    pub edges: Vec<ModelEdge>,
    pub notes: Vec<String>,
}

/// Builds the graph for a rate vector. Zero-rate hyperedges are dropped;
/// internal nodes are ordered by their sorted transmitter sets.
pub fn build_model(
    channel_id: &str,
    side: Side,
    geometry: &Geometry,
    rates: &RateVector,
    slack: f64,
) -> Result<BitPipeModel> {
    if geometry.feed_caps.len() != geometry.n_tx {
        return invalid("one feed capacity per transmitter required");
    }
    if !(slack >= 0.0) || (side == Side::Upper && slack <= 0.0) {
        return invalid(format!("upper models need a positive slack, got {slack}"));
    }
    for (k, _) in rates.iter() {
        k.validate(geometry.n_tx, geometry.n_rx)?;
    }
    let mut internal: Vec<Vec<usize>> = rates
        .nonzero()
        .filter(|(k, _)| k.a.len() > 1)
        .map(|(k, _)| k.a.clone())
        .collect();
    internal.sort();
    internal.dedup();
    let mut edges = Vec::new();
    for (k, r) in rates.nonzero() {
        let src = if k.a.len() == 1 {
            ModelNode::Tx(k.a[0] - 1)
        } else {
            ModelNode::Internal(internal.binary_search(&k.a).expect("collected above"))
        };
        edges.push(ModelEdge {
            id: EdgeId::Hyper(k.clone()),
            src,
            dst: k.b.iter().map(|&j| ModelNode::Rx(j - 1)).collect(),
            cap: *r,
            slack: if r.is_infinite() { 0.0 } else { slack },
        });
    }
    for (v, set) in internal.iter().enumerate() {
        for &i in set {
            edges.push(ModelEdge {
                id: EdgeId::Feed {
                    tx: i,
                    set: set.clone(),
                },
                src: ModelNode::Tx(i - 1),
                dst: vec![ModelNode::Internal(v)],
                cap: geometry.feed_caps[i - 1],
                slack: 0.0,
            });
        }
    }
    Ok(BitPipeModel {
        channel_id: channel_id.to_string(),
        side,
        geometry: geometry.clone(),
        rates: rates.clone(),
        slack,
        internal,
        edges,
        notes: Vec::new(),
    })
}

impl BitPipeModel {
    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }

    /// Overrides the strictness margin of one hyperedge.
    pub fn set_edge_slack(&mut self, key: &EdgeKey, slack: f64) {
        for e in &mut self.edges {
            if matches!(&e.id, EdgeId::Hyper(k) if k == key) && !e.cap.is_infinite() {
                e.slack = slack.max(0.0);
            }
        }
    }

    /// The same model with every edge at its boundary value and no slack.
    pub fn at_boundary(&self) -> BitPipeModel {
        let mut m = self.clone();
        for e in &mut m.edges {
            e.cap = e.boundary();
            e.slack = 0.0;
            if let EdgeId::Hyper(k) = &e.id {
                m.rates
                    .set(k.clone(), e.cap)
                    .expect("boundary values are valid rates");
            }
        }
        m.slack = 0.0;
        m
    }

    /// Slack of the hyperedge for `key`, if the model has one.
    pub fn edge_slack(&self, key: &EdgeKey) -> Option<f64> {
        self.edges.iter().find_map(|e| match &e.id {
            EdgeId::Hyper(k) if k == key => Some(e.slack),
            _ => None,
        })
    }

    pub fn rate(&self, a: &[usize], b: &[usize]) -> Rate {
        self.rates.get(&EdgeKey::new(a, b))
    }

    /// Edge capacities keyed by edge identity, at the family boundary when
    /// `boundary` is set.
    pub fn edge_map(&self, boundary: bool) -> BTreeMap<EdgeId, Rate> {
        self.edges
            .iter()
            .map(|e| (e.id.clone(), if boundary { e.boundary() } else { e.cap }))
            .collect()
    }

    /// Cut value of the model alone for a placement of its terminals, with
    /// internal nodes placed to minimize the value. Returns the value and the
    /// minimizing placement of internal nodes (true = source side).
    pub fn local_cut(&self, tx_in: &[bool], rx_in: &[bool], boundary: bool) -> (Rate, Vec<bool>) {
        let k = self.internal.len();
        let side = |n: &ModelNode, t: u64| match *n {
            ModelNode::Tx(i) => tx_in[i],
            ModelNode::Rx(j) => rx_in[j],
            ModelNode::Internal(v) => t >> v & 1 == 1,
        };
        let mut best: Option<(Rate, u64)> = None;
        for t in 0..(1u64 << k) {
            let v: Rate = self
                .edges
                .iter()
                .filter(|e| side(&e.src, t) && e.dst.iter().any(|d| !side(d, t)))
                .map(|e| if boundary { e.boundary() } else { e.cap })
                .sum();
            if best.map_or(true, |(b, _)| v < b) {
                best = Some((v, t));
            }
        }
        let (v, t) = best.expect("at least one placement");
        (v, (0..k).map(|i| t >> i & 1 == 1).collect())
    }

    pub fn to_json(&self) -> Value {
        let rates: Vec<Value> = self
            .rates
            .iter()
            .map(|(k, r)| match self.edge_slack(k) {
                Some(sl) if sl != self.slack => json!({"A": k.a, "B": k.b, "rate": r, "slack": sl}),
                _ => json!({"A": k.a, "B": k.b, "rate": r}),
            })
            .collect();
        json!({
            "channel": self.channel_id,
            "side": self.side,
            "terminals": {"tx": self.geometry.n_tx, "rx": self.geometry.n_rx},
            "feed_caps": self.geometry.feed_caps,
            "slack": self.slack,
            "rates": rates,
            "notes": self.notes,
        })
    }

    pub fn from_json(v: &Value) -> Result<BitPipeModel> {
        let parse = |e: serde_json::Error| Error::Parse(format!("model: {e}"));
        let channel_id = v
            .get("channel")
            .and_then(Value::as_str)
            .unwrap_or("model")
            .to_string();
        let side: Side = serde_json::from_value(
            v.get("side")
                .cloned()
                .ok_or_else(|| Error::Parse("model is missing `side`".into()))?,
        )
        .map_err(parse)?;
        #[derive(Deserialize)]
        struct Entry {
            #[serde(rename = "A")]
            a: Vec<usize>,
            #[serde(rename = "B")]
            b: Vec<usize>,
            rate: Rate,
            slack: Option<f64>,
        }
        let entries: Vec<Entry> = serde_json::from_value(
            v.get("rates")
                .cloned()
                .ok_or_else(|| Error::Parse("model is missing `rates`".into()))?,
        )
        .map_err(parse)?;
        let max_a = entries.iter().flat_map(|e| e.a.iter()).copied().max().unwrap_or(1);
        let max_b = entries.iter().flat_map(|e| e.b.iter()).copied().max().unwrap_or(1);
        let n_tx = v
            .pointer("/terminals/tx")
            .and_then(Value::as_u64)
            .map_or(max_a, |n| n as usize);
        let n_rx = v
            .pointer("/terminals/rx")
            .and_then(Value::as_u64)
            .map_or(max_b, |n| n as usize);
        let feed_caps: Vec<Rate> = match v.get("feed_caps") {
            Some(f) => serde_json::from_value(f.clone()).map_err(parse)?,
            None => {
                if entries.iter().any(|e| e.a.len() > 1 && !matches!(e.rate, Rate::Finite(x) if x == 0.0)) {
                    return Err(Error::Parse(
                        "model with multi-transmitter rates needs `feed_caps`".into(),
                    ));
                }
                vec![Rate::ZERO; n_tx]
            }
        };
        let slack = v.get("slack").and_then(Value::as_f64).unwrap_or(match side {
            Side::Lower => 0.0,
            Side::Upper => DEFAULT_SLACK,
        });
        let mut rates = RateVector::new();
        let mut edge_slacks = Vec::new();
        for e in entries {
            let key = EdgeKey::new(&e.a, &e.b);
            if let Some(sl) = e.slack {
                if !(sl >= 0.0) {
                    return Err(Error::Parse(format!("negative slack on {key}")));
                }
                edge_slacks.push((key.clone(), sl));
            }
            rates.set(key, e.rate)?;
        }
        let geometry = Geometry {
            n_tx,
            n_rx,
            feed_caps,
        };
        let mut m = build_model(&channel_id, side, &geometry, &rates, slack)
            .map_err(|e| Error::Parse(e.to_string()))?;
        for (k, sl) in &edge_slacks {
            m.set_edge_slack(k, *sl);
        }
        if let Some(notes) = v.get("notes").and_then(Value::as_array) {
            m.notes = notes
                .iter()
                .filter_map(|n| n.as_str().map(String::from))
                .collect();
        }
        Ok(m)
    }
}

/// A lower and an upper model for the same channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelPair {
    pub lower: BitPipeModel,
    pub upper: BitPipeModel,
    pub slack: f64,
    pub notes: Vec<String>,
}

impl ModelPair {
    /// Pairs two models, rejecting the pair when any rate present in both
    /// is larger on the lower side.
    pub fn new(lower: BitPipeModel, upper: BitPipeModel) -> Result<ModelPair> {
        if upper.slack <= 0.0 {
            return invalid("upper model must carry a positive slack");
        }
        for (k, rl) in lower.rates.nonzero() {
            let ru = upper.rates.get(k);
            if !ru.is_zero() && ru < *rl {
                return invalid(format!("upper rate {ru} below lower rate {rl} on {k}"));
            }
        }
        Ok(ModelPair {
            slack: upper.slack,
            lower,
            upper,
            notes: Vec::new(),
        })
    }
}

fn point_rates(channel: &Channel, point: &RegionPoint) -> Result<RateVector> {
    let r = &point.rates;
    let f = |v: f64| Rate::Finite(v.max(0.0));
    let rates = match (&point.witness, channel) {
        (Witness::P2pInput { .. }, _) => RateVector::new().with(&[1], &[1], f(r[0])),
        (Witness::MacTimeSharing { .. }, _) | (Witness::GaussianMacCorner { .. }, _) => {
            RateVector::new().with(&[1], &[1], f(r[0])).with(&[2], &[1], f(r[1]))
        }
        (Witness::Superposition { .. }, _) => {
            RateVector::new().with(&[1], &[1, 2], f(r[0])).with(&[1], &[1], f(r[1]))
        }
        (Witness::GaussianBc { .. }, _) => {
            RateVector::new().with(&[1], &[1], f(r[0])).with(&[1], &[1, 2], f(r[1]))
        }
    };
    Ok(rates)
}

fn discrete(channel: &Channel) -> Option<&Dmc> {
    match channel {
        Channel::Discrete(d) => Some(d),
        Channel::Gaussian(_) => None,
    }
}

/// Lower bounding model from a certified achievable point. Only
/// single-transmitter rates appear.
pub fn lower_model(channel: &Channel, point: &RegionPoint) -> Result<BitPipeModel> {
    point.certify(discrete(channel))?;
    let rates = point_rates(channel, point)?;
    lower_model_from_rates(channel, &rates)
}

/// Lower bounding model from a rate vector already known to be achievable.
pub fn lower_model_from_rates(channel: &Channel, rates: &RateVector) -> Result<BitPipeModel> {
    if let Some((k, _)) = rates.nonzero().find(|(k, _)| k.a.len() > 1) {
        return invalid(format!(
            "lower models carry only single-transmitter rates, got nonzero {k}"
        ));
    }
    build_model(&channel.name(), Side::Lower, &Geometry::of(channel), rates, 0.0)
}

/// Lower model for a two-transmitter channel in which the achievable pair
/// `(R1, R2)` is carried by one merged edge of rate `R1 + R2` fed at `R1` and
/// `R2`. Its cut values equal those of the two separate edges.
pub fn lower_model_merged(channel: &Channel, point: &RegionPoint) -> Result<BitPipeModel> {
    point.certify(discrete(channel))?;
    let (n_tx, n_rx) = channel.arity();
    if n_tx != 2 || n_rx != 1 {
        return invalid("merged lower models apply to two-transmitter, one-receiver channels");
    }
    let (r1, r2) = (point.rates[0].max(0.0), point.rates[1].max(0.0));
    let geometry = Geometry {
        n_tx,
        n_rx,
        feed_caps: vec![Rate::Finite(r1), Rate::Finite(r2)],
    };
    let rates = RateVector::new().with(&[1, 2], &[1], Rate::Finite(r1 + r2));
    Ok(build_model(&channel.name(), Side::Lower, &geometry, &rates, 0.0)?
        .with_note("merged realization of a single-transmitter rate pair"))
}

/// Upper model for a point-to-point channel: one edge at capacity plus
/// `delta`. The capacity's upper bracket is used so the edge strictly
/// exceeds the true capacity.
pub fn upper_model_p2p(ch: &Dmc, delta: f64, tol: f64) -> Result<BitPipeModel> {
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let r = blahut_arimoto(ch, tol)?;
    let rates = RateVector::new().with(&[1], &[1], Rate::Finite(r.upper_bracket + delta));
    build_model(
        &ch.name,
        Side::Upper,
        &Geometry::of(&Channel::Discrete(ch.clone())),
        &rates,
        delta,
    )
}

/// Grid maxima behind the broadcast upper family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcUpperFamily {
    pub channel_id: String,
    /// max over the grid of I(X;Y2).
    pub c2: f64,
    /// max over the grid of I(X;Y1,Y2).
    pub c12: f64,
    pub delta: f64,
    pub grid: usize,
    #[serde(skip)]
    geometry: Geometry,
}

impl BcUpperFamily {
    pub fn min_common_rate(&self) -> f64 {
        self.c2 + self.delta
    }

    /// The family member with common rate `r0`.
    pub fn member(&self, r0: f64) -> Result<BitPipeModel> {
        if r0 < self.min_common_rate() {
            return invalid(format!(
                "common rate {r0} is below the family minimum {}",
                self.min_common_rate()
            ));
        }
        let r1 = (self.c12 - r0).max(0.0) + self.delta;
        let rates = RateVector::new()
            .with(&[1], &[1, 2], Rate::Finite(r0))
            .with(&[1], &[1], Rate::Finite(r1));
        let mut m = build_model(&self.channel_id, Side::Upper, &self.geometry, &rates, self.delta)?
            .with_note("certified-feasible rate vector; not claimed minimal");
        // Boundary of the family: the common edge gives up its margin only at
        // the minimum, and the private edge meets the sum condition exactly.
        let b0 = if r0 <= self.min_common_rate() { self.c2 } else { r0 };
        let b1 = (self.c12 - b0).max(0.0);
        m.set_edge_slack(&EdgeKey::new(&[1], &[1, 2]), r0 - b0);
        m.set_edge_slack(&EdgeKey::new(&[1], &[1]), r1 - b1);
        Ok(m)
    }

    pub fn minimal(&self) -> BitPipeModel {
        self.member(self.min_common_rate()).expect("minimum is a member")
    }

    /// `count` members with common rates evenly spaced from the minimum to
    /// the point where the private rate reaches `delta`.
    pub fn members(&self, count: usize) -> Vec<BitPipeModel> {
        let lo = self.min_common_rate();
        let hi = self.c12.max(lo);
        (0..count.max(1))
            .map(|k| {
                let t = if count <= 1 { 0.0 } else { k as f64 / (count - 1) as f64 };
                self.member(lo + t * (hi - lo)).expect("within family")
            })
            .collect()
    }
}

/// I(X;Y2) and I(X;Y1,Y2) at every point of an input grid.
pub(crate) fn bc_informations(ch: &Dmc, res: usize) -> Vec<(Vec<f64>, f64, f64)> {
    let y2 = ch.output_component(1);
    simplex_grid(ch.n_in(), res)
        .into_par_iter()
        .map(|p| {
            let i2 = y2.mutual_information(&p);
            let i12 = ch.mutual_information(&p);
            (p, i2, i12)
        })
        .collect()
}

/// Upper family for a two-receiver broadcast channel. Rates satisfy
/// `R0 >= max I(X;Y2) + delta` and `R0 + R1 >= max I(X;Y1,Y2) + delta` with
/// maxima over the input grid. The single-receiver edge to receiver 2 is 0.
pub fn upper_model_bc(ch: &Dmc, res: usize, delta: f64) -> Result<BcUpperFamily> {
    if ch.role() != Role::Bc {
        return invalid("upper_model_bc requires a BC channel");
    }
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let info = bc_informations(ch, res);
    let c2 = info.iter().map(|t| t.1).fold(0.0, f64::max);
    let c12 = info.iter().map(|t| t.2).fold(0.0, f64::max);
    Ok(BcUpperFamily {
        channel_id: ch.name.clone(),
        c2,
        c12,
        delta,
        grid: res,
        geometry: Geometry::of(&Channel::Discrete(ch.clone())),
    })
}

/// Settings for auxiliary-variable searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxSearch {
    pub starts: usize,
    pub seed: u64,
}

impl Default for AuxSearch {
    fn default() -> Self {
        AuxSearch {
            starts: 16,
            seed: DEFAULT_SEED,
        }
    }
}

/// Channel-level dispatcher used by reports: the default upper model.
pub fn default_upper_model(
    channel: &Channel,
    res: usize,
    aux: &AuxSearch,
    delta: f64,
    tol: f64,
) -> Result<BitPipeModel> {
    match channel {
        Channel::Discrete(d) => match d.role() {
            Role::P2p => upper_model_p2p(d, delta, tol),
            Role::Bc => Ok(upper_model_bc(d, res, delta)?.minimal()),
            Role::Mac => Ok(upper_model_mac(d, 0.0, res, aux, delta)?.model),
            Role::Ic => Ok(upper_model_ic(d, IcVariant::One, res, aux, delta)?.model),
        },
        Channel::Gaussian(GaussianChannelSpec::Bc(s)) => Ok(gaussian_bc_models(s, delta)?.upper),
        Channel::Gaussian(GaussianChannelSpec::Mac(s)) => Ok(gaussian_mac_models(s, delta)?.upper),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity::{degraded_bc_lower_points, mac_lower_points, p2p_lower_point, SuperpositionAux};
    use crate::info::{h2, star};

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn geom(n_tx: usize, n_rx: usize) -> Geometry {
        Geometry {
            n_tx,
            n_rx,
            feed_caps: vec![Rate::Finite(1.0); n_tx],
        }
    }

    #[test]
    fn p2p_model_is_a_single_edge() {
        let m = build_model(
            "c",
            Side::Lower,
            &geom(1, 1),
            &RateVector::new().with(&[1], &[1], Rate::Finite(0.5)),
            0.0,
        )
        .unwrap();
        assert!(m.internal.is_empty());
        assert_eq!(m.edges.len(), 1);
        assert_eq!(m.edges[0].src, ModelNode::Tx(0));
        assert_eq!(m.edges[0].dst, vec![ModelNode::Rx(0)]);
    }

    #[test]
    fn merged_mac_edge_adds_one_internal_node() {
        let m = build_model(
            "c",
            Side::Upper,
            &geom(2, 1),
            &RateVector::new()
                .with(&[1, 2], &[1], Rate::Finite(0.7))
                .with(&[1], &[1], Rate::ZERO),
            1e-3,
        )
        .unwrap();
        assert_eq!(m.internal, vec![vec![1, 2]]);
        assert_eq!(m.edges.len(), 3);
        let feeds: Vec<_> = m
            .edges
            .iter()
            .filter(|e| matches!(e.id, EdgeId::Feed { .. }))
            .collect();
        assert_eq!(feeds.len(), 2);
        assert!(feeds.iter().all(|e| e.cap == Rate::Finite(1.0)));
    }

    #[test]
    fn broadcast_edge_reaches_both_receivers() {
        let m = build_model(
            "c",
            Side::Lower,
            &geom(1, 2),
            &RateVector::new().with(&[1], &[1, 2], Rate::Finite(0.3)),
            0.0,
        )
        .unwrap();
        assert_eq!(m.edges.len(), 1);
        assert_eq!(m.edges[0].dst, vec![ModelNode::Rx(0), ModelNode::Rx(1)]);
    }

    #[test]
    fn keys_outside_the_channel_rejected() {
        let r = RateVector::new().with(&[3], &[1], Rate::Finite(0.3));
        assert!(build_model("c", Side::Lower, &geom(2, 1), &r, 0.0).is_err());
    }

    #[test]
    fn lower_models_reject_multi_transmitter_rates() {
        let ch = Channel::Discrete(Dmc::adder_mac(0.1));
        let r = RateVector::new().with(&[1, 2], &[1], Rate::Finite(0.3));
        assert!(lower_model_from_rates(&ch, &r).is_err());
    }

    #[test]
    fn p2p_lower_is_capacity() {
        let d = Dmc::bsc(0.1);
        let ch = Channel::Discrete(d.clone());
        let m = lower_model(&ch, &p2p_lower_point(&d, 1e-10).unwrap()).unwrap();
        close(m.rate(&[1], &[1]).to_f64(), 1.0 - h2(0.1), 1e-9);
    }

    #[test]
    fn adder_mac_lower_split() {
        let d = Dmc::adder_mac(0.1);
        let ch = Channel::Discrete(d.clone());
        let pts = mac_lower_points(&d, &[0.25], 3).unwrap();
        let c = 1.0 - h2(0.1);
        let p = pts
            .iter()
            .find(|p| (p.rates[0] + p.rates[1] - c).abs() < 1e-12 && (p.rates[0] - 0.25 * c).abs() < 1e-12)
            .unwrap();
        let m = lower_model(&ch, p).unwrap();
        close(m.rate(&[1], &[1]).to_f64(), 0.25 * c, 1e-12);
        close(m.rate(&[2], &[1]).to_f64(), 0.75 * c, 1e-12);
    }

    #[test]
    fn bsc_bc_lower_matches_closed_form() {
        let (p1, p2) = (0.1, 0.1);
        let d = Dmc::bsc_bc(p1, p2, false);
        let ch = Channel::Discrete(d.clone());
        let a = star(p1, p2).unwrap();
        let pt = degraded_bc_lower_points(&d, &[SuperpositionAux::binary_symmetric(a)])
            .unwrap()
            .remove(0);
        let m = lower_model(&ch, &pt).unwrap();
        let chain = star(star(a, p1).unwrap(), p2).unwrap();
        close(m.rate(&[1], &[1, 2]).to_f64(), 1.0 - h2(chain), 1e-12);
        close(
            m.rate(&[1], &[1]).to_f64(),
            h2(star(p1, a).unwrap()) - h2(p1),
            1e-12,
        );
    }

    #[test]
    fn upper_p2p_examples() {
        let m = upper_model_p2p(&Dmc::bsc(0.1), 1e-6, 1e-12).unwrap();
        close(m.rate(&[1], &[1]).to_f64(), 1.0 - h2(0.1) + 1e-6, 1e-11);
        let m = upper_model_p2p(&Dmc::noiseless(2), 0.01, 1e-12).unwrap();
        close(m.rate(&[1], &[1]).to_f64(), 1.01, 1e-12);
        let m = upper_model_p2p(&Dmc::bsc(0.5), 0.01, 1e-12).unwrap();
        close(m.rate(&[1], &[1]).to_f64(), 0.01, 1e-12);
        assert!(upper_model_p2p(&Dmc::bsc(0.1), 0.0, 1e-9).is_err());
    }

    #[test]
    fn upper_bc_examples() {
        // Receiver 2 sees pure noise.
        let d = Dmc::bsc_bc(0.1, 0.5, false);
        let f = upper_model_bc(&d, 33, 1e-4).unwrap();
        close(f.c2, 0.0, 1e-12);
        close(f.c12, 1.0 - h2(0.1), 1e-12);
        let m = f.minimal();
        close(m.rate(&[1], &[1, 2]).to_f64(), 1e-4, 1e-15);
        close(m.rate(&[1], &[1]).to_f64(), f.c12, 1e-3);

        let (p1, p2) = (0.1, 0.2);
        let f = upper_model_bc(&Dmc::bsc_bc(p1, p2, true), 33, 1e-9).unwrap();
        let m = f.minimal();
        let q = star(p1, p2).unwrap();
        close(m.rate(&[1], &[1, 2]).to_f64(), 1.0 - h2(q), 1e-8);
        close(m.rate(&[1], &[1]).to_f64(), h2(q) - h2(p1), 1e-8);

        let f = upper_model_bc(&Dmc::bsc_bc(p1, p2, false), 33, 1e-9).unwrap();
        let m = f.minimal();
        let chain = star(p1, q).unwrap();
        close(m.rate(&[1], &[1]).to_f64(), h2(chain) - h2(p1), 1e-8);
        assert_eq!(f.members(4).len(), 4);
        assert!(f.member(f.c2).is_err());
    }

    #[test]
    fn model_json_round_trip() {
        let m = build_model(
            "c",
            Side::Upper,
            &Geometry {
                n_tx: 2,
                n_rx: 1,
                feed_caps: vec![Rate::Infinite, Rate::Finite(1.0)],
            },
            &RateVector::new()
                .with(&[1, 2], &[1], Rate::Finite(0.1 + 0.2))
                .with(&[1], &[1], Rate::Infinite),
            1e-4,
        )
        .unwrap()
        .with_note("n");
        let text = m.to_json().to_string();
        let back = BitPipeModel::from_json(&serde_json::from_str(&text).unwrap()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn bc_minimal_member_boundary_survives_round_trip() {
        let fam = upper_model_bc(&Dmc::bsc_bc(0.1, 0.1, false), 9, 1e-4).unwrap();
        let m = fam.minimal();
        let b = m.edge_map(true);
        let common = b[&EdgeId::Hyper(EdgeKey::new(&[1], &[1, 2]))].to_f64();
        let private = b[&EdgeId::Hyper(EdgeKey::new(&[1], &[1]))].to_f64();
        close(common, fam.c2, 1e-12);
        close(common + private, fam.c12, 1e-12);
        let back = BitPipeModel::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn pair_rejects_inverted_rates() {
        let g = geom(1, 1);
        let lo = build_model("c", Side::Lower, &g, &RateVector::new().with(&[1], &[1], Rate::Finite(0.6)), 0.0).unwrap();
        let hi = build_model("c", Side::Upper, &g, &RateVector::new().with(&[1], &[1], Rate::Finite(0.5)), 1e-4).unwrap();
        assert!(ModelPair::new(lo.clone(), hi).is_err());
        let hi = build_model("c", Side::Upper, &g, &RateVector::new().with(&[1], &[1], Rate::Finite(0.7)), 1e-4).unwrap();
        assert!(ModelPair::new(lo, hi).is_ok());
    }

    #[test]
    fn local_cut_minimizes_internal_placement() {
        let m = build_model(
            "c",
            Side::Upper,
            &Geometry {
                n_tx: 2,
                n_rx: 1,
                feed_caps: vec![Rate::Finite(1.0), Rate::Finite(1.0)],
            },
            &RateVector::new()
                .with(&[1], &[1], Rate::Finite(0.2))
                .with(&[1, 2], &[1], Rate::Finite(0.5)),
            1e-9,
        )
        .unwrap();
        let (v, t) = m.local_cut(&[true, false], &[false], false);
        close(v.to_f64(), 0.7, 1e-12);
        assert_eq!(t, vec![true]);
        let (v, _) = m.local_cut(&[false, false], &[false], false);
        assert!(v.is_zero());
        let (v, _) = m.local_cut(&[true, true], &[true], false);
        assert!(v.is_zero());
    }
}
