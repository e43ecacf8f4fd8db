//! Candidate models per channel, the ratio and additive gap metrics, and
//! network-level bounds.

use std::collections::BTreeMap;

use serde::Serialize;

use super::cut::{cut_value_at, min_cut, multicast_capacity, ENUMERATION_CAP};
use super::{Demand, Network};
use crate::capacity::{blahut_arimoto, degraded_bc_lower_points, mac_lower_points, p2p_lower_point, pareto_front, superposition_grid, RegionPoint, SuperpositionAux};
use crate::error::{Error, Result};
use crate::info::{Channel, Dmc, GaussianChannelSpec, Role};
use crate::model::{
    gaussian_bc_models, gaussian_mac_candidates, lower_model, lower_model_merged, upper_model_bc, upper_model_ic,
    upper_model_mac_oriented, upper_model_p2p, AuxSearch, BitPipeModel, EdgeId, IcVariant, DEFAULT_GRID,
    DEFAULT_SLACK,
};
use crate::rate::Rate;

/// Largest number of candidate combinations evaluated by [`bounds`].
pub const COMBINATION_CAP: usize = 4096;

const PAIR_TOL: f64 = 1e-9;
const ROUNDOFF: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CandidateOptions {
    pub res: usize,
    pub aux: AuxSearch,
    pub delta: f64,
    pub tol: f64,
    /// Achievable MAC points kept from the Pareto front.
    pub mac_points: usize,
    /// Superposition parameters tried for binary broadcast channels.
    pub bc_points: usize,
    /// Broadcast upper-family members.
    pub bc_members: usize,
}

impl Default for CandidateOptions {
    fn default() -> Self {
        CandidateOptions {
            res: DEFAULT_GRID,
            aux: AuxSearch::default(),
            delta: DEFAULT_SLACK,
            tol: 1e-9,
            mac_points: 9,
            bc_points: 17,
            bc_members: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub channel_id: String,
    pub lowers: Vec<BitPipeModel>,
    pub uppers: Vec<BitPipeModel>,
}

fn even_subset(points: Vec<RegionPoint>, count: usize) -> Vec<RegionPoint> {
    let mut pts = points;
    pts.sort_by(|a, b| a.rates[0].total_cmp(&b.rates[0]));
    if pts.len() <= count || count < 2 {
        return pts;
    }
    let (lo, hi) = (pts[0].rates[0], pts[pts.len() - 1].rates[0]);
    let mut out: Vec<RegionPoint> = Vec::new();
    for k in 0..count {
        let target = lo + (hi - lo) * k as f64 / (count - 1) as f64;
        let best = pts
            .iter()
            .min_by(|a, b| (a.rates[0] - target).abs().total_cmp(&(b.rates[0] - target).abs()))
            .expect("nonempty");
        if !out.iter().any(|p| p.rates == best.rates) {
            out.push(best.clone());
        }
    }
    out
}

/// Tolerance at which capacity iterations for `d` converge. Nearly useless
/// channels converge slowly; their best bracket at the iteration cap is
/// still certified, so the tolerance is widened to it.
fn p2p_tol(d: &Dmc, tol: f64) -> f64 {
    match blahut_arimoto(d, tol) {
        Err(Error::NonConvergence { lower, upper, .. }) => tol.max(2.0 * (upper - lower)),
        _ => tol,
    }
}

fn discrete_candidates(d: &Dmc, channel: &Channel, o: &CandidateOptions) -> Result<(Vec<BitPipeModel>, Vec<BitPipeModel>)> {
    Ok(match d.role() {
        Role::P2p => {
            let tol = p2p_tol(d, o.tol);
            (
                vec![lower_model(channel, &p2p_lower_point(d, tol)?)?],
                vec![upper_model_p2p(d, o.delta, tol)?],
            )
        }
        Role::Bc => {
            let grid: Vec<SuperpositionAux> = if d.n_in() == 2 {
                let n = o.bc_points.max(2);
                (0..n)
                    .map(|k| SuperpositionAux::binary_symmetric(0.5 * k as f64 / (n - 1) as f64))
                    .collect()
            } else {
                superposition_grid(d.n_in(), 3)
            };
            let pts = pareto_front(&degraded_bc_lower_points(d, &grid)?);
            let lowers = pts.iter().map(|p| lower_model(channel, p)).collect::<Result<_>>()?;
            let fam = upper_model_bc(d, o.res, o.delta)?;
            let mut uppers = vec![fam.minimal()];
            uppers.extend(fam.members(o.bc_members).into_iter().skip(1));
            (lowers, uppers)
        }
        Role::Mac => {
            let pts = pareto_front(&mac_lower_points(d, &[0.0, 0.25, 0.5, 0.75, 1.0], o.res.min(17))?);
            let mut lowers = Vec::new();
            for p in even_subset(pts, o.mac_points) {
                lowers.push(lower_model(channel, &p)?);
                lowers.push(lower_model_merged(channel, &p)?);
            }
            let uppers = vec![
                upper_model_mac_oriented(d, 1, 0.0, o.res, &o.aux, o.delta)?.model,
                upper_model_mac_oriented(d, 2, 0.0, o.res, &o.aux, o.delta)?.model,
            ];
            (lowers, uppers)
        }
        Role::Ic => (
            Vec::new(),
            vec![
                upper_model_ic(d, IcVariant::One, o.res, &o.aux, o.delta)?.model,
                upper_model_ic(d, IcVariant::Two, o.res, &o.aux, o.delta)?.model,
            ],
        ),
    })
}

/// Lower and upper candidate models for one channel. Interference channels
/// have no lower candidates.
pub fn candidates(channel: &Channel, opts: &CandidateOptions) -> Result<Candidates> {
    let (lowers, uppers) = match channel {
        Channel::Discrete(d) => discrete_candidates(d, channel, opts)?,
        Channel::Gaussian(GaussianChannelSpec::Bc(s)) => {
            let pair = gaussian_bc_models(s, opts.delta)?;
            (vec![pair.lower], vec![pair.upper])
        }
        Channel::Gaussian(GaussianChannelSpec::Mac(s)) => gaussian_mac_candidates(s, opts.delta)?,
    };
    Ok(Candidates {
        channel_id: channel.name(),
        lowers,
        uppers,
    })
}

fn patterns(m: &BitPipeModel) -> Vec<(Vec<bool>, Vec<bool>)> {
    let (t, r) = (m.geometry.n_tx, m.geometry.n_rx);
    (0u32..1 << (t + r))
        .map(|mask| {
            (
                (0..t).map(|i| mask >> i & 1 == 1).collect(),
                (0..r).map(|j| mask >> (t + j) & 1 == 1).collect(),
            )
        })
        .collect()
}

/// True when the upper model's boundary cut value is at least the lower
/// model's for every placement of the terminals.
pub fn valid_pair(lower: &BitPipeModel, upper: &BitPipeModel) -> bool {
    patterns(lower).iter().all(|(tx, rx)| {
        let l = lower.local_cut(tx, rx, true).0;
        let u = upper.local_cut(tx, rx, true).0;
        match (u, l) {
            (Rate::Infinite, _) => true,
            (Rate::Finite(_), Rate::Infinite) => false,
            (Rate::Finite(u), Rate::Finite(l)) => u >= l - PAIR_TOL,
        }
    })
}

fn missing(side: &str, c: &Candidates) -> Error {
    Error::MissingCandidates {
        side: side.to_string(),
        what: format!("channel `{}`", c.channel_id),
    }
}

fn need(c: &Candidates) -> Result<()> {
    if c.lowers.is_empty() {
        return Err(missing("lower", c));
    }
    if c.uppers.is_empty() {
        return Err(missing("upper", c));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub value: f64,
    /// Indices of the attaining lower and upper candidates.
    pub pair: Option<(usize, usize)>,
}

fn ratio(l: Rate, u: Rate) -> f64 {
    match (l, u) {
        (Rate::Infinite, Rate::Infinite) => 1.0,
        (Rate::Finite(_), Rate::Infinite) => 0.0,
        (Rate::Finite(l), Rate::Finite(u)) => (l / u).clamp(0.0, 1.0),
        (Rate::Infinite, Rate::Finite(_)) => unreachable!("filtered by the caller"),
    }
}

/// Edgewise ratio estimate: the best over valid candidate pairs of the
/// smallest ratio `R_L / R_U` over edges with `R_U >= R_L` and `R_U > 0`,
/// with upper edges at their boundary values. Pairs with no qualifying edge
/// are skipped.
pub fn rho(c: &Candidates) -> Result<RhoEstimate> {
    need(c)?;
    let mut best = RhoEstimate { value: 0.0, pair: None };
    for (i, lo) in c.lowers.iter().enumerate() {
        let lm = lo.edge_map(true);
        for (j, up) in c.uppers.iter().enumerate() {
            if !valid_pair(lo, up) {
                continue;
            }
            let um = up.edge_map(true);
            let mut keys: Vec<&EdgeId> = lm.keys().chain(um.keys()).collect();
            keys.sort();
            keys.dedup();
            let mut worst: Option<f64> = None;
            for k in keys {
                let l = lm.get(k).copied().unwrap_or(Rate::ZERO);
                let u = um.get(k).copied().unwrap_or(Rate::ZERO);
                let (r, below) = match (l, u) {
                    (Rate::Finite(a), Rate::Finite(b)) if (b - a).abs() <= ROUNDOFF => (1.0, false),
                    _ => (ratio(l, u).min(1.0), u < l),
                };
                if u.is_zero() || below {
                    continue;
                }
                worst = Some(worst.map_or(r, |w: f64| w.min(r)));
            }
            if let Some(w) = worst {
                if best.pair.is_none() || w > best.value {
                    best = RhoEstimate { value: w, pair: Some((i, j)) };
                }
            }
        }
    }
    Ok(best)
}

/// Smallest boundary cut-value difference `val(upper) - val(lower)` over
/// valid candidate pairs for one placement of the channel's terminals. An
/// infinite upper value gives an infinite difference.
pub fn delta(c: &Candidates, tx_in: &[bool], rx_in: &[bool]) -> Result<Rate> {
    need(c)?;
    let mut best: Option<Rate> = None;
    for lo in &c.lowers {
        let l = lo.local_cut(tx_in, rx_in, true).0;
        for up in &c.uppers {
            if !valid_pair(lo, up) {
                continue;
            }
            let u = up.local_cut(tx_in, rx_in, true).0;
            let d = match u.gap_over(&l) {
                // Boundary values are `cap - slack`; differences at rounding
                // level are zero.
                Rate::Finite(v) => Rate::Finite(if v < ROUNDOFF { 0.0 } else { v }),
                Rate::Infinite => Rate::Infinite,
            };
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    best.ok_or_else(|| Error::Invalid(format!("no valid candidate pair for channel `{}`", c.channel_id)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutDelta {
    pub s: Vec<usize>,
    pub delta: Rate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub rho_per_channel: BTreeMap<String, f64>,
    pub rho_network: f64,
    pub delta_per_cut: Vec<CutDelta>,
    pub additive_gap: Rate,
    pub binding_cut: Vec<usize>,
    /// Number of Gaussian components and whether the gap is within half a
    /// bit per component.
    pub gaussian_components: usize,
    pub half_bit_bound_holds: Option<bool>,
    pub notes: Vec<String>,
}

/// Ratio and additive gap metrics for every noisy component of a network.
pub fn network_gaps(net: &Network, opts: &CandidateOptions) -> Result<GapReport> {
    let m = net.nodes;
    if m > ENUMERATION_CAP {
        return Err(Error::EnumerationCap { m, cap: ENUMERATION_CAP });
    }
    let mut rho_per_channel = BTreeMap::new();
    let mut tables = Vec::new();
    let mut gaussian = 0;
    for (k, id, channel) in net.noisy() {
        let c = candidates(channel, opts)?;
        need(&c)?;
        rho_per_channel.insert(id.to_string(), rho(&c)?.value);
        if matches!(channel, Channel::Gaussian(_)) {
            gaussian += 1;
        }
        let super::Component::Noisy { v1, v2, .. } = &net.components[k] else {
            unreachable!("noisy() returns noisy components")
        };
        let mut table = BTreeMap::new();
        for (tx, rx) in patterns(&c.uppers[0]) {
            table.insert((tx.clone(), rx.clone()), delta(&c, &tx, &rx)?);
        }
        tables.push((v1.clone(), v2.clone(), table));
    }
    let mut delta_per_cut = Vec::new();
    let mut additive_gap = Rate::ZERO;
    let mut binding_cut = Vec::new();
    for mask in 1u64..(1 << m) - 1 {
        let in_s: Vec<bool> = (0..m).map(|k| mask >> k & 1 == 1).collect();
        let mut sum = Rate::ZERO;
        for (v1, v2, table) in &tables {
            let tx: Vec<bool> = v1.iter().map(|&n| in_s[n - 1]).collect();
            let rx: Vec<bool> = v2.iter().map(|&n| in_s[n - 1]).collect();
            sum = sum + table[&(tx, rx)];
        }
        let s: Vec<usize> = (1..=m).filter(|&n| in_s[n - 1]).collect();
        if binding_cut.is_empty() || sum > additive_gap {
            additive_gap = sum;
            binding_cut = s.clone();
        }
        delta_per_cut.push(CutDelta { s, delta: sum });
    }
    let rho_network = rho_per_channel.values().copied().fold(1.0, f64::min);
    let all_gaussian = gaussian > 0 && gaussian == net.noisy().len();
    Ok(GapReport {
        rho_network,
        rho_per_channel,
        delta_per_cut,
        half_bit_bound_holds: all_gaussian.then(|| additive_gap <= Rate::Finite(0.5 * gaussian as f64 + 1e-12)),
        additive_gap,
        binding_cut,
        gaussian_components: gaussian,
        notes: vec![
            "rho is a lower estimate and each delta an upper estimate over the exhibited candidate pairs".into(),
            "the additive gap bounds capacity only for demand types whose cut-set bounds are tight".into(),
        ],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DemandBound {
    pub demand: Demand,
    /// Achievable (cut-tight demands) on the lower-model network.
    pub lower: Option<Rate>,
    /// Outer bound on the upper-model network.
    pub upper: Option<Rate>,
    pub gap_flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutRow {
    pub s: Vec<usize>,
    pub lower: Option<Rate>,
    pub upper: Option<Rate>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub demands: Vec<DemandBound>,
    pub cuts: Vec<CutRow>,
    pub combinations: BTreeMap<String, usize>,
    pub notes: Vec<String>,
}

/// Largest node count for which the per-cut table is listed.
pub const CUT_TABLE_CAP: usize = 12;

fn demand_value(net: &Network, d: &Demand) -> Result<Rate> {
    match d {
        Demand::Unicast { from, to, .. } => Ok(min_cut(net, *from, *to)?.value),
        Demand::Multicast { from, sinks, .. } => multicast_capacity(net, *from, sinks),
    }
}

/// Every network obtained by choosing one candidate per noisy component.
fn replacements(net: &Network, choices: &[(String, Vec<BitPipeModel>)]) -> Result<Vec<Network>> {
    let count: f64 = choices.iter().map(|c| c.1.len() as f64).product();
    if count > COMBINATION_CAP as f64 {
        return Err(Error::CombinationCap { count, cap: COMBINATION_CAP });
    }
    let mut out = vec![net.clone()];
    for (id, models) in choices {
        out = out
            .iter()
            .flat_map(|n| models.iter().map(move |m| n.replace(id, m)))
            .collect::<Result<_>>()?;
    }
    Ok(out)
}

fn side_values(nets: &[Network], net: &Network, keep_max: bool) -> Result<(Vec<Rate>, usize)> {
    let mut best: Vec<Option<Rate>> = vec![None; net.demands.len()];
    let mut chosen = 0;
    for (k, n) in nets.iter().enumerate() {
        for (i, d) in net.demands.iter().enumerate() {
            let v = demand_value(n, d)?;
            let better = best[i].map_or(true, |b| if keep_max { v > b } else { v < b });
            if better {
                best[i] = Some(v);
                if i == 0 {
                    chosen = k;
                }
            }
        }
    }
    Ok((best.into_iter().map(|b| b.expect("at least one network")).collect(), chosen))
}

/// Lower and upper bounds for every demand: the best over candidate
/// combinations of the min-cut (or multicast) value after replacing each
/// noisy component.
pub fn bounds(net: &Network, opts: &CandidateOptions, lower: bool, upper: bool) -> Result<BoundReport> {
    let mut lows = Vec::new();
    let mut ups = Vec::new();
    for (_, id, channel) in net.noisy() {
        let c = candidates(channel, opts)?;
        if lower && c.lowers.is_empty() {
            return Err(missing("lower", &c));
        }
        if upper && c.uppers.is_empty() {
            return Err(missing("upper", &c));
        }
        lows.push((id.to_string(), c.lowers));
        ups.push((id.to_string(), c.uppers.iter().map(BitPipeModel::at_boundary).collect()));
    }
    let mut combinations = BTreeMap::new();
    let mut lower_vals = None;
    let mut upper_vals = None;
    let mut lower_net = None;
    let mut upper_net = None;
    if lower {
        let nets = replacements(net, &lows)?;
        combinations.insert("lower".to_string(), nets.len());
        let (v, k) = side_values(&nets, net, true)?;
        lower_vals = Some(v);
        lower_net = Some(nets[k].clone());
    }
    if upper {
        let nets = replacements(net, &ups)?;
        combinations.insert("upper".to_string(), nets.len());
        let (v, k) = side_values(&nets, net, false)?;
        upper_vals = Some(v);
        upper_net = Some(nets[k].clone());
    }
    let demands = net
        .demands
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let lo = lower_vals.as_ref().map(|v| v[i]);
            let up = upper_vals.as_ref().map(|v| v[i]);
            let gap_flagged = match (lo, up) {
                (Some(l), Some(u)) => match (l, u) {
                    (Rate::Finite(l), Rate::Finite(u)) => u - l > 1e-9,
                    (Rate::Finite(_), Rate::Infinite) => true,
                    _ => false,
                },
                _ => false,
            };
            DemandBound {
                demand: d.clone(),
                lower: lo,
                upper: up,
                gap_flagged,
            }
        })
        .collect();
    let mut notes = vec![
        "lower: achievable (cut-tight demands)".to_string(),
        "upper: outer bound (upper models at the limit of vanishing strictness margin)".to_string(),
    ];
    let mut cuts = Vec::new();
    if net.nodes <= CUT_TABLE_CAP {
        let m = net.nodes;
        for mask in 1u64..(1 << m) - 1 {
            let in_s: Vec<bool> = (0..m).map(|k| mask >> k & 1 == 1).collect();
            let val = |n: &Option<Network>| -> Result<Option<Rate>> {
                n.as_ref().map(|n| cut_value_at(n, &in_s, false).map(|r| r.value)).transpose()
            };
            cuts.push(CutRow {
                s: (1..=m).filter(|&n| in_s[n - 1]).collect(),
                lower: val(&lower_net)?,
                upper: val(&upper_net)?,
            });
        }
        notes.push("cut table uses the candidate combination selected for the first demand".into());
    } else {
        notes.push(format!("cut table omitted above {CUT_TABLE_CAP} nodes"));
    }
    Ok(BoundReport {
        demands,
        cuts,
        combinations,
        notes,
    })
}
