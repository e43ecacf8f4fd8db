//! Upper models for two-transmitter multiple access channels.
//!
//! Transmitter 1 sends a description `U` of its input over its own edge, and
//! the merged node forwards the rest. With `U - X1 - (X1,X2) - Y`,
//! `I(X1,X2;Y|U) = I(X1,X2;Y) - I(U;Y)`, so the inner minimization is an
//! information-bottleneck problem: maximize `I(U;Y)` subject to
//! `I(X1;U) <= R1`.

use rand::Rng;
use rayon::prelude::*;

use super::{build_model, AuxSearch, BitPipeModel, Geometry, RateVector, Side};
use crate::error::{invalid, Result};
use crate::grid::simplex_grid;
use crate::info::{entropy_of, Channel, Dmc, Role, ZERO_PROB};
use crate::rate::Rate;
use crate::rng::stream;

const IB_BETAS: usize = 24;
const IB_MAX_ITERS: usize = 200;
const IB_TOL: f64 = 1e-10;

/// Achievable `(I(X;U), I(U;Y))` pairs for one source distribution, kept as
/// an increasing staircase.
#[derive(Debug, Clone, PartialEq)]
pub struct Frontier {
    points: Vec<(f64, f64)>,
}

impl Frontier {
    fn from_points(mut pts: Vec<(f64, f64)>) -> Frontier {
        pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
        let mut out: Vec<(f64, f64)> = Vec::new();
        for p in pts {
            if out.last().map_or(true, |l| p.1 > l.1) {
                out.push(p);
            }
        }
        Frontier { points: out }
    }

    /// Largest `I(U;Y)` among pairs with `I(X;U) <= budget`, with the pair.
    pub fn best(&self, budget: f64) -> (f64, f64) {
        self.points
            .iter()
            .rev()
            .find(|p| p.0 <= budget + 1e-12)
            .copied()
            .unwrap_or((0.0, 0.0))
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }
}

fn ib_informations(px: &[f64], pyx: &[Vec<f64>], q: &[Vec<f64>]) -> (f64, f64) {
    let nu = q[0].len();
    let ny = pyx[0].len();
    let mut pu = vec![0.0; nu];
    let mut puy = vec![vec![0.0; ny]; nu];
    for x in 0..px.len() {
        for u in 0..nu {
            let w = px[x] * q[x][u];
            pu[u] += w;
            for y in 0..ny {
                puy[u][y] += w * pyx[x][y];
            }
        }
    }
    let mut ixu = 0.0;
    for x in 0..px.len() {
        for u in 0..nu {
            let w = px[x] * q[x][u];
            if w > ZERO_PROB {
                ixu += w * (q[x][u] / pu[u]).log2();
            }
        }
    }
    let py: Vec<f64> = (0..ny).map(|y| puy.iter().map(|r| r[y]).sum()).collect();
    let hyu: f64 = puy.iter().map(|r| entropy_of(r)).sum::<f64>() - entropy_of(&pu);
    (ixu.max(0.0), (entropy_of(&py) - hyu).max(0.0))
}

fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(a, _)| **a > ZERO_PROB)
        .map(|(a, b)| if *b <= 0.0 { f64::INFINITY } else { a * (a / b).log2() })
        .sum()
}

/// Deterministic-annealing information bottleneck from `starts` seeded
/// initializations, plus every hard map from `X` to `U`.
pub fn ib_frontier(px: &[f64], pyx: &[Vec<f64>], nu: usize, starts: usize, seed: u64, cell: u64) -> Frontier {
    let nx = px.len();
    let ny = pyx[0].len();
    let mut pts = vec![(0.0, 0.0)];
    if nx.pow(nx as u32) <= 4096 {
        let total = nu.pow(nx as u32);
        for code in 0..total {
            let mut q = vec![vec![0.0; nu]; nx];
            let mut c = code;
            for row in q.iter_mut() {
                row[c % nu] = 1.0;
                c /= nu;
            }
            pts.push(ib_informations(px, pyx, &q));
        }
    }
    for s in 0..starts {
        let mut rng = stream(seed, &[cell, s as u64]);
        let mut q: Vec<Vec<f64>> = (0..nx)
            .map(|_| {
                let row: Vec<f64> = (0..nu).map(|_| rng.random::<f64>() + 1e-3).collect();
                let z: f64 = row.iter().sum();
                row.into_iter().map(|v| v / z).collect()
            })
            .collect();
        for b in 0..IB_BETAS {
            let beta = 0.25 * (4096.0f64).powf(b as f64 / (IB_BETAS - 1) as f64);
            for _ in 0..IB_MAX_ITERS {
                let mut pu = vec![0.0; nu];
                let mut pyu = vec![vec![0.0; ny]; nu];
                for x in 0..nx {
                    for u in 0..nu {
                        let w = px[x] * q[x][u];
                        pu[u] += w;
                        for y in 0..ny {
                            pyu[u][y] += w * pyx[x][y];
                        }
                    }
                }
                for u in 0..nu {
                    if pu[u] > 0.0 {
                        pyu[u].iter_mut().for_each(|v| *v /= pu[u]);
                    }
                }
                let mut change: f64 = 0.0;
                for x in 0..nx {
                    let logs: Vec<f64> = (0..nu)
                        .map(|u| {
                            if pu[u] <= 0.0 {
                                f64::NEG_INFINITY
                            } else {
                                pu[u].log2() - beta * kl_bits(&pyx[x], &pyu[u])
                            }
                        })
                        .collect();
                    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let w: Vec<f64> = logs.iter().map(|l| (l - m).exp2()).collect();
                    let z: f64 = w.iter().sum();
                    for u in 0..nu {
                        let v = w[u] / z;
                        change = change.max((v - q[x][u]).abs());
                        q[x][u] = v;
                    }
                }
                if change < IB_TOL {
                    break;
                }
            }
            pts.push(ib_informations(px, pyx, &q));
        }
    }
    let hx = entropy_of(px);
    pts.retain(|p| p.0 <= hx + 1e-9);
    Frontier::from_points(pts)
}

struct Cell {
    input: Vec<f64>,
    total: f64,
    frontier: Option<Frontier>,
}

/// Per-grid-point data for MAC upper models, reusable across a
/// sweep of description rates so that the merged rate is monotone.
pub struct MacUpperSolver {
    channel: Dmc,
    res: usize,
    delta: f64,
    cells: Vec<Cell>,
}

fn source_and_relevance(ch: &Dmc, input: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let sizes = ch.input_sizes();
    let (n1, n2) = (sizes[0], sizes[1]);
    let ny = ch.n_out();
    let px1: Vec<f64> = (0..n1).map(|a| (0..n2).map(|b| input[a * n2 + b]).sum()).collect();
    let pyx1 = (0..n1)
        .map(|a| {
            let mut row = vec![0.0; ny];
            if px1[a] > 0.0 {
                for b in 0..n2 {
                    let w = input[a * n2 + b] / px1[a];
                    for (o, t) in row.iter_mut().zip(ch.row(a * n2 + b)) {
                        *o += w * t;
                    }
                }
            } else {
                row.iter_mut().for_each(|v| *v = 1.0 / ny as f64);
            }
            row
        })
        .collect();
    (px1, pyx1)
}

impl MacUpperSolver {
    /// Evaluates `I(X1,X2;Y)` on the joint-input grid and, when
    /// `with_frontier` is set, the description frontier at every point.
    pub fn new(ch: &Dmc, res: usize, aux: &AuxSearch, delta: f64, with_frontier: bool) -> Result<Self> {
        if ch.role() != Role::Mac {
            return invalid("MAC upper models require a MAC channel");
        }
        if !(delta > 0.0) {
            return invalid("delta must be positive");
        }
        let grid = simplex_grid(ch.n_in(), res);
        let n1 = ch.input_sizes()[0];
        let cells = grid
            .into_par_iter()
            .enumerate()
            .map(|(k, input)| {
                let total = ch.mutual_information(&input);
                let frontier = with_frontier.then(|| {
                    let (px1, pyx1) = source_and_relevance(ch, &input);
                    ib_frontier(&px1, &pyx1, n1, aux.starts, aux.seed, k as u64)
                });
                Cell {
                    input,
                    total,
                    frontier,
                }
            })
            .collect();
        Ok(MacUpperSolver {
            channel: ch.clone(),
            res,
            delta,
            cells,
        })
    }

    /// `max over the grid of min_U I(X1,X2;Y|U)` with `I(X1;U) <= r1`,
    /// without the strictness margin, and the maximizing input.
    pub fn merged_rate(&self, r1: f64) -> Result<(f64, Vec<f64>)> {
        let mut best = (f64::NEG_INFINITY, Vec::new());
        for c in &self.cells {
            let gain = if r1 <= 0.0 {
                0.0
            } else {
                match &c.frontier {
                    Some(f) => f.best(r1).1,
                    None => return invalid("description frontier was not computed"),
                }
            };
            let v = (c.total - gain).max(0.0);
            if v > best.0 {
                best = (v, c.input.clone());
            }
        }
        Ok(best)
    }

    pub fn model(&self, r1: f64) -> Result<MacUpper> {
        if !(r1 >= 0.0) {
            return invalid("description rate must be nonnegative");
        }
        let (r2, worst_input) = self.merged_rate(r1)?;
        let rates = RateVector::new()
            .with(&[1], &[1], Rate::Finite(r1 + self.delta))
            .with(&[1, 2], &[1], Rate::Finite(r2 + self.delta));
        let model = build_model(
            &self.channel.name,
            Side::Upper,
            &Geometry::of(&Channel::Discrete(self.channel.clone())),
            &rates,
            self.delta,
        )?
        .with_note(format!("merged rate maximized over a joint-input grid of resolution {}", self.res))
        .with_note("certified-feasible rate vector; not claimed minimal");
        Ok(MacUpper {
            model,
            r1,
            r2,
            worst_input,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacUpper {
    pub model: BitPipeModel,
    pub r1: f64,
    /// Merged-edge rate before the strictness margin.
    pub r2: f64,
    pub worst_input: Vec<f64>,
}

/// Upper model with description rate `r1` for transmitter 1. At `r1 = 0`
/// the description is constant and no auxiliary search is needed.
pub fn upper_model_mac(ch: &Dmc, r1: f64, res: usize, aux: &AuxSearch, delta: f64) -> Result<MacUpper> {
    MacUpperSolver::new(ch, res, aux, delta, r1 > 0.0)?.model(r1)
}

/// As [`upper_model_mac`] with transmitter `describer` (1 or 2) sending the
/// description.
pub fn upper_model_mac_oriented(
    ch: &Dmc,
    describer: usize,
    r1: f64,
    res: usize,
    aux: &AuxSearch,
    delta: f64,
) -> Result<MacUpper> {
    match describer {
        1 => upper_model_mac(ch, r1, res, aux, delta),
        2 => {
            let mut up = upper_model_mac(&ch.swap_inputs(), r1, res, aux, delta)?;
            let rates = RateVector::new()
                .with(&[2], &[1], up.model.rate(&[1], &[1]))
                .with(&[1, 2], &[1], up.model.rate(&[1, 2], &[1]));
            let mut model = build_model(
                &ch.name,
                Side::Upper,
                &Geometry::of(&Channel::Discrete(ch.clone())),
                &rates,
                delta,
            )?;
            model.notes = up.model.notes.clone();
            model.notes.push("transmitter 2 sends the description".into());
            up.model = model;
            Ok(up)
        }
        _ => invalid("describer must be 1 or 2"),
    }
}

/// Slack of both inequalities at every point of a grid for given rates:
/// `R_a > I(X1;U)` and `R_m > I(X1,X2;Y|U)` with `U` from a fresh frontier
/// at each point. Returns per-inequality minima.
pub(crate) fn mac_margins(
    ch: &Dmc,
    describer: usize,
    r_a: f64,
    r_a_boundary: f64,
    r_m: f64,
    res: usize,
    aux: &AuxSearch,
) -> (f64, f64, Vec<f64>) {
    let ch = if describer == 2 { ch.swap_inputs() } else { ch.clone() };
    let n1 = ch.input_sizes()[0];
    let grid = simplex_grid(ch.n_in(), res);
    let per: Vec<(f64, f64, Vec<f64>)> = grid
        .into_par_iter()
        .enumerate()
        .map(|(k, input)| {
            let total = ch.mutual_information(&input);
            let (ix, iy) = if r_a_boundary <= 0.0 {
                (0.0, 0.0)
            } else {
                let (px1, pyx1) = source_and_relevance(&ch, &input);
                ib_frontier(&px1, &pyx1, n1, aux.starts, aux.seed, k as u64).best(r_a_boundary)
            };
            (r_a - ix, r_m - (total - iy), input)
        })
        .collect();
    let s1 = per.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let (s2, at) = per
        .into_iter()
        .map(|p| (p.1, p.2))
        .fold((f64::INFINITY, Vec::new()), |a, b| if b.0 < a.0 { b } else { a });
    (s1, s2, at)
}
