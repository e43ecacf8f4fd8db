//! Upper models for two-transmitter, two-receiver interference channels.
//!
//! Transmitter 1 sends two descriptions `(U1, U2)` of its input; the merged
//! node forwards the remaining uncertainty of the outputs. Both variants
//! search a fixed pool of conditionals `p(u1,u2|x1)` with
//! `|U1|·|U2| <= |X1|`, so the construction and the checker see the same
//! candidates.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_model, AuxSearch, BitPipeModel, EdgeKey, Geometry, RateVector, Side};
use crate::error::{invalid, Error, Result};
use crate::grid::simplex_grid;
use crate::info::{entropy_of, marginal_raw, Channel, Dmc, Role};
use crate::rate::Rate;
use crate::rng::stream;

/// Pools larger than this are refused.
pub const AUX_POOL_CAP: usize = 100_000;

/// Which transmitter-1 description reaches only one receiver: receiver 1
/// for `One`, receiver 2 for `Two`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcVariant {
    One,
    Two,
}

impl IcVariant {
    /// The four keys in the order of [`IcVariant::inequality_names`]'
    /// single-key terms: private and common description edges of
    /// transmitter 1, then the merged node's.
    pub fn keys(self) -> [EdgeKey; 4] {
        match self {
            IcVariant::One => [
                EdgeKey::new(&[1], &[1]),
                EdgeKey::new(&[1], &[1, 2]),
                EdgeKey::new(&[1, 2], &[1]),
                EdgeKey::new(&[1, 2], &[1, 2]),
            ],
            IcVariant::Two => [
                EdgeKey::new(&[1], &[2]),
                EdgeKey::new(&[1], &[1, 2]),
                EdgeKey::new(&[1, 2], &[2]),
                EdgeKey::new(&[1, 2], &[1, 2]),
            ],
        }
    }

    pub fn inequality_names(self) -> [&'static str; 4] {
        match self {
            IcVariant::One => [
                "R[{1}->{1}] + R[{1}->{1,2}] > I(X1;U1,U2)",
                "R[{1}->{1,2}] > I(X1;U2)",
                "R[{1,2}->{1}] + R[{1,2}->{1,2}] > I(X1,X2;Y1|U1,U2,Y2) + I(X1,X2;Y2|U2)",
                "R[{1,2}->{1,2}] > I(X1,X2;Y2|U2)",
            ],
            IcVariant::Two => [
                "R[{1}->{1,2}] + R[{1}->{2}] > I(X1;U1,U2)",
                "R[{1}->{1,2}] > I(X1;U1)",
                "R[{1,2}->{1,2}] + R[{1,2}->{2}] > I(X1,X2;Y1|U1) + I(X1,X2;Y2|U1,U2,Y1)",
                "R[{1,2}->{1,2}] > I(X1,X2;Y1|U1)",
            ],
        }
    }

    /// Variant whose keys appear in `rates`, preferring `One`.
    pub fn infer(rates: &RateVector) -> IcVariant {
        let two = IcVariant::Two.keys();
        if rates.nonzero().any(|(k, _)| k == &two[0] || k == &two[2]) {
            IcVariant::Two
        } else {
            IcVariant::One
        }
    }
}

/// A conditional `p(u1,u2|x1)`, row-major over `(x1, u1, u2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IcAux {
    pub n_u1: usize,
    pub n_u2: usize,
    pub cond: Vec<f64>,
}

/// Every deterministic map plus `aux.starts` seeded random conditionals for
/// each admissible `(|U1|, |U2|)`.
pub fn aux_pool(n_x1: usize, aux: &AuxSearch) -> Result<Vec<IcAux>> {
    let mut pool = Vec::new();
    for n_u1 in 1..=n_x1 {
        for n_u2 in 1..=n_x1 / n_u1 {
            let nu = n_u1 * n_u2;
            let maps = (nu as f64).powi(n_x1 as i32);
            if maps + pool.len() as f64 > AUX_POOL_CAP as f64 {
                return Err(Error::EnumerationCap {
                    m: n_x1,
                    cap: AUX_POOL_CAP,
                });
            }
            for code in 0..maps as usize {
                let mut cond = vec![0.0; n_x1 * nu];
                let mut c = code;
                for x in 0..n_x1 {
                    cond[x * nu + c % nu] = 1.0;
                    c /= nu;
                }
                pool.push(IcAux { n_u1, n_u2, cond });
            }
            if nu > 1 {
                for s in 0..aux.starts {
                    let mut rng = stream(aux.seed, &[n_u1 as u64, n_u2 as u64, s as u64]);
                    let mut cond = Vec::with_capacity(n_x1 * nu);
                    for _ in 0..n_x1 {
                        let row: Vec<f64> = (0..nu).map(|_| rng.random::<f64>() + 1e-3).collect();
                        let z: f64 = row.iter().sum();
                        cond.extend(row.into_iter().map(|v| v / z));
                    }
                    pool.push(IcAux { n_u1, n_u2, cond });
                }
            }
        }
    }
    Ok(pool)
}

const U1: usize = 0;
const U2: usize = 1;
const X1: usize = 2;
const X2: usize = 3;
const Y1: usize = 4;
const Y2: usize = 5;

/// Right-hand sides of the four inequalities, in the order of
/// [`IcVariant::inequality_names`].
pub fn ic_informations(ch: &Dmc, variant: IcVariant, input: &[f64], a: &IcAux) -> [f64; 4] {
    let xs = ch.input_sizes();
    let ys = ch.output_sizes();
    let shape = [a.n_u1, a.n_u2, xs[0], xs[1], ys[0], ys[1]];
    let nu = a.n_u1 * a.n_u2;
    let ny = ys[0] * ys[1];
    let mut probs = vec![0.0; nu * input.len() * ny];
    for u in 0..nu {
        for x1 in 0..xs[0] {
            let w_u = a.cond[x1 * nu + u];
            if w_u == 0.0 {
                continue;
            }
            for x2 in 0..xs[1] {
                let x = x1 * xs[1] + x2;
                let w = w_u * input[x];
                if w == 0.0 {
                    continue;
                }
                let base = (u * input.len() + x) * ny;
                for (o, t) in probs[base..base + ny].iter_mut().zip(ch.row(x)) {
                    *o = w * t;
                }
            }
        }
    }
    let h = |axes: &[usize]| entropy_of(&marginal_raw(&probs, &shape, axes));
    let cmi = |a: &[usize], b: &[usize], c: &[usize]| {
        let ac: Vec<usize> = a.iter().chain(c).copied().collect();
        let bc: Vec<usize> = b.iter().chain(c).copied().collect();
        let abc: Vec<usize> = a.iter().chain(b).chain(c).copied().collect();
        (h(&ac) + h(&bc) - h(&abc) - h(c)).max(0.0)
    };
    match variant {
        IcVariant::One => {
            let t2 = cmi(&[X1, X2], &[Y2], &[U2]);
            [
                cmi(&[X1], &[U1, U2], &[]),
                cmi(&[X1], &[U2], &[]),
                cmi(&[X1, X2], &[Y1], &[U1, U2, Y2]) + t2,
                t2,
            ]
        }
        IcVariant::Two => {
            let t1 = cmi(&[X1, X2], &[Y1], &[U1]);
            [
                cmi(&[X1], &[U1, U2], &[]),
                cmi(&[X1], &[U1], &[]),
                t1 + cmi(&[X1, X2], &[Y2], &[U1, U2, Y1]),
                t1,
            ]
        }
    }
}

/// Smallest rates `[single, common, merged single, merged common]` meeting
/// the inequalities with equality for given right-hand sides.
fn minimal_rates(rhs: &[f64; 4]) -> [f64; 4] {
    let common = rhs[1];
    let merged_common = rhs[3];
    [
        (rhs[0] - common).max(0.0),
        common,
        (rhs[2] - merged_common).max(0.0),
        merged_common,
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcUpper {
    pub model: BitPipeModel,
    pub variant: IcVariant,
    /// Rates before the strictness margin, in key order.
    pub rates: [f64; 4],
    pub pool_size: usize,
}

/// Componentwise maximum over the input grid of the per-point cheapest
/// rate vector, plus `delta` on every key.
pub fn upper_model_ic(ch: &Dmc, variant: IcVariant, res: usize, aux: &AuxSearch, delta: f64) -> Result<IcUpper> {
    if ch.role() != Role::Ic {
        return invalid("upper_model_ic requires an IC channel");
    }
    if !(delta > 0.0) {
        return invalid("delta must be positive");
    }
    let pool = aux_pool(ch.input_sizes()[0], aux)?;
    let per_point: Vec<[f64; 4]> = simplex_grid(ch.n_in(), res)
        .into_par_iter()
        .map(|input| {
            let mut best = [f64::INFINITY; 4];
            let mut best_sum = f64::INFINITY;
            for a in &pool {
                let r = minimal_rates(&ic_informations(ch, variant, &input, a));
                let s: f64 = r.iter().sum();
                if s < best_sum - 1e-12 {
                    best_sum = s;
                    best = r;
                }
            }
            best
        })
        .collect();
    let mut rates = [0.0f64; 4];
    for r in &per_point {
        for k in 0..4 {
            rates[k] = rates[k].max(r[k]);
        }
    }
    let mut rv = RateVector::new();
    for (key, r) in variant.keys().into_iter().zip(rates) {
        rv.set(key, Rate::Finite(r + delta))?;
    }
    let model = build_model(
        &ch.name,
        Side::Upper,
        &Geometry::of(&Channel::Discrete(ch.clone())),
        &rv,
        delta,
    )?
    .with_note(format!(
        "auxiliary pool of {} conditionals; input grid resolution {res}",
        pool.len()
    ))
    .with_note("certified-feasible rate vector; not claimed minimal");
    Ok(IcUpper {
        model,
        variant,
        rates,
        pool_size: pool.len(),
    })
}

/// Per-inequality minimum slack over the grid, choosing at each point the
/// pool member with the largest worst-case slack.
pub(crate) fn ic_margins(
    ch: &Dmc,
    variant: IcVariant,
    rates: &RateVector,
    res: usize,
    aux: &AuxSearch,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let pool = aux_pool(ch.input_sizes()[0], aux)?;
    let r: Vec<f64> = variant.keys().iter().map(|k| rates.get(k).to_f64()).collect();
    let lhs = [r[0] + r[1], r[1], r[2] + r[3], r[3]];
    let per: Vec<([f64; 4], Vec<f64>)> = simplex_grid(ch.n_in(), res)
        .into_par_iter()
        .map(|input| {
            let mut best = [f64::NEG_INFINITY; 4];
            let mut best_min = f64::NEG_INFINITY;
            for a in &pool {
                let rhs = ic_informations(ch, variant, &input, a);
                let s = [lhs[0] - rhs[0], lhs[1] - rhs[1], lhs[2] - rhs[2], lhs[3] - rhs[3]];
                let m = s.iter().copied().fold(f64::INFINITY, f64::min);
                if m > best_min {
                    best_min = m;
                    best = s;
                }
            }
            (best, input)
        })
        .collect();
    let mut out = vec![(f64::INFINITY, Vec::new()); 4];
    for (s, input) in per {
        for k in 0..4 {
            if s[k] < out[k].0 {
                out[k] = (s[k], input.clone());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::info::h2;

    const FAST: AuxSearch = AuxSearch { starts: 2, seed: 7 };

    #[test]
    fn pool_respects_cardinality() {
        let pool = aux_pool(2, &FAST).unwrap();
        assert!(pool.iter().all(|a| a.n_u1 * a.n_u2 <= 2));
        // (1,1): 1 map; (1,2) and (2,1): 4 maps and 2 random each.
        assert_eq!(pool.len(), 1 + 2 * (4 + 2));
        for a in &pool {
            for row in a.cond.chunks(a.n_u1 * a.n_u2) {
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn independent_links_reduce_to_point_to_point() {
        let (p1, p2) = (0.1, 0.2);
        let up = upper_model_ic(&Dmc::parallel_bsc_ic(p1, p2), IcVariant::One, 9, &FAST, 1e-4).unwrap();
        assert!(up.rates[0].abs() < 1e-12 && up.rates[1].abs() < 1e-12);
        assert!((up.rates[2] - (1.0 - h2(p1))).abs() < 1e-9, "{:?}", up.rates);
        assert!((up.rates[3] - (1.0 - h2(p2))).abs() < 1e-9, "{:?}", up.rates);
        assert!((up.model.rate(&[1], &[1, 2]).to_f64() - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn variant_two_mirrors_variant_one_on_symmetric_links() {
        let up = upper_model_ic(&Dmc::parallel_bsc_ic(0.1, 0.1), IcVariant::Two, 5, &FAST, 1e-4).unwrap();
        assert!((up.rates[2] - (1.0 - h2(0.1))).abs() < 1e-9);
        assert!((up.rates[3] - (1.0 - h2(0.1))).abs() < 1e-9);
        assert_eq!(IcVariant::infer(&up.model.rates), IcVariant::Two);
    }

    #[test]
    fn degenerate_second_receiver() {
        // Y2 independent of the inputs: constant U2 costs nothing on the
        // common edge.
        let base = Dmc::parallel_bsc_ic(0.1, 0.5);
        let up = upper_model_ic(&base, IcVariant::One, 5, &FAST, 1e-4).unwrap();
        assert!(up.rates[1] < 1e-12 && up.rates[3] < 1e-12);
        assert!((up.model.rate(&[1], &[1, 2]).to_f64() - 1e-4).abs() < 1e-15);
    }

    #[test]
    fn margins_of_construction_are_at_least_delta() {
        let ch = Dmc::parallel_bsc_ic(0.1, 0.2);
        let up = upper_model_ic(&ch, IcVariant::One, 5, &FAST, 1e-4).unwrap();
        for (s, _) in ic_margins(&ch, IcVariant::One, &up.model.rates, 5, &FAST).unwrap() {
            assert!(s >= 1e-4 - 1e-12, "{s}");
        }
    }
}
