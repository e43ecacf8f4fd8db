//! Channel capacities and achievable rate-region points.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::simplex_grid;
use crate::info::{entropy_of, Dmc, GaussianBc, GaussianMac, JointPmf, Pmf, Role, ZERO_PROB};

pub const BA_ITERATION_CAP: usize = 100_000;
pub const WITNESS_TOL: f64 = 1e-9;

/// `½ log2(1 + snr)`.
pub fn half_log1p(snr: f64) -> f64 {
    0.5 * (1.0 + snr).log2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityResult {
    pub capacity: f64,
    pub optimal_input: Pmf,
    pub lower_bracket: f64,
    pub upper_bracket: f64,
    pub iterations: usize,
}

fn divergences(ch: &Dmc, r: &[f64]) -> Vec<f64> {
    let q = ch.output_dist(r);
    (0..ch.n_in())
        .map(|x| {
            ch.row(x)
                .iter()
                .zip(&q)
                .filter(|(w, _)| **w > ZERO_PROB)
                .map(|(w, qy)| w * (w / qy).log2())
                .sum()
        })
        .collect()
}

/// Capacity of a point-to-point channel by alternating maximization.
///
/// Stops when the bracket `[log Σ r 2^D, max D]` is narrower than `tol`. The
/// reported capacity is I(X;Y) at the returned input, so it is achievable
/// and lies within `tol` of the maximum.
pub fn blahut_arimoto(ch: &Dmc, tol: f64) -> Result<CapacityResult> {
    blahut_arimoto_traced(ch, tol).map(|(r, _)| r)
}

/// As [`blahut_arimoto`], also returning I(X;Y) at every iterate.
pub fn blahut_arimoto_traced(ch: &Dmc, tol: f64) -> Result<(CapacityResult, Vec<f64>)> {
    if ch.role() != Role::P2p {
        return invalid(format!(
            "capacity requires p2p role, channel has role {}",
            ch.role().name()
        ));
    }
    if !(tol > 0.0) {
        return invalid("tolerance must be positive");
    }
    let n = ch.n_in();
    let mut r = vec![1.0 / n as f64; n];
    let mut trace = Vec::new();
    let mut lower = 0.0;
    let mut upper = f64::INFINITY;
    for it in 0..=BA_ITERATION_CAP {
        let objective = ch.mutual_information(&r);
        if let Some(&prev) = trace.last() {
            assert!(
                objective >= prev - 1e-12,
                "objective decreased from {prev} to {objective}"
            );
        }
        trace.push(objective);
        let d = divergences(ch, &r);
        let weights: Vec<f64> = r.iter().zip(&d).map(|(ri, di)| ri * di.exp2()).collect();
        let z: f64 = weights.iter().sum();
        lower = z.log2().max(objective);
        upper = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        r = weights.into_iter().map(|w| w / z).collect();
        if upper - lower < tol {
            // One more update never decreases the objective, and the
            // resulting input certifies the reported rate directly.
            let capacity = ch.mutual_information(&r).max(objective);
            let result = CapacityResult {
                capacity,
                optimal_input: Pmf::from_probs(normalize(r))?,
                lower_bracket: capacity,
                upper_bracket: upper.max(capacity),
                iterations: it,
            };
            return Ok((result, trace));
        }
    }
    Err(Error::NonConvergence {
        iterations: BA_ITERATION_CAP,
        lower,
        upper,
    })
}

/// The capacity of a point-to-point channel as a self-certifying point.
pub fn p2p_lower_point(ch: &Dmc, tol: f64) -> Result<RegionPoint> {
    let r = blahut_arimoto(ch, tol)?;
    Ok(RegionPoint {
        labels: vec!["C".into()],
        rates: vec![r.capacity],
        witness: Witness::P2pInput {
            input: r.optimal_input.probs().to_vec(),
        },
    })
}

fn normalize(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// The distributions that certify a [`RegionPoint`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Input distribution of a point-to-point channel.
    P2pInput { input: Vec<f64> },
    /// Time sharing over product inputs `p(x1|q) p(x2|q)` with weights `p(q)`.
    MacTimeSharing {
        inputs: Vec<(Vec<f64>, Vec<f64>)>,
        weights: Vec<f64>,
    },
    /// Superposition auxiliary `p(u) p(x|u)`.
    Superposition {
        p_u: Vec<f64>,
        p_x_given_u: Vec<Vec<f64>>,
    },
    /// Gaussian superposition with power fraction `alpha` for the cloud centre.
    GaussianBc { spec: GaussianBc, alpha: f64 },
    /// Gaussian successive-decoding corner; `first_decoded` is 1 or 2.
    GaussianMacCorner { spec: GaussianMac, first_decoded: u8 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub labels: Vec<String>,
    pub rates: Vec<f64>,
    pub witness: Witness,
}

impl RegionPoint {
    pub fn rate(&self, label: &str) -> Option<f64> {
        self.labels
            .iter()
            .position(|l| l == label)
            .map(|k| self.rates[k])
    }

    /// Re-derives the information quantities from the witness and checks the
    /// rates against them within [`WITNESS_TOL`]. Returns the worst excess.
    pub fn certify(&self, channel: Option<&Dmc>) -> Result<f64> {
        if self.rates.iter().any(|r| !r.is_finite() || *r < -WITNESS_TOL) {
            return invalid("region point has a negative or non-finite rate");
        }
        let worst = match &self.witness {
            Witness::P2pInput { input } => {
                let ch = channel.ok_or_else(|| Error::Invalid("p2p witness needs the channel".into()))?;
                Pmf::from_probs(input.clone())?;
                self.rates[0] - ch.mutual_information(input)
            }
            Witness::MacTimeSharing { inputs, weights } => {
                let ch = channel.ok_or_else(|| Error::Invalid("MAC witness needs the channel".into()))?;
                let (mut b1, mut b2, mut b12) = (0.0, 0.0, 0.0);
                for ((p1, p2), w) in inputs.iter().zip(weights) {
                    Pmf::from_probs(p1.clone())?;
                    Pmf::from_probs(p2.clone())?;
                    let (i1, i2, i12) = mac_informations(ch, p1, p2);
                    b1 += w * i1;
                    b2 += w * i2;
                    b12 += w * i12;
                }
                Pmf::from_probs(weights.clone())?;
                let (r1, r2) = (self.rates[0], self.rates[1]);
                (r1 - b1).max(r2 - b2).max(r1 + r2 - b12)
            }
            Witness::Superposition { p_u, p_x_given_u } => {
                let ch = channel.ok_or_else(|| Error::Invalid("BC witness needs the channel".into()))?;
                let (r0, r1) = superposition_rates(ch, p_u, p_x_given_u)?;
                (self.rates[0] - r0).abs().max((self.rates[1] - r1).abs())
            }
            Witness::GaussianBc { spec, alpha } => {
                let p = gaussian_bc_lower_point(spec, *alpha)?;
                max_abs_diff(&p.rates, &self.rates)
            }
            Witness::GaussianMacCorner { spec, first_decoded } => {
                let p = gaussian_mac_corner(spec, *first_decoded)?;
                max_abs_diff(&p.rates, &self.rates)
            }
        };
        if worst > WITNESS_TOL {
            return invalid(format!("witness does not certify rates (excess {worst})"));
        }
        Ok(worst)
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `(I(X1;Y|X2), I(X2;Y|X1), I(X1,X2;Y))` under the product input `p1 p2`.
pub fn mac_informations(ch: &Dmc, p1: &[f64], p2: &[f64]) -> (f64, f64, f64) {
    let (n1, n2) = (p1.len(), p2.len());
    let mut input = Vec::with_capacity(n1 * n2);
    for a in p1 {
        input.extend(p2.iter().map(|b| a * b));
    }
    let i12 = ch.mutual_information(&input);
    let h_y_given_x: f64 = (0..n1 * n2)
        .filter(|&x| input[x] > ZERO_PROB)
        .map(|x| input[x] * entropy_of(ch.row(x)))
        .sum();
    // H(Y|X2) and H(Y|X1) from conditional output distributions.
    let c = ch.n_out();
    let mut h_y_given_x2 = 0.0;
    for b in 0..n2 {
        if p2[b] <= ZERO_PROB {
            continue;
        }
        let mut q = vec![0.0; c];
        for a in 0..n1 {
            for (o, w) in q.iter_mut().zip(ch.row(a * n2 + b)) {
                *o += p1[a] * w;
            }
        }
        h_y_given_x2 += p2[b] * entropy_of(&q);
    }
    let mut h_y_given_x1 = 0.0;
    for a in 0..n1 {
        if p1[a] <= ZERO_PROB {
            continue;
        }
        let mut q = vec![0.0; c];
        for b in 0..n2 {
            for (o, w) in q.iter_mut().zip(ch.row(a * n2 + b)) {
                *o += p2[b] * w;
            }
        }
        h_y_given_x1 += p1[a] * entropy_of(&q);
    }
    (
        (h_y_given_x2 - h_y_given_x).max(0.0),
        (h_y_given_x1 - h_y_given_x).max(0.0),
        i12,
    )
}

/// Achievable MAC rate pairs: for every product input on the grid, the two
/// successive-decoding corners and their convex combinations at the weights
/// in `q_grid`. Duplicate rate pairs are removed; order follows the grid.
pub fn mac_lower_points(ch: &Dmc, q_grid: &[f64], input_res: usize) -> Result<Vec<RegionPoint>> {
    if ch.role() != Role::Mac {
        return invalid("mac_lower_points requires a MAC channel");
    }
    if q_grid.is_empty() || q_grid.iter().any(|q| !(0.0..=1.0).contains(q)) {
        return invalid("time-sharing grid must be nonempty with weights in [0,1]");
    }
    let sizes = ch.input_sizes();
    let g1 = simplex_grid(sizes[0], input_res);
    let g2 = simplex_grid(sizes[1], input_res);
    let pairs: Vec<(usize, usize)> = (0..g1.len())
        .flat_map(|a| (0..g2.len()).map(move |b| (a, b)))
        .collect();
    let per_input: Vec<Vec<RegionPoint>> = pairs
        .par_iter()
        .map(|&(a, b)| {
            let (p1, p2) = (&g1[a], &g2[b]);
            let (i1, i2, i12) = mac_informations(ch, p1, p2);
            let corner_a = [i1, (i12 - i1).max(0.0)];
            let corner_b = [(i12 - i2).max(0.0), i2];
            q_grid
                .iter()
                .map(|&l| RegionPoint {
                    labels: vec!["R1".into(), "R2".into()],
                    rates: vec![
                        l * corner_a[0] + (1.0 - l) * corner_b[0],
                        l * corner_a[1] + (1.0 - l) * corner_b[1],
                    ],
                    witness: Witness::MacTimeSharing {
                        inputs: vec![(p1.clone(), p2.clone())],
                        weights: vec![1.0],
                    },
                })
                .collect()
        })
        .collect();
    Ok(dedup_points(per_input.into_iter().flatten()))
}

fn dedup_points(points: impl Iterator<Item = RegionPoint>) -> Vec<RegionPoint> {
    let mut seen = std::collections::BTreeSet::new();
    points
        .filter(|p| {
            let key: Vec<i64> = p.rates.iter().map(|r| (r * 1e12).round() as i64).collect();
            seen.insert(key)
        })
        .collect()
}

/// Combines MAC points with time-sharing weights into one point whose
/// witness lists every constituent input.
pub fn time_share(points: &[RegionPoint], weights: &[f64]) -> Result<RegionPoint> {
    Pmf::from_probs(weights.to_vec())?;
    if points.len() != weights.len() || points.is_empty() {
        return invalid("one weight per point required");
    }
    let mut inputs = Vec::new();
    let mut ws = Vec::new();
    let mut rates = vec![0.0; 2];
    for (p, &w) in points.iter().zip(weights) {
        let Witness::MacTimeSharing { inputs: pi, weights: pw } = &p.witness else {
            return invalid("time sharing applies to MAC points only");
        };
        inputs.extend(pi.iter().cloned());
        ws.extend(pw.iter().map(|x| x * w));
        rates[0] += w * p.rates[0];
        rates[1] += w * p.rates[1];
    }
    Ok(RegionPoint {
        labels: vec!["R1".into(), "R2".into()],
        rates,
        witness: Witness::MacTimeSharing { inputs, weights: ws },
    })
}

/// Keeps the points not dominated in every coordinate by another point.
pub fn pareto_front(points: &[RegionPoint]) -> Vec<RegionPoint> {
    points
        .iter()
        .filter(|p| {
            !points.iter().any(|q| {
                q.rates.iter().zip(&p.rates).all(|(a, b)| a >= b)
                    && q.rates.iter().zip(&p.rates).any(|(a, b)| a > b)
            })
        })
        .cloned()
        .collect()
}

/// An auxiliary for superposition coding over a broadcast channel.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpositionAux {
    pub p_u: Vec<f64>,
    pub p_x_given_u: Vec<Vec<f64>>,
}

impl SuperpositionAux {
    /// Binary cloud centre `U` uniform and `X = U xor Bernoulli(alpha)`.
    pub fn binary_symmetric(alpha: f64) -> Self {
        SuperpositionAux {
            p_u: vec![0.5, 0.5],
            p_x_given_u: vec![vec![1.0 - alpha, alpha], vec![alpha, 1.0 - alpha]],
        }
    }
}

/// Grid over `p(u) p(x|u)` with `|U| = |X|`.
pub fn superposition_grid(nx: usize, res: usize) -> Vec<SuperpositionAux> {
    let pu = simplex_grid(nx, res);
    let px = simplex_grid(nx, res);
    let mut conds: Vec<Vec<Vec<f64>>> = vec![vec![]];
    for _ in 0..nx {
        conds = conds
            .into_iter()
            .flat_map(|c| {
                px.iter().map(move |row| {
                    let mut c = c.clone();
                    c.push(row.clone());
                    c
                })
            })
            .collect();
    }
    pu.iter()
        .flat_map(|p| {
            conds.iter().map(move |c| SuperpositionAux {
                p_u: p.clone(),
                p_x_given_u: c.clone(),
            })
        })
        .collect()
}

/// `(R0, R1) = (min(I(U;Y2), I(U;Y1)), I(X;Y1|U))` for a BC witness.
pub fn superposition_rates(ch: &Dmc, p_u: &[f64], p_x_given_u: &[Vec<f64>]) -> Result<(f64, f64)> {
    if ch.role() != Role::Bc {
        return invalid("superposition rates require a BC channel");
    }
    let nx = ch.n_in();
    if p_x_given_u.len() != p_u.len() || p_x_given_u.iter().any(|r| r.len() != nx) {
        return invalid("witness shape does not match the channel");
    }
    Pmf::from_probs(p_u.to_vec())?;
    for r in p_x_given_u {
        Pmf::from_probs(r.clone())?;
    }
    let sizes = ch.output_sizes();
    let c = ch.n_out();
    let mut t = Vec::with_capacity(p_u.len() * nx * c);
    for (u, pu) in p_u.iter().enumerate() {
        for x in 0..nx {
            let pux = pu * p_x_given_u[u][x];
            t.extend(ch.row(x).iter().map(|w| pux * w));
        }
    }
    let j = JointPmf::from_shape(&[p_u.len(), nx, sizes[0], sizes[1]], normalize(t))?;
    let r0 = j
        .mutual_information(&[0], &[3])?
        .min(j.mutual_information(&[0], &[2])?);
    let r1 = j.conditional_mi(&[1], &[2], &[0])?;
    Ok((r0, r1))
}

/// Superposition-coding points `(R0, R1)` for a broadcast channel, one per
/// auxiliary, in input order. Receiver 2 is the weaker receiver.
pub fn degraded_bc_lower_points(ch: &Dmc, aux_grid: &[SuperpositionAux]) -> Result<Vec<RegionPoint>> {
    if ch.role() != Role::Bc {
        return invalid("degraded_bc_lower_points requires a BC channel");
    }
    aux_grid
        .par_iter()
        .map(|a| {
            let (r0, r1) = superposition_rates(ch, &a.p_u, &a.p_x_given_u)?;
            Ok(RegionPoint {
                labels: vec!["R0".into(), "R1".into()],
                rates: vec![r0, r1],
                witness: Witness::Superposition {
                    p_u: a.p_u.clone(),
                    p_x_given_u: a.p_x_given_u.clone(),
                },
            })
        })
        .collect()
}

/// Superposition point for the Gaussian broadcast channel: `R1` to the
/// stronger receiver, `R2` to the weaker receiver, which treats the private
/// layer as noise.
pub fn gaussian_bc_lower_point(spec: &GaussianBc, alpha: f64) -> Result<RegionPoint> {
    spec.validate()?;
    if !(0.0..=1.0).contains(&alpha) {
        return invalid(format!("alpha must lie in [0,1], got {alpha}"));
    }
    let p = spec.power;
    let r1 = half_log1p((1.0 - alpha) * p / spec.eff_noise1());
    let r2 = half_log1p(alpha * p / ((1.0 - alpha) * p + spec.eff_noise2()));
    Ok(RegionPoint {
        labels: vec!["R1".into(), "R2".into()],
        rates: vec![r1, r2],
        witness: Witness::GaussianBc { spec: *spec, alpha },
    })
}

fn gaussian_mac_corner(spec: &GaussianMac, first_decoded: u8) -> Result<RegionPoint> {
    spec.validate()?;
    let (p1, p2, n) = (spec.p1, spec.p2, spec.noise);
    let rates = match first_decoded {
        2 => vec![half_log1p(p1 / n), half_log1p(p2 / (p1 + n))],
        1 => vec![half_log1p(p1 / (p2 + n)), half_log1p(p2 / n)],
        _ => return invalid("decoding order must be 1 or 2"),
    };
    Ok(RegionPoint {
        labels: vec!["R1".into(), "R2".into()],
        rates,
        witness: Witness::GaussianMacCorner {
            spec: *spec,
            first_decoded,
        },
    })
}

/// Corner `(½log(1+P1/N), ½log(1+P2/(P1+N)))` of the Gaussian MAC region.
pub fn gaussian_mac_lower_corner(spec: &GaussianMac) -> Result<RegionPoint> {
    gaussian_mac_corner(spec, 2)
}

/// The opposite corner `(½log(1+P1/(P2+N)), ½log(1+P2/N))`.
pub fn gaussian_mac_other_corner(spec: &GaussianMac) -> Result<RegionPoint> {
    gaussian_mac_corner(spec, 1)
}
