//! Monte-Carlo realization of typical-set channel emulation codes.
//!
//! A codebook of `floor(2^{NR})` output blocks is drawn i.i.d. from the
//! output marginal. Given an input block the encoder emits a uniformly
//! chosen codeword jointly typical with it, or the first codeword when none
//! is.

mod bc;
mod experiment;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::info::{entropy_of, Dmc, Role, ZERO_PROB};
use crate::rng::stream;

pub use bc::{bc_experiment, build_bc_emulator, emulate_bc, BcEmulation, BcEmulator, BcParams, BcRow, BcSource};
pub use experiment::{fit_slopes, threshold_experiment, EmulationStats, ExceedRate, ExperimentConfig, SlopeFit, MIN_TRIALS};

/// Typicality slack used when none is given.
pub const DEFAULT_EPS: f64 = 0.0125;
/// Samples behind each empirical threshold.
pub const CALIBRATION_SAMPLES: usize = 10_000;
/// Default cap on `codeword_count * N` symbols.
pub const DEFAULT_MEM_BUDGET: u64 = 10_000_000;

const TAG_CALIBRATE: u64 = 1;
const TAG_CODEBOOK: u64 = 2;
const TAG_INPUT: u64 = 3;
const TAG_TIE: u64 = 4;
const TAG_PRIVATE: u64 = 5;

/// `|-(1/N) log p(block) - H|` for an i.i.d. source `dist`; infinite when a
/// symbol has zero probability.
pub fn typicality_stat(block: &[usize], dist: &[f64]) -> f64 {
    if block.is_empty() {
        return 0.0;
    }
    let mut s = 0.0;
    for &b in block {
        let p = dist.get(b).copied().unwrap_or(0.0);
        if p <= ZERO_PROB {
            return f64::INFINITY;
        }
        s -= p.log2();
    }
    (s / block.len() as f64 - entropy_of(dist)).abs()
}

/// An i.i.d. source with per-symbol log-probabilities and entropy.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Marginal {
    pub probs: Vec<f64>,
    logs: Vec<f64>,
    pub entropy: f64,
}

impl Marginal {
    pub fn new(probs: Vec<f64>) -> Self {
        let logs = probs
            .iter()
            .map(|&p| if p > ZERO_PROB { p.log2() } else { f64::NEG_INFINITY })
            .collect();
        Marginal {
            entropy: entropy_of(&probs),
            probs,
            logs,
        }
    }

    /// Typicality statistic from a symbol sequence given as indices.
    pub fn stat<I: IntoIterator<Item = usize>>(&self, symbols: I, n: usize) -> f64 {
        let s: f64 = symbols.into_iter().map(|b| self.logs[b]).sum();
        if s == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        (-s / n as f64 - self.entropy).abs()
    }

    pub fn sampler(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(&self.probs).expect("a distribution has positive mass")
    }
}

/// Input, output and joint statistics of a point-to-point channel under an
/// input distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct P2pSource {
    pub nx: usize,
    pub ny: usize,
    pub(crate) x: Marginal,
    pub(crate) y: Marginal,
    pub(crate) xy: Marginal,
    /// `W(y|x)`, row-major.
    pub(crate) w: Vec<f64>,
}

impl P2pSource {
    pub fn new(ch: &Dmc, input: &[f64]) -> Result<Self> {
        if ch.role() != Role::P2p {
            return invalid("point-to-point emulators require a p2p channel");
        }
        if input.len() != ch.n_in() {
            return invalid("input distribution size does not match the channel");
        }
        crate::info::Pmf::from_probs(input.to_vec())?;
        let joint = ch.joint_raw(input);
        Ok(P2pSource {
            nx: ch.n_in(),
            ny: ch.n_out(),
            x: Marginal::new(input.to_vec()),
            y: Marginal::new(ch.output_dist(input)),
            xy: Marginal::new(joint),
            w: ch.transition().to_vec(),
        })
    }

    pub fn mutual_information(&self) -> f64 {
        self.x.entropy + self.y.entropy - self.xy.entropy
    }

    fn stats(&self, x: &[usize], y: &[usize]) -> (f64, f64, f64) {
        let n = x.len();
        (
            self.x.stat(x.iter().copied(), n),
            self.y.stat(y.iter().copied(), n),
            self.xy.stat(x.iter().zip(y).map(|(&a, &b)| a * self.ny + b), n),
        )
    }
}

/// Thresholds of the joint-typicality test at one block length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalityParams {
    pub n: usize,
    pub eps: f64,
    /// Empirical stand-in for the output and joint thresholds.
    pub a: f64,
    /// Exponent multiplier of the restricted input set (reported only).
    pub restriction: f64,
}

/// `(1+eps)` times the inverted-CDF quantile at level `1 - 2^{-6N eps}`.
pub(crate) fn quantile_threshold(mut samples: Vec<f64>, n: usize, eps: f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let level = 1.0 - (-6.0 * n as f64 * eps).exp2();
    let k = ((level * samples.len() as f64).ceil() as usize).clamp(1, samples.len());
    (1.0 + eps) * samples[k - 1]
}

impl TypicalityParams {
    /// Calibrates the output/joint threshold from `CALIBRATION_SAMPLES`
    /// seeded i.i.d. block pairs.
    pub fn calibrate(src: &P2pSource, n: usize, eps: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("block length must be at least 1");
        }
        if !(eps > 0.0) {
            return invalid("eps must be positive");
        }
        let mut rng = stream(seed, &[TAG_CALIBRATE, n as u64]);
        let sx = src.x.sampler();
        let mut samples = Vec::with_capacity(CALIBRATION_SAMPLES);
        let mut x = vec![0; n];
        let mut y = vec![0; n];
        for _ in 0..CALIBRATION_SAMPLES {
            for k in 0..n {
                x[k] = sx.sample(&mut rng);
                y[k] = sample_row(&src.w[x[k] * src.ny..(x[k] + 1) * src.ny], &mut rng);
            }
            let (_, fy, fxy) = src.stats(&x, &y);
            samples.push(fy.max(fxy));
        }
        Ok(TypicalityParams {
            n,
            eps,
            a: quantile_threshold(samples, n, eps),
            restriction: 3.0 * eps,
        })
    }

    fn accepts(&self, fx: f64, fy: f64, fxy: f64) -> bool {
        fx <= self.eps && fy <= self.a && fxy <= self.a
    }
}

pub(crate) fn sample_row<R: Rng>(row: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &p) in row.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Single,
    BcCommon,
    BcPrivate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmulatorCodebook {
    pub rate: f64,
    pub n: usize,
    pub codeword_count: usize,
    /// Codewords back to back, `n` symbols each.
    pub codewords: Vec<usize>,
    pub stage: Stage,
    pub seed: u64,
}

impl EmulatorCodebook {
    pub fn codeword(&self, k: usize) -> &[usize] {
        &self.codewords[k * self.n..(k + 1) * self.n]
    }
}

/// `floor(2^{NR})`, at least 1, with the symbol count checked against the
/// budget.
pub(crate) fn codeword_count(n: usize, rate: f64, budget: u64) -> Result<usize> {
    if !(rate >= 0.0) || !rate.is_finite() {
        return invalid("emulator rates must be finite and nonnegative");
    }
    let count = (n as f64 * rate).exp2().floor().max(1.0);
    let required = count * n as f64;
    if required > budget as f64 {
        return Err(Error::Budget { required, budget });
    }
    Ok(count as usize)
}

/// Draws `count` codewords i.i.d. from `dist` on the stream for `parts`.
/// Codebooks from the same stream are nested: a smaller one is a prefix.
pub(crate) fn draw_codebook(
    dist: &Marginal,
    n: usize,
    count: usize,
    seed: u64,
    parts: &[u64],
) -> Vec<usize> {
    let mut rng = stream(seed, parts);
    let s = dist.sampler();
    (0..count * n).map(|_| s.sample(&mut rng)).collect()
}

/// Codebook for a point-to-point emulator, drawn from the output marginal.
pub fn build_p2p_emulator(
    src: &P2pSource,
    rate: f64,
    params: &TypicalityParams,
    seed: u64,
    budget: u64,
) -> Result<EmulatorCodebook> {
    if !(rate > 0.0) {
        return invalid("emulator rate must be positive");
    }
    let count = codeword_count(params.n, rate, budget)?;
    Ok(EmulatorCodebook {
        rate,
        n: params.n,
        codeword_count: count,
        codewords: draw_codebook(&src.y, params.n, count, seed, &[TAG_CODEBOOK, params.n as u64]),
        stage: Stage::Single,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Emulation {
    pub y: Vec<usize>,
    /// Zero-based index of the emitted codeword.
    pub index: usize,
    pub failed: bool,
    pub matches: usize,
}

/// Runs the encoder on the first `count` codewords of `cb`.
pub(crate) fn emulate_prefix(
    src: &P2pSource,
    cb: &EmulatorCodebook,
    count: usize,
    x: &[usize],
    params: &TypicalityParams,
    seed: u64,
) -> Emulation {
    let fx = src.x.stat(x.iter().copied(), x.len());
    let typical: Vec<usize> = if fx > params.eps {
        Vec::new()
    } else {
        (0..count)
            .filter(|&k| {
                let (_, fy, fxy) = src.stats(x, cb.codeword(k));
                params.accepts(fx, fy, fxy)
            })
            .collect()
    };
    let (index, failed) = if typical.is_empty() {
        (0, true)
    } else {
        let mut rng = stream(seed, &[TAG_TIE]);
        (typical[rng.random_range(0..typical.len())], false)
    };
    Emulation {
        y: cb.codeword(index).to_vec(),
        index,
        failed,
        matches: typical.len(),
    }
}

/// Emits a codeword jointly typical with `x`, uniformly among matches, or
/// codeword 0 when none matches.
pub fn emulate(
    src: &P2pSource,
    cb: &EmulatorCodebook,
    x: &[usize],
    params: &TypicalityParams,
    seed: u64,
) -> Result<Emulation> {
    if x.len() != cb.n || params.n != cb.n {
        return invalid("input block length must equal the codebook block length");
    }
    if x.iter().any(|&a| a >= src.nx) {
        return invalid("input symbol outside the alphabet");
    }
    Ok(emulate_prefix(src, cb, cb.codeword_count, x, params, seed))
}

pub(crate) fn draw_input(src: &Marginal, n: usize, seed: u64, parts: &[u64]) -> Vec<usize> {
    let mut p = vec![TAG_INPUT];
    p.extend_from_slice(parts);
    let mut rng = stream(seed, &p);
    let s = src.sampler();
    (0..n).map(|_| s.sample(&mut rng)).collect()
}

fn log2_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).log2()).sum()
}

/// Compositions of `total` into `parts` nonnegative parts.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Most conditional types enumerated per input type.
pub const TYPE_ENUMERATION_CAP: f64 = 2e6;

/// Probability that one codeword drawn from the output marginal is jointly
/// typical with an input block of type `counts`, by enumeration of
/// conditional types. `None` when the enumeration is too large.
pub(crate) fn typical_probability(src: &P2pSource, counts: &[usize], params: &TypicalityParams) -> Option<f64> {
    let n: usize = counts.iter().sum();
    let fx = src.x.stat(counts.iter().enumerate().flat_map(|(a, &c)| std::iter::repeat_n(a, c)), n);
    if fx > params.eps {
        return Some(0.0);
    }
    let per: Vec<Vec<Vec<usize>>> = counts.iter().map(|&c| compositions(c, src.ny)).collect();
    let total: f64 = per.iter().map(|p| p.len() as f64).product();
    if total > TYPE_ENUMERATION_CAP {
        return None;
    }
    let mut q = 0.0;
    let mut idx = vec![0usize; counts.len()];
    loop {
        let mut ny = vec![0usize; src.ny];
        let mut log_mult = 0.0;
        let mut lxy = 0.0;
        for (a, &i) in idx.iter().enumerate() {
            let comp = &per[a][i];
            let mut left = counts[a];
            for (b, &c) in comp.iter().enumerate() {
                ny[b] += c;
                log_mult += log2_binomial(left, c);
                left -= c;
                if c > 0 {
                    lxy += c as f64 * src.xy.logs[a * src.ny + b];
                }
            }
        }
        let ly: f64 = ny.iter().enumerate().filter(|(_, &c)| c > 0).map(|(b, &c)| c as f64 * src.y.logs[b]).sum();
        let fy = (-ly / n as f64 - src.y.entropy).abs();
        let fxy = if lxy == f64::NEG_INFINITY {
            f64::INFINITY
        } else {
            (-lxy / n as f64 - src.xy.entropy).abs()
        };
        if fy <= params.a && fxy <= params.a && ly > f64::NEG_INFINITY {
            q += (log_mult + ly).exp2();
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Some(q.min(1.0));
            }
            idx[k] += 1;
            if idx[k] < per[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Per-symbol log-ratio `(1/N) log(p̂(y|x) / p(y|x))` between the random
/// emulator's conditional output law and the channel's, where `q` is the
/// typical-set probability for `x` and `count` the codebook size.
pub(crate) fn log_ratio(src: &P2pSource, x: &[usize], y: &[usize], typical: bool, q: f64, count: usize) -> f64 {
    let n = x.len() as f64;
    let ly: f64 = y.iter().map(|&b| src.y.logs[b]).sum();
    let lw: f64 = x.iter().zip(y).map(|(&a, &b)| src.w[a * src.ny + b].log2()).sum();
    if lw == f64::NEG_INFINITY {
        return f64::INFINITY;
    }
    let k = count as f64;
    let factor = if typical {
        // (1 - (1-q)^K) / q, stably.
        -(k * (-q).ln_1p()).exp_m1() / q
    } else {
        (k - 1.0) * (-q).ln_1p() / std::f64::consts::LN_2
    };
    let lfac = if typical { factor.log2() } else { factor };
    (ly + lfac - lw) / n
}

/// Total-variation distances of the joint type of one block pair: against
/// the input type times the channel, and against the input distribution
/// times the channel.
pub(crate) fn type_distances(src: &P2pSource, x: &[usize], y: &[usize]) -> (f64, f64) {
    let n = x.len() as f64;
    let mut joint = vec![0.0; src.nx * src.ny];
    let mut tx = vec![0.0; src.nx];
    for (&a, &b) in x.iter().zip(y) {
        joint[a * src.ny + b] += 1.0 / n;
        tx[a] += 1.0 / n;
    }
    let mut d_type = 0.0;
    let mut d_model = 0.0;
    for a in 0..src.nx {
        for b in 0..src.ny {
            let w = src.w[a * src.ny + b];
            d_type += (joint[a * src.ny + b] - tx[a] * w).abs();
            d_model += (joint[a * src.ny + b] - src.x.probs[a] * w).abs();
        }
    }
    (d_type / 2.0, d_model / 2.0)
}
