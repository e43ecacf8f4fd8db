//! Two-stage emulation of a broadcast channel: a common codebook matched
//! against the weaker output, then a private codebook superposed on the
//! chosen common codeword.

use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{
    codeword_count, draw_codebook, draw_input, quantile_threshold, sample_row, EmulatorCodebook,
    Marginal, Stage, TypicalityParams, CALIBRATION_SAMPLES, TAG_CALIBRATE, TAG_CODEBOOK,
    TAG_PRIVATE, TAG_TIE,
};
use crate::error::{invalid, Error, Result};
use crate::info::{Dmc, Role, ZERO_PROB};
use crate::rng::{derive_seed, stream};

/// Marginals of `(X, Y1, Y2)` for a broadcast channel under an input law.
#[derive(Debug, Clone, PartialEq)]
pub struct BcSource {
    pub nx: usize,
    pub n1: usize,
    pub n2: usize,
    x: Marginal,
    y2: Marginal,
    xy2: Marginal,
    y12: Marginal,
    xy12: Marginal,
    /// `p(y1|y2)`, one row per `y2`.
    y1_given_y2: Vec<f64>,
    w: Vec<f64>,
}

impl BcSource {
    pub fn new(ch: &Dmc, input: &[f64]) -> Result<Self> {
        if ch.role() != Role::Bc {
            return invalid("two-stage emulators require a broadcast channel");
        }
        if input.len() != ch.n_in() {
            return invalid("input distribution size does not match the channel");
        }
        crate::info::Pmf::from_probs(input.to_vec())?;
        let sizes = ch.output_sizes();
        let (n1, n2) = (sizes[0], sizes[1]);
        let joint = ch.joint_raw(input);
        let y12 = ch.output_dist(input);
        let mut y2 = vec![0.0; n2];
        let mut xy2 = vec![0.0; ch.n_in() * n2];
        for x in 0..ch.n_in() {
            for a in 0..n1 {
                for b in 0..n2 {
                    let p = joint[(x * n1 + a) * n2 + b];
                    y2[b] += p;
                    xy2[x * n2 + b] += p;
                }
            }
        }
        let mut cond = vec![0.0; n2 * n1];
        for b in 0..n2 {
            for a in 0..n1 {
                cond[b * n1 + a] = if y2[b] > ZERO_PROB {
                    y12[a * n2 + b] / y2[b]
                } else {
                    1.0 / n1 as f64
                };
            }
        }
        Ok(BcSource {
            nx: ch.n_in(),
            n1,
            n2,
            x: Marginal::new(input.to_vec()),
            y2: Marginal::new(y2),
            xy2: Marginal::new(xy2),
            y12: Marginal::new(y12),
            xy12: Marginal::new(joint),
            y1_given_y2: cond,
            w: ch.transition().to_vec(),
        })
    }

    /// `I(X;Y2)` and `I(X;Y1|Y2)`.
    pub fn stage_informations(&self) -> (f64, f64) {
        let i2 = self.x.entropy + self.y2.entropy - self.xy2.entropy;
        let i12 = self.x.entropy + self.y12.entropy - self.xy12.entropy;
        (i2, i12 - i2)
    }

    fn stage1_stats(&self, x: &[usize], y2: &[usize]) -> (f64, f64) {
        let n = x.len();
        (
            self.y2.stat(y2.iter().copied(), n),
            self.xy2.stat(x.iter().zip(y2).map(|(&a, &b)| a * self.n2 + b), n),
        )
    }

    fn stage2_stats(&self, x: &[usize], y1: &[usize], y2: &[usize]) -> (f64, f64) {
        let n = x.len();
        (
            self.y12.stat(y1.iter().zip(y2).map(|(&a, &b)| a * self.n2 + b), n),
            self.xy12.stat(
                x.iter()
                    .zip(y1.iter().zip(y2))
                    .map(|(&x, (&a, &b))| (x * self.n1 + a) * self.n2 + b),
                n,
            ),
        )
    }
}

/// Thresholds for the two stages. Stage 1 tests `(x, y2)` against
/// `p(x, y2)`; stage 2 tests `(x, y1, y2)` against `p(x, y1, y2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BcParams {
    pub stage1: TypicalityParams,
    pub stage2: TypicalityParams,
}

impl BcParams {
    pub fn calibrate(src: &BcSource, n: usize, eps: f64, seed: u64) -> Result<Self> {
        if n == 0 {
            return invalid("block length must be at least 1");
        }
        if !(eps > 0.0) {
            return invalid("eps must be positive");
        }
        let mut rng = stream(seed, &[TAG_CALIBRATE, n as u64, 2]);
        let sx = src.x.sampler();
        let no = src.n1 * src.n2;
        let (mut s1, mut s2) = (Vec::with_capacity(CALIBRATION_SAMPLES), Vec::with_capacity(CALIBRATION_SAMPLES));
        let (mut x, mut y1, mut y2) = (vec![0; n], vec![0; n], vec![0; n]);
        for _ in 0..CALIBRATION_SAMPLES {
            for k in 0..n {
                x[k] = sx.sample(&mut rng);
                let o = sample_row(&src.w[x[k] * no..(x[k] + 1) * no], &mut rng);
                y1[k] = o / src.n2;
                y2[k] = o % src.n2;
            }
            let (f2, fx2) = src.stage1_stats(&x, &y2);
            let (f12, fx12) = src.stage2_stats(&x, &y1, &y2);
            s1.push(f2.max(fx2));
            s2.push(f12.max(fx12));
        }
        let mk = |samples| TypicalityParams {
            n,
            eps,
            a: quantile_threshold(samples, n, eps),
            restriction: 3.0 * eps,
        };
        Ok(BcParams {
            stage1: mk(s1),
            stage2: mk(s2),
        })
    }
}

/// A common codebook with private codebooks drawn on demand from a seed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcEmulator {
    pub n: usize,
    pub common_rate: f64,
    pub private_rate: f64,
    pub private_count: usize,
    pub common: EmulatorCodebook,
    pub seed: u64,
}

impl BcEmulator {
    /// Private codebook for common index `w0`, drawn from `p(y1|y2)` along
    /// the common codeword.
    pub fn private_codebook(&self, src: &BcSource, w0: usize) -> EmulatorCodebook {
        let y2 = self.common.codeword(w0);
        let mut rng = stream(self.seed, &[TAG_PRIVATE, self.n as u64, w0 as u64]);
        let mut codewords = Vec::with_capacity(self.private_count * self.n);
        for _ in 0..self.private_count {
            for &b in y2 {
                codewords.push(sample_row(&src.y1_given_y2[b * src.n1..(b + 1) * src.n1], &mut rng));
            }
        }
        EmulatorCodebook {
            rate: self.private_rate,
            n: self.n,
            codeword_count: self.private_count,
            codewords,
            stage: Stage::BcPrivate,
            seed: self.seed,
        }
    }
}

/// Builds the common codebook; the full family of private codebooks
/// `floor(2^{N R0}) * floor(2^{N R1}) * N` symbols must fit the budget.
pub fn build_bc_emulator(
    src: &BcSource,
    common_rate: f64,
    private_rate: f64,
    params: &BcParams,
    seed: u64,
    budget: u64,
) -> Result<BcEmulator> {
    let n = params.stage1.n;
    let k0 = codeword_count(n, common_rate, budget)?;
    let k1 = codeword_count(n, private_rate, budget)?;
    let required = k0 as f64 * k1 as f64 * n as f64;
    if required > budget as f64 {
        return Err(Error::Budget { required, budget });
    }
    Ok(BcEmulator {
        n,
        common_rate,
        private_rate,
        private_count: k1,
        common: EmulatorCodebook {
            rate: common_rate,
            n,
            codeword_count: k0,
            codewords: draw_codebook(&src.y2, n, k0, seed, &[TAG_CODEBOOK, n as u64, 2]),
            stage: Stage::BcCommon,
            seed,
        },
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcEmulation {
    pub y1: Vec<usize>,
    pub y2: Vec<usize>,
    pub common_index: usize,
    pub private_index: usize,
    pub stage1_failed: bool,
    pub stage2_failed: bool,
}

impl BcEmulation {
    pub fn failed(&self) -> bool {
        self.stage1_failed || self.stage2_failed
    }
}

fn pick<R: Rng>(matches: &[usize], rng: &mut R) -> (usize, bool) {
    if matches.is_empty() {
        (0, true)
    } else {
        (matches[rng.random_range(0..matches.len())], false)
    }
}

pub fn emulate_bc(
    src: &BcSource,
    em: &BcEmulator,
    x: &[usize],
    params: &BcParams,
    seed: u64,
) -> Result<BcEmulation> {
    if x.len() != em.n {
        return invalid("input block length must equal the codebook block length");
    }
    if x.iter().any(|&a| a >= src.nx) {
        return invalid("input symbol outside the alphabet");
    }
    let mut rng = stream(seed, &[TAG_TIE, 2]);
    let fx = src.x.stat(x.iter().copied(), x.len());
    let x_ok = fx <= params.stage1.eps;
    let common: Vec<usize> = if x_ok {
        (0..em.common.codeword_count)
            .filter(|&k| {
                let (f2, fx2) = src.stage1_stats(x, em.common.codeword(k));
                f2 <= params.stage1.a && fx2 <= params.stage1.a
            })
            .collect()
    } else {
        Vec::new()
    };
    let (w0, stage1_failed) = pick(&common, &mut rng);
    let y2 = em.common.codeword(w0).to_vec();
    let private = em.private_codebook(src, w0);
    let matches: Vec<usize> = if x_ok && !stage1_failed {
        (0..private.codeword_count)
            .filter(|&k| {
                let (f12, fx12) = src.stage2_stats(x, private.codeword(k), &y2);
                f12 <= params.stage2.a && fx12 <= params.stage2.a
            })
            .collect()
    } else {
        Vec::new()
    };
    let (w1, stage2_failed) = pick(&matches, &mut rng);
    Ok(BcEmulation {
        y1: private.codeword(w1).to_vec(),
        y2,
        common_index: w0,
        private_index: w1,
        stage1_failed,
        stage2_failed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BcRow {
    pub n: usize,
    pub trials: usize,
    pub stage1_failure_rate: f64,
    /// Stage-2 failures among trials whose first stage succeeded.
    pub stage2_failure_rate: f64,
    pub failure_rate: f64,
    pub stage1_threshold: f64,
    pub stage2_threshold: f64,
}

/// Failure rates of independent two-stage emulators, one per trial.
#[allow(clippy::too_many_arguments)]
pub fn bc_experiment(
    src: &BcSource,
    common_rate: f64,
    private_rate: f64,
    lengths: &[usize],
    trials: usize,
    eps: f64,
    seed: u64,
    budget: u64,
) -> Result<Vec<BcRow>> {
    if trials == 0 {
        return invalid("at least one trial is needed");
    }
    let mut rows = Vec::new();
    for &n in lengths {
        let params = BcParams::calibrate(src, n, eps, seed)?;
        let outcomes: Vec<(bool, bool)> = (0..trials)
            .into_par_iter()
            .map(|t| {
                let s = derive_seed(seed, &[n as u64, t as u64]);
                let em = build_bc_emulator(src, common_rate, private_rate, &params, s, budget)?;
                let x = draw_input(&src.x, n, seed, &[n as u64, t as u64]);
                let e = emulate_bc(src, &em, &x, &params, s)?;
                Ok((e.stage1_failed, e.stage2_failed))
            })
            .collect::<Result<_>>()?;
        let s1 = outcomes.iter().filter(|o| o.0).count();
        let s2 = outcomes.iter().filter(|o| !o.0 && o.1).count();
        let passed = trials - s1;
        rows.push(BcRow {
            n,
            trials,
            stage1_failure_rate: s1 as f64 / trials as f64,
            stage2_failure_rate: if passed > 0 { s2 as f64 / passed as f64 } else { f64::NAN },
            failure_rate: (s1 + s2) as f64 / trials as f64,
            stage1_threshold: params.stage1.a,
            stage2_threshold: params.stage2.a,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emulator::{DEFAULT_EPS, DEFAULT_MEM_BUDGET};

    #[test]
    fn constant_weak_output_passes_stage_one() {
        let ch = Dmc::from_rows("bc", Role::Bc, &[2], &[2, 1], vec![0.9, 0.1, 0.1, 0.9]);
        let src = BcSource::new(&ch, &[0.5, 0.5]).unwrap();
        assert!(src.stage_informations().0.abs() < 1e-12);
        let params = BcParams::calibrate(&src, 8, DEFAULT_EPS, 1).unwrap();
        let em = build_bc_emulator(&src, 0.01, 0.9, &params, 3, DEFAULT_MEM_BUDGET).unwrap();
        assert_eq!(em.common.codeword_count, 1);
        for t in 0..20u64 {
            let x = draw_input(&src.x, 8, 5, &[t]);
            let e = emulate_bc(&src, &em, &x, &params, t).unwrap();
            assert!(!e.stage1_failed);
            assert_eq!(e.y2, vec![0; 8]);
        }
    }

    #[test]
    fn common_rate_below_information_mostly_fails() {
        let src = BcSource::new(&Dmc::bsc_bc(0.01, 0.01, true), &[0.5, 0.5]).unwrap();
        let (i2, _) = src.stage_informations();
        let rows = bc_experiment(&src, i2 - 0.2, 0.0, &[14], 500, DEFAULT_EPS, 11, DEFAULT_MEM_BUDGET).unwrap();
        assert!(rows[0].stage1_failure_rate > 0.9, "{rows:?}");
    }

    #[test]
    fn failure_drops_with_block_length_above_information() {
        let src = BcSource::new(&Dmc::bsc_bc(0.1, 0.1, true), &[0.5, 0.5]).unwrap();
        let (i2, i1) = src.stage_informations();
        let rows = bc_experiment(&src, i2 + 0.2, i1 + 0.2, &[6, 12], 300, DEFAULT_EPS, 11, DEFAULT_MEM_BUDGET).unwrap();
        assert!(rows[1].failure_rate < rows[0].failure_rate, "{rows:?}");
    }

    #[test]
    fn budget_counts_private_codebooks() {
        let src = BcSource::new(&Dmc::bsc_bc(0.1, 0.1, true), &[0.5, 0.5]).unwrap();
        let params = BcParams::calibrate(&src, 10, DEFAULT_EPS, 1).unwrap();
        let err = build_bc_emulator(&src, 1.0, 1.0, &params, 0, 1_000_000).unwrap_err();
        assert!(matches!(err, Error::Budget { .. }));
    }
}
