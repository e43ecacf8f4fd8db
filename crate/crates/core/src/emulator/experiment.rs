//! Failure-rate and fidelity sweeps over rate and block length.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;

use super::{
    build_p2p_emulator, draw_input, emulate_prefix, log_ratio, type_distances, typical_probability,
    P2pSource, TypicalityParams, DEFAULT_EPS, DEFAULT_MEM_BUDGET,
};
use crate::error::{invalid, Result};
use crate::rng::{derive_seed, DEFAULT_SEED};

/// Fewest trials accepted by a sweep.
pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub rates: Vec<f64>,
    pub lengths: Vec<usize>,
    pub trials: usize,
    pub eps: f64,
    pub seed: u64,
    /// Thresholds for the log-ratio exceedance rates.
    pub nus: Vec<f64>,
    pub budget: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            rates: vec![0.3, 0.5, 0.8],
            lengths: vec![6, 8, 10, 12, 14, 16],
            trials: 1000,
            eps: DEFAULT_EPS,
            seed: DEFAULT_SEED,
            nus: vec![0.05, 0.1, 0.2],
            budget: DEFAULT_MEM_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExceedRate {
    pub nu: f64,
    /// `None` when the conditional-type enumeration was too large.
    pub rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmulationStats {
    pub rate: f64,
    pub n: usize,
    pub codeword_count: usize,
    pub trials: usize,
    pub failures: usize,
    pub failure_rate: f64,
    pub failure_se: f64,
    /// Mean total-variation distance between the joint type and `T_x * W` over
    /// successful trials.
    pub tv: Option<f64>,
    /// Same against `p(x) * W`.
    pub tv_model: Option<f64>,
    pub exceed: Vec<ExceedRate>,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy)]
struct Outcome {
    failed: bool,
    tv: f64,
    tv_model: f64,
    log_ratio: Option<f64>,
}

fn type_of(x: &[usize], nx: usize) -> Vec<usize> {
    let mut c = vec![0; nx];
    x.iter().for_each(|&a| c[a] += 1);
    c
}

/// Runs `trials` independent emulators per block length. Each trial draws
/// one codebook sized for the largest rate; smaller rates use its prefix,
/// so per-trial failure is monotone in the rate.
pub fn threshold_experiment(src: &P2pSource, cfg: &ExperimentConfig) -> Result<Vec<EmulationStats>> {
    if cfg.trials < MIN_TRIALS {
        return invalid(format!("at least {MIN_TRIALS} trials are needed"));
    }
    if cfg.lengths.iter().any(|&n| n == 0) {
        return invalid("block lengths must be at least 1");
    }
    if cfg.rates.is_empty() || cfg.rates.iter().any(|&r| !(r > 0.0)) {
        return invalid("rates must be positive");
    }
    let max_rate = cfg.rates.iter().copied().fold(0.0, f64::max);
    let mut rows = Vec::new();
    for &n in &cfg.lengths {
        let params = TypicalityParams::calibrate(src, n, cfg.eps, cfg.seed)?;
        let inputs: Vec<Vec<usize>> = (0..cfg.trials)
            .map(|t| draw_input(&src.x, n, cfg.seed, &[n as u64, t as u64]))
            .collect();
        let mut types: Vec<Vec<usize>> = inputs.iter().map(|x| type_of(x, src.nx)).collect();
        types.sort();
        types.dedup();
        let q: HashMap<Vec<usize>, Option<f64>> = types
            .into_par_iter()
            .map(|c| {
                let q = typical_probability(src, &c, &params);
                (c, q)
            })
            .collect();
        let counts: Vec<usize> = cfg
            .rates
            .iter()
            .map(|&r| super::codeword_count(n, r, cfg.budget))
            .collect::<Result<_>>()?;
        let per_trial: Vec<Vec<Outcome>> = inputs
            .par_iter()
            .enumerate()
            .map(|(t, x)| {
                let s = derive_seed(cfg.seed, &[n as u64, t as u64]);
                let cb = build_p2p_emulator(src, max_rate, &params, s, cfg.budget)?;
                let qx = q[&type_of(x, src.nx)];
                Ok(counts
                    .iter()
                    .map(|&k| {
                        let e = emulate_prefix(src, &cb, k, x, &params, s);
                        let (tv, tv_model) = type_distances(src, x, &e.y);
                        Outcome {
                            failed: e.failed,
                            tv,
                            tv_model,
                            log_ratio: qx.map(|q| log_ratio(src, x, &e.y, !e.failed, q, k)),
                        }
                    })
                    .collect())
            })
            .collect::<Result<_>>()?;
        for (ri, &rate) in cfg.rates.iter().enumerate() {
            let outs: Vec<Outcome> = per_trial.iter().map(|o| o[ri]).collect();
            let failures = outs.iter().filter(|o| o.failed).count();
            let ok: Vec<&Outcome> = outs.iter().filter(|o| !o.failed).collect();
            let mean = |f: fn(&Outcome) -> f64| {
                (!ok.is_empty()).then(|| ok.iter().map(|o| f(o)).sum::<f64>() / ok.len() as f64)
            };
            let fr = failures as f64 / cfg.trials as f64;
            let exceed = cfg
                .nus
                .iter()
                .map(|&nu| ExceedRate {
                    nu,
                    rate: outs
                        .iter()
                        .map(|o| o.log_ratio.map(|l| (l > nu) as usize))
                        .sum::<Option<usize>>()
                        .map(|c| c as f64 / cfg.trials as f64),
                })
                .collect();
            rows.push(EmulationStats {
                rate,
                n,
                codeword_count: counts[ri],
                trials: cfg.trials,
                failures,
                failure_rate: fr,
                failure_se: (fr * (1.0 - fr) / cfg.trials as f64).sqrt(),
                tv: mean(|o| o.tv),
                tv_model: mean(|o| o.tv_model),
                exceed,
                threshold: params.a,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlopeFit {
    pub rate: f64,
    /// Least-squares slope of `log2(failure rate)` against `N`.
    pub slope: f64,
    pub points: usize,
}

/// Per-rate exponent fits over rows with a nonzero failure rate.
pub fn fit_slopes(rows: &[EmulationStats]) -> Vec<SlopeFit> {
    let mut rates: Vec<f64> = rows.iter().map(|r| r.rate).collect();
    rates.sort_by(f64::total_cmp);
    rates.dedup();
    rates
        .into_iter()
        .filter_map(|rate| {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|r| r.rate == rate && r.failure_rate > 0.0)
                .map(|r| (r.n as f64, r.failure_rate.log2()))
                .collect();
            if pts.len() < 2 {
                return None;
            }
            let m = pts.len() as f64;
            let (mx, my) = (
                pts.iter().map(|p| p.0).sum::<f64>() / m,
                pts.iter().map(|p| p.1).sum::<f64>() / m,
            );
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            if sxx == 0.0 {
                return None;
            }
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            Some(SlopeFit {
                rate,
                slope: sxy / sxx,
                points: pts.len(),
            })
        })
        .collect()
}
