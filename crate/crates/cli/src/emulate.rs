use std::path::{Path, PathBuf};

use clap::Args;
use netbound::emulator::{
    bc_experiment, fit_slopes, threshold_experiment, BcRow, BcSource, EmulationStats, ExperimentConfig,
    P2pSource, DEFAULT_EPS, MIN_TRIALS,
};
use netbound::fmt::sig6;
use netbound::{Channel, Error, Role};
use serde::Deserialize;
use serde_json::Value;

use crate::error::CliError;
use crate::output::{read_json, require, table, write_text};
use crate::Global;

#[derive(Debug, Args)]
pub struct EmulateArgs {
    pub experiment: PathBuf,
    /// Plot data (failure rate against N, one block per rate).
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

/// Experiment file. Broadcast channels take `R0`/`R1` instead of `R_list`.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Experiment {
    channel: Value,
    #[serde(default, alias = "input")]
    input_dist: Option<Vec<f64>>,
    #[serde(default, rename = "R_list", alias = "rates")]
    rates: Vec<f64>,
    #[serde(rename = "N_list", alias = "lengths")]
    lengths: Vec<usize>,
    trials: usize,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default, rename = "nu_list", alias = "nus")]
    nus: Vec<f64>,
    #[serde(default)]
    eps: Option<f64>,
    #[serde(default, rename = "R0")]
    common_rate: Option<f64>,
    #[serde(default, rename = "R1")]
    private_rate: Option<f64>,
}

fn load(path: &Path) -> Result<(Experiment, Channel), CliError> {
    let v = read_json(path)?;
    let e: Experiment =
        serde_json::from_value(v).map_err(|err| Error::Parse(format!("{}: {err}", path.display())))?;
    let channel = match &e.channel {
        Value::String(p) => {
            let p = path.parent().map_or_else(|| PathBuf::from(p), |b| b.join(p));
            require(&[&p])?;
            crate::output::read_channel(&p)?
        }
        other => Channel::from_json(other)?,
    };
    Ok((e, channel))
}

fn plot_data(rows: &[EmulationStats]) -> String {
    let mut rates: Vec<f64> = rows.iter().map(|r| r.rate).collect();
    rates.dedup();
    let mut out = String::new();
    for (k, rate) in rates.iter().enumerate() {
        if k > 0 {
            out += "\n\n";
        }
        out += &format!("# R={rate}\n# N failure_rate failure_se\n");
        for r in rows.iter().filter(|r| r.rate == *rate) {
            out += &format!("{} {} {}\n", r.n, r.failure_rate, r.failure_se);
        }
    }
    for s in fit_slopes(rows) {
        out += &format!("# slope R={} {} ({} points)\n", s.rate, s.slope, s.points);
    }
    out
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| format!("{x}"))
}

fn p2p_csv(rows: &[EmulationStats], nus: &[f64]) -> String {
    let mut out = String::from("R,N,trials,failure_rate,tv");
    for nu in nus {
        out += &format!(",exceed_rate@{nu}");
    }
    out += ",failure_se,tv_model,codewords,threshold\n";
    for r in rows {
        out += &format!("{},{},{},{},{}", r.rate, r.n, r.trials, r.failure_rate, opt(r.tv));
        for e in &r.exceed {
            out += &format!(",{}", opt(e.rate));
        }
        out += &format!(",{},{},{},{}\n", r.failure_se, opt(r.tv_model), r.codeword_count, r.threshold);
    }
    out
}

fn bc_csv(r0: f64, r1: f64, rows: &[BcRow]) -> String {
    let mut out = String::from("R0,R1,N,trials,failure_rate,stage1_failure_rate,stage2_failure_rate\n");
    for r in rows {
        out += &format!(
            "{r0},{r1},{},{},{},{},{}\n",
            r.n, r.trials, r.failure_rate, r.stage1_failure_rate, r.stage2_failure_rate
        );
    }
    out
}

fn finish(g: &Global, a: &EmulateArgs, text: &str, csv: &str, plot: Option<String>) -> Result<(), CliError> {
    match g.out.as_deref() {
        Some(p) if p == Path::new("-") => print!("{csv}"),
        Some(p) => {
            print!("{text}");
            write_text(p, csv)?;
        }
        None => print!("{text}"),
    }
    if let Some(plot) = plot {
        let target = a.plot.clone().or_else(|| {
            g.out
                .as_ref()
                .filter(|p| p.as_os_str() != "-")
                .map(|p| p.with_extension("plot.dat"))
        });
        if let Some(t) = target {
            write_text(&t, &plot)?;
        }
    }
    Ok(())
}

pub fn run(g: &Global, a: &EmulateArgs) -> Result<(), CliError> {
    require(&[&a.experiment])?;
    let (e, channel) = load(&a.experiment)?;
    if e.trials < MIN_TRIALS {
        return Err(Error::Invalid(format!("at least {MIN_TRIALS} trials are needed, got {}", e.trials)).into());
    }
    let Channel::Discrete(d) = &channel else {
        return Err(Error::Invalid("emulation needs a finite-alphabet channel".into()).into());
    };
    let input = e
        .input_dist
        .clone()
        .unwrap_or_else(|| vec![1.0 / d.n_in() as f64; d.n_in()]);
    let seed = e.seed.unwrap_or(g.seed);
    let eps = e.eps.unwrap_or(DEFAULT_EPS);
    match d.role() {
        Role::P2p => {
            let src = P2pSource::new(d, &input)?;
            let cfg = ExperimentConfig {
                rates: e.rates.clone(),
                lengths: e.lengths.clone(),
                trials: e.trials,
                eps,
                seed,
                nus: e.nus.clone(),
                budget: g.mem_budget,
            };
            let rows = threshold_experiment(&src, &cfg)?;
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        sig6(r.rate),
                        r.n.to_string(),
                        sig6(r.failure_rate),
                        sig6(r.failure_se),
                        r.tv.map_or_else(|| "-".into(), sig6),
                    ]
                })
                .collect();
            let mut text = format!("I(X;Y) = {}\n", sig6(src.mutual_information()));
            text += &table(&["R", "N", "failure", "se", "tv"], &body);
            for s in fit_slopes(&rows) {
                text += &format!("slope of log2 failure vs N at R={}: {}\n", sig6(s.rate), sig6(s.slope));
            }
            finish(g, a, &text, &p2p_csv(&rows, &cfg.nus), Some(plot_data(&rows)))
        }
        Role::Bc => {
            let (Some(r0), Some(r1)) = (e.common_rate, e.private_rate) else {
                return Err(Error::Invalid("broadcast experiments need `R0` and `R1`".into()).into());
            };
            let src = BcSource::new(d, &input)?;
            let rows = bc_experiment(&src, r0, r1, &e.lengths, e.trials, eps, seed, g.mem_budget)?;
            let (i2, i1) = src.stage_informations();
            let body: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        sig6(r.failure_rate),
                        sig6(r.stage1_failure_rate),
                        sig6(r.stage2_failure_rate),
                    ]
                })
                .collect();
            let mut text = format!("I(X;Y2) = {}, I(X;Y1|Y2) = {}\n", sig6(i2), sig6(i1));
            text += &table(&["N", "failure", "stage 1", "stage 2"], &body);
            finish(g, a, &text, &bc_csv(r0, r1, &rows), None)
        }
        r => Err(Error::Invalid(format!("emulation supports p2p and bc channels, not {}", r.name())).into()),
    }
}
