use std::path::PathBuf;

use clap::Args;
use netbound::fmt::sig6;
use netbound::grid::refined;
use netbound::model::{
    check_upper_conditions, gaussian_bc_models, gaussian_mac_models, upper_model_bc, upper_model_ic,
    upper_model_mac_oriented, upper_model_p2p, AuxSearch, IcVariant,
};
use netbound::netgraph::{candidates, CandidateOptions};
use netbound::{BitPipeModel, Channel, Error, GaussianChannelSpec, Role};
use serde_json::{json, Value};

use crate::error::CliError;
use crate::output::{emit, read_channel, require, table};
use crate::{Global, SideArg};

#[derive(Debug, Args)]
pub struct ModelArgs {
    pub channel: PathBuf,
    #[arg(long, value_enum, default_value_t = SideArg::Upper)]
    pub side: SideArg,
    /// Lower side: which achievable candidate to emit.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    /// MAC upper: description rate of the describing transmitter.
    #[arg(long = "R1", alias = "r1", default_value_t = 0.0)]
    pub r1: f64,
    /// MAC upper: transmitter that sends the description (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub describer: usize,
    /// BC upper: common rate of the family member (default: the smallest).
    #[arg(long = "R0", alias = "r0")]
    pub r0: Option<f64>,
    /// IC upper: outer-bound variant (1 or 2).
    #[arg(long, default_value_t = 1)]
    pub variant: u8,
    /// Random starts per auxiliary search.
    #[arg(long, default_value_t = 16)]
    pub starts: usize,
}

pub fn options(g: &Global, starts: usize) -> CandidateOptions {
    CandidateOptions {
        res: g.grid,
        aux: AuxSearch { starts, seed: g.seed },
        delta: g.slack,
        tol: g.tol,
        ..CandidateOptions::default()
    }
}

fn upper(g: &Global, a: &ModelArgs, channel: &Channel) -> Result<(BitPipeModel, Value), CliError> {
    let aux = AuxSearch { starts: a.starts, seed: g.seed };
    Ok(match channel {
        Channel::Discrete(d) => match d.role() {
            Role::P2p => (upper_model_p2p(d, g.slack, g.tol)?, json!({})),
            Role::Bc => {
                let fam = upper_model_bc(d, g.grid, g.slack)?;
                let m = match a.r0 {
                    Some(r0) => fam.member(r0)?,
                    None => fam.minimal(),
                };
                (m, json!({"c2": fam.c2, "c12": fam.c12, "min_common_rate": fam.min_common_rate()}))
            }
            Role::Mac => {
                if a.describer != 1 && a.describer != 2 {
                    return Err(CliError::Usage("--describer must be 1 or 2".into()));
                }
                let u = upper_model_mac_oriented(d, a.describer, a.r1, g.grid, &aux, g.slack)?;
                let details = json!({"R1": u.r1, "merged_rate": u.r2, "worst_input": u.worst_input});
                (u.model, details)
            }
            Role::Ic => {
                let variant = match a.variant {
                    1 => IcVariant::One,
                    2 => IcVariant::Two,
                    _ => return Err(CliError::Usage("--variant must be 1 or 2".into())),
                };
                let u = upper_model_ic(d, variant, g.grid, &aux, g.slack)?;
                (u.model, json!({"variant": a.variant, "rates": u.rates, "aux_pool": u.pool_size}))
            }
        },
        Channel::Gaussian(GaussianChannelSpec::Bc(s)) => (gaussian_bc_models(s, g.slack)?.upper, json!({})),
        Channel::Gaussian(GaussianChannelSpec::Mac(s)) => (gaussian_mac_models(s, g.slack)?.upper, json!({})),
    })
}

fn rate_rows(m: &BitPipeModel) -> Vec<Vec<String>> {
    m.rates
        .nonzero()
        .map(|(k, r)| vec![k.to_string(), r.to_string(), sig6(m.edge_slack(k).unwrap_or(m.slack))])
        .collect()
}

pub fn run(g: &Global, a: &ModelArgs) -> Result<(), CliError> {
    require(&[&a.channel])?;
    let channel = read_channel(&a.channel)?;
    let (model, details, margins) = match a.side {
        SideArg::Both => return Err(CliError::Usage("model takes --side lower or --side upper".into())),
        SideArg::Lower => {
            let c = candidates(&channel, &options(g, a.starts))?;
            if c.lowers.is_empty() {
                return Err(Error::MissingCandidates {
                    side: "lower".into(),
                    what: format!("{} channels", channel.role_name()),
                }
                .into());
            }
            let count = c.lowers.len();
            let m = c.lowers.into_iter().nth(a.index).ok_or_else(|| {
                CliError::Usage(format!("--index {} out of range ({count} candidates)", a.index))
            })?;
            (m, json!({"index": a.index, "candidates": count}), None)
        }
        SideArg::Upper => {
            let (m, details) = upper(g, a, &channel)?;
            let aux = AuxSearch { starts: a.starts, seed: g.seed };
            // Certified on a grid that halves every construction cell.
            let report = check_upper_conditions(&channel, &m, refined(g.grid), &aux)?;
            (m, details, Some(report))
        }
    };
    let mut text = format!("{} model for {}\n", if a.side == SideArg::Lower { "lower" } else { "upper" }, channel.name());
    text += &table(&["edge", "rate", "slack"], &rate_rows(&model));
    let mut report = model.to_json();
    report["details"] = details;
    if let Some(mr) = &margins {
        let rows: Vec<Vec<String>> = mr
            .inequalities
            .iter()
            .map(|i| vec![i.name.clone(), sig6(i.min_slack)])
            .collect();
        text += "\ncondition margins\n";
        text += &table(&["inequality", "min slack"], &rows);
        report["margins"] = serde_json::to_value(mr).expect("margins serialize");
        if !mr.holds() {
            let worst = mr
                .inequalities
                .iter()
                .min_by(|x, y| x.min_slack.total_cmp(&y.min_slack))
                .expect("at least one inequality");
            if g.verify {
                emit(g, &text, &report)?;
                return Err(Error::NegativeSlack {
                    inequality: worst.name.clone(),
                    slack: worst.min_slack,
                }
                .into());
            }
            eprintln!("warning: negative slack {} on {}", sig6(worst.min_slack), worst.name);
        }
    }
    emit(g, &text, &report)
}
