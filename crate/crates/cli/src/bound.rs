use std::path::PathBuf;

use clap::Args;
use netbound::fmt::sig6;
use netbound::netgraph::{bounds, network_gaps};
use netbound::{Demand, Network, Rate};
use serde_json::json;

use crate::error::CliError;
use crate::model::options;
use crate::output::{emit, read_network, require, table, write_text};
use crate::{Global, SideArg};

#[derive(Debug, Args)]
pub struct BoundArgs {
    pub network: PathBuf,
    #[arg(long, value_enum, default_value_t = SideArg::Both)]
    pub side: SideArg,
    /// Replaces the file's demands, as `source:sink[,sink...]`; repeatable.
    #[arg(long = "demand", value_parser = parse_demand)]
    pub demands: Vec<Demand>,
    /// Per-cut table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Random starts per auxiliary search.
    #[arg(long, default_value_t = 16)]
    pub starts: usize,
}

#[derive(Debug, Args)]
pub struct GapArgs {
    pub network: PathBuf,
    /// Per-cut additive gaps as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub starts: usize,
}

fn parse_demand(s: &str) -> Result<Demand, String> {
    let (src, sinks) = s.split_once(':').ok_or("expected source:sink[,sink...]")?;
    let from: usize = src.trim().parse().map_err(|e| format!("source: {e}"))?;
    let sinks: Vec<usize> = sinks
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("sink: {e}")))
        .collect::<Result<_, _>>()?;
    Ok(match sinks.as_slice() {
        [to] => Demand::Unicast { from, to: *to, rate: None },
        _ => Demand::Multicast { from, sinks, rate: None },
    })
}

fn show_demand(d: &Demand) -> String {
    let sinks: Vec<String> = d.sinks().iter().map(ToString::to_string).collect();
    match d {
        Demand::Unicast { .. } => format!("{}->{}", d.source(), sinks[0]),
        Demand::Multicast { .. } => format!("{}->{{{}}}", d.source(), sinks.join(",")),
    }
}

fn show_set(s: &[usize]) -> String {
    let v: Vec<String> = s.iter().map(ToString::to_string).collect();
    format!("{{{}}}", v.join(","))
}

fn show(r: &Option<Rate>) -> String {
    r.map_or_else(|| "-".to_string(), |r| r.to_string())
}

fn csv_rate(r: &Option<Rate>) -> String {
    match r {
        Some(Rate::Finite(v)) => format!("{v}"),
        Some(Rate::Infinite) => "inf".into(),
        None => String::new(),
    }
}

pub fn run_bound(g: &Global, a: &BoundArgs) -> Result<(), CliError> {
    require(&[&a.network])?;
    let mut net = read_network(&a.network)?;
    if !a.demands.is_empty() {
        net = Network::new(net.nodes, net.components.clone(), a.demands.clone())?;
    }
    let (lower, upper) = match a.side {
        SideArg::Lower => (true, false),
        SideArg::Upper => (false, true),
        SideArg::Both => (true, true),
    };
    let opts = options(g, a.starts);
    let r = bounds(&net, &opts, lower, upper)?;
    let mut text = String::new();
    if !r.demands.is_empty() {
        let rows: Vec<Vec<String>> = r
            .demands
            .iter()
            .map(|d| {
                vec![
                    show_demand(&d.demand),
                    show(&d.lower),
                    show(&d.upper),
                    if d.gap_flagged { "gap".into() } else { String::new() },
                ]
            })
            .collect();
        text += &table(&["demand", "lower", "upper", ""], &rows);
    }
    if !r.cuts.is_empty() {
        let rows: Vec<Vec<String>> = r
            .cuts
            .iter()
            .map(|c| vec![show_set(&c.s), show(&c.lower), show(&c.upper)])
            .collect();
        if !text.is_empty() {
            text.push('\n');
        }
        text += &table(&["S", "lower", "upper"], &rows);
    }
    for n in &r.notes {
        text += &format!("note: {n}\n");
    }
    if let Some(p) = &a.csv {
        let mut csv = String::from("S,lower,upper\n");
        for c in &r.cuts {
            let s: Vec<String> = c.s.iter().map(ToString::to_string).collect();
            csv += &format!("{},{},{}\n", s.join(" "), csv_rate(&c.lower), csv_rate(&c.upper));
        }
        write_text(p, &csv)?;
    }
    let gaps = if lower && upper {
        network_gaps(&net, &opts).ok()
    } else {
        None
    };
    let report = json!({
        "bounds": {
            "lower": r.demands.iter().map(|d| d.lower).collect::<Vec<_>>(),
            "upper": r.demands.iter().map(|d| d.upper).collect::<Vec<_>>(),
        },
        "demands": r.demands,
        "cuts": r.cuts,
        "combinations": r.combinations,
        "gaps": gaps,
        "notes": r.notes,
    });
    emit(g, &text, &report)
}

pub fn run_gap(g: &Global, a: &GapArgs) -> Result<(), CliError> {
    require(&[&a.network])?;
    let net = read_network(&a.network)?;
    let r = network_gaps(&net, &options(g, a.starts))?;
    let mut rows: Vec<Vec<String>> = r
        .rho_per_channel
        .iter()
        .map(|(id, v)| vec![format!("rho[{id}]"), sig6(*v)])
        .collect();
    rows.push(vec!["rho".into(), sig6(r.rho_network)]);
    rows.push(vec!["additive gap".into(), r.additive_gap.to_string()]);
    rows.push(vec!["binding cut".into(), show_set(&r.binding_cut)]);
    if let Some(h) = r.half_bit_bound_holds {
        rows.push(vec![
            format!("gap <= {}/2", r.gaussian_components),
            h.to_string(),
        ]);
    }
    let mut text = table(&["metric", "value"], &rows);
    for n in &r.notes {
        text += &format!("note: {n}\n");
    }
    if let Some(p) = &a.csv {
        let mut csv = String::from("S,delta\n");
        for c in &r.delta_per_cut {
            let s: Vec<String> = c.s.iter().map(ToString::to_string).collect();
            csv += &format!("{},{}\n", s.join(" "), csv_rate(&Some(c.delta)));
        }
        write_text(p, &csv)?;
    }
    emit(g, &text, &serde_json::to_value(&r).expect("gap report serializes"))
}
