use std::path::Path;

use netbound::capacity::blahut_arimoto;
use netbound::fmt::sig6;
use netbound::{Channel, Error, Role};
use serde_json::json;

use crate::error::CliError;
use crate::output::{emit, read_channel, require};
use crate::Global;

pub fn run(g: &Global, path: &Path) -> Result<(), CliError> {
    require(&[path])?;
    let channel = read_channel(path)?;
    let Channel::Discrete(d) = &channel else {
        return Err(Error::Invalid("capacity subcommand requires p2p role".into()).into());
    };
    if d.role() != Role::P2p {
        return Err(Error::Invalid("capacity subcommand requires p2p role".into()).into());
    }
    let r = blahut_arimoto(d, g.tol)?;
    let mut text = format!(
        "channel     {}\ncapacity    {}\nbracket     [{}, {}]\niterations  {}\ninput      ",
        d.name,
        sig6(r.capacity),
        sig6(r.lower_bracket),
        sig6(r.upper_bracket),
        r.iterations
    );
    for (l, p) in r.optimal_input.labels().iter().zip(r.optimal_input.probs()) {
        text += &format!(" {l}:{}", sig6(*p));
    }
    text.push('\n');
    let report = json!({
        "channel": d.name,
        "capacity": r.capacity,
        "lower_bracket": r.lower_bracket,
        "upper_bracket": r.upper_bracket,
        "iterations": r.iterations,
        "optimal_input": r.optimal_input.probs(),
        "tol": g.tol,
    });
    emit(g, &text, &report)
}
