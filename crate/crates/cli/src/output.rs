//! Reading inputs and writing reports.

use std::fs;
use std::path::Path;

use netbound::{Channel, Error, Network};
use serde_json::Value;

use crate::error::{io, CliError};
use crate::Global;

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(io(path))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())).into())
}

pub fn read_channel(path: &Path) -> Result<Channel, CliError> {
    Ok(Channel::from_json(&read_json(path)?)?)
}

pub fn read_network(path: &Path) -> Result<Network, CliError> {
    let v = read_json(path)?;
    Ok(Network::from_json(&v, path.parent())?)
}

/// Checks that every path exists before any work starts.
pub fn require(paths: &[&Path]) -> Result<(), CliError> {
    for p in paths {
        if !p.is_file() {
            return Err(CliError::Io {
                path: p.to_path_buf(),
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "no such file"),
            });
        }
    }
    Ok(())
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(io(path))
}

/// Prints the table unless `--out -` redirects the report to stdout, and
/// writes the report when `--out` is given.
pub fn emit(g: &Global, table: &str, report: &Value) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    match g.out.as_deref() {
        Some(p) if p == Path::new("-") => print!("{json}"),
        Some(p) => {
            print!("{table}");
            write_text(p, &json)?;
        }
        None => print!("{table}"),
    }
    Ok(())
}

/// Left-aligned columns separated by two spaces.
pub fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (k, c) in r.iter().enumerate() {
            width[k] = width[k].max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let s: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(k, c)| format!("{c:<w$}", w = width[k]))
            .collect();
        s.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out += &line(r.iter().map(String::as_str).collect());
    }
    out
}
