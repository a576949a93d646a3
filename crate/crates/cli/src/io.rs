//! Signal and coefficient files.
//!
//! A signal file is an ASCII header followed by little-endian binary64
//! `(re, im)` pairs in row-major order:
//!
//! ```text
//! CWL1
//! k
//! n1 [n2]
//! origin...
//! spacing...
//! DATA
//! ```
//!
//! Coefficient files start with `CWL1C`, repeat the grid lines, then carry
//! `NODES <count>` and a one-line JSON manifest before `DATA`; the values
//! are stored node-major.

use std::fs;
use std::io::{BufRead, Cursor, Read};
use std::path::Path;

use num_complex::Complex64;
use orbitlet_core::profile::FrequencyProfile;
use orbitlet_core::transform::{CoefficientField, FieldNode, Grid, SampledSignal};
use serde::{Deserialize, Serialize};

use crate::report::CliError;

pub const SIGNAL_MAGIC: &str = "CWL1";
pub const COEFF_MAGIC: &str = "CWL1C";

/// Metadata stored alongside a coefficient field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeManifest {
    pub group: String,
    pub wavelet: FrequencyProfile,
    pub nodes: Vec<FieldNode>,
}

fn join(xs: impl IntoIterator<Item = String>) -> String {
    xs.into_iter().collect::<Vec<_>>().join(" ")
}

fn grid_header(magic: &str, grid: &Grid) -> String {
    format!(
        "{magic}\n{}\n{}\n{}\n{}\n",
        grid.dim(),
        join(grid.shape.iter().map(|n| n.to_string())),
        join(grid.origin.iter().map(|x| format!("{x:?}"))),
        join(grid.spacing.iter().map(|x| format!("{x:?}"))),
    )
}

fn push_values(out: &mut Vec<u8>, values: &[Complex64]) {
    out.reserve(values.len() * 16);
    for v in values {
        out.extend_from_slice(&v.re.to_le_bytes());
        out.extend_from_slice(&v.im.to_le_bytes());
    }
}

pub fn encode_signal(signal: &SampledSignal) -> Vec<u8> {
    let mut out = grid_header(SIGNAL_MAGIC, &signal.grid).into_bytes();
    out.extend_from_slice(b"DATA\n");
    push_values(&mut out, &signal.values);
    out
}

pub fn encode_coefficients(
    field: &CoefficientField,
    group: &str,
    wavelet: &FrequencyProfile,
) -> Result<Vec<u8>, CliError> {
    let manifest = NodeManifest {
        group: group.to_string(),
        wavelet: wavelet.clone(),
        nodes: field.nodes.clone(),
    };
    let json = serde_json::to_string(&manifest).map_err(|e| CliError::Numerical(e.to_string()))?;
    let mut out = grid_header(COEFF_MAGIC, &field.grid).into_bytes();
    out.extend_from_slice(format!("NODES {}\n{json}\nDATA\n", field.nodes.len()).as_bytes());
    push_values(&mut out, &field.values);
    Ok(out)
}

struct Reader<'a> {
    cur: Cursor<&'a [u8]>,
}

impl Reader<'_> {
    fn line(&mut self, what: &str) -> Result<String, CliError> {
        let mut s = String::new();
        self.cur
            .read_line(&mut s)
            .map_err(|e| CliError::Config(format!("reading {what}: {e}")))?;
        if !s.ends_with('\n') {
            return Err(CliError::Config(format!("truncated header at {what}")));
        }
        s.pop();
        Ok(s)
    }

    fn numbers<T: std::str::FromStr>(&mut self, what: &str, count: usize) -> Result<Vec<T>, CliError> {
        let line = self.line(what)?;
        let xs: Vec<T> = line
            .split_ascii_whitespace()
            .map(|t| {
                t.parse()
                    .map_err(|_| CliError::Config(format!("bad {what} entry `{t}`")))
            })
            .collect::<Result<_, _>>()?;
        if xs.len() != count {
            return Err(CliError::Config(format!(
                "{what}: expected {count} entries, got {}",
                xs.len()
            )));
        }
        Ok(xs)
    }

    fn grid(&mut self) -> Result<Grid, CliError> {
        let k: usize = self.numbers("dimension", 1)?[0];
        if !(1..=2).contains(&k) {
            return Err(CliError::Config(format!("unsupported dimension {k}")));
        }
        let shape = self.numbers("shape", k)?;
        let origin = self.numbers("origin", k)?;
        let spacing = self.numbers("spacing", k)?;
        Grid::new(origin, spacing, shape).map_err(|e| CliError::Config(e.to_string()))
    }

    fn values(&mut self, count: usize) -> Result<Vec<Complex64>, CliError> {
        let mut buf = Vec::new();
        self.cur
            .read_to_end(&mut buf)
            .map_err(|e| CliError::Config(e.to_string()))?;
        if buf.len() != count * 16 {
            return Err(CliError::Config(format!(
                "payload has {} bytes, expected {}",
                buf.len(),
                count * 16
            )));
        }
        Ok(buf
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect())
    }

    fn expect(&mut self, tag: &str) -> Result<(), CliError> {
        let l = self.line(tag)?;
        if l != tag {
            return Err(CliError::Config(format!("expected `{tag}`, found `{l}`")));
        }
        Ok(())
    }
}

pub fn decode_signal(bytes: &[u8]) -> Result<SampledSignal, CliError> {
    let mut r = Reader {
        cur: Cursor::new(bytes),
    };
    r.expect(SIGNAL_MAGIC)?;
    let grid = r.grid()?;
    r.expect("DATA")?;
    let values = r.values(grid.len())?;
    SampledSignal::new(grid, values).map_err(|e| CliError::Config(e.to_string()))
}

pub fn decode_coefficients(bytes: &[u8]) -> Result<(CoefficientField, NodeManifest), CliError> {
    let mut r = Reader {
        cur: Cursor::new(bytes),
    };
    r.expect(COEFF_MAGIC)?;
    let grid = r.grid()?;
    let count_line = r.line("node count")?;
    let count: usize = count_line
        .strip_prefix("NODES ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| CliError::Config(format!("bad node count line `{count_line}`")))?;
    let manifest: NodeManifest =
        serde_json::from_str(&r.line("manifest")?).map_err(|e| CliError::Config(format!("bad node manifest: {e}")))?;
    if manifest.nodes.len() != count {
        return Err(CliError::Config(format!(
            "manifest lists {} nodes, header says {count}",
            manifest.nodes.len()
        )));
    }
    r.expect("DATA")?;
    let values = r.values(grid.len() * count)?;
    let field = CoefficientField {
        grid,
        nodes: manifest.nodes.clone(),
        values,
    };
    Ok((field, manifest))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn read_signal(path: &Path) -> Result<SampledSignal, CliError> {
    decode_signal(&read(path)?)
}

pub fn read_coefficients(path: &Path) -> Result<(CoefficientField, NodeManifest), CliError> {
    decode_coefficients(&read(path)?)
}

/// Read a file or parse an inline JSON document (anything starting with `{`
/// or `[`).
pub fn json_arg<T: serde::de::DeserializeOwned>(arg: &str, what: &str) -> Result<T, CliError> {
    let text = if arg.trim_start().starts_with(['{', '[']) {
        arg.to_string()
    } else {
        fs::read_to_string(arg).map_err(|e| CliError::Config(format!("{what} `{arg}`: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("bad {what}: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signal_round_trip_is_bit_exact() {
        let grid = Grid::new(vec![-1.5, 0.1], vec![0.1, 1.0 / 3.0], vec![3, 2]).unwrap();
        let values: Vec<Complex64> = (0..6)
            .map(|i| Complex64::new(i as f64 / 7.0, -1e-300 * i as f64))
            .collect();
        let s = SampledSignal::new(grid, values).unwrap();
        let bytes = encode_signal(&s);
        assert!(bytes.starts_with(b"CWL1\n2\n3 2\n-1.5 0.1\n0.1 0.3333333333333333\nDATA\n"));
        let back = decode_signal(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(encode_signal(&back), bytes);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let s = SampledSignal::zeros(Grid::centered(1, 4, 1.0).unwrap());
        let mut bytes = encode_signal(&s);
        bytes.pop();
        assert!(matches!(decode_signal(&bytes), Err(CliError::Config(_))));
        assert!(decode_signal(b"CWL2\n").is_err());
    }
}
