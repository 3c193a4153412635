//! Hamiltonian interchange formats.
//!
//! JSON:
//! ```json
//! {"n_qubits": 2, "terms": [{"pauli": "XZ", "coeff": -0.5}], "metadata": {}}
//! ```
//! Plain text: one `coeff pauli` pair per line, `#` starts a comment.
//! Labels list qubit 0 first.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::pauli::{ModelKind, PauliString, PauliSum};

pub fn parse_json(text: &str) -> Result<PauliSum> {
    let doc: Value = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!("malformed Hamiltonian JSON at line {}, column {}: {e}", e.line(), e.column()))
    })?;
    let obj = doc.as_object().ok_or_else(|| Error::Parse("Hamiltonian JSON must be an object".into()))?;
    let n_qubits = obj
        .get("n_qubits")
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::Parse("missing or invalid \"n_qubits\"".into()))? as usize;
    let terms =
        obj.get("terms").and_then(Value::as_array).ok_or_else(|| Error::Parse("missing \"terms\" array".into()))?;

    let mut parsed = Vec::with_capacity(terms.len());
    for (i, term) in terms.iter().enumerate() {
        let label = term
            .get("pauli")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse(format!("term {i}: missing \"pauli\" string")))?;
        let coeff = match term.get("coeff") {
            Some(Value::Number(n)) => {
                n.as_f64().ok_or_else(|| Error::Parse(format!("term {i}: coefficient out of range")))?
            }
            Some(Value::Null) | None => return Err(Error::Parse(format!("term {i}: missing \"coeff\""))),
            Some(other) => {
                return Err(Error::Parse(format!(
                    "term {i}: non-real coefficient {other}; only real weights are accepted"
                )))
            }
        };
        let p: PauliString = label.parse().map_err(|e| Error::Parse(format!("term {i}: {e}")))?;
        if p.n_qubits() != n_qubits {
            return Err(Error::Parse(format!(
                "term {i}: Pauli string \"{label}\" has length {}, expected n_qubits = {n_qubits}",
                p.n_qubits()
            )));
        }
        parsed.push((coeff, p));
    }
    PauliSum::new(n_qubits, parsed)
}

pub fn parse_text(text: &str) -> Result<PauliSum> {
    let mut terms = Vec::new();
    let mut n_qubits = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(c), Some(label), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Parse(format!("line {}: expected \"coeff pauli\"", lineno + 1)));
        };
        let coeff: f64 = c
            .parse()
            .map_err(|_| Error::Parse(format!("line {}: non-real or malformed coefficient '{c}'", lineno + 1)))?;
        let p: PauliString = label.parse().map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        let n = *n_qubits.get_or_insert(p.n_qubits());
        if p.n_qubits() != n {
            return Err(Error::Parse(format!(
                "line {}: Pauli string length {} differs from {n}",
                lineno + 1,
                p.n_qubits()
            )));
        }
        terms.push((coeff, p));
    }
    let n = n_qubits.ok_or_else(|| Error::Parse("Hamiltonian text file has no terms".into()))?;
    PauliSum::new(n, terms)
}

/// Dispatches on content: a leading `{` means JSON.
pub fn parse_str(text: &str) -> Result<PauliSum> {
    if text.trim_start().starts_with('{') {
        parse_json(text)
    } else {
        parse_text(text)
    }
}

pub fn parse_hamiltonian_file(path: &Path) -> Result<PauliSum> {
    let text = std::fs::read_to_string(path)?;
    parse_str(&text)
}

#[derive(Serialize)]
struct TermOut {
    pauli: String,
    coeff: f64,
}

#[derive(Serialize)]
struct DocOut<'a> {
    n_qubits: usize,
    terms: Vec<TermOut>,
    metadata: &'a Map<String, Value>,
}

pub fn to_json(h: &PauliSum, metadata: &Map<String, Value>) -> Result<String> {
    let doc = DocOut {
        n_qubits: h.n_qubits(),
        terms: h.terms().iter().map(|(c, p)| TermOut { pauli: p.to_string(), coeff: *c }).collect(),
        metadata,
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Where a Hamiltonian comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SystemSource {
    Model { kind: ModelKind, n_sites: usize, params: Vec<f64> },
    File(std::path::PathBuf),
}

impl SystemSource {
    /// `model:tfim:N:J:g`, `model:heisenberg:N:J`, or a file path.
    pub fn parse(spec: &str) -> Result<Self> {
        let Some(rest) = spec.strip_prefix("model:") else {
            return Ok(SystemSource::File(spec.into()));
        };
        let mut parts = rest.split(':');
        let kind: ModelKind = parts
            .next()
            .ok_or_else(|| Error::Config(format!("empty model spec '{spec}'")))?
            .parse()
            .map_err(|e: Error| Error::Config(e.to_string()))?;
        let n_sites: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Config(format!("model spec '{spec}' needs a site count")))?;
        let params = parts
            .map(|p| p.parse::<f64>().map_err(|_| Error::Config(format!("bad model parameter '{p}' in '{spec}'"))))
            .collect::<Result<Vec<_>>>()?;
        let params = match (kind, params.len()) {
            (ModelKind::TfimChain, 0) => vec![1.0, 1.0],
            (ModelKind::HeisenbergChain, 0) => vec![1.0],
            _ => params,
        };
        Ok(SystemSource::Model { kind, n_sites, params })
    }

    pub fn load(&self) -> Result<PauliSum> {
        match self {
            SystemSource::Model { kind, n_sites, params } => {
                PauliSum::model(*kind, *n_sites, params).map_err(|e| Error::Config(e.to_string()))
            }
            SystemSource::File(path) => parse_hamiltonian_file(path),
        }
    }

    pub fn id(&self) -> String {
        match self {
            SystemSource::Model { kind, n_sites, params } => {
                let name = match kind {
                    ModelKind::TfimChain => "tfim",
                    ModelKind::HeisenbergChain => "heisenberg",
                };
                let mut id = format!("model:{name}:{n_sites}");
                for p in params {
                    id.push(':');
                    id.push_str(&p.to_string());
                }
                id
            }
            SystemSource::File(path) => path.display().to_string(),
        }
    }
}
