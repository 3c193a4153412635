//! Experiment records and their CSV / JSON serialization.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov::Variant;

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 16] = [
    "system",
    "variant",
    "B",
    "K",
    "t",
    "tau",
    "reg_method",
    "threshold",
    "seed",
    "kappa_pre",
    "kappa_post",
    "gs_energy",
    "abs_error",
    "deviation",
    "eliminated",
    "distinct_circuits",
];

/// One sweep point. `abs_error = |gs_energy − exact ground energy|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub system: String,
    pub variant: Variant,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(with = "float")]
    pub t: f64,
    #[serde(with = "float")]
    pub tau: f64,
    pub reg_method: String,
    #[serde(with = "float")]
    pub threshold: f64,
    /// `None` for noiseless runs, written as `exact`.
    #[serde(with = "seed")]
    pub seed: Option<u64>,
    #[serde(with = "float")]
    pub kappa_pre: f64,
    #[serde(with = "opt_float")]
    pub kappa_post: Option<f64>,
    #[serde(with = "opt_float")]
    pub gs_energy: Option<f64>,
    #[serde(with = "opt_float")]
    pub abs_error: Option<f64>,
    #[serde(with = "opt_float")]
    pub deviation: Option<f64>,
    pub eliminated: bool,
    pub distinct_circuits: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Config(format!("unknown output format '{other}'"))),
        }
    }
}

/// 17 significant digits; non-finite values as `inf`, `-inf`, `NaN`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn parse_float(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| Error::Parse(format!("invalid number '{s}'")))
}

fn opt(x: Option<f64>) -> String {
    x.map(format_float).unwrap_or_default()
}

impl ExperimentRecord {
    fn csv_row(&self) -> [String; 16] {
        [
            self.system.clone(),
            self.variant.to_string(),
            self.b.to_string(),
            self.k.to_string(),
            format_float(self.t),
            format_float(self.tau),
            self.reg_method.clone(),
            format_float(self.threshold),
            self.seed.map_or_else(|| "exact".to_string(), |s| s.to_string()),
            format_float(self.kappa_pre),
            opt(self.kappa_post),
            opt(self.gs_energy),
            opt(self.abs_error),
            opt(self.deviation),
            self.eliminated.to_string(),
            self.distinct_circuits.to_string(),
        ]
    }

    fn from_csv_row(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != CSV_COLUMNS.len() {
            return Err(Error::Parse(format!("expected {} columns, found {}", CSV_COLUMNS.len(), row.len())));
        }
        let int = |i: usize| -> Result<usize> {
            row[i]
                .parse()
                .map_err(|_| Error::Parse(format!("column {} is not an integer: '{}'", CSV_COLUMNS[i], &row[i])))
        };
        let opt_float = |i: usize| -> Result<Option<f64>> {
            if row[i].is_empty() {
                Ok(None)
            } else {
                parse_float(&row[i]).map(Some)
            }
        };
        Ok(Self {
            system: row[0].to_string(),
            variant: row[1].parse()?,
            b: int(2)?,
            k: int(3)?,
            t: parse_float(&row[4])?,
            tau: parse_float(&row[5])?,
            reg_method: row[6].to_string(),
            threshold: parse_float(&row[7])?,
            seed: match &row[8] {
                "exact" => None,
                s => Some(s.parse().map_err(|_| Error::Parse(format!("invalid seed '{s}'")))?),
            },
            kappa_pre: parse_float(&row[9])?,
            kappa_post: opt_float(10)?,
            gs_energy: opt_float(11)?,
            abs_error: opt_float(12)?,
            deviation: opt_float(13)?,
            eliminated: row[14].parse().map_err(|_| Error::Parse(format!("invalid boolean '{}'", &row[14])))?,
            distinct_circuits: int(15)?,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse(format!("{other:?}")),
    }
}

pub fn write_records_to<W: Write>(records: &[ExperimentRecord], format: Format, out: W) -> Result<()> {
    match format {
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(CSV_COLUMNS).map_err(csv_err)?;
            for r in records {
                w.write_record(r.csv_row()).map_err(csv_err)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, records)?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn write_records(records: &[ExperimentRecord], format: Format, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    write_records_to(records, format, &mut buf)?;
    buf.flush()?;
    Ok(())
}

pub fn read_records_from<R: Read>(input: R, format: Format) -> Result<Vec<ExperimentRecord>> {
    match format {
        Format::Csv => {
            let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
            let header = rdr.headers().map_err(csv_err)?.clone();
            if header.iter().ne(CSV_COLUMNS.iter().copied()) {
                return Err(Error::Parse(format!(
                    "unexpected CSV header: {}",
                    header.iter().collect::<Vec<_>>().join(",")
                )));
            }
            rdr.records().map(|row| ExperimentRecord::from_csv_row(&row.map_err(csv_err)?)).collect()
        }
        Format::Json => Ok(serde_json::from_reader(input)?),
    }
}

pub fn read_records(path: &Path, format: Format) -> Result<Vec<ExperimentRecord>> {
    read_records_from(std::fs::File::open(path)?, format)
}

/// JSON numbers, with non-finite values as strings.
mod float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            s.serialize_f64(*x)
        } else {
            s.serialize_str(&x.to_string())
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(x) => Ok(x),
            Repr::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

mod opt_float {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => super::float::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    #[derive(Deserialize)]
    struct Wrap(#[serde(with = "super::float")] f64);

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}

mod seed {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<u64>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(v) => s.serialize_u64(*v),
            None => s.serialize_str("exact"),
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(u64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(Some(v)),
            Repr::Text(s) if s == "exact" => Ok(None),
            Repr::Text(s) => Err(de::Error::custom(format!("invalid seed '{s}'"))),
        }
    }
}
