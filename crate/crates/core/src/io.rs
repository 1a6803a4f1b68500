//! Model files and CSV matrices.
//!
//! A model file is plain text with `[section]` headers, `#` comments and one
//! matrix row per line (numbers separated by whitespace or commas):
//!
//! ```text
//! [dimensions]
//! n_x = 15
//! n_xi = 3
//! n_y = 10
//! n_eta = 2
//! [lambda_x]   n_x rows, n_xi columns
//! [phi]        n_xi x n_xi
//! [lambda_y]   n_y rows, n_eta columns
//! [gamma]      n_xi rows, n_eta columns (one row per exogenous factor)
//! [psi] or [eta_corr]   n_eta x n_eta
//! ```
//!
//! The endogenous sections may be omitted when `n_eta = 0`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use nalgebra::DMatrix;
use sha2::{Digest, Sha256};

use crate::data::{DataMatrix, Provenance, ScoreMatrix};
use crate::error::{Error, Result};
use crate::model::{validate_model, ModelParts, SemModel};

const SECTIONS: [&str; 7] = [
    "dimensions",
    "lambda_x",
    "phi",
    "lambda_y",
    "gamma",
    "psi",
    "eta_corr",
];
const DIMENSIONS: [&str; 4] = ["n_x", "n_xi", "n_y", "n_eta"];

struct Section {
    line: usize,
    rows: Vec<(usize, Vec<f64>)>,
    entries: Vec<(usize, String, String)>,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn split_sections(text: &str) -> Result<BTreeMap<&'static str, Section>> {
    let mut sections: BTreeMap<&'static str, Section> = BTreeMap::new();
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, format!("malformed section header '{line}'")))?
                .trim();
            let known = SECTIONS
                .iter()
                .find(|s| **s == name)
                .ok_or_else(|| parse_err(line_no, format!("unknown section [{name}]")))?;
            if sections.contains_key(known) {
                return Err(parse_err(line_no, format!("duplicate section [{name}]")));
            }
            sections.insert(
                known,
                Section {
                    line: line_no,
                    rows: Vec::new(),
                    entries: Vec::new(),
                },
            );
            current = Some(known);
            continue;
        }
        let name =
            current.ok_or_else(|| parse_err(line_no, "content before the first section header"))?;
        let section = sections.get_mut(name).expect("section registered above");
        if name == "dimensions" {
            let mut parts = line.splitn(2, |c: char| c == '=' || c.is_whitespace());
            let key = parts.next().unwrap_or("").trim().to_string();
            let value = parts
                .next()
                .unwrap_or("")
                .trim()
                .trim_start_matches('=')
                .trim()
                .to_string();
            section.entries.push((line_no, key, value));
        } else {
            let row = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>().map_err(|_| {
                        parse_err(line_no, format!("non-numeric token '{t}' in [{name}]"))
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            section.rows.push((line_no, row));
        }
    }
    Ok(sections)
}

fn dimensions(section: &Section) -> Result<BTreeMap<&'static str, usize>> {
    let mut dims = BTreeMap::new();
    for (line, key, value) in &section.entries {
        let known = DIMENSIONS
            .iter()
            .find(|d| **d == key.as_str())
            .ok_or_else(|| parse_err(*line, format!("unknown dimension '{key}'")))?;
        let n: usize = value.parse().map_err(|_| {
            parse_err(
                *line,
                format!("dimension '{key}' must be a non-negative integer, got '{value}'"),
            )
        })?;
        dims.insert(*known, n);
    }
    for d in ["n_x", "n_xi"] {
        if !dims.contains_key(d) {
            return Err(parse_err(
                section.line,
                format!("[dimensions] is missing {d}"),
            ));
        }
    }
    dims.entry("n_y").or_insert(0);
    dims.entry("n_eta").or_insert(0);
    Ok(dims)
}

fn matrix(
    sections: &BTreeMap<&'static str, Section>,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Option<DMatrix<f64>>> {
    let Some(section) = sections.get(name) else {
        return Ok(None);
    };
    if section.rows.len() != rows {
        return Err(parse_err(
            section.line,
            format!(
                "[{name}] has {} rows, expected {rows} from [dimensions]",
                section.rows.len()
            ),
        ));
    }
    for (line, row) in &section.rows {
        if row.len() != cols {
            return Err(parse_err(
                *line,
                format!("[{name}] row has {} values, expected {cols}", row.len()),
            ));
        }
    }
    let flat: Vec<f64> = section
        .rows
        .iter()
        .flat_map(|(_, r)| r.iter().copied())
        .collect();
    Ok(Some(DMatrix::from_row_slice(rows, cols, &flat)))
}

fn required(m: Option<DMatrix<f64>>, name: &str) -> Result<DMatrix<f64>> {
    m.ok_or_else(|| parse_err(0, format!("missing section [{name}]")))
}

/// Parses a model without checking parameter-value invariants.
pub fn parse_model_unvalidated(text: &str) -> Result<SemModel> {
    let sections = split_sections(text)?;
    let dims_section = sections
        .get("dimensions")
        .ok_or_else(|| parse_err(0, "missing section [dimensions]"))?;
    let dims = dimensions(dims_section)?;
    let (n_x, n_xi, n_y, n_eta) = (dims["n_x"], dims["n_xi"], dims["n_y"], dims["n_eta"]);

    let lambda_x = required(matrix(&sections, "lambda_x", n_x, n_xi)?, "lambda_x")?;
    let phi = required(matrix(&sections, "phi", n_xi, n_xi)?, "phi")?;
    let (lambda_y, gamma, psi, eta_corr) = if n_eta == 0 && n_y == 0 {
        (DMatrix::zeros(0, 0), DMatrix::zeros(0, n_xi), None, None)
    } else {
        let lambda_y = required(matrix(&sections, "lambda_y", n_y, n_eta)?, "lambda_y")?;
        let gamma = required(matrix(&sections, "gamma", n_xi, n_eta)?, "gamma")?.transpose();
        let psi = matrix(&sections, "psi", n_eta, n_eta)?;
        let eta_corr = matrix(&sections, "eta_corr", n_eta, n_eta)?;
        if psi.is_none() && eta_corr.is_none() {
            return Err(parse_err(0, "missing section [psi] or [eta_corr]"));
        }
        (lambda_y, gamma, psi, eta_corr)
    };
    SemModel::from_parts(ModelParts {
        lambda_x,
        phi,
        lambda_y,
        gamma,
        psi,
        eta_corr,
    })
}

/// Parses and validates a model.
pub fn parse_model_str(text: &str) -> Result<SemModel> {
    let model = parse_model_unvalidated(text)?;
    let report = validate_model(&model);
    if !report.is_accepted() {
        let list: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        return Err(Error::InvalidModel(list.join("; ")));
    }
    Ok(model)
}

pub fn parse_model_file(path: impl AsRef<Path>) -> Result<SemModel> {
    parse_model_str(&fs::read_to_string(path)?)
}

/// Canonical text form; parsing it gives back the same matrices.
pub fn write_model_string(model: &SemModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[dimensions]");
    let _ = writeln!(out, "n_x = {}", model.n_x());
    let _ = writeln!(out, "n_xi = {}", model.n_xi());
    let _ = writeln!(out, "n_y = {}", model.n_y());
    let _ = writeln!(out, "n_eta = {}", model.n_eta());
    let mut block = |name: &str, m: &DMatrix<f64>| {
        let _ = writeln!(out, "\n[{name}]");
        for row in m.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join(" "));
        }
    };
    block("lambda_x", model.lambda_x());
    block("phi", model.phi());
    if model.n_eta() > 0 {
        block("lambda_y", model.lambda_y());
        block("gamma", &model.gamma().transpose());
        block("psi", model.psi());
    }
    out
}

/// First 16 hex digits of the SHA-256 of the canonical model text.
pub fn model_hash(model: &SemModel) -> String {
    let digest = Sha256::digest(write_model_string(model).as_bytes());
    hex::encode(digest)[..16].to_string()
}

/// A labeled numeric table read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub labels: Vec<String>,
    pub values: DMatrix<f64>,
    /// Case identifiers when the first column is named `id`, `case` or `case_id`.
    pub ids: Option<Vec<String>>,
}

pub fn read_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    let has_id = headers
        .first()
        .map(|h| matches!(h.to_ascii_lowercase().as_str(), "id" | "case" | "case_id"))
        .unwrap_or(false);
    let labels: Vec<String> = headers.iter().skip(usize::from(has_id)).cloned().collect();
    if labels.is_empty() {
        return Err(Error::Csv("no numeric columns in header".into()));
    }
    let mut ids = Vec::new();
    let mut flat = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths {
                expected_len, len, ..
            } => Error::Csv(format!(
                "ragged row {}: {len} fields, expected {expected_len}",
                r + 1
            )),
            _ => Error::from(e),
        })?;
        let mut fields = record.iter();
        if has_id {
            ids.push(fields.next().unwrap_or("").to_string());
        }
        for (c, cell) in fields.enumerate() {
            let v = cell.parse::<f64>().map_err(|_| {
                Error::Csv(format!(
                    "row {}, column '{}': non-numeric value '{cell}'",
                    r + 1,
                    labels[c]
                ))
            })?;
            flat.push(v);
        }
    }
    if flat.is_empty() {
        return Err(Error::Csv("no data rows".into()));
    }
    let n = flat.len() / labels.len();
    Ok(Table {
        values: DMatrix::from_row_slice(n, labels.len(), &flat),
        labels,
        ids: has_id.then_some(ids),
    })
}

pub fn read_data_csv(path: impl AsRef<Path>) -> Result<DataMatrix> {
    let table = read_table(fs::File::open(path)?)?;
    DataMatrix::new(table.values, table.labels)
}

/// Reads scores and tags each column with its model block. Every column must
/// name a model factor; columns are returned in model order.
pub fn read_scores_csv(path: impl AsRef<Path>, model: &SemModel) -> Result<ScoreMatrix> {
    scores_from_table(read_table(fs::File::open(path)?)?, model)
}

pub fn scores_from_table(table: Table, model: &SemModel) -> Result<ScoreMatrix> {
    let factors = model.factor_labels();
    let blocks = model.factor_blocks();
    for l in &table.labels {
        if !factors.contains(l) {
            return Err(Error::Labels(format!(
                "score column '{l}' is not a model factor (expected some of: {})",
                factors.join(", ")
            )));
        }
    }
    let (order, tags): (Vec<String>, Vec<_>) = factors
        .iter()
        .zip(blocks)
        .filter(|(f, _)| table.labels.contains(f))
        .map(|(f, b)| (f.clone(), b))
        .unzip();
    let scores = ScoreMatrix::new(
        table.values,
        table.labels,
        vec![crate::data::Block::Exogenous; order.len()],
        Provenance::PlausibleMean,
    )?
    .select(&order)?;
    ScoreMatrix::new(scores.into_values(), order, tags, Provenance::PlausibleMean)
}

pub fn write_table<W: std::io::Write>(
    writer: W,
    labels: &[String],
    values: &DMatrix<f64>,
) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(labels)?;
    for row in values.row_iter() {
        wtr.write_record(row.iter().map(|v| format!("{v}")))?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_data_csv(path: impl AsRef<Path>, data: &DataMatrix) -> Result<()> {
    write_table(fs::File::create(path)?, data.labels(), data.values())
}

pub fn write_scores_csv(path: impl AsRef<Path>, scores: &ScoreMatrix) -> Result<()> {
    write_table(fs::File::create(path)?, scores.labels(), scores.values())
}
