use std::collections::HashSet;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Which side of the structural regression a factor sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    /// Predictor factors (xi).
    Exogenous,
    /// Outcome factors (eta).
    Endogenous,
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Block::Exogenous => f.write_str("exogenous"),
            Block::Endogenous => f.write_str("endogenous"),
        }
    }
}

/// Where a score matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    PlausibleMean,
    Regression,
    Takeuchi,
    CorrelationPreserving,
    /// Simulated latent factor values.
    TrueFactors,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::PlausibleMean => "plausible-mean",
            Provenance::Regression => "regression",
            Provenance::Takeuchi => "takeuchi",
            Provenance::CorrelationPreserving => "correlation-preserving",
            Provenance::TrueFactors => "true-factors",
        })
    }
}

/// Cases x factors score estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
    blocks: Vec<Block>,
    provenance: Provenance,
}

impl ScoreMatrix {
    pub fn new(
        values: DMatrix<f64>,
        labels: Vec<String>,
        blocks: Vec<Block>,
        provenance: Provenance,
    ) -> Result<Self> {
        if labels.len() != values.ncols() || blocks.len() != values.ncols() {
            return Err(Error::Dimension(format!(
                "{} score columns but {} labels and {} block tags",
                values.ncols(),
                labels.len(),
                blocks.len()
            )));
        }
        check_labels(&labels)?;
        check_finite(&values, &labels)?;
        Ok(Self {
            values,
            labels,
            blocks,
            provenance,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn n_cases(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_factors(&self) -> usize {
        self.values.ncols()
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    /// Same labels and tags, new values. Panics on a column-count change.
    pub(crate) fn with_values(&self, values: DMatrix<f64>) -> Self {
        assert_eq!(values.ncols(), self.labels.len());
        Self {
            values,
            labels: self.labels.clone(),
            blocks: self.blocks.clone(),
            provenance: self.provenance,
        }
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    /// Columns tagged with `block`, in their current order.
    pub fn block(&self, block: Block) -> ScoreMatrix {
        let idx: Vec<usize> = (0..self.n_factors())
            .filter(|&j| self.blocks[j] == block)
            .collect();
        self.columns(&idx)
    }

    /// Reorders and subsets columns by label.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<ScoreMatrix> {
        let idx = find_columns(&self.labels, labels, "score")?;
        Ok(self.columns(&idx))
    }

    fn columns(&self, idx: &[usize]) -> ScoreMatrix {
        ScoreMatrix {
            values: self.values.select_columns(idx),
            labels: idx.iter().map(|&j| self.labels[j].clone()).collect(),
            blocks: idx.iter().map(|&j| self.blocks[j]).collect(),
            provenance: self.provenance,
        }
    }

    /// Column-wise concatenation of row-aligned score matrices.
    pub fn hstack(parts: &[&ScoreMatrix], provenance: Provenance) -> Result<ScoreMatrix> {
        let n = parts.first().map(|p| p.n_cases()).unwrap_or(0);
        for p in parts {
            if p.n_cases() != n {
                return Err(Error::Alignment {
                    left: n,
                    right: p.n_cases(),
                });
            }
        }
        let k: usize = parts.iter().map(|p| p.n_factors()).sum();
        let mut values = DMatrix::zeros(n, k);
        let mut labels = Vec::with_capacity(k);
        let mut blocks = Vec::with_capacity(k);
        let mut offset = 0;
        for p in parts {
            values
                .columns_mut(offset, p.n_factors())
                .copy_from(&p.values);
            labels.extend(p.labels.iter().cloned());
            blocks.extend(p.blocks.iter().copied());
            offset += p.n_factors();
        }
        ScoreMatrix::new(values, labels, blocks, provenance)
    }
}

/// Cases x indicators observed data.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: DMatrix<f64>,
    labels: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != values.ncols() {
            return Err(Error::Dimension(format!(
                "{} data columns but {} labels",
                values.ncols(),
                labels.len()
            )));
        }
        check_labels(&labels)?;
        check_finite(&values, &labels)?;
        Ok(Self { values, labels })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_cases(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_indicators(&self) -> usize {
        self.values.ncols()
    }

    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<DataMatrix> {
        let idx = find_columns(&self.labels, labels, "data")?;
        Ok(DataMatrix {
            values: self.values.select_columns(&idx),
            labels: idx.iter().map(|&j| self.labels[j].clone()).collect(),
        })
    }
}

fn find_columns<S: AsRef<str>>(have: &[String], want: &[S], what: &str) -> Result<Vec<usize>> {
    want.iter()
        .map(|w| {
            let w = w.as_ref();
            have.iter().position(|h| h == w).ok_or_else(|| {
                Error::Labels(format!(
                    "{what} column '{w}' not found (have: {})",
                    have.join(", ")
                ))
            })
        })
        .collect()
}

fn check_labels(labels: &[String]) -> Result<()> {
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::Labels(format!("duplicate label '{l}'")));
        }
    }
    Ok(())
}

fn check_finite(values: &DMatrix<f64>, labels: &[String]) -> Result<()> {
    for (j, col) in values.column_iter().enumerate() {
        if let Some(i) = col.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "row {}, column '{}'",
                i + 1,
                labels[j]
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_labels_and_nan() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert!(matches!(
            DataMatrix::new(m.clone(), vec!["a".into(), "a".into()]),
            Err(Error::Labels(_))
        ));
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, f64::NAN, 3.0, 4.0]);
        assert!(matches!(
            DataMatrix::new(bad, vec!["a".into(), "b".into()]),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn select_reorders_and_block_filters() {
        let m = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let s = ScoreMatrix::new(
            m,
            vec!["xi1".into(), "eta1".into(), "xi2".into()],
            vec![Block::Exogenous, Block::Endogenous, Block::Exogenous],
            Provenance::Regression,
        )
        .unwrap();
        let xi = s.block(Block::Exogenous);
        assert_eq!(xi.labels(), ["xi1", "xi2"]);
        assert_eq!(xi.values().as_slice(), &[1.0, 4.0, 3.0, 6.0]);
        let r = s.select(&["xi2", "xi1"]).unwrap();
        assert_eq!(r.values().as_slice(), &[3.0, 6.0, 1.0, 4.0]);
        assert!(matches!(s.select(&["nope"]), Err(Error::Labels(_))));
    }
}
