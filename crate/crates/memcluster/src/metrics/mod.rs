//! Clustering evaluation: accuracy under the optimal cluster-to-class
//! mapping, normalized mutual information, and the adjusted Rand index.

mod lap;

pub use lap::{solve_max_weight, solve_min_cost};

use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("predicted and truth vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least {0} samples required")]
    TooFewSamples(usize),
}

/// Dense-encoded predicted/gold label vectors of common length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVectorPair {
    pub predicted: Vec<usize>,
    pub truth: Vec<usize>,
}

impl LabelVectorPair {
    pub fn new(predicted: Vec<usize>, truth: Vec<usize>) -> Result<Self, MetricsError> {
        if predicted.len() != truth.len() {
            return Err(MetricsError::LengthMismatch(predicted.len(), truth.len()));
        }
        if predicted.is_empty() {
            return Err(MetricsError::TooFewSamples(1));
        }
        Ok(Self { predicted, truth })
    }

    pub fn len(&self) -> usize {
        self.predicted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicted.is_empty()
    }

    pub fn k_pred(&self) -> usize {
        self.predicted.iter().max().map_or(0, |m| m + 1)
    }

    pub fn k_true(&self) -> usize {
        self.truth.iter().max().map_or(0, |m| m + 1)
    }

    /// K_pred x K_true contingency counts.
    pub fn contingency(&self) -> Vec<Vec<u64>> {
        let mut table = vec![vec![0u64; self.k_true()]; self.k_pred()];
        for (&p, &t) in self.predicted.iter().zip(&self.truth) {
            table[p][t] += 1;
        }
        table
    }
}

/// First-appearance dense encoding of arbitrary labels.
pub fn dense_encode<T: Eq + Hash>(labels: &[T]) -> Vec<usize> {
    let mut codes: HashMap<&T, usize> = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = codes.len();
            *codes.entry(l).or_insert(next)
        })
        .collect()
}

/// Clustering accuracy: the matched fraction under the best one-to-one
/// mapping of predicted clusters onto gold classes. The contingency matrix
/// is zero-padded to square; unmapped predicted clusters contribute nothing.
pub fn accuracy(pair: &LabelVectorPair) -> f64 {
    let table = pair.contingency();
    let dim = table.len().max(table[0].len());
    let mut weight = vec![vec![0i64; dim]; dim];
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            weight[i][j] = c as i64;
        }
    }
    let assignment = solve_max_weight(&weight);
    let matched: i64 = assignment.iter().enumerate().map(|(i, &j)| weight[i][j]).sum();
    matched as f64 / pair.len() as f64
}

fn entropy(marginal: &[u64], n: f64) -> f64 {
    marginal
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// NMI with arithmetic-mean normalization and natural logs. Degenerate
/// single-cluster-vs-single-cluster comparison is defined as 1; a constant
/// partition against a non-constant one scores 0.
pub fn nmi(pair: &LabelVectorPair) -> f64 {
    let table = pair.contingency();
    let n = pair.len() as f64;
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> =
        (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();

    let h_u = entropy(&row_sums, n);
    let h_v = entropy(&col_sums, n);
    if h_u == 0.0 && h_v == 0.0 {
        return 1.0;
    }
    if h_u == 0.0 || h_v == 0.0 {
        return 0.0;
    }

    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let p_ij = c as f64 / n;
                let p_i = row_sums[i] as f64 / n;
                let p_j = col_sums[j] as f64 / n;
                // Log difference rather than a log of a quotient, so identical
                // partitions score exactly 1 with no rounding residue.
                mi += p_ij * (p_ij.ln() - p_i.ln() - p_j.ln());
            }
        }
    }
    mi / ((h_u + h_v) / 2.0)
}

fn pairs(c: u64) -> f64 {
    (c as f64) * (c as f64 - 1.0) / 2.0
}

/// Adjusted Rand index from contingency pair counts. When the chance
/// correction degenerates (Max == Expected), identical partitions score 1
/// and differing ones 0.
pub fn ari(pair: &LabelVectorPair) -> Result<f64, MetricsError> {
    if pair.len() < 2 {
        return Err(MetricsError::TooFewSamples(2));
    }
    let table = pair.contingency();
    let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<u64> =
        (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();

    let index: f64 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let sum_rows: f64 = row_sums.iter().map(|&c| pairs(c)).sum();
    let sum_cols: f64 = col_sums.iter().map(|&c| pairs(c)).sum();
    let total_pairs = pairs(pair.len() as u64);
    let expected = sum_rows * sum_cols / total_pairs;
    let max = (sum_rows + sum_cols) / 2.0;

    if (max - expected).abs() < f64::EPSILON {
        let identical = table.iter().all(|r| r.iter().filter(|&&c| c > 0).count() == 1)
            && (0..table[0].len())
                .all(|j| table.iter().filter(|r| r[j] > 0).count() == 1);
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// The evaluation triple plus cluster counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub k_pred: usize,
    pub k_true: usize,
}

impl MetricsReport {
    pub fn compute(pair: &LabelVectorPair) -> Result<Self, MetricsError> {
        Ok(Self {
            acc: accuracy(pair),
            nmi: nmi(pair),
            ari: ari(pair)?,
            k_pred: pair.k_pred(),
            k_true: pair.k_true(),
        })
    }

    /// One fixed-width row: percentages with one decimal.
    pub fn table_row(&self, name: &str) -> String {
        format!(
            "{name:<16} {:>6.1} {:>6.1} {:>6.1} {:>7} {:>7}",
            self.acc * 100.0,
            self.nmi * 100.0,
            self.ari * 100.0,
            self.k_pred,
            self.k_true
        )
    }

    pub fn table_header() -> String {
        format!(
            "{:<16} {:>6} {:>6} {:>6} {:>7} {:>7}",
            "run", "ACC", "NMI", "ARI", "K_pred", "K_true"
        )
    }
}
