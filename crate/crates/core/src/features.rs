//! Sparse rows and named, row-aligned feature blocks.

use serde::{Deserialize, Serialize};

use crate::corpus::Standardizer;
use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices and nonzero finite values.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SparseVector {
    dimension: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zeros(dimension: usize) -> Self {
        Self {
            dimension,
            entries: Vec::new(),
        }
    }

    /// Builds from `(index, value)` pairs in any order. Zeros are dropped and
    /// duplicate indices are summed.
    pub fn from_pairs(dimension: usize, mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            assert!(i < dimension, "index {i} out of range for dimension {dimension}");
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        Self { dimension, entries }
    }

    pub fn from_dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        Self {
            dimension: values.len(),
            entries,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, index: usize) -> f64 {
        self.entries
            .binary_search_by_key(&index, |&(i, _)| i)
            .map(|pos| self.entries[pos].1)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn norm_squared(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v * v).sum()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        for e in &mut self.entries {
            e.1 *= factor;
        }
    }

    /// Appends `other` after this vector's columns.
    pub fn concat(&self, other: &SparseVector) -> SparseVector {
        let offset = self.dimension;
        let mut entries = self.entries.clone();
        entries.extend(other.entries.iter().map(|&(i, v)| (i + offset, v)));
        SparseVector {
            dimension: offset + other.dimension,
            entries,
        }
    }
}

/// One named group of feature columns, one row per record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBlock {
    pub block_name: String,
    pub column_names: Vec<String>,
    pub rows: Vec<SparseVector>,
}

impl FeatureBlock {
    pub fn new(block_name: impl Into<String>, column_names: Vec<String>, rows: Vec<SparseVector>) -> Self {
        let block = Self {
            block_name: block_name.into(),
            column_names,
            rows,
        };
        debug_assert!(block.rows.iter().all(|r| r.dimension() == block.column_names.len()));
        block
    }

    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Keeps the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureBlock {
        FeatureBlock {
            block_name: self.block_name.clone(),
            column_names: self.column_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }
}

/// Horizontally concatenated feature blocks with block-prefixed column names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub column_names: Vec<String>,
    pub rows: Vec<SparseVector>,
}

impl FeatureMatrix {
    pub fn from_blocks(blocks: &[&FeatureBlock]) -> Result<FeatureMatrix> {
        let Some(first) = blocks.first() else {
            return Err(Error::InvalidArgument("no feature blocks selected".into()));
        };
        let n = first.len();
        if let Some(bad) = blocks.iter().find(|b| b.len() != n) {
            return Err(Error::BlockMismatch(format!(
                "`{}` has {} rows but `{}` has {}",
                first.block_name,
                n,
                bad.block_name,
                bad.len()
            )));
        }
        let column_names = blocks
            .iter()
            .flat_map(|b| b.column_names.iter().map(move |c| format!("{}:{}", b.block_name, c)))
            .collect();
        let rows = (0..n)
            .map(|r| {
                blocks
                    .iter()
                    .skip(1)
                    .fold(first.rows[r].clone(), |acc, b| acc.concat(&b.rows[r]))
            })
            .collect();
        Ok(FeatureMatrix { column_names, rows })
    }

    pub fn width(&self) -> usize {
        self.column_names.len()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            column_names: self.column_names.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Builds a matrix from dense rows with generated column names.
    pub fn from_dense_rows(rows: &[Vec<f64>]) -> FeatureMatrix {
        let width = rows.first().map_or(0, |r| r.len());
        FeatureMatrix {
            column_names: (0..width).map(|j| format!("x{j}")).collect(),
            rows: rows.iter().map(|r| SparseVector::from_dense(r)).collect(),
        }
    }
}

/// Per-column standardization fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScaler {
    pub columns: Vec<Standardizer>,
}

impl ColumnScaler {
    pub fn fit(block: &FeatureBlock) -> ColumnScaler {
        let columns = (0..block.width())
            .map(|j| {
                let values: Vec<f64> = block.rows.iter().map(|r| r.get(j)).collect();
                Standardizer::fit(&values)
            })
            .collect();
        ColumnScaler { columns }
    }

    pub fn apply(&self, block: &FeatureBlock) -> FeatureBlock {
        let rows = block
            .rows
            .iter()
            .map(|r| {
                let dense: Vec<f64> = r
                    .to_dense()
                    .iter()
                    .zip(&self.columns)
                    .map(|(&v, s)| s.apply(v))
                    .collect();
                SparseVector::from_dense(&dense)
            })
            .collect();
        FeatureBlock::new(block.block_name.clone(), block.column_names.clone(), rows)
    }
}
