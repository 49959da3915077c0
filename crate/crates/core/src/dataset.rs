//! Pooled, block-contiguous grouped samples.
//!
//! Observations are stored once in pooled order `Z_0, ..., Z_{N-1}`; group `k`
//! occupies the index range `bounds[k]..bounds[k + 1]`. Permutation procedures
//! act on index vectors and never touch the payload. Indices are 0-based
//! everywhere in this crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pooled observation payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Observations {
    /// Row-major `N x dim` real vectors.
    Continuous { dim: usize, values: Vec<f64> },
    /// Levels in `1..=levels`.
    Discrete { levels: usize, values: Vec<usize> },
}

impl Observations {
    pub fn len(&self) -> usize {
        match self {
            Observations::Continuous { dim, values } => {
                if *dim == 0 {
                    0
                } else {
                    values.len() / dim
                }
            }
            Observations::Discrete { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, i: usize) -> Point<'_> {
        match self {
            Observations::Continuous { dim, values } => Point::Vector(&values[i * dim..(i + 1) * dim]),
            Observations::Discrete { values, .. } => Point::Level(values[i]),
        }
    }
}

/// A borrowed single observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Point<'a> {
    Vector(&'a [f64]),
    Level(usize),
}

/// Prefix sums `(0, m_1, ..., m_K = N)` of the group sizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupIndex {
    bounds: Vec<usize>,
}

impl GroupIndex {
    /// Builds the index from positive sizes. A single group is allowed here so
    /// that block sums can be taken over the whole sample.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self> {
        if sizes.is_empty() {
            return Err(Error::TooFewGroups(0));
        }
        let mut bounds = Vec::with_capacity(sizes.len() + 1);
        bounds.push(0);
        let mut acc = 0usize;
        for (k, &n) in sizes.iter().enumerate() {
            if n == 0 {
                return Err(Error::EmptyGroup { group: k });
            }
            acc += n;
            bounds.push(acc);
        }
        Ok(GroupIndex { bounds })
    }

    pub fn bounds(&self) -> &[usize] {
        &self.bounds
    }

    pub fn num_groups(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn total(&self) -> usize {
        *self.bounds.last().expect("bounds never empty")
    }

    pub fn size(&self, k: usize) -> usize {
        self.bounds[k + 1] - self.bounds[k]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.bounds.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn range(&self, k: usize) -> std::ops::Range<usize> {
        self.bounds[k]..self.bounds[k + 1]
    }

    /// Group label of every pooled position.
    pub fn labels(&self) -> Vec<usize> {
        let mut labels = Vec::with_capacity(self.total());
        for k in 0..self.num_groups() {
            labels.extend(std::iter::repeat_n(k, self.size(k)));
        }
        labels
    }
}

/// Validated grouped sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedDataset {
    observations: Observations,
    index: GroupIndex,
}

/// Validates pooled observations against group sizes without consuming the input.
pub fn validate_dataset(observations: &Observations, sizes: &[usize]) -> Result<GroupedDataset> {
    GroupedDataset::new(observations.clone(), sizes.to_vec())
}

impl GroupedDataset {
    pub fn new(observations: Observations, sizes: Vec<usize>) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::TooFewGroups(sizes.len()));
        }
        let index = GroupIndex::from_sizes(&sizes)?;
        match &observations {
            Observations::Continuous { dim, values } => {
                if *dim == 0 {
                    return Err(Error::DimensionMismatch("dimension must be at least 1".into()));
                }
                if values.len() % dim != 0 {
                    return Err(Error::DimensionMismatch(format!(
                        "{} values do not split into rows of length {dim}",
                        values.len()
                    )));
                }
            }
            Observations::Discrete { levels, values } => {
                if *levels == 0 {
                    return Err(Error::DimensionMismatch("discrete domain needs m >= 1".into()));
                }
                if let Some(&bad) = values.iter().find(|&&v| v == 0 || v > *levels) {
                    return Err(Error::DiscreteOutOfRange { level: bad, levels: *levels });
                }
            }
        }
        if observations.len() != index.total() {
            return Err(Error::DimensionMismatch(format!(
                "{} observations but group sizes sum to {}",
                observations.len(),
                index.total()
            )));
        }
        Ok(GroupedDataset { observations, index })
    }

    /// Continuous dataset from rows of equal length.
    pub fn from_rows(rows: &[Vec<f64>], sizes: Vec<usize>) -> Result<Self> {
        let dim = rows.first().map(Vec::len).unwrap_or(1);
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch(format!("row of length {} in dimension {dim}", r.len())));
        }
        let values = rows.iter().flatten().copied().collect();
        Self::new(Observations::Continuous { dim, values }, sizes)
    }

    /// Continuous dataset from per-group row-major blocks of dimension `dim`.
    pub fn from_groups(groups: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimensionMismatch("dimension must be at least 1".into()));
        }
        let mut sizes = Vec::with_capacity(groups.len());
        for (k, g) in groups.iter().enumerate() {
            if g.len() % dim != 0 {
                return Err(Error::DimensionMismatch(format!("group {k} is not a multiple of {dim}")));
            }
            sizes.push(g.len() / dim);
        }
        let values = groups.into_iter().flatten().collect();
        Self::new(Observations::Continuous { dim, values }, sizes)
    }

    /// Scalar (d = 1) dataset, one slice per group.
    pub fn from_scalars(groups: &[&[f64]]) -> Result<Self> {
        Self::from_groups(groups.iter().map(|g| g.to_vec()).collect(), 1)
    }

    pub fn from_levels(levels: usize, values: Vec<usize>, sizes: Vec<usize>) -> Result<Self> {
        Self::new(Observations::Discrete { levels, values }, sizes)
    }

    pub fn observations(&self) -> &Observations {
        &self.observations
    }

    pub fn index(&self) -> &GroupIndex {
        &self.index
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.index.sizes()
    }

    pub fn len(&self) -> usize {
        self.index.total()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_groups(&self) -> usize {
        self.index.num_groups()
    }

    pub fn point(&self, i: usize) -> Point<'_> {
        self.observations.point(i)
    }

    /// `Some(d)` for continuous data.
    pub fn dim(&self) -> Option<usize> {
        match self.observations {
            Observations::Continuous { dim, .. } => Some(dim),
            Observations::Discrete { .. } => None,
        }
    }

    /// `Some(m)` for discrete data.
    pub fn levels(&self) -> Option<usize> {
        match self.observations {
            Observations::Discrete { levels, .. } => Some(levels),
            Observations::Continuous { .. } => None,
        }
    }

    /// Rows of group `k` for continuous data.
    pub fn group_rows(&self, k: usize) -> Option<&[f64]> {
        match &self.observations {
            Observations::Continuous { dim, values } => {
                let r = self.index.range(k);
                Some(&values[r.start * dim..r.end * dim])
            }
            Observations::Discrete { .. } => None,
        }
    }

    /// Per-group level counts `counts[k][v - 1]` for discrete data.
    pub fn level_counts(&self) -> Option<Vec<Vec<u64>>> {
        let Observations::Discrete { levels, values } = &self.observations else {
            return None;
        };
        let counts = (0..self.num_groups())
            .map(|k| {
                let mut c = vec![0u64; *levels];
                for &v in &values[self.index.range(k)] {
                    c[v - 1] += 1;
                }
                c
            })
            .collect();
        Some(counts)
    }
}
