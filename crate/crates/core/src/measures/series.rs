use serde::{Deserialize, Serialize};

use super::{MeasureError, Result};

/// A discrete variable: one small category identifier per sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySeries {
    values: Vec<u32>,
    categories: u32,
}

impl CategorySeries {
    /// Builds a series whose identifiers must all be below `categories`.
    pub fn new(values: Vec<u32>, categories: u32) -> Result<Self> {
        if values.is_empty() {
            return Err(MeasureError::Empty);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| v >= categories) {
            return Err(MeasureError::CategoryOutOfRange {
                index,
                value,
                categories,
            });
        }
        Ok(Self { values, categories })
    }

    /// Builds a series with the category count inferred as `max + 1`.
    pub fn from_values(values: Vec<u32>) -> Result<Self> {
        let categories = values.iter().max().map_or(0, |&m| m + 1);
        Self::new(values, categories)
    }

    pub(crate) fn from_parts_unchecked(values: Vec<u32>, categories: u32) -> Self {
        debug_assert!(values.iter().all(|&v| v < categories));
        Self { values, categories }
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn categories(&self) -> u32 {
        self.categories
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of distinct identifiers that actually occur.
    pub fn distinct(&self) -> usize {
        let mut seen = vec![false; self.categories as usize];
        let mut count = 0;
        for &v in &self.values {
            if !seen[v as usize] {
                seen[v as usize] = true;
                count += 1;
            }
        }
        count
    }
}

/// A continuous variable: finite real samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealSeries {
    values: Vec<f64>,
}

impl RealSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(MeasureError::Empty);
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(MeasureError::NonFinite { index });
        }
        Ok(Self { values })
    }

    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Either kind of variable, as produced by log extraction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Series {
    Category(CategorySeries),
    Real(RealSeries),
}

impl Series {
    pub fn len(&self) -> usize {
        match self {
            Series::Category(s) => s.len(),
            Series::Real(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Real view of the samples; category identifiers map to their index.
    pub fn to_reals(&self) -> Vec<f64> {
        match self {
            Series::Category(s) => s.values().iter().map(|&v| f64::from(v)).collect(),
            Series::Real(s) => s.values().to_vec(),
        }
    }

    /// True when fewer than two distinct values occur.
    pub fn is_constant(&self) -> bool {
        match self {
            Series::Category(s) => s.values().windows(2).all(|w| w[0] == w[1]),
            Series::Real(s) => s.values().windows(2).all(|w| w[0] == w[1]),
        }
    }

    /// Keeps the samples at the given indices, in order.
    pub fn select(&self, indices: &[usize]) -> Series {
        match self {
            Series::Category(s) => Series::Category(CategorySeries::from_parts_unchecked(
                indices.iter().map(|&i| s.values[i]).collect(),
                s.categories,
            )),
            Series::Real(s) => Series::Real(RealSeries::from_vec_unchecked(
                indices.iter().map(|&i| s.values[i]).collect(),
            )),
        }
    }

    /// Contiguous sub-range of the samples.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Series {
        match self {
            Series::Category(s) => Series::Category(CategorySeries::from_parts_unchecked(
                s.values[range].to_vec(),
                s.categories,
            )),
            Series::Real(s) => Series::Real(RealSeries::from_vec_unchecked(s.values[range].to_vec())),
        }
    }

    /// Reorders samples so that position `i` takes the value at `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Series {
        self.select(order)
    }
}

impl From<CategorySeries> for Series {
    fn from(s: CategorySeries) -> Self {
        Series::Category(s)
    }
}

impl From<RealSeries> for Series {
    fn from(s: RealSeries) -> Self {
        Series::Real(s)
    }
}
