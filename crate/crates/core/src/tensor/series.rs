use std::ops::Range;

use super::{DenseTensor, Matrix, TensorError};

/// Time-ordered sequence of equally shaped tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorSeries {
    shape: Vec<usize>,
    items: Vec<DenseTensor>,
}

impl TensorSeries {
    /// Series with an explicit slice shape. `items` may be empty.
    pub fn new(shape: Vec<usize>, items: Vec<DenseTensor>) -> Result<Self, TensorError> {
        if let Some(bad) = items.iter().find(|t| t.shape() != shape.as_slice()) {
            return Err(TensorError::ShapeMismatch {
                left: shape,
                right: bad.shape().to_vec(),
            });
        }
        Ok(Self { shape, items })
    }

    /// Series from a non-empty list, taking the shape from the first item.
    pub fn from_tensors(items: Vec<DenseTensor>) -> Result<Self, TensorError> {
        let shape = items
            .first()
            .map(|t| t.shape().to_vec())
            .ok_or(TensorError::EmptySeries)?;
        Self::new(shape, items)
    }

    /// One row per time step, each row a slice in canonical layout.
    pub fn from_matrix(shape: &[usize], m: &Matrix) -> Result<Self, TensorError> {
        let width: usize = shape.iter().product();
        if m.cols() != width {
            return Err(TensorError::DimensionMismatch(format!(
                "rows of width {} cannot hold slices of shape {:?}",
                m.cols(),
                shape
            )));
        }
        let items = (0..m.rows())
            .map(|t| DenseTensor::new(shape.to_vec(), m.row(t).to_vec()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            shape: shape.to_vec(),
            items,
        })
    }

    #[inline]
    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    /// Number of entries per time slice.
    pub fn slice_len(&self) -> usize {
        self.shape.iter().product()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, t: usize) -> &DenseTensor {
        &self.items[t]
    }

    pub fn iter(&self) -> std::slice::Iter<'_, DenseTensor> {
        self.items.iter()
    }

    pub fn items(&self) -> &[DenseTensor] {
        &self.items
    }

    pub fn into_items(self) -> Vec<DenseTensor> {
        self.items
    }

    pub fn push(&mut self, t: DenseTensor) -> Result<(), TensorError> {
        if t.shape() != self.shape.as_slice() {
            return Err(TensorError::ShapeMismatch {
                left: self.shape.clone(),
                right: t.shape().to_vec(),
            });
        }
        self.items.push(t);
        Ok(())
    }

    /// Contiguous sub-series.
    pub fn slice(&self, range: Range<usize>) -> TensorSeries {
        TensorSeries {
            shape: self.shape.clone(),
            items: self.items[range].to_vec(),
        }
    }

    /// Applies `f` to every slice; `f` must map all slices to one shape.
    pub fn map<F>(&self, shape: Vec<usize>, f: F) -> Result<TensorSeries, TensorError>
    where
        F: Fn(&DenseTensor) -> Result<DenseTensor, TensorError>,
    {
        let items = self.items.iter().map(f).collect::<Result<Vec<_>, _>>()?;
        TensorSeries::new(shape, items)
    }

    /// Flattens to a `len x slice_len` matrix, one time step per row.
    pub fn to_matrix(&self) -> Matrix {
        let width = self.slice_len();
        let mut data = Vec::with_capacity(self.len() * width);
        for t in &self.items {
            data.extend_from_slice(t.data());
        }
        Matrix::from_vec(self.len(), width, data).expect("consistent series")
    }

    pub fn is_finite(&self) -> bool {
        self.items.iter().all(DenseTensor::is_finite)
    }
}

impl<'a> IntoIterator for &'a TensorSeries {
    type Item = &'a DenseTensor;
    type IntoIter = std::slice::Iter<'a, DenseTensor>;

    fn into_iter(self) -> Self::IntoIter {
        self.items.iter()
    }
}
