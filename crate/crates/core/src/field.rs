use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::{LatticePoint, PointSet};

/// Real values on a finite, lexicographically ordered set of lattice points.
///
/// Lookups outside the support are errors; there is no implicit zero.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    support: PointSet,
    values: Vec<f64>,
}

impl Field {
    pub fn new(support: PointSet, values: Vec<f64>) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} points but {} values",
                support.len(),
                values.len()
            )));
        }
        Ok(Field { support, values })
    }

    pub fn from_fn<F: FnMut(&LatticePoint) -> f64>(support: PointSet, mut f: F) -> Self {
        let values = support.iter().map(&mut f).collect();
        Field { support, values }
    }

    pub fn support(&self) -> &PointSet {
        &self.support
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

    pub fn get(&self, p: &LatticePoint) -> Result<f64> {
        self.support
            .index_of(p)
            .map(|i| self.values[i])
            .ok_or_else(|| Error::OutsideSupport(p.clone()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&LatticePoint, f64)> + '_ {
        self.support.iter().zip(self.values.iter().copied())
    }

    pub fn restrict(&self, points: &PointSet) -> Result<Field> {
        let values = points.iter().map(|p| self.get(p)).collect::<Result<Vec<_>>>()?;
        Ok(Field { support: points.clone(), values })
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field { support: self.support.clone(), values: self.values.iter().map(|v| v * c).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        let mut m: f64 = 0.0;
        for (p, v) in self.iter() {
            m = m.max((v - other.get(p)?).abs());
        }
        Ok(m)
    }
}
