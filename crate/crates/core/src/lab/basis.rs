//! Harmonic-measure basis columns on a finite window.

use alloc::format;
use alloc::vec::Vec;

use crate::dirichlet::{DirichletSystem, BAND_STORAGE_LIMIT};
use crate::error::{Error, Result};
use crate::geometry::{LatticePoint, PointSet};
use crate::kernel::TransitionKernel;
use crate::par;

#[derive(Clone, Copy, Debug)]
enum Slot {
    Interior(usize),
    Boundary(usize),
}

/// Values, at a set of probe points, of the harmonic measures of selected
/// boundary points of a window. Every nonnegative harmonic function on the
/// window with data on the selected points is a nonnegative combination of
/// these columns.
#[derive(Clone, Debug)]
pub struct HarmonicBasis {
    columns: Vec<LatticePoint>,
    probes: PointSet,
    /// Column-major: `values[c * probes.len() + p]`.
    values: Vec<f64>,
    window_size: usize,
}

impl HarmonicBasis {
    /// One solve per boundary point of `interior` accepted by `keep`.
    pub fn compute<F: Fn(&LatticePoint) -> bool>(
        interior: PointSet,
        kernel: &TransitionKernel,
        keep: F,
        probes: PointSet,
        tol: f64,
    ) -> Result<Self> {
        let system = DirichletSystem::new(interior, kernel)?;
        let slots = probes
            .iter()
            .map(|x| {
                if let Some(i) = system.interior().index_of(x) {
                    Ok(Slot::Interior(i))
                } else if let Some(j) = system.boundary().index_of(x) {
                    Ok(Slot::Boundary(j))
                } else {
                    Err(Error::InvalidGeometry(format!("probe {x} lies outside the window closure")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let selected: Vec<usize> = (0..system.boundary().len()).filter(|&j| keep(&system.boundary().points()[j])).collect();
        if selected.is_empty() {
            return Err(Error::Degenerate("no boundary point carries data".into()));
        }
        if system.band_storage() > BAND_STORAGE_LIMIT {
            return Err(Error::InvalidGeometry(format!(
                "window of {} points is too large for a basis computation",
                system.interior().len()
            )));
        }
        let factor = system.factor(false)?;
        let n_boundary = system.boundary().len();
        let solved = par::map_indexed(selected.len(), |c| -> Result<Vec<f64>> {
            let j = selected[c];
            let u = factor.solve(&system.column_rhs(j));
            let mut data = alloc::vec![0.0; n_boundary];
            data[j] = 1.0;
            let residual = system.residual(&u, &data);
            if residual > tol {
                return Err(Error::ConvergenceFailure { residual, iterations: 0 });
            }
            Ok(slots
                .iter()
                .map(|s| match *s {
                    Slot::Interior(i) => u[i],
                    Slot::Boundary(b) => data[b],
                })
                .collect())
        });
        let mut values = Vec::with_capacity(selected.len() * probes.len());
        for col in solved {
            values.extend(col?);
        }
        let columns = selected.iter().map(|&j| system.boundary().points()[j].clone()).collect();
        Ok(HarmonicBasis { columns, probes, values, window_size: system.interior().len() })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// Boundary points whose indicators generate the columns.
    pub fn columns(&self) -> &[LatticePoint] {
        &self.columns
    }

    pub fn probes(&self) -> &PointSet {
        &self.probes
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    /// Values of column `c` at every probe.
    pub fn column(&self, c: usize) -> &[f64] {
        let p = self.probes.len();
        &self.values[c * p..(c + 1) * p]
    }

    pub fn probe_index(&self, x: &LatticePoint) -> Result<usize> {
        self.probes.index_of(x).ok_or_else(|| Error::OutsideSupport(x.clone()))
    }

    /// Values at the probes of `Σ_c w_c · column_c`.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.probes.len()];
        for (c, &w) in weights.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(self.column(c)) {
                *o += w * v;
            }
        }
        out
    }
}
