//! Dirichlet problems for the killed walk on finite truncations.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{self, enumerate_region, LatticePoint, LipschitzDomain, PointSet, Radius, Rational, Region};
use crate::kernel::TransitionKernel;
use crate::linalg::{self, bicgstab, BandLu, CsrMatrix, DenseLu, Ilu0};

/// Largest band storage (in `f64` entries) the automatic method factors
/// directly; beyond it the solver switches to ILU(0)-preconditioned
/// BiCGSTAB.
pub const BAND_STORAGE_LIMIT: usize = 40_000_000;

/// Systems up to this size may be solved densely.
pub const DENSE_LIMIT: usize = 500;

const MAX_ITER: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SolveMethod {
    /// Banded LU when it fits in [`BAND_STORAGE_LIMIT`], BiCGSTAB otherwise.
    #[default]
    Auto,
    /// Banded LU, always.
    Direct,
    /// Dense LU with partial pivoting (at most [`DENSE_LIMIT`] unknowns).
    Dense,
    /// ILU(0)-preconditioned BiCGSTAB.
    Iterative,
}

/// The linear system of the walk killed on leaving a finite set `I`:
/// `(I - P_II) u = P_I∂ g` for boundary data `g` on `∂I`.
///
/// Unknowns follow the lexicographic order of the interior points.
#[derive(Clone, Debug)]
pub struct DirichletSystem {
    interior: PointSet,
    boundary: PointSet,
    matrix: CsrMatrix,
    /// `P_I∂` stored by boundary point: row `j` lists `(i, π)` pairs.
    coupling_by_boundary: CsrMatrix,
}

impl DirichletSystem {
    pub fn new(interior: PointSet, kernel: &TransitionKernel) -> Result<Self> {
        if interior.is_empty() {
            return Err(Error::EmptyInterior);
        }
        if interior.dim() != kernel.dim() {
            return Err(Error::DimensionMismatch { expected: kernel.dim(), got: interior.dim() });
        }
        let boundary = geometry::boundary(&interior, kernel.steps())?;
        let n = interior.len();
        let mut w = alloc::vec![0.0; kernel.steps().len()];
        let mut rows = Vec::with_capacity(n);
        let mut coupling: Vec<Vec<(usize, f64)>> = alloc::vec![Vec::new(); boundary.len()];
        for (i, x) in interior.iter().enumerate() {
            kernel.weights_into(x, &mut w);
            let mut row = Vec::with_capacity(w.len() + 1);
            row.push((i, 1.0));
            for (e, &p) in kernel.steps().iter().zip(&w) {
                let z = x + e;
                if let Some(j) = interior.index_of(&z) {
                    row.push((j, -p));
                } else {
                    let j = boundary.index_of(&z).expect("closure contains every one-step neighbour");
                    coupling[j].push((i, p));
                }
            }
            rows.push(row);
        }
        Ok(DirichletSystem {
            interior,
            boundary,
            matrix: CsrMatrix::from_rows(n, rows),
            coupling_by_boundary: CsrMatrix::from_rows(n, coupling),
        })
    }

    pub fn interior(&self) -> &PointSet {
        &self.interior
    }

    pub fn boundary(&self) -> &PointSet {
        &self.boundary
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// `P_I∂ g`.
    pub fn rhs(&self, data: &[f64]) -> Vec<f64> {
        let mut b = alloc::vec![0.0; self.interior.len()];
        for (j, &g) in data.iter().enumerate() {
            if g != 0.0 {
                for (i, p) in self.coupling_by_boundary.row(j) {
                    b[i] += p * g;
                }
            }
        }
        b
    }

    /// Right-hand side for the harmonic measure of boundary point `j`.
    pub fn column_rhs(&self, j: usize) -> Vec<f64> {
        let mut b = alloc::vec![0.0; self.interior.len()];
        for (i, p) in self.coupling_by_boundary.row(j) {
            b[i] += p;
        }
        b
    }

    /// `max_x |Lu(x)|` over the interior.
    pub fn residual(&self, u: &[f64], data: &[f64]) -> f64 {
        let au = self.matrix.mul_vec(u);
        let b = self.rhs(data);
        au.iter().zip(&b).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Band factorization of `I - P_II` (or its transpose), with unknowns
    /// reordered along the axis order that minimizes the band.
    pub fn factor(&self, transposed: bool) -> Result<Factorization> {
        let matrix = if transposed { self.matrix.transpose() } else { self.matrix.clone() };
        Factorization::new(&self.interior, &matrix)
    }

    /// Storage a band factorization would need, in `f64` entries.
    pub fn band_storage(&self) -> usize {
        let perm = best_axis_order(&self.interior, &self.matrix);
        let (lo, hi) = self.matrix.permuted(&perm).bandwidths();
        self.interior.len() * (lo + hi + 1)
    }

    /// Solves `(I - P_II) u = b` (or the transposed system) to
    /// `max |residual| <= abs_tol`.
    pub fn solve_linear(&self, b: &[f64], transposed: bool, method: SolveMethod, abs_tol: f64) -> Result<Vec<f64>> {
        let n = self.interior.len();
        let method = match method {
            SolveMethod::Auto if self.band_storage() <= BAND_STORAGE_LIMIT => SolveMethod::Direct,
            SolveMethod::Auto => SolveMethod::Iterative,
            m => m,
        };
        let matrix = if transposed { self.matrix.transpose() } else { self.matrix.clone() };
        let mut x = match method {
            SolveMethod::Dense => {
                if n > DENSE_LIMIT {
                    return Err(Error::InvalidGeometry(format!(
                        "dense solve limited to {DENSE_LIMIT} unknowns, got {n}"
                    )));
                }
                DenseLu::factor(n, matrix.to_dense())?.solve(b)
            }
            SolveMethod::Direct => Factorization::new(&self.interior, &matrix)?.solve(b),
            SolveMethod::Iterative | SolveMethod::Auto => {
                let ilu = Ilu0::new(&matrix)?;
                return Ok(bicgstab(&matrix, b, None, Some(&ilu), abs_tol, MAX_ITER)?.x);
            }
        };
        // Direct solves: verify, refining if rounding left too much residual.
        for _ in 0..3 {
            let ax = matrix.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if linalg::max_abs(&r) <= abs_tol {
                return Ok(x);
            }
            let ilu = Ilu0::new(&matrix)?;
            let fix = bicgstab(&matrix, &r, None, Some(&ilu), abs_tol, MAX_ITER)?;
            for (xi, di) in x.iter_mut().zip(&fix.x) {
                *xi += di;
            }
        }
        let ax = matrix.mul_vec(&x);
        let residual = b.iter().zip(&ax).fold(0.0f64, |m, (bi, ai)| m.max((bi - ai).abs()));
        if residual <= abs_tol {
            Ok(x)
        } else {
            Err(Error::ConvergenceFailure { residual, iterations: 3 })
        }
    }

    /// Solution values on the interior for data on the boundary.
    pub fn solve_data(&self, data: &[f64], method: SolveMethod, tol: f64) -> Result<Vec<f64>> {
        if data.len() != self.boundary.len() {
            return Err(Error::BoundaryDataMismatch(format!(
                "{} boundary points, {} data values",
                self.boundary.len(),
                data.len()
            )));
        }
        let scale = 1.0 + linalg::max_abs(data);
        let b = self.rhs(data);
        self.solve_linear(&b, false, method, 0.5 * tol * scale)
    }

    /// Joins interior values and boundary data into one field on `I ∪ ∂I`.
    pub fn assemble(&self, interior_values: &[f64], data: &[f64]) -> Field {
        let mut points = Vec::with_capacity(self.interior.len() + self.boundary.len());
        let mut values = Vec::with_capacity(points.capacity());
        let (a, b) = (self.interior.points(), self.boundary.points());
        let (mut i, mut j) = (0, 0);
        while i < a.len() || j < b.len() {
            if j >= b.len() || (i < a.len() && a[i] < b[j]) {
                points.push(a[i].clone());
                values.push(interior_values[i]);
                i += 1;
            } else {
                points.push(b[j].clone());
                values.push(data[j]);
                j += 1;
            }
        }
        Field::new(PointSet::from_sorted_unchecked(self.interior.dim(), points), values)
            .expect("interior and boundary are disjoint")
    }
}

/// Axis permutation (as a point permutation) giving the smallest band.
fn best_axis_order(points: &PointSet, matrix: &CsrMatrix) -> Vec<usize> {
    let d = points.dim();
    let mut axes: Vec<usize> = (0..d).collect();
    let mut best: Option<(usize, Vec<usize>)> = None;
    loop {
        let mut perm: Vec<usize> = (0..points.len()).collect();
        let pts = points.points();
        perm.sort_by(|&i, &j| {
            let (p, q) = (pts[i].coords(), pts[j].coords());
            axes.iter().map(|&k| p[k].cmp(&q[k])).find(|o| o.is_ne()).unwrap_or(core::cmp::Ordering::Equal)
        });
        let mut inv = alloc::vec![0usize; perm.len()];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let (mut lo, mut hi) = (0usize, 0usize);
        for i in 0..matrix.n_rows() {
            for (c, _) in matrix.row(i) {
                let (a, b) = (inv[i], inv[c]);
                if b < a {
                    lo = lo.max(a - b);
                } else {
                    hi = hi.max(b - a);
                }
            }
        }
        let cost = lo + hi;
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, perm));
        }
        if !next_permutation(&mut axes) {
            break;
        }
    }
    best.expect("at least one ordering").1
}

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// A banded LU factorization in a bandwidth-reducing point order.
#[derive(Clone, Debug)]
pub struct Factorization {
    perm: Vec<usize>,
    lu: BandLu,
}

impl Factorization {
    fn new(points: &PointSet, matrix: &CsrMatrix) -> Result<Self> {
        let perm = best_axis_order(points, matrix);
        let lu = BandLu::factor(&matrix.permuted(&perm))?;
        Ok(Factorization { perm, lu })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut work: Vec<f64> = self.perm.iter().map(|&i| b[i]).collect();
        self.lu.solve_in_place(&mut work);
        let mut x = alloc::vec![0.0; b.len()];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = work[new];
        }
        x
    }
}

/// A Dirichlet problem: interior `I`, kernel, and data on `∂I`.
#[derive(Clone, Debug)]
pub struct DirichletProblem<'k> {
    system: DirichletSystem,
    kernel: &'k TransitionKernel,
    data: Vec<f64>,
}

impl<'k> DirichletProblem<'k> {
    /// `data` must be supported exactly on the step-set boundary of `interior`.
    pub fn new(interior: PointSet, kernel: &'k TransitionKernel, data: &Field) -> Result<Self> {
        let system = DirichletSystem::new(interior, kernel)?;
        if data.support() != system.boundary() {
            return Err(Error::BoundaryDataMismatch(format!(
                "data covers {} points, boundary has {}",
                data.len(),
                system.boundary().len()
            )));
        }
        let data = data.values().to_vec();
        Ok(DirichletProblem { system, kernel, data })
    }

    pub fn with_data<F: FnMut(&LatticePoint) -> f64>(
        interior: PointSet,
        kernel: &'k TransitionKernel,
        f: F,
    ) -> Result<Self> {
        let system = DirichletSystem::new(interior, kernel)?;
        let data = system.boundary().iter().map(f).collect();
        Ok(DirichletProblem { system, kernel, data })
    }

    pub fn system(&self) -> &DirichletSystem {
        &self.system
    }

    pub fn kernel(&self) -> &TransitionKernel {
        self.kernel
    }

    pub fn boundary_data(&self) -> Field {
        Field::new(self.system.boundary().clone(), self.data.clone()).expect("aligned")
    }

    pub fn solve_with(&self, method: SolveMethod, tol: f64) -> Result<Field> {
        let u = self.system.solve_data(&self.data, method, tol)?;
        let residual = self.system.residual(&u, &self.data);
        let scale = 1.0 + linalg::max_abs(&u).max(linalg::max_abs(&self.data));
        if residual > tol * scale {
            return Err(Error::ConvergenceFailure { residual, iterations: 0 });
        }
        Ok(self.system.assemble(&u, &self.data))
    }
}

/// Solves `Lu = 0` on the interior with the problem's boundary data.
pub fn solve_dirichlet(problem: &DirichletProblem<'_>, tol: f64) -> Result<Field> {
    problem.solve_with(SolveMethod::Auto, tol)
}

/// `x -> P_x[S(τ_I) ∈ target]` on the interior.
pub fn harmonic_measure(
    interior: &PointSet,
    kernel: &TransitionKernel,
    target: &PointSet,
    tol: f64,
) -> Result<Field> {
    let system = DirichletSystem::new(interior.clone(), kernel)?;
    if let Some(bad) = target.iter().find(|t| !system.boundary().contains(t)) {
        return Err(Error::InvalidTarget(bad.clone()));
    }
    let data: Vec<f64> =
        system.boundary().iter().map(|z| if target.contains(z) { 1.0 } else { 0.0 }).collect();
    let u = system.solve_data(&data, SolveMethod::Auto, tol)?;
    Field::new(interior.clone(), u)
}

/// The column `x -> G_x^y` of the Green function of the walk killed on
/// leaving `interior`: expected visits to `y` starting from `x`.
pub fn green_function(interior: &PointSet, kernel: &TransitionKernel, y: &LatticePoint, tol: f64) -> Result<Field> {
    let system = DirichletSystem::new(interior.clone(), kernel)?;
    green_solve(&system, y, false, SolveMethod::Auto, tol)
}

/// The row `x -> G_y^x`: expected visits to each `x` starting from `y`.
pub fn green_from_source(
    interior: &PointSet,
    kernel: &TransitionKernel,
    y: &LatticePoint,
    tol: f64,
) -> Result<Field> {
    let system = DirichletSystem::new(interior.clone(), kernel)?;
    green_solve(&system, y, true, SolveMethod::Auto, tol)
}

pub(crate) fn green_solve(
    system: &DirichletSystem,
    y: &LatticePoint,
    from_source: bool,
    method: SolveMethod,
    tol: f64,
) -> Result<Field> {
    let j = system.interior().index_of(y).ok_or_else(|| Error::InvalidSource(y.clone()))?;
    let mut b = alloc::vec![0.0; system.interior().len()];
    b[j] = 1.0;
    let g = system.solve_linear(&b, from_source, method, tol)?;
    // Unreachable points are exact zeros; round tiny negative noise.
    let g = g.into_iter().map(|v| v.max(0.0)).collect();
    Field::new(system.interior().clone(), g)
}

/// Exit distribution of the collar `C_{Kr,r}(y)`, split by where the walk
/// leaves: into the deep part `D_{Kr,r}(y)` (top), into the rest of the
/// domain (side), or out of the domain (bottom).
#[derive(Clone, Debug)]
pub struct ExitSplit {
    pub collar: PointSet,
    pub top: PointSet,
    pub side: PointSet,
    pub bottom: PointSet,
    /// Harmonic measures of the three exit sets on `collar ∪ ∂collar`.
    pub p_top: Field,
    pub p_side: Field,
    pub p_bottom: Field,
    /// `C ∩ B_r(y)`.
    pub probes: PointSet,
    /// `min p_top / p_side` over the probes (infinite when `p_side = 0`).
    pub min_ratio: f64,
    pub witness: LatticePoint,
}

/// Builds the collar `C_{Kr,r}(y)` and solves for its exit split.
pub fn exit_split(
    y: &LatticePoint,
    k: Rational,
    r: Radius,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    tol: f64,
) -> Result<ExitSplit> {
    if k < Rational::from_integer(2) {
        return Err(Error::InvalidGeometry(format!("collar factor K = {k} must be at least 2")));
    }
    let steps = kernel.steps();
    let outer = r.times(*k.numer(), *k.denom());
    let collar = enumerate_region(&Region::collar(y.clone(), outer, r), Some(domain), steps)?;
    let probes = enumerate_region(&Region::ball(y.clone(), r), Some(domain), steps)?;
    let system = DirichletSystem::new(collar.clone(), kernel)?;
    let mut top = Vec::new();
    let mut side = Vec::new();
    let mut bottom = Vec::new();
    for z in system.boundary() {
        if !domain.contains(z) {
            bottom.push(z.clone());
        } else if outer.admits_sq(z.dist_sq(y)) && !geometry::boundary_within(z, domain, steps, r) {
            top.push(z.clone());
        } else {
            side.push(z.clone());
        }
    }
    let dim = y.dim();
    let top = PointSet::from_sorted_unchecked(dim, top);
    let side = PointSet::from_sorted_unchecked(dim, side);
    let bottom = PointSet::from_sorted_unchecked(dim, bottom);
    if top.is_empty() {
        return Err(Error::InvalidGeometry("collar has an empty top set".into()));
    }
    let factor = system.factor(false)?;
    let measure = |set: &PointSet| -> Result<Field> {
        let data: Vec<f64> = system.boundary().iter().map(|z| if set.contains(z) { 1.0 } else { 0.0 }).collect();
        let b = system.rhs(&data);
        let u = factor.solve(&b);
        let residual = system.residual(&u, &data);
        if residual > tol {
            return Err(Error::ConvergenceFailure { residual, iterations: 0 });
        }
        Ok(system.assemble(&u, &data))
    };
    let p_top = measure(&top)?;
    let p_side = measure(&side)?;
    let p_bottom = measure(&bottom)?;
    let mut min_ratio = f64::INFINITY;
    let mut witness = probes.points().first().cloned().unwrap_or_else(|| y.clone());
    for x in &probes {
        let (t, s) = (p_top.get(x)?, p_side.get(x)?);
        let ratio = if s > 0.0 { t / s } else { f64::INFINITY };
        if ratio < min_ratio {
            min_ratio = ratio;
            witness = x.clone();
        }
    }
    Ok(ExitSplit { collar, top, side, bottom, p_top, p_side, p_bottom, probes, min_ratio, witness })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::LipschitzProfile;
    use alloc::vec;
    use proptest::prelude::*;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c)
    }

    fn interval(lo: i64, hi: i64) -> PointSet {
        PointSet::from_points(1, (lo..=hi).map(|i| pt(&[i])).collect()).unwrap()
    }

    fn cube(d: usize, r: i64) -> PointSet {
        enumerate_region(&Region::cube(LatticePoint::origin(d), Radius::new(r)), None, &[]).unwrap()
    }

    /// Dense `I - P_II` and `P_I∂ g`, assembled straight from the kernel.
    fn dense_oracle(interior: &PointSet, kernel: &TransitionKernel, g: impl Fn(&LatticePoint) -> f64) -> Vec<f64> {
        let n = interior.len();
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for (i, x) in interior.iter().enumerate() {
            a[i * n + i] += 1.0;
            for (e, p) in kernel.steps().iter().zip(kernel.weights_at(x)) {
                let z = x + e;
                match interior.iter().position(|q| *q == z) {
                    Some(j) => a[i * n + j] -= p,
                    None => b[i] += p * g(&z),
                }
            }
        }
        DenseLu::factor(n, a).unwrap().solve(&b)
    }

    /// `Σ_{n <= steps} P_x(S_n = y, τ > n)` by propagating the killed law.
    fn path_sum(interior: &PointSet, kernel: &TransitionKernel, x: &LatticePoint, y: &LatticePoint, steps: usize) -> f64 {
        let mut mass = vec![0.0; interior.len()];
        mass[interior.index_of(x).unwrap()] = 1.0;
        let target = interior.index_of(y).unwrap();
        let mut total = 0.0;
        for _ in 0..=steps {
            total += mass[target];
            let mut next = vec![0.0; interior.len()];
            for (i, z) in interior.iter().enumerate() {
                if mass[i] == 0.0 {
                    continue;
                }
                for (e, p) in kernel.steps().iter().zip(kernel.weights_at(z)) {
                    if let Some(j) = interior.index_of(&(z + e)) {
                        next[j] += mass[i] * p;
                    }
                }
            }
            mass = next;
        }
        total
    }

    #[test]
    fn constant_data_gives_constant_solution() {
        for k in [TransitionKernel::simple(2), TransitionKernel::checkerboard()] {
            let p = DirichletProblem::with_data(cube(2, 4), &k, |_| 1.0).unwrap();
            let u = solve_dirichlet(&p, 1e-10).unwrap();
            assert!(u.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn linear_data_is_reproduced_in_a_slab() {
        let c = LipschitzDomain::half_space(2);
        let k = TransitionKernel::checkerboard();
        let slab = enumerate_region(&Region::ball(pt(&[0, 0]), Radius::new(10)), Some(&c), k.steps()).unwrap();
        let p = DirichletProblem::with_data(slab, &k, |z| z.height() as f64).unwrap();
        let u = solve_dirichlet(&p, 1e-10).unwrap();
        for (x, v) in u.iter() {
            assert!((v - x.height() as f64).abs() < 1e-10, "{x}");
        }
    }

    #[test]
    fn single_indicator_matches_dense_oracle() {
        let interior = cube(2, 1);
        for k in [TransitionKernel::simple(2), TransitionKernel::checkerboard()] {
            let target = pt(&[2, 0]);
            let u = harmonic_measure(&interior, &k, &PointSet::from_points(2, vec![target.clone()]).unwrap(), 1e-12).unwrap();
            let oracle = dense_oracle(&interior, &k, |z| if *z == target { 1.0 } else { 0.0 });
            for (v, w) in u.values().iter().zip(&oracle) {
                assert!((v - w).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn every_method_agrees_with_the_dense_oracle() {
        let c = LipschitzDomain::new(2, LipschitzProfile::wedge()).unwrap();
        let k = TransitionKernel::checkerboard();
        let interior = enumerate_region(&Region::ball(pt(&[0, 0]), Radius::new(12)), Some(&c), k.steps()).unwrap();
        let system = DirichletSystem::new(interior.clone(), &k).unwrap();
        let data: Vec<f64> = system.boundary().iter().map(|z| (z.coords()[1] as f64 * 0.3).cos().abs()).collect();
        let lookup = |z: &LatticePoint| data[system.boundary().index_of(z).unwrap()];
        let oracle = dense_oracle(&interior, &k, lookup);
        for method in [SolveMethod::Direct, SolveMethod::Dense, SolveMethod::Iterative, SolveMethod::Auto] {
            let u = system.solve_data(&data, method, 1e-12).unwrap();
            let diff = u.iter().zip(&oracle).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            assert!(diff < 1e-10, "{method:?}: {diff}");
        }
    }

    #[test]
    fn gamblers_ruin() {
        let k = TransitionKernel::simple(1);
        for n in [10i64, 100] {
            let u = harmonic_measure(&interval(1, n - 1), &k, &interval(n, n), 1e-13).unwrap();
            for (x, v) in u.iter() {
                assert!((v - x.height() as f64 / n as f64).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn measure_of_whole_boundary_is_one_and_additive() {
        let k = TransitionKernel::checkerboard();
        let interior = cube(2, 3);
        let system = DirichletSystem::new(interior.clone(), &k).unwrap();
        let all = harmonic_measure(&interior, &k, system.boundary(), 1e-12).unwrap();
        assert!(all.values().iter().all(|v| (v - 1.0).abs() < 1e-12));
        let left = system.boundary().filter(|z| z.height() < 0);
        let right = system.boundary().difference(&left);
        let a = harmonic_measure(&interior, &k, &left, 1e-12).unwrap();
        let b = harmonic_measure(&interior, &k, &right, 1e-12).unwrap();
        for (p, q) in a.values().iter().zip(b.values()) {
            assert!((p + q - 1.0).abs() < 1e-12);
        }
        let corner = left.filter(|z| z.coords()[1] > 0);
        let c = harmonic_measure(&interior, &k, &corner, 1e-12).unwrap();
        assert!(c.values().iter().zip(a.values()).all(|(p, q)| p <= q));
    }

    #[test]
    fn invalid_target_and_source() {
        let k = TransitionKernel::simple(1);
        let err = harmonic_measure(&interval(1, 4), &k, &interval(3, 3), 1e-10).unwrap_err();
        assert_eq!(err, Error::InvalidTarget(pt(&[3])));
        let err = green_function(&interval(1, 4), &k, &pt(&[9]), 1e-10).unwrap_err();
        assert_eq!(err, Error::InvalidSource(pt(&[9])));
        let mismatch = Field::new(interval(0, 0), vec![1.0]).unwrap();
        assert!(matches!(DirichletProblem::new(interval(1, 4), &k, &mismatch), Err(Error::BoundaryDataMismatch(_))));
        assert_eq!(DirichletSystem::new(PointSet::empty(1), &k).unwrap_err(), Error::EmptyInterior);
    }

    #[test]
    fn green_function_matches_path_sums() {
        let interior = PointSet::from_points(2, vec![pt(&[0, 0]), pt(&[1, 0]), pt(&[1, 1]), pt(&[2, 1])]).unwrap();
        for k in [TransitionKernel::simple(2), TransitionKernel::checkerboard()] {
            for y in &interior {
                let column = green_function(&interior, &k, y, 1e-14).unwrap();
                let row = green_from_source(&interior, &k, y, 1e-14).unwrap();
                for x in &interior {
                    let forward = path_sum(&interior, &k, x, y, 200);
                    let backward = path_sum(&interior, &k, y, x, 200);
                    assert!((column.get(x).unwrap() - forward).abs() < 1e-12, "G_{x}^{y}");
                    assert!((row.get(x).unwrap() - backward).abs() < 1e-12, "G_{y}^{x}");
                }
            }
        }
    }

    #[test]
    fn green_function_vanishes_when_unreachable() {
        let interior = PointSet::from_points(2, vec![pt(&[0, 0]), pt(&[1, 0]), pt(&[5, 5])]).unwrap();
        let g = green_function(&interior, &TransitionKernel::simple(2), &pt(&[5, 5]), 1e-12).unwrap();
        assert_eq!(g.get(&pt(&[0, 0])).unwrap(), 0.0);
        assert_eq!(g.get(&pt(&[1, 0])).unwrap(), 0.0);
        assert_eq!(g.get(&pt(&[5, 5])).unwrap(), 1.0);
    }

    #[test]
    fn exit_split_is_a_probability_partition() {
        let k = TransitionKernel::simple(2);
        let c = LipschitzDomain::half_space(2);
        let split = exit_split(&pt(&[0, 0]), Rational::from_integer(8), Radius::new(4), &c, &k, 1e-10).unwrap();
        for ((t, s), b) in split.p_top.values().iter().zip(split.p_side.values()).zip(split.p_bottom.values()) {
            assert!((t + s + b - 1.0).abs() < 1e-12);
        }
        assert!(split.min_ratio > 1.0);
        let e = exit_split(&pt(&[0, 0]), Rational::new(3, 2), Radius::new(4), &c, &k, 1e-10).unwrap_err();
        assert!(matches!(e, Error::InvalidGeometry(_)));
    }

    #[test]
    fn half_line_exit_split_is_gamblers_ruin() {
        // Collar C_{Kr,r}(0) on the half-line is {1..r}; the walk leaves at 0
        // (bottom) or r+1 (top), and there is no side.
        let k = TransitionKernel::simple(1);
        let c = LipschitzDomain::half_space(1);
        let r = 5;
        let split = exit_split(&pt(&[0]), Rational::from_integer(4), Radius::new(r), &c, &k, 1e-12).unwrap();
        assert!(split.side.is_empty());
        assert_eq!(split.top.points(), &[pt(&[r + 1])]);
        for x in &split.collar {
            let expected = x.height() as f64 / (r + 1) as f64;
            assert!((split.p_top.get(x).unwrap() - expected).abs() < 1e-13);
        }
        assert_eq!(split.min_ratio, f64::INFINITY);
    }

    proptest! {
        #[test]
        fn solutions_obey_maximum_principle_and_linearity(
            d1 in prop::collection::vec(-1.0f64..1.0, 24),
            d2 in prop::collection::vec(0.0f64..2.0, 24),
        ) {
            let k = TransitionKernel::checkerboard();
            let system = DirichletSystem::new(cube(2, 2), &k).unwrap();
            let m = system.boundary().len();
            prop_assert_eq!(m, 20);
            let (d1, d2) = (&d1[..m], &d2[..m]);
            let u1 = system.solve_data(d1, SolveMethod::Auto, 1e-12).unwrap();
            let u2 = system.solve_data(d2, SolveMethod::Auto, 1e-12).unwrap();
            let sum: Vec<f64> = d1.iter().zip(d2).map(|(a, b)| a + b).collect();
            let u = system.solve_data(&sum, SolveMethod::Auto, 1e-12).unwrap();
            let (lo, hi) = d1.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
            for i in 0..u.len() {
                prop_assert!((u[i] - u1[i] - u2[i]).abs() <= 2e-12);
                prop_assert!(u1[i] >= lo - 1e-12 && u1[i] <= hi + 1e-12);
            }
        }
    }
}
