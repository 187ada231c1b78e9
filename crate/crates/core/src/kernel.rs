//! Step sets, transition kernels and the difference operator `L`.

use alloc::format;
use alloc::vec::Vec;

use num_traits::{Signed, Zero};

use crate::error::{Error, KernelCondition, KernelViolation, Result};
use crate::field::Field;
use crate::geometry::{LatticePoint, PointSet, Rational};

/// Tolerance on the kernel conditions for floating-point weights.
pub const FLOAT_TOL: f64 = 1e-12;

/// A transition probability, exact when given as a rational.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weight {
    Exact(Rational),
    Float(f64),
}

impl Weight {
    pub fn ratio(num: i64, den: i64) -> Self {
        Weight::Exact(Rational::new(num, den))
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Weight::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            Weight::Float(v) => v,
        }
    }

    fn exact(self) -> Option<Rational> {
        match self {
            Weight::Exact(r) => Some(r),
            Weight::Float(_) => None,
        }
    }
}

/// The finite step set `Γ`. Always contains the positive unit vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct StepSet {
    dim: usize,
    steps: Vec<LatticePoint>,
}

impl StepSet {
    /// Validates dimensions, distinctness, the presence of every `e_k` and
    /// the existence of a centered elliptic weighting.
    pub fn new(dim: usize, steps: Vec<LatticePoint>) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::InvalidStepSet("empty step set".into()));
        }
        for e in &steps {
            e.check_dim(dim).map_err(|_| {
                Error::InvalidStepSet(format!("step {e} does not have dimension {dim}"))
            })?;
        }
        for (i, e) in steps.iter().enumerate() {
            if steps[..i].contains(e) {
                return Err(Error::InvalidStepSet(format!("duplicate step {e}")));
            }
        }
        for k in 0..dim {
            let unit = LatticePoint::unit(dim, k);
            if !steps.contains(&unit) {
                return Err(Error::InvalidStepSet(format!("missing unit vector {unit}")));
            }
        }
        let set = StepSet { dim, steps };
        if let Some(w) = set.separating_direction() {
            return Err(Error::InvalidStepSet(format!(
                "no centered weighting exists: every step e has w·e >= 0 for w = {w:?}"
            )));
        }
        Ok(set)
    }

    /// `[e_1, .., e_d, -e_1, .., -e_d]`.
    pub fn nearest_neighbour(dim: usize) -> Self {
        let mut steps: Vec<LatticePoint> = (0..dim).map(|k| LatticePoint::unit(dim, k)).collect();
        steps.extend((0..dim).map(|k| LatticePoint::unit(dim, k).scaled(-1)));
        StepSet { dim, steps }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn steps(&self) -> &[LatticePoint] {
        &self.steps
    }

    pub fn max_len_sq(&self) -> i64 {
        self.steps.iter().map(|e| e.norm_sq()).max().unwrap_or(0)
    }

    /// A nonzero `w` with `w·e >= 0` for all steps, if one exists.
    ///
    /// Strictly positive weights with zero mean exist iff the cone spanned by
    /// the steps is all of `R^d`. The steps span `R^d` (they contain the unit
    /// vectors), so the dual cone is pointed and, when nonzero, has an
    /// extreme ray orthogonal to `d - 1` independent steps. Enumerating
    /// those rays with exact integer cofactors decides feasibility.
    fn separating_direction(&self) -> Option<Vec<i128>> {
        let d = self.dim;
        let nonzero: Vec<&LatticePoint> = self.steps.iter().filter(|e| !e.is_zero()).collect();
        let check = |w: &[i128]| {
            nonzero.iter().all(|e| {
                e.coords().iter().zip(w).map(|(&a, &b)| a as i128 * b).sum::<i128>() >= 0
            })
        };
        let mut subset: Vec<usize> = (0..d - 1).collect();
        loop {
            if subset.len() == d - 1 && subset.iter().all(|&i| i < nonzero.len()) {
                let rows: Vec<&[i64]> = subset.iter().map(|&i| nonzero[i].coords()).collect();
                let w = cross_product(&rows, d);
                if w.iter().any(|&c| c != 0) {
                    if check(&w) {
                        return Some(w);
                    }
                    let neg: Vec<i128> = w.iter().map(|c| -c).collect();
                    if check(&neg) {
                        return Some(neg);
                    }
                }
            }
            if !next_combination(&mut subset, nonzero.len()) {
                return None;
            }
        }
    }
}

fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    if k == 0 || k > n {
        return false;
    }
    let mut i = k;
    while i > 0 {
        i -= 1;
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// The vector orthogonal to `d - 1` rows in `Z^d` given by signed cofactors.
fn cross_product(rows: &[&[i64]], d: usize) -> Vec<i128> {
    (0..d)
        .map(|col| {
            let minor: Vec<Vec<i128>> = rows
                .iter()
                .map(|r| (0..d).filter(|&c| c != col).map(|c| r[c] as i128).collect())
                .collect();
            let sign = if col % 2 == 0 { 1 } else { -1 };
            sign * det(minor)
        })
        .collect()
}

/// Bareiss fraction-free determinant.
fn det(mut m: Vec<Vec<i128>>) -> i128 {
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&i| m[i][k] != 0) {
                Some(i) => {
                    m.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// How `π(x, ·)` depends on the site `x`.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelRule {
    Homogeneous(Vec<Weight>),
    /// `table` is indexed by `x mod periods` in lexicographic cell order.
    Periodic { periods: Vec<i64>, table: Vec<Vec<Weight>> },
    /// Nearest-neighbour walk with `π(x, ±e_k) = w_k(x) / 2` where
    /// `w_k ∝ 1 + ε cos(ω_k · x + φ_k)`. Symmetric pairs make it centered.
    Modulated { epsilon: f64, frequencies: Vec<Vec<f64>>, phases: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransitionKernel {
    steps: StepSet,
    rule: KernelRule,
    alpha: Weight,
    float_table: Vec<Vec<f64>>,
}

/// Worst margins seen while validating a kernel on a window.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub points_checked: usize,
    pub exact: bool,
    pub worst_normalization: f64,
    pub worst_drift: f64,
    /// `min π(x, e) - α` over the window.
    pub ellipticity_margin: f64,
}

impl TransitionKernel {
    fn build(steps: StepSet, rule: KernelRule, alpha: Weight) -> Result<Self> {
        let n = steps.len();
        let check_len = |w: &Vec<Weight>| {
            if w.len() == n {
                Ok(())
            } else {
                Err(Error::KernelSpec(format!("{} weights for {n} steps", w.len())))
            }
        };
        let float_table = match &rule {
            KernelRule::Homogeneous(w) => {
                check_len(w)?;
                alloc::vec![w.iter().map(|v| v.to_f64()).collect()]
            }
            KernelRule::Periodic { periods, table } => {
                if periods.len() != steps.dim() || periods.iter().any(|&p| p < 1) {
                    return Err(Error::KernelSpec(format!("bad periods {periods:?}")));
                }
                let cells: i64 = periods.iter().product();
                if table.len() as i64 != cells {
                    return Err(Error::KernelSpec(format!(
                        "periods {periods:?} need {cells} table rows, got {}",
                        table.len()
                    )));
                }
                for row in table {
                    check_len(row)?;
                }
                table.iter().map(|row| row.iter().map(|v| v.to_f64()).collect()).collect()
            }
            KernelRule::Modulated { epsilon, frequencies, phases } => {
                let d = steps.dim();
                if steps != StepSet::nearest_neighbour(d) {
                    return Err(Error::KernelSpec(
                        "modulated kernels use the nearest-neighbour steps [e_1..e_d, -e_1..-e_d]".into(),
                    ));
                }
                if !(0.0..1.0).contains(epsilon) {
                    return Err(Error::KernelSpec(format!("epsilon {epsilon} must lie in [0, 1)")));
                }
                if frequencies.len() != d || frequencies.iter().any(|f| f.len() != d) || phases.len() != d {
                    return Err(Error::KernelSpec("need d frequency vectors of length d and d phases".into()));
                }
                Vec::new()
            }
        };
        if alpha.to_f64() <= 0.0 {
            return Err(Error::KernelSpec("ellipticity floor must be positive".into()));
        }
        Ok(TransitionKernel { steps, rule, alpha, float_table })
    }

    /// Simple random walk: `π = 1/(2d)` on `±e_k`.
    pub fn simple(dim: usize) -> Self {
        let w = Weight::ratio(1, 2 * dim as i64);
        Self::build(StepSet::nearest_neighbour(dim), KernelRule::Homogeneous(alloc::vec![w; 2 * dim]), w)
            .expect("simple random walk is well formed")
    }

    pub fn homogeneous(steps: StepSet, weights: Vec<Weight>, alpha: Weight) -> Result<Self> {
        Self::build(steps, KernelRule::Homogeneous(weights), alpha)
    }

    pub fn periodic(steps: StepSet, periods: Vec<i64>, table: Vec<Vec<Weight>>, alpha: Weight) -> Result<Self> {
        Self::build(steps, KernelRule::Periodic { periods, table }, alpha)
    }

    pub fn modulated(
        dim: usize,
        epsilon: f64,
        frequencies: Vec<Vec<f64>>,
        phases: Vec<f64>,
        alpha: Weight,
    ) -> Result<Self> {
        Self::build(StepSet::nearest_neighbour(dim), KernelRule::Modulated { epsilon, frequencies, phases }, alpha)
    }

    /// The checkerboard kernel on `Z^2` with steps `(e1, e2, -e1, -e2)`:
    /// weights `(3,2,3,2)/10` on even sites and `(2,3,2,3)/10` on odd ones.
    pub fn checkerboard() -> Self {
        let a = [3, 2, 3, 2].map(|n| Weight::ratio(n, 10)).to_vec();
        let b = [2, 3, 2, 3].map(|n| Weight::ratio(n, 10)).to_vec();
        Self::periodic(
            StepSet::nearest_neighbour(2),
            alloc::vec![2, 2],
            alloc::vec![a.clone(), b.clone(), b, a],
            Weight::ratio(1, 5),
        )
        .expect("checkerboard kernel is well formed")
    }

    pub fn dim(&self) -> usize {
        self.steps.dim()
    }

    pub fn step_set(&self) -> &StepSet {
        &self.steps
    }

    pub fn steps(&self) -> &[LatticePoint] {
        self.steps.steps()
    }

    pub fn rule(&self) -> &KernelRule {
        &self.rule
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.to_f64()
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.rule, KernelRule::Homogeneous(_))
    }

    fn cell(&self, x: &LatticePoint, periods: &[i64]) -> usize {
        let mut idx = 0usize;
        for (c, &p) in x.coords().iter().zip(periods) {
            idx = idx * p as usize + c.rem_euclid(p) as usize;
        }
        idx
    }

    fn exact_weights(&self, x: &LatticePoint) -> Option<&[Weight]> {
        match &self.rule {
            KernelRule::Homogeneous(w) => Some(w),
            KernelRule::Periodic { periods, table } => Some(&table[self.cell(x, periods)]),
            KernelRule::Modulated { .. } => None,
        }
    }

    /// Writes `π(x, e)` for every step `e`, in step order, into `out`.
    pub fn weights_into(&self, x: &LatticePoint, out: &mut [f64]) {
        match &self.rule {
            KernelRule::Homogeneous(_) => out.copy_from_slice(&self.float_table[0]),
            KernelRule::Periodic { periods, .. } => {
                out.copy_from_slice(&self.float_table[self.cell(x, periods)])
            }
            KernelRule::Modulated { epsilon, frequencies, phases } => {
                let d = self.dim();
                let mut total = 0.0;
                for k in 0..d {
                    let arg: f64 = frequencies[k].iter().zip(x.coords()).map(|(w, &c)| w * c as f64).sum::<f64>()
                        + phases[k];
                    let w = 1.0 + epsilon * libm::cos(arg);
                    out[k] = w;
                    total += w;
                }
                for k in 0..d {
                    let w = out[k] / (2.0 * total);
                    out[k] = w;
                    out[k + d] = w;
                }
            }
        }
    }

    pub fn weights_at(&self, x: &LatticePoint) -> Vec<f64> {
        let mut w = alloc::vec![0.0; self.steps.len()];
        self.weights_into(x, &mut w);
        w
    }

    /// `Σ_e π(x, e) e`.
    pub fn drift(&self, x: &LatticePoint) -> Vec<f64> {
        let w = self.weights_at(x);
        let mut out = alloc::vec![0.0; self.dim()];
        for (e, p) in self.steps().iter().zip(&w) {
            for (o, &c) in out.iter_mut().zip(e.coords()) {
                *o += p * c as f64;
            }
        }
        out
    }

    /// Checks normalization, centering and ellipticity at every point of
    /// `window`: exactly for rational weights, to [`FLOAT_TOL`] otherwise.
    pub fn validate(&self, window: &PointSet) -> Result<ValidationReport> {
        let mut report = ValidationReport {
            points_checked: 0,
            exact: true,
            worst_normalization: 0.0,
            worst_drift: 0.0,
            ellipticity_margin: f64::INFINITY,
        };
        for x in window {
            x.check_dim(self.dim())?;
            let exact = self.exact_weights(x).and_then(|w| {
                let ws: Option<Vec<Rational>> = w.iter().map(|v| v.exact()).collect();
                ws.zip(self.alpha.exact())
            });
            let violation = match exact {
                Some((w, alpha)) => self.check_exact(x, &w, alpha, &mut report),
                None => {
                    report.exact = false;
                    self.check_float(x, &mut report)
                }
            };
            if let Some(v) = violation {
                return Err(Error::InvalidKernel(v));
            }
            report.points_checked += 1;
        }
        Ok(report)
    }

    fn violation(&self, x: &LatticePoint, condition: KernelCondition, magnitude: f64) -> KernelViolation {
        KernelViolation { point: x.clone(), condition, magnitude, drift: self.drift(x) }
    }

    fn check_exact(
        &self,
        x: &LatticePoint,
        w: &[Rational],
        alpha: Rational,
        report: &mut ValidationReport,
    ) -> Option<KernelViolation> {
        let to_f = |r: Rational| *r.numer() as f64 / *r.denom() as f64;
        let total = w.iter().fold(Rational::zero(), |a, b| a + b);
        let one = Rational::from_integer(1);
        if total != one {
            return Some(self.violation(x, KernelCondition::Normalization, to_f((total - one).abs())));
        }
        for k in 0..self.dim() {
            let s = self
                .steps()
                .iter()
                .zip(w)
                .fold(Rational::zero(), |a, (e, p)| a + *p * Rational::from_integer(e.coords()[k]));
            if !s.is_zero() {
                return Some(self.violation(x, KernelCondition::Centering, to_f(s.abs())));
            }
        }
        let min = *w.iter().min().expect("nonempty step set");
        if min < alpha {
            return Some(self.violation(x, KernelCondition::Ellipticity, to_f(alpha - min)));
        }
        report.ellipticity_margin = report.ellipticity_margin.min(to_f(min - alpha));
        None
    }

    fn check_float(&self, x: &LatticePoint, report: &mut ValidationReport) -> Option<KernelViolation> {
        let w = self.weights_at(x);
        let norm = (w.iter().sum::<f64>() - 1.0).abs();
        report.worst_normalization = report.worst_normalization.max(norm);
        if norm > FLOAT_TOL {
            return Some(self.violation(x, KernelCondition::Normalization, norm));
        }
        let drift = self.drift(x).iter().fold(0.0f64, |m, c| m.max(c.abs()));
        report.worst_drift = report.worst_drift.max(drift);
        if drift > FLOAT_TOL {
            return Some(self.violation(x, KernelCondition::Centering, drift));
        }
        let min = w.iter().copied().fold(f64::INFINITY, f64::min);
        let margin = min - self.alpha.to_f64();
        report.ellipticity_margin = report.ellipticity_margin.min(margin);
        if margin < -FLOAT_TOL {
            return Some(self.violation(x, KernelCondition::Ellipticity, -margin));
        }
        None
    }

    /// `Lu(x) = Σ_e π(x, e) u(x + e) - u(x)`.
    pub fn apply_l(&self, u: &Field, x: &LatticePoint) -> Result<f64> {
        let w = self.weights_at(x);
        let centre = u.get(x).map_err(|_| Error::IncompleteField(x.clone()))?;
        let mut acc = 0.0;
        for (e, p) in self.steps().iter().zip(&w) {
            let y = x + e;
            acc += p * u.get(&y).map_err(|_| Error::IncompleteField(y.clone()))?;
        }
        Ok(acc - centre)
    }
}
