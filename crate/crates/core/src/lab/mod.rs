//! Measured constants and exponents of the inequalities satisfied by
//! nonnegative harmonic functions of the killed walk.
//!
//! Each measurement ranges over harmonic-measure basis columns of a finite
//! window. The functionals are maxima of ratios of nonnegative linear
//! functionals, so their supremum over the positive harmonic cone of the
//! window is attained at a column.

mod basis;
mod fit;

use alloc::format;
use alloc::vec::Vec;

pub use basis::HarmonicBasis;
pub use fit::{band_factor, least_squares, segment_slopes, LinearFit};

use crate::dirichlet::exit_split;
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{self, enumerate_region, LatticePoint, LipschitzDomain, PointSet, Radius, Rational, Region};
use crate::kernel::TransitionKernel;

/// Default uniformity band: measurements across scales may differ by at
/// most this factor.
pub const DEFAULT_BAND: f64 = 2.0;

/// A measured constant and where it is attained.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Measurement {
    pub value: f64,
    /// Boundary point generating the extremal column.
    pub column: Option<LatticePoint>,
    /// Second extremal column, for pairwise measurements.
    pub partner: Option<LatticePoint>,
    /// Probe point where the extremum is attained.
    pub point: Option<LatticePoint>,
    pub window_points: usize,
    pub columns: usize,
}

fn anchor_of(y: &LatticePoint, r: i64, domain: &LipschitzDomain) -> Result<LatticePoint> {
    let a = y + &LatticePoint::unit(y.dim(), 0).scaled(r);
    if domain.contains(&a) {
        Ok(a)
    } else {
        Err(Error::InvalidAnchor(a))
    }
}

fn check_scale(r: i64) -> Result<()> {
    if r < 1 {
        return Err(Error::InvalidGeometry(format!("scale {r} must be at least 1")));
    }
    Ok(())
}

fn check_boundary_point(y: &LatticePoint, domain: &LipschitzDomain, kernel: &TransitionKernel) -> Result<()> {
    y.check_dim(domain.dim())?;
    if domain.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: domain.dim() });
    }
    if !geometry::is_domain_boundary(y, domain, kernel.steps()) {
        return Err(Error::InvalidGeometry(format!("{y} is not a boundary point of the domain")));
    }
    Ok(())
}

/// Basis on `C ∩ B_outer(y)` whose data avoid `∂C ∩ B_vanish(y)`.
fn vanishing_basis(
    y: &LatticePoint,
    outer: Radius,
    vanish: Radius,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    probes: PointSet,
    tol: f64,
) -> Result<HarmonicBasis> {
    let window = enumerate_region(&Region::ball(y.clone(), outer), Some(domain), kernel.steps())?;
    HarmonicBasis::compute(
        window,
        kernel,
        |z| domain.contains(z) || !vanish.admits_sq(z.dist_sq(y)),
        probes,
        tol,
    )
}

/// `max_{B_R(y)} u / min_{B_R(y)} u`, maximized over the basis of
/// `B_2R(y)` (no domain).
pub fn harnack_constant(y: &LatticePoint, r: Radius, kernel: &TransitionKernel, tol: f64) -> Result<Measurement> {
    y.check_dim(kernel.dim())?;
    let steps = kernel.steps();
    let window = enumerate_region(&Region::ball(y.clone(), r.times(2, 1)), None, steps)?;
    let probes = enumerate_region(&Region::ball(y.clone(), r), None, steps)?;
    let basis = HarmonicBasis::compute(window, kernel, |_| true, probes, tol)?;
    let mut best = Measurement {
        value: 0.0,
        column: None,
        partner: None,
        point: None,
        window_points: basis.window_size(),
        columns: basis.len(),
    };
    for c in 0..basis.len() {
        let col = basis.column(c);
        let (mut hi, mut lo, mut arg) = (f64::NEG_INFINITY, f64::INFINITY, 0);
        for (p, &v) in col.iter().enumerate() {
            if v > hi {
                hi = v;
                arg = p;
            }
            lo = lo.min(v);
        }
        if !(lo > 0.0) {
            return Err(Error::Degenerate(format!("column {} vanishes inside B_R", basis.columns()[c])));
        }
        if hi / lo > best.value {
            best.value = hi / lo;
            best.column = Some(basis.columns()[c].clone());
            best.point = Some(basis.probes().points()[arg].clone());
        }
    }
    Ok(best)
}

/// `max u / min u` of one field over `points`.
pub fn harnack_ratio_of_field(u: &Field, points: &PointSet) -> Result<f64> {
    let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
    for x in points {
        let v = u.get(x)?;
        hi = hi.max(v);
        lo = lo.min(v);
    }
    if !(lo > 0.0) {
        return Err(Error::Degenerate("field is not positive on the ball".into()));
    }
    Ok(hi / lo)
}

/// One-step Harnack ratio with the bound it must respect.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct LocalHarnack {
    pub measurement: Measurement,
    /// `1/α`.
    pub bound: f64,
}

impl LocalHarnack {
    pub fn within_bound(&self) -> bool {
        self.measurement.value <= self.bound * (1.0 + 1e-9)
    }
}

fn one_step_ratio(
    value_at: impl Fn(&LatticePoint) -> Result<f64>,
    interior: &PointSet,
    kernel: &TransitionKernel,
) -> Result<(f64, LatticePoint)> {
    let mut best = (0.0f64, interior.points()[0].clone());
    for zeta in interior {
        let base = value_at(zeta)?;
        for e in kernel.steps() {
            let xi = zeta + e;
            let v = value_at(&xi)?;
            let ratio = if base > 0.0 {
                v / base
            } else if v > 0.0 {
                f64::INFINITY
            } else {
                continue;
            };
            if ratio > best.0 {
                best = (ratio, xi);
            }
        }
    }
    Ok(best)
}

/// `max u(ζ + e) / u(ζ)` over `ζ` in the window, steps `e` and basis
/// columns of the window.
pub fn local_harnack_constant(interior: &PointSet, kernel: &TransitionKernel, tol: f64) -> Result<LocalHarnack> {
    let probes = geometry::closure(interior, kernel.steps())?;
    let basis = HarmonicBasis::compute(interior.clone(), kernel, |_| true, probes, tol)?;
    let mut best = Measurement {
        value: 0.0,
        column: None,
        partner: None,
        point: None,
        window_points: basis.window_size(),
        columns: basis.len(),
    };
    for c in 0..basis.len() {
        let col = basis.column(c);
        let (ratio, xi) = one_step_ratio(|x| Ok(col[basis.probe_index(x)?]), interior, kernel)?;
        if ratio > best.value {
            best.value = ratio;
            best.column = Some(basis.columns()[c].clone());
            best.point = Some(xi);
        }
    }
    Ok(LocalHarnack { measurement: best, bound: 1.0 / kernel.alpha() })
}

/// One-step ratio of a single field over the window.
pub fn local_harnack_ratio_of_field(u: &Field, interior: &PointSet, kernel: &TransitionKernel) -> Result<f64> {
    if interior.is_empty() {
        return Err(Error::EmptyInterior);
    }
    Ok(one_step_ratio(|x| u.get(x), interior, kernel)?.0)
}

fn require_vanishing(u: &Field, y: &LatticePoint, radius: Radius, domain: &LipschitzDomain) -> Result<()> {
    for (z, v) in u.iter() {
        if !domain.contains(z) && radius.admits_sq(z.dist_sq(y)) && v != 0.0 {
            return Err(Error::HypothesisViolated(format!("u({z}) = {v} on the boundary portion")));
        }
    }
    Ok(())
}

fn in_domain_ball(y: &LatticePoint, r: Radius, domain: &LipschitzDomain, kernel: &TransitionKernel) -> Result<PointSet> {
    enumerate_region(&Region::ball(y.clone(), r), Some(domain), kernel.steps())
}

/// `max_{C∩B_R(y)} u / u(y + R e_1)` over the basis of `C ∩ B_3R(y)`
/// vanishing on `∂C ∩ B_2R(y)`.
pub fn carleson_constant(
    y: &LatticePoint,
    r: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    tol: f64,
) -> Result<Measurement> {
    check_scale(r)?;
    check_boundary_point(y, domain, kernel)?;
    let a = anchor_of(y, r, domain)?;
    let radius = Radius::new(r);
    let ball = in_domain_ball(y, radius, domain, kernel)?;
    let probes = ball.union(&PointSet::from_points(y.dim(), alloc::vec![a.clone()])?);
    let basis = vanishing_basis(y, radius.times(3, 1), radius.times(2, 1), domain, kernel, probes, tol)?;
    let ia = basis.probe_index(&a)?;
    let ball_idx: Vec<usize> = ball.iter().map(|x| basis.probe_index(x)).collect::<Result<_>>()?;
    let mut best = Measurement {
        value: 0.0,
        column: None,
        partner: None,
        point: None,
        window_points: basis.window_size(),
        columns: basis.len(),
    };
    for c in 0..basis.len() {
        let col = basis.column(c);
        if !(col[ia] > 0.0) {
            return Err(Error::Degenerate(format!("column {} vanishes at the anchor", basis.columns()[c])));
        }
        for &p in &ball_idx {
            let ratio = col[p] / col[ia];
            if ratio > best.value {
                best.value = ratio;
                best.column = Some(basis.columns()[c].clone());
                best.point = Some(basis.probes().points()[p].clone());
            }
        }
    }
    Ok(best)
}

/// Carleson ratio of a single field vanishing on `∂C ∩ B_2R(y)`.
pub fn carleson_ratio_of_field(
    u: &Field,
    y: &LatticePoint,
    r: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
) -> Result<f64> {
    check_scale(r)?;
    let radius = Radius::new(r);
    require_vanishing(u, y, radius.times(2, 1), domain)?;
    let a = anchor_of(y, r, domain)?;
    let ua = u.get(&a)?;
    if !(ua > 0.0) {
        return Err(Error::Degenerate(format!("u vanishes at the anchor {a}")));
    }
    let mut best = 0.0f64;
    for x in &in_domain_ball(y, radius, domain, kernel)? {
        best = best.max(u.get(x)? / ua);
    }
    Ok(best)
}

/// Contraction factor `max_{closure(C∩B_R)} u / max_{closure(C∩B_{2√d R})} u`
/// over the basis of `C ∩ B_{3√d R}(y)` vanishing on `∂C ∩ B_{2√d R}(y)`.
pub fn prop1_contraction(
    y: &LatticePoint,
    r: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    tol: f64,
) -> Result<Measurement> {
    check_scale(r)?;
    check_boundary_point(y, domain, kernel)?;
    let d = y.dim() as i64;
    let radius = Radius::new(r);
    let middle = radius.times_sqrt(4 * d);
    let steps = kernel.steps();
    let small = geometry::closure(&in_domain_ball(y, radius, domain, kernel)?, steps)?;
    let large = geometry::closure(&in_domain_ball(y, middle, domain, kernel)?, steps)?;
    let basis = vanishing_basis(y, radius.times_sqrt(9 * d), middle, domain, kernel, large.clone(), tol)?;
    let small_idx: Vec<usize> = small.iter().map(|x| basis.probe_index(x)).collect::<Result<_>>()?;
    let mut best = Measurement {
        value: 0.0,
        column: None,
        partner: None,
        point: None,
        window_points: basis.window_size(),
        columns: basis.len(),
    };
    for c in 0..basis.len() {
        let col = basis.column(c);
        let den = col.iter().copied().fold(0.0f64, f64::max);
        if den == 0.0 {
            continue;
        }
        let (mut num, mut arg) = (0.0f64, small_idx[0]);
        for &p in &small_idx {
            if col[p] > num {
                num = col[p];
                arg = p;
            }
        }
        if num / den > best.value {
            best.value = num / den;
            best.column = Some(basis.columns()[c].clone());
            best.point = Some(basis.probes().points()[arg].clone());
        }
    }
    Ok(best)
}

/// Contraction ratio of one field; rejects fields that do not vanish on
/// `∂C ∩ B_{2√d R}(y)`.
pub fn prop1_ratio_of_field(
    u: &Field,
    y: &LatticePoint,
    r: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
) -> Result<f64> {
    check_scale(r)?;
    let d = y.dim() as i64;
    let radius = Radius::new(r);
    let middle = radius.times_sqrt(4 * d);
    require_vanishing(u, y, middle, domain)?;
    let steps = kernel.steps();
    let max_over = |set: &PointSet| -> Result<f64> {
        set.iter().try_fold(0.0f64, |m, x| Ok(m.max(u.get(x)?)))
    };
    let num = max_over(&geometry::closure(&in_domain_ball(y, radius, domain, kernel)?, steps)?)?;
    let den = max_over(&geometry::closure(&in_domain_ball(y, middle, domain, kernel)?, steps)?)?;
    if den == 0.0 {
        return Err(Error::Degenerate("field vanishes on the ball".into()));
    }
    Ok(num / den)
}

/// `max_x [max_u u(x)/u(a)] / [min_v v(x)/v(a)]` over `x ∈ C ∩ B_R(y)` and
/// pairs of basis columns of `C ∩ B_{3KR}(y)` vanishing on `∂C ∩ B_{2KR}(y)`.
pub fn boundary_harnack_constant(
    y: &LatticePoint,
    r: i64,
    k: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    tol: f64,
) -> Result<Measurement> {
    check_scale(r)?;
    if k < 1 {
        return Err(Error::InvalidGeometry(format!("K = {k} must be at least 1")));
    }
    check_boundary_point(y, domain, kernel)?;
    let a = anchor_of(y, r, domain)?;
    let radius = Radius::new(r);
    let ball = in_domain_ball(y, radius, domain, kernel)?;
    let probes = ball.union(&PointSet::from_points(y.dim(), alloc::vec![a.clone()])?);
    let basis = vanishing_basis(y, radius.times(3 * k, 1), radius.times(2 * k, 1), domain, kernel, probes, tol)?;
    let ia = basis.probe_index(&a)?;
    let mut best = Measurement {
        value: 0.0,
        column: None,
        partner: None,
        point: None,
        window_points: basis.window_size(),
        columns: basis.len(),
    };
    let anchors: Vec<f64> = (0..basis.len()).map(|c| basis.column(c)[ia]).collect();
    if let Some(c) = anchors.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Degenerate(format!("column {} vanishes at the anchor", basis.columns()[c])));
    }
    for x in &ball {
        let p = basis.probe_index(x)?;
        let (mut hi, mut hi_c, mut lo, mut lo_c) = (f64::NEG_INFINITY, 0, f64::INFINITY, 0);
        for c in 0..basis.len() {
            let v = basis.column(c)[p] / anchors[c];
            if v > hi {
                hi = v;
                hi_c = c;
            }
            if v < lo {
                lo = v;
                lo_c = c;
            }
        }
        let ratio = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if ratio > best.value {
            best.value = ratio;
            best.column = Some(basis.columns()[hi_c].clone());
            best.partner = Some(basis.columns()[lo_c].clone());
            best.point = Some(x.clone());
        }
    }
    Ok(best)
}

/// `[max_{C∩B_R} u/v] / [u(a)/v(a)]` for two given fields.
pub fn boundary_harnack_ratio_of_fields(
    u: &Field,
    v: &Field,
    y: &LatticePoint,
    r: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
) -> Result<f64> {
    check_scale(r)?;
    let a = anchor_of(y, r, domain)?;
    let (ua, va) = (u.get(&a)?, v.get(&a)?);
    if !(ua > 0.0 && va > 0.0) {
        return Err(Error::Degenerate(format!("a field vanishes at the anchor {a}")));
    }
    let mut best = 0.0f64;
    for x in &in_domain_ball(y, Radius::new(r), domain, kernel)? {
        let vx = v.get(x)?;
        if !(vx > 0.0) {
            return Err(Error::Degenerate(format!("v vanishes at {x}")));
        }
        best = best.max(u.get(x)? / vx);
    }
    Ok(best / (ua / va))
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Lemma2Row {
    pub k: i64,
    pub min_ratio: f64,
    pub witness: LatticePoint,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct Lemma2Table {
    pub rows: Vec<Lemma2Row>,
    /// First `K` whose minimal ratio reaches 1.
    pub onset: i64,
}

/// Tabulates `min_{C∩B_r(y)} p_top / p_side` for the collars `C_{Kr,r}(y)`
/// over the grid; the onset is the first `K` reaching 1.
pub fn lemma2_onset(
    y: &LatticePoint,
    r: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    k_grid: &[i64],
    tol: f64,
) -> Result<Lemma2Table> {
    check_scale(r)?;
    if k_grid.is_empty() || k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGeometry(format!("K grid {k_grid:?} must be nonempty and increasing")));
    }
    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let split = exit_split(y, Rational::from_integer(k), Radius::new(r), domain, kernel, tol)?;
        rows.push(Lemma2Row { k, min_ratio: split.min_ratio, witness: split.witness });
    }
    match rows.iter().find(|row| row.min_ratio >= 1.0) {
        Some(row) => {
            let onset = row.k;
            Ok(Lemma2Table { rows, onset })
        }
        None => Err(Error::OnsetNotFound(rows.iter().map(|r| r.min_ratio).collect())),
    }
}

/// Which exit set the decay profile measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DecayTarget {
    /// The top set of the collar.
    #[default]
    Top,
    /// The whole collar boundary (the function 1).
    FullBoundary,
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DecayProfile {
    /// `(δ, min u)` for each distance level in `C ∩ B_r(y)`.
    pub levels: Vec<(f64, f64)>,
    /// Least-squares fit of `log min u` against `log(δ/r)`.
    pub fit: LinearFit,
    pub beta: f64,
    /// Largest `α̂` with `min u >= 2 α̂ (δ/r)^β̂` on every level.
    pub floor: f64,
}

/// Fits the lower envelope of the collar exit probability against the
/// distance to the boundary: `u(x) ≈ 2α (δ(x)/r)^β`.
pub fn boundary_decay_profile(
    y: &LatticePoint,
    r: i64,
    k: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    target: DecayTarget,
    tol: f64,
) -> Result<DecayProfile> {
    check_scale(r)?;
    let split = exit_split(y, Rational::from_integer(k), Radius::new(r), domain, kernel, tol)?;
    let u = match target {
        DecayTarget::Top => split.p_top.clone(),
        DecayTarget::FullBoundary => {
            let sum: Vec<f64> = split
                .p_top
                .values()
                .iter()
                .zip(split.p_side.values())
                .zip(split.p_bottom.values())
                .map(|((t, s), b)| t + s + b)
                .collect();
            Field::new(split.p_top.support().clone(), sum)?
        }
    };
    let mut levels: Vec<(i64, f64)> = Vec::new();
    for x in &split.probes {
        let d2 = geometry::distance_sq_to_boundary(x, domain, kernel.steps())?;
        let v = u.get(x)?;
        match levels.iter_mut().find(|(d, _)| *d == d2) {
            Some(level) => level.1 = level.1.min(v),
            None => levels.push((d2, v)),
        }
    }
    levels.sort_by_key(|&(d, _)| d);
    if levels.len() < 5 {
        return Err(Error::InsufficientData(format!("{} distance levels, need at least 5", levels.len())));
    }
    if let Some((d2, _)) = levels.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Degenerate(format!("u vanishes at distance {}", libm::sqrt(*d2 as f64))));
    }
    let rf = r as f64;
    let levels: Vec<(f64, f64)> = levels.into_iter().map(|(d2, v)| (libm::sqrt(d2 as f64), v)).collect();
    let xs: Vec<f64> = levels.iter().map(|(d, _)| libm::log(d / rf)).collect();
    let ys: Vec<f64> = levels.iter().map(|(_, v)| libm::log(*v)).collect();
    let fit = least_squares(&xs, &ys)?;
    let beta = fit.slope;
    let floor = levels
        .iter()
        .map(|(d, v)| v / (2.0 * libm::pow(d / rf, beta)))
        .fold(f64::INFINITY, f64::min);
    Ok(DecayProfile { levels, fit, beta, floor })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct LateralDecay {
    /// `(K, max v)` with `v` the side exit probability of `C_{Kr,r}(y)`.
    pub rows: Vec<(i64, f64)>,
    /// Fit of `log max v` against `K`.
    pub fit: LinearFit,
    pub segment_slopes: Vec<f64>,
}

/// Largest probability of leaving the collar `C_{Kr,r}(y)` through its
/// side, over the closure of `C ∩ B_r(y)`, for each `K` in the grid.
pub fn lateral_decay(
    y: &LatticePoint,
    r: i64,
    k_grid: &[i64],
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    tol: f64,
) -> Result<LateralDecay> {
    check_scale(r)?;
    if k_grid.len() < 2 || k_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGeometry(format!("K grid {k_grid:?} needs two increasing values")));
    }
    let mut rows = Vec::with_capacity(k_grid.len());
    for &k in k_grid {
        let split = exit_split(y, Rational::from_integer(k), Radius::new(r), domain, kernel, tol)?;
        if split.side.is_empty() {
            return Err(Error::InvalidGeometry("empty lateral set".into()));
        }
        let inner = geometry::closure(&split.probes, kernel.steps())?;
        let max_v = inner.iter().try_fold(0.0f64, |m, x| Ok::<_, Error>(m.max(split.p_side.get(x)?)))?;
        if !(max_v > 0.0) {
            return Err(Error::Degenerate(format!("side exit probability vanishes at K = {k}")));
        }
        rows.push((k, max_v));
    }
    let xs: Vec<f64> = rows.iter().map(|&(k, _)| k as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|&(_, v)| libm::log(v)).collect();
    let fit = least_squares(&xs, &ys)?;
    let segment_slopes = segment_slopes(&xs, &ys);
    Ok(LateralDecay { rows, fit, segment_slopes })
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct GrowthFit {
    /// `(R/δ, max_u u(x)/u(a))` for each distance level in `C ∩ B_R(y)`.
    pub levels: Vec<(f64, f64)>,
    pub fit: LinearFit,
    pub gamma: f64,
    /// Smallest `C` with `envelope <= C (R/δ)^γ̂` on every level.
    pub constant: f64,
}

/// Upper envelope of `u(x)/u(y + R e_1)` against `R/δ(x)` over the basis
/// of `C ∩ B_3R(y)` vanishing on `∂C ∩ B_2R(y)`, fitted as a power law.
pub fn interior_growth_exponent(
    y: &LatticePoint,
    r: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    tol: f64,
) -> Result<GrowthFit> {
    check_scale(r)?;
    check_boundary_point(y, domain, kernel)?;
    let a = anchor_of(y, r, domain)?;
    let radius = Radius::new(r);
    let ball = in_domain_ball(y, radius, domain, kernel)?;
    let probes = ball.union(&PointSet::from_points(y.dim(), alloc::vec![a.clone()])?);
    let basis = vanishing_basis(y, radius.times(3, 1), radius.times(2, 1), domain, kernel, probes, tol)?;
    let ia = basis.probe_index(&a)?;
    let mut levels: Vec<(i64, f64)> = Vec::new();
    for x in &ball {
        let p = basis.probe_index(x)?;
        let mut env = 0.0f64;
        for c in 0..basis.len() {
            let col = basis.column(c);
            if !(col[ia] > 0.0) {
                return Err(Error::Degenerate(format!("column {} vanishes at the anchor", basis.columns()[c])));
            }
            env = env.max(col[p] / col[ia]);
        }
        let d2 = geometry::distance_sq_to_boundary(x, domain, kernel.steps())?;
        match levels.iter_mut().find(|(d, _)| *d == d2) {
            Some(level) => level.1 = level.1.max(env),
            None => levels.push((d2, env)),
        }
    }
    levels.sort_by_key(|&(d, _)| core::cmp::Reverse(d));
    let rf = r as f64;
    let levels: Vec<(f64, f64)> = levels.into_iter().map(|(d2, v)| (rf / libm::sqrt(d2 as f64), v)).collect();
    let xs: Vec<f64> = levels.iter().map(|(q, _)| libm::log(*q)).collect();
    let ys: Vec<f64> = levels.iter().map(|(_, v)| libm::log(*v)).collect();
    let fit = least_squares(&xs, &ys)?;
    let gamma = fit.slope;
    let constant = levels.iter().map(|(q, v)| v / libm::pow(*q, gamma)).fold(0.0f64, f64::max);
    Ok(GrowthFit { levels, fit, gamma, constant })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::DirichletSystem;
    use crate::harmonic::{construct_harmonic, ExhaustionSchedule};
    use crate::linalg::DenseLu;
    use crate::LipschitzProfile;
    use alloc::vec::Vec;
    use alloc::vec;
    use proptest::prelude::*;

    const TOL: f64 = 1e-10;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c)
    }

    fn origin() -> LatticePoint {
        pt(&[0, 0])
    }

    fn half() -> LipschitzDomain {
        LipschitzDomain::half_space(2)
    }

    fn wedge() -> LipschitzDomain {
        LipschitzDomain::new(2, LipschitzProfile::wedge()).unwrap()
    }

    #[test]
    fn harnack_at_unit_scale_matches_dense_enumeration() {
        let k = TransitionKernel::simple(2);
        let window = enumerate_region(&Region::ball(origin(), Radius::new(2)), None, k.steps()).unwrap();
        let ball = enumerate_region(&Region::ball(origin(), Radius::new(1)), None, k.steps()).unwrap();
        let system = DirichletSystem::new(window.clone(), &k).unwrap();
        let n = window.len();
        let dense = DenseLu::factor(n, system.matrix().to_dense()).unwrap();
        let mut oracle = 0.0f64;
        for j in 0..system.boundary().len() {
            let u = dense.solve(&system.column_rhs(j));
            let vals: Vec<f64> = ball.iter().map(|x| u[window.index_of(x).unwrap()]).collect();
            oracle = oracle.max(band_factor(&vals));
        }
        let m = harnack_constant(&origin(), Radius::new(1), &k, TOL).unwrap();
        assert!((m.value - oracle).abs() < 1e-12 * oracle);
        assert_eq!(m.columns, system.boundary().len());
    }

    #[test]
    fn constants_have_harnack_ratio_one() {
        let k = TransitionKernel::checkerboard();
        let window = enumerate_region(&Region::cube(origin(), Radius::new(4)), None, k.steps()).unwrap();
        let closed = geometry::closure(&window, k.steps()).unwrap();
        let u = Field::from_fn(closed, |_| 3.0);
        assert_eq!(harnack_ratio_of_field(&u, &window).unwrap(), 1.0);
        assert_eq!(local_harnack_ratio_of_field(&u, &window, &k).unwrap(), 1.0);
    }

    #[test]
    fn local_harnack_respects_ellipticity_bound() {
        for k in [TransitionKernel::simple(2), TransitionKernel::checkerboard()] {
            let window = enumerate_region(&Region::cube(origin(), Radius::new(4)), None, k.steps()).unwrap();
            let l = local_harnack_constant(&window, &k, TOL).unwrap();
            assert!(l.within_bound(), "{l:?}");
            assert!(l.measurement.value > 1.0);
            assert!(l.measurement.point.is_some());
        }
        let srw = TransitionKernel::simple(2);
        let window = enumerate_region(&Region::cube(origin(), Radius::new(1)), None, srw.steps()).unwrap();
        assert_eq!(local_harnack_constant(&window, &srw, TOL).unwrap().bound, 4.0);
    }

    #[test]
    fn carleson_bounds_the_exhaustion_candidate() {
        let k = TransitionKernel::simple(2);
        let c = half();
        let m = carleson_constant(&origin(), 8, &c, &k, TOL).unwrap();
        let s = ExhaustionSchedule::standard(2, vec![32, 64]).unwrap();
        let (h, _) = construct_harmonic(&s, &c, &k, 1e-12).unwrap();
        let single = carleson_ratio_of_field(&h.field, &origin(), 8, &c, &k).unwrap();
        assert!(single <= m.value + 1e-12, "{single} > {}", m.value);
        assert!(single >= 1.0);
    }

    #[test]
    fn scales_need_a_boundary_point() {
        let k = TransitionKernel::simple(2);
        let e = carleson_constant(&pt(&[3, 0]), 2, &half(), &k, TOL).unwrap_err();
        assert!(matches!(e, Error::InvalidGeometry(_)));
        assert!(carleson_constant(&origin(), 0, &half(), &k, TOL).is_err());
        let u = Field::from_fn(PointSet::from_points(2, vec![pt(&[0, 1])]).unwrap(), |_| 1.0);
        let e = boundary_harnack_ratio_of_fields(&u, &u, &pt(&[-9, 0]), 4, &half(), &k).unwrap_err();
        assert_eq!(e, Error::InvalidAnchor(pt(&[-5, 0])));
    }

    #[test]
    fn prop1_filters_fields_that_do_not_vanish() {
        let k = TransitionKernel::simple(2);
        let c = half();
        let window = enumerate_region(&Region::ball(origin(), Radius::new(48)), Some(&c), k.steps()).unwrap();
        let u = Field::from_fn(geometry::closure(&window, k.steps()).unwrap(), |_| 1.0);
        let e = prop1_ratio_of_field(&u, &origin(), 8, &c, &k).unwrap_err();
        assert!(matches!(e, Error::HypothesisViolated(_)));
        let m = prop1_contraction(&origin(), 8, &c, &k, TOL).unwrap();
        assert!(m.value < 1.0 && m.value > 0.0);
    }

    #[test]
    fn boundary_harnack_of_a_field_with_itself_is_one() {
        let k = TransitionKernel::simple(2);
        let c = half();
        let s = ExhaustionSchedule::standard(2, vec![16, 32]).unwrap();
        let (h, _) = construct_harmonic(&s, &c, &k, 1e-12).unwrap();
        let one = boundary_harnack_ratio_of_fields(&h.field, &h.field, &origin(), 4, &c, &k).unwrap();
        assert!((one - 1.0).abs() < 1e-14);
        let v = h.field.scaled(0.5);
        let u = Field::from_fn(h.field.support().clone(), |x| h.field.get(x).unwrap() * (1.0 + 0.01 * x.height() as f64));
        let base = boundary_harnack_ratio_of_fields(&u, &v, &origin(), 4, &c, &k).unwrap();
        let scaled = boundary_harnack_ratio_of_fields(&u.scaled(13.0), &v.scaled(0.25), &origin(), 4, &c, &k).unwrap();
        assert!((base - scaled).abs() < 1e-13 * base);
    }

    #[test]
    fn boundary_harnack_constant_is_finite() {
        let k = TransitionKernel::simple(2);
        let m = boundary_harnack_constant(&origin(), 4, 4, &half(), &k, TOL).unwrap();
        assert!(m.value.is_finite() && m.value >= 1.0);
        assert!(m.column.is_some() && m.partner.is_some());
    }

    #[test]
    fn lemma2_sweep_finds_an_onset() {
        let k = TransitionKernel::simple(2);
        let t = lemma2_onset(&origin(), 4, &half(), &k, &[2, 4, 8, 16], TOL).unwrap();
        assert_eq!(t.rows.len(), 4);
        assert!(t.onset <= 16);
        assert!(t.rows.last().unwrap().min_ratio >= t.rows[0].min_ratio);
        assert!(lemma2_onset(&origin(), 4, &half(), &k, &[4, 2], TOL).is_err());
    }

    #[test]
    fn half_line_lemma2_ratio_is_infinite() {
        // No side exits on the half-line: every ratio is +inf.
        let k = TransitionKernel::simple(1);
        let c = LipschitzDomain::half_space(1);
        let t = lemma2_onset(&pt(&[0]), 3, &c, &k, &[2, 4], TOL).unwrap();
        assert_eq!(t.onset, 2);
        assert!(t.rows.iter().all(|r| r.min_ratio == f64::INFINITY));
    }

    #[test]
    fn enlarging_the_top_cannot_lower_its_measure() {
        let k = TransitionKernel::simple(2);
        let c = half();
        let split = exit_split(&origin(), Rational::from_integer(4), Radius::new(4), &c, &k, TOL).unwrap();
        let bigger = split.top.union(&split.side.filter(|z| z.coords()[1] > 0));
        let u = crate::dirichlet::harmonic_measure(&split.collar, &k, &bigger, TOL).unwrap();
        for x in &split.collar {
            assert!(u.get(x).unwrap() >= split.p_top.get(x).unwrap() - 1e-14);
        }
    }

    #[test]
    fn decay_of_the_top_measure_is_linear_on_the_half_plane() {
        let k = TransitionKernel::simple(2);
        let p = boundary_decay_profile(&origin(), 8, 4, &half(), &k, DecayTarget::Top, TOL).unwrap();
        assert!((p.beta - 1.0).abs() < 0.15, "{}", p.beta);
        assert!(p.floor > 0.0);
        assert_eq!(p.levels.len(), 8);
        let one = boundary_decay_profile(&origin(), 8, 4, &half(), &k, DecayTarget::FullBoundary, TOL).unwrap();
        assert!(one.beta.abs() < 1e-12);
        let e = boundary_decay_profile(&origin(), 4, 4, &half(), &k, DecayTarget::Top, TOL).unwrap_err();
        assert!(matches!(e, Error::InsufficientData(_)));
    }

    #[test]
    fn lateral_decay_is_log_linear() {
        let k = TransitionKernel::simple(2);
        let d = lateral_decay(&origin(), 4, &[2, 4, 8], &wedge(), &k, TOL).unwrap();
        assert!(d.fit.slope < 0.0);
        assert!(d.segment_slopes.iter().all(|&s| s < 0.0));
        let line = lateral_decay(&pt(&[0]), 4, &[2, 4], &LipschitzDomain::half_space(1), &TransitionKernel::simple(1), TOL);
        assert!(matches!(line, Err(Error::InvalidGeometry(_))));
    }

    #[test]
    fn growth_fit_is_anchored() {
        let k = TransitionKernel::simple(2);
        let g = interior_growth_exponent(&origin(), 8, &half(), &k, TOL).unwrap();
        assert!(g.gamma.is_finite());
        assert!(g.constant > 0.0);
        // The anchor sits at δ = R, i.e. R/δ = 1, and its own ratio is 1.
        let (q, v) = g.levels[0];
        assert_eq!(q, 1.0);
        assert!(v >= 1.0);
    }

    #[test]
    fn fits() {
        let f = least_squares(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert_eq!((f.slope, f.intercept), (2.0, 1.0));
        assert!(least_squares(&[1.0, 1.0], &[0.0, 1.0]).is_err());
        assert!(least_squares(&[1.0], &[0.0]).is_err());
        assert_eq!(segment_slopes(&[0.0, 1.0, 3.0], &[0.0, 2.0, 3.0]), vec![2.0, 0.5]);
        assert_eq!(band_factor(&[2.0, 3.0, 4.0]), 2.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn positive_combinations_never_beat_the_basis(weights in prop::collection::vec(0.0f64..1.0, 200)) {
            let k = TransitionKernel::simple(2);
            let c = half();
            let (y, r) = (origin(), 4i64);
            let a = &y + &LatticePoint::new(&[r, 0]);
            let ball = enumerate_region(&Region::ball(y.clone(), Radius::new(r)), Some(&c), k.steps()).unwrap();
            let probes = ball.union(&PointSet::from_points(2, vec![a.clone()]).unwrap());
            let window = enumerate_region(&Region::ball(y.clone(), Radius::new(3 * r)), Some(&c), k.steps()).unwrap();
            let basis = HarmonicBasis::compute(window, &k, |z| c.contains(z) || z.dist_sq(&y) > 4 * r * r, probes, TOL).unwrap();
            prop_assert!(basis.len() <= weights.len());
            let best = carleson_constant(&y, r, &c, &k, TOL).unwrap().value;
            let mixed = basis.combine(&weights[..basis.len()]);
            let ia = basis.probe_index(&a).unwrap();
            prop_assume!(mixed[ia] > 0.0);
            for x in &ball {
                let ratio = mixed[basis.probe_index(x).unwrap()] / mixed[ia];
                prop_assert!(ratio <= best * (1.0 + 1e-12));
            }
        }
    }
}
