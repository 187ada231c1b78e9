//! The positive harmonic function of the killed walk, built by exhaustion,
//! together with Martin kernels and a uniqueness check.

use alloc::format;
use alloc::vec::Vec;

use crate::dirichlet::{green_solve, DirichletSystem, SolveMethod};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{self, enumerate_region, LatticePoint, LipschitzDomain, PointSet, Radius, Rational, Region};
use crate::kernel::TransitionKernel;
use crate::par;

/// Default distance of the normalization point from the anchor.
pub const DEFAULT_REFERENCE_HEIGHT: i64 = 8;

/// Boundary data on the part of `∂(C ∩ B_R)` that lies inside `C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OuterData {
    /// 1 on the whole outer part.
    #[default]
    Sphere,
    /// 1 where `z1 - y*1 >= min_height · R`, 0 elsewhere on the outer part.
    Cap { min_height: Rational },
}

impl OuterData {
    fn value(&self, z: &LatticePoint, anchor: &LatticePoint, radius: Radius) -> f64 {
        match self {
            OuterData::Sphere => 1.0,
            OuterData::Cap { min_height } => {
                let h = z.height() - anchor.height();
                // h >= m·R  <=>  h >= 0 and h² >= m²·R²
                let threshold = *min_height * *min_height * radius.sq();
                let ok = if *min_height <= Rational::from_integer(0) {
                    true
                } else {
                    h >= 0 && Rational::from_integer(h * h) >= threshold
                };
                if ok {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Post-processing of the last two candidates of a schedule.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Extrapolation {
    #[default]
    None,
    /// Richardson extrapolation `(t^p h_n - h_{n-1}) / (t^p - 1)` with
    /// `t = R_n / R_{n-1}`, kept on the inner half of the window of
    /// `R_{n-1}`. With `order: None`, `p` is estimated from the last two
    /// logged deviations.
    Richardson { order: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExhaustionSchedule {
    radii: Vec<i64>,
    anchor: LatticePoint,
    reference: LatticePoint,
    pub outer: OuterData,
    pub extrapolation: Extrapolation,
}

impl ExhaustionSchedule {
    /// Radii must increase strictly and each window `B_{R_i}(anchor)` must
    /// contain the reference point.
    pub fn new(radii: Vec<i64>, anchor: LatticePoint, reference: LatticePoint) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidSchedule("no radii".into()));
        }
        if radii.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSchedule(format!("radii {radii:?} are not increasing")));
        }
        reference.check_dim(anchor.dim())?;
        let r_ref_sq = reference.dist_sq(&anchor);
        if let Some(r) = radii.iter().find(|&&r| r * r <= r_ref_sq) {
            return Err(Error::InvalidSchedule(format!(
                "radius {r} does not exceed the reference distance {:.3}",
                libm::sqrt(r_ref_sq as f64)
            )));
        }
        Ok(ExhaustionSchedule {
            radii,
            anchor,
            reference,
            outer: OuterData::Sphere,
            extrapolation: Extrapolation::None,
        })
    }

    /// Anchor at the origin, reference `8 e_1`.
    pub fn standard(dim: usize, radii: Vec<i64>) -> Result<Self> {
        let anchor = LatticePoint::origin(dim);
        let reference = LatticePoint::unit(dim, 0).scaled(DEFAULT_REFERENCE_HEIGHT);
        Self::new(radii, anchor, reference)
    }

    pub fn with_outer(mut self, outer: OuterData) -> Self {
        self.outer = outer;
        self
    }

    pub fn with_extrapolation(mut self, extrapolation: Extrapolation) -> Self {
        self.extrapolation = extrapolation;
        self
    }

    pub fn radii(&self) -> &[i64] {
        &self.radii
    }

    pub fn anchor(&self) -> &LatticePoint {
        &self.anchor
    }

    pub fn reference(&self) -> &LatticePoint {
        &self.reference
    }
}

/// A positive harmonic function on a window `C ∩ B_R(y*)`, normalized to 1
/// at the reference point. The field lives on the window and its boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct HarmonicCandidate {
    pub field: Field,
    pub window_radius: Radius,
    pub anchor: LatticePoint,
    pub reference: LatticePoint,
    pub extrapolated: bool,
}

/// Positivity, vanishing and residual of a candidate.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct CandidateCheck {
    pub min_interior: f64,
    pub max_on_domain_boundary: f64,
    pub max_residual: f64,
    pub points_checked: usize,
}

impl CandidateCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_interior > 0.0 && self.max_on_domain_boundary == 0.0 && self.max_residual <= tol
    }
}

impl HarmonicCandidate {
    pub fn value(&self, x: &LatticePoint) -> Result<f64> {
        self.field.get(x)
    }

    /// Points of `C` whose whole step neighbourhood carries values.
    pub fn full_neighbourhood_points(&self, domain: &LipschitzDomain, kernel: &TransitionKernel) -> PointSet {
        let support = self.field.support();
        support.filter(|x| domain.contains(x) && kernel.steps().iter().all(|e| support.contains(&(x + e))))
    }

    pub fn check(&self, domain: &LipschitzDomain, kernel: &TransitionKernel) -> Result<CandidateCheck> {
        let interior = self.full_neighbourhood_points(domain, kernel);
        let mut min_interior = f64::INFINITY;
        let mut max_residual = 0.0f64;
        for x in &interior {
            min_interior = min_interior.min(self.field.get(x)?);
            max_residual = max_residual.max(kernel.apply_l(&self.field, x)?.abs());
        }
        let max_on_domain_boundary = self
            .field
            .iter()
            .filter(|(z, _)| !domain.contains(z))
            .fold(0.0f64, |m, (_, v)| m.max(v.abs()));
        Ok(CandidateCheck { min_interior, max_on_domain_boundary, max_residual, points_checked: interior.len() })
    }

    pub fn renormalized_at(&self, x0: &LatticePoint) -> Result<HarmonicCandidate> {
        let v = self.field.get(x0)?;
        if !(v > 0.0) {
            return Err(Error::Degenerate(format!("candidate vanishes at {x0}")));
        }
        Ok(HarmonicCandidate { field: self.field.scaled(1.0 / v), reference: x0.clone(), ..self.clone() })
    }
}

/// Per-radius record of an exhaustion run.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct ConvergenceLog {
    pub radii: Vec<i64>,
    pub inner_points: usize,
    /// `max |h_{i+1}/h_i - 1|` on `C ∩ B_{R_1}(y*)` for consecutive radii.
    pub deviations: Vec<f64>,
    /// Richardson order used, when extrapolating.
    pub extrapolation_order: Option<f64>,
}

/// Window `C ∩ B_R(anchor)`.
pub fn window(anchor: &LatticePoint, radius: Radius, domain: &LipschitzDomain, kernel: &TransitionKernel) -> Result<PointSet> {
    enumerate_region(&Region::ball(anchor.clone(), radius), Some(domain), kernel.steps())
}

/// Candidate for a single radius, before normalization.
fn solve_window(
    schedule: &ExhaustionSchedule,
    radius: i64,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    tol: f64,
) -> Result<Field> {
    let r = Radius::new(radius);
    let interior = window(&schedule.anchor, r, domain, kernel)?;
    if !interior.contains(&schedule.reference) {
        return Err(Error::InvalidSchedule(format!("reference {} is not in C ∩ B_{radius}", schedule.reference)));
    }
    let system = DirichletSystem::new(interior, kernel)?;
    let data: Vec<f64> = system
        .boundary()
        .iter()
        .map(|z| if domain.contains(z) { schedule.outer.value(z, &schedule.anchor, r) } else { 0.0 })
        .collect();
    let u = system.solve_data(&data, SolveMethod::Auto, tol)?;
    let field = system.assemble(&u, &data);
    let at_ref = field.get(&schedule.reference)?;
    if !(at_ref > 0.0) {
        return Err(Error::Degenerate(format!("solution vanishes at the reference for R = {radius}")));
    }
    Ok(field.scaled(1.0 / at_ref))
}

fn max_ratio_deviation(a: &Field, b: &Field, points: &PointSet) -> Result<f64> {
    let mut worst = 0.0f64;
    for x in points {
        let (va, vb) = (a.get(x)?, b.get(x)?);
        if !(va > 0.0 && vb > 0.0) {
            return Err(Error::Degenerate(format!("candidate is not positive at {x}")));
        }
        worst = worst.max((va / vb - 1.0).abs());
    }
    Ok(worst)
}

/// Solves the exhaustion problems of the schedule, logs the deviation
/// between consecutive candidates on the innermost window and returns the
/// candidate of the largest radius (extrapolated if requested).
pub fn construct_harmonic(
    schedule: &ExhaustionSchedule,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    tol: f64,
) -> Result<(HarmonicCandidate, ConvergenceLog)> {
    if domain.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: domain.dim() });
    }
    schedule.anchor.check_dim(domain.dim())?;
    if !domain.contains(&schedule.reference) {
        return Err(Error::OutsideDomain(schedule.reference.clone()));
    }
    let radii = &schedule.radii;
    let solved = par::map_indexed(radii.len(), |i| solve_window(schedule, radii[i], domain, kernel, tol));
    let fields = solved.into_iter().collect::<Result<Vec<Field>>>()?;
    let inner = window(&schedule.anchor, Radius::new(radii[0]), domain, kernel)?;
    let mut deviations = Vec::with_capacity(radii.len().saturating_sub(1));
    for w in fields.windows(2) {
        deviations.push(max_ratio_deviation(&w[1], &w[0], &inner)?);
    }
    // Deviations at round-off level carry no trend.
    let noise = 10.0 * tol.max(1e-13);
    if deviations.windows(2).any(|w| w[1] >= w[0] && w[1] > noise) {
        return Err(Error::NonConvergence(deviations));
    }
    let last = radii.len() - 1;
    let (candidate, order) = match schedule.extrapolation {
        Extrapolation::None => (
            HarmonicCandidate {
                field: fields[last].clone(),
                window_radius: Radius::new(radii[last]),
                anchor: schedule.anchor.clone(),
                reference: schedule.reference.clone(),
                extrapolated: false,
            },
            None,
        ),
        Extrapolation::Richardson { order } => {
            if radii.len() < 2 {
                return Err(Error::InvalidSchedule("extrapolation needs two radii".into()));
            }
            let t = radii[last] as f64 / radii[last - 1] as f64;
            let p = match order {
                Some(p) => p,
                None => {
                    if deviations.len() < 2 {
                        return Err(Error::InvalidSchedule("estimating the order needs three radii".into()));
                    }
                    let n = deviations.len();
                    let t_prev = radii[last - 1] as f64 / radii[last - 2] as f64;
                    // deviations scale like R^-p; compare consecutive steps
                    libm::log(deviations[n - 2] / deviations[n - 1]) / libm::log(t.max(t_prev))
                }
            };
            if !(p > 0.0 && p.is_finite()) {
                return Err(Error::InvalidSchedule(format!("extrapolation order {p} is not positive")));
            }
            let w = libm::pow(t, p);
            // The error expansion only holds well inside the smaller window;
            // keep its inner half.
            let half = Radius::new(radii[last - 1]).times(1, 2);
            if !half.admits_sq(schedule.reference.dist_sq(&schedule.anchor) + 1) {
                return Err(Error::InvalidSchedule(format!(
                    "extrapolation window R = {half} does not contain the reference"
                )));
            }
            let support = geometry::closure(&window(&schedule.anchor, half, domain, kernel)?, kernel.steps())?;
            let (big, small) = (&fields[last], &fields[last - 1]);
            let mut values = Vec::with_capacity(support.len());
            for z in &support {
                let (vb, vs) = if domain.contains(z) { (big.get(z)?, small.get(z)?) } else { (0.0, 0.0) };
                values.push((w * vb - vs) / (w - 1.0));
            }
            let field = Field::new(support, values)?;
            let at_ref = field.get(&schedule.reference)?;
            (
                HarmonicCandidate {
                    field: field.scaled(1.0 / at_ref),
                    window_radius: half,
                    anchor: schedule.anchor.clone(),
                    reference: schedule.reference.clone(),
                    extrapolated: true,
                },
                Some(p),
            )
        }
    };
    let log = ConvergenceLog { radii: radii.clone(), inner_points: inner.len(), deviations, extrapolation_order: order };
    Ok((candidate, log))
}

/// Pairwise comparison of candidates after renormalization at `x0`.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct UniquenessReport {
    pub inner_points: usize,
    /// `(a, b, max |h_a/h_b - 1|)` for every pair `a < b`.
    pub pairs: Vec<(usize, usize, f64)>,
    pub max_deviation: f64,
    pub witness: Option<LatticePoint>,
}

/// Compares every pair of candidates on `inner` (points of `C` only).
pub fn uniqueness_check(
    candidates: &[HarmonicCandidate],
    inner: &Region,
    domain: &LipschitzDomain,
    x0: &LatticePoint,
) -> Result<UniquenessReport> {
    if candidates.len() < 2 {
        return Err(Error::InsufficientData("uniqueness needs at least two candidates".into()));
    }
    let steps = [LatticePoint::unit(domain.dim(), 0)];
    let points = enumerate_region(inner, Some(domain), &steps)?;
    let normalized = candidates.iter().map(|c| c.renormalized_at(x0)).collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(normalized.len());
    for c in &normalized {
        let mut col = Vec::with_capacity(points.len());
        for x in &points {
            let v = c.field.get(x)?;
            if !(v > 0.0) {
                return Err(Error::Degenerate(format!("candidate is not positive at {x}")));
            }
            col.push(v);
        }
        values.push(col);
    }
    let mut pairs = Vec::new();
    let mut max_deviation = 0.0f64;
    let mut witness = None;
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            let mut worst = 0.0f64;
            for (k, (va, vb)) in values[a].iter().zip(&values[b]).enumerate() {
                let dev = (va / vb - 1.0).abs();
                if dev > worst {
                    worst = dev;
                }
                if dev > max_deviation {
                    max_deviation = dev;
                    witness = Some(points.points()[k].clone());
                }
            }
            pairs.push((a, b, worst));
        }
    }
    Ok(UniquenessReport { inner_points: points.len(), pairs, max_deviation, witness })
}

/// `x -> k_y^x = G_y^x / G_y^{x0}` on a truncation window.
#[derive(Clone, Debug, PartialEq)]
pub struct MartinField {
    pub source: LatticePoint,
    pub reference: LatticePoint,
    pub window_radius: Radius,
    /// Values on the interior of the window.
    pub values: Field,
}

impl MartinField {
    pub fn value(&self, x: &LatticePoint) -> Result<f64> {
        self.values.get(x)
    }
}

/// Window radius `4 |y - anchor|` used for Martin kernels.
pub fn martin_window(y: &LatticePoint, anchor: &LatticePoint) -> Region {
    let radius = Radius::from_sq(Rational::from_integer(16 * y.dist_sq(anchor)));
    Region::ball(anchor.clone(), radius)
}

/// Martin kernel with source `y` on `C ∩ window`, from one transposed
/// Green solve.
pub fn martin_field(
    y: &LatticePoint,
    window: &Region,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    x0: &LatticePoint,
    tol: f64,
) -> Result<MartinField> {
    let interior = enumerate_region(window, Some(domain), kernel.steps())?;
    if !interior.contains(x0) {
        return Err(Error::InvalidGeometry(format!("reference {x0} is not in the window")));
    }
    let system = DirichletSystem::new(interior, kernel)?;
    let g = green_solve(&system, y, true, SolveMethod::Auto, tol)?;
    let denom = g.get(x0)?;
    if !(denom > 0.0) {
        return Err(Error::UnreachableReference(x0.clone()));
    }
    Ok(MartinField {
        source: y.clone(),
        reference: x0.clone(),
        window_radius: window.outer,
        values: g.scaled(1.0 / denom),
    })
}

/// `k_y^x`; `x`, `x0` and `y` must lie in the window.
pub fn martin_kernel(
    y: &LatticePoint,
    x: &LatticePoint,
    window: &Region,
    domain: &LipschitzDomain,
    kernel: &TransitionKernel,
    x0: &LatticePoint,
    tol: f64,
) -> Result<f64> {
    if x == x0 {
        // Still validate the geometry so errors do not depend on x.
        martin_field(y, window, domain, kernel, x0, tol)?;
        return Ok(1.0);
    }
    martin_field(y, window, domain, kernel, x0, tol)?.value(x)
}

/// `sup_x |k(x)/h(x) - 1|` over the points of `C` in `inner`.
pub fn martin_deviation(
    martin: &MartinField,
    h: impl Fn(&LatticePoint) -> Result<f64>,
    inner: &Region,
    domain: &LipschitzDomain,
) -> Result<(f64, LatticePoint)> {
    let steps = [LatticePoint::unit(domain.dim(), 0)];
    let points = enumerate_region(inner, Some(domain), &steps)?;
    let mut worst = (0.0f64, martin.reference.clone());
    for x in &points {
        let hv = h(x)?;
        if !(hv > 0.0) {
            return Err(Error::Degenerate(format!("reference function vanishes at {x}")));
        }
        let dev = (martin.value(x)? / hv - 1.0).abs();
        if dev > worst.0 {
            worst = (dev, x.clone());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c)
    }

    fn half_plane() -> (LipschitzDomain, TransitionKernel) {
        (LipschitzDomain::half_space(2), TransitionKernel::simple(2))
    }

    #[test]
    fn schedule_validation() {
        assert!(ExhaustionSchedule::standard(2, vec![]).is_err());
        assert!(ExhaustionSchedule::standard(2, vec![16, 16]).is_err());
        assert!(ExhaustionSchedule::standard(2, vec![8, 16]).is_err());
        assert!(ExhaustionSchedule::standard(2, vec![9, 16]).is_ok());
        assert!(ExhaustionSchedule::new(vec![9], pt(&[0, 0]), pt(&[1, 0, 0])).is_err());
    }

    #[test]
    fn half_line_candidate_is_linear() {
        let c = LipschitzDomain::half_space(1);
        let k = TransitionKernel::simple(1);
        let s = ExhaustionSchedule::standard(1, vec![16, 32, 64]).unwrap();
        let (h, log) = construct_harmonic(&s, &c, &k, 1e-12).unwrap();
        assert_eq!(h.value(&pt(&[8])).unwrap(), 1.0);
        // Data 1 at R + 1 makes every candidate exactly x/(R+1); after
        // normalization all coincide with x/8.
        for x in 1..=64 {
            assert!((h.value(&pt(&[x])).unwrap() - x as f64 / 8.0).abs() < 1e-12);
        }
        assert!(log.deviations.iter().all(|&d| d < 1e-12));
    }

    #[test]
    fn half_plane_candidate_is_normalized_and_harmonic() {
        let (c, k) = half_plane();
        let s = ExhaustionSchedule::standard(2, vec![16, 32]).unwrap();
        let (h, log) = construct_harmonic(&s, &c, &k, 1e-12).unwrap();
        assert_eq!(h.value(s.reference()).unwrap(), 1.0);
        assert_eq!(log.deviations.len(), 1);
        let check = h.check(&c, &k).unwrap();
        assert!(check.passes(1e-12), "{check:?}");
        assert!(check.points_checked > 1000);
    }

    #[test]
    fn extrapolated_candidate_is_harmonic_on_the_smaller_window() {
        let (c, k) = half_plane();
        let s = ExhaustionSchedule::standard(2, vec![16, 32, 64])
            .unwrap()
            .with_extrapolation(Extrapolation::Richardson { order: Some(2.0) });
        let (h, log) = construct_harmonic(&s, &c, &k, 1e-12).unwrap();
        assert!(h.extrapolated);
        assert_eq!(h.window_radius, Radius::new(16));
        assert_eq!(log.extrapolation_order, Some(2.0));
        let check = h.check(&c, &k).unwrap();
        assert!(check.passes(1e-11), "{check:?}");
        let inner = window(&pt(&[0, 0]), Radius::new(8), &c, &k).unwrap();
        let err = inner.iter().map(|x| (h.value(x).unwrap() * 8.0 / x.height() as f64 - 1.0).abs()).fold(0.0, f64::max);
        assert!(err < 2e-3, "{err}");
    }

    #[test]
    fn scaling_outer_data_does_not_change_the_candidate() {
        let (c, k) = half_plane();
        let a = ExhaustionSchedule::standard(2, vec![12, 24]).unwrap();
        let b = a.clone().with_outer(OuterData::Cap { min_height: Rational::from_integer(0) });
        let (ha, _) = construct_harmonic(&a, &c, &k, 1e-12).unwrap();
        let (hb, _) = construct_harmonic(&b, &c, &k, 1e-12).unwrap();
        assert!(ha.field.max_abs_diff(&hb.field).unwrap() < 1e-12);
    }

    #[test]
    fn uniqueness_report_basics() {
        let (c, k) = half_plane();
        let s = ExhaustionSchedule::standard(2, vec![16, 32]).unwrap();
        let (h, _) = construct_harmonic(&s, &c, &k, 1e-12).unwrap();
        let inner = Region::ball(pt(&[0, 0]), Radius::new(8));
        let x0 = s.reference().clone();
        let same = uniqueness_check(&[h.clone(), h.clone()], &inner, &c, &x0).unwrap();
        assert_eq!(same.max_deviation, 0.0);
        let cap = s.clone().with_outer(OuterData::Cap { min_height: Rational::new(1, 2) });
        let (g, _) = construct_harmonic(&cap, &c, &k, 1e-12).unwrap();
        let base = uniqueness_check(&[h.clone(), g.clone()], &inner, &c, &x0).unwrap();
        let mut scaled = g.clone();
        scaled.field = g.field.scaled(7.0);
        let again = uniqueness_check(&[h.clone(), scaled], &inner, &c, &x0).unwrap();
        assert!((base.max_deviation - again.max_deviation).abs() < 1e-14);
        assert!(base.max_deviation > 0.0);
        assert!(uniqueness_check(&[h], &inner, &c, &x0).is_err());
    }

    #[test]
    fn uniqueness_rejects_nonpositive_candidates() {
        let (c, k) = half_plane();
        let s = ExhaustionSchedule::standard(2, vec![16]).unwrap();
        let (h, _) = construct_harmonic(&s, &c, &k, 1e-12).unwrap();
        let mut bad = h.clone();
        let values: Vec<f64> = h.field.iter().map(|(x, v)| if *x == pt(&[1, 1]) { -v } else { v }).collect();
        bad.field = Field::new(h.field.support().clone(), values).unwrap();
        let inner = Region::ball(pt(&[0, 0]), Radius::new(4));
        let e = uniqueness_check(&[h, bad], &inner, &c, &pt(&[8, 0])).unwrap_err();
        assert!(matches!(e, Error::Degenerate(_)));
    }

    #[test]
    fn martin_kernel_at_reference_is_one() {
        let (c, k) = half_plane();
        let y = pt(&[10, 3]);
        let w = martin_window(&y, &pt(&[0, 0]));
        assert_eq!(martin_kernel(&y, &pt(&[8, 0]), &w, &c, &k, &pt(&[8, 0]), 1e-12).unwrap(), 1.0);
        let m = martin_field(&y, &w, &c, &k, &pt(&[8, 0]), 1e-12).unwrap();
        assert_eq!(m.window_radius.sq(), Rational::from_integer(16 * 109));
    }

    #[test]
    fn half_line_martin_kernel_tends_to_linear() {
        let c = LipschitzDomain::half_space(1);
        let k = TransitionKernel::simple(1);
        let x0 = pt(&[4]);
        let x = pt(&[2]);
        let mut last = f64::INFINITY;
        for n in [3, 6, 12, 24] {
            let y = pt(&[n]);
            let w = martin_window(&y, &pt(&[0]));
            let v = martin_kernel(&y, &x, &w, &c, &k, &x0, 1e-13).unwrap();
            let dev = (v - 0.5).abs();
            assert!(dev <= last + 1e-12);
            last = dev;
        }
        assert!(last < 1e-9);
    }

    #[test]
    fn martin_kernel_reference_must_be_reachable() {
        let (c, k) = half_plane();
        let y = pt(&[3, 0]);
        let far = Region::ball(pt(&[0, 0]), Radius::new(3));
        let e = martin_field(&y, &far, &c, &k, &pt(&[8, 0]), 1e-12).unwrap_err();
        assert!(matches!(e, Error::InvalidGeometry(_)));
    }
}
