//! Lattice points, Lipschitz graph domains and the regions built on them.

mod point;
mod profile;
mod region;

use alloc::vec::Vec;

pub use point::{LatticePoint, PointSet, Radius};
pub use profile::{AxisProfile, LipschitzDomain, LipschitzProfile, Rational};
pub use region::{enumerate_region, Region, RegionKind};

use crate::error::{Error, Result};

/// Calls `f` on every point of the integer box `[lo, hi]` in lexicographic
/// order.
pub(crate) fn enumerate_box<F: FnMut(&LatticePoint)>(lo: &[i64], hi: &[i64], mut f: F) {
    let d = lo.len();
    if lo.iter().zip(hi).any(|(a, b)| a > b) {
        return;
    }
    let mut cur = LatticePoint::new(lo);
    let mut coords: Vec<i64> = lo.to_vec();
    loop {
        f(&cur);
        let mut k = d;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            if coords[k] < hi[k] {
                coords[k] += 1;
                for j in k + 1..d {
                    coords[j] = lo[j];
                }
                break;
            }
        }
        cur = LatticePoint::new(&coords);
    }
}

/// The step-set boundary `∂A = {x not in A : x = z + e, z in A, e in steps}`.
pub fn boundary(set: &PointSet, steps: &[LatticePoint]) -> Result<PointSet> {
    if steps.is_empty() {
        return Err(Error::InvalidStepSet("empty step set".into()));
    }
    let mut out = Vec::new();
    for z in set {
        for e in steps {
            e.check_dim(set.dim())?;
            let x = z + e;
            if !set.contains(&x) {
                out.push(x);
            }
        }
    }
    PointSet::from_points(set.dim(), out)
}

/// `A ∪ ∂A`.
pub fn closure(set: &PointSet, steps: &[LatticePoint]) -> Result<PointSet> {
    Ok(set.union(&boundary(set, steps)?))
}

/// Whether `q` belongs to the step-set boundary of the (infinite) domain.
pub fn is_domain_boundary(q: &LatticePoint, domain: &LipschitzDomain, steps: &[LatticePoint]) -> bool {
    !domain.contains(q) && steps.iter().any(|e| domain.contains(&(q - e)))
}

fn ball_offsets(dim: usize, radius_sq: i64) -> impl Iterator<Item = LatticePoint> {
    let reach = libm::floor(libm::sqrt(radius_sq as f64)) as i64 + 1;
    let lo = alloc::vec![-reach; dim];
    let hi = alloc::vec![reach; dim];
    let mut out = Vec::new();
    enumerate_box(&lo, &hi, |p| {
        if p.norm_sq() <= radius_sq {
            out.push(p.clone());
        }
    });
    out.into_iter()
}

/// Whether some boundary point of the domain lies within distance `r` of
/// `x`, i.e. whether `delta(x) <= r`. Exact.
pub fn boundary_within(
    x: &LatticePoint,
    domain: &LipschitzDomain,
    steps: &[LatticePoint],
    r: Radius,
) -> bool {
    if matches!(domain.profile(), LipschitzProfile::Zero) && domain.contains(x) {
        return r.admits_sq(x.height() * x.height());
    }
    let reach = r.floor();
    ball_offsets(x.dim(), reach * reach + 2 * reach + 1)
        .filter(|o| r.admits_sq(o.norm_sq()))
        .any(|o| is_domain_boundary(&(x + &o), domain, steps))
}

/// Exact squared Euclidean distance from `x in C` to the boundary of `C`.
///
/// The search scans balls of doubling radius around `x`; the first ball
/// containing a boundary point contains the nearest one.
pub fn distance_sq_to_boundary(
    x: &LatticePoint,
    domain: &LipschitzDomain,
    steps: &[LatticePoint],
) -> Result<i64> {
    x.check_dim(domain.dim())?;
    if !domain.contains(x) {
        return Err(Error::OutsideDomain(x.clone()));
    }
    // Half-spaces: every (0, x') is reached from C by a step with negative
    // first coordinate, which centering guarantees.
    if matches!(domain.profile(), LipschitzProfile::Zero) {
        return Ok(x.height() * x.height());
    }
    let mut radius_sq = 1i64;
    loop {
        let best = ball_offsets(x.dim(), radius_sq)
            .filter(|o| is_domain_boundary(&(x + o), domain, steps))
            .map(|o| o.norm_sq())
            .min();
        if let Some(d) = best {
            return Ok(d);
        }
        radius_sq *= 4;
    }
}

/// `delta(x)`, the Euclidean distance from `x in C` to the boundary of `C`.
pub fn distance_to_boundary(x: &LatticePoint, domain: &LipschitzDomain, steps: &[LatticePoint]) -> Result<f64> {
    Ok(libm::sqrt(distance_sq_to_boundary(x, domain, steps)? as f64))
}

/// Fraction of the closed cube `Q_R(y) ∪ ∂Q_R(y)` lying outside `C`.
pub fn exterior_cone_fraction(
    y: &LatticePoint,
    half_side: Radius,
    domain: &LipschitzDomain,
    steps: &[LatticePoint],
) -> Result<f64> {
    y.check_dim(domain.dim())?;
    if !is_domain_boundary(y, domain, steps) {
        return Err(Error::InvalidGeometry(alloc::format!("{y} is not a boundary point of the domain")));
    }
    let cube = enumerate_region(&Region::cube(y.clone(), half_side), None, steps)?;
    let closed = closure(&cube, steps)?;
    let outside = closed.iter().filter(|p| !domain.contains(p)).count();
    Ok(outside as f64 / closed.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn pt(c: &[i64]) -> LatticePoint {
        LatticePoint::new(c)
    }

    fn nn(d: usize) -> Vec<LatticePoint> {
        let mut s: Vec<LatticePoint> = (0..d).map(|k| LatticePoint::unit(d, k)).collect();
        s.extend((0..d).map(|k| LatticePoint::unit(d, k).scaled(-1)));
        s
    }

    fn set(d: usize, pts: &[&[i64]]) -> PointSet {
        PointSet::from_points(d, pts.iter().map(|c| pt(c)).collect()).unwrap()
    }

    /// Brute-force boundary: every z + e outside A.
    fn boundary_oracle(a: &PointSet, steps: &[LatticePoint]) -> Vec<LatticePoint> {
        let mut out: Vec<LatticePoint> = Vec::new();
        for z in a {
            for e in steps {
                let x = z + e;
                if !a.points().contains(&x) && !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        out.sort();
        out
    }

    #[test]
    fn boundary_of_a_single_point() {
        let b = boundary(&set(1, &[&[0]]), &nn(1)).unwrap();
        assert_eq!(b.points(), &[pt(&[-1]), pt(&[1])]);
        let b = boundary(&set(2, &[&[0, 0]]), &nn(2)).unwrap();
        assert_eq!(b.len(), 4);
        assert!(nn(2).iter().all(|e| b.contains(e)));
    }

    #[test]
    fn knight_step_boundary_matches_enumeration() {
        let block = enumerate_region(&Region::cube(pt(&[0, 0]), Radius::new(1)), None, &[]).unwrap();
        let mut steps = nn(2);
        steps.push(pt(&[2, 1]));
        let b = boundary(&block, &steps).unwrap();
        assert_eq!(b.points(), boundary_oracle(&block, &steps).as_slice());
        assert!(b.contains(&pt(&[3, 2])));
    }

    #[test]
    fn empty_step_set_is_rejected() {
        assert!(matches!(boundary(&set(1, &[&[0]]), &[]), Err(Error::InvalidStepSet(_))));
    }

    #[test]
    fn half_space_distance_is_height() {
        let c = LipschitzDomain::half_space(2);
        assert_eq!(distance_to_boundary(&pt(&[3, 0]), &c, &nn(2)).unwrap(), 3.0);
        assert_eq!(distance_to_boundary(&pt(&[1, 7]), &c, &nn(2)).unwrap(), 1.0);
        assert!(matches!(distance_to_boundary(&pt(&[0, 7]), &c, &nn(2)), Err(Error::OutsideDomain(_))));
    }

    #[test]
    fn wedge_distance_matches_window_scan() {
        let c = LipschitzDomain::new(2, LipschitzProfile::wedge()).unwrap();
        let steps = nn(2);
        for x in [pt(&[5, 0]), pt(&[7, 2]), pt(&[4, -3])] {
            let mut best = i64::MAX;
            for a in -12..=12 {
                for b in -12..=12 {
                    let q = pt(&[x.coords()[0] + a, x.coords()[1] + b]);
                    let on = !c.contains(&q) && steps.iter().any(|e| c.contains(&(&q - e)));
                    if on {
                        best = best.min(q.dist_sq(&x));
                    }
                }
            }
            assert_eq!(distance_sq_to_boundary(&x, &c, &steps).unwrap(), best, "{x}");
        }
        assert_eq!(distance_sq_to_boundary(&pt(&[5, 0]), &c, &steps).unwrap(), 13);
    }

    #[test]
    fn region_counts() {
        let q = enumerate_region(&Region::cube(pt(&[0, 0]), Radius::new(2)), None, &[]).unwrap();
        assert_eq!(q.len(), 25);
        let b = enumerate_region(&Region::ball(pt(&[0, 0]), Radius::new(2)), None, &[]).unwrap();
        assert_eq!(b.len(), 13);
        let first: Vec<_> = b.iter().take(2).cloned().collect();
        assert_eq!(first, vec![pt(&[-2, 0]), pt(&[-1, -1])]);
    }

    #[test]
    fn collar_and_slab_split_the_ball() {
        let steps = nn(2);
        for c in [LipschitzDomain::half_space(2), LipschitzDomain::new(2, LipschitzProfile::wedge()).unwrap()] {
            let y = pt(&[0, 0]);
            let (big, small) = (Radius::new(8), Radius::new(2));
            let ball = enumerate_region(&Region::ball(y.clone(), big), Some(&c), &steps).unwrap();
            let collar = enumerate_region(&Region::collar(y.clone(), big, small), Some(&c), &steps).unwrap();
            let slab = enumerate_region(&Region::slab(y.clone(), big, small), Some(&c), &steps).unwrap();
            assert_eq!(ball.len(), collar.len() + slab.len());
            assert_eq!(collar.union(&slab), ball);
            for x in &slab {
                assert!(distance_sq_to_boundary(x, &c, &steps).unwrap() > 4);
            }
            for x in &collar {
                assert!(distance_sq_to_boundary(x, &c, &steps).unwrap() <= 4);
            }
        }
    }

    #[test]
    fn bad_regions_are_rejected() {
        let c = LipschitzDomain::half_space(2);
        let y = pt(&[0, 0]);
        let r = Region::collar(y.clone(), Radius::new(2), Radius::new(4));
        assert!(matches!(enumerate_region(&r, Some(&c), &nn(2)), Err(Error::InvalidRegion(_))));
        let r = Region::ball(y.clone(), Radius::from_sq(Rational::new(1, 4)));
        assert!(matches!(enumerate_region(&r, None, &nn(2)), Err(Error::InvalidRegion(_))));
        let r = Region::slab(y, Radius::new(4), Radius::new(2));
        assert!(matches!(enumerate_region(&r, None, &nn(2)), Err(Error::InvalidRegion(_))));
    }

    #[test]
    fn exterior_fraction_of_half_space_is_near_half() {
        let c = LipschitzDomain::half_space(2);
        for r in [4, 8, 16, 32] {
            let f = exterior_cone_fraction(&pt(&[0, 0]), Radius::new(r), &c, &nn(2)).unwrap();
            assert!((f - 0.5).abs() <= 1.0 / r as f64, "R = {r}: {f}");
        }
    }

    #[test]
    fn exterior_fraction_of_wedge_matches_count() {
        let c = LipschitzDomain::new(2, LipschitzProfile::wedge()).unwrap();
        let r = 16i64;
        // Closed cube for nearest-neighbour steps: the square plus its four
        // edge strips (no corners).
        let (mut total, mut outside) = (0, 0);
        for a in -r - 1..=r + 1 {
            for b in -r - 1..=r + 1 {
                if a.abs() == r + 1 && b.abs() == r + 1 {
                    continue;
                }
                total += 1;
                if a <= b.abs() {
                    outside += 1;
                }
            }
        }
        let f = exterior_cone_fraction(&pt(&[0, 0]), Radius::new(r), &c, &nn(2)).unwrap();
        assert_eq!(f, outside as f64 / total as f64);
        let half = exterior_cone_fraction(&pt(&[0, 0]), Radius::new(r), &LipschitzDomain::half_space(2), &nn(2)).unwrap();
        assert!(f >= half);
    }

    #[test]
    fn exterior_fraction_needs_a_boundary_point() {
        let c = LipschitzDomain::half_space(2);
        assert!(exterior_cone_fraction(&pt(&[2, 0]), Radius::new(4), &c, &nn(2)).is_err());
    }

    proptest! {
        #[test]
        fn boundary_is_disjoint_and_witnessed(
            coords in prop::collection::vec((-4i64..4, -4i64..4), 1..12),
            extra in prop::option::of((-2i64..3, -2i64..3)),
        ) {
            let a = PointSet::from_points(2, coords.iter().map(|&(x, y)| pt(&[x, y])).collect()).unwrap();
            let mut steps = nn(2);
            if let Some((x, y)) = extra {
                let e = pt(&[x, y]);
                if !steps.contains(&e) {
                    steps.push(e);
                }
            }
            let b = boundary(&a, &steps).unwrap();
            for x in &b {
                prop_assert!(!a.contains(x));
                prop_assert!(steps.iter().any(|e| a.contains(&(x - e))));
            }
            let expected = boundary_oracle(&a, &steps);
            prop_assert_eq!(b.points(), expected.as_slice());
        }

        #[test]
        fn half_space_delta_is_height(x1 in 1i64..50, x2 in -50i64..50) {
            let c = LipschitzDomain::half_space(2);
            prop_assert_eq!(distance_sq_to_boundary(&pt(&[x1, x2]), &c, &nn(2)).unwrap(), x1 * x1);
        }
    }
}
