use alloc::format;
use alloc::vec::Vec;

use super::point::{LatticePoint, PointSet, Radius};
use super::profile::LipschitzDomain;
use super::{boundary_within, enumerate_box};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionKind {
    /// Euclidean ball `B_R(y)`.
    Ball,
    /// Cube `Q_R(y)` of side `2R`, parallel to the axes.
    Cube,
    /// Near-boundary collar `C_{R,r}(y) = (B_R(y) ∩ C) \ D_{R,r}(y)`.
    Collar,
    /// Deep part `D_{R,r}(y) = B_R(y) ∩ {x in C : delta(x) > r}`.
    Slab,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub kind: RegionKind,
    pub center: LatticePoint,
    pub outer: Radius,
    pub inner: Option<Radius>,
}

impl Region {
    pub fn ball(center: LatticePoint, radius: Radius) -> Self {
        Region { kind: RegionKind::Ball, center, outer: radius, inner: None }
    }

    pub fn cube(center: LatticePoint, half_side: Radius) -> Self {
        Region { kind: RegionKind::Cube, center, outer: half_side, inner: None }
    }

    pub fn collar(center: LatticePoint, outer: Radius, inner: Radius) -> Self {
        Region { kind: RegionKind::Collar, center, outer, inner: Some(inner) }
    }

    pub fn slab(center: LatticePoint, outer: Radius, inner: Radius) -> Self {
        Region { kind: RegionKind::Slab, center, outer, inner: Some(inner) }
    }

    pub fn contains_unclipped(&self, p: &LatticePoint) -> bool {
        match self.kind {
            RegionKind::Cube => self.outer.admits_sq({
                let s = p.sup_dist(&self.center);
                s * s
            }),
            _ => self.outer.admits_sq(p.dist_sq(&self.center)),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.outer < Radius::new(1) {
            return Err(Error::InvalidRegion(format!("outer radius {} is below 1", self.outer)));
        }
        match (self.kind, self.inner) {
            (RegionKind::Collar | RegionKind::Slab, None) => {
                Err(Error::InvalidRegion("collar and slab regions need an inner radius".into()))
            }
            (RegionKind::Collar | RegionKind::Slab, Some(r)) if r > self.outer => Err(Error::InvalidRegion(
                format!("inner radius {r} exceeds outer radius {}", self.outer),
            )),
            (RegionKind::Collar | RegionKind::Slab, Some(r)) if r < Radius::new(1) => {
                Err(Error::InvalidRegion(format!("inner radius {r} is below 1")))
            }
            _ => Ok(()),
        }
    }
}

/// Lattice points of `region`, intersected with `domain` when given.
///
/// Collars and slabs are always taken inside the domain, so they require
/// one. `steps` is the step set that defines the domain boundary.
pub fn enumerate_region(
    region: &Region,
    domain: Option<&LipschitzDomain>,
    steps: &[LatticePoint],
) -> Result<PointSet> {
    region.validate()?;
    let dim = region.center.dim();
    if let Some(c) = domain {
        region.center.check_dim(c.dim())?;
    }
    let reach = region.outer.floor();
    let lo: Vec<i64> = region.center.coords().iter().map(|c| c - reach).collect();
    let hi: Vec<i64> = region.center.coords().iter().map(|c| c + reach).collect();
    let mut out = Vec::new();
    match region.kind {
        RegionKind::Ball | RegionKind::Cube => {
            enumerate_box(&lo, &hi, |p| {
                if region.contains_unclipped(p) && domain.map_or(true, |c| c.contains(p)) {
                    out.push(p.clone());
                }
            });
        }
        RegionKind::Collar | RegionKind::Slab => {
            let c = domain.ok_or_else(|| {
                Error::InvalidRegion("collar and slab regions need a domain".into())
            })?;
            let inner = region.inner.expect("validated");
            let want_deep = region.kind == RegionKind::Slab;
            enumerate_box(&lo, &hi, |p| {
                if region.contains_unclipped(p) && c.contains(p) {
                    let deep = !boundary_within(p, c, steps, inner);
                    if deep == want_deep {
                        out.push(p.clone());
                    }
                }
            });
        }
    }
    Ok(PointSet::from_sorted_unchecked(dim, out))
}
