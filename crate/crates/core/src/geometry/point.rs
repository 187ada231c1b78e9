use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Sub};

use num_rational::Ratio;
use smallvec::SmallVec;

use crate::error::{Error, Result};

type Coords = SmallVec<[i64; 4]>;

/// A point of `Z^d`. Ordering is lexicographic in the coordinates.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LatticePoint(Coords);

impl LatticePoint {
    pub fn new(coords: &[i64]) -> Self {
        assert!(!coords.is_empty(), "lattice points need dimension >= 1");
        LatticePoint(SmallVec::from_slice(coords))
    }

    pub fn origin(dim: usize) -> Self {
        assert!(dim >= 1, "lattice points need dimension >= 1");
        LatticePoint(SmallVec::from_elem(0, dim))
    }

    /// The unit vector `e_k` (`k` is zero based).
    pub fn unit(dim: usize, k: usize) -> Self {
        let mut p = Self::origin(dim);
        p.0[k] = 1;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// First coordinate, the "vertical" direction of graph domains.
    pub fn height(&self) -> i64 {
        self.0[0]
    }

    /// Coordinates after the first one.
    pub fn lateral(&self) -> &[i64] {
        &self.0[1..]
    }

    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn dist_sq(&self, other: &LatticePoint) -> i64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.norm_sq() as f64)
    }

    pub fn dist(&self, other: &LatticePoint) -> f64 {
        libm::sqrt(self.dist_sq(other) as f64)
    }

    pub fn sup_dist(&self, other: &LatticePoint) -> i64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or(0)
    }

    pub fn scaled(&self, factor: i64) -> LatticePoint {
        LatticePoint(self.0.iter().map(|c| c * factor).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() == dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: dim, got: self.dim() })
        }
    }
}

impl Add<&LatticePoint> for &LatticePoint {
    type Output = LatticePoint;
    fn add(self, rhs: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), rhs.dim());
        LatticePoint(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a + b).collect())
    }
}

impl Sub<&LatticePoint> for &LatticePoint {
    type Output = LatticePoint;
    fn sub(self, rhs: &LatticePoint) -> LatticePoint {
        debug_assert_eq!(self.dim(), rhs.dim());
        LatticePoint(self.0.iter().zip(rhs.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Debug for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl serde::Serialize for LatticePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> core::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

impl From<Vec<i64>> for LatticePoint {
    fn from(v: Vec<i64>) -> Self {
        LatticePoint::new(&v)
    }
}

/// A finite set of lattice points kept in lexicographic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PointSet {
    dim: usize,
    points: Vec<LatticePoint>,
}

impl PointSet {
    pub fn empty(dim: usize) -> Self {
        PointSet { dim, points: Vec::new() }
    }

    /// Builds a set from arbitrary points, sorting and removing duplicates.
    pub fn from_points(dim: usize, mut points: Vec<LatticePoint>) -> Result<Self> {
        for p in &points {
            p.check_dim(dim)?;
        }
        points.sort_unstable();
        points.dedup();
        Ok(PointSet { dim, points })
    }

    pub(crate) fn from_sorted_unchecked(dim: usize, points: Vec<LatticePoint>) -> Self {
        debug_assert!(points.windows(2).all(|w| w[0] < w[1]));
        PointSet { dim, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[LatticePoint] {
        &self.points
    }

    pub fn iter(&self) -> core::slice::Iter<'_, LatticePoint> {
        self.points.iter()
    }

    pub fn index_of(&self, p: &LatticePoint) -> Option<usize> {
        self.points.binary_search(p).ok()
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        self.index_of(p).is_some()
    }

    pub fn is_subset(&self, other: &PointSet) -> bool {
        self.points.iter().all(|p| other.contains(p))
    }

    pub fn union(&self, other: &PointSet) -> PointSet {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() && j < other.len() {
            match self.points[i].cmp(&other.points[j]) {
                core::cmp::Ordering::Less => {
                    out.push(self.points[i].clone());
                    i += 1;
                }
                core::cmp::Ordering::Greater => {
                    out.push(other.points[j].clone());
                    j += 1;
                }
                core::cmp::Ordering::Equal => {
                    out.push(self.points[i].clone());
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.points[i..]);
        out.extend_from_slice(&other.points[j..]);
        PointSet { dim: self.dim, points: out }
    }

    pub fn filter<F: FnMut(&LatticePoint) -> bool>(&self, mut keep: F) -> PointSet {
        PointSet {
            dim: self.dim,
            points: self.points.iter().filter(|p| keep(p)).cloned().collect(),
        }
    }

    pub fn difference(&self, other: &PointSet) -> PointSet {
        self.filter(|p| !other.contains(p))
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a LatticePoint;
    type IntoIter = core::slice::Iter<'a, LatticePoint>;
    fn into_iter(self) -> Self::IntoIter {
        self.points.iter()
    }
}

/// A radius stored through its exact square, so ball membership is an
/// exact rational comparison. Radii such as `3·sqrt(d)·R` stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Radius {
    sq: Ratio<i64>,
}

impl Radius {
    pub fn new(r: i64) -> Self {
        assert!(r >= 0, "radius must be nonnegative");
        Radius { sq: Ratio::from_integer(r * r) }
    }

    pub fn from_sq(sq: Ratio<i64>) -> Self {
        assert!(sq >= Ratio::from_integer(0), "squared radius must be nonnegative");
        Radius { sq }
    }

    /// Multiplies the radius by the rational `num/den`.
    pub fn times(self, num: i64, den: i64) -> Self {
        Radius { sq: self.sq * Ratio::new(num * num, den * den) }
    }

    /// Multiplies the radius by `sqrt(m)`.
    pub fn times_sqrt(self, m: i64) -> Self {
        Radius { sq: self.sq * Ratio::from_integer(m) }
    }

    pub fn sq(&self) -> Ratio<i64> {
        self.sq
    }

    pub fn value(&self) -> f64 {
        libm::sqrt(*self.sq.numer() as f64 / *self.sq.denom() as f64)
    }

    /// Largest integer `n` with `n <= radius`.
    pub fn floor(&self) -> i64 {
        let mut n = libm::floor(self.value()) as i64;
        while Ratio::from_integer((n + 1) * (n + 1)) <= self.sq {
            n += 1;
        }
        while n > 0 && Ratio::from_integer(n * n) > self.sq {
            n -= 1;
        }
        n
    }

    pub fn admits_sq(&self, dist_sq: i64) -> bool {
        Ratio::from_integer(dist_sq) <= self.sq
    }
}

impl fmt::Display for Radius {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}
