use alloc::format;
use alloc::vec::Vec;

use num_rational::Ratio;
use num_traits::{Signed, Zero};

use super::point::LatticePoint;
use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// A one-dimensional piecewise-linear function through the origin.
///
/// `slopes[i]` applies on the `i`-th segment cut out by the sorted
/// `breakpoints`, so there is one more slope than breakpoints.
#[derive(Clone, Debug, PartialEq)]
pub struct AxisProfile {
    breakpoints: Vec<Rational>,
    slopes: Vec<Rational>,
}

impl AxisProfile {
    pub fn new(breakpoints: Vec<Rational>, slopes: Vec<Rational>) -> Result<Self> {
        if slopes.len() != breakpoints.len() + 1 {
            return Err(Error::InvalidProfile(format!(
                "{} breakpoints need {} slopes, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                slopes.len()
            )));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidProfile("breakpoints must be strictly increasing".into()));
        }
        Ok(AxisProfile { breakpoints, slopes })
    }

    pub fn linear(slope: Rational) -> Self {
        AxisProfile { breakpoints: Vec::new(), slopes: alloc::vec![slope] }
    }

    /// `t -> |t|`, the profile of a right-angled wedge.
    pub fn abs() -> Self {
        AxisProfile {
            breakpoints: alloc::vec![Rational::zero()],
            slopes: alloc::vec![Rational::from_integer(-1), Rational::from_integer(1)],
        }
    }

    pub fn max_abs_slope(&self) -> Rational {
        self.slopes.iter().map(|s| s.abs()).max().unwrap_or_else(Rational::zero)
    }

    /// Integral of the slope function from 0 to `t`.
    pub fn eval(&self, t: Rational) -> Rational {
        let (lo, hi, sign) = if t >= Rational::zero() {
            (Rational::zero(), t, Rational::from_integer(1))
        } else {
            (t, Rational::zero(), Rational::from_integer(-1))
        };
        let mut acc = Rational::zero();
        for (i, slope) in self.slopes.iter().enumerate() {
            let seg_lo = if i == 0 { None } else { Some(self.breakpoints[i - 1]) };
            let seg_hi = self.breakpoints.get(i).copied();
            let a = match seg_lo {
                Some(b) if b > lo => b,
                _ => lo,
            };
            let b = match seg_hi {
                Some(b) if b < hi => b,
                _ => hi,
            };
            if b > a {
                acc += *slope * (b - a);
            }
        }
        acc * sign
    }
}

/// The graph function `phi` of a Lipschitz domain `{x1 > phi(x')}`.
#[derive(Clone, Debug, PartialEq)]
pub enum LipschitzProfile {
    /// `phi = 0`: the half-space.
    Zero,
    /// `phi(x') = sum_k f_k(x'_k)` with piecewise-linear `f_k` and
    /// rational slopes.
    PiecewiseLinear { axes: Vec<AxisProfile>, lipschitz_constant: f64 },
    /// Explicit values on the integer box `origin + [0, shape)`, extended
    /// outside the box by clamping to the nearest box point.
    Table {
        origin: Vec<i64>,
        shape: Vec<usize>,
        values: Vec<Rational>,
        lipschitz_constant: f64,
    },
}

impl LipschitzProfile {
    /// `phi(x') = |x'_1|` in `d = 2`, the wedge `{x1 > |x2|}` with `A = 1`.
    pub fn wedge() -> Self {
        LipschitzProfile::PiecewiseLinear { axes: alloc::vec![AxisProfile::abs()], lipschitz_constant: 1.0 }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match self {
            LipschitzProfile::Zero => 0.0,
            LipschitzProfile::PiecewiseLinear { lipschitz_constant, .. }
            | LipschitzProfile::Table { lipschitz_constant, .. } => *lipschitz_constant,
        }
    }

    /// Number of lateral coordinates the profile expects, if it fixes one.
    fn lateral_dim(&self) -> Option<usize> {
        match self {
            LipschitzProfile::Zero => None,
            LipschitzProfile::PiecewiseLinear { axes, .. } => Some(axes.len()),
            LipschitzProfile::Table { origin, .. } => Some(origin.len()),
        }
    }

    pub fn eval(&self, lateral: &[i64]) -> Rational {
        match self {
            LipschitzProfile::Zero => Rational::zero(),
            LipschitzProfile::PiecewiseLinear { axes, .. } => axes
                .iter()
                .zip(lateral)
                .map(|(axis, &t)| axis.eval(Rational::from_integer(t)))
                .fold(Rational::zero(), |a, b| a + b),
            LipschitzProfile::Table { origin, shape, values, .. } => {
                values[table_index(origin, shape, lateral)]
            }
        }
    }

    fn lipschitz_bound_sq(&self) -> f64 {
        match self {
            LipschitzProfile::Zero => 0.0,
            LipschitzProfile::PiecewiseLinear { axes, .. } => axes
                .iter()
                .map(|a| {
                    let s = a.max_abs_slope();
                    let v = *s.numer() as f64 / *s.denom() as f64;
                    v * v
                })
                .sum(),
            LipschitzProfile::Table { .. } => 0.0,
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if let Some(k) = self.lateral_dim() {
            if k != dim - 1 {
                return Err(Error::InvalidProfile(format!(
                    "profile has {k} lateral axes but the domain has dimension {dim}"
                )));
            }
        }
        let a = self.lipschitz_constant();
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::InvalidProfile(format!("bad Lipschitz constant {a}")));
        }
        if !self.eval(&alloc::vec![0; dim - 1]).is_zero() {
            return Err(Error::InvalidProfile("phi(0) must be 0".into()));
        }
        match self {
            LipschitzProfile::Zero => Ok(()),
            LipschitzProfile::PiecewiseLinear { .. } => {
                let bound = self.lipschitz_bound_sq();
                if bound > a * a * (1.0 + 1e-12) {
                    return Err(Error::InvalidProfile(format!(
                        "slopes need Lipschitz constant {} but {a} was declared",
                        libm::sqrt(bound)
                    )));
                }
                Ok(())
            }
            LipschitzProfile::Table { origin, shape, values, .. } => {
                let n: usize = shape.iter().product();
                if values.len() != n || shape.contains(&0) {
                    return Err(Error::InvalidProfile(format!(
                        "table shape {shape:?} needs {n} values, got {}",
                        values.len()
                    )));
                }
                // Spot check: every pair when small, otherwise a strided sample.
                let stride = if n <= 2048 { 1 } else { n / 1024 };
                let coords = |i: usize| -> Vec<i64> {
                    let mut rem = i;
                    let mut c = alloc::vec![0i64; shape.len()];
                    for k in (0..shape.len()).rev() {
                        c[k] = origin[k] + (rem % shape[k]) as i64;
                        rem /= shape[k];
                    }
                    c
                };
                for i in (0..n).step_by(stride) {
                    let ci = coords(i);
                    for j in (i + 1..n).step_by(stride) {
                        let cj = coords(j);
                        let dist_sq: i64 = ci.iter().zip(&cj).map(|(a, b)| (a - b) * (a - b)).sum();
                        let diff = (values[i] - values[j]).abs();
                        let diff = *diff.numer() as f64 / *diff.denom() as f64;
                        if diff * diff > a * a * dist_sq as f64 * (1.0 + 1e-12) {
                            return Err(Error::InvalidProfile(format!(
                                "|phi({ci:?}) - phi({cj:?})| = {diff} exceeds A·|x'-y'|"
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

fn table_index(origin: &[i64], shape: &[usize], lateral: &[i64]) -> usize {
    let mut idx = 0usize;
    for k in 0..shape.len() {
        let rel = (lateral[k] - origin[k]).clamp(0, shape[k] as i64 - 1) as usize;
        idx = idx * shape[k] + rel;
    }
    idx
}

/// `C = {x in Z^d : x1 > phi(x')}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LipschitzDomain {
    dim: usize,
    profile: LipschitzProfile,
}

impl LipschitzDomain {
    pub fn new(dim: usize, profile: LipschitzProfile) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidProfile("dimension must be at least 1".into()));
        }
        profile.validate(dim)?;
        Ok(LipschitzDomain { dim, profile })
    }

    pub fn half_space(dim: usize) -> Self {
        LipschitzDomain { dim, profile: LipschitzProfile::Zero }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn profile(&self) -> &LipschitzProfile {
        &self.profile
    }

    pub fn phi(&self, lateral: &[i64]) -> Rational {
        self.profile.eval(lateral)
    }

    /// Exact membership test `x1 > phi(x')`.
    pub fn contains(&self, x: &LatticePoint) -> bool {
        debug_assert_eq!(x.dim(), self.dim);
        Rational::from_integer(x.height()) > self.profile.eval(x.lateral())
    }

    /// Samples pairs of lattice points in `[-extent, extent]^{d-1}` and
    /// checks `|phi(x') - phi(y')| <= A |x' - y'|`.
    pub fn spot_check_lipschitz(&self, extent: i64) -> Result<()> {
        let k = self.dim - 1;
        if k == 0 {
            return Ok(());
        }
        let a = self.profile.lipschitz_constant();
        let side = (2 * extent + 1) as usize;
        let total = side.pow(k as u32);
        let stride = (total / 256).max(1);
        let point = |i: usize| -> Vec<i64> {
            let mut rem = i;
            let mut c = alloc::vec![0i64; k];
            for slot in c.iter_mut().rev() {
                *slot = (rem % side) as i64 - extent;
                rem /= side;
            }
            c
        };
        for i in (0..total).step_by(stride) {
            let p = point(i);
            let fp = self.phi(&p);
            for j in (i + 1..total).step_by(stride) {
                let q = point(j);
                let diff = (fp - self.phi(&q)).abs();
                let diff = *diff.numer() as f64 / *diff.denom() as f64;
                let dist_sq: i64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                if diff * diff > a * a * dist_sq as f64 * (1.0 + 1e-12) {
                    return Err(Error::InvalidProfile(format!(
                        "|phi({p:?}) - phi({q:?})| = {diff} exceeds {a}·|x'-y'|"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn axis_profile_integrates_slopes() {
        let f = AxisProfile::new(vec![q(0, 1), q(4, 1)], vec![q(-1, 2), q(1, 3), q(-1, 1)]).unwrap();
        assert_eq!(f.eval(q(3, 1)), q(1, 1));
        assert_eq!(f.eval(q(6, 1)), q(4, 3) - q(2, 1));
        assert_eq!(f.eval(q(-2, 1)), q(1, 1));
        assert!(AxisProfile::new(vec![q(1, 1)], vec![q(1, 1)]).is_err());
        assert!(AxisProfile::new(vec![q(1, 1), q(1, 1)], vec![q(1, 1); 3]).is_err());
    }

    #[test]
    fn membership_is_exact_on_rational_graphs() {
        let profile = LipschitzProfile::PiecewiseLinear { axes: vec![AxisProfile::linear(q(1, 3))], lipschitz_constant: 1.0 };
        let c = LipschitzDomain::new(2, profile).unwrap();
        assert!(!c.contains(&LatticePoint::new(&[1, 3])));
        assert!(c.contains(&LatticePoint::new(&[2, 3])));
        assert!(c.contains(&LatticePoint::new(&[1, 2])));
        assert!(!c.contains(&LatticePoint::new(&[0, 0])));
    }

    #[test]
    fn wedge_profile() {
        let c = LipschitzDomain::new(2, LipschitzProfile::wedge()).unwrap();
        assert_eq!(c.phi(&[-5]), q(5, 1));
        assert!(c.contains(&LatticePoint::new(&[6, -5])));
        assert!(!c.contains(&LatticePoint::new(&[5, -5])));
        c.spot_check_lipschitz(10).unwrap();
    }

    #[test]
    fn invalid_profiles_are_rejected() {
        let shifted = LipschitzProfile::Table { origin: vec![-1], shape: vec![3], values: vec![q(0, 1), q(1, 1), q(0, 1)], lipschitz_constant: 1.0 };
        assert!(LipschitzDomain::new(2, shifted).is_err());
        let steep = LipschitzProfile::PiecewiseLinear { axes: vec![AxisProfile::linear(q(2, 1))], lipschitz_constant: 1.0 };
        assert!(LipschitzDomain::new(2, steep).is_err());
        let jumpy = LipschitzProfile::Table { origin: vec![0], shape: vec![3], values: vec![q(0, 1), q(3, 1), q(0, 1)], lipschitz_constant: 1.0 };
        assert!(LipschitzDomain::new(2, jumpy).is_err());
        assert!(LipschitzDomain::new(3, LipschitzProfile::wedge()).is_err());
    }

    #[test]
    fn table_profile_clamps_outside_its_box() {
        let t = LipschitzProfile::Table { origin: vec![-1], shape: vec![3], values: vec![q(1, 1), q(0, 1), q(1, 2)], lipschitz_constant: 1.0 };
        let c = LipschitzDomain::new(2, t).unwrap();
        assert_eq!(c.phi(&[-7]), q(1, 1));
        assert_eq!(c.phi(&[9]), q(1, 2));
        assert!(c.contains(&LatticePoint::new(&[1, 4])));
        assert!(!c.contains(&LatticePoint::new(&[1, -4])));
    }
}
