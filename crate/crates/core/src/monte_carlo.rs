//! Path simulation of the killed walk.
//!
//! Every path draws from its own ChaCha8 stream (`seed`, stream = path
//! index), so results do not depend on how paths are scheduled.

use alloc::format;
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::geometry::{LatticePoint, PointSet};
use crate::kernel::{KernelRule, TransitionKernel};
use crate::par;

/// z-value of a two-sided 95% normal interval.
pub const Z95: f64 = 1.96;

#[derive(Clone, Debug)]
pub struct SimulationConfig<'k> {
    pub kernel: &'k TransitionKernel,
    pub start: LatticePoint,
    pub stop_region: PointSet,
    pub path_cap: u64,
    pub seed: u64,
    pub n_paths: usize,
}

impl<'k> SimulationConfig<'k> {
    /// Config with the default cap of `100 · diam²` steps, where `diam` is
    /// the diagonal of the bounding box of the stop region.
    pub fn new(
        kernel: &'k TransitionKernel,
        start: LatticePoint,
        stop_region: PointSet,
        seed: u64,
        n_paths: usize,
    ) -> Result<Self> {
        let path_cap = default_path_cap(&stop_region);
        let cfg = SimulationConfig { kernel, start, stop_region, path_cap, seed, n_paths };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_path_cap(mut self, cap: u64) -> Result<Self> {
        self.path_cap = cap;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.path_cap < 1 {
            return Err(Error::InvalidSimulation("path cap must be at least 1".into()));
        }
        if self.n_paths < 1 {
            return Err(Error::InvalidSimulation("need at least one path".into()));
        }
        if !self.stop_region.contains(&self.start) {
            return Err(Error::InvalidSimulation(format!("start {} is not in the stop region", self.start)));
        }
        Ok(())
    }
}

fn default_path_cap(region: &PointSet) -> u64 {
    let Some(first) = region.points().first() else { return 1 };
    let d = region.dim();
    let mut lo = first.coords().to_vec();
    let mut hi = lo.clone();
    for p in region {
        for k in 0..d {
            lo[k] = lo[k].min(p.coords()[k]);
            hi[k] = hi[k].max(p.coords()[k]);
        }
    }
    let diam_sq: i64 = lo.iter().zip(&hi).map(|(a, b)| (b - a) * (b - a)).sum();
    (100 * diam_sq.max(1)) as u64
}

#[derive(Clone, Debug, PartialEq)]
pub enum PathOutcome {
    Exited { point: LatticePoint, time: u64 },
    Truncated,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct EstimatorResult {
    pub point_estimate: f64,
    pub half_width_95: f64,
    /// Completed (untruncated) paths the estimate uses.
    pub n_effective: usize,
    pub truncated_paths: usize,
}

impl EstimatorResult {
    /// Whether `value` lies within `k` half-widths of the estimate.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.point_estimate - value).abs() <= k * self.half_width_95
    }
}

/// Cumulative step tables, one per distinct site weight vector.
struct StepSampler<'k> {
    kernel: &'k TransitionKernel,
    cumulative: Vec<Vec<f64>>,
}

impl<'k> StepSampler<'k> {
    fn new(kernel: &'k TransitionKernel) -> Self {
        let cumulate = |w: Vec<f64>| -> Vec<f64> {
            let mut acc = 0.0;
            w.into_iter()
                .map(|p| {
                    acc += p;
                    acc
                })
                .collect()
        };
        let d = kernel.dim();
        let cumulative = match kernel.rule() {
            KernelRule::Homogeneous(_) => alloc::vec![cumulate(kernel.weights_at(&LatticePoint::origin(d)))],
            KernelRule::Periodic { periods, .. } => {
                let mut tables = Vec::new();
                let hi: Vec<i64> = periods.iter().map(|p| p - 1).collect();
                crate::geometry::enumerate_box(&alloc::vec![0; d], &hi, |cell| {
                    tables.push(cumulate(kernel.weights_at(cell)));
                });
                tables
            }
            KernelRule::Modulated { .. } => Vec::new(),
        };
        StepSampler { kernel, cumulative }
    }

    fn pick(cumulative: &[f64], u: f64) -> usize {
        let total = *cumulative.last().expect("nonempty");
        let target = u * total;
        cumulative.iter().position(|&c| target < c).unwrap_or(cumulative.len() - 1)
    }

    fn sample(&self, x: &LatticePoint, u: f64, scratch: &mut Vec<f64>) -> usize {
        match self.kernel.rule() {
            KernelRule::Homogeneous(_) => Self::pick(&self.cumulative[0], u),
            KernelRule::Periodic { periods, .. } => {
                let mut idx = 0usize;
                for (c, &p) in x.coords().iter().zip(periods) {
                    idx = idx * p as usize + c.rem_euclid(p) as usize;
                }
                Self::pick(&self.cumulative[idx], u)
            }
            KernelRule::Modulated { .. } => {
                scratch.resize(self.kernel.steps().len(), 0.0);
                self.kernel.weights_into(x, scratch);
                let mut acc = 0.0;
                for w in scratch.iter_mut() {
                    acc += *w;
                    *w = acc;
                }
                Self::pick(scratch, u)
            }
        }
    }
}

fn uniform(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn path_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Runs one path, calling `visit` on every position before the exit
/// (time 0 included).
fn run_path<F: FnMut(&LatticePoint)>(
    cfg: &SimulationConfig<'_>,
    sampler: &StepSampler<'_>,
    index: usize,
    mut visit: F,
) -> PathOutcome {
    let mut rng = path_rng(cfg.seed, index);
    let mut x = cfg.start.clone();
    let mut scratch = Vec::new();
    let steps = cfg.kernel.steps();
    for t in 0..cfg.path_cap {
        visit(&x);
        let e = &steps[sampler.sample(&x, uniform(&mut rng), &mut scratch)];
        x = &x + e;
        if !cfg.stop_region.contains(&x) {
            return PathOutcome::Exited { point: x, time: t + 1 };
        }
    }
    PathOutcome::Truncated
}

/// Simulates `n_paths` independent paths from `start` until they leave the
/// stop region or reach the step cap.
pub fn simulate_exit(cfg: &SimulationConfig<'_>) -> Result<Vec<PathOutcome>> {
    cfg.validate()?;
    let sampler = StepSampler::new(cfg.kernel);
    let outcomes = par::map_indexed(cfg.n_paths, |i| run_path(cfg, &sampler, i, |_| {}));
    if outcomes.iter().all(|o| matches!(o, PathOutcome::Truncated)) {
        return Err(Error::InconclusiveSimulation(cfg.n_paths));
    }
    Ok(outcomes)
}

/// Binomial estimate of `P_start[S(τ) ∈ target]` from completed paths.
pub fn estimate_exit_probability(cfg: &SimulationConfig<'_>, target: &PointSet) -> Result<EstimatorResult> {
    let boundary = crate::geometry::boundary(&cfg.stop_region, cfg.kernel.steps())?;
    if let Some(bad) = target.iter().find(|t| !boundary.contains(t)) {
        return Err(Error::InvalidTarget(bad.clone()));
    }
    let outcomes = simulate_exit(cfg)?;
    let mut hits = 0usize;
    let mut done = 0usize;
    for o in &outcomes {
        if let PathOutcome::Exited { point, .. } = o {
            done += 1;
            if target.contains(point) {
                hits += 1;
            }
        }
    }
    let p = hits as f64 / done as f64;
    Ok(EstimatorResult {
        point_estimate: p,
        half_width_95: Z95 * libm::sqrt(p * (1.0 - p) / done as f64),
        n_effective: done,
        truncated_paths: outcomes.len() - done,
    })
}

/// Mean number of visits to `y` before exit, estimating `G_start^y`.
pub fn estimate_green(cfg: &SimulationConfig<'_>, y: &LatticePoint) -> Result<EstimatorResult> {
    cfg.validate()?;
    if !cfg.stop_region.contains(y) {
        return Err(Error::InvalidSource(y.clone()));
    }
    let sampler = StepSampler::new(cfg.kernel);
    let runs = par::map_indexed(cfg.n_paths, |i| {
        let mut visits = 0u64;
        let outcome = run_path(cfg, &sampler, i, |x| {
            if x == y {
                visits += 1;
            }
        });
        (outcome, visits)
    });
    let completed: Vec<f64> = runs
        .iter()
        .filter(|(o, _)| matches!(o, PathOutcome::Exited { .. }))
        .map(|&(_, v)| v as f64)
        .collect();
    let n = completed.len();
    if n == 0 {
        return Err(Error::InconclusiveSimulation(cfg.n_paths));
    }
    let mean = completed.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        completed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    Ok(EstimatorResult {
        point_estimate: mean,
        half_width_95: Z95 * libm::sqrt(var / n as f64),
        n_effective: n,
        truncated_paths: cfg.n_paths - n,
    })
}

/// Mean exit time over completed paths.
pub fn mean_exit_time(outcomes: &[PathOutcome]) -> Option<f64> {
    let times: Vec<u64> = outcomes
        .iter()
        .filter_map(|o| match o {
            PathOutcome::Exited { time, .. } => Some(*time),
            PathOutcome::Truncated => None,
        })
        .collect();
    if times.is_empty() {
        None
    } else {
        Some(times.iter().sum::<u64>() as f64 / times.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dirichlet::{green_function, harmonic_measure};
    use alloc::vec;

    fn interval(lo: i64, hi: i64) -> PointSet {
        PointSet::from_points(1, (lo..=hi).map(|i| LatticePoint::new(&[i])).collect()).unwrap()
    }

    #[test]
    fn single_site_exits_in_one_step() {
        let k = TransitionKernel::simple(1);
        let cfg = SimulationConfig::new(&k, LatticePoint::new(&[0]), interval(0, 0), 7, 500).unwrap();
        let out = simulate_exit(&cfg).unwrap();
        assert!(out.iter().all(|o| matches!(o, PathOutcome::Exited { time: 1, .. })));
        let g = estimate_green(&cfg, &LatticePoint::new(&[0])).unwrap();
        assert_eq!((g.point_estimate, g.half_width_95), (1.0, 0.0));
    }

    #[test]
    fn gamblers_ruin_frequencies() {
        let k = TransitionKernel::simple(1);
        let top = interval(10, 10);
        for (start, p) in [(5, 0.5), (3, 0.3)] {
            let cfg = SimulationConfig::new(&k, LatticePoint::new(&[start]), interval(1, 9), 11, 20_000).unwrap();
            let est = estimate_exit_probability(&cfg, &top).unwrap();
            assert!(est.agrees_with(p, 3.0), "{est:?}");
            let expected_hw = Z95 * libm::sqrt(est.point_estimate * (1.0 - est.point_estimate) / est.n_effective as f64);
            assert_eq!(est.half_width_95, expected_hw);
            assert_eq!(est.truncated_paths, 0);
        }
    }

    #[test]
    fn full_boundary_is_hit_with_certainty() {
        let k = TransitionKernel::checkerboard();
        let region = PointSet::from_points(2, (0..16).map(|i| LatticePoint::new(&[i / 4, i % 4])).collect()).unwrap();
        let cfg = SimulationConfig::new(&k, LatticePoint::new(&[1, 2]), region.clone(), 3, 2000).unwrap();
        let all = crate::geometry::boundary(&region, k.steps()).unwrap();
        let est = estimate_exit_probability(&cfg, &all).unwrap();
        assert_eq!(est.point_estimate, 1.0);
        assert_eq!(est.half_width_95, 0.0);
    }

    #[test]
    fn same_seed_same_paths() {
        let k = TransitionKernel::checkerboard();
        let region = PointSet::from_points(2, (0..25).map(|i| LatticePoint::new(&[i / 5, i % 5])).collect()).unwrap();
        let cfg = SimulationConfig::new(&k, LatticePoint::new(&[2, 2]), region, 99, 300).unwrap();
        assert_eq!(simulate_exit(&cfg).unwrap(), simulate_exit(&cfg).unwrap());
        let other = SimulationConfig { seed: 100, ..cfg.clone() };
        assert_ne!(simulate_exit(&cfg).unwrap(), simulate_exit(&other).unwrap());
    }

    #[test]
    fn green_estimate_matches_solver() {
        let k = TransitionKernel::simple(1);
        let region = interval(1, 19);
        let y = LatticePoint::new(&[10]);
        let cfg = SimulationConfig::new(&k, y.clone(), region.clone(), 5, 20_000).unwrap();
        let est = estimate_green(&cfg, &y).unwrap();
        let exact = green_function(&region, &k, &y, 1e-12).unwrap().get(&y).unwrap();
        assert!((exact - 10.0).abs() < 1e-9);
        assert!(est.agrees_with(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn unreachable_green_is_zero() {
        let k = TransitionKernel::simple(2);
        let region = PointSet::from_points(2, vec![LatticePoint::new(&[0, 0]), LatticePoint::new(&[4, 4])]).unwrap();
        let cfg = SimulationConfig::new(&k, LatticePoint::new(&[0, 0]), region, 1, 100).unwrap();
        let est = estimate_green(&cfg, &LatticePoint::new(&[4, 4])).unwrap();
        assert_eq!((est.point_estimate, est.half_width_95), (0.0, 0.0));
    }

    #[test]
    fn modulated_walk_matches_harmonic_measure() {
        let k = TransitionKernel::modulated(
            2,
            0.6,
            vec![vec![0.9, 0.4], vec![0.3, -0.8]],
            vec![0.5, 0.0],
            crate::kernel::Weight::Float(0.05),
        )
        .unwrap();
        let region = PointSet::from_points(2, (0..36).map(|i| LatticePoint::new(&[i / 6, i % 6])).collect()).unwrap();
        let top = crate::geometry::boundary(&region, k.steps()).unwrap().filter(|z| z.height() == 6);
        let start = LatticePoint::new(&[3, 2]);
        let cfg = SimulationConfig::new(&k, start.clone(), region.clone(), 21, 20_000).unwrap();
        let est = estimate_exit_probability(&cfg, &top).unwrap();
        let exact = harmonic_measure(&region, &k, &top, 1e-12).unwrap().get(&start).unwrap();
        assert!(est.agrees_with(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn truncation_is_counted() {
        let k = TransitionKernel::simple(1);
        let cfg = SimulationConfig::new(&k, LatticePoint::new(&[50]), interval(1, 99), 2, 200).unwrap().with_path_cap(30).unwrap();
        assert!(matches!(simulate_exit(&cfg), Err(Error::InconclusiveSimulation(200))));
        let cfg = cfg.with_path_cap(3000).unwrap();
        let est = estimate_exit_probability(&cfg, &interval(100, 100)).unwrap();
        assert_eq!(est.n_effective + est.truncated_paths, 200);
        assert!(est.truncated_paths > 0);
    }

    #[test]
    fn invalid_configs() {
        let k = TransitionKernel::simple(1);
        assert!(SimulationConfig::new(&k, LatticePoint::new(&[5]), interval(1, 3), 0, 10).is_err());
        assert!(SimulationConfig::new(&k, LatticePoint::new(&[2]), interval(1, 3), 0, 0).is_err());
        let cfg = SimulationConfig::new(&k, LatticePoint::new(&[2]), interval(1, 3), 0, 10).unwrap();
        assert!(cfg.clone().with_path_cap(0).is_err());
        assert!(matches!(estimate_exit_probability(&cfg, &interval(2, 2)), Err(Error::InvalidTarget(_))));
        assert!(matches!(estimate_green(&cfg, &LatticePoint::new(&[7])), Err(Error::InvalidSource(_))));
    }
}
