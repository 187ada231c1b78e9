//! Experiment drivers. Each one turns a configuration into a report whose
//! checks decide the exit status, plus any field or JSON artifacts.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use harmlab_core::dirichlet::{harmonic_measure, DirichletSystem, SolveMethod};
use harmlab_core::geometry::{self, enumerate_region};
use harmlab_core::harmonic::{
    construct_harmonic, martin_deviation, martin_field, martin_window, uniqueness_check, ConvergenceLog,
    ExhaustionSchedule, HarmonicCandidate,
};
use harmlab_core::lab::{self, DecayTarget};
use harmlab_core::monte_carlo::{estimate_exit_probability, EstimatorResult, SimulationConfig};
use harmlab_core::report::{LabReport, Scale};
use harmlab_core::{Error, Field, LatticePoint, LipschitzDomain, PointSet, Radius, Region, TransitionKernel};
use serde::Serialize;

use crate::config::{parse_point, parse_region, BoundaryPart, ExperimentConfig, OuterSpec};
use crate::field_csv::{save_field, Provenance};
use crate::{HarmlabError, VERSION};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Validate,
    Solve,
    Mc,
    Construct,
    Martin,
    Uniq,
    Harnack,
    Carleson,
    Prop1,
    Bhp,
    Lemma2,
    Decay,
    Growth,
}

impl Experiment {
    pub const ALL: [Experiment; 13] = [
        Experiment::Validate,
        Experiment::Solve,
        Experiment::Mc,
        Experiment::Construct,
        Experiment::Martin,
        Experiment::Uniq,
        Experiment::Harnack,
        Experiment::Carleson,
        Experiment::Prop1,
        Experiment::Bhp,
        Experiment::Lemma2,
        Experiment::Decay,
        Experiment::Growth,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Validate => "validate",
            Experiment::Solve => "solve",
            Experiment::Mc => "mc",
            Experiment::Construct => "construct",
            Experiment::Martin => "martin",
            Experiment::Uniq => "uniq",
            Experiment::Harnack => "harnack",
            Experiment::Carleson => "carleson",
            Experiment::Prop1 => "prop1",
            Experiment::Bhp => "bhp",
            Experiment::Lemma2 => "lemma2",
            Experiment::Decay => "decay",
            Experiment::Growth => "growth",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = HarmlabError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| HarmlabError::UnknownExperiment(s.into()))
    }
}

pub enum ArtifactBody {
    Field(Field),
    Json(serde_json::Value),
}

pub struct Artifact {
    /// File name inside the output directory.
    pub name: String,
    pub body: ArtifactBody,
}

pub struct Outcome {
    pub report: LabReport,
    pub artifacts: Vec<Artifact>,
}

impl Outcome {
    fn new(report: LabReport) -> Self {
        Outcome { report, artifacts: Vec::new() }
    }

    fn json(&mut self, name: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("artifacts serialize");
        self.artifacts.push(Artifact { name: name.into(), body: ArtifactBody::Json(value) });
    }

    fn field(&mut self, name: &str, field: Field) {
        self.artifacts.push(Artifact { name: name.into(), body: ArtifactBody::Field(field) });
    }

    pub fn passed(&self) -> bool {
        self.report.passed()
    }

    pub fn artifact(&self, name: &str) -> Option<&Artifact> {
        self.artifacts.iter().find(|a| a.name == name)
    }

    pub fn failed_checks(&self) -> Vec<&harmlab_core::report::Check> {
        self.report.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Writes the report as `<experiment>.json` and every artifact into
    /// `dir`; returns the written paths.
    pub fn write_all(&self, dir: &Path) -> Result<Vec<PathBuf>, HarmlabError> {
        std::fs::create_dir_all(dir).map_err(|e| HarmlabError::io(dir, e))?;
        let report = dir.join(format!("{}.json", self.report.experiment));
        write_json(&report, &self.report)?;
        let mut written = vec![report];
        for a in &self.artifacts {
            let path = dir.join(&a.name);
            self.write_artifact(a, &path)?;
            written.push(path);
        }
        Ok(written)
    }

    pub fn write_artifact(&self, a: &Artifact, path: &Path) -> Result<(), HarmlabError> {
        match &a.body {
            ArtifactBody::Field(f) => save_field(path, f, &Provenance::new(&self.report.config_digest)),
            ArtifactBody::Json(v) => write_json(path, v),
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), HarmlabError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarmlabError::io(path, e))
}

struct Setup<'c> {
    cfg: &'c ExperimentConfig,
    kernel: TransitionKernel,
    domain: LipschitzDomain,
    tol: f64,
}

impl Setup<'_> {
    fn report(&self, e: Experiment) -> LabReport {
        LabReport::new(e.name(), &self.cfg.digest(), VERSION, self.tol)
            .with_grid("R", &self.cfg.grid.big_r)
            .with_grid("K", &self.cfg.grid.k)
            .with_grid("r", &[self.cfg.grid.r])
    }

    fn region_points(&self, text: &str) -> Result<PointSet, HarmlabError> {
        let region = parse_region(text, self.domain.dim())?;
        Ok(enumerate_region(&region, Some(&self.domain), self.kernel.steps())?)
    }

    fn schedule(&self, radii: Vec<i64>, outer: &OuterSpec) -> Result<ExhaustionSchedule, HarmlabError> {
        let e = &self.cfg.exhaustion;
        let anchor = self.cfg.boundary_point()?;
        let reference = &anchor + &self.cfg.reference();
        Ok(ExhaustionSchedule::new(radii, anchor, reference)?
            .with_outer(outer.resolve("exhaustion.outer")?)
            .with_extrapolation((&e.extrapolation).into()))
    }

    fn construct(&self, radii: Vec<i64>, outer: &OuterSpec) -> Result<(HarmonicCandidate, ConvergenceLog), HarmlabError> {
        Ok(construct_harmonic(&self.schedule(radii, outer)?, &self.domain, &self.kernel, self.tol)?)
    }
}

/// Runs an experiment. Kernel and domain validation always run first.
pub fn run(e: Experiment, cfg: &ExperimentConfig) -> Result<Outcome, HarmlabError> {
    let (kernel, domain) = cfg.build()?;
    let s = Setup { cfg, kernel, domain, tol: cfg.tolerances.solver };
    let validation = validate(&s)?;
    if e == Experiment::Validate {
        return Ok(validation);
    }
    match e {
        Experiment::Validate => unreachable!(),
        Experiment::Solve => solve(&s),
        Experiment::Mc => monte_carlo(&s),
        Experiment::Construct => construct(&s),
        Experiment::Martin => martin(&s),
        Experiment::Uniq => uniq(&s),
        Experiment::Harnack => harnack(&s),
        Experiment::Carleson => carleson(&s),
        Experiment::Prop1 => prop1(&s),
        Experiment::Bhp => bhp(&s),
        Experiment::Lemma2 => lemma2(&s),
        Experiment::Decay => decay(&s),
        Experiment::Growth => growth(&s),
    }
}

fn context(s: &Setup<'_>) -> String {
    format!("y = {}", s.cfg.boundary_point().map(|y| y.to_string()).unwrap_or_default())
}

/// Ratio of the largest to the smallest value.
fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    hi / lo
}

fn band_check(report: &mut LabReport, name: &str, values: &[f64], band: f64) {
    let ratio = spread(values);
    report.check(&format!("{name} band"), ratio <= band, format!("max/min = {ratio:.4} over {values:?}, band {band}"));
}

fn validate(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let y = s.cfg.boundary_point()?;
    let extent = s.cfg.grid.big_r.iter().copied().max().unwrap_or(8).max(1);
    let window = enumerate_region(&Region::cube(y.clone(), Radius::new(extent)), None, s.kernel.steps())?;
    let v = s.kernel.validate(&window)?;
    s.domain.spot_check_lipschitz(extent)?;
    let mut report = s.report(Experiment::Validate);
    let ctx = context(s);
    report.push_constant("worst_drift", v.worst_drift, Scale::radius(extent), &ctx);
    report.push_constant("worst_normalization", v.worst_normalization, Scale::radius(extent), &ctx);
    report.push_constant("ellipticity_margin", v.ellipticity_margin, Scale::radius(extent), &ctx);
    report.check("kernel", true, format!("{} sites checked, exact = {}", v.points_checked, v.exact));
    for &r in &s.cfg.grid.big_r {
        let f = geometry::exterior_cone_fraction(&y, Radius::new(r), &s.domain, s.kernel.steps())?;
        report.push_constant("exterior_fraction", f, Scale::radius(r), &ctx);
        report.check(&format!("exterior fraction R={r}"), f > 0.0, format!("{f:.6}"));
    }
    Ok(Outcome::new(report))
}

fn boundary_data(system: &DirichletSystem, domain: &LipschitzDomain, part: BoundaryPart) -> Vec<f64> {
    system
        .boundary()
        .iter()
        .map(|z| match part {
            BoundaryPart::TopIndicator => f64::from(u8::from(domain.contains(z))),
            BoundaryPart::Bottom => f64::from(u8::from(!domain.contains(z))),
            BoundaryPart::One => 1.0,
            BoundaryPart::Height => z.height() as f64,
        })
        .collect()
}

fn solve(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let spec = &s.cfg.solve;
    let interior = s.region_points(&spec.region)?;
    let system = DirichletSystem::new(interior, &s.kernel)?;
    let data = boundary_data(&system, &s.domain, spec.data);
    let u = system.solve_data(&data, SolveMethod::Auto, s.tol)?;
    let residual = system.residual(&u, &data);
    let field = system.assemble(&u, &data);
    let mut report = s.report(Experiment::Solve);
    let ctx = spec.region.clone();
    report.push_constant("residual", residual, Scale::default(), &ctx);
    report.push_constant("interior_points", u.len() as f64, Scale::default(), &ctx);
    report.check("residual", residual <= s.tol, format!("{residual:e} <= {:e}", s.tol));
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let slack = s.tol * (1.0 + hi.abs().max(lo.abs()));
    let inside = u.iter().all(|&v| v >= lo - slack && v <= hi + slack);
    report.check("maximum principle", inside, format!("interior values within [{lo}, {hi}]"));
    let mut out = Outcome::new(report);
    out.field("field.csv", field);
    Ok(out)
}

#[derive(Serialize)]
struct McRow {
    start: LatticePoint,
    seed: u64,
    paths: usize,
    #[serde(flatten)]
    estimate: EstimatorResult,
    solver: f64,
    agrees: bool,
}

#[derive(Serialize)]
struct McSummary<'a> {
    config_digest: String,
    tool_version: &'a str,
    region: &'a str,
    target: BoundaryPart,
    estimates: Vec<McRow>,
}

fn monte_carlo(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let spec = &s.cfg.monte_carlo;
    let interior = s.region_points(&spec.region)?;
    let system = DirichletSystem::new(interior.clone(), &s.kernel)?;
    let target = match spec.target {
        BoundaryPart::TopIndicator => system.boundary().filter(|z| s.domain.contains(z)),
        BoundaryPart::Bottom => system.boundary().filter(|z| !s.domain.contains(z)),
        BoundaryPart::One => system.boundary().clone(),
        BoundaryPart::Height => {
            return Err(HarmlabError::Config {
                field: "monte_carlo.target".into(),
                message: "height data is not an exit set".into(),
            })
        }
    };
    let exact = harmonic_measure(&interior, &s.kernel, &target, s.tol)?;
    let mut report = s.report(Experiment::Mc);
    let mut rows = Vec::new();
    for (i, start) in spec.starts.iter().enumerate() {
        let start = LatticePoint::new(start);
        let seed = s.cfg.seed.wrapping_add(i as u64);
        let mut sim = SimulationConfig::new(&s.kernel, start.clone(), interior.clone(), seed, spec.paths)?;
        if let Some(cap) = spec.path_cap {
            sim = sim.with_path_cap(cap)?;
        }
        let est = estimate_exit_probability(&sim, &target)?;
        let solver = exact.get(&start)?;
        let agrees = est.agrees_with(solver, s.cfg.tolerances.half_widths);
        let ctx = format!("start = {start}");
        report.push_constant("mc_estimate", est.point_estimate, Scale::default(), &ctx);
        report.push_constant("mc_half_width", est.half_width_95, Scale::default(), &ctx);
        report.push_constant("solver_value", solver, Scale::default(), &ctx);
        report.check(
            &format!("agreement {ctx}"),
            agrees,
            format!(
                "|{:.6} - {solver:.6}| vs {} half-widths of {:.2e}; {} truncated",
                est.point_estimate, s.cfg.tolerances.half_widths, est.half_width_95, est.truncated_paths
            ),
        );
        rows.push(McRow { start, seed, paths: spec.paths, estimate: est, solver, agrees });
    }
    let summary = McSummary {
        config_digest: report.config_digest.clone(),
        tool_version: VERSION,
        region: &spec.region,
        target: spec.target,
        estimates: rows,
    };
    let summary = serde_json::to_value(summary).expect("summaries serialize");
    let mut out = Outcome::new(report);
    out.json("est.json", summary);
    Ok(out)
}

fn construct(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let e = &s.cfg.exhaustion;
    let (h, log) = s.construct(e.radii.clone(), &e.outer)?;
    let check = h.check(&s.domain, &s.kernel)?;
    let mut report = s.report(Experiment::Construct).with_grid("radii", &e.radii);
    let ctx = context(s);
    for (r, d) in e.radii.iter().skip(1).zip(&log.deviations) {
        report.push_constant("deviation", *d, Scale::radius(*r), &ctx);
    }
    report.push_constant("max_residual", check.max_residual, Scale::radius(*e.radii.last().unwrap()), &ctx);
    let harmonic_tol = if h.extrapolated { s.tol * 10.0 } else { s.tol };
    report.check(
        "candidate",
        check.passes(harmonic_tol),
        format!(
            "min interior {:e}, max on ∂C {:e}, residual {:e} on {} points",
            check.min_interior, check.max_on_domain_boundary, check.max_residual, check.points_checked
        ),
    );
    if let (Some(first), Some(last)) = (log.deviations.first(), log.deviations.last()) {
        report.check("stabilization", last <= first, format!("deviations {:?}", log.deviations));
    }
    let mut out = Outcome::new(report);
    out.field("h.csv", h.field);
    out.json("conv.json", &log);
    Ok(out)
}

fn martin(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let spec = &s.cfg.martin;
    let e = &s.cfg.exhaustion;
    let anchor = s.cfg.boundary_point()?;
    let x0 = &anchor + &s.cfg.reference();
    let (h, _) = s.construct(e.radii.clone(), &e.outer)?;
    let inner = Region::ball(anchor.clone(), Radius::new(spec.inner));
    let mut report = s.report(Experiment::Martin).with_grid("n", &spec.scales);
    for dir in &spec.directions {
        if dir.len() != s.domain.dim() {
            return Err(HarmlabError::Config {
                field: "martin.directions".into(),
                message: format!("{dir:?} does not have dimension {}", s.domain.dim()),
            });
        }
        let dir = LatticePoint::new(dir);
        let ctx = format!("direction {dir}");
        let mut devs = Vec::new();
        for &n in &spec.scales {
            let y = &anchor + &dir.scaled(n);
            let window = martin_window(&y, &anchor);
            let k = martin_field(&y, &window, &s.domain, &s.kernel, &x0, s.tol)?;
            let (dev, witness) = martin_deviation(&k, |x| h.value(x).map_err(Error::from), &inner, &s.domain)?;
            report.push_constant("martin_deviation", dev, Scale::radius(n), &ctx);
            report.witnesses.push(harmlab_core::report::Witness {
                constant: "martin_deviation".into(),
                scale: Scale::radius(n),
                context: ctx.clone(),
                column: Some(y),
                partner: None,
                point: Some(witness),
            });
            devs.push(dev);
        }
        let decreasing = devs.windows(2).all(|w| w[1] < w[0]);
        report.check(&format!("collapse {ctx}"), decreasing, format!("deviations {devs:?}"));
    }
    Ok(Outcome::new(report))
}

fn uniq(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let e = &s.cfg.exhaustion;
    let anchor = s.cfg.boundary_point()?;
    let x0 = &anchor + &s.cfg.reference();
    let inner = Region::ball(anchor, Radius::new(e.inner));
    let doubled: Vec<i64> = e.radii.iter().map(|r| 2 * r).collect();
    let mut report = s.report(Experiment::Uniq).with_grid("radii", &e.radii);
    let mut devs = Vec::new();
    for radii in [e.radii.clone(), doubled] {
        let big = *radii.last().unwrap();
        let (a, _) = s.construct(radii.clone(), &e.outer)?;
        let (b, _) = s.construct(radii, &e.compare_outer)?;
        let u = uniqueness_check(&[a, b], &inner, &s.domain, &x0)?;
        report.push_constant("disagreement", u.max_deviation, Scale::radius(big), "outer vs compare_outer");
        report.witnesses.push(harmlab_core::report::Witness {
            constant: "disagreement".into(),
            scale: Scale::radius(big),
            context: "outer vs compare_outer".into(),
            column: None,
            partner: None,
            point: u.witness.clone(),
        });
        devs.push((big, u.max_deviation));
    }
    let agreement = s.cfg.tolerances.agreement;
    report.check(
        "agreement",
        devs[0].1 <= agreement,
        format!("{:e} at R = {} (limit {agreement:e})", devs[0].1, devs[0].0),
    );
    report.check("shrinks", devs[1].1 < devs[0].1, format!("{:e} at R = {}", devs[1].1, devs[1].0));
    Ok(Outcome::new(report))
}

fn harnack(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let y = s.cfg.boundary_point()?;
    let mut report = s.report(Experiment::Harnack);
    let ctx = "whole lattice";
    let mut values = Vec::new();
    for &r in &s.cfg.grid.big_r {
        let m = lab::harnack_constant(&y, Radius::new(r), &s.kernel, s.tol)?;
        values.push(m.value);
        report.push_measurement("harnack", &m, Scale::radius(r), ctx);
    }
    band_check(&mut report, "harnack", &values, s.cfg.tolerances.band);
    let window = enumerate_region(&Region::cube(y, Radius::new(4)), None, s.kernel.steps())?;
    let local = lab::local_harnack_constant(&window, &s.kernel, s.tol)?;
    report.push_measurement("local_harnack", &local.measurement, Scale::radius(4), "cube");
    report.check(
        "local harnack bound",
        local.within_bound(),
        format!("{:.4} <= 1/alpha = {}", local.measurement.value, local.bound),
    );
    Ok(Outcome::new(report))
}

fn carleson(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let y = s.cfg.boundary_point()?;
    let mut report = s.report(Experiment::Carleson);
    let ctx = context(s);
    let mut values = Vec::new();
    for &r in &s.cfg.grid.big_r {
        let m = lab::carleson_constant(&y, r, &s.domain, &s.kernel, s.tol)?;
        values.push(m.value);
        report.push_measurement("carleson", &m, Scale::radius(r), &ctx);
    }
    band_check(&mut report, "carleson", &values, s.cfg.tolerances.band);
    Ok(Outcome::new(report))
}

fn prop1(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let y = s.cfg.boundary_point()?;
    let mut report = s.report(Experiment::Prop1);
    let ctx = context(s);
    let limit = s.cfg.tolerances.contraction;
    let mut values = Vec::new();
    for &r in &s.cfg.grid.big_r {
        let m = lab::prop1_contraction(&y, r, &s.domain, &s.kernel, s.tol)?;
        report.check(&format!("contraction R={r}"), m.value < limit, format!("{:.4} < {limit}, margin {:.4}", m.value, 1.0 - m.value));
        values.push(m.value);
        report.push_measurement("contraction", &m, Scale::radius(r), &ctx);
    }
    band_check(&mut report, "contraction", &values, s.cfg.tolerances.band);
    Ok(Outcome::new(report))
}

fn bhp(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let y = s.cfg.boundary_point()?;
    let k = s.cfg.grid.bhp_k;
    let mut report = s.report(Experiment::Bhp).with_grid("bhp_K", &[k]);
    let ctx = context(s);
    let mut values = Vec::new();
    for &r in &s.cfg.grid.big_r {
        let m = lab::boundary_harnack_constant(&y, r, k, &s.domain, &s.kernel, s.tol)?;
        report.check(&format!("finite R={r}"), m.value.is_finite(), format!("{}", m.value));
        values.push(m.value);
        report.push_measurement("boundary_harnack", &m, Scale { big_r: Some(r), r: None, k: Some(k) }, &ctx);
    }
    band_check(&mut report, "boundary_harnack", &values, s.cfg.tolerances.band);
    Ok(Outcome::new(report))
}

fn lemma2(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let y = s.cfg.boundary_point()?;
    let r = s.cfg.grid.r;
    let mut report = s.report(Experiment::Lemma2);
    let ctx = context(s);
    match lab::lemma2_onset(&y, r, &s.domain, &s.kernel, &s.cfg.grid.k, s.tol) {
        Ok(table) => {
            for row in &table.rows {
                let scale = Scale { big_r: None, r: Some(r), k: Some(row.k) };
                report.push_constant("min_ratio", row.min_ratio, scale, &ctx);
                report.witnesses.push(harmlab_core::report::Witness {
                    constant: "min_ratio".into(),
                    scale,
                    context: ctx.clone(),
                    column: None,
                    partner: None,
                    point: Some(row.witness.clone()),
                });
            }
            report.push_constant("onset", table.onset as f64, Scale { big_r: None, r: Some(r), k: None }, &ctx);
            report.check("onset", true, format!("K = {}", table.onset));
            let (first, last) = (table.rows[0].min_ratio, table.rows[table.rows.len() - 1].min_ratio);
            report.check("upward trend", last >= first, format!("{first:.4} -> {last:.4}"));
        }
        Err(Error::OnsetNotFound(ratios)) => {
            report.check("onset", false, format!("no K in {:?} reaches 1: {ratios:?}", s.cfg.grid.k));
        }
        Err(e) => return Err(e.into()),
    }
    Ok(Outcome::new(report))
}

/// Smallest scale at which the boundary decay profile is fitted: below it
/// the inner ball has too few distance levels.
pub const DECAY_MIN_SCALE: i64 = 8;

fn decay(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let y = s.cfg.boundary_point()?;
    let k = s.cfg.grid.bhp_k;
    let mut report = s.report(Experiment::Decay);
    let ctx = context(s);
    for &r in s.cfg.grid.big_r.iter().filter(|&&r| r >= DECAY_MIN_SCALE) {
        let p = lab::boundary_decay_profile(&y, r, k, &s.domain, &s.kernel, DecayTarget::Top, s.tol)?;
        let scale = Scale { big_r: None, r: Some(r), k: Some(k) };
        report.push_constant("beta", p.beta, scale, &ctx);
        report.push_constant("floor", p.floor, scale, &ctx);
        report.check(&format!("power-law floor r={r}"), p.floor > 0.0, format!("beta {:.4}, floor {:.4e}", p.beta, p.floor));
    }
    let lat = lab::lateral_decay(&y, s.cfg.grid.r, &s.cfg.grid.k, &s.domain, &s.kernel, s.tol)?;
    for &(kk, v) in &lat.rows {
        report.push_constant("lateral_max", v, Scale { big_r: None, r: Some(s.cfg.grid.r), k: Some(kk) }, &ctx);
    }
    report.push_constant("lateral_slope", lat.fit.slope, Scale { big_r: None, r: Some(s.cfg.grid.r), k: None }, &ctx);
    let limit = s.cfg.tolerances.lateral_slope;
    report.check("lateral slope", lat.fit.slope < 0.0, format!("{:.4}", lat.fit.slope));
    report.check(
        "lateral segments",
        lat.segment_slopes.iter().all(|&v| v <= limit),
        format!("{:?} <= {limit}", lat.segment_slopes),
    );
    Ok(Outcome::new(report))
}

fn growth(s: &Setup<'_>) -> Result<Outcome, HarmlabError> {
    let y = s.cfg.boundary_point()?;
    let mut report = s.report(Experiment::Growth);
    let ctx = context(s);
    for &r in &s.cfg.grid.big_r {
        let g = lab::interior_growth_exponent(&y, r, &s.domain, &s.kernel, s.tol)?;
        report.push_constant("gamma", g.gamma, Scale::radius(r), &ctx);
        report.push_constant("growth_constant", g.constant, Scale::radius(r), &ctx);
        report.check(
            &format!("finite R={r}"),
            g.gamma.is_finite() && g.constant.is_finite(),
            format!("gamma {:.4}, C {:.4}", g.gamma, g.constant),
        );
    }
    Ok(Outcome::new(report))
}

/// Parses a comma-separated start point for the command line.
pub fn parse_start(text: &str, dim: usize) -> Result<Vec<i64>, HarmlabError> {
    parse_point(text, dim)
        .map(|p| p.coords().to_vec())
        .map_err(|message| HarmlabError::Config { field: "start".into(), message })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!(
            r#"{{"kernel": {{"kind": "srw"}}, "domain": {{"dimension": 2, "profile": {{"kind": "zero"}}}}{extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("lab".parse::<Experiment>().is_err());
    }

    #[test]
    fn validate_reports_the_kernel() {
        let out = run(Experiment::Validate, &config(r#", "grid": {"R": [4, 8]}"#)).unwrap();
        assert!(out.passed());
        assert_eq!(out.report.values_of("worst_drift", "y = (0,0)"), [0.0]);
    }

    #[test]
    fn drifting_kernel_names_site_and_drift() {
        let cfg = ExperimentConfig::from_json(
            r#"{"kernel": {"kind": "homogeneous", "steps": [[1,0],[0,1],[-1,0],[0,-1]], "weights": ["3/10","1/4","1/5","1/4"]},
                "domain": {"dimension": 2, "profile": {"kind": "zero"}}}"#,
        )
        .unwrap();
        let e = run(Experiment::Harnack, &cfg).err().unwrap();
        let text = e.to_string();
        assert!(text.contains("centering violated at (") && text.contains("drift ["), "{text}");
        let HarmlabError::Core(Error::InvalidKernel(v)) = e else { panic!("{text}") };
        assert!((v.drift[0] - 0.1).abs() < 1e-15 && v.drift[1] == 0.0);
    }

    #[test]
    fn solve_top_indicator_is_bounded() {
        let mut cfg = config("");
        cfg.solve.region = "ball:y=0,R=6".into();
        let out = run(Experiment::Solve, &cfg).unwrap();
        assert!(out.passed(), "{:?}", out.failed_checks());
        assert!(out.artifact("field.csv").is_some());
    }

    #[test]
    fn lemma2_without_onset_fails_its_check() {
        let mut cfg = config("");
        cfg.grid.k = vec![2];
        cfg.grid.r = 4;
        let out = run(Experiment::Lemma2, &cfg).unwrap();
        // K = 2 is already enough on the half-plane.
        assert!(out.passed());
        let y = LatticePoint::origin(2);
        let ratio = lab::lemma2_onset(&y, 4, &LipschitzDomain::half_space(2), &TransitionKernel::simple(2), &[2], 1e-10)
            .unwrap()
            .rows[0]
            .min_ratio;
        assert_eq!(out.report.values_of("min_ratio", "y = (0,0)"), [ratio]);
    }

    #[test]
    fn mc_summary_carries_the_seed() {
        let mut cfg = config(r#", "seed": 11"#);
        cfg.monte_carlo.paths = 2000;
        cfg.monte_carlo.region = "ball:y=0,R=4".into();
        let out = run(Experiment::Mc, &cfg).unwrap();
        let Some(ArtifactBody::Json(v)) = out.artifact("est.json").map(|a| &a.body) else { panic!() };
        assert_eq!(v["estimates"][0]["seed"], 11);
        assert!(v["estimates"][0]["half_width_95"].as_f64().unwrap() > 0.0);
    }
}
