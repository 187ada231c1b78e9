//! Experiment configuration files.

use std::path::Path;

use harmlab_core::geometry::{AxisProfile, Rational};
use harmlab_core::harmonic::{Extrapolation, OuterData};
use harmlab_core::{LatticePoint, LipschitzDomain, LipschitzProfile, Radius, Region, StepSet, TransitionKernel, Weight};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::HarmlabError;

/// A rational written as an integer or as the string `"p/q"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RationalSpec {
    Integer(i64),
    Text(String),
}

impl RationalSpec {
    pub fn resolve(&self, field: &str) -> Result<Rational, HarmlabError> {
        match self {
            RationalSpec::Integer(n) => Ok(Rational::from_integer(*n)),
            RationalSpec::Text(s) => parse_rational(s).ok_or_else(|| invalid(field, format!("`{s}` is not a rational"))),
        }
    }
}

/// A transition weight: exact as `"p/q"`, floating point as a number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightSpec {
    Text(String),
    Number(f64),
}

impl WeightSpec {
    pub fn resolve(&self, field: &str) -> Result<Weight, HarmlabError> {
        match self {
            WeightSpec::Number(v) => Ok(Weight::Float(*v)),
            WeightSpec::Text(s) => parse_rational(s)
                .map(Weight::Exact)
                .ok_or_else(|| invalid(field, format!("`{s}` is not a rational"))),
        }
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q): (i64, i64) = (p.trim().parse().ok()?, q.trim().parse().ok()?);
            (q != 0).then(|| Rational::new(p, q))
        }
        None => s.parse().ok().map(Rational::from_integer),
    }
}

fn invalid(field: &str, message: String) -> HarmlabError {
    HarmlabError::Config { field: field.to_string(), message }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// Simple random walk in the dimension of the domain.
    Srw {},
    Homogeneous {
        steps: Vec<Vec<i64>>,
        weights: Vec<WeightSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<WeightSpec>,
    },
    /// `weights[c]` holds the weights of cell `c` of the period box, in
    /// lexicographic cell order.
    Periodic {
        steps: Vec<Vec<i64>>,
        periods: Vec<i64>,
        weights: Vec<Vec<WeightSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alpha: Option<WeightSpec>,
    },
    /// Nearest-neighbour walk with weights `∝ 1 + ε cos(ω_k · x + φ_k)`.
    Formula { epsilon: f64, frequencies: Vec<Vec<f64>>, phases: Vec<f64>, alpha: WeightSpec },
}

impl KernelSpec {
    pub fn build(&self, dim: usize) -> Result<TransitionKernel, HarmlabError> {
        let steps_of = |steps: &[Vec<i64>]| -> Result<StepSet, HarmlabError> {
            if let Some(s) = steps.iter().find(|s| s.len() != dim) {
                return Err(invalid("kernel.steps", format!("step {s:?} does not have dimension {dim}")));
            }
            StepSet::new(dim, steps.iter().map(|s| LatticePoint::new(s)).collect())
                .map_err(|e| invalid("kernel.steps", e.to_string()))
        };
        let weights_of = |ws: &[WeightSpec]| -> Result<Vec<Weight>, HarmlabError> {
            ws.iter().map(|w| w.resolve("kernel.weights")).collect()
        };
        let floor = |alpha: &Option<WeightSpec>, all: &[Weight]| -> Result<Weight, HarmlabError> {
            match alpha {
                Some(a) => a.resolve("kernel.alpha"),
                None => all
                    .iter()
                    .copied()
                    .min_by(|a, b| a.to_f64().total_cmp(&b.to_f64()))
                    .ok_or_else(|| invalid("kernel.weights", "no weights given".into())),
            }
        };
        let kernel = match self {
            KernelSpec::Srw {} => Ok(TransitionKernel::simple(dim)),
            KernelSpec::Homogeneous { steps, weights, alpha } => {
                let w = weights_of(weights)?;
                let a = floor(alpha, &w)?;
                TransitionKernel::homogeneous(steps_of(steps)?, w, a)
            }
            KernelSpec::Periodic { steps, periods, weights, alpha } => {
                let table: Vec<Vec<Weight>> = weights.iter().map(|row| weights_of(row)).collect::<Result<_, _>>()?;
                let a = floor(alpha, &table.concat())?;
                TransitionKernel::periodic(steps_of(steps)?, periods.clone(), table, a)
            }
            KernelSpec::Formula { epsilon, frequencies, phases, alpha } => TransitionKernel::modulated(
                dim,
                *epsilon,
                frequencies.clone(),
                phases.clone(),
                alpha.resolve("kernel.alpha")?,
            ),
        };
        kernel.map_err(|e| invalid("kernel", e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Zero {},
    /// `φ(x') = Σ_k f_k(x'_k)`; axis `k` has `slopes[k]` on the segments
    /// cut by `breakpoints[k]`.
    PiecewiseLinear {
        slopes: Vec<Vec<RationalSpec>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        breakpoints: Option<Vec<Vec<RationalSpec>>>,
        lipschitz_constant: f64,
    },
    Table { origin: Vec<i64>, shape: Vec<usize>, values: Vec<RationalSpec>, lipschitz_constant: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub dimension: usize,
    pub profile: ProfileSpec,
}

impl DomainSpec {
    pub fn build(&self) -> Result<LipschitzDomain, HarmlabError> {
        let d = self.dimension;
        if d == 0 {
            return Err(invalid("domain.dimension", "must be at least 1".into()));
        }
        let profile = match &self.profile {
            ProfileSpec::Zero {} => LipschitzProfile::Zero,
            ProfileSpec::PiecewiseLinear { slopes, breakpoints, lipschitz_constant } => {
                if slopes.len() != d - 1 {
                    return Err(invalid(
                        "domain.profile.slopes",
                        format!("need {} axes, got {}", d - 1, slopes.len()),
                    ));
                }
                let empty = vec![Vec::new(); slopes.len()];
                let breakpoints = breakpoints.as_ref().unwrap_or(&empty);
                if breakpoints.len() != slopes.len() {
                    return Err(invalid("domain.profile.breakpoints", "one list per axis".into()));
                }
                let axes = slopes
                    .iter()
                    .zip(breakpoints)
                    .map(|(s, b)| {
                        let s = s.iter().map(|v| v.resolve("domain.profile.slopes")).collect::<Result<_, _>>()?;
                        let b = b.iter().map(|v| v.resolve("domain.profile.breakpoints")).collect::<Result<_, _>>()?;
                        AxisProfile::new(b, s).map_err(|e| invalid("domain.profile", e.to_string()))
                    })
                    .collect::<Result<_, _>>()?;
                LipschitzProfile::PiecewiseLinear { axes, lipschitz_constant: *lipschitz_constant }
            }
            ProfileSpec::Table { origin, shape, values, lipschitz_constant } => LipschitzProfile::Table {
                origin: origin.clone(),
                shape: shape.clone(),
                values: values.iter().map(|v| v.resolve("domain.profile.values")).collect::<Result<_, _>>()?,
                lipschitz_constant: *lipschitz_constant,
            },
        };
        LipschitzDomain::new(d, profile).map_err(|e| invalid("domain.profile", e.to_string()))
    }
}

fn default_big_r() -> Vec<i64> {
    vec![4, 8, 16, 32]
}

fn default_k() -> Vec<i64> {
    vec![2, 4, 8, 16]
}

fn default_r() -> i64 {
    4
}

/// Scale grids of the lab experiments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "R", default = "default_big_r")]
    pub big_r: Vec<i64>,
    #[serde(rename = "K", default = "default_k")]
    pub k: Vec<i64>,
    /// Inner radius of collars.
    #[serde(default = "default_r")]
    pub r: i64,
    /// Collar factor of the boundary Harnack and decay experiments.
    #[serde(rename = "bhp_K", default = "default_bhp_k")]
    pub bhp_k: i64,
}

fn default_bhp_k() -> i64 {
    4
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { big_r: default_big_r(), k: default_k(), r: default_r(), bhp_k: default_bhp_k() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Residual tolerance of every Dirichlet solve.
    pub solver: f64,
    /// Allowed ratio between measurements of one constant across scales.
    pub band: f64,
    /// Largest acceptable contraction factor.
    pub contraction: f64,
    /// Largest acceptable slope of `log max v` against `K`.
    pub lateral_slope: f64,
    /// Relative agreement of exhaustion candidates.
    pub agreement: f64,
    /// Monte Carlo agreement, in 95% half-widths.
    pub half_widths: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: harmlab_core::DEFAULT_TOL,
            band: harmlab_core::lab::DEFAULT_BAND,
            contraction: 0.999,
            lateral_slope: -0.1,
            agreement: 1e-2,
            half_widths: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OuterSpec {
    Sphere {},
    Cap { min_height: RationalSpec },
}

impl OuterSpec {
    pub fn resolve(&self, field: &str) -> Result<OuterData, HarmlabError> {
        match self {
            OuterSpec::Sphere {} => Ok(OuterData::Sphere),
            OuterSpec::Cap { min_height } => Ok(OuterData::Cap { min_height: min_height.resolve(field)? }),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExtrapolationSpec {
    None {},
    Richardson {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        order: Option<f64>,
    },
}

impl From<&ExtrapolationSpec> for Extrapolation {
    fn from(e: &ExtrapolationSpec) -> Self {
        match e {
            ExtrapolationSpec::None {} => Extrapolation::None,
            ExtrapolationSpec::Richardson { order } => Extrapolation::Richardson { order: *order },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExhaustionSpec {
    pub radii: Vec<i64>,
    /// `x0 = reference_height · e_1`.
    pub reference_height: i64,
    pub outer: OuterSpec,
    pub extrapolation: ExtrapolationSpec,
    /// Outer data of the second candidate in the uniqueness check.
    pub compare_outer: OuterSpec,
    /// Radius of the ball on which candidates are compared.
    pub inner: i64,
}

impl Default for ExhaustionSpec {
    fn default() -> Self {
        ExhaustionSpec {
            radii: vec![16, 32, 64],
            reference_height: harmlab_core::harmonic::DEFAULT_REFERENCE_HEIGHT,
            outer: OuterSpec::Sphere {},
            extrapolation: ExtrapolationSpec::None {},
            compare_outer: OuterSpec::Cap { min_height: RationalSpec::Text("1/2".into()) },
            inner: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MartinSpec {
    /// Escape directions; the sources are `n · direction`.
    pub directions: Vec<Vec<i64>>,
    pub scales: Vec<i64>,
    pub inner: i64,
}

impl Default for MartinSpec {
    fn default() -> Self {
        MartinSpec { directions: vec![vec![1, 0], vec![1, 1]], scales: vec![8, 16, 32, 64], inner: 4 }
    }
}

/// Which part of a region's boundary a Dirichlet datum or exit target
/// selects.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryPart {
    /// Boundary points inside the domain.
    TopIndicator,
    /// Boundary points outside the domain.
    Bottom,
    /// The whole boundary.
    One,
    /// Data `z_1`, the height.
    Height,
}

impl std::str::FromStr for BoundaryPart {
    type Err = HarmlabError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| invalid("data", format!("unknown boundary data `{s}` (top-indicator, bottom, one, height)")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveSpec {
    pub region: String,
    pub data: BoundaryPart,
}

impl Default for SolveSpec {
    fn default() -> Self {
        SolveSpec { region: "ball:y=0,R=16".into(), data: BoundaryPart::TopIndicator }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSpec {
    /// Starting points; each one is one regression instance.
    pub starts: Vec<Vec<i64>>,
    pub paths: usize,
    pub region: String,
    pub target: BoundaryPart,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path_cap: Option<u64>,
}

impl Default for MonteCarloSpec {
    fn default() -> Self {
        MonteCarloSpec {
            starts: vec![vec![2, 0]],
            paths: 100_000,
            region: "ball:y=0,R=8".into(),
            target: BoundaryPart::TopIndicator,
            path_cap: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    pub domain: DomainSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    /// Boundary point `y` of the lab experiments; the origin by default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_point: Option<Vec<i64>>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exhaustion: ExhaustionSpec,
    #[serde(default)]
    pub martin: MartinSpec,
    #[serde(default)]
    pub monte_carlo: MonteCarloSpec,
    #[serde(default)]
    pub solve: SolveSpec,
    /// Directory receiving the artifacts of `run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarmlabError> {
        serde_json::from_str(text).map_err(HarmlabError::Parse)
    }

    pub fn load(path: &Path) -> Result<Self, HarmlabError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarmlabError::io(path, e))?;
        Self::from_json(&text)
    }

    /// SHA-256 of the canonical serialization, so that formatting changes
    /// keep the digest and overrides change it.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("configs serialize");
        format!("{:x}", Sha256::digest(bytes))
    }

    pub fn build(&self) -> Result<(TransitionKernel, LipschitzDomain), HarmlabError> {
        let domain = self.domain.build()?;
        let kernel = self.kernel.build(domain.dim())?;
        Ok((kernel, domain))
    }

    pub fn boundary_point(&self) -> Result<LatticePoint, HarmlabError> {
        match &self.boundary_point {
            None => Ok(LatticePoint::origin(self.domain.dimension)),
            Some(y) if y.len() == self.domain.dimension => Ok(LatticePoint::new(y)),
            Some(y) => Err(invalid("boundary_point", format!("{y:?} does not have dimension {}", self.domain.dimension))),
        }
    }

    pub fn reference(&self) -> LatticePoint {
        LatticePoint::unit(self.domain.dimension, 0).scaled(self.exhaustion.reference_height)
    }
}

/// Parses `kind:key=value,...` with kinds `ball`, `cube`, `collar`,
/// `slab`, center `y` (`0` for the origin or a parenthesized point such as
/// `(3,0)`), outer radius `R` and inner radius `r`.
pub fn parse_region(text: &str, dim: usize) -> Result<Region, HarmlabError> {
    let err = |m: String| invalid("region", format!("`{text}`: {m}"));
    let (kind, rest) = text.split_once(':').ok_or_else(|| err("expected kind:key=value,...".into()))?;
    let mut center = LatticePoint::origin(dim);
    let (mut outer, mut inner) = (None, None);
    for (key, value) in split_pairs(rest).map_err(err)? {
        match key {
            "y" => center = parse_point(value, dim).map_err(err)?,
            "R" => outer = Some(parse_radius(value).map_err(err)?),
            "r" => inner = Some(parse_radius(value).map_err(err)?),
            other => return Err(err(format!("unknown key `{other}`"))),
        }
    }
    let outer = outer.ok_or_else(|| err("missing R".into()))?;
    match (kind.trim(), inner) {
        ("ball", None) => Ok(Region::ball(center, outer)),
        ("cube", None) => Ok(Region::cube(center, outer)),
        ("collar", Some(r)) => Ok(Region::collar(center, outer, r)),
        ("slab", Some(r)) => Ok(Region::slab(center, outer, r)),
        ("ball" | "cube", Some(_)) => Err(err("r applies to collars and slabs only".into())),
        ("collar" | "slab", None) => Err(err("missing r".into())),
        (other, _) => Err(err(format!("unknown region kind `{other}`"))),
    }
}

fn split_pairs(s: &str) -> Result<Vec<(&str, &str)>, String> {
    let mut pairs = Vec::new();
    let (mut depth, mut start) = (0i32, 0usize);
    let bytes = s.as_bytes();
    for i in 0..=bytes.len() {
        let c = bytes.get(i).copied();
        match c {
            Some(b'(') => depth += 1,
            Some(b')') => depth -= 1,
            Some(b',') | None if depth == 0 => {
                let piece = s[start..i].trim();
                if !piece.is_empty() {
                    let (k, v) = piece.split_once('=').ok_or_else(|| format!("`{piece}` is not key=value"))?;
                    pairs.push((k.trim(), v.trim()));
                }
                start = i + 1;
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    Ok(pairs)
}

fn parse_radius(s: &str) -> Result<Radius, String> {
    let r: i64 = s.parse().map_err(|_| format!("radius `{s}` is not an integer"))?;
    Ok(Radius::new(r))
}

/// `0` is the origin; otherwise a comma-separated point, optionally in
/// parentheses.
pub fn parse_point(s: &str, dim: usize) -> Result<LatticePoint, String> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    if inner == "0" {
        return Ok(LatticePoint::origin(dim));
    }
    let coords: Vec<i64> = inner
        .split(',')
        .map(|c| c.trim().parse().map_err(|_| format!("`{s}` is not a lattice point")))
        .collect::<Result<_, _>>()?;
    if coords.len() != dim {
        return Err(format!("point `{s}` does not have dimension {dim}"));
    }
    Ok(LatticePoint::new(&coords))
}
