use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use harmlab::config::{BoundaryPart, ExperimentConfig, ExtrapolationSpec, OuterSpec, RationalSpec};
use harmlab::experiments::{self, write_json, Experiment, Outcome};
use harmlab::HarmlabError;

/// Discrete potential theory lab for centered elliptic random walks killed
/// outside Lipschitz domains.
#[derive(Parser)]
#[command(name = "harmlab", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file of the command, or output directory for `run`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Residual tolerance of the Dirichlet solves.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the kernel and domain of a configuration.
    Validate,
    /// Solve one Dirichlet problem and write the field as CSV.
    Solve {
        /// Region such as `ball:y=0,R=32` or `collar:y=(4,0),R=16,r=4`.
        #[arg(long)]
        region: Option<String>,
        #[arg(long)]
        data: Option<BoundaryPart>,
    },
    /// Monte Carlo exit probabilities checked against the solver.
    Mc {
        /// Starting point such as `3,0`; repeatable.
        #[arg(long)]
        start: Vec<String>,
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long)]
        region: Option<String>,
        #[arg(long)]
        target: Option<BoundaryPart>,
    },
    /// Build the positive harmonic function by exhaustion.
    Construct {
        #[command(flatten)]
        exhaustion: ExhaustionArgs,
        /// Convergence log (JSON); next to `--out` by default.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Martin kernels along escaping sequences against the harmonic function.
    Martin {
        #[command(flatten)]
        exhaustion: ExhaustionArgs,
        /// Escape scales `n`.
        #[arg(long, value_delimiter = ',')]
        scales: Vec<i64>,
        /// Escape direction such as `1,1`; repeatable.
        #[arg(long)]
        direction: Vec<String>,
        #[arg(long)]
        inner: Option<i64>,
    },
    /// Measured constants of the inequality lab.
    Lab {
        experiment: LabExperiment,
        /// Scale grid override such as `R=4,8,16`; repeatable.
        #[arg(long)]
        grid: Vec<String>,
    },
    /// Compare exhaustion candidates built from different outer data.
    Uniq {
        #[command(flatten)]
        exhaustion: ExhaustionArgs,
    },
    /// Run a named experiment of a configuration and write all artifacts.
    Run { config: PathBuf, experiment: String },
}

#[derive(Clone, Copy, ValueEnum)]
enum LabExperiment {
    Harnack,
    Carleson,
    Prop1,
    Bhp,
    Lemma2,
    Decay,
    Growth,
}

impl From<LabExperiment> for Experiment {
    fn from(e: LabExperiment) -> Self {
        match e {
            LabExperiment::Harnack => Experiment::Harnack,
            LabExperiment::Carleson => Experiment::Carleson,
            LabExperiment::Prop1 => Experiment::Prop1,
            LabExperiment::Bhp => Experiment::Bhp,
            LabExperiment::Lemma2 => Experiment::Lemma2,
            LabExperiment::Decay => Experiment::Decay,
            LabExperiment::Growth => Experiment::Growth,
        }
    }
}

#[derive(Args)]
struct ExhaustionArgs {
    #[arg(long, value_delimiter = ',')]
    radii: Vec<i64>,
    /// Outer data: `sphere` or `cap:<min height>` such as `cap:1/2`.
    #[arg(long)]
    outer: Option<String>,
    /// Richardson extrapolation of the last two radii.
    #[arg(long)]
    richardson: bool,
    /// Order of the extrapolation; estimated from the log when absent.
    #[arg(long, requires = "richardson")]
    order: Option<f64>,
}

impl ExhaustionArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) -> Result<(), HarmlabError> {
        let e = &mut cfg.exhaustion;
        if !self.radii.is_empty() {
            e.radii = self.radii.clone();
        }
        if let Some(outer) = &self.outer {
            e.outer = match outer.split_once(':') {
                None if outer == "sphere" => OuterSpec::Sphere {},
                Some(("cap", h)) => OuterSpec::Cap { min_height: RationalSpec::Text(h.to_string()) },
                _ => {
                    return Err(HarmlabError::Config {
                        field: "outer".into(),
                        message: format!("`{outer}` is neither `sphere` nor `cap:<height>`"),
                    })
                }
            };
            e.outer.resolve("outer")?;
        }
        if self.richardson {
            e.extrapolation = ExtrapolationSpec::Richardson { order: self.order };
        }
        Ok(())
    }
}

fn apply_grid(cfg: &mut ExperimentConfig, overrides: &[String]) -> Result<(), HarmlabError> {
    for o in overrides {
        let bad = |message: String| HarmlabError::Config { field: "grid".into(), message };
        let (key, values) = o.split_once('=').ok_or_else(|| bad(format!("`{o}` is not key=values")))?;
        let values: Vec<i64> = values
            .split(',')
            .map(|v| v.trim().parse().map_err(|_| bad(format!("`{v}` is not an integer"))))
            .collect::<Result<_, _>>()?;
        let single = || match values.as_slice() {
            [v] => Ok(*v),
            _ => Err(bad(format!("`{key}` takes one value"))),
        };
        match key.trim() {
            "R" => cfg.grid.big_r = values.clone(),
            "K" => cfg.grid.k = values.clone(),
            "r" => cfg.grid.r = single()?,
            "bhp_K" => cfg.grid.bhp_k = single()?,
            other => return Err(bad(format!("unknown grid key `{other}` (R, K, r, bhp_K)"))),
        }
    }
    Ok(())
}

fn load(path: Option<&Path>, g: &Global) -> Result<ExperimentConfig, HarmlabError> {
    let path = path.ok_or_else(|| HarmlabError::Config { field: "--config".into(), message: "required".into() })?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = g.seed {
        cfg.seed = seed;
    }
    if let Some(tol) = g.tol {
        cfg.tolerances.solver = tol;
    }
    Ok(cfg)
}

/// Writes the primary artifact of a command to `--out` (or its default
/// name) and the report next to it.
fn emit(outcome: &Outcome, primary: &str, out: Option<&Path>) -> Result<(), HarmlabError> {
    let path = out.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from(primary));
    match outcome.artifact(primary) {
        Some(a) => {
            outcome.write_artifact(a, &path)?;
            let report = path.with_file_name(format!("{}.json", outcome.report.experiment));
            if report != path {
                write_json(&report, &outcome.report)?;
            }
        }
        None => write_json(&path, &outcome.report)?,
    }
    Ok(())
}

fn summarize(outcome: &Outcome) {
    for c in &outcome.report.checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    if !outcome.passed() {
        let failed = serde_json::json!({
            "experiment": outcome.report.experiment,
            "config_digest": outcome.report.config_digest,
            "passed": false,
            "failed_checks": outcome.failed_checks(),
        });
        eprintln!("{failed}");
    }
}

fn execute(cli: Cli) -> Result<bool, HarmlabError> {
    let g = &cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| HarmlabError::Config {
            field: "--threads".into(),
            message: e.to_string(),
        })?;
    }
    let config = g.config.as_deref();
    let out = g.out.as_deref();
    let outcome = match &cli.command {
        Command::Run { config, experiment } => {
            let cfg = load(Some(config), g)?;
            let outcome = experiments::run(experiment.parse()?, &cfg)?;
            let dir = out.map(Path::to_path_buf).or_else(|| cfg.output_dir.as_ref().map(PathBuf::from));
            let dir = dir.unwrap_or_else(|| PathBuf::from("."));
            for p in outcome.write_all(&dir)? {
                println!("wrote {}", p.display());
            }
            summarize(&outcome);
            return Ok(outcome.passed());
        }
        Command::Validate => {
            let outcome = experiments::run(Experiment::Validate, &load(config, g)?)?;
            emit(&outcome, "validate.json", out)?;
            outcome
        }
        Command::Solve { region, data } => {
            let mut cfg = load(config, g)?;
            if let Some(r) = region {
                cfg.solve.region = r.clone();
            }
            if let Some(d) = data {
                cfg.solve.data = *d;
            }
            let outcome = experiments::run(Experiment::Solve, &cfg)?;
            emit(&outcome, "field.csv", out)?;
            outcome
        }
        Command::Mc { start, paths, region, target } => {
            let mut cfg = load(config, g)?;
            let mc = &mut cfg.monte_carlo;
            if !start.is_empty() {
                mc.starts = start.iter().map(|s| experiments::parse_start(s, cfg.domain.dimension)).collect::<Result<_, _>>()?;
            }
            if let Some(p) = paths {
                mc.paths = *p;
            }
            if let Some(r) = region {
                mc.region = r.clone();
            }
            if let Some(t) = target {
                mc.target = *t;
            }
            let outcome = experiments::run(Experiment::Mc, &cfg)?;
            emit(&outcome, "est.json", out)?;
            outcome
        }
        Command::Construct { exhaustion, log } => {
            let mut cfg = load(config, g)?;
            exhaustion.apply(&mut cfg)?;
            let outcome = experiments::run(Experiment::Construct, &cfg)?;
            emit(&outcome, "h.csv", out)?;
            let log = log.clone().unwrap_or_else(|| {
                out.map(|o| o.with_file_name("conv.json")).unwrap_or_else(|| PathBuf::from("conv.json"))
            });
            let conv = outcome.artifact("conv.json").expect("construct logs its convergence");
            outcome.write_artifact(conv, &log)?;
            outcome
        }
        Command::Martin { exhaustion, scales, direction, inner } => {
            let mut cfg = load(config, g)?;
            exhaustion.apply(&mut cfg)?;
            if !scales.is_empty() {
                cfg.martin.scales = scales.clone();
            }
            if !direction.is_empty() {
                let dim = cfg.domain.dimension;
                cfg.martin.directions =
                    direction.iter().map(|d| experiments::parse_start(d, dim)).collect::<Result<_, _>>()?;
            }
            if let Some(i) = inner {
                cfg.martin.inner = *i;
            }
            let outcome = experiments::run(Experiment::Martin, &cfg)?;
            emit(&outcome, "martin.json", out)?;
            outcome
        }
        Command::Lab { experiment, grid } => {
            let mut cfg = load(config, g)?;
            apply_grid(&mut cfg, grid)?;
            let e: Experiment = (*experiment).into();
            let outcome = experiments::run(e, &cfg)?;
            emit(&outcome, &format!("{e}.json"), out)?;
            outcome
        }
        Command::Uniq { exhaustion } => {
            let mut cfg = load(config, g)?;
            exhaustion.apply(&mut cfg)?;
            let outcome = experiments::run(Experiment::Uniq, &cfg)?;
            emit(&outcome, "uniq.json", out)?;
            outcome
        }
    };
    summarize(&outcome);
    Ok(outcome.passed())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": e.to_string() }));
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
