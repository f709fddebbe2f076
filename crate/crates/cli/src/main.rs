use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use skms::algebra::matrix_from_json;
use skms::cochain::tau_eval;
use skms::kernels::SimplexQuadratureRule;
use skms::model::{build_model, BuiltModel, ModelSpec};
use skms::report::{render, ReportFormat, VerificationReport};
use skms::sample::{random_even, rng};
use skms::suite::{all_passed, homotopy_run, perturb_sweep, run_suite_on, Suite, SuiteConfig};

#[derive(Parser, Debug)]
#[command(name = "skms", version, about = "Verification workbench for super-KMS functionals and JLO cocycles")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Tolerance applied to every check instead of the per-check defaults.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 5)]
    max_degree: usize,
    /// Fixed Dyson truncation order (adaptive when omitted).
    #[arg(long, global = true)]
    series_order: Option<usize>,
    /// Simplex quadrature: gauss:<order> or mc:<samples>.
    #[arg(long, global = true, default_value = "gauss:12")]
    quadrature: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random tuples per check.
    #[arg(long, global = true, default_value_t = 50)]
    samples: usize,
    /// Output file; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Record per-check wall time; makes reports run-dependent.
    #[arg(long, global = true)]
    wall_time: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Create or check model files.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Run a verification suite.
    Verify {
        #[arg(value_enum)]
        suite: SuiteArg,
        #[arg(long)]
        model: PathBuf,
    },
    /// Evaluate the JLO cocycle.
    Tau {
        #[command(subcommand)]
        action: TauAction,
    },
    /// Sweep the coupling of the model's perturbation.
    Perturb {
        #[command(subcommand)]
        action: PerturbAction,
    },
    /// Differentiate the perturbed cocycle in the coupling.
    Homotopy {
        #[command(subcommand)]
        action: HomotopyAction,
    },
}

#[derive(Subcommand, Debug)]
enum ModelAction {
    Gen {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        /// Seed of the supercharge draw (defaults to --seed).
        #[arg(long)]
        model_seed: Option<u64>,
        #[arg(long)]
        perturbation_seed: Option<u64>,
        #[arg(long, default_value_t = 1.0)]
        perturbation_scale: f64,
    },
    Validate {
        path: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum TauAction {
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        degree: usize,
        /// JSON array of degree + 1 matrices; seeded random even elements when omitted.
        #[arg(long)]
        args: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum PerturbAction {
    Sweep {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 10)]
        steps: usize,
    },
}

#[derive(Subcommand, Debug)]
enum HomotopyAction {
    Check {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long, default_value_t = 0.5)]
        r: f64,
        #[arg(long, default_value_t = 3)]
        tuples: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    RectangularBlock,
    RandomGraded,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SuiteArg {
    Axioms,
    Cocycle,
    Lemma34,
    Perturbation,
    Homotopy,
    Entireness,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Axioms => Suite::Axioms,
            SuiteArg::Cocycle => Suite::Cocycle,
            SuiteArg::Lemma34 => Suite::Lemma34,
            SuiteArg::Perturbation => Suite::Perturbation,
            SuiteArg::Homotopy => Suite::Homotopy,
            SuiteArg::Entireness => Suite::Entireness,
            SuiteArg::All => Suite::All,
        }
    }
}

impl Global {
    fn config(&self) -> Result<SuiteConfig> {
        Ok(SuiteConfig {
            tol: self.tol,
            max_degree: self.max_degree,
            series_order: self.series_order,
            quadrature: SimplexQuadratureRule::parse(&self.quadrature, self.seed)?,
            seed: self.seed,
            samples: self.samples,
            jobs: self.jobs,
            record_wall_time: self.wall_time,
            chain_budget: None,
        })
    }

    fn write(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn emit(&self, reports: &[VerificationReport]) -> Result<bool> {
        let format = match self.format {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        };
        self.write(&render(reports, format)?)?;
        for r in reports.iter().filter(|r| !r.passed) {
            log::warn!(
                "{} failed: residual {:e} > tolerance {:e}{}",
                r.identity_name,
                r.max_residual,
                r.tolerance,
                r.detail.as_deref().map(|d| format!(" ({d})")).unwrap_or_default()
            );
        }
        Ok(all_passed(reports))
    }
}

fn load_model(path: &Path) -> Result<BuiltModel> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = ModelSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?;
    build_model(&spec).with_context(|| format!("building {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    let g = &cli.global;
    match cli.command {
        Command::Model { action } => match action {
            ModelAction::Gen {
                kind,
                p,
                q,
                model_seed,
                perturbation_seed,
                perturbation_scale,
            } => {
                let seed = model_seed.unwrap_or(g.seed);
                let mut spec = match kind {
                    KindArg::RectangularBlock => ModelSpec::rectangular_block_seeded(p, q, seed),
                    KindArg::RandomGraded => ModelSpec::random_graded(p, q, seed),
                };
                if let Some(ps) = perturbation_seed {
                    spec = spec.with_perturbation_seed(ps, perturbation_scale);
                }
                build_model(&spec).context("generated model is invalid")?;
                g.write(&spec.to_json()?)?;
                Ok(true)
            }
            ModelAction::Validate { path } => {
                let model = load_model(&path)?;
                let summary = json!({
                    "valid": true,
                    "dim": model.system.dim(),
                    "witten_index": model.witten_index(),
                    "has_perturbation": model.has_perturbation,
                    "model_digest": model.digest,
                });
                g.write(&format!("{}\n", serde_json::to_string_pretty(&summary)?))?;
                Ok(true)
            }
        },
        Command::Verify { suite, model } => {
            let model = load_model(&model)?;
            let reports = run_suite_on(&model, suite.into(), &g.config()?)?;
            g.emit(&reports)
        }
        Command::Tau {
            action: TauAction::Eval { model, degree, args },
        } => {
            let built = load_model(&model)?;
            let sys = &built.system;
            let grading = sys.grading();
            let xs = match args {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    let value: serde_json::Value = serde_json::from_str(&text)?;
                    let Some(items) = value.as_array() else {
                        bail!("{} must hold a JSON array of matrices", path.display());
                    };
                    items
                        .iter()
                        .map(|v| Ok(grading.element(matrix_from_json(v)?)?))
                        .collect::<Result<Vec<_>>>()?
                }
                None => {
                    let mut r = rng(g.seed);
                    (0..=degree).map(|_| random_even(grading, &mut r)).collect()
                }
            };
            let value = tau_eval(sys, degree, &xs)?;
            let out = json!({
                "degree": degree,
                "value": [value.re, value.im],
                "model_digest": built.digest,
            });
            g.write(&format!("{}\n", serde_json::to_string_pretty(&out)?))?;
            Ok(true)
        }
        Command::Perturb {
            action: PerturbAction::Sweep { model, steps },
        } => {
            let model = load_model(&model)?;
            g.emit(&perturb_sweep(&model, steps, &g.config()?))
        }
        Command::Homotopy {
            action: HomotopyAction::Check { model, degree, r, tuples },
        } => {
            let model = load_model(&model)?;
            let cfg = g.config()?;
            let mut reports = if cfg.jobs > 0 {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.jobs)
                    .build()?
                    .install(|| homotopy_run(&model, r, degree, tuples, &cfg))
            } else {
                homotopy_run(&model, r, degree, tuples, &cfg)
            };
            for rep in &mut reports {
                rep.model_digest = model.digest.clone();
            }
            g.emit(&reports)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
