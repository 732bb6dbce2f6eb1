//! The `bundleforge` command line.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bundle::{check_bundle_axioms_with, represent_semidirect, ConcreteBundle, SemidirectBundle};
use crate::classify::{classify_bundle, ClassificationResult};
use crate::config::{ReportFormat, RunConfig};
use crate::error::{Error, Result};
use crate::group::FiniteGroup;
use crate::io::{
    parse_bundle, BundleInput, ClassificationDoc, ConcreteBundleDoc, RunReport, TpaDoc, WitnessDoc, SEMIDIRECT_KIND,
};
use crate::linalg::Tolerance;
use crate::report::{AxiomReport, Residual};
use crate::tpa::{check_axioms, check_aux_identity, generate_random, GlobalWitness, TwistedPartialAction};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const THREADS_ENV: &str = "BUNDLEFORGE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "bundleforge", version, about = "Twisted partial actions, Fell bundles and their classification")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Equality tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Relative singular value cutoff for numerical rank.
    #[arg(long = "rank-tol", global = true)]
    pub rank_tol: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = ReportFormat::Text)]
    pub report: ReportFormat,
    /// Write the produced document here instead of embedding it in the report.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Witness document (or a generated TPA file carrying one).
    #[arg(long, global = true)]
    pub witness: Option<PathBuf>,
    #[arg(long = "max-order", global = true)]
    pub max_order: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the twisted partial action axioms of a TPA document.
    TpaValidate { file: PathBuf },
    /// Build the semidirect product bundle; concrete when --witness is given.
    BuildBundle { file: PathBuf },
    /// Run the bundle axiom suite on a concrete bundle or a TPA document.
    BundleCheck { file: PathBuf },
    /// Recover a twisted partial action from a concrete bundle.
    Classify { file: PathBuf },
    /// Represent, classify and compare; generates the action when no file is given.
    Roundtrip {
        file: Option<PathBuf>,
        #[command(flatten)]
        gen: GenArgs,
    },
    /// Write a random twisted partial action together with its witness.
    Generate {
        #[command(flatten)]
        gen: GenArgs,
    },
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long, default_value = "cyclic:2")]
    pub group: String,
    /// Comma-separated block sizes.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sizes: Vec<usize>,
    /// Share of blocks kept in the restriction ideal.
    #[arg(long, default_value_t = 1.0)]
    pub fraction: f64,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::TpaValidate { .. } => "tpa-validate",
            Command::BuildBundle { .. } => "build-bundle",
            Command::BundleCheck { .. } => "bundle-check",
            Command::Classify { .. } => "classify",
            Command::Roundtrip { .. } => "roundtrip",
            Command::Generate { .. } => "generate",
        }
    }
}

impl GlobalArgs {
    pub fn config(&self) -> RunConfig {
        let mut cfg = RunConfig { seed: self.seed, report: self.report, ..RunConfig::default() };
        if let Some(t) = self.tol {
            cfg.eps_eq = t;
        }
        if let Some(t) = self.rank_tol {
            cfg.eps_rank = t;
        }
        if let Some(m) = self.max_order {
            cfg.max_group_order = m;
        }
        cfg
    }
}

/// Outcome of a command: the report plus the exit code it implies.
pub struct Outcome {
    pub report: RunReport,
    pub code: i32,
}

impl Outcome {
    pub fn render(&self) -> String {
        match self.report.config.report {
            ReportFormat::Json => self.report.to_json(),
            ReportFormat::Text => self.report.to_text(),
        }
    }
}

pub fn exit_code_for(e: &Error) -> i32 {
    if e.root().is_input_error() {
        EXIT_INPUT
    } else {
        EXIT_FAIL
    }
}

/// Runs one command. Errors are folded into the report, never panics on
/// bad input.
pub fn run(cli: &Cli) -> Outcome {
    let cfg = cli.global.config();
    let mut report = RunReport::new(cli.command.name(), &cfg);
    let result = cfg.tolerance().and_then(|tol| dispatch(cli, &cfg, &tol, &mut report));
    let code = match result {
        Ok(()) if report.passed => EXIT_PASS,
        Ok(()) => EXIT_FAIL,
        Err(e) => {
            report.fail_with(&e);
            exit_code_for(&e)
        }
    };
    Outcome { report, code }
}

fn dispatch(cli: &Cli, cfg: &RunConfig, tol: &Tolerance, report: &mut RunReport) -> Result<()> {
    let out = cli.global.out.as_deref();
    match &cli.command {
        Command::TpaValidate { file } => {
            let (tpa, _) = load_tpa(file, cfg, tol)?;
            report.add("tpa", tpa_report(&tpa, tol));
            Ok(())
        }
        Command::BuildBundle { file } => {
            let (tpa, _) = load_tpa(file, cfg, tol)?;
            match &cli.global.witness {
                Some(w) => {
                    let witness = load_witness(w, tol)?;
                    let bundle = represent_semidirect(&tpa, &witness, tol)?;
                    report.add("bundle", check_bundle_axioms_with(&bundle, tol, &cfg.bundle_check()));
                    emit(report, out, &ConcreteBundleDoc::from_bundle(&bundle))
                }
                None => {
                    let semidirect = SemidirectBundle::new(tpa.clone());
                    report.add("bundle", check_bundle_axioms_with(&semidirect, tol, &cfg.bundle_check()));
                    let mut doc = TpaDoc::from_action(&tpa, None);
                    doc.kind = Some(SEMIDIRECT_KIND.into());
                    emit(report, out, &doc)
                }
            }
        }
        Command::BundleCheck { file } => {
            let text = read(file)?;
            match parse_bundle(&text, tol)? {
                BundleInput::Concrete(b) => {
                    cfg.check_group(b.group_ref())?;
                    report.add("bundle", check_bundle_axioms_with(&b, tol, &cfg.bundle_check()));
                }
                BundleInput::Semidirect(tpa) => {
                    cfg.check_group(tpa.group())?;
                    report.add("bundle", check_bundle_axioms_with(&SemidirectBundle::new(tpa), tol, &cfg.bundle_check()));
                }
            }
            Ok(())
        }
        Command::Classify { file } => {
            let bundle = load_concrete(file, cfg, tol)?;
            let result = classify_bundle(&bundle, &cfg.classify())?;
            add_classification(report, &result);
            emit(report, out, &ClassificationDoc::from_result(&result))
        }
        Command::Roundtrip { file, gen } => {
            let (tpa, witness) = match file {
                Some(f) => {
                    let (tpa, embedded) = load_tpa(f, cfg, tol)?;
                    let witness = match &cli.global.witness {
                        Some(w) => load_witness(w, tol)?,
                        None => embedded.ok_or_else(|| {
                            Error::Document("roundtrip needs a witness: embed one or pass --witness".into())
                        })?,
                    };
                    (tpa, witness)
                }
                None => generate(gen, cfg, tol)?,
            };
            report.add("input-tpa", tpa_report(&tpa, tol));
            let bundle = represent_semidirect(&tpa, &witness, tol)?;
            let result = classify_bundle(&bundle, &cfg.classify())?;
            add_classification(report, &result);
            report.add("roundtrip", compare(&tpa, &result));
            emit(report, out, &ClassificationDoc::from_result(&result))
        }
        Command::Generate { gen } => {
            let (tpa, witness) = generate(gen, cfg, tol)?;
            report.add("tpa", tpa_report(&tpa, tol));
            if !report.passed {
                return Err(Error::Document("generated action failed its own validation; nothing written".into()));
            }
            emit(report, out, &TpaDoc::from_action(&tpa, Some(&witness)))
        }
    }
}

fn tpa_report(tpa: &TwistedPartialAction, tol: &Tolerance) -> AxiomReport {
    let mut r = check_axioms(tpa, tol);
    r.extend_prefixed("lemma", check_aux_identity(tpa, tol));
    r
}

fn add_classification(report: &mut RunReport, result: &ClassificationResult) {
    report.add("tpa", result.tpa_report.clone());
    report.add("bundle", result.bundle_report.clone());
    report.add("isomorphism", result.iso_report.clone());
}

/// Gauge-invariant data of the recovered action against the input: the
/// block sizes of the unit fiber and the dimension of every ideal.
fn compare(input: &TwistedPartialAction, result: &ClassificationResult) -> AxiomReport {
    let mut report = AxiomReport::new();
    let mut a: Vec<usize> = input.structure().sizes().to_vec();
    let mut b: Vec<usize> = result.action.structure().sizes().to_vec();
    a.sort_unstable();
    b.sort_unstable();
    let mut sizes = Residual::new();
    if a != b {
        sizes.break_with(format!("block sizes {a:?} recovered as {b:?}"), &[]);
    }
    report.insert("block-sizes", sizes.outcome(0.5));
    let mut dims = Residual::new();
    for t in input.group().elements() {
        let (x, y) = (input.ideal(t).dim(), result.action.ideal(t).dim());
        dims.record(x.abs_diff(y) as f64, &[("t", t)]);
    }
    report.insert("ideal-dimensions", dims.outcome(0.5));
    report
}

fn generate(gen: &GenArgs, cfg: &RunConfig, tol: &Tolerance) -> Result<(TwistedPartialAction, GlobalWitness)> {
    let group = FiniteGroup::from_preset(&gen.group)?;
    cfg.check_group(&group)?;
    generate_random(&group, &gen.sizes, gen.fraction, cfg.seed, tol)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

fn load_tpa(path: &Path, cfg: &RunConfig, tol: &Tolerance) -> Result<(TwistedPartialAction, Option<GlobalWitness>)> {
    let doc: TpaDoc = serde_json::from_str(&read(path)?)?;
    cfg.check_group(&doc.group.to_group()?)?;
    doc.to_action(tol)
}

/// A witness document, or the `witness` field of a TPA document.
fn load_witness(path: &Path, tol: &Tolerance) -> Result<GlobalWitness> {
    let value: serde_json::Value = serde_json::from_str(&read(path)?)?;
    let value = match value.get("witness") {
        Some(w) => w.clone(),
        None => value,
    };
    let doc: WitnessDoc = serde_json::from_value(value)?;
    doc.to_witness(tol)
}

fn load_concrete(path: &Path, cfg: &RunConfig, tol: &Tolerance) -> Result<ConcreteBundle> {
    let doc: ConcreteBundleDoc = serde_json::from_str(&read(path)?)?;
    cfg.check_group(&doc.group.to_group()?)?;
    doc.to_bundle(tol)
}

fn emit<T: serde::Serialize>(report: &mut RunReport, out: Option<&Path>, doc: &T) -> Result<()> {
    let value = serde_json::to_value(doc)?;
    match out {
        Some(path) => {
            if report.passed {
                let mut text = serde_json::to_string_pretty(&value)?;
                text.push('\n');
                std::fs::write(path, text).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
            }
        }
        None => report.result = Some(value),
    }
    Ok(())
}

/// Sizes the global rayon pool from `BUNDLEFORGE_THREADS`.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Document(format!("{THREADS_ENV} must be a positive integer, got \"{v}\"")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Document(format!("thread pool: {e}")))
}
