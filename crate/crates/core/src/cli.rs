//! Command-line front end. Exit codes: 0 success, 1 expectation mismatch,
//! 2 input error, 3 resource abort.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::forcing::{EvalError, EvalOptions, EvalStats, Evaluator};
use crate::model::{Model, ModelError, BUILTIN_MODELS};
use crate::poset::PosetError;
use crate::verify::{
    self, render_truth_value, Pigeonhole, Report, SearchBounds, Status, SuiteOptions, Verdict,
    VerifyError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "toposlab", version, about = "Forcing in finite presheaf topoi over posets")]
pub struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the set of stages forcing a sentence.
    Eval {
        /// Model file, or the name of a built-in model.
        #[arg(short, long)]
        model: String,
        /// Sentence text.
        #[arg(short = 'f', long = "formula", conflicts_with = "formula_file")]
        formula: Option<String>,
        /// File holding the sentence.
        #[arg(long)]
        formula_file: Option<PathBuf>,
        /// Expand KFin into its higher-order definition.
        #[arg(long)]
        strict_kfin: bool,
    },
    /// Run one named check on a model; fails if its verdict is unexpected.
    Check {
        #[arg(value_enum)]
        scenario: CheckKind,
        /// Model file, or the name of a built-in model.
        #[arg(short, long)]
        model: String,
        /// Base sort the check quantifies over.
        #[arg(long, default_value = "B")]
        sort: String,
    },
    /// Run every scenario of a suite.
    Suite {
        name: String,
        /// Expand KFin into its higher-order definition.
        #[arg(long)]
        strict_kfin: bool,
        /// Skip instances on posets with more elements.
        #[arg(long, default_value_t = 4)]
        max_poset: usize,
    },
    /// Look for small models where a sentence is not forced everywhere.
    Search {
        /// File holding the sentence.
        #[arg(short = 'f', long = "formula-file")]
        formula_file: PathBuf,
        /// Largest poset to enumerate.
        #[arg(long)]
        max_poset: usize,
        /// Largest fiber of the enumerated presheaves.
        #[arg(long, default_value_t = 2)]
        max_fiber: usize,
        /// Stop at the first countermodel.
        #[arg(long)]
        first: bool,
    },
    /// Print a built-in model in the model file format.
    Show { name: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Theorem1,
    Theorem2,
    Theorem3,
    Theorem3Dual,
    Section6,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        let resource = match self {
            CliError::Input(_) => false,
            CliError::Model(ModelError::Poset(PosetError::CapExceeded { .. })) => true,
            CliError::Model(_) => false,
            CliError::Verify(e) => e.is_resource(),
            CliError::Eval(e) => e.is_resource(),
        };
        if resource {
            EXIT_RESOURCE
        } else {
            EXIT_INPUT
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_model(spec: &str) -> Result<Model, CliError> {
    let path = Path::new(spec);
    if !path.exists() && BUILTIN_MODELS.contains(&spec) {
        return Ok(Model::builtin(spec)?);
    }
    Ok(Model::parse(&read(path)?)?)
}

fn json<T: Serialize>(out: &mut impl Write, v: &T) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    model: &'a str,
    sentence: &'a str,
    truth_value: Vec<String>,
    top: bool,
    bottom: bool,
    stats: EvalStats,
}

fn run(cli: Cli, out: &mut impl Write) -> Result<i32, CliError> {
    let opts = EvalOptions::from_env();
    let io = |e: std::io::Error| CliError::Input(e.to_string());
    match cli.command {
        Command::Eval {
            model,
            formula,
            formula_file,
            strict_kfin,
        } => {
            let text = match (formula, formula_file) {
                (Some(t), None) => t,
                (None, Some(p)) => read(&p)?,
                _ => return Err(CliError::Input("give -f TEXT or --formula-file FILE".into())),
            };
            let m = load_model(&model)?;
            let opts = if strict_kfin { opts.strict() } else { opts };
            let mut ev = Evaluator::new(&m, opts);
            let tv = ev.evaluate(&text)?;
            match cli.format {
                Format::Text => writeln!(out, "{}", render_truth_value(&tv)).map_err(io)?,
                Format::Json => json(
                    out,
                    &EvalOutput {
                        model: &m.name,
                        sentence: text.trim(),
                        truth_value: tv.stage_names(),
                        top: tv.is_top(),
                        bottom: tv.is_bottom(),
                        stats: ev.stats(),
                    },
                )
                .map_err(io)?,
            }
            Ok(EXIT_OK)
        }
        Command::Check {
            scenario,
            model,
            sort,
        } => {
            let m = load_model(&model)?;
            let reports: Vec<Report> = match scenario {
                CheckKind::Theorem1 => vec![verify::check_theorem1(&m, &sort, opts)?],
                CheckKind::Theorem2 => vec![verify::check_theorem2(&m, &sort, opts)?],
                CheckKind::Theorem3 => {
                    vec![verify::check_theorem3(&m, &sort, Pigeonhole::Weak, opts)?]
                }
                CheckKind::Theorem3Dual => {
                    vec![verify::check_theorem3(&m, &sort, Pigeonhole::WeakDual, opts)?]
                }
                CheckKind::Section6 => {
                    let s = verify::check_section6(opts)?;
                    if !s.passed() {
                        print_reports(out, cli.format, &s.reports).map_err(io)?;
                        return Ok(EXIT_MISMATCH);
                    }
                    s.reports
                }
            };
            print_reports(out, cli.format, &reports).map_err(io)?;
            let ok = reports.iter().all(|r| r.verdict == Verdict::InternallyValid);
            Ok(if ok { EXIT_OK } else { EXIT_MISMATCH })
        }
        Command::Suite {
            name,
            strict_kfin,
            max_poset,
        } => {
            let outcomes = verify::run_suite(
                &name,
                &SuiteOptions {
                    strict_kfin,
                    max_poset,
                    eval: opts,
                },
            )?;
            match cli.format {
                Format::Json => json(out, &outcomes).map_err(io)?,
                Format::Text => {
                    for o in &outcomes {
                        let tag = match o.status {
                            Status::Pass => "PASS",
                            Status::Mismatch => "MISMATCH",
                            Status::Skipped => "SKIPPED",
                        };
                        writeln!(out, "{tag:8} {}: {}", o.scenario, o.detail).map_err(io)?;
                        for s in &o.skipped {
                            writeln!(out, "SKIPPED  {s}").map_err(io)?;
                        }
                        if o.status == Status::Mismatch {
                            for r in &o.reports {
                                writeln!(out, "{r}").map_err(io)?;
                            }
                        }
                    }
                }
            }
            let bad = outcomes.iter().any(|o| o.status == Status::Mismatch);
            Ok(if bad { EXIT_MISMATCH } else { EXIT_OK })
        }
        Command::Search {
            formula_file,
            max_poset,
            max_fiber,
            first,
        } => {
            let text = read(&formula_file)?;
            let summary = verify::search_counterexample(
                text.trim(),
                SearchBounds {
                    max_poset,
                    max_fiber,
                    first,
                },
                opts,
            )?;
            match cli.format {
                Format::Json => json(out, &summary).map_err(io)?,
                Format::Text => {
                    for r in &summary.refuted {
                        writeln!(out, "{r}").map_err(io)?;
                    }
                    writeln!(
                        out,
                        "scanned {} models, {} refuted",
                        summary.models_scanned,
                        summary.refuted.len()
                    )
                    .map_err(io)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Show { name } => {
            let m = Model::builtin(&name)?;
            write!(out, "{}", m.to_text()).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

fn print_reports(out: &mut impl Write, format: Format, reports: &[Report]) -> std::io::Result<()> {
    match format {
        Format::Json => json(out, &reports),
        Format::Text => reports.iter().try_for_each(|r| writeln!(out, "{r}")),
    }
}

/// Parses `args`, runs the command writing to `out`, and returns the exit
/// code. Errors go to standard error.
pub fn main_with<I, T>(args: I, out: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.jobs {
        // Only the first configuration in a process takes effect.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match run(cli, out) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (i32, String) {
        let mut out = Vec::new();
        let code = main_with(std::iter::once("toposlab").chain(args.iter().copied()), &mut out);
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn eval_lem_on_two_chain() {
        let (code, out) = run_args(&["eval", "-m", "chain2", "-f", "forall u:Omega. u \\/ ~u"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "{bot}");
        let (_, out) = run_args(&["eval", "-m", "chain2", "-f", "true"]);
        assert_eq!(out.trim(), "{bot, top} TOP");
        let (_, out) = run_args(&["eval", "-m", "chain2", "-f", "false"]);
        assert_eq!(out.trim(), "{} BOTTOM");
    }

    #[test]
    fn input_errors_exit_2() {
        assert_eq!(run_args(&["eval", "-m", "chain2", "-f", "forall x:"]).0, 2);
        assert_eq!(run_args(&["eval", "-m", "chain2", "-f", "forall x:Q. true"]).0, 2);
        assert_eq!(run_args(&["eval", "-m", "/nonexistent/model"]).0, 2);
        assert_eq!(run_args(&["suite", "nonsense"]).0, 2);
        assert_eq!(run_args(&["frobnicate"]).0, 2);
    }

    #[test]
    fn show_round_trips() {
        let (code, text) = run_args(&["show", "bowtie4"]);
        assert_eq!(code, 0);
        let m = Model::parse(&text).unwrap();
        assert_eq!(m.sort("A"), Model::builtin("bowtie4").unwrap().sort("A"));
    }

    #[test]
    fn json_is_deterministic() {
        let args = ["--format", "json", "eval", "-m", "wedge3", "-f", "forall u:Omega. u \\/ ~u"];
        let (_, a) = run_args(&args);
        let (_, b) = run_args(&args);
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["truth_value"], serde_json::json!(["a", "b"]));
    }
}
