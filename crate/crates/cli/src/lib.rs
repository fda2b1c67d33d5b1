//! The `intbox` command line.
//!
//! Every command renders its whole output into a string first, so tests can
//! call [`execute`] directly and the binary only deals with files and exit
//! codes.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use thiserror::Error;

use intbox::absint::{analyze_program, eval_condition, AbstractState, AnalysisConfig, ProgramAnalysis};
use intbox::contractor::{BoxN, Contractor};
use intbox::instrument::instrument_program;
use intbox::lang::{free_vars, parse_condition, parse_program, NodeKind, ParseError, Program};
use intbox::optimize::{optimize_program, RewriteReport};
use intbox::oracle::{check_equivalence, check_soundness, Equivalence, OracleConfig};
use intbox::{ArithMode, Interval, Truth3};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "intbox", version, about = "Interval analysis, contraction and rewriting for a small imperative language")]
pub struct CliConfig {
    #[command(subcommand)]
    pub command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write output here instead of stdout.
    #[arg(short = 'o', long = "output", global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Clone, Debug, Args)]
pub struct Knobs {
    /// Loop-head updates joined before widening starts.
    #[arg(long, default_value_t = 2)]
    pub widening_delay: usize,
    /// Narrowing sweeps after the ascending phase.
    #[arg(long, default_value_t = 2)]
    pub narrowing_passes: usize,
    /// Extrapolate arithmetic on non-singleton operands to [-inf,+inf].
    #[arg(long)]
    pub no_interval_arith: bool,
    /// Refine conditions without forward-backward contractors.
    #[arg(long)]
    pub no_contractors: bool,
}

impl Knobs {
    pub fn analysis_config(&self) -> AnalysisConfig {
        AnalysisConfig {
            widening_delay: self.widening_delay,
            narrowing_passes: self.narrowing_passes,
            interval_arith: !self.no_interval_arith,
            use_contractors: !self.no_contractors,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the interval state before and after every statement.
    Analyze {
        input: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Propagate singletons, eliminate decided guards and fold constants.
    Optimize {
        input: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Insert interval invariants as assume statements.
    Instrument {
        input: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
    },
    /// Contract a box under a condition.
    Contract {
        /// Condition such as `x + y == 5`.
        #[arg(long)]
        constraint: String,
        /// Box such as `x:[0,10], y:[2,4]`; unlisted variables are unbounded.
        #[arg(long = "box")]
        box_: String,
        #[arg(long)]
        no_interval_arith: bool,
    },
    /// Check the analysis, optimizer and instrumentation against exhaustive
    /// execution.
    Check {
        input: PathBuf,
        #[command(flatten)]
        knobs: Knobs,
        /// Steps per execution before it is cut off.
        #[arg(long, default_value_t = intbox::oracle::DEFAULT_STEP_LIMIT)]
        step_limit: usize,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("{path}:{source}")]
    Parse { path: String, source: ParseError },
    #[error("{0}")]
    Usage(String),
}

/// Rendered output and exit code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub text: String,
    pub code: i32,
}

fn load(path: &PathBuf) -> Result<Program, CliError> {
    let display = path.display().to_string();
    let src = fs::read_to_string(path).map_err(|source| CliError::Read { path: display.clone(), source })?;
    parse_program(&src).map_err(|source| CliError::Parse { path: display, source })
}

fn state_json(s: &AbstractState) -> Value {
    Value::Object(s.env.iter().map(|(v, i)| (v.clone(), Value::String(i.to_string()))).collect())
}

fn config_json(c: &AnalysisConfig) -> Value {
    json!({
        "widening_delay": c.widening_delay,
        "narrowing_passes": c.narrowing_passes,
        "interval_arith": c.interval_arith,
        "use_contractors": c.use_contractors,
    })
}

fn report_json(r: &RewriteReport) -> Value {
    json!({
        "singletons_propagated": r.singletons_propagated,
        "guards_true": r.guards_true,
        "guards_false": r.guards_false,
        "constants_folded": r.constants_folded,
        "dead_branches_removed": r.dead_branches_removed,
        "failing_asserts": r.failing_asserts.iter().map(|s| s.to_string()).collect::<Vec<_>>(),
    })
}

fn nodes_json(analysis: &ProgramAnalysis) -> Value {
    let mut nodes = Vec::new();
    for (name, f) in &analysis.functions {
        for n in f.cfg.node_ids() {
            let before = f.result.before.get(&n);
            nodes.push(json!({
                "function": name,
                "id": n.0,
                "stmt": f.cfg.node(n).describe(),
                "before": before.map(state_json),
                "after": f.result.after.get(&n).or(before).map(state_json),
            }));
        }
    }
    Value::Array(nodes)
}

/// Reachable assertions whose condition is false in every state reaching them.
fn definite_failures(analysis: &ProgramAnalysis) -> Vec<String> {
    let mut out = Vec::new();
    let mode = analysis.config.arith_mode();
    for (name, f) in &analysis.functions {
        for n in f.cfg.node_ids() {
            let (NodeKind::Assert(c), Some(s)) = (f.cfg.node(n), f.result.before.get(&n)) else { continue };
            if !s.is_bottom() && eval_condition(c, s, mode) == Truth3::False {
                out.push(format!("{name}:{n}"));
            }
        }
    }
    out
}

fn document(path: &Path, config: &AnalysisConfig, nodes: Value, report: Value) -> Value {
    json!({ "program": path.display().to_string(), "config": config_json(config), "nodes": nodes, "report": report })
}

fn to_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn analyze(path: &PathBuf, knobs: &Knobs, format: Format) -> Result<Output, CliError> {
    let prog = load(path)?;
    let config = knobs.analysis_config();
    let analysis = analyze_program(&prog, &config);
    let failures = definite_failures(&analysis);
    let code = if failures.is_empty() { EXIT_OK } else { EXIT_VIOLATION };
    let text = match format {
        Format::Json => to_json(&document(
            path,
            &config,
            nodes_json(&analysis),
            json!({ "failing_asserts": failures }),
        )),
        Format::Text => {
            let mut out = analysis.to_string();
            for s in &failures {
                out.push_str(&format!("assertion always fails: {s}\n"));
            }
            out
        }
    };
    Ok(Output { text, code })
}

fn optimize(path: &PathBuf, knobs: &Knobs, format: Format) -> Result<Output, CliError> {
    let prog = load(path)?;
    let config = knobs.analysis_config();
    let (out, report) = optimize_program(&prog, &config);
    let code = if report.failing_asserts.is_empty() { EXIT_OK } else { EXIT_VIOLATION };
    let text = match format {
        Format::Json => {
            let mut doc = document(path, &config, nodes_json(&analyze_program(&out, &config)), report_json(&report));
            doc["output"] = Value::String(out.to_string());
            to_json(&doc)
        }
        Format::Text => format!("{out}\n// {}\n", report.to_string().replace('\n', "\n// ")),
    };
    Ok(Output { text, code })
}

fn instrument(path: &PathBuf, knobs: &Knobs, format: Format) -> Result<Output, CliError> {
    let prog = load(path)?;
    let config = knobs.analysis_config();
    let analysis = analyze_program(&prog, &config);
    let (out, points) = instrument_program(&prog, &analysis);
    let text = match format {
        Format::Json => {
            let points: Vec<Value> = points
                .iter()
                .map(|p| {
                    json!({
                        "function": p.function,
                        "node": p.node.0,
                        "kind": p.kind.to_string(),
                        "vars": p.vars,
                        "emitted": p.emitted.to_string(),
                    })
                })
                .collect();
            let mut doc = document(path, &config, nodes_json(&analysis), json!({ "points": points }));
            doc["output"] = Value::String(out.to_string());
            to_json(&doc)
        }
        Format::Text => {
            let mut s = out.to_string();
            for p in &points {
                s.push_str(&format!("// {p}\n"));
            }
            s
        }
    };
    Ok(Output { text, code: EXIT_OK })
}

fn contract(constraint: &str, box_: &str, no_interval_arith: bool, format: Format) -> Result<Output, CliError> {
    let cond = parse_condition(constraint).map_err(|e| CliError::Usage(format!("--constraint: {e}")))?;
    let mut b: BoxN = box_.parse().map_err(|e| CliError::Usage(format!("--box: {e}")))?;
    for v in free_vars(&cond) {
        if b.get(&v).is_none() {
            b.set(&v, Interval::top());
        }
    }
    let mode = if no_interval_arith { ArithMode::Extrapolate } else { ArithMode::Precise };
    let c = Contractor::with_mode(mode);
    let contracted = c.contract_condition(&cond, true, &b);
    let verdict = c.classify_condition(&cond, &b).verdict;
    let text = match format {
        Format::Text => format!("{contracted}\n"),
        Format::Json => {
            let ranges = |x: &BoxN| -> Value {
                Value::Object(x.iter().map(|(v, i)| (v.clone(), Value::String(i.to_string()))).collect::<Map<_, _>>())
            };
            to_json(&json!({
                "constraint": cond.to_string(),
                "box": ranges(&b),
                "contracted": ranges(&contracted),
                "empty": contracted.is_empty(),
                "verdict": verdict.to_string(),
            }))
        }
    };
    Ok(Output { text, code: EXIT_OK })
}

fn check(path: &PathBuf, knobs: &Knobs, step_limit: usize, format: Format) -> Result<Output, CliError> {
    let prog = load(path)?;
    let config = knobs.analysis_config();
    let oracle = OracleConfig { step_limit, ..OracleConfig::default() };
    let analysis = analyze_program(&prog, &config);
    let usage = |e: intbox::oracle::OracleError| CliError::Usage(format!("{}: {e}", path.display()));
    let violations = check_soundness(&prog, &analysis, &oracle).map_err(usage)?;
    let (optimized, _) = optimize_program(&prog, &config);
    let opt_eq = check_equivalence(&prog, &optimized, &oracle).map_err(usage)?;
    let (instrumented, _) = instrument_program(&prog, &analysis);
    let ins_eq = check_equivalence(&prog, &instrumented, &oracle).map_err(usage)?;
    let clean = violations.is_empty() && opt_eq.holds() && ins_eq.holds();
    let describe = |e: &Equivalence| match e {
        Equivalence::Equivalent { compared, skipped } => {
            format!("equivalent ({compared} executions compared, {skipped} skipped at the step limit)")
        }
        Equivalence::Different(c) => format!(
            "differs on choices {:?}: {:?} {:?} vs {:?} {:?}",
            c.choices, c.left.verdict, c.left.env, c.right.verdict, c.right.env
        ),
    };
    let text = match format {
        Format::Text => {
            let mut s = format!("soundness: {} violation(s)\n", violations.len());
            for v in &violations {
                s.push_str(&format!("  {v}\n"));
            }
            s.push_str(&format!("optimize: {}\n", describe(&opt_eq)));
            s.push_str(&format!("instrument: {}\n", describe(&ins_eq)));
            s.push_str(if clean { "clean\n" } else { "NOT clean\n" });
            s
        }
        Format::Json => to_json(&document(
            path,
            &config,
            Value::Array(Vec::new()),
            json!({
                "soundness_violations": violations.iter().map(|v| v.to_string()).collect::<Vec<_>>(),
                "optimize": describe(&opt_eq),
                "instrument": describe(&ins_eq),
                "clean": clean,
            }),
        )),
    };
    Ok(Output { text, code: if clean { EXIT_OK } else { EXIT_VIOLATION } })
}

/// Runs one command and renders its output.
pub fn execute(cli: &CliConfig) -> Result<Output, CliError> {
    match &cli.command {
        Command::Analyze { input, knobs } => analyze(input, knobs, cli.format),
        Command::Optimize { input, knobs } => optimize(input, knobs, cli.format),
        Command::Instrument { input, knobs } => instrument(input, knobs, cli.format),
        Command::Contract { constraint, box_, no_interval_arith } => {
            contract(constraint, box_, *no_interval_arith, cli.format)
        }
        Command::Check { input, knobs, step_limit } => check(input, knobs, *step_limit, cli.format),
    }
}

/// Runs one command, writes its output and returns the exit code.
pub fn run(cli: &CliConfig) -> i32 {
    match execute(cli) {
        Ok(out) => {
            let written = match &cli.output {
                Some(p) => fs::write(p, &out.text),
                None => {
                    print!("{}", out.text);
                    Ok(())
                }
            };
            match written {
                Ok(()) => out.code,
                Err(e) => {
                    eprintln!("error: cannot write output: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
