//! The `mediate` command line.

use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use mediation_core::assumptions::{check_all, check_assumption, classify_model, AssumptionId};
use mediation_core::estimands::{applicable_effects, effect, Effect};
use mediation_core::estimation::{empirical_joint, plugin, simulate};
use mediation_core::flowchart::{self, Advice};
use mediation_core::graph::{implied_independencies, recognize, swig_split, write_graph, Dag, DEFAULT_POOL};
use mediation_core::identification::{find_rule, identify, Formula, ModelClass, ObsDistribution, DISPATCH};
use mediation_core::scm::validate_scm;
use mediation_core::search::{certify, target_values, Property, Target};
use mediation_core::Error as CoreError;

use crate::error::{Error, Result};
use crate::{dataset_csv, graph_file, model_file, parallel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_POSITIVITY: i32 = 3;
pub const EXIT_NOT_IDENTIFIED: i32 = 4;
pub const EXIT_SEARCH_EXHAUSTED: i32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    JsonLines,
}

#[derive(Debug, Parser)]
#[command(name = "mediate", version, about = "Exact causal mediation analysis over finite structural causal models")]
pub struct Cli {
    /// Master seed for every randomized operation.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for assumption checks.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tol: f64,
    /// Worker threads for search, sweeps and the bootstrap.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true, value_enum, default_value = "table")]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Structural and positivity checks of a model file.
    Validate { model: PathBuf },
    /// SWIG splitting and d-separation queries.
    Graph(GraphArgs),
    /// Exact effect values of a model.
    Truth {
        model: PathBuf,
        /// Effects such as NIE, SIE or CDE(1); all applicable when omitted.
        #[arg(long = "effect")]
        effects: Vec<String>,
    },
    /// Identification formulas evaluated on a model's law or a dataset.
    Identify(IdentifyArgs),
    /// Numerical assumption checks.
    Check {
        model: PathBuf,
        #[arg(long = "assumption", required_unless_present = "all")]
        assumptions: Vec<String>,
        #[arg(long)]
        all: bool,
    },
    /// Model classes whose defining assumptions hold.
    Classify { model: PathBuf },
    /// Counterexample search against the mediation null criterion.
    Search(SearchArgs),
    /// Property sweep over random models.
    Sweep {
        property: String,
        #[arg(long, default_value = "1000", value_parser = parse_count)]
        n: u64,
    },
    /// Draw a dataset from a model.
    Simulate {
        model: PathBuf,
        #[arg(long, value_parser = parse_count)]
        n: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Plug-in estimate with a percentile bootstrap interval.
    Estimate(EstimateArgs),
    /// Recommend an effect measure from answers about the design.
    Advise {
        /// `key=value,...`; prompts interactively when omitted.
        #[arg(long)]
        answers: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    /// Graph file, or a bundled structure name with --builtin.
    pub source: String,
    #[arg(long)]
    pub builtin: bool,
    /// Nodes to split, comma separated.
    #[arg(long)]
    pub swig: Option<String>,
    /// d-separation query sets, by name or label.
    #[arg(long = "x")]
    pub xs: Vec<String>,
    #[arg(long = "y")]
    pub ys: Vec<String>,
    #[arg(long = "given")]
    pub given: Vec<String>,
    /// List implied independencies among the pool variables.
    #[arg(long)]
    pub implied: bool,
    /// Only list independencies that state a named assumption.
    #[arg(long)]
    pub recognized: bool,
    /// Comma-separated pool for --implied.
    #[arg(long)]
    pub pool: Option<String>,
    /// Print the (split) graph in the text format.
    #[arg(long)]
    pub print: bool,
}

#[derive(Debug, Args)]
pub struct IdentifyArgs {
    /// Model file; its exact observational law is used.
    pub model: Option<PathBuf>,
    /// CSV dataset instead of a model.
    #[arg(long)]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub effect: Option<String>,
    #[arg(long)]
    pub class: Option<String>,
    /// Reference mediator value for CDE and the portion-eliminated formula.
    #[arg(long)]
    pub m: Option<usize>,
    /// Print the (effect, class) dispatch table.
    #[arg(long)]
    pub rules: bool,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// `separable-null` (alias `theorem2`) or `intermediate-null` (alias `theorem3`).
    pub target: String,
    #[arg(long, default_value = "100000", value_parser = parse_count)]
    pub budget: u64,
    #[arg(long, default_value_t = 0.01)]
    pub threshold: f64,
    /// Extra assumptions the counterexample must satisfy.
    #[arg(long = "require")]
    pub require: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Re-certify a saved model instead of searching.
    #[arg(long)]
    pub verify: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    pub data: PathBuf,
    #[arg(long)]
    pub formula: Option<String>,
    #[arg(long)]
    pub effect: Option<String>,
    #[arg(long)]
    pub class: Option<String>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub no_bootstrap: bool,
}

/// Accepts integers and integral floats such as `1e5`.
fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(n) = s.parse::<u64>() {
        return Ok(n);
    }
    match s.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 => Ok(x as u64),
        _ => Err(format!("`{}` is not a non-negative integer", s)),
    }
}

struct Output<'a> {
    w: &'a mut dyn Write,
    format: Format,
}

impl Output<'_> {
    fn records(&mut self, fields: &[&str], rows: &[Vec<Value>]) -> Result<()> {
        let io = |e| Error::Io {
            path: "<stdout>".into(),
            source: e,
        };
        match self.format {
            Format::JsonLines => {
                for row in rows {
                    let obj: serde_json::Map<String, Value> = fields
                        .iter()
                        .zip(row)
                        .map(|(f, v)| (f.to_string(), v.clone()))
                        .collect();
                    writeln!(self.w, "{}", Value::Object(obj)).map_err(io)?;
                }
            }
            Format::Table => {
                let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(cell).collect()).collect();
                let widths: Vec<usize> = (0..fields.len())
                    .map(|j| {
                        cells
                            .iter()
                            .map(|r| r[j].chars().count())
                            .chain([fields[j].len()])
                            .max()
                            .unwrap_or(0)
                    })
                    .collect();
                let line = |vals: Vec<&str>| {
                    let mut s = String::new();
                    for (j, v) in vals.iter().enumerate() {
                        if j + 1 == vals.len() {
                            s.push_str(v);
                        } else {
                            s.push_str(&format!("{:w$}  ", v, w = widths[j]));
                        }
                    }
                    s.trim_end().to_string()
                };
                writeln!(self.w, "{}", line(fields.to_vec())).map_err(io)?;
                for r in &cells {
                    writeln!(self.w, "{}", line(r.iter().map(String::as_str).collect())).map_err(io)?;
                }
            }
        }
        Ok(())
    }

    fn text(&mut self, s: &str) -> Result<()> {
        if self.format == Format::Table {
            writeln!(self.w, "{}", s).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
        Ok(())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => format!("{:.9}", x),
            _ => n.to_string(),
        },
        Value::Array(a) => a.iter().map(cell).collect::<Vec<_>>().join(", "),
        other => other.to_string(),
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn parse_effect(s: &str) -> Result<Effect> {
    Effect::parse(s).ok_or_else(|| CoreError::InvalidArgument(format!("unknown effect `{}`", s)).into())
}

fn parse_class(s: &str) -> Result<ModelClass> {
    ModelClass::parse(s).ok_or_else(|| CoreError::InvalidArgument(format!("unknown model class `{}`", s)).into())
}

fn parse_assumption(s: &str) -> Result<AssumptionId> {
    AssumptionId::parse(s).ok_or_else(|| CoreError::InvalidArgument(format!("unknown assumption `{}`", s)).into())
}

fn csv_list(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

/// Maps an error to the documented exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Core(CoreError::Positivity(_)) => EXIT_POSITIVITY,
        Error::Core(CoreError::NotIdentified { .. }) => EXIT_NOT_IDENTIFIED,
        Error::Core(CoreError::InvalidModel(_)) | Error::Parse { .. } => EXIT_VALIDATION,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run(args: Vec<OsString>, input: &mut dyn BufRead, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{}", text) } else { write!(out, "{}", text) };
            return code;
        }
    };
    let threads = cli.threads;
    let mut o = Output { w: out, format: cli.format };
    if let Some(n) = threads {
        parallel::configure_global(n);
    }
    match dispatch(&cli, input, &mut o) {
        Ok(code) => code,
        Err(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e);
            exit_code(&e)
        }
    }
}

fn dispatch(cli: &Cli, input: &mut dyn BufRead, o: &mut Output) -> Result<i32> {
    match &cli.command {
        Command::Validate { model } => validate(model, o),
        Command::Graph(a) => graph(a, o),
        Command::Truth { model, effects } => truth(model, effects, o),
        Command::Identify(a) => identify_cmd(a, o),
        Command::Check { model, assumptions, all } => check(model, assumptions, *all, cli.tol, o),
        Command::Classify { model } => classify(model, cli.tol, o),
        Command::Search(a) => search(a, cli.seed, o),
        Command::Sweep { property, n } => sweep(property, *n, cli.seed, o),
        Command::Simulate { model, n, out } => simulate_cmd(model, *n, out.as_deref(), cli.seed, o),
        Command::Estimate(a) => estimate(a, cli.seed, o),
        Command::Advise { answers } => advise(answers.as_deref(), input, o),
    }
}

fn validate(path: &std::path::Path, o: &mut Output) -> Result<i32> {
    let scm = model_file::load_model(path)?;
    let report = validate_scm(&scm);
    let mut rows = Vec::new();
    for v in &report.violations {
        rows.push(vec![json!("violation"), json!(v)]);
    }
    for w in &report.warnings {
        rows.push(vec![json!("warning"), json!(w)]);
    }
    let status = if report.is_valid() { "valid" } else { "invalid" };
    rows.push(vec![json!("status"), json!(status)]);
    o.records(&["kind", "message"], &rows)?;
    Ok(if report.is_valid() { EXIT_OK } else { EXIT_VALIDATION })
}

fn load_dag(a: &GraphArgs) -> Result<Dag> {
    if a.builtin {
        graph_file::builtin(&a.source).ok_or_else(|| {
            CoreError::InvalidArgument(format!(
                "unknown structure `{}` (known: {})",
                a.source,
                graph_file::BUILTIN.join(", ")
            ))
            .into()
        })
    } else {
        graph_file::load_graph(std::path::Path::new(&a.source))
    }
}

fn graph(a: &GraphArgs, o: &mut Output) -> Result<i32> {
    let mut g = load_dag(a)?;
    if let Some(s) = &a.swig {
        let targets = csv_list(s);
        let refs: Vec<&str> = targets.iter().map(String::as_str).collect();
        g = swig_split(&g, &refs)?;
    }
    if a.print {
        o.text(write_graph(&g).trim_end())?;
    }
    if !a.xs.is_empty() || !a.ys.is_empty() {
        let xs: Vec<&str> = a.xs.iter().map(String::as_str).collect();
        let ys: Vec<&str> = a.ys.iter().map(String::as_str).collect();
        let zs: Vec<&str> = a.given.iter().map(String::as_str).collect();
        let sep = g.d_separated(&xs, &ys, &zs)?;
        o.records(
            &["x", "y", "given", "separated"],
            &[vec![json!(a.xs), json!(a.ys), json!(a.given), json!(sep)]],
        )?;
    }
    if a.implied {
        let pool: Vec<String> = match &a.pool {
            Some(p) => csv_list(p),
            None => DEFAULT_POOL.iter().map(|s| s.to_string()).collect(),
        };
        let refs: Vec<&str> = pool.iter().map(String::as_str).collect();
        let rows: Vec<Vec<Value>> = implied_independencies(&g, &refs)
            .iter()
            .filter(|s| !a.recognized || recognize(&g, s).is_some())
            .map(|s| {
                let z: Vec<&str> = s.z.iter().map(String::as_str).collect();
                vec![
                    json!(s.x_label),
                    json!(s.y_label),
                    json!(z),
                    recognize(&g, s).map_or(Value::Null, |id| json!(id.tag())),
                ]
            })
            .collect();
        o.records(&["x", "y", "given", "assumption"], &rows)?;
    }
    Ok(EXIT_OK)
}

fn truth(path: &std::path::Path, effects: &[String], o: &mut Output) -> Result<i32> {
    let scm = model_file::load_model(path)?;
    scm.ensure_valid()?;
    let list: Vec<Effect> = if effects.is_empty() {
        applicable_effects(&scm)
    } else {
        effects.iter().map(|e| parse_effect(e)).collect::<Result<_>>()?
    };
    let mut rows = Vec::new();
    for e in list {
        let r = effect(&scm, e)?;
        rows.push(vec![json!(r.name), num(r.value)]);
    }
    o.records(&["effect", "value"], &rows)?;
    Ok(EXIT_OK)
}

fn identify_cmd(a: &IdentifyArgs, o: &mut Output) -> Result<i32> {
    if a.rules {
        let rows: Vec<Vec<Value>> = DISPATCH
            .iter()
            .map(|r| {
                vec![
                    json!(r.effect.to_string()),
                    json!(r.class.tag()),
                    json!(r.formula.tag()),
                    json!(r.formula.to_string()),
                ]
            })
            .collect();
        o.records(&["effect", "class", "formula", "expression"], &rows)?;
        return Ok(EXIT_OK);
    }
    let dist: ObsDistribution = match (&a.model, &a.table) {
        (Some(m), None) => {
            let scm = model_file::load_model(m)?;
            scm.ensure_valid()?;
            ObsDistribution::from_scm(&scm)?
        }
        (None, Some(t)) => empirical_joint(&dataset_csv::load_dataset(t)?)?,
        _ => {
            return Err(CoreError::InvalidArgument("give exactly one of a model file or --table".into()).into())
        }
    };
    let eff = parse_effect(a.effect.as_deref().ok_or_else(|| CoreError::InvalidArgument("--effect is required".into()))?)?;
    let class = parse_class(a.class.as_deref().ok_or_else(|| CoreError::InvalidArgument("--class is required".into()))?)?;
    let r = identify(&dist, eff, class, a.m)?;
    let assumptions: Vec<&str> = r.assumptions.iter().map(|x| x.tag()).collect();
    o.records(
        &["effect", "class", "via", "formula", "expression", "value", "assumptions"],
        &[vec![
            json!(r.effect.to_string()),
            json!(r.class.tag()),
            json!(r.via.tag()),
            json!(r.formula.tag()),
            json!(r.formula.to_string()),
            num(r.value),
            json!(assumptions),
        ]],
    )?;
    Ok(EXIT_OK)
}

fn report_rows(reports: &[mediation_core::assumptions::AssumptionReport]) -> Vec<Vec<Value>> {
    reports
        .iter()
        .map(|r| {
            vec![
                json!(r.id.tag()),
                json!(r.holds),
                num(r.max_violation),
                json!(match r.scope {
                    mediation_core::assumptions::Scope::Population => "population",
                    mediation_core::assumptions::Scope::Individual => "individual",
                }),
                if r.witness.is_empty() { Value::Null } else { json!(r.witness) },
            ]
        })
        .collect()
}

const REPORT_FIELDS: &[&str] = &["assumption", "holds", "max_violation", "scope", "witness"];

fn check(path: &std::path::Path, ids: &[String], all: bool, tol: f64, o: &mut Output) -> Result<i32> {
    let scm = model_file::load_model(path)?;
    let reports = if all {
        check_all(&scm, tol)?
    } else {
        ids.iter()
            .map(|s| Ok(check_assumption(&scm, parse_assumption(s)?, tol)?))
            .collect::<Result<Vec<_>>>()?
    };
    o.records(REPORT_FIELDS, &report_rows(&reports))?;
    Ok(EXIT_OK)
}

fn classify(path: &std::path::Path, tol: f64, o: &mut Output) -> Result<i32> {
    let scm = model_file::load_model(path)?;
    let classes = classify_model(&scm, tol)?;
    let mut rows: Vec<Vec<Value>> = classes
        .iter()
        .map(|c| vec![json!(c.tag()), json!(true), json!(scm.declares().iter().any(|d| d == c.tag()))])
        .collect();
    for d in scm.declares() {
        match ModelClass::parse(d) {
            Some(c) if !classes.contains(&c) => rows.push(vec![json!(c.tag()), json!(false), json!(true)]),
            _ => {}
        }
    }
    o.records(&["class", "holds", "declared"], &rows)?;
    Ok(EXIT_OK)
}

fn search(a: &SearchArgs, seed: u64, o: &mut Output) -> Result<i32> {
    let target = Target::parse(&a.target)
        .ok_or_else(|| CoreError::InvalidArgument(format!("unknown search target `{}`", a.target)))?;
    let extra: Vec<AssumptionId> = a.require.iter().flat_map(|s| csv_list(s)).map(|s| parse_assumption(&s)).collect::<Result<_>>()?;
    let value_fields = ["target", "attempt", "effect", "effect_value", "estimand_value", "formula_value"];
    if let Some(path) = &a.verify {
        let scm = model_file::load_model(path)?;
        let cert = certify(&scm, target, &extra, mediation_core::assumptions::DEFAULT_TOL)?;
        let (ev, est, f) = target_values(&scm, target)?;
        o.records(
            &value_fields,
            &[vec![json!(target.tag()), Value::Null, json!(target.effect().to_string()), num(ev), num(est), num(f)]],
        )?;
        return Ok(match cert {
            Some(reports) if ev.abs() >= a.threshold => {
                o.records(REPORT_FIELDS, &report_rows(&reports))?;
                o.text("certificate verified")?;
                EXIT_OK
            }
            _ => {
                o.text("certificate does not verify")?;
                EXIT_VALIDATION
            }
        });
    }
    match parallel::find_counterexample(target, &extra, a.budget, seed, a.threshold)? {
        Some(c) => {
            o.records(
                &value_fields,
                &[vec![
                    json!(target.tag()),
                    json!(c.attempt),
                    json!(target.effect().to_string()),
                    num(c.effect_value),
                    num(c.estimand_value),
                    num(c.formula_value),
                ]],
            )?;
            o.records(REPORT_FIELDS, &report_rows(&c.certificate))?;
            if let Some(p) = &a.out {
                model_file::save_model(p, &c.scm)?;
                o.text(&format!("model written to {}", p.display()))?;
            } else {
                o.text(model_file::write_model(&c.scm).trim_end())?;
            }
            Ok(EXIT_OK)
        }
        None => {
            o.text(&format!("no counterexample within {} attempts", a.budget))?;
            Ok(EXIT_SEARCH_EXHAUSTED)
        }
    }
}

fn sweep(property: &str, n: u64, seed: u64, o: &mut Output) -> Result<i32> {
    let p = Property::parse(property).ok_or_else(|| {
        let known: Vec<&str> = Property::ALL.iter().map(|p| p.tag()).collect();
        CoreError::InvalidArgument(format!("unknown property `{}` (known: {})", property, known.join(", ")))
    })?;
    let r = parallel::property_sweep(p, n, seed)?;
    let (extra_label, extra_value) = match &r.extra {
        Some((l, v)) => (json!(l), num(*v)),
        None => (Value::Null, Value::Null),
    };
    o.records(
        &["property", "n", "passed", "uncertified", "max_deviation", "worst_index", "extra", "extra_value", "outside_witness"],
        &[vec![
            json!(p.tag()),
            json!(r.n),
            json!(r.passed),
            json!(r.uncertified),
            num(r.max_deviation),
            json!(r.worst_index),
            extra_label,
            extra_value,
            r.outside_witness.as_ref().map_or(Value::Null, |w| num(w.deviation)),
        ]],
    )?;
    Ok(if r.passed == r.n && r.uncertified == 0 { EXIT_OK } else { EXIT_FAILURE })
}

fn simulate_cmd(path: &std::path::Path, n: u64, out: Option<&std::path::Path>, seed: u64, o: &mut Output) -> Result<i32> {
    let scm = model_file::load_model(path)?;
    let ds = simulate(&scm, n as usize, seed)?;
    match out {
        Some(p) => {
            dataset_csv::save_dataset(p, &ds)?;
            o.text(&format!("{} rows written to {}", ds.n(), p.display()))?;
        }
        None => {
            let text = dataset_csv::write_dataset(&ds)?;
            write!(o.w, "{}", text).map_err(|e| Error::Io {
                path: "<stdout>".into(),
                source: e,
            })?;
        }
    }
    Ok(EXIT_OK)
}

fn estimate(a: &EstimateArgs, seed: u64, o: &mut Output) -> Result<i32> {
    let ds = dataset_csv::load_dataset(&a.data)?;
    let formula = match (&a.formula, &a.effect, &a.class) {
        (Some(f), None, None) => Formula::parse(f).ok_or_else(|| {
            let known: Vec<&str> = Formula::ALL.iter().map(|f| f.tag()).collect();
            CoreError::InvalidArgument(format!("unknown formula `{}` (known: {})", f, known.join(", ")))
        })?,
        (None, Some(e), Some(c)) => {
            let (e, c) = (parse_effect(e)?, parse_class(c)?);
            find_rule(e, c)
                .ok_or_else(|| CoreError::NotIdentified {
                    effect: e.to_string(),
                    class: c.tag().into(),
                    reason: "no identification formula is registered for this pair".into(),
                })?
                .formula
        }
        _ => {
            return Err(CoreError::InvalidArgument("give --formula, or both --effect and --class".into()).into())
        }
    };
    let est = plugin(&ds, formula, a.m)?;
    let fields = [
        "formula", "m", "point", "lower", "upper", "level", "replicates", "dropped", "seed", "method", "n",
        "positivity_gaps",
    ];
    let m = a.m.map_or(Value::Null, |m| json!(m));
    if !est.positivity_gaps.is_empty() {
        o.records(
            &fields,
            &[vec![
                json!(formula.tag()), m, Value::Null, Value::Null, Value::Null, Value::Null, Value::Null,
                Value::Null, json!(seed), Value::Null, json!(est.n), json!(est.positivity_gaps),
            ]],
        )?;
        return Ok(EXIT_POSITIVITY);
    }
    if a.no_bootstrap {
        o.records(
            &fields,
            &[vec![
                json!(formula.tag()), m, num(est.point), Value::Null, Value::Null, Value::Null, Value::Null,
                Value::Null, json!(seed), json!("plug-in"), json!(est.n), json!(Vec::<String>::new()),
            ]],
        )?;
        return Ok(EXIT_OK);
    }
    let iv = parallel::bootstrap(&ds, formula, a.m, a.bootstrap, a.level, seed)?;
    o.records(
        &fields,
        &[vec![
            json!(formula.tag()), m, num(iv.point), num(iv.lower), num(iv.upper), num(iv.level),
            json!(iv.replicates), json!(iv.dropped), json!(iv.seed), json!(iv.method), json!(est.n),
            json!(Vec::<String>::new()),
        ]],
    )?;
    if let Some(w) = &iv.warning {
        o.text(&format!("warning: {}", w))?;
    }
    Ok(EXIT_OK)
}

fn recommendation(r: &flowchart::Recommendation, o: &mut Output) -> Result<()> {
    let assumptions: Vec<&str> = r.assumptions.iter().map(|a| a.tag()).collect();
    let path: Vec<String> = r.path.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
    o.records(
        &["estimand", "class", "formula", "expression", "mediational", "assumptions", "note", "caveats", "path"],
        &[vec![
            json!(r.estimand.to_string()),
            json!(r.class.tag()),
            json!(r.formula.tag()),
            json!(r.formula.to_string()),
            json!(r.mediational),
            json!(assumptions),
            json!(r.note),
            json!(r.caveats),
            json!(path),
        ]],
    )
}

fn advise(answers: Option<&str>, input: &mut dyn BufRead, o: &mut Output) -> Result<i32> {
    let mut given = match answers {
        Some(s) => flowchart::parse_answers(s)?,
        None => Vec::new(),
    };
    let interactive = answers.is_none();
    loop {
        match flowchart::advise(&given)? {
            Advice::Done(r) => {
                recommendation(&r, o)?;
                return Ok(EXIT_OK);
            }
            Advice::Question(q) => {
                let options: Vec<&str> = q.options.iter().map(|x| x.0).collect();
                if !interactive {
                    o.records(
                        &["pending", "question", "options"],
                        &[vec![json!(q.id), json!(q.question), json!(options)]],
                    )?;
                    return Ok(EXIT_OK);
                }
                let io = |e| Error::Io {
                    path: "<stdin>".into(),
                    source: e,
                };
                writeln!(o.w, "{} [{}]", q.question, options.join("/")).map_err(io)?;
                o.w.flush().map_err(io)?;
                let mut line = String::new();
                if input.read_line(&mut line).map_err(io)? == 0 {
                    return Err(CoreError::InvalidArgument("input ended before a recommendation".into()).into());
                }
                let answer = line.trim();
                if options.contains(&answer) {
                    given.push((q.id.to_string(), answer.to_string()));
                } else {
                    writeln!(o.w, "expected one of: {}", options.join(", ")).map_err(io)?;
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str], stdin: &str) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut input = stdin.as_bytes();
        let args: Vec<OsString> = std::iter::once("mediate").chain(args.iter().copied()).map(Into::into).collect();
        let code = run(args, &mut input, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e5"), Ok(100_000));
        assert!(parse_count("1.5").is_err());
    }

    #[test]
    fn advise_modes() {
        let (code, out, _) = call(
            &["advise", "--answers", "l-present=yes,target=indirect,confounding=hold,l-interaction=holds"],
            "",
        );
        assert_eq!(code, 0);
        assert!(out.contains("portion-eliminated"), "{}", out);
        let (code, out, _) = call(&["--format", "json-lines", "advise"], "no\nimplausible\nholds\n");
        assert_eq!(code, 0);
        let last = out.lines().last().unwrap();
        let v: Value = serde_json::from_str(last).unwrap();
        assert_eq!(v["estimand"], "NIE");
        assert_eq!(v["class"], "FFRCISTG+A5");
    }

    #[test]
    fn usage_errors_exit_two() {
        let (code, _, err) = call(&["frobnicate"], "");
        assert_eq!(code, 2);
        assert!(!err.is_empty());
    }
}
