//! Command implementations behind the `lpbound` binary.
//!
//! Each `cmd_*` function reads its inputs from files and returns an
//! [`Outcome`]: a JSON document, a human-readable rendering and the process
//! exit code.

use std::fs;
use std::path::Path;

use lpbound::bounds::{self, BoundStatus, Cone, Preset, SigmaInequality, Validity};
use lpbound::evaluator::{self, DEFAULT_BUDGET};
use lpbound::query::stats::{json_rational, rational_json, spec_json, specs_from_json, stats_from_json, stats_to_json};
use lpbound::relalg::write_relation;
use lpbound::scalar::format_rational;
use lpbound::{seqnorm, worstcase, ConcreteStatistic, Database, Error, Norm, Query, Rational, StatisticSpec, VarSet};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_UNBOUNDED: i32 = 2;
pub const EXIT_VIOLATED: i32 = 3;

/// Default `--auto` list: integer norms 1..30 and ∞.
pub const DEFAULT_AUTO: &str = "1..30,inf";

#[derive(Debug)]
pub struct Outcome {
    pub json: Value,
    pub text: String,
    pub code: i32,
}

impl Outcome {
    fn ok(json: Value, text: String) -> Self {
        Outcome { json, text, code: EXIT_OK }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Violated(_) | Error::InvalidCertificate(_) => EXIT_VIOLATED,
            Error::Lp(m) if m.contains("infeasible") => EXIT_VIOLATED,
            _ => EXIT_USAGE,
        };
        CliError { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> CliError {
    CliError { code: EXIT_USAGE, message: message.into() }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

pub fn load_query(path: &Path) -> Result<Query, CliError> {
    Ok(Query::parse(&read_text(path)?)?)
}

/// Loads `<dir>/<relation>.csv` (or `.tsv`) for every relation named in `q`.
pub fn load_database(q: &Query, dir: &Path) -> Result<Database, CliError> {
    let mut db = Database::new();
    for atom in &q.atoms {
        if db.get(&atom.relation).is_ok() {
            continue;
        }
        let path = ["csv", "tsv"]
            .iter()
            .map(|ext| dir.join(format!("{}.{ext}", atom.relation)))
            .find(|p| p.is_file())
            .ok_or_else(|| {
                usage(format!("missing relation {}: no {0}.csv or {0}.tsv in {}", atom.relation, dir.display()))
            })?;
        db.load(&path, &atom.relation, None)?;
    }
    Ok(db)
}

/// Statistics files hold either a bare array or `{"statistics": [...]}`.
fn statistics_array(v: Value) -> Value {
    match v {
        Value::Object(mut m) if m.contains_key("statistics") => m.remove("statistics").unwrap_or(Value::Null),
        other => other,
    }
}

pub fn load_statistics(q: &Query, path: &Path) -> Result<Vec<ConcreteStatistic>, CliError> {
    Ok(stats_from_json(q, &statistics_array(read_json(path)?))?)
}

/// Parses a list such as `1,2,inf`, `1..30,inf` or `3/2`.
pub fn parse_norm_list(text: &str) -> Result<Vec<Norm>, CliError> {
    let mut out: Vec<Norm> = Vec::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = item.split_once("..") {
            let (a, b): (i64, i64) = (
                a.trim().parse().map_err(|_| usage(format!("bad range {item}")))?,
                b.trim().parse().map_err(|_| usage(format!("bad range {item}")))?,
            );
            if a < 1 || b < a {
                return Err(usage(format!("bad range {item}")));
            }
            out.extend((a..=b).map(Norm::int));
        } else {
            out.push(Norm::parse(item)?);
        }
    }
    if out.is_empty() {
        return Err(usage("empty norm list"));
    }
    let mut dedup = Vec::new();
    for p in out {
        if !dedup.contains(&p) {
            dedup.push(p);
        }
    }
    Ok(dedup)
}

/// `agm`, `panda`, or a norm list (see [`parse_norm_list`]).
pub fn parse_preset(text: &str) -> Result<Preset, CliError> {
    let t = text.trim().trim_start_matches('{').trim_end_matches('}');
    match t.to_ascii_lowercase().as_str() {
        "agm" => Ok(Preset::Agm),
        "panda" => Ok(Preset::panda()),
        _ => Ok(Preset::LpNorms(parse_norm_list(t)?)),
    }
}

fn log2_json(r: &Option<Rational>) -> Value {
    r.as_ref().map_or(json!("inf"), rational_json)
}

fn float_json(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        json!("inf")
    }
}

/// Measures statistics on the data, either those listed in `spec` or the
/// simple-conditional preset for the norms in `auto`.
pub fn cmd_stats(query: &Path, data: &Path, spec: Option<&Path>, auto: Option<&str>) -> Result<Outcome, CliError> {
    let q = load_query(query)?;
    let specs: Vec<StatisticSpec> = match spec {
        Some(path) => specs_from_json(&q, &statistics_array(read_json(path)?))?,
        None => bounds::preset_specs(&q, &Preset::LpNorms(parse_norm_list(auto.unwrap_or(DEFAULT_AUTO))?)),
    };
    let db = load_database(&q, data)?;
    let stats = bounds::gather(&q, &db, &specs)?;
    let text = stats
        .iter()
        .map(|s| format!("{}  b = {:.6}", s.spec.display(&q), lpbound::scalar::ratio_to_f64(&s.b)))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(Outcome::ok(json!({ "schema_version": SCHEMA_VERSION, "statistics": stats_to_json(&q, &stats) }), text))
}

fn report_json(q: &Query, stats: &[ConcreteStatistic], r: &bounds::BoundReport, proof: bool) -> Value {
    let certificate: Vec<Value> = stats
        .iter()
        .zip(&r.certificate)
        .map(|(s, w)| {
            let mut v = spec_json(q, &s.spec);
            v["b"] = rational_json(&s.b);
            v["weight"] = rational_json(w);
            v
        })
        .collect();
    let status = match r.status {
        BoundStatus::Optimal => "optimal",
        BoundStatus::Unbounded => "unbounded",
    };
    let mut out = json!({
        "schema_version": SCHEMA_VERSION,
        "status": status,
        "cone": r.cone.name(),
        "log2_bound": log2_json(&r.logbound),
        "bound": float_json(r.bound),
        "certificate": certificate,
        "stats_used": r.certificate.iter().filter(|w| !num_traits::Zero::is_zero(*w)).count(),
        "warnings": r.warnings,
    });
    if proof {
        out["shannon_multipliers"] = Value::Array(
            r.shannon_multipliers
                .iter()
                .map(|(t, y)| json!({ "inequality": format!("{} >= 0", t.display(&q.varnames)), "multiplier": rational_json(y) }))
                .collect(),
        );
        out["optimum"] = r.optimum.to_json(&q.varnames, rational_json);
        out["slack"] = Value::Array(r.slack.iter().map(rational_json).collect());
        if let Some(d) = &r.decomposition {
            out["decomposition"] = Value::Array(
                d.iter()
                    .map(|(v, a)| json!({ "V": v.display(&q.varnames), "alpha": rational_json(a) }))
                    .collect(),
            );
        }
    }
    out
}

/// Bounds `q` over `cone` from a statistics file.
pub fn cmd_bound(query: &Path, stats: &Path, cone: Cone, certificate: bool) -> Result<Outcome, CliError> {
    let q = load_query(query)?;
    let stats = load_statistics(&q, stats)?;
    let report = bounds::log_bound(&q, &stats, cone)?;
    let json = report_json(&q, &stats, &report, certificate);
    let mut text = match &report.logbound {
        Some(b) => format!("log2 bound over {}: {} ({:.6} bits, bound {:.6e})", cone, format_rational(b), lpbound::scalar::ratio_to_f64(b), report.bound),
        None => format!("unbounded over {cone}: the statistics do not constrain h({})", q.all_vars().display(&q.varnames)),
    };
    for (s, w) in stats.iter().zip(&report.certificate) {
        if !num_traits::Zero::is_zero(w) {
            text.push_str(&format!("\n  {} x {}", format_rational(w), s.spec.display(&q)));
        }
    }
    for w in &report.warnings {
        text.push_str(&format!("\nwarning: {w}"));
    }
    let code = if report.status == BoundStatus::Unbounded { EXIT_UNBOUNDED } else { EXIT_OK };
    Ok(Outcome { json, text, code })
}

#[derive(Clone, Debug)]
pub struct CompareRow {
    pub preset: String,
    pub statistics: usize,
    pub log2_bound: Option<Rational>,
    pub bound: f64,
    pub ratio: Option<f64>,
}

/// Per preset: the Γ bound gathered from data and, when requested, its
/// ratio to the true output size.
pub fn compare(q: &Query, db: &Database, presets: &[Preset], true_count: bool) -> Result<(Vec<CompareRow>, Option<u64>), CliError> {
    let truth = if true_count { Some(evaluator::generic_join_count(q, db)?.output) } else { None };
    let solved: Vec<Result<(bounds::BoundReport, usize), Error>> = std::thread::scope(|s| {
        let handles: Vec<_> = presets
            .iter()
            .map(|p| s.spawn(move || bounds::preset_bound(q, db, p).map(|(r, st)| (r, st.len()))))
            .collect();
        handles.into_iter().map(|h| h.join().expect("preset solver panicked")).collect()
    });
    let mut rows = Vec::new();
    for (preset, res) in presets.iter().zip(solved) {
        let (report, count) = res?;
        let ratio = truth.map(|t| report.bound / t.max(1) as f64);
        rows.push(CompareRow {
            preset: preset.label(),
            statistics: count,
            log2_bound: report.logbound,
            bound: report.bound,
            ratio,
        });
    }
    Ok((rows, truth))
}

pub fn cmd_compare(query: &Path, data: &Path, presets: &[Preset], true_count: bool) -> Result<Outcome, CliError> {
    let q = load_query(query)?;
    let db = load_database(&q, data)?;
    let (rows, truth) = compare(&q, &db, presets, true_count)?;
    let mut text = format!("{:<16} {:>6} {:>14} {:>14} {:>10}\n", "preset", "stats", "log2 bound", "bound", "ratio");
    for r in &rows {
        let lb = r.log2_bound.as_ref().map_or("inf".to_string(), |b| format!("{:.4}", lpbound::scalar::ratio_to_f64(b)));
        let ratio = r.ratio.map_or("-".to_string(), |x| format!("{x:.3}"));
        text.push_str(&format!("{:<16} {:>6} {:>14} {:>14.4e} {:>10}\n", r.preset, r.statistics, lb, r.bound, ratio));
    }
    if let Some(t) = truth {
        text.push_str(&format!("true output size: {t}"));
    }
    let json = json!({
        "schema_version": SCHEMA_VERSION,
        "true_count": truth,
        "rows": rows.iter().map(|r| json!({
            "preset": r.preset,
            "statistics": r.statistics,
            "log2_bound": log2_json(&r.log2_bound),
            "bound": float_json(r.bound),
            "ratio": r.ratio.map(float_json),
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome::ok(json, text.trim_end().to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    Oracle,
    Generic,
    Partitioned,
}

impl Engine {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "oracle" => Ok(Engine::Oracle),
            "generic" => Ok(Engine::Generic),
            "partitioned" => Ok(Engine::Partitioned),
            _ => Err(usage(format!("unknown engine {s}; expected oracle, generic or partitioned"))),
        }
    }
}

pub struct EvaluateArgs<'a> {
    pub query: &'a Path,
    pub data: &'a Path,
    pub engine: Engine,
    /// Statistics for the partitioned engine; gathered with `auto` if absent.
    pub stats: Option<&'a Path>,
    pub auto: &'a str,
    pub count_only: bool,
    pub out: Option<&'a Path>,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<Outcome, CliError> {
    let q = load_query(args.query)?;
    let db = load_database(&q, args.data)?;
    let mut json = json!({ "schema_version": SCHEMA_VERSION });
    let result = match args.engine {
        Engine::Oracle => evaluator::brute_force_join(&q, &db, DEFAULT_BUDGET)?,
        Engine::Generic => evaluator::generic_join(&q, &db)?,
        Engine::Partitioned => {
            let stats = match args.stats {
                Some(p) => load_statistics(&q, p)?,
                None => bounds::gather(&q, &db, &bounds::preset_specs(&q, &Preset::LpNorms(parse_norm_list(args.auto)?)))?,
            };
            let report = bounds::log_bound(&q, &stats, Cone::Polymatroid)?;
            if report.status == BoundStatus::Unbounded {
                return Err(CliError { code: EXIT_UNBOUNDED, message: "statistics give no finite bound".into() });
            }
            let (rel, pr) = evaluator::partitioned_evaluate(&q, &db, &stats, &report.certificate)?;
            json["partition"] = json!({
                "statistics": pr.partitioned.iter().map(|&i| spec_json(&q, &stats[i].spec)).collect::<Vec<_>>(),
                "part_counts": pr.part_counts,
                "combinations": pr.combinations.to_string(),
                "evaluated": pr.evaluated.len(),
                "log2_bound": pr.log_bound,
                "max_log_envelope": pr.evaluated.iter().map(|c| c.log_envelope).fold(f64::NEG_INFINITY, f64::max),
                "work": pr.evaluated.iter().map(|c| c.work).sum::<u64>(),
            });
            rel
        }
    };
    let engine = match args.engine {
        Engine::Oracle => "oracle",
        Engine::Generic => "generic",
        Engine::Partitioned => "partitioned",
    };
    json["engine"] = json!(engine);
    json["count"] = json!(result.len());
    json["columns"] = json!(result.columns());
    if !args.count_only {
        json["tuples"] = Value::Array(
            result
                .tuples()
                .iter()
                .map(|t| Value::Array(t.iter().map(|&v| json!(db.dictionary.label(v))).collect()))
                .collect(),
        );
    }
    if let Some(out) = args.out {
        write_relation(&result, out, |v| db.dictionary.label(v))?;
    }
    Ok(Outcome::ok(json, format!("{} output tuples ({engine})", result.len())))
}

/// Builds the worst-case database for simple statistics; writes one CSV per
/// relation plus `report.json` when `out_dir` is given.
pub fn cmd_worstcase(query: &Path, stats: &Path, out_dir: Option<&Path>) -> Result<Outcome, CliError> {
    let q = load_query(query)?;
    let stats = load_statistics(&q, stats)?;
    let wc = worstcase::worst_case_database(&q, &stats)?;
    let achieved = (wc.output_size as f64).log2();
    let json = json!({
        "schema_version": SCHEMA_VERSION,
        "bound": log2_json(&wc.bound.logbound),
        "achieved": achieved,
        "output_size": wc.output_size,
        "gap_log2": wc.gap_log2(),
        "c": wc.normal.c,
        "satisfied": wc.satisfied,
        "relations": wc.database.relations().map(|r| json!({ "name": r.name(), "tuples": r.len() })).collect::<Vec<_>>(),
    });
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| usage(format!("{}: {e}", dir.display())))?;
        for r in wc.database.relations() {
            write_relation(r, &dir.join(format!("{}.csv", r.name())), |v| wc.normal.label(v))?;
        }
        let report = serde_json::to_string_pretty(&json).expect("report serializes");
        fs::write(dir.join("report.json"), report).map_err(|e| usage(e.to_string()))?;
    }
    let text = format!(
        "|Q(D)| = {} (log2 {:.4}), bound {:.4} bits, gap {:.4} bits, c = {}, statistics {}",
        wc.output_size,
        achieved,
        wc.log_bound(),
        wc.gap_log2(),
        wc.normal.c,
        if wc.satisfied { "satisfied" } else { "VIOLATED" }
    );
    let code = if wc.satisfied { EXIT_OK } else { EXIT_VIOLATED };
    Ok(Outcome { json, text, code })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConvertTarget {
    PowerSums,
    Sequence,
}

/// Converts between a degree sequence and its power sums `ℓ1, ℓ2², …, ℓm^m`.
pub fn convert(input: &Value, to: ConvertTarget) -> Result<Value, CliError> {
    let arr = input.as_array().ok_or_else(|| usage("input must be a JSON array"))?;
    match to {
        ConvertTarget::PowerSums => {
            let d = arr
                .iter()
                .map(|v| v.as_u64().ok_or_else(|| usage("degrees must be nonnegative integers")))
                .collect::<Result<Vec<_>, _>>()?;
            let sums = seqnorm::sequence_to_power_sums(&d);
            Ok(json!({ "schema_version": SCHEMA_VERSION, "power_sums": sums.iter().map(rational_json).collect::<Vec<_>>() }))
        }
        ConvertTarget::Sequence => {
            let s = arr
                .iter()
                .map(|v| json_rational(v).ok_or_else(|| usage("power sums must be numbers")))
                .collect::<Result<Vec<_>, _>>()?;
            let d = seqnorm::power_sums_to_sequence(&s)?;
            Ok(json!({ "schema_version": SCHEMA_VERSION, "sequence": d.degrees() }))
        }
    }
}

pub fn cmd_convert(input: &Path, to: ConvertTarget) -> Result<Outcome, CliError> {
    let json = convert(&read_json(input)?, to)?;
    let key = if to == ConvertTarget::PowerSums { "power_sums" } else { "sequence" };
    let text = json[key].to_string();
    Ok(Outcome::ok(json, text))
}

/// Reads `{"variables": [...], "terms": [{"U","V","p","weight"}], "rhs": k}`.
/// Variable names come from `query` when given, else from `variables`.
pub fn parse_inequality(v: &Value, query: Option<&Query>) -> Result<(Vec<String>, SigmaInequality), CliError> {
    let names: Vec<String> = match query {
        Some(q) => q.varnames.clone(),
        None => v
            .get("variables")
            .and_then(Value::as_array)
            .ok_or_else(|| usage("inequality needs \"variables\" or a --query"))?
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| usage("variables must be names")))
            .collect::<Result<_, _>>()?,
    };
    let set_of = |key: &str, item: &Value| -> Result<VarSet, CliError> {
        let list = match item.get(key) {
            None | Some(Value::Null) => Vec::new(),
            Some(Value::Array(a)) => a.iter().map(|x| x.as_str().unwrap_or("").to_string()).collect(),
            Some(Value::String(s)) => s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect(),
            Some(_) => return Err(usage(format!("{key} must be a list of names"))),
        };
        let mut set = VarSet::EMPTY;
        for name in list {
            let i = names.iter().position(|n| *n == name).ok_or_else(|| usage(format!("unknown variable {name}")))?;
            set = set.with(i);
        }
        Ok(set)
    };
    let terms = v
        .get("terms")
        .and_then(Value::as_array)
        .ok_or_else(|| usage("inequality needs a \"terms\" array"))?
        .iter()
        .map(|item| {
            let p = match item.get("p") {
                Some(Value::String(s)) => Norm::parse(s)?,
                Some(Value::Number(n)) => Norm::parse(&n.to_string())?,
                _ => return Err(usage("term needs \"p\"")),
            };
            let w = item.get("weight").map_or(Some(Rational::from_integer(1.into())), json_rational);
            let w = w.ok_or_else(|| usage("weight must be a number"))?;
            Ok((StatisticSpec::new(0, set_of("U", item)?, set_of("V", item)?, p), w))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let rhs = v.get("rhs").map_or(Some(Rational::from_integer(1.into())), json_rational);
    let rhs = rhs.ok_or_else(|| usage("rhs must be a number"))?;
    Ok((names, SigmaInequality { terms, rhs }))
}

pub fn cmd_check_ineq(ineq: &Path, query: Option<&Path>, cone: Cone) -> Result<Outcome, CliError> {
    let q = query.map(load_query).transpose()?;
    let (names, ineq) = parse_inequality(&read_json(ineq)?, q.as_ref())?;
    let verdict = bounds::validity_check(names.len(), &ineq, cone)?;
    let (json, text) = match verdict {
        Validity::Valid => (
            json!({ "schema_version": SCHEMA_VERSION, "cone": cone.name(), "valid": true }),
            format!("valid over {cone}"),
        ),
        Validity::Invalid { counterexample, gap } => (
            json!({
                "schema_version": SCHEMA_VERSION,
                "cone": cone.name(),
                "valid": false,
                "counterexample": counterexample.to_json(&names, rational_json),
                "lhs_minus_rhs": rational_json(&gap),
            }),
            format!("invalid over {cone}: LHS - RHS = {} at the returned set function", format_rational(&gap)),
        ),
    };
    Ok(Outcome::ok(json, text))
}
