//! Command line frontend: ingest graph data, compute sensitivity bounds,
//! release noisy counts, and run the benchmark harness.

mod schema;

use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use resens::agm::gs_upper_agm;
use resens::elastic::elastic_sensitivity;
use resens::engine::{eval_count, EngineLimits};
use resens::mech::{release, MechanismKind};
use resens::oracle::oracle_ss;
use resens::query::Query;
use resens::sensitivity::{residual_sensitivity, SensitivityOptions};
use resens::store::{Format, Instance};
use resens::{Error, OracleGuard};

const SENSITIVITY_SCHEMA: &str = include_str!("../../../schemas/sensitivity_report.schema.json");
const RELEASE_SCHEMA: &str = include_str!("../../../schemas/release_record.schema.json");
const BENCH_SCHEMA: &str = include_str!("../../../schemas/bench_row.schema.json");

#[derive(Parser)]
#[command(
    name = "resens",
    version,
    about = "Differentially private result sizes for conjunctive queries"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Compute sensitivity bounds for a query on bound data.
    Sensitivity(SensitivityArgs),
    /// Release a noisy count.
    Release(ReleaseArgs),
    /// Run the benchmark harness over the dataset manifest.
    Bench(BenchArgs),
    /// Download the datasets listed in the manifest.
    FetchData(FetchArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Query file (conjunctive query with optional predicates and privacy
    /// clause).
    #[arg(long)]
    query: PathBuf,
    /// Directory searched for <Relation>.txt edge lists when a relation has
    /// no explicit binding.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Relation binding, name=path:format:arity. Formats: edge-list, csv,
    /// csv-header, tsv, tsv-header.
    #[arg(long = "bind")]
    bind: Vec<String>,
    /// Override the brute-force oracle's instance size cap.
    #[arg(long)]
    guard_tuples: Option<usize>,
}

#[derive(Args)]
struct SensitivityArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Privacy budget; the smoothing rate defaults to epsilon / 10.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Smoothing rate (overrides the epsilon-derived default).
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated subset of rs,gs,es,ss-oracle.
    #[arg(long, default_value = "rs")]
    measures: String,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReleaseArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    epsilon: f64,
    /// Smoothing rate override (defaults to epsilon / 10).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, default_value = "cauchy-rs")]
    mechanism: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Include the true count and the noise value in the record. Off by
    /// default: the true count is the protected value.
    #[arg(long)]
    show_true: bool,
    /// Refuse mechanisms that are only private in the relaxed setting where
    /// the instance size is public.
    #[arg(long)]
    strict_dp: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Directory holding manifest.json and the dataset files.
    #[arg(long, default_value = "data")]
    data: PathBuf,
    /// Directory holding the bundled .cq query files.
    #[arg(long, default_value = "queries")]
    queries: PathBuf,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Comma-separated subset of rs,es,ss-oracle (rs always runs).
    #[arg(long, default_value = "rs,es")]
    measures: String,
    /// Comma-separated smoothing rates; emits one row per rate.
    #[arg(long)]
    sweep_beta: Option<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    guard_tuples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FetchArgs {
    #[arg(long, default_value = "data")]
    data: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Sensitivity(a) => cmd_sensitivity(a),
        Cmd::Release(a) => cmd_release(a),
        Cmd::Bench(a) => cmd_bench(a),
        Cmd::FetchData(a) => cmd_fetch(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Parse { .. } | Error::Data(_) | Error::Schema(_) | Error::Unsupported(_) => 1,
                Error::Guard(_) => 2,
                Error::Internal(_) => 3,
            };
            ExitCode::from(code)
        }
    }
}

fn parse_format(s: &str) -> Result<Format, Error> {
    match s {
        "edge-list" => Ok(Format::EdgeList),
        "csv" | "tsv" => Ok(Format::Delimited { has_header: false }),
        "csv-header" | "tsv-header" => Ok(Format::Delimited { has_header: true }),
        other => Err(Error::Data(format!("unknown data format '{other}'"))),
    }
}

fn load_query(path: &Path) -> Result<Query, Error> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let q = Query::parse(&text)?;
    for w in q.warnings() {
        eprintln!("warning: {w}");
    }
    Ok(q)
}

fn load_instance(q: &Query, input: &InputArgs) -> Result<Instance, Error> {
    let mut bindings: BTreeMap<String, (PathBuf, Format, usize)> = BTreeMap::new();
    for b in &input.bind {
        let (name, rest) = b
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("malformed --bind '{b}', want name=path:format:arity")))?;
        let mut parts = rest.rsplitn(3, ':');
        let arity = parts
            .next()
            .and_then(|a| a.parse::<usize>().ok())
            .ok_or_else(|| Error::Data(format!("malformed --bind '{b}': bad arity")))?;
        let format = parse_format(
            parts
                .next()
                .ok_or_else(|| Error::Data(format!("malformed --bind '{b}': missing format")))?,
        )?;
        let path = PathBuf::from(
            parts
                .next()
                .ok_or_else(|| Error::Data(format!("malformed --bind '{b}': missing path")))?,
        );
        bindings.insert(name.to_string(), (path, format, arity));
    }
    let mut inst = Instance::new();
    let mut loaded: BTreeMap<String, usize> = BTreeMap::new();
    for atom in q.atoms() {
        if loaded.contains_key(&atom.relation) {
            continue;
        }
        let (path, format, arity) = match bindings.get(&atom.relation) {
            Some(b) => b.clone(),
            None => match &input.data {
                Some(dir) => (
                    dir.join(format!("{}.txt", atom.relation)),
                    Format::EdgeList,
                    atom.vars.len(),
                ),
                None => {
                    return Err(Error::Data(format!(
                        "relation {} has no --bind and no --data directory",
                        atom.relation
                    )))
                }
            },
        };
        let stats = inst.load_relation(&path, format, &atom.relation, arity)?;
        eprintln!(
            "loaded {}: {} rows, {} distinct",
            atom.relation, stats.rows_read, stats.distinct
        );
        loaded.insert(atom.relation.clone(), arity);
    }
    Ok(inst)
}

/// Oracle caps used by the CLI. The edit-ball search is truncated at
/// distance 2: every extra level multiplies the runtime by the number of
/// possible single edits, and distance 2 already separates the smooth from
/// the local regime on desk-scale inputs.
fn cli_guard(guard_tuples: Option<usize>) -> OracleGuard {
    let mut g = OracleGuard {
        max_k: 2,
        ..OracleGuard::default()
    };
    if let Some(t) = guard_tuples {
        g.max_tuples = t;
    }
    g
}

fn guard_from(input: &InputArgs) -> OracleGuard {
    cli_guard(input.guard_tuples)
}

/// Size parameter for the worst-case join bound: the largest private
/// relation, the quantity treated as public in the relaxed setting.
fn public_size(q: &Query, inst: &Instance) -> u64 {
    q.private_groups()
        .iter()
        .filter_map(|&g| inst.relation(&q.groups()[g].name))
        .map(|r| r.len() as u64)
        .max()
        .unwrap_or(0)
}

fn resolve_beta(epsilon: Option<f64>, beta: Option<f64>) -> Result<(f64, Option<f64>), Error> {
    match (epsilon, beta) {
        (_, Some(b)) => Ok((b, epsilon)),
        (Some(e), None) => Ok((e / 10.0, Some(e))),
        (None, None) => Err(Error::Data("need --epsilon or --beta".into())),
    }
}

fn parse_measures(s: &str) -> Result<Vec<String>, Error> {
    let out: Vec<String> = s
        .split(',')
        .map(|m| m.trim().to_string())
        .filter(|m| !m.is_empty())
        .collect();
    if out.is_empty() {
        return Err(Error::Data("measures must be nonempty".into()));
    }
    for m in &out {
        if !["rs", "gs", "es", "ss-oracle"].contains(&m.as_str()) {
            return Err(Error::Data(format!(
                "unknown measure '{m}', want rs, gs, es or ss-oracle"
            )));
        }
    }
    Ok(out)
}

fn emit(doc: &Value, schema_text: &str, out: Option<&Path>) -> Result<(), Error> {
    let schema: Value = serde_json::from_str(schema_text)
        .map_err(|e| Error::Internal(format!("bad embedded schema: {e}")))?;
    schema::validate(&schema, doc)
        .map_err(|e| Error::Internal(format!("emitted document violates its schema: {e}")))?;
    let text = serde_json::to_string_pretty(doc)
        .map_err(|e| Error::Internal(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n")
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_sensitivity(args: SensitivityArgs) -> Result<(), Error> {
    let q = load_query(&args.input.query)?;
    let inst = load_instance(&q, &args.input)?;
    let measures = parse_measures(&args.measures)?;
    let (beta, epsilon) = resolve_beta(args.epsilon, args.beta)?;
    let opts = SensitivityOptions {
        beta,
        epsilon,
        limits: EngineLimits::default(),
        extra_k: 0,
    };
    let mut rep = residual_sensitivity(&q, &inst, &opts)?;
    if measures.iter().any(|m| m == "gs") {
        rep.gs_upper = Some(gs_upper_agm(&q, public_size(&q, &inst))?.value);
    }
    if measures.iter().any(|m| m == "es") {
        rep.es = Some(elastic_sensitivity(&q, &inst, beta)?);
    }
    let mut doc = serde_json::to_value(&rep).map_err(|e| Error::Internal(e.to_string()))?;
    if measures.iter().any(|m| m == "ss-oracle") {
        let ss = oracle_ss(&q, &inst, beta, &guard_from(&args.input))?;
        doc["ss_oracle"] = json!(ss.value);
        if !ss.tail_dominated {
            eprintln!("note: ss-oracle is truncated at the guard distance; it is a lower bound");
        }
    }
    eprintln!("beta {beta}, k cutoff {:.2}, rs {:.6}", rep.k_hat, rep.rs);
    if let Some(gs) = rep.gs_upper {
        eprintln!("worst-case join bound {gs:.3}");
    }
    if let Some(es) = rep.es {
        eprintln!("elastic sensitivity {es:.3}");
    }
    emit(&doc, SENSITIVITY_SCHEMA, args.out.as_deref())
}

fn cmd_release(args: ReleaseArgs) -> Result<(), Error> {
    let q = load_query(&args.input.query)?;
    let inst = load_instance(&q, &args.input)?;
    let mechanism = MechanismKind::parse(&args.mechanism)?;
    let (beta, _) = resolve_beta(Some(args.epsilon), args.beta)?;
    let count = eval_count(&q, &inst, &EngineLimits::default())?;
    let sensitivity = match mechanism {
        MechanismKind::CauchyRs => {
            residual_sensitivity(&q, &inst, &SensitivityOptions::from_beta(beta))?.rs
        }
        MechanismKind::CauchySsOracle => {
            oracle_ss(&q, &inst, beta, &guard_from(&args.input))?.value
        }
        MechanismKind::LaplaceGs => {
            if args.strict_dp && q.n() >= 2 {
                return Err(Error::Data(
                    "laplace-gs refused: the worst-case sensitivity of a join \
                     is infinite under strict differential privacy; drop \
                     --strict-dp to treat the instance size as public"
                        .into(),
                ));
            }
            gs_upper_agm(&q, public_size(&q, &inst))?.value
        }
    };
    let mut rec = release(count, sensitivity, args.epsilon, Some(beta), mechanism, args.seed)?;
    if !args.show_true {
        rec = rec.redacted();
    }
    eprintln!(
        "released {:.3} with scale {:.3} ({})",
        rec.released,
        rec.scale,
        mechanism.as_str()
    );
    let doc = serde_json::to_value(&rec).map_err(|e| Error::Internal(e.to_string()))?;
    emit(&doc, RELEASE_SCHEMA, args.out.as_deref())
}

#[derive(Debug, Clone, Deserialize)]
struct Manifest {
    datasets: Vec<Dataset>,
}

#[derive(Debug, Clone, Deserialize)]
struct Dataset {
    name: String,
    url: String,
    file: String,
    relation: String,
    format: String,
    arity: usize,
    sha256: String,
}

fn load_manifest(dir: &Path) -> Result<Manifest, Error> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Data(format!("bad manifest: {e}")))
}

struct BenchTask {
    dataset: String,
    query_name: String,
    query: Query,
    beta: f64,
    instance: std::sync::Arc<Instance>,
}

fn cmd_bench(args: BenchArgs) -> Result<(), Error> {
    let manifest = load_manifest(&args.data)?;
    let measures = parse_measures(&args.measures.replace("gs", "rs"))?;
    let betas: Vec<f64> = match &args.sweep_beta {
        Some(list) => list
            .split(',')
            .map(|b| {
                b.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Data(format!("bad beta '{b}' in sweep")))
            })
            .collect::<Result<_, _>>()?,
        None => vec![resolve_beta(args.epsilon, args.beta)?.0],
    };

    // Bundled queries, in stable name order.
    let mut query_files: Vec<PathBuf> = std::fs::read_dir(&args.queries)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", args.queries.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|x| x == "cq").unwrap_or(false))
        .collect();
    query_files.sort();
    if query_files.is_empty() {
        return Err(Error::Data(format!(
            "no .cq files in {}",
            args.queries.display()
        )));
    }

    let mut tasks: Vec<BenchTask> = Vec::new();
    for ds in &manifest.datasets {
        let path = args.data.join(&ds.file);
        if !path.exists() {
            eprintln!("notice: dataset {} missing ({}), skipped", ds.name, path.display());
            continue;
        }
        let mut inst = Instance::new();
        inst.load_relation(&path, parse_format(&ds.format)?, &ds.relation, ds.arity)?;
        let inst = std::sync::Arc::new(inst);
        for qf in &query_files {
            let query = load_query(qf)?;
            let query_name = qf
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            for &beta in &betas {
                tasks.push(BenchTask {
                    dataset: ds.name.clone(),
                    query_name: query_name.clone(),
                    query: query.clone(),
                    beta,
                    instance: inst.clone(),
                });
            }
        }
    }

    let guard = cli_guard(args.guard_tuples);
    let want_es = measures.iter().any(|m| m == "es");
    let want_ss = measures.iter().any(|m| m == "ss-oracle");
    let jobs = args.jobs.max(1);
    let next = Mutex::new(0usize);
    let rows: Mutex<Vec<(usize, Value)>> = Mutex::new(Vec::new());
    let worker = |_: usize| -> Result<(), Error> {
        loop {
            let i = {
                let mut n = next.lock().unwrap();
                let i = *n;
                *n += 1;
                i
            };
            let Some(task) = tasks.get(i) else { return Ok(()) };
            let row = bench_row(task, want_es, want_ss, &guard)?;
            rows.lock().unwrap().push((i, row));
        }
    };
    std::thread::scope(|s| -> Result<(), Error> {
        let handles: Vec<_> = (0..jobs).map(|w| s.spawn(move || worker(w))).collect();
        for h in handles {
            h.join().map_err(|_| Error::Internal("bench worker panicked".into()))??;
        }
        Ok(())
    })?;
    let mut rows = rows.into_inner().unwrap();
    rows.sort_by_key(|(i, _)| *i);

    let schema: Value = serde_json::from_str(BENCH_SCHEMA)
        .map_err(|e| Error::Internal(format!("bad embedded schema: {e}")))?;
    let mut lines = String::new();
    eprintln!(
        "{:<12} {:<14} {:>6} {:>12} {:>14} {:>14} {:>10}",
        "dataset", "query", "beta", "count", "rs", "es", "es/rs"
    );
    for (_, row) in &rows {
        schema::validate(&schema, row)
            .map_err(|e| Error::Internal(format!("bench row violates schema: {e}")))?;
        lines.push_str(&serde_json::to_string(row).map_err(|e| Error::Internal(e.to_string()))?);
        lines.push('\n');
        let fmt_opt = |v: &Value| match v.as_f64() {
            Some(x) => format!("{x:.1}"),
            None => "-".to_string(),
        };
        eprintln!(
            "{:<12} {:<14} {:>6} {:>12} {:>14.3} {:>14} {:>10}",
            row["dataset"].as_str().unwrap_or(""),
            row["query"].as_str().unwrap_or(""),
            row["beta"].as_f64().unwrap_or(0.0),
            row["count"].as_u64().unwrap_or(0),
            row["rs"].as_f64().unwrap_or(0.0),
            fmt_opt(&row["es"]),
            fmt_opt(&row["es_over_rs"]),
        );
    }
    match args.out.as_deref() {
        Some(path) => std::fs::write(path, lines)
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{lines}");
            Ok(())
        }
    }
}

fn bench_row(
    task: &BenchTask,
    want_es: bool,
    want_ss: bool,
    guard: &OracleGuard,
) -> Result<Value, Error> {
    let limits = EngineLimits {
        max_work: 4_000_000_000,
        ..EngineLimits::default()
    };
    let q = &task.query;
    let inst = task.instance.as_ref();

    let t0 = std::time::Instant::now();
    let count = eval_count(q, inst, &limits)?;
    let count_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = std::time::Instant::now();
    let opts = SensitivityOptions {
        beta: task.beta,
        epsilon: None,
        limits,
        extra_k: 0,
    };
    let rs = residual_sensitivity(q, inst, &opts)?.rs;
    let rs_ms = t1.elapsed().as_secs_f64() * 1e3;

    let mut es = None;
    let mut es_ms = None;
    if want_es {
        let t = std::time::Instant::now();
        es = Some(elastic_sensitivity(q, inst, task.beta)?);
        es_ms = Some(t.elapsed().as_secs_f64() * 1e3);
    }
    let mut ss = None;
    if want_ss {
        match oracle_ss(q, inst, task.beta, guard) {
            Ok(est) => ss = Some(est.value),
            Err(Error::Guard(msg)) => {
                eprintln!(
                    "notice: ss-oracle skipped for {}/{}: {msg}",
                    task.dataset, task.query_name
                );
            }
            Err(e) => return Err(e),
        }
    }

    let mut timings = json!({ "count": count_ms, "rs": rs_ms });
    if let Some(ms) = es_ms {
        timings["es"] = json!(ms);
    }
    Ok(json!({
        "dataset": task.dataset,
        "query": task.query_name,
        "beta": task.beta,
        "count": count,
        "rs": rs,
        "es": es,
        "ss_oracle": ss,
        "rs_over_ss": ss.map(|s| if s > 0.0 { rs / s } else { f64::NAN }).filter(|v| v.is_finite()),
        "es_over_rs": es.map(|e| if rs > 0.0 { e / rs } else { f64::NAN }).filter(|v| v.is_finite()),
        "timings_ms": timings,
    }))
}

fn cmd_fetch(args: FetchArgs) -> Result<(), Error> {
    let manifest = load_manifest(&args.data)?;
    for ds in &manifest.datasets {
        let dest = args.data.join(&ds.file);
        if dest.exists() {
            eprintln!("{} already present, skipped", ds.name);
            continue;
        }
        eprintln!("fetching {} from {}", ds.name, ds.url);
        let mut resp = ureq::get(&ds.url)
            .call()
            .map_err(|e| Error::Data(format!("download of {} failed: {e}", ds.url)))?;
        let mut raw = Vec::new();
        resp.body_mut()
            .as_reader()
            .read_to_end(&mut raw)
            .map_err(|e| Error::Data(format!("download of {} failed: {e}", ds.url)))?;
        let bytes = if ds.url.ends_with(".gz") {
            let mut out = Vec::new();
            flate2::read::GzDecoder::new(&raw[..])
                .read_to_end(&mut out)
                .map_err(|e| Error::Data(format!("cannot decompress {}: {e}", ds.name)))?;
            out
        } else {
            raw
        };
        let digest = {
            use sha2::{Digest, Sha256};
            let mut h = Sha256::new();
            h.update(&bytes);
            format!("{:x}", h.finalize())
        };
        if ds.sha256.is_empty() {
            eprintln!(
                "warning: no checksum pinned for {}; downloaded sha256 is {digest}",
                ds.name
            );
        } else if ds.sha256 != digest {
            return Err(Error::Data(format!(
                "checksum mismatch for {}: manifest {} vs downloaded {digest}; file discarded",
                ds.name, ds.sha256
            )));
        }
        std::fs::write(&dest, &bytes)
            .map_err(|e| Error::Data(format!("cannot write {}: {e}", dest.display())))?;
        eprintln!("wrote {} ({} bytes)", dest.display(), bytes.len());
    }
    Ok(())
}
