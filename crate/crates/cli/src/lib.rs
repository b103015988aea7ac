//! Command implementations behind the `syracuse` binary.

pub mod args;
pub mod cache;

use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use anyhow::Context;
use rayon::prelude::*;
use rug::{Integer, Rational};
use serde::Serialize;
use serde_json::{json, Value};
use syracuse::attractors::reference::{self, ATTRACTOR_MULTIPLIERS};
use syracuse::attractors::{
    f_integer, integer_cycle_multiplier, integer_cycle_through, registry, scan_one, AttractorLabel, Caps, ScanLine,
    ScanSummary,
};
use syracuse::critical::{critical_point_to_bits, digits_to_bits, write_critical_csv};
use syracuse::integer::{flight_rows, flight_time_stats, inverse_tree, range_verify_with_cap, write_flight_csv, FlightStats};
use syracuse::maps::{f, schwarzian};
use syracuse::rigor::{self, summarize, Certificate};
use syracuse::stats::{crandall_product, growth_experiment, star_discrepancy, tau_constant, write_growth_csv, SampleSpec};
use syracuse::{Ball, PrecisionPolicy};

use args::*;
use cache::{ScanCache, ScanConfig};

/// Failures reported with exit status 1 and a JSON error record.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid arguments: {0}")]
    Usage(String),
    #[error("{failed} of {total} certificates not certified")]
    VerificationFailed { failed: usize, total: usize },
    #[error("{0} attractor mismatches against the reference lists")]
    ListMismatch(usize),
    #[error("{0} scan indices failed")]
    ScanFailures(usize),
}

/// Machine-readable category of an error.
pub fn error_kind(err: &anyhow::Error) -> &'static str {
    if let Some(e) = err.downcast_ref::<CliError>() {
        return match e {
            CliError::Usage(_) => "usage",
            CliError::VerificationFailed { .. } => "verification_failed",
            CliError::ListMismatch(_) => "list_mismatch",
            CliError::ScanFailures(_) => "scan_failures",
        };
    }
    if let Some(e) = err.downcast_ref::<cache::CacheError>() {
        return match e {
            cache::CacheError::ConfigMismatch { .. } => "config_mismatch",
            cache::CacheError::Format { .. } => "cache_format",
            cache::CacheError::Corrupt { .. } => "cache_corrupt",
            cache::CacheError::Io(_) => "io",
        };
    }
    if let Some(e) = err.downcast_ref::<syracuse::Error>() {
        use syracuse::Error::*;
        return match e {
            EscalationExhausted { .. } => "escalation_exhausted",
            CapExceeded { .. } => "cap_exceeded",
            PreconditionViolated(_) => "precondition_violated",
            Parse(_) | InvalidArgument(_) | Domain(_) | InvalidPolicy(_) => "invalid_input",
            Io(_) | Json(_) | Csv(_) => "io",
            _ => "computation",
        };
    }
    if err.downcast_ref::<io::Error>().is_some() {
        return "io";
    }
    "computation"
}

pub fn error_report(err: &anyhow::Error) -> Value {
    json!({
        "error": error_kind(err),
        "message": err.to_string(),
        "causes": err.chain().skip(1).map(|c| c.to_string()).collect::<Vec<_>>(),
    })
}

fn policy(g: &GlobalOpts) -> anyhow::Result<PrecisionPolicy> {
    let p = PrecisionPolicy {
        start_bits: g.start_bits,
        max_bits: g.max_bits,
        agreement_digits: g.agreement_digits,
        ..PrecisionPolicy::default()
    };
    p.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(p)
}

/// Configuration recorded next to every output.
fn run_config(cli: &Cli) -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "precision": cli.global,
        "run": cli.command,
    })
}

fn write_text(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_json(out: Option<&Path>, value: &impl Serialize) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(out, &text)
}

/// Writes the run configuration beside a data file as `<file>.config.json`.
fn write_sidecar(path: &Path, config: &Value) -> anyhow::Result<()> {
    let mut name = path.as_os_str().to_owned();
    name.push(".config.json");
    write_json(Some(Path::new(&name)), config)
}

/// Runs a parsed command line and returns the process exit status.
pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(w) = cli.global.workers {
        if w == 0 {
            return Err(CliError::Usage("--workers must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new().num_threads(w).build_global().ok();
    }
    let pol = policy(&cli.global)?;
    let config = run_config(&cli);
    match &cli.command {
        Command::Orbit(a) => orbit(a, &pol),
        Command::Flight(a) => flight(a, &config),
        Command::Tree(a) => tree(a),
        Command::Critical(a) => critical(a, &pol, &config),
        Command::Scan(a) => scan(a, &pol),
        Command::Verify(a) => verify(a, &pol, &config),
        Command::Stats(a) => stats(&a.mode, &pol, &config),
        Command::Table1(a) => table1(a),
        Command::Paperlists(a) => reference_lists(a, &pol),
    }
}

fn orbit(a: &OrbitArgs, pol: &PrecisionPolicy) -> anyhow::Result<()> {
    if let (false, Ok(n)) = (a.real, a.start.trim().parse::<Integer>()) {
        let mut values = vec![n];
        for _ in 0..a.steps {
            let next = f_integer(values.last().expect("nonempty"));
            values.push(next);
        }
        let line: Vec<String> = values.iter().map(Integer::to_string).collect();
        return write_text(None, &format!("{}\n", line.join(" ")));
    }
    let mut x = Ball::parse(pol.start_bits, &a.start)?;
    let mut rows = Vec::with_capacity(a.steps + 1);
    for k in 0..=a.steps {
        rows.push(json!({ "k": k, "value": x.to_decimal(a.digits), "radius_log2": x.rad_log2() }));
        x = f(&x);
    }
    write_json(None, &json!({ "start": a.start, "bits": pol.start_bits, "orbit": rows }))
}

#[derive(Serialize)]
struct FlightReport {
    from: u64,
    to: u64,
    stats: FlightStats,
    #[serde(skip_serializing_if = "Option::is_none")]
    range_verify: Option<syracuse::integer::RangeReport>,
}

fn flight(a: &FlightArgs, config: &Value) -> anyhow::Result<()> {
    if a.from < 1 || a.from >= a.to {
        return Err(CliError::Usage(format!("need 1 <= from < to, got {}..{}", a.from, a.to)).into());
    }
    let stats = flight_time_stats(a.from..a.to, a.cap)?;
    if let Some(p) = &a.csv {
        let rows = flight_rows(a.from..a.to, a.cap)?;
        write_flight_csv(&rows, BufWriter::new(File::create(p)?))?;
        write_sidecar(p, config)?;
    }
    let range_verify = a.range_verify.map(|l| range_verify_with_cap(l, a.cap)).transpose()?;
    write_json(None, &FlightReport { from: a.from, to: a.to, stats, range_verify })
}

fn tree(a: &TreeArgs) -> anyhow::Result<()> {
    let t = inverse_tree(a.depth)?;
    let text = match a.format {
        TreeFormat::Dot => t.to_dot(),
        TreeFormat::Json => t.to_json()? + "\n",
    };
    write_text(a.out.as_deref(), &text)
}

fn critical(a: &CriticalArgs, pol: &PrecisionPolicy, config: &Value) -> anyhow::Result<()> {
    let mut ns = a.n.clone();
    match (a.from, a.to) {
        (Some(lo), Some(hi)) if lo <= hi => ns.extend(lo..=hi),
        (None, None) => {}
        _ => return Err(CliError::Usage("--from and --to must be given together with from <= to".into()).into()),
    }
    ns.retain(|&n| n != 0);
    ns.sort_unstable();
    ns.dedup();
    if ns.is_empty() {
        return Err(CliError::Usage("no nonzero indices requested".into()).into());
    }
    let target = digits_to_bits(a.digits as u32 + 4).max(pol.start_bits);
    let points = ns
        .par_iter()
        .map(|&n| critical_point_to_bits(n, target, &pol.with_start(target)))
        .collect::<syracuse::Result<Vec<_>>>()?;
    let mut buf = Vec::new();
    write_critical_csv(&points, a.digits, &mut buf)?;
    if let Some(p) = &a.out {
        write_sidecar(p, config)?;
    }
    write_text(a.out.as_deref(), std::str::from_utf8(&buf)?)
}

/// Default cache location for a scan side.
pub fn default_cache(side: ScanSide) -> PathBuf {
    let dir = std::env::var_os("SYRACUSE_CACHE_DIR").map_or_else(|| PathBuf::from("."), PathBuf::from);
    dir.join(format!("scan-{}.jsonl", side.name()))
}

#[derive(Serialize)]
struct ScanOutput {
    format: &'static str,
    config_hash: String,
    config: ScanConfig,
    side: &'static str,
    from: i64,
    to: i64,
    reused: usize,
    computed: usize,
    truncated_bytes: u64,
    summary: ScanSummary,
    failures: Vec<Value>,
}

/// Fills the cache for the requested range and returns the records of that
/// range, sorted by `n`.
fn run_scan(
    side: ScanSide,
    from: i64,
    to: i64,
    cache_path: &Path,
    force: bool,
    pol: &PrecisionPolicy,
    caps: Caps,
) -> anyhow::Result<(ScanOutput, Vec<ScanLine>)> {
    if from < 1 || from > to {
        return Err(CliError::Usage(format!("need 1 <= from <= to, got {from}..{to}")).into());
    }
    let config = ScanConfig { side: side.name().into(), policy: pol.clone(), caps };
    let mut store = ScanCache::open(cache_path, &config, force)?;
    let truncated_bytes = store.truncated_bytes;
    let wanted = side.indices(from, to);
    let todo: Vec<i64> = wanted.iter().copied().filter(|&n| !store.contains(n)).collect();
    let reused = wanted.len() - todo.len();
    log::info!("scan {}: {} cached, {} to compute", side.name(), reused, todo.len());

    let (tx, rx) = mpsc::channel();
    let mut failures = Vec::new();
    let mut computed = 0;
    std::thread::scope(|s| -> anyhow::Result<()> {
        s.spawn(|| {
            todo.par_iter().for_each_with(tx, |tx, &n| {
                let _ = tx.send((n, scan_one(n, pol, &caps)));
            })
        });
        for (n, result) in rx {
            match result {
                Ok(rec) => {
                    store.append(&rec.line())?;
                    computed += 1;
                }
                Err(e) => failures.push(json!({ "n": n, "error": e.to_string() })),
            }
        }
        Ok(())
    })?;

    let header = store.header().clone();
    let all = store.finalize()?;
    let wanted: BTreeSet<i64> = wanted.into_iter().collect();
    let lines: Vec<ScanLine> = all.into_iter().filter(|l| wanted.contains(&l.n)).collect();
    failures.sort_by_key(|v| v["n"].as_i64());
    let mut summary = ScanSummary::from_lines(&lines);
    summary.errors = failures.iter().filter_map(|v| v["n"].as_i64()).collect();
    let out = ScanOutput {
        format: cache::FORMAT_VERSION,
        config_hash: header.config_hash,
        config: header.config,
        side: side.name(),
        from,
        to,
        reused,
        computed,
        truncated_bytes,
        summary,
        failures,
    };
    Ok((out, lines))
}

fn scan(a: &ScanArgs, pol: &PrecisionPolicy) -> anyhow::Result<()> {
    let caps = Caps { max_iter: a.max_iter, max_magnitude: a.max_magnitude };
    let path = a.cache.clone().unwrap_or_else(|| default_cache(a.side));
    let (out, _) = run_scan(a.side, a.from, a.to, &path, a.force, pol, caps)?;
    write_json(a.summary.as_deref(), &out)?;
    if !out.failures.is_empty() {
        return Err(CliError::ScanFailures(out.failures.len()).into());
    }
    Ok(())
}

fn parse_rational(s: &str) -> anyhow::Result<Rational> {
    s.trim().parse::<Rational>().map_err(|e| CliError::Usage(format!("--a {s:?}: {e}")).into())
}

fn verify(a: &VerifyArgs, pol: &PrecisionPolicy, config: &Value) -> anyhow::Result<()> {
    if a.n_max < 1 {
        return Err(CliError::Usage("--n-max must be positive".into()).into());
    }
    let width = parse_rational(&a.a)?;
    let mut certs: Vec<Certificate> = Vec::new();
    let all = a.suite == Suite::All;
    if all || a.suite == Suite::Brackets {
        certs.extend(rigor::verify_brackets(1..=a.n_max, pol)?);
    }
    if all || a.suite == Suite::Inclusions {
        certs.extend(rigor::verify_inclusions(1..=a.n_max, &width, pol)?);
    }
    if all || a.suite == Suite::Invariant {
        certs.extend(rigor::verify_invariant_intervals(pol)?);
    }
    if all || a.suite == Suite::Images {
        certs.extend(rigor::verify_image_chains(pol)?.0);
    }
    let claims = summarize(&certs);
    let failed = certs.iter().filter(|c| !c.is_certified()).count();
    if let Some(p) = &a.out {
        write_json(Some(p), &json!({ "config": config, "certificates": certs }))?;
    }
    write_json(None, &json!({ "total": certs.len(), "not_certified": failed, "claims": claims }))?;
    if a.strict && failed > 0 {
        return Err(CliError::VerificationFailed { failed, total: certs.len() }.into());
    }
    Ok(())
}

fn stats(mode: &StatsMode, pol: &PrecisionPolicy, config: &Value) -> anyhow::Result<()> {
    match mode {
        StatsMode::Tau { bits } => {
            let t = tau_constant(*bits)?;
            let diff = rug::Float::with_val(*bits, &t.quadrature - t.tau.mid()).abs();
            write_json(
                None,
                &json!({
                    "bits": bits,
                    "tau": t.tau.to_decimal(30),
                    "tau_radius_log2": t.tau.rad_log2(),
                    "quadrature": rug::Float::with_val(*bits, &t.quadrature).to_string_radix(10, Some(30)),
                    "quadrature_points": t.quadrature_points,
                    "difference": diff.to_f64(),
                    "ln_tau": t.ln_tau(),
                }),
            )
        }
        StatsMode::Crandall { k } => {
            let v = crandall_product(*k)?;
            write_json(None, &json!({ "k": k, "product": v, "limit": 0.75, "difference": v - 0.75 }))
        }
        StatsMode::Discrepancy { input, a, b } => {
            let reader = BufReader::new(File::open(input).with_context(|| format!("opening {}", input.display()))?);
            let mut points = Vec::new();
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                let t = line.trim();
                if t.is_empty() {
                    continue;
                }
                points.push(t.parse::<f64>().with_context(|| format!("{}:{}", input.display(), i + 1))?);
            }
            let d = star_discrepancy(&points, *a, *b)?;
            write_json(None, &json!({ "count": points.len(), "a": a, "b": b, "star_discrepancy": d }))
        }
        StatsMode::Schwarzian { x } => {
            let b = Ball::parse(pol.start_bits, x)?;
            let s = schwarzian(&b)?;
            write_json(None, &json!({ "x": x, "bits": pol.start_bits, "schwarzian": s.to_decimal(20), "radius_log2": s.rad_log2() }))
        }
        StatsMode::Growth { x_lo, x_hi, steps, count, seed, integer, ud_threshold, csv } => {
            let spec =
                SampleSpec { x_lo: *x_lo, x_hi: *x_hi, n_steps: *steps, count: *count, seed: *seed, integer_starts: *integer };
            let report = growth_experiment(&spec, pol, *ud_threshold)?;
            if let Some(p) = csv {
                write_growth_csv(&report.rows, BufWriter::new(File::create(p)?))?;
                write_sidecar(p, config)?;
            }
            write_json(None, &json!({ "spec": spec, "bits": pol.start_bits, "summary": report.summary }))
        }
    }
}

#[derive(Serialize)]
struct TableRow {
    label: AttractorLabel,
    period: usize,
    anchor: String,
    multiplier: String,
    multiplier_radius_log2: Option<i64>,
    bits: u32,
    reference: f64,
    difference: f64,
    matches: bool,
}

fn table1(a: &Table1Args) -> anyhow::Result<()> {
    let reg = registry()?;
    let mut rows = Vec::new();
    for (label, reference) in ATTRACTOR_MULTIPLIERS {
        let att = reg.iter().find(|x| x.label == label).expect("registry has every label");
        let diff = (att.multiplier.to_f64() - reference).abs();
        rows.push(TableRow {
            label,
            period: att.period,
            anchor: att.anchor().to_decimal(15),
            multiplier: att.multiplier.to_decimal(12),
            multiplier_radius_log2: att.multiplier.rad_log2(),
            bits: att.multiplier.prec(),
            reference,
            difference: diff,
            matches: diff <= 1e-6,
        });
    }
    let mut cycles = Vec::new();
    for (n, (p, q)) in reference::INTEGER_CYCLE_MULTIPLIERS {
        let cycle = integer_cycle_through(n, 64).ok_or_else(|| anyhow::anyhow!("{n} is not on a short cycle"))?;
        let m = integer_cycle_multiplier(&cycle)?;
        cycles.push(json!({
            "through": n,
            "period": cycle.len(),
            "multiplier": m.to_string(),
            "reference": format!("{p}/{q}"),
            "matches": m == Rational::from((p, q)),
        }));
    }
    if a.json {
        return write_json(None, &json!({ "attractors": rows, "integer_cycles": cycles }));
    }
    let mut text = format!("{:<6} {:>6} {:>20} {:>16} {:>10} {}\n", "label", "period", "anchor", "multiplier", "reference", "match");
    for r in &rows {
        text += &format!(
            "{:<6} {:>6} {:>20} {:>16} {:>10} {}\n",
            r.label.name(),
            r.period,
            r.anchor,
            r.multiplier,
            r.reference,
            if r.matches { "yes" } else { "no" }
        );
    }
    for c in &cycles {
        text += &format!("integer cycle through {}: multiplier {} (reference {})\n", c["through"], c["multiplier"].as_str().unwrap_or(""), c["reference"].as_str().unwrap_or(""));
    }
    write_text(None, &text)
}

#[derive(Serialize)]
struct Mismatch {
    n: i64,
    expected: String,
    computed: String,
}

fn reference_lists(a: &ListsArgs, pol: &PrecisionPolicy) -> anyhow::Result<()> {
    if a.max < 1 {
        return Err(CliError::Usage("--max must be positive".into()).into());
    }
    let path = match &a.cache {
        Some(p) => p.clone(),
        None => default_cache(a.side),
    };
    let (out, lines) = run_scan(a.side, 1, a.max, &path, a.force, pol, Caps::default())?;
    let mut mismatches = Vec::new();
    for l in &lines {
        let expected = match a.side {
            ScanSide::Positive => reference::positive_expected(l.n),
            ScanSide::Negative => reference::negative_expected(l.n)?,
        };
        if l.label != expected.name() {
            mismatches.push(Mismatch { n: l.n, expected: expected.name().into(), computed: l.label.clone() });
        }
    }
    let mut report = json!({
        "side": a.side.name(),
        "max": a.max,
        "config_hash": out.config_hash,
        "compared": lines.len(),
        "mismatches": mismatches,
        "failures": out.failures,
    });
    match a.side {
        ScanSide::Positive => {
            report["reference_range_end"] = json!(reference::POSITIVE_RANGE_END);
            let end = a.max.min(reference::NOT_PROCHE_PREFIX_END);
            let expected: BTreeSet<i64> = reference::expected_not_proche(end).into_iter().collect();
            let computed: BTreeSet<i64> = out.summary.not_proche.iter().copied().filter(|&n| n <= end).collect();
            report["not_proche"] = json!({
                "compared_up_to": end,
                "missing": expected.difference(&computed).collect::<Vec<_>>(),
                "extra": computed.difference(&expected).collect::<Vec<_>>(),
            });
        }
        ScanSide::Negative => {
            report["reference_range_end"] = json!(reference::NEGATIVE_RANGE_START);
        }
    }
    let count = report["mismatches"].as_array().map_or(0, Vec::len);
    write_json(None, &report)?;
    if !out.failures.is_empty() {
        return Err(CliError::ScanFailures(out.failures.len()).into());
    }
    if a.strict && count > 0 {
        return Err(CliError::ListMismatch(count).into());
    }
    Ok(())
}
