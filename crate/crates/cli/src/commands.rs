use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::Context;
use mvsk_core::moments::{
    crra_lambdas, estimate_moments_with_cap, write_moments, write_returns_csv, MvskSpec,
};
use mvsk_core::sca::{solve_mvsk, solve_tilting, Method, MvskOptions, TiltingOptions};
use mvsk_core::synthetic::generate_returns;
use mvsk_core::{FeasibleSet, MomentSet, SolveReport, Termination, TiltingSpec, Weights};

use crate::config::{usage, Kind, RunConfig};
use crate::data::{load_moments, max_assets, read_csv, synthetic_spec, Source};

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Runs `body` against `path`, or against stdout when `path` is absent.
fn with_output(
    path: Option<&Path>,
    body: impl FnOnce(&mut dyn Write) -> anyhow::Result<()>,
) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            body(&mut w)?;
            w.flush()
                .with_context(|| format!("cannot write {}", p.display()))?;
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            body(&mut w)?;
            w.flush()?;
        }
    }
    Ok(())
}

pub fn gen_data(cfg: &RunConfig) -> anyhow::Result<()> {
    let Some(n) = cfg.n_assets else {
        return usage("gen-data needs --n-assets");
    };
    let spec = synthetic_spec(cfg, n);
    spec.validate()
        .map_err(|e| crate::config::UsageError(e.to_string()))?;
    let r = generate_returns(&spec)?;
    with_output(cfg.out.as_deref(), |w| Ok(write_returns_csv(&r, w)?))
}

pub fn moments(cfg: &RunConfig) -> anyhow::Result<()> {
    let Some(input) = &cfg.input else {
        return usage("moments needs --input");
    };
    let Some(out) = &cfg.out else {
        return usage("moments needs --out");
    };
    let r = read_csv(input)?;
    let m = estimate_moments_with_cap(&r, max_assets(cfg))?;
    let mut w = create(out)?;
    write_moments(&m, &mut w)?;
    w.flush()?;
    let bytes = m.footprint_bytes();
    println!("N = {}", m.n_assets());
    println!("T = {}", r.n_obs());
    println!(
        "footprint = {bytes} bytes ({:.3} MiB)",
        bytes as f64 / (1024.0 * 1024.0)
    );
    Ok(())
}

fn mvsk_spec(cfg: &RunConfig) -> anyhow::Result<MvskSpec> {
    match &cfg.lambda {
        Some(l) => {
            let Ok(arr) = <[f64; 4]>::try_from(l.as_slice()) else {
                return usage(format!("lambda needs 4 values, got {}", l.len()));
            };
            Ok(MvskSpec::new(arr)?)
        }
        None => Ok(crra_lambdas(cfg.xi.unwrap_or(10.0))?),
    }
}

fn feasible_set(cfg: &RunConfig) -> anyhow::Result<FeasibleSet> {
    Ok(FeasibleSet::new(cfg.leverage.unwrap_or(1.0))?)
}

fn mvsk_options(cfg: &RunConfig) -> MvskOptions {
    let mut o = MvskOptions::default();
    if let Some(v) = cfg.max_iter {
        o.max_iter = v;
    }
    if let Some(v) = cfg.stop_tol {
        o.stop_tol = v;
    }
    if let Some(v) = cfg.sub_tol {
        o.sub_tol = v;
    }
    if let Some(v) = cfg.stat_tol {
        o.stat_tol = v;
    }
    o.tau_w = cfg.tau_w.or(o.tau_w);
    o
}

fn tilting_options(cfg: &RunConfig) -> TiltingOptions {
    let mut o = TiltingOptions::default();
    if let Some(v) = cfg.max_iter {
        o.max_iter = v;
    }
    if let Some(v) = cfg.stop_tol {
        o.stop_tol = v;
    }
    if let Some(v) = cfg.sub_tol {
        o.sub_tol = v;
    }
    if let Some(v) = cfg.stat_tol {
        o.stat_tol = v;
    }
    o
}

fn tilting_spec(cfg: &RunConfig, m: &MomentSet) -> anyhow::Result<TiltingSpec> {
    let n = m.n_assets();
    let w0 = match &cfg.w0 {
        Some(w) if w.len() != n => {
            return usage(format!("w0 has {} entries for {n} assets", w.len()))
        }
        Some(w) => Weights(w.clone()),
        None => Weights::equal(n),
    };
    let mut t = TiltingSpec::new(m, w0, cfg.c.unwrap_or(1.0))?;
    if let Some(v) = cfg.theta {
        t.theta = v;
    }
    if let Some(v) = cfg.tau_w {
        t.tau_w = v;
    }
    if let Some(v) = cfg.tau_delta {
        t.tau_delta = v;
    }
    Ok(t)
}

/// Problem setup that does not depend on the data, checked before any
/// compute.
struct Plan {
    method: Method,
    kind: Kind,
    fs: FeasibleSet,
    spec: Option<MvskSpec>,
}

fn plan(cfg: &RunConfig, method: Method) -> anyhow::Result<Plan> {
    cfg.check_tolerances()?;
    let kind = Kind::of(method);
    let spec = match kind {
        Kind::Mvsk => Some(mvsk_spec(cfg)?),
        Kind::Tilting => None,
    };
    Ok(Plan {
        method,
        kind,
        fs: feasible_set(cfg)?,
        spec,
    })
}

fn run(cfg: &RunConfig, plan: &Plan, m: &MomentSet) -> anyhow::Result<SolveReport> {
    match (plan.kind, &plan.spec) {
        (Kind::Mvsk, Some(spec)) => Ok(solve_mvsk(
            plan.method,
            m,
            spec,
            &plan.fs,
            &mvsk_options(cfg),
        )?),
        _ => {
            let tilt = tilting_spec(cfg, m)?;
            Ok(solve_tilting(
                plan.method,
                m,
                &tilt,
                &plan.fs,
                &tilting_options(cfg),
            )?)
        }
    }
}

/// Zeroes wall-clock fields so repeated runs give identical files.
fn strip_timing(r: &mut SolveReport) {
    r.wall_ms = 0.0;
    for rec in &mut r.trace {
        rec.wall_ms = 0.0;
    }
}

pub fn solve(cfg: &RunConfig) -> anyhow::Result<Termination> {
    let (method, _) = cfg.method_and_kind()?;
    let plan = plan(cfg, method)?;
    let (m, source) = load_moments(cfg)?;
    let mut report = run(cfg, &plan, &m)?;
    if !cfg.timing() {
        strip_timing(&mut report);
    }

    let json = report.to_json()?;
    with_output(cfg.report.as_deref(), |w| Ok(writeln!(w, "{json}")?))?;
    if let Some(path) = &cfg.trace {
        let mut w = create(path)?;
        report.write_trace_csv(&mut w)?;
        w.flush()?;
    }
    let t = match source {
        Source::Binary => String::new(),
        Source::Csv { n_obs } | Source::Synthetic { n_obs } => format!(", T = {n_obs}"),
    };
    eprintln!(
        "{method}: {:?} after {} iterations (N = {}{t}), objective {:.6e}, max violation {:.2e}, stationarity {:.2e}",
        report.termination,
        report.iterations,
        m.n_assets(),
        report.objective_final,
        report.max_violation,
        report.stationarity,
    );
    Ok(report.termination)
}

struct RunRow {
    n: usize,
    method: Method,
    seed: u64,
    moments_ms: f64,
    outcome: Result<SolveReport, String>,
}

impl RunRow {
    fn status(&self) -> &'static str {
        match &self.outcome {
            Ok(r) if r.converged() => "converged",
            Ok(_) => "max_iter",
            Err(_) => "error",
        }
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[k]
    } else {
        0.5 * (v[k - 1] + v[k])
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn bench(cfg: &RunConfig) -> anyhow::Result<()> {
    let sizes = cfg.sizes.clone().unwrap_or_else(|| vec![10, 20]);
    let methods = cfg
        .methods
        .clone()
        .unwrap_or_else(|| vec![Method::Dc, Method::Mm, Method::Qmvsk]);
    let reps = cfg.reps.unwrap_or(5);
    if sizes.is_empty() || methods.is_empty() || reps == 0 {
        return usage("bench needs at least one size, one method and one repetition");
    }
    if let Some(k) = cfg.kind {
        if let Some(m) = methods.iter().find(|m| Kind::of(**m) != k) {
            return usage(format!("method {m} does not solve the {k} problem"));
        }
    }
    let plans = methods
        .iter()
        .map(|m| plan(cfg, *m))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let base_seed = cfg.seed.unwrap_or(0);
    let cap = max_assets(cfg);

    let mut rows = Vec::new();
    for &n in &sizes {
        for rep in 0..reps as u64 {
            // the same instance is shared by every method
            let seed = base_seed + rep;
            let mut spec = synthetic_spec(cfg, n);
            spec.seed = seed;
            let mut moments_ms = 0.0;
            let data = generate_returns(&spec).and_then(|r| {
                let start = Instant::now();
                let m = estimate_moments_with_cap(&r, cap);
                moments_ms = start.elapsed().as_secs_f64() * 1e3;
                m
            });
            for plan in &plans {
                let outcome = match &data {
                    Ok(m) => run(cfg, plan, m).map_err(|e| format!("{e:#}")),
                    Err(e) => Err(e.to_string()),
                };
                rows.push(RunRow {
                    n,
                    method: plan.method,
                    seed,
                    moments_ms,
                    outcome,
                });
            }
        }
    }
    rows.sort_by_key(|r| (r.n, r.method, r.seed));

    if let Some(path) = &cfg.runs {
        let mut w = create(path)?;
        writeln!(w, "n,method,seed,status,wall_ms,iterations,objective,max_violation,stationarity,moments_ms,message")?;
        for r in &rows {
            let fields = match &r.outcome {
                Ok(s) => format!(
                    "{},{},{},{},{},",
                    s.wall_ms, s.iterations, s.objective_final, s.max_violation, s.stationarity
                ),
                Err(_) => ",,,,,".to_string(),
            };
            let msg = r
                .outcome
                .as_ref()
                .err()
                .map(|e| csv_text(e))
                .unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{fields}{},{msg}",
                r.n,
                r.method,
                r.seed,
                r.status(),
                r.moments_ms
            )?;
        }
        w.flush()?;
    }

    with_output(cfg.out.as_deref(), |w| {
        writeln!(
            w,
            "n,method,reps,converged,max_iter,failed,median_wall_ms,median_iterations,median_objective,median_moments_ms,status"
        )?;
        for group in rows.chunk_by(|a, b| (a.n, a.method) == (b.n, b.method)) {
            let count = |s: &str| group.iter().filter(|r| r.status() == s).count();
            let (conv, maxit, failed) = (count("converged"), count("max_iter"), count("error"));
            let ok: Vec<&SolveReport> = group
                .iter()
                .filter_map(|r| r.outcome.as_ref().ok())
                .collect();
            let status = if failed > 0 {
                "failed"
            } else if maxit > 0 {
                "max_iter"
            } else {
                "ok"
            };
            writeln!(
                w,
                "{},{},{},{conv},{maxit},{failed},{},{},{},{},{status}",
                group[0].n,
                group[0].method,
                group.len(),
                cell(median(ok.iter().map(|r| r.wall_ms).collect())),
                cell(median(ok.iter().map(|r| r.iterations as f64).collect())),
                cell(median(ok.iter().map(|r| r.objective_final).collect())),
                cell(median(group.iter().map(|r| r.moments_ms).collect())),
            )?;
        }
        Ok(())
    })
}

/// Quotes a free-text CSV field.
fn csv_text(s: &str) -> String {
    format!("\"{}\"", s.replace('"', "\"\"").replace(['\n', '\r'], " "))
}
