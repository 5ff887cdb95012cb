//! One function per subcommand; each returns whether the run succeeded.

use std::path::Path;

use anyhow::{Context, Result};
use lozenge_core::fluctuations::{gff_gap_table, moment_report, MomentMode, MomentReport};
use lozenge_core::limit_shape::{burgers_residual, frozen_boundary_curve, solve_w, Action};
use lozenge_core::oracle::gt_dimension;
use lozenge_core::oracle::suite::{self, CheckReport, Status, SuiteOptions};
use lozenge_core::oracle::ParticleArray;
use lozenge_core::polygon::scale;
use lozenge_core::sampler::{rng_for, sample_batch};
use lozenge_core::{KernelEngine, LozengeType};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{self, usage, Config};
use crate::output::{csv_writer, emit, fraction_parts, line, Manifest};
use crate::render::{render_frozen_boundary, render_tiling};
use crate::{
    FrozenBoundaryArgs, KernelArgs, LimitShapeArgs, Mode, MomentsArgs, RenderArgs, SampleArgs, Theta, ValidateArgs,
    VerifyArgs,
};

fn seed_or_fresh(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        eprintln!("seed: {s}");
        s
    })
}

pub fn validate(args: &ValidateArgs) -> Result<bool> {
    let (cfg, _) = Config::load(&args.config)?;
    match cfg {
        Config::Lattice(spec) => match spec.validate() {
            Ok(()) => {
                let top = spec.top_row()?;
                line(format!("valid: N={} k={} top row {:?}, {} tilings", spec.n, spec.k(), top, gt_dimension(&top)))?;
                Ok(true)
            }
            Err(v) => {
                line(format!("invalid: {v}"))?;
                Ok(false)
            }
        },
        Config::Limit(lp) => {
            if let Err(e) = lp.validate() {
                line(format!("invalid: {e}"))?;
                return Ok(false);
            }
            line(format!("valid limit polygon: k={}", lp.k()))?;
            if let Some(n) = args.n {
                match scale(&lp, n) {
                    Ok(spec) => line(format!(
                        "N={n}: A={:?} B={:?}",
                        spec.a.iter().map(|h| h.to_string()).collect::<Vec<_>>(),
                        spec.b.iter().map(|h| h.to_string()).collect::<Vec<_>>()
                    ))?,
                    Err(e) => {
                        line(format!("invalid at N={n}: {e}"))?;
                        return Ok(false);
                    }
                }
            }
            Ok(true)
        }
    }
}

fn lozenge(theta: Theta) -> LozengeType {
    match theta {
        Theta::V => LozengeType::V,
        Theta::S => LozengeType::S,
        Theta::L => LozengeType::L,
    }
}

/// `x1,n1,x2,n2` rows; a first row that does not parse is taken as a header.
fn read_points(path: &Path) -> Result<Vec<[i64; 4]>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(e) => return usage(format!("{}: {e}", path.display())),
        };
        let parsed: Option<Vec<i64>> = record.iter().map(|f| f.parse().ok()).collect();
        match parsed {
            Some(v) if v.len() == 4 => rows.push([v[0], v[1], v[2], v[3]]),
            None if i == 0 => continue,
            _ => return usage(format!("{} line {}: expected x1,n1,x2,n2", path.display(), i + 1)),
        }
    }
    Ok(rows)
}

pub fn kernel(args: &KernelArgs) -> Result<bool> {
    let (cfg, bytes) = Config::load(&args.config)?;
    let spec = cfg.lattice()?;
    let engine = KernelEngine::new(spec)?;
    let theta = args.theta.map(lozenge).unwrap_or(LozengeType::V);
    let eval = |[x1, n1, x2, n2]: [i64; 4]| engine.extended(x1, n1, x2, n2, theta);
    if let Some(points) = &args.points {
        let rows = read_points(points)?;
        let values = rows.par_iter().map(|&r| eval(r)).collect::<lozenge_core::Result<Vec<_>>>()?;
        let mut w = csv_writer(args.out.as_deref())?;
        w.write_record(["x1", "n1", "x2", "n2", "value_num", "value_den", "value_f64"])?;
        for (r, v) in rows.iter().zip(&values) {
            let (num, den, f) = fraction_parts(v);
            let mut rec: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            rec.extend([num, den, f.to_string()]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        if let Some(out) = &args.out {
            Manifest::new("kernel", Some((&args.config, &bytes)), None).write_beside(out)?;
        }
        return Ok(true);
    }
    let (Some(x1), Some(n1), Some(x2), Some(n2)) = (args.x1, args.n1, args.x2, args.n2) else {
        return usage("give --x1 --n1 --x2 --n2, or --points FILE");
    };
    let v = eval([x1, n1, x2, n2])?;
    let (num, den, f) = fraction_parts(&v);
    let label = if args.theta.is_some() { format!(" [{theta}]") } else { String::new() };
    line(format!("K({x1},{n1}; {x2},{n2}){label} = {num}/{den} = {f}"))?;
    Ok(true)
}

pub fn sample(args: &SampleArgs) -> Result<bool> {
    let (cfg, bytes) = Config::load(&args.config)?;
    let spec = cfg.lattice()?;
    let seed = seed_or_fresh(args.seed);
    let batch = sample_batch(spec, seed, args.n)?;
    let mut lines = String::new();
    for (i, arr) in batch.arrays.iter().enumerate() {
        lines += &serde_json::to_string(&json!({ "index": i, "rows": arr.rows }))?;
        lines.push('\n');
    }
    emit(args.out.as_deref(), &lines)?;
    let manifest = Manifest::new("sample", Some((&args.config, &bytes)), Some(seed));
    if let Some(dir) = &args.svg {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let lp = cfg.limit();
        let overlay = args.overlay.then_some((&lp, 1000));
        for (i, arr) in batch.arrays.iter().enumerate() {
            let path = dir.join(format!("sample_{i:05}.svg"));
            std::fs::write(&path, render_tiling(spec, arr, overlay))
                .with_context(|| format!("writing {}", path.display()))?;
        }
        manifest.write_beside(dir)?;
    }
    if let Some(out) = &args.out {
        manifest.write_beside(out)?;
    }
    Ok(true)
}

pub fn moments(args: &MomentsArgs) -> Result<bool> {
    let Some(path) = args.config.as_ref().or(args.limit_config.as_ref()) else {
        return usage("give --config or --limit-config");
    };
    let (cfg, bytes) = Config::load(path)?;
    let points: Vec<(f64, f64)> = config::pairs(&args.points)?;
    if points.is_empty() {
        return usage("--points needs at least one chi,eta pair");
    }
    let n_list = args.n_list.as_deref().map(config::list).transpose()?;
    let seed = matches!(args.mode, Mode::Mc).then(|| seed_or_fresh(args.seed));
    let mode = match seed {
        Some(seed) => MomentMode::MonteCarlo { n_samples: args.samples, seed },
        None => MomentMode::Exact,
    };
    let lp = cfg.limit();
    let reports: Vec<MomentReport> = match &cfg {
        Config::Lattice(spec) => {
            if n_list.as_ref().is_some_and(|l| l.as_slice() != [spec.n]) {
                return usage("a lattice config fixes N; use --limit-config for an N sweep");
            }
            vec![moment_report(spec, &lp, &points, &mode)?]
        }
        Config::Limit(_) => {
            let Some(n_list) = n_list else {
                return usage("a limit polygon needs --N-list");
            };
            gff_gap_table(&lp, &points, &n_list, &mode)?
        }
    };
    let mut w = csv_writer(args.out.as_deref())?;
    w.write_record(["N", "s", "moment", "prediction", "gap", "moment_exact", "std_error"])?;
    for r in &reports {
        w.write_record([
            r.n.to_string(),
            r.s().to_string(),
            r.moment.to_string(),
            r.gff_prediction.to_string(),
            r.scaled_gap.to_string(),
            r.exact_moment.clone().unwrap_or_default(),
            r.std_error.map(|e| e.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    if reports.len() >= 2 {
        let xs: Vec<f64> = reports.iter().map(|r| r.n as f64).collect();
        let ys: Vec<f64> = reports.iter().map(|r| r.scaled_gap).collect();
        eprintln!("gap regression slope: {:e}", lozenge_core::fluctuations::regression_slope(&xs, &ys));
    }
    if let Some(out) = &args.out {
        Manifest::new("moments", Some((path, &bytes)), seed).write_beside(out)?;
    }
    Ok(true)
}

fn frozen_csv(lp: &lozenge_core::LimitPolygon, samples: usize, out: Option<&Path>) -> Result<()> {
    let mut w = csv_writer(out)?;
    w.write_record(["w", "chi", "eta"])?;
    for p in frozen_boundary_curve(lp, samples) {
        w.write_record([p.w.to_string(), p.chi.to_string(), p.eta.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn limit_shape(args: &LimitShapeArgs) -> Result<bool> {
    let (cfg, bytes) = Config::load(&args.config)?;
    let lp = cfg.limit();
    lp.validate()?;
    if args.point.is_none() && !args.frozen_boundary {
        return usage("give --point CHI,ETA and/or --frozen-boundary");
    }
    if let Some(point) = &args.point {
        let (chi, eta): (f64, f64) = config::pair(point)?;
        let report = match solve_w(&lp, chi, eta)? {
            None => json!({ "chi": chi, "eta": eta, "liquid": false }),
            Some(p) => {
                let act = Action::new(&lp, chi, eta);
                let (s2, xi) = (act.s2(p.w), act.xi(p.w));
                let mut r = json!({
                    "chi": chi,
                    "eta": eta,
                    "liquid": true,
                    "w": [p.w.re, p.w.im],
                    "s2": [s2.re, s2.im],
                    "xi": [xi.re, xi.im],
                });
                if args.check_burgers {
                    r["burgers"] = serde_json::to_value(burgers_residual(&lp, chi, eta, 1e-4)?)?;
                }
                r
            }
        };
        line(format!("{}", serde_json::to_string_pretty(&report)?))?;
    }
    if args.frozen_boundary {
        frozen_csv(&lp, args.samples, args.out.as_deref())?;
        if let Some(out) = &args.out {
            Manifest::new("limit-shape", Some((&args.config, &bytes)), None).write_beside(out)?;
        }
    }
    Ok(true)
}

pub fn frozen_boundary(args: &FrozenBoundaryArgs) -> Result<bool> {
    let (cfg, bytes) = Config::load(&args.config)?;
    let lp = cfg.limit();
    lp.validate()?;
    let manifest = Manifest::new("frozen-boundary", Some((&args.config, &bytes)), None);
    if args.out.is_some() || args.svg.is_none() {
        frozen_csv(&lp, args.samples, args.out.as_deref())?;
    }
    if let Some(out) = &args.out {
        manifest.write_beside(out)?;
    }
    if let Some(svg) = &args.svg {
        emit(Some(svg), &render_frozen_boundary(&lp, args.samples))?;
        manifest.write_beside(svg)?;
    }
    Ok(true)
}

fn read_array(path: &Path, index: usize) -> Result<ParticleArray> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let Some(line) = text.lines().nth(index) else {
        return usage(format!("{} has no line {index}", path.display()));
    };
    match serde_json::from_str(line) {
        Ok(a) => Ok(a),
        Err(e) => usage(format!("{} line {index}: {e}", path.display())),
    }
}

pub fn render(args: &RenderArgs) -> Result<bool> {
    let (cfg, bytes) = Config::load(&args.config)?;
    let mut seed = None;
    let svg = match &cfg {
        Config::Lattice(spec) => {
            let arr = match &args.from {
                Some(path) => {
                    let arr = read_array(path, args.index)?;
                    arr.check(spec)?;
                    arr
                }
                None => {
                    let s = seed_or_fresh(args.seed);
                    seed = Some(s);
                    lozenge_core::sampler::sample(spec, &mut rng_for(s, 0))?
                }
            };
            let lp = cfg.limit();
            render_tiling(spec, &arr, args.overlay.then_some((&lp, args.samples)))
        }
        Config::Limit(lp) => {
            lp.validate()?;
            render_frozen_boundary(lp, args.samples)
        }
    };
    emit(args.out.as_deref(), &svg)?;
    if let Some(out) = &args.out {
        Manifest::new("render", Some((&args.config, &bytes)), seed).write_beside(out)?;
    }
    Ok(true)
}

#[derive(Serialize)]
struct VerifyEntry {
    #[serde(flatten)]
    report: CheckReport,
    /// Soft checks are reported but do not decide the exit status.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    soft: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    detail: Option<serde_json::Value>,
}

pub fn verify(args: &VerifyArgs) -> Result<bool> {
    let (cfg, bytes) = Config::load(&args.config)?;
    let spec = cfg.lattice()?;
    let opts = SuiteOptions {
        cap: args.cap,
        max_points: args.max_points,
        max_moment: args.max_moment,
        ..SuiteOptions::default()
    };
    let mut entries: Vec<VerifyEntry> =
        suite::run(spec, &opts)?.into_iter().map(|report| VerifyEntry { report, soft: false, detail: None }).collect();
    if args.bulk {
        let ns = [16, 32, 64];
        let entry = match suite::check_bulk_asymptotic(&cfg.limit(), &ns) {
            Ok(b) => VerifyEntry {
                report: CheckReport {
                    check: "bulk_asymptotic".into(),
                    status: b.status,
                    checked: b.pairs,
                    max_discrepancy: b.medians.iter().copied().fold(0.0, f64::max),
                },
                soft: true,
                detail: Some(json!({ "N": b.ns, "median_relative_error": b.medians })),
            },
            Err(e) => VerifyEntry {
                report: CheckReport {
                    check: "bulk_asymptotic".into(),
                    status: Status::Fail,
                    checked: 0,
                    max_discrepancy: 0.0,
                },
                soft: true,
                detail: Some(json!({ "error": e.to_string() })),
            },
        };
        entries.push(entry);
    }
    let passed = entries.iter().all(|e| e.soft || e.report.status != Status::Fail);
    for e in &entries {
        let soft = if e.soft { " (soft)" } else { "" };
        eprintln!(
            "{:<22} {:?}{soft} checked={} max_discrepancy={:e}",
            e.report.check, e.report.status, e.report.checked, e.report.max_discrepancy
        );
    }
    let report = json!({
        "config": args.config.display().to_string(),
        "passed": passed,
        "checks": entries,
    });
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&report)? + "\n"))?;
    if let Some(out) = &args.out {
        Manifest::new("verify", Some((&args.config, &bytes)), None).write_beside(out)?;
    }
    Ok(passed)
}
