//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! hard criterion fails. Run with `cargo test -p lozenge-core --test acceptance`.

mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use lozenge_core::fluctuations::{build_paths, gff_gap_table, moment_prop, regression_slope, MomentMode};
use lozenge_core::limit_shape::{burgers_residual, frozen_boundary_curve, invert_w, solve_w, Action, C64};
use lozenge_core::linalg::to_f64;
use lozenge_core::oracle::suite::{
    check_bulk_asymptotic, check_correlations, check_counts, check_kasteleyn, check_moments, check_sampler, Status,
};
use lozenge_core::oracle::{collect_arrays, gt_dimension};
use lozenge_core::polygon::scale;
use lozenge_core::sampler::{mc_moments, sample_batch};
use lozenge_core::{KernelEngine, LimitPolygon, PolygonSpec};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn count(spec: &PolygonSpec) -> BigInt {
    gt_dimension(&spec.top_row().unwrap())
}

fn all_small(max_n: usize) -> Vec<PolygonSpec> {
    let mut out = Vec::new();
    for n in 2..=max_n {
        out.extend(common::specs_with(2, n, 2));
        out.extend(common::specs_with(3, n, 2));
    }
    out
}

/// Polygons with `k` intervals, strip height 4 or 5 and at most 5000 tilings,
/// spread over the range of counts.
fn spread(k: usize, max_gap: i64, take: usize) -> Vec<PolygonSpec> {
    let mut all: Vec<(BigInt, PolygonSpec)> = (4..=5)
        .flat_map(|n| common::specs_with(k, n, max_gap))
        .map(|s| (count(&s), s))
        .filter(|(c, _)| *c <= BigInt::from(5000))
        .collect();
    all.sort_by(|a, b| a.0.cmp(&b.0));
    let last = all.len() - 1;
    (0..take).map(|i| all[last - i * last / (take - 1)].1.clone()).collect()
}

fn criterion_1() -> Outcome {
    let mut specs = spread(2, 6, 6);
    specs.extend(spread(3, 4, 6));
    let (mut corr, mut loz) = (0, 0);
    for spec in &specs {
        let arrays = collect_arrays(spec, 5000).map_err(|e| e.to_string())?;
        let engine = KernelEngine::new(spec).unwrap();
        let (c, l) = check_correlations(spec, &engine, &arrays, 3).map_err(|e| e.to_string())?;
        for r in [&c, &l] {
            if r.status != Status::Pass {
                return Err(format!("{spec:?}: {r:?}"));
            }
        }
        corr += c.checked;
        loz += l.checked;
    }
    Ok(format!("{} polygons, {corr} correlations and {loz} lozenge probabilities exact", specs.len()))
}

fn criterion_2() -> Outcome {
    let mut entries = 0;
    let specs: Vec<PolygonSpec> = all_small(4);
    for spec in &specs {
        let engine = KernelEngine::new(spec).unwrap();
        let counts = check_counts(spec, 100_000).map_err(|e| e.to_string())?;
        let kast = check_kasteleyn(spec, &engine).map_err(|e| e.to_string())?;
        for r in [&counts, &kast] {
            if r.status != Status::Pass {
                return Err(format!("{spec:?}: {r:?}"));
            }
        }
        entries += kast.checked;
    }
    Ok(format!("{} polygons, {entries} inverse entries, counts agree", specs.len()))
}

fn criterion_3() -> Outcome {
    let mut checked = 0;
    let specs = all_small(4);
    for spec in &specs {
        let arrays = collect_arrays(spec, 100_000).map_err(|e| e.to_string())?;
        let engine = KernelEngine::new(spec).unwrap();
        let r = check_moments(spec, &engine, &arrays, 3).map_err(|e| e.to_string())?;
        if r.status != Status::Pass {
            return Err(format!("{spec:?}: {r:?}"));
        }
        checked += r.checked;
    }
    Ok(format!("{} polygons, {checked} moments with s <= 3 exact", specs.len()))
}

fn criterion_4() -> Outcome {
    let mut specs = all_small(5);
    specs.extend(spread(2, 6, 6));
    specs.extend(spread(3, 4, 6));
    specs.retain(|s| count(s) <= BigInt::from(200));
    let mut tilings = 0;
    for spec in &specs {
        let arrays = collect_arrays(spec, 200).map_err(|e| e.to_string())?;
        let r = check_sampler(spec, &arrays).map_err(|e| e.to_string())?;
        if r.status != Status::Pass {
            return Err(format!("{spec:?}: {r:?}"));
        }
        tilings += r.checked;
    }
    let spec = common::three_interval();
    let all = collect_arrays(&spec, 100).unwrap();
    let n = 100_000;
    let batch = sample_batch(&spec, 4, n).map_err(|e| e.to_string())?;
    let mut observed = vec![0usize; all.len()];
    for a in &batch.arrays {
        let i = all.iter().position(|b| b == a).ok_or("sample is not a tiling")?;
        observed[i] += 1;
    }
    let expected = n as f64 / all.len() as f64;
    let chi2: f64 = observed.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p = 1.0 - ChiSquared::new((all.len() - 1) as f64).unwrap().cdf(chi2);
    if p <= 0.001 {
        return Err(format!("chi-square {chi2:.3}, p = {p:.2e}"));
    }
    Ok(format!(
        "{tilings} tilings of {} polygons exact; chi-square {chi2:.2} on {} cells, p = {p:.3}",
        specs.len(),
        all.len()
    ))
}

fn criterion_5() -> Outcome {
    let lp = LimitPolygon::hexagon();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut s1, mut trip, mut burg, mut om) = (0f64, 0f64, 0f64, 0f64);
    let mut points = 0;
    while points < 200 {
        let (chi, eta) = (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0));
        if !lp.contains(chi, eta) {
            continue;
        }
        let Some(p) = solve_w(&lp, chi, eta).map_err(|e| e.to_string())? else { continue };
        // keep the finite-difference stencil clear of the frozen boundary
        let clear = (0..8).all(|k| {
            let t = k as f64 * PI / 4.0;
            let (c, e) = (chi + 0.02 * t.cos(), eta + 0.02 * t.sin());
            lp.contains(c, e) && solve_w(&lp, c, e).is_ok_and(|q| q.is_some())
        });
        if !clear {
            continue;
        }
        points += 1;
        s1 = s1.max((Action::new(&lp, chi, eta).exp_s1(p.w) - 1.0).norm());
        let (c2, e2) = invert_w(&lp, p.w).map_err(|e| e.to_string())?;
        trip = trip.max((c2 - chi).abs().max((e2 - eta).abs()));
        let r = burgers_residual(&lp, chi, eta, 1e-4).map_err(|e| e.to_string())?;
        burg = burg.max(r.burgers);
        om = om.max(r.om_eta);
        // the other direction: a random slope, its point, and back
        let z = C64::new(rng.gen_range(-3.0..3.0), rng.gen_range(0.05..3.0));
        let (c3, e3) = invert_w(&lp, z).map_err(|e| e.to_string())?;
        let back = solve_w(&lp, c3, e3).map_err(|e| e.to_string())?.ok_or("inverted point is frozen")?;
        trip = trip.max((back.w - z).norm());
    }
    let curve = frozen_boundary_curve(&lp, 1000);
    // S'' has terms of size 1/(w - p)^2 near an endpoint p, so compare it
    // with that scale there
    let endpoint_scale = |w: f64| lp.a.iter().chain(&lp.b).map(|p| (w - p).powi(-2)).fold(1.0, f64::max);
    let fb = curve.iter().map(|p| p.residual_s1.max(p.residual_s2 / endpoint_scale(p.w))).fold(0.0, f64::max);
    let line = format!(
        "|exp S'-1| {s1:.1e}, roundtrip {trip:.1e}, Burgers {burg:.1e}, w_eta {om:.1e}, frozen {fb:.1e} on {} samples",
        curve.len()
    );
    if s1 < 1e-9 && trip < 1e-8 && burg < 1e-4 && om < 1e-4 && fb < 1e-9 && curve.len() >= 990 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion_6() -> Outcome {
    let lp = LimitPolygon::hexagon();
    let ns = [8, 16, 24, 32];
    let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let pair = [(0.0, 0.5), (0.75, 0.5)];
    let ws: Vec<C64> = pair.iter().map(|&(c, e)| solve_w(&lp, c, e).unwrap().unwrap().w).collect();
    let sep = (ws[0] - ws[1]).norm();
    if sep < 0.1 {
        return Err(format!("points too close in the complex structure: |w1 - w2| = {sep}"));
    }
    let table = gff_gap_table(&lp, &pair, &ns, &MomentMode::Exact).map_err(|e| e.to_string())?;
    let gaps: Vec<f64> = table.iter().map(|r| r.scaled_gap).collect();
    let slope = regression_slope(&xs, &gaps);
    let triple = [(0.0, 0.5), (0.375, 0.625), (0.75, 0.375)];
    let t3 = gff_gap_table(&lp, &triple, &ns, &MomentMode::Exact).map_err(|e| e.to_string())?;
    let third: Vec<f64> = t3.iter().map(|r| (PI.powf(1.5) * r.moment).abs()).collect();
    let line = format!("|w1-w2| {sep:.3}; pair gaps {:.4?} slope {slope:.2e}; triple |pi^1.5 m| {:.4?}", gaps, third);
    if gaps[3] < gaps[0] && slope < 0.0 && third[3] < third[0] {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion_7() -> Outcome {
    let r = check_bulk_asymptotic(&LimitPolygon::hexagon(), &[16, 32, 64]).map_err(|e| e.to_string())?;
    let line = format!("{} pairs, median |K_asym/K - 1| at N=16,32,64: {:.4?}", r.pairs, r.medians);
    if r.status == Status::Pass {
        Ok(line)
    } else {
        Err(line)
    }
}

fn criterion_8() -> Outcome {
    let lp = LimitPolygon::hexagon();
    let spec = scale(&lp, 16).unwrap();
    let paths = build_paths(&spec, &lp, &[(0.0, 0.5), (0.75, 0.5)]).map_err(|e| e.to_string())?;
    let anchors: Vec<(i64, i64)> = paths.iter().map(|p| p.anchor).collect();
    let engine = KernelEngine::new(&spec).unwrap();
    let exact = to_f64(&moment_prop(&engine, &paths).map_err(|e| e.to_string())?);
    let est = &mc_moments(&spec, &[anchors.clone()], 20_000, 8).map_err(|e| e.to_string())?[0];
    let z = (est.estimate - exact).abs() / est.std_error;
    let line = format!(
        "anchors {anchors:?}: exact {exact:.5}, Monte Carlo {:.5} +- {:.5} ({z:.2} SE)",
        est.estimate, est.std_error
    );
    if z < 4.0 {
        Ok(line)
    } else {
        Err(line)
    }
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome, bool); 8] = [
        (1, "determinantal oracle equality", criterion_1, true),
        (2, "Kasteleyn identity and counts", criterion_2, true),
        (3, "moment formula", criterion_3, true),
        (4, "sampler exactness", criterion_4, true),
        (5, "analytic identities", criterion_5, true),
        (6, "GFF convergence trend", criterion_6, true),
        (7, "bulk asymptotic kernel", criterion_7, false),
        (8, "Monte Carlo consistency", criterion_8, true),
    ];
    let mut failed = false;
    for (id, name, run, hard) in criteria {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(msg) => println!("criterion {id} PASS {name}: {msg} [{secs:.1}s]"),
            Err(msg) if hard => {
                failed = true;
                println!("criterion {id} FAIL {name}: {msg} [{secs:.1}s]");
            }
            Err(msg) => println!("criterion {id} SOFT-FAIL {name}: {msg} [{secs:.1}s]"),
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
