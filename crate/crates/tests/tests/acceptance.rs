//! Acceptance run: one PASS/FAIL line per criterion, with the measured numbers.
//!
//! Runs every criterion by default; pass criterion numbers as arguments
//! (`cargo test -p spinchain-tests --test acceptance -- 3 5`) to run a subset.
//! Exits non-zero if any selected criterion fails.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spinchain::ergodicity::{
    critical_field, critical_period, ergodicity_scan, gibbs_curve, gibbs_value, max_eta, GibbsSettings, Measure,
    ScanPoint,
};
use spinchain::evolution::{
    correlator_series, finite_chain_correlators, finite_chain_series, steady_state_correlators, two_site_state,
    FiniteScheme,
};
use spinchain::floquet::{group_velocity, locate_gap_closings, VELOCITY_POINTS};
use spinchain::measures::{concurrence, fit_power_law, trace_distance, FitOptions};
use spinchain::model::{KGrid, ModelParams};
use spinchain::oracle::oracle_two_site;
use spinchain::revival::{detect_revival, RevivalOptions};
use spinchain::validation::{random_params, run_validation, ValidationOptions};
use spinchain::QuadratureSettings;
use spinchain_cli::commands::{peaks, sweep_rows, CROSSING_TOLERANCE, GAP_POINTS, KINK_WINDOW};
use spinchain_cli::config::parse_grid;

type Outcome = Result<Verdict, String>;

struct Verdict {
    passed: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(passed: bool, summary: impl Into<String>, details: Vec<String>) -> Self {
        Self {
            passed,
            summary: summary.into(),
            details,
        }
    }
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Revival time linear in N, slope within 10% of 1/(2 max v_g).
fn revival_scaling() -> Outcome {
    let p = ModelParams::new(1.4, 0.0, 0.3, 20.0);
    let v = group_velocity(&p, VELOCITY_POINTS).map_err(err)?.max;
    let predicted_slope = 1.0 / (2.0 * v);
    let mut points = Vec::new();
    let mut details = Vec::new();
    for n_sites in [100usize, 150, 200, 250] {
        let predicted = n_sites as f64 * predicted_slope;
        let n_max = (1.75 * predicted / p.period).ceil() as u64;
        let cycles: Vec<u64> = (0..=n_max).collect();
        let series = finite_chain_series(&p, n_sites, &cycles, FiniteScheme::ParityProjected).map_err(err)?;
        let conc: Result<Vec<f64>, String> = series
            .iter()
            .map(|c| two_site_state(c).map(|s| concurrence(&s)).map_err(err))
            .collect();
        match detect_revival(&conc?, &RevivalOptions::default()) {
            Some(r) => {
                let t = r.revival_cycle as f64 * p.period;
                details.push(format!("N = {n_sites}: T_r = {t:.2}, predicted {predicted:.2}"));
                points.push((n_sites as f64, t));
            }
            None => details.push(format!("N = {n_sites}: no revival detected")),
        }
    }
    let slope = points.iter().map(|(n, t)| n * t).sum::<f64>() / points.iter().map(|(n, _)| n * n).sum::<f64>();
    let error = (slope / predicted_slope - 1.0).abs();
    let passed = points.len() == 4 && error <= 0.10;
    Ok(Verdict::new(
        passed,
        format!("slope {slope:.4} vs 1/(2 max v_g) = {predicted_slope:.4}, relative error {error:.4} (limit 0.10)"),
        details,
    ))
}

/// Power-law exponents of the trace distance over n ≤ 5000.
fn relaxation_exponents() -> Outcome {
    let q = QuadratureSettings::default();
    let cycles: Vec<u64> = (1..=5000).collect();
    let mut passed = true;
    let mut details = Vec::new();
    let mut found = Vec::new();
    for (tau, target) in [(0.3, 1.5), (0.7, 1.5), (0.9, 1.5), (2.0, 0.5), (2.5, 0.5)] {
        let p = ModelParams::new(1.4, 0.0, tau, 20.0);
        let steady = two_site_state(&steady_state_correlators(&p, &q).map_err(err)?.value).map_err(err)?;
        let series = correlator_series(&p, &cycles, &q).map_err(err)?;
        let decay: Result<Vec<(f64, f64)>, String> = cycles
            .iter()
            .zip(&series.value)
            .map(|(&n, c)| Ok((n as f64, trace_distance(&two_site_state(c).map_err(err)?, &steady))))
            .collect();
        let fit = fit_power_law(&decay?, &FitOptions::default()).map_err(err)?;
        let ok = (fit.exponent - target).abs() <= 0.15;
        passed &= ok;
        found.push(format!("{tau}: {:.3}", fit.exponent));
        details.push(format!(
            "{} tau = {tau}: B = {:.4}, expected {target} ± 0.15",
            mark(ok),
            fit.exponent
        ));
    }
    Ok(Verdict::new(passed, format!("B by tau {{{}}}", found.join(", ")), details))
}

/// Zero concurrence and discord minimum near 10, finite discord at 20, kinks at crossings.
fn steady_state_structure() -> Outcome {
    let q = QuadratureSettings::default();
    let periods = parse_grid("tau", "0.05:30:0.05").map_err(err)?;
    let p = ModelParams::new(1.4, 0.0, periods[0], 20.0);
    let rows = sweep_rows(&p, &periods, &q).map_err(err)?;
    let near = |x: f64, target: f64| (x - target).abs() <= 0.5 + 1e-9;

    let d: Vec<f64> = rows.iter().map(|r| r.discord).collect();
    let minima: Vec<usize> = (1..d.len() - 1)
        .filter(|&i| d[i] < d[i - 1] && d[i] <= d[i + 1] && near(rows[i].tau, 10.0))
        .collect();
    let at_ten = minima
        .iter()
        .copied()
        .min_by(|&a, &b| (rows[a].tau - 10.0).abs().total_cmp(&(rows[b].tau - 10.0).abs()));
    let ten_ok = at_ten.is_some_and(|i| rows[i].concurrence == 0.0);
    let at = |t: f64| rows.iter().find(|r| (r.tau - t).abs() < 1e-9);
    let twenty = at(20.0).ok_or("tau = 20 missing from the grid")?;
    let twenty_ok = twenty.concurrence == 0.0 && at_ten.is_some_and(|i| twenty.discord > d[i]);

    let closings = locate_gap_closings(&p, &periods, GAP_POINTS, CROSSING_TOLERANCE);
    let taus: Vec<f64> = rows.iter().map(|r| r.tau).collect();
    let mut kinks = peaks(&taus, &rows.iter().map(|r| r.concurrence).collect::<Vec<_>>());
    kinks.extend(peaks(&taus, &d));
    let mut details = Vec::new();
    let mut kinks_ok = true;
    for target in [6.5, 25.0] {
        let hit = closings.iter().filter(|c| near(c.period, target)).find_map(|c| {
            kinks
                .iter()
                .find(|&&k| (k - c.period).abs() <= KINK_WINDOW)
                .map(|&k| (c.period, k))
        });
        kinks_ok &= hit.is_some();
        details.push(match hit {
            Some((c, k)) => format!("PASS kink at tau = {k:.2} within {KINK_WINDOW} of zone-gap closing at {c:.4} (near {target})"),
            None => format!("FAIL no kink attributed to a zone-gap closing near {target}"),
        });
    }
    details.insert(
        0,
        match at_ten {
            Some(i) => format!(
                "{} local D_s minimum at tau = {:.2}: D_s = {:.3e}, C_s = {:.1e}",
                mark(ten_ok),
                rows[i].tau,
                d[i],
                rows[i].concurrence
            ),
            None => "FAIL no local D_s minimum within 0.5 of tau = 10".to_string(),
        },
    );
    details.insert(
        1,
        format!(
            "{} tau = 20: C_s = {:.1e}, D_s = {:.3e}",
            mark(twenty_ok),
            twenty.concurrence,
            twenty.discord
        ),
    );
    let crossing_list: Vec<String> = closings.iter().map(|c| format!("{:.3}", c.period)).collect();
    details.push(format!("zone-gap closings: {}", crossing_list.join(", ")));
    Ok(Verdict::new(
        ten_ok && twenty_ok && kinks_ok,
        "D_s minimum near 10, finite discord at 20, kinks at band crossings",
        details,
    ))
}

/// Gibbs concurrence onset and saturation at h̄ = 0.7, Gibbs discord monotone.
fn canonical_curves() -> Outcome {
    let settings = GibbsSettings::default();
    let betas = settings.betas();
    let p = ModelParams::default();
    let q = settings.quadrature;
    let field = 0.7;
    let c = gibbs_curve(field, &betas, Measure::Concurrence, &p, &q).map_err(err)?;
    let first = c.points.iter().position(|&(_, v)| v > 0.0).ok_or("Gibbs concurrence never positive")?;
    if first == 0 {
        return Err("Gibbs concurrence positive at the hottest grid point".into());
    }
    // Bisect between the last zero and the first positive grid point.
    let (mut lo, mut hi) = (c.points[first - 1].0, c.points[first].0);
    while hi - lo > 1e-7 {
        let mid = 0.5 * (lo + hi);
        if gibbs_value(field, mid, Measure::Concurrence, &p, &q).map_err(err)? > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let onset = hi;
    let onset_ok = (onset - 2.2).abs() <= 0.3;
    let cold: Vec<f64> = c.points.iter().filter(|&&(b, _)| b >= 10.0).map(|&(_, v)| v).collect();
    let (cold_min, cold_max) = cold
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    let saturation_ok = !cold.is_empty() && (cold_min - 0.07).abs() <= 0.01 && (cold_max - 0.07).abs() <= 0.01;
    let d = gibbs_curve(field, &betas, Measure::Discord, &p, &q).map_err(err)?;
    let worst_drop = d
        .points
        .windows(2)
        .map(|w| w[0].1 - w[1].1)
        .fold(f64::NEG_INFINITY, f64::max);
    let monotone_ok = worst_drop <= 1e-6;
    Ok(Verdict::new(
        onset_ok && saturation_ok && monotone_ok,
        format!("onset beta = {onset:.3}, C in [{cold_min:.4}, {cold_max:.4}] for beta >= 10, largest discord drop {worst_drop:.2e}"),
        vec![
            format!("{} concurrence onset {onset:.4} (expected 2.2 ± 0.3)", mark(onset_ok)),
            format!(
                "{} concurrence for beta >= 10 within [{cold_min:.4}, {cold_max:.4}] (expected 0.07 ± 0.01)",
                mark(saturation_ok)
            ),
            format!("{} discord monotone, largest decrease {worst_drop:.2e} (limit 1e-6)", mark(monotone_ok)),
        ],
    ))
}

fn scan(a: f64, b: f64, periods: &[f64], measure: Measure) -> Result<Vec<ScanPoint>, String> {
    let p = ModelParams::new(a, b, periods[0], 20.0);
    Ok(ergodicity_scan(&p, periods, measure, &GibbsSettings::default()).map_err(err)?.1)
}

fn positive_windows(points: &[ScanPoint]) -> String {
    let taus: Vec<String> = points
        .iter()
        .filter(|p| p.report.eta > 0.0)
        .map(|p| format!("{}", p.period))
        .collect();
    if taus.is_empty() {
        "none".into()
    } else {
        format!("{} points, first {} last {}", taus.len(), taus[0], taus[taus.len() - 1])
    }
}

/// Ergodic to non-ergodic transitions.
fn ergodicity_transitions() -> Outcome {
    let periods = parse_grid("tau", "0.1:30:0.1").map_err(err)?;
    let mut details = Vec::new();

    let c = scan(1.4, 0.0, &periods, Measure::Concurrence)?;
    let d = scan(1.4, 0.0, &periods, Measure::Discord)?;
    let c_quiet = c.iter().filter(|p| p.period <= 2.0 + 1e-9).all(|p| p.report.eta == 0.0);
    let tau_c = critical_period(&d);
    let i_ok = c_quiet && tau_c.is_some_and(|t| (t - 1.5).abs() <= 0.2);
    details.push(format!(
        "{} (i) a = 1.4, b = 0: eta^C = 0 for tau <= 2: {c_quiet}; tau_c from eta^D = {tau_c:?} (expected 1.5 ± 0.2); eta^D > 0 at {}",
        mark(i_ok),
        positive_windows(&d)
    ));

    let fields = parse_grid("b", "0:1.4:0.1").map_err(err)?;
    let mut rows = Vec::new();
    for &b in &fields {
        let etas = if b == 0.0 {
            vec![max_eta(&c), max_eta(&d)]
        } else {
            vec![
                max_eta(&scan(1.4, b, &periods, Measure::Concurrence)?),
                max_eta(&scan(1.4, b, &periods, Measure::Discord)?),
            ]
        };
        rows.push((b, etas));
    }
    let b_c = critical_field(&rows);
    let ii_ok = b_c.is_some_and(|b| (b - 0.8).abs() <= 0.1 + 1e-9);
    let table: Vec<String> = rows
        .iter()
        .map(|(b, e)| format!("{b}: ({:.2e}, {:.2e})", e[0], e[1]))
        .collect();
    details.push(format!(
        "{} (ii) b_c = {b_c:?} (expected 0.8 ± 0.1); max (eta^C, eta^D) by b: {}",
        mark(ii_ok),
        table.join(", ")
    ));

    let c3 = scan(0.0, 1.4, &periods, Measure::Concurrence)?;
    let d3 = scan(0.0, 1.4, &periods, Measure::Discord)?;
    let iii_ok = max_eta(&c3) == 0.0 && max_eta(&d3) == 0.0;
    details.push(format!(
        "{} (iii) a = 0, b = 1.4: max eta^C = {:.2e}, max eta^D = {:.2e} (expected both 0)",
        mark(iii_ok),
        max_eta(&c3),
        max_eta(&d3)
    ));

    let c4 = scan(2.4, 1.2, &periods, Measure::Concurrence)?;
    let d4 = scan(2.4, 1.2, &periods, Measure::Discord)?;
    let iv_ok = max_eta(&c4) == 0.0 && max_eta(&d4) > 0.0;
    details.push(format!(
        "{} (iv) a = 2.4, b = 1.2: max eta^C = {:.2e} (expected 0), max eta^D = {:.2e} (expected > 0)",
        mark(iv_ok),
        max_eta(&c4),
        max_eta(&d4)
    ));

    let parts = [("i", i_ok), ("ii", ii_ok), ("iii", iii_ok), ("iv", iv_ok)];
    let summary: Vec<String> = parts.iter().map(|(n, ok)| format!("({n}) {}", mark(*ok))).collect();
    Ok(Verdict::new(
        parts.iter().all(|p| p.1),
        summary.join(", "),
        details,
    ))
}

/// Momentum route against exact diagonalisation for 20 random tuples at N = 8, 10, 12.
fn oracle_equivalence() -> Outcome {
    // Discrepancies at this level are rounding noise; ordering below it is meaningless.
    const ROUNDING: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let tuples: Vec<(ModelParams, u64)> = (0..20)
        .map(|_| {
            let p = random_params(&mut rng);
            (p, rng.random_range(0..=50))
        })
        .collect();
    let mut worst = Vec::new();
    let mut literal = Vec::new();
    for sites in [8usize, 10, 12] {
        let (mut w, mut l) = (0.0f64, 0.0f64);
        for (p, n) in &tuples {
            let (_, exact) = oracle_two_site(sites, p, *n).map_err(err)?;
            let projected = finite_chain_correlators(p, sites, *n, FiniteScheme::ParityProjected).map_err(err)?;
            let grid = finite_chain_correlators(p, sites, *n, FiniteScheme::Grid(KGrid::Periodic)).map_err(err)?;
            w = w.max(exact.max_abs_diff(&projected));
            l = l.max(exact.max_abs_diff(&grid));
        }
        worst.push((sites, w));
        literal.push((sites, l));
    }
    let within = worst.iter().all(|&(_, w)| w <= 0.1);
    let decreasing = worst.windows(2).all(|w| w[1].1 <= w[0].1 || w[1].1.max(w[0].1) <= ROUNDING);
    let fmt = |v: &[(usize, f64)]| -> String {
        v.iter()
            .map(|(n, w)| format!("N = {n}: {w:.2e}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    Ok(Verdict::new(
        within && decreasing,
        format!("max discrepancy {} (limit 0.1, non-increasing in N)", fmt(&worst)),
        vec![format!(
            "for reference, the uncorrected periodic k-grid gives {}",
            fmt(&literal)
        )],
    ))
}

/// The invariant suite behind `spinchain validate`.
fn invariant_suite() -> Outcome {
    let report = run_validation(&ValidationOptions::default()).map_err(err)?;
    let details = report
        .checks
        .iter()
        .map(|c| format!("{} {}: {:.3e} (tolerance {:.0e})", mark(c.passed), c.name, c.measured, c.tolerance))
        .collect();
    Ok(Verdict::new(
        report.passed(),
        format!(
            "{} of {} checks pass",
            report.checks.iter().filter(|c| c.passed).count(),
            report.checks.len()
        ),
        details,
    ))
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 7] = [
        (1, "revival scaling", revival_scaling),
        (2, "relaxation exponents", relaxation_exponents),
        (3, "steady-state structure", steady_state_structure),
        (4, "canonical curves", canonical_curves),
        (5, "ergodicity transitions", ergodicity_transitions),
        (6, "oracle equivalence", oracle_equivalence),
        (7, "invariant suite", invariant_suite),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(v) => {
                println!("{} criterion {id} ({name}): {} [{secs:.1} s]", mark(v.passed), v.summary);
                for d in &v.details {
                    println!("    {d}");
                }
                if !v.passed {
                    failed.push(id);
                }
            }
            Err(e) => {
                println!("FAIL criterion {id} ({name}): error: {e} [{secs:.1} s]");
                failed.push(id);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all selected criteria pass");
    } else {
        println!("acceptance: failing criteria {failed:?}");
        std::process::exit(1);
    }
}
