use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use udn_core::access::{stationary_pi, ChannelParams};
use udn_core::coverage::{coverage_fixed_point, euler_invert_cdf, EulerParams, RadioParams};
use udn_core::jackson::stationary_state;
use udn_core::mobility::{build_transfer_matrix, external_arrival_rates};
use udn_core::oracles::{simulate_ctmc, simulate_mobility, simulate_sinr, SimConfig};
use udn_core::pipeline::{compare_deployment, parse_range, run_pipeline, sweep, Evaluation, SweepPoint};
use udn_core::scenario::{parse_scenario, Scenario};
use udn_validation::{has_interior_max, monotone_violations, sign_change_count, Direction};

const POP_REL_TOL: f64 = 0.05;
const POP_FLOOR: f64 = 10.0;
const MOBILITY_BUDGET: Duration = Duration::from_secs(120);
const EULER_TOL: f64 = 1e-6;
const SINR_TOL: f64 = 0.02;
const SINR_DROPS: u64 = 1_000_000;
const COVERAGE_BUDGET: Duration = Duration::from_secs(600);
const TV_TOL: f64 = 0.01;
const CTMC_EVENTS: u64 = 2_000_000;
const BALANCE_TOL: f64 = 1e-10;
const MONOTONE_SLACK: f64 = 1e-9;

const FIFTY_SPOTS: &str = "seed = 50\nzeta = 0.1\n[generator]\nn_p = 50\n";
const TEN_SPOTS: &str = "seed = 7\nzeta = 0.1\n[generator]\nn_p = 10\n[deployment]\ntheta = 15\n";
const TEN_SPOTS_UDS: &str =
    "seed = 7\nzeta = 0.1\n[generator]\nn_p = 10\n[deployment]\nstrategy = \"uds\"\ntotal_sbs = 1000\n";

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn scenario(text: &str) -> Scenario {
    parse_scenario(text).expect("acceptance scenario loads")
}

fn mobility_vs_oracle() -> Verdict {
    let start = Instant::now();
    let sc = scenario(FIFTY_SPOTS);
    let tm = build_transfer_matrix(&sc.mobility).unwrap();
    let a = external_arrival_rates(&sc.mobility, &tm);
    let state = stationary_state(&tm, &a, sc.mobility.zeta).unwrap();
    let est = simulate_mobility(&sc.mobility, &tm, &a, &SimConfig::new(2024, 20_000)).unwrap();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    let mut bad = Vec::new();
    for (i, (e, &p)) in est.iter().zip(&state.pop).enumerate() {
        if p < POP_FLOOR {
            continue;
        }
        checked += 1;
        let rel = (e.mean - p).abs() / p;
        worst = worst.max(rel);
        if rel > POP_REL_TOL {
            bad.push(i + 1);
        }
    }
    let elapsed = start.elapsed();
    verdict(
        bad.is_empty() && checked > 0 && elapsed < MOBILITY_BUDGET,
        format!(
            "{checked} spots with population >= {POP_FLOOR}, worst relative gap {worst:.4} (limit {POP_REL_TOL}), \
             outside: {bad:?}, {:.1} s (limit {} s)",
            elapsed.as_secs_f64(),
            MOBILITY_BUDGET.as_secs()
        ),
    )
}

fn euler_accuracy() -> Verdict {
    let ep = EulerParams::default();
    type Case = (&'static str, fn(Complex64) -> Complex64, fn(f64) -> f64);
    let cases: [Case; 3] = [
        ("exponential", |s| 1.0 / (s + 1.0), |t| 1.0 - (-t).exp()),
        ("erlang-2", |s| 1.0 / ((s + 1.0) * (s + 1.0)), |t| 1.0 - (-t).exp() * (1.0 + t)),
        ("uniform(0,1)", |s| (1.0 - (-s).exp()) / s, |t| t.min(1.0)),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, transform, cdf) in cases {
        let mut worst: (f64, f64) = (0.0, 0.0);
        for t in [0.1, 0.5, 1.0, 2.0] {
            let v = euler_invert_cdf(|s| Ok(transform(s)), t, &ep).unwrap().value;
            let err = (v - cdf(t)).abs();
            if err > worst.0 {
                worst = (err, t);
            }
        }
        pass &= worst.0 <= EULER_TOL;
        parts.push(format!("{name} max error {:.2e} at t={}", worst.0, worst.1));
    }
    verdict(pass, format!("{} (limit {EULER_TOL:e})", parts.join(", ")))
}

fn coverage_vs_oracle() -> Verdict {
    let start = Instant::now();
    let sc = scenario(TEN_SPOTS);
    let mut worst: (f64, usize, f64) = (0.0, 0, 0.0);
    let mut bad = Vec::new();
    for n_sbs in [10usize, 20] {
        for g in [1.0, 2.0, 3.0, 4.0, 5.0] {
            let rp = RadioParams {
                alpha_p: sc.radio.alpha_p,
                rho0: sc.radio.rho0,
                eta: sc.radio.eta,
                gamma0: g,
                l_i: 1.0,
                n_sbs,
            };
            let sol = coverage_fixed_point(&rp, &sc.euler).unwrap();
            let seed = 100 * n_sbs as u64 + g as u64;
            let e = simulate_sinr(&rp, sol.n_int, &SimConfig::new(seed, SINR_DROPS)).unwrap();
            let gap = (e.mean - sol.p_cover).abs();
            if gap > worst.0 {
                worst = (gap, n_sbs, g);
            }
            if gap > SINR_TOL {
                bad.push((n_sbs, g));
            }
        }
    }
    let elapsed = start.elapsed();
    verdict(
        bad.is_empty() && elapsed < COVERAGE_BUDGET,
        format!(
            "worst |analytic - simulated| {:.4} at N_S={} gamma0={} (limit {SINR_TOL}), outside: {bad:?}, \
             {:.1} s (limit {} s)",
            worst.0,
            worst.1,
            worst.2,
            elapsed.as_secs_f64(),
            COVERAGE_BUDGET.as_secs()
        ),
    )
}

fn access_product_form() -> Verdict {
    let mut worst_tv: f64 = 0.0;
    let mut worst_balance: f64 = 0.0;
    let mut pass = true;
    for load in [1.0, 5.0] {
        for eps in [0.1, 0.5] {
            let cp = ChannelParams::new(10, 0.01, 1.0, load, eps);
            let dist = stationary_pi(&cp).unwrap();
            let rates: HashMap<((usize, usize), (usize, usize)), f64> =
                cp.transitions().into_iter().map(|(f, t, r)| ((f, t), r)).collect();
            for (&(from, to), &q) in &rates {
                let back = rates.get(&(to, from)).copied().unwrap_or(0.0);
                let lhs = dist.prob(from.0, from.1) * q;
                let rhs = dist.prob(to.0, to.1) * back;
                let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs());
                worst_balance = worst_balance.max(rel);
            }
            let seed = (load as u64) * 10 + (eps * 10.0) as u64;
            let est = simulate_ctmc(&cp, &SimConfig::new(seed, CTMC_EVENTS)).unwrap();
            let tv = est.total_variation(&dist.pi);
            worst_tv = worst_tv.max(tv);
            pass &= tv < TV_TOL;
        }
    }
    pass &= worst_balance <= BALANCE_TOL;
    verdict(
        pass,
        format!(
            "worst total variation {worst_tv:.4} (limit {TV_TOL}), worst detailed-balance gap {worst_balance:.2e} \
             (limit {BALANCE_TOL:e})"
        ),
    )
}

struct Grid {
    gammas: Vec<f64>,
    thetas: Vec<f64>,
    /// `evals[theta][gamma]`.
    evals: Vec<Vec<Evaluation>>,
    errors: Vec<String>,
}

fn theta_grid() -> Grid {
    let sc = scenario(TEN_SPOTS);
    let gammas = parse_range("1:5:0.5").unwrap();
    let thetas = vec![10.0, 15.0, 20.0];
    let points: Vec<SweepPoint> = thetas
        .iter()
        .flat_map(|&t| gammas.iter().map(move |&g| SweepPoint { gamma0: g, theta: Some(t), total_sbs: None }))
        .collect();
    let rows = sweep(&sc, &points).unwrap();
    let mut evals = vec![Vec::new(); thetas.len()];
    let mut errors = Vec::new();
    for (k, row) in rows.into_iter().enumerate() {
        match row.outcome {
            Ok(ev) => evals[k / gammas.len()].push(ev),
            Err(e) => errors.push(format!("gamma0={} theta={:?}: {e}", row.point.gamma0, row.point.theta)),
        }
    }
    Grid { gammas, thetas, evals, errors }
}

fn monotonicity(grid: &Grid) -> Verdict {
    if !grid.errors.is_empty() {
        return verdict(false, format!("grid points failed: {:?}", grid.errors));
    }
    let n_spots = grid.evals[0][0].spots.len();
    let metric = |ev: &Evaluation, i: usize, which: usize| -> f64 {
        let m = &ev.spots[i].metrics;
        match which {
            0 => m.p_cover,
            1 => m.n_cover,
            _ => m.ee_hs.unwrap_or(0.0),
        }
    };
    let names = ["P_cover", "n_cover", "EE_HS"];
    let along_gamma = [Direction::NonIncreasing, Direction::NonIncreasing, Direction::NonDecreasing];
    let along_theta = [Direction::NonIncreasing, Direction::NonIncreasing, Direction::NonIncreasing];
    let mut counts = [[0usize; 2]; 3];
    let mut examples = Vec::new();
    let mut nontrivial = 0;
    for which in 0..3 {
        for i in 0..n_spots {
            for t in 0..grid.thetas.len() {
                let series: Vec<f64> = grid.evals[t].iter().map(|ev| metric(ev, i, which)).collect();
                for k in monotone_violations(&series, along_gamma[which], MONOTONE_SLACK) {
                    counts[which][0] += 1;
                    examples.push(format!(
                        "{} spot {} theta={} gamma0 {}->{}: {:e}->{:e}",
                        names[which],
                        i + 1,
                        grid.thetas[t],
                        grid.gammas[k],
                        grid.gammas[k + 1],
                        series[k],
                        series[k + 1]
                    ));
                }
            }
            for g in 0..grid.gammas.len() {
                let series: Vec<f64> = grid.evals.iter().map(|row| metric(&row[g], i, which)).collect();
                for k in monotone_violations(&series, along_theta[which], MONOTONE_SLACK) {
                    counts[which][1] += 1;
                    examples.push(format!(
                        "{} spot {} gamma0={} theta {}->{}: {:e}->{:e}",
                        names[which],
                        i + 1,
                        grid.gammas[g],
                        grid.thetas[k],
                        grid.thetas[k + 1],
                        series[k],
                        series[k + 1]
                    ));
                }
            }
        }
    }
    for row in &grid.evals {
        for ev in row {
            nontrivial += ev.spots.iter().filter(|s| s.metrics.p_cover > MONOTONE_SLACK).count();
        }
    }
    let total: usize = counts.iter().flatten().sum();
    let detail = names
        .iter()
        .zip(&counts)
        .map(|(n, c)| format!("{n}: {} along gamma0, {} along theta", c[0], c[1]))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(
        total == 0,
        format!(
            "violations beyond {MONOTONE_SLACK:e}: {detail}; {nontrivial} of {} spot-points have P_cover above the slack; \
             first violations: {:?}",
            n_spots * grid.gammas.len() * grid.thetas.len(),
            &examples[..examples.len().min(3)]
        ),
    )
}

fn blocking_peak(grid: &Grid) -> Verdict {
    if !grid.errors.is_empty() {
        return verdict(false, format!("grid points failed: {:?}", grid.errors));
    }
    let n_spots = grid.evals[0][0].spots.len();
    let mut found = Vec::new();
    for (t, row) in grid.evals.iter().enumerate() {
        for i in 0..n_spots {
            let series: Vec<f64> = row.iter().map(|ev| ev.spots[i].metrics.p_block).collect();
            if has_interior_max(&series) {
                found.push((grid.thetas[t], i + 1));
            }
        }
    }
    let sample: Vec<String> =
        grid.evals[1].iter().map(|ev| format!("{:.3e}", ev.spots[0].metrics.p_block)).collect();
    verdict(
        !found.is_empty(),
        format!("(theta, spot) series with an interior P_B maximum: {found:?}; theta=15 spot 1 P_B: [{}]", sample.join(", ")),
    )
}

fn deployment_crossover() -> Verdict {
    let sc = scenario(TEN_SPOTS_UDS);
    let gammas = parse_range("1:4:0.25").unwrap();
    match compare_deployment(&sc, 1000, &gammas) {
        Ok(cmp) => {
            let diff = cmp.difference();
            let changes = sign_change_count(&diff);
            let at3 = gammas.iter().position(|g| (*g - 3.0).abs() < 1e-12).expect("grid holds 3");
            verdict(
                changes == 1,
                format!(
                    "{changes} sign change(s) of EE_UDS - EE_RDS on [1, 4], crossover at {:?}; \
                     at gamma0=3: EE_UDS={:.4e} EE_RDS={:.4e}",
                    cmp.crossovers, cmp.ee_uds[at3], cmp.ee_rds[at3]
                ),
            )
        }
        Err(e) => verdict(false, format!("comparison failed: {e}")),
    }
}

fn identities(grid: &Grid) -> Verdict {
    let mut evals: Vec<Evaluation> = grid.evals.iter().flatten().cloned().collect();
    let mut errors = grid.errors.clone();
    for text in [TEN_SPOTS, TEN_SPOTS_UDS, FIFTY_SPOTS] {
        match run_pipeline(&scenario(text)) {
            Ok(ev) => evals.push(ev),
            Err(e) => errors.push(e.to_string()),
        }
    }
    let mut worst: Vec<(&'static str, f64, f64)> = Vec::new();
    for ev in &evals {
        for c in &ev.identities {
            match worst.iter_mut().find(|w| w.0 == c.name) {
                Some(w) => w.1 = w.1.max(c.worst),
                None => worst.push((c.name, c.worst, c.tol)),
            }
        }
    }
    let pass = errors.is_empty() && worst.len() == 4 && worst.iter().all(|w| w.1 < w.2);
    let detail = worst
        .iter()
        .map(|w| format!("{} {:.1e} (limit {:e})", w.0, w.1, w.2))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(pass, format!("{} pipeline runs; {detail}; errors: {errors:?}", evals.len()))
}

fn report(n: usize, name: &str, f: impl FnOnce() -> Verdict) -> bool {
    let start = Instant::now();
    let v = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        verdict(false, format!("panicked: {msg}"))
    });
    println!(
        "criterion {n} [{name}]: {} - {} ({:.1} s)",
        if v.pass { "PASS" } else { "FAIL" },
        v.detail,
        start.elapsed().as_secs_f64()
    );
    v.pass
}

fn main() {
    let mut results = vec![
        report(1, "populations vs mobility simulation", mobility_vs_oracle),
        report(2, "Laplace inversion accuracy", euler_accuracy),
        report(3, "coverage vs SINR simulation", coverage_vs_oracle),
        report(4, "access chain product form", access_product_form),
    ];
    let grid = theta_grid();
    results.push(report(5, "monotonicity over gamma0 x theta", || monotonicity(&grid)));
    results.push(report(6, "blocking interior maximum", || blocking_peak(&grid)));
    results.push(report(7, "UDS/RDS crossover", deployment_crossover));
    results.push(report(8, "identities on every run", || identities(&grid)));
    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
