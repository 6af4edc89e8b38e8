//! End-to-end evaluation: mobility, populations, deployment, coverage,
//! access and metrics, plus sweeps, oracle comparisons and CSV output.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::access::{
    access_fixed_point, call_rate, epsilon_conditional, epsilon_s, stationary_pi, ChannelParams,
    EpsilonMode,
};
use crate::coverage::{
    coverage_fixed_point, coverage_with_interferers, disk_distance_cdf, disk_distance_mean,
    sinr_tail, RadioParams,
};
use crate::error::{Result, UdnError};
use crate::jackson::{stationary_state, StationaryState};
use crate::metrics::{
    capacity_per_channel, make_deployment, spot_metrics, system_metrics, theta_deployment,
    DeploymentPlan, DeploymentStrategy, PowerParams, SpotMetrics, SystemMetrics,
};
use crate::mobility::{build_transfer_matrix, external_arrival_rates, TransferMatrix};
use crate::oracles::{
    ks_statistic, sample_disk_distance, simulate_ctmc, simulate_mobility, simulate_sinr, SimConfig,
};
use crate::scenario::{DeploymentSpec, Scenario};

/// Formats like C's `%.9g`.
pub fn fmt_g9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_g9).unwrap_or_default()
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub scenario: Scenario,
    pub tm: TransferMatrix,
    pub a: Vec<f64>,
    pub state: StationaryState,
}

const ROW_IDENTITY_TOL: f64 = 1e-12;
const QUADRATIC_TOL: f64 = 1e-9;
const EE_IDENTITY_TOL: f64 = 1e-12;

pub fn prepare(sc: &Scenario) -> Result<Prepared> {
    sc.validate()?;
    let tm = build_transfer_matrix(&sc.mobility).map_err(|e| e.at_stage("mobility", 0))?;
    let a = external_arrival_rates(&sc.mobility, &tm);
    let state = stationary_state(&tm, &a, sc.mobility.zeta).map_err(|e| e.at_stage("jackson", 0))?;
    let row = tm.row_identity_error();
    if row >= ROW_IDENTITY_TOL {
        return Err(UdnError::numeric(format!("row identity violated by {row:e}")));
    }
    let quad = state.quadratic_residual(sc.mobility.zeta);
    if quad >= QUADRATIC_TOL {
        return Err(UdnError::numeric(format!("population quadratic residual {quad:e}")));
    }
    Ok(Prepared { scenario: sc.clone(), tm, a, state })
}

pub fn plan_for(prep: &Prepared, spec: &DeploymentSpec) -> Result<DeploymentPlan> {
    let pop = &prep.state.pop;
    match spec {
        DeploymentSpec::Uds { total_sbs } => make_deployment(DeploymentStrategy::Uds, *total_sbs, pop),
        DeploymentSpec::Rds { total_sbs } => make_deployment(DeploymentStrategy::Rds, *total_sbs, pop),
        DeploymentSpec::Explicit(v) => {
            make_deployment(DeploymentStrategy::Explicit(v.clone()), v.iter().sum(), pop)
        }
        DeploymentSpec::Theta(t) => theta_deployment(pop, t),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub gamma0: f64,
    pub epsilon_mode: EpsilonMode,
    pub force_n_int: Option<f64>,
}

impl EvalOptions {
    pub fn from_scenario(sc: &Scenario) -> Self {
        EvalOptions {
            gamma0: sc.radio.gamma0,
            epsilon_mode: sc.access.epsilon_mode,
            force_n_int: sc.access.force_n_int,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpotOutcome {
    pub metrics: SpotMetrics,
    pub pop: f64,
    pub lambda: f64,
    pub call_rate: f64,
    pub eps_s: f64,
    pub p_serve: f64,
    /// Covering SBSs that can also serve the call, `n_cover (1 - P_B)`.
    pub n_server: f64,
    pub coverage_iterations: usize,
    pub access_iterations: usize,
    /// Channel parameters of the solved access chain.
    #[serde(skip)]
    pub channel: ChannelParams,
    #[serde(skip)]
    pub n_int: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub worst: f64,
    pub tol: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.worst < self.tol
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub gamma0: f64,
    pub plan: DeploymentPlan,
    pub spots: Vec<SpotOutcome>,
    pub system: SystemMetrics,
    pub identities: Vec<IdentityCheck>,
}

fn evaluate_spot(prep: &Prepared, i: usize, n_sbs: usize, opts: &EvalOptions) -> Result<SpotOutcome> {
    let sc = &prep.scenario;
    let spot = &sc.mobility.hot_spots[i];
    let id = spot.id;
    let rp = RadioParams {
        alpha_p: sc.radio.alpha_p,
        rho0: sc.radio.rho0,
        eta: sc.radio.eta,
        gamma0: opts.gamma0,
        l_i: spot.radius,
        n_sbs,
    };
    let ep = &sc.euler;
    let cov = match opts.force_n_int {
        Some(n) => coverage_with_interferers(&rp, ep, n),
        None => coverage_fixed_point(&rp, ep),
    }
    .map_err(|e| e.at_stage("coverage", id))?;
    let capacity = capacity_per_channel(&cov).map_err(|e| e.at_stage("capacity", id))?;
    let pop = prep.state.pop[i];
    let rate = call_rate(pop, sc.channel.p_s, cov.n_cover, n_sbs).map_err(|e| e.at_stage("access", id))?;
    let template = ChannelParams::new(sc.channel.c, sc.channel.p_s, sc.channel.mu_s, rate, 0.5);
    let access = match opts.epsilon_mode {
        EpsilonMode::Literal => access_fixed_point(&template, |p| epsilon_s(cov.p_cover, cov.n_int, p)),
        EpsilonMode::Conditional => {
            let mut memo: Vec<Option<f64>> = Vec::new();
            access_fixed_point(&template, |p| {
                epsilon_conditional(cov.n_int, p, |delta| {
                    if memo.len() <= delta {
                        memo.resize(delta + 1, None);
                    }
                    if let Some(v) = memo[delta] {
                        return Ok(v);
                    }
                    let v = sinr_tail(opts.gamma0, delta as f64, &rp, ep)?.value;
                    memo[delta] = Some(v);
                    Ok(v)
                })
            })
        }
    }
    .map_err(|e| e.at_stage("access", id))?;
    let metrics = spot_metrics(id, n_sbs, capacity, &cov, &access.dist, &sc.power);
    let p_serve = access.dist.p_serve();
    Ok(SpotOutcome {
        pop,
        lambda: prep.state.lambda[i],
        call_rate: rate,
        eps_s: access.eps_s.eps,
        p_serve,
        n_server: cov.n_cover * p_serve,
        coverage_iterations: cov.iterations,
        access_iterations: access.iterations,
        channel: template.with_unavailability(access.eps_s),
        n_int: cov.n_int,
        metrics,
    })
}

fn relative_gap(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

pub fn evaluate(prep: &Prepared, plan: &DeploymentPlan, opts: &EvalOptions) -> Result<Evaluation> {
    if plan.per_spot.len() != prep.scenario.n_p() {
        return Err(UdnError::input("deployment plan does not match the number of hot spots"));
    }
    let spots: Vec<SpotOutcome> = plan
        .per_spot
        .par_iter()
        .enumerate()
        .map(|(i, &n)| evaluate_spot(prep, i, n, opts))
        .collect::<Result<_>>()?;
    let power = &prep.scenario.power;
    let metrics: Vec<SpotMetrics> = spots.iter().map(|s| s.metrics.clone()).collect();
    let system = system_metrics(&metrics, power)?;

    let long = PowerParams { t_to: power.t_to * 3600.0, ..power.clone() };
    let long_metrics: Vec<SpotMetrics> = metrics
        .iter()
        .map(|m| SpotMetrics {
            e_to: m.power * long.t_to,
            e_hs: m.n_sbs as f64 * m.power * long.t_to,
            ee_s: m.ee_s.map(|_| m.t_s * long.t_to / (m.power * long.t_to)),
            ee_hs: m.ee_hs.map(|_| m.t_hs * long.t_to / (m.n_sbs as f64 * m.power * long.t_to)),
            ..m.clone()
        })
        .collect();
    let long_system = system_metrics(&long_metrics, &long)?;
    let mut t_to_gap = relative_gap(system.ee_qn, long_system.ee_qn);
    let mut hs_gap: f64 = 0.0;
    for (m, l) in metrics.iter().zip(&long_metrics) {
        if let (Some(a), Some(b)) = (m.ee_s, l.ee_s) {
            t_to_gap = t_to_gap.max(relative_gap(a, b));
        }
        if let (Some(a), Some(b)) = (m.ee_s, m.ee_hs) {
            hs_gap = hs_gap.max(relative_gap(a, b));
        }
    }
    let identities = vec![
        IdentityCheck { name: "row_identity", worst: prep.tm.row_identity_error(), tol: ROW_IDENTITY_TOL },
        IdentityCheck {
            name: "population_quadratic",
            worst: prep.state.quadratic_residual(prep.scenario.mobility.zeta),
            tol: QUADRATIC_TOL,
        },
        IdentityCheck { name: "ee_hotspot_equals_ee_sbs", worst: hs_gap, tol: EE_IDENTITY_TOL },
        IdentityCheck { name: "ee_invariant_to_t_to", worst: t_to_gap, tol: EE_IDENTITY_TOL },
    ];
    if let Some(bad) = identities.iter().find(|c| !c.passed()) {
        return Err(UdnError::numeric(format!(
            "identity `{}` violated: {:e} >= {:e}",
            bad.name, bad.worst, bad.tol
        )));
    }
    Ok(Evaluation { gamma0: opts.gamma0, plan: plan.clone(), spots, system, identities })
}

pub fn run_pipeline(sc: &Scenario) -> Result<Evaluation> {
    let prep = prepare(sc)?;
    let plan = plan_for(&prep, &sc.deployment)?;
    evaluate(&prep, &plan, &EvalOptions::from_scenario(sc))
}

const RUN_HEADER: [&str; 23] = [
    "spot", "n_sbs", "pop", "lambda", "call_rate", "p_cover", "n_cover", "n_int", "eps_s",
    "p_block", "p_serve", "n_server", "p_idle", "n_oc_mean", "capacity", "t_s", "t_hs", "power",
    "e_to", "e_hs", "ee_s", "ee_hs", "ee_qn",
];

fn spot_row(s: &SpotOutcome) -> Vec<String> {
    let m = &s.metrics;
    vec![
        m.id.to_string(),
        m.n_sbs.to_string(),
        fmt_g9(s.pop),
        fmt_g9(s.lambda),
        fmt_g9(s.call_rate),
        fmt_g9(m.p_cover),
        fmt_g9(m.n_cover),
        fmt_g9(m.n_int),
        fmt_g9(s.eps_s),
        fmt_g9(m.p_block),
        fmt_g9(s.p_serve),
        fmt_g9(s.n_server),
        fmt_g9(m.p_idle),
        fmt_g9(m.n_oc_mean),
        fmt_g9(m.capacity),
        fmt_g9(m.t_s),
        fmt_g9(m.t_hs),
        fmt_g9(m.power),
        fmt_g9(m.e_to),
        fmt_g9(m.e_hs),
        fmt_opt(m.ee_s),
        fmt_opt(m.ee_hs),
        String::new(),
    ]
}

fn system_row(ev: &Evaluation) -> Vec<String> {
    let mut row = vec![String::new(); RUN_HEADER.len()];
    row[0] = "system".into();
    row[1] = ev.plan.per_spot.iter().sum::<usize>().to_string();
    row[16] = fmt_g9(ev.system.t_qn);
    row[19] = fmt_g9(ev.system.e_qn);
    row[22] = fmt_g9(ev.system.ee_qn);
    row
}

pub fn write_run_csv<W: Write>(out: W, ev: &Evaluation) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUN_HEADER)?;
    for s in &ev.spots {
        w.write_record(spot_row(s))?;
    }
    w.write_record(system_row(ev))?;
    w.flush()?;
    Ok(())
}

/// Inclusive grid `start, start + step, ..., <= stop`.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(UdnError::input(format!("range `{text}` must look like start:stop:step")));
    };
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| UdnError::input(format!("`{s}` in range `{text}` is not a number")))
    };
    let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
    if !(step > 0.0) || !(start < stop) || !start.is_finite() || !stop.is_finite() {
        return Err(UdnError::input(format!("range `{text}` is empty (need start < stop and step > 0)")));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub gamma0: f64,
    pub theta: Option<f64>,
    pub total_sbs: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub point: SweepPoint,
    pub outcome: std::result::Result<Evaluation, String>,
}

fn spec_for(sc: &Scenario, p: &SweepPoint) -> DeploymentSpec {
    if let Some(t) = p.theta {
        return DeploymentSpec::Theta(vec![t; sc.n_p()]);
    }
    if let Some(total_sbs) = p.total_sbs {
        return match sc.deployment {
            DeploymentSpec::Rds { .. } => DeploymentSpec::Rds { total_sbs },
            _ => DeploymentSpec::Uds { total_sbs },
        };
    }
    sc.deployment.clone()
}

/// Evaluates every grid point; failures become error rows.
pub fn sweep(sc: &Scenario, points: &[SweepPoint]) -> Result<Vec<SweepRow>> {
    if points.is_empty() {
        return Err(UdnError::input("sweep grid is empty"));
    }
    let prep = prepare(sc)?;
    let base = EvalOptions::from_scenario(sc);
    Ok(points
        .par_iter()
        .map(|p| {
            let opts = EvalOptions { gamma0: p.gamma0, ..base.clone() };
            let outcome = plan_for(&prep, &spec_for(sc, p))
                .and_then(|plan| evaluate(&prep, &plan, &opts))
                .map_err(|e| e.to_string());
            if let Err(msg) = &outcome {
                log::warn!("sweep point gamma0={} failed: {msg}", p.gamma0);
            }
            SweepRow { point: p.clone(), outcome }
        })
        .collect())
}

pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["gamma0", "theta", "total_sbs", "status"];
    header.extend_from_slice(&RUN_HEADER);
    w.write_record(&header)?;
    for r in rows {
        let lead = vec![
            fmt_g9(r.point.gamma0),
            fmt_opt(r.point.theta),
            r.point.total_sbs.map(|t| t.to_string()).unwrap_or_default(),
        ];
        match &r.outcome {
            Ok(ev) => {
                for s in &ev.spots {
                    let mut rec = lead.clone();
                    rec.push("ok".into());
                    rec.extend(spot_row(s));
                    w.write_record(&rec)?;
                }
                let mut rec = lead.clone();
                rec.push("ok".into());
                rec.extend(system_row(ev));
                w.write_record(&rec)?;
            }
            Err(msg) => {
                let mut rec = lead.clone();
                rec.push(format!("error: {msg}"));
                rec.extend(std::iter::repeat_n(String::new(), RUN_HEADER.len()));
                w.write_record(&rec)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    Mobility,
    Sinr,
    Ctmc,
    Distance,
}

impl std::str::FromStr for OracleKind {
    type Err = UdnError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mobility" => Ok(OracleKind::Mobility),
            "sinr" => Ok(OracleKind::Sinr),
            "ctmc" => Ok(OracleKind::Ctmc),
            "distance" => Ok(OracleKind::Distance),
            other => Err(UdnError::input(format!(
                "unknown oracle `{other}` (expected mobility, sinr, ctmc or distance)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub label: String,
    pub analytic: f64,
    pub simulated: f64,
    pub stderr: f64,
    pub tolerance: f64,
    /// `None` when the comparison does not apply.
    pub pass: Option<bool>,
}

pub const MOBILITY_REL_TOL: f64 = 0.05;
pub const MOBILITY_MIN_POP: f64 = 10.0;
pub const SINR_ABS_TOL: f64 = 0.02;
pub const CTMC_TV_TOL: f64 = 0.01;
pub const KS_TOL: f64 = 0.005;

/// Runs one oracle against the matching analytic quantity.
pub fn simulate(sc: &Scenario, which: OracleKind, cfg: &SimConfig) -> Result<Vec<ComparisonRow>> {
    let prep = prepare(sc)?;
    match which {
        OracleKind::Mobility => {
            let est = simulate_mobility(&sc.mobility, &prep.tm, &prep.a, cfg)?;
            Ok(est
                .iter()
                .zip(&prep.state.pop)
                .enumerate()
                .map(|(i, (e, &p))| {
                    let tolerance = (MOBILITY_REL_TOL * p).max(3.0 * e.stderr);
                    ComparisonRow {
                        label: format!("population spot {}", i + 1),
                        analytic: p,
                        simulated: e.mean,
                        stderr: e.stderr,
                        tolerance,
                        pass: (p >= MOBILITY_MIN_POP).then(|| (e.mean - p).abs() <= tolerance),
                    }
                })
                .collect())
        }
        OracleKind::Sinr | OracleKind::Ctmc => {
            let plan = plan_for(&prep, &sc.deployment)?;
            let ev = evaluate(&prep, &plan, &EvalOptions::from_scenario(sc))?;
            let mut rows = Vec::new();
            for s in &ev.spots {
                let id = s.metrics.id;
                if which == OracleKind::Sinr {
                    let rp = RadioParams {
                        alpha_p: sc.radio.alpha_p,
                        rho0: sc.radio.rho0,
                        eta: sc.radio.eta,
                        gamma0: ev.gamma0,
                        l_i: sc.mobility.hot_spots[id - 1].radius,
                        n_sbs: s.metrics.n_sbs,
                    };
                    // The fixed point returns F(P); the drops use the interferer count behind it.
                    let e = simulate_sinr(&rp, s.n_int, &SimConfig { seed: cfg.seed ^ id as u64, ..cfg.clone() })?;
                    let analytic = sinr_tail(ev.gamma0, s.n_int, &rp, &sc.euler)?.value;
                    let tolerance = SINR_ABS_TOL.max(3.0 * e.stderr);
                    rows.push(ComparisonRow {
                        label: format!("p_cover spot {id}"),
                        analytic,
                        simulated: e.mean,
                        stderr: e.stderr,
                        tolerance,
                        pass: Some((e.mean - analytic).abs() <= tolerance),
                    });
                } else {
                    let cp = &s.channel;
                    let label = format!("access distribution spot {id}");
                    if !(cp.eps_s > 0.0 && cp.eps_s < 1.0) {
                        rows.push(ComparisonRow {
                            label,
                            analytic: f64::NAN,
                            simulated: f64::NAN,
                            stderr: f64::NAN,
                            tolerance: CTMC_TV_TOL,
                            pass: None,
                        });
                        continue;
                    }
                    let e = simulate_ctmc(cp, &SimConfig { seed: cfg.seed ^ id as u64, ..cfg.clone() })?;
                    let pi = stationary_pi(cp)?;
                    let tv = e.total_variation(&pi.pi);
                    rows.push(ComparisonRow {
                        label: format!("{label} (total variation)"),
                        analytic: 0.0,
                        simulated: tv,
                        stderr: f64::NAN,
                        tolerance: CTMC_TV_TOL,
                        pass: Some(tv < CTMC_TV_TOL),
                    });
                }
            }
            Ok(rows)
        }
        OracleKind::Distance => {
            let mut rows = Vec::new();
            for (k, spot) in sc.mobility.hot_spots.iter().enumerate() {
                let l = spot.radius;
                let c = SimConfig { seed: cfg.seed ^ k as u64, ..cfg.clone() };
                let xs = sample_disk_distance(l, &c)?;
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                let stderr = (var / n).sqrt();
                let analytic = disk_distance_mean(l);
                rows.push(ComparisonRow {
                    label: format!("mean distance spot {}", spot.id),
                    analytic,
                    simulated: mean,
                    stderr,
                    tolerance: 3.0 * stderr,
                    pass: Some((mean - analytic).abs() <= 3.0 * stderr.max(f64::MIN_POSITIVE)),
                });
                let ks = ks_statistic(xs, |x| disk_distance_cdf(x, l));
                rows.push(ComparisonRow {
                    label: format!("ks statistic spot {}", spot.id),
                    analytic: 0.0,
                    simulated: ks,
                    stderr: f64::NAN,
                    tolerance: KS_TOL,
                    pass: Some(ks < KS_TOL),
                });
            }
            Ok(rows)
        }
    }
}

pub fn write_comparison_csv<W: Write>(out: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["check", "analytic", "simulated", "stderr", "tolerance", "result"])?;
    for r in rows {
        let result = match r.pass {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "skipped",
        };
        w.write_record([
            r.label.clone(),
            fmt_g9(r.analytic),
            fmt_g9(r.simulated),
            fmt_g9(r.stderr),
            fmt_g9(r.tolerance),
            result.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeploymentComparison {
    pub gamma0: Vec<f64>,
    pub ee_uds: Vec<f64>,
    pub ee_rds: Vec<f64>,
    /// Linear-interpolated locations where `EE_UDS - EE_RDS` changes sign.
    pub crossovers: Vec<f64>,
}

impl DeploymentComparison {
    pub fn difference(&self) -> Vec<f64> {
        self.ee_uds.iter().zip(&self.ee_rds).map(|(u, r)| u - r).collect()
    }
}

/// Sign changes of a series, skipping exact zeros; located by linear interpolation.
pub fn sign_changes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = x.iter().cloned().zip(y.iter().cloned()).filter(|p| p.1 != 0.0).collect();
    pts.windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .map(|w| {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            x0 + (x1 - x0) * y0 / (y0 - y1)
        })
        .collect()
}

pub fn compare_deployment(sc: &Scenario, total_sbs: usize, gammas: &[f64]) -> Result<DeploymentComparison> {
    if gammas.is_empty() {
        return Err(UdnError::input("gamma0 grid is empty"));
    }
    let prep = prepare(sc)?;
    let uds = plan_for(&prep, &DeploymentSpec::Uds { total_sbs })?;
    let rds = plan_for(&prep, &DeploymentSpec::Rds { total_sbs })?;
    let base = EvalOptions::from_scenario(sc);
    let mut ee_uds = Vec::new();
    let mut ee_rds = Vec::new();
    for &g in gammas {
        let opts = EvalOptions { gamma0: g, ..base.clone() };
        ee_uds.push(evaluate(&prep, &uds, &opts)?.system.ee_qn);
        ee_rds.push(evaluate(&prep, &rds, &opts)?.system.ee_qn);
    }
    let diff: Vec<f64> = ee_uds.iter().zip(&ee_rds).map(|(u, r)| u - r).collect();
    let crossovers = sign_changes(gammas, &diff);
    Ok(DeploymentComparison { gamma0: gammas.to_vec(), ee_uds, ee_rds, crossovers })
}

pub fn write_deployment_csv<W: Write>(out: W, cmp: &DeploymentComparison) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["gamma0", "ee_uds", "ee_rds", "difference", "crossover"])?;
    let diff = cmp.difference();
    for k in 0..cmp.gamma0.len() {
        let lo = cmp.gamma0[k];
        let hi = cmp.gamma0.get(k + 1).copied().unwrap_or(f64::INFINITY);
        let cross: Vec<String> =
            cmp.crossovers.iter().filter(|&&c| c >= lo && c < hi).map(|&c| fmt_g9(c)).collect();
        w.write_record([
            fmt_g9(lo),
            fmt_g9(cmp.ee_uds[k]),
            fmt_g9(cmp.ee_rds[k]),
            fmt_g9(diff[k]),
            cross.join(";"),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::parse_scenario;

    #[test]
    fn g9_formatting() {
        assert_eq!(fmt_g9(0.0), "0");
        assert_eq!(fmt_g9(1.0), "1");
        assert_eq!(fmt_g9(0.1), "0.1");
        assert_eq!(fmt_g9(1.0 / 3.0), "0.333333333");
        assert_eq!(fmt_g9(123456789.0), "123456789");
        assert_eq!(fmt_g9(1234567890.0), "1.23456789e+09");
        assert_eq!(fmt_g9(1e-5), "1e-05");
        assert_eq!(fmt_g9(1.5e-4), "0.00015");
        assert_eq!(fmt_g9(-2.5e-40), "-2.5e-40");
        assert_eq!(fmt_g9(9.8193236714975845), "9.81932367");
    }

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1:5:1").unwrap(), vec![1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(parse_range("1:2:0.5").unwrap(), vec![1.0, 1.5, 2.0]);
        assert_eq!(parse_range("1:5:0.5").unwrap().len(), 9);
        assert!(parse_range("5:1:1").is_err());
        assert!(parse_range("1:1:1").is_err());
        assert!(parse_range("1:5:0").is_err());
        assert!(parse_range("1:5").is_err());
    }

    #[test]
    fn sign_change_location() {
        let c = sign_changes(&[1.0, 2.0, 3.0, 4.0], &[-1.0, -0.5, 0.5, 1.0]);
        assert_eq!(c, vec![2.5]);
        assert!(sign_changes(&[1.0, 2.0], &[1.0, 2.0]).is_empty());
    }

    fn toy() -> Scenario {
        parse_scenario(
            r#"
[[hot_spots]]
center = [0.0, 0.0]
attraction = 40

[deployment]
per_spot = [2]
"#,
        )
        .unwrap()
    }

    #[test]
    fn single_spot_collapses() {
        let ev = run_pipeline(&toy()).unwrap();
        let s = &ev.spots[0].metrics;
        assert_eq!(ev.system.ee_qn, s.ee_hs.unwrap());
        assert!(ev.identities.iter().all(|c| c.passed()));
    }

    #[test]
    fn csv_is_reproducible() {
        let sc = toy();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_run_csv(&mut a, &run_pipeline(&sc).unwrap()).unwrap();
        write_run_csv(&mut b, &run_pipeline(&sc).unwrap()).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("spot,n_sbs,pop"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn forced_noise_only_mode() {
        let mut sc = toy();
        sc.access.force_n_int = Some(0.0);
        let ev = run_pipeline(&sc).unwrap();
        assert!((ev.spots[0].metrics.p_cover - (-0.01f64).exp()).abs() < 1e-6);
        assert_eq!(ev.spots[0].metrics.n_cover, 2.0);
    }

    #[test]
    fn equal_spots_make_strategies_agree() {
        let sc = parse_scenario(
            r#"
[[hot_spots]]
center = [0.0, 0.0]
attraction = 50
[[hot_spots]]
center = [5.0, 0.0]
attraction = 50
"#,
        )
        .unwrap();
        let cmp = compare_deployment(&sc, 6, &[1.0, 2.0]).unwrap();
        assert_eq!(cmp.ee_uds, cmp.ee_rds);
        assert!(cmp.crossovers.is_empty());
    }

    #[test]
    fn sweep_records_errors_without_aborting() {
        let sc = toy();
        let pts = vec![
            SweepPoint { gamma0: 1.0, theta: None, total_sbs: None },
            SweepPoint { gamma0: 1.0, theta: None, total_sbs: Some(0) },
        ];
        let rows = sweep(&sc, &pts).unwrap();
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.is_err());
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        assert!(String::from_utf8(buf).unwrap().contains("error: "));
    }
}
