//! One function per subcommand. Each resolves its inputs (flag > config >
//! default), runs the core routine, writes <out>.csv plus <out>.json, and
//! prints a one-line summary with the output paths.

use std::path::PathBuf;

use serde_json::{json, Value};

use blochlab_core::{
    bayes_sqrt_risk, bures_sq_expansion, concentration_check, fit_loglog, lan_trace_distance,
    max_risk_sweep, monte_carlo_risk, poisson_sqrt_risk, qre_expansion, scaling_fit,
    typical_two_j, BlochState, ConcentrationCase, EstimatorSpec, GammaPrior, GridSpec, Loss,
    RiskEstimate, ScalingFit,
};

use crate::args::{
    CaseKind, ConcentrationArgs, ConfigFile, EstimatorKind, LanCheckArgs, LossKind,
    MetricsCheckArgs, PoissonRiskArgs, RiskArgs, ScalingArgs,
};
use crate::output::{fmt_f, output_paths, write_sidecar, Csv};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config, out-of-domain inputs. Exit code 2.
    Usage(String),
    /// Numeric or runtime failure on valid inputs. Exit code 3.
    Failure(String),
}

impl From<blochlab_core::Error> for CliError {
    fn from(e: blochlab_core::Error) -> Self {
        use blochlab_core::Error as E;
        match &e {
            E::Domain(_) | E::DirectionUndefined => CliError::Usage(e.to_string()),
            E::CutoffTooSmall { needed, .. } => {
                CliError::Failure(format!("{e}; retry with --cutoff {needed}"))
            }
            _ => CliError::Failure(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("io: {e}"))
    }
}

type CliResult<T> = Result<T, CliError>;

/// Globals already merged with the config file.
pub struct Globals {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
}

impl Globals {
    /// Output basename for a command: --out if given, else the command name
    /// inside $BLOCHLAB_OUT (or the working directory).
    fn out_base(&self, name: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| {
            std::env::var_os("BLOCHLAB_OUT")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."))
                .join(name)
        })
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_f64_list(s: &str, what: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| usage(format!("{what}: bad entry {t:?}")))
        })
        .collect()
}

fn parse_u64_list(s: &str, what: &str) -> CliResult<Vec<u64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u64>()
                .map_err(|_| usage(format!("{what}: bad entry {t:?}")))
        })
        .collect()
}

fn parse_truth(s: &str) -> CliResult<BlochState> {
    let v = parse_f64_list(s, "--truth")?;
    if v.len() != 3 {
        return Err(usage(format!("--truth needs three components, got {}", v.len())));
    }
    Ok(BlochState::from_xyz(v[0], v[1], v[2])?)
}

fn parse_grid(s: &str) -> CliResult<GridSpec> {
    if s.trim() == "default" {
        return Ok(GridSpec::Default);
    }
    let radii = parse_f64_list(s, "--grid")?;
    Ok(GridSpec::ZAxis { radii })
}

impl LossKind {
    fn to_loss(self) -> Loss {
        match self {
            LossKind::Bures => Loss::BuresSq,
            LossKind::Qre => Loss::Qre,
            LossKind::Hellinger => Loss::HellingerEigen,
        }
    }
}

/// Turns the estimator flags into a spec plus the resolved-parameter JSON
/// echoed into the sidecar.
#[allow(clippy::too_many_arguments)]
fn resolve_estimator(
    kind: EstimatorKind,
    fraction: Option<f64>,
    kappa: Option<f64>,
    delta: Option<f64>,
    c: Option<f64>,
    power: Option<f64>,
    with_log: bool,
) -> (EstimatorSpec, Value) {
    match kind {
        EstimatorKind::Local => {
            let f = fraction.unwrap_or(0.5);
            (
                EstimatorSpec::Local { fraction: f },
                json!({"kind": "local", "fraction": f}),
            )
        }
        EstimatorKind::Collective => {
            let k = kappa.unwrap_or(0.1);
            let d = delta.unwrap_or(0.1);
            (
                EstimatorSpec::Collective { kappa: k, delta: d },
                json!({"kind": "collective", "kappa": k, "delta": d}),
            )
        }
        EstimatorKind::Naive => (EstimatorSpec::Naive, json!({"kind": "naive"})),
        EstimatorKind::TruthOracle => {
            (EstimatorSpec::TruthOracle, json!({"kind": "truth_oracle"}))
        }
        EstimatorKind::Synthetic => {
            let c = c.unwrap_or(1.0);
            let p = power.unwrap_or(-1.0);
            (
                EstimatorSpec::Synthetic { c, power: p, with_log },
                json!({"kind": "synthetic", "c": c, "power": p, "with_log": with_log}),
            )
        }
    }
}

fn risk_csv_header() -> [&'static str; 10] {
    [
        "estimator", "loss", "n", "r_x", "r_y", "r_z", "trials", "mean", "stderr", "seed",
    ]
}

fn risk_csv_row(csv: &mut Csv, est: &RiskEstimate, r: &[f64; 3], seed: u64) {
    csv.row(&[
        est.estimator_name.clone(),
        est.loss_name.clone(),
        est.n.to_string(),
        fmt_f(r[0]),
        fmt_f(r[1]),
        fmt_f(r[2]),
        est.trials.to_string(),
        fmt_f(est.mean),
        fmt_f(est.stderr),
        seed.to_string(),
    ]);
}

pub fn cmd_poisson_risk(a: &PoissonRiskArgs, cfg: &ConfigFile, g: &Globals) -> CliResult<()> {
    let mu_min = a.mu_min.or(cfg.mu_min).unwrap_or(0.01);
    let mu_max = a.mu_max.or(cfg.mu_max).unwrap_or(400.0);
    let steps = a.steps.or(cfg.steps).unwrap_or(400);
    if !(mu_min > 0.0 && mu_max > mu_min) {
        return Err(usage(format!("need 0 < mu_min < mu_max, got {mu_min}..{mu_max}")));
    }
    if steps < 2 {
        return Err(usage("--steps must be at least 2"));
    }
    let alpha = a.alpha.or(cfg.alpha);
    let beta = a.beta.or(cfg.beta);
    let prior = match (alpha, beta) {
        (Some(al), Some(be)) => Some(GammaPrior::new(al, be)?),
        (None, None) => None,
        _ => return Err(usage("--alpha and --beta must be given together")),
    };

    // Log-spaced with the endpoints landing exactly on mu_min and mu_max.
    let lr = (mu_max / mu_min).ln();
    let mus: Vec<f64> = (0..steps)
        .map(|i| {
            if i == steps - 1 {
                mu_max
            } else {
                mu_min * (lr * i as f64 / (steps - 1) as f64).exp()
            }
        })
        .collect();

    let header: Vec<&str> = if prior.is_some() {
        vec!["mu", "risk", "bayes_risk"]
    } else {
        vec!["mu", "risk"]
    };
    let mut csv = Csv::new(&header);
    let mut max_risk = f64::NEG_INFINITY;
    let mut argmax = mus[0];
    let mut bayes_sup = f64::NEG_INFINITY;
    let mut last = (0.0, 0.0);
    for &mu in &mus {
        let r = poisson_sqrt_risk(mu)?.risk;
        if r > max_risk {
            max_risk = r;
            argmax = mu;
        }
        if let Some(p) = &prior {
            let rb = bayes_sqrt_risk(mu, p)?.risk;
            bayes_sup = bayes_sup.max(rb);
            csv.row(&[fmt_f(mu), fmt_f(r), fmt_f(rb)]);
            last = (r, rb);
        } else {
            csv.row(&[fmt_f(mu), fmt_f(r)]);
            last = (r, f64::NAN);
        }
    }

    let resolved = json!({
        "mu_min": mu_min, "mu_max": mu_max, "steps": steps,
        "alpha": alpha, "beta": beta, "seed": g.seed,
    });
    let results = json!({
        "max_risk": max_risk,
        "argmax_mu": argmax,
        "risk_at_mu_max": last.0,
        "bayes_sup": prior.as_ref().map(|_| bayes_sup),
        "bayes_risk_at_mu_max": prior.as_ref().map(|_| last.1),
    });
    let base = g.out_base("poisson-risk");
    let (csv_path, json_path) = output_paths(&base)?;
    csv.write(&csv_path)?;
    write_sidecar(&json_path, "poisson-risk", g.workers, resolved, results)?;
    println!(
        "poisson-risk: max R = {:.6} at mu = {:.4}; wrote {} and {}",
        max_risk,
        argmax,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

pub fn cmd_risk(a: &RiskArgs, cfg: &ConfigFile, g: &Globals) -> CliResult<()> {
    let n = a.n.or(cfg.n).unwrap_or(10_000);
    let trials = a.trials.or(cfg.trials).unwrap_or(1000);
    let loss_kind = a.loss.or(cfg.loss).unwrap_or(LossKind::Bures);
    let est_kind = a.estimator.or(cfg.estimator).unwrap_or(EstimatorKind::Local);
    let with_log = a.synthetic_log || cfg.synthetic_log.unwrap_or(false);
    let (spec, est_json) = resolve_estimator(
        est_kind,
        a.fraction.or(cfg.fraction),
        a.kappa.or(cfg.kappa),
        a.delta.or(cfg.delta),
        a.synthetic_c.or(cfg.synthetic_c),
        a.synthetic_power.or(cfg.synthetic_power),
        with_log,
    );
    let loss = loss_kind.to_loss();
    // Analytic reference levels for n * risk at this dispatch radius: the
    // interior two-step floor, the collective ceiling, and the bound the
    // ball branch satisfies near the center.
    let delta = a.delta.or(cfg.delta).unwrap_or(0.1);
    let constants = json!({
        "interior_floor": 1.25,
        "collective_ceiling": 1.5,
        "center_ball_bound": 0.75 * (1.0 + delta / (1.0 - delta)),
    });
    let truth_str = a.truth.clone().or_else(|| cfg.truth.clone());
    let grid_str = a
        .grid
        .clone()
        .or_else(|| cfg.grid.clone())
        .unwrap_or_else(|| "default".into());

    let header = risk_csv_header();
    let mut csv = Csv::new(&header);
    let resolved = json!({
        "estimator": est_json, "loss": spec_loss_name(loss_kind), "n": n,
        "trials": trials, "grid": truth_str.is_none().then_some(grid_str.clone()),
        "truth": truth_str, "seed": g.seed,
    });

    let (results, summary) = if let Some(ts) = resolved["truth"].as_str() {
        let truth = parse_truth(ts)?;
        let est = monte_carlo_risk(&spec, &truth, n, trials, loss, g.seed)?;
        let r = truth.r();
        risk_csv_row(&mut csv, &est, &[r.x, r.y, r.z], g.seed);
        let n_times = n as f64 * est.mean;
        (
            json!({
                "mode": "pointwise",
                "risk": serde_json::to_value(&est).expect("serializable"),
                "n_times_risk": n_times,
                "reference_constants": constants,
            }),
            format!("n*risk = {n_times:.4} at {ts}"),
        )
    } else {
        let grid = parse_grid(&grid_str)?;
        let sweep = max_risk_sweep(&spec, &grid, n, trials, loss, g.seed)?;
        for (i, est) in sweep.per_state.iter().enumerate() {
            risk_csv_row(&mut csv, est, &sweep.grid[i], g.seed);
        }
        // The exact center is a special point for ball-projected
        // estimators, so also report the max over the rest of the grid.
        let mut off_center: Option<(usize, f64)> = None;
        for (i, est) in sweep.per_state.iter().enumerate() {
            let r = sweep.grid[i];
            let len = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            if len > 1e-12 && off_center.is_none_or(|(_, m)| est.mean > m) {
                off_center = Some((i, est.mean));
            }
        }
        let n_times = n as f64 * sweep.max_risk;
        (
            json!({
                "mode": "sweep",
                "max_risk": sweep.max_risk,
                "n_times_max_risk": n_times,
                "max_state": sweep.max_state,
                "max_state_r": sweep.grid[sweep.max_state],
                "off_center_max_state": off_center.map(|(i, _)| i),
                "n_times_max_risk_off_center": off_center.map(|(_, m)| n as f64 * m),
                "per_state": serde_json::to_value(&sweep.per_state).expect("serializable"),
                "grid": sweep.grid,
                "reference_constants": constants,
            }),
            format!(
                "n*max_risk = {:.4} at state {} of {}",
                n_times,
                sweep.max_state,
                sweep.grid.len()
            ),
        )
    };

    let base = g.out_base("risk");
    let (csv_path, json_path) = output_paths(&base)?;
    csv.write(&csv_path)?;
    write_sidecar(&json_path, "risk", g.workers, resolved, results)?;
    println!(
        "risk: {summary}; wrote {} and {}",
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

fn spec_loss_name(kind: LossKind) -> &'static str {
    match kind {
        LossKind::Bures => "bures",
        LossKind::Qre => "qre",
        LossKind::Hellinger => "hellinger",
    }
}

pub fn cmd_scaling(a: &ScalingArgs, cfg: &ConfigFile, g: &Globals) -> CliResult<()> {
    let ns_str = a
        .ns
        .clone()
        .or_else(|| cfg.ns.clone())
        .unwrap_or_else(|| "1000,10000,100000".into());
    let ns = parse_u64_list(&ns_str, "--ns")?;
    let trials = a.trials.or(cfg.trials).unwrap_or(1000);
    let loss_kind = a.loss.or(cfg.loss).unwrap_or(LossKind::Bures);
    let est_kind = a.estimator.or(cfg.estimator).unwrap_or(EstimatorKind::Local);
    let with_log = a.synthetic_log || cfg.synthetic_log.unwrap_or(false);
    let (spec, est_json) = resolve_estimator(
        est_kind,
        a.fraction.or(cfg.fraction),
        a.kappa.or(cfg.kappa),
        a.delta.or(cfg.delta),
        a.synthetic_c.or(cfg.synthetic_c),
        a.synthetic_power.or(cfg.synthetic_power),
        with_log,
    );
    let loss = loss_kind.to_loss();
    let truth_str = a.truth.clone().or_else(|| cfg.truth.clone());
    let grid_str = a
        .grid
        .clone()
        .or_else(|| cfg.grid.clone())
        .unwrap_or_else(|| "default".into());

    let fit: ScalingFit = if let Some(ts) = truth_str.as_deref() {
        let truth = parse_truth(ts)?;
        if ns.len() < 3 || !ns.windows(2).all(|w| w[0] < w[1]) {
            return Err(usage("--ns needs at least 3 strictly increasing sizes"));
        }
        let mut risks = Vec::with_capacity(ns.len());
        for &n in &ns {
            risks.push(monte_carlo_risk(&spec, &truth, n, trials, loss, g.seed)?.mean);
        }
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        let (slope, intercept, r_squared) = fit_loglog(&xs, &risks)?;
        ScalingFit { ns: ns.clone(), max_risks: risks, slope, intercept, r_squared }
    } else {
        let grid = parse_grid(&grid_str)?;
        scaling_fit(&spec, &grid, &ns, trials, loss, g.seed)?
    };

    let mut csv = Csv::new(&["estimator", "loss", "n", "trials", "risk", "seed"]);
    for (i, &n) in fit.ns.iter().enumerate() {
        csv.row(&[
            spec.name().to_string(),
            spec_loss_name(loss_kind).to_string(),
            n.to_string(),
            trials.to_string(),
            fmt_f(fit.max_risks[i]),
            g.seed.to_string(),
        ]);
    }

    let n_times_risk: Vec<f64> = fit
        .ns
        .iter()
        .zip(&fit.max_risks)
        .map(|(&n, &r)| n as f64 * r)
        .collect();
    // For losses with a logarithmic factor in the rate, the interesting
    // normalization is n * risk / ln n.
    let log_normalized: Option<Vec<f64>> = matches!(loss_kind, LossKind::Qre).then(|| {
        fit.ns
            .iter()
            .zip(&fit.max_risks)
            .map(|(&n, &r)| n as f64 * r / (n as f64).ln())
            .collect()
    });
    let log_ratio = log_normalized.as_ref().map(|v| {
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max / min
    });

    let resolved = json!({
        "estimator": est_json, "loss": spec_loss_name(loss_kind), "ns": fit.ns,
        "trials": trials, "grid": truth_str.is_none().then_some(grid_str),
        "truth": truth_str, "seed": g.seed,
    });
    let results = json!({
        "mode": if truth_str.is_some() { "pointwise" } else { "sweep" },
        "fit": serde_json::to_value(&fit).expect("serializable"),
        "n_times_risk": n_times_risk,
        "log_normalized": log_normalized,
        "log_normalized_max_over_min": log_ratio,
    });
    let base = g.out_base("scaling");
    let (csv_path, json_path) = output_paths(&base)?;
    csv.write(&csv_path)?;
    write_sidecar(&json_path, "scaling", g.workers, resolved, results)?;
    println!(
        "scaling: slope = {:.4}, r^2 = {:.4}; wrote {} and {}",
        fit.slope,
        fit.r_squared,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

pub fn cmd_lan_check(a: &LanCheckArgs, cfg: &ConfigFile, g: &Globals) -> CliResult<()> {
    let ns_str = a
        .ns
        .clone()
        .or_else(|| cfg.ns.clone())
        .unwrap_or_else(|| "50,100,200,400".into());
    let ns = parse_u64_list(&ns_str, "--ns")?;
    if ns.is_empty() {
        return Err(usage("--ns must name at least one size"));
    }
    let lambda = a.lambda.or(cfg.lambda).unwrap_or(0.25);
    let w_str = a.w.clone().or_else(|| cfg.w.clone()).unwrap_or_else(|| "1,0".into());
    let w_parts = parse_f64_list(&w_str, "--w")?;
    if w_parts.len() != 2 {
        return Err(usage(format!("--w needs two components, got {}", w_parts.len())));
    }
    let w = (w_parts[0], w_parts[1]);
    let cutoff = a.cutoff.or(cfg.cutoff).unwrap_or(256);
    let j_offset = a.j_offset.or(cfg.j_offset).unwrap_or(0);

    let mut csv = Csv::new(&["n", "two_j", "distance"]);
    let mut two_js = Vec::with_capacity(ns.len());
    let mut dists = Vec::with_capacity(ns.len());
    for &n in &ns {
        let base = typical_two_j(n, lambda)? as i64;
        let shifted = base + 2 * j_offset;
        if shifted < 0 || shifted > n as i64 {
            return Err(usage(format!(
                "--j-offset {j_offset} pushes two_j to {shifted}, outside [0, {n}]"
            )));
        }
        let two_j = shifted as u64;
        let d = lan_trace_distance(two_j, n, lambda, w, cutoff)?;
        csv.row(&[n.to_string(), two_j.to_string(), fmt_f(d)]);
        two_js.push(two_j);
        dists.push(d);
    }

    let fit = if ns.len() >= 2 && dists.iter().all(|&d| d > 0.0) {
        let xs: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
        fit_loglog(&xs, &dists).ok()
    } else {
        None
    };
    let monotone = dists.windows(2).all(|p| p[1] < p[0]);

    let resolved = json!({
        "ns": ns, "lambda": lambda, "w": [w.0, w.1], "cutoff": cutoff,
        "j_offset": j_offset, "seed": g.seed,
    });
    let results = json!({
        "two_js": two_js,
        "distances": dists,
        "slope": fit.map(|f| f.0),
        "intercept": fit.map(|f| f.1),
        "r_squared": fit.map(|f| f.2),
        "monotone_decreasing": monotone,
    });
    let base = g.out_base("lan-check");
    let (csv_path, json_path) = output_paths(&base)?;
    csv.write(&csv_path)?;
    write_sidecar(&json_path, "lan-check", g.workers, resolved, results)?;
    match fit {
        Some((slope, _, _)) => println!(
            "lan-check: {} sizes, slope = {:.4}; wrote {} and {}",
            ns.len(),
            slope,
            csv_path.display(),
            json_path.display()
        ),
        None => println!(
            "lan-check: {} sizes; wrote {} and {}",
            ns.len(),
            csv_path.display(),
            json_path.display()
        ),
    }
    Ok(())
}

pub fn cmd_concentration(a: &ConcentrationArgs, cfg: &ConfigFile, g: &Globals) -> CliResult<()> {
    let case_kind = a.case.or(cfg.case).unwrap_or(CaseKind::Raw);
    let case = match case_kind {
        CaseKind::Raw => ConcentrationCase::RawStageOne,
        CaseKind::Projected => ConcentrationCase::ProjectedVanishing,
    };
    let n = a.n.or(cfg.n).unwrap_or(match case_kind {
        CaseKind::Raw => 3000,
        CaseKind::Projected => 10_000,
    });
    let epsilon = a.epsilon.or(cfg.epsilon).unwrap_or(0.1);
    let reps = a.reps.or(cfg.reps).unwrap_or(10_000);
    let truth_str = a
        .truth
        .clone()
        .or_else(|| cfg.truth.clone())
        .unwrap_or_else(|| "0,0,0.5".into());
    let truth = parse_truth(&truth_str)?;

    let report = concentration_check(case, n, epsilon, reps, &truth, g.seed)?;

    let mut csv = Csv::new(&[
        "case", "n", "epsilon", "repetitions", "threshold", "bound", "empirical", "stderr",
        "pass",
    ]);
    csv.row(&[
        report.case_name.clone(),
        report.n.to_string(),
        fmt_f(report.epsilon),
        report.repetitions.to_string(),
        fmt_f(report.threshold),
        fmt_f(report.bound),
        fmt_f(report.empirical),
        fmt_f(report.stderr),
        report.pass.to_string(),
    ]);

    let resolved = json!({
        "case": report.case_name, "n": n, "epsilon": epsilon, "reps": reps,
        "truth": truth_str, "seed": g.seed,
    });
    let results = serde_json::to_value(&report).expect("serializable");
    let base = g.out_base("concentration");
    let (csv_path, json_path) = output_paths(&base)?;
    csv.write(&csv_path)?;
    write_sidecar(&json_path, "concentration", g.workers, resolved, results)?;
    println!(
        "concentration: empirical {:.5} vs bound {:.5} ({}); wrote {} and {}",
        report.empirical,
        report.bound,
        if report.pass { "pass" } else { "FAIL" },
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}

pub fn cmd_metrics_check(_a: &MetricsCheckArgs, _cfg: &ConfigFile, g: &Globals) -> CliResult<()> {
    // The documented sweep: eigenvalues on a coarse lattice, angles from
    // comfortably-expansion-sized down to clearly-not.
    let phis = [0.01, 0.05, 0.1, 0.2, 0.3];
    let mut csv = Csv::new(&[
        "kind", "lambda", "lambda_hat", "phi", "eigen_term", "rotation_term", "remainder",
        "envelope",
    ]);
    let mut bures_max_ratio: f64 = 0.0;
    let mut qre_max_ratio: f64 = 0.0;
    for i in 0..=9u32 {
        for j in 0..=9u32 {
            let lam = 0.05 * f64::from(i);
            let lam_hat = 0.05 * f64::from(j);
            for &phi in &phis {
                let d = bures_sq_expansion(lam, lam_hat, phi)?;
                let env = phi.powi(4);
                bures_max_ratio = bures_max_ratio.max(d.remainder_bound / env);
                csv.row(&[
                    "bures".to_string(),
                    fmt_f(lam),
                    fmt_f(lam_hat),
                    fmt_f(phi),
                    fmt_f(d.eigen_term),
                    fmt_f(d.rotation_term),
                    fmt_f(d.remainder_bound),
                    fmt_f(env),
                ]);
                if lam_hat > 0.0 {
                    let d = qre_expansion(lam, lam_hat, phi)?;
                    let env = phi.powi(4) * (1.0 / lam_hat).ln();
                    qre_max_ratio = qre_max_ratio.max(d.remainder_bound / env);
                    csv.row(&[
                        "qre".to_string(),
                        fmt_f(lam),
                        fmt_f(lam_hat),
                        fmt_f(phi),
                        fmt_f(d.eigen_term),
                        fmt_f(d.rotation_term),
                        fmt_f(d.remainder_bound),
                        fmt_f(env),
                    ]);
                }
            }
        }
    }

    let resolved = json!({
        "phis": phis, "eigen_grid_step": 0.05, "eigen_grid_points": 10, "seed": g.seed,
    });
    let results = json!({
        "rows": csv.rows(),
        "bures_max_ratio": bures_max_ratio,
        "qre_max_ratio": qre_max_ratio,
        "bures_within_envelope": bures_max_ratio <= 1.0,
        "qre_within_envelope": qre_max_ratio <= 1.0,
    });
    let base = g.out_base("metrics-check");
    let (csv_path, json_path) = output_paths(&base)?;
    csv.write(&csv_path)?;
    write_sidecar(&json_path, "metrics-check", g.workers, resolved, results)?;
    println!(
        "metrics-check: bures ratio {:.4}, qre ratio {:.4}; wrote {} and {}",
        bures_max_ratio,
        qre_max_ratio,
        csv_path.display(),
        json_path.display()
    );
    Ok(())
}
