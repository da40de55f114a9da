//! Acceptance checks. Each criterion verifies one end-to-end property at a
//! fixed tolerance against an independent oracle (closed-form eigenvalues,
//! exhaustive searches, or analytic trajectories) and reports one pass/fail
//! line with the measured values.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use oirl_core::irl::{
    assemble_system, bellman_row, gamma_derivative as irl_gamma_derivative, w_derivative,
    IrlEstimator,
};
use oirl_core::params::{
    estimator_step, gamma_derivative, record_residual, theta_derivative, ThetaEstimator,
};
use oirl_core::stack::{DualStack, InsertOutcome, IrlRecord, PeRecord};
use oirl_core::window::WindowBuffers;
use oirl_core::Error;

use crate::config::ScenarioConfig;
use crate::runner::{run, RunLog, StackKind};
use crate::scenario::Scenario;

/// Outcome of one acceptance criterion.
#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    /// The one-line report format used by the `check` subcommand.
    pub fn line(&self) -> String {
        format!(
            "criterion {} ({}): {} - {}",
            self.index,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

/// Runs the full suite against one configuration. The simulation behind
/// criteria 1, 2, 3, and 6 executes once and is shared.
pub fn run_all(cfg: &ScenarioConfig) -> Result<Vec<CriterionResult>, Error> {
    let scenario = Scenario::build(cfg)?;
    let log = run(cfg)?;
    Ok(vec![
        observer_rate(cfg, &log),
        parameter_convergence(&log),
        weight_convergence(&log),
        hjb_residuals(cfg, &scenario),
        sv_max_equivalence(cfg),
        gain_bounds(cfg, &log),
        fixed_points(cfg, &scenario),
        window_compatibility(),
        undisturbed_cost(cfg, &scenario),
    ])
}

fn result(index: usize, name: &'static str, passed: bool, detail: String) -> CriterionResult {
    CriterionResult { index, name, passed, detail }
}

/// Largest real part among the eigenvalues of a 2x2 matrix, from the
/// characteristic polynomial alone.
fn abscissa_2x2(m: [[f64; 2]; 2]) -> f64 {
    let tr = m[0][0] + m[1][1];
    let disc = (m[0][0] - m[1][1]).powi(2) + 4.0 * m[0][1] * m[1][0];
    if disc >= 0.0 {
        0.5 * (tr + disc.sqrt())
    } else {
        0.5 * tr
    }
}

/// Least-squares slope of `ln(values)` over `times` at the local maxima of
/// `values`, tracking the decay envelope of an oscillating signal.
fn peak_regression(times: &[f64], values: &[f64]) -> Option<f64> {
    let mut pts = Vec::new();
    for i in 1..values.len().saturating_sub(1) {
        if values[i] > values[i - 1] && values[i] >= values[i + 1] && values[i] > 1e-13 {
            pts.push((times[i], values[i].ln()));
        }
    }
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov = pts.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_y)).sum::<f64>();
    let var = pts.iter().map(|p| (p.0 - mean_t).powi(2)).sum::<f64>();
    if var == 0.0 {
        return None;
    }
    Some(cov / var)
}

fn observer_rate(cfg: &ScenarioConfig, log: &RunLog) -> CriterionResult {
    const INDEX: usize = 1;
    const NAME: &str = "observer decay rate";
    let nz = match cfg.exo_dim() {
        Ok(2) => 2,
        _ => {
            return result(
                INDEX,
                NAME,
                false,
                "rate oracle is defined for the two-dimensional generator".into(),
            )
        }
    };
    // A - K C assembled by hand; the abscissa comes from the closed-form
    // 2x2 characteristic polynomial rather than the library eigensolver.
    let a = &cfg.exo_a;
    let c = &cfg.exo_c;
    let k = &cfg.observer_k;
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let mut kc = 0.0;
            for l in 0..2 {
                kc += k[i * 2 + l] * c[l * nz + j];
            }
            m[i][j] = a[i * nz + j] - kc;
        }
    }
    let abscissa = abscissa_2x2(m);

    let (mut times, mut errs) = (Vec::new(), Vec::new());
    for r in &log.rows {
        if r.t >= 1.0 && r.t <= 30.0 {
            times.push(r.t);
            errs.push(r.zeta_err);
        }
    }
    let slope = peak_regression(&times, &errs);
    let tail_start = 40.0;
    let tail_ok = log.rows.last().map_or(false, |r| r.t > tail_start);
    let max_tail = log
        .rows
        .iter()
        .filter(|r| r.t > tail_start)
        .map(|r| r.dist_err)
        .fold(0.0_f64, f64::max);

    match slope {
        Some(s) if tail_ok => {
            let slope_ok = (s - abscissa).abs() <= 0.1 * abscissa.abs();
            let tail_pass = max_tail < 1e-3;
            result(
                INDEX,
                NAME,
                slope_ok && tail_pass,
                format!(
                    "peak-regression slope {s:.4e} vs abscissa {abscissa:.4e} (tolerance 10%); \
                     max disturbance error after {tail_start} s = {max_tail:.3e} (bound 1e-3)"
                ),
            )
        }
        Some(_) => result(
            INDEX,
            NAME,
            false,
            format!("horizon ends before {tail_start} s; disturbance tail unverified"),
        ),
        None => result(INDEX, NAME, false, "too few error peaks to regress a slope".into()),
    }
}

fn parameter_convergence(log: &RunLog) -> CriterionResult {
    const INDEX: usize = 2;
    const NAME: &str = "drift-parameter convergence";
    let final_err = log.rows.last().map_or(f64::INFINITY, |r| r.theta_err);
    let epochs: Vec<&crate::runner::PurgeEvent> =
        log.events.iter().filter(|e| e.stack == StackKind::Pe).collect();
    if log.theta_updates == 0 {
        return result(
            INDEX,
            NAME,
            false,
            format!("estimator never ungated; final error {final_err:.3e}"),
        );
    }
    if epochs.len() < 3 {
        return result(
            INDEX,
            NAME,
            false,
            format!("only {} purge epochs; need three to check monotonicity", epochs.len()),
        );
    }
    let last3: Vec<f64> = epochs[epochs.len() - 3..].iter().map(|e| e.theta_err).collect();
    let monotone = last3[0] >= last3[1] && last3[1] >= last3[2];
    let passed = final_err < 0.05 && monotone;
    result(
        INDEX,
        NAME,
        passed,
        format!(
            "final error {:.3e} (bound 5e-2); errors at the last three purges: \
             {:.3e}, {:.3e}, {:.3e} ({})",
            final_err,
            last3[0],
            last3[1],
            last3[2],
            if monotone { "non-increasing" } else { "not monotone" },
        ),
    )
}

fn weight_convergence(log: &RunLog) -> CriterionResult {
    const INDEX: usize = 3;
    const NAME: &str = "reward-weight convergence";
    let final_err = log.rows.last().map_or(f64::INFINITY, |r| r.w_err);
    if log.w_updates == 0 {
        return result(
            INDEX,
            NAME,
            false,
            format!("weight estimator never updated; final error {final_err:.3e}"),
        );
    }
    result(
        INDEX,
        NAME,
        final_err < 0.05,
        format!("final error {final_err:.3e} (bound 5e-2) after {} updates", log.w_updates),
    )
}

fn hjb_residuals(cfg: &ScenarioConfig, scenario: &Scenario) -> CriterionResult {
    const INDEX: usize = 4;
    const NAME: &str = "pointwise Bellman residuals";
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(4));
    let mut max_on = 0.0_f64;
    for _ in 0..1000 {
        let x = DVector::from_vec(vec![
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ]);
        let u = (scenario.agent2.control_policy)(&x, 0.0);
        let (row, rhs) = match bellman_row(&scenario.basis, &scenario.agent2, &x, &u, &scenario.theta_true) {
            Ok(v) => v,
            Err(e) => return result(INDEX, NAME, false, e.to_string()),
        };
        max_on = max_on.max((row.dot(&scenario.w_true) + rhs).abs());
    }
    let mut max_off = 0.0_f64;
    for _ in 0..100 {
        let x = DVector::from_vec(vec![
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        ]);
        let u_star = (scenario.agent2.control_policy)(&x, 0.0);
        let delta = rng.random_range(-1.0..1.0);
        let u = DVector::from_vec(vec![u_star[0] + delta]);
        let (row, rhs) = match bellman_row(&scenario.basis, &scenario.agent2, &x, &u, &scenario.theta_true) {
            Ok(v) => v,
            Err(e) => return result(INDEX, NAME, false, e.to_string()),
        };
        let residual = row.dot(&scenario.w_true) + rhs;
        // All control cost lands on the known first channel: r1 (u - u*)^2.
        max_off = max_off.max((residual - scenario.basis.r1 * delta * delta).abs());
    }
    result(
        INDEX,
        NAME,
        max_on < 1e-9 && max_off < 1e-9,
        format!(
            "max on-policy |residual| {max_on:.3e} over 1000 states; max off-policy deviation \
             from the squared control gap {max_off:.3e} over 100 perturbations (bounds 1e-9)"
        ),
    )
}

/// Smallest eigenvalue of a symmetric 3x3 matrix from the trigonometric
/// closed form, with the same noise floor the stack code applies.
fn trig_lambda_min_3x3(g: &DMatrix<f64>) -> f64 {
    let p1 = g[(0, 1)].powi(2) + g[(0, 2)].powi(2) + g[(1, 2)].powi(2);
    let q = (g[(0, 0)] + g[(1, 1)] + g[(2, 2)]) / 3.0;
    let p2 = (g[(0, 0)] - q).powi(2) + (g[(1, 1)] - q).powi(2) + (g[(2, 2)] - q).powi(2)
        + 2.0 * p1;
    if p2 <= 0.0 {
        return q.max(0.0);
    }
    let p = (p2 / 6.0).sqrt();
    let b = |i: usize, j: usize| (g[(i, j)] - if i == j { q } else { 0.0 }) / p;
    let det_b = b(0, 0) * (b(1, 1) * b(2, 2) - b(1, 2) * b(2, 1))
        - b(0, 1) * (b(1, 0) * b(2, 2) - b(1, 2) * b(2, 0))
        + b(0, 2) * (b(1, 0) * b(2, 1) - b(1, 1) * b(2, 0));
    let phi = (det_b / 2.0).clamp(-1.0, 1.0).acos() / 3.0;
    let two_thirds_pi = 2.0 * std::f64::consts::PI / 3.0;
    let lam_max = q + 2.0 * p * phi.cos();
    let lam_min = q + 2.0 * p * (phi + two_thirds_pi).cos();
    if lam_min < 1e-12 * lam_max.max(1.0) {
        0.0
    } else {
        lam_min
    }
}

fn gram_3x3(rows: &[DVector<f64>]) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(3, 3);
    for r in rows {
        g.ger(1.0, r, r, 1.0);
    }
    g
}

/// Exhaustive best-single-replacement search, mirroring the published
/// insertion contract against the independent eigensolver.
fn oracle_decide(
    rows: &[DVector<f64>],
    candidate: &DVector<f64>,
    capacity: usize,
    psi: f64,
) -> InsertOutcome {
    if rows.len() < capacity {
        return InsertOutcome::Appended;
    }
    let current = trig_lambda_min_3x3(&gram_3x3(rows));
    let mut best: Option<(usize, f64)> = None;
    for j in 0..rows.len() {
        let mut trial: Vec<DVector<f64>> = rows.to_vec();
        trial[j] = candidate.clone();
        let lam = trig_lambda_min_3x3(&gram_3x3(&trial));
        if best.map_or(true, |(_, b)| lam > b) {
            best = Some((j, lam));
        }
    }
    match best {
        Some((j, lam)) if lam > (1.0 + psi) * current => InsertOutcome::Replaced(j),
        _ => InsertOutcome::Rejected,
    }
}

fn sv_max_equivalence(cfg: &ScenarioConfig) -> CriterionResult {
    const INDEX: usize = 5;
    const NAME: &str = "stack insertion equivalence";
    let mut rng = ChaCha20Rng::seed_from_u64(cfg.seed.wrapping_add(5));
    let capacity = 5;
    let mut max_gap = 0.0_f64;
    for seq in 0..1000 {
        let mut stack = match DualStack::<DVector<f64>>::new(
            capacity,
            cfg.psi,
            0.0,
            0.0,
            Box::new(|r: &DVector<f64>| DMatrix::from_row_slice(1, r.len(), r.as_slice())),
        ) {
            Ok(s) => s,
            Err(e) => return result(INDEX, NAME, false, e.to_string()),
        };
        let mut mirror: Vec<DVector<f64>> = Vec::new();
        let mut last: Option<DVector<f64>> = None;
        for offer in 0..12 {
            // Occasional rescaled repeats keep rank-deficient Grams in play.
            let candidate = match &last {
                Some(prev) if rng.random_range(0.0..1.0) < 0.2 => prev * 0.5,
                _ => DVector::from_vec(vec![
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                ]),
            };
            last = Some(candidate.clone());
            let expected = oracle_decide(&mirror, &candidate, capacity, cfg.psi);
            let got = stack.offer(candidate.clone());
            if got != expected {
                return result(
                    INDEX,
                    NAME,
                    false,
                    format!(
                        "decision mismatch on sequence {seq}, offer {offer}: \
                         incremental {got:?} vs exhaustive {expected:?}"
                    ),
                );
            }
            match expected {
                InsertOutcome::Appended => mirror.push(candidate),
                InsertOutcome::Replaced(j) => mirror[j] = candidate,
                InsertOutcome::Rejected => {}
            }
            let lam_inc = stack.lambda_min_transient();
            let lam_ora = trig_lambda_min_3x3(&gram_3x3(&mirror));
            let gap = (lam_inc - lam_ora).abs();
            max_gap = max_gap.max(gap);
            if gap > 1e-10 {
                return result(
                    INDEX,
                    NAME,
                    false,
                    format!(
                        "eigenvalue mismatch on sequence {seq}, offer {offer}: \
                         incremental {lam_inc:.12e} vs exhaustive {lam_ora:.12e}"
                    ),
                );
            }
        }
    }
    result(
        INDEX,
        NAME,
        true,
        format!(
            "1000 sequences of 12 offers matched the exhaustive search; \
             max eigenvalue gap {max_gap:.3e} (bound 1e-10)"
        ),
    )
}

fn gain_bounds(cfg: &ScenarioConfig, log: &RunLog) -> CriterionResult {
    const INDEX: usize = 6;
    const NAME: &str = "gain eigenvalue bounds";
    // Re-verified eigenvalues carry solver noise around the exact clamp, so
    // the bound check allows a 1e-9 relative measurement slack.
    let lo_edge = cfg.gamma_lower - 1e-9 * cfg.gamma_lower.max(1.0);
    let hi_edge = cfg.gamma_upper + 1e-9 * cfg.gamma_upper.max(1.0);
    let mut min_seen = f64::INFINITY;
    let mut max_seen = f64::NEG_INFINITY;
    for r in &log.rows {
        for (lo, hi) in [r.gamma_theta_range, r.gamma_w_range] {
            min_seen = min_seen.min(lo);
            max_seen = max_seen.max(hi);
        }
    }
    let passed = min_seen >= lo_edge && max_seen <= hi_edge;
    result(
        INDEX,
        NAME,
        passed,
        format!(
            "gain spectra spanned [{min_seen:.3e}, {max_seen:.3e}] across {} steps; \
             configured bounds [{:.1e}, {:.1e}]",
            log.rows.len(),
            cfg.gamma_lower,
            cfg.gamma_upper,
        ),
    )
}

/// Synthetic drift-parameter records whose residual is zero by construction.
fn exact_pe_records(theta: &DMatrix<f64>) -> Vec<PeRecord> {
    let s_rows: [[f64; 3]; 8] = [
        [1.2, 0.3, -0.5],
        [-0.4, 1.1, 0.6],
        [0.7, -0.9, 1.3],
        [0.2, 0.8, 0.9],
        [-1.0, 0.5, -0.7],
        [0.9, 1.2, 0.4],
        [-0.6, -0.3, 1.1],
        [1.1, -0.8, -0.2],
    ];
    s_rows
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let s = DVector::from_row_slice(s);
            let f = DVector::from_vec(vec![0.1 * i as f64, -0.05 * i as f64]);
            let d = DVector::from_vec(vec![0.02 * i as f64, 0.01]);
            let x = &f + theta.transpose() * &s + &d;
            PeRecord { x_diff: x, f_int: f, s_int: s, d_hat_int: d, recorded_at: i as f64 }
        })
        .collect()
}

/// Gain at the flow's equilibrium for a given data Gram: `(beta/alpha) G^-1`,
/// built from the eigendecomposition so it is symmetric by construction.
fn equilibrium_gain(gram: &DMatrix<f64>, alpha: f64, beta: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(gram.clone());
    let inv = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| beta / (alpha * l)),
    );
    &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose()
}

fn fixed_points(cfg: &ScenarioConfig, scenario: &Scenario) -> CriterionResult {
    const INDEX: usize = 7;
    const NAME: &str = "estimator fixed points";
    let bounds = (cfg.gamma_lower, cfg.gamma_upper);
    let records = exact_pe_records(&scenario.theta_true);
    let mut gram = DMatrix::zeros(3, 3);
    for r in &records {
        gram.ger(1.0, &r.s_int, &r.s_int, 1.0);
    }
    let mut theta_est = match ThetaEstimator::new(
        scenario.theta_true.clone(),
        equilibrium_gain(&gram, cfg.alpha_theta, cfg.beta_theta),
        cfg.alpha_theta,
        cfg.beta_theta,
        bounds,
    ) {
        Ok(e) => e,
        Err(e) => return result(INDEX, NAME, false, format!("drift estimator setup: {e}")),
    };
    let max_res = records
        .iter()
        .map(|r| record_residual(r, &scenario.theta_true).norm())
        .fold(0.0_f64, f64::max);

    let states: [[f64; 2]; 8] = [
        [0.7, -0.4],
        [-1.1, 0.8],
        [1.3, 0.5],
        [-0.6, -1.2],
        [0.4, 1.0],
        [-1.4, -0.3],
        [0.9, -1.1],
        [-0.2, 0.6],
    ];
    let irl_records: Vec<IrlRecord> = states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let x = DVector::from_row_slice(s);
            let u = (scenario.agent2.control_policy)(&x, 0.0);
            IrlRecord { x, u, theta_hat: scenario.theta_true.clone(), recorded_at: i as f64 }
        })
        .collect();
    let sys = match assemble_system(&irl_records, &scenario.basis, &scenario.agent2) {
        Ok(s) => s,
        Err(e) => return result(INDEX, NAME, false, format!("weight system setup: {e}")),
    };
    let mut irl_est = match IrlEstimator::new(
        scenario.w_true.clone(),
        equilibrium_gain(&sys.gram, cfg.alpha, cfg.beta),
        cfg.alpha,
        cfg.beta,
        bounds,
    ) {
        Ok(e) => e,
        Err(e) => return result(INDEX, NAME, false, format!("weight estimator setup: {e}")),
    };

    let dt = cfg.dt;
    let steps = (5.0 / dt).round() as usize;
    let mut worst = 0.0_f64;
    for k in 0..steps {
        let t = k as f64 * dt;
        let names_and_norms = [
            theta_derivative(&theta_est, &records).map(|d| d.norm()),
            gamma_derivative(&theta_est, &records).map(|d| d.norm()),
            w_derivative(&irl_est, &sys).map(|d| d.norm()),
            irl_gamma_derivative(&irl_est, &sys).map(|d| d.norm()),
        ];
        for n in names_and_norms {
            match n {
                Ok(n) => worst = worst.max(n),
                Err(e) => return result(INDEX, NAME, false, e.to_string()),
            }
        }
        if worst >= 1e-9 {
            return result(
                INDEX,
                NAME,
                false,
                format!("derivative norm {worst:.3e} at t = {t:.3} exceeds 1e-9"),
            );
        }
        if let Err(e) = estimator_step(&mut theta_est, &records, dt, t) {
            return result(INDEX, NAME, false, e.to_string());
        }
        if let Err(e) = oirl_core::irl::irl_step(&mut irl_est, &sys, dt, t) {
            return result(INDEX, NAME, false, e.to_string());
        }
    }
    result(
        INDEX,
        NAME,
        true,
        format!(
            "max derivative norm {worst:.3e} over {steps} steps (bound 1e-9); \
             max record residual {max_res:.3e}"
        ),
    )
}

fn window_compatibility() -> CriterionResult {
    const INDEX: usize = 8;
    const NAME: &str = "window compatibility";
    // Scalar analytic system: x(t) = sin(0.1 t), known part 0.05 x, features
    // (x, x^3), and the disturbance defined pointwise as whatever closes the
    // budget, so the window residual isolates pure quadrature error.
    let theta = DMatrix::from_row_slice(2, 1, &[0.7, -0.3]);
    let dt = 5e-4;
    let x_t = |t: f64| (0.1 * t).sin();
    let d_t = |t: f64| {
        let x = x_t(t);
        0.1 * (0.1 * t).cos() - 0.05 * x - (0.7 * x - 0.3 * x * x * x)
    };
    let mut worst = 0.0_f64;
    for quad in [oirl_core::window::Quadrature::Trapezoid, oirl_core::window::Quadrature::Simpson] {
        let mut window = match WindowBuffers::new(1.2, dt, 1, 2, quad) {
            Ok(w) => w,
            Err(e) => return result(INDEX, NAME, false, e.to_string()),
        };
        let steps = (3.0 / dt).round() as usize;
        for k in 0..=steps {
            let t = k as f64 * dt;
            let x = x_t(t);
            if let Err(e) = window.push_sample(
                t,
                &DVector::from_vec(vec![x]),
                &DVector::from_vec(vec![0.05 * x]),
                &DVector::from_vec(vec![x, x * x * x]),
                &DVector::from_vec(vec![d_t(t)]),
            ) {
                return result(INDEX, NAME, false, e.to_string());
            }
            if window.is_ready() {
                let point = match window.window_point(t) {
                    Ok(p) => p,
                    Err(e) => return result(INDEX, NAME, false, e.to_string()),
                };
                let record = PeRecord::new(&point, t);
                worst = worst.max(record_residual(&record, &theta).norm());
            }
        }
    }
    result(
        INDEX,
        NAME,
        worst < 1e-8,
        format!(
            "max window compatibility residual {worst:.3e} across both quadrature rules \
             (bound 1e-8)"
        ),
    )
}

fn undisturbed_cost(cfg: &ScenarioConfig, scenario: &Scenario) -> CriterionResult {
    const INDEX: usize = 9;
    const NAME: &str = "undisturbed cost consistency";
    let mut cfg9 = cfg.clone();
    let nz = match cfg.exo_dim() {
        Ok(n) => n,
        Err(e) => return result(INDEX, NAME, false, e.to_string()),
    };
    cfg9.zeta_0 = vec![0.0; nz];
    // The integrand decays exponentially; 40 s captures it to far below the
    // 1% tolerance while keeping the extra simulation cheap.
    cfg9.t_final = cfg.t_final.min(40.0);
    let log = match run(&cfg9) {
        Ok(l) => l,
        Err(e) => return result(INDEX, NAME, false, e.to_string()),
    };
    let mut j = 0.0;
    for pair in log.rows.windows(2) {
        let f0 = pair[0].x2[1].powi(2) + pair[0].u2.powi(2);
        let f1 = pair[1].x2[1].powi(2) + pair[1].u2.powi(2);
        j += 0.5 * (f0 + f1) * (pair[1].t - pair[0].t);
    }
    let v = scenario.reward.value(&DVector::from_vec(cfg.x2_0.clone()));
    let rel = (j - v).abs() / v.abs().max(1e-12);
    result(
        INDEX,
        NAME,
        rel < 0.01,
        format!(
            "accumulated cost {j:.6e} vs value function {v:.6e}; \
             relative gap {rel:.3e} (bound 1e-2)"
        ),
    )
}
