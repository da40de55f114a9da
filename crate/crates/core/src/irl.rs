//! Recursive inverse reinforcement learning over a recorded history stack.
//!
//! Each stored record holds a state, the control the observed agent applied
//! there, and the drift-parameter estimate current at recording time. Every
//! record contributes one approximate Hamilton-Jacobi-Bellman residual row
//! plus one stationarity row per control channel; stacking them yields a
//! linear system `Sigma w + rhs ~ 0` in the unknown value, state-cost, and
//! control-cost weights. A gradient flow with a bounded least-squares gain
//! drives the weight estimate toward the stacked system's solution.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::params::project_spd;
use crate::sim::{AgentModel, StateFn, StateMatFn};
use crate::stack::IrlRecord;

/// Cost and value feature basis for the learner.
///
/// Weights are stacked as `[w_value; w_state_cost; w_control_cost]`, where
/// the control-cost block omits the first channel whose weight `r1` is the
/// known scale that pins down the otherwise homogeneous reward.
pub struct IrlBasis {
    /// Value features, `R^n -> R^value_dim`.
    pub sigma_v: StateFn,
    /// Jacobian of the value features, `R^n -> R^{value_dim x n}`.
    pub grad_sigma_v: StateMatFn,
    /// State-cost features, `R^n -> R^state_cost_dim`.
    pub sigma_q: StateFn,
    pub value_dim: usize,
    pub state_cost_dim: usize,
    /// Number of control channels of the observed agent.
    pub control_dim: usize,
    /// Known cost weight of the first control channel.
    pub r1: f64,
}

impl IrlBasis {
    pub fn new(
        state_dim: usize,
        sigma_v: StateFn,
        grad_sigma_v: StateMatFn,
        sigma_q: StateFn,
        control_dim: usize,
        r1: f64,
    ) -> Result<Self, Error> {
        if control_dim == 0 {
            return Err(Error::config("learner needs at least one control channel"));
        }
        if !(r1 > 0.0) || !r1.is_finite() {
            return Err(Error::config("known control cost weight must be positive"));
        }
        let origin = DVector::zeros(state_dim);
        let value_dim = sigma_v(&origin).len();
        let state_cost_dim = sigma_q(&origin).len();
        if value_dim == 0 || state_cost_dim == 0 {
            return Err(Error::config("feature maps must produce at least one feature"));
        }
        let grad = grad_sigma_v(&origin);
        if grad.nrows() != value_dim || grad.ncols() != state_dim {
            return Err(Error::config("value feature jacobian has the wrong shape"));
        }
        Ok(IrlBasis { sigma_v, grad_sigma_v, sigma_q, value_dim, state_cost_dim, control_dim, r1 })
    }

    /// Total number of estimated weights.
    pub fn weight_dim(&self) -> usize {
        self.value_dim + self.state_cost_dim + self.control_dim - 1
    }

    /// Splits a stacked weight vector into value, state-cost, and
    /// control-cost blocks.
    pub fn split_weights(&self, w: &DVector<f64>) -> (DVector<f64>, DVector<f64>, DVector<f64>) {
        let p = self.value_dim;
        let l = self.state_cost_dim;
        (
            DVector::from(w.rows(0, p)),
            DVector::from(w.rows(p, l)),
            DVector::from(w.rows(p + l, self.control_dim - 1)),
        )
    }
}

/// Probes whether the drift responds linearly to the control, matching the
/// declared control jacobian. The stationarity rows assume exactly that.
pub fn check_control_affine(agent: &AgentModel, probes: &[DVector<f64>], tol: f64) -> Result<(), Error> {
    let jac = agent
        .control_jacobian
        .as_ref()
        .ok_or_else(|| Error::config("agent declares no control jacobian"))?;
    for x in probes {
        let g = jac(x);
        if g.nrows() != agent.state_dim || g.ncols() != agent.control_dim {
            return Err(Error::config("control jacobian has the wrong shape"));
        }
        for k in 0..agent.control_dim {
            let mut ua = DVector::zeros(agent.control_dim);
            let mut ub = DVector::zeros(agent.control_dim);
            ua[k] = 0.75;
            ub[k] = -0.5;
            let lhs = (agent.nominal_drift)(x, &ua) - (agent.nominal_drift)(x, &ub);
            let rhs = &g * (&ua - &ub);
            if (lhs - rhs).amax() > tol {
                return Err(Error::config(
                    "drift is not affine in the control under the declared jacobian",
                ));
            }
        }
    }
    Ok(())
}

/// Bellman residual row for one record: the row dotted with the stacked
/// weights, plus the returned constant, approximates
/// `dV/dt + state cost + control cost` at the recorded point.
pub fn bellman_row(
    basis: &IrlBasis,
    agent: &AgentModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
    theta_hat: &DMatrix<f64>,
) -> Result<(DVector<f64>, f64), Error> {
    if x.len() != agent.state_dim || u.len() != agent.control_dim {
        return Err(Error::config("record dimensions do not match the agent"));
    }
    if u.len() != basis.control_dim {
        return Err(Error::config("record control dimension does not match the basis"));
    }
    if theta_hat.nrows() != agent.feature_dim || theta_hat.ncols() != agent.state_dim {
        return Err(Error::config("recorded parameter estimate does not match the agent"));
    }
    let y_hat = agent.drift_with_params(x, u, theta_hat);
    let sigma_dot = (basis.grad_sigma_v)(x) * y_hat;
    let sigma_q = (basis.sigma_q)(x);
    let mut row = DVector::zeros(basis.weight_dim());
    row.rows_mut(0, basis.value_dim).copy_from(&sigma_dot);
    row.rows_mut(basis.value_dim, basis.state_cost_dim).copy_from(&sigma_q);
    for j in 1..basis.control_dim {
        row[basis.value_dim + basis.state_cost_dim + j - 1] = u[j] * u[j];
    }
    Ok((row, basis.r1 * u[0] * u[0]))
}

/// Stationarity rows for one record, one per control channel: each row
/// dotted with the weights plus its constant approximates the gradient of
/// the Hamiltonian in that channel, which vanishes under an optimal policy.
pub fn control_rows(
    basis: &IrlBasis,
    agent: &AgentModel,
    x: &DVector<f64>,
    u: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>), Error> {
    let jac = agent
        .control_jacobian
        .as_ref()
        .ok_or_else(|| Error::config("agent declares no control jacobian"))?;
    if x.len() != agent.state_dim || u.len() != basis.control_dim {
        return Err(Error::config("record dimensions do not match the agent"));
    }
    // Column j holds the sensitivity of every value feature rate to u_j.
    let sigma_g = (basis.grad_sigma_v)(x) * jac(x);
    let m = basis.control_dim;
    let mut rows = DMatrix::zeros(m, basis.weight_dim());
    let mut rhs = DVector::zeros(m);
    for j in 0..m {
        rows.view_mut((j, 0), (1, basis.value_dim))
            .copy_from(&sigma_g.column(j).transpose());
        if j == 0 {
            rhs[0] = 2.0 * basis.r1 * u[0];
        } else {
            rows[(j, basis.value_dim + basis.state_cost_dim + j - 1)] = 2.0 * u[j];
        }
    }
    Ok((rows, rhs))
}

/// Stacked residual system assembled from a history stack, with the normal
/// products the gradient flow consumes precomputed.
pub struct AssembledSystem {
    /// All residual rows, `(1 + control_dim) * records` by `weight_dim`.
    pub sigma: DMatrix<f64>,
    /// Constants paired with each row.
    pub rhs: DVector<f64>,
    /// `sigma^T sigma`.
    pub gram: DMatrix<f64>,
    /// `sigma^T rhs`.
    pub data: DVector<f64>,
    /// Smallest eigenvalue of the Gram matrix; positive when the stack
    /// identifies every weight.
    pub lambda_min: f64,
}

/// All residual rows one record contributes: the value-rate row on top of
/// the control-stationarity rows, with the matching constants. This block is
/// also the record's regressor for stack insertion decisions, so excitation
/// is measured on the same matrix the estimator consumes.
pub fn record_block(
    basis: &IrlBasis,
    agent: &AgentModel,
    record: &IrlRecord,
) -> Result<(DMatrix<f64>, DVector<f64>), Error> {
    let wd = basis.weight_dim();
    let (brow, bconst) = bellman_row(basis, agent, &record.x, &record.u, &record.theta_hat)?;
    let (crows, cconst) = control_rows(basis, agent, &record.x, &record.u)?;
    let mut block = DMatrix::zeros(1 + basis.control_dim, wd);
    block.view_mut((0, 0), (1, wd)).copy_from(&brow.transpose());
    block.view_mut((1, 0), (basis.control_dim, wd)).copy_from(&crows);
    let mut rhs = DVector::zeros(1 + basis.control_dim);
    rhs[0] = bconst;
    rhs.rows_mut(1, basis.control_dim).copy_from(&cconst);
    Ok((block, rhs))
}

pub fn assemble_system(
    records: &[IrlRecord],
    basis: &IrlBasis,
    agent: &AgentModel,
) -> Result<AssembledSystem, Error> {
    let wd = basis.weight_dim();
    let per = 1 + basis.control_dim;
    let mut sigma = DMatrix::zeros(per * records.len(), wd);
    let mut rhs = DVector::zeros(per * records.len());
    for (i, rec) in records.iter().enumerate() {
        let (block, consts) = record_block(basis, agent, rec)?;
        sigma.view_mut((per * i, 0), (per, wd)).copy_from(&block);
        rhs.rows_mut(per * i, per).copy_from(&consts);
    }
    let gram = sigma.transpose() * &sigma;
    let data = sigma.transpose() * &rhs;
    let lambda_min = if records.is_empty() {
        0.0
    } else {
        gram.symmetric_eigenvalues().min().max(0.0)
    };
    Ok(AssembledSystem { sigma, rhs, gram, data, lambda_min })
}

impl AssembledSystem {
    /// System with no rows; the weight flow is stationary against it.
    pub fn empty(weight_dim: usize) -> Self {
        AssembledSystem {
            sigma: DMatrix::zeros(0, weight_dim),
            rhs: DVector::zeros(0),
            gram: DMatrix::zeros(weight_dim, weight_dim),
            data: DVector::zeros(weight_dim),
            lambda_min: 0.0,
        }
    }

    /// Residual vector `sigma w + rhs` under a weight estimate.
    pub fn residuals(&self, w: &DVector<f64>) -> DVector<f64> {
        &self.sigma * w + &self.rhs
    }
}

/// Reward-weight estimator state.
pub struct IrlEstimator {
    /// Stacked weight estimate, length `weight_dim`.
    pub w_hat: DVector<f64>,
    /// Least-squares gain, SPD, `weight_dim` square.
    pub gamma: DMatrix<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma_bounds: (f64, f64),
}

impl IrlEstimator {
    pub fn new(
        w_hat0: DVector<f64>,
        gamma0: DMatrix<f64>,
        alpha: f64,
        beta: f64,
        gamma_bounds: (f64, f64),
    ) -> Result<Self, Error> {
        if !(alpha > 0.0) || !(beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::config("learner gains must be positive and finite"));
        }
        let (lo, hi) = gamma_bounds;
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::config("gain bounds must satisfy 0 < lower <= upper"));
        }
        let wd = w_hat0.len();
        if gamma0.nrows() != wd || gamma0.ncols() != wd {
            return Err(Error::config("gain dimension must match the weight dimension"));
        }
        if (&gamma0 - gamma0.transpose()).amax() > 1e-9 {
            return Err(Error::config("initial gain must be symmetric"));
        }
        Ok(IrlEstimator { w_hat: w_hat0, gamma: gamma0, alpha, beta, gamma_bounds })
    }

    fn check_system(&self, sys: &AssembledSystem) -> Result<(), Error> {
        if sys.gram.nrows() != self.w_hat.len() {
            return Err(Error::config("assembled system does not match the weight dimension"));
        }
        Ok(())
    }
}

/// Right-hand side of the weight flow: gradient descent on the stacked
/// squared residual, preconditioned by the gain.
pub fn w_derivative(est: &IrlEstimator, sys: &AssembledSystem) -> Result<DVector<f64>, Error> {
    est.check_system(sys)?;
    Ok(est.alpha * &est.gamma * (-(&sys.gram * &est.w_hat) - &sys.data))
}

/// Right-hand side of the gain flow against the assembled system.
pub fn gamma_derivative(est: &IrlEstimator, sys: &AssembledSystem) -> Result<DMatrix<f64>, Error> {
    est.check_system(sys)?;
    Ok(est.beta * &est.gamma - est.alpha * &est.gamma * &sys.gram * &est.gamma)
}

/// Advances `(w_hat, Gamma)` one joint Runge-Kutta step against a fixed
/// assembled system, then projects the gain spectrum back into its bounds.
pub fn irl_step(est: &mut IrlEstimator, sys: &AssembledSystem, dt: f64, t: f64) -> Result<(), Error> {
    est.check_system(sys)?;
    let w_dot = |w: &DVector<f64>, ga: &DMatrix<f64>| est.alpha * ga * (-(&sys.gram * w) - &sys.data);
    let ga_dot = |ga: &DMatrix<f64>| est.beta * ga - est.alpha * ga * &sys.gram * ga;

    let (w0, ga0) = (est.w_hat.clone(), est.gamma.clone());
    let k1w = w_dot(&w0, &ga0);
    let k1g = ga_dot(&ga0);
    let half = 0.5 * dt;
    let k2w = w_dot(&(&w0 + half * &k1w), &(&ga0 + half * &k1g));
    let k2g = ga_dot(&(&ga0 + half * &k1g));
    let k3w = w_dot(&(&w0 + half * &k2w), &(&ga0 + half * &k2g));
    let k3g = ga_dot(&(&ga0 + half * &k2g));
    let k4w = w_dot(&(&w0 + dt * &k3w), &(&ga0 + dt * &k3g));
    let k4g = ga_dot(&(&ga0 + dt * &k3g));

    let w_next = w0 + (dt / 6.0) * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    if w_next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t, what: "weight estimate".into() });
    }
    let gamma_next = ga0 + (dt / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
    est.gamma = project_spd(&gamma_next, est.gamma_bounds.0, est.gamma_bounds.1, t)?;
    est.w_hat = w_next;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::sync::Arc;

    const SQRT3: f64 = 1.7320508075688772;

    /// Double integrator with unit state and control costs. The algebraic
    /// Riccati equation gives the value `sqrt(3) x1^2 + 2 x1 x2 +
    /// sqrt(3) x2^2` and the policy `u = -(x1 + sqrt(3) x2)`.
    fn lqr_agent() -> AgentModel {
        AgentModel::new(
            2,
            1,
            1,
            Arc::new(|x: &DVector<f64>, u: &DVector<f64>| DVector::from_vec(vec![x[1], u[0]])),
            Arc::new(|x: &DVector<f64>, _u: &DVector<f64>| DVector::from_vec(vec![x[0]])),
            DMatrix::zeros(1, 2),
            Arc::new(|x: &DVector<f64>, _t| DVector::from_vec(vec![-(x[0] + SQRT3 * x[1])])),
            Some(Arc::new(|_: &DVector<f64>| DMatrix::from_column_slice(2, 1, &[0.0, 1.0]))),
        )
        .unwrap()
    }

    fn lqr_basis() -> IrlBasis {
        IrlBasis::new(
            2,
            Arc::new(|x: &DVector<f64>| {
                DVector::from_vec(vec![x[0] * x[0], x[0] * x[1], x[1] * x[1]])
            }),
            Arc::new(|x: &DVector<f64>| {
                DMatrix::from_row_slice(3, 2, &[2.0 * x[0], 0.0, x[1], x[0], 0.0, 2.0 * x[1]])
            }),
            Arc::new(|x: &DVector<f64>| DVector::from_vec(vec![x[0] * x[0], x[1] * x[1]])),
            1,
            1.0,
        )
        .unwrap()
    }

    fn lqr_truth() -> DVector<f64> {
        DVector::from_vec(vec![SQRT3, 2.0, SQRT3, 1.0, 1.0])
    }

    fn optimal_u(x: &DVector<f64>) -> f64 {
        -(x[0] + SQRT3 * x[1])
    }

    fn probe_states() -> Vec<DVector<f64>> {
        vec![
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![0.3, 0.7]),
            DVector::from_vec(vec![-1.2, 0.4]),
            DVector::from_vec(vec![2.0, 1.5]),
        ]
    }

    #[test]
    fn bellman_row_vanishes_at_truth_under_optimal_policy() {
        let agent = lqr_agent();
        let basis = lqr_basis();
        let w = lqr_truth();
        let theta = DMatrix::zeros(1, 2);
        for x in probe_states() {
            let u = DVector::from_vec(vec![optimal_u(&x)]);
            let (row, c) = bellman_row(&basis, &agent, &x, &u, &theta).unwrap();
            let delta = row.dot(&w) + c;
            assert!(delta.abs() < 1e-12, "residual {delta} at {x}");
        }
    }

    #[test]
    fn off_policy_row_measures_squared_control_deviation() {
        let agent = lqr_agent();
        let basis = lqr_basis();
        let w = lqr_truth();
        let theta = DMatrix::zeros(1, 2);
        for (i, x) in probe_states().into_iter().enumerate() {
            let u_val = 0.4 * i as f64 - 0.9;
            let u = DVector::from_vec(vec![u_val]);
            let (row, c) = bellman_row(&basis, &agent, &x, &u, &theta).unwrap();
            let dev = u_val - optimal_u(&x);
            assert_abs_diff_eq!(row.dot(&w) + c, dev * dev, epsilon = 1e-12);
        }
    }

    #[test]
    fn control_row_vanishes_at_truth() {
        let agent = lqr_agent();
        let basis = lqr_basis();
        let w = lqr_truth();
        for x in probe_states() {
            let u = DVector::from_vec(vec![optimal_u(&x)]);
            let (rows, rhs) = control_rows(&basis, &agent, &x, &u).unwrap();
            let delta = (&rows * &w + rhs)[0];
            assert!(delta.abs() < 1e-12, "stationarity residual {delta}");
        }
    }

    #[test]
    fn assembled_system_has_one_bellman_and_m_control_rows_per_record() {
        let agent = lqr_agent();
        let basis = lqr_basis();
        let records: Vec<IrlRecord> = probe_states()
            .into_iter()
            .enumerate()
            .map(|(i, x)| {
                let u = DVector::from_vec(vec![optimal_u(&x) + 0.2]);
                IrlRecord { x, u, theta_hat: DMatrix::zeros(1, 2), recorded_at: i as f64 }
            })
            .collect();
        let sys = assemble_system(&records, &basis, &agent).unwrap();
        assert_eq!(sys.sigma.nrows(), 2 * records.len());
        assert_eq!(sys.sigma.ncols(), 5);
        assert_eq!(sys.rhs.len(), 2 * records.len());
    }

    #[test]
    fn scalar_system_derivative_hand_value() {
        // gram = 1, data = -2, w = 0, alpha = gamma = 1: derivative is 2.
        let est = IrlEstimator::new(
            DVector::zeros(1),
            DMatrix::identity(1, 1),
            1.0,
            1.0,
            (1e-4, 1e4),
        )
        .unwrap();
        let sys = AssembledSystem {
            sigma: DMatrix::identity(1, 1),
            rhs: DVector::from_vec(vec![-2.0]),
            gram: DMatrix::identity(1, 1),
            data: DVector::from_vec(vec![-2.0]),
            lambda_min: 1.0,
        };
        let d = w_derivative(&est, &sys).unwrap();
        assert_abs_diff_eq!(d[0], 2.0, epsilon = 1e-14);
    }

    #[test]
    fn empty_system_freezes_weights_and_grows_gain() {
        let est = IrlEstimator::new(
            DVector::from_vec(vec![0.4, -0.2, 1.0, 0.0, 0.5]),
            DMatrix::identity(5, 5),
            1.0,
            0.9,
            (1e-4, 1e4),
        )
        .unwrap();
        let sys = AssembledSystem::empty(5);
        assert!(w_derivative(&est, &sys).unwrap().amax() < 1e-15);
        let g = gamma_derivative(&est, &sys).unwrap();
        assert_abs_diff_eq!(g, 0.9 * DMatrix::identity(5, 5), epsilon = 1e-14);
    }

    #[test]
    fn truth_is_stationary_under_the_flow() {
        let agent = lqr_agent();
        let basis = lqr_basis();
        let records: Vec<IrlRecord> = probe_states()
            .into_iter()
            .enumerate()
            .map(|(i, x)| {
                let u = DVector::from_vec(vec![optimal_u(&x)]);
                IrlRecord { x, u, theta_hat: DMatrix::zeros(1, 2), recorded_at: i as f64 }
            })
            .collect();
        let sys = assemble_system(&records, &basis, &agent).unwrap();
        let mut est = IrlEstimator::new(
            lqr_truth(),
            DMatrix::identity(5, 5),
            1.0,
            1.0,
            (1e-4, 1e4),
        )
        .unwrap();
        assert!(w_derivative(&est, &sys).unwrap().norm() < 1e-9);
        for i in 0..200 {
            irl_step(&mut est, &sys, 1e-3, i as f64 * 1e-3).unwrap();
        }
        assert!((est.w_hat - lqr_truth()).norm() < 1e-9);
    }

    #[test]
    fn on_policy_records_at_diverse_states_recover_the_weights() {
        let agent = lqr_agent();
        let basis = lqr_basis();
        // Records must be on-policy: at an off-policy control the Bellman
        // residual of the TRUE weights is the squared control deviation,
        // not zero, so the least-squares solution would drift away from
        // the truth. State diversity alone identifies all five weights.
        let mut states = probe_states();
        states.push(DVector::from_vec(vec![-0.6, -1.1]));
        states.push(DVector::from_vec(vec![1.4, -0.5]));
        let records: Vec<IrlRecord> = states
            .into_iter()
            .enumerate()
            .map(|(i, x)| {
                let u = DVector::from_vec(vec![optimal_u(&x)]);
                IrlRecord { x, u, theta_hat: DMatrix::zeros(1, 2), recorded_at: i as f64 }
            })
            .collect();
        let sys = assemble_system(&records, &basis, &agent).unwrap();
        assert!(sys.lambda_min > 1e-3, "stack fails to identify: {}", sys.lambda_min);
        assert!(sys.residuals(&lqr_truth()).amax() < 1e-12);
        let mut est = IrlEstimator::new(
            DVector::zeros(5),
            DMatrix::identity(5, 5),
            1.0,
            2.0,
            (1e-4, 1e4),
        )
        .unwrap();
        let dt = 1e-3;
        for i in 0..(10.0 / dt) as usize {
            irl_step(&mut est, &sys, dt, i as f64 * dt).unwrap();
        }
        let err = (&est.w_hat - lqr_truth()).norm();
        assert!(err < 1e-6, "weight error after 10 s: {err}");
    }

    #[test]
    fn missing_control_jacobian_is_rejected() {
        let mut agent = lqr_agent();
        agent.control_jacobian = None;
        let basis = lqr_basis();
        let x = DVector::from_vec(vec![1.0, -1.0]);
        let u = DVector::from_vec(vec![0.5]);
        assert!(matches!(control_rows(&basis, &agent, &x, &u), Err(Error::Config(_))));
        assert!(matches!(
            check_control_affine(&agent, &[x], 1e-9),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn control_affine_probe_accepts_linear_and_rejects_cubic() {
        let agent = lqr_agent();
        assert!(check_control_affine(&agent, &probe_states(), 1e-9).is_ok());

        let cubic = AgentModel::new(
            2,
            1,
            1,
            Arc::new(|x: &DVector<f64>, u: &DVector<f64>| {
                DVector::from_vec(vec![x[1], u[0] * u[0] * u[0]])
            }),
            Arc::new(|x: &DVector<f64>, _u: &DVector<f64>| DVector::from_vec(vec![x[0]])),
            DMatrix::zeros(1, 2),
            Arc::new(|_: &DVector<f64>, _t| DVector::from_vec(vec![0.0])),
            Some(Arc::new(|_: &DVector<f64>| DMatrix::from_column_slice(2, 1, &[0.0, 1.0]))),
        )
        .unwrap();
        assert!(matches!(
            check_control_affine(&cubic, &probe_states(), 1e-9),
            Err(Error::Config(_))
        ));
    }
}
