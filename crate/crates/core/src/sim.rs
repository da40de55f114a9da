//! Coupled simulation of two control-affine agents driven by one shared
//! exogenous disturbance, plus the classical fourth-order Runge-Kutta
//! stepper everything else is built on.
//!
//! Agent one knows its own dynamics and serves as the measurement channel
//! for the disturbance. Agent two has a partially unknown drift: a known
//! nominal part plus unknown parameters multiplying known features.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::observer::{ObserverState, XdotMode};

/// Map (state, control) to a vector, e.g. a drift or a feature evaluation.
pub type StateControlFn = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
/// Feedback policy: (state, time) to control.
pub type PolicyFn = Arc<dyn Fn(&DVector<f64>, f64) -> DVector<f64> + Send + Sync>;
/// Map a state to a vector (bases, costs).
pub type StateFn = Arc<dyn Fn(&DVector<f64>) -> DVector<f64> + Send + Sync>;
/// Map a state to a matrix (gradients, control Jacobians).
pub type StateMatFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// One classical Runge-Kutta step of `y' = f(t, y)` from `t` to `t + dt`.
///
/// Every stage output is checked for NaN/infinity so a model blow-up is
/// reported with the time at which it happened instead of poisoning
/// downstream state.
pub fn rk4_step<F>(f: &F, t: f64, y: &DVector<f64>, dt: f64) -> Result<DVector<f64>, Error>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let check = |k: &DVector<f64>, stage_t: f64| -> Result<(), Error> {
        if k.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                t: stage_t,
                what: "integration stage derivative".into(),
            })
        }
    };
    let half = 0.5 * dt;
    let k1 = f(t, y);
    check(&k1, t)?;
    let k2 = f(t + half, &(y + half * &k1));
    check(&k2, t + half)?;
    let k3 = f(t + half, &(y + half * &k2));
    check(&k3, t + half)?;
    let k4 = f(t + dt, &(y + dt * &k3));
    check(&k4, t + dt)?;
    Ok(y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
}

/// A control-affine agent with a partially unknown drift.
///
/// The full drift is `f*(x, u) = nominal_drift(x, u) + true_params^T * features(x, u)`,
/// and the state obeys `x' = f*(x, u) + d` under the shared disturbance `d`.
/// Agents with fully known dynamics use `feature_dim = 0`.
pub struct AgentModel {
    pub state_dim: usize,
    pub control_dim: usize,
    pub feature_dim: usize,
    /// Known drift component.
    pub nominal_drift: StateControlFn,
    /// Feature vector multiplied by the unknown parameters.
    pub features: StateControlFn,
    /// Ground-truth parameter matrix, `feature_dim x state_dim`. Held by the
    /// simulator only; estimators never read it.
    pub true_params: DMatrix<f64>,
    /// Feedback policy used when simulating this agent.
    pub control_policy: PolicyFn,
    /// Control Jacobian `x -> d f / d u`, required for reward inference.
    /// `None` marks the agent as unusable for inverse optimal control.
    pub control_jacobian: Option<StateMatFn>,
}

impl AgentModel {
    /// Builds an agent and probes the closures once at the origin to catch
    /// dimension mismatches at construction time.
    pub fn new(
        state_dim: usize,
        control_dim: usize,
        feature_dim: usize,
        nominal_drift: StateControlFn,
        features: StateControlFn,
        true_params: DMatrix<f64>,
        control_policy: PolicyFn,
        control_jacobian: Option<StateMatFn>,
    ) -> Result<Self, Error> {
        if true_params.nrows() != feature_dim || true_params.ncols() != state_dim {
            return Err(Error::config(format!(
                "parameter matrix is {}x{}, expected {}x{}",
                true_params.nrows(),
                true_params.ncols(),
                feature_dim,
                state_dim
            )));
        }
        let x0 = DVector::zeros(state_dim);
        let u0 = DVector::zeros(control_dim);
        if nominal_drift(&x0, &u0).len() != state_dim {
            return Err(Error::config("nominal drift output length != state_dim"));
        }
        if features(&x0, &u0).len() != feature_dim {
            return Err(Error::config("feature output length != feature_dim"));
        }
        if control_policy(&x0, 0.0).len() != control_dim {
            return Err(Error::config("control policy output length != control_dim"));
        }
        if let Some(g) = &control_jacobian {
            let j = g(&x0);
            if j.nrows() != state_dim || j.ncols() != control_dim {
                return Err(Error::config(format!(
                    "control Jacobian is {}x{}, expected {}x{}",
                    j.nrows(),
                    j.ncols(),
                    state_dim,
                    control_dim
                )));
            }
        }
        Ok(AgentModel {
            state_dim,
            control_dim,
            feature_dim,
            nominal_drift,
            features,
            true_params,
            control_policy,
            control_jacobian,
        })
    }

    /// Drift under an arbitrary parameter estimate.
    pub fn drift_with_params(
        &self,
        x: &DVector<f64>,
        u: &DVector<f64>,
        params: &DMatrix<f64>,
    ) -> DVector<f64> {
        let mut dx = (self.nominal_drift)(x, u);
        if self.feature_dim > 0 {
            dx += params.transpose() * (self.features)(x, u);
        }
        dx
    }

    /// Drift under the ground-truth parameters.
    pub fn true_drift(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        self.drift_with_params(x, u, &self.true_params)
    }
}

/// Linear exogenous system generating the shared disturbance `d = C * zeta`,
/// with `zeta' = A * zeta`.
pub struct ExoSystem {
    /// State matrix, `exo_dim x exo_dim`.
    pub a: DMatrix<f64>,
    /// Output matrix, `agent state dim x exo_dim`.
    pub c: DMatrix<f64>,
    /// Initial exogenous state.
    pub zeta0: DVector<f64>,
}

impl ExoSystem {
    pub fn new(a: DMatrix<f64>, c: DMatrix<f64>, zeta0: DVector<f64>) -> Result<Self, Error> {
        if !a.is_square() {
            return Err(Error::config("exogenous state matrix must be square"));
        }
        if c.ncols() != a.nrows() {
            return Err(Error::config("output matrix columns != exogenous dimension"));
        }
        if zeta0.len() != a.nrows() {
            return Err(Error::config("initial exogenous state has wrong length"));
        }
        if a.iter().chain(c.iter()).chain(zeta0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::config("exogenous system contains non-finite entries"));
        }
        Ok(ExoSystem { a, c, zeta0 })
    }

    pub fn exo_dim(&self) -> usize {
        self.a.nrows()
    }

    /// Disturbance produced by a given exogenous state.
    pub fn disturbance(&self, zeta: &DVector<f64>) -> DVector<f64> {
        &self.c * zeta
    }
}

/// Snapshot of the coupled simulation at one grid time.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub dt: f64,
    pub x1: DVector<f64>,
    pub x2: DVector<f64>,
    pub zeta: DVector<f64>,
}

impl SimState {
    pub fn new(t0: f64, dt: f64, x1: DVector<f64>, x2: DVector<f64>, zeta: DVector<f64>) -> Result<Self, Error> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::config("time grid requires finite t0 and dt > 0"));
        }
        let s = SimState { t: t0, dt, x1, x2, zeta };
        if !s.max_abs().is_finite() {
            return Err(Error::config("initial state contains non-finite entries"));
        }
        Ok(s)
    }

    /// Largest absolute entry across both agent states and the exogenous state.
    pub fn max_abs(&self) -> f64 {
        self.x1
            .iter()
            .chain(self.x2.iter())
            .chain(self.zeta.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

/// Running cost and value-function description of agent two's objective.
///
/// The running cost is `w_q . sigma_q(x) + u^T diag(r) u` and the optimal
/// value is `w_v . sigma_v(x)`; both bases are exact for the scenario in use,
/// so there is no approximation residual to carry around.
pub struct RewardModel {
    /// State-cost basis.
    pub sigma_q: StateFn,
    /// True state-cost weights.
    pub w_q: DVector<f64>,
    /// Diagonal of the control cost, all entries strictly positive.
    pub r_diag: DVector<f64>,
    /// Value-function basis.
    pub sigma_v: StateFn,
    /// Gradient of the value basis, rows follow `sigma_v` entries.
    pub grad_sigma_v: StateMatFn,
    /// True value weights.
    pub w_v: DVector<f64>,
}

impl RewardModel {
    pub fn new(
        state_dim: usize,
        sigma_q: StateFn,
        w_q: DVector<f64>,
        r_diag: DVector<f64>,
        sigma_v: StateFn,
        grad_sigma_v: StateMatFn,
        w_v: DVector<f64>,
    ) -> Result<Self, Error> {
        if r_diag.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::config("control cost diagonal must be strictly positive"));
        }
        let x0 = DVector::zeros(state_dim);
        if sigma_q(&x0).len() != w_q.len() {
            return Err(Error::config("state-cost basis length != state-cost weight length"));
        }
        let p = sigma_v(&x0).len();
        if p != w_v.len() {
            return Err(Error::config("value basis length != value weight length"));
        }
        let g = grad_sigma_v(&x0);
        if g.nrows() != p || g.ncols() != state_dim {
            return Err(Error::config("value basis gradient has wrong shape"));
        }
        Ok(RewardModel { sigma_q, w_q, r_diag, sigma_v, grad_sigma_v, w_v })
    }

    /// Instantaneous cost `w_q . sigma_q(x) + u^T diag(r) u`.
    pub fn running_cost(&self, x: &DVector<f64>, u: &DVector<f64>) -> f64 {
        let q = self.w_q.dot(&(self.sigma_q)(x));
        let ru = u
            .iter()
            .zip(self.r_diag.iter())
            .map(|(ui, ri)| ri * ui * ui)
            .sum::<f64>();
        q + ru
    }

    /// Optimal value at `x` under the true weights.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.w_v.dot(&(self.sigma_v)(x))
    }

    /// Checks `grad_sigma_v` against a central finite difference of
    /// `sigma_v` at each probe state. Relative tolerance applies entrywise
    /// against the larger of the analytic entry and one.
    pub fn validate_gradient(&self, probes: &[DVector<f64>], rel_tol: f64) -> Result<(), Error> {
        let h = 1e-6;
        for x in probes {
            let analytic = (self.grad_sigma_v)(x);
            for j in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = ((self.sigma_v)(&xp) - (self.sigma_v)(&xm)) / (2.0 * h);
                for i in 0..fd.len() {
                    let scale = analytic[(i, j)].abs().max(1.0);
                    if (fd[i] - analytic[(i, j)]).abs() > rel_tol * scale {
                        return Err(Error::config(format!(
                            "value basis gradient mismatch at entry ({i}, {j}): analytic {} vs finite difference {}",
                            analytic[(i, j)],
                            fd[i]
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

fn check_coupled_dims(state: &SimState, agent1: &AgentModel, agent2: &AgentModel, exo: &ExoSystem) -> Result<(), Error> {
    if state.x1.len() != agent1.state_dim || state.x2.len() != agent2.state_dim {
        return Err(Error::config("simulation state does not match agent dimensions"));
    }
    if exo.c.nrows() != agent1.state_dim || exo.c.nrows() != agent2.state_dim {
        return Err(Error::config(
            "disturbance dimension must match both agent state dimensions",
        ));
    }
    if state.zeta.len() != exo.exo_dim() {
        return Err(Error::config("exogenous state has wrong length"));
    }
    Ok(())
}

/// Stacked derivative of `[x1; x2; zeta]` with both policies evaluated at the
/// stage state, shared by the plain and observer-augmented steppers.
fn coupled_derivative(
    t: f64,
    y: &DVector<f64>,
    agent1: &AgentModel,
    agent2: &AgentModel,
    exo: &ExoSystem,
) -> DVector<f64> {
    let n1 = agent1.state_dim;
    let n2 = agent2.state_dim;
    let x1 = DVector::from(y.rows(0, n1));
    let x2 = DVector::from(y.rows(n1, n2));
    let zeta = DVector::from(y.rows(n1 + n2, exo.exo_dim()));
    let d = exo.disturbance(&zeta);
    let u1 = (agent1.control_policy)(&x1, t);
    let u2 = (agent2.control_policy)(&x2, t);
    let dx1 = agent1.true_drift(&x1, &u1) + &d;
    let dx2 = agent2.true_drift(&x2, &u2) + &d;
    let dzeta = &exo.a * &zeta;
    let mut dy = DVector::zeros(y.len());
    dy.rows_mut(0, n1).copy_from(&dx1);
    dy.rows_mut(n1, n2).copy_from(&dx2);
    dy.rows_mut(n1 + n2, exo.exo_dim()).copy_from(&dzeta);
    dy
}

fn enforce_bound(state: &SimState, blowup_bound: f64) -> Result<(), Error> {
    let norm = state.max_abs();
    if norm > blowup_bound {
        return Err(Error::Diverged { t: state.t, norm, bound: blowup_bound });
    }
    Ok(())
}

/// Advances both agents and the exogenous state one grid step.
pub fn coupled_step(
    state: &SimState,
    agent1: &AgentModel,
    agent2: &AgentModel,
    exo: &ExoSystem,
    blowup_bound: f64,
) -> Result<SimState, Error> {
    check_coupled_dims(state, agent1, agent2, exo)?;
    let n1 = agent1.state_dim;
    let n2 = agent2.state_dim;
    let mut y = DVector::zeros(n1 + n2 + exo.exo_dim());
    y.rows_mut(0, n1).copy_from(&state.x1);
    y.rows_mut(n1, n2).copy_from(&state.x2);
    y.rows_mut(n1 + n2, exo.exo_dim()).copy_from(&state.zeta);
    let f = |t: f64, y: &DVector<f64>| coupled_derivative(t, y, agent1, agent2, exo);
    let y1 = rk4_step(&f, state.t, &y, state.dt)?;
    let next = SimState {
        t: state.t + state.dt,
        dt: state.dt,
        x1: DVector::from(y1.rows(0, n1)),
        x2: DVector::from(y1.rows(n1, n2)),
        zeta: DVector::from(y1.rows(n1 + n2, exo.exo_dim())),
    };
    enforce_bound(&next, blowup_bound)?;
    Ok(next)
}

/// Advances the coupled plant and the disturbance observer together.
///
/// In [`XdotMode::Exact`] the observer state joins the integration vector, so
/// its correction term sees the stage-consistent derivative of agent one and
/// the estimation error contracts exactly under the observer's error
/// dynamics. In [`XdotMode::FiniteDifference`] the plant is advanced first
/// and the observer integrates against the secant slope of agent one over the
/// step, which is what a deployment without derivative sensors would do.
pub fn step_with_observer(
    state: &SimState,
    agent1: &AgentModel,
    agent2: &AgentModel,
    exo: &ExoSystem,
    observer: &mut ObserverState,
    mode: XdotMode,
    blowup_bound: f64,
) -> Result<SimState, Error> {
    check_coupled_dims(state, agent1, agent2, exo)?;
    if observer.exo_dim() != exo.exo_dim() {
        return Err(Error::config("observer and exogenous dimensions differ"));
    }
    let n1 = agent1.state_dim;
    let n2 = agent2.state_dim;
    let nz = exo.exo_dim();
    match mode {
        XdotMode::Exact => {
            let mut y = DVector::zeros(n1 + n2 + 2 * nz);
            y.rows_mut(0, n1).copy_from(&state.x1);
            y.rows_mut(n1, n2).copy_from(&state.x2);
            y.rows_mut(n1 + n2, nz).copy_from(&state.zeta);
            y.rows_mut(n1 + n2 + nz, nz).copy_from(&observer.zeta_hat);
            let f = |t: f64, y: &DVector<f64>| {
                let plant = DVector::from(y.rows(0, n1 + n2 + nz));
                let mut dy = DVector::zeros(y.len());
                let dplant = coupled_derivative(t, &plant, agent1, agent2, exo);
                dy.rows_mut(0, n1 + n2 + nz).copy_from(&dplant);
                let x1 = DVector::from(y.rows(0, n1));
                let u1 = (agent1.control_policy)(&x1, t);
                let x1_dot = DVector::from(dplant.rows(0, n1));
                let zeta_hat = DVector::from(y.rows(n1 + n2 + nz, nz));
                let dz_hat = observer.derivative_at(&zeta_hat, &x1_dot, &x1, &u1, agent1);
                dy.rows_mut(n1 + n2 + nz, nz).copy_from(&dz_hat);
                dy
            };
            let y1 = rk4_step(&f, state.t, &y, state.dt)?;
            observer.zeta_hat = DVector::from(y1.rows(n1 + n2 + nz, nz));
            let next = SimState {
                t: state.t + state.dt,
                dt: state.dt,
                x1: DVector::from(y1.rows(0, n1)),
                x2: DVector::from(y1.rows(n1, n2)),
                zeta: DVector::from(y1.rows(n1 + n2, nz)),
            };
            enforce_bound(&next, blowup_bound)?;
            Ok(next)
        }
        XdotMode::FiniteDifference => {
            let next = coupled_step(state, agent1, agent2, exo, blowup_bound)?;
            // Secant slope over the step; held constant across the observer's
            // stages along with the end-of-step measurement.
            let x1_dot = (&next.x1 - &state.x1) / state.dt;
            let u1 = (agent1.control_policy)(&next.x1, next.t);
            let zh = observer.zeta_hat.clone();
            let f = |_t: f64, zeta_hat: &DVector<f64>| {
                observer.derivative_at(zeta_hat, &x1_dot, &next.x1, &u1, agent1)
            };
            observer.zeta_hat = rk4_step(&f, state.t, &zh, state.dt)?;
            Ok(next)
        }
    }
}
