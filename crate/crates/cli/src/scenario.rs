//! The benchmark scenario: a demonstrator with fully known dynamics, a
//! learner with three unknown drift parameters, a rotational disturbance
//! generator driving both agents, and the cost structure whose weights the
//! pipeline recovers.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use oirl_core::irl::{check_control_affine, IrlBasis};
use oirl_core::observer::ObserverState;
use oirl_core::sim::{AgentModel, ExoSystem, RewardModel, SimState};
use oirl_core::Error;

use crate::config::ScenarioConfig;

/// Everything `run` needs, wired and validated from one configuration.
pub struct Scenario {
    pub agent1: Arc<AgentModel>,
    pub agent2: Arc<AgentModel>,
    pub exo: ExoSystem,
    pub observer: ObserverState,
    pub reward: RewardModel,
    pub basis: Arc<IrlBasis>,
    /// True drift parameters of agent two, `3 x 2`.
    pub theta_true: DMatrix<f64>,
    /// True stacked weights `(W_V, W_Q)` with `r1` fixed.
    pub w_true: DVector<f64>,
    /// Initial estimate fed to the drift-parameter estimator, `3 x 2`.
    pub theta_hat0: DMatrix<f64>,
    /// Initial estimate fed to the reward-weight estimator, length 5.
    pub w_hat0: DVector<f64>,
    pub initial: SimState,
}

/// Drift features of agent two; state-only, all feeding its second equation.
fn learner_features(x: &DVector<f64>) -> DVector<f64> {
    let x1 = x[0];
    let x2 = x[1];
    DVector::from_vec(vec![
        x1 * (FRAC_PI_2 + (5.0 * x1).atan()),
        x1 * x1 / (1.0 + 25.0 * x1 * x1),
        x2,
    ])
}

fn value_features(x: &DVector<f64>) -> DVector<f64> {
    let x1 = x[0];
    let x2 = x[1];
    DVector::from_vec(vec![x1 * x1, x1 * x1 * (5.0 * x1).atan(), x2 * x2])
}

fn value_feature_gradient(x: &DVector<f64>) -> DMatrix<f64> {
    let x1 = x[0];
    let x2 = x[1];
    let at = (5.0 * x1).atan();
    let sq = 1.0 + 25.0 * x1 * x1;
    DMatrix::from_row_slice(
        3,
        2,
        &[
            2.0 * x1,
            0.0,
            2.0 * x1 * at + 5.0 * x1 * x1 / sq,
            0.0,
            0.0,
            2.0 * x2,
        ],
    )
}

fn state_cost_features(x: &DVector<f64>) -> DVector<f64> {
    DVector::from_vec(vec![x[0] * x[0], x[1] * x[1]])
}

fn demonstrator(u1_gain: f64) -> Result<AgentModel, Error> {
    AgentModel::new(
        2,
        1,
        0,
        Arc::new(|x: &DVector<f64>, u: &DVector<f64>| {
            let x1 = x[0];
            let x2 = x[1];
            DVector::from_vec(vec![x2, x1 * x2 + 3.0 * x2 * x2 + 5.0 * u[0]])
        }),
        Arc::new(|_x: &DVector<f64>, _u: &DVector<f64>| DVector::zeros(0)),
        DMatrix::zeros(0, 2),
        Arc::new(move |x: &DVector<f64>, _t: f64| {
            DVector::from_vec(vec![-u1_gain * (x[0] + x[1])])
        }),
        None,
    )
}

fn learner() -> Result<AgentModel, Error> {
    AgentModel::new(
        2,
        1,
        3,
        Arc::new(|x: &DVector<f64>, u: &DVector<f64>| {
            DVector::from_vec(vec![x[1], 3.0 * u[0]])
        }),
        Arc::new(|x: &DVector<f64>, _u: &DVector<f64>| learner_features(x)),
        theta_true(),
        Arc::new(|x: &DVector<f64>, _t: f64| DVector::from_vec(vec![-3.0 * x[1]])),
        Some(Arc::new(|_x: &DVector<f64>| {
            DMatrix::from_row_slice(2, 1, &[0.0, 3.0])
        })),
    )
}

/// True drift parameters: the first state equation has no unknown part, the
/// second weighs the three features.
pub fn theta_true() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 2, &[0.0, -1.0, 0.0, -2.5, 0.0, 4.0])
}

/// True stacked weights: value weights `(pi/2, 1, 1)`, state-cost weights
/// `(0, 1)`, no unknown control weights.
pub fn w_true() -> DVector<f64> {
    DVector::from_vec(vec![FRAC_PI_2, 1.0, 1.0, 0.0, 1.0])
}

impl Scenario {
    /// Wires the scenario, rejecting configurations whose observer error
    /// matrix is not Hurwitz, whose feature gradient is inconsistent, or
    /// whose learner drift is not affine in the control.
    pub fn build(cfg: &ScenarioConfig) -> Result<Self, Error> {
        cfg.validate()?;
        let nz = cfg.exo_dim()?;
        let agent1 = Arc::new(demonstrator(cfg.u1_gain)?);
        let agent2 = Arc::new(learner()?);
        let exo_a = DMatrix::from_row_slice(nz, nz, &cfg.exo_a);
        let exo_c = DMatrix::from_row_slice(2, nz, &cfg.exo_c);
        let exo = ExoSystem::new(
            exo_a.clone(),
            exo_c.clone(),
            DVector::from_vec(cfg.zeta_0.clone()),
        )?;
        let observer = ObserverState::new(
            exo_a,
            exo_c,
            DMatrix::from_row_slice(nz, 2, &cfg.observer_k),
            DVector::from_vec(cfg.zeta_hat_0.clone()),
        )?;
        let reward = RewardModel::new(
            2,
            Arc::new(state_cost_features),
            DVector::from_vec(vec![0.0, 1.0]),
            DVector::from_vec(vec![1.0]),
            Arc::new(value_features),
            Arc::new(value_feature_gradient),
            DVector::from_vec(vec![FRAC_PI_2, 1.0, 1.0]),
        )?;
        let basis = Arc::new(IrlBasis::new(
            2,
            Arc::new(value_features),
            Arc::new(value_feature_gradient),
            Arc::new(state_cost_features),
            1,
            1.0,
        )?);
        let probes = [
            DVector::from_vec(vec![0.3, -0.7]),
            DVector::from_vec(vec![1.0, 0.5]),
            DVector::from_vec(vec![-1.2, 0.9]),
            DVector::from_vec(vec![-0.4, -1.1]),
        ];
        reward.validate_gradient(&probes, 1e-6)?;
        check_control_affine(&agent2, &probes, 1e-9)?;
        let initial = SimState::new(
            0.0,
            cfg.dt,
            DVector::from_vec(cfg.x1_0.clone()),
            DVector::from_vec(cfg.x2_0.clone()),
            DVector::from_vec(cfg.zeta_0.clone()),
        )?;
        Ok(Scenario {
            agent1,
            agent2,
            exo,
            observer,
            reward,
            basis: basis.clone(),
            theta_true: theta_true(),
            w_true: w_true(),
            theta_hat0: DMatrix::from_row_slice(3, 2, &cfg.theta_hat_0),
            w_hat0: DVector::from_vec(cfg.w_hat_0.clone()),
            initial,
        })
    }
}
