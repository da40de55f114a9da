//! Disturbance observer.
//!
//! The shared disturbance is the output `d = C * zeta` of a known linear
//! exogenous system `zeta' = A * zeta` with unknown state. Agent one knows
//! its own dynamics `x' = f(x, u) + d`, so the innovation
//! `x' - f(x, u) - d_hat` exposes the disturbance estimation error and
//!
//! `zeta_hat' = A zeta_hat + K (x' - f(x, u) - C zeta_hat)`
//!
//! contracts the error under `zeta_err' = (A - K C) zeta_err`. Convergence
//! therefore only needs `A - K C` Hurwitz, which construction enforces. The
//! rate is the spectral abscissa of `A - K C`.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::sim::AgentModel;

/// Where the observer gets the state derivative of agent one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XdotMode {
    /// Use the simulator's exact derivative, stage-consistently.
    Exact,
    /// Use the secant slope of the measured state over one step.
    FiniteDifference,
}

/// Observer for the exogenous state behind the shared disturbance.
#[derive(Debug, Clone)]
pub struct ObserverState {
    /// Current estimate of the exogenous state.
    pub zeta_hat: DVector<f64>,
    /// Exogenous state matrix (copy held by the observer).
    pub a: DMatrix<f64>,
    /// Disturbance output matrix.
    pub c: DMatrix<f64>,
    /// Injection gain, `exo_dim x agent-state dim`.
    pub k: DMatrix<f64>,
}

impl ObserverState {
    /// Builds the observer and validates that `A - K C` is Hurwitz.
    ///
    /// An indefinite symmetric part of `A - K C` is allowed (decay is still
    /// exponential, just not monotone in the Euclidean norm); callers can
    /// check [`ObserverState::symmetric_part_negative_definite`] if they want
    /// to surface that.
    pub fn new(
        a: DMatrix<f64>,
        c: DMatrix<f64>,
        k: DMatrix<f64>,
        zeta_hat0: DVector<f64>,
    ) -> Result<Self, Error> {
        let nz = a.nrows();
        if !a.is_square() {
            return Err(Error::config("exogenous state matrix must be square"));
        }
        if c.ncols() != nz {
            return Err(Error::config("output matrix columns != exogenous dimension"));
        }
        if k.nrows() != nz || k.ncols() != c.nrows() {
            return Err(Error::config(format!(
                "observer gain is {}x{}, expected {}x{}",
                k.nrows(),
                k.ncols(),
                nz,
                c.nrows()
            )));
        }
        if zeta_hat0.len() != nz {
            return Err(Error::config("initial observer state has wrong length"));
        }
        if a.iter().chain(c.iter()).chain(k.iter()).chain(zeta_hat0.iter()).any(|v| !v.is_finite()) {
            return Err(Error::config("observer matrices contain non-finite entries"));
        }
        let obs = ObserverState { zeta_hat: zeta_hat0, a, c, k };
        let abscissa = obs.spectral_abscissa();
        if !(abscissa < 0.0) {
            return Err(Error::config(format!(
                "observer error matrix is not Hurwitz: spectral abscissa {abscissa:.6}"
            )));
        }
        Ok(obs)
    }

    pub fn exo_dim(&self) -> usize {
        self.a.nrows()
    }

    /// `A - K C`, the error dynamics matrix.
    pub fn error_matrix(&self) -> DMatrix<f64> {
        &self.a - &self.k * &self.c
    }

    /// Largest real part among eigenvalues of `A - K C`; negative means the
    /// estimation error decays at this exponential rate.
    pub fn spectral_abscissa(&self) -> f64 {
        self.error_matrix()
            .complex_eigenvalues()
            .iter()
            .fold(f64::NEG_INFINITY, |m, l| m.max(l.re))
    }

    /// Whether the symmetric part of `A - K C` is negative definite, i.e.
    /// whether the error norm decays monotonically and not just exponentially.
    pub fn symmetric_part_negative_definite(&self) -> bool {
        let m = self.error_matrix();
        let sym = 0.5 * (&m + m.transpose());
        sym.symmetric_eigenvalues().iter().all(|&l| l < 0.0)
    }

    /// Observer vector field evaluated at an arbitrary estimate, used by the
    /// stage-consistent integrator.
    pub(crate) fn derivative_at(
        &self,
        zeta_hat: &DVector<f64>,
        x_dot: &DVector<f64>,
        x: &DVector<f64>,
        u: &DVector<f64>,
        agent1: &AgentModel,
    ) -> DVector<f64> {
        let innovation = x_dot - agent1.true_drift(x, u) - &self.c * zeta_hat;
        &self.a * zeta_hat + &self.k * innovation
    }
}

/// Observer vector field at the observer's current estimate.
///
/// `x_dot` is the derivative of agent one's state, `x` and `u` its state and
/// control; `agent1` supplies the known drift that is subtracted out.
pub fn observer_derivative(
    obs: &ObserverState,
    x_dot: &DVector<f64>,
    x: &DVector<f64>,
    u: &DVector<f64>,
    agent1: &AgentModel,
) -> Result<DVector<f64>, Error> {
    if x.len() != agent1.state_dim || x_dot.len() != agent1.state_dim {
        return Err(Error::config("observer input does not match agent one's state dimension"));
    }
    if u.len() != agent1.control_dim {
        return Err(Error::config("observer input does not match agent one's control dimension"));
    }
    if obs.c.nrows() != agent1.state_dim {
        return Err(Error::config("observer output matrix does not match agent one's state dimension"));
    }
    Ok(obs.derivative_at(&obs.zeta_hat, x_dot, x, u, agent1))
}

/// Current disturbance estimate `C * zeta_hat`.
pub fn d_hat(obs: &ObserverState) -> DVector<f64> {
    &obs.c * &obs.zeta_hat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{step_with_observer, AgentModel, ExoSystem, SimState};
    use approx::assert_abs_diff_eq;
    use nalgebra::Complex;
    use std::sync::Arc;

    fn rotation_exo_matrices() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let k = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 5.0]);
        (a, c, k)
    }

    /// Planar agent with a mildly nonlinear known drift; the observer error
    /// dynamics must not depend on it.
    fn planar_agent() -> AgentModel {
        AgentModel::new(
            2,
            1,
            0,
            Arc::new(|x: &DVector<f64>, u: &DVector<f64>| {
                DVector::from_vec(vec![x[1], x[0] * x[1] + 3.0 * x[1] * x[1] + 5.0 * u[0]])
            }),
            Arc::new(|_: &DVector<f64>, _: &DVector<f64>| DVector::zeros(0)),
            DMatrix::zeros(0, 2),
            Arc::new(|x: &DVector<f64>, _t| DVector::from_vec(vec![-2.0 * (x[0] + x[1])])),
            None,
        )
        .unwrap()
    }

    /// Closed-form matrix exponential of a real 2x2 matrix with a complex
    /// conjugate eigenvalue pair a +/- i b:
    /// exp(M t) = exp(a t) (cos(b t) I + sin(b t) (M - a I) / b).
    fn expm_2x2_complex_pair(m: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let disc = tr * tr - 4.0 * det;
        assert!(disc < 0.0, "test oracle expects a complex pair");
        let a = 0.5 * tr;
        let b = 0.5 * (-disc).sqrt();
        let eye = DMatrix::identity(2, 2);
        (a * t).exp() * ((b * t).cos() * &eye + (b * t).sin() / b * (m - a * eye))
    }

    #[test]
    fn construction_rejects_non_hurwitz_gain() {
        let (a, c, _) = rotation_exo_matrices();
        // Zero gain leaves the marginally stable rotation untouched.
        let err = ObserverState::new(a, c, DMatrix::zeros(2, 2), DVector::zeros(2)).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn gain_pair_has_expected_spectrum() {
        let (a, c, k) = rotation_exo_matrices();
        let obs = ObserverState::new(a, c, k, DVector::zeros(2)).unwrap();
        // A - K C = [-0.5, 1; -6, 0]: trace -0.5, determinant 6, so the
        // eigenvalues are -0.25 +/- i sqrt(23.75)/2.
        assert_abs_diff_eq!(obs.spectral_abscissa(), -0.25, epsilon = 1e-12);
        let eigs = obs.error_matrix().complex_eigenvalues();
        let expected_im = (23.75_f64).sqrt() / 2.0;
        let mut ims: Vec<f64> = eigs.iter().map(|l: &Complex<f64>| l.im).collect();
        ims.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(ims[1], expected_im, epsilon = 1e-12);
        // The symmetric part [-0.5, -2.5; -2.5, 0] is indefinite, so decay is
        // exponential but not monotone.
        assert!(!obs.symmetric_part_negative_definite());
    }

    #[test]
    fn zero_innovation_reduces_to_exogenous_flow() {
        let (a, c, k) = rotation_exo_matrices();
        let agent = planar_agent();
        let zeta_hat = DVector::from_vec(vec![0.3, -0.8]);
        let obs = ObserverState::new(a.clone(), c.clone(), k, zeta_hat.clone()).unwrap();
        let x = DVector::from_vec(vec![0.4, -0.1]);
        let u = (agent.control_policy)(&x, 0.0);
        // Hand the observer exactly the derivative its own estimate implies.
        let x_dot = agent.true_drift(&x, &u) + &c * &zeta_hat;
        let dz = observer_derivative(&obs, &x_dot, &x, &u, &agent).unwrap();
        assert_abs_diff_eq!(dz, &a * &zeta_hat, epsilon = 1e-14);
    }

    #[test]
    fn disturbance_estimate_reads_first_exo_coordinate() {
        let (a, c, k) = rotation_exo_matrices();
        let obs = ObserverState::new(a, c, k, DVector::from_vec(vec![0.7, 2.0])).unwrap();
        let d = d_hat(&obs);
        assert_eq!(d.len(), 2);
        assert_abs_diff_eq!(d[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn estimation_error_follows_linear_error_dynamics() {
        let (a, c, k) = rotation_exo_matrices();
        let agent1 = planar_agent();
        let agent2 = planar_agent();
        let exo = ExoSystem::new(a.clone(), c.clone(), DVector::from_vec(vec![0.0, 1.0])).unwrap();
        let mut obs = ObserverState::new(a, c, k, DVector::zeros(2)).unwrap();
        let err_mat = obs.error_matrix();
        let err0 = &exo.zeta0 - &obs.zeta_hat;
        let dt = 0.0005;
        let mut s = SimState::new(
            0.0,
            dt,
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![1.0, -1.0]),
            exo.zeta0.clone(),
        )
        .unwrap();
        let mut max_dev: f64 = 0.0;
        for _ in 0..(10.0 / dt) as usize {
            s = step_with_observer(&s, &agent1, &agent2, &exo, &mut obs, XdotMode::Exact, 1e6).unwrap();
            let err = &s.zeta - &obs.zeta_hat;
            let reference = expm_2x2_complex_pair(&err_mat, s.t) * &err0;
            max_dev = max_dev.max((err - reference).norm());
        }
        assert!(max_dev < 1e-6, "deviation from closed-form error flow: {max_dev}");
    }

    #[test]
    fn finite_difference_mode_still_converges() {
        let (a, c, k) = rotation_exo_matrices();
        let agent1 = planar_agent();
        let agent2 = planar_agent();
        let exo = ExoSystem::new(a.clone(), c.clone(), DVector::from_vec(vec![0.0, 1.0])).unwrap();
        let mut obs = ObserverState::new(a, c, k, DVector::zeros(2)).unwrap();
        let dt = 0.0005;
        let mut s = SimState::new(
            0.0,
            dt,
            DVector::from_vec(vec![1.0, -1.0]),
            DVector::from_vec(vec![1.0, -1.0]),
            exo.zeta0.clone(),
        )
        .unwrap();
        for _ in 0..(20.0 / dt) as usize {
            s = step_with_observer(&s, &agent1, &agent2, &exo, &mut obs, XdotMode::FiniteDifference, 1e6).unwrap();
        }
        let err = (&s.zeta - &obs.zeta_hat).norm();
        assert!(err < 1e-2, "finite-difference observer error {err}");
    }

    #[test]
    fn derivative_rejects_mismatched_inputs() {
        let (a, c, k) = rotation_exo_matrices();
        let agent = planar_agent();
        let obs = ObserverState::new(a, c, k, DVector::zeros(2)).unwrap();
        let bad = observer_derivative(
            &obs,
            &DVector::zeros(3),
            &DVector::zeros(3),
            &DVector::zeros(1),
            &agent,
        );
        assert!(matches!(bad, Err(Error::Config(_))));
    }
}
