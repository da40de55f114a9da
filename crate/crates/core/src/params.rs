//! Concurrent-learning estimator for agent two's drift parameters.
//!
//! Each stored record couples a state difference to window integrals:
//! `X_i = F_i + theta^T S_i + D_i`. With the disturbance integral replaced
//! by its estimate, the residual `X_i - F_i - theta_hat^T S_i - Dhat_i`
//! drives a gradient flow on `theta_hat` through a least-squares style gain:
//!
//! `theta_hat' = alpha Gamma sum_i S_i residual_i^T`
//! `Gamma'     = beta Gamma - alpha Gamma (sum_i S_i S_i^T) Gamma`
//!
//! Once `Gamma` settles near `(beta/alpha) * Gram^{-1}`, the parameter error
//! contracts at rate `beta` regardless of the data scale. The gain spectrum
//! is projected into configured bounds after every step, so the flow cannot
//! stall or blow up when the stack changes abruptly at a purge.

use nalgebra::{DMatrix, DVector};

use crate::error::Error;
use crate::stack::PeRecord;

/// Spectral floor below which a gain matrix is considered collapsed.
const GAIN_UNDERFLOW: f64 = 1e-12;

/// Symmetrizes a gain matrix and clamps its spectrum into `[lo, hi]`.
///
/// Fails if an eigenvalue fell below the underflow floor, which means the
/// step size or the gains are far outside the workable regime.
pub(crate) fn project_spd(m: &DMatrix<f64>, lo: f64, hi: f64, t: f64) -> Result<DMatrix<f64>, Error> {
    let sym = 0.5 * (m + m.transpose());
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t, what: "gain matrix".into() });
    }
    let eig = sym.symmetric_eigen();
    let mut vals = eig.eigenvalues;
    for l in vals.iter_mut() {
        if *l < GAIN_UNDERFLOW {
            return Err(Error::Conditioning {
                t,
                what: format!("gain eigenvalue {l:.3e} under {GAIN_UNDERFLOW:.0e}"),
            });
        }
        *l = l.clamp(lo, hi);
    }
    let q = eig.eigenvectors;
    Ok(&q * DMatrix::from_diagonal(&vals) * q.transpose())
}

/// Smallest and largest eigenvalue of a symmetric matrix.
pub fn spectrum_range(m: &DMatrix<f64>) -> (f64, f64) {
    m.symmetric_eigenvalues()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &l| (lo.min(l), hi.max(l)))
}

/// Residual of one record under a parameter estimate.
pub fn record_residual(record: &PeRecord, theta_hat: &DMatrix<f64>) -> DVector<f64> {
    &record.x_diff - &record.f_int - theta_hat.transpose() * &record.s_int - &record.d_hat_int
}

/// Drift-parameter estimator state.
pub struct ThetaEstimator {
    /// Current estimate, `feature_dim x state_dim`.
    pub theta_hat: DMatrix<f64>,
    /// Least-squares gain, `feature_dim x feature_dim`, SPD.
    pub gamma: DMatrix<f64>,
    pub alpha: f64,
    pub beta: f64,
    /// Gain spectrum bounds `(lower, upper)`.
    pub gamma_bounds: (f64, f64),
}

impl ThetaEstimator {
    pub fn new(
        theta_hat0: DMatrix<f64>,
        gamma0: DMatrix<f64>,
        alpha: f64,
        beta: f64,
        gamma_bounds: (f64, f64),
    ) -> Result<Self, Error> {
        if !(alpha > 0.0) || !(beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::config("estimator gains must be positive and finite"));
        }
        let (lo, hi) = gamma_bounds;
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() {
            return Err(Error::config("gain bounds must satisfy 0 < lower <= upper"));
        }
        let p = theta_hat0.nrows();
        if gamma0.nrows() != p || gamma0.ncols() != p {
            return Err(Error::config("gain dimension must match the feature dimension"));
        }
        if (&gamma0 - gamma0.transpose()).amax() > 1e-9 {
            return Err(Error::config("initial gain must be symmetric"));
        }
        let (gmin, gmax) = spectrum_range(&gamma0);
        if gmin < lo - 1e-12 || gmax > hi + 1e-12 {
            return Err(Error::config("initial gain spectrum outside configured bounds"));
        }
        Ok(ThetaEstimator { theta_hat: theta_hat0, gamma: gamma0, alpha, beta, gamma_bounds })
    }

    fn check_records(&self, records: &[PeRecord]) -> Result<(), Error> {
        let p = self.theta_hat.nrows();
        let n = self.theta_hat.ncols();
        for r in records {
            if r.s_int.len() != p || r.x_diff.len() != n || r.f_int.len() != n || r.d_hat_int.len() != n {
                return Err(Error::config("stack record dimensions do not match estimator"));
            }
        }
        Ok(())
    }

    /// `(sum_i S_i (X_i - F_i - Dhat_i)^T, sum_i S_i S_i^T)`; the residual
    /// sum under any estimate is then `data - gram * theta`.
    fn data_sums(&self, records: &[PeRecord]) -> (DMatrix<f64>, DMatrix<f64>) {
        let p = self.theta_hat.nrows();
        let n = self.theta_hat.ncols();
        let mut data = DMatrix::zeros(p, n);
        let mut gram = DMatrix::zeros(p, p);
        for r in records {
            let c = &r.x_diff - &r.f_int - &r.d_hat_int;
            data.ger(1.0, &r.s_int, &c, 1.0);
            gram.ger(1.0, &r.s_int, &r.s_int, 1.0);
        }
        (data, gram)
    }
}

/// Right-hand side of the parameter flow at the estimator's current state.
pub fn theta_derivative(est: &ThetaEstimator, records: &[PeRecord]) -> Result<DMatrix<f64>, Error> {
    est.check_records(records)?;
    let (data, gram) = est.data_sums(records);
    Ok(est.alpha * &est.gamma * (data - gram * &est.theta_hat))
}

/// Right-hand side of the gain flow at the estimator's current state.
///
/// With an empty stack the Gram term vanishes and the gain grows at rate
/// `beta`; callers gate updates on stack readiness to avoid that.
pub fn gamma_derivative(est: &ThetaEstimator, records: &[PeRecord]) -> Result<DMatrix<f64>, Error> {
    est.check_records(records)?;
    let (_, gram) = est.data_sums(records);
    Ok(est.beta * &est.gamma - est.alpha * &est.gamma * gram * &est.gamma)
}

/// Advances `(theta_hat, Gamma)` one joint Runge-Kutta step against a fixed
/// stack, then projects the gain spectrum back into its bounds.
pub fn estimator_step(est: &mut ThetaEstimator, records: &[PeRecord], dt: f64, t: f64) -> Result<(), Error> {
    est.check_records(records)?;
    let (data, gram) = est.data_sums(records);
    let th_dot = |th: &DMatrix<f64>, ga: &DMatrix<f64>| est.alpha * ga * (&data - &gram * th);
    let ga_dot = |ga: &DMatrix<f64>| est.beta * ga - est.alpha * ga * &gram * ga;

    let (th0, ga0) = (est.theta_hat.clone(), est.gamma.clone());
    let k1t = th_dot(&th0, &ga0);
    let k1g = ga_dot(&ga0);
    let half = 0.5 * dt;
    let k2t = th_dot(&(&th0 + half * &k1t), &(&ga0 + half * &k1g));
    let k2g = ga_dot(&(&ga0 + half * &k1g));
    let k3t = th_dot(&(&th0 + half * &k2t), &(&ga0 + half * &k2g));
    let k3g = ga_dot(&(&ga0 + half * &k2g));
    let k4t = th_dot(&(&th0 + dt * &k3t), &(&ga0 + dt * &k3g));
    let k4g = ga_dot(&(&ga0 + dt * &k3g));

    let theta_next = th0 + (dt / 6.0) * (k1t + 2.0 * k2t + 2.0 * k3t + k4t);
    if theta_next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t, what: "parameter estimate".into() });
    }
    let gamma_next = ga0 + (dt / 6.0) * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
    est.gamma = project_spd(&gamma_next, est.gamma_bounds.0, est.gamma_bounds.1, t)?;
    est.theta_hat = theta_next;
    Ok(())
}
