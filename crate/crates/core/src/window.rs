//! Finite-window integral data for the parameter estimator.
//!
//! Over a sliding window `[t - T, t]` the state difference of agent two
//! satisfies
//!
//! `x(t) - x(t - T) = F + theta^T S + D`,
//!
//! where `F`, `S`, `D` integrate the nominal drift, the features, and the
//! disturbance along the trajectory. The estimator consumes the observable
//! quadruple `(X, F, S, D_hat)` whose disturbance integral uses the
//! observer's estimate; the gap `D - D_hat` shrinks with the observer error,
//! so records taken later are cleaner.
//!
//! Samples arrive on the integration grid. The integrals are composite
//! quadrature sums maintained incrementally (with periodic recomputation to
//! keep accumulated rounding bounded), so each query costs O(1) regardless
//! of window length.

use std::collections::VecDeque;

use nalgebra::DVector;

use crate::error::Error;

/// Composite quadrature rule used for the window integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    /// Second order; error per window O(dt^2 T).
    Trapezoid,
    /// Fourth order; error per window O(dt^4 T). Falls back to a 3/8 block
    /// on the last three panels when the window has an odd panel count.
    Simpson,
}

/// Window integral quadruple at one grid time.
#[derive(Debug, Clone)]
pub struct WindowPoint {
    /// State difference `x(t) - x(t - T)`.
    pub x_diff: DVector<f64>,
    /// Integral of the nominal drift over the window.
    pub f_int: DVector<f64>,
    /// Integral of the feature vector over the window.
    pub s_int: DVector<f64>,
    /// Integral of the estimated disturbance over the window.
    pub d_hat_int: DVector<f64>,
}

impl WindowPoint {
    fn zeros(state_dim: usize, feature_dim: usize) -> Self {
        WindowPoint {
            x_diff: DVector::zeros(state_dim),
            f_int: DVector::zeros(state_dim),
            s_int: DVector::zeros(feature_dim),
            d_hat_int: DVector::zeros(state_dim),
        }
    }
}

struct Sample {
    t: f64,
    x: DVector<f64>,
    /// Stacked integrand `[f_nominal; sigma; d_hat]`.
    g: DVector<f64>,
}

/// Recompute the incremental parity totals from scratch every this many
/// pushes; bounds accumulated floating-point drift without per-step cost.
const REBASE_INTERVAL: u64 = 4096;

/// Sliding buffer of trajectory samples with O(1) window integrals.
pub struct WindowBuffers {
    window_len: f64,
    dt: f64,
    /// Number of dt panels spanning the window.
    panels: usize,
    state_dim: usize,
    feature_dim: usize,
    quadrature: Quadrature,
    samples: VecDeque<Sample>,
    /// Global index of `samples[0]`; samples are dense in index.
    front_index: u64,
    /// Total samples pushed; the newest sample has index `pushed - 1`.
    pushed: u64,
    /// Sum of `g` over buffered samples with even global index.
    even_total: DVector<f64>,
    /// Same for odd global index.
    odd_total: DVector<f64>,
}

impl WindowBuffers {
    /// `window_len` must be a positive integer multiple of `dt`.
    pub fn new(
        window_len: f64,
        dt: f64,
        state_dim: usize,
        feature_dim: usize,
        quadrature: Quadrature,
    ) -> Result<Self, Error> {
        if !(dt > 0.0) || !(window_len > 0.0) || !dt.is_finite() || !window_len.is_finite() {
            return Err(Error::config("window length and dt must be positive and finite"));
        }
        let ratio = window_len / dt;
        let panels = ratio.round();
        if panels < 1.0 || (ratio - panels).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::config(format!(
                "window length {window_len} is not an integer multiple of dt {dt}"
            )));
        }
        let panels = panels as usize;
        let g_len = 2 * state_dim + feature_dim;
        Ok(WindowBuffers {
            window_len,
            dt,
            panels,
            state_dim,
            feature_dim,
            quadrature,
            samples: VecDeque::with_capacity(panels + 2),
            front_index: 0,
            pushed: 0,
            even_total: DVector::zeros(g_len),
            odd_total: DVector::zeros(g_len),
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Time of the first sample ever pushed, once one exists.
    pub fn start_time(&self) -> Option<f64> {
        if self.pushed == 0 {
            None
        } else {
            Some(self.samples.front().map(|s| s.t).unwrap_or(0.0) - self.dt * (self.front_index as f64))
        }
    }

    /// Whether a full window ending at the newest sample is available.
    pub fn is_ready(&self) -> bool {
        self.pushed > self.panels as u64
    }

    /// Appends one trajectory sample taken at time `t`.
    pub fn push_sample(
        &mut self,
        t: f64,
        x: &DVector<f64>,
        f_nominal: &DVector<f64>,
        sigma: &DVector<f64>,
        d_hat: &DVector<f64>,
    ) -> Result<(), Error> {
        if x.len() != self.state_dim
            || f_nominal.len() != self.state_dim
            || d_hat.len() != self.state_dim
            || sigma.len() != self.feature_dim
        {
            return Err(Error::config("window sample dimensions do not match buffer"));
        }
        if !t.is_finite()
            || x.iter().any(|v| !v.is_finite())
            || f_nominal.iter().any(|v| !v.is_finite())
            || sigma.iter().any(|v| !v.is_finite())
            || d_hat.iter().any(|v| !v.is_finite())
        {
            return Err(Error::NonFiniteSample { t });
        }
        if let Some(last) = self.samples.back() {
            if t <= last.t {
                return Err(Error::OutOfOrderSample { t, last: last.t });
            }
            if ((t - last.t) - self.dt).abs() > 1e-9 * self.dt.max(1.0) {
                return Err(Error::config(format!(
                    "window sample at t = {t} is off the dt grid (previous {}, dt {})",
                    last.t, self.dt
                )));
            }
        }
        let mut g = DVector::zeros(2 * self.state_dim + self.feature_dim);
        g.rows_mut(0, self.state_dim).copy_from(f_nominal);
        g.rows_mut(self.state_dim, self.feature_dim).copy_from(sigma);
        g.rows_mut(self.state_dim + self.feature_dim, self.state_dim).copy_from(d_hat);

        let index = self.pushed;
        if index % 2 == 0 {
            self.even_total += &g;
        } else {
            self.odd_total += &g;
        }
        self.samples.push_back(Sample { t, x: x.clone(), g });
        self.pushed += 1;

        // Keep exactly one sample older than the window start.
        let newest = self.pushed - 1;
        let keep_from = newest.saturating_sub(self.panels as u64 + 1);
        while self.front_index < keep_from {
            let old = self.samples.pop_front().expect("front tracked by index");
            if self.front_index % 2 == 0 {
                self.even_total -= &old.g;
            } else {
                self.odd_total -= &old.g;
            }
            self.front_index += 1;
        }
        if self.pushed % REBASE_INTERVAL == 0 {
            self.rebase();
        }
        Ok(())
    }

    fn rebase(&mut self) {
        self.even_total.fill(0.0);
        self.odd_total.fill(0.0);
        for (i, s) in self.samples.iter().enumerate() {
            if (self.front_index + i as u64) % 2 == 0 {
                self.even_total += &s.g;
            } else {
                self.odd_total += &s.g;
            }
        }
    }

    /// Window integrals ending at the newest sample, which must be at `t`.
    ///
    /// Before one full window of samples exists (`t < t0 + T`) the quadruple
    /// is all zeros. Afterwards the buffer must cover `[t - T, t]`.
    pub fn window_point(&self, t: f64) -> Result<WindowPoint, Error> {
        let newest = self
            .samples
            .back()
            .ok_or(Error::WindowNotReady { from: t - self.window_len, to: t })?;
        if (t - newest.t).abs() > 1e-6 * self.dt {
            return Err(Error::WindowNotReady { from: t - self.window_len, to: t });
        }
        if !self.is_ready() {
            return Ok(WindowPoint::zeros(self.state_dim, self.feature_dim));
        }
        let newest_index = self.pushed - 1;
        let start_global = newest_index - self.panels as u64;
        if start_global < self.front_index {
            return Err(Error::WindowNotReady { from: t - self.window_len, to: t });
        }
        let start = (start_global - self.front_index) as usize;
        let end = self.samples.len() - 1;
        let first = &self.samples[start];
        debug_assert!((first.t - (t - self.window_len)).abs() < 0.5 * self.dt);

        // Parity sums restricted to the window: drop buffered samples that
        // precede it (at most one by the eviction rule).
        let mut even_in = self.even_total.clone();
        let mut odd_in = self.odd_total.clone();
        for i in 0..start {
            let s = &self.samples[i];
            if (self.front_index + i as u64) % 2 == 0 {
                even_in -= &s.g;
            } else {
                odd_in -= &s.g;
            }
        }
        let g0 = &first.g;
        let gk = &newest.g;
        let stacked = match self.quadrature {
            Quadrature::Trapezoid => {
                let all = &even_in + &odd_in;
                self.dt * (all - 0.5 * (g0 + gk))
            }
            Quadrature::Simpson => {
                if self.panels % 2 == 0 {
                    // Positions are counted from the window start; a sample's
                    // position parity is its global parity xor the start's.
                    let (pos_even, pos_odd) = if start_global % 2 == 0 {
                        (even_in, odd_in)
                    } else {
                        (odd_in, even_in)
                    };
                    let interior_even = pos_even - g0 - gk;
                    (self.dt / 3.0) * (g0 + gk + 4.0 * pos_odd + 2.0 * interior_even)
                } else {
                    self.simpson_odd_panels(start, end)
                }
            }
        };
        let n = self.state_dim;
        let p = self.feature_dim;
        Ok(WindowPoint {
            x_diff: &newest.x - &first.x,
            f_int: DVector::from(stacked.rows(0, n)),
            s_int: DVector::from(stacked.rows(n, p)),
            d_hat_int: DVector::from(stacked.rows(n + p, n)),
        })
    }

    /// Simpson with a trailing 3/8 block for odd panel counts. Windows this
    /// small only occur in tests and hand-set configurations, so the direct
    /// O(window) sum is fine.
    fn simpson_odd_panels(&self, start: usize, end: usize) -> DVector<f64> {
        let g = |i: usize| &self.samples[i].g;
        let k = end - start;
        let mut acc = DVector::zeros(2 * self.state_dim + self.feature_dim);
        if k == 1 {
            return self.dt * 0.5 * (g(start) + g(end));
        }
        if k == 3 {
            return (3.0 * self.dt / 8.0) * (g(start) + 3.0 * g(start + 1) + 3.0 * g(start + 2) + g(end));
        }
        let simpson_end = end - 3;
        acc += g(start) + g(simpson_end);
        for (offset, i) in (start + 1..simpson_end).enumerate() {
            acc += if offset % 2 == 0 { 4.0 * g(i) } else { 2.0 * g(i) };
        }
        acc *= self.dt / 3.0;
        acc += (3.0 * self.dt / 8.0) * (g(simpson_end) + 3.0 * g(simpson_end + 1) + 3.0 * g(simpson_end + 2) + g(end));
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn push_scalar(w: &mut WindowBuffers, t: f64, x: f64, f: f64, s: &[f64], d: f64) {
        w.push_sample(
            t,
            &DVector::from_vec(vec![x]),
            &DVector::from_vec(vec![f]),
            &DVector::from_vec(s.to_vec()),
            &DVector::from_vec(vec![d]),
        )
        .unwrap();
    }

    #[test]
    fn first_push_fills_one_slot() {
        let mut w = WindowBuffers::new(1.2, 0.1, 1, 0, Quadrature::Trapezoid).unwrap();
        push_scalar(&mut w, 0.0, 1.0, 0.0, &[], 0.0);
        assert_eq!(w.len(), 1);
        assert!(!w.is_ready());
    }

    #[test]
    fn warmup_returns_zeros() {
        let mut w = WindowBuffers::new(1.2, 0.1, 1, 2, Quadrature::Trapezoid).unwrap();
        for i in 0..=5 {
            let t = i as f64 * 0.1;
            push_scalar(&mut w, t, t, 1.0, &[1.0, 2.0], 0.5);
        }
        let p = w.window_point(0.5).unwrap();
        assert_eq!(p.x_diff[0], 0.0);
        assert_eq!(p.f_int[0], 0.0);
        assert_eq!(p.s_int, DVector::zeros(2));
        assert_eq!(p.d_hat_int[0], 0.0);
    }

    #[test]
    fn constant_features_integrate_exactly() {
        for quad in [Quadrature::Trapezoid, Quadrature::Simpson] {
            let dt = 0.001;
            let mut w = WindowBuffers::new(1.2, dt, 1, 3, quad).unwrap();
            let mut t = 0.0;
            for i in 0..=1300 {
                t = i as f64 * dt;
                push_scalar(&mut w, t, 0.0, 0.0, &[1.0, 2.0, 3.0], 0.0);
            }
            let p = w.window_point(t).unwrap();
            assert_abs_diff_eq!(p.s_int[0], 1.2, epsilon = 1e-12);
            assert_abs_diff_eq!(p.s_int[1], 2.4, epsilon = 1e-12);
            assert_abs_diff_eq!(p.s_int[2], 3.6, epsilon = 1e-12);
        }
    }

    #[test]
    fn linear_drift_integrates_exactly() {
        // Integrand gamma over [0, 1.2]: integral 0.72, and both rules are
        // exact on linear integrands.
        for quad in [Quadrature::Trapezoid, Quadrature::Simpson] {
            let dt = 0.01;
            let mut w = WindowBuffers::new(1.2, dt, 1, 0, quad).unwrap();
            let mut t = 0.0;
            for i in 0..=120 {
                t = i as f64 * dt;
                push_scalar(&mut w, t, 0.0, t, &[], 0.0);
            }
            let p = w.window_point(t).unwrap();
            assert_abs_diff_eq!(p.f_int[0], 0.72, epsilon = 1e-12);
        }
    }

    #[test]
    fn state_difference_reads_window_endpoints() {
        let dt = 0.1;
        let mut w = WindowBuffers::new(1.0, dt, 1, 0, Quadrature::Trapezoid).unwrap();
        let mut t = 0.0;
        for i in 0..=25 {
            t = i as f64 * dt;
            push_scalar(&mut w, t, t * t, 0.0, &[], 0.0);
        }
        let p = w.window_point(t).unwrap();
        // x(2.5) - x(1.5) with x = t^2.
        assert_abs_diff_eq!(p.x_diff[0], 2.5 * 2.5 - 1.5 * 1.5, epsilon = 1e-12);
    }

    #[test]
    fn eviction_keeps_buffer_near_window_size() {
        let dt = 0.1;
        let panels = (1.2_f64 / dt).round() as usize;
        let mut w = WindowBuffers::new(1.2, dt, 1, 0, Quadrature::Trapezoid).unwrap();
        for i in 0..=(2.4_f64 / dt).round() as usize {
            push_scalar(&mut w, i as f64 * dt, 0.0, 1.0, &[], 0.0);
        }
        // Steady state: the panels + 1 samples spanning the window plus one
        // retained older sample.
        assert_eq!(w.len(), panels + 2, "len {}", w.len());
    }

    #[test]
    fn rejects_out_of_order_and_off_grid_and_non_finite() {
        let mut w = WindowBuffers::new(1.0, 0.1, 1, 0, Quadrature::Trapezoid).unwrap();
        push_scalar(&mut w, 0.0, 0.0, 0.0, &[], 0.0);
        let x = DVector::from_vec(vec![0.0]);
        let z = DVector::zeros(1);
        let e = DVector::zeros(0);
        assert!(matches!(
            w.push_sample(0.0, &x, &z, &e, &z),
            Err(Error::OutOfOrderSample { .. })
        ));
        assert!(matches!(w.push_sample(0.15, &x, &z, &e, &z), Err(Error::Config(_))));
        let bad = DVector::from_vec(vec![f64::INFINITY]);
        assert!(matches!(
            w.push_sample(0.1, &bad, &z, &e, &z),
            Err(Error::NonFiniteSample { .. })
        ));
    }

    #[test]
    fn query_off_the_newest_sample_is_not_ready() {
        let mut w = WindowBuffers::new(0.2, 0.1, 1, 0, Quadrature::Trapezoid).unwrap();
        for i in 0..=4 {
            push_scalar(&mut w, i as f64 * 0.1, 0.0, 0.0, &[], 0.0);
        }
        assert!(matches!(w.window_point(0.7), Err(Error::WindowNotReady { .. })));
    }

    /// The incremental parity totals must agree with a from-scratch
    /// quadrature after many pushes, evictions, and rebases.
    #[test]
    fn incremental_sums_match_direct_quadrature() {
        for quad in [Quadrature::Trapezoid, Quadrature::Simpson] {
            let dt = 0.001;
            let panels = 500usize;
            let mut w = WindowBuffers::new(panels as f64 * dt, dt, 1, 1, quad).unwrap();
            // Deterministic wiggly data; enough pushes to cross two rebases.
            let f = |t: f64| (3.1 * t).sin() + 0.3 * (17.0 * t).cos();
            let s = |t: f64| (2.3 * t).cos() * (1.0 + 0.1 * t);
            let total = 2 * REBASE_INTERVAL as usize + 777;
            let mut t = 0.0;
            for i in 0..total {
                t = i as f64 * dt;
                push_scalar(&mut w, t, 0.0, f(t), &[s(t)], 0.0);
            }
            let p = w.window_point(t).unwrap();
            let direct = |g: &dyn Fn(f64) -> f64| -> f64 {
                let a = t - panels as f64 * dt;
                match quad {
                    Quadrature::Trapezoid => {
                        let mut acc = 0.5 * (g(a) + g(t));
                        for j in 1..panels {
                            acc += g(a + j as f64 * dt);
                        }
                        acc * dt
                    }
                    Quadrature::Simpson => {
                        let mut acc = g(a) + g(t);
                        for j in 1..panels {
                            acc += if j % 2 == 1 { 4.0 * g(a + j as f64 * dt) } else { 2.0 * g(a + j as f64 * dt) };
                        }
                        acc * dt / 3.0
                    }
                }
            };
            assert_abs_diff_eq!(p.f_int[0], direct(&f), epsilon = 1e-12);
            assert_abs_diff_eq!(p.s_int[0], direct(&s), epsilon = 1e-12);
        }
    }

    /// Feeding samples from a smooth closed-form trajectory must satisfy the
    /// window identity X = F + theta^T S + D up to the quadrature bound.
    #[test]
    fn window_identity_holds_up_to_quadrature_error() {
        // Scalar path x(t) = sin(0.5 t); declare f = 0.2 x, one feature
        // sigma = u with u(t) = cos(0.7 t), theta = 1.5, and let the
        // "disturbance" absorb the remainder d = x' - f - theta sigma.
        let theta = 1.5;
        let x_of = |t: f64| (0.5 * t).sin();
        let xdot_of = |t: f64| 0.5 * (0.5 * t).cos();
        let u_of = |t: f64| (0.7 * t).cos();
        let f_of = |t: f64| 0.2 * x_of(t);
        let d_of = |t: f64| xdot_of(t) - f_of(t) - theta * u_of(t);
        let dt = 0.002;
        let window = 1.2;
        for (quad, bound) in [
            // dt^2 T / 12 * max|g''| with max|g''| here well under 2.
            (Quadrature::Trapezoid, 2.0 * dt * dt * window / 12.0),
            (Quadrature::Simpson, 1e-10),
        ] {
            let mut w = WindowBuffers::new(window, dt, 1, 1, quad).unwrap();
            let mut worst: f64 = 0.0;
            for i in 0..=2000 {
                let t = i as f64 * dt;
                push_scalar(&mut w, t, x_of(t), f_of(t), &[u_of(t)], d_of(t));
                if w.is_ready() {
                    let p = w.window_point(t).unwrap();
                    let residual = p.x_diff[0] - p.f_int[0] - theta * p.s_int[0] - p.d_hat_int[0];
                    worst = worst.max(residual.abs());
                }
            }
            assert!(worst < bound, "residual {worst} exceeds bound {bound} for {quad:?}");
        }
    }
}
