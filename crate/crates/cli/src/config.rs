//! Flat key-value scenario configuration.
//!
//! The file format is `key = value` with `#` comments; vectors are
//! comma-separated, matrices row-major. Unknown and duplicate keys are
//! rejected so that a typo cannot silently fall back to a default.

use std::collections::HashSet;

use oirl_core::observer::XdotMode;
use oirl_core::window::Quadrature;
use oirl_core::Error;

/// Complete description of one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Integration step, seconds.
    pub dt: f64,
    /// Simulation horizon, seconds.
    pub t_final: f64,
    /// Sliding integration window length, seconds.
    pub window_t: f64,
    /// Capacity of the drift-parameter history stacks.
    pub pe_capacity: usize,
    /// Capacity of the reward-weight history stacks.
    pub irl_capacity: usize,
    /// Reward-weight estimator learning rate.
    pub alpha: f64,
    /// Drift-parameter estimator learning rate.
    pub alpha_theta: f64,
    /// Reward-weight gain forgetting factor.
    pub beta: f64,
    /// Drift-parameter gain forgetting factor.
    pub beta_theta: f64,
    /// Relative improvement a record must bring to displace a stack slot.
    pub psi: f64,
    /// Minimum spacing between stack purges, seconds.
    pub dwell_time: f64,
    /// Excitation floor that ungates the drift-parameter estimator.
    pub c_lower: f64,
    /// Excitation floor that gates each reward-weight update.
    pub sigma_lower: f64,
    /// Lower gain eigenvalue clamp (both estimators).
    pub gamma_lower: f64,
    /// Upper gain eigenvalue clamp (both estimators).
    pub gamma_upper: f64,
    /// Agent one initial state.
    pub x1_0: Vec<f64>,
    /// Agent two initial state.
    pub x2_0: Vec<f64>,
    /// Exogenous initial state.
    pub zeta_0: Vec<f64>,
    /// Observer initial estimate of the exogenous state.
    pub zeta_hat_0: Vec<f64>,
    /// Initial drift-parameter estimate, row-major 3x2.
    pub theta_hat_0: Vec<f64>,
    /// Initial stacked weight estimate, length 5.
    pub w_hat_0: Vec<f64>,
    /// Exogenous state matrix, row-major square.
    pub exo_a: Vec<f64>,
    /// Disturbance output matrix, row-major 2 x exo dimension.
    pub exo_c: Vec<f64>,
    /// Observer injection gain, row-major exo dimension x 2.
    pub observer_k: Vec<f64>,
    /// Where the observer's state-derivative input comes from.
    pub observer_xdot: XdotMode,
    /// Quadrature rule for the window integrals.
    pub quadrature: Quadrature,
    /// State norm beyond which the run aborts as diverged.
    pub blowup_bound: f64,
    /// Relative estimate-staleness improvement required to purge the
    /// reward-weight stack.
    pub irl_purge_improvement: f64,
    /// Agent one stabilizing feedback gain.
    pub u1_gain: f64,
    /// Seed for randomized probing in the acceptance checks.
    pub seed: u64,
    /// Output directory for CSV and summary files.
    pub out_dir: String,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            dt: 5e-4,
            t_final: 100.0,
            window_t: 1.2,
            pe_capacity: 150,
            irl_capacity: 100,
            alpha: 0.01,
            alpha_theta: 0.01,
            beta: 0.5,
            beta_theta: 0.5,
            psi: 0.01,
            dwell_time: 5.0,
            c_lower: 1e-3,
            sigma_lower: 1e-3,
            gamma_lower: 1e-4,
            gamma_upper: 1e4,
            x1_0: vec![1.0, -1.0],
            x2_0: vec![1.0, -1.0],
            zeta_0: vec![0.0, 1.0],
            zeta_hat_0: vec![0.0, 0.0],
            theta_hat_0: vec![0.0; 6],
            w_hat_0: vec![0.0; 5],
            exo_a: vec![0.0, 1.0, -1.0, 0.0],
            exo_c: vec![0.0, 0.0, 1.0, 0.0],
            observer_k: vec![1.0, 0.5, 0.0, 5.0],
            observer_xdot: XdotMode::Exact,
            quadrature: Quadrature::Simpson,
            blowup_bound: 1e6,
            irl_purge_improvement: 0.1,
            u1_gain: 2.0,
            seed: 0,
            out_dir: "out".into(),
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, Error> {
    v.parse::<f64>()
        .map_err(|_| Error::config(format!("key '{key}': '{v}' is not a number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, Error> {
    v.parse::<usize>()
        .map_err(|_| Error::config(format!("key '{key}': '{v}' is not a non-negative integer")))
}

fn parse_vec(key: &str, v: &str) -> Result<Vec<f64>, Error> {
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::config(format!("key '{key}': '{}' is not a number", s.trim())))
        })
        .collect()
}

/// Parses configuration text; keys omitted keep their defaults.
pub fn parse_config(text: &str) -> Result<ScenarioConfig, Error> {
    let mut cfg = ScenarioConfig::default();
    let mut seen: HashSet<String> = HashSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected 'key = value'", lineno + 1)))?;
        let key = key.trim();
        let value = value.trim();
        if !seen.insert(key.to_string()) {
            return Err(Error::config(format!("line {}: duplicate key '{key}'", lineno + 1)));
        }
        match key {
            "dt" => cfg.dt = parse_f64(key, value)?,
            "t_final" => cfg.t_final = parse_f64(key, value)?,
            "window_t" => cfg.window_t = parse_f64(key, value)?,
            "pe_capacity" => cfg.pe_capacity = parse_usize(key, value)?,
            "irl_capacity" => cfg.irl_capacity = parse_usize(key, value)?,
            "alpha" => cfg.alpha = parse_f64(key, value)?,
            "alpha_theta" => cfg.alpha_theta = parse_f64(key, value)?,
            "beta" => cfg.beta = parse_f64(key, value)?,
            "beta_theta" => cfg.beta_theta = parse_f64(key, value)?,
            "psi" => cfg.psi = parse_f64(key, value)?,
            "dwell_time" => cfg.dwell_time = parse_f64(key, value)?,
            "c_lower" => cfg.c_lower = parse_f64(key, value)?,
            "sigma_lower" => cfg.sigma_lower = parse_f64(key, value)?,
            "gamma_lower" => cfg.gamma_lower = parse_f64(key, value)?,
            "gamma_upper" => cfg.gamma_upper = parse_f64(key, value)?,
            "x1_0" => cfg.x1_0 = parse_vec(key, value)?,
            "x2_0" => cfg.x2_0 = parse_vec(key, value)?,
            "zeta_0" => cfg.zeta_0 = parse_vec(key, value)?,
            "zeta_hat_0" => cfg.zeta_hat_0 = parse_vec(key, value)?,
            "theta_hat_0" => cfg.theta_hat_0 = parse_vec(key, value)?,
            "w_hat_0" => cfg.w_hat_0 = parse_vec(key, value)?,
            "exo_a" => cfg.exo_a = parse_vec(key, value)?,
            "exo_c" => cfg.exo_c = parse_vec(key, value)?,
            "observer_k" => cfg.observer_k = parse_vec(key, value)?,
            "observer_xdot" => {
                cfg.observer_xdot = match value {
                    "exact" => XdotMode::Exact,
                    "finite-difference" => XdotMode::FiniteDifference,
                    other => {
                        return Err(Error::config(format!(
                            "key 'observer_xdot': '{other}' is not 'exact' or 'finite-difference'"
                        )))
                    }
                }
            }
            "quadrature" => {
                cfg.quadrature = match value {
                    "trapezoid" => Quadrature::Trapezoid,
                    "simpson" => Quadrature::Simpson,
                    other => {
                        return Err(Error::config(format!(
                            "key 'quadrature': '{other}' is not 'trapezoid' or 'simpson'"
                        )))
                    }
                }
            }
            "blowup_bound" => cfg.blowup_bound = parse_f64(key, value)?,
            "irl_purge_improvement" => cfg.irl_purge_improvement = parse_f64(key, value)?,
            "u1_gain" => cfg.u1_gain = parse_f64(key, value)?,
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::config(format!("key 'seed': '{value}' is not an unsigned integer")))?
            }
            "out_dir" => cfg.out_dir = value.to_string(),
            other => return Err(Error::config(format!("line {}: unknown key '{other}'", lineno + 1))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

impl ScenarioConfig {
    /// Exogenous dimension implied by the (square) state matrix.
    pub fn exo_dim(&self) -> Result<usize, Error> {
        let n = (self.exo_a.len() as f64).sqrt().round() as usize;
        if n * n != self.exo_a.len() || n == 0 {
            return Err(Error::config("exo_a must be a non-empty square matrix, row-major"));
        }
        Ok(n)
    }

    pub fn validate(&self) -> Result<(), Error> {
        let pos = |name: &str, v: f64| -> Result<(), Error> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be positive and finite, got {v}")))
            }
        };
        pos("dt", self.dt)?;
        pos("t_final", self.t_final)?;
        pos("window_t", self.window_t)?;
        pos("alpha", self.alpha)?;
        pos("alpha_theta", self.alpha_theta)?;
        pos("beta", self.beta)?;
        pos("beta_theta", self.beta_theta)?;
        pos("psi", self.psi)?;
        pos("dwell_time", self.dwell_time)?;
        pos("c_lower", self.c_lower)?;
        pos("sigma_lower", self.sigma_lower)?;
        pos("gamma_lower", self.gamma_lower)?;
        pos("gamma_upper", self.gamma_upper)?;
        pos("blowup_bound", self.blowup_bound)?;
        pos("u1_gain", self.u1_gain)?;
        if self.gamma_upper < self.gamma_lower {
            return Err(Error::config("gamma_upper must be at least gamma_lower"));
        }
        if self.pe_capacity == 0 || self.irl_capacity == 0 {
            return Err(Error::config("stack capacities must be at least 1"));
        }
        let ratio = self.window_t / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::config(format!(
                "dt = {} must divide window_t = {} within 1e-9",
                self.dt, self.window_t
            )));
        }
        if self.t_final <= self.window_t {
            return Err(Error::config("t_final must exceed the window length"));
        }
        if !(0.0..1.0).contains(&self.irl_purge_improvement) {
            return Err(Error::config("irl_purge_improvement must lie in [0, 1)"));
        }
        let nz = self.exo_dim()?;
        let need = |name: &str, len: usize, want: usize| -> Result<(), Error> {
            if len == want {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must have {want} entries, got {len}")))
            }
        };
        need("x1_0", self.x1_0.len(), 2)?;
        need("x2_0", self.x2_0.len(), 2)?;
        need("zeta_0", self.zeta_0.len(), nz)?;
        need("zeta_hat_0", self.zeta_hat_0.len(), nz)?;
        need("theta_hat_0", self.theta_hat_0.len(), 6)?;
        need("w_hat_0", self.w_hat_0.len(), 5)?;
        need("exo_c", self.exo_c.len(), 2 * nz)?;
        need("observer_k", self.observer_k.len(), nz * 2)?;
        let all_finite = self
            .x1_0
            .iter()
            .chain(&self.x2_0)
            .chain(&self.zeta_0)
            .chain(&self.zeta_hat_0)
            .chain(&self.theta_hat_0)
            .chain(&self.w_hat_0)
            .chain(&self.exo_a)
            .chain(&self.exo_c)
            .chain(&self.observer_k)
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::config("configuration vectors must be finite"));
        }
        Ok(())
    }

    /// Renders the configuration as parseable text with explanatory comments.
    pub fn dump(&self) -> String {
        let vec = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let xdot = match self.observer_xdot {
            XdotMode::Exact => "exact",
            XdotMode::FiniteDifference => "finite-difference",
        };
        let quad = match self.quadrature {
            Quadrature::Trapezoid => "trapezoid",
            Quadrature::Simpson => "simpson",
        };
        format!(
            "\
# Scenario configuration. Lines are 'key = value'; '#' starts a comment.
# Vectors are comma-separated, matrices row-major.

# Time grid
dt = {dt}
t_final = {t_final}
window_t = {window_t}            # sliding integration window, seconds

# History stacks
pe_capacity = {pe}               # drift-parameter stack size
irl_capacity = {irl}             # reward-weight stack size
psi = {psi}                      # relative gain a record needs to displace a slot
dwell_time = {dwell}             # minimum seconds between purges

# Estimator gains
alpha = {alpha}
alpha_theta = {alpha_theta}
beta = {beta}
beta_theta = {beta_theta}
c_lower = {c_lower}              # excitation floor ungating the parameter estimator
sigma_lower = {sigma_lower}      # excitation floor gating each weight update
gamma_lower = {gamma_lower}      # gain eigenvalue clamp
gamma_upper = {gamma_upper}

# Initial conditions
x1_0 = {x1}
x2_0 = {x2}
zeta_0 = {z0}
zeta_hat_0 = {zh0}
theta_hat_0 = {th0}              # row-major 3x2
w_hat_0 = {w0}

# Disturbance generator and observer
exo_a = {ea}                     # row-major square
exo_c = {ec}                     # row-major 2 x exo dim
observer_k = {ok}                # row-major exo dim x 2
observer_xdot = {xdot}           # exact | finite-difference

# Numerics
quadrature = {quad}              # trapezoid | simpson
blowup_bound = {blowup}
irl_purge_improvement = {ipi}    # staleness gain required to purge the weight stack
u1_gain = {u1g}                  # agent one feedback gain

# Misc
seed = {seed}
out_dir = {out}
",
            dt = self.dt,
            t_final = self.t_final,
            window_t = self.window_t,
            pe = self.pe_capacity,
            irl = self.irl_capacity,
            psi = self.psi,
            dwell = self.dwell_time,
            alpha = self.alpha,
            alpha_theta = self.alpha_theta,
            beta = self.beta,
            beta_theta = self.beta_theta,
            c_lower = self.c_lower,
            sigma_lower = self.sigma_lower,
            gamma_lower = self.gamma_lower,
            gamma_upper = self.gamma_upper,
            x1 = vec(&self.x1_0),
            x2 = vec(&self.x2_0),
            z0 = vec(&self.zeta_0),
            zh0 = vec(&self.zeta_hat_0),
            th0 = vec(&self.theta_hat_0),
            w0 = vec(&self.w_hat_0),
            ea = vec(&self.exo_a),
            ec = vec(&self.exo_c),
            ok = vec(&self.observer_k),
            xdot = xdot,
            quad = quad,
            blowup = self.blowup_bound,
            ipi = self.irl_purge_improvement,
            u1g = self.u1_gain,
            seed = self.seed,
            out = self.out_dir,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trips_to_the_same_config() {
        let cfg = ScenarioConfig::default();
        let parsed = parse_config(&cfg.dump()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn empty_text_gives_defaults() {
        let parsed = parse_config("# nothing but a comment\n\n").unwrap();
        assert_eq!(parsed, ScenarioConfig::default());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config("dtt = 0.001\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let err = parse_config("dt = 0.001\ndt = 0.002\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn off_grid_window_is_rejected() {
        let err = parse_config("dt = 0.0007\n").unwrap_err();
        assert!(err.to_string().contains("divide"), "{err}");
    }

    #[test]
    fn horizon_shorter_than_window_is_rejected() {
        let err = parse_config("t_final = 1.0\n").unwrap_err();
        assert!(err.to_string().contains("t_final"), "{err}");
    }

    #[test]
    fn nonpositive_gain_is_rejected() {
        let err = parse_config("beta = 0\n").unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn malformed_vector_entry_is_rejected() {
        let err = parse_config("x1_0 = 1.0, oops\n").unwrap_err();
        assert!(err.to_string().contains("not a number"), "{err}");
    }

    #[test]
    fn comments_and_spacing_are_tolerated() {
        let parsed = parse_config("  dt =   0.0006   # fine grid\nwindow_t = 1.2\n").unwrap();
        assert_eq!(parsed.dt, 0.0006);
    }
}
