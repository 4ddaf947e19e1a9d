//! The training loop: joint Adam optimization of the coefficient network and
//! the stabilizer matrix against the total loss.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::{C64, CodewordSpec, FMatrix, Logical};
use crate::error::GkpError;
use crate::loss::{self, LossWeights};
use crate::Result;

use super::adam::{adam_step, AdamState};
use super::mlp::{mlp_coefficients, MlpParams, PARAM_COUNT};
use super::objective::{build_objective, tracked, ObjectiveSpec, TOTAL_PARAMS};
use super::schedule::cosine_warm_restarts;
use super::tape::Workspace;

/// Guard on the derived-entry denominator of the stabilizer matrix.
pub const F11_FLOOR: f64 = 1e-6;

/// Free entries of the stabilizer matrix; `f22` is derived so the unit
/// determinant holds by construction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FParams {
    /// Upper-left entry.
    pub f11: C64,
    /// Upper-right entry.
    pub f12: C64,
    /// Lower-left entry.
    pub f21: C64,
}

impl FParams {
    /// Identity initialization.
    pub fn identity() -> Self {
        Self {
            f11: C64::new(1.0, 0.0),
            f12: C64::new(0.0, 0.0),
            f21: C64::new(0.0, 0.0),
        }
    }

    /// Derived lower-right entry `(1 + f12 f21) / f11`.
    pub fn f22(&self) -> C64 {
        (C64::new(1.0, 0.0) + self.f12 * self.f21) / self.f11
    }

    /// Reconstructs the full matrix, checking the `|f11|` floor.
    pub fn to_matrix(&self) -> Result<FMatrix> {
        if self.f11.norm() < F11_FLOOR {
            return Err(GkpError::InvalidConfig(format!(
                "stabilizer parametrization degenerate: |f11| = {:.3e}",
                self.f11.norm()
            )));
        }
        FMatrix::new(self.f11, self.f12, self.f21, self.f22())
    }

    fn to_flat(self) -> [f64; 6] {
        [
            self.f11.re, self.f11.im, self.f12.re, self.f12.im, self.f21.re, self.f21.im,
        ]
    }

    fn from_flat(v: &[f64]) -> Self {
        Self {
            f11: C64::new(v[0], v[1]),
            f12: C64::new(v[2], v[3]),
            f21: C64::new(v[4], v[5]),
        }
    }
}

/// Training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Peak learning rate (paper value 1e-4).
    pub learning_rate: f64,
    /// Adam first-moment decay.
    pub beta1: f64,
    /// Adam second-moment decay.
    pub beta2: f64,
    /// Adam denominator floor.
    pub eps: f64,
    /// First cosine cycle length.
    pub t0: u64,
    /// Cycle growth factor.
    pub t_mult: u64,
    /// Learning-rate floor of the schedule.
    pub eta_min: f64,
    /// Total optimization steps.
    pub steps: usize,
    /// Loss weights and grid.
    pub weights: LossWeights,
    /// Seed for the parameter initialization.
    pub seed: u64,
    /// Record the exact (unsmoothed) breakdown every this many steps.
    pub exact_history_every: usize,
}

impl TrainConfig {
    /// Paper-configuration defaults at squeezing `r`.
    pub fn defaults(r: f64) -> Self {
        Self {
            learning_rate: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t0: 500,
            t_mult: 2,
            eta_min: 1e-6,
            steps: 30_000,
            weights: LossWeights::paper_defaults(r),
            seed: 7,
            exact_history_every: 500,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(GkpError::InvalidConfig(
                "learning rate must be positive".into(),
            ));
        }
        if self.steps == 0 {
            // steps = 0 is legal only as the degenerate "return init" case
        }
        if self.t0 == 0 || self.t_mult == 0 {
            return Err(GkpError::InvalidConfig(
                "schedule cycle parameters must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One history row; smoothed components come from the tape, exact components
/// are recomputed without the modulus smoothing at checkpoint steps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HistoryRow {
    /// Optimization step.
    pub step: usize,
    /// Scheduled learning rate applied at this step.
    pub lr: f64,
    /// Smoothed total loss.
    pub l_tot: f64,
    /// Smoothed averaged KL loss.
    pub l_er_bar: f64,
    /// Hinge loss.
    pub l_eg: f64,
    /// Stabilizer loss.
    pub l_st: f64,
    /// Exact-modulus breakdown, present at checkpoint steps.
    pub exact: Option<ExactLosses>,
}

/// Exact-modulus loss components.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ExactLosses {
    /// Averaged KL loss with exact moduli.
    pub l_er_bar: f64,
    /// Hinge loss.
    pub l_eg: f64,
    /// Stabilizer loss.
    pub l_st: f64,
    /// Weighted total.
    pub l_tot: f64,
}

/// Completed training run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainOutcome {
    /// Best-seen network parameters (lowest smoothed total loss).
    pub mlp: MlpParams,
    /// Best-seen stabilizer entries.
    pub f: FParams,
    /// Step at which the best loss occurred.
    pub best_step: usize,
    /// Smoothed total loss at the best step.
    pub best_l_tot: f64,
    /// Per-step history.
    pub history: Vec<HistoryRow>,
    /// Set when the run aborted on a non-finite loss; parameters hold the
    /// last finite state.
    pub abort: Option<AbortInfo>,
    /// Whether the imaginary coefficient head was clamped.
    pub real_coefficients: bool,
    /// Grid half-width trained.
    pub m: usize,
    /// Squeezing magnitude trained.
    pub r: f64,
    /// Loss weights the run optimized against.
    pub weights: LossWeights,
}

/// Diagnostic for a non-finite-loss abort.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AbortInfo {
    /// Step producing the non-finite loss.
    pub step: usize,
    /// Last finite total loss.
    pub last_loss: f64,
}

impl TrainOutcome {
    /// Codeword pair produced by the stored parameters.
    pub fn codewords(&self) -> Result<(CodewordSpec, CodewordSpec)> {
        Ok((
            mlp_coefficients(&self.mlp, Logical::Zero, self.m, self.r, self.real_coefficients)?,
            mlp_coefficients(&self.mlp, Logical::One, self.m, self.r, self.real_coefficients)?,
        ))
    }

    /// Exact-modulus loss breakdown of the stored parameters.
    pub fn breakdown(&self) -> Result<loss::LossBreakdown> {
        let (c0, c1) = self.codewords()?;
        let f = self.f.to_matrix()?;
        loss::l_tot(&c0, &c1, &f, &self.weights)
    }
}

fn exact_breakdown(
    params: &[f64],
    m: usize,
    r: f64,
    weights: &LossWeights,
    real_coefficients: bool,
) -> Result<ExactLosses> {
    let mlp = MlpParams::from_values(params[..PARAM_COUNT].to_vec())?;
    let f = FParams::from_flat(&params[PARAM_COUNT..]);
    let c0 = mlp_coefficients(&mlp, Logical::Zero, m, r, real_coefficients)?;
    let c1 = mlp_coefficients(&mlp, Logical::One, m, r, real_coefficients)?;
    let breakdown = loss::l_tot(&c0, &c1, &f.to_matrix()?, weights)?;
    Ok(ExactLosses {
        l_er_bar: breakdown.l_er_bar,
        l_eg: breakdown.l_eg,
        l_st: breakdown.l_st,
        l_tot: breakdown.l_tot,
    })
}

fn run_training(
    config: &TrainConfig,
    m: usize,
    r: f64,
    real_coefficients: bool,
) -> Result<TrainOutcome> {
    config.validate()?;
    let spec = ObjectiveSpec {
        m,
        r,
        weights: config.weights.clone(),
        real_coefficients,
    };
    let objective = build_objective(&spec)?;
    let mut params = MlpParams::init(config.seed).values;
    params.extend_from_slice(&FParams::identity().to_flat());
    debug_assert_eq!(params.len(), TOTAL_PARAMS);

    let mut adam = AdamState::new(TOTAL_PARAMS, config.beta1, config.beta2, config.eps);
    let mut ws = Workspace::default();
    let mut grad = vec![0.0; TOTAL_PARAMS];
    let mut history = Vec::with_capacity(config.steps);
    let mut best_params = params.clone();
    let mut best_l_tot = f64::INFINITY;
    let mut best_step = 0usize;
    let mut abort = None;
    let mut last_finite = f64::INFINITY;

    for step in 0..config.steps {
        let l_tot = objective.graph.eval(&params, &mut ws);
        if !l_tot.is_finite() {
            abort = Some(AbortInfo {
                step,
                last_loss: last_finite,
            });
            break;
        }
        last_finite = l_tot;
        let comps = objective.graph.tracked_values(&ws);
        let lr = cosine_warm_restarts(
            step as u64,
            config.t0,
            config.t_mult,
            config.learning_rate,
            config.eta_min,
        );
        if l_tot < best_l_tot {
            best_l_tot = l_tot;
            best_step = step;
            best_params.copy_from_slice(&params);
        }
        let exact = if config.exact_history_every > 0
            && (step % config.exact_history_every == 0 || step + 1 == config.steps)
        {
            exact_breakdown(&params, m, r, &config.weights, real_coefficients).ok()
        } else {
            None
        };
        history.push(HistoryRow {
            step,
            lr,
            l_tot,
            l_er_bar: comps[tracked::L_ER_BAR],
            l_eg: comps[tracked::L_EG],
            l_st: comps[tracked::L_ST],
            exact,
        });
        objective.graph.backward(&mut ws, &mut grad);
        adam_step(&mut adam, &mut params, &grad, lr);
        // keep the derived-entry denominator away from zero
        let f11_norm = Complex64::new(params[PARAM_COUNT], params[PARAM_COUNT + 1]).norm();
        if f11_norm < F11_FLOOR {
            params[PARAM_COUNT] = F11_FLOOR;
            params[PARAM_COUNT + 1] = 0.0;
        }
    }

    if config.steps == 0 {
        best_params.copy_from_slice(&params);
        best_l_tot = f64::NAN;
    }

    Ok(TrainOutcome {
        mlp: MlpParams::from_values(best_params[..PARAM_COUNT].to_vec())?,
        f: FParams::from_flat(&best_params[PARAM_COUNT..]),
        best_step,
        best_l_tot,
        history,
        abort,
        real_coefficients,
        m,
        r,
        weights: config.weights.clone(),
    })
}

/// Jointly optimizes the coefficient network and the stabilizer matrix
/// against the total loss; returns the best-seen parameters. Deterministic
/// for a fixed config.
pub fn train(config: &TrainConfig, m: usize, r: f64) -> Result<TrainOutcome> {
    run_training(config, m, r, false)
}

/// Identical loop with the imaginary output head clamped to zero.
pub fn real_constrained_train(config: &TrainConfig, m: usize, r: f64) -> Result<TrainOutcome> {
    run_training(config, m, r, true)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(steps: usize) -> TrainConfig {
        let mut c = TrainConfig::defaults(1.0);
        c.steps = steps;
        c.weights.grid = crate::loss::grid_over(3, 0.005);
        c.exact_history_every = 50;
        c
    }

    #[test]
    fn zero_steps_returns_initialization() {
        let config = tiny_config(0);
        let out = train(&config, 1, 1.0).unwrap();
        assert_eq!(out.mlp, MlpParams::init(config.seed));
        assert_eq!(out.f, FParams::identity());
        assert!(out.history.is_empty());
    }

    #[test]
    fn deterministic_history() {
        let config = tiny_config(40);
        let a = train(&config, 1, 1.0).unwrap();
        let b = train(&config, 1, 1.0).unwrap();
        assert_eq!(a.history.len(), b.history.len());
        for (ra, rb) in a.history.iter().zip(&b.history) {
            assert_eq!(ra.l_tot.to_bits(), rb.l_tot.to_bits());
        }
    }

    #[test]
    fn best_seen_loss_is_non_increasing() {
        let config = tiny_config(120);
        let out = train(&config, 1, 1.0).unwrap();
        let mut running = f64::INFINITY;
        let mut mins = Vec::new();
        for row in &out.history {
            running = running.min(row.l_tot);
            mins.push(running);
        }
        assert!(mins.windows(2).all(|w| w[1] <= w[0]));
        assert!(out.best_l_tot <= out.history[0].l_tot);
    }

    #[test]
    fn loss_actually_decreases() {
        let config = tiny_config(400);
        let out = train(&config, 1, 1.0).unwrap();
        let first = out.history.first().unwrap().l_tot;
        assert!(
            out.best_l_tot < first,
            "no improvement: {} -> {}",
            first,
            out.best_l_tot
        );
    }

    #[test]
    fn f_params_determinant_by_construction() {
        let f = FParams {
            f11: C64::new(1.03, -0.02),
            f12: C64::new(0.05, 0.11),
            f21: C64::new(-0.01, 0.02),
        };
        let m = f.to_matrix().unwrap();
        let det = m.f11 * m.f22 - m.f12 * m.f21;
        assert!((det - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn nan_abort_records_last_finite_state() {
        let mut config = tiny_config(60);
        config.learning_rate = 1e14; // drives tanh saturation then overflow
        let out = train(&config, 1, 1.0).unwrap();
        if let Some(abort) = out.abort {
            assert!(abort.last_loss.is_finite());
            assert!(abort.step > 0);
        }
        // whether or not it aborted, returned parameters must be finite
        assert!(out.mlp.values.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn real_constrained_emits_real_coefficients() {
        let config = tiny_config(30);
        let out = real_constrained_train(&config, 1, 1.0).unwrap();
        let (c0, c1) = out.codewords().unwrap();
        for c in c0.coeffs().iter().chain(c1.coeffs()) {
            assert_eq!(c.im, 0.0);
        }
    }
}
