//! Adversarial inverse reinforcement learning over the car-following MDP.
//!
//! The discriminator is `D = exp(f) / (exp(f) + pi(a|s))` with
//! `f = g(s) + gamma h(s') - h(s)`; `g` is the recovered state reward and `h`
//! a shaping potential. The generator is a Gaussian PPO policy trained on
//! `r = log D - log(1 - D)`.

mod disc;
mod grid;
mod ppo;
mod train;

pub use disc::{
    airl_reward, discriminator_logit, discriminator_output, DiscBatchStats, DiscSample,
    Discriminator,
};
pub use grid::{histogram_2d, reward_grid, reward_grid_with, GridAxis, RewardGrid};
pub use ppo::{
    compute_gae, GaussianPolicy, MeanAction, PpoAgent, PpoConfig, PpoDiagnostics, PpoSample,
    SampledAction,
};
pub use train::{
    auc, eval_episode_loss, eval_episode_loss_with, evaluate_policy, expert_transitions,
    strided_episode, train_airl, EpochRecord, EvalLossConfig, PolicyEval, RewardModel, TrainConfig,
    TrainReport,
};

use serde::{Deserialize, Serialize};

use crate::env::CFState;

/// Number of network input features: spacing, relative speed, ego speed.
pub const FEATURES: usize = 3;

/// Affine map of (dy_le, dv_le, v_e) onto roughly [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureScaler {
    pub dy_range: (f64, f64),
    pub dv_range: (f64, f64),
    pub v_range: (f64, f64),
}

impl Default for FeatureScaler {
    fn default() -> Self {
        Self {
            dy_range: (0.0, 100.0),
            dv_range: (-10.0, 10.0),
            v_range: (0.0, 40.0),
        }
    }
}

impl FeatureScaler {
    pub fn features(&self, s: &CFState) -> [f64; FEATURES] {
        let scale = |x: f64, (lo, hi): (f64, f64)| (x - lo) / (hi - lo);
        [
            scale(s.dy_le, self.dy_range),
            scale(s.dv_le, self.dv_range),
            scale(s.v_e, self.v_range),
        ]
    }
}

/// Network widths shared by every AIRL network.
pub const HIDDEN: [usize; 2] = [64, 64];

pub fn architecture() -> Vec<usize> {
    let mut w = vec![FEATURES];
    w.extend(HIDDEN);
    w.push(1);
    w
}
