use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{architecture, FeatureScaler};
use crate::env::{CFState, Policy};
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, AdamState, Mlp};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip: f64,
    pub steps_per_epoch: usize,
    pub ppo_epochs: usize,
    pub minibatch: usize,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub init_log_std: f64,
    pub log_std_bounds: (f64, f64),
    /// Acceleration bounds (m/s^2) of the squashed policy mean and the env.
    pub action_bounds: (f64, f64),
    pub entropy_coef: f64,
    /// Global gradient-norm clip per minibatch; 0 disables.
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            gae_lambda: 0.95,
            clip: 0.2,
            steps_per_epoch: 2048,
            ppo_epochs: 10,
            minibatch: 256,
            policy_lr: 3e-4,
            value_lr: 1e-3,
            init_log_std: -1.5,
            log_std_bounds: (-4.0, -1.5),
            action_bounds: (-6.0, 4.0),
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("ppo clip must lie in (0, 1)");
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gamma must lie in (0, 1] and gae_lambda in [0, 1]");
        }
        if self.steps_per_epoch == 0 || self.minibatch == 0 {
            return bad("steps_per_epoch and minibatch must be positive");
        }
        if !(self.action_bounds.0 < self.action_bounds.1)
            || !(self.log_std_bounds.0 < self.log_std_bounds.1)
        {
            return bad("empty action or log-std bounds");
        }
        if !(self.policy_lr > 0.0 && self.value_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        Ok(())
    }
}

/// Diagonal Gaussian with a tanh-squashed mean spanning the action bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    pub log_std: f64,
    pub scaler: FeatureScaler,
    pub action_bounds: (f64, f64),
}

impl GaussianPolicy {
    /// Random hidden weights; the output layer is set so the initial mean is 0.
    pub fn new<R: Rng + ?Sized>(
        scaler: FeatureScaler,
        action_bounds: (f64, f64),
        log_std: f64,
        rng: &mut R,
    ) -> Self {
        let widths = architecture();
        let mut mean_net = Mlp::new(&widths, rng);
        let n = mean_net.num_params();
        let fan_in = widths[widths.len() - 2];
        let (lo, hi) = action_bounds;
        let zero_at = (-(lo + hi) / (hi - lo)).clamp(-0.999, 0.999).atanh();
        let params = mean_net.params_mut();
        for w in &mut params[n - 1 - fan_in..n - 1] {
            *w *= 0.01;
        }
        params[n - 1] = zero_at;
        Self {
            mean_net,
            log_std,
            scaler,
            action_bounds,
        }
    }

    fn squash(&self, o: f64) -> (f64, f64) {
        let (lo, hi) = self.action_bounds;
        let half = 0.5 * (hi - lo);
        let t = o.tanh();
        (0.5 * (lo + hi) + half * t, half * (1.0 - t * t))
    }

    pub fn mean(&self, s: &CFState) -> f64 {
        self.squash(self.mean_net.eval_scalar(&self.scaler.features(s)))
            .0
    }

    pub fn std(&self) -> f64 {
        self.log_std.exp()
    }

    pub fn log_prob(&self, s: &CFState, a: f64) -> f64 {
        gaussian_log_prob(a, self.mean(s), self.log_std)
    }

    /// Raw (unclipped) action sample and its log density.
    pub fn sample<R: Rng + ?Sized>(&self, s: &CFState, rng: &mut R) -> (f64, f64) {
        let mu = self.mean(s);
        let z: f64 = rng.sample(StandardNormal);
        let a = mu + self.std() * z;
        (a, -0.5 * z * z - self.log_std - LN_SQRT_2PI)
    }

    pub fn clip_action(&self, a: f64) -> f64 {
        a.clamp(self.action_bounds.0, self.action_bounds.1)
    }
}

fn gaussian_log_prob(a: f64, mu: f64, log_std: f64) -> f64 {
    let z = (a - mu) / log_std.exp();
    -0.5 * z * z - log_std - LN_SQRT_2PI
}

/// Acts with the policy mean.
pub struct MeanAction<'a>(pub &'a GaussianPolicy);

impl Policy for MeanAction<'_> {
    fn act(&self, s: &CFState, _rng: &mut ChaCha8Rng) -> f64 {
        self.0.mean(s)
    }
}

/// Acts with clipped samples from the policy.
pub struct SampledAction<'a>(pub &'a GaussianPolicy);

impl Policy for SampledAction<'_> {
    fn act(&self, s: &CFState, rng: &mut ChaCha8Rng) -> f64 {
        self.0.clip_action(self.0.sample(s, rng).0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoSample {
    pub s: CFState,
    /// Raw sampled action, before clipping to the bounds.
    pub a: f64,
    pub log_pi: f64,
    pub reward: f64,
    pub s_next: CFState,
    /// True when the episode ended in an absorbing state (no bootstrap).
    pub terminal: bool,
    /// True on the final sample of a trajectory, terminal or truncated.
    pub last: bool,
}

/// GAE(lambda) advantages and discounted return targets.
///
/// `next_values[t]` is the value of `s_{t+1}`; it is ignored when
/// `terminal[t]`. Trajectories are cut after every `last[t]`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    next_values: &[f64],
    terminal: &[bool],
    last: &[bool],
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut carry = 0.0;
    for t in (0..n).rev() {
        if last[t] {
            carry = 0.0;
        }
        let boot = if terminal[t] {
            0.0
        } else {
            gamma * next_values[t]
        };
        let delta = rewards[t] + boot - values[t];
        carry = delta + gamma * lambda * carry;
        adv[t] = carry;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PpoDiagnostics {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub log_std: f64,
}

#[derive(Debug, Clone)]
pub struct PpoAgent {
    pub policy: GaussianPolicy,
    pub value: Mlp,
    pub config: PpoConfig,
    adam_mean: AdamState,
    adam_log_std: AdamState,
    adam_value: AdamState,
}

impl PpoAgent {
    pub fn new<R: Rng + ?Sized>(config: PpoConfig, scaler: FeatureScaler, rng: &mut R) -> Self {
        let policy = GaussianPolicy::new(scaler, config.action_bounds, config.init_log_std, rng);
        let value = Mlp::new(&architecture(), rng);
        Self::from_parts(config, policy, value)
    }

    pub fn from_parts(config: PpoConfig, policy: GaussianPolicy, value: Mlp) -> Self {
        let pi_adam = AdamConfig {
            lr: config.policy_lr,
            ..Default::default()
        };
        let v_adam = AdamConfig {
            lr: config.value_lr,
            ..Default::default()
        };
        Self {
            adam_mean: AdamState::new(pi_adam, policy.mean_net.num_params()),
            adam_log_std: AdamState::new(pi_adam, 1),
            adam_value: AdamState::new(v_adam, value.num_params()),
            policy,
            value,
            config,
        }
    }

    fn value_of(&self, s: &CFState) -> f64 {
        self.value.eval_scalar(&self.policy.scaler.features(s))
    }

    /// Clipped-surrogate policy update and value regression over `samples`.
    pub fn update(
        &mut self,
        samples: &[PpoSample],
        rng: &mut ChaCha8Rng,
    ) -> Result<PpoDiagnostics> {
        if samples.is_empty() {
            return Err(Error::domain("empty PPO batch"));
        }
        let cfg = self.config;
        let values: Vec<f64> = samples.iter().map(|x| self.value_of(&x.s)).collect();
        let next_values: Vec<f64> = samples
            .iter()
            .map(|x| {
                if x.terminal {
                    0.0
                } else {
                    self.value_of(&x.s_next)
                }
            })
            .collect();
        let rewards: Vec<f64> = samples.iter().map(|x| x.reward).collect();
        let terminal: Vec<bool> = samples.iter().map(|x| x.terminal).collect();
        let last: Vec<bool> = samples.iter().map(|x| x.last).collect();
        let (mut adv, returns) = compute_gae(
            &rewards,
            &values,
            &next_values,
            &terminal,
            &last,
            cfg.gamma,
            cfg.gae_lambda,
        );
        if adv.iter().chain(&returns).any(|v| !v.is_finite()) {
            return Err(Error::domain("non-finite advantage"));
        }
        normalize(&mut adv);

        let features: Vec<_> = samples
            .iter()
            .map(|x| self.policy.scaler.features(&x.s))
            .collect();
        let mut order: Vec<usize> = (0..samples.len()).collect();
        let mut diag = PpoDiagnostics::default();
        let (mut kl_sum, mut clipped, mut seen) = (0.0, 0usize, 0usize);
        for _ in 0..cfg.ppo_epochs {
            order.shuffle(rng);
            for batch in order.chunks(cfg.minibatch) {
                let m = batch.len() as f64;
                let mut g_mean = vec![0.0; self.policy.mean_net.num_params()];
                let mut g_log_std = 0.0;
                let mut g_value = vec![0.0; self.value.num_params()];
                let (mut pl, mut vl) = (0.0, 0.0);
                let log_std = self.policy.log_std;
                let sigma = log_std.exp();
                for &k in batch {
                    let x = &samples[k];
                    let cache = self.policy.mean_net.forward(&features[k])?;
                    let (mu, dmu_do) = self.policy.squash(cache.output()[0]);
                    let z = (x.a - mu) / sigma;
                    let logp = -0.5 * z * z - log_std - LN_SQRT_2PI;
                    let ratio = (logp - x.log_pi).exp();
                    let a_k = adv[k];
                    let unclipped = ratio * a_k;
                    let clipped_obj = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip) * a_k;
                    pl -= unclipped.min(clipped_obj);
                    kl_sum += x.log_pi - logp;
                    let active = !((a_k > 0.0 && ratio > 1.0 + cfg.clip)
                        || (a_k < 0.0 && ratio < 1.0 - cfg.clip));
                    if !active {
                        clipped += 1;
                    }
                    seen += 1;
                    if active && a_k != 0.0 {
                        // d(-ratio A)/d logp = -ratio A
                        let d_logp = -ratio * a_k / m;
                        let d_o = d_logp * (z / sigma) * dmu_do;
                        self.policy
                            .mean_net
                            .backward_accumulate(&cache, &[d_o], &mut g_mean)?;
                        g_log_std += d_logp * (z * z - 1.0);
                    }

                    let vcache = self.value.forward(&features[k])?;
                    let err = vcache.output()[0] - returns[k];
                    vl += 0.5 * err * err;
                    self.value
                        .backward_accumulate(&vcache, &[err / m], &mut g_value)?;
                }
                // entropy of a Gaussian grows with log_std at unit rate
                g_log_std -= cfg.entropy_coef;
                if !(pl.is_finite() && vl.is_finite()) {
                    return Err(Error::domain("non-finite PPO loss"));
                }
                clip_norm(
                    &mut g_mean,
                    std::slice::from_mut(&mut g_log_std),
                    cfg.max_grad_norm,
                );
                clip_norm(&mut g_value, &mut [], cfg.max_grad_norm);
                self.adam_mean
                    .step(self.policy.mean_net.params_mut(), &g_mean)?;
                let mut ls = [self.policy.log_std];
                self.adam_log_std.step(&mut ls, &[g_log_std])?;
                self.policy.log_std = ls[0].clamp(cfg.log_std_bounds.0, cfg.log_std_bounds.1);
                self.adam_value.step(self.value.params_mut(), &g_value)?;
                diag.policy_loss = pl / m;
                diag.value_loss = vl / m;
            }
        }
        diag.approx_kl = kl_sum / seen.max(1) as f64;
        diag.clip_fraction = clipped as f64 / seen.max(1) as f64;
        diag.log_std = self.policy.log_std;
        Ok(diag)
    }
}

fn normalize(xs: &mut [f64]) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt() + 1e-8;
    for x in xs {
        *x = (*x - mean) / sd;
    }
}

fn clip_norm(a: &mut [f64], b: &mut [f64], max_norm: f64) {
    if max_norm <= 0.0 {
        return;
    }
    let norm = a.iter().chain(b.iter()).map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let k = max_norm / norm;
        a.iter_mut().chain(b.iter_mut()).for_each(|g| *g *= k);
    }
}
