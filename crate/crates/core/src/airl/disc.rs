use rand::Rng;

use super::{architecture, FeatureScaler};
use crate::env::CFState;
use crate::error::{Error, Result};
use crate::nn::{AdamState, Mlp};

/// Reward net `g` and shaping net `h` with their discount.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub g: Mlp,
    pub h: Mlp,
    pub gamma: f64,
    pub scaler: FeatureScaler,
}

/// One labelled discriminator sample.
#[derive(Debug, Clone, Copy)]
pub struct DiscSample {
    pub s: CFState,
    pub s_next: CFState,
    pub log_pi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DiscBatchStats {
    /// Mean binary cross-entropy.
    pub loss: f64,
    /// Fraction of expert samples with D > 0.5.
    pub expert_acc: f64,
    /// Fraction of policy samples with D < 0.5.
    pub policy_acc: f64,
}

impl Discriminator {
    pub fn new<R: Rng + ?Sized>(scaler: FeatureScaler, gamma: f64, rng: &mut R) -> Self {
        let widths = architecture();
        Self {
            g: Mlp::new(&widths, rng),
            h: Mlp::new(&widths, rng),
            gamma,
            scaler,
        }
    }

    /// Recovered state reward `g(s)`.
    pub fn reward(&self, s: &CFState) -> f64 {
        self.g.eval_scalar(&self.scaler.features(s))
    }

    pub fn shaping(&self, s: &CFState) -> f64 {
        self.h.eval_scalar(&self.scaler.features(s))
    }

    /// `f(s, s') = g(s) + gamma h(s') - h(s)`.
    pub fn f(&self, s: &CFState, s_next: &CFState) -> f64 {
        self.reward(s) + self.gamma * self.shaping(s_next) - self.shaping(s)
    }

    /// Moves `c` from `g` into `h`: `g - c` and `h - c / (1 - gamma)` give the
    /// same `f`. Requires `gamma < 1`.
    pub fn shift_reward(&mut self, c: f64) -> Result<()> {
        if !(self.gamma < 1.0) || !c.is_finite() {
            return Err(Error::domain(
                "reward shift needs gamma < 1 and a finite offset",
            ));
        }
        let k = 1.0 / (1.0 - self.gamma);
        for (net, d) in [(&mut self.g, c), (&mut self.h, c * k)] {
            // the single output bias is the last parameter
            if let Some(b) = net.params_mut().last_mut() {
                *b -= d;
            }
        }
        Ok(())
    }

    /// One Adam step on binary cross-entropy with expert samples labelled 1
    /// and policy samples labelled 0.
    pub fn train_step(
        &mut self,
        expert: &[DiscSample],
        policy: &[DiscSample],
        adam_g: &mut AdamState,
        adam_h: &mut AdamState,
    ) -> Result<DiscBatchStats> {
        let n = (expert.len() + policy.len()) as f64;
        if n == 0.0 {
            return Err(Error::domain("empty discriminator batch"));
        }
        let mut grad_g = vec![0.0; self.g.num_params()];
        let mut grad_h = vec![0.0; self.h.num_params()];
        let mut stats = DiscBatchStats::default();
        let labelled = expert
            .iter()
            .map(|s| (s, 1.0))
            .chain(policy.iter().map(|s| (s, 0.0)));
        for (sample, y) in labelled {
            let x = self.scaler.features(&sample.s);
            let x_next = self.scaler.features(&sample.s_next);
            let cg = self.g.forward(&x)?;
            let ch = self.h.forward(&x)?;
            let ch_next = self.h.forward(&x_next)?;
            let z =
                cg.output()[0] + self.gamma * ch_next.output()[0] - ch.output()[0] - sample.log_pi;
            if !z.is_finite() {
                return Err(Error::domain("non-finite discriminator logit"));
            }
            stats.loss += softplus(z) - y * z;
            let d = sigmoid(z);
            if y == 1.0 {
                stats.expert_acc += f64::from(u8::from(d > 0.5));
            } else {
                stats.policy_acc += f64::from(u8::from(d < 0.5));
            }
            let dz = (d - y) / n;
            self.g.backward_accumulate(&cg, &[dz], &mut grad_g)?;
            self.h
                .backward_accumulate(&ch_next, &[self.gamma * dz], &mut grad_h)?;
            self.h.backward_accumulate(&ch, &[-dz], &mut grad_h)?;
        }
        adam_g.step(self.g.params_mut(), &grad_g)?;
        adam_h.step(self.h.params_mut(), &grad_h)?;
        stats.loss /= n;
        stats.expert_acc /= expert.len().max(1) as f64;
        stats.policy_acc /= policy.len().max(1) as f64;
        Ok(stats)
    }

    /// Mean binary cross-entropy without updating.
    pub fn cross_entropy(&self, expert: &[DiscSample], policy: &[DiscSample]) -> f64 {
        let n = (expert.len() + policy.len()).max(1) as f64;
        let term = |s: &DiscSample, y: f64| {
            let z = self.f(&s.s, &s.s_next) - s.log_pi;
            softplus(z) - y * z
        };
        (expert.iter().map(|s| term(s, 1.0)).sum::<f64>()
            + policy.iter().map(|s| term(s, 0.0)).sum::<f64>())
            / n
    }
}

pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_finite(s: &CFState, a: f64, s_next: &CFState, log_pi: f64) -> Result<()> {
    let all = [
        s.dy_le,
        s.v_e,
        s.v_l,
        s.dv_le,
        a,
        s_next.dy_le,
        s_next.v_e,
        s_next.v_l,
        s_next.dv_le,
        log_pi,
    ];
    if all.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::domain("non-finite discriminator input"))
    }
}

/// Discriminator logit `f - log pi`.
pub fn discriminator_logit(
    disc: &Discriminator,
    s: &CFState,
    a: f64,
    s_next: &CFState,
    log_pi: f64,
) -> Result<f64> {
    check_finite(s, a, s_next, log_pi)?;
    Ok(disc.f(s, s_next) - log_pi)
}

/// `D = exp(f) / (exp(f) + pi)`, evaluated as a logistic of the logit.
pub fn discriminator_output(
    disc: &Discriminator,
    s: &CFState,
    a: f64,
    s_next: &CFState,
    log_pi: f64,
) -> Result<f64> {
    discriminator_logit(disc, s, a, s_next, log_pi).map(sigmoid)
}

/// AIRL reward `log D - log(1 - D)`, which is exactly the logit.
pub fn airl_reward(
    disc: &Discriminator,
    s: &CFState,
    a: f64,
    s_next: &CFState,
    log_pi: f64,
) -> Result<f64> {
    discriminator_logit(disc, s, a, s_next, log_pi)
}
