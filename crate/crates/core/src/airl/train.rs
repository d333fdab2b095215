use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::disc::DiscSample;
use super::ppo::{MeanAction, SampledAction};
use super::{
    architecture, Discriminator, FeatureScaler, GaussianPolicy, PpoAgent, PpoConfig, PpoSample,
};
use crate::env::{rollout, step, CFState, Episode, Policy, Transition};
use crate::error::{Error, Result};
use crate::extraction::CFSegment;
use crate::nn::{AdamConfig, AdamState, Mlp};

/// Knobs of the per-episode speed-error loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalLossConfig {
    /// Lower bound on the mean relative error before the log.
    pub floor: f64,
    pub collision_weight: f64,
    /// Take `|V_et - V_em|` rather than the signed difference.
    pub absolute: bool,
}

impl Default for EvalLossConfig {
    fn default() -> Self {
        Self {
            floor: 1e-6,
            collision_weight: 1000.0,
            absolute: true,
        }
    }
}

/// `ln(max(mean_t |V_et - V_em| / V_et, floor)) - 1000 c` with default knobs.
pub fn eval_episode_loss(true_speeds: &[f64], generated: &[f64], collided: bool) -> Result<f64> {
    eval_episode_loss_with(&EvalLossConfig::default(), true_speeds, generated, collided)
}

pub fn eval_episode_loss_with(
    cfg: &EvalLossConfig,
    true_speeds: &[f64],
    generated: &[f64],
    collided: bool,
) -> Result<f64> {
    if true_speeds.len() != generated.len() || true_speeds.is_empty() {
        return Err(Error::domain(format!(
            "speed series lengths {} and {} must match and be non-empty",
            true_speeds.len(),
            generated.len()
        )));
    }
    if true_speeds.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::domain("true ego speeds must be positive"));
    }
    let rel = true_speeds
        .iter()
        .zip(generated)
        .map(|(t, g)| {
            let d = t - g;
            (if cfg.absolute { d.abs() } else { d }) / t
        })
        .sum::<f64>()
        / true_speeds.len() as f64;
    let c = if collided { 1.0 } else { 0.0 };
    Ok(rel.max(cfg.floor).ln() - cfg.collision_weight * c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
    /// Discount of the shaping term.
    pub gamma: f64,
    pub disc_lr: f64,
    /// Discriminator steps per epoch.
    pub disc_steps: usize,
    /// Samples drawn from each of the expert and policy sets per step.
    pub disc_batch: usize,
    /// Keep every n-th frame when building episodes and expert transitions.
    pub frame_stride: usize,
    /// Subtracted from the learned reward on a colliding transition.
    pub collision_penalty: f64,
    /// Training rollouts start from the recorded spacing scaled by a factor
    /// drawn uniformly from this range.
    pub init_spacing_jitter: (f64, f64),
    pub scaler: FeatureScaler,
    pub ppo: PpoConfig,
    pub eval: EvalLossConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 1500,
            seed: 0,
            gamma: 0.99,
            disc_lr: 1e-3,
            disc_steps: 3,
            disc_batch: 256,
            frame_stride: 1,
            collision_penalty: 100.0,
            init_spacing_jitter: (0.5, 3.0),
            scaler: FeatureScaler::default(),
            ppo: PpoConfig::default(),
            eval: EvalLossConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        self.ppo.validate()?;
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Config(
                "discriminator gamma must lie in (0, 1]".into(),
            ));
        }
        if self.disc_batch == 0 || self.frame_stride == 0 || !(self.disc_lr > 0.0) {
            return Err(Error::Config(
                "disc_batch, frame_stride and disc_lr must be positive".into(),
            ));
        }
        let (lo, hi) = self.init_spacing_jitter;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(
                "init_spacing_jitter must be a positive range".into(),
            ));
        }
        if !(self.collision_penalty >= 0.0) {
            return Err(Error::Config(
                "collision_penalty must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Episode over every `stride`-th frame of a segment.
pub fn strided_episode(seg: &CFSegment, stride: usize) -> Episode {
    let pick = |xs: &[f64]| xs.iter().step_by(stride).copied().collect::<Vec<_>>();
    Episode {
        lv_speed_trace: pick(&seg.lv_speed),
        lv_length: seg.lv_length,
        dt: stride as f64 / seg.frame_rate_hz,
        initial: CFState::new(seg.spacing[0], seg.ego_speed[0], seg.lv_speed[0]),
        ego_speed_trace: pick(&seg.ego_speed),
        ego_accel_trace: pick(&seg.ego_accel),
    }
}

/// Recorded state pairs with the recorded acceleration as the action.
pub fn expert_transitions(segments: &[CFSegment], stride: usize) -> Vec<Transition> {
    let mut out = Vec::new();
    for seg in segments {
        let state = |k: usize| CFState::new(seg.spacing[k], seg.ego_speed[k], seg.lv_speed[k]);
        let mut k = 0;
        while k + stride < seg.len() {
            out.push(Transition {
                s: state(k),
                a: seg.ego_accel[k],
                s_next: state(k + stride),
                collided: false,
            });
            k += stride;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub disc_ce: f64,
    pub mean_return: f64,
    pub episode_loss: f64,
    pub collisions: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epochs: Vec<EpochRecord>,
    /// Epoch and reason when training stopped on a non-finite quantity.
    pub diverged: Option<(usize, String)>,
}

impl TrainReport {
    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "epoch,disc_ce,mean_return,episode_loss,collisions")?;
        for r in &self.epochs {
            writeln!(
                out,
                "{},{:?},{:?},{:?},{}",
                r.epoch, r.disc_ce, r.mean_return, r.episode_loss, r.collisions
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Trained networks plus what is needed to reuse them.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardModel {
    pub disc: Discriminator,
    pub policy: GaussianPolicy,
    pub value: Mlp,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: u32,
    architecture: Vec<usize>,
    scaler: FeatureScaler,
    gamma: f64,
    log_std: f64,
    action_bounds: (f64, f64),
    seed: u64,
    config_hash: String,
}

const NETS: [&str; 4] = ["g.bin", "h.bin", "policy.bin", "value.bin"];

impl RewardModel {
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let nets = [
            &self.disc.g,
            &self.disc.h,
            &self.policy.mean_net,
            &self.value,
        ];
        for (name, net) in NETS.iter().zip(nets) {
            net.write_to(BufWriter::new(File::create(dir.join(name))?))?;
        }
        let manifest = Manifest {
            format: 1,
            architecture: architecture(),
            scaler: self.disc.scaler,
            gamma: self.disc.gamma,
            log_std: self.policy.log_std,
            action_bounds: self.policy.action_bounds,
            seed: self.seed,
            config_hash: self.config_hash.clone(),
        };
        let mut out = BufWriter::new(File::create(dir.join("manifest.json"))?);
        serde_json::to_writer_pretty(&mut out, &manifest)?;
        writeln!(out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let m: Manifest =
            serde_json::from_reader(BufReader::new(File::open(dir.join("manifest.json"))?))?;
        if m.format != 1 {
            return Err(Error::Config(format!(
                "unsupported model format {}",
                m.format
            )));
        }
        let read = |name: &str| -> Result<Mlp> {
            Mlp::read_from(BufReader::new(File::open(dir.join(name))?))
        };
        Ok(Self {
            disc: Discriminator {
                g: read(NETS[0])?,
                h: read(NETS[1])?,
                gamma: m.gamma,
                scaler: m.scaler,
            },
            policy: GaussianPolicy {
                mean_net: read(NETS[2])?,
                log_std: m.log_std,
                scaler: m.scaler,
                action_bounds: m.action_bounds,
            },
            value: read(NETS[3])?,
            seed: m.seed,
            config_hash: m.config_hash,
        })
    }
}

struct Trajectory {
    samples: Vec<PpoSample>,
    collided: bool,
    /// Steps of the episode left unplayed after a collision.
    remaining: usize,
    ep_loss: f64,
}

fn sample_trajectory(
    policy: &GaussianPolicy,
    ep: &Episode,
    initial: CFState,
    eval: &EvalLossConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Trajectory> {
    let mut samples = Vec::with_capacity(ep.steps());
    let mut generated = Vec::with_capacity(ep.steps());
    let mut s = initial;
    let mut collided = false;
    for &v_l_next in &ep.lv_speed_trace[1..] {
        let (a, log_pi) = policy.sample(&s, rng);
        let tr = step(&s, policy.clip_action(a), ep.dt, v_l_next, ep.lv_length);
        samples.push(PpoSample {
            s,
            a,
            log_pi,
            reward: 0.0,
            s_next: tr.s_next,
            terminal: tr.collided,
            last: false,
        });
        generated.push(tr.s_next.v_e);
        if tr.collided {
            collided = true;
            break;
        }
        s = tr.s_next;
    }
    if let Some(last) = samples.last_mut() {
        last.last = true;
    }
    let truth = &ep.ego_speed_trace[1..=generated.len()];
    let ep_loss = eval_episode_loss_with(eval, truth, &generated, collided)?;
    Ok(Trajectory {
        remaining: ep.steps() - samples.len(),
        samples,
        collided,
        ep_loss,
    })
}

/// Alternating AIRL training on the segments of one FV condition.
///
/// Each epoch rolls the stochastic policy out on episodes replaying the
/// experts' LV traces, takes discriminator steps on expert versus policy
/// transitions, then updates the policy with PPO on the AIRL reward. A
/// non-finite quantity stops training and returns the last finite model
/// with `TrainReport::diverged` set. The returned `g` is shifted to zero mean
/// over the expert states, with `h` absorbing the offset.
pub fn train_airl(
    segments: &[CFSegment],
    config: &TrainConfig,
) -> Result<(RewardModel, TrainReport)> {
    config.validate()?;
    let Some(first) = segments.first() else {
        return Err(Error::Config("no expert segments to train on".into()));
    };
    if segments.iter().any(|s| s.label != first.label) {
        return Err(Error::Config("expert segments mix FV conditions".into()));
    }
    let stride = config.frame_stride;
    let episodes: Vec<Episode> = segments
        .iter()
        .map(|s| strided_episode(s, stride))
        .filter(|e| e.steps() > 0)
        .collect();
    let expert = expert_transitions(segments, stride);
    if episodes.is_empty() || expert.is_empty() {
        return Err(Error::Config(format!(
            "segments too short for frame stride {stride}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut disc = Discriminator::new(config.scaler, config.gamma, &mut rng);
    let mut agent = PpoAgent::new(config.ppo, config.scaler, &mut rng);
    let disc_adam = AdamConfig {
        lr: config.disc_lr,
        ..Default::default()
    };
    let mut adam_g = AdamState::new(disc_adam, disc.g.num_params());
    let mut adam_h = AdamState::new(disc_adam, disc.h.num_params());
    let model = |disc: &Discriminator, agent: &PpoAgent| RewardModel {
        disc: disc.clone(),
        policy: agent.policy.clone(),
        value: agent.value.clone(),
        seed: config.seed,
        config_hash: String::new(),
    };
    let mut good = model(&disc, &agent);
    let mut report = TrainReport::default();

    for epoch in 0..config.epochs {
        match run_epoch(
            epoch,
            config,
            &episodes,
            &expert,
            &mut disc,
            &mut agent,
            &mut adam_g,
            &mut adam_h,
            &mut rng,
        ) {
            Ok(rec) => {
                report.epochs.push(rec);
                good = model(&disc, &agent);
            }
            Err(e) => {
                report.diverged = Some((epoch, e.to_string()));
                break;
            }
        }
    }
    // pin the free constant of g to zero mean over expert states
    if good.disc.gamma < 1.0 && !report.epochs.is_empty() {
        let c = expert.iter().map(|t| good.disc.reward(&t.s)).sum::<f64>() / expert.len() as f64;
        good.disc.shift_reward(c)?;
    }
    Ok((good, report))
}

#[allow(clippy::too_many_arguments)]
fn run_epoch(
    epoch: usize,
    config: &TrainConfig,
    episodes: &[Episode],
    expert: &[Transition],
    disc: &mut Discriminator,
    agent: &mut PpoAgent,
    adam_g: &mut AdamState,
    adam_h: &mut AdamState,
    rng: &mut ChaCha8Rng,
) -> Result<EpochRecord> {
    let mut trajectories = Vec::new();
    let mut n_steps = 0;
    while n_steps < config.ppo.steps_per_epoch {
        let ep = &episodes[rng.random_range(0..episodes.len())];
        let (lo, hi) = config.init_spacing_jitter;
        let k = if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        };
        let s0 = ep.initial;
        // keep at least a car length of clearance
        let dy0 = (s0.dy_le * k).max(ep.lv_length + 2.0);
        let t = sample_trajectory(
            &agent.policy,
            ep,
            CFState::new(dy0, s0.v_e, s0.v_l),
            &config.eval,
            rng,
        )?;
        n_steps += t.samples.len();
        trajectories.push(t);
    }
    let mut samples: Vec<PpoSample> = trajectories
        .iter()
        .flat_map(|t| t.samples.iter().copied())
        .collect();

    let mut disc_ce = f64::NAN;
    for _ in 0..config.disc_steps {
        let e_batch: Vec<DiscSample> = (0..config.disc_batch)
            .map(|_| {
                let t = &expert[rng.random_range(0..expert.len())];
                DiscSample {
                    s: t.s,
                    s_next: t.s_next,
                    log_pi: agent.policy.log_prob(&t.s, t.a),
                }
            })
            .collect();
        let p_batch: Vec<DiscSample> = (0..config.disc_batch)
            .map(|_| {
                let p = &samples[rng.random_range(0..samples.len())];
                DiscSample {
                    s: p.s,
                    s_next: p.s_next,
                    log_pi: p.log_pi,
                }
            })
            .collect();
        disc_ce = disc.train_step(&e_batch, &p_batch, adam_g, adam_h)?.loss;
    }
    if !disc_ce.is_finite() && config.disc_steps > 0 {
        return Err(Error::Divergence {
            epoch,
            detail: "non-finite discriminator loss".into(),
        });
    }

    for p in &mut samples {
        p.reward = disc.f(&p.s, &p.s_next) - p.log_pi;
    }
    // a collision forfeits the rest of the episode at the worst reward seen
    let worst = samples.iter().map(|p| p.reward).fold(0.0, f64::min);
    let g = config.ppo.gamma;
    let mut end = 0;
    for t in &trajectories {
        end += t.samples.len();
        if t.collided {
            let tail = (1..=t.remaining).map(|k| g.powi(k as i32)).sum::<f64>();
            samples[end - 1].reward += worst * tail - config.collision_penalty;
        }
    }
    let total_reward: f64 = samples.iter().map(|p| p.reward).sum();
    let mean_return = total_reward / trajectories.len() as f64;
    if !mean_return.is_finite() {
        return Err(Error::Divergence {
            epoch,
            detail: "non-finite AIRL reward".into(),
        });
    }
    agent.update(&samples, rng).map_err(|e| Error::Divergence {
        epoch,
        detail: e.to_string(),
    })?;

    let episode_loss =
        trajectories.iter().map(|t| t.ep_loss).sum::<f64>() / trajectories.len() as f64;
    Ok(EpochRecord {
        epoch,
        disc_ce,
        mean_return,
        episode_loss,
        collisions: trajectories.iter().filter(|t| t.collided).count(),
    })
}

/// Area under the ROC curve for scores of positives vs negatives, with ties
/// counted as one half.
pub fn auc(positives: &[f64], negatives: &[f64]) -> f64 {
    if positives.is_empty() || negatives.is_empty() {
        return f64::NAN;
    }
    let mut all: Vec<(f64, bool)> = positives
        .iter()
        .map(|&x| (x, true))
        .chain(negatives.iter().map(|&x| (x, false)))
        .collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Mann-Whitney U from average ranks
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < all.len() {
        let mut j = i;
        while j < all.len() && all[j].0 == all[i].0 {
            j += 1;
        }
        let avg_rank = (i + j + 1) as f64 / 2.0;
        rank_sum += avg_rank * all[i..j].iter().filter(|x| x.1).count() as f64;
        i = j;
    }
    let (np, nn) = (positives.len() as f64, negatives.len() as f64);
    (rank_sum - np * (np + 1.0) / 2.0) / (np * nn)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEval {
    pub rollouts: usize,
    pub collisions: usize,
    /// Root mean squared ego-speed error pooled over all steps.
    pub speed_rmse: f64,
    pub mean_expert_speed: f64,
    pub mean_episode_loss: f64,
}

/// Rolls the policy out `rollouts` times, cycling through `episodes`.
///
/// With `stochastic` the actions are clipped policy samples, otherwise the
/// policy mean.
pub fn evaluate_policy(
    policy: &GaussianPolicy,
    episodes: &[Episode],
    rollouts: usize,
    seed: u64,
    stochastic: bool,
) -> Result<PolicyEval> {
    if episodes.is_empty() {
        return Err(Error::domain("no evaluation episodes"));
    }
    let (mut sq, mut truth_sum, mut n, mut collisions, mut ep_loss) =
        (0.0, 0.0, 0usize, 0usize, 0.0);
    for k in 0..rollouts {
        let ep = &episodes[k % episodes.len()];
        let p: &dyn Policy = if stochastic {
            &SampledAction(policy)
        } else {
            &MeanAction(policy)
        };
        let trs = rollout(p, ep, seed.wrapping_add(k as u64));
        let collided = trs.last().is_some_and(|t| t.collided);
        collisions += usize::from(collided);
        let generated: Vec<f64> = trs.iter().map(|t| t.s_next.v_e).collect();
        let truth = &ep.ego_speed_trace[1..=generated.len()];
        for (t, g) in truth.iter().zip(&generated) {
            sq += (t - g).powi(2);
            truth_sum += t;
        }
        n += generated.len();
        ep_loss += eval_episode_loss(truth, &generated, collided)?;
    }
    let n = n.max(1) as f64;
    Ok(PolicyEval {
        rollouts,
        collisions,
        speed_rmse: (sq / n).sqrt(),
        mean_expert_speed: truth_sum / n,
        mean_episode_loss: ep_loss / rollouts.max(1) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::{detect_cf_segments, ExtractionCriteria, FvLabel};
    use crate::fixtures::{generate_paired_set, FixtureConfig};

    #[test]
    fn episode_loss_hand_values() {
        assert!(
            (eval_episode_loss(&[20.0, 30.0], &[20.0, 30.0], false).unwrap() - 1e-6_f64.ln()).abs()
                < 1e-12
        );
        assert!(
            (eval_episode_loss(&[20.0], &[19.0], false).unwrap() - 0.05_f64.ln()).abs() < 1e-12
        );
        assert!(
            (eval_episode_loss(&[20.0], &[19.0], true).unwrap() - (0.05_f64.ln() - 1000.0)).abs()
                < 1e-9
        );
        // overshoot is penalized like undershoot
        assert_eq!(
            eval_episode_loss(&[20.0], &[21.0], false).unwrap(),
            eval_episode_loss(&[20.0], &[19.0], false).unwrap()
        );
        assert!(eval_episode_loss(&[20.0], &[19.0, 1.0], false).is_err());
        assert!(eval_episode_loss(&[], &[], false).is_err());
    }

    #[test]
    fn auc_basics() {
        assert_eq!(auc(&[2.0, 3.0], &[0.0, 1.0]), 1.0);
        assert_eq!(auc(&[0.0], &[1.0]), 0.0);
        assert_eq!(auc(&[1.0, 1.0], &[1.0]), 0.5);
        // brute force over all pairs
        let p = [0.3, 0.9, 0.5, 0.5];
        let q = [0.1, 0.5, 0.7];
        let brute = p
            .iter()
            .flat_map(|a| {
                q.iter().map(move |b| {
                    if a > b {
                        1.0
                    } else if a == b {
                        0.5
                    } else {
                        0.0
                    }
                })
            })
            .sum::<f64>()
            / 12.0;
        assert!((auc(&p, &q) - brute).abs() < 1e-15);
    }

    fn small_segments() -> Vec<CFSegment> {
        let cfg = FixtureConfig {
            scenes_per_recording: 1,
            ..Default::default()
        };
        let bundles = generate_paired_set(&cfg, 1, 3);
        let segs = detect_cf_segments(&bundles[0], &ExtractionCriteria::default());
        segs.into_iter()
            .filter(|s| s.label == FvLabel::Tailgated)
            .collect()
    }

    fn tiny_config() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            seed: 5,
            disc_batch: 32,
            frame_stride: 5,
            ppo: PpoConfig {
                steps_per_epoch: 64,
                ppo_epochs: 2,
                minibatch: 32,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let segs = small_segments();
        let cfg = TrainConfig {
            epochs: 0,
            ..tiny_config()
        };
        let (m, report) = train_airl(&segs, &cfg).unwrap();
        assert!(report.epochs.is_empty());
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let disc = Discriminator::new(cfg.scaler, cfg.gamma, &mut rng);
        assert_eq!(m.disc, disc);
    }

    #[test]
    fn empty_expert_set_is_config_error() {
        assert!(matches!(
            train_airl(&[], &tiny_config()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn training_is_deterministic_and_reports_each_epoch() {
        let segs = small_segments();
        let a = train_airl(&segs, &tiny_config()).unwrap();
        let b = train_airl(&segs, &tiny_config()).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(a.1, b.1);
        assert_eq!(a.1.epochs.len(), 2);
        assert!(a.1.diverged.is_none());
    }

    #[test]
    fn reward_is_centered_on_experts() {
        let segs = small_segments();
        let (m, _) = train_airl(&segs, &tiny_config()).unwrap();
        let tr = expert_transitions(&segs, 5);
        let mean = tr.iter().map(|t| m.disc.reward(&t.s)).sum::<f64>() / tr.len() as f64;
        assert!(mean.abs() < 1e-9, "{mean}");
    }

    #[test]
    fn checkpoint_round_trip() {
        let segs = small_segments();
        let (m, _) = train_airl(&segs, &tiny_config()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.save(dir.path()).unwrap();
        assert_eq!(RewardModel::load(dir.path()).unwrap(), m);
    }

    #[test]
    fn expert_transitions_follow_the_record() {
        let segs = small_segments();
        let tr = expert_transitions(&segs[..1], 5);
        assert_eq!(tr.len(), (segs[0].len() - 1) / 5);
        assert_eq!(tr[1].s, tr[0].s_next);
        assert_eq!(tr[0].a, segs[0].ego_accel[0]);
    }
}
