//! Synthetic highD-schema recordings driven by scripted car-following experts.
//!
//! Every scene is one lane holding an LV on a smooth speed profile, an ego
//! under a constant-time-gap controller, and an FV holding a configured gap
//! behind the ego. Kinematics use the same trapezoid integration as
//! [`crate::env::step`], so recorded accelerations replay exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::CFState;
use crate::trajectory::{RecordingBundle, RecordingMeta, Track, TrackFrame, VehicleId};

/// Constant-time-gap controller:
/// `a = k_gap (dy - max(T v_e, min_spacing)) + k_speed (v_l - v_e)`, clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapController {
    /// Head-to-head time gap the controller settles at (s).
    pub time_gap: f64,
    /// Head-to-head spacing floor at low speed (m).
    pub min_spacing: f64,
    pub k_gap: f64,
    pub k_speed: f64,
    pub accel_min: f64,
    pub accel_max: f64,
}

impl GapController {
    pub fn new(time_gap: f64) -> Self {
        Self {
            time_gap,
            min_spacing: 7.0,
            k_gap: 0.25,
            k_speed: 0.7,
            accel_min: -6.0,
            accel_max: 4.0,
        }
    }

    pub fn desired_spacing(&self, v_e: f64) -> f64 {
        (self.time_gap * v_e).max(self.min_spacing)
    }

    pub fn accel(&self, s: &CFState) -> f64 {
        let a = self.k_gap * (s.dy_le - self.desired_spacing(s.v_e)) + self.k_speed * s.dv_le;
        a.clamp(self.accel_min, self.accel_max)
    }
}

/// Smooth LV speed profile: base speed plus two random sinusoids, floored.
pub fn lv_speed_profile<R: Rng + ?Sized>(base: f64, n: usize, dt: f64, rng: &mut R) -> Vec<f64> {
    let waves: Vec<(f64, f64, f64)> = (0..2)
        .map(|_| {
            let amp = base * rng.random_range(0.03..0.08);
            let period = rng.random_range(6.0..18.0);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            (amp, period, phase)
        })
        .collect();
    (0..n)
        .map(|k| {
            let t = k as f64 * dt;
            let v = base
                + waves
                    .iter()
                    .map(|(a, p, ph)| a * (std::f64::consts::TAU * t / p + ph).sin())
                    .sum::<f64>();
            v.max(0.5 * base)
        })
        .collect()
}

/// Canonical (forward-positive) per-frame kinematics of one vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct Kinematics {
    pub x: Vec<f64>,
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
}

/// Integrates a prescribed speed trace from `x0`.
pub fn integrate_speed(x0: f64, speed: &[f64], dt: f64) -> Kinematics {
    let n = speed.len();
    let mut x = Vec::with_capacity(n);
    x.push(x0);
    for k in 1..n {
        x.push(x[k - 1] + 0.5 * (speed[k - 1] + speed[k]) * dt);
    }
    let mut accel: Vec<f64> = speed.windows(2).map(|w| (w[1] - w[0]) / dt).collect();
    accel.push(accel.last().copied().unwrap_or(0.0));
    Kinematics {
        x,
        speed: speed.to_vec(),
        accel,
    }
}

/// Runs `controller` behind a leader with known kinematics, starting at the
/// controller's equilibrium spacing for the leader's initial speed.
pub fn follow<R: Rng + ?Sized>(
    leader: &Kinematics,
    controller: &GapController,
    accel_noise: f64,
    dt: f64,
    rng: &mut R,
) -> Kinematics {
    let n = leader.speed.len();
    let v0 = leader.speed[0];
    let mut x = vec![leader.x[0] - controller.desired_spacing(v0)];
    let mut speed = vec![v0];
    let mut accel = Vec::with_capacity(n);
    for k in 0..n {
        let s = CFState::new(leader.x[k] - x[k], speed[k], leader.speed[k]);
        let noise = if accel_noise > 0.0 {
            accel_noise * rng.sample::<f64, _>(rand_distr::StandardNormal)
        } else {
            0.0
        };
        let a = (controller.accel(&s) + noise).clamp(controller.accel_min, controller.accel_max);
        accel.push(a);
        if k + 1 < n {
            let v_next = (speed[k] + a * dt).max(0.0);
            x.push(x[k] + 0.5 * (speed[k] + v_next) * dt);
            speed.push(v_next);
        }
    }
    Kinematics { x, speed, accel }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureConfig {
    pub frame_rate_hz: f64,
    pub scene_duration_s: f64,
    pub scenes_per_recording: usize,
    /// Candidate LV base speeds (m/s); scenes cycle through them.
    pub lv_base_speeds: Vec<f64>,
    /// Ego time gap under tailgating (s).
    pub tailgated_ego_gap: f64,
    /// Ego time gap when the FV keeps its distance (s).
    pub gapped_ego_gap: f64,
    /// FV -> ego time gap targets (s).
    pub tailgating_fv_gap: f64,
    pub gapped_fv_gap: f64,
    pub accel_noise: f64,
    /// Half the scenes travel in negative x, as in highD's upper lanes.
    pub mixed_directions: bool,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            frame_rate_hz: 25.0,
            scene_duration_s: 20.0,
            scenes_per_recording: 4,
            lv_base_speeds: vec![7.0, 10.0, 13.0, 16.0, 19.0, 22.0, 25.0],
            tailgated_ego_gap: 1.0,
            gapped_ego_gap: 2.5,
            tailgating_fv_gap: 0.7,
            gapped_fv_gap: 4.0,
            accel_noise: 0.0,
            mixed_directions: true,
        }
    }
}

/// One simulated LV / ego / FV triple in canonical coordinates.
#[derive(Debug, Clone)]
pub struct Scene {
    pub lv: Kinematics,
    pub ego: Kinematics,
    pub fv: Kinematics,
    pub lengths: [f64; 3],
}

pub fn simulate_scene<R: Rng + ?Sized>(
    lv_speed: &[f64],
    ego: &GapController,
    fv_gap: f64,
    accel_noise: f64,
    dt: f64,
    rng: &mut R,
) -> Scene {
    let lengths = [
        rng.random_range(4.2..5.0),
        rng.random_range(4.2..5.0),
        rng.random_range(4.2..5.0),
    ];
    let lv = integrate_speed(200.0, lv_speed, dt);
    let ego_k = follow(&lv, ego, accel_noise, dt, rng);
    let fv_ctl = GapController {
        k_gap: 0.6,
        k_speed: 1.2,
        min_spacing: 5.5,
        ..GapController::new(fv_gap)
    };
    let fv = follow(&ego_k, &fv_ctl, 0.0, dt, rng);
    Scene {
        lv,
        ego: ego_k,
        fv,
        lengths,
    }
}

/// Condition of the FV in a generated scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Tailgated,
    Gapped,
}

/// What to generate for one recording.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordingSpec {
    pub recording_id: i64,
    pub kind: SceneKind,
    /// Seeds the LV speed profiles; recordings sharing it see the same leaders.
    pub lv_seed: u64,
    /// Multiplier on the LV profiles, to make shared leaders near-identical.
    pub lv_scale: f64,
    /// Seeds everything else (vehicle lengths, start frames, noise).
    pub seed: u64,
}

/// Builds one recording in raw highD orientation. Scene `i` uses LV base
/// speed `lv_base_speeds[(recording_id + i) % len]` and its own lane.
pub fn generate_recording(config: &FixtureConfig, spec: &RecordingSpec) -> RecordingBundle {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut lv_rng = ChaCha8Rng::seed_from_u64(spec.lv_seed);
    let dt = 1.0 / config.frame_rate_hz;
    let n = (config.scene_duration_s * config.frame_rate_hz).round() as usize + 1;
    let (ego_gap, fv_gap) = match spec.kind {
        SceneKind::Tailgated => (config.tailgated_ego_gap, config.tailgating_fv_gap),
        SceneKind::Gapped => (config.gapped_ego_gap, config.gapped_fv_gap),
    };
    let controller = GapController::new(ego_gap);
    let mut tracks = Vec::new();
    let mut max_frame = 0;
    for i in 0..config.scenes_per_recording {
        let slot = (spec.recording_id as usize + i) % config.lv_base_speeds.len();
        let base = config.lv_base_speeds[slot];
        let lv_speed: Vec<f64> = lv_speed_profile(base, n, dt, &mut lv_rng)
            .into_iter()
            .map(|v| v * spec.lv_scale)
            .collect();
        let scene = simulate_scene(
            &lv_speed,
            &controller,
            fv_gap,
            config.accel_noise,
            dt,
            &mut rng,
        );
        let backward = config.mixed_directions && i % 2 == 1;
        let lane = if backward {
            2 + (i / 2) as i64
        } else {
            5 + (i / 2) as i64
        };
        let first_frame = 1 + rng.random_range(0..50_i64);
        let ids = [
            3 * i as VehicleId + 1,
            3 * i as VehicleId + 2,
            3 * i as VehicleId + 3,
        ];
        let kin = [&scene.lv, &scene.ego, &scene.fv];
        for v in 0..3 {
            let preceding = (v > 0).then(|| ids[v - 1]);
            let following = (v < 2).then(|| ids[v + 1]);
            tracks.push(raw_track(
                ids[v],
                kin[v],
                scene.lengths[v],
                lane,
                first_frame,
                backward,
                preceding,
                following,
            ));
        }
        max_frame = max_frame.max(first_frame + n as i64 - 1);
    }
    tracks.sort_by_key(|t| t.vehicle_id);
    RecordingBundle {
        meta: RecordingMeta {
            recording_id: spec.recording_id,
            frame_rate_hz: config.frame_rate_hz,
            duration_s: max_frame as f64 / config.frame_rate_hz,
            location_id: 1,
        },
        tracks,
    }
}

/// `pairs` tailgated recordings (ids `1..=pairs`) followed by `pairs` gapped
/// ones whose leaders replay the same profiles scaled by up to 2 %.
pub fn generate_paired_set(
    config: &FixtureConfig,
    pairs: usize,
    seed: u64,
) -> Vec<RecordingBundle> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<(u64, f64)> = (0..pairs)
        .map(|_| (rng.random::<u64>(), 1.0 + rng.random_range(-0.02..0.02)))
        .collect();
    let mut out = Vec::with_capacity(2 * pairs);
    for (kind, offset) in [(SceneKind::Tailgated, 0), (SceneKind::Gapped, pairs)] {
        for (p, (lv_seed, scale)) in specs.iter().enumerate() {
            let spec = RecordingSpec {
                recording_id: (p + 1) as i64,
                kind,
                lv_seed: *lv_seed,
                lv_scale: if kind == SceneKind::Gapped {
                    *scale
                } else {
                    1.0
                },
                seed: rng.random(),
            };
            let mut bundle = generate_recording(config, &spec);
            bundle.meta.recording_id = (offset + p + 1) as i64;
            out.push(bundle);
        }
    }
    out
}

/// Reference used to place backward-travelling vehicles in raw coordinates.
const X_REF: f64 = 2000.0;

#[allow(clippy::too_many_arguments)]
fn raw_track(
    vehicle_id: VehicleId,
    kin: &Kinematics,
    length: f64,
    lane_id: i64,
    first_frame: i64,
    backward: bool,
    preceding_id: Option<VehicleId>,
    following_id: Option<VehicleId>,
) -> Track {
    let sign = if backward { -1.0 } else { 1.0 };
    let frames = (0..kin.x.len())
        .map(|k| TrackFrame {
            frame: first_frame + k as i64,
            x: if backward { X_REF - kin.x[k] } else { kin.x[k] },
            y: lane_id as f64 * 3.75,
            speed: sign * kin.speed[k],
            accel: sign * kin.accel[k],
            lane_id,
            preceding_id,
            following_id,
        })
        .collect();
    Track {
        vehicle_id,
        length,
        width: 1.9,
        frames,
    }
}
