//! Car-following MDP: kinematic transition over a replayed LV speed trace.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::extraction::CFSegment;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CFState {
    /// Head-to-head distance ego -> LV (m).
    pub dy_le: f64,
    pub v_e: f64,
    pub v_l: f64,
    /// `v_l - v_e`.
    pub dv_le: f64,
}

impl CFState {
    pub fn new(dy_le: f64, v_e: f64, v_l: f64) -> Self {
        Self {
            dy_le,
            v_e,
            v_l,
            dv_le: v_l - v_e,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub lv_speed_trace: Vec<f64>,
    pub lv_length: f64,
    pub dt: f64,
    pub initial: CFState,
    /// Recorded ego speeds, for evaluation against generated ones.
    pub ego_speed_trace: Vec<f64>,
    /// Recorded ego accelerations.
    pub ego_accel_trace: Vec<f64>,
}

impl Episode {
    pub fn steps(&self) -> usize {
        self.lv_speed_trace.len().saturating_sub(1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: CFState,
    pub a: f64,
    pub s_next: CFState,
    pub collided: bool,
}

pub fn make_episode(segment: &CFSegment, dt: f64) -> Episode {
    Episode {
        lv_speed_trace: segment.lv_speed.clone(),
        lv_length: segment.lv_length,
        dt,
        initial: CFState::new(
            segment.spacing[0],
            segment.ego_speed[0],
            segment.lv_speed[0],
        ),
        ego_speed_trace: segment.ego_speed.clone(),
        ego_accel_trace: segment.ego_accel.clone(),
    }
}

/// One kinematic step: ego speed integrates `a` (floored at 0), both
/// vehicles advance by the trapezoid rule, and the gap is updated.
pub fn step(s: &CFState, a: f64, dt: f64, v_l_next: f64, lv_length: f64) -> Transition {
    let v_e_next = (s.v_e + a * dt).max(0.0);
    let ego_disp = 0.5 * (s.v_e + v_e_next) * dt;
    let lv_disp = 0.5 * (s.v_l + v_l_next) * dt;
    let dy_next = s.dy_le + (lv_disp - ego_disp);
    Transition {
        s: *s,
        a,
        s_next: CFState::new(dy_next, v_e_next, v_l_next),
        collided: dy_next - lv_length <= 0.0,
    }
}

/// Anything that picks an acceleration for a state.
pub trait Policy {
    fn act(&self, s: &CFState, rng: &mut ChaCha8Rng) -> f64;
}

impl<F: Fn(&CFState) -> f64> Policy for F {
    fn act(&self, s: &CFState, _rng: &mut ChaCha8Rng) -> f64 {
        self(s)
    }
}

/// Steps through the whole LV trace, stopping at the first collision.
pub fn rollout<P: Policy + ?Sized>(policy: &P, episode: &Episode, seed: u64) -> Vec<Transition> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(episode.steps());
    let mut s = episode.initial;
    for &v_l_next in &episode.lv_speed_trace[1..] {
        let a = policy.act(&s, &mut rng);
        let tr = step(&s, a, episode.dt, v_l_next, episode.lv_length);
        out.push(tr);
        if tr.collided {
            break;
        }
        s = tr.s_next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extraction::FvLabel;

    #[test]
    fn hand_substituted_step() {
        let s = CFState::new(30.0, 10.0, 10.0);
        let tr = step(&s, 2.0, 0.2, 10.0, 5.0);
        assert!((tr.s_next.v_e - 10.4).abs() < 1e-12);
        // ego 2.04 m, LV 2.0 m
        assert!((tr.s_next.dy_le - (30.0 - 0.04)).abs() < 1e-12);
        assert!((tr.s_next.dv_le - (10.0 - 10.4)).abs() < 1e-12);
        assert!(!tr.collided);
    }

    #[test]
    fn equilibrium_step() {
        let s = CFState::new(25.0, 15.0, 15.0);
        let tr = step(&s, 0.0, 0.04, 15.0, 5.0);
        assert_eq!(tr.s_next, s);
    }

    #[test]
    fn speed_floor() {
        let tr = step(&CFState::new(25.0, 1.0, 15.0), -10.0, 0.2, 15.0, 5.0);
        assert_eq!(tr.s_next.v_e, 0.0);
    }

    fn segment(n: usize) -> CFSegment {
        CFSegment {
            recording_id: 1,
            lv_id: 1,
            ego_id: 2,
            fv_id: 3,
            frame_lo: 1,
            frame_hi: n as i64,
            frame_rate_hz: 25.0,
            lane_id: 2,
            lv_length: 5.0,
            label: FvLabel::Gapped,
            lv_speed: vec![20.0; n],
            ego_speed: vec![20.0; n],
            ego_accel: vec![0.0; n],
            spacing: vec![50.0; n],
            rel_speed: vec![0.0; n],
            fv_time_gap: vec![3.5; n],
        }
    }

    #[test]
    fn episode_from_segment() {
        let ep = make_episode(&segment(300), 1.0 / 25.0);
        assert_eq!(ep.lv_speed_trace.len(), 300);
        assert_eq!(ep.dt, 0.04);
        assert_eq!(ep.initial.dy_le, 50.0);
        assert_eq!(ep.lv_length, 5.0);
        let ep = make_episode(&segment(2), 0.04);
        assert_eq!(ep.steps(), 1);
        assert_eq!(rollout(&|_: &CFState| 0.0, &ep, 0).len(), 1);
    }

    #[test]
    fn coasting_behind_matched_leader() {
        let ep = make_episode(&segment(300), 0.04);
        let tr = rollout(&|_: &CFState| 0.0, &ep, 3);
        assert_eq!(tr.len(), 299);
        assert!(tr.iter().all(|t| !t.collided && t.s_next.dy_le == 50.0));
    }

    #[test]
    fn full_throttle_into_slower_leader() {
        let mut seg = segment(500);
        seg.lv_speed = vec![15.0; 500];
        seg.spacing = vec![20.0; 500];
        let ep = make_episode(&seg, 0.04);
        let tr = rollout(&|_: &CFState| 4.0, &ep, 0);
        assert!(tr.last().unwrap().collided);
        assert_eq!(tr.iter().filter(|t| t.collided).count(), 1);
        // bumper gap 15 m closes as 5t + 2t^2 (exact under the trapezoid rule)
        let t_hit = (-5.0 + (25.0_f64 + 120.0).sqrt()) / 4.0;
        assert_eq!(tr.len(), (t_hit / 0.04).ceil() as usize);
    }
}
