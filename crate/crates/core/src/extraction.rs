//! Car-following segment detection and follower-condition labelling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{RecordingBundle, Track, TrackFrame, VehicleId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionCriteria {
    /// Maximum head-to-head distance from ego to LV (m).
    pub max_lv_distance: f64,
    /// Minimum LV and ego speed (m/s).
    pub min_speed: f64,
    /// Minimum segment duration (s).
    pub min_duration: f64,
    /// FV time gap at or below which the ego counts as tailgated (s).
    pub tailgate_gap_max: f64,
    /// FV time gap at or above which the ego counts as gapped (s).
    pub gapped_gap_min: f64,
}

impl Default for ExtractionCriteria {
    fn default() -> Self {
        Self {
            max_lv_distance: 100.0,
            min_speed: 10.0 / 3.6,
            min_duration: 10.0,
            tailgate_gap_max: 1.0,
            gapped_gap_min: 3.0,
        }
    }
}

impl ExtractionCriteria {
    pub fn validate(&self) -> Result<()> {
        let all_positive = [
            self.max_lv_distance,
            self.min_speed,
            self.min_duration,
            self.tailgate_gap_max,
            self.gapped_gap_min,
        ]
        .iter()
        .all(|v| *v > 0.0);
        if !all_positive {
            return Err(Error::Config(
                "extraction thresholds must be positive".into(),
            ));
        }
        if self.tailgate_gap_max >= self.gapped_gap_min {
            return Err(Error::Config(
                "tailgate_gap_max must be below gapped_gap_min".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FvLabel {
    Tailgated,
    Gapped,
    Neither,
}

impl FvLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            FvLabel::Tailgated => "tailgated",
            FvLabel::Gapped => "gapped",
            FvLabel::Neither => "neither",
        }
    }
}

/// A contiguous LV / ego / FV car-following episode with per-frame series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CFSegment {
    pub recording_id: i64,
    pub lv_id: VehicleId,
    pub ego_id: VehicleId,
    pub fv_id: VehicleId,
    pub frame_lo: i64,
    pub frame_hi: i64,
    pub frame_rate_hz: f64,
    pub lane_id: i64,
    pub lv_length: f64,
    pub label: FvLabel,
    pub lv_speed: Vec<f64>,
    pub ego_speed: Vec<f64>,
    pub ego_accel: Vec<f64>,
    /// Head-to-head distance ego -> LV (m).
    pub spacing: Vec<f64>,
    /// LV speed minus ego speed (m/s).
    pub rel_speed: Vec<f64>,
    /// Head-to-head time headway FV -> ego (s).
    pub fv_time_gap: Vec<f64>,
}

impl CFSegment {
    pub fn len(&self) -> usize {
        self.ego_speed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ego_speed.is_empty()
    }

    pub fn duration(&self) -> f64 {
        (self.frame_hi - self.frame_lo) as f64 / self.frame_rate_hz
    }

    /// Ordering key used for every exported segment list.
    pub fn key(&self) -> (i64, VehicleId, i64) {
        (self.recording_id, self.ego_id, self.frame_lo)
    }
}

/// Per-frame time headway `(X_L - X_F) / V_F` between head positions.
pub fn time_gap_series(
    follower: &Track,
    leader: &Track,
    frame_lo: i64,
    frame_hi: i64,
) -> Result<Vec<f64>> {
    (frame_lo..=frame_hi)
        .map(|frame| {
            let (f, l) = match (follower.at(frame), leader.at(frame)) {
                (Some(f), Some(l)) => (f, l),
                _ => {
                    return Err(Error::domain(format!(
                        "vehicles {} / {} do not both cover frame {frame}",
                        follower.vehicle_id, leader.vehicle_id
                    )))
                }
            };
            time_headway(l.x, f.x, f.speed).ok_or_else(|| {
                Error::domain(format!(
                    "follower {} speed {} <= 0 at frame {frame}",
                    follower.vehicle_id, f.speed
                ))
            })
        })
        .collect()
}

/// Head-to-head time headway; `None` if the follower is not moving forward.
pub fn time_headway(leader_x: f64, follower_x: f64, follower_speed: f64) -> Option<f64> {
    (follower_speed > 0.0).then(|| (leader_x - follower_x) / follower_speed)
}

struct FrameView<'a> {
    ego: &'a TrackFrame,
    lv: &'a TrackFrame,
    fv: &'a TrackFrame,
}

/// The (LV, FV) pair for which `frame` of `ego` satisfies every CF criterion.
fn cf_frame<'a>(
    bundle: &'a RecordingBundle,
    frame: &'a TrackFrame,
    criteria: &ExtractionCriteria,
) -> Option<(VehicleId, VehicleId, FrameView<'a>)> {
    let lv_id = frame.preceding_id?;
    let fv_id = frame.following_id?;
    let lv_track = bundle.track(lv_id)?;
    let lv = lv_track.at(frame.frame)?;
    let fv = bundle.track(fv_id)?.at(frame.frame)?;
    let same_lane = lv.lane_id == frame.lane_id && fv.lane_id == frame.lane_id;
    let spacing = lv.x - frame.x;
    let ok = same_lane
        && spacing <= criteria.max_lv_distance
        && spacing - lv_track.length > 0.0
        && frame.speed >= criteria.min_speed
        && lv.speed >= criteria.min_speed
        && fv.speed > 0.0
        && frame.x > fv.x;
    ok.then_some((lv_id, fv_id, FrameView { ego: frame, lv, fv }))
}

/// Finds every maximal CF span in a direction-normalized recording and labels it.
pub fn detect_cf_segments(
    bundle: &RecordingBundle,
    criteria: &ExtractionCriteria,
) -> Vec<CFSegment> {
    let min_frames = (criteria.min_duration * bundle.meta.frame_rate_hz - 1e-9).ceil() as i64;
    let mut out = Vec::new();
    for ego in &bundle.tracks {
        let mut run: Option<Run> = None;
        for frame in &ego.frames {
            let hit = cf_frame(bundle, frame, criteria);
            let key = hit.as_ref().map(|(l, f, _)| (*l, *f, frame.lane_id));
            if run.as_ref().map(|r| (r.lv_id, r.fv_id, r.lane_id)) != key {
                if let Some(done) = run.take() {
                    done.emit(bundle, ego, min_frames, criteria, &mut out);
                }
                if let Some((lv_id, fv_id, _)) = hit.as_ref() {
                    run = Some(Run::new(*lv_id, *fv_id, frame.frame, frame.lane_id));
                }
            }
            if let (Some(r), Some((_, _, view))) = (run.as_mut(), hit) {
                r.push(&view);
            }
        }
        if let Some(done) = run.take() {
            done.emit(bundle, ego, min_frames, criteria, &mut out);
        }
    }
    out.sort_by_key(|s| s.key());
    out
}

struct Run {
    lv_id: VehicleId,
    fv_id: VehicleId,
    frame_lo: i64,
    lane_id: i64,
    lv_speed: Vec<f64>,
    ego_speed: Vec<f64>,
    ego_accel: Vec<f64>,
    spacing: Vec<f64>,
    rel_speed: Vec<f64>,
    fv_time_gap: Vec<f64>,
}

impl Run {
    fn new(lv_id: VehicleId, fv_id: VehicleId, frame_lo: i64, lane_id: i64) -> Self {
        Self {
            lv_id,
            fv_id,
            frame_lo,
            lane_id,
            lv_speed: Vec::new(),
            ego_speed: Vec::new(),
            ego_accel: Vec::new(),
            spacing: Vec::new(),
            rel_speed: Vec::new(),
            fv_time_gap: Vec::new(),
        }
    }

    fn push(&mut self, v: &FrameView<'_>) {
        self.lv_speed.push(v.lv.speed);
        self.ego_speed.push(v.ego.speed);
        self.ego_accel.push(v.ego.accel);
        self.spacing.push(v.lv.x - v.ego.x);
        self.rel_speed.push(v.lv.speed - v.ego.speed);
        // fv.speed > 0 is part of the frame criterion
        self.fv_time_gap.push((v.ego.x - v.fv.x) / v.fv.speed);
    }

    fn emit(
        self,
        bundle: &RecordingBundle,
        ego: &Track,
        min_frames: i64,
        criteria: &ExtractionCriteria,
        out: &mut Vec<CFSegment>,
    ) {
        let n = self.ego_speed.len() as i64;
        if n - 1 < min_frames {
            return;
        }
        let lv_length = bundle.track(self.lv_id).map(|t| t.length).unwrap_or(0.0);
        let mut seg = CFSegment {
            recording_id: bundle.meta.recording_id,
            lv_id: self.lv_id,
            ego_id: ego.vehicle_id,
            fv_id: self.fv_id,
            frame_lo: self.frame_lo,
            frame_hi: self.frame_lo + n - 1,
            frame_rate_hz: bundle.meta.frame_rate_hz,
            lane_id: self.lane_id,
            lv_length,
            label: FvLabel::Neither,
            lv_speed: self.lv_speed,
            ego_speed: self.ego_speed,
            ego_accel: self.ego_accel,
            spacing: self.spacing,
            rel_speed: self.rel_speed,
            fv_time_gap: self.fv_time_gap,
        };
        seg.label = classify_fv_state(&seg, criteria);
        out.push(seg);
    }
}

/// Tailgated if the FV gap is within the tailgating bound at every frame,
/// Gapped if it is beyond the gapped bound at every frame, else Neither.
pub fn classify_fv_state(segment: &CFSegment, criteria: &ExtractionCriteria) -> FvLabel {
    classify_gap_series(&segment.fv_time_gap, criteria)
}

pub fn classify_gap_series(gaps: &[f64], criteria: &ExtractionCriteria) -> FvLabel {
    if gaps.is_empty() {
        return FvLabel::Neither;
    }
    if gaps.iter().all(|g| *g <= criteria.tailgate_gap_max) {
        FvLabel::Tailgated
    } else if gaps.iter().all(|g| *g >= criteria.gapped_gap_min) {
        FvLabel::Gapped
    } else {
        FvLabel::Neither
    }
}

#[derive(Serialize)]
struct SegmentSummary {
    duration_s: f64,
    mean_ego_speed: f64,
    mean_lv_speed: f64,
    mean_spacing: f64,
    mean_fv_time_gap: f64,
}

#[derive(Serialize)]
struct SegmentLine<'a> {
    #[serde(flatten)]
    segment: &'a CFSegment,
    summary: SegmentSummary,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

/// One JSON object per line, in the order given.
pub fn write_segments_jsonl<W: std::io::Write>(segments: &[CFSegment], mut out: W) -> Result<()> {
    for segment in segments {
        let line = SegmentLine {
            segment,
            summary: SegmentSummary {
                duration_s: segment.duration(),
                mean_ego_speed: mean(&segment.ego_speed),
                mean_lv_speed: mean(&segment.lv_speed),
                mean_spacing: mean(&segment.spacing),
                mean_fv_time_gap: mean(&segment.fv_time_gap),
            },
        };
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_segments_jsonl<R: std::io::BufRead>(input: R) -> Result<Vec<CFSegment>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
