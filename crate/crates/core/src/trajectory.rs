//! highD-format recording ingest.
//!
//! A recording is three CSV files: per-frame track rows, per-track metadata
//! and recording metadata. Positions are converted at load time from the
//! bounding-box corner that highD stores to the front bumper along the
//! vehicle's travel direction, so that headway and spacing are measured
//! head to head.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type VehicleId = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub recording_id: i64,
    pub frame_rate_hz: f64,
    pub duration_s: f64,
    pub location_id: i64,
}

impl RecordingMeta {
    pub fn dt(&self) -> f64 {
        1.0 / self.frame_rate_hz
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackFrame {
    pub frame: i64,
    /// Front-bumper longitudinal position (m).
    pub x: f64,
    /// Lateral position of the bounding-box reference corner (m).
    pub y: f64,
    pub speed: f64,
    pub accel: f64,
    pub lane_id: i64,
    pub preceding_id: Option<VehicleId>,
    pub following_id: Option<VehicleId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track {
    pub vehicle_id: VehicleId,
    /// Longitudinal extent (highD `width`).
    pub length: f64,
    /// Lateral extent (highD `height`).
    pub width: f64,
    pub frames: Vec<TrackFrame>,
}

impl Track {
    pub fn first_frame(&self) -> i64 {
        self.frames[0].frame
    }

    pub fn last_frame(&self) -> i64 {
        self.frames[self.frames.len() - 1].frame
    }

    /// Frame record at absolute frame index, if covered by this track.
    pub fn at(&self, frame: i64) -> Option<&TrackFrame> {
        let offset = frame.checked_sub(self.first_frame())?;
        usize::try_from(offset)
            .ok()
            .and_then(|i| self.frames.get(i))
    }

    pub fn mean_speed(&self) -> f64 {
        self.frames.iter().map(|f| f.speed).sum::<f64>() / self.frames.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesField {
    X,
    Speed,
    Accel,
}

/// One recording and all its tracks, ordered by vehicle id.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordingBundle {
    pub meta: RecordingMeta,
    pub tracks: Vec<Track>,
}

impl RecordingBundle {
    pub fn track(&self, id: VehicleId) -> Option<&Track> {
        self.tracks
            .binary_search_by_key(&id, |t| t.vehicle_id)
            .ok()
            .map(|i| &self.tracks[i])
    }
}

/// Paths of the three files making up one recording.
#[derive(Debug, Clone)]
pub struct RecordingPaths {
    pub tracks: PathBuf,
    pub tracks_meta: PathBuf,
    pub recording_meta: PathBuf,
}

impl RecordingPaths {
    /// highD naming convention: `XX_tracks.csv`, `XX_tracksMeta.csv`, `XX_recordingMeta.csv`.
    pub fn in_dir(dir: &Path, prefix: &str) -> Self {
        Self {
            tracks: dir.join(format!("{prefix}_tracks.csv")),
            tracks_meta: dir.join(format!("{prefix}_tracksMeta.csv")),
            recording_meta: dir.join(format!("{prefix}_recordingMeta.csv")),
        }
    }
}

const TRACK_COLUMNS: [&str; 11] = [
    "frame",
    "id",
    "x",
    "y",
    "width",
    "height",
    "xVelocity",
    "xAcceleration",
    "laneId",
    "precedingId",
    "followingId",
];

/// Column lookup over a CSV header plus typed field access with located errors.
struct Columns<'a> {
    path: &'a Path,
    index: BTreeMap<String, usize>,
}

impl<'a> Columns<'a> {
    fn new(path: &'a Path, headers: &csv::StringRecord) -> Self {
        let index = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        Self { path, index }
    }

    fn require(&self, names: &[&str]) -> Result<()> {
        match names.iter().find(|n| !self.index.contains_key(**n)) {
            Some(missing) => Err(Error::Schema {
                path: self.path.to_path_buf(),
                column: missing.to_string(),
            }),
            None => Ok(()),
        }
    }

    fn get<T: std::str::FromStr>(
        &self,
        record: &csv::StringRecord,
        row: usize,
        column: &str,
    ) -> Result<T> {
        let raw = record.get(self.index[column]).unwrap_or("").trim();
        raw.parse().map_err(|_| Error::Parse {
            path: self.path.to_path_buf(),
            column: column.to_string(),
            row,
            value: raw.to_string(),
        })
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .flexible(false)
        .from_path(path)?)
}

fn neighbour(id: i64) -> Option<VehicleId> {
    if id <= 0 {
        None
    } else {
        Some(id as VehicleId)
    }
}

/// Loads one highD recording. Tracks are returned in raw travel direction;
/// see [`normalize_direction`].
pub fn load_recording(
    tracks_path: &Path,
    tracks_meta_path: &Path,
    recording_meta_path: &Path,
) -> Result<RecordingBundle> {
    let meta = load_recording_meta(recording_meta_path)?;
    let known_ids = load_track_ids(tracks_meta_path)?;
    let file = std::fs::File::open(tracks_path)?;
    let tracks = read_tracks(tracks_path, file)?;
    if let Some(t) = tracks
        .iter()
        .find(|t| !known_ids.contains_key(&t.vehicle_id))
    {
        return Err(Error::Integrity {
            vehicle_id: t.vehicle_id,
            detail: format!("absent from {}", tracks_meta_path.display()),
        });
    }
    Ok(RecordingBundle { meta, tracks })
}

pub fn load_recording_paths(paths: &RecordingPaths) -> Result<RecordingBundle> {
    load_recording(&paths.tracks, &paths.tracks_meta, &paths.recording_meta)
}

fn load_recording_meta(path: &Path) -> Result<RecordingMeta> {
    let mut rdr = open_csv(path)?;
    let cols = Columns::new(path, rdr.headers()?);
    cols.require(&["id", "frameRate", "locationId", "duration"])?;
    let record = rdr
        .records()
        .next()
        .ok_or_else(|| Error::domain(format!("{}: no data row", path.display())))??;
    let meta = RecordingMeta {
        recording_id: cols.get(&record, 1, "id")?,
        frame_rate_hz: cols.get(&record, 1, "frameRate")?,
        duration_s: cols.get(&record, 1, "duration")?,
        location_id: cols.get(&record, 1, "locationId")?,
    };
    if !(meta.frame_rate_hz > 0.0) || !(meta.duration_s > 0.0) {
        return Err(Error::domain(format!(
            "{}: frame rate and duration must be positive",
            path.display()
        )));
    }
    Ok(meta)
}

/// Vehicle id -> number of frames declared in tracksMeta.
fn load_track_ids(path: &Path) -> Result<BTreeMap<VehicleId, Option<usize>>> {
    let mut rdr = open_csv(path)?;
    let cols = Columns::new(path, rdr.headers()?);
    cols.require(&["id"])?;
    let has_count = cols.index.contains_key("numFrames");
    let mut ids = BTreeMap::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let id: VehicleId = cols.get(&record, row + 1, "id")?;
        let n = if has_count {
            Some(cols.get(&record, row + 1, "numFrames")?)
        } else {
            None
        };
        ids.insert(id, n);
    }
    Ok(ids)
}

struct RawRow {
    frame: i64,
    x: f64,
    y: f64,
    length: f64,
    width: f64,
    vx: f64,
    ax: f64,
    lane: i64,
    preceding: i64,
    following: i64,
}

fn read_tracks<R: Read>(path: &Path, reader: R) -> Result<Vec<Track>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .comment(Some(b'#'))
        .from_reader(reader);
    let cols = Columns::new(path, rdr.headers()?);
    cols.require(&TRACK_COLUMNS)?;

    let mut by_id: BTreeMap<VehicleId, Vec<RawRow>> = BTreeMap::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let row = row + 1;
        let id: VehicleId = cols.get(&record, row, "id")?;
        by_id.entry(id).or_default().push(RawRow {
            frame: cols.get(&record, row, "frame")?,
            x: cols.get(&record, row, "x")?,
            y: cols.get(&record, row, "y")?,
            length: cols.get(&record, row, "width")?,
            width: cols.get(&record, row, "height")?,
            vx: cols.get(&record, row, "xVelocity")?,
            ax: cols.get(&record, row, "xAcceleration")?,
            lane: cols.get(&record, row, "laneId")?,
            preceding: cols.get(&record, row, "precedingId")?,
            following: cols.get(&record, row, "followingId")?,
        });
    }

    by_id
        .into_iter()
        .map(|(id, mut rows)| {
            rows.sort_by_key(|r| r.frame);
            build_track(id, rows)
        })
        .collect()
}

fn build_track(vehicle_id: VehicleId, rows: Vec<RawRow>) -> Result<Track> {
    let integrity = |detail: String| Error::Integrity { vehicle_id, detail };
    for pair in rows.windows(2) {
        if pair[1].frame != pair[0].frame + 1 {
            return Err(integrity(format!(
                "non-contiguous frames {} -> {}",
                pair[0].frame, pair[1].frame
            )));
        }
    }
    let length = rows[0].length;
    if !(length > 0.0) {
        return Err(integrity(format!("non-positive length {length}")));
    }
    if let Some(r) = rows.iter().find(|r| !r.vx.is_finite()) {
        return Err(integrity(format!(
            "non-finite velocity at frame {}",
            r.frame
        )));
    }
    let forward = rows.iter().map(|r| r.vx).sum::<f64>() >= 0.0;
    let frames = rows
        .iter()
        .map(|r| TrackFrame {
            frame: r.frame,
            x: if forward { r.x + length } else { r.x },
            y: r.y,
            speed: r.vx,
            accel: r.ax,
            lane_id: r.lane,
            preceding_id: neighbour(r.preceding),
            following_id: neighbour(r.following),
        })
        .collect();
    Ok(Track {
        vehicle_id,
        length,
        width: rows[0].width,
        frames,
    })
}

/// Mirrors every backward-travelling track so that forward motion is
/// positive-x for all vehicles. Already-forward tracks are untouched.
pub fn normalize_direction(bundle: RecordingBundle) -> Result<RecordingBundle> {
    let stalled: Vec<VehicleId> = bundle
        .tracks
        .iter()
        .filter(|t| t.mean_speed() == 0.0)
        .map(|t| t.vehicle_id)
        .collect();
    if !stalled.is_empty() {
        return Err(Error::AmbiguousDirection(stalled));
    }
    if bundle.tracks.iter().all(|t| t.mean_speed() > 0.0) {
        return Ok(bundle);
    }
    let x_max = bundle
        .tracks
        .iter()
        .flat_map(|t| t.frames.iter().map(|f| f.x))
        .fold(f64::NEG_INFINITY, f64::max);
    let RecordingBundle { meta, mut tracks } = bundle;
    for track in tracks.iter_mut().filter(|t| t.mean_speed() < 0.0) {
        for f in &mut track.frames {
            f.x = x_max - f.x;
            f.speed = -f.speed;
            f.accel = -f.accel;
        }
    }
    Ok(RecordingBundle { meta, tracks })
}

/// Values of `field` for frames `frame_lo..=frame_hi`.
pub fn slice_series(
    track: &Track,
    frame_lo: i64,
    frame_hi: i64,
    field: SeriesField,
) -> Result<Vec<f64>> {
    let (first, last) = (track.first_frame(), track.last_frame());
    if frame_lo > frame_hi || frame_lo < first || frame_hi > last {
        return Err(Error::Range {
            lo: frame_lo,
            hi: frame_hi,
            first,
            last,
        });
    }
    let lo = (frame_lo - first) as usize;
    let hi = (frame_hi - first) as usize;
    Ok(track.frames[lo..=hi]
        .iter()
        .map(|f| match field {
            SeriesField::X => f.x,
            SeriesField::Speed => f.speed,
            SeriesField::Accel => f.accel,
        })
        .collect())
}

const TRACKS_HEADER: [&str; 25] = [
    "frame",
    "id",
    "x",
    "y",
    "width",
    "height",
    "xVelocity",
    "yVelocity",
    "xAcceleration",
    "yAcceleration",
    "frontSightDistance",
    "backSightDistance",
    "dhw",
    "thw",
    "ttc",
    "precedingXVelocity",
    "precedingId",
    "followingId",
    "leftPrecedingId",
    "leftAlongsideId",
    "leftFollowingId",
    "rightPrecedingId",
    "rightAlongsideId",
    "rightFollowingId",
    "laneId",
];

/// Writes a bundle in the highD three-file layout. Columns this toolkit
/// does not model are written as 0; `comments` become leading `#` lines.
pub fn write_recording(
    bundle: &RecordingBundle,
    paths: &RecordingPaths,
    comments: &[String],
) -> Result<()> {
    let create = |path: &Path| -> Result<std::fs::File> {
        let mut f = std::fs::File::create(path)?;
        for c in comments {
            writeln!(f, "# {c}")?;
        }
        Ok(f)
    };
    write_tracks(bundle, std::io::BufWriter::new(create(&paths.tracks)?))?;

    let mut w = csv::Writer::from_writer(create(&paths.tracks_meta)?);
    w.write_record([
        "id",
        "width",
        "height",
        "initialFrame",
        "finalFrame",
        "numFrames",
        "class",
        "drivingDirection",
        "traveledDistance",
        "minXVelocity",
        "maxXVelocity",
        "meanXVelocity",
    ])?;
    for t in &bundle.tracks {
        let speeds = t.frames.iter().map(|f| f.speed);
        let min_v = speeds.clone().fold(f64::INFINITY, f64::min);
        let max_v = speeds.fold(f64::NEG_INFINITY, f64::max);
        let mean_v = t.mean_speed();
        let travelled = (t.frames[t.frames.len() - 1].x - t.frames[0].x).abs();
        let class = if t.length > 7.0 { "Truck" } else { "Car" };
        w.write_record([
            t.vehicle_id.to_string(),
            t.length.to_string(),
            t.width.to_string(),
            t.first_frame().to_string(),
            t.last_frame().to_string(),
            t.frames.len().to_string(),
            class.to_string(),
            (if mean_v >= 0.0 { 2 } else { 1 }).to_string(),
            travelled.to_string(),
            min_v.to_string(),
            max_v.to_string(),
            mean_v.to_string(),
        ])?;
    }
    w.flush()?;

    let m = &bundle.meta;
    let mut w = csv::Writer::from_writer(create(&paths.recording_meta)?);
    w.write_record([
        "id",
        "frameRate",
        "locationId",
        "speedLimit",
        "duration",
        "numVehicles",
    ])?;
    w.write_record([
        m.recording_id.to_string(),
        m.frame_rate_hz.to_string(),
        m.location_id.to_string(),
        "-1".to_string(),
        m.duration_s.to_string(),
        bundle.tracks.len().to_string(),
    ])?;
    w.flush()?;
    Ok(())
}

fn write_tracks<W: Write>(bundle: &RecordingBundle, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACKS_HEADER)?;
    let mut rows: Vec<(i64, VehicleId, Vec<String>)> = Vec::new();
    for t in &bundle.tracks {
        let forward = t.frames.iter().map(|f| f.speed).sum::<f64>() >= 0.0;
        for f in &t.frames {
            let corner_x = if forward { f.x - t.length } else { f.x };
            let id_or_zero = |id: Option<VehicleId>| id.unwrap_or(0).to_string();
            let mut row = vec![
                f.frame.to_string(),
                t.vehicle_id.to_string(),
                corner_x.to_string(),
                f.y.to_string(),
                t.length.to_string(),
                t.width.to_string(),
                f.speed.to_string(),
                "0".to_string(),
                f.accel.to_string(),
                "0".to_string(),
            ];
            row.extend(std::iter::repeat_n("0".to_string(), 6));
            row.push(id_or_zero(f.preceding_id));
            row.push(id_or_zero(f.following_id));
            row.extend(std::iter::repeat_n("0".to_string(), 6));
            row.push(f.lane_id.to_string());
            rows.push((f.frame, t.vehicle_id, row));
        }
    }
    // highD orders rows by vehicle then frame.
    rows.sort_by_key(|(frame, id, _)| (*id, *frame));
    for (_, _, row) in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
