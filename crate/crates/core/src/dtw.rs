//! Dynamic time warping over scalar series and DTW-based segment pairing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extraction::{CFSegment, FvLabel};
use crate::trajectory::VehicleId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtwResult {
    /// Cumulative cost at the bottom-right cell.
    pub distance: f64,
    /// Cells on the optimal warping path, endpoints included.
    pub path_length: usize,
    pub normalized_distance: f64,
}

/// Full-matrix DTW with `d(x, y) = |x - y|`.
///
/// The optimal path is recovered by backtracking, preferring the diagonal,
/// then `(i - 1, j)`, then `(i, j - 1)` on ties.
pub fn dtw_distance(x: &[f64], y: &[f64]) -> Result<DtwResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::domain("DTW needs two non-empty sequences"));
    }
    let (n, m) = (x.len(), y.len());
    let mut cost = vec![0.0; n * m];
    let at = |i: usize, j: usize| i * m + j;
    for i in 0..n {
        for j in 0..m {
            let d = (x[i] - y[j]).abs();
            let best = match (i, j) {
                (0, 0) => 0.0_f64,
                (0, _) => cost[at(0, j - 1)],
                (_, 0) => cost[at(i - 1, 0)],
                _ => cost[at(i - 1, j - 1)]
                    .min(cost[at(i - 1, j)])
                    .min(cost[at(i, j - 1)]),
            };
            cost[at(i, j)] = d + best;
        }
    }

    let (mut i, mut j) = (n - 1, m - 1);
    let mut path_length = 1;
    while i > 0 || j > 0 {
        (i, j) = if i == 0 {
            (0, j - 1)
        } else if j == 0 {
            (i - 1, 0)
        } else {
            let diag = cost[at(i - 1, j - 1)];
            let up = cost[at(i - 1, j)];
            let left = cost[at(i, j - 1)];
            if diag <= up && diag <= left {
                (i - 1, j - 1)
            } else if up <= left {
                (i - 1, j)
            } else {
                (i, j - 1)
            }
        };
        path_length += 1;
    }

    let distance = cost[at(n - 1, m - 1)];
    Ok(DtwResult {
        distance,
        path_length,
        normalized_distance: distance / path_length as f64,
    })
}

/// A tailgated / gapped segment couple with similar LV speed profiles.
#[derive(Debug, Clone, Copy)]
pub struct SegmentPair<'a> {
    pub tailgated: &'a CFSegment,
    pub gapped: &'a CFSegment,
    pub dtw: DtwResult,
}

/// Greedy globally-ascending matching over a `rows x cols` cost matrix.
///
/// Returns `(row, col)` indices in acceptance order. Ties are broken by
/// row then column index.
pub fn greedy_match(costs: &[Vec<f64>], threshold: f64) -> Vec<(usize, usize)> {
    let mut candidates: Vec<(f64, usize, usize)> = costs
        .iter()
        .enumerate()
        .flat_map(|(r, row)| row.iter().enumerate().map(move |(c, d)| (*d, r, c)))
        .filter(|(d, _, _)| *d <= threshold)
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let cols = costs.first().map_or(0, Vec::len);
    let mut row_used = vec![false; costs.len()];
    let mut col_used = vec![false; cols];
    let mut out = Vec::new();
    for (_, r, c) in candidates {
        if !row_used[r] && !col_used[c] {
            row_used[r] = true;
            col_used[c] = true;
            out.push((r, c));
        }
    }
    out
}

/// Pairs tailgated with gapped segments by normalized DTW distance of their
/// LV speed profiles. Output is sorted by ascending distance.
pub fn pair_segments<'a>(
    tailgated_pool: &'a [CFSegment],
    gapped_pool: &'a [CFSegment],
    max_normalized_distance: f64,
) -> Result<Vec<SegmentPair<'a>>> {
    if !(max_normalized_distance > 0.0) {
        return Err(Error::Config("pairing threshold must be positive".into()));
    }
    let results: Vec<Vec<DtwResult>> = tailgated_pool
        .iter()
        .map(|t| {
            gapped_pool
                .iter()
                .map(|g| dtw_distance(&t.lv_speed, &g.lv_speed))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let costs: Vec<Vec<f64>> = results
        .iter()
        .map(|row| row.iter().map(|r| r.normalized_distance).collect())
        .collect();
    Ok(greedy_match(&costs, max_normalized_distance)
        .into_iter()
        .map(|(r, c)| SegmentPair {
            tailgated: &tailgated_pool[r],
            gapped: &gapped_pool[c],
            dtw: results[r][c],
        })
        .collect())
}

/// Splits a segment list into (tailgated, gapped) pools, dropping `Neither`.
pub fn split_pools(segments: &[CFSegment]) -> (Vec<CFSegment>, Vec<CFSegment>) {
    let pick = |label| {
        segments
            .iter()
            .filter(|s| s.label == label)
            .cloned()
            .collect::<Vec<_>>()
    };
    (pick(FvLabel::Tailgated), pick(FvLabel::Gapped))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SegmentKey {
    pub recording_id: i64,
    pub ego_id: VehicleId,
    pub frame_lo: i64,
}

impl From<&CFSegment> for SegmentKey {
    fn from(s: &CFSegment) -> Self {
        Self {
            recording_id: s.recording_id,
            ego_id: s.ego_id,
            frame_lo: s.frame_lo,
        }
    }
}

/// Serialized form of a [`SegmentPair`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub tailgated: SegmentKey,
    pub gapped: SegmentKey,
    pub dtw: DtwResult,
}

impl From<&SegmentPair<'_>> for PairRecord {
    fn from(p: &SegmentPair<'_>) -> Self {
        Self {
            tailgated: p.tailgated.into(),
            gapped: p.gapped.into(),
            dtw: p.dtw,
        }
    }
}

/// Re-links pair records to the segments they name.
pub fn resolve_pairs<'a>(
    records: &[PairRecord],
    segments: &'a [CFSegment],
) -> Result<Vec<SegmentPair<'a>>> {
    let find = |key: &SegmentKey| {
        segments
            .iter()
            .find(|s| SegmentKey::from(*s) == *key)
            .ok_or_else(|| Error::domain(format!("pair references unknown segment {key:?}")))
    };
    records
        .iter()
        .map(|r| {
            Ok(SegmentPair {
                tailgated: find(&r.tailgated)?,
                gapped: find(&r.gapped)?,
                dtw: r.dtw,
            })
        })
        .collect()
}
