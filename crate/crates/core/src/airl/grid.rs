use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Discriminator;
use crate::env::CFState;
use crate::error::{Error, Result};

/// Evenly binned interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub bins: usize,
}

impl GridAxis {
    pub fn new(name: impl Into<String>, (lo, hi): (f64, f64), bins: usize) -> Result<Self> {
        if bins < 2 || !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::domain(format!(
                "invalid axis [{lo}, {hi}] with {bins} bins"
            )));
        }
        Ok(Self {
            name: name.into(),
            lo,
            hi,
            bins,
        })
    }

    pub fn width(&self) -> f64 {
        (self.hi - self.lo) / self.bins as f64
    }

    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.width()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins).map(|k| self.center(k)).collect()
    }

    /// Bin index of `x`; the upper edge belongs to the last bin.
    pub fn bin_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        Some((((x - self.lo) / self.width()) as usize).min(self.bins - 1))
    }
}

/// Row-major grid with optional cells; `None` marks an invalid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardGrid {
    pub rows: GridAxis,
    pub cols: GridAxis,
    /// Free-form `key=value` annotations, e.g. the fixed LV speed.
    pub meta: Vec<(String, String)>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl RewardGrid {
    pub fn from_fn(
        rows: GridAxis,
        cols: GridAxis,
        mut f: impl FnMut(f64, f64) -> Option<f64>,
    ) -> Self {
        let cells = rows
            .centers()
            .into_iter()
            .map(|r| cols.centers().into_iter().map(|c| f(r, c)).collect())
            .collect();
        Self {
            rows,
            cols,
            meta: Vec::new(),
            cells,
        }
    }

    /// Columns with at least one strictly positive valid cell.
    pub fn positive_columns(&self) -> Vec<usize> {
        (0..self.cols.bins)
            .filter(|&c| self.cells.iter().any(|row| row[c].is_some_and(|v| v > 0.0)))
            .collect()
    }

    /// Mean of the valid cells of each column, `None` for an all-invalid one.
    pub fn column_means(&self) -> Vec<Option<f64>> {
        (0..self.cols.bins)
            .map(|c| {
                let vals: Vec<f64> = self.cells.iter().filter_map(|row| row[c]).collect();
                (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
            })
            .collect()
    }

    /// Column with the highest valid-cell mean.
    pub fn argmax_column(&self) -> Option<usize> {
        self.column_means()
            .into_iter()
            .enumerate()
            .filter_map(|(c, m)| m.map(|m| (c, m)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(c, _)| c)
    }

    /// CSV with a header row of column centers and a leading column of row
    /// centers. Invalid cells are empty fields; `comments` become `#` lines.
    pub fn write_csv(&self, path: &Path, comments: &[String]) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        for (k, v) in &self.meta {
            writeln!(out, "#@ {k}={v}")?;
        }
        for (tag, a) in [("rows", &self.rows), ("cols", &self.cols)] {
            writeln!(out, "#@ {tag}={},{:?},{:?},{}", a.name, a.lo, a.hi, a.bins)?;
        }
        let mut header = format!("{}\\{}", self.rows.name, self.cols.name);
        for c in self.cols.centers() {
            header.push_str(&format!(",{c:?}"));
        }
        writeln!(out, "{header}")?;
        for (r, row) in self.rows.centers().into_iter().zip(&self.cells) {
            let mut line = format!("{r:?}");
            for v in row {
                line.push(',');
                if let Some(v) = v {
                    line.push_str(&format!("{v:?}"));
                }
            }
            writeln!(out, "{line}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let bad = |m: String| Error::Config(format!("{}: {m}", path.display()));
        let reader = BufReader::new(File::open(path)?);
        let mut meta = Vec::new();
        let (mut rows, mut cols) = (None, None);
        let mut body = Vec::new();
        for line in reader.lines() {
            let line = line?;
            if let Some(kv) = line.strip_prefix("#@ ") {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| bad(format!("bad metadata line '{line}'")))?;
                match k {
                    "rows" => {
                        rows = Some(parse_axis(v).ok_or_else(|| bad(format!("bad axis '{v}'")))?)
                    }
                    "cols" => {
                        cols = Some(parse_axis(v).ok_or_else(|| bad(format!("bad axis '{v}'")))?)
                    }
                    _ => meta.push((k.to_string(), v.to_string())),
                }
            } else if !line.starts_with('#') && !line.is_empty() {
                body.push(line);
            }
        }
        let (rows, cols) = rows
            .zip(cols)
            .ok_or_else(|| bad("missing axis metadata".into()))?;
        if body.len() != rows.bins + 1 {
            return Err(bad(format!(
                "expected {} lines, found {}",
                rows.bins + 1,
                body.len()
            )));
        }
        let cells = body[1..]
            .iter()
            .map(|line| {
                let fields: Vec<&str> = line.split(',').collect();
                if fields.len() != cols.bins + 1 {
                    return Err(bad(format!("ragged row '{line}'")));
                }
                fields[1..]
                    .iter()
                    .map(|f| {
                        if f.is_empty() {
                            Ok(None)
                        } else {
                            f.parse()
                                .map(Some)
                                .map_err(|_| bad(format!("bad cell '{f}'")))
                        }
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            rows,
            cols,
            meta,
            cells,
        })
    }
}

fn parse_axis(v: &str) -> Option<GridAxis> {
    let p: Vec<&str> = v.split(',').collect();
    if p.len() != 4 {
        return None;
    }
    GridAxis::new(
        p[0],
        (p[1].parse().ok()?, p[2].parse().ok()?),
        p[3].parse().ok()?,
    )
    .ok()
}

/// `g` over (relative speed, spacing) bin centers at a fixed LV speed.
///
/// Rows are relative-speed bins, columns are spacing bins. The ego speed at
/// a cell is `v_l - dv`; cells where it is negative are left invalid.
pub fn reward_grid(
    disc: &Discriminator,
    v_l_fixed: f64,
    bins: usize,
    dy_range: (f64, f64),
    dv_range: (f64, f64),
) -> Result<RewardGrid> {
    reward_grid_with(|s| disc.reward(s), v_l_fixed, bins, dy_range, dv_range)
}

pub fn reward_grid_with(
    reward: impl Fn(&CFState) -> f64,
    v_l_fixed: f64,
    bins: usize,
    dy_range: (f64, f64),
    dv_range: (f64, f64),
) -> Result<RewardGrid> {
    if !(v_l_fixed.is_finite() && v_l_fixed >= 0.0) {
        return Err(Error::domain(format!("invalid fixed LV speed {v_l_fixed}")));
    }
    let rows = GridAxis::new("dv_le", dv_range, bins)?;
    let cols = GridAxis::new("dy_le", dy_range, bins)?;
    let mut grid = RewardGrid::from_fn(rows, cols, |dv, dy| {
        let v_e = v_l_fixed - dv;
        (v_e >= 0.0).then(|| reward(&CFState::new(dy, v_e, v_l_fixed)))
    });
    grid.meta.push(("v_l".into(), format!("{v_l_fixed:?}")));
    Ok(grid)
}

/// Raw 2-D histogram counts; points outside either axis are dropped.
pub fn histogram_2d(
    points: impl IntoIterator<Item = (f64, f64)>,
    rows: GridAxis,
    cols: GridAxis,
) -> RewardGrid {
    let mut counts = vec![vec![0u64; cols.bins]; rows.bins];
    for (r, c) in points {
        if let (Some(i), Some(j)) = (rows.bin_of(r), cols.bin_of(c)) {
            counts[i][j] += 1;
        }
    }
    RewardGrid {
        cells: counts
            .into_iter()
            .map(|row| row.into_iter().map(|n| Some(n as f64)).collect())
            .collect(),
        rows,
        cols,
        meta: Vec::new(),
    }
}
