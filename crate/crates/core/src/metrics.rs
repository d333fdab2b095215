//! Speed-fluctuation and safety metrics, paired t-tests, and the
//! tailgated-vs-gapped comparison table.

use serde::{Deserialize, Serialize};

use crate::dtw::SegmentPair;
use crate::error::{Error, Result};
use crate::extraction::CFSegment;
use crate::stats::student_t_two_tailed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationMetrics {
    /// Sample standard deviation of speed (m/s).
    pub std: f64,
    /// Mean absolute deviation from the mean (m/s).
    pub dmean: f64,
    /// Coefficient of variation (%).
    pub cv: f64,
    /// Sample standard deviation of percent log-returns.
    pub vf: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SafetyMetrics {
    pub mean_thw: f64,
    pub mean_drac: f64,
    pub max_drac: f64,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample (n - 1) standard deviation; 0 for fewer than two values.
fn sample_sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

pub fn speed_fluctuation_metrics(speeds: &[f64]) -> Result<FluctuationMetrics> {
    if speeds.len() < 2 {
        return Err(Error::domain(
            "fluctuation metrics need at least two speeds",
        ));
    }
    if let Some(v) = speeds.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::domain(format!("speed {v} is not positive")));
    }
    let m = mean(speeds);
    let std = sample_sd(speeds);
    let dmean = speeds.iter().map(|v| (v - m).abs()).sum::<f64>() / speeds.len() as f64;
    let returns: Vec<f64> = speeds
        .windows(2)
        .map(|w| (w[1] / w[0]).ln() * 100.0)
        .collect();
    Ok(FluctuationMetrics {
        std,
        dmean,
        cv: std / m.abs() * 100.0,
        vf: sample_sd(&returns),
    })
}

/// Deceleration needed to avoid a crash; zero unless the follower is closing in.
pub fn drac(ego_speed: f64, lv_speed: f64, spacing: f64, lv_length: f64) -> f64 {
    if ego_speed > lv_speed {
        (ego_speed - lv_speed).powi(2) / (2.0 * (spacing - lv_length))
    } else {
        0.0
    }
}

pub fn safety_metrics(segment: &CFSegment) -> Result<SafetyMetrics> {
    if segment.is_empty() {
        return Err(Error::domain("empty segment"));
    }
    let n = segment.len();
    let mut thw_sum = 0.0;
    let mut drac_sum = 0.0;
    let mut drac_max = 0.0_f64;
    for k in 0..n {
        let (ve, vl, dy) = (
            segment.ego_speed[k],
            segment.lv_speed[k],
            segment.spacing[k],
        );
        if dy - segment.lv_length <= 0.0 {
            return Err(Error::domain(format!(
                "non-positive bumper gap at frame {}",
                segment.frame_lo + k as i64
            )));
        }
        if ve <= 0.0 {
            return Err(Error::domain(format!(
                "non-positive ego speed at frame {}",
                segment.frame_lo + k as i64
            )));
        }
        thw_sum += dy / ve;
        let d = drac(ve, vl, dy, segment.lv_length);
        drac_sum += d;
        drac_max = drac_max.max(d);
    }
    Ok(SafetyMetrics {
        mean_thw: thw_sum / n as f64,
        mean_drac: drac_sum / n as f64,
        max_drac: drac_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub t_stat: f64,
    pub df: usize,
    pub p_value: f64,
    pub mean_delta_pct: f64,
    /// All differences equal and non-zero: t is infinite.
    pub degenerate: bool,
}

/// Two-tailed paired t-test of `a` against `b`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTestResult> {
    if a.len() != b.len() {
        return Err(Error::domain(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::domain("paired t-test needs at least two pairs"));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let md = mean(&d);
    let sd = sample_sd(&d);
    let (ma, mb) = (mean(a), mean(b));
    let mean_delta_pct = if ma == mb {
        0.0
    } else {
        (ma - mb) / mb * 100.0
    };
    let df = n - 1;
    let (t_stat, p_value, degenerate) = if sd == 0.0 {
        if md == 0.0 {
            (0.0, 1.0, false)
        } else {
            (md.signum() * f64::INFINITY, 0.0, true)
        }
    } else {
        let t = md / (sd / (n as f64).sqrt());
        (t, student_t_two_tailed(t, df as f64), false)
    };
    Ok(PairedTestResult {
        t_stat,
        df,
        p_value,
        mean_delta_pct,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub sd: f64,
}

impl PopulationStats {
    fn of(xs: &[f64]) -> Self {
        Self {
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            mean: mean(xs),
            sd: sample_sd(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub metric: String,
    pub unit: String,
    pub tailgated: PopulationStats,
    pub gapped: PopulationStats,
    pub delta_pct: f64,
    /// Absent with fewer than two pairs.
    pub test: Option<PairedTestResult>,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub n_pairs: usize,
    pub rows: Vec<MetricRow>,
}

/// Per-segment values of all six compared metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentMetrics {
    pub fluctuation: FluctuationMetrics,
    pub safety: SafetyMetrics,
}

impl SegmentMetrics {
    pub fn of(segment: &CFSegment) -> Result<Self> {
        Ok(Self {
            fluctuation: speed_fluctuation_metrics(&segment.ego_speed)?,
            safety: safety_metrics(segment)?,
        })
    }

    fn values(&self) -> [f64; 6] {
        [
            self.fluctuation.std,
            self.fluctuation.dmean,
            self.fluctuation.cv,
            self.fluctuation.vf,
            self.safety.mean_thw,
            self.safety.mean_drac,
        ]
    }
}

pub const METRIC_NAMES: [(&str, &str); 6] = [
    ("V_sd", "m/s"),
    ("D_mean", "m/s"),
    ("C_v", "%"),
    ("V_f", "%"),
    ("Mean THW", "s"),
    ("Mean DRAC", "m/s^2"),
];

pub fn build_comparison_table(pairs: &[SegmentPair<'_>]) -> Result<ComparisonTable> {
    if pairs.is_empty() {
        return Err(Error::domain("comparison table needs at least one pair"));
    }
    let per_pair: Vec<([f64; 6], [f64; 6])> = pairs
        .iter()
        .map(|p| {
            Ok((
                SegmentMetrics::of(p.tailgated)?.values(),
                SegmentMetrics::of(p.gapped)?.values(),
            ))
        })
        .collect::<Result<_>>()?;
    table_from_values(&per_pair)
}

/// Table from per-pair `(tailgated, gapped)` metric vectors.
pub fn table_from_values(per_pair: &[([f64; 6], [f64; 6])]) -> Result<ComparisonTable> {
    let rows = METRIC_NAMES
        .iter()
        .enumerate()
        .map(|(k, (metric, unit))| {
            let t: Vec<f64> = per_pair.iter().map(|(a, _)| a[k]).collect();
            let g: Vec<f64> = per_pair.iter().map(|(_, b)| b[k]).collect();
            let (tailgated, gapped) = (PopulationStats::of(&t), PopulationStats::of(&g));
            let test = if per_pair.len() >= 2 {
                Some(paired_t_test(&t, &g)?)
            } else {
                None
            };
            let delta_pct = if tailgated.mean == gapped.mean {
                0.0
            } else {
                (tailgated.mean - gapped.mean) / gapped.mean * 100.0
            };
            Ok(MetricRow {
                metric: metric.to_string(),
                unit: unit.to_string(),
                tailgated,
                gapped,
                delta_pct,
                significant: test.is_some_and(|r| r.p_value < 0.05),
                test,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ComparisonTable {
        n_pairs: per_pair.len(),
        rows,
    })
}

impl ComparisonTable {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "metric",
            "unit",
            "tailgated_max",
            "tailgated_min",
            "tailgated_mean",
            "tailgated_sd",
            "gapped_max",
            "gapped_min",
            "gapped_mean",
            "gapped_sd",
            "delta_pct",
            "t_stat",
            "df",
            "p_value",
            "significant",
        ])?;
        let fmt = |x: f64| x.to_string();
        for r in &self.rows {
            let (t, df, p) = match &r.test {
                Some(test) => (fmt(test.t_stat), test.df.to_string(), fmt(test.p_value)),
                None => (String::new(), String::new(), String::new()),
            };
            w.write_record([
                r.metric.clone(),
                r.unit.clone(),
                fmt(r.tailgated.max),
                fmt(r.tailgated.min),
                fmt(r.tailgated.mean),
                fmt(r.tailgated.sd),
                fmt(r.gapped.max),
                fmt(r.gapped.min),
                fmt(r.gapped.mean),
                fmt(r.gapped.sd),
                fmt(r.delta_pct),
                t,
                df,
                p,
                (if r.significant { "*" } else { "" }).to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
