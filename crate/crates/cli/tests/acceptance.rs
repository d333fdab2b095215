//! End-to-end acceptance checks, one line per criterion.
//!
//! Runs without the libtest harness so the summary lines always print.
//! Set `CFPP_ACCEPTANCE=1,5,9` to run a subset.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use cfpp::config::RewardMapConfig;
use cfpp_core::airl::{
    architecture, auc, eval_episode_loss, evaluate_policy, expert_transitions, reward_grid,
    strided_episode, train_airl, PpoConfig, RewardGrid, RewardModel, TrainConfig,
};
use cfpp_core::dtw::{dtw_distance, split_pools};
use cfpp_core::env::{make_episode, step, CFState};
use cfpp_core::extraction::{detect_cf_segments, CFSegment, ExtractionCriteria, FvLabel};
use cfpp_core::fixtures::{generate_paired_set, FixtureConfig};
use cfpp_core::metrics::{paired_t_test, safety_metrics, speed_fluctuation_metrics};
use cfpp_core::nn::{grad_check, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() {
    let criteria = [
        Criterion {
            id: 1,
            name: "metric oracle equivalence",
            budget: Some(Duration::from_secs(1)),
            run: metric_oracle,
        },
        Criterion {
            id: 2,
            name: "DTW exactness",
            budget: Some(Duration::from_secs(30)),
            run: dtw_exactness,
        },
        Criterion {
            id: 3,
            name: "kinematic fidelity",
            budget: Some(Duration::from_secs(5)),
            run: kinematic_fidelity,
        },
        Criterion {
            id: 4,
            name: "gradient correctness",
            budget: Some(Duration::from_secs(30)),
            run: gradient_correctness,
        },
        Criterion {
            id: 5,
            name: "statistical correctness",
            budget: Some(Duration::from_secs(5)),
            run: statistical_correctness,
        },
        Criterion {
            id: 6,
            name: "synthetic reward recovery",
            budget: Some(Duration::from_secs(30 * 60)),
            run: synthetic_recovery,
        },
        Criterion {
            id: 7,
            name: "directional replication",
            budget: None,
            run: directional_replication,
        },
        Criterion {
            id: 8,
            name: "determinism",
            budget: Some(Duration::from_secs(30 * 60)),
            run: determinism,
        },
        Criterion {
            id: 9,
            name: "episode loss hand values",
            budget: None,
            run: episode_loss_values,
        },
    ];
    let selected: Option<Vec<u32>> = std::env::var("CFPP_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());

    let mut failed = 0;
    for c in criteria
        .iter()
        .filter(|c| selected.as_ref().is_none_or(|s| s.contains(&c.id)))
    {
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = t0.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(d), Some(b)) if elapsed > b => Err(format!("{d}; exceeded {:.0?} budget", b)),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!(
            "criterion {} {tag} {} ({:.2} s): {detail}",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

// ---- 1 ----

fn oracle_sd(xs: &[f64]) -> f64 {
    let mut sum = 0.0;
    for x in xs {
        sum += x;
    }
    let m = sum / xs.len() as f64;
    let mut ss = 0.0;
    for x in xs {
        ss += (x - m) * (x - m);
    }
    (ss / (xs.len() - 1) as f64).sqrt()
}

fn random_segment(rng: &mut ChaCha8Rng) -> CFSegment {
    let n = rng.random_range(5..60);
    let lv_length = rng.random_range(3.5..6.0);
    let ego_speed: Vec<f64> = (0..n).map(|_| rng.random_range(2.0..35.0)).collect();
    let lv_speed: Vec<f64> = ego_speed
        .iter()
        .map(|v| v + rng.random_range(-4.0..4.0))
        .collect();
    let spacing: Vec<f64> = (0..n)
        .map(|_| lv_length + rng.random_range(0.5..60.0))
        .collect();
    CFSegment {
        recording_id: 1,
        lv_id: 1,
        ego_id: 2,
        fv_id: 3,
        frame_lo: 0,
        frame_hi: n as i64 - 1,
        frame_rate_hz: 25.0,
        lane_id: 1,
        lv_length,
        label: FvLabel::Tailgated,
        rel_speed: lv_speed
            .iter()
            .zip(&ego_speed)
            .map(|(l, e)| l - e)
            .collect(),
        ego_accel: vec![0.0; n],
        fv_time_gap: vec![0.5; n],
        lv_speed,
        ego_speed,
        spacing,
    }
}

fn metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0_f64;
    let mut split_cases = [0usize; 2];
    for _ in 0..100 {
        let n = rng.random_range(2..200);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..40.0)).collect();
        let got = speed_fluctuation_metrics(&v).map_err(|e| e.to_string())?;
        let m = v.iter().sum::<f64>() / n as f64;
        let sd = oracle_sd(&v);
        let mut dev = 0.0;
        for x in &v {
            dev += (x - m).abs();
        }
        let mut returns = Vec::new();
        for k in 1..n {
            returns.push(100.0 * (v[k] / v[k - 1]).ln());
        }
        let vf = if returns.len() < 2 {
            0.0
        } else {
            oracle_sd(&returns)
        };
        for (a, b) in [
            (got.std, sd),
            (got.dmean, dev / n as f64),
            (got.cv, 100.0 * sd / m),
            (got.vf, vf),
        ] {
            worst = worst.max(rel_err(a, b));
        }

        let seg = random_segment(&mut rng);
        let got = safety_metrics(&seg).map_err(|e| e.to_string())?;
        let (mut thw, mut drac_sum, mut drac_max) = (0.0, 0.0, 0.0_f64);
        for k in 0..seg.len() {
            thw += seg.spacing[k] / seg.ego_speed[k];
            let closing = seg.ego_speed[k] - seg.lv_speed[k];
            let d = if seg.ego_speed[k] <= seg.lv_speed[k] {
                split_cases[0] += 1;
                0.0
            } else {
                split_cases[1] += 1;
                closing * closing / (2.0 * (seg.spacing[k] - seg.lv_length))
            };
            drac_sum += d;
            drac_max = drac_max.max(d);
        }
        let nf = seg.len() as f64;
        for (a, b) in [
            (got.mean_thw, thw / nf),
            (got.mean_drac, drac_sum / nf),
            (got.max_drac, drac_max),
        ] {
            worst = worst.max(rel_err(a, b));
        }
    }
    check(
        worst <= 1e-9 && split_cases.iter().all(|&c| c > 0),
        format!(
            "max relative error {worst:.2e} over 100 series and 100 segments ({} opening / {} closing frames)",
            split_cases[0], split_cases[1]
        ),
    )
}

// ---- 2 ----

fn brute_force_dtw(x: &[f64], y: &[f64]) -> f64 {
    fn walk(x: &[f64], y: &[f64], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + (x[i] - y[j]).abs();
        if i + 1 == x.len() && j + 1 == y.len() {
            *best = best.min(acc);
            return;
        }
        if i + 1 < x.len() && j + 1 < y.len() {
            walk(x, y, i + 1, j + 1, acc, best);
        }
        if i + 1 < x.len() {
            walk(x, y, i + 1, j, acc, best);
        }
        if j + 1 < y.len() {
            walk(x, y, i, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(x, y, 0, 0, 0.0, &mut best);
    best
}

fn dtw_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0;
    for _ in 0..500 {
        let (n, m) = (rng.random_range(1..=8), rng.random_range(1..=8));
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(-20.0..20.0)).collect();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-20.0..20.0)).collect();
        let got = dtw_distance(&x, &y).map_err(|e| e.to_string())?.distance;
        if got != brute_force_dtw(&x, &y) {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{mismatches} of 500 pairs differ from exhaustive path enumeration"),
    )
}

// ---- 3 ----

fn kinematic_fidelity() -> Outcome {
    let config = FixtureConfig {
        accel_noise: 0.3,
        ..FixtureConfig::default()
    };
    let criteria = ExtractionCriteria::default();
    let segments: Vec<CFSegment> = generate_paired_set(&config, 2, 3)
        .into_iter()
        .map(|b| cfpp_core::trajectory::normalize_direction(b).expect("fixture directions"))
        .flat_map(|b| detect_cf_segments(&b, &criteria))
        .collect();
    if segments.is_empty() {
        return Err("no fixture segments".into());
    }
    let (mut speed_err, mut pos_err, mut steps) = (0.0_f64, 0.0_f64, 0usize);
    for seg in &segments {
        let ep = make_episode(seg, 1.0 / seg.frame_rate_hz);
        let mut s = ep.initial;
        for k in 0..seg.len() - 1 {
            let tr = step(
                &s,
                seg.ego_accel[k],
                ep.dt,
                seg.lv_speed[k + 1],
                seg.lv_length,
            );
            speed_err =
                speed_err.max((tr.s_next.v_e - seg.ego_speed[k + 1]).abs() / seg.ego_speed[k + 1]);
            pos_err = pos_err.max((tr.s_next.dy_le - seg.spacing[k + 1]).abs());
            s = tr.s_next;
            steps += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut identity_err = 0.0_f64;
    for _ in 0..10_000 {
        let s = CFState::new(
            rng.random_range(2.0..120.0),
            rng.random_range(0.0..40.0),
            rng.random_range(0.0..40.0),
        );
        let a = rng.random_range(-8.0..5.0);
        let dt = rng.random_range(0.01..0.5);
        let v_l_next = rng.random_range(0.0..40.0);
        let tr = step(&s, a, dt, v_l_next, 4.5);
        let v_e_next = f64::max(0.0, s.v_e + a * dt);
        let y_l = 0.5 * (s.v_l + v_l_next) * dt;
        let y_e = 0.5 * (s.v_e + v_e_next) * dt;
        identity_err = identity_err
            .max((tr.s_next.v_e - v_e_next).abs())
            .max((tr.s_next.dv_le - (v_l_next - tr.s_next.v_e)).abs())
            .max((tr.s_next.dy_le - (s.dy_le + y_l - y_e)).abs() / s.dy_le.max(1.0))
            .max((tr.s_next.v_l - v_l_next).abs());
    }
    check(
        speed_err <= 4.0 * f64::EPSILON && pos_err <= 1e-6 && identity_err <= 1e-12,
        format!(
            "{steps} replayed steps over {} segments: speed rel err {speed_err:.1e}, spacing err {pos_err:.1e} m; \
             10000 random steps: identity err {identity_err:.1e}",
            segments.len()
        ),
    )
}

// ---- 4 ----

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let widths = architecture();
    let mut worst = 0.0_f64;
    for k in 0..50 {
        let mut net = Mlp::new(&widths, &mut rng);
        for p in net.params_mut() {
            *p += rng.random_range(-0.1..0.1);
        }
        let input: Vec<f64> = (0..widths[0])
            .map(|_| rng.random_range(-0.5..1.5))
            .collect();
        let target = rng.random_range(-1.0..1.0);
        let err = if k % 2 == 0 {
            grad_check(
                &net,
                &input,
                |o| (0.5 * (o[0] - target).powi(2), vec![o[0] - target]),
                1e-5,
            )
        } else {
            // logistic loss on the logit, as the discriminator uses
            let y = f64::from(u8::from(target > 0.0));
            grad_check(
                &net,
                &input,
                |o| {
                    let z = o[0];
                    let sp = z.max(0.0) + (-z.abs()).exp().ln_1p();
                    (sp - y * z, vec![1.0 / (1.0 + (-z).exp()) - y])
                },
                1e-5,
            )
        }
        .map_err(|e| e.to_string())?;
        worst = worst.max(err);
    }
    check(
        worst < 1e-4,
        format!("max relative error {worst:.2e} over 50 nets of widths {widths:?}"),
    )
}

// ---- 5 ----

/// Two-tailed Student t p-value by composite Simpson quadrature of the
/// density, with the gamma ratio built from its exact recurrence.
fn t_pvalue_oracle(t: f64, df: u32) -> f64 {
    let mut ratio = if df % 2 == 1 {
        1.0 / std::f64::consts::PI.sqrt()
    } else {
        std::f64::consts::PI.sqrt() / 2.0
    };
    let mut nu = if df % 2 == 1 { 1 } else { 2 };
    while nu < df {
        ratio *= (nu as f64 + 1.0) / nu as f64;
        nu += 2;
    }
    let nu = df as f64;
    let c = ratio / (nu * std::f64::consts::PI).sqrt();
    let density = |x: f64| c * (1.0 + x * x / nu).powf(-(nu + 1.0) / 2.0);
    let t = t.abs();
    let n = 200_000;
    let h = t / n as f64;
    let mut sum = density(0.0) + density(t);
    for k in 1..n {
        sum += density(k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    1.0 - 2.0 * sum * h / 3.0
}

fn statistical_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0_f64;
    let mut cases = 0;
    for df in 2..=50_u32 {
        for _ in 0..4 {
            let n = df as usize + 1;
            let shift = rng.random_range(-1.5..1.5);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(5.0..10.0)).collect();
            let b: Vec<f64> = a
                .iter()
                .map(|x| x - shift + rng.random_range(-2.0..2.0))
                .collect();
            let r = paired_t_test(&a, &b).map_err(|e| e.to_string())?;
            let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
            let md = d.iter().sum::<f64>() / n as f64;
            let t = md / (oracle_sd(&d) / (n as f64).sqrt());
            if r.df != df as usize || rel_err(r.t_stat, t) > 1e-9 {
                return Err(format!("df {df}: statistic {} vs {t}", r.t_stat));
            }
            worst = worst.max((r.p_value - t_pvalue_oracle(t, df)).abs());
            cases += 1;
        }
    }
    let a = [2.0, 3.0, 4.0, 5.0, 6.0];
    let b = [1.0; 5];
    let known = paired_t_test(&a, &b).map_err(|e| e.to_string())?;
    let known_err = (known.p_value - t_pvalue_oracle(known.t_stat, 4)).abs();
    worst = worst.max(known_err);
    check(
        worst <= 1e-6 && (known.t_stat - 4.24264).abs() < 1e-5 && (known.p_value - 0.0132).abs() < 5e-5,
        format!(
            "max |p - oracle| {worst:.1e} over {cases} tests, df 2..50; t = {:.5}, df 4 gives p = {:.5}",
            known.t_stat, known.p_value
        ),
    )
}

// ---- 6 and 7 ----

fn segments_of(config: &FixtureConfig, pairs: usize, seed: u64) -> Vec<CFSegment> {
    generate_paired_set(config, pairs, seed)
        .into_iter()
        .map(|b| cfpp_core::trajectory::normalize_direction(b).expect("fixture directions"))
        .flat_map(|b| detect_cf_segments(&b, &ExtractionCriteria::default()))
        .collect()
}

fn acceptance_training() -> TrainConfig {
    TrainConfig {
        epochs: 1500,
        seed: 7,
        frame_stride: 5,
        ppo: PpoConfig {
            steps_per_epoch: 512,
            ppo_epochs: 4,
            minibatch: 128,
            ..PpoConfig::default()
        },
        ..TrainConfig::default()
    }
}

fn grid_at(model: &RewardModel, v: f64) -> RewardGrid {
    let rm = RewardMapConfig::default();
    reward_grid(&model.disc, v, rm.bins, rm.dy_range(v), rm.dv_range).expect("valid grid axes")
}

fn synthetic_recovery() -> Outcome {
    const TARGET_GAP: f64 = 1.5;
    let config = FixtureConfig {
        tailgated_ego_gap: TARGET_GAP,
        ..FixtureConfig::default()
    };
    let expert = |segs: Vec<CFSegment>| -> Vec<CFSegment> {
        segs.into_iter()
            .filter(|s| s.label == FvLabel::Tailgated)
            .collect()
    };
    let train = expert(segments_of(&config, 6, 11));
    let held_out = expert(segments_of(&config, 2, 99));
    let cfg = acceptance_training();
    let (model, report) = train_airl(&train, &cfg).map_err(|e| e.to_string())?;
    if let Some((epoch, why)) = report.diverged {
        return Err(format!("diverged at epoch {epoch}: {why}"));
    }

    let episodes: Vec<_> = held_out
        .iter()
        .map(|s| strided_episode(s, cfg.frame_stride))
        .collect();
    let eval =
        evaluate_policy(&model.policy, &episodes, 20, 1, false).map_err(|e| e.to_string())?;
    let rmse_ratio = eval.speed_rmse / eval.mean_expert_speed;

    let positives: Vec<f64> = expert_transitions(&train, cfg.frame_stride)
        .iter()
        .map(|t| model.disc.reward(&t.s))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let negatives: Vec<f64> = (0..2000)
        .map(|_| {
            let v_e = rng.random_range(0.0..40.0);
            let s = CFState::new(
                rng.random_range(0.0..100.0),
                v_e,
                v_e + rng.random_range(-10.0..10.0),
            );
            model.disc.reward(&s)
        })
        .collect();
    let area = auc(&positives, &negatives);

    let lv: Vec<f64> = held_out
        .iter()
        .flat_map(|s| s.lv_speed.iter().copied())
        .collect();
    let v_eval = lv.iter().sum::<f64>() / lv.len() as f64;
    let grid = grid_at(&model, v_eval);
    let preferred = grid
        .cols
        .bin_of(TARGET_GAP * v_eval)
        .ok_or("preferred spacing off the grid")?;
    let argmax = grid.argmax_column().ok_or("empty grid")?;

    check(
        eval.collisions == 0 && rmse_ratio <= 0.10 && area >= 0.8 && argmax.abs_diff(preferred) <= 1,
        format!(
            "{} collisions in {} rollouts, speed RMSE {:.3} m/s = {:.1}% of {:.2} m/s, AUC {area:.3}, \
             argmax column {argmax} vs preferred {preferred} at {v_eval:.2} m/s",
            eval.collisions,
            eval.rollouts,
            eval.speed_rmse,
            100.0 * rmse_ratio,
            eval.mean_expert_speed
        ),
    )
}

fn directional_replication() -> Outcome {
    let segments = segments_of(&FixtureConfig::default(), 6, 21);
    let (short, long) = split_pools(&segments);
    if short.is_empty() || long.is_empty() {
        return Err("empty fixture population".into());
    }
    let mean_thw = |pool: &[CFSegment]| -> Result<f64, String> {
        let mut sum = 0.0;
        for s in pool {
            sum += safety_metrics(s).map_err(|e| e.to_string())?.mean_thw;
        }
        Ok(sum / pool.len() as f64)
    };
    let (thw_short, thw_long) = (mean_thw(&short)?, mean_thw(&long)?);

    let cfg = acceptance_training();
    let (m_short, _) = train_airl(&short, &cfg).map_err(|e| e.to_string())?;
    let (m_long, _) = train_airl(&long, &cfg).map_err(|e| e.to_string())?;
    let mut narrower = true;
    let mut per_speed = Vec::new();
    for v in RewardMapConfig::default().fixed_speeds {
        let (a, b) = (
            grid_at(&m_short, v).positive_columns().len(),
            grid_at(&m_long, v).positive_columns().len(),
        );
        narrower &= a < b;
        per_speed.push(format!("{v}: {a} vs {b}"));
    }
    check(
        narrower && thw_short < thw_long,
        format!(
            "positive spacing bins short vs long [{}]; mean THW {thw_short:.3} s vs {thw_long:.3} s",
            per_speed.join(", ")
        ),
    )
}

// ---- 8 ----

fn run_pipeline(out: &Path, config: &Path) -> Result<(), String> {
    for stage in [
        "generate-fixtures",
        "extract",
        "pair",
        "metrics",
        "train",
        "reward-map",
        "density",
    ] {
        let status = Command::new(env!("CARGO_BIN_EXE_cfpp"))
            .args([stage, "--seed", "7", "--config"])
            .arg(config)
            .arg("--out")
            .arg(out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!(
                "{stage}: {}",
                String::from_utf8_lossy(&status.stderr)
            ));
        }
    }
    Ok(())
}

fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).expect("readable output tree") {
            let path = entry.expect("directory entry").path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_path_buf();
                files.insert(rel, std::fs::read(&path).expect("readable file"));
            }
        }
    }
    files
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("pipeline.toml");
    std::fs::write(
        &config,
        "[training]\nepochs = 20\nframe_stride = 5\n[training.ppo]\nsteps_per_epoch = 256\nppo_epochs = 2\nminibatch = 128\n",
    )
    .map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("run_a"), tmp.path().join("run_b"));
    run_pipeline(&a, &config)?;
    run_pipeline(&b, &config)?;
    let (ta, tb) = (tree(&a), tree(&b));
    let differing: Vec<String> = ta
        .keys()
        .chain(tb.keys())
        .filter(|k| ta.get(*k) != tb.get(*k))
        .map(|k| k.display().to_string())
        .collect();
    let checkpoints = ta.keys().filter(|k| k.starts_with("models")).count();
    check(
        differing.is_empty() && checkpoints > 0 && !ta.is_empty(),
        format!(
            "{} files ({checkpoints} checkpoint files) compared, differing: {:?}",
            ta.len(),
            differing
        ),
    )
}

// ---- 9 ----

fn episode_loss_values() -> Outcome {
    let plain = eval_episode_loss(&[20.0], &[19.0], false).map_err(|e| e.to_string())?;
    let crashed = eval_episode_loss(&[20.0], &[19.0], true).map_err(|e| e.to_string())?;
    let (e1, e2) = (
        (plain - -2.995732273553991).abs(),
        (crashed - -1002.995732273554).abs(),
    );
    check(
        e1 <= 1e-9 && e2 <= 1e-9,
        format!("loss {plain:.10}, with collision {crashed:.10}"),
    )
}
