use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = "seed = 5\n[training]\nepochs = 2\nframe_stride = 5\n[training.ppo]\nsteps_per_epoch = 128\nppo_epochs = 1\nminibatch = 64\n[fixtures]\npairs = 2\n";

fn cfpp(args: &[&str], out: &Path, config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cfpp"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn setup(config: &str) -> (tempfile::TempDir, std::path::PathBuf, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.path().join("out");
    (dir, cfg, out)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn pair_before_extract_names_the_missing_stage() {
    let (_d, cfg, out) = setup(QUICK);
    let o = cfpp(&["pair"], &out, &cfg);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("extract"), "{}", stderr(&o));
}

#[test]
fn reward_map_without_models_is_missing_stage() {
    let (_d, cfg, out) = setup(QUICK);
    assert_eq!(cfpp(&["reward-map"], &out, &cfg).status.code(), Some(3));
}

#[test]
fn config_errors_exit_2() {
    let (_d, cfg, out) = setup("seed = 1\n[pairing]\nthreshhold = 2.0\n");
    let o = cfpp(&["extract"], &out, &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("threshhold"), "{}", stderr(&o));

    let (_d, cfg, out) = setup("[pairing]\nthreshold = 2.0\n");
    let o = cfpp(&["extract"], &out, &cfg);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("seed"));
}

#[test]
fn full_pipeline_writes_headed_outputs() {
    let (_d, cfg, out) = setup(QUICK);
    for stage in [
        "generate-fixtures",
        "extract",
        "pair",
        "metrics",
        "train",
        "reward-map",
        "density",
    ] {
        let o = cfpp(&[stage], &out, &cfg);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    let maps: Vec<_> = std::fs::read_dir(out.join("reward_maps"))
        .unwrap()
        .collect();
    assert_eq!(maps.len(), 8);
    assert_eq!(std::fs::read_dir(out.join("density")).unwrap().count(), 6);

    for rel in [
        "segments.jsonl",
        "pairs.jsonl",
        "metrics.csv",
        "train_tailgated.csv",
        "reward_maps/gapped_v11.csv",
    ] {
        let text = std::fs::read_to_string(out.join(rel)).unwrap();
        let first = text.lines().next().unwrap();
        assert!(
            first.starts_with("# cfpp ")
                && first.contains("config_hash=")
                && first.contains("seed=5"),
            "{rel}: {first}"
        );
    }
    let metrics = std::fs::read_to_string(out.join("metrics.json")).unwrap();
    assert!(metrics.contains("config_hash"));

    // rerunning a stage rewrites identical bytes
    let before = std::fs::read(out.join("pairs.jsonl")).unwrap();
    assert!(cfpp(&["pair"], &out, &cfg).status.success());
    assert_eq!(std::fs::read(out.join("pairs.jsonl")).unwrap(), before);
}

#[test]
fn fixed_speed_flag_overrides_config() {
    let (_d, cfg, out) = setup(QUICK);
    for stage in ["generate-fixtures", "extract", "train"] {
        assert!(cfpp(&[stage], &out, &cfg).status.success());
    }
    let o = cfpp(&["reward-map", "--fixed-speeds", "9,13.5"], &out, &cfg);
    assert!(o.status.success(), "{}", stderr(&o));
    let mut names: Vec<String> = std::fs::read_dir(out.join("reward_maps"))
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "gapped_v13.5.csv",
            "gapped_v9.csv",
            "tailgated_v13.5.csv",
            "tailgated_v9.csv"
        ]
    );
}
