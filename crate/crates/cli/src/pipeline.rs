use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use cfpp_core::airl::{histogram_2d, reward_grid, train_airl, GridAxis, RewardModel};
use cfpp_core::dtw::{pair_segments, resolve_pairs, split_pools, PairRecord};
use cfpp_core::extraction::{
    detect_cf_segments, read_segments_jsonl, write_segments_jsonl, CFSegment, FvLabel,
};
use cfpp_core::fixtures::generate_paired_set;
use cfpp_core::metrics::build_comparison_table;
use cfpp_core::trajectory::{
    load_recording_paths, normalize_direction, write_recording, RecordingPaths,
};

use crate::{CliError, ResolvedConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    GenerateFixtures,
    Extract,
    Pair,
    Metrics,
    Train,
    RewardMap,
    Density,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::GenerateFixtures => "generate-fixtures",
            Command::Extract => "extract",
            Command::Pair => "pair",
            Command::Metrics => "metrics",
            Command::Train => "train",
            Command::RewardMap => "reward-map",
            Command::Density => "density",
        }
    }
}

const CONDITIONS: [(FvLabel, &str); 2] = [
    (FvLabel::Tailgated, "tailgated"),
    (FvLabel::Gapped, "gapped"),
];

/// Runs one stage and returns the files it wrote.
pub fn run(command: Command, cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(cfg.out())?;
    match command {
        Command::GenerateFixtures => generate_fixtures(cfg),
        Command::Extract => extract(cfg),
        Command::Pair => pair(cfg),
        Command::Metrics => metrics(cfg),
        Command::Train => train(cfg),
        Command::RewardMap => reward_map(cfg),
        Command::Density => density(cfg),
    }
}

fn segments_path(cfg: &ResolvedConfig) -> PathBuf {
    cfg.out().join("segments.jsonl")
}

fn pairs_path(cfg: &ResolvedConfig) -> PathBuf {
    cfg.out().join("pairs.jsonl")
}

fn model_dir(cfg: &ResolvedConfig, condition: &str) -> PathBuf {
    cfg.out().join("models").join(condition)
}

fn require(path: &Path, stage: &'static str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::MissingStage {
            stage,
            missing: path.display().to_string(),
        })
    }
}

fn write_header<W: Write>(out: &mut W, header: &[String]) -> Result<(), CliError> {
    for h in header {
        writeln!(out, "# {h}")?;
    }
    Ok(())
}

fn generate_fixtures(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = cfg.input_dir();
    fs::create_dir_all(&dir)?;
    let fx = &cfg.config.fixtures;
    let header = cfg.header(Command::GenerateFixtures.name());
    let mut written = Vec::new();
    for bundle in generate_paired_set(&fx.scene, fx.pairs, cfg.seed) {
        let paths = RecordingPaths::in_dir(&dir, &format!("{:02}", bundle.meta.recording_id));
        write_recording(&bundle, &paths, &header)?;
        written.extend([paths.tracks, paths.tracks_meta, paths.recording_meta]);
    }
    Ok(written)
}

fn recording_prefixes(cfg: &ResolvedConfig, dir: &Path) -> Result<Vec<String>, CliError> {
    if !cfg.config.input.recordings.is_empty() {
        return Ok(cfg.config.input.recordings.clone());
    }
    let mut prefixes: Vec<String> = fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            e.file_name()
                .to_str()
                .and_then(|n| n.strip_suffix("_tracks.csv"))
                .map(str::to_string)
        })
        .collect();
    prefixes.sort();
    Ok(prefixes)
}

fn extract(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let dir = cfg.input_dir();
    if cfg.config.input.dir.is_some() && !dir.is_dir() {
        return Err(CliError::Data(format!(
            "input directory {} does not exist",
            dir.display()
        )));
    }
    require(&dir, "generate-fixtures")?;
    let prefixes = recording_prefixes(cfg, &dir)?;
    if prefixes.is_empty() {
        return Err(CliError::MissingStage {
            stage: "generate-fixtures",
            missing: format!("recordings in {}", dir.display()),
        });
    }
    let mut segments = Vec::new();
    for prefix in &prefixes {
        let bundle =
            normalize_direction(load_recording_paths(&RecordingPaths::in_dir(&dir, prefix))?)?;
        segments.extend(detect_cf_segments(&bundle, &cfg.config.extraction));
    }
    segments.sort_by_key(|s| (s.recording_id, s.ego_id, s.frame_lo));
    let path = segments_path(cfg);
    let mut out = BufWriter::new(File::create(&path)?);
    write_header(&mut out, &cfg.header(Command::Extract.name()))?;
    write_segments_jsonl(&segments, &mut out)?;
    out.flush()?;
    Ok(vec![path])
}

fn load_segments(cfg: &ResolvedConfig) -> Result<Vec<CFSegment>, CliError> {
    let path = segments_path(cfg);
    require(&path, "extract")?;
    Ok(read_segments_jsonl(BufReader::new(File::open(path)?))?)
}

fn pair(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let segments = load_segments(cfg)?;
    let (tailgated, gapped) = split_pools(&segments);
    let pairs = pair_segments(&tailgated, &gapped, cfg.config.pairing.threshold)?;
    let path = pairs_path(cfg);
    let mut out = BufWriter::new(File::create(&path)?);
    write_header(&mut out, &cfg.header(Command::Pair.name()))?;
    for p in &pairs {
        serde_json::to_writer(&mut out, &PairRecord::from(p))
            .map_err(|e| CliError::Data(e.to_string()))?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(vec![path])
}

fn load_pair_records(cfg: &ResolvedConfig) -> Result<Vec<PairRecord>, CliError> {
    let path = pairs_path(cfg);
    require(&path, "pair")?;
    fs::read_to_string(&path)?
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            serde_json::from_str(l).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn metrics(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let segments = load_segments(cfg)?;
    let records = load_pair_records(cfg)?;
    let pairs = resolve_pairs(&records, &segments)?;
    let table = build_comparison_table(&pairs)?;
    let header = cfg.header(Command::Metrics.name());

    let csv_path = cfg.out().join("metrics.csv");
    let mut out = BufWriter::new(File::create(&csv_path)?);
    write_header(&mut out, &header)?;
    table.write_csv(&mut out)?;
    out.flush()?;

    let json_path = cfg.out().join("metrics.json");
    let doc = serde_json::json!({
        "meta": { "command": "metrics", "config_hash": cfg.hash, "seed": cfg.seed },
        "table": table,
    });
    let mut out = BufWriter::new(File::create(&json_path)?);
    serde_json::to_writer_pretty(&mut out, &doc).map_err(|e| CliError::Data(e.to_string()))?;
    writeln!(out)?;
    out.flush()?;
    Ok(vec![csv_path, json_path])
}

fn train(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let segments = load_segments(cfg)?;
    let header = cfg.header(Command::Train.name());
    let mut written = Vec::new();
    for (label, name) in CONDITIONS {
        let experts: Vec<CFSegment> = segments
            .iter()
            .filter(|s| s.label == label)
            .cloned()
            .collect();
        if experts.is_empty() {
            eprintln!("cfpp train: no {name} segments, skipping");
            continue;
        }
        let (mut model, report) = train_airl(&experts, &cfg.config.training)?;
        model.config_hash = cfg.hash.clone();
        let dir = model_dir(cfg, name);
        model.save(&dir)?;
        let report_path = cfg.out().join(format!("train_{name}.csv"));
        report.write_csv(&report_path, &header)?;
        written.extend([dir, report_path]);
        if let Some((epoch, detail)) = report.diverged {
            return Err(CliError::Divergence(format!(
                "{name} model at epoch {epoch}: {detail}; last finite checkpoint kept"
            )));
        }
    }
    Ok(written)
}

fn reward_map(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let rm = &cfg.config.reward_map;
    let models: Vec<(&str, PathBuf)> = CONDITIONS
        .iter()
        .map(|(_, name)| (*name, model_dir(cfg, name)))
        .filter(|(_, dir)| dir.join("manifest.json").exists())
        .collect();
    if models.is_empty() {
        return Err(CliError::MissingStage {
            stage: "train",
            missing: format!("models under {}", cfg.out().join("models").display()),
        });
    }
    let dir = cfg.out().join("reward_maps");
    fs::create_dir_all(&dir)?;
    let header = cfg.header(Command::RewardMap.name());
    let mut written = Vec::new();
    for (name, model_dir) in models {
        let model = RewardModel::load(&model_dir)?;
        for &v in &rm.fixed_speeds {
            let mut grid = reward_grid(&model.disc, v, rm.bins, rm.dy_range(v), rm.dv_range)?;
            grid.meta.push(("condition".into(), name.into()));
            let path = dir.join(format!("{name}_v{v}.csv"));
            grid.write_csv(&path, &header)?;
            written.push(path);
        }
    }
    Ok(written)
}

type SeriesOf = fn(&CFSegment) -> &[f64];

fn density(cfg: &ResolvedConfig) -> Result<Vec<PathBuf>, CliError> {
    let segments = load_segments(cfg)?;
    let d = cfg.config.density;
    let dir = cfg.out().join("density");
    fs::create_dir_all(&dir)?;
    let header = cfg.header(Command::Density.name());
    let mut written = Vec::new();
    for (label, name) in CONDITIONS {
        let pool: Vec<&CFSegment> = segments.iter().filter(|s| s.label == label).collect();
        let targets: [(&str, (f64, f64), SeriesOf); 3] = [
            ("spacing", d.spacing_range, |s| &s.spacing),
            ("ego_accel", d.ego_accel_range, |s| &s.ego_accel),
            ("rel_speed", d.rel_speed_range, |s| &s.rel_speed),
        ];
        for (col_name, range, series) in targets {
            let rows = GridAxis::new("lv_speed", d.lv_speed_range, d.bins)?;
            let cols = GridAxis::new(col_name, range, d.bins)?;
            let points = pool
                .iter()
                .flat_map(|s| s.lv_speed.iter().copied().zip(series(s).iter().copied()));
            let mut grid = histogram_2d(points, rows, cols);
            grid.meta.push(("condition".into(), name.into()));
            let path = dir.join(format!("{name}_lv_speed_x_{col_name}.csv"));
            grid.write_csv(&path, &header)?;
            written.push(path);
        }
    }
    Ok(written)
}
