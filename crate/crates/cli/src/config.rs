use std::path::{Path, PathBuf};

use cfpp_core::airl::TrainConfig;
use cfpp_core::extraction::ExtractionCriteria;
use cfpp_core::fixtures::FixtureConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub out: PathBuf,
    pub input: InputConfig,
    pub extraction: ExtractionCriteria,
    pub pairing: PairingConfig,
    pub training: TrainConfig,
    pub reward_map: RewardMapConfig,
    pub density: DensityConfig,
    pub fixtures: FixturesConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: None,
            out: PathBuf::from("cfpp-out"),
            input: InputConfig::default(),
            extraction: ExtractionCriteria::default(),
            pairing: PairingConfig::default(),
            training: TrainConfig::default(),
            reward_map: RewardMapConfig::default(),
            density: DensityConfig::default(),
            fixtures: FixturesConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InputConfig {
    /// Directory of highD-layout recordings; defaults to `<out>/fixtures`.
    pub dir: Option<PathBuf>,
    /// Recording prefixes such as `"01"`; empty means every `*_tracks.csv`.
    pub recordings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairingConfig {
    /// Largest accepted path-normalized DTW distance of LV speeds (m/s).
    pub threshold: f64,
}

impl Default for PairingConfig {
    fn default() -> Self {
        Self { threshold: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardMapConfig {
    pub fixed_speeds: Vec<f64>,
    pub bins: usize,
    pub dv_range: (f64, f64),
    /// The spacing axis spans `[0, max(dy_min_span, dy_headway_span * v_l)]`.
    pub dy_headway_span: f64,
    pub dy_min_span: f64,
}

impl Default for RewardMapConfig {
    fn default() -> Self {
        Self {
            fixed_speeds: vec![4.3, 7.4, 11.0, 20.0],
            bins: 10,
            dv_range: (-3.0, 3.0),
            dy_headway_span: 4.0,
            dy_min_span: 20.0,
        }
    }
}

impl RewardMapConfig {
    pub fn dy_range(&self, v_l: f64) -> (f64, f64) {
        (0.0, (self.dy_headway_span * v_l).max(self.dy_min_span))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityConfig {
    pub bins: usize,
    pub lv_speed_range: (f64, f64),
    pub spacing_range: (f64, f64),
    pub ego_accel_range: (f64, f64),
    pub rel_speed_range: (f64, f64),
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            bins: 20,
            lv_speed_range: (0.0, 40.0),
            spacing_range: (0.0, 120.0),
            ego_accel_range: (-4.0, 4.0),
            rel_speed_range: (-5.0, 5.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixturesConfig {
    /// Tailgated/gapped recording pairs to generate.
    pub pairs: usize,
    pub scene: FixtureConfig,
}

impl Default for FixturesConfig {
    fn default() -> Self {
        Self {
            pairs: 6,
            scene: FixtureConfig::default(),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub fixed_speeds: Option<Vec<f64>>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies flag overrides and checks the result.
    pub fn resolve(mut self, o: &Overrides) -> Result<ResolvedConfig, CliError> {
        if let Some(seed) = o.seed {
            self.seed = Some(seed);
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(v) = &o.fixed_speeds {
            self.reward_map.fixed_speeds = v.clone();
        }
        let seed = self.seed.ok_or_else(|| {
            CliError::Config("a seed is required (config `seed` or --seed)".into())
        })?;
        self.training.seed = seed;
        self.extraction
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        self.training
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.pairing.threshold > 0.0) {
            return Err(CliError::Config(
                "pairing.threshold must be positive".into(),
            ));
        }
        if self.reward_map.bins < 2 || self.density.bins < 2 {
            return Err(CliError::Config(
                "grid bin counts must be at least 2".into(),
            ));
        }
        if self
            .reward_map
            .fixed_speeds
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(CliError::Config(
                "fixed speeds must be finite and non-negative".into(),
            ));
        }
        let hash = config_hash(&self);
        Ok(ResolvedConfig {
            seed,
            hash,
            config: self,
        })
    }
}

/// SHA-256 over every setting that influences stage outputs. Paths are
/// excluded so relocated runs stay byte-identical.
fn config_hash(c: &PipelineConfig) -> String {
    let hashed = serde_json::json!({
        "seed": c.seed,
        "input_recordings": c.input.recordings,
        "extraction": c.extraction,
        "pairing": c.pairing,
        "training": c.training,
        "reward_map": c.reward_map,
        "density": c.density,
        "fixtures": c.fixtures,
    });
    let digest = Sha256::digest(hashed.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub seed: u64,
    pub hash: String,
    pub config: PipelineConfig,
}

impl ResolvedConfig {
    pub fn out(&self) -> &Path {
        &self.config.out
    }

    pub fn input_dir(&self) -> PathBuf {
        self.config
            .input
            .dir
            .clone()
            .unwrap_or_else(|| self.config.out.join("fixtures"))
    }

    /// Header lines identifying the producing command and configuration.
    pub fn header(&self, command: &str) -> Vec<String> {
        vec![format!(
            "cfpp {command} config_hash={} seed={}",
            self.hash, self.seed
        )]
    }
}
