//! JSON run configuration. Distances are written in microns and must be
//! whole nanometers; they are parsed from the literal text, never through
//! binary floating point.

use std::fmt;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::features::{CcasConfig, Direction};
use crate::geom::{microns_to_dbu, DbUnit, LayerId};
use crate::learning::loss::Surrogate;
use crate::learning::{BiasConfig, TrainConfig};
use crate::metal::{MetalSpec, Orientation};
use crate::rng::{Prng, RandomSource};
use crate::via::ViaSpec;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config: {0}")]
    Invalid(String),
    #[error("config: cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

/// A micron literal held as exact nanometers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Microns(pub DbUnit);

impl<'de> Deserialize<'de> for Microns {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let n = serde_json::Number::deserialize(d)?;
        microns_to_dbu(&n.to_string()).map(Microns).map_err(D::Error::custom)
    }
}

impl Serialize for Microns {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl fmt::Display for Microns {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let v = self.0.unsigned_abs();
        let frac = v % 1000;
        if frac == 0 {
            write!(f, "{sign}{}", v / 1000)
        } else {
            let digits = format!("{frac:03}");
            write!(f, "{sign}{}.{}", v / 1000, digits.trim_end_matches('0'))
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMetal {
    wire_cd: Microns,
    track_pitch: Microns,
    min_t2t: Microns,
    max_t2t: Microns,
    min_length: Microns,
    max_length: Microns,
    t2t_grid: Microns,
    total_x: Microns,
    total_y: Microns,
    #[serde(default)]
    orientation: Orientation,
    #[serde(default = "default_metal_layer")]
    layer: LayerId,
}

fn default_metal_layer() -> LayerId {
    1
}

/// Metal rules nested in a via section. Width, pitch and size default to
/// the values implied by the via rules.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawViaMetal {
    wire_cd: Option<Microns>,
    track_pitch: Option<Microns>,
    min_t2t: Microns,
    max_t2t: Microns,
    min_length: Microns,
    max_length: Microns,
    t2t_grid: Microns,
    layer: Option<LayerId>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVia {
    via1_x: Microns,
    via1_y: Microns,
    m1_enc: Microns,
    m2_enc: Microns,
    min_via1_pitch_x: Microns,
    min_via1_pitch_y: Microns,
    via_fraction: f64,
    total_x: Microns,
    total_y: Microns,
    m1: RawViaMetal,
    m2: RawViaMetal,
    #[serde(default = "default_via_layer")]
    layer: LayerId,
}

fn default_via_layer() -> LayerId {
    2
}

/// Clip extraction and feature settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesConfig {
    pub pixel: Microns,
    pub clip: Microns,
    pub stride: Microns,
    /// Side of the square region, from the cell origin, cut into clips.
    pub extent: Microns,
    pub blocks: usize,
    pub keep: usize,
    /// Side of the centered core, as a fraction of the clip side, in which
    /// a narrow line-end gap marks the clip as a hotspot.
    pub core: f64,
    /// Gaps up to this size are hotspots; defaults to min_t2t + 2 t2t_grid.
    pub hotspot_gap: Option<Microns>,
    pub ccas: CcasConfig,
    pub direction: Direction,
}

impl Default for FeaturesConfig {
    fn default() -> Self {
        Self {
            pixel: Microns(4),
            clip: Microns(480),
            stride: Microns(480),
            extent: Microns(9600),
            blocks: 12,
            keep: 32,
            core: 0.5,
            hotspot_gap: None,
            ccas: CcasConfig::default(),
            direction: Direction::Maximize,
        }
    }
}

/// Training and evaluation settings. `losses` may name any of the six
/// surrogates plus `bbl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub losses: Vec<String>,
    pub learning_rate: f64,
    pub decay: f64,
    pub batch: usize,
    pub decay_interval: usize,
    pub iterations: usize,
    pub log_every: usize,
    pub beta: f64,
    pub r_gamma: f64,
    pub r_p: f64,
    pub r_printed: bool,
    pub eps_max: f64,
    pub bias_scale: f64,
    pub seeds: Vec<u64>,
    pub test_fraction: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        let b = BiasConfig::default();
        Self {
            losses: ["psl", "phl", "pll", "r", "pcl1", "pcl2", "bbl"].map(String::from).to_vec(),
            learning_rate: t.learning_rate,
            decay: t.decay,
            batch: t.batch,
            decay_interval: t.decay_interval,
            iterations: t.iterations,
            log_every: t.log_every,
            beta: 3.0,
            r_gamma: 0.7,
            r_p: 2.0,
            r_printed: false,
            eps_max: b.eps_max,
            bias_scale: b.scale,
            seeds: vec![1, 2, 3, 4, 5],
            test_fraction: 0.3,
        }
    }
}

/// A named training method: one of the surrogates, or batch-biased learning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    Pairwise(Surrogate),
    Bbl(BiasConfig),
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Pairwise(s) => s.name(),
            Method::Bbl(_) => "bbl",
        }
    }
}

impl TrainSection {
    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            decay: self.decay,
            batch: self.batch,
            decay_interval: self.decay_interval,
            iterations: self.iterations,
            seed,
            log_every: self.log_every,
        }
    }

    pub fn methods(&self) -> Result<Vec<Method>, ConfigError> {
        self.losses
            .iter()
            .map(|name| {
                let m = match name.to_ascii_lowercase().as_str() {
                    "psl" => Method::Pairwise(Surrogate::Psl),
                    "phl" => Method::Pairwise(Surrogate::Phl),
                    "pll" => Method::Pairwise(Surrogate::Pll { beta: self.beta }),
                    "r" => Method::Pairwise(Surrogate::R { gamma: self.r_gamma, p: self.r_p, printed: self.r_printed }),
                    "pcl1" => Method::Pairwise(Surrogate::Pcl1),
                    "pcl2" => Method::Pairwise(Surrogate::Pcl2),
                    "bbl" => Method::Bbl(BiasConfig { eps_max: self.eps_max, scale: self.bias_scale }),
                    other => return Err(invalid(format!("train.losses: unknown loss `{other}`"))),
                };
                match m {
                    Method::Pairwise(s) => s.validate(),
                    Method::Bbl(b) => b.validate(),
                }
                .map_err(|e| invalid(format!("train.losses `{name}`: {e}")))?;
                Ok(m)
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.train_config(0).validate().map_err(|e| invalid(format!("train: {e}")))?;
        self.methods()?;
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(invalid(format!("train.test_fraction must be in (0, 1) (got {})", self.test_fraction)));
        }
        if self.seeds.is_empty() {
            return Err(invalid("train.seeds must not be empty"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    seed: Option<u64>,
    output: Option<String>,
    metal: Option<RawMetal>,
    via: Option<RawVia>,
    features: Option<FeaturesConfig>,
    train: Option<TrainSection>,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub output: Option<String>,
    pub metal: Option<MetalSpec>,
    pub via: Option<ViaSpec>,
    pub features: FeaturesConfig,
    pub train: TrainSection,
}

pub const DEFAULT_SEED: u64 = 1;

impl RunConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text, seed_override)
    }

    pub fn from_json(text: &str, seed_override: Option<u64>) -> Result<Self, ConfigError> {
        let raw: RawConfig = serde_json::from_str(text)?;
        let seed = seed_override.or(raw.seed).unwrap_or(DEFAULT_SEED);
        let metal = raw.metal.map(|m| metal_spec(&m, seed)).transpose()?;
        let via = raw.via.map(|v| via_spec(&v, seed)).transpose()?;
        let features = raw.features.unwrap_or_default();
        validate_features(&features)?;
        let train = raw.train.unwrap_or_default();
        train.validate()?;
        Ok(Self { seed, output: raw.output, metal, via, features, train })
    }

    pub fn require_metal(&self) -> Result<&MetalSpec, ConfigError> {
        self.metal.as_ref().ok_or_else(|| invalid("missing `metal` section"))
    }

    pub fn require_via(&self) -> Result<&ViaSpec, ConfigError> {
        self.via.as_ref().ok_or_else(|| invalid("missing `via` section"))
    }

    /// Hotspot gap threshold in nm for the given metal rules.
    pub fn hotspot_gap(&self, spec: &MetalSpec) -> DbUnit {
        self.features.hotspot_gap.map_or(spec.min_t2t + 2 * spec.t2t_grid, |g| g.0)
    }
}

fn validate_features(f: &FeaturesConfig) -> Result<(), ConfigError> {
    for (name, v) in [("pixel", f.pixel), ("clip", f.clip), ("stride", f.stride), ("extent", f.extent)] {
        if v.0 <= 0 {
            return Err(invalid(format!("features.{name} must be positive (got {v})")));
        }
    }
    if f.clip.0 % f.pixel.0 != 0 {
        return Err(invalid(format!("features.clip {} is not a multiple of features.pixel {}", f.clip, f.pixel)));
    }
    let side = (f.clip.0 / f.pixel.0) as usize;
    if f.blocks == 0 || !side.is_multiple_of(f.blocks) {
        return Err(invalid(format!("features.blocks {} does not divide the {side}-pixel clip", f.blocks)));
    }
    let bs = side / f.blocks;
    if f.keep == 0 || f.keep > bs * bs {
        return Err(invalid(format!("features.keep must be in 1..={} (got {})", bs * bs, f.keep)));
    }
    if !(f.core > 0.0 && f.core <= 1.0) {
        return Err(invalid(format!("features.core must be in (0, 1] (got {})", f.core)));
    }
    f.ccas.validate().map_err(|e| invalid(format!("features.ccas: {e}")))?;
    if f.ccas.r_max > side / 2 {
        return Err(invalid(format!("features.ccas.r_max {} exceeds half the clip ({})", f.ccas.r_max, side / 2)));
    }
    Ok(())
}

fn metal_spec(m: &RawMetal, seed: u64) -> Result<MetalSpec, ConfigError> {
    let spec = MetalSpec {
        wire_cd: m.wire_cd.0,
        track_pitch: m.track_pitch.0,
        min_t2t: m.min_t2t.0,
        max_t2t: m.max_t2t.0,
        min_length: m.min_length.0,
        max_length: m.max_length.0,
        t2t_grid: m.t2t_grid.0,
        total_x: m.total_x.0,
        total_y: m.total_y.0,
        origin: (0, 0),
        orientation: m.orientation,
        layer: m.layer,
        seed,
    };
    spec.validate().map_err(|e| invalid(format!("metal: {e}")))?;
    Ok(spec)
}

fn via_spec(v: &RawVia, seed: u64) -> Result<ViaSpec, ConfigError> {
    // independent streams for the two gratings and the density draw
    let mut rng = Prng::new(seed);
    let (s1, s2, sv) = (rng.next_u64(), rng.next_u64(), rng.next_u64());
    let nested = |name: &str, m: &RawViaMetal, cd: Microns, pitch: Microns, orientation, layer: LayerId, seed| {
        let track_pitch = match (m.track_pitch, pitch.0) {
            (Some(p), _) => p.0,
            (None, p) if p > 0 => p,
            _ => return Err(invalid(format!("via.{name}.track_pitch is required when the matching via pitch is 0"))),
        };
        Ok(MetalSpec {
            wire_cd: m.wire_cd.unwrap_or(cd).0,
            track_pitch,
            min_t2t: m.min_t2t.0,
            max_t2t: m.max_t2t.0,
            min_length: m.min_length.0,
            max_length: m.max_length.0,
            t2t_grid: m.t2t_grid.0,
            total_x: v.total_x.0,
            total_y: v.total_y.0,
            origin: (0, 0),
            orientation,
            layer: m.layer.unwrap_or(layer),
            seed,
        })
    };
    let m1 = nested("m1", &v.m1, v.via1_y, v.min_via1_pitch_y, Orientation::Horizontal, 1, s1)?;
    let m2 = nested("m2", &v.m2, v.via1_x, v.min_via1_pitch_x, Orientation::Vertical, 3, s2)?;
    let spec = ViaSpec {
        via_x: v.via1_x.0,
        via_y: v.via1_y.0,
        density: v.via_fraction,
        enclosure_x: v.m1_enc.0,
        enclosure_y: v.m2_enc.0,
        pitch_x: v.min_via1_pitch_x.0,
        pitch_y: v.min_via1_pitch_y.0,
        m1,
        m2,
        via_layer: v.layer,
        seed: sv,
    };
    spec.validate().map_err(|e| invalid(format!("via: {e}")))?;
    Ok(spec)
}
