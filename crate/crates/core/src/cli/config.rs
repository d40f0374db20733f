use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::embed::{EmbedConfig, Linkage, Pooling};
use crate::error::{Error, Result};
use crate::geometry::ShapeKind;
use crate::links::{GaeConfig, LinkConfig};
use crate::mat_oracle::{DEFAULT_ANGLE_FLOOR, DEFAULT_EPS, DEFAULT_MIN_ANGLE};
use crate::skeleton::SkeletonOptConfig;
use crate::skelgraph::DEFAULT_BUDGET;

/// A value that round-trips through the `key = value` text form.
pub trait ConfigValue: Sized {
    fn parse_value(key: &str, text: &str) -> Result<Self>;
    fn format_value(&self) -> String;
}

fn invalid(key: &str, text: &str, what: &str) -> Error {
    Error::Config(format!("{key}: cannot parse '{text}' as {what}"))
}

macro_rules! scalar_value {
    ($($ty:ty => $what:literal),* $(,)?) => {$(
        impl ConfigValue for $ty {
            fn parse_value(key: &str, text: &str) -> Result<Self> {
                text.parse().map_err(|_| invalid(key, text, $what))
            }

            fn format_value(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

scalar_value!(usize => "a non-negative integer", u64 => "a non-negative integer", bool => "true or false");

impl ConfigValue for f64 {
    fn parse_value(key: &str, text: &str) -> Result<Self> {
        text.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| invalid(key, text, "a finite number"))
    }

    fn format_value(&self) -> String {
        format!("{self:?}")
    }
}

impl ConfigValue for String {
    fn parse_value(_: &str, text: &str) -> Result<Self> {
        Ok(text.to_string())
    }

    fn format_value(&self) -> String {
        self.clone()
    }
}

impl ConfigValue for Vec<usize> {
    fn parse_value(key: &str, text: &str) -> Result<Self> {
        text.split(',')
            .filter(|f| !f.trim().is_empty())
            .map(|f| {
                f.trim()
                    .parse()
                    .map_err(|_| invalid(key, text, "a comma-separated integer list"))
            })
            .collect()
    }

    fn format_value(&self) -> String {
        self.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

impl ConfigValue for Vec<f64> {
    fn parse_value(key: &str, text: &str) -> Result<Self> {
        text.split(',')
            .filter(|f| !f.trim().is_empty())
            .map(|f| f64::parse_value(key, f.trim()))
            .collect()
    }

    fn format_value(&self) -> String {
        self.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(",")
    }
}

macro_rules! enum_value {
    ($($ty:ty),*) => {$(
        impl ConfigValue for $ty {
            fn parse_value(key: &str, text: &str) -> Result<Self> {
                text.parse().map_err(|e: Error| Error::Config(format!("{key}: {e}")))
            }

            fn format_value(&self) -> String {
                self.to_string()
            }
        }
    )*};
}

enum_value!(Pooling, Linkage);

macro_rules! run_config {
    ($($(#[doc = $doc:literal])* $key:ident : $ty:ty = $default:expr),* $(,)?) => {
        /// Every tunable of the pipeline. Text form is one `key = value` per
        /// line; `#` starts a comment.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $($(#[doc = $doc])* pub $key: $ty,)*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                RunConfig { $($key: $default,)* }
            }
        }

        impl RunConfig {
            pub const KEYS: &'static [&'static str] = &[$(stringify!($key)),*];

            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $(stringify!($key) => self.$key = <$ty as ConfigValue>::parse_value(key, value.trim())?,)*
                    _ => return Err(Error::Config(format!("unknown config key '{key}'"))),
                }
                Ok(())
            }

            /// `(key, value)` pairs in declaration order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$((stringify!($key), self.$key.format_value())),*]
            }
        }
    };
}

run_config! {
    output_dir: String = "out".into(),
    input_format: String = "auto".into(),

    sample_m: usize = 1024,
    sample_seed: u64 = 0,
    normals_k: usize = crate::geometry::DEFAULT_NORMAL_NEIGHBORS,

    n_skeleton_points: usize = 64,
    iterations: usize = 1500,
    learning_rate: f64 = 0.01,
    lambda_r: f64 = 0.3,
    lambda_n: f64 = 0.1,
    sphere_samples: usize = 64,
    input_samples: usize = 1024,
    init_bandwidth: f64 = 0.5,
    init_noise: f64 = 0.01,
    skeleton_seed: u64 = 0,
    write_weights: bool = false,

    link_k: usize = 2,
    gae_hidden: Vec<usize> = vec![16, 8],
    gae_epochs: usize = 200,
    gae_learning_rate: f64 = 0.01,
    gae_seed: u64 = 0,
    link_threshold: f64 = 0.5,
    ensure_connected: bool = true,

    /// Negative selects twice the median edge weight per graph.
    min_branch_len: f64 = -1.0,
    path_budget: u64 = DEFAULT_BUDGET,

    embed_layers: Vec<usize> = vec![32, 32, 36],
    embed_pooling: Pooling = Pooling::Sum,
    embed_disc_widths: Vec<usize> = vec![64, 64, 32],
    embed_epochs: usize = 100,
    embed_learning_rate: f64 = 0.001,
    embed_negatives: usize = 1,
    embed_seed: u64 = 0,
    spectrum_dim: usize = 100,

    cluster_k: usize = 2,
    cluster_seed: u64 = 0,
    kmeans_iters: usize = 100,
    linkage: Linkage = Linkage::Average,

    oracle_resolution: usize = 64,
    oracle_eps: f64 = DEFAULT_EPS,
    oracle_min_angle: f64 = DEFAULT_MIN_ANGLE,
    oracle_angle_floor: f64 = DEFAULT_ANGLE_FLOOR,
    volume_resolution: usize = 64,
    recon_samples: usize = 64,

    synth_kind: String = "sphere".into(),
    /// Empty keeps the shape's default dimensions.
    synth_dims: Vec<f64> = Vec::new(),
    synth_count: usize = 2000,
    synth_seed: u64 = 0,
}

/// Environment variable that overrides `output_dir` from the config file.
pub const OUTPUT_DIR_ENV: &str = "NEUROMORPH_OUTPUT_DIR";

impl RunConfig {
    /// Applies `key = value` lines. Repeated keys are rejected.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        let mut seen = std::collections::BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected 'key = value'", lineno + 1)))?;
            let key = key.trim();
            if !seen.insert(key.to_string()) {
                return Err(Error::Config(format!("line {}: key '{key}' given twice", lineno + 1)));
            }
            self.set(key, value)
                .map_err(|e| Error::Config(format!("line {}: {}", lineno + 1, strip_prefix(&e))))?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::default();
        cfg.apply_text(&text)?;
        Ok(cfg)
    }

    /// Canonical text: every key except `output_dir`, which does not affect
    /// results, in declaration order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries().into_iter().filter(|(k, _)| *k != "output_dir") {
            writeln!(s, "{k} = {v}").expect("writing to a String");
        }
        s
    }

    /// SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        format!("{:x}", Sha256::digest(self.to_text().as_bytes()))
    }

    pub fn seeds(&self) -> Vec<(&'static str, u64)> {
        vec![
            ("sample_seed", self.sample_seed),
            ("skeleton_seed", self.skeleton_seed),
            ("gae_seed", self.gae_seed),
            ("embed_seed", self.embed_seed),
            ("cluster_seed", self.cluster_seed),
            ("synth_seed", self.synth_seed),
        ]
    }

    pub fn skeleton(&self) -> SkeletonOptConfig {
        SkeletonOptConfig {
            n_skeleton_points: self.n_skeleton_points,
            iterations: self.iterations,
            learning_rate: self.learning_rate,
            lambda_r: self.lambda_r,
            lambda_n: self.lambda_n,
            sphere_samples: self.sphere_samples,
            input_samples: self.input_samples,
            init_bandwidth: self.init_bandwidth,
            init_noise: self.init_noise,
            seed: self.skeleton_seed,
        }
    }

    pub fn links(&self) -> Result<LinkConfig> {
        let [h1, h2] = self.gae_hidden[..] else {
            return Err(Error::Config(format!(
                "gae_hidden needs exactly two widths, got {}",
                self.gae_hidden.len()
            )));
        };
        Ok(LinkConfig {
            k: self.link_k,
            gae: GaeConfig {
                hidden: (h1, h2),
                epochs: self.gae_epochs,
                learning_rate: self.gae_learning_rate,
                seed: self.gae_seed,
            },
            threshold: self.link_threshold,
            ensure_connected: self.ensure_connected,
        })
    }

    pub fn embed(&self) -> Result<EmbedConfig> {
        let disc_widths: [usize; 3] = self.embed_disc_widths.clone().try_into().map_err(|w: Vec<usize>| {
            Error::Config(format!("embed_disc_widths needs exactly three widths, got {}", w.len()))
        })?;
        let cfg = EmbedConfig {
            layers: self.embed_layers.clone(),
            pooling: self.embed_pooling,
            disc_widths,
            epochs: self.embed_epochs,
            learning_rate: self.embed_learning_rate,
            negatives_per_positive: self.embed_negatives,
            seed: self.embed_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn shape(&self) -> Result<ShapeKind> {
        ShapeKind::from_name(&self.synth_kind, &self.synth_dims)
    }

    /// Checks cross-field constraints that individual parsers cannot.
    pub fn validate(&self) -> Result<()> {
        self.skeleton().validate()?;
        self.links()?;
        self.embed()?;
        self.shape()?;
        if self.sample_m == 0 || self.synth_count == 0 {
            return Err(Error::Config("sample_m and synth_count must be positive".into()));
        }
        if !(self.link_threshold > 0.0 && self.link_threshold < 1.0) {
            return Err(Error::Config(format!(
                "link_threshold {} must lie in (0, 1)",
                self.link_threshold
            )));
        }
        if self.cluster_k == 0 || self.spectrum_dim == 0 || self.path_budget == 0 {
            return Err(Error::Config(
                "cluster_k, spectrum_dim and path_budget must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn strip_prefix(e: &Error) -> String {
    match e {
        Error::Config(m) => m.clone(),
        other => other.to_string(),
    }
}
