use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use noisyfnn::mitigation::{GhostConfig, GhostMode, MitigationPlan, PoolConfig};
use noisyfnn::mnist::{self, TrainConfig};
use noisyfnn::network::{Activation, NetworkTopology};
use noisyfnn::noise::NoiseSpec;
use noisyfnn::sim::SimConfig;

use crate::generate::Generator;
use crate::ConfigError;

/// Everything an experiment needs. Read from TOML, then overridden by flags.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network: Option<NetworkSource>,
    pub noise: NoiseConfig,
    pub plan: PlanConfig,
    pub sim: SimConfig,
    pub mnist: MnistConfig,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSource {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<Generator>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub da_u: f64,
    pub da_c: f64,
    pub dm_u: f64,
    pub dm_c: f64,
    /// Noisy layers. Unset means every layer, or the hidden and output
    /// layers for the MNIST commands.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    None,
    /// Pools of 4 and adaptive ghosts on every non-input layer.
    Combined,
    /// Pools of 4 on every non-input layer and a `W_g = -1` ghost on the last.
    CombinedFixed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ghost: Option<GhostConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool: Option<PoolConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MnistConfig {
    /// Directory with the four uncompressed IDX files.
    pub dir: PathBuf,
    /// Trained model to read (eval, snr) or write (train).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    pub train: TrainConfig,
    /// Noisy presentations per test image.
    pub presentations: usize,
    /// Test digits drawn for the SNR table.
    pub digits: usize,
}

impl Default for MnistConfig {
    fn default() -> Self {
        MnistConfig {
            dir: PathBuf::from("data/mnist"),
            model: None,
            train: TrainConfig::default(),
            presentations: 1,
            digits: 500,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub da_u: Option<f64>,
    pub da_c: Option<f64>,
    pub dm_u: Option<f64>,
    pub dm_c: Option<f64>,
    pub ghost: Option<GhostMode>,
    pub pool: Option<usize>,
    pub plan: Option<Preset>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub network: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub presentations: Option<usize>,
    pub digits: Option<usize>,
    pub epochs: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| ConfigError::new(format!("malformed config {}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.sim.seed = s;
            self.mnist.train.seed = s;
        }
        if let Some(k) = o.k {
            self.sim.trials = k;
        }
        for (flag, slot) in [
            (o.da_u, &mut self.noise.da_u),
            (o.da_c, &mut self.noise.da_c),
            (o.dm_u, &mut self.noise.dm_u),
            (o.dm_c, &mut self.noise.dm_c),
        ] {
            if let Some(v) = flag {
                *slot = v;
            }
        }
        if let Some(p) = o.plan {
            self.plan = PlanConfig {
                preset: Some(p),
                ..PlanConfig::default()
            };
        }
        if let Some(mode) = o.ghost {
            self.plan.ghost = Some(GhostConfig::new(mode));
        }
        if let Some(m) = o.pool {
            self.plan.pool = Some(PoolConfig::new(m));
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
        if let Some(t) = o.threads {
            self.threads = Some(t);
        }
        if let Some(n) = &o.network {
            self.network = Some(NetworkSource {
                file: Some(n.clone()),
                generator: None,
            });
        }
        if let Some(m) = &o.model {
            self.mnist.model = Some(m.clone());
        }
        if let Some(d) = &o.data {
            self.mnist.dir = d.clone();
        }
        if let Some(p) = o.presentations {
            self.mnist.presentations = p;
        }
        if let Some(d) = o.digits {
            self.mnist.digits = d;
        }
        if let Some(e) = o.epochs {
            self.mnist.train.epochs = e;
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    /// The noise spec, masked to `default_layers` when no layers are set.
    pub fn noise_spec(&self, default_layers: Option<&[usize]>) -> Result<NoiseSpec, ConfigError> {
        let n = &self.noise;
        let spec = NoiseSpec::new(n.da_u, n.da_c, n.dm_u, n.dm_c).map_err(ConfigError::from_lib)?;
        Ok(match (&n.layers, default_layers) {
            (Some(l), _) => spec.on_layers(l.iter().copied()),
            (None, Some(d)) => spec.on_layers(d.iter().copied()),
            (None, None) => spec,
        })
    }

    /// The mitigation plan for a network of `depth` layers, or `None` when
    /// nothing is configured.
    pub fn mitigation(&self, depth: usize) -> Option<MitigationPlan> {
        let last = depth.saturating_sub(1);
        let mut plan = match self.plan.preset {
            None | Some(Preset::None) => MitigationPlan::none(),
            Some(Preset::Combined) => {
                MitigationPlan::combined(PoolConfig::new(4), GhostConfig::new(GhostMode::Adaptive))
            }
            Some(Preset::CombinedFixed) => MitigationPlan::combined(
                PoolConfig::new(4),
                GhostConfig::new(GhostMode::Weighted { wg: -1.0 }).on_layers([last]),
            ),
        };
        if let Some(g) = &self.plan.ghost {
            plan.ghost = Some(g.clone());
        }
        if let Some(p) = &self.plan.pool {
            plan.pool = Some(p.clone());
        }
        (!plan.is_empty()).then_some(plan)
    }

    pub fn network(&self) -> Result<NetworkTopology, ConfigError> {
        let source = self
            .network
            .as_ref()
            .ok_or_else(|| ConfigError::new("no network given: set [network] in the config or pass --network"))?;
        match (&source.file, &source.generator) {
            (Some(f), None) => {
                if !f.exists() {
                    return Err(ConfigError::new(format!("network file {} does not exist", f.display())));
                }
                NetworkTopology::load(f)
                    .map_err(|e| ConfigError::new(format!("cannot load network {}: {e}", f.display())))
            }
            (None, Some(g)) => g.build().map_err(ConfigError::from_lib),
            _ => Err(ConfigError::new("[network] needs exactly one of `file` or `generator`")),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.sim.validate().map_err(ConfigError::from_lib)?;
        if self.threads == Some(0) {
            return Err(ConfigError::new("threads must be at least 1"));
        }
        Ok(())
    }
}

/// The MNIST presets live in the library; they coincide with the generic
/// ones on a three-layer network.
pub fn mnist_plan(cfg: &ExperimentConfig) -> Option<MitigationPlan> {
    let generic = cfg.mitigation(3)?;
    Some(match (cfg.plan.preset, &cfg.plan.ghost, &cfg.plan.pool) {
        (Some(Preset::Combined), None, None) => mnist::combined_plan(),
        (Some(Preset::CombinedFixed), None, None) => mnist::combined_fixed_plan(),
        _ => generic,
    })
}

/// `direct`, `adaptive` or `wg=<value>`.
pub fn parse_ghost(s: &str) -> Result<GhostMode, String> {
    match s {
        "direct" => Ok(GhostMode::Direct),
        "adaptive" => Ok(GhostMode::Adaptive),
        _ => {
            let v = s
                .strip_prefix("wg=")
                .ok_or_else(|| format!("expected direct, adaptive or wg=<value>, got `{s}`"))?;
            let wg: f64 = v.parse().map_err(|_| format!("bad ghost weight `{v}`"))?;
            if !wg.is_finite() {
                return Err(format!("ghost weight must be finite, got {v}"));
            }
            Ok(GhostMode::Weighted { wg })
        }
    }
}

/// `m=<k>` or just `<k>`.
pub fn parse_pool(s: &str) -> Result<usize, String> {
    let v = s.strip_prefix("m=").unwrap_or(s);
    match v.parse::<usize>() {
        Ok(m) if m >= 1 => Ok(m),
        _ => Err(format!("expected m=<positive integer>, got `{s}`")),
    }
}

pub fn default_activation() -> Activation {
    Activation::sigmoid(7.0, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn guide_example_parses() {
        let chapter = include_str!("../../../book/src/cli.md");
        let start = chapter.find("```toml\n").unwrap() + 8;
        let len = chapter[start..].find("```").unwrap();
        let cfg: ExperimentConfig = toml::from_str(&chapter[start..start + len]).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.plan.preset, Some(Preset::Combined));
        assert_eq!(cfg.mnist.train.epochs, 30);
    }

    #[test]
    fn flags_override_file() {
        let mut cfg: ExperimentConfig = toml::from_str(
            r#"
            [noise]
            da_u = 1e-4
            da_c = 1e-3
            [sim]
            trials = 50
            seed = 3
            "#,
        )
        .unwrap();
        cfg.apply(&Overrides {
            da_c: Some(0.0),
            k: Some(77),
            ghost: Some(GhostMode::Direct),
            ..Overrides::default()
        });
        assert_eq!(cfg.noise.da_u, 1e-4);
        assert_eq!(cfg.noise.da_c, 0.0);
        assert_eq!(cfg.sim.trials, 77);
        assert_eq!(cfg.sim.seed, 3);
        assert_eq!(cfg.plan.ghost.unwrap().mode, GhostMode::Direct);
    }

    #[test]
    fn parses_flag_values() {
        assert_eq!(parse_ghost("wg=-0.5").unwrap(), GhostMode::Weighted { wg: -0.5 });
        assert_eq!(parse_ghost("adaptive").unwrap(), GhostMode::Adaptive);
        assert!(parse_ghost("wg=x").is_err());
        assert!(parse_ghost("ghostly").is_err());
        assert_eq!(parse_pool("m=4").unwrap(), 4);
        assert_eq!(parse_pool("9").unwrap(), 9);
        assert!(parse_pool("m=0").is_err());
    }

    #[test]
    fn presets() {
        let mut cfg = ExperimentConfig::default();
        assert!(cfg.mitigation(3).is_none());
        cfg.plan.preset = Some(Preset::Combined);
        assert_eq!(mnist_plan(&cfg).unwrap(), mnist::combined_plan());
        assert_eq!(
            noisyfnn::mitigation::apply_plan(&sample(), &cfg.mitigation(3).unwrap()).unwrap(),
            noisyfnn::mitigation::apply_plan(&sample(), &mnist::combined_plan()).unwrap()
        );
        cfg.plan.preset = Some(Preset::CombinedFixed);
        assert_eq!(mnist_plan(&cfg).unwrap(), mnist::combined_fixed_plan());
    }

    fn sample() -> NetworkTopology {
        use noisyfnn::network::WeightMatrix;
        NetworkTopology::dense(
            &[2, 3, 2],
            &[Activation::Linear, default_activation(), default_activation()],
            vec![WeightMatrix::filled(3, 2, 0.3), WeightMatrix::filled(2, 3, -0.2)],
        )
        .unwrap()
    }

    #[test]
    fn rejects_unknown_keys_and_double_sources() {
        assert!(toml::from_str::<ExperimentConfig>("colour = 1").is_err());
        let cfg: ExperimentConfig = toml::from_str(
            r#"
            [network]
            file = "a.json"
            generator = { kind = "fan" }
            "#,
        )
        .unwrap();
        assert!(cfg.network().is_err());
        assert!(ExperimentConfig::default().network().is_err());
    }
}
