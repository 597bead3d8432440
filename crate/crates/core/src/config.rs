//! TOML experiment configuration.
//!
//! ```toml
//! [instance]
//! family = "gaussian"
//! means = [2.5, 2.3, 2.0, 0.6]
//! sigma = 1.0
//!
//! [contamination]
//! epsilon = 0.1
//! adversary = "fixed_shift"
//! shift = 5.0
//!
//! [policy]
//! name = "gcbai"
//! delta = 0.1
//!
//! [run]
//! n_trials = 1000
//! master_seed = 1
//! ```

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::algorithms::{PolicyConfig, PolicyKind, RadiusMode, DEFAULT_MAX_PULLS};
use crate::bandit::{Adversary, ArmDistribution, BanditInstance, ContaminationModel};
use crate::confidence::{RadiusParams, DEFAULT_BETA_EXP, DEFAULT_C1_UNCERTAINTY};
use crate::error::{CbaiError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Exponential,
    Lognormal,
    Bernoulli,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub family: Family,
    /// Arm means for gaussian and exponential arms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<f64>>,
    /// Noise standard deviation of gaussian arms (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_log: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_log: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    /// Sub-Gaussian scale used by every radius. Defaults: gaussian -> sigma,
    /// exponential -> largest mean, bernoulli -> 0.5; required for lognormal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma_proxy: Option<f64>,
    /// Per-arm uncertainties `U_i` (default 0).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryKind {
    #[default]
    None,
    FixedShift,
    UniformRandomMean,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContaminationSpec {
    #[serde(default)]
    pub epsilon: f64,
    /// Contamination bound known to the policy; defaults to `epsilon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon_assumed: Option<f64>,
    #[serde(default)]
    pub adversary: AdversaryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub shift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_low: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_high: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub name: PolicyKind,
    #[serde(default)]
    pub radius_mode: RadiusMode,
    pub delta: f64,
    /// Trim fraction; defaults to `epsilon_assumed / 2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta_exp: f64,
    #[serde(default = "default_c1")]
    pub c1_uncertainty: f64,
}

fn default_beta() -> f64 {
    DEFAULT_BETA_EXP
}

fn default_c1() -> f64 {
    DEFAULT_C1_UNCERTAINTY
}

pub const DEFAULT_TRIALS: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    /// Cap on total pulls per trial.
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    /// Per-trial JSON-lines file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<String>,
    /// Worker threads; 0 or absent uses every core. Never affects results.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

fn default_trials() -> usize {
    DEFAULT_TRIALS
}

fn default_max_rounds() -> u64 {
    DEFAULT_MAX_PULLS
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            n_trials: DEFAULT_TRIALS,
            master_seed: 0,
            max_rounds: DEFAULT_MAX_PULLS,
            output: None,
            trace: None,
            workers: None,
        }
    }
}

/// The whole configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub instance: InstanceSpec,
    #[serde(default)]
    pub contamination: ContaminationSpec,
    pub policy: PolicySpec,
    #[serde(default)]
    pub run: RunSpec,
}

fn cfg<T>(msg: impl Into<String>) -> Result<T> {
    Err(CbaiError::Config(msg.into()))
}

fn as_config(e: CbaiError) -> CbaiError {
    match e {
        CbaiError::Argument(m) => CbaiError::Config(m),
        other => other,
    }
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CbaiError::Config(e.to_string().trim().replace('\n', " ")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CbaiError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always serialisable")
    }
}

impl InstanceSpec {
    pub fn gaussian(means: Vec<f64>, sigma: f64) -> Self {
        Self {
            family: Family::Gaussian,
            means: Some(means),
            sigma: Some(sigma),
            mu_log: None,
            sigma_log: None,
            p: None,
            sigma_proxy: None,
            uncertainty: None,
        }
    }

    pub fn build(&self) -> Result<BanditInstance> {
        let need = |v: &Option<Vec<f64>>, name: &str| -> Result<Vec<f64>> {
            v.clone()
                .ok_or_else(|| CbaiError::Config(format!("instance.{name} is required")))
        };
        let (arms, default_proxy) = match self.family {
            Family::Gaussian => {
                let sigma = self.sigma.unwrap_or(1.0);
                let arms = need(&self.means, "means")?
                    .into_iter()
                    .map(|m| ArmDistribution::gaussian(m, sigma))
                    .collect::<Result<Vec<_>>>();
                (arms, Some(sigma))
            }
            Family::Exponential => {
                let means = need(&self.means, "means")?;
                let top = means.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let arms = means
                    .into_iter()
                    .map(ArmDistribution::exponential)
                    .collect::<Result<Vec<_>>>();
                (arms, Some(top))
            }
            Family::Lognormal => {
                let mu = need(&self.mu_log, "mu_log")?;
                let sd = need(&self.sigma_log, "sigma_log")?;
                if mu.len() != sd.len() {
                    return cfg("instance.mu_log and instance.sigma_log differ in length");
                }
                let arms = mu
                    .into_iter()
                    .zip(sd)
                    .map(|(m, s)| ArmDistribution::lognormal(m, s))
                    .collect::<Result<Vec<_>>>();
                (arms, None)
            }
            Family::Bernoulli => {
                let arms = need(&self.p, "p")?
                    .into_iter()
                    .map(ArmDistribution::bernoulli)
                    .collect::<Result<Vec<_>>>();
                (arms, Some(0.5))
            }
        };
        let arms = arms.map_err(as_config)?;
        let proxy = match self.sigma_proxy.or(default_proxy) {
            Some(p) => p,
            None => return cfg("instance.sigma_proxy is required for this family"),
        };
        let uncertainty = self
            .uncertainty
            .clone()
            .unwrap_or_else(|| vec![0.0; arms.len()]);
        BanditInstance::with_uncertainty(arms, proxy, uncertainty).map_err(as_config)
    }
}

impl ContaminationSpec {
    pub fn build(&self) -> Result<ContaminationModel> {
        let need = |v: Option<f64>, name: &str| -> Result<f64> {
            v.ok_or_else(|| CbaiError::Config(format!("contamination.{name} is required")))
        };
        let adversary = match self.adversary {
            AdversaryKind::None => Adversary::None,
            AdversaryKind::FixedShift => Adversary::FixedShift {
                shift: need(self.shift, "shift")?,
            },
            AdversaryKind::UniformRandomMean => Adversary::UniformRandomMean {
                half_width: need(self.half_width, "half_width")?,
                mean_low: need(self.mean_low, "mean_low")?,
                mean_high: need(self.mean_high, "mean_high")?,
            },
        };
        ContaminationModel::new(self.epsilon, adversary).map_err(as_config)
    }

    pub fn assumed(&self) -> f64 {
        self.epsilon_assumed.unwrap_or(self.epsilon)
    }
}

/// A validated, ready-to-run experiment.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub spec: ConfigFile,
    pub instance: BanditInstance,
    pub contamination: ContaminationModel,
    pub policy: PolicyConfig,
}

impl ExperimentConfig {
    pub fn from_spec(spec: ConfigFile) -> Result<Self> {
        let instance = spec.instance.build()?;
        let contamination = spec.contamination.build()?;
        let assumed = spec.contamination.assumed();
        let p = &spec.policy;
        let radius = RadiusParams::with_constants(
            instance.sigma_proxy(),
            assumed,
            instance.num_arms(),
            p.delta,
            p.beta_exp,
            p.c1_uncertainty,
        )
        .map_err(as_config)?;
        let mut policy = PolicyConfig::new(p.name, radius);
        policy.radius_mode = p.radius_mode;
        if let Some(alpha) = p.alpha {
            if !(0.0..0.5).contains(&alpha) {
                return cfg(format!("policy.alpha must lie in [0, 0.5), got {alpha}"));
            }
            policy.alpha = alpha;
        }
        if spec.run.n_trials == 0 {
            return cfg("run.n_trials must be at least 1");
        }
        if spec.run.max_rounds == 0 {
            return cfg("run.max_rounds must be at least 1");
        }
        policy.max_pulls = spec.run.max_rounds;
        Ok(Self {
            spec,
            instance,
            contamination,
            policy,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Self::from_spec(ConfigFile::from_toml(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_spec(ConfigFile::load(path)?)
    }

    pub fn n_trials(&self) -> usize {
        self.spec.run.n_trials
    }

    pub fn master_seed(&self) -> u64 {
        self.spec.run.master_seed
    }

    /// Copy with a different confidence level.
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.policy.delta = delta;
        Self::from_spec(spec)
    }

    /// Copy with a different contamination level; the assumed bound follows it.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.contamination.epsilon = epsilon;
        spec.contamination.epsilon_assumed = None;
        if epsilon > 0.0 && spec.contamination.adversary == AdversaryKind::None {
            return cfg("a positive epsilon needs an adversary");
        }
        Self::from_spec(spec)
    }

    pub fn with_policy(&self, kind: PolicyKind) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.policy.name = kind;
        Self::from_spec(spec)
    }

    pub fn with_trials(&self, n_trials: usize) -> Result<Self> {
        let mut spec = self.spec.clone();
        spec.run.n_trials = n_trials;
        Self::from_spec(spec)
    }
}
