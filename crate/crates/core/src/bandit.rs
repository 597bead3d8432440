//! Bandit instances, the Huber contamination model and seeded reward
//! generation.
//!
//! Every random draw is keyed by `(master_seed, trial, stream, arm, t)` and
//! produced by a freshly keyed ChaCha8 generator, so a draw never depends on
//! which draws happened before it. That is what makes the adversary
//! oblivious: the corruption coin `D_t` and the adversarial sample
//! `X'_{i,t}` are fixed before the policy acts.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{arg, CbaiError, Result};

/// Reward distribution of a single arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ArmDistribution {
    Gaussian { mean: f64, sigma: f64 },
    Exponential { mean: f64 },
    Lognormal { mu_log: f64, sigma_log: f64 },
    Bernoulli { p: f64 },
}

impl ArmDistribution {
    pub fn gaussian(mean: f64, sigma: f64) -> Result<Self> {
        Self::Gaussian { mean, sigma }.validated()
    }

    pub fn exponential(mean: f64) -> Result<Self> {
        Self::Exponential { mean }.validated()
    }

    pub fn lognormal(mu_log: f64, sigma_log: f64) -> Result<Self> {
        Self::Lognormal { mu_log, sigma_log }.validated()
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::Bernoulli { p }.validated()
    }

    /// Checks the parameter constraints of the family.
    pub fn validated(self) -> Result<Self> {
        let ok = match self {
            Self::Gaussian { mean, sigma } => mean.is_finite() && sigma.is_finite() && sigma > 0.0,
            Self::Exponential { mean } => mean.is_finite() && mean > 0.0,
            Self::Lognormal { mu_log, sigma_log } => {
                mu_log.is_finite() && sigma_log.is_finite() && sigma_log > 0.0
            }
            Self::Bernoulli { p } => (0.0..=1.0).contains(&p),
        };
        if ok && self.true_mean().is_finite() {
            Ok(self)
        } else {
            arg(format!("invalid arm distribution parameters: {self:?}"))
        }
    }

    pub fn true_mean(&self) -> f64 {
        match *self {
            Self::Gaussian { mean, .. } => mean,
            Self::Exponential { mean } => mean,
            Self::Lognormal { mu_log, sigma_log } => (mu_log + 0.5 * sigma_log * sigma_log).exp(),
            Self::Bernoulli { p } => p,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // Parameters were validated at construction, so the constructors below cannot fail.
        match *self {
            Self::Gaussian { mean, sigma } => Normal::new(mean, sigma).unwrap().sample(rng),
            Self::Exponential { mean } => Exp::new(1.0 / mean).unwrap().sample(rng),
            Self::Lognormal { mu_log, sigma_log } => {
                LogNormal::new(mu_log, sigma_log).unwrap().sample(rng)
            }
            Self::Bernoulli { p } => {
                if rng.random_bool(p) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// A K-armed bandit with a known sub-Gaussian scale and per-arm
/// estimation uncertainties `U_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BanditInstance {
    arms: Vec<ArmDistribution>,
    sigma_proxy: f64,
    uncertainty: Vec<f64>,
    best: usize,
}

impl BanditInstance {
    /// Builds an instance with zero uncertainty on every arm.
    pub fn new(arms: Vec<ArmDistribution>, sigma_proxy: f64) -> Result<Self> {
        let k = arms.len();
        Self::with_uncertainty(arms, sigma_proxy, vec![0.0; k])
    }

    /// Builds an instance and rejects it unless the best arm stays strictly
    /// separated once each mean is widened by its uncertainty.
    pub fn with_uncertainty(
        arms: Vec<ArmDistribution>,
        sigma_proxy: f64,
        uncertainty: Vec<f64>,
    ) -> Result<Self> {
        if arms.is_empty() {
            return arg("a bandit instance needs at least one arm");
        }
        if !(sigma_proxy.is_finite() && sigma_proxy > 0.0) {
            return arg(format!(
                "sigma_proxy must be positive and finite, got {sigma_proxy}"
            ));
        }
        if uncertainty.len() != arms.len() {
            return arg(format!(
                "uncertainty has {} entries but the instance has {} arms",
                uncertainty.len(),
                arms.len()
            ));
        }
        if uncertainty.iter().any(|u| !(u.is_finite() && *u >= 0.0)) {
            return arg("uncertainties must be finite and non-negative");
        }
        let arms = arms
            .into_iter()
            .map(ArmDistribution::validated)
            .collect::<Result<Vec<_>>>()?;
        let means: Vec<f64> = arms.iter().map(ArmDistribution::true_mean).collect();
        let best = argmax(&means);
        check_separation(&means, &uncertainty)?;
        Ok(Self {
            arms,
            sigma_proxy,
            uncertainty,
            best,
        })
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn arms(&self) -> &[ArmDistribution] {
        &self.arms
    }

    pub fn sigma_proxy(&self) -> f64 {
        self.sigma_proxy
    }

    pub fn uncertainty(&self) -> &[f64] {
        &self.uncertainty
    }

    pub fn true_means(&self) -> Vec<f64> {
        self.arms.iter().map(ArmDistribution::true_mean).collect()
    }

    /// Lowest index attaining the largest true mean.
    pub fn best_arm(&self) -> usize {
        self.best
    }

    /// The runner-up: the non-best arm with the smallest gap.
    pub fn second_best(&self) -> Option<usize> {
        let gaps = true_gaps(&self.true_means(), &self.uncertainty).ok()?;
        (0..self.num_arms())
            .filter(|&i| i != self.best)
            .min_by(|&a, &b| gaps[a].total_cmp(&gaps[b]).then(a.cmp(&b)))
    }
}

/// Index of the maximum, ties resolved towards the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn check_separation(means: &[f64], uncertainty: &[f64]) -> Result<()> {
    let best = argmax(means);
    let lower = means[best] - uncertainty[best];
    for (i, (m, u)) in means.iter().zip(uncertainty).enumerate() {
        if i != best && !(lower > m + u) {
            return Err(CbaiError::Precondition {
                best,
                arm: i,
                detail: format!(
                    "best lower endpoint {lower} does not exceed upper endpoint {} of arm {i}",
                    m + u
                ),
            });
        }
    }
    Ok(())
}

/// Suboptimality gaps `(mu_best - U_best) - (mu_i + U_i)`.
///
/// The best arm's own entry is `-2 U_best`, which is zero when the
/// uncertainties are.
pub fn true_gaps(means: &[f64], uncertainty: &[f64]) -> Result<Vec<f64>> {
    if means.is_empty() || means.len() != uncertainty.len() {
        return arg("means and uncertainties must be non-empty and of equal length");
    }
    check_separation(means, uncertainty)?;
    let best = argmax(means);
    let lower = means[best] - uncertainty[best];
    Ok(means
        .iter()
        .zip(uncertainty)
        .map(|(m, u)| lower - (m + u))
        .collect())
}

/// Distribution `Q_i` of an adversarial sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Adversary {
    /// No adversarial distribution; only valid with `epsilon = 0`.
    None,
    /// `Q_i` is `P_i` translated by `shift`.
    FixedShift { shift: f64 },
    /// `Q_i` is uniform on `[m_i - half_width, m_i + half_width]` where each
    /// `m_i` is drawn once per trial, uniformly from `[mean_low, mean_high]`.
    UniformRandomMean {
        half_width: f64,
        mean_low: f64,
        mean_high: f64,
    },
}

/// Maximum number of redraws of the per-trial adversarial means.
pub const MAX_ADVERSARY_RESAMPLES: usize = 100;

/// Huber contamination: each reward is replaced with probability `epsilon`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContaminationModel {
    epsilon: f64,
    adversary: Adversary,
}

impl ContaminationModel {
    pub fn new(epsilon: f64, adversary: Adversary) -> Result<Self> {
        if !(0.0..0.5).contains(&epsilon) {
            return arg(format!("epsilon must lie in [0, 0.5), got {epsilon}"));
        }
        match adversary {
            Adversary::None if epsilon > 0.0 => {
                return arg("epsilon > 0 requires an adversary");
            }
            Adversary::FixedShift { shift } if !shift.is_finite() => {
                return arg("adversarial shift must be finite");
            }
            Adversary::UniformRandomMean {
                half_width,
                mean_low,
                mean_high,
            } if !(half_width.is_finite()
                && half_width >= 0.0
                && mean_low.is_finite()
                && mean_high.is_finite()
                && mean_low <= mean_high) =>
            {
                return arg("uniform adversary needs half_width >= 0 and mean_low <= mean_high");
            }
            _ => {}
        }
        Ok(Self { epsilon, adversary })
    }

    pub fn none() -> Self {
        Self {
            epsilon: 0.0,
            adversary: Adversary::None,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn adversary(&self) -> &Adversary {
        &self.adversary
    }
}

/// Independent random streams of a trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stream {
    NaturalReward,
    CorruptionCoin,
    AdversarialSample,
    /// Per-trial draws of the adversarial means.
    AdversarySetup,
    /// Randomised arm choices of a policy.
    PolicyChoice,
}

impl Stream {
    fn tag(self) -> u64 {
        match self {
            Self::NaturalReward => 0x6e61_7475_7261_6c00,
            Self::CorruptionCoin => 0x636f_696e_0000_0001,
            Self::AdversarialSample => 0x6164_7673_616d_0002,
            Self::AdversarySetup => 0x6164_7673_6574_0003,
            Self::PolicyChoice => 0x706f_6c69_6379_0004,
        }
    }
}

/// Identifies one random stream of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub trial_index: u64,
    pub stream: Stream,
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master_seed: u64, trial_index: u64, stream: Stream) -> Self {
        Self {
            master_seed,
            trial_index,
            stream,
        }
    }

    pub fn with_stream(self, stream: Stream) -> Self {
        Self { stream, ..self }
    }

    /// 64-bit key of draw `(arm, t)` in this stream.
    pub fn key(&self, arm: u64, t: u64) -> u64 {
        let mut h = mix64(self.master_seed);
        for word in [self.trial_index, self.stream.tag(), arm, t] {
            h = mix64(h ^ word);
        }
        h
    }

    /// Generator for draw `(arm, t)`; a pure function of its inputs.
    pub fn rng(&self, arm: u64, t: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.key(arm, t))
    }
}

/// One observed reward together with its hidden corruption flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Draw {
    pub reward: f64,
    pub contaminated: bool,
}

/// Contamination realised for one trial: the adversarial distribution of
/// every arm is fixed here, before any arm is pulled.
#[derive(Debug, Clone)]
pub struct TrialEnvironment<'a> {
    instance: &'a BanditInstance,
    epsilon: f64,
    adversarial: Vec<AdversarialArm>,
    seeds: SeedSpec,
}

#[derive(Debug, Clone, Copy)]
enum AdversarialArm {
    Unused,
    Shifted(f64),
    Uniform { low: f64, high: f64 },
}

impl<'a> TrialEnvironment<'a> {
    pub fn new(
        instance: &'a BanditInstance,
        contamination: &ContaminationModel,
        master_seed: u64,
        trial_index: u64,
    ) -> Result<Self> {
        let seeds = SeedSpec::new(master_seed, trial_index, Stream::NaturalReward);
        let means = instance.true_means();
        let epsilon = contamination.epsilon();
        let k = instance.num_arms();
        let adversarial = match *contamination.adversary() {
            Adversary::None => vec![AdversarialArm::Unused; k],
            Adversary::FixedShift { shift } => vec![AdversarialArm::Shifted(shift); k],
            Adversary::UniformRandomMean {
                half_width,
                mean_low,
                mean_high,
            } => {
                let setup = seeds.with_stream(Stream::AdversarySetup);
                let mut accepted = None;
                for attempt in 0..MAX_ADVERSARY_RESAMPLES as u64 {
                    let mut rng = setup.rng(0, attempt);
                    let centres: Vec<f64> = (0..k)
                        .map(|_| {
                            if mean_high > mean_low {
                                rng.random_range(mean_low..=mean_high)
                            } else {
                                mean_low
                            }
                        })
                        .collect();
                    let mixed: Vec<f64> = means
                        .iter()
                        .zip(&centres)
                        .map(|(m, c)| (1.0 - epsilon) * m + epsilon * c)
                        .collect();
                    if preserves_best(&mixed, instance.best_arm()) {
                        accepted = Some(centres);
                        break;
                    }
                }
                let centres = accepted.ok_or_else(|| {
                    CbaiError::Config(format!(
                        "trial {trial_index}: no adversarial means preserving the best arm after \
                         {MAX_ADVERSARY_RESAMPLES} draws"
                    ))
                })?;
                centres
                    .into_iter()
                    .map(|c| AdversarialArm::Uniform {
                        low: c - half_width,
                        high: c + half_width,
                    })
                    .collect()
            }
        };
        Ok(Self {
            instance,
            epsilon,
            adversarial,
            seeds,
        })
    }

    pub fn instance(&self) -> &BanditInstance {
        self.instance
    }

    /// Observed reward of `arm` at round `t >= 1`.
    pub fn sample(&self, arm: usize, t: u64) -> Result<Draw> {
        if arm >= self.instance.num_arms() {
            return arg(format!(
                "arm {arm} out of range for {} arms",
                self.instance.num_arms()
            ));
        }
        if t == 0 {
            return arg("rounds are numbered from 1");
        }
        let contaminated = self.epsilon > 0.0
            && self
                .seeds
                .with_stream(Stream::CorruptionCoin)
                .rng(0, t)
                .random_bool(self.epsilon);
        let reward = if contaminated {
            let mut rng = self
                .seeds
                .with_stream(Stream::AdversarialSample)
                .rng(arm as u64, t);
            match self.adversarial[arm] {
                AdversarialArm::Unused => unreachable!("epsilon > 0 always has an adversary"),
                AdversarialArm::Shifted(shift) => self.instance.arms[arm].sample(&mut rng) + shift,
                AdversarialArm::Uniform { low, high } if high > low => rng.random_range(low..high),
                AdversarialArm::Uniform { low, .. } => low,
            }
        } else {
            let mut rng = self.seeds.rng(arm as u64, t);
            self.instance.arms[arm].sample(&mut rng)
        };
        Ok(Draw {
            reward,
            contaminated,
        })
    }

    /// Means of the adversarial distributions, `None` for arms never corrupted.
    pub fn adversarial_means(&self) -> Vec<Option<f64>> {
        self.adversarial
            .iter()
            .zip(self.instance.arms())
            .map(|(a, arm)| match *a {
                AdversarialArm::Unused => None,
                AdversarialArm::Shifted(s) => Some(arm.true_mean() + s),
                AdversarialArm::Uniform { low, high } => Some(0.5 * (low + high)),
            })
            .collect()
    }
}

fn preserves_best(mixed: &[f64], best: usize) -> bool {
    mixed
        .iter()
        .enumerate()
        .all(|(i, m)| i == best || mixed[best] > *m)
}

/// Observed reward of `arm` at round `t` for the trial named by `seeds`.
///
/// Builds the trial's adversary on every call; simulations should hold a
/// [`TrialEnvironment`] instead.
pub fn sample_reward(
    instance: &BanditInstance,
    contamination: &ContaminationModel,
    arm: usize,
    t: u64,
    seeds: SeedSpec,
) -> Result<f64> {
    TrialEnvironment::new(
        instance,
        contamination,
        seeds.master_seed,
        seeds.trial_index,
    )?
    .sample(arm, t)
    .map(|d| d.reward)
}
