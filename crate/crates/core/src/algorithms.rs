//! Sequential identification policies.
//!
//! Two families share the [`Policy`] interface:
//!
//! * [`GapPolicy`]: forced exploration up to `max(sqrt(t), T(alpha, delta))`
//!   pulls per arm, then alternates between the empirical best arm and the
//!   most ambiguous competitor, stopping once their confidence intervals
//!   separate. With uniform sampling it becomes the random baseline.
//! * [`EliminationPolicy`]: samples every active arm once per round and
//!   drops arms whose estimate falls `2 gamma_t` below the leader, never
//!   before they have `T(alpha, delta)` samples.
//!
//! Ties are always resolved towards the lowest arm index.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bandit::{argmax, SeedSpec, Stream};
use crate::confidence::{
    beta_gap_radius, empirical_radius, exploration_floor, gamma_se_radius, RadiusParams,
};
use crate::error::{arg, state, Result};
use crate::estimators::{ArmStatistics, Estimator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Gcbai,
    Secbai,
    MedianSe,
    RandomGap,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [Self::Gcbai, Self::Secbai, Self::MedianSe, Self::RandomGap];

    pub fn name(self) -> &'static str {
        match self {
            Self::Gcbai => "gcbai",
            Self::Secbai => "secbai",
            Self::MedianSe => "median_se",
            Self::RandomGap => "random_gap",
        }
    }

    pub fn is_elimination(self) -> bool {
        matches!(self, Self::Secbai | Self::MedianSe)
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = crate::error::CbaiError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .map_or_else(|| arg(format!("unknown policy {s:?}")), Ok)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RadiusMode {
    /// Radii with the PAC guarantee.
    #[default]
    Theorem,
    /// `sigma sqrt((2/N) ln(ln t / delta))`; tighter, no guarantee.
    Empirical,
}

impl RadiusMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Theorem => "theorem",
            Self::Empirical => "empirical",
        }
    }
}

impl std::str::FromStr for RadiusMode {
    type Err = crate::error::CbaiError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theorem" => Ok(Self::Theorem),
            "empirical" => Ok(Self::Empirical),
            _ => arg(format!("unknown radius mode {s:?}")),
        }
    }
}

pub const DEFAULT_MAX_PULLS: u64 = 10_000_000;

/// Everything a policy needs besides the reward stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub radius: RadiusParams,
    pub radius_mode: RadiusMode,
    /// Trim fraction; defaults to half the assumed contamination level.
    pub alpha: f64,
    /// Safety cap on the total number of pulls.
    pub max_pulls: u64,
}

impl PolicyConfig {
    pub fn new(kind: PolicyKind, radius: RadiusParams) -> Self {
        Self {
            kind,
            radius,
            radius_mode: RadiusMode::Theorem,
            alpha: radius.epsilon / 2.0,
            max_pulls: DEFAULT_MAX_PULLS,
        }
    }

    pub fn floor(&self) -> Result<f64> {
        exploration_floor(self.alpha, self.radius.delta)
    }

    fn estimator(&self) -> Result<Estimator> {
        match self.kind {
            PolicyKind::MedianSe => Ok(Estimator::Median),
            _ => Estimator::TrimmedMean { alpha: self.alpha }.validate(),
        }
    }
}

/// Where a policy is in its run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Running,
    Stopped {
        recommended: usize,
    },
    /// The pull cap was hit; the recommendation is the current empirical best.
    Truncated {
        recommended: usize,
    },
}

/// Per-round diagnostic streamed into traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Diagnostic {
    /// Overlap `B_t`; `None` until every arm has been pulled.
    Overlap(Option<f64>),
    ActiveArms(usize),
}

/// An arm dropped by an elimination policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Elimination {
    pub arm: usize,
    pub round: u64,
    pub pulls: u64,
}

/// A sequential identification procedure driven one pull at a time.
pub trait Policy {
    /// Arm to pull next.
    fn select_arm(&mut self) -> Result<usize>;

    /// Feeds back the reward of the arm returned by [`Policy::select_arm`].
    fn observe(&mut self, arm: usize, reward: f64) -> Result<()>;

    fn status(&self) -> Status;

    /// Total pulls so far, `t`.
    fn pulls(&self) -> u64;

    /// Pull count per arm.
    fn counts(&self) -> Vec<u64>;

    fn diagnostic(&self) -> Diagnostic;

    fn eliminations(&self) -> &[Elimination] {
        &[]
    }
}

/// Builds the policy named in `config` for a `num_arms`-armed instance.
pub fn build_policy(
    config: &PolicyConfig,
    num_arms: usize,
    seeds: SeedSpec,
) -> Result<Box<dyn Policy + Send>> {
    if config.radius.num_arms != num_arms {
        return arg(format!(
            "radius parameters are for {} arms, instance has {num_arms}",
            config.radius.num_arms
        ));
    }
    Ok(match config.kind {
        PolicyKind::Gcbai => Box::new(GapPolicy::new(config, Sampling::Gap)?),
        PolicyKind::RandomGap => Box::new(GapPolicy::new(
            config,
            Sampling::Uniform(seeds.with_stream(Stream::PolicyChoice)),
        )?),
        PolicyKind::Secbai | PolicyKind::MedianSe => Box::new(EliminationPolicy::new(config)?),
    })
}

fn radius_at(params: &RadiusParams, mode: RadiusMode, n_pulls: u64, t: u64) -> Result<f64> {
    match mode {
        RadiusMode::Theorem => beta_gap_radius(params, n_pulls, t),
        RadiusMode::Empirical => empirical_radius(params, n_pulls, t),
    }
}

/// Whether `count` is below `max(sqrt(t), floor)`, using the exact integer
/// test `count^2 < t` for the square-root part. Unpulled arms always are.
pub fn needs_exploration(count: u64, t: u64, floor: f64) -> bool {
    count == 0 || (count as u128) * (count as u128) < t as u128 || (count as f64) < floor
}

/// Current best arm, most ambiguous competitor and their overlap `B_t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapDecision {
    pub best: usize,
    pub ambiguous: usize,
    pub overlap: f64,
}

/// Best arm (argmax of estimates) and the competitor maximising
/// `est_a + r_a - (est_best - r_best)`. Needs at least two arms.
pub fn gap_decision(estimates: &[f64], radii: &[f64]) -> Result<GapDecision> {
    if estimates.len() < 2 || estimates.len() != radii.len() {
        return arg("gap decision needs two or more arms with matching radii");
    }
    if estimates.iter().chain(radii).any(|x| !x.is_finite()) {
        return state("every arm needs an estimate and a radius");
    }
    let best = argmax(estimates);
    let lower = estimates[best] - radii[best];
    let mut ambiguous = usize::MAX;
    let mut overlap = f64::NEG_INFINITY;
    for a in (0..estimates.len()).filter(|&a| a != best) {
        let o = estimates[a] + radii[a] - lower;
        if o > overlap {
            overlap = o;
            ambiguous = a;
        }
    }
    Ok(GapDecision {
        best,
        ambiguous,
        overlap,
    })
}

/// Sampling rule of the gap-based policy as a pure function of the
/// per-arm table. `t` is the number of pulls made so far.
pub fn gap_select_arm(
    counts: &[u64],
    estimates: &[f64],
    radii: &[f64],
    t: u64,
    floor: f64,
) -> Result<usize> {
    if counts.is_empty() {
        return arg("no arms");
    }
    let deficit = (0..counts.len())
        .filter(|&i| needs_exploration(counts[i], t, floor))
        .min_by_key(|&i| (counts[i], i));
    if let Some(arm) = deficit {
        return Ok(arm);
    }
    if counts.len() == 1 {
        return Ok(0);
    }
    let d = gap_decision(estimates, radii)?;
    Ok(if radii[d.ambiguous] > radii[d.best] {
        d.ambiguous
    } else {
        d.best
    })
}

/// Arms of `active` that survive an elimination step.
pub fn elimination_survivors(
    active: &[usize],
    counts: &[u64],
    estimates: &[f64],
    gamma: f64,
    floor: f64,
) -> Vec<usize> {
    let leader = active
        .iter()
        .map(|&i| estimates[i])
        .fold(f64::NEG_INFINITY, f64::max);
    active
        .iter()
        .copied()
        .filter(|&i| estimates[i] >= leader - 2.0 * gamma || (counts[i] as f64) < floor)
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub enum Sampling {
    /// Forced exploration, then best-versus-ambiguous.
    Gap,
    /// Uniform over all arms from the given stream.
    Uniform(SeedSpec),
}

/// Gap-based policy with the overlap stopping rule.
#[derive(Debug, Clone)]
pub struct GapPolicy {
    config: PolicyConfig,
    sampling: Sampling,
    estimator: Estimator,
    stats: Vec<ArmStatistics>,
    estimates: Vec<f64>,
    t: u64,
    floor: f64,
    /// `ceil(K T(alpha, delta))`.
    min_stop: u64,
    overlap: Option<f64>,
    status: Status,
}

impl GapPolicy {
    pub fn new(config: &PolicyConfig, sampling: Sampling) -> Result<Self> {
        let k = config.radius.num_arms;
        let floor = config.floor()?;
        Ok(Self {
            config: *config,
            sampling,
            estimator: config.estimator()?,
            stats: vec![ArmStatistics::new(); k],
            estimates: vec![f64::NAN; k],
            t: 0,
            floor,
            min_stop: (k as f64 * floor).ceil() as u64,
            overlap: None,
            status: Status::Running,
        })
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Smallest `t` at which stopping is allowed.
    pub fn min_stop(&self) -> u64 {
        self.min_stop
    }

    pub fn estimates(&self) -> &[f64] {
        &self.estimates
    }

    /// Current radius of every arm; `NaN` for unpulled arms.
    pub fn radii(&self) -> Vec<f64> {
        self.stats
            .iter()
            .map(|s| {
                let n = s.count() as u64;
                if n == 0 {
                    f64::NAN
                } else {
                    radius_at(
                        &self.config.radius,
                        self.config.radius_mode,
                        n,
                        self.t.max(1),
                    )
                    .unwrap_or(f64::NAN)
                }
            })
            .collect()
    }

    /// `B_t` for the current table.
    pub fn overlap(&self) -> Result<f64> {
        if self.stats.iter().any(|s| s.count() == 0) {
            return state("overlap needs every arm pulled at least once");
        }
        if self.stats.len() == 1 {
            return Ok(f64::NEG_INFINITY);
        }
        Ok(gap_decision(&self.estimates, &self.radii())?.overlap)
    }

    /// Stopping rule: at least `ceil(K T)` pulls in total, every arm at its
    /// floor, and `B_t <= 0`.
    pub fn should_stop(&self) -> bool {
        if self.t < self.min_stop.max(1) {
            return false;
        }
        if self
            .stats
            .iter()
            .any(|s| (s.count() as f64) < self.floor || s.count() == 0)
        {
            return false;
        }
        matches!(self.overlap(), Ok(b) if b <= 0.0)
    }

    /// Final answer: argmax of the estimates over all arms.
    pub fn recommendation(&self) -> usize {
        let est: Vec<f64> = self
            .estimates
            .iter()
            .map(|e| if e.is_nan() { f64::NEG_INFINITY } else { *e })
            .collect();
        argmax(&est)
    }

    fn counts_vec(&self) -> Vec<u64> {
        self.stats.iter().map(|s| s.count() as u64).collect()
    }
}

impl Policy for GapPolicy {
    fn select_arm(&mut self) -> Result<usize> {
        if self.status != Status::Running {
            return state("policy has already stopped");
        }
        match self.sampling {
            Sampling::Uniform(seeds) => {
                Ok(seeds.rng(0, self.t + 1).random_range(0..self.stats.len()))
            }
            Sampling::Gap => {
                let counts = self.counts_vec();
                let all_pulled = counts.iter().all(|&c| c > 0);
                let radii = if all_pulled {
                    self.radii()
                } else {
                    vec![f64::NAN; counts.len()]
                };
                gap_select_arm(&counts, &self.estimates, &radii, self.t, self.floor)
            }
        }
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        if self.status != Status::Running {
            return state("policy has already stopped");
        }
        if arm >= self.stats.len() {
            return arg(format!("arm {arm} out of range"));
        }
        self.stats[arm].insert(reward)?;
        self.estimates[arm] = self.estimator.estimate(&self.stats[arm])?;
        self.t += 1;
        self.overlap = self.overlap().ok();
        if self.should_stop() {
            self.status = Status::Stopped {
                recommended: self.recommendation(),
            };
        } else if self.t >= self.config.max_pulls {
            self.status = Status::Truncated {
                recommended: self.recommendation(),
            };
        }
        Ok(())
    }

    fn status(&self) -> Status {
        self.status
    }

    fn pulls(&self) -> u64 {
        self.t
    }

    fn counts(&self) -> Vec<u64> {
        self.counts_vec()
    }

    fn diagnostic(&self) -> Diagnostic {
        Diagnostic::Overlap(self.overlap)
    }
}

/// Successive elimination with a trimmed-mean or median estimator.
#[derive(Debug, Clone)]
pub struct EliminationPolicy {
    config: PolicyConfig,
    estimator: Estimator,
    stats: Vec<ArmStatistics>,
    active: Vec<usize>,
    /// Position inside the current round.
    cursor: usize,
    /// Completed rounds.
    round: u64,
    pulls: u64,
    floor: f64,
    eliminations: Vec<Elimination>,
    status: Status,
}

impl EliminationPolicy {
    pub fn new(config: &PolicyConfig) -> Result<Self> {
        let k = config.radius.num_arms;
        let status = if k == 1 {
            Status::Stopped { recommended: 0 }
        } else {
            Status::Running
        };
        Ok(Self {
            config: *config,
            estimator: config.estimator()?,
            stats: vec![ArmStatistics::new(); k],
            active: (0..k).collect(),
            cursor: 0,
            round: 0,
            pulls: 0,
            floor: config.floor()?,
            eliminations: Vec::new(),
            status,
        })
    }

    pub fn active(&self) -> &[usize] {
        &self.active
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    /// Elimination radius after `round` completed rounds.
    pub fn gamma(&self, round: u64) -> Result<f64> {
        let p = &self.config.radius;
        match self.config.radius_mode {
            RadiusMode::Theorem => gamma_se_radius(p, round),
            RadiusMode::Empirical => empirical_radius(p, round, round),
        }
    }

    /// Plays one full round: each active arm once, in ascending order, then
    /// the elimination step.
    pub fn step_round(&mut self, mut pull: impl FnMut(usize) -> Result<f64>) -> Result<()> {
        if self.active.len() <= 1 {
            return state("elimination round needs more than one active arm");
        }
        if self.cursor != 0 {
            return state("a round is already in progress");
        }
        let round: Vec<usize> = self.active.clone();
        for arm in round {
            let reward = pull(arm)?;
            self.observe(arm, reward)?;
            if self.status != Status::Running {
                break;
            }
        }
        Ok(())
    }

    fn estimates(&self) -> Result<Vec<f64>> {
        self.stats
            .iter()
            .map(|s| {
                if s.count() == 0 {
                    Ok(f64::NEG_INFINITY)
                } else {
                    self.estimator.estimate(s)
                }
            })
            .collect()
    }

    fn leader(&self) -> Result<usize> {
        let est = self.estimates()?;
        Ok(self.active.iter().copied().fold(self.active[0], |best, i| {
            if est[i] > est[best] {
                i
            } else {
                best
            }
        }))
    }

    fn end_of_round(&mut self) -> Result<()> {
        self.round += 1;
        let est = self.estimates()?;
        let counts = self.counts();
        let gamma = self.gamma(self.round)?;
        let survivors = elimination_survivors(&self.active, &counts, &est, gamma, self.floor);
        for &arm in self.active.iter().filter(|a| !survivors.contains(a)) {
            self.eliminations.push(Elimination {
                arm,
                round: self.round,
                pulls: counts[arm],
            });
        }
        self.active = survivors;
        if self.active.len() == 1 {
            self.status = Status::Stopped {
                recommended: self.active[0],
            };
        }
        Ok(())
    }
}

impl Policy for EliminationPolicy {
    fn select_arm(&mut self) -> Result<usize> {
        if self.status != Status::Running {
            return state("policy has already stopped");
        }
        Ok(self.active[self.cursor])
    }

    fn observe(&mut self, arm: usize, reward: f64) -> Result<()> {
        if self.status != Status::Running {
            return state("policy has already stopped");
        }
        if self.active.get(self.cursor) != Some(&arm) {
            return arg(format!(
                "expected a pull of arm {}",
                self.active[self.cursor]
            ));
        }
        self.stats[arm].insert(reward)?;
        self.pulls += 1;
        self.cursor += 1;
        if self.cursor == self.active.len() {
            self.cursor = 0;
            self.end_of_round()?;
        }
        if self.status == Status::Running && self.pulls >= self.config.max_pulls {
            self.status = Status::Truncated {
                recommended: self.leader()?,
            };
        }
        Ok(())
    }

    fn status(&self) -> Status {
        self.status
    }

    fn pulls(&self) -> u64 {
        self.pulls
    }

    fn counts(&self) -> Vec<u64> {
        self.stats.iter().map(|s| s.count() as u64).collect()
    }

    fn diagnostic(&self) -> Diagnostic {
        Diagnostic::ActiveArms(self.active.len())
    }

    fn eliminations(&self) -> &[Elimination] {
        &self.eliminations
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(k: usize, eps: f64, delta: f64) -> RadiusParams {
        RadiusParams::new(1.0, eps, k, delta).unwrap()
    }

    #[test]
    fn cold_start_picks_first_arm() {
        let c = PolicyConfig::new(PolicyKind::Gcbai, params(4, 0.1, 0.1));
        let mut p = GapPolicy::new(&c, Sampling::Gap).unwrap();
        assert_eq!(p.select_arm().unwrap(), 0);
    }

    #[test]
    fn forced_exploration_picks_least_pulled() {
        let counts = [5, 3, 9, 9];
        let nan = [f64::NAN; 4];
        assert_eq!(gap_select_arm(&counts, &nan, &nan, 26, 100.0).unwrap(), 1);
        // sqrt rule alone: t = 26 -> arms with N^2 < 26 qualify.
        let est = [1.0; 4];
        let r = [0.1; 4];
        assert_eq!(gap_select_arm(&counts, &est, &r, 26, 0.0).unwrap(), 1);
    }

    #[test]
    fn exploitation_example() {
        let est = [2.0, 1.8];
        let radii = [0.3, 0.4];
        let d = gap_decision(&est, &radii).unwrap();
        assert_eq!((d.best, d.ambiguous), (0, 1));
        assert!((d.overlap - 0.5).abs() < 1e-12);
        assert_eq!(gap_select_arm(&[10, 10], &est, &radii, 20, 0.0).unwrap(), 1);
        // Equal radii go to the current best.
        assert_eq!(
            gap_select_arm(&[10, 10], &est, &[0.3, 0.3], 20, 0.0).unwrap(),
            0
        );
    }

    #[test]
    fn overlap_examples() {
        let d = gap_decision(&[3.0, 1.0, 2.0], &[0.0; 3]).unwrap();
        assert_eq!(d.ambiguous, 2);
        assert_eq!(d.overlap, -1.0);
        let d = gap_decision(&[1.0, 1.0], &[0.25, 0.25]).unwrap();
        assert_eq!(d.overlap, 0.5);
        assert!(gap_decision(&[1.0, f64::NAN], &[0.1, 0.1]).is_err());
    }

    #[test]
    fn overlap_requires_all_arms() {
        let c = PolicyConfig::new(PolicyKind::Gcbai, params(2, 0.0, 0.1));
        let mut p = GapPolicy::new(&c, Sampling::Gap).unwrap();
        p.observe(0, 1.0).unwrap();
        assert!(p.overlap().is_err());
        assert!(!p.should_stop());
    }

    #[test]
    fn integer_sqrt_test() {
        assert!(needs_exploration(3, 10, 0.0));
        assert!(!needs_exploration(3, 9, 0.0));
        assert!(needs_exploration(0, 0, 0.0));
        assert!(!needs_exploration(4, 16, 3.5));
        assert!(needs_exploration(3, 9, 3.5));
    }

    fn stopped_state(kind: PolicyKind, eps: f64) -> GapPolicy {
        let c = PolicyConfig::new(kind, params(2, eps, 0.1));
        GapPolicy::new(&c, Sampling::Gap).unwrap()
    }

    #[test]
    fn stopping_respects_floor() {
        // Perfectly separated rewards give B_t < 0 early, but the floor holds.
        let mut p = stopped_state(PolicyKind::Gcbai, 0.1);
        let floor_total = p.min_stop();
        assert_eq!(
            floor_total,
            (2.0 * exploration_floor(0.05, 0.1).unwrap()).ceil() as u64
        );
        while p.status() == Status::Running {
            let arm = p.select_arm().unwrap();
            p.observe(arm, if arm == 0 { 100.0 } else { -100.0 })
                .unwrap();
            if p.pulls() < floor_total {
                assert_eq!(p.status(), Status::Running);
            }
        }
        assert_eq!(p.status(), Status::Stopped { recommended: 0 });
        assert!(p.pulls() >= floor_total);
        assert!(p.counts().iter().all(|&c| c as f64 >= p.floor()));
    }

    #[test]
    fn zero_overlap_stops() {
        // Equal radii r on both arms and a gap of exactly 2r gives B_t = 0.
        let d = gap_decision(&[1.0, 0.0], &[0.5, 0.5]).unwrap();
        assert_eq!(d.overlap, 0.0);
        let d = gap_decision(&[1.0, 0.0], &[0.505, 0.505]).unwrap();
        assert!(d.overlap > 0.0);
    }

    #[test]
    fn select_after_stop_is_an_error() {
        let mut p = stopped_state(PolicyKind::Gcbai, 0.0);
        while p.status() == Status::Running {
            let arm = p.select_arm().unwrap();
            p.observe(arm, if arm == 0 { 10.0 } else { -10.0 }).unwrap();
        }
        assert!(p.select_arm().is_err());
    }

    #[test]
    fn single_arm_gap_policy_stops_after_one_pull() {
        let c = PolicyConfig::new(PolicyKind::Gcbai, params(1, 0.0, 0.1));
        let mut p = GapPolicy::new(&c, Sampling::Gap).unwrap();
        let arm = p.select_arm().unwrap();
        p.observe(arm, 0.3).unwrap();
        assert_eq!(p.status(), Status::Stopped { recommended: 0 });
        assert_eq!(p.pulls(), 1);
    }

    #[test]
    fn truncation_cap() {
        let mut c = PolicyConfig::new(PolicyKind::Gcbai, params(2, 0.0, 0.1));
        c.max_pulls = 50;
        let mut p = GapPolicy::new(&c, Sampling::Gap).unwrap();
        while p.status() == Status::Running {
            let arm = p.select_arm().unwrap();
            p.observe(arm, 0.0).unwrap();
        }
        assert!(matches!(p.status(), Status::Truncated { .. }));
        assert_eq!(p.pulls(), 50);
    }

    #[test]
    fn elimination_examples() {
        let survivors =
            elimination_survivors(&[0, 1, 2], &[10, 10, 10], &[5.0, 4.9, 1.0], 0.5, 5.0);
        assert_eq!(survivors, vec![0, 1]);
        let survivors = elimination_survivors(&[0, 1, 2], &[10, 10, 10], &[2.0; 3], 0.0, 0.0);
        assert_eq!(survivors, vec![0, 1, 2]);
        // Below the floor nothing is removed.
        let survivors = elimination_survivors(&[0, 1, 2], &[4, 4, 4], &[5.0, 4.9, 1.0], 0.5, 5.0);
        assert_eq!(survivors, vec![0, 1, 2]);
    }

    #[test]
    fn single_arm_elimination_is_immediate() {
        let c = PolicyConfig::new(PolicyKind::Secbai, params(1, 0.1, 0.1));
        let mut p = EliminationPolicy::new(&c).unwrap();
        assert_eq!(p.status(), Status::Stopped { recommended: 0 });
        assert!(p.step_round(|_| Ok(0.0)).is_err());
    }

    #[test]
    fn step_round_samples_active_in_order() {
        let c = PolicyConfig::new(PolicyKind::Secbai, params(3, 0.0, 0.1));
        let mut p = EliminationPolicy::new(&c).unwrap();
        let mut seen = Vec::new();
        p.step_round(|arm| {
            seen.push(arm);
            Ok(1.0)
        })
        .unwrap();
        assert_eq!(seen, vec![0, 1, 2]);
        assert_eq!(p.round(), 1);
        assert_eq!(p.active(), &[0, 1, 2]);
    }

    #[test]
    fn constant_rewards_never_separate() {
        let mut c = PolicyConfig::new(PolicyKind::MedianSe, params(2, 0.0, 0.1));
        c.max_pulls = 400;
        let mut p = EliminationPolicy::new(&c).unwrap();
        while p.status() == Status::Running {
            p.step_round(|_| Ok(3.0)).unwrap();
        }
        assert!(p.eliminations().is_empty());
        assert!(matches!(p.status(), Status::Truncated { recommended: 0 }));
    }

    #[test]
    fn shifted_arm_eliminated() {
        let c = PolicyConfig::new(PolicyKind::Secbai, params(2, 0.0, 0.1));
        let mut p = EliminationPolicy::new(&c).unwrap();
        while p.status() == Status::Running {
            p.step_round(|arm| Ok(if arm == 0 { 10.0 } else { 0.0 }))
                .unwrap();
        }
        assert_eq!(p.status(), Status::Stopped { recommended: 0 });
        let e = p.eliminations()[0];
        assert_eq!(e.arm, 1);
        // 2 gamma_t must drop below 10 first.
        assert!(2.0 * p.gamma(e.round).unwrap() < 10.0);
        assert!(2.0 * p.gamma(e.round - 1).unwrap_or(f64::INFINITY) >= 10.0 || e.round == 1);
    }

    #[test]
    fn wrong_arm_is_rejected() {
        let c = PolicyConfig::new(PolicyKind::Secbai, params(3, 0.0, 0.1));
        let mut p = EliminationPolicy::new(&c).unwrap();
        assert!(p.observe(2, 0.0).is_err());
    }

    #[test]
    fn uniform_sampling_is_deterministic_and_fair() {
        let c = PolicyConfig::new(PolicyKind::RandomGap, params(4, 0.0, 0.1));
        let seeds = SeedSpec::new(7, 3, Stream::PolicyChoice);
        let mut a = GapPolicy::new(&c, Sampling::Uniform(seeds)).unwrap();
        let mut b = GapPolicy::new(&c, Sampling::Uniform(seeds)).unwrap();
        let mut freq = [0usize; 4];
        let n = 100_000u64;
        for t in 0..n {
            let arm = a.select_arm().unwrap();
            assert_eq!(arm, b.select_arm().unwrap());
            freq[arm] += 1;
            // Advance the round counter without triggering a stop.
            a.t = t + 1;
            b.t = t + 1;
        }
        for f in freq {
            let p = f as f64 / n as f64;
            // 3-sigma multinomial band: 3 sqrt(0.1875 / 1e5) ~ 0.0041
            assert!((p - 0.25).abs() <= 0.005, "{p}");
        }
        let c1 = PolicyConfig::new(PolicyKind::RandomGap, params(1, 0.0, 0.1));
        let mut single = GapPolicy::new(&c1, Sampling::Uniform(seeds)).unwrap();
        assert_eq!(single.select_arm().unwrap(), 0);
    }

    #[test]
    fn kind_round_trip() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
        }
        assert!("ucb".parse::<PolicyKind>().is_err());
    }

    proptest! {
        #[test]
        fn decisions_shift_invariant(
            est in prop::collection::vec(-5.0f64..5.0, 2..8),
            rad in prop::collection::vec(0.01f64..2.0, 8),
            c in -10.0f64..10.0,
        ) {
            let k = est.len();
            let radii = &rad[..k];
            // Dyadic values keep the shifted comparisons exact.
            let est: Vec<f64> = est.iter().map(|x| (x * 64.0).round() / 64.0).collect();
            let c = (c * 64.0).round() / 64.0;
            let shifted: Vec<f64> = est.iter().map(|x| x + c).collect();
            let a = gap_decision(&est, radii).unwrap();
            let b = gap_decision(&shifted, radii).unwrap();
            prop_assert_eq!((a.best, a.ambiguous), (b.best, b.ambiguous));
            prop_assert!((a.overlap - b.overlap).abs() < 1e-9);
            let active: Vec<usize> = (0..k).collect();
            let counts = vec![100u64; k];
            prop_assert_eq!(
                elimination_survivors(&active, &counts, &est, 0.3, 10.0),
                elimination_survivors(&active, &counts, &shifted, 0.3, 10.0)
            );
        }

        #[test]
        fn decisions_permutation_equivariant(
            est in prop::collection::vec(-5.0f64..5.0, 2..7),
            rad in prop::collection::vec(0.01f64..2.0, 7),
            counts in prop::collection::vec(1u64..50, 7),
            seed in any::<u64>(),
        ) {
            let k = est.len();
            let radii = rad[..k].to_vec();
            let counts = counts[..k].to_vec();
            // Distinct values so index tie-breaking never matters.
            let est: Vec<f64> = est.iter().enumerate().map(|(i, x)| x + i as f64 * 1e-7).collect();
            let radii: Vec<f64> = radii.iter().enumerate().map(|(i, x)| x + i as f64 * 1e-7).collect();
            let mut perm: Vec<usize> = (0..k).collect();
            let mut s = seed | 1;
            for i in (1..k).rev() {
                s ^= s << 13; s ^= s >> 7; s ^= s << 17;
                perm.swap(i, (s % (i as u64 + 1)) as usize);
            }
            // Arm i of the original becomes arm perm[i].
            let mut pe = vec![0.0; k];
            let mut pr = vec![0.0; k];
            let mut pc = vec![0u64; k];
            for i in 0..k {
                pe[perm[i]] = est[i];
                pr[perm[i]] = radii[i];
                pc[perm[i]] = counts[i];
            }
            let t = counts.iter().sum::<u64>();
            let a = gap_select_arm(&counts, &est, &radii, t, 20.0).unwrap();
            let b = gap_select_arm(&pc, &pe, &pr, t, 20.0).unwrap();
            if counts.iter().filter(|&&c| needs_exploration(c, t, 20.0)).count() == 0
                || counts.iter().filter(|&&c| needs_exploration(c, t, 20.0)).copied().collect::<std::collections::BTreeSet<_>>().len()
                    == counts.iter().filter(|&&c| needs_exploration(c, t, 20.0)).count()
            {
                prop_assert_eq!(perm[a], b);
            }
            let active: Vec<usize> = (0..k).collect();
            let sa = elimination_survivors(&active, &counts, &est, 0.4, 20.0);
            let mut sa: Vec<usize> = sa.into_iter().map(|i| perm[i]).collect();
            sa.sort();
            let sb = elimination_survivors(&active, &pc, &pe, 0.4, 20.0);
            prop_assert_eq!(sa, sb);
        }
    }
}
