//! Round-based simulation of competing miners on a longest-chain protocol.
//!
//! Time advances in discrete rounds. Each round every miner (1) connects
//! blocks whose network delay has elapsed, (2) re-evaluates its best tip and
//! switches chains if a better one appeared, and (3) mines a new block with
//! fixed probability, broadcasting it with a per-recipient delay. A *switch*
//! abandons the blocks between the old tip and the fork point; its *depth*
//! is the number of blocks abandoned. Aggregated over many trials, switch
//! statistics yield an empirical revocation-probability curve: for each
//! confirmation depth `d`, the fraction of (miner, block) observations that
//! reached depth `d` and were later abandoned.

mod engine;
mod tree;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{Provenance, RevocationCurve};

pub use engine::{run_trial, run_trial_traced, EventKind, TraceEvent, TrialResult, TrialTrace};
pub use tree::{select_tip, Block, BlockArena, BlockId, GENESIS};

/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 7;

/// Per-miner mining probability of the dense-fork preset ([`SimConfig::dense`]).
///
/// At the sparse default of one expected block per network round
/// ([`SimConfig::new`]), message delay barely matters: every fork is a brief
/// race between one miner and the rest of the network, so revocations beyond
/// depth two or three are vanishingly rare at any delay. Raising the rate to
/// ten expected blocks per round (0.1 × 100 miners) keeps several prongs
/// growing at once, and reorganization depth then scales with the delay
/// bound. Calibrated so that a $15 transaction needs 3 confirmations at a
/// fixed delay of 1 round and roughly 25 at 10 rounds under the default
/// risk parameters and [`DEFAULT_SEED`].
pub const DENSE_MINE_PROB: f64 = 0.1;

/// Errors from configuration validation or curve estimation.
#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("simulation needs at least one miner")]
    NoMiners,
    #[error("rounds must be at least 1")]
    NoRounds,
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("mine probability must lie in (0, 1], got {0}")]
    InvalidMineProb(f64),
    #[error("network delay must be at least 1 round")]
    InvalidDelay,
    /// No block ever reached confirmation depth 1, so there is nothing to
    /// estimate a curve from.
    #[error("simulation produced no depth observations")]
    EmptyObservations,
}

/// Per-recipient network delay, in rounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DelayModel {
    /// Every delivery takes exactly this many rounds.
    Fixed(u32),
    /// Each delivery independently draws a delay uniform on `1..=max`.
    UniformUpTo(u32),
}

impl DelayModel {
    /// Upper bound on the delay, used to size delivery queues.
    pub fn max_rounds(self) -> u32 {
        match self {
            DelayModel::Fixed(d) | DelayModel::UniformUpTo(d) => d,
        }
    }

    /// Scalar label for tables and curve tags (the fixed or maximum delay).
    pub fn scalar(self) -> f64 {
        f64::from(self.max_rounds())
    }
}

/// Full description of a simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Number of equally powerful miners.
    pub n_miners: u32,
    /// Rounds per trial.
    pub rounds: u32,
    /// Independent trials to aggregate.
    pub trials: u32,
    /// Per-miner chance of mining a block each round.
    pub mine_prob: f64,
    /// Network delay model.
    pub delay: DelayModel,
    /// Root seed; each trial derives its own independent stream from it.
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::new(100)
    }
}

impl SimConfig {
    /// Default configuration for `n_miners` miners: the mining probability
    /// is `1 / n_miners` so the network produces about one block per round.
    pub fn new(n_miners: u32) -> Self {
        Self {
            n_miners,
            rounds: 1000,
            trials: 10,
            mine_prob: 1.0 / f64::from(n_miners.max(1)),
            delay: DelayModel::Fixed(1),
            seed: DEFAULT_SEED,
        }
    }

    /// The dense-fork preset: the default configuration with `mine_prob`
    /// raised to [`DENSE_MINE_PROB`]. See that constant for why the sparse
    /// default cannot sustain deep reorganizations.
    pub fn dense(n_miners: u32) -> Self {
        Self {
            mine_prob: DENSE_MINE_PROB,
            ..Self::new(n_miners)
        }
    }

    /// Same configuration with the delay bound replaced, keeping the kind.
    pub fn with_delay_rounds(mut self, rounds: u32) -> Self {
        self.delay = match self.delay {
            DelayModel::Fixed(_) => DelayModel::Fixed(rounds),
            DelayModel::UniformUpTo(_) => DelayModel::UniformUpTo(rounds),
        };
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n_miners == 0 {
            return Err(SimError::NoMiners);
        }
        if self.rounds == 0 {
            return Err(SimError::NoRounds);
        }
        if self.trials == 0 {
            return Err(SimError::NoTrials);
        }
        if !(self.mine_prob > 0.0 && self.mine_prob <= 1.0) {
            return Err(SimError::InvalidMineProb(self.mine_prob));
        }
        if self.delay.max_rounds() == 0 {
            return Err(SimError::InvalidDelay);
        }
        Ok(())
    }
}

/// One chain switch: at `round`, `miner` abandoned `depth` blocks of its
/// previous main chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub trial: u32,
    pub round: u32,
    pub miner: u32,
    pub depth: u32,
}

/// How often blocks reached a confirmation depth, and how often blocks were
/// abandoned at it, summed over all (miner, block) pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DepthObservation {
    /// Pairs whose block reached at least this depth on the miner's chain.
    pub reached: u64,
    /// Pairs whose block had reached at least this depth when first
    /// abandoned.
    pub revoked: u64,
}

/// Aggregated switch statistics for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchHistogram {
    pub config: SimConfig,
    /// Trials aggregated (equals `config.trials`).
    pub trials: u32,
    /// Total switch count by switch depth.
    pub counts: BTreeMap<u32, u64>,
    /// Switch counts of each trial, in trial order.
    pub per_trial: Vec<BTreeMap<u32, u64>>,
    /// Reached/revoked tallies by confirmation depth.
    pub observations: BTreeMap<u32, DepthObservation>,
}

impl SwitchHistogram {
    /// Folds per-trial results (in trial order) into one histogram.
    pub fn merge(config: SimConfig, results: Vec<TrialResult>) -> Self {
        let trials = results.len() as u32;
        let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
        let mut per_trial = Vec::with_capacity(results.len());
        let mut observations: BTreeMap<u32, DepthObservation> = BTreeMap::new();
        for result in results {
            let mut trial_counts: BTreeMap<u32, u64> = BTreeMap::new();
            for record in &result.switches {
                *trial_counts.entry(record.depth).or_insert(0) += 1;
                *counts.entry(record.depth).or_insert(0) += 1;
            }
            per_trial.push(trial_counts);
            for (depth, obs) in result.observations {
                let entry = observations.entry(depth).or_default();
                entry.reached += obs.reached;
                entry.revoked += obs.revoked;
            }
        }
        Self {
            config,
            trials,
            counts,
            per_trial,
            observations,
        }
    }

    /// Total switches across all depths and trials.
    pub fn total_switches(&self) -> u64 {
        self.counts.values().sum()
    }
}

/// Runs every trial of `config` (in parallel) and aggregates the results.
/// Trial outcomes depend only on `(config.seed, trial_index)`, so the
/// aggregate is reproducible regardless of scheduling.
pub fn run_simulation(config: &SimConfig) -> Result<SwitchHistogram, SimError> {
    config.validate()?;
    let results = (0..config.trials)
        .into_par_iter()
        .map(|trial| run_trial(config, trial))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SwitchHistogram::merge(config.clone(), results))
}

/// Estimates the revocation curve `P(d) = revoked(d) / reached(d)` from a
/// histogram's depth observations, with the monotone cleanup applied.
pub fn estimate_revocation_curve(histogram: &SwitchHistogram) -> Result<RevocationCurve, SimError> {
    if histogram.observations.is_empty() {
        return Err(SimError::EmptyObservations);
    }
    let deepest = *histogram
        .observations
        .keys()
        .next_back()
        .expect("observations are non-empty");
    let mut probabilities = Vec::with_capacity(deepest as usize);
    for depth in 1..=deepest {
        let obs = histogram
            .observations
            .get(&depth)
            .copied()
            .unwrap_or_default();
        debug_assert!(obs.reached > 0, "depth coverage must be contiguous");
        debug_assert!(obs.revoked <= obs.reached);
        probabilities.push(obs.revoked as f64 / obs.reached as f64);
    }
    let curve = RevocationCurve::from_probabilities(
        probabilities,
        Provenance::Simulated,
        Some(histogram.config.delay.scalar()),
    )
    .expect("estimated probabilities are valid by construction");
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation_catches_each_field() {
        assert!(SimConfig::new(2).validate().is_ok());
        let mut cfg = SimConfig::new(0);
        assert_eq!(cfg.validate(), Err(SimError::NoMiners));
        cfg = SimConfig::new(2);
        cfg.rounds = 0;
        assert_eq!(cfg.validate(), Err(SimError::NoRounds));
        cfg = SimConfig::new(2);
        cfg.trials = 0;
        assert_eq!(cfg.validate(), Err(SimError::NoTrials));
        cfg = SimConfig::new(2);
        cfg.mine_prob = 0.0;
        assert_eq!(cfg.validate(), Err(SimError::InvalidMineProb(0.0)));
        cfg = SimConfig::new(2);
        cfg.mine_prob = 1.5;
        assert_eq!(cfg.validate(), Err(SimError::InvalidMineProb(1.5)));
        cfg = SimConfig::new(2);
        cfg.delay = DelayModel::Fixed(0);
        assert_eq!(cfg.validate(), Err(SimError::InvalidDelay));
    }

    #[test]
    fn default_mine_probability_targets_one_block_per_round() {
        let cfg = SimConfig::new(100);
        assert_eq!(cfg.mine_prob, 0.01);
        assert_eq!(cfg.delay, DelayModel::Fixed(1));
        let slower = cfg.clone().with_delay_rounds(6);
        assert_eq!(slower.delay, DelayModel::Fixed(6));
        let uniform = SimConfig {
            delay: DelayModel::UniformUpTo(2),
            ..SimConfig::new(10)
        }
        .with_delay_rounds(5);
        assert_eq!(uniform.delay, DelayModel::UniformUpTo(5));
        assert_eq!(uniform.delay.scalar(), 5.0);
    }

    #[test]
    fn merge_sums_counts_and_keeps_per_trial_detail() {
        let mk = |depths: &[u32], trial: u32| TrialResult {
            switches: depths
                .iter()
                .map(|&depth| SwitchRecord {
                    trial,
                    round: 1,
                    miner: 0,
                    depth,
                })
                .collect(),
            observations: BTreeMap::from([(
                1,
                DepthObservation {
                    reached: 10,
                    revoked: depths.len() as u64,
                },
            )]),
        };
        let hist = SwitchHistogram::merge(SimConfig::new(2), vec![mk(&[1, 1, 2], 0), mk(&[2], 1)]);
        assert_eq!(hist.trials, 2);
        assert_eq!(hist.counts, BTreeMap::from([(1, 2), (2, 2)]));
        assert_eq!(hist.per_trial[0], BTreeMap::from([(1, 2), (2, 1)]));
        assert_eq!(hist.per_trial[1], BTreeMap::from([(2, 1)]));
        assert_eq!(hist.total_switches(), 4);
        assert_eq!(
            hist.observations[&1],
            DepthObservation {
                reached: 20,
                revoked: 4
            }
        );
    }

    #[test]
    fn estimated_curve_divides_revoked_by_reached() {
        let hist = SwitchHistogram {
            config: SimConfig::new(2),
            trials: 1,
            counts: BTreeMap::new(),
            per_trial: vec![BTreeMap::new()],
            observations: BTreeMap::from([
                (
                    1,
                    DepthObservation {
                        reached: 20,
                        revoked: 1,
                    },
                ),
                (
                    2,
                    DepthObservation {
                        reached: 10,
                        revoked: 0,
                    },
                ),
            ]),
        };
        let curve = estimate_revocation_curve(&hist).unwrap();
        assert_eq!(curve.probability(1), Some(0.05));
        assert_eq!(curve.probability(2), Some(0.0));
        assert_eq!(curve.probability(3), None);
        assert_eq!(curve.delay(), Some(1.0));

        let empty = SwitchHistogram {
            observations: BTreeMap::new(),
            ..hist
        };
        assert_eq!(
            estimate_revocation_curve(&empty),
            Err(SimError::EmptyObservations)
        );
    }
}
