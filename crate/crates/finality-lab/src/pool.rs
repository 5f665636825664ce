//! Closed-form fork-rate model driven by an observed mining-pool
//! distribution.
//!
//! Given each pool's share `p_i` of recent blocks, the chance that a fresh
//! block is revoked is modeled as the chance that, whichever pool mined it,
//! the rest of the network finds a competing block before the new one
//! propagates: with exponential block arrivals at rate `1/T` and a network
//! delay of `delay` seconds,
//!
//! ```text
//! P1 = sum_i p_i * (1 - exp(-(1 - p_i) * delay / T))
//! ```
//!
//! Deeper confirmations compound independently, giving the geometric curve
//! `P(d) = P1^d`.

use std::collections::HashSet;

use thiserror::Error;

use crate::curve::RevocationCurve;
use crate::risk::{min_confirmation_depth, LossModel, RiskError};

/// Expected seconds between blocks for the default chain parameters.
pub const DEFAULT_BLOCK_INTERVAL_SECS: f64 = 600.0;

/// Largest network delay the model accepts; beyond this the small-delay
/// reasoning behind the fork-rate formula has no business being trusted.
pub const MAX_DELAY_SECS: f64 = 3600.0;

/// Depth search budget for the geometric curve. The curve extends
/// indefinitely, so the depth rule needs an explicit stopping point.
pub const DEPTH_HARD_CAP: u32 = 10_000;

/// Errors from table parsing and model construction.
#[derive(Debug, Error, PartialEq)]
pub enum PoolError {
    #[error("pool table must start with the header 'pool,blocks'")]
    MissingHeader,
    #[error("pool table line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("duplicate pool name: {0}")]
    DuplicatePool(String),
    #[error("pool table sums to zero blocks")]
    EmptyTable,
    #[error("delay must lie in [0, {MAX_DELAY_SECS}] seconds, got {0}")]
    InvalidDelay(f64),
    #[error("block interval must be positive and finite, got {0}")]
    InvalidBlockInterval(f64),
    #[error(transparent)]
    Risk(#[from] RiskError),
}

/// One pool's row in the observed distribution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolEntry {
    pub name: String,
    pub blocks: u64,
}

/// An observed distribution of recent blocks across mining pools.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolTable {
    entries: Vec<PoolEntry>,
    total_blocks: u64,
}

impl PoolTable {
    /// Parses CSV text with a `pool,blocks` header. Lines starting with `#`
    /// are comments; fields are trimmed.
    pub fn parse(text: &str) -> Result<Self, PoolError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut entries: Vec<PoolEntry> = Vec::new();
        let mut names = HashSet::new();
        let mut saw_header = false;
        for record in reader.records() {
            let record = record.map_err(|e| PoolError::MalformedRow {
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if !saw_header {
                if record.len() == 2 && &record[0] == "pool" && &record[1] == "blocks" {
                    saw_header = true;
                    continue;
                }
                return Err(PoolError::MissingHeader);
            }
            if record.len() != 2 {
                return Err(PoolError::MalformedRow {
                    line,
                    reason: format!("expected 2 fields, got {}", record.len()),
                });
            }
            let name = record[0].to_string();
            if name.is_empty() {
                return Err(PoolError::MalformedRow {
                    line,
                    reason: "empty pool name".into(),
                });
            }
            let blocks: u64 = record[1].parse().map_err(|_| PoolError::MalformedRow {
                line,
                reason: format!(
                    "block count is not a non-negative integer: {:?}",
                    &record[1]
                ),
            })?;
            if !names.insert(name.clone()) {
                return Err(PoolError::DuplicatePool(name));
            }
            entries.push(PoolEntry { name, blocks });
        }
        if !saw_header {
            return Err(PoolError::MissingHeader);
        }
        Self::from_entries(entries)
    }

    pub fn from_entries(entries: Vec<PoolEntry>) -> Result<Self, PoolError> {
        let total_blocks = entries.iter().map(|e| e.blocks).sum();
        if total_blocks == 0 {
            return Err(PoolError::EmptyTable);
        }
        Ok(Self {
            entries,
            total_blocks,
        })
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    /// Size of the observation window (total blocks across all pools).
    pub fn total_blocks(&self) -> u64 {
        self.total_blocks
    }

    /// Each pool's share of the window, in table order.
    pub fn shares(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| e.blocks as f64 / self.total_blocks as f64)
            .collect()
    }
}

/// The fork-rate model for one (table, delay, block interval) triple.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalModel {
    /// Non-zero pool shares.
    shares: Vec<f64>,
    delay_secs: f64,
    block_interval_secs: f64,
}

impl EmpiricalModel {
    pub fn new(
        table: &PoolTable,
        delay_secs: f64,
        block_interval_secs: f64,
    ) -> Result<Self, PoolError> {
        if !(0.0..=MAX_DELAY_SECS).contains(&delay_secs) {
            return Err(PoolError::InvalidDelay(delay_secs));
        }
        if !(block_interval_secs > 0.0 && block_interval_secs.is_finite()) {
            return Err(PoolError::InvalidBlockInterval(block_interval_secs));
        }
        Ok(Self {
            shares: table.shares().into_iter().filter(|&p| p > 0.0).collect(),
            delay_secs,
            block_interval_secs,
        })
    }

    pub fn delay_secs(&self) -> f64 {
        self.delay_secs
    }

    pub fn block_interval_secs(&self) -> f64 {
        self.block_interval_secs
    }

    /// Probability that a freshly mined block is revoked, `P1`. Strictly
    /// below 1, and exactly 0 at zero delay.
    pub fn depth_one_revocation(&self) -> f64 {
        let rate = self.delay_secs / self.block_interval_secs;
        self.shares
            .iter()
            .map(|&p| p * (1.0 - (-(1.0 - p) * rate).exp()))
            .sum()
    }

    /// Small-delay linearization of [`Self::depth_one_revocation`]:
    /// `(1 - sum_i p_i^2) * delay / T`.
    pub fn depth_one_first_order(&self) -> f64 {
        let concentration: f64 = self.shares.iter().map(|&p| p * p).sum();
        (1.0 - concentration) * self.delay_secs / self.block_interval_secs
    }

    /// The geometric revocation curve `P(d) = P1^d`, tagged with the delay.
    /// Queries past `stored_depths` keep following the geometric law.
    pub fn revocation_curve(&self, stored_depths: u32) -> RevocationCurve {
        RevocationCurve::geometric(self.depth_one_revocation(), stored_depths)
            .expect("P1 lies in [0, 1) by construction")
            .with_delay(self.delay_secs)
    }
}

/// Minimum confirmation depth for a transaction of `value` under the pool
/// model with the default block interval, searching up to
/// [`DEPTH_HARD_CAP`].
pub fn empirical_depth_rule(
    table: &PoolTable,
    delay_secs: f64,
    value: f64,
    model: &LossModel,
) -> Result<u32, PoolError> {
    empirical_depth_rule_with_interval(table, delay_secs, DEFAULT_BLOCK_INTERVAL_SECS, value, model)
}

/// [`empirical_depth_rule`] with an explicit block interval.
pub fn empirical_depth_rule_with_interval(
    table: &PoolTable,
    delay_secs: f64,
    block_interval_secs: f64,
    value: f64,
    model: &LossModel,
) -> Result<u32, PoolError> {
    let empirical = EmpiricalModel::new(table, delay_secs, block_interval_secs)?;
    let curve = empirical.revocation_curve(64);
    Ok(min_confirmation_depth(
        value,
        &curve,
        model,
        DEPTH_HARD_CAP,
    )?)
}
