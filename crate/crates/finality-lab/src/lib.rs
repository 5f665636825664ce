//! A laboratory for studying transaction finality on longest-chain
//! blockchains.
//!
//! The crate combines four pieces:
//!
//! * [`risk`] — a loss-averse valuation of pending transactions and the
//!   rule that turns a transaction value into a minimum confirmation depth.
//! * [`sim`] — a round-based message-passing simulator of competing miners,
//!   from which chain-switch statistics and empirical revocation
//!   probabilities are estimated.
//! * [`pool`] — a closed-form fork-rate model driven by an observed
//!   mining-pool block distribution.
//! * [`sweep`] — batch runners that tabulate the above over grids of
//!   transaction values and network delays and emit CSV datasets.
//!
//! The `finality-lab` binary (see [`cli`]) exposes all of it from the
//! command line.

pub mod cli;
pub mod curve;
pub mod pool;
pub mod risk;
pub mod sim;
pub mod sweep;

pub use curve::{CurveError, Provenance, RevocationCurve};
pub use pool::{EmpiricalModel, PoolError, PoolTable};
pub use risk::{LossModel, LossThreshold, RiskError, RiskParams};
pub use sim::{DelayModel, SimConfig, SimError, SwitchHistogram, SwitchRecord, DENSE_MINE_PROB};
