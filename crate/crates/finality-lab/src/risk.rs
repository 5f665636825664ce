//! Loss-averse transaction valuation and the minimum-confirmation-depth
//! rule.
//!
//! A pending transaction of value `v` is treated as a potential loss with
//! subjective weight `loss(v) = -lambda * v^beta` — losses loom larger than
//! their face value (`lambda > 1`) and scale sub-linearly (`beta < 1`).
//! Calibrating against an anchor point (by default: a 1-unit transaction is
//! acceptable at even odds of revocation) turns that weight into a maximum
//! tolerable revocation probability, the *loss threshold* `LT(v)`.
//! [`min_confirmation_depth`] then finds the shallowest confirmation depth
//! whose revocation probability on a given curve is at or below `LT(v)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::RevocationCurve;

/// Loss thresholds below this saturate to exactly zero rather than drifting
/// through subnormal territory; the saturation is flagged on the result.
pub const UNDERFLOW_FLOOR: f64 = 1e-300;

/// Errors from parameter validation and the depth rule.
#[derive(Debug, Error, PartialEq)]
pub enum RiskError {
    #[error("lambda must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("beta must lie in (0, 1), got {0}")]
    InvalidBeta(f64),
    #[error("anchor value must be positive and finite, got {0}")]
    InvalidAnchorValue(f64),
    #[error("anchor probability must lie strictly between 0 and 1, got {0}")]
    InvalidAnchorProbability(f64),
    #[error("transaction value must be finite and non-negative, got {0}")]
    InvalidValue(f64),
    #[error("maximum search depth must be at least 1")]
    InvalidMaxDepth,
    /// No depth within the search budget (or the curve's support) has a
    /// revocation probability at or below the threshold.
    #[error(
        "no confirmation depth <= {searched} brings the revocation probability \
         under the loss threshold {threshold:e}"
    )]
    NoDepthSatisfies { searched: u32, threshold: f64 },
}

/// Loss-aversion parameters together with the calibration anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskParams {
    /// Loss-aversion coefficient; how much heavier a loss weighs than a
    /// same-sized gain. Must be positive.
    pub lambda: f64,
    /// Diminishing-sensitivity exponent in `(0, 1)`.
    pub beta: f64,
    /// Transaction value at the calibration anchor.
    pub anchor_value: f64,
    /// Revocation probability judged acceptable at the anchor value.
    pub anchor_probability: f64,
}

impl Default for RiskParams {
    fn default() -> Self {
        Self {
            lambda: 2.25,
            beta: 0.88,
            anchor_value: 1.0,
            anchor_probability: 0.5,
        }
    }
}

impl RiskParams {
    pub fn validate(&self) -> Result<(), RiskError> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(RiskError::InvalidLambda(self.lambda));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(RiskError::InvalidBeta(self.beta));
        }
        if !(self.anchor_value > 0.0 && self.anchor_value.is_finite()) {
            return Err(RiskError::InvalidAnchorValue(self.anchor_value));
        }
        if !(self.anchor_probability > 0.0 && self.anchor_probability < 1.0) {
            return Err(RiskError::InvalidAnchorProbability(self.anchor_probability));
        }
        Ok(())
    }

    /// Subjective weight of losing a transaction of value `value`:
    /// `-lambda * value^beta`. Always non-positive.
    pub fn loss(&self, value: f64) -> Result<f64, RiskError> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(RiskError::InvalidValue(value));
        }
        if value == 0.0 {
            return Ok(0.0);
        }
        Ok(-(self.lambda * value.powf(self.beta)))
    }
}

/// A calibrated loss model: parameters plus the scale constant that makes
/// the anchor point come out exactly.
///
/// The scale `c` solves `exp(loss(anchor_value) / c) = anchor_probability`,
/// i.e. `c = loss(anchor_value) / ln(anchor_probability)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossModel {
    params: RiskParams,
    scale: f64,
}

impl LossModel {
    /// Validates the parameters and solves for the calibration scale.
    pub fn calibrate(params: RiskParams) -> Result<Self, RiskError> {
        params.validate()?;
        let scale = params.loss(params.anchor_value)? / params.anchor_probability.ln();
        debug_assert!(scale > 0.0 && scale.is_finite());
        Ok(Self { params, scale })
    }

    pub fn params(&self) -> &RiskParams {
        &self.params
    }

    /// The calibration scale `c`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Maximum tolerable revocation probability for a transaction of value
    /// `value`: `LT(v) = exp(loss(v) / c)`.
    ///
    /// Computed in the algebraically identical form
    /// `anchor_probability^((v / anchor_value)^beta)`, which is exact at the
    /// anchor and avoids the intermediate division. `LT(0) = 1`, `LT` is
    /// strictly decreasing, and values large enough to push the threshold
    /// below [`UNDERFLOW_FLOOR`] saturate to zero with the flag set.
    pub fn loss_threshold(&self, value: f64) -> Result<LossThreshold, RiskError> {
        if !(value >= 0.0 && value.is_finite()) {
            return Err(RiskError::InvalidValue(value));
        }
        let ratio = value / self.params.anchor_value;
        let raw = self
            .params
            .anchor_probability
            .powf(ratio.powf(self.params.beta));
        if raw < UNDERFLOW_FLOOR {
            Ok(LossThreshold {
                probability: 0.0,
                underflowed: true,
            })
        } else {
            Ok(LossThreshold {
                probability: raw,
                underflowed: false,
            })
        }
    }
}

/// A loss threshold, with an explicit marker for underflow saturation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossThreshold {
    /// Maximum tolerable revocation probability, in `[0, 1]`.
    pub probability: f64,
    /// True when the exact threshold fell below [`UNDERFLOW_FLOOR`] and was
    /// clamped to zero.
    pub underflowed: bool,
}

/// Shallowest depth `d in 1..=max_depth` with
/// `curve.probability(d) <= loss_threshold(value)`.
///
/// The boundary is inclusive: a depth whose revocation probability equals
/// the threshold exactly is accepted. Non-extensible curves cap the search
/// at their deepest stored entry. When no depth qualifies the caller gets
/// [`RiskError::NoDepthSatisfies`] with the depth range that was searched —
/// an underflowed threshold of zero, for instance, is only met by a depth
/// whose revocation probability is exactly zero.
pub fn min_confirmation_depth(
    value: f64,
    curve: &RevocationCurve,
    model: &LossModel,
    max_depth: u32,
) -> Result<u32, RiskError> {
    if max_depth == 0 {
        return Err(RiskError::InvalidMaxDepth);
    }
    let threshold = model.loss_threshold(value)?.probability;
    let deepest = curve.deepest_queryable(max_depth);
    for depth in 1..=deepest {
        let p = curve
            .probability(depth)
            .expect("deepest_queryable stays within the curve's support");
        if p <= threshold {
            return Ok(depth);
        }
    }
    Err(RiskError::NoDepthSatisfies {
        searched: deepest,
        threshold,
    })
}
