//! Revocation-probability curves indexed by confirmation depth.
//!
//! A [`RevocationCurve`] maps each confirmation depth `d >= 1` to the
//! probability that a block that has reached depth `d` is later abandoned
//! in a chain switch. Curves are the interchange format between the
//! simulator, the pool model, and the depth rule in [`crate::risk`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Where a curve's probabilities came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    /// Estimated from simulator switch statistics.
    Simulated,
    /// Derived from an observed pool distribution via the fork-rate model.
    PoolModel,
    /// Hand-built, e.g. in tests.
    Synthetic,
}

/// Errors constructing or validating a curve.
#[derive(Debug, Error, PartialEq)]
pub enum CurveError {
    /// A curve must cover at least depth 1.
    #[error("curve needs at least one entry")]
    Empty,
    /// Probabilities must be real numbers in `[0, 1]`.
    #[error("probability {probability} at depth {depth} is outside [0, 1]")]
    OutOfRange { depth: u32, probability: f64 },
    /// Depth-indexed input must cover `1..=n` without gaps.
    #[error("depths must be contiguous from 1: expected {expected}, got {got}")]
    DepthGap { expected: u32, got: u32 },
    /// A geometric curve needs a base in `[0, 1)`.
    #[error("depth-one probability must lie in [0, 1), got {0}")]
    InvalidBase(f64),
}

/// A non-increasing map from confirmation depth to revocation probability.
///
/// Depths start at 1 (a freshly mined block sits at depth 0 and is not
/// represented). Construction enforces monotonicity by clamping each entry
/// to the running minimum of the entries before it, so sampling noise can
/// never make a deeper confirmation look riskier than a shallower one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevocationCurve {
    /// `probabilities[i]` is the revocation probability at depth `i + 1`.
    probabilities: Vec<f64>,
    provenance: Provenance,
    /// Network delay the curve was produced under, if any: rounds for
    /// simulated curves, seconds for pool-model curves.
    delay: Option<f64>,
    /// Base of a geometric curve. When present, `probability(d)` for depths
    /// past the stored entries is computed as `base^d` instead of `None`.
    geometric_base: Option<f64>,
}

impl RevocationCurve {
    /// Builds a curve from probabilities for depths `1..=probabilities.len()`,
    /// applying the running-minimum cleanup.
    pub fn from_probabilities(
        probabilities: Vec<f64>,
        provenance: Provenance,
        delay: Option<f64>,
    ) -> Result<Self, CurveError> {
        if probabilities.is_empty() {
            return Err(CurveError::Empty);
        }
        let mut cleaned = probabilities;
        let mut floor = 1.0f64;
        for (i, p) in cleaned.iter_mut().enumerate() {
            if !(*p >= 0.0 && *p <= 1.0) {
                return Err(CurveError::OutOfRange {
                    depth: i as u32 + 1,
                    probability: *p,
                });
            }
            floor = floor.min(*p);
            *p = floor;
        }
        Ok(Self {
            probabilities: cleaned,
            provenance,
            delay,
            geometric_base: None,
        })
    }

    /// Builds a curve from explicit `(depth, probability)` pairs, which must
    /// be sorted and contiguous starting at depth 1.
    pub fn from_pairs(
        pairs: &[(u32, f64)],
        provenance: Provenance,
        delay: Option<f64>,
    ) -> Result<Self, CurveError> {
        let mut probabilities = Vec::with_capacity(pairs.len());
        for (i, &(depth, p)) in pairs.iter().enumerate() {
            let expected = i as u32 + 1;
            if depth != expected {
                return Err(CurveError::DepthGap {
                    expected,
                    got: depth,
                });
            }
            probabilities.push(p);
        }
        Self::from_probabilities(probabilities, provenance, delay)
    }

    /// Builds the geometric curve `p(d) = base^d` with `max_depth` stored
    /// entries. Queries past `max_depth` keep following the geometric law.
    pub fn geometric(base: f64, max_depth: u32) -> Result<Self, CurveError> {
        if !(0.0..1.0).contains(&base) {
            return Err(CurveError::InvalidBase(base));
        }
        if max_depth == 0 {
            return Err(CurveError::Empty);
        }
        let probabilities = (1..=max_depth).map(|d| base.powi(d as i32)).collect();
        Ok(Self {
            probabilities,
            provenance: Provenance::PoolModel,
            delay: None,
            geometric_base: Some(base),
        })
    }

    /// Tags the curve with the delay it was produced under.
    pub fn with_delay(mut self, delay: f64) -> Self {
        self.delay = Some(delay);
        self
    }

    /// Revocation probability at `depth`, or `None` when the depth is 0 or
    /// beyond the curve's support.
    pub fn probability(&self, depth: u32) -> Option<f64> {
        if depth == 0 {
            return None;
        }
        if let Some(&p) = self.probabilities.get(depth as usize - 1) {
            return Some(p);
        }
        self.geometric_base.map(|base| base.powi(depth as i32))
    }

    /// Deepest explicitly stored depth.
    pub fn max_stored_depth(&self) -> u32 {
        self.probabilities.len() as u32
    }

    /// Whether queries past the stored entries are answered (geometric
    /// curves) or out of support (estimated curves).
    pub fn is_extensible(&self) -> bool {
        self.geometric_base.is_some()
    }

    /// Deepest depth a search may probe given a caller budget: the budget
    /// itself for extensible curves, otherwise capped at the stored depth.
    pub fn deepest_queryable(&self, budget: u32) -> u32 {
        if self.is_extensible() {
            budget
        } else {
            budget.min(self.max_stored_depth())
        }
    }

    /// Stored `(depth, probability)` entries in depth order.
    pub fn entries(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.probabilities
            .iter()
            .enumerate()
            .map(|(i, &p)| (i as u32 + 1, p))
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn delay(&self) -> Option<f64> {
        self.delay
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_minimum_flattens_bumps() {
        let curve = RevocationCurve::from_probabilities(
            vec![0.5, 0.2, 0.3, 0.1],
            Provenance::Synthetic,
            None,
        )
        .unwrap();
        let cleaned: Vec<f64> = curve.entries().map(|(_, p)| p).collect();
        assert_eq!(cleaned, vec![0.5, 0.2, 0.2, 0.1]);
    }

    #[test]
    fn monotone_input_is_untouched() {
        let input = vec![0.5, 0.25, 0.125];
        let curve = RevocationCurve::from_probabilities(input.clone(), Provenance::Synthetic, None)
            .unwrap();
        let out: Vec<f64> = curve.entries().map(|(_, p)| p).collect();
        assert_eq!(out, input);
    }

    #[test]
    fn rejects_probability_out_of_range() {
        let err = RevocationCurve::from_probabilities(vec![0.5, 1.5], Provenance::Synthetic, None)
            .unwrap_err();
        assert_eq!(
            err,
            CurveError::OutOfRange {
                depth: 2,
                probability: 1.5
            }
        );
        assert!(
            RevocationCurve::from_probabilities(vec![f64::NAN], Provenance::Synthetic, None)
                .is_err()
        );
    }

    #[test]
    fn rejects_empty_and_gapped_input() {
        assert_eq!(
            RevocationCurve::from_probabilities(vec![], Provenance::Synthetic, None).unwrap_err(),
            CurveError::Empty
        );
        let err = RevocationCurve::from_pairs(&[(1, 0.5), (3, 0.1)], Provenance::Synthetic, None)
            .unwrap_err();
        assert_eq!(
            err,
            CurveError::DepthGap {
                expected: 2,
                got: 3
            }
        );
    }

    #[test]
    fn geometric_curve_follows_powers_of_the_base() {
        let curve = RevocationCurve::geometric(0.5, 4).unwrap();
        assert_eq!(curve.probability(1), Some(0.5));
        assert_eq!(curve.probability(2), Some(0.25));
        assert_eq!(curve.probability(4), Some(0.0625));
        // Past the stored entries the geometric law keeps answering.
        assert_eq!(curve.probability(5), Some(0.03125));
        assert!(curve.is_extensible());
        assert_eq!(curve.deepest_queryable(1000), 1000);
    }

    #[test]
    fn geometric_rejects_bad_base() {
        assert!(RevocationCurve::geometric(1.0, 4).is_err());
        assert!(RevocationCurve::geometric(-0.1, 4).is_err());
        assert!(RevocationCurve::geometric(f64::NAN, 4).is_err());
        assert_eq!(
            RevocationCurve::geometric(0.5, 0).unwrap_err(),
            CurveError::Empty
        );
    }

    #[test]
    fn estimated_curves_do_not_extend() {
        let curve =
            RevocationCurve::from_probabilities(vec![0.5, 0.25], Provenance::Simulated, Some(4.0))
                .unwrap();
        assert_eq!(curve.probability(0), None);
        assert_eq!(curve.probability(2), Some(0.25));
        assert_eq!(curve.probability(3), None);
        assert!(!curve.is_extensible());
        assert_eq!(curve.deepest_queryable(1000), 2);
        assert_eq!(curve.deepest_queryable(1), 1);
        assert_eq!(curve.delay(), Some(4.0));
    }

    #[test]
    fn zero_probabilities_are_valid() {
        let curve =
            RevocationCurve::from_probabilities(vec![0.1, 0.0], Provenance::Simulated, None)
                .unwrap();
        assert_eq!(curve.probability(2), Some(0.0));
        let geo = RevocationCurve::geometric(0.0, 3).unwrap();
        assert_eq!(geo.probability(1), Some(0.0));
        assert_eq!(geo.probability(7), Some(0.0));
    }
}
