use std::collections::BTreeMap;

use serde::Serialize;

use super::{build_agents, StrategyPolicy};
use crate::error::{Error, Result};
use crate::mechanisms::run_agents;
use crate::model::{AuctionOutcome, BidderId, Money};
use crate::scenarios::Scenario;

/// Result of a unilateral deviation search. Gains are relative to the
/// declared alternative set only.
#[derive(Debug, Clone, Serialize)]
pub struct DeviationReport {
    pub deviator: BidderId,
    pub baseline_policy: StrategyPolicy,
    pub baseline_utility: Money,
    /// Utility under the best alternative (equal to the baseline when no
    /// alternative was tried).
    pub best_utility: Money,
    /// `best_utility − baseline_utility`; 0 when the set is empty.
    pub gain: Money,
    pub best_alternative: Option<StrategyPolicy>,
    pub alternatives: Vec<StrategyPolicy>,
    pub baseline_outcome: AuctionOutcome,
    pub best_outcome: Option<AuctionOutcome>,
}

/// Runs `profile` (missing bidders play straightforward) and then, for each
/// alternative, the same profile with only `deviator` switched. Everything
/// else, including the seed, stays fixed.
pub fn unilateral_deviation_gain(
    scenario: &Scenario,
    profile: &BTreeMap<BidderId, StrategyPolicy>,
    deviator: &BidderId,
    alternatives: &[StrategyPolicy],
) -> Result<DeviationReport> {
    if !scenario.within_oracle_bounds() {
        return Err(Error::OracleBoundExceeded {
            licenses: scenario.licenses.len(),
            bidders: scenario.bidders.len(),
        });
    }
    if scenario.bidder(deviator).is_none() {
        return Err(Error::Input(format!("unknown deviating bidder {deviator}")));
    }
    let valuation = scenario.profile_or_empty(deviator);
    let play = |p: &BTreeMap<BidderId, StrategyPolicy>| -> Result<AuctionOutcome> {
        let mut agents = build_agents(scenario.bidders.iter().map(|b| &b.id), p);
        run_agents(scenario, &mut agents, &scenario.mechanism)
    };

    let baseline_outcome = play(profile)?;
    let baseline_utility = baseline_outcome.utility(&valuation);
    let mut best: Option<(Money, StrategyPolicy, AuctionOutcome)> = None;
    for alt in alternatives {
        let mut deviated = profile.clone();
        deviated.insert(deviator.clone(), alt.clone());
        let outcome = play(&deviated)?;
        let u = outcome.utility(&valuation);
        if best.as_ref().is_none_or(|(b, _, _)| u > *b) {
            best = Some((u, alt.clone(), outcome));
        }
    }
    let (best_utility, best_alternative, best_outcome) = match best {
        Some((u, p, o)) => (u, Some(p), Some(o)),
        None => (baseline_utility, None, None),
    };
    Ok(DeviationReport {
        deviator: deviator.clone(),
        baseline_policy: profile.get(deviator).cloned().unwrap_or_default(),
        baseline_utility,
        best_utility,
        gain: best_utility - baseline_utility,
        best_alternative,
        alternatives: alternatives.to_vec(),
        baseline_outcome,
        best_outcome,
    })
}
