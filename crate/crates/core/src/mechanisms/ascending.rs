use std::collections::BTreeMap;

use super::engine::Engine;
use super::tie::shuffled_order;
use super::{MechanismConfig, OrderingPolicy};
use crate::error::{Error, Result};
use crate::model::{AuctionOutcome, LicenseId, MechanismKind};
use crate::scenarios::Scenario;
use crate::strategies::Agent;

fn fixed_order(engine: &Engine<'_>, config: &MechanismConfig) -> Result<Option<Vec<usize>>> {
    match &config.ordering_policy {
        Some(OrderingPolicy::Fixed { order }) => {
            config.validate(&engine.index, "mechanism")?;
            Ok(Some(
                order
                    .iter()
                    .map(|id| engine.index.position(id).expect("validated"))
                    .collect(),
            ))
        }
        _ => Ok(None),
    }
}

/// One license at a time in a fixed order; each license runs rounds until a
/// round passes without a new bid.
pub fn run_sequential_amr(scenario: &Scenario, agents: &mut [Agent], config: &MechanismConfig) -> Result<AuctionOutcome> {
    let mut engine = Engine::new(MechanismKind::SeqAmr, scenario, config, agents, false)?;
    config.validate(&engine.index, "mechanism")?;
    let order = match &config.ordering_policy {
        Some(OrderingPolicy::RandomPerCycle) => {
            return Err(Error::config(
                "mechanism.ordering_policy",
                "SEQ_AMR requires a FIXED order",
            ))
        }
        _ => fixed_order(&engine, config)?.unwrap_or_else(|| (0..engine.license_count()).collect()),
    };
    for i in order {
        loop {
            let round = engine.next_round()?;
            let stats = engine.step(agents, 1 << i, round, 0, round)?;
            engine.snapshot(round, 0, Some(i), BTreeMap::new());
            if !stats.any_bid {
                break;
            }
        }
        engine.close(i, 0, 0);
    }
    Ok(engine.finish())
}

/// All licenses open together under the activity rule; ends after the first
/// round without a new bid anywhere.
pub fn run_samr(scenario: &Scenario, agents: &mut [Agent], config: &MechanismConfig) -> Result<AuctionOutcome> {
    let mut engine = Engine::new(MechanismKind::Samr, scenario, config, agents, true)?;
    config.validate(&engine.index, "mechanism")?;
    if config.activity_phases.is_empty() {
        return Err(Error::config("mechanism.activity_phases", "SAMR needs at least one phase"));
    }
    let all = engine.open_mask();
    loop {
        let round = engine.next_round()?;
        let stats = engine.step(agents, all, round, 0, round)?;
        let activity = engine.apply_activity(round);
        engine.snapshot(round, 0, None, activity);
        if !stats.any_bid {
            break;
        }
    }
    for i in 0..engine.license_count() {
        engine.close(i, 0, 0);
    }
    Ok(engine.finish())
}

/// Cycles through the open licenses one visit at a time. A visit with no new
/// bid raises the license's saturation factor; the license closes on the
/// visit where it reaches its threshold.
pub fn run_hamr(scenario: &Scenario, agents: &mut [Agent], config: &MechanismConfig) -> Result<AuctionOutcome> {
    let mut engine = Engine::new(MechanismKind::Hamr, scenario, config, agents, true)?;
    config.validate(&engine.index, "mechanism")?;
    if let Some(missing) = engine.index.ids().iter().find(|id| !config.tsf.contains_key(*id)) {
        return Err(Error::config(format!("mechanism.tsf.{missing}"), "HAMR needs a threshold for every license"));
    }
    let fixed = fixed_order(&engine, config)?;
    let ids: Vec<LicenseId> = engine.index.ids().to_vec();

    while engine.open_mask() != 0 {
        let cycle = engine.next_round()?;
        let order: Vec<usize> = match &fixed {
            Some(order) => order.iter().copied().filter(|&i| engine.is_open(i)).collect(),
            None => {
                let open: Vec<LicenseId> = ids
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| engine.is_open(*i))
                    .map(|(_, id)| id.clone())
                    .collect();
                shuffled_order(&open, engine.seed, cycle)
                    .iter()
                    .map(|id| engine.index.position(id).expect("indexed"))
                    .collect()
            }
        };
        for (position, i) in order.into_iter().enumerate() {
            let stats = engine.step(agents, 1 << i, cycle, cycle, cycle)?;
            if !stats.any_bid {
                let sf = engine.bump_saturation(i);
                if sf >= config.tsf[&ids[i]] {
                    engine.close(i, position as u32, cycle);
                }
            }
        }
        let activity = engine.apply_activity(cycle);
        engine.snapshot(cycle, cycle, None, activity);
    }
    Ok(engine.finish())
}
