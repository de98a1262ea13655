//! The five auction engines. Sealed formats take a list of sealed bids;
//! ascending formats drive a set of [`Agent`]s round by round.

mod ascending;
mod config;
mod engine;
mod increment;
mod sealed;
mod tie;

pub use ascending::{run_hamr, run_samr, run_sequential_amr};
pub use config::{default_phases, ActivityPhase, Disclosure, IncrementSchedule, MechanismConfig, OrderingPolicy, DEFAULT_TSF};
pub use engine::ROUND_LIMIT;
pub use increment::{compute_min_increment, ACTIVITY_SCALE_CAP};
pub use sealed::{run_fpsb, run_vickrey, SealedBid};
pub use tie::resolve_tie;

use crate::error::Result;
use crate::model::{AuctionOutcome, CompiledValuation, MechanismKind, Money, ValuationProfile};
use crate::scenarios::Scenario;
use crate::strategies::{Agent, PrivateState};

/// Runs `scenario` under `config` with the scenario's own strategy assignment.
pub fn run_with(scenario: &Scenario, config: &MechanismConfig) -> Result<AuctionOutcome> {
    let mut agents = scenario.agents();
    run_agents(scenario, &mut agents, config)
}

/// Runs `scenario` under its own mechanism configuration.
pub fn run(scenario: &Scenario) -> Result<AuctionOutcome> {
    run_with(scenario, &scenario.mechanism)
}

/// Dispatches on `config.kind`. Sealed formats collect one sealed bid list
/// from each agent first.
pub fn run_agents(scenario: &Scenario, agents: &mut [Agent], config: &MechanismConfig) -> Result<AuctionOutcome> {
    match config.kind {
        MechanismKind::Fpsb | MechanismKind::Vickrey => {
            let bids = collect_sealed_bids(scenario, agents)?;
            sealed::run_sealed(scenario, config, &bids)
        }
        MechanismKind::SeqAmr => run_sequential_amr(scenario, agents, config),
        MechanismKind::Samr => run_samr(scenario, agents, config),
        MechanismKind::Hamr => run_hamr(scenario, agents, config),
    }
}

/// Asks every agent for its sealed bids.
pub fn collect_sealed_bids(scenario: &Scenario, agents: &[Agent]) -> Result<Vec<SealedBid>> {
    let index = scenario.license_index();
    let licenses: Vec<_> = index
        .ids()
        .iter()
        .map(|id| scenario.license(id).expect("indexed"))
        .collect();
    let mut out = Vec::new();
    for agent in agents {
        let bidder = scenario
            .bidder(&agent.bidder_id)
            .ok_or_else(|| crate::error::Error::Input(format!("agent for unknown bidder {}", agent.bidder_id)))?;
        let profile = scenario
            .profile(&agent.bidder_id)
            .cloned()
            .unwrap_or_else(|| ValuationProfile::new(agent.bidder_id.as_str()));
        let valuation = CompiledValuation::compile(&profile, &index)?;
        let me = PrivateState {
            bidder,
            profile: &profile,
            valuation: &valuation,
            held: 0,
            won: 0,
            committed: Money::ZERO,
            eligibility: None,
            active_mask: 0,
        };
        out.extend(agent.sealed_bids(&licenses, &me).into_iter().map(|b| SealedBid {
            bidder_id: agent.bidder_id.clone(),
            license_id: b.license,
            amount: b.amount,
        }));
    }
    Ok(out)
}
