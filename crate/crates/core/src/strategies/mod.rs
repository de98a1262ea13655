//! Bidder agent policies and the unilateral-deviation search.
//!
//! A policy maps the public view plus the bidder's private state to a list of
//! bid intents. Every policy respects the bidder's remaining budget,
//! eligibility and per-region bandwidth cap, and none bids above the value it
//! attaches to the license, with the deliberate exception of
//! [`StrategyPolicy::ExposureChaser`], which prices in complements it expects
//! to buy later.

mod deviation;
mod view;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use deviation::{unilateral_deviation_gain, DeviationReport};
pub use view::{LicenseView, ObservedBid, PrivateState, PublicView};

use crate::mechanisms::Disclosure;
use crate::model::{BidderId, License, LicenseId, Money};

/// What the cartel does to a member caught bidding on another member's license.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Punishment {
    None,
    RaiseOnDefector { markup_fraction: f64 },
}

/// A bid-rigging agreement: each designated license is left to one member.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CartelAgreement {
    pub members: BTreeSet<BidderId>,
    pub designated_winner: BTreeMap<LicenseId, BidderId>,
    pub punishment: Punishment,
}

impl CartelAgreement {
    pub fn designated_to<'a>(&'a self, member: &'a BidderId) -> impl Iterator<Item = &'a LicenseId> + 'a {
        self.designated_winner
            .iter()
            .filter(move |(_, w)| *w == member)
            .map(|(l, _)| l)
    }
}

/// When a [`StrategyPolicy::CartelDefector`] abandons the agreement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DefectTrigger {
    /// Once every license designated to the defector has closed.
    OwnDesignatedClosed,
    Immediately,
    /// From the first round (HAMR: cycle) strictly after `round`.
    AfterRound { round: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum StrategyPolicy {
    /// Sealed bid equal to the singleton value.
    TruthfulSealed,
    /// Sealed bid equal to `factor × value`. Factors above 1 overbid.
    ShadedSealed { factor: f64 },
    /// Raise by the minimum on every license whose next bid is still within
    /// marginal value, unless already the sole standing high bidder.
    StraightforwardAscending,
    /// Complement bidder that prices unbought licenses of its bundle at a
    /// forecast (default: reserve) and bids up to the bundle value net of it.
    ExposureChaser {
        #[serde(default)]
        forecast: BTreeMap<LicenseId, Money>,
    },
    /// Straightforward, but never active on more than `max_licenses` at once.
    /// A tie-drawn provisional standing bid counts as held.
    DemandReducer { max_licenses: usize },
    CartelMember { agreement: CartelAgreement },
    CartelDefector { agreement: CartelAgreement, trigger: DefectTrigger },
}

impl Default for StrategyPolicy {
    fn default() -> Self {
        StrategyPolicy::StraightforwardAscending
    }
}

impl StrategyPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            StrategyPolicy::TruthfulSealed => "TRUTHFUL_SEALED",
            StrategyPolicy::ShadedSealed { .. } => "SHADED_SEALED",
            StrategyPolicy::StraightforwardAscending => "STRAIGHTFORWARD_ASCENDING",
            StrategyPolicy::ExposureChaser { .. } => "EXPOSURE_CHASER",
            StrategyPolicy::DemandReducer { .. } => "DEMAND_REDUCER",
            StrategyPolicy::CartelMember { .. } => "CARTEL_MEMBER",
            StrategyPolicy::CartelDefector { .. } => "CARTEL_DEFECTOR",
        }
    }

    pub fn agreement(&self) -> Option<&CartelAgreement> {
        match self {
            StrategyPolicy::CartelMember { agreement } | StrategyPolicy::CartelDefector { agreement, .. } => {
                Some(agreement)
            }
            _ => None,
        }
    }

    /// License ids the policy refers to, for referential checks.
    pub fn referenced_licenses(&self) -> Vec<&LicenseId> {
        match self {
            StrategyPolicy::ExposureChaser { forecast } => forecast.keys().collect(),
            StrategyPolicy::CartelMember { agreement } | StrategyPolicy::CartelDefector { agreement, .. } => {
                agreement.designated_winner.keys().collect()
            }
            _ => Vec::new(),
        }
    }
}

/// An order to bid `amount` on `license`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BidIntent {
    pub license: LicenseId,
    pub amount: Money,
}

#[derive(Debug, Clone, Default)]
struct AgentMemory {
    log_cursor: usize,
    defectors: BTreeSet<BidderId>,
    unknown_defection: bool,
    defected: bool,
}

/// A bidder's policy plus the memory it accumulates during one run.
#[derive(Debug, Clone)]
pub struct Agent {
    pub bidder_id: BidderId,
    pub policy: StrategyPolicy,
    memory: AgentMemory,
}

impl Agent {
    pub fn new(bidder_id: BidderId, policy: StrategyPolicy) -> Self {
        Agent {
            bidder_id,
            policy,
            memory: AgentMemory::default(),
        }
    }

    /// Whether this agent has abandoned its cartel agreement.
    pub fn has_defected(&self) -> bool {
        self.memory.defected
    }

    /// Bids for the current ascending round.
    pub fn decide(&mut self, view: &PublicView<'_>, me: &PrivateState<'_>) -> Vec<BidIntent> {
        let mut plan = Planner::new(view, me);
        match &self.policy {
            StrategyPolicy::TruthfulSealed | StrategyPolicy::ShadedSealed { .. } => {}
            StrategyPolicy::StraightforwardAscending => straightforward(&mut plan),
            StrategyPolicy::ExposureChaser { forecast } => exposure_chaser(&mut plan, forecast),
            StrategyPolicy::DemandReducer { max_licenses } => demand_reducer(&mut plan, *max_licenses),
            StrategyPolicy::CartelMember { agreement } => {
                let agreement = agreement.clone();
                self.observe(view, &agreement);
                cartel_member(&mut plan, &agreement, &self.memory, &self.bidder_id);
            }
            StrategyPolicy::CartelDefector { agreement, trigger } => {
                let (agreement, trigger) = (agreement.clone(), *trigger);
                self.observe(view, &agreement);
                if !self.memory.defected && triggered(trigger, view, &agreement, &self.bidder_id) {
                    self.memory.defected = true;
                }
                if self.memory.defected {
                    straightforward(&mut plan);
                } else {
                    cartel_member(&mut plan, &agreement, &self.memory, &self.bidder_id);
                }
            }
        }
        plan.intents
    }

    /// One-shot sealed bids. `licenses` are the scenario's licenses in id order.
    pub fn sealed_bids(&self, licenses: &[&License], me: &PrivateState<'_>) -> Vec<BidIntent> {
        let singleton = |i: usize| me.valuation.value(1 << i);
        let truthful = || -> Vec<BidIntent> {
            licenses
                .iter()
                .enumerate()
                .filter(|(i, _)| singleton(*i) > Money::ZERO)
                .map(|(i, l)| BidIntent { license: l.id.clone(), amount: singleton(i) })
                .collect()
        };
        match &self.policy {
            StrategyPolicy::TruthfulSealed
            | StrategyPolicy::StraightforwardAscending
            | StrategyPolicy::ExposureChaser { .. } => truthful(),
            StrategyPolicy::ShadedSealed { factor } => licenses
                .iter()
                .enumerate()
                .filter(|(i, _)| singleton(*i) > Money::ZERO)
                .map(|(i, l)| BidIntent { license: l.id.clone(), amount: singleton(i).scale_half_up(*factor) })
                .collect(),
            StrategyPolicy::DemandReducer { max_licenses } => {
                let mut bids = truthful();
                bids.sort_by(|a, b| b.amount.cmp(&a.amount).then_with(|| a.license.cmp(&b.license)));
                bids.truncate(*max_licenses);
                bids
            }
            StrategyPolicy::CartelMember { agreement } => sealed_cartel(licenses, me, agreement, &self.bidder_id),
            StrategyPolicy::CartelDefector { agreement, trigger } => {
                let fires = match trigger {
                    DefectTrigger::Immediately => true,
                    DefectTrigger::AfterRound { round } => *round < 1,
                    DefectTrigger::OwnDesignatedClosed => false,
                };
                if fires {
                    truthful()
                } else {
                    sealed_cartel(licenses, me, agreement, &self.bidder_id)
                }
            }
        }
    }

    fn observe(&mut self, view: &PublicView<'_>, agreement: &CartelAgreement) {
        let me = self.bidder_id.clone();
        let from = self.memory.log_cursor;
        let mut defectors = Vec::new();
        let mut unknown = false;
        for bid in view.observed_bids(from, &me) {
            if bid.mine {
                continue;
            }
            let Some(owner) = agreement.designated_winner.get(bid.license) else {
                continue;
            };
            match bid.bidder {
                Some(who) if agreement.members.contains(who) && who != owner => defectors.push(who.clone()),
                Some(_) => {}
                // identities hidden: a foreign bid on one of my own licenses
                // can only be attributed to "someone"
                None if owner == &me => unknown = true,
                None => {}
            }
        }
        self.memory.defectors.extend(defectors);
        self.memory.unknown_defection |= unknown;
        self.memory.log_cursor = view.log_len();
    }
}

fn triggered(trigger: DefectTrigger, view: &PublicView<'_>, agreement: &CartelAgreement, me: &BidderId) -> bool {
    match trigger {
        DefectTrigger::Immediately => true,
        DefectTrigger::AfterRound { round } => {
            let now = if view.cycle_index > 0 { view.cycle_index } else { view.round_index };
            now > round
        }
        DefectTrigger::OwnDesignatedClosed => {
            let mut own = agreement.designated_to(me).peekable();
            own.peek().is_some()
                && own.all(|l| view.position(l).map_or(true, |i| !view.licenses[i].open))
        }
    }
}

/// Greedy acceptance of bids under the bidder's budget, eligibility and caps.
struct Planner<'v, 'a> {
    view: &'v PublicView<'a>,
    me: &'v PrivateState<'a>,
    budget_left: Option<Money>,
    active_mask: u64,
    chosen: u64,
    region_bw: BTreeMap<&'v str, f64>,
    intents: Vec<BidIntent>,
}

impl<'v, 'a> Planner<'v, 'a> {
    fn new(view: &'v PublicView<'a>, me: &'v PrivateState<'a>) -> Self {
        let mut region_bw: BTreeMap<&str, f64> = BTreeMap::new();
        let holdings = me.holdings();
        for (i, l) in view.licenses.iter().enumerate() {
            if holdings >> i & 1 == 1 {
                *region_bw.entry(l.region_id.as_str()).or_default() += l.bandwidth_mhz;
            }
        }
        Planner {
            view,
            me,
            budget_left: me.remaining_budget(),
            active_mask: me.active_mask,
            chosen: 0,
            region_bw,
            intents: Vec::new(),
        }
    }

    fn secure(&self, i: usize) -> bool {
        self.me.holds(i) && !self.view.licenses[i].tied
    }

    fn marginal(&self, i: usize) -> Money {
        self.me.valuation.marginal(self.me.holdings(), i)
    }

    /// Marginal value counting the licenses already picked this round.
    fn marginal_now(&self, i: usize) -> Money {
        self.me.valuation.marginal(self.me.holdings() | self.chosen, i)
    }

    fn candidates(&self) -> impl Iterator<Item = (usize, &'v LicenseView)> + 'v {
        self.view.licenses.iter().enumerate().filter(|(_, l)| l.open && l.biddable)
    }

    fn try_add(&mut self, i: usize, amount: Money) -> bool {
        if self.chosen >> i & 1 == 1 {
            return false;
        }
        let lic = &self.view.licenses[i];
        let extra = if self.me.holds(i) {
            amount - lic.high_bid.unwrap_or_default()
        } else {
            amount
        };
        if let Some(left) = self.budget_left {
            if extra > left {
                return false;
            }
        }
        if let Some(elig) = self.me.eligibility {
            let mask = self.active_mask | 1 << i;
            let units: f64 = self
                .view
                .licenses
                .iter()
                .enumerate()
                .filter(|(j, l)| l.open && mask >> j & 1 == 1)
                .map(|(_, l)| l.activity_weight)
                .sum();
            if units > elig + 1e-9 {
                return false;
            }
        }
        let adds_bandwidth = self.me.holdings() >> i & 1 == 0;
        if adds_bandwidth {
            if let Some(cap) = self.me.bidder.bandwidth_cap_mhz {
                let used = self.region_bw.get(lic.region_id.as_str()).copied().unwrap_or(0.0);
                if used + lic.bandwidth_mhz > cap + 1e-9 {
                    return false;
                }
            }
        }
        if let Some(left) = self.budget_left.as_mut() {
            *left -= extra;
        }
        self.active_mask |= 1 << i;
        self.chosen |= 1 << i;
        if adds_bandwidth {
            *self.region_bw.entry(lic.region_id.as_str()).or_default() += lic.bandwidth_mhz;
        }
        self.intents.push(BidIntent {
            license: lic.id.clone(),
            amount,
        });
        true
    }
}

fn straightforward(plan: &mut Planner<'_, '_>) {
    let mut wanted: Vec<(usize, Money, Money)> = plan
        .candidates()
        .filter(|(i, _)| !plan.secure(*i))
        .filter_map(|(i, l)| {
            let mv = plan.marginal(i);
            (l.min_bid <= mv).then(|| (i, l.min_bid, mv - l.min_bid))
        })
        .collect();
    wanted.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    for (i, amount, _) in wanted {
        if amount <= plan.marginal_now(i) {
            plan.try_add(i, amount);
        }
    }
}

fn demand_reducer(plan: &mut Planner<'_, '_>, max_licenses: usize) {
    let engaged = plan.me.holdings().count_ones() as usize;
    if engaged >= max_licenses {
        return;
    }
    let mut wanted: Vec<(usize, Money, Money)> = plan
        .candidates()
        .filter(|(i, _)| !plan.me.holds(*i))
        .filter_map(|(i, l)| {
            let mv = plan.marginal(i);
            (l.min_bid <= mv).then(|| (i, l.min_bid, mv - l.min_bid))
        })
        .collect();
    // cheapest first: the point is to find a license nobody else is contesting
    wanted.sort_by(|a, b| a.1.cmp(&b.1).then(b.2.cmp(&a.2)).then(a.0.cmp(&b.0)));
    let mut budget = max_licenses - engaged;
    for (i, amount, _) in wanted {
        if budget == 0 {
            break;
        }
        if amount <= plan.marginal_now(i) && plan.try_add(i, amount) {
            budget -= 1;
        }
    }
}

/// Largest enumeration of future bundle completions the exposure chaser does.
const EXPOSURE_ENUM_LIMIT: usize = 12;

fn exposure_chaser(plan: &mut Planner<'_, '_>, forecast: &BTreeMap<LicenseId, Money>) {
    let view = plan.view;
    let holdings = plan.me.holdings();
    // licenses that could still be bought later: not closed, not already ours
    let future: Vec<usize> = view
        .licenses
        .iter()
        .enumerate()
        .filter(|(i, l)| l.open && holdings >> i & 1 == 0)
        .map(|(i, _)| i)
        .collect();
    let price_of = |j: usize| -> Money {
        let l = &view.licenses[j];
        forecast
            .get(&l.id)
            .copied()
            .unwrap_or(if l.high_bid.is_some() { l.min_bid } else { l.reserve })
    };

    let mut wanted: Vec<(usize, Money, Money)> = Vec::new();
    for (i, l) in plan.candidates() {
        if plan.secure(i) {
            continue;
        }
        let base = holdings & !(1 << i);
        let here = plan.me.valuation.value(base);
        let others: Vec<usize> = future.iter().copied().filter(|&j| j != i).collect();
        let mut limit = plan.me.valuation.value(base | 1 << i) - here;
        if others.len() <= EXPOSURE_ENUM_LIMIT {
            for sub in 1u64..(1 << others.len()) {
                let mut mask = base | 1 << i;
                let mut cost = Money::ZERO;
                for (k, &j) in others.iter().enumerate() {
                    if sub >> k & 1 == 1 {
                        mask |= 1 << j;
                        cost += price_of(j);
                    }
                }
                limit = limit.max(plan.me.valuation.value(mask) - here - cost);
            }
        }
        if l.min_bid <= limit {
            wanted.push((i, l.min_bid, limit - l.min_bid));
        }
    }
    wanted.sort_by(|a, b| b.2.cmp(&a.2).then(a.0.cmp(&b.0)));
    for (i, amount, _) in wanted {
        plan.try_add(i, amount);
    }
}

fn cartel_member(plan: &mut Planner<'_, '_>, agreement: &CartelAgreement, memory: &AgentMemory, me: &BidderId) {
    let punishing: BTreeSet<&BidderId> = if memory.unknown_defection {
        agreement.members.iter().filter(|m| *m != me).collect()
    } else {
        memory.defectors.iter().filter(|d| *d != me).collect()
    };
    let mut wanted: Vec<(usize, Money)> = Vec::new();
    for (i, l) in plan.candidates() {
        if plan.secure(i) {
            continue;
        }
        let mv = plan.marginal(i);
        match agreement.designated_winner.get(&l.id) {
            Some(owner) if owner == me => {
                if l.min_bid <= mv {
                    wanted.push((i, l.min_bid));
                }
            }
            Some(owner) if punishing.contains(owner) => {
                let Punishment::RaiseOnDefector { markup_fraction } = agreement.punishment else {
                    continue;
                };
                let marked = l
                    .high_bid
                    .map(|h| h.scale_ceil(1.0 + markup_fraction))
                    .unwrap_or(l.min_bid)
                    .max(l.min_bid);
                if marked <= mv {
                    wanted.push((i, marked));
                } else if l.min_bid <= mv {
                    wanted.push((i, l.min_bid));
                }
            }
            _ => {}
        }
    }
    for (i, amount) in wanted {
        plan.try_add(i, amount);
    }
}

fn sealed_cartel(licenses: &[&License], me: &PrivateState<'_>, agreement: &CartelAgreement, id: &BidderId) -> Vec<BidIntent> {
    licenses
        .iter()
        .enumerate()
        .filter(|(_, l)| agreement.designated_winner.get(&l.id) == Some(id))
        .filter(|(i, l)| me.valuation.value(1 << i) >= l.reserve_price)
        .map(|(_, l)| BidIntent {
            license: l.id.clone(),
            amount: l.reserve_price,
        })
        .collect()
}

/// Agents for `bidders` in id order, taking policies from `assignments` and
/// falling back to [`StrategyPolicy::StraightforwardAscending`].
pub fn build_agents<'a>(
    bidders: impl IntoIterator<Item = &'a BidderId>,
    assignments: &BTreeMap<BidderId, StrategyPolicy>,
) -> Vec<Agent> {
    let mut ids: Vec<&BidderId> = bidders.into_iter().collect();
    ids.sort();
    ids.into_iter()
        .map(|id| Agent::new(id.clone(), assignments.get(id).cloned().unwrap_or_default()))
        .collect()
}

/// Identity disclosure helper for engines.
pub(crate) fn disclose(disclosure: Disclosure, who: Option<&BidderId>) -> Option<BidderId> {
    match disclosure {
        Disclosure::BidsAndIdentities => who.cloned(),
        Disclosure::BidsOnly => None,
    }
}

#[cfg(test)]
mod tests;
