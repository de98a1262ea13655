//! State shared by the three ascending engines: standing bids, holdings,
//! eligibility, the public bid log and the round history.

use std::collections::BTreeMap;

use super::increment::min_next_bid;
use super::tie::resolve_tie;
use super::{Disclosure, MechanismConfig};
use crate::error::{Error, Result};
use crate::model::{
    credit_adjusted_payment, AuctionOutcome, Bid, Bidder, BidderId, BidderRound, ClosingEvent, CompiledValuation,
    License, LicenseIndex, LicenseRound, MechanismKind, Money, RejectedBid, RoundRecord, TieBreak, ValuationProfile,
};
use crate::scenarios::Scenario;
use crate::strategies::{disclose, Agent, BidIntent, LicenseView, PrivateState, PublicView};

/// Hard cap on rounds (HAMR: cycles) per run.
pub const ROUND_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, Copy)]
struct Standing {
    amount: Money,
    holder: usize,
    tied: bool,
}

#[derive(Debug, Clone, Default)]
struct LicenseState {
    standing: Option<Standing>,
    closed: bool,
    sf: u32,
    prev_new_bids: u32,
    new_bids: u32,
    rounds_open: u64,
}

#[derive(Debug, Clone)]
struct BidderState {
    held: u64,
    won: u64,
    committed: Money,
    eligibility: f64,
    /// Licenses bid on during the current activity period.
    period_bids: u64,
    /// Standing high bids held when the current period opened.
    period_held: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct StepStats {
    pub any_bid: bool,
    pub any_raise: bool,
}

pub(crate) struct Engine<'s> {
    pub kind: MechanismKind,
    pub config: &'s MechanismConfig,
    pub seed: u64,
    pub index: LicenseIndex,
    pub licenses: Vec<&'s License>,
    bidders: Vec<&'s Bidder>,
    profiles: Vec<ValuationProfile>,
    valuations: Vec<CompiledValuation>,
    agent_of: Vec<usize>,
    lic: Vec<LicenseState>,
    bst: Vec<BidderState>,
    activity_rule: bool,
    log: Vec<Bid>,
    log_license: Vec<usize>,
    history: Vec<RoundRecord>,
    tie_breaks: Vec<TieBreak>,
    rejected: Vec<RejectedBid>,
    closings: Vec<ClosingEvent>,
    pub rounds: u64,
    raise_rounds: u64,
}

impl<'s> Engine<'s> {
    pub fn new(
        kind: MechanismKind,
        scenario: &'s Scenario,
        config: &'s MechanismConfig,
        agents: &[Agent],
        activity_rule: bool,
    ) -> Result<Self> {
        let index = scenario.license_index();
        if index.len() > LicenseIndex::MAX_LICENSES {
            return Err(Error::Input(format!(
                "at most {} licenses per scenario",
                LicenseIndex::MAX_LICENSES
            )));
        }
        let licenses: Vec<&License> = index
            .ids()
            .iter()
            .map(|id| scenario.licenses.iter().find(|l| &l.id == id).expect("indexed"))
            .collect();
        let mut bidders: Vec<&Bidder> = scenario.bidders.iter().collect();
        bidders.sort_by(|a, b| a.id.cmp(&b.id));

        let mut profiles = Vec::with_capacity(bidders.len());
        let mut valuations = Vec::with_capacity(bidders.len());
        let mut agent_of = Vec::with_capacity(bidders.len());
        let mut bst = Vec::with_capacity(bidders.len());
        for b in &bidders {
            let profile = scenario
                .profile(&b.id)
                .cloned()
                .unwrap_or_else(|| ValuationProfile::new(b.id.as_str()));
            let compiled = CompiledValuation::compile(&profile, &index)?;
            let eligibility = initial_eligibility(&profile, &licenses);
            profiles.push(profile);
            valuations.push(compiled);
            let pos = agents
                .iter()
                .position(|a| a.bidder_id == b.id)
                .ok_or_else(|| Error::Input(format!("no agent for bidder {}", b.id)))?;
            agent_of.push(pos);
            bst.push(BidderState {
                held: 0,
                won: 0,
                committed: Money::ZERO,
                eligibility,
                period_bids: 0,
                period_held: 0,
            });
        }
        if let Some(stray) = agents.iter().find(|a| !bidders.iter().any(|b| b.id == a.bidder_id)) {
            return Err(Error::Input(format!("agent for unknown bidder {}", stray.bidder_id)));
        }
        let n = licenses.len();
        Ok(Engine {
            kind,
            config,
            seed: config.tie_break_seed.unwrap_or(scenario.seed),
            index,
            licenses,
            bidders,
            profiles,
            valuations,
            agent_of,
            lic: vec![LicenseState::default(); n],
            bst,
            activity_rule,
            log: Vec::new(),
            log_license: Vec::new(),
            history: Vec::new(),
            tie_breaks: Vec::new(),
            rejected: Vec::new(),
            closings: Vec::new(),
            rounds: 0,
            raise_rounds: 0,
        })
    }

    pub fn license_count(&self) -> usize {
        self.licenses.len()
    }

    pub fn is_open(&self, i: usize) -> bool {
        !self.lic[i].closed
    }

    pub fn open_mask(&self) -> u64 {
        (0..self.licenses.len())
            .filter(|&i| self.is_open(i))
            .fold(0, |m, i| m | 1 << i)
    }

    pub fn bump_saturation(&mut self, i: usize) -> u32 {
        self.lic[i].sf += 1;
        self.lic[i].sf
    }

    pub fn next_round(&mut self) -> Result<u64> {
        if self.rounds >= ROUND_LIMIT {
            return Err(Error::RoundLimit(ROUND_LIMIT));
        }
        self.rounds += 1;
        Ok(self.rounds)
    }

    fn min_bid(&self, i: usize) -> Money {
        let st = &self.lic[i];
        min_next_bid(
            self.licenses[i].reserve_price,
            st.standing.map(|s| s.amount),
            st.prev_new_bids,
            &self.config.increment_schedule,
        )
    }

    fn view(&self, biddable: u64, round: u64, cycle: u64) -> PublicView<'_> {
        let hamr = self.kind == MechanismKind::Hamr;
        let licenses = self
            .licenses
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let st = &self.lic[i];
                LicenseView {
                    id: l.id.clone(),
                    reserve: l.reserve_price,
                    activity_weight: l.activity_weight,
                    bandwidth_mhz: l.bandwidth_mhz,
                    region_id: l.region_id.clone(),
                    open: !st.closed,
                    biddable: !st.closed && biddable >> i & 1 == 1,
                    high_bid: st.standing.map(|s| s.amount),
                    tied: st.standing.is_some_and(|s| s.tied),
                    high_bidder: disclose(
                        self.config.disclosure,
                        st.standing.map(|s| &self.bidders[s.holder].id),
                    ),
                    min_bid: self.min_bid(i),
                    saturation: hamr.then_some(st.sf),
                    tsf: hamr.then(|| self.config.tsf_for(&l.id)),
                    closed_price: if st.closed { st.standing.map(|s| s.amount) } else { None },
                }
            })
            .collect();
        PublicView {
            mechanism: self.kind,
            round_index: round,
            cycle_index: cycle,
            disclosure: self.config.disclosure,
            licenses,
            log: &self.log,
            log_license_index: &self.log_license,
        }
    }

    fn private(&self, k: usize) -> PrivateState<'_> {
        let b = &self.bst[k];
        PrivateState {
            bidder: self.bidders[k],
            profile: &self.profiles[k],
            valuation: &self.valuations[k],
            held: b.held,
            won: b.won,
            committed: b.committed,
            eligibility: self.activity_rule.then_some(b.eligibility),
            active_mask: (b.held | b.period_held | b.period_bids) & self.open_mask(),
        }
    }

    /// One simultaneous bidding round over the licenses in `biddable`.
    /// `tie_round` keys any tie-break draw.
    pub fn step(&mut self, agents: &mut [Agent], biddable: u64, round: u64, cycle: u64, tie_round: u64) -> Result<StepStats> {
        let intents: Vec<(usize, Vec<BidIntent>)> = {
            let view = self.view(biddable, round, cycle);
            (0..self.bidders.len())
                .map(|k| {
                    let me = self.private(k);
                    (k, agents[self.agent_of[k]].decide(&view, &me))
                })
                .collect()
        };

        // validate each bidder's intents against its own constraints
        let mut accepted: Vec<Vec<(usize, Money)>> = vec![Vec::new(); self.licenses.len()];
        for (k, list) in intents {
            let mut pending: u64 = 0;
            let mut pending_extra = Money::ZERO;
            for intent in list {
                match self.check(k, &intent, biddable, pending, pending_extra) {
                    Ok((i, extra)) => {
                        pending |= 1 << i;
                        pending_extra += extra;
                        accepted[i].push((k, intent.amount));
                        self.log.push(Bid {
                            bidder_id: self.bidders[k].id.clone(),
                            license_id: intent.license.clone(),
                            amount: intent.amount,
                            round_index: round,
                            cycle_index: cycle,
                        });
                        self.log_license.push(i);
                    }
                    Err(reason) => self.rejected.push(RejectedBid {
                        round_index: round,
                        cycle_index: cycle,
                        bidder_id: self.bidders[k].id.clone(),
                        license_id: intent.license,
                        amount: intent.amount,
                        reason,
                    }),
                }
            }
            self.bst[k].period_bids |= pending;
        }

        let mut stats = StepStats::default();
        for (i, bids) in accepted.into_iter().enumerate() {
            if biddable >> i & 1 == 1 && !self.lic[i].closed {
                self.lic[i].new_bids = bids.len() as u32;
            }
            if bids.is_empty() {
                continue;
            }
            stats.any_bid = true;
            if self.lic[i].standing.is_some() {
                stats.any_raise = true;
            }
            self.resolve(i, bids, tie_round)?;
        }
        if stats.any_raise {
            self.raise_rounds += 1;
        }
        for i in 0..self.licenses.len() {
            if biddable >> i & 1 == 1 && !self.lic[i].closed {
                self.lic[i].prev_new_bids = self.lic[i].new_bids;
                self.lic[i].rounds_open += 1;
            }
        }
        Ok(stats)
    }

    fn check(&self, k: usize, intent: &BidIntent, biddable: u64, pending: u64, pending_extra: Money) -> std::result::Result<(usize, Money), String> {
        let i = self.index.position(&intent.license).ok_or("unknown license")?;
        if self.lic[i].closed {
            return Err("license closed".into());
        }
        if biddable >> i & 1 == 0 {
            return Err("license not open for bidding this round".into());
        }
        if pending >> i & 1 == 1 {
            return Err("duplicate bid in round".into());
        }
        let min = self.min_bid(i);
        if intent.amount < min {
            return Err(format!("below minimum acceptable bid {min}"));
        }
        let b = &self.bst[k];
        let bidder = self.bidders[k];
        let extra = match self.lic[i].standing {
            Some(s) if b.held >> i & 1 == 1 => intent.amount - s.amount,
            _ => intent.amount,
        };
        if let Some(budget) = bidder.budget {
            if b.committed + pending_extra + extra > budget {
                return Err("exceeds remaining budget".into());
            }
        }
        if self.activity_rule {
            let mask = (b.held | b.period_bids | pending | 1 << i) & self.open_mask();
            if self.weight(mask) > b.eligibility + 1e-9 {
                return Err(format!("exceeds eligibility {:.4}", b.eligibility));
            }
        }
        if let Some(cap) = bidder.bandwidth_cap_mhz {
            let mask = b.held | b.won | pending | 1 << i;
            let region = &self.licenses[i].region_id;
            let used: f64 = self
                .licenses
                .iter()
                .enumerate()
                .filter(|(j, l)| mask >> j & 1 == 1 && &l.region_id == region)
                .map(|(_, l)| l.bandwidth_mhz)
                .sum();
            if used > cap + 1e-9 {
                return Err(format!("exceeds bandwidth cap {cap} MHz in region {region}"));
            }
        }
        Ok((i, extra))
    }

    fn resolve(&mut self, i: usize, bids: Vec<(usize, Money)>, tie_round: u64) -> Result<()> {
        let top = bids.iter().map(|b| b.1).max().expect("non-empty");
        let mut at_top: Vec<usize> = bids.iter().filter(|b| b.1 == top).map(|b| b.0).collect();
        at_top.sort_unstable();
        at_top.dedup();
        let holder = if at_top.len() == 1 {
            at_top[0]
        } else {
            let ids: Vec<BidderId> = at_top.iter().map(|&k| self.bidders[k].id.clone()).collect();
            let license = &self.licenses[i].id;
            let winner = resolve_tie(&ids, license, tie_round, self.seed)?;
            self.tie_breaks.push(TieBreak {
                round_index: tie_round,
                license_id: license.clone(),
                amount: top,
                candidates: ids,
                winner: winner.clone(),
            });
            at_top
                .iter()
                .copied()
                .find(|&k| self.bidders[k].id == winner)
                .expect("winner among candidates")
        };
        if let Some(prev) = self.lic[i].standing {
            let b = &mut self.bst[prev.holder];
            b.held &= !(1 << i);
            b.committed -= prev.amount;
        }
        let b = &mut self.bst[holder];
        b.held |= 1 << i;
        b.committed += top;
        self.lic[i].standing = Some(Standing {
            amount: top,
            holder,
            tied: at_top.len() > 1,
        });
        Ok(())
    }

    fn weight(&self, mask: u64) -> f64 {
        self.licenses
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, l)| l.activity_weight)
            .sum()
    }

    /// End-of-period activity rule. A bidder is active on what it held when
    /// the period opened and on what it bid for during it. Closed licenses
    /// count in neither the activity nor the eligibility side.
    pub fn apply_activity(&mut self, period: u64) -> BTreeMap<BidderId, BidderRound> {
        let mut out = BTreeMap::new();
        let open = self.open_mask();
        let fraction = self.config.required_fraction(period);
        if !self.activity_rule || open == 0 {
            for b in &mut self.bst {
                b.period_bids = 0;
                b.period_held = b.held;
            }
            return out;
        }
        let open_weight = self.weight(open);
        for k in 0..self.bidders.len() {
            let active = self.weight((self.bst[k].held | self.bst[k].period_held | self.bst[k].period_bids) & open);
            let b = &mut self.bst[k];
            b.eligibility = b.eligibility.min(open_weight);
            let satisfied = match fraction {
                Some(f) if active + 1e-9 < f * b.eligibility => {
                    b.eligibility = active / f;
                    false
                }
                _ => true,
            };
            b.period_bids = 0;
            b.period_held = b.held;
            out.insert(
                self.bidders[k].id.clone(),
                BidderRound {
                    eligibility_units: b.eligibility,
                    active_units: active,
                    activity_satisfied: satisfied,
                },
            );
        }
        out
    }

    /// Award license `i` to its standing high bidder (or leave it unsold).
    pub fn close(&mut self, i: usize, position: u32, cycle: u64) {
        let st = &mut self.lic[i];
        st.closed = true;
        let standing = st.standing;
        if let Some(s) = standing {
            let b = &mut self.bst[s.holder];
            b.held &= !(1 << i);
            b.won |= 1 << i;
        }
        self.closings.push(ClosingEvent {
            license_id: self.licenses[i].id.clone(),
            round_index: self.rounds,
            cycle_index: cycle,
            position,
            winner: standing.map(|s| self.bidders[s.holder].id.clone()),
            price: standing.map(|s| s.amount),
        });
    }

    pub fn snapshot(&mut self, round: u64, cycle: u64, focus: Option<usize>, bidders: BTreeMap<BidderId, BidderRound>) {
        let hamr = self.kind == MechanismKind::Hamr;
        let hidden = self.config.disclosure == Disclosure::BidsOnly;
        let licenses = self
            .licenses
            .iter()
            .enumerate()
            .map(|(i, l)| {
                let st = &self.lic[i];
                (
                    l.id.clone(),
                    LicenseRound {
                        standing_high_bid: st.standing.map(|s| s.amount),
                        standing_high_bidder: if hidden {
                            None
                        } else {
                            st.standing.map(|s| self.bidders[s.holder].id.clone())
                        },
                        tied: st.standing.is_some_and(|s| s.tied),
                        new_bid_count: st.new_bids,
                        open: !st.closed,
                        saturation_factor: hamr.then_some(st.sf),
                        runner_up_bid: None,
                    },
                )
            })
            .collect();
        for st in &mut self.lic {
            st.new_bids = 0;
        }
        self.history.push(RoundRecord {
            round_index: round,
            cycle_index: cycle,
            focus_license: focus.map(|i| self.licenses[i].id.clone()),
            identities_hidden: hidden,
            licenses,
            bidders,
        });
    }

    pub fn finish(self) -> AuctionOutcome {
        let mut allocation = BTreeMap::new();
        let mut gross_prices = BTreeMap::new();
        let mut rounds_open = BTreeMap::new();
        let mut gross_by_bidder = vec![Money::ZERO; self.bidders.len()];
        for (i, l) in self.licenses.iter().enumerate() {
            let st = &self.lic[i];
            allocation.insert(l.id.clone(), st.standing.map(|s| self.bidders[s.holder].id.clone()));
            gross_prices.insert(l.id.clone(), st.standing.map(|s| s.amount));
            rounds_open.insert(l.id.clone(), st.rounds_open);
            if let Some(s) = st.standing {
                gross_by_bidder[s.holder] += s.amount;
            }
        }
        let payments = self
            .bidders
            .iter()
            .zip(gross_by_bidder)
            .map(|(b, gross)| (b.id.clone(), credit_adjusted_payment(gross, b)))
            .collect();
        AuctionOutcome {
            mechanism: self.kind,
            seed: self.seed,
            allocation,
            payments,
            gross_prices,
            rounds_elapsed: self.rounds,
            raise_rounds: self.raise_rounds,
            rounds_open,
            history: self.history,
            bids: self.log,
            tie_breaks: self.tie_breaks,
            rejected_bids: self.rejected,
            closings: self.closings,
        }
    }
}

/// Units a bidder starts with: the activity weight of every license it could
/// value positively on its own or as part of a complement.
fn initial_eligibility(profile: &ValuationProfile, licenses: &[&License]) -> f64 {
    licenses
        .iter()
        .filter(|l| {
            profile.base_value(&l.id) > Money::ZERO
                || profile
                    .bundle_adjustments
                    .iter()
                    .any(|a| a.amount > Money::ZERO && a.licenses.contains(&l.id))
        })
        .map(|l| l.activity_weight)
        .sum()
}
