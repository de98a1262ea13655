use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{Bid, BidderId, LicenseId, MechanismKind, Money, ValuationProfile};

/// Per-license snapshot at the end of a round (or HAMR cycle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LicenseRound {
    pub standing_high_bid: Option<Money>,
    /// `None` when nobody holds the license or identities are not disclosed.
    pub standing_high_bidder: Option<BidderId>,
    /// More than one bidder sits at the standing high amount.
    #[serde(default)]
    pub tied: bool,
    pub new_bid_count: u32,
    pub open: bool,
    /// HAMR only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub saturation_factor: Option<u32>,
    /// Sealed mechanisms only: the second-highest sealed bid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runner_up_bid: Option<Money>,
}

/// Per-bidder activity bookkeeping (SAMR and HAMR).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BidderRound {
    pub eligibility_units: f64,
    pub active_units: f64,
    pub activity_satisfied: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: u64,
    #[serde(default)]
    pub cycle_index: u64,
    /// Sequential AMR: the license being auctioned in this round.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub focus_license: Option<LicenseId>,
    #[serde(default)]
    pub identities_hidden: bool,
    pub licenses: BTreeMap<LicenseId, LicenseRound>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bidders: BTreeMap<BidderId, BidderRound>,
}

/// A seeded uniform draw among bidders tied at the top of a license.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TieBreak {
    pub round_index: u64,
    pub license_id: LicenseId,
    pub amount: Money,
    pub candidates: Vec<BidderId>,
    pub winner: BidderId,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedBid {
    pub round_index: u64,
    #[serde(default)]
    pub cycle_index: u64,
    pub bidder_id: BidderId,
    pub license_id: LicenseId,
    pub amount: Money,
    pub reason: String,
}

/// A license leaving the auction. For HAMR `position` is the visit slot inside
/// the closing cycle; the other mechanisms use 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosingEvent {
    pub license_id: LicenseId,
    pub round_index: u64,
    pub cycle_index: u64,
    pub position: u32,
    pub winner: Option<BidderId>,
    pub price: Option<Money>,
}

/// Final result of one engine run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub mechanism: MechanismKind,
    pub seed: u64,
    pub allocation: BTreeMap<LicenseId, Option<BidderId>>,
    /// Credit-adjusted payment of every bidder (zero when nothing was won).
    pub payments: BTreeMap<BidderId, Money>,
    /// Gross clearing price of every license; `None` when unsold.
    pub gross_prices: BTreeMap<LicenseId, Option<Money>>,
    pub rounds_elapsed: u64,
    /// Rounds in which at least one bid raised an existing standing bid.
    pub raise_rounds: u64,
    /// Rounds (HAMR: cycles) each license was open for bidding.
    pub rounds_open: BTreeMap<LicenseId, u64>,
    pub history: Vec<RoundRecord>,
    pub bids: Vec<Bid>,
    pub tie_breaks: Vec<TieBreak>,
    pub rejected_bids: Vec<RejectedBid>,
    pub closings: Vec<ClosingEvent>,
}

impl AuctionOutcome {
    pub fn winner(&self, license: &str) -> Option<&BidderId> {
        self.allocation.get(license).and_then(|w| w.as_ref())
    }

    pub fn price(&self, license: &str) -> Option<Money> {
        self.gross_prices.get(license).copied().flatten()
    }

    pub fn payment(&self, bidder: &str) -> Money {
        self.payments.get(bidder).copied().unwrap_or_default()
    }

    pub fn won_bundle(&self, bidder: &BidderId) -> BTreeSet<LicenseId> {
        self.allocation
            .iter()
            .filter(|(_, w)| w.as_ref() == Some(bidder))
            .map(|(l, _)| l.clone())
            .collect()
    }

    /// Quasi-linear utility: value of the won bundle minus payment.
    pub fn utility(&self, profile: &ValuationProfile) -> Money {
        profile.value_of(&self.won_bundle(&profile.bidder_id)) - self.payment(profile.bidder_id.as_str())
    }

    pub fn revenue(&self) -> Money {
        self.payments.values().sum()
    }

    pub fn unsold_count(&self) -> usize {
        self.allocation.values().filter(|w| w.is_none()).count()
    }
}
