use crate::mechanisms::Disclosure;
use crate::model::{Bid, Bidder, BidderId, CompiledValuation, LicenseId, MechanismKind, Money, ValuationProfile};

/// Public state of one license as seen by every bidder.
#[derive(Debug, Clone)]
pub struct LicenseView {
    pub id: LicenseId,
    pub reserve: Money,
    pub activity_weight: f64,
    pub bandwidth_mhz: f64,
    pub region_id: String,
    pub open: bool,
    /// Accepting bids right now (SEQ_AMR: the current license; HAMR: the
    /// visited license; SAMR: every open license).
    pub biddable: bool,
    pub high_bid: Option<Money>,
    pub tied: bool,
    /// Only populated under `BIDS_AND_IDENTITIES`.
    pub high_bidder: Option<BidderId>,
    pub min_bid: Money,
    pub saturation: Option<u32>,
    pub tsf: Option<u32>,
    /// Clearing price once the license has closed and sold.
    pub closed_price: Option<Money>,
}

/// A bid from the public log, with the bidder masked according to disclosure.
#[derive(Debug, Clone)]
pub struct ObservedBid<'a> {
    pub license: &'a LicenseId,
    pub license_index: usize,
    pub amount: Money,
    pub bidder: Option<&'a BidderId>,
    pub mine: bool,
    pub round_index: u64,
}

/// Everything a bidder may condition on besides its private state. Contains
/// no valuation or budget of any other bidder.
#[derive(Debug, Clone)]
pub struct PublicView<'a> {
    pub mechanism: MechanismKind,
    pub round_index: u64,
    pub cycle_index: u64,
    pub disclosure: Disclosure,
    /// Indexed like the scenario's sorted license ids.
    pub licenses: Vec<LicenseView>,
    pub(crate) log: &'a [Bid],
    pub(crate) log_license_index: &'a [usize],
}

impl<'a> PublicView<'a> {
    pub fn position(&self, id: &LicenseId) -> Option<usize> {
        self.licenses.iter().position(|l| &l.id == id)
    }

    pub fn log_len(&self) -> usize {
        self.log.len()
    }

    /// Accepted bids from `from` onward, as `viewer` is allowed to see them.
    pub fn observed_bids(&self, from: usize, viewer: &'a BidderId) -> impl Iterator<Item = ObservedBid<'a>> + '_ {
        let hidden = self.disclosure == Disclosure::BidsOnly;
        let log = self.log;
        let idx = self.log_license_index;
        (from.min(log.len())..log.len()).map(move |i| {
            let bid = &log[i];
            let mine = &bid.bidder_id == viewer;
            ObservedBid {
                license: &bid.license_id,
                license_index: idx[i],
                amount: bid.amount,
                bidder: if hidden && !mine { None } else { Some(&bid.bidder_id) },
                mine,
                round_index: bid.round_index,
            }
        })
    }
}

/// The deciding bidder's own state.
#[derive(Debug, Clone)]
pub struct PrivateState<'a> {
    pub bidder: &'a Bidder,
    pub profile: &'a ValuationProfile,
    pub valuation: &'a CompiledValuation,
    /// Open licenses where this bidder is the (possibly tie-drawn) standing high bidder.
    pub held: u64,
    /// Closed licenses awarded to this bidder.
    pub won: u64,
    /// Gross money tied up in held standing bids and won licenses.
    pub committed: Money,
    /// `None` when the mechanism has no activity rule.
    pub eligibility: Option<f64>,
    /// Licenses already counted as active this round / cycle (held or bid on).
    pub active_mask: u64,
}

impl PrivateState<'_> {
    pub fn holds(&self, license: usize) -> bool {
        self.held >> license & 1 == 1
    }

    pub fn holdings(&self) -> u64 {
        self.held | self.won
    }

    pub fn remaining_budget(&self) -> Option<Money> {
        self.bidder.budget.map(|b| b - self.committed)
    }
}
