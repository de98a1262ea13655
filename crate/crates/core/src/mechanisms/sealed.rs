use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::tie::resolve_tie;
use super::MechanismConfig;
use crate::error::{Error, Result};
use crate::model::{
    credit_adjusted_payment, AuctionOutcome, Bid, BidderId, LicenseId, LicenseRound, MechanismKind, Money,
    RejectedBid, RoundRecord, TieBreak,
};
use crate::scenarios::Scenario;

/// One sealed bid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedBid {
    pub bidder_id: BidderId,
    pub license_id: LicenseId,
    pub amount: Money,
}

impl SealedBid {
    pub fn new(bidder: &str, license: &str, amount: Money) -> Self {
        SealedBid {
            bidder_id: bidder.into(),
            license_id: license.into(),
            amount,
        }
    }
}

/// First-price sealed bid: each license to its highest bid at that bid.
pub fn run_fpsb(scenario: &Scenario, bids: &[SealedBid]) -> Result<AuctionOutcome> {
    let config = MechanismConfig {
        kind: MechanismKind::Fpsb,
        ..scenario.mechanism.clone()
    };
    run_sealed(scenario, &config, bids)
}

/// Second-price sealed bid: the winner pays the larger of the reserve and the
/// highest competing bid.
pub fn run_vickrey(scenario: &Scenario, bids: &[SealedBid]) -> Result<AuctionOutcome> {
    let config = MechanismConfig {
        kind: MechanismKind::Vickrey,
        ..scenario.mechanism.clone()
    };
    run_sealed(scenario, &config, bids)
}

pub(crate) fn run_sealed(scenario: &Scenario, config: &MechanismConfig, bids: &[SealedBid]) -> Result<AuctionOutcome> {
    let second_price = match config.kind {
        MechanismKind::Fpsb => false,
        MechanismKind::Vickrey => true,
        other => return Err(Error::Internal(format!("{} is not a sealed format", other.as_str()))),
    };
    let seed = config.tie_break_seed.unwrap_or(scenario.seed);

    let mut seen = BTreeSet::new();
    for b in bids {
        if scenario.bidder(&b.bidder_id).is_none() {
            return Err(Error::Input(format!("sealed bid from unknown bidder {}", b.bidder_id)));
        }
        if scenario.license(&b.license_id).is_none() {
            return Err(Error::Input(format!("sealed bid on unknown license {}", b.license_id)));
        }
        if b.amount.is_negative() {
            return Err(Error::Input(format!("negative sealed bid from {}", b.bidder_id)));
        }
        if !seen.insert((&b.bidder_id, &b.license_id)) {
            return Err(Error::Input(format!(
                "duplicate sealed bid from {} on {}",
                b.bidder_id, b.license_id
            )));
        }
    }

    // valid bids per license, highest first
    let mut book: BTreeMap<&LicenseId, Vec<&SealedBid>> = BTreeMap::new();
    for l in &scenario.licenses {
        book.insert(&l.id, Vec::new());
    }
    for b in bids {
        let reserve = scenario.license(&b.license_id).expect("checked").reserve_price;
        if b.amount >= reserve {
            book.get_mut(&b.license_id).expect("checked").push(b);
        }
    }
    for list in book.values_mut() {
        list.sort_by(|a, b| b.amount.cmp(&a.amount).then_with(|| a.bidder_id.cmp(&b.bidder_id)));
    }
    let mut order: Vec<&LicenseId> = book.keys().copied().collect();
    order.sort_by(|a, b| {
        let top = |l: &LicenseId| book[l].first().map(|b| b.amount);
        top(b).cmp(&top(a)).then_with(|| a.cmp(b))
    });

    let mut spent: BTreeMap<&BidderId, Money> = BTreeMap::new();
    let mut bandwidth: BTreeMap<(&BidderId, &str), f64> = BTreeMap::new();
    let mut allocation = BTreeMap::new();
    let mut gross_prices = BTreeMap::new();
    let mut tie_breaks = Vec::new();
    let mut rejected = Vec::new();
    let mut records = BTreeMap::new();

    for lic_id in order {
        let license = scenario.license(lic_id).expect("checked");
        let list = &book[lic_id];
        let mut excluded: BTreeSet<&BidderId> = BTreeSet::new();
        let mut attempt = 0u64;
        let award = loop {
            let remaining: Vec<&&SealedBid> = list.iter().filter(|b| !excluded.contains(&b.bidder_id)).collect();
            let Some(top) = remaining.first().map(|b| b.amount) else {
                break None;
            };
            attempt += 1;
            let tied: Vec<BidderId> = remaining
                .iter()
                .filter(|b| b.amount == top)
                .map(|b| b.bidder_id.clone())
                .collect();
            let winner = if tied.len() == 1 {
                tied[0].clone()
            } else {
                let w = resolve_tie(&tied, lic_id, attempt, seed)?;
                tie_breaks.push(TieBreak {
                    round_index: attempt,
                    license_id: lic_id.clone(),
                    amount: top,
                    candidates: tied.clone(),
                    winner: w.clone(),
                });
                w
            };
            let price = if second_price {
                remaining
                    .iter()
                    .filter(|b| b.bidder_id != winner)
                    .map(|b| b.amount)
                    .next()
                    .unwrap_or(license.reserve_price)
                    .max(license.reserve_price)
            } else {
                top
            };
            let bidder = scenario.bidder(&winner).expect("checked");
            let used = spent.get(&bidder.id).copied().unwrap_or_default();
            let bw = bandwidth
                .get(&(&bidder.id, license.region_id.as_str()))
                .copied()
                .unwrap_or(0.0);
            let reason = if bidder.budget.is_some_and(|budget| used + price > budget) {
                Some("forfeit: exceeds remaining budget")
            } else if bidder
                .bandwidth_cap_mhz
                .is_some_and(|cap| bw + license.bandwidth_mhz > cap + 1e-9)
            {
                Some("forfeit: exceeds bandwidth cap")
            } else {
                None
            };
            match reason {
                Some(reason) => {
                    rejected.push(RejectedBid {
                        round_index: 1,
                        cycle_index: 0,
                        bidder_id: winner.clone(),
                        license_id: lic_id.clone(),
                        amount: top,
                        reason: reason.into(),
                    });
                    excluded.insert(&bidder.id);
                }
                None => {
                    *spent.entry(&bidder.id).or_default() += price;
                    *bandwidth.entry((&bidder.id, license.region_id.as_str())).or_default() += license.bandwidth_mhz;
                    break Some((winner, price, top));
                }
            }
        };
        records.insert(
            lic_id.clone(),
            LicenseRound {
                standing_high_bid: list.first().map(|b| b.amount),
                standing_high_bidder: award.as_ref().map(|a| a.0.clone()),
                tied: list.len() > 1 && list[0].amount == list[1].amount,
                new_bid_count: list.len() as u32,
                open: false,
                saturation_factor: None,
                runner_up_bid: list.get(1).map(|b| b.amount),
            },
        );
        allocation.insert(lic_id.clone(), award.as_ref().map(|a| a.0.clone()));
        gross_prices.insert(lic_id.clone(), award.map(|a| a.1));
    }

    let mut gross_by_bidder: BTreeMap<&BidderId, Money> = BTreeMap::new();
    for (l, w) in &allocation {
        if let (Some(w), Some(p)) = (w, gross_prices[l]) {
            *gross_by_bidder.entry(w).or_default() += p;
        }
    }
    let payments = scenario
        .bidders
        .iter()
        .map(|b| {
            let gross = gross_by_bidder.get(&b.id).copied().unwrap_or_default();
            (b.id.clone(), credit_adjusted_payment(gross, b))
        })
        .collect();
    let mut log: Vec<Bid> = bids
        .iter()
        .map(|b| Bid {
            bidder_id: b.bidder_id.clone(),
            license_id: b.license_id.clone(),
            amount: b.amount,
            round_index: 1,
            cycle_index: 0,
        })
        .collect();
    log.sort_by(|a, b| a.license_id.cmp(&b.license_id).then_with(|| a.bidder_id.cmp(&b.bidder_id)));
    let rounds_open = allocation.keys().map(|l| (l.clone(), 1)).collect();

    Ok(AuctionOutcome {
        mechanism: config.kind,
        seed,
        allocation,
        payments,
        gross_prices,
        rounds_elapsed: 1,
        raise_rounds: 0,
        rounds_open,
        history: vec![RoundRecord {
            round_index: 1,
            cycle_index: 0,
            focus_license: None,
            identities_hidden: false,
            licenses: records,
            bidders: BTreeMap::new(),
        }],
        bids: log,
        tie_breaks,
        rejected_bids: rejected,
        closings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Bidder, License};

    fn one_license(reserve: i64, bidders: &[&str]) -> Scenario {
        let mut s = Scenario::new("t");
        s.licenses.push(License::new("L", 10.0, 1000, "r").with_reserve(Money::from_major(reserve)));
        for b in bidders {
            s.bidders.push(Bidder::new(b));
        }
        s
    }

    fn bids(list: &[(&str, i64)]) -> Vec<SealedBid> {
        list.iter().map(|&(b, v)| SealedBid::new(b, "L", Money::from_major(v))).collect()
    }

    #[test]
    fn fpsb_highest_pays_own_bid() {
        let s = one_license(0, &["A", "B", "C"]);
        let out = run_fpsb(&s, &bids(&[("A", 10), ("B", 15), ("C", 20)])).unwrap();
        assert_eq!(out.winner("L").unwrap().as_str(), "C");
        assert_eq!(out.price("L"), Some(Money::from_major(20)));
        assert_eq!(out.payment("C"), Money::from_major(20));
    }

    #[test]
    fn vickrey_pays_second_bid() {
        let s = one_license(0, &["A", "B", "C"]);
        let out = run_vickrey(&s, &bids(&[("A", 10), ("B", 15), ("C", 20)])).unwrap();
        assert_eq!(out.winner("L").unwrap().as_str(), "C");
        assert_eq!(out.price("L"), Some(Money::from_major(15)));
    }

    #[test]
    fn lone_bid_pays_reserve_under_vickrey() {
        let s = one_license(100, &["A"]);
        let out = run_vickrey(&s, &bids(&[("A", 500)])).unwrap();
        assert_eq!(out.price("L"), Some(Money::from_major(100)));
    }

    #[test]
    fn bids_below_reserve_leave_license_unsold() {
        let s = one_license(100, &["A", "B"]);
        let out = run_fpsb(&s, &bids(&[("A", 99), ("B", 50)])).unwrap();
        assert_eq!(out.winner("L"), None);
        assert_eq!(out.price("L"), None);
        assert_eq!(out.revenue(), Money::ZERO);
    }

    #[test]
    fn tie_is_seeded_and_reproducible() {
        let mut s = one_license(0, &["A", "B"]);
        let b = bids(&[("A", 40), ("B", 40)]);
        for seed in 0..20 {
            s.seed = seed;
            let first = run_vickrey(&s, &b).unwrap();
            let again = run_vickrey(&s, &b).unwrap();
            assert_eq!(first.winner("L"), again.winner("L"));
            assert_eq!(first.price("L"), Some(Money::from_major(40)));
            assert_eq!(first.tie_breaks.len(), 1);
        }
    }

    #[test]
    fn duplicate_bid_is_input_error() {
        let s = one_license(0, &["A"]);
        let err = run_fpsb(&s, &bids(&[("A", 1), ("A", 2)])).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn over_budget_winner_forfeits_to_next_bid() {
        let mut s = one_license(0, &["A", "B"]);
        s.licenses.push(License::new("M", 10.0, 1000, "r"));
        s.bidders[0] = Bidder::new("A").with_budget(Money::from_major(50));
        let mut b = bids(&[("A", 40), ("B", 30)]);
        b.push(SealedBid::new("A", "M", Money::from_major(45)));
        b.push(SealedBid::new("B", "M", Money::from_major(10)));
        let out = run_fpsb(&s, &b).unwrap();
        // M (45) resolves first and uses A's budget; A forfeits L to B
        assert_eq!(out.winner("M").unwrap().as_str(), "A");
        assert_eq!(out.winner("L").unwrap().as_str(), "B");
        assert_eq!(out.price("L"), Some(Money::from_major(30)));
        assert_eq!(out.rejected_bids.len(), 1);
    }

    #[test]
    fn credit_discounts_payment() {
        let mut s = one_license(0, &["A"]);
        s.bidders[0] = Bidder::new("A").with_credit(0.10);
        let out = run_fpsb(&s, &bids(&[("A", 100)])).unwrap();
        assert_eq!(out.payment("A"), Money::from_major(90));
        assert_eq!(out.gross_prices["L"], Some(Money::from_major(100)));
    }
}
