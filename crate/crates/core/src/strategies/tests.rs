use proptest::prelude::*;

use super::*;
use crate::model::{Bid, Bidder, CompiledValuation, LicenseIndex, MechanismKind, ValuationProfile};

fn rs(x: i64) -> Money {
    Money::from_major(x)
}

fn license_view(id: &str, high: Option<i64>, min_bid: i64) -> LicenseView {
    LicenseView {
        id: id.into(),
        reserve: rs(10),
        activity_weight: 1.0,
        bandwidth_mhz: 10.0,
        region_id: "r".into(),
        open: true,
        biddable: true,
        high_bid: high.map(rs),
        tied: false,
        high_bidder: None,
        min_bid: rs(min_bid),
        saturation: None,
        tsf: None,
        closed_price: None,
    }
}

fn view<'a>(licenses: Vec<LicenseView>, log: &'a [Bid], idx: &'a [usize]) -> PublicView<'a> {
    PublicView {
        mechanism: MechanismKind::Samr,
        round_index: 2,
        cycle_index: 0,
        disclosure: Disclosure::BidsAndIdentities,
        licenses,
        log,
        log_license_index: idx,
    }
}

struct Me {
    bidder: Bidder,
    profile: ValuationProfile,
    valuation: CompiledValuation,
}

impl Me {
    fn new(bidder: Bidder, profile: ValuationProfile, ids: &[&str]) -> Self {
        let licenses: Vec<License> = ids.iter().map(|id| License::new(id, 10.0, 1, "r")).collect();
        let valuation = CompiledValuation::compile(&profile, &LicenseIndex::new(&licenses)).unwrap();
        Me { bidder, profile, valuation }
    }

    fn state(&self, held: u64) -> PrivateState<'_> {
        PrivateState {
            bidder: &self.bidder,
            profile: &self.profile,
            valuation: &self.valuation,
            held,
            won: 0,
            committed: Money::ZERO,
            eligibility: None,
            active_mask: held,
        }
    }
}

#[test]
fn truthful_sealed_bids_value() {
    let me = Me::new(Bidder::new("A"), ValuationProfile::new("A").with_value("L", rs(20)), &["L"]);
    let lic = License::new("L", 10.0, 1, "r");
    let agent = Agent::new("A".into(), StrategyPolicy::TruthfulSealed);
    let bids = agent.sealed_bids(&[&lic], &me.state(0));
    assert_eq!(bids, vec![BidIntent { license: "L".into(), amount: rs(20) }]);
}

#[test]
fn shaded_sealed_scales_value() {
    let me = Me::new(Bidder::new("A"), ValuationProfile::new("A").with_value("L", rs(20)), &["L"]);
    let lic = License::new("L", 10.0, 1, "r");
    let agent = Agent::new("A".into(), StrategyPolicy::ShadedSealed { factor: 0.5 });
    assert_eq!(agent.sealed_bids(&[&lic], &me.state(0))[0].amount, rs(10));
}

#[test]
fn straightforward_stops_at_value() {
    let me = Me::new(Bidder::new("A"), ValuationProfile::new("A").with_value("L", rs(150)), &["L"]);
    let v = view(vec![license_view("L", Some(150), 151)], &[], &[]);
    let mut agent = Agent::new("A".into(), StrategyPolicy::StraightforwardAscending);
    assert!(agent.decide(&v, &me.state(0)).is_empty());

    let v = view(vec![license_view("L", Some(140), 141)], &[], &[]);
    assert_eq!(agent.decide(&v, &me.state(0)), vec![BidIntent { license: "L".into(), amount: rs(141) }]);
}

#[test]
fn straightforward_does_not_raise_own_secure_bid() {
    let me = Me::new(Bidder::new("A"), ValuationProfile::new("A").with_value("L", rs(150)), &["L"]);
    let v = view(vec![license_view("L", Some(120), 121)], &[], &[]);
    let mut agent = Agent::new("A".into(), StrategyPolicy::StraightforwardAscending);
    assert!(agent.decide(&v, &me.state(1)).is_empty());
}

#[test]
fn unit_demand_bidder_bids_on_one_license() {
    let me = Me::new(
        Bidder::new("A"),
        ValuationProfile::unit_demand("A", &["a", "b", "c"], rs(100)),
        &["a", "b", "c"],
    );
    let v = view(
        vec![license_view("a", None, 10), license_view("b", Some(20), 21), license_view("c", None, 10)],
        &[],
        &[],
    );
    let mut agent = Agent::new("A".into(), StrategyPolicy::StraightforwardAscending);
    let bids = agent.decide(&v, &me.state(0));
    assert_eq!(bids, vec![BidIntent { license: "a".into(), amount: rs(10) }]);
}

fn agreement() -> CartelAgreement {
    CartelAgreement {
        members: ["X".into(), "Y".into()].into_iter().collect(),
        designated_winner: [("A".into(), "X".into()), ("C".into(), "Y".into())].into_iter().collect(),
        punishment: Punishment::RaiseOnDefector { markup_fraction: 0.1 },
    }
}

#[test]
fn cartel_member_leaves_rival_license_alone() {
    let me = Me::new(
        Bidder::new("X"),
        ValuationProfile::new("X").with_value("A", rs(100)).with_value("C", rs(100)),
        &["A", "C"],
    );
    let v = view(vec![license_view("A", None, 10), license_view("C", Some(10), 11)], &[], &[]);
    let mut agent = Agent::new("X".into(), StrategyPolicy::CartelMember { agreement: agreement() });
    let bids = agent.decide(&v, &me.state(0));
    assert_eq!(bids, vec![BidIntent { license: "A".into(), amount: rs(10) }]);
}

#[test]
fn cartel_member_punishes_observed_defector() {
    let me = Me::new(
        Bidder::new("Y"),
        ValuationProfile::new("Y").with_value("A", rs(60)).with_value("C", rs(60)),
        &["A", "C"],
    );
    // X was seen bidding on C, which belongs to Y
    let log = vec![Bid {
        bidder_id: "X".into(),
        license_id: "C".into(),
        amount: rs(11),
        round_index: 1,
        cycle_index: 0,
    }];
    let idx = vec![1];
    let v = view(vec![license_view("A", Some(20), 21), license_view("C", Some(11), 12)], &log, &idx);
    let mut agent = Agent::new("Y".into(), StrategyPolicy::CartelMember { agreement: agreement() });
    let bids = agent.decide(&v, &me.state(0));
    // 20 × 1.1 = 22 on X's license, and defend C at the minimum
    assert!(bids.contains(&BidIntent { license: "A".into(), amount: rs(22) }));
    assert!(bids.contains(&BidIntent { license: "C".into(), amount: rs(12) }));
}

#[test]
fn defector_waits_for_trigger() {
    let me = Me::new(
        Bidder::new("X"),
        ValuationProfile::new("X").with_value("A", rs(100)).with_value("C", rs(100)),
        &["A", "C"],
    );
    let policy = StrategyPolicy::CartelDefector {
        agreement: agreement(),
        trigger: DefectTrigger::OwnDesignatedClosed,
    };
    let mut agent = Agent::new("X".into(), policy);
    let open = view(vec![license_view("A", Some(10), 11), license_view("C", Some(10), 11)], &[], &[]);
    assert!(agent.decide(&open, &me.state(1)).is_empty());
    assert!(!agent.has_defected());

    let mut closed_a = license_view("A", Some(10), 11);
    closed_a.open = false;
    closed_a.biddable = false;
    closed_a.closed_price = Some(rs(10));
    let later = view(vec![closed_a, license_view("C", Some(10), 11)], &[], &[]);
    let mut me_won = me.state(0);
    me_won.won = 1;
    let bids = agent.decide(&later, &me_won);
    assert!(agent.has_defected());
    assert_eq!(bids, vec![BidIntent { license: "C".into(), amount: rs(11) }]);
}

#[test]
fn demand_reducer_limits_active_licenses() {
    let me = Me::new(
        Bidder::new("A"),
        ValuationProfile::new("A").with_value("s1", rs(100)).with_value("s2", rs(100)),
        &["s1", "s2"],
    );
    let v = view(vec![license_view("s1", None, 10), license_view("s2", None, 10)], &[], &[]);
    let mut agent = Agent::new("A".into(), StrategyPolicy::DemandReducer { max_licenses: 1 });
    assert_eq!(agent.decide(&v, &me.state(0)).len(), 1);
    assert!(agent.decide(&v, &me.state(0b10)).is_empty());
}

#[test]
fn exposure_chaser_prices_in_the_complement() {
    // pair 200, singles 100, slot 2 expected at the reserve of 10: bid up to 190 on slot 1
    let me = Me::new(
        Bidder::new("A"),
        ValuationProfile::new("A").with_value("s1", rs(100)).with_value("s2", rs(100)),
        &["s1", "s2"],
    );
    let mut s2 = license_view("s2", None, 10);
    s2.biddable = false;
    let policy = StrategyPolicy::ExposureChaser { forecast: BTreeMap::new() };
    let mut agent = Agent::new("A".into(), policy);
    let v = view(vec![license_view("s1", Some(189), 190), s2.clone()], &[], &[]);
    assert_eq!(agent.decide(&v, &me.state(0)).len(), 1);
    let v = view(vec![license_view("s1", Some(190), 191), s2], &[], &[]);
    assert!(agent.decide(&v, &me.state(0)).is_empty());
}

#[test]
fn sealed_demand_reducer_keeps_best_licenses() {
    let me = Me::new(
        Bidder::new("A"),
        ValuationProfile::new("A").with_value("a", rs(5)).with_value("b", rs(9)),
        &["a", "b"],
    );
    let (a, b) = (License::new("a", 1.0, 1, "r"), License::new("b", 1.0, 1, "r"));
    let agent = Agent::new("A".into(), StrategyPolicy::DemandReducer { max_licenses: 1 });
    let bids = agent.sealed_bids(&[&a, &b], &me.state(0));
    assert_eq!(bids, vec![BidIntent { license: "b".into(), amount: rs(9) }]);
}

#[test]
fn build_agents_defaults_to_straightforward() {
    let ids: Vec<BidderId> = vec!["B".into(), "A".into()];
    let mut assign = BTreeMap::new();
    assign.insert("B".into(), StrategyPolicy::TruthfulSealed);
    let agents = build_agents(&ids, &assign);
    assert_eq!(agents[0].bidder_id.as_str(), "A");
    assert_eq!(agents[0].policy, StrategyPolicy::StraightforwardAscending);
    assert_eq!(agents[1].policy, StrategyPolicy::TruthfulSealed);
}

fn arb_policy() -> impl Strategy<Value = StrategyPolicy> {
    prop_oneof![
        Just(StrategyPolicy::StraightforwardAscending),
        Just(StrategyPolicy::ExposureChaser { forecast: BTreeMap::new() }),
        (1usize..3).prop_map(|k| StrategyPolicy::DemandReducer { max_licenses: k }),
        Just(StrategyPolicy::CartelMember { agreement: agreement() }),
    ]
}

proptest! {
    #[test]
    fn intents_respect_budget_and_cap(
        values in proptest::collection::vec(0i64..300, 2),
        highs in proptest::collection::vec(proptest::option::of(10i64..250), 2),
        budget in 0i64..400,
        cap in proptest::option::of(5.0f64..25.0),
        held in 0u64..4,
        policy in arb_policy(),
    ) {
        let ids = ["A", "C"];
        let mut bidder = Bidder::new("X").with_budget(rs(budget));
        bidder.bandwidth_cap_mhz = cap;
        let profile = ValuationProfile::new("X").with_value("A", rs(values[0])).with_value("C", rs(values[1]));
        let me = Me::new(bidder, profile, &ids);
        // only licenses with a standing bid can be held
        let held = (0..2).filter(|i| held >> i & 1 == 1 && highs[*i].is_some()).fold(0u64, |m, i| m | 1 << i);
        let committed: Money = (0..2).filter(|i| held >> i & 1 == 1).map(|i| rs(highs[i].unwrap())).sum();
        let licenses: Vec<LicenseView> = ids
            .iter()
            .zip(&highs)
            .map(|(id, h)| license_view(id, *h, h.map_or(10, |h| h + 1)))
            .collect();
        let v = view(licenses, &[], &[]);
        let mut state = me.state(held);
        state.committed = committed;
        prop_assume!(committed <= rs(budget));

        let mut agent = Agent::new("X".into(), policy.clone());
        let intents = agent.decide(&v, &state);

        let mut extra = Money::ZERO;
        let mut bandwidth = held.count_ones() as f64 * 10.0;
        for intent in &intents {
            let i = v.position(&intent.license).unwrap();
            prop_assert!(intent.amount >= v.licenses[i].min_bid);
            if held >> i & 1 == 1 {
                extra += intent.amount - v.licenses[i].high_bid.unwrap();
            } else {
                extra += intent.amount;
                bandwidth += 10.0;
            }
            if matches!(policy, StrategyPolicy::StraightforwardAscending) {
                prop_assert!(intent.amount <= me.valuation.marginal(held, i));
            }
        }
        prop_assert!(committed + extra <= rs(budget));
        if let Some(cap) = cap {
            prop_assert!(bandwidth <= cap.max(held.count_ones() as f64 * 10.0) + 1e-9);
        }
    }
}
