//! Built-in scenarios for the worked examples. Where the source gives no
//! numbers (valuations in the entrant and collusion cases) the values are
//! synthetic and say so in the description.

use std::collections::{BTreeMap, BTreeSet};

use super::Scenario;
use crate::error::{Error, Result};
use crate::mechanisms::{Disclosure, MechanismConfig};
use crate::model::{credit_adjusted_payment, AuctionOutcome, Bidder, License, MechanismKind, Money, ValuationProfile};
use crate::strategies::{CartelAgreement, Punishment, StrategyPolicy};

pub struct CatalogEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub build: fn() -> Scenario,
}

static CATALOG: &[CatalogEntry] = &[
    CatalogEntry {
        name: "two_slot_complements",
        summary: "A values the pair at 300 (100 each alone); B and C want one slot at 150",
        build: two_slot_complements,
    },
    CatalogEntry {
        name: "two_slot_complements_pair200",
        summary: "pair worth only 200 to A, who chases it with exposure bids in sequence",
        build: two_slot_complements_pair200,
    },
    CatalogEntry {
        name: "threshold_problem",
        summary: "A pair 200 against B 150 and C 100; fixture: A's package-like bids total 180",
        build: threshold_problem,
    },
    CatalogEntry {
        name: "increment_demo",
        summary: "one license, values 150 and 159, reserve 100, increment 1",
        build: increment_demo,
    },
    CatalogEntry {
        name: "increment_demo_inc10",
        summary: "increment_demo with increment 10",
        build: increment_demo_inc10,
    },
    CatalogEntry {
        name: "increment_demo_inc100",
        summary: "increment_demo with increment 100",
        build: increment_demo_inc100,
    },
    CatalogEntry {
        name: "demand_reduction_pair",
        summary: "two identical licenses, A and B value either at 100, demand reducers",
        build: demand_reduction_pair,
    },
    CatalogEntry {
        name: "vickrey_gap",
        summary: "sealed bids 10, 15 and 20 on one license",
        build: vickrey_gap,
    },
    CatalogEntry {
        name: "vickrey_gap_nz",
        summary: "a single high bid of 500 over a reserve of 100",
        build: vickrey_gap_nz,
    },
    CatalogEntry {
        name: "claim1_collusion",
        summary: "X and Y split licenses A and C by agreement; HAMR with fixed order A, C",
        build: claim1_collusion,
    },
    CatalogEntry {
        name: "five_license_entrant",
        summary: "four incumbents and one entrant over five licenses (synthetic values)",
        build: five_license_entrant,
    },
    CatalogEntry {
        name: "four_license_entrant",
        summary: "the same bidders over only four licenses (synthetic values)",
        build: four_license_entrant,
    },
    CatalogEntry {
        name: "swiss_wll",
        summary: "three licenses, the third twice the bandwidth; fixture prices 121, 134, 55",
        build: swiss_wll,
    },
];

pub fn catalog() -> &'static [CatalogEntry] {
    CATALOG
}

/// Builds the named catalog scenario.
pub fn build_scenario(name: &str) -> Result<Scenario> {
    CATALOG
        .iter()
        .find(|e| e.name == name)
        .map(|e| (e.build)())
        .ok_or_else(|| Error::UnknownScenario(name.to_owned()))
}

/// Outcomes given as data rather than produced by an engine, for scenarios
/// whose reported prices are reproduced verbatim.
pub fn fixture_outcome(name: &str) -> Option<AuctionOutcome> {
    match name {
        // A's package bid approximated as standing bids of 90 on each slot
        "threshold_problem" => Some(fixture(
            &threshold_problem(),
            MechanismKind::Samr,
            &[("s1", Some(("A", 90))), ("s2", Some(("A", 90)))],
        )),
        "swiss_wll" => Some(fixture(
            &swiss_wll(),
            MechanismKind::SeqAmr,
            &[
                ("wll1", Some(("W1", 121))),
                ("wll2", Some(("W2", 134))),
                ("wll3", Some(("W3", 55))),
            ],
        )),
        _ => None,
    }
}

fn fixture(scenario: &Scenario, kind: MechanismKind, awards: &[(&str, Option<(&str, i64)>)]) -> AuctionOutcome {
    let mut allocation = BTreeMap::new();
    let mut gross_prices = BTreeMap::new();
    let mut gross: BTreeMap<&str, Money> = BTreeMap::new();
    for &(license, award) in awards {
        allocation.insert(license.into(), award.map(|(b, _)| b.into()));
        gross_prices.insert(license.into(), award.map(|(_, p)| rs(p)));
        if let Some((b, p)) = award {
            *gross.entry(b).or_default() += rs(p);
        }
    }
    let payments = scenario
        .bidders
        .iter()
        .map(|b| {
            let g = gross.get(b.id.as_str()).copied().unwrap_or_default();
            (b.id.clone(), credit_adjusted_payment(g, b))
        })
        .collect();
    AuctionOutcome {
        mechanism: kind,
        seed: scenario.seed,
        allocation,
        payments,
        gross_prices,
        rounds_elapsed: 0,
        raise_rounds: 0,
        rounds_open: BTreeMap::new(),
        history: Vec::new(),
        bids: Vec::new(),
        tie_breaks: Vec::new(),
        rejected_bids: Vec::new(),
        closings: Vec::new(),
    }
}

fn rs(major: i64) -> Money {
    Money::from_major(major)
}

fn slots(reserve: i64) -> Vec<License> {
    ["s1", "s2"]
        .iter()
        .map(|id| License::new(id, 5.0, 1_000_000, "circle").with_reserve(rs(reserve)))
        .collect()
}

fn bidders(ids: &[&str]) -> Vec<Bidder> {
    ids.iter().map(|id| Bidder::new(id)).collect()
}

fn two_slot_complements() -> Scenario {
    let mut s = Scenario::new("two_slot_complements");
    s.description = "A values either slot at 100 and both at 300; B and C each want one slot at 150. Reserve 10 is synthetic.".into();
    s.licenses = slots(10);
    s.bidders = bidders(&["A", "B", "C"]);
    s.valuations = vec![
        ValuationProfile::new("A")
            .with_value("s1", rs(100))
            .with_value("s2", rs(100))
            .with_adjustment(&["s1", "s2"], rs(100)),
        ValuationProfile::unit_demand("B", &["s1", "s2"], rs(150)),
        ValuationProfile::unit_demand("C", &["s1", "s2"], rs(150)),
    ];
    s.mechanism = MechanismConfig::new(MechanismKind::SeqAmr).with_order(&["s1", "s2"]);
    s.seed = 7;
    s
}

fn two_slot_complements_pair200() -> Scenario {
    let mut s = two_slot_complements();
    s.name = "two_slot_complements_pair200".into();
    s.description = "A values either slot at 100 and the pair at 200, and chases the pair: it bids on slot 1 up to the pair value less the reserve it expects to pay for slot 2.".into();
    s.valuations[0] = ValuationProfile::new("A").with_value("s1", rs(100)).with_value("s2", rs(100));
    s.strategy_assignments.insert(
        "A".into(),
        StrategyPolicy::ExposureChaser {
            forecast: BTreeMap::new(),
        },
    );
    s
}

fn threshold_problem() -> Scenario {
    let mut s = Scenario::new("threshold_problem");
    s.description = "A values the pair at 200 (100 each); B values one slot at 150, C one slot at 100. Maximum welfare 250, reached by B and C one slot each or by A and B one slot each.".into();
    s.licenses = slots(10);
    s.bidders = bidders(&["A", "B", "C"]);
    s.valuations = vec![
        ValuationProfile::new("A").with_value("s1", rs(100)).with_value("s2", rs(100)),
        ValuationProfile::unit_demand("B", &["s1", "s2"], rs(150)),
        ValuationProfile::unit_demand("C", &["s1", "s2"], rs(100)),
    ];
    s.mechanism = MechanismConfig::new(MechanismKind::Samr);
    s.seed = 11;
    s
}

fn increment_demo() -> Scenario {
    let mut s = Scenario::new("increment_demo");
    s.description = "One license, reserve 100; A values it at 150, B at 159.".into();
    s.licenses = vec![License::new("L", 10.0, 1_000_000, "circle").with_reserve(rs(100))];
    s.bidders = bidders(&["A", "B"]);
    s.valuations = vec![
        ValuationProfile::new("A").with_value("L", rs(150)),
        ValuationProfile::new("B").with_value("L", rs(159)),
    ];
    s.mechanism = MechanismConfig::new(MechanismKind::SeqAmr).with_absolute_increment(rs(1));
    s.seed = 2024;
    s
}

fn increment_demo_inc10() -> Scenario {
    let mut s = increment_demo();
    s.name = "increment_demo_inc10".into();
    s.mechanism = s.mechanism.with_absolute_increment(rs(10));
    s
}

fn increment_demo_inc100() -> Scenario {
    let mut s = increment_demo();
    s.name = "increment_demo_inc100".into();
    s.mechanism = s.mechanism.with_absolute_increment(rs(100));
    s
}

fn demand_reduction_pair() -> Scenario {
    let mut s = Scenario::new("demand_reduction_pair");
    s.description = "Two identical licenses; A and B value each at 100 (additively). Reserve 10 is synthetic.".into();
    s.licenses = slots(10);
    s.bidders = bidders(&["A", "B"]);
    s.valuations = ["A", "B"]
        .iter()
        .map(|b| ValuationProfile::new(b).with_value("s1", rs(100)).with_value("s2", rs(100)))
        .collect();
    for b in ["A", "B"] {
        s.strategy_assignments
            .insert(b.into(), StrategyPolicy::DemandReducer { max_licenses: 1 });
    }
    s.mechanism = MechanismConfig::new(MechanismKind::Samr);
    s.seed = 5;
    s
}

fn vickrey_gap() -> Scenario {
    let mut s = Scenario::new("vickrey_gap");
    s.description = "Truthful sealed bids of 10, 15 and 20 on one license.".into();
    s.licenses = vec![License::new("L", 10.0, 1_000_000, "circle")];
    s.bidders = bidders(&["A", "B", "C"]);
    s.valuations = [("A", 10), ("B", 15), ("C", 20)]
        .iter()
        .map(|&(b, v)| ValuationProfile::new(b).with_value("L", rs(v)))
        .collect();
    for b in ["A", "B", "C"] {
        s.strategy_assignments.insert(b.into(), StrategyPolicy::TruthfulSealed);
    }
    s.mechanism = MechanismConfig::new(MechanismKind::Vickrey);
    s.seed = 1;
    s
}

fn vickrey_gap_nz() -> Scenario {
    let mut s = Scenario::new("vickrey_gap_nz");
    s.description = "A single sealed bid of 500 over a reserve of 100.".into();
    s.licenses = vec![License::new("L", 10.0, 1_000_000, "circle").with_reserve(rs(100))];
    s.bidders = bidders(&["A"]);
    s.valuations = vec![ValuationProfile::new("A").with_value("L", rs(500))];
    s.strategy_assignments.insert("A".into(), StrategyPolicy::TruthfulSealed);
    s.mechanism = MechanismConfig::new(MechanismKind::Vickrey);
    s.seed = 1;
    s
}

fn claim1_collusion() -> Scenario {
    let mut s = Scenario::new("claim1_collusion");
    s.description = "Cartel: X takes A, Y takes C, with punishment by raising 10% on a defector's licenses. X values each license at 100, Y at 60 (synthetic). Reserve 10, increment 1, A visited first.".into();
    s.licenses = ["A", "C"]
        .iter()
        .map(|id| License::new(id, 5.0, 1_000_000, "circle").with_reserve(rs(10)))
        .collect();
    s.bidders = bidders(&["X", "Y"]);
    s.valuations = vec![
        ValuationProfile::new("X").with_value("A", rs(100)).with_value("C", rs(100)),
        ValuationProfile::new("Y").with_value("A", rs(60)).with_value("C", rs(60)),
    ];
    let agreement = CartelAgreement {
        members: ["X", "Y"].iter().map(|&b| b.into()).collect::<BTreeSet<_>>(),
        designated_winner: [("A", "X"), ("C", "Y")]
            .iter()
            .map(|&(l, b)| (l.into(), b.into()))
            .collect(),
        punishment: Punishment::RaiseOnDefector { markup_fraction: 0.1 },
    };
    for b in ["X", "Y"] {
        s.strategy_assignments.insert(
            b.into(),
            StrategyPolicy::CartelMember {
                agreement: agreement.clone(),
            },
        );
    }
    s.mechanism = MechanismConfig::new(MechanismKind::Hamr)
        .with_absolute_increment(rs(1))
        .with_tsf("A", 2)
        .with_tsf("C", 2)
        .with_order(&["A", "C"])
        .with_disclosure(Disclosure::BidsAndIdentities);
    s.seed = 42;
    s
}

fn entrant(name: &str, licenses: usize) -> Scenario {
    let mut s = Scenario::new(name);
    s.description = format!(
        "{licenses} licenses; incumbents I1..I4 value any one license at 100, entrant E at 80 (synthetic values). Reserve 10."
    );
    let ids: Vec<String> = (1..=licenses).map(|i| format!("L{i}")).collect();
    let refs: Vec<&str> = ids.iter().map(String::as_str).collect();
    s.licenses = refs
        .iter()
        .map(|id| License::new(id, 15.0, 60_000_000, "national").with_reserve(rs(10)))
        .collect();
    s.bidders = bidders(&["E", "I1", "I2", "I3", "I4"]);
    s.valuations = vec![
        ValuationProfile::unit_demand("E", &refs, rs(80)),
        ValuationProfile::unit_demand("I1", &refs, rs(100)),
        ValuationProfile::unit_demand("I2", &refs, rs(100)),
        ValuationProfile::unit_demand("I3", &refs, rs(100)),
        ValuationProfile::unit_demand("I4", &refs, rs(100)),
    ];
    s.mechanism = MechanismConfig::new(MechanismKind::Samr);
    s.seed = 3;
    s
}

fn five_license_entrant() -> Scenario {
    entrant("five_license_entrant", 5)
}

fn four_license_entrant() -> Scenario {
    entrant("four_license_entrant", 4)
}

fn swiss_wll() -> Scenario {
    let mut s = Scenario::new("swiss_wll");
    s.description = "Three licenses sold in sequence, the third with twice the bandwidth. Prices are reproduced as a fixture; no valuations are modeled.".into();
    s.licenses = vec![
        License::new("wll1", 28.0, 7_000_000, "ch"),
        License::new("wll2", 28.0, 7_000_000, "ch"),
        License::new("wll3", 56.0, 7_000_000, "ch"),
    ];
    s.bidders = bidders(&["W1", "W2", "W3"]);
    s.mechanism = MechanismConfig::new(MechanismKind::SeqAmr).with_order(&["wll1", "wll2", "wll3"]);
    s
}
