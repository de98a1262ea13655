mod support;

use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use spectra::metrics::score;
use spectra::model::Money;
use spectra::{run, MechanismKind, Scenario};

fn instance(seed: u64, kind: MechanismKind) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = support::random_scenario(&mut rng, 4, 3, kind);
    if kind == MechanismKind::Hamr {
        support::randomize_hamr(&mut rng, &mut s);
    }
    s
}

fn ascending() -> impl Strategy<Value = MechanismKind> {
    prop_oneof![
        Just(MechanismKind::SeqAmr),
        Just(MechanismKind::Samr),
        Just(MechanismKind::Hamr)
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn oracle_matches_brute_force(seed in any::<u64>()) {
        let s = instance(seed, MechanismKind::Samr);
        let sol = s.optimal_allocation().unwrap();
        let (w, alloc) = support::enumerate_optimum(&s);
        prop_assert_eq!(sol.welfare.minor(), w);
        prop_assert_eq!(sol.allocation, alloc);
    }

    #[test]
    fn ascending_outcomes_are_well_formed(seed in any::<u64>(), kind in ascending()) {
        let s = instance(seed, kind);
        let out = run(&s).unwrap();

        let mut last: BTreeMap<_, Money> = BTreeMap::new();
        for r in &out.history {
            for (l, lr) in &r.licenses {
                if let Some(bid) = lr.standing_high_bid {
                    let prev = last.insert(l.clone(), bid);
                    prop_assert!(prev.is_none_or(|p| p <= bid), "{} fell from {:?} to {}", l, prev, bid);
                }
            }
        }
        for (l, w) in &out.allocation {
            let price = out.gross_prices[l];
            prop_assert_eq!(w.is_some(), price.is_some());
            if let Some(p) = price {
                prop_assert!(p >= s.license(l).unwrap().reserve_price);
            }
        }
        let paid: Money = out.payments.values().copied().sum();
        prop_assert_eq!(paid, out.revenue());

        let m = score(&out, &s);
        prop_assert!(m.welfare_achieved <= m.welfare_optimal.unwrap());
        prop_assert!(m.efficiency.is_none_or(|e| e <= 1.0 + 1e-12));
    }

    #[test]
    fn additive_straightforward_bidders_never_lose_money(seed in any::<u64>(), kind in ascending()) {
        let mut s = instance(seed, kind);
        for p in &mut s.valuations {
            p.bundle_adjustments.clear();
        }
        let out = run(&s).unwrap();
        for p in &s.valuations {
            prop_assert!(out.utility(p) >= Money::ZERO, "{} utility {}", p.bidder_id, out.utility(p));
        }
    }

    #[test]
    fn reruns_are_identical(seed in any::<u64>(), kind in ascending()) {
        let s = instance(seed, kind);
        prop_assert_eq!(run(&s).unwrap(), run(&s).unwrap());
    }

    #[test]
    fn sealed_prices_follow_the_format(seed in any::<u64>()) {
        let mut s = instance(seed, MechanismKind::Fpsb);
        s.strategy_assignments = s
            .bidders
            .iter()
            .map(|b| (b.id.clone(), spectra::strategies::StrategyPolicy::TruthfulSealed))
            .collect();
        let first = run(&s).unwrap();
        s.mechanism.kind = MechanismKind::Vickrey;
        let second = run(&s).unwrap();
        for (l, w) in &first.allocation {
            prop_assert_eq!(w, &second.allocation[l]);
            if let (Some(p1), Some(p2)) = (first.gross_prices[l], second.gross_prices[l]) {
                prop_assert!(p2 <= p1);
            }
        }
    }
}
