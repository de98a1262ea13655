#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use spectra::mechanisms::{MechanismConfig, OrderingPolicy};
use spectra::model::{Bidder, BidderId, License, LicenseId, MechanismKind, Money, ValuationProfile};
use spectra::Scenario;

/// Value straight from the profile fields: additive base plus every
/// adjustment whose license set is contained in the bundle.
pub fn naive_value(profile: &ValuationProfile, bundle: &BTreeSet<LicenseId>) -> i64 {
    let mut v = 0;
    for l in bundle {
        if let Some(m) = profile.base_values.get(l) {
            v += m.minor();
        }
    }
    for adj in &profile.bundle_adjustments {
        if adj.licenses.iter().all(|l| bundle.contains(l)) {
            v += adj.amount.minor();
        }
    }
    v
}

fn cap_ok(scenario: &Scenario, bidder: &Bidder, bundle: &BTreeSet<LicenseId>) -> bool {
    let Some(cap) = bidder.bandwidth_cap_mhz else {
        return true;
    };
    let mut per_region: BTreeMap<&str, f64> = BTreeMap::new();
    for l in bundle {
        let lic = scenario.licenses.iter().find(|x| &x.id == l).unwrap();
        *per_region.entry(lic.region_id.as_str()).or_default() += lic.bandwidth_mhz;
    }
    per_region.values().all(|&bw| bw <= cap + 1e-9)
}

/// Brute force over every (unsold | bidder) assignment, visited in
/// lexicographic order (licenses by id, unsold first, then bidders by id).
/// The first assignment reaching the maximum is kept.
pub fn enumerate_optimum(scenario: &Scenario) -> (i64, BTreeMap<LicenseId, Option<BidderId>>) {
    let mut licenses: Vec<LicenseId> = scenario.licenses.iter().map(|l| l.id.clone()).collect();
    licenses.sort();
    let mut bidders: Vec<&Bidder> = scenario.bidders.iter().collect();
    bidders.sort_by(|a, b| a.id.cmp(&b.id));

    let mut best: Option<(i64, Vec<Option<usize>>)> = None;
    let mut current = Vec::new();
    recurse(scenario, &licenses, &bidders, &mut current, &mut best);
    let (w, choice) = best.expect("the all-unsold assignment is always feasible");
    let alloc = licenses
        .iter()
        .zip(choice)
        .map(|(l, c)| (l.clone(), c.map(|k| bidders[k].id.clone())))
        .collect();
    (w, alloc)
}

fn recurse(
    scenario: &Scenario,
    licenses: &[LicenseId],
    bidders: &[&Bidder],
    current: &mut Vec<Option<usize>>,
    best: &mut Option<(i64, Vec<Option<usize>>)>,
) {
    if current.len() == licenses.len() {
        let mut total = 0;
        for (k, b) in bidders.iter().enumerate() {
            let bundle: BTreeSet<LicenseId> = licenses
                .iter()
                .zip(current.iter())
                .filter(|(_, c)| **c == Some(k))
                .map(|(l, _)| l.clone())
                .collect();
            if !cap_ok(scenario, b, &bundle) {
                return;
            }
            if let Some(p) = scenario.valuations.iter().find(|p| p.bidder_id == b.id) {
                total += naive_value(p, &bundle);
            }
        }
        if best.as_ref().is_none_or(|(w, _)| total > *w) {
            *best = Some((total, current.clone()));
        }
        return;
    }
    for cand in std::iter::once(None).chain((0..bidders.len()).map(Some)) {
        current.push(cand);
        recurse(scenario, licenses, bidders, current, best);
        current.pop();
    }
}

/// Random instance with up to `max_l` licenses and `max_b` bidders: integer
/// base values, occasional pair adjustments that keep every bundle value
/// non-negative, and occasional regional caps.
pub fn random_scenario(rng: &mut ChaCha8Rng, max_l: usize, max_b: usize, kind: MechanismKind) -> Scenario {
    let n_l = rng.random_range(1..=max_l);
    let n_b = rng.random_range(1..=max_b);
    let mut s = Scenario::new("random");
    s.licenses = (0..n_l)
        .map(|i| {
            let bw = [10.0, 20.0][rng.random_range(0..2)];
            let region = ["north", "south"][rng.random_range(0..2)];
            License::new(&format!("L{i}"), bw, 1000, region).with_reserve(Money::from_major(rng.random_range(0..=5)))
        })
        .collect();
    s.bidders = (0..n_b)
        .map(|k| {
            let b = Bidder::new(&format!("B{k}"));
            if rng.random_bool(0.2) {
                b.with_cap(20.0)
            } else {
                b
            }
        })
        .collect();
    s.valuations = (0..n_b)
        .map(|k| {
            let mut p = ValuationProfile::new(&format!("B{k}"));
            let mut values = Vec::new();
            for i in 0..n_l {
                let v = rng.random_range(0..=40);
                values.push(v);
                p = p.with_value(&format!("L{i}"), Money::from_major(v));
            }
            if n_l >= 2 && rng.random_bool(0.4) {
                let a = rng.random_range(0..n_l);
                let b = (a + 1 + rng.random_range(0..n_l - 1)) % n_l;
                let floor = -(values[a].min(values[b]));
                let amount = rng.random_range(floor..=30);
                p = p.with_adjustment(&[&format!("L{a}"), &format!("L{b}")], Money::from_major(amount));
            }
            p
        })
        .collect();
    s.mechanism = MechanismConfig::new(kind);
    s.seed = rng.random();
    s
}

/// HAMR configuration with a random TSF in 1..=3 per license and either a
/// random fixed order or a per-cycle shuffle.
pub fn randomize_hamr(rng: &mut ChaCha8Rng, s: &mut Scenario) {
    let mut ids: Vec<LicenseId> = s.licenses.iter().map(|l| l.id.clone()).collect();
    for id in &ids {
        s.mechanism.tsf.insert(id.clone(), rng.random_range(1..=3));
    }
    s.mechanism.ordering_policy = if rng.random_bool(0.5) {
        for i in (1..ids.len()).rev() {
            ids.swap(i, rng.random_range(0..=i));
        }
        Some(OrderingPolicy::Fixed { order: ids })
    } else {
        Some(OrderingPolicy::RandomPerCycle)
    };
}
