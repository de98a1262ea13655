//! Scenario documents: loading, validation, saving, and the built-in catalog.

mod catalog;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use catalog::{build_scenario, catalog, fixture_outcome, CatalogEntry};

use crate::error::{Error, Result};
use crate::mechanisms::MechanismConfig;
use crate::model::{
    optimal_allocation, Bidder, BidderId, License, LicenseIndex, MechanismKind, Money, ValuationProfile,
    WelfareSolution, ORACLE_MAX_BIDDERS, ORACLE_MAX_LICENSES,
};
use crate::strategies::{build_agents, Agent, CartelAgreement, StrategyPolicy};

pub const SCHEMA_VERSION: u32 = 1;

/// Bundles are enumerated exhaustively for the non-negativity check up to
/// this many licenses touched by one profile.
const ENUMERATION_LIMIT: usize = 20;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

/// A complete, self-describing experiment input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default = "schema_version")]
    pub schema_version: u32,
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub licenses: Vec<License>,
    pub bidders: Vec<Bidder>,
    #[serde(default)]
    pub valuations: Vec<ValuationProfile>,
    pub mechanism: MechanismConfig,
    #[serde(default)]
    pub strategy_assignments: BTreeMap<BidderId, StrategyPolicy>,
    #[serde(default)]
    pub seed: u64,
}

impl Scenario {
    /// Empty SEQ_AMR scenario, useful as a starting point for builders.
    pub fn new(name: &str) -> Self {
        Scenario {
            schema_version: SCHEMA_VERSION,
            name: name.to_owned(),
            description: String::new(),
            licenses: Vec::new(),
            bidders: Vec::new(),
            valuations: Vec::new(),
            mechanism: MechanismConfig::new(MechanismKind::SeqAmr),
            strategy_assignments: BTreeMap::new(),
            seed: 0,
        }
    }

    pub fn license(&self, id: impl AsRef<str>) -> Option<&License> {
        self.licenses.iter().find(|l| l.id.as_str() == id.as_ref())
    }

    pub fn bidder(&self, id: impl AsRef<str>) -> Option<&Bidder> {
        self.bidders.iter().find(|b| b.id.as_str() == id.as_ref())
    }

    pub fn profile(&self, id: impl AsRef<str>) -> Option<&ValuationProfile> {
        self.valuations.iter().find(|v| v.bidder_id.as_str() == id.as_ref())
    }

    /// Profile for `id`, or an all-zero profile if the bidder has none.
    pub fn profile_or_empty(&self, id: &BidderId) -> ValuationProfile {
        self.profile(id)
            .cloned()
            .unwrap_or_else(|| ValuationProfile::new(id.as_str()))
    }

    pub fn license_index(&self) -> LicenseIndex {
        LicenseIndex::new(&self.licenses)
    }

    /// Agents for every bidder, following the strategy assignment.
    pub fn agents(&self) -> Vec<Agent> {
        build_agents(self.bidders.iter().map(|b| &b.id), &self.strategy_assignments)
    }

    /// The first cartel agreement found in the strategy assignment.
    pub fn cartel(&self) -> Option<&CartelAgreement> {
        self.strategy_assignments.values().find_map(|p| p.agreement())
    }

    pub fn within_oracle_bounds(&self) -> bool {
        self.licenses.len() <= ORACLE_MAX_LICENSES && self.bidders.len() <= ORACLE_MAX_BIDDERS
    }

    /// Cap-constrained welfare optimum.
    pub fn optimal_allocation(&self) -> Result<WelfareSolution> {
        let profiles: Vec<ValuationProfile> = self.bidders.iter().map(|b| self.profile_or_empty(&b.id)).collect();
        optimal_allocation(&self.licenses, &self.bidders, &profiles)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scenario: Scenario = serde_json::from_str(text)?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Scenario::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// Checks every model rule; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.licenses.is_empty() {
            return Err(Error::config("licenses", "at least one license is required"));
        }
        if self.licenses.len() > LicenseIndex::MAX_LICENSES {
            return Err(Error::config(
                "licenses",
                format!("at most {} licenses are supported", LicenseIndex::MAX_LICENSES),
            ));
        }
        let mut license_ids = BTreeSet::new();
        for (k, l) in self.licenses.iter().enumerate() {
            let at = |field: &str| format!("licenses[{k}].{field}");
            if l.id.as_str().is_empty() {
                return Err(Error::config(at("id"), "must not be empty"));
            }
            if !license_ids.insert(&l.id) {
                return Err(Error::config(at("id"), format!("duplicate license id `{}`", l.id)));
            }
            if !(l.bandwidth_mhz > 0.0 && l.bandwidth_mhz.is_finite()) {
                return Err(Error::config(at("bandwidth_mhz"), "must be positive"));
            }
            if !(l.activity_weight > 0.0 && l.activity_weight.is_finite()) {
                return Err(Error::config(at("activity_weight"), "must be positive"));
            }
            if l.reserve_price.is_negative() {
                return Err(Error::config(at("reserve_price"), "must not be negative"));
            }
            if !(l.area >= 0.0 && l.area.is_finite()) {
                return Err(Error::config(at("area"), "must not be negative"));
            }
        }

        if self.bidders.is_empty() {
            return Err(Error::config("bidders", "at least one bidder is required"));
        }
        let mut bidder_ids = BTreeSet::new();
        for (k, b) in self.bidders.iter().enumerate() {
            let at = |field: &str| format!("bidders[{k}].{field}");
            if b.id.as_str().is_empty() {
                return Err(Error::config(at("id"), "must not be empty"));
            }
            if !bidder_ids.insert(&b.id) {
                return Err(Error::config(at("id"), format!("duplicate bidder id `{}`", b.id)));
            }
            if b.budget.is_some_and(Money::is_negative) {
                return Err(Error::config(at("budget"), "must not be negative"));
            }
            if !(0.0..1.0).contains(&b.credit_fraction) {
                return Err(Error::config(at("credit_fraction"), "must lie in [0, 1)"));
            }
            if !b.designated && b.credit_fraction != 0.0 {
                return Err(Error::config(at("credit_fraction"), "must be 0 unless the bidder is designated"));
            }
            if b.bandwidth_cap_mhz.is_some_and(|c| !(c > 0.0 && c.is_finite())) {
                return Err(Error::config(at("bandwidth_cap_mhz"), "must be positive"));
            }
        }

        let mut profiled = BTreeSet::new();
        for (k, v) in self.valuations.iter().enumerate() {
            let at = |field: &str| format!("valuations[{k}].{field}");
            if !bidder_ids.contains(&v.bidder_id) {
                return Err(Error::config(at("bidder_id"), format!("unknown bidder `{}`", v.bidder_id)));
            }
            if !profiled.insert(&v.bidder_id) {
                return Err(Error::config(at("bidder_id"), format!("second profile for `{}`", v.bidder_id)));
            }
            for (l, amount) in &v.base_values {
                if !license_ids.contains(l) {
                    return Err(Error::config(at(&format!("base_values.{l}")), "unknown license"));
                }
                if amount.is_negative() {
                    return Err(Error::config(at(&format!("base_values.{l}")), "must not be negative"));
                }
            }
            for (j, adj) in v.bundle_adjustments.iter().enumerate() {
                let path = at(&format!("bundle_adjustments[{j}].licenses"));
                if adj.licenses.len() < 2 {
                    return Err(Error::config(path, "a bundle adjustment needs at least two licenses"));
                }
                if let Some(l) = adj.licenses.iter().find(|l| !license_ids.contains(l)) {
                    return Err(Error::config(path, format!("unknown license `{l}`")));
                }
            }
            check_non_negative(v, &at("bundle_adjustments"))?;
        }

        self.mechanism.validate(&self.license_index(), "mechanism")?;
        if self.mechanism.kind == MechanismKind::SeqAmr
            && self.mechanism.ordering_policy == Some(crate::mechanisms::OrderingPolicy::RandomPerCycle)
        {
            return Err(Error::config("mechanism.ordering_policy", "SEQ_AMR requires a FIXED order"));
        }

        for (bidder, policy) in &self.strategy_assignments {
            let at = format!("strategy_assignments.{bidder}");
            if !bidder_ids.contains(bidder) {
                return Err(Error::config(at, "unknown bidder"));
            }
            if let Some(l) = policy.referenced_licenses().into_iter().find(|l| !license_ids.contains(l)) {
                return Err(Error::config(at, format!("policy references unknown license `{l}`")));
            }
            match policy {
                StrategyPolicy::ShadedSealed { factor } if !(*factor > 0.0 && factor.is_finite()) => {
                    return Err(Error::config(format!("{at}.factor"), "must be positive"));
                }
                StrategyPolicy::DemandReducer { max_licenses: 0 } => {
                    return Err(Error::config(format!("{at}.max_licenses"), "must be at least 1"));
                }
                StrategyPolicy::ExposureChaser { forecast } if forecast.values().any(|m| m.is_negative()) => {
                    return Err(Error::config(format!("{at}.forecast"), "must not be negative"));
                }
                _ => {}
            }
            if let Some(agreement) = policy.agreement() {
                if let Some(m) = agreement.members.iter().find(|m| !bidder_ids.contains(m)) {
                    return Err(Error::config(format!("{at}.agreement.members"), format!("unknown bidder `{m}`")));
                }
                if let Some((l, w)) = agreement
                    .designated_winner
                    .iter()
                    .find(|(_, w)| !agreement.members.contains(*w))
                {
                    return Err(Error::config(
                        format!("{at}.agreement.designated_winner.{l}"),
                        format!("`{w}` is not a cartel member"),
                    ));
                }
                if let crate::strategies::Punishment::RaiseOnDefector { markup_fraction } = agreement.punishment {
                    if !(markup_fraction >= 0.0 && markup_fraction.is_finite()) {
                        return Err(Error::config(
                            format!("{at}.agreement.punishment.markup_fraction"),
                            "must not be negative",
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

/// `value(S) ≥ 0` for every bundle over the licenses the profile mentions,
/// by enumeration when small enough and otherwise over the declared bundles.
fn check_non_negative(profile: &ValuationProfile, at: &str) -> Result<()> {
    if profile.bundle_adjustments.iter().all(|a| a.amount >= Money::ZERO) {
        return Ok(());
    }
    let touched: BTreeSet<&crate::model::LicenseId> = profile
        .base_values
        .keys()
        .chain(profile.bundle_adjustments.iter().flat_map(|a| a.licenses.iter()))
        .collect();
    let touched: Vec<_> = touched.into_iter().collect();
    let bundles: Vec<BTreeSet<crate::model::LicenseId>> = if touched.len() <= ENUMERATION_LIMIT {
        (1u64..1 << touched.len())
            .map(|m| {
                (0..touched.len())
                    .filter(|i| m >> i & 1 == 1)
                    .map(|i| touched[i].clone())
                    .collect()
            })
            .collect()
    } else {
        profile.bundle_adjustments.iter().map(|a| a.licenses.clone()).collect()
    };
    for bundle in bundles {
        if profile.value_of(&bundle).is_negative() {
            let names: Vec<&str> = bundle.iter().map(|l| l.as_str()).collect();
            return Err(Error::config(at, format!("bundle {{{}}} has negative value", names.join(", "))));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> &'static str {
        r#"{
            "schema_version": 1,
            "name": "mini",
            "licenses": [{"id": "L", "bandwidth_mhz": 5.0, "population": 10, "region_id": "r"}],
            "bidders": [{"id": "A"}],
            "valuations": [{"bidder_id": "A", "base_values": {"L": 1000}}],
            "mechanism": {"kind": "VICKREY"},
            "seed": 3
        }"#
    }

    fn rule_at(err: Error) -> String {
        match err {
            Error::Config { path, .. } => path,
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn minimal_document_loads() {
        let s = Scenario::from_json(minimal()).unwrap();
        assert_eq!(s.licenses.len(), 1);
        assert_eq!(s.profile("A").unwrap().base_value(&"L".into()), Money::from_major(10));
        assert!(s.within_oracle_bounds());
    }

    #[test]
    fn duplicate_license_is_named() {
        let mut s = Scenario::from_json(minimal()).unwrap();
        s.licenses.push(s.licenses[0].clone());
        let err = s.validate().unwrap_err();
        assert!(err.to_string().contains("duplicate license id `L`"), "{err}");
        assert_eq!(rule_at(err), "licenses[1].id");
    }

    #[test]
    fn adjustment_on_unknown_license_is_rejected() {
        let mut s = Scenario::from_json(minimal()).unwrap();
        s.valuations[0] = s.valuations[0].clone().with_adjustment(&["L", "Z"], Money::from_major(5));
        let err = s.validate().unwrap_err();
        assert_eq!(rule_at(err), "valuations[0].bundle_adjustments[0].licenses");
    }

    #[test]
    fn negative_bundle_value_is_rejected() {
        let mut s = Scenario::from_json(minimal()).unwrap();
        s.licenses.push(License::new("M", 5.0, 1, "r"));
        s.valuations[0] = s.valuations[0].clone().with_adjustment(&["L", "M"], Money::from_major(-20));
        assert_eq!(rule_at(s.validate().unwrap_err()), "valuations[0].bundle_adjustments");
    }

    #[test]
    fn credit_without_designation_is_rejected() {
        let mut s = Scenario::from_json(minimal()).unwrap();
        s.bidders[0].credit_fraction = 0.1;
        assert_eq!(rule_at(s.validate().unwrap_err()), "bidders[0].credit_fraction");
    }

    #[test]
    fn zero_tsf_is_rejected() {
        let mut s = Scenario::from_json(minimal()).unwrap();
        s.mechanism = MechanismConfig::new(MechanismKind::Hamr).with_tsf("L", 0);
        assert_eq!(rule_at(s.validate().unwrap_err()), "mechanism.tsf.L");
    }

    #[test]
    fn unknown_policy_license_is_rejected() {
        let mut s = Scenario::from_json(minimal()).unwrap();
        let mut forecast = BTreeMap::new();
        forecast.insert("nope".into(), Money::ZERO);
        s.strategy_assignments
            .insert("A".into(), StrategyPolicy::ExposureChaser { forecast });
        assert_eq!(rule_at(s.validate().unwrap_err()), "strategy_assignments.A");
    }

    #[test]
    fn malformed_json_is_a_json_error() {
        assert!(matches!(Scenario::from_json("{"), Err(Error::Json(_))));
    }

    #[test]
    fn save_then_load_is_identity() {
        let s = Scenario::from_json(minimal()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        s.save(&path).unwrap();
        assert_eq!(Scenario::load(&path).unwrap(), s);
    }
}
