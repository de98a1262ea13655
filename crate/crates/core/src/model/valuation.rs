use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{BidderId, License, LicenseId, Money};
use crate::error::{Error, Result};

/// Value added (positive: complements) or removed (negative: substitutes)
/// when every license in `licenses` is held together.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BundleAdjustment {
    pub licenses: BTreeSet<LicenseId>,
    pub amount: Money,
}

/// A bidder's private value function over license bundles:
/// `value(S) = Σ base(l ∈ S) + Σ adjustment(T) for every T ⊆ S`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValuationProfile {
    pub bidder_id: BidderId,
    #[serde(default)]
    pub base_values: BTreeMap<LicenseId, Money>,
    #[serde(default)]
    pub bundle_adjustments: Vec<BundleAdjustment>,
}

impl ValuationProfile {
    pub fn new(bidder: &str) -> Self {
        ValuationProfile {
            bidder_id: bidder.into(),
            base_values: BTreeMap::new(),
            bundle_adjustments: Vec::new(),
        }
    }

    pub fn with_value(mut self, license: &str, value: Money) -> Self {
        self.base_values.insert(license.into(), value);
        self
    }

    pub fn with_adjustment(mut self, licenses: &[&str], amount: Money) -> Self {
        self.bundle_adjustments.push(BundleAdjustment {
            licenses: licenses.iter().map(|&l| LicenseId::from(l)).collect(),
            amount,
        });
        self
    }

    /// A bidder that wants exactly one of `licenses` and values any one of them
    /// at `value`. Encoded exactly through the Möbius inversion of the unit-demand
    /// value function: every subset of size k carries `value × (−1)^(k+1)`.
    pub fn unit_demand(bidder: &str, licenses: &[&str], value: Money) -> Self {
        let mut profile = ValuationProfile::new(bidder);
        let n = licenses.len();
        assert!(n <= 16, "unit-demand encoding limited to 16 licenses");
        for mask in 1u32..(1 << n) {
            let members: Vec<&str> = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| licenses[i]).collect();
            let sign = if members.len() % 2 == 1 { 1 } else { -1 };
            let amount = Money::from_minor(sign * value.minor());
            if members.len() == 1 {
                profile = profile.with_value(members[0], amount);
            } else {
                profile = profile.with_adjustment(&members, amount);
            }
        }
        profile
    }

    pub fn base_value(&self, license: &LicenseId) -> Money {
        self.base_values.get(license).copied().unwrap_or_default()
    }

    /// Value of `bundle`. Ids without a base value contribute nothing.
    pub fn value_of(&self, bundle: &BTreeSet<LicenseId>) -> Money {
        let base: Money = bundle.iter().map(|l| self.base_value(l)).sum();
        let adj: Money = self
            .bundle_adjustments
            .iter()
            .filter(|a| a.licenses.is_subset(bundle))
            .map(|a| a.amount)
            .sum();
        base + adj
    }
}

/// Checked bundle valuation: every id in `bundle` must belong to the scenario.
pub fn bundle_value(
    profile: &ValuationProfile,
    bundle: &BTreeSet<LicenseId>,
    licenses: &LicenseIndex,
) -> Result<Money> {
    if let Some(unknown) = bundle.iter().find(|l| licenses.position(l).is_none()) {
        return Err(Error::config(
            format!("bundle[{unknown}]"),
            "license id not present in scenario",
        ));
    }
    Ok(profile.value_of(bundle))
}

/// Sorted license ids with bit positions, used to turn bundles into `u64` masks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LicenseIndex {
    ids: Vec<LicenseId>,
}

impl LicenseIndex {
    pub const MAX_LICENSES: usize = 64;

    pub fn new<'a>(licenses: impl IntoIterator<Item = &'a License>) -> Self {
        let mut ids: Vec<LicenseId> = licenses.into_iter().map(|l| l.id.clone()).collect();
        ids.sort();
        ids.dedup();
        LicenseIndex { ids }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[LicenseId] {
        &self.ids
    }

    pub fn position(&self, id: &LicenseId) -> Option<usize> {
        self.ids.binary_search(id).ok()
    }

    pub fn mask_of<'a>(&self, ids: impl IntoIterator<Item = &'a LicenseId>) -> Option<u64> {
        ids.into_iter()
            .try_fold(0u64, |acc, id| self.position(id).map(|p| acc | 1 << p))
    }

    pub fn ids_of(&self, mask: u64) -> BTreeSet<LicenseId> {
        self.ids
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, id)| id.clone())
            .collect()
    }
}

/// A valuation profile lowered onto a [`LicenseIndex`] for fast evaluation.
#[derive(Debug, Clone)]
pub struct CompiledValuation {
    base: Vec<i64>,
    adjustments: Vec<(u64, i64)>,
}

impl CompiledValuation {
    pub fn compile(profile: &ValuationProfile, index: &LicenseIndex) -> Result<Self> {
        let mut base = vec![0; index.len()];
        for (id, value) in &profile.base_values {
            let pos = index.position(id).ok_or_else(|| {
                Error::config(
                    format!("valuations[{}].base_values[{id}]", profile.bidder_id),
                    "references unknown license",
                )
            })?;
            base[pos] = value.minor();
        }
        let adjustments = profile
            .bundle_adjustments
            .iter()
            .map(|a| {
                index.mask_of(&a.licenses).map(|m| (m, a.amount.minor())).ok_or_else(|| {
                    Error::config(
                        format!("valuations[{}].bundle_adjustments", profile.bidder_id),
                        "references unknown license",
                    )
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledValuation { base, adjustments })
    }

    pub fn value(&self, mask: u64) -> Money {
        let mut total = 0i64;
        let mut rest = mask;
        while rest != 0 {
            let bit = rest.trailing_zeros() as usize;
            total += self.base[bit];
            rest &= rest - 1;
        }
        for &(m, amount) in &self.adjustments {
            if m & mask == m {
                total += amount;
            }
        }
        Money::from_minor(total)
    }

    /// `value(holdings ∪ {license}) − value(holdings \ {license})`.
    pub fn marginal(&self, holdings: u64, license: usize) -> Money {
        let without = holdings & !(1 << license);
        self.value(without | 1 << license) - self.value(without)
    }

    /// Value of every subset of the first `n` licenses, indexed by mask.
    pub fn table(&self, n: usize) -> Vec<Money> {
        (0..1u64 << n).map(|m| self.value(m)).collect()
    }
}
