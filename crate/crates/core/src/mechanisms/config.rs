use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LicenseId, LicenseIndex, MechanismKind, Money};

/// How the minimum raise over the standing high bid is computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IncrementSchedule {
    Absolute { amount: Money },
    Percent { fraction: f64 },
    /// `base_fraction × standing × clamp(previous-round new bids, 1, 4)`.
    ActivityScaled { base_fraction: f64 },
}

impl Default for IncrementSchedule {
    fn default() -> Self {
        IncrementSchedule::Absolute {
            amount: Money::from_major(1),
        }
    }
}

/// From round (HAMR: cycle) `round_threshold` on, bidders must be active on
/// `required_fraction` of their eligibility.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityPhase {
    pub round_threshold: u64,
    pub required_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OrderingPolicy {
    Fixed { order: Vec<LicenseId> },
    RandomPerCycle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Disclosure {
    BidsOnly,
    BidsAndIdentities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub kind: MechanismKind,
    #[serde(default)]
    pub increment_schedule: IncrementSchedule,
    #[serde(default = "default_phases")]
    pub activity_phases: Vec<ActivityPhase>,
    /// Threshold saturation factor per license (HAMR).
    #[serde(default)]
    pub tsf: BTreeMap<LicenseId, u32>,
    /// Sequential AMR requires `Fixed`; HAMR accepts both. `None` falls back
    /// to license-id order for SEQ_AMR and a per-cycle shuffle for HAMR.
    #[serde(default)]
    pub ordering_policy: Option<OrderingPolicy>,
    #[serde(default = "default_disclosure")]
    pub disclosure: Disclosure,
    /// Overrides the scenario seed for tie-breaks and orderings when set.
    #[serde(default)]
    pub tie_break_seed: Option<u64>,
}

/// The three-phase 33 / 67 / 100 % schedule.
pub fn default_phases() -> Vec<ActivityPhase> {
    vec![
        ActivityPhase { round_threshold: 1, required_fraction: 0.33 },
        ActivityPhase { round_threshold: 10, required_fraction: 0.67 },
        ActivityPhase { round_threshold: 20, required_fraction: 1.0 },
    ]
}

fn default_disclosure() -> Disclosure {
    Disclosure::BidsOnly
}

pub const DEFAULT_TSF: u32 = 2;

impl MechanismConfig {
    pub fn new(kind: MechanismKind) -> Self {
        MechanismConfig {
            kind,
            increment_schedule: IncrementSchedule::default(),
            activity_phases: default_phases(),
            tsf: BTreeMap::new(),
            ordering_policy: None,
            disclosure: Disclosure::BidsOnly,
            tie_break_seed: None,
        }
    }

    pub fn with_increment(mut self, schedule: IncrementSchedule) -> Self {
        self.increment_schedule = schedule;
        self
    }

    pub fn with_absolute_increment(self, amount: Money) -> Self {
        self.with_increment(IncrementSchedule::Absolute { amount })
    }

    pub fn with_phases(mut self, phases: Vec<ActivityPhase>) -> Self {
        self.activity_phases = phases;
        self
    }

    pub fn with_tsf(mut self, license: &str, tsf: u32) -> Self {
        self.tsf.insert(license.into(), tsf);
        self
    }

    pub fn with_order(mut self, order: &[&str]) -> Self {
        self.ordering_policy = Some(OrderingPolicy::Fixed {
            order: order.iter().map(|&l| l.into()).collect(),
        });
        self
    }

    pub fn with_disclosure(mut self, disclosure: Disclosure) -> Self {
        self.disclosure = disclosure;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.tie_break_seed = Some(seed);
        self
    }

    /// Threshold for `license`, defaulting to [`DEFAULT_TSF`].
    pub fn tsf_for(&self, license: &LicenseId) -> u32 {
        self.tsf.get(license).copied().unwrap_or(DEFAULT_TSF)
    }

    /// Required activity fraction in force at `round` (1-based).
    pub fn required_fraction(&self, round: u64) -> Option<f64> {
        self.activity_phases
            .iter()
            .filter(|p| p.round_threshold <= round)
            .last()
            .map(|p| p.required_fraction)
    }
}

impl MechanismConfig {
    /// Checks the configuration against the scenario's licenses. `at` is the
    /// field path used in diagnostics.
    pub fn validate(&self, licenses: &LicenseIndex, at: &str) -> Result<()> {
        match self.increment_schedule {
            IncrementSchedule::Absolute { amount } if amount <= Money::ZERO => {
                return Err(Error::config(format!("{at}.increment_schedule.amount"), "must be positive"));
            }
            IncrementSchedule::Percent { fraction } if !(fraction > 0.0 && fraction.is_finite()) => {
                return Err(Error::config(format!("{at}.increment_schedule.fraction"), "must be positive"));
            }
            IncrementSchedule::ActivityScaled { base_fraction } if !(base_fraction > 0.0 && base_fraction.is_finite()) => {
                return Err(Error::config(format!("{at}.increment_schedule.base_fraction"), "must be positive"));
            }
            _ => {}
        }
        let mut prev: Option<ActivityPhase> = None;
        for (k, p) in self.activity_phases.iter().enumerate() {
            let path = format!("{at}.activity_phases[{k}]");
            if !(p.required_fraction > 0.0 && p.required_fraction <= 1.0) {
                return Err(Error::config(format!("{path}.required_fraction"), "must lie in (0, 1]"));
            }
            if let Some(q) = prev {
                if p.round_threshold <= q.round_threshold {
                    return Err(Error::config(format!("{path}.round_threshold"), "thresholds must increase"));
                }
                if p.required_fraction < q.required_fraction {
                    return Err(Error::config(format!("{path}.required_fraction"), "fractions must not decrease"));
                }
            }
            prev = Some(*p);
        }
        for (id, &t) in &self.tsf {
            if licenses.position(id).is_none() {
                return Err(Error::config(format!("{at}.tsf.{id}"), "unknown license"));
            }
            if t == 0 {
                return Err(Error::config(format!("{at}.tsf.{id}"), "threshold must be at least 1"));
            }
        }
        if let Some(OrderingPolicy::Fixed { order }) = &self.ordering_policy {
            let mut sorted = order.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() != order.len() || sorted.as_slice() != licenses.ids() {
                return Err(Error::config(
                    format!("{at}.ordering_policy.order"),
                    "must be a permutation of all license ids",
                ));
            }
        }
        Ok(())
    }

    /// Fills HAMR thresholds for every license that lacks one.
    pub fn fill_default_tsf(&mut self, licenses: &LicenseIndex) {
        for id in licenses.ids() {
            self.tsf.entry(id.clone()).or_insert(DEFAULT_TSF);
        }
    }
}
