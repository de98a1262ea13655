//! Domain types shared by every engine: licenses, bidders, valuations, bids
//! and outcomes, plus the brute-force welfare oracle.

mod money;
pub mod oracle;
mod outcome;
mod valuation;

use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use money::{Money, MINOR_PER_MAJOR};
pub use oracle::{optimal_allocation, WelfareSolution, ORACLE_MAX_BIDDERS, ORACLE_MAX_LICENSES};
pub use outcome::{
    AuctionOutcome, BidderRound, ClosingEvent, LicenseRound, RejectedBid, RoundRecord, TieBreak,
};
pub use valuation::{bundle_value, BundleAdjustment, CompiledValuation, LicenseIndex, ValuationProfile};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Identifier of a license, unique within a scenario.
    LicenseId
);
string_id!(
    /// Identifier of a bidder, unique within a scenario.
    BidderId
);

/// The five allocation mechanisms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MechanismKind {
    Fpsb,
    Vickrey,
    SeqAmr,
    Samr,
    Hamr,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 5] = [
        MechanismKind::Fpsb,
        MechanismKind::Vickrey,
        MechanismKind::SeqAmr,
        MechanismKind::Samr,
        MechanismKind::Hamr,
    ];

    pub fn is_sealed(self) -> bool {
        matches!(self, MechanismKind::Fpsb | MechanismKind::Vickrey)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MechanismKind::Fpsb => "FPSB",
            MechanismKind::Vickrey => "VICKREY",
            MechanismKind::SeqAmr => "SEQ_AMR",
            MechanismKind::Samr => "SAMR",
            MechanismKind::Hamr => "HAMR",
        }
    }
}

impl fmt::Display for MechanismKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for MechanismKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.as_str() == norm)
            .ok_or_else(|| format!("unknown mechanism `{s}` (expected one of FPSB, VICKREY, SEQ_AMR, SAMR, HAMR)"))
    }
}

/// An auctionable spectrum license.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct License {
    pub id: LicenseId,
    pub bandwidth_mhz: f64,
    pub population: u64,
    /// Covered area in km². Informational only.
    #[serde(default)]
    pub area: f64,
    #[serde(default)]
    pub reserve_price: Money,
    #[serde(default = "default_weight")]
    pub activity_weight: f64,
    pub region_id: String,
}

fn default_weight() -> f64 {
    1.0
}

impl License {
    pub fn new(id: &str, bandwidth_mhz: f64, population: u64, region: &str) -> Self {
        License {
            id: id.into(),
            bandwidth_mhz,
            population,
            area: 0.0,
            reserve_price: Money::ZERO,
            activity_weight: 1.0,
            region_id: region.to_owned(),
        }
    }

    pub fn with_reserve(mut self, reserve: Money) -> Self {
        self.reserve_price = reserve;
        self
    }

    pub fn with_activity_weight(mut self, weight: f64) -> Self {
        self.activity_weight = weight;
        self
    }
}

/// License size in MHz-pop: bandwidth times covered population.
pub fn license_size(license: &License) -> f64 {
    license.bandwidth_mhz * license.population as f64
}

/// A participant in the auction. Budgets and caps are enforced by the
/// engines, not by this type.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bidder {
    pub id: BidderId,
    /// `None` means unbounded.
    #[serde(default)]
    pub budget: Option<Money>,
    #[serde(default)]
    pub designated: bool,
    #[serde(default)]
    pub credit_fraction: f64,
    /// Per-region cap on held bandwidth. `None` means unbounded.
    #[serde(default)]
    pub bandwidth_cap_mhz: Option<f64>,
}

impl Bidder {
    pub fn new(id: &str) -> Self {
        Bidder {
            id: id.into(),
            budget: None,
            designated: false,
            credit_fraction: 0.0,
            bandwidth_cap_mhz: None,
        }
    }

    pub fn with_budget(mut self, budget: Money) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_credit(mut self, credit_fraction: f64) -> Self {
        self.designated = credit_fraction > 0.0;
        self.credit_fraction = credit_fraction;
        self
    }

    pub fn with_cap(mut self, cap_mhz: f64) -> Self {
        self.bandwidth_cap_mhz = Some(cap_mhz);
        self
    }
}

/// What a bidder actually pays for a gross price: the bidder credit is
/// deducted and the result rounded half-up to the nearest minor unit.
pub fn credit_adjusted_payment(gross: Money, bidder: &Bidder) -> Money {
    gross.scale_half_up(1.0 - bidder.credit_fraction)
}

/// An accepted bid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bid {
    pub bidder_id: BidderId,
    pub license_id: LicenseId,
    pub amount: Money,
    pub round_index: u64,
    /// HAMR cycle; 0 for the other mechanisms.
    #[serde(default)]
    pub cycle_index: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn license_size_is_bandwidth_times_population() {
        assert_eq!(license_size(&License::new("a", 10.0, 1_000_000, "r")), 10_000_000.0);
        assert_eq!(license_size(&License::new("b", 45.0, 2, "r")), 90.0);
    }

    #[test]
    fn credit_payment_examples() {
        let plain = Bidder::new("p");
        assert_eq!(credit_adjusted_payment(Money::from_major(100), &plain), Money::from_major(100));
        let ten = Bidder::new("d").with_credit(0.10);
        assert_eq!(credit_adjusted_payment(Money::from_major(100), &ten), Money::from_major(90));
    }

    #[test]
    fn credit_payment_quarter_matches_hand_computation() {
        // 250.00 × 0.75 = 187.50, recomputed as (25000 × 75) / 100 minor units
        let quarter = Bidder::new("d").with_credit(0.25);
        let expected = Money::from_minor(25_000 * 75 / 100);
        assert_eq!(expected, Money::from_minor(18_750));
        assert_eq!(credit_adjusted_payment(Money::from_major(250), &quarter), expected);
    }

    #[test]
    fn mechanism_kind_parses_loosely() {
        assert_eq!("seq-amr".parse::<MechanismKind>().unwrap(), MechanismKind::SeqAmr);
        assert_eq!("hamr".parse::<MechanismKind>().unwrap(), MechanismKind::Hamr);
        assert!("dutch".parse::<MechanismKind>().is_err());
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn credit_payment_never_exceeds_gross(gross in 0i64..10_000_000, credit in 0.0f64..0.99) {
                let b = Bidder::new("x").with_credit(credit);
                let paid = credit_adjusted_payment(Money::from_minor(gross), &b);
                prop_assert!(paid <= Money::from_minor(gross));
                prop_assert!(!paid.is_negative());
            }
        }
    }
}
