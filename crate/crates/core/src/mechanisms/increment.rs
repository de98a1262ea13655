use super::IncrementSchedule;
use crate::model::{License, LicenseRound, Money};

/// Upper bound on the activity multiplier of [`IncrementSchedule::ActivityScaled`].
pub const ACTIVITY_SCALE_CAP: u32 = 4;

/// Minimum raise for `license` given the previous round's record. The base is
/// the standing high bid, or the reserve before any bid has been placed.
/// Fractional schedules round up to the minor unit and never go below one.
pub fn compute_min_increment(
    license: &License,
    prev: Option<&LicenseRound>,
    schedule: &IncrementSchedule,
) -> Money {
    let base = prev
        .and_then(|r| r.standing_high_bid)
        .unwrap_or(license.reserve_price);
    let prev_new_bids = prev.map_or(0, |r| r.new_bid_count);
    increment_from(base, prev_new_bids, schedule)
}

pub(crate) fn increment_from(base: Money, prev_new_bids: u32, schedule: &IncrementSchedule) -> Money {
    let one = Money::from_minor(1);
    match *schedule {
        IncrementSchedule::Absolute { amount } => amount,
        IncrementSchedule::Percent { fraction } => base.scale_ceil(fraction).max(one),
        IncrementSchedule::ActivityScaled { base_fraction } => {
            let scale = prev_new_bids.clamp(1, ACTIVITY_SCALE_CAP);
            base.scale_ceil(base_fraction * scale as f64).max(one)
        }
    }
}

/// Smallest acceptable bid: the reserve for an opening bid, otherwise the
/// standing high plus the minimum increment.
pub(crate) fn min_next_bid(
    reserve: Money,
    standing: Option<Money>,
    prev_new_bids: u32,
    schedule: &IncrementSchedule,
) -> Money {
    match standing {
        None => reserve,
        Some(high) => high + increment_from(high, prev_new_bids, schedule),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(standing: i64, new_bids: u32) -> LicenseRound {
        LicenseRound {
            standing_high_bid: Some(Money::from_major(standing)),
            standing_high_bidder: None,
            tied: false,
            new_bid_count: new_bids,
            open: true,
            saturation_factor: None,
            runner_up_bid: None,
        }
    }

    fn lic() -> License {
        License::new("x", 1.0, 1, "r").with_reserve(Money::from_major(100))
    }

    #[test]
    fn absolute_ten_over_140_requires_150() {
        let schedule = IncrementSchedule::Absolute { amount: Money::from_major(10) };
        let inc = compute_min_increment(&lic(), Some(&record(140, 2)), &schedule);
        assert_eq!(Money::from_major(140) + inc, Money::from_major(150));
    }

    #[test]
    fn percent_of_standing() {
        let schedule = IncrementSchedule::Percent { fraction: 0.10 };
        assert_eq!(compute_min_increment(&lic(), Some(&record(100, 1)), &schedule), Money::from_major(10));
    }

    #[test]
    fn activity_scaled_hand_computed() {
        // 0.05 × 200 × 3 = 30
        let schedule = IncrementSchedule::ActivityScaled { base_fraction: 0.05 };
        let inc = compute_min_increment(&lic(), Some(&record(200, 3)), &schedule);
        assert_eq!(inc, Money::from_major(30));
        // the multiplier saturates at 4: 0.05 × 200 × 4 = 40
        let capped = compute_min_increment(&lic(), Some(&record(200, 9)), &schedule);
        assert_eq!(capped, Money::from_major(40));
        // quiet previous round still counts as 1
        let quiet = compute_min_increment(&lic(), Some(&record(200, 0)), &schedule);
        assert_eq!(quiet, Money::from_major(10));
    }

    #[test]
    fn first_round_uses_reserve_as_base() {
        let schedule = IncrementSchedule::Percent { fraction: 0.10 };
        assert_eq!(compute_min_increment(&lic(), None, &schedule), Money::from_major(10));
        assert_eq!(
            min_next_bid(Money::from_major(100), None, 0, &schedule),
            Money::from_major(100)
        );
    }

    #[test]
    fn fractional_increment_is_never_zero() {
        let schedule = IncrementSchedule::Percent { fraction: 0.01 };
        let free = License::new("f", 1.0, 1, "r");
        assert_eq!(compute_min_increment(&free, None, &schedule), Money::from_minor(1));
    }
}
