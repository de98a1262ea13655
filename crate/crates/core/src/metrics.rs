//! Measurements over outcomes: revenue, efficiency against the welfare
//! oracle, duration, winner's-curse gaps, collusion verdicts and Monte Carlo
//! revenue estimates.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::{run_agents, MechanismConfig};
use crate::model::{AuctionOutcome, Bidder, BidderId, License, LicenseId, MechanismKind, Money, ValuationProfile};
use crate::scenarios::Scenario;
use crate::strategies::{unilateral_deviation_gain, CartelAgreement, DefectTrigger, DeviationReport, StrategyPolicy};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub mechanism: MechanismKind,
    pub seed: u64,
    /// Sum of credit-adjusted payments.
    pub revenue: Money,
    pub welfare_achieved: Money,
    /// `None` when the scenario is beyond the oracle's bounds.
    pub welfare_optimal: Option<Money>,
    pub efficiency: Option<f64>,
    pub rounds: u64,
    pub raise_rounds: u64,
    /// Top bid minus second bid per license (sealed formats only).
    pub winners_curse_gap: BTreeMap<LicenseId, Money>,
    pub unsold_count: usize,
}

/// Scores `outcome` against `scenario`'s valuations.
pub fn score(outcome: &AuctionOutcome, scenario: &Scenario) -> MetricsReport {
    let welfare_achieved: Money = scenario
        .bidders
        .iter()
        .map(|b| scenario.profile_or_empty(&b.id).value_of(&outcome.won_bundle(&b.id)))
        .sum();
    let welfare_optimal = scenario.optimal_allocation().ok().map(|s| s.welfare);
    let efficiency = welfare_optimal.map(|opt| efficiency(welfare_achieved, opt));
    let mut gaps = BTreeMap::new();
    if outcome.mechanism.is_sealed() {
        if let Some(record) = outcome.history.first() {
            for (l, r) in &record.licenses {
                if let (Some(top), Some(second), Some(_)) = (r.standing_high_bid, r.runner_up_bid, outcome.winner(l.as_str())) {
                    gaps.insert(l.clone(), top - second);
                }
            }
        }
    }
    MetricsReport {
        mechanism: outcome.mechanism,
        seed: outcome.seed,
        revenue: outcome.revenue(),
        welfare_achieved,
        welfare_optimal,
        efficiency,
        rounds: outcome.rounds_elapsed,
        raise_rounds: outcome.raise_rounds,
        winners_curse_gap: gaps,
        unsold_count: outcome.unsold_count(),
    }
}

/// Achieved over optimal welfare, 1 when both are zero, clamped to [0, 1].
pub fn efficiency(achieved: Money, optimal: Money) -> f64 {
    if optimal <= Money::ZERO {
        return 1.0;
    }
    (achieved.minor() as f64 / optimal.minor() as f64).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Sustainable,
    Breaks,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Sustainable => "SUSTAINABLE",
            Verdict::Breaks => "BREAKS",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CollusionReport {
    pub mechanism: MechanismKind,
    pub verdict: Verdict,
    /// One search per cartel member, in id order.
    pub deviations: Vec<DeviationReport>,
    /// Index into `deviations` of the largest positive gain, if any.
    pub witness: Option<usize>,
}

impl CollusionReport {
    pub fn max_gain(&self) -> Money {
        self.deviations.iter().map(|d| d.gain).max().unwrap_or(Money::ZERO)
    }

    /// The deviation that breaks the cartel, as readable lines: who deviates,
    /// how, the utility comparison and the deviator's accepted bids.
    pub fn witness_trace(&self) -> Vec<String> {
        let Some(d) = self.witness.map(|i| &self.deviations[i]) else {
            return Vec::new();
        };
        let Some(outcome) = &d.best_outcome else {
            return Vec::new();
        };
        let mut lines = vec![
            format!(
                "{} deviates from {} to {}",
                d.deviator,
                d.baseline_policy.name(),
                d.best_alternative.as_ref().map_or("-", |p| p.name())
            ),
            format!(
                "utility {} (cartel) -> {} (deviation), gain {}",
                d.baseline_utility, d.best_utility, d.gain
            ),
        ];
        for c in &outcome.closings {
            lines.push(format!(
                "cycle {} position {}: {} closes to {} at {}",
                c.cycle_index,
                c.position,
                c.license_id,
                c.winner.as_ref().map_or("nobody", |w| w.as_str()),
                c.price.map_or("-".to_owned(), |p| p.to_string())
            ));
        }
        for b in outcome.bids.iter().filter(|b| b.bidder_id == d.deviator) {
            lines.push(format!(
                "round {} cycle {}: {} bids {} on {}",
                b.round_index, b.cycle_index, b.bidder_id, b.amount, b.license_id
            ));
        }
        lines
    }
}

/// Largest `AfterRound` trigger tried in the deviation search.
pub const DEVIATION_ROUND_HORIZON: u64 = 3;

/// The declared deviation set for a cartel member: defect once the member's
/// own licenses have closed, at once, or after rounds 1 to 3; or abandon the
/// cartel and bid straightforwardly throughout.
pub fn declared_alternatives(agreement: &CartelAgreement) -> Vec<StrategyPolicy> {
    let mut triggers = vec![DefectTrigger::OwnDesignatedClosed, DefectTrigger::Immediately];
    triggers.extend((1..=DEVIATION_ROUND_HORIZON).map(|round| DefectTrigger::AfterRound { round }));
    let mut out: Vec<StrategyPolicy> = triggers
        .into_iter()
        .map(|trigger| StrategyPolicy::CartelDefector {
            agreement: agreement.clone(),
            trigger,
        })
        .collect();
    out.push(StrategyPolicy::StraightforwardAscending);
    out
}

/// Whether `cartel` survives unilateral deviation under `config`: every
/// member plays [`StrategyPolicy::CartelMember`], non-members keep their
/// assigned policies, and each member in turn tries the declared
/// alternatives. Certified only relative to that set.
pub fn collusion_viability(scenario: &Scenario, cartel: &CartelAgreement, config: &MechanismConfig) -> Result<CollusionReport> {
    let mut s = scenario.clone();
    s.mechanism = config.clone();
    let mut profile = scenario.strategy_assignments.clone();
    for m in &cartel.members {
        if s.bidder(m).is_none() {
            return Err(Error::Input(format!("cartel member {m} is not a bidder")));
        }
        profile.insert(m.clone(), StrategyPolicy::CartelMember { agreement: cartel.clone() });
    }
    let mut deviations = Vec::new();
    if cartel.members.len() >= 2 {
        let alternatives = declared_alternatives(cartel);
        for m in &cartel.members {
            deviations.push(unilateral_deviation_gain(&s, &profile, m, &alternatives)?);
        }
    }
    let witness = deviations
        .iter()
        .enumerate()
        .filter(|(_, d)| d.gain > Money::ZERO)
        .max_by(|a, b| a.1.gain.cmp(&b.1.gain).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i);
    Ok(CollusionReport {
        mechanism: config.kind,
        verdict: if witness.is_some() { Verdict::Breaks } else { Verdict::Sustainable },
        deviations,
        witness,
    })
}

/// IID private-value distribution for Monte Carlo revenue experiments.
/// Values are in abstract value units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ValueDistribution {
    Uniform { lo: f64, hi: f64 },
    Degenerate { value: f64 },
}

impl ValueDistribution {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match *self {
            ValueDistribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            ValueDistribution::Degenerate { value } => value,
        }
    }

    /// Symmetric equilibrium bid in a first-price sealed-bid auction with
    /// `n` bidders: `lo + (v − lo)(n − 1)/n` for uniform values.
    pub fn fpsb_equilibrium_bid(&self, value: f64, n: usize) -> f64 {
        match *self {
            ValueDistribution::Uniform { lo, .. } => lo + (value - lo) * (n as f64 - 1.0) / n as f64,
            ValueDistribution::Degenerate { .. } => value,
        }
    }
}

/// Minor money units per value unit in Monte Carlo runs.
pub const VALUE_SCALE: f64 = 1_000_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevenueEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_draws: usize,
}

/// Mean single-license revenue (in value units) over `n_draws` seeded value
/// draws for `n_bidders` bidders. FPSB bidders shade to the symmetric
/// equilibrium bid; Vickrey bidders bid their value.
pub fn monte_carlo_revenue(
    config: &MechanismConfig,
    distribution: ValueDistribution,
    n_bidders: usize,
    n_draws: usize,
    seed: u64,
) -> Result<RevenueEstimate> {
    if !config.kind.is_sealed() {
        return Err(Error::Input("Monte Carlo revenue runs sealed formats only".into()));
    }
    if n_bidders == 0 || n_draws < 2 {
        return Err(Error::Input("need at least one bidder and two draws".into()));
    }
    if let ValueDistribution::Uniform { lo, hi } = distribution {
        if !(lo.is_finite() && hi.is_finite() && lo < hi && lo >= 0.0) {
            return Err(Error::Input(format!("bad uniform bounds [{lo}, {hi}]")));
        }
    }
    let ids: Vec<String> = (0..n_bidders).map(|i| format!("b{i}")).collect();
    let mut scenario = Scenario::new("monte_carlo");
    scenario.licenses = vec![License::new("L", 1.0, 1, "r")];
    scenario.bidders = ids.iter().map(|id| Bidder::new(id)).collect();
    scenario.mechanism = config.clone();

    let to_money = |x: f64| Money::from_minor((x * VALUE_SCALE).round() as i64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut revenues = Vec::with_capacity(n_draws);
    for draw in 0..n_draws {
        let values: Vec<f64> = (0..n_bidders).map(|_| distribution.draw(&mut rng)).collect();
        scenario.valuations = ids
            .iter()
            .zip(&values)
            .map(|(id, &v)| ValuationProfile::new(id).with_value("L", to_money(v)))
            .collect();
        scenario.mechanism.tie_break_seed = Some(seed.wrapping_add(draw as u64));
        let policy = |v: f64| match config.kind {
            MechanismKind::Fpsb => {
                let bid = distribution.fpsb_equilibrium_bid(v, n_bidders);
                StrategyPolicy::ShadedSealed {
                    factor: if v > 0.0 { bid / v } else { 1.0 },
                }
            }
            _ => StrategyPolicy::TruthfulSealed,
        };
        scenario.strategy_assignments = ids
            .iter()
            .zip(&values)
            .map(|(id, &v)| (BidderId::from(id.as_str()), policy(v)))
            .collect();
        let mut agents = scenario.agents();
        let outcome = run_agents(&scenario, &mut agents, &scenario.mechanism)?;
        revenues.push(outcome.revenue().minor() as f64 / VALUE_SCALE);
    }
    let n = revenues.len() as f64;
    let mean = revenues.iter().sum::<f64>() / n;
    let var = revenues.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(RevenueEstimate {
        mean,
        stderr: (var / n).sqrt(),
        n_draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::run;
    use crate::scenarios::{build_scenario, fixture_outcome};

    #[test]
    fn swiss_fixture_revenue_is_the_price_sum() {
        let s = build_scenario("swiss_wll").unwrap();
        let m = score(&fixture_outcome("swiss_wll").unwrap(), &s);
        assert_eq!(m.revenue, Money::from_major(121 + 134 + 55));
    }

    #[test]
    fn threshold_fixture_is_eighty_percent_efficient() {
        let s = build_scenario("threshold_problem").unwrap();
        let m = score(&fixture_outcome("threshold_problem").unwrap(), &s);
        assert_eq!(m.welfare_achieved, Money::from_major(200));
        assert_eq!(m.welfare_optimal, Some(Money::from_major(250)));
        assert!((m.efficiency.unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(m.revenue, Money::from_major(180));
    }

    #[test]
    fn optimal_outcome_scores_one() {
        let s = build_scenario("vickrey_gap").unwrap();
        let m = score(&run(&s).unwrap(), &s);
        assert_eq!(m.efficiency, Some(1.0));
        assert_eq!(m.winners_curse_gap["L"], Money::from_major(5));
    }

    #[test]
    fn efficiency_definition() {
        assert_eq!(efficiency(Money::ZERO, Money::ZERO), 1.0);
        assert_eq!(efficiency(Money::from_major(1), Money::from_major(4)), 0.25);
    }

    #[test]
    fn one_member_cartel_is_degenerately_sustainable() {
        let s = build_scenario("claim1_collusion").unwrap();
        let mut cartel = s.cartel().unwrap().clone();
        cartel.members.remove(&BidderId::from("Y"));
        cartel.designated_winner.retain(|_, w| w.as_str() == "X");
        let r = collusion_viability(&s, &cartel, &s.mechanism).unwrap();
        assert_eq!(r.verdict, Verdict::Sustainable);
        assert!(r.deviations.is_empty());
    }

    #[test]
    fn degenerate_values_give_that_revenue() {
        let dist = ValueDistribution::Degenerate { value: 0.7 };
        for kind in [MechanismKind::Fpsb, MechanismKind::Vickrey] {
            let est = monte_carlo_revenue(&MechanismConfig::new(kind), dist, 3, 1000, 9).unwrap();
            assert!((est.mean - 0.7).abs() < 1e-9);
            assert!(est.stderr < 1e-9);
        }
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let dist = ValueDistribution::Uniform { lo: 0.0, hi: 1.0 };
        let c = MechanismConfig::new(MechanismKind::Vickrey);
        let a = monte_carlo_revenue(&c, dist, 2, 1000, 17).unwrap();
        let b = monte_carlo_revenue(&c, dist, 2, 1000, 17).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn ascending_formats_are_rejected() {
        let dist = ValueDistribution::Uniform { lo: 0.0, hi: 1.0 };
        let c = MechanismConfig::new(MechanismKind::Samr);
        assert!(monte_carlo_revenue(&c, dist, 2, 1000, 1).is_err());
    }
}
