//! Exhaustive welfare maximisation used as ground truth for efficiency.
//!
//! Every assignment of licenses to (bidder | unsold) is covered: a dynamic
//! program over bidders and license subsets computes the optimum exactly, and
//! the reported allocation is the lexicographically smallest maximiser, read
//! license by license in id order with "unsold" ranked before any bidder and
//! bidders ranked by id.

use std::collections::BTreeMap;

use super::{Bidder, BidderId, CompiledValuation, License, LicenseId, LicenseIndex, Money, ValuationProfile};
use crate::error::{Error, Result};

pub const ORACLE_MAX_LICENSES: usize = 12;
pub const ORACLE_MAX_BIDDERS: usize = 8;

const NEG: i64 = i64::MIN / 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WelfareSolution {
    pub allocation: BTreeMap<LicenseId, Option<BidderId>>,
    pub welfare: Money,
}

/// Maximum-welfare allocation respecting per-region bandwidth caps.
pub fn optimal_allocation(
    licenses: &[License],
    bidders: &[Bidder],
    profiles: &[ValuationProfile],
) -> Result<WelfareSolution> {
    if licenses.len() > ORACLE_MAX_LICENSES || bidders.len() > ORACLE_MAX_BIDDERS {
        return Err(Error::OracleBoundExceeded {
            licenses: licenses.len(),
            bidders: bidders.len(),
        });
    }
    let instance = Instance::build(licenses, bidders, profiles)?;
    let n = instance.n;
    let all = (1u64 << n) - 1;
    let mut forced = vec![0u64; instance.m];
    let welfare = instance
        .best(all, &forced)
        .ok_or_else(|| Error::Internal("no feasible allocation".into()))?;

    let mut free = all;
    let mut chosen: Vec<Option<usize>> = Vec::with_capacity(n);
    for license in 0..n {
        free &= !(1 << license);
        let mut picked = None;
        for cand in std::iter::once(None).chain((0..instance.m).map(Some)) {
            if let Some(k) = cand {
                forced[k] |= 1 << license;
            }
            if instance.best(free, &forced) == Some(welfare) {
                picked = Some(cand);
                break;
            }
            if let Some(k) = cand {
                forced[k] &= !(1 << license);
            }
        }
        let picked = picked.ok_or_else(|| Error::Internal("oracle reconstruction failed".into()))?;
        chosen.push(picked);
    }

    let allocation = instance
        .license_ids
        .ids()
        .iter()
        .zip(chosen)
        .map(|(l, w)| (l.clone(), w.map(|k| instance.bidder_ids[k].clone())))
        .collect();
    Ok(WelfareSolution {
        allocation,
        welfare: Money::from_minor(welfare),
    })
}

struct Instance {
    n: usize,
    m: usize,
    license_ids: LicenseIndex,
    bidder_ids: Vec<BidderId>,
    values: Vec<Vec<Money>>,
    feasible: Vec<Vec<bool>>,
}

impl Instance {
    fn build(licenses: &[License], bidders: &[Bidder], profiles: &[ValuationProfile]) -> Result<Self> {
        let index = LicenseIndex::new(licenses);
        let n = index.len();
        let by_id: BTreeMap<&LicenseId, &License> = licenses.iter().map(|l| (&l.id, l)).collect();
        let ordered: Vec<&License> = index.ids().iter().map(|id| by_id[id]).collect();

        let mut sorted_bidders: Vec<&Bidder> = bidders.iter().collect();
        sorted_bidders.sort_by(|a, b| a.id.cmp(&b.id));

        let mut values = Vec::with_capacity(sorted_bidders.len());
        let mut feasible = Vec::with_capacity(sorted_bidders.len());
        for bidder in &sorted_bidders {
            let table = match profiles.iter().find(|p| p.bidder_id == bidder.id) {
                Some(p) => CompiledValuation::compile(p, &index)?.table(n),
                None => vec![Money::ZERO; 1 << n],
            };
            values.push(table);
            feasible.push((0..1u64 << n).map(|mask| within_cap(&ordered, mask, bidder)).collect());
        }
        Ok(Instance {
            n,
            m: sorted_bidders.len(),
            license_ids: index,
            bidder_ids: sorted_bidders.iter().map(|b| b.id.clone()).collect(),
            values,
            feasible,
        })
    }

    /// Best welfare when licenses in `free` may go anywhere, `forced[k]` must go
    /// to bidder k, and everything else is unsold.
    fn best(&self, free: u64, forced: &[u64]) -> Option<i64> {
        let mut g = vec![NEG; 1 << self.n];
        for s in submasks(free) {
            g[s as usize] = 0;
        }
        for k in 0..self.m {
            let fk = forced[k];
            let mut next = vec![NEG; 1 << self.n];
            for s in submasks(free) {
                let mut best = NEG;
                for t in submasks(s) {
                    let bundle = (t | fk) as usize;
                    if !self.feasible[k][bundle] {
                        continue;
                    }
                    let rest = g[(s ^ t) as usize];
                    if rest == NEG {
                        continue;
                    }
                    best = best.max(rest + self.values[k][bundle].minor());
                }
                next[s as usize] = best;
            }
            g = next;
        }
        let w = g[free as usize];
        (w != NEG).then_some(w)
    }
}

pub(crate) fn within_cap(ordered: &[&License], mask: u64, bidder: &Bidder) -> bool {
    let Some(cap) = bidder.bandwidth_cap_mhz else {
        return true;
    };
    let mut per_region: BTreeMap<&str, f64> = BTreeMap::new();
    for (i, l) in ordered.iter().enumerate() {
        if mask >> i & 1 == 1 {
            *per_region.entry(l.region_id.as_str()).or_default() += l.bandwidth_mhz;
        }
    }
    per_region.values().all(|&bw| bw <= cap + 1e-9)
}

/// All submasks of `mask`, including 0 and `mask` itself.
fn submasks(mask: u64) -> impl Iterator<Item = u64> {
    let mut next = Some(mask);
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 { None } else { Some((cur - 1) & mask) };
        Some(cur)
    })
}
