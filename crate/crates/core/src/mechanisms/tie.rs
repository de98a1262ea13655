use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{BidderId, LicenseId};

/// ChaCha keyed by a digest of `(domain, seed, index, label)`; each key gets
/// its own independent stream so draws do not depend on call order.
fn keyed_rng(domain: &[u8], seed: u64, index: u64, label: &str) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(domain);
    h.update(seed.to_le_bytes());
    h.update(index.to_le_bytes());
    h.update(label.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    ChaCha8Rng::from_seed(key)
}

/// Uniform draw among tied bidders, keyed by `(seed, license, round)`.
/// Candidates are sorted first so the result ignores submission order.
pub fn resolve_tie(candidates: &[BidderId], license: &LicenseId, round: u64, seed: u64) -> Result<BidderId> {
    if candidates.is_empty() {
        return Err(Error::Internal(format!("tie-break on {license} with no candidates")));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() == 1 {
        return Ok(sorted.swap_remove(0));
    }
    let mut rng = keyed_rng(b"tie", seed, round, license.as_str());
    let pick = rng.random_range(0..sorted.len());
    Ok(sorted.swap_remove(pick))
}

/// Per-cycle random visiting order for HAMR.
pub(crate) fn shuffled_order(ids: &[LicenseId], seed: u64, cycle: u64) -> Vec<LicenseId> {
    let mut order = ids.to_vec();
    order.sort();
    order.shuffle(&mut keyed_rng(b"order", seed, cycle, ""));
    order
}
