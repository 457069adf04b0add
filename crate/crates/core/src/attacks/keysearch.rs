//! Exhaustive seed recovery from binarized outcomes under known plaintext.
//!
//! For a candidate seed the attacker predicts `l̂_i = x_i ⊕ k̃(r_i)` and
//! scores the Hamming agreement with the observed `l`. Since `k̃(r_i)` is a
//! single bit of an LFSR output, the prediction is GF(2)-linear in the
//! seed: the search walks all seeds in Gray-code order and updates the
//! predicted parity vector with one XOR of a precomputed column per step.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::keystream::{EncBox, LfsrSpec, RunningKeyStream, SeedKey};
use crate::rng::{Purpose, RngStream};

use super::ktilde;

/// Largest seed length searched exhaustively.
pub const MAX_SEARCH_KLEN: u32 = 24;

/// Low seed bits enumerated inside one parallel chunk.
const CHUNK_BITS: u32 = 12;

fn pack(bits: impl Iterator<Item = bool>, words: usize) -> Vec<u64> {
    let mut out = vec![0u64; words];
    for (i, b) in bits.enumerate() {
        if b {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

/// Parity bits `k̃(r_i)` for `n` qumodes of the stream seeded with `seed`.
fn parity_vector(spec: &LfsrSpec, seed: &SeedKey, c: &Constellation, n: usize) -> Result<Vec<u64>> {
    let mut ks = RunningKeyStream::new(spec.clone(), seed)?;
    let words = n.div_ceil(64);
    Ok(pack((0..n).map(|_| ktilde(ks.next_basis(c))), words))
}

fn xor_into(acc: &mut [u64], v: &[u64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a ^= b;
    }
}

fn agreement(pred: &[u64], target: &[u64], n: usize) -> u32 {
    let diff: u32 = pred.iter().zip(target).map(|(p, t)| (p ^ t).count_ones()).sum();
    n as u32 - diff
}

/// Scores every non-zero seed and returns `(seed, agreement)` sorted by
/// agreement descending, ties by seed ascending.
pub fn seed_recovery_bruteforce(
    l: &[bool],
    x: &[bool],
    spec: &LfsrSpec,
    c: &Constellation,
) -> Result<Vec<(u64, u32)>> {
    let d = spec.degree;
    if d > MAX_SEARCH_KLEN {
        return Err(Error::ResourceLimit(format!(
            "exhaustive search over 2^{d} seeds exceeds the 2^{MAX_SEARCH_KLEN} budget"
        )));
    }
    if l.len() != x.len() {
        return Err(Error::domain("observed and known-plaintext sequences differ in length"));
    }
    let n = l.len();
    let words = n.div_ceil(64);
    // agreement is counted against l ⊕ x, the observed parity sequence
    let target = pack(l.iter().zip(x).map(|(&a, &b)| a ^ b), words);
    let columns: Vec<Vec<u64>> = (0..d)
        .map(|j| parity_vector(spec, &SeedKey::from_u64(1 << j, d)?, c, n))
        .collect::<Result<_>>()?;

    let low_bits = d.min(CHUNK_BITS);
    let high_count = 1u64 << (d - low_bits);
    let mut scored: Vec<(u64, u32)> = (0..high_count)
        .into_par_iter()
        .flat_map_iter(|high| {
            let mut pred = vec![0u64; words];
            for j in low_bits..d {
                if (high >> (j - low_bits)) & 1 == 1 {
                    xor_into(&mut pred, &columns[j as usize]);
                }
            }
            let base = high << low_bits;
            let mut out = Vec::with_capacity(1 << low_bits);
            let mut gray = 0u64;
            for i in 0..(1u64 << low_bits) {
                if i > 0 {
                    let j = i.trailing_zeros();
                    xor_into(&mut pred, &columns[j as usize]);
                    gray ^= 1 << j;
                }
                let seed = base | gray;
                if seed != 0 {
                    out.push((seed, agreement(&pred, &target, n)));
                }
            }
            out
        })
        .collect();
    scored.sort_unstable_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(scored)
}

/// 1-based position of `seed` in a ranked list.
pub fn rank_of(ranked: &[(u64, u32)], seed: u64) -> Option<usize> {
    ranked.iter().position(|&(s, _)| s == seed).map(|p| p + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryStats {
    pub trials: u32,
    /// Trials where the true seed ranked first.
    pub rank1: u32,
    /// Mean of `(rank - 1) / (2^|K| - 2)`, 0 for always-first.
    pub mean_normalized_rank: f64,
}

/// What the attacker observes in a recovery trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Observation {
    /// `l = x ⊕ k̃(r)` with each bit flipped independently with probability `p`.
    Noisy(f64),
    /// Independent fair coins, unrelated to the key.
    CoinFlips,
}

/// Repeated known-plaintext seed recovery with random true seeds and data.
///
/// Trial `t` draws everything from substream `t` of `master_seed`.
pub fn seed_recovery_trials(
    spec: &LfsrSpec,
    c: &Constellation,
    n: usize,
    obs: Observation,
    trials: u32,
    master_seed: u64,
) -> Result<RecoveryStats> {
    if let Observation::Noisy(p) = obs {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("noise probability {p} outside [0, 1]")));
        }
    }
    let d = spec.degree;
    let space = (1u64 << d) - 1;
    let mut rank1 = 0;
    let mut rank_sum = 0.0;
    for t in 0..trials {
        let mut rng = RngStream::for_block(master_seed, u64::from(t), Purpose::Aux);
        let true_seed = 1 + rng.below(space);
        let seed = SeedKey::from_u64(true_seed, d)?;
        let mut ks = RunningKeyStream::new(spec.clone(), &seed)?;
        let x: Vec<bool> = (0..n).map(|_| rng.bit()).collect();
        let l: Vec<bool> = x
            .iter()
            .map(|&xi| {
                let clean = xi ^ ktilde(ks.next_basis(c));
                match obs {
                    Observation::Noisy(p) => clean ^ rng.bernoulli(p),
                    Observation::CoinFlips => rng.bit(),
                }
            })
            .collect();
        let ranked = seed_recovery_bruteforce(&l, &x, spec, c)?;
        let rank = rank_of(&ranked, true_seed).expect("true seed is non-zero");
        if rank == 1 {
            rank1 += 1;
        }
        rank_sum += (rank - 1) as f64 / (space - 1).max(1) as f64;
    }
    Ok(RecoveryStats {
        trials,
        rank1,
        mean_normalized_rank: if trials == 0 { 0.0 } else { rank_sum / f64::from(trials) },
    })
}
