//! Toeplitz universal hashing over GF(2).
//!
//! For input length `n` and output length `k` the hash seed `s` has
//! `n + k - 1` bits and defines `T[i][j] = s[j - i + k - 1]`: the first row
//! is `s[k-1..n+k-1]` and the first column, read downwards, is
//! `s[k-1], s[k-2], …, s[0]`. The output is `T · bits`.

use crate::error::{Error, Result};

fn pack(bits: &[bool]) -> Vec<u64> {
    let mut out = vec![0u64; bits.len().div_ceil(64) + 1];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 64] |= 1 << (i % 64);
        }
    }
    out
}

/// 64 bits of `words` starting at bit `offset`.
#[inline]
fn window(words: &[u64], offset: usize) -> u64 {
    let q = offset / 64;
    let r = offset % 64;
    let lo = words.get(q).copied().unwrap_or(0);
    if r == 0 {
        lo
    } else {
        let hi = words.get(q + 1).copied().unwrap_or(0);
        (lo >> r) | (hi << (64 - r))
    }
}

pub fn privacy_amplify(bits: &[bool], out_len: usize, hash_seed: &[bool]) -> Result<Vec<bool>> {
    let n = bits.len();
    if out_len == 0 {
        return Ok(Vec::new());
    }
    if out_len > n {
        return Err(Error::domain(format!("output length {out_len} exceeds input length {n}")));
    }
    if hash_seed.len() != n + out_len - 1 {
        return Err(Error::domain(format!(
            "hash seed has {} bits, needs {}",
            hash_seed.len(),
            n + out_len - 1
        )));
    }
    let x = pack(bits);
    let s = pack(hash_seed);
    let words = n.div_ceil(64);
    Ok((0..out_len)
        .map(|i| {
            let offset = out_len - 1 - i;
            let mut acc = 0u64;
            for w in 0..words {
                acc ^= window(&s, offset + 64 * w) & x[w];
            }
            acc.count_ones() & 1 == 1
        })
        .collect())
}

/// Parses `0`/`1` characters, ignoring whitespace.
pub fn parse_bits(text: &str) -> Result<Vec<bool>> {
    text.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(Error::domain(format!("unexpected character `{other}` in bit string"))),
        })
        .collect()
}

/// Expands hex digits to bits, most-significant bit of each digit first.
pub fn hex_to_bits(hex: &str) -> Result<Vec<bool>> {
    let digits = hex.trim().trim_start_matches("0x");
    digits
        .chars()
        .map(|c| {
            c.to_digit(16)
                .ok_or_else(|| Error::domain(format!("bad hex digit `{c}`")))
        })
        .try_fold(Vec::with_capacity(digits.len() * 4), |mut acc, d| {
            let d = d?;
            acc.extend((0..4).rev().map(|i| (d >> i) & 1 == 1));
            Ok(acc)
        })
}
