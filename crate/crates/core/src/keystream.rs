//! Running-key generation (the ENC box).
//!
//! An [`EncBox`] turns a secret seed into an unbounded bit stream. The
//! default implementation is a Fibonacci LFSR over GF(2); [`CyclicKey`]
//! simply repeats the seed and is used by the tiny enumerable ciphers.
//!
//! LFSR conventions, fixed for reproducibility:
//!
//! * taps are the exponents of the connection polynomial
//!   `1 + Σ x^t`, so `x⁴ + x + 1` is `taps = [4, 1]`;
//! * the output sequence obeys `a[n] = ⊕_t a[n - t]`;
//! * the seed supplies `a[0..degree]`, seed bit `i` (LSB first) is `a[i]`,
//!   and `a[0]` is emitted first;
//! * basis indices are read most-significant bit first.

use serde::{Deserialize, Serialize};

use crate::constellation::{BasisIndex, Constellation};
use crate::error::{Error, Result};

pub const MAX_LFSR_DEGREE: u32 = 64;

/// Maximal-length tap sets for degrees 3 through 32.
const DEFAULT_TAPS: [&[u32]; 30] = [
    &[3, 2],
    &[4, 3],
    &[5, 3],
    &[6, 5],
    &[7, 6],
    &[8, 6, 5, 4],
    &[9, 5],
    &[10, 7],
    &[11, 9],
    &[12, 6, 4, 1],
    &[13, 4, 3, 1],
    &[14, 5, 3, 1],
    &[15, 14],
    &[16, 15, 13, 4],
    &[17, 14],
    &[18, 11],
    &[19, 6, 2, 1],
    &[20, 17],
    &[21, 19],
    &[22, 21],
    &[23, 18],
    &[24, 23, 22, 17],
    &[25, 22],
    &[26, 6, 2, 1],
    &[27, 5, 2, 1],
    &[28, 25],
    &[29, 27],
    &[30, 6, 4, 1],
    &[31, 28],
    &[32, 22, 2, 1],
];

/// The secret seed `K`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedKey {
    bits: Vec<bool>,
}

impl SeedKey {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Low `klen` bits of `value`, LSB first.
    pub fn from_u64(value: u64, klen: u32) -> Result<Self> {
        if klen > 64 {
            return Err(Error::domain(format!("klen {klen} does not fit a u64 seed")));
        }
        if klen < 64 && value >> klen != 0 {
            return Err(Error::domain(format!("seed {value:#x} wider than {klen} bits")));
        }
        Ok(Self {
            bits: (0..klen).map(|i| (value >> i) & 1 == 1).collect(),
        })
    }

    /// Parses a hex string (optional `0x`) as an integer and keeps `klen` bits.
    pub fn from_hex(hex: &str, klen: u32) -> Result<Self> {
        let digits = hex.trim().trim_start_matches("0x").trim_start_matches("0X");
        if digits.is_empty() {
            return Err(Error::config("seed", "empty hex string"));
        }
        let value = u128::from_str_radix(digits, 16)
            .map_err(|e| Error::config("seed", format!("bad hex `{hex}`: {e}")))?;
        if klen > 128 || (klen < 128 && value >> klen != 0) {
            return Err(Error::config("seed", format!("`{hex}` wider than {klen} bits")));
        }
        Ok(Self {
            bits: (0..klen).map(|i| (value >> i) & 1 == 1).collect(),
        })
    }

    pub fn klen(&self) -> u32 {
        self.bits.len() as u32
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    /// Packs the seed into an integer (LSB = first bit). `None` above 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(
            self.bits
                .iter()
                .enumerate()
                .fold(0u64, |acc, (i, &b)| acc | (u64::from(b) << i)),
        )
    }

    pub fn to_hex(&self) -> String {
        let mut v = 0u128;
        for (i, &b) in self.bits.iter().enumerate().take(128) {
            v |= u128::from(b) << i;
        }
        format!("{v:x}")
    }
}

/// Feedback structure of a Fibonacci LFSR.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LfsrSpec {
    pub degree: u32,
    pub taps: Vec<u32>,
}

impl LfsrSpec {
    pub fn new(degree: u32, mut taps: Vec<u32>) -> Result<Self> {
        if !(3..=MAX_LFSR_DEGREE).contains(&degree) {
            return Err(Error::config(
                "lfsr.degree",
                format!("must lie in [3, {MAX_LFSR_DEGREE}], got {degree}"),
            ));
        }
        if taps.is_empty() {
            return Err(Error::config("lfsr.taps", "tap set is empty"));
        }
        taps.sort_unstable_by(|a, b| b.cmp(a));
        taps.dedup();
        if taps[0] != degree {
            return Err(Error::config(
                "lfsr.taps",
                format!("highest tap must equal the degree {degree}, got {}", taps[0]),
            ));
        }
        if taps.contains(&0) {
            return Err(Error::config("lfsr.taps", "tap 0 is not allowed"));
        }
        Ok(Self { degree, taps })
    }

    /// Default maximal-length polynomial for `degree`.
    pub fn primitive(degree: u32) -> Result<Self> {
        match degree {
            3..=32 => Self::new(degree, DEFAULT_TAPS[(degree - 3) as usize].to_vec()),
            _ => Err(Error::config(
                "lfsr.taps",
                format!("no default polynomial for degree {degree}; supply taps"),
            )),
        }
    }

    /// Mask over the register (bit `i` = `a[n+i]`) selecting the feedback terms.
    fn feedback_mask(&self) -> u64 {
        self.taps
            .iter()
            .fold(0u64, |m, &t| m | (1u64 << (self.degree - t)))
    }

    /// Whether the connection polynomial is primitive, i.e. the register
    /// has period `2^degree - 1` from every non-zero seed.
    ///
    /// Factors `2^degree - 1` by trial division, so large degrees can take
    /// a while.
    pub fn is_primitive(&self) -> bool {
        let d = self.degree;
        // Characteristic polynomial x^d + Σ x^(d-t); the sequence period is the
        // multiplicative order of x modulo it.
        let mut poly: u128 = 1u128 << d;
        for &t in &self.taps {
            poly ^= 1u128 << (d - t);
        }
        let order: u128 = (1u128 << d) - 1;
        let x = 2u128;
        if gf2_pow_mod(x, order, poly, d) != 1 {
            return false;
        }
        prime_factors(order as u64)
            .into_iter()
            .all(|q| gf2_pow_mod(x, order / u128::from(q), poly, d) != 1)
    }
}

fn gf2_mul_mod(a: u128, b: u128, poly: u128, d: u32) -> u128 {
    let mut acc = 0u128;
    let mut a = a;
    let mut b = b;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        b >>= 1;
        a <<= 1;
        if (a >> d) & 1 == 1 {
            a ^= poly;
        }
    }
    acc
}

fn gf2_pow_mod(base: u128, mut exp: u128, poly: u128, d: u32) -> u128 {
    let mut result = 1u128;
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            result = gf2_mul_mod(result, b, poly, d);
        }
        b = gf2_mul_mod(b, b, poly, d);
        exp >>= 1;
    }
    result
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2u64;
    while p.saturating_mul(p) <= n {
        if n.is_multiple_of(p) {
            out.push(p);
            while n.is_multiple_of(p) {
                n /= p;
            }
        }
        p += if p == 2 { 1 } else { 2 };
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// A seed-driven bit source.
pub trait EncBox {
    fn next_bit(&mut self) -> bool;

    /// Reads `log₂(M/2)` bits, most-significant first, into a basis index.
    fn next_basis(&mut self, c: &Constellation) -> BasisIndex {
        let mut r = 0u32;
        for _ in 0..c.bits_per_basis() {
            r = (r << 1) | u32::from(self.next_bit());
        }
        BasisIndex(r)
    }
}

/// Fibonacci LFSR running-key generator.
///
/// Cloning snapshots the register, which is how parallel replays fork a
/// stream at a known position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunningKeyStream {
    spec: LfsrSpec,
    state: u64,
    mask: u64,
    emitted: u64,
}

impl RunningKeyStream {
    pub fn new(spec: LfsrSpec, seed: &SeedKey) -> Result<Self> {
        if seed.klen() != spec.degree {
            return Err(Error::config(
                "seed",
                format!("seed has {} bits, register needs {}", seed.klen(), spec.degree),
            ));
        }
        if seed.is_zero() {
            return Err(Error::config("seed", "all-zero seed gives a constant stream"));
        }
        let state = seed.to_u64().expect("degree <= 64");
        let mask = spec.feedback_mask();
        Ok(Self {
            spec,
            state,
            mask,
            emitted: 0,
        })
    }

    pub fn spec(&self) -> &LfsrSpec {
        &self.spec
    }

    /// Bits produced so far.
    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    /// Current register contents (bit `i` = next-but-`i` output).
    pub fn state(&self) -> u64 {
        self.state
    }

    #[inline]
    pub fn lfsr_next_bit(&mut self) -> bool {
        let out = self.state & 1 == 1;
        let fb = (self.state & self.mask).count_ones() as u64 & 1;
        self.state = (self.state >> 1) | (fb << (self.spec.degree - 1));
        self.emitted += 1;
        out
    }
}

impl EncBox for RunningKeyStream {
    #[inline]
    fn next_bit(&mut self) -> bool {
        self.lfsr_next_bit()
    }
}

/// Repeats the seed bits cyclically. Any seed, including zero, is valid.
#[derive(Debug, Clone)]
pub struct CyclicKey<'a> {
    bits: &'a [bool],
    pos: usize,
}

impl<'a> CyclicKey<'a> {
    pub fn new(seed: &'a SeedKey) -> Result<Self> {
        if seed.bits().is_empty() {
            return Err(Error::domain("cyclic key needs at least one bit"));
        }
        Ok(Self {
            bits: seed.bits(),
            pos: 0,
        })
    }
}

impl EncBox for CyclicKey<'_> {
    fn next_bit(&mut self) -> bool {
        let b = self.bits[self.pos];
        self.pos = (self.pos + 1) % self.bits.len();
        b
    }
}

/// `n` basis indices drawn from the LFSR seeded with `seed`.
pub fn running_key_sequence(
    seed: &SeedKey,
    spec: &LfsrSpec,
    n: usize,
    c: &Constellation,
) -> Result<Vec<BasisIndex>> {
    let mut stream = RunningKeyStream::new(spec.clone(), seed)?;
    Ok((0..n).map(|_| stream.next_basis(c)).collect())
}
