//! Information-theoretic audits of the cipher.
//!
//! * exact conditional entropies of tiny cipher instances by enumeration
//!   ([`tiny`]);
//! * the quantized heterodyne channel used by that enumeration ([`sectors`]);
//! * per-symbol posterior bit entropy of heterodyne outcomes, with and
//!   without the running key ([`posterior`]);
//! * Toeplitz-hash privacy amplification ([`amplify`]) and key-rate
//!   accounting ([`rates`]).

pub mod amplify;
pub mod posterior;
pub mod rates;
pub mod sectors;
pub mod tiny;

pub use amplify::privacy_amplify;
pub use posterior::{posterior_bit_entropy, posterior_bit_entropy_for_basis};
pub use rates::{key_rate, KeyRate, RateMethod};
pub use sectors::{noiseless_sector, sector_probabilities};
pub use tiny::{exact_cipher_entropies, EntropyReport, NoiseModel, Prior, TinyCipherSpec, TinyEnc};

use crate::error::{Error, Result};

/// Probabilities below this contribute nothing to an entropy sum.
pub const ENTROPY_FLOOR: f64 = 1e-300;

/// `h(p) = -p log₂ p - (1-p) log₂(1-p)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("probability {p} outside [0, 1]")));
    }
    Ok(plogp(p) + plogp(1.0 - p))
}

/// `-p log₂ p`, zero at and below [`ENTROPY_FLOOR`].
#[inline]
pub(crate) fn plogp(p: f64) -> f64 {
    if p <= ENTROPY_FLOOR {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Shannon entropy in bits of an (unnormalized is not allowed) distribution.
pub(crate) fn entropy(dist: &[f64]) -> f64 {
    dist.iter().map(|&p| plogp(p)).sum()
}
