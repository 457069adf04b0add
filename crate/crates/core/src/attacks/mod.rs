//! Eve's attack suite.
//!
//! * the half-plane binarization that reduces each outcome to a single bit
//!   `l = x ⊕ k̃(r)`, and its error rate under heterodyne noise;
//! * full-resolution heterodyne decoding with and without the running key;
//! * brute-force seed recovery from binarized bits ([`keysearch`]);
//! * the running-key search complexity estimate.

pub mod keysearch;

use serde::{Deserialize, Serialize};

pub use crate::estimate::BerEstimate;
pub use crate::transcript::Transcript;
pub use keysearch::{seed_recovery_bruteforce, seed_recovery_trials, RecoveryStats, MAX_SEARCH_KLEN};

use crate::constellation::{BasisIndex, Constellation};
use crate::error::{Error, Result};
use crate::keystream::{EncBox, LfsrSpec, RunningKeyStream, SeedKey};
use crate::measurement::{q_function, ComplexPoint};

/// Upper half-plane (including the axis) → 0, lower → 1.
#[inline]
pub fn binarize(y: ComplexPoint) -> bool {
    y.im < 0.0
}

/// The key-dependent flip in `l = x ⊕ k̃(r)`: the parity of the basis.
///
/// Basis 0 lies on the decision axis; it still returns 0 but
/// [`ktilde_is_degenerate`] reports it.
#[inline]
pub fn ktilde(r: BasisIndex) -> bool {
    r.0 & 1 == 1
}

pub fn ktilde_is_degenerate(r: BasisIndex) -> bool {
    r.0 == 0
}

/// Number of qumodes where the binarized outcome disagrees with `x ⊕ k̃(r)`.
pub fn binarization_errors(t: &Transcript) -> u64 {
    t.y_eve
        .iter()
        .zip(&t.x)
        .zip(&t.r)
        .filter(|((&y, &x), &r)| binarize(y) != (x ^ ktilde(r)))
        .count() as u64
}

pub fn binarization_attack(t: &Transcript) -> Result<BerEstimate> {
    if t.is_empty() {
        return Err(Error::domain("empty transcript"));
    }
    Ok(BerEstimate::new(binarization_errors(t), t.len() as u64))
}

/// Order-of-magnitude binarization error rate `2/(π α₀)`.
pub fn eq4_estimate(alpha0: f64) -> Result<f64> {
    if !(alpha0 > 0.0) {
        return Err(Error::domain(format!("alpha0 must be positive, got {alpha0}")));
    }
    Ok(2.0 / (std::f64::consts::PI * alpha0))
}

/// Expected binarization error rate with uniformly chosen bases: the mean
/// over `r` of the axis-crossing probability `Q(√2 α₀ |sin θ_r|)`.
pub fn binarization_error_prediction(c: &Constellation) -> f64 {
    let amps = c.amplitudes();
    let nb = c.num_bases() as usize;
    let sum: f64 = amps[..nb]
        .iter()
        .map(|a| q_function(std::f64::consts::SQRT_2 * a.im.abs()))
        .sum();
    sum / nb as f64
}

/// Decodes Eve's outcomes at full resolution.
///
/// With the key, each outcome is assigned to the nearer state of its basis
/// pair (sign of the projection on the basis direction) and the bit error
/// rate is returned. Without it, the outcome is assigned to the nearest
/// state of the whole ring and the state-identification error rate is
/// returned.
pub fn heterodyne_keyed_decode(t: &Transcript, key_known: bool) -> Result<BerEstimate> {
    if t.is_empty() {
        return Err(Error::domain("empty transcript"));
    }
    Ok(BerEstimate::new(keyed_decode_errors(t, key_known), t.len() as u64))
}

pub fn keyed_decode_errors(t: &Transcript, key_known: bool) -> u64 {
    let c = &t.constellation;
    let m = c.size();
    if key_known {
        let unit = Constellation::new(m, 1.0).expect("valid size");
        let dirs = unit.amplitudes();
        t.y_eve
            .iter()
            .zip(&t.x)
            .zip(&t.r)
            .filter(|((y, &x), &r)| {
                let d = dirs[c.encode_unchecked(false, r.0) as usize];
                let proj = y.re * d.re + y.im * d.im;
                let decided = proj < 0.0;
                decided != x
            })
            .count() as u64
    } else {
        let step = std::f64::consts::TAU / f64::from(m);
        t.y_eve
            .iter()
            .zip(&t.l_sent)
            .filter(|(y, &l)| {
                let phi = y.im.atan2(y.re).rem_euclid(std::f64::consts::TAU);
                let nearest = ((phi / step).round() as u64 % u64::from(m)) as u32;
                nearest != l
            })
            .count() as u64
    }
}

/// Streams a fresh transcript through `count` block by block without
/// keeping it in memory. Returns `(errors, trials)`.
pub fn simulate_and_count<F>(
    c: &Constellation,
    bases: &[BasisIndex],
    master_seed: u64,
    count: F,
) -> Result<BerEstimate>
where
    F: Fn(&Transcript) -> u64 + Sync,
{
    let parts = Transcript::for_each_block(c, bases, None, master_seed, |t| (count(t), t.len() as u64))?;
    let (e, n) = parts.into_iter().fold((0, 0), BerEstimate::merge);
    Ok(BerEstimate::new(e, n))
}

/// Monte Carlo binarization attack: LFSR running key, uniform data,
/// heterodyne outcomes.
pub fn binarization_mc(
    c: &Constellation,
    spec: &LfsrSpec,
    seed: &SeedKey,
    n: usize,
    master_seed: u64,
) -> Result<BerEstimate> {
    let bases = basis_sequence(spec, seed, n, c)?;
    simulate_and_count(c, &bases, master_seed, binarization_errors)
}

fn basis_sequence(spec: &LfsrSpec, seed: &SeedKey, n: usize, c: &Constellation) -> Result<Vec<BasisIndex>> {
    let mut ks = RunningKeyStream::new(spec.clone(), seed)?;
    Ok((0..n).map(|_| ks.next_basis(c)).collect())
}

/// Known- or unknown-key heterodyne decoding on a simulated run.
pub fn keyed_decode_mc(
    c: &Constellation,
    spec: &LfsrSpec,
    seed: &SeedKey,
    n: usize,
    key_known: bool,
    master_seed: u64,
) -> Result<BerEstimate> {
    let bases = basis_sequence(spec, seed, n, c)?;
    simulate_and_count(c, &bases, master_seed, |t| keyed_decode_errors(t, key_known))
}

/// Known-plaintext (`λ = 1`) or ciphertext-only (`λ = 2`) attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttackKind {
    KnownPlaintext,
    CiphertextOnly,
}

impl AttackKind {
    pub fn lambda(self) -> f64 {
        match self {
            AttackKind::KnownPlaintext => 1.0,
            AttackKind::CiphertextOnly => 2.0,
        }
    }

    pub fn from_lambda(lambda: u8) -> Result<Self> {
        match lambda {
            1 => Ok(AttackKind::KnownPlaintext),
            2 => Ok(AttackKind::CiphertextOnly),
            _ => Err(Error::domain(format!("lambda must be 1 or 2, got {lambda}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Complexity {
    pub log2_c: f64,
    /// Set when `λM/(√2 π α₀) ≤ 1`; the estimate is then meaningless.
    pub degenerate: bool,
}

/// `log₂ C` with `C = (λM / (√2 π α₀))^{|K| / log₂(M/2)}`.
pub fn search_complexity(m: u32, alpha0: f64, klen: u32, kind: AttackKind) -> Result<Complexity> {
    let c = Constellation::new(m, alpha0)?;
    if !(alpha0 > 0.0) {
        return Err(Error::domain("alpha0 must be positive"));
    }
    let bits = c.bits_per_basis();
    if klen < bits {
        return Err(Error::domain(format!("|K| = {klen} is below log2(M/2) = {bits}")));
    }
    let base = kind.lambda() * f64::from(m) / (std::f64::consts::SQRT_2 * std::f64::consts::PI * alpha0);
    let log2_c = f64::from(klen) / f64::from(bits) * base.log2();
    Ok(Complexity {
        log2_c,
        degenerate: base <= 1.0 + 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn binarize_examples() {
        assert!(!binarize(ComplexPoint::new(1.0, 2.0)));
        assert!(binarize(ComplexPoint::new(1.0, -0.1)));
        assert!(!binarize(ComplexPoint::new(-3.0, 0.0)));
    }

    #[test]
    fn prediction_matches_integrated_tail() {
        use crate::quadrature::{integrate_1d, QuadOptions};
        // N(0, 1/2) density of the imaginary quadrature, integrated past the axis
        let density = |t: f64| (-t * t).exp() / std::f64::consts::PI.sqrt();
        for (m, alpha0) in [(128u32, 10.0), (128, 50.0), (16, 1.5), (64, 200.0)] {
            let half = m / 2;
            let mut sum = 0.0;
            for r in 0..half {
                let d = alpha0 * (std::f64::consts::TAU * f64::from(r) / f64::from(m)).sin().abs();
                let tail = integrate_1d(density, &[d, d + 2.0, d + 40.0], QuadOptions::default())
                    .unwrap()
                    .value;
                sum += tail;
            }
            let oracle = sum / f64::from(half);
            let c = Constellation::new(m, alpha0).unwrap();
            let got = binarization_error_prediction(&c);
            assert!((got - oracle).abs() < 1e-8, "M={m} a0={alpha0}: {got} vs {oracle}");
        }
    }

    #[test]
    fn ktilde_examples() {
        assert!(ktilde(BasisIndex(1)));
        assert!(!ktilde(BasisIndex(2)));
        assert!(!ktilde(BasisIndex(0)));
        assert!(ktilde_is_degenerate(BasisIndex(0)));
        assert!(!ktilde_is_degenerate(BasisIndex(5)));
        // noise-free check behind the r = 1 and r = 2 values
        let c = Constellation::new(16, 1.0).unwrap();
        let l = c.encode(false, BasisIndex(1)).unwrap();
        assert!(binarize(c.state_amplitude(l).unwrap()));
        for b in [false, true] {
            let l = c.encode(b, BasisIndex(2)).unwrap();
            assert_eq!(binarize(c.state_amplitude(l).unwrap()), b);
        }
    }

    #[test]
    fn eq4_examples() {
        assert!((eq4_estimate(200.0).unwrap() - 3.183e-3).abs() < 1e-6);
        let a = 2.0 / (std::f64::consts::PI * 0.01);
        assert!((eq4_estimate(a).unwrap() - 0.01).abs() < 1e-15);
        assert!(eq4_estimate(1e300).unwrap() < 1e-299);
        assert!(eq4_estimate(0.0).is_err());
        assert!(eq4_estimate(-1.0).is_err());
    }

    #[test]
    fn noise_free_reduction_is_exact() {
        let mut m = 4;
        while m <= 4096 {
            let c = Constellation::new(m, 200.0).unwrap();
            for r in 1..m / 2 {
                for x in [false, true] {
                    let l = c.encode(x, BasisIndex(r)).unwrap();
                    let y = c.state_amplitude(l).unwrap();
                    assert_eq!(binarize(y), x ^ ktilde(BasisIndex(r)), "M={m} r={r}");
                }
            }
            m *= 2;
        }
        let c = Constellation::new(64, 3.0).unwrap();
        let x: Vec<bool> = (0..500).map(|i| (i * 7) % 3 == 0).collect();
        let r: Vec<BasisIndex> = (0..500u32).map(|i| BasisIndex(1 + i % 31)).collect();
        let t = Transcript::noise_free(c, x, r).unwrap();
        assert_eq!(binarization_attack(&t).unwrap().errors, 0);
    }

    #[test]
    fn empty_transcript_rejected() {
        let t = Transcript::empty(Constellation::new(4, 1.0).unwrap());
        assert!(binarization_attack(&t).is_err());
        assert!(heterodyne_keyed_decode(&t, true).is_err());
    }

    #[test]
    fn complexity_examples() {
        let c1 = search_complexity(4096, 200.0, 4400, AttackKind::KnownPlaintext).unwrap();
        assert!((c1.log2_c - 881.8).abs() < 0.1, "{}", c1.log2_c);
        assert!(!c1.degenerate);
        let c2 = search_complexity(4096, 200.0, 4400, AttackKind::CiphertextOnly).unwrap();
        assert!((c2.log2_c - c1.log2_c - 400.0).abs() < 1e-9);
        let boundary = 4096.0 / (std::f64::consts::SQRT_2 * std::f64::consts::PI);
        let c3 = search_complexity(4096, boundary, 4400, AttackKind::KnownPlaintext).unwrap();
        assert!(c3.log2_c.abs() < 1e-9);
        assert!(c3.degenerate);
        assert!(search_complexity(4096, 200.0, 10, AttackKind::KnownPlaintext).is_err());
        assert!(search_complexity(4096, 0.0, 4400, AttackKind::KnownPlaintext).is_err());
        assert!(AttackKind::from_lambda(3).is_err());
    }

    #[test]
    fn keyed_decode_small_cases() {
        let c = Constellation::new(16, 200.0).unwrap();
        let spec = LfsrSpec::primitive(20).unwrap();
        let seed = SeedKey::from_u64(0x1234, 20).unwrap();
        let e = keyed_decode_mc(&c, &spec, &seed, 1_000_000, true, 3).unwrap();
        assert_eq!(e.errors, 0);
        // no signal: the key does not help
        let c0 = Constellation::new(16, 0.0).unwrap();
        let e0 = keyed_decode_mc(&c0, &spec, &seed, 200_000, true, 3).unwrap();
        assert!(e0.z_score(0.5).abs() < 4.0, "{e0:?}");
        // without key, state identification fails far more often at moderate S
        let c4 = Constellation::from_photon_number(16, 4.0).unwrap();
        let known = keyed_decode_mc(&c4, &spec, &seed, 200_000, true, 3).unwrap();
        let unknown = keyed_decode_mc(&c4, &spec, &seed, 200_000, false, 3).unwrap();
        assert!(unknown.p_hat > 10.0 * known.p_hat);
    }

    #[test]
    fn binarization_rate_drops_with_amplitude() {
        let spec = LfsrSpec::primitive(31).unwrap();
        let seed = SeedKey::from_u64(0x2468ace, 31).unwrap();
        let mut last = 1.0;
        for a in [10.0, 50.0, 200.0] {
            let c = Constellation::new(128, a).unwrap();
            let e = binarization_mc(&c, &spec, &seed, 500_000, 77).unwrap();
            assert!(e.p_hat < last, "alpha0={a}");
            last = e.p_hat;
        }
    }

    proptest! {
        #[test]
        fn complexity_monotone(
            log_m in 2u32..16,
            alpha0 in 1.0f64..50.0,
            klen_extra in 0u32..5000,
            d_alpha in 0.1f64..10.0,
            d_k in 1u32..100,
        ) {
            let m = 1u32 << log_m;
            let klen = (log_m - 1) + klen_extra;
            let base = search_complexity(m, alpha0, klen, AttackKind::KnownPlaintext).unwrap();
            prop_assume!(!base.degenerate);
            let more_k = search_complexity(m, alpha0, klen + d_k, AttackKind::KnownPlaintext).unwrap();
            let more_a = search_complexity(m, alpha0 + d_alpha, klen, AttackKind::KnownPlaintext).unwrap();
            let cto = search_complexity(m, alpha0, klen, AttackKind::CiphertextOnly).unwrap();
            prop_assert!(more_k.log2_c > base.log2_c);
            prop_assert!(more_a.log2_c < base.log2_c);
            prop_assert!(cto.log2_c > base.log2_c);
        }
    }
}
