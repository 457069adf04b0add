//! The M-point coherent-state ring and its interleaved bit mapping.
//!
//! States sit at angles `θ_ℓ = 2πℓ/M` with common amplitude `α₀`. The ring
//! is split into `M/2` bases; basis `r` is the antipodal pair `{r, r + M/2}`.
//! A data bit `b` sent in basis `r` uses state
//!
//! ```text
//! ℓ = r + (b ⊕ (r mod 2)) · M/2
//! ```
//!
//! so the logical label flips between neighbouring bases. Since `M/2` is
//! even, the labels alternate around the ring everywhere except across the
//! two boundaries `M/2 - 1 → M/2` and `M - 1 → 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a basis pair, in `[0, M/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisIndex(pub u32);

/// A point in the quadrature plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexAmplitude {
    pub re: f64,
    pub im: f64,
}

impl ComplexAmplitude {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

impl std::ops::Neg for ComplexAmplitude {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

/// Largest supported ring size.
pub const MAX_STATES: u32 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    m: u32,
    alpha0: f64,
}

impl Constellation {
    /// `m` must be a power of two in `[4, 2^20]`; `alpha0` finite and non-negative.
    pub fn new(m: u32, alpha0: f64) -> Result<Self> {
        if m < 4 || !m.is_power_of_two() || m > MAX_STATES {
            return Err(Error::domain(format!(
                "M must be a power of two in [4, {MAX_STATES}], got {m}"
            )));
        }
        if !alpha0.is_finite() || alpha0 < 0.0 {
            return Err(Error::domain(format!(
                "alpha0 must be finite and non-negative, got {alpha0}"
            )));
        }
        Ok(Self { m, alpha0 })
    }

    /// Builds the ring from a mean photon number, `α₀ = √S`.
    pub fn from_photon_number(m: u32, s: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(Error::domain(format!("S must be finite and non-negative, got {s}")));
        }
        Self::new(m, s.sqrt())
    }

    pub fn size(&self) -> u32 {
        self.m
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    /// Mean photon number `S = α₀²`.
    pub fn mean_photon_number(&self) -> f64 {
        self.alpha0 * self.alpha0
    }

    pub fn num_bases(&self) -> u32 {
        self.m / 2
    }

    /// Keystream bits consumed per basis choice, `log₂(M/2)`.
    pub fn bits_per_basis(&self) -> u32 {
        self.num_bases().trailing_zeros()
    }

    pub fn angle(&self, l: u32) -> f64 {
        std::f64::consts::TAU * f64::from(l) / f64::from(self.m)
    }

    fn check_state(&self, l: u32) -> Result<()> {
        if l >= self.m {
            return Err(Error::domain(format!("state index {l} out of range [0, {})", self.m)));
        }
        Ok(())
    }

    fn check_basis(&self, r: BasisIndex) -> Result<()> {
        if r.0 >= self.num_bases() {
            return Err(Error::domain(format!(
                "basis index {} out of range [0, {})",
                r.0,
                self.num_bases()
            )));
        }
        Ok(())
    }

    /// `α₀(cos θ_ℓ, sin θ_ℓ)`.
    ///
    /// The angle is reduced to the first quadrant before evaluating the
    /// trigonometric functions, so axis points are exact and antipodal
    /// states are exact negatives of each other.
    pub fn state_amplitude(&self, l: u32) -> Result<ComplexAmplitude> {
        self.check_state(l)?;
        Ok(self.amplitude_unchecked(l))
    }

    pub(crate) fn amplitude_unchecked(&self, l: u32) -> ComplexAmplitude {
        let quarter = self.m / 4;
        let quadrant = l / quarter;
        let offset = l % quarter;
        let phi = std::f64::consts::TAU * f64::from(offset) / f64::from(self.m);
        let (s, c) = if offset == 0 { (0.0, 1.0) } else { phi.sin_cos() };
        let a = self.alpha0;
        let (re, im) = match quadrant {
            0 => (c, s),
            1 => (-s, c),
            2 => (-c, -s),
            _ => (s, -c),
        };
        ComplexAmplitude::new(a * re, a * im)
    }

    /// Amplitudes of every state, indexed by `ℓ`.
    pub fn amplitudes(&self) -> Vec<ComplexAmplitude> {
        (0..self.m).map(|l| self.amplitude_unchecked(l)).collect()
    }

    /// Maps a data bit sent in basis `r` to its state index.
    pub fn encode(&self, bit: bool, r: BasisIndex) -> Result<u32> {
        self.check_basis(r)?;
        Ok(self.encode_unchecked(bit, r.0))
    }

    #[inline]
    pub(crate) fn encode_unchecked(&self, bit: bool, r: u32) -> u32 {
        let half = u32::from(bit) ^ (r & 1);
        r + half * (self.m / 2)
    }

    /// Inverse of [`encode`](Self::encode).
    pub fn decode(&self, l: u32) -> Result<(bool, BasisIndex)> {
        self.check_state(l)?;
        Ok(self.decode_unchecked(l))
    }

    #[inline]
    pub(crate) fn decode_unchecked(&self, l: u32) -> (bool, BasisIndex) {
        let half_m = self.m / 2;
        let r = l % half_m;
        let half = l / half_m;
        ((half ^ (r & 1)) == 1, BasisIndex(r))
    }

    /// Logical bit carried by state `ℓ`.
    pub fn bit_of(&self, l: u32) -> Result<bool> {
        self.decode(l).map(|(b, _)| b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: ComplexAmplitude, re: f64, im: f64) -> bool {
        (a.re - re).abs() < 1e-12 && (a.im - im).abs() < 1e-12
    }

    #[test]
    fn amplitude_examples() {
        let c = Constellation::new(16, 5.0).unwrap();
        assert!(close(c.state_amplitude(0).unwrap(), 5.0, 0.0));
        assert!(close(c.state_amplitude(8).unwrap(), -5.0, 0.0));
        let c4 = Constellation::new(4, 2.0).unwrap();
        assert!(close(c4.state_amplitude(1).unwrap(), 0.0, 2.0));
    }

    #[test]
    fn amplitude_matches_direct_trig() {
        let c = Constellation::new(64, 3.5).unwrap();
        for l in 0..64 {
            let a = c.state_amplitude(l).unwrap();
            let th = c.angle(l);
            assert!((a.re - 3.5 * th.cos()).abs() < 1e-12);
            assert!((a.im - 3.5 * th.sin()).abs() < 1e-12);
            assert!((a.norm_sqr() - 3.5 * 3.5).abs() < 1e-12 * 3.5 * 3.5);
        }
    }

    #[test]
    fn encode_decode_examples() {
        let c = Constellation::new(16, 1.0).unwrap();
        assert_eq!(c.encode(false, BasisIndex(0)).unwrap(), 0);
        assert_eq!(c.encode(false, BasisIndex(1)).unwrap(), 9);
        assert_eq!(c.encode(true, BasisIndex(2)).unwrap(), 10);
        assert_eq!(c.decode(9).unwrap(), (false, BasisIndex(1)));
        assert_eq!(c.decode(0).unwrap(), (false, BasisIndex(0)));
        assert_eq!(c.decode(10).unwrap(), (true, BasisIndex(2)));
    }

    #[test]
    fn out_of_range_is_domain_error() {
        let c = Constellation::new(16, 1.0).unwrap();
        assert!(matches!(c.state_amplitude(16), Err(Error::Domain(_))));
        assert!(matches!(c.encode(true, BasisIndex(8)), Err(Error::Domain(_))));
        assert!(matches!(c.decode(16), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_bad_parameters() {
        for m in [0, 2, 6, 12, 1 << 21] {
            assert!(Constellation::new(m, 1.0).is_err(), "M={m}");
        }
        assert!(Constellation::new(8, -1.0).is_err());
        assert!(Constellation::new(8, f64::NAN).is_err());
        assert!(Constellation::from_photon_number(8, -0.5).is_err());
        let c = Constellation::from_photon_number(8, 9.0).unwrap();
        assert_eq!(c.alpha0(), 3.0);
        assert_eq!(c.mean_photon_number(), 9.0);
        assert_eq!(c.bits_per_basis(), 2);
    }

    #[test]
    fn bijection_exhaustive() {
        let mut m = 4;
        while m <= 4096 {
            let c = Constellation::new(m, 1.0).unwrap();
            let mut seen = vec![false; m as usize];
            for r in 0..m / 2 {
                for b in [false, true] {
                    let l = c.encode(b, BasisIndex(r)).unwrap();
                    assert!(!seen[l as usize]);
                    seen[l as usize] = true;
                    assert_eq!(c.decode(l).unwrap(), (b, BasisIndex(r)));
                }
            }
            m *= 2;
        }
    }

    #[test]
    fn antipodal_and_opposite_bits() {
        let mut m = 4;
        while m <= 4096 {
            let c = Constellation::new(m, 7.25).unwrap();
            for l in 0..m / 2 {
                let a = c.state_amplitude(l).unwrap();
                let b = c.state_amplitude(l + m / 2).unwrap();
                assert_eq!(a, -b);
                assert_ne!(c.bit_of(l).unwrap(), c.bit_of(l + m / 2).unwrap());
            }
            m *= 2;
        }
    }

    #[test]
    fn neighbours_alternate_except_at_half_boundaries() {
        let c = Constellation::new(32, 1.0).unwrap();
        for l in 0..32u32 {
            let next = (l + 1) % 32;
            let same = c.bit_of(l).unwrap() == c.bit_of(next).unwrap();
            assert_eq!(same, l == 15 || l == 31, "l={l}");
        }
    }
}
