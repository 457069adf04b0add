//! Per-symbol equivocation of the data bit given a heterodyne outcome.
//!
//! For an equal-weight mixture of coherent states, each labelled with the
//! bit it carries, the outcome density is `p(y) = (1/K) Σ_k e^{-|y-a_k|²}/π`
//! and the equivocation is `∫ p(y) h(P(b = 0 | y)) dy`, integrated in polar
//! coordinates.
//!
//! * key known: the two states of one basis. All bases are rotations of
//!   each other, so the basis average equals the value for any one basis;
//! * key unknown: all `M` states of the ring.

use crate::constellation::{BasisIndex, ComplexAmplitude, Constellation};
use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, QuadOptions};

use super::sectors::TAIL_RADIUS;

const ENTROPY_TOL: f64 = 1e-8;

fn mixture_bit_entropy(components: &[(ComplexAmplitude, bool)], alpha0: f64) -> Result<f64> {
    let k = components.len() as f64;
    let integrand = |phi: f64, rho: f64| {
        let (s, c) = phi.sin_cos();
        let (yr, yi) = (rho * c, rho * s);
        let mut mx = f64::NEG_INFINITY;
        for (a, _) in components {
            let e = -((yr - a.re).powi(2) + (yi - a.im).powi(2));
            mx = mx.max(e);
        }
        if mx < -740.0 {
            return 0.0;
        }
        let (mut s0, mut s1) = (0.0, 0.0);
        for (a, bit) in components {
            let w = (-((yr - a.re).powi(2) + (yi - a.im).powi(2)) - mx).exp();
            if *bit {
                s1 += w;
            } else {
                s0 += w;
            }
        }
        let total = s0 + s1;
        let p = mx.exp() * total / (k * std::f64::consts::PI);
        let q = s0 / total;
        let h = super::plogp(q) + super::plogp(1.0 - q);
        rho * p * h
    };

    let mut rho_breaks = vec![(alpha0 - TAIL_RADIUS).max(0.0)];
    if alpha0 > 0.0 {
        rho_breaks.push(alpha0);
    }
    rho_breaks.push(alpha0 + TAIL_RADIUS);

    let tau = std::f64::consts::TAU;
    let mut phi_breaks = vec![0.0, tau];
    let spread = if alpha0 > 0.0 { TAIL_RADIUS / alpha0 } else { f64::INFINITY };
    for (a, _) in components {
        let theta = a.im.atan2(a.re).rem_euclid(tau);
        phi_breaks.push(theta);
        if spread < 0.5 {
            phi_breaks.push((theta - spread).rem_euclid(tau));
            phi_breaks.push((theta + spread).rem_euclid(tau));
        }
    }
    phi_breaks.sort_by(f64::total_cmp);
    phi_breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

    let opts = QuadOptions {
        abs_tol: ENTROPY_TOL,
        max_intervals: 8000,
    };
    let r = integrate_2d(integrand, &phi_breaks, &rho_breaks, opts)
        .map_err(|e| Error::Numeric(format!("posterior entropy (alpha0={alpha0}): {e}")))?;
    Ok(r.value.clamp(0.0, 1.0))
}

/// Equivocation `H(X | Y)` per qumode for heterodyne outcomes, in bits.
pub fn posterior_bit_entropy(c: &Constellation, key_known: bool) -> Result<f64> {
    if key_known {
        posterior_bit_entropy_for_basis(c, BasisIndex(0))
    } else {
        let components: Vec<(ComplexAmplitude, bool)> = c
            .amplitudes()
            .into_iter()
            .enumerate()
            .map(|(l, a)| (a, c.decode_unchecked(l as u32).0))
            .collect();
        mixture_bit_entropy(&components, c.alpha0())
    }
}

/// Key-known equivocation for one particular basis.
pub fn posterior_bit_entropy_for_basis(c: &Constellation, r: BasisIndex) -> Result<f64> {
    let l0 = c.encode(false, r)?;
    let l1 = c.encode(true, r)?;
    let comps = [
        (c.state_amplitude(l0)?, false),
        (c.state_amplitude(l1)?, true),
    ];
    mixture_bit_entropy(&comps, c.alpha0())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::infotheory::binary_entropy;
    use crate::measurement::{heterodyne_error, heterodyne_sample, ErrorForm};
    use crate::rng::RngStream;

    /// Key-known equivocation as a 1D integral over the projection onto the
    /// basis axis, `u ~ N(α₀, 1/2)`, posterior `1/(1 + e^{-4α₀u})`.
    fn key_known_oracle(alpha0: f64) -> f64 {
        let n = 40_000;
        let (lo, hi) = (alpha0 - 9.0, alpha0 + 9.0);
        let h = (hi - lo) / n as f64;
        let f = |u: f64| {
            let dens = (-(u - alpha0).powi(2)).exp() / std::f64::consts::PI.sqrt();
            let z = 4.0 * alpha0 * u;
            // posterior of the wrong bit, computed without overflow
            let q = if z > 0.0 { (-z).exp() / (1.0 + (-z).exp()) } else { 1.0 / (1.0 + z.exp()) };
            dens * binary_entropy(q).unwrap()
        };
        let mut s = f(lo) + f(hi);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn vacuum_gives_one_bit() {
        let c = Constellation::new(16, 1e-6).unwrap();
        assert!((posterior_bit_entropy(&c, true).unwrap() - 1.0).abs() < 1e-6);
        assert!((posterior_bit_entropy(&c, false).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn key_known_matches_projection_oracle() {
        for s in [0.25, 1.0, 3.0, 7.0] {
            let c = Constellation::from_photon_number(32, s).unwrap();
            let got = posterior_bit_entropy(&c, true).unwrap();
            let want = key_known_oracle(c.alpha0());
            assert!((got - want).abs() < 1e-6, "S={s}: {got} vs {want}");
            // concavity: average equivocation never exceeds h(error rate)
            let pe = heterodyne_error(s, ErrorForm::Exact).unwrap();
            assert!(got <= binary_entropy(pe).unwrap() + 1e-9);
        }
    }

    #[test]
    fn key_known_is_basis_independent() {
        let c = Constellation::from_photon_number(16, 2.0).unwrap();
        let h0 = posterior_bit_entropy_for_basis(&c, BasisIndex(0)).unwrap();
        for r in [1, 3, 6] {
            let h = posterior_bit_entropy_for_basis(&c, BasisIndex(r)).unwrap();
            assert!((h - h0).abs() < 1e-7);
        }
    }

    #[test]
    fn bright_key_known_is_negligible() {
        let c = Constellation::new(4096, 200.0).unwrap();
        assert!(posterior_bit_entropy(&c, true).unwrap() < 1e-6);
    }

    #[test]
    fn key_unknown_exceeds_key_known() {
        let c = Constellation::from_photon_number(32, 7.0).unwrap();
        let known = posterior_bit_entropy(&c, true).unwrap();
        let unknown = posterior_bit_entropy(&c, false).unwrap();
        assert!(unknown > known, "{unknown} vs {known}");
    }

    #[test]
    fn key_unknown_agrees_with_sampling() {
        let c = Constellation::from_photon_number(16, 3.0).unwrap();
        let quad = posterior_bit_entropy(&c, false).unwrap();
        let amps = c.amplitudes();
        let bits: Vec<bool> = (0..16).map(|l| c.bit_of(l).unwrap()).collect();
        let mut rng = RngStream::new(21, 0);
        let n = 1_000_000;
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let l = rng.below(16) as usize;
            let y = heterodyne_sample(amps[l], &mut rng);
            let (mut s0, mut s1) = (0.0, 0.0);
            for (k, a) in amps.iter().enumerate() {
                let w = (-((y.re - a.re).powi(2) + (y.im - a.im).powi(2))).exp();
                if bits[k] { s1 += w } else { s0 += w }
            }
            let h = binary_entropy(s0 / (s0 + s1)).unwrap();
            sum += h;
            sq += h * h;
        }
        let mean = sum / n as f64;
        let sd = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - quad).abs() < 3.0 * sd, "{mean} ± {sd} vs {quad}");
    }
}
