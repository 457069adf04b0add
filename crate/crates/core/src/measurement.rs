//! Receiver models.
//!
//! Units: a coherent state of amplitude `α` yields heterodyne outcomes
//! `α + n`, with `n` having independent zero-mean normal quadratures of
//! variance 1/2 (outcome density `exp(-|y-α|²)/π`). Mean photon number is
//! `S = |α|²`.
//!
//! Bob's keyed optimum receiver and the optimum-phase receiver are modelled
//! analytically. Only Eve's heterodyne is sampled, because her attacks need
//! the outcome geometry.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::ComplexAmplitude;
use crate::error::{Error, Result};
use crate::estimate::BerEstimate;
use crate::rng::{blocks, Purpose, RngStream};

/// A heterodyne outcome.
pub type ComplexPoint = ComplexAmplitude;

/// Trials per Monte Carlo block (one substream each).
pub const MC_BLOCK: u64 = 1 << 16;

/// Noise standard deviation per quadrature.
pub const QUADRATURE_SIGMA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorForm {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReceiverModel {
    Helstrom,
    Heterodyne,
    Phase,
}

/// Standard normal upper tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn check_s(s: f64) -> Result<()> {
    if s.is_nan() || s < 0.0 {
        return Err(Error::domain(format!("mean photon number must be >= 0, got {s}")));
    }
    Ok(())
}

pub fn heterodyne_sample(a: ComplexAmplitude, rng: &mut RngStream) -> ComplexPoint {
    let re = a.re + QUADRATURE_SIGMA * rng.normal();
    let im = a.im + QUADRATURE_SIGMA * rng.normal();
    ComplexPoint::new(re, im)
}

/// Optimum binary discrimination of `|±α⟩` with `S = |α|²`.
///
/// Exact: `(1 - √(1 - e^{-4S}))/2`, evaluated as `u / (2(1 + √(1-u)))` so it
/// stays accurate when `u = e^{-4S}` is tiny. Asymptotic: `e^{-4S}/4`.
pub fn helstrom_error(s: f64, form: ErrorForm) -> Result<f64> {
    check_s(s)?;
    let u = (-4.0 * s).exp();
    Ok(match form {
        ErrorForm::Exact => 0.5 * u / (1.0 + (1.0 - u).sqrt()),
        ErrorForm::Asymptotic => 0.25 * u,
    })
}

/// Known-basis heterodyne decision on `|±α⟩`.
///
/// Exact: `Q(√(2S))`. Asymptotic: `e^{-S}/2`.
pub fn heterodyne_error(s: f64, form: ErrorForm) -> Result<f64> {
    check_s(s)?;
    Ok(match form {
        ErrorForm::Exact => q_function((2.0 * s).sqrt()),
        ErrorForm::Asymptotic => 0.5 * (-s).exp(),
    })
}

/// Optimum-phase measurement, `e^{-2S}/2`.
pub fn phase_error(s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(0.5 * (-2.0 * s).exp())
}

/// Dispatches on the receiver model. The phase receiver has a single form.
pub fn receiver_error(model: ReceiverModel, s: f64, form: ErrorForm) -> Result<f64> {
    match model {
        ReceiverModel::Helstrom => helstrom_error(s, form),
        ReceiverModel::Heterodyne => heterodyne_error(s, form),
        ReceiverModel::Phase => phase_error(s),
    }
}

/// Bob's keyed receiver: flips the bit with the exact Helstrom probability.
pub fn bob_decide(b_true: bool, s: f64, rng: &mut RngStream) -> Result<bool> {
    let p = helstrom_error(s, ErrorForm::Exact)?;
    Ok(b_true ^ rng.bernoulli(p))
}

/// Known-basis heterodyne Monte Carlo: sends `|+√S⟩` and counts outcomes
/// with negative real part.
///
/// Block `b` uses substream `(master_seed, b)`; counts are summed, so the
/// result does not depend on the thread count.
pub fn heterodyne_ber_mc(s: f64, trials: u64, master_seed: u64) -> Result<BerEstimate> {
    check_s(s)?;
    let a = ComplexAmplitude::new(s.sqrt(), 0.0);
    let (errors, total) = blocks(trials, MC_BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, _, len)| {
            let mut rng = RngStream::for_block(master_seed, b, Purpose::Eve);
            let mut errs = 0u64;
            for _ in 0..len {
                let re = a.re + QUADRATURE_SIGMA * rng.normal();
                errs += u64::from(re < 0.0);
            }
            (errs, len)
        })
        .reduce(|| (0, 0), BerEstimate::merge);
    Ok(BerEstimate::new(errors, total))
}

/// Monte Carlo flip rate of [`bob_decide`].
pub fn bob_ber_mc(s: f64, trials: u64, master_seed: u64) -> Result<BerEstimate> {
    let p = helstrom_error(s, ErrorForm::Exact)?;
    let (errors, total) = blocks(trials, MC_BLOCK)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(b, _, len)| {
            let mut rng = RngStream::for_block(master_seed, b, Purpose::Bob);
            let errs = (0..len).filter(|_| rng.bernoulli(p)).count() as u64;
            (errs, len)
        })
        .reduce(|| (0, 0), BerEstimate::merge);
    Ok(BerEstimate::new(errors, total))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helstrom_examples() {
        assert_eq!(helstrom_error(0.0, ErrorForm::Exact).unwrap(), 0.5);
        let a7 = helstrom_error(7.0, ErrorForm::Asymptotic).unwrap();
        assert!((a7 - 0.25 * (-28.0f64).exp()).abs() < 1e-25);
        assert!(a7 > 1.6e-13 && a7 < 1.8e-13);
        let e2 = helstrom_error(2.0, ErrorForm::Exact).unwrap();
        let a2 = helstrom_error(2.0, ErrorForm::Asymptotic).unwrap();
        let ratio = e2 / a2;
        assert!(ratio > 1.0 && ratio < 1.001, "{ratio}");
        // no catastrophic cancellation deep in the tail
        let e50 = helstrom_error(50.0, ErrorForm::Exact).unwrap();
        let a50 = helstrom_error(50.0, ErrorForm::Asymptotic).unwrap();
        assert!((e50 / a50 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn helstrom_matches_naive_formula_where_stable() {
        for s in [0.01, 0.1, 0.5, 1.0, 2.0] {
            let naive = 0.5 * (1.0 - (1.0 - (-4.0 * s as f64).exp()).sqrt());
            let got = helstrom_error(s, ErrorForm::Exact).unwrap();
            assert!((got - naive).abs() < 1e-12, "S={s}");
        }
        // S = 1 flip probability
        let p1 = helstrom_error(1.0, ErrorForm::Exact).unwrap();
        assert!((p1 - 4.6000e-3).abs() < 5e-6, "{p1}");
    }

    #[test]
    fn heterodyne_examples() {
        assert_eq!(heterodyne_error(0.0, ErrorForm::Exact).unwrap(), 0.5);
        let a7 = heterodyne_error(7.0, ErrorForm::Asymptotic).unwrap();
        assert!((a7 - 4.559e-4).abs() < 1e-6);
        let e7 = heterodyne_error(7.0, ErrorForm::Exact).unwrap();
        assert!((e7 - 9.12e-5).abs() < 0.05e-5, "{e7}");
        assert!(a7 / e7 < 10.0);
    }

    #[test]
    fn phase_examples() {
        assert_eq!(phase_error(0.0).unwrap(), 0.5);
        let p7 = phase_error(7.0).unwrap();
        assert!((p7 - 4.159e-7).abs() < 1e-9);
        let p35 = phase_error(3.5).unwrap();
        let h7 = heterodyne_error(7.0, ErrorForm::Asymptotic).unwrap();
        assert!((p35 - h7).abs() < 1e-18);
    }

    #[test]
    fn negative_s_rejected() {
        assert!(helstrom_error(-1.0, ErrorForm::Exact).is_err());
        assert!(heterodyne_error(-1e-9, ErrorForm::Asymptotic).is_err());
        assert!(phase_error(f64::NAN).is_err());
        let mut rng = RngStream::new(0, 0);
        assert!(bob_decide(true, -1.0, &mut rng).is_err());
    }

    #[test]
    fn q_function_reference_values() {
        assert_eq!(q_function(0.0), 0.5);
        assert!((q_function(1.0) - 0.158_655_253_931_457).abs() < 1e-14);
        assert!((q_function(3.0) - 1.349_898_031_630_095e-3).abs() < 1e-16);
        assert!((q_function(-2.0) - 0.977_249_868_051_821).abs() < 1e-14);
    }

    #[test]
    fn receiver_hierarchy_and_ranges() {
        let mut s = 0.0;
        while s <= 60.0 {
            let h = helstrom_error(s, ErrorForm::Exact).unwrap();
            let ha = helstrom_error(s, ErrorForm::Asymptotic).unwrap();
            let p = phase_error(s).unwrap();
            let het = heterodyne_error(s, ErrorForm::Exact).unwrap();
            for v in [h, ha, p, het] {
                assert!((0.0..=0.5).contains(&v));
            }
            if s > 0.0 {
                assert!(h >= ha);
            }
            if s >= 1.0 {
                assert!(h <= p && p <= het, "S={s}: {h} {p} {het}");
            }
            s += 0.25;
        }
    }

    #[test]
    fn heterodyne_sample_vacuum_statistics() {
        let n = 1_000_000;
        let mut rng = RngStream::new(11, 0);
        let (mut sr, mut si, mut srr, mut sii) = (0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let y = heterodyne_sample(ComplexAmplitude::default(), &mut rng);
            sr += y.re;
            si += y.im;
            srr += y.re * y.re;
            sii += y.im * y.im;
        }
        let nf = n as f64;
        let se = (0.5 / nf).sqrt();
        assert!((sr / nf).abs() < 5.0 * se);
        assert!((si / nf).abs() < 5.0 * se);
        assert!((srr / nf - 0.5).abs() < 0.005);
        assert!((sii / nf - 0.5).abs() < 0.005);
    }

    #[test]
    fn heterodyne_sample_deterministic() {
        let a = heterodyne_sample(ComplexAmplitude::new(1.0, 2.0), &mut RngStream::new(1, 0));
        let b = heterodyne_sample(ComplexAmplitude::new(1.0, 2.0), &mut RngStream::new(1, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn heterodyne_tail_at_s9() {
        // 10^8 draws, sign errors against Q(√18)
        let est = heterodyne_ber_mc(9.0, 100_000_000, 2024).unwrap();
        let p = heterodyne_error(9.0, ErrorForm::Exact).unwrap();
        assert!(est.z_score(p).abs() < 3.0, "{est:?} vs {p}");
    }

    #[test]
    fn bob_flip_rates() {
        let s0 = bob_ber_mc(0.0, 1_000_000, 5).unwrap();
        assert!(s0.z_score(0.5).abs() < 3.0);
        let p1 = helstrom_error(1.0, ErrorForm::Exact).unwrap();
        let s1 = bob_ber_mc(1.0, 1_000_000, 5).unwrap();
        assert!(s1.z_score(p1).abs() < 3.0, "{s1:?}");
        let s7 = bob_ber_mc(7.0, 10_000_000, 5).unwrap();
        assert_eq!(s7.errors, 0);
        let mut rng = RngStream::new(3, 3);
        assert!(bob_decide(true, 30.0, &mut rng).unwrap());
    }
}
