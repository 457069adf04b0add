use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::binary_entropy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    /// One secret bit per error Eve makes: `p_eve · raw_rate`.
    PaperHeuristic,
    /// Wiretap secret-key rate of the induced binary symmetric channels,
    /// `max(0, h(p_eve) - h(p_bob)) · raw_rate`.
    Ck,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRate {
    /// Secret bits per second.
    pub rate: f64,
    /// False when Bob is not strictly better than Eve; `rate` is then 0.
    pub advantage: bool,
}

pub fn key_rate(p_bob: f64, p_eve: f64, raw_rate: f64, method: RateMethod) -> Result<KeyRate> {
    for (name, p) in [("p_bob", p_bob), ("p_eve", p_eve)] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("{name} = {p} outside [0, 1]")));
        }
    }
    if !(raw_rate > 0.0) || !raw_rate.is_finite() {
        return Err(Error::domain(format!("raw rate must be positive, got {raw_rate}")));
    }
    if p_bob >= p_eve {
        return Ok(KeyRate {
            rate: 0.0,
            advantage: false,
        });
    }
    let rate = match method {
        RateMethod::PaperHeuristic => p_eve * raw_rate,
        RateMethod::Ck => (binary_entropy(p_eve)? - binary_entropy(p_bob)?).max(0.0) * raw_rate,
    };
    Ok(KeyRate {
        rate,
        advantage: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heuristic_examples() {
        let r = key_rate(0.0, 0.5 * (-7.0f64).exp(), 1e9, RateMethod::PaperHeuristic).unwrap();
        assert!((r.rate - 455_940.98).abs() < 0.01);
        let r = key_rate(0.0, 0.5 * (-14.0f64).exp(), 1e9, RateMethod::PaperHeuristic).unwrap();
        assert!((r.rate - 415.764_36).abs() < 1e-3);
        let r = key_rate(0.0, 0.01, 1e9, RateMethod::PaperHeuristic).unwrap();
        assert!((r.rate - 1e7).abs() < 1e-3);
    }

    #[test]
    fn ck_rate() {
        let r = key_rate(0.0, 0.01, 1e9, RateMethod::Ck).unwrap();
        assert!((r.rate / 1e6 - 80.79).abs() < 0.01);
        let r = key_rate(0.01, 0.02, 1.0, RateMethod::Ck).unwrap();
        assert!(r.rate > 0.0 && r.rate < 0.1);
    }

    #[test]
    fn advantage_violation() {
        let r = key_rate(0.2, 0.1, 1e9, RateMethod::PaperHeuristic).unwrap();
        assert_eq!(r, KeyRate { rate: 0.0, advantage: false });
        assert!(!key_rate(0.1, 0.1, 1e9, RateMethod::Ck).unwrap().advantage);
        assert!(key_rate(0.0, 0.1, 0.0, RateMethod::Ck).is_err());
        assert!(key_rate(-0.1, 0.1, 1.0, RateMethod::Ck).is_err());
    }
}
