//! Angular quantization of heterodyne outcomes.
//!
//! With `s` sectors, wedge `j` covers angles
//! `[2πj/s - π/M, 2π(j+1)/s - π/M)`. The half-step offset keeps every state
//! strictly inside a wedge whenever `s` divides `M`; with `s = M` each state
//! sits at the centre of its own wedge, and with `s = 2` the split is the
//! half-plane observation `l = x ⊕ (r mod 2)`.

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::quadrature::{integrate_2d, QuadOptions};

/// Radial distance beyond which the outcome density is negligible (`e^{-81}`).
pub(crate) const TAIL_RADIUS: f64 = 9.0;

const SECTOR_TOL: f64 = 1e-9;

pub const MAX_SECTORS: u32 = 1 << 12;

fn check(c: &Constellation, sectors: u32, l: u32) -> Result<()> {
    if sectors == 0 || sectors > MAX_SECTORS {
        return Err(Error::domain(format!("sector count must lie in [1, {MAX_SECTORS}]")));
    }
    if l >= c.size() {
        return Err(Error::domain(format!("state index {l} out of range")));
    }
    Ok(())
}

/// Start angle of wedge `j`.
pub fn sector_start(c: &Constellation, sectors: u32, j: u32) -> f64 {
    std::f64::consts::TAU * f64::from(j) / f64::from(sectors) - std::f64::consts::PI / f64::from(c.size())
}

/// Wedge holding the noise-free state `ℓ`, in exact integer arithmetic.
pub fn noiseless_sector(c: &Constellation, sectors: u32, l: u32) -> Result<u32> {
    check(c, sectors, l)?;
    let num = (2 * u64::from(l) + 1) * u64::from(sectors);
    Ok(((num / (2 * u64::from(c.size()))) % u64::from(sectors)) as u32)
}

/// Probability that the heterodyne outcome of state `ℓ` falls in each wedge,
/// by 2D adaptive quadrature of the outcome density in polar coordinates.
pub fn sector_probabilities(c: &Constellation, sectors: u32, l: u32) -> Result<Vec<f64>> {
    check(c, sectors, l)?;
    let a = c.state_amplitude(l)?;
    let alpha0 = c.alpha0();
    let density = |phi: f64, rho: f64| {
        let (s, co) = phi.sin_cos();
        let dx = rho * co - a.re;
        let dy = rho * s - a.im;
        rho * (-(dx * dx + dy * dy)).exp() / std::f64::consts::PI
    };
    let mut rho_breaks = vec![0.0];
    if alpha0 > TAIL_RADIUS {
        rho_breaks.push(alpha0 - TAIL_RADIUS);
    }
    if alpha0 > 0.0 {
        rho_breaks.push(alpha0);
    }
    rho_breaks.push(alpha0 + TAIL_RADIUS);

    let theta = c.angle(l);
    let spread = if alpha0 > 0.0 { TAIL_RADIUS / alpha0 } else { f64::INFINITY };
    let opts = QuadOptions {
        abs_tol: SECTOR_TOL / f64::from(sectors),
        max_intervals: 4000,
    };
    let mut probs = Vec::with_capacity(sectors as usize);
    for j in 0..sectors {
        let lo = sector_start(c, sectors, j);
        let hi = sector_start(c, sectors, j + 1);
        let mut phi_breaks = vec![lo, hi];
        // state angle, and the edges of its bulk, in this wedge's frame
        for t in [theta, theta - spread, theta + spread] {
            if !t.is_finite() {
                continue;
            }
            let shifted = lo + (t - lo).rem_euclid(std::f64::consts::TAU);
            if shifted > lo && shifted < hi {
                phi_breaks.push(shifted);
            }
        }
        phi_breaks.sort_by(f64::total_cmp);
        let r = integrate_2d(density, &phi_breaks, &rho_breaks, opts).map_err(|e| {
            Error::Numeric(format!("sector {j} of state {l} (M={}, alpha0={alpha0}): {e}", c.size()))
        })?;
        probs.push(r.value.max(0.0));
    }
    Ok(probs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{heterodyne_sample, q_function};
    use crate::rng::RngStream;

    /// Closed-form angular density of the outcome, integrated with a plain
    /// composite Simpson rule: an independent route to the wedge masses.
    fn wedge_oracle(alpha0: f64, theta: f64, lo: f64, hi: f64) -> f64 {
        let pdf = |phi: f64| {
            let psi = phi - theta;
            let u = alpha0 * psi.cos();
            (-alpha0 * alpha0).exp() / std::f64::consts::TAU
                + u / (2.0 * std::f64::consts::PI.sqrt())
                    * (-(alpha0 * psi.sin()).powi(2)).exp()
                    * (2.0 - 2.0 * q_function(std::f64::consts::SQRT_2 * u))
        };
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut s = pdf(lo) + pdf(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * pdf(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn vacuum_is_uniform() {
        let c = Constellation::new(8, 0.0).unwrap();
        for s in [1, 3, 4, 8] {
            let p = sector_probabilities(&c, s, 0).unwrap();
            for v in p {
                assert!((v - 1.0 / f64::from(s)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn normalized_and_matches_angular_oracle() {
        for &(m, a, s) in &[(4u32, 1.0, 4u32), (8, 2.5, 3), (8, 0.3, 8), (16, 12.0, 5)] {
            let c = Constellation::new(m, a).unwrap();
            for l in 0..m {
                let p = sector_probabilities(&c, s, l).unwrap();
                let total: f64 = p.iter().sum();
                assert!((total - 1.0).abs() < 1e-6, "sum {total}");
                for (j, &v) in p.iter().enumerate() {
                    let lo = sector_start(&c, s, j as u32);
                    let hi = sector_start(&c, s, j as u32 + 1);
                    let o = wedge_oracle(a, c.angle(l), lo, hi);
                    assert!((v - o).abs() < 1e-6, "M={m} a={a} s={s} l={l} j={j}: {v} vs {o}");
                }
            }
        }
    }

    #[test]
    fn centred_state_keeps_its_wedge() {
        let c = Constellation::new(4, 5.0).unwrap();
        for l in 0..4 {
            let p = sector_probabilities(&c, 4, l).unwrap();
            assert!(p[l as usize] > 0.99);
        }
    }

    #[test]
    fn centred_state_mass_agrees_with_sampling() {
        let c = Constellation::new(4, 5.0).unwrap();
        let p = sector_probabilities(&c, 4, 0).unwrap()[0];
        let mut rng = RngStream::new(8, 0);
        let a = c.state_amplitude(0).unwrap();
        let n = 1_000_000;
        let inside = (0..n)
            .filter(|_| {
                let y = heterodyne_sample(a, &mut rng);
                y.im.abs() < y.re // |angle| < π/4
            })
            .count();
        let phat = inside as f64 / n as f64;
        let sigma = (p * (1.0 - p) / n as f64).sqrt().max(1.0 / n as f64);
        assert!((phat - p).abs() < 3.0 * sigma + 1e-6, "{phat} vs {p}");
    }

    #[test]
    fn rotation_permutes_cyclically() {
        let c = Constellation::new(8, 1.7).unwrap();
        let s = 4;
        let step = c.size() / s;
        let base = sector_probabilities(&c, s, 1).unwrap();
        for k in 1..s {
            let rot = sector_probabilities(&c, s, 1 + k * step).unwrap();
            for j in 0..s as usize {
                let src = (j + s as usize - k as usize) % s as usize;
                assert!((rot[j] - base[src]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn noiseless_sector_cases() {
        let c4 = Constellation::new(4, 1.0).unwrap();
        let got: Vec<u32> = (0..4).map(|l| noiseless_sector(&c4, 2, l).unwrap()).collect();
        assert_eq!(got, vec![0, 0, 1, 1]);
        let c8 = Constellation::new(8, 1.0).unwrap();
        for l in 0..8 {
            assert_eq!(noiseless_sector(&c8, 8, l).unwrap(), l);
        }
        assert!(noiseless_sector(&c8, 0, 0).is_err());
        assert!(noiseless_sector(&c8, 2, 8).is_err());
    }
}
