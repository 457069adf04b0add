//! Exact entropies of desk-sized cipher instances.
//!
//! The model: a uniform seed `K` drives an ENC box, the data `X_n` follow a
//! given prior, and each qumode is observed as an angular sector `Y_i`
//! (see [`super::sectors`]). The joint law of `(K, X_n, Y_n)` is enumerated
//! exactly and the conditional entropies follow from it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constellation::{BasisIndex, Constellation};
use crate::error::{Error, Result};
use crate::keystream::{CyclicKey, EncBox, LfsrSpec, RunningKeyStream, SeedKey};

use super::sectors::{noiseless_sector, sector_probabilities};
use super::{entropy, plogp};

/// Ceiling on `2^klen · 2^n · sectors^n`.
pub const ENUMERATION_BUDGET: u64 = 100_000_000;

const KEYS_PER_CHUNK: u64 = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseModel {
    /// `Y_i` is the sector holding the transmitted state.
    Noiseless,
    /// `Y_i` is the sector of a heterodyne outcome at amplitude `alpha0`.
    QuantizedHeterodyne { alpha0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Prior {
    Uniform,
    /// Probability of each data word, indexed by `Σ x_i 2^i`.
    Table { probs: Vec<f64> },
}

/// ENC box of the tiny cipher.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TinyEnc {
    /// The seed bits repeated; every seed value is allowed.
    Cyclic,
    /// LFSR of degree `klen`; seeds range over the `2^klen - 1` non-zero values.
    Lfsr { taps: Vec<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TinyCipherSpec {
    #[serde(rename = "M")]
    pub m: u32,
    pub klen: u32,
    pub n: u32,
    pub sectors: u32,
    pub noise: NoiseModel,
    #[serde(default = "default_prior")]
    pub prior: Prior,
    #[serde(default = "default_enc")]
    pub enc: TinyEnc,
}

fn default_prior() -> Prior {
    Prior::Uniform
}

fn default_enc() -> TinyEnc {
    TinyEnc::Cyclic
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyReport {
    pub h_x_given_y: f64,
    pub h_k_given_y: f64,
    pub h_y_given_xk: f64,
    pub h_k: f64,
    pub h_x: f64,
}

impl TinyCipherSpec {
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.m, 4 | 8) {
            return Err(Error::config("M", "tiny ciphers use M = 4 or 8"));
        }
        if !(1..=12).contains(&self.klen) {
            return Err(Error::config("klen", "must lie in [1, 12]"));
        }
        if !(1..=4).contains(&self.n) {
            return Err(Error::config("n", "must lie in [1, 4]"));
        }
        if !(1..=8).contains(&self.sectors) {
            return Err(Error::config("sectors", "must lie in [1, 8]"));
        }
        if let NoiseModel::QuantizedHeterodyne { alpha0 } = self.noise {
            if !alpha0.is_finite() || alpha0 < 0.0 {
                return Err(Error::config("noise.alpha0", "must be finite and non-negative"));
            }
        }
        if let Prior::Table { probs } = &self.prior {
            if probs.len() != 1 << self.n {
                return Err(Error::config("prior.probs", format!("needs {} entries", 1u32 << self.n)));
            }
            if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(Error::config("prior.probs", "entries must be non-negative"));
            }
            let total: f64 = probs.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(Error::config("prior.probs", format!("sums to {total}, not 1")));
            }
        }
        if let TinyEnc::Lfsr { taps } = &self.enc {
            LfsrSpec::new(self.klen, taps.clone())?;
        }
        let size = (1u64 << self.klen) * (1u64 << self.n) * u64::from(self.sectors).pow(self.n);
        if size > ENUMERATION_BUDGET {
            return Err(Error::ResourceLimit(format!(
                "joint enumeration of {size} outcomes exceeds {ENUMERATION_BUDGET}"
            )));
        }
        Ok(())
    }

    fn keys(&self) -> std::ops::Range<u64> {
        match self.enc {
            TinyEnc::Cyclic => 0..(1u64 << self.klen),
            TinyEnc::Lfsr { .. } => 1..(1u64 << self.klen),
        }
    }

    fn bases_for(&self, key: u64, c: &Constellation) -> Result<Vec<BasisIndex>> {
        let seed = SeedKey::from_u64(key, self.klen)?;
        let n = self.n as usize;
        Ok(match &self.enc {
            TinyEnc::Cyclic => {
                let mut k = CyclicKey::new(&seed)?;
                (0..n).map(|_| k.next_basis(c)).collect()
            }
            TinyEnc::Lfsr { taps } => {
                let mut k = RunningKeyStream::new(LfsrSpec::new(self.klen, taps.clone())?, &seed)?;
                (0..n).map(|_| k.next_basis(c)).collect()
            }
        })
    }

    fn prior_probs(&self) -> Vec<f64> {
        match &self.prior {
            Prior::Uniform => vec![1.0 / f64::from(1u32 << self.n); 1 << self.n],
            Prior::Table { probs } => probs.clone(),
        }
    }
}

struct Partial {
    p_xy: Vec<f64>,
    p_y: Vec<f64>,
    h_ky: f64,
    h_y_given_xk: f64,
}

/// Exact conditional entropies of a tiny cipher by full enumeration.
pub fn exact_cipher_entropies(spec: &TinyCipherSpec) -> Result<EntropyReport> {
    spec.validate()?;
    let alpha0 = match spec.noise {
        NoiseModel::Noiseless => 1.0,
        NoiseModel::QuantizedHeterodyne { alpha0 } => alpha0,
    };
    let c = Constellation::new(spec.m, alpha0)?;
    let s = spec.sectors as usize;
    let n = spec.n as usize;
    let ny = s.pow(spec.n);
    let nx = 1usize << n;

    // channel[ℓ][y] for a single qumode
    let channel: Vec<Vec<f64>> = (0..spec.m)
        .map(|l| match spec.noise {
            NoiseModel::Noiseless => {
                let mut row = vec![0.0; s];
                row[noiseless_sector(&c, spec.sectors, l)? as usize] = 1.0;
                Ok(row)
            }
            NoiseModel::QuantizedHeterodyne { .. } => {
                let mut row = sector_probabilities(&c, spec.sectors, l)?;
                let total: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= total);
                Ok(row)
            }
        })
        .collect::<Result<_>>()?;

    let prior = spec.prior_probs();
    let keys = spec.keys();
    let n_keys = keys.end - keys.start;
    let p_key = 1.0 / n_keys as f64;
    let chunk_starts: Vec<u64> = keys.clone().step_by(KEYS_PER_CHUNK as usize).collect();

    let partials: Vec<Partial> = chunk_starts
        .into_par_iter()
        .map(|start| -> Result<Partial> {
            let mut part = Partial {
                p_xy: vec![0.0; nx * ny],
                p_y: vec![0.0; ny],
                h_ky: 0.0,
                h_y_given_xk: 0.0,
            };
            let mut p_ky = vec![0.0; ny];
            let mut cond = vec![0.0; ny];
            for key in start..(start + KEYS_PER_CHUNK).min(keys.end) {
                let bases = spec.bases_for(key, &c)?;
                p_ky.iter_mut().for_each(|v| *v = 0.0);
                for (xw, &px) in prior.iter().enumerate() {
                    // P(y | x, k) as a product over qumodes; y digit i is qumode i
                    cond[0] = 1.0;
                    let mut len = 1;
                    for i in 0..n {
                        let bit = (xw >> i) & 1 == 1;
                        let row = &channel[c.encode_unchecked(bit, bases[i].0) as usize];
                        for y in (0..len).rev() {
                            let v = cond[y];
                            for (d, &w) in row.iter().enumerate() {
                                cond[d * len + y] = v * w;
                            }
                        }
                        len *= s;
                    }
                    part.h_y_given_xk += p_key * px * entropy(&cond);
                    let w = p_key * px;
                    if w == 0.0 {
                        continue;
                    }
                    let row = &mut part.p_xy[xw * ny..(xw + 1) * ny];
                    for y in 0..ny {
                        let v = w * cond[y];
                        row[y] += v;
                        p_ky[y] += v;
                    }
                }
                for y in 0..ny {
                    part.p_y[y] += p_ky[y];
                    part.h_ky += plogp(p_ky[y]);
                }
            }
            Ok(part)
        })
        .collect::<Result<_>>()?;

    let mut p_xy = vec![0.0; nx * ny];
    let mut p_y = vec![0.0; ny];
    let (mut h_ky, mut h_y_given_xk) = (0.0, 0.0);
    for part in &partials {
        p_xy.iter_mut().zip(&part.p_xy).for_each(|(a, b)| *a += b);
        p_y.iter_mut().zip(&part.p_y).for_each(|(a, b)| *a += b);
        h_ky += part.h_ky;
        h_y_given_xk += part.h_y_given_xk;
    }
    let h_y = entropy(&p_y);
    let h_xy = entropy(&p_xy);
    Ok(EntropyReport {
        h_x_given_y: (h_xy - h_y).max(0.0),
        h_k_given_y: (h_ky - h_y).max(0.0),
        h_y_given_xk: h_y_given_xk.max(0.0),
        h_k: (n_keys as f64).log2(),
        h_x: entropy(&prior),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(m: u32, klen: u32, n: u32, sectors: u32, noise: NoiseModel) -> TinyCipherSpec {
        TinyCipherSpec {
            m,
            klen,
            n,
            sectors,
            noise,
            prior: Prior::Uniform,
            enc: TinyEnc::Cyclic,
        }
    }

    #[test]
    fn one_time_pad() {
        let r = exact_cipher_entropies(&spec(4, 1, 1, 2, NoiseModel::Noiseless)).unwrap();
        assert!((r.h_x_given_y - 1.0).abs() < 1e-12);
        assert_eq!(r.h_k, 1.0);
        assert_eq!(r.h_y_given_xk, 0.0);
    }

    #[test]
    fn full_resolution_noiseless_reveals_data() {
        // without noise the state itself determines the bit
        let r = exact_cipher_entropies(&spec(8, 6, 3, 8, NoiseModel::Noiseless)).unwrap();
        assert!(r.h_x_given_y.abs() < 1e-12);
        assert_eq!(r.h_y_given_xk, 0.0);
    }

    #[test]
    fn perfect_secrecy_up_to_key_length() {
        for klen in 1..=6 {
            for n in 1..=klen.min(4) {
                let r = exact_cipher_entropies(&spec(4, klen, n, 2, NoiseModel::Noiseless)).unwrap();
                assert!((r.h_x_given_y - f64::from(n)).abs() < 1e-9, "klen={klen} n={n}");
            }
        }
    }

    #[test]
    fn quantized_heterodyne_is_random_cipher() {
        let r = exact_cipher_entropies(&spec(
            4,
            2,
            2,
            4,
            NoiseModel::QuantizedHeterodyne { alpha0: 1.0 },
        ))
        .unwrap();
        assert!(r.h_y_given_xk > 0.1, "{r:?}");
        assert!(r.h_x_given_y <= r.h_x + 1e-12);
    }

    #[test]
    fn brute_force_oracle_small_instance() {
        // direct joint-table computation for a tiny noisy case
        let sp = TinyCipherSpec {
            prior: Prior::Table {
                probs: vec![0.1, 0.2, 0.3, 0.4],
            },
            ..spec(4, 3, 2, 3, NoiseModel::QuantizedHeterodyne { alpha0: 0.8 })
        };
        let got = exact_cipher_entropies(&sp).unwrap();
        let c = Constellation::new(4, 0.8).unwrap();
        let ch: Vec<Vec<f64>> = (0..4).map(|l| sector_probabilities(&c, 3, l).unwrap()).collect();
        let mut joint = std::collections::HashMap::new();
        let prior = [0.1, 0.2, 0.3, 0.4];
        for k in 0..8u64 {
            let bits: Vec<bool> = (0..3).map(|i| (k >> i) & 1 == 1).collect();
            let r = [u32::from(bits[0]), u32::from(bits[1])];
            for x in 0..4usize {
                for y0 in 0..3 {
                    for y1 in 0..3 {
                        let l0 = c.encode(x & 1 == 1, BasisIndex(r[0])).unwrap() as usize;
                        let l1 = c.encode(x & 2 == 2, BasisIndex(r[1])).unwrap() as usize;
                        let p = prior[x] / 8.0 * ch[l0][y0] * ch[l1][y1];
                        joint.insert((k, x, y0, y1), p);
                    }
                }
            }
        }
        let marg = |f: &dyn Fn(&(u64, usize, usize, usize)) -> (u64, usize, usize, usize)| {
            let mut m = std::collections::HashMap::new();
            for (key, p) in &joint {
                *m.entry(f(key)).or_insert(0.0) += p;
            }
            m.values().map(|&p: &f64| if p > 0.0 { -p * p.log2() } else { 0.0 }).sum::<f64>()
        };
        let h_kxy = marg(&|t| *t);
        let h_xy = marg(&|t| (0, t.1, t.2, t.3));
        let h_ky = marg(&|t| (t.0, 0, t.2, t.3));
        let h_y = marg(&|t| (0, 0, t.2, t.3));
        let h_kx = marg(&|t| (t.0, t.1, 0, 0));
        assert!((got.h_x_given_y - (h_xy - h_y)).abs() < 1e-10);
        assert!((got.h_k_given_y - (h_ky - h_y)).abs() < 1e-10);
        assert!((got.h_y_given_xk - (h_kxy - h_kx)).abs() < 1e-10);
    }

    #[test]
    fn lfsr_enc_uses_nonzero_seeds() {
        let sp = TinyCipherSpec {
            enc: TinyEnc::Lfsr { taps: vec![3, 2] },
            ..spec(4, 3, 2, 2, NoiseModel::Noiseless)
        };
        let r = exact_cipher_entropies(&sp).unwrap();
        assert!((r.h_k - 7f64.log2()).abs() < 1e-12);
        assert!(r.h_x_given_y <= r.h_k + 1e-9);
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            exact_cipher_entropies(&spec(16, 2, 2, 2, NoiseModel::Noiseless)),
            Err(Error::Config { .. })
        ));
        assert!(matches!(
            exact_cipher_entropies(&spec(8, 12, 4, 8, NoiseModel::Noiseless)),
            Err(Error::ResourceLimit(_))
        ));
        let bad_prior = TinyCipherSpec {
            prior: Prior::Table { probs: vec![0.5, 0.6] },
            ..spec(4, 2, 1, 2, NoiseModel::Noiseless)
        };
        assert!(exact_cipher_entropies(&bad_prior).is_err());
    }

    #[test]
    fn json_form() {
        let text = r#"{"M":4,"klen":2,"n":2,"sectors":4,"noise":{"kind":"quantized_heterodyne","alpha0":1.0}}"#;
        let sp: TinyCipherSpec = serde_json::from_str(text).unwrap();
        assert_eq!(sp.prior, Prior::Uniform);
        assert_eq!(sp.enc, TinyEnc::Cyclic);
        assert_eq!(sp.noise, NoiseModel::QuantizedHeterodyne { alpha0: 1.0 });
    }

    #[test]
    fn single_sector_is_not_decryptable() {
        // Y is constant, so H(X|Y) = H(X) and the Shannon bound needs a key as long as the data
        let r = exact_cipher_entropies(&spec(4, 1, 3, 1, NoiseModel::Noiseless)).unwrap();
        assert!((r.h_x_given_y - 3.0).abs() < 1e-12);
        assert!(r.h_x_given_y > r.h_k);
    }

    fn noiseless_strategy() -> impl Strategy<Value = TinyCipherSpec> {
        (prop_oneof![Just(4u32), Just(8u32)], 1u32..=7, 1u32..=3, 2u32..=8, any::<bool>()).prop_map(
            |(m, klen, n, sectors, lfsr)| TinyCipherSpec {
                enc: if lfsr && klen >= 3 {
                    TinyEnc::Lfsr {
                        taps: LfsrSpec::primitive(klen).unwrap().taps,
                    }
                } else {
                    TinyEnc::Cyclic
                },
                ..spec(m, klen, n, sectors, NoiseModel::Noiseless)
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn shannon_limit(sp in noiseless_strategy()) {
            let r = exact_cipher_entropies(&sp).unwrap();
            prop_assert!(r.h_x_given_y <= r.h_k + 1e-9, "{:?} {:?}", sp, r);
            prop_assert_eq!(r.h_y_given_xk, 0.0);
        }

        #[test]
        fn noise_makes_a_random_cipher(
            m in prop_oneof![Just(4u32), Just(8u32)],
            klen in 1u32..=3,
            sectors in 2u32..=4,
            alpha0 in 0.2f64..2.0,
        ) {
            let r = exact_cipher_entropies(&spec(m, klen, 1, sectors, NoiseModel::QuantizedHeterodyne { alpha0 })).unwrap();
            prop_assert!(r.h_y_given_xk > 0.0);
        }
    }
}
