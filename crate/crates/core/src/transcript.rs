//! Per-qumode records of a simulated run, and their on-disk layouts.
//!
//! CSV layout (header included), one row per qumode:
//!
//! ```text
//! i,x,r,l,y_re,y_im,b_bob
//! ```
//!
//! Bits are `0`/`1`; floats use Rust's shortest round-trip formatting.
//!
//! Binary layout, all integers little-endian:
//!
//! ```text
//! magic   b"Y00T"
//! version u32 = 1
//! m       u32
//! alpha0  f64
//! n       u64
//! n records, each: len u16 = 34, then
//!     i u64, x u8, r u32, l u32, y_re f64, y_im f64, b_bob u8
//! ```

use std::io::{BufRead, Read, Write};

use rayon::prelude::*;

use crate::constellation::{BasisIndex, ComplexAmplitude, Constellation};
use crate::error::{Error, Result};
use crate::measurement::{helstrom_error, ComplexPoint, ErrorForm, MC_BLOCK, QUADRATURE_SIGMA};
use crate::rng::{blocks, Purpose, RngStream};

const MAGIC: &[u8; 4] = b"Y00T";
const VERSION: u32 = 1;
const RECORD_LEN: u16 = 34;

/// Largest transcript written as CSV by [`Transcript::write_auto`].
pub const CSV_MAX_LEN: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Transcript {
    pub constellation: Constellation,
    /// Data bits `X_n`.
    pub x: Vec<bool>,
    /// Running-key basis per qumode.
    pub r: Vec<BasisIndex>,
    pub l_sent: Vec<u32>,
    /// Eve's heterodyne outcomes `Y_n^E`.
    pub y_eve: Vec<ComplexPoint>,
    /// Bob's decisions `Y_n^B`.
    pub b_bob: Vec<bool>,
}

impl Transcript {
    pub fn empty(c: Constellation) -> Self {
        Self {
            constellation: c,
            x: Vec::new(),
            r: Vec::new(),
            l_sent: Vec::new(),
            y_eve: Vec::new(),
            b_bob: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Checks equal lengths and `l_sent[i] = encode(x[i], r[i])`.
    pub fn validate(&self) -> Result<()> {
        let n = self.x.len();
        if [self.r.len(), self.l_sent.len(), self.y_eve.len(), self.b_bob.len()]
            .iter()
            .any(|&k| k != n)
        {
            return Err(Error::domain("transcript columns differ in length"));
        }
        for i in 0..n {
            if self.constellation.encode(self.x[i], self.r[i])? != self.l_sent[i] {
                return Err(Error::domain(format!("row {i}: state index does not match encode(x, r)")));
            }
        }
        Ok(())
    }

    /// Transcript whose outcomes are the exact state amplitudes and whose
    /// receiver decisions are error-free.
    pub fn noise_free(c: Constellation, x: Vec<bool>, r: Vec<BasisIndex>) -> Result<Self> {
        if x.len() != r.len() {
            return Err(Error::domain("x and r differ in length"));
        }
        let l_sent = x
            .iter()
            .zip(&r)
            .map(|(&b, &ri)| c.encode(b, ri))
            .collect::<Result<Vec<_>>>()?;
        let y_eve = l_sent.iter().map(|&l| c.amplitude_unchecked(l)).collect();
        let b_bob = x.clone();
        Ok(Self {
            constellation: c,
            x,
            r,
            l_sent,
            y_eve,
            b_bob,
        })
    }

    /// Simulates one block of qumodes. `data`, when given, supplies the bits;
    /// otherwise they are drawn uniformly from the block's data substream.
    fn simulate_block(
        c: &Constellation,
        amps: &[ComplexAmplitude],
        p_bob: f64,
        bases: &[BasisIndex],
        data: Option<&[bool]>,
        block: u64,
        master_seed: u64,
    ) -> Self {
        let mut data_rng = RngStream::for_block(master_seed, block, Purpose::Data);
        let mut eve_rng = RngStream::for_block(master_seed, block, Purpose::Eve);
        let mut bob_rng = RngStream::for_block(master_seed, block, Purpose::Bob);
        let n = bases.len();
        let mut t = Transcript {
            constellation: *c,
            x: Vec::with_capacity(n),
            r: bases.to_vec(),
            l_sent: Vec::with_capacity(n),
            y_eve: Vec::with_capacity(n),
            b_bob: Vec::with_capacity(n),
        };
        for (i, &r) in bases.iter().enumerate() {
            let bit = match data {
                Some(d) => d[i],
                None => data_rng.bit(),
            };
            let l = c.encode_unchecked(bit, r.0);
            let a = amps[l as usize];
            let y = ComplexPoint::new(
                a.re + QUADRATURE_SIGMA * eve_rng.normal(),
                a.im + QUADRATURE_SIGMA * eve_rng.normal(),
            );
            t.x.push(bit);
            t.l_sent.push(l);
            t.y_eve.push(y);
            t.b_bob.push(bit ^ bob_rng.bernoulli(p_bob));
        }
        t
    }

    /// Runs `f` on consecutive blocks of [`MC_BLOCK`] qumodes and returns
    /// the results in block order. Each block draws from its own substreams,
    /// so the output does not depend on the worker count.
    pub fn for_each_block<T, F>(
        c: &Constellation,
        bases: &[BasisIndex],
        data: Option<&[bool]>,
        master_seed: u64,
        f: F,
    ) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&Transcript) -> T + Sync,
    {
        if let Some(d) = data {
            if d.len() != bases.len() {
                return Err(Error::domain("data and running key differ in length"));
            }
        }
        if let Some(bad) = bases.iter().find(|r| r.0 >= c.num_bases()) {
            return Err(Error::domain(format!("basis index {} out of range", bad.0)));
        }
        let amps = c.amplitudes();
        let p_bob = helstrom_error(c.mean_photon_number(), ErrorForm::Exact)?;
        Ok(blocks(bases.len() as u64, MC_BLOCK)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|(b, start, len)| {
                let (s, e) = (start as usize, (start + len) as usize);
                let t = Self::simulate_block(
                    c,
                    &amps,
                    p_bob,
                    &bases[s..e],
                    data.map(|d| &d[s..e]),
                    b,
                    master_seed,
                );
                f(&t)
            })
            .collect())
    }

    /// Full transcript for the given running key.
    pub fn simulate(
        c: &Constellation,
        bases: &[BasisIndex],
        data: Option<&[bool]>,
        master_seed: u64,
    ) -> Result<Self> {
        let parts = Self::for_each_block(c, bases, data, master_seed, Clone::clone)?;
        let mut out = Self::empty(*c);
        for p in parts {
            out.x.extend(p.x);
            out.r.extend(p.r);
            out.l_sent.extend(p.l_sent);
            out.y_eve.extend(p.y_eve);
            out.b_bob.extend(p.b_bob);
        }
        Ok(out)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "i,x,r,l,y_re,y_im,b_bob")?;
        for i in 0..self.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                i,
                u8::from(self.x[i]),
                self.r[i].0,
                self.l_sent[i],
                self.y_eve[i].re,
                self.y_eve[i].im,
                u8::from(self.b_bob[i])
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(c: Constellation, r: R) -> Result<Self> {
        let mut t = Self::empty(c);
        let mut lines = r.lines();
        let header = lines.next().transpose()?;
        if header.as_deref().map(str::trim) != Some("i,x,r,l,y_re,y_im,b_bob") {
            return Err(Error::domain("missing transcript CSV header"));
        }
        for (row, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.trim().split(',').collect();
            if f.len() != 7 {
                return Err(Error::domain(format!("row {row}: expected 7 fields")));
            }
            let bad = |what: &str| Error::domain(format!("row {row}: bad {what}"));
            let bit = |s: &str, what: &str| match s {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(bad(what)),
            };
            if f[0].parse::<usize>().map_err(|_| bad("i"))? != row {
                return Err(bad("i"));
            }
            t.x.push(bit(f[1], "x")?);
            t.r.push(BasisIndex(f[2].parse().map_err(|_| bad("r"))?));
            t.l_sent.push(f[3].parse().map_err(|_| bad("l"))?);
            t.y_eve.push(ComplexPoint::new(
                f[4].parse().map_err(|_| bad("y_re"))?,
                f[5].parse().map_err(|_| bad("y_im"))?,
            ));
            t.b_bob.push(bit(f[6], "b_bob")?);
        }
        t.validate()?;
        Ok(t)
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.constellation.size().to_le_bytes())?;
        w.write_all(&self.constellation.alpha0().to_le_bytes())?;
        w.write_all(&(self.len() as u64).to_le_bytes())?;
        let mut rec = [0u8; 2 + RECORD_LEN as usize];
        for i in 0..self.len() {
            rec[0..2].copy_from_slice(&RECORD_LEN.to_le_bytes());
            rec[2..10].copy_from_slice(&(i as u64).to_le_bytes());
            rec[10] = u8::from(self.x[i]);
            rec[11..15].copy_from_slice(&self.r[i].0.to_le_bytes());
            rec[15..19].copy_from_slice(&self.l_sent[i].to_le_bytes());
            rec[19..27].copy_from_slice(&self.y_eve[i].re.to_le_bytes());
            rec[27..35].copy_from_slice(&self.y_eve[i].im.to_le_bytes());
            rec[35] = u8::from(self.b_bob[i]);
            w.write_all(&rec)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 28];
        r.read_exact(&mut head)?;
        if &head[0..4] != MAGIC {
            return Err(Error::domain("not a transcript file (bad magic)"));
        }
        let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(Error::domain(format!("unsupported transcript version {version}")));
        }
        let m = u32::from_le_bytes(head[8..12].try_into().unwrap());
        let alpha0 = f64::from_le_bytes(head[12..20].try_into().unwrap());
        let n = u64::from_le_bytes(head[20..28].try_into().unwrap());
        let c = Constellation::new(m, alpha0)?;
        let mut t = Self::empty(c);
        let mut rec = [0u8; 2 + RECORD_LEN as usize];
        for i in 0..n {
            r.read_exact(&mut rec)?;
            if u16::from_le_bytes([rec[0], rec[1]]) != RECORD_LEN {
                return Err(Error::domain(format!("record {i}: bad length prefix")));
            }
            if u64::from_le_bytes(rec[2..10].try_into().unwrap()) != i {
                return Err(Error::domain(format!("record {i}: index mismatch")));
            }
            t.x.push(rec[10] == 1);
            t.r.push(BasisIndex(u32::from_le_bytes(rec[11..15].try_into().unwrap())));
            t.l_sent.push(u32::from_le_bytes(rec[15..19].try_into().unwrap()));
            t.y_eve.push(ComplexPoint::new(
                f64::from_le_bytes(rec[19..27].try_into().unwrap()),
                f64::from_le_bytes(rec[27..35].try_into().unwrap()),
            ));
            t.b_bob.push(rec[35] == 1);
        }
        t.validate()?;
        Ok(t)
    }

    /// CSV up to [`CSV_MAX_LEN`] rows, binary above.
    pub fn write_auto<W: Write>(&self, w: W) -> Result<()> {
        if self.len() <= CSV_MAX_LEN {
            self.write_csv(w)
        } else {
            self.write_binary(w)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Transcript {
        let c = Constellation::new(16, 2.0).unwrap();
        let bases: Vec<BasisIndex> = (0..300u32).map(|i| BasisIndex(i * 7 % 8)).collect();
        Transcript::simulate(&c, &bases, None, 99).unwrap()
    }

    #[test]
    fn simulate_is_consistent() {
        let t = sample();
        assert_eq!(t.len(), 300);
        t.validate().unwrap();
    }

    #[test]
    fn csv_roundtrip() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = Transcript::read_csv(t.constellation, &buf[..]).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn binary_roundtrip_and_layout() {
        let t = sample();
        let mut buf = Vec::new();
        t.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 28 + 300 * 36);
        assert_eq!(&buf[0..4], b"Y00T");
        assert_eq!(u16::from_le_bytes([buf[28], buf[29]]), 34);
        let back = Transcript::read_binary(&buf[..]).unwrap();
        assert_eq!(back, t);
        buf[0] = b'X';
        assert!(Transcript::read_binary(&buf[..]).is_err());
    }

    #[test]
    fn supplied_data_is_used() {
        let c = Constellation::new(8, 1.0).unwrap();
        let bases = vec![BasisIndex(1); 10];
        let data: Vec<bool> = (0..10).map(|i| i % 3 == 0).collect();
        let t = Transcript::simulate(&c, &bases, Some(&data), 1).unwrap();
        assert_eq!(t.x, data);
        assert!(Transcript::simulate(&c, &bases, Some(&data[..5]), 1).is_err());
        assert!(Transcript::simulate(&c, &[BasisIndex(4)], None, 1).is_err());
    }

    #[test]
    fn corrupted_rows_rejected() {
        let mut t = sample();
        t.l_sent[3] ^= 1;
        assert!(t.validate().is_err());
    }
}
