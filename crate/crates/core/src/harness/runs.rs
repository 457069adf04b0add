use std::path::Path;

use crate::attacks::{binarization_error_prediction, binarization_errors, eq4_estimate, keyed_decode_errors};
use crate::constellation::BasisIndex;
use crate::error::{Error, Result};
use crate::estimate::BerEstimate;
use crate::infotheory::{binary_entropy, key_rate, posterior_bit_entropy, privacy_amplify};
use crate::keystream::running_key_sequence;
use crate::measurement::{helstrom_error, heterodyne_error, ErrorForm};
use crate::rng::{Purpose, RngStream};
use crate::transcript::Transcript;

use super::config::{AttackSelection, ExperimentConfig};
use super::report::{Provenance, Report, Row};

/// Block id reserved for the privacy-amplification hash seed.
const HASH_SEED_BLOCK: u64 = (1 << 61) - 1;

fn echo(cfg: &ExperimentConfig) -> serde_json::Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn bases(cfg: &ExperimentConfig) -> Result<Vec<BasisIndex>> {
    let c = cfg.constellation()?;
    let n = usize::try_from(cfg.n).map_err(|_| Error::ResourceLimit("n does not fit in memory".into()))?;
    running_key_sequence(&cfg.seed_key()?, &cfg.lfsr_spec()?, n, &c)
}

/// Encode, measure and record `cfg.n` qumodes with uniform data bits.
pub fn run_transcript(cfg: &ExperimentConfig) -> Result<Transcript> {
    cfg.validate()?;
    let c = cfg.constellation()?;
    Transcript::simulate(&c, &bases(cfg)?, None, cfg.master_seed)
}

/// Writes `t` as CSV up to [`crate::transcript::CSV_MAX_LEN`] qumodes and
/// as binary records above that.
pub fn write_transcript(t: &Transcript, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(f);
    t.write_auto(&mut w)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

fn ber_rows(report: &mut Report, name: &str, est: &BerEstimate, oracle: Option<f64>) {
    report.push(Row::new(format!("{name} errors"), est.errors as f64, "count", Provenance::MonteCarlo));
    let mut row = Row::new(format!("{name} BER"), est.p_hat, "probability", Provenance::MonteCarlo)
        .note(format!("95% half-width {:.3e}", est.ci95));
    if let Some(p) = oracle {
        let z = est.z_score(p);
        row = row.check(format!("within 3 sigma of {p:.6e}"), z.abs() < 3.0);
    }
    report.push(row);
}

/// Simulates the configured run and applies the selected attack.
pub fn run_attack(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    if cfg.n == 0 {
        return Err(Error::config("n", "an attack needs at least one qumode"));
    }
    let c = cfg.constellation()?;
    let s = c.mean_photon_number();
    let attack = cfg.attack;
    let counts = Transcript::for_each_block(&c, &bases(cfg)?, None, cfg.master_seed, |t| {
        let bob = t.b_bob.iter().zip(&t.x).filter(|(b, x)| b != x).count() as u64;
        let eve = match attack {
            AttackSelection::None => 0,
            AttackSelection::Binarize => binarization_errors(t),
            AttackSelection::HeterodyneKeyKnown => keyed_decode_errors(t, true),
            AttackSelection::HeterodyneKeyUnknown => keyed_decode_errors(t, false),
        };
        (bob, eve)
    })?;
    let (bob, eve) = counts.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let mut report = Report::new("attack", echo(cfg));
    report.push(Row::new("qumodes", cfg.n as f64, "count", Provenance::MonteCarlo));
    ber_rows(
        &mut report,
        "Bob",
        &BerEstimate::new(bob, cfg.n),
        Some(helstrom_error(s, ErrorForm::Exact)?),
    );
    let eve = BerEstimate::new(eve, cfg.n);
    match attack {
        AttackSelection::None => {}
        AttackSelection::Binarize => {
            ber_rows(&mut report, "binarization", &eve, Some(binarization_error_prediction(&c)));
            if c.alpha0() > 0.0 {
                report.push(Row::new("2/(pi alpha0)", eq4_estimate(c.alpha0())?, "probability", Provenance::Formula));
            }
        }
        AttackSelection::HeterodyneKeyKnown => {
            ber_rows(&mut report, "heterodyne key-known", &eve, Some(heterodyne_error(s, ErrorForm::Exact)?));
        }
        AttackSelection::HeterodyneKeyUnknown => {
            ber_rows(&mut report, "heterodyne state identification", &eve, None);
        }
    }
    Ok(report)
}

/// Result of a key-generation run.
#[derive(Debug, Clone, PartialEq)]
pub struct KeygenOutcome {
    pub report: Report,
    /// Empty when the run was refused or in analytic mode.
    pub secret: Vec<bool>,
}

fn refuse(mut report: Report, why: String) -> KeygenOutcome {
    report.refusal = Some(why);
    KeygenOutcome { report, secret: Vec::new() }
}

/// Advantage check, raw-key simulation and privacy amplification.
///
/// Eve is granted the key and measures heterodyne, the most favourable
/// setting for her among the receivers modelled here.
pub fn keygen(cfg: &ExperimentConfig) -> Result<KeygenOutcome> {
    cfg.validate()?;
    let c = cfg.constellation()?;
    let s = c.mean_photon_number();
    let opts = &cfg.keygen;
    let mut report = Report::new("keygen", echo(cfg));
    let p_bob_exact = helstrom_error(s, ErrorForm::Exact)?;
    let h_bob = binary_entropy(p_bob_exact)?;

    if opts.analytic {
        let p_eve = match opts.p_eve {
            Some(p) => p,
            None => heterodyne_error(s, ErrorForm::Exact)?,
        };
        report.push(Row::new("p_bob", p_bob_exact, "probability", Provenance::Formula));
        report.push(Row::new("p_eve", p_eve, "probability", Provenance::Formula));
        let rate = key_rate(p_bob_exact, p_eve, opts.raw_rate, opts.method)?;
        if !rate.advantage {
            return Ok(refuse(report, format!("no advantage: p_bob = {p_bob_exact:.3e} is not below p_eve = {p_eve:.3e}")));
        }
        report.push(Row::new("raw rate", opts.raw_rate, "bits/s", Provenance::Formula));
        report.push(Row::new("secret rate", rate.rate, "bits/s", Provenance::Formula));
        return Ok(KeygenOutcome { report, secret: Vec::new() });
    }

    let h_eve_known = posterior_bit_entropy(&c, true)?;
    report.push(
        Row::new("Eve posterior entropy, key known", h_eve_known, "bits", Provenance::Formula)
            .note("adaptive quadrature"),
    );
    report.push(Row::new("h(p_bob)", h_bob, "bits", Provenance::Formula));
    if !(h_eve_known > h_bob) {
        return Ok(refuse(
            report,
            format!("no advantage at S = {s}: Eve's residual entropy {h_eve_known:.3e} does not exceed Bob's h(p_bob) = {h_bob:.3e}"),
        ));
    }
    if cfg.n == 0 {
        return Ok(refuse(report, "no raw bits requested (n = 0)".into()));
    }

    let parts = Transcript::for_each_block(&c, &bases(cfg)?, None, cfg.master_seed, |t| {
        let bob = t.b_bob.iter().zip(&t.x).filter(|(b, x)| b != x).count() as u64;
        (t.x.clone(), bob, keyed_decode_errors(t, true))
    })?;
    let mut raw = Vec::with_capacity(cfg.n as usize);
    let (mut bob_err, mut eve_err) = (0u64, 0u64);
    for (x, b, e) in parts {
        raw.extend(x);
        bob_err += b;
        eve_err += e;
    }
    let n = cfg.n as f64;
    let p_bob = bob_err as f64 / n;
    let p_eve = opts.p_eve.unwrap_or(eve_err as f64 / n);
    report.push(Row::new("raw bits", n, "bits", Provenance::MonteCarlo));
    report.push(Row::new("Bob errors", bob_err as f64, "count", Provenance::MonteCarlo));
    report.push(Row::new("Eve errors", eve_err as f64, "count", Provenance::MonteCarlo));
    report.push(Row::new("p_bob", p_bob, "probability", Provenance::MonteCarlo));
    report.push(Row::new(
        "p_eve",
        p_eve,
        "probability",
        if opts.p_eve.is_some() { Provenance::Formula } else { Provenance::MonteCarlo },
    ));
    let rate = key_rate(p_bob, p_eve, n, opts.method)?;
    if !rate.advantage {
        return Ok(refuse(report, format!("no advantage: observed p_bob = {p_bob:.3e} is not below p_eve = {p_eve:.3e}")));
    }
    // guard against p·n landing a hair below an integer
    let out_len = ((rate.rate * (1.0 + 1e-12)).floor() as usize).min(raw.len());
    let mut rng = RngStream::for_block(cfg.master_seed, HASH_SEED_BLOCK, Purpose::Aux);
    let hash_seed: Vec<bool> = (0..(raw.len() + out_len).saturating_sub(1)).map(|_| rng.bit()).collect();
    let secret = privacy_amplify(&raw, out_len, &hash_seed)?;
    report.push(Row::new("secret bits", secret.len() as f64, "bits", Provenance::MonteCarlo));
    report.push(Row::new(
        "secret rate",
        secret.len() as f64 / n * opts.raw_rate,
        "bits/s",
        Provenance::MonteCarlo,
    ));
    Ok(KeygenOutcome { report, secret })
}

pub fn run_keygen(cfg: &ExperimentConfig) -> Result<Report> {
    keygen(cfg).map(|o| o.report)
}

/// Lower-case hex of a bit string, four bits per digit, MSB first, zero-padded at the end.
pub fn bits_to_hex(bits: &[bool]) -> String {
    bits.chunks(4)
        .map(|ch| {
            let v = ch.iter().enumerate().fold(0u32, |a, (i, &b)| a | (u32::from(b) << (3 - i)));
            char::from_digit(v, 16).expect("nibble")
        })
        .collect()
}
