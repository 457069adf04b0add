//! `y00`: command-line front end for the simulator.
//!
//! Precedence for experiment settings: command flags, then global flags
//! (`--seed`, `--workers` or `Y00_WORKERS`), then the `--config` file, then
//! built-in defaults.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use y00_core::attacks::keysearch::Observation;
use y00_core::attacks::{search_complexity, seed_recovery_trials, AttackKind};
use y00_core::harness::{
    self, AttackSelection, ExperimentConfig, Provenance, Report, Row, DEFAULT_MASTER_SEED,
};
use y00_core::infotheory::amplify::{hex_to_bits, parse_bits};
use y00_core::infotheory::{
    exact_cipher_entropies, key_rate, posterior_bit_entropy, privacy_amplify, RateMethod, TinyCipherSpec,
};
use y00_core::measurement::{bob_ber_mc, heterodyne_ber_mc, receiver_error};
use y00_core::{Constellation, Error, ErrorForm, LfsrSpec, ReceiverModel};

const EXIT_VALIDATION: u8 = 1;
const EXIT_RESOURCE: u8 = 2;
const EXIT_ACCEPTANCE: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "y00", version, about = "Y-00 coherent-state cipher simulator")]
struct Cli {
    /// Experiment configuration (JSON). For `entropy exact`, a tiny-cipher spec.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed of all random streams.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true, env = "Y00_WORKERS")]
    workers: Option<usize>,
    /// Report format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
    /// Add the wall-clock runtime to the report (makes it run-dependent).
    #[arg(long, global = true)]
    timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum, PartialEq, Eq)]
enum OutFormat {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Receiver bit error rates, closed form or Monte Carlo.
    Ber(BerCmd),
    /// Attacks on the cipher.
    #[command(subcommand)]
    Attack(AttackCmd),
    /// Conditional entropies.
    #[command(subcommand)]
    Entropy(EntropyCmd),
    /// Secret-key rate from Bob's and Eve's error rates.
    Keyrate(KeyrateArgs),
    /// Toeplitz privacy amplification of a bit file.
    Pa(PaArgs),
    /// Simulate and persist a transcript.
    Transcript(RunArgs),
    /// Advantage check, raw key, privacy amplification.
    Keygen(KeygenArgs),
    /// Recompute the acceptance table; exit code 3 if any row fails.
    ReproducePaper,
}

#[derive(Args, Debug)]
#[command(args_conflicts_with_subcommands = true)]
struct BerCmd {
    #[command(subcommand)]
    mc: Option<BerMc>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Mean photon number.
    #[arg(long = "S")]
    s: Option<f64>,
    #[arg(long, value_enum, default_value_t = FormArg::Exact)]
    form: FormArg,
}

#[derive(Subcommand, Debug)]
enum BerMc {
    /// Monte Carlo estimate of a receiver's bit error rate.
    Mc {
        #[arg(long, value_enum, default_value_t = ModelArg::Heterodyne)]
        model: ModelArg,
        #[arg(long = "S")]
        s: f64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Helstrom,
    Heterodyne,
    Phase,
}

impl From<ModelArg> for ReceiverModel {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Helstrom => ReceiverModel::Helstrom,
            ModelArg::Heterodyne => ReceiverModel::Heterodyne,
            ModelArg::Phase => ReceiverModel::Phase,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormArg {
    Exact,
    Asymptotic,
}

impl From<FormArg> for ErrorForm {
    fn from(f: FormArg) -> Self {
        match f {
            FormArg::Exact => ErrorForm::Exact,
            FormArg::Asymptotic => ErrorForm::Asymptotic,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    PaperHeuristic,
    Ck,
}

impl From<MethodArg> for RateMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::PaperHeuristic => RateMethod::PaperHeuristic,
            MethodArg::Ck => RateMethod::Ck,
        }
    }
}

#[derive(Subcommand, Debug)]
enum AttackCmd {
    /// Binarization attack on a simulated run.
    Binarize(RunArgs),
    /// Exhaustive seed recovery from binarized outcomes, known plaintext.
    Keysearch {
        /// Seed length; a default primitive polynomial of this degree is used.
        #[arg(long, default_value_t = 16)]
        klen: u32,
        #[arg(long = "M", default_value_t = 4)]
        m: u32,
        /// Observed qumodes per trial.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Probability that an observed bit is flipped.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        /// Replace the observations by fair coin flips.
        #[arg(long)]
        coin_flips: bool,
        #[arg(long, default_value_t = 100)]
        trials: u32,
    },
    /// Brute-force search complexity `log₂ C`.
    Complexity {
        #[arg(long = "M")]
        m: u32,
        #[arg(long)]
        alpha0: f64,
        #[arg(long)]
        klen: u32,
        /// 1 for known plaintext, 2 for ciphertext only.
        #[arg(long, default_value_t = 1)]
        lambda: u8,
    },
}

#[derive(Subcommand, Debug)]
enum EntropyCmd {
    /// Exact entropies of the tiny cipher given by `--config`.
    Exact,
    /// Eve's posterior entropy of a data bit after heterodyne detection.
    Posterior {
        #[arg(long = "M")]
        m: u32,
        #[arg(long)]
        alpha0: f64,
        #[arg(long)]
        key_known: bool,
    },
}

#[derive(Args, Debug)]
struct KeyrateArgs {
    #[arg(long)]
    pe: f64,
    #[arg(long)]
    pb: f64,
    /// Raw bit rate in bits per second.
    #[arg(long)]
    raw: f64,
    #[arg(long, value_enum, default_value_t = MethodArg::PaperHeuristic)]
    method: MethodArg,
}

#[derive(Args, Debug)]
struct PaArgs {
    /// File of `0`/`1` characters; whitespace is ignored.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    outlen: usize,
    /// Hash seed as hex, MSB of each digit first; the leading
    /// `in + outlen - 1` bits are used.
    #[arg(long)]
    hashseed: String,
}

/// Overrides for an [`ExperimentConfig`].
#[derive(Args, Debug, Default)]
struct RunArgs {
    #[arg(long = "M")]
    m: Option<u32>,
    #[arg(long)]
    alpha0: Option<f64>,
    /// Qumodes to simulate.
    #[arg(long)]
    n: Option<u64>,
    /// LFSR degree; the default primitive polynomial is used unless the config gives taps.
    #[arg(long)]
    degree: Option<u32>,
    /// LFSR seed (hex).
    #[arg(long)]
    key: Option<String>,
    /// Transcript file (CSV up to 100000 qumodes, binary above).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write the report to this file.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct KeygenArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    raw_rate: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<MethodArg>,
    /// Use this value for Eve's error rate instead of the simulated one.
    #[arg(long)]
    p_eve: Option<f64>,
    /// Rates from error probabilities only, no sampling.
    #[arg(long)]
    analytic: bool,
    /// Write the secret key (hex) to this file.
    #[arg(long)]
    key_out: Option<PathBuf>,
}

struct Ctx {
    config: Option<PathBuf>,
    seed: Option<u64>,
    workers: Option<usize>,
    out: OutFormat,
    timing: bool,
}

impl Ctx {
    fn experiment(&self, args: &RunArgs) -> Result<ExperimentConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_path(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = Some(w);
        }
        if let Some(m) = args.m {
            cfg.m = m;
        }
        if let Some(a) = args.alpha0 {
            cfg.alpha0 = a;
        }
        if let Some(n) = args.n {
            cfg.n = n;
        }
        if let Some(d) = args.degree {
            cfg.lfsr.degree = d;
            cfg.lfsr.taps = None;
        }
        if let Some(k) = &args.key {
            cfg.lfsr.seed = k.clone();
        }
        if let Some(o) = &args.output {
            cfg.output.transcript = Some(o.clone());
        }
        if let Some(r) = &args.report {
            cfg.output.report = Some(r.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn emit(&self, report: &mut Report, started: Instant, path: Option<&Path>) -> Result<(), Error> {
        if self.timing {
            report.runtime_s = Some(started.elapsed().as_secs_f64());
        }
        let text = match self.out {
            OutFormat::Json => report.to_json(),
            OutFormat::Csv => report.to_csv(),
        };
        if let Some(p) = path {
            std::fs::write(p, &text).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
        }
        print!("{text}");
        Ok(())
    }
}

fn validation(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.into(),
        reason: reason.into(),
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    let ctx = Ctx {
        config: cli.config,
        seed: cli.seed,
        workers: cli.workers,
        out: cli.out,
        timing: cli.timing,
    };
    let workers = match ctx.workers {
        Some(w) => w,
        None => match &ctx.config {
            // the experiment config may carry a worker count; tiny-cipher specs do not
            Some(p) => ExperimentConfig::from_path(p).ok().and_then(|c| c.workers),
            None => None,
        }
        .map_or_else(|| harness::resolve_workers(None), Ok)?,
    };
    harness::with_workers(workers, move || dispatch(&ctx, cli.command))?
}

fn dispatch(ctx: &Ctx, command: Command) -> Result<u8, Error> {
    let started = Instant::now();
    let master_seed = ctx.seed.unwrap_or(DEFAULT_MASTER_SEED);
    match command {
        Command::Ber(cmd) => {
            let mut report = match cmd.mc {
                Some(BerMc::Mc { model, s, trials }) => {
                    let est = match model {
                        ModelArg::Heterodyne => heterodyne_ber_mc(s, trials, master_seed)?,
                        ModelArg::Helstrom => bob_ber_mc(s, trials, master_seed)?,
                        ModelArg::Phase => {
                            return Err(validation("model", "Monte Carlo is available for heterodyne and helstrom"))
                        }
                    };
                    let exact = receiver_error(model.into(), s, ErrorForm::Exact)?;
                    let mut r = Report::new(
                        "ber mc",
                        serde_json::json!({"model": format!("{model:?}").to_lowercase(), "S": s, "trials": trials, "master_seed": master_seed}),
                    );
                    r.push(Row::new("errors", est.errors as f64, "count", Provenance::MonteCarlo));
                    r.push(
                        Row::new("BER", est.p_hat, "probability", Provenance::MonteCarlo)
                            .check(format!("within 3 sigma of {exact:.6e}"), est.z_score(exact).abs() < 3.0)
                            .note(format!("95% half-width {:.3e}", est.ci95)),
                    );
                    r.push(Row::new("exact", exact, "probability", Provenance::Formula));
                    r
                }
                None => {
                    let model = cmd.model.ok_or_else(|| validation("model", "required"))?;
                    let s = cmd.s.ok_or_else(|| validation("S", "required"))?;
                    let p = receiver_error(model.into(), s, cmd.form.into())?;
                    let mut r = Report::new(
                        "ber",
                        serde_json::json!({"model": format!("{model:?}").to_lowercase(), "S": s, "form": format!("{:?}", cmd.form).to_lowercase()}),
                    );
                    r.push(Row::new("error probability", p, "probability", Provenance::Formula));
                    r
                }
            };
            ctx.emit(&mut report, started, None)?;
            Ok(0)
        }
        Command::Attack(AttackCmd::Binarize(args)) => {
            let mut cfg = ctx.experiment(&args)?;
            cfg.attack = AttackSelection::Binarize;
            let mut report = harness::run_attack(&cfg)?;
            ctx.emit(&mut report, started, cfg.output.report.as_deref())?;
            Ok(0)
        }
        Command::Attack(AttackCmd::Keysearch {
            klen,
            m,
            n,
            noise,
            coin_flips,
            trials,
        }) => {
            let spec = LfsrSpec::primitive(klen)?;
            let c = Constellation::new(m, 1.0)?;
            let obs = if coin_flips { Observation::CoinFlips } else { Observation::Noisy(noise) };
            let stats = seed_recovery_trials(&spec, &c, n, obs, trials, master_seed)?;
            let mut r = Report::new(
                "attack keysearch",
                serde_json::json!({"klen": klen, "M": m, "n": n, "observation": obs, "trials": trials, "master_seed": master_seed}),
            );
            r.push(Row::new("rank-1 recoveries", f64::from(stats.rank1), "trials", Provenance::MonteCarlo));
            r.push(Row::new("trials", f64::from(stats.trials), "trials", Provenance::MonteCarlo));
            r.push(Row::new("mean normalized rank", stats.mean_normalized_rank, "fraction", Provenance::MonteCarlo));
            ctx.emit(&mut r, started, None)?;
            Ok(0)
        }
        Command::Attack(AttackCmd::Complexity { m, alpha0, klen, lambda }) => {
            let kind = AttackKind::from_lambda(lambda)?;
            let cx = search_complexity(m, alpha0, klen, kind)?;
            let mut r = Report::new(
                "attack complexity",
                serde_json::json!({"M": m, "alpha0": alpha0, "klen": klen, "lambda": lambda}),
            );
            let mut row = Row::new("log2 C", cx.log2_c, "bits", Provenance::Formula);
            if cx.degenerate {
                row = row.note("lambda M / (sqrt2 pi alpha0) <= 1: no meaningful search advantage");
            }
            r.push(row);
            ctx.emit(&mut r, started, None)?;
            Ok(0)
        }
        Command::Entropy(EntropyCmd::Exact) => {
            let path = ctx
                .config
                .as_ref()
                .ok_or_else(|| validation("config", "entropy exact needs --config <tiny cipher spec>"))?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            let spec: TinyCipherSpec =
                serde_json::from_str(&text).map_err(|e| validation("config", e.to_string()))?;
            let e = exact_cipher_entropies(&spec)?;
            let mut r = Report::new("entropy exact", serde_json::to_value(&spec).expect("spec serializes"));
            for (name, v) in [
                ("h_x_given_y", e.h_x_given_y),
                ("h_k_given_y", e.h_k_given_y),
                ("h_y_given_xk", e.h_y_given_xk),
                ("h_k", e.h_k),
                ("h_x", e.h_x),
            ] {
                r.push(Row::new(name, v, "bits", Provenance::Enumeration));
            }
            ctx.emit(&mut r, started, None)?;
            Ok(0)
        }
        Command::Entropy(EntropyCmd::Posterior { m, alpha0, key_known }) => {
            let c = Constellation::new(m, alpha0)?;
            let h = posterior_bit_entropy(&c, key_known)?;
            let mut r = Report::new(
                "entropy posterior",
                serde_json::json!({"M": m, "alpha0": alpha0, "key_known": key_known}),
            );
            r.push(Row::new("posterior bit entropy", h, "bits", Provenance::Formula).note("adaptive quadrature"));
            ctx.emit(&mut r, started, None)?;
            Ok(0)
        }
        Command::Keyrate(a) => {
            if !(a.raw > 0.0) {
                return Err(validation("raw", "must be positive"));
            }
            let kr = key_rate(a.pb, a.pe, a.raw, a.method.into())?;
            let mut r = Report::new(
                "keyrate",
                serde_json::json!({"p_eve": a.pe, "p_bob": a.pb, "raw_rate": a.raw, "method": RateMethod::from(a.method)}),
            );
            r.push(Row::new("secret key rate", kr.rate, "bits/s", Provenance::Formula));
            r.push(Row::new("advantage", f64::from(u8::from(kr.advantage)), "bool", Provenance::Formula));
            ctx.emit(&mut r, started, None)?;
            Ok(0)
        }
        Command::Pa(a) => {
            let text = std::fs::read_to_string(&a.input).map_err(|e| Error::Io(format!("{}: {e}", a.input.display())))?;
            let bits = parse_bits(&text)?;
            let mut seed = hex_to_bits(&a.hashseed)?;
            let need = (bits.len() + a.outlen).saturating_sub(1);
            if a.outlen > 0 {
                if seed.len() < need {
                    return Err(validation(
                        "hashseed",
                        format!("{} bits given, {need} needed for {} input bits", seed.len(), bits.len()),
                    ));
                }
                seed.truncate(need);
            }
            let out = privacy_amplify(&bits, a.outlen, &seed)?;
            let s: String = out.iter().map(|&b| if b { '1' } else { '0' }).collect();
            match ctx.out {
                OutFormat::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&serde_json::json!({"input_len": bits.len(), "out_len": a.outlen, "bits": s}))
                        .expect("json")
                ),
                OutFormat::Csv => println!("{s}"),
            }
            Ok(0)
        }
        Command::Transcript(args) => {
            let cfg = ctx.experiment(&args)?;
            let t = harness::run_transcript(&cfg)?;
            let mut r = Report::new("transcript", serde_json::to_value(&cfg).expect("config serializes"));
            let bob = t.b_bob.iter().zip(&t.x).filter(|(b, x)| b != x).count();
            r.push(Row::new("qumodes", t.len() as f64, "count", Provenance::MonteCarlo));
            r.push(Row::new("Bob errors", bob as f64, "count", Provenance::MonteCarlo));
            match &cfg.output.transcript {
                Some(p) => harness::write_transcript(&t, p)?,
                None => eprintln!("note: no --output given, transcript not written"),
            }
            ctx.emit(&mut r, started, cfg.output.report.as_deref())?;
            Ok(0)
        }
        Command::Keygen(k) => {
            let mut cfg = ctx.experiment(&k.run)?;
            if let Some(v) = k.raw_rate {
                cfg.keygen.raw_rate = v;
            }
            if let Some(m) = k.method {
                cfg.keygen.method = m.into();
            }
            if k.p_eve.is_some() {
                cfg.keygen.p_eve = k.p_eve;
            }
            cfg.keygen.analytic |= k.analytic;
            if let Some(p) = &k.key_out {
                cfg.output.key = Some(p.clone());
            }
            cfg.validate()?;
            let mut out = harness::keygen(&cfg)?;
            if let (Some(p), None) = (&cfg.output.key, &out.report.refusal) {
                std::fs::write(p, harness::bits_to_hex(&out.secret) + "\n")
                    .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            }
            ctx.emit(&mut out.report, started, cfg.output.report.as_deref())?;
            if let Some(why) = &out.report.refusal {
                eprintln!("keygen refused: {why}");
                return Ok(EXIT_VALIDATION);
            }
            Ok(0)
        }
        Command::ReproducePaper => {
            let mut r = harness::reproduce_paper(master_seed)?;
            ctx.emit(&mut r, started, None)?;
            let failures = r.failures();
            if failures.is_empty() {
                Ok(0)
            } else {
                for f in failures {
                    eprintln!("FAIL {}: {} (target {})", f.name, f.value, f.target.as_deref().unwrap_or(""));
                }
                Ok(EXIT_ACCEPTANCE)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::ResourceLimit(_) => EXIT_RESOURCE,
                _ => EXIT_VALIDATION,
            })
        }
    }
}
