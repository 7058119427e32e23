//! The `ccipher` command-line front end.
//!
//! Every subcommand validates its flags before computing anything. Exit codes:
//! 0 on success, 2 on flag or validation errors, 1 on numerical failure (and,
//! for `validate`, on any tolerance violation). Probabilities are written with
//! 17 significant digits.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::fock_oracle::{oracle_min_error, required_dimension, DEFAULT_TAIL_TOL};
use crate::helstrom::{
    bob_error, eve_error, pe_curve_with, EngineOptions, Priors, DEFAULT_RANK_TOL,
};
use crate::keystream::{bits_per_index, parse_hex_seed, parse_taps, LfsrState};
use crate::protocol_sim::{run_session, SimConfig};
use crate::states::EncodingKind;

/// Largest `|gram - oracle|` accepted by `validate`.
pub const VALIDATE_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(
    name = "ccipher",
    version,
    about = "Keyed M-ary coherent-state cipher toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eavesdropper and keyed-receiver error versus M as CSV.
    PeCurve(PeCurveArgs),
    /// Keyed-receiver error versus mean photon number as CSV.
    BobError(BobErrorArgs),
    /// Monte Carlo session with heterodyne receivers.
    Simulate(SimulateArgs),
    /// Cross-check the subspace engine against the Fock-space oracle.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct PeCurveArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0, 1000.0])]
    pub nbar: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub m_min: usize,
    #[arg(long, default_value_t = 200)]
    pub m_max: usize,
    #[arg(long, default_value_t = 1)]
    pub m_step: usize,
    #[arg(long, default_value = "phase")]
    pub encoding: EncodingKind,
    /// Prior probability of bit 0.
    #[arg(long, default_value_t = 0.5)]
    pub p0: f64,
    /// Relative eigenvalue cutoff of the Gram subspace.
    #[arg(long, default_value_t = DEFAULT_RANK_TOL)]
    pub rank_tol: f64,
    /// Output file, `-` for standard output.
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BobErrorArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 10.0, 100.0, 1000.0])]
    pub nbar: Vec<f64>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of ciphering levels (power of two).
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub nbar: f64,
    #[arg(long, default_value_t = 100_000)]
    pub bits: usize,
    #[arg(long, default_value_t = 0.0)]
    pub loss_db: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial LFSR register in hex.
    #[arg(long, default_value = "ACE1")]
    pub lfsr_seed: String,
    /// Tap positions (`16,14,13,11`) or a hex mask (`0xB400`).
    #[arg(long, default_value = "16,14,13,11")]
    pub lfsr_taps: String,
    #[arg(long, default_value = "phase")]
    pub encoding: EncodingKind,
    /// Worker threads; the report does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 8)]
    pub max_m: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.25, 1.0, 2.0])]
    pub nbar: Vec<f64>,
    /// Poisson tail budget per mode for the Fock cutoff.
    #[arg(long, default_value_t = DEFAULT_TAIL_TOL)]
    pub tail_tol: f64,
    /// Encodings to check; both by default.
    #[arg(long, value_delimiter = ',', default_values_t = EncodingKind::ALL)]
    pub encoding: Vec<EncodingKind>,
    #[arg(long, default_value = "-")]
    pub out: PathBuf,
}

/// Failure classes mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

fn failure(e: impl std::fmt::Display) -> CliError {
    CliError::Failure(e.to_string())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> CliResult<i32> {
    match cli.command {
        Command::PeCurve(a) => pe_curve_cmd(&a),
        Command::BobError(a) => bob_error_cmd(&a),
        Command::Simulate(a) => simulate_cmd(&a),
        Command::Validate(a) => validate_cmd(&a),
    }
}

fn open_out(path: &PathBuf) -> CliResult<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(path)
            .map_err(|e| failure(format!("cannot create {}: {e}", path.display())))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn write_all(path: &PathBuf, text: &str) -> CliResult<()> {
    let mut w = open_out(path)?;
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| failure(format!("write failed: {e}")))
}

fn check_nbars(values: &[f64]) -> CliResult<()> {
    if values.is_empty() {
        return Err(usage("--nbar needs at least one value"));
    }
    match values.iter().find(|x| !x.is_finite() || **x < 0.0) {
        Some(bad) => Err(usage(format!(
            "--nbar values must be finite and >= 0, got {bad}"
        ))),
        None => Ok(()),
    }
}

fn prob(x: f64) -> String {
    format!("{x:.16e}")
}

fn pe_curve_cmd(a: &PeCurveArgs) -> CliResult<i32> {
    check_nbars(&a.nbar)?;
    if a.m_min == 0 {
        return Err(usage("--m-min must be >= 1"));
    }
    if a.m_max < a.m_min {
        return Err(usage(format!(
            "--m-max {} is below --m-min {}",
            a.m_max, a.m_min
        )));
    }
    if a.m_step == 0 {
        return Err(usage("--m-step must be >= 1"));
    }
    if !(a.rank_tol > 0.0 && a.rank_tol < 1.0) {
        return Err(usage("--rank-tol must lie in (0, 1)"));
    }
    let priors = Priors::from_p0(a.p0).map_err(usage)?;
    let ms: Vec<usize> = (a.m_min..=a.m_max).step_by(a.m_step).collect();
    let opts = EngineOptions {
        rank_tol: a.rank_tol,
        ..EngineOptions::default()
    };

    let rows = pe_curve_with(&ms, &a.nbar, a.encoding, priors, &opts).map_err(failure)?;
    let mut out = String::from("m,nbar,pe_eve,pe_bob,rank\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.m,
            r.nbar,
            prob(r.pe_eve),
            prob(r.pe_bob),
            r.rank
        ));
    }
    write_all(&a.out, &out)?;
    Ok(0)
}

fn bob_error_cmd(a: &BobErrorArgs) -> CliResult<i32> {
    check_nbars(&a.nbar)?;
    let mut out = String::from("nbar,pe_bob\n");
    for &n in &a.nbar {
        out.push_str(&format!("{},{}\n", n, prob(bob_error(n).map_err(failure)?)));
    }
    write_all(&a.out, &out)?;
    Ok(0)
}

fn simulate_cmd(a: &SimulateArgs) -> CliResult<i32> {
    bits_per_index(a.m).map_err(usage)?;
    let seed = parse_hex_seed(&a.lfsr_seed).map_err(usage)?;
    let taps = parse_taps(&a.lfsr_taps).map_err(usage)?;
    let lfsr = LfsrState::new(seed, &taps).map_err(usage)?;
    let cfg = SimConfig {
        m: a.m,
        nbar: a.nbar,
        encoding: a.encoding,
        bits: a.bits,
        loss_db: a.loss_db,
        seed: a.seed,
        lfsr,
    };
    cfg.validate().map_err(usage)?;
    if a.threads == Some(0) {
        return Err(usage("--threads must be >= 1"));
    }

    let report = match a.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(failure)?
            .install(|| run_session(&cfg)),
        None => run_session(&cfg),
    }
    .map_err(failure)?;

    let text = format!(
        "{}\n{}\n{}\n",
        report.to_text(),
        report.csv_header(),
        report.csv_row()
    );
    write_all(&a.out, &text)?;
    Ok(0)
}

fn validate_cmd(a: &ValidateArgs) -> CliResult<i32> {
    check_nbars(&a.nbar)?;
    if a.max_m == 0 {
        return Err(usage("--max-m must be >= 1"));
    }
    if !(a.tail_tol > 0.0 && a.tail_tol < 1.0) {
        return Err(usage("--tail-tol must lie in (0, 1)"));
    }
    if a.encoding.is_empty() {
        return Err(usage("--encoding needs at least one value"));
    }
    let mut cases = Vec::new();
    for &enc in &a.encoding {
        for &nbar in &a.nbar {
            for m in 1..=a.max_m {
                match required_dimension(m, nbar, enc, a.tail_tol) {
                    Ok(_) => cases.push((enc, nbar, m)),
                    Err(e @ Error::DimensionOverflow { .. }) => {
                        return Err(usage(format!("M={m}, nbar={nbar}, {enc}: {e}")))
                    }
                    Err(e) => return Err(usage(e)),
                }
            }
        }
    }

    let mut out = String::from(
        "encoding,m,nbar,pe_gram,pe_oracle,abs_diff,truncation_bound,cutoff,dimension,status\n",
    );
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (enc, nbar, m) in cases {
        let gram = eve_error(m, nbar, enc, Priors::equal()).map_err(failure)?;
        let oracle =
            oracle_min_error(m, nbar, enc, Priors::equal(), a.tail_tol).map_err(failure)?;
        let diff = (gram.pe - oracle.result.pe).abs();
        // NaN never passes
        let ok = diff < VALIDATE_TOL;
        if !ok {
            failures += 1;
        }
        worst = worst.max(diff);
        out.push_str(&format!(
            "{enc},{m},{nbar},{},{},{diff:.3e},{:.3e},{},{},{}\n",
            prob(gram.pe),
            prob(oracle.result.pe),
            oracle.truncation_bound,
            oracle.cutoff,
            oracle.dimension,
            if ok { "pass" } else { "FAIL" }
        ));
    }
    out.push_str(&format!(
        "# worst abs_diff {worst:.3e}, tolerance {VALIDATE_TOL:.0e}, {failures} failure(s)\n"
    ));
    write_all(&a.out, &out)?;
    Ok(if failures == 0 { 0 } else { 1 })
}
