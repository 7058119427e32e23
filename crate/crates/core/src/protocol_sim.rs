//! Monte Carlo sessions of the cipher.
//!
//! Alice sends uniformly random bits under the LFSR running key. Eve taps the
//! line next to the source and Bob receives after a lossy channel. Both use
//! heterodyne detection: Bob applies the keyed two-hypothesis ML rule, Eve a
//! MAP rule over the whole constellation.
//!
//! Symbols are processed in fixed-size shards. Shard `i` draws from
//! `ChaCha20Rng` seeded with the session seed on stream `i`, so a report
//! depends only on the configuration and never on the number of threads.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::helstrom::{bob_error, constellation, eve_error, Constellation, Priors};
use crate::keystream::{bits_per_index, expand_key, total_angle, LfsrState};
use crate::states::{ComplexAmplitude, EncodingKind, TwoModeState};

/// Symbols per RNG substream.
pub const SHARD_SIZE: usize = 4096;

/// Generator used for every session.
pub const RNG_NAME: &str = "ChaCha20Rng (rand_chacha 0.9), stream = shard index";

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Number of ciphering levels; a power of two.
    pub m: usize,
    /// Mean photon number at the source.
    pub nbar: f64,
    pub encoding: EncodingKind,
    /// Number of transmitted symbols.
    pub bits: usize,
    pub loss_db: f64,
    pub seed: u64,
    pub lfsr: LfsrState,
}

impl SimConfig {
    pub fn new(m: usize, nbar: f64, bits: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            m,
            nbar,
            encoding: EncodingKind::Phase,
            bits,
            loss_db: 0.0,
            seed,
            lfsr: LfsrState::with_default_taps(crate::keystream::DEFAULT_SEED)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        bits_per_index(self.m)?;
        if self.bits == 0 {
            return Err(invalid("number of symbols must be >= 1"));
        }
        if !self.nbar.is_finite() || self.nbar < 0.0 {
            return Err(invalid(format!(
                "mean photon number must be finite and >= 0, got {}",
                self.nbar
            )));
        }
        transmittance(self.loss_db)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub config: SimConfig,
    pub bob_errors: u64,
    pub eve_errors: u64,
    pub bob_ber: f64,
    pub eve_ber: f64,
    pub bob_se: f64,
    pub eve_se: f64,
    /// Keyed receiver bound at the mean photon number Bob receives.
    pub analytic_pe_bob: f64,
    /// Helstrom bound for Eve at the source mean photon number.
    pub analytic_pe_eve_helstrom: f64,
    pub rng: &'static str,
}

/// Power transmittance `10^(-loss_db / 10)`.
pub fn transmittance(loss_db: f64) -> Result<f64> {
    if !loss_db.is_finite() || loss_db < 0.0 {
        return Err(invalid(format!(
            "loss must be finite and >= 0 dB, got {loss_db}"
        )));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Attenuates both amplitudes by `sqrt(eta)`.
pub fn apply_loss(s: TwoModeState, loss_db: f64) -> Result<TwoModeState> {
    if loss_db == 0.0 {
        return Ok(s);
    }
    Ok(s.scaled(transmittance(loss_db)?.sqrt()))
}

fn gaussian_pair<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * FRAC_1_SQRT_2
}

/// Heterodyne outcome on both modes: `z = beta + g`, each quadrature of `g`
/// with variance 1/2.
pub fn heterodyne_sample<R: Rng + ?Sized>(
    s: &TwoModeState,
    rng: &mut R,
) -> (ComplexAmplitude, ComplexAmplitude) {
    let g1 = gaussian_pair(rng);
    let g2 = gaussian_pair(rng);
    (s.beta1 + g1, s.beta2 + g2)
}

/// `Re(conj(z1) beta1 + conj(z2) beta2)`; the heterodyne log-likelihood of an
/// equal-energy state up to a common constant, divided by two.
#[inline]
fn correlation(z1: Complex64, z2: Complex64, s: &TwoModeState) -> f64 {
    (z1.conj() * s.beta1 + z2.conj() * s.beta2).re
}

/// Bob's keyed decision between the angles `phi_k` and `phi_k + pi`.
pub fn bob_decide(
    z1: ComplexAmplitude,
    z2: ComplexAmplitude,
    k: usize,
    m: usize,
    nbar: f64,
    encoding: EncodingKind,
) -> Result<u8> {
    let s0 = encoding.state(total_angle(k, 0, m)?, nbar)?;
    let s1 = encoding.state(total_angle(k, 1, m)?, nbar)?;
    Ok(bob_rule(z1, z2, &s0, &s1))
}

#[inline]
fn bob_rule(z1: Complex64, z2: Complex64, s0: &TwoModeState, s1: &TwoModeState) -> u8 {
    u8::from(correlation(z1, z2, s1) > correlation(z1, z2, s0))
}

/// Eve's MAP receiver with the constellation amplitudes precomputed.
#[derive(Debug, Clone)]
pub struct EveReceiver {
    states: Vec<TwoModeState>,
    bits: Vec<u8>,
    /// `ln(prior(bit) * weight)` per point.
    log_prior: Vec<f64>,
    energy: Vec<f64>,
}

impl EveReceiver {
    pub fn new(c: &Constellation, priors: Priors) -> Result<Self> {
        let states = c.states()?;
        let bits: Vec<u8> = c.bits().collect();
        let log_prior = c
            .points
            .iter()
            .map(|p| (priors.of(p.bit) * p.weight).ln())
            .collect();
        let energy = states.iter().map(|s| s.mean_photons()).collect();
        Ok(Self {
            states,
            bits,
            log_prior,
            energy,
        })
    }

    /// Posterior mass per bit from `exp(-|z1 - b1|^2 - |z2 - b2|^2) * weight`,
    /// accumulated in log space; ties go to bit 0.
    pub fn decide(&self, z1: ComplexAmplitude, z2: ComplexAmplitude) -> u8 {
        let scores = self
            .states
            .iter()
            .zip(&self.log_prior)
            .zip(&self.energy)
            .map(|((s, lp), e)| 2.0 * correlation(z1, z2, s) - e + lp);
        let top = scores.clone().fold(f64::NEG_INFINITY, f64::max);
        let mut mass = [0.0f64; 2];
        for (score, &bit) in scores.zip(&self.bits) {
            mass[bit as usize] += (score - top).exp();
        }
        u8::from(mass[1] > mass[0])
    }
}

pub fn eve_map_decide(
    z1: ComplexAmplitude,
    z2: ComplexAmplitude,
    c: &Constellation,
    priors: Priors,
) -> Result<u8> {
    Ok(EveReceiver::new(c, priors)?.decide(z1, z2))
}

/// Binomial standard error `sqrt(p (1 - p) / n)`. A count of 0 or `n` is
/// evaluated as 1 or `n - 1`, the finest rate the sample can resolve, instead
/// of reporting an error bar of zero.
pub fn standard_error(count: u64, n: usize) -> f64 {
    let n = n as u64;
    let resolved = if n > 1 { count.clamp(1, n - 1) } else { count };
    let p = resolved as f64 / n as f64;
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Runs one session on the current rayon pool.
pub fn run_session(config: &SimConfig) -> Result<SimReport> {
    config.validate()?;
    let SimConfig {
        m,
        nbar,
        encoding,
        bits,
        loss_db,
        seed,
        lfsr,
    } = config.clone();

    let keys = expand_key(lfsr, bits, m)?;
    let eta = transmittance(loss_db)?;
    let received = nbar * eta;
    let eve = EveReceiver::new(&constellation(m, nbar, encoding)?, Priors::equal())?;

    // Alice's states indexed by angle position, at the source and after loss.
    let source: Vec<TwoModeState> = (0..2 * m)
        .map(|j| encoding.state(j as f64 * std::f64::consts::PI / m as f64, nbar))
        .collect::<Result<_>>()?;
    let attenuated: Vec<TwoModeState> = source
        .iter()
        .map(|s| apply_loss(*s, loss_db))
        .collect::<Result<_>>()?;
    let position = |k: usize, bit: u8| crate::keystream::angle_index(k, bit, m);

    let counts = keys
        .par_chunks(SHARD_SIZE)
        .enumerate()
        .map(|(shard, chunk)| -> Result<(u64, u64)> {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            rng.set_stream(shard as u64);
            let (mut bob_err, mut eve_err) = (0u64, 0u64);
            for &k in chunk {
                let bit = u8::from(rng.random::<bool>());
                let j = position(k, bit)?;
                let (e1, e2) = heterodyne_sample(&source[j], &mut rng);
                let (b1, b2) = heterodyne_sample(&attenuated[j], &mut rng);

                let s0 = &attenuated[position(k, 0)?];
                let s1 = &attenuated[position(k, 1)?];
                bob_err += u64::from(bob_rule(b1, b2, s0, s1) != bit);
                eve_err += u64::from(eve.decide(e1, e2) != bit);
            }
            Ok((bob_err, eve_err))
        })
        .collect::<Result<Vec<_>>>()?;
    let (bob_errors, eve_errors) = counts.iter().fold((0, 0), |(a, b), (x, y)| (a + x, b + y));

    let bob_ber = bob_errors as f64 / bits as f64;
    let eve_ber = eve_errors as f64 / bits as f64;
    Ok(SimReport {
        config: config.clone(),
        bob_errors,
        eve_errors,
        bob_ber,
        eve_ber,
        bob_se: standard_error(bob_errors, bits),
        eve_se: standard_error(eve_errors, bits),
        analytic_pe_bob: bob_error(received)?,
        analytic_pe_eve_helstrom: eve_error(m, nbar, encoding, Priors::equal())?.pe,
        rng: RNG_NAME,
    })
}

fn taps_string(lfsr: &LfsrState) -> String {
    lfsr.taps()
        .iter()
        .map(|t| t.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl SimReport {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let c = &self.config;
        vec![
            ("m", c.m.to_string()),
            ("nbar", format!("{:.16e}", c.nbar)),
            ("encoding", c.encoding.to_string()),
            ("bits", c.bits.to_string()),
            ("loss_db", format!("{:.16e}", c.loss_db)),
            ("seed", c.seed.to_string()),
            ("lfsr_seed", format!("0x{:X}", c.lfsr.register())),
            ("lfsr_taps", taps_string(&c.lfsr)),
            ("bob_errors", self.bob_errors.to_string()),
            ("eve_errors", self.eve_errors.to_string()),
            ("bob_ber", format!("{:.16e}", self.bob_ber)),
            ("eve_ber", format!("{:.16e}", self.eve_ber)),
            ("bob_se", format!("{:.16e}", self.bob_se)),
            ("eve_se", format!("{:.16e}", self.eve_se)),
            ("analytic_pe_bob", format!("{:.16e}", self.analytic_pe_bob)),
            (
                "analytic_pe_eve_helstrom",
                format!("{:.16e}", self.analytic_pe_eve_helstrom),
            ),
            ("rng", self.rng.to_string()),
        ]
    }

    /// Flat `key=value` block, one field per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn csv_header(&self) -> String {
        self.fields()
            .iter()
            .map(|(k, _)| *k)
            .collect::<Vec<_>>()
            .join(",")
    }

    /// One CSV row; the RNG description is quoted since it contains commas.
    pub fn csv_row(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| {
                if k == "rng" || k == "lfsr_taps" {
                    format!("\"{v}\"")
                } else {
                    v
                }
            })
            .collect::<Vec<_>>()
            .join(",")
    }
}
