//! Running-key generation and the key-index to ciphering-angle map.
//!
//! The short shared seed is expanded with a Fibonacci LFSR. This is a
//! stand-in for a real stream cipher and is not cryptographically strong.
//!
//! Register bit `i` (bit 0 is the output end) corresponds to tap position
//! `L - i`, so tap `L` is always the output bit and a tap set `{16, 14, 13, 11}`
//! is the polynomial `x^16 + x^14 + x^13 + x^11 + 1`.

use std::f64::consts::PI;

use crate::error::{invalid, Error, Result};

/// Default register length.
pub const DEFAULT_LENGTH: u32 = 16;
/// Default maximal-length tap set for a 16-bit register.
pub const DEFAULT_TAPS: [u32; 4] = [16, 14, 13, 11];
/// Default register seed.
pub const DEFAULT_SEED: u64 = 0xACE1;

/// Fibonacci LFSR register and feedback taps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LfsrState {
    register: u64,
    len: u32,
    /// Bit `L - t` is set for each tap position `t`.
    tap_mask: u64,
}

impl LfsrState {
    /// Builds a register of length `max(taps)` holding `seed`.
    pub fn new(seed: u64, taps: &[u32]) -> Result<Self> {
        let len = *taps
            .iter()
            .max()
            .ok_or_else(|| Error::InvalidState("tap set is empty".into()))?;
        if len == 0 || len > 64 {
            return Err(Error::InvalidState(format!(
                "register length must be in [1, 64], got {len}"
            )));
        }
        let mut tap_mask = 0u64;
        for &t in taps {
            if t == 0 {
                return Err(Error::InvalidState("tap position 0 is not allowed".into()));
            }
            tap_mask |= 1u64 << (len - t);
        }
        if seed == 0 {
            return Err(Error::InvalidState("register is all zero".into()));
        }
        if len < 64 && seed >> len != 0 {
            return Err(Error::InvalidState(format!(
                "seed {seed:#x} does not fit in {len} bits"
            )));
        }
        Ok(Self {
            register: seed,
            len,
            tap_mask,
        })
    }

    /// The default 16-bit register seeded with `seed`.
    pub fn with_default_taps(seed: u64) -> Result<Self> {
        Self::new(seed, &DEFAULT_TAPS)
    }

    pub fn register(&self) -> u64 {
        self.register
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Tap positions in descending order.
    pub fn taps(&self) -> Vec<u32> {
        (0..self.len)
            .filter(|i| self.tap_mask >> i & 1 == 1)
            .map(|i| self.len - i)
            .collect()
    }
}

/// Advances the register by one step, returning the output bit and the new state.
pub fn lfsr_next(state: LfsrState) -> Result<(u8, LfsrState)> {
    if state.register == 0 {
        return Err(Error::InvalidState("register is all zero".into()));
    }
    let out = (state.register & 1) as u8;
    let feedback = (state.register & state.tap_mask).count_ones() as u64 & 1;
    let register = (state.register >> 1) | (feedback << (state.len - 1));
    Ok((out, LfsrState { register, ..state }))
}

/// Number of key bits consumed per index for a power-of-two `m`.
pub fn bits_per_index(m: usize) -> Result<u32> {
    if m == 0 || !m.is_power_of_two() {
        return Err(Error::Unsupported(format!(
            "number of ciphering levels M = {m} must be a power of two"
        )));
    }
    Ok(m.trailing_zeros())
}

/// Running key: a stream of key indices in `[0, m)` drawn from an LFSR.
#[derive(Debug, Clone)]
pub struct KeyStream {
    lfsr: LfsrState,
    m: usize,
    bits: u32,
    emitted: u64,
}

impl KeyStream {
    pub fn new(lfsr: LfsrState, m: usize) -> Result<Self> {
        let bits = bits_per_index(m)?;
        if lfsr.register == 0 {
            return Err(Error::InvalidState("register is all zero".into()));
        }
        Ok(Self {
            lfsr,
            m,
            bits,
            emitted: 0,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn emitted(&self) -> u64 {
        self.emitted
    }

    pub fn lfsr(&self) -> LfsrState {
        self.lfsr
    }

    /// Next key index; bits are packed big-endian.
    pub fn next_index(&mut self) -> usize {
        let mut k = 0usize;
        for _ in 0..self.bits {
            // the register is nonzero by construction and stays nonzero
            let (bit, next) = lfsr_next(self.lfsr).expect("LFSR register became zero");
            self.lfsr = next;
            k = (k << 1) | bit as usize;
        }
        self.emitted += 1;
        k
    }
}

impl Iterator for KeyStream {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        Some(self.next_index())
    }
}

/// Expands `seed` into `count` key indices in `[0, m)`.
pub fn expand_key(seed: LfsrState, count: usize, m: usize) -> Result<Vec<usize>> {
    if count == 0 {
        return Err(invalid("key count must be positive"));
    }
    Ok(KeyStream::new(seed, m)?.take(count).collect())
}

fn check_index(k: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(invalid("number of ciphering levels M must be >= 1"));
    }
    if k >= m {
        return Err(invalid(format!("key index {k} outside [0, {m})")));
    }
    Ok(())
}

/// Position `j` of the state `(k, bit)` on the circle of `2m` angles `j pi / m`.
pub fn angle_index(k: usize, bit: u8, m: usize) -> Result<usize> {
    check_index(k, m)?;
    if bit > 1 {
        return Err(invalid(format!("bit must be 0 or 1, got {bit}")));
    }
    let odd_shift = if k % 2 == 1 { m } else { 0 };
    let bit_shift = if bit == 1 { m } else { 0 };
    Ok((k + odd_shift + bit_shift) % (2 * m))
}

/// Ciphering angle `phi_k = pi (k/m + (1 - (-1)^k)/2)`, reduced into `[0, 2pi)`.
pub fn angle_for(k: usize, m: usize) -> Result<f64> {
    Ok(angle_index(k, 0, m)? as f64 * PI / m as f64)
}

/// Total modulation angle `(phi_k + bit * pi) mod 2pi`.
pub fn total_angle(k: usize, bit: u8, m: usize) -> Result<f64> {
    Ok(angle_index(k, bit, m)? as f64 * PI / m as f64)
}

/// Parses a hex register seed such as `ACE1` or `0xace1`.
pub fn parse_hex_seed(s: &str) -> Result<u64> {
    let digits = s.trim().trim_start_matches("0x").trim_start_matches("0X");
    u64::from_str_radix(digits, 16).map_err(|e| invalid(format!("bad hex seed {s:?}: {e}")))
}

/// Parses a tap set: either a comma-separated list of positions (`16,14,13,11`)
/// or a hex mask (`0xB400`) where bit `t - 1` marks tap position `t`.
pub fn parse_taps(s: &str) -> Result<Vec<u32>> {
    let s = s.trim();
    if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        let mask = u64::from_str_radix(hex, 16)
            .map_err(|e| invalid(format!("bad hex tap mask {s:?}: {e}")))?;
        let taps: Vec<u32> = (0..64)
            .rev()
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| i + 1)
            .collect();
        if taps.is_empty() {
            return Err(invalid("tap mask is zero"));
        }
        return Ok(taps);
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| invalid(format!("bad tap position {t:?}: {e}")))
        })
        .collect()
}
