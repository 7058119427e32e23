//! Two-mode coherent states used by the cipher.
//!
//! Both encodings place the signal amplitude `alpha = sqrt(nbar)` (taken real
//! and nonnegative) on two modes. Phase encoding splits it evenly and applies
//! opposite half-angle phases; polarization encoding rotates it between the
//! modes. All overlaps are computed from amplitudes here, and the angle-only
//! closed form [`overlap_angle`] is checked against them in tests.

use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{invalid, Result};

/// Complex coherent amplitude of a single mode.
pub type ComplexAmplitude = Complex64;

/// Physical encoding of the bit/key angle onto two modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EncodingKind {
    Phase,
    Polarization,
}

impl EncodingKind {
    pub const ALL: [EncodingKind; 2] = [EncodingKind::Phase, EncodingKind::Polarization];

    /// Builds the state at angle `theta` with mean photon number `nbar`.
    pub fn state(self, theta: f64, nbar: f64) -> Result<TwoModeState> {
        match self {
            EncodingKind::Phase => phase_state(theta, nbar),
            EncodingKind::Polarization => polarization_state(theta, nbar),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            EncodingKind::Phase => "phase",
            EncodingKind::Polarization => "polarization",
        }
    }
}

impl std::fmt::Display for EncodingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for EncodingKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "phase" => Ok(EncodingKind::Phase),
            "polarization" | "polarisation" | "pol" => Ok(EncodingKind::Polarization),
            other => Err(invalid(format!("unknown encoding {other:?}"))),
        }
    }
}

/// A product coherent state `|beta1> (x) |beta2>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoModeState {
    pub beta1: ComplexAmplitude,
    pub beta2: ComplexAmplitude,
}

impl TwoModeState {
    pub fn new(beta1: ComplexAmplitude, beta2: ComplexAmplitude) -> Self {
        Self { beta1, beta2 }
    }

    pub fn vacuum() -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    }

    /// Total mean photon number `|beta1|^2 + |beta2|^2`.
    pub fn mean_photons(&self) -> f64 {
        self.beta1.norm_sqr() + self.beta2.norm_sqr()
    }

    /// Multiplies both amplitudes by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.beta1 * factor, self.beta2 * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.beta1.is_finite() && self.beta2.is_finite()
    }
}

fn check_args(theta: f64, nbar: f64) -> Result<()> {
    if !theta.is_finite() {
        return Err(invalid(format!("angle must be finite, got {theta}")));
    }
    if !(0.0..TAU).contains(&theta) {
        return Err(invalid(format!("angle {theta} outside [0, 2pi)")));
    }
    if !nbar.is_finite() || nbar < 0.0 {
        return Err(invalid(format!(
            "mean photon number must be finite and >= 0, got {nbar}"
        )));
    }
    Ok(())
}

/// Phase-encoded state: `beta1 = e^{-i theta/2} sqrt(nbar/2)`,
/// `beta2 = e^{+i theta/2} sqrt(nbar/2)`.
pub fn phase_state(theta: f64, nbar: f64) -> Result<TwoModeState> {
    check_args(theta, nbar)?;
    let amp = (nbar / 2.0).sqrt();
    Ok(TwoModeState::new(
        Complex64::from_polar(amp, -theta / 2.0),
        Complex64::from_polar(amp, theta / 2.0),
    ))
}

/// Polarization-encoded state: `(sqrt(nbar) sin(theta/2), sqrt(nbar) cos(theta/2))`.
pub fn polarization_state(theta: f64, nbar: f64) -> Result<TwoModeState> {
    check_args(theta, nbar)?;
    let alpha = nbar.sqrt();
    let (s, c) = (theta / 2.0).sin_cos();
    Ok(TwoModeState::new(
        Complex64::new(alpha * s, 0.0),
        Complex64::new(alpha * c, 0.0),
    ))
}

/// Single-mode coherent overlap `<beta|gamma>`.
fn mode_overlap_exponent(beta: Complex64, gamma: Complex64) -> Complex64 {
    -0.5 * beta.norm_sqr() - 0.5 * gamma.norm_sqr() + beta.conj() * gamma
}

/// Inner product `<s|t>` of two product coherent states.
pub fn inner_product(s: &TwoModeState, t: &TwoModeState) -> Result<ComplexAmplitude> {
    if !s.is_finite() || !t.is_finite() {
        return Err(invalid("state amplitudes must be finite"));
    }
    let exponent =
        mode_overlap_exponent(s.beta1, t.beta1) + mode_overlap_exponent(s.beta2, t.beta2);
    Ok(exponent.exp())
}

/// Overlap of two cipher states whose angles differ by `dtheta`:
/// `exp(nbar (cos(dtheta/2) - 1))`, the same for both encodings.
///
/// `dtheta` is the raw difference of two canonical angles and is not reduced.
pub fn overlap_angle(dtheta: f64, nbar: f64) -> Result<f64> {
    if !dtheta.is_finite() || dtheta.abs() >= TAU {
        return Err(invalid(format!(
            "angle difference {dtheta} outside (-2pi, 2pi)"
        )));
    }
    if !nbar.is_finite() || nbar < 0.0 {
        return Err(invalid(format!(
            "mean photon number must be finite and >= 0, got {nbar}"
        )));
    }
    Ok(overlap_closed_form(dtheta, nbar))
}

/// Unchecked closed form; `cos(x/2) - 1 = -2 sin^2(x/4)` avoids cancellation.
#[inline]
pub(crate) fn overlap_closed_form(dtheta: f64, nbar: f64) -> f64 {
    let s = (dtheta / 4.0).sin();
    (-2.0 * nbar * s * s).exp()
}

/// Reduces an angle into `[0, 2pi)`.
pub fn canonical_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if r >= TAU {
        0.0
    } else {
        r
    }
}
