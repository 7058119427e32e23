//! Brute-force check of the Helstrom engine in a truncated photon-number basis.
//!
//! Every cipher state is expanded as `sum_n c_n |n>` per mode, the two modes
//! are tensored into vectors of length `(cutoff + 1)^2`, and the bit-conditional
//! density operators are assembled densely. The error probability then comes
//! from a full Hermitian eigendecomposition of `p1 rho1 - p0 rho0`. Nothing
//! here shares code with the subspace engine beyond the state amplitudes and
//! the constellation labels; the eigensolver is nalgebra's.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::helstrom::{constellation, Constellation, DiscriminationResult, Priors};
use crate::states::{ComplexAmplitude, EncodingKind, TwoModeState};

/// Default truncation budget per mode.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Largest two-mode dimension `(cutoff + 1)^2` the oracle accepts.
pub const MAX_DIMENSION: usize = 4096;

/// Number-basis coefficients `c_n = e^{-|beta|^2/2} beta^n / sqrt(n!)`, `n = 0..=cutoff`.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    pub coeffs: Vec<Complex64>,
    pub cutoff: usize,
}

impl FockVector {
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Kronecker product with another single-mode vector (this mode is the slow index).
    pub fn tensor(&self, other: &FockVector) -> Vec<Complex64> {
        self.coeffs
            .iter()
            .flat_map(|a| other.coeffs.iter().map(move |b| a * b))
            .collect()
    }
}

pub fn fock_coeffs(beta: ComplexAmplitude, cutoff: usize) -> FockVector {
    let mut coeffs = Vec::with_capacity(cutoff + 1);
    let mut c = Complex64::new((-0.5 * beta.norm_sqr()).exp(), 0.0);
    coeffs.push(c);
    for n in 1..=cutoff {
        c = c * beta / (n as f64).sqrt();
        coeffs.push(c);
    }
    FockVector { coeffs, cutoff }
}

/// `P(N > cutoff)` for `N ~ Poisson(lambda)`, summed term by term.
pub fn poisson_tail(lambda: f64, cutoff: usize) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let ln_lambda = lambda.ln();
    // log pmf up to cutoff, then sum the tail until terms stop mattering
    let mut log_p = -lambda;
    for n in 1..=cutoff {
        log_p += ln_lambda - (n as f64).ln();
    }
    let mut tail = 0.0;
    let mut n = cutoff + 1;
    loop {
        log_p += ln_lambda - (n as f64).ln();
        let term = log_p.exp();
        tail += term;
        if n as f64 > lambda && term <= tail * 1e-17 {
            break;
        }
        n += 1;
    }
    tail
}

/// Smallest cutoff whose Poisson tail beyond it is below `tail_tol`.
pub fn choose_cutoff(nbar_per_mode: f64, tail_tol: f64) -> Result<usize> {
    if !(tail_tol > 0.0 && tail_tol < 1.0) {
        return Err(invalid(format!(
            "tail tolerance must be in (0, 1), got {tail_tol}"
        )));
    }
    if !nbar_per_mode.is_finite() || nbar_per_mode < 0.0 {
        return Err(invalid(format!(
            "mean photon number must be finite and >= 0, got {nbar_per_mode}"
        )));
    }
    let mut cutoff = nbar_per_mode.floor() as usize;
    while poisson_tail(nbar_per_mode, cutoff) >= tail_tol {
        cutoff += 1;
    }
    // the mean is only a starting point; walk back down if it overshot
    while cutoff > 0 && poisson_tail(nbar_per_mode, cutoff - 1) < tail_tol {
        cutoff -= 1;
    }
    Ok(cutoff)
}

/// Per-mode cutoff for a constellation: chosen from the largest mean photon
/// number any of its states puts in either mode.
pub fn constellation_cutoff(c: &Constellation, tail_tol: f64) -> Result<usize> {
    let states = c.states()?;
    let max1 = states
        .iter()
        .map(|s| s.beta1.norm_sqr())
        .fold(0.0, f64::max);
    let max2 = states
        .iter()
        .map(|s| s.beta2.norm_sqr())
        .fold(0.0, f64::max);
    Ok(choose_cutoff(max1, tail_tol)?.max(choose_cutoff(max2, tail_tol)?))
}

/// Cutoff and two-mode dimension the oracle would need, failing if the
/// dimension exceeds [`MAX_DIMENSION`].
pub fn required_dimension(
    m: usize,
    nbar: f64,
    encoding: EncodingKind,
    tail_tol: f64,
) -> Result<(usize, usize)> {
    let c = constellation(m, nbar, encoding)?;
    let cutoff = constellation_cutoff(&c, tail_tol)?;
    let dim = (cutoff + 1) * (cutoff + 1);
    if dim > MAX_DIMENSION {
        return Err(Error::DimensionOverflow {
            required: dim,
            cutoff,
            limit: MAX_DIMENSION,
        });
    }
    Ok((cutoff, dim))
}

/// Two-mode state vector in the truncated product basis.
pub fn two_mode_vector(s: &TwoModeState, cutoff: usize) -> Vec<Complex64> {
    fock_coeffs(s.beta1, cutoff).tensor(&fock_coeffs(s.beta2, cutoff))
}

/// Dense density operator on the truncated two-mode space.
#[derive(Debug, Clone)]
pub struct TruncatedDensity {
    pub matrix: DMatrix<Complex64>,
    pub cutoff: usize,
}

impl TruncatedDensity {
    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Largest `|rho_ij - conj(rho_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }
}

fn add_outer(acc: &mut DMatrix<Complex64>, v: &[Complex64], weight: f64) {
    let n = v.len();
    for j in 0..n {
        let vj = v[j].conj() * weight;
        if vj == Complex64::new(0.0, 0.0) {
            continue;
        }
        for i in 0..n {
            acc[(i, j)] += v[i] * vj;
        }
    }
}

/// `rho_b = sum_{j in b} w_j |psi_j><psi_j|` for both bits.
pub fn density_pair(
    c: &Constellation,
    cutoff: usize,
) -> Result<(TruncatedDensity, TruncatedDensity)> {
    let dim = (cutoff + 1) * (cutoff + 1);
    let mut rho = [DMatrix::zeros(dim, dim), DMatrix::zeros(dim, dim)];
    for (p, s) in c.points.iter().zip(c.states()?) {
        add_outer(
            &mut rho[p.bit as usize],
            &two_mode_vector(&s, cutoff),
            p.weight,
        );
    }
    let [r0, r1] = rho;
    Ok((
        TruncatedDensity { matrix: r0, cutoff },
        TruncatedDensity { matrix: r1, cutoff },
    ))
}

/// Ascending eigenvalues of a Hermitian matrix.
///
/// nalgebra's symmetric eigensolver returns NaN on the block-sparse matrices
/// produced by truncated polarization states, while its SVD does not. Shifting
/// by `s >= ||H||_F` makes `H + s I` positive semidefinite, so its singular
/// values are exactly the shifted eigenvalues.
fn hermitian_eigenvalues(h: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let n = h.nrows();
    let shift = h.norm();
    if n == 0 || shift == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let shifted = h + DMatrix::<Complex64>::identity(n, n) * Complex64::new(shift, 0.0);
    let sv = shifted.singular_values();
    if sv.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidState("non-finite singular values".into()));
    }
    let mut values: Vec<f64> = sv.iter().map(|x| x - shift).collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Oracle output plus truncation bookkeeping.
#[derive(Debug, Clone)]
pub struct OracleResult {
    /// `rank` is the numerical rank of `p1 rho1 - p0 rho0` in the truncated space.
    pub result: DiscriminationResult,
    pub cutoff: usize,
    pub dimension: usize,
    /// Upper bound on `|pe(truncated) - pe(exact)|`: the square root of the
    /// largest norm deficit of any truncated state.
    pub truncation_bound: f64,
}

/// Minimum error computed by brute force in the truncated Fock space.
pub fn oracle_min_error(
    m: usize,
    nbar: f64,
    encoding: EncodingKind,
    priors: Priors,
    tail_tol: f64,
) -> Result<OracleResult> {
    Priors::new(priors.p0, priors.p1)?;
    let (cutoff, dimension) = required_dimension(m, nbar, encoding, tail_tol)?;
    let c = constellation(m, nbar, encoding)?;

    let mut delta = DMatrix::<Complex64>::zeros(dimension, dimension);
    let mut worst_deficit = 0.0f64;
    for (p, s) in c.points.iter().zip(c.states()?) {
        let sign = if p.bit == 1 { priors.p1 } else { -priors.p0 };
        add_outer(&mut delta, &two_mode_vector(&s, cutoff), sign * p.weight);
        let t1 = poisson_tail(s.beta1.norm_sqr(), cutoff);
        let t2 = poisson_tail(s.beta2.norm_sqr(), cutoff);
        worst_deficit = worst_deficit.max(t1 + t2 - t1 * t2);
    }
    // exact Hermitian symmetry before the eigensolver
    let adjoint = delta.adjoint();
    let delta = (delta + adjoint) * Complex64::new(0.5, 0.0);

    let spectrum = hermitian_eigenvalues(&delta)?;
    let scale = spectrum.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let rank = spectrum.iter().filter(|x| x.abs() > 1e-12 * scale).count();
    Ok(OracleResult {
        result: DiscriminationResult::from_spectrum(spectrum, rank, &priors),
        cutoff,
        dimension,
        truncation_bound: worst_deficit.sqrt(),
    })
}
