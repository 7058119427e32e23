//! Eavesdropper's minimum bit-error probability for the keyed cipher.
//!
//! For each bit value the eavesdropper, who does not hold the running key,
//! faces a mixture over all `M` key values of pure two-mode coherent states.
//! All `2M` pure states span a space of dimension at most `2M`; with the Gram
//! matrix `G = B^T B` the columns of `B` are coordinates of the states in an
//! orthonormal basis of that span, so both bit-conditional density operators
//! become small real symmetric matrices. The Helstrom error then follows from
//! the spectrum of `p1 R1 - p0 R0`: the positive and negative eigenspaces are
//! the optimal decision projectors and
//! `pe = (1 - ||p1 R1 - p0 R0||_1) / 2`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::keystream::angle_index;
use crate::linalg::{check_symmetric, pivoted_cholesky, symmetric_eigenvalues};
pub use crate::linalg::{symmetric_eigen, SymmetricEigen};
use crate::states::{inner_product, overlap_closed_form, EncodingKind, TwoModeState};

/// Default relative eigenvalue cutoff for the state subspace.
pub const DEFAULT_RANK_TOL: f64 = 1e-12;

/// A-priori bit probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Priors {
    pub p0: f64,
    pub p1: f64,
}

impl Priors {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        let ok = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !ok(p0) || !ok(p1) || (p0 + p1 - 1.0).abs() > 1e-12 {
            return Err(invalid(format!(
                "priors must be probabilities summing to 1, got ({p0}, {p1})"
            )));
        }
        Ok(Self { p0, p1 })
    }

    /// Priors `(p0, 1 - p0)`.
    pub fn from_p0(p0: f64) -> Result<Self> {
        Self::new(p0, 1.0 - p0)
    }

    pub fn equal() -> Self {
        Self { p0: 0.5, p1: 0.5 }
    }

    pub fn of(&self, bit: u8) -> f64 {
        if bit == 0 {
            self.p0
        } else {
            self.p1
        }
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.p0, self.p1).map(|_| ())
    }
}

impl Default for Priors {
    fn default() -> Self {
        Self::equal()
    }
}

/// One labeled cipher state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstellationPoint {
    /// Position on the circle: `theta = index * pi / m`.
    pub index: usize,
    pub theta: f64,
    /// Key index that produces this state together with `bit`.
    pub key: usize,
    pub bit: u8,
    /// Prior probability of this point within its bit class.
    pub weight: f64,
}

/// The `2M` cipher states for one `(M, nbar, encoding)`, ordered by angle.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub points: Vec<ConstellationPoint>,
    pub nbar: f64,
    pub encoding: EncodingKind,
    pub m: usize,
}

impl Constellation {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Amplitudes of every point, in angle order.
    pub fn states(&self) -> Result<Vec<TwoModeState>> {
        self.points
            .iter()
            .map(|p| self.encoding.state(p.theta, self.nbar))
            .collect()
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        self.points.iter().map(|p| p.bit)
    }
}

/// Constellation with a uniform key distribution.
pub fn constellation(m: usize, nbar: f64, encoding: EncodingKind) -> Result<Constellation> {
    if m == 0 {
        return Err(invalid("number of ciphering levels M must be >= 1"));
    }
    constellation_with_key_weights(m, nbar, encoding, &vec![1.0 / m as f64; m])
}

/// Constellation where key `k` has probability `key_weights[k]`.
pub fn constellation_with_key_weights(
    m: usize,
    nbar: f64,
    encoding: EncodingKind,
    key_weights: &[f64],
) -> Result<Constellation> {
    if m == 0 {
        return Err(invalid("number of ciphering levels M must be >= 1"));
    }
    if !nbar.is_finite() || nbar < 0.0 {
        return Err(invalid(format!(
            "mean photon number must be finite and >= 0, got {nbar}"
        )));
    }
    if key_weights.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            found: key_weights.len(),
        });
    }
    if key_weights.iter().any(|w| !w.is_finite() || *w < 0.0)
        || (key_weights.iter().sum::<f64>() - 1.0).abs() > 1e-12
    {
        return Err(invalid("key weights must be nonnegative and sum to 1"));
    }

    let mut slots: Vec<Option<ConstellationPoint>> = vec![None; 2 * m];
    for (key, &weight) in key_weights.iter().enumerate() {
        for bit in 0..2u8 {
            let index = angle_index(key, bit, m)?;
            debug_assert!(slots[index].is_none());
            slots[index] = Some(ConstellationPoint {
                index,
                theta: index as f64 * PI / m as f64,
                key,
                bit,
                weight,
            });
        }
    }
    let points = slots
        .into_iter()
        .map(|p| p.expect("angle map is a bijection onto 2M slots"))
        .collect();
    Ok(Constellation {
        points,
        nbar,
        encoding,
        m,
    })
}

/// Gram matrix of the constellation from the closed-form angle overlap.
pub fn gram(c: &Constellation) -> DMatrix<f64> {
    let n = c.len();
    let step = PI / c.m as f64;
    // entries depend only on the index difference
    let table: Vec<f64> = (0..n)
        .map(|d| overlap_closed_form(d as f64 * step, c.nbar))
        .collect();
    DMatrix::from_fn(n, n, |i, j| {
        let d = c.points[i].index.abs_diff(c.points[j].index);
        table[d]
    })
}

/// Gram matrix computed from the state amplitudes.
///
/// The overlaps of cipher states are real; the imaginary roundoff is dropped.
pub fn gram_from_states(c: &Constellation) -> Result<DMatrix<f64>> {
    let states = c.states()?;
    let n = states.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let ip = inner_product(&states[i], &states[j])?;
            if ip.im.abs() > 1e-10 {
                return Err(invalid(format!(
                    "overlap of points {i} and {j} is not real: {ip}"
                )));
            }
            g[(i, j)] = ip.re;
            g[(j, i)] = ip.re;
        }
    }
    Ok(g)
}

/// Coordinates of the cipher states in an orthonormal basis of their span.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    /// `r x 2M`; column `j` is state `j`, and `coeffs^T coeffs` reproduces the Gram matrix.
    pub coeffs: DMatrix<f64>,
    pub rank: usize,
    pub tolerance: f64,
    /// Retained Gram eigenvalues, descending; row `i` of `coeffs` has squared norm `eigenvalues[i]`.
    pub eigenvalues: Vec<f64>,
}

/// Factors `g = B^T B` with `B = Lambda^{1/2} U^T` restricted to eigenvalues
/// at least `rank_tol * max(Lambda)`.
///
/// A pivoted Cholesky pass first peels off the numerically null part of `g`,
/// so the Jacobi eigensolver only runs on an `r x r` matrix where `r` is the
/// numerical rank.
pub fn embed(g: &DMatrix<f64>, rank_tol: f64) -> Result<SubspaceBasis> {
    if !(rank_tol.is_finite() && rank_tol > 0.0 && rank_tol < 1.0) {
        return Err(invalid(format!(
            "rank tolerance must be in (0, 1), got {rank_tol}"
        )));
    }
    check_symmetric(g, 1e-12)?;
    let n = g.nrows();
    let max_diag = (0..n).map(|i| g[(i, i)]).fold(0.0f64, f64::max);
    let f = pivoted_cholesky(g, 1e-2 * rank_tol * max_diag)?;

    // G ~ F^T F; the eigenvectors of F F^T rotate F onto the eigenbasis of G.
    let small = &f * f.transpose();
    let eig = symmetric_eigen(&small)?;
    let lmax = eig.values.last().copied().unwrap_or(0.0);
    let keep: Vec<usize> = (0..eig.values.len())
        .rev()
        .filter(|&i| lmax > 0.0 && eig.values[i] >= rank_tol * lmax)
        .collect();
    let kept_vectors = eig.vectors.select_columns(&keep);
    let coeffs = kept_vectors.transpose() * &f;
    Ok(SubspaceBasis {
        rank: keep.len(),
        coeffs,
        tolerance: rank_tol,
        eigenvalues: keep.iter().map(|&i| eig.values[i]).collect(),
    })
}

/// Bit-conditional density matrices `R_b = sum_{j in b} w_j b_j b_j^T` in the subspace.
pub fn density_pair(b: &SubspaceBasis, c: &Constellation) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if b.coeffs.ncols() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: c.len(),
            found: b.coeffs.ncols(),
        });
    }
    let r = b.coeffs.nrows();
    let weighted = |bit: u8| {
        let mut scaled = b.coeffs.clone();
        for (j, p) in c.points.iter().enumerate() {
            let s = if p.bit == bit { p.weight.sqrt() } else { 0.0 };
            scaled.column_mut(j).scale_mut(s);
        }
        let mut out = DMatrix::zeros(r, r);
        out.gemm(1.0, &scaled, &scaled.transpose(), 0.0);
        // exact symmetry for the eigensolver
        let t = out.transpose();
        (out + t) * 0.5
    };
    Ok((weighted(0), weighted(1)))
}

/// Minimum-error discrimination of two density operators.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminationResult {
    /// Minimum bit-error probability.
    pub pe: f64,
    /// `||p1 rho1 - p0 rho0||_1`.
    pub trace_norm: f64,
    /// Dimension of the working subspace.
    pub rank: usize,
    /// Eigenvalues of `p1 rho1 - p0 rho0`, ascending.
    pub spectrum: Vec<f64>,
}

impl DiscriminationResult {
    pub(crate) fn from_spectrum(spectrum: Vec<f64>, rank: usize, priors: &Priors) -> Self {
        let trace_norm: f64 = spectrum.iter().map(|x| x.abs()).sum();
        let pe = (0.5 * (1.0 - trace_norm)).clamp(0.0, priors.p0.min(priors.p1));
        Self {
            pe,
            trace_norm,
            rank,
            spectrum,
        }
    }

    /// Probability mass the optimal measurement assigns to the positive
    /// (decide bit 1) eigenspace of `p1 rho1 - p0 rho0`.
    pub fn positive_part(&self) -> f64 {
        self.spectrum.iter().filter(|x| **x > 0.0).sum()
    }
}

/// Helstrom error `(1 - ||p1 R1 - p0 R0||_1) / 2`.
pub fn min_error(
    r0: &DMatrix<f64>,
    r1: &DMatrix<f64>,
    priors: Priors,
) -> Result<DiscriminationResult> {
    priors.validate()?;
    if r0.shape() != r1.shape() {
        return Err(Error::DimensionMismatch {
            expected: r0.nrows(),
            found: r1.nrows(),
        });
    }
    if r0.nrows() != r0.ncols() {
        return Err(Error::DimensionMismatch {
            expected: r0.nrows(),
            found: r0.ncols(),
        });
    }
    let delta = r1 * priors.p1 - r0 * priors.p0;
    let spectrum = symmetric_eigenvalues(&delta)?;
    Ok(DiscriminationResult::from_spectrum(
        spectrum,
        r0.nrows(),
        &priors,
    ))
}

/// Where the Gram matrix comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GramSource {
    /// Angle-only closed form.
    #[default]
    ClosedForm,
    /// Inner products of the encoded amplitudes.
    Amplitudes,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineOptions {
    pub rank_tol: f64,
    pub gram: GramSource,
}

impl Default for EngineOptions {
    fn default() -> Self {
        Self {
            rank_tol: DEFAULT_RANK_TOL,
            gram: GramSource::ClosedForm,
        }
    }
}

/// Eavesdropper's minimum error for `M` key values at mean photon number `nbar`.
pub fn eve_error(
    m: usize,
    nbar: f64,
    encoding: EncodingKind,
    priors: Priors,
) -> Result<DiscriminationResult> {
    eve_error_with(m, nbar, encoding, priors, &EngineOptions::default())
}

pub fn eve_error_with(
    m: usize,
    nbar: f64,
    encoding: EncodingKind,
    priors: Priors,
    opts: &EngineOptions,
) -> Result<DiscriminationResult> {
    priors.validate()?;
    let c = constellation(m, nbar, encoding)?;
    eve_error_for(&c, priors, opts)
}

/// Runs the subspace pipeline on an explicit constellation.
pub fn eve_error_for(
    c: &Constellation,
    priors: Priors,
    opts: &EngineOptions,
) -> Result<DiscriminationResult> {
    let g = match opts.gram {
        GramSource::ClosedForm => gram(c),
        GramSource::Amplitudes => gram_from_states(c)?,
    };
    let basis = embed(&g, opts.rank_tol)?;
    let (r0, r1) = density_pair(&basis, c)?;
    min_error(&r0, &r1, priors)
}

/// Keyed receiver's error `(1 - sqrt(1 - e^{-2 nbar})) / 2`.
///
/// Evaluated as `x / (2 (1 + sqrt(1 - x)))` with `x = e^{-2 nbar}`, which
/// stays accurate where the direct form cancels; it reaches exactly zero once
/// `e^{-2 nbar}` underflows.
pub fn bob_error(nbar: f64) -> Result<f64> {
    if !nbar.is_finite() || nbar < 0.0 {
        return Err(invalid(format!(
            "mean photon number must be finite and >= 0, got {nbar}"
        )));
    }
    let x = (-2.0 * nbar).exp();
    Ok(0.5 * x / (1.0 + (1.0 - x).sqrt()))
}

/// One `(M, nbar)` point of the error curves.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub m: usize,
    pub nbar: f64,
    pub pe_eve: f64,
    pub pe_bob: f64,
    pub rank: usize,
}

/// Error curves for every `(M, nbar)` pair, sorted by `(nbar, M)`.
pub fn pe_curve(
    m_values: &[usize],
    nbar_values: &[f64],
    encoding: EncodingKind,
    priors: Priors,
) -> Result<Vec<CurveRow>> {
    pe_curve_with(
        m_values,
        nbar_values,
        encoding,
        priors,
        &EngineOptions::default(),
    )
}

pub fn pe_curve_with(
    m_values: &[usize],
    nbar_values: &[f64],
    encoding: EncodingKind,
    priors: Priors,
    opts: &EngineOptions,
) -> Result<Vec<CurveRow>> {
    priors.validate()?;
    if let Some(&bad) = m_values.iter().find(|&&m| m == 0) {
        return Err(invalid(format!("M must be >= 1, got {bad}")));
    }
    let mut jobs: Vec<(f64, usize)> = nbar_values
        .iter()
        .flat_map(|&nbar| m_values.iter().map(move |&m| (nbar, m)))
        .collect();
    jobs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    jobs.dedup();
    jobs.par_iter()
        .map(|&(nbar, m)| {
            let eve = eve_error_with(m, nbar, encoding, priors, opts)?;
            Ok(CurveRow {
                m,
                nbar,
                pe_eve: eve.pe,
                pe_bob: bob_error(nbar)?,
                rank: eve.rank,
            })
        })
        .collect()
}
