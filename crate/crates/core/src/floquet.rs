//! Single-period Floquet operator `U_F = R(theta) exp(-i H tau)` and its spectrum.
//!
//! The kick `R = prod_i exp(-i theta_i Sz_i)` is diagonal in the configuration
//! basis, so it only multiplies the rows of `exp(-i H tau)` by phases. The angles
//! are quenched: drawn once per disorder sample and reused in every period.
//!
//! Two eigensolver routes are provided:
//!
//! * [`diagonalize_floquet`] runs a general dense eigensolver on `U_F` and then
//!   re-orthonormalizes eigenvectors inside clusters of (near-)degenerate phases.
//! * [`diagonalize_unitary`] / [`unitary_phases`] go through the Cayley transform
//!   `K = i (1 - e^{ia} U)(1 + e^{ia} U)^{-1}`, which is Hermitian with eigenvalues
//!   `tan((phi + a) / 2)` and the same eigenvectors as `U`. A Hermitian solver is
//!   several times faster than the general one and returns an orthonormal basis
//!   directly; the shift `a` keeps the spectrum of `e^{ia} U` away from `-1`.

use std::sync::Arc;

use faer::prelude::*;
use faer::{c64, Mat, MatRef, Side};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::hamiltonian::{check_theta, hamiltonian_spectrum, ChainConfig, HermitianSpectrum};
use crate::linalg::{identity_error, max_abs_diff, wrap_phase};

/// Residual tolerance for decompositions of `U_F`.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-8;
/// Phases closer than this are treated as one degenerate cluster.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// Quenched kick angles of one disorder sample.
#[derive(Clone, Debug, PartialEq)]
pub struct KickAngles {
    /// `angles[i]` acts on site `i + 1`.
    pub angles: Vec<f64>,
    /// Seed of the random stream the angles were drawn from, if any.
    pub seed: Option<u64>,
}

impl KickAngles {
    /// Angles drawn from a fresh stream seeded with `seed`.
    pub fn from_seed(theta: f64, sites: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut kick = sample_kick_angles(theta, sites, &mut rng)?;
        kick.seed = Some(seed);
        Ok(kick)
    }

    pub fn zeros(sites: usize) -> Self {
        Self { angles: vec![0.0; sites], seed: None }
    }

    /// Diagonal of `R` over `basis`: `exp(-i sum_i theta_i s_i)`.
    pub fn diagonal(&self, basis: &SectorBasis) -> Result<Vec<c64>> {
        if self.angles.len() != basis.sites() {
            return Err(Error::DimensionMismatch {
                context: "kick angles",
                expected: basis.sites(),
                found: self.angles.len(),
            });
        }
        Ok(basis
            .states()
            .iter()
            .map(|&s| {
                let phase: f64 =
                    self.angles.iter().enumerate().map(|(i, &t)| t * basis.spin_z(s, i + 1)).sum();
                c64::cis(-phase)
            })
            .collect())
    }
}

/// `sites` independent uniform draws on `[-theta/2, theta/2]`.
pub fn sample_kick_angles<R: Rng + ?Sized>(theta: f64, sites: usize, rng: &mut R) -> Result<KickAngles> {
    check_theta(theta)?;
    let angles = (0..sites).map(|_| theta * (rng.random::<f64>() - 0.5)).collect();
    Ok(KickAngles { angles, seed: None })
}

/// `exp(-i H tau)` from the spectral decomposition of `H`.
///
/// `H` is real, so the propagator is complex symmetric: `V cos(E tau) V^T - i V sin(E tau) V^T`.
pub fn free_propagator(spectrum: &HermitianSpectrum, tau: f64) -> Mat<c64> {
    let v = spectrum.eigenvectors.as_ref();
    let n = spectrum.dim();
    let cos = Mat::<f64>::from_fn(n, n, |i, j| v[(i, j)] * (spectrum.eigenvalues[j] * tau).cos());
    let sin = Mat::<f64>::from_fn(n, n, |i, j| v[(i, j)] * (spectrum.eigenvalues[j] * tau).sin());
    let re = &cos * v.transpose();
    let im = &sin * v.transpose();
    Mat::from_fn(n, n, |i, j| c64::new(re[(i, j)], -im[(i, j)]))
}

/// Left-multiplies a propagator by the diagonal kick.
pub fn apply_kick(propagator: MatRef<'_, c64>, kick_diagonal: &[c64]) -> Result<Mat<c64>> {
    if kick_diagonal.len() != propagator.nrows() {
        return Err(Error::DimensionMismatch {
            context: "kick diagonal",
            expected: propagator.nrows(),
            found: kick_diagonal.len(),
        });
    }
    Ok(Mat::from_fn(propagator.nrows(), propagator.ncols(), |i, j| kick_diagonal[i] * propagator[(i, j)]))
}

/// `U_F = R(theta) exp(-i H tau)` in the sector basis.
pub fn build_floquet(
    spectrum: &HermitianSpectrum,
    kick: &KickAngles,
    tau: f64,
    basis: &SectorBasis,
) -> Result<Mat<c64>> {
    if spectrum.dim() != basis.dim() {
        return Err(Error::DimensionMismatch { context: "spectrum", expected: basis.dim(), found: spectrum.dim() });
    }
    let w = free_propagator(spectrum, tau);
    apply_kick(w.as_ref(), &kick.diagonal(basis)?)
}

/// The parts of a kicked chain shared by every disorder sample at fixed `(H, tau)`.
#[derive(Clone, Debug)]
pub struct FloquetModel {
    pub config: ChainConfig,
    pub basis: Arc<SectorBasis>,
    /// `exp(-i H tau)`.
    pub propagator: Mat<c64>,
}

impl FloquetModel {
    /// Builds the half-filling basis and diagonalizes `H` from scratch.
    pub fn prepare(config: &ChainConfig) -> Result<Self> {
        config.validate()?;
        let basis = Arc::new(SectorBasis::half_filling(config.sites)?);
        let spectrum = hamiltonian_spectrum(config, &basis)?;
        Self::new(config, basis, &spectrum)
    }

    /// Reuses an existing basis and spectrum of `H`.
    pub fn new(config: &ChainConfig, basis: Arc<SectorBasis>, spectrum: &HermitianSpectrum) -> Result<Self> {
        if spectrum.dim() != basis.dim() {
            return Err(Error::DimensionMismatch { context: "spectrum", expected: basis.dim(), found: spectrum.dim() });
        }
        Ok(Self { config: config.clone(), basis, propagator: free_propagator(spectrum, config.tau) })
    }

    pub fn kick(&self, seed: u64) -> Result<KickAngles> {
        KickAngles::from_seed(self.config.theta, self.config.sites, seed)
    }

    /// `U_F` for the given quenched angles.
    pub fn operator(&self, kick: &KickAngles) -> Result<Mat<c64>> {
        apply_kick(self.propagator.as_ref(), &kick.diagonal(&self.basis)?)
    }
}

/// Eigenvectors and eigenphases of a unitary matrix, phases ascending in `(-pi, pi]`.
#[derive(Clone, Debug)]
pub struct FloquetDecomposition {
    /// Column `k` belongs to `phases[k]`.
    pub vectors: Mat<c64>,
    pub phases: Vec<f64>,
}

impl FloquetDecomposition {
    pub fn dim(&self) -> usize {
        self.phases.len()
    }

    /// `V diag(e^{i phi}) V^dagger`.
    pub fn reconstruct(&self) -> Mat<c64> {
        let v = self.vectors.as_ref();
        let scaled = Mat::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * c64::cis(self.phases[j]));
        &scaled * v.adjoint()
    }

    pub fn reconstruction_error(&self, u: MatRef<'_, c64>) -> f64 {
        max_abs_diff(self.reconstruct().as_ref(), u)
    }

    pub fn orthonormality_error(&self) -> f64 {
        let v = self.vectors.as_ref();
        identity_error((v.adjoint() * v).as_ref())
    }

    /// Checks both residuals against `tol`.
    pub fn verify(&self, u: MatRef<'_, c64>, tol: f64) -> Result<()> {
        let ortho = self.orthonormality_error();
        let recon = self.reconstruction_error(u);
        if ortho > tol || recon > tol {
            return Err(Error::numerical(
                "floquet decomposition",
                format!("orthonormality residual {ortho:.3e}, reconstruction residual {recon:.3e} (tolerance {tol:.1e})"),
            ));
        }
        Ok(())
    }
}

fn check_square(u: MatRef<'_, c64>) -> Result<()> {
    if u.nrows() != u.ncols() || u.nrows() == 0 {
        return Err(Error::DimensionMismatch { context: "unitary matrix", expected: u.nrows(), found: u.ncols() });
    }
    Ok(())
}

/// Eigendecomposition of a unitary matrix with the general dense eigensolver.
///
/// Eigenvectors inside clusters of phases closer than [`DEGENERACY_GAP`] are
/// re-orthonormalized; the result is checked against [`DECOMPOSITION_TOLERANCE`].
pub fn diagonalize_floquet(u: MatRef<'_, c64>) -> Result<FloquetDecomposition> {
    check_square(u)?;
    let n = u.nrows();
    let evd = u.eigen().map_err(|e| Error::numerical("general eigensolver", format!("{e:?}")))?;
    let values: Vec<c64> = evd.S().column_vector().iter().copied().collect();
    if let Some(bad) = values.iter().find(|l| (l.norm() - 1.0).abs() > DECOMPOSITION_TOLERANCE) {
        return Err(Error::numerical("general eigensolver", format!("eigenvalue modulus {} is not 1", bad.norm())));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let phases_raw: Vec<f64> = values.iter().map(|l| wrap_phase(l.arg())).collect();
    order.sort_by(|&i, &j| phases_raw[i].total_cmp(&phases_raw[j]));
    let phases: Vec<f64> = order.iter().map(|&k| phases_raw[k]).collect();
    let raw = evd.U();
    let mut vectors = Mat::from_fn(n, n, |i, j| raw[(i, order[j])]);

    for cluster in degenerate_clusters(&phases, DEGENERACY_GAP) {
        orthonormalize_columns(&mut vectors, &cluster);
    }

    let decomp = FloquetDecomposition { vectors, phases };
    decomp.verify(u, DECOMPOSITION_TOLERANCE)?;
    Ok(decomp)
}

/// Groups indices of sorted circular phases whose neighbours are closer than `gap`.
fn degenerate_clusters(phases: &[f64], gap: f64) -> Vec<Vec<usize>> {
    let n = phases.len();
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut current = vec![0];
    for k in 1..n {
        if phases[k] - phases[k - 1] < gap {
            current.push(k);
        } else {
            clusters.push(std::mem::replace(&mut current, vec![k]));
        }
    }
    clusters.push(current);
    // close the circle at +-pi
    if clusters.len() > 1 && std::f64::consts::TAU - (phases[n - 1] - phases[0]) < gap {
        let last = clusters.pop().unwrap();
        clusters[0].extend(last);
    }
    clusters
}

/// Modified Gram-Schmidt (two passes) over the listed columns; singletons are normalized.
fn orthonormalize_columns(v: &mut Mat<c64>, cols: &[usize]) {
    for (pos, &j) in cols.iter().enumerate() {
        for _ in 0..2 {
            for &k in &cols[..pos] {
                let mut dot = c64::new(0.0, 0.0);
                for i in 0..v.nrows() {
                    dot += v[(i, k)].conj() * v[(i, j)];
                }
                for i in 0..v.nrows() {
                    let vk = v[(i, k)];
                    v[(i, j)] -= dot * vk;
                }
            }
        }
        let norm = (0..v.nrows()).map(|i| v[(i, j)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..v.nrows() {
            v[(i, j)] /= norm;
        }
    }
}

/// Largest `|tan|` accepted from the Cayley transform before retrying with another shift.
const CAYLEY_LIMIT: f64 = 1e8;

struct CayleyOutcome {
    kappa: Vec<f64>,
    vectors: Option<Mat<c64>>,
}

fn cayley_attempt(u: MatRef<'_, c64>, shift: f64, vectors: bool) -> Option<CayleyOutcome> {
    let n = u.nrows();
    let rot = c64::cis(shift);
    let one = c64::new(1.0, 0.0);
    let i_unit = c64::new(0.0, 1.0);
    let plus = Mat::from_fn(n, n, |i, j| if i == j { one + rot * u[(i, j)] } else { rot * u[(i, j)] });
    let mut k = Mat::from_fn(n, n, |i, j| {
        let d = if i == j { one - rot * u[(i, j)] } else { -rot * u[(i, j)] };
        i_unit * d
    });
    let lu = plus.partial_piv_lu();
    lu.solve_in_place(k.as_mut());
    for j in 0..n {
        for i in 0..n {
            if !(k[(i, j)].re.is_finite() && k[(i, j)].im.is_finite()) {
                return None;
            }
        }
    }
    let herm = Mat::from_fn(n, n, |i, j| (k[(i, j)] + k[(j, i)].conj()) * 0.5);
    if vectors {
        let evd = herm.self_adjoint_eigen(Side::Lower).ok()?;
        let kappa = evd.S().column_vector().iter().map(|z| z.re).collect();
        Some(CayleyOutcome { kappa, vectors: Some(evd.U().to_owned()) })
    } else {
        let kappa = herm.self_adjoint_eigenvalues(Side::Lower).ok()?;
        Some(CayleyOutcome { kappa, vectors: None })
    }
}

/// Shift placing `-1` in the middle of the widest gap of the given phases.
fn shift_from_phases(phases: &[f64]) -> f64 {
    let mut sorted = phases.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut best = (std::f64::consts::TAU - (sorted[n - 1] - sorted[0]), sorted[n - 1]);
    for w in sorted.windows(2) {
        if w[1] - w[0] > best.0 {
            best = (w[1] - w[0], w[0]);
        }
    }
    let mid = best.1 + 0.5 * best.0;
    wrap_phase(std::f64::consts::PI - mid)
}

fn cayley(u: MatRef<'_, c64>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<c64>>)> {
    check_square(u)?;
    let mut shifts = [0.0, 1.0, 2.3, -0.7];
    let mut attempt = 0;
    while attempt < shifts.len() {
        let shift = shifts[attempt];
        attempt += 1;
        let Some(out) = cayley_attempt(u, shift, vectors) else { continue };
        let phases: Vec<f64> = out.kappa.iter().map(|&x| wrap_phase(2.0 * x.atan() - shift)).collect();
        if out.kappa.iter().all(|x| x.abs() < CAYLEY_LIMIT) {
            return Ok((phases, out.vectors));
        }
        if attempt == 1 {
            shifts[1] = shift_from_phases(&phases);
        }
    }
    Err(Error::numerical("cayley eigensolver", "no shift kept the spectrum away from -1"))
}

/// Phases of an exactly diagonal matrix; exact degeneracies keep the standard basis.
fn diagonal_phases(u: MatRef<'_, c64>) -> Result<Option<Vec<f64>>> {
    check_square(u)?;
    let n = u.nrows();
    for j in 0..n {
        for i in 0..n {
            if i != j && u[(i, j)] != c64::new(0.0, 0.0) {
                return Ok(None);
            }
        }
    }
    Ok(Some((0..n).map(|k| wrap_phase(u[(k, k)].arg())).collect()))
}

/// Eigendecomposition of a unitary matrix through the Hermitian Cayley transform.
///
/// The result is not checked against `u`; call [`FloquetDecomposition::verify`] when needed.
pub fn diagonalize_unitary(u: MatRef<'_, c64>) -> Result<FloquetDecomposition> {
    let (phases, vectors) = match diagonal_phases(u)? {
        Some(p) => {
            let n = p.len();
            (p, Mat::identity(n, n))
        }
        None => {
            let (p, v) = cayley(u, true)?;
            (p, v.expect("requested eigenvectors"))
        }
    };
    let n = phases.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| phases[i].total_cmp(&phases[j]));
    Ok(FloquetDecomposition {
        vectors: Mat::from_fn(n, n, |i, j| vectors[(i, order[j])]),
        phases: order.iter().map(|&k| phases[k]).collect(),
    })
}

/// Sorted eigenphases of a unitary matrix, without eigenvectors.
pub fn unitary_phases(u: MatRef<'_, c64>) -> Result<Vec<f64>> {
    let mut phases = match diagonal_phases(u)? {
        Some(p) => p,
        None => cayley(u, false)?.0,
    };
    phases.sort_by(f64::total_cmp);
    Ok(phases)
}
