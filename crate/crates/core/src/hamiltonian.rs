//! Long-range XXZ-type chain Hamiltonian in a fixed-magnetization sector.
//!
//! ```text
//! H = - sum_{i<j} [ Jx / |i-j|^a * (Sx_i Sx_j + Sy_i Sy_j) + Jz / |i-j|^b * Sz_i Sz_j ]
//! ```
//!
//! Each unordered pair is counted once and the chain is open. The flip-flop
//! part `Sx Sx + Sy Sy = (S+ S- + S- S+) / 2` only exchanges an up/down pair, so
//! the matrix is real symmetric and never leaves the sector.

use std::fmt;

use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use crate::basis::SectorBasis;
use crate::error::{Error, Result};

/// Exponents at or above this value mean nearest-neighbour coupling only.
pub const NEAREST_NEIGHBOR_THRESHOLD: f64 = 1e3;

/// Power-law exponent of a coupling; `inf` (or anything `>= 1e3`) is nearest-neighbour only.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Exponent(pub f64);

impl Exponent {
    pub const NEAREST_NEIGHBOR: Exponent = Exponent(f64::INFINITY);

    pub fn is_nearest_neighbor(self) -> bool {
        self.0 >= NEAREST_NEIGHBOR_THRESHOLD
    }

    /// `1 / d^exponent`, with the sentinel mapping to `[d == 1]`.
    pub fn decay(self, distance: usize) -> f64 {
        if self.is_nearest_neighbor() {
            if distance == 1 {
                1.0
            } else {
                0.0
            }
        } else {
            (distance as f64).powf(-self.0)
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_nearest_neighbor() {
            write!(f, "inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl From<f64> for Exponent {
    fn from(v: f64) -> Self {
        Exponent(v)
    }
}

/// How the pair sum of the Hamiltonian counts each unordered pair.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairSum {
    /// `sum_{i<j}`: every pair once.
    #[default]
    Single,
    /// `sum_{i != j}`: every pair twice, i.e. `H -> 2H`.
    Double,
}

impl PairSum {
    pub fn factor(self) -> f64 {
        match self {
            PairSum::Single => 1.0,
            PairSum::Double => 2.0,
        }
    }
}

impl fmt::Display for PairSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PairSum::Single => "single",
            PairSum::Double => "double",
        })
    }
}

/// Parameters of one kicked chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Number of sites `L`.
    pub sites: usize,
    pub jx: f64,
    pub jz: f64,
    /// Tunneling exponent `a`.
    pub a: Exponent,
    /// Ising exponent `b`.
    pub b: Exponent,
    /// Kick strength: angles are drawn from `[-theta/2, theta/2]`.
    pub theta: f64,
    /// Driving period.
    pub tau: f64,
    #[serde(default)]
    pub pair_sum: PairSum,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            sites: 12,
            jx: 1.0,
            jz: 1.0,
            a: Exponent(1.5),
            b: Exponent(1.5),
            theta: std::f64::consts::PI,
            tau: 0.1,
            pair_sum: PairSum::Single,
        }
    }
}

impl ChainConfig {
    /// Uniform couplings `a = b`.
    pub fn uniform(sites: usize, exponent: f64, theta: f64, tau: f64) -> Self {
        Self { sites, a: Exponent(exponent), b: Exponent(exponent), theta, tau, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sites < 2 || self.sites > crate::basis::MAX_SITES {
            return Err(Error::invalid("L", format!("{} is outside 2..={}", self.sites, crate::basis::MAX_SITES)));
        }
        if !self.jx.is_finite() || !self.jz.is_finite() {
            return Err(Error::invalid("jx/jz", "couplings must be finite"));
        }
        if !(self.a.0 > 0.0) {
            return Err(Error::invalid("a", format!("{} must be positive", self.a.0)));
        }
        if !(self.b.0 > 0.0) {
            return Err(Error::invalid("b", format!("{} must be positive", self.b.0)));
        }
        check_theta(self.theta)?;
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::invalid("tau", format!("{} must be positive", self.tau)));
        }
        Ok(())
    }

    /// Key identifying the Hamiltonian alone (kick strength and period excluded).
    pub fn hamiltonian_key(&self) -> HamiltonianKey {
        (self.sites, self.jx.to_bits(), self.jz.to_bits(), self.a.0.to_bits(), self.b.0.to_bits(), self.pair_sum)
    }
}

pub type HamiltonianKey = (usize, u64, u64, u64, u64, PairSum);

pub(crate) fn check_theta(theta: f64) -> Result<()> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(Error::invalid("theta", format!("{theta} is outside [0, pi]")));
    }
    Ok(())
}

impl fmt::Display for ChainConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L={} Jx={} Jz={} a={} b={} theta={} tau={}",
            self.sites, self.jx, self.jz, self.a, self.b, self.theta, self.tau
        )?;
        if self.pair_sum != PairSum::Single {
            write!(f, " pairs={}", self.pair_sum)?;
        }
        Ok(())
    }
}

/// Dense real symmetric Hamiltonian in the sector spanned by `basis`.
pub fn build_hamiltonian(config: &ChainConfig, basis: &SectorBasis) -> Result<Mat<f64>> {
    if basis.sites() != config.sites {
        return Err(Error::DimensionMismatch {
            context: "hamiltonian sites",
            expected: config.sites,
            found: basis.sites(),
        });
    }
    let sites = config.sites;
    let scale = config.pair_sum.factor();
    let flip_flop: Vec<f64> =
        (0..sites).map(|d| if d == 0 { 0.0 } else { 0.5 * scale * config.jx * config.a.decay(d) }).collect();
    let ising: Vec<f64> = (0..sites).map(|d| if d == 0 { 0.0 } else { scale * config.jz * config.b.decay(d) }).collect();

    let dim = basis.dim();
    let mut h = Mat::<f64>::zeros(dim, dim);
    for (k, &state) in basis.states().iter().enumerate() {
        let mut diag = 0.0;
        for i in 1..=sites {
            let bi = basis.bit_of_site(i);
            let si = state >> bi & 1;
            for j in i + 1..=sites {
                let d = j - i;
                let bj = basis.bit_of_site(j);
                let sj = state >> bj & 1;
                // Sz_i Sz_j = +1/4 for aligned spins, -1/4 otherwise.
                diag -= ising[d] * if si == sj { 0.25 } else { -0.25 };
                if si != sj && flip_flop[d] != 0.0 {
                    let partner = state ^ (1 << bi) ^ (1 << bj);
                    let idx = basis.rank_unchecked(partner);
                    h[(idx, k)] = -flip_flop[d];
                }
            }
        }
        h[(k, k)] = diag;
    }
    Ok(h)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric matrix.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Mat<f64>,
}

impl HermitianSpectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `max |V E V^T - H|`.
    pub fn reconstruction_error(&self, h: &Mat<f64>) -> f64 {
        let v = &self.eigenvectors;
        let scaled = Mat::<f64>::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * self.eigenvalues[j]);
        let r = &scaled * v.transpose();
        crate::linalg::max_abs_diff_real(r.as_ref(), h.as_ref())
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_error(&self) -> f64 {
        let v = &self.eigenvectors;
        let g = v.transpose() * v;
        crate::linalg::identity_error_real(g.as_ref())
    }
}

/// Symmetric eigendecomposition of `h` (lower triangle is read).
pub fn diagonalize_hermitian(h: &Mat<f64>) -> Result<HermitianSpectrum> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch { context: "square matrix", expected: h.nrows(), found: h.ncols() });
    }
    let n = h.nrows();
    if (0..n).all(|j| (j + 1..n).all(|i| h[(i, j)] == 0.0)) {
        // exactly diagonal: keep the standard basis, sorted by energy
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| h[(i, i)].total_cmp(&h[(j, j)]));
        return Ok(HermitianSpectrum {
            eigenvalues: order.iter().map(|&k| h[(k, k)]).collect(),
            eigenvectors: Mat::from_fn(n, n, |i, j| if i == order[j] { 1.0 } else { 0.0 }),
        });
    }
    let evd = h
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::numerical(format!("symmetric eigensolver, dim {}", h.nrows()), format!("{e:?}")))?;
    let eigenvalues: Vec<f64> = evd.S().column_vector().iter().copied().collect();
    let eigenvectors = evd.U().to_owned();
    Ok(HermitianSpectrum { eigenvalues, eigenvectors })
}

/// Builds and diagonalizes the Hamiltonian of `config`, naming it on failure.
pub fn hamiltonian_spectrum(config: &ChainConfig, basis: &SectorBasis) -> Result<HermitianSpectrum> {
    let h = build_hamiltonian(config, basis)?;
    diagonalize_hermitian(&h).map_err(|e| match e {
        Error::Numerical { detail, .. } => Error::numerical(format!("diagonalizing H for {config}"), detail),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_site() -> (ChainConfig, SectorBasis) {
        let c = ChainConfig { sites: 2, a: Exponent(1.0), b: Exponent(1.0), ..ChainConfig::default() };
        (c, SectorBasis::enumerate(2, 1).unwrap())
    }

    #[test]
    fn two_site_matrix_by_hand() {
        let (c, b) = two_site();
        let h = build_hamiltonian(&c, &b).unwrap();
        assert_eq!(h[(0, 0)], 0.25);
        assert_eq!(h[(1, 1)], 0.25);
        assert_eq!(h[(0, 1)], -0.5);
        assert_eq!(h[(1, 0)], -0.5);
    }

    #[test]
    fn two_site_eigenvalues_closed_form() {
        let (c, b) = two_site();
        let s = diagonalize_hermitian(&build_hamiltonian(&c, &b).unwrap()).unwrap();
        assert!((s.eigenvalues[0] + 0.25).abs() < 1e-14);
        assert!((s.eigenvalues[1] - 0.75).abs() < 1e-14);
    }

    #[test]
    fn zero_couplings_give_zero_matrix() {
        let c = ChainConfig { sites: 6, jx: 0.0, jz: 0.0, ..ChainConfig::default() };
        let b = SectorBasis::half_filling(6).unwrap();
        let h = build_hamiltonian(&c, &b).unwrap();
        assert!((0..b.dim()).all(|i| (0..b.dim()).all(|j| h[(i, j)] == 0.0)));
        let s = diagonalize_hermitian(&h).unwrap();
        assert!(s.eigenvalues.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn nearest_neighbor_sentinel_restricts_hopping() {
        let c = ChainConfig { sites: 6, a: Exponent::NEAREST_NEIGHBOR, b: Exponent(1.0), ..ChainConfig::default() };
        let b = SectorBasis::half_filling(6).unwrap();
        let h = build_hamiltonian(&c, &b).unwrap();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                if i != j && h[(i, j)] != 0.0 {
                    let diff = b.state(i) ^ b.state(j);
                    // the two flipped bits must be adjacent
                    assert_eq!(diff >> diff.trailing_zeros(), 0b11);
                }
            }
        }
        assert!(Exponent(1e3).is_nearest_neighbor());
        assert!(!Exponent(999.0).is_nearest_neighbor());
    }

    #[test]
    fn matrix_is_exactly_symmetric_and_trace_matches_ising_sum() {
        let c = ChainConfig { sites: 8, a: Exponent(1.3), b: Exponent(2.1), ..ChainConfig::default() };
        let b = SectorBasis::half_filling(8).unwrap();
        let h = build_hamiltonian(&c, &b).unwrap();
        let mut trace = 0.0;
        for i in 0..b.dim() {
            trace += h[(i, i)];
            for j in 0..b.dim() {
                assert_eq!(h[(i, j)], h[(j, i)]);
            }
        }
        let mut expected = 0.0;
        for &s in b.states() {
            for i in 1..=8 {
                for j in i + 1..=8 {
                    expected -= c.jz / ((j - i) as f64).powf(2.1) * b.spin_z(s, i) * b.spin_z(s, j);
                }
            }
        }
        assert!((trace - expected).abs() < 1e-12);
    }

    #[test]
    fn spin_flip_commutes_with_hamiltonian() {
        let c = ChainConfig { sites: 8, a: Exponent(1.7), b: Exponent(0.8), ..ChainConfig::default() };
        let b = SectorBasis::half_filling(8).unwrap();
        let h = build_hamiltonian(&c, &b).unwrap();
        let perm: Vec<usize> = b.states().iter().map(|&s| b.rank(b.flip_all(s)).unwrap()).collect();
        for i in 0..b.dim() {
            for j in 0..b.dim() {
                assert!((h[(perm[i], perm[j])] - h[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_mismatched_basis() {
        let c = ChainConfig { sites: 8, ..ChainConfig::default() };
        let b = SectorBasis::half_filling(6).unwrap();
        assert!(matches!(build_hamiltonian(&c, &b), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn random_symmetric_reconstruction() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let a = Mat::<f64>::from_fn(50, 50, |_, _| rng.random::<f64>() - 0.5);
        let h = Mat::<f64>::from_fn(50, 50, |i, j| a[(i, j)] + a[(j, i)]);
        let s = diagonalize_hermitian(&h).unwrap();
        assert!(s.reconstruction_error(&h) <= 1e-10 * 50.0);
        assert!(s.orthonormality_error() <= 1e-12);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::default().validate().is_ok());
        assert!(ChainConfig { theta: 4.0, ..ChainConfig::default() }.validate().is_err());
        assert!(ChainConfig { a: Exponent(0.0), ..ChainConfig::default() }.validate().is_err());
        assert!(ChainConfig { tau: 0.0, ..ChainConfig::default() }.validate().is_err());
        assert!(ChainConfig { b: Exponent::NEAREST_NEIGHBOR, ..ChainConfig::default() }.validate().is_ok());
    }

    #[test]
    fn double_pair_sum_doubles_the_matrix() {
        let basis = SectorBasis::half_filling(6).unwrap();
        let single = ChainConfig { sites: 6, ..ChainConfig::default() };
        let double = ChainConfig { pair_sum: PairSum::Double, ..single.clone() };
        let (h1, h2) = (build_hamiltonian(&single, &basis).unwrap(), build_hamiltonian(&double, &basis).unwrap());
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                assert_eq!(2.0 * h1[(i, j)], h2[(i, j)]);
            }
        }
        assert_ne!(single.hamiltonian_key(), double.hamiltonian_key());
    }
}
