//! Stroboscopic evolution of the Néel state and its observables.
//!
//! `psi(t) = U_F^t psi(0)` is evaluated from the eigendecomposition of `U_F`:
//! `psi(t) = V diag(e^{i t phi}) V^dagger psi(0)`, two dense products per sampled
//! time however large `t` is.

use faer::{c64, Col, Mat};

use crate::basis::SectorBasis;
use crate::error::{Error, Result};
use crate::floquet::FloquetDecomposition;

/// Amplitudes over the configurations of a [`SectorBasis`].
#[derive(Clone, Debug, PartialEq)]
pub struct SectorState {
    pub amplitudes: Vec<c64>,
}

impl SectorState {
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![c64::new(0.0, 0.0); dim];
        amplitudes[index] = c64::new(1.0, 0.0);
        Self { amplitudes }
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }
}

/// Whole kick counts at which the state is sampled, strictly increasing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimeGrid {
    times: Vec<u64>,
}

impl TimeGrid {
    pub fn new(times: Vec<u64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::invalid("time grid", "empty"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("time grid", "kick counts must be strictly increasing"));
        }
        Ok(Self { times })
    }

    /// `points` log-spaced values from 1 to `t_max`, rounded and deduplicated.
    pub fn log_spaced(points: usize, t_max: u64) -> Result<Self> {
        if points < 2 || t_max < 1 {
            return Err(Error::invalid("time grid", format!("need >= 2 points and t_max >= 1 (got {points}, {t_max})")));
        }
        let top = (t_max as f64).log10();
        let mut times: Vec<u64> = (0..points)
            .map(|k| 10f64.powf(top * k as f64 / (points - 1) as f64).round() as u64)
            .map(|t| t.clamp(1, t_max))
            .collect();
        times.dedup();
        Self::new(times)
    }

    /// Default grid: 120 points up to `t_max`.
    pub fn standard(t_max: u64) -> Result<Self> {
        Self::log_spaced(120, t_max)
    }

    /// Same grid with `t = 0` prepended.
    pub fn with_origin(&self) -> Self {
        if self.times[0] == 0 {
            return self.clone();
        }
        let mut times = Vec::with_capacity(self.times.len() + 1);
        times.push(0);
        times.extend_from_slice(&self.times);
        Self { times }
    }

    pub fn times(&self) -> &[u64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `|up down up down ...>`: up spins on the odd sites `1, 3, ...`.
pub fn neel_state(basis: &SectorBasis) -> Result<SectorState> {
    let sites = basis.sites();
    if !sites.is_multiple_of(2) || basis.n_up() != sites / 2 {
        return Err(Error::invalid("basis", format!("Néel state needs even L at half filling (L={sites}, n_up={})", basis.n_up())));
    }
    let config = (1..=sites).step_by(2).fold(0u32, |s, site| s | 1 << basis.bit_of_site(site));
    Ok(SectorState::basis_state(basis.dim(), basis.rank(config)?))
}

/// Norm drift that aborts a trajectory.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// `U_F^t psi0` for every `t` in `grid`.
pub fn evolve_stroboscopic(
    decomp: &FloquetDecomposition,
    psi0: &SectorState,
    grid: &TimeGrid,
) -> Result<Vec<SectorState>> {
    let mut out = Vec::with_capacity(grid.len());
    for_each_time(decomp, psi0, grid, |_, psi| {
        out.push(psi);
        Ok(())
    })?;
    Ok(out)
}

/// Streams the evolved states to `visit` without keeping them.
pub fn for_each_time<F>(decomp: &FloquetDecomposition, psi0: &SectorState, grid: &TimeGrid, mut visit: F) -> Result<()>
where
    F: FnMut(u64, SectorState) -> Result<()>,
{
    let n = decomp.dim();
    if psi0.dim() != n {
        return Err(Error::DimensionMismatch { context: "initial state", expected: n, found: psi0.dim() });
    }
    let v = decomp.vectors.as_ref();
    let psi = Col::<c64>::from_fn(n, |i| psi0.amplitudes[i]);
    let overlaps: Col<c64> = v.adjoint() * &psi;
    let mut rotated = Col::<c64>::zeros(n);
    for &t in grid.times() {
        if t == 0 {
            visit(0, psi0.clone())?;
            continue;
        }
        let tf = t as f64;
        for k in 0..n {
            rotated[k] = overlaps[k] * c64::cis(tf * decomp.phases[k]);
        }
        let evolved: Col<c64> = v * &rotated;
        let mut amplitudes: Vec<c64> = evolved.iter().copied().collect();
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > NORM_DRIFT_LIMIT {
            return Err(Error::numerical("stroboscopic evolution", format!("norm {norm} at t = {t}")));
        }
        for a in &mut amplitudes {
            *a /= norm;
        }
        visit(t, SectorState { amplitudes })?;
    }
    Ok(())
}

/// Precomputed bookkeeping for the cut between sites `L/2` and `L/2 + 1`.
///
/// The left half holds the high bits. A sector state splits into blocks labelled
/// by the number of up spins on the left; inside block `n` the amplitudes form a
/// `C(L/2, n) x C(L/2, n_up - n)` matrix whose singular values are Schmidt
/// coefficients.
#[derive(Clone, Debug)]
pub struct HalfChainCut {
    /// `(block, row, col)` of every basis state.
    placement: Vec<(usize, usize, usize)>,
    /// `(rows, cols)` of every block.
    shapes: Vec<(usize, usize)>,
}

impl HalfChainCut {
    pub fn new(basis: &SectorBasis) -> Result<Self> {
        let sites = basis.sites();
        if !sites.is_multiple_of(2) {
            return Err(Error::invalid("L", format!("half-chain cut needs even L, got {sites}")));
        }
        let half = sites / 2;
        let left_bases: Vec<SectorBasis> =
            (0..=half).map(|n| SectorBasis::enumerate(half, n)).collect::<Result<_>>()?;
        let mut shapes = vec![(0, 0); half + 1];
        let mut placement = Vec::with_capacity(basis.dim());
        for &s in basis.states() {
            let left = s >> half;
            let right = s & ((1 << half) - 1);
            let nl = left.count_ones() as usize;
            let nr = right.count_ones() as usize;
            let row = left_bases[nl].rank_unchecked(left);
            let col = left_bases[nr].rank_unchecked(right);
            shapes[nl] = (left_bases[nl].dim(), left_bases[nr].dim());
            placement.push((nl, row, col));
        }
        Ok(Self { placement, shapes })
    }

    /// Von Neumann entropy of the left half, natural log.
    pub fn entropy(&self, psi: &SectorState) -> Result<f64> {
        if psi.dim() != self.placement.len() {
            return Err(Error::DimensionMismatch { context: "state", expected: self.placement.len(), found: psi.dim() });
        }
        let mut blocks: Vec<Mat<c64>> = self.shapes.iter().map(|&(r, c)| Mat::zeros(r, c)).collect();
        for (&(b, r, c), &a) in self.placement.iter().zip(&psi.amplitudes) {
            blocks[b][(r, c)] = a;
        }
        let mut entropy = 0.0;
        for block in blocks.iter().filter(|b| b.nrows() > 0 && b.ncols() > 0) {
            let sv = block
                .singular_values()
                .map_err(|e| Error::numerical("schmidt decomposition", format!("{e:?}")))?;
            for s in sv {
                let p = s * s;
                if p > 0.0 {
                    entropy -= p * p.ln();
                }
            }
        }
        Ok(entropy.max(0.0))
    }
}

/// Half-chain entanglement entropy `-Tr rho ln rho`.
pub fn entanglement_entropy(psi: &SectorState, basis: &SectorBasis) -> Result<f64> {
    HalfChainCut::new(basis)?.entropy(psi)
}

/// Per-configuration weights of the staggered magnetization `(2/L) sum_i (-1)^(i+1) s_i`.
#[derive(Clone, Debug)]
pub struct ImbalanceWeights {
    weights: Vec<f64>,
}

impl ImbalanceWeights {
    pub fn new(basis: &SectorBasis) -> Self {
        let sites = basis.sites();
        let weights = basis
            .states()
            .iter()
            .map(|&s| {
                let staggered: f64 = (1..=sites)
                    .map(|i| if i % 2 == 1 { basis.spin_z(s, i) } else { -basis.spin_z(s, i) })
                    .sum();
                2.0 * staggered / sites as f64
            })
            .collect();
        Self { weights }
    }

    pub fn imbalance(&self, psi: &SectorState) -> Result<f64> {
        if psi.dim() != self.weights.len() {
            return Err(Error::DimensionMismatch { context: "state", expected: self.weights.len(), found: psi.dim() });
        }
        Ok(psi.amplitudes.iter().zip(&self.weights).map(|(a, w)| a.norm_sqr() * w).sum())
    }
}

/// `I = (2/L) sum_i (-1)^(i+1) <Sz_i>`; equals 1 on the Néel state.
pub fn imbalance(psi: &SectorState, basis: &SectorBasis) -> Result<f64> {
    ImbalanceWeights::new(basis).imbalance(psi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    #[test]
    fn neel_configuration() {
        let b = SectorBasis::half_filling(4).unwrap();
        let psi = neel_state(&b).unwrap();
        let k = psi.amplitudes.iter().position(|a| a.re == 1.0).unwrap();
        assert_eq!(b.state(k), 0b1010);
        assert_eq!(imbalance(&psi, &b).unwrap(), 1.0);
        assert_eq!(entanglement_entropy(&psi, &b).unwrap(), 0.0);
    }

    #[test]
    fn neel_needs_even_half_filling() {
        assert!(neel_state(&SectorBasis::enumerate(5, 2).unwrap()).is_err());
        assert!(neel_state(&SectorBasis::enumerate(6, 2).unwrap()).is_err());
    }

    #[test]
    fn anti_neel_has_negative_imbalance() {
        let b = SectorBasis::half_filling(8).unwrap();
        let k = b.rank(0b0101_0101).unwrap();
        assert_eq!(imbalance(&SectorState::basis_state(b.dim(), k), &b).unwrap(), -1.0);
    }

    #[test]
    fn uniform_superposition_has_no_imbalance() {
        let b = SectorBasis::half_filling(6).unwrap();
        let amp = c64::new(1.0 / (b.dim() as f64).sqrt(), 0.0);
        let psi = SectorState { amplitudes: vec![amp; b.dim()] };
        assert!(imbalance(&psi, &b).unwrap().abs() < 1e-15);
    }

    #[test]
    fn bell_pair_across_the_cut() {
        let b = SectorBasis::half_filling(4).unwrap();
        let mut psi = SectorState { amplitudes: vec![c64::new(0.0, 0.0); b.dim()] };
        let h = std::f64::consts::FRAC_1_SQRT_2;
        psi.amplitudes[b.rank(0b0110).unwrap()] = c64::new(h, 0.0);
        psi.amplitudes[b.rank(0b1001).unwrap()] = c64::new(0.0, h);
        assert!((entanglement_entropy(&psi, &b).unwrap() - LN_2).abs() < 1e-12);
    }

    #[test]
    fn odd_chain_has_no_half_cut() {
        assert!(HalfChainCut::new(&SectorBasis::enumerate(5, 2).unwrap()).is_err());
    }

    #[test]
    fn log_grid_is_integer_and_increasing() {
        let g = TimeGrid::standard(1_000_000).unwrap();
        assert_eq!(g.times()[0], 1);
        assert_eq!(*g.times().last().unwrap(), 1_000_000);
        assert!(g.times().windows(2).all(|w| w[0] < w[1]));
        assert!(g.len() > 100 && g.len() <= 120);
        assert_eq!(g.with_origin().times()[0], 0);
        assert!(TimeGrid::new(vec![3, 3]).is_err());
    }

    #[test]
    fn zeroth_power_returns_input() {
        let b = SectorBasis::half_filling(4).unwrap();
        let d = FloquetDecomposition { vectors: Mat::identity(6, 6), phases: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6] };
        let psi = neel_state(&b).unwrap();
        let out = evolve_stroboscopic(&d, &psi, &TimeGrid::new(vec![0, 7]).unwrap()).unwrap();
        assert_eq!(out[0], psi);
        assert!((out[1].norm() - 1.0).abs() < 1e-14);
    }
}
