//! Fixed-magnetization sector of an `L`-site spin-1/2 chain.
//!
//! Site `i` (1-based, `1..=L`) lives in bit `L - i` of a configuration, so site 1
//! is the most significant bit. A set bit is an up spin with `S^z = +1/2`.
//!
//! Configurations are kept in ascending integer order. For a fixed popcount that
//! order coincides with the colexicographic order of the set-bit positions, so
//! the combinatorial number system gives an O(L) rank without any lookup table
//! beyond binomial coefficients.

use crate::error::{Error, Result};

/// Largest chain length the sector enumeration accepts.
pub const MAX_SITES: usize = 24;

/// Binomial coefficients `C(n, k)` for `0 <= n, k <= MAX_SITES`.
#[derive(Clone, Debug)]
struct BinomialTable {
    table: Vec<[u64; MAX_SITES + 1]>,
}

impl BinomialTable {
    fn new() -> Self {
        let mut table = vec![[0u64; MAX_SITES + 1]; MAX_SITES + 1];
        for n in 0..=MAX_SITES {
            table[n][0] = 1;
            for k in 1..=n {
                table[n][k] = table[n - 1][k - 1] + if k < n { table[n - 1][k] } else { 0 };
            }
        }
        Self { table }
    }

    #[inline]
    fn get(&self, n: usize, k: usize) -> u64 {
        if k > n {
            0
        } else {
            self.table[n][k]
        }
    }
}

/// `C(n, k)` for small arguments.
pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

/// The ordered set of `L`-bit configurations with exactly `n_up` set bits.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    sites: usize,
    n_up: usize,
    states: Vec<u32>,
    binom: BinomialTable,
}

impl SectorBasis {
    /// Enumerates every configuration of `sites` spins with `n_up` up spins.
    pub fn enumerate(sites: usize, n_up: usize) -> Result<Self> {
        if sites == 0 || sites > MAX_SITES {
            return Err(Error::invalid("L", format!("{sites} is outside 1..={MAX_SITES}")));
        }
        if n_up > sites {
            return Err(Error::invalid("n_up", format!("{n_up} exceeds L = {sites}")));
        }
        let dim = binomial(sites, n_up) as usize;
        let mut states = Vec::with_capacity(dim);
        if n_up == 0 {
            states.push(0);
        } else {
            // Gosper's hack walks popcount-preserving successors in increasing order.
            let mut s: u64 = (1u64 << n_up) - 1;
            let limit = 1u64 << sites;
            while s < limit {
                states.push(s as u32);
                let c = s & s.wrapping_neg();
                let r = s + c;
                s = (((r ^ s) >> 2) / c) | r;
            }
        }
        debug_assert_eq!(states.len(), dim);
        Ok(Self { sites, n_up, states, binom: BinomialTable::new() })
    }

    /// The zero-magnetization sector `n_up = L / 2`.
    pub fn half_filling(sites: usize) -> Result<Self> {
        if !sites.is_multiple_of(2) {
            return Err(Error::invalid("L", format!("{sites} is odd; half filling needs even L")));
        }
        Self::enumerate(sites, sites / 2)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn n_up(&self) -> usize {
        self.n_up
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[u32] {
        &self.states
    }

    /// Configuration with index `k`, by table lookup.
    #[inline]
    pub fn state(&self, k: usize) -> u32 {
        self.states[k]
    }

    /// Index of `state` in the ascending enumeration.
    pub fn rank(&self, state: u32) -> Result<usize> {
        if state.count_ones() as usize != self.n_up || (self.sites < 32 && state >> self.sites != 0) {
            return Err(Error::invalid(
                "state",
                format!("{state:#b} is not an {}-site configuration with {} up spins", self.sites, self.n_up),
            ));
        }
        Ok(self.rank_unchecked(state))
    }

    /// Rank without validating the popcount.
    #[inline]
    pub fn rank_unchecked(&self, state: u32) -> usize {
        let mut rank = 0u64;
        let mut bits = state;
        let mut seen = 0usize;
        while bits != 0 {
            let pos = bits.trailing_zeros() as usize;
            seen += 1;
            rank += self.binom.get(pos, seen);
            bits &= bits - 1;
        }
        rank as usize
    }

    /// Inverse of [`rank`](Self::rank), computed combinatorially.
    pub fn unrank(&self, index: usize) -> Result<u32> {
        if index >= self.dim() {
            return Err(Error::invalid("index", format!("{index} >= dim {}", self.dim())));
        }
        let mut remaining = index as u64;
        let mut state = 0u32;
        let mut pos = self.sites;
        for k in (1..=self.n_up).rev() {
            // Largest position p with C(p, k) <= remaining.
            pos -= 1;
            while self.binom.get(pos, k) > remaining {
                pos -= 1;
            }
            remaining -= self.binom.get(pos, k);
            state |= 1 << pos;
        }
        Ok(state)
    }

    /// Bit position of 1-based site `site`.
    #[inline]
    pub fn bit_of_site(&self, site: usize) -> usize {
        self.sites - site
    }

    /// `S^z` eigenvalue (+1/2 or -1/2) of 1-based `site` in configuration `state`.
    #[inline]
    pub fn spin_z(&self, state: u32, site: usize) -> f64 {
        if state >> self.bit_of_site(site) & 1 == 1 {
            0.5
        } else {
            -0.5
        }
    }

    /// Configuration with every spin flipped.
    #[inline]
    pub fn flip_all(&self, state: u32) -> u32 {
        !state & self.mask()
    }

    #[inline]
    pub fn mask(&self) -> u32 {
        if self.sites == 32 {
            u32::MAX
        } else {
            (1u32 << self.sites) - 1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_sector() {
        let b = SectorBasis::enumerate(2, 1).unwrap();
        assert_eq!(b.states(), &[0b01, 0b10]);
        assert_eq!(b.dim(), 2);
    }

    #[test]
    fn four_site_half_filling() {
        let b = SectorBasis::enumerate(4, 2).unwrap();
        assert_eq!(b.states(), &[0b0011, 0b0101, 0b0110, 0b1001, 0b1010, 0b1100]);
        assert_eq!(b.rank(0b0011).unwrap(), 0);
        assert_eq!(b.rank(0b1100).unwrap(), 5);
    }

    #[test]
    fn sixteen_sites_dim() {
        assert_eq!(SectorBasis::enumerate(16, 8).unwrap().dim(), 12870);
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(SectorBasis::enumerate(0, 0).is_err());
        assert!(SectorBasis::enumerate(25, 3).is_err());
        assert!(SectorBasis::enumerate(4, 5).is_err());
        assert!(SectorBasis::half_filling(5).is_err());
        let b = SectorBasis::enumerate(4, 2).unwrap();
        assert!(b.rank(0b0111).is_err());
        assert!(b.rank(0b10001).is_err());
        assert!(b.unrank(6).is_err());
    }

    #[test]
    fn rank_matches_linear_scan_and_unrank_inverts() {
        for sites in 1..=12 {
            for n_up in 0..=sites {
                let b = SectorBasis::enumerate(sites, n_up).unwrap();
                assert_eq!(b.dim() as u64, binomial(sites, n_up));
                for (k, &s) in b.states().iter().enumerate() {
                    assert_eq!(s.count_ones() as usize, n_up);
                    let scanned = b.states().iter().position(|&x| x == s).unwrap();
                    assert_eq!(b.rank(s).unwrap(), scanned);
                    assert_eq!(b.unrank(k).unwrap(), s);
                }
                assert!(b.states().windows(2).all(|w| w[0] < w[1]));
            }
        }
    }

    #[test]
    fn sector_dims_sum_to_full_space() {
        for sites in 1..=16 {
            let total: usize = (0..=sites).map(|n| SectorBasis::enumerate(sites, n).unwrap().dim()).sum();
            assert_eq!(total, 1 << sites);
        }
    }

    #[test]
    fn site_one_is_most_significant() {
        let b = SectorBasis::enumerate(4, 2).unwrap();
        assert_eq!(b.spin_z(0b1010, 1), 0.5);
        assert_eq!(b.spin_z(0b1010, 2), -0.5);
        assert_eq!(b.spin_z(0b1010, 3), 0.5);
        assert_eq!(b.spin_z(0b1010, 4), -0.5);
        assert_eq!(b.flip_all(0b1010), 0b0101);
    }
}
