//! Exact treatment of `H/A = S_z^2 - (lambda/2)(S_+^N + S_-^N) - h S S_z`.
//!
//! The basis is `|S, m>` with `m = -S, ..., S` in ascending order; magnetic
//! quantum numbers are carried as `2m` so half-integer spins stay exact.

use serde::{Deserialize, Serialize};

use crate::eigen::symmetric_eigen;
use crate::error::{Error, Result};
use crate::params::{validate_params, Purpose, SpinSystemParams};

/// `<m+N| S_+^N |m>`, the product of N successive raising coefficients.
pub fn ladder_product(two_s: u32, two_m: i64, n: u32) -> Result<f64> {
    let ts = two_s as i64;
    if two_m.abs() > ts || (ts - two_m) % 2 != 0 {
        return Err(Error::OutOfRange(format!("2m = {two_m} is not a level of 2S = {ts}")));
    }
    if two_m + 2 * n as i64 > ts {
        return Err(Error::OutOfRange(format!("m + N exceeds S (2m = {two_m}, N = {n}, 2S = {ts})")));
    }
    // 4[S(S+1) - m'(m'+1)] = 2S(2S+2) - 2m'(2m'+2), exact in integers
    let mut product = 1.0;
    for j in 0..n as i64 {
        let tm = two_m + 2 * j;
        let four_c2 = ts * (ts + 2) - tm * (tm + 2);
        product *= (four_c2 as f64).sqrt() / 2.0;
    }
    Ok(product)
}

/// Dense storage of a real symmetric matrix that is nonzero only on the
/// diagonal and on the `N`-th off-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymmetricMatrix {
    two_s: u32,
    band: u32,
    data: Vec<f64>,
}

impl BandedSymmetricMatrix {
    pub fn dimension(&self) -> usize {
        self.two_s as usize + 1
    }

    pub fn band(&self) -> u32 {
        self.band
    }

    pub fn two_s(&self) -> u32 {
        self.two_s
    }

    /// Entry by basis index (`0` is `m = -S`).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dimension() + j]
    }

    /// Entry by doubled magnetic quantum numbers.
    pub fn entry_m(&self, two_m: i64, two_mp: i64) -> f64 {
        let ts = self.two_s as i64;
        self.entry(((two_m + ts) / 2) as usize, ((two_mp + ts) / 2) as usize)
    }

    pub fn trace(&self) -> f64 {
        (0..self.dimension()).map(|i| self.entry(i, i)).sum()
    }

    /// Row-major dense view.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Builds from a full row-major array, e.g. for testing the solver on
    /// hand-made matrices. The band half-width is not checked.
    pub fn from_dense(two_s: u32, band: u32, data: Vec<f64>) -> Self {
        let d = two_s as usize + 1;
        assert_eq!(data.len(), d * d);
        BandedSymmetricMatrix { two_s, band, data }
    }
}

pub fn build_hamiltonian(p: &SpinSystemParams) -> Result<BandedSymmetricMatrix> {
    let p = validate_params(*p, Purpose::Exact)?.params;
    let two_s = p.spin.twice();
    let n = p.symmetry;
    let d = two_s as usize + 1;
    let s = p.s();
    let mut data = vec![0.0; d * d];
    for i in 0..d {
        let m = i as f64 - s;
        data[i * d + i] = m * m - p.field * s * m;
    }
    let nn = n as usize;
    for i in 0..d.saturating_sub(nn) {
        let two_m = 2 * i as i64 - two_s as i64;
        let c = -0.5 * p.lambda * ladder_product(two_s, two_m, n)?;
        data[(i + nn) * d + i] = c;
        data[i * d + i + nn] = c;
    }
    Ok(BandedSymmetricMatrix { two_s, band: n, data })
}

/// Full ascending spectrum in units of `A`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub params: Option<SpinSystemParams>,
}

pub fn diagonalize(m: &BandedSymmetricMatrix) -> Result<Spectrum> {
    if m.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
    }
    let eig = symmetric_eigen(&m.data, m.dimension(), false)?;
    Ok(Spectrum { eigenvalues: eig.values, params: None })
}

/// Builds and diagonalizes in one step, keeping the parameters attached.
pub fn spectrum(p: &SpinSystemParams) -> Result<Spectrum> {
    let h = build_hamiltonian(p)?;
    let mut s = diagonalize(&h)?;
    s.params = Some(*p);
    Ok(s)
}

/// Lowest `N` levels and which of them coincide.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub band: Vec<f64>,
    /// Index pairs `(i, j)`, `i < j`, into `band` whose levels coincide.
    pub pairs: Vec<(usize, usize)>,
    pub tolerance: f64,
}

impl BandStructure {
    pub fn degenerate_pair_count(&self) -> usize {
        self.pairs.len()
    }
}

/// `1e-9 max(1, |E|)` over the band, the threshold used when none is given.
pub fn default_tolerance(band: &[f64]) -> f64 {
    let emax = band.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    1e-9 * emax.max(1.0)
}

/// Groups the lowest `n` eigenvalues into clusters of consecutive levels
/// closer than `tol` and reports every pair inside each cluster. Pass
/// `None` for [`default_tolerance`].
pub fn band_structure(s: &Spectrum, n: usize, tol: Option<f64>) -> BandStructure {
    let band: Vec<f64> = s.eigenvalues.iter().take(n).copied().collect();
    let tol = tol.unwrap_or_else(|| default_tolerance(&band));
    let mut pairs = Vec::new();
    let mut start = 0;
    for i in 1..=band.len() {
        if i == band.len() || band[i] - band[i - 1] > tol {
            for a in start..i {
                for b in a + 1..i {
                    pairs.push((a, b));
                }
            }
            start = i;
        }
    }
    BandStructure { band, pairs, tolerance: tol }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Spin;

    fn params(n: u32, spin: &str, lambda: f64, h: f64) -> SpinSystemParams {
        SpinSystemParams::new(n, spin.parse::<Spin>().unwrap(), lambda, h)
    }

    /// Direct product of raising coefficients, written out independently.
    fn ladder_oracle(s: f64, m: f64, n: u32) -> f64 {
        (0..n).map(|j| {
            let mj = m + j as f64;
            (s * (s + 1.0) - mj * (mj + 1.0)).sqrt()
        }).product()
    }

    #[test]
    fn ladder_product_examples() {
        assert!((ladder_product(2, -2, 2).unwrap() - 2.0).abs() < 1e-15);
        assert!((ladder_product(3, -3, 3).unwrap() - 6.0).abs() < 1e-14);
        assert!(matches!(ladder_product(2, 2, 2), Err(Error::OutOfRange(_))));
        assert!(matches!(ladder_product(3, 0, 1), Err(Error::OutOfRange(_))));
        for two_s in 2..30u32 {
            let s = two_s as f64 / 2.0;
            for n in 1..=two_s.min(6) {
                let mut two_m = -(two_s as i64);
                while two_m + 2 * n as i64 <= two_s as i64 {
                    let got = ladder_product(two_s, two_m, n).unwrap();
                    let want = ladder_oracle(s, two_m as f64 / 2.0, n);
                    assert!((got - want).abs() <= 1e-12 * want.max(1.0));
                    two_m += 2;
                }
            }
        }
    }

    #[test]
    fn spin_one_hamiltonian_by_hand() {
        let (lam, h) = (0.3, 0.2);
        let m = build_hamiltonian(&params(2, "1", lam, h)).unwrap();
        assert_eq!(m.dimension(), 3);
        assert!((m.entry_m(-2, -2) - (1.0 + h)).abs() < 1e-15);
        assert_eq!(m.entry_m(0, 0), 0.0);
        assert!((m.entry_m(2, 2) - (1.0 - h)).abs() < 1e-15);
        assert!((m.entry_m(2, -2) + lam).abs() < 1e-15);
        assert!((m.entry_m(-2, 2) + lam).abs() < 1e-15);
        assert_eq!(m.entry_m(0, 2), 0.0);
    }

    #[test]
    fn spin_one_spectrum_at_zero_field() {
        let lam = 0.3;
        let s = spectrum(&params(2, "1", lam, 0.0)).unwrap();
        let want = [0.0, 1.0 - lam, 1.0 + lam];
        for (g, w) in s.eigenvalues.iter().zip(want) {
            assert!((g - w).abs() < 1e-14, "{g} vs {w}");
        }
    }

    #[test]
    fn band_pattern_and_exact_symmetry() {
        for (n, spin) in [(2, "10"), (3, "9/2"), (4, "7"), (6, "15/2")] {
            let m = build_hamiltonian(&params(n, spin, 0.01, 0.37)).unwrap();
            let d = m.dimension();
            for i in 0..d {
                for j in 0..d {
                    assert_eq!(m.entry(i, j).to_bits(), m.entry(j, i).to_bits());
                    if i != j && i.abs_diff(j) != n as usize {
                        assert_eq!(m.entry(i, j), 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn kramers_pairs_for_half_integer_spin() {
        let s = spectrum(&params(2, "3/2", 0.3, 0.0)).unwrap();
        let b = band_structure(&s, 4, None);
        assert_eq!(b.pairs, vec![(0, 1), (2, 3)]);
        let b = band_structure(&s, 2, None);
        assert_eq!(b.band.len(), 2);
        assert_eq!(b.degenerate_pair_count(), 1);
    }

    #[test]
    fn integer_spin_ground_doublet_is_split() {
        let s = spectrum(&params(2, "10", 0.1, 0.0)).unwrap();
        let b = band_structure(&s, 2, None);
        assert_eq!(b.band.len(), 2);
        assert!(b.pairs.is_empty());
    }

    #[test]
    fn trigonal_e_doublet() {
        let s = spectrum(&params(3, "5", 0.001, 0.0)).unwrap();
        let b = band_structure(&s, 3, None);
        assert_eq!(b.degenerate_pair_count(), 1);
    }

    #[test]
    fn transitive_grouping() {
        let s = Spectrum { eigenvalues: vec![0.0, 0.5e-9, 1.0e-9, 1.0], params: None };
        let b = band_structure(&s, 4, Some(0.6e-9));
        assert_eq!(b.pairs, vec![(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn hard_axis_violation_is_tolerated() {
        // lambda S^2 = 2 but the exact problem is still well posed
        assert!(spectrum(&params(4, "10", 0.02, 0.0)).is_ok());
    }

    #[test]
    fn invalid_parameters_propagate() {
        assert!(matches!(
            build_hamiltonian(&params(4, "3/2", 0.1, 0.0)),
            Err(Error::SymmetryTooHigh { .. })
        ));
    }
}
