//! Dilute instanton gas on a ring threaded by a flux.
//!
//! Instantons hop `phi -> phi + 2pi/N` and carry the phase `e^{-i Phi/N}`,
//! anti-instantons hop back with the conjugate phase. Summing independent
//! hops with the constraint that the net winding is one step gives a double
//! series in `n1` instantons and `n2` anti-instantons. The series resums
//! through the generating functions `f_{N,sigma}(x) = sum_l x^{Nl+sigma}/(Nl+sigma)!`
//! into `N` exponentials whose exponents are the tunnel-split levels.
//!
//! A global phase `e^{i Phi}` that multiplies the full amplitude is dropped;
//! it does not affect the levels.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::semiclassics::level_indices;

/// Default cutoff of the brute-force instanton sum.
pub const DEFAULT_CUTOFF: usize = 60;
/// Above this value of `D e^{-S_cl} tau` a cutoff of 60 is no longer safe.
pub const DILUTE_WARNING: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    pub omega: f64,
    pub action: f64,
    pub prefactor: f64,
    pub tau: f64,
    pub phi: f64,
    pub symmetry: u32,
}

impl GasParams {
    /// `D e^{-S_cl} tau`, the mean number of hops; small means dilute.
    pub fn diluteness(&self) -> f64 {
        self.prefactor * (-self.action).exp() * self.tau
    }

    /// Argument carried by instantons, `D e^{-S_cl} tau e^{-i Phi/N}`.
    pub fn instanton_argument(&self) -> Complex64 {
        Complex64::from_polar(self.diluteness(), -self.phi / self.symmetry as f64)
    }

    /// Argument carried by anti-instantons, the conjugate of the above.
    pub fn anti_instanton_argument(&self) -> Complex64 {
        self.instanton_argument().conj()
    }

    /// Zero-instanton normalization `sqrt(omega/pi) e^{-omega tau / 2}`.
    pub fn vacuum_factor(&self) -> f64 {
        (self.omega / PI).sqrt() * (-0.5 * self.omega * self.tau).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AmplitudeMethod {
    Truncated { cutoff: usize },
    FProduct,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeValue {
    pub re: f64,
    pub im: f64,
    pub method: AmplitudeMethod,
    pub symmetry: u32,
    pub phi: f64,
    pub tau: f64,
    /// `D e^{-S_cl} tau`.
    pub diluteness: f64,
    /// Set when the truncated sum is outside its safe range.
    pub truncation_warning: bool,
}

impl AmplitudeValue {
    fn new(value: Complex64, method: AmplitudeMethod, g: &GasParams) -> Self {
        let y = g.diluteness();
        AmplitudeValue {
            re: value.re,
            im: value.im,
            method,
            symmetry: g.symmetry,
            phi: g.phi,
            tau: g.tau,
            diluteness: y,
            truncation_warning: matches!(method, AmplitudeMethod::Truncated { .. }) && y > DILUTE_WARNING,
        }
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// `ln n!` by direct summation; the arguments here stay in the hundreds.
fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// `y^n / n!` evaluated in log space.
fn power_over_factorial(y: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    if y == 0.0 {
        return 0.0;
    }
    (n as f64 * y.ln() - ln_factorial(n)).exp()
}

/// Weight of `n1` instantons and `n2` anti-instantons.
pub fn amplitude_term(g: &GasParams, n1: usize, n2: usize) -> f64 {
    let y = g.diluteness();
    power_over_factorial(y, n1) * power_over_factorial(y, n2) * g.vacuum_factor()
}

/// Whether `n1` instantons and `n2` anti-instantons can realize a single
/// net hop. The branches mirror the residue classes `n1 = Nm + eta`,
/// `n2 = Nn + eta - 1`.
pub fn allowed_sequence(n: u32, n1: usize, n2: usize) -> u8 {
    let n = n as usize;
    let (r1, r2) = (n1 % n, n2 % n);
    let first = r1 == 0 && r2 == n - 1;
    let second = r1 == 1 && r2 == 0;
    let eta = n >= 3 && (2..n).any(|eta| r1 == eta && r2 == eta - 1);
    u8::from(first || second || eta)
}

/// Partial sum of `f_{N,sigma}` up to `l = cutoff`, stopping early once the
/// terms are negligible.
pub fn f_series(n: u32, sigma: u32, x: Complex64, cutoff: usize) -> Complex64 {
    let n = n as usize;
    let sigma = sigma as usize;
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..=sigma {
        term = term * x / k as f64;
    }
    let mut sum = term;
    let xn = x.powu(n as u32);
    for l in 0..cutoff {
        let base = n * l + sigma;
        let mut denom = 1.0;
        for j in 1..=n {
            denom *= (base + j) as f64;
        }
        term = term * xn / denom;
        sum += term;
        let past_peak = (base + n) as f64 > x.norm();
        if term == Complex64::new(0.0, 0.0) || (past_peak && term.norm() < 1e-18 * sum.norm()) {
            break;
        }
    }
    sum
}

/// `f_{N,0}` in closed form: a sum of exponentials along the `N`-th roots
/// of unity, with conjugate roots combined into cosines.
pub fn f_closed(n: u32, x: Complex64) -> Complex64 {
    let nf = n as f64;
    let root_pair = |r: u32| {
        let angle = TAU * r as f64 / nf;
        (x * angle.sin()).cos() * (x * angle.cos()).exp()
    };
    if n % 2 == 0 {
        let inner: Complex64 = (1..n / 2).map(root_pair).sum();
        (x.cosh() + inner) * (2.0 / nf)
    } else {
        let inner: Complex64 = (1..=(n - 1) / 2).map(root_pair).sum();
        (x.exp() + inner * 2.0) / nf
    }
}

/// `f_{N,sigma}` for any `sigma` by filtering `e^{w x}` over the roots of unity `w`.
pub fn f_closed_sigma(n: u32, sigma: u32, x: Complex64) -> Complex64 {
    let nf = n as f64;
    let total: Complex64 = (0..n)
        .map(|j| {
            let w = Complex64::from_polar(1.0, TAU * j as f64 / nf);
            let twist = Complex64::from_polar(1.0, -TAU * (j as f64) * sigma as f64 / nf);
            twist * (w * x).exp()
        })
        .sum();
    total / nf
}

/// Taylor coefficients `c_k` of `f_{N,sigma}` for `k < len`.
pub fn series_coefficients(n: u32, sigma: u32, len: usize) -> Vec<f64> {
    let (n, sigma) = (n as usize, sigma as usize);
    let mut out = vec![0.0; len];
    let mut fact = 1.0;
    for (k, c) in out.iter_mut().enumerate() {
        if k > 0 {
            fact *= k as f64;
        }
        if k >= sigma && (k - sigma) % n == 0 {
            *c = 1.0 / fact;
        }
    }
    out
}

/// Brute-force double sum over instanton numbers up to `cutoff`.
pub fn amplitude_truncated(g: &GasParams, cutoff: usize) -> Result<AmplitudeValue> {
    if cutoff < g.symmetry as usize {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff} below symmetry order {}",
            g.symmetry
        )));
    }
    let y = g.diluteness();
    let weights: Vec<f64> = (0..=cutoff).map(|k| power_over_factorial(y, k)).collect();
    let step = g.phi / g.symmetry as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for n1 in 0..=cutoff {
        for n2 in 0..=cutoff {
            if allowed_sequence(g.symmetry, n1, n2) == 0 {
                continue;
            }
            let phase = Complex64::from_polar(1.0, -step * (n1 as f64 - n2 as f64));
            sum += phase * (weights[n1] * weights[n2]);
        }
    }
    Ok(AmplitudeValue::new(sum * g.vacuum_factor(), AmplitudeMethod::Truncated { cutoff }, g))
}

/// The resummed amplitude assembled from products of generating functions.
pub fn amplitude_f_product(g: &GasParams) -> AmplitudeValue {
    let n = g.symmetry;
    let x1 = g.instanton_argument();
    let x2 = g.anti_instanton_argument();
    let f = |sigma: u32, x: Complex64| f_closed_sigma(n, sigma, x);
    let mut sum = f(0, x1) * f(n - 1, x2) + f(1, x1) * f(0, x2);
    for eta in 2..n {
        sum += f(eta, x1) * f(eta - 1, x2);
    }
    AmplitudeValue::new(sum * g.vacuum_factor(), AmplitudeMethod::FProduct, g)
}

fn closed_terms(g: &GasParams) -> impl Iterator<Item = Complex64> + '_ {
    let n = g.symmetry as f64;
    let two_y = 2.0 * g.diluteness();
    level_indices(g.symmetry).map(move |k| {
        let k = k as f64;
        let exponent = -0.5 * g.omega * g.tau + two_y * ((g.phi - TAU * k) / n).cos();
        Complex64::from_polar(exponent.exp(), -TAU * k / n)
    })
}

/// `(1/N) sqrt(omega/pi) sum_k exp[-E_Nk tau - 2 pi i k / N]`.
pub fn amplitude_closed(g: &GasParams) -> AmplitudeValue {
    let norm = (g.omega / PI).sqrt() / g.symmetry as f64;
    let sum: Complex64 = closed_terms(g).sum();
    AmplitudeValue::new(sum * norm, AmplitudeMethod::ClosedForm, g)
}

/// `(1/N) sqrt(omega/pi) sum_k |exp[...]|`, the size the closed form would
/// have without interference. Comparisons near exact cancellation use it.
pub fn closed_form_scale(g: &GasParams) -> f64 {
    let norm = (g.omega / PI).sqrt() / g.symmetry as f64;
    closed_terms(g).map(|z| z.norm()).sum::<f64>() * norm
}

/// Lowest band of a single well repeated with period `2pi`: `omega/2 - 2 D e^{-S_cl} cos theta`.
pub fn bloch_band(theta: f64, omega: f64, prefactor: f64, action: f64) -> f64 {
    0.5 * omega - 2.0 * prefactor * (-action).exp() * theta.cos()
}

/// Ground level of a single well on a ring threaded by flux `phi`.
pub fn one_fold_ab_energy(phi: f64, omega: f64, prefactor: f64, action: f64) -> f64 {
    bloch_band(phi, omega, prefactor, action)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gas(n: u32, phi: f64, y: f64) -> GasParams {
        // choose tau so that D e^{-S} tau = y with D = 1, S = 2
        let action = 2.0;
        GasParams { omega: 1.3, action, prefactor: 1.0, tau: y * action.exp(), phi, symmetry: n }
    }

    #[test]
    fn term_examples() {
        let g = gas(2, 0.4, 0.7);
        let vac = (1.3 / PI).sqrt() * (-0.65 * g.tau).exp();
        assert!((amplitude_term(&g, 0, 0) - vac).abs() < 1e-15 * vac);
        let one = amplitude_term(&g, 1, 0);
        assert!((one - vac * g.prefactor * g.tau * (-g.action).exp()).abs() < 1e-14 * vac);
        assert_eq!(amplitude_term(&g, 3, 5), amplitude_term(&g, 5, 3));
        // log-space evaluation survives where y^n and n! both overflow
        let big = GasParams { tau: 200.0 * g.action.exp(), omega: 1e-3, ..g };
        assert!(amplitude_term(&big, 300, 200).is_finite());
    }

    #[test]
    fn sequence_examples() {
        assert_eq!(allowed_sequence(2, 1, 0), 1);
        assert_eq!(allowed_sequence(2, 1, 1), 0);
        assert_eq!(allowed_sequence(2, 0, 1), 1);
        assert_eq!(allowed_sequence(3, 2, 1), 1);
        assert_eq!(allowed_sequence(3, 0, 2), 1);
        assert_eq!(allowed_sequence(3, 1, 2), 0);
    }

    #[test]
    fn generating_function_boundary_values() {
        let zero = Complex64::new(0.0, 0.0);
        for n in [2, 3, 4, 6] {
            assert_eq!(f_series(n, 0, zero, 10), Complex64::new(1.0, 0.0));
            for sigma in 1..n {
                assert_eq!(f_series(n, sigma, zero, 10), zero);
            }
            assert!((f_closed(n, zero) - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn generating_functions_for_n_two() {
        for i in 0..=20 {
            let x = Complex64::new(-5.0 + 0.5 * i as f64, 0.0);
            let c = f_series(2, 0, x, 100);
            assert!((c - x.cosh()).norm() <= 1e-12 * x.cosh().norm());
            let s = f_series(2, 1, x, 100);
            assert!((s - x.sinh()).norm() <= 1e-12 * x.sinh().norm().max(1.0));
        }
    }

    #[test]
    fn three_fold_closed_form() {
        let x = Complex64::new(1.7, -0.4);
        let want = (x.exp() + (x * (3.0f64.sqrt() / 2.0)).cos() * (-x / 2.0).exp() * 2.0) / 3.0;
        assert!((f_closed(3, x) - want).norm() < 1e-14);
    }

    #[test]
    fn closed_form_n2_phi0() {
        let g = gas(2, 0.0, 0.8);
        let want = g.vacuum_factor() * (2.0 * 0.8f64).sinh();
        let got = amplitude_closed(&g).value();
        assert!((got.re - want).abs() < 1e-13 * want);
        assert!(got.im.abs() < 1e-13 * want);
        let t = amplitude_truncated(&g, 60).unwrap().value();
        assert!((t.re - want).abs() < 1e-12 * want);
    }

    #[test]
    fn closed_form_vanishes_as_tau_goes_to_zero() {
        for n in [2, 3, 4, 6] {
            let g = GasParams { omega: 1.0, action: 1.0, prefactor: 1.0, tau: 1e-14, phi: 0.9, symmetry: n };
            assert!(amplitude_closed(&g).value().norm() < 1e-12);
        }
    }

    #[test]
    fn truncated_is_periodic_in_flux() {
        let g = gas(3, 0.7, 1.0);
        let a = amplitude_truncated(&g, 40).unwrap().value();
        let b = amplitude_truncated(&GasParams { phi: 0.7 + TAU * 3.0, ..g }, 40).unwrap().value();
        assert!((a - b).norm() < 1e-12 * a.norm());
    }

    #[test]
    fn truncation_error_shrinks_with_cutoff() {
        let g = gas(4, 2.5, 3.0);
        let closed = amplitude_closed(&g).value();
        let errs: Vec<f64> = [4usize, 8, 12, 16, 24]
            .iter()
            .map(|&c| (amplitude_truncated(&g, c).unwrap().value() - closed).norm())
            .collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0]);
        }
        assert!(amplitude_truncated(&g, 3).is_err());
    }

    #[test]
    fn f_product_matches_closed_form() {
        for n in [2, 3, 4, 6] {
            let g = gas(n, 1.1, 1.5);
            let a = amplitude_f_product(&g).value();
            let b = amplitude_closed(&g).value();
            assert!((a - b).norm() < 1e-12 * closed_form_scale(&g));
        }
    }

    #[test]
    fn warning_flag() {
        let g = gas(2, 0.0, 11.0);
        assert!(amplitude_truncated(&g, 60).unwrap().truncation_warning);
        assert!(!amplitude_closed(&g).truncation_warning);
    }

    #[test]
    fn band_examples() {
        let (w, d, s): (f64, f64, f64) = (2.0, 0.5, 3.0);
        let t = d * (-s).exp();
        assert!((bloch_band(0.0, w, d, s) - (1.0 - 2.0 * t)).abs() < 1e-15);
        assert!((bloch_band(PI / 2.0, w, d, s) - 1.0).abs() < 1e-15);
        let width = bloch_band(PI, w, d, s) - bloch_band(0.0, w, d, s);
        assert!((width - 4.0 * t).abs() < 1e-15);
        for n in 0..4 {
            let shift = one_fold_ab_energy(TAU * n as f64, w, d, s) - one_fold_ab_energy(0.0, w, d, s);
            assert!(shift.abs() < 1e-15);
        }
        let shift = one_fold_ab_energy(PI, w, d, s) - one_fold_ab_energy(0.0, w, d, s);
        assert!((shift - 4.0 * t).abs() < 1e-15);
        let m = crate::semiclassics::SemiclassicalModel::new(w, s, d, 0.8, 1).unwrap();
        assert!((m.level(0) - one_fold_ab_energy(0.8, w, d, s)).abs() < 1e-15);
    }
}
