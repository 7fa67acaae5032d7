//! Self-check suites run by `abtunnel verify`.
//!
//! Each check compares two independent routes to the same quantity and
//! reports the worst discrepancy against a fixed threshold.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;

use crate::dilute_gas::{
    allowed_sequence, amplitude_closed, amplitude_f_product, amplitude_truncated, closed_form_scale, f_closed,
    f_closed_sigma, f_series, series_coefficients, GasParams,
};
use crate::params::{Spin, SpinSystemParams};
use crate::semiclassics::{
    ab_phase, ab_phase_by_quadrature, field_for_phase, instanton_action, instanton_action_fixed,
    predicted_degeneracies, quench_fields, small_oscillation_frequency, EffectiveAction, SemiclassicalModel,
};
use crate::spin_model::spectrum;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub worst: f64,
    pub threshold: f64,
}

impl CheckResult {
    fn against(name: &str, worst: f64, threshold: f64) -> Self {
        CheckResult { name: name.to_string(), passed: worst <= threshold, worst, threshold }
    }

    fn exact(name: &str, mismatches: usize) -> Self {
        CheckResult { name: name.to_string(), passed: mismatches == 0, worst: mismatches as f64, threshold: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Combinatorics,
    Semiclassics,
    Spectrum,
    All,
}

pub fn run(suite: Suite) -> Vec<CheckResult> {
    match suite {
        Suite::Combinatorics => combinatorics(),
        Suite::Semiclassics => semiclassics(),
        Suite::Spectrum => spectrum_checks(),
        Suite::All => {
            let mut all = combinatorics();
            all.extend(semiclassics());
            all.extend(spectrum_checks());
            all
        }
    }
}

/// Sample points on `|x| <= radius`, real and complex.
pub fn sample_points(radius: f64) -> Vec<Complex64> {
    let mut pts = Vec::new();
    for i in 0..=10 {
        pts.push(Complex64::new(-radius + 2.0 * radius * i as f64 / 10.0, 0.0));
    }
    for i in 0..12 {
        for r in [0.3, 0.7, 1.0] {
            pts.push(Complex64::from_polar(r * radius, TAU * (i as f64 + 0.5) / 12.0));
        }
    }
    pts
}

/// `k`-th derivative by the trapezoidal rule on a circle of radius `r`
/// (a complex finite difference, exact up to aliasing for entire functions).
pub fn contour_derivative<F: Fn(Complex64) -> Complex64>(f: F, x: Complex64, k: u32, r: f64, nodes: usize) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..nodes {
        let t = TAU * j as f64 / nodes as f64;
        acc += f(x + Complex64::from_polar(r, t)) * Complex64::from_polar(1.0, -(k as f64) * t);
    }
    let fact: f64 = (1..=k).map(|i| i as f64).product();
    acc * fact / (nodes as f64 * r.powi(k as i32))
}

pub fn resummation_grid() -> Vec<GasParams> {
    let mut out = Vec::new();
    for n in [2u32, 3, 4, 6] {
        for phi in [0.0, PI / 3.0, PI, 2.5] {
            for y in [0.5, 1.0, 3.0] {
                let (omega, action, prefactor) = (1.0, 3.0, 1.0);
                let tau = y / (prefactor * f64::exp(-action));
                out.push(GasParams { omega, action, prefactor, tau, phi, symmetry: n });
            }
        }
    }
    out
}

/// `|a - b|` relative to `|b|`, or to a thousandth of the interference-free
/// size when the amplitude itself cancels to zero.
pub fn resummation_error(g: &GasParams, truncated: Complex64, closed: Complex64) -> f64 {
    let floor = 1e-3 * closed_form_scale(g);
    (truncated - closed).norm() / closed.norm().max(floor)
}

fn combinatorics() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let worst = resummation_grid()
        .iter()
        .map(|g| {
            let t = amplitude_truncated(g, 60).unwrap().value();
            resummation_error(g, t, amplitude_closed(g).value())
        })
        .fold(0.0, f64::max);
    out.push(CheckResult::against("resummation: truncated(60) vs closed form", worst, 1e-9));

    let worst = resummation_grid()
        .iter()
        .map(|g| resummation_error(g, amplitude_f_product(g).value(), amplitude_closed(g).value()))
        .fold(0.0, f64::max);
    out.push(CheckResult::against("resummation: f-product vs closed form", worst, 1e-9));

    let mut worst: f64 = 0.0;
    for n in [2, 3, 4, 6] {
        for x in sample_points(5.0) {
            let s = f_series(n, 0, x, 200);
            worst = worst.max((f_closed(n, x) - s).norm() / s.norm().max(1.0));
        }
    }
    out.push(CheckResult::against("f_closed vs f_series, |x| <= 5", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for n in [2u32, 3, 4, 6] {
        for x in sample_points(3.0) {
            let d = contour_derivative(|z| f_closed(n, z), x, n, 1.0, 64);
            let f = f_closed(n, x);
            worst = worst.max((d - f).norm());
        }
    }
    out.push(CheckResult::against("ODE d^N f_N0 = f_N0 on |x| <= 3", worst, 1e-6));

    let mut mismatches = 0;
    for n in [2u32, 3, 4, 6] {
        let base = series_coefficients(n, 0, 80);
        for sigma in 0..n {
            let want = series_coefficients(n, sigma, 80 - (n - sigma) as usize);
            // differentiate N - sigma times: c_k -> (k+1) c_{k+1}
            let mut c = base.clone();
            for _ in 0..(n - sigma) {
                c = (0..c.len() - 1).map(|k| (k + 1) as f64 * c[k + 1]).collect();
            }
            mismatches += c.iter().zip(&want).filter(|(a, b)| (*a - *b).abs() > 1e-15 * b.abs()).count();
        }
    }
    out.push(CheckResult::exact("derivative relation f_Ns = d^(N-s) f_N0", mismatches));

    let mut worst: f64 = 0.0;
    for n in [2u32, 3, 4, 6] {
        for sigma in 0..n {
            for x in sample_points(4.0) {
                let s = f_series(n, sigma, x, 200);
                worst = worst.max((f_closed_sigma(n, sigma, x) - s).norm() / s.norm().max(1.0));
            }
        }
    }
    out.push(CheckResult::against("root-of-unity f_Ns vs f_series", worst, 1e-12));

    let mut bad = 0;
    for n in 2u32..=8 {
        for n1 in 0..=100usize {
            for n2 in 0..=100usize {
                if allowed_sequence(n, n1, n2) == 1 && (n1 as i64 - n2 as i64 - 1).rem_euclid(n as i64) != 0 {
                    bad += 1;
                }
            }
        }
    }
    out.push(CheckResult::exact("allowed sequences have n1 - n2 = 1 mod N", bad));
    out
}

fn spin_params(n: u32, two_s: u32, lambda: f64, h: f64) -> SpinSystemParams {
    SpinSystemParams::new(n, Spin::from_twice(two_s as i64).expect("positive spin"), lambda, h)
}

/// Central-difference `omega`, Richardson-extrapolated.
pub fn finite_difference_omega(p: &SpinSystemParams) -> f64 {
    let act = EffectiveAction::new(p);
    let second = |step: f64| (act.potential(step) - 2.0 * act.potential(0.0) + act.potential(-step)) / (step * step);
    let step = 1e-3;
    let curvature = (4.0 * second(step / 2.0) - second(step)) / 3.0;
    (curvature / act.mass(0.0)).sqrt()
}

fn semiclassics() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for (n, two_s) in [(2, 20), (3, 9), (4, 10), (6, 21)] {
        for lam_scale in [0.05, 0.2, 0.5] {
            for h in [0.0, 0.1, 0.3] {
                let s = two_s as f64 / 2.0;
                let lam = lam_scale / s.powi(n as i32 - 2);
                let p = spin_params(n, two_s, lam, h);
                if let Ok(w) = small_oscillation_frequency(&p) {
                    worst = worst.max((w - finite_difference_omega(&p)).abs() / w);
                }
            }
        }
    }
    out.push(CheckResult::against("omega: analytic vs finite differences", worst, 1e-6));

    let p = spin_params(2, 20, 1e-3, 0.0);
    let limit = 2.0 * 2f64.sqrt() * 10.0 * 1e-3f64.sqrt();
    let rel = instanton_action(&p).map(|a| (a - limit).abs() / limit).unwrap_or(f64::INFINITY);
    out.push(CheckResult::against("S_cl small-lambda limit 2 sqrt(2) S sqrt(lambda)", rel, 0.02));

    let mut worst: f64 = 0.0;
    for (n, two_s, lam, h) in [(2, 20, 0.1, 0.3), (3, 9, 0.01, 0.1), (4, 10, 0.01, 0.2)] {
        let p = spin_params(n, two_s, lam, h);
        if let (Ok(a), Ok(b)) = (instanton_action_fixed(&p, 16), instanton_action_fixed(&p, 32)) {
            worst = worst.max((a - b).abs());
        } else {
            worst = f64::INFINITY;
        }
    }
    out.push(CheckResult::against("S_cl stable under node doubling", worst, 1e-8));

    let mut worst: f64 = 0.0;
    let mut state = 0x2545_f491_4f6c_dd1du64;
    let mut uniform = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    for _ in 0..1000 {
        let n = 2 + (uniform() * 7.0) as u32;
        let model = SemiclassicalModel::new(1.0 + uniform(), 1.0 + 5.0 * uniform(), 0.1 + uniform(), -20.0 + 40.0 * uniform(), n)
            .expect("valid model");
        let ks: Vec<i64> = crate::semiclassics::level_indices(n).collect();
        let k = ks[(uniform() * ks.len() as f64) as usize % ks.len()];
        let mut kp = ks[(uniform() * ks.len() as f64) as usize % ks.len()];
        if kp == k {
            kp = ks[(ks.iter().position(|&x| x == k).unwrap() + 1) % ks.len()];
        }
        let product = model.level_difference(k, kp).unwrap();
        let direct = model.level(k) - model.level(kp);
        worst = worst.max((product - direct).abs() / (4.0 * model.tunneling_scale()));
    }
    out.push(CheckResult::against("level difference product form vs cosines", worst, 1e-12));

    let mut bad = 0;
    for n in 2u32..=8 {
        for m in 0..=6i64 {
            let got = predicted_degeneracies(n, m as f64 * PI);
            let want = if n % 2 == 1 {
                (n as usize - 1) / 2
            } else if m % 2 == 1 {
                n as usize / 2
            } else {
                n as usize / 2 - 1
            };
            bad += usize::from(got != want);
        }
    }
    out.push(CheckResult::exact("degeneracy census at Phi = n pi, N = 2..8", bad));

    let mut worst: f64 = 0.0;
    for lam in [0.0, 0.1, 0.5] {
        for two_s in [9, 20] {
            let p = spin_params(2, two_s, lam, 0.0);
            for q in quench_fields(&p).unwrap() {
                let h = field_for_phase(&p, (2 * q.n + 1) as f64 * PI).unwrap();
                worst = worst.max((h - q.field).abs());
            }
        }
    }
    out.push(CheckResult::against("quench fields vs phase inversion", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for (n, two_s) in [(2, 9), (3, 10), (4, 21)] {
        for frac in [0.05, 0.3, 0.6] {
            for h in [0.0, 0.2, 0.7] {
                let s = two_s as f64 / 2.0;
                let lam = frac * 2.0 / (n as f64 * s.powi(n as i32 - 2));
                let p = spin_params(n, two_s, lam, h);
                let closed = ab_phase(&p).unwrap();
                let quad = ab_phase_by_quadrature(&p, 1e-12).unwrap();
                worst = worst.max((quad - closed).abs() / closed.abs().max(1e-300));
            }
        }
    }
    out.push(CheckResult::against("loop integral of A_N vs closed-form phase", worst, 1e-8));
    out
}

fn spectrum_checks() -> Vec<CheckResult> {
    let mut worst: f64 = 0.0;
    for lam in [0.1, 0.5] {
        for two_s in [3, 9, 21] {
            let e = spectrum(&spin_params(2, two_s, lam, 0.0)).unwrap().eigenvalues;
            for pair in e.chunks(2) {
                let scale = pair[0].abs().max(1.0);
                worst = worst.max((pair[1] - pair[0]).abs() / scale);
            }
        }
    }
    vec![CheckResult::against("Kramers pairing, N = 2, h = 0", worst, 1e-10)]
}
