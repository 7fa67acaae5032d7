//! Spin-coherent-state picture of the N-fold problem.
//!
//! The classical anisotropy surface, the effective one-dimensional action
//! in the azimuth `phi` (position dependent mass, potential and gauge
//! term), the Aharonov-Bohm phase picked up around the hard axis, and the
//! resulting tunnel-split levels `E_Nk(Phi)` with their degeneracies.
//!
//! For `N >= 3` the effective action relies on `sin^N theta ~ 1 - (N/2) cos^2 theta`
//! and is trustworthy only for small `lambda` and `h`. For `N = 2` it is exact.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{golden_section, integrate, integrate_fixed};
use crate::params::{validate_params, Purpose, SpinSystemParams};

/// Absolute tolerance of the instanton action quadrature.
pub const ACTION_TOLERANCE: f64 = 1e-10;
const MINIMUM_SCAN_POINTS: usize = 1024;

/// `E_N(theta, phi) / A = S^2 (cos^2 theta - lambda S^(N-2) sin^N theta cos N phi - h cos theta)`.
#[derive(Debug, Clone, Copy)]
pub struct ClassicalSurface {
    pub params: SpinSystemParams,
}

impl ClassicalSurface {
    pub fn new(params: SpinSystemParams) -> Self {
        ClassicalSurface { params }
    }

    pub fn energy(&self, theta: f64, phi: f64) -> f64 {
        let p = &self.params;
        let s = p.s();
        let n = p.symmetry as i32;
        let (st, ct) = theta.sin_cos();
        s * s * (ct * ct - p.hard_axis_ratio() * st.powi(n) * (n as f64 * phi).cos() - p.field * ct)
    }

    /// `dE/dtheta` along `phi = 0`.
    fn slope(&self, theta: f64) -> f64 {
        let p = &self.params;
        let s = p.s();
        let n = p.symmetry as i32;
        let (st, ct) = theta.sin_cos();
        s * s * (-2.0 * ct * st - p.hard_axis_ratio() * n as f64 * st.powi(n - 1) * ct + p.field * st)
    }
}

/// Polar angle `theta_0` of the easy-plane minima and the energy there.
pub fn classical_minimum(p: &SpinSystemParams) -> Result<(f64, f64)> {
    let p = validate_params(*p, Purpose::Semiclassical)?.params;
    let surface = ClassicalSurface::new(p);
    let (theta, _) = golden_section(|t| surface.energy(t, 0.0), 0.0, 0.5 * PI, 1e-12)?;
    // the surface is quadratic at the minimum, so energies alone only fix
    // theta to ~sqrt(eps); finish on the sign of the slope
    let theta = polish_on_slope(&surface, theta);
    Ok((theta, surface.energy(theta, 0.0)))
}

fn polish_on_slope(surface: &ClassicalSurface, guess: f64) -> f64 {
    let (lo, hi) = ((guess - 1e-6).max(0.0), (guess + 1e-6).min(0.5 * PI));
    let (slo, shi) = (surface.slope(lo), surface.slope(hi));
    if slo >= 0.0 && lo == 0.0 {
        return 0.0;
    }
    if shi <= 0.0 && hi == 0.5 * PI {
        return 0.5 * PI;
    }
    if !(slo < 0.0 && shi > 0.0) {
        return guess;
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if surface.slope(m) < 0.0 {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// The three pieces of the effective Euclidean action at a given azimuth,
/// in units of `1/A`, `1` and `A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectivePieces {
    pub mass: f64,
    pub gauge: f64,
    pub potential: f64,
}

/// Evaluator for `M_N`, `A_N` and `V_N` along the azimuth.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveAction {
    s: f64,
    n: f64,
    ratio: f64,
    modulation: f64,
    field: f64,
}

impl EffectiveAction {
    pub fn new(p: &SpinSystemParams) -> Self {
        EffectiveAction {
            s: p.s(),
            n: p.symmetry as f64,
            ratio: p.hard_axis_ratio(),
            modulation: p.mass_modulation(),
            field: p.field,
        }
    }

    /// `1 + (lambda N S^(N-2) / 2) cos N phi`.
    fn stiffness(&self, phi: f64) -> f64 {
        1.0 + self.modulation * (self.n * phi).cos()
    }

    pub fn mass(&self, phi: f64) -> f64 {
        1.0 / (2.0 * self.stiffness(phi))
    }

    pub fn gauge(&self, phi: f64) -> f64 {
        self.s * (1.0 - self.field / (2.0 * self.stiffness(phi)))
    }

    pub fn potential(&self, phi: f64) -> f64 {
        let s2 = self.s * self.s;
        -s2 * (self.ratio * (self.n * phi).cos() + self.field * self.field / (4.0 * self.stiffness(phi)))
    }

    pub fn pieces(&self, phi: f64) -> Result<EffectivePieces> {
        if self.stiffness(phi) <= 0.0 {
            return Err(Error::MassSingularity(phi));
        }
        Ok(EffectivePieces { mass: self.mass(phi), gauge: self.gauge(phi), potential: self.potential(phi) })
    }

    /// Closed-form `V''(0)`.
    pub fn potential_curvature(&self) -> f64 {
        let a = self.modulation;
        self.s * self.s * self.n * self.n
            * (self.ratio - 0.25 * self.field * self.field * a / ((1.0 + a) * (1.0 + a)))
    }
}

pub fn effective_pieces(p: &SpinSystemParams, phi: f64) -> Result<EffectivePieces> {
    EffectiveAction::new(p).pieces(phi)
}

/// `omega = sqrt(V''(0) / M(0))`, in units of `A`.
pub fn small_oscillation_frequency(p: &SpinSystemParams) -> Result<f64> {
    let act = EffectiveAction::new(p);
    let curvature = act.potential_curvature();
    if !(curvature > 0.0) {
        return Err(Error::BarrierVanished(format!("V''(0) = {curvature} is not positive")));
    }
    let m0 = act.pieces(0.0)?.mass;
    if !(m0 > 0.0) {
        return Err(Error::MassSingularity(0.0));
    }
    Ok((curvature / m0).sqrt())
}

/// Checks that the mass stays positive, that `phi = 0` is the lowest point
/// of the period and that there is a barrier to tunnel through.
fn check_well(act: &EffectiveAction, n: u32) -> Result<()> {
    if act.modulation >= 1.0 {
        return Err(Error::MassSingularity(PI / n as f64));
    }
    let period = TAU / n as f64;
    let v0 = act.potential(0.0);
    let floor = 1e-12 * v0.abs().max(1.0);
    let mut vmax = f64::NEG_INFINITY;
    let mut lowest = (0.0, v0);
    for i in 1..MINIMUM_SCAN_POINTS {
        let phi = period * i as f64 / MINIMUM_SCAN_POINTS as f64;
        let v = act.potential(phi);
        vmax = vmax.max(v);
        if v < lowest.1 {
            lowest = (phi, v);
        }
    }
    if vmax - v0 <= floor {
        return Err(Error::BarrierVanished(format!("barrier height {} <= 0", vmax - v0)));
    }
    if lowest.1 < v0 - floor {
        return Err(Error::MinimumShifted(lowest.0));
    }
    Ok(())
}

/// Integrand of the action after `phi = (pi/N)(1 - cos u)`, which removes
/// the square-root behaviour at both turning points.
fn action_integrand(act: EffectiveAction, n: u32) -> impl Fn(f64) -> f64 {
    let half = PI / n as f64;
    let v0 = act.potential(0.0);
    move |u: f64| {
        let (su, cu) = u.sin_cos();
        let phi = half * (1.0 - cu);
        let dv = (act.potential(phi) - v0).max(0.0);
        (2.0 * act.mass(phi) * dv).sqrt() * half * su
    }
}

/// Euclidean action `S_cl = int_0^{2pi/N} sqrt(2 M (V - V(0))) dphi` of one instanton.
pub fn instanton_action(p: &SpinSystemParams) -> Result<f64> {
    let act = EffectiveAction::new(p);
    check_well(&act, p.symmetry)?;
    integrate(action_integrand(act, p.symmetry), 0.0, PI, ACTION_TOLERANCE)
}

/// Same integral on a fixed composite rule with `panels` Kronrod panels.
pub fn instanton_action_fixed(p: &SpinSystemParams, panels: usize) -> Result<f64> {
    let act = EffectiveAction::new(p);
    check_well(&act, p.symmetry)?;
    Ok(integrate_fixed(action_integrand(act, p.symmetry), 0.0, PI, panels))
}

fn phase_radicand(p: &SpinSystemParams) -> f64 {
    let x = p.lambda * p.symmetry as f64 * p.s().powi(p.symmetry as i32 - 2);
    4.0 - x * x
}

/// Aharonov-Bohm phase `Phi = 2 pi S [1 - h / sqrt(4 - lambda^2 N^2 S^(2(N-2)))]`.
pub fn ab_phase(p: &SpinSystemParams) -> Result<f64> {
    let rad = phase_radicand(p);
    if !(rad > 0.0) {
        return Err(Error::HardAxisViolated(format!("4 - (lambda N S^(N-2))^2 = {rad} <= 0")));
    }
    Ok(TAU * p.s() * (1.0 - p.field / rad.sqrt()))
}

/// `Phi` obtained by integrating the gauge term once around the circle.
pub fn ab_phase_by_quadrature(p: &SpinSystemParams, tol: f64) -> Result<f64> {
    let act = EffectiveAction::new(p);
    if act.modulation >= 1.0 {
        return Err(Error::MassSingularity(PI / p.symmetry as f64));
    }
    let n = p.symmetry as usize;
    let period = TAU / n as f64;
    // integrate each period separately so panel edges sit on the extrema
    let one = integrate(|phi| act.gauge(phi), 0.0, period, tol / n as f64)?;
    Ok(one * n as f64)
}

/// The field at which `Phi(h)` equals `target`; `Phi` is affine in `h`.
pub fn field_for_phase(p: &SpinSystemParams, target: f64) -> Result<f64> {
    let rad = phase_radicand(p);
    if !(rad > 0.0) {
        return Err(Error::HardAxisViolated(format!("4 - (lambda N S^(N-2))^2 = {rad} <= 0")));
    }
    Ok((1.0 - target / (TAU * p.s())) * rad.sqrt())
}

/// Level labels `k` with `-N/2 < k <= N/2`.
pub fn level_indices(n: u32) -> impl Iterator<Item = i64> + Clone {
    let half = n as i64 / 2;
    let lo = if n % 2 == 0 { -half + 1 } else { -half };
    lo..=half
}

/// Tunnel-split lowest levels of an N-fold well threaded by flux `Phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalModel {
    pub omega: f64,
    pub action: f64,
    pub prefactor: f64,
    pub phi: f64,
    pub symmetry: u32,
}

impl SemiclassicalModel {
    pub fn new(omega: f64, action: f64, prefactor: f64, phi: f64, symmetry: u32) -> Result<Self> {
        for (name, v) in [("omega", omega), ("action", action), ("prefactor", prefactor)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive and finite (got {v})")));
            }
        }
        if !phi.is_finite() {
            return Err(Error::InvalidArgument(format!("phi must be finite (got {phi})")));
        }
        if symmetry < 1 {
            return Err(Error::SymmetryTooLow(symmetry));
        }
        Ok(SemiclassicalModel { omega, action, prefactor, phi, symmetry })
    }

    /// Derives `omega`, `S_cl` and `Phi` from the spin parameters.
    pub fn from_params(p: &SpinSystemParams, prefactor: f64) -> Result<Self> {
        let p = validate_params(*p, Purpose::Semiclassical)?.params;
        let omega = small_oscillation_frequency(&p)?;
        let action = instanton_action(&p)?;
        let phi = ab_phase(&p)?;
        SemiclassicalModel::new(omega, action, prefactor, phi, p.symmetry)
    }

    pub fn with_phase(self, phi: f64) -> Self {
        SemiclassicalModel { phi, ..self }
    }

    /// `D e^{-S_cl}`, the single-instanton amplitude.
    pub fn tunneling_scale(&self) -> f64 {
        self.prefactor * (-self.action).exp()
    }

    /// Phase carried by one instanton, `Phi / N`.
    pub fn phase_per_instanton(&self) -> f64 {
        self.phi / self.symmetry as f64
    }

    pub fn level(&self, k: i64) -> f64 {
        let n = self.symmetry as f64;
        0.5 * self.omega - 2.0 * self.tunneling_scale() * ((self.phi - TAU * k as f64) / n).cos()
    }

    /// `(k, E_Nk)` for every allowed `k`, in increasing `k`.
    pub fn level_energies(&self) -> Vec<(i64, f64)> {
        level_indices(self.symmetry).map(|k| (k, self.level(k))).collect()
    }

    /// Levels sorted by energy.
    pub fn sorted_levels(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.level_energies().into_iter().map(|(_, e)| e).collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// `E_Nk - E_Nk' = 4 D e^{-S_cl} sin((Phi - (k+k') pi)/N) sin((k'-k) pi/N)`.
    pub fn level_difference(&self, k: i64, kp: i64) -> Result<f64> {
        let n = self.symmetry as f64;
        for idx in [k, kp] {
            if !level_indices(self.symmetry).any(|j| j == idx) {
                return Err(Error::IndexOutOfRange(idx));
            }
        }
        if k == kp {
            return Err(Error::InvalidArgument("level difference needs k != k'".into()));
        }
        Ok(4.0
            * self.tunneling_scale()
            * ((self.phi - (k + kp) as f64 * PI) / n).sin()
            * (PI * (kp - k) as f64 / n).sin())
    }
}

/// Relative threshold on `|E_k - E_k'| / (4 D e^{-S_cl})` below which two
/// semiclassical levels count as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// Number of unordered level pairs that coincide at flux `phi`.
pub fn predicted_degeneracies(n: u32, phi: f64) -> usize {
    let nf = n as f64;
    let ks: Vec<i64> = level_indices(n).collect();
    let mut count = 0;
    for (i, &k) in ks.iter().enumerate() {
        for &kp in &ks[i + 1..] {
            let d = ((phi - (k + kp) as f64 * PI) / nf).sin() * (PI * (k - kp) as f64 / nf).sin();
            if d.abs() <= DEGENERACY_THRESHOLD {
                count += 1;
            }
        }
    }
    count
}

/// Zero-field degeneracy count from the spin-parity rule (`Phi = 2 pi S`).
pub fn parity_degeneracy_table(n: u32, two_s: u32) -> usize {
    predicted_degeneracies(n, PI * two_s as f64)
}

/// A field at which the N = 2 ground doublet is predicted to cross.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuenchField {
    pub n: u32,
    pub field: f64,
    /// `h = 0` solutions are kept but flagged: that degeneracy is the
    /// zero-field parity effect rather than a field-induced quench.
    pub boundary: bool,
}

/// `h_n = (2 sqrt(1 - lambda^2) / S)(S - n - 1/2)` for every `h_n >= 0`, descending.
pub fn quench_fields(p: &SpinSystemParams) -> Result<Vec<QuenchField>> {
    if p.symmetry != 2 {
        return Err(Error::WrongSymmetry { expected: 2, got: p.symmetry });
    }
    if !(p.lambda.abs() < 1.0) {
        return Err(Error::HardAxisViolated(format!("lambda = {} >= 1", p.lambda)));
    }
    let two_s = p.spin.twice() as i64;
    let scale = 2.0 * (1.0 - p.lambda * p.lambda).sqrt() / p.s();
    Ok((0..)
        .map(|n: i64| (n, two_s - 2 * n - 1))
        .take_while(|&(_, twice_offset)| twice_offset >= 0)
        .map(|(n, twice_offset)| {
            let field = scale * (twice_offset as f64 / 2.0);
            QuenchField { n: n as u32, field, boundary: twice_offset == 0 }
        })
        .collect())
}

/// A predicted level crossing for general `N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DegeneracyField {
    pub field: f64,
    /// The flux `n pi` reached at this field.
    pub phase_multiple: i64,
    pub pairs: usize,
    pub boundary: bool,
}

/// Fields `h in [0, h_max]` where `Phi(h)` is a multiple of `pi` carrying at
/// least one double degeneracy, descending in `h`.
pub fn degeneracy_fields(p: &SpinSystemParams, h_max: f64) -> Result<Vec<DegeneracyField>> {
    let phi0 = ab_phase(&p.with_field(0.0))?;
    let phi_end = ab_phase(&p.with_field(h_max))?;
    let lo = (phi_end / PI).ceil() as i64;
    let hi = (phi0 / PI + 1e-9).floor() as i64;
    let mut out = Vec::new();
    for m in lo..=hi {
        let target = m as f64 * PI;
        let pairs = predicted_degeneracies(p.symmetry, target);
        if pairs == 0 {
            continue;
        }
        let field = if m == p.spin.twice() as i64 { 0.0 } else { field_for_phase(p, target)? };
        if (0.0..=h_max).contains(&field) {
            out.push(DegeneracyField { field, phase_multiple: m, pairs, boundary: field == 0.0 });
        }
    }
    out.sort_by(|a, b| b.field.total_cmp(&a.field));
    Ok(out)
}
