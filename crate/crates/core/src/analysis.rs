//! Field sweeps of the exact spectrum and their comparison with the
//! semiclassical predictions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{golden_section, median};
use crate::params::{validate_params, Purpose, SpinSystemParams};
use crate::semiclassics::{
    ab_phase, degeneracy_fields, parity_degeneracy_table, quench_fields, SemiclassicalModel,
};
use crate::spin_model::{band_structure, spectrum};

pub mod serialize;

pub const DEFAULT_STEPS: usize = 2001;
/// A refined minimum counts as a quench when its gap is below this
/// fraction of the median gap of the sweep.
pub const DEFAULT_DEPTH_RATIO: f64 = 1e-2;
pub const DEFAULT_FIELD_TOLERANCE: f64 = 1e-8;
/// Gaps below `NUMERICAL_FLOOR * |E_0|` are indistinguishable from zero.
pub const NUMERICAL_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    /// `None` when the phase formula does not apply (hard-axis violation).
    pub phi: Option<f64>,
    /// Lowest `N` exact levels.
    pub energies: Vec<f64>,
    pub gap01: f64,
    /// Sorted semiclassical levels, `None` where the model cannot be built.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub semiclassical: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    pub symmetry: u32,
    pub spin: String,
    pub two_s: u32,
    pub lambda: f64,
    pub field_min: f64,
    pub field_max: f64,
    pub steps: usize,
    /// Prefactor `D` of the semiclassical columns, when present.
    pub prefactor: Option<f64>,
    /// Degeneracy tolerance override, `None` for the default rule.
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefinementStatus {
    Converged,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocatedMinimum {
    pub h: f64,
    pub gap: f64,
    pub grid_h: f64,
    pub grid_gap: f64,
    pub status: RefinementStatus,
    pub below_floor: bool,
    /// Gap divided by the median gap of the sweep.
    pub suppression: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predicted: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub h: f64,
    /// `Phi(h) / pi`.
    pub phase_multiple: i64,
    pub pairs: usize,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub params: SweepParams,
    pub rows: Vec<SweepRow>,
    pub minima: Vec<LocatedMinimum>,
    pub predictions: Vec<Prediction>,
}

impl SweepResult {
    pub fn symmetry(&self) -> usize {
        self.params.symmetry as usize
    }

    pub fn has_semiclassical(&self) -> bool {
        self.params.prefactor.is_some()
    }

    pub fn fields(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.h).collect()
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.gap01).collect()
    }

    pub fn median_gap(&self) -> Option<f64> {
        median(self.gaps())
    }

    pub fn strip_meta(&mut self) {
        self.params.version = None;
    }
}

/// Lowest `N` exact levels at one field value.
fn exact_band(p: &SpinSystemParams) -> Result<Vec<f64>> {
    let s = spectrum(p)?;
    Ok(s.eigenvalues.into_iter().take(p.symmetry as usize).collect())
}

fn exact_gap(p: &SpinSystemParams, h: f64) -> Result<GapSample> {
    let band = exact_band(&p.with_field(h))?;
    Ok(GapSample { gap: band[1] - band[0], e0: band[0] })
}

fn sweep_row(p: &SpinSystemParams, h: f64, prefactor: Option<f64>) -> Result<SweepRow> {
    let q = p.with_field(h);
    let energies = exact_band(&q)?;
    let phi = ab_phase(&q).ok();
    let semiclassical = prefactor.map(|d| SemiclassicalModel::from_params(&q, d).map(|m| m.sorted_levels()).ok());
    Ok(SweepRow { h, phi, gap01: energies[1] - energies[0], energies, semiclassical: semiclassical.flatten() })
}

/// Exact band energies on a uniform grid of `steps` fields including both ends.
pub fn sweep_field(
    p: &SpinSystemParams,
    h_min: f64,
    h_max: f64,
    steps: usize,
    prefactor: Option<f64>,
) -> Result<SweepResult> {
    if !(h_min >= 0.0 && h_min < h_max && h_max.is_finite()) {
        return Err(Error::InvalidArgument(format!("need 0 <= h_min < h_max (got {h_min}, {h_max})")));
    }
    if steps < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 steps (got {steps})")));
    }
    if let Some(d) = prefactor {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidArgument(format!("prefactor must be positive (got {d})")));
        }
    }
    let p = validate_params(p.with_field(h_min), Purpose::Exact)?.params;
    let width = h_max - h_min;
    let last = (steps - 1) as f64;
    let rows = (0..steps)
        .into_par_iter()
        .map(|i| {
            let h = if i == steps - 1 { h_max } else { h_min + width * (i as f64 / last) };
            sweep_row(&p, h, prefactor)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        params: SweepParams {
            symmetry: p.symmetry,
            spin: p.spin.to_string(),
            two_s: p.spin.twice(),
            lambda: p.lambda,
            field_min: h_min,
            field_max: h_max,
            steps,
            prefactor,
            tolerance: None,
            version: Some(env!("CARGO_PKG_VERSION").to_string()),
        },
        rows,
        minima: Vec::new(),
        predictions: Vec::new(),
    })
}

/// Ground gap and ground energy at one field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapSample {
    pub gap: f64,
    pub e0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaOptions {
    pub depth_ratio: f64,
    pub field_tolerance: f64,
}

impl Default for MinimaOptions {
    fn default() -> Self {
        MinimaOptions { depth_ratio: DEFAULT_DEPTH_RATIO, field_tolerance: DEFAULT_FIELD_TOLERANCE }
    }
}

/// Finds the deep notches of a gap curve sampled at `fields`.
///
/// Every interior local minimum of the grid is refined by golden-section
/// search on fresh evaluations inside its two neighbouring grid cells; it
/// is kept when the refined gap is below `depth_ratio` times the median gap.
pub fn locate_minima<F>(fields: &[f64], gaps: &[f64], evaluate: F, opts: MinimaOptions) -> Result<Vec<LocatedMinimum>>
where
    F: Fn(f64) -> Result<GapSample> + Sync,
{
    if fields.len() != gaps.len() {
        return Err(Error::InvalidArgument("field and gap arrays differ in length".into()));
    }
    if fields.len() < 5 {
        return Err(Error::InvalidArgument(format!("need at least 5 sweep rows (got {})", fields.len())));
    }
    let med = median(gaps.iter().copied()).unwrap_or(0.0);
    let candidates: Vec<usize> = (1..gaps.len() - 1)
        .filter(|&i| gaps[i] < gaps[i - 1] && gaps[i] <= gaps[i + 1])
        .collect();
    let refined = candidates
        .par_iter()
        .map(|&i| {
            let (lo, hi) = (fields[i - 1], fields[i + 1]);
            let mut failure = None;
            let found = golden_section(
                |h| match evaluate(h) {
                    Ok(s) => s.gap,
                    Err(e) => {
                        failure.get_or_insert(e);
                        f64::NAN
                    }
                },
                lo,
                hi,
                opts.field_tolerance,
            );
            if let Some(e) = failure {
                return Err(e);
            }
            let (h, status) = match found {
                Ok((h, _)) => {
                    let at_edge = h <= lo || h >= hi;
                    (h, if at_edge { RefinementStatus::Stalled } else { RefinementStatus::Converged })
                }
                Err(_) => (fields[i], RefinementStatus::Stalled),
            };
            let mut sample = evaluate(h)?;
            let mut h = h;
            // a notch that falls on the grid is already resolved better than
            // the search tolerance can; keep the grid point then
            if sample.gap > gaps[i] {
                h = fields[i];
                sample = evaluate(h)?;
            }
            Ok(LocatedMinimum {
                h,
                gap: sample.gap,
                grid_h: fields[i],
                grid_gap: gaps[i],
                status,
                below_floor: sample.gap.abs() < NUMERICAL_FLOOR * sample.e0.abs(),
                suppression: if med > 0.0 { sample.gap / med } else { f64::NAN },
                predicted: None,
                deviation: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(refined.into_iter().filter(|m| m.gap < opts.depth_ratio * med).collect())
}

/// [`locate_minima`] on a sweep, refining with fresh diagonalizations.
pub fn locate_sweep_minima(p: &SpinSystemParams, sweep: &SweepResult, opts: MinimaOptions) -> Result<Vec<LocatedMinimum>> {
    locate_minima(&sweep.fields(), &sweep.gaps(), |h| exact_gap(p, h), opts)
}

/// Pairs located minima with predicted fields by mutual nearest neighbour.
/// Returns `(minimum index, prediction index)` pairs.
pub fn match_nearest(located: &[f64], predicted: &[f64]) -> Vec<(usize, usize)> {
    let nearest = |x: f64, ys: &[f64]| {
        ys.iter()
            .enumerate()
            .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
            .map(|(j, _)| j)
    };
    located
        .iter()
        .enumerate()
        .filter_map(|(i, &x)| {
            let j = nearest(x, predicted)?;
            (nearest(predicted[j], located) == Some(i)).then_some((i, j))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchOptions {
    /// Upper end of the sweep; defaults to `2 sqrt(1 - lambda^2)`, the field
    /// where the two easy-plane minima merge.
    pub field_max: Option<f64>,
    pub steps: usize,
    pub minima: MinimaOptions,
}

impl Default for QuenchOptions {
    fn default() -> Self {
        QuenchOptions { field_max: None, steps: DEFAULT_STEPS, minima: MinimaOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuenchReport {
    pub sweep: SweepResult,
    pub median_gap: f64,
    pub unmatched_minima: Vec<usize>,
    pub unmatched_predictions: Vec<usize>,
}

impl QuenchReport {
    pub fn minima(&self) -> &[LocatedMinimum] {
        &self.sweep.minima
    }

    pub fn max_deviation(&self) -> Option<f64> {
        self.sweep.minima.iter().filter_map(|m| m.deviation).reduce(f64::max)
    }
}

/// Locates the exact ground-doublet crossings of an `N = 2` system and
/// compares them with the predicted quench fields.
pub fn compare_quench(p: &SpinSystemParams, opts: QuenchOptions) -> Result<QuenchReport> {
    if p.symmetry != 2 {
        return Err(Error::WrongSymmetry { expected: 2, got: p.symmetry });
    }
    let predicted = quench_fields(p)?;
    let field_max = opts.field_max.unwrap_or_else(|| 2.0 * (1.0 - p.lambda * p.lambda).sqrt());
    let mut sweep = sweep_field(p, 0.0, field_max, opts.steps, None)?;
    let median_gap = sweep.median_gap().unwrap_or(f64::NAN);
    let mut minima = locate_sweep_minima(p, &sweep, opts.minima)?;

    let positive: Vec<usize> = (0..predicted.len()).filter(|&j| !predicted[j].boundary).collect();
    let targets: Vec<f64> = positive.iter().map(|&j| predicted[j].field).collect();
    let located: Vec<f64> = minima.iter().map(|m| m.h).collect();
    let pairs = match_nearest(&located, &targets);
    for &(i, j) in &pairs {
        let h = targets[j];
        minima[i].predicted = Some(h);
        minima[i].deviation = Some((minima[i].h - h).abs());
    }
    let unmatched_minima = (0..minima.len()).filter(|i| !pairs.iter().any(|p| p.0 == *i)).collect();
    let unmatched_predictions = positive
        .iter()
        .enumerate()
        .filter(|(j, _)| !pairs.iter().any(|p| p.1 == *j))
        .map(|(_, &idx)| idx)
        .collect();

    sweep.minima = minima;
    sweep.predictions = predicted
        .iter()
        .map(|q| Prediction { h: q.field, phase_multiple: 2 * q.n as i64 + 1, pairs: 1, boundary: q.boundary })
        .collect();
    Ok(QuenchReport { sweep, median_gap, unmatched_minima, unmatched_predictions })
}

/// Adds located minima and predicted degeneracy fields to a sweep.
pub fn annotate_sweep(p: &SpinSystemParams, sweep: &mut SweepResult, opts: MinimaOptions) -> Result<()> {
    if sweep.rows.len() >= 5 {
        sweep.minima = locate_sweep_minima(p, sweep, opts)?;
    }
    sweep.predictions = match degeneracy_fields(p, sweep.params.field_max) {
        Ok(fields) => fields
            .into_iter()
            .filter(|f| f.field >= sweep.params.field_min)
            .map(|f| Prediction { h: f.field, phase_multiple: f.phase_multiple, pairs: f.pairs, boundary: f.boundary })
            .collect(),
        Err(_) => Vec::new(),
    };
    let targets: Vec<f64> = sweep.predictions.iter().map(|q| q.h).collect();
    let located: Vec<f64> = sweep.minima.iter().map(|m| m.h).collect();
    for (i, j) in match_nearest(&located, &targets) {
        sweep.minima[i].predicted = Some(targets[j]);
        sweep.minima[i].deviation = Some((located[i] - targets[j]).abs());
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParityCensus {
    pub predicted: usize,
    pub observed: usize,
    pub band: Vec<f64>,
    pub tolerance: f64,
}

/// Zero-field degeneracy count: spin-parity rule versus exact spectrum.
///
/// Only pairs strictly inside the lowest-`N` window are counted; for
/// half-integer spin and odd `N` the top level of the window has its
/// Kramers partner just outside it.
pub fn parity_census(n: u32, two_s: u32, lambda: f64, tol: Option<f64>) -> Result<ParityCensus> {
    let spin = crate::params::Spin::from_twice(two_s as i64)?;
    let p = SpinSystemParams::new(n, spin, lambda, 0.0);
    let s = spectrum(&p)?;
    let band = band_structure(&s, n as usize, tol);
    Ok(ParityCensus {
        predicted: parity_degeneracy_table(n, two_s),
        observed: band.degenerate_pair_count(),
        band: band.band,
        tolerance: band.tolerance,
    })
}

/// Least-squares fit of `ln D` matching the semiclassical ground splitting
/// to the exact one. Rows close to a predicted crossing are excluded.
pub fn fit_prefactor(p: &SpinSystemParams, sweep: &SweepResult) -> Result<f64> {
    let mut logs = Vec::new();
    for row in &sweep.rows {
        let q = p.with_field(row.h);
        let Ok(model) = SemiclassicalModel::from_params(&q, 1.0) else { continue };
        let levels = model.sorted_levels();
        if levels.len() < 2 {
            continue;
        }
        let model_gap = levels[1] - levels[0];
        let scale = 4.0 * model.tunneling_scale();
        let exact = row.gap01;
        let floor = NUMERICAL_FLOOR * row.energies.first().map_or(0.0, |e| e.abs());
        if model_gap < 0.1 * scale || !(exact > floor) || !model_gap.is_finite() {
            continue;
        }
        logs.push(exact.ln() - model_gap.ln());
    }
    if logs.is_empty() {
        return Err(Error::FitIllConditioned("no usable rows away from crossings".into()));
    }
    let log_d = logs.iter().sum::<f64>() / logs.len() as f64;
    let d = log_d.exp();
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::FitIllConditioned(format!("fitted D = {d}")));
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Spin;

    fn params(n: u32, spin: &str, lambda: f64, h: f64) -> SpinSystemParams {
        SpinSystemParams::new(n, spin.parse::<Spin>().unwrap(), lambda, h)
    }

    #[test]
    fn two_step_sweep_hits_endpoints() {
        let s = sweep_field(&params(2, "3", 0.1, 0.0), 0.2, 0.9, 2, None).unwrap();
        assert_eq!(s.rows.len(), 2);
        assert_eq!(s.rows[0].h, 0.2);
        assert_eq!(s.rows[1].h, 0.9);
    }

    #[test]
    fn sweep_grid_is_increasing() {
        let s = sweep_field(&params(3, "9/2", 0.01, 0.0), 0.0, 1.0, 37, Some(1.0)).unwrap();
        assert_eq!(s.rows.len(), 37);
        assert!(s.rows.windows(2).all(|w| w[0].h < w[1].h));
        assert!(s.rows.iter().all(|r| r.energies.len() == 3));
    }

    #[test]
    fn sweep_rejects_bad_ranges() {
        let p = params(2, "3", 0.1, 0.0);
        assert!(sweep_field(&p, 1.0, 0.5, 10, None).is_err());
        assert!(sweep_field(&p, -1.0, 0.5, 10, None).is_err());
        assert!(sweep_field(&p, 0.0, 0.5, 1, None).is_err());
    }

    #[test]
    fn synthetic_notches() {
        let n = 101;
        let fields: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64 + 0.0037).collect();
        let f = |h: f64| (5.0 * std::f64::consts::PI * h).cos().abs();
        let gaps: Vec<f64> = fields.iter().map(|&h| f(h)).collect();
        let found = locate_minima(&fields, &gaps, |h| Ok(GapSample { gap: f(h), e0: 0.0 }), MinimaOptions::default()).unwrap();
        let hs: Vec<f64> = found.iter().map(|m| m.h).collect();
        assert_eq!(hs.len(), 5);
        for (h, want) in hs.iter().zip([0.1, 0.3, 0.5, 0.7, 0.9]) {
            assert!((h - want).abs() < 1e-6, "{h} vs {want}");
        }
        for m in &found {
            assert!((m.h - m.grid_h).abs() < 0.01);
            assert_eq!(m.status, RefinementStatus::Converged);
        }
    }

    #[test]
    fn monotone_gap_has_no_minima() {
        let fields: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let gaps: Vec<f64> = fields.iter().map(|h| 1.0 + h).collect();
        let found = locate_minima(&fields, &gaps, |h| Ok(GapSample { gap: 1.0 + h, e0: 0.0 }), MinimaOptions::default()).unwrap();
        assert!(found.is_empty());
        assert!(locate_minima(&fields[..4], &gaps[..4], |_| unreachable!(), MinimaOptions::default()).is_err());
    }

    #[test]
    fn nearest_matching_is_mutual() {
        let pairs = match_nearest(&[0.1, 0.12, 0.5], &[0.11, 0.9]);
        assert_eq!(pairs.len(), 1);
        assert!(pairs[0].1 == 0);
        let pairs = match_nearest(&[0.1, 0.5], &[0.09, 0.52, 0.9]);
        assert_eq!(pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn quench_on_small_half_integer_spin() {
        let p = params(2, "3/2", 0.3, 0.0);
        let r = compare_quench(&p, QuenchOptions { steps: 801, ..Default::default() }).unwrap();
        let positive: Vec<&LocatedMinimum> = r.minima().iter().filter(|m| m.h > 0.0).collect();
        assert_eq!(positive.len(), 1);
        let want = 2.0 * (1.0f64 - 0.09).sqrt() / 1.5;
        assert!((positive[0].h - want).abs() < 1e-2, "{} vs {want}", positive[0].h);
        assert!(matches!(compare_quench(&params(3, "5", 0.01, 0.0), QuenchOptions::default()), Err(Error::WrongSymmetry { .. })));
    }

    #[test]
    fn census_examples() {
        for (n, two_s, lam, want) in [(2, 9, 0.2, 1), (4, 20, 0.005, 1), (3, 10, 0.001, 1)] {
            let c = parity_census(n, two_s, lam, None).unwrap();
            assert_eq!((c.predicted, c.observed), (want, want), "N={n} 2S={two_s}");
        }
    }

    #[test]
    fn prefactor_round_trip_on_synthetic_data() {
        let p = params(2, "10", 0.1, 0.0);
        let mut s = sweep_field(&p, 0.05, 0.6, 40, None).unwrap();
        for row in &mut s.rows {
            let m = SemiclassicalModel::from_params(&p.with_field(row.h), 0.7).unwrap();
            row.energies = m.sorted_levels();
            row.gap01 = row.energies[1] - row.energies[0];
        }
        let d = fit_prefactor(&p, &s).unwrap();
        assert!((d - 0.7).abs() < 1e-6, "{d}");
    }

    #[test]
    fn prefactor_fit_needs_data() {
        let p = params(2, "10", 0.1, 0.0);
        let mut s = sweep_field(&p, 0.0, 0.5, 2, None).unwrap();
        s.rows.clear();
        assert!(matches!(fit_prefactor(&p, &s), Err(Error::FitIllConditioned(_))));
    }

    #[test]
    fn prefactor_fit_on_exact_data_is_finite() {
        let p = params(2, "10", 0.1, 0.0);
        let s = sweep_field(&p, 0.0, 1.5, 151, None).unwrap();
        let d = fit_prefactor(&p, &s).unwrap();
        assert!(d.is_finite() && d > 0.0);
    }
}
