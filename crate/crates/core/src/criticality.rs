//! Critical exponents, boundaries and phase-diagram assembly.
//!
//! Exponents are log-log slopes against `δ = |g − g_c|`. Gap series below
//! the transition come from the normal-phase solvers; above it every point
//! runs minimizer, optional extended-precision polish and a symplectic
//! diagonalization, so the working precision `T` is a type parameter.

use std::fmt;

use thiserror::Error;

use crate::gaussian::{self, GaussianError, SiteObservables};
use crate::linalg::sym_eigen;
use crate::meanfield::{self, ConfigClass, MeanFieldState, MfError, MinimizeOptions};
use crate::model::{self, ModelError, ModelParams};
use crate::npspectrum::{self, BogoliubovBlock, NpError};
use crate::par;
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CritError {
    #[error("fit quality r² = {} below {MIN_R2}", .0.r_squared)]
    PoorFit(Box<ScalingFit>),
    #[error("need at least {MIN_POINTS} usable points, got {0}")]
    TooFewPoints(usize),
    #[error("window spans {0:.2} decades, need {MIN_DECADES}")]
    NarrowWindow(f64),
    #[error("no gap closing between g = {lo} and g = {hi}")]
    NoCrossing { lo: f64, hi: f64 },
    #[error("multicritical point has {0} critical modes, expected 2")]
    NotMulticritical(usize),
    #[error(transparent)]
    Np(#[from] NpError),
    #[error(transparent)]
    Mf(#[from] MfError),
    #[error(transparent)]
    Gauss(#[from] GaussianError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub const MIN_R2: f64 = 0.999;
pub const MIN_POINTS: usize = 12;
pub const MIN_DECADES: f64 = 2.0;
/// Default relative window `|g − g_c|/g_c` and point count.
pub const DEFAULT_WINDOW: (f64, f64) = (1e-5, 1e-2);
pub const DEFAULT_POINTS: usize = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Below,
    Above,
}

impl Side {
    /// `g = g_c (1 ∓ δ)` for a relative offset `δ`.
    pub fn coupling(self, g_c: f64, rel: f64) -> f64 {
        match self {
            Side::Below => g_c * (1.0 - rel),
            Side::Above => g_c * (1.0 + rel),
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Below => "below",
            Side::Above => "above",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Fitted range of `|g − g_c|`.
    pub window: (f64, f64),
    pub r_squared: f64,
    pub side: Side,
    pub n_points: usize,
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_offsets(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && count >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..count).map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp()).collect()
}

/// Least-squares slope of `ln value` against `ln |g − g_c|`. Non-positive or
/// non-finite values are dropped before the point count is checked.
pub fn fit_exponent(series: &[(f64, f64)], g_c: f64, side: Side) -> Result<ScalingFit, CritError> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(g, v)| v.is_finite() && *v > 0.0 && (g - g_c).abs() > 0.0)
        .map(|(g, v)| ((g - g_c).abs().ln(), v.ln()))
        .collect();
    if pts.len() < MIN_POINTS {
        return Err(CritError::TooFewPoints(pts.len()));
    }
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let decades = (hi - lo) / std::f64::consts::LN_10;
    if decades < MIN_DECADES - 1e-9 {
        return Err(CritError::NarrowWindow(decades));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let fit = ScalingFit {
        exponent: slope,
        prefactor: intercept.exp(),
        window: (lo.exp(), hi.exp()),
        r_squared,
        side,
        n_points: pts.len(),
    };
    if r_squared < MIN_R2 {
        return Err(CritError::PoorFit(Box::new(fit)));
    }
    Ok(fit)
}

/// Exponent of a diverging quantity, `value ∝ |g − g_c|^{−exponent}`.
pub fn fit_divergence(series: &[(f64, f64)], g_c: f64, side: Side) -> Result<ScalingFit, CritError> {
    let inv: Vec<(f64, f64)> = series.iter().map(|&(g, v)| (g, 1.0 / v)).collect();
    let mut fit = fit_exponent(&inv, g_c, side)?;
    fit.prefactor = 1.0 / fit.prefactor;
    Ok(fit)
}

/// Smallest eigenvalue of the normal-phase quadratic form over all pairs;
/// it changes sign exactly at the continuous transition.
pub fn np_stability(p: &ModelParams) -> f64 {
    (0..model::n_pairs(p.n_sites))
        .map(|j| sym_eigen(&BogoliubovBlock::new(p, model::momentum(p.n_sites, j)).matrix_m).values[0])
        .fold(f64::INFINITY, f64::min)
}

/// Gap-closing coupling by bisection on [`np_stability`], to relative 1e-13.
pub fn locate_gc(p: &ModelParams) -> Result<f64, CritError> {
    let guess = model::critical_coupling_theta(p);
    let (mut lo, mut hi) = (0.5 * guess, 1.5 * guess);
    if np_stability(&p.with_g(lo)) <= 0.0 || np_stability(&p.with_g(hi)) >= 0.0 {
        return Err(CritError::NoCrossing { lo, hi });
    }
    while hi - lo > 1e-13 * guess {
        let mid = 0.5 * (lo + hi);
        if np_stability(&p.with_g(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Gap below `g_c` at relative offsets; closed-form roots take over from the
/// dense solve once the gap is small.
pub fn gap_series_below(p: &ModelParams, g_c: f64, offsets: &[f64]) -> Result<Vec<(f64, f64)>, CritError> {
    let out = par::map(offsets, |&d| {
        let g = Side::Below.coupling(g_c, d);
        npspectrum::np_gap(&p.with_g(g)).map(|e| (g, e))
    });
    out.into_iter().map(|r| r.map_err(CritError::from)).collect()
}

/// Lowest branch of momentum pair `j` below `g_c`.
pub fn mode_series_below(p: &ModelParams, g_c: f64, j: usize, offsets: &[f64]) -> Result<Vec<(f64, f64)>, CritError> {
    let out = par::map(offsets, |&d| {
        let g = Side::Below.coupling(g_c, d);
        npspectrum::mode_energy(&p.with_g(g), j).map(|e| (g, e))
    });
    out.into_iter().map(|r| r.map_err(CritError::from)).collect()
}

#[derive(Clone, Debug)]
pub struct FluctuationPoint {
    pub g: f64,
    pub gap: f64,
    pub sites: Vec<SiteObservables>,
    pub diverged: bool,
}

impl FluctuationPoint {
    pub fn max_photon(&self) -> f64 {
        self.sites.iter().map(|s| s.photon_number).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_entanglement(&self) -> f64 {
        self.sites.iter().map(|s| s.entanglement).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Gaussian fluctuations at one coupling, with the mean-field state refined
/// in precision `T` before the diagonalization.
pub fn fluctuation_point<T: Real>(p: &ModelParams, g: f64, opts: &MinimizeOptions) -> Result<FluctuationPoint, CritError> {
    let q = p.with_g(g);
    let st = meanfield::minimize_landscape(&q, opts)?.ground;
    let gt = T::c(g);
    let x: Vec<T> = if st.is_normal() {
        vec![T::zero(); p.n_sites]
    } else {
        meanfield::polish::<T>(&q, gt, &st.x).x
    };
    let form = gaussian::build_quadratic_x(&q, gt, &x);
    let spec = gaussian::symplectic_diagonalize(&form)?;
    let obs = gaussian::observables(&spec)?;
    let gap = spec.gap.f64();
    Ok(FluctuationPoint {
        g,
        gap,
        sites: obs
            .sites
            .iter()
            .map(|s| SiteObservables { photon_number: s.photon_number.f64(), entanglement: s.entanglement.f64() })
            .collect(),
        diverged: gap < gaussian::divergence_gap::<T>(),
    })
}

pub fn fluctuation_series<T: Real>(p: &ModelParams, g_c: f64, side: Side, offsets: &[f64]) -> Result<Vec<FluctuationPoint>, CritError> {
    let opts = MinimizeOptions { restarts: 2, ..Default::default() };
    par::map(offsets, |&d| fluctuation_point::<T>(p, side.coupling(g_c, d), &opts)).into_iter().collect()
}

pub fn gap_series_above<T: Real>(p: &ModelParams, g_c: f64, offsets: &[f64]) -> Result<Vec<(f64, f64)>, CritError> {
    Ok(fluctuation_series::<T>(p, g_c, Side::Above, offsets)?.into_iter().map(|f| (f.g, f.gap)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub g_c: f64,
    /// Index `j` of the critical momentum `−2πj/N`.
    pub critical_j: usize,
    /// The critical mode differs from the previous grid point.
    pub kink: bool,
}

pub fn trace_continuous_boundary(p: &ModelParams, thetas: &[f64]) -> Vec<BoundaryPoint> {
    let modes = par::map(thetas, |&t| model::critical_mode(&p.with_theta(t)));
    let mut prev: Option<usize> = None;
    thetas
        .iter()
        .zip(modes)
        .map(|(&theta, m)| {
            let kink = prev.is_some_and(|j| j != m.j);
            prev = Some(m.j);
            BoundaryPoint { theta, g_c: m.g_c, critical_j: m.j, kink }
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MulticriticalKind {
    /// Crossing of the uniform mode with a finite-momentum mode.
    UniformFinite,
    /// Crossing of two finite-momentum modes.
    FiniteFinite,
}

#[derive(Clone, Debug)]
pub struct MulticriticalReport {
    pub theta_c: f64,
    pub g_c: f64,
    pub kind: MulticriticalKind,
    /// `(j, fit)` for each simultaneously critical pair, ascending in `j`.
    pub modes: Vec<(usize, ScalingFit)>,
    /// Ground-state degeneracy slightly above `g_c`.
    pub degeneracy: usize,
    /// First-order boundary found at `g = 1.05 g_c`, if any, near `theta_c`.
    pub boundary_theta: Option<f64>,
}

impl MulticriticalReport {
    pub fn exponents(&self) -> Vec<f64> {
        self.modes.iter().map(|(_, f)| f.exponent).collect()
    }

    /// Expected exponents: `{1/2, 1}` when the uniform mode takes part, `{1, 1}` otherwise.
    pub fn expected(&self) -> [f64; 2] {
        match self.kind {
            MulticriticalKind::UniformFinite => [0.5, 1.0],
            MulticriticalKind::FiniteFinite => [1.0, 1.0],
        }
    }
}

/// Fits window used at multicritical points, relative to `g_c`.
pub const MULTICRITICAL_WINDOW: (f64, f64) = (1e-5, 1e-2);

pub fn multicritical_report(p: &ModelParams, theta_c: f64) -> Result<MulticriticalReport, CritError> {
    let q = p.with_theta(theta_c);
    let gcs: Vec<(usize, f64)> = (0..model::n_pairs(q.n_sites))
        .map(|j| (j, model::critical_coupling(&q, model::momentum(q.n_sites, j))))
        .collect();
    let g_c = gcs.iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
    let critical: Vec<usize> = gcs.iter().filter(|(_, g)| (g - g_c).abs() < 1e-9 * g_c).map(|x| x.0).collect();
    if critical.len() != 2 {
        return Err(CritError::NotMulticritical(critical.len()));
    }
    let kind = if critical.contains(&0) { MulticriticalKind::UniformFinite } else { MulticriticalKind::FiniteFinite };
    let offsets = log_offsets(MULTICRITICAL_WINDOW.0, MULTICRITICAL_WINDOW.1, DEFAULT_POINTS);
    let mut modes = Vec::new();
    for &j in &critical {
        let s = mode_series_below(&q, g_c, j, &offsets)?;
        modes.push((j, fit_exponent(&s, g_c, Side::Below)?));
    }
    let above = q.with_g(1.3 * g_c);
    let st = meanfield::minimize(&above, 4, 1)?;
    let degeneracy = meanfield::classify(&above, &st)?.degeneracy;
    let boundary_theta = nearest_boundary(p, 1.05 * g_c, theta_c);
    Ok(MulticriticalReport { theta_c, g_c, kind, modes, degeneracy, boundary_theta })
}

fn nearest_boundary(p: &ModelParams, g: f64, theta_c: f64) -> Option<f64> {
    meanfield::first_order_boundary(p, g)
        .into_iter()
        .min_by(|a, b| (a - theta_c).abs().partial_cmp(&(b - theta_c).abs()).unwrap())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseLabel {
    Np,
    Anp,
    Sp,
    Fsp,
}

impl PhaseLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            PhaseLabel::Np => "NP",
            PhaseLabel::Anp => "ANP",
            PhaseLabel::Sp => "SP",
            PhaseLabel::Fsp => "FSP",
        }
    }
}

impl fmt::Display for PhaseLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct PhaseCell {
    pub theta: f64,
    pub g: f64,
    pub label: Option<PhaseLabel>,
    pub critical_j: usize,
    pub g_c: f64,
    pub gap: f64,
    /// Mean-field energy per atom in units of Ω.
    pub energy: f64,
    pub config: Option<ConfigClass>,
    pub observables: Vec<SiteObservables>,
    pub diverged: bool,
    pub error: Option<String>,
}

impl PhaseCell {
    pub fn is_superradiant(&self) -> bool {
        matches!(self.label, Some(PhaseLabel::Sp | PhaseLabel::Fsp))
    }

    /// Class of the ground configuration up to symmetry, for boundary detection.
    pub fn config_key(&self) -> Option<Vec<i8>> {
        self.config.as_ref().map(|c| meanfield::canonical_signs(&c.signs))
    }
}

/// Label, gap, mean-field configuration and fluctuation observables at one point.
/// Failures are recorded in `error`; the label is still set when it follows
/// from the position relative to `g_c` alone.
pub fn classify_cell(p: &ModelParams) -> PhaseCell {
    classify_cell_with(p, &MinimizeOptions { restarts: 2, ..Default::default() })
}

/// [`classify_cell`] with explicit multistart settings.
pub fn classify_cell_with(p: &ModelParams, opts: &MinimizeOptions) -> PhaseCell {
    let mut cell = PhaseCell {
        theta: p.theta,
        g: p.g,
        label: None,
        critical_j: 0,
        g_c: f64::NAN,
        gap: f64::NAN,
        energy: f64::NAN,
        config: None,
        observables: Vec::new(),
        diverged: false,
        error: None,
    };
    if let Err(e) = p.validate() {
        cell.error = Some(MfError::Params(e).to_string());
        return cell;
    }
    let mode = model::critical_mode(p);
    cell.critical_j = mode.j;
    cell.g_c = mode.g_c;
    if p.g < mode.g_c {
        cell.label = Some(if mode.j == 0 { PhaseLabel::Np } else { PhaseLabel::Anp });
        cell.energy = -0.5 * p.n_sites as f64;
        let normal = normal_state(p);
        match (npspectrum::np_gap(p), gaussian::analyze(p, &normal)) {
            (Ok(gap), Ok((_, obs))) => {
                cell.gap = gap;
                cell.diverged = obs.diverged;
                cell.observables = obs.sites;
            }
            (Err(e), _) => cell.error = Some(e.to_string()),
            (_, Err(e)) => cell.error = Some(e.to_string()),
        }
        return cell;
    }
    let result = meanfield::minimize_landscape(p, opts)
        .map_err(CritError::from)
        .and_then(|l| {
            let class = meanfield::classify(p, &l.ground)?;
            Ok((l.ground, class))
        })
        .and_then(|(st, class)| {
            let (spec, obs) = gaussian::analyze(p, &st)?;
            Ok((st, class, spec.gap, obs))
        });
    match result {
        Ok((st, class, gap, obs)) => {
            cell.label = Some(if class.frustrated { PhaseLabel::Fsp } else { PhaseLabel::Sp });
            cell.energy = st.energy;
            cell.gap = gap;
            cell.diverged = obs.diverged;
            cell.observables = obs.sites;
            cell.config = Some(class);
        }
        Err(e) => {
            cell.label = Some(PhaseLabel::Sp);
            cell.error = Some(e.to_string());
        }
    }
    cell
}

fn normal_state(p: &ModelParams) -> MeanFieldState {
    let n = p.n_sites;
    MeanFieldState {
        x: vec![0.0; n],
        y: vec![0.0; n],
        energy: -0.5 * n as f64,
        excess: 0.0,
        spin_angles: meanfield::spin_angles(p.g, &vec![0.0; n]),
        grad_norm: 0.0,
        converged: true,
    }
}

/// Cells in θ-major order: all `g` for the first θ, then the next θ.
pub fn phase_diagram(p: &ModelParams, thetas: &[f64], gs: &[f64]) -> Vec<PhaseCell> {
    let points: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| gs.iter().map(move |&g| (t, g))).collect();
    par::map(&points, |&(t, g)| classify_cell(&p.with_theta(t).with_g(g)))
}

/// A first-order line traced through a phase-diagram grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FirstOrderLine {
    /// `(g, θ)` boundary points, ascending in `g`.
    pub points: Vec<(f64, f64)>,
}

impl FirstOrderLine {
    /// Point closest to the continuous boundary.
    pub fn end(&self) -> (f64, f64) {
        self.points[0]
    }

    pub fn theta_span(&self) -> f64 {
        let lo = self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let hi = self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    }
}

/// Links configuration changes between θ-neighbours inside the superradiant
/// region into lines. A boundary point continues a line from the previous
/// `g` row when it lies within `link_cells` θ steps of it.
pub fn first_order_lines(cells: &[PhaseCell], n_theta: usize, n_g: usize, link_cells: usize) -> Vec<FirstOrderLine> {
    assert_eq!(cells.len(), n_theta * n_g);
    let at = |ti: usize, gi: usize| &cells[ti * n_g + gi];
    let dtheta = if n_theta > 1 { at(1, 0).theta - at(0, 0).theta } else { 1.0 };
    let mut open: Vec<(FirstOrderLine, usize)> = Vec::new();
    let mut closed = Vec::new();
    for gi in 0..n_g {
        let mut row = Vec::new();
        for ti in 0..n_theta.saturating_sub(1) {
            let (a, b) = (at(ti, gi), at(ti + 1, gi));
            if !(a.is_superradiant() && b.is_superradiant()) {
                continue;
            }
            if let (Some(ka), Some(kb)) = (a.config_key(), b.config_key()) {
                if ka != kb {
                    row.push(0.5 * (a.theta + b.theta));
                }
            }
        }
        let g = at(0, gi).g;
        let mut next: Vec<(FirstOrderLine, usize)> = Vec::new();
        for theta in row {
            let hit = open
                .iter()
                .enumerate()
                .filter(|(_, (l, _))| (l.points.last().unwrap().1 - theta).abs() <= link_cells as f64 * dtheta + 1e-12)
                .min_by(|x, y| {
                    let dx = (x.1 .0.points.last().unwrap().1 - theta).abs();
                    let dy = (y.1 .0.points.last().unwrap().1 - theta).abs();
                    dx.partial_cmp(&dy).unwrap()
                })
                .map(|(i, _)| i);
            match hit {
                Some(i) => {
                    let (mut l, _) = open.remove(i);
                    l.points.push((g, theta));
                    next.push((l, gi));
                }
                None => next.push((FirstOrderLine { points: vec![(g, theta)] }, gi)),
            }
        }
        closed.extend(open.drain(..).map(|(l, _)| l));
        open = next;
    }
    closed.extend(open.into_iter().map(|(l, _)| l));
    closed
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn exact_power_law() {
        let gc = 1.2;
        let s: Vec<(f64, f64)> = log_offsets(1e-5, 1e-2, 24).iter().map(|d| (gc + d, d.powf(1.5))).collect();
        let f = fit_exponent(&s, gc, Side::Above).unwrap();
        assert!((f.exponent - 1.5).abs() < 1e-6);
        assert_relative_eq!(f.prefactor, 1.0, epsilon = 1e-6);
        assert!(f.r_squared > 0.999_999);
        let d = fit_divergence(&s.iter().map(|&(g, v)| (g, 1.0 / v)).collect::<Vec<_>>(), gc, Side::Above).unwrap();
        assert!((d.exponent - 1.5).abs() < 1e-6);
    }

    #[test]
    fn fit_preconditions() {
        let s: Vec<(f64, f64)> = log_offsets(1e-3, 1e-2, 20).iter().map(|d| (1.0 + d, *d)).collect();
        assert!(matches!(fit_exponent(&s, 1.0, Side::Above), Err(CritError::NarrowWindow(_))));
        let s: Vec<(f64, f64)> = log_offsets(1e-5, 1e-2, 8).iter().map(|d| (1.0 + d, *d)).collect();
        assert!(matches!(fit_exponent(&s, 1.0, Side::Above), Err(CritError::TooFewPoints(8))));
        let s: Vec<(f64, f64)> = log_offsets(1e-5, 1e-2, 20)
            .iter()
            .enumerate()
            .map(|(i, d)| (1.0 + d, d * if i % 2 == 0 { 1.0 } else { 3.0 }))
            .collect();
        assert!(matches!(fit_exponent(&s, 1.0, Side::Above), Err(CritError::PoorFit(_))));
    }

    #[test]
    fn bisection_matches_closed_form() {
        for th in [0.3, PI / 4.0, 2.0, 3.0 * PI / 4.0] {
            let p = ModelParams::new(5).with_theta(th);
            let a = model::critical_coupling_theta(&p);
            let b = locate_gc(&p).unwrap();
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn boundary_kinks() {
        let thetas: Vec<f64> = (1..200).map(|i| PI * i as f64 / 200.0).collect();
        let b3 = trace_continuous_boundary(&ModelParams::new(3), &thetas);
        assert_eq!(b3.iter().filter(|b| b.kink).count(), 1);
        let b5 = trace_continuous_boundary(&ModelParams::new(5), &thetas);
        assert_eq!(b5.iter().filter(|b| b.kink).count(), 2);
        let flat = trace_continuous_boundary(&ModelParams::new(5).with_j(1e-12), &thetas);
        assert!(flat.iter().all(|b| (b.g_c - 1.0).abs() < 1e-10));
    }

    #[test]
    fn cell_labels() {
        let p = ModelParams::new(3);
        let q = p.with_theta(3.0 * PI / 4.0);
        let gc = model::critical_coupling_theta(&q);
        let c = classify_cell(&q.with_g(0.5 * gc));
        assert_eq!(c.label, Some(PhaseLabel::Np));
        assert_eq!(c.critical_j, 0);
        let q = p.with_theta(PI / 4.0);
        let gc = model::critical_coupling_theta(&q);
        let c = classify_cell(&q.with_g(0.5 * gc));
        assert_eq!(c.label, Some(PhaseLabel::Anp));
        assert_relative_eq!(model::momentum(3, c.critical_j), -2.0 * PI / 3.0, epsilon = 1e-12);
        let c = classify_cell(&q.with_g(1.3 * gc));
        assert_eq!(c.label, Some(PhaseLabel::Fsp));
        assert_eq!(c.config.unwrap().degeneracy, 6);
    }

    #[test]
    fn failed_cell_carries_error() {
        let c = classify_cell(&ModelParams::new(3).with_j(0.7));
        assert!(c.error.is_some() && c.label.is_none());
    }
}
