//! Gaussian fluctuations around a mean-field state.
//!
//! The displaced Hamiltonian is quadratic in `r = (q₁, p₁, Q₁, P₁, …)`,
//! `H = ½ rᵀ 𝓗 r`. A Williamson decomposition `S 𝓗 Sᵀ = diag(ε₁, ε₁, …)`
//! gives the excitation energies and the ground-state covariance
//! `C = ½ SᵀS`, from which photon numbers and site-block entropies follow.
//!
//! The decomposition goes through `K = 𝓗^{1/2} Ω 𝓗^{1/2}`, which is real
//! antisymmetric, so everything reduces to symmetric eigenproblems that stay
//! well conditioned while the gap closes.

use thiserror::Error;

use crate::linalg::{dot, sym_eigen, Lu, Mat};
use crate::meanfield::{self, MeanFieldState};
use crate::model::{ModelError, ModelParams};
use crate::real::{Real, DD};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaussianError {
    #[error("mean-field state did not converge")]
    UnconvergedState,
    #[error("quadratic form is not positive definite (min eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("symplectic decomposition has no transformation (semidefinite form)")]
    NotConverged,
    #[error("state has {got} quadratures for {expected} sites")]
    SizeMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0:?}")]
    Params(Vec<ModelError>),
}

/// Relative eigenvalue threshold below which an f64 form counts as singular;
/// scaled down by the precision gain for wider types.
pub const PD_TOL: f64 = 1e-12;
/// Gap below which f64 observables are flagged as diverging.
pub const DIVERGENCE_GAP: f64 = 1e-6;

/// Below this gap [`analyze`] redoes the decomposition in double-double;
/// in f64 `S` keeps only about `ε/gap²` accuracy.
pub const EXTENDED_GAP: f64 = 1e-3;

/// Divergence threshold at working precision `T`: [`DIVERGENCE_GAP`] scaled
/// by the square root of the precision gain.
pub fn divergence_gap<T: Real>() -> f64 {
    DIVERGENCE_GAP * (T::roundoff().f64() / f64::EPSILON).sqrt()
}

#[derive(Clone, Debug)]
pub struct QuadraticForm<T = f64> {
    pub h: Mat<T>,
    pub offset: T,
}

#[derive(Clone, Debug)]
pub struct SymplecticSpectrum<T = f64> {
    /// One value per normal mode, ascending.
    pub energies: Vec<T>,
    /// Rows are ordered as `(q'_1, p'_1, q'_2, …)` with the matching energies.
    pub s: Mat<T>,
    pub converged: bool,
    pub gap: T,
    /// `𝓗^{-1/2} |K| 𝓗^{-1/2}`, i.e. `SᵀS`; kept to avoid forming `S` twice.
    sts: Mat<T>,
}

#[derive(Clone, Debug)]
pub struct CovarianceMatrix<T = f64> {
    pub c: Mat<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SiteObservables<T = f64> {
    pub photon_number: T,
    pub entanglement: T,
}

#[derive(Clone, Debug)]
pub struct Observables<T = f64> {
    pub sites: Vec<SiteObservables<T>>,
    pub gap: T,
    /// Set when the gap is below [`divergence_gap`] for the precision used;
    /// values are still reported.
    pub diverged: bool,
}

/// Canonical form `Ω = ⊕ [[0, 1], [−1, 0]]` on `2n` quadratures.
pub fn symplectic_form<T: Real>(dim: usize) -> Mat<T> {
    let mut j = Mat::zeros(dim, dim);
    for b in 0..dim / 2 {
        j[(2 * b, 2 * b + 1)] = T::one();
        j[(2 * b + 1, 2 * b)] = -T::one();
    }
    j
}

/// Quadratic form around the mean-field quadratures `x` (the `ȳ` dependence
/// drops out of the fluctuation Hamiltonian). The effective atomic frequency
/// is `Ω√(1+4g²x_n²)` and the light-matter coupling `λ/√(1+4g²x_n²)`, with
/// the sign of `x_n` (negative at `x_n = 0`).
pub fn build_quadratic_x<T: Real>(p: &ModelParams, g: T, x: &[T]) -> QuadraticForm<T> {
    let n = p.n_sites;
    let omega = T::c(p.omega);
    let om_at = T::c(p.omega_atom);
    let lam = g * (omega * om_at).sqrt() * T::half();
    let th = T::c(p.theta);
    let (jc, js) = (T::c(p.j_hop) * th.cos(), T::c(p.j_hop) * th.sin());
    let mut h = Mat::zeros(4 * n, 4 * n);
    let mut offset = T::zero();
    for (s, &xs) in x.iter().enumerate().take(n) {
        let (q, pp, qa, pa) = (4 * s, 4 * s + 1, 4 * s + 2, 4 * s + 3);
        let r = (T::one() + T::c(4.0) * g * g * xs * xs).sqrt();
        let sgn = if xs > T::zero() { T::one() } else { -T::one() };
        h[(q, q)] = omega;
        h[(pp, pp)] = omega;
        h[(qa, qa)] = om_at * r;
        h[(pa, pa)] = om_at * r;
        let c = T::two() * lam * sgn / r;
        h[(q, qa)] = c;
        h[(qa, q)] = c;
        offset -= T::half() * (omega + om_at * r);

        let m = (s + 1) % n;
        let (q2, p2) = (4 * m, 4 * m + 1);
        h[(q, q2)] += jc;
        h[(q2, q)] += jc;
        h[(pp, p2)] += jc;
        h[(p2, pp)] += jc;
        h[(pp, q2)] += js;
        h[(q2, pp)] += js;
        h[(q, p2)] -= js;
        h[(p2, q)] -= js;
    }
    QuadraticForm { h, offset }
}

pub fn build_quadratic(p: &ModelParams, state: &MeanFieldState) -> Result<QuadraticForm, GaussianError> {
    p.validate().map_err(GaussianError::Params)?;
    if !state.converged {
        return Err(GaussianError::UnconvergedState);
    }
    if state.x.len() != p.n_sites {
        return Err(GaussianError::SizeMismatch { expected: p.n_sites, got: state.x.len() });
    }
    Ok(build_quadratic_x(p, p.g, &state.x))
}

/// Williamson decomposition. Semidefinite inputs (smallest eigenvalue within
/// [`PD_TOL`] of zero, relative to the largest) yield energies only.
pub fn symplectic_diagonalize<T: Real>(form: &QuadraticForm<T>) -> Result<SymplecticSpectrum<T>, GaussianError> {
    let h = &form.h;
    let dim = h.rows();
    let eig = sym_eigen(h);
    let scale = eig.values[dim - 1].abs().max(T::one());
    let lmin = eig.values[0];
    let tol = T::c(PD_TOL / f64::EPSILON) * T::roundoff() * scale;
    if lmin < -tol {
        return Err(GaussianError::NotPositiveDefinite { min_eig: lmin.f64() });
    }
    let singular = lmin <= tol;
    let hs = eig.apply(|v| v.max(T::zero()).sqrt());
    let k = hs.matmul(&symplectic_form(dim)).matmul(&hs);
    let ktk = k.transpose().matmul(&k).symmetrize();
    let keig = sym_eigen(&ktk);

    if singular {
        let mut energies: Vec<T> = keig.values.iter().map(|v| v.max(T::zero()).sqrt()).collect();
        energies = energies.chunks(2).map(|c| c[0]).collect();
        let gap = energies[0];
        return Ok(SymplecticSpectrum {
            energies,
            s: Mat::identity(dim),
            converged: false,
            gap,
            sts: Mat::identity(dim),
        });
    }

    // pair columns (v, u) with K u = ε v, orthogonal to everything already taken
    let mut o = Mat::zeros(dim, dim);
    let mut energies = Vec::with_capacity(dim / 2);
    let mut taken: Vec<Vec<T>> = Vec::with_capacity(dim);
    for c in 0..dim {
        if taken.len() == dim {
            break;
        }
        let mut u = keig.vectors.column(c);
        for _ in 0..2 {
            for t in &taken {
                let d = dot(&u, t);
                u.iter_mut().zip(t).for_each(|(a, b)| *a -= d * *b);
            }
        }
        let nu = dot(&u, &u).sqrt();
        if nu < T::half() {
            continue;
        }
        u.iter_mut().for_each(|a| *a /= nu);
        let mut v = k.mul_vec(&u);
        let eps = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|a| *a /= eps);
        let b = taken.len() / 2;
        o.set_column(2 * b, &v);
        o.set_column(2 * b + 1, &u);
        energies.push(eps);
        taken.push(u);
        taken.push(v);
    }
    if energies.len() != dim / 2 {
        return Err(GaussianError::NotConverged);
    }
    // order modes by energy
    let mut idx: Vec<usize> = (0..energies.len()).collect();
    idx.sort_by(|&a, &b| energies[a].partial_cmp(&energies[b]).unwrap());
    let mut os = Mat::zeros(dim, dim);
    let mut sorted = Vec::with_capacity(idx.len());
    for (b, &i) in idx.iter().enumerate() {
        os.set_column(2 * b, &o.column(2 * i));
        os.set_column(2 * b + 1, &o.column(2 * i + 1));
        sorted.push(energies[i]);
    }
    let h_isqrt = eig.apply(|v| T::one() / v.sqrt());
    let mut dhalf = Vec::with_capacity(dim);
    for e in &sorted {
        dhalf.push(e.sqrt());
        dhalf.push(e.sqrt());
    }
    let s = Mat::from_diag(&dhalf).matmul(&os.transpose()).matmul(&h_isqrt);
    let mut abs_k = Mat::zeros(dim, dim);
    for b in 0..dim / 2 {
        let e = sorted[b];
        for r in 0..dim {
            for c in 0..dim {
                abs_k[(r, c)] += e * (os[(r, 2 * b)] * os[(c, 2 * b)] + os[(r, 2 * b + 1)] * os[(c, 2 * b + 1)]);
            }
        }
    }
    let sts = h_isqrt.matmul(&abs_k).matmul(&h_isqrt).symmetrize();
    let gap = sorted[0];
    Ok(SymplecticSpectrum { energies: sorted, s, converged: true, gap, sts })
}

pub fn covariance<T: Real>(spec: &SymplecticSpectrum<T>) -> Result<CovarianceMatrix<T>, GaussianError> {
    if !spec.converged {
        return Err(GaussianError::NotConverged);
    }
    Ok(CovarianceMatrix { c: spec.sts.scale(T::half()) })
}

/// Symplectic eigenvalues of a covariance matrix (½ for a pure state).
pub fn symplectic_eigenvalues<T: Real>(c: &Mat<T>) -> Vec<T> {
    let form = QuadraticForm { h: c.clone(), offset: T::zero() };
    match symplectic_diagonalize(&form) {
        Ok(s) => s.energies,
        Err(_) => Vec::new(),
    }
}

/// Photon number `½(C_qq + C_pp − 1)` and block entropy `½ ln det 2C_n` per site.
pub fn observables<T: Real>(spec: &SymplecticSpectrum<T>) -> Result<Observables<T>, GaussianError> {
    let cov = covariance(spec)?;
    let c = &cov.c;
    let n = c.rows() / 4;
    let sites = (0..n)
        .map(|s| {
            let b = 4 * s;
            let photon_number = T::half() * (c[(b, b)] + c[(b + 1, b + 1)] - T::one());
            let block = c.block(b, b, 4, 4).scale(T::two());
            let det = Lu::new(&block).map(|lu| lu.det()).unwrap_or(T::one());
            SiteObservables { photon_number, entanglement: T::half() * det.ln() }
        })
        .collect();
    Ok(Observables { sites, gap: spec.gap, diverged: spec.gap < T::c(divergence_gap::<T>()) })
}

/// Fluctuation spectrum and observables around a mean-field state. Close to
/// a gap closing (gap below [`EXTENDED_GAP`] or a semidefinite f64 form) the
/// state is polished and everything recomputed in double-double.
pub fn analyze(p: &ModelParams, state: &MeanFieldState) -> Result<(SymplecticSpectrum, Observables), GaussianError> {
    let form = build_quadratic(p, state)?;
    match symplectic_diagonalize(&form) {
        Ok(spec) if spec.gap >= EXTENDED_GAP => {
            let obs = observables(&spec)?;
            Ok((spec, obs))
        }
        Ok(_) | Err(GaussianError::NotConverged) => analyze_extended(p, state),
        Err(e) => Err(e),
    }
}

/// [`analyze`] in double-double, rounded back to f64.
pub fn analyze_extended(p: &ModelParams, state: &MeanFieldState) -> Result<(SymplecticSpectrum, Observables), GaussianError> {
    build_quadratic(p, state)?;
    let g = DD::c(p.g);
    let x = if state.is_normal() {
        vec![DD::zero(); p.n_sites]
    } else {
        meanfield::polish::<DD>(p, g, &state.x).x
    };
    let spec = symplectic_diagonalize(&build_quadratic_x(p, g, &x))?;
    let obs = observables(&spec)?;
    let to_f64 = |v: &[DD]| v.iter().map(|e| e.f64()).collect::<Vec<f64>>();
    let spec64 = SymplecticSpectrum {
        energies: to_f64(&spec.energies),
        s: spec.s.to_f64(),
        converged: spec.converged,
        gap: spec.gap.f64(),
        sts: spec.sts.to_f64(),
    };
    let sites = obs
        .sites
        .iter()
        .map(|s| SiteObservables { photon_number: s.photon_number.f64(), entanglement: s.entanglement.f64() })
        .collect();
    Ok((spec64, Observables { sites, gap: obs.gap.f64(), diverged: obs.diverged }))
}
