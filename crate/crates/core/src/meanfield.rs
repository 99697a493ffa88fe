//! Semiclassical ground state of the ring.
//!
//! The mean-field energy per atom is a function of the cavity quadratures
//! `(x̄_n, ȳ_n)`. Because it is quadratic in `ȳ`, the momenta can be
//! eliminated exactly through the circulant system `M1 y = M2 x`, leaving an
//! energy of `x̄` alone with effective couplings of every range. The sign
//! pattern of the minimizing `x̄` decides frustration and degeneracy.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{dot, solve, sym_eigen, Mat};
use crate::model::{self, ModelError, ModelParams};
use crate::par;
use crate::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MfError {
    #[error("circulant momentum system is singular")]
    SingularCirculant,
    #[error("no start reached the stationarity tolerance (best gradient {grad_norm:e})")]
    NonConvergence { grad_norm: f64, best: Box<MeanFieldState> },
    #[error("state mixes zero and non-zero quadratures: {x:?}")]
    MixedMagnitudes { x: Vec<f64> },
    #[error("frustrated configuration outside the expected window (N={n}, J_eff={j_eff:?})")]
    UnexpectedFrustration { n: usize, j_eff: Vec<f64> },
    #[error("need an even number of sites, got {0}")]
    OddSites(usize),
    #[error("invalid parameters: {0:?}")]
    Params(Vec<ModelError>),
}

/// Stationarity tolerance on the gradient max-norm.
pub const GRAD_TOL: f64 = 1e-11;
/// Iteration cap of a single local descent.
pub const MAX_ITER: usize = 10_000;
/// Quadratures below this magnitude count as zero.
pub const ZERO_TOL: f64 = 1e-8;
/// Relative energy window (with respect to the condensation energy) for
/// calling two minima degenerate.
pub const TIE_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct MeanFieldState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Energy per atom in units of Ω, including the normal-state value `−N/2`.
    pub energy: f64,
    /// Condensation energy `energy + N/2`, computed without cancellation.
    pub excess: f64,
    /// Per-site spin angles `(θ_n, φ_n)`.
    pub spin_angles: Vec<(f64, f64)>,
    pub grad_norm: f64,
    pub converged: bool,
}

impl MeanFieldState {
    pub fn is_normal(&self) -> bool {
        self.x.iter().all(|v| v.abs() < ZERO_TOL)
    }

    pub fn signs(&self) -> Vec<i8> {
        sign_pattern(&self.x)
    }
}

pub fn sign_pattern(x: &[f64]) -> Vec<i8> {
    x.iter()
        .map(|&v| if v.abs() < ZERO_TOL { 0 } else if v > 0.0 { 1 } else { -1 })
        .collect()
}

/// `cosθ_n = −1/√(1+4g²x̄_n²)`, `cosφ_n = −sign(x̄_n)` with `sign(0) = −1`.
pub fn spin_angles(g: f64, x: &[f64]) -> Vec<(f64, f64)> {
    x.iter()
        .map(|&v| {
            let ct = -1.0 / (1.0 + 4.0 * g * g * v * v).sqrt();
            let phi = if v > 0.0 { std::f64::consts::PI } else { 0.0 };
            (ct.acos(), phi)
        })
        .collect()
}

/// Mean-field energy per atom as a function of both quadratures.
pub fn mf_energy(p: &ModelParams, x: &[f64], y: &[f64]) -> f64 {
    let n = p.n_sites;
    assert_eq!(x.len(), n);
    assert_eq!(y.len(), n);
    let (c, s) = hop(p);
    let g2 = p.g * p.g;
    let mut e = 0.0;
    for i in 0..n {
        let j = (i + 1) % n;
        e += x[i] * x[i] + y[i] * y[i] - 0.5 * (1.0 + 4.0 * g2 * x[i] * x[i]).sqrt()
            + 2.0 * c * (x[i] * x[j] + y[i] * y[j])
            + 2.0 * s * (x[j] * y[i] - x[i] * y[j]);
    }
    e
}

/// Gradient of [`mf_energy`] with respect to `(x, y)`.
pub fn mf_gradient(p: &ModelParams, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = p.n_sites;
    let (c, s) = hop(p);
    let g2 = p.g * p.g;
    let mut gx = vec![0.0; n];
    let mut gy = vec![0.0; n];
    for i in 0..n {
        let nx = (i + 1) % n;
        let pv = (i + n - 1) % n;
        gx[i] = 2.0 * x[i] - 2.0 * g2 * x[i] / (1.0 + 4.0 * g2 * x[i] * x[i]).sqrt()
            + 2.0 * c * (x[nx] + x[pv])
            + 2.0 * s * (y[pv] - y[nx]);
        gy[i] = 2.0 * y[i] + 2.0 * c * (y[nx] + y[pv]) + 2.0 * s * (x[nx] - x[pv]);
    }
    (gx, gy)
}

fn hop(p: &ModelParams) -> (f64, f64) {
    let jb = p.jbar();
    (jb * p.theta.cos(), jb * p.theta.sin())
}

fn hop_t<T: Real>(p: &ModelParams) -> (T, T) {
    let jb = T::c(p.j_hop) / T::c(p.omega);
    let th = T::c(p.theta);
    (jb * th.cos(), jb * th.sin())
}

/// `M1 = I + J̄cosθ (S + Sᵀ)` and `M2 = −J̄sinθ (S − Sᵀ)` with `(S y)_n = y_{n+1}`.
pub fn circulant_mats<T: Real>(p: &ModelParams) -> (Mat<T>, Mat<T>) {
    let n = p.n_sites;
    let (c, s) = hop_t::<T>(p);
    let mut m1 = Mat::identity(n);
    let mut m2 = Mat::zeros(n, n);
    for i in 0..n {
        let j = (i + 1) % n;
        m1[(i, j)] += c;
        m1[(j, i)] += c;
        m2[(i, j)] -= s;
        m2[(j, i)] += s;
    }
    (m1, m2)
}

/// Solves `M1 y = M2 x` in the Fourier basis, where both circulants are diagonal.
pub fn eliminate_y(p: &ModelParams, x: &[f64]) -> Result<Vec<f64>, MfError> {
    let n = p.n_sites;
    let (c, s) = hop(p);
    let tau = 2.0 * std::f64::consts::PI / n as f64;
    let mut out = vec![0.0; n];
    for j in 0..n {
        let phi = tau * j as f64;
        let den = 1.0 + 2.0 * c * phi.cos();
        if den.abs() < 1e-14 {
            return Err(MfError::SingularCirculant);
        }
        let mult = Complex64::new(0.0, -2.0 * s * phi.sin() / den);
        let xh: Complex64 = x
            .iter()
            .enumerate()
            .map(|(m, &v)| Complex64::from_polar(v, -phi * m as f64))
            .sum();
        let yh = mult * xh;
        for (m, o) in out.iter_mut().enumerate() {
            *o += (yh * Complex64::from_polar(1.0, phi * m as f64)).re;
        }
    }
    out.iter_mut().for_each(|v| *v /= n as f64);
    Ok(out)
}

/// Quadratic form `A` of the eliminated energy,
/// `E = xᵀA x − ½ Σ √(1+4g²x_n²)`, with
/// `A = I + J̄cosθ (S + Sᵀ) + M2 M1⁻¹ M2`.
pub fn effective_matrix<T: Real>(p: &ModelParams) -> Mat<T> {
    let n = p.n_sites;
    let (m1, m2) = circulant_mats::<T>(p);
    let inv = crate::linalg::inverse(&m1).expect("M1 is diagonally dominant for omega > 2J");
    let k = m2.matmul(&inv).matmul(&m2);
    let (c, _) = hop_t::<T>(p);
    let mut a = Mat::identity(n).add(&k);
    for i in 0..n {
        let j = (i + 1) % n;
        a[(i, j)] += c;
        a[(j, i)] += c;
    }
    a.symmetrize()
}

/// Range-resolved couplings in `Σ_n Σ_m J_m x̄_n x̄_{n+m}`.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveCouplings {
    /// `J_m` for `m = 0 … ⌊N/2⌋`; `J_1` includes the bare `2J̄cosθ`.
    pub j_eff: Vec<f64>,
}

impl EffectiveCouplings {
    pub fn get(&self, m: usize) -> f64 {
        self.j_eff.get(m).copied().unwrap_or(0.0)
    }
}

pub fn effective_couplings(p: &ModelParams) -> EffectiveCouplings {
    let n = p.n_sites;
    let (m1, m2) = circulant_mats::<f64>(p);
    let inv = crate::linalg::inverse(&m1).expect("M1 is diagonally dominant for omega > 2J");
    let k = m2.matmul(&inv).matmul(&m2);
    let mut j_eff: Vec<f64> = (0..=n / 2)
        .map(|m| {
            let cm = 0.5 * (k[(0, m)] + k[(0, (n - m) % n)]);
            if m == 0 || 2 * m == n {
                cm
            } else {
                2.0 * cm
            }
        })
        .collect();
    j_eff[1] += 2.0 * p.jbar() * p.theta.cos();
    EffectiveCouplings { j_eff }
}

/// Condensation energy `E + N/2` of the eliminated model.
pub fn excess_energy<T: Real>(a: &Mat<T>, g: T, x: &[T]) -> T {
    let ax = a.mul_vec(x);
    let four_g2 = T::c(4.0) * g * g;
    let mut e = T::zero();
    for i in 0..x.len() {
        let u = four_g2 * x[i] * x[i];
        e += x[i] * ax[i] - T::half() * u / ((T::one() + u).sqrt() + T::one());
    }
    e
}

pub fn excess_gradient<T: Real>(a: &Mat<T>, g: T, x: &[T]) -> Vec<T> {
    let ax = a.mul_vec(x);
    let g2 = g * g;
    (0..x.len())
        .map(|i| T::two() * ax[i] - T::two() * g2 * x[i] / (T::one() + T::c(4.0) * g2 * x[i] * x[i]).sqrt())
        .collect()
}

pub fn excess_hessian<T: Real>(a: &Mat<T>, g: T, x: &[T]) -> Mat<T> {
    let g2 = g * g;
    let mut h = a.scale(T::two());
    for i in 0..x.len() {
        let r = T::one() + T::c(4.0) * g2 * x[i] * x[i];
        h[(i, i)] -= T::two() * g2 / (r * r.sqrt());
    }
    h
}

/// Eliminated energy `E_eff(x)` (including `−N/2`).
pub fn effective_energy(p: &ModelParams, x: &[f64]) -> f64 {
    let a = effective_matrix::<f64>(p);
    excess_energy(&a, p.g, x) - 0.5 * p.n_sites as f64
}

#[derive(Clone, Debug)]
pub struct Descent<T> {
    pub x: Vec<T>,
    pub excess: T,
    pub grad_norm: T,
    pub min_curvature: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Newton descent with an eigenvalue-shifted Hessian and Armijo backtracking.
/// Saddle points are escaped along the most negative curvature direction, so
/// a converged result is a local minimum.
pub fn descend<T: Real>(a: &Mat<T>, g: T, x0: &[T], grad_tol: T, max_iter: usize) -> Descent<T> {
    let mut x = x0.to_vec();
    let mut e = excess_energy(a, g, &x);
    let scale = a.max_abs().max(T::one());
    let mut iterations = 0;
    let mut kicks = 0;
    let mut extra = 0;
    loop {
        let grad = excess_gradient(a, g, &x);
        let gnorm = grad.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let eig = sym_eigen(&excess_hessian(a, g, &x));
        let lmin = eig.values[0];
        let saddle = lmin < -T::c(1e-9) * scale;
        let done = |x: Vec<T>, e: T, iterations: usize, converged: bool| Descent {
            x,
            excess: e,
            grad_norm: gnorm,
            min_curvature: lmin,
            iterations,
            converged,
        };
        let stationary = gnorm < grad_tol;
        if stationary && !(saddle && kicks < 8) {
            // a few extra Newton steps pin the position down on flat landscapes
            if extra < 3 && !saddle {
                extra += 1;
                let step = newton_step(&eig, &grad, T::zero());
                if let Some((nx, ne)) = newton_update(a, g, &x, e, gnorm, &grad, &step) {
                    x = nx;
                    e = ne;
                    continue;
                }
            }
            return done(x, e, iterations, true);
        }
        if iterations >= max_iter {
            return done(x, e, iterations, false);
        }
        iterations += 1;

        let step = if stationary {
            None
        } else {
            let floor = T::c(1e-10) * scale;
            let shift = if lmin < floor { floor - lmin } else { T::zero() };
            let step = newton_step(&eig, &grad, shift);
            newton_update(a, g, &x, e, gnorm, &grad, &step)
        };
        match step {
            Some((nx, ne)) => {
                x = nx;
                e = ne;
            }
            None if saddle && kicks < 8 => {
                // stationary or stalled on a saddle: step along the negative curvature
                kicks += 1;
                let v = eig.vectors.column(0);
                let amp = x.iter().fold(T::zero(), |m, v| m.max(v.abs())).max(T::c(1e-4)) * T::c(0.1);
                for sgn in [T::one(), -T::one()] {
                    let trial: Vec<T> = x.iter().zip(&v).map(|(xi, vi)| *xi + sgn * amp * *vi).collect();
                    let te = excess_energy(a, g, &trial);
                    if te < e {
                        x = trial;
                        e = te;
                    }
                }
            }
            None => return done(x, e, iterations, false),
        }
    }
}

fn newton_step<T: Real>(eig: &crate::linalg::SymEigen<T>, grad: &[T], shift: T) -> Vec<T> {
    let mut step = vec![T::zero(); grad.len()];
    for k in 0..grad.len() {
        let vk = eig.vectors.column(k);
        let ck = dot(&vk, grad) / (eig.values[k] + shift);
        step.iter_mut().zip(&vk).for_each(|(s, v)| *s -= ck * *v);
    }
    step
}

/// One globalized Newton step; `None` when no progress is possible.
fn newton_update<T: Real>(a: &Mat<T>, g: T, x: &[T], e: T, gnorm: T, grad: &[T], step: &[T]) -> Option<(Vec<T>, T)> {
    let slope = dot(grad, step);
    // rounding level of the energy, from the size of its quadratic part
    let resolution = T::c(100.0) * T::roundoff() * (e.abs() + dot(x, x) * a.max_abs());
    if slope.abs() > resolution {
        let mut t = T::one();
        for _ in 0..60 {
            let trial: Vec<T> = x.iter().zip(step).map(|(xi, si)| *xi + t * *si).collect();
            let te = excess_energy(a, g, &trial);
            if te < e && te <= e + T::c(1e-4) * t * slope {
                return Some((trial, te));
            }
            t *= T::half();
        }
    }
    // energies can no longer rank trial points; judge the full step by its gradient
    let trial: Vec<T> = x.iter().zip(step).map(|(xi, si)| *xi + *si).collect();
    let tn = excess_gradient(a, g, &trial).iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if tn < gnorm {
        let te = excess_energy(a, g, &trial);
        Some((trial, te))
    } else {
        None
    }
}

/// Refines an f64 minimizer in the precision of `T`.
pub fn polish<T: Real>(p: &ModelParams, g: T, x0: &[f64]) -> Descent<T> {
    let a = effective_matrix::<T>(p);
    let x: Vec<T> = x0.iter().map(|&v| T::c(v)).collect();
    let tol = T::roundoff() * T::c(1e5);
    descend(&a, g, &x, tol, 200)
}

#[derive(Clone, Debug)]
pub struct MinimizeOptions {
    pub restarts: usize,
    pub seed: u64,
    pub grad_tol: f64,
    pub max_iter: usize,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        MinimizeOptions { restarts: 8, seed: 0x5eed, grad_tol: GRAD_TOL, max_iter: MAX_ITER }
    }
}

/// A converged local minimum of the eliminated energy.
#[derive(Clone, Debug)]
pub struct LocalMin {
    pub x: Vec<f64>,
    pub excess: f64,
    pub grad_norm: f64,
    pub signs: Vec<i8>,
}

/// All local minima reached from the start set, plus the selected ground state.
#[derive(Clone, Debug)]
pub struct Landscape {
    pub ground: MeanFieldState,
    pub minima: Vec<LocalMin>,
}

fn uniform_magnitude(p: &ModelParams) -> f64 {
    let gc = model::critical_coupling_theta(p);
    let r = (p.g / gc).powi(4) - 1.0;
    if r > 0.0 && p.g > 0.0 {
        (r.sqrt() / (2.0 * p.g)).max(1e-4)
    } else {
        0.1
    }
}

fn start_points(p: &ModelParams, opts: &MinimizeOptions) -> Vec<Vec<f64>> {
    let n = p.n_sites;
    let m0 = uniform_magnitude(p);
    let mut starts = Vec::with_capacity((1 << n) + opts.restarts + 1);
    for mask in 0..(1u32 << n) {
        starts.push((0..n).map(|i| if mask >> i & 1 == 1 { m0 } else { -m0 }).collect());
    }
    for r in 0..opts.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(r as u64);
        starts.push((0..n).map(|_| rng.gen_range(-2.0 * m0..2.0 * m0)).collect());
    }
    if let Some(x) = asymptotic_n3(p) {
        starts.push(x.to_vec());
    }
    starts
}

fn lex_less(a: &[i8], b: &[i8]) -> bool {
    a < b
}

/// Whether two condensation energies agree within [`TIE_TOL`].
pub fn energies_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOL * a.abs().max(b.abs()) + 1e-300
}

/// Multistart minimization: every sign pattern at the uniform-ansatz
/// magnitude, `restarts` random starts from a counter-seeded stream, and the
/// near-critical series for N = 3.
pub fn minimize_landscape(p: &ModelParams, opts: &MinimizeOptions) -> Result<Landscape, MfError> {
    p.validate().map_err(MfError::Params)?;
    let a = effective_matrix::<f64>(p);
    let starts = start_points(p, opts);
    let runs = par::map(&starts, |x0| descend(&a, p.g, x0, opts.grad_tol, opts.max_iter));

    let mut minima: Vec<LocalMin> = runs
        .iter()
        .filter(|d| d.converged)
        .map(|d| LocalMin { x: d.x.clone(), excess: d.excess, grad_norm: d.grad_norm, signs: sign_pattern(&d.x) })
        .collect();
    if minima.is_empty() {
        let best = runs
            .iter()
            .min_by(|a, b| a.grad_norm.partial_cmp(&b.grad_norm).unwrap())
            .expect("start set is never empty");
        let state = build_state(p, best.x.clone(), best.excess, best.grad_norm, false)?;
        return Err(MfError::NonConvergence { grad_norm: best.grad_norm, best: Box::new(state) });
    }
    let emin = minima.iter().map(|m| m.excess).fold(f64::INFINITY, f64::min);
    let mut ground: Option<&LocalMin> = None;
    for m in minima.iter().filter(|m| energies_tie(m.excess, emin) || m.excess == emin) {
        ground = match ground {
            None => Some(m),
            Some(b) if lex_less(&m.signs, &b.signs) => Some(m),
            Some(b) if m.signs == b.signs && m.excess < b.excess => Some(m),
            keep => keep,
        };
    }
    let best = ground.expect("at least one minimum");
    let mut x = best.x.clone();
    let (excess, grad_norm) = (best.excess, best.grad_norm);
    if x.iter().all(|v| v.abs() < ZERO_TOL) {
        x.iter_mut().for_each(|v| *v = 0.0);
    }
    let ground = build_state(p, x, excess, grad_norm, true)?;
    minima.sort_by(|a, b| a.excess.partial_cmp(&b.excess).unwrap());
    Ok(Landscape { ground, minima })
}

fn build_state(p: &ModelParams, x: Vec<f64>, excess: f64, grad_norm: f64, converged: bool) -> Result<MeanFieldState, MfError> {
    let y = eliminate_y(p, &x)?;
    let energy = mf_energy(p, &x, &y);
    let spin_angles = spin_angles(p.g, &x);
    Ok(MeanFieldState { x, y, energy, excess, spin_angles, grad_norm, converged })
}

/// Global minimizer of the mean-field energy.
pub fn minimize(p: &ModelParams, restarts: usize, seed: u64) -> Result<MeanFieldState, MfError> {
    let opts = MinimizeOptions { restarts, seed, ..Default::default() };
    minimize_landscape(p, &opts).map(|l| l.ground)
}

/// Leading near-critical minimizer for N = 3 in the frustrated regime,
/// `x̄_1 = x̄_2 = a₁ε^{1/2} + a₃ε^{3/2}`, `x̄_3 = −2a₁ε^{1/2} + b₃ε^{3/2}` with
/// `ε = g − g_c`, `a₁ = 1/(√3 g_c^{3/2})`, `b₃ = −1/(6√3 g_c^{5/2})` and
/// `a₃ = (16g_c² + J_1)/(12√3 J_1 g_c^{5/2})`. `J_1` is the effective
/// nearest-neighbour coupling; with real hopping (`J_1 = 2J̄`, `J_0 = 0`)
/// `a₃` becomes `(8 − 7J̄)/(12√3 J̄ g_c^{5/2})`.
pub fn asymptotic_n3(p: &ModelParams) -> Option<[f64; 3]> {
    if p.n_sites != 3 {
        return None;
    }
    let j = effective_couplings(p);
    let j1 = j.get(1);
    if j1 <= 0.0 {
        return None;
    }
    let gc = (1.0 + j.get(0) - 0.5 * j1).sqrt();
    let eps = p.g - gc;
    if eps <= 0.0 {
        return None;
    }
    let s3 = 3f64.sqrt();
    let a1 = 1.0 / (s3 * gc.powf(1.5));
    let a3 = (16.0 * gc * gc + j1) / (12.0 * s3 * j1 * gc.powf(2.5));
    let b3 = -1.0 / (6.0 * s3 * gc.powf(2.5));
    let pair = a1 * eps.sqrt() + a3 * eps.powf(1.5);
    let odd = -2.0 * a1 * eps.sqrt() + b3 * eps.powf(1.5);
    Some([pair, pair, odd])
}

/// Sign pattern, ferromagnetic-pair count, frustration and degeneracy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigClass {
    pub signs: Vec<i8>,
    pub n_ferro_pairs: usize,
    /// Number of distinct sign patterns in the ground manifold.
    pub degeneracy: usize,
    /// Size of the orbit of `signs` under rotations, reflections and the global flip.
    pub orbit_size: usize,
    pub frustrated: bool,
}

/// Images of `x` under the dihedral group of the ring and the global flip.
pub fn symmetry_images(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut out = Vec::with_capacity(4 * n);
    for flip in [1.0, -1.0] {
        for r in 0..n {
            out.push((0..n).map(|i| flip * x[(i + r) % n]).collect());
            out.push((0..n).map(|i| flip * x[(r + n - i) % n]).collect());
        }
    }
    out
}

/// Lexicographically smallest image of a sign pattern under the symmetry group.
pub fn canonical_signs(signs: &[i8]) -> Vec<i8> {
    let x: Vec<f64> = signs.iter().map(|&s| s as f64).collect();
    symmetry_images(&x)
        .into_iter()
        .map(|v| v.iter().map(|&f| f as i8).collect::<Vec<i8>>())
        .min()
        .expect("non-empty orbit")
}

fn orbit(signs: &[i8]) -> Vec<Vec<i8>> {
    let x: Vec<f64> = signs.iter().map(|&s| s as f64).collect();
    let mut o: Vec<Vec<i8>> =
        symmetry_images(&x).into_iter().map(|v| v.iter().map(|&f| f as i8).collect()).collect();
    o.sort();
    o.dedup();
    o
}

pub fn ferro_pairs(signs: &[i8]) -> usize {
    let n = signs.len();
    (0..n).filter(|&i| signs[i] != 0 && signs[i] == signs[(i + 1) % n]).count()
}

/// A configuration is frustrated when it satisfies none of the relevant
/// couplings: every range `m` with `|J_m| ≥ 0.1 max|J|` has at least one bond
/// whose sign product disagrees with `−sign(J_m)`.
pub fn is_frustrated(signs: &[i8], j: &EffectiveCouplings) -> bool {
    let n = signs.len();
    if signs.iter().all(|&s| s == 0) {
        return false;
    }
    let ranges: Vec<usize> = (1..=n / 2).collect();
    let jmax = ranges.iter().map(|&m| j.get(m).abs()).fold(0.0, f64::max);
    if jmax < 1e-12 {
        return false;
    }
    for &m in &ranges {
        let jm = j.get(m);
        if jm.abs() < 0.1 * jmax {
            continue;
        }
        let want = if jm > 0.0 { -1 } else { 1 };
        if (0..n).all(|i| signs[i] * signs[(i + m) % n] == want) {
            return false;
        }
    }
    true
}

/// Classifies a converged state. The ground manifold is assembled from the
/// symmetry images of the state and from descents started at every sign
/// pattern; patterns whose minimum ties with the state's energy are counted.
pub fn classify(p: &ModelParams, state: &MeanFieldState) -> Result<ConfigClass, MfError> {
    let n = p.n_sites;
    let zero = state.x.iter().filter(|v| v.abs() < ZERO_TOL).count();
    if zero != 0 && zero != n {
        return Err(MfError::MixedMagnitudes { x: state.x.clone() });
    }
    let signs = state.signs();
    let j = effective_couplings(p);
    if zero == n {
        return Ok(ConfigClass { signs, n_ferro_pairs: 0, degeneracy: 1, orbit_size: 1, frustrated: false });
    }
    let a = effective_matrix::<f64>(p);
    let mut manifold: Vec<Vec<i8>> = Vec::new();
    let mut candidates = symmetry_images(&state.x);
    let m0 = state.x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for mask in 0..(1u32 << n) {
        candidates.push((0..n).map(|i| if mask >> i & 1 == 1 { m0 } else { -m0 }).collect());
    }
    let runs = par::map(&candidates, |x0| descend(&a, p.g, x0, GRAD_TOL, MAX_ITER));
    for d in runs.iter().filter(|d| d.converged) {
        if energies_tie(d.excess, state.excess) {
            manifold.push(sign_pattern(&d.x));
        }
    }
    manifold.sort();
    manifold.dedup();
    Ok(ConfigClass {
        n_ferro_pairs: ferro_pairs(&signs),
        degeneracy: manifold.len().max(1),
        orbit_size: orbit(&signs).len(),
        frustrated: is_frustrated(&signs, &j),
        signs,
    })
}

/// Phase key used to detect first-order changes along θ.
fn config_key(p: &ModelParams, opts: &MinimizeOptions) -> Option<(Vec<i8>, Vec<f64>)> {
    let st = minimize_landscape(p, opts).ok()?.ground;
    if st.is_normal() {
        return None;
    }
    Some((canonical_signs(&st.signs()), st.x))
}

/// Scan resolution of [`first_order_boundary`].
pub const BOUNDARY_SCAN_POINTS: usize = 256;
/// θ resolution of the refined boundary.
pub const BOUNDARY_TOL: f64 = 1e-6;

/// First-order lines crossed at fixed `g`: θ where the ground configuration
/// changes class inside the superradiant phase, refined by bisection on the
/// energy crossing of the two competing local minima.
pub fn first_order_boundary(p: &ModelParams, g: f64) -> Vec<f64> {
    let pts = BOUNDARY_SCAN_POINTS;
    let lo = 1e-3;
    let hi = std::f64::consts::PI - 1e-3;
    let thetas: Vec<f64> = (0..pts).map(|i| lo + (hi - lo) * i as f64 / (pts - 1) as f64).collect();
    let opts = MinimizeOptions { restarts: 2, ..Default::default() };
    let keys = par::map(&thetas, |&t| config_key(&p.with_theta(t).with_g(g), &opts));
    let mut out = Vec::new();
    for i in 0..pts - 1 {
        if let (Some((ka, xa)), Some((kb, xb))) = (&keys[i], &keys[i + 1]) {
            if ka != kb {
                out.push(refine_boundary(p, g, (thetas[i], xa), (thetas[i + 1], xb), &opts));
            }
        }
    }
    out
}

fn refine_boundary(p: &ModelParams, g: f64, left: (f64, &[f64]), right: (f64, &[f64]), opts: &MinimizeOptions) -> f64 {
    let (mut lo, mut hi) = (left.0, right.0);
    let mut xl = left.1.to_vec();
    let mut xr = right.1.to_vec();
    let kl = canonical_signs(&sign_pattern(&xl));
    let kr = canonical_signs(&sign_pattern(&xr));
    while hi - lo > BOUNDARY_TOL {
        let mid = 0.5 * (lo + hi);
        let q = p.with_theta(mid).with_g(g);
        let a = effective_matrix::<f64>(&q);
        let dl = descend(&a, g, &xl, GRAD_TOL, MAX_ITER);
        let dr = descend(&a, g, &xr, GRAD_TOL, MAX_ITER);
        let sl = canonical_signs(&sign_pattern(&dl.x));
        let sr = canonical_signs(&sign_pattern(&dr.x));
        let left_wins = if dl.converged && dr.converged && sl == kl && sr == kr {
            dl.excess <= dr.excess
        } else {
            // one branch is no longer a distinct minimum; fall back to the global answer
            match config_key(&q, opts) {
                Some((k, _)) => k == kl,
                None => true,
            }
        };
        if left_wins {
            lo = mid;
            if sl == kl {
                xl = dl.x;
            }
        } else {
            hi = mid;
            if sr == kr {
                xr = dr.x;
            }
        }
    }
    0.5 * (lo + hi)
}

/// Runs minimize + classify for even N and checks that frustration only
/// appears for odd `N/2` with an antiferromagnetic `J_2`. How large `J_2`
/// must be is left to the minimizer: with soft amplitudes the onset moves
/// from `2J_2 ≈ |J_1|` deep in the superradiant phase down to about
/// `0.65|J_1|` just above `g_c`.
pub fn even_n_frustration_probe(p: &ModelParams) -> Result<ConfigClass, MfError> {
    let n = p.n_sites;
    if n % 2 != 0 {
        return Err(MfError::OddSites(n));
    }
    let st = minimize(p, 8, 0x5eed)?;
    let class = classify(p, &st)?;
    if class.frustrated {
        let j = effective_couplings(p);
        if (n / 2) % 2 == 0 || j.get(2) <= 0.0 {
            return Err(MfError::UnexpectedFrustration { n, j_eff: j.j_eff });
        }
    }
    Ok(class)
}

/// Dense linear solve of `M1 y = M2 x`; reference for [`eliminate_y`].
pub fn eliminate_y_dense(p: &ModelParams, x: &[f64]) -> Option<Vec<f64>> {
    let (m1, m2) = circulant_mats::<f64>(p);
    solve(&m1, &m2.mul_vec(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn energy_at_origin() {
        let p = ModelParams::new(5).with_g(1.3);
        assert_relative_eq!(mf_energy(&p, &[0.0; 5], &[0.0; 5]), -2.5, epsilon = 1e-15);
    }

    #[test]
    fn uniform_closed_form() {
        let p = ModelParams::new(3).with_theta(1.1).with_g(1.4);
        let x = 0.37;
        let e = mf_energy(&p, &[x; 3], &[0.0; 3]);
        let want = 3.0 * ((1.0 + 2.0 * p.jbar() * p.theta.cos()) * x * x - 0.5 * (1.0 + 4.0 * 1.96 * x * x).sqrt());
        assert_relative_eq!(e, want, epsilon = 1e-14);
    }

    #[test]
    fn elimination_special_cases() {
        let p = ModelParams::new(5).with_theta(PI / 3.0);
        let y = eliminate_y(&p, &[0.4; 5]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-15));
        let p0 = ModelParams::new(5).with_theta(0.0);
        let y = eliminate_y(&p0, &[0.1, -0.3, 0.2, 0.5, -0.7]).unwrap();
        assert!(y.iter().all(|v| v.abs() < 1e-15));
        let x = [0.1, -0.3, 0.2, 0.5, -0.7];
        let a = eliminate_y(&p, &x).unwrap();
        let b = eliminate_y_dense(&p, &x).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_flux_couplings() {
        let p = ModelParams::new(5).with_theta(0.0);
        let j = effective_couplings(&p);
        assert_relative_eq!(j.get(1), 2.0 * p.jbar(), epsilon = 1e-15);
        assert!(j.get(0).abs() < 1e-15 && j.get(2).abs() < 1e-15);
    }

    #[test]
    fn normal_phase_minimum() {
        let p = ModelParams::new(3).with_theta(PI / 4.0);
        let gc = model::critical_coupling_theta(&p);
        let st = minimize(&p.with_g(0.5 * gc), 4, 1).unwrap();
        assert!(st.is_normal());
        assert!(st.x.iter().all(|&v| v == 0.0));
        assert_relative_eq!(st.energy, -1.5, epsilon = 1e-14);
    }

    #[test]
    fn uniform_superradiant_solution() {
        let p = ModelParams::new(3).with_theta(3.0 * PI / 4.0).with_g(1.3);
        let st = minimize(&p, 4, 1).unwrap();
        let gc0 = model::critical_coupling(&p, 0.0);
        let want = ((p.g / gc0).powi(4) - 1.0).sqrt() / (2.0 * p.g);
        for v in &st.x {
            assert_relative_eq!(v.abs(), want, epsilon = 1e-10);
        }
        assert!(st.y.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn state_is_stationary_in_both_quadratures() {
        let p = ModelParams::new(5).with_theta(PI / 4.0).with_g(1.2);
        let st = minimize(&p, 4, 2).unwrap();
        let (gx, gy) = mf_gradient(&p, &st.x, &st.y);
        assert!(gx.iter().chain(&gy).all(|v| v.abs() < 1e-9));
        let (m1, m2) = circulant_mats::<f64>(&p);
        let r = m1.mul_vec(&st.y);
        let t = m2.mul_vec(&st.x);
        assert!(r.iter().zip(&t).all(|(a, b)| (a - b).abs() < 1e-10));
    }

    #[test]
    fn frustrated_triangle_has_six_states() {
        let p = ModelParams::new(3).with_theta(PI / 4.0);
        let gc = model::critical_coupling_theta(&p);
        let q = p.with_g(1.3 * gc);
        let st = minimize(&q, 4, 3).unwrap();
        let c = classify(&q, &st).unwrap();
        assert!(c.frustrated);
        assert_eq!(c.n_ferro_pairs, 1);
        assert_eq!(c.degeneracy, 6);
        assert_eq!(c.orbit_size, 6);
    }

    #[test]
    fn asymptotic_series_leading_order() {
        let p = ModelParams::new(3).with_theta(PI / 4.0);
        let gc = model::critical_coupling_theta(&p);
        let q = p.with_g(gc * (1.0 + 1e-4));
        let x = asymptotic_n3(&q).unwrap();
        assert_relative_eq!(x[0] + x[1] + x[2], 0.0, epsilon = 1e-5);
        let j = effective_couplings(&p);
        assert_relative_eq!((1.0 + j.get(0) - 0.5 * j.get(1)).sqrt(), gc, epsilon = 1e-12);
    }

    #[test]
    fn canonical_signs_is_orbit_invariant() {
        let s = vec![1, 1, -1, 1, -1];
        let c = canonical_signs(&s);
        for img in symmetry_images(&[1.0, 1.0, -1.0, 1.0, -1.0]) {
            let v: Vec<i8> = img.iter().map(|&f| f as i8).collect();
            assert_eq!(canonical_signs(&v), c);
        }
        assert_eq!(orbit(&s).len(), 10);
        assert_eq!(orbit(&[1, 1, 1]).len(), 2);
    }
}
