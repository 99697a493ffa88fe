//! Normal-phase excitation spectra.
//!
//! Three independent routes: a dense Bogoliubov solve per `{k, −k}` block,
//! the closed-form roots of the block's characteristic quartic, and the
//! adiabatic-elimination (Rabi) limit `Ω/ω → ∞`.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{sym_eigen, Mat};
use crate::model::{self, momentum, n_pairs, ModelError, ModelParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NpError {
    #[error("normal phase unstable in block k={k}: Bogoliubov matrix eigenvalue {min_eig}")]
    NormalPhaseUnstable { k: f64, min_eig: f64 },
    #[error("Rabi-limit mode k={k} is over-critical (A_k = {a_k})")]
    OverCritical { k: f64, a_k: f64 },
    #[error("quartic root for k={k} has imaginary part {imag}")]
    ComplexRoot { k: f64, imag: f64 },
    #[error("energies of block k={k} do not come in +/- pairs")]
    PairingFailed { k: f64 },
    #[error("invalid parameters: {0:?}")]
    Params(Vec<ModelError>),
}

/// Negative Bogoliubov-matrix eigenvalues above this are treated as zero.
pub const UNSTABLE_TOL: f64 = 1e-10;
/// Relative tolerance for ± pairing of block eigenvalues.
pub const PAIRING_TOL: f64 = 1e-10;
/// Dense gaps below this are replaced by the closed-form result.
pub const DENSE_GAP_FLOOR: f64 = 1e-6;
/// Imaginary residues of closed-form roots below this are dropped.
pub const IMAG_TOL: f64 = 1e-10;
/// Magnitude of the `X_k` radicand treated as degenerate.
pub const RESOLVENT_TOL: f64 = 1e-12;

/// Block `H_k = ½ ψ† M ψ` with `ψ = (a_k, b_k, a_{−k}, b_{−k}, h.c.)`.
#[derive(Clone, Debug)]
pub struct BogoliubovBlock {
    pub k: f64,
    pub matrix_m: Mat<f64>,
    pub metric: [f64; 8],
}

impl BogoliubovBlock {
    pub fn new(p: &ModelParams, k: f64) -> Self {
        let wp = model::dispersion(p, k);
        let wm = model::dispersion(p, -k);
        let om = p.omega_atom;
        let l = p.lambda();
        let mut m = Mat::zeros(8, 8);
        let m1 = [[wp, l, 0.0, 0.0], [l, om, 0.0, 0.0], [0.0, 0.0, wm, l], [0.0, 0.0, l, om]];
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = m1[i][j];
                m[(i + 4, j + 4)] = m1[i][j];
            }
        }
        for &(i, j) in &[(0, 3), (3, 0), (1, 2), (2, 1)] {
            m[(i, j + 4)] = l;
            m[(i + 4, j)] = l;
        }
        BogoliubovBlock { k, matrix_m: m, metric: [1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0] }
    }

    /// Non-negative branch energies: four for a generic pair, two when `k ≡ −k`.
    pub fn energies(&self) -> Result<Vec<f64>, NpError> {
        let eig = sym_eigen(&self.matrix_m);
        let scale = self.matrix_m.max_abs();
        if eig.values[0] < -UNSTABLE_TOL * scale.max(1.0) {
            return Err(NpError::NormalPhaseUnstable { k: self.k, min_eig: eig.values[0] });
        }
        // M^{1/2} I₋ M^{1/2} is similar to I₋ M and symmetric.
        let root = eig.apply(|x| x.max(0.0).sqrt());
        let mut t = root.clone();
        for i in 0..8 {
            for j in 0..8 {
                t[(i, j)] = (0..8).map(|q| root[(i, q)] * self.metric[q] * root[(q, j)]).sum();
            }
        }
        let vals = sym_eigen(&t).values;
        for i in 0..4 {
            if (vals[i] + vals[7 - i]).abs() > PAIRING_TOL * scale.max(1.0) {
                return Err(NpError::PairingFailed { k: self.k });
            }
        }
        let pos: Vec<f64> = (0..4).map(|i| 0.5 * (vals[4 + i] - vals[3 - i])).collect();
        if self_paired(self.k) {
            Ok(vec![pos[0], pos[2]])
        } else {
            Ok(pos)
        }
    }
}

fn self_paired(k: f64) -> bool {
    k.sin().abs() < 1e-12
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSpectrum {
    pub j: usize,
    pub k: f64,
    /// Ascending branch energies.
    pub energies: Vec<f64>,
}

fn check(p: &ModelParams) -> Result<(), NpError> {
    p.validate().map_err(NpError::Params)
}

/// Dense Bogoliubov spectrum for every pair `j = 0 … ⌊N/2⌋`.
pub fn np_spectrum_dense(p: &ModelParams) -> Result<Vec<PairSpectrum>, NpError> {
    check(p)?;
    (0..n_pairs(p.n_sites))
        .map(|j| {
            let k = momentum(p.n_sites, j);
            let energies = BogoliubovBlock::new(p, k).energies()?;
            Ok(PairSpectrum { j, k, energies })
        })
        .collect()
}

/// All `2N` normal-phase energies, ascending.
pub fn np_energies(p: &ModelParams) -> Result<Vec<f64>, NpError> {
    let mut all: Vec<f64> = np_spectrum_dense(p)?.into_iter().flat_map(|s| s.energies).collect();
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(all)
}

/// Smallest excitation energy. Dense gaps under [`DENSE_GAP_FLOOR`] are
/// recomputed from the closed-form roots.
pub fn np_gap(p: &ModelParams) -> Result<f64, NpError> {
    let spectra = np_spectrum_dense(p)?;
    let mut gap = f64::INFINITY;
    for s in &spectra {
        let mut g = s.energies[0];
        if g < DENSE_GAP_FLOOR {
            g = mode_energy(p, s.j)?;
        }
        gap = gap.min(g);
    }
    Ok(gap)
}

/// Lowest closed-form branch energy of pair `j` (momenta `k_j` and `−k_j`).
/// Signed: past the pair's critical coupling a finite-momentum branch goes
/// negative linearly instead of turning complex.
pub fn mode_energy(p: &ModelParams, j: usize) -> Result<f64, NpError> {
    let k = momentum(p.n_sites, j);
    let a = np_spectrum_quartic(p, k)?;
    let mut e = a.eps1.min(a.eps2);
    if !self_paired(k) {
        let b = np_spectrum_quartic(p, -k)?;
        e = e.min(b.eps1.min(b.eps2));
    }
    Ok(e)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuarticBranch {
    /// General case through the resolvent cubic.
    Resolvent,
    /// `ω_k = ω_{−k}`: the quartic is biquadratic and each energy a single square root.
    Biquadratic,
    /// Small `d` where the resolvent loses the roots: biquadratic roots
    /// polished on the full quartic.
    NearBiquadratic,
    /// Degenerate resolvent; energies taken from the dense block.
    DenseFallback,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuarticSolution {
    pub k: f64,
    /// Coefficients `t_3 … t_0` of the resolvent cubic.
    pub t: [f64; 4],
    pub v_k: f64,
    pub x_k: Complex64,
    pub y_k: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub delta_k: f64,
    pub branch: QuarticBranch,
}

impl QuarticSolution {
    pub fn sorted(&self) -> [f64; 2] {
        if self.eps1 <= self.eps2 {
            [self.eps1, self.eps2]
        } else {
            [self.eps2, self.eps1]
        }
    }
}

/// Closed-form energies of the two branches carrying momentum `k`.
///
/// The characteristic polynomial of the block restricted to momentum `k` is
/// `ε⁴ − dε³ + sε² + dΩ²ε + cΩ²` with `d = ω_k − ω_{−k}`,
/// `s = −Ω² − ω_kω_{−k}` and `c = ω_kω_{−k} − ½g²ω(ω_k + ω_{−k})`.
/// It is reduced with the resolvent cubic `t₃v³ + t₂v² + t₁v + t₀`; the cubic
/// root used is the one maximizing `|d + 4v|`, which is the smallest root for
/// `d > 0` and the largest for `d < 0`. Both energies are Newton-polished on
/// the quartic.
pub fn np_spectrum_quartic(p: &ModelParams, k: f64) -> Result<QuarticSolution, NpError> {
    check(p)?;
    let wp = model::dispersion(p, k);
    let wm = model::dispersion(p, -k);
    let w2 = p.omega_atom * p.omega_atom;
    let d = 4.0 * model::delta_shift(p, k);
    let s = -w2 - wp * wm;
    let c = wp * wm - 0.5 * p.g * p.g * p.omega * (wp + wm);
    let delta_k = d / 4.0;

    if d.abs() < 1e-14 * (wp + wm) {
        let (hi, lo) = biquadratic_roots(&[1.0, 0.0, s, 0.0, c * w2]);
        if lo < 0.0 {
            return Err(NpError::ComplexRoot { k, imag: (-lo).sqrt() });
        }
        return Ok(QuarticSolution {
            k,
            t: [0.0, -4.0 * s * s + 16.0 * c * w2, 0.0, 0.0],
            v_k: 0.0,
            x_k: Complex64::new(0.0, 0.0),
            y_k: -4.0 * s,
            eps1: hi.sqrt(),
            eps2: lo.sqrt(),
            delta_k: 0.0,
            branch: QuarticBranch::Biquadratic,
        });
    }

    let t3 = d.powi(3) - 4.0 * d * s - 8.0 * d * w2;
    let t2 = d * d * s - 4.0 * s * s - 2.0 * d * d * w2 + 16.0 * c * w2;
    let t1 = -d.powi(3) * w2 + 4.0 * s * d * w2 + 8.0 * d * c * w2;
    let t0 = -d * d * w2 * w2 + d * d * c * w2;
    let roots = cubic_real_roots(t3, t2, t1, t0);
    let v = roots
        .iter()
        .copied()
        .max_by(|a, b| (d + 4.0 * a).abs().partial_cmp(&(d + 4.0 * b).abs()).unwrap())
        .expect("a real cubic has a real root");
    let den = d + 4.0 * v;
    let rad = (d.powi(3) - 8.0 * w2 * d - 4.0 * d * s) / den;
    let t = [t3, t2, t1, t0];
    let quartic = [1.0, -d, s, d * w2, c * w2];
    let scale = (wp + wm + p.omega_atom).max(1.0);
    let solution = |eps1, eps2, x_k, y_k, branch| QuarticSolution { k, t, v_k: v, x_k, y_k, eps1, eps2, delta_k, branch };
    let zero = Complex64::new(0.0, 0.0);
    if rad.abs() < RESOLVENT_TOL {
        if let Some((e1, e2)) = near_biquadratic(&quartic) {
            return Ok(solution(e1, e2, zero, f64::NAN, QuarticBranch::NearBiquadratic));
        }
        // momentum of each dense energy decided by proximity to the d = 0 roots
        let dense = BogoliubovBlock::new(p, k).energies()?;
        let (hi, lo) = biquadratic_roots(&quartic);
        let closest = |z: f64| dense.iter().copied().min_by(|a, b| (a - z).abs().partial_cmp(&(b - z).abs()).unwrap()).unwrap();
        return Ok(solution(closest(hi.max(0.0).sqrt()), closest(lo.max(0.0).sqrt()), zero, f64::NAN, QuarticBranch::DenseFallback));
    }
    let x = Complex64::new(rad, 0.0).sqrt();
    let y = (d.powi(3) + 4.0 * w2 * d - 2.0 * d * s + 6.0 * d * d * v - 16.0 * s * v) / den;
    let sq2 = std::f64::consts::SQRT_2;
    let e1 = (sq2 * (y + x * den).sqrt() + x + d) / 4.0;
    let e2 = (sq2 * (y - x * den).sqrt() - x + d) / 4.0;
    if let Some(e) = [e1, e2].into_iter().find(|e| e.im.abs() > IMAG_TOL * scale) {
        return match near_biquadratic(&quartic) {
            Some((e1, e2)) => Ok(solution(e1, e2, x, y, QuarticBranch::NearBiquadratic)),
            None => Err(NpError::ComplexRoot { k, imag: e.im }),
        };
    }
    // the resolvent is ill-conditioned for small d; polish on the quartic itself
    Ok(solution(polish_root(&quartic, e1.re), polish_root(&quartic, e2.re), x, y, QuarticBranch::Resolvent))
}

/// `ε²` roots `(hi, lo)` of the quartic with its odd terms dropped.
fn biquadratic_roots(q: &[f64; 5]) -> (f64, f64) {
    let (s, cw) = (q[2], q[4]);
    let hi = 0.5 * (-s + (s * s - 4.0 * cw).max(0.0).sqrt());
    (hi, cw / hi)
}

/// Positive roots grown from the `d = 0` solution, if both converge.
fn near_biquadratic(q: &[f64; 5]) -> Option<(f64, f64)> {
    let (hi, lo) = biquadratic_roots(q);
    if lo < 0.0 {
        return None;
    }
    let (e1, e2) = (polish_root(q, hi.sqrt()), polish_root(q, lo.sqrt()));
    let residual = |z: f64| q.iter().fold(0.0, |f, &a| f * z + a).abs();
    let tol = 1e-9 * q[2] * q[2];
    (residual(e1) <= tol && residual(e2) <= tol && (e1 - e2).abs() > 1e-9 * e1).then_some((e1, e2))
}

/// Newton steps on a polynomial (highest degree first), kept only while the
/// residual shrinks.
fn polish_root(coef: &[f64], mut z: f64) -> f64 {
    let eval = |z: f64| {
        coef.iter().fold((0.0, 0.0), |(f, df), &a| (f * z + a, df * z + f))
    };
    let (mut f, mut df) = eval(z);
    for _ in 0..6 {
        if f == 0.0 || df == 0.0 {
            break;
        }
        let next = z - f / df;
        let (nf, ndf) = eval(next);
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(nf.abs() < f.abs()) {
            break;
        }
        (z, f, df) = (next, nf, ndf);
    }
    z
}

/// Real roots of `a v³ + b v² + c v + d`, by the trigonometric form when
/// all three are real and Cardano otherwise, each Newton-polished.
pub fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (bb, cc, dd) = (b / a, c / a, d / a);
    let p = cc - bb * bb / 3.0;
    let q = 2.0 * bb.powi(3) / 27.0 - bb * cc / 3.0 + dd;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc <= 0.0 && p < 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let phi = (3.0 * q / (p * m)).clamp(-1.0, 1.0).acos() / 3.0;
        (0..3)
            .map(|i| m * (phi - 2.0 * std::f64::consts::PI * i as f64 / 3.0).cos() - bb / 3.0)
            .collect::<Vec<_>>()
    } else {
        let sd = disc.max(0.0).sqrt();
        vec![(-q / 2.0 + sd).cbrt() + (-q / 2.0 - sd).cbrt() - bb / 3.0]
    };
    for v in roots.iter_mut() {
        for _ in 0..4 {
            let f = ((a * *v + b) * *v + c) * *v + d;
            let fp = (3.0 * a * *v + 2.0 * b) * *v + c;
            if fp == 0.0 {
                break;
            }
            let step = f / fp;
            if !step.is_finite() {
                break;
            }
            *v -= step;
        }
    }
    roots
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiMode {
    pub energy: f64,
    /// Two-mode squeezing parameter `r_k = ⅛ ln[(ω_k+ω_{−k}) / (ω_k+ω_{−k} − 2ωg²)]`.
    pub squeeze: f64,
    pub a_k: f64,
}

fn rabi_a(p: &ModelParams, k: f64) -> f64 {
    let sum = model::dispersion(p, k) + model::dispersion(p, -k);
    sum * sum / 4.0 - sum * p.omega * p.g * p.g / 2.0
}

/// Photon-branch energy `√A_k + 2Δ_k` with the atoms adiabatically eliminated.
pub fn rabi_limit_spectrum(p: &ModelParams, k: f64) -> Result<RabiMode, NpError> {
    check(p)?;
    let a_k = rabi_a(p, k);
    if a_k < 0.0 {
        return Err(NpError::OverCritical { k, a_k });
    }
    let sum = model::dispersion(p, k) + model::dispersion(p, -k);
    let squeeze = ((sum / (sum - 2.0 * p.omega * p.g * p.g)).ln()) / 8.0;
    Ok(RabiMode { energy: a_k.sqrt() + 2.0 * model::delta_shift(p, k), squeeze, a_k })
}

/// Per-site photon number of the normal phase in the Rabi limit,
/// `(1/N) Σ_k sinh²(2r_k) = (1/4N) Σ_k [R_k + 1/R_k − 2]` with
/// `R_k = (ω_k + ω_{−k}) / (2√A_k)`.
pub fn np_photon_number(p: &ModelParams) -> Result<f64, NpError> {
    check(p)?;
    let n = p.n_sites;
    let mut total = 0.0;
    for j in 0..n {
        let k = momentum(n, j);
        let a_k = rabi_a(p, k);
        if a_k <= 0.0 {
            return Err(NpError::OverCritical { k, a_k });
        }
        let sum = model::dispersion(p, k) + model::dispersion(p, -k);
        let r = sum / (2.0 * a_k.sqrt());
        total += 0.25 * (r + 1.0 / r - 2.0);
    }
    Ok(total / n as f64)
}

/// Smallest `√A_k` over the grid; the Rabi-limit photon number diverges only
/// when this goes to zero.
pub fn min_sqrt_a(p: &ModelParams) -> f64 {
    (0..p.n_sites).map(|j| rabi_a(p, momentum(p.n_sites, j)).max(0.0).sqrt()).fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn decoupled_block_energies() {
        let p = ModelParams::new(3).with_g(0.0);
        for s in np_spectrum_dense(&p).unwrap() {
            let mut want = if s.j == 0 {
                vec![model::dispersion(&p, 0.0), p.omega_atom]
            } else {
                vec![model::dispersion(&p, s.k), model::dispersion(&p, -s.k), p.omega_atom, p.omega_atom]
            };
            want.sort_by(|a, b| a.partial_cmp(b).unwrap());
            for (a, b) in s.energies.iter().zip(&want) {
                assert_relative_eq!(a, b, epsilon = 1e-10);
            }
        }
        assert_eq!(np_energies(&p).unwrap().len(), 6);
    }

    #[test]
    fn gap_closes_at_block_critical_coupling() {
        let p = ModelParams::new(3);
        let k = momentum(3, 1);
        let gc = model::critical_coupling(&p, k);
        let e = BogoliubovBlock::new(&p.with_g(gc), k).energies().unwrap();
        assert!(e[0].abs() < 1e-8, "{e:?}");
    }

    #[test]
    fn unstable_beyond_critical() {
        let p = ModelParams::new(3).with_theta(3.0 * PI / 4.0);
        let gc = model::critical_coupling_theta(&p);
        assert!(matches!(np_spectrum_dense(&p.with_g(gc * 1.01)), Err(NpError::NormalPhaseUnstable { .. })));
    }

    #[test]
    fn quartic_matches_dense_reference_point() {
        let p = ModelParams::new(3).with_g(0.5);
        let k = momentum(3, 1);
        let mut q: Vec<f64> = np_spectrum_quartic(&p, k)
            .unwrap()
            .sorted()
            .into_iter()
            .chain(np_spectrum_quartic(&p, -k).unwrap().sorted())
            .collect();
        q.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let dense = BogoliubovBlock::new(&p, k).energies().unwrap();
        for (a, b) in q.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-9, "{q:?} vs {dense:?}");
        }
    }

    #[test]
    fn quartic_k0_is_biquadratic() {
        let p = ModelParams::new(3).with_g(0.7);
        let s = np_spectrum_quartic(&p, 0.0).unwrap();
        assert_eq!(s.branch, QuarticBranch::Biquadratic);
        assert_eq!(s.delta_k, 0.0);
        let dense = BogoliubovBlock::new(&p, 0.0).energies().unwrap();
        assert_relative_eq!(s.sorted()[0], dense[0], epsilon = 1e-10);
        assert_relative_eq!(s.sorted()[1], dense[1], epsilon = 1e-10);
    }

    #[test]
    fn quartic_past_critical_goes_negative_linearly() {
        let p = ModelParams::new(3);
        let k = momentum(3, 1);
        let gc = model::critical_coupling(&p, k);
        let e1 = mode_energy(&p.with_g(gc * (1.0 + 1e-6)), 1).unwrap();
        let e2 = mode_energy(&p.with_g(gc * (1.0 + 2e-6)), 1).unwrap();
        assert!(e1 < 0.0 && e2 < 0.0);
        assert_relative_eq!(e2 / e1, 2.0, epsilon = 1e-3);
    }

    #[test]
    fn cubic_roots() {
        let r = cubic_real_roots(2.0, -12.0, 22.0, -12.0);
        let mut r = r.clone();
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*a, b, epsilon = 1e-12);
        }
        let one = cubic_real_roots(1.0, 0.0, 1.0, -2.0);
        assert_eq!(one.len(), 1);
        assert_relative_eq!(one[0], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn rabi_single_mode_limit() {
        let p = ModelParams::new(3).with_j(0.0).with_g(0.6);
        let m = rabi_limit_spectrum(&p, 0.0).unwrap();
        assert_relative_eq!(m.energy, (1.0f64 - 0.36).sqrt(), epsilon = 1e-14);
        assert!(matches!(
            rabi_limit_spectrum(&p.with_g(1.2), 0.0),
            Err(NpError::OverCritical { .. })
        ));
    }

    #[test]
    fn photon_number_vacuum_and_sides() {
        assert_eq!(np_photon_number(&ModelParams::new(3).with_g(0.0)).unwrap(), 0.0);
        // mean-field side diverges, anomalous side stays bounded
        let mf = ModelParams::new(3).with_theta(3.0 * PI / 4.0);
        let gc = model::critical_coupling_theta(&mf);
        let n1 = np_photon_number(&mf.with_g(gc * (1.0 - 1e-4))).unwrap();
        let n2 = np_photon_number(&mf.with_g(gc * (1.0 - 1e-6))).unwrap();
        assert!(n2 > 5.0 * n1);
        let an = ModelParams::new(3).with_theta(PI / 4.0);
        let gc = model::critical_coupling_theta(&an);
        let n1 = np_photon_number(&an.with_g(gc * (1.0 - 1e-4))).unwrap();
        let n2 = np_photon_number(&an.with_g(gc * (1.0 - 1e-8))).unwrap();
        assert!((n2 - n1).abs() < 2e-2 * n1);
    }
}
