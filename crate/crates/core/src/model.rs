//! Lattice parameters, dispersion, critical couplings and flux critical points.

use std::f64::consts::PI;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid parameter {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error("no root of g_c(k_i) - g_c(k_j) in (0, pi) for momenta {k_i} and {k_j}")]
    NoRootInInterval { k_i: f64, k_j: f64 },
}

/// Physical couplings of the ring. Energies are in units of the cavity
/// frequency `omega` (1 unless overridden).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub n_sites: usize,
    pub omega: f64,
    pub omega_atom: f64,
    pub j_hop: f64,
    pub theta: f64,
    pub g: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams { n_sites: 3, omega: 1.0, omega_atom: 50.0, j_hop: 0.1, theta: PI / 4.0, g: 0.0 }
    }
}

impl ModelParams {
    pub fn new(n_sites: usize) -> Self {
        ModelParams { n_sites, ..Default::default() }
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn with_j(mut self, j_hop: f64) -> Self {
        self.j_hop = j_hop;
        self
    }

    pub fn with_omega_atom(mut self, omega_atom: f64) -> Self {
        self.omega_atom = omega_atom;
        self
    }

    /// Hopping in cavity units, `J/ω`.
    pub fn jbar(&self) -> f64 {
        self.j_hop / self.omega
    }

    /// Spin-boson coupling `λ = g√(ωΩ)/2`.
    pub fn lambda(&self) -> f64 {
        0.5 * self.g * (self.omega * self.omega_atom).sqrt()
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self) -> Result<(), Vec<ModelError>> {
        let mut errs = Vec::new();
        let mut bad = |field: &'static str, reason: String| errs.push(ModelError::Invalid { field, reason });
        if self.n_sites < 3 {
            bad("n_sites", format!("need N >= 3, got {}", self.n_sites));
        }
        if self.n_sites > 16 {
            bad("n_sites", format!("sign enumeration limits N to 16, got {}", self.n_sites));
        }
        if !(self.omega.is_finite() && self.omega > 0.0) {
            bad("omega", format!("must be positive, got {}", self.omega));
        }
        if !(self.omega_atom.is_finite() && self.omega_atom > 0.0) {
            bad("omega_atom", format!("must be positive, got {}", self.omega_atom));
        }
        if !(self.j_hop.is_finite() && self.j_hop >= 0.0) {
            bad("j_hop", format!("must be >= 0, got {}", self.j_hop));
        } else if self.omega.is_finite() && self.omega <= 2.0 * self.j_hop {
            bad("j_hop", format!("need omega > 2J, got omega={} J={}", self.omega, self.j_hop));
        }
        if !(self.g.is_finite() && self.g >= 0.0) {
            bad("g", format!("must be >= 0, got {}", self.g));
        }
        if !self.theta.is_finite() || !(0.0..=PI).contains(&self.theta) {
            bad("theta", format!("must lie in [0, pi], got {}", self.theta));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }

    /// Flux-dependent paths need θ strictly inside (0, π).
    pub fn validate_flux_interior(&self) -> Result<(), Vec<ModelError>> {
        self.validate()?;
        if self.theta <= 0.0 || self.theta >= PI {
            return Err(vec![ModelError::Invalid {
                field: "theta",
                reason: format!("must lie strictly inside (0, pi), got {}", self.theta),
            }]);
        }
        Ok(())
    }
}

/// Maps an angle to (−π, π].
pub fn canonical_momentum(k: f64) -> f64 {
    let mut r = k.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// `k_j = −2πj/N` in (−π, π].
pub fn momentum(n_sites: usize, j: usize) -> f64 {
    canonical_momentum(-2.0 * PI * j as f64 / n_sites as f64)
}

/// Number of inequivalent `{k, −k}` pairs: `j = 0 … ⌊N/2⌋`.
pub fn n_pairs(n_sites: usize) -> usize {
    n_sites / 2 + 1
}

#[derive(Clone, Debug, PartialEq)]
pub struct MomentumGrid {
    pub values: Vec<f64>,
}

impl MomentumGrid {
    pub fn new(n_sites: usize) -> Self {
        MomentumGrid { values: (0..n_sites).map(|j| momentum(n_sites, j)).collect() }
    }

    pub fn contains(&self, k: f64) -> bool {
        let k = canonical_momentum(k);
        self.values.iter().any(|&q| (canonical_momentum(q - k)).abs() < 1e-12)
    }
}

/// `ω_k = ω + 2J cos(θ − k)`.
pub fn dispersion(p: &ModelParams, k: f64) -> f64 {
    p.omega + 2.0 * p.j_hop * (p.theta - k).cos()
}

/// `Δ_k = (ω_k − ω_{−k})/4`, evaluated in the cancellation-free form `J sinθ sin k`.
pub fn delta_shift(p: &ModelParams, k: f64) -> f64 {
    p.j_hop * p.theta.sin() * k.sin()
}

/// `(ω_k + ω_{−k})/2` and `ω_k ω_{−k}` without cancellation.
fn pair_moments(p: &ModelParams, k: f64) -> (f64, f64) {
    let a = p.omega + 2.0 * p.j_hop * p.theta.cos() * k.cos();
    let b = 2.0 * p.j_hop * p.theta.sin() * k.sin();
    (a, a * a - b * b)
}

/// `g_c(k) = √(2 ω_k ω_{−k} / (ω (ω_k + ω_{−k})))`; symmetric in `k` by construction.
pub fn critical_coupling(p: &ModelParams, k: f64) -> f64 {
    let (mean, prod) = pair_moments(p, k);
    (prod / (p.omega * mean)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalMode {
    pub j: usize,
    pub k: f64,
    pub g_c: f64,
    /// Second mode within the tie tolerance, present at flux critical points.
    pub degenerate_with: Option<(usize, f64)>,
}

/// Relative tolerance for calling two critical couplings tied.
pub const MODE_TIE_TOL: f64 = 1e-9;

/// Softest pair over `j = 0 … ⌊N/2⌋` (for odd N this is `⌊(N−1)/2⌋`; even N adds `k = π`).
pub fn critical_mode(p: &ModelParams) -> CriticalMode {
    let n = p.n_sites;
    let mut gs: Vec<(usize, f64)> = (0..n_pairs(n)).map(|j| (j, critical_coupling(p, momentum(n, j)))).collect();
    gs.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let (j, g_c) = gs[0];
    let degenerate_with = gs
        .get(1)
        .filter(|(_, g2)| (g2 - g_c).abs() <= MODE_TIE_TOL * g_c)
        .map(|&(j2, _)| (j2, momentum(n, j2)));
    CriticalMode { j, k: momentum(n, j), g_c, degenerate_with }
}

/// `g_c(θ) = min_j g_c(k_j)`.
pub fn critical_coupling_theta(p: &ModelParams) -> f64 {
    critical_mode(p).g_c
}

/// Resolution of the initial bracket scan over θ.
pub const FLUX_SCAN_STEP: f64 = PI / 1024.0;

/// Root of `g_c(k_i) − g_c(k_j)` in θ ∈ (0, π). When several sign changes
/// exist the one with the smallest θ is refined.
pub fn flux_critical_point(p: &ModelParams, k_i: f64, k_j: f64) -> Result<f64, ModelError> {
    let f = |theta: f64| {
        let q = ModelParams { theta, ..*p };
        critical_coupling(&q, k_i) - critical_coupling(&q, k_j)
    };
    let fail = ModelError::NoRootInInterval { k_i, k_j };
    let steps = (PI / FLUX_SCAN_STEP).round() as usize;
    let mut lo = 1e-9;
    let mut flo = f(lo);
    for s in 1..=steps {
        let hi = if s == steps { PI - 1e-9 } else { s as f64 * FLUX_SCAN_STEP };
        let fhi = f(hi);
        if flo.abs() > 1e-13 && fhi.abs() > 1e-13 && flo.signum() != fhi.signum() {
            return Ok(bisect(f, lo, hi, flo));
        }
        if fhi == 0.0 && flo.abs() > 1e-13 {
            return Ok(hi);
        }
        lo = hi;
        flo = fhi;
    }
    Err(fail)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm.abs() < 1e-15 || mid <= lo || mid >= hi {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Flux critical points between neighbouring modes,
/// `[θ_c^{k1,k0}, θ_c^{k2,k1}, …]`, strictly decreasing.
pub fn flux_critical_points(p: &ModelParams) -> Result<Vec<f64>, ModelError> {
    let n = p.n_sites;
    let mut out = Vec::new();
    for j in 0..(n_pairs(n) - 1) {
        out.push(flux_critical_point(p, momentum(n, j + 1), momentum(n, j))?);
    }
    Ok(out)
}

/// Kinks of `g_c(θ)`: flux points where the softest mode changes, ascending in θ.
pub fn mode_switch_points(p: &ModelParams) -> Result<Vec<(f64, usize, usize)>, ModelError> {
    let thetas = flux_critical_points(p)?;
    let mut out: Vec<(f64, usize, usize)> =
        thetas.iter().enumerate().map(|(j, &t)| (t, j + 1, j)).collect();
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn dispersion_examples() {
        let p = ModelParams::new(3).with_theta(PI / 2.0);
        assert_relative_eq!(dispersion(&p, 0.0), 1.0, epsilon = 1e-15);
        let p0 = ModelParams::new(3).with_theta(0.0);
        assert_relative_eq!(dispersion(&p0, 0.0), 1.2, epsilon = 1e-15);
        let p4 = ModelParams::new(3).with_theta(PI / 4.0);
        assert_relative_eq!(dispersion(&p4, -2.0 * PI / 3.0), 0.806_814_834_742_186_3, epsilon = 1e-12);
    }

    #[test]
    fn delta_examples() {
        let p = ModelParams::new(3).with_theta(PI / 2.0);
        assert_eq!(delta_shift(&p, 0.0), 0.0);
        assert_relative_eq!(delta_shift(&p, 2.0 * PI / 3.0), 0.086_602_540_378_443_86, epsilon = 1e-12);
        let pi_ = ModelParams::new(3).with_theta(PI);
        assert!(delta_shift(&pi_, 1.0).abs() < 1e-16);
    }

    #[test]
    fn critical_coupling_examples() {
        let p = ModelParams::new(3).with_j(0.0).with_theta(1.0);
        assert_relative_eq!(critical_coupling(&p, 0.7), 1.0, epsilon = 1e-15);
        let p0 = ModelParams::new(3).with_theta(0.0);
        assert_relative_eq!(critical_coupling(&p0, 0.0), 1.2f64.sqrt(), epsilon = 1e-15);
        let p2 = ModelParams::new(3).with_theta(PI / 2.0);
        assert_relative_eq!(critical_coupling(&p2, -2.0 * PI / 3.0), 0.97f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn momentum_grid_is_symmetric() {
        for n in 3..10 {
            let grid = MomentumGrid::new(n);
            assert!(grid.contains(0.0));
            for &k in &grid.values {
                assert!(k > -PI && k <= PI);
                assert!(grid.contains(-k));
            }
        }
        assert_relative_eq!(momentum(3, 1), -2.0 * PI / 3.0, epsilon = 1e-15);
        assert_relative_eq!(momentum(3, 2), 2.0 * PI / 3.0, epsilon = 1e-15);
        assert_relative_eq!(momentum(4, 2), PI, epsilon = 1e-15);
    }

    #[test]
    fn critical_mode_regions() {
        let p = ModelParams::new(3).with_theta(3.0 * PI / 4.0);
        assert_eq!(critical_mode(&p).j, 0);
        let p = ModelParams::new(3).with_theta(PI / 4.0);
        let m = critical_mode(&p);
        assert_eq!(m.j, 1);
        assert_relative_eq!(m.k, -2.0 * PI / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn flux_points_n3_n5() {
        let p3 = ModelParams::new(3);
        let t = flux_critical_points(&p3).unwrap();
        assert_eq!(t.len(), 1);
        assert_relative_eq!(t[0], 1.669_030_454_236_296_8, epsilon = 1e-10);
        let p5 = ModelParams::new(5);
        let t = flux_critical_points(&p5).unwrap();
        assert_relative_eq!(t[0], 1.822_822_519_477_925_3, epsilon = 1e-10);
        assert_relative_eq!(t[1], 1.473_520_026_428_565, epsilon = 1e-10);
    }

    #[test]
    fn flux_point_fails_without_hopping() {
        let p = ModelParams::new(3).with_j(0.0);
        assert!(matches!(
            flux_critical_point(&p, momentum(3, 1), 0.0),
            Err(ModelError::NoRootInInterval { .. })
        ));
    }

    #[test]
    fn n5_mode_order_across_flux_points() {
        let p = ModelParams::new(5);
        let t = flux_critical_points(&p).unwrap();
        let below = critical_mode(&p.with_theta(t[1] - 1e-3));
        let above = critical_mode(&p.with_theta(t[1] + 1e-3));
        assert_eq!(below.j, 2);
        assert_eq!(above.j, 1);
        let tie = critical_mode(&p.with_theta(t[1]));
        assert!(tie.degenerate_with.is_some());
    }

    #[test]
    fn validation_lists_all_fields() {
        let p = ModelParams { n_sites: 2, omega: 1.0, omega_atom: -1.0, j_hop: 0.6, theta: 4.0, g: -1.0 };
        let errs = p.validate().unwrap_err();
        assert_eq!(errs.len(), 5);
    }
}
