//! One function per subcommand. Each returns the artifact text plus a count
//! of cells and failed cells; nothing here touches the filesystem.

use fluxdicke::criticality::{self, PhaseCell, PhaseLabel, Side};
use fluxdicke::gaussian;
use fluxdicke::meanfield::{self, ConfigClass, MeanFieldState};
use fluxdicke::{par, DD, ModelParams};
use serde::Serialize;

use crate::config::{CommandKind, RunConfig};
use crate::output::{num, Csv};
use crate::plot;

pub struct Artifact {
    pub body: String,
    pub plot: Option<String>,
    pub cells: usize,
    pub failures: usize,
    /// First few failure messages, for the log.
    pub errors: Vec<String>,
}

const MAX_REPORTED: usize = 5;

impl Artifact {
    fn new(body: String, cells: usize, errors: Vec<String>) -> Self {
        let failures = errors.len();
        let errors = errors.into_iter().take(MAX_REPORTED).collect();
        Artifact { body, plot: None, cells, failures, errors }
    }
}

pub fn execute(cfg: &RunConfig) -> Artifact {
    match cfg.command {
        CommandKind::Spectrum => spectrum(cfg),
        CommandKind::PhaseDiagram => phase_diagram(cfg),
        CommandKind::Meanfield => mean_field(cfg),
        CommandKind::Exponent => exponent(cfg),
        CommandKind::Observables => observables(cfg),
        CommandKind::Boundary => boundary(cfg),
    }
}

fn at(cfg: &RunConfig, theta: f64, g: f64) -> ModelParams {
    cfg.model.with_theta(theta).with_g(g)
}

fn ground(cfg: &RunConfig, p: &ModelParams) -> Result<MeanFieldState, String> {
    meanfield::minimize_landscape(p, &cfg.minimize_options()).map(|l| l.ground).map_err(|e| e.to_string())
}

fn signs(s: &[i8]) -> String {
    s.iter().map(|&v| if v > 0 { '+' } else { '-' }).collect()
}

fn spectrum(cfg: &RunConfig) -> Artifact {
    let theta = cfg.thetas()[0];
    let n2 = 2 * cfg.model.n_sites;
    let rows = par::map(&cfg.gs(), |&g| {
        let p = at(cfg, theta, g);
        let st = ground(cfg, &p)?;
        let (spec, _) = gaussian::analyze(&p, &st).map_err(|e| e.to_string())?;
        let mut e = spec.energies;
        e.sort_by(|a, b| a.total_cmp(b));
        Ok::<_, String>(e)
    });
    let mut header = vec!["g".to_string()];
    header.extend((1..=n2).map(|i| format!("eps_{i}")));
    let mut csv = Csv::new(&header);
    let mut errors = Vec::new();
    let mut gap = Vec::new();
    for (g, r) in cfg.gs().into_iter().zip(rows) {
        let e = r.unwrap_or_else(|msg| {
            errors.push(format!("g={g}: {msg}"));
            vec![f64::NAN; n2]
        });
        gap.push((g, e[0]));
        let mut row = vec![num(g)];
        row.extend(e.iter().map(|&v| num(v)));
        csv.row(&row);
    }
    let mut a = Artifact::new(csv.finish(), gap.len(), errors);
    if cfg.plot.is_some() {
        a.plot = Some(plot::line_chart(&format!("N = {}, theta = {theta}", cfg.model.n_sites), "g", "gap", &gap));
    }
    a
}

fn grid(cfg: &RunConfig) -> Vec<(f64, f64)> {
    // θ-major: every g for the first θ, then the next θ
    let gs = cfg.gs();
    cfg.thetas().into_iter().flat_map(|t| gs.iter().map(move |&g| (t, g))).collect()
}

const LEGEND: [(&str, &str); 5] =
    [("NP", "#d9e6f2"), ("ANP", "#8fb3d9"), ("SP", "#f2c48d"), ("FSP", "#c0504d"), ("error", "#999999")];

fn label_index(l: Option<PhaseLabel>) -> usize {
    match l {
        Some(PhaseLabel::Np) => 0,
        Some(PhaseLabel::Anp) => 1,
        Some(PhaseLabel::Sp) => 2,
        Some(PhaseLabel::Fsp) => 3,
        None => 4,
    }
}

fn phase_diagram(cfg: &RunConfig) -> Artifact {
    let pts = grid(cfg);
    let opts = cfg.minimize_options();
    let cells: Vec<PhaseCell> = par::map(&pts, |&(t, g)| criticality::classify_cell_with(&at(cfg, t, g), &opts));
    let mut csv = Csv::new(&["theta", "g", "label", "critical_k_index", "gap", "energy", "signs", "n_ferro_pairs", "degeneracy"]);
    let mut errors = Vec::new();
    for c in &cells {
        if let Some(e) = &c.error {
            errors.push(format!("theta={} g={}: {e}", c.theta, c.g));
        }
        let (s, pairs, deg) = match &c.config {
            Some(cl) => (signs(&cl.signs), cl.n_ferro_pairs.to_string(), cl.degeneracy.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        let label = c.label.map_or("", PhaseLabel::as_str);
        csv.row(&[num(c.theta), num(c.g), label.into(), c.critical_j.to_string(), num(c.gap), num(c.energy), s, pairs, deg]);
    }
    let mut a = Artifact::new(csv.finish(), cells.len(), errors);
    if cfg.plot.is_some() {
        let marks: Vec<(f64, f64, usize)> =
            cells.iter().map(|c| (c.g, c.theta, if c.error.is_some() { 4 } else { label_index(c.label) })).collect();
        a.plot = Some(plot::heat_map(&format!("N = {}", cfg.model.n_sites), "g", "theta", &marks, &LEGEND));
    }
    a
}

fn mean_field(cfg: &RunConfig) -> Artifact {
    let n = cfg.model.n_sites;
    let pts = grid(cfg);
    let rows = par::map(&pts, |&(t, g)| {
        let p = at(cfg, t, g);
        let st = ground(cfg, &p)?;
        let cl = meanfield::classify(&p, &st).map_err(|e| e.to_string())?;
        Ok::<(MeanFieldState, ConfigClass), String>((st, cl))
    });
    let mut header: Vec<String> =
        ["theta", "g", "energy", "excess", "signs", "n_ferro_pairs", "degeneracy", "orbit_size", "frustrated"].map(String::from).to_vec();
    header.extend((1..=n).map(|i| format!("x_{i}")));
    let mut csv = Csv::new(&header);
    let mut errors = Vec::new();
    for (&(t, g), r) in pts.iter().zip(rows) {
        let mut row = vec![num(t), num(g)];
        match r {
            Ok((st, cl)) => {
                let s = if st.is_normal() { String::new() } else { signs(&cl.signs) };
                row.extend([num(st.energy), num(st.excess), s]);
                row.extend([cl.n_ferro_pairs, cl.degeneracy, cl.orbit_size, cl.frustrated as usize].map(|v| v.to_string()));
                row.extend(st.x.iter().map(|&v| num(v)));
            }
            Err(e) => {
                errors.push(format!("theta={t} g={g}: {e}"));
                row.extend(["nan", "nan", "", "", "", "", ""].map(String::from));
                row.extend((0..n).map(|_| num(f64::NAN)));
            }
        }
        csv.row(&row);
    }
    Artifact::new(csv.finish(), pts.len(), errors)
}

#[derive(Serialize)]
struct ExponentJson {
    exponent: f64,
    prefactor: f64,
    r2: f64,
    window_lo: f64,
    window_hi: f64,
    side: String,
    g_c: f64,
}

fn exponent(cfg: &RunConfig) -> Artifact {
    let p = cfg.model.with_theta(cfg.thetas()[0]);
    let fit = criticality::locate_gc(&p).and_then(|gc| {
        let off = criticality::log_offsets(cfg.window.0, cfg.window.1, cfg.points);
        let series = match cfg.side {
            Side::Below => criticality::gap_series_below(&p, gc, &off)?,
            // the gap above g_c closes faster than f64 can resolve the minimum
            Side::Above => criticality::gap_series_above::<DD>(&p, gc, &off)?,
        };
        criticality::fit_exponent(&series, gc, cfg.side).map(|f| (gc, f))
    });
    match fit {
        Ok((g_c, f)) => {
            let j = ExponentJson {
                exponent: f.exponent,
                prefactor: f.prefactor,
                r2: f.r_squared,
                window_lo: f.window.0,
                window_hi: f.window.1,
                side: f.side.to_string(),
                g_c,
            };
            let body = serde_json::to_string_pretty(&j).expect("plain struct serializes") + "\n";
            Artifact::new(body, cfg.points, Vec::new())
        }
        Err(e) => Artifact::new(String::new(), cfg.points, vec![e.to_string()]),
    }
}

fn observables(cfg: &RunConfig) -> Artifact {
    let theta = cfg.thetas()[0];
    let n = cfg.model.n_sites;
    let gs = cfg.gs();
    let rows = par::map(&gs, |&g| {
        let p = at(cfg, theta, g);
        let st = ground(cfg, &p)?;
        gaussian::analyze(&p, &st).map(|(_, obs)| obs).map_err(|e| e.to_string())
    });
    let mut csv = Csv::new(&["g", "site", "photon_number", "entanglement", "diverged_flag"]);
    let mut errors = Vec::new();
    for (&g, r) in gs.iter().zip(rows) {
        match r {
            Ok(obs) => {
                for (i, s) in obs.sites.iter().enumerate() {
                    let flag = (obs.diverged as u8).to_string();
                    csv.row(&[num(g), (i + 1).to_string(), num(s.photon_number), num(s.entanglement), flag]);
                }
            }
            Err(e) => {
                errors.push(format!("g={g}: {e}"));
                for i in 0..n {
                    csv.row(&[num(g), (i + 1).to_string(), num(f64::NAN), num(f64::NAN), String::new()]);
                }
            }
        }
    }
    Artifact::new(csv.finish(), gs.len(), errors)
}

/// Continuous boundary `g_c(θ)` on the θ grid, then for each `g` the flux
/// values of first-order lines inside the θ range.
fn boundary(cfg: &RunConfig) -> Artifact {
    let thetas = cfg.thetas();
    let (lo, hi) = (thetas[0], thetas[thetas.len() - 1]);
    let mut csv = Csv::new(&["kind", "theta", "g", "critical_k_index"]);
    let trace = criticality::trace_continuous_boundary(&cfg.model, &thetas);
    for b in &trace {
        csv.row(&["continuous".to_string(), num(b.theta), num(b.g_c), b.critical_j.to_string()]);
    }
    let gs = cfg.gs();
    let lines = par::map(&gs, |&g| meanfield::first_order_boundary(&cfg.model.with_g(g), g));
    for (&g, ts) in gs.iter().zip(lines) {
        for t in ts.into_iter().filter(|t| (lo..=hi).contains(t)) {
            csv.row(&["first_order".to_string(), num(t), num(g), String::new()]);
        }
    }
    Artifact::new(csv.finish(), trace.len() + gs.len(), Vec::new())
}
