//! Batch front-end for the `fluxdicke` library.
//!
//! Exit status: 0 on success, 1 when the configuration is invalid or the
//! output cannot be written, 2 when some grid cells failed. Output files are
//! replaced atomically, so a failed run never leaves a half-written file.

pub mod commands;
pub mod config;
pub mod output;
pub mod plot;

use std::time::Instant;

use clap::Parser;

use crate::config::{Cli, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_PARTIAL: i32 = 2;

pub fn main_with<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (kind, opts) = cli.command.split();
    let cfg = match RunConfig::resolve(kind, &opts) {
        Ok(c) => c,
        Err(errs) => {
            eprintln!("config error: {} invalid field(s)", errs.len());
            for e in errs {
                eprintln!("  {e}");
            }
            return EXIT_CONFIG;
        }
    };
    run(&cfg)
}

pub fn run(cfg: &RunConfig) -> i32 {
    if let Some(t) = cfg.threads {
        set_threads(t);
    }
    let start = Instant::now();
    let art = commands::execute(cfg);
    for e in &art.errors {
        eprintln!("cell failed: {e}");
    }
    if !art.body.is_empty() {
        if let Err(e) = output::write_atomic(&cfg.out, &art.body) {
            eprintln!("cannot write {}: {e}", cfg.out.display());
            return EXIT_CONFIG;
        }
    }
    if let (Some(path), Some(svg)) = (&cfg.plot, &art.plot) {
        if let Err(e) = output::write_atomic(path, svg) {
            eprintln!("cannot write {}: {e}", path.display());
            return EXIT_CONFIG;
        }
    }
    let target = if art.body.is_empty() { "nothing written".to_string() } else { format!("wrote {}", cfg.out.display()) };
    println!(
        "{}: {} cells, {} failures, {:.2}s, {target}",
        cfg.command,
        art.cells,
        art.failures,
        start.elapsed().as_secs_f64()
    );
    if art.failures > 0 {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    }
}

#[cfg(feature = "parallel")]
fn set_threads(t: usize) {
    // the global pool can be configured once per process; later calls keep the first size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) {}
