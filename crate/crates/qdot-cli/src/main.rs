use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use qdot_cli::sweep::{analyze_cnot, analyze_qubit};
use qdot_cli::{parse_config, read_csv, run_sweep, write_csv, write_figures, CsvMeta, RunConfig};
use qdot_core::constants::MEV;
use qdot_core::{double_well_potential, lowest_states, Eq57Variant};

#[derive(Parser)]
#[command(name = "qdot", version, about = "Double-dot charge qubit: spectra, gate timing and relaxation rates")]
struct Cli {
    /// Configuration file (`section.key = value` lines).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Longitudinal piezoelectric rate with the literal cos^4 integrand.
    #[arg(long, global = true)]
    paper_literal_eq57: bool,
    /// Leave the wall-clock timestamp out of CSV metadata.
    #[arg(long, global = true)]
    no_timestamp: bool,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lowest eigenstates of the double well at `well.w`.
    Solve,
    /// Splitting, NOT duration and localization at `well.w`.
    Characterize,
    /// Tuned CNOT pulse for every configured separation.
    Cnot,
    /// Relaxation rates by mechanism at `well.w`.
    Rates,
    /// Full pipeline over the configured sweep; writes `sweep.csv` and figures.
    Sweep,
    /// Redraws figures from a sweep CSV.
    Figures {
        /// Sweep CSV (default: `<out>/sweep.csv`).
        csv: Option<PathBuf>,
    },
}

fn load(cli: &Cli) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(p) => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        None => String::new(),
    };
    let mut cfg = parse_config(&text).map_err(|e| match &cli.config {
        Some(p) => anyhow::anyhow!("{}: {e}", p.display()),
        None => anyhow::anyhow!("{e}"),
    })?;
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if cli.paper_literal_eq57 {
        cfg.eq57 = Eq57Variant::PaperLiteral;
    }
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn solve(cfg: &RunConfig) -> Result<bool> {
    let dw = cfg.well_at(cfg.well.w);
    let s = lowest_states(&double_well_potential(&dw, cfg.grid()), dw.m_eff, &cfg.solver)?;
    println!("iterations = {}", s.iterations);
    for (i, (e, r)) in s.energies.iter().zip(s.relative_residuals()).enumerate() {
        println!("E{i} = {:.12e} meV (relative residual {r:.2e})", e / MEV);
    }
    println!("eps10 = {:.16e} J", s.eps10());
    println!("orthonormality error = {:.2e}", s.orthonormality_error());
    Ok(true)
}

fn characterize(cfg: &RunConfig) -> Result<bool> {
    let (_, q, _) = analyze_qubit(cfg, cfg.well.w)?;
    println!("eps10 = {:.16e} J", q.eps10);
    println!("delta_omega = {:.16e} rad/s", q.delta_omega);
    println!("t_not = {:.16e} s", q.t_not);
    println!("r = {:.6} nm", q.r);
    println!("right-half weight of |0> = {:.9}", q.loc0);
    println!("left-half weight of |1> = {:.9}", q.loc1);
    Ok(true)
}

fn rates(cfg: &RunConfig) -> Result<bool> {
    let (_, q, b) = analyze_qubit(cfg, cfg.well.w)?;
    println!("r = {:.6} nm, eps10 = {:.6e} J, d_x = {:.6e} C m", q.r, q.eps10, b.d_x);
    println!("photon = {:.6e} /s (bound {:.6e})", b.w_photon, b.w_photon_bound);
    println!("deformation = {:.6e} /s", b.w_da);
    println!("piezo transverse = {:.6e} /s", b.w_pa_t);
    println!("piezo longitudinal = {:.6e} /s ({})", b.w_pa_l, cfg.eq57);
    println!("total = {:.6e} /s, dominant = {}", b.total, b.dominant);
    println!("quadrature relative change on doubling = {:.2e}", b.quadrature_change);
    Ok(b.w_photon <= b.w_photon_bound)
}

fn cnot(cfg: &RunConfig) -> Result<bool> {
    if cfg.separations_nm.is_empty() {
        bail!("cnot.separations_nm is empty");
    }
    let (s, q, _) = analyze_qubit(cfg, cfg.well.w)?;
    let mut ok = true;
    for &big_r in &cfg.separations_nm {
        let (t, (id, not)) = analyze_cnot(cfg, cfg.well.w, &s, q.r, big_r)?;
        println!(
            "R = {big_r} nm: n = {} (n_real {:.9}), t_cnot = {:.9e} s, t_not0 = {:.9e} s, t_not1 = {:.9e} s, \
             V_B = {:.6} meV, swapped = {}, fidelities {id:.9}/{not:.9}, evaluations {}",
            t.n,
            t.n_real,
            t.t_cnot,
            t.t_not0,
            t.t_not1,
            t.v_b_tuned / MEV,
            t.swapped,
            t.evaluations
        );
        ok &= id.min(not) >= qdot_cli::sweep::MIN_CNOT_FIDELITY
            && t.consistency_error() <= qdot_cli::sweep::MAX_SCHEDULE_ERROR;
    }
    Ok(ok)
}

fn figures_into(rows: &[qdot_cli::SweepRow], cfg: &RunConfig) -> Result<()> {
    let (written, skipped) = write_figures(rows, &cfg.out_dir)?;
    for p in written {
        println!("wrote {}", p.display());
    }
    for notice in skipped {
        eprintln!("{notice}");
    }
    Ok(())
}

fn sweep(cfg: &RunConfig, timestamp: bool) -> Result<bool> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let rows = run_sweep(cfg);
    let stamp = timestamp.then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0));
    let path = cfg.out_dir.join("sweep.csv");
    write_csv(BufWriter::new(File::create(&path)?), &CsvMeta::for_run(cfg, stamp), &rows)?;
    println!("wrote {} ({} points)", path.display(), rows.len());
    let failed: Vec<_> = rows.iter().filter(|r| !r.succeeded()).collect();
    for r in &failed {
        eprintln!("point {} (w = {}): {}", r.index, r.w, r.error.as_deref().unwrap_or(""));
    }
    if cfg.emit_svg {
        figures_into(&rows, cfg)?;
    }
    Ok(failed.is_empty())
}

fn figures(cfg: &RunConfig, csv: Option<PathBuf>) -> Result<bool> {
    let path = csv.unwrap_or_else(|| cfg.out_dir.join("sweep.csv"));
    let file = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
    let (_, rows) = read_csv(file).with_context(|| format!("reading {}", path.display()))?;
    figures_into(&rows, cfg)?;
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = load(&cli)?;
    match cli.command {
        Command::Solve => solve(&cfg),
        Command::Characterize => characterize(&cfg),
        Command::Cnot => cnot(&cfg),
        Command::Rates => rates(&cfg),
        Command::Sweep => sweep(&cfg, !cli.no_timestamp),
        Command::Figures { csv } => figures(&cfg, csv),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
