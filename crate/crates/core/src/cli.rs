//! Command-line front end.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::acceptance::{run_suite, Budget};
use crate::cellsystem::{analytic_phi, freeze, frozen_empirical, simulate_cell_system, simulate_spine, DEFAULT_CELL_CAP};
use crate::config::RunConfig;
use crate::cumulant::{eval_big_psi, eval_kappa, eval_kappa_deriv, eval_psi, find_roots, CumulantTable};
use crate::fspec::FSpec;
use crate::homogeneous::{
    additive_martingale, simulate_branching_levy, window_statistics, SimLimits,
};
use crate::levypath::{exponential_functional, LevyDynamics};
use crate::mclab::{median_result, run_replicas, McResult};
use crate::measures::Mode;
use crate::numeric::quantile_sorted;
use crate::stream::StreamKey;

/// Exit code for a successful run.
pub const EXIT_OK: i32 = 0;
/// Exit code for invalid input or a failed computation.
pub const EXIT_INVALID: i32 = 1;
/// Exit code for a completed verification with failing criteria.
pub const EXIT_ACCEPTANCE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "gfrag", version, about = "Growth-fragmentation simulation and verification toolkit")]
struct Cli {
    /// Worker threads (0 uses every core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cumulant evaluation and root finding.
    #[command(subcommand)]
    Cumulant(CumulantCmd),
    /// Monte Carlo simulation of particle and cell systems.
    #[command(subcommand)]
    Sim(SimCmd),
    /// Tagged-cell and freezing studies.
    #[command(subcommand)]
    Study(StudyCmd),
    /// Verification suite.
    #[command(subcommand)]
    Verify(VerifyCmd),
}

#[derive(Subcommand, Debug)]
enum CumulantCmd {
    /// Tabulate κ, κ', κ'' and the Lévy exponent on a grid.
    Eval {
        #[arg(long)]
        config: PathBuf,
        /// Grid as LO:HI:STEP.
        #[arg(long = "q-grid")]
        q_grid: String,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the distinguished roots as JSON.
    Roots {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum SimCmd {
    /// Branching Lévy process of a homogeneous model.
    Homogeneous {
        #[command(flatten)]
        common: Common,
        /// Final time; snapshots are taken on the configured t-grid up to it.
        #[arg(long = "t")]
        t: Option<f64>,
        #[arg(long)]
        floor: Option<f64>,
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Self-similar cell system.
    Cellsystem {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        horizon: Option<f64>,
        #[arg(long)]
        floor: Option<f64>,
        /// Write the first replica's genealogy as JSON lines.
        #[arg(long = "dump-genealogy")]
        dump_genealogy: bool,
    },
}

#[derive(Subcommand, Debug)]
enum StudyCmd {
    /// Statistics of the tagged cell along the configured t-grid.
    Spine {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Frozen-cell family against the closed-form limit.
    Freeze {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        epsilon: Option<f64>,
    },
}

#[derive(Subcommand, Debug)]
enum VerifyCmd {
    /// Run every acceptance criterion and write acceptance.json.
    All {
        /// Only the seed is read from the config; models are built in.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "smoke")]
        budget: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Runs the tool on `args` (including the program name) and returns the
/// process exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            EXIT_INVALID
        }
    }
}

fn run(cli: Cli) -> Result<i32, String> {
    let workers = cli.workers;
    match cli.command {
        Command::Cumulant(CumulantCmd::Eval { config, q_grid, out }) => {
            let cfg = RunConfig::load(&config).map_err(|e| e.to_string())?;
            let text = cumulant_eval(&cfg, &q_grid)?;
            match out {
                Some(p) => write_file(&p, &text)?,
                None => print!("{text}"),
            }
            Ok(EXIT_OK)
        }
        Command::Cumulant(CumulantCmd::Roots { config }) => {
            let cfg = RunConfig::load(&config).map_err(|e| e.to_string())?;
            let table = find_roots(&cfg.quadruple().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
            let mut v = serde_json::to_value(table.summary()).map_err(|e| e.to_string())?;
            v["provenance"] = provenance_json(&cfg, resolve_seed(None, &cfg));
            println!("{}", serde_json::to_string_pretty(&v).map_err(|e| e.to_string())?);
            Ok(EXIT_OK)
        }
        Command::Sim(SimCmd::Homogeneous { common, t, floor, cap }) => {
            let cfg = RunConfig::load(&common.config).map_err(|e| e.to_string())?;
            sim_homogeneous(&cfg, &common, t, floor, cap, workers)?;
            Ok(EXIT_OK)
        }
        Command::Sim(SimCmd::Cellsystem { common, alpha, horizon, floor, dump_genealogy }) => {
            let cfg = RunConfig::load(&common.config).map_err(|e| e.to_string())?;
            sim_cellsystem(&cfg, &common, alpha, horizon, floor, dump_genealogy, workers)?;
            Ok(EXIT_OK)
        }
        Command::Study(StudyCmd::Spine { common, alpha }) => {
            let cfg = RunConfig::load(&common.config).map_err(|e| e.to_string())?;
            study_spine(&cfg, &common, alpha, workers)?;
            Ok(EXIT_OK)
        }
        Command::Study(StudyCmd::Freeze { common, epsilon }) => {
            let cfg = RunConfig::load(&common.config).map_err(|e| e.to_string())?;
            study_freeze(&cfg, &common, epsilon, workers)?;
            Ok(EXIT_OK)
        }
        Command::Verify(VerifyCmd::All { config, budget, seed, out }) => {
            let budget: Budget = budget.parse()?;
            let cfg_seed = match &config {
                Some(p) => RunConfig::load(p).map_err(|e| e.to_string())?.seed,
                None => 0,
            };
            let seed = seed.or_else(env_seed).unwrap_or(cfg_seed);
            let report = run_suite(seed, budget, workers, |c| {
                eprintln!(
                    "criterion {:>2} {:<36} {}  observed {:.6}",
                    c.criterion_id,
                    c.name,
                    if c.pass { "PASS" } else { "FAIL" },
                    c.observed
                );
            });
            fs::create_dir_all(&out).map_err(|e| e.to_string())?;
            write_file(&out.join("acceptance.json"), &report.to_json())?;
            Ok(if report.all_pass() { EXIT_OK } else { EXIT_ACCEPTANCE })
        }
    }
}

fn env_seed() -> Option<u64> {
    std::env::var("GFRAG_SEED").ok().and_then(|s| s.trim().parse().ok())
}

/// Flag, then `GFRAG_SEED`, then the config file.
fn resolve_seed(flag: Option<u64>, cfg: &RunConfig) -> u64 {
    flag.or_else(env_seed).unwrap_or(cfg.seed)
}

fn provenance_json(cfg: &RunConfig, seed: u64) -> serde_json::Value {
    json!({ "tool": "gfrag", "version": env!("CARGO_PKG_VERSION"), "config_hash": cfg.hash(), "seed": seed })
}

fn provenance_line(cfg: &RunConfig, seed: u64) -> String {
    format!("# gfrag {} config_hash={} seed={}\n", env!("CARGO_PKG_VERSION"), cfg.hash(), seed)
}

fn write_file(path: &Path, text: &str) -> Result<(), String> {
    let mut f = fs::File::create(path).map_err(|e| format!("{}: {e}", path.display()))?;
    f.write_all(text.as_bytes()).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_grid(text: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<f64> = text
        .split(':')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("bad grid `{text}`, expected LO:HI:STEP"))?;
    let [lo, hi, step] = parts[..] else {
        return Err(format!("bad grid `{text}`, expected LO:HI:STEP"));
    };
    if !(step > 0.0 && hi >= lo) {
        return Err(format!("bad grid `{text}`: need HI ≥ LO and STEP > 0"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| lo + step * i as f64).collect())
}

fn fmt(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn cumulant_eval(cfg: &RunConfig, grid: &str) -> Result<String, String> {
    let model = cfg.quadruple().map_err(|e| e.to_string())?;
    let qs = parse_grid(grid)?;
    let mut s = provenance_line(cfg, resolve_seed(None, cfg));
    s.push_str("q,kappa,kappa1,kappa2,psi\n");
    for q in qs {
        let k1 = eval_kappa_deriv(&model, q, 1).unwrap_or(f64::NAN);
        let k2 = eval_kappa_deriv(&model, q, 2).unwrap_or(f64::NAN);
        let psi = match model.mode() {
            Mode::Homogeneous => eval_psi(&model, q),
            Mode::SelfSimilar => eval_big_psi(&model, q),
        }
        .unwrap_or(f64::NAN);
        writeln!(s, "{},{},{},{},{}", fmt(q), fmt(eval_kappa(&model, q)), fmt(k1), fmt(k2), fmt(psi)).unwrap();
    }
    Ok(s)
}

fn snapshot_times(cfg: &RunConfig, last: f64) -> Vec<f64> {
    let mut ts: Vec<f64> = cfg.experiment.t_grid.iter().copied().filter(|&t| t <= last).collect();
    if ts.last() != Some(&last) {
        ts.push(last);
    }
    ts
}

fn sim_homogeneous(
    cfg: &RunConfig,
    common: &Common,
    t: Option<f64>,
    floor: Option<f64>,
    cap: Option<usize>,
    workers: usize,
) -> Result<(), String> {
    let model = cfg.quadruple().map_err(|e| e.to_string())?;
    if model.mode() != Mode::Homogeneous {
        return Err("sim homogeneous needs a homogeneous model".into());
    }
    let table = CumulantTable::build(&model);
    let seed = resolve_seed(common.seed, cfg);
    let n = common.replicas.unwrap_or(cfg.simulation.replicas);
    let times = snapshot_times(cfg, t.unwrap_or(cfg.simulation.horizon));
    let limits = SimLimits {
        floor: floor.unwrap_or(cfg.simulation.floor),
        cap: cap.unwrap_or(cfg.simulation.cap),
    };
    let qs = cfg.experiment.q_grid.clone();
    let runs = run_replicas(n, seed, "sim-homogeneous", workers, |_, rng| {
        simulate_branching_levy(&model, &times, rng, limits)
    })
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    let kept: Vec<_> = runs.iter().filter(|o| !o.capped).collect();
    let discarded = runs.len() - kept.len();
    if kept.is_empty() {
        return Err("every replica hit the population cap".into());
    }
    fs::create_dir_all(&common.out).map_err(|e| e.to_string())?;
    let head = provenance_line(cfg, seed);

    let mut mart = head.clone() + "t,q,mean,stderr,n\n";
    for (k, &t) in times.iter().enumerate() {
        for &q in &qs {
            let r = McResult::from_samples(
                &kept.iter().map(|o| additive_martingale(&model, o, k, q).value).collect::<Vec<_>>(),
                discarded,
            );
            writeln!(mart, "{},{},{},{},{}", t, q, fmt(r.estimate), fmt(r.stderr), r.n_replicas).unwrap();
        }
    }
    write_file(&common.out.join("martingale.csv"), &mart)?;

    let mut largest = head.clone() + "t,median_logZ1,iqr,n_survive\n";
    for (k, &t) in times.iter().enumerate() {
        let mut v: Vec<f64> = kept.iter().filter_map(|o| o.states[k].largest()).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let (med, iqr) = if v.is_empty() {
            (f64::NAN, f64::NAN)
        } else {
            (median_result(&v, 0).estimate, quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25))
        };
        writeln!(largest, "{},{},{},{}", t, fmt(med), fmt(iqr), v.len()).unwrap();
    }
    write_file(&common.out.join("largest.csv"), &largest)?;

    let mut windows = head + "t,q,U_hat,V_hat,stderr_U,stderr_V\n";
    for (k, &t) in times.iter().enumerate() {
        for &q in &qs {
            let Ok(k1) = table.kappa_deriv(q, 1) else { continue };
            let stats: Vec<(bool, usize)> = kept
                .iter()
                .map(|o| window_statistics(&o.states[k], k1, -1.0, 1.0))
                .collect::<Result<_, _>>()
                .map_err(|e| e.to_string())?;
            let u = McResult::from_samples(&stats.iter().map(|s| s.0 as u8 as f64).collect::<Vec<_>>(), 0);
            let v = McResult::from_samples(&stats.iter().map(|s| s.1 as f64).collect::<Vec<_>>(), 0);
            writeln!(windows, "{},{},{},{},{},{}", t, q, fmt(u.estimate), fmt(v.estimate), fmt(u.stderr), fmt(v.stderr))
                .unwrap();
        }
    }
    write_file(&common.out.join("windows.csv"), &windows)
}

fn self_similar_setup(cfg: &RunConfig) -> Result<(LevyDynamics, CumulantTable, f64), String> {
    let model = cfg.quadruple().map_err(|e| e.to_string())?;
    if model.mode() != Mode::SelfSimilar {
        return Err("this command needs a self-similar model".into());
    }
    let dynamics = LevyDynamics::from_self_similar(&model).map_err(|e| e.to_string())?;
    let table = find_roots(&model).map_err(|e| e.to_string())?;
    let om = table.omega_minus().map_err(|e| e.to_string())?;
    Ok((dynamics, table, om))
}

/// Ten equal bins on the support of the frozen-size ratio.
fn freeze_bins(lo: f64) -> Vec<(f64, f64)> {
    (0..10)
        .map(|k| (lo + (1.0 - lo) * k as f64 / 10.0, lo + (1.0 - lo) * (k + 1) as f64 / 10.0))
        .collect()
}

fn frozen_rows(
    dynamics: &LevyDynamics,
    table: &CumulantTable,
    om: f64,
    epsilons: &[f64],
    n: usize,
    seed: u64,
    workers: usize,
) -> Result<String, String> {
    let phi = analytic_phi(table).map_err(|e| e.to_string())?;
    let bins = freeze_bins(phi.support_lo());
    let mut out = String::from("epsilon,bin_lo,bin_hi,mass_mean,mass_stderr,phi_target\n");
    for &eps in epsilons {
        let purpose = format!("freeze-{eps}");
        let runs = run_replicas(n, seed, &purpose, workers, |i, _| {
            let fam = freeze(dynamics, eps, 1.0, StreamKey::for_replica(seed, &purpose, i), 50_000_000, false)?;
            Ok::<_, crate::cellsystem::CellError>(
                bins.iter()
                    .map(|&(a, b)| frozen_empirical(&fam, eps, om, &FSpec::Interval { lo: a, hi: b, closed_lo: true, closed_hi: false }))
                    .collect::<Vec<_>>(),
            )
        })
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
        for (k, &(a, b)) in bins.iter().enumerate() {
            let r = McResult::from_samples(&runs.iter().map(|v| v[k]).collect::<Vec<_>>(), 0);
            let target = phi.integrate(&FSpec::open(a, b));
            writeln!(out, "{},{},{},{},{},{}", eps, a, b, fmt(r.estimate), fmt(r.stderr), fmt(target)).unwrap();
        }
    }
    Ok(out)
}

fn sim_cellsystem(
    cfg: &RunConfig,
    common: &Common,
    alpha: Option<f64>,
    horizon: Option<f64>,
    floor: Option<f64>,
    dump: bool,
    workers: usize,
) -> Result<(), String> {
    let (dynamics, table, om) = self_similar_setup(cfg)?;
    let alpha = alpha.unwrap_or(cfg.model.alpha);
    let horizon = horizon.unwrap_or(cfg.simulation.horizon);
    let floor = floor.unwrap_or(cfg.simulation.floor);
    let seed = resolve_seed(common.seed, cfg);
    let n = common.replicas.unwrap_or(cfg.simulation.replicas);
    let times = snapshot_times(cfg, horizon);
    let fs_ = &cfg.experiment.f_specs;
    let cap = cfg.simulation.cap.min(DEFAULT_CELL_CAP);
    let runs = run_replicas(n, seed, "sim-cellsystem", workers, |i, _| {
        let key = StreamKey::for_replica(seed, "sim-cellsystem", i);
        let g = simulate_cell_system(&dynamics, alpha, 1.0, horizon, floor, key, cap)?;
        let mut row = Vec::new();
        for &t in &times {
            let (m, b) = g.malthusian_martingale(t, om);
            row.push(m);
            row.push(b);
            if alpha > 0.0 {
                row.extend(fs_.iter().map(|f| g.empirical_rho(t, f, om)));
            }
        }
        let dumped = (dump && i == 0).then(|| genealogy_jsonl(&g));
        Ok::<_, crate::cellsystem::CellError>((row, g.capped, dumped))
    })
    .map_err(|e| e.to_string())?
    .into_iter()
    .collect::<Result<Vec<_>, _>>()
    .map_err(|e| e.to_string())?;
    let kept: Vec<_> = runs.iter().filter(|r| !r.1).collect();
    let discarded = runs.len() - kept.len();
    if kept.is_empty() {
        return Err("every replica hit the cell cap".into());
    }
    fs::create_dir_all(&common.out).map_err(|e| e.to_string())?;
    let head = provenance_line(cfg, seed);
    let stride = 2 + if alpha > 0.0 { fs_.len() } else { 0 };
    let col = |j: usize| McResult::from_samples(&kept.iter().map(|r| r.0[j]).collect::<Vec<_>>(), discarded);

    let mut mal = head.clone() + "t,mean,stderr,bias_bound,n\n";
    for (k, &t) in times.iter().enumerate() {
        let m = col(k * stride);
        let b = col(k * stride + 1);
        writeln!(mal, "{},{},{},{},{}", t, fmt(m.estimate), fmt(m.stderr), fmt(b.estimate), m.n_replicas).unwrap();
    }
    write_file(&common.out.join("malthusian.csv"), &mal)?;

    let mut rho = head.clone() + "t,f_id,mean,stderr,target,target_stderr\n";
    if alpha > 0.0 {
        let spine = LevyDynamics::spine(&table).map_err(|e| e.to_string())?;
        let norm = -alpha * table.kappa_deriv(om, 1).map_err(|e| e.to_string())?;
        let ef = run_replicas(n, seed, "sim-cellsystem-ef", workers, |_, rng| {
            exponential_functional(&spine, alpha, rng, 1e-10)
        })
        .map_err(|e| e.to_string())?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
        for (j, f) in fs_.iter().enumerate() {
            let target = McResult::from_samples(
                &ef.iter().map(|i| f.eval(i.powf(1.0 / alpha)) / i / norm).collect::<Vec<_>>(),
                0,
            );
            for (k, &t) in times.iter().enumerate() {
                let r = col(k * stride + 2 + j);
                writeln!(rho, "{},{},{},{},{},{}", t, f.id(), fmt(r.estimate), fmt(r.stderr), fmt(target.estimate), fmt(target.stderr))
                    .unwrap();
            }
        }
    }
    write_file(&common.out.join("rho.csv"), &rho)?;

    let frozen = frozen_rows(&dynamics, &table, om, &cfg.experiment.epsilon, n, seed, workers)?;
    write_file(&common.out.join("frozen.csv"), &(head + &frozen))?;

    if let Some(text) = runs.iter().find_map(|r| r.2.clone()) {
        write_file(&common.out.join("genealogy.jsonl"), &text)?;
    }
    Ok(())
}

fn genealogy_jsonl(g: &crate::cellsystem::Genealogy) -> String {
    let mut s = String::new();
    for c in &g.cells {
        let line = json!({
            "label": c.label,
            "b_u": c.birth_time,
            "size": c.initial_size,
            "children": c.children.iter().map(|&(b, y)| json!([b, y])).collect::<Vec<_>>(),
        });
        s.push_str(&line.to_string());
        s.push('\n');
    }
    s
}

fn study_spine(cfg: &RunConfig, common: &Common, alpha: Option<f64>, workers: usize) -> Result<(), String> {
    let (_, table, _) = self_similar_setup(cfg)?;
    let spine = LevyDynamics::spine(&table).map_err(|e| e.to_string())?;
    let alpha = alpha.unwrap_or(cfg.model.alpha);
    let seed = resolve_seed(common.seed, cfg);
    let n = common.replicas.unwrap_or(cfg.simulation.replicas);
    let times = cfg.experiment.t_grid.clone();
    let horizon = times.last().copied().unwrap_or(0.0);
    let runs = run_replicas(n, seed, "study-spine", workers, |_, rng| {
        let p = simulate_spine(&spine, alpha, 1.0, horizon, rng);
        times.iter().map(|&t| p.value_at(t).unwrap_or(0.0)).collect::<Vec<_>>()
    })
    .map_err(|e| e.to_string())?;
    fs::create_dir_all(&common.out).map_err(|e| e.to_string())?;
    let mut s = provenance_line(cfg, seed) + "t,mean_log_size,stderr_log_size,mean_size,stderr_size,target_mean_size\n";
    for (k, &t) in times.iter().enumerate() {
        let logs = McResult::from_samples(&runs.iter().map(|r| r[k].ln()).collect::<Vec<_>>(), 0);
        let size = McResult::from_samples(&runs.iter().map(|r| r[k]).collect::<Vec<_>>(), 0);
        let target = if alpha == 0.0 { (t * table.phi_minus(1.0).map_err(|e| e.to_string())?).exp() } else { f64::NAN };
        writeln!(s, "{},{},{},{},{},{}", t, fmt(logs.estimate), fmt(logs.stderr), fmt(size.estimate), fmt(size.stderr), fmt(target))
            .unwrap();
    }
    write_file(&common.out.join("spine.csv"), &s)
}

fn study_freeze(cfg: &RunConfig, common: &Common, epsilon: Option<f64>, workers: usize) -> Result<(), String> {
    let (dynamics, table, om) = self_similar_setup(cfg)?;
    let seed = resolve_seed(common.seed, cfg);
    let n = common.replicas.unwrap_or(cfg.simulation.replicas);
    let eps = epsilon.map_or_else(|| cfg.experiment.epsilon.clone(), |e| vec![e]);
    let frozen = frozen_rows(&dynamics, &table, om, &eps, n, seed, workers)?;
    fs::create_dir_all(&common.out).map_err(|e| e.to_string())?;
    write_file(&common.out.join("frozen.csv"), &(provenance_line(cfg, seed) + &frozen))
}
