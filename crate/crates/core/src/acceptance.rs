//! The verification suite behind `verify all`.
//!
//! Every criterion runs on built-in reference models with streams derived
//! from one seed, so a report is a pure function of `(seed, budget)`.

use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::cellsystem::{
    analytic_phi, freeze, frozen_empirical, intrinsic_by_generation, naive_tail_replica, simulate_cell_system,
    simulate_spine, tail_replica,
};
use crate::config::digest;
use crate::cumulant::{eval_kappa, find_roots, CumulantTable};
use crate::fspec::FSpec;
use crate::homogeneous::{
    additive_martingale, largest_fragment_track, local_limit_factor, marginal_sampler_superposition, power_sum,
    rescaled_empirical, simulate_branching_levy, window_count_limit, window_statistics, SimLimits,
};
use crate::levypath::{exponential_functional, overshoot_limit_law, LevyDynamics};
use crate::mclab::{equivalence_test, median_result, ratio_of_means, run_replicas, slope_fit, McResult};
use crate::measures::spine_transform;
use crate::presets;
use crate::stream::StreamKey;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Smoke,
    Full,
}

impl Budget {
    /// Replica count for a criterion written for `full` replicas.
    pub fn replicas(self, full: usize) -> usize {
        match self {
            Budget::Full => full,
            Budget::Smoke => (full / 10).max(100),
        }
    }
}

impl FromStr for Budget {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "smoke" => Ok(Budget::Smoke),
            "full" => Ok(Budget::Full),
            _ => Err(format!("unknown budget `{s}` (expected smoke or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Criterion {
    pub criterion_id: u32,
    pub name: String,
    pub observed: f64,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub details: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcceptanceReport {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub budget: Budget,
    pub config_hash: String,
    pub criteria: Vec<Criterion>,
}

impl AcceptanceReport {
    pub fn all_pass(&self) -> bool {
        self.criteria.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }

    pub fn get(&self, id: u32) -> Option<&Criterion> {
        self.criteria.iter().find(|c| c.criterion_id == id)
    }
}

#[derive(Serialize)]
struct SuiteKey {
    seed: u64,
    budget: Budget,
    suite: &'static str,
}

type Outcome = Result<Criterion, String>;

fn criterion(id: u32, name: &str, observed: f64, target: f64, tolerance: f64, pass: bool, details: Value) -> Criterion {
    Criterion { criterion_id: id, name: name.to_string(), observed, target, tolerance, pass, details }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn mc(values: Vec<f64>) -> McResult {
    McResult::from_samples(&values, 0)
}

/// Standard errors between `r` and `target` after allowing `slack` (a
/// pruning-bias bound plus floating-point rounding). Deterministic
/// statistics get zero when they match and infinity otherwise.
fn excess_z(r: &McResult, target: f64, slack: f64) -> f64 {
    let d = ((r.estimate - target).abs() - slack - 1e-12 * target.abs().max(1.0)).max(0.0);
    if d == 0.0 {
        0.0
    } else {
        d / r.stderr
    }
}

fn est(r: &McResult) -> Value {
    json!({ "estimate": r.estimate, "stderr": r.stderr, "n": r.n_replicas })
}

/// Runs criteria 1 to 15. `progress` receives each criterion as it completes.
pub fn run_suite(
    seed: u64,
    budget: Budget,
    workers: usize,
    mut progress: impl FnMut(&Criterion),
) -> AcceptanceReport {
    let mut report = run_core(seed, budget, workers, &mut progress);
    let c15 = determinism(seed, workers, (budget == Budget::Smoke).then_some(&report));
    progress(&c15);
    report.criteria.push(c15);
    report
}

fn run_core(seed: u64, budget: Budget, workers: usize, progress: &mut dyn FnMut(&Criterion)) -> AcceptanceReport {
    let ctx = Ctx { seed, budget, workers };
    let mut criteria = Vec::new();
    let mut push = |id: u32, name: &str, out: Outcome, progress: &mut dyn FnMut(&Criterion)| {
        let c = out.unwrap_or_else(|e| criterion(id, name, f64::NAN, f64::NAN, f64::NAN, false, json!({ "error": e })));
        progress(&c);
        criteria.push(c);
    };
    push(1, "cumulant exactness", c1(), progress);
    push(2, "roots", c2(), progress);
    match ctx.homogeneous_means() {
        Ok((a, b)) => {
            push(3, "martingale means", Ok(a), progress);
            push(4, "growth identity", Ok(b), progress);
        }
        Err(e) => {
            push(3, "martingale means", Err(e.clone()), progress);
            push(4, "growth identity", Err(e), progress);
        }
    }
    push(5, "superposition equivalence", ctx.c5(), progress);
    match ctx.large_times() {
        Ok((a, b)) => {
            push(6, "supercritical martingale vanishes", Ok(a), progress);
            push(8, "largest-fragment velocity", Ok(b), progress);
        }
        Err(e) => {
            push(6, "supercritical martingale vanishes", Err(e.clone()), progress);
            push(8, "largest-fragment velocity", Err(e), progress);
        }
    }
    match ctx.local_limits() {
        Ok((a, b)) => {
            push(7, "local limit", Ok(a), progress);
            push(9, "window counts", Ok(b), progress);
        }
        Err(e) => {
            push(7, "local limit", Err(e.clone()), progress);
            push(9, "window counts", Err(e), progress);
        }
    }
    match ctx.cell_system() {
        Ok((a, b, c)) => {
            push(10, "self-similar martingales", Ok(a), progress);
            push(11, "many-to-one", Ok(b), progress);
            push(12, "empirical measure", Ok(c), progress);
        }
        Err(e) => {
            push(10, "self-similar martingales", Err(e.clone()), progress);
            push(11, "many-to-one", Err(e.clone()), progress);
            push(12, "empirical measure", Err(e), progress);
        }
    }
    push(13, "freezing", ctx.c13(), progress);
    push(14, "tail exponent", ctx.c14(), progress);
    criteria.sort_by_key(|c| c.criterion_id);
    AcceptanceReport {
        tool: "gfrag".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        seed,
        budget,
        config_hash: digest(&SuiteKey { seed, budget, suite: "verify-all" }),
        criteria,
    }
}

/// Criterion 15: two smoke runs of criteria 1 to 14 on different worker
/// counts must serialize to identical bytes.
fn determinism(seed: u64, workers: usize, first: Option<&AcceptanceReport>) -> Criterion {
    let a = match first {
        Some(r) => r.to_json(),
        None => run_core(seed, Budget::Smoke, workers, &mut |_| {}).to_json(),
    };
    let b = run_core(seed, Budget::Smoke, 1, &mut |_| {}).to_json();
    let same = a == b;
    criterion(
        15,
        "determinism",
        if same { 0.0 } else { 1.0 },
        0.0,
        0.0,
        same,
        json!({ "bytes": a.len(), "workers": [workers, 1], "identical": same }),
    )
}

fn c1() -> Outcome {
    let hom = presets::bin04();
    let ss = presets::bin04_self_similar();
    let closed = [0.0, 0.5, 1.0, 2.0, 5.0]
        .iter()
        .map(|&q| (eval_kappa(&hom, q) - (2f64.powf(1.0 - q) - 1.0 + 0.1 * q)).abs())
        .fold(0.0, f64::max);
    let agree = (1..=100)
        .map(|i| {
            let q = 0.1 * i as f64;
            (eval_kappa(&hom, q) - eval_kappa(&ss, q)).abs()
        })
        .fold(0.0, f64::max);
    let obs = closed.max(agree);
    Ok(criterion(
        1,
        "cumulant exactness",
        obs,
        0.0,
        1e-12,
        obs <= 1e-12,
        json!({ "closed_form_max_err": closed, "mode_agreement_max_err": agree }),
    ))
}

fn c2() -> Outcome {
    let t = find_roots(&presets::bin04()).map_err(err)?;
    let om = t.omega_minus().map_err(err)?;
    let op = t.omega_plus().map_err(err)?;
    let qb = t.q_bar().map_err(err)?;
    let dev = [(om - 1.1814).abs(), (op - 9.9802).abs(), (qb - 2.4215).abs()];
    let res = [
        t.kappa(om).abs(),
        t.kappa(op).abs(),
        (qb * t.kappa_deriv(qb, 1).map_err(err)? - t.kappa(qb)).abs(),
    ];
    let obs = dev.iter().copied().fold(0.0, f64::max);
    let worst_res = res.iter().copied().fold(0.0, f64::max);
    Ok(criterion(
        2,
        "roots",
        obs,
        0.0,
        1e-3,
        obs <= 1e-3 && worst_res <= 1e-10,
        json!({
            "omega_minus": om, "omega_plus": op, "q_bar": qb,
            "residuals": res, "residual_tolerance": 1e-10,
        }),
    ))
}

struct Ctx {
    seed: u64,
    budget: Budget,
    workers: usize,
}

impl Ctx {
    fn n(&self) -> usize {
        self.budget.replicas(10_000)
    }

    fn homogeneous_means(&self) -> Result<(Criterion, Criterion), String> {
        let m = presets::bin04();
        let qs = [0.5, 1.0, 1.5, 2.0];
        let ts = [1.0, 2.0, 4.0, 8.0];
        let runs = run_replicas(self.n(), self.seed, "martingale-means", self.workers, |_, rng| {
            simulate_branching_levy(&m, &ts, rng, SimLimits::default()).map(|out| {
                let sums: Vec<f64> = out
                    .states
                    .iter()
                    .flat_map(|s| qs.iter().map(|&q| power_sum(&s.log_sizes, q)).collect::<Vec<_>>())
                    .collect();
                let bias: Vec<f64> = ts
                    .iter()
                    .flat_map(|&t| qs.iter().map(move |&q| (t, q)))
                    .map(|(t, q)| out.pruning_bias(t, q, eval_kappa(&m, q)))
                    .collect();
                (sums, bias, out.capped)
            })
        })
        .map_err(err)?;
        let runs: Vec<_> = runs.into_iter().collect::<Result<_, _>>().map_err(err)?;
        let kept: Vec<_> = runs.iter().filter(|r| !r.2).collect();
        let discarded = runs.len() - kept.len();
        let mut mart = Vec::new();
        let mut growth = Vec::new();
        let (mut zm, mut zg) = (0.0f64, 0.0f64);
        for (i, &t) in ts.iter().enumerate() {
            for (j, &q) in qs.iter().enumerate() {
                let k = i * qs.len() + j;
                let kq = eval_kappa(&m, q);
                let sums: Vec<f64> = kept.iter().map(|r| r.0[k]).collect();
                let g = McResult::from_samples(&sums, discarded);
                let mm = McResult::from_samples(&sums.iter().map(|s| s * (-t * kq).exp()).collect::<Vec<_>>(), discarded);
                let bias = kept.iter().map(|r| r.1[k]).sum::<f64>() / kept.len() as f64;
                let (em, eg) = (excess_z(&mm, 1.0, bias), excess_z(&g, (t * kq).exp(), bias * (t * kq).exp()));
                zm = zm.max(em);
                zg = zg.max(eg);
                mart.push(json!({ "t": t, "q": q, "mean": mm.estimate, "stderr": mm.stderr, "excess_z": em, "bias_bound": bias }));
                growth.push(json!({ "t": t, "q": q, "mean": g.estimate, "stderr": g.stderr, "target": (t * kq).exp(), "excess_z": eg }));
            }
        }
        let details = |rows: Vec<Value>| json!({ "grid": rows, "n_replicas": kept.len(), "n_discarded": discarded });
        Ok((
            criterion(3, "martingale means", zm, 0.0, 3.0, zm <= 3.0, details(mart)),
            criterion(4, "growth identity", zg, 0.0, 3.0, zg <= 3.0, details(growth)),
        ))
    }

    fn c5(&self) -> Outcome {
        let m = presets::bin04();
        let (q, t) = (1.5, 2.0);
        let branching = run_replicas(self.n(), self.seed, "superposition-branching", self.workers, |_, rng| {
            simulate_branching_levy(&m, &[t], rng, SimLimits::default()).map(|o| power_sum(&o.states[0].log_sizes, q))
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
        let superposed = run_replicas(self.n(), self.seed, "superposition-marginal", self.workers, |_, rng| {
            marginal_sampler_superposition(&m, t, rng).map(|v| power_sum(&v, q))
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
        let a = mc(branching);
        let b = mc(superposed);
        let v = equivalence_test(&a, &b);
        Ok(criterion(
            5,
            "superposition equivalence",
            v.z.abs(),
            0.0,
            3.0,
            v.pass,
            json!({ "branching": est(&a), "superposition": est(&b), "analytic": (t * eval_kappa(&m, q)).exp() }),
        ))
    }

    fn large_times(&self) -> Result<(Criterion, Criterion), String> {
        let m = presets::bin04();
        let table = find_roots(&m).map_err(err)?;
        let times = [2.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
        let limits = SimLimits { floor: 1e-3, cap: 10_000_000 };
        let q = 3.0;
        let kq = table.kappa(q);
        let runs = run_replicas(self.n(), self.seed, "large-times", self.workers, |_, rng| {
            simulate_branching_levy(&m, &times, rng, limits).map(|out| {
                let mq: Vec<f64> = (0..times.len()).map(|k| additive_martingale(&m, &out, k, q).value).collect();
                let largest: Vec<Option<f64>> = out.states.iter().map(|s| s.largest()).collect();
                (mq, largest, out.pruning_bias(12.0, q, kq), out.capped)
            })
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
        let kept: Vec<_> = runs.iter().filter(|r| !r.3).collect();

        let mut medians = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            let med = median_result(&kept.iter().map(|r| r.0[k]).collect::<Vec<_>>(), runs.len() - kept.len());
            medians.push((t, med));
        }
        let even: Vec<&(f64, McResult)> = medians.iter().filter(|(t, _)| t % 2.0 == 0.0).collect();
        let decreasing = even.windows(2).all(|w| w[1].1.estimate < w[0].1.estimate);
        let unit_step_decreasing = medians[1..].windows(2).all(|w| w[1].1.estimate < w[0].1.estimate);
        let last = &medians[medians.len() - 1].1;
        let bias = kept.iter().map(|r| r.2).sum::<f64>() / kept.len() as f64;
        let c6 = criterion(
            6,
            "supercritical martingale vanishes",
            last.estimate,
            0.05,
            0.0,
            decreasing && last.estimate < 0.05,
            json!({
                "q": q,
                "medians": medians.iter().map(|(t, r)| json!({ "t": t, "median": r.estimate, "stderr": r.stderr })).collect::<Vec<_>>(),
                "decreasing_on_even_grid": decreasing,
                "decreasing_on_unit_grid": unit_step_decreasing,
                "below_threshold_at_12": last.estimate < 0.05,
                "floor": limits.floor,
                "pruning_bias_bound": bias,
            }),
        );

        let qb = table.q_bar().map_err(err)?;
        let target = table.kappa_deriv(qb, 1).map_err(err)?;
        let band = (target - 0.1, target + 0.05);
        let track_times = &times[1..];
        let largest: Vec<Vec<Option<f64>>> = kept.iter().map(|r| r.1[1..].to_vec()).collect();
        let report = largest_fragment_track(&largest, track_times, &table, band).map_err(err)?;
        let c8 = criterion(
            8,
            "largest-fragment velocity",
            report.fit.slope,
            target,
            0.1,
            report.fit.pass,
            json!({
                "band": [band.0, band.1],
                "slope_stderr": report.fit.slope_se,
                "rows": report.rows.iter().map(|r| json!({ "t": r.t, "median_log_z1": r.median_log_z1, "iqr": r.iqr, "n_survive": r.n_survive })).collect::<Vec<_>>(),
            }),
        );
        Ok((c6, c8))
    }

    fn local_limits(&self) -> Result<(Criterion, Criterion), String> {
        let m = presets::two_atom();
        let table = find_roots(&m).map_err(err)?;
        let times = [4.0, 6.0, 8.0];
        let f = FSpec::closed(1.0, std::f64::consts::E);
        let factor = local_limit_factor(&table, 1.0, &f).map_err(err)?;
        let k1 = table.kappa_deriv(1.0, 1).map_err(err)?;
        let q_hi = 3.0;
        let k3 = table.kappa_deriv(q_hi, 1).map_err(err)?;
        let runs = run_replicas(self.n(), self.seed, "local-limits", self.workers, |_, rng| {
            let out = simulate_branching_levy(&m, &times, rng, SimLimits::default()).map_err(err)?;
            let mut rows = Vec::new();
            for (k, st) in out.states.iter().enumerate() {
                let num = rescaled_empirical(st, &table, 1.0, &f).map_err(err)?;
                let den = factor * additive_martingale(&m, &out, k, 1.0).value;
                let (_, v1) = window_statistics(st, k1, -1.0, 1.0).map_err(err)?;
                let (u3, v3) = window_statistics(st, k3, -1.0, 1.0).map_err(err)?;
                rows.push([num, den, v1 as f64, u3 as u8 as f64, v3 as f64]);
            }
            Ok::<_, String>(rows)
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

        let col = |k: usize, j: usize| -> Vec<f64> { runs.iter().map(|r| r[k][j]).collect() };
        let mut rows = Vec::new();
        let mut l1 = Vec::new();
        let mut ratio8 = None;
        for (k, &t) in times.iter().enumerate() {
            let (num, den) = (col(k, 0), col(k, 1));
            let rom = ratio_of_means(&num, &den);
            let dev = mc(num.iter().zip(&den).map(|(a, b)| (a / b - 1.0).abs()).collect());
            rows.push(json!({ "t": t, "ratio": rom.estimate, "ratio_stderr": rom.stderr, "mean_abs_dev": dev.estimate, "mean_abs_dev_stderr": dev.stderr }));
            l1.push(dev.estimate);
            if t == 8.0 {
                ratio8 = Some(rom);
            }
        }
        let r8 = ratio8.ok_or("t = 8 missing")?;
        let monotone = l1.windows(2).all(|w| w[1] < w[0]);
        let c7 = criterion(
            7,
            "local limit",
            r8.estimate,
            1.0,
            0.15,
            (r8.estimate - 1.0).abs() <= 0.15 && monotone,
            json!({ "q": 1.0, "f": f, "grid": rows, "mean_abs_dev_decreasing": monotone }),
        );

        let t8 = 8.0;
        let k = times.iter().position(|&t| t == t8).ok_or("t = 8 missing")?;
        let scale = t8.sqrt() * (-(table.kappa(1.0) - k1) * t8).exp();
        let v = mc(col(k, 2).iter().map(|x| x * scale).collect());
        let mart = mc(col(k, 1).iter().map(|x| x / factor).collect());
        let target = window_count_limit(&table, 1.0, -1.0, 1.0).map_err(err)? * mart.estimate;
        let bin04_const = window_count_limit(&find_roots(&presets::bin04()).map_err(err)?, 1.0, -1.0, 1.0).map_err(err)?;
        let mut uv = Vec::new();
        for (k, &t) in times.iter().enumerate() {
            let r = ratio_of_means(&col(k, 3), &col(k, 4));
            uv.push((t, r));
        }
        let positive = uv.iter().all(|(_, r)| r.estimate > 0.0);
        let (r6, r8) = (uv[1].1.estimate, uv[2].1.estimate);
        let last_change = ((r8 - r6) / r8).abs();
        let stabilizing = last_change < 0.1;
        let rel = (v.estimate - target).abs() / target;
        let c9 = criterion(
            9,
            "window counts",
            v.estimate,
            target,
            0.25,
            rel <= 0.25 && positive && stabilizing,
            json!({
                "v_hat_scaled": est(&v),
                "relative_error": rel,
                "bin04_constant": bin04_const,
                "u_over_v_q": q_hi,
                "u_over_v": uv.iter().map(|(t, r)| json!({ "t": t, "ratio": r.estimate, "stderr": r.stderr })).collect::<Vec<_>>(),
                "u_over_v_last_relative_change": last_change,
            }),
        );
        Ok((c7, c9))
    }

    fn cell_system(&self) -> Result<(Criterion, Criterion, Criterion), String> {
        let model = presets::bin04_self_similar();
        let table = find_roots(&model).map_err(err)?;
        let om = table.omega_minus().map_err(err)?;
        let dynamics = LevyDynamics::from_self_similar(&model).map_err(err)?;
        let spine = LevyDynamics::spine(&table).map_err(err)?;
        let alpha = 1.0;
        let n = self.n();
        let m_times = [0.5, 1.0, 2.0];
        let decay_times = [1.0, 2.0, 4.0, 8.0];
        let m2o_fs = [FSpec::one(), FSpec::open(1.0, f64::INFINITY), FSpec::open(0.5, 2.0)];
        let rho_fs = [FSpec::closed(0.5, 2.0), FSpec::closed(0.25, 1.0), FSpec::closed(1.0, 4.0)];
        let floor = 1e-6;
        let runs = run_replicas(n, self.seed, "cell-system", self.workers, |i, _| {
            let key = StreamKey::for_replica(self.seed, "cell-system", i);
            let g = simulate_cell_system(&dynamics, alpha, 1.0, 8.0, floor, key, 5_000_000).map_err(err)?;
            let mut row = Vec::new();
            for &t in &m_times {
                row.push(g.malthusian_martingale(t, om).0);
            }
            for &t in &decay_times {
                row.push(g.power_sum(t, alpha + om));
            }
            for f in &m2o_fs {
                row.push(g.weighted_sum(1.0, f, om));
            }
            for f in &rho_fs {
                row.push(g.empirical_rho(8.0, f, om));
            }
            row.push(g.malthusian_martingale(8.0, om).1);
            Ok::<_, String>((row, g.capped))
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let kept: Vec<&Vec<f64>> = runs.iter().filter(|r| !r.1).map(|r| &r.0).collect();
        let discarded = runs.len() - kept.len();
        let col = |j: usize| McResult::from_samples(&kept.iter().map(|r| r[j]).collect::<Vec<_>>(), discarded);

        // Malthusian and intrinsic martingales.
        let mut zmax = 0.0f64;
        let mut mrows = Vec::new();
        for (j, &t) in m_times.iter().enumerate() {
            let r = col(j);
            let e = excess_z(&r, 1.0, 0.0);
            zmax = zmax.max(e);
            mrows.push(json!({ "t": t, "mean": r.estimate, "stderr": r.stderr, "excess_z": e }));
        }
        let ifloor = 1e-5;
        let intrinsic = run_replicas(n, self.seed, "intrinsic", self.workers, |i, _| {
            intrinsic_by_generation(&dynamics, om, 1.0, 2, ifloor, StreamKey::for_replica(self.seed, "intrinsic", i))
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
        let mut irows = Vec::new();
        for g in 0..3 {
            let r = mc(intrinsic.iter().map(|v| v[g].value).collect());
            let bias = intrinsic.iter().map(|v| v[g].bias_bound).sum::<f64>() / n as f64;
            let e = excess_z(&r, 1.0, bias);
            zmax = zmax.max(e);
            irows.push(json!({ "n": g, "mean": r.estimate, "stderr": r.stderr, "excess_z": e, "bias_bound": bias }));
        }
        let base = m_times.len();
        let decay: Vec<McResult> = (0..decay_times.len()).map(|j| col(base + j)).collect();
        let xs: Vec<f64> = decay_times.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = decay.iter().map(|r| r.estimate.ln()).collect();
        let ses: Vec<f64> = decay.iter().map(|r| r.stderr / r.estimate).collect();
        let fit = slope_fit(&xs, &ys, &ses, (-1.15, -0.85)).map_err(err)?;
        // Many-to-one turns the decay statistic into E[𝒯(t)] for the tagged
        // cell, which is cheap to follow to large t.
        let late = [64.0, 128.0, 256.0, 512.0];
        let late_runs = run_replicas(n, self.seed, "decay-late", self.workers, |_, rng| {
            late.iter().map(|&t| simulate_spine(&spine, alpha, 1.0, t, rng).value_at(t).unwrap_or(0.0)).collect::<Vec<_>>()
        })
        .map_err(err)?;
        let late_res: Vec<McResult> = (0..late.len()).map(|k| mc(late_runs.iter().map(|r| r[k]).collect())).collect();
        let late_fit = slope_fit(
            &late.iter().map(|t| t.ln()).collect::<Vec<_>>(),
            &late_res.iter().map(|r| r.estimate.ln()).collect::<Vec<_>>(),
            &late_res.iter().map(|r| r.stderr / r.estimate).collect::<Vec<_>>(),
            (-1.15, -0.85),
        )
        .map_err(err)?;
        let bias = col(kept[0].len() - 1);
        let c10 = criterion(
            10,
            "self-similar martingales",
            fit.slope,
            -1.0,
            0.15,
            zmax <= 3.0 && fit.pass,
            json!({
                "malthusian": mrows,
                "intrinsic": irows,
                "max_abs_z": zmax,
                "decay": decay_times.iter().zip(&decay).map(|(t, r)| json!({ "t": t, "mean": r.estimate, "stderr": r.stderr })).collect::<Vec<_>>(),
                "decay_slope_stderr": fit.slope_se,
                "late_decay_slope_via_tagged_cell": late_fit.slope,
                "late_decay_slope_stderr": late_fit.slope_se,
                "late_times": late,
                "floor": floor,
                "ledger_bias_at_8": bias.estimate,
                "intrinsic_floor": ifloor,
                "n_discarded": discarded,
            }),
        );

        // Many-to-one at t = 1.
        let spine_runs = run_replicas(n, self.seed, "many-to-one-spine", self.workers, |_, rng| {
            let y = simulate_spine(&spine, alpha, 1.0, 1.0, rng).value_at(1.0);
            m2o_fs.iter().map(|f| y.map_or(0.0, |y| f.eval(y))).collect::<Vec<_>>()
        })
        .map_err(err)?;
        let mut zm2o = 0.0f64;
        let mut pass11 = true;
        let mut rows11 = Vec::new();
        let base = m_times.len() + decay_times.len();
        for (j, f) in m2o_fs.iter().enumerate() {
            let lhs = col(base + j);
            let rhs = mc(spine_runs.iter().map(|r| r[j]).collect());
            let v = equivalence_test(&lhs, &rhs);
            zm2o = zm2o.max(v.z.abs());
            pass11 &= v.pass;
            rows11.push(json!({ "f": f, "lhs": est(&lhs), "rhs": est(&rhs), "z": v.z }));
        }
        let c11 = criterion(11, "many-to-one", zm2o, 0.0, 3.0, pass11, json!({ "t": 1.0, "checks": rows11 }));

        // Empirical measure at t = 8 against the exponential functional.
        let norm = -table.kappa_deriv(om, 1).map_err(err)? * alpha;
        let ef = run_replicas(n, self.seed, "exponential-functional", self.workers, |_, rng| {
            exponential_functional(&spine, alpha, rng, 1e-10)
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
        let inv = mc(ef.iter().map(|i| 1.0 / i).collect());
        let mut z12 = inv.z_to(norm).abs();
        let mut pass12 = z12 <= 3.0;
        let mut rows12 = Vec::new();
        let base = m_times.len() + decay_times.len() + m2o_fs.len();
        let horizon_far = 1000.0;
        let far = run_replicas(n, self.seed, "tagged-cell-far", self.workers, |_, rng| {
            simulate_spine(&spine, alpha, 1.0, horizon_far, rng).value_at(horizon_far).map_or(0.0, |y| y * horizon_far)
        })
        .map_err(err)?;
        for (j, f) in rho_fs.iter().enumerate() {
            let emp = col(base + j);
            let target = mc(ef.iter().map(|i| f.eval(i.powf(1.0 / alpha)) / i / norm).collect());
            let v = equivalence_test(&emp, &target);
            let far_r = mc(far.iter().map(|&y| f.eval(y)).collect());
            z12 = z12.max(v.z.abs());
            pass12 &= v.pass;
            rows12.push(json!({
                "f": f, "empirical_t8": est(&emp), "target": est(&target), "z": v.z,
                "tagged_cell_at_t1000": est(&far_r),
            }));
        }
        let c12 = criterion(
            12,
            "empirical measure",
            z12,
            0.0,
            3.0,
            pass12,
            json!({
                "normalization": { "mean_inv_i": est(&inv), "target": norm, "z": inv.z_to(norm) },
                "windows": rows12,
            }),
        );
        Ok((c10, c11, c12))
    }

    fn c13(&self) -> Outcome {
        let model = presets::bin04_self_similar();
        let table = find_roots(&model).map_err(err)?;
        let om = table.omega_minus().map_err(err)?;
        let dynamics = LevyDynamics::from_self_similar(&model).map_err(err)?;
        let phi = analytic_phi(&table).map_err(err)?;
        let eps = 1e-3;
        let lo = phi.support_lo();
        let edges: Vec<f64> = (0..=10).map(|k| lo + (1.0 - lo) * k as f64 / 10.0).collect();
        let runs = run_replicas(self.n(), self.seed, "freezing", self.workers, |i, _| {
            let fam = freeze(&dynamics, eps, 1.0, StreamKey::for_replica(self.seed, "freezing", i), 50_000_000, false)
                .map_err(err)?;
            let mut row = vec![frozen_empirical(&fam, eps, om, &FSpec::one())];
            row.extend(edges[1..].iter().map(|&e| frozen_empirical(&fam, eps, om, &FSpec::open(0.0, e))));
            Ok::<_, String>(row)
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
        let mass = mc(runs.iter().map(|r| r[0]).collect());
        let mut sup = 0.0f64;
        let mut cdf = Vec::new();
        for (k, &e) in edges[1..].iter().enumerate() {
            let emp = mc(runs.iter().map(|r| r[k + 1]).collect());
            let target = phi.integrate(&FSpec::open(0.0, e));
            sup = sup.max((emp.estimate - target).abs());
            cdf.push(json!({ "edge": e, "empirical": emp.estimate, "stderr": emp.stderr, "phi": target }));
        }
        let norm_err = (phi.integrate(&FSpec::one()) - 1.0).abs();

        let levy = model.levy().ok_or("self-similar model expected")?;
        let lm = spine_transform(levy, om).map_err(err)?;
        let law = overshoot_limit_law(&lm, table.k_star().map_err(err)?, -table.phi_minus_deriv(0.0).map_err(err)?)
            .map_err(err)?;
        let mut tests: Vec<FSpec> = edges.windows(2).map(|w| FSpec::open(w[0], w[1])).collect();
        tests.push(FSpec::one());
        tests.push(FSpec::open(0.6, 0.9));
        let cross = tests
            .iter()
            .map(|f| (phi.integrate(f) - law.expect(|u| f.eval((-u).exp()), 1e-10)).abs())
            .fold(0.0, f64::max);
        let z = mass.z_to(1.0);
        Ok(criterion(
            13,
            "freezing",
            sup,
            0.0,
            0.05,
            sup < 0.05 && z.abs() <= 3.0 && norm_err <= 1e-8 && cross <= 1e-6,
            json!({
                "epsilon": eps,
                "backward_martingale": { "mean": mass.estimate, "stderr": mass.stderr, "z": z },
                "cdf": cdf,
                "phi_normalization_error": norm_err,
                "phi_vs_overshoot_max_diff": cross,
            }),
        ))
    }

    fn c14(&self) -> Outcome {
        let model = presets::bin04_self_similar();
        let table: CumulantTable = find_roots(&model).map_err(err)?;
        let op = table.omega_plus().map_err(err)?;
        let dynamics = LevyDynamics::from_self_similar(&model).map_err(err)?;
        let prune = 0.25;
        let xs = [2.0f64, 4.0, 8.0, 16.0];
        let mut rows = Vec::new();
        let mut ests = Vec::new();
        for &x in &xs {
            let v = run_replicas(self.n(), self.seed, &format!("tail-{x}"), self.workers, |_, rng| {
                tail_replica(&dynamics, &table, x, prune, rng)
            })
            .map_err(err)?
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(err)?;
            let p = mc(v.iter().map(|r| r.0).collect());
            let bias = v.iter().map(|r| r.1).sum::<f64>() / v.len() as f64;
            rows.push(json!({ "x": x, "p": p.estimate, "stderr": p.stderr, "pruning_bias_bound": bias, "doob": x.powf(-op) }));
            ests.push((p, bias));
        }
        let fit = slope_fit(
            &xs.iter().map(|x| x.ln()).collect::<Vec<_>>(),
            &ests.iter().map(|(p, _)| p.estimate.ln()).collect::<Vec<_>>(),
            &ests.iter().map(|(p, _)| p.stderr / p.estimate).collect::<Vec<_>>(),
            (f64::NEG_INFINITY, -(op - 0.5)),
        )
        .map_err(err)?;
        let theta = -fit.slope;

        let naive = run_replicas(10 * self.n(), self.seed, "tail-naive", self.workers, |_, rng| {
            naive_tail_replica(&dynamics, 2.0, prune, rng, 10_000_000).map(|b| b as u8 as f64)
        })
        .map_err(err)?
        .into_iter()
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
        let naive = mc(naive);
        let doob2 = naive.estimate <= 2f64.powf(-op) + 3.0 * naive.stderr;
        let (p4, b4) = &ests[1];
        let doob4 = p4.estimate <= 4f64.powf(-op) + 3.0 * p4.stderr + b4;
        Ok(criterion(
            14,
            "tail exponent",
            theta,
            op,
            0.5,
            theta >= op - 0.5 && doob2 && doob4,
            json!({
                "importance_sampling": rows,
                "theta_stderr": fit.slope_se,
                "naive_x2": est(&naive),
                "doob_x2": doob2,
                "doob_x4": doob4,
                "prune": prune,
            }),
        ))
    }
}
