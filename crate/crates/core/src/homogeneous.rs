//! Compensated fragmentations simulated as branching Lévy particle systems,
//! and the statistics computed on their states.

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::cumulant::{eval_kappa, CumulantError, CumulantTable};
use crate::fspec::FSpec;
use crate::levypath::LevyDynamics;
use crate::mclab::{median_result, slope_fit, McError, TrendReport};
use crate::measures::CharQuadruple;
use crate::numeric::{csum, quantile_sorted};
use crate::stream::Stream;

/// Default size floor below which particles are ledgered instead of simulated.
pub const DEFAULT_FLOOR: f64 = 1e-9;
/// Default number of particles per replica before a run is aborted.
pub const DEFAULT_CAP: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomogeneousError {
    #[error("a homogeneous model is required")]
    WrongMode,
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
    #[error("q = {q} must lie in ({lo}, {hi})")]
    QOutOfRange { q: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Fit(#[from] McError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone)]
enum Outcome {
    Jump(f64),
    Kill,
    Split(Vec<f64>),
}

/// Event tables of a homogeneous model.
#[derive(Debug, Clone)]
pub struct ParticleDynamics {
    slope: f64,
    sd: f64,
    total_rate: f64,
    cumulative: Vec<f64>,
    outcomes: Vec<Outcome>,
}

impl ParticleDynamics {
    /// Every atom of ν is an event; the compensator `∫(1-p₁)dν` is folded
    /// into the slope.
    pub fn new(model: &CharQuadruple) -> Result<Self, HomogeneousError> {
        let nu = model.dislocation().ok_or(HomogeneousError::WrongMode)?;
        let slope = model.drift + csum(nu.atoms().iter().map(|a| a.weight * (1.0 - a.partition.largest())));
        Ok(Self::from_parts(model.sigma2, slope, nu.atoms().iter().map(|a| (a.weight, &a.partition))))
    }

    /// Pure fragmentation with `ν` restricted to splitting atoms: no motion.
    pub fn pure_fragmentation(model: &CharQuadruple) -> Result<Self, HomogeneousError> {
        let nu = model.dislocation().ok_or(HomogeneousError::WrongMode)?;
        Ok(Self::from_parts(0.0, 0.0, nu.split_atoms().map(|a| (a.weight, &a.partition))))
    }

    fn from_parts<'a, I>(sigma2: f64, slope: f64, atoms: I) -> Self
    where
        I: Iterator<Item = (f64, &'a crate::measures::MassPartition)>,
    {
        let mut cumulative = Vec::new();
        let mut outcomes = Vec::new();
        let mut acc = 0.0;
        for (w, p) in atoms {
            acc += w;
            cumulative.push(acc);
            outcomes.push(if p.parts().is_empty() {
                Outcome::Kill
            } else if p.is_single_fragment() {
                Outcome::Jump(p.largest().ln())
            } else {
                Outcome::Split(p.parts().iter().map(|x| x.ln()).collect())
            });
        }
        ParticleDynamics {
            slope,
            sd: sigma2.sqrt(),
            total_rate: acc,
            cumulative,
            outcomes,
        }
    }

    fn pick(&self, rng: &mut Stream) -> &Outcome {
        let u = rng.open01() * self.total_rate;
        let i = self.cumulative.partition_point(|&c| c < u);
        &self.outcomes[i.min(self.outcomes.len() - 1)]
    }

    fn advance(&self, x: f64, dt: f64, rng: &mut Stream) -> f64 {
        let mut y = x + self.slope * dt;
        if self.sd > 0.0 && dt > 0.0 {
            let z: f64 = StandardNormal.sample(rng);
            y += self.sd * dt.sqrt() * z;
        }
        y
    }
}

/// Pruning and population limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimLimits {
    /// Size floor; zero disables pruning.
    pub floor: f64,
    pub cap: usize,
}

impl Default for SimLimits {
    fn default() -> Self {
        SimLimits { floor: DEFAULT_FLOOR, cap: DEFAULT_CAP }
    }
}

/// Log-sizes of the alive particles at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSystemState {
    pub time: f64,
    pub log_sizes: Vec<f64>,
}

impl ParticleSystemState {
    pub fn largest(&self) -> Option<f64> {
        self.log_sizes.iter().copied().reduce(f64::max)
    }

    /// Sizes ranked non-increasing.
    pub fn ranked_sizes(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.log_sizes.iter().map(|x| x.exp()).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }
}

/// A particle removed by the floor at `time` with log-size `log_size`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pruned {
    pub time: f64,
    pub log_size: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub states: Vec<ParticleSystemState>,
    pub pruned: Vec<Pruned>,
    /// The population cap was hit; states are incomplete.
    pub capped: bool,
    pub particles: usize,
}

impl SimOutput {
    /// Upper bound on the expected contribution of pruned subtrees to
    /// `M(t;q)`: `Σ s^q e^{-τκ(q)}` over particles pruned before `t`.
    pub fn pruning_bias(&self, t: f64, q: f64, kappa_q: f64) -> f64 {
        csum(
            self.pruned
                .iter()
                .filter(|p| p.time <= t)
                .map(|p| (q * p.log_size - p.time * kappa_q).exp()),
        )
    }
}

/// Simulates the particle system started from one unit particle and
/// records its state at each of `times` (sorted, non-negative).
pub fn simulate_branching_levy(
    model: &CharQuadruple,
    times: &[f64],
    rng: &mut Stream,
    limits: SimLimits,
) -> Result<SimOutput, HomogeneousError> {
    let dyn_ = ParticleDynamics::new(model)?;
    simulate_with(&dyn_, times, rng, limits)
}

/// As [`simulate_branching_levy`] with prebuilt event tables.
pub fn simulate_with(
    dyn_: &ParticleDynamics,
    times: &[f64],
    rng: &mut Stream,
    limits: SimLimits,
) -> Result<SimOutput, HomogeneousError> {
    if times.windows(2).any(|w| w[1] < w[0]) || times.first().is_some_and(|&t| t < 0.0) {
        return Err(HomogeneousError::InvalidParameter(
            "snapshot times must be sorted and non-negative".into(),
        ));
    }
    let horizon = times.last().copied().unwrap_or(0.0);
    let log_floor = if limits.floor > 0.0 { limits.floor.ln() } else { f64::NEG_INFINITY };
    let mut states: Vec<ParticleSystemState> = times
        .iter()
        .map(|&t| ParticleSystemState { time: t, log_sizes: Vec::new() })
        .collect();
    let mut pruned = Vec::new();
    let mut stack: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut particles = 1usize;
    let mut capped = false;
    while let Some((x0, t0)) = stack.pop() {
        let mut x = x0;
        let mut cur = t0;
        if x < log_floor {
            pruned.push(Pruned { time: cur, log_size: x });
            continue;
        }
        let mut k = times.partition_point(|&s| s < cur);
        loop {
            let t_event = cur + rng.exp(dyn_.total_rate);
            while k < times.len() && times[k] < t_event {
                x = dyn_.advance(x, times[k] - cur, rng);
                cur = times[k];
                states[k].log_sizes.push(x);
                k += 1;
            }
            if t_event > horizon {
                break;
            }
            x = dyn_.advance(x, t_event - cur, rng);
            cur = t_event;
            match dyn_.pick(rng) {
                Outcome::Kill => break,
                Outcome::Jump(y) => {
                    x += y;
                    if x < log_floor {
                        pruned.push(Pruned { time: cur, log_size: x });
                        break;
                    }
                }
                Outcome::Split(ys) => {
                    particles += ys.len();
                    for y in ys.iter().rev() {
                        stack.push((x + y, cur));
                    }
                    break;
                }
            }
        }
        if particles > limits.cap {
            capped = true;
            break;
        }
    }
    Ok(SimOutput { states, pruned, capped, particles })
}

/// One-time marginal by superposition: a pure fragmentation with the
/// splitting part of ν, each fragment shifted by an independent copy of
/// `η(t)` with exponent `ψ`. Killed fragments are dropped.
pub fn marginal_sampler_superposition(
    model: &CharQuadruple,
    t: f64,
    rng: &mut Stream,
) -> Result<Vec<f64>, HomogeneousError> {
    let frag = ParticleDynamics::pure_fragmentation(model)?;
    let eta = LevyDynamics::from_homogeneous_psi(model)
        .map_err(|e| HomogeneousError::InvalidParameter(e.to_string()))?;
    let out = simulate_with(&frag, &[t], rng, SimLimits { floor: 0.0, cap: usize::MAX })?;
    let sd = eta.sigma2.sqrt();
    let mut shifted = Vec::with_capacity(out.states[0].log_sizes.len());
    for &x in &out.states[0].log_sizes {
        if let Some(b) = sample_levy_at(&eta, sd, t, rng) {
            shifted.push(x + b);
        }
    }
    Ok(shifted)
}

/// `η(t)` drawn exactly; `None` when killed before `t`.
fn sample_levy_at(eta: &LevyDynamics, sd: f64, t: f64, rng: &mut Stream) -> Option<f64> {
    let mut s = 0.0;
    let mut x = 0.0;
    loop {
        let (d, killed) = eta.next_event(rng);
        if s + d > t {
            x += eta.slope * (t - s);
            break;
        }
        s += d;
        if killed {
            return None;
        }
        x += eta.slope * d + eta.sample_jump(rng);
    }
    if sd > 0.0 {
        let z: f64 = StandardNormal.sample(rng);
        x += sd * t.sqrt() * z;
    }
    Some(x)
}

/// `Σ Z_i^q`.
pub fn power_sum(log_sizes: &[f64], q: f64) -> f64 {
    csum(log_sizes.iter().map(|x| (q * x).exp()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MartingaleSample {
    pub t: f64,
    pub q: f64,
    pub value: f64,
    /// Upper bound on the pruned contribution, in expectation.
    pub bias_bound: f64,
}

/// `M(t;q) = e^{-tκ(q)} Σ Z_i^q(t)`.
pub fn additive_martingale(
    model: &CharQuadruple,
    out: &SimOutput,
    k: usize,
    q: f64,
) -> MartingaleSample {
    let st = &out.states[k];
    let kq = eval_kappa(model, q);
    MartingaleSample {
        t: st.time,
        q,
        value: csum(st.log_sizes.iter().map(|x| (q * x - st.time * kq).exp())),
        bias_bound: out.pruning_bias(st.time, q, kq),
    }
}

/// Atoms `κ(q̄)t - q̄ log Z_i(t)` of the boundary-renormalized measure.
pub fn boundary_measure(
    state: &ParticleSystemState,
    table: &CumulantTable,
) -> Result<Vec<f64>, HomogeneousError> {
    let qb = table.q_bar()?;
    let shift = table.kappa(qb) * state.time;
    Ok(state.log_sizes.iter().map(|x| shift - qb * x).collect())
}

/// `D(t) = Σ y e^{-y}` over the boundary atoms.
pub fn derivative_martingale(
    state: &ParticleSystemState,
    table: &CumulantTable,
) -> Result<f64, HomogeneousError> {
    Ok(csum(boundary_measure(state, table)?.into_iter().map(|y| y * (-y).exp())))
}

/// Presence and count of atoms of `𝒵^t` in `[x + a_w, x + b_w]` with
/// `x = tκ'(q)`.
pub fn window_statistics(
    state: &ParticleSystemState,
    kappa1_q: f64,
    a_w: f64,
    b_w: f64,
) -> Result<(bool, usize), HomogeneousError> {
    if !(a_w < b_w) {
        return Err(HomogeneousError::InvalidParameter(format!(
            "window [{a_w}, {b_w}] is empty"
        )));
    }
    let x = state.time * kappa1_q;
    let n = state
        .log_sizes
        .iter()
        .filter(|&&y| y >= x + a_w && y <= x + b_w)
        .count();
    Ok((n > 0, n))
}

fn check_local_range(table: &CumulantTable, q: f64) -> Result<(), HomogeneousError> {
    let hi = table.q_bar.unwrap_or(f64::INFINITY);
    if !(q > table.q_under && q < hi) {
        return Err(HomogeneousError::QOutOfRange { q, lo: table.q_under, hi });
    }
    Ok(())
}

/// `√t e^{-(κ(q)-qκ'(q))t} Σ f(Z_i(t) e^{-κ'(q)t})`.
pub fn rescaled_empirical(
    state: &ParticleSystemState,
    table: &CumulantTable,
    q: f64,
    f: &FSpec,
) -> Result<f64, HomogeneousError> {
    check_local_range(table, q)?;
    let t = state.time;
    let k = table.kappa(q);
    let k1 = table.kappa_deriv(q, 1)?;
    let s = csum(state.log_sizes.iter().map(|x| f.eval((x - k1 * t).exp())));
    Ok(t.sqrt() * (-(k - q * k1) * t).exp() * s)
}

/// Limit factor `(2πκ''(q))^{-1/2} ∫ f(y) y^{-q-1} dy` multiplying `M(∞;q)`.
pub fn local_limit_factor(table: &CumulantTable, q: f64, f: &FSpec) -> Result<f64, HomogeneousError> {
    check_local_range(table, q)?;
    let k2 = table.kappa_deriv(q, 2)?;
    Ok(f.power_integral(q) / (2.0 * std::f64::consts::PI * k2).sqrt())
}

/// Large-time limit of `√t e^{-(κ(q)-κ'(q)q)t} V(t, tκ'(q))` for the window
/// `[a_w, b_w]`: `(e^{-q a_w} - e^{-q b_w}) / (q √(2πκ''(q)))`.
pub fn window_count_limit(table: &CumulantTable, q: f64, a_w: f64, b_w: f64) -> Result<f64, HomogeneousError> {
    let k2 = table.kappa_deriv(q, 2)?;
    Ok(((-q * a_w).exp() - (-q * b_w).exp()) / (q * (2.0 * std::f64::consts::PI * k2).sqrt()))
}

/// Per-time row of the largest-fragment study.
#[derive(Debug, Clone, PartialEq)]
pub struct LargestRow {
    pub t: f64,
    pub median_log_z1: f64,
    pub iqr: f64,
    pub n_survive: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LargestReport {
    pub rows: Vec<LargestRow>,
    /// Fit of `median log Z₁(t) + (3/(2q̄)) log t` against `t`.
    pub fit: TrendReport,
    pub target: f64,
}

/// `largest[r][k]` is the largest log-size of replica `r` at `times[k]`, or
/// `None` if that replica is extinct then. Only replicas alive at the last
/// time enter.
pub fn largest_fragment_track(
    largest: &[Vec<Option<f64>>],
    times: &[f64],
    table: &CumulantTable,
    band: (f64, f64),
) -> Result<LargestReport, HomogeneousError> {
    let qb = table.q_bar()?;
    let last = times.len().checked_sub(1).ok_or(McError::DegenerateGrid(0))?;
    let survivors: Vec<&Vec<Option<f64>>> = largest.iter().filter(|r| r[last].is_some()).collect();
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    let mut ses = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let mut v: Vec<f64> = survivors.iter().filter_map(|r| r[k]).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        let med = median_result(&v, 0);
        rows.push(LargestRow {
            t,
            median_log_z1: med.estimate,
            iqr: quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25),
            n_survive: v.len(),
        });
        ys.push(med.estimate + 1.5 / qb * t.ln());
        ses.push(med.stderr);
    }
    let fit = slope_fit(times, &ys, &ses, band)?;
    Ok(LargestReport { rows, fit, target: table.kappa_deriv(qb, 1)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulant::find_roots;
    use crate::measures::DislocationMeasure;
    use crate::presets;

    fn rng(i: u64) -> Stream {
        Stream::new(17, "homogeneous-test", i)
    }

    #[test]
    fn initial_state() {
        let m = presets::bin04();
        let out = simulate_branching_levy(&m, &[0.0], &mut rng(0), SimLimits::default()).unwrap();
        assert_eq!(out.states[0].log_sizes, vec![0.0]);
        let s = additive_martingale(&m, &out, 0, 1.5);
        assert_eq!(s.value, 1.0);
        let t = find_roots(&m).unwrap();
        assert_eq!(boundary_measure(&out.states[0], &t).unwrap(), vec![0.0]);
        assert_eq!(derivative_martingale(&out.states[0], &t).unwrap(), 0.0);
    }

    #[test]
    fn conservative_mass_is_one() {
        let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.5])]).unwrap();
        let m = CharQuadruple::homogeneous(0.0, -0.5, nu).unwrap();
        let times = [0.5, 1.0, 3.0, 6.0];
        for i in 0..20 {
            let out = simulate_branching_levy(&m, &times, &mut rng(i), SimLimits { floor: 0.0, cap: DEFAULT_CAP }).unwrap();
            for st in &out.states {
                assert!((power_sum(&st.log_sizes, 1.0) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn deterministic_dilation() {
        let nu = DislocationMeasure::from_pairs(&[(1e-300, &[0.5, 0.5])]).unwrap();
        let m = CharQuadruple::homogeneous(0.0, 0.3, nu).unwrap();
        let out = simulate_branching_levy(&m, &[1.0, 5.0], &mut rng(1), SimLimits::default()).unwrap();
        assert!((out.states[1].log_sizes[0] - 0.3 * 5.0).abs() < 1e-12);
    }

    #[test]
    fn windows_and_limits() {
        let st = ParticleSystemState { time: 2.0, log_sizes: vec![-10.0, 0.5] };
        assert_eq!(window_statistics(&st, 0.0, 1.0, 2.0).unwrap(), (false, 0));
        assert_eq!(window_statistics(&st, 0.0, 0.0, 1.0).unwrap(), (true, 1));
        let t = find_roots(&presets::bin04()).unwrap();
        let lim = window_count_limit(&t, 1.0, -1.0, 1.0).unwrap();
        // (e - 1/e) / sqrt(2π (ln 2)²), evaluated independently.
        assert!((lim - 1.352_78).abs() < 1e-5);
        let f = FSpec::closed(1.0, std::f64::consts::E);
        assert!(rescaled_empirical(&st, &t, 3.0, &f).is_err());
        let zero = ParticleSystemState { time: 0.0, log_sizes: vec![0.0] };
        assert_eq!(rescaled_empirical(&zero, &t, 1.0, &FSpec::closed(2.0, 3.0)).unwrap(), 0.0);
    }

    #[test]
    fn pruning_bias_counts_only_earlier_prunes() {
        let out = SimOutput {
            states: vec![],
            pruned: vec![Pruned { time: 1.0, log_size: -2.0 }, Pruned { time: 5.0, log_size: -2.0 }],
            capped: false,
            particles: 0,
        };
        let b = out.pruning_bias(2.0, 1.0, 0.1);
        assert!((b - (-2.0f64 - 0.1).exp()).abs() < 1e-15);
    }
}
