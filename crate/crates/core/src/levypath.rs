//! Finite-activity Lévy paths, the Lamperti transform, exponential
//! functionals, first passage and the overshoot limit law.

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::cumulant::{eval_kappa, CumulantTable};
use crate::measures::{spine_transform, CharQuadruple, LevyMeasure};
use crate::numeric::{adaptive_simpson, csum};
use crate::stream::Stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LevyError {
    #[error("a Brownian component needs a step size")]
    StepRequired,
    #[error("{0} requires a {1} model")]
    WrongMode(&'static str, &'static str),
    #[error("the process neither drifts to -inf nor is killed (mean {mean}, kill {kill})")]
    NonDissipative { mean: f64, kill: f64 },
    #[error("event budget {max_events} exhausted at time {time} (value {value})")]
    HorizonExceeded {
        max_events: u64,
        time: f64,
        value: f64,
    },
    #[error("missing Malthusian root")]
    NoMalthusianRoot,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Event-level description of a Lévy process: constant slope between
/// jumps, compound Poisson jumps, exponential killing, optional Brownian
/// part.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyDynamics {
    pub sigma2: f64,
    pub slope: f64,
    pub kill: f64,
    jumps: Vec<(f64, f64)>,
    cumulative: Vec<f64>,
}

impl LevyDynamics {
    /// `jumps` holds `(rate, size)` pairs; rates must be positive.
    pub fn new(sigma2: f64, slope: f64, kill: f64, jumps: Vec<(f64, f64)>) -> Self {
        let mut acc = 0.0;
        let cumulative = jumps
            .iter()
            .map(|&(r, _)| {
                acc += r;
                acc
            })
            .collect();
        LevyDynamics { sigma2, slope, kill, jumps, cumulative }
    }

    /// The process `ξ` with exponent `Ψ` of a self-similar quadruple.
    pub fn from_self_similar(model: &CharQuadruple) -> Result<Self, LevyError> {
        let levy = model
            .levy()
            .ok_or(LevyError::WrongMode("from_self_similar", "self-similar"))?;
        Ok(Self::from_levy(model.sigma2, model.drift, model.kill, levy))
    }

    fn from_levy(sigma2: f64, b: f64, kill: f64, levy: &LevyMeasure) -> Self {
        let comp = csum(levy.atoms().iter().map(|a| a.weight * (-a.jump.exp_m1())));
        let jumps = levy.atoms().iter().map(|a| (a.weight, a.jump)).collect();
        Self::new(sigma2, b + comp, kill, jumps)
    }

    /// The motion `η` of one particle of a homogeneous model (exponent `ψ`).
    /// Null partitions become killing.
    pub fn from_homogeneous_psi(model: &CharQuadruple) -> Result<Self, LevyError> {
        let nu = model
            .dislocation()
            .ok_or(LevyError::WrongMode("from_homogeneous_psi", "homogeneous"))?;
        let slope = model.drift + csum(nu.atoms().iter().map(|a| a.weight * (1.0 - a.partition.largest())));
        let mut kill = 0.0;
        let mut jumps = Vec::new();
        for a in nu.single_atoms() {
            let p1 = a.partition.largest();
            if p1 > 0.0 {
                jumps.push((a.weight, p1.ln()));
            } else {
                kill += a.weight;
            }
        }
        Ok(Self::new(model.sigma2, slope, kill, jumps))
    }

    /// The tagged-cell process with exponent `Φ⁻(q) = κ(q + ω⁻)`.
    pub fn spine(table: &CumulantTable) -> Result<Self, LevyError> {
        let model = &table.model;
        let levy = model
            .levy()
            .ok_or(LevyError::WrongMode("spine", "self-similar"))?;
        let om = table.omega_minus.ok_or(LevyError::NoMalthusianRoot)?;
        let levy_minus = spine_transform(levy, om)
            .map_err(|e| LevyError::InvalidParameter(e.to_string()))?;
        let comp = csum(levy.atoms().iter().map(|a| a.weight * (-a.jump.exp_m1())));
        let slope = model.sigma2 * om + model.drift + comp;
        let jumps = levy_minus.atoms().iter().map(|a| (a.weight, a.jump)).collect();
        let dynamics = Self::new(model.sigma2, slope, 0.0, jumps);
        for q in [0.0, 1.0, 2.0] {
            let want = eval_kappa(model, q + om);
            let got = dynamics.laplace_exponent(q);
            if (want - got).abs() > 1e-9 * (1.0 + want.abs()) {
                return Err(LevyError::InvalidParameter(format!(
                    "spine exponent mismatch at q = {q}: {got} vs {want}"
                )));
            }
        }
        Ok(dynamics)
    }

    pub fn jumps(&self) -> &[(f64, f64)] {
        &self.jumps
    }

    pub fn jump_rate(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn has_positive_jumps(&self) -> bool {
        self.jumps.iter().any(|&(_, y)| y > 0.0)
    }

    /// `log E[e^{qξ(1)}]`, killed paths counting as zero.
    pub fn laplace_exponent(&self, q: f64) -> f64 {
        let mut terms = vec![-self.kill, 0.5 * self.sigma2 * q * q, self.slope * q];
        terms.extend(self.jumps.iter().map(|&(r, y)| r * (q * y).exp_m1()));
        csum(terms)
    }

    /// `E[ξ(1)]` for the unkilled process.
    pub fn mean(&self) -> f64 {
        self.slope + csum(self.jumps.iter().map(|&(r, y)| r * y))
    }

    pub fn is_dissipative(&self) -> bool {
        self.kill > 0.0 || self.mean() < 0.0
    }

    /// Picks a jump size with probability proportional to its rate.
    pub fn sample_jump(&self, rng: &mut Stream) -> f64 {
        let u = rng.open01() * self.jump_rate();
        let i = self.cumulative.partition_point(|&c| c < u);
        self.jumps[i.min(self.jumps.len() - 1)].1
    }

    /// Next event after the current time: `(duration, killed)`. The
    /// duration is infinite when nothing can happen.
    pub fn next_event(&self, rng: &mut Stream) -> (f64, bool) {
        let total = self.jump_rate() + self.kill;
        let d = rng.exp(total);
        if d.is_infinite() {
            return (d, false);
        }
        let killed = self.kill > 0.0 && rng.open01() * total < self.kill;
        (d, killed)
    }
}

/// A linear piece of a Lévy path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub start: f64,
    pub value: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevyPath {
    pub segments: Vec<Segment>,
    pub jumps: Vec<(f64, f64)>,
    /// Killing time, `+inf` if the path survives the horizon.
    pub kill_time: f64,
    pub horizon: f64,
}

impl LevyPath {
    pub fn end_time(&self) -> f64 {
        self.kill_time.min(self.horizon)
    }

    fn segment_end(&self, i: usize) -> f64 {
        self.segments
            .get(i + 1)
            .map_or(self.end_time(), |s| s.start)
    }

    /// Value at time `t` (left limit at jump times is not exposed; jumps
    /// are right-continuous). `None` after killing or past the horizon.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t < 0.0 || t > self.horizon || t >= self.kill_time {
            return None;
        }
        let i = self.segments.partition_point(|s| s.start <= t).max(1) - 1;
        let s = &self.segments[i];
        Some(s.value + s.slope * (t - s.start))
    }

    pub fn end_value(&self) -> f64 {
        let i = self.segments.len() - 1;
        let s = &self.segments[i];
        s.value + s.slope * (self.segment_end(i) - s.start)
    }

    /// `time,value,event_type` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,value,event_type\n");
        let mut j = 0;
        for (i, s) in self.segments.iter().enumerate() {
            let kind = if i == 0 {
                "start"
            } else if j < self.jumps.len() && self.jumps[j].0 == s.start {
                j += 1;
                "jump"
            } else {
                "step"
            };
            out.push_str(&format!("{},{},{}\n", s.start, s.value, kind));
        }
        let kind = if self.kill_time <= self.horizon { "kill" } else { "horizon" };
        out.push_str(&format!("{},{},{}\n", self.end_time(), self.end_value(), kind));
        out
    }
}

/// Simulates `ξ` on `[0, horizon]`. With `σ² > 0` a step `h` is required;
/// Gaussian increments are then exact at the grid points and interpolated
/// linearly between them.
pub fn simulate_levy(
    dynamics: &LevyDynamics,
    horizon: f64,
    rng: &mut Stream,
    step: Option<f64>,
) -> Result<LevyPath, LevyError> {
    if !(horizon >= 0.0) {
        return Err(LevyError::InvalidParameter(format!("horizon {horizon} < 0")));
    }
    let h = match (dynamics.sigma2 > 0.0, step) {
        (true, None) => return Err(LevyError::StepRequired),
        (true, Some(h)) if !(h > 0.0) => {
            return Err(LevyError::InvalidParameter(format!("step {h} must be positive")))
        }
        (true, Some(h)) => Some(h),
        (false, _) => None,
    };
    let sd = dynamics.sigma2.sqrt();
    let mut segments = Vec::new();
    let mut jumps = Vec::new();
    let mut t = 0.0;
    let mut x = 0.0;
    let mut kill_time = f64::INFINITY;
    loop {
        let (d, killed) = dynamics.next_event(rng);
        let stop = (t + d).min(horizon);
        match h {
            None => {
                segments.push(Segment { start: t, value: x, slope: dynamics.slope });
                x += dynamics.slope * (stop - t);
            }
            Some(h) => {
                let mut s = t;
                while s < stop {
                    let dt = h.min(stop - s);
                    let z: f64 = StandardNormal.sample(rng);
                    let slope = dynamics.slope + sd * z / dt.sqrt();
                    segments.push(Segment { start: s, value: x, slope });
                    x += slope * dt;
                    s += dt;
                }
                if segments.is_empty() {
                    segments.push(Segment { start: t, value: x, slope: dynamics.slope });
                }
            }
        }
        if t + d > horizon {
            break;
        }
        t += d;
        if killed {
            kill_time = t;
            break;
        }
        let y = dynamics.sample_jump(rng);
        jumps.push((t, y));
        x += y;
    }
    Ok(LevyPath { segments, jumps, kill_time, horizon })
}

/// One piece of a pssMp path: on `[t0, t0 + dt)` the size is
/// `y0 (1 - α m y0^α (t - t0))^{-1/α}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PssPiece {
    pub t0: f64,
    pub dt: f64,
    pub y0: f64,
    pub m: f64,
}

/// Lévy time elapsed after real time `dt` in a piece with start size `y0`
/// and Lévy slope `m`.
pub fn levy_time_in_piece(alpha: f64, y0: f64, m: f64, dt: f64) -> f64 {
    let a = alpha * m;
    let c = y0.powf(alpha) * dt;
    if a == 0.0 {
        c
    } else {
        -(-a * c).ln_1p() / a
    }
}

/// Real time needed to cover Lévy time `d` in a piece; infinite if the
/// piece never ends.
pub fn real_time_in_piece(alpha: f64, y0: f64, m: f64, d: f64) -> f64 {
    let a = alpha * m;
    let scale = y0.powf(-alpha);
    if a == 0.0 {
        return scale * d;
    }
    if d.is_infinite() {
        return if a > 0.0 { scale / a } else { f64::INFINITY };
    }
    scale * (-(-a * d).exp_m1()) / a
}

#[derive(Debug, Clone, PartialEq)]
pub struct PssmpPath {
    pub alpha: f64,
    pub x0: f64,
    pub pieces: Vec<PssPiece>,
    /// Jump times with multiplicative factors `e^y`.
    pub jumps: Vec<(f64, f64)>,
    /// Real time of absorption at the cemetery, if reached.
    pub absorption: Option<f64>,
    /// Real time up to which the path is known.
    pub end_time: f64,
}

impl PssmpPath {
    /// Size at real time `t`; `None` at or after absorption or past the
    /// known range.
    pub fn value_at(&self, t: f64) -> Option<f64> {
        if t < 0.0 || t > self.end_time || self.absorption.is_some_and(|z| t >= z) {
            return None;
        }
        let i = self.pieces.partition_point(|p| p.t0 <= t).max(1) - 1;
        let p = &self.pieces[i];
        let s = levy_time_in_piece(self.alpha, p.y0, p.m, t - p.t0);
        Some(p.y0 * (p.m * s).exp())
    }

    pub fn end_value(&self) -> Option<f64> {
        if self.absorption.is_some() {
            return None;
        }
        let p = self.pieces.last()?;
        let s = levy_time_in_piece(self.alpha, p.y0, p.m, p.dt);
        Some(p.y0 * (p.m * s).exp())
    }
}

/// `X(t) = x0 exp ξ(τ(t))` with `∫₀^{τ(t)} e^{-αξ(s)} ds = x0^α t`.
pub fn lamperti(path: &LevyPath, alpha: f64, x0: f64) -> PssmpPath {
    assert!(x0 > 0.0, "lamperti needs a positive start");
    let mut pieces = Vec::with_capacity(path.segments.len());
    let mut t = 0.0;
    for (i, s) in path.segments.iter().enumerate() {
        let d = path.segment_end(i) - s.start;
        let y0 = x0 * s.value.exp();
        let dt = real_time_in_piece(alpha, y0, s.slope, d);
        pieces.push(PssPiece { t0: t, dt, y0, m: s.slope });
        t += dt;
    }
    let jumps = path
        .jumps
        .iter()
        .map(|&(s, y)| {
            let i = path.segments.partition_point(|g| g.start <= s) - 1;
            (pieces[i].t0, y.exp())
        })
        .collect();
    let killed = path.kill_time <= path.horizon;
    PssmpPath {
        alpha,
        x0,
        pieces,
        jumps,
        absorption: killed.then_some(t),
        end_time: t,
    }
}

/// Recovers the driving Lévy path from a pssMp path by re-running the clock.
pub fn inverse_lamperti(path: &PssmpPath, levy_kill: bool, horizon: f64) -> LevyPath {
    let mut segments = Vec::with_capacity(path.pieces.len());
    let mut s = 0.0;
    for p in &path.pieces {
        segments.push(Segment { start: s, value: (p.y0 / path.x0).ln(), slope: p.m });
        s += levy_time_in_piece(path.alpha, p.y0, p.m, p.dt);
    }
    let jumps = path
        .jumps
        .iter()
        .map(|&(t, f)| {
            let i = path.pieces.partition_point(|p| p.t0 <= t) - 1;
            (segments[i].start, f.ln())
        })
        .collect();
    LevyPath {
        segments,
        jumps,
        kill_time: if levy_kill { s } else { f64::INFINITY },
        horizon,
    }
}

/// Default event budget for unbounded-horizon simulations.
pub const DEFAULT_MAX_EVENTS: u64 = 10_000_000;

/// `I = ∫₀^∞ e^{αη(s)} ds` along an exact path of `dynamics`.
///
/// Integration stops at killing, or once the remaining integral is known
/// to be below `tail_tol`: deterministically when the slope is negative and
/// no jump can raise `η`, otherwise in expectation when `Φ(α) < 0`. As a
/// last resort a relative increment below `1e-9` per mean inter-jump time
/// stops the loop.
pub fn exponential_functional(
    dynamics: &LevyDynamics,
    alpha: f64,
    rng: &mut Stream,
    tail_tol: f64,
) -> Result<f64, LevyError> {
    if dynamics.sigma2 > 0.0 {
        return Err(LevyError::StepRequired);
    }
    if !(alpha > 0.0) {
        return Err(LevyError::InvalidParameter(format!("alpha = {alpha} must be positive")));
    }
    if !dynamics.is_dissipative() {
        return Err(LevyError::NonDissipative {
            mean: dynamics.mean(),
            kill: dynamics.kill,
        });
    }
    let a = alpha * dynamics.slope;
    let phi = dynamics.laplace_exponent(alpha);
    let deterministic_tail = dynamics.slope < 0.0 && !dynamics.has_positive_jumps();
    let rate = dynamics.jump_rate() + dynamics.kill;
    let mut eta = 0.0;
    let mut total = crate::numeric::CompensatedSum::new();
    for _ in 0..DEFAULT_MAX_EVENTS {
        let (d, killed) = dynamics.next_event(rng);
        let piece = if d.is_infinite() {
            if a < 0.0 {
                -1.0 / a
            } else {
                f64::INFINITY
            }
        } else if a == 0.0 {
            d
        } else {
            (a * d).exp_m1() / a
        };
        total.add((alpha * eta).exp() * piece);
        if d.is_infinite() || killed {
            return Ok(total.value());
        }
        eta += dynamics.slope * d + dynamics.sample_jump(rng);
        let level = (alpha * eta).exp();
        if deterministic_tail && level / (-a) < tail_tol {
            return Ok(total.value());
        }
        if phi < 0.0 && level / (-phi) < tail_tol {
            return Ok(total.value());
        }
        if level / rate < 1e-9 * total.value() {
            return Ok(total.value());
        }
    }
    Err(LevyError::HorizonExceeded {
        max_events: DEFAULT_MAX_EVENTS,
        time: f64::NAN,
        value: total.value(),
    })
}

/// Result of [`first_passage_below`], in the Lévy clock.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Passage {
    pub time: f64,
    pub value: f64,
    /// The path was killed before crossing; `value` is then 0.
    pub killed: bool,
}

/// First time `x0 e^{ξ}` drops below `eps`. Creeping crossings return
/// exactly `eps`; jump crossings return a value strictly below it.
pub fn first_passage_below(
    dynamics: &LevyDynamics,
    x0: f64,
    eps: f64,
    rng: &mut Stream,
    max_events: u64,
) -> Result<Passage, LevyError> {
    if dynamics.sigma2 > 0.0 {
        return Err(LevyError::StepRequired);
    }
    if !(x0 > 0.0 && eps > 0.0) {
        return Err(LevyError::InvalidParameter("x0 and eps must be positive".into()));
    }
    if x0 < eps {
        return Ok(Passage { time: 0.0, value: x0, killed: false });
    }
    if x0 == eps {
        return Ok(Passage { time: 0.0, value: eps, killed: false });
    }
    let level = (eps / x0).ln();
    let m = dynamics.slope;
    let mut eta = 0.0;
    let mut t = 0.0;
    for _ in 0..max_events {
        let (d, killed) = dynamics.next_event(rng);
        if m < 0.0 && eta + m * d <= level {
            return Ok(Passage { time: t + (level - eta) / m, value: eps, killed: false });
        }
        if d.is_infinite() {
            break;
        }
        t += d;
        eta += m * d;
        if killed {
            return Ok(Passage { time: t, value: 0.0, killed: true });
        }
        eta += dynamics.sample_jump(rng);
        if eta < level {
            return Ok(Passage { time: t, value: x0 * eta.exp(), killed: false });
        }
    }
    Err(LevyError::HorizonExceeded {
        max_events,
        time: t,
        value: x0 * eta.exp(),
    })
}

/// `y ↦ Π((y,∞))` for the ascending ladder-height jump measure of `-η`,
/// piecewise exponential for a discrete `Λ⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderTail {
    /// `(weight, |jump|)` over the negative atoms.
    pub atoms: Vec<(f64, f64)>,
    pub k_star: f64,
}

pub fn ladder_height_tail(levy_minus: &LevyMeasure, k_star: f64) -> Result<LadderTail, LevyError> {
    if !(k_star > 0.0) {
        return Err(LevyError::InvalidParameter(format!("k* = {k_star} must be positive")));
    }
    let atoms = levy_minus
        .atoms()
        .iter()
        .filter(|a| a.jump < 0.0)
        .map(|a| (a.weight, -a.jump))
        .collect();
    Ok(LadderTail { atoms, k_star })
}

impl LadderTail {
    pub fn eval(&self, y: f64) -> f64 {
        let k = self.k_star;
        csum(self.atoms.iter().filter(|&&(_, a)| y < a).map(|&(w, a)| {
            let u = y.max(0.0);
            (w / k) * (-(-k * (a - u)).exp_m1())
        }))
    }

    /// `∫₀^x Π((u,∞)) du`.
    pub fn integral_to(&self, x: f64) -> f64 {
        let k = self.k_star;
        csum(self.atoms.iter().map(|&(w, a)| {
            let m = x.clamp(0.0, a);
            (w / k) * (m - ((-k * (a - m)).exp() - (-k * a).exp()) / k)
        }))
    }

    pub fn total(&self) -> f64 {
        self.integral_to(f64::INFINITY)
    }

    /// Largest jump magnitude; the tail vanishes beyond it.
    pub fn support_end(&self) -> f64 {
        self.atoms.iter().map(|&(_, a)| a).fold(0.0, f64::max)
    }
}

/// Stationary overshoot law: an atom at 0 (creeping) plus density
/// `Π((x,∞))/μ` with ladder mean `μ = E[-η(1)]/k*`.
#[derive(Debug, Clone, PartialEq)]
pub struct OvershootLaw {
    pub tail: LadderTail,
    pub mu: f64,
    pub creep: f64,
}

pub fn overshoot_limit_law(
    levy_minus: &LevyMeasure,
    k_star: f64,
    mean_eta1: f64,
) -> Result<OvershootLaw, LevyError> {
    if !(mean_eta1 > 0.0) {
        return Err(LevyError::InvalidParameter(format!(
            "mean of -η(1) = {mean_eta1} must be positive"
        )));
    }
    let tail = ladder_height_tail(levy_minus, k_star)?;
    let mu = mean_eta1 / k_star;
    let creep = 1.0 - tail.total() / mu;
    Ok(OvershootLaw { tail, mu, creep })
}

impl OvershootLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        self.creep + self.tail.integral_to(x) / self.mu
    }

    pub fn total_mass(&self) -> f64 {
        self.cdf(f64::INFINITY)
    }

    /// `E[g(O)]` with the continuous part integrated per atom by adaptive
    /// Simpson at absolute tolerance `tol`.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, tol: f64) -> f64 {
        let k = self.tail.k_star;
        let n = self.tail.atoms.len().max(1) as f64;
        let cont = csum(self.tail.atoms.iter().map(|&(w, a)| {
            let h = |u: f64| g(u) * (-(-k * (a - u)).exp_m1());
            (w / k) * adaptive_simpson(&h, 0.0, a, tol * self.mu * k / (w * n))
        }));
        self.creep * g(0.0) + cont / self.mu
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cumulant::{eval_big_psi, eval_psi, find_roots};
    use crate::presets;

    fn stream(i: u64) -> Stream {
        Stream::new(5, "levypath-test", i)
    }

    #[test]
    fn pure_drift_path() {
        let d = LevyDynamics::new(0.0, -1.0, 0.0, vec![]);
        let p = simulate_levy(&d, 5.0, &mut stream(0), None).unwrap();
        assert_eq!(p.segments.len(), 1);
        assert_eq!(p.value_at(2.5), Some(-2.5));
        assert_eq!(p.end_value(), -5.0);
        assert!(p.jumps.is_empty());
        let euler = LevyDynamics::new(1.0, 0.0, 0.0, vec![]);
        assert_eq!(
            simulate_levy(&euler, 1.0, &mut stream(0), None),
            Err(LevyError::StepRequired)
        );
        assert!(simulate_levy(&euler, 1.0, &mut stream(0), Some(0.1)).unwrap().segments.len() >= 10);
    }

    #[test]
    fn exponents_match_cumulant_module() {
        let ss = presets::bin04_self_similar();
        let d = LevyDynamics::from_self_similar(&ss).unwrap();
        let h = LevyDynamics::from_homogeneous_psi(&presets::two_atom()).unwrap();
        for q in [0.0, 0.5, 1.0, 3.0] {
            assert!((d.laplace_exponent(q) - eval_big_psi(&ss, q).unwrap()).abs() < 1e-13);
            let m = presets::two_atom();
            assert!((h.laplace_exponent(q) - eval_psi(&m, q).unwrap()).abs() < 1e-13);
        }
    }

    #[test]
    fn spine_exponent_and_weights() {
        let t = find_roots(&presets::bin04_self_similar()).unwrap();
        let s = LevyDynamics::spine(&t).unwrap();
        assert!((s.slope - 0.1).abs() < 1e-14);
        let om = t.omega_minus.unwrap();
        assert!((s.jump_rate() - 2.0 * 2f64.powf(-om)).abs() < 1e-12);
        for q in [0.5, 3.0] {
            assert!((s.laplace_exponent(q) - t.phi_minus(q).unwrap()).abs() < 1e-12);
        }
        assert!(LevyDynamics::spine(&find_roots(&presets::bin04()).unwrap()).is_err());
    }

    #[test]
    fn lamperti_examples() {
        let d = LevyDynamics::new(0.0, -1.0, 0.0, vec![]);
        let p = simulate_levy(&d, 50.0, &mut stream(1), None).unwrap();
        let x = lamperti(&p, 1.0, 1.0);
        for t in [0.0, 0.5, 3.0, 10.0] {
            assert!((x.value_at(t).unwrap() - 1.0 / (1.0 + t)).abs() < 1e-12);
        }
        let x0 = lamperti(&p, 0.0, 2.0);
        assert!((x0.value_at(3.0).unwrap() - 2.0 * (-3f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn lamperti_round_trip_and_scaling() {
        let d = LevyDynamics::from_self_similar(&presets::bin04_self_similar()).unwrap();
        let p = simulate_levy(&d, 6.0, &mut stream(2), None).unwrap();
        for alpha in [-0.5, 1.0, 2.0] {
            let x = lamperti(&p, alpha, 1.0);
            let back = inverse_lamperti(&x, false, p.horizon);
            for (a, b) in p.segments.iter().zip(&back.segments) {
                assert!((a.start - b.start).abs() < 1e-12 * (1.0 + a.start));
                assert!((a.value - b.value).abs() < 1e-12);
            }
            let xs = 3.0;
            let y = lamperti(&p, alpha, xs);
            for t in [0.1, 0.7, 2.0] {
                let lhs = y.value_at(t);
                let rhs = x.value_at(xs.powf(alpha) * t).map(|v| xs * v);
                match (lhs, rhs) {
                    (Some(l), Some(r)) => assert!((l - r).abs() < 1e-11 * r),
                    (l, r) => assert_eq!(l.is_none(), r.is_none()),
                }
            }
        }
    }

    #[test]
    fn exponential_functional_deterministic() {
        let d = LevyDynamics::new(0.0, -2.0, 0.0, vec![]);
        let i = exponential_functional(&d, 1.0, &mut stream(3), 1e-12).unwrap();
        assert!((i - 0.5).abs() < 1e-12);
        let up = LevyDynamics::new(0.0, 1.0, 0.0, vec![]);
        assert!(matches!(
            exponential_functional(&up, 1.0, &mut stream(3), 1e-9),
            Err(LevyError::NonDissipative { .. })
        ));
    }

    #[test]
    fn passage_examples() {
        let d = LevyDynamics::new(0.0, -1.0, 0.0, vec![]);
        let p = first_passage_below(&d, 1.0, (-3f64).exp(), &mut stream(4), 100).unwrap();
        assert!((p.time - 3.0).abs() < 1e-12);
        assert_eq!(p.value, (-3f64).exp());
        let q = first_passage_below(&d, 0.5, 1.0, &mut stream(4), 100).unwrap();
        assert_eq!(q.time, 0.0);
        let j = LevyDynamics::new(0.0, 0.0, 0.0, vec![(1.0, -std::f64::consts::LN_2)]);
        let eps = 0.3;
        for i in 0..50 {
            let r = first_passage_below(&j, 1.0, eps, &mut stream(100 + i), 1000).unwrap();
            assert!(r.value < eps && r.value >= 0.5 * eps);
        }
    }

    #[test]
    fn ladder_tail_closed_form() {
        let t = find_roots(&presets::bin04_self_similar()).unwrap();
        let lm = spine_transform(t.model.levy().unwrap(), t.omega_minus.unwrap()).unwrap();
        let ks = t.k_star().unwrap();
        let tail = ladder_height_tail(&lm, ks).unwrap();
        let w = lm.atoms()[0].weight;
        let expect = w / ks * (1.0 - 2f64.powf(-ks));
        assert!((tail.eval(0.0) - expect).abs() < 1e-15);
        assert!((tail.eval(0.0) - 0.1000).abs() < 1e-3);
        assert_eq!(tail.eval(std::f64::consts::LN_2), 0.0);
        assert_eq!(tail.eval(1.0), 0.0);
        let grid: Vec<f64> = (0..100).map(|i| i as f64 * 0.01).collect();
        assert!(grid.windows(2).all(|g| tail.eval(g[1]) <= tail.eval(g[0])));
        let law = overshoot_limit_law(&lm, ks, -t.phi_minus_deriv(0.0).unwrap()).unwrap();
        assert!((law.mu - 0.05811).abs() < 1e-4);
        assert!((law.total_mass() - 1.0).abs() < 1e-8);
        assert!(law.creep.abs() < 1e-12);
        let by_quad = law.expect(|_| 1.0, 1e-12);
        assert!((by_quad - 1.0).abs() < 1e-8);
        let cdf_mid = law.expect(|u| if u <= 0.3 { 1.0 } else { 0.0 }, 1e-10);
        assert!((cdf_mid - law.cdf(0.3)).abs() < 1e-6);
    }
}
