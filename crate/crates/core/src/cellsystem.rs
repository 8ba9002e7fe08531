//! Self-similar cell systems: recursive genealogies, Malthusian and
//! intrinsic martingales, the tagged cell, freezing and the tail of the
//! largest fragment.

use thiserror::Error;

use crate::cumulant::{CumulantError, CumulantTable};
use crate::fspec::FSpec;
use crate::levypath::{levy_time_in_piece, real_time_in_piece, LevyDynamics, LevyError, PssPiece, PssmpPath};
use crate::measures::spine_transform;
use crate::numeric::{adaptive_simpson, csum};
use crate::stream::{Stream, StreamKey};

/// Default cap on the number of cells per replica.
pub const DEFAULT_CELL_CAP: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CellError {
    #[error(transparent)]
    Levy(#[from] LevyError),
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
    #[error("cell budget {0} exceeded")]
    CellBudgetExceeded(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// How a cell's simulated life ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CellEnd {
    /// Still alive at the horizon.
    Horizon,
    /// Sent to the cemetery at this absolute time.
    Absorbed(f64),
    /// Dropped below the floor at this absolute time.
    Pruned(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellRecord {
    /// Ulam–Harris word, 1-based.
    pub label: Vec<u32>,
    pub birth_time: f64,
    pub initial_size: f64,
    /// Path relative to the birth time.
    pub path: PssmpPath,
    /// `(absolute birth time, initial size)` of the daughters, in label order.
    pub children: Vec<(f64, f64)>,
    pub end: CellEnd,
}

impl CellRecord {
    /// Size at absolute time `t`, if alive.
    pub fn size_at(&self, t: f64) -> Option<f64> {
        if t < self.birth_time {
            return None;
        }
        if let CellEnd::Pruned(tp) = self.end {
            if t >= tp {
                return None;
            }
        }
        self.path.value_at(t - self.birth_time)
    }

    pub fn generation(&self) -> usize {
        self.label.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LedgerReason {
    /// Born below the floor.
    BornBelowFloor,
    /// Fell below the floor during its life.
    FellBelowFloor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerEntry {
    pub label: Vec<u32>,
    pub time: f64,
    pub size: f64,
    pub reason: LedgerReason,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Genealogy {
    pub x0: f64,
    pub alpha: f64,
    pub horizon: f64,
    pub cells: Vec<CellRecord>,
    pub ledger: Vec<LedgerEntry>,
    /// The cell budget was exhausted; the genealogy is partial.
    pub capped: bool,
}

/// Outcome of walking one cell.
struct Walk {
    pieces: Vec<PssPiece>,
    jumps: Vec<(f64, f64)>,
    /// `(relative time, size)` of each daughter.
    daughters: Vec<(f64, f64)>,
    end_rel: f64,
    end: WalkEnd,
    end_size: f64,
}

#[derive(Clone, Copy, PartialEq)]
enum WalkEnd {
    Horizon,
    Absorbed,
    Pruned,
}

/// Walks one cell of initial size `y0` for `span` real time units.
fn walk_cell(dynamics: &LevyDynamics, alpha: f64, y0: f64, span: f64, floor: f64, rng: &mut Stream) -> Walk {
    let m = dynamics.slope;
    let mut pieces = Vec::new();
    let mut jumps = Vec::new();
    let mut daughters = Vec::new();
    let mut t = 0.0;
    let mut y = y0;
    loop {
        let (d, killed) = dynamics.next_event(rng);
        let dt = real_time_in_piece(alpha, y, m, d);
        if t + dt > span {
            let rest = span - t;
            pieces.push(PssPiece { t0: t, dt: rest, y0: y, m });
            let s = levy_time_in_piece(alpha, y, m, rest);
            let end_size = y * (m * s).exp();
            return Walk { pieces, jumps, daughters, end_rel: span, end: WalkEnd::Horizon, end_size };
        }
        pieces.push(PssPiece { t0: t, dt, y0: y, m });
        t += dt;
        if d.is_infinite() || killed {
            // Killing, or a drift that reaches the cemetery in finite real time.
            return Walk { pieces, jumps, daughters, end_rel: t, end: WalkEnd::Absorbed, end_size: 0.0 };
        }
        y *= (m * d).exp();
        let jump = dynamics.sample_jump(rng);
        let factor = jump.exp();
        if jump < 0.0 {
            daughters.push((t, y * (-jump.exp_m1())));
        }
        jumps.push((t, factor));
        y *= factor;
        if y < floor {
            return Walk { pieces, jumps, daughters, end_rel: t, end: WalkEnd::Pruned, end_size: y };
        }
    }
}

/// Simulates the cell system on `[0, horizon]` from an Eve of size `x0`.
/// Cells are expanded depth-first; every cell draws from a stream derived
/// from `key` and its label, so the genealogy does not depend on traversal.
pub fn simulate_cell_system(
    dynamics: &LevyDynamics,
    alpha: f64,
    x0: f64,
    horizon: f64,
    floor: f64,
    key: StreamKey,
    cap: usize,
) -> Result<Genealogy, CellError> {
    if !(x0 > 0.0) || !(horizon >= 0.0) {
        return Err(CellError::InvalidParameter("x0 > 0 and horizon >= 0 required".into()));
    }
    let mut cells = Vec::new();
    let mut ledger = Vec::new();
    let mut capped = false;
    let mut stack: Vec<(Vec<u32>, f64, f64, StreamKey)> = vec![(Vec::new(), 0.0, x0, key)];
    while let Some((label, birth, y0, k)) = stack.pop() {
        if y0 < floor {
            ledger.push(LedgerEntry { label, time: birth, size: y0, reason: LedgerReason::BornBelowFloor });
            continue;
        }
        if cells.len() >= cap {
            capped = true;
            break;
        }
        let mut rng = k.stream();
        let w = walk_cell(dynamics, alpha, y0, horizon - birth, floor, &mut rng);
        let mut kids: Vec<(f64, f64)> = w.daughters.iter().map(|&(t, s)| (birth + t, s)).collect();
        // Decreasing size, ties broken by later birth first.
        kids.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.total_cmp(&a.0)));
        for (i, &(b, s)) in kids.iter().enumerate().rev() {
            let mut l = label.clone();
            l.push(i as u32 + 1);
            stack.push((l, b, s, k.child(i as u64 + 1)));
        }
        let end = match w.end {
            WalkEnd::Horizon => CellEnd::Horizon,
            WalkEnd::Absorbed => CellEnd::Absorbed(birth + w.end_rel),
            WalkEnd::Pruned => {
                ledger.push(LedgerEntry {
                    label: label.clone(),
                    time: birth + w.end_rel,
                    size: w.end_size,
                    reason: LedgerReason::FellBelowFloor,
                });
                CellEnd::Pruned(birth + w.end_rel)
            }
        };
        let absorbed = matches!(end, CellEnd::Absorbed(_));
        cells.push(CellRecord {
            label,
            birth_time: birth,
            initial_size: y0,
            path: PssmpPath {
                alpha,
                x0: y0,
                pieces: w.pieces,
                jumps: w.jumps,
                absorption: absorbed.then_some(w.end_rel),
                end_time: w.end_rel,
            },
            children: kids,
            end,
        });
    }
    Ok(Genealogy { x0, alpha, horizon, cells, ledger, capped })
}

impl Genealogy {
    /// Sizes of the cells alive at `t`, ranked non-increasing.
    pub fn state_at(&self, t: f64) -> Vec<f64> {
        let mut v: Vec<f64> = self.cells.iter().filter_map(|c| c.size_at(t)).filter(|&s| s > 0.0).collect();
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    /// `Σ X_i(t)^q`.
    pub fn power_sum(&self, t: f64, q: f64) -> f64 {
        csum(self.cells.iter().filter_map(|c| c.size_at(t)).map(|s| s.powf(q)))
    }

    /// `M⁻(t) = Σ X_i(t)^{ω⁻}` and the ledger bias bound
    /// `Σ size^{ω⁻}` over cells ledgered by time `t`.
    pub fn malthusian_martingale(&self, t: f64, omega_minus: f64) -> (f64, f64) {
        let bias = csum(
            self.ledger
                .iter()
                .filter(|e| e.time <= t)
                .map(|e| e.size.powf(omega_minus)),
        );
        (self.power_sum(t, omega_minus), bias)
    }

    /// `⟨ρ_t, f⟩ = Σ X_i(t)^{ω⁻} f(t^{1/α} X_i(t))`.
    pub fn empirical_rho(&self, t: f64, f: &FSpec, omega_minus: f64) -> f64 {
        let scale = t.powf(1.0 / self.alpha);
        csum(
            self.cells
                .iter()
                .filter_map(|c| c.size_at(t))
                .map(|s| s.powf(omega_minus) * f.eval(scale * s)),
        )
    }

    /// `Σ X_i(t)^{ω⁻} f(X_i(t))`, the left side of the many-to-one formula.
    pub fn weighted_sum(&self, t: f64, f: &FSpec, omega_minus: f64) -> f64 {
        csum(
            self.cells
                .iter()
                .filter_map(|c| c.size_at(t))
                .map(|s| s.powf(omega_minus) * f.eval(s)),
        )
    }

    /// `𝓜⁻(n) = Σ_{|u|=n+1} 𝒳_u(0)^{ω⁻}`, including ledgered cells at birth.
    /// Flagged incomplete when a cell of generation ≤ n was still alive at
    /// the horizon.
    pub fn intrinsic_martingale(&self, n: usize, omega_minus: f64) -> IntrinsicValue {
        let born = self
            .cells
            .iter()
            .filter(|c| c.generation() == n + 1)
            .map(|c| c.initial_size.powf(omega_minus));
        let ledgered = self
            .ledger
            .iter()
            .filter(|e| e.label.len() == n + 1 && e.reason == LedgerReason::BornBelowFloor)
            .map(|e| e.size.powf(omega_minus));
        let complete = !self
            .cells
            .iter()
            .any(|c| c.generation() <= n && c.end == CellEnd::Horizon);
        IntrinsicValue { value: csum(born.chain(ledgered)), bias_bound: 0.0, complete }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntrinsicValue {
    pub value: f64,
    /// Expected mass missed because mothers were stopped at the floor.
    pub bias_bound: f64,
    pub complete: bool,
}

/// Intrinsic martingale values `𝓜⁻(0..=n_max)` from a generation-limited
/// expansion without time horizon. Birth sizes do not depend on the clock,
/// so cells run in Lévy time until they drop below `floor`; each stopped
/// mother of size `s` misses daughters of expected total `s^{ω⁻}`.
pub fn intrinsic_by_generation(
    dynamics: &LevyDynamics,
    omega_minus: f64,
    x0: f64,
    n_max: usize,
    floor: f64,
    key: StreamKey,
) -> Result<Vec<IntrinsicValue>, CellError> {
    if !(floor > 0.0) {
        return Err(CellError::InvalidParameter("a positive floor is required".into()));
    }
    if !dynamics.is_dissipative() {
        return Err(CellError::Levy(LevyError::NonDissipative { mean: dynamics.mean(), kill: dynamics.kill }));
    }
    let mut sums = vec![crate::numeric::CompensatedSum::new(); n_max + 1];
    let mut bias = vec![crate::numeric::CompensatedSum::new(); n_max + 1];
    let mut stack: Vec<(usize, f64, StreamKey)> = vec![(0, x0, key)];
    let mut cells = 0usize;
    while let Some((generation, y0, k)) = stack.pop() {
        if generation >= 1 {
            sums[generation - 1].add(y0.powf(omega_minus));
        }
        if generation > n_max || y0 < floor {
            if generation <= n_max {
                for b in bias.iter_mut().skip(generation) {
                    b.add(y0.powf(omega_minus));
                }
            }
            continue;
        }
        cells += 1;
        if cells > DEFAULT_CELL_CAP {
            return Err(CellError::CellBudgetExceeded(DEFAULT_CELL_CAP));
        }
        let mut rng = k.stream();
        let w = walk_cell(dynamics, 0.0, y0, f64::INFINITY, floor, &mut rng);
        if w.end == WalkEnd::Pruned {
            for b in bias.iter_mut().skip(generation) {
                b.add(w.end_size.powf(omega_minus));
            }
        }
        let mut kids: Vec<(f64, f64)> = w.daughters;
        kids.sort_by(|a, b| b.1.total_cmp(&a.1).then(b.0.total_cmp(&a.0)));
        for (i, &(_, s)) in kids.iter().enumerate().rev() {
            stack.push((generation + 1, s, k.child(i as u64 + 1)));
        }
    }
    Ok(sums
        .iter()
        .zip(&bias)
        .map(|(s, b)| IntrinsicValue { value: s.value(), bias_bound: b.value(), complete: true })
        .collect())
}

/// Tagged-cell path with characteristics `(Φ⁻, α)` over real time `[0, horizon]`.
pub fn simulate_spine(
    spine: &LevyDynamics,
    alpha: f64,
    x0: f64,
    horizon: f64,
    rng: &mut Stream,
) -> PssmpPath {
    let w = walk_cell(spine, alpha, x0, horizon, 0.0, rng);
    PssmpPath {
        alpha,
        x0,
        pieces: w.pieces,
        jumps: w.jumps,
        absorption: (w.end == WalkEnd::Absorbed).then_some(w.end_rel),
        end_time: w.end_rel,
    }
}

/// Cells frozen at their first passage below `ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenFamily {
    pub sizes: Vec<f64>,
    /// Binary labels (`1` continues the mother, `2` is the daughter), when requested.
    pub labels: Option<Vec<Vec<u8>>>,
}

/// Freezes every cell at its first passage below `eps`, on the binary tree:
/// at each negative jump, `u1` is the mother after the jump and `u2` the
/// daughter. Runs in Lévy time (freezing does not depend on α).
pub fn freeze(
    dynamics: &LevyDynamics,
    eps: f64,
    x0: f64,
    key: StreamKey,
    cap: usize,
    with_labels: bool,
) -> Result<FrozenFamily, CellError> {
    if !(eps > 0.0 && x0 > 0.0) {
        return Err(CellError::InvalidParameter("eps and x0 must be positive".into()));
    }
    let m = dynamics.slope;
    let mut sizes = Vec::new();
    let mut labels = with_labels.then(Vec::new);
    let mut stack: Vec<(Vec<u8>, f64, StreamKey)> = vec![(Vec::new(), x0, key)];
    let mut cells = 0usize;
    while let Some((label, y0, k)) = stack.pop() {
        if y0 < eps {
            sizes.push(y0);
            if let Some(l) = labels.as_mut() {
                l.push(label);
            }
            continue;
        }
        cells += 1;
        if cells > cap {
            return Err(CellError::CellBudgetExceeded(cap));
        }
        let mut rng = k.stream();
        let mut y = y0;
        loop {
            let (d, killed) = dynamics.next_event(&mut rng);
            if m < 0.0 && (y.ln() + m * d) <= eps.ln() {
                sizes.push(eps);
                if let Some(l) = labels.as_mut() {
                    l.push(label.clone());
                }
                break;
            }
            if d.is_infinite() {
                return Err(CellError::Levy(LevyError::NonDissipative {
                    mean: dynamics.mean(),
                    kill: dynamics.kill,
                }));
            }
            if killed {
                break;
            }
            y *= (m * d).exp();
            let jump = dynamics.sample_jump(&mut rng);
            if jump < 0.0 {
                let mother = y * jump.exp();
                let daughter = y * (-jump.exp_m1());
                let mut l2 = label.clone();
                l2.push(2);
                let mut l1 = label;
                l1.push(1);
                stack.push((l2, daughter, k.child(2)));
                stack.push((l1, mother, k.child(1)));
                break;
            }
            y *= jump.exp();
        }
    }
    Ok(FrozenFamily { sizes, labels })
}

/// `⟨φ^ε, f⟩ = Σ s^{ω⁻} f(s/ε)` over the frozen family.
pub fn frozen_empirical(family: &FrozenFamily, eps: f64, omega_minus: f64, f: &FSpec) -> f64 {
    csum(family.sizes.iter().map(|&s| s.powf(omega_minus) * f.eval(s / eps)))
}

/// True when no label is a prefix of another.
pub fn is_antichain(labels: &[Vec<u8>]) -> bool {
    let mut v: Vec<&Vec<u8>> = labels.iter().collect();
    v.sort();
    v.windows(2).all(|w| !w[1].starts_with(w[0]))
}

/// Closed form of the limit measure of the frozen cells:
/// `⟨φ,f⟩ = (1/(-κ'(ω⁻))) Σ_j w_j ∫_{y_j}^0 f(e^x)(1 - e^{k*(y_j - x)}) dx`
/// over the negative atoms `(w_j, y_j)` of `Λ⁻`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiMeasure {
    atoms: Vec<(f64, f64)>,
    k_star: f64,
    norm: f64,
}

pub fn analytic_phi(table: &CumulantTable) -> Result<PhiMeasure, CellError> {
    let levy = table
        .model
        .levy()
        .ok_or_else(|| CellError::InvalidParameter("freezing needs a self-similar model".into()))?;
    let om = table.omega_minus()?;
    let lm = spine_transform(levy, om).map_err(|e| CellError::InvalidParameter(e.to_string()))?;
    let atoms = lm.atoms().iter().filter(|a| a.jump < 0.0).map(|a| (a.weight, a.jump)).collect();
    Ok(PhiMeasure { atoms, k_star: table.k_star()?, norm: -table.phi_minus_deriv(0.0)? })
}

impl PhiMeasure {
    /// `⟨φ, f⟩` for a piecewise-constant `f`, in closed form.
    pub fn integrate(&self, f: &FSpec) -> f64 {
        let k = self.k_star;
        let pieces = f.pieces();
        let total = csum(self.atoms.iter().flat_map(|&(w, yj)| {
            pieces.iter().map(move |&(lo, hi, v)| {
                let x1 = if lo > 0.0 { lo.ln() } else { f64::NEG_INFINITY }.max(yj);
                let x2 = if hi.is_finite() { hi.ln() } else { f64::INFINITY }.min(0.0);
                if v == 0.0 || x2 <= x1 {
                    return 0.0;
                }
                let exp_part = ((k * (yj - x1)).exp() - (k * (yj - x2)).exp()) / k;
                w * v * ((x2 - x1) - exp_part)
            })
        }));
        total / self.norm
    }

    /// `⟨φ, g⟩` for a general function by adaptive quadrature in `x = log y`.
    pub fn integrate_fn<G: Fn(f64) -> f64>(&self, g: G, tol: f64) -> f64 {
        let k = self.k_star;
        let total = csum(self.atoms.iter().map(|&(w, yj)| {
            let h = |x: f64| g(x.exp()) * (-(k * (yj - x)).exp_m1());
            w * adaptive_simpson(&h, yj, 0.0, tol * self.norm / (w * self.atoms.len() as f64))
        }));
        total / self.norm
    }

    /// Lower end of the support in size ratio.
    pub fn support_lo(&self) -> f64 {
        self.atoms.iter().map(|&(_, y)| y).fold(0.0, f64::min).exp()
    }
}

/// One replica of the importance-sampled tail estimator of
/// `P(sup_t X₁(t) > x)` at α = 0.
///
/// The law is tilted by the additive martingale `M⁺(t) = Σ X_i(t)^{ω⁺}`.
/// Under the tilt a spine cell follows the Lévy process with exponent
/// `κ(q + ω⁺)` and almost surely crosses `x`, while off-spine cells follow
/// the original law. With `T` the first time any cell exceeds `x`, the
/// estimator is `1/M⁺(T) ≤ x^{-ω⁺}`. Off-spine cells below `prune` are
/// dropped; each such cell of size `s` could have crossed with probability
/// at most `(s/x)^{ω⁺}`, which is accumulated in the returned bias bound.
pub fn tail_replica(
    model_dyn: &LevyDynamics,
    table: &CumulantTable,
    x: f64,
    prune: f64,
    rng: &mut Stream,
) -> Result<(f64, f64), CellError> {
    let op = table.omega_plus()?;
    let levy = table
        .model
        .levy()
        .ok_or_else(|| CellError::InvalidParameter("tail study needs a self-similar model".into()))?;
    if table.model.sigma2 > 0.0 {
        return Err(CellError::Levy(LevyError::StepRequired));
    }
    // `(rate, spine jump, off-spine log factor)`. Continuation atoms keep the
    // spine in the mother; switch atoms move it into the daughter.
    let mut atoms: Vec<(f64, f64, Option<f64>)> = Vec::new();
    for a in levy.atoms() {
        let other = (a.jump < 0.0).then(|| (-a.jump.exp_m1()).ln());
        atoms.push((a.weight * (a.jump * op).exp(), a.jump, other));
        if let Some(d) = other {
            atoms.push((a.weight * (d * op).exp(), d, Some(a.jump)));
        }
    }
    let total: f64 = atoms.iter().map(|a| a.0).sum();
    let slope = model_dyn.slope + table.model.sigma2 * op;
    let level = x.ln();

    // Spine trajectory as (time, log-size after event) breakpoints.
    let mut spine: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    let mut off: Vec<(f64, f64)> = Vec::new();
    let mut t = 0.0;
    let mut l = 0.0f64;
    let t_spine;
    loop {
        let d = rng.exp(total);
        if slope > 0.0 && l + slope * d >= level {
            t_spine = t + (level - l) / slope;
            break;
        }
        if d.is_infinite() {
            return Err(CellError::InvalidParameter("tilted spine never crosses the level".into()));
        }
        t += d;
        l += slope * d;
        let u = rng.open01() * total;
        let mut acc = 0.0;
        let mut pick = atoms[atoms.len() - 1];
        for a in &atoms {
            acc += a.0;
            if u < acc {
                pick = *a;
                break;
            }
        }
        let (_, y, other) = pick;
        if let Some(o) = other {
            off.push((t, l + o));
        }
        l += y;
        spine.push((t, l));
        if l >= level {
            t_spine = t;
            break;
        }
    }

    // Off-spine subtrees under the original law, up to the current crossing time.
    let mut horizon = t_spine;
    let mut tracks: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut ends: Vec<f64> = Vec::new();
    let mut bias = 0.0;
    let log_prune = prune.ln();
    let mut stack: Vec<(f64, f64)> = off;
    let m = model_dyn.slope;
    while let Some((b, l0)) = stack.pop() {
        if b >= horizon {
            continue;
        }
        if l0 < log_prune {
            bias += ((l0 - level) * op).exp();
            continue;
        }
        let mut track = vec![(b, l0)];
        let mut tc = b;
        let mut lc = l0;
        let mut end = f64::INFINITY;
        loop {
            let (d, killed) = model_dyn.next_event(rng);
            if m > 0.0 && lc + m * d >= level && tc + (level - lc) / m < horizon {
                horizon = tc + (level - lc) / m;
                break;
            }
            if tc + d >= horizon {
                break;
            }
            tc += d;
            lc += m * d;
            if killed {
                end = tc;
                break;
            }
            let y = model_dyn.sample_jump(rng);
            if y < 0.0 {
                stack.push((tc, lc + (-y.exp_m1()).ln()));
            }
            lc += y;
            track.push((tc, lc));
            if lc >= level {
                horizon = tc;
                break;
            }
            if lc < log_prune {
                bias += ((lc - level) * op).exp();
                end = tc;
                break;
            }
        }
        tracks.push(track);
        ends.push(end);
    }

    let at = |track: &[(f64, f64)], slope: f64, t: f64| -> Option<f64> {
        let i = track.partition_point(|p| p.0 <= t);
        if i == 0 {
            return None;
        }
        let (t0, l0) = track[i - 1];
        Some(l0 + slope * (t - t0))
    };
    let mut mplus = crate::numeric::CompensatedSum::new();
    if let Some(ls) = at(&spine, slope, horizon) {
        mplus.add((op * ls).exp());
    }
    for (track, &end) in tracks.iter().zip(&ends) {
        if end <= horizon {
            continue;
        }
        if let Some(lc) = at(track, m, horizon) {
            mplus.add((op * lc).exp());
        }
    }
    Ok((1.0 / mplus.value(), bias))
}

/// Plain Monte Carlo indicator of `sup_t X₁(t) > x` at α = 0, with cells
/// below `prune` dropped.
pub fn naive_tail_replica(model_dyn: &LevyDynamics, x: f64, prune: f64, rng: &mut Stream, cap: usize) -> Result<bool, CellError> {
    let level = x.ln();
    let lp = prune.ln();
    let m = model_dyn.slope;
    let mut stack = vec![0.0f64];
    let mut cells = 0;
    while let Some(l0) = stack.pop() {
        if l0 < lp {
            continue;
        }
        cells += 1;
        if cells > cap {
            return Err(CellError::CellBudgetExceeded(cap));
        }
        let mut l = l0;
        loop {
            let (d, killed) = model_dyn.next_event(rng);
            if m > 0.0 && l + m * d >= level {
                return Ok(true);
            }
            if d.is_infinite() || killed {
                break;
            }
            l += m * d;
            let y = model_dyn.sample_jump(rng);
            if y < 0.0 {
                stack.push(l + (-y.exp_m1()).ln());
            }
            l += y;
            if l >= level {
                return Ok(true);
            }
            if l < lp {
                break;
            }
        }
    }
    Ok(false)
}

/// Analytic band for `log X₁(t)/log t` at α > 0:
/// `[-1/α, -(1/α)(1 - ω⁻/ω⁺)]`.
pub fn largest_bounds(table: &CumulantTable, alpha: f64) -> Result<(f64, f64), CellError> {
    let om = table.omega_minus()?;
    let op = table.omega_plus()?;
    Ok((-1.0 / alpha, -(1.0 - om / op) / alpha))
}
