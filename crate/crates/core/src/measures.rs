//! Mass-partitions, dislocation measures and Lévy jump measures.
//!
//! Only finite discrete measures are represented. Infinite-activity
//! dislocation measures enter through [`DislocationMeasure::truncate`], which
//! removes the fragments below a size threshold `e^{-b}`.

use std::f64::consts::LN_2;

use thiserror::Error;

use crate::numeric::csum;

/// Tolerance on `Σ p_i ≤ 1`. Excess below it is clamped, above it rejected.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("invalid mass-partition: {0}")]
    InvalidPartition(String),
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("jump size {jump} outside [-log 2, 0)")]
    OutOfSupport { jump: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// A ranked mass-partition `p_1 ≥ p_2 ≥ … > 0` with `Σ p_i ≤ 1`.
///
/// Stored in canonical form: trailing zeros are stripped, so the null
/// partition has no parts and a partition with one part lies in the
/// single-fragment subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct MassPartition {
    parts: Vec<f64>,
}

impl MassPartition {
    /// Builds a partition from ranked proportions (non-increasing).
    pub fn new(parts: &[f64]) -> Result<Self, MeasureError> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(MeasureError::InvalidPartition(format!(
                "parts must be non-increasing, got {parts:?}"
            )));
        }
        Self::from_unranked(parts)
    }

    /// Ranks arbitrary proportions in non-increasing order first.
    pub fn from_unranked(parts: &[f64]) -> Result<Self, MeasureError> {
        let mut v = Vec::with_capacity(parts.len());
        for &p in parts {
            if !p.is_finite() || p < 0.0 {
                return Err(MeasureError::InvalidPartition(format!(
                    "part {p} is not in [0, 1]"
                )));
            }
            if p > 1.0 + SUM_TOLERANCE {
                return Err(MeasureError::InvalidPartition(format!(
                    "part {p} is not in [0, 1]"
                )));
            }
            v.push(p.min(1.0));
        }
        v.sort_by(|a, b| b.partial_cmp(a).expect("finite parts"));
        let total = csum(v.iter().copied());
        if total > 1.0 + SUM_TOLERANCE {
            return Err(MeasureError::InvalidPartition(format!(
                "parts sum to {total} > 1 (mass-partitions carry at most unit mass)"
            )));
        }
        if total > 1.0 {
            for p in &mut v {
                *p /= total;
            }
        }
        Ok(MassPartition {
            parts: canonical(&v),
        })
    }

    pub fn parts(&self) -> &[f64] {
        &self.parts
    }

    /// Largest part, zero for the null partition.
    pub fn largest(&self) -> f64 {
        self.parts.first().copied().unwrap_or(0.0)
    }

    pub fn sum(&self) -> f64 {
        csum(self.parts.iter().copied())
    }

    pub fn dust(&self) -> f64 {
        (1.0 - self.sum()).max(0.0)
    }

    /// `(1, 0, …)`, excluded from dislocation measures.
    pub fn is_trivial(&self) -> bool {
        self.parts.len() == 1 && self.parts[0] == 1.0
    }

    /// Whether the partition has a single positive fragment.
    pub fn is_single_fragment(&self) -> bool {
        self.parts.len() == 1
    }

    /// `Σ p_i^q` over positive parts (so `q = 0` counts fragments).
    pub fn power_sum(&self, q: f64) -> f64 {
        csum(self.parts.iter().map(|&p| p.powf(q)))
    }

    /// Keeps `p_1` and the parts `p_i > threshold` for `i ≥ 2`.
    pub fn truncated(&self, threshold: f64) -> MassPartition {
        let mut parts = Vec::with_capacity(self.parts.len());
        for (i, &p) in self.parts.iter().enumerate() {
            if i == 0 || p > threshold {
                parts.push(p);
            }
        }
        MassPartition { parts }
    }
}

/// Strips trailing zeros from a ranked list.
pub fn canonical(parts: &[f64]) -> Vec<f64> {
    let end = parts.iter().rposition(|&p| p > 0.0).map_or(0, |i| i + 1);
    parts[..end].to_vec()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DislocationAtom {
    pub weight: f64,
    pub partition: MassPartition,
}

/// Finite discrete dislocation measure `ν = Σ w_j δ_{p^(j)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DislocationMeasure {
    atoms: Vec<DislocationAtom>,
}

impl DislocationMeasure {
    pub fn new(atoms: Vec<DislocationAtom>) -> Result<Self, MeasureError> {
        if atoms.is_empty() {
            return Err(MeasureError::InvalidMeasure(
                "dislocation measure must be nontrivial (no atoms given)".into(),
            ));
        }
        for a in &atoms {
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(MeasureError::InvalidMeasure(format!(
                    "atom weight {} must be positive and finite",
                    a.weight
                )));
            }
            if a.partition.is_trivial() {
                return Err(MeasureError::InvalidMeasure(
                    "the trivial partition (1, 0, ...) cannot carry mass".into(),
                ));
            }
        }
        Ok(DislocationMeasure { atoms })
    }

    /// Convenience constructor from `(weight, ranked parts)` pairs.
    pub fn from_pairs(pairs: &[(f64, &[f64])]) -> Result<Self, MeasureError> {
        let atoms = pairs
            .iter()
            .map(|&(w, parts)| {
                Ok(DislocationAtom {
                    weight: w,
                    partition: MassPartition::new(parts)?,
                })
            })
            .collect::<Result<Vec<_>, MeasureError>>()?;
        Self::new(atoms)
    }

    pub fn atoms(&self) -> &[DislocationAtom] {
        &self.atoms
    }

    pub fn total_mass(&self) -> f64 {
        csum(self.atoms.iter().map(|a| a.weight))
    }

    /// `ν(𝒫 \ 𝒫₁)`: the rate of branching events.
    pub fn branching_rate(&self) -> f64 {
        csum(self.split_atoms().map(|a| a.weight))
    }

    /// Atoms with zero or at least two fragments.
    pub fn split_atoms(&self) -> impl Iterator<Item = &DislocationAtom> {
        self.atoms.iter().filter(|a| !a.partition.is_single_fragment())
    }

    /// Atoms with exactly one fragment (pure shrinking events).
    pub fn single_atoms(&self) -> impl Iterator<Item = &DislocationAtom> {
        self.atoms.iter().filter(|a| a.partition.is_single_fragment())
    }

    pub fn is_conservative(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| (a.partition.sum() - 1.0).abs() <= SUM_TOLERANCE)
    }

    /// `∫ f(p) ν(dp)` with compensated summation.
    pub fn integrate<F: Fn(&MassPartition) -> f64>(&self, f: F) -> f64 {
        csum(self.atoms.iter().map(|a| a.weight * f(&a.partition)))
    }

    /// Image of ν under `p ↦ (p₁, p₂·1{p₂>e^{-b}}, …)`.
    pub fn truncate(&self, b: f64) -> Result<DislocationMeasure, MeasureError> {
        if !(b > 0.0) {
            return Err(MeasureError::InvalidParameter(format!(
                "truncation level b = {b} must be positive"
            )));
        }
        let threshold = (-b).exp();
        let atoms = self
            .atoms
            .iter()
            .map(|a| DislocationAtom {
                weight: a.weight,
                partition: a.partition.truncated(threshold),
            })
            .collect();
        Ok(DislocationMeasure { atoms })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevyAtom {
    pub weight: f64,
    pub jump: f64,
}

/// Finite discrete Lévy measure `Λ = Σ λ_j δ_{y_j}`. May be empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LevyMeasure {
    atoms: Vec<LevyAtom>,
}

impl LevyMeasure {
    pub fn new(atoms: Vec<LevyAtom>) -> Result<Self, MeasureError> {
        for a in &atoms {
            if !(a.weight.is_finite() && a.weight > 0.0) {
                return Err(MeasureError::InvalidMeasure(format!(
                    "Lévy atom weight {} must be positive and finite",
                    a.weight
                )));
            }
            if !a.jump.is_finite() || a.jump == 0.0 {
                return Err(MeasureError::InvalidMeasure(format!(
                    "Lévy jump size {} must be finite and nonzero",
                    a.jump
                )));
            }
        }
        Ok(LevyMeasure { atoms })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, MeasureError> {
        Self::new(
            pairs
                .iter()
                .map(|&(weight, jump)| LevyAtom { weight, jump })
                .collect(),
        )
    }

    pub fn atoms(&self) -> &[LevyAtom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        csum(self.atoms.iter().map(|a| a.weight))
    }

    pub fn negative_mass(&self) -> f64 {
        csum(self.atoms.iter().filter(|a| a.jump < 0.0).map(|a| a.weight))
    }

    pub fn has_positive_jumps(&self) -> bool {
        self.atoms.iter().any(|a| a.jump > 0.0)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        csum(self.atoms.iter().map(|a| a.weight * f(a.jump)))
    }

    /// `Λ((-∞, x))`.
    pub fn mass_below(&self, x: f64) -> f64 {
        csum(self.atoms.iter().filter(|a| a.jump < x).map(|a| a.weight))
    }

    /// `∫(1 ∧ y²) dΛ`, finite for every valid finite measure.
    pub fn small_jump_integral(&self) -> f64 {
        self.integrate(|y| (y * y).min(1.0))
    }

    /// True when all jump sizes are integer multiples of a common span, in
    /// which case the driven process is arithmetic. Detected up to a relative
    /// tolerance on the ratios.
    pub fn is_commensurable(&self) -> bool {
        let mut sizes: Vec<f64> = self.atoms.iter().map(|a| a.jump.abs()).collect();
        sizes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sizes.dedup();
        let Some(&base) = sizes.first() else {
            return true;
        };
        sizes.iter().all(|&s| {
            let r = s / base;
            // Small rationals p/q with q ≤ 12 count as commensurable.
            (1..=12).any(|q| {
                let x = r * q as f64;
                (x - x.round()).abs() < 1e-9 * x.max(1.0)
            })
        })
    }
}

/// Laplace-exponent family of a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Homogeneous,
    SelfSimilar,
}

#[derive(Debug, Clone, PartialEq)]
pub enum JumpMeasure {
    Dislocation(DislocationMeasure),
    Levy(LevyMeasure),
}

/// Characteristic quadruple `(σ², b, jump measure, k)`.
///
/// In the homogeneous case `drift` is the growth rate `c` and the jump part
/// is a dislocation measure; killing is expressed there through null
/// partitions, so `kill` must be zero.
#[derive(Debug, Clone, PartialEq)]
pub struct CharQuadruple {
    pub sigma2: f64,
    pub drift: f64,
    pub kill: f64,
    pub jumps: JumpMeasure,
}

impl CharQuadruple {
    pub fn homogeneous(sigma2: f64, growth: f64, nu: DislocationMeasure) -> Result<Self, MeasureError> {
        check_common(sigma2, growth, 0.0)?;
        Ok(CharQuadruple {
            sigma2,
            drift: growth,
            kill: 0.0,
            jumps: JumpMeasure::Dislocation(nu),
        })
    }

    pub fn self_similar(
        sigma2: f64,
        drift: f64,
        levy: LevyMeasure,
        kill: f64,
    ) -> Result<Self, MeasureError> {
        check_common(sigma2, drift, kill)?;
        Ok(CharQuadruple {
            sigma2,
            drift,
            kill,
            jumps: JumpMeasure::Levy(levy),
        })
    }

    pub fn mode(&self) -> Mode {
        match self.jumps {
            JumpMeasure::Dislocation(_) => Mode::Homogeneous,
            JumpMeasure::Levy(_) => Mode::SelfSimilar,
        }
    }

    pub fn dislocation(&self) -> Option<&DislocationMeasure> {
        match &self.jumps {
            JumpMeasure::Dislocation(nu) => Some(nu),
            JumpMeasure::Levy(_) => None,
        }
    }

    pub fn levy(&self) -> Option<&LevyMeasure> {
        match &self.jumps {
            JumpMeasure::Levy(l) => Some(l),
            JumpMeasure::Dislocation(_) => None,
        }
    }
}

fn check_common(sigma2: f64, drift: f64, kill: f64) -> Result<(), MeasureError> {
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(MeasureError::InvalidParameter("sigma2 ≥ 0 required".into()));
    }
    if !drift.is_finite() {
        return Err(MeasureError::InvalidParameter("drift must be finite".into()));
    }
    if !(kill.is_finite() && kill >= 0.0) {
        return Err(MeasureError::InvalidParameter("kill ≥ 0 required".into()));
    }
    Ok(())
}

/// Integrability and regime diagnostics of a dislocation measure.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `∫(1-p₁)dν`; finite means a pure fragmentation with this ν exists.
    pub int_one_minus_p1: f64,
    /// `∫(1-p₁)²dν`; finiteness is the compensated integrability condition.
    pub int_one_minus_p1_sq: f64,
    /// `κ(0) = ∫(#fragments - 1)dν`.
    pub kappa0: f64,
    pub supercritical: bool,
    /// `(q, ν|𝒫\𝒫₁(Σp_i^q < 1))` on the requested grid of `q < 1`.
    pub smallq: Vec<(f64, f64)>,
    pub smallq_holds: bool,
    pub conservative: bool,
}

/// Evaluates every homogeneous-case condition on ν.
pub fn check_homogeneous_conditions(nu: &DislocationMeasure, q_grid: &[f64]) -> ConditionReport {
    let int1 = nu.integrate(|p| 1.0 - p.largest());
    let int2 = nu.integrate(|p| (1.0 - p.largest()).powi(2));
    let kappa0 = nu.integrate(|p| p.parts().len() as f64 - 1.0);
    let smallq: Vec<(f64, f64)> = q_grid
        .iter()
        .filter(|&&q| q < 1.0)
        .map(|&q| {
            let mass = csum(
                nu.split_atoms()
                    .filter(|a| a.partition.power_sum(q) < 1.0)
                    .map(|a| a.weight),
            );
            (q, mass)
        })
        .collect();
    let smallq_holds = smallq.iter().all(|&(_, m)| m.is_finite());
    ConditionReport {
        int_one_minus_p1: int1,
        int_one_minus_p1_sq: int2,
        kappa0,
        supercritical: kappa0 > 0.0,
        smallq,
        smallq_holds,
        conservative: nu.is_conservative(),
    }
}

/// Maps each atom `(λ, y)` with `y ∈ [-log 2, 0)` to `λ δ_{(e^y, 1-e^y)}`.
pub fn binary_embed(levy: &LevyMeasure) -> Result<DislocationMeasure, MeasureError> {
    let lower = -LN_2 * (1.0 + 1e-12);
    let atoms = levy
        .atoms()
        .iter()
        .map(|a| {
            if !(a.jump >= lower && a.jump < 0.0) {
                return Err(MeasureError::OutOfSupport { jump: a.jump });
            }
            let big = a.jump.exp();
            let small = -a.jump.exp_m1();
            Ok(DislocationAtom {
                weight: a.weight,
                partition: MassPartition::from_unranked(&[big, small])?,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    DislocationMeasure::new(atoms)
}

/// Rounds to 15 significant digits; the key under which jump sizes merge.
fn merge_key(y: f64) -> f64 {
    format!("{y:.14e}").parse().expect("formatted float parses")
}

/// Lévy measure of the tagged-cell process:
/// `∫g dΛ⁻ = ∫[e^{yω}g(y) + 1{y<0}(1-e^y)^ω g(log(1-e^y))] Λ(dy)`.
pub fn spine_transform(levy: &LevyMeasure, omega: f64) -> Result<LevyMeasure, MeasureError> {
    if !(omega.is_finite() && omega >= 0.0) {
        return Err(MeasureError::InvalidParameter(format!(
            "exponent {omega} must be nonnegative"
        )));
    }
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut push = |jump: f64, weight: f64| {
        if weight <= 0.0 || jump == 0.0 || !jump.is_finite() {
            return;
        }
        let key = merge_key(jump);
        match merged.iter_mut().find(|(k, _)| *k == key) {
            Some((_, w)) => *w += weight,
            None => merged.push((key, weight)),
        }
    };
    for a in levy.atoms() {
        push(a.jump, a.weight * (a.jump * omega).exp());
        if a.jump < 0.0 {
            let daughter = -a.jump.exp_m1();
            push(daughter.ln(), a.weight * daughter.powf(omega));
        }
    }
    merged.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    LevyMeasure::from_pairs(&merged.iter().map(|&(y, w)| (w, y)).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_canonical_and_validation() {
        let p = MassPartition::new(&[0.5, 0.25, 0.0, 0.0]).unwrap();
        assert_eq!(p.parts(), &[0.5, 0.25]);
        assert!((p.dust() - 0.25).abs() < 1e-15);
        assert!(MassPartition::new(&[0.25, 0.5]).is_err());
        assert!(MassPartition::new(&[0.7, 0.4]).is_err());
        assert!(MassPartition::new(&[1.2]).is_err());
        // Out of order, so `new` rejects it; `from_unranked` sorts and clamps.
        assert!(MassPartition::new(&[0.5, 0.5 + 5e-13]).is_err());
        let r = MassPartition::from_unranked(&[0.5, 0.5 + 5e-13]).unwrap();
        assert!(r.sum() <= 1.0 + 1e-15);
        assert!(MassPartition::new(&[0.0, 0.0]).unwrap().parts().is_empty());
    }

    #[test]
    fn conditions_binary_half() {
        let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.5])]).unwrap();
        let r = check_homogeneous_conditions(&nu, &[0.25, 0.5, 0.75]);
        assert!(r.conservative);
        assert!((r.int_one_minus_p1 - 0.5).abs() < 1e-15);
        assert!((r.int_one_minus_p1_sq - 0.25).abs() < 1e-15);
        assert_eq!(r.kappa0, 1.0);
        assert!(r.supercritical);
        assert!(r.smallq_holds);
        // Σ p^q = 2^{1-q} > 1 for q < 1, so the small-q set has no mass.
        assert!(r.smallq.iter().all(|&(_, m)| m == 0.0));
    }

    #[test]
    fn invalid_measures() {
        assert!(matches!(
            DislocationMeasure::new(vec![]),
            Err(MeasureError::InvalidMeasure(_))
        ));
        assert!(matches!(
            DislocationMeasure::from_pairs(&[(1.0, &[1.0])]),
            Err(MeasureError::InvalidMeasure(_))
        ));
        assert!(DislocationMeasure::from_pairs(&[(0.0, &[0.5, 0.5])]).is_err());
    }

    #[test]
    fn binary_embed_examples() {
        let l = LevyMeasure::from_pairs(&[(1.0, -LN_2)]).unwrap();
        let nu = binary_embed(&l).unwrap();
        let p = nu.atoms()[0].partition.parts();
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
        assert!(nu.is_conservative());

        let l = LevyMeasure::from_pairs(&[(2.0, -(4.0f64 / 3.0).ln())]).unwrap();
        let nu = binary_embed(&l).unwrap();
        assert_eq!(nu.atoms()[0].weight, 2.0);
        let p = nu.atoms()[0].partition.parts();
        assert!((p[0] - 0.75).abs() < 1e-15 && (p[1] - 0.25).abs() < 1e-15);

        let l = LevyMeasure::from_pairs(&[(1.0, 0.1)]).unwrap();
        assert_eq!(binary_embed(&l), Err(MeasureError::OutOfSupport { jump: 0.1 }));
        let l = LevyMeasure::from_pairs(&[(1.0, -0.8)]).unwrap();
        assert!(matches!(binary_embed(&l), Err(MeasureError::OutOfSupport { .. })));
    }

    #[test]
    fn truncation_examples() {
        let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.25, 0.25])]).unwrap();
        let t = nu.truncate(3f64.ln()).unwrap();
        assert_eq!(t.atoms()[0].partition.parts(), &[0.5]);
        assert_eq!(t.branching_rate(), 0.0);

        let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.5])]).unwrap();
        assert_eq!(nu.truncate(10.0).unwrap(), nu);
        assert!(nu.truncate(0.0).is_err());
    }

    #[test]
    fn spine_transform_examples() {
        let l = LevyMeasure::from_pairs(&[(1.0, -LN_2)]).unwrap();
        let w = 1.1814;
        let s = spine_transform(&l, w).unwrap();
        assert_eq!(s.atoms().len(), 1);
        assert!((s.atoms()[0].weight - 2f64.powf(1.0 - w)).abs() < 1e-12);
        assert!((s.atoms()[0].weight - 0.8818).abs() < 1e-4);
        assert!((s.atoms()[0].jump + LN_2).abs() < 1e-14);

        let s = spine_transform(&l, 0.0).unwrap();
        assert!((s.atoms()[0].weight - 2.0).abs() < 1e-15);

        let l = LevyMeasure::from_pairs(&[(1.0, 0.5)]).unwrap();
        let s = spine_transform(&l, 2.0).unwrap();
        assert_eq!(s.atoms().len(), 1);
        assert!((s.atoms()[0].weight - 1f64.exp()).abs() < 1e-14);
        assert!(s.small_jump_integral().is_finite());
    }

    #[test]
    fn commensurability() {
        assert!(LevyMeasure::from_pairs(&[(1.0, -LN_2)]).unwrap().is_commensurable());
        assert!(LevyMeasure::from_pairs(&[(1.0, -LN_2), (1.0, -2.0 * LN_2)])
            .unwrap()
            .is_commensurable());
        assert!(!LevyMeasure::from_pairs(&[(1.0, -LN_2), (1.0, -1.0)])
            .unwrap()
            .is_commensurable());
    }
}
