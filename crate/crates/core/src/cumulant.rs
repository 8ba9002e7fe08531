//! Characteristic exponents and their roots.
//!
//! Every exponent is evaluated in closed form from the finite atom lists of a
//! [`CharQuadruple`], with compensated summation because the cumulant near
//! its roots is a difference of nearly equal terms.

use serde::Serialize;
use thiserror::Error;

use crate::measures::{CharQuadruple, DislocationMeasure, JumpMeasure, MassPartition};
use crate::numeric::{bisect, csum};

/// Upper end of the root scan.
pub const ROOT_SCAN_MAX: f64 = 64.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CumulantError {
    #[error("{0} requires a {1} model")]
    WrongMode(&'static str, &'static str),
    #[error("q = {q} is outside the open domain (q_under = {q_under}, ∞)")]
    DomainError { q: f64, q_under: f64 },
    #[error("Malthusian hypothesis fails: {detail} (min kappa = {min_kappa} at q = {argmin})")]
    MalthusianHypothesisFails {
        min_kappa: f64,
        argmin: f64,
        detail: String,
    },
    #[error("the model has no q_bar (q κ'(q) - κ(q) never changes sign on (q_under, {ROOT_SCAN_MAX}])")]
    NoQbar,
    #[error("the model has no Malthusian root omega_minus")]
    NoMalthusianRoot,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn one_minus_exp(y: f64) -> f64 {
    -y.exp_m1()
}

/// `ψ(q)`: Laplace exponent of the motion of a single particle (homogeneous).
pub fn eval_psi(model: &CharQuadruple, q: f64) -> Result<f64, CumulantError> {
    let nu = model
        .dislocation()
        .ok_or(CumulantError::WrongMode("psi", "homogeneous"))?;
    let mut terms = vec![0.5 * model.sigma2 * q * q, model.drift * q];
    for a in nu.split_atoms() {
        terms.push(a.weight * q * (1.0 - a.partition.largest()));
    }
    for a in nu.single_atoms() {
        let p1 = a.partition.largest();
        terms.push(a.weight * ((q * p1.ln()).exp_m1() + q * (1.0 - p1)));
    }
    Ok(csum(terms))
}

/// `Ψ(q)`: Laplace exponent of the driving Lévy process (self-similar).
pub fn eval_big_psi(model: &CharQuadruple, q: f64) -> Result<f64, CumulantError> {
    let levy = model
        .levy()
        .ok_or(CumulantError::WrongMode("Psi", "self-similar"))?;
    let mut terms = vec![-model.kill, 0.5 * model.sigma2 * q * q, model.drift * q];
    for a in levy.atoms() {
        terms.push(a.weight * ((q * a.jump).exp_m1() + q * one_minus_exp(a.jump)));
    }
    Ok(csum(terms))
}

fn homogeneous_kappa_terms(sigma2: f64, c: f64, nu: &DislocationMeasure, q: f64) -> f64 {
    let mut terms = vec![0.5 * sigma2 * q * q, c * q];
    for a in nu.atoms() {
        let p: &MassPartition = &a.partition;
        terms.push(a.weight * (p.power_sum(q) - 1.0 + q * (1.0 - p.largest())));
    }
    csum(terms)
}

/// `κ(q)`. Finite for every `q ≥ 0` because the measures are finite.
pub fn eval_kappa(model: &CharQuadruple, q: f64) -> f64 {
    match &model.jumps {
        JumpMeasure::Dislocation(nu) => homogeneous_kappa_terms(model.sigma2, model.drift, nu, q),
        JumpMeasure::Levy(levy) => {
            let mut terms = vec![-model.kill, 0.5 * model.sigma2 * q * q, model.drift * q];
            for a in levy.atoms() {
                terms.push(a.weight * ((q * a.jump).exp_m1() + q * one_minus_exp(a.jump)));
                if a.jump < 0.0 {
                    terms.push(a.weight * one_minus_exp(a.jump).powf(q));
                }
            }
            csum(terms)
        }
    }
}

/// Closed-form first and second derivatives of κ, valid at any `q ≥ 0`.
fn kappa_derivatives(model: &CharQuadruple, q: f64) -> (f64, f64) {
    match &model.jumps {
        JumpMeasure::Dislocation(nu) => {
            let mut d1 = vec![model.sigma2 * q, model.drift];
            let mut d2 = vec![model.sigma2];
            for a in nu.atoms() {
                let p = &a.partition;
                let s1 = csum(p.parts().iter().map(|&x| x.powf(q) * x.ln()));
                let s2 = csum(p.parts().iter().map(|&x| x.powf(q) * x.ln().powi(2)));
                d1.push(a.weight * (s1 + 1.0 - p.largest()));
                d2.push(a.weight * s2);
            }
            (csum(d1), csum(d2))
        }
        JumpMeasure::Levy(levy) => {
            let mut d1 = vec![model.sigma2 * q, model.drift];
            let mut d2 = vec![model.sigma2];
            for a in levy.atoms() {
                let y = a.jump;
                let e = (q * y).exp();
                d1.push(a.weight * (y * e + one_minus_exp(y)));
                d2.push(a.weight * y * y * e);
                if y < 0.0 {
                    let d = one_minus_exp(y);
                    let l = d.ln();
                    let dq = d.powf(q);
                    d1.push(a.weight * dq * l);
                    d2.push(a.weight * dq * l * l);
                }
            }
            (csum(d1), csum(d2))
        }
    }
}

/// `κ'(q)` (order 1) or `κ''(q)` (order 2).
pub fn eval_kappa_deriv(model: &CharQuadruple, q: f64, order: u8) -> Result<f64, CumulantError> {
    if !(q > 0.0) {
        return Err(CumulantError::DomainError { q, q_under: 0.0 });
    }
    let (d1, d2) = kappa_derivatives(model, q);
    match order {
        1 => Ok(d1),
        2 => Ok(d2),
        _ => Err(CumulantError::InvalidParameter(format!(
            "derivative order {order} not in {{1, 2}}"
        ))),
    }
}

/// Exponent of the pure-fragmentation martingale `N(t;q)`:
/// `φ(q) = ∫_{𝒫\𝒫₁}(Σp_i^q - 1)dν`. Satisfies `φ + ψ = κ`.
pub fn eval_phi(nu: &DislocationMeasure, q: f64) -> f64 {
    csum(nu.split_atoms().map(|a| a.weight * (a.partition.power_sum(q) - 1.0)))
}

/// `W^γ_{ν,q} = ∫_{𝒫\𝒫₁}|1 - Σp_i^q|^γ dν`.
pub fn eval_w_gamma(nu: &DislocationMeasure, q: f64, gamma: f64) -> Result<f64, CumulantError> {
    if !(gamma > 1.0 && gamma <= 2.0) {
        return Err(CumulantError::InvalidParameter(format!(
            "gamma = {gamma} must lie in (1, 2]"
        )));
    }
    Ok(csum(nu.split_atoms().map(|a| {
        a.weight * (1.0 - a.partition.power_sum(q)).abs().powf(gamma)
    })))
}

/// `f(t,x,y) = (e^{tx} - e^{ty})/(x - y)`, with limit `t e^{tx}` at `x = y`.
pub fn growth_kernel(t: f64, x: f64, y: f64) -> f64 {
    if (x - y).abs() < 1e-12 {
        t * (t * x).exp()
    } else {
        ((t * x).exp() - (t * y).exp()) / (x - y)
    }
}

/// Upper bound on `E[M(t;q)^γ]` up to the unspecified constant `c_γ`
/// (pass 1.0 for the bare shape).
pub fn moment_bound(
    model: &CharQuadruple,
    q: f64,
    gamma: f64,
    t: f64,
    c_gamma: f64,
) -> Result<f64, CumulantError> {
    let nu = model
        .dislocation()
        .ok_or(CumulantError::WrongMode("moment_bound", "homogeneous"))?;
    let w = eval_w_gamma(nu, q, gamma)?;
    if w == 0.0 {
        return Ok(0.0);
    }
    let x = eval_psi(model, gamma * q)? - gamma * eval_psi(model, q)?;
    let y = eval_kappa(model, gamma * q) - gamma * eval_kappa(model, q);
    Ok(c_gamma * w * growth_kernel(t, x, y))
}

/// Roots and regime data of κ.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulantTable {
    pub model: CharQuadruple,
    pub q_under: f64,
    pub q_bar: Option<f64>,
    pub omega_minus: Option<f64>,
    pub omega_plus: Option<f64>,
    pub argmin: f64,
    pub min_kappa: f64,
    /// Why a quantity is absent, one line per missing item.
    pub diagnostics: Vec<String>,
}

/// Serializable summary emitted by `cumulant roots`.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RootsSummary {
    pub q_under: f64,
    pub q_bar: Option<f64>,
    pub omega_minus: Option<f64>,
    pub omega_plus: Option<f64>,
    pub kappa_prime_at_qbar: Option<f64>,
    pub kappa_prime_at_omega_minus: Option<f64>,
}

/// Locates the first sign change of an increasing function on
/// `(0, ROOT_SCAN_MAX]` by a geometric scan, then bisects.
fn root_of_increasing<F: Fn(f64) -> f64>(f: F, lo: f64) -> Option<f64> {
    if f(lo) >= 0.0 {
        return None;
    }
    let mut prev = lo;
    let mut k = 40;
    loop {
        let q = ROOT_SCAN_MAX * 0.5f64.powi(k);
        if q > lo {
            if f(q) >= 0.0 {
                return Some(bisect(&f, prev, q));
            }
            prev = q;
        }
        if k == 0 {
            return None;
        }
        k -= 1;
    }
}

impl CumulantTable {
    /// Computes every root that exists; absent ones are explained in
    /// `diagnostics`. Never fails.
    pub fn build(model: &CharQuadruple) -> CumulantTable {
        let q_under = 0.0;
        let mut diagnostics = Vec::new();
        let kappa = |q: f64| eval_kappa(model, q);
        let kappa1 = |q: f64| kappa_derivatives(model, q).0;

        // Minimizer of the convex κ: root of the increasing κ'.
        let argmin = if kappa1(q_under) >= 0.0 {
            q_under
        } else {
            match root_of_increasing(kappa1, q_under) {
                Some(q) => q,
                None => {
                    diagnostics.push(format!(
                        "kappa is still decreasing at q = {ROOT_SCAN_MAX}; minimizer not bracketed"
                    ));
                    ROOT_SCAN_MAX
                }
            }
        };
        let min_kappa = kappa(argmin);

        let (omega_minus, omega_plus) = if min_kappa > 0.0 {
            diagnostics.push(format!(
                "kappa > 0 everywhere (min {min_kappa} at q = {argmin}); no Malthusian roots"
            ));
            (None, None)
        } else {
            let om = if kappa(q_under) > 0.0 {
                Some(bisect(kappa, q_under, argmin))
            } else {
                diagnostics.push("kappa(0) <= 0: no root below the minimizer".into());
                None
            };
            let op = if kappa(ROOT_SCAN_MAX) > 0.0 && argmin < ROOT_SCAN_MAX {
                Some(bisect(kappa, argmin, ROOT_SCAN_MAX))
            } else {
                diagnostics.push(format!(
                    "kappa <= 0 at q = {ROOT_SCAN_MAX}: upper root not bracketed"
                ));
                None
            };
            (om, op)
        };

        let g = |q: f64| q * kappa1(q) - kappa(q);
        let q_bar = match root_of_increasing(g, q_under) {
            Some(q) if q > q_under => Some(q),
            _ => {
                diagnostics.push(
                    "q kappa'(q) - kappa(q) has no sign change on the scan range".into(),
                );
                None
            }
        };

        CumulantTable {
            model: model.clone(),
            q_under,
            q_bar,
            omega_minus,
            omega_plus,
            argmin,
            min_kappa,
            diagnostics,
        }
    }

    pub fn kappa(&self, q: f64) -> f64 {
        eval_kappa(&self.model, q)
    }

    pub fn kappa_deriv(&self, q: f64, order: u8) -> Result<f64, CumulantError> {
        eval_kappa_deriv(&self.model, q, order)
    }

    pub fn q_bar(&self) -> Result<f64, CumulantError> {
        self.q_bar.ok_or(CumulantError::NoQbar)
    }

    pub fn omega_minus(&self) -> Result<f64, CumulantError> {
        self.omega_minus.ok_or(CumulantError::NoMalthusianRoot)
    }

    pub fn omega_plus(&self) -> Result<f64, CumulantError> {
        self.omega_plus.ok_or(CumulantError::NoMalthusianRoot)
    }

    /// `k* = ω⁺ - ω⁻`, the right inverse at 0 of `Φ⁻`.
    pub fn k_star(&self) -> Result<f64, CumulantError> {
        Ok(self.omega_plus()? - self.omega_minus()?)
    }

    /// `κ*(q) = κ(q q̄) - q κ(q̄)`.
    pub fn kappa_star(&self, q: f64) -> Result<f64, CumulantError> {
        let qb = self.q_bar()?;
        Ok(self.kappa(q * qb) - q * self.kappa(qb))
    }

    pub fn kappa_star_deriv(&self, q: f64) -> Result<f64, CumulantError> {
        let qb = self.q_bar()?;
        Ok(qb * kappa_derivatives(&self.model, q * qb).0 - self.kappa(qb))
    }

    /// `Φ⁻(q) = κ(q + ω⁻)`: exponent of the tagged cell.
    pub fn phi_minus(&self, q: f64) -> Result<f64, CumulantError> {
        Ok(self.kappa(q + self.omega_minus()?))
    }

    pub fn phi_minus_deriv(&self, q: f64) -> Result<f64, CumulantError> {
        Ok(kappa_derivatives(&self.model, q + self.omega_minus()?).0)
    }

    pub fn summary(&self) -> RootsSummary {
        RootsSummary {
            q_under: self.q_under,
            q_bar: self.q_bar,
            omega_minus: self.omega_minus,
            omega_plus: self.omega_plus,
            kappa_prime_at_qbar: self.q_bar.map(|q| kappa_derivatives(&self.model, q).0),
            kappa_prime_at_omega_minus: self
                .omega_minus
                .map(|q| kappa_derivatives(&self.model, q).0),
        }
    }
}

/// Like [`CumulantTable::build`] but insists on both Malthusian roots.
pub fn find_roots(model: &CharQuadruple) -> Result<CumulantTable, CumulantError> {
    let table = CumulantTable::build(model);
    if table.omega_minus.is_none() || table.omega_plus.is_none() {
        return Err(CumulantError::MalthusianHypothesisFails {
            min_kappa: table.min_kappa,
            argmin: table.argmin,
            detail: table.diagnostics.join("; "),
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn psi_examples() {
        let m = presets::bin04();
        assert!((eval_psi(&m, 1.0).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(eval_psi(&m, 0.0).unwrap(), 0.0);
        let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.5])]).unwrap();
        let m2 = CharQuadruple::homogeneous(2.0, -0.5, nu).unwrap();
        // σ²q²/2 with the drift cancelled by ∫(1-p₁)dν.
        assert!((eval_psi(&m2, 2.0).unwrap() - 4.0).abs() < 1e-14);
        assert!(eval_psi(&presets::bin04_self_similar(), 1.0).is_err());
    }

    #[test]
    fn kappa_bin04_closed_form() {
        let m = presets::bin04();
        for &(q, v) in &[(0.0, 1.0), (1.0, 0.1), (2.0, -0.3)] {
            assert!((eval_kappa(&m, q) - v).abs() < 1e-14, "q={q}");
        }
        let ss = presets::bin04_self_similar();
        for q in [0.0, 1.0, 2.0] {
            assert!((eval_kappa(&ss, q) - eval_kappa(&m, q)).abs() < 1e-12);
        }
        let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.5])]).unwrap();
        let m0 = CharQuadruple::homogeneous(0.0, 0.0, nu).unwrap();
        assert!((eval_kappa(&m0, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_bin04() {
        let m = presets::bin04();
        let ln2 = std::f64::consts::LN_2;
        assert!((eval_kappa_deriv(&m, 1.0, 1).unwrap() - (0.1 - ln2)).abs() < 1e-14);
        assert!((eval_kappa_deriv(&m, 1.0, 2).unwrap() - ln2 * ln2).abs() < 1e-14);
        assert!(matches!(
            eval_kappa_deriv(&m, 0.0, 1),
            Err(CumulantError::DomainError { .. })
        ));
        assert!(eval_kappa_deriv(&m, 1.0, 3).is_err());
    }

    #[test]
    fn roots_absent_when_kappa_positive() {
        let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.5])]).unwrap();
        let m = CharQuadruple::homogeneous(0.0, 0.0, nu).unwrap();
        match find_roots(&m) {
            Err(CumulantError::MalthusianHypothesisFails { min_kappa, argmin, .. }) => {
                let ln2 = std::f64::consts::LN_2;
                let qmin = 2.0 + ln2.ln() / ln2;
                assert!((argmin - qmin).abs() < 1e-9);
                assert!((min_kappa - 0.457).abs() < 1e-3);
            }
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn kappa_star_and_phi_minus_identities() {
        let t = find_roots(&presets::bin04()).unwrap();
        assert!(t.kappa_star(1.0).unwrap().abs() < 1e-12);
        assert!(t.kappa_star_deriv(1.0).unwrap().abs() < 1e-10);
        assert!((t.kappa_star(0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!(t.phi_minus(0.0).unwrap().abs() < 1e-10);
        assert!((t.phi_minus_deriv(0.0).unwrap() + 0.5113).abs() < 1e-4);
        let ks = t.k_star().unwrap();
        assert!(t.phi_minus(ks).unwrap().abs() < 1e-10);
    }

    #[test]
    fn w_gamma_and_kernel() {
        let nu = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.5])]).unwrap();
        assert_eq!(eval_w_gamma(&nu, 1.0, 1.5).unwrap(), 0.0);
        assert!((eval_w_gamma(&nu, 2.0, 2.0).unwrap() - 0.25).abs() < 1e-15);
        let nu2 = DislocationMeasure::from_pairs(&[(1.0, &[0.5, 0.25])]).unwrap();
        assert!((eval_w_gamma(&nu2, 1.0, 2.0).unwrap() - 0.0625).abs() < 1e-15);
        assert!(eval_w_gamma(&nu, 1.0, 1.0).is_err());
        assert_eq!(growth_kernel(1.0, 0.0, 0.0), 1.0);
        assert!((growth_kernel(1.0, 0.0, -1.0) - 0.632_120_558_828_557_7).abs() < 1e-15);
        let m = presets::bin04();
        assert_eq!(moment_bound(&m, 1.0, 2.0, 3.0, 1.0).unwrap(), 0.0);
        assert!(moment_bound(&m, 2.0, 2.0, 3.0, 1.0).unwrap() > 0.0);
    }

    #[test]
    fn phi_plus_psi_is_kappa() {
        let m = presets::two_atom();
        let nu = m.dislocation().unwrap();
        for q in [0.3, 1.0, 2.5, 6.0] {
            let lhs = eval_phi(nu, q) + eval_psi(&m, q).unwrap();
            assert!((lhs - eval_kappa(&m, q)).abs() < 1e-13);
        }
    }
}
