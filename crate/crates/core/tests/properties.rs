use gfrag::cellsystem::{freeze, is_antichain, simulate_cell_system};
use gfrag::config::RunConfig;
use gfrag::cumulant::{eval_kappa, eval_kappa_deriv};
use gfrag::homogeneous::{additive_martingale, simulate_branching_levy, SimLimits};
use gfrag::levypath::LevyDynamics;
use gfrag::mclab::{equivalence_test, run_replicas, slope_fit, McResult};
use gfrag::measures::{
    binary_embed, canonical, CharQuadruple, DislocationAtom, DislocationMeasure, LevyMeasure, MassPartition,
};
use gfrag::presets;
use gfrag::stream::{Stream, StreamKey};
use proptest::prelude::*;
use rand::RngCore;

fn parts_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, 1..6).prop_map(|raw| {
        let total: f64 = raw.iter().sum::<f64>() + 1e-3;
        let mut v: Vec<f64> = raw.iter().map(|x| x / total).collect();
        v.push(0.0);
        v
    })
}

/// Binary dislocation atoms `(w, (p, 1-p))` with `p` away from 1.
fn binary_nu() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.1f64..2.0, 0.5f64..0.95), 1..4)
}

fn homogeneous_model(sigma2: f64, c: f64, atoms: &[(f64, f64)]) -> CharQuadruple {
    let nu = DislocationMeasure::new(
        atoms
            .iter()
            .map(|&(w, p)| DislocationAtom { weight: w, partition: MassPartition::new(&[p, 1.0 - p]).unwrap() })
            .collect(),
    )
    .unwrap();
    CharQuadruple::homogeneous(sigma2, c, nu).unwrap()
}

// Hand-rolled κ for binary atoms, written out term by term.
fn kappa_oracle(sigma2: f64, c: f64, atoms: &[(f64, f64)], q: f64) -> f64 {
    let jumps: f64 = atoms
        .iter()
        .map(|&(w, p)| w * (p.powf(q) + (1.0 - p).powf(q) - 1.0 + q * (1.0 - p)))
        .sum();
    0.5 * sigma2 * q * q + c * q + jumps
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_is_idempotent(parts in parts_strategy()) {
        let once = canonical(&parts);
        prop_assert_eq!(canonical(&once), once.clone());
        prop_assert!(once.last().is_none_or(|&p| p > 0.0));
    }

    #[test]
    fn partitions_are_ranked_and_sub_unit(parts in parts_strategy()) {
        let p = MassPartition::from_unranked(&parts).unwrap();
        prop_assert!(p.parts().windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(p.sum() <= 1.0 + 1e-12);
        prop_assert!((p.sum() + p.dust() - 1.0).abs() < 1e-12);
        prop_assert!((p.power_sum(0.0) - p.parts().len() as f64).abs() < 1e-12);
    }

    #[test]
    fn truncation_is_monotone_in_level(parts in parts_strategy(), b1 in 0.05f64..5.0, db in 0.0f64..5.0) {
        let p = MassPartition::from_unranked(&parts).unwrap();
        let nu = DislocationMeasure::new(vec![DislocationAtom { weight: 1.0, partition: p.clone() }]).unwrap();
        let coarse = nu.truncate(b1).unwrap();
        let fine = nu.truncate(b1 + db).unwrap();
        let (a, b) = (&coarse.atoms()[0].partition, &fine.atoms()[0].partition);
        prop_assert!(a.parts().len() <= b.parts().len());
        prop_assert_eq!(a.largest(), p.largest());
        prop_assert!(a.parts().iter().zip(b.parts()).all(|(x, y)| x == y));
    }

    #[test]
    fn kappa_matches_term_by_term_oracle(
        sigma2 in 0.0f64..1.0, c in -1.0f64..1.0, atoms in binary_nu(), q in 0.2f64..6.0
    ) {
        let model = homogeneous_model(sigma2, c, &atoms);
        let want = kappa_oracle(sigma2, c, &atoms, q);
        prop_assert!((eval_kappa(&model, q) - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn kappa_is_convex(
        sigma2 in 0.0f64..1.0, c in -1.0f64..1.0, atoms in binary_nu(), q1 in 0.2f64..6.0, q2 in 0.2f64..6.0
    ) {
        let model = homogeneous_model(sigma2, c, &atoms);
        let mid = eval_kappa(&model, 0.5 * (q1 + q2));
        let chord = 0.5 * (eval_kappa(&model, q1) + eval_kappa(&model, q2));
        prop_assert!(mid <= chord + 1e-12);
        prop_assert!(eval_kappa_deriv(&model, q1, 2).unwrap() >= -1e-12);
    }

    #[test]
    fn derivatives_match_finite_differences(
        sigma2 in 0.0f64..1.0, c in -1.0f64..1.0, atoms in binary_nu(), q in 0.5f64..5.0
    ) {
        let model = homogeneous_model(sigma2, c, &atoms);
        let h = 1e-4;
        let k = |x: f64| eval_kappa(&model, x);
        let d1 = (k(q + h) - k(q - h)) / (2.0 * h);
        let d2 = (k(q + h) - 2.0 * k(q) + k(q - h)) / (h * h);
        prop_assert!((eval_kappa_deriv(&model, q, 1).unwrap() - d1).abs() < 1e-6 * d1.abs().max(1.0));
        prop_assert!((eval_kappa_deriv(&model, q, 2).unwrap() - d2).abs() < 1e-3 * d2.abs().max(1.0));
    }

    #[test]
    fn self_similar_and_binary_embedding_agree(
        sigma2 in 0.0f64..1.0, b in -1.0f64..1.0,
        jumps in prop::collection::vec((0.1f64..2.0, -0.69f64..-0.05), 1..4), q in 0.2f64..6.0
    ) {
        let levy = LevyMeasure::from_pairs(&jumps).unwrap();
        let ss = CharQuadruple::self_similar(sigma2, b, levy.clone(), 0.0).unwrap();
        let hom = CharQuadruple::homogeneous(sigma2, b, binary_embed(&levy).unwrap()).unwrap();
        let (a, h) = (eval_kappa(&ss, q), eval_kappa(&hom, q));
        prop_assert!((a - h).abs() <= 1e-12 * a.abs().max(1.0), "{} vs {}", a, h);
    }

    #[test]
    fn streams_are_reproducible(seed in any::<u64>(), i in 0u64..1000) {
        let mut a = Stream::new(seed, "p", i);
        let mut b = StreamKey::for_replica(seed, "p", i).stream();
        for _ in 0..8 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        prop_assert_ne!(StreamKey::for_replica(seed, "p", i).child(1), StreamKey::for_replica(seed, "p", i).child(2));
    }

    #[test]
    fn conservative_mass_martingale_is_one(seed in any::<u64>()) {
        let model = presets::two_atom();
        let mut rng = Stream::new(seed, "mass", 0);
        let out = simulate_branching_levy(&model, &[0.0, 1.0, 3.0], &mut rng, SimLimits { floor: 0.0, cap: 1_000_000 }).unwrap();
        for k in 0..3 {
            let m = additive_martingale(&model, &out, k, 1.0);
            prop_assert!((m.value - 1.0).abs() < 1e-10);
            prop_assert_eq!(m.bias_bound, 0.0);
        }
    }

    #[test]
    fn frozen_cells_form_an_antichain(seed in any::<u64>(), eps in 0.01f64..0.3) {
        let dynamics = LevyDynamics::from_self_similar(&presets::bin04_self_similar()).unwrap();
        let fam = freeze(&dynamics, eps, 1.0, StreamKey::root(seed), 1_000_000, true).unwrap();
        let labels = fam.labels.as_ref().unwrap();
        prop_assert!(is_antichain(labels));
        prop_assert_eq!(labels.len(), fam.sizes.len());
        prop_assert!(fam.sizes.iter().all(|&s| s > 0.0 && s <= eps * (1.0 + 1e-12)));
    }

    #[test]
    fn genealogy_is_a_function_of_its_key(seed in any::<u64>()) {
        let dynamics = LevyDynamics::from_self_similar(&presets::bin04_self_similar()).unwrap();
        let key = StreamKey::for_replica(seed, "cells", 0);
        let a = simulate_cell_system(&dynamics, 1.0, 1.0, 2.0, 1e-3, key, 100_000).unwrap();
        let b = simulate_cell_system(&dynamics, 1.0, 1.0, 2.0, 1e-3, key, 100_000).unwrap();
        prop_assert_eq!(a.cells.len(), b.cells.len());
        prop_assert_eq!(a.state_at(2.0), b.state_at(2.0));
    }

    #[test]
    fn replicas_do_not_depend_on_worker_count(seed in any::<u64>(), n in 1usize..64) {
        let f = |_: u64, rng: &mut Stream| rng.open01();
        let one = run_replicas(n, seed, "w", 1, f).unwrap();
        let many = run_replicas(n, seed, "w", 4, f).unwrap();
        prop_assert_eq!(one, many);
    }

    #[test]
    fn equivalence_is_symmetric(a in -5.0f64..5.0, b in -5.0f64..5.0, sa in 0.01f64..1.0, sb in 0.01f64..1.0) {
        let (x, y) = (McResult::new(a, sa, 100, 0), McResult::new(b, sb, 100, 0));
        let (v, w) = (equivalence_test(&x, &y), equivalence_test(&y, &x));
        prop_assert_eq!(v.pass, w.pass);
        prop_assert!((v.z + w.z).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_recovers_exact_lines(slope in -3.0f64..3.0, icpt in -2.0f64..2.0) {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| icpt + slope * x).collect();
        let fit = slope_fit(&xs, &ys, &[0.1; 5], (slope - 0.01, slope + 0.01)).unwrap();
        prop_assert!((fit.slope - slope).abs() < 1e-10);
        prop_assert!((fit.intercept - icpt).abs() < 1e-10);
        prop_assert!(fit.pass);
    }

    #[test]
    fn config_round_trips(seed in 0..=i64::MAX as u64, drift in -1.0f64..1.0, p in 0.5f64..0.95, horizon in 0.5f64..20.0) {
        let text = format!(
            "seed = {seed}\n[model]\nmode = \"homogeneous\"\ndrift = {drift:?}\n[[model.atom]]\nweight = 1.0\nparts = [{p:?}, {:?}]\n[simulation]\nhorizon = {horizon:?}\n",
            1.0 - p
        );
        let cfg = RunConfig::parse(&text).unwrap();
        let again = RunConfig::parse(&cfg.to_toml()).unwrap();
        prop_assert_eq!(cfg.hash(), again.hash());
        prop_assert_eq!(cfg, again);
    }

    #[test]
    fn oversized_seeds_are_reported(seed in (i64::MAX as u64 + 1)..=u64::MAX) {
        let mut cfg = RunConfig::parse("[model]\nmode = \"homogeneous\"\n[[model.atom]]\nweight = 1.0\nparts = [0.5, 0.5]\n").unwrap();
        cfg.seed = seed;
        prop_assert_eq!(cfg.violations().len(), 1);
    }
}
