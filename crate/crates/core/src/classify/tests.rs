use proptest::prelude::*;

use super::*;
use crate::model::{EnvironmentField, FamilyParams, SwitchLaw};
use crate::presets::{fig3a_model, fig3b_model};

fn cfg() -> ClassifyConfig {
    ClassifyConfig::default()
}

fn face(m: &[usize]) -> SubspaceIndex {
    SubspaceIndex::new(m.iter().copied())
}

#[test]
fn minmax_examples() {
    let w = minmax_matrix(&[vec![1.0]], 1).unwrap();
    assert_eq!(w.p, vec![1.0]);
    assert_eq!(w.rho, 1.0);
    let w = minmax_matrix(&[vec![-1.0, 2.0], vec![2.0, -1.0]], 2).unwrap();
    assert!((w.p[0] - 0.5).abs() < 1e-12 && (w.rho - 0.5).abs() < 1e-12, "{w:?}");
    assert!(minmax_matrix(&[vec![-1.0, -1.0]], 2).is_none());
}

#[test]
fn minmax_three_species_refines() {
    // Optimum p = (1/3, 1/3, 1/3) with rho = 1/3 for the cyclic table.
    let rows = vec![vec![0.0, 2.0, -1.0], vec![-1.0, 0.0, 2.0], vec![2.0, -1.0, 0.0]];
    let w = minmax_matrix(&rows, 3).unwrap();
    assert!((w.rho - 1.0 / 3.0).abs() < 1e-8, "{w:?}");
}

#[test]
fn fig1_persists() {
    let m = ModelSpec::single1d(&[0.5, 1.0], &[0.0, 0.05], 2.0, 2.0).unwrap();
    let c = classify(&m, &cfg()).unwrap();
    let origin = c.table.row(&SubspaceIndex::empty()).unwrap();
    assert!((origin.lambdas[0] - 0.75).abs() < 1e-15);
    assert_eq!(c.table.rows.len(), 1);
    assert_eq!(c.verdict.outcome, Outcome::PersistAll);
    assert!(c.verdict.bracket.is_some());
}

#[test]
fn single_species_extinction() {
    // q21 = 2 < -q12 a(2) / a(1) = 6.
    let m = ModelSpec::single1d(&[0.5, -1.5], &[0.0, 0.05], 2.0, 2.0).unwrap();
    let c = classify(&m, &cfg()).unwrap();
    let Outcome::ExtinctionTo(a) = &c.verdict.outcome else { panic!("{:?}", c.verdict) };
    assert_eq!(a.len(), 1);
    assert!(a[0].face.is_empty());
    assert_eq!(a[0].probability, "one");
    assert!((a[0].exterior_rates[0].1 + 0.5).abs() < 1e-15);
}

#[test]
fn predator_needs_prey() {
    let m = FamilyParams::new(FamilyTag::PredPrey, 2, 2)
        .per_env("a", 1, &[2.0, 1.0])
        .per_env("b", 1, &[1.0, 0.4])
        .per_env("c", 1, &[0.5, 0.5])
        .per_env("a", 2, &[0.5, 0.7])
        .per_env("b", 2, &[0.2, 0.2])
        .per_env("c", 2, &[1.0, 0.8])
        .build(SwitchLaw::two_state(1.0, 1.0).unwrap())
        .unwrap();
    let t = invasion_table(&m, &cfg()).unwrap();
    let origin = t.row(&SubspaceIndex::empty()).unwrap();
    assert!((origin.lambdas[1] + 0.6).abs() < 1e-15);
    assert!(!t.row(&face(&[1])).unwrap().exists);
    let prey = t.row(&face(&[0])).unwrap();
    assert!(prey.exists);
    assert_eq!(prey.method, Some(Method::Density));
}

#[test]
fn fig3_rates_match_zero_growth_identities() {
    // On face {i}, lambda_i = 0 fixes the environment-2 mean of x_i, which
    // determines the other species' rate.
    let a = invasion_table(&fig3a_model().unwrap(), &cfg()).unwrap();
    let l21 = a.row(&face(&[0])).unwrap().lambdas[1];
    let l12 = a.row(&face(&[1])).unwrap().lambdas[0];
    assert!((l21 - (0.25 + 2.0 - 0.025 * 4.0 / 3.0)).abs() < 1e-8, "{l21}");
    assert!((l12 - 0.55).abs() < 1e-8, "{l12}");
    let b = invasion_table(&fig3b_model().unwrap(), &cfg()).unwrap();
    let l21 = b.row(&face(&[0])).unwrap().lambdas[1];
    let l12 = b.row(&face(&[1])).unwrap().lambdas[0];
    let m1 = (0.475 + 40.0 / 9.0) / 8.0;
    let m2 = 5.5 / 8.0;
    assert!((l21 - (5.5 - 10.0 * m1)).abs() < 1e-8, "{l21}");
    assert!((l12 - (0.475 + 40.0 / 9.0 - 7.5 * m2)).abs() < 1e-8, "{l12}");
    for t in [&a, &b] {
        for r in t.existing() {
            for &i in r.face.members() {
                assert!(r.lambdas[i].abs() < 1e-8, "{r:?}");
            }
        }
    }
}

#[test]
fn fig3_verdicts() {
    let a = classify(&fig3a_model().unwrap(), &cfg()).unwrap();
    assert_eq!(a.verdict.outcome, Outcome::PersistAll);
    assert!(a.verdict.bracket.is_some());
    let b = classify(&fig3b_model().unwrap(), &cfg()).unwrap();
    let Outcome::ExtinctionTo(att) = &b.verdict.outcome else { panic!("{:?}", b.verdict) };
    assert!(att.iter().any(|a| a.face == face(&[0])));
    assert!(att.iter().all(|a| a.exterior_rates.iter().all(|r| r.1 < 0.0)));
}

#[test]
fn environment_relabeling_leaves_table_unchanged() {
    let m = fig3a_model().unwrap();
    let p = m.permute_envs(&[1, 0]).unwrap();
    let (t, u) = (invasion_table(&m, &cfg()).unwrap(), invasion_table(&p, &cfg()).unwrap());
    for (r, s) in t.rows.iter().zip(&u.rows) {
        assert_eq!(r.face, s.face);
        for (a, b) in r.lambdas.iter().zip(&s.lambdas) {
            assert!((a - b).abs() < 1e-9, "{r:?} {s:?}");
        }
    }
    assert_eq!(classify(&p, &cfg()).unwrap().verdict.outcome, Outcome::PersistAll);
}

#[test]
fn custom_models_need_a_lattice() {
    let fields = vec![EnvironmentField::affine(&[1.0], &[vec![-1.0]]), EnvironmentField::affine(&[0.5], &[vec![-1.0]])];
    let m = ModelSpec::custom(fields, SwitchLaw::two_state(1.0, 1.0).unwrap()).unwrap();
    assert!(matches!(invasion_table(&m, &cfg()), Err(PdmpError::InvalidConfig(_))));
    let m = m.with_lattice(Some(vec![SubspaceIndex::empty()])).unwrap();
    let c = classify(&m, &cfg()).unwrap();
    assert_eq!(c.verdict.outcome, Outcome::PersistAll);
}

#[test]
fn monte_carlo_rows_carry_errors() {
    // Interactions switch, so the two-species face of a three-species
    // competitive system falls back to simulation.
    let mut p = FamilyParams::new(FamilyTag::LV3Comp, 3, 2);
    for i in 1..=3 {
        p = p.per_env("a", i, &[1.0, 1.2]).per_env("b", i, &[1.0, 1.5]).per_env("c", i, &[0.3, 0.2]);
        p = p.per_env("d", i, &[0.4, 0.3]);
    }
    let m = p.build(SwitchLaw::two_state(1.0, 1.0).unwrap()).unwrap();
    let small = ClassifyConfig { mc: MonteCarloConfig { t_max: 2000.0, burn_in: 200.0, seed: 1, x0: 1.0 }, ..cfg() };
    let t = invasion_table(&m, &small).unwrap();
    let row = t.row(&face(&[0, 1])).unwrap();
    assert_eq!(row.method, Some(Method::MonteCarlo));
    assert!(row.se.iter().all(|&s| s > 0.0));
    for &i in row.face.members() {
        assert!(row.lambdas[i].abs() < 0.02 + 3.0 * row.se[i], "{row:?}");
    }
}

proptest! {
    #[test]
    fn minmax_scaling_invariance(vals in prop::collection::vec(-2.0f64..2.0, 6), c in 0.1f64..10.0) {
        let rows: Vec<Vec<f64>> = vals.chunks(2).map(|r| r.to_vec()).collect();
        let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * c).collect()).collect();
        let (a, b) = (minmax_matrix(&rows, 2), minmax_matrix(&scaled, 2));
        prop_assert_eq!(a.is_some(), b.is_some());
        if let (Some(a), Some(b)) = (a, b) {
            prop_assert!((b.rho - c * a.rho).abs() <= 1e-6 * c * a.rho.abs().max(1e-3));
        }
    }
}
