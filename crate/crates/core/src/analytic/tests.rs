use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use super::*;
use crate::model::{FamilyParams, FamilyTag, SwitchLaw};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Null-space solve by replacing one balance equation with the
/// normalization.
fn nullspace_nu(q: &[Vec<f64>]) -> Vec<f64> {
    let n = q.len();
    let mut m = DMatrix::from_fn(n, n, |i, j| q[j][i]);
    let mut rhs = DVector::zeros(n);
    for j in 0..n {
        m[(n - 1, j)] = 1.0;
    }
    rhs[n - 1] = 1.0;
    m.lu().solve(&rhs).unwrap().iter().copied().collect()
}

fn two_state(q12: f64, q21: f64) -> Vec<Vec<f64>> {
    vec![vec![-q12, q12], vec![q21, -q21]]
}

#[test]
fn stationary_examples() {
    assert_eq!(stationary_switch(&two_state(2.0, 2.0)).unwrap(), vec![0.5, 0.5]);
    assert_eq!(stationary_switch(&two_state(3.0, 1.0)).unwrap(), vec![0.25, 0.75]);
    let cyc = vec![vec![-1.0, 1.0, 0.0], vec![0.0, -1.0, 1.0], vec![1.0, 0.0, -1.0]];
    let nu = stationary_switch(&cyc).unwrap();
    assert!(nu.iter().all(|&v| close(v, 1.0 / 3.0, 1e-15)));
}

#[test]
fn stationary_rejects_bad_generators() {
    let red = vec![vec![-1.0, 1.0, 0.0], vec![0.0, 0.0, 0.0], vec![0.0, 1.0, -1.0]];
    assert!(matches!(stationary_switch(&red), Err(PdmpError::Reducible)));
    assert!(stationary_switch(&[vec![-1.0, 2.0], vec![1.0, -1.0]]).is_err());
    assert!(stationary_switch(&[vec![1.0, -1.0], vec![1.0, -1.0]]).is_err());
}

fn fig1() -> ClosedFormDensity {
    density_1d_logistic(0.5, 1.0, 0.05, 2.0, 2.0).unwrap()
}

fn exponent(d: &ClosedFormDensity, name: &str) -> f64 {
    d.exponents.iter().find(|(k, _)| k == name).unwrap().1
}

#[test]
fn case_one_shape() {
    let d = fig1();
    assert_eq!(d.kind, DensityKind::CaseI);
    assert_eq!(d.support, (20.0, f64::INFINITY));
    assert!(close(exponent(&d, "gamma"), 7.0, 1e-15));
    assert!(close(d.h(0, 40.0) / d.h(1, 40.0), 2.0, 1e-12));
    assert_eq!(d.h(0, 19.0), 0.0);
    assert_eq!(d.h(1, 20.0), 0.0);
}

#[test]
fn case_one_normalization_and_masses() {
    let d = fig1();
    assert!(close(integrate_density(&d, &|_, _| 1.0).unwrap(), 1.0, 1e-8));
    assert!(close(d.masses.0, 0.5, 1e-8));
    let m1 = integrate_density(&d, &|_, k| (k == 0) as u8 as f64).unwrap();
    assert!(close(m1, 0.5, 1e-8));
    let flux = integrate_density(&d, &|_, k| if k == 0 { 2.0 } else { -2.0 }).unwrap();
    assert!(flux.abs() < 1e-8);
}

#[test]
fn case_one_mean_matches_independent_quadrature() {
    // Substituting x = a2 / (b (1 - u)) maps the support onto (0, 1); the
    // integrands become polynomial in u and are integrated by a midpoint
    // rule with Richardson extrapolation.
    let (a1, a2, b, q12, q21) = (0.5f64, 1.0f64, 0.05f64, 2.0f64, 2.0f64);
    let r = q21 / a2;
    let g = 1.0 + q12 / a1 + r;
    let shape = |x: f64| ((b * x - a2).powf(r) + a1 * (b * x - a2).powf(r - 1.0)) * x.powf(-g);
    let integral = |w: &dyn Fn(f64) -> f64, m: usize| {
        let h = 1.0 / m as f64;
        (0..m)
            .map(|i| {
                let u = (i as f64 + 0.5) * h;
                let x = a2 / (b * (1.0 - u));
                let dx = a2 / (b * (1.0 - u).powi(2));
                w(x) * shape(x) * dx * h
            })
            .sum::<f64>()
    };
    let rich = |w: &dyn Fn(f64) -> f64| (4.0 * integral(w, 40000) - integral(w, 20000)) / 3.0;
    let mean = rich(&|x| x) / rich(&|_| 1.0);
    let d = fig1();
    let got = integrate_density(&d, &|x, _| x).unwrap();
    assert!(close(got, mean, 1e-7 * mean), "{got} vs {mean}");
    assert!(close(got, 35.0, 1e-8));
}

#[test]
fn case_two_shape() {
    let d = density_1d_logistic(0.5, -0.25, 0.05, 1.0, 2.0).unwrap();
    assert_eq!(d.kind, DensityKind::CaseII);
    assert!(close(exponent(&d, "tau"), -5.0, 1e-12));
    let near = d.h(0, 2e-4) / d.h(0, 1e-4);
    assert!(close(near, 32.0, 1e-2), "{near}");
    let far = d.h(0, 2e8) / d.h(0, 1e8);
    assert!(close(far, 0.125, 1e-6), "{far}");
    let nu1 = 2.0 / 3.0;
    assert!(close(d.masses.0, nu1, 1e-8));
    assert!(close(integrate_density(&d, &|_, _| 1.0).unwrap(), 1.0, 1e-8));
}

#[test]
fn case_two_requires_persistence() {
    let e = density_1d_logistic(0.5, -1.5, 0.05, 2.0, 2.0).unwrap_err();
    assert!(matches!(e, PdmpError::NoInteriorMeasure(_)));
    assert!(density_1d_logistic(0.5, 0.0, 0.05, 2.0, 2.0).is_err());
    assert!(density_1d_logistic(-0.5, 1.0, 0.05, 2.0, 2.0).is_err());
}

#[test]
fn beta_identities_match_quadrature() {
    for (a1, a2, b, q12, q21) in [(0.5, 1.0, 0.05, 2.0, 2.0), (0.7, 2.0, 0.3, 1.2, 0.4), (0.5, -0.25, 0.05, 1.0, 2.0)] {
        let d = density_1d_logistic(a1, a2, b, q12, q21).unwrap();
        let (m1, m2) = d.beta_masses().unwrap();
        let ratio = m1 / (m1 + m2);
        assert!(close(ratio, d.masses.0, 1e-9), "{ratio} vs {:?}", d.masses);
        assert!(close(d.norm * (m1 + m2), 1.0, 1e-9), "norm {} vs beta {}", d.norm, 1.0 / (m1 + m2));
    }
}

#[test]
fn lv_pair_shape() {
    // p1 = 1, p2 = 2, gamma1 = gamma2 = 1.
    let d = density_lv_boundary(1.0, 2.0, 1.0, 1.0, 1.0, 2.0).unwrap();
    assert_eq!(d.kind, DensityKind::LvLogisticPair);
    assert_eq!(d.support, (1.0, 2.0));
    let ratio = d.h(0, 1.5) / d.h(0, 1.2);
    let want = (0.5 / 1.5f64.powi(3)) / (0.8 / 1.2f64.powi(3));
    assert!(close(ratio, want, 1e-12));
    assert!(close(d.masses.0, 2.0 / 3.0, 1e-8));
    assert!(close(integrate_density(&d, &|_, _| 1.0).unwrap(), 1.0, 1e-8));
}

#[test]
fn lv_pair_reversed_and_singular() {
    // p1 = 3 > p2 = 0.5 with gamma1 = 0.3, gamma2 = 0.2: both ends singular.
    let d = density_lv_boundary(1.5, 0.5, 0.5, 1.0, 0.45, 0.1).unwrap();
    assert_eq!(d.support, (0.5, 3.0));
    assert!(close(d.masses.0, 0.1 / 0.55, 1e-8), "{:?}", d.masses);
    let flux = integrate_density(&d, &|_, k| if k == 0 { 0.45 } else { -0.1 }).unwrap();
    assert!(flux.abs() < 1e-8);
}

#[test]
fn lv_pair_point_mass() {
    let d = density_lv_boundary(2.0, 4.0, 1.0, 2.0, 1.0, 3.0).unwrap();
    assert_eq!(d.kind, DensityKind::PointMass);
    assert_eq!(d.point(), Some(2.0));
    assert_eq!(d.masses, (0.75, 0.25));
    assert!(close(integrate_density(&d, &|x, k| x * (k + 1) as f64).unwrap(), 2.0 * 0.75 + 4.0 * 0.25, 1e-15));
}

#[test]
fn swapped_face_orientation() {
    // Logistic in environment 1, linear in environment 2.
    let d = density_for_face([1.0, 0.5], [0.05, 0.0], 3.0, 1.0).unwrap().unwrap();
    assert!(d.swapped);
    assert!(close(d.masses.0, 0.25, 1e-8));
    let m1 = integrate_density(&d, &|_, k| (k == 0) as u8 as f64).unwrap();
    assert!(close(m1, 0.25, 1e-8));
    assert!(d.h(0, 30.0) > 0.0 && d.h(1, 30.0) > 0.0);
    assert!(density_for_face([1.0, 0.5], [0.0, 0.0], 1.0, 1.0).is_none());
}

#[test]
fn density_table_covers_support() {
    let d = fig1();
    let t = d.table(50, 1e-6).unwrap();
    assert!(t.len() >= 40);
    assert!(t.iter().all(|&(x, h1, h2)| x > 20.0 && h1 >= 0.0 && h2 >= 0.0));
    assert!(t.windows(2).all(|w| w[0].0 < w[1].0));
}

#[test]
fn solve_means_examples() {
    assert_eq!(solve_means(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[0.6, 0.8]).unwrap(), vec![0.6, 0.8]);
    let m = solve_means(&[vec![2.0, 1.0], vec![1.0, 2.0]], &[3.0, 3.0]).unwrap();
    assert!(close(m[0], 1.0, 1e-15) && close(m[1], 1.0, 1e-15));
    assert!(matches!(solve_means(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 1.0]), Err(PdmpError::SingularInteraction)));
    assert!(matches!(solve_means(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, -1.0]), Err(PdmpError::InfeasibleMeans(_))));
}

fn food_chain(a20: f64) -> ModelSpec {
    FamilyParams::new(FamilyTag::FoodChain, 2, 2)
        .per_env("a", 1, &[])
        .set_raw("a10_1", 0.5)
        .set_raw("a10_2", 1.5)
        .set_raw("a20_1", a20)
        .set_raw("a20_2", a20)
        .set_raw("a11", 2.0)
        .set_raw("a12", 0.7)
        .set_raw("a21", 1.0)
        .set_raw("a22", 1.0)
        .build(SwitchLaw::two_state(2.0, 2.0).unwrap())
        .unwrap()
}

#[test]
fn food_chain_means_path() {
    let model = food_chain(0.25);
    let face = SubspaceIndex::new([0]);
    let m = interior_means(&model, &face).unwrap();
    assert!(close(m[0], 1.0 / 2.0, 1e-15));
    let rep = BoundaryMeasureRep { face: face.clone(), repr: Representation::Means { means: m } };
    let l2 = boundary_lambda(&model, &rep, 1).unwrap();
    assert!(close(l2.value, 1.0 * 1.0 / 2.0 - 0.25, 1e-15));
    assert_eq!(l2.se, 0.0);
    assert!(boundary_lambda(&model, &rep, 0).unwrap().value.abs() < 1e-15);
}

#[test]
fn lv3_means() {
    let mut p = FamilyParams::new(FamilyTag::LV3Comp, 3, 1);
    for i in 1..=3 {
        p = p.set("a", i, 1, 3.0).set("b", i, 1, 2.0).set("c", i, 1, 1.0).set("d", i, 1, 1.0);
    }
    let model = p.build(SwitchLaw::constant(vec![vec![0.0]]).unwrap()).unwrap();
    let m = interior_means(&model, &SubspaceIndex::new([0, 1])).unwrap();
    assert!(close(m[0], 1.0, 1e-14) && close(m[1], 1.0, 1e-14));
}

#[test]
fn lambda_at_origin() {
    let fig1 = ModelSpec::single1d(&[0.5, 1.0], &[0.0, 0.05], 2.0, 2.0).unwrap();
    let rep = represent_face(&fig1, &SubspaceIndex::empty(), &MonteCarloConfig::default()).unwrap();
    assert_eq!(rep.repr.method(), Method::PointMass);
    assert!(close(boundary_lambda(&fig1, &rep, 0).unwrap().value, 0.75, 1e-15));
    let fig2a = ModelSpec::single1d(&[0.5, -0.505], &[0.0, 0.05], 2.0, 2.0).unwrap();
    let rep = represent_face(&fig2a, &SubspaceIndex::empty(), &MonteCarloConfig::default()).unwrap();
    assert!(close(boundary_lambda(&fig2a, &rep, 0).unwrap().value, -0.0025, 1e-15));
}

fn pred_prey(a11: f64, b11: f64, a12: f64, b12: f64) -> ModelSpec {
    FamilyParams::new(FamilyTag::PredPrey, 2, 2)
        .per_env("a", 1, &[a11, a12])
        .per_env("b", 1, &[b11, b12])
        .per_env("c", 1, &[0.3, 0.4])
        .per_env("a", 2, &[1.0, 1.0])
        .per_env("b", 2, &[0.2, 0.2])
        .per_env("c", 2, &[1.0, 1.0])
        .build(SwitchLaw::two_state(1.0, 3.0).unwrap())
        .unwrap()
}

#[test]
fn pred_prey_degenerate_point_mass() {
    let model = pred_prey(2.0, 1.0, 4.0, 2.0);
    let rep = represent_face(&model, &SubspaceIndex::new([0]), &MonteCarloConfig::default()).unwrap();
    let Representation::PointMass { x, nu } = &rep.repr else { panic!("{:?}", rep.repr.method()) };
    assert_eq!(x, &vec![2.0, 0.0]);
    assert_eq!(nu, &vec![0.75, 0.25]);
    assert!(close(boundary_lambda(&model, &rep, 1).unwrap().value, 1.0, 1e-15));
    assert!(boundary_lambda(&model, &rep, 0).unwrap().value.abs() < 1e-15);
}

#[test]
fn pred_prey_density_is_self_consistent() {
    let model = pred_prey(2.0, 1.0, 3.0, 1.0);
    let rep = represent_face(&model, &SubspaceIndex::new([0]), &MonteCarloConfig::default()).unwrap();
    assert_eq!(rep.repr.method(), Method::Density);
    assert!(boundary_lambda(&model, &rep, 0).unwrap().value.abs() < 1e-9);
}

#[test]
fn monte_carlo_fallback_for_switching_interactions() {
    let model = pred_prey(2.0, 1.0, 3.0, 1.0);
    let face = SubspaceIndex::new([0, 1]);
    let mc = MonteCarloConfig { t_max: 2000.0, burn_in: 200.0, seed: 3, x0: 1.0 };
    let rep = represent_face(&model, &face, &mc).unwrap();
    assert_eq!(rep.repr.method(), Method::MonteCarlo);
    for j in 0..2 {
        let e = boundary_lambda(&model, &rep, j).unwrap();
        assert!(e.value.abs() < 0.05 && e.se > 0.0, "{e:?}");
    }
}

#[test]
fn rep_dimension_is_checked() {
    let model = food_chain(0.25);
    let rep =
        BoundaryMeasureRep { face: SubspaceIndex::new([0]), repr: Representation::Means { means: vec![1.0, 1.0] } };
    assert!(boundary_lambda(&model, &rep, 1).is_err());
    let rep = BoundaryMeasureRep {
        face: SubspaceIndex::empty(),
        repr: Representation::PointMass { x: vec![0.0], nu: vec![0.5, 0.5] },
    };
    assert!(boundary_lambda(&model, &rep, 1).is_err());
}

fn generator(n: usize, rates: &[f64]) -> Vec<Vec<f64>> {
    let mut q = vec![vec![0.0; n]; n];
    let mut it = rates.iter();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                q[i][j] = *it.next().unwrap();
            }
        }
        q[i][i] = -q[i].iter().sum::<f64>();
    }
    q
}

proptest! {
    #[test]
    fn stationary_balances(n in 2usize..=4, rates in prop::collection::vec(0.01f64..50.0, 12)) {
        let q = generator(n, &rates);
        let nu = stationary_switch(&q).unwrap();
        prop_assert!(stationary_residual(&q, &nu) <= 1e-12);
        prop_assert!((nu.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let oracle = nullspace_nu(&q);
        for (a, b) in nu.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn case_one_masses(a1 in 0.2f64..3.0, a2 in 0.2f64..3.0, b in 0.01f64..2.0, q12 in 0.1f64..5.0, q21 in 0.1f64..5.0) {
        let d = density_1d_logistic(a1, a2, b, q12, q21).unwrap();
        let nu1 = q21 / (q12 + q21);
        prop_assert!((d.masses.0 - nu1).abs() <= 1e-8, "{:?} vs {}", d.masses, nu1);
        let (m1, m2) = d.beta_masses().unwrap();
        prop_assert!((m1 / (m1 + m2) - nu1).abs() <= 1e-9);
    }

    #[test]
    fn case_two_masses(a1 in 0.2f64..3.0, big_a in 0.05f64..3.0, b in 0.01f64..2.0, q12 in 0.1f64..5.0, extra in 0.05f64..5.0) {
        // q21 chosen so the persistence margin is `extra`.
        let q21 = (big_a * q12 + extra) / a1;
        let d = density_1d_logistic(a1, -big_a, b, q12, q21).unwrap();
        let nu1 = q21 / (q12 + q21);
        prop_assert!((d.masses.0 - nu1).abs() <= 1e-8, "{:?} vs {}", d.masses, nu1);
    }

    #[test]
    fn lv_pair_masses(a11 in 0.2f64..3.0, a12 in 0.2f64..3.0, b11 in 0.2f64..3.0, b12 in 0.2f64..3.0, q12 in 0.05f64..5.0, q21 in 0.05f64..5.0) {
        prop_assume!((a11 / b11 - a12 / b12).abs() > 1e-3);
        let d = density_lv_boundary(a11, a12, b11, b12, q12, q21).unwrap();
        let nu1 = q21 / (q12 + q21);
        prop_assert!((d.masses.0 - nu1).abs() <= 1e-8, "{:?} vs {}", d.masses, nu1);
    }
}
