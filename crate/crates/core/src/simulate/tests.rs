use proptest::prelude::*;

use super::*;
use crate::model::{EnvironmentField, FamilyParams, FamilyTag, RateFn, SwitchLaw};
use crate::poly::Polynomial;

fn linear(a: &[f64], q12: f64, q21: f64) -> ModelSpec {
    let fields = a.iter().map(|&ai| EnvironmentField::affine(&[ai], &[vec![0.0]])).collect();
    ModelSpec::custom(fields, SwitchLaw::two_state(q12, q21).unwrap()).unwrap()
}

fn lv2() -> ModelSpec {
    let mut p = FamilyParams::new(FamilyTag::LV2Comp, 2, 2);
    for i in 1..=2 {
        p = p.per_env("a", i, &[1.0, 2.0]).per_env("b", i, &[1.0, 0.5]).per_env("c", i, &[0.3, 0.2]);
    }
    p.build(SwitchLaw::two_state(1.0, 1.0).unwrap()).unwrap()
}

/// Plain RK4 with a fixed step.
fn rk4(model: &ModelSpec, x0: &[f64], k: usize, tau: f64, h: f64) -> Vec<f64> {
    let steps = (tau / h).round() as usize;
    let f = |x: &[f64]| -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        model.fitness_into(x, k, &mut out);
        out.iter().zip(x).map(|(a, b)| a * b).collect()
    };
    let mut x = x0.to_vec();
    for _ in 0..steps {
        let k1 = f(&x);
        let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, b)| a + 0.5 * h * b).collect();
        let k2 = f(&x2);
        let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, b)| a + 0.5 * h * b).collect();
        let k3 = f(&x3);
        let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, b)| a + h * b).collect();
        let k4 = f(&x4);
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

#[test]
fn logistic_fixed_point_is_preserved() {
    let m = ModelSpec::single1d(&[1.0, 1.0], &[1.0, 1.0], 1.0, 1.0).unwrap();
    let x = flow_segment(&m, &[1.0], 0, 37.0, &SimConfig::default()).unwrap();
    assert!((x[0] - 1.0).abs() < 1e-12);
}

#[test]
fn linear_flow_is_exponential() {
    let m = linear(&[0.5, 0.5], 1.0, 1.0);
    let x = flow_segment(&m, &[1.0], 0, 2.0, &SimConfig::default()).unwrap();
    assert!((x[0] / std::f64::consts::E - 1.0).abs() < 1e-7, "{}", x[0]);
}

#[test]
fn lv_flow_matches_fine_rk4() {
    let m = lv2();
    for k in 0..2 {
        let x = flow_segment(&m, &[0.3, 2.5], k, 1.0, &SimConfig::default()).unwrap();
        let oracle = rk4(&m, &[0.3, 2.5], k, 1.0, 1e-5);
        for i in 0..2 {
            assert!((x[i] - oracle[i]).abs() <= 1e-8 * oracle[i].abs(), "{x:?} vs {oracle:?}");
        }
    }
}

#[test]
fn deep_decay_keeps_logarithm() {
    let m = linear(&[-1.0, -1.0], 1.0, 1.0);
    let cfg = SimConfig::new(1000.0, 3);
    let traj = simulate(&m, &[1.0], 0, &cfg).unwrap();
    let ln = traj.final_ln_state()[0];
    assert!((ln + 1000.0).abs() < 1e-4, "{ln}");
    assert!(traj.log_mode_used[0]);
    assert!(traj.ln_states.iter().all(|v| v.is_finite()));
}

#[test]
fn mean_holding_time_matches_rate() {
    let m = linear(&[0.0, 0.0], 2.0, 1.0);
    let cfg = SimConfig::default();
    let mut rng = replicate_rng(11, 0);
    let n = 100_000;
    let draws: Vec<f64> = (0..n).map(|_| sample_jump(&m, &[1.0], 0, &cfg, &mut rng).unwrap().dt).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let se = 0.5 / (n as f64).sqrt();
    assert!((mean - 0.5).abs() < 3.0 * se, "{mean}");
}

#[test]
fn two_state_target_is_the_other_state() {
    let m = linear(&[0.1, -0.1], 2.0, 3.0);
    let mut rng = replicate_rng(1, 0);
    for k in 0..2 {
        for _ in 0..100 {
            assert_eq!(sample_jump(&m, &[1.0], k, &SimConfig::default(), &mut rng).unwrap().to, 1 - k);
        }
    }
}

fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    let mut p = 0.0;
    for j in 1..200 {
        let j = j as f64;
        p += 2.0 * (-1f64).powf(j - 1.0) * (-2.0 * j * j * lambda * lambda).exp();
    }
    p.clamp(0.0, 1.0)
}

#[test]
fn thinning_reproduces_exponential_holding_times() {
    let fields = vec![EnvironmentField::affine(&[0.3], &[vec![-0.1]]); 2];
    let law = SwitchLaw::state_dependent(
        vec![vec![RateFn::Constant(0.0), RateFn::Constant(2.0)], vec![RateFn::Constant(2.0), RateFn::Constant(0.0)]],
        5.0,
        2.0,
    )
    .unwrap();
    let m = ModelSpec::custom(fields, law).unwrap();
    let mut rng = replicate_rng(5, 0);
    let n = 10_000;
    let mut draws: Vec<f64> =
        (0..n).map(|_| sample_jump(&m, &[1.0], 0, &SimConfig::default(), &mut rng).unwrap().dt).collect();
    draws.sort_by(f64::total_cmp);
    let mut d: f64 = 0.0;
    for (i, &t) in draws.iter().enumerate() {
        let cdf = 1.0 - (-2.0 * t).exp();
        d = d.max((cdf - i as f64 / n as f64).abs()).max(((i + 1) as f64 / n as f64 - cdf).abs());
    }
    assert!(kolmogorov_p(d, n) > 0.01, "D = {d}");
}

#[test]
fn rate_bound_violation_is_an_error() {
    let fields = vec![EnvironmentField::affine(&[1.0], &[vec![-0.1]]); 2];
    let grow = RateFn::Clamped { poly: Polynomial::affine(0.0, &[1.0]), lo: 0.5, hi: 100.0 };
    let law = SwitchLaw::state_dependent(
        vec![vec![RateFn::Constant(0.0), grow], vec![RateFn::Constant(1.0), RateFn::Constant(0.0)]],
        2.0,
        0.5,
    )
    .unwrap();
    let m = ModelSpec::custom(fields, law).unwrap();
    let r = simulate(&m, &[5.0], 0, &SimConfig::new(100.0, 1));
    assert!(matches!(r, Err(PdmpError::RateBoundViolated { .. })), "{r:?}");
}

#[test]
fn zero_species_stays_zero_and_positive_stays_positive() {
    let traj = simulate(&lv2(), &[0.5, 0.0], 0, &SimConfig::new(200.0, 9)).unwrap();
    for s in 0..traj.len() {
        assert_eq!(traj.state(s)[1], 0.0);
        assert!(traj.state(s)[0] > 0.0);
    }
}

#[test]
fn same_seed_is_bit_identical() {
    let cfg = SimConfig::new(300.0, 42);
    let a = simulate(&lv2(), &[0.5, 0.5], 0, &cfg).unwrap();
    let b = simulate(&lv2(), &[0.5, 0.5], 0, &cfg).unwrap();
    assert_eq!(a, b);
    let c = simulate(&lv2(), &[0.5, 0.5], 0, &SimConfig::new(300.0, 43)).unwrap();
    assert_ne!(a.times, c.times);
}

#[test]
fn single_replicate_ensemble_equals_simulate() {
    let cfg = SimConfig::new(100.0, 7);
    let e = simulate_ensemble(&lv2(), &[0.5, 0.5], 1, &cfg, 1).unwrap();
    assert_eq!(e[0], simulate(&lv2(), &[0.5, 0.5], 1, &cfg).unwrap());
    let e4 = simulate_ensemble(&lv2(), &[0.5, 0.5], 1, &cfg, 4).unwrap();
    assert_eq!(e4[0], e[0]);
    assert_ne!(e4[1].jumps, e4[2].jumps);
}

#[test]
fn trajectory_structure() {
    let traj = simulate(&lv2(), &[0.5, 0.5], 0, &SimConfig::new(50.0, 1)).unwrap();
    assert_eq!(traj.times[0], 0.0);
    assert_eq!(*traj.times.last().unwrap(), 50.0);
    assert!(traj.times.windows(2).all(|w| w[1] >= w[0]));
    assert!(traj.jumps.windows(2).all(|w| w[1].t > w[0].t));
    for j in &traj.jumps {
        assert_ne!(j.from, j.to);
    }
    // environment is constant between consecutive jumps
    let mut next = 0;
    let mut env = 0;
    for s in 0..traj.len() {
        if next < traj.jumps.len() && traj.times[s] == traj.jumps[next].t && traj.envs[s] == traj.jumps[next].to {
            env = traj.jumps[next].to;
            next += 1;
        }
        assert_eq!(traj.envs[s], env);
    }
}

#[test]
fn samples_satisfy_the_ode_between_jumps() {
    let m = lv2();
    let cfg = SimConfig::new(30.0, 2);
    let traj = simulate(&m, &[0.5, 0.5], 0, &cfg).unwrap();
    for s in 0..traj.len() - 1 {
        let dt = traj.times[s + 1] - traj.times[s];
        if dt <= 0.0 || traj.envs[s] != traj.envs[s + 1] {
            continue;
        }
        let x = flow_segment(&m, traj.state(s), traj.envs[s], dt, &cfg).unwrap();
        for i in 0..2 {
            let target = traj.state(s + 1)[i];
            assert!((x[i] - target).abs() <= 10.0 * cfg.rtol * target.abs() + cfg.atol, "{x:?} vs {target}");
        }
    }
}

#[test]
fn jump_count_matches_rate() {
    let m = linear(&[0.0, 0.0], 3.0, 1.0);
    let t = 2000.0;
    let reps = 20;
    let counts: Vec<f64> =
        simulate_ensemble(&m, &[1.0], 0, &SimConfig { record_dt: 10.0, ..SimConfig::new(t, 8) }, reps)
            .unwrap()
            .iter()
            .map(|tr| tr.jumps.len() as f64)
            .collect();
    // nu = (1/4, 3/4); mean exit rate 0.25*3 + 0.75*1 = 1.5
    let mean = counts.iter().sum::<f64>() / reps as f64;
    let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let se = (var / reps as f64).sqrt();
    assert!((mean - 1.5 * t).abs() < 3.0 * se + 1.0, "{mean} +- {se}");
}

#[test]
fn environment_occupancy_chi_square() {
    let m = linear(&[0.0, 0.0], 3.0, 1.0);
    let t_max = 1e5;
    let traj = simulate(&m, &[1.0], 0, &SimConfig { record_dt: 100.0, ..SimConfig::new(t_max, 21) }).unwrap();
    // Batch means over 50 batches of [0.1 t_max, t_max].
    let t0 = 0.1 * t_max;
    let batches = 50;
    let width = (t_max - t0) / batches as f64;
    let mut occ = vec![0.0; batches];
    let mut t = 0.0;
    let mut k = 0;
    let add = |a: f64, b: f64, k: usize, occ: &mut Vec<f64>| {
        if k != 0 {
            return;
        }
        let (a, b) = (a.max(t0), b);
        if b <= a {
            return;
        }
        let mut s = a;
        while s < b {
            let idx = (((s - t0) / width) as usize).min(batches - 1);
            let end = (t0 + (idx + 1) as f64 * width).min(b);
            occ[idx] += end - s;
            s = end;
        }
    };
    for j in &traj.jumps {
        add(t, j.t, k, &mut occ);
        t = j.t;
        k = j.to;
    }
    add(t, t_max, k, &mut occ);
    let fr: Vec<f64> = occ.iter().map(|o| o / width).collect();
    let mean = fr.iter().sum::<f64>() / batches as f64;
    let var = fr.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    let z = (mean - 0.25) / (var / batches as f64).sqrt();
    // two-sided 1% level
    assert!(z.abs() < 2.576, "occupancy {mean}, z = {z}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn positivity_holds_on_every_sample(seed in 0u64..1000, x1 in 1e-8f64..10.0, x2 in 1e-8f64..10.0) {
        let traj = simulate(&lv2(), &[x1, x2], 0, &SimConfig::new(40.0, seed)).unwrap();
        for s in 0..traj.len() {
            prop_assert!(traj.state(s).iter().all(|&v| v > 0.0));
            prop_assert!(traj.ln_state(s).iter().all(|v| v.is_finite()));
        }
    }
}
