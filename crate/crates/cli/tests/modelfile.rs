use pdmp::model::{FamilyTag, RateFn};
use pdmp::poly::Polynomial;
use pdmp::presets::{preset, FigureName};
use pdmp::{EnvironmentField, FamilyParams, GaugeFunction, ModelSpec, SubspaceIndex, SwitchLaw};
use pdmp_cli::{parse_model_str, serialize_model};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FIG1: &str = r#"
[model]
family = "single1d"

[params]
a1_1 = 0.5
a1_2 = 1
b1_2 = 0.05

[switch]
q12 = 2
q21 = 2
"#;

#[test]
fn minimal_file_gives_fig1_model() {
    let m = parse_model_str(FIG1).unwrap();
    let reference = preset(FigureName::Fig1).unwrap().model;
    assert_eq!(m.family(), FamilyTag::Single1D);
    assert_eq!(m.fields(), reference.fields());
    assert_eq!(m.switch(), reference.switch());
    assert_eq!(m.gauge(), reference.gauge());
}

#[test]
fn env_sections_match_flat_params() {
    let src = r#"
[model]
family = "single1d"

[env.1]
"a.1" = 0.5

[env.2]
"a.1" = 1.0
"b.1" = 0.05

[switch]
q12 = 2.0
q21 = 2.0
"#;
    assert_eq!(parse_model_str(src).unwrap(), parse_model_str(FIG1).unwrap());
}

#[test]
fn negative_rate_is_rejected_with_line() {
    let src = FIG1.replace("q12 = 2", "q12 = -1");
    let e = parse_model_str(&src).unwrap_err();
    assert_eq!(e.key, "switch.q12");
    assert_eq!(e.line, Some(11));
    assert!(e.to_string().contains("line 11"), "{e}");
}

#[test]
fn unknown_keys_are_rejected() {
    let e = parse_model_str(&FIG1.replace("[switch]", "[switch]\nq13 = 1")).unwrap_err();
    assert_eq!(e.key, "switch.q13");
    let e = parse_model_str(&FIG1.replace("a1_2 = 1", "a1_2 = 1\nz9_1 = 3")).unwrap_err();
    assert!(e.message.contains("z9_1"), "{e}");
    assert_eq!(e.line, Some(8));
    let e = parse_model_str(&format!("{FIG1}\n[extra]\nx = 1\n")).unwrap_err();
    assert!(e.message.contains("unknown top-level"), "{e}");
}

#[test]
fn missing_parameter_is_reported() {
    let e = parse_model_str(&FIG1.replace("a1_2 = 1\n", "")).unwrap_err();
    assert!(e.message.contains("a1_2"), "{e}");
}

#[test]
fn row_sum_violation_is_rejected() {
    let src = FIG1.replace("q12 = 2\nq21 = 2", "rows = [[-2.0, 2.0], [2.0, -1.0]]");
    let e = parse_model_str(&src).unwrap_err();
    assert!(e.message.contains("row 2"), "{e}");
    let ok = FIG1.replace("q12 = 2\nq21 = 2", "rows = [[-2.0, 2.0], [2.0, -2.0]]");
    assert_eq!(parse_model_str(&ok).unwrap().switch(), parse_model_str(FIG1).unwrap().switch());
}

#[test]
fn syntax_errors_carry_a_line() {
    let e = parse_model_str("[model]\nfamily = \"single1d\"\nn = = 3\n").unwrap_err();
    assert_eq!(e.line, Some(3));
}

fn predprey() -> ModelSpec {
    FamilyParams::new(FamilyTag::PredPrey, 2, 2)
        .per_env("a", 1, &[1.0, 2.0])
        .per_env("a", 2, &[0.5, 0.3])
        .per_env("b", 1, &[1.0, 0.4])
        .per_env("b", 2, &[0.3, 0.2])
        .per_env("c", 1, &[0.7, 0.6])
        .per_env("c", 2, &[0.9, 1.1])
        .build(SwitchLaw::two_state(1.5, 0.5).unwrap())
        .unwrap()
}

#[test]
fn custom_polynomials_reproduce_predprey_drift() {
    let m = predprey();
    let p = |k: &str| m.param(k).unwrap();
    let src = format!(
        r#"
[model]
family = "custom"
n = 2

[env.1]
"poly.1" = [["1", {}], ["x1", {}], ["x2", {}]]
"poly.2" = [["1", {}], ["x1", {}], ["x2", {}]]

[env.2]
"poly.1" = [["1", {}], ["x1", {}], ["x2", {}]]
"poly.2" = [["1", {}], ["x1", {}], ["x2", {}]]

[switch]
q12 = 1.5
q21 = 0.5
"#,
        p("a1_1"),
        -p("b1_1"),
        -p("c1_1"),
        -p("a2_1"),
        p("c2_1"),
        -p("b2_1"),
        p("a1_2"),
        -p("b1_2"),
        -p("c1_2"),
        -p("a2_2"),
        p("c2_2"),
        -p("b2_2"),
    );
    let custom = parse_model_str(&src).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let x = [rng.random_range(0.0..20.0), rng.random_range(0.0..20.0)];
        for k in 0..2 {
            let (a, b) = (m.drift(&x, k).unwrap(), custom.drift(&x, k).unwrap());
            for i in 0..2 {
                assert!((a[i] - b[i]).abs() <= 1e-12 * (1.0 + a[i].abs()), "{x:?} k={k}: {a:?} vs {b:?}");
            }
        }
    }
}

fn round_trip(m: &ModelSpec) {
    let text = serialize_model(m);
    let back = parse_model_str(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert_eq!(&back, m, "\n{text}");
    assert_eq!(serialize_model(&back), text);
}

#[test]
fn presets_round_trip() {
    for f in FigureName::ALL {
        round_trip(&preset(f).unwrap().model);
    }
    round_trip(&predprey());
}

#[test]
fn food_chain_round_trips() {
    let m = FamilyParams::new(FamilyTag::FoodChain, 3, 2)
        .set_raw("a10_1", 1.0)
        .set_raw("a10_2", 2.0)
        .set_raw("a20_1", 0.1)
        .set_raw("a20_2", 0.2)
        .set_raw("a30_1", 0.1)
        .set_raw("a30_2", 0.05)
        .set_raw("a11", 1.0)
        .set_raw("a12", 0.5)
        .set_raw("a21", 0.5)
        .set_raw("a22", 0.3)
        .set_raw("a23", 0.2)
        .set_raw("a32", 0.4)
        .set_raw("a33", 0.1)
        .build(SwitchLaw::two_state(1.0, 1.0).unwrap())
        .unwrap();
    round_trip(&m);
}

#[test]
fn custom_state_dependent_round_trips() {
    let f = |c: f64| EnvironmentField {
        fitness: vec![
            Polynomial::from_terms(2, [(vec![0, 0], c), (vec![1, 0], -1.0), (vec![1, 1], 0.25)]),
            Polynomial::from_terms(2, [(vec![0, 0], -0.5), (vec![1, 0], 0.3), (vec![0, 3], -1e-3)]),
        ],
    };
    let clamp = RateFn::Clamped { poly: Polynomial::affine(1.0, &[1.0, 0.0]), lo: 1.0, hi: 2.0 };
    let entries = vec![
        vec![RateFn::Constant(0.0), clamp, RateFn::Constant(0.5)],
        vec![RateFn::Constant(1.0), RateFn::Constant(0.0), RateFn::Constant(0.0)],
        vec![RateFn::Constant(0.25), RateFn::Constant(0.75), RateFn::Constant(0.0)],
    ];
    let sw = SwitchLaw::state_dependent(entries, 5.0, 0.25).unwrap();
    let m = ModelSpec::custom(vec![f(1.0), f(2.0), f(0.5)], sw)
        .unwrap()
        .with_gauge(Some(GaugeFunction::weighted(vec![1.0, 2.0, 0.5], vec![vec![1.0, 0.5]; 3])))
        .unwrap()
        .with_lattice(Some(vec![SubspaceIndex::empty(), SubspaceIndex::new([0]), SubspaceIndex::new([1])]))
        .unwrap();
    round_trip(&m);
}

#[test]
fn three_state_constant_rows_round_trip() {
    let q = vec![vec![-1.0, 0.5, 0.5], vec![0.25, -0.5, 0.25], vec![2.0, 0.0, -2.0]];
    let m = FamilyParams::new(FamilyTag::Single1D, 1, 3)
        .per_env("a", 1, &[0.5, -0.1, 1.0])
        .per_env("b", 1, &[0.0, 0.1, 0.2])
        .build(SwitchLaw::constant(q).unwrap())
        .unwrap()
        .with_gauge(None)
        .unwrap();
    round_trip(&m);
}

proptest! {
    #[test]
    fn lv2_round_trip(vals in proptest::collection::vec(1e-3f64..1e3, 12), q in (1e-3f64..10.0, 1e-3f64..10.0)) {
        let mut fp = FamilyParams::new(FamilyTag::LV2Comp, 2, 2);
        let mut it = vals.iter();
        for name in ["a", "b", "c"] {
            for i in 1..=2 {
                for k in 1..=2 {
                    fp = fp.set(name, i, k, *it.next().unwrap());
                }
            }
        }
        let m = fp.build(SwitchLaw::two_state(q.0, q.1).unwrap()).unwrap();
        let back = parse_model_str(&serialize_model(&m)).unwrap();
        prop_assert_eq!(back, m);
    }
}
