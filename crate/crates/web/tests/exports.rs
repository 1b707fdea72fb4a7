use pdmp_web::{classify_expl2d, invariant_density, simulate_path};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn path_is_sampled_and_positive() {
    let v = parse(simulate_path(0.5, 1.0, 0.0, 0.05, 2.0, 2.0, 1.0, 50.0, 4).unwrap());
    let x = v["x"].as_array().unwrap();
    assert_eq!(x.len(), v["t"].as_array().unwrap().len());
    assert!(x.iter().all(|x| x.as_f64().unwrap() > 0.0));
    assert!((v["lambda0"].as_f64().unwrap() - 0.75).abs() < 1e-12);
    assert_eq!(
        simulate_path(0.5, 1.0, 0.0, 0.05, 2.0, 2.0, 1.0, 50.0, 4).unwrap(),
        simulate_path(0.5, 1.0, 0.0, 0.05, 2.0, 2.0, 1.0, 50.0, 4).unwrap()
    );
}

#[test]
fn density_integrates_to_one() {
    let v = parse(invariant_density(0.5, 1.0, 0.0, 0.05, 2.0, 2.0, 2000).unwrap());
    assert_eq!(v["kind"], "CaseI");
    let col = |k: &str| v[k].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect::<Vec<_>>();
    let (x, h1, h2) = (col("x"), col("h1"), col("h2"));
    let mut mass = 0.0;
    for i in 1..x.len() {
        mass += 0.5 * (x[i] - x[i - 1]) * (h1[i] + h2[i] + h1[i - 1] + h2[i - 1]);
    }
    assert!((mass - 1.0).abs() < 0.02, "{mass}");
}

#[test]
fn density_reports_errors_as_text() {
    let e = invariant_density(-0.5, -1.0, 0.1, 0.1, 2.0, 2.0, 100).unwrap_err();
    assert!(e.contains("origin"), "{e}");
}

#[test]
fn classify_matches_the_two_reference_regimes() {
    let a = parse(classify_expl2d(vec![1.0, 0.5, 1.0, 4.0, 0.75, 0.25, 0.05, 0.025, 2.0, 2.0]).unwrap());
    assert_eq!(a["verdict"], "PersistAll");
    let b = parse(classify_expl2d(vec![0.95, 1.0, 80.0 / 9.0, 10.0, 8.0, 8.0, 7.5, 10.0, 2.0, 2.0]).unwrap());
    assert!(b["verdict"].as_str().unwrap().starts_with("ExtinctionTo"), "{b}");
    assert!(classify_expl2d(vec![1.0; 3]).is_err());
}
