//! WebAssembly entry points for the static demo page in `www/`.
//!
//! Every export returns a JSON string; errors come back as the message.

use pdmp::analytic::{represent_face, stationary_switch, MonteCarloConfig, Representation};
use pdmp::classify::{classify, ClassifyConfig};
use pdmp::model::FamilyTag;
use pdmp::simulate::{simulate, SimConfig};
use pdmp::{FamilyParams, ModelSpec, PdmpError, SubspaceIndex, SwitchLaw};
use serde_json::json;
use wasm_bindgen::prelude::*;

type Out = Result<String, String>;

fn fail(e: PdmpError) -> String {
    e.to_string()
}

/// `dx/dt = x (a_k - b_k x)` with two environments.
fn single(a: [f64; 2], b: [f64; 2], q12: f64, q21: f64) -> Result<ModelSpec, PdmpError> {
    ModelSpec::single1d(&a, &b, q12, q21)
}

fn origin_rate(a: [f64; 2], q12: f64, q21: f64) -> Result<f64, PdmpError> {
    let nu = stationary_switch(&[vec![-q12, q12], vec![q21, -q21]])?;
    Ok(nu[0] * a[0] + nu[1] * a[1])
}

/// One path of the one-species model, sampled about 1000 times.
///
/// Returns `{t, x, k, jumps, lambda0}` with `k` 1-based and `lambda0` the
/// growth rate at the origin.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate_path(a1: f64, a2: f64, b1: f64, b2: f64, q12: f64, q21: f64, x0: f64, t_max: f64, seed: u64) -> Out {
    let model = single([a1, a2], [b1, b2], q12, q21).map_err(fail)?;
    let cfg = SimConfig { record_dt: t_max / 1000.0, ..SimConfig::new(t_max, seed) };
    let traj = simulate(&model, &[x0], 0, &cfg).map_err(fail)?;
    let x: Vec<f64> = (0..traj.len()).map(|s| traj.state(s)[0]).collect();
    let k: Vec<usize> = traj.envs.iter().map(|k| k + 1).collect();
    let jumps: Vec<f64> = traj.jumps.iter().map(|j| j.t).collect();
    let lambda0 = origin_rate([a1, a2], q12, q21).map_err(fail)?;
    Ok(json!({ "t": traj.times, "x": x, "k": k, "jumps": jumps, "lambda0": lambda0 }).to_string())
}

/// Invariant law of the one-species model on `(0, inf)`.
///
/// Returns `{kind, x, h1, h2, masses, support}` for a density or
/// `{kind: "PointMass", x, nu}`.
#[wasm_bindgen]
pub fn invariant_density(a1: f64, a2: f64, b1: f64, b2: f64, q12: f64, q21: f64, points: usize) -> Out {
    let model = single([a1, a2], [b1, b2], q12, q21).map_err(fail)?;
    let rep = represent_face(&model, &SubspaceIndex::new([0]), &MonteCarloConfig::default()).map_err(fail)?;
    match rep.repr {
        Representation::Density { density, .. } => {
            let rows = density.table(points, 1e-6).map_err(fail)?;
            let col = |f: fn(&(f64, f64, f64)) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
            Ok(json!({
                "kind": format!("{:?}", density.kind),
                "x": col(|r| r.0),
                "h1": col(|r| r.1),
                "h2": col(|r| r.2),
                "masses": [density.masses.0, density.masses.1],
                "support": density.support,
            })
            .to_string())
        }
        Representation::PointMass { x, nu } => Ok(json!({ "kind": "PointMass", "x": x[0], "nu": nu }).to_string()),
        other => Err(format!("no closed form (method {})", other.method().name())),
    }
}

/// Verdict for the two-species model that is neutral in environment 1
/// and competitive in environment 2.
///
/// `p` holds `a1_1, a2_1, a1_2, a2_2, b1_2, b2_2, c1_2, c2_2, q12, q21`.
/// Returns `{verdict, qualifiers, weights, rows}` where each row has the
/// face (1-based species), whether it carries a measure, the method and
/// the invasion rates.
#[wasm_bindgen]
pub fn classify_expl2d(p: Vec<f64>) -> Out {
    if p.len() != 10 {
        return Err(format!("expected 10 parameters, got {}", p.len()));
    }
    let model = FamilyParams::new(FamilyTag::Expl2D, 2, 2)
        .per_env("a", 1, &[p[0], p[2]])
        .per_env("a", 2, &[p[1], p[3]])
        .set("b", 1, 2, p[4])
        .set("b", 2, 2, p[5])
        .set("c", 1, 2, p[6])
        .set("c", 2, 2, p[7])
        .build(SwitchLaw::two_state(p[8], p[9]).map_err(fail)?)
        .map_err(fail)?;
    let mut cfg = ClassifyConfig::default();
    cfg.mc.t_max = 2000.0;
    cfg.mc.burn_in = 200.0;
    let c = classify(&model, &cfg).map_err(fail)?;
    let rows: Vec<_> = c
        .table
        .rows
        .iter()
        .map(|r| {
            json!({
                "face": r.face.members().iter().map(|i| i + 1).collect::<Vec<_>>(),
                "exists": r.exists,
                "method": r.method.map(|m| m.name()),
                "lambdas": r.lambdas,
            })
        })
        .collect();
    Ok(json!({
        "verdict": c.verdict.outcome.label(),
        "qualifiers": c.verdict.qualifiers,
        "weights": c.verdict.weights,
        "rows": rows,
    })
    .to_string())
}
