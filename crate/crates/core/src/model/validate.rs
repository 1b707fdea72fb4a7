//! Probe-based checks of the standing assumptions. A pass means no
//! counterexample was found at the probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    Unknown,
    Skipped,
}

/// Supremum of the dissipation expression over one probe shell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipationShell {
    pub radius: f64,
    /// `max (LF/F)` over the shell.
    pub sup_lf_over_f: f64,
    /// Largest `delta0` with `LF/F + delta0 max_i |f_i| < 0` on the shell.
    pub delta0_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub probes: usize,
    pub max_row_sum_residual: f64,
    pub irreducible: CheckStatus,
    pub negative_rates: Vec<String>,
    pub rate_bound: CheckStatus,
    pub max_observed_rate: f64,
    pub growth: CheckStatus,
    pub growth_constant: Option<f64>,
    pub growth_exponent: Option<f64>,
    pub min_growth_ratio: Option<f64>,
    pub ratio: CheckStatus,
    pub ratio_bound: Option<f64>,
    pub max_ratio: Option<f64>,
    pub dissipation: CheckStatus,
    pub shells: Vec<DissipationShell>,
    pub delta0: Option<f64>,
    pub messages: Vec<String>,
}

impl ValidationReport {
    /// True when no check failed.
    pub fn ok(&self) -> bool {
        self.negative_rates.is_empty()
            && self.max_row_sum_residual <= 1e-12
            && ![self.irreducible, self.rate_bound, self.growth, self.ratio, self.dissipation]
                .contains(&CheckStatus::Fail)
    }
}

const SHELL_BASE: f64 = 100.0;
const SHELL_DIRECTIONS: usize = 64;

/// Strong connectivity of the directed graph with edges `q_kl > 0`.
pub(crate) fn irreducible(q: &[Vec<f64>]) -> bool {
    let n0 = q.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; n0];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(k) = stack.pop() {
            for l in 0..n0 {
                let w = if forward { q[k][l] } else { q[l][k] };
                if l != k && w > 0.0 && !seen[l] {
                    seen[l] = true;
                    stack.push(l);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    n0 > 0 && reach(true) && reach(false)
}

fn probe_points(n: usize) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    if n == 0 {
        pts.push(Vec::new());
        return pts;
    }
    let levels = [0.0, 0.01, 0.5, 1.0, 3.0, 10.0, 50.0, 200.0];
    if n <= 3 {
        let total = levels.len().pow(n as u32);
        for mut c in 0..total {
            let mut x = vec![0.0; n];
            for xi in x.iter_mut() {
                *xi = levels[c % levels.len()];
                c /= levels.len();
            }
            pts.push(x);
        }
    } else {
        for &l in &levels {
            pts.push(vec![l; n]);
            for i in 0..n {
                let mut x = vec![0.0; n];
                x[i] = l;
                pts.push(x);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..200 {
        pts.push((0..n).map(|_| 10f64.powf(rng.random_range(-3.0..3.0))).collect());
    }
    pts
}

fn shell_points(n: usize, radius: f64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e11);
    let mut pts = Vec::new();
    for i in 0..n {
        let mut x = vec![0.0; n];
        x[i] = radius;
        pts.push(x);
    }
    pts.push(vec![radius / (n as f64).sqrt(); n]);
    while pts.len() < SHELL_DIRECTIONS {
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0f64)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-9 {
            pts.push(v.iter().map(|a| a / norm * radius).collect());
        }
    }
    pts
}

/// `LF/F` at `(x,k)`, where `L` is the generator.
pub(crate) fn lf_over_f(model: &ModelSpec, x: &[f64], k: usize) -> Option<f64> {
    let g = model.gauge()?;
    let mut f = vec![0.0; model.n()];
    model.fitness_into(x, k, &mut f);
    let fk = g.eval(x, k);
    let mut lf = g.drift_derivative(x, &f, k);
    for l in 0..model.n0() {
        if l != k {
            lf += model.switch().rate(x, k, l).ok()? * (g.eval(x, l) - fk);
        }
    }
    Some(lf / fk)
}

/// Runs every check and collects the results.
pub fn validate(model: &ModelSpec) -> ValidationReport {
    let n = model.n();
    let n0 = model.n0();
    let probes = probe_points(n);
    let mut report = ValidationReport {
        probes: probes.len(),
        max_row_sum_residual: 0.0,
        irreducible: CheckStatus::Pass,
        negative_rates: Vec::new(),
        rate_bound: CheckStatus::Skipped,
        max_observed_rate: 0.0,
        growth: CheckStatus::Skipped,
        growth_constant: None,
        growth_exponent: None,
        min_growth_ratio: None,
        ratio: CheckStatus::Skipped,
        ratio_bound: None,
        max_ratio: None,
        dissipation: CheckStatus::Skipped,
        shells: Vec::new(),
        delta0: None,
        messages: Vec::new(),
    };
    if model.switch().rate_bound().is_some() {
        report.rate_bound = CheckStatus::Pass;
    }
    for x in &probes {
        match model.rate_matrix(x) {
            Ok(q) => {
                for (k, row) in q.iter().enumerate() {
                    report.max_row_sum_residual = report.max_row_sum_residual.max(row.iter().sum::<f64>().abs());
                    let exit = -row[k];
                    report.max_observed_rate = report.max_observed_rate.max(exit);
                    if let Some(bound) = model.switch().rate_bound() {
                        if exit > bound && report.rate_bound != CheckStatus::Fail {
                            report.rate_bound = CheckStatus::Fail;
                            report.messages.push(format!(
                                "exit rate {exit} of environment {} exceeds rate_bound {bound} at {x:?}",
                                k + 1
                            ));
                        }
                    }
                }
                if n0 > 1 && !irreducible(&q) && report.irreducible != CheckStatus::Fail {
                    report.irreducible = CheckStatus::Fail;
                    report.messages.push(format!("switching chain is reducible at {x:?}"));
                }
            }
            Err(e) => {
                if report.negative_rates.len() < 5 {
                    report.negative_rates.push(e.to_string());
                }
            }
        }
    }

    let Some(gauge) = model.gauge() else {
        report.messages.push("no gauge function; growth, ratio and dissipation checks skipped".into());
        return report;
    };

    let c = gauge.growth_constant();
    let delta = gauge.growth_exponent();
    let m_f = gauge.ratio_bound();
    report.growth_constant = Some(c);
    report.growth_exponent = Some(delta);
    report.ratio_bound = Some(m_f);
    let mut min_growth = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    let mut all: Vec<&Vec<f64>> = probes.iter().collect();
    let shells: Vec<Vec<Vec<f64>>> = (0..4).map(|s| shell_points(n, SHELL_BASE * f64::powi(2.0, s))).collect();
    if n > 0 {
        all.extend(shells.iter().flatten());
    }
    for x in all {
        let norm = x.iter().map(|a| a * a).sum::<f64>().sqrt();
        for k in 0..n0 {
            let fk = gauge.eval(x, k);
            if !(fk > 0.0) {
                min_growth = f64::NEG_INFINITY;
            }
            min_growth = min_growth.min(fk / (1.0 + norm).powf(delta));
            for l in 0..n0 {
                max_ratio = max_ratio.max(fk / gauge.eval(x, l));
            }
        }
    }
    report.min_growth_ratio = Some(min_growth);
    report.max_ratio = Some(max_ratio);
    let tol = 1e-12;
    report.growth = if min_growth >= c * (1.0 - tol) && c > 0.0 { CheckStatus::Pass } else { CheckStatus::Fail };
    report.ratio = if max_ratio <= m_f * (1.0 + tol) { CheckStatus::Pass } else { CheckStatus::Fail };

    if n == 0 {
        report.dissipation = CheckStatus::Skipped;
        return report;
    }
    let mut delta0 = f64::INFINITY;
    for (s, pts) in shells.iter().enumerate() {
        let mut sup = f64::NEG_INFINITY;
        let mut margin = f64::INFINITY;
        let mut f = vec![0.0; n];
        for x in pts {
            for k in 0..n0 {
                let v = match lf_over_f(model, x, k) {
                    Some(v) => v,
                    None => continue,
                };
                model.fitness_into(x, k, &mut f);
                let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                sup = sup.max(v);
                margin = margin.min(if v < 0.0 {
                    if fmax > 0.0 {
                        -v / fmax
                    } else {
                        f64::INFINITY
                    }
                } else {
                    0.0
                });
            }
        }
        if s >= 2 {
            delta0 = delta0.min(margin);
        }
        report.shells.push(DissipationShell {
            radius: SHELL_BASE * f64::powi(2.0, s as i32),
            sup_lf_over_f: sup,
            delta0_margin: margin,
        });
    }
    let outer = &report.shells[2..];
    report.dissipation = if outer.iter().all(|s| s.sup_lf_over_f < 0.0) {
        CheckStatus::Pass
    } else if outer[1].sup_lf_over_f > 0.0 && outer[1].sup_lf_over_f >= outer[0].sup_lf_over_f {
        CheckStatus::Fail
    } else {
        CheckStatus::Unknown
    };
    if report.dissipation == CheckStatus::Pass {
        report.delta0 = Some(delta0.min(1.0));
    }
    report
}
