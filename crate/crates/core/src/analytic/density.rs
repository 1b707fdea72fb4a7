//! Closed-form invariant densities on one-species faces with two
//! environments and constant switching rates.

use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;

use super::quad;
use crate::error::{PdmpError, Result};

const REL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DensityKind {
    /// Linear growth in one environment, logistic with positive intercept
    /// in the other; support `[a/b, inf)`.
    CaseI,
    /// As `CaseI` but the logistic intercept is negative; support `(0, inf)`.
    CaseII,
    /// Logistic in both environments with distinct carrying capacities.
    LvLogisticPair,
    /// Equal carrying capacities: a point mass.
    PointMass,
}

/// Shape parameters, with environments in the orientation of the formulas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DensityParams {
    /// `f(x,1) = a1`, `f(x,2) = a2 - b x`.
    Linear { a1: f64, a2: f64, b: f64, q12: f64, q21: f64 },
    /// `f(x,k) = b_k (p_k - x)`, `gamma1 = q12 / a1(1)`, `gamma2 = q21 / a1(2)`.
    Pair { p1: f64, p2: f64, b1: f64, b2: f64, gamma1: f64, gamma2: f64 },
}

/// An invariant density `(h1, h2)` of the one-species face.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormDensity {
    pub kind: DensityKind,
    pub params: DensityParams,
    /// Support `[lo, hi]`; `hi` may be infinite.
    pub support: (f64, f64),
    /// Named exponents: `gamma` for Case I, `tau` and the factor exponent
    /// for Case II, `gamma1`, `gamma2` for the pair.
    pub exponents: Vec<(String, f64)>,
    /// Normalizing constant for the unnormalized shapes.
    pub norm: f64,
    /// `ln norm`, kept separately since `norm` can leave floating range.
    pub log_norm: f64,
    log_shift: f64,
    /// `(int h1, int h2)`.
    pub masses: (f64, f64),
    /// True when the model's environment labels are swapped relative to
    /// the formula orientation.
    pub swapped: bool,
}

impl ClosedFormDensity {
    /// Log of the unnormalized shape of environment `k` (formula
    /// orientation) at `x` given the exact offsets `dlo = x - lo`,
    /// `dhi = hi - x`.
    fn log_shape(&self, k: usize, x: f64, dlo: f64, dhi: f64) -> f64 {
        match self.params {
            DensityParams::Linear { a1, a2, b, q12, q21 } => {
                if a2 > 0.0 {
                    let r = q21 / a2;
                    let gamma = 1.0 + q12 / a1 + r;
                    let lu = (b * dlo).ln();
                    let base = -gamma * x.ln();
                    if k == 0 {
                        r * lu + base
                    } else {
                        a1.ln() + (r - 1.0) * lu + base
                    }
                } else {
                    let big_a = -a2;
                    let r = q21 / big_a;
                    let tau = 1.0 - (r - q12 / a1);
                    let lw = (b * x + big_a).ln();
                    let base = -tau * dlo.ln();
                    if k == 0 {
                        base - r * lw
                    } else {
                        a1.ln() + base - (1.0 + r) * lw
                    }
                }
            }
            DensityParams::Pair { p1, p2, b1, b2, gamma1, gamma2 } => {
                let (d1, d2) = if p1 < p2 { (dlo, dhi) } else { (dhi, dlo) };
                let base = (-1.0 - gamma1 - gamma2) * x.ln();
                if k == 0 {
                    (gamma1 - 1.0) * d1.ln() + gamma2 * d2.ln() + base - b1.ln()
                } else {
                    (gamma2 - 1.0) * d2.ln() + gamma1 * d1.ln() + base - b2.ln()
                }
            }
        }
    }

    /// Shape scaled by `exp(-log_shift)`.
    fn shape(&self, k: usize, x: f64, dlo: f64, dhi: f64) -> f64 {
        (self.log_shape(k, x, dlo, dhi) - self.log_shift).exp()
    }

    /// Largest log shape over a coarse sample of the support.
    fn peak_log_shape(&self) -> f64 {
        let (lo, hi) = self.support;
        let xs: Vec<f64> = if hi.is_finite() {
            (1..200).map(|j| lo + (hi - lo) * j as f64 / 200.0).collect()
        } else {
            let x0 = self.tail_start();
            (-40..80).map(|j| lo + x0 * 2f64.powf(j as f64 / 2.0)).collect()
        };
        xs.iter()
            .flat_map(|&x| (0..2).map(move |k| (k, x)))
            .map(|(k, x)| self.log_shape(k, x, x - lo, hi - x))
            .filter(|v| v.is_finite())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Exponents of the combined shape at the lower and upper support ends.
    fn end_exponents(&self) -> (f64, f64) {
        match self.params {
            DensityParams::Linear { a1, a2, q12, q21, .. } => {
                if a2 > 0.0 {
                    (q21 / a2 - 1.0, 0.0)
                } else {
                    let r = q21 / -a2;
                    (r - q12 / a1 - 1.0, 0.0)
                }
            }
            DensityParams::Pair { p1, p2, gamma1, gamma2, .. } => {
                let (e1, e2) = (gamma1 - 1.0, gamma2 - 1.0);
                if p1 < p2 {
                    (e1, e2)
                } else {
                    (e2, e1)
                }
            }
        }
    }

    fn tail_start(&self) -> f64 {
        match self.params {
            DensityParams::Linear { a1, a2, b, .. } => {
                if a2 > 0.0 {
                    2.0 * a2 / b
                } else {
                    (a1.max(-a2) / b).max(1e-3)
                }
            }
            DensityParams::Pair { .. } => self.support.1,
        }
    }

    /// Integral of `g(x, k)` against the unnormalized shapes, where `k` is in
    /// model orientation.
    /// The environment terms are also integrated in absolute value first,
    /// which sets the absolute tolerance when they cancel.
    fn raw_integral(&self, g: &dyn Fn(f64, usize) -> f64) -> Result<f64> {
        let orient = |k: usize| if self.swapped { 1 - k } else { k };
        let sum = |x: f64, dlo: f64, dhi: f64, abs: bool| {
            let mut v = 0.0;
            for k in 0..2 {
                let s = self.shape(k, x, dlo, dhi);
                if s != 0.0 {
                    let t = g(x, orient(k)) * s;
                    v += if abs { t.abs() } else { t };
                }
            }
            v
        };
        let scale = self.integrate_offsets(&|x, a, b| sum(x, a, b, true), 0.0)?;
        self.integrate_offsets(&|x, a, b| sum(x, a, b, false), 1e-13 * scale)
    }

    fn integrate_offsets(&self, f: &quad::Offsets, abs: f64) -> Result<f64> {
        let (lo, hi) = self.support;
        let (e_lo, e_hi) = self.end_exponents();
        if hi.is_finite() {
            quad::finite(f, lo, hi, e_lo, e_hi, REL_TOL, abs)
        } else {
            quad::semi_infinite(f, lo, self.tail_start(), e_lo, REL_TOL, abs)
        }
    }

    fn finish(mut self) -> Result<Self> {
        if self.kind == DensityKind::PointMass {
            return Ok(self);
        }
        self.log_shift = self.peak_log_shape();
        let z = self.raw_integral(&|_, _| 1.0)?;
        self.log_norm = -self.log_shift - z.ln();
        self.norm = self.log_norm.exp();
        let m1 = self.raw_integral(&|_, k| (k == 0) as u8 as f64)? / z;
        self.masses = (m1, 1.0 - m1);
        Ok(self)
    }

    fn scaled_norm(&self) -> f64 {
        (self.log_norm + self.log_shift).exp()
    }

    /// `h_k(x)` in model orientation (`k` = 0 or 1).
    pub fn h(&self, k: usize, x: f64) -> f64 {
        let (lo, hi) = self.support;
        if self.kind == DensityKind::PointMass || !(x > lo && x < hi) {
            return 0.0;
        }
        let k = if self.swapped { 1 - k } else { k };
        (self.log_shape(k, x, x - lo, hi - x) + self.log_norm).exp()
    }

    /// Location of a point mass.
    pub fn point(&self) -> Option<f64> {
        (self.kind == DensityKind::PointMass).then_some(self.support.0)
    }

    /// Unnormalized per-environment integrals from Beta functions (formula
    /// orientation), for Case I and Case II.
    pub fn beta_masses(&self) -> Option<(f64, f64)> {
        let DensityParams::Linear { a1, a2, b, q12, q21 } = self.params else {
            return None;
        };
        if a2 > 0.0 {
            let r = q21 / a2;
            let s = q12 / a1;
            let gamma = 1.0 + s + r;
            let c = (gamma - 1.0) * (b / a2).ln();
            let m1 = (r * a2.ln() + c + ln_beta(s, r + 1.0)).exp();
            let m2 = a1 * ((r - 1.0) * a2.ln() + c + ln_beta(s + 1.0, r)).exp();
            Some((m1, m2))
        } else {
            let big_a = -a2;
            let r = q21 / big_a;
            let s = q12 / a1;
            let tau = 1.0 - (r - s);
            let base = (1.0 - tau) * (big_a / b).ln();
            let m1 = (base - r * big_a.ln() + ln_beta(r - s, s)).exp();
            let m2 = a1 * (base - (1.0 + r) * big_a.ln() + ln_beta(r - s, s + 1.0)).exp();
            Some((m1, m2))
        }
    }

    /// `x` beyond which the density has mass `eps`.
    pub fn upper_quantile(&self, eps: f64) -> Result<f64> {
        let (lo, hi) = self.support;
        if hi.is_finite() || self.kind == DensityKind::PointMass {
            return Ok(hi);
        }
        let below = |x: f64| -> Result<f64> {
            let f = |t: f64, dlo: f64, dhi: f64| (0..2).map(|k| self.shape(k, t, dlo, dhi)).sum::<f64>();
            Ok(self.scaled_norm() * quad::finite(&f, lo, x, self.end_exponents().0, 0.0, REL_TOL, 0.0)?)
        };
        let mut b = self.tail_start().max(lo + 1e-9);
        while 1.0 - below(b)? > eps {
            b *= 2.0;
            if b > 1e300 {
                return Err(PdmpError::NonIntegrable("quantile search diverged".into()));
            }
        }
        let mut a = lo;
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if 1.0 - below(m)? > eps {
                a = m;
            } else {
                b = m;
            }
            if b - a < 1e-10 * b {
                break;
            }
        }
        Ok(b)
    }

    /// Sample of `(x, h1, h2)` on `points` abscissae clustered near the
    /// support ends.
    pub fn table(&self, points: usize, tail_eps: f64) -> Result<Vec<(f64, f64, f64)>> {
        if let Some(p) = self.point() {
            return Ok(vec![(p, self.masses.0, self.masses.1)]);
        }
        let (lo, hi) = self.support;
        let hi = if hi.is_finite() { hi } else { self.upper_quantile(tail_eps)? };
        Ok((1..points.max(3) - 1)
            .map(|j| {
                let u = j as f64 / (points.max(3) - 1) as f64;
                let x = lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * u).cos());
                (x, self.h(0, x), self.h(1, x))
            })
            .collect())
    }
}

/// Integral of `g(x, k)` against the density (`k` in model orientation).
pub fn integrate_density(d: &ClosedFormDensity, g: &dyn Fn(f64, usize) -> f64) -> Result<f64> {
    if let Some(p) = d.point() {
        return Ok(d.masses.0 * g(p, 0) + d.masses.1 * g(p, 1));
    }
    Ok(d.scaled_norm() * d.raw_integral(g)?)
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(PdmpError::InvalidConfig(format!("{name} must be positive, got {v}")))
    }
}

/// Density for `f(x,1) = a11`, `f(x,2) = a12 - b12 x` with rates `q12`, `q21`.
pub fn density_1d_logistic(a11: f64, a12: f64, b12: f64, q12: f64, q21: f64) -> Result<ClosedFormDensity> {
    positive("a1(1)", a11)?;
    positive("b1(2)", b12)?;
    positive("q12", q12)?;
    positive("q21", q21)?;
    if a12 == 0.0 || !a12.is_finite() {
        return Err(PdmpError::InvalidConfig("a1(2) must be nonzero".into()));
    }
    let params = DensityParams::Linear { a1: a11, a2: a12, b: b12, q12, q21 };
    let d = if a12 > 0.0 {
        let gamma = 1.0 + q12 / a11 + q21 / a12;
        ClosedFormDensity {
            kind: DensityKind::CaseI,
            params,
            support: (a12 / b12, f64::INFINITY),
            exponents: vec![("gamma".into(), gamma), ("factor".into(), q21 / a12)],
            norm: 0.0,
            log_norm: 0.0,
            log_shift: 0.0,
            masses: (0.0, 0.0),
            swapped: false,
        }
    } else {
        let big_a = -a12;
        if a11 * q21 - big_a * q12 <= 0.0 {
            return Err(PdmpError::NoInteriorMeasure(format!(
                "a1(1) q21 - |a1(2)| q12 = {} is not positive",
                a11 * q21 - big_a * q12
            )));
        }
        let r = q21 / big_a;
        let tau = 1.0 - (r - q12 / a11);
        ClosedFormDensity {
            kind: DensityKind::CaseII,
            params,
            support: (0.0, f64::INFINITY),
            exponents: vec![("tau".into(), tau), ("factor".into(), -r)],
            norm: 0.0,
            log_norm: 0.0,
            log_shift: 0.0,
            masses: (0.0, 0.0),
            swapped: false,
        }
    };
    d.finish()
}

/// Density for `f(x,k) = a1(k) - b1(k) x` in both environments.
pub fn density_lv_boundary(a11: f64, a12: f64, b11: f64, b12: f64, q12: f64, q21: f64) -> Result<ClosedFormDensity> {
    for (name, v) in [("a1(1)", a11), ("a1(2)", a12), ("b1(1)", b11), ("b1(2)", b12), ("q12", q12), ("q21", q21)] {
        positive(name, v)?;
    }
    let (p1, p2) = (a11 / b11, a12 / b12);
    let (gamma1, gamma2) = (q12 / a11, q21 / a12);
    let params = DensityParams::Pair { p1, p2, b1: b11, b2: b12, gamma1, gamma2 };
    let exponents = vec![("gamma1".into(), gamma1), ("gamma2".into(), gamma2)];
    if p1 == p2 {
        let s = q12 + q21;
        return Ok(ClosedFormDensity {
            kind: DensityKind::PointMass,
            params,
            support: (p1, p1),
            exponents,
            norm: 1.0,
            log_norm: 0.0,
            log_shift: 0.0,
            masses: (q21 / s, q12 / s),
            swapped: false,
        });
    }
    ClosedFormDensity {
        kind: DensityKind::LvLogisticPair,
        params,
        support: (p1.min(p2), p1.max(p2)),
        exponents,
        norm: 0.0,
        log_norm: 0.0,
        log_shift: 0.0,
        masses: (0.0, 0.0),
        swapped: false,
    }
    .finish()
}

/// Closed form for a one-species face with affine fitness
/// `f(x,k) = a[k] - b[k] x`, two environments and constant rates, if one
/// applies.
pub fn density_for_face(a: [f64; 2], b: [f64; 2], q12: f64, q21: f64) -> Option<Result<ClosedFormDensity>> {
    if b[0] == 0.0 && b[1] > 0.0 && a[0] > 0.0 && a[1] != 0.0 {
        return Some(density_1d_logistic(a[0], a[1], b[1], q12, q21));
    }
    if b[1] == 0.0 && b[0] > 0.0 && a[1] > 0.0 && a[0] != 0.0 {
        return Some(density_1d_logistic(a[1], a[0], b[0], q21, q12).map(|mut d| {
            d.swapped = true;
            d.masses = (d.masses.1, d.masses.0);
            d
        }));
    }
    if b[0] > 0.0 && b[1] > 0.0 && a[0] > 0.0 && a[1] > 0.0 {
        return Some(density_lv_boundary(a[0], a[1], b[0], b[1], q12, q21));
    }
    None
}
