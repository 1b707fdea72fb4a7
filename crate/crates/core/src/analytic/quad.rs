//! Adaptive Gauss-Kronrod quadrature with algebraic endpoint substitution
//! and geometric tail panels.

#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;

use crate::error::{PdmpError, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod value, error estimate and Kronrod integral of `|f|`.
fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    let mut k_abs = fc.abs() * WGK[7];
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        let s = f1 + f2;
        k += WGK[j] * s;
        k_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs(), k_abs * h.abs())
}

struct Piece {
    a: f64,
    b: f64,
    val: f64,
    err: f64,
    val_abs: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive GK15 on `[a, b]`. The relative tolerance applies to
/// the integral of `|f|`, so cancelling integrands still converge.
pub fn adaptive(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> Result<f64> {
    Ok(adapt(f, a, b, rel, abs)?.0)
}

/// As `adaptive`, also returning the integral of `|f|`.
fn adapt(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, rel: f64, abs: f64) -> Result<(f64, f64)> {
    let (v, e, va) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { a, b, val: v, err: e, val_abs: va });
    let (mut total, mut err, mut total_abs) = (v, e, va);
    for _ in 0..4000 {
        if !total.is_finite() {
            return Err(PdmpError::NonIntegrable(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= abs.max(rel * total_abs) {
            return Ok((total, total_abs));
        }
        let p = heap.pop().unwrap();
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1, a1) = gk15(f, p.a, m);
        let (v2, e2, a2) = gk15(f, m, p.b);
        total += v1 + v2 - p.val;
        err += e1 + e2 - p.err;
        total_abs += a1 + a2 - p.val_abs;
        heap.push(Piece { a: p.a, b: m, val: v1, err: e1, val_abs: a1 });
        heap.push(Piece { a: m, b: p.b, val: v2, err: e2, val_abs: a2 });
    }
    let total: f64 = heap.iter().map(|p| p.val).sum();
    let total_abs: f64 = heap.iter().map(|p| p.val_abs).sum();
    let err: f64 = heap.iter().map(|p| p.err).sum();
    if err <= 1e3 * abs.max(rel * total_abs) && total.is_finite() {
        Ok((total, total_abs))
    } else {
        Err(PdmpError::NonIntegrable(format!(
            "quadrature did not converge on [{a}, {b}] (estimate {total}, error {err})"
        )))
    }
}

/// Integrand evaluated with exact distances to both interval ends:
/// `f(x, x - lo, hi - x)`.
pub type Offsets<'a> = dyn Fn(f64, f64, f64) -> f64 + 'a;

fn check_exponent(e: f64) -> Result<()> {
    if !(e > -1.0) {
        return Err(PdmpError::NonIntegrable(format!("endpoint exponent {e} is not above -1")));
    }
    Ok(())
}

/// Integral of `g(d)` for `d` in `(0, len]` where `g(d) ~ d^e` as `d -> 0`.
///
/// Mild singularities use `d = len u^p` with `p = 2 / (e + 1)`. Below
/// `e = -1/2` the mass spreads over many decades, so `(0, eps]` is taken
/// from the local power law and the rest uses `d = eps (len / eps)^u`.
fn end_piece(g: &dyn Fn(f64) -> f64, len: f64, e: f64, rel: f64, abs: f64) -> Result<(f64, f64)> {
    check_exponent(e)?;
    if e >= -0.5 {
        let p = (2.0 / (e + 1.0)).max(1.0);
        // Once the substituted offset underflows, the transformed integrand
        // vanishes like a positive power of u.
        let mut h = |u: f64| {
            let d = len * u.powf(p);
            if d == 0.0 {
                return 0.0;
            }
            g(d) * len * p * u.powf(p - 1.0)
        };
        return adapt(&mut h, 0.0, 1.0, rel, abs);
    }
    let eps = 1e-12 * len;
    let head = g(eps) * eps / (e + 1.0);
    let span = (len / eps).ln();
    let mut h = |u: f64| {
        let d = eps * (span * u).exp();
        g(d) * d * span
    };
    let (v, va) = adapt(&mut h, 0.0, 1.0, rel, abs)?;
    Ok((v + head, va + head.abs()))
}

/// Integral over a finite `[lo, hi]` of a function behaving like
/// `(x - lo)^e_lo` and `(hi - x)^e_hi` at the ends.
pub fn finite(f: &Offsets, lo: f64, hi: f64, e_lo: f64, e_hi: f64, rel: f64, abs: f64) -> Result<f64> {
    Ok(finite_abs(f, lo, hi, e_lo, e_hi, rel, abs)?.0)
}

fn finite_abs(f: &Offsets, lo: f64, hi: f64, e_lo: f64, e_hi: f64, rel: f64, abs: f64) -> Result<(f64, f64)> {
    let mid = 0.5 * (lo + hi);
    let (l, r) = (mid - lo, hi - mid);
    let left = |d: f64| f(lo + d, d, r + (l - d));
    let right = |d: f64| f(hi - d, l + (r - d), d);
    let (a, a_abs) = end_piece(&left, l, e_lo, rel, 0.5 * abs)?;
    let (b, b_abs) = end_piece(&right, r, e_hi, rel, 0.5 * abs)?;
    Ok((a + b, a_abs + b_abs))
}

/// Integral over `[lo, inf)`: a singular-aware piece on `[lo, x0]` then
/// panels `[X, 2X]`. The remaining tail is extrapolated geometrically from
/// the last two panels, which is exact for a power law; panels are added
/// until successive tail extrapolations agree to `1e-10` of the integral
/// of `|f|`, or to `abs`.
pub fn semi_infinite(f: &Offsets, lo: f64, x0: f64, e_lo: f64, rel: f64, abs: f64) -> Result<f64> {
    let (mut acc, mut scale) = finite_abs(f, lo, x0, e_lo, 0.0, rel, abs)?;
    let mut x = x0;
    let mut prev: Option<f64> = None;
    let mut prev_tail: Option<f64> = None;
    for _ in 0..400 {
        let mut g = |t: f64| f(t, t - lo, f64::INFINITY);
        let (panel, panel_abs) = adapt(&mut g, x, 2.0 * x, rel, 1e-3 * abs)?;
        acc += panel;
        scale += panel_abs;
        x *= 2.0;
        let tol = 1e-10 * scale + abs;
        if panel_abs <= 1e-3 * tol && prev.is_some_and(|p: f64| p.abs() <= 1e-3 * tol) {
            return Ok(acc);
        }
        let mut tail = None;
        if let Some(pv) = prev {
            let r = panel / pv;
            if r > 0.0 && r < 1.0 {
                let t = panel * r / (1.0 - r);
                if t.abs() <= tol {
                    return Ok(acc + t);
                }
                if let Some(pt) = prev_tail {
                    if (pt - (panel + t)).abs() <= tol {
                        return Ok(acc + t);
                    }
                }
                tail = Some(t);
            }
        }
        if x > 1e15 * x0.max(1.0) || !x.is_finite() {
            break;
        }
        prev = Some(panel);
        prev_tail = tail;
    }
    Err(PdmpError::NonIntegrable(format!("tail does not decay fast enough (panels up to x = {x:e})")))
}
