use serde::{Deserialize, Serialize};

/// Functional form of the gauge function `F(x,k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GaugeKind {
    /// `F(x,k) = scale[k] * (1 + sum_i weights[k][i] x_i)`.
    Linear { scale: Vec<f64>, weights: Vec<Vec<f64>> },
    /// `F(x,k) = scale[k] * (1 + sum_i sqrt(x_i))`.
    SqrtSum { scale: Vec<f64> },
}

/// Lyapunov-type gauge used by the standing assumptions and the
/// `ln F` drift diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaugeFunction {
    pub kind: GaugeKind,
}

impl GaugeFunction {
    /// `alpha(k) (1 + x_1 + ... + x_n)`.
    pub fn linear(scale: Vec<f64>, n: usize) -> Self {
        let weights = vec![vec![1.0; n]; scale.len()];
        Self { kind: GaugeKind::Linear { scale, weights } }
    }

    pub fn weighted(scale: Vec<f64>, weights: Vec<Vec<f64>>) -> Self {
        Self { kind: GaugeKind::Linear { scale, weights } }
    }

    pub fn sqrt_sum(scale: Vec<f64>) -> Self {
        Self { kind: GaugeKind::SqrtSum { scale } }
    }

    fn scale(&self) -> &[f64] {
        match &self.kind {
            GaugeKind::Linear { scale, .. } | GaugeKind::SqrtSum { scale } => scale,
        }
    }

    pub fn n0(&self) -> usize {
        self.scale().len()
    }

    #[inline]
    pub fn eval(&self, x: &[f64], k: usize) -> f64 {
        match &self.kind {
            GaugeKind::Linear { scale, weights } => {
                scale[k] * (1.0 + weights[k].iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            }
            GaugeKind::SqrtSum { scale } => scale[k] * (1.0 + x.iter().map(|v| v.max(0.0).sqrt()).sum::<f64>()),
        }
    }

    /// `sum_i x_i f_i dF/dx_i` given the drift `g_i = x_i f_i`.
    ///
    /// For the square-root gauge `x_i f_i / (2 sqrt x_i) = sqrt(x_i) f_i / 2`,
    /// which stays finite on the boundary.
    #[inline]
    pub fn drift_derivative(&self, x: &[f64], fitness: &[f64], k: usize) -> f64 {
        match &self.kind {
            GaugeKind::Linear { scale, weights } => {
                scale[k] * weights[k].iter().zip(x).zip(fitness).map(|((w, xi), fi)| w * xi * fi).sum::<f64>()
            }
            GaugeKind::SqrtSum { scale } => {
                scale[k] * x.iter().zip(fitness).map(|(xi, fi)| 0.5 * xi.max(0.0).sqrt() * fi).sum::<f64>()
            }
        }
    }

    /// Exponent `delta` in the growth bound `F >= c (1 + |x|)^delta`.
    pub fn growth_exponent(&self) -> f64 {
        match self.kind {
            GaugeKind::Linear { .. } => 1.0,
            GaugeKind::SqrtSum { .. } => 0.5,
        }
    }

    /// Analytic growth constant `c`.
    pub fn growth_constant(&self) -> f64 {
        match &self.kind {
            GaugeKind::Linear { scale, weights } => scale
                .iter()
                .zip(weights)
                .map(|(s, w)| s * w.iter().fold(1.0f64, |m, &v| m.min(v)))
                .fold(f64::INFINITY, f64::min),
            GaugeKind::SqrtSum { scale } => scale.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Analytic bound `M_F` on `F(x,k) / F(x,l)` over the orthant.
    pub fn ratio_bound(&self) -> f64 {
        let s = self.scale();
        let mut m: f64 = 1.0;
        for k in 0..s.len() {
            for l in 0..s.len() {
                let w = match &self.kind {
                    GaugeKind::Linear { weights, .. } => {
                        weights[k].iter().zip(&weights[l]).map(|(a, b)| a / b).fold(1.0f64, f64::max)
                    }
                    GaugeKind::SqrtSum { .. } => 1.0,
                };
                m = m.max(s[k] / s[l] * w);
            }
        }
        m
    }

    pub(crate) fn project(&self, keep: &[usize]) -> Self {
        match &self.kind {
            GaugeKind::Linear { scale, weights } => {
                Self::weighted(scale.clone(), weights.iter().map(|w| keep.iter().map(|&j| w[j]).collect()).collect())
            }
            GaugeKind::SqrtSum { scale } => Self::sqrt_sum(scale.clone()),
        }
    }

    pub(crate) fn permuted(&self, perm: &[usize]) -> Self {
        match &self.kind {
            GaugeKind::Linear { scale, weights } => Self::weighted(
                perm.iter().map(|&p| scale[p]).collect(),
                perm.iter().map(|&p| weights[p].clone()).collect(),
            ),
            GaugeKind::SqrtSum { scale } => Self::sqrt_sum(perm.iter().map(|&p| scale[p]).collect()),
        }
    }
}
