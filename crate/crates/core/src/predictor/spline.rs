//! Natural cubic spline performance-compression curves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scoring::RetentionValue;

/// Piecewise cubic through `(knot_ratios[i], knot_values[i])` with zero
/// second derivative at both ends. Interval `i` is
/// `a + b·t + c·t² + d·t³` with `t = r - knot_ratios[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CurveRepr", into = "CurveRepr")]
pub struct PerformanceCurve {
    knot_ratios: Vec<f64>,
    knot_values: Vec<f64>,
    coefficients: Vec<[f64; 4]>,
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    knot_ratios: Vec<f64>,
    knot_values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    coefficients: Vec<[f64; 4]>,
}

impl TryFrom<CurveRepr> for PerformanceCurve {
    type Error = Error;

    fn try_from(repr: CurveRepr) -> Result<Self> {
        fit_spline(&repr.knot_ratios, &repr.knot_values)
    }
}

impl From<PerformanceCurve> for CurveRepr {
    fn from(c: PerformanceCurve) -> Self {
        CurveRepr {
            knot_ratios: c.knot_ratios,
            knot_values: c.knot_values,
            coefficients: c.coefficients,
        }
    }
}

pub fn fit_spline(knot_ratios: &[f64], knot_values: &[f64]) -> Result<PerformanceCurve> {
    let n = knot_ratios.len();
    if n < 2 {
        return Err(Error::InvalidKnots(format!("need at least 2 knots, got {n}")));
    }
    if knot_values.len() != n {
        return Err(Error::LengthMismatch {
            what: "knot values",
            expected: n,
            actual: knot_values.len(),
        });
    }
    if knot_ratios.iter().chain(knot_values).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("knots"));
    }
    if let Some(w) = knot_ratios.windows(2).find(|w| w[1] <= w[0]) {
        return Err(Error::InvalidKnots(format!(
            "knot ratios must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    if knot_ratios[0] < 0.0 || knot_ratios[n - 1] > 1.0 {
        return Err(Error::InvalidKnots("knot ratios must lie in [0, 1]".into()));
    }

    let x = knot_ratios;
    let y = knot_values;
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();

    // Second derivatives; natural ends fix m[0] = m[n-1] = 0.
    let mut m = vec![0.0; n];
    if n > 2 {
        let k = n - 2;
        let mut diag = vec![0.0; k];
        let mut rhs = vec![0.0; k];
        for j in 0..k {
            let i = j + 1;
            diag[j] = 2.0 * (h[i - 1] + h[i]);
            rhs[j] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
        }
        // Thomas algorithm; the sub/super diagonal entry between rows j-1 and j is h[j].
        for j in 1..k {
            let w = h[j] / diag[j - 1];
            diag[j] -= w * h[j];
            rhs[j] -= w * rhs[j - 1];
        }
        m[k] = rhs[k - 1] / diag[k - 1];
        for j in (0..k - 1).rev() {
            m[j + 1] = (rhs[j] - h[j + 1] * m[j + 2]) / diag[j];
        }
    }

    let coefficients = (0..n - 1)
        .map(|i| {
            let hi = h[i];
            [
                y[i],
                (y[i + 1] - y[i]) / hi - hi * (2.0 * m[i] + m[i + 1]) / 6.0,
                m[i] / 2.0,
                (m[i + 1] - m[i]) / (6.0 * hi),
            ]
        })
        .collect();

    Ok(PerformanceCurve {
        knot_ratios: knot_ratios.to_vec(),
        knot_values: knot_values.to_vec(),
        coefficients,
    })
}

impl PerformanceCurve {
    pub fn knot_ratios(&self) -> &[f64] {
        &self.knot_ratios
    }

    pub fn knot_values(&self) -> &[f64] {
        &self.knot_values
    }

    pub fn coefficients(&self) -> &[[f64; 4]] {
        &self.coefficients
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knot_ratios[0], *self.knot_ratios.last().unwrap())
    }

    fn check_domain(&self, r: f64) -> Result<()> {
        let (lo, hi) = self.domain();
        if r.is_nan() || r < lo || r > hi {
            return Err(Error::Extrapolation { query: r, lo, hi });
        }
        Ok(())
    }

    fn interval(&self, r: f64) -> usize {
        let idx = self.knot_ratios.partition_point(|&k| k <= r);
        idx.saturating_sub(1).min(self.coefficients.len() - 1)
    }

    /// Spline value without clamping.
    pub fn eval_raw(&self, r: f64) -> Result<f64> {
        self.check_domain(r)?;
        let last = self.knot_ratios.len() - 1;
        if r == self.knot_ratios[last] {
            return Ok(self.knot_values[last]);
        }
        let i = self.interval(r);
        let t = r - self.knot_ratios[i];
        let [a, b, c, d] = self.coefficients[i];
        Ok(a + t * (b + t * (c + t * d)))
    }

    /// Spline value clamped to `[0, 1]`.
    pub fn eval(&self, r: f64) -> Result<RetentionValue> {
        self.eval_raw(r).map(RetentionValue::new)
    }

    /// Exact integral of the unclamped spline over `[a, b]`.
    pub fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        if a > b {
            return Err(Error::InvalidKnots(format!(
                "integration bounds reversed: {a} > {b}"
            )));
        }
        self.check_domain(a)?;
        self.check_domain(b)?;
        let antiderivative = |i: usize, t: f64| {
            let [ca, cb, cc, cd] = self.coefficients[i];
            t * (ca + t * (cb / 2.0 + t * (cc / 3.0 + t * cd / 4.0)))
        };
        let (ia, ib) = (self.interval(a), self.interval(b));
        let xa = self.knot_ratios[ia];
        if ia == ib {
            let x = self.knot_ratios[ia];
            return Ok(antiderivative(ia, b - x) - antiderivative(ia, a - x));
        }
        let mut total = antiderivative(ia, self.knot_ratios[ia + 1] - xa) - antiderivative(ia, a - xa);
        for i in ia + 1..ib {
            total += antiderivative(i, self.knot_ratios[i + 1] - self.knot_ratios[i]);
        }
        total += antiderivative(ib, b - self.knot_ratios[ib]);
        Ok(total)
    }
}
