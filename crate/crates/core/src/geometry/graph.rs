use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which side of the domain a graph bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Inflow,
    Outflow,
}

/// `x1` as a function of `x2` on one piece of a boundary graph.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphFn {
    /// `sum c_k x2^k`
    Poly(Vec<f64>),
    /// `scale * ((x2 - a)(c - x2))^alpha` on `[a, c]`
    Bump { scale: f64, alpha: f64, a: f64, c: f64 },
    /// natural cubic spline through uniformly spaced samples
    Samples(CubicSpline),
}

impl GraphFn {
    /// Value, first and second derivative with respect to `x2`.
    pub fn eval3(&self, x2: f64) -> [f64; 3] {
        match self {
            GraphFn::Poly(c) => {
                let (mut v, mut d1, mut d2) = (0.0, 0.0, 0.0);
                for &ck in c.iter().rev() {
                    d2 = d2 * x2 + 2.0 * d1;
                    d1 = d1 * x2 + v;
                    v = v * x2 + ck;
                }
                [v, d1, d2]
            }
            &GraphFn::Bump { scale, alpha, a, c } => {
                let q = ((x2 - a) * (c - x2)).max(0.0);
                let dq = a + c - 2.0 * x2;
                if q == 0.0 {
                    if alpha == 1.0 {
                        return [0.0, scale * dq, -2.0 * scale];
                    }
                    // slope is unbounded for alpha < 1; report a large finite value
                    let tiny = f64::MIN_POSITIVE.sqrt();
                    let d1 = scale * alpha * tiny.powf(alpha - 1.0) * dq;
                    return [0.0, d1, 0.0];
                }
                let v = scale * q.powf(alpha);
                let d1 = scale * alpha * q.powf(alpha - 1.0) * dq;
                let d2 = scale
                    * alpha
                    * ((alpha - 1.0) * q.powf(alpha - 2.0) * dq * dq - 2.0 * q.powf(alpha - 1.0));
                [v, d1, d2]
            }
            GraphFn::Samples(s) => s.eval3(x2),
        }
    }

    pub fn eval(&self, x2: f64) -> f64 {
        self.eval3(x2)[0]
    }
}

/// One piece `x1 = f(x2)`, `x2 in [lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPiece {
    pub interval: [f64; 2],
    pub f: GraphFn,
}

/// Inflow or outflow part of the boundary, given piecewise as `x1(x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryGraph {
    pub side: Side,
    pub pieces: Vec<GraphPiece>,
}

impl BoundaryGraph {
    pub fn new(side: Side, pieces: Vec<GraphPiece>) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidInput(format!("{side:?} graph has no pieces")));
        }
        for (i, p) in pieces.iter().enumerate() {
            let [a, b] = p.interval;
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidInput(format!(
                    "{side:?} piece {i}: empty or invalid interval [{a}, {b}]"
                )));
            }
        }
        for w in pieces.windows(2) {
            let (end, start) = (w[0].interval[1], w[1].interval[0]);
            let scale = 1.0_f64.max(end.abs());
            if (end - start).abs() > 1e-12 * scale {
                return Err(Error::NonContiguous(format!(
                    "{side:?} piece ends at {end} but next starts at {start}"
                )));
            }
        }
        Ok(Self { side, pieces })
    }

    pub fn lo(&self) -> f64 {
        self.pieces[0].interval[0]
    }

    pub fn hi(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].interval[1]
    }

    /// Junction heights between consecutive pieces.
    pub fn junctions(&self) -> Vec<f64> {
        self.pieces[1..].iter().map(|p| p.interval[0]).collect()
    }

    fn piece_index(&self, x2: f64) -> usize {
        self.pieces
            .iter()
            .position(|p| x2 <= p.interval[1])
            .unwrap_or(self.pieces.len() - 1)
    }

    /// Value and derivatives at `x2`, clamped to the graph's range. At a
    /// junction the lower piece is used.
    pub fn eval3(&self, x2: f64) -> [f64; 3] {
        let x2 = x2.clamp(self.lo(), self.hi());
        self.pieces[self.piece_index(x2)].f.eval3(x2)
    }

    pub fn eval(&self, x2: f64) -> f64 {
        self.eval3(x2)[0]
    }

    pub fn slope(&self, x2: f64) -> f64 {
        self.eval3(x2)[1]
    }

    /// Evaluate piece `i` (unclamped within its own interval).
    pub fn eval_piece(&self, i: usize, x2: f64) -> f64 {
        self.pieces[i].f.eval(x2)
    }

    /// True when consecutive pieces agree at every junction.
    pub fn is_continuous(&self, tol: f64) -> bool {
        self.pieces.windows(2).all(|w| {
            let k = w[1].interval[0];
            (w[0].f.eval(k) - w[1].f.eval(k)).abs() <= tol
        })
    }
}

/// Natural cubic spline on uniformly spaced knots.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    lo: f64,
    step: f64,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl CubicSpline {
    pub fn uniform(lo: f64, hi: f64, values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if n < 2 {
            return Err(Error::InvalidInput("spline needs at least 2 samples".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("spline samples must be finite".into()));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut second = vec![0.0; n];
        if n > 2 {
            // tridiagonal solve for interior second derivatives (h uniform)
            let m = n - 2;
            let mut diag = vec![4.0; m];
            let mut rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (values[i + 1] - 2.0 * values[i] + values[i - 1]) / (step * step))
                .collect();
            for i in 1..m {
                let w = 1.0 / diag[i - 1];
                diag[i] -= w;
                rhs[i] -= w * rhs[i - 1];
            }
            second[m] = rhs[m - 1] / diag[m - 1];
            for i in (0..m - 1).rev() {
                second[i + 1] = (rhs[i] - second[i + 2]) / diag[i];
            }
        }
        Ok(Self {
            lo,
            step,
            values,
            second,
        })
    }

    pub fn eval3(&self, x: f64) -> [f64; 3] {
        let n = self.values.len();
        let h = self.step;
        let t = ((x - self.lo) / h).clamp(0.0, (n - 1) as f64);
        let i = (t.floor() as usize).min(n - 2);
        let xl = self.lo + i as f64 * h;
        let a = (xl + h - x) / h;
        let b = (x - xl) / h;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let d1 = (y1 - y0) / h - (3.0 * a * a - 1.0) * h * m0 / 6.0 + (3.0 * b * b - 1.0) * h * m1 / 6.0;
        let d2 = a * m0 + b * m1;
        [v, d1, d2]
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.eval3(x)[0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poly_derivatives() {
        let f = GraphFn::Poly(vec![1.0, -2.0, 3.0, 0.5]);
        let [v, d1, d2] = f.eval3(2.0);
        assert_eq!(v, 1.0 - 4.0 + 12.0 + 4.0);
        assert_eq!(d1, -2.0 + 12.0 + 6.0);
        assert_eq!(d2, 6.0 + 6.0);
    }

    #[test]
    fn bump_matches_lens_poly() {
        let bump = GraphFn::Bump {
            scale: 1.0,
            alpha: 1.0,
            a: 0.0,
            c: 1.0,
        };
        let poly = GraphFn::Poly(vec![0.0, 1.0, -1.0]);
        for &x in &[0.0, 0.1, 0.37, 0.9, 1.0] {
            let (p, q) = (bump.eval3(x), poly.eval3(x));
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() < 1e-14, "x={x} k={k}");
            }
        }
    }

    #[test]
    fn spline_reproduces_linear_and_interpolates() {
        let s = CubicSpline::uniform(0.0, 1.0, vec![0.0, 0.25, 0.5, 0.75, 1.0]).unwrap();
        let [v, d1, d2] = s.eval3(0.6);
        assert!((v - 0.6).abs() < 1e-14 && (d1 - 1.0).abs() < 1e-13 && d2.abs() < 1e-12);

        let xs: Vec<f64> = (0..41).map(|i| i as f64 / 40.0).collect();
        let s = CubicSpline::uniform(0.0, 1.0, xs.iter().map(|x| x.sin()).collect()).unwrap();
        assert!((s.eval(0.333) - 0.333_f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn rejects_gaps() {
        let p = |a: f64, b: f64| GraphPiece {
            interval: [a, b],
            f: GraphFn::Poly(vec![0.0]),
        };
        assert!(matches!(
            BoundaryGraph::new(Side::Inflow, vec![p(0.0, 0.5), p(0.6, 1.0)]),
            Err(Error::NonContiguous(_))
        ));
        assert!(BoundaryGraph::new(Side::Inflow, vec![p(0.0, 0.5), p(0.5, 1.0)]).is_ok());
    }
}
