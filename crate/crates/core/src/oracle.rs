//! Slow, independent reference computations used by the tests: naive
//! double-sum seminorms, closed-form transport, and manufactured solutions
//! differentiated exactly with second-order jets.
//!
//! Nothing here calls into the optimized norm or transport code.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Value, gradient and Hessian `(h11, h12, h22)` of a function of `(x1, x2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [f64; 3],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Self { v, g: [0.0; 2], h: [0.0; 3] }
    }

    pub fn var(x: [f64; 2], k: usize) -> Self {
        let mut g = [0.0; 2];
        g[k] = 1.0;
        Self { v: x[k], g, h: [0.0; 3] }
    }

    pub fn vars(x: [f64; 2]) -> [Jet; 2] {
        [Self::var(x, 0), Self::var(x, 1)]
    }

    fn chain(self, f: f64, f1: f64, f2: f64) -> Self {
        let g = self.g;
        Self {
            v: f,
            g: [f1 * g[0], f1 * g[1]],
            h: [
                f1 * self.h[0] + f2 * g[0] * g[0],
                f1 * self.h[1] + f2 * g[0] * g[1],
                f1 * self.h[2] + f2 * g[1] * g[1],
            ],
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn powf(self, a: f64) -> Self {
        let v = self.v;
        self.chain(v.powf(a), a * v.powf(a - 1.0), a * (a - 1.0) * v.powf(a - 2.0))
    }

    pub fn recip(self) -> Self {
        let v = self.v;
        self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0] + self.h[2]
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet {
            v: self.v + o.v,
            g: [self.g[0] + o.g[0], self.g[1] + o.g[1]],
            h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]],
        }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self * -1.0
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            v: a.v * b.v,
            g: [a.v * b.g[0] + b.v * a.g[0], a.v * b.g[1] + b.v * a.g[1]],
            h: [
                a.v * b.h[0] + b.v * a.h[0] + 2.0 * a.g[0] * b.g[0],
                a.v * b.h[1] + b.v * a.h[1] + a.g[0] * b.g[1] + a.g[1] * b.g[0],
                a.v * b.h[2] + b.v * a.h[2] + 2.0 * a.g[1] * b.g[1],
            ],
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, c: f64) -> Jet {
        Jet {
            v: c * self.v,
            g: [c * self.g[0], c * self.g[1]],
            h: [c * self.h[0], c * self.h[1], c * self.h[2]],
        }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

type VecFn = fn([Jet; 2]) -> [Jet; 2];
type ScalarFn = fn([Jet; 2]) -> Jet;

/// Closed-form `(u*, w*)` on the unit square with `u*.n = 0` on the whole boundary.
#[derive(Clone, Copy)]
pub struct ManufacturedCase {
    pub name: &'static str,
    u: VecFn,
    w: ScalarFn,
}

pub const MMS_CASES: [&str; 3] = ["zero", "poly2", "trig1"];

fn zero_u(_: [Jet; 2]) -> [Jet; 2] {
    [Jet::constant(0.0), Jet::constant(0.0)]
}

fn zero_w(_: [Jet; 2]) -> Jet {
    Jet::constant(0.0)
}

fn poly2_u(x: [Jet; 2]) -> [Jet; 2] {
    let [a, b] = x;
    let one = Jet::constant(1.0);
    [
        a * (one - a) * (b + 0.5),
        b * (one - b) * (a * -1.0 + 0.3),
    ]
}

fn poly2_w(x: [Jet; 2]) -> Jet {
    let [a, b] = x;
    a * b + b * b * -0.1 + 0.2
}

fn trig1_u(x: [Jet; 2]) -> [Jet; 2] {
    let pi = std::f64::consts::PI;
    let (a, b) = ((x[0] * pi), (x[1] * pi));
    [a.sin() * b.sin(), b.sin() * a.cos() * 0.5]
}

fn trig1_w(x: [Jet; 2]) -> Jet {
    let pi = std::f64::consts::PI;
    (x[0] * pi).cos() * (x[1] * (2.0 * pi)).sin() * 0.3 + x[0] * 0.1
}

pub fn mms_case(name: &str) -> Result<ManufacturedCase> {
    let (u, w): (VecFn, ScalarFn) = match name {
        "zero" => (zero_u, zero_w),
        "poly2" => (poly2_u, poly2_w),
        "trig1" => (trig1_u, trig1_w),
        _ => return Err(Error::UnknownCase(name.to_string())),
    };
    let name = MMS_CASES.iter().find(|n| **n == name).copied().unwrap_or("zero");
    Ok(ManufacturedCase { name, u, w })
}

impl ManufacturedCase {
    pub fn u_jet(&self, x: [f64; 2]) -> [Jet; 2] {
        (self.u)(Jet::vars(x))
    }

    pub fn w_jet(&self, x: [f64; 2]) -> Jet {
        (self.w)(Jet::vars(x))
    }

    pub fn u(&self, x: [f64; 2]) -> [f64; 2] {
        let u = self.u_jet(x);
        [u[0].v, u[1].v]
    }

    pub fn w(&self, x: [f64; 2]) -> f64 {
        self.w_jet(x).v
    }

    pub fn div_u(&self, x: [f64; 2]) -> f64 {
        let u = self.u_jet(x);
        u[0].g[0] + u[1].g[1]
    }

    /// `d1 u - mu lap u - (nu + mu) grad div u + gamma grad w`.
    pub fn momentum_forcing(&self, x: [f64; 2], mu: f64, nu: f64, gamma: f64) -> [f64; 2] {
        let u = self.u_jet(x);
        let w = self.w_jet(x);
        let gd = [u[0].h[0] + u[1].h[1], u[0].h[1] + u[1].h[2]];
        [
            u[0].g[0] - mu * u[0].laplacian() - (nu + mu) * gd[0] + gamma * w.g[0],
            u[1].g[0] - mu * u[1].laplacian() - (nu + mu) * gd[1] + gamma * w.g[1],
        ]
    }

    /// `div u + d1 w + U.grad w` for a given advecting field value.
    pub fn continuity_forcing(&self, x: [f64; 2], adv: [f64; 2]) -> f64 {
        let w = self.w_jet(x);
        self.div_u(x) + w.g[0] + adv[0] * w.g[0] + adv[1] * w.g[1]
    }

    /// `n . 2 mu D(u) . tau + f u . tau` with `tau = (-n2, n1)`.
    pub fn slip_forcing(&self, x: [f64; 2], n: [f64; 2], mu: f64, f: f64) -> f64 {
        let u = self.u_jet(x);
        let t = [-n[1], n[0]];
        let d = [
            [u[0].g[0], 0.5 * (u[0].g[1] + u[1].g[0])],
            [0.5 * (u[0].g[1] + u[1].g[0]), u[1].g[1]],
        ];
        let mut s = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                s += n[i] * d[i][j] * t[j];
            }
        }
        2.0 * mu * s + f * (u[0].v * t[0] + u[1].v * t[1])
    }

    /// Residuals of the full steady system for velocity `[1, 0] + u*` and
    /// density `1 + w*`, pressure `pi(rho) = (gamma / kappa) rho^kappa`:
    /// `(rho v.grad v - mu lap v - (nu + mu) grad div v + grad pi, div(rho v))`.
    pub fn full_residual(&self, x: [f64; 2], mu: f64, nu: f64, gamma: f64, kappa: f64) -> ([f64; 2], f64) {
        let u = self.u_jet(x);
        let w = self.w_jet(x);
        let rho = 1.0 + w.v;
        let v = [1.0 + u[0].v, u[1].v];
        let dp = gamma * rho.powf(kappa - 1.0);
        let gd = [u[0].h[0] + u[1].h[1], u[0].h[1] + u[1].h[2]];
        let mut m = [0.0; 2];
        for c in 0..2 {
            let adv = v[0] * u[c].g[0] + v[1] * u[c].g[1];
            m[c] = rho * adv - mu * u[c].laplacian() - (nu + mu) * gd[c] + dp * w.g[c];
        }
        let div_u = u[0].g[0] + u[1].g[1];
        let c = rho * div_u + v[0] * w.g[0] + v[1] * w.g[1];
        (m, c)
    }
}

/// Direct double loop over all ordered node pairs with positive weight:
/// `(sum_{x != y} |f(x) - f(y)|^p / (eps + |x - y|^{2+sp}) A_x A_y)^{1/p}`.
pub fn naive_seminorm(grid: &Grid, f: &[f64], s: f64, p: f64, eps: f64) -> f64 {
    let mut total = 0.0;
    for a in 0..grid.len() {
        if grid.weights[a] <= 0.0 {
            continue;
        }
        for b in 0..grid.len() {
            if a == b || grid.weights[b] <= 0.0 {
                continue;
            }
            let dx = grid.x[a][0] - grid.x[b][0];
            let dy = grid.x[a][1] - grid.x[b][1];
            let r = (dx * dx + dy * dy).sqrt();
            if r == 0.0 && eps == 0.0 {
                continue;
            }
            let k = eps + r.powf(2.0 + s * p);
            total += (f[a] - f[b]).abs().powf(p) / k * grid.weights[a] * grid.weights[b];
        }
    }
    total.powf(1.0 / p)
}

/// 1D seminorm `(sum_{i != j} |g_i - g_j|^p / |t_i - t_j|^{1+sp} w_i w_j)^{1/p}`
/// on an open curve parametrised by arclength `t`.
pub fn naive_trace_seminorm(t: &[f64], g: &[f64], w: &[f64], s: f64, p: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..t.len() {
        for j in 0..t.len() {
            if i != j {
                total += (g[i] - g[j]).abs().powf(p) / (t[i] - t[j]).abs().powf(1.0 + s * p) * w[i] * w[j];
            }
        }
    }
    total.powf(1.0 / p)
}

/// Composite Simpson rule with `n` (made even) intervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Transport with `U = (c1, c2 + k x2)` and inflow boundary `x1 = 0`, where
/// the characteristics are known in closed form.
pub struct ExactTransport<'a> {
    pub c1: f64,
    pub c2: f64,
    pub k: f64,
    pub damped: bool,
    pub h: &'a dyn Fn([f64; 2]) -> f64,
    pub w_in: &'a dyn Fn([f64; 2]) -> f64,
}

impl ExactTransport<'_> {
    /// Position a backward time `t` from `x`.
    pub fn back(&self, x: [f64; 2], t: f64) -> [f64; 2] {
        let x1 = x[0] - (1.0 + self.c1) * t;
        let x2 = if self.k == 0.0 {
            x[1] - self.c2 * t
        } else {
            (x[1] + self.c2 / self.k) * (-self.k * t).exp() - self.c2 / self.k
        };
        [x1, x2]
    }

    pub fn travel(&self, x: [f64; 2]) -> f64 {
        x[0] / (1.0 + self.c1)
    }

    pub fn foot(&self, x: [f64; 2]) -> [f64; 2] {
        self.back(x, self.travel(x))
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let t_end = self.travel(x);
        let integrand = |t: f64| {
            let d = if self.damped { (-t).exp() } else { 1.0 };
            d * (self.h)(self.back(x, t))
        };
        let src = simpson(integrand, 0.0, t_end, 2000);
        let m = if self.damped { (-t_end).exp() } else { 1.0 };
        m * (self.w_in)(self.foot(x)) + src
    }
}

/// `int int_{[-1,1]^2} |z1|^p / |z|^{2+sp} (1 - |z1|)(1 - |z2|) dz`, the
/// seminorm^p of `f = x1` on a unit square in the continuum, by polar
/// substitution per quadrant and Simpson in both variables.
pub fn linear_field_square_seminorm_p(s: f64, p: f64) -> f64 {
    // symmetric in the four quadrants; in one quadrant write z = r (cos a, sin a)
    // with r up to the square boundary; the radial integrand is
    // r^{p - 2 - sp + 1} cos^p a (1 - r cos a)(1 - r sin a)
    let alpha = p * (1.0 - s);
    let quadrant = simpson(
        |a: f64| {
            let (sa, ca) = a.sin_cos();
            let rmax = 1.0 / ca.max(sa);
            let c = ca.powf(p);
            // int_0^R r^{alpha-1} (1 - r ca)(1 - r sa) dr in closed form
            let i0 = rmax.powf(alpha) / alpha;
            let i1 = rmax.powf(alpha + 1.0) / (alpha + 1.0);
            let i2 = rmax.powf(alpha + 2.0) / (alpha + 2.0);
            c * (i0 - (ca + sa) * i1 + ca * sa * i2)
        },
        0.0,
        std::f64::consts::FRAC_PI_2,
        4000,
    );
    4.0 * quadrant
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_matches_hand_derivatives() {
        let pi = std::f64::consts::PI;
        let c = mms_case("trig1").unwrap();
        for &x in &[[0.3, 0.7], [0.81, 0.12]] {
            let u = c.u_jet(x);
            let (s1, c1) = (pi * x[0]).sin_cos();
            let (s2, c2) = (pi * x[1]).sin_cos();
            assert!((u[0].g[0] - pi * c1 * s2).abs() < 1e-13);
            assert!((u[0].h[1] - pi * pi * c1 * c2).abs() < 1e-12);
            assert!((u[0].h[2] + pi * pi * s1 * s2).abs() < 1e-12);
            assert!((u[1].g[1] - 0.5 * pi * c2 * c1).abs() < 1e-13);
            assert!((u[1].h[0] + 0.5 * pi * pi * s2 * c1).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_quotient_and_power() {
        let x = [0.4, 1.3];
        let [a, b] = Jet::vars(x);
        let q = a / b;
        assert!((q.g[1] + 0.4 / (1.3 * 1.3)).abs() < 1e-15);
        assert!((q.h[1] + 1.0 / (1.3 * 1.3)).abs() < 1e-15);
        let p = b.powf(3.0);
        assert!((p.h[2] - 6.0 * 1.3).abs() < 1e-13);
        let e = (a * b).exp();
        assert!((e.h[1] - (0.52f64).exp() * (1.0 + 0.52)).abs() < 1e-13);
    }

    #[test]
    fn cases_are_tangential_on_the_square() {
        for name in MMS_CASES {
            let c = mms_case(name).unwrap();
            for k in 0..=10 {
                let t = k as f64 / 10.0;
                assert!(c.u([0.0, t])[0].abs() < 1e-15 && c.u([1.0, t])[0].abs() < 1e-15);
                assert!(c.u([t, 0.0])[1].abs() < 1e-15 && c.u([t, 1.0])[1].abs() < 1e-15);
            }
        }
        assert!(matches!(mms_case("nope"), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn exact_transport_damped_constant_source() {
        let h = |_: [f64; 2]| 1.0;
        let w_in = |_: [f64; 2]| 0.0;
        let e = ExactTransport { c1: 0.0, c2: 0.0, k: 0.0, damped: true, h: &h, w_in: &w_in };
        assert!((e.eval([0.7, 0.2]) - (1.0 - (-0.7f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        assert!((simpson(|t| t * t * t, 0.0, 2.0, 2) - 4.0).abs() < 1e-14);
    }
}
