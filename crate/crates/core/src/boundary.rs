//! Boundary data `(b, d, f, rho_in)`, boundary trace norms and `D_0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::NormParams;
use crate::geometry::{sample_boundary, BoundarySamples, Domain, Selection};

/// A scalar function of position, as given in scenario files.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum SpaceFn {
    #[default]
    Zero,
    Constant(f64),
    Expr(Expr),
}

impl SpaceFn {
    pub fn parse(src: &str) -> Result<Self> {
        let t = src.trim();
        if let Ok(v) = t.parse::<f64>() {
            return Ok(if v == 0.0 { SpaceFn::Zero } else { SpaceFn::Constant(v) });
        }
        Ok(SpaceFn::Expr(Expr::parse(t)?))
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        match self {
            SpaceFn::Zero => 0.0,
            SpaceFn::Constant(c) => *c,
            SpaceFn::Expr(e) => e.eval(x),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, SpaceFn::Zero)
    }

    pub fn source(&self) -> String {
        match self {
            SpaceFn::Zero => "0".into(),
            SpaceFn::Constant(c) => format!("{c}"),
            SpaceFn::Expr(e) => e.source().to_string(),
        }
    }
}

/// Boundary traces stored as perturbations of the constant-flow data:
/// `b - f tau1`, `d - n1`, `rho_in - 1`, plus the friction `f`. All three
/// perturbations are multiplied by `scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData {
    pub stress: SpaceFn,
    pub normal_velocity: SpaceFn,
    pub density: SpaceFn,
    pub friction: SpaceFn,
    pub scale: f64,
}

impl BoundaryData {
    /// Constant-flow data with friction `f`.
    pub fn background(friction: SpaceFn) -> Self {
        Self {
            stress: SpaceFn::Zero,
            normal_velocity: SpaceFn::Zero,
            density: SpaceFn::Zero,
            friction,
            scale: 1.0,
        }
    }

    /// `b - f tau1`
    pub fn stress_pert(&self, x: [f64; 2]) -> f64 {
        self.scale * self.stress.eval(x)
    }

    /// `d - n1`
    pub fn normal_pert(&self, x: [f64; 2]) -> f64 {
        self.scale * self.normal_velocity.eval(x)
    }

    /// `w_in = rho_in - 1`
    pub fn density_pert(&self, x: [f64; 2]) -> f64 {
        self.scale * self.density.eval(x)
    }

    pub fn friction(&self, x: [f64; 2]) -> f64 {
        self.friction.eval(x)
    }

    /// Full stress trace `b` given the tangent at `x`.
    pub fn b(&self, x: [f64; 2], tau: [f64; 2]) -> f64 {
        self.stress_pert(x) + self.friction(x) * tau[0]
    }

    /// Full normal velocity `d` given the normal at `x`.
    pub fn d(&self, x: [f64; 2], n: [f64; 2]) -> f64 {
        self.normal_pert(x) + n[0]
    }

    pub fn rho_in(&self, x: [f64; 2]) -> f64 {
        1.0 + self.density_pert(x)
    }

    pub fn is_background(&self) -> bool {
        self.scale == 0.0
            || (self.stress.is_zero() && self.normal_velocity.is_zero() && self.density.is_zero())
    }
}

/// `(sum |g|^p w)^{1/p}` over boundary samples.
pub fn trace_lp(values: &[f64], samples: &BoundarySamples, p: f64) -> f64 {
    values
        .iter()
        .zip(&samples.weights)
        .map(|(v, w)| v.abs().powf(p) * w)
        .sum::<f64>()
        .powf(1.0 / p)
}

/// 1D Slobodetskii seminorm with kernel `|sigma - sigma'|^{1 + s p}` in
/// arclength (periodic distance on closed curves).
pub fn trace_seminorm(values: &[f64], samples: &BoundarySamples, s: f64, p: f64) -> Result<f64> {
    if values.len() < 2 || values.len() != samples.len() {
        return Err(Error::InvalidInput("trace needs at least 2 matching samples".into()));
    }
    let e = 1.0 + s * p;
    let n = values.len();
    let mut total = 0.0;
    for i in 0..n {
        let mut row = 0.0;
        for j in (i + 1)..n {
            let dv = (values[i] - values[j]).abs();
            if dv == 0.0 {
                continue;
            }
            let d = samples.distance(i, j);
            if d > 0.0 {
                row += dv.powf(p) / d.powf(e) * samples.weights[j];
            }
        }
        total += row * samples.weights[i];
    }
    Ok((2.0 * total).powf(1.0 / p))
}

/// Arclength derivative of `g` at every sample, by central differences
/// inside the sample's boundary piece.
pub fn trace_derivative(
    domain: &Domain,
    samples: &BoundarySamples,
    g: impl Fn([f64; 2]) -> f64,
) -> Vec<f64> {
    (0..samples.len())
        .map(|k| {
            let piece = samples.pieces[samples.piece[k]];
            let t = samples.param[k];
            let h = 1e-5_f64.min(0.5 * t).min(0.5 * (1.0 - t));
            let (xa, _) = piece.eval(domain, t - h);
            let (xb, _) = piece.eval(domain, t + h);
            let ds = piece.arclength(domain, t - h, t + h);
            (g(xb) - g(xa)) / ds
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct D0Report {
    /// `||b - f tau1||_{W^{s-1/p}_p(Gamma)}`
    pub stress: f64,
    /// `||d - n1||_{W^{1+s-1/p}_p(Gamma)}`
    pub normal_velocity: f64,
    /// `||rho_in - 1||_{W^s_p(Gamma_in)}`
    pub density: f64,
    pub total: f64,
}

/// Trace norm of order `s - 1/p` on the closed boundary.
pub fn trace_norm_fractional(values: &[f64], samples: &BoundarySamples, np: &NormParams) -> Result<f64> {
    let st = trace_order(np)?;
    Ok(trace_lp(values, samples, np.p) + trace_seminorm(values, samples, st, np.p)?)
}

fn trace_order(np: &NormParams) -> Result<f64> {
    let st = np.s - 1.0 / np.p;
    if !(st > 0.0) {
        return Err(Error::InvalidInput(format!(
            "boundary trace order s - 1/p = {st} must be positive"
        )));
    }
    Ok(st)
}

/// Data-smallness functional, traces sampled with `n` midpoints per boundary piece.
pub fn compute_d0(data: &BoundaryData, domain: &Domain, np: &NormParams, n: usize) -> Result<D0Report> {
    let st = trace_order(np)?;
    let all = sample_boundary(domain, Selection::All, n);
    let inflow = sample_boundary(domain, Selection::Inflow, n);
    if inflow.is_empty() {
        return Err(Error::MissingTrace("domain has no inflow boundary".into()));
    }
    let stress: Vec<f64> = all.points.iter().map(|&x| data.stress_pert(x)).collect();
    let stress_norm = trace_lp(&stress, &all, np.p) + trace_seminorm(&stress, &all, st, np.p)?;

    let normal: Vec<f64> = all.points.iter().map(|&x| data.normal_pert(x)).collect();
    let dnormal = trace_derivative(domain, &all, |x| data.normal_pert(x));
    let normal_norm = trace_lp(&normal, &all, np.p) + trace_seminorm(&dnormal, &all, st, np.p)?;

    let dens: Vec<f64> = inflow.points.iter().map(|&x| data.density_pert(x)).collect();
    let dens_norm = trace_lp(&dens, &inflow, np.p) + trace_seminorm(&dens, &inflow, np.s, np.p)?;
    Ok(D0Report {
        stress: stress_norm,
        normal_velocity: normal_norm,
        density: dens_norm,
        total: stress_norm + normal_norm + dens_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_data_has_zero_d0() {
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        let np = NormParams::new(0.5, 5.0, 0.0).unwrap();
        let data = BoundaryData::background(SpaceFn::Constant(1.0));
        let r = compute_d0(&data, &d, &np, 32).unwrap();
        assert_eq!(r.total, 0.0);
    }

    #[test]
    fn d0_is_homogeneous() {
        let d = Domain::lens(1.0, 1.0).unwrap();
        let np = NormParams::new(0.5, 5.0, 0.0).unwrap();
        let mut data = BoundaryData::background(SpaceFn::Constant(1.0));
        data.density = SpaceFn::parse("0.01*sin(2*pi*x2)").unwrap();
        data.stress = SpaceFn::parse("0.01*x2*(1-x2)").unwrap();
        data.normal_velocity = SpaceFn::parse("0.01*x1*x2").unwrap();
        let a = compute_d0(&data, &d, &np, 24).unwrap().total;
        data.scale = 2.0;
        let b = compute_d0(&data, &d, &np, 24).unwrap().total;
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
    }

    #[test]
    fn trace_derivative_of_linear_function() {
        let d = Domain::rectangle(1.0, 1.0).unwrap();
        let s = sample_boundary(&d, Selection::All, 8);
        let dg = trace_derivative(&d, &s, |x| x[1]);
        for k in 0..s.len() {
            // d x2 / d sigma = tau2 for a CCW tangent
            assert!((dg[k] - s.tangent(k)[1]).abs() < 1e-8);
        }
    }
}
