use serde::{Deserialize, Serialize};

use super::domain::Domain;
use super::graph::Side;
use crate::error::{Error, Result};

/// Largest exponent tried by the sampled fit.
pub const N_MAX: u32 = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlatnessMode {
    Analytic,
    Sampled,
}

/// Lower bound `|f(x) - f(y)| >= C |x - y|^N` for `|x|, |y| <= radius`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlatnessCertificate {
    pub exponent: u32,
    /// `1 / exponent`
    pub delta: f64,
    pub constant: f64,
    pub radius: f64,
    pub mode: FlatnessMode,
    /// log-log least-squares slope (sampled mode only)
    pub fitted_slope: Option<f64>,
}

impl FlatnessCertificate {
    fn new(exponent: u32, constant: f64, radius: f64, mode: FlatnessMode, slope: Option<f64>) -> Self {
        Self {
            exponent,
            delta: 1.0 / exponent as f64,
            constant,
            radius,
            mode,
            fitted_slope: slope,
        }
    }
}

/// Certificate from Taylor coefficients `c_0, c_1, ...` at the singularity point.
///
/// `k` is the first nonvanishing index; with remainder bound `M` the estimate
/// `|f(x)| >= (|c_k| - M |x|) |x|^k` gives `C = |c_k| - M l`, and `l` is halved
/// from `radius` until `C > 0`. Without `remainder`, `M` is the max of
/// `|f^(k+1)| / (k+1)!` over `[-radius, radius]`.
pub fn flatness_analytic(
    coeffs: &[f64],
    radius: f64,
    remainder: Option<f64>,
) -> Result<FlatnessCertificate> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    let scale = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(Error::NoCertificate("all Taylor coefficients vanish".into()));
    }
    let tiny = 1e-14 * scale;
    if coeffs[0].abs() > tiny {
        return Err(Error::InvalidInput(
            "expansion must be taken about the singularity point (c_0 = 0)".into(),
        ));
    }
    let k = coeffs
        .iter()
        .position(|c| c.abs() > tiny)
        .expect("some coefficient is nonzero");
    let ck = coeffs[k].abs();
    let m = match remainder {
        Some(m) => m.abs(),
        None => remainder_bound(coeffs, k, radius),
    };
    let mut l = radius;
    for _ in 0..200 {
        let c = ck - m * l;
        if c > 0.0 {
            return Ok(FlatnessCertificate::new(k as u32, c, l, FlatnessMode::Analytic, None));
        }
        l *= 0.5;
    }
    Err(Error::NoCertificate("remainder bound too large".into()))
}

/// `max |f^(k+1)(x)| / (k+1)!` on `[-r, r]`, sampled.
fn remainder_bound(coeffs: &[f64], k: usize, r: f64) -> f64 {
    let order = k + 1;
    if coeffs.len() <= order {
        return 0.0;
    }
    // coefficients of f^(k+1) / (k+1)!: c_j * C(j, k+1)
    let dcoef: Vec<f64> = (order..coeffs.len())
        .map(|j| coeffs[j] * binomial(j, order))
        .collect();
    (0..=400)
        .map(|i| {
            let x = -r + 2.0 * r * i as f64 / 400.0;
            dcoef.iter().rev().fold(0.0, |acc, &c| acc * x + c).abs()
        })
        .fold(0.0, f64::max)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Certificate from samples `(t_i, f_i)` around the singularity point at `t = 0`.
///
/// Only pairs on the same side of `t = 0` are compared (the point `t = 0`
/// itself belongs to both sides). The exponent is the smallest `N <= N_MAX`
/// for which the minimal ratio `|f_i - f_j| / |t_i - t_j|^N` does not decay
/// from one dyadic scale band to the next.
pub fn flatness_sampled(t: &[f64], f: &[f64]) -> Result<FlatnessCertificate> {
    if t.len() != f.len() || t.len() < 4 {
        return Err(Error::InvalidInput("need at least 4 paired samples".into()));
    }
    let radius = t.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if radius == 0.0 {
        return Err(Error::InvalidInput("samples collapse to a point".into()));
    }
    let fscale = f.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let side_constant = |neg: bool| {
        let vals: Vec<f64> = t
            .iter()
            .zip(f)
            .filter(|(ti, _)| if neg { **ti < 0.0 } else { **ti > 0.0 })
            .map(|(_, fi)| *fi)
            .collect();
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        vals.is_empty() || hi - lo <= 1e-14 * fscale.max(f64::MIN_POSITIVE)
    };
    let (neg_const, pos_const) = (side_constant(true), side_constant(false));
    if neg_const && pos_const {
        return Err(Error::NoCertificate("boundary constant on both sides".into()));
    }

    // same-side pairs on the nonconstant sides
    let mut pairs: Vec<(f64, f64, f64)> = Vec::new(); // (|dt|, |df|, max|t|)
    for i in 0..t.len() {
        for j in (i + 1)..t.len() {
            let same = (t[i] <= 0.0 && t[j] <= 0.0 && !neg_const)
                || (t[i] >= 0.0 && t[j] >= 0.0 && !pos_const);
            let dt = (t[i] - t[j]).abs();
            if same && dt > 0.0 {
                pairs.push((dt, (f[i] - f[j]).abs(), t[i].abs().max(t[j].abs())));
            }
        }
    }
    if pairs.is_empty() {
        return Err(Error::InvalidInput("no usable sample pairs".into()));
    }

    let slope = loglog_slope(&pairs);
    let nbands = 40;
    let band_of = |m: f64| -> usize { ((radius / m).log2().floor().max(0.0) as usize).min(nbands - 1) };
    for n in 1..=N_MAX {
        let mut mins = vec![f64::INFINITY; nbands];
        for &(dt, df, m) in &pairs {
            let b = band_of(m);
            mins[b] = mins[b].min(df / dt.powi(n as i32));
        }
        let bands: Vec<f64> = mins.into_iter().filter(|m| m.is_finite()).collect();
        if bands.len() < 3 {
            return Err(Error::InvalidInput("samples span too few scales".into()));
        }
        let stable = bands.iter().all(|&m| m > 0.0)
            && bands.windows(2).all(|w| w[1] >= BAND_DECAY_LIMIT * w[0]);
        if stable {
            let c = pairs
                .iter()
                .map(|&(dt, df, _)| df / dt.powi(n as i32))
                .fold(f64::INFINITY, f64::min);
            return Ok(FlatnessCertificate::new(n, c, radius, FlatnessMode::Sampled, slope));
        }
    }
    Err(Error::NoCertificate(format!(
        "no exponent N <= {N_MAX} satisfies the lower bound on the samples"
    )))
}

/// Minimal-ratio decay per halving of scale that still counts as stable.
/// A wrong exponent by one halves the minimum at every band.
const BAND_DECAY_LIMIT: f64 = 0.75;

fn loglog_slope(pairs: &[(f64, f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|p| p.1 > 0.0)
        .map(|&(dt, df, _)| (dt.ln(), df.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Geometric sample abscissae in `(0, radius]`, 8 per octave over 14 octaves.
pub fn geometric_samples(radius: f64) -> Vec<f64> {
    (0..=112).map(|k| radius * 2f64.powf(-(k as f64) / 8.0)).collect()
}

/// Sampled certificate for `f` on `[-radius, radius]`.
pub fn flatness_of_fn(f: impl Fn(f64) -> f64, radius: f64) -> Result<FlatnessCertificate> {
    let mut t = vec![0.0];
    for x in geometric_samples(radius) {
        t.push(x);
        t.push(-x);
    }
    let f0 = f(0.0);
    let vals: Vec<f64> = t.iter().map(|&x| f(x) - f0).collect();
    flatness_sampled(&t, &vals)
}

/// Certificate at one singularity point, from the two graphs meeting there.
/// Samples are `t = x1 - x1_s`, `f = x2 - x2_s` along the boundary.
pub fn singularity_certificate(domain: &Domain, point: [f64; 2]) -> Result<FlatnessCertificate> {
    let r = domain.sing_radius();
    let at_bottom = (point[1] - domain.base).abs() < (point[1] - domain.top()).abs();
    let mut t = vec![0.0];
    let mut f = vec![0.0];
    for h in geometric_samples(r) {
        let x2 = if at_bottom { point[1] + h } else { point[1] - h };
        for side in [Side::Inflow, Side::Outflow] {
            let g = match side {
                Side::Inflow => &domain.inflow,
                Side::Outflow => &domain.outflow,
            };
            let x1 = g.eval(x2);
            t.push(x1 - point[0]);
            f.push(x2 - point[1]);
        }
    }
    flatness_sampled(&t, &f)
}

/// Certificates at all singularity points and the admissible `delta`
/// (minimum over points; `None` when there are no singularity points).
pub fn domain_certificates(domain: &Domain) -> Result<(Vec<FlatnessCertificate>, Option<f64>)> {
    let certs = domain
        .singularity_points
        .iter()
        .map(|&p| singularity_certificate(domain, p))
        .collect::<Result<Vec<_>>>()?;
    let delta = certs.iter().map(|c| c.delta).reduce(f64::min);
    Ok((certs, delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_examples() {
        let c = flatness_analytic(&[0.0, 0.0, 1.0], 0.5, None).unwrap();
        assert_eq!(c.exponent, 2);
        assert_eq!(c.constant, 1.0);

        let c = flatness_analytic(&[0.0, 0.0, 0.0, 1.0, -1.0], 0.5, Some(1.0)).unwrap();
        assert_eq!(c.exponent, 3);
        assert!((c.constant - (1.0 - c.radius)).abs() < 1e-15);

        // estimated remainder for x^3 - x^4 is 1, so l must drop below 1
        let c = flatness_analytic(&[0.0, 0.0, 0.0, 1.0, -1.0], 2.0, None).unwrap();
        assert!(c.radius < 1.0 && c.constant > 0.0);

        assert!(matches!(
            flatness_analytic(&[0.0, 0.0], 1.0, None),
            Err(Error::NoCertificate(_))
        ));
    }

    #[test]
    fn sampled_monomials() {
        for n in 1..=6 {
            let c = flatness_of_fn(|x| x.powi(n), 0.5).unwrap();
            assert_eq!(c.exponent, n as u32, "x^{n}");
            assert!((c.constant - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sampled_rejects_flat_function() {
        let f = |x: f64| if x == 0.0 { 0.0 } else { (-1.0 / (x * x)).exp() * x };
        assert!(matches!(flatness_of_fn(f, 0.5), Err(Error::NoCertificate(_))));
    }

    #[test]
    fn one_sided_constant_allowed_both_not() {
        let c = flatness_of_fn(|x| if x > 0.0 { x * x } else { 0.0 }, 0.5).unwrap();
        assert_eq!(c.exponent, 2);
        assert!(matches!(flatness_of_fn(|_| 3.0, 0.5), Err(Error::NoCertificate(_))));
    }
}
