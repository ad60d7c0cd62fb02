//! Arclength parametrisation of `Gamma` and its parts.

use serde::{Deserialize, Serialize};

use super::domain::{dist, Domain, FlatPart};
use super::flatness::geometric_samples;
use super::graph::Side;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartTag {
    Inflow,
    Outflow,
    Gamma0,
}

/// One smooth piece of the boundary, oriented counter-clockwise.
#[derive(Debug, Clone, Copy)]
pub enum CurvePiece {
    /// piece `piece` of a graph, traversed from `x2[0]` to `x2[1]`
    Graph { side: Side, piece: usize, x2: [f64; 2] },
    Flat(FlatPart),
}

impl CurvePiece {
    pub fn tag(&self) -> PartTag {
        match self {
            CurvePiece::Graph { side: Side::Inflow, .. } => PartTag::Inflow,
            CurvePiece::Graph { side: Side::Outflow, .. } => PartTag::Outflow,
            CurvePiece::Flat(_) => PartTag::Gamma0,
        }
    }

    /// Point and derivative with respect to the parameter `s in [0, 1]`.
    pub fn eval(&self, domain: &Domain, s: f64) -> ([f64; 2], [f64; 2]) {
        match *self {
            CurvePiece::Graph { side, piece, x2 } => {
                let g = match side {
                    Side::Inflow => &domain.inflow,
                    Side::Outflow => &domain.outflow,
                };
                let y = x2[0] + s * (x2[1] - x2[0]);
                let [v, d1, _] = g.pieces[piece].f.eval3(y);
                let dy = x2[1] - x2[0];
                ([v, y], [d1 * dy, dy])
            }
            CurvePiece::Flat(fp) => {
                let [a, b] = [fp.segment.from, fp.segment.to];
                (
                    [a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])],
                    [b[0] - a[0], b[1] - a[1]],
                )
            }
        }
    }

    pub fn normal(&self, domain: &Domain, s: f64) -> [f64; 2] {
        match *self {
            CurvePiece::Graph { side, piece, x2 } => {
                let g = match side {
                    Side::Inflow => &domain.inflow,
                    Side::Outflow => &domain.outflow,
                };
                let slope = g.pieces[piece].f.eval3(x2[0] + s * (x2[1] - x2[0]))[1];
                let r = (1.0 + slope * slope).sqrt();
                match side {
                    Side::Inflow => [-1.0 / r, slope / r],
                    Side::Outflow => [1.0 / r, -slope / r],
                }
            }
            CurvePiece::Flat(fp) => fp.normal,
        }
    }

    /// Arclength of the parameter range `[s0, s1]` (Gauss-Legendre, 5 points).
    pub fn arclength(&self, domain: &Domain, s0: f64, s1: f64) -> f64 {
        let h = s1 - s0;
        GL5.iter()
            .map(|&(x, w)| {
                let (_, d) = self.eval(domain, s0 + 0.5 * h * (x + 1.0));
                w * 0.5 * h * (d[0] * d[0] + d[1] * d[1]).sqrt()
            })
            .sum()
    }
}

const GL5: [(f64, f64); 5] = [
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (-0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.0, 0.568_888_888_888_888_9),
    (0.538_469_310_105_683, 0.478_628_670_499_366_5),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Counter-clockwise list of boundary pieces, starting at the bottom.
pub fn boundary_pieces(domain: &Domain) -> Vec<CurvePiece> {
    let (lo, hi) = (domain.base, domain.top());
    let tol = 1e-12 * domain.height.max(1.0);
    let flat_at = |x2: f64, x1a: f64, x1b: f64| {
        domain.gamma0.iter().find(|fp| {
            let s = fp.segment;
            (s.from[1] - x2).abs() <= tol
                && dist([s.from[0].min(s.to[0]), 0.0], [x1a.min(x1b), 0.0]) <= 1e-8
                && dist([s.from[0].max(s.to[0]), 0.0], [x1a.max(x1b), 0.0]) <= 1e-8
        })
    };
    let oriented = |fp: &FlatPart, from_x1: f64| {
        let mut fp = *fp;
        if (fp.segment.from[0] - from_x1).abs() > (fp.segment.to[0] - from_x1).abs() {
            std::mem::swap(&mut fp.segment.from, &mut fp.segment.to);
        }
        CurvePiece::Flat(fp)
    };

    let mut out = Vec::new();
    let (il, ol) = (domain.inflow.eval(lo), domain.outflow.eval(lo));
    if let Some(fp) = flat_at(lo, il, ol) {
        out.push(oriented(fp, il));
    }
    let n_out = domain.outflow.pieces.len();
    for (i, p) in domain.outflow.pieces.iter().enumerate() {
        out.push(CurvePiece::Graph {
            side: Side::Outflow,
            piece: i,
            x2: p.interval,
        });
        if i + 1 < n_out {
            let k = p.interval[1];
            let (a, b) = (p.f.eval(k), domain.outflow.pieces[i + 1].f.eval(k));
            if let Some(fp) = flat_at(k, a, b).filter(|_| (a - b).abs() > tol) {
                out.push(oriented(fp, a));
            }
        }
    }
    let (ih, oh) = (domain.inflow.eval(hi), domain.outflow.eval(hi));
    if let Some(fp) = flat_at(hi, ih, oh) {
        out.push(oriented(fp, oh));
    }
    let n_in = domain.inflow.pieces.len();
    for i in (0..n_in).rev() {
        let p = &domain.inflow.pieces[i];
        out.push(CurvePiece::Graph {
            side: Side::Inflow,
            piece: i,
            x2: [p.interval[1], p.interval[0]],
        });
        if i > 0 {
            let k = p.interval[0];
            let (a, b) = (p.f.eval(k), domain.inflow.pieces[i - 1].f.eval(k));
            if let Some(fp) = flat_at(k, a, b).filter(|_| (a - b).abs() > tol) {
                out.push(oriented(fp, a));
            }
        }
    }
    out
}

/// Which part of `Gamma` to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    /// the whole closed curve
    All,
    /// only `Gamma_in`
    Inflow,
}

/// Midpoint samples along a boundary part with arclength positions.
#[derive(Debug, Clone)]
pub struct BoundarySamples {
    pub points: Vec<[f64; 2]>,
    /// arclength coordinate of each sample
    pub sigma: Vec<f64>,
    /// arclength of the sub-interval owned by each sample
    pub weights: Vec<f64>,
    pub normals: Vec<[f64; 2]>,
    pub tags: Vec<PartTag>,
    /// index of the curve piece each sample belongs to
    pub piece: Vec<usize>,
    /// parameter within its piece
    pub param: Vec<f64>,
    /// total length
    pub length: f64,
    /// distances wrap around when the curve is closed
    pub closed: bool,
    pub pieces: Vec<CurvePiece>,
}

impl BoundarySamples {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Arclength distance between samples `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let d = (self.sigma[i] - self.sigma[j]).abs();
        if self.closed {
            d.min(self.length - d)
        } else {
            d
        }
    }

    /// Unit tangent `tau = (-n2, n1)`.
    pub fn tangent(&self, i: usize) -> [f64; 2] {
        let n = self.normals[i];
        [-n[1], n[0]]
    }
}

/// Sample `sel` with `n` midpoints per piece.
pub fn sample_boundary(domain: &Domain, sel: Selection, n: usize) -> BoundarySamples {
    let n = n.max(1);
    let pieces: Vec<CurvePiece> = boundary_pieces(domain)
        .into_iter()
        .filter(|p| sel == Selection::All || p.tag() == PartTag::Inflow)
        .collect();
    let mut out = BoundarySamples {
        points: vec![],
        sigma: vec![],
        weights: vec![],
        normals: vec![],
        tags: vec![],
        piece: vec![],
        param: vec![],
        length: 0.0,
        closed: sel == Selection::All,
        pieces: pieces.clone(),
    };
    let mut sigma0 = 0.0;
    for (pi, p) in pieces.iter().enumerate() {
        for k in 0..n {
            let (a, b) = (k as f64 / n as f64, (k + 1) as f64 / n as f64);
            let m = 0.5 * (a + b);
            let (l1, l2) = (p.arclength(domain, a, m), p.arclength(domain, m, b));
            let (x, _) = p.eval(domain, m);
            out.points.push(x);
            out.sigma.push(sigma0 + l1);
            out.weights.push(l1 + l2);
            out.normals.push(p.normal(domain, m));
            out.tags.push(p.tag());
            out.piece.push(pi);
            out.param.push(m);
            sigma0 += l1 + l2;
        }
    }
    out.length = sigma0;
    out
}

/// Total length of `Gamma` by composite Gauss-Legendre quadrature.
pub fn perimeter(domain: &Domain) -> f64 {
    boundary_pieces(domain)
        .iter()
        .map(|p| {
            (0..400)
                .map(|k| p.arclength(domain, k as f64 / 400.0, (k + 1) as f64 / 400.0))
                .sum::<f64>()
        })
        .sum()
}

/// Bound on `(d - n1) x1'` near the singularity points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Assumption1Report {
    pub max_inflow: f64,
    pub max_outflow: f64,
    pub max: f64,
    pub bound: f64,
    pub pass: bool,
    pub samples: usize,
}

/// Points `(side, x2)` on both graphs within `sing_radius` of a singularity point.
pub fn singularity_neighbourhood(domain: &Domain) -> Vec<(Side, [f64; 2])> {
    let r = domain.sing_radius();
    let mut offsets = geometric_samples(r);
    offsets.extend((1..200).map(|i| r * i as f64 / 200.0));
    let mut out = Vec::new();
    for &p in &domain.singularity_points {
        let up = (p[1] - domain.base).abs() < (p[1] - domain.top()).abs();
        for &h in &offsets {
            let x2 = if up { p[1] + h } else { p[1] - h };
            for side in [Side::Inflow, Side::Outflow] {
                let g = match side {
                    Side::Inflow => &domain.inflow,
                    Side::Outflow => &domain.outflow,
                };
                let x = [g.eval(x2), x2];
                if dist(x, p) <= r && dist(x, p) > domain.eps_corner() {
                    out.push((side, x));
                }
            }
        }
    }
    out
}

/// Evaluate `|(d - n1) x1'|` on both graphs around every singularity point.
pub fn check_assumption1(domain: &Domain, d: impl Fn([f64; 2]) -> f64, bound: f64) -> Assumption1Report {
    let pts = singularity_neighbourhood(domain);
    let (mut mi, mut mo) = (0.0_f64, 0.0_f64);
    for &(side, x) in &pts {
        let n1 = domain.graph_normal(side, x[1])[0];
        match side {
            Side::Inflow => mi = mi.max(((d(x) - n1) * domain.inflow.slope(x[1])).abs()),
            Side::Outflow => mo = mo.max(((d(x) - n1) * domain.outflow.slope(x[1])).abs()),
        }
    }
    let max = mi.max(mo);
    Assumption1Report {
        max_inflow: mi,
        max_outflow: mo,
        max,
        bound,
        pass: max <= bound,
        samples: pts.len(),
    }
}
