use serde::{Deserialize, Serialize};

use super::graph::{BoundaryGraph, CubicSpline, GraphFn, GraphPiece, Side};
use crate::error::{Error, Result};

/// Straight piece of `Gamma_0`. A degenerate segment (`from == to`) is a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub from: [f64; 2],
    pub to: [f64; 2],
}

impl Segment {
    pub fn is_point(&self) -> bool {
        self.from == self.to
    }

    pub fn length(&self) -> f64 {
        dist(self.from, self.to)
    }

    fn same_as(&self, other: &Segment, tol: f64) -> bool {
        (dist(self.from, other.from) <= tol && dist(self.to, other.to) <= tol)
            || (dist(self.from, other.to) <= tol && dist(self.to, other.from) <= tol)
    }
}

pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

/// Horizontal piece of `Gamma_0` together with its outward normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatPart {
    pub segment: Segment,
    pub normal: [f64; 2],
}

/// Tunables shared by the pointwise boundary operations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryOptions {
    /// Radius of the singularity neighbourhoods, as a fraction of the height `b`.
    pub sing_radius_frac: f64,
    /// Arc excluded around corners, as a fraction of `b`.
    pub eps_corner_frac: f64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        Self {
            sing_radius_frac: 0.05,
            eps_corner_frac: 1e-9,
        }
    }
}

/// Bounded 2D domain whose inflow and outflow parts are graphs `x1(x2)`.
#[derive(Debug, Clone)]
pub struct Domain {
    pub inflow: BoundaryGraph,
    pub outflow: BoundaryGraph,
    pub gamma0: Vec<FlatPart>,
    /// Points where inflow and outflow graphs meet; characteristics are
    /// tangent to the boundary there.
    pub singularity_points: Vec<[f64; 2]>,
    /// Junctions of the graphs with `Gamma_0` segments.
    pub corners: Vec<[f64; 2]>,
    /// Lowest `x2` of the domain.
    pub base: f64,
    /// Height `b`.
    pub height: f64,
    /// `[x1_min, x2_min, x1_max, x2_max]`
    pub bbox: [f64; 4],
    pub options: GeometryOptions,
}

/// Part of `Gamma` a boundary point belongs to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryPart {
    Inflow,
    Outflow,
    Flat(usize),
}

impl Domain {
    pub fn sing_radius(&self) -> f64 {
        self.options.sing_radius_frac * self.height
    }

    pub fn eps_corner(&self) -> f64 {
        self.options.eps_corner_frac * self.height
    }

    pub fn top(&self) -> f64 {
        self.base + self.height
    }

    /// `a = min x1_in(x2)`; exposed for completeness.
    pub fn min_inflow_x1(&self) -> f64 {
        (0..=2000)
            .map(|i| self.inflow.eval(self.base + self.height * i as f64 / 2000.0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn width_at(&self, x2: f64) -> f64 {
        self.outflow.eval(x2) - self.inflow.eval(x2)
    }

    pub fn diameter(&self) -> f64 {
        let [a, b, c, d] = self.bbox;
        ((c - a).powi(2) + (d - b).powi(2)).sqrt()
    }

    pub fn contains(&self, x: [f64; 2], tol: f64) -> bool {
        x[1] >= self.base - tol
            && x[1] <= self.top() + tol
            && x[0] >= self.inflow.eval(x[1]) - tol
            && x[0] <= self.outflow.eval(x[1]) + tol
    }

    /// Corners and singularity points, where normals are undefined.
    pub fn special_points(&self) -> impl Iterator<Item = &[f64; 2]> {
        self.corners.iter().chain(self.singularity_points.iter())
    }

    pub fn near_special_point(&self, x: [f64; 2], radius: f64) -> bool {
        self.special_points().any(|&p| dist(p, x) <= radius)
    }

    pub fn near_singularity(&self, x: [f64; 2], radius: f64) -> bool {
        self.singularity_points.iter().any(|&p| dist(p, x) <= radius)
    }

    /// Identify the part of `Gamma` containing `x`.
    pub fn locate(&self, x: [f64; 2], tol: f64) -> Option<BoundaryPart> {
        for (k, fp) in self.gamma0.iter().enumerate() {
            let s = fp.segment;
            if s.is_point() {
                continue;
            }
            let (lo, hi) = (s.from[0].min(s.to[0]), s.from[0].max(s.to[0]));
            if (x[1] - s.from[1]).abs() <= tol && x[0] >= lo - tol && x[0] <= hi + tol {
                return Some(BoundaryPart::Flat(k));
            }
        }
        if x[1] < self.base - tol || x[1] > self.top() + tol {
            return None;
        }
        if (x[0] - self.inflow.eval(x[1])).abs() <= tol {
            return Some(BoundaryPart::Inflow);
        }
        if (x[0] - self.outflow.eval(x[1])).abs() <= tol {
            return Some(BoundaryPart::Outflow);
        }
        None
    }

    /// Outward unit normal on the inflow/outflow graph at height `x2`.
    pub fn graph_normal(&self, side: Side, x2: f64) -> [f64; 2] {
        match side {
            Side::Inflow => {
                let s = self.inflow.slope(x2);
                let r = (1.0 + s * s).sqrt();
                [-1.0 / r, s / r]
            }
            Side::Outflow => {
                let s = self.outflow.slope(x2);
                let r = (1.0 + s * s).sqrt();
                [1.0 / r, -s / r]
            }
        }
    }

    /// Outward unit normal at a boundary point away from corners.
    pub fn normal_at(&self, x: [f64; 2]) -> Result<[f64; 2]> {
        if self.near_special_point(x, self.eps_corner()) {
            return Err(Error::CornerPoint { x1: x[0], x2: x[1] });
        }
        let tol = 1e-9 * self.height.max(1.0);
        match self.locate(x, tol) {
            Some(BoundaryPart::Inflow) => Ok(self.graph_normal(Side::Inflow, x[1])),
            Some(BoundaryPart::Outflow) => Ok(self.graph_normal(Side::Outflow, x[1])),
            Some(BoundaryPart::Flat(k)) => Ok(self.gamma0[k].normal),
            None => Err(Error::NotOnBoundary { x1: x[0], x2: x[1] }),
        }
    }

    /// `(dS/dx2, n1 dS/dx2, n2 dS/dx2)` on the inflow or outflow graph.
    pub fn boundary_measure_factors(&self, x: [f64; 2]) -> Result<[f64; 3]> {
        if self.near_special_point(x, self.eps_corner()) {
            return Err(Error::CornerPoint { x1: x[0], x2: x[1] });
        }
        let tol = 1e-9 * self.height.max(1.0);
        match self.locate(x, tol) {
            Some(BoundaryPart::Inflow) => {
                let s = self.inflow.slope(x[1]);
                Ok([(1.0 + s * s).sqrt(), -1.0, s])
            }
            Some(BoundaryPart::Outflow) => {
                let s = self.outflow.slope(x[1]);
                Ok([(1.0 + s * s).sqrt(), 1.0, -s])
            }
            _ => Err(Error::NotOnBoundary { x1: x[0], x2: x[1] }),
        }
    }

    /// Unit-square-like domain `[0, w] x [0, h]`.
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        build_domain(&DomainSpec {
            pieces_in: vec![PieceSpec::poly([0.0, height], vec![0.0])],
            pieces_out: vec![PieceSpec::poly([0.0, height], vec![width])],
            gamma0: vec![
                Segment {
                    from: [0.0, 0.0],
                    to: [width, 0.0],
                },
                Segment {
                    from: [0.0, height],
                    to: [width, height],
                },
            ],
            options: None,
        })
    }

    /// Lens `-x2(b - x2) <= x1 <= x2(b - x2)` scaled by `amplitude`.
    pub fn lens(height: f64, amplitude: f64) -> Result<Self> {
        let (b, a) = (height, amplitude);
        build_domain(&DomainSpec {
            pieces_in: vec![PieceSpec::poly([0.0, b], vec![0.0, -a * b, a])],
            pieces_out: vec![PieceSpec::poly([0.0, b], vec![0.0, a * b, -a])],
            gamma0: vec![],
            options: None,
        })
    }

    /// Disk-like domain `|x1| <= scale * sqrt(x2 (b - x2))`; tangential tips.
    pub fn disk(height: f64, scale: f64) -> Result<Self> {
        let piece = |s: f64| PieceSpec {
            interval: [0.0, height],
            kind: PieceKind::Bump,
            data: vec![s, 0.5],
        };
        build_domain(&DomainSpec {
            pieces_in: vec![piece(-scale)],
            pieces_out: vec![piece(scale)],
            gamma0: vec![],
            options: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    /// `data` = polynomial coefficients in `x2`, lowest order first
    Poly,
    /// `data` = `[scale, alpha]`, `x1 = scale ((x2-a)(b-x2))^alpha`
    Bump,
    /// `data` = `x1` samples at uniformly spaced `x2` across the interval
    Samples,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PieceSpec {
    pub interval: [f64; 2],
    pub kind: PieceKind,
    pub data: Vec<f64>,
}

impl PieceSpec {
    pub fn poly(interval: [f64; 2], coeffs: Vec<f64>) -> Self {
        Self {
            interval,
            kind: PieceKind::Poly,
            data: coeffs,
        }
    }

    fn to_piece(&self) -> Result<GraphPiece> {
        let [a, c] = self.interval;
        let f = match self.kind {
            PieceKind::Poly => {
                if self.data.is_empty() {
                    return Err(Error::InvalidInput("poly piece needs coefficients".into()));
                }
                GraphFn::Poly(self.data.clone())
            }
            PieceKind::Bump => {
                let [scale, alpha] = self.data[..] else {
                    return Err(Error::InvalidInput(
                        "bump piece needs data = [scale, alpha]".into(),
                    ));
                };
                if !(alpha > 0.0) {
                    return Err(Error::InvalidInput("bump exponent must be positive".into()));
                }
                GraphFn::Bump { scale, alpha, a, c }
            }
            PieceKind::Samples => GraphFn::Samples(CubicSpline::uniform(a, c, self.data.clone())?),
        };
        Ok(GraphPiece {
            interval: self.interval,
            f,
        })
    }
}

/// On-disk domain description (TOML).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub pieces_in: Vec<PieceSpec>,
    pub pieces_out: Vec<PieceSpec>,
    #[serde(default)]
    pub gamma0: Vec<Segment>,
    #[serde(default)]
    pub options: Option<GeometryOptions>,
}

impl DomainSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(format!("domain spec: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("domain spec serializes")
    }
}

/// Validate a structured description and build the domain.
pub fn build_domain(spec: &DomainSpec) -> Result<Domain> {
    let pieces = |v: &[PieceSpec]| v.iter().map(PieceSpec::to_piece).collect::<Result<Vec<_>>>();
    let inflow = BoundaryGraph::new(Side::Inflow, pieces(&spec.pieces_in)?)?;
    let outflow = BoundaryGraph::new(Side::Outflow, pieces(&spec.pieces_out)?)?;
    let options = spec.options.unwrap_or_default();

    let (lo, hi) = (inflow.lo(), inflow.hi());
    let height = hi - lo;
    let tol = 1e-10 * height.max(1.0);
    if (outflow.lo() - lo).abs() > tol || (outflow.hi() - hi).abs() > tol {
        return Err(Error::NonContiguous(format!(
            "inflow spans [{lo}, {hi}] but outflow spans [{}, {}]",
            outflow.lo(),
            outflow.hi()
        )));
    }

    // junction ordering: the lower piece ends at or right of where the upper one starts
    for graph in [&inflow, &outflow] {
        for (i, w) in graph.pieces.windows(2).enumerate() {
            let k = w[1].interval[0];
            let (lower, upper) = (w[0].f.eval(k), w[1].f.eval(k));
            if lower < upper - tol {
                return Err(Error::JunctionOrdering {
                    at: k,
                    detail: format!(
                        "{:?} piece {} ends at x1 = {lower} left of piece {} start x1 = {upper}",
                        graph.side,
                        i,
                        i + 1
                    ),
                });
            }
        }
    }

    // strict separation in the interior, touching allowed only at the ends
    let mut probes: Vec<f64> = (1..4000).map(|i| lo + height * i as f64 / 4000.0).collect();
    for graph in [&inflow, &outflow] {
        for (i, p) in graph.pieces.iter().enumerate() {
            for &t in &[p.interval[0], p.interval[1]] {
                if t > lo + tol && t < hi - tol {
                    probes.push(t);
                    let _ = i;
                }
            }
        }
    }
    for &x2 in &probes {
        for (l, r) in [
            (inflow.eval(x2), outflow.eval(x2)),
            (eval_upper(&inflow, x2), eval_upper(&outflow, x2)),
        ] {
            if !(l.is_finite() && r.is_finite()) || r - l <= tol {
                return Err(Error::SelfIntersecting { at: x2 });
            }
        }
    }

    let mut gamma0 = Vec::new();
    let mut corners = Vec::new();
    let mut singularity_points = Vec::new();
    for (x2, normal) in [(lo, [0.0, -1.0]), (hi, [0.0, 1.0])] {
        let (l, r) = (inflow.eval(x2), outflow.eval(x2));
        if r - l <= tol {
            if r < l - tol {
                return Err(Error::SelfIntersecting { at: x2 });
            }
            singularity_points.push([0.5 * (l + r), x2]);
        } else {
            gamma0.push(FlatPart {
                segment: Segment {
                    from: [l, x2],
                    to: [r, x2],
                },
                normal,
            });
            corners.push([l, x2]);
            corners.push([r, x2]);
        }
    }
    for (graph, normal) in [(&inflow, [0.0, -1.0]), (&outflow, [0.0, 1.0])] {
        for (i, w) in graph.pieces.windows(2).enumerate() {
            let k = w[1].interval[0];
            let (a, b) = (w[1].f.eval(k), w[0].f.eval(k));
            if b - a > tol {
                gamma0.push(FlatPart {
                    segment: Segment {
                        from: [a, k],
                        to: [b, k],
                    },
                    normal,
                });
                corners.push([a, k]);
                corners.push([b, k]);
            }
            let _ = i;
        }
    }

    // the listed Gamma_0 must close the curve: every derived segment present, nothing extra
    let ctol = 1e-8 * height.max(1.0);
    for fp in &gamma0 {
        if !spec.gamma0.iter().any(|s| s.same_as(&fp.segment, ctol)) {
            return Err(Error::NotClosed(format!(
                "missing gamma0 segment {:?} -> {:?}",
                fp.segment.from, fp.segment.to
            )));
        }
    }
    for s in &spec.gamma0 {
        let known = gamma0.iter().any(|fp| fp.segment.same_as(s, ctol))
            || (s.is_point() && singularity_points.iter().any(|&p| dist(p, s.from) <= ctol));
        if !known {
            return Err(Error::NotClosed(format!(
                "gamma0 entry {:?} -> {:?} does not match a junction",
                s.from, s.to
            )));
        }
    }

    let mut bbox = [f64::INFINITY, lo, f64::NEG_INFINITY, hi];
    for &x2 in &probes {
        bbox[0] = bbox[0].min(inflow.eval(x2)).min(eval_upper(&inflow, x2));
        bbox[2] = bbox[2].max(outflow.eval(x2)).max(eval_upper(&outflow, x2));
    }
    for x2 in [lo, hi] {
        bbox[0] = bbox[0].min(inflow.eval(x2));
        bbox[2] = bbox[2].max(outflow.eval(x2));
    }

    Ok(Domain {
        inflow,
        outflow,
        gamma0,
        singularity_points,
        corners,
        base: lo,
        height,
        bbox,
        options,
    })
}

/// Value of the piece starting at `x2` (upper side of a junction).
fn eval_upper(g: &BoundaryGraph, x2: f64) -> f64 {
    let i = g
        .pieces
        .iter()
        .position(|p| x2 < p.interval[1])
        .unwrap_or(g.pieces.len() - 1);
    g.eval_piece(i, x2.clamp(g.lo(), g.hi()))
}
