use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Measured sides of one inequality and the implied constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`; `None` when both sides vanish
    pub constant: Option<f64>,
    /// `[nx, ny]`
    pub grid: [usize; 2],
    pub params: BTreeMap<String, f64>,
    /// all data zero; the inequality holds trivially
    pub trivial: bool,
    /// hypothesis check, when the inequality has one
    pub admissible: Option<bool>,
    pub extra: BTreeMap<String, f64>,
}

impl EstimateReport {
    pub fn new(name: &str, lhs: f64, rhs: f64, grid: [usize; 2]) -> Self {
        let trivial = rhs == 0.0 && lhs == 0.0;
        let constant = if trivial {
            None
        } else if rhs == 0.0 {
            Some(f64::INFINITY)
        } else {
            Some(lhs / rhs)
        };
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            constant,
            grid,
            params: BTreeMap::new(),
            trivial,
            admissible: None,
            extra: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, v: f64) -> Self {
        self.params.insert(key.to_string(), v);
        self
    }

    pub fn with_extra(mut self, key: &str, v: f64) -> Self {
        self.extra.insert(key.to_string(), v);
        self
    }
}

/// L2 and max norms of one residual component.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualPair {
    pub l2: f64,
    pub linf: f64,
}

/// Residuals of both equations and both boundary conditions.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualNorms {
    pub momentum: ResidualPair,
    pub continuity: ResidualPair,
    pub slip: ResidualPair,
    pub impermeability: ResidualPair,
}

impl ResidualNorms {
    pub fn max_linf(&self) -> f64 {
        self.momentum
            .linf
            .max(self.continuity.linf)
            .max(self.slip.linf)
            .max(self.impermeability.linf)
    }

    pub fn max_l2(&self) -> f64 {
        self.momentum
            .l2
            .max(self.continuity.l2)
            .max(self.slip.l2)
            .max(self.impermeability.l2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: usize,
    /// `||u^k - u^(k-1)||_{W^1_2}`
    pub step_u: f64,
    /// `||w^k - w^(k-1)||_{L_2}`
    pub step_w: f64,
    /// contraction factor from the combined step
    pub q: Option<f64>,
    pub min_rho: f64,
    /// fractional norms, evaluated every few iterations
    pub norm_u: Option<f64>,
    pub norm_w: Option<f64>,
    pub gmres_iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationStatus {
    /// zero data; returned the zero perturbation without iterating
    Trivial,
    Converged,
    MaxIterations,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationReport {
    pub d0: f64,
    pub status: IterationStatus,
    pub iterations: Vec<IterationRecord>,
    pub residual: ResidualNorms,
    /// `||u + u0||_{W^{1+s}_p} + ||w||_{W^s_p}` at the final iterate
    pub e_lhs: f64,
    /// `(||u|| + ||w||) / D_0`
    pub e_ratio: Option<f64>,
    pub norm_u: f64,
    pub norm_w: f64,
    pub norm_u0: f64,
    pub min_rho: f64,
    /// nodes whose characteristic did not reach the inflow boundary
    pub untraced_nodes: usize,
}

impl IterationReport {
    pub fn max_q(&self) -> Option<f64> {
        self.iterations.iter().filter_map(|r| r.q).reduce(f64::max)
    }
}
