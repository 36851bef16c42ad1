//! Optimal key distributions and the resulting (leakage, download) tradeoffs.
//!
//! * [`maxl`]: closed-form optimum under maximal leakage.
//! * [`mi`]: the x-sequence recursion and KKT solution under mutual
//!   information, with the convex envelope that adds the single-server
//!   direct pattern.

pub mod maxl;
pub mod mi;

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::leakage::Metric;
use crate::model::{PatternDistribution, SystemParams};

pub use maxl::{maxl_baseline_curve, maxl_curve, maxl_download_bound, maxl_rho_cap, solve_maxl};
pub use mi::{
    kkt_residual, mi_curve, mi_point, mi_tradeoff, p_from_x, solve_mi, solve_x_recursion,
    tangent_x1, x_grid, KktResidual, MiTradeoff, XSequence, GRID_EPS, X_MAX,
};

/// Largest `N^K` for which curve generators cross-check each point by
/// enumeration.
pub const CURVE_CHECK_LIMIT: u64 = 100_000;

/// How the distribution behind a tradeoff point was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Construction {
    /// A single optimized distribution.
    Pure,
    /// The single-server direct pattern alone.
    Direct,
    /// Probabilistic sharing between two envelope vertices; `weight` is the
    /// probability of the lower-leakage vertex.
    Sharing {
        weight: f64,
        lower_rho: f64,
        upper_rho: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub metric: Metric,
    pub construction: Construction,
    pub p_direct: f64,
    pub p_weights: Vec<f64>,
    /// Free parameter of the mutual-information family, when it applies.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub x_last: Option<f64>,
}

/// One achievable (leakage, download cost) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    /// Leakage in bits.
    pub rho: f64,
    /// Normalized download cost.
    pub download: f64,
    pub provenance: Provenance,
    /// Leakage of the distribution recomputed by enumeration, when the key
    /// space was small enough to do so.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub enumerated_rho: Option<f64>,
}

impl TradeoffPoint {
    pub fn distribution(&self, params: &SystemParams) -> Result<PatternDistribution> {
        PatternDistribution::new(
            params,
            self.provenance.p_direct,
            self.provenance.p_weights.clone(),
        )
    }
}

/// Indices of the lower convex envelope of `points` (given as `(rho, D)`),
/// ordered by increasing `rho` and truncated at the lowest `D` so the result
/// is nonincreasing. Among points with equal `rho` only the smallest `D` is
/// kept.
pub fn lower_convex_envelope(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        points[a]
            .0
            .total_cmp(&points[b].0)
            .then(points[a].1.total_cmp(&points[b].1))
    });
    order.dedup_by(|later, earlier| points[*later].0 == points[*earlier].0);

    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut hull: Vec<usize> = Vec::with_capacity(order.len());
    for i in order {
        while hull.len() >= 2
            && cross(
                points[hull[hull.len() - 2]],
                points[hull[hull.len() - 1]],
                points[i],
            ) <= 0.0
        {
            hull.pop();
        }
        hull.push(i);
    }
    if let Some(lowest) = hull
        .iter()
        .enumerate()
        .min_by(|a, b| points[*a.1].1.total_cmp(&points[*b.1].1))
        .map(|(pos, _)| pos)
    {
        hull.truncate(lowest + 1);
    }
    hull
}

/// Formats `v` with 12 significant digits.
pub fn format_sig12(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("valid float literal");
    if (1e-4..1e12).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

/// Writes a curve as CSV with header
/// `rho_bits,download_cost,p_direct,p_0,..,p_{K-1}`.
pub fn write_curve_csv<W: Write>(mut out: W, points: &[TradeoffPoint]) -> io::Result<()> {
    let weights = points.first().map_or(0, |p| p.provenance.p_weights.len());
    write!(out, "rho_bits,download_cost,p_direct")?;
    for w in 0..weights {
        write!(out, ",p_{w}")?;
    }
    writeln!(out)?;
    for p in points {
        write!(
            out,
            "{},{},{}",
            format_sig12(p.rho),
            format_sig12(p.download),
            format_sig12(p.provenance.p_direct)
        )?;
        for w in &p.provenance.p_weights {
            write!(out, ",{}", format_sig12(*w))?;
        }
        writeln!(out)?;
    }
    Ok(())
}
