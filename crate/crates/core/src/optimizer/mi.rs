//! Optimal TSC distributions under mutual-information leakage and the convex
//! envelope obtained by sharing with the single-server direct pattern.
//!
//! The distribution is parametrized by the ratios `x_w = p_{w-1} / p_w`.
//! Fixing `x_{K-1} >= 1` determines the rest through a backward recursion
//! that makes the Lagrangian stationary with multipliers `lambda_w = 0` and
//! `nu = y_{K-1} / N`, where `y_w = ln((w x_w + K - w) / K)`.
//!
//! The recursion is evaluated in natural logarithms; leakage values leave this
//! module in bits.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::leakage::{analytic_mi, Metric};
use crate::model::{binomial, PatternDistribution, SystemParams};

use super::{lower_convex_envelope, Construction, Provenance, TradeoffPoint};

/// Stand-in for `x_{K-1} = infinity`.
pub const X_MAX: f64 = 1e9;

/// Offset of the logarithmic grid, so that `x_{K-1} = 1` is a grid point.
pub const GRID_EPS: f64 = 1e-6;

const X_FLOOR_TOL: f64 = 1e-9;

/// `(x_1, .., x_{K-1})`, all `>= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XSequence(Vec<f64>);

impl XSequence {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `x_w` for `w` in `1..K`.
    pub fn get(&self, w: usize) -> f64 {
        self.0[w - 1]
    }

    pub fn last(&self) -> f64 {
        *self.0.last().expect("K >= 2")
    }

    /// Ratios of consecutive weights of a distribution, `p_{w-1} / p_w`.
    pub fn from_weights(p_weights: &[f64]) -> Self {
        Self(p_weights.windows(2).map(|w| w[0] / w[1]).collect())
    }
}

/// Runs the backward recursion from `x_{K-1} = x_last`.
///
/// Step `i` (for `i = 2..K`) solves
/// `ln(((K-i) x_{K-i} + i)/K) = sum_{j<i} (1-N)^j c - sum_{1<=j<i} (1-N)^j ln x_{K-i+j}`
/// with `c = ln(((K-1) x_{K-1} + 1)/K)`, which is linear in `x_{K-i}`.
pub fn solve_x_recursion(params: &SystemParams, x_last: f64) -> Result<XSequence> {
    if !(1.0..=X_MAX).contains(&x_last) {
        return Err(Error::OutOfRange(format!(
            "x_(K-1) = {x_last} outside [1, {X_MAX}]"
        )));
    }
    let kk = params.messages();
    let k = kk as f64;
    let sign = 1.0 - params.servers() as f64;
    // x[w] holds x_w; x[0] is unused.
    let mut x = vec![0.0; kk];
    x[kk - 1] = x_last;
    let c = (((k - 1.0) * x_last + 1.0) / k).ln();
    for i in 2..kk {
        let mut rhs = 0.0;
        let mut power = 1.0;
        for j in 0..i {
            rhs += power * c;
            if j >= 1 {
                rhs -= power * x[kk - i + j].ln();
            }
            power *= sign;
        }
        let value = (k * rhs.exp() - i as f64) / (k - i as f64);
        if !value.is_finite() || value < 1.0 - X_FLOOR_TOL {
            return Err(Error::OutOfRange(format!(
                "x_{} = {value} < 1 for x_(K-1) = {x_last}",
                kk - i
            )));
        }
        x[kk - i] = value;
    }
    x.remove(0);
    Ok(XSequence(x))
}

/// `p_0 = (N + N sum_w C(K-1,w)(N-1)^w prod_{j<=w} 1/x_j)^-1`,
/// `p_w = p_0 prod_{j<=w} 1/x_j`, with no direct pattern.
pub fn p_from_x(params: &SystemParams, x: &XSequence) -> PatternDistribution {
    let n = params.servers() as f64;
    let mut ratios = Vec::with_capacity(params.messages());
    ratios.push(1.0);
    for xj in x.as_slice() {
        let prev = *ratios.last().expect("nonempty");
        ratios.push(prev / xj);
    }
    let denom = n
        + (1..params.messages())
            .map(|w| n * binomial(params.messages() - 1, w) * (n - 1.0).powi(w as i32) * ratios[w])
            .sum::<f64>();
    let p0 = 1.0 / denom;
    let p_weights = ratios.iter().map(|r| p0 * r).collect();
    PatternDistribution::new(params, 0.0, p_weights)
        .expect("x-parametrized weights are normalized by construction")
}

/// Stationarity check of the Lagrangian at a TSC distribution, with dual
/// variables assigned from an x-sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KktResidual {
    /// `max_w |dL/dp_w|` over `w = 1..K`.
    pub stationarity: f64,
    /// `nu = y_{K-1} / N`, from the x-sequence.
    pub dual_nu: f64,
    /// `lambda_w`, identically zero.
    pub dual_lambda: Vec<f64>,
    /// `y_w` for `w = 1..K`, evaluated at the distribution.
    pub y: Vec<f64>,
    /// `dL/dp_w` for `w = 1..K`.
    pub partials: Vec<f64>,
}

/// Evaluates the explicit partial derivatives of the Lagrangian at the weights
/// `p_weights`, with `nu` taken from `x`. The ratios `x_w` inside the partials
/// are recomputed from the weights, so any perturbation away from
/// `p_from_x(x)` shows up.
pub fn kkt_residual(params: &SystemParams, x: &XSequence, p_weights: &[f64]) -> KktResidual {
    let kk = params.messages();
    let (k, n) = (kk as f64, params.servers() as f64);
    let y_of = |w: usize, xw: f64| ((w as f64 * xw + k - w as f64) / k).ln();

    assert_eq!(p_weights.len(), kk, "expected K weight probabilities");
    let at_p = XSequence::from_weights(p_weights);
    let y: Vec<f64> = (1..kk).map(|w| y_of(w, at_p.get(w))).collect();
    let nu = y_of(kk - 1, x.last()) / n;
    let lambda = vec![0.0; kk - 1];

    let partials: Vec<f64> = (1..kk)
        .map(|w| {
            let coeff = binomial(kk - 1, w) * (n - 1.0).powi(w as i32);
            let inner = if w + 1 < kk {
                -y[w - 1] - (n - 1.0) * y[w] + (n - 1.0) * at_p.get(w + 1).ln() + n * nu
            } else {
                -y[w - 1] + n * nu
            };
            coeff * inner - lambda[w - 1]
        })
        .collect();
    KktResidual {
        stationarity: partials.iter().fold(0.0, |m, d| f64::max(m, d.abs())),
        dual_nu: nu,
        dual_lambda: lambda,
        y,
        partials,
    }
}

/// `(rho, D)` of the optimal TSC distribution for `x_{K-1} = x_last`:
/// `rho` is the closed-form mutual information and `D = N/(N-1) (1 - p_0)`.
pub fn mi_point(params: &SystemParams, x_last: f64) -> Result<TradeoffPoint> {
    let x = solve_x_recursion(params, x_last)?;
    let dist = p_from_x(params, &x);
    let n = params.servers() as f64;
    Ok(TradeoffPoint {
        rho: analytic_mi(params, dist.p_weights()),
        download: n / (n - 1.0) * (1.0 - dist.p_weights()[0]),
        enumerated_rho: None,
        provenance: Provenance {
            metric: Metric::Mi,
            construction: Construction::Pure,
            p_direct: 0.0,
            p_weights: dist.p_weights().to_vec(),
            x_last: Some(x_last),
        },
    })
}

/// `((log2 K)/N, 1)`, reached by the single-server direct pattern alone.
pub fn mi_extreme_point(params: &SystemParams) -> TradeoffPoint {
    let dist = PatternDistribution::pure_direct(params);
    TradeoffPoint {
        rho: (params.messages() as f64).log2() / params.servers() as f64,
        download: 1.0,
        enumerated_rho: None,
        provenance: Provenance {
            metric: Metric::Mi,
            construction: Construction::Direct,
            p_direct: dist.p_direct(),
            p_weights: dist.p_weights().to_vec(),
            x_last: None,
        },
    }
}

/// Closed-form `x_1` at which the envelope leaves the pure TSC curve,
/// `(K-1)/(K^((N-2)/(N-1)) - 1)`. `None` for `N = 2`, where the pure curve
/// runs into the direct extreme point.
pub fn tangent_x1(params: &SystemParams) -> Option<f64> {
    let (n, k) = (params.servers() as f64, params.messages() as f64);
    let denom = k.powf((n - 2.0) / (n - 1.0)) - 1.0;
    (denom > 0.0).then(|| (k - 1.0) / denom)
}

/// `grid_size` values of `x_{K-1}` on `[1, X_MAX]`, logarithmically spaced in
/// `x - 1 + GRID_EPS`. The endpoints are exact.
pub fn x_grid(grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be >= 2, got {grid_size}"
        )));
    }
    let lo = GRID_EPS.ln();
    let hi = (X_MAX - 1.0 + GRID_EPS).ln();
    let last = grid_size - 1;
    Ok((0..grid_size)
        .map(|i| match i {
            0 => 1.0,
            i if i == last => X_MAX,
            i => 1.0 + (lo + (hi - lo) * i as f64 / last as f64).exp() - GRID_EPS,
        })
        .collect())
}

/// The swept TSC-only curve together with its convex envelope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiTradeoff {
    /// One pure point per grid value of `x_{K-1}`, without the direct pattern.
    pub swept: Vec<TradeoffPoint>,
    /// Envelope evaluated at every swept leakage below the extreme point,
    /// followed by the extreme point itself.
    pub envelope: Vec<TradeoffPoint>,
    /// Grid value of `x_{K-1}` of the last swept point on the envelope, if
    /// the envelope leaves the swept curve before the extreme point.
    pub tangent_x_last: Option<f64>,
}

pub fn mi_tradeoff(params: &SystemParams, grid_size: usize) -> Result<MiTradeoff> {
    mi_tradeoff_with(params, grid_size, Exec::default())
}

pub fn mi_tradeoff_with(params: &SystemParams, grid_size: usize, exec: Exec) -> Result<MiTradeoff> {
    let grid = x_grid(grid_size)?;
    let swept = exec
        .map(&grid, |&x| mi_point(params, x))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let extreme = mi_extreme_point(params);

    // Candidates: swept points left of the extreme point, then the extreme point.
    let mut candidates: Vec<&TradeoffPoint> =
        swept.iter().filter(|p| p.rho < extreme.rho).collect();
    candidates.sort_by(|a, b| {
        a.rho
            .total_cmp(&b.rho)
            .then(a.download.total_cmp(&b.download))
    });
    candidates.dedup_by(|later, earlier| later.rho == earlier.rho);
    candidates.push(&extreme);

    let coords: Vec<(f64, f64)> = candidates.iter().map(|p| (p.rho, p.download)).collect();
    let hull = lower_convex_envelope(&coords);
    let on_hull = |i: usize| hull.binary_search(&i).is_ok();

    let mut envelope = Vec::with_capacity(candidates.len());
    for (i, point) in candidates.iter().enumerate() {
        if on_hull(i) {
            envelope.push((*point).clone());
            continue;
        }
        let upper = hull.partition_point(|&h| h < i);
        let (a, b) = (candidates[hull[upper - 1]], candidates[hull[upper]]);
        let weight = (b.rho - point.rho) / (b.rho - a.rho);
        let mixed = mix_points(params, a, b, weight);
        envelope.push(TradeoffPoint {
            rho: point.rho,
            download: weight * a.download + (1.0 - weight) * b.download,
            enumerated_rho: None,
            provenance: Provenance {
                metric: Metric::Mi,
                construction: Construction::Sharing {
                    weight,
                    lower_rho: a.rho,
                    upper_rho: b.rho,
                },
                p_direct: mixed.p_direct(),
                p_weights: mixed.p_weights().to_vec(),
                x_last: None,
            },
        });
    }

    // The hull's second-to-last vertex is the last swept point it touches;
    // the envelope departs there if swept points were skipped after it.
    let tangent_x_last = match hull.as_slice() {
        [.., last_swept, extreme] if extreme - last_swept > 1 => {
            candidates[*last_swept].provenance.x_last
        }
        _ => None,
    };
    Ok(MiTradeoff {
        swept,
        envelope,
        tangent_x_last,
    })
}

fn mix_points(
    params: &SystemParams,
    a: &TradeoffPoint,
    b: &TradeoffPoint,
    weight: f64,
) -> PatternDistribution {
    let da = a
        .distribution(params)
        .expect("envelope vertices are normalized");
    let db = b
        .distribution(params)
        .expect("envelope vertices are normalized");
    da.mix(&db, weight)
}

/// Lower convex envelope of the swept TSC curve and the direct extreme point.
pub fn mi_curve(params: &SystemParams, grid_size: usize) -> Result<Vec<TradeoffPoint>> {
    Ok(mi_tradeoff(params, grid_size)?.envelope)
}

/// A distribution on the envelope whose mutual-information leakage is at most
/// `rho`. Sharing between two envelope points leaks no more than the chord
/// between them, since mutual information is convex in the query law.
pub fn solve_mi(params: &SystemParams, rho: f64, grid_size: usize) -> Result<TradeoffPoint> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "leakage budget must be >= 0, got {rho}"
        )));
    }
    let envelope = mi_curve(params, grid_size)?;
    let last = envelope
        .last()
        .expect("envelope contains the extreme point");
    if rho >= last.rho {
        return Ok(last.clone());
    }
    let upper = envelope.partition_point(|p| p.rho <= rho);
    let (a, b) = (&envelope[upper - 1], &envelope[upper]);
    if a.rho == rho {
        return Ok(a.clone());
    }
    let weight = (b.rho - rho) / (b.rho - a.rho);
    let mixed = mix_points(params, a, b, weight);
    Ok(TradeoffPoint {
        rho,
        download: weight * a.download + (1.0 - weight) * b.download,
        enumerated_rho: None,
        provenance: Provenance {
            metric: Metric::Mi,
            construction: Construction::Sharing {
                weight,
                lower_rho: a.rho,
                upper_rho: b.rho,
            },
            p_direct: mixed.p_direct(),
            p_weights: mixed.p_weights().to_vec(),
            x_last: None,
        },
    })
}

/// Natural-log version of [`analytic_mi`], for derivative checks.
pub fn analytic_mi_nats(params: &SystemParams, p_weights: &[f64]) -> f64 {
    analytic_mi(params, p_weights) * LN_2
}
