//! Optimal distribution under a maximal-leakage budget.
//!
//! The optimum puts `p'_0 = min(1/N, (2^rho - 1)/(K - 1))` on each direct key
//! and spreads the remaining mass uniformly over all TSC keys. Its leakage is
//! `log2(1 + (K - 1) p'_0)` and its download cost is affine in `2^rho`.

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::leakage::{enumerate_query_law, maximal_leakage, Metric};
use crate::model::{PatternDistribution, SystemParams};
use crate::wpir::WpirScheme;

use super::{Construction, Provenance, TradeoffPoint, CURVE_CHECK_LIMIT};

/// `log2(1 + (K-1)/N)`: beyond this budget the pure direct pattern is used.
pub fn maxl_rho_cap(params: &SystemParams) -> f64 {
    let (n, k) = (params.servers() as f64, params.messages() as f64);
    (1.0 + (k - 1.0) / n).log2()
}

/// `1 + (1 - N (2^rho - 1)/(K - 1))_+ (1/N + .. + 1/N^(K-1))`
pub fn maxl_download_bound(params: &SystemParams, rho: f64) -> f64 {
    let (n, k) = (params.servers() as f64, params.messages() as f64);
    let tail: f64 = (1..params.messages() as i32).map(|i| n.powi(-i)).sum();
    let scale = (1.0 - n * (rho.exp2() - 1.0) / (k - 1.0)).max(0.0);
    1.0 + scale * tail
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_nan() || rho < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "leakage budget must be >= 0, got {rho}"
        )));
    }
    Ok(())
}

/// Optimal key distribution for maximal-leakage budget `rho` (bits).
pub fn solve_maxl(params: &SystemParams, rho: f64) -> Result<PatternDistribution> {
    check_rho(rho)?;
    let (n, k) = (params.servers() as f64, params.messages() as f64);
    let p_direct = (1.0 / n).min((rho.exp2() - 1.0) / (k - 1.0));
    let rest = 1.0 - n * p_direct;
    if rest <= 4.0 * f64::EPSILON {
        return Ok(PatternDistribution::pure_direct(params));
    }
    let p_w = rest * n.powi(-(params.messages() as i32));
    PatternDistribution::new(params, p_direct, vec![p_w; params.messages()])
}

fn check_grid(grid_size: usize) -> Result<()> {
    if grid_size < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_size must be >= 2, got {grid_size}"
        )));
    }
    Ok(())
}

fn enumerated_maxl(params: &SystemParams, dist: &PatternDistribution) -> Option<f64> {
    if params.tsc_key_count()? > CURVE_CHECK_LIMIT as u128 {
        return None;
    }
    let scheme = WpirScheme::new(*params, dist.clone()).ok()?;
    enumerate_query_law(&scheme, 1)
        .ok()
        .map(|law| maximal_leakage(&law))
}

/// Samples `grid_size` budgets uniformly on `[0, maxl_rho_cap]`.
pub fn maxl_curve(params: &SystemParams, grid_size: usize) -> Result<Vec<TradeoffPoint>> {
    maxl_curve_with(params, grid_size, Exec::default())
}

pub fn maxl_curve_with(
    params: &SystemParams,
    grid_size: usize,
    exec: Exec,
) -> Result<Vec<TradeoffPoint>> {
    check_grid(grid_size)?;
    let cap = maxl_rho_cap(params);
    let rhos: Vec<f64> = (0..grid_size)
        .map(|i| cap * i as f64 / (grid_size - 1) as f64)
        .collect();
    exec.map(&rhos, |&rho| {
        let dist = solve_maxl(params, rho)?;
        let construction = if rho >= cap {
            Construction::Direct
        } else {
            Construction::Pure
        };
        Ok(TradeoffPoint {
            rho,
            download: maxl_download_bound(params, rho),
            enumerated_rho: enumerated_maxl(params, &dist),
            provenance: Provenance {
                metric: Metric::MaxL,
                construction,
                p_direct: dist.p_direct(),
                p_weights: dist.p_weights().to_vec(),
                x_last: None,
            },
        })
    })
    .into_iter()
    .collect()
}

/// Maximal-leakage curve of the code without the single-server pattern
/// (`p'_0 = 0`): weight 0 gets `p_0` and all other weights share one value,
/// moving from the uniform TSC code to the `N - 1` server direct download.
pub fn maxl_baseline_curve(params: &SystemParams, grid_size: usize) -> Result<Vec<TradeoffPoint>> {
    check_grid(grid_size)?;
    let (n, k) = (params.servers() as f64, params.messages() as f64);
    let others = n.powi(params.messages() as i32 - 1) - 1.0;
    // 2^rho = a p_0 + b p_w, with p_w = (1/N - p_0) / others
    let a = 1.0 + k * (n - 1.0);
    let b = n.powi(params.messages() as i32) - a;
    let cap = (a / n).log2();
    let points = (0..grid_size)
        .map(|i| {
            let rho = cap * i as f64 / (grid_size - 1) as f64;
            let p0 = if i + 1 == grid_size {
                1.0 / n
            } else {
                ((rho.exp2() - b / (n * others)) / (a - b / others)).clamp(0.0, 1.0 / n)
            };
            let pw = ((1.0 / n - p0) / others).max(0.0);
            let mut p_weights = vec![pw; params.messages()];
            p_weights[0] = p0;
            let dist = PatternDistribution::new(params, 0.0, p_weights)?;
            Ok(TradeoffPoint {
                rho,
                download: n / (n - 1.0) * (1.0 - p0),
                enumerated_rho: enumerated_maxl(params, &dist),
                provenance: Provenance {
                    metric: Metric::MaxL,
                    construction: Construction::Pure,
                    p_direct: 0.0,
                    p_weights: dist.p_weights().to_vec(),
                    x_last: None,
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(points)
}
