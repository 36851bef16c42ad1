//! Exact privacy leakage of a scheme towards a single server.
//!
//! Both metrics depend only on the conditional query law `P(Q_n = q | M = k)`,
//! which is obtained by enumerating every key. The analytic mutual-information
//! formula for TSC-only schemes is provided alongside as an independent route.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{binomial, key_probability, KeySpace, Query, SystemParams};
use crate::wpir::WpirScheme;

/// Tolerance on the total mass of each conditional law.
pub const LAW_MASS_TOL: f64 = 1e-12;

/// Leakage metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Maximal leakage, `log2 sum_q max_k P(q|k)`.
    #[serde(rename = "maxl")]
    MaxL,
    /// Mutual information `I(M; Q_n)` with `M` uniform.
    Mi,
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Metric::MaxL => "maxl",
            Metric::Mi => "mi",
        })
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "maxl" => Ok(Metric::MaxL),
            "mi" => Ok(Metric::Mi),
            other => Err(Error::InvalidArgument(format!("unknown metric {other:?}"))),
        }
    }
}

/// The conditional query law seen by one server: one distribution over
/// queries per requested message `k = 1..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryLaw {
    server: usize,
    conditionals: Vec<BTreeMap<Query, f64>>,
}

impl QueryLaw {
    /// Builds a law from explicit conditionals, checking each sums to one.
    pub fn from_conditionals(
        server: usize,
        conditionals: Vec<BTreeMap<Query, f64>>,
    ) -> Result<Self> {
        let law = Self {
            server,
            conditionals,
        };
        law.check_mass()?;
        Ok(law)
    }

    fn check_mass(&self) -> Result<()> {
        for (k, cond) in self.conditionals.iter().enumerate() {
            let total: f64 = cond.values().sum();
            if (total - 1.0).abs() > LAW_MASS_TOL {
                return Err(Error::InvalidDistribution(format!(
                    "conditional law for message {} sums to {total}",
                    k + 1
                )));
            }
        }
        Ok(())
    }

    pub fn server(&self) -> usize {
        self.server
    }

    pub fn num_messages(&self) -> usize {
        self.conditionals.len()
    }

    /// `P(Q_n = q | M = k)` for 1-based `k`.
    pub fn conditional(&self, k: usize) -> &BTreeMap<Query, f64> {
        &self.conditionals[k - 1]
    }

    pub fn probability(&self, k: usize, q: &Query) -> f64 {
        self.conditionals[k - 1].get(q).copied().unwrap_or(0.0)
    }

    /// Every query with positive probability under some `k`, sorted.
    pub fn support(&self) -> BTreeSet<&Query> {
        self.conditionals
            .iter()
            .flat_map(|c| c.iter().filter(|(_, p)| **p > 0.0).map(|(q, _)| q))
            .collect()
    }

    /// Same conditionals as `other`, ignoring the server label.
    pub fn same_law(&self, other: &QueryLaw) -> bool {
        self.conditionals == other.conditionals
    }
}

/// Enumerates every key to get the exact law of the query sent to server `n`.
pub fn enumerate_query_law(scheme: &WpirScheme, n: usize) -> Result<QueryLaw> {
    enumerate_query_law_with(scheme, n, Exec::default())
}

pub fn enumerate_query_law_with(scheme: &WpirScheme, n: usize, exec: Exec) -> Result<QueryLaw> {
    let params = scheme.params();
    assert!(
        (1..=params.servers()).contains(&n),
        "server index {n} out of range"
    );
    let space = KeySpace::new(params)?;
    let messages: Vec<usize> = (1..=params.messages()).collect();
    // Keys are visited in a fixed order, so the accumulated sums are
    // bit-reproducible regardless of how messages are scheduled.
    let conditionals = exec.map(&messages, |&k| {
        let mut law = BTreeMap::new();
        for key in space.iter() {
            let mass = key_probability(scheme.dist(), &key);
            if mass > 0.0 {
                *law.entry(scheme.query(k, &key, n)).or_insert(0.0) += mass;
            }
        }
        law
    });
    QueryLaw::from_conditionals(n, conditionals)
}

/// `log2 sum_q max_k P(q|k)`, in bits.
pub fn maximal_leakage(law: &QueryLaw) -> f64 {
    let total: f64 = law
        .support()
        .into_iter()
        .map(|q| {
            (1..=law.num_messages())
                .map(|k| law.probability(k, q))
                .fold(0.0, f64::max)
        })
        .sum();
    total.log2().max(0.0)
}

/// `I(M; Q_n)` in bits with `M` uniform on `1..=K`.
pub fn mutual_info_leakage(law: &QueryLaw) -> f64 {
    let kk = law.num_messages() as f64;
    let mut total = 0.0;
    for q in law.support() {
        let probs: Vec<f64> = (1..=law.num_messages())
            .map(|k| law.probability(k, q))
            .collect();
        let mean = probs.iter().sum::<f64>() / kk;
        total += mean / kk * probs.iter().map(|&p| phi(p / mean)).sum::<f64>();
    }
    (total / std::f64::consts::LN_2).max(0.0)
}

/// `t ln t - t + 1`, nonnegative. Summing `m phi(p_i / m)` over a group with
/// mean `m` gives `sum p_i ln(p_i / m)` without cancelling large terms.
fn phi(t: f64) -> f64 {
    if t > 0.0 {
        let u = t - 1.0;
        t * u.ln_1p() - u
    } else {
        1.0
    }
}

/// Mutual information leakage of a TSC-only scheme (`p'_0 = 0`) in closed form,
/// in bits.
///
/// Groups queries by total Hamming weight `w`: such a query has probability
/// `p_{w-1}` under the `w` requests hitting a nonzero digit and `p_w` under the
/// other `K - w`.
pub fn analytic_mi(params: &SystemParams, p_weights: &[f64]) -> f64 {
    let kk = params.messages();
    assert_eq!(p_weights.len(), kk, "expected K weight probabilities");
    let n1 = (params.servers() - 1) as f64;
    let p = |w: isize| -> f64 {
        if w < 0 || w as usize >= kk {
            0.0
        } else {
            p_weights[w as usize]
        }
    };
    let nats: f64 = (0..=kk)
        .map(|w| {
            let prev = p(w as isize - 1);
            let cur = p(w as isize);
            let mean = (w as f64 * prev + (kk - w) as f64 * cur) / kk as f64;
            if mean <= 0.0 {
                return 0.0;
            }
            let brace = mean * (w as f64 * phi(prev / mean) + (kk - w) as f64 * phi(cur / mean));
            binomial(kk, w) * n1.powi(w as i32) * brace
        })
        .sum::<f64>()
        / kk as f64;
    (nats / std::f64::consts::LN_2).max(0.0)
}

/// Leakage of a scheme under one metric, per server.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    pub metric: Metric,
    /// Worst case over servers, bits.
    pub value: f64,
    pub per_server: Vec<f64>,
    /// Whether every server sees the same query law.
    pub servers_symmetric: bool,
}

pub fn leakage_report(scheme: &WpirScheme, metric: Metric) -> Result<LeakageReport> {
    let laws = (1..=scheme.params().servers())
        .map(|n| enumerate_query_law(scheme, n))
        .collect::<Result<Vec<_>>>()?;
    let per_server: Vec<f64> = laws
        .iter()
        .map(|law| match metric {
            Metric::MaxL => maximal_leakage(law),
            Metric::Mi => mutual_info_leakage(law),
        })
        .collect();
    Ok(LeakageReport {
        metric,
        value: per_server.iter().copied().fold(0.0, f64::max),
        servers_symmetric: laws.windows(2).all(|w| w[0].same_law(&w[1])),
        per_server,
    })
}
