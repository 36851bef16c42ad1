//! Brute-force reference implementation used as a test oracle. It rebuilds the
//! queries straight from the key definition and computes both leakage metrics
//! with textbook formulas, sharing no code with the crate beyond the types it
//! converts from.

#![allow(dead_code)]

use std::collections::HashMap;

use wpir_core::Query;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum OQuery {
    Full(usize),
    Digits(Vec<u32>),
}

impl From<&Query> for OQuery {
    fn from(q: &Query) -> Self {
        match q {
            Query::Direct { message } => OQuery::Full(*message),
            Query::Vector(d) => OQuery::Digits(d.clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub enum OKey {
    /// Serving server, 1-based.
    Direct(usize),
    Tsc {
        f: Vec<u32>,
        u: u32,
    },
}

/// Every key with its probability.
pub fn keys(n: usize, k: usize, p_direct: f64, p_weights: &[f64]) -> Vec<(OKey, f64)> {
    let mut out: Vec<(OKey, f64)> = (1..=n).map(|s| (OKey::Direct(s), p_direct)).collect();
    let total = (n as u64).pow(k as u32);
    for code in 0..total {
        let mut digits = Vec::with_capacity(k);
        let mut c = code;
        for _ in 0..k {
            digits.push((c % n as u64) as u32);
            c /= n as u64;
        }
        let u = digits.pop().unwrap();
        let weight = digits.iter().filter(|&&d| d > 0).count();
        out.push((OKey::Tsc { f: digits, u }, p_weights[weight]));
    }
    out
}

/// Query to `server` when `want` is requested.
pub fn query(n: usize, k: usize, want: usize, key: &OKey, server: usize) -> OQuery {
    match key {
        OKey::Direct(s) if *s == server => OQuery::Full(want),
        OKey::Direct(_) => OQuery::Digits(vec![0; k]),
        OKey::Tsc { f, u } => {
            let mut d = f.clone();
            d.insert(want - 1, ((*u as usize + server) % n) as u32);
            OQuery::Digits(d)
        }
    }
}

/// `law[want - 1][q] = P(q | want)` at `server`.
pub fn law(
    n: usize,
    k: usize,
    p_direct: f64,
    p_weights: &[f64],
    server: usize,
) -> Vec<HashMap<OQuery, f64>> {
    let all = keys(n, k, p_direct, p_weights);
    (1..=k)
        .map(|want| {
            let mut m = HashMap::new();
            for (key, p) in all.iter().filter(|(_, p)| *p > 0.0) {
                *m.entry(query(n, k, want, key, server)).or_insert(0.0) += p;
            }
            m
        })
        .collect()
}

fn support(law: &[HashMap<OQuery, f64>]) -> Vec<OQuery> {
    let mut s: Vec<OQuery> = law.iter().flat_map(|m| m.keys().cloned()).collect();
    s.sort_by_key(|q| format!("{q:?}"));
    s.dedup();
    s
}

pub fn maxl(law: &[HashMap<OQuery, f64>]) -> f64 {
    support(law)
        .iter()
        .map(|q| {
            law.iter()
                .map(|m| m.get(q).copied().unwrap_or(0.0))
                .fold(0.0, f64::max)
        })
        .sum::<f64>()
        .log2()
}

/// `sum_{k,q} P(k) P(q|k) log2(P(q|k) / P(q))` with `P(k) = 1/K`.
pub fn mi(law: &[HashMap<OQuery, f64>]) -> f64 {
    let kk = law.len() as f64;
    let mut total = 0.0;
    for q in support(law) {
        let pq: f64 = law
            .iter()
            .map(|m| m.get(&q).copied().unwrap_or(0.0))
            .sum::<f64>()
            / kk;
        for m in law {
            let p = m.get(&q).copied().unwrap_or(0.0);
            if p > 0.0 {
                total += p / kk * (p / pq).log2();
            }
        }
    }
    total
}

/// Expected downloaded symbols divided by `N - 1` for requested message `want`.
pub fn download(n: usize, k: usize, p_direct: f64, p_weights: &[f64], want: usize) -> f64 {
    keys(n, k, p_direct, p_weights)
        .iter()
        .map(|(key, p)| {
            let symbols: usize = (1..=n)
                .map(|s| match query(n, k, want, key, s) {
                    OQuery::Full(_) => n - 1,
                    OQuery::Digits(d) if d.iter().all(|&x| x == 0) => 0,
                    OQuery::Digits(_) => 1,
                })
                .sum();
            p * symbols as f64
        })
        .sum::<f64>()
        / (n - 1) as f64
}

/// `N p'_0 + N sum_w C(K-1, w) (N-1)^w p_w`, computed by counting keys.
pub fn mass(n: usize, k: usize, p_direct: f64, p_weights: &[f64]) -> f64 {
    keys(n, k, p_direct, p_weights).iter().map(|(_, p)| p).sum()
}
