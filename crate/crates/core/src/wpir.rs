//! W-PIR code: the TSC patterns plus a single-server direct download of the
//! whole message.
//!
//! A direct key `F = s` sends `#_k` to server `s` and the all-zero query `0_K`
//! to every other server. The zero query is also a legitimate TSC query and
//! both produce an empty answer, so the servers need not tell them apart.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    Answer, MessageStore, PatternDistribution, Query, RandomKey, Symbol, SystemParams,
};
use crate::tsc::{tsc_answer, tsc_decode, tsc_query};

/// A code instance: system parameters plus the key distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SchemeRepr", into = "SchemeRepr")]
pub struct WpirScheme {
    params: SystemParams,
    dist: PatternDistribution,
}

#[derive(Serialize, Deserialize)]
struct SchemeRepr {
    #[serde(rename = "N")]
    servers: usize,
    #[serde(rename = "K")]
    messages: usize,
    dist: PatternDistribution,
}

impl TryFrom<SchemeRepr> for WpirScheme {
    type Error = Error;

    fn try_from(repr: SchemeRepr) -> Result<Self> {
        WpirScheme::new(SystemParams::new(repr.servers, repr.messages)?, repr.dist)
    }
}

impl From<WpirScheme> for SchemeRepr {
    fn from(scheme: WpirScheme) -> Self {
        SchemeRepr {
            servers: scheme.params.servers(),
            messages: scheme.params.messages(),
            dist: scheme.dist,
        }
    }
}

/// Expected download per retrieved message symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DownloadCost {
    /// `D`
    pub cost: f64,
    /// `p_d = N (p'_0 + p_0)`, the probability that only `L` symbols are downloaded.
    pub direct_probability: f64,
}

impl WpirScheme {
    pub fn new(params: SystemParams, dist: PatternDistribution) -> Result<Self> {
        dist.validate(&params)?;
        Ok(Self { params, dist })
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn dist(&self) -> &PatternDistribution {
        &self.dist
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scheme serializes")
    }

    /// Query for server `n` when retrieving message `k` under `key`.
    pub fn query(&self, k: usize, key: &RandomKey, n: usize) -> Query {
        match key {
            RandomKey::Direct { server } if *server == n => Query::Direct { message: k },
            RandomKey::Direct { .. } => Query::zero(&self.params),
            RandomKey::Tsc(t) => tsc_query(&self.params, k, t, n),
        }
    }

    /// Queries for servers `1..=N`.
    pub fn queries(&self, k: usize, key: &RandomKey) -> Vec<Query> {
        (1..=self.params.servers())
            .map(|n| self.query(k, key, n))
            .collect()
    }

    /// A server's answer to `query`.
    pub fn answer(&self, query: &Query, store: &MessageStore) -> Answer {
        answer(query, store)
    }

    pub fn decode(&self, k: usize, key: &RandomKey, answers: &[Answer]) -> Result<Vec<Symbol>> {
        match key {
            RandomKey::Tsc(t) => tsc_decode(&self.params, k, t, answers),
            RandomKey::Direct { server } => {
                if answers.len() != self.params.servers() {
                    return Err(Error::MalformedAnswers(format!(
                        "expected {} answers, got {}",
                        self.params.servers(),
                        answers.len()
                    )));
                }
                for (i, a) in answers.iter().enumerate() {
                    let expected = self.query(k, key, i + 1).answer_len(&self.params);
                    if a.len() != expected {
                        return Err(Error::MalformedAnswers(format!(
                            "server {} returned {} symbols, expected {expected}",
                            i + 1,
                            a.len()
                        )));
                    }
                }
                Ok(answers[server - 1].0.clone())
            }
        }
    }

    /// `D = p_d + N/(N-1) (1 - p_d)` with `p_d = N (p'_0 + p_0)`.
    pub fn download_cost(&self) -> DownloadCost {
        let n = self.params.servers() as f64;
        let p_d = n * (self.dist.p_direct() + self.dist.p_weights()[0]);
        DownloadCost {
            cost: p_d + n / (n - 1.0) * (1.0 - p_d),
            direct_probability: p_d,
        }
    }
}

/// Server-side answer function. Needs no key or scheme state.
pub fn answer(query: &Query, store: &MessageStore) -> Answer {
    match query {
        Query::Direct { message } => Answer(store.message(*message).to_vec()),
        Query::Vector(digits) => tsc_answer(digits, store),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{KeySpace, TscKey};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table_scheme() -> (WpirScheme, MessageStore) {
        let p = SystemParams::new(3, 2).unwrap();
        let store = MessageStore::new(&p, vec![vec![0x11, 0x12], vec![0x21, 0x22]]).unwrap();
        let dist = PatternDistribution::new(&p, 0.1, vec![0.7 / 9.0; 2]).unwrap();
        (WpirScheme::new(p, dist).unwrap(), store)
    }

    fn key_count_cost(scheme: &WpirScheme, k: usize) -> f64 {
        let p = scheme.params();
        KeySpace::new(p)
            .unwrap()
            .iter()
            .map(|key| {
                let symbols: usize = scheme
                    .queries(k, &key)
                    .iter()
                    .map(|q| q.answer_len(p))
                    .sum();
                crate::model::key_probability(scheme.dist(), &key) * symbols as f64
            })
            .sum::<f64>()
            / p.message_len() as f64
    }

    #[test]
    fn direct_key_queries() {
        let (s, _) = table_scheme();
        let key = RandomKey::Direct { server: 2 };
        assert_eq!(s.query(1, &key, 2), Query::Direct { message: 1 });
        assert!(s.query(1, &key, 3).is_zero());
        assert!(s.query(1, &key, 1).is_zero());
    }

    #[test]
    fn tsc_keys_pass_through() {
        let (s, _) = table_scheme();
        let t = TscKey {
            interference: vec![2],
            shift: 1,
        };
        for n in 1..=3 {
            assert_eq!(
                s.query(2, &RandomKey::Tsc(t.clone()), n),
                tsc_query(s.params(), 2, &t, n)
            );
        }
    }

    #[test]
    fn answers() {
        let (s, store) = table_scheme();
        assert_eq!(
            s.answer(&Query::Direct { message: 1 }, &store),
            Answer(vec![0x11, 0x12])
        );
        assert_eq!(
            s.answer(&Query::zero(s.params()), &store),
            Answer::default()
        );
        assert_eq!(
            s.answer(&Query::Vector(vec![1, 2]), &store),
            Answer(vec![0x11 ^ 0x22])
        );
    }

    #[test]
    fn direct_decode() {
        let (s, _) = table_scheme();
        let answers = vec![
            Answer::default(),
            Answer::default(),
            Answer(vec![0x21, 0x22]),
        ];
        let out = s
            .decode(2, &RandomKey::Direct { server: 3 }, &answers)
            .unwrap();
        assert_eq!(out, vec![0x21, 0x22]);

        let bad = vec![Answer(vec![1]), Answer::default(), Answer(vec![0x21, 0x22])];
        assert!(s.decode(2, &RandomKey::Direct { server: 3 }, &bad).is_err());
    }

    #[test]
    fn exhaustive_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for (n, kk) in [(2, 2), (3, 2), (3, 3), (4, 2)] {
            let p = SystemParams::new(n, kk).unwrap();
            let scheme = WpirScheme::new(p, PatternDistribution::pure_direct(&p)).unwrap();
            let store = MessageStore::random(&p, &mut rng);
            for key in KeySpace::new(&p).unwrap().iter() {
                for k in 1..=kk {
                    let answers: Vec<_> = scheme
                        .queries(k, &key)
                        .iter()
                        .map(|q| scheme.answer(q, &store))
                        .collect();
                    assert_eq!(scheme.decode(k, &key, &answers).unwrap(), store.message(k));
                }
            }
        }
    }

    #[test]
    fn download_cost_closed_forms() {
        let p = SystemParams::new(3, 2).unwrap();
        let direct = WpirScheme::new(p, PatternDistribution::pure_direct(&p)).unwrap();
        assert!((direct.download_cost().cost - 1.0).abs() < 1e-15);
        let uniform = WpirScheme::new(p, PatternDistribution::uniform(&p)).unwrap();
        assert!((uniform.download_cost().cost - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn download_cost_matches_enumeration_for_every_message() {
        let (s, _) = table_scheme();
        let closed = s.download_cost().cost;
        for k in 1..=2 {
            assert!((key_count_cost(&s, k) - closed).abs() < 1e-12);
        }
        let p = SystemParams::new(3, 3).unwrap();
        let dist = PatternDistribution::new(&p, 0.05, vec![0.05, 0.02, 0.46 / 12.0]).unwrap();
        let s = WpirScheme::new(p, dist).unwrap();
        let per_k: Vec<f64> = (1..=3).map(|k| key_count_cost(&s, k)).collect();
        assert!(per_k.iter().all(|c| *c == per_k[0]));
        assert!((per_k[0] - s.download_cost().cost).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip_validates() {
        let (s, _) = table_scheme();
        let back = WpirScheme::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
        let json = r#"{"N":3,"K":2,"dist":{"p_direct":0.2,"p_weights":[0.0,0.0]}}"#;
        assert!(WpirScheme::from_json(json).is_err());
        let json = r#"{"N":3,"K":2,"dist":{"p_direct":0.0,"p_weights":[0.1111111111111111,0.1111111111111111]}}"#;
        assert!(WpirScheme::from_json(json).is_ok());
    }
}
