//! Shared domain types: system parameters, message stores, random keys,
//! queries, answers and the per-pattern-class key distribution.
//!
//! Indexing is 1-based for servers (`1..=N`) and messages (`1..=K`). Symbol
//! index 0 of every message is the implicit zero "dummy" symbol; stored
//! symbols live at indices `1..=L` with `L = N - 1`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest TSC key space (`N^K`) that exhaustive enumeration will accept.
pub const MAX_ENUMERATED_KEYS: u64 = 10_000_000;

/// Tolerance on the normalization constraint of a [`PatternDistribution`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A message symbol. Symbol addition is bytewise XOR.
pub type Symbol = u8;

/// Number of servers `N`, number of messages `K`; the message length is fixed
/// to `L = N - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SystemParams {
    servers: usize,
    messages: usize,
}

impl SystemParams {
    pub fn new(servers: usize, messages: usize) -> Result<Self> {
        if servers < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 servers, got {servers}"
            )));
        }
        if messages < 2 {
            return Err(Error::InvalidParams(format!(
                "need at least 2 messages, got {messages}"
            )));
        }
        if servers > u32::MAX as usize {
            return Err(Error::InvalidParams(format!("too many servers: {servers}")));
        }
        Ok(Self { servers, messages })
    }

    /// `N`
    pub fn servers(&self) -> usize {
        self.servers
    }

    /// `K`
    pub fn messages(&self) -> usize {
        self.messages
    }

    /// `L = N - 1`
    pub fn message_len(&self) -> usize {
        self.servers - 1
    }

    /// `N^K`, the number of TSC keys, if it fits in a `u128`.
    pub fn tsc_key_count(&self) -> Option<u128> {
        (self.servers as u128).checked_pow(self.messages as u32)
    }

    /// Fails with [`Error::TooLarge`] unless `N^K <= MAX_ENUMERATED_KEYS`.
    pub fn check_enumerable(&self) -> Result<u64> {
        match self.tsc_key_count() {
            Some(size) if size <= MAX_ENUMERATED_KEYS as u128 => Ok(size as u64),
            size => Err(Error::TooLarge {
                size: size.unwrap_or(u128::MAX),
                limit: MAX_ENUMERATED_KEYS,
            }),
        }
    }

    /// Number of TSC keys whose interference has Hamming weight `w`:
    /// `N * C(K-1, w) * (N-1)^w` (the factor `N` counts the shift digit).
    pub fn weight_class_size(&self, w: usize) -> f64 {
        let n = self.servers as f64;
        n * binomial(self.messages - 1, w) * (n - 1.0).powi(w as i32)
    }
}

/// `C(n, k)` as a float.
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// The `K` replicated messages, each `L` symbols long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStore {
    messages: Vec<Vec<Symbol>>,
}

impl MessageStore {
    pub fn new(params: &SystemParams, messages: Vec<Vec<Symbol>>) -> Result<Self> {
        if messages.len() != params.messages() {
            return Err(Error::InvalidParams(format!(
                "expected {} messages, got {}",
                params.messages(),
                messages.len()
            )));
        }
        if let Some((k, m)) = messages
            .iter()
            .enumerate()
            .find(|(_, m)| m.len() != params.message_len())
        {
            return Err(Error::InvalidParams(format!(
                "message {} has {} symbols, expected {}",
                k + 1,
                m.len(),
                params.message_len()
            )));
        }
        Ok(Self { messages })
    }

    /// Uniformly random message contents.
    pub fn random<R: Rng + ?Sized>(params: &SystemParams, rng: &mut R) -> Self {
        let messages = (0..params.messages())
            .map(|_| (0..params.message_len()).map(|_| rng.random()).collect())
            .collect();
        Self { messages }
    }

    pub fn num_messages(&self) -> usize {
        self.messages.len()
    }

    /// The stored symbols of message `k` (1-based), without the dummy.
    pub fn message(&self, k: usize) -> &[Symbol] {
        &self.messages[k - 1]
    }

    /// `W_k[i]`, with `W_k[0] = 0`.
    pub fn symbol(&self, k: usize, i: usize) -> Symbol {
        if i == 0 {
            0
        } else {
            self.messages[k - 1][i - 1]
        }
    }
}

/// Private key of a TSC retrieval: the `K-1` interference digits followed by
/// the cyclic shift `U`, all in `0..N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TscKey {
    pub interference: Vec<u32>,
    pub shift: u32,
}

impl TscKey {
    /// Hamming weight of the interference digits.
    pub fn weight(&self) -> usize {
        self.interference.iter().filter(|&&d| d != 0).count()
    }
}

/// The user's private randomness.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomKey {
    /// Download the full message from this server (1-based).
    Direct {
        server: usize,
    },
    Tsc(TscKey),
}

/// Pattern class of a key: the direct pattern or a TSC interference weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyClass {
    Direct,
    Weight(usize),
}

impl RandomKey {
    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        let n = params.servers();
        match self {
            RandomKey::Direct { server } if (1..=n).contains(server) => Ok(()),
            RandomKey::Direct { server } => Err(Error::InvalidArgument(format!(
                "direct key server {server} outside 1..={n}"
            ))),
            RandomKey::Tsc(key) => {
                if key.interference.len() != params.messages() - 1 {
                    return Err(Error::InvalidArgument(format!(
                        "TSC key has {} interference digits, expected {}",
                        key.interference.len(),
                        params.messages() - 1
                    )));
                }
                if key
                    .interference
                    .iter()
                    .chain(std::iter::once(&key.shift))
                    .any(|&d| d as usize >= n)
                {
                    return Err(Error::InvalidArgument(format!(
                        "TSC key digit outside 0..{n}"
                    )));
                }
                Ok(())
            }
        }
    }
}

/// Pattern class of `key`.
pub fn key_weight(key: &RandomKey) -> KeyClass {
    match key {
        RandomKey::Direct { .. } => KeyClass::Direct,
        RandomKey::Tsc(k) => KeyClass::Weight(k.weight()),
    }
}

/// A query sent to one server.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Query {
    /// Request the whole of message `message` (1-based).
    Direct { message: usize },
    /// One digit in `0..N` per message; the all-zero vector is `0_K`.
    Vector(Vec<u32>),
}

impl Query {
    pub fn zero(params: &SystemParams) -> Self {
        Query::Vector(vec![0; params.messages()])
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Query::Vector(d) if d.iter().all(|&x| x == 0))
    }

    /// Number of symbols in the answer to this query. Depends only on the
    /// query, never on the messages.
    pub fn answer_len(&self, params: &SystemParams) -> usize {
        match self {
            Query::Direct { .. } => params.message_len(),
            q if q.is_zero() => 0,
            Query::Vector(_) => 1,
        }
    }
}

/// A server's answer: a possibly empty string of symbols.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Answer(pub Vec<Symbol>);

impl Answer {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-key probabilities by pattern class: `p_direct` for each of the `N`
/// direct keys and `p_weights[w]` for each TSC key of interference weight `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternDistribution {
    p_direct: f64,
    p_weights: Vec<f64>,
}

impl PatternDistribution {
    /// Builds a distribution and checks it against the normalization
    /// constraint for `params`.
    pub fn new(params: &SystemParams, p_direct: f64, p_weights: Vec<f64>) -> Result<Self> {
        let dist = Self {
            p_direct,
            p_weights,
        };
        dist.validate(params)?;
        Ok(dist)
    }

    /// Uniform TSC distribution, `p_w = N^-K`, no direct pattern.
    pub fn uniform(params: &SystemParams) -> Self {
        let p = (params.servers() as f64).powi(-(params.messages() as i32));
        Self {
            p_direct: 0.0,
            p_weights: vec![p; params.messages()],
        }
    }

    /// Only the single-server direct pattern, `p'_0 = 1/N`.
    pub fn pure_direct(params: &SystemParams) -> Self {
        Self {
            p_direct: 1.0 / params.servers() as f64,
            p_weights: vec![0.0; params.messages()],
        }
    }

    /// Only the weight-0 TSC keys, i.e. the direct download from `N-1`
    /// servers used by the earlier constructions.
    pub fn legacy_direct(params: &SystemParams) -> Self {
        let mut p_weights = vec![0.0; params.messages()];
        p_weights[0] = 1.0 / params.servers() as f64;
        Self {
            p_direct: 0.0,
            p_weights,
        }
    }

    /// Parses the JSON form `{"p_direct": .., "p_weights": [..]}` and
    /// validates it for `params`.
    pub fn from_json(params: &SystemParams, json: &str) -> Result<Self> {
        let dist: Self = serde_json::from_str(json)?;
        dist.validate(params)?;
        Ok(dist)
    }

    pub fn p_direct(&self) -> f64 {
        self.p_direct
    }

    pub fn p_weights(&self) -> &[f64] {
        &self.p_weights
    }

    /// `N p'_0 + N sum_w C(K-1,w)(N-1)^w p_w`
    pub fn total_mass(&self, params: &SystemParams) -> f64 {
        params.servers() as f64 * self.p_direct
            + self
                .p_weights
                .iter()
                .enumerate()
                .map(|(w, p)| params.weight_class_size(w) * p)
                .sum::<f64>()
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if self.p_weights.len() != params.messages() {
            return Err(Error::InvalidDistribution(format!(
                "expected {} weight probabilities, got {}",
                params.messages(),
                self.p_weights.len()
            )));
        }
        let all = std::iter::once(&self.p_direct).chain(&self.p_weights);
        if let Some(p) = all.clone().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "probabilities must be finite and nonnegative, got {p}"
            )));
        }
        let mass = self.total_mass(params);
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "total probability is {mass}, not 1"
            )));
        }
        Ok(())
    }

    /// Probability of each pattern class as a whole, direct class first, then
    /// weights `0..K`.
    pub fn class_masses(&self, params: &SystemParams) -> Vec<f64> {
        std::iter::once(params.servers() as f64 * self.p_direct)
            .chain(
                self.p_weights
                    .iter()
                    .enumerate()
                    .map(|(w, p)| params.weight_class_size(w) * p),
            )
            .collect()
    }

    /// Mixture `theta * self + (1 - theta) * other`.
    pub fn mix(&self, other: &Self, theta: f64) -> Self {
        Self {
            p_direct: theta * self.p_direct + (1.0 - theta) * other.p_direct,
            p_weights: self
                .p_weights
                .iter()
                .zip(&other.p_weights)
                .map(|(a, b)| theta * a + (1.0 - theta) * b)
                .collect(),
        }
    }
}

/// Probability of one individual key.
pub fn key_probability(dist: &PatternDistribution, key: &RandomKey) -> f64 {
    match key_weight(key) {
        KeyClass::Direct => dist.p_direct,
        KeyClass::Weight(w) => dist.p_weights[w],
    }
}

/// Draws a key with the exact law given by [`key_probability`]: first the
/// pattern class, then a uniform member of that class.
pub fn sample_key<R: Rng + ?Sized>(
    params: &SystemParams,
    dist: &PatternDistribution,
    rng: &mut R,
) -> RandomKey {
    let masses = dist.class_masses(params);
    let class = WeightedIndex::new(&masses)
        .expect("normalized distribution has positive total mass")
        .sample(rng);
    let n = params.servers() as u32;
    if class == 0 {
        return RandomKey::Direct {
            server: rng.random_range(1..=params.servers()),
        };
    }
    let w = class - 1;
    let mut interference = vec![0u32; params.messages() - 1];
    for pos in rand::seq::index::sample(rng, interference.len(), w) {
        interference[pos] = rng.random_range(1..n);
    }
    RandomKey::Tsc(TscKey {
        interference,
        shift: rng.random_range(0..n),
    })
}

/// Enumeration of the whole key space: the `N` direct keys followed by the
/// `N^K` TSC keys in lexicographic order of `(F_1, .., F_{K-1}, U)`.
#[derive(Debug, Clone, Copy)]
pub struct KeySpace {
    params: SystemParams,
    tsc_keys: u64,
}

impl KeySpace {
    pub fn new(params: &SystemParams) -> Result<Self> {
        let tsc_keys = params.check_enumerable()?;
        Ok(Self {
            params: *params,
            tsc_keys,
        })
    }

    pub fn len(&self) -> u64 {
        self.tsc_keys + self.params.servers() as u64
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn key(&self, index: u64) -> RandomKey {
        let n = self.params.servers() as u64;
        if index < n {
            return RandomKey::Direct {
                server: index as usize + 1,
            };
        }
        let mut rest = index - n;
        let mut digits = vec![0u32; self.params.messages()];
        for d in digits.iter_mut().rev() {
            *d = (rest % n) as u32;
            rest /= n;
        }
        let shift = digits.pop().expect("K >= 2");
        RandomKey::Tsc(TscKey {
            interference: digits,
            shift,
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = RandomKey> + '_ {
        (0..self.len()).map(|i| self.key(i))
    }
}
