//! Seeded Monte-Carlo harness running full retrievals against in-process
//! servers.
//!
//! Trial `t` draws its randomness from a ChaCha8 stream selected by `t` under
//! the master seed, so trials are independent of execution order and can run
//! in parallel. All aggregates are integer sums, making reports identical for
//! identical configurations.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::leakage::enumerate_query_law;
use crate::model::{sample_key, Answer, MessageStore, Query};
use crate::wpir::{self, WpirScheme};

/// Master seed used when none is given.
pub const DEFAULT_SEED: u64 = 0x5750_4952_5345_4544;

/// Seed for message contents when none is given.
pub const DEFAULT_MESSAGE_SEED: u64 = 0x4d45_5353_4147_4553;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub scheme: WpirScheme,
    pub trials: u64,
    pub seed: u64,
    pub message_seed: u64,
}

impl SimConfig {
    pub fn new(scheme: WpirScheme, trials: u64) -> Self {
        Self {
            scheme,
            trials,
            seed: DEFAULT_SEED,
            message_seed: DEFAULT_MESSAGE_SEED,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

/// Narrow server interface: a query in, symbols out.
pub trait AnswerServer: Sync {
    fn answer(&self, query: &Query) -> Answer;
}

/// A server holding its own replica of the messages in memory.
#[derive(Debug, Clone)]
pub struct LocalServer {
    store: MessageStore,
}

impl LocalServer {
    pub fn new(store: MessageStore) -> Self {
        Self { store }
    }
}

impl AnswerServer for LocalServer {
    fn answer(&self, query: &Query) -> Answer {
        wpir::answer(query, &self.store)
    }
}

/// Observed count of one query at one server for one requested message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryFrequency {
    pub server: usize,
    pub message: usize,
    pub query: Query,
    pub count: u64,
    /// `count / trials`, the joint frequency of (requested message, query).
    pub frequency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub trials: u64,
    pub seed: u64,
    pub message_seed: u64,
    pub success_rate: f64,
    /// Mean downloaded symbols per message symbol.
    pub empirical_download: f64,
    pub download_std_error: f64,
    /// Mean download per requested message, `None` where `k` never came up.
    pub per_message_download: Vec<Option<f64>>,
    pub theoretical_download: f64,
    pub empirical_query_freq: Vec<QueryFrequency>,
    /// Largest |observed - exact| joint frequency over all cells, when the
    /// exact law could be enumerated.
    pub max_freq_deviation: Option<f64>,
    /// Whether every cell lies within `4 sqrt(p (1 - p) / trials)` of its
    /// exact probability.
    pub freq_within_bound: Option<bool>,
}

#[derive(Debug, Clone, Default)]
struct Tally {
    trials: u64,
    successes: u64,
    symbols: u64,
    symbols_sq: u128,
    per_message: Vec<(u64, u64)>,
    queries: HashMap<(usize, usize, Query), u64>,
    /// Earliest trial whose decoder returned an error.
    decode_error: Option<(u64, String)>,
}

impl Tally {
    fn new(messages: usize) -> Self {
        Self {
            per_message: vec![(0, 0); messages],
            ..Default::default()
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.trials += other.trials;
        self.successes += other.successes;
        self.symbols += other.symbols;
        self.symbols_sq += other.symbols_sq;
        for (a, b) in self.per_message.iter_mut().zip(other.per_message) {
            a.0 += b.0;
            a.1 += b.1;
        }
        for (key, count) in other.queries {
            *self.queries.entry(key).or_insert(0) += count;
        }
        self.decode_error = match (self.decode_error, other.decode_error) {
            (Some(a), Some(b)) => Some(if a.0 <= b.0 { a } else { b }),
            (a, b) => a.or(b),
        };
        self
    }
}

/// Randomness for trial `trial`: the master seed's ChaCha8 stream number `trial`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

pub fn run_simulation(config: &SimConfig) -> Result<SimReport> {
    run_simulation_with(config, Exec::default())
}

pub fn run_simulation_with(config: &SimConfig, exec: Exec) -> Result<SimReport> {
    if config.trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    let scheme = &config.scheme;
    let params = *scheme.params();
    let store = MessageStore::random(&params, &mut ChaCha8Rng::seed_from_u64(config.message_seed));
    let servers: Vec<LocalServer> = (0..params.servers())
        .map(|_| LocalServer::new(store.clone()))
        .collect();

    let tally = exec.fold_range(
        config.trials,
        || Tally::new(params.messages()),
        |mut tally, trial| {
            let mut rng = trial_rng(config.seed, trial);
            let k = rng.random_range(1..=params.messages());
            let key = sample_key(&params, scheme.dist(), &mut rng);
            let queries = scheme.queries(k, &key);
            let answers: Vec<Answer> = servers
                .iter()
                .zip(&queries)
                .map(|(server, q)| server.answer(q))
                .collect();
            let symbols: u64 = answers.iter().map(|a| a.len() as u64).sum();
            let ok = match scheme.decode(k, &key, &answers) {
                Ok(m) => m == store.message(k),
                Err(e) => {
                    if tally.decode_error.is_none() {
                        tally.decode_error = Some((trial, e.to_string()));
                    }
                    false
                }
            };

            tally.trials += 1;
            tally.successes += ok as u64;
            tally.symbols += symbols;
            tally.symbols_sq += (symbols as u128).pow(2);
            tally.per_message[k - 1].0 += 1;
            tally.per_message[k - 1].1 += symbols;
            for (n, q) in queries.into_iter().enumerate() {
                *tally.queries.entry((n + 1, k, q)).or_insert(0) += 1;
            }
            tally
        },
        Tally::merge,
    );

    if let Some((trial, msg)) = tally.decode_error {
        return Err(Error::MalformedAnswers(format!("trial {trial}: {msg}")));
    }
    let trials = tally.trials as f64;
    let len = params.message_len() as f64;
    let mean_symbols = tally.symbols as f64 / trials;
    let variance = if tally.trials > 1 {
        let sum = tally.symbols as f64;
        ((tally.symbols_sq as f64 - sum * sum / trials) / (trials - 1.0)).max(0.0)
    } else {
        0.0
    };

    let mut empirical_query_freq: Vec<QueryFrequency> = tally
        .queries
        .into_iter()
        .map(|((server, message, query), count)| QueryFrequency {
            server,
            message,
            query,
            count,
            frequency: count as f64 / trials,
        })
        .collect();
    empirical_query_freq
        .sort_by(|a, b| (a.server, a.message, &a.query).cmp(&(b.server, b.message, &b.query)));

    let mut report = SimReport {
        trials: tally.trials,
        seed: config.seed,
        message_seed: config.message_seed,
        success_rate: tally.successes as f64 / trials,
        empirical_download: mean_symbols / len,
        download_std_error: (variance / trials).sqrt() / len,
        per_message_download: tally
            .per_message
            .iter()
            .map(|&(count, symbols)| (count > 0).then(|| symbols as f64 / count as f64 / len))
            .collect(),
        theoretical_download: scheme.download_cost().cost,
        empirical_query_freq,
        max_freq_deviation: None,
        freq_within_bound: None,
    };
    if params.check_enumerable().is_ok() {
        let cmp = compare_with_law(scheme, &report)?;
        report.max_freq_deviation = Some(cmp.max_deviation);
        report.freq_within_bound = Some(cmp.within_bound);
    }
    Ok(report)
}

/// Observed query frequencies against the exact enumerated law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawComparison {
    pub max_deviation: f64,
    /// Largest deviation in units of the cell's binomial standard deviation
    /// (zero-probability cells count as infinite if ever observed).
    pub max_sigma: f64,
    pub within_bound: bool,
    pub cells: usize,
}

/// Compares the joint frequencies of (requested message, query) at every
/// server with `P(k) P(q | k)` from enumeration, `k` uniform.
pub fn compare_with_law(scheme: &WpirScheme, report: &SimReport) -> Result<LawComparison> {
    let params = scheme.params();
    let trials = report.trials as f64;
    let kk = params.messages() as f64;
    let laws = (1..=params.servers())
        .map(|n| enumerate_query_law(scheme, n))
        .collect::<Result<Vec<_>>>()?;
    let mut observed: HashMap<(usize, usize, &Query), u64> = HashMap::new();
    for f in &report.empirical_query_freq {
        observed.insert((f.server, f.message, &f.query), f.count);
    }

    let mut max_deviation: f64 = 0.0;
    let mut max_sigma: f64 = 0.0;
    let mut within_bound = true;
    let mut cells = 0;
    for (law, n) in laws.iter().zip(1..) {
        for k in 1..=params.messages() {
            for (q, p_cond) in law.conditional(k) {
                let p = p_cond / kk;
                let count = observed.remove(&(n, k, q)).unwrap_or(0);
                cells += 1;
                let dev = (count as f64 / trials - p).abs();
                let sd = (p * (1.0 - p) / trials).sqrt();
                let sigma = match (sd > 0.0, dev > 0.0) {
                    (true, _) => dev / sd,
                    (false, true) => f64::INFINITY,
                    (false, false) => 0.0,
                };
                max_deviation = max_deviation.max(dev);
                max_sigma = max_sigma.max(sigma);
                within_bound &= dev <= 4.0 * sd;
            }
        }
    }
    // Whatever is left was observed outside the exact support.
    for count in observed.into_values() {
        cells += 1;
        max_deviation = max_deviation.max(count as f64 / trials);
        max_sigma = f64::INFINITY;
        within_bound = false;
    }
    Ok(LawComparison {
        max_deviation,
        max_sigma,
        within_bound,
        cells,
    })
}

/// Runs the simulation and compares its query frequencies with the exact law.
pub fn empirical_vs_theoretical_law(config: &SimConfig) -> Result<LawComparison> {
    let report = run_simulation(config)?;
    compare_with_law(&config.scheme, &report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PatternDistribution, SystemParams};
    use crate::optimizer::solve_maxl;

    fn scheme(dist: impl Fn(&SystemParams) -> PatternDistribution) -> WpirScheme {
        let p = SystemParams::new(3, 2).unwrap();
        WpirScheme::new(p, dist(&p)).unwrap()
    }

    #[test]
    fn zero_trials_rejected() {
        let cfg = SimConfig::new(scheme(PatternDistribution::uniform), 0);
        assert!(run_simulation(&cfg).is_err());
    }

    #[test]
    fn pure_direct_costs_exactly_one() {
        let cfg = SimConfig::new(scheme(PatternDistribution::pure_direct), 2_000);
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert_eq!(r.empirical_download, 1.0);
        assert_eq!(r.download_std_error, 0.0);
        assert_eq!(r.freq_within_bound, Some(true));
    }

    #[test]
    fn deterministic_per_seed_and_schedule() {
        let s = scheme(|p| solve_maxl(p, 0.2).unwrap());
        let cfg = SimConfig::new(s, 5_000).with_seed(42);
        let a = run_simulation_with(&cfg, Exec::Parallel).unwrap();
        let b = run_simulation_with(&cfg, Exec::Sequential).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, run_simulation(&cfg).unwrap());
        let c = run_simulation(&cfg.clone().with_seed(43)).unwrap();
        assert_ne!(a.empirical_download, c.empirical_download);
    }

    #[test]
    fn uniform_scheme_matches_capacity() {
        let cfg = SimConfig::new(scheme(PatternDistribution::uniform), 20_000);
        let r = run_simulation(&cfg).unwrap();
        assert_eq!(r.success_rate, 1.0);
        assert!((r.empirical_download - 4.0 / 3.0).abs() <= 3.0 * r.download_std_error);
        assert_eq!(r.freq_within_bound, Some(true));
    }

    #[test]
    fn law_comparison_flags_wrong_scheme() {
        // simulate one scheme, compare against another
        let sim = SimConfig::new(scheme(PatternDistribution::pure_direct), 5_000);
        let r = run_simulation(&sim).unwrap();
        let cmp = compare_with_law(&scheme(PatternDistribution::uniform), &r).unwrap();
        assert!(!cmp.within_bound);
    }
}
