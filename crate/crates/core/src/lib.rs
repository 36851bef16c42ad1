//! Weakly private information retrieval (W-PIR) with a single-server direct
//! download pattern.
//!
//! `N` servers each hold the same `K` messages of `L = N - 1` symbols. The
//! code mixes the capacity-achieving TSC retrieval patterns with a pattern that
//! fetches the whole message from one server. The crate provides
//!
//! * the code itself ([`tsc`], [`wpir`]),
//! * exact maximal-leakage and mutual-information leakage by enumeration,
//!   with the closed forms as an independent route ([`leakage`]),
//! * the optimal key distributions for both metrics and the resulting
//!   rate-leakage tradeoff curves ([`optimizer`]),
//! * a seeded Monte-Carlo harness that runs full retrievals against
//!   in-process servers ([`sim`]),
//! * query-table rendering and an oracle self-check suite ([`table`], [`verify`]).
//!
//! Data-parallel loops use rayon when the `parallel` feature is enabled (the
//! default); see [`Exec`].

pub mod error;
pub mod exec;
pub mod leakage;
pub mod model;
pub mod optimizer;
pub mod sim;
pub mod table;
pub mod tsc;
pub mod verify;
pub mod wpir;

pub use error::{Error, Result};
pub use exec::Exec;
pub use leakage::{
    analytic_mi, enumerate_query_law, leakage_report, maximal_leakage, mutual_info_leakage,
    LeakageReport, Metric, QueryLaw,
};
pub use model::{
    key_probability, key_weight, sample_key, Answer, KeyClass, KeySpace, MessageStore,
    PatternDistribution, Query, RandomKey, Symbol, SystemParams, TscKey,
};
pub use optimizer::{Provenance, TradeoffPoint};
pub use sim::{run_simulation, SimConfig, SimReport};
pub use wpir::{DownloadCost, WpirScheme};
