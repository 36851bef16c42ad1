//! Self-check suite: every closed form in the crate is compared against an
//! exhaustive enumeration at one `(N, K)`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::exec::Exec;
use crate::leakage::{
    analytic_mi, enumerate_query_law, leakage_report, maximal_leakage, mutual_info_leakage, Metric,
};
use crate::model::{key_probability, KeySpace, MessageStore, PatternDistribution, SystemParams};
use crate::optimizer::{
    kkt_residual, maxl_download_bound, maxl_rho_cap, p_from_x, solve_maxl, solve_x_recursion,
};
use crate::wpir::WpirScheme;

/// Tolerance for closed form vs enumeration.
pub const VERIFY_TOL: f64 = 1e-9;
/// Tolerance on KKT stationarity.
pub const KKT_TOL: f64 = 1e-6;

const MESSAGE_FILLS: u64 = 3;
const SAMPLED_DISTRIBUTIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub servers: usize,
    pub messages: usize,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.checks.iter().find(|c| !c.passed)
    }
}

/// A random distribution with class probabilities drawn in `(0.05, 1]` and
/// `direct_share` of the mass on the direct keys.
pub fn random_distribution<R: Rng + ?Sized>(
    params: &SystemParams,
    direct_share: f64,
    rng: &mut R,
) -> PatternDistribution {
    let raw: Vec<f64> = (0..params.messages())
        .map(|_| rng.random_range(0.05..=1.0))
        .collect();
    let unscaled: f64 = raw
        .iter()
        .enumerate()
        .map(|(w, r)| params.weight_class_size(w) * r)
        .sum();
    let scale = (1.0 - direct_share) / unscaled;
    PatternDistribution::new(
        params,
        direct_share / params.servers() as f64,
        raw.iter().map(|r| r * scale).collect(),
    )
    .expect("scaled to unit mass")
}

fn check(name: &str, passed: bool, detail: String) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Runs every check at `params`. Fails with `TooLarge` when the key space
/// cannot be enumerated.
pub fn run_checks(params: &SystemParams, seed: u64) -> Result<VerifyReport> {
    let space = KeySpace::new(params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let checks = vec![
        decode_exhaustive(params, &space, &mut rng)?,
        uniform_law(params)?,
        mi_analytic(params, &mut rng)?,
        maxl_closed_form(params)?,
        mi_extreme(params)?,
        kkt(params)?,
        server_symmetry(params, &mut rng)?,
        download_enumeration(params, &space, &mut rng)?,
    ];
    Ok(VerifyReport {
        servers: params.servers(),
        messages: params.messages(),
        seed,
        checks,
    })
}

fn decode_exhaustive(
    params: &SystemParams,
    space: &KeySpace,
    rng: &mut ChaCha8Rng,
) -> Result<CheckResult> {
    let scheme = WpirScheme::new(*params, PatternDistribution::uniform(params))?;
    let mut failures = 0u64;
    let mut runs = 0u64;
    for _ in 0..MESSAGE_FILLS {
        let store = MessageStore::random(params, rng);
        for k in 1..=params.messages() {
            failures += Exec::default().fold_range(
                space.len(),
                || 0u64,
                |bad, i| {
                    let key = space.key(i);
                    let answers: Vec<_> = scheme
                        .queries(k, &key)
                        .iter()
                        .map(|q| scheme.answer(q, &store))
                        .collect();
                    match scheme.decode(k, &key, &answers) {
                        Ok(m) if m == store.message(k) => bad,
                        _ => bad + 1,
                    }
                },
                |a, b| a + b,
            );
            runs += space.len();
        }
    }
    Ok(check(
        "decode_exhaustive",
        failures == 0,
        format!("{failures} failures in {runs} retrievals"),
    ))
}

fn uniform_law(params: &SystemParams) -> Result<CheckResult> {
    let scheme = WpirScheme::new(*params, PatternDistribution::uniform(params))?;
    let law = enumerate_query_law(&scheme, 1)?;
    let (maxl, mi) = (maximal_leakage(&law), mutual_info_leakage(&law));
    Ok(check(
        "uniform_query_law",
        maxl < VERIFY_TOL && mi < VERIFY_TOL,
        format!("maxl {maxl:e}, mi {mi:e}"),
    ))
}

fn mi_analytic(params: &SystemParams, rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for _ in 0..SAMPLED_DISTRIBUTIONS {
        let dist = random_distribution(params, 0.0, rng);
        let scheme = WpirScheme::new(*params, dist)?;
        let enumerated = mutual_info_leakage(&enumerate_query_law(&scheme, 1)?);
        worst = worst.max((analytic_mi(params, scheme.dist().p_weights()) - enumerated).abs());
    }
    Ok(check(
        "mi_analytic_vs_enumeration",
        worst <= VERIFY_TOL,
        format!("max deviation {worst:e}"),
    ))
}

fn maxl_closed_form(params: &SystemParams) -> Result<CheckResult> {
    let cap = maxl_rho_cap(params);
    let (mut leak_dev, mut cost_dev) = (0.0f64, 0.0f64);
    for i in 0..=5 {
        let rho = 1.2 * cap * i as f64 / 5.0;
        let scheme = WpirScheme::new(*params, solve_maxl(params, rho)?)?;
        let leak = maximal_leakage(&enumerate_query_law(&scheme, 1)?);
        leak_dev = leak_dev.max((leak - rho.min(cap)).abs());
        cost_dev =
            cost_dev.max((scheme.download_cost().cost - maxl_download_bound(params, rho)).abs());
    }
    Ok(check(
        "maxl_optimum_leakage_and_cost",
        leak_dev <= VERIFY_TOL && cost_dev <= VERIFY_TOL,
        format!("leakage deviation {leak_dev:e}, cost deviation {cost_dev:e}"),
    ))
}

fn mi_extreme(params: &SystemParams) -> Result<CheckResult> {
    let scheme = WpirScheme::new(*params, PatternDistribution::pure_direct(params))?;
    let mi = mutual_info_leakage(&enumerate_query_law(&scheme, 1)?);
    let expected = (params.messages() as f64).log2() / params.servers() as f64;
    Ok(check(
        "mi_direct_extreme_point",
        (mi - expected).abs() <= VERIFY_TOL,
        format!("enumerated {mi}, closed form {expected}"),
    ))
}

fn kkt(params: &SystemParams) -> Result<CheckResult> {
    let mut worst = 0.0f64;
    for i in 0..10 {
        let x_last = 10f64.powf(6.0 * i as f64 / 9.0);
        let x = solve_x_recursion(params, x_last)?;
        let dist = p_from_x(params, &x);
        worst = worst.max(kkt_residual(params, &x, dist.p_weights()).stationarity);
    }
    Ok(check(
        "kkt_stationarity",
        worst <= KKT_TOL,
        format!("max residual {worst:e}"),
    ))
}

fn server_symmetry(params: &SystemParams, rng: &mut ChaCha8Rng) -> Result<CheckResult> {
    let scheme = WpirScheme::new(*params, random_distribution(params, 0.3, rng))?;
    let mut symmetric = true;
    for metric in [Metric::MaxL, Metric::Mi] {
        symmetric &= leakage_report(&scheme, metric)?.servers_symmetric;
    }
    Ok(check(
        "server_symmetry",
        symmetric,
        format!("all {} servers see one law: {symmetric}", params.servers()),
    ))
}

fn download_enumeration(
    params: &SystemParams,
    space: &KeySpace,
    rng: &mut ChaCha8Rng,
) -> Result<CheckResult> {
    let scheme = WpirScheme::new(*params, random_distribution(params, 0.3, rng))?;
    let len = params.message_len() as f64;
    let mut worst = 0.0f64;
    for k in 1..=params.messages() {
        let expected: f64 = space
            .iter()
            .map(|key| {
                let symbols: usize = scheme
                    .queries(k, &key)
                    .iter()
                    .map(|q| q.answer_len(params))
                    .sum();
                key_probability(scheme.dist(), &key) * symbols as f64
            })
            .sum::<f64>()
            / len;
        worst = worst.max((expected - scheme.download_cost().cost).abs());
    }
    Ok(check(
        "download_enumeration",
        worst <= VERIFY_TOL,
        format!("max deviation {worst:e}"),
    ))
}
