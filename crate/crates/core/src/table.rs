//! Query tables: every key of a scheme with the query and the symbolic answer
//! each server sees when message `k` is requested.
//!
//! Messages are lettered `a, b, c, ..` and symbols carry 1-based subscripts,
//! so the answer to the query `21` for `K = 2` renders as `a_2⊕b_1`. Beyond 26
//! messages the letter becomes `W{m}`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    key_weight, KeyClass, KeySpace, PatternDistribution, Query, RandomKey, SystemParams,
};
use crate::wpir::WpirScheme;

/// Largest key space a table is rendered for.
pub const TABLE_KEY_LIMIT: u64 = 100_000;

/// One key of the table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TableRow {
    /// Probability class, `p'_0` or `p_w`.
    pub class: String,
    /// Direct keys: the serving server. TSC keys: the interference digits
    /// followed by the shift.
    pub key: String,
    pub queries: Vec<String>,
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTable {
    pub servers: usize,
    pub messages: usize,
    /// Requested message, 1-based.
    pub message: usize,
    pub rows: Vec<TableRow>,
}

fn letter(m: usize) -> String {
    if m <= 26 {
        char::from(b'a' + (m - 1) as u8).to_string()
    } else {
        format!("W{m}")
    }
}

fn digits(values: &[u32], servers: usize) -> String {
    let parts: Vec<String> = values.iter().map(u32::to_string).collect();
    if servers <= 10 {
        parts.concat()
    } else {
        parts.join(",")
    }
}

/// Renders a query: `#_k` for a direct request, the digit string otherwise.
pub fn render_query(params: &SystemParams, query: &Query) -> String {
    match query {
        Query::Direct { message } => format!("#_{message}"),
        Query::Vector(d) => digits(d, params.servers()),
    }
}

/// Symbolic answer to `query`: `∅`, a comma-separated message, or the XOR of
/// one symbol per nonzero digit.
pub fn render_answer(params: &SystemParams, query: &Query) -> String {
    match query {
        Query::Direct { message } => (1..=params.message_len())
            .map(|i| format!("{}_{i}", letter(*message)))
            .collect::<Vec<_>>()
            .join(","),
        q if q.is_zero() => "∅".to_string(),
        Query::Vector(d) => d
            .iter()
            .enumerate()
            .filter(|(_, &x)| x != 0)
            .map(|(m, x)| format!("{}_{x}", letter(m + 1)))
            .collect::<Vec<_>>()
            .join("⊕"),
    }
}

fn class_label(key: &RandomKey) -> String {
    match key_weight(key) {
        KeyClass::Direct => "p'_0".to_string(),
        KeyClass::Weight(w) => format!("p_{w}"),
    }
}

fn key_label(params: &SystemParams, key: &RandomKey) -> String {
    match key {
        RandomKey::Direct { server } => server.to_string(),
        RandomKey::Tsc(t) => {
            let mut all = t.interference.clone();
            all.push(t.shift);
            digits(&all, params.servers())
        }
    }
}

/// Builds the table for message `k`: direct keys first, then TSC keys in
/// key-space order.
pub fn query_table(params: &SystemParams, k: usize) -> Result<QueryTable> {
    if !(1..=params.messages()).contains(&k) {
        return Err(Error::InvalidArgument(format!(
            "message index {k} outside 1..={}",
            params.messages()
        )));
    }
    let space = KeySpace::new(params)?;
    if space.len() > TABLE_KEY_LIMIT {
        return Err(Error::TooLarge {
            size: space.len() as u128,
            limit: TABLE_KEY_LIMIT,
        });
    }
    // Queries do not depend on the key probabilities.
    let scheme = WpirScheme::new(*params, PatternDistribution::uniform(params))?;
    let rows = space
        .iter()
        .map(|key| {
            let queries = scheme.queries(k, &key);
            TableRow {
                class: class_label(&key),
                key: key_label(params, &key),
                queries: queries.iter().map(|q| render_query(params, q)).collect(),
                answers: queries.iter().map(|q| render_answer(params, q)).collect(),
            }
        })
        .collect();
    Ok(QueryTable {
        servers: params.servers(),
        messages: params.messages(),
        message: k,
        rows,
    })
}

impl QueryTable {
    /// Plain-text rendering with aligned columns.
    pub fn to_text(&self) -> String {
        let mut header = vec!["P(F)".to_string(), "F".to_string()];
        for n in 1..=self.servers {
            header.push(format!("Q_{n}"));
            header.push(format!("A_{n}"));
        }
        let cells: Vec<Vec<String>> = std::iter::once(header)
            .chain(self.rows.iter().map(|r| {
                let mut line = vec![r.class.clone(), r.key.clone()];
                for (q, a) in r.queries.iter().zip(&r.answers) {
                    line.push(q.clone());
                    line.push(a.clone());
                }
                line
            }))
            .collect();
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| {
                cells
                    .iter()
                    .map(|l| l[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();

        let mut out = format!(
            "N={} K={} retrieving message {}\n",
            self.servers, self.messages, self.message
        );
        for line in &cells {
            let padded: Vec<String> = line
                .iter()
                .zip(&widths)
                .map(|(s, &w)| format!("{s}{}", " ".repeat(w - s.chars().count())))
                .collect();
            let _ = writeln!(out, "{}", padded.join("  ").trim_end());
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}
