//! The TSC base code with a uniformly random cyclic shift of the servers.
//!
//! Server `n` receives the interference digits with the desired-symbol index
//! `(U + n) mod N` spliced in at position `k`. Exactly one server, the one
//! with `(U + n) mod N = 0`, sees only interference; its answer is subtracted
//! from every other answer to recover `W_k`.

use crate::error::{Error, Result};
use crate::model::{Answer, MessageStore, Query, Symbol, SystemParams, TscKey};

/// Query for server `n` when retrieving message `k` under `key`.
pub fn tsc_query(params: &SystemParams, k: usize, key: &TscKey, n: usize) -> Query {
    assert!(
        (1..=params.messages()).contains(&k),
        "message index {k} out of range"
    );
    assert!(
        (1..=params.servers()).contains(&n),
        "server index {n} out of range"
    );
    let desired = desired_index(params, key, n);
    let mut digits = Vec::with_capacity(params.messages());
    digits.extend_from_slice(&key.interference[..k - 1]);
    digits.push(desired);
    digits.extend_from_slice(&key.interference[k - 1..]);
    Query::Vector(digits)
}

/// `(U + n) mod N`
fn desired_index(params: &SystemParams, key: &TscKey, n: usize) -> u32 {
    ((key.shift as usize + n) % params.servers()) as u32
}

/// The server whose query carries the dummy index for the desired message,
/// i.e. the `n` in `1..=N` with `(U + n) mod N = 0`.
pub fn interference_server(params: &SystemParams, shift: u32) -> usize {
    let n = params.servers();
    match (n - shift as usize % n) % n {
        0 => n,
        s => s,
    }
}

/// `W_1[q_1] ^ .. ^ W_K[q_K]`, or the empty answer for `0_K`.
pub fn tsc_answer(digits: &[u32], store: &MessageStore) -> Answer {
    if digits.iter().all(|&d| d == 0) {
        return Answer::default();
    }
    let sum = digits.iter().enumerate().fold(0, |acc: Symbol, (m, &d)| {
        acc ^ store.symbol(m + 1, d as usize)
    });
    Answer(vec![sum])
}

/// Recovers the `L` symbols of `W_k` from the per-server answers.
pub fn tsc_decode(
    params: &SystemParams,
    k: usize,
    key: &TscKey,
    answers: &[Answer],
) -> Result<Vec<Symbol>> {
    if answers.len() != params.servers() {
        return Err(Error::MalformedAnswers(format!(
            "expected {} answers, got {}",
            params.servers(),
            answers.len()
        )));
    }
    for (i, answer) in answers.iter().enumerate() {
        let expected = tsc_query(params, k, key, i + 1).answer_len(params);
        if answer.len() != expected {
            return Err(Error::MalformedAnswers(format!(
                "server {} returned {} symbols, expected {expected}",
                i + 1,
                answer.len()
            )));
        }
    }

    let n0 = interference_server(params, key.shift);
    // Empty exactly when the interference is all dummy symbols.
    let interference = answers[n0 - 1].0.first().copied().unwrap_or(0);
    let mut message = vec![0; params.message_len()];
    for n in (1..=params.servers()).filter(|&n| n != n0) {
        let index = desired_index(params, key, n) as usize;
        message[index - 1] = answers[n - 1].0[0] ^ interference;
    }
    Ok(message)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::KeySpace;
    use crate::model::RandomKey;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    const A1: u8 = 0x11;
    const A2: u8 = 0x12;
    const B1: u8 = 0x21;
    const B2: u8 = 0x22;

    fn table_setup() -> (SystemParams, MessageStore) {
        let p = SystemParams::new(3, 2).unwrap();
        let store = MessageStore::new(&p, vec![vec![A1, A2], vec![B1, B2]]).unwrap();
        (p, store)
    }

    fn key(interference: &[u32], shift: u32) -> TscKey {
        TscKey {
            interference: interference.to_vec(),
            shift,
        }
    }

    fn digits(q: Query) -> Vec<u32> {
        match q {
            Query::Vector(d) => d,
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn query_inserts_shifted_index_at_desired_position() {
        let (p, _) = table_setup();
        // interference digit 1, shift 0: queries 11, 21, 01
        let k = key(&[1], 0);
        let qs: Vec<_> = (1..=3).map(|n| digits(tsc_query(&p, 1, &k, n))).collect();
        assert_eq!(qs, vec![vec![1, 1], vec![2, 1], vec![0, 1]]);

        let p4 = SystemParams::new(3, 4).unwrap();
        let k = key(&[2, 0, 1], 1);
        assert_eq!(digits(tsc_query(&p4, 3, &k, 1)), vec![2, 0, 2, 1]);
    }

    #[test]
    fn zero_interference_and_dummy_shift_gives_zero_query() {
        let p = SystemParams::new(4, 3).unwrap();
        let k = key(&[0, 0], 1);
        let n0 = interference_server(&p, 1);
        assert_eq!(n0, 3);
        assert!(tsc_query(&p, 2, &k, n0).is_zero());
    }

    #[test]
    fn interference_server_wraps_to_last_server() {
        let p = SystemParams::new(3, 2).unwrap();
        assert_eq!(interference_server(&p, 0), 3);
        assert_eq!(interference_server(&p, 1), 2);
        assert_eq!(interference_server(&p, 2), 1);
    }

    #[test]
    fn query_map_is_bijective_for_each_server() {
        for (n, kk) in [(2, 2), (3, 2), (3, 3), (4, 3), (2, 4)] {
            let p = SystemParams::new(n, kk).unwrap();
            let space = KeySpace::new(&p).unwrap();
            for k in 1..=kk {
                for server in 1..=n {
                    let seen: BTreeSet<_> = space
                        .iter()
                        .filter_map(|key| match key {
                            RandomKey::Tsc(t) => Some(tsc_query(&p, k, &t, server)),
                            _ => None,
                        })
                        .collect();
                    assert_eq!(seen.len(), n.pow(kk as u32));
                }
            }
        }
    }

    #[test]
    fn answers_match_table_entries() {
        let (_, store) = table_setup();
        assert_eq!(tsc_answer(&[2, 1], &store), Answer(vec![A2 ^ B1]));
        assert_eq!(tsc_answer(&[0, 0], &store), Answer::default());
        assert_eq!(tsc_answer(&[1, 0], &store), Answer(vec![A1]));
    }

    #[test]
    fn decode_table_rows() {
        let (p, store) = table_setup();
        let answers = vec![
            Answer(vec![A1 ^ B1]),
            Answer(vec![A2 ^ B1]),
            Answer(vec![B1]),
        ];
        assert_eq!(
            tsc_decode(&p, 1, &key(&[1], 0), &answers).unwrap(),
            vec![A1, A2]
        );

        let answers = vec![Answer(vec![A1]), Answer(vec![A2]), Answer::default()];
        assert_eq!(
            tsc_decode(&p, 1, &key(&[0], 0), &answers).unwrap(),
            vec![A1, A2]
        );

        let k = key(&[0], 0);
        let answers: Vec<_> = (1..=3)
            .map(|n| tsc_answer(&digits(tsc_query(&p, 1, &k, n)), &store))
            .collect();
        assert_eq!(tsc_decode(&p, 1, &k, &answers).unwrap(), store.message(1));
    }

    #[test]
    fn decode_rejects_wrong_lengths() {
        let (p, _) = table_setup();
        let answers = vec![Answer(vec![1]), Answer(vec![2]), Answer(vec![3])];
        assert!(matches!(
            tsc_decode(&p, 1, &key(&[0], 0), &answers),
            Err(Error::MalformedAnswers(_))
        ));
        assert!(matches!(
            tsc_decode(&p, 1, &key(&[0], 0), &answers[..2]),
            Err(Error::MalformedAnswers(_))
        ));
    }

    #[test]
    fn decode_is_exhaustively_correct() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for (n, kk) in [(2, 2), (3, 2), (2, 3), (3, 3), (4, 3), (5, 2)] {
            let p = SystemParams::new(n, kk).unwrap();
            let store = MessageStore::random(&p, &mut rng);
            for key in KeySpace::new(&p).unwrap().iter() {
                let RandomKey::Tsc(t) = key else { continue };
                for k in 1..=kk {
                    let answers: Vec<_> = (1..=n)
                        .map(|s| tsc_answer(&digits(tsc_query(&p, k, &t, s)), &store))
                        .collect();
                    assert_eq!(tsc_decode(&p, k, &t, &answers).unwrap(), store.message(k));
                }
            }
        }
    }
}
