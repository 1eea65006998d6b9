//! The common message function, per-agent message vectors and working partitions.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::{Event, Partition, StateId};

/// Exhaustive union-consistency checks run up to this many states.
pub const EXHAUSTIVE_LIMIT: usize = 12;
/// Random disjoint pairs drawn when the state set is too large for enumeration.
pub const SAMPLED_PAIRS: usize = 100_000;

/// A message. No floating point values exist anywhere in the model.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Message {
    Int(i64),
    Rational(BigRational),
    Token(String),
}

impl Message {
    pub fn token(s: impl Into<String>) -> Self {
        Message::Token(s.into())
    }

    /// The token sent by `known_state` when the sender knows state `k`.
    pub fn known(k: impl fmt::Display) -> Self {
        Message::Token(format!("state:{k}"))
    }

    pub fn unknown() -> Self {
        Message::Token("unknown".to_string())
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Message::Int(i) => write!(f, "{i}"),
            Message::Rational(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            Message::Token(t) => write!(f, "{t}"),
        }
    }
}

pub fn rational(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// The common map from non-empty state sets to messages.
#[derive(Clone, Debug, PartialEq)]
pub enum MessageFunction {
    /// `state:k` on a singleton `{k}`, `unknown` otherwise.
    KnownState,
    /// Action maximizing the worst-case utility over the block. `utility[a][k]`
    /// is the payoff of `actions[a]` in state `k`.
    Maximin { actions: Vec<i64>, utility: Vec<Vec<Option<BigRational>>> },
    /// Posterior probability of `event` given the block.
    Posterior { prior: Vec<BigRational>, event: Event },
    /// Mean payoff over the block.
    ExpectedValue { payoffs: Vec<BigRational> },
    /// Canonical encoding of the block itself.
    Injective,
    /// Explicit table over every non-empty subset, indexed by bitmask.
    Lookup { num_states: usize, table: Vec<Message> },
}

impl MessageFunction {
    pub fn family(&self) -> &'static str {
        match self {
            MessageFunction::KnownState => "known_state",
            MessageFunction::Maximin { .. } => "maximin",
            MessageFunction::Posterior { .. } => "posterior",
            MessageFunction::ExpectedValue { .. } => "expected_value",
            MessageFunction::Injective => "injective",
            MessageFunction::Lookup { .. } => "lookup",
        }
    }

    /// The maximin rule with the matching-action utility: action `d` pays 1 in the
    /// state labelled `d`, action 0 always pays 0, every other action pays -1.
    pub fn maximin_matching(state_labels: &[i64]) -> Self {
        let mut actions = vec![0];
        actions.extend(state_labels.iter().copied());
        let utility = actions
            .iter()
            .map(|&d| {
                state_labels
                    .iter()
                    .map(|&k| {
                        Some(BigRational::from_integer(BigInt::from(if d == 0 {
                            0
                        } else if d == k {
                            1
                        } else {
                            -1
                        })))
                    })
                    .collect()
            })
            .collect();
        MessageFunction::Maximin { actions, utility }
    }

    /// Builds a lookup table from `(block, message)` pairs; every non-empty
    /// subset must appear exactly once.
    pub fn lookup(num_states: usize, entries: Vec<(Vec<StateId>, Message)>) -> Result<Self> {
        if num_states > EXHAUSTIVE_LIMIT {
            return Err(Error::SizeLimitExceeded { limit: EXHAUSTIVE_LIMIT, size: num_states });
        }
        let mut table: Vec<Option<Message>> = vec![None; 1 << num_states];
        for (block, msg) in entries {
            let ev = Event::from_states(num_states, &block)?;
            if ev.is_empty() {
                return Err(Error::EmptyBlock);
            }
            let slot = &mut table[ev.bits() as usize];
            if slot.is_some() {
                return Err(Error::Invalid(format!("duplicate lookup entry for {block:?}")));
            }
            *slot = Some(msg);
        }
        let mut out = Vec::with_capacity(table.len());
        out.push(Message::unknown());
        for (bits, m) in table.into_iter().enumerate().skip(1) {
            let m = m.ok_or_else(|| {
                Error::Invalid(format!(
                    "lookup table misses block {:?}",
                    Event::from_bits(num_states, bits as u64).to_vec()
                ))
            })?;
            out.push(m);
        }
        Ok(MessageFunction::Lookup { num_states, table: out })
    }

    pub fn evaluate(&self, block: &Event) -> Result<Message> {
        if block.is_empty() {
            return Err(Error::EmptyBlock);
        }
        match self {
            MessageFunction::KnownState => {
                let mut it = block.states();
                let first = it.next().expect("non-empty");
                Ok(if it.next().is_none() { Message::known(first) } else { Message::unknown() })
            }
            MessageFunction::Maximin { actions, utility } => {
                let mut best: Option<(BigRational, i64)> = None;
                for (row, &d) in utility.iter().zip(actions) {
                    let mut worst: Option<BigRational> = None;
                    for k in block.states() {
                        let u = row
                            .get(k)
                            .cloned()
                            .flatten()
                            .ok_or(Error::UndefinedUtility { action: d, state: k })?;
                        if worst.as_ref().is_none_or(|w| u < *w) {
                            worst = Some(u);
                        }
                    }
                    let worst = worst.expect("non-empty");
                    let better = match &best {
                        None => true,
                        Some((v, id)) => worst > *v || (worst == *v && d < *id),
                    };
                    if better {
                        best = Some((worst, d));
                    }
                }
                best.map(|(_, d)| Message::Int(d))
                    .ok_or_else(|| Error::Invalid("maximin needs at least one action".into()))
            }
            MessageFunction::Posterior { prior, event } => {
                let mut mass = BigRational::zero();
                let mut hit = BigRational::zero();
                for k in block.states() {
                    let p = prior.get(k).ok_or(Error::Index { index: k, size: prior.len() })?;
                    mass += p;
                    if event.contains(k) {
                        hit += p;
                    }
                }
                if mass.is_zero() {
                    return Err(Error::ZeroMassBlock);
                }
                Ok(Message::Rational(hit / mass))
            }
            MessageFunction::ExpectedValue { payoffs } => {
                let mut total = BigRational::zero();
                let mut count = 0i64;
                for k in block.states() {
                    total += payoffs.get(k).ok_or(Error::Index { index: k, size: payoffs.len() })?;
                    count += 1;
                }
                Ok(Message::Rational(total / BigRational::from_integer(BigInt::from(count))))
            }
            MessageFunction::Injective => {
                let parts: Vec<String> = block.states().map(|k| k.to_string()).collect();
                Ok(Message::Token(format!("{{{}}}", parts.join(","))))
            }
            MessageFunction::Lookup { num_states, table } => {
                if block.num_states() != *num_states {
                    return Err(Error::SizeMismatch { left: *num_states, right: block.num_states() });
                }
                Ok(table[block.bits() as usize].clone())
            }
        }
    }

    /// The message each state sends under information `partition`; constant on blocks.
    pub fn message_vector(&self, partition: &Partition) -> Result<Vec<Message>> {
        let n = partition.num_states();
        let mut per_block = Vec::with_capacity(partition.num_blocks());
        for block in partition.blocks() {
            let ev = Event::from_states(n, &block)?;
            per_block.push(self.evaluate(&ev)?);
        }
        Ok(partition.labels().iter().map(|&l| per_block[l as usize].clone()).collect())
    }

    /// States grouped by the message they induce.
    pub fn working_partition(&self, partition: &Partition) -> Result<Partition> {
        Ok(Partition::from_labels(&self.message_vector(partition)?))
    }
}

/// Outcome of a union-consistency check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum UnionConsistency {
    Holds { exhaustive: bool, pairs_checked: u64 },
    /// `f(left) = f(right)` but `f(left ∪ right)` differs.
    Fails { left: Vec<StateId>, right: Vec<StateId> },
}

impl UnionConsistency {
    pub fn holds(&self) -> bool {
        matches!(self, UnionConsistency::Holds { .. })
    }
}

/// Checks every pair of disjoint non-empty subsets of `{0, .., N-1}`.
pub fn check_union_consistency_exhaustive(
    mf: &MessageFunction,
    num_states: usize,
) -> Result<UnionConsistency> {
    if num_states > EXHAUSTIVE_LIMIT {
        return Err(Error::SizeLimitExceeded { limit: EXHAUSTIVE_LIMIT, size: num_states });
    }
    let full: u32 = (1u32 << num_states) - 1;
    let mut ids: HashMap<Message, u32> = HashMap::new();
    let mut value = vec![u32::MAX; full as usize + 1];
    for bits in 1..=full {
        let m = mf.evaluate(&Event::from_bits(num_states, bits as u64))?;
        let next = ids.len() as u32;
        value[bits as usize] = *ids.entry(m).or_insert(next);
    }
    let mut pairs = 0u64;
    for s in 1..=full {
        let rest = full ^ s;
        let mut t = rest;
        while t != 0 {
            // each unordered pair once
            if t > s {
                pairs += 1;
                let v = value[s as usize];
                if value[t as usize] == v && value[(s | t) as usize] != v {
                    return Ok(UnionConsistency::Fails {
                        left: Event::from_bits(num_states, s as u64).to_vec(),
                        right: Event::from_bits(num_states, t as u64).to_vec(),
                    });
                }
            }
            t = (t - 1) & rest;
        }
    }
    Ok(UnionConsistency::Holds { exhaustive: true, pairs_checked: pairs })
}

/// Exhaustive up to [`EXHAUSTIVE_LIMIT`] states, otherwise a seeded sample of
/// [`SAMPLED_PAIRS`] random disjoint pairs.
pub fn check_union_consistency(mf: &MessageFunction, num_states: usize) -> Result<UnionConsistency> {
    if num_states <= EXHAUSTIVE_LIMIT {
        return check_union_consistency_exhaustive(mf, num_states);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_u64 ^ num_states as u64);
    let mut checked = 0u64;
    while checked < SAMPLED_PAIRS as u64 {
        let mut left = vec![false; num_states];
        let mut right = vec![false; num_states];
        for k in 0..num_states {
            match rng.gen_range(0..3) {
                0 => left[k] = true,
                1 => right[k] = true,
                _ => {}
            }
        }
        let (l, r) = (Event::from_mask(left), Event::from_mask(right));
        if l.is_empty() || r.is_empty() {
            continue;
        }
        checked += 1;
        let a = mf.evaluate(&l)?;
        if mf.evaluate(&r)? == a && mf.evaluate(&l.union(&r))? != a {
            return Ok(UnionConsistency::Fails { left: l.to_vec(), right: r.to_vec() });
        }
    }
    Ok(UnionConsistency::Holds { exhaustive: false, pairs_checked: checked })
}

/// A prior with every entry equal to `1/n`.
pub fn uniform_prior(n: usize) -> Vec<BigRational> {
    vec![BigRational::new(BigInt::one(), BigInt::from(n)); n]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(n: usize, s: &[usize]) -> Event {
        Event::from_states(n, s).unwrap()
    }

    fn part(blocks: &[&[usize]], n: usize) -> Partition {
        Partition::from_blocks(&blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>(), n).unwrap()
    }

    /// f({x}) = f({x,y}) = a, every other block b; states x,y,w,z = 0..4.
    fn nonmonotone_f() -> MessageFunction {
        let mut entries = Vec::new();
        for bits in 1u64..16 {
            let block = Event::from_bits(4, bits).to_vec();
            let m = if bits == 0b0001 || bits == 0b0011 { "a" } else { "b" };
            entries.push((block, Message::token(m)));
        }
        MessageFunction::lookup(4, entries).unwrap()
    }

    #[test]
    fn known_state_messages() {
        let f = MessageFunction::KnownState;
        assert_eq!(f.evaluate(&ev(6, &[4])).unwrap(), Message::known(4));
        assert_eq!(f.evaluate(&ev(6, &[3, 4])).unwrap(), Message::unknown());
        assert_eq!(f.evaluate(&Event::empty(6)), Err(Error::EmptyBlock));
    }

    #[test]
    fn maximin_matches_known_state_labels() {
        // labels 1..=6 for states 0..6
        let f = MessageFunction::maximin_matching(&[1, 2, 3, 4, 5, 6]);
        assert_eq!(f.evaluate(&ev(6, &[2, 3])).unwrap(), Message::Int(0));
        assert_eq!(f.evaluate(&ev(6, &[4])).unwrap(), Message::Int(5));
    }

    #[test]
    fn maximin_undefined_utility() {
        let f = MessageFunction::Maximin {
            actions: vec![0, 1],
            utility: vec![vec![Some(rational(0, 1)), None], vec![Some(rational(1, 1)); 2]],
        };
        assert_eq!(
            f.evaluate(&ev(2, &[0, 1])),
            Err(Error::UndefinedUtility { action: 0, state: 1 })
        );
    }

    #[test]
    fn posterior_exact() {
        let f = MessageFunction::Posterior { prior: uniform_prior(4), event: ev(4, &[0, 1]) };
        assert_eq!(f.evaluate(&ev(4, &[0, 2])).unwrap(), Message::Rational(rational(1, 2)));
        let g = MessageFunction::Posterior {
            prior: vec![rational(0, 1), rational(1, 1)],
            event: ev(2, &[0]),
        };
        assert_eq!(g.evaluate(&ev(2, &[0])), Err(Error::ZeroMassBlock));
    }

    #[test]
    fn message_vectors() {
        let f = MessageFunction::KnownState;
        let v = f.message_vector(&part(&[&[0], &[1, 2]], 3)).unwrap();
        assert_eq!(v, vec![Message::known(0), Message::unknown(), Message::unknown()]);
        let r = nonmonotone_f().message_vector(&part(&[&[0, 1], &[2, 3]], 4)).unwrap();
        let (a, b) = (Message::token("a"), Message::token("b"));
        assert_eq!(r, vec![a.clone(), a, b.clone(), b]);
        let t = f.message_vector(&Partition::trivial(5)).unwrap();
        assert!(t.iter().all(|m| *m == t[0]));
    }

    #[test]
    fn working_partitions() {
        let f = nonmonotone_f();
        let p2 = part(&[&[0, 1], &[2, 3]], 4);
        assert_eq!(f.working_partition(&p2).unwrap(), p2);
        assert_eq!(
            f.working_partition(&Partition::singletons(4)).unwrap(),
            part(&[&[0], &[1, 2, 3]], 4)
        );
        let g = stp_counterexample_first();
        assert_eq!(g.working_partition(&Partition::singletons(2)).unwrap(), Partition::trivial(2));
    }

    fn stp_counterexample_first() -> MessageFunction {
        MessageFunction::lookup(
            2,
            vec![
                (vec![0], Message::token("a")),
                (vec![1], Message::token("a")),
                (vec![0, 1], Message::token("b")),
            ],
        )
        .unwrap()
    }

    #[test]
    fn union_consistency_examples() {
        assert!(check_union_consistency(&MessageFunction::KnownState, 6).unwrap().holds());
        assert_eq!(
            check_union_consistency(&stp_counterexample_first(), 2).unwrap(),
            UnionConsistency::Fails { left: vec![0], right: vec![1] }
        );
        let post = MessageFunction::Posterior { prior: uniform_prior(4), event: ev(4, &[0, 1]) };
        assert!(check_union_consistency(&post, 4).unwrap().holds());
        assert!(matches!(
            check_union_consistency_exhaustive(&MessageFunction::KnownState, 13),
            Err(Error::SizeLimitExceeded { .. })
        ));
    }

    #[test]
    fn sampled_check_beyond_limit() {
        let r = check_union_consistency(&MessageFunction::KnownState, 14).unwrap();
        assert_eq!(r, UnionConsistency::Holds { exhaustive: false, pairs_checked: SAMPLED_PAIRS as u64 });
    }

    #[test]
    fn lookup_must_be_total() {
        assert!(MessageFunction::lookup(2, vec![(vec![0], Message::Int(1))]).is_err());
    }
}
