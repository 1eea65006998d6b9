//! Small hand-built scenarios with known outcomes.

use crate::engine::Scenario;
use crate::graph::CommGraph;
use crate::lattice::{Partition, Profile};
use crate::messages::{Message, MessageFunction};
use crate::symbolic::{InfiniteBlock, PeriodicPartition, SymbolicProfile, SymbolicScenario};

fn part(blocks: &[&[usize]], n: usize) -> Partition {
    Partition::from_blocks(&blocks.iter().map(|b| b.to_vec()).collect::<Vec<_>>(), n)
        .expect("fixture partition")
}

fn lookup(n: usize, a_blocks: &[&[usize]]) -> MessageFunction {
    let (a, b) = (Message::token("a"), Message::token("b"));
    let entries = (1u64..1 << n)
        .map(|bits| {
            let block: Vec<usize> = (0..n).filter(|&x| bits >> x & 1 == 1).collect();
            let msg = if a_blocks.contains(&block.as_slice()) { a.clone() } else { b.clone() };
            (block, msg)
        })
        .collect();
    MessageFunction::lookup(n, entries).expect("fixture lookup table")
}

/// Over states `x, y, w, z = 0..3`: `f({x}) = f({x,y}) = a`, `b` elsewhere.
/// With it the update map is inflationary but not monotone.
pub fn nonmonotone_message_function() -> MessageFunction {
    lookup(4, &[&[0], &[0, 1]])
}

/// Two agents talking both ways, starting from `({X}, singletons)`.
pub fn nonmonotone_scenario() -> Scenario {
    let initial = Profile::new(vec![Partition::trivial(4), Partition::singletons(4)])
        .expect("two agents");
    let labels = ["x", "y", "w", "z"].map(String::from).to_vec();
    Scenario::new(
        vec!["1".into(), "2".into()],
        labels,
        initial,
        nonmonotone_message_function(),
        CommGraph::complete(2),
        None,
    )
    .expect("valid fixture")
}

/// `f({x}) = f({y}) = a`, `f({x,y}) = b`, with one agent fully informed and
/// the other knowing nothing: the message profile is common knowledge and the
/// working partitions agree, yet the message functions differ.
pub fn stp_counterexample_first() -> (Profile, MessageFunction) {
    let p = Profile::new(vec![Partition::singletons(2), Partition::trivial(2)]).expect("two agents");
    (p, lookup(2, &[&[0], &[1]]))
}

/// `f({x}) = f({y}) = a`, `f({z}) = f({x,y}) = b` (and `b` on the unused
/// blocks): common knowledge of the messages holds, but neither the message
/// functions nor the working partitions agree.
pub fn stp_counterexample_second() -> (Profile, MessageFunction) {
    let p = Profile::new(vec![Partition::singletons(3), part(&[&[0, 1], &[2]], 3)])
        .expect("two agents");
    (p, lookup(3, &[&[0], &[1]]))
}

/// Three nested partitions; the best-informed agent tells the other two.
pub fn most_informed_broadcaster() -> Scenario {
    let initial = Profile::new(vec![
        Partition::trivial(6),
        part(&[&[0, 1], &[2, 3], &[4, 5]], 6),
        part(&[&[0], &[1], &[2, 3], &[4, 5]], 6),
    ])
    .expect("three agents");
    let graph = CommGraph::new(3, [(2, 0), (2, 1)]).expect("valid graph");
    Scenario::new(
        vec!["1".into(), "2".into(), "3".into()],
        (0..6).map(|x| x.to_string()).collect(),
        initial,
        MessageFunction::KnownState,
        graph,
        None,
    )
    .expect("valid fixture")
}

fn pp(m: u64, ex: &[&[u64]], tpl: &[&[u64]], inf: &[&[u64]]) -> PeriodicPartition {
    PeriodicPartition::new(
        m,
        ex.iter().map(|b| b.to_vec()).collect(),
        tpl.iter().map(|o| o.to_vec()).collect(),
        inf.iter().map(|s| InfiniteBlock { finite: vec![], starts: s.to_vec() }).collect(),
    )
    .expect("fixture partition")
}

/// Initial partition of A over the positive integers.
pub fn integers_a() -> PeriodicPartition {
    pp(4, &[&[1, 2, 7], &[3, 4], &[5]], &[&[6, 9], &[8, 11]], &[])
}

/// Initial partition of B: consecutive pairs.
pub fn integers_b() -> PeriodicPartition {
    pp(4, &[], &[&[1, 2], &[3, 4]], &[])
}

/// Initial partition of C: residue classes mod 4.
pub fn integers_c() -> PeriodicPartition {
    pp(4, &[], &[], &[&[1], &[2], &[3], &[4]])
}

/// A, B and C on the positive integers; B talks with both A and C, who do
/// not talk with each other. Everyone announces the true state once known.
pub fn integers_scenario() -> SymbolicScenario {
    let profile = SymbolicProfile::new(vec![integers_a(), integers_b(), integers_c()])
        .expect("three agents");
    SymbolicScenario::new(
        vec!["A".into(), "B".into(), "C".into()],
        integers_graph(),
        profile,
        Some(4),
    )
    .expect("valid fixture")
}

pub fn integers_graph() -> CommGraph {
    CommGraph::new(3, [(0, 1), (1, 0), (1, 2), (2, 1)]).expect("valid graph")
}

/// The integer scenario cut down to states `1..=n` (indices `0..n`).
pub fn integers_truncated(n: u64) -> Scenario {
    let sc = integers_scenario();
    let labels = (1..=n).map(|x| x.to_string()).collect();
    let true_state = sc.true_state.filter(|&x| x <= n).map(|x| (x - 1) as usize);
    Scenario::new(
        sc.agents.clone(),
        labels,
        sc.initial.restrict(n),
        MessageFunction::KnownState,
        sc.graph.clone(),
        true_state,
    )
    .expect("valid fixture")
}

/// Same truncation with the maximin message function whose only sure payoff
/// is naming the true state.
pub fn integers_truncated_maximin(n: u64) -> Scenario {
    let mut sc = integers_truncated(n);
    let labels: Vec<i64> = (1..=n as i64).collect();
    sc.message_function = MessageFunction::maximin_matching(&labels);
    sc
}
