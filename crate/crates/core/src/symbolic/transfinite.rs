//! Transfinite dialogues over eventually periodic partitions.
//!
//! Successor stages apply the update map with the known-state message
//! function. Limit stages are only taken under a [`ShiftCertificate`]: a
//! verified self-similarity of the dialogue in which every `p` stages the
//! refinement frontier moves `s` states to the right while everything behind
//! it stays fixed. The limit is then read off a late finite stage on a window
//! the frontier has already passed and re-encoded as a periodic partition.

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::lattice::{Dsu, Partition, Profile};
use crate::messages::Message;
use crate::ordinal::Ordinal;
use crate::symbolic::periodic::PeriodicPartition;
use crate::trace::{DialogueTrace, StageFlags, StageKind, StageRecord};

/// Successor stages run inside one ω-block before a limit is attempted.
pub const SUCCESSOR_WINDOW: usize = 32;
/// Largest stage period tried by the certificate search.
pub const MAX_STAGE_PERIOD: usize = 8;
/// State shifts tried are `m, 2m, .., MAX_SHIFT_MULTIPLE·m`.
pub const MAX_SHIFT_MULTIPLE: u64 = 8;
/// Largest ω-coefficient a run may reach.
pub const MAX_LIMIT_JUMPS: u32 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicProfile {
    parts: Vec<PeriodicPartition>,
}

impl SymbolicProfile {
    pub fn new(parts: Vec<PeriodicPartition>) -> Result<Self> {
        if parts.len() < 2 {
            return Err(Error::TooFewAgents(parts.len()));
        }
        Ok(SymbolicProfile { parts })
    }

    pub fn parts(&self) -> &[PeriodicPartition] {
        &self.parts
    }

    pub fn get(&self, i: usize) -> &PeriodicPartition {
        &self.parts[i]
    }

    pub fn num_agents(&self) -> usize {
        self.parts.len()
    }

    /// Extensional equality of every component.
    pub fn equals(&self, other: &SymbolicProfile) -> bool {
        self.parts.len() == other.parts.len()
            && self.parts.iter().zip(&other.parts).all(|(a, b)| a.equals(b))
    }

    pub fn modulus(&self) -> u64 {
        self.parts.iter().fold(1, |l, p| l.lcm(&p.modulus()))
    }

    pub fn largest_constant(&self) -> u64 {
        self.parts.iter().map(PeriodicPartition::largest_constant).max().unwrap_or(0)
    }

    pub fn span(&self) -> u64 {
        self.parts.iter().map(PeriodicPartition::span).max().unwrap_or(0)
    }

    /// Restriction of every component to states `1..=n`.
    pub fn restrict(&self, n: u64) -> Profile {
        Profile::new(self.parts.iter().map(|p| p.restrict(n)).collect())
            .expect("at least two agents")
    }
}

/// A symbolic communication structure; the message function is always known-state.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicScenario {
    pub agents: Vec<String>,
    pub graph: CommGraph,
    pub initial: SymbolicProfile,
    pub true_state: Option<u64>,
}

impl SymbolicScenario {
    pub fn new(
        agents: Vec<String>,
        graph: CommGraph,
        initial: SymbolicProfile,
        true_state: Option<u64>,
    ) -> Result<Self> {
        if agents.len() != initial.num_agents() {
            return Err(Error::SizeMismatch { left: agents.len(), right: initial.num_agents() });
        }
        if graph.num_agents() != agents.len() {
            return Err(Error::SizeMismatch { left: agents.len(), right: graph.num_agents() });
        }
        if true_state == Some(0) {
            return Err(Error::Invalid("states start at 1".into()));
        }
        Ok(SymbolicScenario { agents, graph, initial, true_state })
    }
}

pub fn symbolic_apply_g(profile: &SymbolicProfile, graph: &CommGraph) -> Result<SymbolicProfile> {
    if graph.num_agents() != profile.num_agents() {
        return Err(Error::SizeMismatch { left: profile.num_agents(), right: graph.num_agents() });
    }
    let working: Vec<PeriodicPartition> =
        profile.parts.iter().map(PeriodicPartition::known_state_working_partition).collect();
    let mut next = Vec::with_capacity(profile.num_agents());
    for (i, own) in profile.parts.iter().enumerate() {
        let mut p = own.clone();
        for j in graph.senders(i)? {
            p = p.join(&working[j])?;
        }
        next.push(p);
    }
    SymbolicProfile::new(next)
}

/// Stage `base + period` is stage `base` with everything above `settled`
/// shifted right by `shift`, and the two stages agree on `[1, settled]`.
/// Indices are positions in the history of the current ω-block.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShiftCertificate {
    pub base_stage: usize,
    pub stage_period: usize,
    pub state_shift: u64,
    pub settled_bound: u64,
}

fn check_window(history: &[SymbolicProfile]) -> u64 {
    let h = history.iter().map(SymbolicProfile::largest_constant).max().unwrap_or(0);
    let span = history.iter().map(SymbolicProfile::span).max().unwrap_or(0);
    let l = history.iter().fold(1u64, |l, p| l.lcm(&p.modulus()));
    h + span + 2 * l + MAX_SHIFT_MULTIPLE * l
}

/// For each position, the next position carrying the same label.
fn next_same(labels: &[u32]) -> Vec<usize> {
    let mut last_seen = vec![usize::MAX; labels.len()];
    let mut next = vec![usize::MAX; labels.len()];
    for (x, &l) in labels.iter().enumerate().rev() {
        let slot = &mut last_seen[l as usize];
        next[x] = *slot;
        *slot = x;
    }
    next
}

/// `a` and `b` agree on `[1, d]`, and `a` on `(d, w]` is `b` on `(d+s, w+s]`
/// shifted down by `s`; blocks crossing `d` are cut there. Both sides are
/// given by [`next_same`], which determines a partition of a window.
fn shift_matches_on_window(a: &[usize], b: &[usize], d: u64, s: u64, w: u64) -> bool {
    let (d, s, w) = (d as usize, s as usize, w as usize);
    let inside = |n: usize, end: usize| (n < end).then_some(n);
    (0..d).all(|x| inside(a[x], d) == inside(b[x], d))
        && (d..w).all(|x| {
            inside(a[x], w).map(|n| n - x) == inside(b[x + s], w + s).map(|n| n - x - s)
        })
}

fn shift_matches_symbolically(a: &PeriodicPartition, b: &PeriodicPartition, d: u64, s: u64) -> bool {
    a.restrict(d) == b.restrict(d)
        && a.isolate_prefix(d).translate(s).equals(&b.isolate_prefix(d + s))
}

fn certificate_holds(history: &[SymbolicProfile], cert: &ShiftCertificate) -> bool {
    let Some(b) = history.get(cert.base_stage + cert.stage_period) else {
        return false;
    };
    let a = &history[cert.base_stage];
    let (d, s) = (cert.settled_bound, cert.state_shift);
    if s == 0 || cert.stage_period == 0 || a.equals(b) {
        return false;
    }
    let w = check_window(history).max(d + 1);
    a.parts.iter().zip(&b.parts).all(|(pa, pb)| {
        let la = next_same(pa.restrict(w + s).labels());
        let lb = next_same(pb.restrict(w + s).labels());
        shift_matches_on_window(&la, &lb, d, s, w)
            && shift_matches_symbolically(pa, pb, d, s)
    })
}

/// Searches stage periods, state shifts and settled bounds for a certificate,
/// preferring short periods, the most recent base stage and small shifts.
/// A candidate is accepted only if it also holds one period later.
pub fn detect_shift_certificate(history: &[SymbolicProfile]) -> Result<Option<ShiftCertificate>> {
    if history.len() < 4 {
        return Err(Error::Invalid(format!(
            "certificate search needs at least 4 stages, got {}",
            history.len()
        )));
    }
    let last = history.len() - 1;
    let w = check_window(history);
    let reach = w + MAX_SHIFT_MULTIPLE * history.iter().fold(1u64, |l, q| l.lcm(&q.modulus()));
    let next: Vec<Vec<Vec<usize>>> = history
        .iter()
        .map(|p| p.parts.iter().map(|q| next_same(q.restrict(reach).labels())).collect())
        .collect();
    for p in 1..=MAX_STAGE_PERIOD.min(last / 2) {
        for t0 in (0..=last - 2 * p).rev() {
            let (a, b) = (&history[t0], &history[t0 + p]);
            if a.equals(b) {
                continue;
            }
            let m = a.modulus().lcm(&b.modulus());
            for mult in 1..=MAX_SHIFT_MULTIPLE {
                let s = m * mult;
                if w + s > reach {
                    continue;
                }
                let d_max = a.largest_constant().max(b.largest_constant()) + s;
                for d in 0..=d_max.min(w - 1) {
                    let window_ok = (0..a.num_agents()).all(|i| {
                        shift_matches_on_window(&next[t0][i], &next[t0 + p][i], d, s, w)
                            && shift_matches_on_window(
                                &next[t0 + p][i],
                                &next[t0 + 2 * p][i],
                                d + s,
                                s,
                                w,
                            )
                    });
                    if !window_ok {
                        continue;
                    }
                    let cert = ShiftCertificate {
                        base_stage: t0,
                        stage_period: p,
                        state_shift: s,
                        settled_bound: d,
                    };
                    // the pattern must repeat once more before it is trusted
                    let repeat = ShiftCertificate {
                        base_stage: t0 + p,
                        settled_bound: d + s,
                        ..cert
                    };
                    if certificate_holds(history, &cert) && certificate_holds(history, &repeat) {
                        return Ok(Some(cert));
                    }
                }
            }
        }
    }
    Ok(None)
}

/// The join of every stage of the ω-block, built from a certified history.
pub fn limit_profile(
    history: &[SymbolicProfile],
    cert: &ShiftCertificate,
    graph: &CommGraph,
) -> Result<SymbolicProfile> {
    if !certificate_holds(history, cert) {
        return Err(Error::CertificateInvalid(format!("{cert:?}")));
    }
    let (p, s, d) = (cert.stage_period, cert.state_shift, cert.settled_bound);
    let start = &history[0];
    let span = history.iter().map(SymbolicProfile::span).max().unwrap_or(0);
    let period = history.iter().fold(s, |l, q| l.lcm(&q.modulus()));
    let window = 2 * (start.largest_constant() + s + period + span) + 8 * period;
    // stages until the frontier, which sits near `d` at the base stage, is past the window
    let strides = (window + span + 2 * s).saturating_sub(d).div_ceil(s) + 1;
    let settled_stage = cert.base_stage + p * strides as usize;

    let mut stages: Vec<SymbolicProfile> = history.to_vec();
    while stages.len() <= settled_stage + p {
        let next = symbolic_apply_g(stages.last().expect("non-empty"), graph)?;
        stages.push(next);
    }
    let settled = &stages[settled_stage];
    let later = &stages[settled_stage + p];
    if settled.restrict(window) != later.restrict(window) {
        return Err(Error::CertificateInvalid(format!(
            "stages {settled_stage} and {} still differ on [1, {window}]",
            settled_stage + p
        )));
    }
    let mut parts = Vec::with_capacity(settled.num_agents());
    for (i, part) in settled.parts.iter().enumerate() {
        let labels = part.restrict(window);
        let modulus = period.lcm(&part.modulus());
        let found = (0..=window / 4)
            .find_map(|h| PeriodicPartition::from_window(labels.labels(), h, modulus))
            .ok_or_else(|| {
                Error::CertificateInvalid(format!(
                    "agent {i}: settled window is not periodic with modulus {modulus}"
                ))
            })?;
        parts.push(found);
    }
    SymbolicProfile::new(parts)
}

/// Per-stage data of a symbolic trace.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicStage {
    pub profile: SymbolicProfile,
}

pub type SymbolicTrace = DialogueTrace<SymbolicStage>;

fn known_message(pp: &PeriodicPartition, x: u64) -> Message {
    if pp.is_singleton(x) {
        Message::known(x)
    } else {
        Message::unknown()
    }
}

/// Whether the profile of messages at `x` is common knowledge at `x`,
/// evaluated on a window wide enough to contain the meet-block of `x`
/// up to truncation effects beyond its margin.
fn message_profile_ck_windowed(profile: &SymbolicProfile, x: u64) -> bool {
    let margin = profile.largest_constant() + profile.span() + 2 * profile.modulus();
    let window = 2 * (x + margin) + 4 * profile.modulus();
    let restricted = profile.restrict(window);
    let singleton = |p: &Partition, y: usize| {
        let l = p.label_of(y);
        p.labels().iter().filter(|&&m| m == l).count() == 1
    };
    let xi = (x - 1) as usize;
    let status: Vec<bool> = restricted.parts().iter().map(|p| singleton(p, xi)).collect();
    let mut dsu = Dsu::new(window as usize);
    for p in restricted.parts() {
        let mut first: Vec<Option<usize>> = vec![None; p.num_blocks()];
        for (y, &l) in p.labels().iter().enumerate() {
            match first[l as usize] {
                None => first[l as usize] = Some(y),
                Some(r) => dsu.union(r, y),
            }
        }
    }
    let root = dsu.find(xi);
    let reliable = (window - margin) as usize;
    (0..reliable).filter(|&y| dsu.find(y) == root).all(|y| {
        restricted.parts().iter().zip(&status).all(|(p, &sx)| {
            // same message as at x: both known (then y == x) or both unknown
            let sy = singleton(p, y);
            if sx { y == xi } else { !sy }
        })
    })
}

fn symbolic_record(
    sc: &SymbolicScenario,
    ordinal: Ordinal,
    kind: StageKind,
    profile: SymbolicProfile,
    fixed_point: bool,
) -> StageRecord<SymbolicStage> {
    let working: Vec<PeriodicPartition> =
        profile.parts.iter().map(PeriodicPartition::known_state_working_partition).collect();
    let consensus = working.windows(2).all(|w| w[0].equals(&w[1]));
    let (true_messages, partial, ck) = match sc.true_state {
        Some(x) => {
            let at: Vec<Message> = profile.parts.iter().map(|p| known_message(p, x)).collect();
            let partial = at.windows(2).all(|w| w[0] == w[1]);
            (Some(at), Some(partial), Some(message_profile_ck_windowed(&profile, x)))
        }
        None => (None, None, None),
    };
    StageRecord {
        ordinal,
        kind,
        state: SymbolicStage { profile },
        true_messages,
        flags: StageFlags { consensus, partial_consensus: partial, ck_message_profile: ck, fixed_point },
    }
}

/// Runs successor stages, jumping to a limit stage after [`SUCCESSOR_WINDOW`]
/// stages without a fixed point, until the dialogue reaches `g(P) = P`.
pub fn run_transfinite(sc: &SymbolicScenario, budget: Ordinal) -> Result<SymbolicTrace> {
    let exceeded = || Error::OrdinalBudgetExceeded(budget.to_string());
    let mut trace = DialogueTrace::new();
    let mut ordinal = Ordinal::ZERO;
    let mut kind = StageKind::Initial;
    let mut current = sc.initial.clone();
    let mut block: Vec<SymbolicProfile> = Vec::new();
    loop {
        let next = symbolic_apply_g(&current, &sc.graph)?;
        let fixed = next.equals(&current);
        block.push(current.clone());
        trace.records.push(symbolic_record(sc, ordinal, kind, current, fixed));
        if fixed {
            return Ok(trace);
        }
        if block.len() > SUCCESSOR_WINDOW {
            block.push(next);
            let cert = detect_shift_certificate(&block)?
                .ok_or_else(|| Error::NoCertificateFound(ordinal.next_limit().to_string()))?;
            let limit = limit_profile(&block, &cert, &sc.graph)?;
            ordinal = ordinal.next_limit();
            if ordinal > budget || ordinal.limits > MAX_LIMIT_JUMPS {
                return Err(exceeded());
            }
            kind = StageKind::Limit;
            current = limit;
            block.clear();
        } else {
            ordinal = ordinal.succ();
            if ordinal > budget {
                return Err(exceeded());
            }
            kind = StageKind::Successor;
            current = next;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{integers_graph, integers_scenario};
    use crate::symbolic::periodic::InfiniteBlock;

    fn pp(m: u64, ex: &[&[u64]], tpl: &[&[u64]], inf: &[&[u64]]) -> PeriodicPartition {
        PeriodicPartition::new(
            m,
            ex.iter().map(|b| b.to_vec()).collect(),
            tpl.iter().map(|o| o.to_vec()).collect(),
            inf.iter().map(|s| InfiniteBlock { finite: vec![], starts: s.to_vec() }).collect(),
        )
        .unwrap()
    }

    fn history(n: usize) -> Vec<SymbolicProfile> {
        let sc = integers_scenario();
        let mut out = vec![sc.initial.clone()];
        for _ in 0..n {
            out.push(symbolic_apply_g(out.last().unwrap(), &sc.graph).unwrap());
        }
        out
    }

    #[test]
    fn first_rounds() {
        let h = history(2);
        assert!(h[1].get(0).equals(h[0].get(0)));
        assert!(h[1].get(2).equals(h[0].get(2)));
        assert!(h[1].get(1).is_singleton(5) && h[1].get(1).is_singleton(6));
        assert!(!h[0].get(1).is_singleton(5));
        let a2 = h[2].get(0);
        assert!(a2.is_singleton(6) && a2.is_singleton(9));
        let c2 = h[2].get(2);
        assert!(c2.is_singleton(5) && c2.is_singleton(6) && !c2.is_singleton(7));
        assert!(c2.block_of(9).unwrap().contains(1));
    }

    #[test]
    fn identical_partitions_are_stable() {
        let p = SymbolicProfile::new(vec![integers_scenario().initial.get(0).clone(); 3]).unwrap();
        assert!(symbolic_apply_g(&p, &integers_graph()).unwrap().equals(&p));
    }

    #[test]
    fn certificate_from_early_stages() {
        let h = history(6);
        let cert = detect_shift_certificate(&h[1..]).unwrap().unwrap();
        assert_eq!((cert.stage_period, cert.state_shift), (2, 4));
        assert!(matches!(detect_shift_certificate(&h[..2]), Err(Error::Invalid(_))));
        let still = vec![h[0].clone(); 6];
        let frozen = SymbolicProfile::new(vec![h[0].get(0).clone(); 2]).unwrap();
        assert_eq!(detect_shift_certificate(&vec![frozen; 5]).unwrap(), None);
        assert_eq!(detect_shift_certificate(&still).unwrap(), None);
    }

    #[test]
    fn first_limit() {
        let sc = integers_scenario();
        let h = history(SUCCESSOR_WINDOW);
        let cert = detect_shift_certificate(&h).unwrap().unwrap();
        let lim = limit_profile(&h, &cert, &sc.graph).unwrap();
        let a = pp(4, &[&[1, 2, 7], &[3, 4]], &[&[5], &[6], &[8, 11]], &[]);
        let b = pp(4, &[&[1, 2]], &[&[3, 4], &[5], &[6]], &[]);
        let c = pp(4, &[], &[&[1], &[2]], &[&[3], &[4]]);
        assert!(lim.equals(&SymbolicProfile::new(vec![a, b, c]).unwrap()), "{lim:?}");
        let bogus = ShiftCertificate { base_stage: 0, stage_period: 1, state_shift: 4, settled_bound: 0 };
        assert!(matches!(limit_profile(&h, &bogus, &sc.graph), Err(Error::CertificateInvalid(_))));
    }

    #[test]
    fn full_run_reaches_consensus_after_two_limits() {
        let sc = integers_scenario();
        let trace = run_transfinite(&sc, Ordinal::new(MAX_LIMIT_JUMPS, 0)).unwrap();
        assert_eq!(trace.fixed_point_ordinal(), Some(Ordinal::new(2, 2)));
        let last = trace.last();
        assert!(last.flags.consensus && last.flags.ck_message_profile == Some(true));
        for p in last.state.profile.parts() {
            assert!(p.equals(&PeriodicPartition::singletons()));
        }
        let w2 = trace.at(Ordinal::new(2, 0)).unwrap();
        assert_eq!(w2.kind, StageKind::Limit);
        let ab = pp(1, &[&[1], &[2], &[3, 4]], &[&[5]], &[]);
        let parts = w2.state.profile.parts();
        assert!(parts[0].equals(&ab) && parts[1].equals(&ab));
        assert!(parts[2].equals(&PeriodicPartition::singletons()));
        assert_eq!(w2.true_messages.as_ref().unwrap()[2], Message::known(4));
        // before the second limit everyone says the same thing at the true state,
        // but it is never common knowledge
        for r in trace.records.iter().filter(|r| r.ordinal < Ordinal::new(2, 0)) {
            assert_eq!(r.flags.partial_consensus, Some(true));
            assert_eq!(r.flags.ck_message_profile, Some(false));
            assert!(!r.flags.consensus);
        }
        assert!(trace.records.windows(2).all(|w| w[0].ordinal < w[1].ordinal));
    }

    #[test]
    fn ordinal_budget() {
        let sc = integers_scenario();
        assert!(matches!(
            run_transfinite(&sc, Ordinal::new(1, 0)),
            Err(Error::OrdinalBudgetExceeded(_))
        ));
        let same = SymbolicProfile::new(vec![sc.initial.get(1).clone(); 3]).unwrap();
        let sc2 = SymbolicScenario::new(sc.agents.clone(), sc.graph.clone(), same, None).unwrap();
        let trace = run_transfinite(&sc2, Ordinal::ZERO).unwrap();
        assert_eq!(trace.fixed_point_ordinal(), Some(Ordinal::ZERO));
    }
}
