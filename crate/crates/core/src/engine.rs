//! The update map on partition profiles and finite dialogues run to a fixed point.
//!
//! One communication round replaces each agent's partition `P_i` by the join of
//! `P_i` with the working partitions of everyone who sends to `i`. All working
//! partitions are taken from the profile at the start of the round. The map is
//! inflationary, so on a finite state set the dialogue strictly refines until it
//! hits a fixed point, and the total block count bounds the number of strict steps.

use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::lattice::{is_common_knowledge, Event, Partition, Profile, StateId};
use crate::messages::{Message, MessageFunction};
use crate::ordinal::Ordinal;
use crate::trace::{DialogueTrace, StageFlags, StageKind, StageRecord};

/// A finite communication structure plus the initial profile.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub agents: Vec<String>,
    pub state_labels: Vec<String>,
    pub initial: Profile,
    pub message_function: MessageFunction,
    pub graph: CommGraph,
    pub true_state: Option<StateId>,
}

impl Scenario {
    pub fn new(
        agents: Vec<String>,
        state_labels: Vec<String>,
        initial: Profile,
        message_function: MessageFunction,
        graph: CommGraph,
        true_state: Option<StateId>,
    ) -> Result<Self> {
        let n = agents.len();
        if initial.num_agents() != n {
            return Err(Error::SizeMismatch { left: n, right: initial.num_agents() });
        }
        if graph.num_agents() != n {
            return Err(Error::SizeMismatch { left: n, right: graph.num_agents() });
        }
        if state_labels.len() != initial.num_states() {
            return Err(Error::LabelMismatch {
                expected: initial.num_states(),
                got: state_labels.len(),
            });
        }
        if let Some(x) = true_state {
            if x >= initial.num_states() {
                return Err(Error::Index { index: x, size: initial.num_states() });
            }
        }
        Ok(Scenario { agents, state_labels, initial, message_function, graph, true_state })
    }

    /// Default labels `"0"`, `"1"`, ...
    pub fn unlabelled(
        initial: Profile,
        message_function: MessageFunction,
        graph: CommGraph,
    ) -> Result<Self> {
        let agents = (0..initial.num_agents()).map(|i| format!("agent{i}")).collect();
        let labels = (0..initial.num_states()).map(|x| x.to_string()).collect();
        Scenario::new(agents, labels, initial, message_function, graph, None)
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn num_states(&self) -> usize {
        self.initial.num_states()
    }

    /// The successor-step bound `n·N`.
    pub fn step_bound(&self) -> usize {
        self.num_agents() * self.num_states()
    }
}

/// Maximum number of successor steps a finite dialogue may take.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StageBudget(pub usize);

impl StageBudget {
    /// `n·N + 1`.
    pub fn for_scenario(sc: &Scenario) -> Self {
        StageBudget(sc.step_bound() + 1)
    }
}

/// Per-stage data of a finite trace.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteStage {
    pub profile: Profile,
    pub messages: Vec<Vec<Message>>,
}

pub type FiniteTrace = DialogueTrace<FiniteStage>;

pub fn working_partitions(profile: &Profile, mf: &MessageFunction) -> Result<Vec<Partition>> {
    profile.parts().iter().map(|p| mf.working_partition(p)).collect()
}

pub fn message_vectors(profile: &Profile, mf: &MessageFunction) -> Result<Vec<Vec<Message>>> {
    profile.parts().iter().map(|p| mf.message_vector(p)).collect()
}

/// One simultaneous communication round.
pub fn apply_g(profile: &Profile, graph: &CommGraph, mf: &MessageFunction) -> Result<Profile> {
    if graph.num_agents() != profile.num_agents() {
        return Err(Error::SizeMismatch { left: profile.num_agents(), right: graph.num_agents() });
    }
    let working = working_partitions(profile, mf)?;
    let mut next = Vec::with_capacity(profile.num_agents());
    for (i, own) in profile.parts().iter().enumerate() {
        let mut p = own.clone();
        for j in graph.senders(i)? {
            p = p.join(&working[j])?;
        }
        next.push(p);
    }
    Profile::new(next)
}

fn all_equal<T: PartialEq>(items: &[T]) -> bool {
    items.windows(2).all(|w| w[0] == w[1])
}

pub fn consensus_holds(profile: &Profile, mf: &MessageFunction) -> Result<bool> {
    Ok(all_equal(&message_vectors(profile, mf)?))
}

pub fn partial_consensus_at(profile: &Profile, mf: &MessageFunction, x: StateId) -> Result<bool> {
    if x >= profile.num_states() {
        return Err(Error::Index { index: x, size: profile.num_states() });
    }
    let mut msgs = Vec::with_capacity(profile.num_agents());
    for p in profile.parts() {
        msgs.push(mf.evaluate(&p.block_of(x)?)?);
    }
    Ok(all_equal(&msgs))
}

/// `E(x)`: the states at which every agent sends what it sends at `x`.
fn message_profile_event(vectors: &[Vec<Message>], x: StateId) -> Event {
    let n = vectors[0].len();
    Event::from_mask((0..n).map(|y| vectors.iter().all(|v| v[y] == v[x])).collect())
}

/// Whether the profile of messages sent at `x` is common knowledge at `x`.
pub fn message_profile_is_ck(profile: &Profile, mf: &MessageFunction, x: StateId) -> Result<bool> {
    let vectors = message_vectors(profile, mf)?;
    is_common_knowledge(profile, &message_profile_event(&vectors, x), x)
}

/// The three conditions of the consensus characterization, each evaluated directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConsensusConditions {
    /// At every state the message profile is common knowledge.
    pub a: bool,
    /// All message functions coincide.
    pub b: bool,
    /// All working partitions coincide.
    pub c: bool,
}

impl ConsensusConditions {
    pub fn all_equal(&self) -> bool {
        self.a == self.b && self.b == self.c
    }
}

pub fn check_consensus_conditions(
    profile: &Profile,
    mf: &MessageFunction,
) -> Result<ConsensusConditions> {
    let vectors = message_vectors(profile, mf)?;
    let meet = profile.meet();
    let mut a = true;
    for x in 0..profile.num_states() {
        if !meet.block_of(x)?.is_subset(&message_profile_event(&vectors, x)) {
            a = false;
            break;
        }
    }
    let b = all_equal(&vectors);
    let c = all_equal(&working_partitions(profile, mf)?);
    Ok(ConsensusConditions { a, b, c })
}

/// Which of two disagreeing agents can strictly refine by hearing the other.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairwiseLearning {
    /// The two agents already send identical message functions.
    NotApplicable,
    Disagree { i_learns: bool, j_learns: bool },
}

impl PairwiseLearning {
    pub fn someone_learns(&self) -> bool {
        match *self {
            PairwiseLearning::NotApplicable => true,
            PairwiseLearning::Disagree { i_learns, j_learns } => i_learns || j_learns,
        }
    }
}

pub fn check_pairwise_learning(
    profile: &Profile,
    mf: &MessageFunction,
    i: usize,
    j: usize,
) -> Result<PairwiseLearning> {
    let n = profile.num_agents();
    for k in [i, j] {
        if k >= n {
            return Err(Error::Index { index: k, size: n });
        }
    }
    if i == j {
        return Err(Error::Invalid("agents must differ".into()));
    }
    let (pi, pj) = (profile.get(i), profile.get(j));
    if mf.message_vector(pi)? == mf.message_vector(pj)? {
        return Ok(PairwiseLearning::NotApplicable);
    }
    let (wi, wj) = (mf.working_partition(pi)?, mf.working_partition(pj)?);
    Ok(PairwiseLearning::Disagree {
        i_learns: pi.is_strictly_coarser(&pi.join(&wj)?)?,
        j_learns: pj.is_strictly_coarser(&pj.join(&wi)?)?,
    })
}

pub fn is_fixed_point(profile: &Profile, graph: &CommGraph, mf: &MessageFunction) -> Result<bool> {
    Ok(apply_g(profile, graph, mf)? == *profile)
}

fn stage_record(
    sc: &Scenario,
    ordinal: Ordinal,
    kind: StageKind,
    profile: Profile,
    fixed_point: bool,
) -> Result<StageRecord<FiniteStage>> {
    let mf = &sc.message_function;
    let messages = message_vectors(&profile, mf)?;
    let consensus = all_equal(&messages);
    let (true_messages, partial, ck) = match sc.true_state {
        Some(x) => {
            let at: Vec<Message> = messages.iter().map(|v| v[x].clone()).collect();
            let partial = all_equal(&at);
            let ck = is_common_knowledge(&profile, &message_profile_event(&messages, x), x)?;
            (Some(at), Some(partial), Some(ck))
        }
        None => (None, None, None),
    };
    Ok(StageRecord {
        ordinal,
        kind,
        state: FiniteStage { profile, messages },
        true_messages,
        flags: StageFlags {
            consensus,
            partial_consensus: partial,
            ck_message_profile: ck,
            fixed_point,
        },
    })
}

/// Iterates the update map from the initial profile until `g(P) = P`.
pub fn run_dialogue(sc: &Scenario, budget: StageBudget) -> Result<FiniteTrace> {
    if budget.0 < sc.step_bound() {
        return Err(Error::Invalid(format!(
            "budget {} below the n·N bound {}",
            budget.0,
            sc.step_bound()
        )));
    }
    let mut trace = DialogueTrace::new();
    let mut current = sc.initial.clone();
    let mut t = 0u64;
    loop {
        let next = apply_g(&current, &sc.graph, &sc.message_function)?;
        let fixed = next == current;
        let kind = if t == 0 { StageKind::Initial } else { StageKind::Successor };
        trace.records.push(stage_record(sc, Ordinal::finite(t), kind, current, fixed)?);
        if fixed {
            return Ok(trace);
        }
        t += 1;
        if t as usize > budget.0 {
            return Err(Error::BudgetExceeded(budget.0));
        }
        current = next;
    }
}
