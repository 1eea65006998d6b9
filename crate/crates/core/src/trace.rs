//! Ordinal-indexed dialogue traces.

use crate::messages::Message;
use crate::ordinal::Ordinal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StageKind {
    Initial,
    Successor,
    Limit,
}

impl StageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Initial => "initial",
            StageKind::Successor => "successor",
            StageKind::Limit => "limit",
        }
    }
}

/// Verdicts attached to one stage. The `*_at_true_state` flags are `None`
/// when the scenario has no designated true state.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StageFlags {
    pub consensus: bool,
    pub partial_consensus: Option<bool>,
    pub ck_message_profile: Option<bool>,
    pub fixed_point: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord<S> {
    pub ordinal: Ordinal,
    pub kind: StageKind,
    pub state: S,
    /// Message each agent sends at the true state.
    pub true_messages: Option<Vec<Message>>,
    pub flags: StageFlags,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DialogueTrace<S> {
    pub records: Vec<StageRecord<S>>,
}

impl<S> DialogueTrace<S> {
    pub fn new() -> Self {
        DialogueTrace { records: Vec::new() }
    }

    pub fn last(&self) -> &StageRecord<S> {
        self.records.last().expect("trace has an initial record")
    }

    /// Ordinal of the first stage whose profile is a fixed point.
    pub fn fixed_point_ordinal(&self) -> Option<Ordinal> {
        self.records.iter().find(|r| r.flags.fixed_point).map(|r| r.ordinal)
    }

    pub fn at(&self, ordinal: Ordinal) -> Option<&StageRecord<S>> {
        self.records.iter().find(|r| r.ordinal == ordinal)
    }

    /// Number of successor stages in the trace.
    pub fn successor_steps(&self) -> usize {
        self.records.iter().filter(|r| r.kind == StageKind::Successor).count()
    }
}

impl<S> Default for DialogueTrace<S> {
    fn default() -> Self {
        Self::new()
    }
}
