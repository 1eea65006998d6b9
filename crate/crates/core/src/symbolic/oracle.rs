//! Independent check of symbolic stages against the finite engine.
//!
//! Each symbolic stage is compared with a finite dialogue run on a truncation
//! `[1, N]` of the state space. Truncation artifacts (blocks cut short at `N`)
//! travel inwards by at most one block diameter per stage, so with a margin of
//! `c·(t+1)` states they never reach the reported window.

use num_integer::Integer;

use crate::engine::apply_g;
use crate::error::{Error, Result};
use crate::graph::CommGraph;
use crate::lattice::{Partition, Profile};
use crate::messages::MessageFunction;
use crate::symbolic::transfinite::{symbolic_apply_g, SymbolicProfile, SymbolicScenario};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TruncationReport {
    /// Reporting window `[1, window]`.
    pub window: u64,
    /// Size of the truncated state space the finite engine ran on.
    pub truncated_size: u64,
    /// Stages compared, including the initial one.
    pub stages_compared: usize,
}

/// Per-stage speed bound of truncation artifacts.
fn light_cone_speed(start: &SymbolicProfile) -> u64 {
    let lcm = start.parts().iter().fold(1u64, |l, p| l.lcm(&p.modulus()));
    start.span() + lcm
}

fn finite_start(start: &SymbolicProfile, n: u64) -> Profile {
    start.restrict(n)
}

fn compare(
    stage: usize,
    symbolic: &SymbolicProfile,
    finite: &Profile,
    window: u64,
) -> Result<()> {
    for (i, part) in symbolic.parts().iter().enumerate() {
        let expected = finite.get(i).truncate(window as usize);
        let got = part.restrict(window);
        if expected != got {
            return Err(Error::Mismatch {
                stage,
                agent: i,
                detail: format!("symbolic {got} vs truncated {expected}"),
            });
        }
    }
    Ok(())
}

/// Compares `stages` successor stages from `start` on `[1, window]`.
/// `corrupt_stage` replaces agent 0 of that symbolic stage by the trivial
/// partition, which the comparison must catch.
pub fn truncation_oracle_from(
    start: &SymbolicProfile,
    graph: &CommGraph,
    window: u64,
    stages: usize,
    corrupt_stage: Option<usize>,
) -> Result<TruncationReport> {
    if window == 0 {
        return Err(Error::Invalid("window must be at least 1".into()));
    }
    let n = window + light_cone_speed(start) * (stages as u64 + 1);
    let mf = MessageFunction::KnownState;
    let mut symbolic = start.clone();
    let mut finite = finite_start(start, n);
    for t in 0..=stages {
        if t > 0 {
            symbolic = symbolic_apply_g(&symbolic, graph)?;
            finite = apply_g(&finite, graph, &mf)?;
        }
        if corrupt_stage == Some(t) {
            let mut parts = symbolic.parts().to_vec();
            parts[0] = crate::symbolic::PeriodicPartition::trivial();
            symbolic = SymbolicProfile::new(parts)?;
        }
        compare(t, &symbolic, &finite, window)?;
    }
    Ok(TruncationReport { window, truncated_size: n, stages_compared: stages + 1 })
}

pub fn truncation_oracle(
    sc: &SymbolicScenario,
    window: u64,
    stages: usize,
    corrupt_stage: Option<usize>,
) -> Result<TruncationReport> {
    truncation_oracle_from(&sc.initial, &sc.graph, window, stages, corrupt_stage)
}

/// Checks a limit profile against the finite dialogue started from the first
/// profile of its ω-block: from some stage on, every stage up to `max_stages`
/// agrees with the limit on `[1, window]`. Returns that stage.
pub fn limit_agrees_eventually(
    block_start: &SymbolicProfile,
    limit: &SymbolicProfile,
    graph: &CommGraph,
    window: u64,
    max_stages: usize,
) -> Result<usize> {
    let n = window + light_cone_speed(block_start) * (max_stages as u64 + 1);
    let mf = MessageFunction::KnownState;
    let target: Vec<Partition> = limit.parts().iter().map(|p| p.restrict(window)).collect();
    let mut finite = finite_start(block_start, n);
    let mut agreeing_since = None;
    for t in 0..=max_stages {
        if t > 0 {
            finite = apply_g(&finite, graph, &mf)?;
        }
        let agrees = finite
            .parts()
            .iter()
            .zip(&target)
            .all(|(p, q)| p.truncate(window as usize) == *q);
        agreeing_since = match (agrees, agreeing_since) {
            (true, None) => Some(t),
            (true, since) => since,
            (false, _) => None,
        };
    }
    agreeing_since.ok_or_else(|| Error::Mismatch {
        stage: max_stages,
        agent: 0,
        detail: format!("limit does not match stage {max_stages} on [1, {window}]"),
    })
}
