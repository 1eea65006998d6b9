//! Partitions of a finite state set `{0, .., N-1}` ordered by refinement.
//!
//! A partition is stored as one block label per state, numbered in order of
//! first occurrence. Two partitions are equal exactly when their label
//! sequences are equal, so `Eq` and `Hash` are structural.
//!
//! Ordering follows the usual convention for information structures: `P <= Q`
//! means `P` is coarser than `Q` (every block of `P` is a union of blocks of
//! `Q`). The join is the coarsest common refinement, the meet the finest
//! common coarsening. The all-singletons partition is the top element.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// A state index in `[0, N)`.
pub type StateId = usize;

/// A canonical partition of `{0, .., N-1}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    labels: Vec<u32>,
    num_blocks: usize,
}

/// A subset of the state set, stored as a membership mask.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    mask: Vec<bool>,
}

impl Event {
    pub fn empty(num_states: usize) -> Self {
        Event { mask: vec![false; num_states] }
    }

    pub fn full(num_states: usize) -> Self {
        Event { mask: vec![true; num_states] }
    }

    pub fn from_states(num_states: usize, states: &[StateId]) -> Result<Self> {
        let mut mask = vec![false; num_states];
        for &s in states {
            if s >= num_states {
                return Err(Error::Index { index: s, size: num_states });
            }
            mask[s] = true;
        }
        Ok(Event { mask })
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        Event { mask }
    }

    /// Decodes the low `num_states` bits of `bits`.
    pub fn from_bits(num_states: usize, bits: u64) -> Self {
        Event { mask: (0..num_states).map(|i| bits >> i & 1 == 1).collect() }
    }

    pub fn bits(&self) -> u64 {
        debug_assert!(self.mask.len() <= 64);
        self.mask
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| if b { acc | 1 << i } else { acc })
    }

    pub fn num_states(&self) -> usize {
        self.mask.len()
    }

    pub fn contains(&self, x: StateId) -> bool {
        self.mask.get(x).copied().unwrap_or(false)
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn to_vec(&self) -> Vec<StateId> {
        self.states().collect()
    }

    pub fn is_subset(&self, other: &Event) -> bool {
        self.mask.len() == other.mask.len()
            && self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    pub fn intersection(&self, other: &Event) -> Event {
        Event { mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a && b).collect() }
    }

    pub fn union(&self, other: &Event) -> Event {
        Event { mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| a || b).collect() }
    }
}

impl Partition {
    /// Builds a partition from an arbitrary labelling; equal labels mean same block.
    pub fn from_labels<T: Eq + std::hash::Hash>(labels: &[T]) -> Self {
        let mut seen: HashMap<&T, u32> = HashMap::new();
        let mut out = Vec::with_capacity(labels.len());
        for l in labels {
            let next = seen.len() as u32;
            out.push(*seen.entry(l).or_insert(next));
        }
        Partition { num_blocks: seen.len(), labels: out }
    }

    pub fn from_blocks(blocks: &[Vec<StateId>], num_states: usize) -> Result<Self> {
        let mut owner: Vec<Option<usize>> = vec![None; num_states];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::Invalid("empty block".into()));
            }
            for &x in block {
                if x >= num_states {
                    return Err(Error::Index { index: x, size: num_states });
                }
                if owner[x].is_some() {
                    return Err(Error::Overlap { state: x as u64 });
                }
                owner[x] = Some(b);
            }
        }
        let labels = owner
            .into_iter()
            .enumerate()
            .map(|(x, o)| o.ok_or(Error::Coverage { state: x as u64 }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_labels(&labels))
    }

    /// The one-block partition `{X}`.
    pub fn trivial(num_states: usize) -> Self {
        Partition { labels: vec![0; num_states], num_blocks: usize::from(num_states > 0) }
    }

    pub fn singletons(num_states: usize) -> Self {
        Partition { labels: (0..num_states as u32).collect(), num_blocks: num_states }
    }

    pub fn num_states(&self) -> usize {
        self.labels.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.num_blocks
    }

    /// Canonical block labels, one per state.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_of(&self, x: StateId) -> u32 {
        self.labels[x]
    }

    pub fn same_block(&self, x: StateId, y: StateId) -> bool {
        self.labels[x] == self.labels[y]
    }

    /// Blocks in canonical order; each block is sorted.
    pub fn blocks(&self) -> Vec<Vec<StateId>> {
        let mut out = vec![Vec::new(); self.num_blocks];
        for (x, &l) in self.labels.iter().enumerate() {
            out[l as usize].push(x);
        }
        out
    }

    pub fn block_of(&self, x: StateId) -> Result<Event> {
        let n = self.num_states();
        if x >= n {
            return Err(Error::Index { index: x, size: n });
        }
        let l = self.labels[x];
        Ok(Event::from_mask(self.labels.iter().map(|&m| m == l).collect()))
    }

    fn check_size(&self, other: &Partition) -> Result<()> {
        if self.num_states() != other.num_states() {
            return Err(Error::SizeMismatch { left: self.num_states(), right: other.num_states() });
        }
        Ok(())
    }

    /// `self <= other`: `self` is a coarsening of `other`.
    pub fn is_coarser(&self, other: &Partition) -> Result<bool> {
        self.check_size(other)?;
        // each block of `other` must map into a single block of `self`
        let mut image: Vec<Option<u32>> = vec![None; other.num_blocks];
        for (x, &q) in other.labels.iter().enumerate() {
            match image[q as usize] {
                None => image[q as usize] = Some(self.labels[x]),
                Some(p) if p != self.labels[x] => return Ok(false),
                _ => {}
            }
        }
        Ok(true)
    }

    /// Strict refinement: `self < other`.
    pub fn is_strictly_coarser(&self, other: &Partition) -> Result<bool> {
        Ok(self != other && self.is_coarser(other)?)
    }

    pub fn join(&self, other: &Partition) -> Result<Partition> {
        self.check_size(other)?;
        let pairs: Vec<(u32, u32)> =
            self.labels.iter().copied().zip(other.labels.iter().copied()).collect();
        Ok(Partition::from_labels(&pairs))
    }

    pub fn meet(&self, other: &Partition) -> Result<Partition> {
        self.check_size(other)?;
        let n = self.num_states();
        let mut dsu = Dsu::new(n);
        for p in [self, other] {
            let mut first: Vec<Option<usize>> = vec![None; p.num_blocks];
            for (x, &l) in p.labels.iter().enumerate() {
                match first[l as usize] {
                    None => first[l as usize] = Some(x),
                    Some(r) => dsu.union(r, x),
                }
            }
        }
        let roots: Vec<usize> = (0..n).map(|x| dsu.find(x)).collect();
        Ok(Partition::from_labels(&roots))
    }

    pub fn join_all(parts: &[Partition]) -> Result<Partition> {
        let (first, rest) = parts.split_first().ok_or(Error::EmptyList)?;
        rest.iter().try_fold(first.clone(), |acc, p| acc.join(p))
    }

    pub fn meet_all(parts: &[Partition]) -> Result<Partition> {
        let (first, rest) = parts.split_first().ok_or(Error::EmptyList)?;
        rest.iter().try_fold(first.clone(), |acc, p| acc.meet(p))
    }

    /// Restriction to the first `n` states.
    pub fn truncate(&self, n: usize) -> Partition {
        Partition::from_labels(&self.labels[..n.min(self.labels.len())])
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, b) in self.blocks().iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{{")?;
            for (j, x) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{x}")?;
            }
            write!(f, "}}")?;
        }
        write!(f, "}}")
    }
}

pub(crate) struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    pub(crate) fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// One information partition per agent, all over the same state set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Profile {
    parts: Vec<Partition>,
}

impl Profile {
    pub fn new(parts: Vec<Partition>) -> Result<Self> {
        if parts.len() < 2 {
            return Err(Error::TooFewAgents(parts.len()));
        }
        let n = parts[0].num_states();
        if let Some(p) = parts.iter().find(|p| p.num_states() != n) {
            return Err(Error::SizeMismatch { left: n, right: p.num_states() });
        }
        Ok(Profile { parts })
    }

    pub fn num_agents(&self) -> usize {
        self.parts.len()
    }

    pub fn num_states(&self) -> usize {
        self.parts[0].num_states()
    }

    pub fn parts(&self) -> &[Partition] {
        &self.parts
    }

    pub fn get(&self, i: usize) -> &Partition {
        &self.parts[i]
    }

    pub fn into_parts(self) -> Vec<Partition> {
        self.parts
    }

    /// Product order: every component of `self` is coarser than the matching one in `other`.
    pub fn is_coarser(&self, other: &Profile) -> Result<bool> {
        if self.num_agents() != other.num_agents() {
            return Err(Error::SizeMismatch { left: self.num_agents(), right: other.num_agents() });
        }
        for (p, q) in self.parts.iter().zip(&other.parts) {
            if !p.is_coarser(q)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Total block count over all agents; strictly grows along a strict refinement.
    pub fn total_blocks(&self) -> usize {
        self.parts.iter().map(Partition::num_blocks).sum()
    }

    pub fn meet(&self) -> Partition {
        Partition::meet_all(&self.parts).expect("profile components share a size")
    }
}

/// `E` is common knowledge at `x` when the meet-block containing `x` lies inside `E`.
pub fn is_common_knowledge(profile: &Profile, event: &Event, x: StateId) -> Result<bool> {
    let n = profile.num_states();
    if event.num_states() != n {
        return Err(Error::SizeMismatch { left: n, right: event.num_states() });
    }
    let meet = profile.meet();
    Ok(meet.block_of(x)?.is_subset(event))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(blocks: &[&[usize]], n: usize) -> Partition {
        let blocks: Vec<Vec<usize>> = blocks.iter().map(|b| b.to_vec()).collect();
        Partition::from_blocks(&blocks, n).unwrap()
    }

    #[test]
    fn from_blocks_canonicalizes() {
        assert_eq!(p(&[&[0, 1], &[2, 3]], 4).labels(), &[0, 0, 1, 1]);
        assert_eq!(p(&[&[2, 3], &[0, 1]], 4).labels(), &[0, 0, 1, 1]);
        assert_eq!(
            Partition::from_blocks(&[vec![0], vec![1]], 3),
            Err(Error::Coverage { state: 2 })
        );
        assert_eq!(
            Partition::from_blocks(&[vec![0, 1], vec![1, 2]], 3),
            Err(Error::Overlap { state: 1 })
        );
    }

    #[test]
    fn block_of_examples() {
        let q = p(&[&[0, 1], &[2, 3]], 4);
        assert_eq!(q.block_of(1).unwrap().to_vec(), vec![0, 1]);
        assert_eq!(Partition::singletons(4).block_of(2).unwrap().to_vec(), vec![2]);
        assert_eq!(Partition::trivial(4).block_of(0).unwrap(), Event::full(4));
        assert!(matches!(q.block_of(4), Err(Error::Index { .. })));
    }

    #[test]
    fn coarser_examples() {
        let a = p(&[&[0, 1], &[2, 3]], 4);
        let b = p(&[&[0, 2], &[1, 3]], 4);
        assert!(Partition::trivial(4).is_coarser(&a).unwrap());
        assert!(!Partition::singletons(4).is_coarser(&Partition::trivial(4)).unwrap());
        assert!(!a.is_coarser(&b).unwrap());
        assert!(matches!(a.is_coarser(&Partition::trivial(3)), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn join_meet_examples() {
        let a = p(&[&[0, 1], &[2, 3]], 4);
        let b = p(&[&[0, 2], &[1, 3]], 4);
        assert_eq!(a.join(&b).unwrap(), Partition::singletons(4));
        assert_eq!(a.join(&Partition::trivial(4)).unwrap(), a);
        assert_eq!(a.join(&a).unwrap(), a);
        assert_eq!(a.meet(&b).unwrap(), Partition::trivial(4));
        assert_eq!(a.meet(&a).unwrap(), a);
        assert_eq!(a.meet(&Partition::singletons(4)).unwrap(), a);
    }

    #[test]
    fn join_all_meet_all() {
        let a = p(&[&[0, 1], &[2, 3]], 4);
        assert_eq!(Partition::join_all(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(
            Partition::meet_all(&[Partition::trivial(4), a]).unwrap(),
            Partition::trivial(4)
        );
        assert_eq!(Partition::join_all(&[]), Err(Error::EmptyList));
    }

    #[test]
    fn common_knowledge_examples() {
        let prof = Profile::new(vec![Partition::singletons(3), p(&[&[0, 1], &[2]], 3)]).unwrap();
        assert!(is_common_knowledge(&prof, &Event::full(3), 2).unwrap());
        let e = Event::from_states(3, &[0, 1]).unwrap();
        assert!(is_common_knowledge(&prof, &e, 0).unwrap());

        let prof2 = Profile::new(vec![Partition::singletons(2), Partition::trivial(2)]).unwrap();
        let e0 = Event::from_states(2, &[0]).unwrap();
        assert!(!is_common_knowledge(&prof2, &e0, 0).unwrap());
    }
}
