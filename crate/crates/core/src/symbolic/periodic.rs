//! Eventually periodic partitions of the positive integers.
//!
//! A partition with modulus `m` is a finite list of components:
//!
//! * exceptional blocks: explicit finite blocks;
//! * template families: a finite offset set `O` generating the blocks
//!   `O + m·k` for every `k >= 0`;
//! * infinite blocks: a finite part together with progressions
//!   `{s + m·k : k >= 0}`, all forming a single block.
//!
//! Beyond the largest constant `H` of the representation every residue class
//! mod `m` is claimed by exactly one template offset or progression start, so
//! disjointness and coverage reduce to a check on a finite window plus residue
//! accounting.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;

use crate::error::{Error, Result};
use crate::lattice::Partition;

/// One block given as a finite part plus progressions with a common step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct InfiniteBlock {
    pub finite: Vec<u64>,
    pub starts: Vec<u64>,
}

impl InfiniteBlock {
    fn least(&self) -> u64 {
        self.finite.iter().chain(&self.starts).copied().min().unwrap_or(u64::MAX)
    }

    fn largest_constant(&self) -> u64 {
        self.finite.iter().chain(&self.starts).copied().max().unwrap_or(0)
    }

    fn contains(&self, x: u64, m: u64) -> bool {
        self.finite.binary_search(&x).is_ok()
            || self.starts.iter().any(|&s| x >= s && (x - s).is_multiple_of(m))
    }

    /// Sorts, merges progressions that share a residue and absorbs finite
    /// elements that a progression covers or extends downwards.
    fn normalize(&mut self, m: u64) {
        let mut by_residue: BTreeMap<u64, u64> = BTreeMap::new();
        for &s in &self.starts {
            let e = by_residue.entry(s % m).or_insert(s);
            *e = (*e).min(s);
        }
        let mut finite: BTreeSet<u64> = self.finite.iter().copied().collect();
        for start in by_residue.values_mut() {
            while *start > m && finite.contains(&(*start - m)) {
                *start -= m;
            }
        }
        finite.retain(|&x| by_residue.get(&(x % m)).is_none_or(|&s| x < s));
        self.finite = finite.into_iter().collect();
        self.starts = by_residue.into_values().collect();
        self.starts.sort_unstable();
    }
}

/// Descriptor of the block containing a given state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BlockDescriptor {
    Finite(Vec<u64>),
    /// `finite ∪ {s + step·k}` for each `(s, step)`.
    Infinite { finite: Vec<u64>, progressions: Vec<(u64, u64)> },
}

impl BlockDescriptor {
    pub fn contains(&self, x: u64) -> bool {
        match self {
            BlockDescriptor::Finite(b) => b.contains(&x),
            BlockDescriptor::Infinite { finite, progressions } => {
                finite.contains(&x)
                    || progressions.iter().any(|&(s, d)| x >= s && (x - s).is_multiple_of(d))
            }
        }
    }

    pub fn is_singleton(&self) -> bool {
        matches!(self, BlockDescriptor::Finite(b) if b.len() == 1)
    }
}

/// Identifies a generated block.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BlockKey {
    Exceptional(usize),
    Template(usize, u64),
    Infinite(usize),
}

/// Proof of validity: the window that was checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ValidityCertificate {
    pub window: u64,
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PeriodicPartition {
    modulus: u64,
    exceptional: Vec<Vec<u64>>,
    templates: Vec<Vec<u64>>,
    infinite: Vec<InfiniteBlock>,
}

impl PeriodicPartition {
    /// Builds and validates a partition.
    pub fn new(
        modulus: u64,
        exceptional: Vec<Vec<u64>>,
        templates: Vec<Vec<u64>>,
        infinite: Vec<InfiniteBlock>,
    ) -> Result<Self> {
        let pp = Self::assemble(modulus, exceptional, templates, infinite)?;
        pp.validate()?;
        Ok(pp)
    }

    /// Normalizes without running the validity check.
    pub fn assemble(
        modulus: u64,
        exceptional: Vec<Vec<u64>>,
        templates: Vec<Vec<u64>>,
        infinite: Vec<InfiniteBlock>,
    ) -> Result<Self> {
        if modulus == 0 {
            return Err(Error::Invalid("modulus must be positive".into()));
        }
        let clean = |mut v: Vec<u64>| -> Result<Vec<u64>> {
            v.sort_unstable();
            v.dedup();
            if v.first() == Some(&0) {
                return Err(Error::Invalid("states start at 1".into()));
            }
            Ok(v)
        };
        let mut ex = Vec::new();
        for b in exceptional {
            let b = clean(b)?;
            if b.is_empty() {
                return Err(Error::Invalid("empty exceptional block".into()));
            }
            ex.push(b);
        }
        let mut tp = Vec::new();
        for o in templates {
            let o = clean(o)?;
            if o.is_empty() {
                return Err(Error::Invalid("empty template family".into()));
            }
            tp.push(o);
        }
        let mut inf = Vec::new();
        for mut b in infinite {
            b.finite = clean(b.finite)?;
            b.starts = clean(b.starts)?;
            b.normalize(modulus);
            match (b.starts.is_empty(), b.finite.is_empty()) {
                (true, true) => return Err(Error::Invalid("empty infinite block".into())),
                (true, false) => ex.push(b.finite),
                _ => inf.push(b),
            }
        }
        ex.sort_by_key(|b| b[0]);
        tp.sort_by_key(|o| o[0]);
        inf.sort_by_key(InfiniteBlock::least);
        Ok(PeriodicPartition { modulus, exceptional: ex, templates: tp, infinite: inf })
    }

    /// The all-singletons partition.
    pub fn singletons() -> Self {
        PeriodicPartition { modulus: 1, exceptional: vec![], templates: vec![vec![1]], infinite: vec![] }
    }

    /// The one-block partition `{ℕ}`.
    pub fn trivial() -> Self {
        PeriodicPartition {
            modulus: 1,
            exceptional: vec![],
            templates: vec![],
            infinite: vec![InfiniteBlock { finite: vec![], starts: vec![1] }],
        }
    }

    pub fn modulus(&self) -> u64 {
        self.modulus
    }

    pub fn exceptional_blocks(&self) -> &[Vec<u64>] {
        &self.exceptional
    }

    pub fn template_families(&self) -> &[Vec<u64>] {
        &self.templates
    }

    pub fn infinite_blocks(&self) -> &[InfiniteBlock] {
        &self.infinite
    }

    /// Largest constant appearing in the representation.
    pub fn largest_constant(&self) -> u64 {
        let ex = self.exceptional.iter().filter_map(|b| b.last()).copied().max().unwrap_or(0);
        let tp = self.templates.iter().filter_map(|o| o.last()).copied().max().unwrap_or(0);
        let inf = self.infinite.iter().map(InfiniteBlock::largest_constant).max().unwrap_or(0);
        ex.max(tp).max(inf)
    }

    /// Largest diameter of a finite generating pattern.
    pub fn span(&self) -> u64 {
        let diam = |v: &[u64]| v.last().zip(v.first()).map_or(0, |(a, b)| a - b);
        let ex = self.exceptional.iter().map(|b| diam(b)).max().unwrap_or(0);
        let tp = self.templates.iter().map(|o| diam(o)).max().unwrap_or(0);
        let inf = self
            .infinite
            .iter()
            .map(|b| b.largest_constant() - b.least().min(b.largest_constant()))
            .max()
            .unwrap_or(0);
        ex.max(tp).max(inf)
    }

    /// Disjointness on `[1, 2(H+m)]`, then residue accounting, then coverage.
    pub fn validate(&self) -> Result<ValidityCertificate> {
        let m = self.modulus;
        let window = 2 * (self.largest_constant() + m);
        let mut claims = vec![0u8; window as usize + 1];
        let mut claim = |x: u64| -> Result<()> {
            let c = &mut claims[x as usize];
            *c += 1;
            if *c > 1 {
                return Err(Error::Overlap { state: x });
            }
            Ok(())
        };
        for b in &self.exceptional {
            for &x in b {
                claim(x)?;
            }
        }
        for o in &self.templates {
            for &off in o {
                let mut x = off;
                while x <= window {
                    claim(x)?;
                    x += m;
                }
            }
        }
        for b in &self.infinite {
            for &x in &b.finite {
                claim(x)?;
            }
            for &s in &b.starts {
                let mut x = s;
                while x <= window {
                    claim(x)?;
                    x += m;
                }
            }
        }
        let mut residues = vec![0usize; m as usize];
        for o in &self.templates {
            for &off in o {
                residues[(off % m) as usize] += 1;
            }
        }
        for b in &self.infinite {
            for &s in &b.starts {
                residues[(s % m) as usize] += 1;
            }
        }
        if let Some((r, &count)) = residues.iter().enumerate().find(|(_, &c)| c != 1) {
            return Err(Error::Residue { residue: r as u64, modulus: m, count });
        }
        if let Some(x) = (1..=window).find(|&x| claims[x as usize] == 0) {
            return Err(Error::Coverage { state: x });
        }
        Ok(ValidityCertificate { window })
    }

    pub fn key_of(&self, x: u64) -> Option<BlockKey> {
        if x == 0 {
            return None;
        }
        let m = self.modulus;
        if let Some(i) = self.exceptional.iter().position(|b| b.binary_search(&x).is_ok()) {
            return Some(BlockKey::Exceptional(i));
        }
        for (i, o) in self.templates.iter().enumerate() {
            if let Some(&off) = o.iter().find(|&&off| x >= off && (x - off).is_multiple_of(m)) {
                return Some(BlockKey::Template(i, (x - off) / m));
            }
        }
        self.infinite.iter().position(|b| b.contains(x, m)).map(BlockKey::Infinite)
    }

    pub fn descriptor(&self, key: BlockKey) -> BlockDescriptor {
        match key {
            BlockKey::Exceptional(i) => BlockDescriptor::Finite(self.exceptional[i].clone()),
            BlockKey::Template(i, k) => {
                BlockDescriptor::Finite(self.templates[i].iter().map(|o| o + self.modulus * k).collect())
            }
            BlockKey::Infinite(i) => {
                let b = &self.infinite[i];
                BlockDescriptor::Infinite {
                    finite: b.finite.clone(),
                    progressions: b.starts.iter().map(|&s| (s, self.modulus)).collect(),
                }
            }
        }
    }

    /// The block containing `x >= 1`.
    pub fn block_of(&self, x: u64) -> Result<BlockDescriptor> {
        if x == 0 {
            return Err(Error::Invalid("states start at 1".into()));
        }
        let key = self.key_of(x).ok_or(Error::Coverage { state: x })?;
        Ok(self.descriptor(key))
    }

    pub fn is_singleton(&self, x: u64) -> bool {
        self.block_of(x).is_ok_and(|b| b.is_singleton())
    }

    /// Block keys of states `1..=n`, painted component by component.
    pub fn keys_upto(&self, n: u64) -> Vec<Option<BlockKey>> {
        let m = self.modulus;
        let mut out = vec![None; n as usize + 1];
        for (i, b) in self.exceptional.iter().enumerate() {
            for &x in b.iter().take_while(|&&x| x <= n) {
                out[x as usize] = Some(BlockKey::Exceptional(i));
            }
        }
        for (i, o) in self.templates.iter().enumerate() {
            for &off in o {
                let mut x = off;
                let mut k = 0;
                while x <= n {
                    out[x as usize] = Some(BlockKey::Template(i, k));
                    x += m;
                    k += 1;
                }
            }
        }
        for (i, b) in self.infinite.iter().enumerate() {
            for &x in b.finite.iter().take_while(|&&x| x <= n) {
                out[x as usize] = Some(BlockKey::Infinite(i));
            }
            for &s in &b.starts {
                let mut x = s;
                while x <= n {
                    out[x as usize] = Some(BlockKey::Infinite(i));
                    x += m;
                }
            }
        }
        out
    }

    /// Intersection with `[1, n]` as a finite partition; state `x` maps to index `x - 1`.
    pub fn restrict(&self, n: u64) -> Partition {
        let keys = self.keys_upto(n);
        Partition::from_labels(&keys[1..])
    }

    /// Extensional equality, decided on `[1, max(H) + span + 2·lcm(m1, m2)]`.
    pub fn equals(&self, other: &PeriodicPartition) -> bool {
        let window = self.largest_constant().max(other.largest_constant())
            + self.span().max(other.span())
            + 2 * self.modulus.lcm(&other.modulus);
        self.restrict(window) == other.restrict(window)
    }

    /// Same partition re-encoded with modulus `l`, a multiple of the current one.
    pub fn lift(&self, l: u64) -> PeriodicPartition {
        let m = self.modulus;
        assert!(l.is_multiple_of(m), "lift target {l} is not a multiple of {m}");
        let q = l / m;
        let templates = self
            .templates
            .iter()
            .flat_map(|o| (0..q).map(move |j| o.iter().map(|x| x + m * j).collect::<Vec<_>>()))
            .collect();
        let infinite = self
            .infinite
            .iter()
            .map(|b| InfiniteBlock {
                finite: b.finite.clone(),
                starts: b.starts.iter().flat_map(|&s| (0..q).map(move |j| s + m * j)).collect(),
            })
            .collect();
        PeriodicPartition { modulus: l, exceptional: self.exceptional.clone(), templates, infinite }
    }

    /// Coarsest common refinement.
    pub fn join(&self, other: &PeriodicPartition) -> Result<PeriodicPartition> {
        let l = self.modulus.lcm(&other.modulus);
        let a = self.lift(l);
        let b = other.lift(l);
        let mut exceptional: Vec<Vec<u64>> = Vec::new();
        let mut templates: Vec<Vec<u64>> = Vec::new();
        let mut infinite: Vec<InfiniteBlock> = Vec::new();

        let a_keys = a.keys_upto(a.largest_constant().max(b.largest_constant()));
        let b_keys = b.keys_upto(a.largest_constant().max(b.largest_constant()));
        let group = |elems: &mut dyn Iterator<Item = u64>, keys: &[Option<BlockKey>]| {
            let mut groups: BTreeMap<Option<BlockKey>, Vec<u64>> = BTreeMap::new();
            for x in elems {
                groups.entry(keys[x as usize]).or_default().push(x);
            }
            groups.into_values().collect::<Vec<_>>()
        };
        for blk in &a.exceptional {
            exceptional.extend(group(&mut blk.iter().copied(), &b_keys));
        }
        for blk in &b.exceptional {
            let mut rest = blk
                .iter()
                .copied()
                .filter(|&x| !matches!(a_keys[x as usize], Some(BlockKey::Exceptional(_))));
            exceptional.extend(group(&mut rest, &a_keys));
        }

        for o1 in &a.templates {
            for o2 in &b.templates {
                templates.extend(template_meet(o1, o2, l));
            }
            for ib in &b.infinite {
                let (ex, tp) = template_infinite_meet(o1, ib, l);
                exceptional.extend(ex);
                templates.extend(tp);
            }
        }
        for ia in &a.infinite {
            for o2 in &b.templates {
                let (ex, tp) = template_infinite_meet(o2, ia, l);
                exceptional.extend(ex);
                templates.extend(tp);
            }
            for ib in &b.infinite {
                if let Some(blk) = infinite_meet(ia, ib, l) {
                    infinite.push(blk);
                }
            }
        }
        PeriodicPartition::new(l, exceptional, templates, infinite)
    }

    /// Working partition under the known-state message function: singleton
    /// blocks stay, everything else merges into the single `unknown` block.
    pub fn known_state_working_partition(&self) -> PeriodicPartition {
        let mut exceptional = Vec::new();
        let mut templates = Vec::new();
        let mut merged = InfiniteBlock { finite: Vec::new(), starts: Vec::new() };
        for b in &self.exceptional {
            if b.len() == 1 {
                exceptional.push(b.clone());
            } else {
                merged.finite.extend(b);
            }
        }
        for o in &self.templates {
            if o.len() == 1 {
                templates.push(o.clone());
            } else {
                merged.starts.extend(o);
            }
        }
        for b in &self.infinite {
            merged.finite.extend(&b.finite);
            merged.starts.extend(&b.starts);
        }
        let infinite = if merged.finite.is_empty() && merged.starts.is_empty() {
            vec![]
        } else {
            vec![merged]
        };
        PeriodicPartition::assemble(self.modulus, exceptional, templates, infinite)
            .expect("merging blocks of a valid partition stays valid")
    }

    /// Image under `x ↦ x + s`, with `1..=s` added as singletons.
    pub fn translate(&self, s: u64) -> PeriodicPartition {
        let shift = |v: &Vec<u64>| v.iter().map(|x| x + s).collect::<Vec<_>>();
        let mut exceptional: Vec<Vec<u64>> = (1..=s).map(|x| vec![x]).collect();
        exceptional.extend(self.exceptional.iter().map(shift));
        let templates = self.templates.iter().map(shift).collect();
        let infinite = self
            .infinite
            .iter()
            .map(|b| InfiniteBlock { finite: shift(&b.finite), starts: shift(&b.starts) })
            .collect();
        PeriodicPartition::assemble(self.modulus, exceptional, templates, infinite)
            .expect("translation preserves validity")
    }

    /// The refinement that isolates every state `<= d` and leaves the blocks
    /// above `d` otherwise intact.
    pub fn isolate_prefix(&self, d: u64) -> PeriodicPartition {
        if d == 0 {
            return self.clone();
        }
        let splitter = PeriodicPartition {
            modulus: 1,
            exceptional: (1..=d).map(|x| vec![x]).collect(),
            templates: vec![],
            infinite: vec![InfiniteBlock { finite: vec![], starts: vec![d + 1] }],
        };
        self.join(&splitter).expect("join of valid partitions")
    }

    /// Rebuilds a partition with threshold `h` and modulus `m` from the labels
    /// of states `1..=labels.len()`. Returns `None` when the labelling is not
    /// of that shape on the window.
    pub fn from_window(labels: &[u32], h: u64, m: u64) -> Option<PeriodicPartition> {
        let w = labels.len() as u64;
        if h + 2 * m > w {
            return None;
        }
        let lab = |x: u64| labels[(x - 1) as usize];
        let mut members: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
        for x in 1..=w {
            members.entry(lab(x)).or_default().push(x);
        }
        let mut infinite: BTreeMap<u32, InfiniteBlock> = BTreeMap::new();
        for x in h + 1..=h + m {
            if lab(x) == lab(x + m) {
                let blk = infinite
                    .entry(lab(x))
                    .or_insert_with(|| InfiniteBlock { finite: vec![], starts: vec![] });
                blk.starts.push(x);
            }
        }
        for (label, blk) in infinite.iter_mut() {
            blk.finite = members[label].iter().copied().filter(|&y| y <= h).collect();
        }
        let mut exceptional = Vec::new();
        let mut templates = Vec::new();
        for (label, elems) in &members {
            if infinite.contains_key(label) {
                continue;
            }
            let least = elems[0];
            if least <= h {
                exceptional.push(elems.clone());
            } else if least <= h + m {
                templates.push(elems.clone());
            }
        }
        let pp = PeriodicPartition::new(m, exceptional, templates, infinite.into_values().collect())
            .ok()?;
        (pp.restrict(w) == Partition::from_labels(labels)).then_some(pp)
    }
}

/// Blocks `(o1 + l·k) ∩ (o2 + l·k')` as template families.
fn template_meet(o1: &[u64], o2: &[u64], l: u64) -> Vec<Vec<u64>> {
    let mut shifts: BTreeSet<i64> = BTreeSet::new();
    for &x in o1 {
        for &y in o2 {
            let d = x as i64 - y as i64;
            if d.rem_euclid(l as i64) == 0 {
                shifts.insert(d / l as i64);
            }
        }
    }
    let o2set: BTreeSet<u64> = o2.iter().copied().collect();
    shifts
        .into_iter()
        .map(|delta| {
            let k0 = if delta < 0 { (-delta) as u64 } else { 0 };
            o1.iter()
                .copied()
                .filter(|&x| {
                    let y = x as i64 - delta * l as i64;
                    y > 0 && o2set.contains(&(y as u64))
                })
                .map(|x| x + l * k0)
                .collect()
        })
        .collect()
}

/// Blocks of the family `o + l·k` cut by one infinite block: finitely many
/// explicit blocks followed by a template family.
fn template_infinite_meet(o: &[u64], ib: &InfiniteBlock, l: u64) -> (Vec<Vec<u64>>, Vec<Vec<u64>>) {
    let top = ib.largest_constant();
    let least = o[0];
    let k0 = if least > top { 0 } else { (top - least) / l + 1 };
    let mut exceptional = Vec::new();
    for k in 0..k0 {
        let blk: Vec<u64> = o.iter().map(|x| x + l * k).filter(|&x| ib.contains(x, l)).collect();
        if !blk.is_empty() {
            exceptional.push(blk);
        }
    }
    let tail: Vec<u64> = o
        .iter()
        .copied()
        .filter(|&x| ib.starts.iter().any(|&s| (x as i64 - s as i64).rem_euclid(l as i64) == 0))
        .map(|x| x + l * k0)
        .collect();
    let templates = if tail.is_empty() { vec![] } else { vec![tail] };
    (exceptional, templates)
}

fn infinite_meet(a: &InfiniteBlock, b: &InfiniteBlock, l: u64) -> Option<InfiniteBlock> {
    let mut finite: Vec<u64> = a.finite.iter().copied().filter(|&x| b.contains(x, l)).collect();
    finite.extend(b.finite.iter().copied().filter(|&x| a.contains(x, l)));
    let mut starts = Vec::new();
    for &s in &a.starts {
        for &t in &b.starts {
            if s % l == t % l {
                starts.push(s.max(t));
            }
        }
    }
    (!finite.is_empty() || !starts.is_empty()).then_some(InfiniteBlock { finite, starts })
}

impl fmt::Debug for PeriodicPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for PeriodicPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let set = |v: &[u64]| {
            v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
        };
        write!(f, "m={} ex=[", self.modulus)?;
        for b in &self.exceptional {
            write!(f, "{{{}}}", set(b))?;
        }
        write!(f, "] tpl=[")?;
        for o in &self.templates {
            write!(f, "{{{}}}+{}k", set(o), self.modulus)?;
        }
        write!(f, "] inf=[")?;
        for b in &self.infinite {
            write!(f, "{{{}|{}}}", set(&b.finite), set(&b.starts))?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{integers_a, integers_b, integers_c};

    fn blocks(p: &Partition) -> Vec<Vec<u64>> {
        p.blocks().into_iter().map(|b| b.into_iter().map(|x| x as u64 + 1).collect()).collect()
    }

    /// Join computed on `[1, n]` from the restrictions.
    fn truncated_join(a: &PeriodicPartition, b: &PeriodicPartition, n: u64) -> Partition {
        a.restrict(n).join(&b.restrict(n)).unwrap()
    }

    #[test]
    fn validation_outcomes() {
        assert!(integers_a().validate().is_ok());
        let two_starts = PeriodicPartition::new(
            4,
            vec![],
            vec![],
            vec![
                InfiniteBlock { finite: vec![], starts: vec![1] },
                InfiniteBlock { finite: vec![], starts: vec![1, 2, 3, 4] },
            ],
        );
        assert!(matches!(two_starts, Err(Error::Overlap { state: 1 })));
        let missing = PeriodicPartition::new(4, vec![], vec![vec![1], vec![2], vec![3]], vec![]);
        assert!(matches!(missing, Err(Error::Residue { residue: 0, modulus: 4, count: 0 })));
        let hole = PeriodicPartition::new(4, vec![], vec![vec![5], vec![2], vec![3], vec![4]], vec![]);
        assert!(matches!(hole, Err(Error::Coverage { state: 1 })));
    }

    #[test]
    fn block_lookup() {
        assert_eq!(integers_a().block_of(14).unwrap(), BlockDescriptor::Finite(vec![14, 17]));
        assert_eq!(
            integers_c().block_of(8).unwrap(),
            BlockDescriptor::Infinite { finite: vec![], progressions: vec![(4, 4)] }
        );
        assert_eq!(integers_b().block_of(1).unwrap(), BlockDescriptor::Finite(vec![1, 2]));
        assert!(integers_b().block_of(0).is_err());
        assert!(integers_c().block_of(8).unwrap().contains(4000));
    }

    #[test]
    fn restriction_to_windows() {
        let a12 = blocks(&integers_a().restrict(12));
        let mut want = vec![
            vec![1, 2, 7],
            vec![3, 4],
            vec![5],
            vec![6, 9],
            vec![8, 11],
            vec![10],
            vec![12],
        ];
        want.sort();
        let mut got = a12;
        got.sort();
        assert_eq!(got, want);
        assert_eq!(blocks(&integers_c().restrict(1)), vec![vec![1]]);
        assert_eq!(
            blocks(&integers_c().restrict(8)),
            vec![vec![1, 5], vec![2, 6], vec![3, 7], vec![4, 8]]
        );
    }

    #[test]
    fn equality_is_extensional() {
        let b8 = PeriodicPartition::new(
            8,
            vec![],
            vec![vec![1, 2], vec![3, 4], vec![5, 6], vec![7, 8]],
            vec![],
        )
        .unwrap();
        assert!(integers_b().equals(&b8));
        assert!(!integers_b().equals(&integers_c()));
        assert!(integers_a().equals(&integers_a()));
        assert!(integers_c().equals(&integers_c().lift(12)));
    }

    #[test]
    fn joins_match_truncated_joins() {
        let (a, b, c) = (integers_a(), integers_b(), integers_c());
        let bc = b.join(&c).unwrap();
        assert!(bc.equals(&PeriodicPartition::singletons()));
        assert!(a.join(&a).unwrap().equals(&a));
        let ab = a.join(&b).unwrap();
        let mut want: Vec<Vec<u64>> = vec![vec![1, 2], vec![3, 4]];
        want.extend((5..=64).map(|x| vec![x]));
        let mut got = blocks(&ab.restrict(64));
        got.sort();
        assert_eq!(got, want);
        for (x, y) in [(&a, &b), (&a, &c), (&b, &c), (&c, &PeriodicPartition::trivial())] {
            let j = x.join(y).unwrap();
            assert_eq!(j.restrict(64), truncated_join(x, y, 64));
        }
    }

    #[test]
    fn known_state_working_partitions() {
        assert!(integers_c().known_state_working_partition().equals(&PeriodicPartition::trivial()));
        let s = PeriodicPartition::singletons();
        assert!(s.known_state_working_partition().equals(&s));
        let almost = PeriodicPartition::new(
            1,
            vec![vec![1], vec![2], vec![3, 4]],
            vec![vec![5]],
            vec![],
        )
        .unwrap();
        assert!(almost.known_state_working_partition().equals(&almost));
    }

    #[test]
    fn translation_and_prefix_isolation() {
        let b = integers_b();
        let t = b.translate(4);
        assert_eq!(t.block_of(5).unwrap(), BlockDescriptor::Finite(vec![5, 6]));
        assert!(t.is_singleton(3));
        let iso = integers_a().isolate_prefix(7);
        assert!((1..=7).all(|x| iso.is_singleton(x)));
        assert_eq!(iso.block_of(8).unwrap(), BlockDescriptor::Finite(vec![8, 11]));
    }

    #[test]
    fn windows_round_trip() {
        for p in [integers_a(), integers_b(), integers_c()] {
            let r = p.restrict(60);
            let back = (0..=15).find_map(|h| PeriodicPartition::from_window(r.labels(), h, 4)).unwrap();
            assert!(back.equals(&p), "{p} vs {back}");
        }
    }
}
