//! Finite posets, down-sets and the Heyting algebra of down-sets.
//!
//! Stages are indexed `0..len()`; a set of stages is a `u32` bitmask indexed
//! by that order. Down-sets are exactly the truth values of the internal
//! logic of the presheaf topos over the poset.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Default bound on the number of stages of a poset.
pub const DEFAULT_POSET_CAP: usize = 8;
/// Hard bound imposed by the `u32` mask representation.
pub const MAX_POSET_SIZE: usize = 32;
/// Default bound on the number of down-sets `all_downsets` will produce.
pub const DEFAULT_DOWNSET_CAP: usize = 1 << 16;

pub type StageMask = u32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PosetError {
    #[error("duplicate stage identifier `{0}`")]
    DuplicateElement(String),
    #[error("unknown stage identifier `{0}`")]
    ForeignElement(String),
    #[error("order relation has a cycle: `{0}` <= `{1}` and `{1}` <= `{0}`")]
    CycleError(String, String),
    #[error("a poset needs at least one stage")]
    Empty,
    #[error("{what}: {size} exceeds cap {cap}")]
    CapExceeded {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("operands belong to different posets")]
    PosetMismatch,
    #[error("operation `{0}` expects {1} operand(s)")]
    Arity(&'static str, usize),
}

/// A finite partially ordered set of named stages.
///
/// `below[p]` is the mask of all `q <= p` (including `p`), `above[p]` the
/// mask of all `q >= p`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FinPoset {
    names: Vec<String>,
    below: Vec<StageMask>,
    above: Vec<StageMask>,
}

impl fmt::Debug for FinPoset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FinPoset{{{}", self.names.join(" "))?;
        for (a, b) in self.cover_pairs() {
            write!(f, "; {}<={}", self.names[a], self.names[b])?;
        }
        write!(f, "}}")
    }
}

impl FinPoset {
    /// Builds a poset from identifiers and a generating relation, taking the
    /// reflexive-transitive closure. `(a, b)` means `a <= b`.
    pub fn new<S: AsRef<str>>(
        elements: &[S],
        leq_pairs: &[(S, S)],
    ) -> Result<FinPoset, PosetError> {
        Self::with_cap(elements, leq_pairs, DEFAULT_POSET_CAP)
    }

    pub fn with_cap<S: AsRef<str>>(
        elements: &[S],
        leq_pairs: &[(S, S)],
        cap: usize,
    ) -> Result<FinPoset, PosetError> {
        if elements.is_empty() {
            return Err(PosetError::Empty);
        }
        let cap = cap.min(MAX_POSET_SIZE);
        if elements.len() > cap {
            return Err(PosetError::CapExceeded {
                what: "poset size",
                size: elements.len(),
                cap,
            });
        }
        let names: Vec<String> = elements.iter().map(|s| s.as_ref().to_string()).collect();
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return Err(PosetError::DuplicateElement(n.clone()));
            }
        }
        let lookup = |s: &str| {
            names
                .iter()
                .position(|n| n == s)
                .ok_or_else(|| PosetError::ForeignElement(s.to_string()))
        };
        let mut pairs = Vec::with_capacity(leq_pairs.len());
        for (a, b) in leq_pairs {
            pairs.push((lookup(a.as_ref())?, lookup(b.as_ref())?));
        }
        Self::from_indices(names, &pairs)
    }

    /// Same as [`FinPoset::new`] with stages given by index.
    pub fn from_indices(names: Vec<String>, pairs: &[(usize, usize)]) -> Result<FinPoset, PosetError> {
        let n = names.len();
        if n == 0 {
            return Err(PosetError::Empty);
        }
        if n > MAX_POSET_SIZE {
            return Err(PosetError::CapExceeded {
                what: "poset size",
                size: n,
                cap: MAX_POSET_SIZE,
            });
        }
        let mut below: Vec<StageMask> = (0..n).map(|p| 1 << p).collect();
        for &(a, b) in pairs {
            below[b] |= 1 << a;
        }
        // Warshall on rows of the matrix.
        for k in 0..n {
            for p in 0..n {
                if below[p] & (1 << k) != 0 {
                    below[p] |= below[k];
                }
            }
        }
        for p in 0..n {
            for q in 0..n {
                if p != q && below[p] & (1 << q) != 0 && below[q] & (1 << p) != 0 {
                    let (a, b) = if p < q { (p, q) } else { (q, p) };
                    return Err(PosetError::CycleError(names[a].clone(), names[b].clone()));
                }
            }
        }
        let mut above = vec![0; n];
        for p in 0..n {
            for q in iter_mask(below[p]) {
                above[q] |= 1 << p;
            }
        }
        Ok(FinPoset { names, below, above })
    }

    /// The `n`-element chain `s0 <= s1 <= ...`.
    pub fn chain(names: &[&str]) -> FinPoset {
        let pairs: Vec<(usize, usize)> = (1..names.len()).map(|i| (i - 1, i)).collect();
        Self::from_indices(names.iter().map(|s| s.to_string()).collect(), &pairs)
            .expect("chains are posets")
    }

    pub fn antichain(names: &[&str]) -> FinPoset {
        Self::from_indices(names.iter().map(|s| s.to_string()).collect(), &[])
            .expect("antichains are posets")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, p: usize) -> &str {
        &self.names[p]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn full_mask(&self) -> StageMask {
        if self.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.len()) - 1
        }
    }

    /// `q <= p`.
    #[inline]
    pub fn leq(&self, q: usize, p: usize) -> bool {
        self.below[p] & (1 << q) != 0
    }

    /// Mask of `↓p`.
    #[inline]
    pub fn down(&self, p: usize) -> StageMask {
        self.below[p]
    }

    /// Mask of `↑p`.
    #[inline]
    pub fn up(&self, p: usize) -> StageMask {
        self.above[p]
    }

    /// Pairs `(q, p)` with `q < p` and nothing strictly in between.
    pub fn cover_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.len() {
            let strict = self.below[p] & !(1 << p);
            for q in iter_mask(strict) {
                let between = strict & self.above[q] & !(1 << q);
                if between == 0 {
                    out.push((q, p));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// All pairs `(q, p)` with `q <= p`, including the diagonal.
    pub fn leq_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for p in 0..self.len() {
            for q in iter_mask(self.below[p]) {
                out.push((q, p));
            }
        }
        out
    }

    /// Stages ordered so that every stage comes after all stages above it.
    pub fn top_down_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        // Height above: number of stages strictly above.
        order.sort_by_key(|&p| (self.above[p].count_ones(), p));
        order
    }

    /// Stages ordered so that every stage comes after all stages below it.
    pub fn bottom_up_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&p| (self.below[p].count_ones(), p));
        order
    }

    pub fn maximal(&self) -> Vec<usize> {
        (0..self.len()).filter(|&p| self.above[p] == 1 << p).collect()
    }

    pub fn top(&self) -> Option<usize> {
        (0..self.len()).find(|&p| self.below[p] == self.full_mask())
    }

    pub fn is_antichain(&self) -> bool {
        (0..self.len()).all(|p| self.below[p] == 1 << p)
    }

    pub fn is_down_closed(&self, mask: StageMask) -> bool {
        iter_mask(mask).all(|p| self.below[p] & !mask == 0)
    }

    pub fn close_down(&self, mask: StageMask) -> StageMask {
        iter_mask(mask).fold(0, |acc, p| acc | self.below[p])
    }

    /// Heyting implication on down-set masks:
    /// `{p : ∀q≤p. q∈u ⇒ q∈v}`.
    pub fn implies_mask(&self, u: StageMask, v: StageMask) -> StageMask {
        let bad = u & !v;
        let mut out = 0;
        for p in 0..self.len() {
            if self.below[p] & bad == 0 {
                out |= 1 << p;
            }
        }
        out
    }

    pub fn neg_mask(&self, u: StageMask) -> StageMask {
        self.implies_mask(u, 0)
    }

    /// Every down-closed subset in ascending mask order.
    pub fn downset_masks(&self, cap: usize) -> Result<Vec<StageMask>, PosetError> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, 0 as StageMask)];
        // Decide stages bottom-up; a stage may be included only if its whole
        // strict down-set already is.
        let order = self.bottom_up_order();
        while let Some((i, mask)) = stack.pop() {
            if i == order.len() {
                out.push(mask);
                if out.len() > cap {
                    return Err(PosetError::CapExceeded {
                        what: "down-set count",
                        size: out.len(),
                        cap,
                    });
                }
                continue;
            }
            let p = order[i];
            stack.push((i + 1, mask));
            if self.below[p] & !(1 << p) & !mask == 0 {
                stack.push((i + 1, mask | 1 << p));
            }
        }
        out.sort_unstable();
        Ok(out)
    }

    pub fn all_downsets(self: &Arc<Self>) -> Result<Vec<DownSet>, PosetError> {
        Ok(self
            .downset_masks(DEFAULT_DOWNSET_CAP)?
            .into_iter()
            .map(|mask| DownSet {
                poset: self.clone(),
                mask,
            })
            .collect())
    }

    pub fn downset(self: &Arc<Self>, mask: StageMask) -> Option<DownSet> {
        if mask & !self.full_mask() != 0 || !self.is_down_closed(mask) {
            return None;
        }
        Some(DownSet {
            poset: self.clone(),
            mask,
        })
    }

    /// Smallest down-set containing the named stages.
    pub fn down_closure<S: AsRef<str>>(
        self: &Arc<Self>,
        subset: &[S],
    ) -> Result<DownSet, PosetError> {
        let mut mask = 0;
        for s in subset {
            let p = self
                .index_of(s.as_ref())
                .ok_or_else(|| PosetError::ForeignElement(s.as_ref().to_string()))?;
            mask |= self.below[p];
        }
        Ok(DownSet {
            poset: self.clone(),
            mask,
        })
    }

    /// True iff `u ∨ ¬u` is the top down-set for every down-set `u`.
    pub fn is_boolean(&self) -> bool {
        let full = self.full_mask();
        self.downset_masks(usize::MAX)
            .expect("uncapped")
            .into_iter()
            .all(|u| u | self.neg_mask(u) == full)
    }

    /// Renders a stage mask as `{a, b}` in stage order.
    pub fn render_mask(&self, mask: StageMask) -> String {
        let items: Vec<&str> = iter_mask(mask).map(|p| self.names[p].as_str()).collect();
        format!("{{{}}}", items.join(", "))
    }
}

/// Iterates the set bits of a mask in increasing order.
pub fn iter_mask(mut mask: StageMask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

/// A down-closed set of stages of a particular poset.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct DownSet {
    poset: Arc<FinPoset>,
    mask: StageMask,
}

impl fmt::Debug for DownSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.poset.render_mask(self.mask))
    }
}

impl fmt::Display for DownSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.poset.render_mask(self.mask))
    }
}

impl DownSet {
    pub fn mask(&self) -> StageMask {
        self.mask
    }

    pub fn poset(&self) -> &Arc<FinPoset> {
        &self.poset
    }

    pub fn contains(&self, p: usize) -> bool {
        self.mask & (1 << p) != 0
    }

    pub fn is_top(&self) -> bool {
        self.mask == self.poset.full_mask()
    }

    pub fn is_bottom(&self) -> bool {
        self.mask == 0
    }

    pub fn is_subset(&self, other: &DownSet) -> bool {
        self.mask & !other.mask == 0
    }

    pub fn stage_names(&self) -> Vec<String> {
        iter_mask(self.mask)
            .map(|p| self.poset.names[p].clone())
            .collect()
    }

    pub fn top(poset: &Arc<FinPoset>) -> DownSet {
        DownSet {
            poset: poset.clone(),
            mask: poset.full_mask(),
        }
    }

    pub fn bottom(poset: &Arc<FinPoset>) -> DownSet {
        DownSet {
            poset: poset.clone(),
            mask: 0,
        }
    }

    fn same_poset(&self, other: &DownSet) -> Result<(), PosetError> {
        if Arc::ptr_eq(&self.poset, &other.poset) || self.poset == other.poset {
            Ok(())
        } else {
            Err(PosetError::PosetMismatch)
        }
    }

    pub fn meet(&self, other: &DownSet) -> Result<DownSet, PosetError> {
        self.same_poset(other)?;
        Ok(self.with_mask(self.mask & other.mask))
    }

    pub fn join(&self, other: &DownSet) -> Result<DownSet, PosetError> {
        self.same_poset(other)?;
        Ok(self.with_mask(self.mask | other.mask))
    }

    pub fn implies(&self, other: &DownSet) -> Result<DownSet, PosetError> {
        self.same_poset(other)?;
        Ok(self.with_mask(self.poset.implies_mask(self.mask, other.mask)))
    }

    pub fn neg(&self) -> DownSet {
        self.with_mask(self.poset.neg_mask(self.mask))
    }

    fn with_mask(&self, mask: StageMask) -> DownSet {
        DownSet {
            poset: self.poset.clone(),
            mask,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeytingOp {
    Meet,
    Join,
    Implies,
    Neg,
    Top,
    Bottom,
}

/// Uniform entry point for the Heyting operations, checking operand arity.
pub fn heyting(
    poset: &Arc<FinPoset>,
    op: HeytingOp,
    u: Option<&DownSet>,
    v: Option<&DownSet>,
) -> Result<DownSet, PosetError> {
    let check = |d: &DownSet| {
        if Arc::ptr_eq(d.poset(), poset) || **d.poset() == **poset {
            Ok(())
        } else {
            Err(PosetError::PosetMismatch)
        }
    };
    match (op, u, v) {
        (HeytingOp::Top, None, None) => Ok(DownSet::top(poset)),
        (HeytingOp::Bottom, None, None) => Ok(DownSet::bottom(poset)),
        (HeytingOp::Neg, Some(u), None) => {
            check(u)?;
            Ok(u.neg())
        }
        (HeytingOp::Meet, Some(u), Some(v)) => {
            check(u)?;
            u.meet(v)
        }
        (HeytingOp::Join, Some(u), Some(v)) => {
            check(u)?;
            u.join(v)
        }
        (HeytingOp::Implies, Some(u), Some(v)) => {
            check(u)?;
            u.implies(v)
        }
        (HeytingOp::Top, ..) => Err(PosetError::Arity("top", 0)),
        (HeytingOp::Bottom, ..) => Err(PosetError::Arity("bottom", 0)),
        (HeytingOp::Neg, ..) => Err(PosetError::Arity("neg", 1)),
        (HeytingOp::Meet, ..) => Err(PosetError::Arity("meet", 2)),
        (HeytingOp::Join, ..) => Err(PosetError::Arity("join", 2)),
        (HeytingOp::Implies, ..) => Err(PosetError::Arity("implies", 2)),
    }
}
