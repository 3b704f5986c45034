//! Finite-set-valued presheaves on a [`FinPoset`] and the constructions the
//! internal logic needs.
//!
//! Elements of a fiber are integer indices `0..size(p)`. A restriction table
//! for `q <= p` maps indices of `fiber(p)` to indices of `fiber(q)`.

mod construct;
mod ops;
mod power;

use std::fmt;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use thiserror::Error;

use crate::poset::{iter_mask, FinPoset, StageMask};

pub use construct::{
    construct, coproduct, initial, product, terminal, ConstructKind, Construction,
};
pub use ops::{complement_within, generated, image, quotient, sub_meet, sub_join, sub_ops, SubOp};
pub use power::{
    enumerate_nat_trans, exponential, global_sections, power_object, Exponential, MapFamily,
    PowerObject, SubFamily,
};

/// Default bound on user-declared fiber sizes.
pub const DEFAULT_FIBER_CAP: usize = 6;
/// Default bound on the fibers of power objects and exponentials.
pub const DEFAULT_POWER_CAP: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresheafError {
    #[error("restriction tables are not functorial at {r} <= {q} <= {p}")]
    FunctorialityError { p: String, q: String, r: String },
    #[error("missing restriction table for {q} <= {p}")]
    MissingTable { p: String, q: String },
    #[error("restriction table for {q} <= {p} is malformed: {reason}")]
    BadTable { p: String, q: String, reason: String },
    #[error("fiber at {stage} has {size} elements, cap is {cap}")]
    FiberCapExceeded { stage: String, size: usize, cap: usize },
    #[error("{what} would exceed cap {cap}")]
    CapExceeded { what: String, cap: usize },
    #[error("operands live over different posets")]
    PosetMismatch,
    #[error("subobjects live in different ambient presheaves")]
    AmbientMismatch,
    #[error("relation is not an equivalence at {stage}: {reason}")]
    NotEquivalence { stage: String, reason: String },
    #[error("family is not restriction-closed at {p} -> {q}")]
    NotRestrictionClosed { p: String, q: String },
    #[error("map is not natural at {q} <= {p}")]
    NotNatural { p: String, q: String },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, PresheafError>;

/// A finite-set-valued presheaf.
#[derive(Clone)]
pub struct Presheaf {
    poset: Arc<FinPoset>,
    sizes: Vec<u32>,
    labels: Option<Vec<Vec<String>>>,
    /// Indexed `p * n + q`; empty unless `q <= p`.
    tables: Vec<Vec<u32>>,
}

impl PartialEq for Presheaf {
    fn eq(&self, other: &Self) -> bool {
        self.sizes == other.sizes && self.tables == other.tables && self.poset == other.poset
    }
}

impl Eq for Presheaf {}

impl fmt::Debug for Presheaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Presheaf{{")?;
        for p in 0..self.poset.len() {
            if p > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", self.poset.name(p), self.sizes[p])?;
        }
        write!(f, "}}")
    }
}

impl Presheaf {
    /// Validates a presheaf from per-stage labels and restriction tables.
    ///
    /// `tables` holds `((p, q), table)` for `q <= p`; diagonal tables may be
    /// omitted and default to the identity.
    pub fn validate(
        poset: Arc<FinPoset>,
        labels: Vec<Vec<String>>,
        tables: Vec<((usize, usize), Vec<u32>)>,
        fiber_cap: usize,
    ) -> Result<Presheaf> {
        let n = poset.len();
        if labels.len() != n {
            return Err(PresheafError::Invalid(format!(
                "expected {n} fibers, got {}",
                labels.len()
            )));
        }
        for (p, fiber) in labels.iter().enumerate() {
            if fiber.len() > fiber_cap {
                return Err(PresheafError::FiberCapExceeded {
                    stage: poset.name(p).to_string(),
                    size: fiber.len(),
                    cap: fiber_cap,
                });
            }
        }
        let sizes: Vec<u32> = labels.iter().map(|f| f.len() as u32).collect();
        let mut slots: Vec<Option<Vec<u32>>> = vec![None; n * n];
        for ((p, q), table) in tables {
            if p >= n || q >= n || !poset.leq(q, p) {
                return Err(PresheafError::Invalid(format!(
                    "table given for non-comparable stages {p} -> {q}"
                )));
            }
            slots[p * n + q] = Some(table);
        }
        let mut out = vec![Vec::new(); n * n];
        for (q, p) in poset.leq_pairs() {
            let table = match slots[p * n + q].take() {
                Some(t) => t,
                None if p == q => (0..sizes[p]).collect(),
                None => {
                    return Err(PresheafError::MissingTable {
                        p: poset.name(p).into(),
                        q: poset.name(q).into(),
                    })
                }
            };
            out[p * n + q] = table;
        }
        Self::from_parts(poset, sizes, Some(labels), out)
    }

    /// Builds a presheaf from tables on cover pairs only; the remaining
    /// tables are composed along chains of covers. Path independence is then
    /// checked by the functoriality test.
    pub fn from_covers(
        poset: Arc<FinPoset>,
        labels: Vec<Vec<String>>,
        covers: Vec<((usize, usize), Vec<u32>)>,
        fiber_cap: usize,
    ) -> Result<Presheaf> {
        let n = poset.len();
        let sizes: Vec<u32> = labels.iter().map(|f| f.len() as u32).collect();
        let mut slots: Vec<Option<Vec<u32>>> = vec![None; n * n];
        for ((p, q), t) in covers {
            if p < n && q < n {
                slots[p * n + q] = Some(t);
            }
        }
        // Fill from the bottom up so that every `m -> q` with `m < p` exists.
        for p in poset.bottom_up_order() {
            if slots[p * n + p].is_none() {
                slots[p * n + p] = Some((0..sizes[p]).collect());
            }
            for q in iter_mask(poset.down(p) & !(1 << p)) {
                if slots[p * n + q].is_some() {
                    continue;
                }
                let via = poset
                    .cover_pairs()
                    .into_iter()
                    .find(|&(m, top)| top == p && poset.leq(q, m) && slots[p * n + m].is_some());
                let Some((m, _)) = via else {
                    return Err(PresheafError::MissingTable {
                        p: poset.name(p).into(),
                        q: poset.name(q).into(),
                    });
                };
                let upper = slots[p * n + m].as_ref().unwrap();
                let lower = slots[m * n + q].as_ref().ok_or_else(|| PresheafError::MissingTable {
                    p: poset.name(m).into(),
                    q: poset.name(q).into(),
                })?;
                let mut composed = Vec::with_capacity(upper.len());
                for &x in upper {
                    let y = *lower.get(x as usize).ok_or_else(|| PresheafError::BadTable {
                        p: poset.name(p).into(),
                        q: poset.name(m).into(),
                        reason: format!("value {x} out of range"),
                    })?;
                    composed.push(y);
                }
                slots[p * n + q] = Some(composed);
            }
        }
        let tables: Vec<((usize, usize), Vec<u32>)> = poset
            .leq_pairs()
            .into_iter()
            .map(|(q, p)| ((p, q), slots[p * n + q].take().unwrap()))
            .collect();
        Self::validate(poset, labels, tables, fiber_cap)
    }

    /// Common constructor for validated and derived presheaves. Checks table
    /// shapes and functoriality.
    pub(crate) fn from_parts(
        poset: Arc<FinPoset>,
        sizes: Vec<u32>,
        labels: Option<Vec<Vec<String>>>,
        tables: Vec<Vec<u32>>,
    ) -> Result<Presheaf> {
        let n = poset.len();
        let name = |i: usize| poset.name(i).to_string();
        for (q, p) in poset.leq_pairs() {
            let t = &tables[p * n + q];
            if t.len() != sizes[p] as usize {
                return Err(PresheafError::BadTable {
                    p: name(p),
                    q: name(q),
                    reason: format!("expected {} entries, got {}", sizes[p], t.len()),
                });
            }
            if let Some(&bad) = t.iter().find(|&&y| y >= sizes[q]) {
                return Err(PresheafError::BadTable {
                    p: name(p),
                    q: name(q),
                    reason: format!("value {bad} out of range"),
                });
            }
            if p == q && t.iter().enumerate().any(|(i, &y)| i as u32 != y) {
                return Err(PresheafError::FunctorialityError {
                    p: name(p),
                    q: name(p),
                    r: name(p),
                });
            }
        }
        for p in 0..n {
            for q in iter_mask(poset.down(p)) {
                for r in iter_mask(poset.down(q)) {
                    let pq = &tables[p * n + q];
                    let qr = &tables[q * n + r];
                    let pr = &tables[p * n + r];
                    if pq.iter().zip(pr).any(|(&y, &z)| qr[y as usize] != z) {
                        return Err(PresheafError::FunctorialityError {
                            p: name(p),
                            q: name(q),
                            r: name(r),
                        });
                    }
                }
            }
        }
        Ok(Presheaf {
            poset,
            sizes,
            labels,
            tables,
        })
    }

    /// Presheaf with the same fiber at every stage and identity restrictions.
    pub fn constant(poset: Arc<FinPoset>, elems: &[&str]) -> Presheaf {
        let n = poset.len();
        let labels = vec![elems.iter().map(|s| s.to_string()).collect(); n];
        let sizes = vec![elems.len() as u32; n];
        let mut tables = vec![Vec::new(); n * n];
        for (q, p) in poset.leq_pairs() {
            tables[p * n + q] = (0..elems.len() as u32).collect();
        }
        Presheaf {
            poset,
            sizes,
            labels: Some(labels),
            tables,
        }
    }

    pub fn poset(&self) -> &Arc<FinPoset> {
        &self.poset
    }

    #[inline]
    pub fn size(&self, p: usize) -> u32 {
        self.sizes[p]
    }

    pub fn sizes(&self) -> &[u32] {
        &self.sizes
    }

    /// Restriction table for `q <= p`.
    #[inline]
    pub fn table(&self, p: usize, q: usize) -> &[u32] {
        &self.tables[p * self.poset.len() + q]
    }

    #[inline]
    pub fn restrict(&self, p: usize, q: usize, x: u32) -> u32 {
        self.tables[p * self.poset.len() + q][x as usize]
    }

    pub fn label(&self, p: usize, x: u32) -> String {
        match &self.labels {
            Some(l) => l[p][x as usize].clone(),
            None => format!("#{x}"),
        }
    }

    pub fn labels(&self) -> Option<&Vec<Vec<String>>> {
        self.labels.as_ref()
    }

    pub fn stage_labels(&self, p: usize) -> Vec<String> {
        (0..self.sizes[p]).map(|x| self.label(p, x)).collect()
    }

    pub fn with_labels(mut self, labels: Vec<Vec<String>>) -> Presheaf {
        assert!(labels
            .iter()
            .zip(&self.sizes)
            .all(|(l, &s)| l.len() == s as usize));
        self.labels = Some(labels);
        self
    }

    pub(crate) fn check_same_poset(&self, other: &Presheaf) -> Result<()> {
        if Arc::ptr_eq(&self.poset, &other.poset) || self.poset == other.poset {
            Ok(())
        } else {
            Err(PresheafError::PosetMismatch)
        }
    }

    /// The whole presheaf as a subobject of itself.
    pub fn whole(self: &Arc<Self>) -> Subpresheaf {
        let chosen = self
            .sizes
            .iter()
            .map(|&s| {
                let mut b = FixedBitSet::with_capacity(s as usize);
                b.insert_range(..);
                b
            })
            .collect();
        Subpresheaf {
            of: self.clone(),
            chosen,
        }
    }

    pub fn empty_sub(self: &Arc<Self>) -> Subpresheaf {
        Subpresheaf {
            of: self.clone(),
            chosen: self
                .sizes
                .iter()
                .map(|&s| FixedBitSet::with_capacity(s as usize))
                .collect(),
        }
    }
}

/// A restriction-closed choice of subsets of the fibers of a presheaf.
#[derive(Clone, PartialEq, Eq)]
pub struct Subpresheaf {
    of: Arc<Presheaf>,
    chosen: Vec<FixedBitSet>,
}

impl fmt::Debug for Subpresheaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let poset = self.of.poset();
        write!(f, "Sub{{")?;
        for (p, bits) in self.chosen.iter().enumerate() {
            if p > 0 {
                write!(f, ", ")?;
            }
            let items: Vec<String> = bits.ones().map(|x| self.of.label(p, x as u32)).collect();
            write!(f, "{}: {{{}}}", poset.name(p), items.join(" "))?;
        }
        write!(f, "}}")
    }
}

impl Subpresheaf {
    pub fn new(of: Arc<Presheaf>, chosen: Vec<FixedBitSet>) -> Result<Subpresheaf> {
        let poset = of.poset().clone();
        if chosen.len() != poset.len() {
            return Err(PresheafError::Invalid("one subset per stage expected".into()));
        }
        let mut chosen = chosen;
        for (p, bits) in chosen.iter_mut().enumerate() {
            if bits.ones().any(|x| x >= of.size(p) as usize) {
                return Err(PresheafError::Invalid(format!(
                    "subset at {} mentions a foreign element",
                    poset.name(p)
                )));
            }
            bits.grow(of.size(p) as usize);
        }
        for (q, p) in poset.leq_pairs() {
            for x in chosen[p].ones() {
                if !chosen[q].contains(of.restrict(p, q, x as u32) as usize) {
                    return Err(PresheafError::NotRestrictionClosed {
                        p: poset.name(p).into(),
                        q: poset.name(q).into(),
                    });
                }
            }
        }
        Ok(Subpresheaf { of, chosen })
    }

    /// Builds from per-stage index lists.
    pub fn from_indices(of: Arc<Presheaf>, chosen: &[&[u32]]) -> Result<Subpresheaf> {
        let sets = chosen
            .iter()
            .enumerate()
            .map(|(p, xs)| {
                let mut b = FixedBitSet::with_capacity(of.sizes.get(p).copied().unwrap_or(0) as usize);
                for &x in *xs {
                    b.grow(x as usize + 1);
                    b.insert(x as usize);
                }
                b
            })
            .collect();
        Subpresheaf::new(of, sets)
    }

    pub(crate) fn from_raw(of: Arc<Presheaf>, chosen: Vec<FixedBitSet>) -> Subpresheaf {
        Subpresheaf { of, chosen }
    }

    pub fn ambient(&self) -> &Arc<Presheaf> {
        &self.of
    }

    pub fn chosen(&self, p: usize) -> &FixedBitSet {
        &self.chosen[p]
    }

    pub fn all_chosen(&self) -> &[FixedBitSet] {
        &self.chosen
    }

    pub fn contains(&self, p: usize, x: u32) -> bool {
        self.chosen[p].contains(x as usize)
    }

    pub fn is_whole(&self) -> bool {
        self.chosen
            .iter()
            .enumerate()
            .all(|(p, b)| b.count_ones(..) == self.of.size(p) as usize)
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.iter().all(|b| b.is_clear())
    }

    /// Restricts to `↓p`, clearing stages outside it.
    pub fn truncate(&self, down: StageMask) -> Vec<FixedBitSet> {
        self.chosen
            .iter()
            .enumerate()
            .map(|(q, b)| {
                if down & (1 << q) != 0 {
                    b.clone()
                } else {
                    FixedBitSet::with_capacity(b.len())
                }
            })
            .collect()
    }

    /// Presheaf whose fibers are the chosen elements, with labels inherited.
    pub fn as_presheaf(&self) -> Presheaf {
        let poset = self.of.poset().clone();
        let n = poset.len();
        let members: Vec<Vec<u32>> = self
            .chosen
            .iter()
            .map(|b| b.ones().map(|x| x as u32).collect())
            .collect();
        let sizes = members.iter().map(|m| m.len() as u32).collect();
        let labels = members
            .iter()
            .enumerate()
            .map(|(p, m)| m.iter().map(|&x| self.of.label(p, x)).collect())
            .collect();
        let mut tables = vec![Vec::new(); n * n];
        for (q, p) in poset.leq_pairs() {
            tables[p * n + q] = members[p]
                .iter()
                .map(|&x| {
                    let y = self.of.restrict(p, q, x);
                    members[q].binary_search(&y).expect("restriction-closed") as u32
                })
                .collect();
        }
        Presheaf::from_parts(poset, sizes, Some(labels), tables).expect("subobject of a presheaf")
    }
}

/// A natural transformation between presheaves over one poset.
#[derive(Clone, PartialEq, Eq)]
pub struct NatTrans {
    source: Arc<Presheaf>,
    target: Arc<Presheaf>,
    components: Vec<Vec<u32>>,
}

impl fmt::Debug for NatTrans {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let poset = self.source.poset();
        write!(f, "NatTrans{{")?;
        for (p, comp) in self.components.iter().enumerate() {
            if p > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}:", poset.name(p))?;
            for (x, &y) in comp.iter().enumerate() {
                write!(
                    f,
                    " {}=>{}",
                    self.source.label(p, x as u32),
                    self.target.label(p, y)
                )?;
            }
        }
        write!(f, "}}")
    }
}

impl NatTrans {
    pub fn new(
        source: Arc<Presheaf>,
        target: Arc<Presheaf>,
        components: Vec<Vec<u32>>,
    ) -> Result<NatTrans> {
        source.check_same_poset(&target)?;
        let poset = source.poset().clone();
        if components.len() != poset.len() {
            return Err(PresheafError::Invalid("one component per stage expected".into()));
        }
        for (p, c) in components.iter().enumerate() {
            if c.len() != source.size(p) as usize || c.iter().any(|&y| y >= target.size(p)) {
                return Err(PresheafError::Invalid(format!(
                    "component at {} has the wrong shape",
                    poset.name(p)
                )));
            }
        }
        for (q, p) in poset.leq_pairs() {
            for x in 0..source.size(p) {
                let lhs = target.restrict(p, q, components[p][x as usize]);
                let rhs = components[q][source.restrict(p, q, x) as usize];
                if lhs != rhs {
                    return Err(PresheafError::NotNatural {
                        p: poset.name(p).into(),
                        q: poset.name(q).into(),
                    });
                }
            }
        }
        Ok(NatTrans {
            source,
            target,
            components,
        })
    }

    pub(crate) fn from_raw(
        source: Arc<Presheaf>,
        target: Arc<Presheaf>,
        components: Vec<Vec<u32>>,
    ) -> NatTrans {
        NatTrans {
            source,
            target,
            components,
        }
    }

    pub fn identity(of: &Arc<Presheaf>) -> NatTrans {
        NatTrans {
            source: of.clone(),
            target: of.clone(),
            components: of.sizes.iter().map(|&s| (0..s).collect()).collect(),
        }
    }

    pub fn source(&self) -> &Arc<Presheaf> {
        &self.source
    }

    pub fn target(&self) -> &Arc<Presheaf> {
        &self.target
    }

    pub fn component(&self, p: usize) -> &[u32] {
        &self.components[p]
    }

    pub fn components(&self) -> &[Vec<u32>] {
        &self.components
    }

    pub fn apply(&self, p: usize, x: u32) -> u32 {
        self.components[p][x as usize]
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &NatTrans) -> Result<NatTrans> {
        if *self.target != *other.source {
            return Err(PresheafError::Invalid("maps do not compose".into()));
        }
        let components = self
            .components
            .iter()
            .zip(&other.components)
            .map(|(f, g)| f.iter().map(|&x| g[x as usize]).collect())
            .collect();
        Ok(NatTrans {
            source: self.source.clone(),
            target: other.target.clone(),
            components,
        })
    }

    pub fn is_surjective(&self) -> bool {
        self.components.iter().enumerate().all(|(p, c)| {
            let mut hit = vec![false; self.target.size(p) as usize];
            for &y in c {
                hit[y as usize] = true;
            }
            hit.into_iter().all(|h| h)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain2() -> Arc<FinPoset> {
        Arc::new(FinPoset::chain(&["bot", "top"]))
    }

    fn chain3() -> Arc<FinPoset> {
        Arc::new(FinPoset::chain(&["lo", "mid", "hi"]))
    }

    pub(crate) fn section6() -> (Arc<FinPoset>, Presheaf) {
        let poset = Arc::new(
            FinPoset::new(
                &["p", "q", "r", "s"],
                &[("p", "r"), ("p", "s"), ("q", "r"), ("q", "s")],
            )
            .unwrap(),
        );
        let fib = vec![vec!["0".to_string(), "1".to_string()]; 4];
        let mut tables = Vec::new();
        for (q, p) in poset.leq_pairs() {
            let t = if p == 2 && q == 0 { vec![1, 0] } else { vec![0, 1] };
            tables.push(((p, q), t));
        }
        let a = Presheaf::validate(poset.clone(), fib, tables, DEFAULT_FIBER_CAP).unwrap();
        (poset, a)
    }

    #[test]
    fn terminal_like_presheaf_validates() {
        let p = chain2();
        let one = Presheaf::validate(
            p.clone(),
            vec![vec!["*".into()], vec!["*".into()]],
            vec![((1, 0), vec![0])],
            DEFAULT_FIBER_CAP,
        )
        .unwrap();
        assert_eq!(one.sizes(), &[1, 1]);
    }

    #[test]
    fn section6_presheaf_validates() {
        let (_, a) = section6();
        assert_eq!(a.sizes(), &[2, 2, 2, 2]);
        assert_eq!(a.table(2, 0), &[1, 0]);
        assert_eq!(a.table(3, 0), &[0, 1]);
    }

    #[test]
    fn composition_violation_is_reported() {
        let p = chain3();
        let fib = vec![vec!["x".to_string(), "y".to_string()]; 3];
        let tables = vec![
            ((2, 1), vec![0, 1]),
            ((1, 0), vec![0, 1]),
            ((2, 0), vec![1, 0]),
        ];
        let err = Presheaf::validate(p, fib, tables, DEFAULT_FIBER_CAP).unwrap_err();
        assert_eq!(
            err,
            PresheafError::FunctorialityError {
                p: "hi".into(),
                q: "mid".into(),
                r: "lo".into()
            }
        );
    }

    #[test]
    fn missing_table_and_fiber_cap() {
        let p = chain2();
        let fib = vec![vec!["x".to_string()], vec!["x".to_string()]];
        assert!(matches!(
            Presheaf::validate(p.clone(), fib, vec![], DEFAULT_FIBER_CAP),
            Err(PresheafError::MissingTable { .. })
        ));
        let big: Vec<String> = (0..7).map(|i| i.to_string()).collect();
        assert!(matches!(
            Presheaf::validate(p, vec![big.clone(), big], vec![], DEFAULT_FIBER_CAP),
            Err(PresheafError::FiberCapExceeded { .. })
        ));
    }

    #[test]
    fn covers_compose_into_full_tables() {
        let p = chain3();
        let fib = vec![vec!["x".to_string(), "y".to_string()]; 3];
        let a = Presheaf::from_covers(
            p,
            fib,
            vec![((2, 1), vec![1, 0]), ((1, 0), vec![1, 0])],
            DEFAULT_FIBER_CAP,
        )
        .unwrap();
        assert_eq!(a.table(2, 0), &[0, 1]);
    }

    #[test]
    fn subpresheaf_must_be_restriction_closed() {
        let p = chain2();
        let a = Arc::new(Presheaf::constant(p, &["x", "y"]));
        // {x} at top but nothing at bot.
        assert!(matches!(
            Subpresheaf::from_indices(a.clone(), &[&[], &[0]]),
            Err(PresheafError::NotRestrictionClosed { .. })
        ));
        let s = Subpresheaf::from_indices(a.clone(), &[&[0], &[]]).unwrap();
        assert!(!s.is_whole() && !s.is_empty());
        assert!(a.whole().is_whole());
        let sub = s.as_presheaf();
        assert_eq!(sub.sizes(), &[1, 0]);
    }

    #[test]
    fn naturality_is_checked() {
        let (_, a) = section6();
        let a = Arc::new(a);
        assert!(NatTrans::new(a.clone(), a.clone(), vec![vec![0, 1]; 4]).is_ok());
        // Constant map to 0 everywhere is not natural across the swap.
        assert!(matches!(
            NatTrans::new(a.clone(), a.clone(), vec![vec![0, 0]; 4]),
            Err(PresheafError::NotNatural { .. })
        ));
    }
}
