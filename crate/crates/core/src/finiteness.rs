//! The subpresheaf of `P(A)` of Kuratowski-finite subobjects, computed as a
//! least fixpoint in two ways: from the empty subobject by adjoining
//! generated singletons, and from singletons by binary union.

use std::sync::Arc;

use fixedbitset::FixedBitSet;

use crate::poset::iter_mask;
use crate::presheaf::{power_object, PowerObject, Presheaf, Result, SubFamily, Subpresheaf};

/// A restriction-closed family of subobjects of `A`, as a subobject of
/// `P(A)`.
#[derive(Debug, Clone)]
pub struct KFamily {
    pub power: Arc<PowerObject>,
    pub family: Subpresheaf,
}

impl KFamily {
    pub fn of(&self) -> &Arc<Presheaf> {
        &self.power.base
    }

    /// Is element `e` of `P(A)(p)` in the family at `p`?
    #[inline]
    pub fn contains(&self, p: usize, e: u32) -> bool {
        self.family.contains(p, e)
    }

    pub fn members(&self, p: usize) -> Vec<u32> {
        self.family.chosen(p).ones().map(|e| e as u32).collect()
    }

    pub fn same_members(&self, other: &KFamily) -> bool {
        self.family.all_chosen() == other.family.all_chosen()
    }
}

/// `⟨a⟩` as an element of `P(A)(p)`: the restrictions of `a` below `p`.
fn singleton(pw: &PowerObject, p: usize, a: u32) -> SubFamily {
    let base = &pw.base;
    let poset = base.poset();
    (0..poset.len())
        .map(|q| {
            let mut b = FixedBitSet::with_capacity(base.size(q) as usize);
            if poset.leq(q, p) {
                b.insert(base.restrict(p, q, a) as usize);
            }
            b
        })
        .collect()
}

fn union(x: &SubFamily, y: &SubFamily) -> SubFamily {
    x.iter().zip(y.iter()).map(|(a, b)| a | b).collect()
}

struct Closure<'a> {
    pw: &'a PowerObject,
    sets: Vec<FixedBitSet>,
    work: Vec<(usize, u32)>,
}

impl Closure<'_> {
    fn new(pw: &PowerObject) -> Closure<'_> {
        let sets = (0..pw.object.poset().len())
            .map(|p| FixedBitSet::with_capacity(pw.object.size(p) as usize))
            .collect();
        Closure {
            pw,
            sets,
            work: Vec::new(),
        }
    }

    /// Adds `e` at `p` together with all its restrictions.
    fn add(&mut self, p: usize, e: u32) {
        let poset = self.pw.object.poset().clone();
        for q in iter_mask(poset.down(p)) {
            let r = self.pw.object.restrict(p, q, e);
            if !self.sets[q].put(r as usize) {
                self.work.push((q, r));
            }
        }
    }

    fn add_family(&mut self, p: usize, fam: &SubFamily) {
        let e = self
            .pw
            .index_of(p, fam)
            .expect("union of subobjects is a subobject");
        self.add(p, e);
    }

    fn finish(self) -> Subpresheaf {
        Subpresheaf::new(self.pw.object.clone(), self.sets).expect("closure is restriction-closed")
    }
}

/// Least family containing the empty subobject and closed under
/// `Z ↦ Z ∪ ⟨a⟩` for `a ∈ A(p)`, at every stage, and under restriction.
pub fn kfinite_by_adjoin_in(pw: &Arc<PowerObject>) -> KFamily {
    let n = pw.object.poset().len();
    let mut c = Closure::new(pw);
    let singles: Vec<Vec<SubFamily>> = (0..n)
        .map(|p| (0..pw.base.size(p)).map(|a| singleton(pw, p, a)).collect())
        .collect();
    for p in 0..n {
        c.add(p, pw.empty_index());
    }
    while let Some((p, z)) = c.work.pop() {
        let zf = pw.element(p, z).clone();
        for s in &singles[p] {
            c.add_family(p, &union(&zf, s));
        }
    }
    KFamily {
        power: pw.clone(),
        family: c.finish(),
    }
}

/// Least family containing the empty subobject and every `⟨a⟩`, closed
/// under binary union at each stage and under restriction.
pub fn kfinite_by_union_in(pw: &Arc<PowerObject>) -> KFamily {
    let n = pw.object.poset().len();
    let mut c = Closure::new(pw);
    for p in 0..n {
        c.add(p, pw.empty_index());
        for a in 0..pw.base.size(p) {
            c.add_family(p, &singleton(pw, p, a));
        }
    }
    while let Some((p, z)) = c.work.pop() {
        let zf = pw.element(p, z).clone();
        let members: Vec<usize> = c.sets[p].ones().collect();
        for w in members {
            let wf = pw.element(p, w as u32);
            c.add_family(p, &union(&zf, wf));
        }
    }
    KFamily {
        power: pw.clone(),
        family: c.finish(),
    }
}

pub fn kfinite_by_adjoin(a: &Arc<Presheaf>, power_cap: usize) -> Result<KFamily> {
    Ok(kfinite_by_adjoin_in(&Arc::new(power_object(a, power_cap)?)))
}

pub fn kfinite_by_union(a: &Arc<Presheaf>, power_cap: usize) -> Result<KFamily> {
    Ok(kfinite_by_union_in(&Arc::new(power_object(a, power_cap)?)))
}

/// Is `s`, restricted to `↓at`, K-finite at stage `at`?
pub fn is_kfinite(family: &KFamily, s: &Subpresheaf, at: usize) -> bool {
    let down = family.of().poset().down(at);
    match family.power.index_of(at, &s.truncate(down)) {
        Some(e) => family.contains(at, e),
        None => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::FinPoset;
    use crate::presheaf::{initial, terminal, DEFAULT_POWER_CAP};

    fn chain2() -> Arc<FinPoset> {
        Arc::new(FinPoset::chain(&["bot", "top"]))
    }

    /// Members at `p`, rendered as per-stage element lists `[bot, top]`.
    fn render(k: &KFamily, p: usize) -> Vec<Vec<Vec<usize>>> {
        k.members(p)
            .into_iter()
            .map(|e| k.power.element(p, e).iter().map(|b| b.ones().collect()).collect())
            .collect()
    }

    #[test]
    fn initial_gives_only_empty() {
        let z = Arc::new(initial(&chain2()));
        let k = kfinite_by_adjoin(&z, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(k.members(0), vec![0]);
        assert_eq!(k.members(1), vec![0]);
        assert!(k.same_members(&kfinite_by_union(&z, DEFAULT_POWER_CAP).unwrap()));
    }

    #[test]
    fn constant_two_on_chain() {
        let f = Arc::new(Presheaf::constant(chain2(), &["x", "y"]));
        let k = kfinite_by_adjoin(&f, DEFAULT_POWER_CAP).unwrap();
        let mut top = render(&k, 1);
        top.sort();
        // Hand-computed: only the subobjects equal at both stages.
        let mut expect = vec![
            vec![vec![], vec![]],
            vec![vec![0], vec![0]],
            vec![vec![1], vec![1]],
            vec![vec![0, 1], vec![0, 1]],
        ];
        expect.sort();
        assert_eq!(top, expect);
        assert_eq!(k.members(0).len(), 4);
        assert!(k.same_members(&kfinite_by_union(&f, DEFAULT_POWER_CAP).unwrap()));
        // (∅ at top, {x} at bot): finite at bot, not at top.
        let mixed = Subpresheaf::from_indices(f.clone(), &[&[0], &[]]).unwrap();
        assert!(!is_kfinite(&k, &mixed, 1));
        assert!(is_kfinite(&k, &mixed, 0));
        assert!(is_kfinite(&k, &f.empty_sub(), 1));
    }

    #[test]
    fn subterminals_finite_exactly_when_decided() {
        // A truth value is K-finite iff it is empty or inhabited there: at
        // top only the two extremes, at bot both.
        let one = Arc::new(terminal(&chain2()));
        let k = kfinite_by_adjoin(&one, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(k.members(1), vec![0, 2]);
        assert_eq!(k.members(0), vec![0, 1]);
        assert!(k.same_members(&kfinite_by_union(&one, DEFAULT_POWER_CAP).unwrap()));
    }

    #[test]
    fn bowtie_object_is_finite_everywhere() {
        let a = crate::model::bowtie4().sort("A").unwrap().clone();
        let k = kfinite_by_adjoin(&a, DEFAULT_POWER_CAP).unwrap();
        assert!(k.same_members(&kfinite_by_union(&a, DEFAULT_POWER_CAP).unwrap()));
        for p in 0..4 {
            assert!(is_kfinite(&k, &a.whole(), p));
        }
    }
}
