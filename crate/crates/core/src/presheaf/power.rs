//! Power objects, exponentials and external homs, materialized eagerly.

use std::cmp::Ordering;
use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;

use super::{terminal, NatTrans, Presheaf, PresheafError, Result};
use crate::poset::StageMask;

/// An element of `P(F)` at a stage `p`: one subset per stage, empty outside
/// `↓p`, closed under restriction.
pub type SubFamily = Box<[FixedBitSet]>;

/// An element of `G^F` at a stage `p`: one function table per stage, empty
/// outside `↓p`, commuting with restriction.
pub type MapFamily = Box<[Box<[u32]>]>;

/// `P(F)` with the decoding of each fiber element.
#[derive(Debug)]
pub struct PowerObject {
    pub object: Arc<Presheaf>,
    pub base: Arc<Presheaf>,
    elements: Vec<Vec<SubFamily>>,
    index: Vec<FxHashMap<SubFamily, u32>>,
}

impl PowerObject {
    pub fn element(&self, p: usize, e: u32) -> &SubFamily {
        &self.elements[p][e as usize]
    }

    pub fn elements(&self, p: usize) -> &[SubFamily] {
        &self.elements[p]
    }

    pub fn index_of(&self, p: usize, family: &[FixedBitSet]) -> Option<u32> {
        self.index[p].get(family).copied()
    }

    /// Is `x ∈ F(p)` a member of element `e ∈ P(F)(p)`?
    #[inline]
    pub fn member(&self, p: usize, e: u32, x: u32) -> bool {
        self.elements[p][e as usize][p].contains(x as usize)
    }

    /// Index of the empty subobject at `p`; always 0 by the ordering.
    pub fn empty_index(&self) -> u32 {
        0
    }

    /// Index of the whole of `F` restricted to `↓p`.
    pub fn whole_index(&self, p: usize) -> u32 {
        self.elements[p].len() as u32 - 1
    }
}

/// `G^F` with the decoding of each fiber element.
#[derive(Debug)]
pub struct Exponential {
    pub object: Arc<Presheaf>,
    pub domain: Arc<Presheaf>,
    pub codomain: Arc<Presheaf>,
    elements: Vec<Vec<MapFamily>>,
    index: Vec<FxHashMap<MapFamily, u32>>,
}

impl Exponential {
    pub fn element(&self, p: usize, e: u32) -> &MapFamily {
        &self.elements[p][e as usize]
    }

    #[inline]
    pub fn apply(&self, p: usize, e: u32, x: u32) -> u32 {
        self.elements[p][e as usize][p][x as usize]
    }

    pub fn index_of(&self, p: usize, family: &[Box<[u32]>]) -> Option<u32> {
        self.index[p].get(family).copied()
    }

    /// Index at `p` of the restriction of a natural transformation to `↓p`.
    pub fn index_of_nat(&self, p: usize, f: &NatTrans) -> Option<u32> {
        let down = self.object.poset().down(p);
        let fam: Vec<Box<[u32]>> = f
            .components()
            .iter()
            .enumerate()
            .map(|(q, c)| {
                if down & (1 << q) != 0 {
                    c.clone().into_boxed_slice()
                } else {
                    Box::default()
                }
            })
            .collect();
        self.index_of(p, &fam)
    }
}

fn cmp_bits(a: &FixedBitSet, b: &FixedBitSet) -> Ordering {
    let (x, y) = (a.as_slice(), b.as_slice());
    let len = x.len().max(y.len());
    for i in (0..len).rev() {
        let (u, v) = (x.get(i).copied().unwrap_or(0), y.get(i).copied().unwrap_or(0));
        match u.cmp(&v) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn cmp_subfamily(a: &SubFamily, b: &SubFamily) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match cmp_bits(x, y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

fn cap_error(what: &str, cap: usize) -> PresheafError {
    PresheafError::CapExceeded {
        what: what.to_string(),
        cap,
    }
}

/// All restriction-closed families of subsets of `base` over the stages in
/// `down`.
fn subfamilies(base: &Presheaf, down: StageMask, cap: usize) -> Result<Vec<SubFamily>> {
    let poset = base.poset();
    let n = poset.len();
    let order: Vec<usize> = poset
        .top_down_order()
        .into_iter()
        .filter(|&q| down & (1 << q) != 0)
        .collect();
    let empty: Vec<FixedBitSet> = (0..n)
        .map(|q| FixedBitSet::with_capacity(base.size(q) as usize))
        .collect();
    let mut out = Vec::new();
    let mut current = empty;
    fn rec(
        base: &Presheaf,
        order: &[usize],
        i: usize,
        current: &mut Vec<FixedBitSet>,
        out: &mut Vec<SubFamily>,
        cap: usize,
    ) -> Result<()> {
        if i == order.len() {
            if out.len() >= cap {
                return Err(cap_error("power-object fiber", cap));
            }
            out.push(current.clone().into_boxed_slice());
            return Ok(());
        }
        let q = order[i];
        let poset = base.poset();
        let size = base.size(q) as usize;
        let mut required = FixedBitSet::with_capacity(size);
        for &r in &order[..i] {
            if poset.leq(q, r) {
                for x in current[r].ones() {
                    required.insert(base.restrict(r, q, x as u32) as usize);
                }
            }
        }
        let free: Vec<usize> = (0..size).filter(|&x| !required.contains(x)).collect();
        if free.len() >= usize::BITS as usize - 1 || (1usize << free.len()) > cap {
            return Err(cap_error("power-object fiber", cap));
        }
        for pick in 0..(1usize << free.len()) {
            let mut s = required.clone();
            for (k, &x) in free.iter().enumerate() {
                if pick & (1 << k) != 0 {
                    s.insert(x);
                }
            }
            current[q] = s;
            rec(base, order, i + 1, current, out, cap)?;
        }
        current[q] = FixedBitSet::with_capacity(size);
        Ok(())
    }
    rec(base, &order, 0, &mut current, &mut out, cap)?;
    out.sort_by(cmp_subfamily);
    Ok(out)
}

/// The power object `P(F)`. Its fiber at `p` lists the subpresheaves of `F`
/// restricted to `↓p`, ordered lexicographically by per-stage masks, so the
/// empty subobject is element 0 and the whole one is last.
pub fn power_object(base: &Arc<Presheaf>, cap: usize) -> Result<PowerObject> {
    let poset = base.poset().clone();
    let n = poset.len();
    let mut elements = Vec::with_capacity(n);
    let mut index = Vec::with_capacity(n);
    for p in 0..n {
        let fams = subfamilies(base, poset.down(p), cap)?;
        let idx: FxHashMap<SubFamily, u32> = fams
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        elements.push(fams);
        index.push(idx);
    }
    let mut tables = vec![Vec::new(); n * n];
    for (q, p) in poset.leq_pairs() {
        let down_q = poset.down(q);
        tables[p * n + q] = elements[p]
            .iter()
            .map(|fam| {
                let truncated: Vec<FixedBitSet> = fam
                    .iter()
                    .enumerate()
                    .map(|(r, b)| {
                        if down_q & (1 << r) != 0 {
                            b.clone()
                        } else {
                            FixedBitSet::with_capacity(b.len())
                        }
                    })
                    .collect();
                index[q][truncated.as_slice()]
            })
            .collect();
    }
    let sizes = elements.iter().map(|e| e.len() as u32).collect();
    let object = Arc::new(Presheaf::from_parts(poset, sizes, None, tables)?);
    Ok(PowerObject {
        object,
        base: base.clone(),
        elements,
        index,
    })
}

/// All natural families `{h_q : F(q) → G(q)}` over the stages in `down`.
fn map_families(
    dom: &Presheaf,
    cod: &Presheaf,
    down: StageMask,
    cap: usize,
    what: &str,
) -> Result<Vec<MapFamily>> {
    let poset = dom.poset();
    let n = poset.len();
    let order: Vec<usize> = poset
        .top_down_order()
        .into_iter()
        .filter(|&q| down & (1 << q) != 0)
        .collect();
    let mut current: Vec<Box<[u32]>> = vec![Box::default(); n];
    let mut out = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn rec(
        dom: &Presheaf,
        cod: &Presheaf,
        order: &[usize],
        i: usize,
        current: &mut Vec<Box<[u32]>>,
        out: &mut Vec<MapFamily>,
        cap: usize,
        what: &str,
    ) -> Result<()> {
        if i == order.len() {
            if out.len() >= cap {
                return Err(cap_error(what, cap));
            }
            out.push(current.clone().into_boxed_slice());
            return Ok(());
        }
        let q = order[i];
        let poset = dom.poset();
        let size = dom.size(q) as usize;
        let mut forced: Vec<Option<u32>> = vec![None; size];
        for &r in &order[..i] {
            if !poset.leq(q, r) {
                continue;
            }
            for y in 0..dom.size(r) {
                let x = dom.restrict(r, q, y) as usize;
                let v = cod.restrict(r, q, current[r][y as usize]);
                match forced[x] {
                    Some(w) if w != v => return Ok(()),
                    _ => forced[x] = Some(v),
                }
            }
        }
        let free: Vec<usize> = (0..size).filter(|&x| forced[x].is_none()).collect();
        let radix = cod.size(q) as usize;
        if !free.is_empty() && radix == 0 {
            return Ok(());
        }
        let combos = if free.is_empty() {
            1usize
        } else {
            let mut c = 1usize;
            for _ in &free {
                c = c.saturating_mul(radix);
                if c > cap {
                    return Err(cap_error(what, cap));
                }
            }
            c
        };
        let base: Vec<u32> = forced.iter().map(|f| f.unwrap_or(0)).collect();
        for mut code in 0..combos {
            let mut h = base.clone();
            for &x in &free {
                h[x] = (code % radix) as u32;
                code /= radix;
            }
            current[q] = h.into_boxed_slice();
            rec(dom, cod, order, i + 1, current, out, cap, what)?;
        }
        current[q] = Box::default();
        Ok(())
    }
    rec(dom, cod, &order, 0, &mut current, &mut out, cap, what)?;
    out.sort();
    Ok(out)
}

/// The exponential `G^F`, whose fiber at `p` is the natural families of
/// maps over `↓p`; restriction truncates the family.
pub fn exponential(dom: &Arc<Presheaf>, cod: &Arc<Presheaf>, cap: usize) -> Result<Exponential> {
    dom.check_same_poset(cod)?;
    let poset = dom.poset().clone();
    let n = poset.len();
    let mut elements = Vec::with_capacity(n);
    let mut index = Vec::with_capacity(n);
    for p in 0..n {
        let fams = map_families(dom, cod, poset.down(p), cap, "exponential fiber")?;
        let idx: FxHashMap<MapFamily, u32> = fams
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        elements.push(fams);
        index.push(idx);
    }
    let mut tables = vec![Vec::new(); n * n];
    for (q, p) in poset.leq_pairs() {
        let down_q = poset.down(q);
        tables[p * n + q] = elements[p]
            .iter()
            .map(|fam| {
                let truncated: Vec<Box<[u32]>> = fam
                    .iter()
                    .enumerate()
                    .map(|(r, h)| {
                        if down_q & (1 << r) != 0 {
                            h.clone()
                        } else {
                            Box::default()
                        }
                    })
                    .collect();
                index[q][truncated.as_slice()]
            })
            .collect();
    }
    let sizes = elements.iter().map(|e| e.len() as u32).collect();
    let object = Arc::new(Presheaf::from_parts(poset, sizes, None, tables)?);
    Ok(Exponential {
        object,
        domain: dom.clone(),
        codomain: cod.clone(),
        elements,
        index,
    })
}

/// Every natural transformation `F → G`, in lexicographic order of their
/// component tables.
pub fn enumerate_nat_trans(
    dom: &Arc<Presheaf>,
    cod: &Arc<Presheaf>,
    cap: usize,
) -> Result<Vec<NatTrans>> {
    dom.check_same_poset(cod)?;
    let full = dom.poset().full_mask();
    Ok(map_families(dom, cod, full, cap, "natural transformation count")?
        .into_iter()
        .map(|fam| {
            let comps = fam.into_vec().into_iter().map(|c| c.into_vec()).collect();
            NatTrans::from_raw(dom.clone(), cod.clone(), comps)
        })
        .collect())
}

/// Global sections as compatible element families `s[p] ∈ F(p)`.
pub fn global_sections(f: &Arc<Presheaf>) -> Vec<Vec<u32>> {
    let one = Arc::new(terminal(f.poset()));
    enumerate_nat_trans(&one, f, usize::MAX)
        .expect("uncapped")
        .into_iter()
        .map(|t| t.components().iter().map(|c| c[0]).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{iter_mask, FinPoset};
    use crate::presheaf::{initial, DEFAULT_FIBER_CAP, DEFAULT_POWER_CAP};

    fn chain2() -> Arc<FinPoset> {
        Arc::new(FinPoset::chain(&["bot", "top"]))
    }

    fn wedge() -> Arc<FinPoset> {
        Arc::new(FinPoset::new(&["1", "a", "b"], &[("a", "1"), ("b", "1")]).unwrap())
    }

    /// Enumerates every per-stage subset choice and keeps the
    /// restriction-closed ones.
    fn brute_power_size(f: &Presheaf, p: usize) -> usize {
        let poset = f.poset();
        let stages: Vec<usize> = iter_mask(poset.down(p)).collect();
        let widths: Vec<u32> = stages.iter().map(|&q| f.size(q)).collect();
        let total: u32 = widths.iter().sum();
        let mut count = 0;
        for code in 0u64..(1 << total) {
            let mut masks = vec![0u64; poset.len()];
            let mut shift = 0;
            for (k, &q) in stages.iter().enumerate() {
                masks[q] = (code >> shift) & ((1 << widths[k]) - 1);
                shift += widths[k];
            }
            let closed = stages.iter().all(|&r| {
                stages.iter().all(|&q| {
                    !poset.leq(q, r)
                        || (0..f.size(r)).all(|x| {
                            masks[r] & (1 << x) == 0
                                || masks[q] & (1 << f.restrict(r, q, x)) != 0
                        })
                })
            });
            if closed {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn power_of_constant_two_on_chain() {
        let p = chain2();
        let f = Arc::new(Presheaf::constant(p, &["x", "y"]));
        let pw = power_object(&f, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(brute_power_size(&f, 1), 9);
        assert_eq!(brute_power_size(&f, 0), 4);
        assert_eq!(pw.object.sizes(), &[4, 9]);
        assert!(pw.element(1, 0).iter().all(|b| b.is_clear()));
        let whole = pw.element(1, pw.whole_index(1));
        assert_eq!(whole[0].count_ones(..), 2);
        assert_eq!(whole[1].count_ones(..), 2);
    }

    #[test]
    fn omega_on_wedge_matches_downsets() {
        let p = wedge();
        let one = Arc::new(terminal(&p));
        let omega = power_object(&one, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(omega.object.sizes(), &[5, 2, 2]);
    }

    #[test]
    fn power_of_initial_is_singleton() {
        let p = wedge();
        let zero = Arc::new(initial(&p));
        let pw = power_object(&zero, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(pw.object.sizes(), &[1, 1, 1]);
    }

    #[test]
    fn power_cap_is_enforced() {
        let p = chain2();
        let f = Arc::new(Presheaf::constant(p, &["x", "y"]));
        assert!(matches!(
            power_object(&f, 5),
            Err(PresheafError::CapExceeded { .. })
        ));
    }

    #[test]
    fn power_of_power_sizes() {
        let p = chain2();
        let u = Arc::new(Presheaf::constant(p, &["x", "y"]));
        let pu = power_object(&u, DEFAULT_POWER_CAP).unwrap();
        let ppu = power_object(&pu.object, DEFAULT_POWER_CAP).unwrap();
        // Product over bottom elements b of (2^|preimage(b)| + 1): 3·5·5·17.
        assert_eq!(ppu.object.sizes(), &[16, 1275]);
    }

    #[test]
    fn exponential_unit_laws() {
        let p = wedge();
        let one = Arc::new(terminal(&p));
        let g = Arc::new(
            Presheaf::validate(
                p.clone(),
                vec![
                    vec!["u".into(), "v".into()],
                    vec!["u".into()],
                    vec!["u".into(), "w".into()],
                ],
                vec![((0, 1), vec![0, 0]), ((0, 2), vec![0, 1])],
                DEFAULT_FIBER_CAP,
            )
            .unwrap(),
        );
        let e = exponential(&one, &g, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(e.object.sizes(), g.sizes());
        let e = exponential(&g, &one, DEFAULT_POWER_CAP).unwrap();
        assert_eq!(e.object.sizes(), &[1, 1, 1]);
    }

    #[test]
    fn exponential_constant_two() {
        let p = chain2();
        let f = Arc::new(Presheaf::constant(p, &["x", "y"]));
        let e = exponential(&f, &f, DEFAULT_POWER_CAP).unwrap();
        // Oracle: 16 pairs of self-maps, keep the commuting ones.
        let mut commuting = 0;
        for top in 0..4u32 {
            for bot in 0..4u32 {
                let h = |code: u32, x: u32| (code >> x) & 1;
                if (0..2).all(|x| h(top, x) == h(bot, x)) {
                    commuting += 1;
                }
            }
        }
        assert_eq!(commuting, 4);
        assert_eq!(e.object.sizes(), &[4, 4]);
    }

    #[test]
    fn nat_trans_counts_section6() {
        let (_, a) = crate::presheaf::tests::section6();
        let a = Arc::new(a);
        let one = Arc::new(terminal(a.poset()));
        assert_eq!(enumerate_nat_trans(&a, &one, 100).unwrap().len(), 1);
        assert_eq!(enumerate_nat_trans(&one, &a, 100).unwrap().len(), 0);
        assert_eq!(enumerate_nat_trans(&one, &one, 100).unwrap().len(), 1);
        assert!(global_sections(&a).is_empty());
    }

    #[test]
    fn global_sections_examples() {
        let p = chain2();
        let f = Arc::new(Presheaf::constant(p.clone(), &["x", "y"]));
        assert_eq!(global_sections(&f), vec![vec![0, 0], vec![1, 1]]);
        let zero = Arc::new(initial(&p));
        assert!(global_sections(&zero).is_empty());
    }

    #[test]
    fn exponential_global_sections_match_nat_trans() {
        let p = chain2();
        let f = Arc::new(
            Presheaf::validate(
                p.clone(),
                vec![vec!["c".into()], vec!["a".into(), "b".into()]],
                vec![((1, 0), vec![0, 0])],
                DEFAULT_FIBER_CAP,
            )
            .unwrap(),
        );
        let g = Arc::new(Presheaf::constant(p, &["x", "y"]));
        for (d, c) in [(&f, &g), (&g, &f), (&f, &f), (&g, &g)] {
            let e = exponential(d, c, DEFAULT_POWER_CAP).unwrap();
            let sections = global_sections(&e.object).len();
            let nats = enumerate_nat_trans(d, c, 1000).unwrap().len();
            assert_eq!(sections, nats);
        }
    }
}
