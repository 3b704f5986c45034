//! Images, quotients and the lattice operations on subpresheaves.

use std::sync::Arc;

use fixedbitset::FixedBitSet;

use super::{NatTrans, Presheaf, PresheafError, Result, Subpresheaf};

/// Pointwise image of a natural transformation, as a subobject of its
/// target. Restriction-closed by naturality.
pub fn image(f: &NatTrans) -> Subpresheaf {
    let target = f.target().clone();
    let chosen = f
        .components()
        .iter()
        .enumerate()
        .map(|(p, c)| {
            let mut b = FixedBitSet::with_capacity(target.size(p) as usize);
            for &y in c {
                b.insert(y as usize);
            }
            b
        })
        .collect();
    debug_assert!(Subpresheaf::new(target.clone(), {
        let s: &Vec<FixedBitSet> = &chosen;
        s.clone()
    })
    .is_ok());
    Subpresheaf::from_raw(target, chosen)
}

/// Quotient of `f` by a stage-wise equivalence relation `rel`, given as a
/// subobject of `f × f`. Classes are numbered by their least member.
pub fn quotient(f: &Arc<Presheaf>, rel: &Subpresheaf) -> Result<(Arc<Presheaf>, NatTrans)> {
    let poset = f.poset().clone();
    let n = poset.len();
    let amb = rel.ambient();
    amb.check_same_poset(f)?;
    if (0..n).any(|p| amb.size(p) != f.size(p) * f.size(p)) {
        return Err(PresheafError::AmbientMismatch);
    }
    let mut class_of: Vec<Vec<u32>> = Vec::with_capacity(n);
    let mut members: Vec<Vec<Vec<u32>>> = Vec::with_capacity(n);
    for p in 0..n {
        let size = f.size(p);
        let related = |x: u32, y: u32| rel.contains(p, x * size + y);
        let fail = |reason: String| PresheafError::NotEquivalence {
            stage: poset.name(p).to_string(),
            reason,
        };
        for x in 0..size {
            if !related(x, x) {
                return Err(fail(format!("not reflexive at {}", f.label(p, x))));
            }
            for y in 0..size {
                if related(x, y) && !related(y, x) {
                    return Err(fail(format!(
                        "not symmetric at ({}, {})",
                        f.label(p, x),
                        f.label(p, y)
                    )));
                }
                for z in 0..size {
                    if related(x, y) && related(y, z) && !related(x, z) {
                        return Err(fail(format!(
                            "not transitive at ({}, {}, {})",
                            f.label(p, x),
                            f.label(p, y),
                            f.label(p, z)
                        )));
                    }
                }
            }
        }
        let mut cls = vec![u32::MAX; size as usize];
        let mut mem: Vec<Vec<u32>> = Vec::new();
        for x in 0..size {
            if cls[x as usize] != u32::MAX {
                continue;
            }
            let id = mem.len() as u32;
            let group: Vec<u32> = (x..size).filter(|&y| related(x, y)).collect();
            for &y in &group {
                cls[y as usize] = id;
            }
            mem.push(group);
        }
        class_of.push(cls);
        members.push(mem);
    }
    let sizes: Vec<u32> = members.iter().map(|m| m.len() as u32).collect();
    let labels = members
        .iter()
        .enumerate()
        .map(|(p, mem)| {
            mem.iter()
                .map(|g| {
                    let names: Vec<String> = g.iter().map(|&x| f.label(p, x)).collect();
                    format!("[{}]", names.join(","))
                })
                .collect()
        })
        .collect();
    let mut tables = vec![Vec::new(); n * n];
    for (q, p) in poset.leq_pairs() {
        let mut t = Vec::with_capacity(sizes[p] as usize);
        for group in &members[p] {
            let images: Vec<u32> = group
                .iter()
                .map(|&x| class_of[q][f.restrict(p, q, x) as usize])
                .collect();
            // Holds whenever `rel` is restriction-closed.
            if images.iter().any(|&c| c != images[0]) {
                return Err(PresheafError::Invalid(format!(
                    "restriction to classes ill-defined at {} -> {}",
                    poset.name(p),
                    poset.name(q)
                )));
            }
            t.push(images[0]);
        }
        tables[p * n + q] = t;
    }
    let quotient = Arc::new(Presheaf::from_parts(poset, sizes, Some(labels), tables)?);
    let projection = NatTrans::new(f.clone(), quotient.clone(), class_of)?;
    Ok((quotient, projection))
}

fn same_ambient(a: &Subpresheaf, b: &Subpresheaf) -> Result<()> {
    if Arc::ptr_eq(a.ambient(), b.ambient()) || **a.ambient() == **b.ambient() {
        Ok(())
    } else {
        Err(PresheafError::AmbientMismatch)
    }
}

pub fn sub_meet(a: &Subpresheaf, b: &Subpresheaf) -> Result<Subpresheaf> {
    same_ambient(a, b)?;
    let chosen = a
        .all_chosen()
        .iter()
        .zip(b.all_chosen())
        .map(|(x, y)| x & y)
        .collect();
    Ok(Subpresheaf::from_raw(a.ambient().clone(), chosen))
}

pub fn sub_join(a: &Subpresheaf, b: &Subpresheaf) -> Result<Subpresheaf> {
    same_ambient(a, b)?;
    let chosen = a
        .all_chosen()
        .iter()
        .zip(b.all_chosen())
        .map(|(x, y)| x | y)
        .collect();
    Ok(Subpresheaf::from_raw(a.ambient().clone(), chosen))
}

/// Pseudo-complement of `a` in the subobject lattice of its ambient:
/// `x ∈ C(p)` iff no restriction of `x` lies in `a`.
pub fn complement_within(a: &Subpresheaf) -> Subpresheaf {
    let amb = a.ambient();
    let poset = amb.poset();
    let chosen = (0..poset.len())
        .map(|p| {
            let mut b = FixedBitSet::with_capacity(amb.size(p) as usize);
            for x in 0..amb.size(p) {
                let hits = crate::poset::iter_mask(poset.down(p))
                    .any(|q| a.contains(q, amb.restrict(p, q, x)));
                if !hits {
                    b.insert(x as usize);
                }
            }
            b
        })
        .collect();
    Subpresheaf::from_raw(amb.clone(), chosen)
}

/// The subobject generated by `elem ∈ F(stage)`: its restrictions below
/// `stage`, nothing elsewhere.
pub fn generated(ambient: &Arc<Presheaf>, stage: usize, elem: u32) -> Result<Subpresheaf> {
    let poset = ambient.poset();
    if stage >= poset.len() || elem >= ambient.size(stage) {
        return Err(PresheafError::Invalid(format!(
            "no element {elem} at stage {stage}"
        )));
    }
    let chosen = (0..poset.len())
        .map(|q| {
            let mut b = FixedBitSet::with_capacity(ambient.size(q) as usize);
            if poset.leq(q, stage) {
                b.insert(ambient.restrict(stage, q, elem) as usize);
            }
            b
        })
        .collect();
    Ok(Subpresheaf::from_raw(ambient.clone(), chosen))
}

#[derive(Debug, Clone, Copy)]
pub enum SubOp<'a> {
    Meet(&'a Subpresheaf, &'a Subpresheaf),
    Join(&'a Subpresheaf, &'a Subpresheaf),
    ComplementWithin(&'a Subpresheaf),
    Generated {
        ambient: &'a Arc<Presheaf>,
        stage: usize,
        elem: u32,
    },
}

pub fn sub_ops(op: SubOp<'_>) -> Result<Subpresheaf> {
    match op {
        SubOp::Meet(a, b) => sub_meet(a, b),
        SubOp::Join(a, b) => sub_join(a, b),
        SubOp::ComplementWithin(a) => Ok(complement_within(a)),
        SubOp::Generated {
            ambient,
            stage,
            elem,
        } => generated(ambient, stage, elem),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::FinPoset;
    use crate::presheaf::{coproduct, product, terminal, DEFAULT_FIBER_CAP};

    fn chain2() -> Arc<FinPoset> {
        Arc::new(FinPoset::chain(&["bot", "top"]))
    }

    fn relation(f: &Arc<Presheaf>, merged_at: &[bool]) -> Subpresheaf {
        let ff = Arc::new(product(f, f).unwrap());
        let chosen: Vec<Vec<u32>> = (0..f.poset().len())
            .map(|p| {
                let s = f.size(p);
                (0..s * s)
                    .filter(|&k| merged_at[p] || k / s == k % s)
                    .collect()
            })
            .collect();
        let refs: Vec<&[u32]> = chosen.iter().map(|v| v.as_slice()).collect();
        Subpresheaf::from_indices(ff, &refs).unwrap()
    }

    #[test]
    fn image_examples() {
        let p = chain2();
        let f = Arc::new(Presheaf::constant(p.clone(), &["x", "y"]));
        assert!(image(&NatTrans::identity(&f)).is_whole());
        let zero = Arc::new(crate::presheaf::initial(&p));
        let from_zero = NatTrans::new(zero, f.clone(), vec![vec![], vec![]]).unwrap();
        assert!(image(&from_zero).is_empty());
    }

    #[test]
    fn quotient_of_two_by_lem_relation() {
        let p = chain2();
        let one = Arc::new(terminal(&p));
        let two = Arc::new(coproduct(&one, &one).unwrap());
        // All pairs at bot (u = {bot}), diagonal at top.
        let (x, proj) = quotient(&two, &relation(&two, &[true, false])).unwrap();
        assert_eq!(x.sizes(), &[1, 2]);
        assert!(proj.is_surjective());
        let (d, _) = quotient(&two, &relation(&two, &[false, false])).unwrap();
        assert_eq!(d.sizes(), two.sizes());
        let (t, _) = quotient(&two, &relation(&two, &[true, true])).unwrap();
        assert_eq!(t.sizes(), &[1, 1]);
    }

    #[test]
    fn quotient_rejects_non_equivalence() {
        let p = chain2();
        let f = Arc::new(Presheaf::constant(p, &["x", "y"]));
        let ff = Arc::new(product(&f, &f).unwrap());
        // Only (x,y) and the diagonal: not symmetric.
        let r = Subpresheaf::from_indices(ff, &[&[0, 1, 3], &[0, 1, 3]]).unwrap();
        assert!(matches!(
            quotient(&f, &r),
            Err(PresheafError::NotEquivalence { .. })
        ));
    }

    #[test]
    fn complement_within_examples() {
        let p = chain2();
        let f = Arc::new(Presheaf::constant(p.clone(), &["x", "y"]));
        // (∅ at top, {x} at bot).
        let a = Subpresheaf::from_indices(f.clone(), &[&[0], &[]]).unwrap();
        let c = complement_within(&a);
        assert_eq!(c.chosen(1).ones().collect::<Vec<_>>(), vec![1]);
        assert_eq!(c.chosen(0).ones().collect::<Vec<_>>(), vec![1]);
        // a ∪ ¬a misses x at top: not complemented.
        assert!(!sub_join(&a, &c).unwrap().is_whole());
        let b = Subpresheaf::from_indices(f.clone(), &[&[0], &[0]]).unwrap();
        assert!(sub_join(&b, &complement_within(&b)).unwrap().is_whole());
    }

    #[test]
    fn generated_examples() {
        let p = chain2();
        let f = Arc::new(Presheaf::constant(p.clone(), &["x", "y"]));
        let g = generated(&f, 1, 0).unwrap();
        assert_eq!(g.chosen(0).ones().collect::<Vec<_>>(), vec![0]);
        assert_eq!(g.chosen(1).ones().collect::<Vec<_>>(), vec![0]);
        let h = generated(&f, 0, 1).unwrap();
        assert!(h.chosen(1).is_clear());
        let other = Arc::new(
            Presheaf::validate(
                p,
                vec![vec!["c".into()], vec!["a".into()]],
                vec![((1, 0), vec![0])],
                DEFAULT_FIBER_CAP,
            )
            .unwrap(),
        );
        let k = other.whole();
        assert_eq!(sub_meet(&g, &k), Err(PresheafError::AmbientMismatch));
    }
}
