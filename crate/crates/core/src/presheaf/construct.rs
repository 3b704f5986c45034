use std::sync::Arc;

use super::{NatTrans, Presheaf, PresheafError, Result};
use crate::poset::FinPoset;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConstructKind {
    Terminal,
    Initial,
    Product,
    Coproduct,
}

/// A constructed object together with its canonical maps: projections for
/// products, injections for coproducts, none otherwise.
#[derive(Debug, Clone)]
pub struct Construction {
    pub object: Arc<Presheaf>,
    pub maps: Vec<NatTrans>,
}

pub fn terminal(poset: &Arc<FinPoset>) -> Presheaf {
    Presheaf::constant(poset.clone(), &["*"])
}

pub fn initial(poset: &Arc<FinPoset>) -> Presheaf {
    Presheaf::constant(poset.clone(), &[])
}

/// Pointwise product. The pair `(i, j)` at stage `p` has index
/// `i * |right(p)| + j`.
pub fn product(left: &Presheaf, right: &Presheaf) -> Result<Presheaf> {
    left.check_same_poset(right)?;
    let poset = left.poset().clone();
    let n = poset.len();
    let sizes: Vec<u32> = (0..n).map(|p| left.size(p) * right.size(p)).collect();
    let labels = (0..n)
        .map(|p| {
            let mut out = Vec::with_capacity(sizes[p] as usize);
            for i in 0..left.size(p) {
                for j in 0..right.size(p) {
                    out.push(format!("({},{})", left.label(p, i), right.label(p, j)));
                }
            }
            out
        })
        .collect();
    let mut tables = vec![Vec::new(); n * n];
    for (q, p) in poset.leq_pairs() {
        let (tl, tr) = (left.table(p, q), right.table(p, q));
        let rq = right.size(q);
        let mut t = Vec::with_capacity(sizes[p] as usize);
        for &i in tl {
            for &j in tr {
                t.push(i * rq + j);
            }
        }
        tables[p * n + q] = t;
    }
    Presheaf::from_parts(poset, sizes, Some(labels), tables)
}

/// Pointwise tagged union. `inl(i)` has index `i`, `inr(j)` has index
/// `|left(p)| + j`.
pub fn coproduct(left: &Presheaf, right: &Presheaf) -> Result<Presheaf> {
    left.check_same_poset(right)?;
    let poset = left.poset().clone();
    let n = poset.len();
    let sizes: Vec<u32> = (0..n).map(|p| left.size(p) + right.size(p)).collect();
    let labels = (0..n)
        .map(|p| {
            (0..left.size(p))
                .map(|i| format!("inl({})", left.label(p, i)))
                .chain((0..right.size(p)).map(|j| format!("inr({})", right.label(p, j))))
                .collect()
        })
        .collect();
    let mut tables = vec![Vec::new(); n * n];
    for (q, p) in poset.leq_pairs() {
        let lq = left.size(q);
        let t = left
            .table(p, q)
            .iter()
            .copied()
            .chain(right.table(p, q).iter().map(|&j| lq + j))
            .collect();
        tables[p * n + q] = t;
    }
    Presheaf::from_parts(poset, sizes, Some(labels), tables)
}

pub fn construct(kind: ConstructKind, args: &[Arc<Presheaf>]) -> Result<Construction> {
    let arity = |k: usize| {
        if args.len() == k {
            Ok(())
        } else {
            Err(PresheafError::Invalid(format!(
                "{kind:?} takes {k} argument(s), got {}",
                args.len()
            )))
        }
    };
    match kind {
        ConstructKind::Terminal | ConstructKind::Initial => {
            Err(PresheafError::Invalid(format!(
                "{kind:?} needs a poset; use construct_over"
            )))
        }
        ConstructKind::Product => {
            arity(2)?;
            let (a, b) = (&args[0], &args[1]);
            let object = Arc::new(product(a, b)?);
            let n = a.poset().len();
            let fst = (0..n)
                .map(|p| {
                    (0..a.size(p))
                        .flat_map(|i| std::iter::repeat_n(i, b.size(p) as usize))
                        .collect()
                })
                .collect();
            let snd = (0..n)
                .map(|p| (0..a.size(p)).flat_map(|_| 0..b.size(p)).collect())
                .collect();
            let maps = vec![
                NatTrans::from_raw(object.clone(), a.clone(), fst),
                NatTrans::from_raw(object.clone(), b.clone(), snd),
            ];
            Ok(Construction { object, maps })
        }
        ConstructKind::Coproduct => {
            arity(2)?;
            let (a, b) = (&args[0], &args[1]);
            let object = Arc::new(coproduct(a, b)?);
            let n = a.poset().len();
            let inl = (0..n).map(|p| (0..a.size(p)).collect()).collect();
            let inr = (0..n)
                .map(|p| (0..b.size(p)).map(|j| a.size(p) + j).collect())
                .collect();
            let maps = vec![
                NatTrans::from_raw(a.clone(), object.clone(), inl),
                NatTrans::from_raw(b.clone(), object.clone(), inr),
            ];
            Ok(Construction { object, maps })
        }
    }
}

impl Construction {
    /// Terminal and initial objects take no presheaf arguments, so they are
    /// built from the poset directly.
    pub fn over(kind: ConstructKind, poset: &Arc<FinPoset>) -> Result<Construction> {
        match kind {
            ConstructKind::Terminal => Ok(Construction {
                object: Arc::new(terminal(poset)),
                maps: Vec::new(),
            }),
            ConstructKind::Initial => Ok(Construction {
                object: Arc::new(initial(poset)),
                maps: Vec::new(),
            }),
            _ => Err(PresheafError::Invalid(format!("{kind:?} takes two arguments"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presheaf::DEFAULT_FIBER_CAP;

    fn chain2() -> Arc<FinPoset> {
        Arc::new(FinPoset::chain(&["bot", "top"]))
    }

    /// X with fibers (bot: 1, top: 2), both top elements restricting to the
    /// single bottom element.
    fn collapsed(p: &Arc<FinPoset>) -> Arc<Presheaf> {
        Arc::new(
            Presheaf::validate(
                p.clone(),
                vec![vec!["ab".into()], vec!["a".into(), "b".into()]],
                vec![((1, 0), vec![0, 0])],
                DEFAULT_FIBER_CAP,
            )
            .unwrap(),
        )
    }

    #[test]
    fn x_plus_one_sizes() {
        let p = chain2();
        let x = collapsed(&p);
        let one = Arc::new(terminal(&p));
        let c = construct(ConstructKind::Coproduct, &[x, one]).unwrap();
        assert_eq!(c.object.sizes(), &[2, 3]);
        for m in &c.maps {
            NatTrans::new(m.source().clone(), m.target().clone(), m.components().to_vec())
                .unwrap();
        }
    }

    #[test]
    fn x_times_two_sizes() {
        let p = chain2();
        let x = collapsed(&p);
        let one = Arc::new(terminal(&p));
        let two = Arc::new(coproduct(&one, &one).unwrap());
        let c = construct(ConstructKind::Product, &[x.clone(), two]).unwrap();
        assert_eq!(c.object.sizes(), &[2, 4]);
        for m in &c.maps {
            NatTrans::new(m.source().clone(), m.target().clone(), m.components().to_vec())
                .unwrap();
        }
    }

    #[test]
    fn terminal_and_initial() {
        let p = chain2();
        let i = Construction::over(ConstructKind::Initial, &p).unwrap();
        assert_eq!(i.object.sizes(), &[0, 0]);
        let t = Construction::over(ConstructKind::Terminal, &p).unwrap();
        assert_eq!(t.object.sizes(), &[1, 1]);
        assert!(construct(ConstructKind::Product, &[t.object.clone()]).is_err());
    }

    #[test]
    fn poset_mismatch() {
        let a = terminal(&chain2());
        let b = terminal(&Arc::new(FinPoset::chain(&["x"])));
        assert_eq!(product(&a, &b), Err(PresheafError::PosetMismatch));
    }
}
