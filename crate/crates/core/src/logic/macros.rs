//! Defined predicates, expanded into the core language.
//!
//! Set-like arguments have sort `P(S)`; relations have sort `P(S * T)`.
//! `Inj`, `Surj` and `Range` also accept a map of sort `S -> T`.
//!
//! | macro            | meaning                                                   |
//! |------------------|-----------------------------------------------------------|
//! | `Inhab(A)`       | `exists x:S. x in A`                                      |
//! | `Empty(A)`       | `forall x:S. ~(x in A)`                                   |
//! | `Sub(A, B)`      | `forall x:S. x in A -> x in B`                            |
//! | `Proper(A)`      | `exists x:S. ~(x in A)`                                   |
//! | `ProperIn(C, A)` | `exists x:S. x in A /\ ~(x in C)`                         |
//! | `Compl(A)`       | `forall x:S. x in A \/ ~(x in A)`                         |
//! | `ComplIn(C, A)`  | `Sub(C, A) /\ forall x:S. x in A -> x in C \/ ~(x in C)`  |
//! | `DecEq(A)`       | equality on `A` is decidable                              |
//! | `Inj(F)`         | `F` is one-to-one                                         |
//! | `Surj(F)`        | every `y:T` is hit                                        |
//! | `Range(y, F)`    | `y` is hit                                                |
//! | `FunRel(F, A)`   | `F` is a total single-valued relation with domain `A`     |
//! | `FunRelTotal(F)` | `F` is a total single-valued relation on all of `S`       |
//! | `KFin(A)`        | `A` lies in every family containing the empty set and     |
//! |                  | closed under adjoining elements of `A`                    |

use super::typecheck::TypeError;
use super::{Formula, FormulaKind, Sort, Span, Term, TermKind};

pub const MACRO_NAMES: &[&str] = &[
    "Inhab",
    "Empty",
    "Sub",
    "Proper",
    "ProperIn",
    "Compl",
    "ComplIn",
    "DecEq",
    "Inj",
    "Surj",
    "Range",
    "FunRel",
    "FunRelTotal",
    "KFin",
];

/// How `KFin` is treated by the typechecker: kept as a lookup into the
/// precomputed finiteness family, or expanded to its raw higher-order
/// definition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MacroMode {
    #[default]
    KFinLookup,
    Strict,
}

struct Fresh<'a> {
    avoid: &'a [String],
    next: usize,
}

impl Fresh<'_> {
    fn var(&mut self) -> String {
        loop {
            let name = format!("_x{}", self.next);
            self.next += 1;
            if !self.avoid.contains(&name) {
                return name;
            }
        }
    }
}

fn v(name: &str) -> Term {
    Term::var(name)
}

fn app(f: &Term, x: Term) -> Term {
    Term::new(TermKind::App(Box::new(f.clone()), Box::new(x)))
}

fn mem(x: Term, a: &Term) -> Formula {
    Formula::mem(x, a.clone())
}

fn pow_elem<'s>(name: &str, i: usize, s: &'s Sort, span: Span) -> Result<&'s Sort, TypeError> {
    match s {
        Sort::Pow(e) => Ok(e),
        _ => Err(TypeError::MacroArgument {
            name: name.to_string(),
            index: i,
            expected: "P(S)".into(),
            found: s.clone(),
            at: span,
        }),
    }
}

fn relation<'s>(
    name: &str,
    i: usize,
    s: &'s Sort,
    span: Span,
) -> Result<(&'s Sort, &'s Sort), TypeError> {
    match s {
        Sort::Pow(e) => match &**e {
            Sort::Prod(a, b) => Ok((a, b)),
            _ => Err(TypeError::MacroArgument {
                name: name.to_string(),
                index: i,
                expected: "P(S * T)".into(),
                found: s.clone(),
                at: span,
            }),
        },
        _ => Err(TypeError::MacroArgument {
            name: name.to_string(),
            index: i,
            expected: "P(S * T)".into(),
            found: s.clone(),
            at: span,
        }),
    }
}

fn mismatch(name: &str, i: usize, expected: &Sort, found: &Sort, span: Span) -> TypeError {
    TypeError::MacroArgument {
        name: name.to_string(),
        index: i,
        expected: expected.to_string(),
        found: found.clone(),
        at: span,
    }
}

/// Expands one macro call. `sorts` are the (canonical) sorts of `args`;
/// `avoid` lists names the fresh bound variables must not reuse. `KFin` is
/// always expanded here; the lookup mode is handled by the typechecker.
pub fn expand_macro(
    name: &str,
    args: &[Term],
    sorts: &[Sort],
    avoid: &[String],
    span: Span,
) -> Result<Formula, TypeError> {
    let arity = match name {
        "Sub" | "ProperIn" | "ComplIn" | "Range" | "FunRel" => 2,
        n if MACRO_NAMES.contains(&n) => 1,
        _ => {
            return Err(TypeError::UnknownMacro {
                name: name.to_string(),
                at: span,
            })
        }
    };
    if args.len() != arity || sorts.len() != arity {
        return Err(TypeError::Arity {
            name: name.to_string(),
            expected: arity,
            found: args.len(),
            at: span,
        });
    }
    let mut fresh = Fresh { avoid, next: 0 };
    let f = match name {
        "Inhab" => {
            let s = pow_elem(name, 0, &sorts[0], span)?;
            let x = fresh.var();
            Formula::exists(&x, s.clone(), mem(v(&x), &args[0]))
        }
        "Empty" => {
            let s = pow_elem(name, 0, &sorts[0], span)?;
            let x = fresh.var();
            Formula::forall(&x, s.clone(), Formula::not(mem(v(&x), &args[0])))
        }
        "Proper" => {
            let s = pow_elem(name, 0, &sorts[0], span)?;
            let x = fresh.var();
            Formula::exists(&x, s.clone(), Formula::not(mem(v(&x), &args[0])))
        }
        "Compl" => {
            let s = pow_elem(name, 0, &sorts[0], span)?;
            let x = fresh.var();
            let inside = mem(v(&x), &args[0]);
            Formula::forall(&x, s.clone(), Formula::or(inside.clone(), Formula::not(inside)))
        }
        "Sub" | "ProperIn" | "ComplIn" => {
            let s = pow_elem(name, 0, &sorts[0], span)?;
            let t = pow_elem(name, 1, &sorts[1], span)?;
            if s != t {
                return Err(mismatch(name, 1, &sorts[0], &sorts[1], span));
            }
            let (c, a) = (&args[0], &args[1]);
            let x = fresh.var();
            let sub = Formula::forall(
                &x,
                s.clone(),
                Formula::implies(mem(v(&x), c), mem(v(&x), a)),
            );
            match name {
                "Sub" => sub,
                "ProperIn" => Formula::exists(
                    &x,
                    s.clone(),
                    Formula::and(mem(v(&x), a), Formula::not(mem(v(&x), c))),
                ),
                _ => {
                    let y = fresh.var();
                    let in_c = mem(v(&y), c);
                    Formula::and(
                        sub,
                        Formula::forall(
                            &y,
                            s.clone(),
                            Formula::implies(
                                mem(v(&y), a),
                                Formula::or(in_c.clone(), Formula::not(in_c)),
                            ),
                        ),
                    )
                }
            }
        }
        "DecEq" => {
            let s = pow_elem(name, 0, &sorts[0], span)?;
            let (x, y) = (fresh.var(), fresh.var());
            let same = Formula::eq(v(&x), v(&y));
            Formula::forall(
                &x,
                s.clone(),
                Formula::forall(
                    &y,
                    s.clone(),
                    Formula::implies(
                        Formula::and(mem(v(&x), &args[0]), mem(v(&y), &args[0])),
                        Formula::or(same.clone(), Formula::not(same)),
                    ),
                ),
            )
        }
        "Inj" => {
            let (x, y) = (fresh.var(), fresh.var());
            if let Sort::Fun(s, _) = &sorts[0] {
                let f = &args[0];
                Formula::forall(
                    &x,
                    (**s).clone(),
                    Formula::forall(
                        &y,
                        (**s).clone(),
                        Formula::implies(
                            Formula::eq(app(f, v(&x)), app(f, v(&y))),
                            Formula::eq(v(&x), v(&y)),
                        ),
                    ),
                )
            } else {
                let (s, t) = relation(name, 0, &sorts[0], span)?;
                let z = fresh.var();
                Formula::forall(
                    &x,
                    s.clone(),
                    Formula::forall(
                        &y,
                        s.clone(),
                        Formula::forall(
                            &z,
                            t.clone(),
                            Formula::implies(
                                Formula::and(
                                    mem(Term::pair(v(&x), v(&z)), &args[0]),
                                    mem(Term::pair(v(&y), v(&z)), &args[0]),
                                ),
                                Formula::eq(v(&x), v(&y)),
                            ),
                        ),
                    ),
                )
            }
        }
        "Surj" => {
            let (y, x) = (fresh.var(), fresh.var());
            if let Sort::Fun(s, t) = &sorts[0] {
                Formula::forall(
                    &y,
                    (**t).clone(),
                    Formula::exists(&x, (**s).clone(), Formula::eq(app(&args[0], v(&x)), v(&y))),
                )
            } else {
                let (s, t) = relation(name, 0, &sorts[0], span)?;
                Formula::forall(
                    &y,
                    t.clone(),
                    Formula::exists(&x, s.clone(), mem(Term::pair(v(&x), v(&y)), &args[0])),
                )
            }
        }
        "Range" => {
            let x = fresh.var();
            let (y, f) = (&args[0], &args[1]);
            if let Sort::Fun(s, t) = &sorts[1] {
                if **t != sorts[0] {
                    return Err(mismatch(name, 0, t, &sorts[0], span));
                }
                Formula::exists(&x, (**s).clone(), Formula::eq(app(f, v(&x)), y.clone()))
            } else {
                let (s, t) = relation(name, 1, &sorts[1], span)?;
                if *t != sorts[0] {
                    return Err(mismatch(name, 0, t, &sorts[0], span));
                }
                Formula::exists(&x, s.clone(), mem(Term::pair(v(&x), y.clone()), f))
            }
        }
        "FunRel" | "FunRelTotal" => {
            let (s, t) = relation(name, 0, &sorts[0], span)?;
            let f = &args[0];
            let dom = if name == "FunRel" {
                let e = pow_elem(name, 1, &sorts[1], span)?;
                if e != s {
                    return Err(mismatch(name, 1, &Sort::pow(s.clone()), &sorts[1], span));
                }
                Some(&args[1])
            } else {
                None
            };
            let (x, y, z) = (fresh.var(), fresh.var(), fresh.var());
            let in_dom = |t: Term| match dom {
                Some(a) => mem(t, a),
                None => Formula::new(FormulaKind::True),
            };
            let exists_image =
                Formula::exists(&y, t.clone(), mem(Term::pair(v(&x), v(&y)), f));
            let total = Formula::forall(
                &x,
                s.clone(),
                match dom {
                    Some(_) => Formula::implies(in_dom(v(&x)), exists_image),
                    None => exists_image,
                },
            );
            let single = Formula::forall(
                &x,
                s.clone(),
                Formula::forall(
                    &y,
                    t.clone(),
                    Formula::forall(
                        &z,
                        t.clone(),
                        Formula::implies(
                            Formula::and(
                                mem(Term::pair(v(&x), v(&y)), f),
                                mem(Term::pair(v(&x), v(&z)), f),
                            ),
                            Formula::eq(v(&y), v(&z)),
                        ),
                    ),
                ),
            );
            match dom {
                None => Formula::and(total, single),
                Some(_) => {
                    let within = Formula::forall(
                        &x,
                        s.clone(),
                        Formula::forall(
                            &y,
                            t.clone(),
                            Formula::implies(
                                mem(Term::pair(v(&x), v(&y)), f),
                                in_dom(v(&x)),
                            ),
                        ),
                    );
                    Formula::and(Formula::and(total, single), within)
                }
            }
        }
        "KFin" => {
            let s = pow_elem(name, 0, &sorts[0], span)?;
            kfin_definition(s, &args[0], &mut fresh)
        }
        _ => unreachable!("arity table covers every macro"),
    };
    Ok(f)
}

/// `forall X:P(P(S)). (contains-empty(X) /\ closed-under-adjoin(X)) -> A in X`.
fn kfin_definition(s: &Sort, a: &Term, fresh: &mut Fresh<'_>) -> Formula {
    let ps = Sort::pow(s.clone());
    let pps = Sort::pow(ps.clone());
    let (fam, e, z, el, w, x) = (
        fresh.var(),
        fresh.var(),
        fresh.var(),
        fresh.var(),
        fresh.var(),
        fresh.var(),
    );
    let fam_t = v(&fam);
    let empty_e = Formula::forall(&x, s.clone(), Formula::not(mem(v(&x), &v(&e))));
    let has_empty = Formula::forall(
        &e,
        ps.clone(),
        Formula::implies(empty_e, mem(v(&e), &fam_t)),
    );
    // W = Z ∪ {a}, stated as three inclusions.
    let w_in_union = Formula::forall(
        &x,
        s.clone(),
        Formula::implies(
            mem(v(&x), &v(&w)),
            Formula::or(mem(v(&x), &v(&z)), Formula::eq(v(&x), v(&el))),
        ),
    );
    let z_in_w = Formula::forall(
        &x,
        s.clone(),
        Formula::implies(mem(v(&x), &v(&z)), mem(v(&x), &v(&w))),
    );
    let is_union = Formula::and(Formula::and(w_in_union, z_in_w), mem(v(&el), &v(&w)));
    let step = Formula::forall(
        &z,
        ps.clone(),
        Formula::forall(
            &el,
            s.clone(),
            Formula::forall(
                &w,
                ps.clone(),
                Formula::implies(
                    Formula::and(Formula::and(mem(v(&z), &fam_t), mem(v(&el), a)), is_union),
                    mem(v(&w), &fam_t),
                ),
            ),
        ),
    );
    Formula::forall(
        &fam,
        pps,
        Formula::implies(Formula::and(has_empty, step), mem(a.clone(), &fam_t)),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pb() -> Sort {
        Sort::pow(Sort::base("B"))
    }

    #[test]
    fn inhab_expansion() {
        let f = expand_macro("Inhab", &[v("A")], &[pb()], &[], Span::default()).unwrap();
        assert_eq!(f.to_string(), "exists _x0:B. _x0 in A");
    }

    #[test]
    fn compl_expansion() {
        let f = expand_macro("Compl", &[v("A")], &[pb()], &[], Span::default()).unwrap();
        assert_eq!(f.to_string(), "forall _x0:B. _x0 in A \\/ ~_x0 in A");
    }

    #[test]
    fn funrel_expansion_golden() {
        let rel = Sort::pow(Sort::prod(Sort::base("B"), Sort::base("B")));
        let f = expand_macro("FunRel", &[v("F"), v("A")], &[rel, pb()], &[], Span::default())
            .unwrap();
        assert_eq!(
            f.to_string(),
            "(forall _x0:B. _x0 in A -> (exists _x1:B. pair(_x0, _x1) in F)) \
             /\\ (forall _x0:B. forall _x1:B. forall _x2:B. \
             pair(_x0, _x1) in F /\\ pair(_x0, _x2) in F -> _x1 = _x2) \
             /\\ (forall _x0:B. forall _x1:B. pair(_x0, _x1) in F -> _x0 in A)"
        );
    }

    #[test]
    fn fresh_names_avoid_context() {
        let avoid = vec!["_x0".to_string()];
        let f = expand_macro("Inhab", &[v("A")], &[pb()], &avoid, Span::default()).unwrap();
        assert_eq!(f.to_string(), "exists _x1:B. _x1 in A");
    }

    #[test]
    fn arity_and_sort_errors() {
        assert!(matches!(
            expand_macro("Inhab", &[v("A"), v("B")], &[pb(), pb()], &[], Span::default()),
            Err(TypeError::Arity { expected: 1, found: 2, .. })
        ));
        assert!(matches!(
            expand_macro("Inhab", &[v("a")], &[Sort::base("B")], &[], Span::default()),
            Err(TypeError::MacroArgument { .. })
        ));
        assert!(matches!(
            expand_macro("Sub", &[v("A"), v("C")], &[pb(), Sort::pow(Sort::Unit)], &[], Span::default()),
            Err(TypeError::MacroArgument { index: 1, .. })
        ));
    }
}
