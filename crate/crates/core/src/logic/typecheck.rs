//! Bidirectional sort checking into a typed IR with macros expanded.
//!
//! `inl`/`inr` carry no annotation, so their sort comes from context; every
//! other term form synthesizes its sort. All sorts in the IR are canonical
//! (`Omega` is written `P(1)`).

use thiserror::Error;

use super::macros::{expand_macro, MacroMode};
use super::{Formula, FormulaKind, Sort, Span, Term, TermKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("sort mismatch at {at}: expected {expected}, found {found}")]
    SortMismatch {
        expected: String,
        found: Sort,
        at: Span,
    },
    #[error("unbound variable `{name}` at {at}")]
    UnboundVariable { name: String, at: Span },
    #[error("unknown base sort `{name}` at {at}")]
    UnknownBaseSort { name: String, at: Span },
    #[error("variable `{name}` at {at} is already bound in this scope")]
    ShadowedVariable { name: String, at: Span },
    #[error("macro {name} at {at} takes {expected} argument(s), got {found}")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        at: Span,
    },
    #[error("argument {index} of macro {name} at {at}: expected {expected}, found {found}")]
    MacroArgument {
        name: String,
        index: usize,
        expected: String,
        found: Sort,
        at: Span,
    },
    #[error("unknown macro `{name}` at {at}")]
    UnknownMacro { name: String, at: Span },
    #[error("cannot infer the sort of `{term}` at {at}; annotate it through context")]
    CannotInfer { term: String, at: Span },
}

/// What a model exposes to the typechecker: base sort names and typed
/// constants (maps usable as terms of a `Fun` sort).
#[derive(Debug, Clone, Default)]
pub struct Signature {
    pub bases: Vec<String>,
    pub constants: Vec<(String, Sort)>,
}

impl Signature {
    pub fn with_bases<S: AsRef<str>>(bases: &[S]) -> Signature {
        Signature {
            bases: bases.iter().map(|b| b.as_ref().to_string()).collect(),
            constants: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TypecheckOptions {
    pub mode: MacroMode,
}

impl TypecheckOptions {
    pub fn strict() -> TypecheckOptions {
        TypecheckOptions {
            mode: MacroMode::Strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TTerm {
    pub kind: TTermKind,
    pub sort: Sort,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TTermKind {
    Var(String),
    Const(String),
    Pair(Box<TTerm>, Box<TTerm>),
    Fst(Box<TTerm>),
    Snd(Box<TTerm>),
    Inl(Box<TTerm>),
    Inr(Box<TTerm>),
    Unit,
    App(Box<TTerm>, Box<TTerm>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TFormula {
    True,
    False,
    Eq(TTerm, TTerm),
    Mem(TTerm, TTerm),
    And(Box<TFormula>, Box<TFormula>),
    Or(Box<TFormula>, Box<TFormula>),
    Implies(Box<TFormula>, Box<TFormula>),
    Not(Box<TFormula>),
    Forall(String, Sort, Box<TFormula>),
    Exists(String, Sort, Box<TFormula>),
    /// Membership of a `P(S)` term in the precomputed K-finite family.
    KFin(TTerm),
}

impl TTerm {
    pub fn to_term(&self) -> Term {
        let b = |t: &TTerm| Box::new(t.to_term());
        Term::new(match &self.kind {
            TTermKind::Var(v) | TTermKind::Const(v) => TermKind::Var(v.clone()),
            TTermKind::Unit => TermKind::Unit,
            TTermKind::Pair(x, y) => TermKind::Pair(b(x), b(y)),
            TTermKind::App(x, y) => TermKind::App(b(x), b(y)),
            TTermKind::Fst(x) => TermKind::Fst(b(x)),
            TTermKind::Snd(x) => TermKind::Snd(b(x)),
            TTermKind::Inl(x) => TermKind::Inl(b(x)),
            TTermKind::Inr(x) => TermKind::Inr(b(x)),
        })
    }
}

impl TFormula {
    /// Back to the surface language. `KFin` nodes become macro calls again.
    pub fn to_formula(&self) -> Formula {
        let b = |f: &TFormula| Box::new(f.to_formula());
        Formula::new(match self {
            TFormula::True => FormulaKind::True,
            TFormula::False => FormulaKind::False,
            TFormula::Eq(x, y) => FormulaKind::Eq(x.to_term(), y.to_term()),
            TFormula::Mem(x, y) => FormulaKind::Mem(x.to_term(), y.to_term()),
            TFormula::And(x, y) => FormulaKind::And(b(x), b(y)),
            TFormula::Or(x, y) => FormulaKind::Or(b(x), b(y)),
            TFormula::Implies(x, y) => FormulaKind::Implies(b(x), b(y)),
            TFormula::Not(x) => FormulaKind::Not(b(x)),
            TFormula::Forall(v, s, x) => FormulaKind::Forall(v.clone(), s.clone(), b(x)),
            TFormula::Exists(v, s, x) => FormulaKind::Exists(v.clone(), s.clone(), b(x)),
            TFormula::KFin(t) => FormulaKind::Macro("KFin".into(), vec![t.to_term()]),
        })
    }

    /// Number of nodes, for reporting.
    pub fn size(&self) -> usize {
        match self {
            TFormula::True
            | TFormula::False
            | TFormula::Eq(..)
            | TFormula::Mem(..)
            | TFormula::KFin(_) => 1,
            TFormula::And(a, b) | TFormula::Or(a, b) | TFormula::Implies(a, b) => {
                1 + a.size() + b.size()
            }
            TFormula::Not(a) | TFormula::Forall(_, _, a) | TFormula::Exists(_, _, a) => {
                1 + a.size()
            }
        }
    }
}

struct Checker<'a> {
    sig: &'a Signature,
    ctx: Vec<(String, Sort)>,
    mode: MacroMode,
}

impl Checker<'_> {
    fn sort(&self, s: &Sort, at: Span) -> Result<Sort, TypeError> {
        let mut names = Vec::new();
        s.base_names(&mut names);
        if let Some(bad) = names.iter().find(|n| !self.sig.bases.contains(n)) {
            return Err(TypeError::UnknownBaseSort {
                name: bad.clone(),
                at,
            });
        }
        Ok(s.canonical())
    }

    fn lookup(&self, name: &str) -> Option<TTerm> {
        if let Some((_, s)) = self.ctx.iter().rev().find(|(n, _)| n == name) {
            return Some(TTerm {
                kind: TTermKind::Var(name.to_string()),
                sort: s.clone(),
            });
        }
        self.sig
            .constants
            .iter()
            .find(|(n, _)| n == name)
            .map(|(n, s)| TTerm {
                kind: TTermKind::Const(n.clone()),
                sort: s.canonical(),
            })
    }

    fn mismatch(expected: impl Into<String>, found: &Sort, at: Span) -> TypeError {
        TypeError::SortMismatch {
            expected: expected.into(),
            found: found.clone(),
            at,
        }
    }

    fn infer(&self, t: &Term) -> Result<TTerm, TypeError> {
        let at = t.span;
        match &t.kind {
            TermKind::Var(v) => self.lookup(v).ok_or_else(|| TypeError::UnboundVariable {
                name: v.clone(),
                at,
            }),
            TermKind::Unit => Ok(TTerm {
                kind: TTermKind::Unit,
                sort: Sort::Unit,
            }),
            TermKind::Pair(a, b) => {
                let (a, b) = (self.infer(a)?, self.infer(b)?);
                let sort = Sort::prod(a.sort.clone(), b.sort.clone());
                Ok(TTerm {
                    kind: TTermKind::Pair(Box::new(a), Box::new(b)),
                    sort,
                })
            }
            TermKind::Fst(a) | TermKind::Snd(a) => {
                let a = self.infer(a)?;
                let Sort::Prod(l, r) = &a.sort else {
                    return Err(Self::mismatch("a product sort", &a.sort, at));
                };
                let first = matches!(t.kind, TermKind::Fst(_));
                let sort = if first { (**l).clone() } else { (**r).clone() };
                let kind = if first {
                    TTermKind::Fst(Box::new(a))
                } else {
                    TTermKind::Snd(Box::new(a))
                };
                Ok(TTerm { kind, sort })
            }
            TermKind::Inl(_) | TermKind::Inr(_) => Err(TypeError::CannotInfer {
                term: t.to_string(),
                at,
            }),
            TermKind::App(f, x) => {
                let f = self.infer(f)?;
                let Sort::Fun(dom, cod) = &f.sort else {
                    return Err(Self::mismatch("a function sort", &f.sort, at));
                };
                let x = self.check(x, dom)?;
                let sort = (**cod).clone();
                Ok(TTerm {
                    kind: TTermKind::App(Box::new(f), Box::new(x)),
                    sort,
                })
            }
        }
    }

    fn check(&self, t: &Term, expected: &Sort) -> Result<TTerm, TypeError> {
        let at = t.span;
        match (&t.kind, expected) {
            (TermKind::Inl(a), Sort::Sum(l, _)) | (TermKind::Inr(a), Sort::Sum(_, l)) => {
                let a = self.check(a, l)?;
                let kind = if matches!(t.kind, TermKind::Inl(_)) {
                    TTermKind::Inl(Box::new(a))
                } else {
                    TTermKind::Inr(Box::new(a))
                };
                Ok(TTerm {
                    kind,
                    sort: expected.clone(),
                })
            }
            // The context demands a non-sum sort for an injection.
            (TermKind::Inl(_) | TermKind::Inr(_), _) => {
                Err(Self::mismatch("a sum sort", expected, at))
            }
            (TermKind::Pair(a, b), Sort::Prod(l, r)) => {
                let (a, b) = (self.check(a, l)?, self.check(b, r)?);
                Ok(TTerm {
                    kind: TTermKind::Pair(Box::new(a), Box::new(b)),
                    sort: expected.clone(),
                })
            }
            _ => {
                let got = self.infer(t)?;
                if got.sort != *expected {
                    return Err(Self::mismatch(expected.to_string(), &got.sort, at));
                }
                Ok(got)
            }
        }
    }

    /// Infers one of two terms and checks the other against it.
    fn infer_pair(&self, a: &Term, b: &Term) -> Result<(TTerm, TTerm), TypeError> {
        match self.infer(a) {
            Ok(ta) => {
                let tb = self.check(b, &ta.sort)?;
                Ok((ta, tb))
            }
            Err(TypeError::CannotInfer { .. }) => {
                let tb = self.infer(b)?;
                let ta = self.check(a, &tb.sort)?;
                Ok((ta, tb))
            }
            Err(e) => Err(e),
        }
    }

    fn bind(&mut self, v: &str, at: Span) -> Result<(), TypeError> {
        if self.lookup(v).is_some() {
            return Err(TypeError::ShadowedVariable {
                name: v.to_string(),
                at,
            });
        }
        Ok(())
    }

    fn formula(&mut self, f: &Formula) -> Result<TFormula, TypeError> {
        let at = f.span;
        Ok(match &f.kind {
            FormulaKind::True => TFormula::True,
            FormulaKind::False => TFormula::False,
            FormulaKind::Eq(a, b) => {
                let (a, b) = self.infer_pair(a, b)?;
                TFormula::Eq(a, b)
            }
            FormulaKind::Mem(x, set) => match self.infer(set) {
                Ok(s) => {
                    let Sort::Pow(elem) = &s.sort else {
                        return Err(Self::mismatch("a power sort", &s.sort, set.span));
                    };
                    let x = self.check(x, elem)?;
                    TFormula::Mem(x, s)
                }
                Err(TypeError::CannotInfer { .. }) => {
                    let x = self.infer(x)?;
                    let s = self.check(set, &Sort::pow(x.sort.clone()))?;
                    TFormula::Mem(x, s)
                }
                Err(e) => return Err(e),
            },
            FormulaKind::Holds(t) => {
                let t = self.check(t, &Sort::pow(Sort::Unit))?;
                TFormula::Mem(
                    TTerm {
                        kind: TTermKind::Unit,
                        sort: Sort::Unit,
                    },
                    t,
                )
            }
            FormulaKind::And(a, b) => {
                TFormula::And(Box::new(self.formula(a)?), Box::new(self.formula(b)?))
            }
            FormulaKind::Or(a, b) => {
                TFormula::Or(Box::new(self.formula(a)?), Box::new(self.formula(b)?))
            }
            FormulaKind::Implies(a, b) => {
                TFormula::Implies(Box::new(self.formula(a)?), Box::new(self.formula(b)?))
            }
            FormulaKind::Not(a) => TFormula::Not(Box::new(self.formula(a)?)),
            FormulaKind::Forall(v, s, body) | FormulaKind::Exists(v, s, body) => {
                let s = self.sort(s, at)?;
                self.bind(v, at)?;
                self.ctx.push((v.clone(), s.clone()));
                let body = self.formula(body);
                self.ctx.pop();
                let body = Box::new(body?);
                if matches!(f.kind, FormulaKind::Forall(..)) {
                    TFormula::Forall(v.clone(), s, body)
                } else {
                    TFormula::Exists(v.clone(), s, body)
                }
            }
            FormulaKind::Macro(name, args) => self.macro_call(name, args, at)?,
        })
    }

    fn macro_call(&mut self, name: &str, args: &[Term], at: Span) -> Result<TFormula, TypeError> {
        let typed: Vec<TTerm> = match (name, args) {
            // The element of `Range(y, F)` is checked against `F`'s codomain.
            ("Range", [y, f]) => {
                let f = self.infer(f)?;
                let cod = match &f.sort {
                    Sort::Fun(_, t) => (**t).clone(),
                    Sort::Pow(e) => match &**e {
                        Sort::Prod(_, t) => (**t).clone(),
                        _ => Sort::Empty,
                    },
                    _ => Sort::Empty,
                };
                let y = match self.check(y, &cod) {
                    Ok(y) => y,
                    Err(_) => self.infer(y)?,
                };
                vec![y, f]
            }
            _ => args.iter().map(|a| self.infer(a)).collect::<Result<_, _>>()?,
        };
        let sorts: Vec<Sort> = typed.iter().map(|t| t.sort.clone()).collect();
        if name == "KFin" && self.mode == MacroMode::KFinLookup && typed.len() == 1 {
            if !matches!(sorts[0], Sort::Pow(_)) {
                return Err(TypeError::MacroArgument {
                    name: name.into(),
                    index: 0,
                    expected: "P(S)".into(),
                    found: sorts[0].clone(),
                    at,
                });
            }
            return Ok(TFormula::KFin(typed.into_iter().next().unwrap()));
        }
        let mut avoid: Vec<String> = self.ctx.iter().map(|(n, _)| n.clone()).collect();
        avoid.extend(self.sig.constants.iter().map(|(n, _)| n.clone()));
        let surface_args: Vec<Term> = typed.iter().map(|t| t.to_term()).collect();
        let expansion = expand_macro(name, &surface_args, &sorts, &avoid, at)?;
        self.formula(&expansion).map_err(|e| e.relocate(at))
    }
}

impl TypeError {
    /// Errors raised inside a macro expansion point at the call site.
    fn relocate(self, to: Span) -> TypeError {
        match self {
            TypeError::SortMismatch {
                expected, found, ..
            } => TypeError::SortMismatch {
                expected,
                found,
                at: to,
            },
            TypeError::UnboundVariable { name, .. } => TypeError::UnboundVariable { name, at: to },
            TypeError::UnknownBaseSort { name, .. } => TypeError::UnknownBaseSort { name, at: to },
            TypeError::ShadowedVariable { name, .. } => {
                TypeError::ShadowedVariable { name, at: to }
            }
            TypeError::CannotInfer { term, .. } => TypeError::CannotInfer { term, at: to },
            e => e,
        }
    }

    pub fn span(&self) -> Span {
        match self {
            TypeError::SortMismatch { at, .. }
            | TypeError::UnboundVariable { at, .. }
            | TypeError::UnknownBaseSort { at, .. }
            | TypeError::ShadowedVariable { at, .. }
            | TypeError::Arity { at, .. }
            | TypeError::MacroArgument { at, .. }
            | TypeError::UnknownMacro { at, .. }
            | TypeError::CannotInfer { at, .. } => *at,
        }
    }
}

/// Checks `f` in context `ctx` (innermost binding last) and expands macros.
pub fn typecheck(
    f: &Formula,
    sig: &Signature,
    ctx: &[(String, Sort)],
    opts: TypecheckOptions,
) -> Result<TFormula, TypeError> {
    let mut ctx_sorts = Vec::with_capacity(ctx.len());
    for (n, s) in ctx {
        let checker = Checker {
            sig,
            ctx: Vec::new(),
            mode: opts.mode,
        };
        ctx_sorts.push((n.clone(), checker.sort(s, f.span)?));
    }
    let mut checker = Checker {
        sig,
        ctx: ctx_sorts,
        mode: opts.mode,
    };
    checker.formula(f)
}

/// Fully expands every macro (including `KFin`) and returns a macro-free
/// surface formula.
pub fn expand_macros(
    f: &Formula,
    sig: &Signature,
    ctx: &[(String, Sort)],
) -> Result<Formula, TypeError> {
    Ok(typecheck(f, sig, ctx, TypecheckOptions::strict())?.to_formula())
}
