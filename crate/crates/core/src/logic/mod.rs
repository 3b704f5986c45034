//! Sorts, terms and formulas of the multi-sorted higher-order intuitionistic
//! language, with a parser, printer, macro layer and typechecker.

mod macros;
mod parser;
mod print;
mod typecheck;

use std::fmt;

pub use macros::{expand_macro, MacroMode, MACRO_NAMES};
pub use parser::{parse_formula, parse_sort, ParseError};
pub use typecheck::{
    expand_macros, typecheck, Signature, TFormula, TTerm, TTermKind, TypeError, TypecheckOptions,
};

/// Source location of a node. Spans do not take part in structural
/// equality, so a reparsed formula compares equal to the original.
#[derive(Debug, Clone, Copy, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub line: u32,
    pub col: u32,
}

impl PartialEq for Span {
    fn eq(&self, _: &Span) -> bool {
        true
    }
}

impl Eq for Span {}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Unit,
    Empty,
    Omega,
    Base(String),
    Prod(Box<Sort>, Box<Sort>),
    Sum(Box<Sort>, Box<Sort>),
    Pow(Box<Sort>),
    Fun(Box<Sort>, Box<Sort>),
}

impl Sort {
    pub fn base(name: &str) -> Sort {
        Sort::Base(name.to_string())
    }

    pub fn prod(a: Sort, b: Sort) -> Sort {
        Sort::Prod(Box::new(a), Box::new(b))
    }

    pub fn sum(a: Sort, b: Sort) -> Sort {
        Sort::Sum(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Sort) -> Sort {
        Sort::Pow(Box::new(a))
    }

    pub fn fun(a: Sort, b: Sort) -> Sort {
        Sort::Fun(Box::new(a), Box::new(b))
    }

    /// `Omega` is the same object as `P(1)`; this rewrites it away.
    pub fn canonical(&self) -> Sort {
        match self {
            Sort::Omega => Sort::pow(Sort::Unit),
            Sort::Unit | Sort::Empty | Sort::Base(_) => self.clone(),
            Sort::Prod(a, b) => Sort::prod(a.canonical(), b.canonical()),
            Sort::Sum(a, b) => Sort::sum(a.canonical(), b.canonical()),
            Sort::Pow(a) => Sort::pow(a.canonical()),
            Sort::Fun(a, b) => Sort::fun(a.canonical(), b.canonical()),
        }
    }

    pub fn base_names(&self, out: &mut Vec<String>) {
        match self {
            Sort::Base(n) => {
                if !out.contains(n) {
                    out.push(n.clone())
                }
            }
            Sort::Unit | Sort::Empty | Sort::Omega => {}
            Sort::Pow(a) => a.base_names(out),
            Sort::Prod(a, b) | Sort::Sum(a, b) | Sort::Fun(a, b) => {
                a.base_names(out);
                b.base_names(out);
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Term {
    pub kind: TermKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TermKind {
    Var(String),
    Pair(Box<Term>, Box<Term>),
    Fst(Box<Term>),
    Snd(Box<Term>),
    Inl(Box<Term>),
    Inr(Box<Term>),
    Unit,
    App(Box<Term>, Box<Term>),
}

impl Term {
    pub fn new(kind: TermKind) -> Term {
        Term {
            kind,
            span: Span::default(),
        }
    }

    pub fn var(name: &str) -> Term {
        Term::new(TermKind::Var(name.to_string()))
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::new(TermKind::Pair(Box::new(a), Box::new(b)))
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match &self.kind {
            TermKind::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone())
                }
            }
            TermKind::Unit => {}
            TermKind::Fst(t) | TermKind::Snd(t) | TermKind::Inl(t) | TermKind::Inr(t) => {
                t.collect_vars(out)
            }
            TermKind::Pair(a, b) | TermKind::App(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Replaces free occurrences of `var` by `by`.
    pub fn substitute(&self, var: &str, by: &Term) -> Term {
        let kind = match &self.kind {
            TermKind::Var(v) if v == var => return by.clone(),
            TermKind::Var(_) | TermKind::Unit => self.kind.clone(),
            TermKind::Pair(a, b) => {
                TermKind::Pair(Box::new(a.substitute(var, by)), Box::new(b.substitute(var, by)))
            }
            TermKind::App(a, b) => {
                TermKind::App(Box::new(a.substitute(var, by)), Box::new(b.substitute(var, by)))
            }
            TermKind::Fst(t) => TermKind::Fst(Box::new(t.substitute(var, by))),
            TermKind::Snd(t) => TermKind::Snd(Box::new(t.substitute(var, by))),
            TermKind::Inl(t) => TermKind::Inl(Box::new(t.substitute(var, by))),
            TermKind::Inr(t) => TermKind::Inr(Box::new(t.substitute(var, by))),
        };
        Term {
            kind,
            span: self.span,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    pub kind: FormulaKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FormulaKind {
    True,
    False,
    Eq(Term, Term),
    Mem(Term, Term),
    /// A term of sort `Omega` used as a proposition; means `unit in t`.
    Holds(Term),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    Not(Box<Formula>),
    Forall(String, Sort, Box<Formula>),
    Exists(String, Sort, Box<Formula>),
    Macro(String, Vec<Term>),
}

impl Formula {
    pub fn new(kind: FormulaKind) -> Formula {
        Formula {
            kind,
            span: Span::default(),
        }
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::new(FormulaKind::And(Box::new(a), Box::new(b)))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::new(FormulaKind::Or(Box::new(a), Box::new(b)))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::new(FormulaKind::Implies(Box::new(a), Box::new(b)))
    }

    pub fn not(a: Formula) -> Formula {
        Formula::new(FormulaKind::Not(Box::new(a)))
    }

    pub fn forall(v: &str, s: Sort, body: Formula) -> Formula {
        Formula::new(FormulaKind::Forall(v.to_string(), s, Box::new(body)))
    }

    pub fn exists(v: &str, s: Sort, body: Formula) -> Formula {
        Formula::new(FormulaKind::Exists(v.to_string(), s, Box::new(body)))
    }

    pub fn mem(t: Term, set: Term) -> Formula {
        Formula::new(FormulaKind::Mem(t, set))
    }

    pub fn eq(a: Term, b: Term) -> Formula {
        Formula::new(FormulaKind::Eq(a, b))
    }

    /// Base sort names mentioned in binder annotations.
    pub fn base_sorts(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.walk_sorts(&mut |s| s.base_names(&mut out));
        out
    }

    fn walk_sorts(&self, f: &mut dyn FnMut(&Sort)) {
        match &self.kind {
            FormulaKind::Forall(_, s, b) | FormulaKind::Exists(_, s, b) => {
                f(s);
                b.walk_sorts(f);
            }
            FormulaKind::And(a, b) | FormulaKind::Or(a, b) | FormulaKind::Implies(a, b) => {
                a.walk_sorts(f);
                b.walk_sorts(f);
            }
            FormulaKind::Not(a) => a.walk_sorts(f),
            _ => {}
        }
    }

    /// Free variables in order of first occurrence.
    pub fn free_vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut Vec<String>) {
        let push_term = |t: &Term, bound: &Vec<String>, out: &mut Vec<String>| {
            let mut vs = Vec::new();
            t.collect_vars(&mut vs);
            for v in vs {
                if !bound.contains(&v) && !out.contains(&v) {
                    out.push(v);
                }
            }
        };
        match &self.kind {
            FormulaKind::True | FormulaKind::False => {}
            FormulaKind::Eq(a, b) | FormulaKind::Mem(a, b) => {
                push_term(a, bound, out);
                push_term(b, bound, out);
            }
            FormulaKind::Holds(t) => push_term(t, bound, out),
            FormulaKind::Macro(_, args) => {
                for a in args {
                    push_term(a, bound, out);
                }
            }
            FormulaKind::And(a, b) | FormulaKind::Or(a, b) | FormulaKind::Implies(a, b) => {
                a.collect_free(bound, out);
                b.collect_free(bound, out);
            }
            FormulaKind::Not(a) => a.collect_free(bound, out),
            FormulaKind::Forall(v, _, body) | FormulaKind::Exists(v, _, body) => {
                bound.push(v.clone());
                body.collect_free(bound, out);
                bound.pop();
            }
        }
    }

    /// Capture-avoiding only in the sense that substitution stops under a
    /// binder of the same name; callers keep bound names distinct from the
    /// free variables of `by`.
    pub fn substitute(&self, var: &str, by: &Term) -> Formula {
        let kind = match &self.kind {
            FormulaKind::True | FormulaKind::False => self.kind.clone(),
            FormulaKind::Eq(a, b) => FormulaKind::Eq(a.substitute(var, by), b.substitute(var, by)),
            FormulaKind::Mem(a, b) => {
                FormulaKind::Mem(a.substitute(var, by), b.substitute(var, by))
            }
            FormulaKind::Holds(t) => FormulaKind::Holds(t.substitute(var, by)),
            FormulaKind::Macro(n, args) => FormulaKind::Macro(
                n.clone(),
                args.iter().map(|a| a.substitute(var, by)).collect(),
            ),
            FormulaKind::And(a, b) => FormulaKind::And(
                Box::new(a.substitute(var, by)),
                Box::new(b.substitute(var, by)),
            ),
            FormulaKind::Or(a, b) => FormulaKind::Or(
                Box::new(a.substitute(var, by)),
                Box::new(b.substitute(var, by)),
            ),
            FormulaKind::Implies(a, b) => FormulaKind::Implies(
                Box::new(a.substitute(var, by)),
                Box::new(b.substitute(var, by)),
            ),
            FormulaKind::Not(a) => FormulaKind::Not(Box::new(a.substitute(var, by))),
            FormulaKind::Forall(v, s, b) if v != var => {
                FormulaKind::Forall(v.clone(), s.clone(), Box::new(b.substitute(var, by)))
            }
            FormulaKind::Exists(v, s, b) if v != var => {
                FormulaKind::Exists(v.clone(), s.clone(), Box::new(b.substitute(var, by)))
            }
            FormulaKind::Forall(..) | FormulaKind::Exists(..) => self.kind.clone(),
        };
        Formula {
            kind,
            span: self.span,
        }
    }
}
