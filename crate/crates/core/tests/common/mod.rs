//! Classical two-valued evaluation over the fibers at a single stage,
//! written against the typed AST only. On a one-point poset this is what
//! forcing must reduce to.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use toposlab::logic::{Sort, TFormula, TTerm, TTermKind};
use toposlab::model::Model;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Val {
    Atom(u32),
    Unit,
    Pair(Box<Val>, Box<Val>),
    Inl(Box<Val>),
    Inr(Box<Val>),
    Set(BTreeSet<Val>),
    Fun(BTreeMap<Val, Val>),
}

pub struct Classical<'m> {
    model: &'m Model,
    stage: usize,
}

impl<'m> Classical<'m> {
    pub fn new(model: &'m Model, stage: usize) -> Self {
        Classical { model, stage }
    }

    pub fn domain(&self, s: &Sort) -> Vec<Val> {
        match s {
            Sort::Unit => vec![Val::Unit],
            Sort::Empty => vec![],
            Sort::Omega => self.domain(&Sort::Pow(Box::new(Sort::Unit))),
            Sort::Base(n) => {
                let p = self.model.sort(n).expect("declared sort");
                (0..p.size(self.stage)).map(Val::Atom).collect()
            }
            Sort::Prod(a, b) => {
                let (da, db) = (self.domain(a), self.domain(b));
                let mut out = Vec::new();
                for x in &da {
                    for y in &db {
                        out.push(Val::Pair(Box::new(x.clone()), Box::new(y.clone())));
                    }
                }
                out
            }
            Sort::Sum(a, b) => {
                let mut out: Vec<Val> =
                    self.domain(a).into_iter().map(|x| Val::Inl(Box::new(x))).collect();
                out.extend(self.domain(b).into_iter().map(|y| Val::Inr(Box::new(y))));
                out
            }
            Sort::Pow(a) => {
                let d = self.domain(a);
                assert!(d.len() < 20, "power set too large for the classical oracle");
                (0u32..1 << d.len())
                    .map(|m| {
                        Val::Set(
                            d.iter()
                                .enumerate()
                                .filter(|(i, _)| m & (1 << i) != 0)
                                .map(|(_, v)| v.clone())
                                .collect(),
                        )
                    })
                    .collect()
            }
            Sort::Fun(a, b) => {
                let (da, db) = (self.domain(a), self.domain(b));
                let mut out = vec![BTreeMap::new()];
                for x in &da {
                    let mut next = Vec::new();
                    for m in &out {
                        for y in &db {
                            let mut m2 = m.clone();
                            m2.insert(x.clone(), y.clone());
                            next.push(m2);
                        }
                    }
                    out = next;
                }
                out.into_iter().map(Val::Fun).collect()
            }
        }
    }

    fn size(&self, s: &Sort) -> u32 {
        self.domain(s).len() as u32
    }

    /// Position of `v` in the fiber numbering used by model data: pairs
    /// row-major, left summand first.
    fn encode(&self, s: &Sort, v: &Val) -> u32 {
        match (s, v) {
            (Sort::Base(_), Val::Atom(i)) => *i,
            (Sort::Unit, Val::Unit) => 0,
            (Sort::Prod(a, b), Val::Pair(x, y)) => self.encode(a, x) * self.size(b) + self.encode(b, y),
            (Sort::Sum(a, _), Val::Inl(x)) => self.encode(a, x),
            (Sort::Sum(a, b), Val::Inr(y)) => self.size(a) + self.encode(b, y),
            _ => panic!("cannot encode {v:?} at {s:?}"),
        }
    }

    fn decode(&self, s: &Sort, i: u32) -> Val {
        self.domain(s).into_iter().find(|v| self.encode(s, v) == i).expect("in range")
    }

    pub fn term(&self, t: &TTerm, env: &[(String, Val)]) -> Val {
        match &t.kind {
            TTermKind::Var(x) => env.iter().rev().find(|(n, _)| n == x).expect("bound").1.clone(),
            TTermKind::Unit => Val::Unit,
            TTermKind::Pair(a, b) => Val::Pair(Box::new(self.term(a, env)), Box::new(self.term(b, env))),
            TTermKind::Fst(a) => match self.term(a, env) {
                Val::Pair(x, _) => *x,
                v => panic!("fst of {v:?}"),
            },
            TTermKind::Snd(a) => match self.term(a, env) {
                Val::Pair(_, y) => *y,
                v => panic!("snd of {v:?}"),
            },
            TTermKind::Inl(a) => Val::Inl(Box::new(self.term(a, env))),
            TTermKind::Inr(a) => Val::Inr(Box::new(self.term(a, env))),
            TTermKind::Const(name) => {
                let c = self.model.constant(name).expect("declared constant");
                let map = self
                    .domain(&c.dom)
                    .into_iter()
                    .map(|x| {
                        let y = c.map.apply(self.stage, self.encode(&c.dom, &x));
                        (x, self.decode(&c.cod, y))
                    })
                    .collect();
                Val::Fun(map)
            }
            TTermKind::App(f, x) => match self.term(f, env) {
                Val::Fun(m) => m[&self.term(x, env)].clone(),
                v => panic!("apply {v:?}"),
            },
        }
    }

    pub fn holds(&self, f: &TFormula, env: &mut Vec<(String, Val)>) -> bool {
        match f {
            TFormula::True => true,
            TFormula::False => false,
            TFormula::Eq(a, b) => self.term(a, env) == self.term(b, env),
            TFormula::Mem(x, s) => match self.term(s, env) {
                Val::Set(set) => set.contains(&self.term(x, env)),
                v => panic!("membership in {v:?}"),
            },
            // Every subset of a finite set is finite.
            TFormula::KFin(_) => true,
            TFormula::And(a, b) => self.holds(a, env) && self.holds(b, env),
            TFormula::Or(a, b) => self.holds(a, env) || self.holds(b, env),
            TFormula::Implies(a, b) => !self.holds(a, env) || self.holds(b, env),
            TFormula::Not(a) => !self.holds(a, env),
            TFormula::Forall(x, s, body) | TFormula::Exists(x, s, body) => {
                let universal = matches!(f, TFormula::Forall(..));
                for v in self.domain(s) {
                    env.push((x.clone(), v));
                    let b = self.holds(body, env);
                    env.pop();
                    if b != universal {
                        return !universal;
                    }
                }
                universal
            }
        }
    }
}
