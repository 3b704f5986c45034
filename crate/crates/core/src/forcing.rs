//! Kripke–Joyal forcing for presheaves on a poset.
//!
//! With a poset as site there are no covering families, so the clauses are
//! the Kripke ones: `∧`, `∨`, `∃`, atoms are evaluated at the stage itself;
//! `→`, `¬`, `∀` quantify over all stages below. The downward clauses are
//! evaluated as "here, and at every lower cover", which lets the memo table
//! share work between stages.
//!
//! A typed formula is compiled into a node arena. Bound variables become
//! slots (de Bruijn levels); each node records which slots occur free in it,
//! and only those are restricted when moving down and hashed for the memo.

use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;
use serde::Serialize;
use smallvec::SmallVec;
use thiserror::Error;

use crate::finiteness::{kfinite_by_adjoin_in, KFamily};
use crate::logic::{
    parse_formula, typecheck, MacroMode, ParseError, Sort, TFormula, TTerm, TTermKind, TypeError,
    TypecheckOptions,
};
use crate::model::Model;
use crate::poset::{iter_mask, DownSet, FinPoset, StageMask};
use crate::presheaf::{
    coproduct, exponential, initial, power_object, product, terminal, Exponential, NatTrans,
    PowerObject, Presheaf, PresheafError, Subpresheaf, DEFAULT_POWER_CAP,
};

pub const DEFAULT_BUDGET: u64 = 100_000_000;
/// Environment variable overriding the visit budget.
pub const BUDGET_ENV: &str = "TOPOSLAB_BUDGET";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Type(#[from] TypeError),
    #[error(transparent)]
    Presheaf(#[from] PresheafError),
    #[error("evaluation budget of {budget} visits exceeded")]
    BudgetExceeded { budget: u64 },
    #[error("forcing produced a set of stages that is not down-closed: {stages}")]
    NotDownClosed { stages: String },
    #[error("binding `{name}`: {reason}")]
    Binding { name: String, reason: String },
}

impl EvalError {
    /// Cap and budget failures, as opposed to malformed input.
    pub fn is_resource(&self) -> bool {
        matches!(
            self,
            EvalError::BudgetExceeded { .. }
                | EvalError::Presheaf(PresheafError::CapExceeded { .. })
                | EvalError::Presheaf(PresheafError::FiberCapExceeded { .. })
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub budget: u64,
    pub power_cap: usize,
    pub mode: MacroMode,
}

impl Default for EvalOptions {
    fn default() -> EvalOptions {
        EvalOptions {
            budget: DEFAULT_BUDGET,
            power_cap: DEFAULT_POWER_CAP,
            mode: MacroMode::KFinLookup,
        }
    }
}

impl EvalOptions {
    /// Defaults, with the budget taken from `TOPOSLAB_BUDGET` when set.
    pub fn from_env() -> EvalOptions {
        let mut o = EvalOptions::default();
        if let Some(b) = std::env::var(BUDGET_ENV).ok().and_then(|v| v.trim().parse().ok()) {
            o.budget = b;
        }
        o
    }

    pub fn strict(mut self) -> EvalOptions {
        self.mode = MacroMode::Strict;
        self
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct EvalStats {
    pub visits: u64,
    pub memo_hits: u64,
    pub memo_entries: u64,
}

enum Shape {
    Base,
    Unit,
    Empty,
    Prod,
    Sum,
    Pow(Arc<PowerObject>, usize),
    Fun(Arc<Exponential>),
}

struct Interp {
    presheaf: Arc<Presheaf>,
    shape: Shape,
}

type TermId = u32;
type NodeId = u32;

enum TermNode {
    Slot(u16),
    /// A model constant used as a value; its index in the exponential at
    /// each stage.
    Const(Vec<u32>),
    ApplyConst(usize, TermId),
    Pair(TermId, TermId, usize),
    Fst(TermId, usize),
    Snd(TermId, usize),
    Inl(TermId),
    Inr(TermId, usize),
    Unit,
    App(TermId, TermId, usize),
}

enum NodeKind {
    True,
    False,
    Eq(TermId, TermId),
    Mem(TermId, TermId, usize),
    KFin(TermId, Arc<KFamily>),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Implies(NodeId, NodeId),
    Not(NodeId),
    Forall(usize, NodeId),
    Exists(usize, NodeId, String),
}

type Slots = SmallVec<[u16; 8]>;
type Env = SmallVec<[u32; 16]>;

struct Node {
    kind: NodeKind,
    free: Slots,
    /// Interpretation of every slot in scope.
    scope: Arc<[usize]>,
}

#[derive(Hash, PartialEq, Eq)]
struct MemoKey {
    node: NodeId,
    stage: u8,
    values: SmallVec<[u32; 8]>,
}

/// A formula compiled against a context.
#[derive(Debug, Clone)]
pub struct Prepared {
    root: NodeId,
    sorts: Vec<usize>,
}

/// A global element of a sort: one fiber element per stage, compatible with
/// restriction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binding {
    pub name: String,
    pub sort: Sort,
    pub values: Vec<u32>,
}

/// Generalized element at one stage, for [`Evaluator::forces`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Environment {
    pub stage: usize,
    pub bindings: Vec<(String, Sort, u32)>,
}

/// Compiles and evaluates formulas against one model. Interpretations of
/// sorts, K-finite families and the memo table persist across calls.
pub struct Evaluator<'m> {
    model: &'m Model,
    opts: EvalOptions,
    interps: Vec<Interp>,
    interp_of: FxHashMap<Sort, usize>,
    kfin: FxHashMap<usize, Arc<KFamily>>,
    consts: Vec<NatTrans>,
    terms: Vec<TermNode>,
    term_free: Vec<Slots>,
    nodes: Vec<Node>,
    memo: FxHashMap<MemoKey, bool>,
    stats: EvalStats,
    lower_covers: Vec<Vec<usize>>,
}

impl<'m> Evaluator<'m> {
    pub fn new(model: &'m Model, opts: EvalOptions) -> Evaluator<'m> {
        let poset = model.poset();
        let covers = poset.cover_pairs();
        let lower_covers = (0..poset.len())
            .map(|p| covers.iter().filter(|c| c.1 == p).map(|c| c.0).collect())
            .collect();
        Evaluator {
            model,
            opts,
            interps: Vec::new(),
            interp_of: FxHashMap::default(),
            kfin: FxHashMap::default(),
            consts: Vec::new(),
            terms: Vec::new(),
            term_free: Vec::new(),
            nodes: Vec::new(),
            memo: FxHashMap::default(),
            stats: EvalStats::default(),
            lower_covers,
        }
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn poset(&self) -> &Arc<FinPoset> {
        self.model.poset()
    }

    pub fn options(&self) -> EvalOptions {
        self.opts
    }

    pub fn stats(&self) -> EvalStats {
        EvalStats {
            memo_entries: self.memo.len() as u64,
            ..self.stats
        }
    }

    pub fn typecheck(&self, text: &str, ctx: &[(String, Sort)]) -> Result<TFormula, EvalError> {
        let f = parse_formula(text)?;
        Ok(typecheck(
            &f,
            &self.model.signature(),
            ctx,
            TypecheckOptions {
                mode: self.opts.mode,
            },
        )?)
    }

    /// The presheaf interpreting `s`. Memoized per evaluator.
    pub fn interpret_sort(&mut self, s: &Sort) -> Result<Arc<Presheaf>, EvalError> {
        let id = self.interp(&s.canonical())?;
        Ok(self.interps[id].presheaf.clone())
    }

    /// `P(S)` with its element decoding.
    pub fn power_object(&mut self, elem: &Sort) -> Result<Arc<PowerObject>, EvalError> {
        let id = self.interp(&Sort::pow(elem.canonical()))?;
        match &self.interps[id].shape {
            Shape::Pow(pw, _) => Ok(pw.clone()),
            _ => unreachable!(),
        }
    }

    /// The K-finite family inside `P(S)` used for `KFin` lookups.
    pub fn kfinite_family(&mut self, elem: &Sort) -> Result<Arc<KFamily>, EvalError> {
        let id = self.interp(&Sort::pow(elem.canonical()))?;
        self.kfin_of(id)
    }

    fn kfin_of(&mut self, pow_id: usize) -> Result<Arc<KFamily>, EvalError> {
        if let Some(k) = self.kfin.get(&pow_id) {
            return Ok(k.clone());
        }
        let Shape::Pow(pw, _) = &self.interps[pow_id].shape else {
            unreachable!("KFin takes a power sort")
        };
        let k = Arc::new(kfinite_by_adjoin_in(pw));
        self.kfin.insert(pow_id, k.clone());
        Ok(k)
    }

    fn push_interp(&mut self, s: Sort, presheaf: Arc<Presheaf>, shape: Shape) -> usize {
        let id = self.interps.len();
        self.interps.push(Interp { presheaf, shape });
        self.interp_of.insert(s, id);
        id
    }

    fn interp(&mut self, s: &Sort) -> Result<usize, EvalError> {
        if let Some(&id) = self.interp_of.get(s) {
            return Ok(id);
        }
        let poset = self.model.poset().clone();
        let cap = self.opts.power_cap;
        let id = match s {
            Sort::Base(name) => {
                let p = self.model.sort(name).ok_or_else(|| TypeError::UnknownBaseSort {
                    name: name.clone(),
                    at: Default::default(),
                })?;
                self.push_interp(s.clone(), p.clone(), Shape::Base)
            }
            Sort::Unit => self.push_interp(s.clone(), Arc::new(terminal(&poset)), Shape::Unit),
            Sort::Empty => self.push_interp(s.clone(), Arc::new(initial(&poset)), Shape::Empty),
            Sort::Omega => {
                let id = self.interp(&Sort::pow(Sort::Unit))?;
                self.interp_of.insert(Sort::Omega, id);
                id
            }
            Sort::Prod(a, b) => {
                let (ia, ib) = (self.interp(a)?, self.interp(b)?);
                let p = product(&self.interps[ia].presheaf, &self.interps[ib].presheaf)?;
                self.push_interp(s.clone(), Arc::new(p), Shape::Prod)
            }
            Sort::Sum(a, b) => {
                let (ia, ib) = (self.interp(a)?, self.interp(b)?);
                let p = coproduct(&self.interps[ia].presheaf, &self.interps[ib].presheaf)?;
                self.push_interp(s.clone(), Arc::new(p), Shape::Sum)
            }
            Sort::Pow(a) => {
                let ia = self.interp(a)?;
                let pw = Arc::new(power_object(&self.interps[ia].presheaf, cap)?);
                let obj = pw.object.clone();
                self.push_interp(s.clone(), obj, Shape::Pow(pw, ia))
            }
            Sort::Fun(a, b) => {
                let (ia, ib) = (self.interp(a)?, self.interp(b)?);
                let ex = Arc::new(exponential(
                    &self.interps[ia].presheaf,
                    &self.interps[ib].presheaf,
                    cap,
                )?);
                let obj = ex.object.clone();
                self.push_interp(s.clone(), obj, Shape::Fun(ex))
            }
        };
        Ok(id)
    }

    fn constant_index(&mut self, name: &str) -> Result<usize, EvalError> {
        let c = self.model.constant(name).expect("typechecked constant");
        let dom = self.interpret_sort(&c.dom)?;
        let cod = self.interpret_sort(&c.cod)?;
        if *c.map.source().as_ref() != *dom || *c.map.target().as_ref() != *cod {
            return Err(EvalError::Binding {
                name: name.to_string(),
                reason: "map does not match the interpretation of its declared sorts".into(),
            });
        }
        self.consts.push(c.map.clone());
        Ok(self.consts.len() - 1)
    }

    fn add_term(&mut self, t: TermNode, free: Slots) -> TermId {
        self.terms.push(t);
        self.term_free.push(free);
        (self.terms.len() - 1) as TermId
    }

    fn compile_term(&mut self, t: &TTerm, scope: &[(String, usize)]) -> Result<TermId, EvalError> {
        let union = |a: &Slots, b: &Slots| {
            let mut out = a.clone();
            for s in b {
                if !out.contains(s) {
                    out.push(*s);
                }
            }
            out
        };
        Ok(match &t.kind {
            TTermKind::Var(v) => {
                let slot = scope
                    .iter()
                    .rposition(|(n, _)| n == v)
                    .expect("typechecked variable") as u16;
                self.add_term(TermNode::Slot(slot), SmallVec::from_slice(&[slot]))
            }
            TTermKind::Const(name) => {
                let k = self.constant_index(name)?;
                let ex_id = self.interp(&t.sort)?;
                let Shape::Fun(ex) = &self.interps[ex_id].shape else {
                    unreachable!()
                };
                let poset = self.model.poset();
                let values = (0..poset.len())
                    .map(|p| {
                        ex.index_of_nat(p, &self.consts[k])
                            .expect("natural map restricts to a family")
                    })
                    .collect();
                self.add_term(TermNode::Const(values), Slots::new())
            }
            TTermKind::Unit => self.add_term(TermNode::Unit, Slots::new()),
            TTermKind::Pair(a, b) => {
                let (ia, ib) = (self.compile_term(a, scope)?, self.compile_term(b, scope)?);
                let right = self.interp(&b.sort)?;
                let free = union(&self.term_free[ia as usize], &self.term_free[ib as usize]);
                self.add_term(TermNode::Pair(ia, ib, right), free)
            }
            TTermKind::Fst(a) | TTermKind::Snd(a) => {
                let ia = self.compile_term(a, scope)?;
                let Sort::Prod(_, r) = &a.sort else {
                    unreachable!()
                };
                let right = self.interp(r)?;
                let free = self.term_free[ia as usize].clone();
                let node = if matches!(t.kind, TTermKind::Fst(_)) {
                    TermNode::Fst(ia, right)
                } else {
                    TermNode::Snd(ia, right)
                };
                self.add_term(node, free)
            }
            TTermKind::Inl(a) => {
                let ia = self.compile_term(a, scope)?;
                let free = self.term_free[ia as usize].clone();
                self.add_term(TermNode::Inl(ia), free)
            }
            TTermKind::Inr(a) => {
                let ia = self.compile_term(a, scope)?;
                let Sort::Sum(l, _) = &t.sort else {
                    unreachable!()
                };
                let left = self.interp(l)?;
                let free = self.term_free[ia as usize].clone();
                self.add_term(TermNode::Inr(ia, left), free)
            }
            TTermKind::App(f, x) => {
                let ix = self.compile_term(x, scope)?;
                if let TTermKind::Const(name) = &f.kind {
                    let k = self.constant_index(name)?;
                    let free = self.term_free[ix as usize].clone();
                    return Ok(self.add_term(TermNode::ApplyConst(k, ix), free));
                }
                let i_f = self.compile_term(f, scope)?;
                let ex = self.interp(&f.sort)?;
                let free = union(&self.term_free[i_f as usize], &self.term_free[ix as usize]);
                self.add_term(TermNode::App(i_f, ix, ex), free)
            }
        })
    }

    fn add_node(&mut self, kind: NodeKind, free: Slots, scope: &Arc<[usize]>) -> NodeId {
        self.nodes.push(Node {
            kind,
            free,
            scope: scope.clone(),
        });
        (self.nodes.len() - 1) as NodeId
    }

    fn compile(
        &mut self,
        f: &TFormula,
        scope: &mut Vec<(String, usize)>,
        scope_ids: &Arc<[usize]>,
    ) -> Result<NodeId, EvalError> {
        let merge = |a: &Slots, b: &Slots| {
            let mut out = a.clone();
            for s in b {
                if !out.contains(s) {
                    out.push(*s);
                }
            }
            out.sort_unstable();
            out
        };
        let tf = |e: &Self, t: TermId| e.term_free[t as usize].clone();
        let (kind, free) = match f {
            TFormula::True => (NodeKind::True, Slots::new()),
            TFormula::False => (NodeKind::False, Slots::new()),
            TFormula::Eq(a, b) => {
                let (ia, ib) = (self.compile_term(a, scope)?, self.compile_term(b, scope)?);
                let free = merge(&tf(self, ia), &tf(self, ib));
                (NodeKind::Eq(ia, ib), free)
            }
            TFormula::Mem(x, set) => {
                let (ix, is) = (self.compile_term(x, scope)?, self.compile_term(set, scope)?);
                let pow = self.interp(&set.sort)?;
                let free = merge(&tf(self, ix), &tf(self, is));
                (NodeKind::Mem(ix, is, pow), free)
            }
            TFormula::KFin(set) => {
                let is = self.compile_term(set, scope)?;
                let pow = self.interp(&set.sort)?;
                let fam = self.kfin_of(pow)?;
                (NodeKind::KFin(is, fam), merge(&tf(self, is), &Slots::new()))
            }
            TFormula::And(a, b) | TFormula::Or(a, b) | TFormula::Implies(a, b) => {
                let ia = self.compile(a, scope, scope_ids)?;
                let ib = self.compile(b, scope, scope_ids)?;
                let free = merge(
                    &self.nodes[ia as usize].free,
                    &self.nodes[ib as usize].free,
                );
                let kind = match f {
                    TFormula::And(..) => NodeKind::And(ia, ib),
                    TFormula::Or(..) => NodeKind::Or(ia, ib),
                    _ => NodeKind::Implies(ia, ib),
                };
                (kind, free)
            }
            TFormula::Not(a) => {
                let ia = self.compile(a, scope, scope_ids)?;
                (NodeKind::Not(ia), self.nodes[ia as usize].free.clone())
            }
            TFormula::Forall(v, s, body) | TFormula::Exists(v, s, body) => {
                let sid = self.interp(s)?;
                let slot = scope.len() as u16;
                scope.push((v.clone(), sid));
                let inner: Arc<[usize]> = scope.iter().map(|(_, i)| *i).collect();
                let ib = self.compile(body, scope, &inner);
                scope.pop();
                let ib = ib?;
                let free: Slots = self.nodes[ib as usize]
                    .free
                    .iter()
                    .copied()
                    .filter(|&x| x != slot)
                    .collect();
                let kind = if matches!(f, TFormula::Forall(..)) {
                    NodeKind::Forall(sid, ib)
                } else {
                    NodeKind::Exists(sid, ib, v.clone())
                };
                (kind, free)
            }
        };
        Ok(self.add_node(kind, free, scope_ids))
    }

    fn compile_root(
        &mut self,
        f: &TFormula,
        ctx: &[(String, Sort)],
    ) -> Result<NodeId, EvalError> {
        let mut scope = Vec::with_capacity(ctx.len());
        for (n, s) in ctx {
            scope.push((n.clone(), self.interp(&s.canonical())?));
        }
        let ids: Arc<[usize]> = scope.iter().map(|(_, i)| *i).collect();
        self.compile(f, &mut scope, &ids)
    }

    fn run(&mut self) -> Run<'_> {
        Run {
            interps: &self.interps,
            consts: &self.consts,
            terms: &self.terms,
            nodes: &self.nodes,
            memo: &mut self.memo,
            stats: &mut self.stats,
            budget: self.opts.budget,
            lower_covers: &self.lower_covers,
        }
    }

    fn finish_mask(&self, mask: StageMask) -> Result<DownSet, EvalError> {
        let poset = self.model.poset();
        if !poset.is_down_closed(mask) {
            return Err(EvalError::NotDownClosed {
                stages: poset.render_mask(mask),
            });
        }
        Ok(poset.downset(mask).expect("checked down-closed"))
    }

    /// `{ p : p ⊩ φ }` for a sentence. Fails if the result is not
    /// down-closed, which would indicate an evaluator bug.
    pub fn truth_value(&mut self, f: &TFormula) -> Result<DownSet, EvalError> {
        self.truth_value_with(f, &[])
    }

    /// Truth value of `f` with free variables bound to global elements.
    pub fn truth_value_with(
        &mut self,
        f: &TFormula,
        bindings: &[Binding],
    ) -> Result<DownSet, EvalError> {
        let ctx: Vec<(String, Sort)> = bindings
            .iter()
            .map(|b| (b.name.clone(), b.sort.clone()))
            .collect();
        let root = self.compile_root(f, &ctx)?;
        let n = self.model.poset().len();
        for b in bindings {
            let obj = self.interpret_sort(&b.sort)?;
            self.check_global(b, &obj)?;
        }
        let mut mask = 0;
        for p in 0..n {
            let env: Env = bindings.iter().map(|b| b.values[p]).collect();
            if self.run().force(root, p, &env)? {
                mask |= 1 << p;
            }
        }
        self.finish_mask(mask)
    }

    fn check_global(&self, b: &Binding, obj: &Presheaf) -> Result<(), EvalError> {
        let poset = self.model.poset();
        let bad = |reason: String| EvalError::Binding {
            name: b.name.clone(),
            reason,
        };
        if b.values.len() != poset.len() {
            return Err(bad(format!("expected {} stage values", poset.len())));
        }
        for (q, p) in poset.leq_pairs() {
            if b.values[p] >= obj.size(p) {
                return Err(bad(format!("no element {} at {}", b.values[p], poset.name(p))));
            }
            if obj.restrict(p, q, b.values[p]) != b.values[q] {
                return Err(bad(format!(
                    "values at {} and {} are not compatible",
                    poset.name(p),
                    poset.name(q)
                )));
            }
        }
        Ok(())
    }

    /// `p ⊩ φ` under a stage-local environment.
    pub fn forces(&mut self, f: &TFormula, env: &Environment) -> Result<bool, EvalError> {
        let ctx: Vec<(String, Sort)> = env
            .bindings
            .iter()
            .map(|(n, s, _)| (n.clone(), s.clone()))
            .collect();
        let root = self.compile_root(f, &ctx)?;
        for (n, s, v) in &env.bindings {
            let obj = self.interpret_sort(s)?;
            if *v >= obj.size(env.stage) {
                return Err(EvalError::Binding {
                    name: n.clone(),
                    reason: format!(
                        "no element {v} at {}",
                        self.model.poset().name(env.stage)
                    ),
                });
            }
        }
        let values: Env = env.bindings.iter().map(|b| b.2).collect();
        self.run().force(root, env.stage, &values)
    }

    /// Compiles an open formula once, for repeated [`Evaluator::force_prepared`].
    pub fn prepare(
        &mut self,
        f: &TFormula,
        ctx: &[(String, Sort)],
    ) -> Result<Prepared, EvalError> {
        let mut sorts = Vec::with_capacity(ctx.len());
        for (_, s) in ctx {
            sorts.push(self.interp(&s.canonical())?);
        }
        Ok(Prepared {
            root: self.compile_root(f, ctx)?,
            sorts,
        })
    }

    /// `p ⊩ φ` with the context variables bound to `values` (fiber indices
    /// at `p`).
    pub fn force_prepared(
        &mut self,
        f: &Prepared,
        p: usize,
        values: &[u32],
    ) -> Result<bool, EvalError> {
        assert_eq!(values.len(), f.sorts.len(), "one value per context variable");
        for (&v, &sid) in values.iter().zip(&f.sorts) {
            assert!(v < self.interps[sid].presheaf.size(p), "value outside fiber");
        }
        self.run().force(f.root, p, values)
    }

    /// Parses, typechecks and evaluates a sentence.
    pub fn evaluate(&mut self, text: &str) -> Result<DownSet, EvalError> {
        let f = self.typecheck(text, &[])?;
        self.truth_value(&f)
    }

    /// For a sentence starting with existential quantifiers, the first
    /// witnesses at stage `p` (in fiber order), rendered as labels.
    pub fn witnesses(
        &mut self,
        f: &TFormula,
        p: usize,
    ) -> Result<Option<Vec<(String, String)>>, EvalError> {
        let root = self.compile_root(f, &[])?;
        let mut node = root;
        let mut env = Env::new();
        let mut out = Vec::new();
        loop {
            let (sid, body, name) = match &self.nodes[node as usize].kind {
                NodeKind::Exists(sid, body, name) => (*sid, *body, name.clone()),
                _ => break,
            };
            let size = self.interps[sid].presheaf.size(p);
            let mut found = None;
            for x in 0..size {
                env.push(x);
                let ok = self.run().force(body, p, &env)?;
                env.pop();
                if ok {
                    found = Some(x);
                    break;
                }
            }
            let Some(x) = found else {
                return Ok(None);
            };
            out.push((name, self.render(sid, p, x)));
            env.push(x);
            node = body;
        }
        if !self.run().force(node, p, &env)? {
            return Ok(None);
        }
        Ok(Some(out))
    }

    fn render(&self, sid: usize, p: usize, x: u32) -> String {
        let it = &self.interps[sid];
        match &it.shape {
            Shape::Pow(pw, elem) => {
                let poset = self.model.poset();
                let base = &self.interps[*elem].presheaf;
                let fam = pw.element(p, x);
                let parts: Vec<String> = iter_mask(poset.down(p))
                    .map(|q| {
                        let items: Vec<String> =
                            fam[q].ones().map(|y| base.label(q, y as u32)).collect();
                        format!("{}: {{{}}}", poset.name(q), items.join(" "))
                    })
                    .collect();
                format!("[{}]", parts.join(", "))
            }
            _ => it.presheaf.label(p, x),
        }
    }

    /// The global element of `Omega` naming the down-set `u`.
    pub fn omega_element(&mut self, u: StageMask) -> Result<Vec<u32>, EvalError> {
        let one = self.interpret_sort(&Sort::Unit)?;
        let chosen: Vec<FixedBitSet> = (0..self.model.poset().len())
            .map(|p| {
                let mut b = FixedBitSet::with_capacity(1);
                if u & (1 << p) != 0 {
                    b.insert(0);
                }
                b
            })
            .collect();
        let sub = Subpresheaf::new(one, chosen)?;
        self.subobject_element(&Sort::Unit, &sub)
    }

    /// The global element of `P(S)` classifying a subobject of `S`.
    pub fn subobject_element(
        &mut self,
        elem: &Sort,
        sub: &Subpresheaf,
    ) -> Result<Vec<u32>, EvalError> {
        let pw = self.power_object(elem)?;
        if **sub.ambient() != *pw.base {
            return Err(PresheafError::AmbientMismatch.into());
        }
        let poset = self.model.poset().clone();
        Ok((0..poset.len())
            .map(|p| {
                pw.index_of(p, &sub.truncate(poset.down(p)))
                    .expect("truncated subobject is a power-object element")
            })
            .collect())
    }

    pub fn clear_memo(&mut self) {
        self.memo.clear();
    }
}

struct Run<'a> {
    interps: &'a [Interp],
    consts: &'a [NatTrans],
    terms: &'a [TermNode],
    nodes: &'a [Node],
    memo: &'a mut FxHashMap<MemoKey, bool>,
    stats: &'a mut EvalStats,
    budget: u64,
    lower_covers: &'a [Vec<usize>],
}

impl Run<'_> {
    fn term(&self, t: TermId, p: usize, env: &[u32]) -> u32 {
        match &self.terms[t as usize] {
            TermNode::Slot(s) => env[*s as usize],
            TermNode::Const(values) => values[p],
            TermNode::ApplyConst(k, x) => self.consts[*k].apply(p, self.term(*x, p, env)),
            TermNode::Unit => 0,
            TermNode::Pair(a, b, right) => {
                let w = self.interps[*right].presheaf.size(p);
                self.term(*a, p, env) * w + self.term(*b, p, env)
            }
            TermNode::Fst(a, right) => self.term(*a, p, env) / self.interps[*right].presheaf.size(p),
            TermNode::Snd(a, right) => self.term(*a, p, env) % self.interps[*right].presheaf.size(p),
            TermNode::Inl(a) => self.term(*a, p, env),
            TermNode::Inr(a, left) => self.interps[*left].presheaf.size(p) + self.term(*a, p, env),
            TermNode::App(f, x, ex) => {
                let Shape::Fun(e) = &self.interps[*ex].shape else {
                    unreachable!()
                };
                e.apply(p, self.term(*f, p, env), self.term(*x, p, env))
            }
        }
    }

    fn restrict(&self, node: &Node, p: usize, q: usize, env: &[u32]) -> Env {
        let mut out: Env = SmallVec::from_slice(env);
        for &s in &node.free {
            let s = s as usize;
            out[s] = self.interps[node.scope[s]].presheaf.restrict(p, q, env[s]);
        }
        out
    }

    fn force(&mut self, id: NodeId, p: usize, env: &[u32]) -> Result<bool, EvalError> {
        self.stats.visits += 1;
        if self.stats.visits > self.budget {
            return Err(EvalError::BudgetExceeded {
                budget: self.budget,
            });
        }
        let node = &self.nodes[id as usize];
        match &node.kind {
            NodeKind::True => return Ok(true),
            NodeKind::False => return Ok(false),
            NodeKind::Eq(a, b) => return Ok(self.term(*a, p, env) == self.term(*b, p, env)),
            NodeKind::Mem(x, set, pow) => {
                let Shape::Pow(pw, _) = &self.interps[*pow].shape else {
                    unreachable!()
                };
                return Ok(pw.member(p, self.term(*set, p, env), self.term(*x, p, env)));
            }
            NodeKind::KFin(set, fam) => return Ok(fam.contains(p, self.term(*set, p, env))),
            NodeKind::And(a, b) => {
                let (a, b) = (*a, *b);
                return Ok(self.force(a, p, env)? && self.force(b, p, env)?);
            }
            NodeKind::Or(a, b) => {
                let (a, b) = (*a, *b);
                return Ok(self.force(a, p, env)? || self.force(b, p, env)?);
            }
            _ => {}
        }
        let key = MemoKey {
            node: id,
            stage: p as u8,
            values: node.free.iter().map(|&s| env[s as usize]).collect(),
        };
        if let Some(&v) = self.memo.get(&key) {
            self.stats.memo_hits += 1;
            return Ok(v);
        }
        let here = match &node.kind {
            NodeKind::Implies(a, b) => {
                let (a, b) = (*a, *b);
                !self.force(a, p, env)? || self.force(b, p, env)?
            }
            NodeKind::Not(a) => !self.force(*a, p, env)?,
            NodeKind::Forall(sid, body) | NodeKind::Exists(sid, body, _) => {
                let universal = matches!(node.kind, NodeKind::Forall(..));
                let body = *body;
                let size = self.interps[*sid].presheaf.size(p);
                let mut ext: Env = SmallVec::from_slice(env);
                ext.push(0);
                let last = ext.len() - 1;
                let mut result = universal;
                for x in 0..size {
                    ext[last] = x;
                    if self.force(body, p, &ext)? != universal {
                        result = !universal;
                        break;
                    }
                }
                result
            }
            _ => unreachable!(),
        };
        let mut value = here;
        let downward = !matches!(node.kind, NodeKind::Exists(..));
        if value && downward {
            for &q in &self.lower_covers[p] {
                let sub = self.restrict(node, p, q, env);
                if !self.force(id, q, &sub)? {
                    value = false;
                    break;
                }
            }
        }
        self.memo.insert(key, value);
        Ok(value)
    }
}

/// Convenience: evaluate a sentence on a model with default options.
pub fn truth_value(model: &Model, text: &str) -> Result<DownSet, EvalError> {
    Evaluator::new(model, EvalOptions::from_env()).evaluate(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{chain1, chain2, wedge3, bowtie4};

    #[test]
    fn lem_on_chains() {
        assert!(truth_value(&chain1(), "forall u:Omega. u \\/ ~u").unwrap().is_top());
        let tv = truth_value(&chain2(), "forall u:Omega. u \\/ ~u").unwrap();
        assert_eq!(tv.stage_names(), vec!["bot"]);
    }

    #[test]
    fn lem_instance_with_bound_truth_value() {
        let m = chain2();
        let mut ev = Evaluator::new(&m, EvalOptions::default());
        let f = ev
            .typecheck("u \\/ ~u", &[("u".into(), Sort::Omega)])
            .unwrap();
        let values = ev.omega_element(0b01).unwrap();
        // At bot the truth value {bot} is everything.
        assert_eq!(values[0], 1);
        let u = Binding {
            name: "u".into(),
            sort: Sort::Omega,
            values,
        };
        let tv = ev.truth_value_with(&f, &[u.clone()]).unwrap();
        assert_eq!(tv.mask(), 0b01);
        let at_top = Environment {
            stage: 1,
            bindings: vec![("u".into(), Sort::Omega, u.values[1])],
        };
        assert!(!ev.forces(&f, &at_top).unwrap());
    }

    #[test]
    fn constants_of_logic() {
        for m in [chain1(), chain2(), wedge3(), bowtie4()] {
            assert!(truth_value(&m, "true").unwrap().is_top());
            assert!(truth_value(&m, "false").unwrap().is_bottom());
        }
    }

    #[test]
    fn bowtie_object_is_inhabited() {
        let tv = truth_value(&bowtie4(), "exists x:A. true").unwrap();
        assert!(tv.is_top());
        let tv = truth_value(&bowtie4(), "forall S:P(A). (forall x:A. x in S) -> Inhab(S)").unwrap();
        assert!(tv.is_top());
    }

    #[test]
    fn omega_sizes_on_wedge() {
        let m = wedge3();
        let mut ev = Evaluator::new(&m, EvalOptions::default());
        assert_eq!(ev.interpret_sort(&Sort::Omega).unwrap().sizes(), &[5, 2, 2]);
        assert_eq!(
            ev.interpret_sort(&Sort::pow(Sort::Unit)).unwrap().sizes(),
            &[5, 2, 2]
        );
    }

    #[test]
    fn budget_is_enforced() {
        let m = chain2();
        let mut ev = Evaluator::new(
            &m,
            EvalOptions {
                budget: 10,
                ..EvalOptions::default()
            },
        );
        let err = ev.evaluate("forall S:P(B). forall T:P(B). S = T \\/ ~(S = T)").unwrap_err();
        assert!(matches!(err, EvalError::BudgetExceeded { budget: 10 }));
        assert!(err.is_resource());
    }

    #[test]
    fn strict_and_lookup_kfin_agree_on_chain2() {
        let m = chain2();
        let text = "forall S:P(B). KFin(S) \\/ ~KFin(S)";
        let a = Evaluator::new(&m, EvalOptions::default()).evaluate(text).unwrap();
        let b = Evaluator::new(&m, EvalOptions::default().strict())
            .evaluate(text)
            .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn witnesses_for_existentials() {
        let m = chain2();
        let mut ev = Evaluator::new(&m, EvalOptions::default());
        let f = ev.typecheck("exists x:B. exists y:B. ~(x = y)", &[]).unwrap();
        let w = ev.witnesses(&f, 1).unwrap().unwrap();
        assert_eq!(w, vec![("x".into(), "0".into()), ("y".into(), "1".into())]);
        let g = ev.typecheck("exists x:B. false", &[]).unwrap();
        assert_eq!(ev.witnesses(&g, 1).unwrap(), None);
    }
}
