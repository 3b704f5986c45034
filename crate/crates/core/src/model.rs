//! Models: a poset, named presheaves interpreting base sorts, and named
//! maps usable as constants of `Fun` sort.
//!
//! Text format, one directive per line, `#` starts a comment:
//!
//! ```text
//! poset: bot top
//! leq: bot <= top
//! presheaf X:
//!   stage bot { ab }
//!   stage top { a b }
//!   map top -> bot : a => ab
//!   map top -> bot : b => ab
//! ```
//!
//! A restriction not given for a covering pair sends each element to the
//! element of the same name; composite pairs default to the composite of
//! covers.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::logic::{Signature, Sort};
use crate::poset::{FinPoset, PosetError, DEFAULT_POSET_CAP};
use crate::presheaf::{
    coproduct, quotient, terminal, NatTrans, Presheaf, PresheafError, Subpresheaf,
    DEFAULT_FIBER_CAP,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("presheaf {name}: {source}")]
    Presheaf {
        name: String,
        #[source]
        source: PresheafError,
    },
    #[error("unknown built-in model `{0}`; known: chain1, chain2, wedge3, bowtie4, antichain2")]
    UnknownBuiltin(String),
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
}

/// A named natural transformation between the interpretations of two sorts.
#[derive(Debug, Clone)]
pub struct Constant {
    pub name: String,
    pub dom: Sort,
    pub cod: Sort,
    pub map: NatTrans,
}

#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    poset: Arc<FinPoset>,
    sorts: Vec<(String, Arc<Presheaf>)>,
    constants: Vec<Constant>,
}

impl Model {
    pub fn new(name: &str, poset: Arc<FinPoset>) -> Model {
        Model {
            name: name.to_string(),
            poset,
            sorts: Vec::new(),
            constants: Vec::new(),
        }
    }

    pub fn poset(&self) -> &Arc<FinPoset> {
        &self.poset
    }

    pub fn sorts(&self) -> &[(String, Arc<Presheaf>)] {
        &self.sorts
    }

    pub fn constants(&self) -> &[Constant] {
        &self.constants
    }

    pub fn sort(&self, name: &str) -> Option<&Arc<Presheaf>> {
        self.sorts.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn constant(&self, name: &str) -> Option<&Constant> {
        self.constants.iter().find(|c| c.name == name)
    }

    /// Adds or replaces a base sort.
    pub fn with_sort(mut self, name: &str, p: Arc<Presheaf>) -> Model {
        assert!(
            Arc::ptr_eq(p.poset(), &self.poset) || **p.poset() == *self.poset,
            "sort {name} lives over a different poset"
        );
        match self.sorts.iter_mut().find(|(n, _)| n == name) {
            Some(slot) => slot.1 = p,
            None => self.sorts.push((name.to_string(), p)),
        }
        self
    }

    pub fn with_constant(mut self, c: Constant) -> Model {
        self.constants.retain(|d| d.name != c.name);
        self.constants.push(c);
        self
    }

    pub fn signature(&self) -> Signature {
        Signature {
            bases: self.sorts.iter().map(|(n, _)| n.clone()).collect(),
            constants: self
                .constants
                .iter()
                .map(|c| (c.name.clone(), Sort::fun(c.dom.clone(), c.cod.clone())))
                .collect(),
        }
    }

    /// One-line description, e.g. `chain2 [bot <= top] B:(2,2)`.
    pub fn describe(&self) -> String {
        let mut s = format!("{} [{}]", self.name, describe_poset(&self.poset));
        for (n, p) in &self.sorts {
            let sizes: Vec<String> = p.sizes().iter().map(|k| k.to_string()).collect();
            let _ = write!(s, " {n}:({})", sizes.join(","));
        }
        s
    }

    /// Serializes to the text format. Constants are not part of the format.
    pub fn to_text(&self) -> String {
        let p = &self.poset;
        let mut out = String::new();
        let _ = writeln!(out, "# model {}", self.name);
        let _ = writeln!(out, "poset: {}", p.names().join(" "));
        for (q, r) in p.cover_pairs() {
            let _ = writeln!(out, "leq: {} <= {}", p.name(q), p.name(r));
        }
        for (name, f) in &self.sorts {
            let _ = writeln!(out, "presheaf {name}:");
            for s in 0..p.len() {
                let _ = writeln!(out, "  stage {} {{ {} }}", p.name(s), f.stage_labels(s).join(" "));
            }
            for (q, r) in p.cover_pairs() {
                for x in 0..f.size(r) {
                    let y = f.restrict(r, q, x);
                    let _ = writeln!(
                        out,
                        "  map {} -> {} : {} => {}",
                        p.name(r),
                        p.name(q),
                        f.label(r, x),
                        f.label(q, y)
                    );
                }
            }
        }
        out
    }

    pub fn parse(text: &str) -> Result<Model, ModelError> {
        parse_model(text)
    }

    pub fn builtin(name: &str) -> Result<Model, ModelError> {
        match name {
            "chain1" => Ok(chain1()),
            "chain2" => Ok(chain2()),
            "wedge3" => Ok(wedge3()),
            "bowtie4" => Ok(bowtie4()),
            "antichain2" => Ok(antichain2()),
            other => Err(ModelError::UnknownBuiltin(other.to_string())),
        }
    }
}

pub const BUILTIN_MODELS: &[&str] = &["chain1", "chain2", "wedge3", "bowtie4", "antichain2"];

pub fn describe_poset(p: &FinPoset) -> String {
    let covers = p.cover_pairs();
    if covers.is_empty() {
        return p.names().join(", ");
    }
    let mut parts: Vec<String> = covers
        .iter()
        .map(|&(q, r)| format!("{} <= {}", p.name(q), p.name(r)))
        .collect();
    for s in 0..p.len() {
        if covers.iter().all(|&(q, r)| q != s && r != s) {
            parts.push(p.name(s).to_string());
        }
    }
    parts.join(", ")
}

fn two(poset: &Arc<FinPoset>) -> Arc<Presheaf> {
    Arc::new(Presheaf::constant(poset.clone(), &["0", "1"]))
}

pub fn chain1() -> Model {
    let p = Arc::new(FinPoset::chain(&["x"]));
    Model::new("chain1", p.clone()).with_sort("B", two(&p))
}

pub fn chain2() -> Model {
    let p = Arc::new(FinPoset::chain(&["bot", "top"]));
    Model::new("chain2", p.clone()).with_sort("B", two(&p))
}

/// The three-element poset with top `1` over incomparable `a`, `b`.
pub fn wedge3() -> Model {
    let p = Arc::new(FinPoset::new(&["1", "a", "b"], &[("a", "1"), ("b", "1")]).unwrap());
    Model::new("wedge3", p.clone()).with_sort("B", two(&p))
}

/// `p, q` below both of `r, s`, with the object `A`: two elements at every
/// stage, identity restrictions except the swap from `r` to `p`.
pub fn bowtie4() -> Model {
    let p = Arc::new(
        FinPoset::new(
            &["p", "q", "r", "s"],
            &[("p", "r"), ("p", "s"), ("q", "r"), ("q", "s")],
        )
        .unwrap(),
    );
    let labels = vec![vec!["0".to_string(), "1".to_string()]; 4];
    let tables = p
        .leq_pairs()
        .into_iter()
        .map(|(lo, hi)| {
            let swap = p.name(hi) == "r" && p.name(lo) == "p";
            ((hi, lo), if swap { vec![1, 0] } else { vec![0, 1] })
        })
        .collect();
    let a = Presheaf::validate(p.clone(), labels, tables, DEFAULT_FIBER_CAP).unwrap();
    Model::new("bowtie4", p.clone())
        .with_sort("A", Arc::new(a))
        .with_sort("B", two(&p))
}

pub fn antichain2() -> Model {
    let p = Arc::new(FinPoset::antichain(&["l", "r"]));
    Model::new("antichain2", p.clone()).with_sort("B", two(&p))
}

/// The subobject of `1 + 1` relating everything at stages in `u` and only
/// the diagonal elsewhere, and the quotient by it: `a = b` holds exactly
/// on `u`.
pub fn merged_two(poset: &Arc<FinPoset>, u: u32) -> Result<(Arc<Presheaf>, NatTrans), PresheafError> {
    let one = Arc::new(terminal(poset));
    let two = Arc::new(coproduct(&one, &one)?.with_labels(vec![
        vec!["a".into(), "b".into()];
        poset.len()
    ]));
    let pairs = Arc::new(crate::presheaf::product(&two, &two)?);
    let chosen: Vec<Vec<u32>> = (0..poset.len())
        .map(|p| {
            if u & (1 << p) != 0 {
                vec![0, 1, 2, 3]
            } else {
                vec![0, 3]
            }
        })
        .collect();
    let refs: Vec<&[u32]> = chosen.iter().map(|c| c.as_slice()).collect();
    let rel = Subpresheaf::from_indices(pairs, &refs)?;
    quotient(&two, &rel)
}

fn parse_model(text: &str) -> Result<Model, ModelError> {
    struct Decl {
        name: String,
        line: usize,
        stages: Vec<Option<Vec<String>>>,
        maps: Vec<(usize, usize, String, String, usize)>,
    }
    let err = |line: usize, message: String| ModelError::Syntax { line, message };
    let mut names: Option<Vec<String>> = None;
    let mut leq: Vec<(String, String)> = Vec::new();
    let mut raw_decls: Vec<(String, usize, Vec<(usize, String)>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("poset:") {
            if names.is_some() {
                return Err(err(line, "poset declared twice".into()));
            }
            names = Some(rest.split_whitespace().map(str::to_string).collect());
        } else if let Some(rest) = content.strip_prefix("leq:") {
            for item in rest.split(',') {
                let parts: Vec<&str> = item.split("<=").map(str::trim).collect();
                if parts.len() != 2 || parts.iter().any(|s| s.is_empty()) {
                    return Err(err(line, format!("expected `a <= b`, found `{}`", item.trim())));
                }
                leq.push((parts[0].to_string(), parts[1].to_string()));
            }
        } else if let Some(rest) = content.strip_prefix("presheaf") {
            let name = rest.trim().trim_end_matches(':').trim();
            if name.is_empty() || !rest.trim().ends_with(':') {
                return Err(err(line, "expected `presheaf Name:`".into()));
            }
            raw_decls.push((name.to_string(), line, Vec::new()));
        } else if content.starts_with("stage") || content.starts_with("map") {
            let Some(last) = raw_decls.last_mut() else {
                return Err(err(line, "stage or map outside a presheaf section".into()));
            };
            last.2.push((line, content.to_string()));
        } else {
            return Err(err(line, format!("unrecognized directive `{content}`")));
        }
    }
    let names = names.ok_or_else(|| err(1, "missing `poset:` line".into()))?;
    let pairs: Vec<(&str, &str)> = leq.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let ids: Vec<&str> = names.iter().map(String::as_str).collect();
    let poset = Arc::new(FinPoset::with_cap(&ids, &pairs, DEFAULT_POSET_CAP)?);
    let n = poset.len();
    let stage = |line: usize, s: &str| {
        poset
            .index_of(s)
            .ok_or_else(|| err(line, format!("unknown stage `{s}`")))
    };
    let mut decls = Vec::new();
    for (name, line, body) in raw_decls {
        let mut d = Decl {
            name,
            line,
            stages: vec![None; n],
            maps: Vec::new(),
        };
        for (l, content) in body {
            if let Some(rest) = content.strip_prefix("stage") {
                let (id, elems) = rest
                    .split_once('{')
                    .ok_or_else(|| err(l, "expected `stage id { elems }`".into()))?;
                let elems = elems
                    .strip_suffix('}')
                    .ok_or_else(|| err(l, "missing `}`".into()))?;
                let s = stage(l, id.trim())?;
                let list: Vec<String> = elems.split_whitespace().map(str::to_string).collect();
                for (k, e) in list.iter().enumerate() {
                    if list[..k].contains(e) {
                        return Err(err(l, format!("duplicate element `{e}`")));
                    }
                }
                if d.stages[s].replace(list).is_some() {
                    return Err(err(l, format!("stage `{}` given twice", id.trim())));
                }
            } else {
                let rest = content.strip_prefix("map").unwrap();
                let (arrow, assign) = rest
                    .split_once(':')
                    .ok_or_else(|| err(l, "expected `map p -> q : x => y`".into()))?;
                let (from, to) = arrow
                    .split_once("->")
                    .ok_or_else(|| err(l, "expected `p -> q`".into()))?;
                let (x, y) = assign
                    .split_once("=>")
                    .ok_or_else(|| err(l, "expected `x => y`".into()))?;
                let (p, q) = (stage(l, from.trim())?, stage(l, to.trim())?);
                if !poset.leq(q, p) || p == q {
                    return Err(err(
                        l,
                        format!("`{}` is not strictly below `{}`", to.trim(), from.trim()),
                    ));
                }
                d.maps.push((p, q, x.trim().to_string(), y.trim().to_string(), l));
            }
        }
        decls.push(d);
    }
    let mut model = Model::new("file", poset.clone());
    let covers = poset.cover_pairs();
    for d in decls {
        if model.sort(&d.name).is_some() {
            return Err(ModelError::Duplicate(d.name));
        }
        let mut labels = Vec::with_capacity(n);
        for (s, st) in d.stages.iter().enumerate() {
            labels.push(st.clone().ok_or_else(|| {
                err(d.line, format!("presheaf {}: stage `{}` not given", d.name, poset.name(s)))
            })?);
        }
        let mut tables = Vec::new();
        for (q, p) in poset.leq_pairs() {
            if p == q {
                continue;
            }
            let explicit: Vec<_> = d.maps.iter().filter(|m| m.0 == p && m.1 == q).collect();
            if explicit.is_empty() && !covers.contains(&(q, p)) {
                continue;
            }
            let mut table = Vec::with_capacity(labels[p].len());
            for x in &labels[p] {
                let given: Vec<_> = explicit.iter().filter(|m| &m.2 == x).collect();
                let target = match given.as_slice() {
                    [] => x,
                    [m] => &m.3,
                    [_, m, ..] => {
                        return Err(err(m.4, format!("element `{x}` mapped twice")));
                    }
                };
                let idx = labels[q].iter().position(|e| e == target).ok_or_else(|| {
                    let line = given.first().map(|m| m.4).unwrap_or(d.line);
                    err(
                        line,
                        format!(
                            "presheaf {}: `{target}` is not an element at `{}` (restricting `{x}` from `{}`)",
                            d.name,
                            poset.name(q),
                            poset.name(p)
                        ),
                    )
                })?;
                table.push(idx as u32);
            }
            if let Some(m) = explicit.iter().find(|m| !labels[p].contains(&m.2)) {
                return Err(err(m.4, format!("`{}` is not an element at `{}`", m.2, poset.name(p))));
            }
            tables.push(((p, q), table));
        }
        let f = Presheaf::from_covers(poset.clone(), labels, tables, DEFAULT_FIBER_CAP).map_err(
            |source| ModelError::Presheaf {
                name: d.name.clone(),
                source,
            },
        )?;
        model = model.with_sort(&d.name, Arc::new(f));
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_round_trip_through_text() {
        for name in BUILTIN_MODELS {
            let m = Model::builtin(name).unwrap();
            let back = Model::parse(&m.to_text()).unwrap();
            assert_eq!(**back.poset(), **m.poset(), "{name}");
            assert_eq!(back.sorts().len(), m.sorts().len());
            for ((n1, a), (n2, b)) in back.sorts().iter().zip(m.sorts()) {
                assert_eq!(n1, n2);
                assert_eq!(a, b, "{name}.{n1}");
            }
        }
    }

    #[test]
    fn identity_default_and_explicit_maps() {
        let text = "\
poset: bot top
leq: bot <= top
presheaf X:
  stage bot { ab }
  stage top { a b }
  map top -> bot : a => ab
  map top -> bot : b => ab
presheaf B:   # identity maps by name
  stage bot { 0 1 }
  stage top { 0 1 }
";
        let m = Model::parse(text).unwrap();
        assert_eq!(m.sort("X").unwrap().sizes(), &[1, 2]);
        assert_eq!(m.sort("B").unwrap().table(1, 0), &[0, 1]);
    }

    #[test]
    fn missing_name_is_an_error() {
        let text = "poset: bot top\nleq: bot <= top\npresheaf X:\n stage bot { u }\n stage top { a }\n";
        assert!(matches!(Model::parse(text), Err(ModelError::Syntax { line: 3, .. })));
    }

    #[test]
    fn cycle_is_reported() {
        let text = "poset: x y\nleq: x <= y\nleq: y <= x\n";
        assert!(matches!(
            Model::parse(text),
            Err(ModelError::Poset(PosetError::CycleError(..)))
        ));
    }

    #[test]
    fn composite_defaults_compose() {
        let text = "\
poset: lo mid hi
leq: lo <= mid, mid <= hi
presheaf F:
  stage lo { x y }
  stage mid { x y }
  stage hi { x y }
  map hi -> mid : x => y
  map hi -> mid : y => x
";
        let m = Model::parse(text).unwrap();
        let f = m.sort("F").unwrap();
        assert_eq!(f.table(2, 0), &[1, 0]);
    }

    #[test]
    fn merged_two_sizes() {
        let m = chain2();
        let (x, _) = merged_two(m.poset(), 0b01).unwrap();
        assert_eq!(x.sizes(), &[1, 2]);
    }
}
