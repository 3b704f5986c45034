//! Executable scenarios: each theorem and counterexample becomes a sentence
//! evaluated on concrete models, with an expected outcome.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::forcing::{EvalError, EvalStats};
use crate::model::{describe_poset, Model};
use crate::poset::{iter_mask, DownSet, PosetError};
use crate::presheaf::PresheafError;

pub mod enumerate;
mod scenarios;
mod search;

pub use scenarios::*;
pub use search::*;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Presheaf(#[from] PresheafError),
    #[error(transparent)]
    Poset(#[from] PosetError),
    #[error("{what} {size} exceeds cap {cap}")]
    Cap {
        what: &'static str,
        size: usize,
        cap: usize,
    },
    #[error("unknown suite `{0}`; known: benabou-loiseau")]
    UnknownSuite(String),
}

impl VerifyError {
    /// Caps and budgets, as opposed to bad input.
    pub fn is_resource(&self) -> bool {
        match self {
            VerifyError::Eval(e) => e.is_resource(),
            VerifyError::Presheaf(e) => matches!(
                e,
                PresheafError::CapExceeded { .. } | PresheafError::FiberCapExceeded { .. }
            ),
            VerifyError::Poset(e) => matches!(e, PosetError::CapExceeded { .. }),
            VerifyError::Cap { .. } => true,
            VerifyError::UnknownSuite(_) => false,
        }
    }
}

impl From<crate::logic::TypeError> for VerifyError {
    fn from(e: crate::logic::TypeError) -> VerifyError {
        VerifyError::Eval(e.into())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Verdict {
    InternallyValid,
    /// Stages that do not force the sentence.
    FailsAt(Vec<String>),
    /// The sentence is a constructed counter-instance and is not valid.
    RefutationExhibited,
}

impl Verdict {
    pub fn judge(tv: &DownSet, refutation: bool) -> Verdict {
        if tv.is_top() {
            Verdict::InternallyValid
        } else if refutation {
            Verdict::RefutationExhibited
        } else {
            let poset = tv.poset();
            let missing = poset.full_mask() & !tv.mask();
            Verdict::FailsAt(iter_mask(missing).map(|p| poset.name(p).to_string()).collect())
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::InternallyValid => write!(f, "InternallyValid"),
            Verdict::FailsAt(s) => write!(f, "FailsAt({})", s.join(", ")),
            Verdict::RefutationExhibited => write!(f, "RefutationExhibited"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SortInfo {
    pub name: String,
    pub fibers: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub model: String,
    pub poset: String,
    pub sorts: Vec<SortInfo>,
    pub sentence: String,
    pub truth_value: Vec<String>,
    pub verdict: Verdict,
    pub witnesses: Vec<String>,
    pub stats: EvalStats,
}

impl Report {
    pub fn new(
        scenario: &str,
        model: &Model,
        sentence: &str,
        tv: &DownSet,
        refutation: bool,
        stats: EvalStats,
    ) -> Report {
        Report {
            scenario: scenario.to_string(),
            model: model.name.clone(),
            poset: describe_poset(model.poset()),
            sorts: model
                .sorts()
                .iter()
                .map(|(n, p)| SortInfo {
                    name: n.clone(),
                    fibers: p.sizes().to_vec(),
                })
                .collect(),
            sentence: sentence.to_string(),
            truth_value: tv.stage_names(),
            verdict: Verdict::judge(tv, refutation),
            witnesses: Vec::new(),
            stats,
        }
    }
}

/// `{a, b}` followed by ` TOP` / ` BOTTOM` when applicable.
pub fn render_truth_value(tv: &DownSet) -> String {
    let mut s = format!("{{{}}}", tv.stage_names().join(", "));
    if tv.is_top() {
        s.push_str(" TOP");
    } else if tv.is_bottom() {
        s.push_str(" BOTTOM");
    }
    s
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sorts: Vec<String> = self
            .sorts
            .iter()
            .map(|s| {
                let k: Vec<String> = s.fibers.iter().map(|x| x.to_string()).collect();
                format!("{}:({})", s.name, k.join(","))
            })
            .collect();
        write!(f, "[{}] {} [{}]", self.scenario, self.model, self.poset)?;
        if !sorts.is_empty() {
            write!(f, " {}", sorts.join(" "))?;
        }
        writeln!(f)?;
        writeln!(f, "  sentence: {}", self.sentence)?;
        let mut tv = format!("{{{}}}", self.truth_value.join(", "));
        match &self.verdict {
            Verdict::InternallyValid => tv.push_str(" TOP"),
            _ if self.truth_value.is_empty() => tv.push_str(" BOTTOM"),
            _ => {}
        }
        writeln!(f, "  truth value: {tv}")?;
        writeln!(f, "  verdict: {}", self.verdict)?;
        for w in &self.witnesses {
            writeln!(f, "  witness {w}")?;
        }
        write!(
            f,
            "  visits: {}, memo hits: {}",
            self.stats.visits, self.stats.memo_hits
        )
    }
}
