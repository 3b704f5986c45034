use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::forcing::{EvalError, EvalOptions, Evaluator};
use crate::logic::parse_formula;
use crate::model::Model;
use crate::presheaf::Presheaf;

use super::enumerate::{posets_up_to_iso, presheaves_up_to_iso, MAX_ENUM_FIBER, MAX_ENUM_POSET};
use super::{Report, VerifyError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBounds {
    pub max_poset: usize,
    pub max_fiber: usize,
    /// Stop at the first countermodel in enumeration order.
    pub first: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchSummary {
    pub sentence: String,
    pub models_scanned: usize,
    pub refuted: Vec<Report>,
}

/// Every model in the search space, in deterministic order: posets by size
/// then canonical code, then each base sort over its presheaves by code.
fn models(sorts: &[String], bounds: &SearchBounds) -> Result<Vec<Model>, VerifyError> {
    let mut out = Vec::new();
    for n in 1..=bounds.max_poset {
        for (i, poset) in posets_up_to_iso(n)?.into_iter().enumerate() {
            let poset = Arc::new(poset);
            let choices: Vec<Arc<Presheaf>> = if sorts.is_empty() {
                Vec::new()
            } else {
                presheaves_up_to_iso(&poset, bounds.max_fiber)?
            };
            let k = choices.len();
            let total = if sorts.is_empty() { 1 } else { k.pow(sorts.len() as u32) };
            for mut idx in 0..total {
                let mut name = format!("n{n}.{i}");
                let mut m = Model::new("", poset.clone());
                for s in sorts {
                    let j = idx % k;
                    idx /= k;
                    name.push_str(&format!(" {s}#{j}"));
                    m = m.with_sort(s, choices[j].clone());
                }
                m.name = name;
                out.push(m);
            }
        }
    }
    Ok(out)
}

fn evaluate(m: &Model, text: &str, opts: EvalOptions) -> Result<Option<Report>, VerifyError> {
    let mut ev = Evaluator::new(m, opts);
    let f = ev.typecheck(text, &[])?;
    let tv = ev.truth_value(&f)?;
    Ok((!tv.is_top()).then(|| Report::new("search", m, text, &tv, false, ev.stats())))
}

/// Enumerates posets up to `max_poset` elements (up to isomorphism) and,
/// for each base sort the sentence mentions, presheaves with fibers up to
/// `max_fiber` (up to isomorphism), returning models where the sentence is
/// not forced everywhere.
pub fn search_counterexample(
    text: &str,
    bounds: SearchBounds,
    opts: EvalOptions,
) -> Result<SearchSummary, VerifyError> {
    if bounds.max_poset > MAX_ENUM_POSET || bounds.max_poset == 0 {
        return Err(VerifyError::Cap {
            what: "search poset size",
            size: bounds.max_poset,
            cap: MAX_ENUM_POSET,
        });
    }
    if bounds.max_fiber > MAX_ENUM_FIBER {
        return Err(VerifyError::Cap {
            what: "search fiber size",
            size: bounds.max_fiber,
            cap: MAX_ENUM_FIBER,
        });
    }
    let parsed = parse_formula(text).map_err(EvalError::from)?;
    let sorts = parsed.base_sorts();
    let space = models(&sorts, &bounds)?;
    let mut refuted = Vec::new();
    let mut scanned = 0;
    let chunk = if bounds.first {
        rayon::current_num_threads().max(1) * 2
    } else {
        space.len().max(1)
    };
    for batch in space.chunks(chunk) {
        let found: Vec<Option<Report>> = batch
            .par_iter()
            .map(|m| evaluate(m, text, opts))
            .collect::<Result<_, _>>()?;
        if bounds.first {
            if let Some(pos) = found.iter().position(Option::is_some) {
                scanned += pos + 1;
                refuted.extend(found.into_iter().flatten().take(1));
                break;
            }
        }
        scanned += batch.len();
        refuted.extend(found.into_iter().flatten());
    }
    Ok(SearchSummary {
        sentence: text.to_string(),
        models_scanned: scanned,
        refuted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verify::{LEM, THEOREM2};

    fn bounds(max_poset: usize, max_fiber: usize, first: bool) -> SearchBounds {
        SearchBounds {
            max_poset,
            max_fiber,
            first,
        }
    }

    #[test]
    fn lem_fails_exactly_on_the_two_chain() {
        let s = search_counterexample(LEM, bounds(2, 2, false), EvalOptions::default()).unwrap();
        assert_eq!(s.models_scanned, 3);
        assert_eq!(s.refuted.len(), 1);
        assert_eq!(s.refuted[0].poset, "a <= b");
    }

    #[test]
    fn strong_dual_has_no_small_countermodel() {
        let s = search_counterexample(THEOREM2, bounds(2, 2, false), EvalOptions::default()).unwrap();
        assert!(s.refuted.is_empty());
        assert!(s.models_scanned > 10);
    }

    #[test]
    fn first_stops_early() {
        let s = search_counterexample(LEM, bounds(3, 1, true), EvalOptions::default()).unwrap();
        assert_eq!(s.refuted.len(), 1);
        assert_eq!(s.models_scanned, 3);
    }

    #[test]
    fn caps() {
        let e = search_counterexample(LEM, bounds(50, 1, false), EvalOptions::default()).unwrap_err();
        assert!(e.is_resource());
    }
}
