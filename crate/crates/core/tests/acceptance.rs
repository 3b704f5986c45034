//! Acceptance criteria AC-1 .. AC-12, one PASS/FAIL line each.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use common::Classical;
use toposlab::forcing::{EvalOptions, Evaluator};
use toposlab::logic::Sort;
use toposlab::model::{chain1, chain2, Model};
use toposlab::poset::{DownSet, FinPoset, StageMask};
use toposlab::verify::{
    self, enumerate::posets_up_to_iso, enumerate::presheaves_up_to_iso, ScenarioOutcome, Status,
    SuiteOptions, Verdict,
};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn opts() -> EvalOptions {
    EvalOptions {
        power_cap: verify::SUITE_POWER_CAP,
        ..EvalOptions::from_env()
    }
}

fn suite() -> &'static Vec<ScenarioOutcome> {
    static SUITE: OnceLock<Vec<ScenarioOutcome>> = OnceLock::new();
    SUITE.get_or_init(|| {
        verify::run_suite("benabou-loiseau", &SuiteOptions::default()).expect("suite runs")
    })
}

fn scenario(name: &str) -> &'static ScenarioOutcome {
    suite().iter().find(|o| o.scenario == name).expect("scenario present")
}

fn all_small_posets(max: usize) -> Vec<Arc<FinPoset>> {
    (1..=max)
        .flat_map(|n| posets_up_to_iso(n).unwrap())
        .map(Arc::new)
        .collect()
}

/// Down-sets by brute force over all stage subsets.
fn brute_downsets(p: &FinPoset) -> Vec<StageMask> {
    let n = p.len();
    (0..1u32 << n)
        .filter(|&m| {
            (0..n).all(|x| m & (1 << x) == 0 || (0..n).all(|y| !p.leq(y, x) || m & (1 << y) != 0))
        })
        .collect()
}

fn is_down_closed(p: &FinPoset, m: StageMask) -> bool {
    brute_downsets(p).contains(&m)
}

/// Largest down-set disjoint from `u`: stages with nothing of `u` below.
fn brute_neg(p: &FinPoset, u: StageMask) -> StageMask {
    (0..p.len())
        .filter(|&x| (0..p.len()).all(|y| !p.leq(y, x) || u & (1 << y) == 0))
        .fold(0, |m, x| m | (1 << x))
}

fn mask_of(p: &FinPoset, names: &[String]) -> StageMask {
    names.iter().fold(0, |m, n| m | (1 << p.index_of(n).unwrap()))
}

fn ac1() -> Check {
    let start = Instant::now();
    let mut triples = 0usize;
    for p in all_small_posets(4) {
        let ds = p.all_downsets().map_err(|e| e.to_string())?;
        ensure(ds.len() == brute_downsets(&p).len(), "down-set count")?;
        let leq = |a: &DownSet, b: &DownSet| a.mask() & !b.mask() == 0;
        for u in &ds {
            for v in &ds {
                let imp = u.implies(v).unwrap();
                ensure(is_down_closed(&p, imp.mask()), "u -> v not down-closed")?;
                ensure(is_down_closed(&p, u.meet(v).unwrap().mask()), "meet")?;
                ensure(is_down_closed(&p, u.join(v).unwrap().mask()), "join")?;
                for w in &ds {
                    triples += 1;
                    ensure(
                        leq(&w.meet(u).unwrap(), v) == leq(w, &imp),
                        "adjunction w ∧ u <= v iff w <= u -> v",
                    )?;
                    let lhs = u.meet(&v.join(w).unwrap()).unwrap();
                    let rhs = u.meet(v).unwrap().join(&u.meet(w).unwrap()).unwrap();
                    ensure(lhs == rhs, "distributivity")?;
                }
            }
        }
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(5), format!("took {t:?}"))?;
    Ok(format!("{triples} triples over all posets <= 4 elements in {t:.2?}"))
}

fn ac2() -> Check {
    let mut count = 0;
    for o in suite() {
        for r in &o.reports {
            let names: Vec<String> = r
                .poset
                .split([',', '<', '=', ' '])
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            // Rebuild the poset from its description to check closure.
            let mut elems: Vec<String> = Vec::new();
            for n in &names {
                if !elems.contains(n) {
                    elems.push(n.clone());
                }
            }
            let pairs: Vec<(String, String)> = r
                .poset
                .split(", ")
                .filter_map(|c| c.split_once(" <= "))
                .map(|(a, b)| (a.to_string(), b.to_string()))
                .collect();
            let p = FinPoset::new(&elems, &pairs).map_err(|e| e.to_string())?;
            let m = mask_of(&p, &r.truth_value);
            ensure(
                is_down_closed(&p, m),
                format!("{} on {}: {:?} not down-closed", r.scenario, r.model, r.truth_value),
            )?;
            count += 1;
        }
    }
    Ok(format!("{count} suite truth values down-closed, no runtime assertion fired"))
}

fn ac3() -> Check {
    let mut n = 0;
    for p in all_small_posets(4) {
        let m = Model::new("p", p.clone());
        let tv = Evaluator::new(&m, opts()).evaluate(verify::LEM).map_err(|e| e.to_string())?;
        let antichain = (0..p.len()).all(|x| (0..p.len()).all(|y| x == y || !p.leq(x, y)));
        ensure(tv.is_top() == antichain, format!("LEM on {p:?}"))?;
        ensure(tv.is_top() == p.is_boolean(), "is_boolean disagrees")?;
        n += 1;
    }
    Ok(format!("{n} posets, TOP exactly on antichains"))
}

fn all_valid(o: &ScenarioOutcome) -> Result<usize, String> {
    ensure(o.status == Status::Pass, format!("{}: {}", o.scenario, o.detail))?;
    for r in &o.reports {
        ensure(
            r.verdict == Verdict::InternallyValid,
            format!("{} fails on {}", o.scenario, r.model),
        )?;
    }
    Ok(o.reports.len())
}

fn suite_model_count() -> usize {
    verify::suite_models(4).unwrap().len()
}

fn ac4() -> Check {
    let start = Instant::now();
    let models = verify::suite_models(4).unwrap();
    for m in &models {
        let r = verify::check_theorem2(m, "B", opts()).map_err(|e| e.to_string())?;
        ensure(r.verdict == Verdict::InternallyValid, format!("fails on {}", m.describe()))?;
    }
    for name in ["chain1", "chain2", "wedge3", "bowtie4"] {
        ensure(models.iter().any(|m| m.name.starts_with(name)), format!("{name} missing"))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(600), format!("took {t:?}"))?;
    let n = all_valid(scenario("theorem2"))?;
    ensure(n == models.len(), "suite scenario covers every model")?;
    Ok(format!("{} models InternallyValid in {t:.2?}", models.len()))
}

fn ac5() -> Check {
    let a = all_valid(scenario("theorem3"))?;
    let b = all_valid(scenario("theorem3-subset"))?;
    ensure(a == 2 * suite_model_count(), "weak and dual on every suite model")?;
    Ok(format!("{a} weak/dual checks, {b} subset-variant checks InternallyValid"))
}

fn lem_identity(
    build: impl Fn(&Arc<FinPoset>, &DownSet) -> Result<(DownSet, Verdict), String>,
) -> Result<usize, String> {
    let mut n = 0;
    for (_, p) in verify::suite_posets() {
        for u in p.all_downsets().unwrap() {
            let (tv, verdict) = build(&p, &u)?;
            let expect = u.mask() | brute_neg(&p, u.mask());
            ensure(
                tv.mask() == expect,
                format!("u = {} on {p:?}: got {:?}", p.render_mask(u.mask()), tv.stage_names()),
            )?;
            ensure(
                (verdict == Verdict::RefutationExhibited) == !tv.is_top(),
                "verdict inconsistent",
            )?;
            n += 1;
        }
    }
    Ok(n)
}

fn ac6() -> Check {
    let n = lem_identity(|p, u| {
        verify::build_theorem4_instance(p, u, opts())
            .map(|i| (i.truth, i.report.verdict))
            .map_err(|e| e.to_string())
    })?;
    let p = chain2().poset().clone();
    let i = verify::build_theorem4_instance(&p, &p.downset(0b01).unwrap(), opts())
        .map_err(|e| e.to_string())?;
    ensure(i.truth.stage_names() == ["bot"], "chain2, u = {bot}")?;
    ensure(i.report.witnesses.len() == 1, "witness at bot")?;
    Ok(format!("{n} instances equal u ∨ ¬u; chain2 u={{bot}} -> {{bot}}, {}", i.report.witnesses[0]))
}

fn ac7() -> Check {
    let n = lem_identity(|p, u| {
        verify::build_theorem5_instance(p, u, opts())
            .map(|(_, i)| (i.truth, i.report.verdict))
            .map_err(|e| e.to_string())
    })?;
    let p = chain2().poset().clone();
    let (_, i) = verify::build_theorem5_instance(&p, &p.downset(0b01).unwrap(), opts())
        .map_err(|e| e.to_string())?;
    ensure(i.report.verdict == Verdict::RefutationExhibited, "chain2 refutation")?;
    Ok(format!("{n} instances equal u ∨ ¬u; refuted on chain2 with u={{bot}}"))
}

fn ac8() -> Check {
    let mut strict = 0;
    let models = verify::suite_models(4).unwrap();
    for m in &models {
        let tiny = m.poset().len() <= 2;
        let a = verify::kfinite_agreement(m, "B", tiny, opts()).map_err(|e| e.to_string())?;
        ensure(a.adjoin_matches_union, format!("adjoin != union on {}", a.model))?;
        if tiny {
            ensure(a.strict_matches == Some(true), format!("strict KFin differs on {}", a.model))?;
            strict += 1;
        }
    }
    Ok(format!("{} models agree; {strict} also against the raw definition", models.len()))
}

fn ac9() -> Check {
    let n = all_valid(scenario("finite-set-lemmas"))?;
    ensure(n == 3 * suite_model_count(), "three lemmas per model")?;
    Ok(format!("{n} lemma instances InternallyValid"))
}

fn ac10() -> Check {
    let start = Instant::now();
    let mut models = Vec::new();
    let one = chain1();
    for u in presheaves_up_to_iso(one.poset(), 2).unwrap() {
        models.push(Model::new("chain1", one.poset().clone()).with_sort("U", u));
    }
    let two = chain2();
    models.push(Model::new("chain2", two.poset().clone()).with_sort("U", two.sort("B").unwrap().clone()));
    let mut visits = 0;
    for m in &models {
        let r = verify::check_theorem1(m, "U", opts()).map_err(|e| format!("{}: {e}", m.describe()))?;
        ensure(r.verdict == Verdict::InternallyValid, format!("fails on {}", m.describe()))?;
        visits += r.stats.visits;
    }
    Ok(format!("{} models InternallyValid, {visits} visits, {:.2?}", models.len(), start.elapsed()))
}

fn ac11() -> Check {
    let start = Instant::now();
    let s = verify::check_section6(opts()).map_err(|e| e.to_string())?;
    let t = start.elapsed();
    ensure(s.global_sections == 0, "A has a global section")?;
    ensure(s.inhabited_top, "Inhab(A) not TOP")?;
    ensure(s.kfinite_top && s.kfinite_stages.iter().all(|&b| b), "A not K-finite everywhere")?;
    ensure(s.bijection_top, "no internal bijection with 1+1")?;
    ensure(s.sections_outside_image == 0, "section of A+1 outside range")?;
    ensure(t < Duration::from_secs(1), format!("took {t:?}"))?;
    Ok(format!("all five checks hold in {t:.2?}"))
}

fn classical_agrees(m: &Model, text: &str) -> Result<(), String> {
    let mut ev = Evaluator::new(m, opts());
    let f = ev.typecheck(text, &[]).map_err(|e| e.to_string())?;
    let forced = ev.truth_value(&f).map_err(|e| e.to_string())?.is_top();
    let classical = Classical::new(m, 0).holds(&f, &mut Vec::new());
    ensure(forced == classical, format!("{} on {}: forcing {forced}, classical {classical}", text, m.describe()))
}

fn ac12() -> Check {
    let one = chain1();
    let p = one.poset().clone();
    let mut n = 0;
    let sentences = [
        verify::LEM,
        verify::THEOREM2,
        verify::EMPTY_OR_INHABITED,
        verify::COMPLEMENTED_IS_FINITE,
        verify::PROPER_OR_EQUAL,
    ];
    for b in presheaves_up_to_iso(&p, 2).unwrap() {
        let m = Model::new("chain1", p.clone()).with_sort("B", b.clone());
        for s in sentences {
            classical_agrees(&m, s)?;
            n += 1;
        }
        let x = Model::new("chain1", p.clone()).with_sort("X", b.clone());
        for s in [verify::WEAK_PIGEONHOLE, verify::WEAK_DUAL_PIGEONHOLE, verify::STRONG_PIGEONHOLE] {
            classical_agrees(&x, s)?;
            n += 1;
        }
        let u = Model::new("chain1", p.clone()).with_sort("U", b.clone());
        classical_agrees(&u, verify::INDUCTION)?;
        n += 1;
        let a = Model::new("chain1", p.clone()).with_sort("A", b);
        classical_agrees(&a, verify::INTERNAL_BIJECTION)?;
        n += 1;
    }
    // The counter-instances with their maps.
    for u in p.all_downsets().unwrap() {
        let i = verify::build_theorem4_instance(&p, &u, opts()).map_err(|e| e.to_string())?;
        let m = Model::new("c4", p.clone())
            .with_sort("X", i.object.clone())
            .with_constant(toposlab::model::Constant {
                name: "f".into(),
                dom: Sort::sum(Sort::base("X"), Sort::Unit),
                cod: Sort::base("X"),
                map: i.map.clone(),
            });
        classical_agrees(&m, verify::COLLISION_INSTANCE)?;
        let (_, i) = verify::build_theorem5_instance(&p, &u, opts()).map_err(|e| e.to_string())?;
        let m = Model::new("c5", p.clone())
            .with_sort("U", i.object.clone())
            .with_constant(toposlab::model::Constant {
                name: "f".into(),
                dom: Sort::base("U"),
                cod: Sort::sum(Sort::base("U"), Sort::Unit),
                map: i.map.clone(),
            });
        classical_agrees(&m, verify::MISSED_POINT_INSTANCE)?;
        n += 2;
    }
    Ok(format!("{n} sentence/model pairs agree with the classical evaluator"))
}

fn main() {
    let criteria: [(&str, fn() -> Check); 12] = [
        ("AC-1", ac1),
        ("AC-2", ac2),
        ("AC-3", ac3),
        ("AC-4", ac4),
        ("AC-5", ac5),
        ("AC-6", ac6),
        ("AC-7", ac7),
        ("AC-8", ac8),
        ("AC-9", ac9),
        ("AC-10", ac10),
        ("AC-11", ac11),
        ("AC-12", ac12),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let result = catch_unwind(AssertUnwindSafe(check))
            .unwrap_or_else(|e| Err(format!("panicked: {:?}", e.downcast_ref::<String>())));
        match result {
            Ok(msg) => println!("{name} PASS {msg}"),
            Err(msg) => {
                failed += 1;
                println!("{name} FAIL {msg}");
            }
        }
    }
    println!("{} of 12 acceptance criteria passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
