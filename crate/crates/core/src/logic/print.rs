//! Precedence-aware printing in the ASCII surface syntax; the output
//! parses back to the same tree.

use std::fmt;

use super::{Formula, FormulaKind, Sort, Term, TermKind};

fn sort_prec(s: &Sort) -> u8 {
    match s {
        Sort::Fun(..) => 0,
        Sort::Sum(..) => 1,
        Sort::Prod(..) => 2,
        _ => 3,
    }
}

fn write_sort(f: &mut fmt::Formatter<'_>, s: &Sort, ctx: u8) -> fmt::Result {
    let wrap = sort_prec(s) < ctx;
    if wrap {
        f.write_str("(")?;
    }
    match s {
        Sort::Unit => f.write_str("1")?,
        Sort::Empty => f.write_str("0")?,
        Sort::Omega => f.write_str("Omega")?,
        Sort::Base(n) => f.write_str(n)?,
        Sort::Pow(a) => {
            f.write_str("P(")?;
            write_sort(f, a, 0)?;
            f.write_str(")")?;
        }
        Sort::Fun(a, b) => {
            write_sort(f, a, 1)?;
            f.write_str(" -> ")?;
            write_sort(f, b, 0)?;
        }
        Sort::Sum(a, b) => {
            write_sort(f, a, 1)?;
            f.write_str(" + ")?;
            write_sort(f, b, 2)?;
        }
        Sort::Prod(a, b) => {
            write_sort(f, a, 2)?;
            f.write_str(" * ")?;
            write_sort(f, b, 3)?;
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_sort(f, self, 0)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TermKind::Var(v) => f.write_str(v),
            TermKind::Unit => f.write_str("unit"),
            TermKind::Pair(a, b) => write!(f, "pair({a}, {b})"),
            TermKind::Fst(a) => write!(f, "fst({a})"),
            TermKind::Snd(a) => write!(f, "snd({a})"),
            TermKind::Inl(a) => write!(f, "inl({a})"),
            TermKind::Inr(a) => write!(f, "inr({a})"),
            TermKind::App(h, a) => write!(f, "{h}({a})"),
        }
    }
}

const QUANT: u8 = 0;
const IMP: u8 = 1;
const OR: u8 = 2;
const AND: u8 = 3;
const NOT: u8 = 4;
const ATOM: u8 = 5;

fn formula_prec(k: &FormulaKind) -> u8 {
    match k {
        FormulaKind::Forall(..) | FormulaKind::Exists(..) => QUANT,
        FormulaKind::Implies(..) => IMP,
        FormulaKind::Or(..) => OR,
        FormulaKind::And(..) => AND,
        FormulaKind::Not(..) => NOT,
        _ => ATOM,
    }
}

// A quantifier swallows everything to its right, so it is bracketed in any
// position other than the outermost one.
fn write_formula(f: &mut fmt::Formatter<'_>, phi: &Formula, ctx: u8) -> fmt::Result {
    let wrap = formula_prec(&phi.kind) < ctx;
    if wrap {
        f.write_str("(")?;
    }
    match &phi.kind {
        FormulaKind::True => f.write_str("true")?,
        FormulaKind::False => f.write_str("false")?,
        FormulaKind::Eq(a, b) => write!(f, "{a} = {b}")?,
        FormulaKind::Mem(a, b) => write!(f, "{a} in {b}")?,
        FormulaKind::Holds(t) => write!(f, "{t}")?,
        FormulaKind::Macro(name, args) => {
            write!(f, "{name}(")?;
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{a}")?;
            }
            f.write_str(")")?;
        }
        FormulaKind::Not(a) => {
            f.write_str("~")?;
            write_formula(f, a, NOT)?;
        }
        FormulaKind::And(a, b) => {
            write_formula(f, a, AND)?;
            f.write_str(" /\\ ")?;
            write_formula(f, b, NOT)?;
        }
        FormulaKind::Or(a, b) => {
            write_formula(f, a, OR)?;
            f.write_str(" \\/ ")?;
            write_formula(f, b, AND)?;
        }
        FormulaKind::Implies(a, b) => {
            write_formula(f, a, OR)?;
            f.write_str(" -> ")?;
            write_formula(f, b, IMP)?;
        }
        FormulaKind::Forall(v, s, body) => {
            write!(f, "forall {v}:{s}. ")?;
            write_formula(f, body, QUANT)?;
        }
        FormulaKind::Exists(v, s, body) => {
            write!(f, "exists {v}:{s}. ")?;
            write_formula(f, body, QUANT)?;
        }
    }
    if wrap {
        f.write_str(")")?;
    }
    Ok(())
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(f, self, QUANT)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{parse_formula, parse_sort};
    use super::*;
    use proptest::prelude::*;

    fn arb_sort() -> impl Strategy<Value = Sort> {
        let leaf = prop_oneof![
            Just(Sort::Unit),
            Just(Sort::Empty),
            Just(Sort::Omega),
            Just(Sort::base("A")),
            Just(Sort::base("B")),
        ];
        leaf.prop_recursive(3, 12, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Sort::prod(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Sort::sum(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Sort::fun(a, b)),
                inner.prop_map(Sort::pow),
            ]
        })
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        let leaf = prop_oneof![
            Just(Term::var("x")),
            Just(Term::var("y")),
            Just(Term::new(TermKind::Unit)),
        ];
        leaf.prop_recursive(3, 10, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Term::pair(a, b)),
                inner.clone().prop_map(|a| Term::new(TermKind::Fst(Box::new(a)))),
                inner.clone().prop_map(|a| Term::new(TermKind::Inr(Box::new(a)))),
                (inner.clone(), inner).prop_map(|(a, b)| {
                    Term::new(TermKind::App(Box::new(a), Box::new(b)))
                }),
            ]
        })
    }

    fn arb_formula() -> impl Strategy<Value = Formula> {
        let leaf = prop_oneof![
            Just(Formula::new(FormulaKind::True)),
            Just(Formula::new(FormulaKind::False)),
            (arb_term(), arb_term()).prop_map(|(a, b)| Formula::eq(a, b)),
            (arb_term(), arb_term()).prop_map(|(a, b)| Formula::mem(a, b)),
            Just(Formula::new(FormulaKind::Holds(Term::var("u")))),
            arb_term().prop_map(|t| Formula::new(FormulaKind::Macro("Inhab".into(), vec![t]))),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::and(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::or(a, b)),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Formula::implies(a, b)),
                inner.clone().prop_map(Formula::not),
                (arb_sort(), inner.clone()).prop_map(|(s, b)| Formula::forall("x", s, b)),
                (arb_sort(), inner).prop_map(|(s, b)| Formula::exists("z", s, b)),
            ]
        })
    }

    proptest! {
        #[test]
        fn sort_round_trip(s in arb_sort()) {
            prop_assert_eq!(parse_sort(&s.to_string()).unwrap(), s);
        }

        #[test]
        fn formula_round_trip(phi in arb_formula()) {
            let text = phi.to_string();
            let back = parse_formula(&text).map_err(|e| TestCaseError::fail(format!("{text}: {e}")))?;
            prop_assert_eq!(back, phi, "{}", text);
        }
    }

    #[test]
    fn examples() {
        let f = parse_formula("forall u:Omega. u \\/ ~u").unwrap();
        assert_eq!(f.to_string(), "forall u:Omega. u \\/ ~u");
        let g = parse_formula("(a -> b) -> c").unwrap();
        assert_eq!(g.to_string(), "(a -> b) -> c");
        let h = parse_formula("a /\\ (exists x:X. b) /\\ c").unwrap();
        assert_eq!(h.to_string(), "a /\\ (exists x:X. b) /\\ c");
        assert_eq!(parse_sort("(A -> B) -> P(A * (B + 1))").unwrap().to_string(), "(A -> B) -> P(A * (B + 1))");
    }
}
