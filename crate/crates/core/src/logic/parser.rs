//! Lexer and recursive-descent parser for formulas and sorts.
//!
//! Precedence, loosest first: quantifiers (extend right maximally), `->`
//! (right associative), `\/`, `/\`, `~`. Sorts: `->` (right associative),
//! `+`, `*`. The Unicode connectives `∀ ∃ ¬ ∧ ∨ → ∈ ×` are accepted as
//! aliases.

use thiserror::Error;

use super::macros::MACRO_NAMES;
use super::{Formula, FormulaKind, Sort, Span, Term, TermKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: u32, col: u32, message: String },
    #[error("unknown macro `{name}` at {line}:{col}")]
    UnknownMacro { name: String, line: u32, col: u32 },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    One,
    Zero,
    LParen,
    RParen,
    Comma,
    Dot,
    Colon,
    Equals,
    Tilde,
    And,
    Or,
    Arrow,
    Star,
    Plus,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::One => "`1`".into(),
            Tok::Zero => "`0`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Equals => "`=`".into(),
            Tok::Tilde => "`~`".into(),
            Tok::And => "`/\\`".into(),
            Tok::Or => "`\\/`".into(),
            Tok::Arrow => "`->`".into(),
            Tok::Star => "`*`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

const KEYWORDS: &[&str] = &[
    "forall", "exists", "true", "false", "in", "pair", "fst", "snd", "inl", "inr", "unit",
];

fn lex(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut line = 1u32;
    let mut col = 1u32;
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (start, c) = chars[i];
        let (sl, sc) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut u32| {
            *i += n;
            *col += n as u32;
        };
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let next = chars.get(i + 1).map(|&(_, c)| c);
        let (tok, len) = match c {
            '(' => (Tok::LParen, 1),
            ')' => (Tok::RParen, 1),
            ',' => (Tok::Comma, 1),
            '.' => (Tok::Dot, 1),
            ':' => (Tok::Colon, 1),
            '=' => (Tok::Equals, 1),
            '~' | '¬' => (Tok::Tilde, 1),
            '*' | '×' => (Tok::Star, 1),
            '+' => (Tok::Plus, 1),
            '∧' => (Tok::And, 1),
            '∨' => (Tok::Or, 1),
            '→' => (Tok::Arrow, 1),
            '∀' => (Tok::Ident("forall".into()), 1),
            '∃' => (Tok::Ident("exists".into()), 1),
            '∈' => (Tok::Ident("in".into()), 1),
            'Ω' => (Tok::Ident("Omega".into()), 1),
            '/' if next == Some('\\') => (Tok::And, 2),
            '\\' if next == Some('/') => (Tok::Or, 2),
            '-' if next == Some('>') => (Tok::Arrow, 2),
            '0' if !next.is_some_and(|n| n.is_ascii_digit()) => (Tok::Zero, 1),
            '1' if !next.is_some_and(|n| n.is_ascii_digit()) => (Tok::One, 1),
            c if c.is_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len()
                    && (chars[j].1.is_alphanumeric() || chars[j].1 == '_' || chars[j].1 == '\'')
                {
                    j += 1;
                }
                let s: String = chars[i..j].iter().map(|&(_, c)| c).collect();
                (Tok::Ident(s), j - i)
            }
            other => {
                return Err(ParseError::Syntax {
                    line,
                    col,
                    message: format!("unexpected character `{other}`"),
                })
            }
        };
        advance(len, &mut i, &mut col);
        let end = chars.get(i).map(|&(b, _)| b).unwrap_or(text.len());
        out.push(Token {
            tok,
            span: Span {
                start,
                end,
                line: sl,
                col: sc,
            },
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        span: Span {
            start: text.len(),
            end: text.len(),
            line,
            col,
        },
    });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

fn join(a: Span, b: Span) -> Span {
    Span {
        start: a.start,
        end: b.end,
        line: a.line,
        col: a.col,
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        let s = self.span();
        Err(ParseError::Syntax {
            line: s.line,
            col: s.col,
            message: message.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<Span, ParseError> {
        if *self.peek() == tok {
            Ok(self.bump().span)
        } else {
            self.error(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            ))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let span = self.bump().span;
                Ok((s, span))
            }
            other => self.error(format!("expected identifier, found {}", other.describe())),
        }
    }

    fn formula(&mut self) -> Result<Formula, ParseError> {
        if self.is_kw("forall") || self.is_kw("exists") {
            return self.quantifier();
        }
        self.implication()
    }

    fn quantifier(&mut self) -> Result<Formula, ParseError> {
        let start = self.span();
        let universal = self.is_kw("forall");
        self.bump();
        let (var, _) = self.ident()?;
        self.expect(Tok::Colon)?;
        let sort = self.sort()?;
        self.expect(Tok::Dot)?;
        let body = self.formula()?;
        let span = join(start, body.span);
        let kind = if universal {
            FormulaKind::Forall(var, sort, Box::new(body))
        } else {
            FormulaKind::Exists(var, sort, Box::new(body))
        };
        Ok(Formula { kind, span })
    }

    fn implication(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula_right()?;
            let span = join(lhs.span, rhs.span);
            return Ok(Formula {
                kind: FormulaKind::Implies(Box::new(lhs), Box::new(rhs)),
                span,
            });
        }
        Ok(lhs)
    }

    /// Right operand of `->`: another implication, or a quantifier.
    fn formula_right(&mut self) -> Result<Formula, ParseError> {
        if self.is_kw("forall") || self.is_kw("exists") {
            return self.quantifier();
        }
        self.implication()
    }

    fn disjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let rhs = self.conjunction()?;
            let span = join(lhs.span, rhs.span);
            lhs = Formula {
                kind: FormulaKind::Or(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.negation()?;
        while *self.peek() == Tok::And {
            self.bump();
            let rhs = self.negation()?;
            let span = join(lhs.span, rhs.span);
            lhs = Formula {
                kind: FormulaKind::And(Box::new(lhs), Box::new(rhs)),
                span,
            };
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> Result<Formula, ParseError> {
        if *self.peek() == Tok::Tilde {
            let start = self.bump().span;
            let inner = self.negation()?;
            let span = join(start, inner.span);
            return Ok(Formula {
                kind: FormulaKind::Not(Box::new(inner)),
                span,
            });
        }
        if self.is_kw("forall") || self.is_kw("exists") {
            return self.quantifier();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Ident(s) if s == "true" => {
                self.bump();
                Ok(Formula {
                    kind: FormulaKind::True,
                    span: start,
                })
            }
            Tok::Ident(s) if s == "false" => {
                self.bump();
                Ok(Formula {
                    kind: FormulaKind::False,
                    span: start,
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                let end = self.expect(Tok::RParen)?;
                Ok(Formula {
                    kind: inner.kind,
                    span: join(start, end),
                })
            }
            Tok::Ident(name)
                if MACRO_NAMES.contains(&name.as_str()) && *self.peek_at(1) == Tok::LParen =>
            {
                self.bump();
                self.bump();
                let mut args = Vec::new();
                if *self.peek() != Tok::RParen {
                    args.push(self.term()?);
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.term()?);
                    }
                }
                let end = self.expect(Tok::RParen)?;
                Ok(Formula {
                    kind: FormulaKind::Macro(name, args),
                    span: join(start, end),
                })
            }
            _ => {
                let lhs = self.term()?;
                if *self.peek() == Tok::Equals {
                    self.bump();
                    let rhs = self.term()?;
                    let span = join(lhs.span, rhs.span);
                    return Ok(Formula {
                        kind: FormulaKind::Eq(lhs, rhs),
                        span,
                    });
                }
                if self.is_kw("in") {
                    self.bump();
                    let rhs = self.term()?;
                    let span = join(lhs.span, rhs.span);
                    return Ok(Formula {
                        kind: FormulaKind::Mem(lhs, rhs),
                        span,
                    });
                }
                if let TermKind::App(head, _) = &lhs.kind {
                    if let TermKind::Var(name) = &head.kind {
                        if name.starts_with(|c: char| c.is_uppercase()) {
                            return Err(ParseError::UnknownMacro {
                                name: name.clone(),
                                line: head.span.line,
                                col: head.span.col,
                            });
                        }
                    }
                }
                let span = lhs.span;
                Ok(Formula {
                    kind: FormulaKind::Holds(lhs),
                    span,
                })
            }
        }
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        let mut t = self.term_atom()?;
        while *self.peek() == Tok::LParen {
            self.bump();
            let arg = self.term()?;
            let end = self.expect(Tok::RParen)?;
            let span = join(t.span, end);
            t = Term {
                kind: TermKind::App(Box::new(t), Box::new(arg)),
                span,
            };
        }
        Ok(t)
    }

    fn term_atom(&mut self) -> Result<Term, ParseError> {
        let start = self.span();
        let name = match self.peek().clone() {
            Tok::Ident(s) => s,
            other => {
                return self.error(format!("expected a term, found {}", other.describe()));
            }
        };
        let unary = |p: &mut Parser, wrap: fn(Box<Term>) -> TermKind| -> Result<Term, ParseError> {
            p.bump();
            p.expect(Tok::LParen)?;
            let inner = p.term()?;
            let end = p.expect(Tok::RParen)?;
            Ok(Term {
                kind: wrap(Box::new(inner)),
                span: join(start, end),
            })
        };
        match name.as_str() {
            "unit" => {
                self.bump();
                Ok(Term {
                    kind: TermKind::Unit,
                    span: start,
                })
            }
            "pair" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let a = self.term()?;
                self.expect(Tok::Comma)?;
                let b = self.term()?;
                let end = self.expect(Tok::RParen)?;
                Ok(Term {
                    kind: TermKind::Pair(Box::new(a), Box::new(b)),
                    span: join(start, end),
                })
            }
            "fst" => unary(self, TermKind::Fst),
            "snd" => unary(self, TermKind::Snd),
            "inl" => unary(self, TermKind::Inl),
            "inr" => unary(self, TermKind::Inr),
            _ => {
                let (v, span) = self.ident()?;
                Ok(Term {
                    kind: TermKind::Var(v),
                    span,
                })
            }
        }
    }

    fn sort(&mut self) -> Result<Sort, ParseError> {
        let lhs = self.sort_sum()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.sort()?;
            return Ok(Sort::fun(lhs, rhs));
        }
        Ok(lhs)
    }

    fn sort_sum(&mut self) -> Result<Sort, ParseError> {
        let mut lhs = self.sort_prod()?;
        while *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.sort_prod()?;
            lhs = Sort::sum(lhs, rhs);
        }
        Ok(lhs)
    }

    fn sort_prod(&mut self) -> Result<Sort, ParseError> {
        let mut lhs = self.sort_atom()?;
        while *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.sort_atom()?;
            lhs = Sort::prod(lhs, rhs);
        }
        Ok(lhs)
    }

    fn sort_atom(&mut self) -> Result<Sort, ParseError> {
        match self.peek().clone() {
            Tok::One => {
                self.bump();
                Ok(Sort::Unit)
            }
            Tok::Zero => {
                self.bump();
                Ok(Sort::Empty)
            }
            Tok::LParen => {
                self.bump();
                let s = self.sort()?;
                self.expect(Tok::RParen)?;
                Ok(s)
            }
            Tok::Ident(s) if s == "Omega" => {
                self.bump();
                Ok(Sort::Omega)
            }
            Tok::Ident(s) if s == "P" && *self.peek_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let inner = self.sort()?;
                self.expect(Tok::RParen)?;
                Ok(Sort::pow(inner))
            }
            Tok::Ident(_) => {
                let (name, _) = self.ident()?;
                Ok(Sort::Base(name))
            }
            other => self.error(format!("expected a sort, found {}", other.describe())),
        }
    }
}

/// Parses a closed or open formula; the whole input must be consumed.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after formula", p.peek().describe()));
    }
    let _ = p.prev_span();
    Ok(f)
}

pub fn parse_sort(text: &str) -> Result<Sort, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let s = p.sort()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {} after sort", p.peek().describe()));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lem_schema_parses() {
        let f = parse_formula("forall u:Omega. u \\/ ~u").unwrap();
        let FormulaKind::Forall(v, s, body) = f.kind else {
            panic!("expected forall")
        };
        assert_eq!(v, "u");
        assert_eq!(s, Sort::Omega);
        assert!(matches!(body.kind, FormulaKind::Or(..)));
    }

    #[test]
    fn range_complement_sentence_parses() {
        let f = parse_formula("exists y:B. ~(exists x:B. x in A /\\ pair(x,y) in F)").unwrap();
        let FormulaKind::Exists(_, _, body) = f.kind else {
            panic!()
        };
        let FormulaKind::Not(inner) = body.kind else {
            panic!()
        };
        let FormulaKind::Exists(_, _, conj) = inner.kind else {
            panic!()
        };
        let FormulaKind::And(l, r) = conj.kind else {
            panic!()
        };
        assert!(matches!(l.kind, FormulaKind::Mem(..)));
        assert!(matches!(r.kind, FormulaKind::Mem(ref t, _) if matches!(t.kind, TermKind::Pair(..))));
    }

    #[test]
    fn truncated_quantifier_is_a_syntax_error() {
        let err = parse_formula("forall x:").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 1, col: 10, .. }), "{err:?}");
    }

    #[test]
    fn unknown_macro() {
        assert!(matches!(
            parse_formula("Finite(A)"),
            Err(ParseError::UnknownMacro { ref name, .. }) if name == "Finite"
        ));
        // Lowercase applications stand for Omega-valued terms.
        assert!(matches!(
            parse_formula("chi(x)").unwrap().kind,
            FormulaKind::Holds(_)
        ));
    }

    #[test]
    fn precedence_and_associativity() {
        let f = parse_formula("~a /\\ b \\/ c -> d -> e").unwrap();
        let FormulaKind::Implies(lhs, rhs) = f.kind else {
            panic!()
        };
        assert!(matches!(rhs.kind, FormulaKind::Implies(..)));
        let FormulaKind::Or(l, _) = lhs.kind else {
            panic!()
        };
        let FormulaKind::And(n, _) = l.kind else {
            panic!()
        };
        assert!(matches!(n.kind, FormulaKind::Not(..)));
    }

    #[test]
    fn quantifier_extends_right() {
        let f = parse_formula("a -> forall x:X. b /\\ c").unwrap();
        let FormulaKind::Implies(_, rhs) = f.kind else {
            panic!()
        };
        let FormulaKind::Forall(_, _, body) = rhs.kind else {
            panic!()
        };
        assert!(matches!(body.kind, FormulaKind::And(..)));
    }

    #[test]
    fn sorts() {
        assert_eq!(
            parse_sort("X + 1").unwrap(),
            Sort::sum(Sort::base("X"), Sort::Unit)
        );
        assert_eq!(
            parse_sort("P(A * A) -> Omega").unwrap(),
            Sort::fun(Sort::pow(Sort::prod(Sort::base("A"), Sort::base("A"))), Sort::Omega)
        );
        assert_eq!(
            parse_sort("A * B + 0").unwrap(),
            Sort::sum(Sort::prod(Sort::base("A"), Sort::base("B")), Sort::Empty)
        );
        assert_eq!(
            parse_sort("A -> B -> C").unwrap(),
            Sort::fun(Sort::base("A"), Sort::fun(Sort::base("B"), Sort::base("C")))
        );
    }

    #[test]
    fn spans_point_at_source() {
        let f = parse_formula("true /\\\n  x = y").unwrap();
        let FormulaKind::And(_, r) = f.kind else {
            panic!()
        };
        assert_eq!((r.span.line, r.span.col), (2, 3));
    }

    #[test]
    fn unicode_aliases() {
        let a = parse_formula("∀u:Ω. u ∨ ¬u").unwrap();
        let b = parse_formula("forall u:Omega. u \\/ ~u").unwrap();
        assert_eq!(a, b);
    }
}
