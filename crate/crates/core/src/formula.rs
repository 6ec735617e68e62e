//! Formula trees over predicate atoms, with a text syntax.
//!
//! Syntax: atoms are predicate ids, `!` negates, `&` and `|` are binary,
//! `G` and `F` are prefix temporal operators, `T`/`true` and `false` are the
//! constants. Precedence from tightest: unary (`!`, `G`, `F`), `&`, `|`.
//! Binary chains associate to the left.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::predicates::PredicateRegistry;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Atom(String),
    G(Box<Formula>),
    F(Box<Formula>),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

pub fn atom(id: &str) -> Formula {
    Formula::Atom(id.to_string())
}

impl Formula {
    pub fn g(self) -> Formula {
        Formula::G(Box::new(self))
    }

    pub fn f(self) -> Formula {
        Formula::F(Box::new(self))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Formula {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, o: Formula) -> Formula {
        Formula::And(Box::new(self), Box::new(o))
    }

    pub fn or(self, o: Formula) -> Formula {
        Formula::Or(Box::new(self), Box::new(o))
    }

    /// Left fold of `items` with `&`; `T` when empty.
    pub fn conjunction(items: impl IntoIterator<Item = Formula>) -> Formula {
        items.into_iter().reduce(Formula::and).unwrap_or(Formula::True)
    }

    /// Left fold of `items` with `|`; `false` when empty.
    pub fn disjunction(items: impl IntoIterator<Item = Formula>) -> Formula {
        items.into_iter().reduce(Formula::or).unwrap_or(Formula::False)
    }

    pub fn is_temporal(&self) -> bool {
        matches!(self, Formula::G(_) | Formula::F(_))
    }

    /// Distinct atom ids, sorted.
    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Atom(a) => {
                out.insert(a.clone());
            }
            Formula::G(x) | Formula::F(x) | Formula::Not(x) => x.collect_atoms(out),
            Formula::And(a, b) | Formula::Or(a, b) => {
                a.collect_atoms(out);
                b.collect_atoms(out);
            }
        }
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::G(x) | Formula::F(x) | Formula::Not(x) => 1 + x.size(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.size() + b.size(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Formula::True | Formula::False | Formula::Atom(_) => 1,
            Formula::G(x) | Formula::F(x) | Formula::Not(x) => 1 + x.depth(),
            Formula::And(a, b) | Formula::Or(a, b) => 1 + a.depth().max(b.depth()),
        }
    }
}

fn write_chain(f: &mut fmt::Formatter<'_>, node: &Formula, op: &str) -> fmt::Result {
    // left-nested chains of the same operator print flat
    match (node, op) {
        (Formula::And(a, b), "&") | (Formula::Or(a, b), "|") => {
            write_chain(f, a, op)?;
            write!(f, " {op} {b}")
        }
        _ => write!(f, "{node}"),
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::True => f.write_str("T"),
            Formula::False => f.write_str("false"),
            Formula::Atom(a) => f.write_str(a),
            Formula::G(x) => write!(f, "G {x}"),
            Formula::F(x) => write!(f, "F {x}"),
            Formula::Not(x) => write!(f, "!{x}"),
            Formula::And(a, b) => {
                f.write_str("(")?;
                write_chain(f, a, "&")?;
                write!(f, " & {b})")
            }
            Formula::Or(a, b) => {
                f.write_str("(")?;
                write_chain(f, a, "|")?;
                write!(f, " | {b})")
            }
        }
    }
}

pub fn format_formula(f: &Formula) -> String {
    f.to_string()
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'!' => {
                out.push((i, Tok::Not));
                i += 1;
            }
            b'&' => {
                out.push((i, Tok::And));
                i += 1;
            }
            b'|' => {
                out.push((i, Tok::Or));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            c if c.is_ascii_alphanumeric() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(Error::Syntax {
                    position: i,
                    message: format!("unexpected character `{}`", text[i..].chars().next().unwrap_or('?')),
                })
            }
        }
    }
    Ok(out)
}

struct Parser<'a, K: Fn(&str) -> bool> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
    known: &'a K,
}

impl<K: Fn(&str) -> bool> Parser<'_, K> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax {
            position: self.here(),
            message: message.into(),
        })
    }

    fn or_expr(&mut self) -> Result<Formula> {
        let mut lhs = self.and_expr()?;
        while self.peek() == Some(&Tok::Or) {
            self.pos += 1;
            lhs = lhs.or(self.and_expr()?);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> Result<Formula> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::And) {
            self.pos += 1;
            lhs = lhs.and(self.unary()?);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula> {
        match self.peek().cloned() {
            Some(Tok::Not) => {
                self.pos += 1;
                Ok(self.unary()?.not())
            }
            Some(Tok::Ident(id)) if id == "G" || id == "F" => {
                self.pos += 1;
                let x = self.unary()?;
                Ok(if id == "G" { x.g() } else { x.f() })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Formula> {
        match self.peek().cloned() {
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.or_expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::Ident(id)) => {
                self.pos += 1;
                match id.as_str() {
                    "T" | "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ if (self.known)(&id) => Ok(Formula::Atom(id)),
                    _ => Err(Error::UnknownPredicate(id)),
                }
            }
            Some(_) => self.err("expected an atom, `!`, `G`, `F` or `(`"),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parses `text`, accepting any atom for which `known` returns true.
pub fn parse_formula_with(text: &str, known: &impl Fn(&str) -> bool) -> Result<Formula> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
        known,
    };
    let f = p.or_expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(f)
}

pub fn parse_formula(text: &str, registry: &PredicateRegistry) -> Result<Formula> {
    parse_formula_with(text, &|id: &str| registry.contains(id))
}

#[cfg(test)]
pub(crate) mod strategies {
    use super::*;
    use proptest::prelude::*;

    pub fn formula(atoms: &'static [&'static str], depth: u32) -> impl Strategy<Value = Formula> {
        let leaf = prop::sample::select(atoms).prop_map(atom);
        leaf.prop_recursive(depth, 64, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(Formula::g),
                inner.clone().prop_map(Formula::f),
                inner.clone().prop_map(Formula::not),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| a.and(b)),
                (inner.clone(), inner).prop_map(|(a, b)| a.or(b)),
            ]
        })
    }
}
