//! Ground terms, atoms and literals shared by every layer of the engine.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ParseError;

/// A ground term.
///
/// Compound terms are needed because `permitted` and `obl` atoms take an
/// action (or a negated action, for obligations) as their argument.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Int(i64),
    Sym(String),
    App(String, Vec<Term>),
    Neg(Box<Term>),
}

impl Term {
    pub fn sym(name: impl Into<String>) -> Self {
        Term::Sym(name.into())
    }

    pub fn app(name: impl Into<String>, args: Vec<Term>) -> Self {
        if args.is_empty() {
            Term::Sym(name.into())
        } else {
            Term::App(name.into(), args)
        }
    }

    /// Functor name and arguments, treating a bare symbol as a nullary
    /// application.
    pub fn as_app(&self) -> Option<(&str, &[Term])> {
        match self {
            Term::Sym(s) => Some((s.as_str(), &[])),
            Term::App(f, args) => Some((f.as_str(), args.as_slice())),
            _ => None,
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Int(n) => write!(f, "{n}"),
            Term::Sym(s) => f.write_str(s),
            Term::App(name, args) => {
                write!(f, "{name}(")?;
                write_args(f, args)?;
                f.write_str(")")
            }
            Term::Neg(inner) => write!(f, "-{inner}"),
        }
    }
}

fn write_args(f: &mut fmt::Formatter<'_>, args: &[Term]) -> fmt::Result {
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{a}")?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Atom {
    pub predicate: String,
    pub args: Vec<Term>,
}

impl Atom {
    pub fn new(predicate: impl Into<String>, args: Vec<Term>) -> Self {
        Atom {
            predicate: predicate.into(),
            args,
        }
    }

    pub fn nullary(predicate: impl Into<String>) -> Self {
        Self::new(predicate, Vec::new())
    }

    /// The atom viewed as a term, e.g. the action inside `permitted(..)`.
    pub fn to_term(&self) -> Term {
        Term::app(self.predicate.clone(), self.args.clone())
    }

    /// Inverse of [`Atom::to_term`]; `None` for integers and negations.
    pub fn from_term(term: &Term) -> Option<Atom> {
        term.as_app()
            .map(|(name, args)| Atom::new(name, args.to_vec()))
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            write_args(f, &self.args)?;
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// An atom or its classical negation.
///
/// Field order matters: the derived `Ord` sorts by atom first, so a
/// literal and its complement are adjacent in sorted collections.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub atom: Atom,
    pub negative: bool,
}

impl Literal {
    pub fn pos(atom: Atom) -> Self {
        Literal {
            atom,
            negative: false,
        }
    }

    pub fn neg(atom: Atom) -> Self {
        Literal {
            atom,
            negative: true,
        }
    }

    pub fn with_sign(atom: Atom, positive: bool) -> Self {
        Literal {
            atom,
            negative: !positive,
        }
    }

    pub fn complement(&self) -> Self {
        Literal {
            atom: self.atom.clone(),
            negative: !self.negative,
        }
    }

    pub fn is_positive(&self) -> bool {
        !self.negative
    }

    pub fn predicate(&self) -> &str {
        &self.atom.predicate
    }

    /// Parses the `-pred(args)` string form used in scenario files.
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        crate::syntax::parse_ground_literal(text)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        write!(f, "{}", self.atom)
    }
}

impl Serialize for Literal {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Literal {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Literal::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl Serialize for Atom {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Shorthand used throughout the tests: `lit("-has_ore(gold)")`.
#[cfg(test)]
pub(crate) fn lit(text: &str) -> Literal {
    Literal::parse(text).expect("test literal parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complement_is_involutive() {
        let l = lit("ore_loc(gold,l0)");
        assert_eq!(l.complement().complement(), l);
        assert_ne!(l.complement(), l);
    }

    #[test]
    fn display_round_trips() {
        for text in ["-has_ore(gold)", "wait", "obl(-collect(silver))", "p(1,a)"] {
            assert_eq!(lit(text).to_string(), text);
        }
    }

    #[test]
    fn complements_sort_adjacent() {
        let mut v = vec![lit("b"), lit("-a"), lit("a")];
        v.sort();
        assert_eq!(v, vec![lit("a"), lit("-a"), lit("b")]);
    }
}
