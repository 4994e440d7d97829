//! Hand-written lexer and recursive-descent parser for the rule-like
//! surface languages: ground literals in scenario files, causal laws, and
//! policy statements.
//!
//! Identifiers starting with a lowercase letter are constants, those
//! starting with an uppercase letter or `_` are variables. `-` is classical
//! negation on literals and on happenings inside `obl(..)`.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::ParseError;
use crate::term::{Atom, Literal, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Var(String),
    Int(i64),
    LParen,
    RParen,
    Comma,
    Minus,
    Colon,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Var(s) => write!(f, "`{s}`"),
            Tok::Int(n) => write!(f, "`{n}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        match c {
            c if c.is_whitespace() => i += 1,
            '#' => break,
            '(' => {
                out.push((Tok::LParen, col));
                i += 1;
            }
            ')' => {
                out.push((Tok::RParen, col));
                i += 1;
            }
            ',' => {
                out.push((Tok::Comma, col));
                i += 1;
            }
            '-' => {
                out.push((Tok::Minus, col));
                i += 1;
            }
            ':' => {
                out.push((Tok::Colon, col));
                i += 1;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                let n = text.parse().map_err(|_| {
                    ParseError::new(1, col, format!("integer `{text}` out of range"))
                })?;
                out.push((Tok::Int(n), col));
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                if c.is_uppercase() || c == '_' {
                    out.push((Tok::Var(text), col));
                } else {
                    out.push((Tok::Ident(text), col));
                }
            }
            other => {
                return Err(ParseError::new(
                    1,
                    col,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    out.push((Tok::Eof, chars.len() + 1));
    Ok(out)
}

/// A term that may contain variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum PTerm {
    Var(String),
    Int(i64),
    Sym(String),
    App(String, Vec<PTerm>),
    Neg(Box<PTerm>),
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PAtom {
    pub predicate: String,
    pub args: Vec<PTerm>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct PLiteral {
    pub atom: PAtom,
    pub negative: bool,
}

pub type Binding = BTreeMap<String, Term>;

impl PTerm {
    pub fn ground(&self, binding: &Binding) -> Option<Term> {
        Some(match self {
            PTerm::Var(v) => binding.get(v)?.clone(),
            PTerm::Int(n) => Term::Int(*n),
            PTerm::Sym(s) => Term::Sym(s.clone()),
            PTerm::App(f, args) => Term::App(
                f.clone(),
                args.iter()
                    .map(|a| a.ground(binding))
                    .collect::<Option<_>>()?,
            ),
            PTerm::Neg(inner) => Term::Neg(Box::new(inner.ground(binding)?)),
        })
    }

    fn collect_vars(&self, out: &mut Vec<String>) {
        match self {
            PTerm::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            PTerm::App(_, args) => args.iter().for_each(|a| a.collect_vars(out)),
            PTerm::Neg(inner) => inner.collect_vars(out),
            PTerm::Int(_) | PTerm::Sym(_) => {}
        }
    }

    /// The term read as an atom (`move(L1,L2)` or a bare `wait`).
    pub fn as_atom(&self) -> Option<PAtom> {
        match self {
            PTerm::Sym(s) => Some(PAtom {
                predicate: s.clone(),
                args: Vec::new(),
            }),
            PTerm::App(f, args) => Some(PAtom {
                predicate: f.clone(),
                args: args.clone(),
            }),
            _ => None,
        }
    }
}

impl PAtom {
    pub fn ground(&self, binding: &Binding) -> Option<Atom> {
        Some(Atom::new(
            self.predicate.clone(),
            self.args
                .iter()
                .map(|a| a.ground(binding))
                .collect::<Option<_>>()?,
        ))
    }

    pub fn vars(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    pub(crate) fn collect_vars(&self, out: &mut Vec<String>) {
        self.args.iter().for_each(|a| a.collect_vars(out));
    }
}

impl PLiteral {
    pub fn ground(&self, binding: &Binding) -> Option<Literal> {
        Some(Literal {
            atom: self.atom.ground(binding)?,
            negative: self.negative,
        })
    }
}

impl fmt::Display for PTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PTerm::Var(v) | PTerm::Sym(v) => f.write_str(v),
            PTerm::Int(n) => write!(f, "{n}"),
            PTerm::App(name, args) => {
                write!(f, "{name}(")?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            PTerm::Neg(inner) => write!(f, "-{inner}"),
        }
    }
}

impl fmt::Display for PAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.args.is_empty() {
            f.write_str(&self.predicate)
        } else {
            write!(
                f,
                "{}",
                PTerm::App(self.predicate.clone(), self.args.clone())
            )
        }
    }
}

impl fmt::Display for PLiteral {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        write!(f, "{}", self.atom)
    }
}

/// Causal law as written, before grounding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LawSyntax {
    /// `A causes L if cond`
    Dynamic {
        action: PAtom,
        effect: PLiteral,
        cond: Vec<PLiteral>,
    },
    /// `L if cond`
    Static { head: PLiteral, cond: Vec<PLiteral> },
    /// `impossible A if cond`
    Impossible { action: PAtom, cond: Vec<PLiteral> },
}

/// The head of a policy statement: `[-]permitted(e)` or `[-]obl(h)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolicyHeadSyntax {
    pub obligation: bool,
    pub positive: bool,
    /// The action (for obligations possibly wrapped in `PTerm::Neg`).
    pub subject: PTerm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PolicyLineSyntax {
    Rule {
        label: Option<String>,
        head: PolicyHeadSyntax,
        cond: Vec<PLiteral>,
    },
    Prefer {
        stronger: String,
        weaker: String,
    },
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn col(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(1, self.col(), msg)
    }

    fn expect(&mut self, want: Tok) -> Result<(), ParseError> {
        if *self.peek() == want {
            self.bump();
            Ok(())
        } else {
            Err(self.error(format!("expected {want}, found {}", self.peek())))
        }
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {} after statement", self.peek())))
        }
    }

    fn term(&mut self) -> Result<PTerm, ParseError> {
        match self.bump() {
            Tok::Minus => Ok(PTerm::Neg(Box::new(self.term()?))),
            Tok::Int(n) => Ok(PTerm::Int(n)),
            Tok::Var(v) => Ok(PTerm::Var(v)),
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    Ok(PTerm::App(name, self.args()?))
                } else {
                    Ok(PTerm::Sym(name))
                }
            }
            other => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.error(format!("expected a term, found {other}")))
            }
        }
    }

    fn args(&mut self) -> Result<Vec<PTerm>, ParseError> {
        self.expect(Tok::LParen)?;
        let mut args = vec![self.term()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            args.push(self.term()?);
        }
        self.expect(Tok::RParen)?;
        Ok(args)
    }

    fn atom(&mut self) -> Result<PAtom, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                let args = if *self.peek() == Tok::LParen {
                    self.args()?
                } else {
                    Vec::new()
                };
                Ok(PAtom {
                    predicate: name,
                    args,
                })
            }
            other => Err(self.error(format!("expected a predicate name, found {other}"))),
        }
    }

    fn literal(&mut self) -> Result<PLiteral, ParseError> {
        let negative = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        Ok(PLiteral {
            atom: self.atom()?,
            negative,
        })
    }

    fn cond(&mut self) -> Result<Vec<PLiteral>, ParseError> {
        if !self.eat_keyword("if") {
            return Ok(Vec::new());
        }
        let mut cond = vec![self.literal()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            cond.push(self.literal()?);
        }
        Ok(cond)
    }

    fn law(&mut self) -> Result<LawSyntax, ParseError> {
        if self.is_keyword("impossible") && *self.peek_at(1) != Tok::LParen {
            self.bump();
            let action = self.atom()?;
            let cond = self.cond()?;
            return Ok(LawSyntax::Impossible { action, cond });
        }
        let first = self.literal()?;
        if self.eat_keyword("causes") {
            if first.negative {
                return Err(self.error("an action cannot be negated"));
            }
            let effect = self.literal()?;
            let cond = self.cond()?;
            return Ok(LawSyntax::Dynamic {
                action: first.atom,
                effect,
                cond,
            });
        }
        if !self.is_keyword("if") {
            return Err(self.error(format!("expected `causes` or `if`, found {}", self.peek())));
        }
        let cond = self.cond()?;
        Ok(LawSyntax::Static { head: first, cond })
    }

    fn policy_head(&mut self) -> Result<PolicyHeadSyntax, ParseError> {
        let col = self.col();
        let lit = self.literal()?;
        let obligation = match lit.atom.predicate.as_str() {
            "permitted" => false,
            "obl" => true,
            other => {
                return Err(ParseError::new(
                    1,
                    col,
                    format!("policy statement head must be `permitted` or `obl`, found `{other}`"),
                ))
            }
        };
        let [subject] = <[PTerm; 1]>::try_from(lit.atom.args)
            .map_err(|_| ParseError::new(1, col, "`permitted`/`obl` take exactly one argument"))?;
        Ok(PolicyHeadSyntax {
            obligation,
            positive: !lit.negative,
            subject,
        })
    }

    fn policy_line(&mut self) -> Result<PolicyLineSyntax, ParseError> {
        if self.is_keyword("prefer") && *self.peek_at(1) == Tok::LParen {
            let col = self.col();
            self.bump();
            let args = self.args()?;
            let labels: Vec<String> = args
                .into_iter()
                .map(|a| match a {
                    PTerm::Sym(s) => Ok(s),
                    other => Err(ParseError::new(
                        1,
                        col,
                        format!("`prefer` expects two rule labels, found `{other}`"),
                    )),
                })
                .collect::<Result<_, _>>()?;
            let [stronger, weaker] = <[String; 2]>::try_from(labels)
                .map_err(|_| ParseError::new(1, col, "`prefer` expects exactly two labels"))?;
            return Ok(PolicyLineSyntax::Prefer { stronger, weaker });
        }
        let label = match (self.peek().clone(), self.peek_at(1)) {
            (Tok::Ident(name), Tok::Colon) => {
                self.bump();
                self.bump();
                if !self.eat_keyword("normally") {
                    return Err(self.error("expected `normally` after a rule label"));
                }
                Some(name)
            }
            _ => None,
        };
        let head = self.policy_head()?;
        let cond = self.cond()?;
        Ok(PolicyLineSyntax::Rule { label, head, cond })
    }
}

pub fn parse_literal(src: &str) -> Result<PLiteral, ParseError> {
    let mut p = Parser::new(src)?;
    let lit = p.literal()?;
    p.finish()?;
    Ok(lit)
}

pub fn parse_ground_literal(src: &str) -> Result<Literal, ParseError> {
    let lit = parse_literal(src)?;
    lit.ground(&Binding::new())
        .ok_or_else(|| ParseError::new(1, 1, format!("literal `{src}` must not contain variables")))
}

pub fn parse_atom(src: &str) -> Result<PAtom, ParseError> {
    let mut p = Parser::new(src)?;
    let atom = p.atom()?;
    p.finish()?;
    Ok(atom)
}

pub fn parse_law(src: &str) -> Result<LawSyntax, ParseError> {
    let mut p = Parser::new(src)?;
    let law = p.law()?;
    p.finish()?;
    Ok(law)
}

/// Parses one non-empty policy line (comments already allowed).
pub fn parse_policy_line(src: &str) -> Result<PolicyLineSyntax, ParseError> {
    let mut p = Parser::new(src)?;
    let line = p.policy_line()?;
    p.finish()?;
    Ok(line)
}

/// True when the line holds nothing but whitespace and/or a comment.
pub fn is_blank(src: &str) -> bool {
    let t = src.trim_start();
    t.is_empty() || t.starts_with('#')
}
