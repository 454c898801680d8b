//! Array access expressions and the affine-index parser.
//!
//! Subscript expressions are restricted to sums of integer-scaled iterator
//! symbols plus constants (`A[2*i + j - 1]`), with one escape hatch: an index
//! may instead be a whole nested access (`A[i][B[j]]`), which makes the index
//! data-dependent. Anything else, e.g. `A[i*j]`, is rejected as non-affine.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::error::{Error, Result};

/// An integer-affine expression over named symbols.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LinearExpr {
    pub terms: BTreeMap<String, i64>,
    pub constant: i64,
}

impl LinearExpr {
    pub fn constant(value: i64) -> Self {
        LinearExpr {
            terms: BTreeMap::new(),
            constant: value,
        }
    }

    pub fn symbol(name: &str) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name.to_owned(), 1);
        LinearExpr { terms, constant: 0 }
    }

    pub fn coefficient(&self, name: &str) -> i64 {
        self.terms.get(name).copied().unwrap_or(0)
    }

    pub fn references(&self, name: &str) -> bool {
        self.coefficient(name) != 0
    }

    /// Evaluates under the given symbol bindings.
    pub fn eval(&self, env: &BTreeMap<String, i64>) -> Result<i64> {
        let mut acc: i128 = self.constant as i128;
        for (name, coeff) in &self.terms {
            let value = *env
                .get(name)
                .ok_or_else(|| Error::UnboundParameter { name: name.clone() })?;
            acc += *coeff as i128 * value as i128;
        }
        i64::try_from(acc).map_err(|_| Error::Overflow(format!("evaluating {self}")))
    }
}

impl fmt::Display for LinearExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, coeff) in &self.terms {
            if *coeff == 0 {
                continue;
            }
            if first {
                match *coeff {
                    1 => write!(f, "{name}")?,
                    -1 => write!(f, "-{name}")?,
                    c => write!(f, "{c}*{name}")?,
                }
                first = false;
            } else {
                let sign = if *coeff < 0 { '-' } else { '+' };
                match coeff.unsigned_abs() {
                    1 => write!(f, " {sign} {name}")?,
                    c => write!(f, " {sign} {c}*{name}")?,
                }
            }
        }
        if first {
            write!(f, "{}", self.constant)?;
        } else if self.constant != 0 {
            let sign = if self.constant < 0 { '-' } else { '+' };
            write!(f, " {sign} {}", self.constant.unsigned_abs())?;
        }
        Ok(())
    }
}

/// One subscript position of an access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IndexExpr {
    /// An affine function of iterators.
    Affine(LinearExpr),
    /// An array-valued subscript such as `B[j]`.
    Indirect(Box<AccessExpr>),
}

impl IndexExpr {
    pub fn is_indirect(&self) -> bool {
        matches!(self, IndexExpr::Indirect(_))
    }
}

impl fmt::Display for IndexExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexExpr::Affine(lin) => lin.fmt(f),
            IndexExpr::Indirect(inner) => inner.fmt(f),
        }
    }
}

/// A subscripted array access.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccessExpr {
    pub base: String,
    pub indices: Vec<IndexExpr>,
}

impl AccessExpr {
    /// True if any subscript, at any nesting depth, is data-dependent.
    pub fn has_indirect_index(&self) -> bool {
        self.indices.iter().any(|i| i.is_indirect())
    }
}

impl fmt::Display for AccessExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for index in &self.indices {
            write!(f, "[{index}]")?;
        }
        Ok(())
    }
}

/// Parses a bracketed access expression over the declared variables.
pub fn parse_access(text: &str, known_variables: &BTreeSet<String>) -> Result<AccessExpr> {
    let mut parser = Parser::new(text, known_variables)?;
    let access = parser.access()?;
    parser.expect_eof()?;
    Ok(access)
}

/// Parses an affine expression with no array subscripts (loop bounds, dims).
pub fn parse_linear(text: &str) -> Result<LinearExpr> {
    let empty = BTreeSet::new();
    let mut parser = Parser::new(text, &empty)?;
    let lin = parser.sum_as_linear("loop bounds and dimensions")?;
    parser.expect_eof()?;
    Ok(lin)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Ident(String),
    Int(i64),
    LBracket,
    RBracket,
    Plus,
    Minus,
    Star,
    Eof,
}

struct Parser<'a> {
    text: &'a str,
    tokens: Vec<(Token, usize)>,
    cursor: usize,
    known: &'a BTreeSet<String>,
}

/// One multiplicand inside a product.
enum Atom {
    Int(i64),
    Sym(String, usize),
    Access(AccessExpr, usize),
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, known: &'a BTreeSet<String>) -> Result<Self> {
        let tokens = lex(text)?;
        Ok(Parser {
            text,
            tokens,
            cursor: 0,
            known,
        })
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.cursor].0
    }

    fn pos(&self) -> usize {
        self.tokens[self.cursor].1
    }

    fn bump(&mut self) -> (Token, usize) {
        let t = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn syntax(&self, pos: usize, message: impl Into<String>) -> Error {
        Error::Syntax {
            text: self.text.to_owned(),
            pos,
            message: message.into(),
        }
    }

    fn non_affine(&self, pos: usize, message: impl Into<String>) -> Error {
        Error::NonAffine {
            text: self.text.to_owned(),
            pos,
            message: message.into(),
        }
    }

    fn expect_eof(&mut self) -> Result<()> {
        match self.peek() {
            Token::Eof => Ok(()),
            _ => Err(self.syntax(self.pos(), "unexpected trailing input")),
        }
    }

    /// `ident '[' index ']' ( '[' index ']' )*`
    fn access(&mut self) -> Result<AccessExpr> {
        let (tok, pos) = self.bump();
        let base = match tok {
            Token::Ident(name) => name,
            _ => return Err(self.syntax(pos, "expected a variable name")),
        };
        if !self.known.contains(&base) {
            return Err(Error::UnknownVariable {
                text: self.text.to_owned(),
                pos,
                name: base,
            });
        }
        if *self.peek() != Token::LBracket {
            return Err(self.syntax(self.pos(), "expected '[' after variable name"));
        }
        let mut indices = Vec::new();
        while *self.peek() == Token::LBracket {
            self.bump();
            indices.push(self.index()?);
            let (tok, pos) = self.bump();
            if tok != Token::RBracket {
                return Err(self.syntax(pos, "expected ']'"));
            }
        }
        Ok(AccessExpr { base, indices })
    }

    /// One subscript: either an affine sum or a single nested access.
    fn index(&mut self) -> Result<IndexExpr> {
        let products = self.sum()?;
        // A lone access atom is an indirect subscript; anywhere else an
        // access cannot be represented and is rejected below.
        if products.len() == 1 {
            let (positive, atoms) = &products[0];
            if *positive && atoms.len() == 1 {
                if let Atom::Access(_, _) = atoms[0] {
                    let (positive, mut atoms) = products.into_iter().next().unwrap();
                    debug_assert!(positive);
                    if let Atom::Access(access, _) = atoms.pop().unwrap() {
                        return Ok(IndexExpr::Indirect(Box::new(access)));
                    }
                    unreachable!()
                }
            }
        }
        Ok(IndexExpr::Affine(self.fold_linear(products)?))
    }

    fn sum_as_linear(&mut self, context: &str) -> Result<LinearExpr> {
        let products = self.sum()?;
        for (_, atoms) in &products {
            for atom in atoms {
                if let Atom::Access(access, pos) = atom {
                    return Err(
                        self.non_affine(*pos, format!("{context} may not reference {access}"))
                    );
                }
            }
        }
        self.fold_linear(products)
    }

    /// `['-'] product (('+'|'-') product)*`
    fn sum(&mut self) -> Result<Vec<(bool, Vec<Atom>)>> {
        let mut products = Vec::new();
        let mut positive = match self.peek() {
            Token::Minus => {
                self.bump();
                false
            }
            _ => true,
        };
        loop {
            products.push((positive, self.product()?));
            positive = match self.peek() {
                Token::Plus => {
                    self.bump();
                    true
                }
                Token::Minus => {
                    self.bump();
                    false
                }
                _ => break,
            };
        }
        Ok(products)
    }

    /// `atom ('*' atom)*`
    fn product(&mut self) -> Result<Vec<Atom>> {
        let mut atoms = vec![self.atom()?];
        while *self.peek() == Token::Star {
            self.bump();
            atoms.push(self.atom()?);
        }
        Ok(atoms)
    }

    fn atom(&mut self) -> Result<Atom> {
        let pos = self.pos();
        match self.peek().clone() {
            Token::Int(v) => {
                self.bump();
                Ok(Atom::Int(v))
            }
            Token::Ident(name) => {
                if self.known.contains(&name) {
                    // Declared arrays must be subscripted; parse a full
                    // nested access.
                    let access = self.access()?;
                    Ok(Atom::Access(access, pos))
                } else {
                    self.bump();
                    if *self.peek() == Token::LBracket {
                        return Err(Error::UnknownVariable {
                            text: self.text.to_owned(),
                            pos,
                            name,
                        });
                    }
                    Ok(Atom::Sym(name, pos))
                }
            }
            _ => Err(self.syntax(pos, "expected an integer, iterator or array access")),
        }
    }

    /// Reduces signed products to a linear expression, rejecting products of
    /// iterators and any arithmetic on indirect accesses.
    fn fold_linear(&self, products: Vec<(bool, Vec<Atom>)>) -> Result<LinearExpr> {
        let mut out = LinearExpr::default();
        for (positive, atoms) in products {
            let mut scale: i128 = if positive { 1 } else { -1 };
            let mut sym: Option<(String, usize)> = None;
            for atom in atoms {
                match atom {
                    Atom::Int(v) => scale *= v as i128,
                    Atom::Sym(name, pos) => {
                        if let Some((first, _)) = &sym {
                            return Err(self.non_affine(
                                pos,
                                format!("product of iterators {first} and {name}"),
                            ));
                        }
                        sym = Some((name, pos));
                    }
                    Atom::Access(access, pos) => {
                        return Err(self.non_affine(
                            pos,
                            format!("indirect subscript {access} cannot be scaled or added"),
                        ));
                    }
                }
            }
            let overflow = || Error::Overflow("folding an index expression".into());
            match sym {
                Some((name, _)) => {
                    let slot = out.terms.entry(name).or_insert(0);
                    let updated = *slot as i128 + scale;
                    *slot = i64::try_from(updated).map_err(|_| overflow())?;
                }
                None => {
                    let updated = out.constant as i128 + scale;
                    out.constant = i64::try_from(updated).map_err(|_| overflow())?;
                }
            }
        }
        out.terms.retain(|_, c| *c != 0);
        Ok(out)
    }
}

fn lex(text: &str) -> Result<Vec<(Token, usize)>> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let start = i;
        match b {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
            }
            b'[' => {
                tokens.push((Token::LBracket, start));
                i += 1;
            }
            b']' => {
                tokens.push((Token::RBracket, start));
                i += 1;
            }
            b'+' => {
                tokens.push((Token::Plus, start));
                i += 1;
            }
            b'-' => {
                tokens.push((Token::Minus, start));
                i += 1;
            }
            b'*' => {
                tokens.push((Token::Star, start));
                i += 1;
            }
            b'0'..=b'9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let value: i64 = text[start..i].parse().map_err(|_| Error::Syntax {
                    text: text.to_owned(),
                    pos: start,
                    message: "integer literal out of range".into(),
                })?;
                tokens.push((Token::Int(value), start));
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push((Token::Ident(text[start..i].to_owned()), start));
            }
            _ => {
                return Err(Error::Syntax {
                    text: text.to_owned(),
                    pos: start,
                    message: format!("unexpected character {:?}", text[start..].chars().next().unwrap()),
                });
            }
        }
    }
    tokens.push((Token::Eof, text.len()));
    Ok(tokens)
}
