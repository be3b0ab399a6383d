//! Boolean expressions over event and proposition symbols.
//!
//! Concrete syntax: `!` (not) binds tighter than `&` (and), which binds
//! tighter than `|` (or). Both binary operators are left-associative.
//! `true` and `false` are reserved constants.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

use crate::lex::{self, Cursor, Pos, Tok};

/// Default bound on the number of symbols a satisfiability check may enumerate.
pub const DEFAULT_UNIVERSE_CAP: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymbolKind {
    Event,
    Prop,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol {
    pub name: String,
    pub kind: SymbolKind,
}

impl Symbol {
    pub fn event(name: impl Into<String>) -> Self {
        Symbol {
            name: name.into(),
            kind: SymbolKind::Event,
        }
    }

    pub fn prop(name: impl Into<String>) -> Self {
        Symbol {
            name: name.into(),
            kind: SymbolKind::Prop,
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExprError {
    #[error("E_UNDECLARED_SYMBOL: symbol `{0}` is not declared")]
    UndeclaredSymbol(String),
    #[error("E_UNIVERSE_TOO_LARGE: {size} symbols exceed the enumeration cap of {cap}")]
    UniverseTooLarge { size: usize, cap: usize },
    #[error("E_PARSE: {line}:{col}: {message}")]
    Parse {
        line: usize,
        col: usize,
        message: String,
    },
}

impl ExprError {
    pub fn code(&self) -> &'static str {
        match self {
            ExprError::UndeclaredSymbol(_) => "E_UNDECLARED_SYMBOL",
            ExprError::UniverseTooLarge { .. } => "E_UNIVERSE_TOO_LARGE",
            ExprError::Parse { .. } => "E_PARSE",
        }
    }

    fn parse(pos: Pos, message: impl Into<String>) -> Self {
        ExprError::Parse {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}

/// Declared names of a specification: events, propositions, clocks and instances.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SymbolTable {
    pub events: Vec<String>,
    pub props: Vec<String>,
    pub clocks: Vec<String>,
    pub instances: Vec<String>,
}

impl SymbolTable {
    pub fn kind_of(&self, name: &str) -> Option<SymbolKind> {
        if self.events.iter().any(|e| e == name) {
            Some(SymbolKind::Event)
        } else if self.props.iter().any(|p| p == name) {
            Some(SymbolKind::Prop)
        } else {
            None
        }
    }

    pub fn symbol(&self, name: &str) -> Option<Symbol> {
        self.kind_of(name).map(|kind| Symbol {
            name: name.to_string(),
            kind,
        })
    }

    /// Events first, then propositions, in declaration order.
    pub fn symbols(&self) -> impl Iterator<Item = Symbol> + '_ {
        self.events
            .iter()
            .map(Symbol::event)
            .chain(self.props.iter().map(Symbol::prop))
    }

    /// Position of a symbol in [`SymbolTable::symbols`] order.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.events
            .iter()
            .position(|e| e == name)
            .or_else(|| {
                self.props
                    .iter()
                    .position(|p| p == name)
                    .map(|i| i + self.events.len())
            })
    }

    pub fn symbol_count(&self) -> usize {
        self.events.len() + self.props.len()
    }

    pub fn has_clock(&self, clock: &str) -> bool {
        self.clocks.iter().any(|c| c == clock)
    }
}

/// Truth assignment to symbols: propositions (levels) and events (pulses).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Valuation {
    values: BTreeMap<String, bool>,
}

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every symbol of `symtab` false.
    pub fn all_false(symtab: &SymbolTable) -> Self {
        Valuation {
            values: symtab.symbols().map(|s| (s.name, false)).collect(),
        }
    }

    pub fn set(&mut self, name: impl Into<String>, value: bool) {
        self.values.insert(name.into(), value);
    }

    pub fn with(mut self, name: impl Into<String>, value: bool) -> Self {
        self.set(name, value);
        self
    }

    pub fn get(&self, name: &str) -> Option<bool> {
        self.values.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.values.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn true_symbols(&self) -> impl Iterator<Item = &str> {
        self.values
            .iter()
            .filter(|(_, v)| **v)
            .map(|(k, _)| k.as_str())
    }

    /// Dense form in [`SymbolTable::symbols`] order; missing entries read as false.
    pub fn to_bits(&self, symtab: &SymbolTable) -> Vec<bool> {
        symtab
            .symbols()
            .map(|s| self.get(&s.name).unwrap_or(false))
            .collect()
    }
}

impl<S: Into<String>> FromIterator<(S, bool)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (S, bool)>>(iter: I) -> Self {
        Valuation {
            values: iter.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(bool),
    Sym(Symbol),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn sym(s: Symbol) -> Self {
        Expr::Sym(s)
    }

    pub fn event(name: &str) -> Self {
        Expr::Sym(Symbol::event(name))
    }

    pub fn prop(name: &str) -> Self {
        Expr::Sym(Symbol::prop(name))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Self {
        Expr::Not(Box::new(e))
    }

    pub fn and(a: Expr, b: Expr) -> Self {
        Expr::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Expr, b: Expr) -> Self {
        Expr::Or(Box::new(a), Box::new(b))
    }

    /// Left-folded conjunction; `true` for an empty sequence.
    pub fn and_all<I: IntoIterator<Item = Expr>>(items: I) -> Self {
        items
            .into_iter()
            .reduce(Expr::and)
            .unwrap_or(Expr::Const(true))
    }

    pub fn eval(&self, v: &Valuation) -> Result<bool, ExprError> {
        self.eval_with(&|s: &Symbol| v.get(&s.name))
    }

    /// Evaluates with a caller-supplied lookup; `None` means undeclared.
    pub fn eval_with<F>(&self, lookup: &F) -> Result<bool, ExprError>
    where
        F: Fn(&Symbol) -> Option<bool>,
    {
        Ok(match self {
            Expr::Const(b) => *b,
            Expr::Sym(s) => lookup(s).ok_or_else(|| ExprError::UndeclaredSymbol(s.name.clone()))?,
            Expr::Not(e) => !e.eval_with(lookup)?,
            Expr::And(a, b) => a.eval_with(lookup)? & b.eval_with(lookup)?,
            Expr::Or(a, b) => a.eval_with(lookup)? | b.eval_with(lookup)?,
        })
    }

    pub fn support(&self) -> BTreeSet<Symbol> {
        let mut out = BTreeSet::new();
        self.collect_support(&mut out);
        out
    }

    fn collect_support(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Expr::Const(_) => {}
            Expr::Sym(s) => {
                out.insert(s.clone());
            }
            Expr::Not(e) => e.collect_support(out),
            Expr::And(a, b) | Expr::Or(a, b) => {
                a.collect_support(out);
                b.collect_support(out);
            }
        }
    }

    /// Resolves symbol names to dense indices of `symtab` for fast evaluation.
    pub fn compile(&self, symtab: &SymbolTable) -> Result<CompiledExpr, ExprError> {
        self.compile_with(&|s: &Symbol| symtab.index_of(&s.name))
    }

    fn compile_with<F>(&self, index: &F) -> Result<CompiledExpr, ExprError>
    where
        F: Fn(&Symbol) -> Option<usize>,
    {
        Ok(match self {
            Expr::Const(b) => CompiledExpr::Const(*b),
            Expr::Sym(s) => CompiledExpr::Var(
                index(s).ok_or_else(|| ExprError::UndeclaredSymbol(s.name.clone()))?,
            ),
            Expr::Not(e) => CompiledExpr::Not(Box::new(e.compile_with(index)?)),
            Expr::And(a, b) => {
                CompiledExpr::And(Box::new(a.compile_with(index)?), Box::new(b.compile_with(index)?))
            }
            Expr::Or(a, b) => {
                CompiledExpr::Or(Box::new(a.compile_with(index)?), Box::new(b.compile_with(index)?))
            }
        })
    }

    /// Parses the concrete syntax, resolving names against `symtab`.
    pub fn parse(text: &str, symtab: &SymbolTable) -> Result<Expr, ExprError> {
        let toks = lex::tokenize(text).map_err(|e| ExprError::parse(e.pos, e.message))?;
        let mut cur = Cursor::new(toks);
        let e = parse_expr(&mut cur, &|n: &str| symtab.symbol(n))?;
        if !cur.at_eof() {
            return Err(ExprError::parse(
                cur.pos(),
                format!("unexpected {} after expression", cur.peek()),
            ));
        }
        Ok(e)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(_) => 3,
            Expr::Const(_) | Expr::Sym(_) => 4,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let p = self.precedence();
        if p < min {
            f.write_str("(")?;
        }
        match self {
            Expr::Const(b) => write!(f, "{b}")?,
            Expr::Sym(s) => f.write_str(&s.name)?,
            Expr::Not(e) => {
                f.write_str("!")?;
                e.fmt_prec(f, 3)?;
            }
            Expr::And(a, b) => {
                a.fmt_prec(f, 2)?;
                f.write_str(" & ")?;
                b.fmt_prec(f, 3)?;
            }
            Expr::Or(a, b) => {
                a.fmt_prec(f, 1)?;
                f.write_str(" | ")?;
                b.fmt_prec(f, 2)?;
            }
        }
        if p < min {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

/// Expression with symbols resolved to indices into a dense valuation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompiledExpr {
    Const(bool),
    Var(usize),
    Not(Box<CompiledExpr>),
    And(Box<CompiledExpr>, Box<CompiledExpr>),
    Or(Box<CompiledExpr>, Box<CompiledExpr>),
}

impl CompiledExpr {
    pub fn eval(&self, bits: &[bool]) -> bool {
        match self {
            CompiledExpr::Const(b) => *b,
            CompiledExpr::Var(i) => bits[*i],
            CompiledExpr::Not(e) => !e.eval(bits),
            CompiledExpr::And(a, b) => a.eval(bits) && b.eval(bits),
            CompiledExpr::Or(a, b) => a.eval(bits) || b.eval(bits),
        }
    }

    /// Evaluates with variable `i` read from bit `i` of `mask`.
    pub fn eval_mask(&self, mask: u64) -> bool {
        match self {
            CompiledExpr::Const(b) => *b,
            CompiledExpr::Var(i) => mask >> i & 1 == 1,
            CompiledExpr::Not(e) => !e.eval_mask(mask),
            CompiledExpr::And(a, b) => a.eval_mask(mask) && b.eval_mask(mask),
            CompiledExpr::Or(a, b) => a.eval_mask(mask) || b.eval_mask(mask),
        }
    }
}

/// True iff some assignment over `universe` satisfies `e`.
///
/// Enumerates all `2^|universe|` assignments, so the universe is bounded by `cap`.
pub fn satisfiable(e: &Expr, universe: &BTreeSet<Symbol>, cap: usize) -> Result<bool, ExprError> {
    Ok(satisfying_assignment(e, universe, cap)?.is_some())
}

/// First satisfying assignment in enumeration order, as a bitmask over `universe`.
pub fn satisfying_assignment(
    e: &Expr,
    universe: &BTreeSet<Symbol>,
    cap: usize,
) -> Result<Option<u64>, ExprError> {
    if universe.len() > cap || universe.len() > 63 {
        return Err(ExprError::UniverseTooLarge {
            size: universe.len(),
            cap,
        });
    }
    let order: Vec<&Symbol> = universe.iter().collect();
    let compiled = e.compile_with(&|s: &Symbol| order.iter().position(|u| *u == s))?;
    Ok((0..1u64 << order.len()).find(|&m| compiled.eval_mask(m)))
}

pub(crate) fn parse_expr<R>(cur: &mut Cursor, resolve: &R) -> Result<Expr, ExprError>
where
    R: Fn(&str) -> Option<Symbol>,
{
    let mut lhs = parse_and(cur, resolve)?;
    while cur.eat(&Tok::Pipe) {
        let rhs = parse_and(cur, resolve)?;
        lhs = Expr::or(lhs, rhs);
    }
    Ok(lhs)
}

fn parse_and<R>(cur: &mut Cursor, resolve: &R) -> Result<Expr, ExprError>
where
    R: Fn(&str) -> Option<Symbol>,
{
    let mut lhs = parse_unary(cur, resolve)?;
    while cur.eat(&Tok::Amp) {
        let rhs = parse_unary(cur, resolve)?;
        lhs = Expr::and(lhs, rhs);
    }
    Ok(lhs)
}

fn parse_unary<R>(cur: &mut Cursor, resolve: &R) -> Result<Expr, ExprError>
where
    R: Fn(&str) -> Option<Symbol>,
{
    let pos = cur.pos();
    match cur.bump() {
        Tok::Bang => Ok(Expr::not(parse_unary(cur, resolve)?)),
        Tok::LParen => {
            let e = parse_expr(cur, resolve)?;
            if !cur.eat(&Tok::RParen) {
                return Err(ExprError::parse(
                    cur.pos(),
                    format!("expected `)`, found {}", cur.peek()),
                ));
            }
            Ok(e)
        }
        Tok::Ident(name) if name == "true" => Ok(Expr::Const(true)),
        Tok::Ident(name) if name == "false" => Ok(Expr::Const(false)),
        Tok::Ident(name) => resolve(&name)
            .map(Expr::Sym)
            .ok_or(ExprError::UndeclaredSymbol(name)),
        other => Err(ExprError::parse(
            pos,
            format!("expected an expression, found {other}"),
        )),
    }
}
