//! Chart abstract syntax: single-clock scenario leaves and the structural
//! constructs that combine them.

mod flatten;
mod parse;
mod print;
mod validate;

use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, Symbol, SymbolTable};

pub use flatten::{flatten_seq, reduce, Reduced};
pub use parse::parse_spec;
pub use validate::{validate, Diagnostic};

/// Name of the built-in environment instance.
pub const ENV_INSTANCE: &str = "env";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Present,
    Absent,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventOccurrence {
    pub event: Symbol,
    /// The `p` of a guarded occurrence `p:e`.
    pub guard: Option<Expr>,
    pub polarity: Polarity,
    /// Owning instance; `None` when the chart does not name one.
    pub instance: Option<String>,
    pub tick: usize,
}

impl EventOccurrence {
    pub fn present(event: &str, tick: usize) -> Self {
        EventOccurrence {
            event: Symbol::event(event),
            guard: None,
            polarity: Polarity::Present,
            instance: None,
            tick,
        }
    }

    pub fn absent(event: &str, tick: usize) -> Self {
        EventOccurrence {
            polarity: Polarity::Absent,
            ..Self::present(event, tick)
        }
    }

    pub fn guarded(mut self, guard: Expr) -> Self {
        self.guard = Some(guard);
        self
    }

    pub fn on(mut self, instance: &str) -> Self {
        self.instance = Some(instance.to_string());
        self
    }

    pub fn is_env(&self) -> bool {
        self.instance.as_deref() == Some(ENV_INSTANCE)
    }
}

/// An arrow endpoint inside one chart: an event at a tick.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccurrenceRef {
    pub event: String,
    pub tick: usize,
}

impl OccurrenceRef {
    pub fn new(event: &str, tick: usize) -> Self {
        OccurrenceRef {
            event: event.to_string(),
            tick,
        }
    }
}

impl fmt::Display for OccurrenceRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.event, self.tick)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CausalityArrow {
    pub source: OccurrenceRef,
    pub target: OccurrenceRef,
}

impl CausalityArrow {
    pub fn new(source: OccurrenceRef, target: OccurrenceRef) -> Self {
        CausalityArrow { source, target }
    }
}

/// Single-clock chart: a finite sequence of `tick_count` clock ticks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scesc {
    pub name: String,
    pub clock: String,
    pub tick_count: usize,
    pub occurrences: Vec<EventOccurrence>,
    pub arrows: Vec<CausalityArrow>,
    pub instances: Vec<String>,
}

impl Scesc {
    pub fn new(name: &str, clock: &str, tick_count: usize) -> Self {
        Scesc {
            name: name.to_string(),
            clock: clock.to_string(),
            tick_count,
            occurrences: Vec::new(),
            arrows: Vec::new(),
            instances: Vec::new(),
        }
    }

    /// Appends an occurrence, recording its instance on first sight.
    pub fn push(&mut self, occ: EventOccurrence) {
        if let Some(inst) = &occ.instance {
            if !self.instances.contains(inst) {
                self.instances.push(inst.clone());
            }
        }
        self.occurrences.push(occ);
    }

    pub fn with(mut self, occ: EventOccurrence) -> Self {
        self.push(occ);
        self
    }

    pub fn with_arrow(mut self, source: (&str, usize), target: (&str, usize)) -> Self {
        self.arrows.push(CausalityArrow::new(
            OccurrenceRef::new(source.0, source.1),
            OccurrenceRef::new(target.0, target.1),
        ));
        self
    }

    pub fn occurrences_at(&self, tick: usize) -> impl Iterator<Item = &EventOccurrence> {
        self.occurrences.iter().filter(move |o| o.tick == tick)
    }

    /// The present occurrence an arrow endpoint names, if any.
    pub fn find_present(&self, r: &OccurrenceRef) -> Option<&EventOccurrence> {
        self.occurrences
            .iter()
            .find(|o| o.tick == r.tick && o.event.name == r.event && o.polarity == Polarity::Present)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LoopCount {
    Times(usize),
    Unbounded,
}

/// Endpoint of an arrow between components of an asynchronous composition.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CrossRef {
    pub chart: String,
    pub event: String,
    pub tick: usize,
}

impl fmt::Display for CrossRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}@{}", self.chart, self.event, self.tick)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CrossArrow {
    pub source: CrossRef,
    pub target: CrossRef,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ChartExpr {
    Leaf(Scesc),
    Seq(Box<ChartExpr>, Box<ChartExpr>),
    Par {
        left: Box<ChartExpr>,
        right: Box<ChartExpr>,
        pad: bool,
    },
    Alt(Box<ChartExpr>, Box<ChartExpr>),
    Loop {
        body: Box<ChartExpr>,
        count: LoopCount,
    },
    Implies {
        antecedent: Box<ChartExpr>,
        consequent: Box<ChartExpr>,
    },
    AsyncPar {
        children: Vec<ChartExpr>,
        arrows: Vec<CrossArrow>,
    },
}

impl ChartExpr {
    pub fn seq(a: ChartExpr, b: ChartExpr) -> Self {
        ChartExpr::Seq(Box::new(a), Box::new(b))
    }

    pub fn par(a: ChartExpr, b: ChartExpr, pad: bool) -> Self {
        ChartExpr::Par {
            left: Box::new(a),
            right: Box::new(b),
            pad,
        }
    }

    pub fn alt(a: ChartExpr, b: ChartExpr) -> Self {
        ChartExpr::Alt(Box::new(a), Box::new(b))
    }

    pub fn repeat(body: ChartExpr, count: LoopCount) -> Self {
        ChartExpr::Loop {
            body: Box::new(body),
            count,
        }
    }

    pub fn implies(a: ChartExpr, c: ChartExpr) -> Self {
        ChartExpr::Implies {
            antecedent: Box::new(a),
            consequent: Box::new(c),
        }
    }

    /// The single clock of this expression, or `None` for an asynchronous
    /// composition or mismatched children.
    pub fn clock(&self) -> Option<&str> {
        match self {
            ChartExpr::Leaf(s) => Some(&s.clock),
            ChartExpr::Seq(a, b)
            | ChartExpr::Alt(a, b)
            | ChartExpr::Par {
                left: a, right: b, ..
            }
            | ChartExpr::Implies {
                antecedent: a,
                consequent: b,
            } => match (a.clock(), b.clock()) {
                (Some(x), Some(y)) if x == y => Some(x),
                _ => None,
            },
            ChartExpr::Loop { body, .. } => body.clock(),
            ChartExpr::AsyncPar { .. } => None,
        }
    }

    pub fn leaves(&self) -> Vec<&Scesc> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a Scesc>) {
        match self {
            ChartExpr::Leaf(s) => out.push(s),
            ChartExpr::Seq(a, b)
            | ChartExpr::Alt(a, b)
            | ChartExpr::Par {
                left: a, right: b, ..
            }
            | ChartExpr::Implies {
                antecedent: a,
                consequent: b,
            } => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
            ChartExpr::Loop { body, .. } => body.collect_leaves(out),
            ChartExpr::AsyncPar { children, .. } => {
                for c in children {
                    c.collect_leaves(out);
                }
            }
        }
    }

    /// True for expressions that reduce to one fixed-length pattern:
    /// leaves combined by `seq`, `par` and bounded `loop`.
    pub fn is_pattern_reducible(&self) -> bool {
        match self {
            ChartExpr::Leaf(_) => true,
            ChartExpr::Seq(a, b) | ChartExpr::Par { left: a, right: b, .. } => {
                a.is_pattern_reducible() && b.is_pattern_reducible()
            }
            ChartExpr::Loop {
                body,
                count: LoopCount::Times(_),
            } => body.is_pattern_reducible(),
            _ => false,
        }
    }

    /// Tick length of a pattern-reducible expression.
    pub fn tick_len(&self) -> Option<usize> {
        match self {
            ChartExpr::Leaf(s) => Some(s.tick_count),
            ChartExpr::Seq(a, b) => Some(a.tick_len()? + b.tick_len()?),
            ChartExpr::Par { left, right, .. } => Some(left.tick_len()?.max(right.tick_len()?)),
            ChartExpr::Loop {
                body,
                count: LoopCount::Times(k),
            } => Some(body.tick_len()? * k),
            _ => None,
        }
    }

    /// Display name used in reports: the leaf name, or a name derived from
    /// the structure.
    pub fn label(&self) -> String {
        match self {
            ChartExpr::Leaf(s) => s.name.clone(),
            ChartExpr::Seq(a, b) => format!("{}_{}", a.label(), b.label()),
            ChartExpr::Par { left, right, .. } => format!("{}_par_{}", left.label(), right.label()),
            ChartExpr::Alt(a, b) => format!("{}_or_{}", a.label(), b.label()),
            ChartExpr::Loop {
                body,
                count: LoopCount::Times(k),
            } => format!("{}_x{k}", body.label()),
            ChartExpr::Loop { body, .. } => format!("{}_loop", body.label()),
            ChartExpr::Implies {
                antecedent,
                consequent,
            } => format!("{}_implies_{}", antecedent.label(), consequent.label()),
            ChartExpr::AsyncPar { children, .. } => children
                .iter()
                .map(|c| c.label())
                .collect::<Vec<_>>()
                .join("_async_"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Mode {
    #[default]
    Detect,
    Assert,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Detect => "detect",
            Mode::Assert => "assert",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "detect" => Ok(Mode::Detect),
            "assert" => Ok(Mode::Assert),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChartDef {
    pub name: String,
    pub body: ChartExpr,
}

/// A parsed specification file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecFile {
    pub symbols: SymbolTable,
    pub charts: Vec<ChartDef>,
    pub top: String,
    pub mode: Mode,
}

impl SpecFile {
    pub fn chart(&self, name: &str) -> Option<&ChartExpr> {
        self.charts.iter().find(|c| c.name == name).map(|c| &c.body)
    }

    pub fn top_chart(&self) -> &ChartExpr {
        self.chart(&self.top)
            .expect("top chart is resolved when the spec is parsed")
    }

    /// Canonical text; parsing it yields a structurally equal spec.
    pub fn to_text(&self) -> String {
        print::print_spec(self)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{code}: {line}:{col}: {message}")]
pub struct ParseError {
    pub code: &'static str,
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChartError {
    #[error("E_CLOCK_MISMATCH: `{left}` is on clock `{left_clock}` but `{right}` is on `{right_clock}`")]
    ClockMismatch {
        left: String,
        left_clock: String,
        right: String,
        right_clock: String,
    },
    #[error("E_PAR_LENGTH: `{left}` has {left_len} ticks but `{right}` has {right_len}")]
    ParLength {
        left: String,
        left_len: usize,
        right: String,
        right_len: usize,
    },
    #[error("E_UNSUPPORTED_NESTING: {0}")]
    UnsupportedNesting(String),
    #[error("E_LOOP_COUNT: loop count must be positive in `{0}`")]
    LoopCount(String),
}

impl ChartError {
    pub fn code(&self) -> &'static str {
        match self {
            ChartError::ClockMismatch { .. } => "E_CLOCK_MISMATCH",
            ChartError::ParLength { .. } => "E_PAR_LENGTH",
            ChartError::UnsupportedNesting(_) => "E_UNSUPPORTED_NESTING",
            ChartError::LoopCount(_) => "E_LOOP_COUNT",
        }
    }
}
