//! Monitor synthesis: pattern extraction, automaton construction with
//! causality bookkeeping, and composition of per-chart monitors.
//!
//! A monitor state is the set of pattern-prefix lengths matched by the most
//! recent inputs. Each nonzero length is a live match attempt ("thread");
//! scoreboard actions and checks are addressed to threads by their length.

mod build;
mod compose;
mod dot;
mod pattern;
mod serial;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::chart::{CausalityArrow, ChartError, Mode};
use crate::expr::{Expr, ExprError, Symbol, SymbolTable};

pub use build::{add_causality_check, build_monitor, integer_state_view, MAX_PATTERN_LEN, MAX_STATES};
pub use compose::{compose, synthesize, synthesize_leaf};
pub use dot::{net_to_dot, to_dot};
pub use pattern::extract_pattern;
pub use serial::{read_net, write_net};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("E_VACUOUS: chart `{chart}` can never match: the constraint at tick {tick} is unsatisfiable")]
    Vacuous { chart: String, tick: usize },
    #[error("E_EMPTY_PATTERN: chart `{0}` has no ticks")]
    EmptyPattern(String),
    #[error("E_PATTERN_TOO_LONG: {len} ticks exceed the limit of {max}")]
    PatternTooLong { len: usize, max: usize },
    #[error("E_STATE_LIMIT: more than {0} monitor states")]
    StateLimit(usize),
    #[error("E_ARROW_SCOPE: {0}")]
    ArrowScope(String),
    #[error("E_ASYNC_SAME_CLOCK: {0}")]
    AsyncSameClock(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("E_MONITOR_FORMAT: line {line}: {message}")]
    Format { line: usize, message: String },
}

impl SynthError {
    pub fn code(&self) -> &'static str {
        match self {
            SynthError::Vacuous { .. } => "E_VACUOUS",
            SynthError::EmptyPattern(_) => "E_EMPTY_PATTERN",
            SynthError::PatternTooLong { .. } => "E_PATTERN_TOO_LONG",
            SynthError::StateLimit(_) => "E_STATE_LIMIT",
            SynthError::ArrowScope(_) => "E_ARROW_SCOPE",
            SynthError::AsyncSameClock(_) => "E_ASYNC_SAME_CLOCK",
            SynthError::Expr(e) => e.code(),
            SynthError::Chart(e) => e.code(),
            SynthError::Format { .. } => "E_MONITOR_FORMAT",
        }
    }
}

/// One boolean constraint per clock tick of a chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pattern {
    pub elements: Vec<Expr>,
}

impl Pattern {
    pub fn new(elements: Vec<Expr>) -> Self {
        Pattern { elements }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn support(&self) -> BTreeSet<Symbol> {
        self.elements.iter().flat_map(Expr::support).collect()
    }

    /// Element-wise conjunction; the shorter side is padded with `true`.
    pub fn conjoin(&self, other: &Pattern) -> Pattern {
        let n = self.len().max(other.len());
        let get = |p: &Pattern, i: usize| p.elements.get(i).cloned();
        Pattern::new(
            (0..n)
                .map(|i| match (get(self, i), get(other, i)) {
                    (Some(a), Some(b)) => Expr::and(a, b),
                    (Some(a), None) | (None, Some(a)) => a,
                    (None, None) => unreachable!(),
                })
                .collect(),
        )
    }

    pub fn repeat(&self, k: usize) -> Pattern {
        Pattern::new(
            std::iter::repeat_n(self.elements.iter().cloned(), k)
                .flatten()
                .collect(),
        )
    }
}

pub type StateId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonitorState {
    pub id: StateId,
    pub matched_lengths: BTreeSet<usize>,
    pub is_final: bool,
}

impl MonitorState {
    pub fn mask(&self) -> u64 {
        self.matched_lengths.iter().fold(0, |m, &k| m | 1 << k)
    }
}

/// Scoreboard action, addressed to the thread that has matched `thread` ticks.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    /// The thread extending past `slot` saw `event`; record it.
    Add { event: String, slot: usize },
    /// The thread of length `thread` was abandoned; drop its `event@slot` entry.
    Del {
        event: String,
        slot: usize,
        thread: usize,
    },
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Action::Add { event, slot } => write!(f, "add({event}@{slot})"),
            Action::Del {
                event,
                slot,
                thread,
            } => write!(f, "del({event}@{slot}#{thread})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckSource {
    /// Recorded by the checking thread itself.
    Local,
    /// Recorded by any attempt of another monitor of the same net.
    Remote { monitor: usize },
}

/// Guard on the extension of the thread of length `thread`: it survives only
/// if the scoreboard holds `event@slot` from `source`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Check {
    pub event: String,
    pub slot: usize,
    pub source: CheckSource,
    pub thread: usize,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.source {
            CheckSource::Local => write!(f, "chk({}@{})>{}", self.event, self.slot, self.thread),
            CheckSource::Remote { monitor } => {
                write!(f, "chk(m{monitor}.{}@{})>{}", self.event, self.slot, self.thread)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transition {
    pub from: StateId,
    pub guard: Expr,
    pub actions: Vec<Action>,
    pub checks: Vec<Check>,
    /// Successor when every check passes.
    pub to: StateId,
}

/// An event occurrence the monitor records on the scoreboard.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SourceSlot {
    pub event: String,
    pub slot: usize,
    /// Read by another monitor; kept after the attempt completes.
    pub cross: bool,
}

#[derive(Clone, Debug)]
pub struct Monitor {
    pub name: String,
    pub clock: String,
    pub pattern: Pattern,
    pub universe: BTreeSet<Symbol>,
    pub states: Vec<MonitorState>,
    pub transitions: Vec<Transition>,
    pub initial: StateId,
    pub causality: Vec<CausalityArrow>,
    pub sources: Vec<SourceSlot>,
    pub checks: Vec<Check>,
    index: HashMap<u64, StateId>,
    outgoing: Vec<Vec<usize>>,
}

impl PartialEq for Monitor {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.clock == other.clock
            && self.pattern == other.pattern
            && self.universe == other.universe
            && self.states == other.states
            && self.transitions == other.transitions
            && self.initial == other.initial
            && self.causality == other.causality
            && self.sources == other.sources
            && self.checks == other.checks
    }
}

impl Eq for Monitor {}

impl Monitor {
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        name: String,
        clock: String,
        pattern: Pattern,
        universe: BTreeSet<Symbol>,
        states: Vec<MonitorState>,
        transitions: Vec<Transition>,
        causality: Vec<CausalityArrow>,
        sources: Vec<SourceSlot>,
        checks: Vec<Check>,
    ) -> Self {
        let mut m = Monitor {
            name,
            clock,
            pattern,
            universe,
            states,
            transitions,
            initial: 0,
            causality,
            sources,
            checks,
            index: HashMap::new(),
            outgoing: Vec::new(),
        };
        m.reindex();
        m
    }

    /// Rebuilds lookup tables after the public fields were edited.
    pub fn reindex(&mut self) {
        self.index = self.states.iter().map(|s| (s.mask(), s.id)).collect();
        self.outgoing = vec![Vec::new(); self.states.len()];
        for (i, t) in self.transitions.iter().enumerate() {
            if let Some(v) = self.outgoing.get_mut(t.from) {
                v.push(i);
            }
        }
    }

    pub fn n(&self) -> usize {
        self.pattern.len()
    }

    pub fn state_by_mask(&self, mask: u64) -> Option<StateId> {
        self.index.get(&mask).copied()
    }

    pub fn outgoing(&self, s: StateId) -> impl Iterator<Item = &Transition> {
        self.outgoing
            .get(s)
            .into_iter()
            .flatten()
            .map(move |&i| &self.transitions[i])
    }

    /// Indices into `transitions` of the edges leaving `s`.
    pub fn outgoing_indices(&self, s: StateId) -> &[usize] {
        self.outgoing.get(s).map_or(&[], Vec::as_slice)
    }

    pub fn final_states(&self) -> impl Iterator<Item = &MonitorState> {
        self.states.iter().filter(|s| s.is_final)
    }

    pub fn with_name(mut self, name: &str, clock: &str) -> Self {
        self.name = name.to_string();
        self.clock = clock.to_string();
        self
    }

    /// Source slots whose entries are dropped when their attempt completes.
    pub fn local_sources(&self) -> impl Iterator<Item = &SourceSlot> {
        self.sources.iter().filter(|s| !s.cross)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NetKind {
    /// One monitor.
    Single,
    /// Any branch detects.
    Alt,
    /// Unbounded repetition of monitor 0, counting back-to-back iterations.
    Repeat,
    /// Monitor 0 is the antecedent, monitor 1 the consequent.
    Implies,
    /// One monitor per clock domain, linked through the scoreboard.
    Async,
}

impl fmt::Display for NetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NetKind::Single => "single",
            NetKind::Alt => "alt",
            NetKind::Repeat => "repeat",
            NetKind::Implies => "implies",
            NetKind::Async => "async",
        })
    }
}

/// Cross-domain arrow resolved to monitor indices and pattern positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CrossLink {
    pub source_monitor: usize,
    pub event: String,
    pub source_slot: usize,
    pub target_monitor: usize,
    pub target_event: String,
    pub target_slot: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonitorNet {
    pub name: String,
    pub symbols: SymbolTable,
    pub kind: NetKind,
    pub monitors: Vec<Monitor>,
    pub cross: Vec<CrossLink>,
    /// Mode declared by the spec; the runtime may override it.
    pub mode: Mode,
}
