//! Clocked event sequence charts: a small chart language for clocked
//! interaction scenarios, synthesis of sliding-window monitors from charts,
//! and a runtime that checks clocked traces against them.

pub mod chart;
pub mod expr;
pub mod gen;
mod lex;
pub mod oracle;
pub mod runtime;
pub mod scoreboard;
pub mod synth;
pub mod trace;

pub use chart::{parse_spec, validate, ChartExpr, Diagnostic, Mode, Scesc, SpecFile};
pub use gen::{GenConfig, Generated, Mutation, Schedule};
pub use oracle::{exhaustive_equiv, expected, random_equiv, window_match, Expected, MatchRecord};
pub use runtime::{run, RunState, Verdict, VerdictKind, VerdictReport};
pub use expr::{Expr, Symbol, SymbolKind, SymbolTable, Valuation};
pub use scoreboard::{AttemptId, Scoreboard};
pub use synth::{synthesize, Monitor, MonitorNet, Pattern, SynthError};
pub use trace::{read_trace, write_trace, Trace};
