//! Clocked traces: one record per tick of the global clock.
//!
//! File format (`.trace`): UTF-8, one JSON object per line,
//!
//! ```text
//! {"i":0,"clk":["c1"],"ev":["req"],"prop":{"busy":false}}
//! ```
//!
//! `i` is the global index (strictly increasing), `clk` the clocks ticking on
//! this global tick, `ev` the events that occur (all others are false) and
//! `prop` the sampled value of every declared proposition. Blank lines and
//! lines starting with `#` are ignored. `clk` may be omitted when the spec
//! declares a single clock.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{SymbolKind, SymbolTable, Valuation};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("E_TRACE_FORMAT: line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("E_UNDECLARED_SYMBOL: line {line}: `{name}` is not declared")]
    Undeclared { line: usize, name: String },
    #[error("E_NONMONOTONIC_INDEX: line {line}: index {got} does not follow {prev}")]
    NonMonotonic { line: usize, prev: u64, got: u64 },
    #[error("E_UNKNOWN_CLOCK: clock `{0}` is not declared")]
    UnknownClock(String),
}

impl TraceError {
    pub fn code(&self) -> &'static str {
        match self {
            TraceError::Format { .. } => "E_TRACE_FORMAT",
            TraceError::Undeclared { .. } => "E_UNDECLARED_SYMBOL",
            TraceError::NonMonotonic { .. } => "E_NONMONOTONIC_INDEX",
            TraceError::UnknownClock(_) => "E_UNKNOWN_CLOCK",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TickRecord {
    pub global_index: u64,
    pub ticking_clocks: BTreeSet<String>,
    pub valuation: Valuation,
}

impl TickRecord {
    pub fn ticks(&self, clock: &str) -> bool {
        self.ticking_clocks.contains(clock)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Trace {
    pub records: Vec<TickRecord>,
    pub clocks: Vec<String>,
}

impl Trace {
    pub fn new(clocks: Vec<String>) -> Self {
        Trace {
            records: Vec::new(),
            clocks,
        }
    }

    /// Appends a record with the next global index.
    pub fn push<I, S>(&mut self, clocks: I, valuation: Valuation)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let global_index = self.records.last().map_or(0, |r| r.global_index + 1);
        self.records.push(TickRecord {
            global_index,
            ticking_clocks: clocks.into_iter().map(Into::into).collect(),
            valuation,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    i: u64,
    #[serde(default)]
    clk: Option<Vec<String>>,
    #[serde(default)]
    ev: Vec<String>,
    #[serde(default)]
    prop: BTreeMap<String, bool>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    i: u64,
    clk: Vec<&'a str>,
    ev: Vec<&'a str>,
    prop: BTreeMap<&'a str, bool>,
}

/// Reads a `.trace` stream against the declared symbols and clocks.
pub fn read_trace(text: &str, symtab: &SymbolTable) -> Result<Trace, TraceError> {
    let mut trace = Trace::new(symtab.clocks.clone());
    for (n, raw_line) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw_line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(body).map_err(|e| TraceError::Format {
            line,
            message: e.to_string(),
        })?;
        if let Some(prev) = trace.records.last().map(|r| r.global_index) {
            if raw.i <= prev {
                return Err(TraceError::NonMonotonic {
                    line,
                    prev,
                    got: raw.i,
                });
            }
        }
        let clocks = match raw.clk {
            Some(c) => c,
            None if symtab.clocks.len() == 1 => symtab.clocks.clone(),
            None => {
                return Err(TraceError::Format {
                    line,
                    message: "`clk` is required when more than one clock is declared".into(),
                })
            }
        };
        if clocks.is_empty() {
            return Err(TraceError::Format {
                line,
                message: "at least one clock must tick".into(),
            });
        }
        for c in &clocks {
            if !symtab.has_clock(c) {
                return Err(TraceError::Format {
                    line,
                    message: format!("clock `{c}` is not declared"),
                });
            }
        }
        let mut valuation = Valuation::all_false(symtab);
        for e in &raw.ev {
            match symtab.kind_of(e) {
                Some(SymbolKind::Event) => valuation.set(e.as_str(), true),
                Some(SymbolKind::Prop) => {
                    return Err(TraceError::Format {
                        line,
                        message: format!("`{e}` is a proposition; list it under `prop`"),
                    })
                }
                None => return Err(TraceError::Undeclared { line, name: e.clone() }),
            }
        }
        for (p, value) in &raw.prop {
            match symtab.kind_of(p) {
                Some(SymbolKind::Prop) => valuation.set(p.as_str(), *value),
                Some(SymbolKind::Event) => {
                    return Err(TraceError::Format {
                        line,
                        message: format!("`{p}` is an event; list it under `ev`"),
                    })
                }
                None => return Err(TraceError::Undeclared { line, name: p.clone() }),
            }
        }
        if let Some(missing) = symtab.props.iter().find(|p| !raw.prop.contains_key(*p)) {
            return Err(TraceError::Format {
                line,
                message: format!("proposition `{missing}` is not sampled"),
            });
        }
        trace.records.push(TickRecord {
            global_index: raw.i,
            ticking_clocks: clocks.into_iter().collect(),
            valuation,
        });
    }
    Ok(trace)
}

/// Emits the canonical `.trace` text; [`read_trace`] inverts it.
pub fn write_trace(trace: &Trace, symtab: &SymbolTable) -> String {
    let mut out = String::new();
    for r in &trace.records {
        let rec = OutRecord {
            i: r.global_index,
            clk: r.ticking_clocks.iter().map(String::as_str).collect(),
            ev: symtab
                .events
                .iter()
                .filter(|e| r.valuation.get(e) == Some(true))
                .map(String::as_str)
                .collect(),
            prop: symtab
                .props
                .iter()
                .map(|p| (p.as_str(), r.valuation.get(p).unwrap_or(false)))
                .collect(),
        };
        out.push_str(&serde_json::to_string(&rec).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

/// The records on which `clock` ticks, in order, with their global indices.
pub fn project<'a>(trace: &'a Trace, clock: &str) -> Result<Vec<(u64, &'a Valuation)>, TraceError> {
    if !trace.clocks.iter().any(|c| c == clock) {
        return Err(TraceError::UnknownClock(clock.to_string()));
    }
    Ok(trace
        .records
        .iter()
        .filter(|r| r.ticks(clock))
        .map(|r| (r.global_index, &r.valuation))
        .collect())
}
