//! Executes a monitor net over a clocked trace.
//!
//! Within one global tick every monitor whose clock ticks takes exactly one
//! transition. Scoreboard checks read the snapshot committed at the end of
//! the previous tick, so the order in which monitors step never matters.

use std::collections::{BTreeSet, VecDeque};
use std::fmt::{self, Write};
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::chart::Mode;
use crate::expr::{CompiledExpr, ExprError};
use crate::scoreboard::{AttemptId, Scope, Scoreboard, ScoreboardError};
use crate::synth::{Action, CheckSource, MonitorNet, NetKind, StateId};
use crate::trace::{TickRecord, Trace};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RuntimeError {
    #[error("E_NO_TRANSITION: monitor `{monitor}` has no successor from state {state} at tick {tick}")]
    NoTransition {
        monitor: String,
        state: StateId,
        tick: u64,
    },
    #[error("E_ASSERT_NOT_IMPL: assert mode needs an `implies` chart, `{0}` is not one")]
    AssertNotImpl(String),
    #[error("E_UNKNOWN_CLOCK: monitor clock `{0}` is not declared")]
    UnknownClock(String),
    #[error(transparent)]
    Scoreboard(#[from] ScoreboardError),
    #[error(transparent)]
    Expr(#[from] ExprError),
}

impl RuntimeError {
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::NoTransition { .. } => "E_NO_TRANSITION",
            RuntimeError::AssertNotImpl(_) => "E_ASSERT_NOT_IMPL",
            RuntimeError::UnknownClock(_) => "E_UNKNOWN_CLOCK",
            RuntimeError::Scoreboard(e) => e.code(),
            RuntimeError::Expr(e) => e.code(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VerdictKind {
    Detected,
    Pass,
    Fail,
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictKind::Detected => "DETECTED",
            VerdictKind::Pass => "PASS",
            VerdictKind::Fail => "FAIL",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub global_tick: u64,
    pub chart: String,
    pub detail: String,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {}", self.kind, self.global_tick, self.chart, self.detail)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonitorStats {
    pub name: String,
    pub clock: String,
    pub states: usize,
    pub visited: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub chart: String,
    pub mode: String,
    pub ticks: u64,
    pub detected: usize,
    pub pass: usize,
    pub fail: usize,
    pub inconclusive: usize,
    pub scoreboard_adds: u64,
    pub scoreboard_dels: u64,
    pub abandoned_attempts: u64,
    pub balance_violations: u64,
    pub exit: i32,
    pub monitors: Vec<MonitorStats>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerdictReport {
    pub verdicts: Vec<Verdict>,
    pub summary: Summary,
}

impl VerdictReport {
    /// 0 when the property holds (a top-level detection in detect mode, no
    /// failure in assert mode), 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        self.summary.exit
    }

    /// One verdict per line, then `summary {json}`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for v in &self.verdicts {
            let _ = writeln!(out, "{v}");
        }
        let _ = writeln!(
            out,
            "summary {}",
            serde_json::to_string(&self.summary).expect("summary serializes")
        );
        out
    }
}

#[derive(Clone, Debug)]
struct Instance {
    monitor: usize,
    owner: u32,
    state: StateId,
    consumed: u64,
}

#[derive(Clone, Debug)]
struct Obligation {
    inst: Instance,
    antecedent_tick: u64,
}

#[derive(Clone, Debug)]
struct StepOutcome {
    finished: bool,
    mask: u64,
}

/// Mutable state of one run: monitor instances, open obligations and the scoreboard.
#[derive(Clone, Debug)]
pub struct RunState<'a> {
    net: &'a MonitorNet,
    guards: Arc<Vec<Vec<CompiledExpr>>>,
    mode: Mode,
    statics: Vec<Instance>,
    obligations: Vec<Obligation>,
    next_owner: u32,
    scoreboard: Scoreboard,
    /// Global index of every domain tick seen so far, per monitor clock.
    domain_ticks: Vec<Vec<u64>>,
    /// Iteration count of recent detections of a repeat net, by domain index.
    iterations: VecDeque<(u64, u64)>,
    seen: Vec<bool>,
    visited: Vec<BTreeSet<StateId>>,
    ticks: u64,
    adds: u64,
    dels: u64,
    abandoned: u64,
    violations: u64,
    pending_audit: Vec<AttemptId>,
    verdicts: Vec<Verdict>,
}

fn domain_of(net: &MonitorNet, monitor: usize) -> usize {
    net.symbols
        .clocks
        .iter()
        .position(|c| *c == net.monitors[monitor].clock)
        .unwrap_or(0)
}

impl<'a> RunState<'a> {
    pub fn new(net: &'a MonitorNet, mode: Mode) -> Result<Self, RuntimeError> {
        if mode == Mode::Assert && net.kind != NetKind::Implies {
            return Err(RuntimeError::AssertNotImpl(net.name.clone()));
        }
        for m in &net.monitors {
            if !net.symbols.has_clock(&m.clock) {
                return Err(RuntimeError::UnknownClock(m.clock.clone()));
            }
        }
        let guards = net
            .monitors
            .iter()
            .map(|m| {
                m.transitions
                    .iter()
                    .map(|t| t.guard.compile(&net.symbols))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let static_count = if net.kind == NetKind::Implies { 1 } else { net.monitors.len() };
        let statics = (0..static_count)
            .map(|i| Instance {
                monitor: i,
                owner: i as u32,
                state: net.monitors[i].initial,
                consumed: 0,
            })
            .collect();
        Ok(RunState {
            net,
            guards: Arc::new(guards),
            mode,
            statics,
            obligations: Vec::new(),
            next_owner: net.monitors.len() as u32,
            scoreboard: Scoreboard::new(net.symbols.events.iter().cloned()),
            domain_ticks: vec![Vec::new(); net.symbols.clocks.len()],
            iterations: VecDeque::new(),
            seen: vec![false; net.monitors.len()],
            visited: net.monitors.iter().map(|m| BTreeSet::from([m.initial])).collect(),
            ticks: 0,
            adds: 0,
            dels: 0,
            abandoned: 0,
            violations: 0,
            pending_audit: Vec::new(),
            verdicts: Vec::new(),
        })
    }

    pub fn scoreboard(&self) -> &Scoreboard {
        &self.scoreboard
    }

    pub fn open_obligations(&self) -> usize {
        self.obligations.len()
    }

    /// Number of stepping units this tick: static monitors, then open obligations.
    pub fn units(&self) -> usize {
        self.statics.len() + self.obligations.len()
    }

    pub fn step(&mut self, rec: &TickRecord) -> Result<Vec<Verdict>, RuntimeError> {
        let order: Vec<usize> = (0..self.units()).collect();
        self.step_ordered(rec, &order)
    }

    /// Steps the units in the given order (a permutation of `0..units()`).
    pub fn step_ordered(&mut self, rec: &TickRecord, order: &[usize]) -> Result<Vec<Verdict>, RuntimeError> {
        let net = self.net;
        let bits = rec.valuation.to_bits(&net.symbols);
        let global = rec.global_index;
        for (i, c) in net.symbols.clocks.iter().enumerate() {
            if rec.ticks(c) {
                self.domain_ticks[i].push(global);
            }
        }

        let nstat = self.statics.len();
        let mut stat_out: Vec<Option<StepOutcome>> = vec![None; nstat];
        let mut obl_out: Vec<Option<StepOutcome>> = vec![None; self.obligations.len()];
        for &u in order {
            if u < nstat {
                let mut inst = self.statics[u].clone();
                if rec.ticks(&net.monitors[inst.monitor].clock) {
                    stat_out[u] = Some(self.advance(&mut inst, &bits, global)?);
                }
                self.statics[u] = inst;
            } else if let Some(ob) = self.obligations.get(u - nstat) {
                let mut inst = ob.inst.clone();
                if rec.ticks(&net.monitors[inst.monitor].clock) {
                    obl_out[u - nstat] = Some(self.advance(&mut inst, &bits, global)?);
                }
                self.obligations[u - nstat].inst = inst;
            }
        }

        let mut out = Vec::new();
        match net.kind {
            NetKind::Single => {
                if let Some(o) = &stat_out[0] {
                    if o.finished {
                        out.push(self.detected(&net.name, global, format!("start={}", self.window_start(0, net.monitors[0].n() as u64))));
                    }
                }
            }
            NetKind::Alt => {
                let hits: Vec<&str> = stat_out
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| o.as_ref().is_some_and(|o| o.finished))
                    .map(|(i, _)| net.monitors[i].name.as_str())
                    .collect();
                if !hits.is_empty() {
                    let detail = format!("branches={}", hits.join(","));
                    out.push(self.detected(&net.name, global, detail));
                }
            }
            NetKind::Repeat => {
                if let Some(o) = &stat_out[0] {
                    let n = net.monitors[0].n() as u64;
                    let d = self.statics[0].consumed - 1;
                    while self.iterations.front().is_some_and(|(i, _)| i + n < d) {
                        self.iterations.pop_front();
                    }
                    if o.finished {
                        let prev = if d >= n {
                            self.iterations.iter().find(|(i, _)| *i == d - n).map(|(_, k)| *k)
                        } else {
                            None
                        };
                        let k = prev.unwrap_or(0) + 1;
                        self.iterations.push_back((d, k));
                        let start = self.window_start(0, n * k);
                        out.push(self.detected(&net.name, global, format!("start={start} iterations={k}")));
                    }
                }
            }
            NetKind::Async => {
                let mut any = false;
                for (i, o) in stat_out.iter().enumerate() {
                    if o.as_ref().is_some_and(|o| o.finished) {
                        any = true;
                        self.seen[i] = true;
                        let m = &net.monitors[i];
                        let start = self.window_start(i, m.n() as u64);
                        out.push(self.detected(&m.name, global, format!("start={start}")));
                    }
                }
                if any && self.seen.iter().all(|&s| s) {
                    let detail = format!("components={}", self.seen.len());
                    out.push(self.detected(&net.name, global, detail));
                }
            }
            NetKind::Implies => {
                let n = net.monitors[1].n() as u64;
                let mut keep = Vec::new();
                let obligations = std::mem::take(&mut self.obligations);
                for (ob, o) in obligations.into_iter().zip(obl_out) {
                    let Some(o) = o else {
                        keep.push(ob);
                        continue;
                    };
                    let q = ob.inst.consumed;
                    let detail = format!("antecedent={}", ob.antecedent_tick);
                    if o.mask >> q & 1 == 0 {
                        self.scoreboard.purge_owner(ob.inst.owner);
                        if self.mode == Mode::Assert {
                            out.push(self.verdict(VerdictKind::Fail, &net.name, global, detail));
                        }
                    } else if q == n {
                        self.scoreboard.purge_owner(ob.inst.owner);
                        let kind = match self.mode {
                            Mode::Assert => VerdictKind::Pass,
                            Mode::Detect => VerdictKind::Detected,
                        };
                        out.push(self.verdict(kind, &net.name, global, detail));
                    } else {
                        keep.push(ob);
                    }
                }
                self.obligations = keep;
                if stat_out[0].as_ref().is_some_and(|o| o.finished) {
                    let owner = self.next_owner;
                    self.next_owner += 1;
                    self.obligations.push(Obligation {
                        inst: Instance {
                            monitor: 1,
                            owner,
                            state: net.monitors[1].initial,
                            consumed: 0,
                        },
                        antecedent_tick: global,
                    });
                }
            }
        }

        self.scoreboard.commit();
        for a in std::mem::take(&mut self.pending_audit) {
            if self.scoreboard.entries_of(a).next().is_some() {
                self.violations += 1;
            }
        }
        self.ticks += 1;
        self.verdicts.extend(out.iter().cloned());
        Ok(out)
    }

    fn verdict(&self, kind: VerdictKind, chart: &str, global: u64, detail: String) -> Verdict {
        Verdict {
            kind,
            global_tick: global,
            chart: chart.to_string(),
            detail,
        }
    }

    fn detected(&self, chart: &str, global: u64, detail: String) -> Verdict {
        self.verdict(VerdictKind::Detected, chart, global, detail)
    }

    /// Global tick of the first of the last `len` ticks of monitor `m`'s clock.
    fn window_start(&self, m: usize, len: u64) -> u64 {
        let ticks = &self.domain_ticks[domain_of(self.net, m)];
        ticks[ticks.len().saturating_sub(len as usize)]
    }

    fn advance(&mut self, inst: &mut Instance, bits: &[bool], global: u64) -> Result<StepOutcome, RuntimeError> {
        let net = self.net;
        let m = &net.monitors[inst.monitor];
        let guards = &self.guards[inst.monitor];
        let d = inst.consumed;
        let owner = inst.owner;
        let attempt = |len: usize| AttemptId {
            owner,
            start: d.saturating_sub(len as u64),
        };
        let no_transition = || RuntimeError::NoTransition {
            monitor: m.name.clone(),
            state: inst.state,
            tick: global,
        };
        let ti = *m
            .outgoing_indices(inst.state)
            .iter()
            .find(|&&i| guards[i].eval(bits))
            .ok_or_else(no_transition)?;
        let t = &m.transitions[ti];

        let mut abandoned: Vec<AttemptId> = Vec::new();
        for a in &t.actions {
            match a {
                Action::Add { event, slot } => {
                    self.scoreboard.add_evt(event, global, &m.clock, attempt(*slot), *slot)?;
                    self.adds += 1;
                }
                Action::Del { event, thread, .. } => {
                    self.scoreboard.del_evt(event, attempt(*thread));
                    self.dels += 1;
                    abandoned.push(attempt(*thread));
                }
            }
        }
        let mut mask = m.states[t.to].mask();
        let mut failed: Vec<usize> = Vec::new();
        for c in &t.checks {
            let scope = match c.source {
                CheckSource::Local => Scope {
                    attempt: Some(attempt(c.thread)),
                    slot: Some(c.slot),
                    ..Default::default()
                },
                CheckSource::Remote { monitor } => Scope {
                    owner: Some(monitor as u32),
                    slot: Some(c.slot),
                    ..Default::default()
                },
            };
            if !self.scoreboard.chk_scoped(&c.event, &scope)? {
                mask &= !(1u64 << (c.thread + 1));
                if !failed.contains(&c.thread) {
                    failed.push(c.thread);
                }
            }
        }
        for &j in &failed {
            for s in m.sources.iter().filter(|s| s.slot <= j) {
                self.scoreboard.del_evt(&s.event, attempt(j));
                self.dels += 1;
            }
            if m.sources.iter().any(|s| s.slot <= j) {
                abandoned.push(attempt(j));
            }
        }
        abandoned.sort();
        abandoned.dedup();
        self.abandoned += abandoned.len() as u64;
        self.pending_audit.extend(abandoned);

        let next = m.state_by_mask(mask).ok_or_else(no_transition)?;
        inst.state = next;
        inst.consumed += 1;
        self.visited[inst.monitor].insert(next);
        let n = m.n();
        let finished = mask >> n & 1 == 1;
        if finished {
            let done = AttemptId {
                owner,
                start: (d + 1).saturating_sub(n as u64),
            };
            for s in m.local_sources() {
                self.scoreboard.del_evt(&s.event, done);
            }
        }
        Ok(StepOutcome { finished, mask })
    }

    /// Closes the run; open obligations count as inconclusive.
    pub fn finish(self) -> VerdictReport {
        let net = self.net;
        let count = |k: VerdictKind| self.verdicts.iter().filter(|v| v.kind == k).count();
        let (detected, pass, fail) = (
            count(VerdictKind::Detected),
            count(VerdictKind::Pass),
            count(VerdictKind::Fail),
        );
        let exit = match self.mode {
            Mode::Detect => {
                i32::from(!self.verdicts.iter().any(|v| v.kind == VerdictKind::Detected && v.chart == net.name))
            }
            Mode::Assert => i32::from(fail > 0),
        };
        let summary = Summary {
            chart: net.name.clone(),
            mode: self.mode.to_string(),
            ticks: self.ticks,
            detected,
            pass,
            fail,
            inconclusive: if self.mode == Mode::Assert { self.obligations.len() } else { 0 },
            scoreboard_adds: self.adds,
            scoreboard_dels: self.dels,
            abandoned_attempts: self.abandoned,
            balance_violations: self.violations,
            exit,
            monitors: net
                .monitors
                .iter()
                .zip(&self.visited)
                .map(|(m, v)| MonitorStats {
                    name: m.name.clone(),
                    clock: m.clock.clone(),
                    states: m.states.len(),
                    visited: v.len(),
                })
                .collect(),
        };
        VerdictReport {
            verdicts: self.verdicts,
            summary,
        }
    }
}

/// Runs `net` over the whole trace.
pub fn run(net: &MonitorNet, t: &Trace, mode: Mode) -> Result<VerdictReport, RuntimeError> {
    let mut rs = RunState::new(net, mode)?;
    for rec in &t.records {
        rs.step(rec)?;
    }
    Ok(rs.finish())
}

/// Like [`run`], stepping the monitors of each tick in a random order.
pub fn run_shuffled<R: Rng>(net: &MonitorNet, t: &Trace, mode: Mode, rng: &mut R) -> Result<VerdictReport, RuntimeError> {
    let mut rs = RunState::new(net, mode)?;
    for rec in &t.records {
        let mut order: Vec<usize> = (0..rs.units()).collect();
        order.shuffle(rng);
        rs.step_ordered(rec, &order)?;
    }
    Ok(rs.finish())
}
