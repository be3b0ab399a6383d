//! `.monitor` text format.
//!
//! ```text
//! cesc-monitor v1
//! net Handshake kind=single mode=detect
//! events req, ack
//! props busy
//! clocks c1
//! monitor 0 Handshake clock=c1 ticks=2
//! universe ack busy req
//! element 0 = req
//! element 1 = !busy | ack
//! arrow req@0 -> ack@1
//! source req@0 local
//! check chk(req@0)>1
//! state 0 {0} initial
//! trans 0 -> 1 ; req ; add(req@0) ; -
//! link 0 req@0 -> 1 resp@1
//! end
//! ```
//!
//! Lists are comma separated; `-` marks an empty list. Guards use the
//! expression syntax of chart files.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::chart::{CausalityArrow, Mode, OccurrenceRef};
use crate::expr::{Expr, Symbol, SymbolTable};

use super::{
    Action, Check, CheckSource, CrossLink, Monitor, MonitorNet, MonitorState, NetKind, Pattern,
    SourceSlot, SynthError, Transition,
};

const HEADER: &str = "cesc-monitor v1";

fn list<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        "-".into()
    } else {
        items.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ")
    }
}

fn names(items: &[String]) -> String {
    list(items)
}

pub fn write_net(net: &MonitorNet) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "net {} kind={} mode={}", net.name, net.kind, net.mode);
    let _ = writeln!(out, "events {}", names(&net.symbols.events));
    let _ = writeln!(out, "props {}", names(&net.symbols.props));
    let _ = writeln!(out, "clocks {}", names(&net.symbols.clocks));
    let _ = writeln!(out, "instances {}", names(&net.symbols.instances));
    for (i, m) in net.monitors.iter().enumerate() {
        let _ = writeln!(out, "monitor {i} {} clock={} ticks={}", m.name, m.clock, m.n());
        let universe: Vec<&str> = m.universe.iter().map(|s| s.name.as_str()).collect();
        let _ = writeln!(out, "universe {}", list(&universe));
        for (k, e) in m.pattern.elements.iter().enumerate() {
            let _ = writeln!(out, "element {k} = {e}");
        }
        for a in &m.causality {
            let _ = writeln!(out, "arrow {} -> {}", a.source, a.target);
        }
        for s in &m.sources {
            let scope = if s.cross { "cross" } else { "local" };
            let _ = writeln!(out, "source {}@{} {scope}", s.event, s.slot);
        }
        for c in &m.checks {
            let _ = writeln!(out, "check {c}");
        }
        for s in &m.states {
            let lengths: Vec<String> = s.matched_lengths.iter().map(usize::to_string).collect();
            let mut flags = String::new();
            if s.id == m.initial {
                flags.push_str(" initial");
            }
            if s.is_final {
                flags.push_str(" final");
            }
            let _ = writeln!(out, "state {} {{{}}}{flags}", s.id, lengths.join(","));
        }
        for t in &m.transitions {
            let _ = writeln!(
                out,
                "trans {} -> {} ; {} ; {} ; {}",
                t.from,
                t.to,
                t.guard,
                list(&t.actions),
                list(&t.checks)
            );
        }
    }
    for l in &net.cross {
        let _ = writeln!(
            out,
            "link {} {}@{} -> {} {}@{}",
            l.source_monitor, l.event, l.source_slot, l.target_monitor, l.target_event, l.target_slot
        );
    }
    out.push_str("end\n");
    out
}

struct Reader {
    line: usize,
}

impl Reader {
    fn err(&self, message: impl Into<String>) -> SynthError {
        SynthError::Format {
            line: self.line,
            message: message.into(),
        }
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T, SynthError> {
        s.trim()
            .parse()
            .map_err(|_| self.err(format!("expected a number, found `{s}`")))
    }

    fn kv<'a>(&self, s: &'a str, key: &str) -> Result<&'a str, SynthError> {
        s.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .ok_or_else(|| self.err(format!("expected `{key}=...`, found `{s}`")))
    }

    /// `e@s`
    fn at(&self, s: &str) -> Result<(String, usize), SynthError> {
        let (e, t) = s
            .trim()
            .split_once('@')
            .ok_or_else(|| self.err(format!("expected `event@tick`, found `{s}`")))?;
        Ok((e.to_string(), self.num(t)?))
    }

    fn action(&self, s: &str) -> Result<Action, SynthError> {
        let s = s.trim();
        if let Some(inner) = s.strip_prefix("add(").and_then(|r| r.strip_suffix(')')) {
            let (event, slot) = self.at(inner)?;
            return Ok(Action::Add { event, slot });
        }
        if let Some(inner) = s.strip_prefix("del(").and_then(|r| r.strip_suffix(')')) {
            let (at, thread) = inner
                .split_once('#')
                .ok_or_else(|| self.err(format!("malformed delete `{s}`")))?;
            let (event, slot) = self.at(at)?;
            return Ok(Action::Del {
                event,
                slot,
                thread: self.num(thread)?,
            });
        }
        Err(self.err(format!("unknown action `{s}`")))
    }

    fn check(&self, s: &str) -> Result<Check, SynthError> {
        let s = s.trim();
        let (head, thread) = s
            .rsplit_once(")>")
            .ok_or_else(|| self.err(format!("malformed check `{s}`")))?;
        let inner = head
            .strip_prefix("chk(")
            .ok_or_else(|| self.err(format!("malformed check `{s}`")))?;
        let (source, at) = match inner.strip_prefix('m').and_then(|r| r.split_once('.')) {
            Some((m, at)) if m.chars().all(|c| c.is_ascii_digit()) && !m.is_empty() => (
                CheckSource::Remote {
                    monitor: self.num(m)?,
                },
                at,
            ),
            _ => (CheckSource::Local, inner),
        };
        let (event, slot) = self.at(at)?;
        Ok(Check {
            event,
            slot,
            source,
            thread: self.num(thread)?,
        })
    }

    fn items<'a>(&self, s: &'a str) -> Vec<&'a str> {
        let s = s.trim();
        if s == "-" || s.is_empty() {
            Vec::new()
        } else {
            s.split(',').map(str::trim).collect()
        }
    }
}

#[derive(Default)]
struct Partial {
    name: String,
    clock: String,
    ticks: usize,
    universe: Vec<String>,
    elements: Vec<Expr>,
    causality: Vec<CausalityArrow>,
    sources: Vec<SourceSlot>,
    checks: Vec<Check>,
    states: Vec<MonitorState>,
    initial: Option<usize>,
    transitions: Vec<Transition>,
}

/// Parses the output of [`write_net`].
pub fn read_net(text: &str) -> Result<MonitorNet, SynthError> {
    let mut r = Reader { line: 0 };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut next = |r: &mut Reader| {
        lines.next().map(|(i, l)| {
            r.line = i + 1;
            l.trim()
        })
    };

    match next(&mut r) {
        Some(HEADER) => {}
        _ => return Err(SynthError::Format { line: 1, message: format!("expected `{HEADER}`") }),
    }
    let mut symbols = SymbolTable::default();
    let mut net_head: Option<(String, NetKind, Mode)> = None;
    let mut monitors: Vec<Partial> = Vec::new();
    let mut cross = Vec::new();
    let mut ended = false;

    while let Some(line) = next(&mut r) {
        let (word, rest) = line.split_once(' ').unwrap_or((line, ""));
        match word {
            "net" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [name, kind, mode] = parts.as_slice() else {
                    return Err(r.err("expected `net NAME kind=K mode=M`"));
                };
                let kind = match r.kv(kind, "kind")? {
                    "single" => NetKind::Single,
                    "alt" => NetKind::Alt,
                    "repeat" => NetKind::Repeat,
                    "implies" => NetKind::Implies,
                    "async" => NetKind::Async,
                    k => return Err(r.err(format!("unknown net kind `{k}`"))),
                };
                let mode: Mode = r
                    .kv(mode, "mode")?
                    .parse()
                    .map_err(|_| r.err("mode must be `detect` or `assert`"))?;
                net_head = Some((name.to_string(), kind, mode));
            }
            "events" => symbols.events = r.items(rest).into_iter().map(String::from).collect(),
            "props" => symbols.props = r.items(rest).into_iter().map(String::from).collect(),
            "clocks" => symbols.clocks = r.items(rest).into_iter().map(String::from).collect(),
            "instances" => {
                symbols.instances = r.items(rest).into_iter().map(String::from).collect()
            }
            "monitor" => {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                let [idx, name, clock, ticks] = parts.as_slice() else {
                    return Err(r.err("expected `monitor I NAME clock=C ticks=N`"));
                };
                if r.num::<usize>(idx)? != monitors.len() {
                    return Err(r.err("monitors must be numbered in order"));
                }
                monitors.push(Partial {
                    name: name.to_string(),
                    clock: r.kv(clock, "clock")?.to_string(),
                    ticks: r.num(r.kv(ticks, "ticks")?)?,
                    ..Default::default()
                });
            }
            "link" => {
                let (src, dst) = rest
                    .split_once("->")
                    .ok_or_else(|| r.err("expected `link I e@s -> J f@t`"))?;
                let side = |s: &str| -> Result<(usize, String, usize), SynthError> {
                    let (m, at) = s
                        .trim()
                        .split_once(' ')
                        .ok_or_else(|| r.err("expected `I e@s`"))?;
                    let (e, t) = r.at(at)?;
                    Ok((r.num(m)?, e, t))
                };
                let (sm, se, ss) = side(src)?;
                let (tm, te, ts) = side(dst)?;
                cross.push(CrossLink {
                    source_monitor: sm,
                    event: se,
                    source_slot: ss,
                    target_monitor: tm,
                    target_event: te,
                    target_slot: ts,
                });
            }
            "end" => {
                ended = true;
                break;
            }
            _ => {
                let m = monitors
                    .last_mut()
                    .ok_or_else(|| r.err(format!("`{word}` outside a monitor block")))?;
                match word {
                    "universe" => m.universe = r.items(rest).into_iter().map(String::from).collect(),
                    "element" => {
                        let (k, e) = rest
                            .split_once('=')
                            .ok_or_else(|| r.err("expected `element K = EXPR`"))?;
                        if r.num::<usize>(k)? != m.elements.len() {
                            return Err(r.err("elements must be numbered in order"));
                        }
                        m.elements.push(parse_guard(&r, e, &symbols)?);
                    }
                    "arrow" => {
                        let (a, b) = rest
                            .split_once("->")
                            .ok_or_else(|| r.err("expected `arrow e@s -> f@t`"))?;
                        let (ae, at) = r.at(a)?;
                        let (be, bt) = r.at(b)?;
                        m.causality.push(CausalityArrow::new(
                            OccurrenceRef::new(&ae, at),
                            OccurrenceRef::new(&be, bt),
                        ));
                    }
                    "source" => {
                        let (at, scope) = rest
                            .split_once(' ')
                            .ok_or_else(|| r.err("expected `source e@s local|cross`"))?;
                        let (event, slot) = r.at(at)?;
                        let cross = match scope.trim() {
                            "local" => false,
                            "cross" => true,
                            s => return Err(r.err(format!("unknown source scope `{s}`"))),
                        };
                        m.sources.push(SourceSlot { event, slot, cross });
                    }
                    "check" => m.checks.push(r.check(rest)?),
                    "state" => {
                        let (id, tail) = rest
                            .split_once(' ')
                            .ok_or_else(|| r.err("expected `state ID {..}`"))?;
                        let id: usize = r.num(id)?;
                        if id != m.states.len() {
                            return Err(r.err("states must be numbered in order"));
                        }
                        let open = tail.find('{').ok_or_else(|| r.err("missing `{`"))?;
                        let close = tail.find('}').ok_or_else(|| r.err("missing `}`"))?;
                        let matched_lengths = tail[open + 1..close]
                            .split(',')
                            .filter(|s| !s.trim().is_empty())
                            .map(|s| r.num(s))
                            .collect::<Result<BTreeSet<usize>, _>>()?;
                        let flags: Vec<&str> = tail[close + 1..].split_whitespace().collect();
                        if flags.contains(&"initial") {
                            m.initial = Some(id);
                        }
                        let is_final = flags.contains(&"final");
                        if is_final != matched_lengths.contains(&m.ticks) {
                            return Err(r.err(format!("state {id}: `final` must mark length {}", m.ticks)));
                        }
                        m.states.push(MonitorState {
                            id,
                            matched_lengths,
                            is_final,
                        });
                    }
                    "trans" => {
                        let parts: Vec<&str> = rest.split(" ; ").collect();
                        let [ends, guard, actions, checks] = parts.as_slice() else {
                            return Err(r.err("expected `trans A -> B ; GUARD ; ACTIONS ; CHECKS`"));
                        };
                        let (from, to) = ends
                            .split_once("->")
                            .ok_or_else(|| r.err("expected `A -> B`"))?;
                        m.transitions.push(Transition {
                            from: r.num(from)?,
                            to: r.num(to)?,
                            guard: parse_guard(&r, guard, &symbols)?,
                            actions: r
                                .items(actions)
                                .into_iter()
                                .map(|a| r.action(a))
                                .collect::<Result<_, _>>()?,
                            checks: r
                                .items(checks)
                                .into_iter()
                                .map(|c| r.check(c))
                                .collect::<Result<_, _>>()?,
                        });
                    }
                    other => return Err(r.err(format!("unknown directive `{other}`"))),
                }
            }
        }
    }
    if !ended {
        return Err(r.err("missing `end`"));
    }
    let (name, kind, mode) = net_head.ok_or(SynthError::Format {
        line: 2,
        message: "missing `net` line".into(),
    })?;

    let mut out = Vec::new();
    for p in monitors {
        if p.elements.len() != p.ticks {
            return Err(r.err(format!("monitor `{}` declares {} ticks but {} elements", p.name, p.ticks, p.elements.len())));
        }
        let count = p.states.len();
        if p.transitions.iter().any(|t| t.from >= count || t.to >= count) {
            return Err(r.err(format!("monitor `{}` has a transition to an unknown state", p.name)));
        }
        let universe = p
            .universe
            .iter()
            .map(|n| {
                symbols
                    .symbol(n)
                    .ok_or_else(|| r.err(format!("`{n}` is not declared")))
            })
            .collect::<Result<BTreeSet<Symbol>, _>>()?;
        let mut m = Monitor::assemble(
            p.name,
            p.clock,
            Pattern::new(p.elements),
            universe,
            p.states,
            p.transitions,
            p.causality,
            p.sources,
            p.checks,
        );
        m.initial = p.initial.ok_or_else(|| r.err(format!("monitor `{}` has no initial state", m.name)))?;
        out.push(m);
    }
    Ok(MonitorNet {
        name,
        symbols,
        kind,
        monitors: out,
        cross,
        mode,
    })
}

fn parse_guard(r: &Reader, text: &str, symbols: &SymbolTable) -> Result<Expr, SynthError> {
    Expr::parse(text.trim(), symbols).map_err(|e| r.err(e.to_string()))
}
