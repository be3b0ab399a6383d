//! Reference semantics by direct enumeration.
//!
//! Charts are matched against every window of the projected trace,
//! occurrence by occurrence, with causality arrows re-checked on the raw
//! valuations. Nothing here consults patterns or synthesized automata, so
//! the monitors can be validated against it.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use thiserror::Error;

use crate::chart::{ChartExpr, EventOccurrence, LoopCount, Mode, Polarity, Scesc};
use crate::expr::{Symbol, Valuation};
use crate::runtime::{RunState, RuntimeError, Verdict, VerdictKind};
use crate::synth::MonitorNet;
use crate::trace::{project, TickRecord, Trace, TraceError};

/// Default bound on the number of traces an exhaustive check may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("E_UNSUPPORTED_NESTING: {0}")]
    Unsupported(String),
    #[error("E_ARROW_SCOPE: {0}")]
    ArrowScope(String),
    #[error("E_ENUMERATION_TOO_LARGE: {count} traces exceed the cap of {cap}")]
    EnumerationTooLarge { count: u128, cap: u64 },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl OracleError {
    pub fn code(&self) -> &'static str {
        match self {
            OracleError::Unsupported(_) => "E_UNSUPPORTED_NESTING",
            OracleError::ArrowScope(_) => "E_ARROW_SCOPE",
            OracleError::EnumerationTooLarge { .. } => "E_ENUMERATION_TOO_LARGE",
            OracleError::Trace(e) => e.code(),
            OracleError::Runtime(e) => e.code(),
        }
    }
}

/// One matching window of a chart component, in global ticks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MatchRecord {
    pub chart: String,
    pub start: u64,
    pub end: u64,
    /// Every arrow of the component, each satisfied by this window.
    pub arrows: Vec<String>,
}

/// Verdicts the runtime must produce, plus obligations still open at the end.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Expected {
    pub verdicts: Vec<Verdict>,
    pub unresolved: usize,
}

type Domain<'t> = Vec<(u64, &'t Valuation)>;

pub(crate) fn event_true(v: &Valuation, e: &str) -> bool {
    v.get(e) == Some(true)
}

pub(crate) fn occurrence_holds(o: &EventOccurrence, v: &Valuation) -> bool {
    let ev = event_true(v, &o.event.name);
    let lit = match o.polarity {
        Polarity::Present => ev,
        Polarity::Absent => !ev,
    };
    match &o.guard {
        Some(g) => !g.eval(v).unwrap_or(false) || lit,
        None => lit,
    }
}

pub(crate) struct Placed<'c> {
    pub(crate) leaf: &'c Scesc,
    pub(crate) offset: usize,
}

/// A fixed-length composition: leaves placed at tick offsets.
pub(crate) struct Shape<'c> {
    pub(crate) label: String,
    pub(crate) clock: String,
    pub(crate) len: usize,
    pub(crate) leaves: Vec<Placed<'c>>,
}

pub(crate) fn shape(c: &ChartExpr) -> Result<Shape<'_>, OracleError> {
    Ok(match c {
        ChartExpr::Leaf(s) => Shape {
            label: s.name.clone(),
            clock: s.clock.clone(),
            len: s.tick_count,
            leaves: vec![Placed { leaf: s, offset: 0 }],
        },
        ChartExpr::Seq(a, b) => {
            let (x, y) = (shape(a)?, shape(b)?);
            let shift = x.len;
            let mut leaves = x.leaves;
            leaves.extend(y.leaves.into_iter().map(|p| Placed {
                leaf: p.leaf,
                offset: p.offset + shift,
            }));
            Shape {
                label: c.label(),
                clock: x.clock,
                len: x.len + y.len,
                leaves,
            }
        }
        ChartExpr::Par { left, right, pad } => {
            let (x, y) = (shape(left)?, shape(right)?);
            if x.len != y.len && !pad {
                return Err(OracleError::Unsupported(format!(
                    "`{}` joins components of different lengths",
                    c.label()
                )));
            }
            let mut leaves = x.leaves;
            leaves.extend(y.leaves);
            Shape {
                label: c.label(),
                clock: x.clock,
                len: x.len.max(y.len),
                leaves,
            }
        }
        ChartExpr::Loop {
            body,
            count: LoopCount::Times(k),
        } => {
            let b = shape(body)?;
            let mut leaves = Vec::new();
            for i in 0..*k {
                leaves.extend(b.leaves.iter().map(|p| Placed {
                    leaf: p.leaf,
                    offset: p.offset + i * b.len,
                }));
            }
            Shape {
                label: c.label(),
                clock: b.clock,
                len: b.len * k,
                leaves,
            }
        }
        other => {
            return Err(OracleError::Unsupported(format!(
                "`{}` is not a fixed-length composition",
                other.label()
            )))
        }
    })
}

impl Shape<'_> {
    /// Window position `p` of the window starting at domain index `s`:
    /// every occurrence placed there holds and every arrow ending there saw its cause.
    fn position_holds(&self, dom: &Domain, s: usize, p: usize) -> bool {
        let v = dom[s + p].1;
        for pl in &self.leaves {
            if p < pl.offset || p >= pl.offset + pl.leaf.tick_count {
                continue;
            }
            let local = p - pl.offset;
            if !pl
                .leaf
                .occurrences
                .iter()
                .filter(|o| o.tick == local)
                .all(|o| occurrence_holds(o, v))
            {
                return false;
            }
            for a in pl.leaf.arrows.iter().filter(|a| a.target.tick == local) {
                if !event_true(dom[s + pl.offset + a.source.tick].1, &a.source.event) {
                    return false;
                }
            }
        }
        true
    }

    fn window_holds(&self, dom: &Domain, s: usize) -> bool {
        s + self.len <= dom.len() && (0..self.len).all(|p| self.position_holds(dom, s, p))
    }

    fn arrow_names(&self) -> Vec<String> {
        self.leaves
            .iter()
            .flat_map(|pl| {
                pl.leaf
                    .arrows
                    .iter()
                    .map(move |a| format!("{}.{}->{}", pl.leaf.name, a.source, a.target))
            })
            .collect()
    }

    /// Absolute window position of `leaf`'s tick, when the leaf is placed once.
    pub(crate) fn position_of(&self, leaf: &str, tick: usize) -> Option<usize> {
        let mut hits = self.leaves.iter().filter(|p| p.leaf.name == leaf);
        match (hits.next(), hits.next()) {
            (Some(p), None) => Some(p.offset + tick),
            _ => None,
        }
    }
}

pub(crate) fn alt_branches<'a>(c: &'a ChartExpr, out: &mut Vec<&'a ChartExpr>) {
    match c {
        ChartExpr::Alt(a, b) => {
            alt_branches(a, out);
            alt_branches(b, out);
        }
        other => out.push(other),
    }
}

fn detected(chart: &str, tick: u64, detail: String) -> Verdict {
    Verdict {
        kind: VerdictKind::Detected,
        global_tick: tick,
        chart: chart.to_string(),
        detail,
    }
}

struct Cross {
    src: usize,
    src_pos: usize,
    event: String,
    tgt: usize,
    tgt_pos: usize,
}

/// Asynchronous composition: per-domain windows linked by cross arrows,
/// which compare global ticks.
struct AsyncCtx<'c, 't> {
    shapes: Vec<Shape<'c>>,
    doms: Vec<Domain<'t>>,
    cross: Vec<Cross>,
    memo: HashMap<(usize, usize, usize), bool>,
}

impl AsyncCtx<'_, '_> {
    fn new<'c, 't>(children: &'c [ChartExpr], arrows: &[crate::chart::CrossArrow], t: &'t Trace) -> Result<AsyncCtx<'c, 't>, OracleError> {
        let shapes = children.iter().map(shape).collect::<Result<Vec<_>, _>>()?;
        let doms = shapes
            .iter()
            .map(|s| project(t, &s.clock))
            .collect::<Result<Vec<_>, _>>()?;
        let locate = |chart: &str, tick: usize| -> Result<(usize, usize), OracleError> {
            let found: Vec<(usize, usize)> = shapes
                .iter()
                .enumerate()
                .filter(|(_, s)| s.leaves.iter().any(|p| p.leaf.name == chart))
                .map(|(i, s)| s.position_of(chart, tick).map(|p| (i, p)))
                .collect::<Option<_>>()
                .ok_or_else(|| OracleError::ArrowScope(format!("`{chart}` is placed more than once")))?;
            match found.as_slice() {
                [one] => Ok(*one),
                _ => Err(OracleError::ArrowScope(format!("`{chart}` does not name one component"))),
            }
        };
        let mut cross = Vec::new();
        for a in arrows {
            let (src, src_pos) = locate(&a.source.chart, a.source.tick)?;
            let (tgt, tgt_pos) = locate(&a.target.chart, a.target.tick)?;
            cross.push(Cross {
                src,
                src_pos,
                event: a.source.event.clone(),
                tgt,
                tgt_pos,
            });
        }
        Ok(AsyncCtx {
            shapes,
            doms,
            cross,
            memo: HashMap::new(),
        })
    }

    /// Positions `0..=p` of `child`'s window starting at `s` all hold.
    fn prefix_holds(&mut self, child: usize, s: usize, p: usize) -> bool {
        if s + p >= self.doms[child].len() {
            return false;
        }
        if let Some(&b) = self.memo.get(&(child, s, p)) {
            return b;
        }
        let mut ok = p == 0 || self.prefix_holds(child, s, p - 1);
        ok = ok && self.shapes[child].position_holds(&self.doms[child], s, p);
        if ok {
            let g = self.doms[child][s + p].0;
            let due: Vec<usize> = (0..self.cross.len())
                .filter(|&i| self.cross[i].tgt == child && self.cross[i].tgt_pos == p)
                .collect();
            for i in due {
                if !self.cause_seen(i, g) {
                    ok = false;
                    break;
                }
            }
        }
        self.memo.insert((child, s, p), ok);
        ok
    }

    /// Some window of the source component saw the cause strictly before
    /// global tick `g` and had not been abandoned before `g`.
    fn cause_seen(&mut self, arrow: usize, g: u64) -> bool {
        let (src, pos) = (self.cross[arrow].src, self.cross[arrow].src_pos);
        let len = self.shapes[src].len;
        let n = self.doms[src].len();
        for sx in 0..n {
            if sx + pos >= n {
                break;
            }
            let (gi, v) = self.doms[src][sx + pos];
            if gi >= g || !event_true(v, &self.cross[arrow].event) {
                continue;
            }
            let mut q = pos;
            while q + 1 < len && sx + q + 1 < n && self.doms[src][sx + q + 1].0 < g {
                q += 1;
            }
            if self.prefix_holds(src, sx, q) {
                return true;
            }
        }
        false
    }

    /// Window starts of every complete match of `child`.
    fn matches(&mut self, child: usize) -> Vec<usize> {
        let len = self.shapes[child].len;
        let n = self.doms[child].len();
        (0..n.saturating_sub(len - 1))
            .filter(|&s| self.prefix_holds(child, s, len - 1))
            .collect()
    }
}

/// Verdicts a correct runtime emits for `c` (named `name`) over `t`.
pub fn expected(name: &str, c: &ChartExpr, t: &Trace, mode: Mode) -> Result<Expected, OracleError> {
    let mut out = Expected::default();
    match c {
        ChartExpr::Alt(..) => {
            let mut branches = Vec::new();
            alt_branches(c, &mut branches);
            let shapes = branches.into_iter().map(shape).collect::<Result<Vec<_>, _>>()?;
            let dom = project(t, &shapes[0].clock)?;
            for e in 0..dom.len() {
                let hits: Vec<&str> = shapes
                    .iter()
                    .filter(|s| e + 1 >= s.len && s.window_holds(&dom, e + 1 - s.len))
                    .map(|s| s.label.as_str())
                    .collect();
                if !hits.is_empty() {
                    out.verdicts
                        .push(detected(name, dom[e].0, format!("branches={}", hits.join(","))));
                }
            }
        }
        ChartExpr::Loop {
            body,
            count: LoopCount::Unbounded,
        } => {
            let b = shape(body)?;
            let dom = project(t, &b.clock)?;
            let n = b.len;
            let mut iters = vec![0usize; dom.len()];
            for e in 0..dom.len() {
                if e + 1 >= n && b.window_holds(&dom, e + 1 - n) {
                    let prev = if e >= n { iters[e - n] } else { 0 };
                    iters[e] = prev + 1;
                    let start = dom[e + 1 - n * iters[e]].0;
                    out.verdicts.push(detected(
                        name,
                        dom[e].0,
                        format!("start={start} iterations={}", iters[e]),
                    ));
                }
            }
        }
        ChartExpr::Implies {
            antecedent,
            consequent,
        } => {
            let (a, q) = (shape(antecedent)?, shape(consequent)?);
            let dom = project(t, &a.clock)?;
            for e in 0..dom.len() {
                if e + 1 < a.len || !a.window_holds(&dom, e + 1 - a.len) {
                    continue;
                }
                let detail = format!("antecedent={}", dom[e].0);
                let s = e + 1;
                let mut resolved = false;
                for p in 0..q.len {
                    if s + p >= dom.len() {
                        break;
                    }
                    if !q.position_holds(&dom, s, p) {
                        if mode == Mode::Assert {
                            out.verdicts.push(Verdict {
                                kind: VerdictKind::Fail,
                                global_tick: dom[s + p].0,
                                chart: name.to_string(),
                                detail: detail.clone(),
                            });
                        }
                        resolved = true;
                        break;
                    }
                    if p + 1 == q.len {
                        let kind = match mode {
                            Mode::Assert => VerdictKind::Pass,
                            Mode::Detect => VerdictKind::Detected,
                        };
                        out.verdicts.push(Verdict {
                            kind,
                            global_tick: dom[s + p].0,
                            chart: name.to_string(),
                            detail: detail.clone(),
                        });
                        resolved = true;
                    }
                }
                if !resolved {
                    out.unresolved += 1;
                }
            }
        }
        ChartExpr::AsyncPar { children, arrows } => {
            let mut ctx = AsyncCtx::new(children, arrows, t)?;
            let mut ends: Vec<(u64, usize, u64)> = Vec::new();
            for i in 0..children.len() {
                let len = ctx.shapes[i].len;
                for s in ctx.matches(i) {
                    ends.push((ctx.doms[i][s + len - 1].0, i, ctx.doms[i][s].0));
                }
            }
            ends.sort();
            let mut seen = vec![false; children.len()];
            let mut k = 0;
            while k < ends.len() {
                let tick = ends[k].0;
                while k < ends.len() && ends[k].0 == tick {
                    let (_, i, start) = ends[k];
                    seen[i] = true;
                    out.verdicts
                        .push(detected(&ctx.shapes[i].label, tick, format!("start={start}")));
                    k += 1;
                }
                if seen.iter().all(|&s| s) {
                    out.verdicts
                        .push(detected(name, tick, format!("components={}", children.len())));
                }
            }
        }
        other => {
            let s = shape(other)?;
            let dom = project(t, &s.clock)?;
            for start in 0..dom.len() {
                if s.window_holds(&dom, start) {
                    out.verdicts.push(detected(
                        name,
                        dom[start + s.len - 1].0,
                        format!("start={}", dom[start].0),
                    ));
                }
            }
        }
    }
    out.verdicts.sort_by_key(|v| v.global_tick);
    Ok(out)
}

fn record(shape: &Shape, dom: &Domain, s: usize) -> MatchRecord {
    MatchRecord {
        chart: shape.label.clone(),
        start: dom[s].0,
        end: dom[s + shape.len - 1].0,
        arrows: shape.arrow_names(),
    }
}

/// Every matching window of every component of `c`.
pub fn window_match(c: &ChartExpr, t: &Trace) -> Result<Vec<MatchRecord>, OracleError> {
    let mut out = Vec::new();
    let mut scan = |s: &Shape| -> Result<(), OracleError> {
        let dom = project(t, &s.clock)?;
        for start in 0..dom.len() {
            if s.window_holds(&dom, start) {
                out.push(record(s, &dom, start));
            }
        }
        Ok(())
    };
    match c {
        ChartExpr::Alt(..) => {
            let mut branches = Vec::new();
            alt_branches(c, &mut branches);
            for b in branches {
                scan(&shape(b)?)?;
            }
        }
        ChartExpr::Loop {
            body,
            count: LoopCount::Unbounded,
        } => scan(&shape(body)?)?,
        ChartExpr::Implies {
            antecedent,
            consequent,
        } => {
            scan(&shape(antecedent)?)?;
            scan(&shape(consequent)?)?;
        }
        ChartExpr::AsyncPar { children, arrows } => {
            let mut ctx = AsyncCtx::new(children, arrows, t)?;
            for i in 0..children.len() {
                for s in ctx.matches(i) {
                    let mut r = record(&ctx.shapes[i], &ctx.doms[i], s);
                    r.arrows.extend(arrows.iter().filter(|a| {
                        a.target.chart == ctx.shapes[i].label
                            || ctx.shapes[i].leaves.iter().any(|p| p.leaf.name == a.target.chart)
                    }).map(|a| format!("{}->{}", a.source, a.target)));
                    out.push(r);
                }
            }
        }
        other => scan(&shape(other)?)?,
    }
    out.sort_by(|a, b| (a.end, &a.chart).cmp(&(b.end, &b.chart)));
    Ok(out)
}

/// Symbols mentioned anywhere in `c` and the clocks its leaves run on.
pub fn support(c: &ChartExpr) -> (BTreeSet<Symbol>, Vec<String>) {
    let mut symbols = BTreeSet::new();
    let mut clocks: Vec<String> = Vec::new();
    for leaf in c.leaves() {
        for o in &leaf.occurrences {
            symbols.insert(o.event.clone());
            if let Some(g) = &o.guard {
                symbols.extend(g.support());
            }
        }
        if !clocks.contains(&leaf.clock) {
            clocks.push(leaf.clock.clone());
        }
    }
    (symbols, clocks)
}

/// A trace on which the runtime and the oracle disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mismatch {
    pub trace: Trace,
    pub expected: Vec<Verdict>,
    pub actual: Vec<Verdict>,
    pub note: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivReport {
    pub traces: u64,
    pub ticks: u64,
    pub counterexample: Option<Mismatch>,
}

impl EquivReport {
    pub fn passed(&self) -> bool {
        self.counterexample.is_none()
    }
}

fn sorted(mut v: Vec<Verdict>) -> Vec<Verdict> {
    v.sort();
    v
}

/// Runs `net` and the oracle over `t` and reports the first tick at which
/// they disagree, with the trace cut after that tick.
pub fn compare(c: &ChartExpr, net: &MonitorNet, t: &Trace, mode: Mode) -> Result<Option<Mismatch>, OracleError> {
    let exp = expected(&net.name, c, t, mode)?;
    let mut rs = RunState::new(net, mode)?;
    let mut actual: Vec<Verdict> = Vec::new();
    let mut failure = None;
    for (i, rec) in t.records.iter().enumerate() {
        match rs.step(rec) {
            Ok(v) => actual.extend(v),
            Err(e) => {
                failure = Some((i, e.to_string()));
                break;
            }
        }
    }
    let cut = |upto: usize| {
        let mut trace = t.clone();
        trace.records.truncate(upto + 1);
        trace
    };
    let at = |v: &[Verdict], tick: u64| sorted(v.iter().filter(|x| x.global_tick == tick).cloned().collect());
    if let Some((i, note)) = failure {
        let tick = t.records[i].global_index;
        return Ok(Some(Mismatch {
            trace: cut(i),
            expected: at(&exp.verdicts, tick),
            actual: at(&actual, tick),
            note,
        }));
    }
    for (i, rec) in t.records.iter().enumerate() {
        let tick = rec.global_index;
        let (e, a) = (at(&exp.verdicts, tick), at(&actual, tick));
        if e != a {
            return Ok(Some(Mismatch {
                trace: cut(i),
                expected: e,
                actual: a,
                note: format!("verdicts differ at tick {tick}"),
            }));
        }
    }
    if rs.open_obligations() != exp.unresolved {
        return Ok(Some(Mismatch {
            trace: t.clone(),
            expected: Vec::new(),
            actual: Vec::new(),
            note: format!(
                "{} open obligations, expected {}",
                rs.open_obligations(),
                exp.unresolved
            ),
        }));
    }
    Ok(None)
}

/// The per-tick input alphabet: every valuation of the support under every
/// non-empty set of ticking clocks.
fn alphabet(c: &ChartExpr, net: &MonitorNet) -> Vec<(BTreeSet<String>, Valuation)> {
    let (symbols, clocks) = support(c);
    let symbols: Vec<Symbol> = symbols.into_iter().collect();
    let mut letters = Vec::new();
    for cm in 1..1u32 << clocks.len() {
        let ticking: BTreeSet<String> = clocks
            .iter()
            .enumerate()
            .filter(|(i, _)| cm >> i & 1 == 1)
            .map(|(_, c)| c.clone())
            .collect();
        for vm in 0..1u64 << symbols.len() {
            let mut v = Valuation::all_false(&net.symbols);
            for (i, s) in symbols.iter().enumerate() {
                v.set(s.name.as_str(), vm >> i & 1 == 1);
            }
            letters.push((ticking.clone(), v));
        }
    }
    letters
}

struct Search<'a> {
    c: &'a ChartExpr,
    net: &'a MonitorNet,
    mode: Mode,
    maxlen: usize,
    letters: Vec<(BTreeSet<String>, Valuation)>,
    report: EquivReport,
}

impl Search<'_> {
    fn best_len(&self) -> usize {
        self.report
            .counterexample
            .as_ref()
            .map_or(usize::MAX, |m| m.trace.len())
    }

    fn visit(&mut self, rs: &RunState, trace: &mut Trace) -> Result<(), OracleError> {
        let depth = trace.len();
        for li in 0..self.letters.len() {
            let (clocks, v) = &self.letters[li];
            trace.records.push(TickRecord {
                global_index: depth as u64,
                ticking_clocks: clocks.clone(),
                valuation: v.clone(),
            });
            self.report.traces += 1;
            self.report.ticks += depth as u64 + 1;
            let mut next = rs.clone();
            let stepped = next.step(trace.records.last().expect("just pushed"));
            let exp = expected(&self.net.name, self.c, trace, self.mode)?;
            let due = sorted(
                exp.verdicts
                    .into_iter()
                    .filter(|x| x.global_tick == depth as u64)
                    .collect(),
            );
            let problem = match stepped {
                Err(e) => Some((due.clone(), Vec::new(), e.to_string())),
                Ok(actual) => {
                    let actual = sorted(actual);
                    if actual != due {
                        Some((due, actual, format!("verdicts differ at tick {depth}")))
                    } else if next.open_obligations() != exp.unresolved {
                        Some((
                            Vec::new(),
                            Vec::new(),
                            format!(
                                "{} open obligations, expected {}",
                                next.open_obligations(),
                                exp.unresolved
                            ),
                        ))
                    } else {
                        None
                    }
                }
            };
            if let Some((expected, actual, note)) = problem {
                if depth + 1 < self.best_len() {
                    self.report.counterexample = Some(Mismatch {
                        trace: trace.clone(),
                        expected,
                        actual,
                        note,
                    });
                }
            } else if depth + 1 < self.maxlen && depth + 2 < self.best_len() {
                self.visit(&next, trace)?;
            }
            trace.records.pop();
        }
        Ok(())
    }
}

/// Number of traces of length `1..=maxlen` over an alphabet of `letters`.
pub fn enumeration_size(letters: u128, maxlen: usize) -> u128 {
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..maxlen {
        layer = layer.saturating_mul(letters);
        total = total.saturating_add(layer);
    }
    total
}

/// Compares `net` with the oracle on every trace over the support of `c` of
/// length at most `maxlen`. A counterexample, if any, is one of minimal length.
pub fn exhaustive_equiv(c: &ChartExpr, net: &MonitorNet, mode: Mode, maxlen: usize, cap: u64) -> Result<EquivReport, OracleError> {
    let letters = alphabet(c, net);
    let count = enumeration_size(letters.len() as u128, maxlen);
    if count > u128::from(cap) {
        return Err(OracleError::EnumerationTooLarge { count, cap });
    }
    let rs = RunState::new(net, mode)?;
    let mut search = Search {
        c,
        net,
        mode,
        maxlen,
        letters,
        report: EquivReport::default(),
    };
    let mut trace = Trace::new(net.symbols.clocks.clone());
    if maxlen > 0 {
        search.visit(&rs, &mut trace)?;
    }
    Ok(search.report)
}

/// A random trace over the support of `c`: each support symbol is true with
/// probability `density`, each used clock ticks with probability one half
/// (at least one per record).
pub fn random_trace<R: Rng>(c: &ChartExpr, net: &MonitorNet, len: usize, density: f64, rng: &mut R) -> Trace {
    let (symbols, clocks) = support(c);
    let mut t = Trace::new(net.symbols.clocks.clone());
    for _ in 0..len {
        let mut ticking: Vec<&String> = clocks.iter().filter(|_| rng.gen_bool(0.5)).collect();
        if ticking.is_empty() {
            ticking.push(&clocks[rng.gen_range(0..clocks.len())]);
        }
        let mut v = Valuation::all_false(&net.symbols);
        for s in &symbols {
            v.set(s.name.as_str(), rng.gen_bool(density));
        }
        t.push(ticking.into_iter().cloned(), v);
    }
    t
}

/// Compares `net` with the oracle on `count` random traces of length `len`.
pub fn random_equiv<R: Rng>(
    c: &ChartExpr,
    net: &MonitorNet,
    mode: Mode,
    count: usize,
    len: usize,
    rng: &mut R,
) -> Result<EquivReport, OracleError> {
    let mut report = EquivReport::default();
    for _ in 0..count {
        let density = [0.3, 0.5, 0.7][rng.gen_range(0..3)];
        let t = random_trace(c, net, len, density, rng);
        report.traces += 1;
        report.ticks += len as u64;
        if let Some(m) = compare(c, net, &t, mode)? {
            report.counterexample = Some(m);
            break;
        }
    }
    Ok(report)
}
