//! Acceptance suite: one PASS/FAIL line per criterion.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use cesc::chart::{reduce, CrossArrow, CrossRef, EventOccurrence, LoopCount};
use cesc::gen::{conforming, GenConfig, Schedule};
use cesc::oracle::{compare, exhaustive_equiv, random_equiv, window_match, DEFAULT_ENUMERATION_CAP};
use cesc::runtime::{run, run_shuffled};
use cesc::synth::{compose, extract_pattern, integer_state_view, synthesize, write_net};
use cesc::trace::project;
use cesc::{parse_spec, read_trace, ChartExpr, Expr, Mode, Monitor, MonitorNet, Scesc, SpecFile, SymbolTable, Trace, Valuation};

#[global_allocator]
static ALLOC: mimalloc::MiMalloc = mimalloc::MiMalloc;

// Pinned limits.
const C1_LIMIT: Duration = Duration::from_secs(1);
const C2_LIMIT: Duration = Duration::from_secs(300);
const C2_MAX_N: usize = 4;
const C2_EXTRA_LEN: usize = 3;
const C2_RANDOM_CHARTS: usize = 200;
const C2_RANDOM_TRACES: usize = 1000;
const C2_RANDOM_TRACE_LEN: usize = 24;
const C2_RANDOM_MAX_N: usize = 6;
const C4_RANDOM_TRACES: usize = 200;
const C6_SCHEDULES: usize = 10;
const C6_TRACES_PER_SCHEDULE: usize = 5;
const C6_PERMUTATIONS: u64 = 20;
const SEED: u64 = 2024;

const FIXTURES: [&str; 7] = [
    "ocp_simple_read",
    "ocp_burst_read",
    "ahb_transfer",
    "handshake",
    "read_xfer",
    "req_gnt",
    "repeat_aa",
];
const CASE_STUDIES: [&str; 3] = ["ocp_simple_read", "ocp_burst_read", "ahb_transfer"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn fixtures_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn load(name: &str) -> SpecFile {
    let text = fs::read_to_string(fixtures_dir().join(name).join("spec.cesc")).unwrap();
    parse_spec(&text).unwrap()
}

fn fixture_traces(name: &str, prefix: &str) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(fixtures_dir().join(name))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap().to_str().unwrap().starts_with(prefix))
        .collect();
    v.sort();
    v
}

fn e(n: &str) -> Expr {
    Expr::event(n)
}

fn pr(n: &str) -> Expr {
    Expr::prop(n)
}

fn guarded(g: Expr, x: Expr) -> Expr {
    Expr::or(Expr::not(g), x)
}

fn and(items: Vec<Expr>) -> Expr {
    items.into_iter().reduce(Expr::and).unwrap()
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let header = "events a, b, c, d, req, ack; props p, q, busy; clocks k;\n";
    let texted = |body: &str| -> Scesc {
        let spec = parse_spec(&format!("{header}{body}")).unwrap();
        match spec.top_chart() {
            ChartExpr::Leaf(s) => s.clone(),
            _ => unreachable!(),
        }
    };
    let mut cases: Vec<(String, Scesc, Vec<Expr>)> = vec![
        ("single event".into(), Scesc::new("S1", "k", 1).with(EventOccurrence::present("a", 0)), vec![e("a")]),
        (
            "guarded event".into(),
            Scesc::new("S2", "k", 1).with(EventOccurrence::present("a", 0).guarded(pr("p"))),
            vec![guarded(pr("p"), e("a"))],
        ),
        (
            "three events".into(),
            Scesc::new("S3", "k", 1)
                .with(EventOccurrence::present("a", 0))
                .with(EventOccurrence::present("b", 0))
                .with(EventOccurrence::present("c", 0)),
            vec![and(vec![e("a"), e("b"), e("c")])],
        ),
        (
            "handshake".into(),
            texted("chart H on k ticks 2 { @0 req; @1 [busy]: ack; }"),
            vec![e("req"), guarded(pr("busy"), e("ack"))],
        ),
        (
            "guard and plain".into(),
            texted("chart G on k ticks 1 { @0 [p]: a; @0 b; }"),
            vec![and(vec![guarded(pr("p"), e("a")), e("b")])],
        ),
        (
            "two guards".into(),
            texted("chart G2 on k ticks 1 { @0 [p]: a; @0 [q]: b; }"),
            vec![and(vec![guarded(pr("p"), e("a")), guarded(pr("q"), e("b"))])],
        ),
        (
            "compound guard".into(),
            texted("chart G3 on k ticks 1 { @0 [p & q]: a; }"),
            vec![guarded(Expr::and(pr("p"), pr("q")), e("a"))],
        ),
        (
            "one event per tick".into(),
            texted("chart T5 on k ticks 5 { @0 a; @1 b; @2 c; @3 d; @4 a; }"),
            vec![e("a"), e("b"), e("c"), e("d"), e("a")],
        ),
        (
            "four events on a tick".into(),
            texted("chart F on k ticks 2 { @0 a; @1 a; @1 b; @1 c; @1 d; }"),
            vec![e("a"), and(vec![e("a"), e("b"), e("c"), e("d")])],
        ),
        (
            "mixed ticks".into(),
            texted("chart M on k ticks 3 { @0 [busy]: req; @1 ack; @1 [p]: b; @2 c; @2 d; }"),
            vec![
                guarded(pr("busy"), e("req")),
                and(vec![e("ack"), guarded(pr("p"), e("b"))]),
                and(vec![e("c"), e("d")]),
            ],
        ),
    ];
    let burst = load("ocp_burst_read");
    if let ChartExpr::Leaf(s) = burst.top_chart() {
        cases.push((
            "ocp burst read".into(),
            s.clone(),
            vec![
                and(vec![e("MCmd_rd"), e("SCmdAccept"), Expr::not(e("SResp"))]),
                and(vec![e("MCmd_rd"), e("SCmdAccept"), e("SResp")]),
                and(vec![e("MCmd_rd"), e("MBurstLast"), e("SCmdAccept"), e("SResp")]),
                and(vec![Expr::not(e("MCmd_rd")), e("SResp"), e("SRespLast")]),
            ],
        ));
    }
    let ahb = load("ahb_transfer");
    if let ChartExpr::Leaf(s) = ahb.top_chart() {
        cases.push((
            "ahb transfer".into(),
            s.clone(),
            vec![
                and(vec![e("HBUSREQ"), Expr::not(e("HGRANT"))]),
                e("HGRANT"),
                and(vec![e("HTRANS_NONSEQ"), e("HREADY")]),
                and(vec![guarded(pr("HWRITE"), e("HWDATA")), e("HREADY"), e("HRESP_OKAY")]),
            ],
        ));
    }
    let mut bad = Vec::new();
    for (name, chart, want) in &cases {
        match extract_pattern(chart) {
            Ok(p) if p.elements == *want => {}
            Ok(p) => bad.push(format!("{name}: got {:?}", p.elements.iter().map(ToString::to_string).collect::<Vec<_>>())),
            Err(err) => bad.push(format!("{name}: {err}")),
        }
    }
    let took = start.elapsed();
    outcome(
        bad.is_empty() && cases.len() >= 10 && took < C1_LIMIT,
        format!(
            "{} charts, {} mismatches, {} ms (limit {} ms){}",
            cases.len(),
            bad.len(),
            took.as_millis(),
            C1_LIMIT.as_millis(),
            if bad.is_empty() { String::new() } else { format!(": {}", bad.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- criterion 2

fn table(events: &[&str], props: &[&str], clocks: &[&str]) -> SymbolTable {
    SymbolTable {
        events: events.iter().map(|s| s.to_string()).collect(),
        props: props.iter().map(|s| s.to_string()).collect(),
        clocks: clocks.iter().map(|s| s.to_string()).collect(),
        instances: Vec::new(),
    }
}

/// Every leaf of `n` ticks over events `a`, `b`: each event is unmentioned,
/// present or absent on each tick.
fn two_event_charts(n: usize) -> Vec<Scesc> {
    let total = 9usize.pow(n as u32);
    (0..total)
        .map(|mut code| {
            let mut s = Scesc::new("C", "k", n);
            for t in 0..n {
                for ev in ["a", "b"] {
                    match code % 3 {
                        1 => s.push(EventOccurrence::present(ev, t)),
                        2 => s.push(EventOccurrence::absent(ev, t)),
                        _ => {}
                    }
                    code /= 3;
                }
            }
            s
        })
        .collect()
}

/// Every leaf of `n` ticks over event `a` and proposition `p`, each tick one
/// of: nothing, `a`, `absent a`, `[p]: a`, `[p]: absent a`. Charts with a
/// guarded `a` followed by a later `a` also come with arrows between them.
fn event_prop_charts(n: usize) -> Vec<Scesc> {
    let total = 5usize.pow(n as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut s = Scesc::new("C", "k", n);
        let mut kinds = Vec::new();
        for t in 0..n {
            let k = code % 5;
            code /= 5;
            kinds.push(k);
            match k {
                1 => s.push(EventOccurrence::present("a", t)),
                2 => s.push(EventOccurrence::absent("a", t)),
                3 => s.push(EventOccurrence::present("a", t).guarded(pr("p"))),
                4 => s.push(EventOccurrence::absent("a", t).guarded(pr("p"))),
                _ => {}
            }
        }
        let mut with_arrows = s.clone();
        for i in 0..n {
            if kinds[i] != 3 {
                continue;
            }
            if let Some(j) = (i + 1..n).find(|&j| kinds[j] == 1 || kinds[j] == 3) {
                with_arrows = with_arrows.with_arrow(("a", i), ("a", j));
            }
        }
        let arrows = !with_arrows.arrows.is_empty();
        out.push(s);
        if arrows {
            out.push(with_arrows);
        }
    }
    out
}

fn net_for(c: &ChartExpr, symbols: &SymbolTable) -> Result<MonitorNet, String> {
    let mut net = compose(c, symbols).map_err(|e| e.to_string())?;
    net.name = "T".into();
    Ok(net)
}

fn parallel<T: Sync, F: Fn(&T) -> Result<(), String> + Sync>(items: &[T], f: F) -> Vec<String> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(8);
    let next = AtomicU64::new(0);
    let errors = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..threads {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed) as usize;
                if i >= items.len() {
                    break;
                }
                if let Err(e) = f(&items[i]) {
                    errors.lock().unwrap().push(e);
                }
            });
        }
    });
    errors.into_inner().unwrap()
}

fn random_leaf(rng: &mut ChaCha8Rng, name: &str, clock: &str, ticks: usize, events: &[&str]) -> Scesc {
    let mut s = Scesc::new(name, clock, ticks);
    let mut present = Vec::new();
    for t in 0..ticks {
        for ev in events {
            match rng.gen_range(0..8) {
                0 | 1 => {
                    s.push(EventOccurrence::present(ev, t));
                    present.push((*ev, t, false));
                }
                2 => s.push(EventOccurrence::absent(ev, t)),
                3 => {
                    let g = if rng.gen_bool(0.5) { pr("p") } else { Expr::not(pr("p")) };
                    s.push(EventOccurrence::present(ev, t).guarded(g));
                    present.push((*ev, t, true));
                }
                _ => {}
            }
        }
    }
    // arrows, preferring guarded sources
    for &(src, ts, g) in &present {
        if !g && !rng.gen_bool(0.2) {
            continue;
        }
        let later: Vec<_> = present.iter().filter(|x| x.1 > ts).collect();
        if !later.is_empty() {
            let (tgt, tt, _) = *later[rng.gen_range(0..later.len())];
            s = s.with_arrow((src, ts), (tgt, tt));
        }
    }
    s
}

struct RandomCase {
    chart: ChartExpr,
    symbols: SymbolTable,
    mode: Mode,
}

/// A random chart that can match at all.
fn random_case(rng: &mut ChaCha8Rng) -> RandomCase {
    loop {
        let case = random_candidate(rng);
        if compose(&case.chart, &case.symbols).is_ok() {
            return case;
        }
    }
}

fn random_candidate(rng: &mut ChaCha8Rng) -> RandomCase {
    let pool = ["a", "b", "c", "d"];
    let k = rng.gen_range(1..=4);
    let events: Vec<&str> = pool[..k].to_vec();
    let symbols = table(&events, &["p"], &["k", "m"]);
    let leaf = |rng: &mut ChaCha8Rng, name: &str, clock: &str, max: usize| {
        let ticks = rng.gen_range(1..=max);
        ChartExpr::Leaf(random_leaf(rng, name, clock, ticks, &events))
    };
    let half = C2_RANDOM_MAX_N / 2;
    let mut mode = Mode::Detect;
    let chart = match rng.gen_range(0..8) {
        0 => leaf(rng, "A", "k", C2_RANDOM_MAX_N),
        1 => ChartExpr::seq(leaf(rng, "A", "k", half), leaf(rng, "B", "k", half)),
        2 => ChartExpr::par(leaf(rng, "A", "k", C2_RANDOM_MAX_N), leaf(rng, "B", "k", C2_RANDOM_MAX_N), true),
        3 => ChartExpr::repeat(leaf(rng, "A", "k", half), LoopCount::Times(2)),
        4 => ChartExpr::alt(leaf(rng, "A", "k", C2_RANDOM_MAX_N), leaf(rng, "B", "k", C2_RANDOM_MAX_N)),
        5 => ChartExpr::repeat(leaf(rng, "A", "k", half), LoopCount::Unbounded),
        6 => {
            mode = Mode::Assert;
            ChartExpr::implies(leaf(rng, "A", "k", half), leaf(rng, "B", "k", half))
        }
        _ => {
            let (a, b) = (leaf(rng, "A", "k", half), leaf(rng, "B", "m", half));
            let pick = |c: &ChartExpr, rng: &mut ChaCha8Rng| -> Option<CrossRef> {
                let ChartExpr::Leaf(s) = c else { return None };
                let present: Vec<_> = s.occurrences.iter().filter(|o| o.polarity == cesc::chart::Polarity::Present).collect();
                if present.is_empty() {
                    return None;
                }
                let o = present[rng.gen_range(0..present.len())];
                Some(CrossRef {
                    chart: s.name.clone(),
                    event: o.event.name.clone(),
                    tick: o.tick,
                })
            };
            let arrows = match (pick(&a, rng), pick(&b, rng)) {
                (Some(source), Some(target)) => vec![CrossArrow { source, target }],
                _ => Vec::new(),
            };
            ChartExpr::AsyncPar {
                children: vec![a, b],
                arrows,
            }
        }
    };
    RandomCase { chart, symbols, mode }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    // exhaustive part
    let mut family: Vec<(Scesc, SymbolTable)> = Vec::new();
    let ab = table(&["a", "b"], &[], &["k"]);
    let ap = table(&["a"], &["p"], &["k"]);
    for n in 1..=C2_MAX_N {
        family.extend(two_event_charts(n).into_iter().map(|s| (s, ab.clone())));
        family.extend(event_prop_charts(n).into_iter().map(|s| (s, ap.clone())));
    }
    let traces = AtomicU64::new(0);
    let mut errors = parallel(&family, |(s, symbols)| {
        let c = ChartExpr::Leaf(s.clone());
        let net = net_for(&c, symbols)?;
        let r = exhaustive_equiv(&c, &net, Mode::Detect, s.tick_count + C2_EXTRA_LEN, DEFAULT_ENUMERATION_CAP)
            .map_err(|e| format!("{}: {e}", ChartExpr::Leaf(s.clone()).label()))?;
        traces.fetch_add(r.traces, Ordering::Relaxed);
        match r.counterexample {
            None => Ok(()),
            Some(m) => Err(format!("exhaustive counterexample for {:?}: {}", s, m.note)),
        }
    });
    let exhaustive_charts = family.len();

    // random part
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let cases: Vec<(RandomCase, u64)> = (0..C2_RANDOM_CHARTS).map(|_| (random_case(&mut rng), rng.gen())).collect();
    let random_traces = AtomicU64::new(0);
    errors.extend(parallel(&cases, |(case, seed)| {
        let net = net_for(&case.chart, &case.symbols)?;
        let mut r = ChaCha8Rng::seed_from_u64(*seed);
        let rep = random_equiv(&case.chart, &net, case.mode, C2_RANDOM_TRACES, C2_RANDOM_TRACE_LEN, &mut r)
            .map_err(|e| format!("{}: {e}", case.chart.label()))?;
        random_traces.fetch_add(rep.traces, Ordering::Relaxed);
        match rep.counterexample {
            None => Ok(()),
            Some(m) => Err(format!("random counterexample for {}: {}", case.chart.label(), m.note)),
        }
    }));
    let took = start.elapsed();
    let shown: Vec<&String> = errors.iter().take(3).collect();
    outcome(
        errors.is_empty() && took < C2_LIMIT,
        format!(
            "{exhaustive_charts} charts (n <= {C2_MAX_N}, 2 symbols) over {} traces at maxlen n+{C2_EXTRA_LEN}, \
             {C2_RANDOM_CHARTS} random charts (n <= {C2_RANDOM_MAX_N}, <= 5 symbols) x {} traces, \
             {} counterexamples, {:.1} s (limit {} s){}",
            traces.load(Ordering::Relaxed),
            random_traces.load(Ordering::Relaxed) / C2_RANDOM_CHARTS as u64,
            errors.len(),
            took.as_secs_f64(),
            C2_LIMIT.as_secs(),
            if shown.is_empty() { String::new() } else { format!(": {shown:?}") }
        ),
    )
}

// ---------------------------------------------------------------- criterion 3

fn jointly_satisfiable(x: &Expr, y: &Expr) -> bool {
    let both = Expr::and(x.clone(), y.clone());
    let names: Vec<String> = both.support().into_iter().map(|s| s.name).collect();
    (0..1u64 << names.len()).any(|m| {
        let v: Valuation = names.iter().enumerate().map(|(i, n)| (n.clone(), m >> i & 1 == 1)).collect();
        both.eval(&v).unwrap()
    })
}

/// Whether a new attempt can start while an older one is still extending.
fn ambiguous(m: &Monitor) -> bool {
    let p = &m.pattern.elements;
    (1..p.len()).any(|k| jointly_satisfiable(&p[0], &p[k]))
}

fn criterion_3() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut unambiguous = 0;
    for name in FIXTURES {
        let net = synthesize(&load(name)).unwrap();
        for m in &net.monitors {
            let view = integer_state_view(m);
            let amb = ambiguous(m);
            let ok = if amb {
                view.is_none()
            } else {
                unambiguous += 1;
                view.is_some() && m.states.len() == m.n() + 1
            };
            if !ok {
                pass = false;
                lines.push(format!("{}: ambiguous={amb} view={} states={}", m.name, view.is_some(), m.states.len()));
            }
        }
    }
    let aa = synthesize(&load("repeat_aa")).unwrap();
    let counter = integer_state_view(&aa.monitors[0]).is_none();
    pass &= counter && unambiguous > 0;
    outcome(
        pass,
        format!(
            "{unambiguous} unambiguous fixture monitors with n+1 states and a view, [(a),(a)] view absent: {counter}{}",
            if lines.is_empty() { String::new() } else { format!(": {}", lines.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- criterion 4

/// Fixed-length components a top chart is matched through.
fn components(c: &ChartExpr) -> Vec<&ChartExpr> {
    match c {
        ChartExpr::Alt(a, b) => {
            let mut v = components(a);
            v.extend(components(b));
            v
        }
        ChartExpr::Loop {
            body,
            count: LoopCount::Unbounded,
        } => vec![body.as_ref()],
        ChartExpr::Implies { antecedent, consequent } => vec![antecedent.as_ref(), consequent.as_ref()],
        ChartExpr::AsyncPar { children, .. } => children.iter().collect(),
        other => vec![other],
    }
}

/// A causality arrow seen from the component that holds its source.
struct Site {
    name: String,
    component: String,
    offset: usize,
    tick: usize,
    event: String,
    clock: String,
    guard: Option<Expr>,
}

fn sites(c: &ChartExpr) -> Vec<Site> {
    let mut out = Vec::new();
    for comp in components(c) {
        let red = reduce(comp).unwrap();
        for leaf in comp.leaves() {
            let offset = red.offset_of(&leaf.name).unwrap();
            for a in &leaf.arrows {
                let occ = leaf.find_present(&a.source).unwrap();
                out.push(Site {
                    name: format!("{}.{}->{}", leaf.name, a.source, a.target),
                    component: comp.label(),
                    offset,
                    tick: a.source.tick,
                    event: a.source.event.clone(),
                    clock: leaf.clock.clone(),
                    guard: occ.guard.clone(),
                });
            }
        }
        if let ChartExpr::AsyncPar { arrows, .. } = c {
            for a in arrows {
                if let Some(offset) = red.offset_of(&a.source.chart) {
                    let leaf = comp.leaves().into_iter().find(|l| l.name == a.source.chart).unwrap();
                    let occ = leaf.find_present(&cesc::chart::OccurrenceRef::new(&a.source.event, a.source.tick)).unwrap();
                    out.push(Site {
                        name: format!("{}->{}", a.source, a.target),
                        component: comp.label(),
                            offset,
                        tick: a.source.tick,
                        event: a.source.event.clone(),
                        clock: leaf.clock.clone(),
                        guard: occ.guard.clone(),
                    });
                }
            }
        }
    }
    out
}

/// `t` with the cause of `site` removed from every window that could supply
/// it. A guarded cause also gets its guard falsified, so only the arrow can
/// reject.
fn without_cause(spec: &SpecFile, site: &Site, t: &Trace) -> Option<Trace> {
    let dom = project(t, &site.clock).ok()?;
    let falsify: Vec<(String, bool)> = match &site.guard {
        None => Vec::new(),
        Some(g) => {
            let names: Vec<String> = g.support().into_iter().map(|s| s.name).collect();
            let m = (0..1u64 << names.len()).find(|&m| {
                let v: Valuation = names.iter().enumerate().map(|(i, n)| (n.clone(), m >> i & 1 == 1)).collect();
                !g.eval(&v).unwrap()
            })?;
            names.into_iter().enumerate().map(|(i, n)| (n, m >> i & 1 == 1)).collect()
        }
    };
    let mut out = t.clone();
    let windows: Vec<_> = window_match(spec.top_chart(), t).ok()?.into_iter().filter(|m| m.chart == site.component).collect();
    if windows.is_empty() {
        return None;
    }
    for rec in windows {
        let first = dom.iter().position(|(g, _)| *g == rec.start)?;
        let global = dom[first + site.offset + site.tick].0;
        let r = out.records.iter_mut().find(|r| r.global_index == global)?;
        r.valuation.set(site.event.as_str(), false);
        for (n, b) in &falsify {
            r.valuation.set(n.as_str(), *b);
        }
    }
    Some(out)
}

fn criterion_4() -> Outcome {
    let mut checked = 0;
    let mut failures = Vec::new();
    let mut abandoned = 0u64;
    let mut runs = 0u64;
    let mut violations = 0u64;
    for name in FIXTURES {
        let spec = load(name);
        let net = synthesize(&spec).unwrap();
        let mut audit = |t: &Trace| -> Option<i32> {
            let r = run(&net, t, spec.mode).ok()?;
            runs += 1;
            abandoned += r.summary.abandoned_attempts;
            violations += r.summary.balance_violations;
            Some(r.exit_code())
        };
        for (i, site) in sites(spec.top_chart()).iter().enumerate() {
            checked += 1;
            // (a) conforming traces are detected
            let mut conf: Vec<Trace> = fixture_traces(name, "conforming_")
                .iter()
                .map(|p| read_trace(&fs::read_to_string(p).unwrap(), &spec.symbols).unwrap())
                .collect();
            let quiet = GenConfig {
                seed: SEED + i as u64,
                noise: 0.0,
                max_pad: 0,
                schedule: Schedule::Random,
            };
            let quiet: Vec<Trace> = conforming(&spec, 3, &quiet).unwrap().into_iter().map(|g| g.trace).collect();
            conf.extend(quiet.iter().cloned());
            for t in &conf {
                if audit(t) != Some(0) {
                    failures.push(format!("{name} {}: conforming trace not detected", site.name));
                }
            }
            // (b) the noise-free traces without the cause are not
            let mut removed = 0;
            for t in &quiet {
                let Some(cut) = without_cause(&spec, site, t) else { continue };
                removed += 1;
                let exit = audit(&cut);
                let oracle = compare(spec.top_chart(), &net, &cut, spec.mode).ok().flatten().is_none();
                if exit != Some(1) || !oracle {
                    failures.push(format!("{name} {}: removing the cause left exit {exit:?}", site.name));
                }
            }
            if removed == 0 {
                failures.push(format!("{name} {}: no window to cut", site.name));
            }
        }
        // (c) balance over random traffic
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let c = spec.top_chart();
        for _ in 0..C4_RANDOM_TRACES {
            let t = cesc::oracle::random_trace(c, &net, 30, 0.5, &mut rng);
            audit(&t);
        }
    }
    failures.dedup();
    outcome(
        failures.is_empty() && violations == 0 && checked > 0,
        format!(
            "{checked} arrows, {runs} runs, {abandoned} abandoned attempts, {violations} balance violations{}",
            if failures.is_empty() { String::new() } else { format!(": {}", failures.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- criterion 5

fn cesc(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_cesc")).args(args).output().unwrap();
    (o.status.code().unwrap_or(-1), String::from_utf8_lossy(&o.stdout).into_owned())
}

fn criterion_5() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut problems = Vec::new();
    let (mut conf, mut muts) = (0, 0);
    for name in CASE_STUDIES {
        let spec = fixtures_dir().join(name).join("spec.cesc");
        let spec = spec.to_str().unwrap();
        let c = fixture_traces(name, "conforming_");
        let m = fixture_traces(name, "mutated_");
        if c.is_empty() || m.len() < 3 {
            problems.push(format!("{name}: {} conforming, {} mutated", c.len(), m.len()));
        }
        for t in &c {
            conf += 1;
            if cesc(&["check", spec, t.to_str().unwrap()]).0 != 0 {
                problems.push(format!("{}: expected exit 0", t.display()));
            }
        }
        for t in &m {
            muts += 1;
            if cesc(&["check", spec, t.to_str().unwrap()]).0 != 1 {
                problems.push(format!("{}: expected exit 1", t.display()));
            }
        }
        let dot = dir.path().join(format!("{name}.dot"));
        let mon = dir.path().join(format!("{name}.monitor"));
        let code = cesc(&["synth", spec, "-o", mon.to_str().unwrap(), "--dot", dot.to_str().unwrap()]).0;
        let golden = fs::read_to_string(fixtures_dir().join("golden").join(format!("{name}.dot"))).unwrap();
        if code != 0 || fs::read_to_string(&dot).unwrap_or_default() != golden {
            problems.push(format!("{name}: DOT differs from golden"));
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "{} case studies, {conf} conforming exit 0, {muts} mutated exit 1, DOT goldens matched{}",
            CASE_STUDIES.len(),
            if problems.is_empty() { String::new() } else { format!(": {}", problems.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- criterion 6

fn criterion_6() -> Outcome {
    let spec = load("read_xfer");
    let net = synthesize(&spec).unwrap();
    let schedules: Vec<Vec<u32>> = vec![
        vec![1, 1],
        vec![1, 2],
        vec![2, 1],
        vec![1, 3],
        vec![3, 1],
        vec![2, 3],
        vec![3, 2],
        vec![1, 4],
        vec![4, 1],
        vec![3, 4],
        vec![5, 2],
    ];
    let mut problems = Vec::new();
    let mut traces: Vec<Trace> = Vec::new();
    for (i, periods) in schedules.iter().enumerate() {
        let cfg = GenConfig {
            seed: SEED + i as u64,
            schedule: Schedule::Periodic(periods.clone()),
            ..Default::default()
        };
        match conforming(&spec, C6_TRACES_PER_SCHEDULE, &cfg) {
            Err(e) => problems.push(format!("{periods:?}: {e}")),
            Ok(ts) => {
                for g in ts {
                    let r = run(&net, &g.trace, Mode::Detect).unwrap();
                    if r.exit_code() != 0 {
                        problems.push(format!("{periods:?}: not detected"));
                    }
                    if compare(spec.top_chart(), &net, &g.trace, Mode::Detect).unwrap().is_some() {
                        problems.push(format!("{periods:?}: oracle disagrees"));
                    }
                    traces.push(g.trace);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..50 {
        traces.push(cesc::oracle::random_trace(spec.top_chart(), &net, 30, 0.5, &mut rng));
    }
    let mut permuted = 0;
    for t in &traces {
        let base = run(&net, t, Mode::Detect).unwrap().to_text();
        for s in 0..C6_PERMUTATIONS {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            permuted += 1;
            if run_shuffled(&net, t, Mode::Detect, &mut r).unwrap().to_text() != base {
                problems.push("monitor order changed a report".into());
            }
        }
    }
    problems.dedup();
    outcome(
        problems.is_empty() && schedules.len() >= C6_SCHEDULES,
        format!(
            "{} clock-ratio schedules x {C6_TRACES_PER_SCHEDULE} conforming traces detected, {permuted} permuted runs identical{}",
            schedules.len(),
            if problems.is_empty() { String::new() } else { format!(": {}", problems.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------- criterion 7

fn deterministic_and_total(m: &Monitor) -> Result<(), String> {
    let names: Vec<String> = m.universe.iter().map(|s| s.name.clone()).collect();
    for mask in 0..1u64 << names.len() {
        let v: Valuation = names.iter().enumerate().map(|(i, n)| (n.clone(), mask >> i & 1 == 1)).collect();
        for s in &m.states {
            let enabled = m.outgoing(s.id).filter(|t| t.guard.eval(&v).unwrap()).count();
            if enabled != 1 {
                return Err(format!("{}: state {} has {enabled} enabled guards", m.name, s.id));
            }
        }
    }
    Ok(())
}

fn criterion_7() -> Outcome {
    let mut nets: Vec<MonitorNet> = FIXTURES.iter().map(|n| synthesize(&load(n)).unwrap()).collect();
    let ab = table(&["a", "b"], &[], &["k"]);
    let ap = table(&["a"], &["p"], &["k"]);
    for n in 1..=3 {
        for s in two_event_charts(n) {
            nets.push(net_for(&ChartExpr::Leaf(s), &ab).unwrap());
        }
        for s in event_prop_charts(n) {
            nets.push(net_for(&ChartExpr::Leaf(s), &ap).unwrap());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    for _ in 0..C2_RANDOM_CHARTS {
        let case = random_case(&mut rng);
        let _: u64 = rng.gen();
        nets.push(net_for(&case.chart, &case.symbols).unwrap());
    }
    let monitors: Vec<&Monitor> = nets.iter().flat_map(|n| n.monitors.iter()).collect();
    let states: usize = monitors.iter().map(|m| m.states.len()).sum();
    let errors = parallel(&monitors, |m| deterministic_and_total(m));
    // serialized monitors must survive a round trip unchanged
    let mut round_trip = 0;
    for net in nets.iter().take(FIXTURES.len()) {
        let text = write_net(net);
        if cesc::synth::read_net(&text).map(|n| write_net(&n)) == Ok(text) {
            round_trip += 1;
        }
    }
    outcome(
        errors.is_empty() && round_trip == FIXTURES.len(),
        format!(
            "{} monitors, {states} states, every valuation enables exactly one guard{}",
            monitors.len(),
            if errors.is_empty() { String::new() } else { format!(": {}", errors.join("; ")) }
        ),
    )
}

fn main() {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 7] = [
        ("translation rules", criterion_1),
        ("oracle equivalence", criterion_2),
        ("integer-state collapse", criterion_3),
        ("causality", criterion_4),
        ("case-study fixtures", criterion_5),
        ("multi-clock", criterion_6),
        ("determinism and totality", criterion_7),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {}: {} ({})", i + 1, if o.pass { "PASS" } else { "FAIL" }, name, o.detail);
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
