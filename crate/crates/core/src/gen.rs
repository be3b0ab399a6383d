//! Fixture trace generation.
//!
//! Conforming traces embed one or more match windows in random noise;
//! mutated traces damage a conforming one. Every emitted trace is checked
//! against the oracle before it is returned.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::chart::{ChartExpr, LoopCount, Mode, Polarity, SpecFile};
use crate::expr::{satisfying_assignment, Symbol, Valuation, DEFAULT_UNIVERSE_CAP};
use crate::oracle::{self, alt_branches, event_true, expected, occurrence_holds, shape, OracleError, Shape};
use crate::runtime::VerdictKind;
use crate::trace::{write_trace, TickRecord, Trace};

const MAX_ATTEMPTS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("E_UNSATISFIABLE_GEN: {0}")]
    Unsatisfiable(String),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

impl GenError {
    pub fn code(&self) -> &'static str {
        match self {
            GenError::Unsatisfiable(_) => "E_UNSATISFIABLE_GEN",
            GenError::Oracle(e) => e.code(),
        }
    }
}

/// Which clocks tick on each global tick.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Schedule {
    /// Each clock ticks with probability one half; at least one ticks.
    Random,
    /// Clock `i` (in order of first use) ticks every `periods[i]` base steps.
    /// Base steps on which no clock ticks are skipped.
    Periodic(Vec<u32>),
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub seed: u64,
    /// Probability that a support symbol is true in a noise record.
    pub noise: f64,
    /// Upper bound on the noise records before and after the windows.
    pub max_pad: usize,
    pub schedule: Schedule,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            noise: 0.2,
            max_pad: 3,
            schedule: Schedule::Random,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Mutation {
    DropEvent,
    SwapTicks,
    ViolateGuard,
    BreakArrow,
}

impl Mutation {
    pub const ALL: [Mutation; 4] = [
        Mutation::DropEvent,
        Mutation::SwapTicks,
        Mutation::ViolateGuard,
        Mutation::BreakArrow,
    ];
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mutation::DropEvent => "drop_event",
            Mutation::SwapTicks => "swap_ticks",
            Mutation::ViolateGuard => "violate_guard",
            Mutation::BreakArrow => "break_arrow",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Generated {
    pub trace: Trace,
    /// The mutation applied, with a short description of where.
    pub mutation: Option<(Mutation, String)>,
}

impl Generated {
    /// `.trace` text; mutated traces carry a `# mutation:` comment line.
    pub fn to_text(&self, spec: &SpecFile) -> String {
        let mut out = String::new();
        if let Some((m, what)) = &self.mutation {
            out.push_str(&format!("# mutation: {m} {what}\n"));
        }
        out.push_str(&write_trace(&self.trace, &spec.symbols));
        out
    }
}

/// A stateful clock schedule over the clocks a chart uses.
struct Ticker<'a> {
    clocks: &'a [String],
    schedule: &'a Schedule,
    step: u64,
}

impl Ticker<'_> {
    fn next<R: Rng>(&mut self, rng: &mut R) -> BTreeSet<String> {
        match self.schedule {
            Schedule::Random => {
                let mut on: BTreeSet<String> = self
                    .clocks
                    .iter()
                    .filter(|_| rng.gen_bool(0.5))
                    .cloned()
                    .collect();
                if on.is_empty() {
                    on.insert(self.clocks.choose(rng).expect("a chart uses a clock").clone());
                }
                on
            }
            Schedule::Periodic(periods) => loop {
                let step = self.step;
                self.step += 1;
                let on: BTreeSet<String> = self
                    .clocks
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| step.is_multiple_of(u64::from(periods.get(*i).copied().unwrap_or(1).max(1))))
                    .map(|(_, c)| c.clone())
                    .collect();
                if !on.is_empty() {
                    break on;
                }
            },
        }
    }
}

/// Where window position `pos` of `segment` landed in the trace.
#[derive(Clone, Copy, Debug)]
struct Placement {
    segment: usize,
    pos: usize,
    record: usize,
}

/// A window to embed: a fixed-length component, plus cross-arrow sources
/// it must raise.
struct Segment<'c> {
    shape: Shape<'c>,
    forced: Vec<(usize, String)>,
    /// Mutations may touch this segment.
    target: bool,
}

struct Built {
    trace: Trace,
    placements: Vec<Placement>,
}

struct Generator<'s> {
    spec: &'s SpecFile,
    chart: &'s ChartExpr,
    symbols: Vec<Symbol>,
    clocks: Vec<String>,
    cfg: GenConfig,
    rng: ChaCha8Rng,
}

impl<'s> Generator<'s> {
    fn new(spec: &'s SpecFile, cfg: GenConfig) -> Self {
        let chart = spec.top_chart();
        let (symbols, clocks) = oracle::support(chart);
        Generator {
            spec,
            chart,
            symbols: symbols.into_iter().collect(),
            clocks,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            cfg,
        }
    }

    fn noise(&mut self, density: f64) -> Valuation {
        let mut v = Valuation::all_false(&self.spec.symbols);
        for s in &self.symbols {
            v.set(s.name.as_str(), self.rng.gen_bool(density));
        }
        v
    }

    /// The windows to embed, in trace order.
    fn segments(&mut self) -> Result<Vec<Segment<'s>>, GenError> {
        let c = self.chart;
        Ok(match c {
            ChartExpr::Alt(..) => {
                let mut branches = Vec::new();
                alt_branches(c, &mut branches);
                let pick = branches[self.rng.gen_range(0..branches.len())];
                vec![plain(shape(pick)?, true)]
            }
            ChartExpr::Loop {
                body,
                count: LoopCount::Unbounded,
            } => {
                let k = self.rng.gen_range(1..=3);
                (0..k).map(|_| shape(body).map(|s| plain(s, true))).collect::<Result<_, _>>()?
            }
            ChartExpr::Implies {
                antecedent,
                consequent,
            } => {
                let assert = self.spec.mode == Mode::Assert;
                vec![plain(shape(antecedent)?, !assert), plain(shape(consequent)?, true)]
            }
            ChartExpr::AsyncPar { children, arrows } => {
                let mut segs: Vec<Segment> = children
                    .iter()
                    .map(|ch| shape(ch).map(|s| plain(s, true)))
                    .collect::<Result<_, _>>()?;
                let mut before: Vec<(usize, usize)> = Vec::new();
                for a in arrows {
                    let find = |chart: &str, tick: usize| {
                        segs.iter()
                            .enumerate()
                            .find_map(|(i, s)| s.shape.position_of(chart, tick).map(|p| (i, p)))
                    };
                    let (Some((si, sp)), Some((ti, _))) =
                        (find(&a.source.chart, a.source.tick), find(&a.target.chart, a.target.tick))
                    else {
                        return Err(GenError::Unsatisfiable(format!(
                            "arrow {} -> {} does not resolve",
                            a.source, a.target
                        )));
                    };
                    segs[si].forced.push((sp, a.source.event.clone()));
                    before.push((si, ti));
                }
                // sources before targets
                let mut order = Vec::new();
                let mut placed = vec![false; segs.len()];
                while order.len() < segs.len() {
                    let next = (0..segs.len())
                        .find(|&i| !placed[i] && before.iter().all(|&(s, t)| t != i || placed[s]))
                        .ok_or_else(|| GenError::Unsatisfiable("cross-domain arrows form a cycle".into()))?;
                    placed[next] = true;
                    order.push(next);
                }
                let mut slots: Vec<Option<Segment>> = segs.into_iter().map(Some).collect();
                order.into_iter().map(|i| slots[i].take().expect("each placed once")).collect()
            }
            other => vec![plain(shape(other)?, true)],
        })
    }

    /// A valuation for window position `p` of `seg`, sampled then repaired.
    fn sample_position(&mut self, seg: &Segment, p: usize) -> Option<Valuation> {
        let mut forced: Vec<&str> = seg.forced.iter().filter(|(q, _)| *q == p).map(|(_, e)| e.as_str()).collect();
        for pl in &seg.shape.leaves {
            for a in &pl.leaf.arrows {
                if pl.offset + a.source.tick == p {
                    forced.push(&a.source.event);
                }
            }
        }
        let occs: Vec<_> = seg
            .shape
            .leaves
            .iter()
            .filter(|pl| p >= pl.offset && p < pl.offset + pl.leaf.tick_count)
            .flat_map(|pl| pl.leaf.occurrences.iter().filter(move |o| o.tick == p - pl.offset))
            .collect();
        for _ in 0..64 {
            let mut v = self.noise(0.3);
            for o in &occs {
                let applies = o.guard.as_ref().is_none_or(|g| g.eval(&v).unwrap_or(false));
                if applies {
                    v.set(o.event.name.as_str(), o.polarity == Polarity::Present);
                }
            }
            for e in &forced {
                v.set(*e, true);
            }
            if occs.iter().all(|o| occurrence_holds(o, &v)) {
                return Some(v);
            }
        }
        None
    }

    fn build(&mut self, segs: &[Segment], density: f64) -> Option<Built> {
        let mut windows = Vec::new();
        for seg in segs {
            let mut w = Vec::new();
            for p in 0..seg.shape.len {
                w.push(self.sample_position(seg, p)?);
            }
            windows.push(w);
        }
        let clocks = self.clocks.clone();
        let schedule = self.cfg.schedule.clone();
        let mut ticker = Ticker {
            clocks: &clocks,
            schedule: &schedule,
            step: 0,
        };
        let mut trace = Trace::new(self.spec.symbols.clocks.clone());
        let mut placements = Vec::new();
        let noise_rec = |g: &mut Self, trace: &mut Trace, on: BTreeSet<String>| {
            let v = g.noise(density);
            trace.records.push(TickRecord {
                global_index: trace.records.len() as u64,
                ticking_clocks: on,
                valuation: v,
            });
        };
        let pad = self.rng.gen_range(0..=self.cfg.max_pad);
        for _ in 0..pad {
            let on = ticker.next(&mut self.rng);
            noise_rec(self, &mut trace, on);
        }
        for (si, (seg, w)) in segs.iter().zip(windows).enumerate() {
            let mut p = 0;
            while p < w.len() {
                let on = ticker.next(&mut self.rng);
                if on.contains(&seg.shape.clock) {
                    placements.push(Placement {
                        segment: si,
                        pos: p,
                        record: trace.records.len(),
                    });
                    trace.records.push(TickRecord {
                        global_index: trace.records.len() as u64,
                        ticking_clocks: on,
                        valuation: w[p].clone(),
                    });
                    p += 1;
                } else {
                    noise_rec(self, &mut trace, on);
                }
            }
        }
        let pad = self.rng.gen_range(0..=self.cfg.max_pad);
        for _ in 0..pad {
            let on = ticker.next(&mut self.rng);
            noise_rec(self, &mut trace, on);
        }
        Some(Built { trace, placements })
    }

    /// The exit-code contract of checking `t`: conforming or not.
    fn conforms(&self, t: &Trace) -> Result<bool, GenError> {
        let exp = expected(&self.spec.top, self.chart, t, self.spec.mode)?;
        Ok(match self.spec.mode {
            Mode::Detect => exp
                .verdicts
                .iter()
                .any(|v| v.kind == VerdictKind::Detected && v.chart == self.spec.top),
            Mode::Assert => {
                exp.verdicts.iter().any(|v| v.kind == VerdictKind::Pass)
                    && exp.verdicts.iter().all(|v| v.kind != VerdictKind::Fail)
            }
        })
    }

    fn conforming(&mut self) -> Result<Generated, GenError> {
        let segs = self.segments()?;
        for _ in 0..MAX_ATTEMPTS {
            let density = self.cfg.noise;
            if let Some(b) = self.build(&segs, density) {
                if self.conforms(&b.trace)? {
                    return Ok(Generated {
                        trace: b.trace,
                        mutation: None,
                    });
                }
            }
        }
        Err(GenError::Unsatisfiable(format!(
            "no conforming trace for `{}` after {MAX_ATTEMPTS} attempts",
            self.spec.top
        )))
    }

    fn mutated(&mut self, first: usize) -> Result<Generated, GenError> {
        for attempt in 0..MAX_ATTEMPTS {
            let segs = self.segments()?;
            // later attempts use quieter noise so stray matches cannot mask the damage
            let density = if attempt < MAX_ATTEMPTS / 2 { self.cfg.noise } else { 0.0 };
            let Some(mut b) = self.build(&segs, density) else {
                continue;
            };
            if !self.conforms(&b.trace)? {
                continue;
            }
            for k in 0..Mutation::ALL.len() {
                let m = Mutation::ALL[(first + k) % Mutation::ALL.len()];
                let saved = b.trace.clone();
                if let Some(what) = self.apply(m, &segs, &mut b) {
                    if !self.conforms(&b.trace)? {
                        return Ok(Generated {
                            trace: b.trace,
                            mutation: Some((m, what)),
                        });
                    }
                }
                b.trace = saved;
            }
        }
        Err(GenError::Unsatisfiable(format!(
            "no mutation of `{}` breaks it after {MAX_ATTEMPTS} attempts",
            self.spec.top
        )))
    }

    fn apply(&mut self, m: Mutation, segs: &[Segment], b: &mut Built) -> Option<String> {
        let at = |seg: usize, pos: usize| {
            b.placements
                .iter()
                .find(|pl| pl.segment == seg && pl.pos == pos)
                .map(|pl| pl.record)
        };
        let targets: Vec<usize> = (0..segs.len()).filter(|&i| segs[i].target).collect();
        match m {
            Mutation::DropEvent => {
                let mut cands = Vec::new();
                for &si in &targets {
                    for pl in &segs[si].shape.leaves {
                        for o in pl.leaf.occurrences.iter().filter(|o| o.polarity == Polarity::Present) {
                            let r = at(si, pl.offset + o.tick)?;
                            if event_true(&b.trace.records[r].valuation, &o.event.name) {
                                cands.push((r, o.event.name.clone()));
                            }
                        }
                    }
                }
                let (r, e) = cands.choose(&mut self.rng)?.clone();
                b.trace.records[r].valuation.set(e.as_str(), false);
                Some(format!("{e}@{r}"))
            }
            Mutation::SwapTicks => {
                let mut cands = Vec::new();
                for &si in &targets {
                    for p in 0..segs[si].shape.len.saturating_sub(1) {
                        let (r, s) = (at(si, p)?, at(si, p + 1)?);
                        if b.trace.records[r].valuation != b.trace.records[s].valuation {
                            cands.push((r, s));
                        }
                    }
                }
                let (r, s) = *cands.choose(&mut self.rng)?;
                let v = b.trace.records[r].valuation.clone();
                b.trace.records[r].valuation = b.trace.records[s].valuation.clone();
                b.trace.records[s].valuation = v;
                Some(format!("{r},{s}"))
            }
            Mutation::ViolateGuard => {
                let mut cands = Vec::new();
                for &si in &targets {
                    for pl in &segs[si].shape.leaves {
                        for o in pl.leaf.occurrences.iter().filter(|o| o.guard.is_some()) {
                            cands.push((at(si, pl.offset + o.tick)?, o));
                        }
                    }
                }
                let &(r, o) = cands.choose(&mut self.rng)?;
                let g = o.guard.as_ref().expect("filtered on guards");
                let universe = g.support();
                let mask = satisfying_assignment(g, &universe, DEFAULT_UNIVERSE_CAP).ok()??;
                let v = &mut b.trace.records[r].valuation;
                for (i, s) in universe.iter().enumerate() {
                    v.set(s.name.as_str(), mask >> i & 1 == 1);
                }
                v.set(o.event.name.as_str(), o.polarity == Polarity::Absent);
                Some(format!("{}@{r}", o.event.name))
            }
            Mutation::BreakArrow => {
                let mut cands = Vec::new();
                for &si in &targets {
                    for pl in &segs[si].shape.leaves {
                        for a in &pl.leaf.arrows {
                            let r = at(si, pl.offset + a.source.tick)?;
                            let s = at(si, pl.offset + a.target.tick)?;
                            cands.push((r, s, a.source.event.clone(), a.target.event.clone()));
                        }
                    }
                }
                let (r, s, src, tgt) = cands.choose(&mut self.rng)?.clone();
                b.trace.records[r].valuation.set(src.as_str(), false);
                b.trace.records[s].valuation.set(src.as_str(), true);
                Some(format!("{src}@{r}->{tgt}@{s}"))
            }
        }
    }
}

fn plain(shape: Shape<'_>, target: bool) -> Segment<'_> {
    Segment {
        shape,
        forced: Vec::new(),
        target,
    }
}

/// `k` conforming traces of the top chart of `spec`.
pub fn conforming(spec: &SpecFile, k: usize, cfg: &GenConfig) -> Result<Vec<Generated>, GenError> {
    let mut g = Generator::new(spec, cfg.clone());
    (0..k).map(|_| g.conforming()).collect()
}

/// `k` mutated traces, cycling through the mutation kinds.
pub fn mutated(spec: &SpecFile, k: usize, cfg: &GenConfig) -> Result<Vec<Generated>, GenError> {
    let mut g = Generator::new(spec, cfg.clone());
    (0..k).map(|i| g.mutated(i)).collect()
}

/// How often each mutation kind appears in `traces`.
pub fn mutation_counts(traces: &[Generated]) -> BTreeMap<Mutation, usize> {
    let mut out = BTreeMap::new();
    for t in traces {
        if let Some((m, _)) = &t.mutation {
            *out.entry(*m).or_insert(0) += 1;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::parse_spec;
    use crate::runtime::run;
    use crate::synth::synthesize;

    const HANDSHAKE: &str = "events req, ack; props busy; clocks c;\n\
        chart H on c ticks 2 { @0 [busy]: req; @1 ack; arrow req@0 -> ack@1; }";

    #[test]
    fn conforming_traces_detect() {
        let spec = parse_spec(HANDSHAKE).unwrap();
        let net = synthesize(&spec).unwrap();
        let cfg = GenConfig { seed: 7, ..Default::default() };
        let ts = conforming(&spec, 5, &cfg).unwrap();
        for t in &ts {
            assert_eq!(run(&net, &t.trace, Mode::Detect).unwrap().exit_code(), 0);
        }
        let again = conforming(&spec, 5, &cfg).unwrap();
        let text = |v: &[Generated]| v.iter().map(|g| g.to_text(&spec)).collect::<Vec<_>>();
        assert_eq!(text(&ts), text(&again));
        let other = conforming(&spec, 5, &GenConfig { seed: 8, ..Default::default() }).unwrap();
        assert_ne!(text(&ts), text(&other));
    }

    #[test]
    fn mutated_traces_miss() {
        let spec = parse_spec(HANDSHAKE).unwrap();
        let net = synthesize(&spec).unwrap();
        let ts = mutated(&spec, 8, &GenConfig { seed: 3, ..Default::default() }).unwrap();
        for t in &ts {
            assert!(t.mutation.is_some());
            assert_eq!(run(&net, &t.trace, Mode::Detect).unwrap().exit_code(), 1);
            assert!(t.to_text(&spec).starts_with("# mutation: "));
        }
        assert!(mutation_counts(&ts).len() >= 3, "{:?}", mutation_counts(&ts));
    }

    #[test]
    fn implies_mutations_fail() {
        let spec = parse_spec(
            "events req, gnt, done; clocks c; mode assert;\n\
             chart Q on c ticks 1 { @0 req; }\n\
             chart R on c ticks 2 { @0 gnt; @1 done; arrow gnt@0 -> done@1; }\n\
             chart S = implies(Q, R);",
        )
        .unwrap();
        let net = synthesize(&spec).unwrap();
        let cfg = GenConfig { seed: 1, ..Default::default() };
        for t in conforming(&spec, 4, &cfg).unwrap() {
            let r = run(&net, &t.trace, Mode::Assert).unwrap();
            assert_eq!(r.exit_code(), 0);
            assert!(r.summary.pass >= 1);
        }
        for t in mutated(&spec, 4, &cfg).unwrap() {
            assert_eq!(run(&net, &t.trace, Mode::Assert).unwrap().exit_code(), 1);
        }
    }

    #[test]
    fn periodic_schedules() {
        let spec = parse_spec(
            "events req, resp; clocks c1, c2;\n\
             chart Q on c1 ticks 1 { @0 req; }\n\
             chart R on c2 ticks 2 { @0 absent resp; @1 resp; }\n\
             chart X = async(Q, R) { arrow Q.req -> R.resp; }",
        )
        .unwrap();
        let net = synthesize(&spec).unwrap();
        for periods in [vec![1, 1], vec![1, 3], vec![3, 1], vec![2, 5]] {
            let cfg = GenConfig {
                seed: 11,
                schedule: Schedule::Periodic(periods),
                ..Default::default()
            };
            for t in conforming(&spec, 3, &cfg).unwrap() {
                assert_eq!(run(&net, &t.trace, Mode::Detect).unwrap().exit_code(), 0);
            }
        }
    }

    #[test]
    fn unsatisfiable_reported() {
        let spec = parse_spec("events a; clocks c; chart A on c ticks 1 { @0 a; @0 absent a; }").unwrap();
        let err = conforming(&spec, 1, &GenConfig::default()).unwrap_err();
        assert_eq!(err.code(), "E_UNSATISFIABLE_GEN");
    }
}
