use std::collections::BTreeSet;

use crate::chart::{reduce, ChartExpr, LoopCount, Mode, Scesc, SpecFile};
use crate::expr::{SymbolTable, DEFAULT_UNIVERSE_CAP};

use super::build::{construct, Blueprint};
use super::{
    extract_pattern, Check, CheckSource, CrossLink, Monitor, MonitorNet, NetKind, SourceSlot,
    SynthError,
};

/// Monitor for one chart, with every arrow of the chart wired in.
pub fn synthesize_leaf(s: &Scesc) -> Result<Monitor, SynthError> {
    leaf_with(s, Vec::new(), Vec::new())
}

fn leaf_with(s: &Scesc, extra_sources: Vec<SourceSlot>, extra_checks: Vec<Check>) -> Result<Monitor, SynthError> {
    let pattern = extract_pattern(s)?;
    let n = pattern.len();
    let mut sources = extra_sources;
    let mut checks = extra_checks;
    for a in &s.arrows {
        if a.source.tick >= a.target.tick || a.target.tick >= n {
            return Err(SynthError::ArrowScope(format!(
                "arrow {} -> {} must go forward within the {n} ticks of `{}`",
                a.source, a.target, s.name
            )));
        }
        sources.push(SourceSlot {
            event: a.source.event.clone(),
            slot: a.source.tick,
            cross: false,
        });
        checks.push(Check {
            event: a.source.event.clone(),
            slot: a.source.tick,
            source: CheckSource::Local,
            thread: a.target.tick,
        });
    }
    construct(Blueprint {
        name: s.name.clone(),
        clock: s.clock.clone(),
        universe: pattern.support(),
        pattern,
        causality: s.arrows.clone(),
        sources,
        checks,
        cap: DEFAULT_UNIVERSE_CAP,
    })
}

fn alt_branches<'a>(c: &'a ChartExpr, out: &mut Vec<&'a ChartExpr>) {
    match c {
        ChartExpr::Alt(a, b) => {
            alt_branches(a, out);
            alt_branches(b, out);
        }
        other => out.push(other),
    }
}

fn reduced_monitor(c: &ChartExpr) -> Result<Monitor, SynthError> {
    synthesize_leaf(&reduce(c)?.chart)
}

/// Builds the monitor net of a chart expression.
pub fn compose(c: &ChartExpr, symtab: &SymbolTable) -> Result<MonitorNet, SynthError> {
    let (kind, monitors, cross) = match c {
        ChartExpr::Alt(..) => {
            let mut branches = Vec::new();
            alt_branches(c, &mut branches);
            let monitors = branches
                .into_iter()
                .map(reduced_monitor)
                .collect::<Result<Vec<_>, _>>()?;
            (NetKind::Alt, monitors, Vec::new())
        }
        ChartExpr::Loop {
            body,
            count: LoopCount::Unbounded,
        } => (NetKind::Repeat, vec![reduced_monitor(body)?], Vec::new()),
        ChartExpr::Implies {
            antecedent,
            consequent,
        } => {
            let a = reduced_monitor(antecedent)?;
            let b = reduced_monitor(consequent)?;
            if a.clock != b.clock {
                return Err(crate::chart::ChartError::ClockMismatch {
                    left: a.name,
                    left_clock: a.clock,
                    right: b.name,
                    right_clock: b.clock,
                }
                .into());
            }
            (NetKind::Implies, vec![a, b], Vec::new())
        }
        ChartExpr::AsyncPar { children, arrows } => {
            let reduced = children.iter().map(reduce).collect::<Result<Vec<_>, _>>()?;
            let mut clocks = BTreeSet::new();
            for r in &reduced {
                if !clocks.insert(r.chart.clock.clone()) {
                    return Err(SynthError::AsyncSameClock(format!(
                        "two components of `{}` run on clock `{}`",
                        c.label(),
                        r.chart.clock
                    )));
                }
            }
            let locate = |chart: &str| -> Result<(usize, usize), SynthError> {
                let mut hit = None;
                for (i, r) in reduced.iter().enumerate() {
                    let Some((_, off)) = r.offsets.iter().find(|(n, _)| n == chart) else {
                        continue;
                    };
                    if hit.is_some() || r.offset_of(chart).is_none() {
                        return Err(SynthError::ArrowScope(format!("`{chart}` occurs more than once")));
                    }
                    hit = Some((i, *off));
                }
                hit.ok_or_else(|| SynthError::ArrowScope(format!("`{chart}` is not a component")))
            };
            let mut sources: Vec<Vec<SourceSlot>> = vec![Vec::new(); reduced.len()];
            let mut checks: Vec<Vec<Check>> = vec![Vec::new(); reduced.len()];
            let mut links = Vec::new();
            for a in arrows {
                let (si, so) = locate(&a.source.chart)?;
                let (ti, to) = locate(&a.target.chart)?;
                if si == ti {
                    return Err(SynthError::ArrowScope(format!(
                        "cross-domain arrow {} -> {} stays inside one component",
                        a.source, a.target
                    )));
                }
                let (slot, target_slot) = (so + a.source.tick, to + a.target.tick);
                sources[si].push(SourceSlot {
                    event: a.source.event.clone(),
                    slot,
                    cross: true,
                });
                checks[ti].push(Check {
                    event: a.source.event.clone(),
                    slot,
                    source: CheckSource::Remote { monitor: si },
                    thread: target_slot,
                });
                links.push(CrossLink {
                    source_monitor: si,
                    event: a.source.event.clone(),
                    source_slot: slot,
                    target_monitor: ti,
                    target_event: a.target.event.clone(),
                    target_slot,
                });
            }
            let monitors = reduced
                .iter()
                .zip(sources.into_iter().zip(checks))
                .map(|(r, (s, k))| leaf_with(&r.chart, s, k))
                .collect::<Result<Vec<_>, _>>()?;
            (NetKind::Async, monitors, links)
        }
        other => (NetKind::Single, vec![reduced_monitor(other)?], Vec::new()),
    };
    Ok(MonitorNet {
        name: c.label(),
        symbols: symtab.clone(),
        kind,
        monitors,
        cross,
        mode: Mode::Detect,
    })
}

/// Synthesizes the top chart of a spec.
pub fn synthesize(spec: &SpecFile) -> Result<MonitorNet, SynthError> {
    let mut net = compose(spec.top_chart(), &spec.symbols)?;
    net.name = spec.top.clone();
    net.mode = spec.mode;
    Ok(net)
}
