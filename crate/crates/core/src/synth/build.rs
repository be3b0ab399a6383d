use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::chart::CausalityArrow;
use crate::expr::{CompiledExpr, Expr, ExprError, Symbol, DEFAULT_UNIVERSE_CAP};

use super::{
    Action, Check, CheckSource, Monitor, MonitorState, Pattern, SourceSlot, StateId, SynthError,
    Transition,
};

/// Longest pattern a monitor supports (state sets are 64-bit masks).
pub const MAX_PATTERN_LEN: usize = 63;
/// Upper bound on the number of synthesized states.
pub const MAX_STATES: usize = 1 << 16;

/// Everything a monitor is built from.
pub(crate) struct Blueprint {
    pub name: String,
    pub clock: String,
    pub pattern: Pattern,
    pub universe: BTreeSet<Symbol>,
    pub causality: Vec<CausalityArrow>,
    pub sources: Vec<SourceSlot>,
    pub checks: Vec<Check>,
    pub cap: usize,
}

/// Builds the sliding-window detector for `p`: after any input sequence the
/// state holds exactly the lengths `k` whose last `k` inputs satisfy `P[0..k]`.
pub fn build_monitor(p: &Pattern, universe: &BTreeSet<Symbol>) -> Result<Monitor, SynthError> {
    construct(Blueprint {
        name: "monitor".into(),
        clock: "clk".into(),
        pattern: p.clone(),
        universe: universe.clone(),
        causality: Vec::new(),
        sources: Vec::new(),
        checks: Vec::new(),
        cap: DEFAULT_UNIVERSE_CAP,
    })
}

/// Adds scoreboard bookkeeping for an arrow `e_x -> e_y` inside the chart:
/// threads passing `e_x`'s tick with `e_x` true record it, threads passing
/// `e_y`'s tick survive only if their own record exists, and abandoned
/// threads delete what they recorded.
pub fn add_causality_check(m: &Monitor, arrow: &CausalityArrow) -> Result<Monitor, SynthError> {
    let n = m.n();
    if arrow.source.tick >= arrow.target.tick || arrow.target.tick >= n {
        return Err(SynthError::ArrowScope(format!(
            "arrow {} -> {} must go forward within the {n} ticks of `{}`",
            arrow.source, arrow.target, m.name
        )));
    }
    let mut sources = m.sources.clone();
    sources.push(SourceSlot {
        event: arrow.source.event.clone(),
        slot: arrow.source.tick,
        cross: false,
    });
    let mut checks = m.checks.clone();
    checks.push(Check {
        event: arrow.source.event.clone(),
        slot: arrow.source.tick,
        source: CheckSource::Local,
        thread: arrow.target.tick,
    });
    let mut causality = m.causality.clone();
    causality.push(arrow.clone());
    construct(Blueprint {
        name: m.name.clone(),
        clock: m.clock.clone(),
        pattern: m.pattern.clone(),
        universe: m.universe.clone(),
        causality,
        sources,
        checks,
        cap: DEFAULT_UNIVERSE_CAP.max(m.universe.len()),
    })
}

/// Maps each state to its longest matched prefix when every state tracks at
/// most one live attempt (`{0}` or `{0, k}`); the automaton is then the
/// integer-state automaton over `0..=n`. `None` when some state carries
/// overlapping attempts.
pub fn integer_state_view(m: &Monitor) -> Option<BTreeMap<StateId, usize>> {
    m.states
        .iter()
        .map(|s| {
            if s.matched_lengths.len() <= 2 {
                Some((s.id, *s.matched_lengths.last().unwrap_or(&0)))
            } else {
                None
            }
        })
        .collect()
}

/// Target, actions, checks and the cubes leading there.
type Outcome = (StateId, Vec<Action>, Vec<Check>, Vec<Vec<(usize, bool)>>);

struct Cell {
    /// Predicates split on, with the side this cell took.
    lits: Vec<(usize, bool)>,
    members: Vec<u64>,
    known: HashMap<usize, bool>,
}

fn conjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::And(a, b) => {
            conjuncts(a, out);
            conjuncts(b, out);
        }
        Expr::Const(true) => {}
        other => {
            if !out.contains(other) {
                out.push(other.clone())
            }
        }
    }
}

fn disjuncts(e: &Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Or(a, b) => {
            disjuncts(a, out);
            disjuncts(b, out);
        }
        other => out.push(other.clone()),
    }
}

fn negate(e: &Expr) -> Expr {
    match e {
        Expr::Const(b) => Expr::Const(!b),
        Expr::Not(x) => (**x).clone(),
        Expr::Or(a, b) => Expr::and(negate(a), negate(b)),
        other => Expr::not(other.clone()),
    }
}

/// Joins cubes that differ in the polarity of exactly one predicate.
fn merge_cubes(mut cubes: Vec<Vec<(usize, bool)>>) -> Vec<Vec<(usize, bool)>> {
    'again: loop {
        for i in 0..cubes.len() {
            for j in i + 1..cubes.len() {
                let (a, b) = (&cubes[i], &cubes[j]);
                if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| x.0 != y.0) {
                    continue;
                }
                let diff: Vec<usize> = (0..a.len()).filter(|&k| a[k].1 != b[k].1).collect();
                if let [k] = diff[..] {
                    let mut merged = a.clone();
                    merged.remove(k);
                    cubes.remove(j);
                    cubes[i] = merged;
                    continue 'again;
                }
            }
        }
        return cubes;
    }
}

/// A readable guard for the union of `cubes`, equivalent over every
/// assignment in `masks`.
fn guard_of<F>(cubes: &[Vec<(usize, bool)>], pool: &[(Expr, CompiledExpr)], masks: &[u64], index: &F) -> Result<Expr, SynthError>
where
    F: Fn(&Symbol) -> Option<usize>,
{
    let mut terms = Vec::new();
    for cube in cubes {
        // positive predicates contribute their conjuncts; negated ones stay grouped
        let mut pos: Vec<Expr> = Vec::new();
        let mut neg: Vec<Vec<Expr>> = Vec::new();
        for &(p, side) in cube {
            if side {
                conjuncts(&pool[p].0, &mut pos);
            } else {
                let mut inner = Vec::new();
                conjuncts(&pool[p].0, &mut inner);
                neg.push(inner);
            }
        }
        let build = |pos: &[Expr], neg: &[Vec<Expr>]| {
            let mut all = Vec::new();
            for e in pos {
                conjuncts(e, &mut all);
            }
            for g in neg {
                match &g[..] {
                    [one] => conjuncts(&negate(one), &mut all),
                    _ => conjuncts(&Expr::not(Expr::and_all(g.iter().cloned())), &mut all),
                }
            }
            Expr::and_all(all)
        };
        let sig = |e: &Expr| -> Result<Vec<bool>, SynthError> {
            let c = compile_over(e, index)?;
            Ok(masks.iter().map(|&m| c.eval_mask(m)).collect())
        };
        let want = sig(&build(&pos, &neg))?;
        let mut changed = true;
        while changed {
            changed = false;
            for i in (0..pos.len()).rev() {
                let mut p2 = pos.clone();
                p2.remove(i);
                if sig(&build(&p2, &neg))? == want {
                    pos = p2;
                    changed = true;
                }
            }
            for i in 0..pos.len() {
                let mut alts = Vec::new();
                disjuncts(&pos[i], &mut alts);
                for k in (0..alts.len()).rev() {
                    if alts.len() < 2 {
                        break;
                    }
                    let mut fewer = alts.clone();
                    fewer.remove(k);
                    let mut p2 = pos.clone();
                    p2[i] = fewer.iter().cloned().reduce(Expr::or).expect("non-empty");
                    if sig(&build(&p2, &neg))? == want {
                        pos = p2;
                        alts = fewer;
                        changed = true;
                    }
                }
            }
            for i in (0..neg.len()).rev() {
                let mut n2 = neg.clone();
                n2.remove(i);
                if sig(&build(&pos, &n2))? == want {
                    neg = n2;
                    changed = true;
                    continue;
                }
                for j in (0..neg[i].len()).rev() {
                    if neg[i].len() < 2 {
                        break;
                    }
                    let mut n2 = neg.clone();
                    n2[i].remove(j);
                    if sig(&build(&pos, &n2))? == want {
                        neg = n2;
                        changed = true;
                    }
                }
            }
        }
        terms.push(build(&pos, &neg));
    }
    Ok(terms.into_iter().reduce(Expr::or).unwrap_or(Expr::Const(false)))
}

pub(crate) fn construct(bp: Blueprint) -> Result<Monitor, SynthError> {
    let n = bp.pattern.len();
    if n == 0 {
        return Err(SynthError::EmptyPattern(bp.name));
    }
    if n > MAX_PATTERN_LEN {
        return Err(SynthError::PatternTooLong {
            len: n,
            max: MAX_PATTERN_LEN,
        });
    }

    let mut sources: Vec<SourceSlot> = Vec::new();
    for s in &bp.sources {
        if s.slot >= n {
            return Err(SynthError::ArrowScope(format!(
                "source {}@{} lies outside the {n} ticks of `{}`",
                s.event, s.slot, bp.name
            )));
        }
        match sources
            .iter_mut()
            .find(|x| x.event == s.event && x.slot == s.slot)
        {
            Some(x) => x.cross |= s.cross,
            None => sources.push(s.clone()),
        }
    }
    sources.sort();
    let mut check_specs = bp.checks.clone();
    check_specs.sort();
    check_specs.dedup();
    for c in &check_specs {
        if c.thread >= n {
            return Err(SynthError::ArrowScope(format!(
                "check on tick {} lies outside the {n} ticks of `{}`",
                c.thread, bp.name
            )));
        }
    }

    let mut universe = bp.universe.clone();
    universe.extend(bp.pattern.support());
    universe.extend(sources.iter().map(|s| Symbol::event(s.event.as_str())));
    if universe.len() > bp.cap {
        return Err(ExprError::UniverseTooLarge {
            size: universe.len(),
            cap: bp.cap,
        }
        .into());
    }
    let order: Vec<Symbol> = universe.iter().cloned().collect();
    let index = |s: &Symbol| order.iter().position(|u| u.name == s.name);

    // Predicate pool: pattern elements, then source atoms; syntactic duplicates share an id.
    let mut pool: Vec<(Expr, CompiledExpr)> = Vec::new();
    let mut intern = |e: Expr| -> Result<usize, SynthError> {
        if let Some(i) = pool.iter().position(|(x, _)| *x == e) {
            return Ok(i);
        }
        let compiled = compile_over(&e, &index)?;
        pool.push((e, compiled));
        Ok(pool.len() - 1)
    };
    let element_pred: Vec<usize> = bp
        .pattern
        .elements
        .iter()
        .map(|e| intern(e.clone()))
        .collect::<Result<_, _>>()?;
    let source_pred: Vec<usize> = sources
        .iter()
        .map(|s| intern(Expr::event(&s.event)))
        .collect::<Result<_, _>>()?;

    let all_masks: Vec<u64> = (0..1u64 << order.len()).collect();
    let full = (1u64 << (n + 1)) - 1;

    let mut states: Vec<MonitorState> = Vec::new();
    let mut ids: HashMap<u64, StateId> = HashMap::new();
    let mut queue: VecDeque<u64> = VecDeque::new();
    let mut intern_state = |mask: u64,
                            states: &mut Vec<MonitorState>,
                            queue: &mut VecDeque<u64>|
     -> Result<StateId, SynthError> {
        debug_assert!(mask & 1 == 1 && mask & !full == 0);
        if let Some(&id) = ids.get(&mask) {
            return Ok(id);
        }
        if states.len() >= MAX_STATES {
            return Err(SynthError::StateLimit(MAX_STATES));
        }
        let id = states.len();
        let matched_lengths: BTreeSet<usize> = (0..=n).filter(|k| mask >> k & 1 == 1).collect();
        states.push(MonitorState {
            id,
            is_final: matched_lengths.contains(&n),
            matched_lengths,
        });
        ids.insert(mask, id);
        queue.push_back(mask);
        Ok(id)
    };

    intern_state(1, &mut states, &mut queue)?;
    let mut transitions = Vec::new();
    while let Some(mask) = queue.pop_front() {
        let from = ids_lookup(&states, mask);
        let live: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();

        let mut relevant: Vec<usize> = Vec::new();
        for &k in &live {
            if !relevant.contains(&element_pred[k]) {
                relevant.push(element_pred[k]);
            }
        }
        for (i, s) in sources.iter().enumerate() {
            if live.contains(&s.slot) && !relevant.contains(&source_pred[i]) {
                relevant.push(source_pred[i]);
            }
        }

        let mut cells = vec![Cell {
            lits: Vec::new(),
            members: all_masks.clone(),
            known: HashMap::new(),
        }];
        for &p in &relevant {
            let compiled = &pool[p].1;
            let mut next = Vec::with_capacity(cells.len() * 2);
            for cell in cells {
                let (pos, neg): (Vec<u64>, Vec<u64>) =
                    cell.members.iter().partition(|&&m| compiled.eval_mask(m));
                match (pos.is_empty(), neg.is_empty()) {
                    (false, false) => {
                        let mut kp = cell.known.clone();
                        kp.insert(p, true);
                        let mut kn = cell.known;
                        kn.insert(p, false);
                        let mut lp = cell.lits.clone();
                        lp.push((p, true));
                        let mut ln = cell.lits;
                        ln.push((p, false));
                        next.push(Cell {
                            lits: lp,
                            members: pos,
                            known: kp,
                        });
                        next.push(Cell {
                            lits: ln,
                            members: neg,
                            known: kn,
                        });
                    }
                    (false, true) => {
                        let mut known = cell.known;
                        known.insert(p, true);
                        next.push(Cell {
                            known,
                            members: pos,
                            lits: cell.lits,
                        });
                    }
                    (true, false) => {
                        let mut known = cell.known;
                        known.insert(p, false);
                        next.push(Cell {
                            known,
                            members: neg,
                            lits: cell.lits,
                        });
                    }
                    (true, true) => {}
                }
            }
            cells = next;
        }

        // cells with the same outcome share one transition
        let mut outcomes: Vec<Outcome> = Vec::new();
        for cell in cells {
            let extends = |k: usize| cell.known.get(&element_pred[k]) == Some(&true);
            let advancing: Vec<usize> = live.iter().copied().filter(|&k| extends(k)).collect();
            let target_mask = advancing.iter().fold(1u64, |m, &k| m | 1 << (k + 1));

            let mut actions = Vec::new();
            for (i, s) in sources.iter().enumerate() {
                if advancing.contains(&s.slot) && cell.known.get(&source_pred[i]) == Some(&true) {
                    actions.push(Action::Add {
                        event: s.event.clone(),
                        slot: s.slot,
                    });
                }
            }
            for &k in live.iter().filter(|&&k| k > 0 && !extends(k)) {
                for s in sources.iter().filter(|s| s.slot < k) {
                    actions.push(Action::Del {
                        event: s.event.clone(),
                        slot: s.slot,
                        thread: k,
                    });
                }
            }
            let checks: Vec<Check> = check_specs
                .iter()
                .filter(|c| advancing.contains(&c.thread))
                .cloned()
                .collect();

            let to = intern_state(target_mask, &mut states, &mut queue)?;
            // Failed checks drop their thread, so every subset of gated lengths may vanish.
            let gated: Vec<u64> = {
                let mut g: Vec<u64> = checks.iter().map(|c| 1u64 << (c.thread + 1)).collect();
                g.sort();
                g.dedup();
                g
            };
            for sub in 1..1u64 << gated.len() {
                let drop = gated
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| sub >> i & 1 == 1)
                    .fold(0u64, |m, (_, b)| m | b);
                intern_state(target_mask & !drop, &mut states, &mut queue)?;
            }
            match outcomes
                .iter_mut()
                .find(|o| o.0 == to && o.1 == actions && o.2 == checks)
            {
                Some(o) => o.3.push(cell.lits),
                None => outcomes.push((to, actions, checks, vec![cell.lits])),
            }
        }
        for (to, actions, checks, cubes) in outcomes {
            let guard = guard_of(&merge_cubes(cubes), &pool, &all_masks, &index)?;
            transitions.push(Transition {
                from,
                guard,
                actions,
                checks,
                to,
            });
        }
    }

    Ok(Monitor::assemble(
        bp.name,
        bp.clock,
        bp.pattern,
        universe,
        states,
        transitions,
        bp.causality,
        sources,
        check_specs,
    ))
}

fn ids_lookup(states: &[MonitorState], mask: u64) -> StateId {
    states
        .iter()
        .find(|s| s.mask() == mask)
        .map(|s| s.id)
        .expect("queued masks are interned")
}

fn compile_over<F>(e: &Expr, index: &F) -> Result<CompiledExpr, SynthError>
where
    F: Fn(&Symbol) -> Option<usize>,
{
    Ok(match e {
        Expr::Const(b) => CompiledExpr::Const(*b),
        Expr::Sym(s) => CompiledExpr::Var(
            index(s).ok_or_else(|| ExprError::UndeclaredSymbol(s.name.clone()))?,
        ),
        Expr::Not(x) => CompiledExpr::Not(Box::new(compile_over(x, index)?)),
        Expr::And(a, b) => {
            CompiledExpr::And(Box::new(compile_over(a, index)?), Box::new(compile_over(b, index)?))
        }
        Expr::Or(a, b) => {
            CompiledExpr::Or(Box::new(compile_over(a, index)?), Box::new(compile_over(b, index)?))
        }
    })
}
