use super::{CausalityArrow, ChartError, ChartExpr, LoopCount, OccurrenceRef, Scesc};

/// Replaces every `seq` of single-clock leaves by one concatenated leaf,
/// flattening children first. Other nodes are rebuilt around flattened children.
pub fn flatten_seq(c: &ChartExpr) -> Result<ChartExpr, ChartError> {
    Ok(match c {
        ChartExpr::Leaf(_) => c.clone(),
        ChartExpr::Seq(a, b) => match (flatten_seq(a)?, flatten_seq(b)?) {
            (ChartExpr::Leaf(x), ChartExpr::Leaf(y)) => ChartExpr::Leaf(concat(&x, &y)?),
            (x, y) => ChartExpr::seq(x, y),
        },
        ChartExpr::Par { left, right, pad } => {
            ChartExpr::par(flatten_seq(left)?, flatten_seq(right)?, *pad)
        }
        ChartExpr::Alt(a, b) => ChartExpr::alt(flatten_seq(a)?, flatten_seq(b)?),
        ChartExpr::Loop { body, count } => ChartExpr::repeat(flatten_seq(body)?, *count),
        ChartExpr::Implies {
            antecedent,
            consequent,
        } => ChartExpr::implies(flatten_seq(antecedent)?, flatten_seq(consequent)?),
        ChartExpr::AsyncPar { children, arrows } => ChartExpr::AsyncPar {
            children: children.iter().map(flatten_seq).collect::<Result<_, _>>()?,
            arrows: arrows.clone(),
        },
    })
}

/// A pattern-reducible expression collapsed into one leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reduced {
    pub chart: Scesc,
    /// Tick offset of every original leaf instance inside `chart`, in order.
    pub offsets: Vec<(String, usize)>,
}

impl Reduced {
    /// Offset of a leaf that occurs exactly once.
    pub fn offset_of(&self, leaf: &str) -> Option<usize> {
        let mut it = self.offsets.iter().filter(|(n, _)| n == leaf);
        match (it.next(), it.next()) {
            (Some((_, off)), None) => Some(*off),
            _ => None,
        }
    }
}

/// Collapses `seq`, `par` and bounded `loop` into a single leaf.
pub fn reduce(c: &ChartExpr) -> Result<Reduced, ChartError> {
    match c {
        ChartExpr::Leaf(s) => Ok(Reduced {
            chart: s.clone(),
            offsets: vec![(s.name.clone(), 0)],
        }),
        ChartExpr::Seq(a, b) => {
            let (x, y) = (reduce(a)?, reduce(b)?);
            let shift = x.chart.tick_count;
            let mut offsets = x.offsets;
            offsets.extend(y.offsets.into_iter().map(|(n, o)| (n, o + shift)));
            Ok(Reduced {
                chart: concat(&x.chart, &y.chart)?,
                offsets,
            })
        }
        ChartExpr::Par { left, right, pad } => {
            let (x, y) = (reduce(left)?, reduce(right)?);
            let mut offsets = x.offsets;
            offsets.extend(y.offsets);
            Ok(Reduced {
                chart: overlay(&x.chart, &y.chart, *pad)?,
                offsets,
            })
        }
        ChartExpr::Loop {
            body,
            count: LoopCount::Times(k),
        } => {
            if *k == 0 {
                return Err(ChartError::LoopCount(body.label()));
            }
            let b = reduce(body)?;
            let mut chart = b.chart.clone();
            let mut offsets = b.offsets.clone();
            for i in 1..*k {
                let shift = i * b.chart.tick_count;
                chart = concat(&chart, &b.chart)?;
                offsets.extend(b.offsets.iter().map(|(n, o)| (n.clone(), o + shift)));
            }
            chart.name = format!("{}_x{k}", b.chart.name);
            Ok(Reduced { chart, offsets })
        }
        other => Err(ChartError::UnsupportedNesting(format!(
            "`{}` does not reduce to a single pattern",
            other.label()
        ))),
    }
}

fn same_clock(a: &Scesc, b: &Scesc) -> Result<(), ChartError> {
    if a.clock != b.clock {
        return Err(ChartError::ClockMismatch {
            left: a.name.clone(),
            left_clock: a.clock.clone(),
            right: b.name.clone(),
            right_clock: b.clock.clone(),
        });
    }
    Ok(())
}

fn shifted(arrow: &CausalityArrow, by: usize) -> CausalityArrow {
    let shift = |r: &OccurrenceRef| OccurrenceRef {
        event: r.event.clone(),
        tick: r.tick + by,
    };
    CausalityArrow {
        source: shift(&arrow.source),
        target: shift(&arrow.target),
    }
}

fn concat(a: &Scesc, b: &Scesc) -> Result<Scesc, ChartError> {
    same_clock(a, b)?;
    let shift = a.tick_count;
    let mut out = Scesc::new(&format!("{}_{}", a.name, b.name), &a.clock, a.tick_count + b.tick_count);
    for o in &a.occurrences {
        out.push(o.clone());
    }
    for o in &b.occurrences {
        let mut o = o.clone();
        o.tick += shift;
        out.push(o);
    }
    out.arrows = a.arrows.clone();
    out.arrows.extend(b.arrows.iter().map(|x| shifted(x, shift)));
    Ok(out)
}

fn overlay(a: &Scesc, b: &Scesc, pad: bool) -> Result<Scesc, ChartError> {
    same_clock(a, b)?;
    if a.tick_count != b.tick_count && !pad {
        return Err(ChartError::ParLength {
            left: a.name.clone(),
            left_len: a.tick_count,
            right: b.name.clone(),
            right_len: b.tick_count,
        });
    }
    let mut out = Scesc::new(
        &format!("{}_par_{}", a.name, b.name),
        &a.clock,
        a.tick_count.max(b.tick_count),
    );
    for o in a.occurrences.iter().chain(&b.occurrences) {
        out.push(o.clone());
    }
    out.arrows = a.arrows.iter().chain(&b.arrows).cloned().collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::EventOccurrence;

    fn leaf(name: &str, n: usize, ev: &str) -> Scesc {
        Scesc::new(name, "c1", n).with(EventOccurrence::present(ev, 0))
    }

    #[test]
    fn seq_of_two_leaves() {
        let a = leaf("A", 2, "a").with(EventOccurrence::present("x", 1)).with_arrow(("a", 0), ("x", 1));
        let b = leaf("B", 3, "b").with_arrow(("b", 0), ("b", 0));
        let flat = flatten_seq(&ChartExpr::seq(ChartExpr::Leaf(a), ChartExpr::Leaf(b))).unwrap();
        let ChartExpr::Leaf(ab) = flat else { panic!() };
        assert_eq!(ab.name, "A_B");
        assert_eq!(ab.tick_count, 5);
        assert_eq!(ab.occurrences[2].event.name, "b");
        assert_eq!(ab.occurrences[2].tick, 2);
        assert_eq!(ab.arrows[1].source, OccurrenceRef::new("b", 2));
    }

    #[test]
    fn nested_seq_sums_lengths() {
        let e = ChartExpr::seq(
            ChartExpr::seq(ChartExpr::Leaf(leaf("A", 1, "a")), ChartExpr::Leaf(leaf("B", 2, "b"))),
            ChartExpr::Leaf(leaf("C", 3, "c")),
        );
        let ChartExpr::Leaf(s) = flatten_seq(&e).unwrap() else { panic!() };
        assert_eq!(s.tick_count, 6);
    }

    #[test]
    fn seq_under_alt_flattens() {
        let e = ChartExpr::alt(
            ChartExpr::seq(ChartExpr::Leaf(leaf("A", 1, "a")), ChartExpr::Leaf(leaf("B", 1, "b"))),
            ChartExpr::Leaf(leaf("C", 1, "c")),
        );
        let ChartExpr::Alt(l, _) = flatten_seq(&e).unwrap() else { panic!() };
        assert!(matches!(*l, ChartExpr::Leaf(ref s) if s.tick_count == 2));
    }

    #[test]
    fn clock_mismatch() {
        let mut b = leaf("B", 1, "b");
        b.clock = "c2".into();
        let err = flatten_seq(&ChartExpr::seq(ChartExpr::Leaf(leaf("A", 1, "a")), ChartExpr::Leaf(b)))
            .unwrap_err();
        assert_eq!(err.code(), "E_CLOCK_MISMATCH");
    }

    #[test]
    fn reduce_par_and_loop() {
        let e = ChartExpr::repeat(
            ChartExpr::par(ChartExpr::Leaf(leaf("A", 2, "a")), ChartExpr::Leaf(leaf("B", 1, "b")), true),
            LoopCount::Times(2),
        );
        let r = reduce(&e).unwrap();
        assert_eq!(r.chart.tick_count, 4);
        assert_eq!(r.offsets, vec![("A".into(), 0), ("B".into(), 0), ("A".into(), 2), ("B".into(), 2)]);
        assert_eq!(r.offset_of("A"), None);
        let err = reduce(&ChartExpr::par(
            ChartExpr::Leaf(leaf("A", 2, "a")),
            ChartExpr::Leaf(leaf("B", 1, "b")),
            false,
        ))
        .unwrap_err();
        assert_eq!(err.code(), "E_PAR_LENGTH");
    }
}
