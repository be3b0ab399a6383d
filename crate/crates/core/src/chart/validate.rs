use std::fmt;

use crate::expr::SymbolKind;

use super::{ChartExpr, CrossRef, LoopCount, Mode, OccurrenceRef, Scesc, SpecFile};

/// One invariant violation, with a stable `E_*` code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: &'static str,
    pub chart: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: chart `{}`: {}", self.code, self.chart, self.message)
    }
}

/// Checks every structural invariant. An empty result means the spec can be
/// synthesized without structural errors.
pub fn validate(spec: &SpecFile) -> Vec<Diagnostic> {
    let mut v = Validator { out: Vec::new() };
    for def in &spec.charts {
        match &def.body {
            ChartExpr::Leaf(s) if s.name == def.name => v.leaf(s),
            body => v.top(body, &def.name),
        }
    }
    if spec.mode == Mode::Assert && !matches!(spec.top_chart(), ChartExpr::Implies { .. }) {
        v.push(
            "E_ASSERT_NOT_IMPL",
            &spec.top,
            "assert mode requires the top-level chart to be an `implies`",
        );
    }
    let mut out: Vec<Diagnostic> = Vec::new();
    for d in v.out {
        if !out.contains(&d) {
            out.push(d);
        }
    }
    out
}

struct Validator {
    out: Vec<Diagnostic>,
}

impl Validator {
    fn push(&mut self, code: &'static str, chart: &str, message: impl Into<String>) {
        self.out.push(Diagnostic {
            code,
            chart: chart.to_string(),
            message: message.into(),
        });
    }

    fn leaf(&mut self, s: &Scesc) {
        let name = &s.name;
        if s.tick_count == 0 {
            self.push("E_TICK_COUNT", name, "a chart needs at least one tick");
        }
        for o in &s.occurrences {
            if o.tick >= s.tick_count {
                self.push(
                    "E_TICK_RANGE",
                    name,
                    format!("`{}` at tick {} is outside 0..{}", o.event.name, o.tick, s.tick_count),
                );
            }
            if o.event.kind != SymbolKind::Event {
                self.push(
                    "E_NOT_EVENT",
                    name,
                    format!("`{}` is a proposition, not an event", o.event.name),
                );
            }
        }
        for a in &s.arrows {
            for end in [&a.source, &a.target] {
                self.endpoint(s, end);
            }
            if a.source == a.target {
                self.push("E_ARROW_ORDER", name, format!("arrow from {} to itself", a.source));
            } else if a.source.tick >= a.target.tick {
                self.push(
                    "E_ARROW_ORDER",
                    name,
                    format!(
                        "arrow {} -> {} must point to a strictly later tick",
                        a.source, a.target
                    ),
                );
            }
        }
    }

    fn endpoint(&mut self, s: &Scesc, r: &OccurrenceRef) {
        if s.find_present(r).is_none() {
            self.push(
                "E_ARROW_ENDPOINT",
                &s.name,
                format!("{r} is not a present occurrence of `{}`", s.name),
            );
        }
    }

    fn top(&mut self, e: &ChartExpr, ctx: &str) {
        match e {
            ChartExpr::Alt(..) => {
                self.alt(e, ctx);
                self.same_clock(e, ctx);
            }
            ChartExpr::Loop {
                body,
                count: LoopCount::Unbounded,
            } => self.pattern(body, ctx),
            ChartExpr::Implies {
                antecedent,
                consequent,
            } => {
                self.pattern(antecedent, ctx);
                self.pattern(consequent, ctx);
                self.same_clock(e, ctx);
            }
            ChartExpr::AsyncPar { children, arrows } => {
                for c in children {
                    self.pattern(c, ctx);
                }
                let clocks: Vec<Option<&str>> = children.iter().map(|c| first_clock(c)).collect();
                for i in 0..clocks.len() {
                    for j in i + 1..clocks.len() {
                        if clocks[i].is_some() && clocks[i] == clocks[j] {
                            self.push(
                                "E_ASYNC_SAME_CLOCK",
                                ctx,
                                format!(
                                    "`{}` and `{}` are both on clock `{}`",
                                    children[i].label(),
                                    children[j].label(),
                                    clocks[i].unwrap_or_default()
                                ),
                            );
                        }
                    }
                }
                for a in arrows {
                    let src = self.cross_endpoint(children, &a.source, ctx);
                    let dst = self.cross_endpoint(children, &a.target, ctx);
                    if let (Some(x), Some(y)) = (src, dst) {
                        if x == y {
                            self.push(
                                "E_ARROW_SCOPE",
                                ctx,
                                format!(
                                    "cross-domain arrow {} -> {} stays inside one component",
                                    a.source, a.target
                                ),
                            );
                        }
                    }
                }
            }
            _ => self.pattern(e, ctx),
        }
    }

    fn alt(&mut self, e: &ChartExpr, ctx: &str) {
        match e {
            ChartExpr::Alt(a, b) => {
                self.alt(a, ctx);
                self.alt(b, ctx);
            }
            other => self.pattern(other, ctx),
        }
    }

    /// Expressions that must reduce to a single fixed-length pattern.
    fn pattern(&mut self, e: &ChartExpr, ctx: &str) {
        match e {
            ChartExpr::Leaf(_) => {}
            ChartExpr::Seq(a, b) => {
                self.pattern(a, ctx);
                self.pattern(b, ctx);
                self.same_clock(e, ctx);
            }
            ChartExpr::Par { left, right, pad } => {
                self.pattern(left, ctx);
                self.pattern(right, ctx);
                self.same_clock(e, ctx);
                if let (Some(l), Some(r)) = (left.tick_len(), right.tick_len()) {
                    if l != r && !pad {
                        self.push(
                            "E_PAR_LENGTH",
                            ctx,
                            format!(
                                "`{}` has {l} ticks but `{}` has {r}; use `par pad` to pad the shorter",
                                left.label(),
                                right.label()
                            ),
                        );
                    }
                }
            }
            ChartExpr::Loop {
                body,
                count: LoopCount::Times(k),
            } => {
                if *k == 0 {
                    self.push("E_LOOP_COUNT", ctx, "loop count must be positive");
                }
                self.pattern(body, ctx);
            }
            other => self.push(
                "E_UNSUPPORTED_NESTING",
                ctx,
                format!(
                    "`{}` cannot appear here; only leaves, seq, par and bounded loops nest below the top level",
                    other.label()
                ),
            ),
        }
    }

    fn same_clock(&mut self, e: &ChartExpr, ctx: &str) {
        let (a, b) = match e {
            ChartExpr::Seq(a, b)
            | ChartExpr::Alt(a, b)
            | ChartExpr::Par {
                left: a, right: b, ..
            }
            | ChartExpr::Implies {
                antecedent: a,
                consequent: b,
            } => (a, b),
            _ => return,
        };
        if let (Some(x), Some(y)) = (first_clock(a), first_clock(b)) {
            if x != y {
                self.push(
                    "E_CLOCK_MISMATCH",
                    ctx,
                    format!("`{}` is on `{x}` but `{}` is on `{y}`", a.label(), b.label()),
                );
            }
        }
    }

    /// Index of the component holding the endpoint's chart, when unambiguous.
    fn cross_endpoint(&mut self, children: &[ChartExpr], r: &CrossRef, ctx: &str) -> Option<usize> {
        let counts: Vec<usize> = children.iter().map(|c| multiplicity(c, &r.chart)).collect();
        let total: usize = counts.iter().sum();
        if total == 0 {
            self.push(
                "E_ARROW_ENDPOINT",
                ctx,
                format!("`{}` is not a component of this composition", r.chart),
            );
            return None;
        }
        if total > 1 {
            self.push(
                "E_ARROW_SCOPE",
                ctx,
                format!("`{}` occurs {total} times; the endpoint {r} is ambiguous", r.chart),
            );
            return None;
        }
        let idx = counts.iter().position(|&c| c == 1)?;
        let leaf = children[idx]
            .leaves()
            .into_iter()
            .find(|l| l.name == r.chart)?;
        let occ = OccurrenceRef::new(&r.event, r.tick);
        if leaf.find_present(&occ).is_none() {
            self.push(
                "E_ARROW_ENDPOINT",
                ctx,
                format!("{r} is not a present occurrence"),
            );
            return None;
        }
        Some(idx)
    }
}

fn first_clock(e: &ChartExpr) -> Option<&str> {
    e.leaves().first().map(|l| l.clock.as_str())
}

/// How many times the leaf `name` is instantiated inside `e`.
fn multiplicity(e: &ChartExpr, name: &str) -> usize {
    match e {
        ChartExpr::Leaf(s) => usize::from(s.name == name),
        ChartExpr::Seq(a, b)
        | ChartExpr::Alt(a, b)
        | ChartExpr::Par {
            left: a, right: b, ..
        }
        | ChartExpr::Implies {
            antecedent: a,
            consequent: b,
        } => multiplicity(a, name) + multiplicity(b, name),
        ChartExpr::Loop { body, count } => {
            let m = multiplicity(body, name);
            match count {
                LoopCount::Times(k) => m * k,
                LoopCount::Unbounded if m > 0 => 2,
                LoopCount::Unbounded => 0,
            }
        }
        ChartExpr::AsyncPar { children, .. } => children.iter().map(|c| multiplicity(c, name)).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::parse_spec;

    const HEADER: &str = "events req, ack; props busy; clocks c1, c2;\n";

    fn codes(text: &str) -> Vec<&'static str> {
        let spec = parse_spec(&format!("{HEADER}{text}")).unwrap();
        validate(&spec).into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn well_formed_handshake() {
        assert!(codes("chart H on c1 ticks 2 { @0 req; @1 [!busy]: ack; arrow req -> ack; }").is_empty());
    }

    #[test]
    fn arrow_backwards_and_same_tick() {
        assert_eq!(
            codes("chart H on c1 ticks 2 { @1 req; @0 ack; arrow req -> ack; }"),
            vec!["E_ARROW_ORDER"]
        );
        assert_eq!(
            codes("chart H on c1 ticks 1 { @0 req, ack; arrow req -> ack; }"),
            vec!["E_ARROW_ORDER"]
        );
    }

    #[test]
    fn async_same_clock() {
        let text = "chart A on c1 ticks 1 { @0 req; }\nchart B on c1 ticks 1 { @0 ack; }\nchart X = async(A, B);";
        assert_eq!(codes(text), vec!["E_ASYNC_SAME_CLOCK"]);
    }

    #[test]
    fn cross_arrow_inside_one_component() {
        let text = "chart A on c1 ticks 2 { @0 req; @1 ack; }\nchart B on c2 ticks 1 { @0 ack; }\n\
                    chart X = async(A, B) { arrow A.req -> A.ack; }";
        assert_eq!(codes(text), vec!["E_ARROW_SCOPE"]);
    }

    #[test]
    fn structural_errors() {
        let base = "chart A on c1 ticks 1 { @0 req; }\nchart B on c2 ticks 2 { @0 ack; }\nchart C on c1 ticks 2 { @0 ack; }\n";
        assert_eq!(codes(&format!("{base}chart S = seq(A, B);")), vec!["E_CLOCK_MISMATCH"]);
        assert_eq!(codes(&format!("{base}chart P = par(A, C);")), vec!["E_PAR_LENGTH"]);
        assert!(codes(&format!("{base}chart P = par pad(A, C);")).is_empty());
        assert_eq!(codes(&format!("{base}chart L = loop(0) A;")), vec!["E_LOOP_COUNT"]);
        assert_eq!(
            codes(&format!("{base}chart N = seq(A, alt(A, A));")),
            vec!["E_UNSUPPORTED_NESTING"]
        );
        assert_eq!(
            codes(&format!("{base}chart M = seq(A, A);\nmode assert;")),
            vec!["E_ASSERT_NOT_IMPL"]
        );
    }

    #[test]
    fn leaf_errors() {
        assert_eq!(codes("chart H on c1 ticks 1 { @3 req; }"), vec!["E_TICK_RANGE"]);
        assert_eq!(codes("chart H on c1 ticks 1 { @0 busy; }"), vec!["E_NOT_EVENT"]);
        assert_eq!(
            codes("chart H on c1 ticks 2 { @0 req; @1 absent ack; arrow req@0 -> ack@1; }"),
            vec!["E_ARROW_ENDPOINT"]
        );
    }
}
