use std::fmt::Write;

use super::{ChartExpr, LoopCount, Polarity, Scesc, SpecFile};

pub(super) fn print_spec(spec: &SpecFile) -> String {
    let mut out = String::new();
    let decls = [
        ("events", &spec.symbols.events),
        ("props", &spec.symbols.props),
        ("clocks", &spec.symbols.clocks),
        ("instances", &spec.symbols.instances),
    ];
    for (kw, names) in decls {
        if !names.is_empty() {
            let _ = writeln!(out, "{kw} {};", names.join(", "));
        }
    }
    let _ = writeln!(out, "mode {};", spec.mode);
    for def in &spec.charts {
        out.push('\n');
        match &def.body {
            ChartExpr::Leaf(s) if s.name == def.name => print_scesc(&mut out, s),
            body => {
                let _ = writeln!(out, "chart {} = {};", def.name, expr_text(body));
            }
        }
    }
    let _ = writeln!(out, "\ntop {};", spec.top);
    out
}

fn print_scesc(out: &mut String, s: &Scesc) {
    let _ = writeln!(out, "chart {} on {} ticks {} {{", s.name, s.clock, s.tick_count);
    for o in &s.occurrences {
        let _ = write!(out, "  @{} ", o.tick);
        if let Some(g) = &o.guard {
            let _ = write!(out, "[{g}]: ");
        }
        if o.polarity == Polarity::Absent {
            out.push_str("absent ");
        }
        if let Some(inst) = &o.instance {
            let _ = write!(out, "{inst}!");
        }
        let _ = writeln!(out, "{};", o.event.name);
    }
    for a in &s.arrows {
        let _ = writeln!(out, "  arrow {} -> {};", a.source, a.target);
    }
    out.push_str("}\n");
}

fn expr_text(e: &ChartExpr) -> String {
    match e {
        ChartExpr::Leaf(s) => s.name.clone(),
        ChartExpr::Seq(a, b) => format!("seq({}, {})", expr_text(a), expr_text(b)),
        ChartExpr::Alt(a, b) => format!("alt({}, {})", expr_text(a), expr_text(b)),
        ChartExpr::Par { left, right, pad } => format!(
            "par{}({}, {})",
            if *pad { " pad" } else { "" },
            expr_text(left),
            expr_text(right)
        ),
        ChartExpr::Loop { body, count } => match count {
            LoopCount::Times(k) => format!("loop({k}) {}", expr_text(body)),
            LoopCount::Unbounded => format!("loop(*) {}", expr_text(body)),
        },
        ChartExpr::Implies {
            antecedent,
            consequent,
        } => format!("implies({}, {})", expr_text(antecedent), expr_text(consequent)),
        ChartExpr::AsyncPar { children, arrows } => {
            let mut s = format!(
                "async({})",
                children.iter().map(expr_text).collect::<Vec<_>>().join(", ")
            );
            if !arrows.is_empty() {
                s.push_str(" {");
                for a in arrows {
                    let _ = write!(s, " arrow {} -> {};", a.source, a.target);
                }
                s.push_str(" }");
            }
            s
        }
    }
}
