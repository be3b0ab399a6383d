use std::fmt::Write;

use super::{Monitor, MonitorNet, Transition};

fn set_label(lengths: &std::collections::BTreeSet<usize>) -> String {
    let items: Vec<String> = lengths.iter().map(usize::to_string).collect();
    format!("{{{}}}", items.join(","))
}

fn edge_label(t: &Transition) -> String {
    let mut label = t.guard.to_string();
    label.push_str(" / ");
    if t.actions.is_empty() {
        label.push('-');
    } else {
        let acts: Vec<String> = t.actions.iter().map(ToString::to_string).collect();
        label.push_str(&acts.join(", "));
    }
    if !t.checks.is_empty() {
        let chks: Vec<String> = t.checks.iter().map(ToString::to_string).collect();
        let _ = write!(label, " [{}]", chks.join(", "));
    }
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

fn body(m: &Monitor, prefix: &str, indent: &str, out: &mut String) {
    let _ = writeln!(out, "{indent}{prefix}start [shape=point];");
    for s in &m.states {
        let shape = if s.is_final { "doublecircle" } else { "circle" };
        let _ = writeln!(
            out,
            "{indent}{prefix}s{} [label=\"{}\", shape={shape}];",
            s.id,
            set_label(&s.matched_lengths)
        );
    }
    let _ = writeln!(out, "{indent}{prefix}start -> {prefix}s{};", m.initial);
    for t in &m.transitions {
        let _ = writeln!(
            out,
            "{indent}{prefix}s{} -> {prefix}s{} [label=\"{}\"];",
            t.from,
            t.to,
            edge_label(t)
        );
    }
}

/// Graphviz rendering of one monitor. Nodes are labeled with their matched
/// prefix lengths; edges with `guard / actions [checks]`.
pub fn to_dot(m: &Monitor) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", m.name);
    out.push_str("  rankdir=LR;\n");
    let _ = writeln!(out, "  label=\"{} on {}\";", m.name, m.clock);
    body(m, "", "  ", &mut out);
    out.push_str("}\n");
    out
}

/// All monitors of a net, one cluster per monitor.
pub fn net_to_dot(net: &MonitorNet) -> String {
    if let [m] = net.monitors.as_slice() {
        return to_dot(m);
    }
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"{}\" {{", net.name);
    out.push_str("  rankdir=LR;\n");
    let _ = writeln!(out, "  label=\"{} ({})\";", net.name, net.kind);
    for (i, m) in net.monitors.iter().enumerate() {
        let _ = writeln!(out, "  subgraph cluster_{i} {{");
        let _ = writeln!(out, "    label=\"m{i}: {} on {}\";", m.name, m.clock);
        body(m, &format!("m{i}_"), "    ", &mut out);
        out.push_str("  }\n");
    }
    out.push_str("}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{EventOccurrence, Scesc};
    use crate::expr::Expr;
    use crate::synth::{build_monitor, synthesize_leaf, Pattern};

    #[test]
    fn single_state_self_loops() {
        let p = Pattern::new(vec![Expr::Const(true)]);
        let m = build_monitor(&p, &Default::default()).unwrap();
        // {0} -> {0,1} on true, then {0,1} loops
        let dot = to_dot(&m);
        assert!(dot.starts_with("digraph"));
        assert!(dot.contains("s1 -> s1 [label=\"true / -\"]"));
    }

    #[test]
    fn handshake_marks_initial_and_final() {
        let s = Scesc::new("H", "c", 2)
            .with(EventOccurrence::present("req", 0))
            .with(EventOccurrence::present("ack", 1))
            .with_arrow(("req", 0), ("ack", 1));
        let m = synthesize_leaf(&s).unwrap();
        let dot = to_dot(&m);
        // {0,2} and, after req & ack following req, {0,1,2}
        assert_eq!(dot.matches("doublecircle").count(), m.final_states().count());
        assert!(dot.contains("label=\"{0,2}\", shape=doublecircle"));
        assert!(dot.contains("start -> s0;"));
        assert!(dot.contains("add(req@0)"));
        assert!(dot.contains("[chk(req@0)>1]"));
        assert_eq!(dot, to_dot(&synthesize_leaf(&s).unwrap()));
    }
}
