//! Inputs shared by the benchmarks under `benches/`.

use std::path::Path;

use cesc::chart::EventOccurrence;
use cesc::{parse_spec, ChartExpr, Expr, Scesc, SpecFile, SymbolTable};

/// Loads `fixtures/<name>/spec.cesc`.
pub fn fixture(name: &str) -> SpecFile {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name).join("spec.cesc");
    parse_spec(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Symbols for [`ladder`]: events `e0..e{width}` and one proposition `p`.
pub fn ladder_symbols(width: usize) -> SymbolTable {
    SymbolTable {
        events: (0..width).map(|i| format!("e{i}")).collect(),
        props: vec!["p".into()],
        clocks: vec!["clk".into()],
        instances: Vec::new(),
    }
}

/// A leaf of `ticks` ticks where tick `t` needs `e{t % width}`, guarded by `p`
/// on odd ticks, and every other event absent.
pub fn ladder(ticks: usize, width: usize) -> ChartExpr {
    let mut s = Scesc::new("Ladder", "clk", ticks);
    for t in 0..ticks {
        let ev = format!("e{}", t % width);
        let occ = EventOccurrence::present(&ev, t);
        s.push(if t % 2 == 1 { occ.guarded(Expr::prop("p")) } else { occ });
        if t % 3 == 2 {
            s.push(EventOccurrence::absent(&format!("e{}", (t + 1) % width), t));
        }
    }
    ChartExpr::Leaf(s)
}
