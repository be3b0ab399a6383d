use std::collections::HashSet;

use crate::expr::{self, ExprError, SymbolTable};
use crate::lex::{self, Cursor, Pos, Tok};

use super::{
    CausalityArrow, ChartDef, ChartExpr, CrossArrow, CrossRef, EventOccurrence, LoopCount, Mode,
    OccurrenceRef, ParseError, Polarity, Scesc, SpecFile, ENV_INSTANCE,
};

const KEYWORDS: &[&str] = &[
    "events", "props", "clocks", "instances", "mode", "top", "chart", "on", "ticks", "arrow",
    "absent", "seq", "par", "pad", "alt", "loop", "implies", "async", "true", "false", ENV_INSTANCE,
];

/// Parses a `.cesc` specification. Structural invariants are left to
/// [`super::validate`]; this resolves names and reports syntax errors.
pub fn parse_spec(text: &str) -> Result<SpecFile, ParseError> {
    let toks = lex::tokenize(text).map_err(|e| ParseError {
        code: "E_PARSE",
        line: e.pos.line,
        col: e.pos.col,
        message: e.message,
    })?;
    let mut p = Parser {
        cur: Cursor::new(toks),
        symbols: SymbolTable::default(),
        charts: Vec::new(),
        names: HashSet::new(),
        block_end: None,
    };
    p.spec()
}

struct Parser {
    cur: Cursor,
    symbols: SymbolTable,
    charts: Vec<ChartDef>,
    names: HashSet<String>,
    /// Cursor offset just past the last async arrow block.
    block_end: Option<usize>,
}

fn err(code: &'static str, pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError {
        code,
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

impl Parser {
    fn spec(&mut self) -> Result<SpecFile, ParseError> {
        let mut top: Option<(String, Pos)> = None;
        let mut mode: Option<Mode> = None;
        while !self.cur.at_eof() {
            let pos = self.cur.pos();
            let kw = self.ident("a declaration")?;
            match kw.as_str() {
                "events" | "props" | "clocks" | "instances" => {
                    let names = self.ident_list()?;
                    self.expect(&Tok::Semi)?;
                    for (name, npos) in names {
                        self.declare(&name, npos)?;
                        let list = match kw.as_str() {
                            "events" => &mut self.symbols.events,
                            "props" => &mut self.symbols.props,
                            "clocks" => &mut self.symbols.clocks,
                            _ => &mut self.symbols.instances,
                        };
                        list.push(name);
                    }
                }
                "mode" => {
                    let mpos = self.cur.pos();
                    let m = self.ident("`detect` or `assert`")?;
                    let parsed = m
                        .parse::<Mode>()
                        .map_err(|e| err("E_PARSE", mpos, e))?;
                    if mode.replace(parsed).is_some() {
                        return Err(err("E_DUPLICATE_NAME", pos, "mode declared twice"));
                    }
                    self.expect(&Tok::Semi)?;
                }
                "top" => {
                    let tpos = self.cur.pos();
                    let name = self.ident("a chart name")?;
                    self.expect(&Tok::Semi)?;
                    if top.replace((name, tpos)).is_some() {
                        return Err(err("E_DUPLICATE_NAME", pos, "top declared twice"));
                    }
                }
                "chart" => self.chart_def()?,
                other => {
                    return Err(err(
                        "E_PARSE",
                        pos,
                        format!("expected a declaration, found `{other}`"),
                    ))
                }
            }
        }
        let top = match top {
            Some((name, pos)) => {
                if !self.charts.iter().any(|c| c.name == name) {
                    return Err(err(
                        "E_UNDECLARED_SYMBOL",
                        pos,
                        format!("top chart `{name}` is not defined"),
                    ));
                }
                name
            }
            None => match self.charts.last() {
                Some(c) => c.name.clone(),
                None => return Err(err("E_PARSE", self.cur.pos(), "specification defines no chart")),
            },
        };
        Ok(SpecFile {
            symbols: std::mem::take(&mut self.symbols),
            charts: std::mem::take(&mut self.charts),
            top,
            mode: mode.unwrap_or_default(),
        })
    }

    fn declare(&mut self, name: &str, pos: Pos) -> Result<(), ParseError> {
        if KEYWORDS.contains(&name) {
            return Err(err("E_PARSE", pos, format!("`{name}` is a reserved word")));
        }
        if !self.names.insert(name.to_string()) {
            return Err(err(
                "E_DUPLICATE_NAME",
                pos,
                format!("`{name}` is already declared"),
            ));
        }
        Ok(())
    }

    fn chart_def(&mut self) -> Result<(), ParseError> {
        let pos = self.cur.pos();
        let name = self.ident("a chart name")?;
        self.declare(&name, pos)?;
        let body = if self.cur.eat(&Tok::Eq) {
            let e = self.chart_expr()?;
            // a definition ending in an arrow block may omit the `;`
            if self.block_end != Some(self.cur.offset()) {
                self.expect(&Tok::Semi)?;
            } else {
                self.cur.eat(&Tok::Semi);
            }
            e
        } else {
            ChartExpr::Leaf(self.scesc_body(&name)?)
        };
        self.charts.push(ChartDef { name, body });
        Ok(())
    }

    fn scesc_body(&mut self, name: &str) -> Result<Scesc, ParseError> {
        self.keyword("on")?;
        let cpos = self.cur.pos();
        let clock = self.ident("a clock name")?;
        if !self.symbols.has_clock(&clock) {
            return Err(err(
                "E_UNDECLARED_SYMBOL",
                cpos,
                format!("clock `{clock}` is not declared"),
            ));
        }
        self.keyword("ticks")?;
        let tick_count = self.int("a tick count")?;
        let mut chart = Scesc::new(name, &clock, tick_count);
        // Arrow endpoints may be written before the occurrences they name.
        let mut pending: Vec<(Endpoint, Endpoint, Pos)> = Vec::new();
        self.expect(&Tok::LBrace)?;
        while !self.cur.eat(&Tok::RBrace) {
            let pos = self.cur.pos();
            if self.cur.eat(&Tok::At) {
                let tick = self.int("a tick index")?;
                loop {
                    let occ = self.occurrence(tick)?;
                    chart.push(occ);
                    if !self.cur.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::Semi)?;
            } else if self.cur.eat_keyword("arrow") {
                let source = self.endpoint()?;
                self.expect(&Tok::Arrow)?;
                let target = self.endpoint()?;
                self.expect(&Tok::Semi)?;
                pending.push((source, target, pos));
            } else {
                return Err(err(
                    "E_PARSE",
                    pos,
                    format!("expected `@`, `arrow` or `}}`, found {}", self.cur.peek()),
                ));
            }
        }
        for (source, target, pos) in pending {
            let source = resolve_endpoint(&chart, source, pos)?;
            let target = resolve_endpoint(&chart, target, pos)?;
            chart.arrows.push(CausalityArrow { source, target });
        }
        Ok(chart)
    }

    fn occurrence(&mut self, tick: usize) -> Result<EventOccurrence, ParseError> {
        let guard = if self.cur.eat(&Tok::LBracket) {
            let symbols = &self.symbols;
            let g = expr::parse_expr(&mut self.cur, &|n: &str| symbols.symbol(n))
                .map_err(|e| self.expr_err(e))?;
            self.expect(&Tok::RBracket)?;
            self.expect(&Tok::Colon)?;
            Some(g)
        } else {
            None
        };
        let polarity = if self.cur.eat_keyword("absent") {
            Polarity::Absent
        } else {
            Polarity::Present
        };
        let instance = if matches!(self.cur.peek_at(1), Tok::Bang) {
            let ipos = self.cur.pos();
            let inst = self.ident("an instance name")?;
            self.expect(&Tok::Bang)?;
            if inst != ENV_INSTANCE && !self.symbols.instances.contains(&inst) {
                return Err(err(
                    "E_UNDECLARED_SYMBOL",
                    ipos,
                    format!("instance `{inst}` is not declared"),
                ));
            }
            Some(inst)
        } else {
            None
        };
        let epos = self.cur.pos();
        let name = self.ident("an event name")?;
        let event = self.symbols.symbol(&name).ok_or_else(|| {
            err(
                "E_UNDECLARED_SYMBOL",
                epos,
                format!("event `{name}` is not declared"),
            )
        })?;
        Ok(EventOccurrence {
            event,
            guard,
            polarity,
            instance,
            tick,
        })
    }

    fn endpoint(&mut self) -> Result<Endpoint, ParseError> {
        let first = self.ident("an event name")?;
        let (chart, event) = if self.cur.eat(&Tok::Dot) {
            (Some(first), self.ident("an event name")?)
        } else {
            (None, first)
        };
        let tick = if self.cur.eat(&Tok::At) {
            Some(self.int("a tick index")?)
        } else {
            None
        };
        Ok(Endpoint { chart, event, tick })
    }

    fn chart_expr(&mut self) -> Result<ChartExpr, ParseError> {
        let pos = self.cur.pos();
        let head = self.ident("a chart expression")?;
        let is_call = matches!(self.cur.peek(), Tok::LParen)
            || (head == "par" && matches!(self.cur.peek(), Tok::Ident(s) if s == "pad"));
        match head.as_str() {
            "seq" | "alt" if is_call => {
                let args = self.args(2, usize::MAX)?;
                let fold = if head == "seq" { ChartExpr::seq } else { ChartExpr::alt };
                Ok(args.into_iter().reduce(fold).expect("at least two operands"))
            }
            "par" if is_call => {
                let pad = self.cur.eat_keyword("pad");
                let mut args = self.args(2, 2)?;
                let right = args.pop().expect("two operands");
                let left = args.pop().expect("two operands");
                Ok(ChartExpr::par(left, right, pad))
            }
            "implies" if is_call => {
                let mut args = self.args(2, 2)?;
                let c = args.pop().expect("two operands");
                let a = args.pop().expect("two operands");
                Ok(ChartExpr::implies(a, c))
            }
            "loop" if is_call => {
                self.expect(&Tok::LParen)?;
                let count = if self.cur.eat(&Tok::Star) {
                    LoopCount::Unbounded
                } else {
                    LoopCount::Times(self.int("a loop count")?)
                };
                self.expect(&Tok::RParen)?;
                let body = self.chart_expr()?;
                Ok(ChartExpr::repeat(body, count))
            }
            "async" if is_call => {
                let children = self.args(2, usize::MAX)?;
                let mut arrows = Vec::new();
                if self.cur.eat(&Tok::LBrace) {
                    while !self.cur.eat(&Tok::RBrace) {
                        let apos = self.cur.pos();
                        self.keyword("arrow")?;
                        let source = self.endpoint()?;
                        self.expect(&Tok::Arrow)?;
                        let target = self.endpoint()?;
                        self.expect(&Tok::Semi)?;
                        arrows.push(CrossArrow {
                            source: self.resolve_cross(source, apos)?,
                            target: self.resolve_cross(target, apos)?,
                        });
                    }
                    self.block_end = Some(self.cur.offset());
                }
                Ok(ChartExpr::AsyncPar { children, arrows })
            }
            _ => self
                .charts
                .iter()
                .find(|c| c.name == head)
                .map(|c| c.body.clone())
                .ok_or_else(|| {
                    err(
                        "E_UNDECLARED_SYMBOL",
                        pos,
                        format!("chart `{head}` is not defined before use"),
                    )
                }),
        }
    }

    fn args(&mut self, min: usize, max: usize) -> Result<Vec<ChartExpr>, ParseError> {
        let pos = self.cur.pos();
        self.expect(&Tok::LParen)?;
        let mut out = vec![self.chart_expr()?];
        while self.cur.eat(&Tok::Comma) {
            out.push(self.chart_expr()?);
        }
        self.expect(&Tok::RParen)?;
        if out.len() < min || out.len() > max {
            return Err(err(
                "E_PARSE",
                pos,
                format!("wrong number of operands ({})", out.len()),
            ));
        }
        Ok(out)
    }

    fn resolve_cross(&self, ep: Endpoint, pos: Pos) -> Result<CrossRef, ParseError> {
        let chart = ep.chart.ok_or_else(|| {
            err(
                "E_PARSE",
                pos,
                "cross-domain arrow endpoints are written `chart.event`",
            )
        })?;
        let def = self.charts.iter().find(|c| c.name == chart).ok_or_else(|| {
            err(
                "E_UNDECLARED_SYMBOL",
                pos,
                format!("chart `{chart}` is not defined"),
            )
        })?;
        let tick = match (ep.tick, &def.body) {
            (Some(t), _) => t,
            (None, ChartExpr::Leaf(s)) => {
                unique_present_tick(s, &ep.event).map_err(|m| err("E_ARROW_ENDPOINT", pos, m))?
            }
            (None, _) => {
                return Err(err(
                    "E_ARROW_ENDPOINT",
                    pos,
                    format!("`{chart}` is not a single-clock chart; qualify the endpoint with `@tick`"),
                ))
            }
        };
        Ok(CrossRef {
            chart,
            event: ep.event,
            tick,
        })
    }

    fn expr_err(&self, e: ExprError) -> ParseError {
        let pos = self.cur.pos();
        match e {
            ExprError::Parse { line, col, message } => ParseError {
                code: "E_PARSE",
                line,
                col,
                message,
            },
            other => err(other.code(), pos, other.to_string()),
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.cur.eat(tok) {
            Ok(())
        } else {
            Err(err(
                "E_PARSE",
                self.cur.pos(),
                format!("expected {tok}, found {}", self.cur.peek()),
            ))
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.cur.eat_keyword(kw) {
            Ok(())
        } else {
            Err(err(
                "E_PARSE",
                self.cur.pos(),
                format!("expected `{kw}`, found {}", self.cur.peek()),
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        let pos = self.cur.pos();
        match self.cur.bump() {
            Tok::Ident(s) => Ok(s),
            other => Err(err("E_PARSE", pos, format!("expected {what}, found {other}"))),
        }
    }

    fn int(&mut self, what: &str) -> Result<usize, ParseError> {
        let pos = self.cur.pos();
        match self.cur.bump() {
            Tok::Int(n) => usize::try_from(n).map_err(|_| err("E_PARSE", pos, "integer too large")),
            other => Err(err("E_PARSE", pos, format!("expected {what}, found {other}"))),
        }
    }

    fn ident_list(&mut self) -> Result<Vec<(String, Pos)>, ParseError> {
        let mut out = Vec::new();
        loop {
            let pos = self.cur.pos();
            out.push((self.ident("a name")?, pos));
            if !self.cur.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }
}

struct Endpoint {
    chart: Option<String>,
    event: String,
    tick: Option<usize>,
}

fn unique_present_tick(chart: &Scesc, event: &str) -> Result<usize, String> {
    let ticks: Vec<usize> = chart
        .occurrences
        .iter()
        .filter(|o| o.event.name == event && o.polarity == Polarity::Present)
        .map(|o| o.tick)
        .collect();
    match ticks.as_slice() {
        [t] => Ok(*t),
        [] => Err(format!("`{event}` does not occur in `{}`", chart.name)),
        _ => Err(format!(
            "`{event}` occurs more than once in `{}`; qualify the endpoint with `@tick`",
            chart.name
        )),
    }
}

fn resolve_endpoint(chart: &Scesc, ep: Endpoint, pos: Pos) -> Result<OccurrenceRef, ParseError> {
    if ep.chart.is_some() {
        return Err(err(
            "E_PARSE",
            pos,
            "chart-qualified endpoints belong to `async` arrows",
        ));
    }
    let tick = match ep.tick {
        Some(t) => t,
        None => unique_present_tick(chart, &ep.event).map_err(|m| err("E_ARROW_ENDPOINT", pos, m))?,
    };
    Ok(OccurrenceRef {
        event: ep.event,
        tick,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Expr, Symbol};

    const HEADER: &str = "events req, ack; props busy; clocks c1, c2; instances master, slave;\n";

    #[test]
    fn minimal_chart() {
        let text = format!(
            "{HEADER}chart H on c1 ticks 2 {{ @0 master!req; @1 [!busy]: slave!ack; arrow req -> ack; }}"
        );
        let spec = parse_spec(&text).unwrap();
        let ChartExpr::Leaf(h) = spec.top_chart() else {
            panic!("expected a leaf")
        };
        assert_eq!(h.tick_count, 2);
        assert_eq!(h.occurrences.len(), 2);
        assert_eq!(h.arrows.len(), 1);
        assert_eq!(h.arrows[0].source, OccurrenceRef::new("req", 0));
        assert_eq!(h.arrows[0].target, OccurrenceRef::new("ack", 1));
        assert_eq!(h.occurrences[1].guard, Some(Expr::not(Expr::Sym(Symbol::prop("busy")))));
        assert_eq!(h.instances, vec!["master".to_string(), "slave".to_string()]);
        assert_eq!(spec.mode, Mode::Detect);
        assert_eq!(spec.top, "H");
    }

    #[test]
    fn errors_carry_codes_and_positions() {
        let e = parse_spec("events a;\nchart X on nope ticks 1 { }").unwrap_err();
        assert_eq!(e.code, "E_UNDECLARED_SYMBOL");
        assert_eq!((e.line, e.col), (2, 12));

        let e = parse_spec("events a, a;").unwrap_err();
        assert_eq!(e.code, "E_DUPLICATE_NAME");

        let e = parse_spec("events a; clocks c; chart X on c ticks 1 { @0 b; }").unwrap_err();
        assert_eq!(e.code, "E_UNDECLARED_SYMBOL");

        let e = parse_spec("events a; clocks c; chart X on c ticks 1 { @0 a }").unwrap_err();
        assert_eq!(e.code, "E_PARSE");

        let e = parse_spec("events a; clocks c; chart X on c ticks 2 { @0 a; @1 a; arrow a -> a; }")
            .unwrap_err();
        assert_eq!(e.code, "E_ARROW_ENDPOINT");
    }

    #[test]
    fn composite_forms() {
        let text = format!(
            "{HEADER}chart A on c1 ticks 1 {{ @0 req; }}\nchart B on c1 ticks 1 {{ @0 ack; }}\n\
             chart C on c2 ticks 1 {{ @0 ack; }}\n\
             chart S = seq(A, B, A);\nchart P = par pad(A, B);\nchart L = loop(*) seq(A, B);\n\
             chart I = implies(A, B);\nchart X = async(A, C) {{ arrow A.req -> C.ack; }}\ntop S;\nmode assert;"
        );
        let spec = parse_spec(&text).unwrap();
        assert!(matches!(spec.chart("S"), Some(ChartExpr::Seq(l, _)) if matches!(**l, ChartExpr::Seq(..))));
        assert!(matches!(spec.chart("P"), Some(ChartExpr::Par { pad: true, .. })));
        assert!(matches!(
            spec.chart("L"),
            Some(ChartExpr::Loop { count: LoopCount::Unbounded, .. })
        ));
        let Some(ChartExpr::AsyncPar { arrows, children }) = spec.chart("X") else {
            panic!()
        };
        assert_eq!(children.len(), 2);
        assert_eq!(arrows[0].source.tick, 0);
        assert_eq!(spec.mode, Mode::Assert);
        assert_eq!(spec.top, "S");
    }

    #[test]
    fn forward_reference_rejected() {
        let e = parse_spec("events a; clocks c; chart S = seq(A, A); chart A on c ticks 1 { @0 a; }")
            .unwrap_err();
        assert_eq!(e.code, "E_UNDECLARED_SYMBOL");
    }
}
