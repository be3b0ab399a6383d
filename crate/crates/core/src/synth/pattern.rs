use crate::chart::{Polarity, Scesc};
use crate::expr::{satisfiable, Expr, DEFAULT_UNIVERSE_CAP};

use super::{Pattern, SynthError};

/// Translates each tick of a chart into one boolean constraint.
///
/// Per occurrence: `e` gives `e`, guarded `p:e` gives `!p | e`, `absent e`
/// gives `!e` (guarded: `!p | !e`). Occurrences on one tick are conjoined;
/// a tick without occurrences is `true`.
pub fn extract_pattern(c: &Scesc) -> Result<Pattern, SynthError> {
    if c.tick_count == 0 {
        return Err(SynthError::EmptyPattern(c.name.clone()));
    }
    let mut elements = Vec::with_capacity(c.tick_count);
    for tick in 0..c.tick_count {
        let element = Expr::and_all(c.occurrences_at(tick).map(|o| {
            let ev = Expr::Sym(o.event.clone());
            let lit = match o.polarity {
                Polarity::Present => ev,
                Polarity::Absent => Expr::not(ev),
            };
            match &o.guard {
                Some(g) => Expr::or(Expr::not(g.clone()), lit),
                None => lit,
            }
        }));
        if !satisfiable(&element, &element.support(), DEFAULT_UNIVERSE_CAP)? {
            return Err(SynthError::Vacuous {
                chart: c.name.clone(),
                tick,
            });
        }
        elements.push(element);
    }
    Ok(Pattern::new(elements))
}
