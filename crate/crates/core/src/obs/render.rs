use std::collections::BTreeMap;
use std::fmt::Write;

use crate::action::{Action, Pos};
use crate::engine::WorldState;
use crate::vgdl::WALL;

use super::{ColorMap, LastTrial};

/// Renders the observation text for `state`.
///
/// ```text
/// STEP <n> | SCORE <s>
/// GRID <w> x <h>
/// OBJECTS:
///   <COLOR> at (x,y) (x,y) ...
/// INVENTORY: <COLOR> x<k> ... | (empty)
/// LAST TRIAL: <won|lost|truncated> (score <s>)      (step 0 only)
/// ACTIONS: up, down, left, right, action, wait
/// ```
///
/// Colors follow palette order, positions are row-major. Wall positions are merged into
/// horizontal runs written `(x0,y)-(x1,y)`.
pub fn render_observation(
    state: &WorldState,
    cmap: &ColorMap,
    last_trial: Option<&LastTrial>,
) -> String {
    let game = state.game();
    let mut groups: BTreeMap<(usize, &str), (bool, Vec<Pos>)> = BTreeMap::new();
    for s in state.live_sprites() {
        let name = &game.type_info(s.kind).name;
        let color = cmap.color(name).unwrap_or("?");
        groups
            .entry((ColorMap::rank(color), color))
            .or_insert_with(|| (name == WALL, Vec::new()))
            .1
            .push(s.pos);
    }

    let mut out = String::new();
    writeln!(out, "STEP {} | SCORE {}", state.step_index(), state.score()).unwrap();
    writeln!(out, "GRID {} x {}", state.width(), state.height()).unwrap();
    out.push_str("OBJECTS:\n");
    for ((_, color), (is_wall, mut positions)) in groups {
        positions.sort_by_key(|p| (p.y, p.x));
        let list = if is_wall {
            runs(&positions)
        } else {
            positions
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(" ")
        };
        writeln!(out, "  {color} at {list}").unwrap();
    }

    let mut inv: Vec<(usize, &str, u32)> = state
        .inventory()
        .iter()
        .filter(|(_, n)| **n > 0)
        .map(|(k, n)| {
            let c = cmap.color(&game.type_info(*k).name).unwrap_or("?");
            (ColorMap::rank(c), c, *n)
        })
        .collect();
    inv.sort();
    if inv.is_empty() {
        out.push_str("INVENTORY: (empty)\n");
    } else {
        let items: Vec<String> = inv.iter().map(|(_, c, n)| format!("{c} x{n}")).collect();
        writeln!(out, "INVENTORY: {}", items.join(" ")).unwrap();
    }
    if let (0, Some(t)) = (state.step_index(), last_trial) {
        writeln!(out, "LAST TRIAL: {} (score {})", t.outcome.token(), t.score).unwrap();
    }
    let actions: Vec<&str> = Action::ALL.iter().map(|a| a.token()).collect();
    writeln!(out, "ACTIONS: {}", actions.join(", ")).unwrap();
    out
}

fn runs(sorted: &[Pos]) -> String {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let start = sorted[i];
        let mut end = start;
        while i + 1 < sorted.len() && sorted[i + 1].y == start.y && sorted[i + 1].x == end.x + 1 {
            i += 1;
            end = sorted[i];
        }
        parts.push(if end == start {
            start.to_string()
        } else {
            format!("{start}-{end}")
        });
        i += 1;
    }
    parts.join(" ")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_compression() {
        let p = |x, y| Pos::new(x, y);
        let v = [
            p(0, 0),
            p(1, 0),
            p(2, 0),
            p(4, 0),
            p(0, 1),
            p(2, 1),
            p(3, 1),
        ];
        assert_eq!(runs(&v), "(0,0)-(2,0) (4,0) (0,1) (2,1)-(3,1)");
    }
}
