use std::fmt::Write;

use super::model::*;

/// Canonical source text for a description. Re-parsing the output yields an equal value.
pub fn print_game_description(desc: &GameDescription) -> String {
    print_with_names(desc, &|name: &str| name.to_string(), true)
}

/// Prints with every type name passed through `rename`. `with_mapping` controls whether
/// `map` lines are emitted.
pub fn print_with_names(
    desc: &GameDescription,
    rename: &dyn Fn(&str) -> String,
    with_mapping: bool,
) -> String {
    let mut out = String::new();
    for s in &desc.sprite_defs {
        write!(out, "sprite {} > {}", rename(&s.name), s.class).unwrap();
        for (k, v) in s.params.pairs() {
            let v = match k {
                "target" | "spawn" | "shoot" => rename(&v),
                _ => v,
            };
            write!(out, " {k}={v}").unwrap();
        }
        out.push('\n');
    }
    if with_mapping {
        for (ch, names) in &desc.level_mapping {
            let names: Vec<String> = names.iter().map(|n| rename(n)).collect();
            writeln!(out, "map {ch} > {}", names.join(" ")).unwrap();
        }
    }
    for r in &desc.interactions {
        write!(
            out,
            "interact {} {} > {}",
            rename(&r.actor),
            rename(&r.patient),
            r.effect.keyword()
        )
        .unwrap();
        match &r.effect {
            Effect::TransformTo(t) | Effect::SpawnBehind(t) => {
                write!(out, " type={}", rename(t)).unwrap()
            }
            Effect::KillIfOtherHasMore { resource, count } => {
                write!(out, " resource={} count={count}", rename(resource)).unwrap()
            }
            _ => {}
        }
        if r.score_delta != 0 {
            write!(out, " score={}", r.score_delta).unwrap();
        }
        out.push('\n');
    }
    for t in &desc.terminations {
        write!(out, "terminate > {}", t.kind.keyword()).unwrap();
        match &t.kind {
            TerminationKind::SpriteCounter { sprite_type, limit } => {
                write!(out, " type={} limit={limit}", rename(sprite_type)).unwrap()
            }
            TerminationKind::MultiSpriteCounter { types, limit } => {
                let types: Vec<String> = types.iter().map(|n| rename(n)).collect();
                write!(out, " types={} limit={limit}", types.join(",")).unwrap()
            }
            TerminationKind::Timeout { steps } => write!(out, " steps={steps}").unwrap(),
        }
        writeln!(out, " {}", t.outcome.keyword()).unwrap();
    }
    out
}
