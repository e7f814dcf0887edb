//! Line-oriented game-description parser.
//!
//! ```text
//! sprite <name> > <Class> [key=value ...]
//! map <char> > <name> [name ...]
//! interact <actor> <patient> > <effect> [key=value ...] [score=<int>]
//! terminate > <SpriteCounter|MultiSpriteCounter|Timeout> [key=value ...] <win|lose>
//! ```
//!
//! `#` starts a comment; blank lines and indentation are ignored.

use std::collections::{BTreeMap, HashSet};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use super::model::*;
use crate::action::Direction;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize)]
#[serde(tag = "error")]
pub enum ParseError {
    #[error("line {line}: unknown sprite class `{class}`")]
    UnknownSpriteClass { line: usize, class: String },
    #[error("line {line}: undefined type `{name}`")]
    UndefinedTypeReference { name: String, line: usize },
    #[error("line {line}: duplicate type name `{name}`")]
    DuplicateTypeName { name: String, line: usize },
    #[error("line {line}: duplicate mapping for character `{ch}`")]
    DuplicateMappingChar { ch: char, line: usize },
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: invalid parameter `{key}`: {reason}")]
    InvalidParam {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("no avatar-class sprite declared")]
    NoAvatarType,
    #[error("line {line}: second avatar-class sprite declared")]
    MultipleAvatarTypes { line: usize },
    #[error("no `{outcome}` termination rule")]
    MissingOutcome { outcome: String },
}

impl ParseError {
    /// 1-based source line, when the error is tied to one.
    pub fn line(&self) -> Option<usize> {
        match self {
            ParseError::UnknownSpriteClass { line, .. }
            | ParseError::UndefinedTypeReference { line, .. }
            | ParseError::DuplicateTypeName { line, .. }
            | ParseError::DuplicateMappingChar { line, .. }
            | ParseError::MalformedLine { line, .. }
            | ParseError::InvalidParam { line, .. }
            | ParseError::MultipleAvatarTypes { line } => Some(*line),
            ParseError::NoAvatarType | ParseError::MissingOutcome { .. } => None,
        }
    }
}

fn malformed(line: usize, reason: impl Into<String>) -> ParseError {
    ParseError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

fn invalid(line: usize, key: &str, reason: impl Into<String>) -> ParseError {
    ParseError::InvalidParam {
        line,
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `key=value` tokens; rejects duplicates and bare words.
fn key_values<'a>(line: usize, tokens: &[&'a str]) -> Result<Vec<(&'a str, &'a str)>, ParseError> {
    let mut seen = HashSet::new();
    tokens
        .iter()
        .map(|tok| {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| malformed(line, format!("expected key=value, found `{tok}`")))?;
            if k.is_empty() || v.is_empty() {
                return Err(malformed(line, format!("empty key or value in `{tok}`")));
            }
            if !seen.insert(k) {
                return Err(invalid(line, k, "given twice"));
            }
            Ok((k, v))
        })
        .collect()
}

fn parse_num<T: FromStr>(line: usize, key: &str, v: &str) -> Result<T, ParseError> {
    v.parse()
        .map_err(|_| invalid(line, key, format!("`{v}` is not a valid number")))
}

fn parse_positive(line: usize, key: &str, v: &str) -> Result<u32, ParseError> {
    let n: u32 = parse_num(line, key, v)?;
    if n == 0 {
        return Err(invalid(line, key, "must be a positive integer"));
    }
    Ok(n)
}

fn type_name(line: usize, key: &str, v: &str) -> Result<String, ParseError> {
    if is_identifier(v) {
        Ok(v.to_string())
    } else {
        Err(invalid(line, key, format!("`{v}` is not a type name")))
    }
}

fn allowed_params(class: SpriteClass) -> &'static [&'static str] {
    use SpriteClass::*;
    match class {
        Immovable | Passive | Resource => &["ttl"],
        MovingAvatar => &[],
        ShootAvatar => &["shoot"],
        RandomNPC => &["cooldown", "ttl"],
        Chaser | Fleer => &["target", "cooldown", "ttl"],
        PathWalker => &["dir", "cooldown", "ttl"],
        SpawnPoint => &["spawn", "prob", "total", "cooldown", "ttl"],
        Missile => &["dir", "speed", "cooldown", "ttl"],
    }
}

fn parse_sprite(line: usize, tokens: &[&str]) -> Result<SpriteDef, ParseError> {
    if tokens.len() < 4 || tokens[2] != ">" {
        return Err(malformed(
            line,
            "expected `sprite <name> > <Class> [key=value ...]`",
        ));
    }
    let name = tokens[1];
    if !is_identifier(name) {
        return Err(malformed(
            line,
            format!("`{name}` is not a valid type name"),
        ));
    }
    let class = SpriteClass::from_str(tokens[3]).map_err(|_| ParseError::UnknownSpriteClass {
        line,
        class: tokens[3].to_string(),
    })?;
    let mut params = SpriteParams::default();
    for (k, v) in key_values(line, &tokens[4..])? {
        if !allowed_params(class).contains(&k) {
            return Err(invalid(line, k, format!("not a parameter of {class}")));
        }
        match k {
            "target" => params.target = Some(type_name(line, k, v)?),
            "spawn" => params.spawn = Some(type_name(line, k, v)?),
            "shoot" => params.shoot = Some(type_name(line, k, v)?),
            "prob" => {
                let p: f64 = parse_num(line, k, v)?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(invalid(line, k, "probability must lie in [0, 1]"));
                }
                params.prob = Some(p);
            }
            "total" => params.total = Some(parse_num(line, k, v)?),
            "cooldown" => params.cooldown = Some(parse_positive(line, k, v)?),
            "speed" => params.speed = Some(parse_positive(line, k, v)?),
            "ttl" => params.ttl = Some(parse_positive(line, k, v)?),
            "dir" => {
                params.dir = Some(
                    Direction::from_str(v)
                        .map_err(|_| invalid(line, k, format!("`{v}` is not a direction")))?,
                )
            }
            _ => unreachable!("filtered by allowed_params"),
        }
    }
    let required = match class {
        SpriteClass::Chaser | SpriteClass::Fleer => Some(("target", params.target.is_some())),
        SpriteClass::SpawnPoint => Some(("spawn", params.spawn.is_some())),
        SpriteClass::ShootAvatar => Some(("shoot", params.shoot.is_some())),
        _ => None,
    };
    if let Some((key, false)) = required {
        return Err(invalid(line, key, format!("required for {class}")));
    }
    Ok(SpriteDef {
        name: name.to_string(),
        class,
        params,
    })
}

fn parse_map(line: usize, tokens: &[&str]) -> Result<(char, Vec<String>), ParseError> {
    if tokens.len() < 4 || tokens[2] != ">" {
        return Err(malformed(line, "expected `map <char> > <name> [name ...]`"));
    }
    let mut chars = tokens[1].chars();
    let ch = match (chars.next(), chars.next()) {
        (Some(c), None) => c,
        _ => return Err(malformed(line, "map key must be a single character")),
    };
    let names = tokens[3..]
        .iter()
        .map(|n| {
            if is_identifier(n) {
                Ok(n.to_string())
            } else {
                Err(malformed(line, format!("`{n}` is not a valid type name")))
            }
        })
        .collect::<Result<_, _>>()?;
    Ok((ch, names))
}

fn parse_interaction(line: usize, tokens: &[&str]) -> Result<InteractionRule, ParseError> {
    if tokens.len() < 5 || tokens[3] != ">" {
        return Err(malformed(
            line,
            "expected `interact <actor> <patient> > <effect> [key=value ...]`",
        ));
    }
    let (actor, patient) = (tokens[1], tokens[2]);
    for n in [actor, patient] {
        if !is_identifier(n) {
            return Err(malformed(line, format!("`{n}` is not a valid type name")));
        }
    }
    let kv = key_values(line, &tokens[5..])?;
    let mut score_delta = 0;
    let mut target = None;
    let mut resource = None;
    let mut count = None;
    for (k, v) in kv {
        match k {
            // `scoreChange=` is accepted as a synonym.
            "score" | "scoreChange" => score_delta = parse_num(line, k, v)?,
            "type" => target = Some(type_name(line, k, v)?),
            "resource" => resource = Some(type_name(line, k, v)?),
            "count" => count = Some(parse_num::<u32>(line, k, v)?),
            _ => return Err(invalid(line, k, "unknown interaction parameter")),
        }
    }
    let keyword = tokens[4];
    let needs_type = matches!(keyword, "transformTo" | "spawnBehind");
    let needs_resource = keyword == "killIfOtherHasMore";
    if target.is_some() && !needs_type {
        return Err(invalid(
            line,
            "type",
            format!("not a parameter of {keyword}"),
        ));
    }
    if (resource.is_some() || count.is_some()) && !needs_resource {
        let key = if resource.is_some() {
            "resource"
        } else {
            "count"
        };
        return Err(invalid(line, key, format!("not a parameter of {keyword}")));
    }
    let effect = match keyword {
        "killSprite" => Effect::KillSprite,
        "killBoth" => Effect::KillBoth,
        "stepBack" => Effect::StepBack,
        "bounceForward" => Effect::BounceForward,
        "collectResource" => Effect::CollectResource,
        "scoreChange" => Effect::ScoreChange,
        "transformTo" => {
            Effect::TransformTo(target.ok_or_else(|| invalid(line, "type", "required"))?)
        }
        "spawnBehind" => {
            Effect::SpawnBehind(target.ok_or_else(|| invalid(line, "type", "required"))?)
        }
        "killIfOtherHasMore" => Effect::KillIfOtherHasMore {
            resource: resource.ok_or_else(|| invalid(line, "resource", "required"))?,
            count: count.ok_or_else(|| invalid(line, "count", "required"))?,
        },
        other => return Err(malformed(line, format!("unknown effect `{other}`"))),
    };
    Ok(InteractionRule {
        actor: actor.to_string(),
        patient: patient.to_string(),
        effect,
        score_delta,
    })
}

fn parse_termination(line: usize, tokens: &[&str]) -> Result<TerminationRule, ParseError> {
    if tokens.len() < 4 || tokens[1] != ">" {
        return Err(malformed(
            line,
            "expected `terminate > <Kind> [key=value ...] <win|lose>`",
        ));
    }
    let outcome = match tokens[tokens.len() - 1] {
        "win" => Outcome::Win,
        "lose" => Outcome::Lose,
        other => {
            return Err(malformed(
                line,
                format!("expected win or lose, found `{other}`"),
            ))
        }
    };
    let kv = key_values(line, &tokens[3..tokens.len() - 1])?;
    let kind_kw = tokens[2];
    let allowed: &[&str] = match kind_kw {
        "SpriteCounter" => &["type", "limit"],
        "MultiSpriteCounter" => &["types", "limit"],
        "Timeout" => &["steps"],
        other => return Err(malformed(line, format!("unknown termination `{other}`"))),
    };
    let mut limit = 0;
    let mut single = None;
    let mut multi = None;
    let mut steps = None;
    for (k, v) in kv {
        if !allowed.contains(&k) {
            return Err(invalid(line, k, format!("not a parameter of {kind_kw}")));
        }
        match k {
            "limit" => limit = parse_num(line, k, v)?,
            "type" => single = Some(type_name(line, k, v)?),
            "types" => {
                multi = Some(
                    v.split(',')
                        .map(|t| type_name(line, k, t))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            "steps" => steps = Some(parse_positive(line, k, v)?),
            _ => unreachable!(),
        }
    }
    let kind = match kind_kw {
        "SpriteCounter" => TerminationKind::SpriteCounter {
            sprite_type: single.ok_or_else(|| invalid(line, "type", "required"))?,
            limit,
        },
        "MultiSpriteCounter" => TerminationKind::MultiSpriteCounter {
            types: multi.ok_or_else(|| invalid(line, "types", "required"))?,
            limit,
        },
        _ => TerminationKind::Timeout {
            steps: steps.ok_or_else(|| invalid(line, "steps", "required"))?,
        },
    };
    Ok(TerminationRule { kind, outcome })
}

/// Parses and validates a game description.
///
/// The first problem found (in source order) is reported.
pub fn parse_game_description(text: &str) -> Result<GameDescription, ParseError> {
    let mut sprites: Vec<(usize, SpriteDef)> = Vec::new();
    let mut maps: Vec<(usize, char, Vec<String>)> = Vec::new();
    let mut interactions: Vec<(usize, InteractionRule)> = Vec::new();
    let mut terminations: Vec<(usize, TerminationRule)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens[0] {
            "sprite" => sprites.push((line, parse_sprite(line, &tokens)?)),
            "map" => {
                let (ch, names) = parse_map(line, &tokens)?;
                maps.push((line, ch, names));
            }
            "interact" => interactions.push((line, parse_interaction(line, &tokens)?)),
            "terminate" => terminations.push((line, parse_termination(line, &tokens)?)),
            other => return Err(malformed(line, format!("unknown statement `{other}`"))),
        }
    }

    // Name table: reserved names count as already defined.
    let mut defined: BTreeMap<&str, Option<SpriteClass>> = BTreeMap::new();
    defined.insert(WALL, Some(SpriteClass::Immovable));
    defined.insert(EOS, None);
    let mut avatar_seen = false;
    for (line, def) in &sprites {
        if defined.contains_key(def.name.as_str()) {
            return Err(ParseError::DuplicateTypeName {
                name: def.name.clone(),
                line: *line,
            });
        }
        defined.insert(&def.name, Some(def.class));
        if def.class.is_avatar() {
            if avatar_seen {
                return Err(ParseError::MultipleAvatarTypes { line: *line });
            }
            avatar_seen = true;
        }
    }

    // Reference checks, collected so the earliest offending line is reported.
    let mut problems: Vec<ParseError> = Vec::new();
    let undefined = |name: &str, line: usize| ParseError::UndefinedTypeReference {
        name: name.to_string(),
        line,
    };
    let sprite_class = |name: &str| defined.get(name).copied().flatten();

    for (line, def) in &sprites {
        let p = &def.params;
        let refs = [
            ("target", &p.target),
            ("spawn", &p.spawn),
            ("shoot", &p.shoot),
        ];
        for (key, value) in refs {
            let Some(r) = value else { continue };
            match sprite_class(r) {
                None => problems.push(undefined(r, *line)),
                Some(c) if c.is_avatar() && key != "target" => {
                    problems.push(invalid(*line, key, "cannot create avatar instances"))
                }
                _ => {}
            }
        }
    }
    let mut level_mapping = BTreeMap::new();
    for (line, ch, names) in &maps {
        if level_mapping.contains_key(ch) {
            problems.push(ParseError::DuplicateMappingChar {
                ch: *ch,
                line: *line,
            });
            continue;
        }
        for n in names {
            if n == EOS {
                problems.push(malformed(*line, "EOS cannot be placed on the grid"));
            } else if !defined.contains_key(n.as_str()) {
                problems.push(undefined(n, *line));
            }
        }
        level_mapping.insert(*ch, names.clone());
    }
    for (line, rule) in &interactions {
        if rule.actor == EOS {
            problems.push(malformed(*line, "EOS can only appear as the patient"));
        }
        for n in [&rule.actor, &rule.patient] {
            if !defined.contains_key(n.as_str()) {
                problems.push(undefined(n, *line));
            }
        }
        match &rule.effect {
            Effect::TransformTo(t) | Effect::SpawnBehind(t) => {
                if sprite_class(t).is_none() {
                    problems.push(undefined(t, *line));
                }
            }
            Effect::KillIfOtherHasMore { resource, .. } => match sprite_class(resource) {
                None => problems.push(undefined(resource, *line)),
                Some(SpriteClass::Resource) => {}
                Some(_) => problems.push(invalid(*line, "resource", "must name a Resource type")),
            },
            Effect::CollectResource => {
                if let Some(c) = sprite_class(&rule.actor) {
                    if c != SpriteClass::Resource {
                        problems.push(invalid(
                            *line,
                            "actor",
                            "collectResource needs a Resource actor",
                        ));
                    }
                }
            }
            _ => {}
        }
    }
    for (line, rule) in &terminations {
        for n in rule.kind.referenced_types() {
            if sprite_class(n).is_none() {
                problems.push(undefined(n, *line));
            }
        }
    }
    if let Some(first) = problems.into_iter().min_by_key(|e| e.line()) {
        return Err(first);
    }
    if !avatar_seen {
        return Err(ParseError::NoAvatarType);
    }
    for outcome in [Outcome::Win, Outcome::Lose] {
        if !terminations.iter().any(|(_, t)| t.outcome == outcome) {
            return Err(ParseError::MissingOutcome {
                outcome: outcome.keyword().to_string(),
            });
        }
    }

    Ok(GameDescription {
        sprite_defs: sprites.into_iter().map(|(_, s)| s).collect(),
        interactions: interactions.into_iter().map(|(_, r)| r).collect(),
        terminations: terminations.into_iter().map(|(_, t)| t).collect(),
        level_mapping,
    })
}
