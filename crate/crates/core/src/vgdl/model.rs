use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::action::Direction;

/// Implicitly defined obstruction type.
pub const WALL: &str = "wall";
/// Implicitly defined screen-boundary pseudo type. Only valid as an interaction patient.
pub const EOS: &str = "EOS";

pub fn is_reserved(name: &str) -> bool {
    name == WALL || name == EOS
}

/// A parsed rule set: what objects exist, what happens when they meet, and how an
/// episode ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDescription {
    pub sprite_defs: Vec<SpriteDef>,
    pub interactions: Vec<InteractionRule>,
    pub terminations: Vec<TerminationRule>,
    pub level_mapping: BTreeMap<char, Vec<String>>,
}

impl GameDescription {
    pub fn sprite(&self, name: &str) -> Option<&SpriteDef> {
        self.sprite_defs.iter().find(|s| s.name == name)
    }

    /// The single avatar-class sprite type.
    pub fn avatar(&self) -> &SpriteDef {
        self.sprite_defs
            .iter()
            .find(|s| s.class.is_avatar())
            .expect("validated description has an avatar")
    }

    /// True when `wall` is referenced anywhere (mapping or rules).
    pub fn uses_wall(&self) -> bool {
        self.level_mapping.values().flatten().any(|n| n == WALL)
            || self
                .interactions
                .iter()
                .any(|r| r.actor == WALL || r.patient == WALL)
            || self
                .terminations
                .iter()
                .any(|t| t.kind.referenced_types().any(|n| n == WALL))
    }

    /// Every renderable type name: declared sprites in order, then `wall` if used.
    pub fn type_names(&self) -> Vec<&str> {
        let mut names: Vec<&str> = self.sprite_defs.iter().map(|s| s.name.as_str()).collect();
        if self.uses_wall() {
            names.push(WALL);
        }
        names
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpriteClass {
    Immovable,
    Passive,
    MovingAvatar,
    ShootAvatar,
    RandomNPC,
    Chaser,
    Fleer,
    PathWalker,
    SpawnPoint,
    Missile,
    Resource,
}

impl SpriteClass {
    pub const ALL: [SpriteClass; 11] = [
        SpriteClass::Immovable,
        SpriteClass::Passive,
        SpriteClass::MovingAvatar,
        SpriteClass::ShootAvatar,
        SpriteClass::RandomNPC,
        SpriteClass::Chaser,
        SpriteClass::Fleer,
        SpriteClass::PathWalker,
        SpriteClass::SpawnPoint,
        SpriteClass::Missile,
        SpriteClass::Resource,
    ];

    pub fn is_avatar(self) -> bool {
        matches!(self, SpriteClass::MovingAvatar | SpriteClass::ShootAvatar)
    }

    /// Classes that move on their own during the NPC phase.
    pub fn is_npc(self) -> bool {
        matches!(
            self,
            SpriteClass::RandomNPC
                | SpriteClass::Chaser
                | SpriteClass::Fleer
                | SpriteClass::PathWalker
                | SpriteClass::Missile
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            SpriteClass::Immovable => "Immovable",
            SpriteClass::Passive => "Passive",
            SpriteClass::MovingAvatar => "MovingAvatar",
            SpriteClass::ShootAvatar => "ShootAvatar",
            SpriteClass::RandomNPC => "RandomNPC",
            SpriteClass::Chaser => "Chaser",
            SpriteClass::Fleer => "Fleer",
            SpriteClass::PathWalker => "PathWalker",
            SpriteClass::SpawnPoint => "SpawnPoint",
            SpriteClass::Missile => "Missile",
            SpriteClass::Resource => "Resource",
        }
    }
}

impl fmt::Display for SpriteClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SpriteClass {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        SpriteClass::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or(())
    }
}

/// Class-specific sprite parameters. Unset values take the engine defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SpriteParams {
    /// Chaser/Fleer target type.
    pub target: Option<String>,
    /// SpawnPoint product type.
    pub spawn: Option<String>,
    /// ShootAvatar projectile type, placed in the facing cell on `action`.
    pub shoot: Option<String>,
    /// SpawnPoint per-activation spawn probability, in [0, 1]. Default 1.
    pub prob: Option<f64>,
    /// SpawnPoint cap on the number of spawned sprites.
    pub total: Option<u32>,
    /// Ticks between moves (NPCs) or activations (spawn points). Default 1.
    pub cooldown: Option<u32>,
    /// Missile cells per move. Default 1.
    pub speed: Option<u32>,
    /// Initial heading for Missile and PathWalker.
    pub dir: Option<Direction>,
    /// Lifetime in ticks; the sprite is removed at the end of its `ttl`-th tick.
    pub ttl: Option<u32>,
}

impl SpriteParams {
    pub fn cooldown(&self) -> u32 {
        self.cooldown.unwrap_or(1)
    }

    pub fn speed(&self) -> u32 {
        self.speed.unwrap_or(1)
    }

    pub fn prob(&self) -> f64 {
        self.prob.unwrap_or(1.0)
    }

    /// `(key, value)` pairs in canonical order, for printing.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        if let Some(v) = &self.target {
            out.push(("target", v.clone()));
        }
        if let Some(v) = &self.spawn {
            out.push(("spawn", v.clone()));
        }
        if let Some(v) = &self.shoot {
            out.push(("shoot", v.clone()));
        }
        if let Some(v) = self.prob {
            out.push(("prob", v.to_string()));
        }
        if let Some(v) = self.total {
            out.push(("total", v.to_string()));
        }
        if let Some(v) = self.cooldown {
            out.push(("cooldown", v.to_string()));
        }
        if let Some(v) = self.speed {
            out.push(("speed", v.to_string()));
        }
        if let Some(v) = self.dir {
            out.push(("dir", v.token().to_string()));
        }
        if let Some(v) = self.ttl {
            out.push(("ttl", v.to_string()));
        }
        out
    }

    /// Type names this sprite's parameters refer to.
    pub fn referenced_types(&self) -> impl Iterator<Item = &str> {
        [&self.target, &self.spawn, &self.shoot]
            .into_iter()
            .flatten()
            .map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpriteDef {
    pub name: String,
    pub class: SpriteClass,
    pub params: SpriteParams,
}

/// What happens to the actor (and sometimes the patient) when they share a cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effect {
    KillSprite,
    KillBoth,
    TransformTo(String),
    StepBack,
    /// The actor is pushed one cell along the patient's movement this tick.
    BounceForward,
    CollectResource,
    KillIfOtherHasMore {
        resource: String,
        count: u32,
    },
    SpawnBehind(String),
    ScoreChange,
}

impl Effect {
    pub fn keyword(&self) -> &'static str {
        match self {
            Effect::KillSprite => "killSprite",
            Effect::KillBoth => "killBoth",
            Effect::TransformTo(_) => "transformTo",
            Effect::StepBack => "stepBack",
            Effect::BounceForward => "bounceForward",
            Effect::CollectResource => "collectResource",
            Effect::KillIfOtherHasMore { .. } => "killIfOtherHasMore",
            Effect::SpawnBehind(_) => "spawnBehind",
            Effect::ScoreChange => "scoreChange",
        }
    }

    pub fn referenced_types(&self) -> Option<&str> {
        match self {
            Effect::TransformTo(t) | Effect::SpawnBehind(t) => Some(t),
            Effect::KillIfOtherHasMore { resource, .. } => Some(resource),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteractionRule {
    pub actor: String,
    pub patient: String,
    pub effect: Effect,
    pub score_delta: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Win,
    Lose,
}

impl Outcome {
    pub fn keyword(self) -> &'static str {
        match self {
            Outcome::Win => "win",
            Outcome::Lose => "lose",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TerminationKind {
    /// Live count of `sprite_type` is at most `limit`.
    SpriteCounter { sprite_type: String, limit: u32 },
    /// Summed live count of `types` is at most `limit`.
    MultiSpriteCounter { types: Vec<String>, limit: u32 },
    /// The episode has lasted at least `steps` ticks.
    Timeout { steps: u32 },
}

impl TerminationKind {
    pub fn keyword(&self) -> &'static str {
        match self {
            TerminationKind::SpriteCounter { .. } => "SpriteCounter",
            TerminationKind::MultiSpriteCounter { .. } => "MultiSpriteCounter",
            TerminationKind::Timeout { .. } => "Timeout",
        }
    }

    pub fn referenced_types(&self) -> impl Iterator<Item = &str> {
        let v: Vec<&str> = match self {
            TerminationKind::SpriteCounter { sprite_type, .. } => vec![sprite_type.as_str()],
            TerminationKind::MultiSpriteCounter { types, .. } => {
                types.iter().map(String::as_str).collect()
            }
            TerminationKind::Timeout { .. } => Vec::new(),
        };
        v.into_iter()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerminationRule {
    pub kind: TerminationKind,
    pub outcome: Outcome,
}
