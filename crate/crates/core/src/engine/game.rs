use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;

use crate::action::Direction;
use crate::vgdl::{Effect, GameBundle, SpriteClass, TerminationKind, TerminationRule, EOS, WALL};

use super::EngineError;

/// Index into [`Game::types`].
pub type TypeId = u16;

#[derive(Debug, Clone)]
pub struct TypeInfo {
    pub name: String,
    pub class: SpriteClass,
    pub target: Option<TypeId>,
    pub spawn: Option<TypeId>,
    pub shoot: Option<TypeId>,
    pub prob: f64,
    pub total: Option<u32>,
    pub cooldown: u32,
    pub speed: u32,
    pub dir: Option<Direction>,
    pub ttl: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Patient {
    Sprite(TypeId),
    Edge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompiledEffect {
    KillSprite,
    KillBoth,
    TransformTo(TypeId),
    StepBack,
    BounceForward,
    CollectResource,
    KillIfOtherHasMore { resource: TypeId, count: u32 },
    SpawnBehind(TypeId),
    ScoreChange,
}

#[derive(Debug, Clone)]
pub struct CompiledRule {
    pub actor: TypeId,
    pub patient: Patient,
    pub effect: CompiledEffect,
    pub score_delta: i32,
}

#[derive(Debug, Clone)]
pub enum CompiledTermination {
    Counter { types: Vec<TypeId>, limit: u32 },
    Timeout { steps: u32 },
}

/// A bundle with every name resolved to a [`TypeId`], ready to simulate.
#[derive(Debug)]
pub struct Game {
    pub bundle: GameBundle,
    pub types: Vec<TypeInfo>,
    pub rules: Vec<CompiledRule>,
    pub terminations: Vec<(CompiledTermination, TerminationRule)>,
    pub avatar: TypeId,
    step_back: HashSet<(TypeId, TypeId)>,
}

impl Game {
    pub fn new(bundle: GameBundle) -> Result<Arc<Game>, EngineError> {
        let desc = &bundle.description;
        let mut ids: BTreeMap<&str, TypeId> = BTreeMap::new();
        let mut names: Vec<(&str, SpriteClass)> = desc
            .sprite_defs
            .iter()
            .map(|s| (s.name.as_str(), s.class))
            .collect();
        names.push((WALL, SpriteClass::Immovable));
        for (i, (n, _)) in names.iter().enumerate() {
            ids.insert(n, i as TypeId);
        }
        let lookup = |n: &str| {
            ids.get(n)
                .copied()
                .ok_or_else(|| EngineError::InvalidBundle(format!("undefined type `{n}`")))
        };
        let opt = |n: &Option<String>| n.as_deref().map(lookup).transpose();

        let mut types = Vec::with_capacity(names.len());
        for s in &desc.sprite_defs {
            let p = &s.params;
            types.push(TypeInfo {
                name: s.name.clone(),
                class: s.class,
                target: opt(&p.target)?,
                spawn: opt(&p.spawn)?,
                shoot: opt(&p.shoot)?,
                prob: p.prob(),
                total: p.total,
                cooldown: p.cooldown(),
                speed: p.speed(),
                dir: p.dir,
                ttl: p.ttl,
            });
        }
        types.push(TypeInfo {
            name: WALL.to_string(),
            class: SpriteClass::Immovable,
            target: None,
            spawn: None,
            shoot: None,
            prob: 1.0,
            total: None,
            cooldown: 1,
            speed: 1,
            dir: None,
            ttl: None,
        });

        let mut rules = Vec::new();
        let mut step_back = HashSet::new();
        for r in &desc.interactions {
            let actor = lookup(&r.actor)?;
            let patient = if r.patient == EOS {
                Patient::Edge
            } else {
                Patient::Sprite(lookup(&r.patient)?)
            };
            let effect = match &r.effect {
                Effect::KillSprite => CompiledEffect::KillSprite,
                Effect::KillBoth => CompiledEffect::KillBoth,
                Effect::TransformTo(t) => CompiledEffect::TransformTo(lookup(t)?),
                Effect::StepBack => CompiledEffect::StepBack,
                Effect::BounceForward => CompiledEffect::BounceForward,
                Effect::CollectResource => CompiledEffect::CollectResource,
                Effect::KillIfOtherHasMore { resource, count } => {
                    CompiledEffect::KillIfOtherHasMore {
                        resource: lookup(resource)?,
                        count: *count,
                    }
                }
                Effect::SpawnBehind(t) => CompiledEffect::SpawnBehind(lookup(t)?),
                Effect::ScoreChange => CompiledEffect::ScoreChange,
            };
            if let (CompiledEffect::StepBack, Patient::Sprite(p)) = (&effect, patient) {
                step_back.insert((actor, p));
            }
            rules.push(CompiledRule {
                actor,
                patient,
                effect,
                score_delta: r.score_delta,
            });
        }

        let terminations = desc
            .terminations
            .iter()
            .map(|t| {
                let compiled = match &t.kind {
                    TerminationKind::SpriteCounter { sprite_type, limit } => {
                        CompiledTermination::Counter {
                            types: vec![lookup(sprite_type)?],
                            limit: *limit,
                        }
                    }
                    TerminationKind::MultiSpriteCounter { types, limit } => {
                        CompiledTermination::Counter {
                            types: types.iter().map(|n| lookup(n)).collect::<Result<_, _>>()?,
                            limit: *limit,
                        }
                    }
                    TerminationKind::Timeout { steps } => {
                        CompiledTermination::Timeout { steps: *steps }
                    }
                };
                Ok((compiled, t.clone()))
            })
            .collect::<Result<Vec<_>, EngineError>>()?;

        let avatar = lookup(&desc.avatar().name)?;
        Ok(Arc::new(Game {
            bundle,
            types,
            rules,
            terminations,
            avatar,
            step_back,
        }))
    }

    pub fn name(&self) -> &str {
        &self.bundle.name
    }

    pub fn type_id(&self, name: &str) -> Option<TypeId> {
        self.types
            .iter()
            .position(|t| t.name == name)
            .map(|i| i as TypeId)
    }

    pub fn type_info(&self, id: TypeId) -> &TypeInfo {
        &self.types[id as usize]
    }

    /// Whether a `mover` sprite would be stepped back from a `blocker` sprite.
    pub fn steps_back(&self, mover: TypeId, blocker: TypeId) -> bool {
        self.step_back.contains(&(mover, blocker))
    }

    /// True when the game contains a class that draws from the episode RNG.
    pub fn is_stochastic(&self) -> bool {
        self.types.iter().any(|t| {
            t.class == SpriteClass::RandomNPC
                || (t.class == SpriteClass::SpawnPoint && t.prob > 0.0 && t.prob < 1.0)
        })
    }
}
