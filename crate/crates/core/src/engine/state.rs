use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hasher;
use std::sync::Arc;

use fnv::FnvHasher;
use rand::{RngCore, SeedableRng};
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use crate::action::{Action, Direction, Pos};
use crate::vgdl::{Outcome, SpriteClass};

use super::game::{CompiledEffect, CompiledTermination, Game, Patient, TypeId};
use super::EngineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EpisodeStatus {
    Ongoing,
    Won,
    Lost,
}

/// One sprite instance. `id` is the creation serial; list order is creation order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sprite {
    pub id: u32,
    pub kind: TypeId,
    pub pos: Pos,
    pub alive: bool,
    pub facing: Direction,
    /// Ticks since the last move or activation.
    pub cooldown: u32,
    pub age: u32,
    /// Spawn points: number of sprites produced so far.
    pub spawned: u32,
    // Per-tick scratch, reset at the start of every step.
    pub(crate) prev: Pos,
    pub(crate) moved: Option<Direction>,
    pub(crate) hit_edge: bool,
}

/// One applied interaction rule.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    /// Index of the rule in declaration order.
    pub rule: usize,
    pub actor: u32,
    /// `None` when the patient is the screen edge.
    pub patient: Option<u32>,
    pub score_delta: i32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepOutcome {
    pub status: EpisodeStatus,
    pub events: Vec<Event>,
}

/// 64-bit state digest, rendered as 16 hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateDigest(pub u64);

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl Serialize for StateDigest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for StateDigest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        u64::from_str_radix(&s, 16)
            .map(StateDigest)
            .map_err(serde::de::Error::custom)
    }
}

/// Everything needed to continue an episode.
#[derive(Debug, Clone)]
pub struct WorldState {
    game: Arc<Game>,
    level: usize,
    width: i32,
    height: i32,
    sprites: Vec<Sprite>,
    next_id: u32,
    inventory: BTreeMap<TypeId, u32>,
    score: i64,
    step_index: u32,
    status: EpisodeStatus,
    rng: SplitMix64,
}

/// Derives the episode RNG seed from the caller's seed, the game name and the level.
pub fn episode_rng_seed(seed: u64, game: &str, level: usize) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&seed.to_le_bytes());
    h.write(game.as_bytes());
    h.write(&[0xff]);
    h.write(&(level as u32).to_le_bytes());
    h.finish()
}

/// Instantiates a level: sprites from the layout in row-major order, score 0, step 0.
pub fn init_episode(game: &Arc<Game>, level: usize, seed: u64) -> Result<WorldState, EngineError> {
    let layout = game
        .bundle
        .levels
        .get(level)
        .ok_or(EngineError::InvalidLevelIndex {
            level,
            count: game.bundle.levels.len(),
        })?;
    let mut state = WorldState {
        game: Arc::clone(game),
        level,
        width: layout.width as i32,
        height: layout.height as i32,
        sprites: Vec::new(),
        next_id: 0,
        inventory: BTreeMap::new(),
        score: 0,
        step_index: 0,
        status: EpisodeStatus::Ongoing,
        rng: SplitMix64::seed_from_u64(episode_rng_seed(seed, game.name(), level)),
    };
    for (pos, name) in layout.placements(&game.bundle.description) {
        let kind = game
            .type_id(name)
            .ok_or_else(|| EngineError::InvalidBundle(format!("undefined type `{name}`")))?;
        state.create(kind, pos, Direction::Up);
    }
    Ok(state)
}

impl WorldState {
    pub fn game(&self) -> &Arc<Game> {
        &self.game
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn width(&self) -> i32 {
        self.width
    }

    pub fn height(&self) -> i32 {
        self.height
    }

    pub fn sprites(&self) -> &[Sprite] {
        &self.sprites
    }

    pub fn live_sprites(&self) -> impl Iterator<Item = &Sprite> {
        self.sprites.iter().filter(|s| s.alive)
    }

    pub fn inventory(&self) -> &BTreeMap<TypeId, u32> {
        &self.inventory
    }

    pub fn score(&self) -> i64 {
        self.score
    }

    pub fn step_index(&self) -> u32 {
        self.step_index
    }

    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    /// A copy of the generator, positioned at the next draw.
    pub fn rng(&self) -> SplitMix64 {
        self.rng.clone()
    }

    /// Positions of live avatar instances.
    pub fn avatar_positions(&self) -> Vec<Pos> {
        self.live_sprites()
            .filter(|s| s.kind == self.game.avatar)
            .map(|s| s.pos)
            .collect()
    }

    pub fn count(&self, kind: TypeId) -> u32 {
        self.live_sprites().filter(|s| s.kind == kind).count() as u32
    }

    fn in_grid(&self, p: Pos) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }

    fn create(&mut self, kind: TypeId, pos: Pos, facing: Direction) {
        let facing = self.game.type_info(kind).dir.unwrap_or(facing);
        self.sprites.push(Sprite {
            id: self.next_id,
            kind,
            pos,
            alive: true,
            facing,
            cooldown: 0,
            age: 0,
            spawned: 0,
            prev: pos,
            moved: None,
            hit_edge: false,
        });
        self.next_id += 1;
    }

    /// Stable digest over sprites, inventory, score, step index, status and RNG position.
    pub fn state_hash(&self) -> StateDigest {
        StateDigest(self.digest(true))
    }

    /// Like [`state_hash`](Self::state_hash) but ignoring the step index and score, so
    /// states reached along different paths compare equal when their futures do.
    /// Timeout rules read the step index; searches over games with them should cap depth.
    pub fn dynamics_key(&self) -> u64 {
        self.digest(false)
    }

    fn digest(&self, clock: bool) -> u64 {
        let mut h = FnvHasher::default();
        h.write(&self.width.to_le_bytes());
        h.write(&self.height.to_le_bytes());
        h.write(&(self.level as u32).to_le_bytes());
        if clock {
            h.write(&self.step_index.to_le_bytes());
            h.write(&self.score.to_le_bytes());
        }
        h.write(&[self.status as u8]);
        for s in &self.sprites {
            if clock {
                h.write(&s.id.to_le_bytes());
            }
            h.write(&s.kind.to_le_bytes());
            h.write(&s.pos.x.to_le_bytes());
            h.write(&s.pos.y.to_le_bytes());
            h.write(&[s.alive as u8, s.facing.index()]);
            h.write(&s.cooldown.to_le_bytes());
            if clock || self.game.type_info(s.kind).ttl.is_some() {
                h.write(&s.age.to_le_bytes());
            }
            h.write(&s.spawned.to_le_bytes());
        }
        h.write(&[0xfe]);
        for (k, v) in &self.inventory {
            h.write(&k.to_le_bytes());
            h.write(&v.to_le_bytes());
        }
        // SplitMix64's output is a bijection of its state, so the next draw identifies it.
        h.write(&self.rng.clone().next_u64().to_le_bytes());
        h.finish()
    }

    /// Advances one tick: avatar, NPC moves, spawns, interactions, terminations.
    pub fn step(&mut self, act: Action) -> Result<StepOutcome, EngineError> {
        if self.status != EpisodeStatus::Ongoing {
            return Err(EngineError::EpisodeAlreadyTerminated);
        }
        let game = Arc::clone(&self.game);
        for s in &mut self.sprites {
            s.prev = s.pos;
            s.moved = None;
            s.hit_edge = false;
        }
        let existing = self.sprites.len();

        // Avatar.
        for i in 0..existing {
            if !self.sprites[i].alive || self.sprites[i].kind != game.avatar {
                continue;
            }
            match act {
                Action::Up | Action::Down | Action::Left | Action::Right => {
                    let dir = act.direction().expect("movement action");
                    self.sprites[i].facing = dir;
                    self.try_move(i, dir);
                }
                Action::Use => {
                    let info = game.type_info(game.avatar);
                    if let (SpriteClass::ShootAvatar, Some(shot)) = (info.class, info.shoot) {
                        let s = &self.sprites[i];
                        let (cell, facing) = (s.pos.offset(s.facing), s.facing);
                        if self.in_grid(cell) {
                            self.create(shot, cell, facing);
                        }
                    }
                }
                Action::Wait => {}
            }
        }

        // NPCs.
        for i in 0..existing {
            let s = &self.sprites[i];
            let info = game.type_info(s.kind);
            if !s.alive || !info.class.is_npc() {
                continue;
            }
            self.sprites[i].cooldown += 1;
            if self.sprites[i].cooldown < info.cooldown {
                continue;
            }
            self.sprites[i].cooldown = 0;
            match info.class {
                SpriteClass::RandomNPC => {
                    let draw = self.rng.next_u64();
                    self.try_move(i, Direction::PRIORITY[(draw >> 62) as usize]);
                }
                SpriteClass::Chaser | SpriteClass::Fleer => {
                    let chase = info.class == SpriteClass::Chaser;
                    if let Some(dir) = self.pursuit_move(i, info.target, chase) {
                        self.try_move(i, dir);
                    }
                }
                SpriteClass::PathWalker => {
                    let s = &self.sprites[i];
                    let ahead = s.pos.offset(s.facing);
                    if self.blocked_for(s.kind, ahead) {
                        let back = s.facing.reverse();
                        self.sprites[i].facing = back;
                        let behind = self.sprites[i].pos.offset(back);
                        if !self.blocked_for(self.sprites[i].kind, behind) {
                            self.try_move(i, back);
                        }
                    } else {
                        let f = s.facing;
                        self.try_move(i, f);
                    }
                }
                SpriteClass::Missile => {
                    for _ in 0..info.speed {
                        let f = self.sprites[i].facing;
                        self.try_move(i, f);
                        if self.sprites[i].hit_edge {
                            break;
                        }
                    }
                }
                _ => unreachable!("is_npc"),
            }
        }

        // Spawn points.
        for i in 0..existing {
            let s = &self.sprites[i];
            let info = game.type_info(s.kind);
            if !s.alive || info.class != SpriteClass::SpawnPoint {
                continue;
            }
            self.sprites[i].cooldown += 1;
            if self.sprites[i].cooldown < info.cooldown {
                continue;
            }
            self.sprites[i].cooldown = 0;
            if info.total.is_some_and(|t| self.sprites[i].spawned >= t) {
                continue;
            }
            let fire = if info.prob >= 1.0 {
                true
            } else if info.prob <= 0.0 {
                false
            } else {
                unit_draw(self.rng.next_u64()) < info.prob
            };
            if fire {
                let (pos, facing) = (self.sprites[i].pos, self.sprites[i].facing);
                self.sprites[i].spawned += 1;
                self.create(info.spawn.expect("spawn point has a product"), pos, facing);
            }
        }

        // Interactions, in rule-declaration order.
        let mut events = Vec::new();
        for (ri, rule) in game.rules.iter().enumerate() {
            let n = self.sprites.len();
            for a in 0..n {
                if !self.sprites[a].alive || self.sprites[a].kind != rule.actor {
                    continue;
                }
                match rule.patient {
                    Patient::Edge => {
                        if self.sprites[a].hit_edge && self.apply(&rule.effect, a, None) {
                            events.push(self.event(ri, rule.score_delta, a, None));
                        }
                    }
                    Patient::Sprite(pk) => {
                        for p in 0..n {
                            if !self.sprites[a].alive {
                                break;
                            }
                            if p == a
                                || !self.sprites[p].alive
                                || self.sprites[p].kind != pk
                                || self.sprites[p].pos != self.sprites[a].pos
                            {
                                continue;
                            }
                            if self.apply(&rule.effect, a, Some(p)) {
                                events.push(self.event(ri, rule.score_delta, a, Some(p)));
                            }
                        }
                    }
                }
            }
        }

        // Lifetimes.
        for s in &mut self.sprites {
            if !s.alive {
                continue;
            }
            s.age += 1;
            if game.type_info(s.kind).ttl.is_some_and(|t| s.age >= t) {
                s.alive = false;
            }
        }
        self.sprites.retain(|s| s.alive);
        self.step_index += 1;

        // Terminations: first match decides.
        for (t, rule) in &game.terminations {
            let hit = match t {
                CompiledTermination::Counter { types, limit } => {
                    types.iter().map(|&k| self.count(k)).sum::<u32>() <= *limit
                }
                CompiledTermination::Timeout { steps } => self.step_index >= *steps,
            };
            if hit {
                self.status = match rule.outcome {
                    Outcome::Win => EpisodeStatus::Won,
                    Outcome::Lose => EpisodeStatus::Lost,
                };
                break;
            }
        }
        Ok(StepOutcome {
            status: self.status,
            events,
        })
    }

    fn event(&mut self, rule: usize, delta: i32, a: usize, p: Option<usize>) -> Event {
        self.score += i64::from(delta);
        Event {
            rule,
            actor: self.sprites[a].id,
            patient: p.map(|p| self.sprites[p].id),
            score_delta: delta,
        }
    }

    fn try_move(&mut self, i: usize, dir: Direction) {
        let target = self.sprites[i].pos.offset(dir);
        if self.in_grid(target) {
            self.sprites[i].pos = target;
            self.sprites[i].moved = Some(dir);
        } else {
            self.sprites[i].hit_edge = true;
        }
    }

    /// Off-grid, or occupied by something a `mover` would be stepped back from.
    fn blocked_for(&self, mover: TypeId, cell: Pos) -> bool {
        !self.in_grid(cell)
            || self
                .live_sprites()
                .any(|s| s.pos == cell && self.game.steps_back(mover, s.kind))
    }

    /// Pushes stop at obstacles of the pushed sprite and at other passive sprites.
    fn blocked_push(&self, pushed: usize, cell: Pos) -> bool {
        let kind = self.sprites[pushed].kind;
        !self.in_grid(cell)
            || self.sprites.iter().enumerate().any(|(j, s)| {
                j != pushed
                    && s.alive
                    && s.pos == cell
                    && (self.game.steps_back(kind, s.kind)
                        || self.game.type_info(s.kind).class == SpriteClass::Passive)
            })
    }

    /// Chaser (`chase`) or Fleer move relative to the nearest live target, if any
    /// unblocked direction strictly improves the distance.
    fn pursuit_move(&self, i: usize, target: Option<TypeId>, chase: bool) -> Option<Direction> {
        let me = &self.sprites[i];
        let goal = self
            .sprites
            .iter()
            .enumerate()
            .filter(|(j, s)| *j != i && s.alive && Some(s.kind) == target)
            .min_by_key(|(_, s)| me.pos.manhattan(s.pos))
            .map(|(_, s)| s.pos)?;
        let current = me.pos.manhattan(goal);
        let mut best: Option<(Direction, u32)> = None;
        for dir in Direction::PRIORITY {
            let cell = me.pos.offset(dir);
            if self.blocked_for(me.kind, cell) {
                continue;
            }
            let d = cell.manhattan(goal);
            let better = match best {
                None => true,
                Some((_, bd)) => {
                    if chase {
                        d < bd
                    } else {
                        d > bd
                    }
                }
            };
            if better {
                best = Some((dir, d));
            }
        }
        let (dir, d) = best?;
        let improves = if chase { d < current } else { d > current };
        improves.then_some(dir)
    }

    /// Applies an effect; returns false when it had no effect (and scores nothing).
    fn apply(&mut self, effect: &CompiledEffect, a: usize, p: Option<usize>) -> bool {
        match effect {
            CompiledEffect::KillSprite => self.sprites[a].alive = false,
            CompiledEffect::KillBoth => {
                self.sprites[a].alive = false;
                if let Some(p) = p {
                    self.sprites[p].alive = false;
                }
            }
            CompiledEffect::TransformTo(t) => {
                self.sprites[a].alive = false;
                let (pos, facing) = (self.sprites[a].pos, self.sprites[a].facing);
                self.create(*t, pos, facing);
            }
            CompiledEffect::StepBack => self.sprites[a].pos = self.sprites[a].prev,
            CompiledEffect::BounceForward => {
                let Some(p) = p else { return false };
                let Some(dir) = self.sprites[p].moved else {
                    return false;
                };
                let dest = self.sprites[a].pos.offset(dir);
                if self.blocked_push(a, dest) {
                    self.sprites[p].pos = self.sprites[p].prev;
                } else {
                    self.sprites[a].pos = dest;
                    self.sprites[a].moved = Some(dir);
                }
            }
            CompiledEffect::CollectResource => {
                self.sprites[a].alive = false;
                *self.inventory.entry(self.sprites[a].kind).or_insert(0) += 1;
            }
            CompiledEffect::KillIfOtherHasMore { resource, count } => {
                if self.inventory.get(resource).copied().unwrap_or(0) >= *count {
                    self.sprites[a].alive = false;
                } else {
                    return false;
                }
            }
            CompiledEffect::SpawnBehind(t) => {
                let (pos, facing) = (self.sprites[a].prev, self.sprites[a].facing);
                self.create(*t, pos, facing);
            }
            CompiledEffect::ScoreChange => {}
        }
        true
    }
}

/// Maps a raw 64-bit draw to [0, 1) using its top 53 bits.
pub fn unit_draw(draw: u64) -> f64 {
    (draw >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}
