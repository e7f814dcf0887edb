//! Reference one-step simulator, written against the parsed rule list with name-keyed
//! state.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::Arc;

use arena_core::engine::{init_episode, EpisodeStatus, Game, WorldState};
use arena_core::vgdl::{
    BundleSource, Effect, GameDescription, Outcome, SpriteClass, TerminationKind, EOS, WALL,
};
use arena_core::{Action, Direction, Pos};
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ref {
    Old(u32),
    New(usize),
}

#[derive(Debug, Clone)]
struct S {
    id: Ref,
    kind: String,
    pos: Pos,
    facing: Direction,
    cooldown: u32,
    age: u32,
    spawned: u32,
    alive: bool,
    prev: Pos,
    moved: Option<Direction>,
    hit_edge: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct View {
    sprites: Vec<(Ref, String, Pos, Direction, u32, u32, u32)>,
    inventory: BTreeMap<String, u32>,
    score: i64,
    step: u32,
    status: EpisodeStatus,
    events: Vec<(usize, Ref, Option<Ref>, i32)>,
    next_draw: u64,
}

struct Oracle<'a> {
    d: &'a GameDescription,
    w: i32,
    h: i32,
    sprites: Vec<S>,
    created: usize,
    inventory: BTreeMap<String, u32>,
    score: i64,
    step: u32,
    rng: SplitMix64,
    events: Vec<(usize, Ref, Option<Ref>, i32)>,
}

const DIRS: [Direction; 4] = [
    Direction::Up,
    Direction::Down,
    Direction::Left,
    Direction::Right,
];

fn step_to(p: Pos, d: Direction) -> Pos {
    match d {
        Direction::Up => Pos::new(p.x, p.y - 1),
        Direction::Down => Pos::new(p.x, p.y + 1),
        Direction::Left => Pos::new(p.x - 1, p.y),
        Direction::Right => Pos::new(p.x + 1, p.y),
    }
}

fn dist(a: Pos, b: Pos) -> u32 {
    a.x.abs_diff(b.x) + a.y.abs_diff(b.y)
}

fn opposite(d: Direction) -> Direction {
    match d {
        Direction::Up => Direction::Down,
        Direction::Down => Direction::Up,
        Direction::Left => Direction::Right,
        Direction::Right => Direction::Left,
    }
}

impl<'a> Oracle<'a> {
    fn from_state(s: &WorldState, d: &'a GameDescription) -> Self {
        let g = s.game();
        Oracle {
            d,
            w: s.width(),
            h: s.height(),
            sprites: s
                .sprites()
                .iter()
                .map(|x| S {
                    id: Ref::Old(x.id),
                    kind: g.type_info(x.kind).name.clone(),
                    pos: x.pos,
                    facing: x.facing,
                    cooldown: x.cooldown,
                    age: x.age,
                    spawned: x.spawned,
                    alive: x.alive,
                    prev: x.pos,
                    moved: None,
                    hit_edge: false,
                })
                .collect(),
            created: 0,
            inventory: s
                .inventory()
                .iter()
                .map(|(k, v)| (g.type_info(*k).name.clone(), *v))
                .collect(),
            score: s.score(),
            step: s.step_index(),
            rng: s.rng(),
            events: vec![],
        }
    }

    fn class(&self, kind: &str) -> SpriteClass {
        if kind == WALL {
            return SpriteClass::Immovable;
        }
        self.d.sprite(kind).unwrap().class
    }

    fn param<T>(
        &self,
        kind: &str,
        f: impl Fn(&arena_core::vgdl::SpriteParams) -> Option<T>,
    ) -> Option<T> {
        self.d.sprite(kind).and_then(|s| f(&s.params))
    }

    fn stops(&self, mover: &str, other: &str) -> bool {
        self.d
            .interactions
            .iter()
            .any(|r| r.actor == mover && r.patient == other && r.effect == Effect::StepBack)
    }

    fn inside(&self, p: Pos) -> bool {
        (0..self.w).contains(&p.x) && (0..self.h).contains(&p.y)
    }

    fn spawn(&mut self, kind: &str, pos: Pos, facing: Direction) {
        let facing = self.param(kind, |p| p.dir).unwrap_or(facing);
        self.sprites.push(S {
            id: Ref::New(self.created),
            kind: kind.to_string(),
            pos,
            facing,
            cooldown: 0,
            age: 0,
            spawned: 0,
            alive: true,
            prev: pos,
            moved: None,
            hit_edge: false,
        });
        self.created += 1;
    }

    fn go(&mut self, i: usize, d: Direction) {
        let t = step_to(self.sprites[i].pos, d);
        if self.inside(t) {
            self.sprites[i].pos = t;
            self.sprites[i].moved = Some(d);
        } else {
            self.sprites[i].hit_edge = true;
        }
    }

    fn blocked(&self, mover: &str, cell: Pos) -> bool {
        !self.inside(cell)
            || self
                .sprites
                .iter()
                .any(|s| s.alive && s.pos == cell && self.stops(mover, &s.kind))
    }

    fn pursue(&self, i: usize, target: &str, toward: bool) -> Option<Direction> {
        let me = self.sprites[i].pos;
        let mut goal: Option<Pos> = None;
        for (j, s) in self.sprites.iter().enumerate() {
            if j != i
                && s.alive
                && s.kind == target
                && goal.is_none_or(|g| dist(me, s.pos) < dist(me, g))
            {
                goal = Some(s.pos);
            }
        }
        let goal = goal?;
        let mut options: Vec<(Direction, u32)> = DIRS
            .iter()
            .map(|&d| (d, step_to(me, d)))
            .filter(|(_, c)| !self.blocked(&self.sprites[i].kind, *c))
            .map(|(d, c)| (d, dist(c, goal)))
            .collect();
        // Stable sort keeps priority order among equals.
        if toward {
            options.sort_by_key(|o| o.1);
        } else {
            options.sort_by_key(|o| std::cmp::Reverse(o.1));
        }
        let (d, best) = *options.first()?;
        let now = dist(me, goal);
        if (toward && best < now) || (!toward && best > now) {
            Some(d)
        } else {
            None
        }
    }

    fn run(&mut self, act: Action) -> EpisodeStatus {
        let n0 = self.sprites.len();
        let avatar = self.d.avatar().name.clone();

        for i in 0..n0 {
            if !self.sprites[i].alive || self.sprites[i].kind != avatar {
                continue;
            }
            let dir = match act {
                Action::Up => Some(Direction::Up),
                Action::Down => Some(Direction::Down),
                Action::Left => Some(Direction::Left),
                Action::Right => Some(Direction::Right),
                _ => None,
            };
            if let Some(d) = dir {
                self.sprites[i].facing = d;
                self.go(i, d);
            } else if act == Action::Use && self.class(&avatar) == SpriteClass::ShootAvatar {
                if let Some(shot) = self.param(&avatar, |p| p.shoot.clone()) {
                    let f = self.sprites[i].facing;
                    let cell = step_to(self.sprites[i].pos, f);
                    if self.inside(cell) {
                        self.spawn(&shot, cell, f);
                    }
                }
            }
        }

        for i in 0..n0 {
            let kind = self.sprites[i].kind.clone();
            let class = self.class(&kind);
            let moving = matches!(
                class,
                SpriteClass::RandomNPC
                    | SpriteClass::Chaser
                    | SpriteClass::Fleer
                    | SpriteClass::PathWalker
                    | SpriteClass::Missile
            );
            if !self.sprites[i].alive || !moving {
                continue;
            }
            self.sprites[i].cooldown += 1;
            if self.sprites[i].cooldown < self.param(&kind, |p| p.cooldown).unwrap_or(1) {
                continue;
            }
            self.sprites[i].cooldown = 0;
            match class {
                SpriteClass::RandomNPC => {
                    let d = DIRS[(self.rng.next_u64() >> 62) as usize];
                    self.go(i, d);
                }
                SpriteClass::Chaser | SpriteClass::Fleer => {
                    if let Some(t) = self.param(&kind, |p| p.target.clone()) {
                        if let Some(d) = self.pursue(i, &t, class == SpriteClass::Chaser) {
                            self.go(i, d);
                        }
                    }
                }
                SpriteClass::PathWalker => {
                    let f = self.sprites[i].facing;
                    if self.blocked(&kind, step_to(self.sprites[i].pos, f)) {
                        let b = opposite(f);
                        self.sprites[i].facing = b;
                        if !self.blocked(&kind, step_to(self.sprites[i].pos, b)) {
                            self.go(i, b);
                        }
                    } else {
                        self.go(i, f);
                    }
                }
                _ => {
                    for _ in 0..self.param(&kind, |p| p.speed).unwrap_or(1) {
                        let f = self.sprites[i].facing;
                        self.go(i, f);
                        if self.sprites[i].hit_edge {
                            break;
                        }
                    }
                }
            }
        }

        for i in 0..n0 {
            let kind = self.sprites[i].kind.clone();
            if !self.sprites[i].alive || self.class(&kind) != SpriteClass::SpawnPoint {
                continue;
            }
            self.sprites[i].cooldown += 1;
            if self.sprites[i].cooldown < self.param(&kind, |p| p.cooldown).unwrap_or(1) {
                continue;
            }
            self.sprites[i].cooldown = 0;
            if self
                .param(&kind, |p| p.total)
                .is_some_and(|t| self.sprites[i].spawned >= t)
            {
                continue;
            }
            let prob = self.param(&kind, |p| p.prob).unwrap_or(1.0);
            let fire = if prob >= 1.0 {
                true
            } else if prob <= 0.0 {
                false
            } else {
                ((self.rng.next_u64() >> 11) as f64 / 9007199254740992.0) < prob
            };
            if fire {
                self.sprites[i].spawned += 1;
                let product = self.param(&kind, |p| p.spawn.clone()).unwrap();
                let (pos, f) = (self.sprites[i].pos, self.sprites[i].facing);
                self.spawn(&product, pos, f);
            }
        }

        for (ri, rule) in self.d.interactions.iter().enumerate() {
            let n = self.sprites.len();
            for a in 0..n {
                if !self.sprites[a].alive || self.sprites[a].kind != rule.actor {
                    continue;
                }
                if rule.patient == EOS {
                    if self.sprites[a].hit_edge && self.effect(&rule.effect, a, None) {
                        self.record(ri, rule.score_delta, a, None);
                    }
                    continue;
                }
                for p in 0..n {
                    if !self.sprites[a].alive {
                        break;
                    }
                    let ok = p != a
                        && self.sprites[p].alive
                        && self.sprites[p].kind == rule.patient
                        && self.sprites[p].pos == self.sprites[a].pos;
                    if ok && self.effect(&rule.effect, a, Some(p)) {
                        self.record(ri, rule.score_delta, a, Some(p));
                    }
                }
            }
        }

        for i in 0..self.sprites.len() {
            if self.sprites[i].alive {
                self.sprites[i].age += 1;
                let ttl = self.param(&self.sprites[i].kind.clone(), |p| p.ttl);
                if ttl.is_some_and(|t| self.sprites[i].age >= t) {
                    self.sprites[i].alive = false;
                }
            }
        }
        self.sprites.retain(|s| s.alive);
        self.step += 1;

        for t in &self.d.terminations {
            let count = |names: &[&str]| {
                self.sprites
                    .iter()
                    .filter(|s| names.contains(&s.kind.as_str()))
                    .count() as u32
            };
            let hit = match &t.kind {
                TerminationKind::SpriteCounter { sprite_type, limit } => {
                    count(&[sprite_type]) <= *limit
                }
                TerminationKind::MultiSpriteCounter { types, limit } => {
                    count(&types.iter().map(String::as_str).collect::<Vec<_>>()) <= *limit
                }
                TerminationKind::Timeout { steps } => self.step >= *steps,
            };
            if hit {
                return match t.outcome {
                    Outcome::Win => EpisodeStatus::Won,
                    Outcome::Lose => EpisodeStatus::Lost,
                };
            }
        }
        EpisodeStatus::Ongoing
    }

    fn record(&mut self, rule: usize, delta: i32, a: usize, p: Option<usize>) {
        self.score += delta as i64;
        self.events.push((
            rule,
            self.sprites[a].id,
            p.map(|p| self.sprites[p].id),
            delta,
        ));
    }

    fn effect(&mut self, e: &Effect, a: usize, p: Option<usize>) -> bool {
        match e {
            Effect::KillSprite => self.sprites[a].alive = false,
            Effect::KillBoth => {
                self.sprites[a].alive = false;
                if let Some(p) = p {
                    self.sprites[p].alive = false;
                }
            }
            Effect::TransformTo(t) => {
                self.sprites[a].alive = false;
                let (pos, f) = (self.sprites[a].pos, self.sprites[a].facing);
                self.spawn(t, pos, f);
            }
            Effect::StepBack => self.sprites[a].pos = self.sprites[a].prev,
            Effect::BounceForward => {
                let Some(d) = p.and_then(|p| self.sprites[p].moved) else {
                    return false;
                };
                let p = p.unwrap();
                let dest = step_to(self.sprites[a].pos, d);
                let kind = self.sprites[a].kind.clone();
                let stuck = !self.inside(dest)
                    || self.sprites.iter().enumerate().any(|(j, s)| {
                        j != a
                            && s.alive
                            && s.pos == dest
                            && (self.stops(&kind, &s.kind)
                                || self.class(&s.kind) == SpriteClass::Passive)
                    });
                if stuck {
                    self.sprites[p].pos = self.sprites[p].prev;
                } else {
                    self.sprites[a].pos = dest;
                    self.sprites[a].moved = Some(d);
                }
            }
            Effect::CollectResource => {
                self.sprites[a].alive = false;
                *self
                    .inventory
                    .entry(self.sprites[a].kind.clone())
                    .or_default() += 1;
            }
            Effect::KillIfOtherHasMore { resource, count } => {
                if self.inventory.get(resource).copied().unwrap_or(0) < *count {
                    return false;
                }
                self.sprites[a].alive = false;
            }
            Effect::SpawnBehind(t) => {
                let (pos, f) = (self.sprites[a].prev, self.sprites[a].facing);
                self.spawn(t, pos, f);
            }
            Effect::ScoreChange => {}
        }
        true
    }

    fn view(mut self, status: EpisodeStatus) -> View {
        View {
            sprites: self
                .sprites
                .iter()
                .map(|s| {
                    (
                        s.id,
                        s.kind.clone(),
                        s.pos,
                        s.facing,
                        s.cooldown,
                        s.age,
                        s.spawned,
                    )
                })
                .collect(),
            inventory: self.inventory,
            score: self.score,
            step: self.step,
            status,
            events: self.events,
            next_draw: self.rng.next_u64(),
        }
    }
}

/// Engine state after a step, with ids of sprites absent from `before` renamed by
/// creation rank so they can be compared with the oracle's.
fn engine_view(
    s: &WorldState,
    before: &HashSet<u32>,
    events: &[arena_core::engine::Event],
    status: EpisodeStatus,
) -> View {
    let g = s.game();
    let fresh: BTreeSet<u32> = s
        .sprites()
        .iter()
        .map(|x| x.id)
        .chain(
            events
                .iter()
                .flat_map(|e| std::iter::once(e.actor).chain(e.patient)),
        )
        .filter(|id| !before.contains(id))
        .collect();
    let r = |id: u32| {
        if before.contains(&id) {
            Ref::Old(id)
        } else {
            Ref::New(fresh.iter().position(|&f| f == id).unwrap())
        }
    };
    View {
        sprites: s
            .sprites()
            .iter()
            .map(|x| {
                (
                    r(x.id),
                    g.type_info(x.kind).name.clone(),
                    x.pos,
                    x.facing,
                    x.cooldown,
                    x.age,
                    x.spawned,
                )
            })
            .collect(),
        inventory: s
            .inventory()
            .iter()
            .map(|(k, v)| (g.type_info(*k).name.clone(), *v))
            .collect(),
        score: s.score(),
        step: s.step_index(),
        status,
        events: events
            .iter()
            .map(|e| (e.rule, r(e.actor), e.patient.map(r), e.score_delta))
            .collect(),
        next_draw: s.rng().next_u64(),
    }
}

/// (description, non-avatar layout characters)
pub const GAMES: [(&str, &str); 5] = [
    (
        "\
sprite avatar > MovingAvatar
sprite box > Passive
sprite hole > Immovable
map A > avatar
map 1 > box
map 0 > hole
map w > wall
interact avatar wall > stepBack
interact box wall > stepBack
interact box avatar > bounceForward
interact box box > stepBack
interact box hole > killBoth score=1
interact avatar hole > killSprite
terminate > SpriteCounter type=avatar limit=0 lose
terminate > SpriteCounter type=box limit=0 win
",
        "10w",
    ),
    (
        "\
sprite avatar > MovingAvatar
sprite enemy > Chaser target=avatar cooldown=2
sprite bat > RandomNPC
sprite rock > Immovable
map A > avatar
map e > enemy
map b > bat
map r > rock
interact avatar rock > stepBack
interact enemy rock > stepBack
interact bat rock > stepBack
interact bat EOS > stepBack
interact avatar enemy > killSprite score=-1
interact bat avatar > killSprite score=2
terminate > SpriteCounter type=avatar limit=0 lose
terminate > SpriteCounter type=bat limit=0 win
",
        "ebr",
    ),
    (
        "\
sprite avatar > ShootAvatar shoot=sword
sprite sword > Immovable ttl=1
sprite enemy > Fleer target=avatar
sprite key > Resource
sprite door > Immovable
map A > avatar
map e > enemy
map k > key
map d > door
interact enemy sword > killSprite score=2
interact key avatar > collectResource score=1
interact door avatar > killIfOtherHasMore resource=key count=1 score=3
interact avatar door > stepBack
interact avatar EOS > stepBack
terminate > SpriteCounter type=avatar limit=0 lose
terminate > SpriteCounter type=door limit=0 win
terminate > Timeout steps=6 lose
",
        "ekd",
    ),
    (
        "\
sprite avatar > ShootAvatar shoot=bolt
sprite bolt > Missile speed=2
sprite cannon > SpawnPoint spawn=ball prob=0.5 cooldown=2 total=2
sprite ball > Missile dir=down
sprite walker > PathWalker dir=right
sprite stone > Immovable
map A > avatar
map c > cannon
map p > walker
map s > stone
interact bolt EOS > killSprite
interact ball EOS > killSprite
interact walker stone > stepBack
interact avatar ball > killSprite score=-2
interact walker bolt > transformTo type=stone score=1
interact bolt stone > killSprite
terminate > SpriteCounter type=avatar limit=0 lose
terminate > SpriteCounter type=walker limit=0 win
",
        "cps",
    ),
    (
        "\
sprite avatar > MovingAvatar
sprite dirt > Immovable
sprite cannon > SpawnPoint spawn=ghost cooldown=3 ttl=4
sprite ghost > Fleer target=avatar
sprite coin > Resource
map A > avatar
map c > cannon
map x > dirt
map o > coin
interact avatar dirt > spawnBehind type=coin
interact avatar cannon > stepBack
interact ghost avatar > transformTo type=coin score=1
interact coin avatar > collectResource
interact avatar ghost > killSprite
terminate > MultiSpriteCounter types=ghost,cannon limit=0 win
terminate > SpriteCounter type=avatar limit=0 lose
",
        "cxo",
    ),
];

fn random_level(rng: &mut ChaCha8Rng, chars: &str) -> String {
    let w = rng.random_range(2..=5);
    let h = rng.random_range(2..=5);
    let mut grid = vec![vec!['.'; w]; h];
    let mut cells: Vec<(usize, usize)> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).collect();
    let chars: Vec<char> = chars.chars().collect();
    let others = rng.random_range(1..=3).min(cells.len() - 1);
    for k in 0..=others {
        let i = rng.random_range(0..cells.len());
        let (x, y) = cells.swap_remove(i);
        grid[y][x] = if k == 0 {
            'A'
        } else {
            *chars.choose(rng).unwrap()
        };
    }
    grid.into_iter()
        .map(|r| r.into_iter().collect::<String>() + "\n")
        .collect()
}

/// Sizes of a randomized comparison run.
#[derive(Debug, Clone, Copy)]
pub struct OracleRun {
    pub instances: usize,
    pub steps_per_instance: usize,
    /// Steps are compared only while the state holds at most this many sprites.
    pub max_sprites: usize,
    /// Interaction rules kept per instance, sampled in declaration order.
    pub max_rules: usize,
    pub seed: u64,
}

impl Default for OracleRun {
    fn default() -> Self {
        OracleRun {
            instances: 5000,
            steps_per_instance: 8,
            max_sprites: 4,
            max_rules: 3,
            seed: 2024,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OracleReport {
    pub instances: usize,
    pub compared: usize,
    pub with_events: usize,
    /// Level text and action of the first disagreement.
    pub mismatch: Option<String>,
}

/// Plays random actions on random micro levels (grids up to 5x5) of the [`GAMES`] and
/// compares every small step with the reference simulator.
pub fn compare(run: OracleRun) -> OracleReport {
    let mut rng = ChaCha8Rng::seed_from_u64(run.seed);
    let games: Vec<(Arc<Game>, &str)> = GAMES
        .iter()
        .map(|(d, c)| {
            let src = BundleSource {
                name: "micro".into(),
                description: d.to_string(),
                levels: vec!["A.\n".into(); 9],
            };
            (Game::new(src.compile().unwrap()).unwrap(), *c)
        })
        .collect();
    let mut report = OracleReport::default();
    for _ in 0..run.instances {
        let (base, chars) = &games[rng.random_range(0..games.len())];
        let mut bundle = base.bundle.clone();
        let rules = &mut bundle.description.interactions;
        let keep = rng.random_range(1..=run.max_rules.min(rules.len()));
        let picked: BTreeSet<usize> = rand::seq::index::sample(&mut rng, rules.len(), keep)
            .into_iter()
            .collect();
        *rules = picked.iter().map(|&i| rules[i].clone()).collect();
        let level = random_level(&mut rng, chars);
        bundle.levels[0] =
            arena_core::vgdl::parse_level_layout(&level, &bundle.description).unwrap();
        let game = Game::new(bundle).unwrap();
        let mut state = init_episode(&game, 0, rng.next_u64()).unwrap();
        report.instances += 1;
        for _ in 0..run.steps_per_instance {
            if state.status() != EpisodeStatus::Ongoing {
                break;
            }
            let act = *Action::ALL.choose(&mut rng).unwrap();
            let before: HashSet<u32> = state.sprites().iter().map(|s| s.id).collect();
            let small = state.sprites().len() <= run.max_sprites;
            let mut oracle = Oracle::from_state(&state, &game.bundle.description);
            let status = oracle.run(act);
            let expected = oracle.view(status);
            let out = state.step(act).unwrap();
            if small {
                let got = engine_view(&state, &before, &out.events, out.status);
                if got != expected {
                    report.mismatch = Some(format!(
                        "{level}action {act:?}\nengine {got:?}\noracle {expected:?}"
                    ));
                    return report;
                }
                report.compared += 1;
                report.with_events += usize::from(!out.events.is_empty());
            }
        }
    }
    report
}
