use arena_core::engine::{init_episode, CompiledTermination, EpisodeStatus, WorldState};
use arena_core::games;
use arena_core::vgdl::Outcome;
use arena_core::Action;
use proptest::prelude::*;

fn actions() -> impl Strategy<Value = Vec<Action>> {
    prop::collection::vec(prop::sample::select(Action::ALL.to_vec()), 1..60)
}

fn layout(s: &WorldState) -> Vec<(u16, i32, i32)> {
    s.sprites()
        .iter()
        .map(|x| (x.kind, x.pos.x, x.pos.y))
        .collect()
}

/// Per-step digests, statuses and the summed score deltas of an episode.
fn play(
    name: &str,
    level: usize,
    seed: u64,
    acts: &[Action],
) -> (Vec<String>, Vec<EpisodeStatus>, i64, WorldState) {
    let game = games::load(name).unwrap();
    let mut s = init_episode(&game, level, seed).unwrap();
    let (mut digests, mut statuses, mut delta_sum) = (vec![], vec![], 0i64);
    for &a in acts {
        if s.status() != EpisodeStatus::Ongoing {
            break;
        }
        let before = s.step_index();
        let out = s.step(a).unwrap();
        assert_eq!(s.step_index(), before + 1);
        for sp in s.live_sprites() {
            assert!(
                sp.pos.x >= 0 && sp.pos.y >= 0 && sp.pos.x < s.width() && sp.pos.y < s.height()
            );
        }
        delta_sum += out
            .events
            .iter()
            .map(|e| i64::from(e.score_delta))
            .sum::<i64>();
        digests.push(s.state_hash().to_string());
        statuses.push(out.status);
    }
    (digests, statuses, delta_sum, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn episodes_are_deterministic_and_score_is_conserved(
        g in 0usize..7, level in 0usize..9, seed in any::<u64>(), acts in actions()
    ) {
        let name = games::names().nth(g).unwrap();
        let (d1, s1, delta, end) = play(name, level, seed, &acts);
        let (d2, s2, _, _) = play(name, level, seed, &acts);
        prop_assert_eq!(d1, d2);
        prop_assert_eq!(s1, s2);
        prop_assert_eq!(end.score(), delta);
    }

    #[test]
    fn terminal_status_matches_first_matching_rule(
        g in 0usize..7, level in 0usize..9, seed in any::<u64>(), acts in actions()
    ) {
        let (_, _, _, end) = play(games::names().nth(g).unwrap(), level, seed, &acts);
        let game = end.game().clone();
        let first = game.terminations.iter().find(|(t, _)| match t {
            CompiledTermination::Counter { types, limit } => types.iter().map(|&k| end.count(k)).sum::<u32>() <= *limit,
            CompiledTermination::Timeout { steps } => end.step_index() >= *steps,
        });
        let expected = match first.map(|(_, r)| r.outcome) {
            None => EpisodeStatus::Ongoing,
            Some(Outcome::Win) => EpisodeStatus::Won,
            Some(Outcome::Lose) => EpisodeStatus::Lost,
        };
        prop_assert_eq!(end.status(), expected);
    }

    #[test]
    fn deterministic_games_ignore_the_seed(
        g in 0usize..7, level in 0usize..9, a in any::<u64>(), b in any::<u64>(), acts in actions()
    ) {
        let name = games::names().nth(g).unwrap();
        prop_assume!(!games::load(name).unwrap().is_stochastic());
        let (_, s1, _, e1) = play(name, level, a, &acts);
        let (_, s2, _, e2) = play(name, level, b, &acts);
        prop_assert_eq!(s1, s2);
        prop_assert_eq!(e1.score(), e2.score());
        prop_assert_eq!(layout(&e1), layout(&e2));
    }
}

#[test]
fn stepping_a_finished_episode_fails() {
    let game = games::load("bait").unwrap();
    let mut s = init_episode(&game, 0, 0).unwrap();
    let plan = arena_core::solver::solve(&game, 0, 0, Default::default())
        .unwrap()
        .unwrap();
    for a in plan {
        s.step(a).unwrap();
    }
    assert_eq!(s.status(), EpisodeStatus::Won);
    assert!(s.step(Action::Wait).is_err());
}
