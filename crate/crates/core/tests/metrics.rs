mod common;

use arena_core::agent::ScriptedAgent;
use arena_core::metrics::*;
use arena_core::runner::*;
use arena_core::Action;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use arena_testkit::transport_oracle;
use common::{base, corridor, episode};
use StepStatus::{Lost as L, Won as W};

fn sample(values: &[f64]) -> MetricSample {
    MetricSample {
        label: String::new(),
        values: values.to_vec(),
        observations: vec![],
        denominator: values.len(),
    }
}

const EMD_TOL: f64 = 1e-9;

#[test]
fn log_emd_matches_transport_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..300 {
        let n = rng.random_range(1..=6);
        let m = rng.random_range(1..=6);
        let a: Vec<f64> = (0..n).map(|_| rng.random_range(1..=500) as f64).collect();
        let b: Vec<f64> = (0..m).map(|_| rng.random_range(1..=500) as f64).collect();
        let la: Vec<f64> = a.iter().map(|v| v.ln()).collect();
        let lb: Vec<f64> = b.iter().map(|v| v.ln()).collect();
        let got = log_emd(&sample(&a), &sample(&b)).unwrap();
        let want = transport_oracle(&la, &lb);
        assert!((got - want).abs() < EMD_TOL, "{a:?} {b:?}: {got} vs {want}");
    }
}

#[test]
fn log_emd_worked_example() {
    let d = log_emd_values(&[1.0, 100.0], &[10.0, 10.0]).unwrap();
    assert!((d - 10f64.ln()).abs() < 1e-12);
    assert_eq!(log_emd_values(&[5.0, 9.0], &[9.0, 5.0]).unwrap(), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn log_emd_is_a_metric(
        a in prop::collection::vec(1u32..10_000, 1..12),
        b in prop::collection::vec(1u32..10_000, 1..12),
        c in prop::collection::vec(1u32..10_000, 1..12),
    ) {
        let f = |v: &Vec<u32>| v.iter().map(|&x| x as f64).collect::<Vec<_>>();
        let (a, b, c) = (f(&a), f(&b), f(&c));
        let ab = log_emd_values(&a, &b).unwrap();
        let ba = log_emd_values(&b, &a).unwrap();
        let bc = log_emd_values(&b, &c).unwrap();
        let ac = log_emd_values(&a, &c).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert_eq!(log_emd_values(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn log_emd_ignores_common_rescaling(
        a in prop::collection::vec(1u32..10_000, 1..12),
        b in prop::collection::vec(1u32..10_000, 1..12),
        scale in 1u32..50,
    ) {
        let f = |v: &Vec<u32>, s: u32| v.iter().map(|&x| (x * s) as f64).collect::<Vec<_>>();
        let d1 = log_emd_values(&f(&a, 1), &f(&b, 1)).unwrap();
        let d2 = log_emd_values(&f(&a, scale), &f(&b, scale)).unwrap();
        prop_assert!((d1 - d2).abs() < 1e-9);
    }
}

#[test]
fn kde_of_one_value_peaks_at_its_log() {
    let grid = log_grid(0.0, 6.0, 601);
    let k = kde_curve(&sample(&[50.0]), &grid).unwrap();
    assert_eq!(k.bandwidth, 0.1);
    let (i, &peak) = k
        .density
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    assert_eq!(peak, 1.0);
    assert!((grid[i] - 50f64.ln()).abs() <= 0.005);
}

const KDE_TOL: f64 = 0.05;

#[test]
fn kde_matches_binned_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    // Lognormal(0, 1) via Box-Muller.
    let values: Vec<f64> = (0..100)
        .map(|_| {
            let (u1, u2): (f64, f64) = (rng.random(), rng.random());
            ((-2.0 * u1.max(1e-300).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()).exp()
        })
        .collect();
    let grid = log_grid(-5.0, 5.0, 1001);
    let k = kde_curve(&sample(&values), &grid).unwrap();

    // Histogram of the logs at 0.01 resolution, each bin smoothed by the same kernel.
    let h = k.bandwidth;
    let width = 0.01;
    let mut bins = std::collections::BTreeMap::<i64, usize>::new();
    for v in &values {
        *bins.entry((v.ln() / width).floor() as i64).or_default() += 1;
    }
    let oracle: Vec<f64> = grid
        .iter()
        .map(|g| {
            bins.iter()
                .map(|(b, c)| {
                    let center = (*b as f64 + 0.5) * width;
                    *c as f64 * (-0.5 * ((g - center) / h).powi(2)).exp()
                })
                .sum::<f64>()
                / (values.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect();
    let oracle_peak = oracle.iter().copied().fold(0.0, f64::max);
    for (d, o) in k.density.iter().zip(&oracle) {
        assert!((d - o / oracle_peak).abs() < KDE_TOL);
    }
    // Undoing the normalization recovers a unit-mass density.
    let area: f64 = k.density.iter().sum::<f64>() * (grid[1] - grid[0]) * k.peak;
    assert!((area - 1.0).abs() < KDE_TOL, "{area}");
}

#[test]
fn kaplan_meier_counts_wins_before_tied_censorings() {
    let obs = |step: f64, solved: bool| KmObservation { step, solved };
    let km = km_curve(&[obs(10.0, true), obs(20.0, true), obs(15.0, false)]).unwrap();
    assert_eq!(km.steps, vec![0.0, 10.0, 20.0]);
    assert!((km.solved[1] - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(km.solved[2], 1.0);
    assert_eq!(km.solved_at(15.0), km.solved[1]);

    let all_censored = km_curve(&[obs(5.0, false), obs(9.0, false)]).unwrap();
    assert_eq!(all_censored.solved, vec![0.0]);
    assert_eq!(all_censored.solved_at(1e9), 0.0);

    // One win and one censoring at the same step: the censored one was still at risk.
    let tied = km_curve(&[obs(7.0, true), obs(7.0, false)]).unwrap();
    assert_eq!(tied.solved, vec![0.0, 0.5]);
    assert_eq!(km_curve(&[]), Err(MetricError::EmptyInput));
}

fn staircase() -> SessionTrace {
    let mut t = base();
    for level in 0..3 {
        episode(&mut t, level, 10, W);
        episode(&mut t, level, 10, W);
    }
    t
}

fn stuck() -> SessionTrace {
    let mut t = base();
    for _ in 0..10 {
        episode(&mut t, 0, 10, L);
    }
    t
}

#[test]
fn progression_of_staircase_and_stalled_trace() {
    let grid = [0, 19, 20, 40, 60, 100];
    let one = progression_curve(&[staircase()], &grid).unwrap();
    assert_eq!(one.mean, vec![0.0, 0.0, 1.0, 2.0, 3.0, 3.0]);
    assert_eq!(one.sem, vec![0.0; 6]);

    let two = progression_curve(&[staircase(), stuck()], &grid).unwrap();
    assert_eq!(two.mean[4], 1.5);
    assert!((two.sem[4] - 1.5).abs() < 1e-12);
    assert_eq!(mastery_steps(&staircase(), 2), vec![20, 40, 60]);
}

#[test]
fn discovery_and_execution_from_real_runs() {
    let run = RunConfig {
        protocol: Protocol::Blocked,
        ..Default::default()
    };
    let t = run_session(
        &corridor(),
        run,
        &mut ScriptedAgent::constant(Action::Right),
        None,
    )
    .unwrap();
    let d = discovery_times(std::slice::from_ref(&t), &Strata::all()).unwrap();
    assert_eq!(d.values, vec![10.0; 9]);
    assert_eq!(d.denominator, 9);
    let e = execution_times(std::slice::from_ref(&t), &Strata::all()).unwrap();
    assert_eq!(e.values, vec![10.0; 9]);

    let lvl = Strata {
        level: Some(4),
        ..Strata::all()
    };
    assert_eq!(
        discovery_times(std::slice::from_ref(&t), &lvl)
            .unwrap()
            .values,
        vec![10.0]
    );
    assert_eq!(
        discovery_times(&[t], &Strata::game("bait")),
        Err(MetricError::EmptyInput)
    );
}

#[test]
fn unsolved_played_levels_are_censored_observations() {
    let mut t = base();
    episode(&mut t, 0, 5, L);
    episode(&mut t, 0, 7, W);
    episode(&mut t, 1, 30, L);
    let d = discovery_times(&[t], &Strata::all()).unwrap();
    assert_eq!(d.values, vec![12.0]);
    assert_eq!(d.denominator, 9);
    assert_eq!(
        d.observations,
        vec![
            KmObservation {
                step: 12.0,
                solved: true
            },
            KmObservation {
                step: 30.0,
                solved: false
            }
        ]
    );
}

#[test]
fn solve_table_counts_every_level_instance() {
    let mut t = base();
    episode(&mut t, 0, 4, W);
    episode(&mut t, 0, 4, W);
    episode(&mut t, 1, 8, L);
    episode(&mut t, 1, 2, W);
    let rows = solve_table(&[t.clone(), stuck()]).unwrap();
    assert_eq!(rows.len(), 2);
    let all = rows.last().unwrap();
    assert_eq!(all.game, "all");
    assert_eq!((all.solved, all.instances), (2, 18));
    assert!((all.rate - 2.0 / 18.0).abs() < 1e-15);
    assert_eq!(
        (all.q1, all.median, all.q3),
        (Some(5.5), Some(7.0), Some(8.5))
    );

    let adv = unsolved_advancement(&[t.clone(), stuck()]).unwrap();
    assert_eq!((adv[0].unsolved, adv[0].played), (1, 3));

    let mut blocked = t;
    blocked.header.run.protocol = Protocol::Blocked;
    assert!(matches!(
        unsolved_advancement(&[blocked]),
        Err(MetricError::ProtocolMismatch(_))
    ));
}

#[test]
fn trie_isolation_and_divergence() {
    use Action::*;
    let seqs = vec![vec![Up, Up, Right], vec![Up, Up, Left], vec![Up, Down]];
    let trie = PrefixTrie::build(&seqs).unwrap();
    assert_eq!(trie.isolation_depths(), vec![Some(3), Some(3), Some(2)]);
    let curve = divergence_curve(&trie, 3);
    assert_eq!(curve, vec![0.0, 1.0 / 3.0, 1.0]);
    assert_eq!(trie.count(&[Edge::Step(Up), Edge::Step(Up)]), 2);
    assert!(trie.is_consistent());

    // A finished sequence that prefixes a longer one separates on its end marker.
    let t = PrefixTrie::build(&[vec![Up], vec![Up, Up]]).unwrap();
    assert_eq!(t.isolation_depths(), vec![Some(2), Some(2)]);
    // Identical sequences never separate.
    let t = PrefixTrie::build(&[vec![Up], vec![Up]]).unwrap();
    assert_eq!(t.isolation_depths(), vec![None, None]);
    assert!(PrefixTrie::<Action>::build(&Vec::<Vec<Action>>::new()).is_err());
}

#[test]
fn isolation_summary_counts_shared_sequences_as_deepest() {
    let s = isolation_summary(&[Some(3), Some(3), Some(2)], 2);
    assert_eq!((s.participants, s.median, s.unique_by), (3, Some(3.0), 1));
    let s = isolation_summary(&[Some(1), None, Some(4), Some(2)], 5);
    assert_eq!((s.median, s.unique_by), (Some(3.0), 3));
    assert_eq!(isolation_summary(&[Some(1), None, None], 5).median, None);
    assert_eq!(isolation_summary(&[], 5).median, None);
}

proptest! {
    #[test]
    fn trie_counts_are_consistent(seqs in prop::collection::vec(prop::collection::vec(0u8..3, 0..8), 1..20)) {
        let trie = PrefixTrie::build(&seqs).unwrap();
        prop_assert!(trie.is_consistent());
        let curve = divergence_curve(&trie, 10);
        prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        let depths = trie.isolation_depths();
        for (s, d) in seqs.iter().zip(&depths) {
            let dupes = seqs.iter().filter(|o| *o == s).count();
            prop_assert_eq!(d.is_none(), dupes > 1);
            if let Some(d) = d {
                prop_assert!(*d <= s.len() + 1);
            }
        }
    }
}

#[test]
fn discovery_sums_failed_attempts_and_execution_skips_the_first_win() {
    let mut t = base();
    episode(&mut t, 0, 30, L);
    episode(&mut t, 0, 25, L);
    episode(&mut t, 0, 20, W);
    episode(&mut t, 0, 12, W);
    episode(&mut t, 0, 18, W);
    episode(&mut t, 1, 9, W);
    let d = discovery_times(std::slice::from_ref(&t), &Strata::all()).unwrap();
    assert_eq!(d.values, vec![75.0, 9.0]);
    let e = execution_times(&[t], &Strata::all()).unwrap();
    assert_eq!(e.values, vec![12.0, 18.0]);
}

#[test]
fn point_masses_and_symmetric_kde() {
    assert!((log_emd_values(&[10.0], &[100.0]).unwrap() - 10f64.ln()).abs() < 1e-12);
    let grid = log_grid(-2.0, 4.0, 601);
    let k = kde_curve(&sample(&[1.0, 2f64.exp()]), &grid).unwrap();
    // Mirror pairs around log-value 1 sit at indices 300 - i and 300 + i.
    for i in 0..=300 {
        assert!((k.density[300 - i] - k.density[300 + i]).abs() < 1e-12);
    }
}

#[test]
fn kaplan_meier_without_censoring_is_the_empirical_cdf() {
    let steps = [10.0, 20.0, 20.0, 35.0, 50.0];
    let obs: Vec<KmObservation> = steps
        .iter()
        .map(|&s| KmObservation {
            step: s,
            solved: true,
        })
        .collect();
    let km = km_curve(&obs).unwrap();
    for t in [0.0, 5.0, 10.0, 19.0, 20.0, 34.0, 35.0, 49.0, 50.0, 99.0] {
        let ecdf = steps.iter().filter(|&&s| s <= t).count() as f64 / steps.len() as f64;
        assert!((km.solved_at(t) - ecdf).abs() < 1e-12, "t={t}");
    }
    let two = km_curve(&obs[..2]).unwrap();
    assert_eq!(two.solved, vec![0.0, 0.5, 1.0]);
}

#[test]
fn distinct_first_actions_diverge_at_depth_one() {
    use Action::*;
    let t = PrefixTrie::build(&[vec![Up], vec![Down, Down], vec![Left]]).unwrap();
    assert_eq!(divergence_curve(&t, 2), vec![1.0, 1.0]);
    let same = PrefixTrie::build(&[vec![Up, Up], vec![Up, Up]]).unwrap();
    assert_eq!(divergence_curve(&same, 4), vec![0.0; 4]);
}

/// Discovery recomputed straight from step records, without level records.
fn discovery_from_steps(t: &SessionTrace) -> Vec<f64> {
    let mut out = Vec::new();
    let mut done = std::collections::BTreeSet::new();
    let mut spent = std::collections::BTreeMap::<usize, u32>::new();
    for s in &t.steps {
        if done.contains(&s.level) {
            continue;
        }
        *spent.entry(s.level).or_default() += 1;
        if s.status == W {
            done.insert(s.level);
            out.push((s.level, spent[&s.level]));
        }
    }
    out.sort();
    out.into_iter().map(|(_, v)| v as f64).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn summaries_match_raw_steps_and_staircases_climb(
        plan in prop::collection::vec((0usize..9, 1u32..40, any::<bool>()), 1..30)
    ) {
        let mut t = base();
        let mut plan = plan;
        plan.sort_by_key(|p| p.0);
        for (level, len, won) in plan {
            episode(&mut t, level, len, if won { W } else { L });
        }
        let d = discovery_times(std::slice::from_ref(&t), &Strata::all()).unwrap();
        prop_assert_eq!(d.values, discovery_from_steps(&t));

        let grid: Vec<u32> = (0..=t.total_steps()).step_by(7).collect();
        let p = progression_curve(std::slice::from_ref(&t), &grid).unwrap();
        prop_assert!(p.mean.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(p.mean.iter().all(|&m| (0.0..=9.0).contains(&m)));
    }

    #[test]
    fn final_divergence_counts_distinct_sequences(seqs in prop::collection::vec(prop::collection::vec(0u8..2, 0..5), 1..12)) {
        let trie = PrefixTrie::build(&seqs).unwrap();
        let last = *divergence_curve(&trie, 6).last().unwrap();
        let unique = seqs.iter().filter(|s| seqs.iter().filter(|o| o == s).count() == 1).count();
        prop_assert!((last - unique as f64 / seqs.len() as f64).abs() < 1e-12);
    }
}

#[test]
fn first_attempts_take_the_opening_episode_of_each_trace() {
    let mut t = base();
    episode(&mut t, 0, 3, L);
    episode(&mut t, 0, 2, W);
    episode(&mut t, 1, 4, W);
    let mut other = base();
    episode(&mut other, 0, 5, W);
    let seqs = first_attempts(&[t.clone(), other], "corridor", 0);
    assert_eq!(seqs.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 5]);
    assert_eq!(
        first_attempts(std::slice::from_ref(&t), "corridor", 1)[0].len(),
        4
    );
    assert!(first_attempts(std::slice::from_ref(&t), "corridor", 2).is_empty());
    assert!(first_attempts(&[t], "bait", 0).is_empty());
}
