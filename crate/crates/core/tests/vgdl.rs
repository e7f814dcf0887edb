use arena_core::games;
use arena_core::vgdl::*;
use proptest::prelude::*;

#[test]
fn bundled_descriptions_round_trip() {
    for src in games::all_sources() {
        let d = parse_game_description(&src.description).unwrap();
        let printed = print_game_description(&d);
        let again = parse_game_description(&printed).unwrap();
        assert_eq!(d, again, "{}", src.name);
        assert_eq!(printed, print_game_description(&again));
        assert!(validate_bundle(&src).is_empty(), "{}", src.name);
    }
}

#[test]
fn zelda_has_a_shooting_avatar_and_wins_on_doors() {
    let d = parse_game_description(&games::source("zelda").unwrap().description).unwrap();
    assert_eq!(d.avatar().class, SpriteClass::ShootAvatar);
    // Door variants share one counter, so the win fires once every door is open.
    assert!(d.terminations.iter().any(|t| t.outcome == Outcome::Win
        && matches!(&t.kind, TerminationKind::MultiSpriteCounter { types, limit: 0 } if types.iter().any(|n| n == "door"))));
    assert!(d.interactions.iter().any(|r| r.actor == "door"
        && r.effect
            == Effect::KillIfOtherHasMore {
                resource: "key".into(),
                count: 1
            }));
}

#[test]
fn three_by_three_layout() {
    let d = parse_game_description(
        "sprite avatar > MovingAvatar\nmap @ > avatar\nmap w > wall\n\
         terminate > Timeout steps=5 win\nterminate > SpriteCounter type=avatar limit=0 lose\n",
    )
    .unwrap();
    let l = parse_level_layout("www\nw@w\nwww\n", &d).unwrap();
    assert_eq!((l.width, l.height), (3, 3));
    let avatars: Vec<_> = l.placements(&d).filter(|(_, n)| *n == "avatar").collect();
    assert_eq!(avatars, vec![(arena_core::Pos::new(1, 1), "avatar")]);
    assert!(matches!(
        parse_level_layout("www\nw@\n", &d),
        Err(LayoutError::RaggedGrid { .. })
    ));
    assert!(matches!(
        parse_level_layout("@@\n", &d),
        Err(LayoutError::MultipleAvatars { .. })
    ));
}

const CLASSES: [&str; 6] = [
    "Immovable",
    "Passive",
    "Resource ttl=3",
    "RandomNPC cooldown=2",
    "Missile dir=left speed=2",
    "Chaser target=avatar",
];

const EFFECTS: [&str; 6] = [
    "killSprite",
    "killBoth score=2",
    "stepBack",
    "bounceForward",
    "transformTo type=t0 score=-1",
    "scoreChange score=5",
];

prop_compose! {
    fn description()(
        classes in prop::collection::vec(0..CLASSES.len(), 1..6),
        rules in prop::collection::vec((0usize..8, 0usize..8, 0..EFFECTS.len()), 0..10),
        limit in 0u32..3,
        steps in 1u32..500,
    ) -> String {
        let mut names: Vec<String> = (0..classes.len()).map(|i| format!("t{i}")).collect();
        let mut s = String::from("sprite avatar > MovingAvatar\nmap A > avatar\n");
        for (i, c) in classes.iter().enumerate() {
            s += &format!("sprite t{i} > {}\nmap {} > t{i}\n", CLASSES[*c], (b'a' + i as u8) as char);
        }
        names.push("avatar".into());
        names.push("wall".into());
        for (a, p, e) in rules {
            let a = &names[a % names.len()];
            let p = if p == 7 { "EOS" } else { &names[p % names.len()] };
            s += &format!("interact {a} {p} > {}\n", EFFECTS[e]);
        }
        s += &format!("terminate > SpriteCounter type=t0 limit={limit} win\n");
        s += "terminate > SpriteCounter type=avatar limit=0 lose\n";
        s += &format!("terminate > Timeout steps={steps} lose\n");
        s
    }
}

proptest! {
    #[test]
    fn print_then_parse_is_identity(src in description()) {
        let d = parse_game_description(&src).unwrap();
        let again = parse_game_description(&print_game_description(&d)).unwrap();
        prop_assert_eq!(&d, &again);
        prop_assert_eq!(parse_game_description(&src).unwrap(), d);
    }

    #[test]
    fn declaration_order_is_kept(src in description()) {
        let d = parse_game_description(&src).unwrap();
        let declared: Vec<(String, String)> = src
            .lines()
            .filter_map(|l| l.strip_prefix("interact "))
            .map(|l| {
                let mut w = l.split_whitespace();
                (w.next().unwrap().to_string(), w.next().unwrap().to_string())
            })
            .collect();
        let parsed: Vec<(String, String)> = d.interactions.iter().map(|r| (r.actor.clone(), r.patient.clone())).collect();
        prop_assert_eq!(declared, parsed);
        prop_assert_eq!(d.terminations.len(), 3);
        prop_assert_eq!(d.terminations[0].outcome, Outcome::Win);
    }
}

#[test]
fn malformed_corpus_reports_kind_and_location() {
    let corpus = arena_testkit::fixtures::malformed();
    assert!(corpus.len() >= 20);
    for case in corpus {
        assert_eq!(case.check(), Ok(()), "{}", case.name);
    }
}
