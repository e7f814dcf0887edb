use arena_core::Action;
use arena_gateway::*;
use proptest::prelude::*;

fn exchange(obs: &str, action: Action, rationale: Option<&str>) -> [DialogueTurn; 2] {
    [
        DialogueTurn::user(obs),
        DialogueTurn::assistant("", action, rationale.map(str::to_string)),
    ]
}

#[test]
fn empty_history_gives_system_then_observation() {
    let m = build_context(&[], "SYS", "OBS0", RationaleMode::CopiedReasoning).unwrap();
    assert_eq!(
        m,
        vec![
            ChatMessage {
                role: Role::System,
                content: "SYS".into()
            },
            ChatMessage {
                role: Role::User,
                content: "OBS0".into()
            },
        ]
    );
}

#[test]
fn prior_assistant_turn_carries_rationale_only_when_copied() {
    let h = exchange("OBS0", Action::Left, Some("the key is left"));
    let copied = build_context(&h, "SYS", "OBS1", RationaleMode::CopiedReasoning).unwrap();
    let v: serde_json::Value = serde_json::from_str(&copied[2].content).unwrap();
    assert_eq!(v["action"], "left");
    assert_eq!(v["rationale"], "the key is left");
    assert_eq!(copied[2].role, Role::Assistant);

    let bare = build_context(&h, "SYS", "OBS1", RationaleMode::ActionOnly).unwrap();
    assert_eq!(bare[2].content, r#"{"action": "left"}"#);
    assert_eq!(bare.len(), 4);
}

#[test]
fn malformed_histories_are_rejected() {
    let [u, a] = exchange("OBS0", Action::Up, None);
    let mode = RationaleMode::ActionOnly;
    assert!(matches!(
        build_context(std::slice::from_ref(&u), "S", "O", mode),
        Err(GatewayError::MalformedHistory { index: 0, .. })
    ));
    assert!(matches!(
        build_context(&[a.clone(), u.clone()], "S", "O", mode),
        Err(GatewayError::MalformedHistory { index: 0, .. })
    ));
    let mut no_action = a;
    no_action.parsed_action = None;
    assert!(matches!(
        build_context(&[u, no_action], "S", "O", mode),
        Err(GatewayError::MalformedHistory { index: 1, .. })
    ));
}

#[test]
fn reply_parsing_examples() {
    assert_eq!(
        parse_action_reply(r#"{"rationale":"...","action":"left"}"#),
        Ok((Action::Left, Some("...".into())))
    );
    assert_eq!(
        parse_action_reply(r#"Sure! {"action":"ACTION"}"#),
        Ok((Action::Use, None))
    );
    assert_eq!(
        parse_action_reply(r#"{"action":"jump"}"#),
        Err(ReplyError::UnknownActionToken("jump".into()))
    );
    assert_eq!(
        parse_action_reply(r#"{"action": 3}"#),
        Err(ReplyError::UnknownActionToken("3".into()))
    );
}

fn turns() -> impl Strategy<Value = Vec<(String, Action, Option<String>)>> {
    prop::collection::vec(
        (
            "[A-Z ]{1,12}",
            prop::sample::select(Action::ALL.to_vec()),
            prop::option::of("zq[a-z]{4,10}qz"),
        ),
        0..8,
    )
}

proptest! {
    #[test]
    fn each_turn_extends_the_previous_payload(t in turns(), mode in prop::sample::select(vec![RationaleMode::CopiedReasoning, RationaleMode::ActionOnly])) {
        let mut history = Vec::new();
        let mut previous: Option<Vec<ChatMessage>> = None;
        for (obs, action, rationale) in &t {
            let payload = build_context(&history, "SYS", obs, mode).unwrap();
            if let Some(prev) = &previous {
                // Old payload, then the committed reply, then exactly one new user message.
                prop_assert_eq!(payload.len(), prev.len() + 2);
                prop_assert_eq!(&payload[..prev.len()], &prev[..]);
                prop_assert_eq!(payload[prev.len()].role, Role::Assistant);
                prop_assert_eq!(payload.last().unwrap().role, Role::User);
            }
            if mode == RationaleMode::ActionOnly {
                for (_, _, r) in &t {
                    if let Some(r) = r {
                        prop_assert!(payload.iter().all(|m| !m.content.contains(r.as_str())));
                    }
                }
            }
            previous = Some(payload);
            history.extend(exchange(obs, *action, rationale.as_deref()));
        }
    }
}
