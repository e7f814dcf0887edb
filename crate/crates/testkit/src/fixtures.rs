use arena_core::vgdl::{parse_game_description, parse_level_layout, BundleSource};

/// Nine identical corridor levels: ten steps right reach the goal, one step left falls
/// into a pit.
pub fn corridor() -> BundleSource {
    BundleSource {
        name: "corridor".into(),
        description: "\
sprite avatar > MovingAvatar
sprite goal > Immovable
sprite pit > Immovable
map A > avatar
map g > goal
map 0 > pit
interact goal avatar > killSprite score=1
interact avatar pit > killSprite
terminate > SpriteCounter type=avatar limit=0 lose
terminate > SpriteCounter type=goal limit=0 win
"
        .into(),
        levels: vec!["0A.........g\n".to_string(); 9],
    }
}

/// Corridor whose level `i` is `i + 3` cells wide, so a policy can tell levels apart
/// from the grid size alone. Level `i` is won by `i + 1` steps right.
pub fn staircase() -> BundleSource {
    BundleSource {
        name: "staircase".into(),
        levels: (0..9).map(|i| format!("0A{}g\n", ".".repeat(i))).collect(),
        ..corridor()
    }
}

/// What parsing a malformed input must report. Description lines are 1-based, layout
/// rows and columns 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    Description {
        error: &'static str,
        line: Option<usize>,
    },
    Layout {
        error: &'static str,
        row: usize,
        col: usize,
    },
}

#[derive(Debug, Clone)]
pub struct Malformed {
    pub name: &'static str,
    pub description: String,
    /// Parsed under `description` when present.
    pub layout: Option<String>,
    pub expected: Expected,
}

impl Malformed {
    /// Parses the case and compares the error tag and location with `expected`.
    pub fn check(&self) -> Result<(), String> {
        let parsed = parse_game_description(&self.description);
        let (got, at, want, want_at) = match (&self.expected, &self.layout) {
            (Expected::Description { error, line }, None) => {
                let e = parsed.err().ok_or("description parsed")?;
                (
                    tag(&e),
                    format!("{:?}", e.line()),
                    *error,
                    format!("{line:?}"),
                )
            }
            (Expected::Layout { error, row, col }, Some(text)) => {
                let desc = parsed.map_err(|e| format!("base description: {e}"))?;
                let e = parse_level_layout(text, &desc)
                    .err()
                    .ok_or("layout parsed")?;
                (
                    tag(&e),
                    format!("{:?}", e.location()),
                    *error,
                    format!("{:?}", (row, col)),
                )
            }
            _ => return Err("case has no input for its expectation".into()),
        };
        match got == want && at == want_at {
            true => Ok(()),
            false => Err(format!("expected {want} at {want_at}, got {got} at {at}")),
        }
    }
}

fn tag<E: serde::Serialize>(e: &E) -> String {
    serde_json::to_value(e)
        .ok()
        .and_then(|v| v["error"].as_str().map(String::from))
        .unwrap_or_default()
}

/// Valid base for the malformed corpus.
pub const BASE: &str = "\
sprite avatar > MovingAvatar
sprite coin > Resource
sprite bat > RandomNPC
map A > avatar
map c > coin
map b > bat
interact coin avatar > collectResource score=1
interact avatar bat > killSprite
terminate > SpriteCounter type=avatar limit=0 lose
terminate > SpriteCounter type=coin limit=0 win
";

fn replace(line: usize, text: &str) -> String {
    BASE.lines()
        .enumerate()
        .map(|(i, l)| if i + 1 == line { text } else { l })
        .map(|l| format!("{l}\n"))
        .collect()
}

fn insert(line: usize, text: &str) -> String {
    let mut lines: Vec<&str> = BASE.lines().collect();
    lines.insert(line - 1, text);
    lines.iter().map(|l| format!("{l}\n")).collect()
}

fn desc(
    name: &'static str,
    description: String,
    error: &'static str,
    line: Option<usize>,
) -> Malformed {
    Malformed {
        name,
        description,
        layout: None,
        expected: Expected::Description { error, line },
    }
}

fn layout(
    name: &'static str,
    text: &str,
    error: &'static str,
    row: usize,
    col: usize,
) -> Malformed {
    Malformed {
        name,
        description: BASE.to_string(),
        layout: Some(text.to_string()),
        expected: Expected::Layout { error, row, col },
    }
}

/// Twenty-three malformed descriptions and layouts with the error each must produce.
pub fn malformed() -> Vec<Malformed> {
    vec![
        desc(
            "unknown class",
            replace(3, "sprite bat > Bat"),
            "UnknownSpriteClass",
            Some(3),
        ),
        desc(
            "undefined actor",
            replace(8, "interact avatar ghost > killSprite"),
            "UndefinedTypeReference",
            Some(8),
        ),
        desc(
            "undefined transform target",
            replace(8, "interact avatar bat > transformTo type=ghost"),
            "UndefinedTypeReference",
            Some(8),
        ),
        desc(
            "undefined map target",
            replace(6, "map b > ghost"),
            "UndefinedTypeReference",
            Some(6),
        ),
        desc(
            "undefined counter type",
            replace(10, "terminate > SpriteCounter type=gem limit=0 win"),
            "UndefinedTypeReference",
            Some(10),
        ),
        desc(
            "undefined chase target",
            replace(3, "sprite bat > Chaser target=ghost"),
            "UndefinedTypeReference",
            Some(3),
        ),
        desc(
            "duplicate type",
            replace(3, "sprite coin > RandomNPC"),
            "DuplicateTypeName",
            Some(3),
        ),
        desc(
            "duplicate map char",
            replace(6, "map c > bat"),
            "DuplicateMappingChar",
            Some(6),
        ),
        desc(
            "unknown keyword",
            replace(3, "spirit bat > RandomNPC"),
            "MalformedLine",
            Some(3),
        ),
        desc(
            "missing arrow",
            replace(4, "map A avatar"),
            "MalformedLine",
            Some(4),
        ),
        desc(
            "long map key",
            replace(4, "map AA > avatar"),
            "MalformedLine",
            Some(4),
        ),
        desc(
            "unknown effect",
            replace(8, "interact avatar bat > explode"),
            "MalformedLine",
            Some(8),
        ),
        desc(
            "non-numeric cooldown",
            replace(3, "sprite bat > RandomNPC cooldown=fast"),
            "InvalidParam",
            Some(3),
        ),
        desc(
            "probability above one",
            replace(3, "sprite bat > SpawnPoint spawn=coin prob=1.5"),
            "InvalidParam",
            Some(3),
        ),
        desc(
            "bare token in parameters",
            replace(9, "terminate > SpriteCounter type=avatar limit lose"),
            "MalformedLine",
            Some(9),
        ),
        desc(
            "no avatar class",
            replace(1, "sprite avatar > Immovable"),
            "NoAvatarType",
            None,
        ),
        desc(
            "second avatar class",
            insert(2, "sprite hero > MovingAvatar"),
            "MultipleAvatarTypes",
            Some(2),
        ),
        desc(
            "no win rule",
            replace(10, "# no win"),
            "MissingOutcome",
            None,
        ),
        layout("ragged row", "A.c\n..\n", "RaggedGrid", 1, 0),
        layout("unknown character", "A.c\n.x.\n", "UnknownLayoutChar", 1, 1),
        layout("no avatar", "..c\n", "NoAvatar", 0, 0),
        layout("two avatars", "A.c\n..A\n", "MultipleAvatars", 1, 2),
        layout("empty", "", "Empty", 0, 0),
    ]
}
