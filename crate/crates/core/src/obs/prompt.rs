use serde::{Deserialize, Serialize};

use crate::action::Action;
use crate::vgdl::{print_with_names, GameDescription, EOS};

use super::ColorMap;

/// Version of the prompt templates below. Stored in trace headers.
pub const PROMPT_VERSION: &str = "1";

/// How much prior knowledge the system prompt carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SuggestionLevel {
    #[default]
    Minimal,
    Elaborate,
    Oracle,
}

impl std::str::FromStr for SuggestionLevel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "minimal" => Ok(SuggestionLevel::Minimal),
            "elaborate" => Ok(SuggestionLevel::Elaborate),
            "oracle" => Ok(SuggestionLevel::Oracle),
            _ => Err(format!("unknown suggestion level `{s}`")),
        }
    }
}

const INTRO: &str = "\
You are playing a game on a two-dimensional grid. Every turn you receive an observation \
listing the objects on the grid by color and position, written (x,y) with x the column \
and y the row, counted from the top left. The observation also shows the step count, \
your score and your inventory.
";

const PRIMER: &str = "
How these games work:
- You control exactly one of the colored objects. Moving tells you which one.
- Objects of other colors can block you, disappear, change color, move on their own, \
end up in your inventory, or end the trial when touched.
- A trial ends in a win or a loss. The level then restarts, and the first observation of \
the new trial reports how the previous one ended.
- Explore to find out what each color does, then use what you learned to win quickly.
";

fn response_block() -> String {
    let tokens: Vec<&str> = Action::ALL.iter().map(|a| a.token()).collect();
    format!(
        "
Actions: {}. `action` uses your special ability if you have one; `wait` does nothing.

Respond with exactly one JSON object: {{\"action\": \"<one of the actions>\"}}
",
        tokens.join(", ")
    )
}

/// Renders the system prompt for a suggestion level. `minimal` holds the task framing,
/// action space and response format; `elaborate` adds a mechanics primer; `oracle` adds
/// the game's rules with every type written as its color.
pub fn render_system_prompt(
    level: SuggestionLevel,
    description: &GameDescription,
    cmap: &ColorMap,
) -> String {
    let mut out = String::from(INTRO);
    if level != SuggestionLevel::Minimal {
        out.push_str(PRIMER);
    }
    if level == SuggestionLevel::Oracle {
        let rename = |n: &str| {
            if n == EOS {
                "EDGE".to_string()
            } else {
                cmap.color(n).unwrap_or("?").to_string()
            }
        };
        out.push_str(
            "\nGame rules (each object is named by its color, EDGE is the grid border):\n",
        );
        out.push_str(&print_with_names(description, &rename, false));
    }
    out.push_str(&response_block());
    out
}
