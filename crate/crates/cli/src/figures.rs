//! Shipped scenarios behind the `fig2` to `fig5` commands.

use crate::scenario::{parse_scenario, Scenario, ScenarioError};

pub const FIG2: &str = include_str!("../../../scenarios/fig2.toml");
pub const FIG3B: &str = include_str!("../../../scenarios/fig3b.toml");
pub const FIG3C: &str = include_str!("../../../scenarios/fig3c.toml");
pub const FIG4: &str = include_str!("../../../scenarios/fig4.toml");
pub const FIG5: &str = include_str!("../../../scenarios/fig5.toml");

/// Scenario texts of a figure command, `None` for an unknown figure.
pub fn sources(figure: &str) -> Option<&'static [&'static str]> {
    match figure {
        "fig2" => Some(&[FIG2]),
        "fig3" => Some(&[FIG3B, FIG3C]),
        "fig4" => Some(&[FIG4]),
        "fig5" => Some(&[FIG5]),
        _ => None,
    }
}

pub fn scenarios(figure: &str) -> Option<Result<Vec<Scenario>, ScenarioError>> {
    sources(figure).map(|s| s.iter().map(|t| parse_scenario(t)).collect())
}
