pub mod classical;
pub mod compare;
pub mod dynamics;
pub mod qae;
pub mod reliability;
pub mod selftest;

use clap::ValueEnum;

use crate::error::CliResult;
use crate::output::{CommandOutput, RunContext};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CommandKind {
    Dynamics,
    Qae,
    Classical,
    Compare,
    Reliability,
    Selftest,
}

pub fn run(kind: CommandKind, ctx: &RunContext) -> CliResult<CommandOutput> {
    match kind {
        CommandKind::Dynamics => dynamics::run(ctx),
        CommandKind::Qae => qae::run(ctx),
        CommandKind::Classical => classical::run(ctx),
        CommandKind::Compare => compare::run(ctx),
        CommandKind::Reliability => reliability::run(ctx),
        CommandKind::Selftest => selftest::run(ctx),
    }
}
