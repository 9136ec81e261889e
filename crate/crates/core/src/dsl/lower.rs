use super::ast::DesignSpec;
use crate::engine::{Command, EngineError};
use crate::model::{AssignmentSpec, Design};

/// Turns a parsed spec into verb commands: units, treatments, records,
/// allotments, then assignment. Empty verbs are skipped, and a missing seed
/// becomes 0.
pub fn lower(spec: &DesignSpec) -> Vec<Command> {
    let mut commands = Vec::new();
    if !spec.unit_decls.is_empty() {
        commands.push(Command::SetUnits(spec.unit_decls.clone()));
    }
    if !spec.trt_decls.is_empty() {
        commands.push(Command::SetTrts(spec.trt_decls.clone()));
    }
    if !spec.rcrd_decls.is_empty() {
        commands.push(Command::SetRcrds(spec.rcrd_decls.clone()));
    }
    if !spec.allot_decls.is_empty() {
        commands.push(Command::AllotTrts(spec.allot_decls.clone()));
    }
    if let Some(assign) = &spec.assign_decl {
        commands.push(Command::AssignTrts(AssignmentSpec::new(
            assign.orders.clone(),
            assign.seed.unwrap_or(0),
        )));
    }
    commands
}

/// Builds the design a spec describes by replaying its commands on a fresh
/// design.
pub fn build(spec: &DesignSpec) -> Result<Design, EngineError> {
    crate::engine::replay(spec.title.as_deref(), &lower(spec))
}
