use std::collections::{HashMap, HashSet};
use std::fmt;

use super::{Design, FactorEdgeKind, FactorId, LevelId, Role};

/// Which structural rule a [`Violation`] breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    EmptyName,
    DuplicateName,
    LevelCount,
    RecordWithLevels,
    NoLevels,
    DuplicateLabel,
    DuplicateOrdinal,
    DanglingReference,
    RolePairing,
    FactorCycle,
    MultipleNestingParents,
    LevelCycle,
    LevelEdgeWithoutFactorEdge,
    NestingParentLevel,
    AllotmentRole,
    AllotmentWithoutEdge,
    EmptyAllotment,
    ReusedSource,
    PrematureAssignment,
    OrderCount,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::EmptyName => "empty-name",
            Rule::DuplicateName => "duplicate-name",
            Rule::LevelCount => "level-count",
            Rule::RecordWithLevels => "record-with-levels",
            Rule::NoLevels => "no-levels",
            Rule::DuplicateLabel => "duplicate-label",
            Rule::DuplicateOrdinal => "duplicate-ordinal",
            Rule::DanglingReference => "dangling-reference",
            Rule::RolePairing => "role-pairing",
            Rule::FactorCycle => "factor-cycle",
            Rule::MultipleNestingParents => "multiple-nesting-parents",
            Rule::LevelCycle => "level-cycle",
            Rule::LevelEdgeWithoutFactorEdge => "level-edge-without-factor-edge",
            Rule::NestingParentLevel => "nesting-parent-level",
            Rule::AllotmentRole => "allotment-role",
            Rule::AllotmentWithoutEdge => "allotment-without-edge",
            Rule::EmptyAllotment => "empty-allotment",
            Rule::ReusedSource => "reused-source",
            Rule::PrematureAssignment => "premature-assignment",
            Rule::OrderCount => "order-count",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.rule.as_str(), self.message)
    }
}

struct Collector<'a> {
    design: &'a Design,
    out: Vec<Violation>,
}

impl<'a> Collector<'a> {
    fn push(&mut self, rule: Rule, message: String) {
        self.out.push(Violation { rule, message });
    }

    fn name(&self, id: FactorId) -> String {
        self.design
            .factor(id)
            .map(|f| format!("`{}`", f.name))
            .unwrap_or_else(|| format!("#{}", id.0))
    }

    fn label(&self, id: LevelId) -> String {
        self.design.qualified_label(id)
    }
}

pub(super) fn validate(design: &Design) -> Vec<Violation> {
    let mut c = Collector {
        design,
        out: Vec::new(),
    };
    factors(&mut c);
    levels(&mut c);
    factor_edges(&mut c);
    level_edges(&mut c);
    allotments(&mut c);
    c.out
}

fn factors(c: &mut Collector<'_>) {
    let fg = c.design.factor_graph();
    let lg = c.design.level_graph();
    let mut seen: HashSet<&str> = HashSet::new();
    let mut owned: HashMap<FactorId, usize> = HashMap::new();
    for level in lg.levels() {
        *owned.entry(level.factor).or_default() += 1;
    }
    for f in fg.factors() {
        if f.name.is_empty() {
            c.push(
                Rule::EmptyName,
                format!("factor #{} has an empty name", f.id.0),
            );
        }
        if !seen.insert(f.name.as_str()) {
            c.push(
                Rule::DuplicateName,
                format!("factor name `{}` is used more than once", f.name),
            );
        }
        let actual = owned.get(&f.id).copied().unwrap_or(0);
        if actual != f.level_count {
            c.push(
                Rule::LevelCount,
                format!(
                    "factor `{}` records {} levels but owns {}",
                    f.name, f.level_count, actual
                ),
            );
        }
        match f.role {
            Role::Record if actual > 0 => c.push(
                Rule::RecordWithLevels,
                format!("record `{}` owns {} levels", f.name, actual),
            ),
            Role::Unit | Role::Treatment if actual == 0 => c.push(
                Rule::NoLevels,
                format!("{} `{}` has no levels", f.role, f.name),
            ),
            _ => {}
        }
    }
}

fn levels(c: &mut Collector<'_>) {
    let lg = c.design.level_graph();
    let mut labels: HashSet<(FactorId, &str)> = HashSet::new();
    let mut ordinals: HashSet<(FactorId, usize)> = HashSet::new();
    for level in lg.levels() {
        if c.design.factor(level.factor).is_none() {
            c.push(
                Rule::DanglingReference,
                format!(
                    "level `{}` belongs to unknown factor #{}",
                    level.label, level.factor.0
                ),
            );
            continue;
        }
        if !labels.insert((level.factor, level.label.as_str())) {
            let msg = format!("label repeated within factor: {}", c.label(level.id));
            c.push(Rule::DuplicateLabel, msg);
        }
        if !ordinals.insert((level.factor, level.ordinal)) {
            let msg = format!(
                "ordinal {} repeated within factor {}",
                level.ordinal,
                c.name(level.factor)
            );
            c.push(Rule::DuplicateOrdinal, msg);
        }
    }
}

fn factor_edges(c: &mut Collector<'_>) {
    let fg = c.design.factor_graph();
    let mut parents: HashMap<FactorId, usize> = HashMap::new();
    for edge in fg.edges() {
        let (from, to) = match (fg.factor(edge.from), fg.factor(edge.to)) {
            (Some(from), Some(to)) => (from, to),
            _ => {
                c.push(
                    Rule::DanglingReference,
                    format!(
                        "{} edge #{} -> #{} references an unknown factor",
                        edge.kind.as_str(),
                        edge.from.0,
                        edge.to.0
                    ),
                );
                continue;
            }
        };
        let (want_from, want_to) = edge.kind.endpoint_roles();
        if from.role != want_from || to.role != want_to {
            c.push(
                Rule::RolePairing,
                format!(
                    "{} edge `{}` -> `{}` joins a {} to a {}; expected {} -> {}",
                    edge.kind.as_str(),
                    from.name,
                    to.name,
                    from.role,
                    to.role,
                    want_from,
                    want_to
                ),
            );
        }
        if edge.kind == FactorEdgeKind::NestedIn {
            *parents.entry(edge.from).or_default() += 1;
        }
    }
    if fg.topological_order().is_none() {
        let cyclic: Vec<String> = fg
            .edges()
            .iter()
            .filter(|e| e.from == e.to)
            .map(|e| c.name(e.from))
            .collect();
        let detail = if cyclic.is_empty() {
            String::new()
        } else {
            format!(" (self-loop on {})", cyclic.join(", "))
        };
        c.push(
            Rule::FactorCycle,
            format!("factor graph has a cycle{detail}"),
        );
    }
    let mut multi: Vec<_> = parents.into_iter().filter(|&(_, n)| n > 1).collect();
    multi.sort();
    for (id, n) in multi {
        let msg = format!("unit {} is nested in {} parents", c.name(id), n);
        c.push(Rule::MultipleNestingParents, msg);
    }
}

fn level_edges(c: &mut Collector<'_>) {
    let design = c.design;
    let fg = design.factor_graph();
    let lg = design.level_graph();
    let factor_pairs: HashSet<(FactorId, FactorId)> =
        fg.edges().iter().map(|e| (e.from, e.to)).collect();

    for edge in lg.edges() {
        let (from, to) = match (lg.level(edge.from), lg.level(edge.to)) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                c.push(
                    Rule::DanglingReference,
                    format!(
                        "level edge #{} -> #{} references an unknown level",
                        edge.from.0, edge.to.0
                    ),
                );
                continue;
            }
        };
        if !factor_pairs.contains(&(from.factor, to.factor)) {
            let msg = format!(
                "level edge {} -> {} has no matching factor edge",
                c.label(from.id),
                c.label(to.id)
            );
            c.push(Rule::LevelEdgeWithoutFactorEdge, msg);
        }
    }
    if lg.topological_order().is_none() {
        c.push(Rule::LevelCycle, "level graph has a cycle".to_owned());
    }

    // each level of a nested unit has exactly one edge to a level of its parent
    let successors = lg.successors();
    for edge in fg.edges_of_kind(FactorEdgeKind::NestedIn) {
        if fg.factor(edge.from).is_none() || fg.factor(edge.to).is_none() {
            continue;
        }
        for level in lg.levels_of(edge.from) {
            let n = successors
                .get(&level.id)
                .map(|targets| {
                    targets
                        .iter()
                        .filter(|t| lg.level(**t).is_some_and(|l| l.factor == edge.to))
                        .count()
                })
                .unwrap_or(0);
            if n != 1 {
                let msg = format!(
                    "level {} has {} parent levels in {}; expected exactly 1",
                    c.label(level.id),
                    n,
                    c.name(edge.to)
                );
                c.push(Rule::NestingParentLevel, msg);
            }
        }
    }

    if design.assignment().is_none() {
        for edge in lg.edges() {
            let from_trt = lg
                .level(edge.from)
                .and_then(|l| fg.factor(l.factor))
                .is_some_and(|f| f.role == Role::Treatment);
            if from_trt {
                let msg = format!(
                    "treatment level {} is linked to {} before assignment",
                    c.label(edge.from),
                    c.label(edge.to)
                );
                c.push(Rule::PrematureAssignment, msg);
            }
        }
    }
}

fn allotments(c: &mut Collector<'_>) {
    let design = c.design;
    let fg = design.factor_graph();
    let mut used: HashSet<FactorId> = HashSet::new();
    for (i, allotment) in design.allotments().iter().enumerate() {
        if allotment.sources.is_empty() {
            c.push(
                Rule::EmptyAllotment,
                format!("allotment #{} has no sources", i + 1),
            );
        }
        match fg.factor(allotment.target) {
            None => c.push(
                Rule::DanglingReference,
                format!(
                    "allotment #{} targets unknown factor #{}",
                    i + 1,
                    allotment.target.0
                ),
            ),
            Some(t) if t.role != Role::Unit => c.push(
                Rule::AllotmentRole,
                format!(
                    "allotment #{} targets {} `{}`, not a unit",
                    i + 1,
                    t.role,
                    t.name
                ),
            ),
            _ => {}
        }
        for &source in &allotment.sources {
            let Some(s) = fg.factor(source) else {
                c.push(
                    Rule::DanglingReference,
                    format!("allotment #{} uses unknown factor #{}", i + 1, source.0),
                );
                continue;
            };
            if s.role != Role::Treatment {
                c.push(
                    Rule::AllotmentRole,
                    format!(
                        "allotment #{} allots {} `{}`, not a treatment",
                        i + 1,
                        s.role,
                        s.name
                    ),
                );
            }
            if !used.insert(source) {
                c.push(
                    Rule::ReusedSource,
                    format!("treatment `{}` is allotted more than once", s.name),
                );
            }
            let has_edge = fg.edges().iter().any(|e| {
                e.kind == FactorEdgeKind::AllottedTo && e.from == source && e.to == allotment.target
            });
            if !has_edge {
                let msg = format!(
                    "allotment of `{}` to {} has no allotted_to edge",
                    s.name,
                    c.name(allotment.target)
                );
                c.push(Rule::AllotmentWithoutEdge, msg);
            }
        }
    }
    if let Some(spec) = design.assignment() {
        if !spec.is_valid_for(design.allotments().len()) {
            c.push(
                Rule::OrderCount,
                format!(
                    "{} orders given for {} allotments",
                    spec.orders.len(),
                    design.allotments().len()
                ),
            );
        }
    }
}
