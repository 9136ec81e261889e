//! Factors, levels and the pair of graphs that make up a design.
//!
//! A [`Design`] holds a factor graph (factors joined by nesting, allotment
//! and measurement edges) and a level graph (levels joined by the concrete
//! relationships those edges imply). Treatment levels are only linked to
//! unit levels once assignment has run.

mod graph;
mod validate;

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

pub use graph::{
    Factor, FactorEdge, FactorEdgeKind, FactorGraph, FactorId, Level, LevelEdge, LevelGraph,
    LevelId, Role,
};
pub use validate::{Rule, Violation};

/// A treatment factor (or a crossed combination of several) applied to a unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allotment {
    /// More than one source means the sources are crossed.
    pub sources: Vec<FactorId>,
    pub target: FactorId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Order {
    Random,
    Systematic,
}

impl Order {
    pub fn as_str(self) -> &'static str {
        match self {
            Order::Random => "random",
            Order::Systematic => "systematic",
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How treatment levels are assigned: one order per allotment, or a single
/// order shared by every allotment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentSpec {
    pub orders: Vec<Order>,
    pub seed: u64,
}

impl AssignmentSpec {
    pub fn new(orders: Vec<Order>, seed: u64) -> Self {
        AssignmentSpec { orders, seed }
    }

    pub fn random(seed: u64) -> Self {
        AssignmentSpec::new(vec![Order::Random], seed)
    }

    pub fn systematic() -> Self {
        AssignmentSpec::new(vec![Order::Systematic], 0)
    }

    pub fn is_valid_for(&self, allotments: usize) -> bool {
        self.orders.len() == 1 || self.orders.len() == allotments
    }

    /// Order used for the allotment at `index`.
    pub fn order_for(&self, index: usize) -> Order {
        if self.orders.len() == 1 {
            self.orders[0]
        } else {
            self.orders.get(index).copied().unwrap_or(Order::Random)
        }
    }
}

/// Roles a unit picks up from its relationships with other factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ImplicitRole {
    ExperimentalUnit,
    ObservationalUnit,
    NestedUnit,
}

impl ImplicitRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ImplicitRole::ExperimentalUnit => "experimental unit",
            ImplicitRole::ObservationalUnit => "observational unit",
            ImplicitRole::NestedUnit => "nested unit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("unknown factor id {0}")]
    UnknownFactor(usize),
    #[error("factor `{name}` is a {role}, not a unit")]
    NotAUnit { name: String, role: Role },
}

/// The working design object. Built up progressively by the verbs in
/// [`crate::engine`]; the low-level mutators here perform no checking.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Design {
    title: Option<String>,
    factor_graph: FactorGraph,
    level_graph: LevelGraph,
    allotments: Vec<Allotment>,
    assignment: Option<AssignmentSpec>,
    seed: Option<u64>,
}

impl Design {
    pub fn new(title: Option<&str>) -> Self {
        Design {
            title: title.map(str::to_owned),
            ..Design::default()
        }
    }

    pub fn title(&self) -> Option<&str> {
        self.title.as_deref()
    }

    pub fn factor_graph(&self) -> &FactorGraph {
        &self.factor_graph
    }

    pub fn level_graph(&self) -> &LevelGraph {
        &self.level_graph
    }

    pub fn allotments(&self) -> &[Allotment] {
        &self.allotments
    }

    pub fn assignment(&self) -> Option<&AssignmentSpec> {
        self.assignment.as_ref()
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn factor_count(&self) -> usize {
        self.factor_graph.len()
    }

    pub fn factor(&self, id: FactorId) -> Option<&Factor> {
        self.factor_graph.factor(id)
    }

    pub fn factor_by_name(&self, name: &str) -> Option<&Factor> {
        self.factor_graph.by_name(name)
    }

    pub fn level(&self, id: LevelId) -> Option<&Level> {
        self.level_graph.level(id)
    }

    pub fn add_factor(&mut self, name: impl Into<String>, role: Role) -> FactorId {
        self.factor_graph.add_factor(name, role)
    }

    /// Adds a level to `factor`, keeping its level count in step.
    pub fn add_level(&mut self, factor: FactorId, label: impl Into<String>) -> LevelId {
        let id = self.level_graph.add_level(factor, label);
        if let Some(f) = self.factor_graph.factor_mut(factor) {
            f.level_count += 1;
        }
        id
    }

    pub fn add_factor_edge(&mut self, from: FactorId, to: FactorId, kind: FactorEdgeKind) {
        self.factor_graph.add_edge(from, to, kind);
    }

    pub fn add_level_edge(&mut self, from: LevelId, to: LevelId) {
        self.level_graph.add_edge(from, to);
    }

    pub fn push_allotment(&mut self, allotment: Allotment) {
        self.allotments.push(allotment);
    }

    pub(crate) fn level_graph_mut(&mut self) -> &mut LevelGraph {
        &mut self.level_graph
    }

    pub(crate) fn set_assignment(&mut self, spec: AssignmentSpec) {
        self.seed = Some(spec.seed);
        self.assignment = Some(spec);
    }

    pub(crate) fn forget_assignment(&mut self) {
        self.seed = None;
        self.assignment = None;
    }

    /// Implicit roles of a unit, derived from the edges that target it.
    pub fn implicit_role(&self, factor: FactorId) -> Result<BTreeSet<ImplicitRole>, ModelError> {
        let f = self
            .factor(factor)
            .ok_or(ModelError::UnknownFactor(factor.0))?;
        if f.role != Role::Unit {
            return Err(ModelError::NotAUnit {
                name: f.name.clone(),
                role: f.role,
            });
        }
        let mut tags = BTreeSet::new();
        for edge in self.factor_graph.edges() {
            match edge.kind {
                FactorEdgeKind::AllottedTo if edge.to == factor => {
                    tags.insert(ImplicitRole::ExperimentalUnit);
                }
                FactorEdgeKind::MeasuredOn if edge.to == factor => {
                    tags.insert(ImplicitRole::ObservationalUnit);
                }
                FactorEdgeKind::NestedIn if edge.from == factor => {
                    tags.insert(ImplicitRole::NestedUnit);
                }
                _ => {}
            }
        }
        Ok(tags)
    }

    /// Checks every structural invariant. An empty list means the design is
    /// well formed; it does not mean it can be served.
    pub fn validate(&self) -> Vec<Violation> {
        validate::validate(self)
    }

    /// `"factor:label"` for diagnostics.
    pub fn qualified_label(&self, level: LevelId) -> String {
        match self.level(level) {
            Some(l) => {
                let factor = self
                    .factor(l.factor)
                    .map(|f| f.name.as_str())
                    .unwrap_or("?");
                format!("{factor}:{}", l.label)
            }
            None => format!("?:#{}", level.0),
        }
    }
}
