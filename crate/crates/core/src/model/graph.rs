use std::collections::HashMap;
use std::fmt;

/// Explicit role of a factor.
///
/// Blocks, plots, subjects and runs are all units; responses and
/// uncontrolled traits are records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Treatment,
    Unit,
    Record,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Treatment => "treatment",
            Role::Unit => "unit",
            Role::Record => "record",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FactorId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Factor {
    pub id: FactorId,
    pub name: String,
    pub role: Role,
    /// Number of levels this factor owns across the whole design.
    pub level_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    pub id: LevelId,
    pub factor: FactorId,
    pub label: String,
    /// 1-based position within the owning factor.
    pub ordinal: usize,
}

/// Relationship stored on a factor edge. Edges always run from the dependent
/// factor to the unit it relates to: `plot -> patch`, `fertilizer -> plot`,
/// `yield -> plot`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FactorEdgeKind {
    NestedIn,
    AllottedTo,
    MeasuredOn,
}

impl FactorEdgeKind {
    /// Required (from, to) roles.
    pub fn endpoint_roles(self) -> (Role, Role) {
        match self {
            FactorEdgeKind::NestedIn => (Role::Unit, Role::Unit),
            FactorEdgeKind::AllottedTo => (Role::Treatment, Role::Unit),
            FactorEdgeKind::MeasuredOn => (Role::Record, Role::Unit),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FactorEdgeKind::NestedIn => "nested_in",
            FactorEdgeKind::AllottedTo => "allotted_to",
            FactorEdgeKind::MeasuredOn => "measured_on",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FactorEdge {
    pub from: FactorId,
    pub to: FactorId,
    pub kind: FactorEdgeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LevelEdge {
    pub from: LevelId,
    pub to: LevelId,
}

/// High-level graph: factors and their relationships.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FactorGraph {
    factors: Vec<Factor>,
    edges: Vec<FactorEdge>,
}

impl FactorGraph {
    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn edges(&self) -> &[FactorEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn factor(&self, id: FactorId) -> Option<&Factor> {
        self.factors.get(id.0)
    }

    pub(crate) fn factor_mut(&mut self, id: FactorId) -> Option<&mut Factor> {
        self.factors.get_mut(id.0)
    }

    pub fn by_name(&self, name: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.name == name)
    }

    /// Factors with the given role, in declaration order.
    pub fn with_role(&self, role: Role) -> impl Iterator<Item = &Factor> + '_ {
        self.factors.iter().filter(move |f| f.role == role)
    }

    pub fn add_factor(&mut self, name: impl Into<String>, role: Role) -> FactorId {
        let id = FactorId(self.factors.len());
        self.factors.push(Factor {
            id,
            name: name.into(),
            role,
            level_count: 0,
        });
        id
    }

    /// Appends an edge without any role or cycle checks; see `Design::validate`.
    pub fn add_edge(&mut self, from: FactorId, to: FactorId, kind: FactorEdgeKind) {
        self.edges.push(FactorEdge { from, to, kind });
    }

    pub fn edges_of_kind(&self, kind: FactorEdgeKind) -> impl Iterator<Item = &FactorEdge> + '_ {
        self.edges.iter().filter(move |e| e.kind == kind)
    }

    /// First nesting parent of `unit`, if any.
    pub fn nesting_parent(&self, unit: FactorId) -> Option<FactorId> {
        self.edges_of_kind(FactorEdgeKind::NestedIn)
            .find(|e| e.from == unit)
            .map(|e| e.to)
    }

    pub fn nesting_children(&self, unit: FactorId) -> Vec<FactorId> {
        self.edges_of_kind(FactorEdgeKind::NestedIn)
            .filter(|e| e.to == unit)
            .map(|e| e.from)
            .collect()
    }

    /// Nesting chain from the outermost ancestor down to `unit` inclusive.
    /// Stops if a cycle is detected.
    pub fn nesting_chain(&self, unit: FactorId) -> Vec<FactorId> {
        let mut chain = vec![unit];
        let mut current = unit;
        while let Some(parent) = self.nesting_parent(current) {
            if chain.contains(&parent) {
                break;
            }
            chain.push(parent);
            current = parent;
        }
        chain.reverse();
        chain
    }

    /// Topological order of factor ids, or `None` if the graph has a cycle
    /// (self-loops included). Edges pointing outside the graph are ignored.
    pub fn topological_order(&self) -> Option<Vec<FactorId>> {
        let pairs = self.edges.iter().map(|e| (e.from.0, e.to.0));
        kahn(self.factors.len(), pairs).map(|order| order.into_iter().map(FactorId).collect())
    }
}

/// Low-level graph: levels and their relationships.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LevelGraph {
    levels: Vec<Level>,
    edges: Vec<LevelEdge>,
}

impl LevelGraph {
    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn edges(&self) -> &[LevelEdge] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, id: LevelId) -> Option<&Level> {
        self.levels.get(id.0)
    }

    /// Levels of one factor in ordinal order.
    pub fn levels_of(&self, factor: FactorId) -> impl Iterator<Item = &Level> + '_ {
        self.levels.iter().filter(move |l| l.factor == factor)
    }

    pub fn level_ids_of(&self, factor: FactorId) -> Vec<LevelId> {
        self.levels_of(factor).map(|l| l.id).collect()
    }

    /// Appends a level with the next ordinal for `factor`. Callers are
    /// responsible for keeping `Factor::level_count` in step.
    pub fn add_level(&mut self, factor: FactorId, label: impl Into<String>) -> LevelId {
        let id = LevelId(self.levels.len());
        let ordinal = self.levels_of(factor).count() + 1;
        self.levels.push(Level {
            id,
            factor,
            label: label.into(),
            ordinal,
        });
        id
    }

    pub fn add_edge(&mut self, from: LevelId, to: LevelId) {
        self.edges.push(LevelEdge { from, to });
    }

    pub(crate) fn retain_edges(&mut self, keep: impl FnMut(&LevelEdge) -> bool) {
        self.edges.retain(keep);
    }

    /// Outgoing edge targets per level.
    pub fn successors(&self) -> HashMap<LevelId, Vec<LevelId>> {
        let mut out: HashMap<LevelId, Vec<LevelId>> = HashMap::new();
        for e in &self.edges {
            out.entry(e.from).or_default().push(e.to);
        }
        out
    }

    /// Incoming edge sources per level.
    pub fn predecessors(&self) -> HashMap<LevelId, Vec<LevelId>> {
        let mut out: HashMap<LevelId, Vec<LevelId>> = HashMap::new();
        for e in &self.edges {
            out.entry(e.to).or_default().push(e.from);
        }
        out
    }

    pub fn topological_order(&self) -> Option<Vec<LevelId>> {
        let pairs = self.edges.iter().map(|e| (e.from.0, e.to.0));
        kahn(self.levels.len(), pairs).map(|order| order.into_iter().map(LevelId).collect())
    }
}

fn kahn(n: usize, edges: impl Iterator<Item = (usize, usize)>) -> Option<Vec<usize>> {
    let mut indegree = vec![0usize; n];
    let mut adjacency = vec![Vec::new(); n];
    for (from, to) in edges {
        if from >= n || to >= n {
            continue;
        }
        adjacency[from].push(to);
        indegree[to] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(node) = ready.pop() {
        order.push(node);
        for &next in &adjacency[node] {
            indegree[next] -= 1;
            if indegree[next] == 0 {
                ready.push(next);
            }
        }
    }
    (order.len() == n).then_some(order)
}
