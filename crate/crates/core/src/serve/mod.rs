//! Converting the graph form into the design table, plus CSV and DOT export.

mod csv;
mod dot;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

use crate::model::{
    Design, Factor, FactorEdgeKind, FactorId, ImplicitRole, LevelId, Role, Violation,
};

pub use self::csv::to_csv;
pub use self::dot::{factor_graph_dot, level_graph_dot};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub name: String,
    pub role: Role,
    pub implicit: BTreeSet<ImplicitRole>,
}

/// The served design: one row per level of the innermost unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesignTable {
    pub title: Option<String>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<String>>,
}

impl DesignTable {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// All cells of one column, in row order.
    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let idx = self.column_index(name)?;
        Some(self.rows.iter().map(|r| r[idx].as_str()).collect())
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }
}

/// Why a design could not be served. `unlinked` lists every level (as
/// `factor:label`) that cannot be tied to a row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unservable {
    pub serving_unit: Option<String>,
    pub reasons: Vec<String>,
    pub unlinked: Vec<String>,
}

impl fmt::Display for Unservable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "design cannot be served: {}", self.reasons.join("; "))?;
        if !self.unlinked.is_empty() {
            const SHOWN: usize = 20;
            let head: Vec<&str> = self
                .unlinked
                .iter()
                .take(SHOWN)
                .map(String::as_str)
                .collect();
            write!(
                f,
                "; {} unlinked levels: {}",
                self.unlinked.len(),
                head.join(", ")
            )?;
            if self.unlinked.len() > SHOWN {
                f.write_str(", ...")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ServeError {
    #[error("design is invalid: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
    #[error("{0}")]
    Unservable(Unservable),
}

/// Picks the serving unit: the only unit with no nested children. With
/// several candidates the one with most levels (first declared on ties) is
/// reported alongside the error.
fn serving_unit(design: &Design) -> Result<FactorId, Unservable> {
    let fg = design.factor_graph();
    let units: Vec<_> = fg.with_role(Role::Unit).collect();
    if units.is_empty() {
        return Err(Unservable {
            serving_unit: None,
            reasons: vec!["the design has no units".into()],
            unlinked: design
                .level_graph()
                .levels()
                .iter()
                .map(|l| design.qualified_label(l.id))
                .collect(),
        });
    }
    let leaves: Vec<&Factor> = units
        .iter()
        .copied()
        .filter(|u| fg.nesting_children(u.id).is_empty())
        .collect();
    if let [only] = leaves.as_slice() {
        return Ok(only.id);
    }
    let best = leaves
        .iter()
        .copied()
        .reduce(|best, f| {
            if f.level_count > best.level_count {
                f
            } else {
                best
            }
        })
        .expect("a forest has at least one leaf");
    let chain = fg.nesting_chain(best.id);
    let unlinked = design
        .level_graph()
        .levels()
        .iter()
        .filter(|l| {
            fg.factor(l.factor).is_some_and(|f| f.role == Role::Unit) && !chain.contains(&l.factor)
        })
        .map(|l| design.qualified_label(l.id))
        .collect();
    let names: Vec<String> = leaves.iter().map(|f| format!("`{}`", f.name)).collect();
    Err(Unservable {
        serving_unit: Some(best.name.clone()),
        reasons: vec![format!(
            "units do not form a single nesting chain (innermost units: {})",
            names.join(", ")
        )],
        unlinked,
    })
}

/// Renders the design table.
///
/// Columns are the units along the nesting chain (outermost first), then
/// treatments, then records, each in declaration order. Treatment cells
/// come from whichever unit on the chain the treatment was allotted to;
/// record cells are left empty for data entry.
pub fn serve_table(design: &Design) -> Result<DesignTable, ServeError> {
    let violations = design.validate();
    if !violations.is_empty() {
        return Err(ServeError::Invalid(violations));
    }
    let fg = design.factor_graph();
    let lg = design.level_graph();
    let leaf = serving_unit(design).map_err(ServeError::Unservable)?;
    let chain = fg.nesting_chain(leaf);

    // where each treatment goes, and which treatment levels reached which unit levels
    let mut target_of: HashMap<FactorId, FactorId> = HashMap::new();
    for e in fg.edges_of_kind(FactorEdgeKind::AllottedTo) {
        target_of.insert(e.from, e.to);
    }
    let mut assigned: HashMap<(LevelId, FactorId), LevelId> = HashMap::new();
    for e in lg.edges() {
        let (Some(from), Some(to)) = (lg.level(e.from), lg.level(e.to)) else {
            continue;
        };
        if fg
            .factor(from.factor)
            .is_some_and(|f| f.role == Role::Treatment)
        {
            assigned.insert((to.id, from.factor), from.id);
        }
    }

    let mut reasons = Vec::new();
    let mut unlinked = Vec::new();
    for trt in fg.with_role(Role::Treatment) {
        let Some(&target) = target_of.get(&trt.id) else {
            reasons.push(format!(
                "treatment `{}` is not allotted to any unit",
                trt.name
            ));
            unlinked.extend(lg.levels_of(trt.id).map(|l| design.qualified_label(l.id)));
            continue;
        };
        let target_levels = lg.level_ids_of(target);
        let missing: Vec<LevelId> = target_levels
            .iter()
            .copied()
            .filter(|&u| !assigned.contains_key(&(u, trt.id)))
            .collect();
        if missing.len() == target_levels.len() {
            reasons.push(format!("treatment `{}` has not been assigned", trt.name));
            unlinked.extend(lg.levels_of(trt.id).map(|l| design.qualified_label(l.id)));
        } else if !missing.is_empty() {
            reasons.push(format!(
                "treatment `{}` is missing from {} levels of `{}`",
                trt.name,
                missing.len(),
                fg.factor(target).map_or("?", |f| f.name.as_str())
            ));
            unlinked.extend(missing.iter().map(|&l| design.qualified_label(l)));
        }
    }
    if !reasons.is_empty() {
        return Err(ServeError::Unservable(Unservable {
            serving_unit: fg.factor(leaf).map(|f| f.name.clone()),
            reasons,
            unlinked,
        }));
    }

    // parent level of every level on the chain
    let mut parent_level: HashMap<LevelId, LevelId> = HashMap::new();
    for pair in chain.windows(2) {
        let (parent, child) = (pair[0], pair[1]);
        for e in lg.edges() {
            let is_pair = lg.level(e.from).is_some_and(|l| l.factor == child)
                && lg.level(e.to).is_some_and(|l| l.factor == parent);
            if is_pair {
                parent_level.insert(e.from, e.to);
            }
        }
    }

    let mut columns = Vec::new();
    for &unit in &chain {
        let f = fg.factor(unit).expect("chain factors exist");
        columns.push(Column {
            name: f.name.clone(),
            role: Role::Unit,
            implicit: design.implicit_role(unit).unwrap_or_default(),
        });
    }
    let treatments: Vec<_> = fg.with_role(Role::Treatment).collect();
    let records: Vec<_> = fg.with_role(Role::Record).collect();
    for f in treatments.iter().chain(records.iter()) {
        columns.push(Column {
            name: f.name.clone(),
            role: f.role,
            implicit: BTreeSet::new(),
        });
    }

    let label = |id: LevelId| lg.level(id).map(|l| l.label.clone()).unwrap_or_default();
    let mut rows = Vec::with_capacity(lg.levels_of(leaf).count());
    for leaf_level in lg.level_ids_of(leaf) {
        // walk upwards, leaf first
        let mut path = vec![leaf_level];
        while let Some(&p) = parent_level.get(path.last().expect("non-empty")) {
            path.push(p);
        }
        let on_chain: HashMap<FactorId, LevelId> = path
            .iter()
            .filter_map(|&l| lg.level(l).map(|lv| (lv.factor, l)))
            .collect();
        let mut row = Vec::with_capacity(columns.len());
        for unit in &chain {
            row.push(on_chain.get(unit).map(|&l| label(l)).unwrap_or_default());
        }
        for trt in &treatments {
            let cell = target_of
                .get(&trt.id)
                .and_then(|t| on_chain.get(t))
                .and_then(|u| assigned.get(&(*u, trt.id)))
                .map(|&l| label(l))
                .unwrap_or_default();
            row.push(cell);
        }
        row.extend(records.iter().map(|_| String::new()));
        rows.push(row);
    }

    Ok(DesignTable {
        title: design.title().map(str::to_owned),
        columns,
        rows,
    })
}
