//! The grammar's verbs.
//!
//! Each verb validates its whole argument list before touching the design,
//! so a failed call leaves the design exactly as it was.
//!
//! ```
//! use ged_core::dsl::{AllotDecl, TrtDecl, UnitDecl};
//! use ged_core::model::{AssignmentSpec, Design};
//!
//! let mut design = Design::new(Some("Fisher's split-plot design"));
//! design
//!     .set_units(&[UnitDecl::count("patch", 36), UnitDecl::nested("plot", "patch", 3)])?
//!     .set_trts(&[TrtDecl::count("variety", 12)])?
//!     .allot_trts(&[AllotDecl::new(&["variety"], "patch")])?
//!     .assign_trts(AssignmentSpec::random(1))?;
//! assert_eq!(design.factor_by_name("plot").unwrap().level_count, 108);
//! # Ok::<(), ged_core::engine::EngineError>(())
//! ```

mod assign;
mod rng;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::dsl::{AllotDecl, NestCounts, RcrdDecl, TrtDecl, TrtSpec, UnitDecl, UnitSpec};
use crate::model::{
    Allotment, AssignmentSpec, Design, FactorEdgeKind, FactorId, ModelError, Order, Role,
};

pub use assign::{
    allocate_random, assign_random, assign_systematic, constraint_groups, cross_levels, Combo,
    ConstraintGroup, GroupKey,
};
pub use rng::Rng;

/// Upper bound on the number of levels in one design.
pub const MAX_LEVELS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("factor `{0}` is already declared")]
    DuplicateName(String),
    #[error("unknown factor `{0}`")]
    UnknownFactor(String),
    #[error("`{name}` is a {found}, expected a {expected}")]
    RoleMismatch {
        name: String,
        expected: Role,
        found: Role,
    },
    #[error("`{0}`: counts must be positive")]
    ZeroCount(String),
    #[error("`{0}` needs at least one label")]
    EmptyLabels(String),
    #[error("`{factor}` has the label {label:?} more than once")]
    DuplicateLabel { factor: String, label: String },
    #[error("`{unit}`: {detail}")]
    ParentCoverage { unit: String, detail: String },
    #[error("design would exceed {MAX_LEVELS} levels")]
    TooManyLevels,
    #[error("treatment `{0}` is already allotted")]
    ReusedSource(String),
    #[error("allotment has no treatment factors")]
    EmptySources,
    #[error("factor `{0}` has no levels")]
    NoLevels(String),
    #[error("level {0} has no parent level")]
    MissingParentLevel(String),
    #[error("nothing to assign: the design has no allotments")]
    NoAllotments,
    #[error("{orders} orders given for {allotments} allotments")]
    OrderCount { orders: usize, allotments: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One verb applied to a design. A `.ged` program lowers to a list of these.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    SetUnits(Vec<UnitDecl>),
    SetTrts(Vec<TrtDecl>),
    SetRcrds(Vec<RcrdDecl>),
    AllotTrts(Vec<AllotDecl>),
    AssignTrts(AssignmentSpec),
}

impl Command {
    pub fn verb(&self) -> &'static str {
        match self {
            Command::SetUnits(_) => "set_units",
            Command::SetTrts(_) => "set_trts",
            Command::SetRcrds(_) => "set_rcrds",
            Command::AllotTrts(_) => "allot_trts",
            Command::AssignTrts(_) => "assign_trts",
        }
    }
}

/// Applies `commands` in order to a new design.
pub fn replay(title: Option<&str>, commands: &[Command]) -> Result<Design, EngineError> {
    let mut design = Design::new(title);
    for command in commands {
        design.apply(command)?;
    }
    Ok(design)
}

fn lookup(design: &Design, name: &str, role: Role) -> Result<FactorId, EngineError> {
    let f = design
        .factor_by_name(name)
        .ok_or_else(|| EngineError::UnknownFactor(name.to_owned()))?;
    if f.role != role {
        return Err(EngineError::RoleMismatch {
            name: name.to_owned(),
            expected: role,
            found: f.role,
        });
    }
    Ok(f.id)
}

fn check_new_name(design: &Design, name: &str) -> Result<(), EngineError> {
    if design.factor_by_name(name).is_some() {
        Err(EngineError::DuplicateName(name.to_owned()))
    } else {
        Ok(())
    }
}

fn check_labels(factor: &str, labels: &[String]) -> Result<(), EngineError> {
    if labels.is_empty() {
        return Err(EngineError::EmptyLabels(factor.to_owned()));
    }
    let mut seen = HashSet::new();
    for l in labels {
        if !seen.insert(l) {
            return Err(EngineError::DuplicateLabel {
                factor: factor.to_owned(),
                label: l.clone(),
            });
        }
    }
    Ok(())
}

fn check_budget(design: &Design, extra: u64) -> Result<(), EngineError> {
    if design.level_graph().len() as u64 + extra > MAX_LEVELS {
        Err(EngineError::TooManyLevels)
    } else {
        Ok(())
    }
}

impl Design {
    pub fn apply(&mut self, command: &Command) -> Result<&mut Self, EngineError> {
        match command {
            Command::SetUnits(d) => self.set_units(d),
            Command::SetTrts(d) => self.set_trts(d),
            Command::SetRcrds(d) => self.set_rcrds(d),
            Command::AllotTrts(d) => self.allot_trts(d),
            Command::AssignTrts(spec) => self.assign_trts(spec.clone()),
        }
    }

    /// Runs `f` on a copy and keeps the copy only if it succeeds.
    fn transact(
        &mut self,
        f: impl FnOnce(&mut Design) -> Result<(), EngineError>,
    ) -> Result<&mut Self, EngineError> {
        let mut next = self.clone();
        f(&mut next)?;
        *self = next;
        Ok(self)
    }

    /// Declares unit factors in order; a nested unit may refer to a parent
    /// declared earlier in the same call. Generated labels are
    /// `<name><k>` with `k` counting across the whole factor.
    pub fn set_units(&mut self, decls: &[UnitDecl]) -> Result<&mut Self, EngineError> {
        self.transact(|d| decls.iter().try_for_each(|decl| d.add_unit(decl)))
    }

    fn add_unit(&mut self, decl: &UnitDecl) -> Result<(), EngineError> {
        check_new_name(self, &decl.name)?;
        match &decl.spec {
            UnitSpec::Count(n) => {
                if *n == 0 {
                    return Err(EngineError::ZeroCount(decl.name.clone()));
                }
                check_budget(self, *n)?;
                let id = self.add_factor(decl.name.clone(), Role::Unit);
                for k in 1..=*n {
                    self.add_level(id, format!("{}{k}", decl.name));
                }
            }
            UnitSpec::Labels(labels) => {
                check_labels(&decl.name, labels)?;
                check_budget(self, labels.len() as u64)?;
                let id = self.add_factor(decl.name.clone(), Role::Unit);
                for l in labels {
                    self.add_level(id, l.clone());
                }
            }
            UnitSpec::NestedIn { parent, counts } => {
                let parent_id = lookup(self, parent, Role::Unit)?;
                let parent_levels = self.level_graph().level_ids_of(parent_id);
                let per_parent = self.per_parent_counts(decl, &parent_levels, counts)?;
                let total = per_parent
                    .iter()
                    .fold(0u64, |acc, &k| acc.saturating_add(k));
                check_budget(self, total)?;
                let id = self.add_factor(decl.name.clone(), Role::Unit);
                self.add_factor_edge(id, parent_id, FactorEdgeKind::NestedIn);
                let mut k = 0u64;
                for (&parent_level, &count) in parent_levels.iter().zip(&per_parent) {
                    for _ in 0..count {
                        k += 1;
                        let child = self.add_level(id, format!("{}{k}", decl.name));
                        self.add_level_edge(child, parent_level);
                    }
                }
            }
        }
        Ok(())
    }

    /// Child count for each parent level, in parent ordinal order.
    fn per_parent_counts(
        &self,
        decl: &UnitDecl,
        parent_levels: &[crate::model::LevelId],
        counts: &NestCounts,
    ) -> Result<Vec<u64>, EngineError> {
        let coverage = |detail: String| EngineError::ParentCoverage {
            unit: decl.name.clone(),
            detail,
        };
        let n = parent_levels.len();
        let mut out: Vec<Option<u64>> = vec![None; n];
        let mut set = |idx: usize, k: u64, key: String| -> Result<(), EngineError> {
            if k == 0 {
                return Err(EngineError::ZeroCount(decl.name.clone()));
            }
            match out.get_mut(idx) {
                None => Err(coverage(format!("parent level {key} does not exist"))),
                Some(Some(_)) => Err(coverage(format!("parent level {key} has two counts"))),
                Some(slot) => {
                    *slot = Some(k);
                    Ok(())
                }
            }
        };
        match counts {
            NestCounts::Uniform(k) => {
                for i in 0..n {
                    set(i, *k, (i + 1).to_string())?;
                }
            }
            NestCounts::ByOrdinal(pairs) => {
                for &(ordinal, k) in pairs {
                    let idx = (ordinal as usize).checked_sub(1).unwrap_or(usize::MAX);
                    set(idx, k, ordinal.to_string())?;
                }
            }
            NestCounts::ByLabel(pairs) => {
                let by_label: HashMap<&str, usize> = parent_levels
                    .iter()
                    .enumerate()
                    .filter_map(|(i, l)| self.level(*l).map(|l| (l.label.as_str(), i)))
                    .collect();
                for (label, k) in pairs {
                    let idx = by_label.get(label.as_str()).copied().unwrap_or(usize::MAX);
                    set(idx, *k, format!("{label:?}"))?;
                }
            }
        }
        let missing = out.iter().filter(|c| c.is_none()).count();
        if missing > 0 {
            return Err(coverage(format!("{missing} parent levels have no count")));
        }
        Ok(out.into_iter().flatten().collect())
    }

    /// Declares treatment factors. `Count(n)` labels levels `<name>1..<name>n`.
    pub fn set_trts(&mut self, decls: &[TrtDecl]) -> Result<&mut Self, EngineError> {
        self.transact(|d| {
            for decl in decls {
                check_new_name(d, &decl.name)?;
                let labels: Vec<String> = match &decl.spec {
                    TrtSpec::Count(0) => return Err(EngineError::ZeroCount(decl.name.clone())),
                    TrtSpec::Count(n) => {
                        check_budget(d, *n)?;
                        (1..=*n).map(|k| format!("{}{k}", decl.name)).collect()
                    }
                    TrtSpec::Labels(labels) => {
                        check_labels(&decl.name, labels)?;
                        check_budget(d, labels.len() as u64)?;
                        labels.clone()
                    }
                };
                let id = d.add_factor(decl.name.clone(), Role::Treatment);
                for l in labels {
                    d.add_level(id, l);
                }
            }
            Ok(())
        })
    }

    /// Declares record factors measured on existing units. Records own no
    /// levels.
    pub fn set_rcrds(&mut self, decls: &[RcrdDecl]) -> Result<&mut Self, EngineError> {
        self.transact(|d| {
            for decl in decls {
                check_new_name(d, &decl.name)?;
                let unit = lookup(d, &decl.unit, Role::Unit)?;
                let id = d.add_factor(decl.name.clone(), Role::Record);
                d.add_factor_edge(id, unit, FactorEdgeKind::MeasuredOn);
            }
            Ok(())
        })
    }

    /// Records which treatments (crossed when several) go to which unit.
    /// No level edges are created until [`Design::assign_trts`]; a design
    /// that was already assigned drops that assignment and must be assigned
    /// again.
    pub fn allot_trts(&mut self, decls: &[AllotDecl]) -> Result<&mut Self, EngineError> {
        self.transact(|d| {
            if !decls.is_empty() && d.assignment().is_some() {
                assign::clear_assignment(d);
                d.forget_assignment();
            }
            for decl in decls {
                if decl.sources.is_empty() {
                    return Err(EngineError::EmptySources);
                }
                let target = lookup(d, &decl.target, Role::Unit)?;
                let mut sources = Vec::with_capacity(decl.sources.len());
                for name in &decl.sources {
                    let id = lookup(d, name, Role::Treatment)?;
                    let reused = sources.contains(&id)
                        || d.allotments().iter().any(|a| a.sources.contains(&id));
                    if reused {
                        return Err(EngineError::ReusedSource(name.clone()));
                    }
                    sources.push(id);
                }
                for &s in &sources {
                    d.add_factor_edge(s, target, FactorEdgeKind::AllottedTo);
                }
                d.push_allotment(Allotment { sources, target });
            }
            Ok(())
        })
    }

    /// Assigns treatment levels to unit levels with a generator seeded from
    /// `spec.seed`. Any earlier assignment is replaced.
    pub fn assign_trts(&mut self, spec: AssignmentSpec) -> Result<&mut Self, EngineError> {
        let mut rng = Rng::seed_from_u64(spec.seed);
        self.assign_trts_with(spec, &mut rng)
    }

    /// As [`Design::assign_trts`], drawing from a caller-supplied stream.
    /// Allotments are processed in declaration order and, within each,
    /// constraint groups in parent ordinal order.
    pub fn assign_trts_with(
        &mut self,
        spec: AssignmentSpec,
        rng: &mut Rng,
    ) -> Result<&mut Self, EngineError> {
        let allotments = self.allotments().len();
        if allotments == 0 {
            return Err(EngineError::NoAllotments);
        }
        if !spec.is_valid_for(allotments) {
            return Err(EngineError::OrderCount {
                orders: spec.orders.len(),
                allotments,
            });
        }
        let mut work = rng.clone();
        self.transact(|d| {
            assign::clear_assignment(d);
            for (i, allotment) in d.allotments().to_vec().into_iter().enumerate() {
                let combos = cross_levels(d, &allotment.sources)?;
                let groups = constraint_groups(d, allotment.target)?;
                let mapping = match spec.order_for(i) {
                    Order::Random => groups
                        .iter()
                        .flat_map(|g| assign_random(g, &combos, &mut work))
                        .collect::<Vec<_>>(),
                    Order::Systematic => assign_systematic(&groups, &combos),
                };
                for (unit_level, combo) in mapping {
                    for &trt_level in &combos[combo] {
                        d.add_level_edge(trt_level, unit_level);
                    }
                }
            }
            d.set_assignment(spec);
            Ok(())
        })?;
        *rng = work;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ImplicitRole;

    fn fisher() -> Design {
        let mut d = Design::new(Some("Fisher's split-plot design"));
        d.set_units(&[
            UnitDecl::count("patch", 36),
            UnitDecl::nested("plot", "patch", 3),
        ])
        .unwrap()
        .set_trts(&[
            TrtDecl::count("variety", 12),
            TrtDecl::labels("fertilizer", &["basal", "sulphate", "chloride"]),
        ])
        .unwrap()
        .set_rcrds(&[
            RcrdDecl::new("yield", "plot"),
            RcrdDecl::new("biomass", "patch"),
        ])
        .unwrap()
        .allot_trts(&[
            AllotDecl::new(&["variety"], "patch"),
            AllotDecl::new(&["fertilizer"], "plot"),
        ])
        .unwrap();
        d
    }

    #[test]
    fn split_plot_units() {
        let d = fisher();
        let plot = d.factor_by_name("plot").unwrap().id;
        let patch = d.factor_by_name("patch").unwrap().id;
        assert_eq!(d.factor(plot).unwrap().level_count, 108);
        let groups = constraint_groups(&d, plot).unwrap();
        assert_eq!(groups.len(), 36);
        assert!(groups.iter().all(|g| g.members.len() == 3));
        let root = constraint_groups(&d, patch).unwrap();
        assert_eq!(root.len(), 1);
        assert_eq!(root[0].key, GroupKey::Root);
        assert_eq!(root[0].members.len(), 36);
        let labels: Vec<&str> = d
            .level_graph()
            .levels_of(plot)
            .map(|l| l.label.as_str())
            .collect();
        assert_eq!(labels.first(), Some(&"plot1"));
        assert_eq!(labels.last(), Some(&"plot108"));
        assert!(d.validate().is_empty(), "{:?}", d.validate());
    }

    #[test]
    fn unbalanced_nesting() {
        let mut d = Design::new(None);
        d.set_units(&[
            UnitDecl::count("experiment", 4),
            UnitDecl::nested_by_ordinal(
                "subject",
                "experiment",
                &[(1, 21), (2, 20), (3, 29), (4, 59)],
            ),
        ])
        .unwrap();
        let subject = d.factor_by_name("subject").unwrap().id;
        assert_eq!(d.factor(subject).unwrap().level_count, 129);
        let sizes: Vec<usize> = constraint_groups(&d, subject)
            .unwrap()
            .iter()
            .map(|g| g.members.len())
            .collect();
        assert_eq!(sizes, vec![21, 20, 29, 59]);
    }

    #[test]
    fn minimal_nesting() {
        let mut d = Design::new(None);
        d.set_units(&[
            UnitDecl::count("parent", 1),
            UnitDecl::nested("unit", "parent", 1),
        ])
        .unwrap();
        assert_eq!(d.level_graph().len(), 2);
        assert_eq!(d.level_graph().edges().len(), 1);
    }

    #[test]
    fn unit_errors_leave_design_untouched() {
        let mut d = Design::new(None);
        d.set_units(&[UnitDecl::count("a", 2)]).unwrap();
        let before = d.clone();
        let err = d
            .set_units(&[UnitDecl::count("b", 2), UnitDecl::nested("c", "nope", 2)])
            .unwrap_err();
        assert_eq!(err, EngineError::UnknownFactor("nope".into()));
        assert_eq!(d, before);
        assert!(matches!(
            d.set_units(&[UnitDecl::count("a", 1)]),
            Err(EngineError::DuplicateName(_))
        ));
        assert!(matches!(
            d.set_units(&[UnitDecl::nested_by_ordinal("c", "a", &[(1, 2)])]),
            Err(EngineError::ParentCoverage { .. })
        ));
        assert!(matches!(
            d.set_units(&[UnitDecl::count("z", 0)]),
            Err(EngineError::ZeroCount(_))
        ));
        assert!(matches!(
            d.set_units(&[UnitDecl::nested_by_label("c", "a", &[("a1", 1), ("a1", 1)])]),
            Err(EngineError::ParentCoverage { .. })
        ));
        assert!(d
            .set_units(&[UnitDecl::nested_by_label("c", "a", &[("a2", 1), ("a1", 3)])])
            .is_ok());
        assert_eq!(d.factor_by_name("c").unwrap().level_count, 4);
    }

    #[test]
    fn treatments() {
        let d = fisher();
        let variety = d.factor_by_name("variety").unwrap().id;
        let labels: Vec<&str> = d
            .level_graph()
            .levels_of(variety)
            .map(|l| l.label.as_str())
            .collect();
        assert_eq!(labels.len(), 12);
        assert_eq!(labels[0], "variety1");
        assert_eq!(labels[11], "variety12");
        let fert = d.factor_by_name("fertilizer").unwrap().id;
        let labels: Vec<&str> = d
            .level_graph()
            .levels_of(fert)
            .map(|l| l.label.as_str())
            .collect();
        assert_eq!(labels, vec!["basal", "sulphate", "chloride"]);

        let mut single = Design::new(None);
        single.set_trts(&[TrtDecl::count("t", 1)]).unwrap();
        assert_eq!(single.level_graph().len(), 1);
        assert!(matches!(
            single.set_trts(&[TrtDecl::labels("u", &["a", "a"])]),
            Err(EngineError::DuplicateLabel { .. })
        ));
        assert!(matches!(
            single.set_trts(&[TrtDecl::labels("u", &[])]),
            Err(EngineError::EmptyLabels(_))
        ));
    }

    #[test]
    fn records_and_allotments() {
        let d = fisher();
        let plot = d.factor_by_name("plot").unwrap().id;
        assert!(d
            .implicit_role(plot)
            .unwrap()
            .contains(&ImplicitRole::ObservationalUnit));
        assert_eq!(d.allotments().len(), 2);
        assert!(
            d.level_graph().edges().len() == 108,
            "only nesting edges before assignment"
        );

        let mut bad = d.clone();
        assert!(matches!(
            bad.set_rcrds(&[RcrdDecl::new("w", "ghost")]),
            Err(EngineError::UnknownFactor(_))
        ));
        assert!(matches!(
            bad.allot_trts(&[AllotDecl::new(&["variety"], "patch")]),
            Err(EngineError::ReusedSource(_))
        ));
        assert!(matches!(
            bad.allot_trts(&[AllotDecl::new(&["yield"], "patch")]),
            Err(EngineError::RoleMismatch { .. })
        ));
        assert_eq!(bad, d);
    }

    #[test]
    fn crossed_levels_first_factor_slowest() {
        let mut d = Design::new(None);
        d.set_trts(&[
            TrtDecl::labels("frequency", &["0.167", "0.250"]),
            TrtDecl::labels("acceleration", &["0.111", "0.222"]),
        ])
        .unwrap();
        let f = d.factor_by_name("frequency").unwrap().id;
        let a = d.factor_by_name("acceleration").unwrap().id;
        let combos = cross_levels(&d, &[f, a]).unwrap();
        let labels: Vec<(String, String)> = combos
            .iter()
            .map(|c| {
                (
                    d.level(c[0]).unwrap().label.clone(),
                    d.level(c[1]).unwrap().label.clone(),
                )
            })
            .collect();
        let expect = [
            ("0.167", "0.111"),
            ("0.167", "0.222"),
            ("0.250", "0.111"),
            ("0.250", "0.222"),
        ];
        assert_eq!(
            labels,
            expect
                .iter()
                .map(|(x, y)| (x.to_string(), y.to_string()))
                .collect::<Vec<_>>()
        );
        assert_eq!(cross_levels(&d, &[f]).unwrap().len(), 2);
        assert_eq!(cross_levels(&d, &[]), Err(EngineError::EmptySources));
    }

    #[test]
    fn assignment_is_deterministic_and_complete() {
        let mut a = fisher();
        let mut b = fisher();
        a.assign_trts(AssignmentSpec::new(vec![Order::Random, Order::Random], 1))
            .unwrap();
        b.assign_trts(AssignmentSpec::new(vec![Order::Random, Order::Random], 1))
            .unwrap();
        assert_eq!(a.level_graph(), b.level_graph());
        // 108 nesting + 36 variety + 108 fertilizer edges
        assert_eq!(a.level_graph().edges().len(), 108 + 36 + 108);
        assert!(a.validate().is_empty());
        // re-running replaces rather than accumulates
        a.assign_trts(AssignmentSpec::random(1)).unwrap();
        assert_eq!(a.level_graph(), b.level_graph());
        assert_eq!(a.seed(), Some(1));
    }

    #[test]
    fn assignment_errors() {
        let mut d = Design::new(None);
        d.set_units(&[UnitDecl::count("u", 2)]).unwrap();
        assert_eq!(
            d.assign_trts(AssignmentSpec::random(0)).unwrap_err(),
            EngineError::NoAllotments
        );
        let mut f = fisher();
        let spec = AssignmentSpec::new(vec![Order::Random; 3], 0);
        assert_eq!(
            f.assign_trts(spec).unwrap_err(),
            EngineError::OrderCount {
                orders: 3,
                allotments: 2
            }
        );
    }

    #[test]
    fn systematic_consumes_no_draws() {
        let mut d = fisher();
        let mut rng = Rng::seed_from_u64(5);
        let before = rng.clone();
        d.assign_trts_with(AssignmentSpec::systematic(), &mut rng)
            .unwrap();
        assert_eq!(rng, before);
        let mut rng2 = rng.clone();
        d.assign_trts_with(AssignmentSpec::random(5), &mut rng2)
            .unwrap();
        assert_ne!(rng2, before);
    }

    #[test]
    fn new_allotment_drops_stale_assignment() {
        let mut d = fisher();
        d.assign_trts(AssignmentSpec::new(vec![Order::Random, Order::Random], 1))
            .unwrap();
        d.set_trts(&[TrtDecl::count("extra", 2)])
            .unwrap()
            .allot_trts(&[AllotDecl::new(&["extra"], "plot")])
            .unwrap();
        assert!(d.assignment().is_none());
        assert!(d.validate().is_empty());
        assert_eq!(d.level_graph().edges().len(), 108);
    }
}
