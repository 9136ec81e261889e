//! Treatment combinations, constraint groups and the two assignment orders.
//!
//! Random order, per constraint group of `n` unit levels and `t` treatment
//! combinations:
//!
//! 1. every combination gets `n / t` replicates;
//! 2. the `n % t` leftover replicates go to distinct combinations picked by
//!    [`Rng::sample_distinct`] (drawn first);
//! 3. the multiset, laid out in combination order, is shuffled with
//!    [`Rng::shuffle`] (drawn second) and zipped onto the group members in
//!    ordinal order.
//!
//! Systematic order consumes no draws: members are taken group by group and
//! combination `i mod t` goes to the `i`-th member.

use super::{EngineError, Rng};
use crate::model::{Design, FactorId, LevelId, Role};

/// One treatment combination: a level from each crossed source, in source
/// order.
pub type Combo = Vec<LevelId>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupKey {
    /// The target has no nesting parent; all its levels form one group.
    Root,
    Parent(LevelId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintGroup {
    pub key: GroupKey,
    /// Target levels in ascending ordinal order.
    pub members: Vec<LevelId>,
}

/// Cartesian product of the sources' levels. The first source varies
/// slowest.
pub fn cross_levels(design: &Design, sources: &[FactorId]) -> Result<Vec<Combo>, EngineError> {
    if sources.is_empty() {
        return Err(EngineError::EmptySources);
    }
    let mut combos: Vec<Combo> = vec![Vec::new()];
    for &source in sources {
        let factor = design
            .factor(source)
            .ok_or_else(|| EngineError::UnknownFactor(format!("#{}", source.0)))?;
        let levels = design.level_graph().level_ids_of(source);
        if levels.is_empty() {
            return Err(EngineError::NoLevels(factor.name.clone()));
        }
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                levels.iter().map(move |&l| {
                    let mut c = prefix.clone();
                    c.push(l);
                    c
                })
            })
            .collect();
    }
    Ok(combos)
}

/// Groups the target's levels by their nesting-parent level (one group per
/// parent level, parent ordinal order), or a single root group when the
/// target is not nested.
pub fn constraint_groups(
    design: &Design,
    target: FactorId,
) -> Result<Vec<ConstraintGroup>, EngineError> {
    let factor = design
        .factor(target)
        .ok_or_else(|| EngineError::UnknownFactor(format!("#{}", target.0)))?;
    if factor.role != Role::Unit {
        return Err(EngineError::RoleMismatch {
            name: factor.name.clone(),
            expected: Role::Unit,
            found: factor.role,
        });
    }
    let lg = design.level_graph();
    let members = lg.level_ids_of(target);
    let Some(parent) = design.factor_graph().nesting_parent(target) else {
        return Ok(vec![ConstraintGroup {
            key: GroupKey::Root,
            members,
        }]);
    };
    let mut groups: Vec<ConstraintGroup> = lg
        .level_ids_of(parent)
        .into_iter()
        .map(|p| ConstraintGroup {
            key: GroupKey::Parent(p),
            members: Vec::new(),
        })
        .collect();
    let parent_ordinal = |l: LevelId| lg.level(l).map(|l| l.ordinal);
    let successors = lg.successors();
    for member in members {
        let parent_level = successors
            .get(&member)
            .and_then(|ts| {
                ts.iter()
                    .copied()
                    .find(|t| lg.level(*t).is_some_and(|l| l.factor == parent))
            })
            .ok_or_else(|| EngineError::MissingParentLevel(design.qualified_label(member)))?;
        let idx = parent_ordinal(parent_level).expect("level exists") - 1;
        groups[idx].members.push(member);
    }
    Ok(groups)
}

/// Random, near-balanced allocation of `combos` within one group. Returns
/// `(member, combo index)` pairs in member order.
pub fn assign_random<T>(
    group: &ConstraintGroup,
    combos: &[T],
    rng: &mut Rng,
) -> Vec<(LevelId, usize)> {
    let slots = allocate_random(group.members.len(), combos.len(), rng);
    group.members.iter().copied().zip(slots).collect()
}

/// Combo indices for `n` slots drawn from `t` combinations.
pub fn allocate_random(n: usize, t: usize, rng: &mut Rng) -> Vec<usize> {
    if n == 0 || t == 0 {
        return Vec::new();
    }
    let base = n / t;
    let extras = rng.sample_distinct(t, n % t);
    let mut counts = vec![base; t];
    for e in extras {
        counts[e] += 1;
    }
    let mut slots: Vec<usize> = counts
        .iter()
        .enumerate()
        .flat_map(|(combo, &k)| std::iter::repeat_n(combo, k))
        .collect();
    rng.shuffle(&mut slots);
    slots
}

/// Cyclic allocation across the flattened groups.
pub fn assign_systematic<T>(groups: &[ConstraintGroup], combos: &[T]) -> Vec<(LevelId, usize)> {
    if combos.is_empty() {
        return Vec::new();
    }
    groups
        .iter()
        .flat_map(|g| g.members.iter().copied())
        .enumerate()
        .map(|(i, member)| (member, i % combos.len()))
        .collect()
}

/// Removes every treatment -> unit level edge.
pub(crate) fn clear_assignment(design: &mut Design) {
    let treatment_levels: std::collections::HashSet<LevelId> = design
        .factor_graph()
        .with_role(Role::Treatment)
        .flat_map(|f| design.level_graph().level_ids_of(f.id))
        .collect();
    design
        .level_graph_mut()
        .retain_edges(|e| !treatment_levels.contains(&e.from));
}
