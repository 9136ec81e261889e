//! Shared generators for the integration and acceptance tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet};

use ged_core::dsl::{
    AllotDecl, AssignDecl, DesignSpec, NestCounts, RcrdDecl, TrtDecl, TrtSpec, UnitDecl, UnitSpec,
};
use ged_core::engine::Command;
use ged_core::model::{Design, FactorEdgeKind, Order, Role};
use ged_core::Rng;
use proptest::prelude::*;

/// Words that are keywords somewhere in the language; they must still work
/// as factor names.
pub const KEYWORDS: [&str; 11] = [
    "design",
    "units",
    "trts",
    "rcrds",
    "allot",
    "assign",
    "seed",
    "random",
    "systematic",
    "nested_in",
    "on",
];

pub fn label_strategy() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,6}",
        "[0-9]\\.[0-9]{3}",
        any::<String>().prop_map(|s| s.chars().take(8).collect()),
        Just("say \"hi\"\\n".to_string()),
        Just("tab\there".to_string()),
        Just("line\nbreak".to_string()),
        Just(String::new()),
    ]
}

struct Picker(Rng);

impl Picker {
    fn below(&mut self, n: usize) -> usize {
        self.0.below_usize(n)
    }

    fn chance(&mut self, num: usize, den: usize) -> bool {
        self.below(den) < num
    }

    fn range(&mut self, lo: u64, hi: u64) -> u64 {
        lo + self.0.below(hi - lo + 1)
    }
}

struct UnitInfo {
    name: String,
    labels: Vec<String>,
}

fn fresh_name(p: &mut Picker, used: &mut HashSet<String>, prefix: &str) -> String {
    loop {
        let name = if p.chance(1, 5) {
            KEYWORDS[p.below(KEYWORDS.len())].to_string()
        } else {
            format!("{prefix}{}", p.below(50))
        };
        if used.insert(name.clone()) {
            return name;
        }
    }
}

fn distinct_labels(p: &mut Picker, pool: &[String], max: usize) -> Option<Vec<String>> {
    let want = 1 + p.below(max);
    let mut out: Vec<String> = Vec::new();
    for l in pool.iter().skip(p.below(pool.len().max(1))) {
        if out.len() == want {
            break;
        }
        if !out.contains(l) {
            out.push(l.clone());
        }
    }
    (!out.is_empty()).then_some(out)
}

/// Builds a small valid spec from a structure seed and a pool of labels.
pub fn build_spec(seed: u64, pool: &[String], title: Option<String>) -> DesignSpec {
    let mut p = Picker(Rng::seed_from_u64(seed));
    let mut used = HashSet::new();
    let mut spec = DesignSpec {
        title,
        ..DesignSpec::default()
    };

    let mut units: Vec<UnitInfo> = Vec::new();
    for _ in 0..p.below(5) {
        let name = fresh_name(&mut p, &mut used, "u");
        let kind = if units.is_empty() {
            p.below(2)
        } else {
            p.below(3)
        };
        let (decl, labels) = match kind {
            1 => match distinct_labels(&mut p, pool, 3) {
                Some(ls) => (
                    UnitDecl {
                        name: name.clone(),
                        spec: UnitSpec::Labels(ls.clone()),
                    },
                    ls,
                ),
                None => (UnitDecl::count(&name, 2), vec![]),
            },
            2 => {
                let parent = &units[p.below(units.len())];
                let n_parent = parent.labels.len();
                let counts: Vec<u64> = (0..n_parent).map(|_| p.range(1, 3)).collect();
                let mut order: Vec<usize> = (0..n_parent).collect();
                p.0.shuffle(&mut order);
                let nest = match p.below(3) {
                    0 => NestCounts::Uniform(counts[0]),
                    1 => NestCounts::ByOrdinal(
                        order.iter().map(|&i| (i as u64 + 1, counts[i])).collect(),
                    ),
                    _ => NestCounts::ByLabel(
                        order
                            .iter()
                            .map(|&i| (parent.labels[i].clone(), counts[i]))
                            .collect(),
                    ),
                };
                let total = match &nest {
                    NestCounts::Uniform(k) => *k as usize * n_parent,
                    _ => counts.iter().sum::<u64>() as usize,
                };
                let labels = (1..=total).map(|k| format!("{name}{k}")).collect();
                (
                    UnitDecl {
                        name: name.clone(),
                        spec: UnitSpec::NestedIn {
                            parent: parent.name.clone(),
                            counts: nest,
                        },
                    },
                    labels,
                )
            }
            _ => {
                let n = p.range(1, 4);
                (UnitDecl::count(&name, n), vec![])
            }
        };
        let labels = if labels.is_empty() {
            let n = match &decl.spec {
                UnitSpec::Count(n) => *n,
                _ => 2,
            };
            (1..=n).map(|k| format!("{name}{k}")).collect()
        } else {
            labels
        };
        units.push(UnitInfo { name, labels });
        spec.unit_decls.push(decl);
    }

    let mut trts = Vec::new();
    for _ in 0..p.below(4) {
        let name = fresh_name(&mut p, &mut used, "t");
        let decl = match distinct_labels(&mut p, pool, 3).filter(|_| p.chance(1, 2)) {
            Some(ls) => TrtDecl {
                name: name.clone(),
                spec: TrtSpec::Labels(ls),
            },
            None => TrtDecl::count(&name, p.range(1, 4)),
        };
        trts.push(name);
        spec.trt_decls.push(decl);
    }

    if !units.is_empty() {
        for _ in 0..p.below(3) {
            let name = fresh_name(&mut p, &mut used, "r");
            let unit = &units[p.below(units.len())].name;
            spec.rcrd_decls.push(RcrdDecl::new(&name, unit));
        }
        p.0.shuffle(&mut trts);
        let mut rest = &trts[..p.below(trts.len() + 1)];
        while !rest.is_empty() {
            let take = 1 + p.below(rest.len().min(2));
            let target = &units[p.below(units.len())].name;
            spec.allot_decls.push(AllotDecl {
                sources: rest[..take].to_vec(),
                target: target.clone(),
            });
            rest = &rest[take..];
        }
    }

    if !spec.allot_decls.is_empty() && p.chance(3, 4) {
        let n = if p.chance(1, 2) {
            1
        } else {
            spec.allot_decls.len()
        };
        let orders = (0..n)
            .map(|_| {
                if p.chance(1, 2) {
                    Order::Random
                } else {
                    Order::Systematic
                }
            })
            .collect();
        let seed = p.chance(1, 2).then(|| p.0.next_u64() >> p.below(64));
        spec.assign_decl = Some(AssignDecl { orders, seed });
    }
    spec
}

pub fn arb_spec() -> impl Strategy<Value = DesignSpec> {
    (
        any::<u64>(),
        prop::collection::vec(label_strategy(), 0..12),
        prop::option::of(label_strategy()),
    )
        .prop_map(|(seed, pool, title)| build_spec(seed, &pool, title))
}

/// Splits every multi-declaration command into one command per declaration,
/// so invariants can be checked at a finer grain.
pub fn fine_commands(commands: &[Command]) -> Vec<Command> {
    let mut out = Vec::new();
    for c in commands {
        match c {
            Command::SetUnits(d) => {
                out.extend(d.iter().map(|x| Command::SetUnits(vec![x.clone()])))
            }
            Command::SetTrts(d) => out.extend(d.iter().map(|x| Command::SetTrts(vec![x.clone()]))),
            Command::SetRcrds(d) => {
                out.extend(d.iter().map(|x| Command::SetRcrds(vec![x.clone()])))
            }
            Command::AllotTrts(d) => {
                out.extend(d.iter().map(|x| Command::AllotTrts(vec![x.clone()])))
            }
            other => out.push(other.clone()),
        }
    }
    out
}

/// Structural invariants that must hold after every builder step. Returns a
/// description of the first failure.
pub fn check_structure(d: &Design) -> Result<(), String> {
    let fg = d.factor_graph();
    let lg = d.level_graph();
    if fg.topological_order().is_none() {
        return Err("factor graph has a cycle".into());
    }
    if lg.topological_order().is_none() {
        return Err("level graph has a cycle".into());
    }
    // forest: at most one nesting parent per unit
    for f in fg.factors() {
        let parents = fg
            .edges_of_kind(FactorEdgeKind::NestedIn)
            .filter(|e| e.from == f.id)
            .count();
        if parents > 1 {
            return Err(format!("unit `{}` has {parents} parents", f.name));
        }
    }
    // every level of a nested unit points at exactly one level of its parent
    let succ = lg.successors();
    for f in fg.with_role(Role::Unit) {
        let Some(parent) = fg.nesting_parent(f.id) else {
            continue;
        };
        for l in lg.levels_of(f.id) {
            let n = succ.get(&l.id).map_or(0, |ts| {
                ts.iter()
                    .filter(|t| lg.level(**t).is_some_and(|x| x.factor == parent))
                    .count()
            });
            if n != 1 {
                return Err(format!(
                    "level {} has {n} parent levels",
                    d.qualified_label(l.id)
                ));
            }
        }
    }
    let violations = d.validate();
    if !violations.is_empty() {
        return Err(format!("validation failed: {violations:?}"));
    }
    Ok(())
}

/// A design made of `roots.len()` independent unit trees. Each entry is a
/// chain of per-parent counts: `[3, 2]` means a root with 3 levels and a
/// child nested 2 per root level.
pub fn forest_design(roots: &[Vec<u64>]) -> Design {
    let mut decls = Vec::new();
    for (i, chain) in roots.iter().enumerate() {
        let mut parent: Option<String> = None;
        for (depth, &n) in chain.iter().enumerate() {
            let name = format!("tree{i}_u{depth}");
            decls.push(match &parent {
                None => UnitDecl::count(&name, n),
                Some(p) => UnitDecl::nested(&name, p, n),
            });
            parent = Some(name);
        }
    }
    let mut d = Design::new(None);
    d.set_units(&decls).expect("forest declarations are valid");
    d
}

/// Expected replicate counts for `n` members over `t` combos: the sorted
/// multiset of `n / t` and `n / t + 1`.
pub fn balanced_counts(n: usize, t: usize) -> Vec<usize> {
    let mut c = vec![n / t; t];
    for x in c.iter_mut().take(n % t) {
        *x += 1;
    }
    c.sort_unstable();
    c
}

pub fn distinct<'a>(it: impl IntoIterator<Item = &'a str>) -> BTreeSet<&'a str> {
    it.into_iter().collect()
}

// Property bodies shared by the test suites and the acceptance run.

pub fn prop_balance(n: usize, t: usize, seed: u64) -> Result<(), TestCaseError> {
    let slots = ged_core::engine::allocate_random(n, t, &mut Rng::seed_from_u64(seed));
    prop_assert_eq!(slots.len(), n);
    let mut counts = vec![0; t];
    for s in slots {
        counts[s] += 1;
    }
    counts.sort_unstable();
    prop_assert_eq!(counts, balanced_counts(n, t));
    Ok(())
}

pub fn prop_round_trip(spec: &DesignSpec) -> Result<(), TestCaseError> {
    let text = ged_core::dsl::print(spec);
    let back = ged_core::dsl::parse(&text);
    prop_assert_eq!(back.as_ref(), Ok(spec), "program:\n{}", text);
    prop_assert_eq!(ged_core::dsl::print(&back.unwrap()), text);
    Ok(())
}

/// Replays `a` a declaration at a time, interleaved (per `mix`) with
/// commands from `b` that may or may not apply. A failed command must leave
/// the design untouched; a successful one must keep it acyclic, a forest,
/// and valid.
pub fn prop_builder_steps(
    a: &DesignSpec,
    b: &DesignSpec,
    mix: &[bool],
) -> Result<(), TestCaseError> {
    let main = fine_commands(&ged_core::dsl::lower(a));
    let noise = fine_commands(&ged_core::dsl::lower(b));
    let mut main_it = main.iter();
    let mut noise_it = noise.iter();
    let mut steps: Vec<&Command> = Vec::new();
    for &take_noise in mix {
        if take_noise {
            steps.extend(noise_it.next());
        } else {
            steps.extend(main_it.next());
        }
    }
    steps.extend(main_it);

    let mut design = Design::new(a.title.as_deref());
    for cmd in steps {
        let before = design.clone();
        match design.apply(cmd) {
            Ok(_) => check_structure(&design)
                .map_err(|e| TestCaseError::fail(format!("after {}: {e}", cmd.verb())))?,
            Err(_) => prop_assert_eq!(&design, &before),
        }
    }
    Ok(())
}

/// A forest of two or more trees is refused, naming exactly the levels
/// outside the tree that holds the reported serving unit.
pub fn prop_forest_unservable(trees: &[Vec<u64>]) -> Result<(), TestCaseError> {
    let design = forest_design(trees);
    let Err(ged_core::ServeError::Unservable(u)) = ged_core::serve_table(&design) else {
        return Err(TestCaseError::fail("served a forest"));
    };
    // oracle: the leaf with most levels (first tree on ties) is kept
    let sizes: Vec<u64> = trees.iter().map(|c| c.iter().product()).collect();
    let max = *sizes.iter().max().unwrap();
    let kept = sizes.iter().position(|&s| s == max).unwrap();
    prop_assert_eq!(
        u.serving_unit.clone(),
        Some(format!("tree{kept}_u{}", trees[kept].len() - 1))
    );
    let prefix = format!("tree{kept}_");
    let expected: BTreeSet<String> = design
        .level_graph()
        .levels()
        .iter()
        .filter(|l| !design.factor(l.factor).unwrap().name.starts_with(&prefix))
        .map(|l| design.qualified_label(l.id))
        .collect();
    let got: BTreeSet<String> = u.unlinked.iter().cloned().collect();
    prop_assert_eq!(got.len(), u.unlinked.len());
    prop_assert_eq!(got, expected);
    Ok(())
}

pub fn arb_forest() -> impl Strategy<Value = Vec<Vec<u64>>> {
    prop::collection::vec(prop::collection::vec(1u64..4, 1..4), 2..5)
}
