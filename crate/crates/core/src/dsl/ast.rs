use crate::model::Order;

/// A parsed `.ged` program. Each list keeps source order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DesignSpec {
    pub title: Option<String>,
    pub unit_decls: Vec<UnitDecl>,
    pub trt_decls: Vec<TrtDecl>,
    pub rcrd_decls: Vec<RcrdDecl>,
    pub allot_decls: Vec<AllotDecl>,
    pub assign_decl: Option<AssignDecl>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitDecl {
    pub name: String,
    pub spec: UnitSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum UnitSpec {
    Count(u64),
    Labels(Vec<String>),
    NestedIn { parent: String, counts: NestCounts },
}

/// Number of child levels per parent level.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NestCounts {
    Uniform(u64),
    /// `(parent ordinal, count)` pairs.
    ByOrdinal(Vec<(u64, u64)>),
    /// `(parent label, count)` pairs.
    ByLabel(Vec<(String, u64)>),
}

impl UnitDecl {
    pub fn count(name: &str, n: u64) -> Self {
        UnitDecl {
            name: name.to_owned(),
            spec: UnitSpec::Count(n),
        }
    }

    pub fn labels(name: &str, labels: &[&str]) -> Self {
        UnitDecl {
            name: name.to_owned(),
            spec: UnitSpec::Labels(labels.iter().map(|s| s.to_string()).collect()),
        }
    }

    pub fn nested(name: &str, parent: &str, per_parent: u64) -> Self {
        UnitDecl {
            name: name.to_owned(),
            spec: UnitSpec::NestedIn {
                parent: parent.to_owned(),
                counts: NestCounts::Uniform(per_parent),
            },
        }
    }

    pub fn nested_by_ordinal(name: &str, parent: &str, counts: &[(u64, u64)]) -> Self {
        UnitDecl {
            name: name.to_owned(),
            spec: UnitSpec::NestedIn {
                parent: parent.to_owned(),
                counts: NestCounts::ByOrdinal(counts.to_vec()),
            },
        }
    }

    pub fn nested_by_label(name: &str, parent: &str, counts: &[(&str, u64)]) -> Self {
        UnitDecl {
            name: name.to_owned(),
            spec: UnitSpec::NestedIn {
                parent: parent.to_owned(),
                counts: NestCounts::ByLabel(
                    counts.iter().map(|(l, n)| (l.to_string(), *n)).collect(),
                ),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrtDecl {
    pub name: String,
    pub spec: TrtSpec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrtSpec {
    Count(u64),
    Labels(Vec<String>),
}

impl TrtDecl {
    pub fn count(name: &str, n: u64) -> Self {
        TrtDecl {
            name: name.to_owned(),
            spec: TrtSpec::Count(n),
        }
    }

    pub fn labels(name: &str, labels: &[&str]) -> Self {
        TrtDecl {
            name: name.to_owned(),
            spec: TrtSpec::Labels(labels.iter().map(|s| s.to_string()).collect()),
        }
    }
}

/// `name on unit`
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RcrdDecl {
    pub name: String,
    pub unit: String,
}

impl RcrdDecl {
    pub fn new(name: &str, unit: &str) -> Self {
        RcrdDecl {
            name: name.to_owned(),
            unit: unit.to_owned(),
        }
    }
}

/// `a:b ~ unit` reads "a crossed with b, allotted to unit".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AllotDecl {
    pub sources: Vec<String>,
    pub target: String,
}

impl AllotDecl {
    pub fn new(sources: &[&str], target: &str) -> Self {
        AllotDecl {
            sources: sources.iter().map(|s| s.to_string()).collect(),
            target: target.to_owned(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignDecl {
    pub orders: Vec<Order>,
    pub seed: Option<u64>,
}
