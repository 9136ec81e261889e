use std::fmt::Write;

use crate::model::{Design, FactorEdgeKind, LevelId, Role};

const LEGEND: &str =
    "// nodes: unit = ellipse (lightblue), treatment = box (salmon), record = note (lightgrey)\n";

fn style(role: Role) -> &'static str {
    match role {
        Role::Unit => "shape=ellipse, style=filled, fillcolor=lightblue",
        Role::Treatment => "shape=box, style=filled, fillcolor=salmon",
        Role::Record => "shape=note, style=filled, fillcolor=lightgrey",
    }
}

fn edge_style(kind: FactorEdgeKind) -> &'static str {
    match kind {
        FactorEdgeKind::NestedIn => "solid",
        FactorEdgeKind::AllottedTo => "bold",
        FactorEdgeKind::MeasuredOn => "dashed",
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => {}
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// A label attribute value. A quoted DOT string cannot end in a backslash
/// (it would escape the closing quote), so such labels use the HTML form.
fn label(s: &str) -> String {
    if !s.ends_with('\\') {
        return quote(s);
    }
    let mut out = String::from("<");
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            c => out.push(c),
        }
    }
    out.push('>');
    out
}

/// Level node id: `factor:ordinal`, unique and always safe to quote.
fn level_id(design: &Design, level: LevelId) -> String {
    match design.level(level) {
        Some(l) => {
            let factor = design.factor(l.factor).map_or("?", |f| f.name.as_str());
            quote(&format!("{factor}:{}", l.ordinal))
        }
        None => quote(&format!("?:{}", level.0)),
    }
}

fn header(out: &mut String, what: &str, design: &Design) {
    match design.title() {
        Some(t) => writeln!(out, "// {what}: {}", t.replace('\n', " ")).unwrap(),
        None => writeln!(out, "// {what}").unwrap(),
    }
    out.push_str(LEGEND);
}

/// Factor graph as a DOT digraph. Nodes follow declaration order; edges
/// point from the dependent factor to its unit.
pub fn factor_graph_dot(design: &Design) -> String {
    let mut out = String::new();
    header(&mut out, "factor graph", design);
    out.push_str("// edges: nested_in = solid, allotted_to = bold, measured_on = dashed\n");
    out.push_str("digraph {\n");
    let fg = design.factor_graph();
    for f in fg.factors() {
        writeln!(
            out,
            "  {} [label={}, {}];",
            quote(&f.name),
            quote(&f.name),
            style(f.role)
        )
        .unwrap();
    }
    for e in fg.edges() {
        let (Some(from), Some(to)) = (fg.factor(e.from), fg.factor(e.to)) else {
            continue;
        };
        writeln!(
            out,
            "  {} -> {} [label={}, style={}];",
            quote(&from.name),
            quote(&to.name),
            quote(e.kind.as_str()),
            edge_style(e.kind)
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}

/// Level graph as a DOT digraph. Node ids are `factor:ordinal` and labels
/// carry the level label; nodes follow factor declaration order, then
/// ordinal.
pub fn level_graph_dot(design: &Design) -> String {
    let mut out = String::new();
    header(&mut out, "level graph", design);
    out.push_str("// edges: nesting = solid, assigned treatment = bold\n");
    out.push_str("digraph {\n");
    let fg = design.factor_graph();
    let lg = design.level_graph();
    for f in fg.factors() {
        for l in lg.levels_of(f.id) {
            writeln!(
                out,
                "  {} [label={}, {}];",
                level_id(design, l.id),
                label(&l.label),
                style(f.role)
            )
            .unwrap();
        }
    }
    for e in lg.edges() {
        let from_role = lg
            .level(e.from)
            .and_then(|l| fg.factor(l.factor))
            .map(|f| f.role);
        let style = if from_role == Some(Role::Treatment) {
            "bold"
        } else {
            "solid"
        };
        writeln!(
            out,
            "  {} -> {} [style={}];",
            level_id(design, e.from),
            level_id(design, e.to),
            style
        )
        .unwrap();
    }
    out.push_str("}\n");
    out
}
