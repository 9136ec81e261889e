use std::fmt::Write;

use super::ast::*;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn label_list(labels: &[String]) -> String {
    let quoted: Vec<String> = labels.iter().map(|l| quote(l)).collect();
    format!("[{}]", quoted.join(", "))
}

/// Renders a spec in canonical form: one block per verb, in the order
/// units, trts, rcrds, allot, assign. Empty blocks are omitted.
pub fn print(spec: &DesignSpec) -> String {
    let mut out = String::new();
    match &spec.title {
        Some(t) => writeln!(out, "design {} {{", quote(t)).unwrap(),
        None => out.push_str("design {\n"),
    }
    if !spec.unit_decls.is_empty() {
        out.push_str("  units {\n");
        for d in &spec.unit_decls {
            let value = match &d.spec {
                UnitSpec::Count(n) => n.to_string(),
                UnitSpec::Labels(l) => label_list(l),
                UnitSpec::NestedIn { parent, counts } => {
                    let counts = match counts {
                        NestCounts::Uniform(k) => k.to_string(),
                        NestCounts::ByOrdinal(pairs) => pairs
                            .iter()
                            .map(|(o, k)| format!("{o} ~ {k}"))
                            .collect::<Vec<_>>()
                            .join(", "),
                        NestCounts::ByLabel(pairs) => pairs
                            .iter()
                            .map(|(l, k)| format!("{} ~ {k}", quote(l)))
                            .collect::<Vec<_>>()
                            .join(", "),
                    };
                    format!("nested_in({parent}, {counts})")
                }
            };
            writeln!(out, "    {} = {}", d.name, value).unwrap();
        }
        out.push_str("  }\n");
    }
    if !spec.trt_decls.is_empty() {
        out.push_str("  trts {\n");
        for d in &spec.trt_decls {
            let value = match &d.spec {
                TrtSpec::Count(n) => n.to_string(),
                TrtSpec::Labels(l) => label_list(l),
            };
            writeln!(out, "    {} = {}", d.name, value).unwrap();
        }
        out.push_str("  }\n");
    }
    if !spec.rcrd_decls.is_empty() {
        out.push_str("  rcrds {\n");
        for d in &spec.rcrd_decls {
            writeln!(out, "    {} on {}", d.name, d.unit).unwrap();
        }
        out.push_str("  }\n");
    }
    if !spec.allot_decls.is_empty() {
        out.push_str("  allot {\n");
        for d in &spec.allot_decls {
            writeln!(out, "    {} ~ {}", d.sources.join(":"), d.target).unwrap();
        }
        out.push_str("  }\n");
    }
    if let Some(a) = &spec.assign_decl {
        let orders = if a.orders.len() == 1 {
            a.orders[0].to_string()
        } else {
            let names: Vec<&str> = a.orders.iter().map(|o| o.as_str()).collect();
            format!("[{}]", names.join(", "))
        };
        match a.seed {
            Some(seed) => writeln!(out, "  assign {orders} seed {seed}").unwrap(),
            None => writeln!(out, "  assign {orders}").unwrap(),
        }
    }
    out.push_str("}\n");
    out
}
