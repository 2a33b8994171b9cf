//! Import-block analysis: groups external imports into an alternating
//! AND/OR tree keyed by the branch statements that enclose them.

use std::collections::{BTreeMap, HashMap, HashSet};

use rustpython_ast::{self as ast, Ranged};
use serde::Serialize;
use thiserror::Error;

use super::{for_each_child, import_nodes, ImportNode, Scope};
use crate::project::ParsedModule;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportExpr {
    All(Vec<ImportExpr>),
    Any(Vec<ImportExpr>),
    Leaf(ImportNode),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no result for import `{0}`")]
pub struct MissingResult(pub String);

impl ImportExpr {
    pub fn leaves(&self) -> Vec<&ImportNode> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a ImportNode>) {
        match self {
            ImportExpr::Leaf(n) => out.push(n),
            ImportExpr::All(c) | ImportExpr::Any(c) => c.iter().for_each(|e| e.collect_leaves(out)),
        }
    }

    /// True when the root is `All`, levels alternate `All`/`Any`, and no
    /// `All` has two direct leaves with the same module path.
    pub fn is_well_formed(&self) -> bool {
        fn all_ok(children: &[ImportExpr]) -> bool {
            let mut seen = HashSet::new();
            children.iter().all(|c| match c {
                ImportExpr::Leaf(n) => seen.insert(n.module_path.as_str()),
                ImportExpr::Any(arms) => arms.iter().all(|a| match a {
                    ImportExpr::All(inner) => all_ok(inner),
                    _ => false,
                }),
                ImportExpr::All(_) => false,
            })
        }
        match self {
            ImportExpr::All(children) => all_ok(children),
            _ => false,
        }
    }

    /// Leaves directly under the root `All`.
    pub fn block_free(&self) -> Vec<&ImportNode> {
        match self {
            ImportExpr::All(c) => c
                .iter()
                .filter_map(|e| match e {
                    ImportExpr::Leaf(n) => Some(n),
                    _ => None,
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

type Path = Vec<(usize, usize)>;

struct Occurrence {
    node: ImportNode,
    /// (branch statement offset, arm index), outermost first.
    path: Path,
}

/// Branch arms of a statement, or `None` when it is not a branch.
fn arms(stmt: &ast::Stmt) -> Option<Vec<Vec<&ast::Stmt>>> {
    fn try_arms<'a>(
        body: &'a [ast::Stmt],
        handlers: &'a [ast::ExceptHandler],
        orelse: &'a [ast::Stmt],
        finalbody: &'a [ast::Stmt],
    ) -> Vec<Vec<&'a ast::Stmt>> {
        let mut out = vec![body.iter().chain(orelse).chain(finalbody).collect()];
        for ast::ExceptHandler::ExceptHandler(h) in handlers {
            out.push(h.body.iter().chain(finalbody).collect());
        }
        out
    }
    match stmt {
        ast::Stmt::If(s) => Some(vec![s.body.iter().collect(), s.orelse.iter().collect()]),
        ast::Stmt::Try(s) => Some(try_arms(&s.body, &s.handlers, &s.orelse, &s.finalbody)),
        ast::Stmt::TryStar(s) => Some(try_arms(&s.body, &s.handlers, &s.orelse, &s.finalbody)),
        ast::Stmt::Match(s) => Some(s.cases.iter().map(|c| c.body.iter().collect()).collect()),
        _ => None,
    }
}

struct PrePass<'a> {
    module: &'a ParsedModule,
    file: &'a str,
    wanted: &'a HashSet<(String, u32)>,
    occurrences: Vec<Occurrence>,
    arm_counts: HashMap<usize, usize>,
}

impl PrePass<'_> {
    fn visit(&mut self, stmt: &ast::Stmt, scope: Scope, path: &mut Path) {
        for node in import_nodes(stmt, self.module, self.file, scope) {
            if self.wanted.contains(&(node.module_path.clone(), node.line)) {
                self.occurrences.push(Occurrence {
                    node,
                    path: path.clone(),
                });
            }
        }
        if let Some(arms) = arms(stmt) {
            let id = stmt.range().start().to_usize();
            self.arm_counts.insert(id, arms.len());
            for (k, arm) in arms.into_iter().enumerate() {
                path.push((id, k));
                for s in arm {
                    self.visit(s, scope, path);
                }
                path.pop();
            }
        } else {
            let mut children = Vec::new();
            for_each_child(stmt, scope, &mut |c, s| children.push((c, s)));
            for (c, s) in children {
                self.visit(c, s, path);
            }
        }
    }
}

fn group(occs: &[&Occurrence], depth: usize, arm_counts: &HashMap<usize, usize>) -> ImportExpr {
    let mut children = Vec::new();
    let mut seen = HashSet::new();
    let mut blocks: BTreeMap<usize, Vec<&Occurrence>> = BTreeMap::new();
    for occ in occs {
        match occ.path.get(depth) {
            None => {
                if seen.insert(occ.node.module_path.clone()) {
                    children.push(ImportExpr::Leaf(occ.node.clone()));
                }
            }
            Some(&(id, _)) => blocks.entry(id).or_default().push(occ),
        }
    }
    for (id, members) in blocks {
        let n = arm_counts[&id];
        let arms = (0..n)
            .map(|k| {
                let in_arm: Vec<&Occurrence> = members
                    .iter()
                    .copied()
                    .filter(|o| o.path[depth].1 == k)
                    .collect();
                group(&in_arm, depth + 1, arm_counts)
            })
            .collect();
        children.push(ImportExpr::Any(arms));
    }
    ImportExpr::All(children)
}

/// Builds the import expression over the given external imports of a
/// parsed module. Imports are matched by module path and line.
pub fn build_import_expr(module: &ParsedModule, external: &[ImportNode]) -> ImportExpr {
    let wanted: HashSet<(String, u32)> = external
        .iter()
        .map(|n| (n.module_path.clone(), n.line))
        .collect();
    let file = external.first().map(|n| n.file.as_str()).unwrap_or("");
    let mut pre = PrePass {
        module,
        file,
        wanted: &wanted,
        occurrences: Vec::new(),
        arm_counts: HashMap::new(),
    };
    let mut path = Vec::new();
    for stmt in &module.body {
        pre.visit(stmt, Scope::ModuleLevel, &mut path);
    }
    let occs: Vec<&Occurrence> = pre.occurrences.iter().collect();
    group(&occs, 0, &pre.arm_counts)
}

/// Evaluates with a lookup callback. Every leaf is looked up, so a
/// missing result is reported even where short-circuiting would skip it.
pub fn evaluate_with(
    e: &ImportExpr,
    lookup: &mut dyn FnMut(&ImportNode) -> Option<bool>,
) -> Result<bool, MissingResult> {
    match e {
        ImportExpr::Leaf(n) => lookup(n).ok_or_else(|| MissingResult(n.to_string())),
        ImportExpr::All(children) => {
            let mut value = true;
            for c in children {
                value &= evaluate_with(c, lookup)?;
            }
            Ok(value)
        }
        ImportExpr::Any(children) => {
            if children.is_empty() {
                return Ok(true);
            }
            let mut value = false;
            for c in children {
                value |= evaluate_with(c, lookup)?;
            }
            Ok(value)
        }
    }
}

pub fn evaluate_expr(e: &ImportExpr, results: &HashMap<ImportNode, bool>) -> Result<bool, MissingResult> {
    evaluate_with(e, &mut |n| results.get(n).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imports::{collect_imports, ImportKind};
    use crate::project::parse_source;

    fn expr_of(src: &str) -> ImportExpr {
        let m = parse_source(src.as_bytes(), "m.py").unwrap();
        let nodes = collect_imports(&m, "m.py");
        build_import_expr(&m, &nodes)
    }

    fn shape(e: &ImportExpr) -> String {
        match e {
            ImportExpr::Leaf(n) => n.module_path.clone(),
            ImportExpr::All(c) => format!("All({})", c.iter().map(shape).collect::<Vec<_>>().join(",")),
            ImportExpr::Any(c) => format!("Any({})", c.iter().map(shape).collect::<Vec<_>>().join(",")),
        }
    }

    #[test]
    fn unbranched() {
        assert_eq!(shape(&expr_of("import a\nimport b\nimport a\n")), "All(a,b)");
    }

    #[test]
    fn figure_three_shape() {
        let src = "\
import os
if cond:
    import p
    try:
        import t
    except ImportError:
        import e
else:
    import f
";
        let e = expr_of(src);
        assert_eq!(shape(&e), "All(os,Any(All(p,Any(All(t),All(e))),All(f)))");
        assert!(e.is_well_formed());
    }

    #[test]
    fn elif_finally_match_and_loops() {
        let src = "\
for x in y:
    import loop_a
if a:
    import one
elif b:
    import two
try:
    import t1
except ValueError:
    pass
except KeyError:
    import t3
finally:
    import fin
def f():
    with x:
        import deferred
match v:
    case 1:
        import m1
    case _:
        pass
";
        assert_eq!(
            shape(&expr_of(src)),
            "All(loop_a,deferred,Any(All(one),All(Any(All(two),All()))),\
             Any(All(t1,fin),All(fin),All(t3,fin)),Any(All(m1),All()))"
        );
    }

    #[test]
    fn only_selected_nodes_are_used() {
        let m = parse_source(b"import a\nif x:\n    from . import b\n", "m.py").unwrap();
        let nodes: Vec<_> = collect_imports(&m, "m.py")
            .into_iter()
            .filter(|n| n.relative_level == 0)
            .collect();
        assert_eq!(shape(&build_import_expr(&m, &nodes)), "All(a)");
    }

    fn leaf(name: &str) -> ImportExpr {
        ImportExpr::Leaf(ImportNode {
            module_path: name.into(),
            kind: ImportKind::PlainImport,
            names: Vec::new(),
            relative_level: 0,
            file: "m.py".into(),
            line: 1,
            scope: Scope::ModuleLevel,
        })
    }

    #[test]
    fn evaluation() {
        let results: HashMap<ImportNode, bool> = [("t", true), ("f", false)]
            .iter()
            .map(|(k, v)| match leaf(k) {
                ImportExpr::Leaf(n) => (n, *v),
                _ => unreachable!(),
            })
            .collect();
        let all = |c: Vec<ImportExpr>| ImportExpr::All(c);
        let any = |c: Vec<ImportExpr>| ImportExpr::Any(c);
        assert!(evaluate_expr(&all(vec![leaf("t"), leaf("t")]), &results).unwrap());
        assert!(evaluate_expr(&all(vec![leaf("t"), any(vec![all(vec![leaf("f")]), all(vec![leaf("t")])])]), &results).unwrap());
        assert!(!evaluate_expr(&all(vec![leaf("f")]), &results).unwrap());
        assert!(evaluate_expr(&all(vec![]), &results).unwrap());
        assert!(evaluate_expr(&any(vec![]), &results).unwrap());
        assert_eq!(
            evaluate_expr(&all(vec![leaf("f"), leaf("zz")]), &results),
            Err(MissingResult("zz".into()))
        );
    }
}
