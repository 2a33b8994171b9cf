//! Static facts about a `setup.py`. The script is never executed.

use rustpython_ast::{self as ast, Visitor};

use super::sources::ParsedModule;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SetupFacts {
    /// Literal entries of `setup_requires=[...]`.
    pub setup_requires: Vec<String>,
    /// Files opened or read through a literal path, with their line.
    pub file_refs: Vec<(String, u32)>,
    /// `setup_requires` or `install_requires` given as a non-literal.
    pub dynamic: bool,
}

fn string_literal(e: &ast::Expr) -> Option<String> {
    match e {
        ast::Expr::Constant(c) => match &c.value {
            ast::Constant::Str(s) => Some(s.clone()),
            _ => None,
        },
        _ => None,
    }
}

fn string_list(e: &ast::Expr) -> Option<Vec<String>> {
    let elts = match e {
        ast::Expr::List(l) => &l.elts,
        ast::Expr::Tuple(t) => &t.elts,
        _ => return None,
    };
    elts.iter().map(string_literal).collect()
}

fn callee_name(func: &ast::Expr) -> Option<&str> {
    match func {
        ast::Expr::Name(n) => Some(n.id.as_str()),
        ast::Expr::Attribute(a) => Some(a.attr.as_str()),
        _ => None,
    }
}

struct Collector<'a> {
    module: &'a ParsedModule,
    facts: SetupFacts,
}

impl Collector<'_> {
    fn line(&self, range: ast::text_size::TextRange) -> u32 {
        self.module.line_of(range.start().to_usize())
    }
}

impl Visitor for Collector<'_> {
    descend_leaf_nodes!();

    fn visit_expr_call(&mut self, node: ast::ExprCall) {
        let line = self.line(node.range);
        match callee_name(&node.func) {
            Some("open") => {
                if let Some(path) = node.args.first().and_then(string_literal) {
                    self.facts.file_refs.push((path, line));
                }
            }
            Some("read_text" | "read_bytes") => {
                // Path("README.md").read_text()
                if let ast::Expr::Attribute(attr) = node.func.as_ref() {
                    if let ast::Expr::Call(inner) = attr.value.as_ref() {
                        if let Some(path) = inner.args.first().and_then(string_literal) {
                            self.facts.file_refs.push((path, line));
                        }
                    }
                }
            }
            Some("setup") => {
                for kw in &node.keywords {
                    match kw.arg.as_ref().map(|a| a.as_str()) {
                        Some("setup_requires") => match string_list(&kw.value) {
                            Some(list) => self.facts.setup_requires.extend(list),
                            None => self.facts.dynamic = true,
                        },
                        Some("install_requires") if string_list(&kw.value).is_none() => {
                            self.facts.dynamic = true
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        }
        self.generic_visit_expr_call(node);
    }
}

pub fn analyze_setup(module: &ParsedModule) -> SetupFacts {
    let mut collector = Collector {
        module,
        facts: SetupFacts::default(),
    };
    for stmt in module.body.iter().cloned() {
        collector.visit_stmt(stmt);
    }
    collector.facts
}
