//! Import extraction and classification.

mod expr;

use std::collections::BTreeSet;
use std::fmt;

use rustpython_ast::{self as ast, Ranged, Visitor};
use serde::{Deserialize, Serialize};

use crate::project::ParsedModule;
pub use expr::{build_import_expr, evaluate_expr, evaluate_with, ImportExpr, MissingResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportKind {
    PlainImport,
    FromImport,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    ModuleLevel,
    FunctionLevel,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ImportNode {
    /// Dotted module path; empty for `from . import x`.
    pub module_path: String,
    pub kind: ImportKind,
    /// Names bound by a from-import.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub names: Vec<String>,
    pub relative_level: u32,
    pub file: String,
    pub line: u32,
    pub scope: Scope,
}

impl ImportNode {
    pub fn top_module(&self) -> &str {
        self.module_path.split('.').next().unwrap_or("")
    }

    /// The statement as it could be executed on its own.
    pub fn statement(&self) -> String {
        match self.kind {
            ImportKind::PlainImport => format!("import {}", self.module_path),
            ImportKind::FromImport => format!(
                "from {}{} import {}",
                ".".repeat(self.relative_level as usize),
                self.module_path,
                self.names.join(", ")
            ),
        }
    }
}

impl fmt::Display for ImportNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dots = ".".repeat(self.relative_level as usize);
        write!(f, "{dots}{}", self.module_path)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImportClass {
    Internal,
    External,
}

pub fn classify_import(node: &ImportNode, local: &BTreeSet<String>) -> ImportClass {
    if node.relative_level > 0 || local.contains(node.top_module()) {
        ImportClass::Internal
    } else {
        ImportClass::External
    }
}

fn import_nodes(stmt: &ast::Stmt, module: &ParsedModule, file: &str, scope: Scope) -> Vec<ImportNode> {
    let line = module.line_of(stmt.range().start().to_usize());
    match stmt {
        ast::Stmt::Import(imp) => imp
            .names
            .iter()
            .map(|alias| ImportNode {
                module_path: alias.name.to_string(),
                kind: ImportKind::PlainImport,
                names: Vec::new(),
                relative_level: 0,
                file: file.to_string(),
                line,
                scope,
            })
            .collect(),
        ast::Stmt::ImportFrom(imp) => vec![ImportNode {
            module_path: imp.module.as_ref().map(|m| m.to_string()).unwrap_or_default(),
            kind: ImportKind::FromImport,
            names: imp.names.iter().map(|a| a.name.to_string()).collect(),
            relative_level: imp.level.as_ref().map_or(0, |l| l.to_u32()),
            file: file.to_string(),
            line,
            scope,
        }],
        _ => Vec::new(),
    }
}

/// Calls `f` on every statement nested in `stmt` (excluding `stmt`),
/// with the scope the nested statement runs in.
pub(crate) fn for_each_child<'a>(stmt: &'a ast::Stmt, scope: Scope, f: &mut dyn FnMut(&'a ast::Stmt, Scope)) {
    let mut each = |body: &'a [ast::Stmt], s: Scope| body.iter().for_each(|c| f(c, s));
    match stmt {
        ast::Stmt::FunctionDef(d) => each(&d.body, Scope::FunctionLevel),
        ast::Stmt::AsyncFunctionDef(d) => each(&d.body, Scope::FunctionLevel),
        ast::Stmt::ClassDef(d) => each(&d.body, scope),
        ast::Stmt::For(d) => {
            each(&d.body, scope);
            each(&d.orelse, scope);
        }
        ast::Stmt::AsyncFor(d) => {
            each(&d.body, scope);
            each(&d.orelse, scope);
        }
        ast::Stmt::While(d) => {
            each(&d.body, scope);
            each(&d.orelse, scope);
        }
        ast::Stmt::If(d) => {
            each(&d.body, scope);
            each(&d.orelse, scope);
        }
        ast::Stmt::With(d) => each(&d.body, scope),
        ast::Stmt::AsyncWith(d) => each(&d.body, scope),
        ast::Stmt::Match(d) => d.cases.iter().for_each(|c| each(&c.body, scope)),
        ast::Stmt::Try(d) => {
            each(&d.body, scope);
            for ast::ExceptHandler::ExceptHandler(h) in &d.handlers {
                each(&h.body, scope);
            }
            each(&d.orelse, scope);
            each(&d.finalbody, scope);
        }
        ast::Stmt::TryStar(d) => {
            each(&d.body, scope);
            for ast::ExceptHandler::ExceptHandler(h) in &d.handlers {
                each(&h.body, scope);
            }
            each(&d.orelse, scope);
            each(&d.finalbody, scope);
        }
        _ => {}
    }
}

/// Every import statement in the module, one node per imported module
/// path, in source order.
pub fn collect_imports(module: &ParsedModule, file: &str) -> Vec<ImportNode> {
    fn walk(stmt: &ast::Stmt, scope: Scope, module: &ParsedModule, file: &str, out: &mut Vec<ImportNode>) {
        out.extend(import_nodes(stmt, module, file, scope));
        for_each_child(stmt, scope, &mut |child, s| walk(child, s, module, file, out));
    }
    let mut out = Vec::new();
    for stmt in &module.body {
        walk(stmt, Scope::ModuleLevel, module, file, &mut out);
    }
    out.sort_by_key(|n| n.line);
    out
}

struct DynamicImports<'a> {
    module: &'a ParsedModule,
    lines: Vec<u32>,
}

impl Visitor for DynamicImports<'_> {
    descend_leaf_nodes!();

    fn visit_expr_call(&mut self, node: ast::ExprCall) {
        let name = match node.func.as_ref() {
            ast::Expr::Name(n) => Some(n.id.as_str()),
            ast::Expr::Attribute(a) => Some(a.attr.as_str()),
            _ => None,
        };
        if matches!(name, Some("__import__" | "import_module")) {
            self.lines.push(self.module.line_of(node.range.start().to_usize()));
        }
        self.generic_visit_expr_call(node);
    }
}

/// Lines calling `__import__` or `import_module`; such imports are not
/// analyzed.
pub fn dynamic_import_lines(module: &ParsedModule) -> Vec<u32> {
    let mut v = DynamicImports {
        module,
        lines: Vec::new(),
    };
    for stmt in module.body.iter().cloned() {
        v.visit_stmt(stmt);
    }
    v.lines.sort_unstable();
    v.lines
}
