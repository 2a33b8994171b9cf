//! Random Python programs with nested branches, and a top-down reference
//! walker that builds the expected import-block tree straight from the
//! syntax tree.

use std::collections::BTreeSet;

use confscan::imports::{build_import_expr, classify_import, collect_imports, ImportClass, ImportExpr, ImportNode};
use confscan::project::{parse_source, ParsedModule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustpython_parser::{ast, parse, Mode};

pub const LOCAL: &str = "localmod";

pub struct Generator<R: Rng> {
    rng: R,
    counter: usize,
    lines: Vec<String>,
}

impl<R: Rng> Generator<R> {
    pub fn new(rng: R) -> Self {
        Generator {
            rng,
            counter: 0,
            lines: Vec::new(),
        }
    }

    fn push(&mut self, indent: usize, text: &str) {
        self.lines.push(format!("{}{}", "    ".repeat(indent), text));
    }

    fn simple(&mut self, indent: usize) {
        self.counter += 1;
        let n = self.counter;
        let stmt = match self.rng.gen_range(0..8) {
            0 | 1 => format!("import ext{n}"),
            2 => format!("from ext{n}.sub import thing"),
            3 => format!("import ext{n}.a as alias{n}, ext{n}b"),
            4 => format!("import {LOCAL}"),
            5 => "from . import sibling".to_string(),
            6 => "value = 1".to_string(),
            _ => "pass".to_string(),
        };
        self.push(indent, &stmt);
    }

    fn block(&mut self, indent: usize, depth: usize) {
        let n = self.rng.gen_range(1..=3);
        for _ in 0..n {
            self.statement(indent, depth);
        }
    }

    fn statement(&mut self, indent: usize, depth: usize) {
        if depth >= 4 || self.rng.gen_bool(0.55) {
            self.simple(indent);
            return;
        }
        match self.rng.gen_range(0..8) {
            0 | 1 => {
                self.push(indent, "if cond():");
                self.block(indent + 1, depth + 1);
                let elifs = self.rng.gen_range(0..=2);
                for _ in 0..elifs {
                    self.push(indent, "elif other():");
                    self.block(indent + 1, depth + 1);
                }
                if self.rng.gen_bool(0.5) {
                    self.push(indent, "else:");
                    self.block(indent + 1, depth + 1);
                }
            }
            2 | 3 => {
                self.push(indent, "try:");
                self.block(indent + 1, depth + 1);
                let handlers = self.rng.gen_range(1..=2);
                for h in 0..handlers {
                    self.push(indent, if h == 0 { "except ImportError:" } else { "except Exception:" });
                    self.block(indent + 1, depth + 1);
                }
                if self.rng.gen_bool(0.3) {
                    self.push(indent, "else:");
                    self.block(indent + 1, depth + 1);
                }
                if self.rng.gen_bool(0.3) {
                    self.push(indent, "finally:");
                    self.block(indent + 1, depth + 1);
                }
            }
            4 => {
                self.push(indent, "for i in range(3):");
                self.block(indent + 1, depth + 1);
            }
            5 => {
                self.push(indent, "with ctx():");
                self.block(indent + 1, depth + 1);
            }
            6 => {
                self.counter += 1;
                let n = self.counter;
                self.push(indent, &format!("def func{n}():"));
                self.block(indent + 1, depth + 1);
            }
            _ => {
                self.push(indent, "while running():");
                self.block(indent + 1, depth + 1);
            }
        }
    }

    /// A fresh program of a few top-level statements.
    pub fn program(&mut self) -> String {
        self.lines.clear();
        let n = self.rng.gen_range(2..=6);
        for _ in 0..n {
            self.statement(0, 0);
        }
        let mut out = self.lines.join("\n");
        out.push('\n');
        out
    }
}

/// Canonical, order-independent rendering of an import-block tree.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Canon {
    Leaf(String, u32),
    Any(Vec<Canon>),
    All(Vec<Canon>),
}

impl Canon {
    fn sorted(self) -> Canon {
        match self {
            Canon::All(mut c) => {
                c.sort();
                Canon::All(c)
            }
            Canon::Any(mut c) => {
                c.sort();
                Canon::Any(c)
            }
            leaf => leaf,
        }
    }
}

pub fn canon_of(e: &ImportExpr) -> Canon {
    match e {
        ImportExpr::Leaf(n) => Canon::Leaf(n.module_path.clone(), n.line),
        ImportExpr::All(c) => Canon::All(c.iter().map(canon_of).collect()).sorted(),
        ImportExpr::Any(c) => Canon::Any(c.iter().map(canon_of).collect()).sorted(),
    }
}

struct Walker {
    line_starts: Vec<usize>,
}

impl Walker {
    fn line(&self, offset: usize) -> u32 {
        self.line_starts.iter().filter(|&&s| s <= offset).count() as u32
    }

    fn is_external(module: &str, level: u32) -> bool {
        level == 0 && module.split('.').next() != Some(LOCAL)
    }

    fn import_leaves(&self, stmt: &ast::Stmt) -> Vec<(String, u32)> {
        use ast::Ranged;
        let line = self.line(stmt.range().start().to_usize());
        match stmt {
            ast::Stmt::Import(i) => i
                .names
                .iter()
                .map(|a| a.name.to_string())
                .filter(|m| Self::is_external(m, 0))
                .map(|m| (m, line))
                .collect(),
            ast::Stmt::ImportFrom(i) => {
                let module = i.module.as_ref().map(|m| m.to_string()).unwrap_or_default();
                let level = i.level.as_ref().map_or(0, |l| l.to_u32());
                if Self::is_external(&module, level) {
                    vec![(module, line)]
                } else {
                    Vec::new()
                }
            }
            _ => Vec::new(),
        }
    }

    fn has_external(&self, stmts: &[&ast::Stmt]) -> bool {
        let block = self.block(stmts);
        fn nonempty(c: &Canon) -> bool {
            match c {
                Canon::Leaf(..) => true,
                Canon::All(v) | Canon::Any(v) => v.iter().any(nonempty),
            }
        }
        nonempty(&block)
    }

    /// Expected `All` for a straight-line block, walking top-down.
    fn block(&self, stmts: &[&ast::Stmt]) -> Canon {
        let mut leaves: Vec<(String, u32)> = Vec::new();
        let mut anys = Vec::new();
        for s in stmts {
            self.statement(s, &mut leaves, &mut anys);
        }
        let mut seen = BTreeSet::new();
        let mut children: Vec<Canon> = leaves
            .into_iter()
            .filter(|(m, _)| seen.insert(m.clone()))
            .map(|(m, l)| Canon::Leaf(m, l))
            .collect();
        children.extend(anys);
        Canon::All(children).sorted()
    }

    fn statement(&self, s: &ast::Stmt, leaves: &mut Vec<(String, u32)>, anys: &mut Vec<Canon>) {
        let branch = |arms: Vec<Vec<&ast::Stmt>>, anys: &mut Vec<Canon>| {
            if arms.iter().any(|a| self.has_external(a)) {
                anys.push(Canon::Any(arms.iter().map(|a| self.block(a)).collect()).sorted());
            }
        };
        let inline = |body: &[ast::Stmt], leaves: &mut Vec<(String, u32)>, anys: &mut Vec<Canon>| {
            for c in body {
                self.statement(c, leaves, anys);
            }
        };
        match s {
            ast::Stmt::Import(_) | ast::Stmt::ImportFrom(_) => leaves.extend(self.import_leaves(s)),
            ast::Stmt::If(i) => branch(vec![i.body.iter().collect(), i.orelse.iter().collect()], anys),
            ast::Stmt::Try(t) => {
                let mut arms: Vec<Vec<&ast::Stmt>> =
                    vec![t.body.iter().chain(&t.orelse).chain(&t.finalbody).collect()];
                for ast::ExceptHandler::ExceptHandler(h) in &t.handlers {
                    arms.push(h.body.iter().chain(&t.finalbody).collect());
                }
                branch(arms, anys);
            }
            ast::Stmt::For(f) => {
                inline(&f.body, leaves, anys);
                inline(&f.orelse, leaves, anys);
            }
            ast::Stmt::While(w) => {
                inline(&w.body, leaves, anys);
                inline(&w.orelse, leaves, anys);
            }
            ast::Stmt::With(w) => inline(&w.body, leaves, anys),
            ast::Stmt::FunctionDef(d) => inline(&d.body, leaves, anys),
            ast::Stmt::ClassDef(d) => inline(&d.body, leaves, anys),
            _ => {}
        }
    }
}

/// Expected tree for `src`, computed without the library.
pub fn reference_tree(src: &str) -> Canon {
    let module = match parse(src, Mode::Module, "gen.py").expect("generated program parses") {
        ast::Mod::Module(m) => m,
        _ => unreachable!(),
    };
    let walker = Walker {
        line_starts: std::iter::once(0)
            .chain(src.match_indices('\n').map(|(i, _)| i + 1))
            .collect(),
    };
    let body: Vec<&ast::Stmt> = module.body.iter().collect();
    walker.block(&body)
}

/// Parses `src` and keeps its external import nodes.
pub fn external_nodes(src: &str) -> (ParsedModule, Vec<ImportNode>) {
    let m = parse_source(src.as_bytes(), "gen.py").unwrap();
    let local: BTreeSet<String> = [LOCAL.to_string()].into();
    let ext = collect_imports(&m, "gen.py")
        .into_iter()
        .filter(|n| classify_import(n, &local) == ImportClass::External)
        .collect();
    (m, ext)
}

pub fn any_depth(e: &ImportExpr) -> usize {
    match e {
        ImportExpr::Leaf(_) => 0,
        ImportExpr::All(c) => c.iter().map(any_depth).max().unwrap_or(0),
        ImportExpr::Any(c) => 1 + c.iter().map(any_depth).max().unwrap_or(0),
    }
}

pub struct WalkStats {
    pub files: usize,
    pub nested: usize,
    pub max_depth: usize,
}

/// Builds the import expression of `count` generated programs and
/// compares structure and leaf set with the reference walker.
pub fn check_against_reference(seed: u64, count: usize) -> Result<WalkStats, String> {
    let mut gen = Generator::new(ChaCha8Rng::seed_from_u64(seed));
    let mut stats = WalkStats { files: 0, nested: 0, max_depth: 0 };
    for _ in 0..count {
        let src = gen.program();
        let (m, ext) = external_nodes(&src);
        let expr = build_import_expr(&m, &ext);
        if canon_of(&expr) != reference_tree(&src) {
            return Err(format!("structure differs for program:\n{src}"));
        }
        if !expr.is_well_formed() {
            return Err(format!("malformed tree for program:\n{src}"));
        }
        let got: BTreeSet<(String, u32)> = expr.leaves().iter().map(|n| (n.module_path.clone(), n.line)).collect();
        let want: BTreeSet<(String, u32)> = ext.iter().map(|n| (n.module_path.clone(), n.line)).collect();
        if got != want {
            return Err(format!("leaf set differs for program:\n{src}"));
        }
        let depth = any_depth(&expr);
        stats.files += 1;
        stats.nested += usize::from(depth >= 2);
        stats.max_depth = stats.max_depth.max(depth);
    }
    Ok(stats)
}
