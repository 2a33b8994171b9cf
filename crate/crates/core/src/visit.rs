//! The generated AST visitor stops at keywords, `with` items,
//! comprehensions and match cases. This fills in the descent.

macro_rules! descend_leaf_nodes {
    () => {
        fn visit_keyword(&mut self, node: rustpython_ast::Keyword) {
            self.visit_expr(node.value);
        }

        fn visit_withitem(&mut self, node: rustpython_ast::WithItem) {
            self.visit_expr(node.context_expr);
            if let Some(vars) = node.optional_vars {
                self.visit_expr(*vars);
            }
        }

        fn visit_comprehension(&mut self, node: rustpython_ast::Comprehension) {
            self.visit_expr(node.iter);
            for cond in node.ifs {
                self.visit_expr(cond);
            }
        }

        fn visit_match_case(&mut self, node: rustpython_ast::MatchCase) {
            if let Some(guard) = node.guard {
                self.visit_expr(*guard);
            }
            for stmt in node.body {
                self.visit_stmt(stmt);
            }
        }
    };
}
