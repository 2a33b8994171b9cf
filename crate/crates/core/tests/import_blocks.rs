mod common;

use std::collections::HashMap;

use common::programs::{check_against_reference, external_nodes};
use confscan::imports::{build_import_expr, evaluate_expr, ImportExpr, ImportKind, ImportNode, Scope};
use proptest::prelude::*;

#[test]
fn matches_reference_walker() {
    let stats = check_against_reference(7, 500).unwrap();
    assert!(stats.nested >= 100, "only {} programs with nested blocks", stats.nested);
}

#[test]
fn duplicate_in_block_is_one_leaf() {
    let (m, ext) = external_nodes("import a\nimport a\nif x:\n    import b\n    import b\nelse:\n    import b\n");
    let expr = build_import_expr(&m, &ext);
    assert_eq!(expr.leaves().len(), 3);
}

fn leaf(id: usize) -> ImportNode {
    ImportNode {
        module_path: format!("m{id}"),
        kind: ImportKind::PlainImport,
        names: Vec::new(),
        relative_level: 0,
        file: "f.py".into(),
        line: id as u32 + 1,
        scope: Scope::ModuleLevel,
    }
}

fn arb_expr() -> impl Strategy<Value = ImportExpr> {
    let leaf_s = (0usize..12).prop_map(|i| ImportExpr::Leaf(leaf(i)));
    leaf_s.prop_recursive(4, 48, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 0..4).prop_map(ImportExpr::All),
            prop::collection::vec(inner, 0..4).prop_map(ImportExpr::Any),
        ]
    })
}

fn naive(e: &ImportExpr, truth: &[bool]) -> bool {
    match e {
        ImportExpr::Leaf(n) => truth[n.line as usize - 1],
        ImportExpr::All(c) => c.iter().all(|x| naive(x, truth)),
        ImportExpr::Any(c) => c.is_empty() || c.iter().any(|x| naive(x, truth)),
    }
}

fn results(truth: &[bool]) -> HashMap<ImportNode, bool> {
    truth.iter().enumerate().map(|(i, &t)| (leaf(i), t)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn evaluation_matches_naive(e in arb_expr(), truth in prop::collection::vec(any::<bool>(), 12)) {
        prop_assert_eq!(evaluate_expr(&e, &results(&truth)).unwrap(), naive(&e, &truth));
    }

    #[test]
    fn evaluation_is_monotone(e in arb_expr(), truth in prop::collection::vec(any::<bool>(), 12), flip in 0usize..12) {
        let before = evaluate_expr(&e, &results(&truth)).unwrap();
        let mut raised = truth.clone();
        raised[flip] = true;
        let after = evaluate_expr(&e, &results(&raised)).unwrap();
        prop_assert!(!before || after);
    }
}
