use std::cmp::Ordering;

use confscan::pep::{
    compare_versions, normalize_name, parse_specifier_set, parse_version, Specifier, SpecifierSet,
    Version,
};
use proptest::prelude::*;
use regex::Regex;
use serde::Deserialize;

#[derive(Deserialize)]
struct Vectors {
    ordering: Vec<OrderCase>,
    matching: Vec<MatchCase>,
}

#[derive(Deserialize)]
struct OrderCase {
    a: String,
    b: String,
    ordering: String,
}

#[derive(Deserialize)]
struct MatchCase {
    specifiers: String,
    version: String,
    matches: bool,
}

fn vectors() -> Vectors {
    serde_json::from_str(include_str!("data/pep_conformance.json")).unwrap()
}

#[test]
fn ordering_vectors() {
    let vectors = vectors();
    assert!(vectors.ordering.len() >= 30);
    for case in &vectors.ordering {
        let a = parse_version(&case.a).unwrap();
        let b = parse_version(&case.b).unwrap();
        let want = match case.ordering.as_str() {
            "less" => Ordering::Less,
            "greater" => Ordering::Greater,
            _ => Ordering::Equal,
        };
        assert_eq!(compare_versions(&a, &b), want, "{} vs {}", case.a, case.b);
        assert_eq!(compare_versions(&b, &a), want.reverse());
    }
}

#[test]
fn matching_vectors() {
    let vectors = vectors();
    assert!(vectors.matching.len() >= 30);
    for case in &vectors.matching {
        let set = parse_specifier_set(&case.specifiers).unwrap();
        let v = parse_version(&case.version).unwrap();
        assert_eq!(set.matches(&v), case.matches, "{:?} contains {}", case.specifiers, case.version);
    }
}

fn canonical_name_oracle(raw: &str) -> String {
    Regex::new(r"[-_.]+").unwrap().replace_all(raw, "-").to_lowercase()
}

#[test]
fn name_normalization_matches_regex_oracle() {
    for raw in ["A__b..c", "PyYAML", "zope.interface", "Foo-_-Bar", "x", "a.b_c-d"] {
        assert_eq!(normalize_name(raw).unwrap().as_str(), canonical_name_oracle(raw));
    }
}

fn arb_version() -> impl Strategy<Value = Version> {
    (
        prop::collection::vec(0u64..4, 1..4),
        prop::option::of((0usize..3, 0u64..3)),
        prop::option::of(0u64..3),
        prop::option::of(0u64..3),
    )
        .prop_map(|(release, pre, post, dev)| {
            let mut s = release.iter().map(u64::to_string).collect::<Vec<_>>().join(".");
            if let Some((k, n)) = pre {
                s.push_str(["a", "b", "rc"][k]);
                s.push_str(&n.to_string());
            }
            if let Some(n) = post {
                s.push_str(&format!(".post{n}"));
            }
            if let Some(n) = dev {
                s.push_str(&format!(".dev{n}"));
            }
            parse_version(&s).unwrap()
        })
}

fn arb_name() -> impl Strategy<Value = String> {
    "[A-Za-z0-9]([A-Za-z0-9._-]{0,10}[A-Za-z0-9])?"
}

fn arb_set() -> impl Strategy<Value = String> {
    prop::collection::vec(
        (prop::sample::select(vec!["==", "!=", ">=", "<=", ">", "<", "~="]), arb_version()),
        0..4,
    )
    .prop_map(|clauses| {
        clauses
            .into_iter()
            .map(|(op, v)| {
                let mut text = v.canonical();
                if op == "~=" && v.release().len() < 2 {
                    text = format!("{}.0", v.release()[0]);
                }
                format!("{op}{text}")
            })
            .collect::<Vec<_>>()
            .join(", ")
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn order_laws(a in arb_version(), b in arb_version(), c in arb_version()) {
        let ab = compare_versions(&a, &b);
        prop_assert_eq!(ab, compare_versions(&b, &a).reverse());
        if ab != Ordering::Greater && compare_versions(&b, &c) != Ordering::Greater {
            prop_assert_ne!(compare_versions(&a, &c), Ordering::Greater);
        }
        if ab == Ordering::Equal {
            prop_assert_eq!(&a, &b);
        }
    }
}

proptest! {
    #[test]
    fn normalization_is_idempotent(raw in arb_name()) {
        let once = normalize_name(&raw).unwrap();
        let twice = normalize_name(once.as_str()).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once.as_str(), canonical_name_oracle(&raw));
    }

    #[test]
    fn set_matching_is_conjunction(text in arb_set(), v in arb_version()) {
        let set = parse_specifier_set(&text).unwrap();
        let gate = !v.is_prerelease() || set.iter().any(|s| s.version().is_prerelease());
        let each = set.iter().all(|s: &Specifier| {
            SpecifierSet::from_specs(vec![s.clone()]).iter().all(|only| only.contains(&v))
        });
        prop_assert_eq!(set.matches(&v), gate && each);
    }

    #[test]
    fn trailing_zeros_ignored(v in arb_version(), zeros in 1usize..3) {
        let mut release = v.release().to_vec();
        release.extend(std::iter::repeat_n(0, zeros));
        let padded = Version::from_release(&release);
        let base = Version::from_release(v.release());
        prop_assert_eq!(compare_versions(&padded, &base), Ordering::Equal);
    }
}
