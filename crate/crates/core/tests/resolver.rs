mod common;

use chrono::NaiveDate;
use common::oracle::{check_inversions, check_latest_satisfying};
use confscan::pep::{parse_specifier_set, NormalizedName};
use confscan::snapshot::{IndexSnapshot, ReleaseRecord};

#[test]
fn latest_satisfying_matches_brute_force() {
    let hits = check_latest_satisfying(11, 1000).unwrap();
    assert!(hits > 300, "too few satisfiable draws: {hits}");
}

#[test]
fn inversions_match_pairwise_enumeration() {
    check_inversions(12, 1000).unwrap();
}

#[test]
fn multipart_has_one_inversion() {
    let snap = common::snapshot();
    let name = NormalizedName::new("multipart").unwrap();
    let pairs = snap.detect_version_date_inversions(&name).unwrap();
    let pairs: Vec<(String, String)> = pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    assert_eq!(pairs, vec![("0.1.1".to_string(), "2.0".to_string())]);
}

#[test]
fn trailing_zeros_compare_equal() {
    let name = NormalizedName::new("pkg").unwrap();
    let rec = ReleaseRecord::new(
        name.clone(),
        confscan::pep::parse_version("1.0").unwrap(),
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap(),
    );
    let snap = IndexSnapshot::from_records(NaiveDate::from_ymd_opt(2020, 1, 2).unwrap(), [rec]).unwrap();
    assert!(snap.latest_satisfying(&name, &parse_specifier_set("==1.0.0").unwrap()).is_ok());
}
