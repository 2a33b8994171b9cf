//! Brute-force oracles for the resolver. Versions are integer triples and
//! constraints are evaluated with tuple comparisons; no crate parsing or
//! ordering is involved on the oracle side.

use chrono::NaiveDate;
use confscan::pep::{parse_specifier_set, NormalizedName};
use confscan::snapshot::{IndexSnapshot, ReleaseRecord};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Release as padded integer triple; the oracle never parses strings.
type Triple = [u64; 3];

pub struct Draw {
    releases: Vec<(Triple, String, NaiveDate)>,
    clauses: Vec<(&'static str, Triple, String)>,
}

/// Drops trailing zero segments at random, so `1.0` and `1.0.0` both occur.
fn render(t: Triple, rng: &mut impl Rng) -> String {
    let mut len = 3;
    while len > 1 && t[len - 1] == 0 && rng.gen_bool(0.5) {
        len -= 1;
    }
    t[..len].iter().map(u64::to_string).collect::<Vec<_>>().join(".")
}

fn triple(rng: &mut impl Rng) -> Triple {
    [rng.gen_range(0..4), rng.gen_range(0..4), rng.gen_range(0..3)]
}

pub fn draw(rng: &mut impl Rng) -> Draw {
    let n = rng.gen_range(1..12);
    let mut triples: Vec<Triple> = (0..n).map(|_| triple(rng)).collect();
    triples.sort();
    triples.dedup();
    let base = NaiveDate::from_ymd_opt(2015, 1, 1).unwrap();
    let releases = triples
        .into_iter()
        .map(|t| (t, render(t, rng), base + chrono::Days::new(rng.gen_range(0..3000))))
        .collect();
    let ops = [">=", ">", "<=", "<", "==", "!=", "~="];
    let clauses = (0..rng.gen_range(0..3))
        .map(|_| {
            let op = *ops.choose(rng).unwrap();
            let mut t = triple(rng);
            // `~=` needs at least two segments.
            let text = if op == "~=" {
                t[2] = 0;
                format!("{}.{}", t[0], t[1])
            } else {
                render(t, rng)
            };
            (op, t, text)
        })
        .collect();
    Draw { releases, clauses }
}

fn oracle_contains(op: &str, bound: Triple, v: Triple) -> bool {
    match op {
        ">=" => v >= bound,
        ">" => v > bound,
        "<=" => v <= bound,
        "<" => v < bound,
        "==" => v == bound,
        "!=" => v != bound,
        "~=" => v >= bound && v[0] == bound[0],
        _ => unreachable!(),
    }
}

pub fn snapshot_of(name: &NormalizedName, d: &Draw) -> IndexSnapshot {
    let recs = d.releases.iter().map(|(_, text, date)| {
        ReleaseRecord::new(name.clone(), confscan::pep::parse_version(text).unwrap(), *date)
    });
    IndexSnapshot::from_records(NaiveDate::from_ymd_opt(2024, 1, 1).unwrap(), recs).unwrap()
}

/// Compares `latest_satisfying` with filter+max over `draws` random
/// cases. Returns the number of satisfiable draws.
pub fn check_latest_satisfying(seed: u64, draws: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = NormalizedName::new("pkg").unwrap();
    let mut hits = 0;
    for _ in 0..draws {
        let d = draw(&mut rng);
        let snap = snapshot_of(&name, &d);
        let text: Vec<String> = d.clauses.iter().map(|(op, _, v)| format!("{op}{v}")).collect();
        let set = parse_specifier_set(&text.join(",")).map_err(|e| e.to_string())?;

        let want = d
            .releases
            .iter()
            .filter(|(t, _, _)| d.clauses.iter().all(|(op, b, _)| oracle_contains(op, *b, *t)))
            .max_by_key(|(t, _, _)| *t)
            .map(|(_, s, _)| s.clone());
        let got = snap.latest_satisfying(&name, &set).ok().map(|r| r.version.to_string());
        if got != want {
            return Err(format!("{:?} against {}: got {got:?}, want {want:?}", d.releases, text.join(",")));
        }
        hits += usize::from(want.is_some());
    }
    Ok(hits)
}

/// Compares inversion detection with pairwise enumeration.
pub fn check_inversions(seed: u64, draws: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let name = NormalizedName::new("pkg").unwrap();
    for _ in 0..draws {
        let d = draw(&mut rng);
        let snap = snapshot_of(&name, &d);
        let mut want = Vec::new();
        for (i, a) in d.releases.iter().enumerate() {
            for b in &d.releases[i + 1..] {
                if a.2 > b.2 {
                    want.push((a.1.clone(), b.1.clone()));
                }
            }
        }
        let got: Vec<(String, String)> = snap
            .detect_version_date_inversions(&name)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        if got != want {
            return Err(format!("{:?}: got {got:?}, want {want:?}", d.releases));
        }
    }
    Ok(())
}
