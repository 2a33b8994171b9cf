use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PepError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PreKind {
    Alpha,
    Beta,
    Rc,
}

impl PreKind {
    fn as_str(self) -> &'static str {
        match self {
            PreKind::Alpha => "a",
            PreKind::Beta => "b",
            PreKind::Rc => "rc",
        }
    }
}

/// A release version: release segments plus optional pre, post and dev
/// tags. Epochs and local labels are not supported and fail to parse.
///
/// Equality and ordering ignore trailing zero release segments, so `1.0`
/// and `1.0.0` are the same version. The original text is kept in `raw`
/// but does not take part in comparisons.
#[derive(Debug, Clone)]
pub struct Version {
    release: Vec<u64>,
    pre: Option<(PreKind, u64)>,
    post: Option<u64>,
    dev: Option<u64>,
    raw: String,
}

impl Version {
    pub fn from_release(release: &[u64]) -> Self {
        assert!(!release.is_empty(), "release must be non-empty");
        let mut v = Version {
            release: release.to_vec(),
            pre: None,
            post: None,
            dev: None,
            raw: String::new(),
        };
        v.raw = v.canonical();
        v
    }

    pub fn release(&self) -> &[u64] {
        &self.release
    }

    pub fn pre(&self) -> Option<(PreKind, u64)> {
        self.pre
    }

    pub fn post(&self) -> Option<u64> {
        self.post
    }

    pub fn dev(&self) -> Option<u64> {
        self.dev
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    /// True for pre-releases and developmental releases.
    pub fn is_prerelease(&self) -> bool {
        self.pre.is_some() || self.dev.is_some()
    }

    pub fn is_postrelease(&self) -> bool {
        self.post.is_some()
    }

    /// Release segments with trailing zeros stripped (at least one kept).
    fn trimmed_release(&self) -> &[u64] {
        let mut end = self.release.len();
        while end > 1 && self.release[end - 1] == 0 {
            end -= 1;
        }
        &self.release[..end]
    }

    /// Compares only the release segments, zero-padded.
    pub fn cmp_release(&self, other: &Version) -> Ordering {
        let len = self.release.len().max(other.release.len());
        for i in 0..len {
            let a = self.release.get(i).copied().unwrap_or(0);
            let b = other.release.get(i).copied().unwrap_or(0);
            match a.cmp(&b) {
                Ordering::Equal => {}
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    pub fn canonical(&self) -> String {
        let mut out = self
            .release
            .iter()
            .map(u64::to_string)
            .collect::<Vec<_>>()
            .join(".");
        if let Some((kind, n)) = self.pre {
            out.push_str(kind.as_str());
            out.push_str(&n.to_string());
        }
        if let Some(n) = self.post {
            out.push_str(&format!(".post{n}"));
        }
        if let Some(n) = self.dev {
            out.push_str(&format!(".dev{n}"));
        }
        out
    }

    fn sort_key(&self) -> (PreKey, PostKey, DevKey) {
        let pre = match (self.pre, self.post, self.dev) {
            (None, None, Some(_)) => PreKey::DevOnly,
            (Some((kind, n)), _, _) => PreKey::Pre(kind, n),
            (None, _, _) => PreKey::Final,
        };
        let post = match self.post {
            None => PostKey::None,
            Some(n) => PostKey::Post(n),
        };
        let dev = match self.dev {
            Some(n) => DevKey::Dev(n),
            None => DevKey::None,
        };
        (pre, post, dev)
    }
}

// Variant order encodes the ordering rules: a dev-only release sorts
// before any pre-release of the same version, a final release after.
#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum PreKey {
    DevOnly,
    Pre(PreKind, u64),
    Final,
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum PostKey {
    None,
    Post(u64),
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
enum DevKey {
    Dev(u64),
    None,
}

impl Ord for Version {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_release(other)
            .then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl PartialOrd for Version {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Version {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Version {}

impl Hash for Version {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.trimmed_release().hash(state);
        self.pre.hash(state);
        self.post.hash(state);
        self.dev.hash(state);
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl FromStr for Version {
    type Err = PepError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_version(s)
    }
}

impl Serialize for Version {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.raw)
    }
}

impl<'de> Deserialize<'de> for Version {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        parse_version(&raw).map_err(serde::de::Error::custom)
    }
}

pub fn compare_versions(a: &Version, b: &Version) -> Ordering {
    a.cmp(b)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn at_end(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    fn number(&mut self) -> Option<u64> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return None;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()?
            .parse()
            .ok()
    }

    fn separator(&mut self) -> bool {
        if matches!(self.peek(), Some(b'.' | b'-' | b'_')) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    /// Consumes the longest of `words` found at the cursor.
    fn word(&mut self, words: &[&'static str]) -> Option<&'static str> {
        let rest = &self.bytes[self.pos..];
        let found = words
            .iter()
            .filter(|w| rest.starts_with(w.as_bytes()))
            .max_by_key(|w| w.len())?;
        self.pos += found.len();
        Some(found)
    }
}

/// Parses a version string. Accepts the usual alternate spellings
/// (`alpha`, `preview`, `rev`, `-1` post releases, a leading `v`).
pub fn parse_version(text: &str) -> Result<Version, PepError> {
    let invalid = || PepError::InvalidVersion(text.to_string());
    let lowered = text.trim().to_ascii_lowercase();
    if lowered.contains('!') || lowered.contains('+') {
        return Err(invalid());
    }
    let body = lowered.strip_prefix('v').unwrap_or(&lowered);
    let mut cur = Cursor {
        bytes: body.as_bytes(),
        pos: 0,
    };

    let mut release = vec![cur.number().ok_or_else(invalid)?];
    loop {
        let save = cur.pos;
        if cur.peek() == Some(b'.') {
            cur.pos += 1;
            if let Some(n) = cur.number() {
                release.push(n);
                continue;
            }
        }
        cur.pos = save;
        break;
    }

    let mut pre = None;
    let save = cur.pos;
    cur.separator();
    if let Some(word) = cur.word(&["alpha", "beta", "preview", "pre", "rc", "a", "b", "c"]) {
        let kind = match word {
            "a" | "alpha" => PreKind::Alpha,
            "b" | "beta" => PreKind::Beta,
            _ => PreKind::Rc,
        };
        let save_n = cur.pos;
        cur.separator();
        let n = match cur.number() {
            Some(n) => n,
            None => {
                cur.pos = save_n;
                0
            }
        };
        pre = Some((kind, n));
    } else {
        cur.pos = save;
    }

    let mut post = None;
    let save = cur.pos;
    if cur.peek() == Some(b'-') {
        cur.pos += 1;
        if let Some(n) = cur.number() {
            post = Some(n);
        } else {
            cur.pos = save;
        }
    }
    if post.is_none() {
        cur.separator();
        if cur.word(&["post", "rev", "r"]).is_some() {
            let save_n = cur.pos;
            cur.separator();
            let n = match cur.number() {
                Some(n) => n,
                None => {
                    cur.pos = save_n;
                    0
                }
            };
            post = Some(n);
        } else {
            cur.pos = save;
        }
    }

    let mut dev = None;
    let save = cur.pos;
    cur.separator();
    if cur.word(&["dev"]).is_some() {
        let save_n = cur.pos;
        cur.separator();
        let n = match cur.number() {
            Some(n) => n,
            None => {
                cur.pos = save_n;
                0
            }
        };
        dev = Some(n);
    } else {
        cur.pos = save;
    }

    if !cur.at_end() {
        return Err(invalid());
    }
    Ok(Version {
        release,
        pre,
        post,
        dev,
        raw: text.trim().to_string(),
    })
}
