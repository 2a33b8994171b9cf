//! Environment markers, restricted to what an offline resolver can decide.
//!
//! Only `python_version` comparisons are evaluated. Comparisons against
//! `extra` are always false since extras are never installed. Any other
//! variable makes the marker undecidable, and callers skip the guarded
//! dependency with a warning.
//!
//! `and`/`or` use three-valued logic, so `extra == "x" and os_name == "nt"`
//! is still decidable (false).

use super::specifier::{Operator, Specifier};
use super::version::{parse_version, Version};
use super::PepError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MarkerOutcome {
    Include,
    Exclude,
    /// The marker depends on a variable other than `python_version`/`extra`.
    Undecidable(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Token {
    LParen,
    RParen,
    And,
    Or,
    Op(String),
    Var(String),
    Str(String),
}

#[derive(Debug, Clone)]
enum Expr {
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp {
        lhs: Value,
        op: String,
        rhs: Value,
    },
}

#[derive(Debug, Clone)]
enum Value {
    Var(String),
    Str(String),
}

const VARIABLES: &[&str] = &[
    "python_version",
    "python_full_version",
    "os_name",
    "sys_platform",
    "platform_release",
    "platform_system",
    "platform_version",
    "platform_machine",
    "platform_python_implementation",
    "implementation_name",
    "implementation_version",
    "extra",
    // legacy spellings still found in old metadata
    "os.name",
    "sys.platform",
    "platform.version",
    "platform.machine",
    "platform.python_implementation",
    "python_implementation",
];

fn tokenize(text: &str) -> Result<Vec<Token>, PepError> {
    let invalid = || PepError::InvalidMarker(text.to_string());
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '(' {
            tokens.push(Token::LParen);
            i += 1;
        } else if c == ')' {
            tokens.push(Token::RParen);
            i += 1;
        } else if c == '"' || c == '\'' {
            let end = chars[i + 1..]
                .iter()
                .position(|&d| d == c)
                .ok_or_else(invalid)?;
            tokens.push(Token::Str(chars[i + 1..i + 1 + end].iter().collect()));
            i += end + 2;
        } else if "<>=!~".contains(c) {
            let mut op = String::from(c);
            i += 1;
            while i < chars.len() && "<>=!~".contains(chars[i]) {
                op.push(chars[i]);
                i += 1;
            }
            if !matches!(op.as_str(), "<" | "<=" | ">" | ">=" | "==" | "!=" | "~=" | "===") {
                return Err(invalid());
            }
            tokens.push(Token::Op(op));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            match word.as_str() {
                "and" => tokens.push(Token::And),
                "or" => tokens.push(Token::Or),
                "in" => tokens.push(Token::Op("in".into())),
                "not" => {
                    let rest: String = chars[i..].iter().collect();
                    let trimmed = rest.trim_start();
                    if !trimmed.starts_with("in") {
                        return Err(invalid());
                    }
                    i += rest.len() - trimmed.len() + 2;
                    tokens.push(Token::Op("not in".into()));
                }
                w if VARIABLES.contains(&w) => tokens.push(Token::Var(word)),
                _ => return Err(invalid()),
            }
        } else {
            return Err(invalid());
        }
    }
    Ok(tokens)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn err(&self) -> PepError {
        PepError::InvalidMarker(self.text.to_string())
    }

    fn or(&mut self) -> Result<Expr, PepError> {
        let mut lhs = self.and()?;
        while self.tokens.get(self.pos) == Some(&Token::Or) {
            self.pos += 1;
            let rhs = self.and()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Expr, PepError> {
        let mut lhs = self.atom()?;
        while self.tokens.get(self.pos) == Some(&Token::And) {
            self.pos += 1;
            let rhs = self.atom()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<Expr, PepError> {
        if self.tokens.get(self.pos) == Some(&Token::LParen) {
            self.pos += 1;
            let inner = self.or()?;
            if self.tokens.get(self.pos) != Some(&Token::RParen) {
                return Err(self.err());
            }
            self.pos += 1;
            return Ok(inner);
        }
        let lhs = self.value()?;
        let op = match self.tokens.get(self.pos) {
            Some(Token::Op(op)) => op.clone(),
            _ => return Err(self.err()),
        };
        self.pos += 1;
        let rhs = self.value()?;
        Ok(Expr::Cmp { lhs, op, rhs })
    }

    fn value(&mut self) -> Result<Value, PepError> {
        let v = match self.tokens.get(self.pos) {
            Some(Token::Var(v)) => Value::Var(v.clone()),
            Some(Token::Str(s)) => Value::Str(s.clone()),
            _ => return Err(self.err()),
        };
        self.pos += 1;
        Ok(v)
    }
}

/// A parsed marker expression.
#[derive(Debug, Clone)]
pub struct Marker {
    expr: Expr,
}

impl Marker {
    pub fn parse(text: &str) -> Result<Marker, PepError> {
        let tokens = tokenize(text)?;
        let mut parser = Parser {
            tokens: &tokens,
            pos: 0,
            text,
        };
        let expr = parser.or()?;
        if parser.pos != tokens.len() {
            return Err(parser.err());
        }
        Ok(Marker { expr })
    }

    /// Evaluates against an interpreter `major.minor` version. `None`
    /// means the interpreter is unknown, which makes `python_version`
    /// comparisons undecidable.
    pub fn evaluate(&self, python: Option<&Version>) -> MarkerOutcome {
        match eval(&self.expr, python) {
            Tri::True => MarkerOutcome::Include,
            Tri::False => MarkerOutcome::Exclude,
            Tri::Unknown(var) => MarkerOutcome::Undecidable(var),
        }
    }
}

/// Parses and evaluates in one step; parse failures count as undecidable.
pub fn evaluate_marker(text: &str, python: Option<&Version>) -> MarkerOutcome {
    match Marker::parse(text) {
        Ok(m) => m.evaluate(python),
        Err(_) => MarkerOutcome::Undecidable(format!("unparseable marker `{text}`")),
    }
}

#[derive(Debug, Clone)]
enum Tri {
    True,
    False,
    Unknown(String),
}

fn eval(expr: &Expr, python: Option<&Version>) -> Tri {
    match expr {
        Expr::And(a, b) => match (eval(a, python), eval(b, python)) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::Unknown(v), _) | (_, Tri::Unknown(v)) => Tri::Unknown(v),
            _ => Tri::True,
        },
        Expr::Or(a, b) => match (eval(a, python), eval(b, python)) {
            (Tri::True, _) | (_, Tri::True) => Tri::True,
            (Tri::Unknown(v), _) | (_, Tri::Unknown(v)) => Tri::Unknown(v),
            _ => Tri::False,
        },
        Expr::Cmp { lhs, op, rhs } => compare(lhs, op, rhs, python),
    }
}

fn flip(op: &str) -> &str {
    match op {
        "<" => ">",
        "<=" => ">=",
        ">" => "<",
        ">=" => "<=",
        other => other,
    }
}

fn compare(lhs: &Value, op: &str, rhs: &Value, python: Option<&Version>) -> Tri {
    let (var, literal, op, var_on_left) = match (lhs, rhs) {
        (Value::Var(v), Value::Str(s)) => (v.as_str(), s.as_str(), op, true),
        (Value::Str(s), Value::Var(v)) => (v.as_str(), s.as_str(), flip(op), false),
        (Value::Var(v), Value::Var(_)) => return Tri::Unknown(v.clone()),
        (Value::Str(a), Value::Str(b)) => return bool_tri(string_cmp(a, op, b)),
    };
    match var {
        "extra" => Tri::False,
        "python_version" => {
            let Some(py) = python else {
                return Tri::Unknown(var.to_string());
            };
            let short = format!("{}.{}", py.release()[0], py.release().get(1).copied().unwrap_or(0));
            if op == "in" || op == "not in" {
                // `python_version in "2.7 3.4"` is a string containment test.
                let hit = if var_on_left {
                    literal.split_whitespace().any(|w| w == short)
                } else {
                    short.contains(literal)
                };
                return bool_tri(hit == (op == "in"));
            }
            let Ok(bound) = parse_version(literal) else {
                return bool_tri(string_cmp(&short, op, literal));
            };
            let operator = match op {
                "<" => Operator::Less,
                "<=" => Operator::LessEqual,
                ">" => Operator::Greater,
                ">=" => Operator::GreaterEqual,
                "==" | "===" => Operator::Equal,
                "!=" => Operator::NotEqual,
                "~=" => {
                    return match super::specifier::parse_specifier_set(&format!("~={literal}")) {
                        Ok(set) => bool_tri(set.iter().all(|s| s.contains(py))),
                        Err(_) => Tri::Unknown(var.to_string()),
                    }
                }
                _ => return Tri::Unknown(var.to_string()),
            };
            bool_tri(Specifier::new(operator, bound).contains(py))
        }
        other => Tri::Unknown(other.to_string()),
    }
}

fn string_cmp(a: &str, op: &str, b: &str) -> bool {
    match op {
        "==" | "===" => a == b,
        "!=" => a != b,
        "in" => b.contains(a),
        "not in" => !b.contains(a),
        "<" => a < b,
        "<=" => a <= b,
        ">" => a > b,
        ">=" => a >= b,
        _ => false,
    }
}

fn bool_tri(b: bool) -> Tri {
    if b {
        Tri::True
    } else {
        Tri::False
    }
}
