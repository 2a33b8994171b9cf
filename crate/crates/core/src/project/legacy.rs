//! Lexical rewrite of common Python 2 forms into Python 3 syntax.
//!
//! Handles print and exec statements, `except E, e`, `raise E, msg`,
//! `<>`, long-integer suffixes, old octal literals and the `ur` string
//! prefix. Line structure is preserved so reported line numbers stay
//! valid.

#[derive(Debug, Clone, Copy, Default)]
struct LexState {
    /// Open string: quote char and whether it is triple-quoted.
    string: Option<(char, bool)>,
    depth: i32,
    continued: bool,
}

impl LexState {
    fn at_statement_start(&self) -> bool {
        self.string.is_none() && self.depth == 0 && !self.continued
    }
}

pub fn rewrite_legacy(src: &str) -> String {
    let mut out = String::with_capacity(src.len() + 64);
    let mut state = LexState::default();
    for line in src.split_inclusive('\n') {
        let starts = state.at_statement_start();
        let (rewritten, next) = rewrite_tokens(line, state);
        if starts && next.at_statement_start() {
            out.push_str(&rewrite_statement(&rewritten));
        } else {
            out.push_str(&rewritten);
        }
        state = next;
    }
    out
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_'
}

/// Applies token-level rewrites to one physical line and returns the
/// lexer state at its end.
fn rewrite_tokens(line: &str, mut st: LexState) -> (String, LexState) {
    let chars: Vec<char> = line.chars().collect();
    let mut out = String::with_capacity(line.len());
    let mut i = 0;
    st.continued = false;
    while i < chars.len() {
        let c = chars[i];
        if let Some((q, triple)) = st.string {
            if c == '\\' {
                out.push(c);
                if let Some(&n) = chars.get(i + 1) {
                    out.push(n);
                }
                i += 2;
                continue;
            }
            if c == q {
                if !triple {
                    st.string = None;
                } else if chars.get(i + 1) == Some(&q) && chars.get(i + 2) == Some(&q) {
                    out.push_str(&format!("{q}{q}"));
                    i += 2;
                    st.string = None;
                }
            } else if c == '\n' && !triple {
                st.string = None;
            }
            out.push(c);
            i += 1;
            continue;
        }
        match c {
            '#' => {
                out.extend(&chars[i..]);
                break;
            }
            '"' | '\'' => {
                strip_u_before_r(&mut out);
                let triple = chars.get(i + 1) == Some(&c) && chars.get(i + 2) == Some(&c);
                st.string = Some((c, triple));
                if triple {
                    out.push_str(&format!("{c}{c}{c}"));
                    i += 3;
                } else {
                    out.push(c);
                    i += 1;
                }
                continue;
            }
            '(' | '[' | '{' => st.depth += 1,
            ')' | ']' | '}' => st.depth = (st.depth - 1).max(0),
            '\\' if chars[i + 1..].iter().all(|c| *c == '\n' || *c == '\r') => {
                st.continued = true;
            }
            '<' if chars.get(i + 1) == Some(&'>') => {
                out.push_str("!=");
                i += 2;
                continue;
            }
            '0'..='9' if i == 0 || !(is_ident_char(chars[i - 1]) || chars[i - 1] == '.') => {
                let end = (i..chars.len())
                    .find(|&j| !(is_ident_char(chars[j]) || chars[j] == '.'))
                    .unwrap_or(chars.len());
                let token: String = chars[i..end].iter().collect();
                out.push_str(&rewrite_number(&token));
                i = end;
                continue;
            }
            _ => {}
        }
        out.push(c);
        i += 1;
    }
    (out, st)
}

// `ur"..."` is legal in Python 2 only.
fn strip_u_before_r(out: &mut String) {
    let tail: Vec<char> = out.chars().rev().take(3).collect();
    if tail.len() >= 2
        && matches!(tail[0], 'r' | 'R')
        && matches!(tail[1], 'u' | 'U')
        && tail.get(2).is_none_or(|c| !is_ident_char(*c))
    {
        let r = out.pop().unwrap();
        out.pop();
        out.push(r);
    }
}

fn rewrite_number(token: &str) -> String {
    let body = token.strip_suffix(['l', 'L']).unwrap_or(token);
    let is_int = body.chars().all(|c| c.is_ascii_digit())
        || (body.len() > 2
            && (body.starts_with("0x") || body.starts_with("0X"))
            && body[2..].chars().all(|c| c.is_ascii_hexdigit()));
    if !is_int {
        return token.to_string();
    }
    if body.len() > 1 && body.starts_with('0') && body.chars().all(|c| ('0'..='7').contains(&c)) {
        let digits = body.trim_start_matches('0');
        return format!("0o{}", if digits.is_empty() { "0" } else { digits });
    }
    body.to_string()
}

/// Splits a single-line code fragment at top-level commas.
fn split_top_level(code: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut quote: Option<char> = None;
    let mut start = 0;
    let mut escaped = false;
    for (i, c) in code.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '(' | '[' | '{' => depth += 1,
            ')' | ']' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&code[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&code[start..]);
    parts
}

/// Byte offset of a trailing comment, if any.
fn comment_start(line: &str) -> Option<usize> {
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        if let Some(q) = quote {
            if escaped {
                escaped = false;
            } else if c == '\\' {
                escaped = true;
            } else if c == q {
                quote = None;
            }
            continue;
        }
        match c {
            '"' | '\'' => quote = Some(c),
            '#' => return Some(i),
            _ => {}
        }
    }
    None
}

fn keyword_rest<'a>(code: &'a str, kw: &str) -> Option<&'a str> {
    let rest = code.strip_prefix(kw)?;
    match rest.chars().next() {
        None => Some(rest),
        Some(c) if c.is_whitespace() || c == '"' || c == '\'' => Some(rest),
        _ => None,
    }
}

fn rewrite_statement(line: &str) -> String {
    let body_end = line.trim_end_matches(['\n', '\r']).len();
    let (content, newline) = line.split_at(body_end);
    let (code, comment) = match comment_start(content) {
        Some(i) => content.split_at(i),
        None => (content, ""),
    };
    let indent_len = code.len() - code.trim_start().len();
    let (indent, stmt) = code.split_at(indent_len);
    let stmt_trimmed = stmt.trim_end();
    let pad = &stmt[stmt_trimmed.len()..];
    match rewrite_simple_statement(stmt_trimmed) {
        Some(new) => format!("{indent}{new}{pad}{comment}{newline}"),
        None => line.to_string(),
    }
}

fn rewrite_simple_statement(stmt: &str) -> Option<String> {
    if let Some(rest) = keyword_rest(stmt, "print") {
        return Some(rewrite_print(rest.trim()));
    }
    if let Some(rest) = keyword_rest(stmt, "exec") {
        let rest = rest.trim();
        if rest.starts_with('(') || rest.is_empty() {
            return None;
        }
        let code = match rest.find(" in ") {
            Some(i) => &rest[..i],
            None => rest,
        };
        return Some(format!("exec({})", code.trim()));
    }
    if let Some(rest) = keyword_rest(stmt, "except") {
        let colon = rest.rfind(':')?;
        let (clause, tail) = rest.split_at(colon);
        let parts = split_top_level(clause);
        if parts.len() == 2 {
            let target = parts[1].trim();
            if !target.is_empty() && target.chars().all(is_ident_char) {
                return Some(format!("except {} as {}{}", parts[0].trim(), target, tail));
            }
        }
        return None;
    }
    if let Some(rest) = keyword_rest(stmt, "raise") {
        let parts = split_top_level(rest);
        if parts.len() >= 2 {
            return Some(format!("raise {}({})", parts[0].trim(), parts[1].trim()));
        }
    }
    None
}

fn rewrite_print(rest: &str) -> String {
    if rest.is_empty() {
        return "print()".into();
    }
    if rest.starts_with('(') && split_top_level(rest).len() == 1 {
        return format!("print{rest}");
    }
    let (target, args) = match rest.strip_prefix(">>") {
        Some(r) => {
            let parts = split_top_level(r);
            let target = parts[0].trim().to_string();
            let args = r[parts[0].len()..].trim_start_matches(',').trim();
            (Some(target), args)
        }
        None => (None, rest),
    };
    let (args, trailing_comma) = match args.strip_suffix(',') {
        Some(a) => (a.trim_end(), true),
        None => (args, false),
    };
    let mut call: Vec<String> = Vec::new();
    if !args.is_empty() {
        call.push(args.to_string());
    }
    if trailing_comma {
        call.push("end=' '".into());
    }
    if let Some(t) = target {
        call.push(format!("file={t}"));
    }
    format!("print({})", call.join(", "))
}

#[cfg(test)]
mod tests {
    use super::rewrite_legacy;

    #[test]
    fn print_forms() {
        assert_eq!(rewrite_legacy("print 'hi'\n"), "print('hi')\n");
        assert_eq!(rewrite_legacy("    print\n"), "    print()\n");
        assert_eq!(rewrite_legacy("print a, b,  # x\n"), "print(a, b, end=' ')  # x\n");
        assert_eq!(
            rewrite_legacy("print >>sys.stderr, 'x', y\n"),
            "print('x', y, file=sys.stderr)\n"
        );
        assert_eq!(rewrite_legacy("print(x)\n"), "print(x)\n");
        assert_eq!(rewrite_legacy("printer = 1\n"), "printer = 1\n");
    }

    #[test]
    fn except_raise_exec() {
        assert_eq!(
            rewrite_legacy("except (A, B), e:\n"),
            "except (A, B) as e:\n"
        );
        assert_eq!(rewrite_legacy("raise ValueError, 'bad'\n"), "raise ValueError('bad')\n");
        assert_eq!(rewrite_legacy("exec code in ns\n"), "exec(code)\n");
    }

    #[test]
    fn tokens() {
        assert_eq!(rewrite_legacy("if a <> 10L: x = 0777\n"), "if a != 10: x = 0o777\n");
        assert_eq!(rewrite_legacy("s = ur'\\d'\n"), "s = r'\\d'\n");
        assert_eq!(rewrite_legacy("x = '<>' # 0777\n"), "x = '<>' # 0777\n");
        assert_eq!(rewrite_legacy("x = 1.05 + 0 + 0x1fL\n"), "x = 1.05 + 0 + 0x1f\n");
    }

    #[test]
    fn strings_and_brackets_are_respected() {
        let src = "s = \"\"\"\nprint 'inside'\n\"\"\"\nf(a,\n  print)\n";
        assert_eq!(rewrite_legacy(src), src);
    }
}
