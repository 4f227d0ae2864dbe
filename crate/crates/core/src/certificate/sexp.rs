//! Minimal S-expressions: atoms and parenthesized lists.

use std::fmt::Write;

/// Nesting limit on input; deeper text is rejected, never recursed into.
pub const MAX_NESTING: usize = 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    pub fn atom(s: impl ToString) -> Sexp {
        Sexp::Atom(s.to_string())
    }

    pub fn list(head: &str, rest: impl IntoIterator<Item = Sexp>) -> Sexp {
        let mut v = vec![Sexp::atom(head)];
        v.extend(rest);
        Sexp::List(v)
    }

    /// Head atom and the remaining items of a list.
    pub fn head(&self) -> Option<(&str, &[Sexp])> {
        match self {
            Sexp::List(items) => match items.split_first() {
                Some((Sexp::Atom(h), rest)) => Some((h.as_str(), rest)),
                _ => None,
            },
            Sexp::Atom(_) => None,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(a) => Some(a),
            Sexp::List(_) => None,
        }
    }

    fn flat(&self, out: &mut String) {
        match self {
            Sexp::Atom(a) => out.push_str(a),
            Sexp::List(items) => {
                out.push('(');
                for (i, x) in items.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    x.flat(out);
                }
                out.push(')');
            }
        }
    }

    fn flat_len(&self) -> usize {
        match self {
            Sexp::Atom(a) => a.len(),
            Sexp::List(items) => 1 + items.iter().map(|x| x.flat_len() + 1).sum::<usize>(),
        }
    }

    /// Lists that fit on one line stay flat; longer ones put their head and
    /// atoms on the first line and each nested list on its own line.
    pub fn pretty(&self, indent: usize, out: &mut String) {
        match self {
            Sexp::List(items) if indent + self.flat_len() > 96 => {
                out.push('(');
                let mut first = true;
                for x in items {
                    match x {
                        Sexp::Atom(_) => {
                            if !first {
                                out.push(' ');
                            }
                            x.flat(out);
                        }
                        Sexp::List(_) => {
                            out.push('\n');
                            write!(out, "{:w$}", "", w = indent + 2).unwrap();
                            x.pretty(indent + 2, out);
                        }
                    }
                    first = false;
                }
                out.push(')');
            }
            _ => self.flat(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SexpError {
    pub offset: usize,
    pub message: String,
}

/// Parses exactly one expression surrounded by optional whitespace.
pub fn parse(src: &str) -> Result<Sexp, SexpError> {
    let err = |offset, message: &str| SexpError { offset, message: message.to_string() };
    let mut stack: Vec<Vec<Sexp>> = Vec::new();
    let mut result: Option<Sexp> = None;
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'(' => {
                if result.is_some() {
                    return Err(err(i, "trailing input"));
                }
                if stack.len() >= MAX_NESTING {
                    return Err(err(i, "nesting too deep"));
                }
                stack.push(Vec::new());
                i += 1;
            }
            b')' => {
                let done = stack.pop().ok_or_else(|| err(i, "unbalanced `)`"))?;
                let node = Sexp::List(done);
                match stack.last_mut() {
                    Some(parent) => parent.push(node),
                    None => result = Some(node),
                }
                i += 1;
            }
            _ => {
                let start = i;
                while i < bytes.len() && !matches!(bytes[i], b' ' | b'\t' | b'\n' | b'\r' | b'(' | b')') {
                    i += 1;
                }
                let node = Sexp::Atom(src[start..i].to_string());
                match stack.last_mut() {
                    Some(parent) => parent.push(node),
                    None => return Err(err(start, "atom outside list")),
                }
            }
        }
    }
    if !stack.is_empty() {
        return Err(err(src.len(), "unbalanced `(`"));
    }
    result.ok_or_else(|| err(0, "empty input"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let s = parse("(a (b 1 -2) () (c (d)))").unwrap();
        let mut out = String::new();
        s.pretty(0, &mut out);
        assert_eq!(parse(&out).unwrap(), s);
        assert_eq!(out, "(a (b 1 -2) () (c (d)))");
    }

    #[test]
    fn malformed() {
        assert!(parse("(a").is_err());
        assert!(parse("a)").is_err());
        assert!(parse("(a) (b)").is_err());
        assert!(parse("").is_err());
        assert!(parse(&"(".repeat(MAX_NESTING + 1)).is_err());
    }
}
