//! Parser for the supported query subset:
//!
//! ```text
//! query      := SELECT projection FROM ident [WHERE cond (AND cond)*] [;]
//! projection := * | column (, column)*
//! cond       := column = literal
//! literal    := 'text' | "text" | numeral
//! ```
//!
//! Keywords are case-insensitive, as are column names. Quotes inside a
//! string literal are doubled. Column names that are not plain identifiers
//! can be written in backticks. Numerals are kept verbatim, so `3` matches
//! the stored text `3` but not `03`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QueryError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },

    #[error("unknown column `{name}` at byte {pos}")]
    UnknownColumn { pos: usize, name: String },

    #[error("unsupported construct at byte {pos}: {construct} ({reason})")]
    Unsupported {
        pos: usize,
        construct: String,
        reason: &'static str,
    },

    #[error("column `{column}` is constrained to two different values")]
    ConflictingPredicate { column: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Projection {
    Star,
    Columns(Vec<String>),
}

/// A validated query, resolved against a schema.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParsedQuery {
    pub table: String,
    pub projection: Projection,
    /// Equality conjuncts as (schema column name, literal bytes), in query
    /// order with exact duplicates removed.
    pub predicates: Vec<(String, Vec<u8>)>,
    projected_idx: BTreeSet<usize>,
    predicate_idx: BTreeMap<usize, Vec<u8>>,
}

impl ParsedQuery {
    /// Projected column positions; `*` expands to every column.
    pub fn projected_columns(&self) -> &BTreeSet<usize> {
        &self.projected_idx
    }

    /// Predicate values keyed by column position.
    pub fn predicate_map(&self) -> &BTreeMap<usize, Vec<u8>> {
        &self.predicate_idx
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Word(String),
    Quoted(String),
    Str(String),
    Num(String),
    Star,
    Comma,
    Eq,
    Semi,
    LParen,
    RParen,
    Cmp(&'static str),
    Dot,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Quoted(w) => write!(f, "`{w}`"),
            Tok::Str(s) => write!(f, "string '{s}'"),
            Tok::Num(n) => write!(f, "number {n}"),
            Tok::Star => f.write_str("`*`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Eq => f.write_str("`=`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Cmp(op) => write!(f, "`{op}`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn syntax(pos: usize, msg: impl Into<String>) -> QueryError {
    QueryError::Syntax {
        pos,
        msg: msg.into(),
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>, QueryError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'*' => Tok::Star,
            b',' => Tok::Comma,
            b';' => Tok::Semi,
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'.' => Tok::Dot,
            b'=' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Cmp("==")
            }
            b'=' => Tok::Eq,
            b'<' | b'>' | b'!' => {
                let two = bytes.get(i + 1).copied();
                let op = match (c, two) {
                    (b'<', Some(b'=')) => "<=",
                    (b'<', Some(b'>')) => "<>",
                    (b'>', Some(b'=')) => ">=",
                    (b'!', Some(b'=')) => "!=",
                    (b'<', _) => "<",
                    (b'>', _) => ">",
                    _ => return Err(syntax(start, "unexpected `!`")),
                };
                i += op.len() - 1;
                Tok::Cmp(op)
            }
            b'\'' | b'"' => {
                let (s, end) = read_delimited(src, i, c)
                    .ok_or_else(|| syntax(start, "unterminated string literal"))?;
                i = end;
                out.push((start, Tok::Str(s)));
                continue;
            }
            b'`' => {
                let (s, end) = read_delimited(src, i, c)
                    .ok_or_else(|| syntax(start, "unterminated quoted identifier"))?;
                if s.is_empty() {
                    return Err(syntax(start, "empty quoted identifier"));
                }
                i = end;
                out.push((start, Tok::Quoted(s)));
                continue;
            }
            b'0'..=b'9' | b'-' | b'+' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_digit() || bytes[j] == b'.') {
                    j += 1;
                }
                let text = &src[i..j];
                let digits = text.trim_start_matches(['-', '+']);
                if digits.is_empty()
                    || !digits.starts_with(|c: char| c.is_ascii_digit())
                    || digits.matches('.').count() > 1
                    || digits.ends_with('.')
                {
                    return Err(syntax(start, format!("malformed number `{text}`")));
                }
                if j < bytes.len() && (bytes[j].is_ascii_alphabetic() || bytes[j] == b'_') {
                    return Err(syntax(j, "identifier cannot start with a digit"));
                }
                i = j;
                out.push((start, Tok::Num(text.to_string())));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let mut j = i + 1;
                while j < bytes.len() && (bytes[j].is_ascii_alphanumeric() || bytes[j] == b'_') {
                    j += 1;
                }
                out.push((start, Tok::Word(src[i..j].to_string())));
                i = j;
                continue;
            }
            _ => {
                let ch = src[i..].chars().next().expect("in bounds");
                return Err(syntax(start, format!("unexpected character `{ch}`")));
            }
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((src.len(), Tok::End));
    Ok(out)
}

/// Reads a `q`-delimited run starting at `start`, with `qq` as an escaped
/// quote. Returns the contents and the index after the closing quote.
fn read_delimited(src: &str, start: usize, q: u8) -> Option<(String, usize)> {
    let bytes = src.as_bytes();
    let mut i = start + 1;
    let mut s = String::new();
    let mut run = i;
    while i < bytes.len() {
        if bytes[i] == q {
            s.push_str(&src[run..i]);
            if bytes.get(i + 1) == Some(&q) {
                s.push(q as char);
                i += 2;
                run = i;
                continue;
            }
            return Some((s, i + 1));
        }
        i += 1;
    }
    None
}

/// Words with a dedicated rejection reason.
fn unsupported_keyword(word: &str) -> Option<&'static str> {
    Some(match word.to_ascii_uppercase().as_str() {
        "OR" => "only conjunctions (AND) are supported",
        "NOT" => "negation is not supported",
        "IN" | "LIKE" | "BETWEEN" | "IS" => "only equality predicates are supported",
        "JOIN" | "INNER" | "LEFT" | "RIGHT" | "OUTER" | "CROSS" | "NATURAL" | "ON" | "USING" => {
            "queries range over a single table"
        }
        "GROUP" | "HAVING" => "aggregation is not supported",
        "ORDER" => "result ordering is not supported",
        "LIMIT" | "OFFSET" => "result limits are not supported",
        "UNION" | "INTERSECT" | "EXCEPT" => "compound queries are not supported",
        "DISTINCT" | "ALL" => "projection modifiers are not supported",
        "AS" => "aliases are not supported",
        "NULL" => "NULL is not supported",
        _ => return None,
    })
}

const RESERVED: &[&str] = &["SELECT", "FROM", "WHERE", "AND"];

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    columns: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &(usize, Tok) {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(&self.peek().1, Tok::Word(w) if w.eq_ignore_ascii_case(kw))
    }

    /// Turns an unexpected token into the most specific error available.
    fn unexpected(&self, expected: &str) -> QueryError {
        let (pos, tok) = self.peek().clone();
        match &tok {
            Tok::Word(w) => {
                if let Some(reason) = unsupported_keyword(w) {
                    return QueryError::Unsupported {
                        pos,
                        construct: w.to_ascii_uppercase(),
                        reason,
                    };
                }
            }
            Tok::Cmp(op) => {
                return QueryError::Unsupported {
                    pos,
                    construct: format!("comparison `{op}`"),
                    reason: "only equality predicates are supported",
                }
            }
            Tok::LParen | Tok::RParen => {
                return QueryError::Unsupported {
                    pos,
                    construct: "parentheses".into(),
                    reason: "subqueries, grouping and function calls are not supported",
                }
            }
            Tok::Dot => {
                return QueryError::Unsupported {
                    pos,
                    construct: "qualified name".into(),
                    reason: "queries range over a single table",
                }
            }
            _ => {}
        }
        syntax(pos, format!("expected {expected}, found {tok}"))
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), QueryError> {
        if self.is_keyword(kw) {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(kw))
        }
    }

    fn identifier(&mut self, what: &str) -> Result<(usize, String), QueryError> {
        match self.peek().clone() {
            (pos, Tok::Word(w))
                if unsupported_keyword(&w).is_none()
                    && !RESERVED.iter().any(|k| w.eq_ignore_ascii_case(k)) =>
            {
                self.bump();
                Ok((pos, w))
            }
            (pos, Tok::Quoted(w)) => {
                self.bump();
                Ok((pos, w))
            }
            _ => Err(self.unexpected(what)),
        }
    }

    fn column(&mut self) -> Result<(usize, String), QueryError> {
        let (pos, name) = self.identifier("a column name")?;
        if self.peek().1 == Tok::LParen {
            return Err(QueryError::Unsupported {
                pos,
                construct: format!("function call `{name}(..)`"),
                reason: "only plain column references are supported",
            });
        }
        let idx = self
            .columns
            .iter()
            .position(|c| c.eq_ignore_ascii_case(&name))
            .ok_or(QueryError::UnknownColumn { pos, name })?;
        Ok((idx, self.columns[idx].clone()))
    }

    fn literal(&mut self) -> Result<Vec<u8>, QueryError> {
        match self.peek().clone() {
            (_, Tok::Str(s)) | (_, Tok::Num(s)) => {
                self.bump();
                Ok(s.into_bytes())
            }
            (pos, Tok::Word(w)) | (pos, Tok::Quoted(w)) if unsupported_keyword(&w).is_none() => {
                Err(QueryError::Unsupported {
                    pos,
                    construct: format!("column comparison with `{w}`"),
                    reason: "predicates compare a column with a literal",
                })
            }
            _ => Err(self.unexpected("a quoted string or a number")),
        }
    }

    fn query(&mut self) -> Result<ParsedQuery, QueryError> {
        self.expect_keyword("SELECT")?;
        let mut projected_idx = BTreeSet::new();
        let projection = if self.peek().1 == Tok::Star {
            self.bump();
            projected_idx.extend(0..self.columns.len());
            Projection::Star
        } else {
            let mut names = Vec::new();
            loop {
                let (idx, name) = self.column()?;
                if projected_idx.insert(idx) {
                    names.push(name);
                }
                if self.peek().1 != Tok::Comma {
                    break;
                }
                self.bump();
            }
            Projection::Columns(names)
        };
        self.expect_keyword("FROM")?;
        let (_, table) = self.identifier("a table name")?;
        if self.peek().1 == Tok::Comma {
            return Err(QueryError::Unsupported {
                pos: self.peek().0,
                construct: "multiple tables".into(),
                reason: "queries range over a single table",
            });
        }

        let mut predicates = Vec::new();
        let mut predicate_idx: BTreeMap<usize, Vec<u8>> = BTreeMap::new();
        if self.is_keyword("WHERE") {
            self.bump();
            loop {
                let (idx, name) = self.column()?;
                if self.peek().1 != Tok::Eq {
                    return Err(self.unexpected("`=`"));
                }
                self.bump();
                let value = self.literal()?;
                match predicate_idx.get(&idx) {
                    Some(v) if *v == value => {}
                    Some(_) => return Err(QueryError::ConflictingPredicate { column: name }),
                    None => {
                        predicate_idx.insert(idx, value.clone());
                        predicates.push((name, value));
                    }
                }
                if !self.is_keyword("AND") {
                    break;
                }
                self.bump();
            }
        }
        if self.peek().1 == Tok::Semi {
            self.bump();
        }
        if self.peek().1 != Tok::End {
            return Err(self.unexpected(if predicates.is_empty() {
                "WHERE or end of query"
            } else {
                "AND or end of query"
            }));
        }
        Ok(ParsedQuery {
            table,
            projection,
            predicates,
            projected_idx,
            predicate_idx,
        })
    }
}

/// Parses `text` and resolves its column names against `columns`.
pub fn parse_query(text: &str, columns: &[String]) -> Result<ParsedQuery, QueryError> {
    let toks = tokenize(text)?;
    Parser {
        toks,
        at: 0,
        columns,
    }
    .query()
}
