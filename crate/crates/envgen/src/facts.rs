//! Fact records: the uniform output of all front-end parsers and the unit
//! stored in the line-oriented facts file.
//!
//! Facts file format (UTF-8, one record per line):
//!
//! ```text
//! KIND<TAB>subject<TAB>object<TAB>file:line
//! ```
//!
//! `KIND` is one of `FUNC`, `VAR`, `CALL`, `SETS`, `USES`, `DEP`, `ASSERT`,
//! `API`; `object` is empty for `FUNC`/`VAR`/`API`.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};

/// Source position attached to every fact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Location {
    pub file: String,
    pub line: u32,
}

impl Location {
    pub fn new(file: impl Into<String>, line: u32) -> Self {
        Location {
            file: file.into(),
            line,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// The relation a fact asserts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FactKind {
    /// `subject` is a function definition.
    FunctionDef,
    /// `subject` is a variable (global, parameter, or local) declaration.
    VariableDef,
    /// Function `subject` calls function `object`.
    Call,
    /// Function `subject` writes variable `object`.
    Sets,
    /// Function `subject` reads variable `object`.
    Uses,
    /// Variable `subject` is assigned from an expression reading `object`.
    DependsOn,
    /// Function `subject` contains `assert(object)`.
    Assertion,
    /// Function `subject` is a public API entry point.
    ApiMarker,
}

impl FactKind {
    pub fn tag(self) -> &'static str {
        match self {
            FactKind::FunctionDef => "FUNC",
            FactKind::VariableDef => "VAR",
            FactKind::Call => "CALL",
            FactKind::Sets => "SETS",
            FactKind::Uses => "USES",
            FactKind::DependsOn => "DEP",
            FactKind::Assertion => "ASSERT",
            FactKind::ApiMarker => "API",
        }
    }

    pub fn from_tag(tag: &str) -> Option<FactKind> {
        Some(match tag {
            "FUNC" => FactKind::FunctionDef,
            "VAR" => FactKind::VariableDef,
            "CALL" => FactKind::Call,
            "SETS" => FactKind::Sets,
            "USES" => FactKind::Uses,
            "DEP" => FactKind::DependsOn,
            "ASSERT" => FactKind::Assertion,
            "API" => FactKind::ApiMarker,
            _ => return None,
        })
    }

    /// Kinds whose `object` field is required to be empty.
    pub fn object_is_empty(self) -> bool {
        matches!(
            self,
            FactKind::FunctionDef | FactKind::VariableDef | FactKind::ApiMarker
        )
    }
}

/// One entity or relation extracted from a source artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FactRecord {
    pub kind: FactKind,
    pub subject: String,
    pub object: String,
    pub location: Location,
}

impl FactRecord {
    pub fn new(
        kind: FactKind,
        subject: impl Into<String>,
        object: impl Into<String>,
        location: Location,
    ) -> Self {
        FactRecord {
            kind,
            subject: subject.into(),
            object: object.into(),
            location,
        }
    }
}

/// Render a fact set in the facts file format. Inverse of [`parse_facts`].
pub fn serialize_facts(facts: &[FactRecord]) -> String {
    let mut out = String::new();
    for f in facts {
        out.push_str(f.kind.tag());
        out.push('\t');
        out.push_str(&f.subject);
        out.push('\t');
        out.push_str(&f.object);
        out.push('\t');
        out.push_str(&f.location.to_string());
        out.push('\n');
    }
    out
}

/// Parse facts file text. `file` labels error messages only; record
/// locations come from the fourth column.
pub fn parse_facts(text: &str, file: &str) -> Result<Vec<FactRecord>> {
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx as u32 + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(Error::syntax(
                file,
                lineno,
                format!("expected 4 tab-separated fields, got {}", cols.len()),
            ));
        }
        let kind = FactKind::from_tag(cols[0]).ok_or_else(|| {
            Error::syntax(file, lineno, format!("unknown kind tag {:?}", cols[0]))
        })?;
        let subject = cols[1];
        if subject.is_empty() {
            return Err(Error::syntax(file, lineno, "empty subject"));
        }
        if kind.object_is_empty() && !cols[2].is_empty() {
            return Err(Error::syntax(
                file,
                lineno,
                format!("{} records carry no object", kind.tag()),
            ));
        }
        if !kind.object_is_empty() && cols[2].is_empty() {
            return Err(Error::syntax(
                file,
                lineno,
                format!("{} records require an object", kind.tag()),
            ));
        }
        let (loc_file, loc_line) = cols[3].rsplit_once(':').ok_or_else(|| {
            Error::syntax(file, lineno, format!("malformed location {:?}", cols[3]))
        })?;
        let loc_line: u32 = loc_line
            .parse()
            .map_err(|_| Error::syntax(file, lineno, format!("bad line number {:?}", cols[3])))?;
        records.push(FactRecord::new(
            kind,
            subject,
            cols[2],
            Location::new(loc_file, loc_line),
        ));
    }
    Ok(records)
}

/// Load a facts file from disk. Same semantics as [`parse_facts`].
pub fn load_facts(path: &Path) -> Result<Vec<FactRecord>> {
    let text = std::fs::read_to_string(path)?;
    parse_facts(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(kind: FactKind, s: &str, o: &str) -> FactRecord {
        FactRecord::new(kind, s, o, Location::new("k.c", 3))
    }

    #[test]
    fn round_trip_identity() {
        let facts = vec![
            rec(FactKind::FunctionDef, "f", ""),
            rec(FactKind::VariableDef, "v", ""),
            rec(FactKind::Sets, "f", "v"),
            rec(FactKind::Assertion, "f", "v > 0"),
            rec(FactKind::ApiMarker, "f", ""),
        ];
        let text = serialize_facts(&facts);
        let back = parse_facts(&text, "<memory>").unwrap();
        assert_eq!(facts, back);
    }

    #[test]
    fn empty_file_is_empty_list() {
        assert_eq!(parse_facts("", "<memory>").unwrap(), vec![]);
    }

    #[test]
    fn unknown_kind_tag_reports_line() {
        let err = parse_facts("FUNC\tf\t\tk.c:1\nBOGUS\tx\ty\tk.c:2\n", "facts.tsv").unwrap_err();
        match err {
            Error::Syntax { file, line, .. } => {
                assert_eq!(file, "facts.tsv");
                assert_eq!(line, 2);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn object_arity_is_checked() {
        assert!(parse_facts("FUNC\tf\tjunk\tk.c:1\n", "m").is_err());
        assert!(parse_facts("CALL\tf\t\tk.c:1\n", "m").is_err());
    }

    mod round_trip {
        use super::*;
        use proptest::prelude::*;

        fn arb_record() -> impl Strategy<Value = FactRecord> {
            let ident = "[a-z_][a-z0-9_]{0,12}";
            let kind = prop_oneof![
                Just(FactKind::FunctionDef),
                Just(FactKind::VariableDef),
                Just(FactKind::Call),
                Just(FactKind::Sets),
                Just(FactKind::Uses),
                Just(FactKind::DependsOn),
                Just(FactKind::Assertion),
                Just(FactKind::ApiMarker),
            ];
            (
                kind,
                ident,
                "[a-z0-9_\\[\\]\\. ><=!+-]{1,24}",
                ident,
                1u32..9999,
            )
                .prop_map(|(kind, subject, object, file, line)| {
                    let object = if kind.object_is_empty() {
                        String::new()
                    } else {
                        object
                    };
                    FactRecord::new(
                        kind,
                        subject,
                        object,
                        Location::new(format!("{file}.c"), line),
                    )
                })
        }

        proptest! {
            #[test]
            fn serialize_then_parse_is_identity(records in proptest::collection::vec(arb_record(), 0..40)) {
                let text = serialize_facts(&records);
                let back = parse_facts(&text, "<memory>").unwrap();
                prop_assert_eq!(&records, &back);
                // and the other direction: parsing then re-serializing
                // reproduces the bytes
                prop_assert_eq!(serialize_facts(&back), text);
            }
        }
    }
}
