//! Parser for an OIL-style system configuration subset.
//!
//! The subset declares one `CPU` block containing `TASK`, `RESOURCE`,
//! `EVENT`, and `OS` objects with `NAME = value;` attributes. Grammar in
//! `docs/GRAMMARS.md`. Unknown attributes are rejected; a few attributes
//! accepted by real configurations (`SCHEDULE`, `STACKSIZE`, `MASK`,
//! `RESOURCEPROPERTY`, `STATUS`) are parsed and ignored.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Width of the per-task activation counter, in bits. The default matches
/// the 8-bit counters found in small embedded kernels; the wrap-around this
/// width permits is exactly the fault the simulator's monitors watch for.
pub const DEFAULT_COUNTER_BITS: u32 = 8;

/// One task declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskDecl {
    pub name: String,
    pub priority: u32,
    pub autostart: bool,
    pub max_activations: u64,
    /// Extended tasks own events and may wait; derived from a non-empty
    /// event list.
    pub extended: bool,
    pub events: Vec<String>,
}

/// Parsed system configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OilConfig {
    pub tasks: Vec<TaskDecl>,
    pub resources: Vec<String>,
    pub events: Vec<String>,
    pub counter_bits: u32,
}

impl OilConfig {
    pub fn task(&self, name: &str) -> Option<&TaskDecl> {
        self.tasks.iter().find(|t| t.name == name)
    }
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line: u32,
    file: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum OilTok {
    Word(String),
    Int(u64),
    LBrace,
    RBrace,
    Assign,
    Semi,
    Eof,
}

impl<'a> Lexer<'a> {
    fn next_tok(&mut self) -> Result<(OilTok, u32)> {
        let bytes = self.src.as_bytes();
        loop {
            if self.pos >= bytes.len() {
                return Ok((OilTok::Eof, self.line));
            }
            let c = bytes[self.pos] as char;
            match c {
                '\n' => {
                    self.line += 1;
                    self.pos += 1;
                }
                ' ' | '\t' | '\r' => self.pos += 1,
                '/' if bytes.get(self.pos + 1) == Some(&b'/') => {
                    while self.pos < bytes.len() && bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                '/' if bytes.get(self.pos + 1) == Some(&b'*') => {
                    self.pos += 2;
                    loop {
                        if self.pos + 1 >= bytes.len() {
                            return Err(Error::syntax(
                                &self.file,
                                self.line,
                                "unterminated block comment",
                            ));
                        }
                        if bytes[self.pos] == b'*' && bytes[self.pos + 1] == b'/' {
                            self.pos += 2;
                            break;
                        }
                        if bytes[self.pos] == b'\n' {
                            self.line += 1;
                        }
                        self.pos += 1;
                    }
                }
                '{' => {
                    self.pos += 1;
                    return Ok((OilTok::LBrace, self.line));
                }
                '}' => {
                    self.pos += 1;
                    return Ok((OilTok::RBrace, self.line));
                }
                '=' => {
                    self.pos += 1;
                    return Ok((OilTok::Assign, self.line));
                }
                ';' => {
                    self.pos += 1;
                    return Ok((OilTok::Semi, self.line));
                }
                'a'..='z' | 'A'..='Z' | '_' => {
                    let start = self.pos;
                    while self.pos < bytes.len()
                        && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                    {
                        self.pos += 1;
                    }
                    return Ok((
                        OilTok::Word(self.src[start..self.pos].to_string()),
                        self.line,
                    ));
                }
                '0'..='9' => {
                    let start = self.pos;
                    while self.pos < bytes.len() && bytes[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let n: u64 = self.src[start..self.pos].parse().map_err(|_| {
                        Error::syntax(&self.file, self.line, "integer out of range")
                    })?;
                    return Ok((OilTok::Int(n), self.line));
                }
                other => {
                    return Err(Error::syntax(
                        &self.file,
                        self.line,
                        format!("unexpected character {other:?}"),
                    ))
                }
            }
        }
    }
}

struct OilParser {
    toks: Vec<(OilTok, u32)>,
    pos: usize,
    file: String,
}

impl OilParser {
    fn peek(&self) -> &OilTok {
        &self.toks[self.pos].0
    }

    fn line(&self) -> u32 {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> OilTok {
        let t = self.toks[self.pos].0.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::syntax(&self.file, self.line(), msg)
    }

    fn expect(&mut self, t: OilTok, what: &str) -> Result<()> {
        if *self.peek() == t {
            self.bump();
            Ok(())
        } else {
            Err(self.err(format!("expected {what}, got {:?}", self.peek())))
        }
    }

    fn word(&mut self, what: &str) -> Result<String> {
        if let OilTok::Word(w) = self.peek().clone() {
            self.bump();
            Ok(w)
        } else {
            Err(self.err(format!("expected {what}, got {:?}", self.peek())))
        }
    }
}

#[derive(Debug, Clone)]
enum AttrValue {
    Int(u64),
    Bool(bool),
    Name(String),
}

/// Parse an OIL-subset configuration.
pub fn parse_oil(source: &str, file: &str) -> Result<OilConfig> {
    let mut lexer = Lexer {
        src: source,
        pos: 0,
        line: 1,
        file: file.to_string(),
    };
    let mut toks = Vec::new();
    loop {
        let (tok, line) = lexer.next_tok()?;
        let eof = tok == OilTok::Eof;
        toks.push((tok, line));
        if eof {
            break;
        }
    }
    let mut p = OilParser {
        toks,
        pos: 0,
        file: file.to_string(),
    };

    let cpu = p.word("CPU")?;
    if cpu != "CPU" {
        return Err(p.err(format!("expected CPU block, got {cpu:?}")));
    }
    p.word("CPU name")?;
    p.expect(OilTok::LBrace, "'{'")?;

    let mut tasks: Vec<TaskDecl> = Vec::new();
    let mut resources: Vec<String> = Vec::new();
    let mut events: Vec<String> = Vec::new();
    let mut counter_bits = DEFAULT_COUNTER_BITS;

    while *p.peek() != OilTok::RBrace {
        let kind = p.word("object kind")?;
        let name = p.word("object name")?;
        p.expect(OilTok::LBrace, "'{'")?;
        let mut attrs: Vec<(String, AttrValue, u32)> = Vec::new();
        while *p.peek() != OilTok::RBrace {
            let attr_line = p.line();
            let attr = p.word("attribute name")?;
            p.expect(OilTok::Assign, "'='")?;
            let value = match p.bump() {
                OilTok::Int(n) => AttrValue::Int(n),
                OilTok::Word(w) if w == "TRUE" => AttrValue::Bool(true),
                OilTok::Word(w) if w == "FALSE" => AttrValue::Bool(false),
                OilTok::Word(w) => AttrValue::Name(w),
                other => return Err(p.err(format!("expected attribute value, got {other:?}"))),
            };
            p.expect(OilTok::Semi, "';'")?;
            attrs.push((attr, value, attr_line));
        }
        p.expect(OilTok::RBrace, "'}'")?;
        p.expect(OilTok::Semi, "';'")?;

        match kind.as_str() {
            "TASK" => {
                let mut priority: Option<u32> = None;
                let mut autostart = false;
                let mut max_activations: u64 = 1;
                let mut task_events = Vec::new();
                for (attr, value, line) in attrs {
                    match (attr.as_str(), value) {
                        ("PRIORITY", AttrValue::Int(n)) => {
                            priority =
                                Some(u32::try_from(n).map_err(|_| {
                                    Error::syntax(file, line, "PRIORITY out of range")
                                })?)
                        }
                        ("AUTOSTART", AttrValue::Bool(b)) => autostart = b,
                        ("ACTIVATION", AttrValue::Int(n)) if n >= 1 => max_activations = n,
                        ("ACTIVATION", _) => {
                            return Err(Error::Validation(format!(
                                "task {name}: ACTIVATION must be a positive integer"
                            )))
                        }
                        ("EVENT", AttrValue::Name(e)) => task_events.push(e),
                        ("SCHEDULE" | "STACKSIZE", _) => {}
                        (other, _) => {
                            return Err(Error::syntax(
                                file,
                                line,
                                format!("unknown TASK attribute {other:?}"),
                            ))
                        }
                    }
                }
                let priority = priority.ok_or_else(|| {
                    Error::Validation(format!("task {name}: PRIORITY is required"))
                })?;
                tasks.push(TaskDecl {
                    name: name.clone(),
                    priority,
                    autostart,
                    max_activations,
                    extended: !task_events.is_empty(),
                    events: task_events,
                });
            }
            "RESOURCE" => {
                for (attr, _, line) in attrs {
                    if attr != "RESOURCEPROPERTY" {
                        return Err(Error::syntax(
                            file,
                            line,
                            format!("unknown RESOURCE attribute {attr:?}"),
                        ));
                    }
                }
                resources.push(name.clone());
            }
            "EVENT" => {
                for (attr, _, line) in attrs {
                    if attr != "MASK" {
                        return Err(Error::syntax(
                            file,
                            line,
                            format!("unknown EVENT attribute {attr:?}"),
                        ));
                    }
                }
                events.push(name.clone());
            }
            "OS" => {
                for (attr, value, line) in attrs {
                    match (attr.as_str(), value) {
                        ("COUNTER_BITS", AttrValue::Int(n)) if (1..=63).contains(&n) => {
                            counter_bits = n as u32
                        }
                        ("COUNTER_BITS", _) => {
                            return Err(Error::Validation(
                                "COUNTER_BITS must be between 1 and 63".into(),
                            ))
                        }
                        ("STATUS", _) => {}
                        (other, _) => {
                            return Err(Error::syntax(
                                file,
                                line,
                                format!("unknown OS attribute {other:?}"),
                            ))
                        }
                    }
                }
            }
            other => return Err(p.err(format!("unknown object kind {other:?}"))),
        }
    }
    p.expect(OilTok::RBrace, "'}'")?;
    if *p.peek() == OilTok::Semi {
        p.bump();
    }
    if *p.peek() != OilTok::Eof {
        return Err(p.err("trailing input after CPU block"));
    }

    validate(&tasks, &resources, &events)?;
    Ok(OilConfig {
        tasks,
        resources,
        events,
        counter_bits,
    })
}

fn validate(tasks: &[TaskDecl], resources: &[String], events: &[String]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for name in tasks
        .iter()
        .map(|t| &t.name)
        .chain(resources.iter())
        .chain(events.iter())
    {
        if !seen.insert(name.clone()) {
            return Err(Error::Validation(format!("duplicate object name {name:?}")));
        }
    }
    let declared: BTreeSet<&String> = events.iter().collect();
    for t in tasks {
        for e in &t.events {
            if !declared.contains(e) {
                return Err(Error::Validation(format!(
                    "task {} references undeclared event {e:?}",
                    t.name
                )));
            }
        }
    }
    Ok(())
}
