//! Fact extraction from a mini-C subset.
//!
//! The subset covers what fact extraction needs and nothing more: global
//! variable declarations, function definitions, assignments, call
//! statements, `if`/`else`, `while`, `return`, and `assert(...)`. Line
//! comments (`//`) and block comments (`/* */`) are skipped; the block
//! comment `/*@api*/` immediately before a function definition marks that
//! function as a public API entry point. No preprocessor, no pointers to
//! functions, no calls inside expressions. The grammar is documented in
//! EBNF in `docs/GRAMMARS.md`.
//!
//! Extraction rules per statement, for a statement inside function `f`:
//!
//! * assignment `base... = expr;` emits `Sets(f, base)`, `Uses(f, r)` for
//!   every identifier read (left-hand subscripts and the whole right-hand
//!   side), and `DependsOn(base, r)` for every identifier in the
//!   right-hand side;
//! * a call `g(a, b);` emits `Call(f, g)` and `Uses` for identifiers in
//!   the argument expressions;
//! * `if`/`while` conditions, `return` expressions, and `assert` bodies
//!   emit `Uses`; `assert(e)` additionally emits `Assertion(f, "e")` with
//!   the expression text verbatim;
//! * array subscripts `a[i]` read both `a` and `i`; member access `s.f`
//!   and `p->f` read the base only.

use crate::error::{Error, Result};
use crate::facts::{FactKind, FactRecord, Location};

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    ApiMarker,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Assign,
    Dot,
    Arrow,
    OrOr,
    AndAnd,
    Pipe,
    Amp,
    EqEq,
    NotEq,
    Le,
    Ge,
    Lt,
    Gt,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    Bang,
    Tilde,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier {s:?}"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::ApiMarker => "/*@api*/".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("{other:?}"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: u32,
    /// Byte offset of the token start, used to slice assertion text.
    start: usize,
}

fn lex(source: &str, file: &str) -> Result<Vec<Spanned>> {
    let bytes = source.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    macro_rules! push {
        ($tok:expr, $start:expr, $len:expr) => {
            toks.push(Spanned {
                tok: $tok,
                line,
                start: $start,
            })
        };
    }
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            ' ' | '\t' | '\r' => i += 1,
            '/' if bytes.get(i + 1) == Some(&b'/') => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '/' if bytes.get(i + 1) == Some(&b'*') => {
                let start = i;
                let mut j = i + 2;
                loop {
                    if j + 1 >= bytes.len() {
                        return Err(Error::syntax(file, line, "unterminated block comment"));
                    }
                    if bytes[j] == b'*' && bytes[j + 1] == b'/' {
                        break;
                    }
                    if bytes[j] == b'\n' {
                        line += 1;
                    }
                    j += 1;
                }
                let body = &source[start + 2..j];
                if body.trim() == "@api" {
                    push!(Tok::ApiMarker, start, j + 2 - start);
                }
                i = j + 2;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                push!(Tok::Ident(source[start..i].to_string()), start, i - start);
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let text = &source[start..i];
                let n: i64 = text
                    .parse()
                    .map_err(|_| Error::syntax(file, line, format!("bad integer {text:?}")))?;
                push!(Tok::Int(n), start, i - start);
            }
            _ => {
                let two = if i + 1 < bytes.len() {
                    &source[i..i + 2]
                } else {
                    ""
                };
                let (tok, len) = match two {
                    "->" => (Tok::Arrow, 2),
                    "||" => (Tok::OrOr, 2),
                    "&&" => (Tok::AndAnd, 2),
                    "==" => (Tok::EqEq, 2),
                    "!=" => (Tok::NotEq, 2),
                    "<=" => (Tok::Le, 2),
                    ">=" => (Tok::Ge, 2),
                    _ => {
                        let t = match c {
                            '(' => Tok::LParen,
                            ')' => Tok::RParen,
                            '{' => Tok::LBrace,
                            '}' => Tok::RBrace,
                            '[' => Tok::LBracket,
                            ']' => Tok::RBracket,
                            ';' => Tok::Semi,
                            ',' => Tok::Comma,
                            '=' => Tok::Assign,
                            '.' => Tok::Dot,
                            '|' => Tok::Pipe,
                            '&' => Tok::Amp,
                            '<' => Tok::Lt,
                            '>' => Tok::Gt,
                            '+' => Tok::Plus,
                            '-' => Tok::Minus,
                            '*' => Tok::Star,
                            '/' => Tok::Slash,
                            '%' => Tok::Percent,
                            '!' => Tok::Bang,
                            '~' => Tok::Tilde,
                            other => {
                                return Err(Error::syntax(
                                    file,
                                    line,
                                    format!("unexpected character {other:?}"),
                                ))
                            }
                        };
                        (t, 1)
                    }
                };
                push!(tok, i, len);
                i += len;
            }
        }
    }
    toks.push(Spanned {
        tok: Tok::Eof,
        line,
        start: bytes.len(),
    });
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Expression scanning
// ---------------------------------------------------------------------------

/// Identifier reads collected from an expression, in source order, one entry
/// per occurrence. Member names after `.`/`->` are not reads.
#[derive(Debug, Default)]
struct Reads(Vec<String>);

struct Parser<'a> {
    toks: &'a [Spanned],
    pos: usize,
    file: String,
    source: &'a str,
}

impl<'a> Parser<'a> {
    fn new(toks: &'a [Spanned], file: &str, source: &'a str) -> Self {
        Parser {
            toks,
            pos: 0,
            file: file.to_string(),
            source,
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek2(&self) -> &Tok {
        &self.toks[(self.pos + 1).min(self.toks.len() - 1)].tok
    }

    fn line(&self) -> u32 {
        self.toks[self.pos].line
    }

    fn bump(&mut self) -> &Spanned {
        let t = &self.toks[self.pos];
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::syntax(&self.file, self.line(), msg)
    }

    fn expect(&mut self, tok: Tok) -> Result<u32> {
        if *self.peek() == tok {
            let line = self.line();
            self.bump();
            Ok(line)
        } else {
            Err(self.err(format!(
                "expected {}, got {}",
                tok.describe(),
                self.peek().describe()
            )))
        }
    }

    fn take_ident(&mut self) -> Result<String> {
        if let Tok::Ident(name) = self.peek().clone() {
            self.bump();
            Ok(name)
        } else {
            Err(self.err(format!(
                "expected identifier, got {}",
                self.peek().describe()
            )))
        }
    }

    // -- expressions --------------------------------------------------------

    /// Binary expression with C-like precedence. Collects identifier reads.
    fn expr(&mut self, reads: &mut Reads) -> Result<()> {
        self.binary(reads, 0)
    }

    fn binary(&mut self, reads: &mut Reads, min_level: u8) -> Result<()> {
        self.unary(reads)?;
        loop {
            let level = match self.peek() {
                Tok::OrOr => 1,
                Tok::AndAnd => 2,
                Tok::Pipe => 3,
                Tok::Amp => 4,
                Tok::EqEq | Tok::NotEq => 5,
                Tok::Lt | Tok::Gt | Tok::Le | Tok::Ge => 6,
                Tok::Plus | Tok::Minus => 7,
                Tok::Star | Tok::Slash | Tok::Percent => 8,
                _ => break,
            };
            if level < min_level {
                break;
            }
            self.bump();
            self.binary(reads, level + 1)?;
        }
        Ok(())
    }

    fn unary(&mut self, reads: &mut Reads) -> Result<()> {
        match self.peek() {
            Tok::Minus | Tok::Bang | Tok::Tilde => {
                self.bump();
                self.unary(reads)
            }
            _ => self.postfix(reads),
        }
    }

    fn postfix(&mut self, reads: &mut Reads) -> Result<()> {
        match self.peek().clone() {
            Tok::Int(_) => {
                self.bump();
                Ok(())
            }
            Tok::LParen => {
                self.bump();
                self.expr(reads)?;
                self.expect(Tok::RParen)?;
                Ok(())
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    return Err(self.err(format!(
                        "call to {name:?} inside an expression is outside the subset"
                    )));
                }
                reads.0.push(name);
                self.postfix_chain(reads)?;
                Ok(())
            }
            other => Err(self.err(format!("expected expression, got {}", other.describe()))),
        }
    }

    /// `[expr]`, `.member`, `->member` suffixes after a base identifier.
    /// Subscript expressions contribute reads; member names do not.
    fn postfix_chain(&mut self, reads: &mut Reads) -> Result<()> {
        loop {
            match self.peek() {
                Tok::LBracket => {
                    self.bump();
                    self.expr(reads)?;
                    self.expect(Tok::RBracket)?;
                }
                Tok::Dot | Tok::Arrow => {
                    self.bump();
                    self.take_ident()?;
                }
                _ => return Ok(()),
            }
        }
    }
}

/// Parse a standalone C-subset expression and return its identifier reads in
/// source order (duplicates preserved). Used for property expressions.
pub fn expression_identifiers(text: &str, file: &str) -> Result<Vec<String>> {
    let toks = lex(text, file)?;
    let mut p = Parser::new(&toks, file, text);
    let mut reads = Reads::default();
    p.expr(&mut reads)?;
    if *p.peek() != Tok::Eof {
        return Err(p.err(format!(
            "trailing input after expression: {}",
            p.peek().describe()
        )));
    }
    Ok(reads.0)
}

// ---------------------------------------------------------------------------
// Extraction
// ---------------------------------------------------------------------------

struct Extractor<'a> {
    p: Parser<'a>,
    file: String,
    facts: Vec<FactRecord>,
    defined_functions: Vec<String>,
}

impl<'a> Extractor<'a> {
    fn loc(&self, line: u32) -> Location {
        Location::new(self.file.clone(), line)
    }

    fn emit(&mut self, kind: FactKind, subject: &str, object: &str, line: u32) {
        self.facts
            .push(FactRecord::new(kind, subject, object, self.loc(line)));
    }

    /// `void` | `struct ident` | `ident`, returning nothing; only the shape
    /// is checked. Type names carry no facts.
    fn type_name(&mut self) -> Result<()> {
        let name = self.p.take_ident()?;
        if name == "struct" {
            self.p.take_ident()?;
        }
        Ok(())
    }

    fn top_level(&mut self) -> Result<()> {
        loop {
            if *self.p.peek() == Tok::Eof {
                return Ok(());
            }
            let api = if *self.p.peek() == Tok::ApiMarker {
                self.p.bump();
                true
            } else {
                false
            };
            let decl_line = self.p.line();
            self.type_name()?;
            let name = self.p.take_ident()?;
            if *self.p.peek() == Tok::LParen {
                self.function_def(name, decl_line, api)?;
            } else {
                if api {
                    return Err(self
                        .p
                        .err("/*@api*/ marker must precede a function definition"));
                }
                self.global_decl(name, decl_line)?;
            }
        }
    }

    /// `type name;`, `type name[N];`, or `type name = <int>;`. Global
    /// initializers must be literals so that file-scope code carries no
    /// def-use facts.
    fn global_decl(&mut self, name: String, line: u32) -> Result<()> {
        self.emit(FactKind::VariableDef, &name, "", line);
        if *self.p.peek() == Tok::LBracket {
            self.p.bump();
            if !matches!(self.p.peek(), Tok::Int(_)) {
                return Err(self.p.err("global array length must be an integer literal"));
            }
            self.p.bump();
            self.p.expect(Tok::RBracket)?;
        }
        if *self.p.peek() == Tok::Assign {
            self.p.bump();
            if *self.p.peek() == Tok::Minus {
                self.p.bump();
            }
            if !matches!(self.p.peek(), Tok::Int(_)) {
                return Err(self.p.err("global initializer must be an integer literal"));
            }
            self.p.bump();
        }
        self.p.expect(Tok::Semi)?;
        Ok(())
    }

    fn function_def(&mut self, name: String, line: u32, api: bool) -> Result<()> {
        if self.defined_functions.contains(&name) {
            return Err(self
                .p
                .err(format!("duplicate definition of function {name:?}")));
        }
        self.defined_functions.push(name.clone());
        self.emit(FactKind::FunctionDef, &name, "", line);
        if api {
            self.emit(FactKind::ApiMarker, &name, "", line);
        }
        self.p.expect(Tok::LParen)?;
        if *self.p.peek() != Tok::RParen {
            loop {
                let param_line = self.p.line();
                self.type_name()?;
                // `(void)` parameter list
                if *self.p.peek() == Tok::RParen {
                    break;
                }
                let pname = self.p.take_ident()?;
                self.emit(FactKind::VariableDef, &pname, "", param_line);
                if *self.p.peek() == Tok::Comma {
                    self.p.bump();
                } else {
                    break;
                }
            }
        }
        self.p.expect(Tok::RParen)?;
        self.p.expect(Tok::LBrace)?;
        self.block(&name)?;
        Ok(())
    }

    /// Statements until the matching `}` (already past the `{`).
    fn block(&mut self, func: &str) -> Result<()> {
        loop {
            match self.p.peek().clone() {
                Tok::RBrace => {
                    self.p.bump();
                    return Ok(());
                }
                Tok::Eof => {
                    return Err(self.p.err("unexpected end of input inside a function body"))
                }
                _ => self.statement(func)?,
            }
        }
    }

    fn statement(&mut self, func: &str) -> Result<()> {
        match self.p.peek().clone() {
            Tok::Ident(word) => match word.as_str() {
                "if" => self.if_stmt(func),
                "while" => self.while_stmt(func),
                "return" => self.return_stmt(func),
                "assert" => self.assert_stmt(func),
                "struct" => self.local_decl(func),
                _ => match self.p.peek2() {
                    Tok::Ident(_) => self.local_decl(func),
                    Tok::LParen => self.call_stmt(func),
                    _ => self.assignment(func),
                },
            },
            other => Err(self
                .p
                .err(format!("expected statement, got {}", other.describe()))),
        }
    }

    /// `type name;` or `type name = expr;` inside a body.
    fn local_decl(&mut self, func: &str) -> Result<()> {
        let line = self.p.line();
        self.type_name()?;
        let name = self.p.take_ident()?;
        self.emit(FactKind::VariableDef, &name, "", line);
        if *self.p.peek() == Tok::Assign {
            self.p.bump();
            let mut reads = Reads::default();
            self.p.expr(&mut reads)?;
            self.emit(FactKind::Sets, func, &name, line);
            for r in &reads.0 {
                self.emit(FactKind::Uses, func, r, line);
            }
            for r in &reads.0 {
                self.emit(FactKind::DependsOn, &name, r, line);
            }
        }
        self.p.expect(Tok::Semi)?;
        Ok(())
    }

    /// `base[idx].field = expr;` — Sets on the base, Uses on every read,
    /// DependsOn(base, r) for right-hand reads only.
    fn assignment(&mut self, func: &str) -> Result<()> {
        let line = self.p.line();
        let base = self.p.take_ident()?;
        let mut lhs_reads = Reads::default();
        self.p.postfix_chain(&mut lhs_reads)?;
        self.p.expect(Tok::Assign)?;
        let mut rhs_reads = Reads::default();
        self.p.expr(&mut rhs_reads)?;
        self.p.expect(Tok::Semi)?;
        self.emit(FactKind::Sets, func, &base, line);
        for r in lhs_reads.0.iter().chain(rhs_reads.0.iter()) {
            self.emit(FactKind::Uses, func, r, line);
        }
        for r in &rhs_reads.0 {
            self.emit(FactKind::DependsOn, &base, r, line);
        }
        Ok(())
    }

    /// `callee(arg, ...);`
    fn call_stmt(&mut self, func: &str) -> Result<()> {
        let line = self.p.line();
        let callee = self.p.take_ident()?;
        self.p.expect(Tok::LParen)?;
        let mut reads = Reads::default();
        if *self.p.peek() != Tok::RParen {
            loop {
                self.p.expr(&mut reads)?;
                if *self.p.peek() == Tok::Comma {
                    self.p.bump();
                } else {
                    break;
                }
            }
        }
        self.p.expect(Tok::RParen)?;
        self.p.expect(Tok::Semi)?;
        self.emit(FactKind::Call, func, &callee, line);
        for r in &reads.0 {
            self.emit(FactKind::Uses, func, r, line);
        }
        Ok(())
    }

    fn condition(&mut self, func: &str) -> Result<()> {
        let line = self.p.line();
        self.p.expect(Tok::LParen)?;
        let mut reads = Reads::default();
        self.p.expr(&mut reads)?;
        self.p.expect(Tok::RParen)?;
        for r in &reads.0 {
            self.emit(FactKind::Uses, func, r, line);
        }
        Ok(())
    }

    fn if_stmt(&mut self, func: &str) -> Result<()> {
        self.p.bump(); // if
        self.condition(func)?;
        self.p.expect(Tok::LBrace)?;
        self.block(func)?;
        if let Tok::Ident(w) = self.p.peek() {
            if w == "else" {
                self.p.bump();
                if let Tok::Ident(w2) = self.p.peek() {
                    if w2 == "if" {
                        return self.if_stmt(func);
                    }
                }
                self.p.expect(Tok::LBrace)?;
                self.block(func)?;
            }
        }
        Ok(())
    }

    fn while_stmt(&mut self, func: &str) -> Result<()> {
        self.p.bump(); // while
        self.condition(func)?;
        self.p.expect(Tok::LBrace)?;
        self.block(func)
    }

    fn return_stmt(&mut self, func: &str) -> Result<()> {
        let line = self.p.line();
        self.p.bump(); // return
        if *self.p.peek() != Tok::Semi {
            let mut reads = Reads::default();
            self.p.expr(&mut reads)?;
            for r in &reads.0 {
                self.emit(FactKind::Uses, func, r, line);
            }
        }
        self.p.expect(Tok::Semi)?;
        Ok(())
    }

    /// `assert(expr);` — records the expression text verbatim.
    fn assert_stmt(&mut self, func: &str) -> Result<()> {
        let line = self.p.line();
        self.p.bump(); // assert
        self.p.expect(Tok::LParen)?;
        let text_start = self.p.toks[self.p.pos].start;
        let mut reads = Reads::default();
        self.p.expr(&mut reads)?;
        let text_end = self.p.toks[self.p.pos].start;
        self.p.expect(Tok::RParen)?;
        self.p.expect(Tok::Semi)?;
        let text = self.p.source[text_start..text_end].trim().to_string();
        self.emit(FactKind::Assertion, func, &text, line);
        for r in &reads.0 {
            self.emit(FactKind::Uses, func, r, line);
        }
        Ok(())
    }
}

/// Extract facts from mini-C source. Deterministic: facts appear in source
/// order. `file` labels every location.
pub fn parse_minic(source: &str, file: &str) -> Result<Vec<FactRecord>> {
    let toks = lex(source, file)?;
    let mut ex = Extractor {
        p: Parser::new(&toks, file, source),
        file: file.to_string(),
        facts: Vec::new(),
        defined_functions: Vec::new(),
    };
    ex.top_level()?;
    Ok(ex.facts)
}
