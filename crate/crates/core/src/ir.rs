//! Textual register-based micro-bytecode.
//!
//! One method body per `.method ... .end` block, one instruction per line,
//! `#` starts a comment and `:name` on its own line declares a label for the
//! instruction that follows it.
//!
//! ```text
//! .method com.example.Io.readFirst 4 (v2:com.example.Io, v3:java.lang.String)
//!   new-instance v0 java.io.FileReader
//!   invoke-direct java.io.FileReader.<init> (v0, v3)
//!   invoke-virtual java.io.FileReader.read (v0) int
//!   move-result v1
//!   return
//! .end
//! ```

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Register(pub u16);

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

/// A class member reference, either a method or a field.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MethodRef {
    pub class_name: String,
    pub method_name: String,
}

impl MethodRef {
    pub fn new(class_name: impl Into<String>, method_name: impl Into<String>) -> Self {
        Self {
            class_name: class_name.into(),
            method_name: method_name.into(),
        }
    }

    /// Splits `pkg.Class.member` at the last dot. `<init>` and `<clinit>`
    /// lose their angle brackets so constructors read as `C.init`.
    pub fn parse(text: &str) -> Option<Self> {
        let (class, member) = text.rsplit_once('.')?;
        let member = member
            .strip_prefix('<')
            .and_then(|m| m.strip_suffix('>'))
            .unwrap_or(member);
        if class.is_empty() || member.is_empty() || class.ends_with('.') {
            return None;
        }
        Some(Self::new(class, member))
    }
}

impl fmt::Display for MethodRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.class_name, self.method_name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InvokeKind {
    Virtual,
    Static,
    Direct,
}

impl InvokeKind {
    fn mnemonic(self) -> &'static str {
        match self {
            InvokeKind::Virtual => "invoke-virtual",
            InvokeKind::Static => "invoke-static",
            InvokeKind::Direct => "invoke-direct",
        }
    }
}

/// Right-hand side of a conditional branch.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    Reg(Register),
    Literal(String),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Reg(r) => r.fmt(f),
            Operand::Literal(l) => f.write_str(l),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Instruction {
    NewInstance {
        dst: Register,
        class: String,
    },
    Invoke {
        kind: InvokeKind,
        target: MethodRef,
        args: Vec<Register>,
        /// Declared result type, written after the argument list.
        ret: Option<String>,
    },
    MoveResult {
        dst: Register,
    },
    Const {
        dst: Register,
        literal: String,
    },
    Move {
        dst: Register,
        src: Register,
    },
    Binop {
        op: String,
        dst: Register,
        a: Register,
        b: Register,
    },
    FieldGet {
        dst: Register,
        obj: Register,
        field: MethodRef,
    },
    FieldPut {
        src: Register,
        obj: Register,
        field: MethodRef,
    },
    If {
        cond: String,
        a: Register,
        b: Operand,
        label: String,
    },
    Goto {
        label: String,
    },
    Switch {
        src: Register,
        labels: Vec<String>,
    },
    Return {
        value: Option<Register>,
    },
    Throw {
        src: Register,
    },
}

impl Instruction {
    /// Control instructions end a straight-line run: branches, jumps and exits.
    pub fn is_control(&self) -> bool {
        matches!(
            self,
            Instruction::If { .. }
                | Instruction::Goto { .. }
                | Instruction::Switch { .. }
                | Instruction::Return { .. }
                | Instruction::Throw { .. }
        )
    }

    /// Whether execution may continue with the textually next instruction.
    pub fn falls_through(&self) -> bool {
        !matches!(
            self,
            Instruction::Goto { .. } | Instruction::Return { .. } | Instruction::Throw { .. }
        )
    }

    /// Labels this instruction may jump to, in source order.
    pub fn branch_labels(&self) -> Vec<&str> {
        match self {
            Instruction::If { label, .. } | Instruction::Goto { label } => vec![label.as_str()],
            Instruction::Switch { labels, .. } => labels.iter().map(String::as_str).collect(),
            _ => Vec::new(),
        }
    }

    /// Every register the instruction reads or writes.
    pub fn registers(&self) -> Vec<Register> {
        use Instruction::*;
        match self {
            NewInstance { dst, .. } | MoveResult { dst } | Const { dst, .. } => vec![*dst],
            Invoke { args, .. } => args.clone(),
            Move { dst, src } => vec![*dst, *src],
            Binop { dst, a, b, .. } => vec![*dst, *a, *b],
            FieldGet { dst, obj, .. } => vec![*dst, *obj],
            FieldPut { src, obj, .. } => vec![*src, *obj],
            If { a, b, .. } => match b {
                Operand::Reg(b) => vec![*a, *b],
                Operand::Literal(_) => vec![*a],
            },
            Goto { .. } => Vec::new(),
            Switch { src, .. } | Throw { src } => vec![*src],
            Return { value } => value.iter().copied().collect(),
        }
    }
}

fn join_regs(regs: &[Register]) -> String {
    regs.iter()
        .map(Register::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

impl fmt::Display for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Instruction::*;
        match self {
            NewInstance { dst, class } => write!(f, "new-instance {dst} {class}"),
            Invoke {
                kind,
                target,
                args,
                ret,
            } => {
                write!(f, "{} {target} ({})", kind.mnemonic(), join_regs(args))?;
                match ret {
                    Some(ty) => write!(f, " {ty}"),
                    None => Ok(()),
                }
            }
            MoveResult { dst } => write!(f, "move-result {dst}"),
            Const { dst, literal } => write!(f, "const {dst} {literal}"),
            Move { dst, src } => write!(f, "move {dst} {src}"),
            Binop { op, dst, a, b } => write!(f, "binop {op} {dst} {a} {b}"),
            FieldGet { dst, obj, field } => write!(f, "iget {dst} {obj} {field}"),
            FieldPut { src, obj, field } => write!(f, "iput {src} {obj} {field}"),
            If { cond, a, b, label } => write!(f, "if {cond} {a} {b} :{label}"),
            Goto { label } => write!(f, "goto :{label}"),
            Switch { src, labels } => {
                write!(f, "switch {src}")?;
                for l in labels {
                    write!(f, " :{l}")?;
                }
                Ok(())
            }
            Return { value: Some(r) } => write!(f, "return {r}"),
            Return { value: None } => f.write_str("return"),
            Throw { src } => write!(f, "throw {src}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Param {
    pub reg: Register,
    pub ty: String,
}

/// A parsed method body. Immutable once built by the parser.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Method {
    pub owner_class: String,
    pub name: String,
    pub register_count: u16,
    pub params: Vec<Param>,
    pub instructions: Vec<Instruction>,
    pub labels: BTreeMap<String, usize>,
}

impl Method {
    pub fn qualified_name(&self) -> String {
        format!("{}.{}", self.owner_class, self.name)
    }

    /// Instruction index a label resolves to.
    pub fn label_target(&self, label: &str) -> Option<usize> {
        self.labels.get(label).copied()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = self
            .params
            .iter()
            .map(|p| format!("{}:{}", p.reg, p.ty))
            .collect::<Vec<_>>()
            .join(", ");
        writeln!(
            f,
            ".method {}.{} {} ({params})",
            self.owner_class, self.name, self.register_count
        )?;
        let mut by_index: BTreeMap<usize, Vec<&str>> = BTreeMap::new();
        for (label, &idx) in &self.labels {
            by_index.entry(idx).or_default().push(label);
        }
        for (idx, ins) in self.instructions.iter().enumerate() {
            for label in by_index.get(&idx).into_iter().flatten() {
                writeln!(f, ":{label}")?;
            }
            writeln!(f, "  {ins}")?;
        }
        writeln!(f, ".end")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: undeclared label :{label}")]
    UndeclaredLabel { line: usize, label: String },
    #[error("line {line}: register {register} out of range (method declares {count} registers)")]
    RegisterOutOfRange {
        line: usize,
        register: Register,
        count: u16,
    },
    #[error("line {line}: duplicate label :{label}")]
    DuplicateLabel { line: usize, label: String },
}

#[derive(Debug, Error)]
pub enum CorpusFileError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: in method {method}: {source}")]
    Method {
        path: String,
        method: String,
        #[source]
        source: ParseError,
    },
    #[error("{path}: {source}")]
    Layout {
        path: String,
        #[source]
        source: ParseError,
    },
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    /// 1-based.
    column: usize,
}

/// Removes a trailing `#` comment, ignoring `#` inside double quotes.
fn strip_comment(line: &str) -> &str {
    let mut in_str = false;
    let mut escaped = false;
    for (i, c) in line.char_indices() {
        match c {
            _ if escaped => escaped = false,
            '\\' if in_str => escaped = true,
            '"' => in_str = !in_str,
            '#' if !in_str => return &line[..i],
            _ => {}
        }
    }
    line
}

/// Splits on whitespace and commas; parentheses become their own tokens.
fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, c) in line.char_indices() {
        let sep = c.is_whitespace() || c == ',';
        let paren = c == '(' || c == ')';
        if sep || paren {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
            }
            if paren {
                out.push(Token {
                    text: &line[i..i + 1],
                    column: i + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    out
}

struct LineCursor<'a> {
    line: usize,
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> LineCursor<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Self {
            line,
            tokens: tokenize(text),
            pos: 0,
            end_column: text.len() + 1,
        }
    }

    fn next(&mut self, what: &str) -> Result<Token<'a>, ParseError> {
        let tok = self
            .tokens
            .get(self.pos)
            .copied()
            .ok_or_else(|| syntax(self.line, self.end_column, format!("expected {what}")))?;
        self.pos += 1;
        Ok(tok)
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.tokens.get(self.pos).copied()
    }

    fn register(&mut self) -> Result<Register, ParseError> {
        let tok = self.next("register")?;
        parse_register(self.line, tok)
    }

    fn label(&mut self) -> Result<String, ParseError> {
        let tok = self.next("label")?;
        parse_label_ref(self.line, tok)
    }

    fn member(&mut self, what: &str) -> Result<MethodRef, ParseError> {
        let tok = self.next(what)?;
        MethodRef::parse(tok.text)
            .ok_or_else(|| syntax(self.line, tok.column, format!("malformed {what} `{}`", tok.text)))
    }

    fn expect(&mut self, text: &str) -> Result<(), ParseError> {
        let tok = self.next(&format!("`{text}`"))?;
        if tok.text == text {
            Ok(())
        } else {
            Err(syntax(
                self.line,
                tok.column,
                format!("expected `{text}`, found `{}`", tok.text),
            ))
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(tok) => Err(syntax(
                self.line,
                tok.column,
                format!("unexpected `{}`", tok.text),
            )),
        }
    }
}

fn parse_register(line: usize, tok: Token<'_>) -> Result<Register, ParseError> {
    tok.text
        .strip_prefix('v')
        .and_then(|n| n.parse::<u16>().ok())
        .map(Register)
        .ok_or_else(|| syntax(line, tok.column, format!("expected register, found `{}`", tok.text)))
}

fn parse_label_ref(line: usize, tok: Token<'_>) -> Result<String, ParseError> {
    match tok.text.strip_prefix(':') {
        Some(name) if is_ident(name) => Ok(name.to_string()),
        _ => Err(syntax(
            line,
            tok.column,
            format!("expected :label, found `{}`", tok.text),
        )),
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
}

fn parse_register_list(cur: &mut LineCursor<'_>) -> Result<Vec<Register>, ParseError> {
    cur.expect("(")?;
    let mut regs = Vec::new();
    loop {
        let tok = cur.next("register or `)`")?;
        if tok.text == ")" {
            return Ok(regs);
        }
        regs.push(parse_register(cur.line, tok)?);
    }
}

fn parse_instruction(line: usize, text: &str) -> Result<(Instruction, usize), ParseError> {
    let mut cur = LineCursor::new(line, text);
    let op = cur.next("instruction")?;
    let ins = match op.text {
        "new-instance" => {
            let dst = cur.register()?;
            let class = cur.next("class name")?.text.to_string();
            Instruction::NewInstance { dst, class }
        }
        "invoke-virtual" | "invoke-static" | "invoke-direct" => {
            let kind = match op.text {
                "invoke-virtual" => InvokeKind::Virtual,
                "invoke-static" => InvokeKind::Static,
                _ => InvokeKind::Direct,
            };
            let target = cur.member("method reference")?;
            let args = parse_register_list(&mut cur)?;
            let ret = match cur.peek() {
                Some(_) => Some(cur.next("return type")?.text.to_string()),
                None => None,
            };
            Instruction::Invoke {
                kind,
                target,
                args,
                ret,
            }
        }
        "move-result" => Instruction::MoveResult {
            dst: cur.register()?,
        },
        "const" => {
            let dst = cur.register()?;
            let lit = cur.next("literal")?;
            // The literal is the raw remainder so quoted strings keep their spacing.
            let literal = text[lit.column - 1..].trim().to_string();
            cur.pos = cur.tokens.len();
            Instruction::Const { dst, literal }
        }
        "move" => {
            let dst = cur.register()?;
            let src = cur.register()?;
            Instruction::Move { dst, src }
        }
        "binop" => {
            let op = cur.next("operator")?.text.to_string();
            let dst = cur.register()?;
            let a = cur.register()?;
            let b = cur.register()?;
            Instruction::Binop { op, dst, a, b }
        }
        "iget" => {
            let dst = cur.register()?;
            let obj = cur.register()?;
            let field = cur.member("field reference")?;
            Instruction::FieldGet { dst, obj, field }
        }
        "iput" => {
            let src = cur.register()?;
            let obj = cur.register()?;
            let field = cur.member("field reference")?;
            Instruction::FieldPut { src, obj, field }
        }
        "if" => {
            let cond = cur.next("condition")?.text.to_string();
            let a = cur.register()?;
            let b_tok = cur.next("register or literal")?;
            let b = match parse_register(line, b_tok) {
                Ok(r) => Operand::Reg(r),
                Err(_) if !b_tok.text.starts_with(':') => Operand::Literal(b_tok.text.to_string()),
                Err(e) => return Err(e),
            };
            let label = cur.label()?;
            Instruction::If { cond, a, b, label }
        }
        "goto" => Instruction::Goto { label: cur.label()? },
        "switch" => {
            let src = cur.register()?;
            let mut labels = vec![cur.label()?];
            while cur.peek().is_some() {
                labels.push(cur.label()?);
            }
            Instruction::Switch { src, labels }
        }
        "return" => {
            let value = match cur.peek() {
                Some(_) => Some(cur.register()?),
                None => None,
            };
            Instruction::Return { value }
        }
        "throw" => Instruction::Throw {
            src: cur.register()?,
        },
        other => {
            return Err(syntax(
                line,
                op.column,
                format!("unknown instruction `{other}`"),
            ))
        }
    };
    cur.finish()?;
    Ok((ins, op.column))
}

struct Header {
    owner_class: String,
    name: String,
    register_count: u16,
    params: Vec<Param>,
}

fn parse_header(line: usize, text: &str) -> Result<Header, ParseError> {
    let mut cur = LineCursor::new(line, text);
    cur.expect(".method")?;
    let id = cur.member("method name")?;
    let count_tok = cur.next("register count")?;
    let register_count = count_tok.text.parse::<u16>().map_err(|_| {
        syntax(
            line,
            count_tok.column,
            format!("expected register count, found `{}`", count_tok.text),
        )
    })?;
    cur.expect("(")?;
    let mut params = Vec::new();
    loop {
        let tok = cur.next("parameter or `)`")?;
        if tok.text == ")" {
            break;
        }
        let (reg, ty) = tok
            .text
            .split_once(':')
            .filter(|(_, ty)| !ty.is_empty())
            .ok_or_else(|| {
                syntax(
                    line,
                    tok.column,
                    format!("expected vN:type, found `{}`", tok.text),
                )
            })?;
        let reg = parse_register(
            line,
            Token {
                text: reg,
                column: tok.column,
            },
        )?;
        params.push(Param {
            reg,
            ty: ty.to_string(),
        });
    }
    cur.finish()?;

    // Arguments live in the last N registers of the frame, in order.
    let first = register_count as usize;
    let first = first.checked_sub(params.len()).ok_or_else(|| {
        syntax(
            line,
            count_tok.column,
            format!(
                "{} parameters do not fit in {register_count} registers",
                params.len()
            ),
        )
    })?;
    for (i, p) in params.iter().enumerate() {
        if p.reg.0 as usize != first + i {
            return Err(syntax(
                line,
                1,
                format!(
                    "parameter {} must occupy register v{} (parameters take the highest registers)",
                    p.reg,
                    first + i
                ),
            ));
        }
    }
    Ok(Header {
        owner_class: id.class_name,
        name: id.method_name,
        register_count,
        params,
    })
}

/// A method block being accumulated line by line.
struct Builder {
    header: Header,
    header_line: usize,
    instructions: Vec<(Instruction, usize)>,
    labels: BTreeMap<String, usize>,
    label_lines: BTreeMap<String, usize>,
}

impl Builder {
    fn new(header: Header, header_line: usize) -> Self {
        Self {
            header,
            header_line,
            instructions: Vec::new(),
            labels: BTreeMap::new(),
            label_lines: BTreeMap::new(),
        }
    }

    fn line(&mut self, line: usize, text: &str) -> Result<(), ParseError> {
        let trimmed = text.trim_start();
        if let Some(label) = trimmed.strip_prefix(':') {
            let label = label.trim_end();
            let column = text.len() - trimmed.len() + 1;
            if !is_ident(label) {
                return Err(syntax(line, column, format!("malformed label `:{label}`")));
            }
            if self.labels.contains_key(label) {
                return Err(ParseError::DuplicateLabel {
                    line,
                    label: label.to_string(),
                });
            }
            self.labels
                .insert(label.to_string(), self.instructions.len());
            self.label_lines.insert(label.to_string(), line);
            return Ok(());
        }
        let (ins, _) = parse_instruction(line, text)?;
        for reg in ins.registers() {
            if reg.0 >= self.header.register_count {
                return Err(ParseError::RegisterOutOfRange {
                    line,
                    register: reg,
                    count: self.header.register_count,
                });
            }
        }
        self.instructions.push((ins, line));
        Ok(())
    }

    fn finish(self) -> Result<Method, ParseError> {
        if self.instructions.is_empty() {
            return Err(syntax(self.header_line, 1, "no instructions"));
        }
        let n = self.instructions.len();
        for (label, &idx) in &self.labels {
            if idx >= n {
                return Err(syntax(
                    self.label_lines[label],
                    1,
                    format!("label :{label} is not followed by an instruction"),
                ));
            }
        }
        for (ins, line) in &self.instructions {
            for label in ins.branch_labels() {
                if !self.labels.contains_key(label) {
                    return Err(ParseError::UndeclaredLabel {
                        line: *line,
                        label: label.to_string(),
                    });
                }
            }
        }

        // No reachable instruction may fall off the end of the body.
        let mut seen = HashSet::new();
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            if !seen.insert(i) {
                continue;
            }
            let ins = &self.instructions[i].0;
            if ins.falls_through() {
                if i + 1 == n {
                    return Err(syntax(
                        self.instructions[i].1,
                        1,
                        "control falls off the end of the method",
                    ));
                }
                stack.push(i + 1);
            }
            stack.extend(ins.branch_labels().into_iter().map(|l| self.labels[l]));
        }

        Ok(Method {
            owner_class: self.header.owner_class,
            name: self.header.name,
            register_count: self.header.register_count,
            params: self.header.params,
            instructions: self.instructions.into_iter().map(|(i, _)| i).collect(),
            labels: self.labels,
        })
    }
}

/// Parses exactly one `.method ... .end` block.
pub fn parse_method(text: &str) -> Result<Method, ParseError> {
    let mut methods = parse_blocks(text)?;
    match methods.len() {
        1 => Ok(methods.remove(0).1?),
        0 => Err(syntax(1, 1, "expected `.method`")),
        _ => Err(syntax(methods[1].0, 1, "expected a single method")),
    }
}

type Block = (usize, Result<Method, ParseError>);

/// Splits text into method blocks. Errors outside any block abort the scan;
/// errors inside a block are reported per block.
fn parse_blocks(text: &str) -> Result<Vec<Block>, ParseError> {
    let mut out: Vec<Block> = Vec::new();
    let mut current: Option<Result<Builder, ParseError>> = None;
    let mut current_start = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let code = strip_comment(raw);
        let trimmed = code.trim();
        if trimmed.is_empty() {
            continue;
        }
        let first_word = trimmed.split_whitespace().next().unwrap_or("");
        match (&mut current, first_word) {
            (None, ".method") => {
                current_start = line;
                current = Some(parse_header(line, code).map(|h| Builder::new(h, line)));
            }
            (None, _) => {
                return Err(syntax(
                    line,
                    code.len() - code.trim_start().len() + 1,
                    "expected `.method`",
                ))
            }
            (Some(_), ".end") => {
                let block = current.take().expect("inside a block");
                out.push((current_start, block.and_then(Builder::finish)));
            }
            (Some(_), ".method") => {
                return Err(syntax(line, 1, "missing `.end` before `.method`"));
            }
            (Some(Ok(builder)), _) => {
                if let Err(e) = builder.line(line, code) {
                    current = Some(Err(e));
                }
            }
            // Keep the first error of a broken block; skip to `.end`.
            (Some(Err(_)), _) => {}
        }
    }
    if current.is_some() {
        return Err(syntax(current_start, 1, "missing `.end`"));
    }
    Ok(out)
}

/// Parses every method of a file in order, keeping only the first method for
/// each `(owner_class, name)` pair.
pub fn parse_corpus_text(text: &str, path: &str) -> Result<Vec<Method>, CorpusFileError> {
    let blocks = parse_blocks(text).map_err(|source| CorpusFileError::Layout {
        path: path.to_string(),
        source,
    })?;
    let mut seen = HashSet::new();
    let mut methods = Vec::new();
    for (start, block) in blocks {
        let method = block.map_err(|source| CorpusFileError::Method {
            path: path.to_string(),
            method: method_name_at(text, start),
            source,
        })?;
        if seen.insert((method.owner_class.clone(), method.name.clone())) {
            methods.push(method);
        }
    }
    Ok(methods)
}

pub fn parse_corpus_file(path: impl AsRef<Path>) -> Result<Vec<Method>, CorpusFileError> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CorpusFileError::Io {
        path: display.clone(),
        source,
    })?;
    parse_corpus_text(&text, &display)
}

fn method_name_at(text: &str, line: usize) -> String {
    text.lines()
        .nth(line - 1)
        .and_then(|l| l.split_whitespace().nth(1))
        .map(str::to_string)
        .unwrap_or_else(|| format!("at line {line}"))
}
