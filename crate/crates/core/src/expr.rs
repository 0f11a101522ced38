//! Arithmetic expression mini-language in the variables `t`, `u`, `v`.
//!
//! Every model function (the Hamiltonian shape functions and the
//! separable kernel components) is supplied as text in this language:
//! decimal literals, the constants `pi` and `e`, the unary functions
//! `exp`, `log`, `sqrt`, `sin`, `cos`, `abs`, and the operators
//! `+ - * / ^`. `^` binds tightest and associates to the right, then
//! unary minus, then `*`/`/`, then `+`/`-`.
//!
//! Parsed trees are immutable and evaluation is pure, so a single
//! [`ExpressionAst`] can be evaluated from many threads at once.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// A variable of the spin model: `t` is the output point of the kernel,
/// `u` and `v` the two integration points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Var {
    T,
    U,
    V,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U => "u",
            Var::V => "v",
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFunc {
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
    Abs,
}

impl UnaryFunc {
    fn name(self) -> &'static str {
        match self {
            UnaryFunc::Exp => "exp",
            UnaryFunc::Log => "log",
            UnaryFunc::Sqrt => "sqrt",
            UnaryFunc::Sin => "sin",
            UnaryFunc::Cos => "cos",
            UnaryFunc::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => UnaryFunc::Exp,
            "log" => UnaryFunc::Log,
            "sqrt" => UnaryFunc::Sqrt,
            "sin" => UnaryFunc::Sin,
            "cos" => UnaryFunc::Cos,
            "abs" => UnaryFunc::Abs,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConst {
    Pi,
    E,
}

impl NamedConst {
    fn value(self) -> f64 {
        match self {
            NamedConst::Pi => std::f64::consts::PI,
            NamedConst::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            NamedConst::Pi => "pi",
            NamedConst::E => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NodeKind {
    Literal(f64),
    Variable(Var),
    Constant(NamedConst),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(UnaryFunc, Box<Node>),
}

/// One node of the tree, tagged with the byte offset of its first token
/// in the source text (used by evaluation errors).
#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub kind: NodeKind,
    pub offset: usize,
}

/// A parsed expression.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionAst {
    root: Node,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } => *offset,
            ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error at offset {offset}: {message}")]
    Domain { offset: usize, message: String },
    #[error("missing binding for variable `{0}`")]
    MissingBinding(Var),
}

/// Values for the free variables of an expression.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    t: Option<f64>,
    u: Option<f64>,
    v: Option<f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn t(mut self, value: f64) -> Self {
        self.t = Some(value);
        self
    }

    pub fn u(mut self, value: f64) -> Self {
        self.u = Some(value);
        self
    }

    pub fn v(mut self, value: f64) -> Self {
        self.v = Some(value);
        self
    }

    fn get(&self, var: Var) -> Option<f64> {
        match var {
            Var::T => self.t,
            Var::U => self.u,
            Var::V => self.v,
        }
    }
}

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let b = bytes[i];
        let offset = i;
        match b {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
            }
            b'+' => {
                tokens.push(Token { kind: TokenKind::Plus, offset });
                i += 1;
            }
            b'-' => {
                tokens.push(Token { kind: TokenKind::Minus, offset });
                i += 1;
            }
            b'*' => {
                tokens.push(Token { kind: TokenKind::Star, offset });
                i += 1;
            }
            b'/' => {
                tokens.push(Token { kind: TokenKind::Slash, offset });
                i += 1;
            }
            b'^' => {
                tokens.push(Token { kind: TokenKind::Caret, offset });
                i += 1;
            }
            b'(' => {
                tokens.push(Token { kind: TokenKind::LParen, offset });
                i += 1;
            }
            b')' => {
                tokens.push(Token { kind: TokenKind::RParen, offset });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    let frac_start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    if i == frac_start && start + 1 == i {
                        // a lone "." with no digits on either side
                        return Err(ParseError::Syntax {
                            offset: start,
                            message: "expected digits in numeric literal".into(),
                        });
                    }
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                    // otherwise the `e` is a separate identifier token
                }
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError::Syntax {
                    offset: start,
                    message: format!("invalid numeric literal `{text}`"),
                })?;
                if !value.is_finite() {
                    return Err(ParseError::Syntax {
                        offset: start,
                        message: format!("numeric literal `{text}` overflows"),
                    });
                }
                tokens.push(Token { kind: TokenKind::Number(value), offset: start });
            }
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                return Err(ParseError::Syntax {
                    offset,
                    message: format!(
                        "unexpected character `{}`",
                        &source[offset..offset + utf8_len(b)]
                    ),
                });
            }
        }
    }
    tokens.push(Token { kind: TokenKind::Eof, offset: source.len() });
    Ok(tokens)
}

fn utf8_len(first: u8) -> usize {
    match first {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        _ => 4,
    }
}

// ---------------------------------------------------------------------------
// Parser (recursive descent, standard precedence)
// ---------------------------------------------------------------------------

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let rhs = self.term()?;
            let offset = lhs.offset;
            lhs = Node {
                kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                offset,
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            self.bump();
            let rhs = self.unary()?;
            let offset = lhs.offset;
            lhs = Node {
                kind: NodeKind::Binary(op, Box::new(lhs), Box::new(rhs)),
                offset,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.peek().kind == TokenKind::Minus {
            let tok = self.bump();
            let operand = self.unary()?;
            return Ok(Node {
                kind: NodeKind::Neg(Box::new(operand)),
                offset: tok.offset,
            });
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.peek().kind == TokenKind::Caret {
            self.bump();
            // right-associative; the exponent may carry its own sign
            let exponent = self.unary()?;
            let offset = base.offset;
            return Ok(Node {
                kind: NodeKind::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)),
                offset,
            });
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = self.bump();
        match tok.kind {
            TokenKind::Number(value) => Ok(Node {
                kind: NodeKind::Literal(value),
                offset: tok.offset,
            }),
            TokenKind::LParen => {
                let inner = self.expr()?;
                let close = self.bump();
                if close.kind != TokenKind::RParen {
                    return Err(ParseError::Syntax {
                        offset: close.offset,
                        message: "expected `)`".into(),
                    });
                }
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                if let Some(func) = UnaryFunc::from_name(&name) {
                    let open = self.bump();
                    if open.kind != TokenKind::LParen {
                        return Err(ParseError::Syntax {
                            offset: open.offset,
                            message: format!("expected `(` after function `{name}`"),
                        });
                    }
                    let arg = self.expr()?;
                    let close = self.bump();
                    if close.kind != TokenKind::RParen {
                        return Err(ParseError::Syntax {
                            offset: close.offset,
                            message: "expected `)`".into(),
                        });
                    }
                    return Ok(Node {
                        kind: NodeKind::Call(func, Box::new(arg)),
                        offset: tok.offset,
                    });
                }
                let kind = match name.as_str() {
                    "t" => NodeKind::Variable(Var::T),
                    "u" => NodeKind::Variable(Var::U),
                    "v" => NodeKind::Variable(Var::V),
                    "pi" => NodeKind::Constant(NamedConst::Pi),
                    "e" => NodeKind::Constant(NamedConst::E),
                    _ => {
                        return Err(ParseError::UnknownIdentifier {
                            name,
                            offset: tok.offset,
                        })
                    }
                };
                Ok(Node { kind, offset: tok.offset })
            }
            TokenKind::Eof => Err(ParseError::Syntax {
                offset: tok.offset,
                message: "unexpected end of input".into(),
            }),
            other => Err(ParseError::Syntax {
                offset: tok.offset,
                message: format!("expected expression, found `{}`", token_text(&other)),
            }),
        }
    }
}

fn token_text(kind: &TokenKind) -> String {
    match kind {
        TokenKind::Number(x) => format!("{x}"),
        TokenKind::Ident(s) => s.clone(),
        TokenKind::Plus => "+".into(),
        TokenKind::Minus => "-".into(),
        TokenKind::Star => "*".into(),
        TokenKind::Slash => "/".into(),
        TokenKind::Caret => "^".into(),
        TokenKind::LParen => "(".into(),
        TokenKind::RParen => ")".into(),
        TokenKind::Eof => "end of input".into(),
    }
}

impl ExpressionAst {
    /// Parse `source` into an expression tree.
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        if source.trim().is_empty() {
            return Err(ParseError::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let root = parser.expr()?;
        let trailing = parser.peek();
        if trailing.kind != TokenKind::Eof {
            return Err(ParseError::Syntax {
                offset: trailing.offset,
                message: format!(
                    "unexpected trailing input `{}`",
                    token_text(&trailing.kind)
                ),
            });
        }
        Ok(ExpressionAst { root })
    }

    /// Evaluate with IEEE-754 double arithmetic, operands left to right.
    pub fn eval(&self, bindings: &Bindings) -> Result<f64, EvalError> {
        eval_node(&self.root, bindings)
    }

    /// The exact set of variables occurring in the tree.
    pub fn free_variables(&self) -> BTreeSet<Var> {
        let mut vars = BTreeSet::new();
        collect_vars(&self.root, &mut vars);
        vars
    }

    pub fn root(&self) -> &Node {
        &self.root
    }
}

fn collect_vars(node: &Node, vars: &mut BTreeSet<Var>) {
    match &node.kind {
        NodeKind::Variable(var) => {
            vars.insert(*var);
        }
        NodeKind::Neg(inner) | NodeKind::Call(_, inner) => collect_vars(inner, vars),
        NodeKind::Binary(_, lhs, rhs) => {
            collect_vars(lhs, vars);
            collect_vars(rhs, vars);
        }
        NodeKind::Literal(_) | NodeKind::Constant(_) => {}
    }
}

fn eval_node(node: &Node, bindings: &Bindings) -> Result<f64, EvalError> {
    match &node.kind {
        NodeKind::Literal(value) => Ok(*value),
        NodeKind::Constant(c) => Ok(c.value()),
        NodeKind::Variable(var) => bindings
            .get(*var)
            .ok_or(EvalError::MissingBinding(*var)),
        NodeKind::Neg(inner) => Ok(-eval_node(inner, bindings)?),
        NodeKind::Call(func, arg) => {
            let x = eval_node(arg, bindings)?;
            match func {
                UnaryFunc::Exp => Ok(x.exp()),
                UnaryFunc::Log => {
                    if x <= 0.0 {
                        Err(EvalError::Domain {
                            offset: node.offset,
                            message: format!("log of non-positive argument {x}"),
                        })
                    } else {
                        Ok(x.ln())
                    }
                }
                UnaryFunc::Sqrt => {
                    if x < 0.0 {
                        Err(EvalError::Domain {
                            offset: node.offset,
                            message: format!("sqrt of negative argument {x}"),
                        })
                    } else {
                        Ok(x.sqrt())
                    }
                }
                UnaryFunc::Sin => Ok(x.sin()),
                UnaryFunc::Cos => Ok(x.cos()),
                UnaryFunc::Abs => Ok(x.abs()),
            }
        }
        NodeKind::Binary(op, lhs, rhs) => {
            let a = eval_node(lhs, bindings)?;
            let b = eval_node(rhs, bindings)?;
            match op {
                BinOp::Add => Ok(a + b),
                BinOp::Sub => Ok(a - b),
                BinOp::Mul => Ok(a * b),
                BinOp::Div => {
                    if b == 0.0 {
                        Err(EvalError::Domain {
                            offset: node.offset,
                            message: "division by zero".into(),
                        })
                    } else {
                        Ok(a / b)
                    }
                }
                BinOp::Pow => {
                    if a < 0.0 && b.fract() != 0.0 {
                        Err(EvalError::Domain {
                            offset: node.offset,
                            message: format!(
                                "negative base {a} raised to non-integer exponent {b}"
                            ),
                        })
                    } else {
                        Ok(a.powf(b))
                    }
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Pretty printer: canonical output with minimal parentheses, chosen so
// that print -> parse -> print is the identity on the printed text.
// ---------------------------------------------------------------------------

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

fn node_prec(node: &Node) -> u8 {
    match &node.kind {
        NodeKind::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
        NodeKind::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
        NodeKind::Neg(_) => PREC_NEG,
        NodeKind::Binary(BinOp::Pow, ..) => PREC_POW,
        _ => PREC_ATOM,
    }
}

fn write_node(node: &Node, min_prec: u8, out: &mut String) {
    let prec = node_prec(node);
    let parens = prec < min_prec;
    if parens {
        out.push('(');
    }
    match &node.kind {
        NodeKind::Literal(value) => {
            out.push_str(&format!("{value}"));
        }
        NodeKind::Variable(var) => out.push_str(var.name()),
        NodeKind::Constant(c) => out.push_str(c.name()),
        NodeKind::Neg(inner) => {
            out.push('-');
            write_node(inner, PREC_POW, out);
        }
        NodeKind::Call(func, arg) => {
            out.push_str(func.name());
            out.push('(');
            write_node(arg, 0, out);
            out.push(')');
        }
        NodeKind::Binary(op, lhs, rhs) => {
            let (lp, rp) = match op {
                // left-associative: the right operand needs one more level
                BinOp::Add | BinOp::Sub => (PREC_ADD, PREC_ADD + 1),
                BinOp::Mul | BinOp::Div => (PREC_MUL, PREC_MUL + 1),
                // right-associative; the exponent slot admits unary minus
                BinOp::Pow => (PREC_ATOM, PREC_NEG),
            };
            write_node(lhs, lp, out);
            out.push_str(op.symbol());
            write_node(rhs, rp, out);
        }
    }
    if parens {
        out.push(')');
    }
}

impl fmt::Display for ExpressionAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_node(&self.root, 0, &mut out);
        f.write_str(&out)
    }
}
