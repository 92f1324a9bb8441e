//! Arithmetic expression language for configuration files: real
//! literals, coordinates x0..x_{4n-1}, the scalar slot t, the derived
//! symbol normq = sum of squared coordinates, operators + - * / ^ and
//! a small function set (exp, log, abs, sqrt, min, max).

use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fn1 {
    Exp,
    Log,
    Abs,
    Sqrt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fn2 {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression AST; `Var(k)` is the coordinate x_k.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    T,
    NormQ,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call1(Fn1, Box<Expr>),
    Call2(Fn2, Box<Expr>, Box<Expr>),
}

/// Parse failure with a 1-based column into the source text.
#[derive(Clone, Debug)]
pub struct ParseError {
    pub message: String,
    pub column: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "column {}: {}", self.column, self.message)
    }
}

impl std::error::Error for ParseError {}

fn err<T>(column: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { message: message.into(), column })
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

struct Lexed {
    tok: Tok,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let col = i + 1;
        let c = chars[i];
        let simple = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = simple {
            toks.push(Lexed { tok, col });
            i += 1;
        } else if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            // exponent suffix only when a digit actually follows,
            // otherwise the letter is left for the identifier lexer
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            match s.parse::<f64>() {
                Ok(v) => toks.push(Lexed { tok: Tok::Num(v), col }),
                Err(_) => return err(col, format!("malformed number `{s}`")),
            }
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let name: String = chars[start..i].iter().collect();
            toks.push(Lexed { tok: Tok::Ident(name), col });
        } else {
            return err(col, format!("unexpected character `{c}`"));
        }
    }
    Ok(toks)
}

struct Parser<'a> {
    toks: &'a [Lexed],
    pos: usize,
    end_col: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|l| &l.tok)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |l| l.col)
    }

    fn bump(&mut self) -> Option<&'a Lexed> {
        let l = self.toks.get(self.pos);
        if l.is_some() {
            self.pos += 1;
        }
        l
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            err(self.col(), format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(&Tok::Plus) {
                BinOp::Add
            } else if self.eat(&Tok::Minus) {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(&Tok::Star) {
                BinOp::Mul
            } else if self.eat(&Tok::Slash) {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Minus) {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    // exponentiation binds tighter than unary minus and associates to
    // the right; the exponent re-enters at the unary level so 2^-3
    // parses without parentheses
    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(&Tok::Caret) {
            let exp = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let end_col = self.end_col;
        let Some(lexed) = self.bump() else {
            return err(end_col, "unexpected end of input");
        };
        match &lexed.tok {
            Tok::Num(v) => Ok(Expr::Num(*v)),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "closing `)`")?;
                Ok(e)
            }
            Tok::Ident(name) => self.ident(name, lexed.col),
            _ => err(lexed.col, "expected a number, variable, function or `(`"),
        }
    }

    fn ident(&mut self, name: &str, col: usize) -> Result<Expr, ParseError> {
        if name == "t" {
            return Ok(Expr::T);
        }
        if name == "normq" {
            return Ok(Expr::NormQ);
        }
        if let Some(digits) = name.strip_prefix('x') {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                return match digits.parse::<usize>() {
                    Ok(k) => Ok(Expr::Var(k)),
                    Err(_) => err(col, format!("variable index `{digits}` is too large")),
                };
            }
        }
        let arity = match name {
            "exp" | "log" | "abs" | "sqrt" => 1,
            "min" | "max" => 2,
            _ => return err(col, format!("unknown identifier `{name}`")),
        };
        self.expect(Tok::LParen, &format!("`(` after `{name}`"))?;
        let mut args = vec![self.expr()?];
        while self.eat(&Tok::Comma) {
            args.push(self.expr()?);
        }
        self.expect(Tok::RParen, "closing `)`")?;
        if args.len() != arity {
            let plural = if arity == 1 { "argument" } else { "arguments" };
            return err(col, format!("{name} expects {arity} {plural}, got {}", args.len()));
        }
        let mut args = args.into_iter();
        Ok(match name {
            "exp" => Expr::Call1(Fn1::Exp, Box::new(args.next().unwrap())),
            "log" => Expr::Call1(Fn1::Log, Box::new(args.next().unwrap())),
            "abs" => Expr::Call1(Fn1::Abs, Box::new(args.next().unwrap())),
            "sqrt" => Expr::Call1(Fn1::Sqrt, Box::new(args.next().unwrap())),
            "min" => {
                Expr::Call2(Fn2::Min, Box::new(args.next().unwrap()), Box::new(args.next().unwrap()))
            }
            _ => Expr::Call2(Fn2::Max, Box::new(args.next().unwrap()), Box::new(args.next().unwrap())),
        })
    }
}

/// Parse with standard precedence (^ above unary minus above * /
/// above + -), left association except for ^.
pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks: &toks, pos: 0, end_col: text.chars().count() + 1 };
    let e = p.expr()?;
    if p.pos < toks.len() {
        return err(p.col(), "unexpected trailing input");
    }
    Ok(e)
}

impl Expr {
    pub fn eval(&self, x: &[f64], t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(k) => x[*k],
            Expr::T => t,
            Expr::NormQ => x.iter().map(|v| v * v).sum(),
            Expr::Neg(e) => -e.eval(x, t),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, t), b.eval(x, t));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Expr::Call1(f, e) => {
                let v = e.eval(x, t);
                match f {
                    Fn1::Exp => v.exp(),
                    Fn1::Log => v.ln(),
                    Fn1::Abs => v.abs(),
                    Fn1::Sqrt => v.sqrt(),
                }
            }
            Expr::Call2(f, a, b) => {
                let (a, b) = (a.eval(x, t), b.eval(x, t));
                match f {
                    Fn2::Min => a.min(b),
                    Fn2::Max => a.max(b),
                }
            }
        }
    }

    /// Largest coordinate index referenced, if any.
    pub fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Var(k) => Some(*k),
            Expr::Num(_) | Expr::T | Expr::NormQ => None,
            Expr::Neg(e) | Expr::Call1(_, e) => e.max_var(),
            Expr::Bin(_, a, b) | Expr::Call2(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    pub fn uses_t(&self) -> bool {
        match self {
            Expr::T => true,
            Expr::Num(_) | Expr::Var(_) | Expr::NormQ => false,
            Expr::Neg(e) | Expr::Call1(_, e) => e.uses_t(),
            Expr::Bin(_, a, b) | Expr::Call2(_, a, b) => a.uses_t() || b.uses_t(),
        }
    }

    // binding strength used for minimal parenthesization; negative
    // literals print like a negation
    fn prec(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Num(v) if v.is_sign_negative() => 3,
            Expr::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn fmt_child(e: &Expr, min: u8, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if e.prec() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(k) => write!(f, "x{k}"),
            Expr::T => write!(f, "t"),
            Expr::NormQ => write!(f, "normq"),
            Expr::Neg(e) => {
                write!(f, "-")?;
                fmt_child(e, 3, f)
            }
            Expr::Bin(op, a, b) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                if *op == BinOp::Pow {
                    // left operand must be an atom, the exponent
                    // re-parses at the unary level
                    fmt_child(a, 5, f)?;
                    write!(f, " {sym} ")?;
                    fmt_child(b, 3, f)
                } else {
                    let p = self.prec();
                    fmt_child(a, p, f)?;
                    write!(f, " {sym} ")?;
                    fmt_child(b, p + 1, f)
                }
            }
            Expr::Call1(func, e) => {
                let name = match func {
                    Fn1::Exp => "exp",
                    Fn1::Log => "log",
                    Fn1::Abs => "abs",
                    Fn1::Sqrt => "sqrt",
                };
                write!(f, "{name}({e})")
            }
            Expr::Call2(func, a, b) => {
                let name = match func {
                    Fn2::Min => "min",
                    Fn2::Max => "max",
                };
                write!(f, "{name}({a}, {b})")
            }
        }
    }
}
