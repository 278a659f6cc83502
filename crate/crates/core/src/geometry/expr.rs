//! Arithmetic expressions for implicit domains.
//!
//! Grammar, lowest precedence first:
//!
//! ```text
//! or      := and ( "||" and )*
//! and     := cmp ( "&&" cmp )*
//! cmp     := sum ( ("<" | "<=" | ">" | ">=" | "==" | "!=") sum )?
//! sum     := product ( ("+" | "-") product )*
//! product := unary ( ("*" | "/") unary )*
//! unary   := ("-" | "!") unary | power
//! power   := atom ( "^" unary )?
//! atom    := number | x | y | z | pi | func "(" or ("," or)* ")" | "(" or ")"
//! func    := min | max | abs | sqrt
//! ```
//!
//! Comparisons and logical operators yield 1 or 0. A point lies in an
//! implicit domain iff the expression evaluates to a value `> 0`, so both
//! `"x^2 + y^2 < 1"` and `"1 - x^2 - y^2"` describe the open unit disc.

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Not(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Min,
    Max,
    Abs,
    Sqrt,
}

fn truth(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let e = p.or()?;
        if let Some(t) = p.tokens.get(p.pos) {
            return Err(Error::Expr {
                pos: t.col,
                msg: format!("unexpected token {:?}", t.tok),
            });
        }
        Ok(e)
    }

    /// Highest variable index referenced, plus one.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) => 0,
            Expr::Var(i) => i + 1,
            Expr::Neg(e) | Expr::Not(e) => e.arity(),
            Expr::Bin(_, a, b) => a.arity().max(b.arity()),
            Expr::Call(_, args) => args.iter().map(Expr::arity).max().unwrap_or(0),
        }
    }

    /// Evaluates at `vars`; missing coordinates read as 0.
    pub fn eval(&self, vars: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => vars.get(*i).copied().unwrap_or(0.0),
            Expr::Neg(e) => -e.eval(vars),
            Expr::Not(e) => truth(e.eval(vars) <= 0.0),
            Expr::Bin(op, a, b) => {
                let x = a.eval(vars);
                match op {
                    BinOp::And => return truth(x > 0.0 && b.eval(vars) > 0.0),
                    BinOp::Or => return truth(x > 0.0 || b.eval(vars) > 0.0),
                    _ => {}
                }
                let y = b.eval(vars);
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => {
                        if y == y.trunc() && y.abs() <= 64.0 {
                            x.powi(y as i32)
                        } else {
                            x.powf(y)
                        }
                    }
                    BinOp::Lt => truth(x < y),
                    BinOp::Le => truth(x <= y),
                    BinOp::Gt => truth(x > y),
                    BinOp::Ge => truth(x >= y),
                    BinOp::Eq => truth(x == y),
                    BinOp::Ne => truth(x != y),
                    BinOp::And | BinOp::Or => unreachable!(),
                }
            }
            Expr::Call(f, args) => match f {
                Func::Min => args.iter().map(|a| a.eval(vars)).fold(f64::INFINITY, f64::min),
                Func::Max => args
                    .iter()
                    .map(|a| a.eval(vars))
                    .fold(f64::NEG_INFINITY, f64::max),
                Func::Abs => args[0].eval(vars).abs(),
                Func::Sqrt => args[0].eval(vars).sqrt(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
}

#[derive(Debug)]
struct Spanned {
    tok: Tok,
    col: usize,
}

const OPS: [&str; 16] = [
    "<=", ">=", "==", "!=", "&&", "||", "<", ">", "+", "-", "*", "/", "^", "!", "\u{2212}", "\u{2264}",
];

fn lex(src: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    while i < chars.len() {
        let (col, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() {
                let ch = chars[i].1;
                let exp_sign = (ch == '+' || ch == '-')
                    && i > start
                    && matches!(chars[i - 1].1, 'e' | 'E');
                if ch.is_ascii_digit() || ch == '.' || ch == 'e' || ch == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().map(|c| c.1).collect();
            let v = text.parse::<f64>().map_err(|_| Error::Expr {
                pos: col,
                msg: format!("bad number {text:?}"),
            })?;
            out.push(Spanned { tok: Tok::Num(v), col });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            let text: String = chars[start..i].iter().map(|c| c.1).collect();
            out.push(Spanned { tok: Tok::Ident(text), col });
            continue;
        }
        let tok = match c {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = tok {
            out.push(Spanned { tok, col });
            i += 1;
            continue;
        }
        let rest: String = chars[i..].iter().take(2).map(|c| c.1).collect();
        let op = OPS.iter().find(|op| rest.starts_with(**op)).ok_or(Error::Expr {
            pos: col,
            msg: format!("unexpected character {c:?}"),
        })?;
        i += op.chars().count();
        let op: &'static str = match *op {
            "\u{2212}" => "-",
            "\u{2264}" => "<=",
            o => o,
        };
        out.push(Spanned { tok: Tok::Op(op), col });
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|s| &s.tok)
    }

    fn col(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or(self.tokens.last())
            .map_or(0, |s| s.col)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Expr {
            pos: self.col(),
            msg: msg.into(),
        })
    }

    fn eat_op(&mut self, ops: &[&'static str]) -> Option<&'static str> {
        match self.peek() {
            Some(Tok::Op(o)) if ops.contains(o) => {
                let o = *o;
                self.pos += 1;
                Some(o)
            }
            _ => None,
        }
    }

    fn or(&mut self) -> Result<Expr> {
        let mut e = self.and()?;
        while self.eat_op(&["||"]).is_some() {
            e = Expr::Bin(BinOp::Or, Box::new(e), Box::new(self.and()?));
        }
        Ok(e)
    }

    fn and(&mut self) -> Result<Expr> {
        let mut e = self.cmp()?;
        while self.eat_op(&["&&"]).is_some() {
            e = Expr::Bin(BinOp::And, Box::new(e), Box::new(self.cmp()?));
        }
        Ok(e)
    }

    fn cmp(&mut self) -> Result<Expr> {
        let lhs = self.sum()?;
        let op = match self.eat_op(&["<", "<=", ">", ">=", "==", "!="]) {
            Some(o) => o,
            None => return Ok(lhs),
        };
        let op = match op {
            "<" => BinOp::Lt,
            "<=" => BinOp::Le,
            ">" => BinOp::Gt,
            ">=" => BinOp::Ge,
            "==" => BinOp::Eq,
            _ => BinOp::Ne,
        };
        Ok(Expr::Bin(op, Box::new(lhs), Box::new(self.sum()?)))
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut e = self.product()?;
        while let Some(o) = self.eat_op(&["+", "-"]) {
            let op = if o == "+" { BinOp::Add } else { BinOp::Sub };
            e = Expr::Bin(op, Box::new(e), Box::new(self.product()?));
        }
        Ok(e)
    }

    fn product(&mut self) -> Result<Expr> {
        let mut e = self.unary()?;
        while let Some(o) = self.eat_op(&["*", "/"]) {
            let op = if o == "*" { BinOp::Mul } else { BinOp::Div };
            e = Expr::Bin(op, Box::new(e), Box::new(self.unary()?));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_op(&["-"]).is_some() {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat_op(&["!"]).is_some() {
            return Ok(Expr::Not(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat_op(&["^"]).is_some() {
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = match self.tokens.get(self.pos) {
            Some(t) => t.tok.clone(),
            None => return self.err("unexpected end of expression"),
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let e = self.or()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Expr::Var(0)),
                "y" => Ok(Expr::Var(1)),
                "z" => Ok(Expr::Var(2)),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "min" | "max" | "abs" | "sqrt" => {
                    let func = match name.as_str() {
                        "min" => Func::Min,
                        "max" => Func::Max,
                        "abs" => Func::Abs,
                        _ => Func::Sqrt,
                    };
                    self.expect(Tok::LParen)?;
                    let mut args = vec![self.or()?];
                    while self.peek() == Some(&Tok::Comma) {
                        self.pos += 1;
                        args.push(self.or()?);
                    }
                    self.expect(Tok::RParen)?;
                    let ok = match func {
                        Func::Min | Func::Max => !args.is_empty(),
                        Func::Abs | Func::Sqrt => args.len() == 1,
                    };
                    if !ok {
                        self.pos -= 1;
                        return self.err(format!("wrong number of arguments to {name}"));
                    }
                    Ok(Expr::Call(func, args))
                }
                _ => {
                    self.pos -= 1;
                    self.err(format!("unknown identifier {name:?}"))
                }
            },
            other => {
                self.pos -= 1;
                self.err(format!("unexpected token {other:?}"))
            }
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(format!("expected {tok:?}"))
        }
    }
}
