//! A small arithmetic expression grammar for user-defined potentials.
//!
//! Supported syntax: `+ - * / ^`, unary minus, parentheses, numeric literals,
//! the functions `abs`, `cos`, `exp`, `log` (natural), the variables
//! `x1 .. xd`, the constants `pi` and `e`, and `norm` for the Euclidean norm
//! of the full point. Example: `norm - 2*cos(norm)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
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
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1;
            }
            '-' | '\u{2212}' => {
                out.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                out.push(Tok::Star);
                i += 1;
            }
            '/' => {
                out.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v: f64 = text
                    .parse()
                    .map_err(|_| Error::Expr(format!("bad number literal `{text}`")))?;
                out.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                out.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            other => return Err(Error::Expr(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
enum Node {
    Const(f64),
    Var(usize),
    Norm,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Abs(Box<Node>),
    Cos(Box<Node>),
    Exp(Box<Node>),
    Log(Box<Node>),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    dim: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Expr(format!("expected {t:?}, found {got:?}"))),
        }
    }

    // expr := term (("+"|"-") term)*
    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // term := unary (("*"|"/") unary)*
    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // unary := "-" unary | power
    fn unary(&mut self) -> Result<Node> {
        if matches!(self.peek(), Some(Tok::Minus)) {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    // power := atom ("^" unary)?   (right associative, binds tighter than unary minus)
    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if matches!(self.peek(), Some(Tok::Caret)) {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Const(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => self.ident(name),
            other => Err(Error::Expr(format!("expected an operand, found {other:?}"))),
        }
    }

    fn ident(&mut self, name: String) -> Result<Node> {
        let func = |p: &mut Parser, f: fn(Box<Node>) -> Node| -> Result<Node> {
            p.expect(Tok::LParen)?;
            let arg = p.expr()?;
            p.expect(Tok::RParen)?;
            Ok(f(Box::new(arg)))
        };
        match name.as_str() {
            "abs" => func(self, Node::Abs),
            "cos" => func(self, Node::Cos),
            "exp" => func(self, Node::Exp),
            "log" => func(self, Node::Log),
            "pi" => Ok(Node::Const(std::f64::consts::PI)),
            "e" => Ok(Node::Const(std::f64::consts::E)),
            "norm" => Ok(Node::Norm),
            other if other.starts_with('x') => {
                let idx: usize = other[1..]
                    .parse()
                    .map_err(|_| Error::Expr(format!("unknown identifier `{other}`")))?;
                if idx == 0 || idx > self.dim {
                    return Err(Error::Expr(format!(
                        "variable `{other}` out of range for dimension {}",
                        self.dim
                    )));
                }
                Ok(Node::Var(idx - 1))
            }
            other => Err(Error::Expr(format!("unknown identifier `{other}`"))),
        }
    }
}

fn eval(node: &Node, x: &[f64]) -> f64 {
    match node {
        Node::Const(v) => *v,
        Node::Var(i) => x[*i],
        Node::Norm => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
        Node::Neg(a) => -eval(a, x),
        Node::Add(a, b) => eval(a, x) + eval(b, x),
        Node::Sub(a, b) => eval(a, x) - eval(b, x),
        Node::Mul(a, b) => eval(a, x) * eval(b, x),
        Node::Div(a, b) => eval(a, x) / eval(b, x),
        Node::Pow(a, b) => eval(a, x).powf(eval(b, x)),
        Node::Abs(a) => eval(a, x).abs(),
        Node::Cos(a) => eval(a, x).cos(),
        Node::Exp(a) => eval(a, x).exp(),
        Node::Log(a) => eval(a, x).ln(),
    }
}

/// A compiled potential expression over points in `R^dim`.
#[derive(Debug, Clone)]
pub struct CompiledExpr {
    root: Node,
    dim: usize,
}

impl CompiledExpr {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        eval(&self.root, x)
    }
}

/// Parse `src` as a potential over `dim` coordinates.
pub fn parse_potential(src: &str, dim: usize) -> Result<CompiledExpr> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be >= 1".into()));
    }
    let toks = tokenize(src)?;
    if toks.is_empty() {
        return Err(Error::Expr("empty expression".into()));
    }
    let mut p = Parser { toks, pos: 0, dim };
    let root = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Expr(format!(
            "trailing input starting at token {:?}",
            p.toks[p.pos]
        )));
    }
    Ok(CompiledExpr { root, dim })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_perturbed_laplace_formula() {
        let e = parse_potential("norm - 2*cos(norm)", 1).unwrap();
        assert_eq!(e.eval(&[0.0]), -2.0);
        let r = 1.5f64;
        assert!((e.eval(&[r]) - (r - 2.0 * r.cos())).abs() < 1e-15);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse_potential("-x1^2 + 2", 1).unwrap();
        assert_eq!(e.eval(&[3.0]), -7.0);
        let e = parse_potential("2*x1 + x2/4 - 1", 2).unwrap();
        assert_eq!(e.eval(&[1.0, 8.0]), 3.0);
        let e = parse_potential("2^3^2", 1).unwrap(); // right associative
        assert_eq!(e.eval(&[0.0]), 512.0);
    }

    #[test]
    fn functions_and_constants() {
        let e = parse_potential("exp(log(abs(-x1)))", 1).unwrap();
        assert!((e.eval(&[2.5]) - 2.5).abs() < 1e-12);
        let e = parse_potential("cos(pi)", 1).unwrap();
        assert!((e.eval(&[0.0]) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(parse_potential("x3", 2).is_err());
        assert!(parse_potential("x0", 2).is_err());
        assert!(parse_potential("foo(x1)", 1).is_err());
        assert!(parse_potential("1 +", 1).is_err());
        assert!(parse_potential("(x1", 1).is_err());
        assert!(parse_potential("x1 x2", 2).is_err());
    }
}
