//! Closed-form scalar expressions over the coordinates `x1`, `x2`.
//!
//! Used by scenario files to describe boundary traces and sources, e.g.
//! `"0.01*sin(2*pi*x2)"`. Supported: `+ - * / ^`, unary minus, the constants
//! `pi` and `e`, and the functions `sin cos tan exp ln log sqrt abs tanh sinh
//! cosh atan atan2 min max pow step bump`.
//!
//! `bump(t, a, b)` is the C-infinity cutoff `exp(1 - 1/(1 - s^2))` with `s`
//! the affine image of `t` from `(a, b)` onto `(-1, 1)`, and zero outside.

use std::fmt;
use std::str::FromStr;

use pest::iterators::Pair;
use pest::Parser;
use pest_derive::Parser;

use crate::error::{Error, Result};

#[derive(Parser)]
#[grammar = "expr.pest"]
struct ExprParser;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X1,
    X2,
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Ln,
    Sqrt,
    Abs,
    Tanh,
    Sinh,
    Cosh,
    Atan,
    Atan2,
    Min,
    Max,
    Pow,
    Step,
    Bump,
}

impl Func {
    fn lookup(name: &str) -> Option<(Func, usize)> {
        Some(match name {
            "sin" => (Func::Sin, 1),
            "cos" => (Func::Cos, 1),
            "tan" => (Func::Tan, 1),
            "exp" => (Func::Exp, 1),
            "ln" | "log" => (Func::Ln, 1),
            "sqrt" => (Func::Sqrt, 1),
            "abs" => (Func::Abs, 1),
            "tanh" => (Func::Tanh, 1),
            "sinh" => (Func::Sinh, 1),
            "cosh" => (Func::Cosh, 1),
            "atan" => (Func::Atan, 1),
            "atan2" => (Func::Atan2, 2),
            "min" => (Func::Min, 2),
            "max" => (Func::Max, 2),
            "pow" => (Func::Pow, 2),
            "step" => (Func::Step, 1),
            "bump" => (Func::Bump, 3),
            _ => return None,
        })
    }
}

/// A parsed expression. Keeps its source text for reports and round-trips.
#[derive(Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self> {
        let mut pairs = ExprParser::parse(Rule::expression, src)
            .map_err(|e| Error::Parse(format!("expression `{src}`: {e}")))?;
        let expression = pairs.next().expect("grammar yields one expression");
        let sum = expression.into_inner().next().expect("expression wraps a sum");
        let root = build(sum)?;
        Ok(Self {
            source: src.to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        eval(&self.root, x)
    }
}

impl FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Expr::parse(s)
    }
}

fn build(pair: Pair<'_, Rule>) -> Result<Node> {
    match pair.as_rule() {
        Rule::sum | Rule::product => {
            let mut inner = pair.into_inner();
            let mut acc = build(inner.next().expect("operand"))?;
            while let Some(op) = inner.next() {
                let rhs = build(inner.next().expect("operand after operator"))?;
                let c = op.as_str().chars().next().expect("operator char");
                acc = Node::Bin(c, Box::new(acc), Box::new(rhs));
            }
            Ok(acc)
        }
        Rule::unary => {
            let mut negs = 0;
            let mut node = None;
            for p in pair.into_inner() {
                match p.as_rule() {
                    Rule::neg => negs += 1,
                    _ => node = Some(build(p)?),
                }
            }
            let mut node = node.expect("unary has an operand");
            for _ in 0..negs {
                node = Node::Neg(Box::new(node));
            }
            Ok(node)
        }
        Rule::power => {
            let mut inner = pair.into_inner();
            let base = build(inner.next().expect("base"))?;
            match inner.next() {
                Some(exp) => Ok(Node::Bin('^', Box::new(base), Box::new(build(exp)?))),
                None => Ok(base),
            }
        }
        Rule::atom => build(pair.into_inner().next().expect("atom content")),
        Rule::number => pair
            .as_str()
            .parse::<f64>()
            .map(Node::Num)
            .map_err(|e| Error::Parse(format!("number `{}`: {e}", pair.as_str()))),
        Rule::ident => match pair.as_str() {
            "x1" | "x" => Ok(Node::X1),
            "x2" | "y" => Ok(Node::X2),
            "pi" => Ok(Node::Num(std::f64::consts::PI)),
            "e" => Ok(Node::Num(std::f64::consts::E)),
            other => Err(Error::Parse(format!("unknown identifier `{other}`"))),
        },
        Rule::call => {
            let mut inner = pair.into_inner();
            let name = inner.next().expect("function name").as_str().to_string();
            let args = inner.map(build).collect::<Result<Vec<_>>>()?;
            let (func, arity) = Func::lookup(&name)
                .ok_or_else(|| Error::Parse(format!("unknown function `{name}`")))?;
            if args.len() != arity {
                return Err(Error::Parse(format!(
                    "`{name}` takes {arity} argument(s), got {}",
                    args.len()
                )));
            }
            Ok(Node::Call(func, args))
        }
        r => unreachable!("unexpected rule {r:?}"),
    }
}

fn eval(node: &Node, x: [f64; 2]) -> f64 {
    match node {
        Node::Num(v) => *v,
        Node::X1 => x[0],
        Node::X2 => x[1],
        Node::Neg(a) => -eval(a, x),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                '^' => pow(a, b),
                _ => unreachable!(),
            }
        }
        Node::Call(f, args) => {
            let a = eval(&args[0], x);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Tan => a.tan(),
                Func::Exp => a.exp(),
                Func::Ln => a.ln(),
                Func::Sqrt => a.sqrt(),
                Func::Abs => a.abs(),
                Func::Tanh => a.tanh(),
                Func::Sinh => a.sinh(),
                Func::Cosh => a.cosh(),
                Func::Atan => a.atan(),
                Func::Atan2 => a.atan2(eval(&args[1], x)),
                Func::Min => a.min(eval(&args[1], x)),
                Func::Max => a.max(eval(&args[1], x)),
                Func::Pow => pow(a, eval(&args[1], x)),
                Func::Step => {
                    if a >= 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Func::Bump => bump(a, eval(&args[1], x), eval(&args[2], x)),
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() < 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

/// Smooth compactly supported cutoff on `(a, b)`, equal to 1 at the midpoint.
pub fn bump(t: f64, a: f64, b: f64) -> f64 {
    if !(t > a && t < b) {
        return 0.0;
    }
    let s = (2.0 * t - a - b) / (b - a);
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (1.0 - 1.0 / q).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(src: &str, x1: f64, x2: f64) -> f64 {
        Expr::parse(src).unwrap().eval([x1, x2])
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0.0, 0.0), 7.0);
        assert_eq!(ev("2 ^ 3 ^ 2", 0.0, 0.0), 512.0);
        assert_eq!(ev("-2 ^ 2", 0.0, 0.0), -4.0);
        assert_eq!(ev("8 / 4 / 2", 0.0, 0.0), 1.0);
        assert_eq!(ev("1 - 2 - 3", 0.0, 0.0), -4.0);
    }

    #[test]
    fn variables_and_functions() {
        let v = ev("0.01*sin(2*pi*x2) + x1^2", 3.0, 0.25);
        assert!((v - (0.01 + 9.0)).abs() < 1e-14);
        assert_eq!(ev("max(x1, x2)", -1.0, 2.0), 2.0);
        assert_eq!(ev("1e-3 * 2", 0.0, 0.0), 2e-3);
        assert_eq!(ev("bump(x2, 0, 1)", 0.0, 0.5), 1.0);
        assert_eq!(ev("bump(x2, 0.2, 0.8)", 0.0, 0.1), 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Expr::parse("sin(").is_err());
        assert!(Expr::parse("foo(1)").is_err());
        assert!(Expr::parse("z + 1").is_err());
        assert!(Expr::parse("max(1)").is_err());
    }
}
