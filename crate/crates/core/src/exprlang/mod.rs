//! Analytic expressions for metric and complex-structure components.
//!
//! Grammar, loosest to tightest: `+ -`, `* /`, unary `-`, `^` (right
//! associative, constant exponent), then literals, identifiers, calls and
//! parentheses.

mod metric_file;
mod parser;

pub use metric_file::{Domain, MetricDefinition, MetricFile};
pub use parser::{parse, ParseError, ParseErrorKind};

use std::fmt::Write as _;

use crate::jets::{Jet, JetError, JetFn, NVARS};

/// Names visible to an expression: four chart coordinates and a parameter list.
#[derive(Debug, Clone, PartialEq)]
pub struct Scope {
    pub coords: [String; NVARS],
    pub params: Vec<String>,
}

impl Scope {
    pub fn new(coords: [&str; NVARS], params: &[&str]) -> Self {
        Scope {
            coords: coords.map(str::to_string),
            params: params.iter().map(|p| p.to_string()).collect(),
        }
    }

    /// Coordinates `x, y, z, w` and no parameters.
    pub fn standard() -> Self {
        Scope::new(["x", "y", "z", "w"], &[])
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Param(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, f64),
    Call(JetFn, Box<Expr>),
}

/// Functions callable from expressions. `pow` is spelled with `^`.
pub(crate) fn function_by_name(name: &str) -> Option<JetFn> {
    Some(match name {
        "sqrt" => JetFn::Sqrt,
        "exp" => JetFn::Exp,
        "log" => JetFn::Log,
        "sin" => JetFn::Sin,
        "cos" => JetFn::Cos,
        "sinh" => JetFn::Sinh,
        "cosh" => JetFn::Cosh,
        "tanh" => JetFn::Tanh,
        "atan" => JetFn::Atan,
        _ => return None,
    })
}

fn is_small_integer(r: f64) -> bool {
    r.fract() == 0.0 && r.abs() <= 64.0
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Num(_) => true,
            Expr::Var(_) | Expr::Param(_) => false,
            Expr::Neg(e) | Expr::Pow(e, _) | Expr::Call(_, e) => e.is_constant(),
            Expr::Bin(_, a, b) => a.is_constant() && b.is_constant(),
        }
    }

    /// Plain real evaluation.
    pub fn eval(&self, point: &[f64; NVARS], params: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => point[*i],
            Expr::Param(i) => params[*i],
            Expr::Neg(e) => -e.eval(point, params),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(point, params), b.eval(point, params));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                }
            }
            Expr::Pow(e, r) => {
                let base = e.eval(point, params);
                if is_small_integer(*r) {
                    base.powi(*r as i32)
                } else {
                    base.powf(*r)
                }
            }
            Expr::Call(f, e) => f.eval(e.eval(point, params)),
        }
    }

    /// Jet of the expression at `point`, truncated at `order`.
    pub fn eval_jet(
        &self,
        point: &[f64; NVARS],
        params: &[f64],
        order: usize,
    ) -> Result<Jet, JetError> {
        let vars = variable_jets(point, order)?;
        self.eval_with(&vars, params, order)
    }

    /// Jet evaluation against precomputed coordinate jets.
    pub fn eval_with(
        &self,
        vars: &[Jet; NVARS],
        params: &[f64],
        order: usize,
    ) -> Result<Jet, JetError> {
        Ok(match self {
            Expr::Num(v) => Jet::constant(*v, order),
            Expr::Var(i) => vars[*i].clone(),
            Expr::Param(i) => Jet::constant(params[*i], order),
            Expr::Neg(e) => -&e.eval_with(vars, params, order)?,
            Expr::Bin(op, a, b) => {
                // constant operands skip the Cauchy product
                if let (BinOp::Mul, Some(k)) = (op, a.as_constant()) {
                    return Ok(b.eval_with(vars, params, order)?.scale(k));
                }
                let lhs = a.eval_with(vars, params, order)?;
                if let Some(k) = b.as_constant() {
                    match op {
                        BinOp::Mul => return Ok(lhs.scale(k)),
                        BinOp::Div if k != 0.0 => return Ok(lhs.scale(1.0 / k)),
                        BinOp::Add => return Ok(&lhs + k),
                        BinOp::Sub => return Ok(&lhs + (-k)),
                        _ => {}
                    }
                }
                let rhs = b.eval_with(vars, params, order)?;
                match op {
                    BinOp::Add => &lhs + &rhs,
                    BinOp::Sub => &lhs - &rhs,
                    BinOp::Mul => &lhs * &rhs,
                    BinOp::Div => lhs.checked_div(&rhs)?,
                }
            }
            Expr::Pow(e, r) => {
                let base = e.eval_with(vars, params, order)?;
                if is_small_integer(*r) {
                    base.powi(*r as i32)?
                } else {
                    base.apply(JetFn::Pow(*r))?
                }
            }
            Expr::Call(f, e) => e.eval_with(vars, params, order)?.apply(*f)?,
        })
    }

    fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            _ => None,
        }
    }

    /// Folds constant subtrees into literals.
    pub fn fold_constants(&self) -> Expr {
        if self.is_constant() {
            return Expr::Num(self.eval(&[0.0; NVARS], &[]));
        }
        match self {
            Expr::Neg(e) => Expr::Neg(Box::new(e.fold_constants())),
            Expr::Bin(op, a, b) => Expr::bin(*op, a.fold_constants(), b.fold_constants()),
            Expr::Pow(e, r) => Expr::Pow(Box::new(e.fold_constants()), *r),
            Expr::Call(f, e) => Expr::Call(*f, Box::new(e.fold_constants())),
            other => other.clone(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Pow(_, _) => 4,
            _ => 5,
        }
    }

    /// Source text that parses back to the same tree under `scope`.
    pub fn to_source(&self, scope: &Scope) -> String {
        let mut out = String::new();
        self.write_source(scope, &mut out);
        out
    }

    fn write_child(&self, scope: &Scope, out: &mut String, parens: bool) {
        if parens {
            out.push('(');
        }
        self.write_source(scope, out);
        if parens {
            out.push(')');
        }
    }

    fn write_source(&self, scope: &Scope, out: &mut String) {
        match self {
            Expr::Num(v) => {
                if *v < 0.0 {
                    let _ = write!(out, "({v:?})");
                } else {
                    let _ = write!(out, "{v:?}");
                }
            }
            Expr::Var(i) => out.push_str(&scope.coords[*i]),
            Expr::Param(i) => out.push_str(&scope.params[*i]),
            Expr::Neg(e) => {
                out.push('-');
                e.write_child(scope, out, e.precedence() < 3);
            }
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                a.write_child(scope, out, a.precedence() < p);
                let _ = write!(out, " {} ", op.symbol());
                b.write_child(scope, out, b.precedence() <= p);
            }
            Expr::Pow(e, r) => {
                // the base of ^ must be an atom or parenthesised
                e.write_child(scope, out, e.precedence() <= 4);
                if *r < 0.0 {
                    let _ = write!(out, "^({r:?})");
                } else {
                    let _ = write!(out, "^{r:?}");
                }
            }
            Expr::Call(f, e) => {
                out.push_str(f.name());
                e.write_child(scope, out, true);
            }
        }
    }
}

/// Jets of the four coordinate functions at `point`.
pub fn variable_jets(point: &[f64; NVARS], order: usize) -> Result<[Jet; NVARS], JetError> {
    let mut out: [Jet; NVARS] = std::array::from_fn(|_| Jet::zero(0));
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = Jet::variable(i, point[i], order)?;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jets::MultiIndex;

    #[test]
    fn arithmetic_and_precedence() {
        let s = Scope::standard();
        let e = parse("1 + 2*3", &s).unwrap();
        assert_eq!(e.eval(&[0.0; 4], &[]), 7.0);
        assert_eq!(e.fold_constants(), Expr::Num(7.0));

        let e = parse("4/(1 + x^2 + y^2)^2", &s).unwrap();
        assert_eq!(e.eval(&[0.0; 4], &[]), 4.0);

        // unary minus binds looser than ^
        let e = parse("-x^2", &s).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0, 0.0, 0.0], &[]), -9.0);
        // ^ is right associative
        let e = parse("2^3^2", &s).unwrap();
        assert_eq!(e.eval(&[0.0; 4], &[]), 512.0);
        let e = parse("x^-2", &s).unwrap();
        assert_eq!(e.eval(&[2.0, 0.0, 0.0, 0.0], &[]), 0.25);
        let e = parse("8 / 2 / 2 - 1 - 1", &s).unwrap();
        assert_eq!(e.eval(&[0.0; 4], &[]), 0.0);
    }

    #[test]
    fn jet_evaluation() {
        let s = Scope::standard();
        let x = parse("x", &s).unwrap();
        let j = x.eval_jet(&[2.0, 0.0, 0.0, 0.0], &[], 3).unwrap();
        assert_eq!(j, Jet::variable(0, 2.0, 3).unwrap());

        let e = parse("exp(x)", &s).unwrap();
        let j = e.eval_jet(&[0.0; 4], &[], 4).unwrap();
        assert!((j.coeff(&MultiIndex([4, 0, 0, 0])) - 1.0 / 24.0).abs() < 1e-16);

        let one = parse("1", &s).unwrap();
        let j = one.eval_jet(&[0.3, 0.1, 0.2, 0.0], &[], 2).unwrap();
        assert_eq!(j, Jet::constant(1.0, 2));

        let bad = parse("log(x)", &s).unwrap();
        assert!(matches!(
            bad.eval_jet(&[-1.0, 0.0, 0.0, 0.0], &[], 2),
            Err(JetError::Domain { func: "log", .. })
        ));
    }

    #[test]
    fn parameters_resolve_by_index() {
        let s = Scope::new(["x", "y", "z", "w"], &["a", "b"]);
        let e = parse("a*x + b", &s).unwrap();
        assert_eq!(e.eval(&[2.0, 0.0, 0.0, 0.0], &[3.0, 1.0]), 7.0);
    }

    #[test]
    fn source_round_trip_examples() {
        let s = Scope::new(["x", "y", "z", "w"], &["k"]);
        for src in [
            "1 - (2 - 3)",
            "-(x + y)^2",
            "(-x)^2",
            "x^(-1.5) * sin(y*z) / (k - w)",
            "--x",
            "2^3^2",
            "(2^3)^2",
            "a - -b".replace('a', "x").replace('b', "y").as_str(),
        ] {
            let e = parse(src, &s).unwrap();
            let printed = e.to_source(&s);
            assert_eq!(parse(&printed, &s).unwrap(), e, "{src} -> {printed}");
        }
    }
}
