use thiserror::Error;

use super::{BinOp, Expr, Func};
use crate::diffcalc::{Jet3, Scalar, ScalarField};
use crate::model::Point;

/// Smallest denominator magnitude accepted by `/`.
pub const DIVISION_FLOOR: f64 = 1e-300;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("{func} undefined at {arg}")]
    Domain { func: &'static str, arg: f64 },
    #[error("division by {denominator}")]
    DivisionByZero { denominator: f64 },
    #[error("{base}^{exponent} is undefined over the reals")]
    Power { base: f64, exponent: f64 },
    #[error("variable {var} does not exist for m = {m}")]
    Unbound { var: String, m: usize },
    #[error("non-finite result")]
    NonFinite,
}

impl Expr {
    /// Evaluates at `q = (x_1..x_m, y_1..y_m, z)`; `m` is read off `q.len()`.
    pub fn eval_checked<T: Scalar>(&self, q: &[T]) -> Result<T, EvalError> {
        let m = q.len().saturating_sub(1) / 2;
        let v = self.eval_inner(q, m)?;
        if v.all_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner<T: Scalar>(&self, q: &[T], m: usize) -> Result<T, EvalError> {
        Ok(match self {
            Expr::Num(v) => T::from_f64(*v),
            Expr::Var(v) => {
                let slot = v.slot(m).ok_or_else(|| EvalError::Unbound { var: v.to_string(), m })?;
                q[slot]
            }
            Expr::Neg(a) => -a.eval_inner(q, m)?,
            Expr::Call(func, a) => {
                let x = a.eval_inner(q, m)?;
                let domain = |ok: bool| {
                    if ok {
                        Ok(())
                    } else {
                        Err(EvalError::Domain { func: func.name(), arg: x.re() })
                    }
                };
                match func {
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Tan => {
                        domain(x.re().cos().abs() > DIVISION_FLOOR)?;
                        x.tan()
                    }
                    Func::Exp => x.exp(),
                    Func::Log => {
                        domain(x.re() > 0.0)?;
                        x.ln()
                    }
                    Func::Sqrt => {
                        domain(x.re() >= 0.0)?;
                        x.sqrt()
                    }
                }
            }
            Expr::Bin(op, a, b) => {
                if *op == BinOp::Pow {
                    return pow(a.eval_inner(q, m)?, b, q, m);
                }
                let x = a.eval_inner(q, m)?;
                let y = b.eval_inner(q, m)?;
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => {
                        if y.re().abs() < DIVISION_FLOOR {
                            return Err(EvalError::DivisionByZero { denominator: y.re() });
                        }
                        x / y
                    }
                    BinOp::Pow => unreachable!(),
                }
            }
        })
    }

    pub fn eval_at(&self, p: &Point) -> Result<f64, EvalError> {
        self.eval_checked(p.coords())
    }

    /// Taylor jet of `t ↦ f(p + t dir)` at `t = 0`, truncated at `order <= 3`.
    pub fn eval_jet(&self, p: &Point, dir: &[f64], order: usize) -> Result<Jet3, EvalError> {
        let q: Vec<Jet3> = p
            .coords()
            .iter()
            .zip(dir)
            .map(|(&x, &d)| Jet3::from_coefficients([x, d, 0.0, 0.0]))
            .collect();
        Ok(self.eval_checked(&q)?.truncate(order.min(3)))
    }
}

/// Integer literal exponents use repeated multiplication and accept any base;
/// everything else goes through `exp(b ln a)` and needs a positive base.
fn pow<T: Scalar>(base: T, exponent: &Expr, q: &[T], m: usize) -> Result<T, EvalError> {
    let literal = match exponent {
        Expr::Num(n) => Some(*n),
        Expr::Neg(inner) => match **inner {
            Expr::Num(n) => Some(-n),
            _ => None,
        },
        _ => None,
    };
    if let Some(n) = literal.filter(|n| n.fract() == 0.0 && n.abs() <= i32::MAX as f64) {
        if n < 0.0 && base.re().abs() < DIVISION_FLOOR {
            return Err(EvalError::DivisionByZero { denominator: base.re() });
        }
        return Ok(base.powi(n as i32));
    }
    let e = exponent.eval_inner(q, m)?;
    if base.re() > 0.0 {
        Ok(base.powf(e))
    } else {
        Err(EvalError::Power { base: base.re(), exponent: e.re() })
    }
}

/// Out-of-domain points evaluate to NaN, which the sampling and projection code
/// treats as a rejected sample.
impl ScalarField for Expr {
    fn eval<T: Scalar>(&self, q: &[T]) -> T {
        self.eval_checked(q).unwrap_or_else(|_| T::from_f64(f64::NAN))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffcalc::Dual;

    fn ev(src: &str, q: &[f64]) -> Result<f64, EvalError> {
        Expr::parse(src).unwrap().eval_checked(q)
    }

    #[test]
    fn values() {
        let q = [0.5, -1.0, 2.0];
        assert_eq!(ev("x + z", &q).unwrap(), 2.5);
        assert_eq!(ev("-x^2", &q).unwrap(), -0.25);
        assert_eq!(ev("2^3^2", &q).unwrap(), 512.0);
        assert_eq!(ev("y^3", &q).unwrap(), -1.0);
        assert!((ev("exp(log(z)) - z", &q).unwrap()).abs() < 1e-15);
        assert!((ev("sqrt(z)^2", &q).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        let q = [0.0, -1.0, 2.0];
        assert!(matches!(ev("log(y)", &q), Err(EvalError::Domain { func: "log", .. })));
        assert!(matches!(ev("sqrt(y)", &q), Err(EvalError::Domain { .. })));
        assert!(matches!(ev("1/x", &q), Err(EvalError::DivisionByZero { .. })));
        assert!(matches!(ev("x^-1", &q), Err(EvalError::DivisionByZero { .. })));
        assert!(matches!(ev("y^0.5", &q), Err(EvalError::Power { .. })));
        assert!(matches!(ev("exp(1000)", &q), Err(EvalError::NonFinite)));
        assert!(matches!(ev("x2", &q), Err(EvalError::Unbound { .. })));
        assert!(Expr::parse("log(y)").unwrap().eval(&q).is_nan());
    }

    #[test]
    fn derivatives_agree() {
        let e = Expr::parse("sin(x)*exp(y) + z^2/(1 + x^2)").unwrap();
        let q = [0.3, -0.2, 0.7];
        let dir = [1.0, 0.5, -2.0];
        let seeded: Vec<Dual<f64>> = q.iter().zip(&dir).map(|(&a, &d)| Dual::new(a, d)).collect();
        let d = e.eval_checked(&seeded).unwrap().du;
        let p = Point::new(q.to_vec()).unwrap();
        let jet = e.eval_jet(&p, &dir, 3).unwrap();
        assert!((jet.derivative(1) - d).abs() < 1e-14);
        let h = 1e-4;
        let at = |t: f64| {
            let qt: Vec<f64> = q.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            e.eval_checked(&qt).unwrap()
        };
        let fd2 = (at(h) - 2.0 * at(0.0) + at(-h)) / (h * h);
        assert!((jet.derivative(2) - fd2).abs() < 1e-5);
        assert_eq!(e.eval_jet(&p, &dir, 1).unwrap().derivative(2), 0.0);
    }
}
