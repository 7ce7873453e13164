//! Value expressions (parameter defaults, arguments, bindings) and the
//! boolean condition language used for stop conditions, guards and
//! transition pre/post conditions.

use std::collections::BTreeMap;
use std::fmt;

/// Declared parameter type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamType {
    Num,
    Bool,
    Str,
    Frame,
    Vec6,
}

impl ParamType {
    pub fn keyword(self) -> &'static str {
        match self {
            ParamType::Num => "num",
            ParamType::Bool => "bool",
            ParamType::Str => "string",
            ParamType::Frame => "frame",
            ParamType::Vec6 => "vec6",
        }
    }

    pub fn from_keyword(s: &str) -> Option<ParamType> {
        Some(match s {
            "num" => ParamType::Num,
            "bool" => ParamType::Bool,
            "string" => ParamType::Str,
            "frame" => ParamType::Frame,
            "vec6" => ParamType::Vec6,
            _ => return None,
        })
    }

    pub fn value_type(self) -> ValueType {
        match self {
            ParamType::Num => ValueType::Num,
            ParamType::Bool => ValueType::Bool,
            ParamType::Str => ValueType::Str,
            ParamType::Frame => ValueType::Frame,
            ParamType::Vec6 => ValueType::Vec(6),
        }
    }
}

/// Type of an evaluated expression. `Vec(n)` covers fixed-length numeric
/// lists; only `Vec(6)` is nameable as a parameter type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueType {
    Num,
    Bool,
    Str,
    Frame,
    Vec(usize),
}

impl fmt::Display for ValueType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ValueType::Num => f.write_str("num"),
            ValueType::Bool => f.write_str("bool"),
            ValueType::Str => f.write_str("string"),
            ValueType::Frame => f.write_str("frame"),
            ValueType::Vec(6) => f.write_str("vec6"),
            ValueType::Vec(n) => write!(f, "vec{n}"),
        }
    }
}

/// A frame literal: a 6-vector offset (x, y, z, roll, pitch, yaw) relative to
/// a named scene object, with an optional uninterpreted link annotation.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameValue {
    pub reference: String,
    pub offset: [f64; 6],
    pub link: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Num(f64),
    Bool(bool),
    Str(String),
    Frame(FrameValue),
    Vec(Vec<f64>),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Num(_) => ValueType::Num,
            Value::Bool(_) => ValueType::Bool,
            Value::Str(_) => ValueType::Str,
            Value::Frame(_) => ValueType::Frame,
            Value::Vec(v) => ValueType::Vec(v.len()),
        }
    }

    pub fn as_num(&self) -> Option<f64> {
        match self {
            Value::Num(x) => Some(*x),
            _ => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            Value::Str(s) => Some(s),
            _ => None,
        }
    }

    /// Rebuilds the value as a literal expression.
    pub fn to_expr(&self) -> Expr {
        match self {
            Value::Num(x) => Expr::Num(*x),
            Value::Bool(b) => Expr::Bool(*b),
            Value::Str(s) => Expr::Str(s.clone()),
            Value::Vec(v) => Expr::List(v.iter().map(|x| Expr::Num(*x)).collect()),
            Value::Frame(fv) => Expr::Frame {
                reference: Box::new(Expr::Str(fv.reference.clone())),
                offset: Box::new(Expr::List(fv.offset.iter().map(|x| Expr::Num(*x)).collect())),
                link: fv.link.as_ref().map(|l| Box::new(Expr::Str(l.clone()))),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

/// Value expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Bool(bool),
    Str(String),
    /// Parameter reference.
    Param(String),
    List(Vec<Expr>),
    Frame {
        reference: Box<Expr>,
        offset: Box<Expr>,
        link: Option<Box<Expr>>,
    },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: ValueType, found: ValueType },
    #[error("frame offset must be a 6-vector, found {0}")]
    BadFrame(ValueType),
}

/// Name-to-value environment of one component instance.
pub type Env = BTreeMap<String, Value>;

impl Expr {
    pub fn eval(&self, env: &Env) -> Result<Value, EvalError> {
        Ok(match self {
            Expr::Num(x) => Value::Num(*x),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Str(s) => Value::Str(s.clone()),
            Expr::Param(name) => env
                .get(name)
                .cloned()
                .ok_or_else(|| EvalError::UnknownParam(name.clone()))?,
            Expr::List(items) => {
                let mut out = Vec::with_capacity(items.len());
                for item in items {
                    out.push(expect_num(item.eval(env)?)?);
                }
                Value::Vec(out)
            }
            Expr::Frame { reference, offset, link } => {
                let reference = expect_str(reference.eval(env)?)?;
                let offset = match offset.eval(env)? {
                    Value::Vec(v) if v.len() == 6 => [v[0], v[1], v[2], v[3], v[4], v[5]],
                    other => return Err(EvalError::BadFrame(other.value_type())),
                };
                let link = match link {
                    Some(l) => Some(expect_str(l.eval(env)?)?),
                    None => None,
                };
                Value::Frame(FrameValue { reference, offset, link })
            }
            Expr::Neg(inner) => Value::Num(-expect_num(inner.eval(env)?)?),
            Expr::Binary(op, lhs, rhs) => {
                let a = expect_num(lhs.eval(env)?)?;
                let b = expect_num(rhs.eval(env)?)?;
                Value::Num(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                })
            }
        })
    }

    /// Static type given the parameter types in scope.
    pub fn type_of(&self, scope: &BTreeMap<String, ValueType>) -> Result<ValueType, EvalError> {
        Ok(match self {
            Expr::Num(_) => ValueType::Num,
            Expr::Bool(_) => ValueType::Bool,
            Expr::Str(_) => ValueType::Str,
            Expr::Param(name) => *scope
                .get(name)
                .ok_or_else(|| EvalError::UnknownParam(name.clone()))?,
            Expr::List(items) => {
                for item in items {
                    expect_type(item.type_of(scope)?, ValueType::Num)?;
                }
                ValueType::Vec(items.len())
            }
            Expr::Frame { reference, offset, link } => {
                expect_type(reference.type_of(scope)?, ValueType::Str)?;
                match offset.type_of(scope)? {
                    ValueType::Vec(6) => {}
                    other => return Err(EvalError::BadFrame(other)),
                }
                if let Some(l) = link {
                    expect_type(l.type_of(scope)?, ValueType::Str)?;
                }
                ValueType::Frame
            }
            Expr::Neg(inner) => {
                expect_type(inner.type_of(scope)?, ValueType::Num)?;
                ValueType::Num
            }
            Expr::Binary(_, lhs, rhs) => {
                expect_type(lhs.type_of(scope)?, ValueType::Num)?;
                expect_type(rhs.type_of(scope)?, ValueType::Num)?;
                ValueType::Num
            }
        })
    }

    /// Parameter names referenced anywhere in the expression.
    pub fn params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(n) => out.push(n.clone()),
            Expr::List(items) => items.iter().for_each(|e| e.params(out)),
            Expr::Frame { reference, offset, link } => {
                reference.params(out);
                offset.params(out);
                if let Some(l) = link {
                    l.params(out);
                }
            }
            Expr::Neg(e) => e.params(out),
            Expr::Binary(_, a, b) => {
                a.params(out);
                b.params(out);
            }
            Expr::Num(_) | Expr::Bool(_) | Expr::Str(_) => {}
        }
    }

    pub fn is_constant(&self) -> bool {
        let mut p = Vec::new();
        self.params(&mut p);
        p.is_empty()
    }
}

fn expect_type(found: ValueType, expected: ValueType) -> Result<(), EvalError> {
    if found == expected {
        Ok(())
    } else {
        Err(EvalError::TypeMismatch { expected, found })
    }
}

fn expect_num(v: Value) -> Result<f64, EvalError> {
    match v {
        Value::Num(x) => Ok(x),
        other => Err(EvalError::TypeMismatch {
            expected: ValueType::Num,
            found: other.value_type(),
        }),
    }
}

fn expect_str(v: Value) -> Result<String, EvalError> {
    match v {
        Value::Str(s) => Ok(s),
        other => Err(EvalError::TypeMismatch {
            expected: ValueType::Str,
            found: other.value_type(),
        }),
    }
}

/// Comparison operator of a numeric condition atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "==",
            CmpOp::Ne => "!=",
        }
    }

    pub fn apply(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ne => lhs != rhs,
        }
    }

    pub const ALL: [CmpOp; 6] = [CmpOp::Lt, CmpOp::Le, CmpOp::Gt, CmpOp::Ge, CmpOp::Eq, CmpOp::Ne];
}

/// Boolean condition over sensor channels and environmental-model paths.
///
/// `And`/`Or` are binary and left-associative as parsed.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditionExpr {
    Or(Box<ConditionExpr>, Box<ConditionExpr>),
    And(Box<ConditionExpr>, Box<ConditionExpr>),
    Not(Box<ConditionExpr>),
    Compare { channel: String, op: CmpOp, value: f64 },
    Channel(String),
    Const(bool),
}

impl ConditionExpr {
    pub fn or(a: ConditionExpr, b: ConditionExpr) -> ConditionExpr {
        ConditionExpr::Or(Box::new(a), Box::new(b))
    }

    pub fn and(a: ConditionExpr, b: ConditionExpr) -> ConditionExpr {
        ConditionExpr::And(Box::new(a), Box::new(b))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: ConditionExpr) -> ConditionExpr {
        ConditionExpr::Not(Box::new(a))
    }

    pub fn compare(channel: &str, op: CmpOp, value: f64) -> ConditionExpr {
        ConditionExpr::Compare { channel: channel.to_string(), op, value }
    }

    /// Every channel path mentioned, in left-to-right order.
    pub fn channels(&self, out: &mut Vec<String>) {
        match self {
            ConditionExpr::Or(a, b) | ConditionExpr::And(a, b) => {
                a.channels(out);
                b.channels(out);
            }
            ConditionExpr::Not(a) => a.channels(out),
            ConditionExpr::Compare { channel, .. } | ConditionExpr::Channel(channel) => {
                out.push(channel.clone())
            }
            ConditionExpr::Const(_) => {}
        }
    }
}
