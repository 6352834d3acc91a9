//! Scope and type checking.
//!
//! `validate` annotates every subexpression with its type and enforces the
//! static invariants: all variables resolve, boolean and integer operators
//! are applied at matching types, flip probabilities lie in `[0, 1]`,
//! categorical weights are nonnegative and sum to exactly one, and integer
//! constants fit their declared width. Tuples hold scalars only and appear
//! un-nested, so every program denotes a finite, flat output space.

use super::ast::{bits_needed, BoolOp, Expr, Ident, Param, Program, ScalarType, Type};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ValidateError {
    #[error("unbound variable `{0}`")]
    UnboundVar(String),
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
    #[error("type mismatch in {context}: expected {expected}, found {found}")]
    TypeMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("flip probability {0} outside [0, 1]")]
    FlipRange(Rational),
    #[error("categorical weights must be nonnegative, found {0}")]
    NegativeWeight(Rational),
    #[error("categorical weights sum to {0}, expected exactly 1")]
    WeightSum(Rational),
    #[error("categorical width {width} does not match {outcomes} outcomes")]
    CategoricalWidth { width: u8, outcomes: usize },
    #[error("integer constant {value} does not fit in width {width}")]
    IntConstRange { value: u64, width: u8 },
    #[error("integer width {0} out of range 1..=63")]
    WidthRange(u8),
    #[error("tuples may not nest")]
    NestedTuple,
    #[error("tuple needs at least two elements")]
    ShortTuple,
}

/// An expression annotated with the type of every node.
#[derive(Debug, Clone, PartialEq)]
pub struct TypedExpr {
    pub kind: TypedExprKind,
    pub ty: Type,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedExprKind {
    BoolConst(bool),
    IntConst { value: u64, width: u8 },
    Var(Ident),
    Flip(Rational),
    Categorical { weights: Vec<Rational>, width: u8 },
    Not(Box<TypedExpr>),
    Bool {
        op: BoolOp,
        lhs: Box<TypedExpr>,
        rhs: Box<TypedExpr>,
    },
    IntAdd {
        lhs: Box<TypedExpr>,
        rhs: Box<TypedExpr>,
        saturating: bool,
    },
    IntGe(Box<TypedExpr>, Box<TypedExpr>),
    IntEq(Box<TypedExpr>, Box<TypedExpr>),
    Ite {
        cond: Box<TypedExpr>,
        then_branch: Box<TypedExpr>,
        else_branch: Box<TypedExpr>,
    },
    Let {
        name: Ident,
        bound: Box<TypedExpr>,
        body: Box<TypedExpr>,
    },
    Tuple(Vec<TypedExpr>),
}

/// A scope- and type-checked program.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedProgram {
    /// The original syntax tree (used for rendering and equality).
    pub program: Program,
    pub body: TypedExpr,
    /// The body type flattened to a list of scalars.
    pub output_type: Vec<ScalarType>,
}

impl ValidatedProgram {
    pub fn params(&self) -> &[Param] {
        &self.program.params
    }

    /// Total number of output bits (bools count one, ints their width).
    pub fn output_bits(&self) -> usize {
        self.output_type.iter().map(ScalarType::bit_width).sum()
    }
}

struct Checker {
    scope: Vec<(Ident, Type)>,
}

impl Checker {
    fn lookup(&self, name: &str) -> Option<&Type> {
        self.scope
            .iter()
            .rev()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    fn expect_bool(e: &TypedExpr, context: &'static str) -> Result<(), ValidateError> {
        if e.ty == Type::Scalar(ScalarType::Bool) {
            Ok(())
        } else {
            Err(ValidateError::TypeMismatch {
                context,
                expected: "bool".into(),
                found: e.ty.to_string(),
            })
        }
    }

    fn expect_int(e: &TypedExpr, context: &'static str) -> Result<u8, ValidateError> {
        match e.ty {
            Type::Scalar(ScalarType::Int { width }) => Ok(width),
            _ => Err(ValidateError::TypeMismatch {
                context,
                expected: "int(_)".into(),
                found: e.ty.to_string(),
            }),
        }
    }

    fn check(&mut self, e: &Expr) -> Result<TypedExpr, ValidateError> {
        match e {
            Expr::BoolConst(b) => Ok(TypedExpr {
                kind: TypedExprKind::BoolConst(*b),
                ty: Type::Scalar(ScalarType::Bool),
            }),
            Expr::IntConst { value, width } => {
                if *width == 0 || *width > 63 {
                    return Err(ValidateError::WidthRange(*width));
                }
                if *value >= (1u64 << width) {
                    return Err(ValidateError::IntConstRange {
                        value: *value,
                        width: *width,
                    });
                }
                Ok(TypedExpr {
                    kind: TypedExprKind::IntConst {
                        value: *value,
                        width: *width,
                    },
                    ty: Type::Scalar(ScalarType::Int { width: *width }),
                })
            }
            Expr::Var(name) => {
                let ty = self
                    .lookup(name)
                    .cloned()
                    .ok_or_else(|| ValidateError::UnboundVar(name.clone()))?;
                Ok(TypedExpr {
                    kind: TypedExprKind::Var(name.clone()),
                    ty,
                })
            }
            Expr::Flip(p) => {
                if p.is_negative() || *p > Rational::one() {
                    return Err(ValidateError::FlipRange(p.clone()));
                }
                Ok(TypedExpr {
                    kind: TypedExprKind::Flip(p.clone()),
                    ty: Type::Scalar(ScalarType::Bool),
                })
            }
            Expr::Categorical { weights, width } => {
                let mut sum = Rational::zero();
                for w in weights {
                    if w.is_negative() {
                        return Err(ValidateError::NegativeWeight(w.clone()));
                    }
                    sum += w;
                }
                if !sum.is_one() {
                    return Err(ValidateError::WeightSum(sum));
                }
                let expected = bits_needed(weights.len() as u64 - 1);
                if *width != expected {
                    return Err(ValidateError::CategoricalWidth {
                        width: *width,
                        outcomes: weights.len(),
                    });
                }
                Ok(TypedExpr {
                    kind: TypedExprKind::Categorical {
                        weights: weights.clone(),
                        width: *width,
                    },
                    ty: Type::Scalar(ScalarType::Int { width: *width }),
                })
            }
            Expr::Not(inner) => {
                let inner = self.check(inner)?;
                Self::expect_bool(&inner, "negation")?;
                Ok(TypedExpr {
                    kind: TypedExprKind::Not(Box::new(inner)),
                    ty: Type::Scalar(ScalarType::Bool),
                })
            }
            Expr::Bool { op, lhs, rhs } => {
                let lhs = self.check(lhs)?;
                let rhs = self.check(rhs)?;
                Self::expect_bool(&lhs, "boolean operator")?;
                Self::expect_bool(&rhs, "boolean operator")?;
                Ok(TypedExpr {
                    kind: TypedExprKind::Bool {
                        op: *op,
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                    },
                    ty: Type::Scalar(ScalarType::Bool),
                })
            }
            Expr::IntAdd {
                lhs,
                rhs,
                saturating,
            } => {
                let lhs = self.check(lhs)?;
                let rhs = self.check(rhs)?;
                let wl = Self::expect_int(&lhs, "addition")?;
                let wr = Self::expect_int(&rhs, "addition")?;
                if wl != wr {
                    return Err(ValidateError::TypeMismatch {
                        context: "addition",
                        expected: format!("int({wl})"),
                        found: format!("int({wr})"),
                    });
                }
                Ok(TypedExpr {
                    kind: TypedExprKind::IntAdd {
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                        saturating: *saturating,
                    },
                    ty: Type::Scalar(ScalarType::Int { width: wl }),
                })
            }
            Expr::IntGe(l, r) | Expr::IntEq(l, r) => {
                let is_ge = matches!(e, Expr::IntGe(_, _));
                let context: &'static str = if is_ge { "comparison" } else { "equality" };
                let l = self.check(l)?;
                let r = self.check(r)?;
                let wl = Self::expect_int(&l, context)?;
                let wr = Self::expect_int(&r, context)?;
                if wl != wr {
                    return Err(ValidateError::TypeMismatch {
                        context,
                        expected: format!("int({wl})"),
                        found: format!("int({wr})"),
                    });
                }
                let kind = if is_ge {
                    TypedExprKind::IntGe(Box::new(l), Box::new(r))
                } else {
                    TypedExprKind::IntEq(Box::new(l), Box::new(r))
                };
                Ok(TypedExpr {
                    kind,
                    ty: Type::Scalar(ScalarType::Bool),
                })
            }
            Expr::Ite {
                cond,
                then_branch,
                else_branch,
            } => {
                let cond = self.check(cond)?;
                Self::expect_bool(&cond, "if condition")?;
                let then_branch = self.check(then_branch)?;
                let else_branch = self.check(else_branch)?;
                if then_branch.ty != else_branch.ty {
                    return Err(ValidateError::TypeMismatch {
                        context: "if branches",
                        expected: then_branch.ty.to_string(),
                        found: else_branch.ty.to_string(),
                    });
                }
                let ty = then_branch.ty.clone();
                Ok(TypedExpr {
                    kind: TypedExprKind::Ite {
                        cond: Box::new(cond),
                        then_branch: Box::new(then_branch),
                        else_branch: Box::new(else_branch),
                    },
                    ty,
                })
            }
            Expr::Let { name, bound, body } => {
                let bound = self.check(bound)?;
                self.scope.push((name.clone(), bound.ty.clone()));
                let body = self.check(body);
                self.scope.pop();
                let body = body?;
                let ty = body.ty.clone();
                Ok(TypedExpr {
                    kind: TypedExprKind::Let {
                        name: name.clone(),
                        bound: Box::new(bound),
                        body: Box::new(body),
                    },
                    ty,
                })
            }
            Expr::Tuple(elems) => {
                if elems.len() < 2 {
                    return Err(ValidateError::ShortTuple);
                }
                let mut typed = Vec::with_capacity(elems.len());
                let mut scalars = Vec::with_capacity(elems.len());
                for elem in elems {
                    let te = self.check(elem)?;
                    match te.ty {
                        Type::Scalar(s) => scalars.push(s),
                        Type::Tuple(_) => return Err(ValidateError::NestedTuple),
                    }
                    typed.push(te);
                }
                Ok(TypedExpr {
                    kind: TypedExprKind::Tuple(typed),
                    ty: Type::Tuple(scalars),
                })
            }
        }
    }
}

/// Scope- and type-checks a program.
pub fn validate(program: Program) -> Result<ValidatedProgram, ValidateError> {
    let mut seen = std::collections::HashSet::new();
    for p in &program.params {
        if !seen.insert(p.name.clone()) {
            return Err(ValidateError::DuplicateParam(p.name.clone()));
        }
        if let ScalarType::Int { width } = p.ty {
            if width == 0 || width > 63 {
                return Err(ValidateError::WidthRange(width));
            }
        }
    }
    let mut checker = Checker {
        scope: program
            .params
            .iter()
            .map(|p| (p.name.clone(), Type::Scalar(p.ty)))
            .collect(),
    };
    let body = checker.check(&program.body)?;
    let output_type = match &body.ty {
        Type::Scalar(s) => vec![*s],
        Type::Tuple(elems) => elems.clone(),
    };
    Ok(ValidatedProgram {
        program,
        body,
        output_type,
    })
}
