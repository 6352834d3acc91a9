//! Abstract syntax for the discrete probabilistic language.
//!
//! Programs are pure, loop-free expressions over booleans and fixed-width
//! unsigned integers, with two probabilistic primitives: `flip p` (a biased
//! coin) and `categorical [p1, .., pk]` (a finite distribution over
//! `0..k-1`). Integer arithmetic saturates at `2^width - 1` by default so
//! that every program denotes a distribution over a finite output space.

use crate::rational::Rational;

pub type Ident = String;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScalarType {
    Bool,
    Int { width: u8 },
}

impl ScalarType {
    pub fn bit_width(&self) -> usize {
        match self {
            ScalarType::Bool => 1,
            ScalarType::Int { width } => *width as usize,
        }
    }

    /// Number of representable values.
    pub fn cardinality(&self) -> u64 {
        match self {
            ScalarType::Bool => 2,
            ScalarType::Int { width } => 1u64 << width,
        }
    }
}

impl std::fmt::Display for ScalarType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScalarType::Bool => write!(f, "bool"),
            ScalarType::Int { width } => write!(f, "int({width})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Type {
    Scalar(ScalarType),
    Tuple(Vec<ScalarType>),
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Type::Scalar(s) => write!(f, "{s}"),
            Type::Tuple(elems) => {
                write!(f, "(")?;
                for (i, e) in elems.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{e}")?;
                }
                write!(f, ")")
            }
        }
    }
}

/// Binary boolean connectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoolOp {
    And,
    Or,
    Xor,
    Iff,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    BoolConst(bool),
    IntConst {
        value: u64,
        width: u8,
    },
    Var(Ident),
    /// A coin that comes up true with probability `prob`.
    Flip(Rational),
    /// A distribution over outcome indices `0..weights.len()`; the weights
    /// must be nonnegative and sum to exactly one.
    Categorical {
        weights: Vec<Rational>,
        width: u8,
    },
    Not(Box<Expr>),
    Bool {
        op: BoolOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    IntAdd {
        lhs: Box<Expr>,
        rhs: Box<Expr>,
        saturating: bool,
    },
    IntGe(Box<Expr>, Box<Expr>),
    IntEq(Box<Expr>, Box<Expr>),
    Ite {
        cond: Box<Expr>,
        then_branch: Box<Expr>,
        else_branch: Box<Expr>,
    },
    Let {
        name: Ident,
        bound: Box<Expr>,
        body: Box<Expr>,
    },
    Tuple(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: Ident,
    pub ty: ScalarType,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub params: Vec<Param>,
    pub body: Expr,
}

/// Bits needed to represent `max_value` (at least one).
pub fn bits_needed(max_value: u64) -> u8 {
    let bits = 64 - max_value.leading_zeros() as u8;
    bits.max(1)
}

/// Per-step biases of the coin chain a `categorical` lowers to.
///
/// Step `j` succeeds (selecting outcome `j`) with probability
/// `w_j / (1 - w_0 - .. - w_{j-1})`. A zero residual ends the chain early:
/// the remaining outcomes carry no mass. Both the compiler and the
/// brute-force evaluator use this function, so coin counts always agree.
pub fn categorical_chain(weights: &[Rational]) -> Vec<Rational> {
    let mut chain = Vec::new();
    let mut residual = Rational::one();
    for w in &weights[..weights.len().saturating_sub(1)] {
        if residual.is_zero() {
            break;
        }
        chain.push(w / &residual);
        residual -= w;
    }
    chain
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn flip(prob: Rational) -> Expr {
        Expr::Flip(prob)
    }

    /// Builds a categorical with the minimal width for its outcome count.
    pub fn categorical(weights: Vec<Rational>) -> Expr {
        let width = bits_needed(weights.len().saturating_sub(1) as u64);
        Expr::Categorical { weights, width }
    }

    pub fn int(width: u8, value: u64) -> Expr {
        Expr::IntConst { value, width }
    }

    pub fn not(self) -> Expr {
        Expr::Not(Box::new(self))
    }

    pub fn and(self, rhs: Expr) -> Expr {
        Expr::Bool {
            op: BoolOp::And,
            lhs: Box::new(self),
            rhs: Box::new(rhs),
        }
    }

    pub fn or(self, rhs: Expr) -> Expr {
        Expr::Bool {
            op: BoolOp::Or,
            lhs: Box::new(self),
            rhs: Box::new(rhs),
        }
    }

    pub fn xor(self, rhs: Expr) -> Expr {
        Expr::Bool {
            op: BoolOp::Xor,
            lhs: Box::new(self),
            rhs: Box::new(rhs),
        }
    }

    pub fn iff(self, rhs: Expr) -> Expr {
        Expr::Bool {
            op: BoolOp::Iff,
            lhs: Box::new(self),
            rhs: Box::new(rhs),
        }
    }

    /// Saturating integer addition (clamps at `2^width - 1`).
    pub fn add(self, rhs: Expr) -> Expr {
        Expr::IntAdd {
            lhs: Box::new(self),
            rhs: Box::new(rhs),
            saturating: true,
        }
    }

    pub fn ge(self, rhs: Expr) -> Expr {
        Expr::IntGe(Box::new(self), Box::new(rhs))
    }

    pub fn eq(self, rhs: Expr) -> Expr {
        Expr::IntEq(Box::new(self), Box::new(rhs))
    }

    pub fn ite(cond: Expr, then_branch: Expr, else_branch: Expr) -> Expr {
        Expr::Ite {
            cond: Box::new(cond),
            then_branch: Box::new(then_branch),
            else_branch: Box::new(else_branch),
        }
    }

    pub fn let_in(name: &str, bound: Expr, body: Expr) -> Expr {
        Expr::Let {
            name: name.to_string(),
            bound: Box::new(bound),
            body: Box::new(body),
        }
    }

    /// Number of `flip` nodes in the expression tree.
    pub fn flip_count(&self) -> usize {
        match self {
            Expr::Flip(_) => 1,
            Expr::BoolConst(_) | Expr::IntConst { .. } | Expr::Var(_) | Expr::Categorical { .. } => 0,
            Expr::Not(e) => e.flip_count(),
            Expr::Bool { lhs, rhs, .. } => lhs.flip_count() + rhs.flip_count(),
            Expr::IntAdd { lhs, rhs, .. } => lhs.flip_count() + rhs.flip_count(),
            Expr::IntGe(l, r) | Expr::IntEq(l, r) => l.flip_count() + r.flip_count(),
            Expr::Ite {
                cond,
                then_branch,
                else_branch,
            } => cond.flip_count() + then_branch.flip_count() + else_branch.flip_count(),
            Expr::Let { bound, body, .. } => bound.flip_count() + body.flip_count(),
            Expr::Tuple(elems) => elems.iter().map(Expr::flip_count).sum(),
        }
    }
}
