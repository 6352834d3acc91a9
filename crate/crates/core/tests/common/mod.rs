//! Seeded random-program generation for round-trip and equivalence tests.
//! Programs are valid by construction: scope-correct, width-consistent,
//! probabilities in range, categorical weights summing to one.

use dpbound::lang::{Expr, Param, Program, ScalarType};
use dpbound::Rational;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub struct GenLimits {
    pub max_depth: usize,
    /// Conservative coin budget (a categorical of k outcomes costs k - 1).
    pub max_coins: usize,
    /// Cap on the total input bits across parameters.
    pub max_input_bits: usize,
}

impl Default for GenLimits {
    fn default() -> Self {
        GenLimits {
            max_depth: 4,
            max_coins: 8,
            max_input_bits: 6,
        }
    }
}

struct Gen {
    rng: StdRng,
    limits: GenLimits,
    coins_left: usize,
    next_binder: usize,
}

pub fn gen_program(seed: u64, limits: GenLimits) -> Program {
    let mut gen = Gen {
        rng: StdRng::seed_from_u64(seed),
        coins_left: limits.max_coins,
        limits,
        next_binder: 0,
    };
    let mut params = Vec::new();
    let mut bits = 0usize;
    let n_params = gen.rng.gen_range(0..=3);
    for i in 0..n_params {
        let ty = if gen.rng.gen_bool(0.5) {
            ScalarType::Bool
        } else {
            ScalarType::Int {
                width: gen.rng.gen_range(1..=2),
            }
        };
        if bits + ty.bit_width() > gen.limits.max_input_bits {
            break;
        }
        bits += ty.bit_width();
        params.push(Param {
            name: format!("x{}", i + 1),
            ty,
        });
    }

    let mut env: Vec<(String, ScalarType)> =
        params.iter().map(|p| (p.name.clone(), p.ty)).collect();
    let body = if gen.rng.gen_bool(0.3) {
        let len = gen.rng.gen_range(2..=3);
        let depth = gen.limits.max_depth;
        Expr::Tuple(
            (0..len)
                .map(|_| {
                    let ty = gen.random_scalar_type();
                    gen.expr(ty, depth, &mut env)
                })
                .collect(),
        )
    } else {
        let ty = gen.random_scalar_type();
        gen.expr(ty, gen.limits.max_depth, &mut env)
    };
    Program { params, body }
}

impl Gen {
    fn random_scalar_type(&mut self) -> ScalarType {
        if self.rng.gen_bool(0.5) {
            ScalarType::Bool
        } else {
            ScalarType::Int {
                width: self.rng.gen_range(1..=3),
            }
        }
    }

    fn rational_in_unit(&mut self) -> Rational {
        let den = self.rng.gen_range(1..=9i64);
        let num = self.rng.gen_range(0..=den);
        Rational::new(num, den)
    }

    /// Nonnegative weights with an exact sum of one.
    fn categorical_weights(&mut self, outcomes: usize) -> Vec<Rational> {
        let den = self.rng.gen_range(1..=8i64);
        let mut remaining = den;
        let mut weights = Vec::with_capacity(outcomes);
        for _ in 0..outcomes - 1 {
            let part = self.rng.gen_range(0..=remaining);
            weights.push(Rational::new(part, den));
            remaining -= part;
        }
        weights.push(Rational::new(remaining, den));
        weights
    }

    fn var_of_type(&mut self, ty: ScalarType, env: &[(String, ScalarType)]) -> Option<Expr> {
        let candidates: Vec<&String> = env
            .iter()
            .filter(|(_, t)| *t == ty)
            .map(|(n, _)| n)
            .collect();
        if candidates.is_empty() {
            None
        } else {
            let pick = self.rng.gen_range(0..candidates.len());
            Some(Expr::Var(candidates[pick].clone()))
        }
    }

    fn leaf(&mut self, ty: ScalarType, env: &[(String, ScalarType)]) -> Expr {
        if self.rng.gen_bool(0.5) {
            if let Some(v) = self.var_of_type(ty, env) {
                return v;
            }
        }
        match ty {
            ScalarType::Bool => {
                if self.coins_left > 0 && self.rng.gen_bool(0.6) {
                    self.coins_left -= 1;
                    Expr::Flip(self.rational_in_unit())
                } else {
                    Expr::BoolConst(self.rng.gen_bool(0.5))
                }
            }
            ScalarType::Int { width } => {
                let value = self.rng.gen_range(0..(1u64 << width));
                Expr::int(width, value)
            }
        }
    }

    fn expr(&mut self, ty: ScalarType, depth: usize, env: &mut Vec<(String, ScalarType)>) -> Expr {
        if depth == 0 {
            return self.leaf(ty, env);
        }
        match ty {
            ScalarType::Bool => match self.rng.gen_range(0..8) {
                0 => self.leaf(ty, env),
                1 => self.expr(ty, depth - 1, env).not(),
                2 | 3 => {
                    let lhs = self.expr(ScalarType::Bool, depth - 1, env);
                    let rhs = self.expr(ScalarType::Bool, depth - 1, env);
                    match self.rng.gen_range(0..4) {
                        0 => lhs.and(rhs),
                        1 => lhs.or(rhs),
                        2 => lhs.xor(rhs),
                        _ => lhs.iff(rhs),
                    }
                }
                4 => {
                    let width = self.rng.gen_range(1..=3);
                    let lhs = self.expr(ScalarType::Int { width }, depth - 1, env);
                    let rhs = self.expr(ScalarType::Int { width }, depth - 1, env);
                    if self.rng.gen_bool(0.5) {
                        lhs.ge(rhs)
                    } else {
                        lhs.eq(rhs)
                    }
                }
                5 => self.ite(ty, depth, env),
                6 => self.let_in(ty, depth, env),
                _ => self.leaf(ty, env),
            },
            ScalarType::Int { width } => match self.rng.gen_range(0..7) {
                0 | 1 => self.leaf(ty, env),
                2 => {
                    let lhs = self.expr(ty, depth - 1, env);
                    let rhs = self.expr(ty, depth - 1, env);
                    Expr::IntAdd {
                        lhs: Box::new(lhs),
                        rhs: Box::new(rhs),
                        saturating: self.rng.gen_bool(0.7),
                    }
                }
                3 => self.ite(ty, depth, env),
                4 => self.let_in(ty, depth, env),
                5 => {
                    // A categorical whose minimal width is exactly `width`.
                    let lo = (1usize << (width - 1)) + 1;
                    let hi = 1usize << width;
                    let lo = lo.max(2);
                    let outcomes = self.rng.gen_range(lo..=hi.max(lo));
                    if self.coins_left >= outcomes - 1 {
                        self.coins_left -= outcomes - 1;
                        Expr::categorical(self.categorical_weights(outcomes))
                    } else {
                        self.leaf(ty, env)
                    }
                }
                _ => self.leaf(ty, env),
            },
        }
    }

    fn ite(&mut self, ty: ScalarType, depth: usize, env: &mut Vec<(String, ScalarType)>) -> Expr {
        let cond = self.expr(ScalarType::Bool, depth - 1, env);
        let t = self.expr(ty, depth - 1, env);
        let e = self.expr(ty, depth - 1, env);
        Expr::ite(cond, t, e)
    }

    fn let_in(
        &mut self,
        ty: ScalarType,
        depth: usize,
        env: &mut Vec<(String, ScalarType)>,
    ) -> Expr {
        let bound_ty = self.random_scalar_type();
        let bound = self.expr(bound_ty, depth - 1, env);
        let name = format!("v{}", self.next_binder);
        self.next_binder += 1;
        env.push((name.clone(), bound_ty));
        let body = self.expr(ty, depth - 1, env);
        env.pop();
        Expr::let_in(&name, bound, body)
    }
}

/// Every input vector of the program's parameter space.
pub fn enumerate_inputs(params: &[Param]) -> Vec<Vec<u64>> {
    let mut inputs = vec![vec![]];
    for p in params {
        let card = p.ty.cardinality();
        let mut next = Vec::with_capacity(inputs.len() * card as usize);
        for prefix in &inputs {
            for v in 0..card {
                let mut item = prefix.clone();
                item.push(v);
                next.push(item);
            }
        }
        inputs = next;
    }
    inputs
}
