//! Lexer and recursive-descent parser for `.dpp` program text.
//!
//! The surface grammar (whitespace-insensitive):
//!
//! ```text
//! program  := "fun" "(" [param ("," param)*] ")" "{" expr "}"
//! param    := ident ":" ("bool" | "int" "(" integer ")")
//! expr     := iff-chain of or / xor / and / comparison / addition / unary
//! atom     := "true" | "false" | ident | "flip" rational
//!           | "categorical" "[" rational ("," rational)* "]"
//!           | "int" "(" integer "," integer ")"
//!           | "if" expr "{" expr "}" "else" "{" expr "}"
//!           | "let" ident "=" expr "in" expr
//!           | "(" expr ")" | "(" expr ("," expr)+ ")"
//! rational := integer ["/" integer]
//! ```
//!
//! Operator precedence, loosest to tightest: `<->`, `||`, `^`, `&&`,
//! (`>=`, `==`, non-associative), (`+`, `+%`, left), `!`. `+` saturates at
//! the operand width; `+%` wraps.

use super::ast::{Expr, Param, Program, ScalarType};
use crate::rational::Rational;
use num::bigint::BigInt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at {line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Fun,
    If,
    Else,
    Let,
    In,
    Flip,
    Categorical,
    IntKw,
    BoolKw,
    True,
    False,
    Ident(String),
    Num(BigInt),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Slash,
    Bang,
    AndAnd,
    OrOr,
    Caret,
    IffArrow,
    Plus,
    PlusWrap,
    Ge,
    EqEq,
    Assign,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Tok::Fun => "fun",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::Let => "let",
            Tok::In => "in",
            Tok::Flip => "flip",
            Tok::Categorical => "categorical",
            Tok::IntKw => "int",
            Tok::BoolKw => "bool",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Ident(name) => return write!(f, "identifier `{name}`"),
            Tok::Num(n) => return write!(f, "integer `{n}`"),
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Slash => "/",
            Tok::Bang => "!",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Caret => "^",
            Tok::IffArrow => "<->",
            Tok::Plus => "+",
            Tok::PlusWrap => "+%",
            Tok::Ge => ">=",
            Tok::EqEq => "==",
            Tok::Assign => "=",
            Tok::Eof => "end of input",
        };
        write!(f, "`{s}`")
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>, ParseError> {
    let mut toks = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let bytes: Vec<char> = text.chars().collect();
    let mut i = 0usize;

    let err = |line, col, message: String| ParseError { line, col, message };

    while i < bytes.len() {
        let c = bytes[i];
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            col += 1;
            i += 1;
            continue;
        }
        let start_line = line;
        let start_col = col;
        let mut push = |tok: Tok, len: usize| {
            toks.push(Spanned {
                tok,
                line: start_line,
                col: start_col,
            });
            len
        };
        let rest = &bytes[i..];
        let two: String = rest.iter().take(2).collect();
        let three: String = rest.iter().take(3).collect();
        let advance = if three == "<->" {
            push(Tok::IffArrow, 3)
        } else if two == "&&" {
            push(Tok::AndAnd, 2)
        } else if two == "||" {
            push(Tok::OrOr, 2)
        } else if two == ">=" {
            push(Tok::Ge, 2)
        } else if two == "==" {
            push(Tok::EqEq, 2)
        } else if two == "+%" {
            push(Tok::PlusWrap, 2)
        } else if c.is_ascii_digit() {
            let digits: String = rest.iter().take_while(|c| c.is_ascii_digit()).collect();
            let n = digits
                .parse::<BigInt>()
                .map_err(|_| err(start_line, start_col, format!("bad integer `{digits}`")))?;
            push(Tok::Num(n), digits.len())
        } else if c.is_ascii_alphabetic() || c == '_' {
            let word: String = rest
                .iter()
                .take_while(|c| c.is_ascii_alphanumeric() || **c == '_')
                .collect();
            let tok = match word.as_str() {
                "fun" => Tok::Fun,
                "if" => Tok::If,
                "else" => Tok::Else,
                "let" => Tok::Let,
                "in" => Tok::In,
                "flip" => Tok::Flip,
                "categorical" => Tok::Categorical,
                "int" => Tok::IntKw,
                "bool" => Tok::BoolKw,
                "true" => Tok::True,
                "false" => Tok::False,
                _ => Tok::Ident(word.clone()),
            };
            push(tok, word.len())
        } else {
            let tok = match c {
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                ':' => Tok::Colon,
                '/' => Tok::Slash,
                '!' => Tok::Bang,
                '^' => Tok::Caret,
                '+' => Tok::Plus,
                '=' => Tok::Assign,
                other => {
                    return Err(err(
                        start_line,
                        start_col,
                        format!("unexpected character `{other}`"),
                    ))
                }
            };
            push(tok, 1)
        };
        col += advance;
        i += advance;
    }
    toks.push(Spanned {
        tok: Tok::Eof,
        line,
        col,
    });
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: String) -> ParseError {
        let s = self.peek();
        ParseError {
            line: s.line,
            col: s.col,
            message,
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<Spanned, ParseError> {
        if self.peek().tok == tok {
            Ok(self.next())
        } else {
            Err(self.error(format!("expected {tok}, found {}", self.peek().tok)))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().tok.clone() {
            Tok::Ident(name) => {
                self.next();
                Ok(name)
            }
            other => Err(self.error(format!("expected identifier, found {other}"))),
        }
    }

    fn integer_u64(&mut self, what: &str) -> Result<u64, ParseError> {
        match self.peek().tok.clone() {
            Tok::Num(n) => {
                self.next();
                u64::try_from(n.clone())
                    .map_err(|_| self.error(format!("{what} `{n}` does not fit in 64 bits")))
            }
            other => Err(self.error(format!("expected {what}, found {other}"))),
        }
    }

    fn rational(&mut self) -> Result<Rational, ParseError> {
        let num = match self.peek().tok.clone() {
            Tok::Num(n) => {
                self.next();
                n
            }
            other => Err(self.error(format!("expected rational literal, found {other}")))?,
        };
        let den = if self.eat(&Tok::Slash) {
            match self.peek().tok.clone() {
                Tok::Num(n) => {
                    self.next();
                    n
                }
                other => Err(self.error(format!(
                    "expected denominator after `/`, found {other}"
                )))?,
            }
        } else {
            BigInt::from(1)
        };
        Rational::from_bigints(num, den).map_err(|e| self.error(e.to_string()))
    }

    fn scalar_type(&mut self) -> Result<ScalarType, ParseError> {
        if self.eat(&Tok::BoolKw) {
            return Ok(ScalarType::Bool);
        }
        if self.eat(&Tok::IntKw) {
            self.expect(Tok::LParen)?;
            let width = self.integer_u64("integer width")?;
            if width == 0 || width > 63 {
                return Err(self.error(format!("integer width must be in 1..=63, got {width}")));
            }
            self.expect(Tok::RParen)?;
            return Ok(ScalarType::Int { width: width as u8 });
        }
        Err(self.error(format!("expected type, found {}", self.peek().tok)))
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        self.expect(Tok::Fun)?;
        self.expect(Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek().tok != Tok::RParen {
            loop {
                let name = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.scalar_type()?;
                params.push(Param { name, ty });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.expect(Tok::LBrace)?;
        let body = self.expr()?;
        self.expect(Tok::RBrace)?;
        self.expect(Tok::Eof)?;
        Ok(Program { params, body })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.iff_chain()
    }

    fn iff_chain(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.or_chain()?;
        while self.eat(&Tok::IffArrow) {
            let rhs = self.or_chain()?;
            lhs = lhs.iff(rhs);
        }
        Ok(lhs)
    }

    fn or_chain(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.xor_chain()?;
        while self.eat(&Tok::OrOr) {
            let rhs = self.xor_chain()?;
            lhs = lhs.or(rhs);
        }
        Ok(lhs)
    }

    fn xor_chain(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.and_chain()?;
        while self.eat(&Tok::Caret) {
            let rhs = self.and_chain()?;
            lhs = lhs.xor(rhs);
        }
        Ok(lhs)
    }

    fn and_chain(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.comparison()?;
        while self.eat(&Tok::AndAnd) {
            let rhs = self.comparison()?;
            lhs = lhs.and(rhs);
        }
        Ok(lhs)
    }

    fn comparison(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.addition()?;
        if self.eat(&Tok::Ge) {
            let rhs = self.addition()?;
            return Ok(lhs.ge(rhs));
        }
        if self.eat(&Tok::EqEq) {
            let rhs = self.addition()?;
            return Ok(lhs.eq(rhs));
        }
        Ok(lhs)
    }

    fn addition(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let saturating = if self.eat(&Tok::Plus) {
                true
            } else if self.eat(&Tok::PlusWrap) {
                false
            } else {
                break;
            };
            let rhs = self.unary()?;
            lhs = Expr::IntAdd {
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
                saturating,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(self.unary()?.not());
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let spanned = self.peek().clone();
        match spanned.tok {
            Tok::True => {
                self.next();
                Ok(Expr::BoolConst(true))
            }
            Tok::False => {
                self.next();
                Ok(Expr::BoolConst(false))
            }
            Tok::Ident(name) => {
                self.next();
                Ok(Expr::Var(name))
            }
            Tok::Flip => {
                self.next();
                let prob_line = self.peek().line;
                let prob_col = self.peek().col;
                let prob = self.rational()?;
                if prob.is_negative() || prob > Rational::one() {
                    return Err(ParseError {
                        line: prob_line,
                        col: prob_col,
                        message: format!("flip probability {prob} outside [0, 1]"),
                    });
                }
                Ok(Expr::Flip(prob))
            }
            Tok::Categorical => {
                self.next();
                self.expect(Tok::LBracket)?;
                let mut weights = vec![self.rational()?];
                while self.eat(&Tok::Comma) {
                    weights.push(self.rational()?);
                }
                self.expect(Tok::RBracket)?;
                Ok(Expr::categorical(weights))
            }
            Tok::IntKw => {
                self.next();
                self.expect(Tok::LParen)?;
                let width = self.integer_u64("integer width")?;
                if width == 0 || width > 63 {
                    return Err(self.error(format!("integer width must be in 1..=63, got {width}")));
                }
                self.expect(Tok::Comma)?;
                let value = self.integer_u64("integer value")?;
                self.expect(Tok::RParen)?;
                Ok(Expr::IntConst {
                    value,
                    width: width as u8,
                })
            }
            Tok::If => {
                self.next();
                let cond = self.expr()?;
                self.expect(Tok::LBrace)?;
                let then_branch = self.expr()?;
                self.expect(Tok::RBrace)?;
                self.expect(Tok::Else)?;
                self.expect(Tok::LBrace)?;
                let else_branch = self.expr()?;
                self.expect(Tok::RBrace)?;
                Ok(Expr::ite(cond, then_branch, else_branch))
            }
            Tok::Let => {
                self.next();
                let name = self.ident()?;
                self.expect(Tok::Assign)?;
                let bound = self.expr()?;
                self.expect(Tok::In)?;
                let body = self.expr()?;
                Ok(Expr::Let {
                    name,
                    bound: Box::new(bound),
                    body: Box::new(body),
                })
            }
            Tok::LParen => {
                self.next();
                let first = self.expr()?;
                if self.eat(&Tok::RParen) {
                    return Ok(first);
                }
                let mut elems = vec![first];
                while self.eat(&Tok::Comma) {
                    elems.push(self.expr()?);
                }
                self.expect(Tok::RParen)?;
                Ok(Expr::Tuple(elems))
            }
            other => Err(self.error(format!("expected expression, found {other}"))),
        }
    }
}

/// Parses `.dpp` program text into its unique syntax tree.
pub fn parse(text: &str) -> Result<Program, ParseError> {
    let toks = lex(text)?;
    Parser { toks, pos: 0 }.program()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lang::ast::{bits_needed, BoolOp};

    #[test]
    fn parses_single_bit_randomized_response() {
        let p = parse("fun(x:bool) { if flip 1/5 { !x } else { x } }").unwrap();
        assert_eq!(
            p.params,
            vec![Param {
                name: "x".into(),
                ty: ScalarType::Bool
            }]
        );
        assert_eq!(
            p.body,
            Expr::ite(
                Expr::Flip(Rational::new(1, 5)),
                Expr::var("x").not(),
                Expr::var("x"),
            )
        );
    }

    #[test]
    fn rejects_probability_above_one() {
        let err = parse("fun() { flip 3/2 }").unwrap_err();
        assert!(err.message.contains("outside [0, 1]"), "{err}");
        assert_eq!((err.line, err.col), (1, 14));
    }

    #[test]
    fn reports_syntax_error_position() {
        let err = parse("fun(x:bool) {\n  x &&\n}").unwrap_err();
        assert_eq!(err.line, 3);
    }

    #[test]
    fn precedence_cmp_binds_tighter_than_and() {
        let p = parse("fun(a:int(2), b:int(2), c:bool) { a + b >= a && c }").unwrap();
        match p.body {
            Expr::Bool {
                op: BoolOp::And,
                lhs,
                ..
            } => assert!(matches!(*lhs, Expr::IntGe(_, _))),
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn tuple_versus_grouping() {
        let grouped = parse("fun(x:bool) { (x) }").unwrap();
        assert_eq!(grouped.body, Expr::var("x"));
        let tuple = parse("fun(x:bool, y:bool) { (x, y) }").unwrap();
        assert_eq!(tuple.body, Expr::Tuple(vec![Expr::var("x"), Expr::var("y")]));
    }

    #[test]
    fn categorical_width_is_minimal() {
        let p = parse("fun() { categorical [1/2, 1/4, 1/4] }").unwrap();
        match p.body {
            Expr::Categorical { weights, width } => {
                assert_eq!(weights.len(), 3);
                assert_eq!(width, bits_needed(2));
            }
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn wrapping_add_spelling() {
        let p = parse("fun(a:int(2), b:int(2)) { a +% b }").unwrap();
        assert!(matches!(p.body, Expr::IntAdd { saturating: false, .. }));
    }
}
