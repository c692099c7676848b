//! Deed covenants: a small prefix expression language that is type-checked
//! when attached, so evaluation is total.
//!
//! ```text
//! expr  := atom | "(" op expr+ ")"
//! op    := and | or | not | eq | ne | lt | le | gt | ge
//! atom  := true | false | <integer> | <YYYY-MM-DD> | 0x<64 hex>
//!        | sqft | bedrooms | last_renovation | from | to | tick
//! ```
//!
//! `and`/`or` take two or more booleans, `not` one. Ordering comparisons take
//! two integers or two dates; `eq`/`ne` take two operands of the same type.
//! The canonical text form separates tokens by one space, e.g.
//! `(and (ge bedrooms 2) (ge tick 50))`.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use thiserror::Error;

use crate::assets::PublicMetadata;
use crate::codec::{CodecError, Decode, Decoder, Encode, Encoder};
use crate::primitives::{sha256_concat, Address, Digest};

const MAX_DEPTH: usize = 32;
const MAX_LEN: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("malformed predicate: {0}")]
pub struct MalformedPredicate(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    SquareFootage,
    Bedrooms,
    LastRenovation,
    From,
    To,
    Tick,
}

impl Field {
    fn name(self) -> &'static str {
        match self {
            Field::SquareFootage => "sqft",
            Field::Bedrooms => "bedrooms",
            Field::LastRenovation => "last_renovation",
            Field::From => "from",
            Field::To => "to",
            Field::Tick => "tick",
        }
    }

    fn from_name(s: &str) -> Option<Field> {
        Some(match s {
            "sqft" => Field::SquareFootage,
            "bedrooms" => Field::Bedrooms,
            "last_renovation" => Field::LastRenovation,
            "from" => Field::From,
            "to" => Field::To,
            "tick" => Field::Tick,
            _ => return None,
        })
    }

    fn ty(self) -> Ty {
        match self {
            Field::SquareFootage | Field::Bedrooms | Field::Tick => Ty::Int,
            Field::LastRenovation => Ty::Date,
            Field::From | Field::To => Ty::Addr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Ty {
    Bool,
    Int,
    Date,
    Addr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    And,
    Or,
    Not,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl Op {
    fn name(self) -> &'static str {
        match self {
            Op::And => "and",
            Op::Or => "or",
            Op::Not => "not",
            Op::Eq => "eq",
            Op::Ne => "ne",
            Op::Lt => "lt",
            Op::Le => "le",
            Op::Gt => "gt",
            Op::Ge => "ge",
        }
    }

    fn from_name(s: &str) -> Option<Op> {
        Some(match s {
            "and" => Op::And,
            "or" => Op::Or,
            "not" => Op::Not,
            "eq" => Op::Eq,
            "ne" => Op::Ne,
            "lt" => Op::Lt,
            "le" => Op::Le,
            "gt" => Op::Gt,
            "ge" => Op::Ge,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Bool(bool),
    Int(i64),
    Date(NaiveDate),
    Addr(Address),
    Field(Field),
    Apply(Op, Vec<Expr>),
}

/// A well-typed boolean covenant expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate(Expr);

/// Inputs a covenant can observe.
#[derive(Debug, Clone, Copy)]
pub struct TransferContext<'a> {
    pub metadata: &'a PublicMetadata,
    pub from: Address,
    pub to: Address,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Value {
    Bool(bool),
    Int(i128),
    Date(NaiveDate),
    Addr(Address),
}

impl Predicate {
    pub fn parse(text: &str) -> Result<Predicate, MalformedPredicate> {
        if text.len() > MAX_LEN {
            return Err(MalformedPredicate(format!("longer than {MAX_LEN} bytes")));
        }
        let tokens = tokenize(text)?;
        let mut pos = 0;
        let expr = parse_expr(&tokens, &mut pos, 0)?;
        if pos != tokens.len() {
            return Err(MalformedPredicate(format!("unexpected '{}' after expression", tokens[pos])));
        }
        if type_of(&expr)? != Ty::Bool {
            return Err(MalformedPredicate("expression is not boolean".into()));
        }
        Ok(Predicate(expr))
    }

    pub fn expr(&self) -> &Expr {
        &self.0
    }

    pub fn evaluate(&self, ctx: &TransferContext<'_>) -> bool {
        matches!(eval(&self.0, ctx), Value::Bool(true))
    }
}

impl FromStr for Predicate {
    type Err = MalformedPredicate;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Predicate::parse(s)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Date(d) => write!(f, "{}", d.format("%Y-%m-%d")),
            Expr::Addr(a) => write!(f, "{a}"),
            Expr::Field(x) => f.write_str(x.name()),
            Expr::Apply(op, args) => {
                write!(f, "({}", op.name())?;
                for a in args {
                    write!(f, " {a}")?;
                }
                f.write_str(")")
            }
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<&str>, MalformedPredicate> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        match c {
            '(' | ')' => {
                if let Some(s) = start.take() {
                    out.push(&text[s..i]);
                }
                out.push(&text[i..i + 1]);
            }
            c if c.is_ascii_whitespace() => {
                if let Some(s) = start.take() {
                    out.push(&text[s..i]);
                }
            }
            c if c.is_ascii_alphanumeric() || c == '_' || c == '-' => {
                start.get_or_insert(i);
            }
            c => return Err(MalformedPredicate(format!("unexpected character {c:?}"))),
        }
    }
    if let Some(s) = start {
        out.push(&text[s..]);
    }
    if out.is_empty() {
        return Err(MalformedPredicate("empty expression".into()));
    }
    Ok(out)
}

fn parse_expr(tokens: &[&str], pos: &mut usize, depth: usize) -> Result<Expr, MalformedPredicate> {
    if depth > MAX_DEPTH {
        return Err(MalformedPredicate(format!("nested deeper than {MAX_DEPTH}")));
    }
    let tok = *tokens.get(*pos).ok_or_else(|| MalformedPredicate("unexpected end".into()))?;
    *pos += 1;
    match tok {
        "(" => {
            let name = *tokens.get(*pos).ok_or_else(|| MalformedPredicate("unexpected end".into()))?;
            let op = Op::from_name(name).ok_or_else(|| MalformedPredicate(format!("unknown operator '{name}'")))?;
            *pos += 1;
            let mut args = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => return Err(MalformedPredicate("missing ')'".into())),
                    Some(&")") => {
                        *pos += 1;
                        break;
                    }
                    Some(_) => args.push(parse_expr(tokens, pos, depth + 1)?),
                }
            }
            Ok(Expr::Apply(op, args))
        }
        ")" => Err(MalformedPredicate("unexpected ')'".into())),
        atom => parse_atom(atom),
    }
}

fn parse_atom(tok: &str) -> Result<Expr, MalformedPredicate> {
    if tok == "true" {
        return Ok(Expr::Bool(true));
    }
    if tok == "false" {
        return Ok(Expr::Bool(false));
    }
    if let Some(f) = Field::from_name(tok) {
        return Ok(Expr::Field(f));
    }
    if tok.starts_with("0x") {
        return tok
            .parse::<Address>()
            .map(Expr::Addr)
            .map_err(|e| MalformedPredicate(format!("address '{tok}': {e}")));
    }
    let b = tok.as_bytes();
    if b.len() == 10 && b[4] == b'-' && b[7] == b'-' {
        return NaiveDate::parse_from_str(tok, "%Y-%m-%d")
            .map(Expr::Date)
            .map_err(|_| MalformedPredicate(format!("bad date '{tok}'")));
    }
    let digits = tok.strip_prefix('-').unwrap_or(tok);
    if !digits.is_empty() && digits.bytes().all(|c| c.is_ascii_digit()) {
        // canonical integers carry no leading zeros
        if digits.len() > 1 && digits.starts_with('0') || tok == "-0" {
            return Err(MalformedPredicate(format!("non-canonical integer '{tok}'")));
        }
        return tok.parse().map(Expr::Int).map_err(|_| MalformedPredicate(format!("integer '{tok}' out of range")));
    }
    Err(MalformedPredicate(format!("unknown atom '{tok}'")))
}

fn type_of(e: &Expr) -> Result<Ty, MalformedPredicate> {
    Ok(match e {
        Expr::Bool(_) => Ty::Bool,
        Expr::Int(_) => Ty::Int,
        Expr::Date(_) => Ty::Date,
        Expr::Addr(_) => Ty::Addr,
        Expr::Field(f) => f.ty(),
        Expr::Apply(op, args) => {
            let tys = args.iter().map(type_of).collect::<Result<Vec<_>, _>>()?;
            let arity = |ok: bool| {
                if ok {
                    Ok(())
                } else {
                    Err(MalformedPredicate(format!("'{}' given {} operands", op.name(), args.len())))
                }
            };
            match op {
                Op::And | Op::Or => arity(tys.len() >= 2)?,
                Op::Not => arity(tys.len() == 1)?,
                _ => arity(tys.len() == 2)?,
            }
            match op {
                Op::And | Op::Or | Op::Not => {
                    if tys.iter().any(|t| *t != Ty::Bool) {
                        return Err(MalformedPredicate(format!("'{}' needs boolean operands", op.name())));
                    }
                }
                Op::Eq | Op::Ne => {
                    if tys[0] != tys[1] {
                        return Err(MalformedPredicate(format!("'{}' compares mismatched types", op.name())));
                    }
                }
                Op::Lt | Op::Le | Op::Gt | Op::Ge => {
                    if tys[0] != tys[1] || !matches!(tys[0], Ty::Int | Ty::Date) {
                        return Err(MalformedPredicate(format!(
                            "'{}' needs two integers or two dates",
                            op.name()
                        )));
                    }
                }
            }
            Ty::Bool
        }
    })
}

fn eval(e: &Expr, ctx: &TransferContext<'_>) -> Value {
    match e {
        Expr::Bool(b) => Value::Bool(*b),
        Expr::Int(i) => Value::Int(*i as i128),
        Expr::Date(d) => Value::Date(*d),
        Expr::Addr(a) => Value::Addr(*a),
        Expr::Field(f) => match f {
            Field::SquareFootage => Value::Int(ctx.metadata.square_footage as i128),
            Field::Bedrooms => Value::Int(ctx.metadata.bedrooms as i128),
            Field::LastRenovation => Value::Date(ctx.metadata.last_renovation),
            Field::From => Value::Addr(ctx.from),
            Field::To => Value::Addr(ctx.to),
            Field::Tick => Value::Int(ctx.tick as i128),
        },
        Expr::Apply(op, args) => {
            let truth = |v: Value| matches!(v, Value::Bool(true));
            Value::Bool(match op {
                Op::And => args.iter().all(|a| truth(eval(a, ctx))),
                Op::Or => args.iter().any(|a| truth(eval(a, ctx))),
                Op::Not => !truth(eval(&args[0], ctx)),
                _ => {
                    let (l, r) = (eval(&args[0], ctx), eval(&args[1], ctx));
                    match op {
                        Op::Eq => l == r,
                        Op::Ne => l != r,
                        Op::Lt => l < r,
                        Op::Le => l <= r,
                        Op::Gt => l > r,
                        Op::Ge => l >= r,
                        Op::And | Op::Or | Op::Not => unreachable!(),
                    }
                }
            })
        }
    }
}

pub fn covenant_id_for(attach_tx_id: &Digest) -> Digest {
    sha256_concat(&[b"deedchain/covenant", attach_tx_id.as_bytes()])
}

/// A predicate bound to one deed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covenant {
    pub covenant_id: Digest,
    pub deed_id: Digest,
    pub predicate: Predicate,
}

impl Encode for Covenant {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.digest(&self.covenant_id).digest(&self.deed_id).str(&self.predicate.to_string());
    }
}

impl Decode for Covenant {
    fn decode_from(dec: &mut Decoder<'_>) -> Result<Self, CodecError> {
        let covenant_id = dec.digest()?;
        let deed_id = dec.digest()?;
        let text = dec.string()?;
        let predicate = Predicate::parse(&text).map_err(|e| CodecError::Invalid(e.to_string()))?;
        Ok(Covenant { covenant_id, deed_id, predicate })
    }
}
