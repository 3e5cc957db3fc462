//! Recursive-descent parser.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' signed_integer)?
//! atom   := number | identifier | func '(' expr ')' | '(' expr ')' | '-' factor
//! ```
//!
//! Decimal literals become exact rationals; literals with an exponent part
//! become floats. Bound parameters are replaced by their values.

use num_rational::Rational64;

use super::{Expr, ExprError, Func, Number, SymbolTable};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Number),
    Int(i64),
    Ident(String),
    Sym(char),
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let mut frac = String::new();
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    frac.push(chars[i]);
                    i += 1;
                }
            }
            let mut has_exp = false;
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    has_exp = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let literal: String = chars[start..i].iter().collect();
            let tok = if has_exp {
                let v: f64 = literal.parse().map_err(|_| ExprError::Lexical {
                    pos: start,
                    msg: format!("malformed number `{literal}`"),
                })?;
                Tok::Num(Number::float(v))
            } else {
                decimal(&literal, &frac).ok_or(ExprError::Lexical {
                    pos: start,
                    msg: format!("malformed number `{literal}`"),
                })?
            };
            out.push((tok, start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), start));
        } else if "+-*/^(),".contains(c) {
            out.push((Tok::Sym(c), i));
            i += 1;
        } else {
            return Err(ExprError::Lexical {
                pos: i,
                msg: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

fn decimal(literal: &str, frac: &str) -> Option<Tok> {
    let int_part = literal.split('.').next().unwrap_or("");
    if !literal.contains('.') {
        return match int_part.parse::<i64>() {
            Ok(v) => Some(Tok::Int(v)),
            Err(_) => literal.parse::<f64>().ok().map(|v| Tok::Num(Number::float(v))),
        };
    }
    let digits = format!("{int_part}{frac}");
    let exact = (|| {
        let numer: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
        let denom = 10i64.checked_pow(frac.len() as u32)?;
        Some(Number::Rational(Rational64::new(numer, denom)))
    })();
    match exact {
        Some(n) => Some(Tok::Num(n)),
        None => literal.parse::<f64>().ok().map(|v| Tok::Num(Number::float(v))),
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    end: usize,
    table: &'a SymbolTable,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(t, _)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(_, p)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn syntax<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                acc = acc * self.factor()?;
            } else if self.eat('/') {
                acc = acc / self.factor()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = if self.eat('-') {
            true
        } else {
            self.eat('+');
            false
        };
        match self.peek() {
            Some(Tok::Int(k)) => {
                let k = *k;
                self.at += 1;
                Ok(Expr::pow(base, if negative { -k } else { k }))
            }
            _ => self.syntax("exponent must be an integer literal"),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let Some(tok) = self.peek().cloned() else {
            return self.syntax("unexpected end of input");
        };
        self.at += 1;
        match tok {
            Tok::Int(v) => Ok(Expr::int(v)),
            Tok::Num(n) => Ok(Expr::num(n)),
            Tok::Sym('-') => Ok(-self.factor()?),
            Tok::Sym('(') => {
                let e = self.expr()?;
                if !self.eat(')') {
                    return self.syntax("expected `)`");
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                if self.peek() == Some(&Tok::Sym('(')) {
                    let Some(f) = Func::from_name(&name) else {
                        return Err(ExprError::UnknownSymbol(name));
                    };
                    self.at += 1;
                    let mut args = Vec::new();
                    if !self.eat(')') {
                        loop {
                            args.push(self.expr()?);
                            if self.eat(')') {
                                break;
                            }
                            if !self.eat(',') {
                                return self.syntax("expected `,` or `)`");
                            }
                        }
                    }
                    if args.len() != 1 {
                        return Err(ExprError::Arity {
                            func: name,
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::func(f, args.pop().unwrap()));
                }
                if let Some(f) = Func::from_name(&name) {
                    if self.table.slot(&name).is_none() {
                        return Err(ExprError::Arity {
                            func: f.name().to_string(),
                            found: 0,
                        });
                    }
                }
                if self.table.slot(&name).is_some() {
                    Ok(Expr::var(&name))
                } else if let Some(v) = self.table.param(&name) {
                    Ok(Expr::num(v))
                } else {
                    Err(ExprError::UnknownSymbol(name))
                }
            }
            Tok::Sym(c) => {
                self.at -= 1;
                self.syntax(format!("unexpected `{c}`"))
            }
        }
    }
}

/// Parse `text` into a canonical expression over the symbols of `table`.
pub fn parse_expression(text: &str, table: &SymbolTable) -> Result<Expr, ExprError> {
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        at: 0,
        end: text.len(),
        table,
    };
    let e = p.expr()?;
    if p.at != p.toks.len() {
        return p.syntax("trailing input");
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Node;

    fn t() -> SymbolTable {
        SymbolTable::with_vars(["x1", "x2", "x3", "x4", "u2", "q"]).unwrap()
    }

    #[test]
    fn single_identifier() {
        assert_eq!(parse_expression("x2", &t()).unwrap(), Expr::var("x2"));
    }

    #[test]
    fn sum_of_two_variables() {
        let e = parse_expression("x4 + u2", &t()).unwrap();
        match e.node() {
            Node::Add(ts) => {
                assert_eq!(ts.len(), 2);
                assert!(ts.contains(&Expr::var("x4")) && ts.contains(&Expr::var("u2")));
            }
            other => panic!("expected a sum, got {other:?}"),
        }
    }

    #[test]
    fn integer_powers_of_functions() {
        let e = parse_expression("sin(q)^2 + cos(q)^2", &t()).unwrap();
        // the canonicalizer already folds the identity
        assert!(e.is_one());
        let e = parse_expression("sin(q)^-2", &t()).unwrap();
        assert!(matches!(e.node(), Node::Pow(_, -2)));
    }

    #[test]
    fn literals() {
        let e = parse_expression("9.81", &t()).unwrap();
        assert_eq!(e.as_number(), Some(Number::ratio(981, 100)));
        let e = parse_expression("1e-3", &t()).unwrap();
        assert_eq!(e.as_number(), Some(Number::float(1e-3)));
    }

    #[test]
    fn error_kinds() {
        assert!(matches!(parse_expression("x1 $ 2", &t()), Err(ExprError::Lexical { pos: 3, .. })));
        assert_eq!(parse_expression("zz + 1", &t()), Err(ExprError::UnknownSymbol("zz".into())));
        assert!(matches!(
            parse_expression("sin(x1, x2)", &t()),
            Err(ExprError::Arity { found: 2, .. })
        ));
        assert!(matches!(parse_expression("x1^x2", &t()), Err(ExprError::Syntax { .. })));
        assert!(matches!(parse_expression("(x1", &t()), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn parameters_are_inlined() {
        let mut tab = t();
        tab.add_param("m", Number::int(2)).unwrap();
        assert_eq!(
            parse_expression("x1/m", &tab).unwrap(),
            Expr::num(Number::ratio(1, 2)) * Expr::var("x1")
        );
    }
}
