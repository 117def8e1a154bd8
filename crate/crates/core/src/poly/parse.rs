use super::monomial::Monomial;
use super::polynomial::Polynomial;
use super::PolyError;

/// Parse the polynomial text format, inferring the variable count from the
/// largest index that appears (at least one variable).
///
/// Grammar: terms joined by `+`/`-`; a term is `coeff`, `coeff*mono` or
/// `mono`; a mono is `x<i>^<e>` factors joined by `*` (`^<e>` optional).
/// Whitespace is ignored; coefficients are decimal literals.
pub fn parse(input: &str) -> Result<Polynomial, PolyError> {
    let terms = scan_terms(input)?;
    let n_vars = terms
        .iter()
        .flat_map(|t| t.factors.iter().map(|&(i, _)| i))
        .max()
        .unwrap_or(0)
        .max(1);
    assemble(terms, n_vars)
}

/// Parse with an explicit ambient variable count.
pub fn parse_in(input: &str, n_vars: usize) -> Result<Polynomial, PolyError> {
    let terms = scan_terms(input)?;
    if let Some(i) = terms
        .iter()
        .flat_map(|t| t.factors.iter().map(|&(i, _)| i))
        .find(|&i| i > n_vars)
    {
        return Err(PolyError::Parse {
            pos: 0,
            message: format!("variable x{i} exceeds declared count {n_vars}"),
        });
    }
    assemble(terms, n_vars)
}

struct RawTerm {
    coeff: f64,
    factors: Vec<(usize, u32)>, // 1-based variable index, exponent
}

fn assemble(terms: Vec<RawTerm>, n_vars: usize) -> Result<Polynomial, PolyError> {
    let mut out = Vec::new();
    for t in terms {
        let mut exps = vec![0u32; n_vars];
        for (i, e) in t.factors {
            exps[i - 1] += e;
        }
        out.push((Monomial::new(exps), t.coeff));
    }
    Ok(Polynomial::from_terms(n_vars, out))
}

struct Scanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(s: &'a str) -> Self {
        Self {
            bytes: s.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<u8> {
        let b = self.peek()?;
        self.pos += 1;
        Some(b)
    }

    fn err(&self, message: impl Into<String>) -> PolyError {
        PolyError::Parse {
            pos: self.pos,
            message: message.into(),
        }
    }

    fn number(&mut self) -> Result<f64, PolyError> {
        self.skip_ws();
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
            i += 1;
        }
        // optional exponent part, e.g. 1e-7
        if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
            let mut j = i + 1;
            if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                j += 1;
            }
            if j < b.len() && b[j].is_ascii_digit() {
                i = j;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
        if i == start {
            return Err(self.err("expected a number"));
        }
        let text = std::str::from_utf8(&b[start..i]).unwrap();
        let value: f64 = text
            .parse()
            .map_err(|_| self.err(format!("invalid number `{text}`")))?;
        self.pos = i;
        Ok(value)
    }

    fn integer(&mut self) -> Result<u64, PolyError> {
        self.skip_ws();
        let start = self.pos;
        let b = self.bytes;
        let mut i = self.pos;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == start {
            return Err(self.err("expected an integer"));
        }
        let text = std::str::from_utf8(&b[start..i]).unwrap();
        self.pos = i;
        text.parse()
            .map_err(|_| self.err(format!("integer `{text}` out of range")))
    }
}

fn scan_terms(input: &str) -> Result<Vec<RawTerm>, PolyError> {
    let mut sc = Scanner::new(input);
    let mut terms = Vec::new();
    if sc.peek().is_none() {
        return Err(sc.err("empty polynomial"));
    }
    loop {
        let mut sign = 1.0;
        while let Some(b) = sc.peek() {
            match b {
                b'+' => {
                    sc.bump();
                }
                b'-' => {
                    sign = -sign;
                    sc.bump();
                }
                _ => break,
            }
        }
        let term = scan_term(&mut sc)?;
        terms.push(RawTerm {
            coeff: sign * term.coeff,
            factors: term.factors,
        });
        match sc.peek() {
            None => break,
            Some(b'+') | Some(b'-') => continue,
            Some(c) => return Err(sc.err(format!("unexpected character `{}`", c as char))),
        }
    }
    Ok(terms)
}

fn scan_term(sc: &mut Scanner) -> Result<RawTerm, PolyError> {
    let mut coeff = 1.0;
    let mut factors = Vec::new();
    let mut saw_anything = false;

    match sc.peek() {
        Some(b) if b.is_ascii_digit() || b == b'.' => {
            coeff = sc.number()?;
            saw_anything = true;
        }
        _ => {}
    }
    loop {
        match sc.peek() {
            Some(b'*') => {
                sc.bump();
            }
            Some(b'x') if !saw_anything || !factors.is_empty() || coeff != 1.0 => {
                // allow `2x1` style only via explicit `*`; a bare mono is fine
                if saw_anything && factors.is_empty() && coeff != 1.0 {
                    return Err(sc.err("expected `*` between coefficient and variable"));
                }
            }
            _ => break,
        }
        match sc.peek() {
            Some(b'x') => {
                sc.bump();
                let idx = sc.integer()? as usize;
                if idx == 0 {
                    return Err(sc.err("variable indices start at 1"));
                }
                let exp = if sc.peek() == Some(b'^') {
                    sc.bump();
                    sc.integer()? as u32
                } else {
                    1
                };
                factors.push((idx, exp));
                saw_anything = true;
            }
            Some(b) if b.is_ascii_digit() || b == b'.' => {
                // a numeric factor inside a product, e.g. `2*3` is rejected
                return Err(sc.err("coefficient must come first in a term"));
            }
            _ => return Err(sc.err("expected a variable after `*`")),
        }
    }
    if !saw_anything {
        return Err(sc.err("expected a term"));
    }
    Ok(RawTerm { coeff, factors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_motzkin() {
        let m = parse("x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1").unwrap();
        assert_eq!(m.n_vars(), 2);
        assert_eq!(m.degree(), 6);
        assert_eq!(m.coeff(&Monomial::new(vec![2, 2])), -3.0);
        assert_eq!(m.coeff(&Monomial::unit(2)), 1.0);
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse("x1^2+2*x1*x2+x2^2").unwrap();
        let b = parse("  x1^2 + 2 * x1 * x2   + x2^2 ").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn signs_and_constants() {
        let q = parse("-x1 + 2.5 - 0.5*x2").unwrap();
        assert_eq!(q.coeff(&Monomial::var(2, 0)), -1.0);
        assert_eq!(q.coeff(&Monomial::unit(2)), 2.5);
        assert_eq!(parse("0").unwrap(), Polynomial::zero(1));
    }

    #[test]
    fn scientific_coefficients() {
        let q = parse("1e-3*x1 + 2E2").unwrap();
        assert_eq!(q.coeff(&Monomial::var(1, 0)), 1e-3);
        assert_eq!(q.coeff(&Monomial::unit(1)), 200.0);
    }

    #[test]
    fn repeated_variable_factors_multiply() {
        assert_eq!(parse("x1*x1*x1").unwrap(), parse("x1^3").unwrap());
    }

    #[test]
    fn rejects_garbage_with_position() {
        let err = parse("x1^2 + $").unwrap_err();
        match err {
            PolyError::Parse { pos, .. } => assert!(pos >= 6),
            other => panic!("unexpected error {other:?}"),
        }
        assert!(parse("").is_err());
        assert!(parse("x0").is_err());
        assert!(parse_in("x3", 2).is_err());
    }

    #[test]
    fn display_roundtrip_examples() {
        for text in [
            "x1^4*x2^2 + x1^2*x2^4 - 3*x1^2*x2^2 + 1",
            "-0.5*x1^3 + x2 - 7",
            "0",
            "2.195*x1^2 + 4.237*x1^8",
        ] {
            let p = parse(text).unwrap();
            let q = parse_in(&p.to_string(), p.n_vars()).unwrap();
            assert_eq!(p, q, "roundtrip failed for {text}");
        }
    }
}
