use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Product `q^a p^b z^c Π V^(kᵢ)(q)`; `v` holds the derivative orders, sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    pub q: u32,
    pub p: u32,
    pub z: u32,
    pub v: Vec<u32>,
}

impl Monomial {
    pub fn one() -> Self {
        Self::default()
    }

    fn mul(&self, other: &Monomial) -> Monomial {
        let mut v = self.v.clone();
        v.extend_from_slice(&other.v);
        v.sort_unstable();
        Monomial {
            q: self.q + other.q,
            p: self.p + other.p,
            z: self.z + other.z,
            v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    Q,
    P,
    Z,
}

/// Polynomial in `q, p, z` and opaque derivatives of `V`, with rational coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, Rational64>,
}

pub fn rat(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

impl Poly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational64) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    pub fn int(c: i64) -> Self {
        Self::constant(Rational64::from_integer(c))
    }

    pub fn var(v: Var) -> Self {
        let mut m = Monomial::one();
        match v {
            Var::Q => m.q = 1,
            Var::P => m.p = 1,
            Var::Z => m.z = 1,
        }
        let mut p = Poly::zero();
        p.add_term(m, Rational64::one());
        p
    }

    /// `V^(k)(q)`.
    pub fn potential_derivative(k: u32) -> Self {
        let mut p = Poly::zero();
        p.add_term(
            Monomial {
                v: vec![k],
                ..Monomial::one()
            },
            Rational64::one(),
        );
        p
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational64) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(m.clone()).or_insert_with(Rational64::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&m);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational64)> {
        self.terms.iter()
    }

    pub fn scale(&self, c: Rational64) -> Poly {
        let mut out = Poly::zero();
        for (m, k) in &self.terms {
            out.add_term(m.clone(), *k * c);
        }
        out
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, k) in &other.terms {
            out.add_term(m.clone(), *k);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.scale(-Rational64::one()))
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (a, ka) in &self.terms {
            for (b, kb) in &other.terms {
                out.add_term(a.mul(b), *ka * *kb);
            }
        }
        out
    }

    pub fn derivative(&self, var: Var) -> Poly {
        let mut out = Poly::zero();
        for (m, k) in &self.terms {
            match var {
                Var::P if m.p > 0 => {
                    let mut n = m.clone();
                    n.p -= 1;
                    out.add_term(n, *k * Rational64::from_integer(m.p as i64));
                }
                Var::Z if m.z > 0 => {
                    let mut n = m.clone();
                    n.z -= 1;
                    out.add_term(n, *k * Rational64::from_integer(m.z as i64));
                }
                Var::Q => {
                    if m.q > 0 {
                        let mut n = m.clone();
                        n.q -= 1;
                        out.add_term(n, *k * Rational64::from_integer(m.q as i64));
                    }
                    // product rule over the V factors
                    for i in 0..m.v.len() {
                        let mut n = m.clone();
                        n.v[i] += 1;
                        n.v.sort_unstable();
                        out.add_term(n, *k);
                    }
                }
                _ => {}
            }
        }
        out
    }

    pub fn derivative_n(&self, var: Var, n: u32) -> Poly {
        (0..n).fold(self.clone(), |acc, _| acc.derivative(var))
    }

    /// Numerical value; `vder(k, q)` supplies `V^(k)(q)`.
    pub fn eval(&self, q: f64, p: f64, z: f64, vder: &dyn Fn(u32, f64) -> f64) -> f64 {
        self.terms
            .iter()
            .map(|(m, c)| {
                let mut x = *c.numer() as f64 / *c.denom() as f64;
                x *= q.powi(m.q as i32) * p.powi(m.p as i32) * z.powi(m.z as i32);
                for &k in &m.v {
                    x *= vder(k, q);
                }
                x
            })
            .sum()
    }
}

fn fmt_monomial(m: &Monomial) -> String {
    let mut parts = Vec::new();
    for (name, e) in [("q", m.q), ("p", m.p), ("z", m.z)] {
        match e {
            0 => {}
            1 => parts.push(name.to_string()),
            _ => parts.push(format!("{name}^{e}")),
        }
    }
    for &k in &m.v {
        parts.push(match k {
            0 => "V".to_string(),
            1..=3 => format!("V{}", "'".repeat(k as usize)),
            _ => format!("V^({k})"),
        });
    }
    parts.join("·")
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            let neg = c.is_negative();
            let mag = c.abs();
            let body = fmt_monomial(m);
            let coef = if mag.is_one() && !body.is_empty() {
                String::new()
            } else if body.is_empty() {
                format!("{mag}")
            } else {
                format!("{mag}·")
            };
            if first {
                write!(f, "{}{}{}", if neg { "-" } else { "" }, coef, body)?;
            } else {
                write!(f, " {} {}{}", if neg { "-" } else { "+" }, coef, body)?;
            }
            first = false;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn q_derivative_advances_potential_order() {
        let v1 = Poly::potential_derivative(1);
        let q = Poly::var(Var::Q);
        let f = q.mul(&v1);
        // d/dq (q V') = V' + q V''
        let expect = v1.add(&q.mul(&Poly::potential_derivative(2)));
        assert_eq!(f.derivative(Var::Q), expect);
        assert_eq!(f.to_string(), "q·V'");
    }

    #[test]
    fn arithmetic_cancels() {
        let p = Poly::var(Var::P);
        assert!(p.sub(&p).is_zero());
        assert_eq!(p.mul(&p).derivative(Var::P), p.scale(rat(2, 1)));
    }

    #[test]
    fn evaluation() {
        let f = Poly::var(Var::P)
            .mul(&Poly::var(Var::Z))
            .add(&Poly::potential_derivative(0).scale(rat(1, 2)));
        let v = f.eval(0.0, 2.0, 3.0, &|k, q| if k == 0 { q.cos() } else { 0.0 });
        assert!((v - 6.5).abs() < 1e-15);
    }
}
