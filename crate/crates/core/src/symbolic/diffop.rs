use num_rational::Rational64;
use num_traits::One;
use std::collections::BTreeMap;
use std::fmt;

use super::poly::{Poly, Var};

/// Multi-index `(a, b, c)` for `∂_q^a ∂_p^b ∂_z^c`.
pub type Deriv = (u32, u32, u32);

/// Linear differential operator `Σ f_α ∂^α` with polynomial coefficients, kept in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DiffOp {
    terms: BTreeMap<Deriv, Poly>,
}

fn binom(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

impl DiffOp {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::multiplication(Poly::int(1))
    }

    pub fn multiplication(f: Poly) -> Self {
        let mut op = DiffOp::zero();
        op.add_term((0, 0, 0), f);
        op
    }

    /// `f ∂_var`.
    pub fn first(f: Poly, var: Var) -> Self {
        let idx = match var {
            Var::Q => (1, 0, 0),
            Var::P => (0, 1, 0),
            Var::Z => (0, 0, 1),
        };
        let mut op = DiffOp::zero();
        op.add_term(idx, f);
        op
    }

    pub fn partial(var: Var) -> Self {
        Self::first(Poly::int(1), var)
    }

    pub fn add_term(&mut self, d: Deriv, f: Poly) {
        let e = self.terms.entry(d).or_default();
        *e = e.add(&f);
        if e.is_zero() {
            self.terms.remove(&d);
        }
    }

    pub fn add(&self, other: &DiffOp) -> DiffOp {
        let mut out = self.clone();
        for (d, f) in &other.terms {
            out.add_term(*d, f.clone());
        }
        out
    }

    pub fn scale(&self, c: Rational64) -> DiffOp {
        let mut out = DiffOp::zero();
        for (d, f) in &self.terms {
            out.add_term(*d, f.scale(c));
        }
        out
    }

    pub fn neg(&self) -> DiffOp {
        self.scale(-Rational64::one())
    }

    pub fn sub(&self, other: &DiffOp) -> DiffOp {
        self.add(&other.neg())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn order(&self) -> u32 {
        self.terms.keys().map(|(a, b, c)| a + b + c).max().unwrap_or(0)
    }

    pub fn coefficient(&self, d: Deriv) -> Poly {
        self.terms.get(&d).cloned().unwrap_or_default()
    }

    /// Applies the operator to a function.
    pub fn apply(&self, g: &Poly) -> Poly {
        let mut out = Poly::zero();
        for (&(a, b, c), f) in &self.terms {
            let dg = g.derivative_n(Var::Q, a).derivative_n(Var::P, b).derivative_n(Var::Z, c);
            out = out.add(&f.mul(&dg));
        }
        out
    }

    /// Operator product `self ∘ other` by the Leibniz rule.
    pub fn compose(&self, other: &DiffOp) -> DiffOp {
        let mut out = DiffOp::zero();
        for (&(a, b, c), f) in &self.terms {
            for (&(a2, b2, c2), g) in &other.terms {
                for i in 0..=a {
                    for j in 0..=b {
                        for k in 0..=c {
                            let dg = g
                                .derivative_n(Var::Q, i)
                                .derivative_n(Var::P, j)
                                .derivative_n(Var::Z, k);
                            if dg.is_zero() {
                                continue;
                            }
                            let w = binom(a, i) * binom(b, j) * binom(c, k);
                            let coef = f.mul(&dg).scale(Rational64::from_integer(w));
                            out.add_term((a - i + a2, b - j + b2, c - k + c2), coef);
                        }
                    }
                }
            }
        }
        out
    }

    /// `[X, Y] = XY − YX`.
    pub fn commutator(&self, other: &DiffOp) -> DiffOp {
        self.compose(other).sub(&other.compose(self))
    }

    /// Adjoint in `L²(e^{−V − p²/2 − z²/2})`; defined for operators of order ≤ 1.
    pub fn adjoint(&self) -> Option<DiffOp> {
        if self.order() > 1 {
            return None;
        }
        let weight = |v: Var| match v {
            Var::Q => Poly::potential_derivative(1),
            Var::P => Poly::var(Var::P),
            Var::Z => Poly::var(Var::Z),
        };
        let mut out = DiffOp::zero();
        for (&d, f) in &self.terms {
            let var = match d {
                (0, 0, 0) => {
                    out.add_term(d, f.clone());
                    continue;
                }
                (1, 0, 0) => Var::Q,
                (0, 1, 0) => Var::P,
                _ => Var::Z,
            };
            // (f∂)* = −f∂ − ∂f + w f
            out.add_term(d, f.scale(-Rational64::one()));
            out.add_term((0, 0, 0), weight(var).mul(f).sub(&f.derivative(var)));
        }
        Some(out)
    }
}

impl fmt::Display for DiffOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .map(|(&(a, b, c), poly)| {
                let mut d = String::new();
                for (name, e) in [("q", a), ("p", b), ("z", c)] {
                    for _ in 0..e {
                        d.push_str(&format!("∂_{name}"));
                    }
                }
                if d.is_empty() {
                    d.push_str("Id");
                }
                format!("({poly})·{d}")
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_heisenberg() {
        // [∂_p, p] = Id
        let dp = DiffOp::partial(Var::P);
        let p = DiffOp::multiplication(Poly::var(Var::P));
        assert_eq!(dp.commutator(&p), DiffOp::identity());
    }

    #[test]
    fn second_order_composition() {
        let dz = DiffOp::partial(Var::Z);
        let zz = dz.compose(&dz);
        assert_eq!(zz.order(), 2);
        let z2 = Poly::var(Var::Z).mul(&Poly::var(Var::Z));
        assert_eq!(zz.apply(&z2), Poly::int(2));
    }

    #[test]
    fn adjoint_of_dz() {
        let a = DiffOp::partial(Var::Z).adjoint().unwrap();
        let expect = DiffOp::partial(Var::Z).neg().add(&DiffOp::multiplication(Poly::var(Var::Z)));
        assert_eq!(a, expect);
    }
}
