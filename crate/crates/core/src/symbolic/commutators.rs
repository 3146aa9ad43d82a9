use num_rational::Rational64;
use num_traits::One;
use serde::Serialize;

use super::diffop::DiffOp;
use super::poly::{Poly, Var};

/// Symbolic operators of the single-mode, single-dimension model with unit constants.
#[derive(Debug, Clone)]
pub struct UnitOperators {
    pub a: DiffOp,
    pub b: DiffOp,
    pub c: DiffOp,
    pub c2: DiffOp,
}

/// `B = −p∂_q + V′∂_p − λ(z∂_p − p∂_z)`.
pub fn transport(lambda: Rational64) -> DiffOp {
    let p = Poly::var(Var::P);
    let z = Poly::var(Var::Z);
    DiffOp::first(p.scale(-Rational64::one()), Var::Q)
        .add(&DiffOp::first(Poly::potential_derivative(1), Var::P))
        .add(&DiffOp::first(z.scale(-lambda), Var::P))
        .add(&DiffOp::first(p.scale(lambda), Var::Z))
}

/// Forward generator `p∂_q + (−V′ + λz)∂_p − (λp + αz)∂_z + (α/β)∂²_z`.
pub fn forward_generator(lambda: Rational64, alpha: Rational64, beta: Rational64) -> DiffOp {
    let p = Poly::var(Var::P);
    let z = Poly::var(Var::Z);
    let dz = DiffOp::partial(Var::Z);
    DiffOp::first(p.clone(), Var::Q)
        .add(&DiffOp::first(
            Poly::potential_derivative(1).scale(-Rational64::one()).add(&z.scale(lambda)),
            Var::P,
        ))
        .add(&DiffOp::first(p.scale(-lambda).sub(&z.scale(alpha)), Var::Z))
        .add(&dz.compose(&dz).scale(alpha / beta))
}

impl UnitOperators {
    pub fn new() -> Self {
        let a = DiffOp::partial(Var::Z).neg();
        let b = transport(Rational64::one());
        let c = a.commutator(&b);
        let c2 = c.commutator(&b);
        UnitOperators { a, b, c, c2 }
    }
}

impl Default for UnitOperators {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    pub computed: String,
    pub expected: String,
    pub holds: bool,
}

fn check(name: &str, computed: DiffOp, expected: DiffOp) -> IdentityCheck {
    IdentityCheck {
        name: name.to_string(),
        holds: computed == expected,
        computed: computed.to_string(),
        expected: expected.to_string(),
    }
}

/// Verifies the eleven bracket relations with `V` kept symbolic.
pub fn commutator_table() -> Vec<IdentityCheck> {
    let ops = UnitOperators::new();
    let UnitOperators { a, b, c, c2 } = &ops;
    let a_star = a.adjoint().expect("first order");
    let c_star = c.adjoint().expect("first order");
    let c2_star = c2.adjoint().expect("first order");
    let id = DiffOp::identity();
    let dp = DiffOp::partial(Var::P);
    let dq = DiffOp::partial(Var::Q);
    let dz = DiffOp::partial(Var::Z);
    let v2 = Poly::potential_derivative(2);

    vec![
        check("C = [A,B] = ∂_p", a.commutator(b), dp.clone()),
        check("C₂ = [C,B] = ∂_z − ∂_q", c.commutator(b), dz.sub(&dq)),
        check("[A,A] = 0", a.commutator(a), DiffOp::zero()),
        check("[A,C] = 0", a.commutator(c), DiffOp::zero()),
        check("[A,C₂] = 0", a.commutator(c2), DiffOp::zero()),
        check("[A,A*] = Id", a.commutator(&a_star), id.clone()),
        check("[C,A*] = 0", c.commutator(&a_star), DiffOp::zero()),
        check("[C₂,A*] = −Id", c2.commutator(&a_star), id.neg()),
        check(
            "[C₂,B] = −V″∂_p − ∂_p",
            c2.commutator(b),
            DiffOp::first(v2.scale(-Rational64::one()), Var::P).sub(&dp),
        ),
        check("[C,C*] = Id", c.commutator(&c_star), id.clone()),
        check(
            "[C₂*,C₂] = −Id − V″",
            c2_star.commutator(c2),
            id.neg().sub(&DiffOp::multiplication(v2)),
        ),
    ]
}

/// `−(forward generator) = B + A*A` for the unit model.
pub fn generator_decomposition_holds() -> bool {
    let ops = UnitOperators::new();
    let a_star = ops.a.adjoint().expect("first order");
    let one = Rational64::one();
    let l = forward_generator(one, one, one).neg();
    l == ops.b.add(&a_star.compose(&ops.a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_identities_hold() {
        let table = commutator_table();
        assert_eq!(table.len(), 11);
        for row in &table {
            assert!(row.holds, "{}: got {} expected {}", row.name, row.computed, row.expected);
        }
    }

    #[test]
    fn decomposition() {
        assert!(generator_decomposition_holds());
    }

    #[test]
    fn scaled_brackets() {
        // with λ = 2: [−∂_z, B] = 2∂_p and [2∂_p, B] = 2(2∂_z − ∂_q)
        let b = transport(Rational64::from_integer(2));
        let c = DiffOp::partial(Var::Z).neg().commutator(&b);
        assert_eq!(c, DiffOp::partial(Var::P).scale(Rational64::from_integer(2)));
        let c2 = c.commutator(&b);
        let expect = DiffOp::partial(Var::Z)
            .scale(Rational64::from_integer(4))
            .sub(&DiffOp::partial(Var::Q).scale(Rational64::from_integer(2)));
        assert_eq!(c2, expect);
    }

    #[test]
    fn transport_is_antisymmetric() {
        let b = transport(Rational64::one());
        assert_eq!(b.adjoint().unwrap(), b.neg());
    }
}
