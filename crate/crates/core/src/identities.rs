//! The involution reconstruction identities. Each one expresses a component,
//! the conjugate, or an involution of `q` as a linear combination of the
//! other involutions; the hidden-layer gradient simplifications rely on them.

use serde::Serialize;

use crate::quat::{Axis, Quaternion};

/// Which group of identities an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IdentityFamily {
    /// Real components from `q, q^i, q^j, q^k`.
    ComponentsFromInvolutions,
    /// Real components from the conjugate involutions.
    ComponentsFromConjugates,
    /// Conjugate involutions from `q, q^i, q^j, q^k`.
    ConjugatesFromInvolutions,
    /// Involutions from the conjugate involutions.
    InvolutionsFromConjugates,
}

impl IdentityFamily {
    pub const ALL: [IdentityFamily; 4] = [
        IdentityFamily::ComponentsFromInvolutions,
        IdentityFamily::ComponentsFromConjugates,
        IdentityFamily::ConjugatesFromInvolutions,
        IdentityFamily::InvolutionsFromConjugates,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityCheck {
    pub family: IdentityFamily,
    pub name: &'static str,
    pub lhs: Quaternion,
    pub rhs: Quaternion,
}

impl IdentityCheck {
    pub fn residual(&self) -> f64 {
        self.lhs.max_abs_diff(self.rhs)
    }
}

/// Evaluates all sixteen identities at `q`.
pub fn involution_identities(q: Quaternion) -> Vec<IdentityCheck> {
    use IdentityFamily::*;
    let (i, j, k) = (Quaternion::I, Quaternion::J, Quaternion::K);
    let qi = q.involution(Axis::I);
    let qj = q.involution(Axis::J);
    let qk = q.involution(Axis::K);
    let qc = q.conj();
    let qic = q.conj_involution(Axis::I);
    let qjc = q.conj_involution(Axis::J);
    let qkc = q.conj_involution(Axis::K);
    let real = Quaternion::from_real;

    let check = |family, name, lhs, rhs| IdentityCheck {
        family,
        name,
        lhs,
        rhs,
    };

    vec![
        check(
            ComponentsFromInvolutions,
            "q0",
            real(q.q0),
            (q + qi + qj + qk) * 0.25,
        ),
        check(
            ComponentsFromInvolutions,
            "q1",
            real(q.q1),
            -(i * (q + qi - qj - qk)) * 0.25,
        ),
        check(
            ComponentsFromInvolutions,
            "q2",
            real(q.q2),
            -(j * (q - qi + qj - qk)) * 0.25,
        ),
        check(
            ComponentsFromInvolutions,
            "q3",
            real(q.q3),
            -(k * (q - qi - qj + qk)) * 0.25,
        ),
        check(
            ComponentsFromConjugates,
            "q0",
            real(q.q0),
            (qc + qic + qjc + qkc) * 0.25,
        ),
        check(
            ComponentsFromConjugates,
            "q1",
            real(q.q1),
            (i * (qc + qic - qjc - qkc)) * 0.25,
        ),
        check(
            ComponentsFromConjugates,
            "q2",
            real(q.q2),
            (j * (qc - qic + qjc - qkc)) * 0.25,
        ),
        check(
            ComponentsFromConjugates,
            "q3",
            real(q.q3),
            (k * (qc - qic - qjc + qkc)) * 0.25,
        ),
        check(
            ConjugatesFromInvolutions,
            "q*",
            qc,
            (-q + qi + qj + qk) * 0.5,
        ),
        check(
            ConjugatesFromInvolutions,
            "q^i*",
            qic,
            (q - qi + qj + qk) * 0.5,
        ),
        check(
            ConjugatesFromInvolutions,
            "q^j*",
            qjc,
            (q + qi - qj + qk) * 0.5,
        ),
        check(
            ConjugatesFromInvolutions,
            "q^k*",
            qkc,
            (q + qi + qj - qk) * 0.5,
        ),
        check(
            InvolutionsFromConjugates,
            "q",
            q,
            (-qc + qic + qjc + qkc) * 0.5,
        ),
        check(
            InvolutionsFromConjugates,
            "q^i",
            qi,
            (qc - qic + qjc + qkc) * 0.5,
        ),
        check(
            InvolutionsFromConjugates,
            "q^j",
            qj,
            (qc + qic - qjc + qkc) * 0.5,
        ),
        check(
            InvolutionsFromConjugates,
            "q^k",
            qk,
            (qc + qic + qjc - qkc) * 0.5,
        ),
    ]
}

/// Largest residual over all identities at `q`.
pub fn max_identity_residual(q: Quaternion) -> f64 {
    involution_identities(q)
        .iter()
        .map(IdentityCheck::residual)
        .fold(0.0, f64::max)
}
