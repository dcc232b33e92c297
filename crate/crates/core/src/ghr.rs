//! Quaternion derivatives built from the four real component partials.
//!
//! Every derivative here starts from a [`ComponentGradient`], the partials
//! `∂f/∂q0 .. ∂f/∂q3` of a quaternion-valued `f`. The HR derivatives combine
//! them with `¼` weights and signed imaginary units; the GHR derivatives use
//! rotated units `a^μ = μ a μ⁻¹` instead. Units always multiply the partials
//! from the right.

use crate::error::{Error, Result};
use crate::quat::{Axis, Quaternion};

/// Default central-difference step for [`finite_difference_gradient`].
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// The four component partials of a quaternion-valued function at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComponentGradient {
    /// `∂f/∂q0, ∂f/∂q1, ∂f/∂q2, ∂f/∂q3`.
    pub partials: [Quaternion; 4],
}

impl ComponentGradient {
    pub const fn new(d0: Quaternion, d1: Quaternion, d2: Quaternion, d3: Quaternion) -> Self {
        Self {
            partials: [d0, d1, d2, d3],
        }
    }

    /// Gradient of a real-valued function, each partial a real quaternion.
    pub fn from_real(d: [f64; 4]) -> Self {
        Self {
            partials: d.map(Quaternion::from_real),
        }
    }

    pub fn map(&self, f: impl Fn(Quaternion) -> Quaternion) -> Self {
        Self {
            partials: self.partials.map(f),
        }
    }

    /// True when every partial has zero imaginary part, i.e. `f` is real.
    pub fn is_real(&self) -> bool {
        self.partials.iter().all(|d| d.is_real())
    }

    pub fn is_finite(&self) -> bool {
        self.partials.iter().all(|d| d.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.partials
            .iter()
            .zip(other.partials.iter())
            .map(|(a, b)| a.max_abs_diff(*b))
            .fold(0.0, f64::max)
    }
}

/// Selects `q` or one of its involutions `q^i, q^j, q^k` as the variable
/// of differentiation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HrVariant {
    Plain,
    I,
    J,
    K,
}

impl HrVariant {
    pub const ALL: [HrVariant; 4] = [HrVariant::Plain, HrVariant::I, HrVariant::J, HrVariant::K];

    pub fn axis(self) -> Option<Axis> {
        match self {
            HrVariant::Plain => None,
            HrVariant::I => Some(Axis::I),
            HrVariant::J => Some(Axis::J),
            HrVariant::K => Some(Axis::K),
        }
    }

    /// The GHR rotation parameter that reproduces this variant.
    pub fn mu(self) -> Quaternion {
        match self {
            HrVariant::Plain => Quaternion::ONE,
            HrVariant::I => Quaternion::I,
            HrVariant::J => Quaternion::J,
            HrVariant::K => Quaternion::K,
        }
    }

    /// Applies the matching involution (identity for `Plain`).
    pub fn apply(self, q: Quaternion) -> Quaternion {
        match self.axis() {
            None => q,
            Some(axis) => q.involution(axis),
        }
    }

    /// Signs of the `i, j, k` terms in `∂f/∂q^ν`. The conjugate derivative
    /// uses the negated pattern.
    fn signs(self) -> [f64; 3] {
        match self {
            HrVariant::Plain => [-1.0, -1.0, -1.0],
            HrVariant::I => [-1.0, 1.0, 1.0],
            HrVariant::J => [1.0, -1.0, 1.0],
            HrVariant::K => [1.0, 1.0, -1.0],
        }
    }
}

/// `¼ (d0 + Σ_a sign_a · d_a · unit_a)`.
fn quarter_combination(
    g: &ComponentGradient,
    signs: [f64; 3],
    units: [Quaternion; 3],
) -> Quaternion {
    let [d0, d1, d2, d3] = g.partials;
    let mut acc = d0;
    for ((d, unit), sign) in [d1, d2, d3].into_iter().zip(units).zip(signs) {
        let term = d * unit;
        if sign < 0.0 {
            acc -= term;
        } else {
            acc += term;
        }
    }
    acc * 0.25
}

const UNITS: [Quaternion; 3] = [Quaternion::I, Quaternion::J, Quaternion::K];

/// HR derivative `∂f/∂q^ν` for `ν ∈ {1, i, j, k}`.
pub fn hr_derivative(g: &ComponentGradient, variant: HrVariant) -> Quaternion {
    quarter_combination(g, variant.signs(), UNITS)
}

/// HR conjugate derivative `∂f/∂q^{ν*}`.
pub fn hr_conjugate_derivative(g: &ComponentGradient, variant: HrVariant) -> Quaternion {
    quarter_combination(g, variant.signs().map(|s| -s), UNITS)
}

/// Direct sum of partials times units, `d0 + d1 i + d2 j + d3 k`.
///
/// This is the naive definition that breaks both the product and the chain
/// rule; it exists to demonstrate those failures.
pub fn naive_derivative(g: &ComponentGradient) -> Quaternion {
    let [d0, d1, d2, d3] = g.partials;
    d0 + d1 * Quaternion::I + d2 * Quaternion::J + d3 * Quaternion::K
}

/// Rotation parameter `μ` of a GHR derivative, and whether the conjugate
/// derivative `∂f/∂q^{μ*}` is meant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhrDirection {
    mu: Quaternion,
    conjugated: bool,
}

impl GhrDirection {
    pub fn new(mu: Quaternion, conjugated: bool) -> Result<Self> {
        if mu.norm_sqr() == 0.0 {
            return Err(Error::Singular);
        }
        Ok(Self { mu, conjugated })
    }

    /// `μ = 1`, the convention used throughout the backpropagation.
    pub const fn identity() -> Self {
        Self {
            mu: Quaternion::ONE,
            conjugated: false,
        }
    }

    pub const fn identity_conjugated() -> Self {
        Self {
            mu: Quaternion::ONE,
            conjugated: true,
        }
    }

    pub fn mu(&self) -> Quaternion {
        self.mu
    }

    pub fn conjugated(&self) -> bool {
        self.conjugated
    }

    /// `(i^μ, j^μ, k^μ)` with `a^μ = μ a μ⁻¹`.
    pub fn rotated_units(&self) -> [Quaternion; 3] {
        // mu != 0 is enforced at construction.
        let inv = self.mu.inverse().expect("GhrDirection holds a non-zero mu");
        UNITS.map(|a| (self.mu * a) * inv)
    }

    /// The direction rotated by a left factor, `g μ`, as required by the
    /// product rule.
    pub fn rotated_by(&self, g: Quaternion) -> Result<Self> {
        Self::new(g * self.mu, self.conjugated)
    }
}

impl Default for GhrDirection {
    fn default() -> Self {
        Self::identity()
    }
}

/// GHR derivative `∂f/∂q^μ` (or `∂f/∂q^{μ*}` when conjugated).
pub fn ghr_derivative(g: &ComponentGradient, dir: GhrDirection) -> Quaternion {
    let sign = if dir.conjugated { 1.0 } else { -1.0 };
    quarter_combination(g, [sign; 3], dir.rotated_units())
}

type Evaluator<'a> = Box<dyn Fn(Quaternion) -> Quaternion + Send + Sync + 'a>;
type PartialsFn<'a> = Box<dyn Fn(Quaternion) -> ComponentGradient + Send + Sync + 'a>;

/// A function `H → H`, optionally with analytic component partials. Without
/// them, partials come from central differences.
pub struct QuatFunction<'a> {
    eval: Evaluator<'a>,
    partials: Option<PartialsFn<'a>>,
}

impl<'a> QuatFunction<'a> {
    pub fn new(eval: impl Fn(Quaternion) -> Quaternion + Send + Sync + 'a) -> Self {
        Self {
            eval: Box::new(eval),
            partials: None,
        }
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(Quaternion) -> ComponentGradient + Send + Sync + 'a,
    ) -> Self {
        self.partials = Some(Box::new(partials));
        self
    }

    pub fn eval(&self, q: Quaternion) -> Quaternion {
        (self.eval)(q)
    }

    pub fn has_analytic_partials(&self) -> bool {
        self.partials.is_some()
    }

    /// Analytic partials when available, otherwise central differences with
    /// [`DEFAULT_FD_STEP`].
    pub fn partials_at(&self, q: Quaternion) -> Result<ComponentGradient> {
        match &self.partials {
            Some(p) => Ok(p(q)),
            None => finite_difference_gradient(self, q, DEFAULT_FD_STEP),
        }
    }

    /// Drops the analytic partials so that differentiation goes through
    /// finite differences.
    pub fn numeric_only(self) -> Self {
        Self {
            eval: self.eval,
            partials: None,
        }
    }

    /// `f(q) = q`.
    pub fn identity() -> Self {
        Self::new(|q| q).with_partials(|_| {
            ComponentGradient::new(Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K)
        })
    }

    /// `f(q) = q*`.
    pub fn conjugate() -> Self {
        Self::new(|q| q.conj()).with_partials(|_| {
            ComponentGradient::new(
                Quaternion::ONE,
                -Quaternion::I,
                -Quaternion::J,
                -Quaternion::K,
            )
        })
    }

    /// `f(q) = q q* = |q|²`.
    pub fn norm_squared() -> Self {
        Self::new(|q| q * q.conj())
            .with_partials(|q| ComponentGradient::from_real(q.to_array().map(|c| 2.0 * c)))
    }

    /// `f(q) = w q` for a fixed `w`.
    pub fn left_mul(w: Quaternion) -> Self {
        Self::new(move |q| w * q).with_partials(move |_| ComponentGradient {
            partials: Quaternion::BASIS.map(|e| w * e),
        })
    }

    /// `f(q) = q q`.
    pub fn square() -> Self {
        Self::new(|q| q * q).with_partials(|q| ComponentGradient {
            partials: Quaternion::BASIS.map(|e| e * q + q * e),
        })
    }

    pub fn constant(c: Quaternion) -> Self {
        Self::new(move |_| c).with_partials(|_| ComponentGradient::default())
    }

    /// Pointwise product `q ↦ f(q) g(q)`. Partials follow the real product
    /// rule componentwise, which is valid for each real coordinate.
    pub fn product(f: QuatFunction<'a>, g: QuatFunction<'a>) -> Self {
        let f = std::sync::Arc::new(f);
        let g = std::sync::Arc::new(g);
        let (fe, ge) = (f.clone(), g.clone());
        let analytic = f.has_analytic_partials() && g.has_analytic_partials();
        let prod = Self::new(move |q| fe.eval(q) * ge.eval(q));
        if !analytic {
            return prod;
        }
        prod.with_partials(move |q| {
            let (fv, gv) = (f.eval(q), g.eval(q));
            let fp = f.partials_at(q).expect("analytic partials are infallible");
            let gp = g.partials_at(q).expect("analytic partials are infallible");
            let mut partials = [Quaternion::ZERO; 4];
            for (a, slot) in partials.iter_mut().enumerate() {
                *slot = fp.partials[a] * gv + fv * gp.partials[a];
            }
            ComponentGradient { partials }
        })
    }
}

/// Central differences `(f(q + h e_a) − f(q − h e_a)) / 2h` along each of
/// the four coordinates.
pub fn finite_difference_gradient(
    f: &QuatFunction<'_>,
    at: Quaternion,
    h: f64,
) -> Result<ComponentGradient> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "finite-difference step must be > 0, got {h}"
        )));
    }
    let mut partials = [Quaternion::ZERO; 4];
    for (a, slot) in partials.iter_mut().enumerate() {
        let plus = f.eval(at.with_component(a, at.component(a) + h));
        let minus = f.eval(at.with_component(a, at.component(a) - h));
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite(format!(
                "function evaluation near {at} along component {a}"
            )));
        }
        *slot = (plus - minus) * (0.5 / h);
    }
    Ok(ComponentGradient { partials })
}

/// GHR product rule: `∂(fg)/∂q^μ = f ∂g/∂q^μ + (∂f/∂q^{gμ}) g`, and the same
/// shape for the conjugate derivative.
pub fn ghr_product_rule(
    f: &QuatFunction<'_>,
    g: &QuatFunction<'_>,
    at: Quaternion,
    dir: GhrDirection,
) -> Result<Quaternion> {
    let fv = f.eval(at);
    let gv = g.eval(at);
    let rotated = dir.rotated_by(gv)?;
    let dg = ghr_derivative(&g.partials_at(at)?, dir);
    let df = ghr_derivative(&f.partials_at(at)?, rotated);
    Ok(fv * dg + df * gv)
}

/// GHR chain rule with `ν = 1`:
/// `∂f(g)/∂q^μ = Σ_{ν ∈ {1,i,j,k}} (∂f/∂g^ν)(∂g^ν/∂q^μ)`.
///
/// `outer` holds the partials of `f` with respect to the components of `g`,
/// evaluated at `g(q)`. `inner` holds `∂g/∂q^μ, ∂g^i/∂q^μ, ∂g^j/∂q^μ,
/// ∂g^k/∂q^μ` in that order; passing conjugate inner derivatives yields
/// `∂f(g)/∂q^{μ*}` instead.
pub fn ghr_chain_rule(outer: &ComponentGradient, inner: [Quaternion; 4]) -> Quaternion {
    HrVariant::ALL
        .iter()
        .zip(inner)
        .map(|(&nu, d_inner)| hr_derivative(outer, nu) * d_inner)
        .sum()
}

/// Inner traces `∂g^ν/∂q^μ` for [`ghr_chain_rule`], from the partials of `g`.
///
/// The involutions are real-linear maps, so the partials of `g^ν` are the
/// involutions of the partials of `g`.
pub fn involution_traces(g: &ComponentGradient, dir: GhrDirection) -> [Quaternion; 4] {
    HrVariant::ALL.map(|nu| ghr_derivative(&g.map(|d| nu.apply(d)), dir))
}

#[cfg(test)]
mod tests {
    use super::*;

    const Q: Quaternion = Quaternion::new(1.0, 2.0, 3.0, 4.0);

    fn close(a: Quaternion, b: Quaternion, tol: f64) -> bool {
        a.max_abs_diff(b) <= tol
    }

    #[test]
    fn hr_examples() {
        let nsq = QuatFunction::norm_squared().partials_at(Q).unwrap();
        assert!(close(
            hr_derivative(&nsq, HrVariant::Plain),
            Q.conj() * 0.5,
            1e-15
        ));

        let id = QuatFunction::identity().partials_at(Q).unwrap();
        assert_eq!(hr_derivative(&id, HrVariant::Plain), Quaternion::ONE);

        let c = QuatFunction::constant(Q).partials_at(Q).unwrap();
        for v in HrVariant::ALL {
            assert_eq!(hr_derivative(&c, v), Quaternion::ZERO);
            assert_eq!(hr_conjugate_derivative(&c, v), Quaternion::ZERO);
        }
    }

    #[test]
    fn hr_conjugate_examples() {
        let conj = QuatFunction::conjugate().partials_at(Q).unwrap();
        assert_eq!(
            hr_conjugate_derivative(&conj, HrVariant::Plain),
            Quaternion::ONE
        );

        let id = QuatFunction::identity().partials_at(Q).unwrap();
        assert_eq!(
            hr_conjugate_derivative(&id, HrVariant::Plain),
            Quaternion::from_real(-0.5)
        );
        // and the swapped role: ∂q*/∂q = -½
        assert_eq!(
            hr_derivative(&conj, HrVariant::Plain),
            Quaternion::from_real(-0.5)
        );
    }

    #[test]
    fn hr_involution_variants_of_identity() {
        // ∂q/∂q^ν vanishes for ν ≠ 1 and ∂q^ν/∂q^ν = 1.
        let id = QuatFunction::identity().partials_at(Q).unwrap();
        for v in [HrVariant::I, HrVariant::J, HrVariant::K] {
            assert_eq!(hr_derivative(&id, v), Quaternion::ZERO);
            let inv = id.map(|d| v.apply(d));
            assert_eq!(hr_derivative(&inv, v), Quaternion::ONE);
        }
    }

    #[test]
    fn ghr_examples() {
        let nsq = QuatFunction::norm_squared().partials_at(Q).unwrap();
        assert!(close(
            ghr_derivative(&nsq, GhrDirection::identity()),
            Q.conj() * 0.5,
            1e-15
        ));

        let id = QuatFunction::identity().partials_at(Q).unwrap();
        let dir = GhrDirection::new(Q.conj(), false).unwrap();
        let expected = Q.conj().inverse().unwrap() * Q.q0;
        assert!(close(ghr_derivative(&id, dir), expected, 1e-15));
    }

    #[test]
    fn ghr_reduces_to_hr() {
        let g = ComponentGradient::new(
            Quaternion::new(0.3, -1.1, 0.7, 2.0),
            Quaternion::new(-0.4, 0.9, 1.5, -0.2),
            Quaternion::new(1.2, 0.1, -0.6, 0.8),
            Quaternion::new(0.0, -2.2, 0.3, 1.1),
        );
        for v in HrVariant::ALL {
            let plain = GhrDirection::new(v.mu(), false).unwrap();
            let conj = GhrDirection::new(v.mu(), true).unwrap();
            assert!(close(
                ghr_derivative(&g, plain),
                hr_derivative(&g, v),
                1e-15
            ));
            assert!(close(
                ghr_derivative(&g, conj),
                hr_conjugate_derivative(&g, v),
                1e-15
            ));
        }
    }

    #[test]
    fn ghr_rejects_zero_mu() {
        assert!(matches!(
            GhrDirection::new(Quaternion::ZERO, false),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn naive_examples() {
        let nsq = QuatFunction::norm_squared().partials_at(Q).unwrap();
        assert_eq!(naive_derivative(&nsq), Q * 2.0);
        let id = QuatFunction::identity().partials_at(Q).unwrap();
        assert_eq!(naive_derivative(&id), Quaternion::from_real(-2.0));
        let conj = QuatFunction::conjugate().partials_at(Q).unwrap();
        assert_eq!(naive_derivative(&conj), Quaternion::from_real(4.0));
    }

    #[test]
    fn finite_difference_examples() {
        let nsq = QuatFunction::norm_squared();
        let g = finite_difference_gradient(&nsq, Q, 1e-5).unwrap();
        for (a, d) in g.partials.iter().enumerate() {
            let expected = Quaternion::from_real(2.0 * Q.component(a));
            assert!(close(*d, expected, 1e-8), "partial {a}: {d}");
        }

        let c = QuatFunction::constant(Quaternion::new(3.0, -1.0, 0.5, 2.0));
        let g = finite_difference_gradient(&c, Q, 1e-5).unwrap();
        assert!(g.max_abs_diff(&ComponentGradient::default()) <= 1e-10);

        let id = QuatFunction::identity();
        let g = finite_difference_gradient(&id, Q, 1e-5).unwrap();
        for (d, e) in g.partials.iter().zip(Quaternion::BASIS) {
            assert!(close(*d, e, 1e-10));
        }
    }

    #[test]
    fn finite_difference_errors() {
        let id = QuatFunction::identity();
        assert!(matches!(
            finite_difference_gradient(&id, Q, 0.0),
            Err(Error::InvalidConfig(_))
        ));
        let blowup = QuatFunction::new(|q| Quaternion::from_real(1.0 / (q.q0 - Q.q0).max(0.0)));
        assert!(matches!(
            finite_difference_gradient(&blowup, Q, 1e-5),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn product_rule_examples() {
        let f = QuatFunction::identity();
        let g = QuatFunction::conjugate();
        let r = ghr_product_rule(&f, &g, Q, GhrDirection::identity()).unwrap();
        assert!(close(r, Q.conj() * 0.5, 1e-14));

        let c = Quaternion::new(0.5, -1.0, 2.0, 0.0);
        let g = QuatFunction::square();
        let r =
            ghr_product_rule(&QuatFunction::constant(c), &g, Q, GhrDirection::identity()).unwrap();
        let dg = ghr_derivative(&g.partials_at(Q).unwrap(), GhrDirection::identity());
        assert!(close(r, c * dg, 1e-14));

        // f = g = q at (1,1,0,0) against the finite-difference derivative of q².
        let at = Quaternion::new(1.0, 1.0, 0.0, 0.0);
        let r = ghr_product_rule(
            &QuatFunction::identity(),
            &QuatFunction::identity(),
            at,
            GhrDirection::identity(),
        )
        .unwrap();
        let sq = QuatFunction::new(|q| q * q);
        let fd = ghr_derivative(
            &finite_difference_gradient(&sq, at, 1e-5).unwrap(),
            GhrDirection::identity(),
        );
        assert!(close(r, fd, 1e-6));
    }

    #[test]
    fn product_rule_degenerate_direction() {
        // g(at) = 0 makes g μ = 0.
        let r = ghr_product_rule(
            &QuatFunction::identity(),
            &QuatFunction::identity(),
            Quaternion::ZERO,
            GhrDirection::identity(),
        );
        assert!(matches!(r, Err(Error::Singular)));
    }

    #[test]
    fn chain_rule_trivial_cases() {
        let outer = QuatFunction::identity().partials_at(Q).unwrap();
        assert_eq!(
            ghr_chain_rule(&outer, [Quaternion::ZERO; 4]),
            Quaternion::ZERO
        );

        let inner = involution_traces(
            &QuatFunction::identity().partials_at(Q).unwrap(),
            GhrDirection::identity(),
        );
        assert!(close(ghr_chain_rule(&outer, inner), Quaternion::ONE, 1e-15));
    }

    #[test]
    fn chain_rule_matches_direct_gradient() {
        // f(z) = z z*, z = x y, differentiated with respect to x.
        let x = Quaternion::new(0.3, -0.8, 0.5, 0.1);
        let y = Quaternion::new(-0.6, 0.2, 0.9, -0.4);
        let z = x * y;
        let outer = QuatFunction::norm_squared().partials_at(z).unwrap();
        let inner = involution_traces(
            &QuatFunction::new(move |x| x * y).partials_at(x).unwrap(),
            GhrDirection::identity(),
        );
        let chained = ghr_chain_rule(&outer, inner);

        let composite = QuatFunction::new(move |x| {
            let z = x * y;
            z * z.conj()
        });
        let direct = hr_derivative(
            &finite_difference_gradient(&composite, x, 1e-5).unwrap(),
            HrVariant::Plain,
        );
        assert!(close(chained, direct, 1e-6), "{chained} vs {direct}");
        // Closed form: ½ |y|² x*.
        assert!(close(chained, x.conj() * (0.5 * y.norm_sqr()), 1e-9));
    }
}
