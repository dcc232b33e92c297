//! Executable counterexamples: the naive component derivative breaks the
//! product and chain rules, the HR derivative breaks the product rule, and
//! the GHR product rule holds.
//!
//! Every route is evaluated through the same derivative machinery as the
//! rest of the crate (analytic component partials fed into
//! [`naive_derivative`], [`hr_derivative`] or [`ghr_derivative`]), never
//! through hard-coded closed forms.

use std::fmt::Write as _;

use serde::Serialize;

use crate::ghr::{
    ghr_derivative, ghr_product_rule, hr_derivative, naive_derivative, ComponentGradient,
    GhrDirection, HrVariant, QuatFunction,
};
use crate::quat::Quaternion;
use crate::rng::{non_real_quaternion, seeded};

/// Minimum mismatch norm for a route to count as a demonstrated failure.
pub const FAILURE_THRESHOLD: f64 = 0.1;
/// Maximum mismatch for the GHR route to count as passing.
pub const AGREEMENT_TOLERANCE: f64 = 1e-12;
/// Minimum norm of the imaginary part of sampled points.
pub const MIN_IMAG_NORM: f64 = 0.5;
/// Number of random points evaluated per route.
pub const SAMPLE_POINTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// A rule that should break did break at every sampled point.
    #[serde(rename = "FAILED-AS-EXPECTED")]
    FailedAsExpected,
    /// The rule that should hold did hold at every sampled point.
    #[serde(rename = "PASSED")]
    Passed,
    /// The route did not behave as predicted.
    #[serde(rename = "UNEXPECTED")]
    Unexpected,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::FailedAsExpected => "FAILED-AS-EXPECTED",
            Verdict::Passed => "PASSED",
            Verdict::Unexpected => "UNEXPECTED",
        }
    }
}

/// Outcome of one derivative route. `expected` and `actual` are taken at the
/// deciding sample: the smallest mismatch for a route that should fail, the
/// largest for one that should hold.
#[derive(Debug, Clone, Serialize)]
pub struct RouteResult {
    pub name: &'static str,
    pub description: &'static str,
    pub at: Quaternion,
    pub expected: Quaternion,
    pub actual: Quaternion,
    pub mismatch: f64,
    pub samples: usize,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailureReport {
    pub seed: u64,
    pub routes: Vec<RouteResult>,
    /// Mismatch of the naive product route at a real input, where `q = q*`
    /// and the routes coincide.
    pub real_input_mismatch: f64,
    pub notes: Vec<String>,
}

impl FailureReport {
    /// True when every naive/HR route failed and the GHR route passed.
    pub fn all_as_expected(&self) -> bool {
        self.routes.iter().all(|r| r.verdict != Verdict::Unexpected)
    }

    pub fn route(&self, name: &str) -> Option<&RouteResult> {
        self.routes.iter().find(|r| r.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "derivative rule check (seed {}, {} points per route)",
            self.seed, SAMPLE_POINTS
        );
        for r in &self.routes {
            let _ = writeln!(out, "  [{}] {}", r.verdict.as_str(), r.name);
            let _ = writeln!(out, "      {}", r.description);
            let _ = writeln!(out, "      at       = {}", r.at);
            let _ = writeln!(out, "      expected = {}", r.expected);
            let _ = writeln!(out, "      actual   = {}", r.actual);
            let _ = writeln!(out, "      mismatch = {:.3e}", r.mismatch);
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }

    /// One `key=value` line per field, prefixed with the route name.
    pub fn to_key_values(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "seed={}", self.seed);
        for r in &self.routes {
            let _ = writeln!(out, "{}.expected={}", r.name, fmt_q(r.expected));
            let _ = writeln!(out, "{}.actual={}", r.name, fmt_q(r.actual));
            let _ = writeln!(out, "{}.mismatch={:e}", r.name, r.mismatch);
            let _ = writeln!(out, "{}.verdict={}", r.name, r.verdict.as_str());
        }
        let _ = writeln!(out, "real_input_mismatch={:e}", self.real_input_mismatch);
        out
    }
}

fn fmt_q(q: Quaternion) -> String {
    format!("{:e},{:e},{:e},{:e}", q.q0, q.q1, q.q2, q.q3)
}

fn partials(f: &QuatFunction<'_>, at: Quaternion) -> ComponentGradient {
    f.partials_at(at).expect("analytic partials")
}

/// Naive route for `d(q q*)/dq`: `q · ∂q*/∂q + ∂q/∂q · q*` versus the direct
/// naive derivative. Returns `(direct, product route)`.
pub fn naive_product_route(q: Quaternion) -> (Quaternion, Quaternion) {
    let direct = naive_derivative(&partials(&QuatFunction::norm_squared(), q));
    let d_conj = naive_derivative(&partials(&QuatFunction::conjugate(), q));
    let d_id = naive_derivative(&partials(&QuatFunction::identity(), q));
    (direct, q * d_conj + d_id * q.conj())
}

/// Naive chain rule for `f = z z*`, `z = x y`, differentiated in `x`.
/// Returns `(direct, chained)`.
pub fn naive_chain_route(x: Quaternion, y: Quaternion) -> (Quaternion, Quaternion) {
    let z = x * y;
    // |xy|² = |x|² |y|², so ∂/∂x_a = 2 x_a |y|².
    let direct_partials =
        ComponentGradient::from_real(x.to_array().map(|c| 2.0 * c * y.norm_sqr()));
    let direct = naive_derivative(&direct_partials);
    let outer = naive_derivative(&partials(&QuatFunction::norm_squared(), z));
    let inner = naive_derivative(&ComponentGradient {
        partials: Quaternion::BASIS.map(|e| e * y),
    });
    (direct, outer * inner)
}

/// HR product rule for `d(q q*)/dq` with the real-valued product rule.
pub fn hr_product_route(q: Quaternion) -> (Quaternion, Quaternion) {
    let direct = hr_derivative(
        &partials(&QuatFunction::norm_squared(), q),
        HrVariant::Plain,
    );
    let d_conj = hr_derivative(&partials(&QuatFunction::conjugate(), q), HrVariant::Plain);
    let d_id = hr_derivative(&partials(&QuatFunction::identity(), q), HrVariant::Plain);
    (direct, q * d_conj + d_id * q.conj())
}

/// GHR product rule for `d(q q*)/dq` with `μ = 1`.
pub fn ghr_product_route(q: Quaternion) -> (Quaternion, Quaternion) {
    let direct = ghr_derivative(
        &partials(&QuatFunction::norm_squared(), q),
        GhrDirection::identity(),
    );
    let via_rule = ghr_product_rule(
        &QuatFunction::identity(),
        &QuatFunction::conjugate(),
        q,
        GhrDirection::identity(),
    )
    .expect("q* is non-zero for non-real q");
    (direct, via_rule)
}

struct Accum {
    name: &'static str,
    description: &'static str,
    should_hold: bool,
    deciding: Option<(Quaternion, Quaternion, Quaternion, f64)>,
    samples: usize,
}

impl Accum {
    fn new(name: &'static str, description: &'static str, should_hold: bool) -> Self {
        Self {
            name,
            description,
            should_hold,
            deciding: None,
            samples: 0,
        }
    }

    fn push(&mut self, at: Quaternion, (expected, actual): (Quaternion, Quaternion)) {
        let mismatch = (expected - actual).norm();
        self.samples += 1;
        let replace = match self.deciding {
            None => true,
            Some((.., m)) => {
                if self.should_hold {
                    mismatch > m || mismatch.is_nan()
                } else {
                    mismatch < m || mismatch.is_nan()
                }
            }
        };
        if replace {
            self.deciding = Some((at, expected, actual, mismatch));
        }
    }

    fn finish(self) -> RouteResult {
        let (at, expected, actual, mismatch) = self.deciding.expect("at least one sample");
        let verdict = match (self.should_hold, mismatch) {
            (true, m) if m <= AGREEMENT_TOLERANCE => Verdict::Passed,
            (false, m) if m > FAILURE_THRESHOLD => Verdict::FailedAsExpected,
            _ => Verdict::Unexpected,
        };
        RouteResult {
            name: self.name,
            description: self.description,
            at,
            expected,
            actual,
            mismatch,
            samples: self.samples,
            verdict,
        }
    }
}

/// Evaluates the four routes at [`SAMPLE_POINTS`] seeded random points whose
/// components lie in `[-1, 1]` and whose imaginary part has norm at least
/// [`MIN_IMAG_NORM`].
pub fn demonstrate_rule_failures(seed: u64) -> FailureReport {
    let mut rng = seeded(seed);
    let mut naive_product = Accum::new(
        "naive_product_rule",
        "naive d(qq*)/dq: q*(dq*/dq) + (dq/dq)*q* = 4q - 2q* vs direct 2q",
        false,
    );
    let mut naive_chain = Accum::new(
        "naive_chain_rule",
        "naive d|xy|^2/dx: (df/dz)(dz/dx) = -4 x y y* vs direct 2 |y|^2 x",
        false,
    );
    let mut hr_product = Accum::new(
        "hr_product_rule",
        "HR d(qq*)/dq: q*(dq*/dq) + (dq/dq)*q* = -q/2 + q* vs direct q*/2",
        false,
    );
    let mut ghr_product = Accum::new(
        "ghr_product_rule",
        "GHR d(qq*)/dq: q*(dq*/dq) + (dq/dq^{q*})*q* vs direct q*/2",
        true,
    );

    for _ in 0..SAMPLE_POINTS {
        let q = non_real_quaternion(&mut rng, MIN_IMAG_NORM);
        let x = non_real_quaternion(&mut rng, MIN_IMAG_NORM);
        let y = non_real_quaternion(&mut rng, MIN_IMAG_NORM);
        naive_product.push(q, naive_product_route(q));
        naive_chain.push(x, naive_chain_route(x, y));
        hr_product.push(q, hr_product_route(q));
        ghr_product.push(q, ghr_product_route(q));
    }

    let real_q = Quaternion::from_real(0.75);
    let (d, r) = naive_product_route(real_q);
    let real_input_mismatch = (d - r).norm();

    FailureReport {
        seed,
        routes: vec![
            naive_product.finish(),
            naive_chain.finish(),
            hr_product.finish(),
            ghr_product.finish(),
        ],
        real_input_mismatch,
        notes: vec![format!(
            "at the real input {real_q} the naive product route agrees with the direct one \
             (mismatch {real_input_mismatch:.1e}) because q = q*; only non-real inputs separate the routes"
        )],
    }
}
