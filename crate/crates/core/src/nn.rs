//! Fully-connected quaternion networks and their analytic backward pass.
//!
//! A layer computes `z = W a + b` (weights multiply from the left) and
//! `a' = σ(z)` with a split activation. The loss is `L = Σ_i |d_i − y_i|²`.
//!
//! Gradients are conjugate derivatives `∂L/∂w*` and `∂L/∂b*`, which point
//! along steepest ascent of the real loss; for a real `L` they equal a
//! quarter of the Euclidean gradient over the four components. The signal
//! passed between layers is `p = ∂L/∂a` (the non-conjugate HR derivative).
//!
//! Per layer, with `q = p ∘ σ'(z)`:
//!
//! | quantity  | output layer (`σ = id`, `e = d − y`) | hidden layer      |
//! |-----------|--------------------------------------|-------------------|
//! | `∂L/∂w*`  | `−½ e a*`                            | `q* a*`           |
//! | `∂L/∂b*`  | `−½ e`                               | `q*`              |
//! | outgoing p| `Σ_i −½ e_i* w_ij`                   | `Σ_i q_i w_ij`    |
//!
//! The two columns agree for an identity output layer, since there
//! `q = p = −½ e*`.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quat::{QMatrix, QVector, Quaternion};

/// Scalar activation applied independently to each quaternion component.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    /// `x − tanh(x)`, with derivative `tanh²(x)`.
    Tanhshrink,
}

impl Activation {
    #[inline]
    pub fn scalar(self, x: f64) -> f64 {
        match self {
            Activation::Identity => x,
            Activation::Tanhshrink => x - x.tanh(),
        }
    }

    #[inline]
    pub fn scalar_derivative(self, x: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanhshrink => {
                let t = x.tanh();
                t * t
            }
        }
    }

    /// `σ(z0) + σ(z1) i + σ(z2) j + σ(z3) k`.
    #[inline]
    pub fn apply(self, z: Quaternion) -> Quaternion {
        Quaternion::from_array(z.to_array().map(|c| self.scalar(c)))
    }

    /// Componentwise derivative `σ'(z)`, used in a Hadamard product.
    #[inline]
    pub fn derivative(self, z: Quaternion) -> Quaternion {
        Quaternion::from_array(z.to_array().map(|c| self.scalar_derivative(c)))
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanhshrink => "tanhshrink",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "identity" | "linear" => Ok(Activation::Identity),
            "tanhshrink" => Ok(Activation::Tanhshrink),
            other => Err(Error::InvalidConfig(format!(
                "unknown activation '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: QMatrix,
    pub bias: QVector,
    pub activation: Activation,
}

impl DenseLayer {
    pub fn new(weights: QMatrix, bias: QVector, activation: Activation) -> Result<Self> {
        if bias.len() != weights.rows() {
            return Err(Error::dims("DenseLayer bias", weights.rows(), bias.len()));
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: QMatrix::zeros(outputs, inputs),
            bias: QVector::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.cols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.rows()
    }

    /// `(z, σ(z))` for one input vector.
    pub fn forward(&self, a_prev: &QVector) -> Result<(QVector, QVector)> {
        let mut z = self.weights.matvec(a_prev)?;
        for i in 0..z.len() {
            z[i] += self.bias[i];
        }
        let a = z.map(|zi| self.activation.apply(zi));
        Ok((z, a))
    }

    /// All weights then all biases, in storage order.
    pub fn parameters(&self) -> impl Iterator<Item = &Quaternion> {
        self.weights.as_slice().iter().chain(self.bias.iter())
    }
}

/// A stack of dense layers whose last layer has no activation.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<DenseLayer>,
}

impl Network {
    pub fn new(layers: Vec<DenseLayer>) -> Result<Self> {
        let Some(last) = layers.last() else {
            return Err(Error::InvalidConfig(
                "a network needs at least one layer".into(),
            ));
        };
        if last.activation != Activation::Identity {
            return Err(Error::InvalidConfig(format!(
                "the output layer must use the identity activation, got {}",
                last.activation
            )));
        }
        for pair in layers.windows(2) {
            if pair[1].inputs() != pair[0].outputs() {
                return Err(Error::dims(
                    "Network layer chaining",
                    pair[0].outputs(),
                    pair[1].inputs(),
                ));
            }
        }
        Ok(Self { layers })
    }

    /// Zero-initialised network for a shape such as `[3, 3, 2, 2]`. Every
    /// layer but the last uses `hidden`.
    pub fn zeros(shape: &[usize], hidden: Activation) -> Result<Self> {
        if shape.len() < 2 {
            return Err(Error::InvalidConfig(format!(
                "a shape needs at least an input and an output size, got {shape:?}"
            )));
        }
        if shape.contains(&0) {
            return Err(Error::InvalidConfig(format!(
                "layer sizes must be positive, got {shape:?}"
            )));
        }
        let n = shape.len() - 1;
        let layers = shape
            .windows(2)
            .enumerate()
            .map(|(l, w)| {
                let act = if l + 1 == n {
                    Activation::Identity
                } else {
                    hidden
                };
                DenseLayer::zeros(w[0], w[1], act)
            })
            .collect();
        Self::new(layers)
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Mutable access to the parameters. Shapes and activations cannot be
    /// changed through this, only values.
    pub fn for_each_parameter_mut(&mut self, mut f: impl FnMut(usize, &mut Quaternion)) {
        for (l, layer) in self.layers.iter_mut().enumerate() {
            for w in layer.weights.as_mut_slice() {
                f(l, w);
            }
            for i in 0..layer.bias.len() {
                f(l, &mut layer.bias[i]);
            }
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs()
    }

    /// Layer sizes from input to output, e.g. `[3, 3, 2, 2]`.
    pub fn shape(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(DenseLayer::outputs))
            .collect()
    }

    pub fn hidden_activation(&self) -> Activation {
        self.layers
            .first()
            .filter(|_| self.layers.len() > 1)
            .map_or(Activation::Identity, |l| l.activation)
    }

    pub fn parameters(&self) -> impl Iterator<Item = &Quaternion> {
        self.layers.iter().flat_map(DenseLayer::parameters)
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().count()
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().all(|q| q.is_finite())
    }

    pub fn forward(&self, input: &QVector) -> Result<ForwardTrace> {
        if input.len() != self.input_dim() {
            return Err(Error::dims(
                "Network::forward input",
                self.input_dim(),
                input.len(),
            ));
        }
        let mut layers: Vec<LayerTrace> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let a_prev = layers.last().map_or(input, |t| &t.a);
            let (z, a) = layer.forward(a_prev)?;
            layers.push(LayerTrace { z, a });
        }
        Ok(ForwardTrace {
            input: input.clone(),
            layers,
        })
    }

    pub fn predict(&self, input: &QVector) -> Result<QVector> {
        Ok(self
            .forward(input)?
            .layers
            .pop()
            .expect("non-empty network")
            .a)
    }

    /// In-place `param ← param − lr · ∂L/∂param*`.
    pub fn apply_gradients(&mut self, grads: &[LayerGradients], lr: f64) -> Result<()> {
        check_gradient_shapes(self, grads)?;
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, dw) in layer
                .weights
                .as_mut_slice()
                .iter_mut()
                .zip(g.d_weights.as_slice())
            {
                *w -= *dw * lr;
            }
            for i in 0..layer.bias.len() {
                layer.bias[i] -= g.d_bias[i] * lr;
            }
        }
        Ok(())
    }
}

fn check_gradient_shapes(net: &Network, grads: &[LayerGradients]) -> Result<()> {
    if grads.len() != net.layers.len() {
        return Err(Error::dims(
            "gradient layer count",
            net.layers.len(),
            grads.len(),
        ));
    }
    for (layer, g) in net.layers.iter().zip(grads) {
        if g.d_weights.rows() != layer.outputs() || g.d_weights.cols() != layer.inputs() {
            return Err(Error::dims(
                "gradient weight shape",
                layer.outputs() * layer.inputs(),
                g.d_weights.rows() * g.d_weights.cols(),
            ));
        }
        if g.d_bias.len() != layer.outputs() {
            return Err(Error::dims(
                "gradient bias length",
                layer.outputs(),
                g.d_bias.len(),
            ));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// Pre-activation `z = W a + b`.
    pub z: QVector,
    /// Activation `σ(z)`.
    pub a: QVector,
}

/// Cached values from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub input: QVector,
    pub layers: Vec<LayerTrace>,
}

impl ForwardTrace {
    pub fn output(&self) -> &QVector {
        &self.layers.last().expect("non-empty trace").a
    }

    /// The vector that fed layer `l`: the network input for `l = 0`.
    pub fn layer_input(&self, l: usize) -> &QVector {
        if l == 0 {
            &self.input
        } else {
            &self.layers[l - 1].a
        }
    }
}

/// `p = ∂L/∂a` for the activations of a layer, flowing in from the layer
/// above. Layer `l` receives it for its own outputs and emits the one for
/// its inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct BackpropSignal {
    pub p: QVector,
}

/// `∂L/∂W*` and `∂L/∂b*` for one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradients {
    pub d_weights: QMatrix,
    pub d_bias: QVector,
}

impl LayerGradients {
    pub fn zeros_like(layer: &DenseLayer) -> Self {
        Self {
            d_weights: QMatrix::zeros(layer.outputs(), layer.inputs()),
            d_bias: QVector::zeros(layer.outputs()),
        }
    }

    pub fn add_assign(&mut self, other: &LayerGradients) {
        for (a, b) in self
            .d_weights
            .as_mut_slice()
            .iter_mut()
            .zip(other.d_weights.as_slice())
        {
            *a += *b;
        }
        for i in 0..self.d_bias.len() {
            self.d_bias[i] += other.d_bias[i];
        }
    }

    pub fn scale(&mut self, s: f64) {
        for a in self.d_weights.as_mut_slice() {
            *a = *a * s;
        }
        for i in 0..self.d_bias.len() {
            self.d_bias[i] = self.d_bias[i] * s;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.d_weights
            .as_slice()
            .iter()
            .chain(self.d_bias.iter())
            .all(|q| *q == Quaternion::ZERO)
    }
}

/// `Σ_i |d_i − y_i|²`.
pub fn loss(output: &QVector, target: &QVector) -> Result<f64> {
    if output.len() != target.len() {
        return Err(Error::dims("loss", target.len(), output.len()));
    }
    Ok(output
        .iter()
        .zip(target.iter())
        .map(|(y, d)| (*d - *y).norm_sqr())
        .sum())
}

/// `e* e` summed as quaternions; its imaginary part vanishes identically.
pub fn loss_quaternion(output: &QVector, target: &QVector) -> Result<Quaternion> {
    if output.len() != target.len() {
        return Err(Error::dims("loss", target.len(), output.len()));
    }
    Ok(output
        .iter()
        .zip(target.iter())
        .map(|(y, d)| {
            let e = *d - *y;
            e.conj() * e
        })
        .sum())
}

/// Gradients of the identity output layer and the signal for the layer
/// below. `a_prev` is the layer's input, `output` its output `y`.
pub fn backward_output_layer(
    layer: &DenseLayer,
    a_prev: &QVector,
    output: &QVector,
    target: &QVector,
) -> Result<(LayerGradients, BackpropSignal)> {
    if layer.activation != Activation::Identity {
        return Err(Error::InvalidConfig(
            "backward_output_layer requires the identity activation".into(),
        ));
    }
    if a_prev.len() != layer.inputs() {
        return Err(Error::dims(
            "backward_output_layer input",
            layer.inputs(),
            a_prev.len(),
        ));
    }
    if output.len() != layer.outputs() {
        return Err(Error::dims(
            "backward_output_layer output",
            layer.outputs(),
            output.len(),
        ));
    }
    if target.len() != layer.outputs() {
        return Err(Error::dims(
            "backward_output_layer target",
            layer.outputs(),
            target.len(),
        ));
    }
    let (m, n) = (layer.outputs(), layer.inputs());
    let mut grads = LayerGradients::zeros_like(layer);
    let mut p_out = QVector::zeros(n);
    for i in 0..m {
        let e = target[i] - output[i];
        let half_e = e * -0.5;
        let half_e_conj = e.conj() * -0.5;
        grads.d_bias[i] = half_e;
        for j in 0..n {
            grads.d_weights[(i, j)] = half_e * a_prev[j].conj();
            p_out[j] += half_e_conj * layer.weights[(i, j)];
        }
    }
    Ok((grads, BackpropSignal { p: p_out }))
}

/// Gradients of a layer with activation, given `p = ∂L/∂a` for its outputs.
/// `z` is the layer's pre-activation and `a_prev` its input.
pub fn backward_hidden_layer(
    layer: &DenseLayer,
    z: &QVector,
    a_prev: &QVector,
    p_in: &BackpropSignal,
) -> Result<(LayerGradients, BackpropSignal)> {
    let (m, n) = (layer.outputs(), layer.inputs());
    if p_in.p.len() != m {
        return Err(Error::dims("backward_hidden_layer signal", m, p_in.p.len()));
    }
    if z.len() != m {
        return Err(Error::dims(
            "backward_hidden_layer pre-activation",
            m,
            z.len(),
        ));
    }
    if a_prev.len() != n {
        return Err(Error::dims("backward_hidden_layer input", n, a_prev.len()));
    }
    let mut grads = LayerGradients::zeros_like(layer);
    let mut p_out = QVector::zeros(n);
    for i in 0..m {
        // q = ∂L/∂z
        let q = p_in.p[i].hadamard(layer.activation.derivative(z[i]));
        let q_conj = q.conj();
        grads.d_bias[i] = q_conj;
        for j in 0..n {
            grads.d_weights[(i, j)] = q_conj * a_prev[j].conj();
            p_out[j] += q * layer.weights[(i, j)];
        }
    }
    Ok((grads, BackpropSignal { p: p_out }))
}

/// Full backward pass for one sample. Returns gradients for every layer.
pub fn backward(
    net: &Network,
    trace: &ForwardTrace,
    target: &QVector,
) -> Result<Vec<LayerGradients>> {
    let layers = net.layers();
    if trace.layers.len() != layers.len() {
        return Err(Error::dims(
            "backward trace depth",
            layers.len(),
            trace.layers.len(),
        ));
    }
    let last = layers.len() - 1;
    let mut grads: Vec<LayerGradients> = Vec::with_capacity(layers.len());
    let (g, mut signal) = backward_output_layer(
        &layers[last],
        trace.layer_input(last),
        trace.output(),
        target,
    )?;
    grads.push(g);
    for l in (0..last).rev() {
        let (g, next) = backward_hidden_layer(
            &layers[l],
            &trace.layers[l].z,
            trace.layer_input(l),
            &signal,
        )?;
        grads.push(g);
        signal = next;
    }
    grads.reverse();
    Ok(grads)
}

/// Loss and gradients for one `(input, target)` pair.
pub fn sample_gradients(
    net: &Network,
    input: &QVector,
    target: &QVector,
) -> Result<(f64, Vec<LayerGradients>)> {
    let trace = net.forward(input)?;
    let l = loss(trace.output(), target)?;
    Ok((l, backward(net, &trace, target)?))
}

/// Mean loss and mean gradients over a batch, accumulated in sample order.
pub fn batch_gradients<'a>(
    net: &Network,
    batch: impl IntoIterator<Item = (&'a QVector, &'a QVector)>,
) -> Result<(f64, Vec<LayerGradients>)> {
    let mut total: Vec<LayerGradients> = net
        .layers()
        .iter()
        .map(LayerGradients::zeros_like)
        .collect();
    let mut loss_sum = 0.0;
    let mut count = 0usize;
    for (x, d) in batch {
        let (l, g) = sample_gradients(net, x, d)?;
        loss_sum += l;
        for (t, gi) in total.iter_mut().zip(&g) {
            t.add_assign(gi);
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::InvalidConfig("empty batch".into()));
    }
    let inv = 1.0 / count as f64;
    for t in &mut total {
        t.scale(inv);
    }
    Ok((loss_sum * inv, total))
}

/// One descent step `param ← param − lr · ∂L/∂param*`, returning the
/// updated network.
pub fn sgd_step(net: &Network, grads: &[LayerGradients], lr: f64) -> Result<Network> {
    let mut next = net.clone();
    next.apply_gradients(grads, lr)?;
    Ok(next)
}

/// Result of comparing analytic and finite-difference conjugate gradients.
#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub parameters: usize,
    pub step: f64,
    pub max_abs_error: f64,
    pub max_rel_error: f64,
    /// Human-readable location of the parameter with the largest relative
    /// error, e.g. `layer 1 weight (0,2)`.
    pub worst: String,
}

/// Denominator floor for relative errors: below this gradient norm the
/// comparison is effectively absolute.
pub const REL_ERROR_FLOOR: f64 = 1e-3;

/// Relative error between two gradient values, `|a − n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: Quaternion, numeric: Quaternion) -> f64 {
    let scale = analytic.norm().max(numeric.norm()).max(REL_ERROR_FLOOR);
    (analytic - numeric).norm() / scale
}

/// Finite-difference conjugate gradient of the sample loss with respect to
/// one parameter: the four central differences recombined as
/// `¼ (d0 + d1 i + d2 j + d3 k)`.
pub fn numeric_conjugate_gradient(
    net: &Network,
    input: &QVector,
    target: &QVector,
    param_index: usize,
    h: f64,
) -> Result<Quaternion> {
    let eval = |n: &Network| -> Result<f64> {
        let l = loss(&n.predict(input)?, target)?;
        if !l.is_finite() {
            return Err(Error::NonFinite(format!("loss {l} during gradient check")));
        }
        Ok(l)
    };
    let perturbed = |c: usize, delta: f64| {
        let mut n = net.clone();
        let mut idx = 0;
        n.for_each_parameter_mut(|_, p| {
            if idx == param_index {
                *p = p.with_component(c, p.component(c) + delta);
            }
            idx += 1;
        });
        n
    };
    let mut partials = [0.0; 4];
    for (c, slot) in partials.iter_mut().enumerate() {
        *slot = (eval(&perturbed(c, h))? - eval(&perturbed(c, -h))?) / (2.0 * h);
    }
    let g = crate::ghr::ComponentGradient::from_real(partials);
    Ok(crate::ghr::hr_conjugate_derivative(
        &g,
        crate::ghr::HrVariant::Plain,
    ))
}

/// Compares the analytic backward pass against central differences for
/// every parameter of `net` on one sample.
pub fn gradient_check(
    net: &Network,
    input: &QVector,
    target: &QVector,
    h: f64,
) -> Result<CheckReport> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "gradient-check step must be > 0, got {h}"
        )));
    }
    let (l, analytic) = sample_gradients(net, input, target)?;
    if !l.is_finite() {
        return Err(Error::NonFinite(format!("loss {l} during gradient check")));
    }
    let mut labels = Vec::new();
    let mut values = Vec::new();
    for (li, (layer, g)) in net.layers().iter().zip(&analytic).enumerate() {
        for i in 0..layer.outputs() {
            for j in 0..layer.inputs() {
                labels.push(format!("layer {li} weight ({i},{j})"));
                values.push(g.d_weights[(i, j)]);
            }
        }
        for i in 0..layer.outputs() {
            labels.push(format!("layer {li} bias {i}"));
            values.push(g.d_bias[i]);
        }
    }
    let mut report = CheckReport {
        parameters: values.len(),
        step: h,
        max_abs_error: 0.0,
        max_rel_error: 0.0,
        worst: String::new(),
    };
    for (idx, (a, label)) in values.iter().zip(labels).enumerate() {
        let n = numeric_conjugate_gradient(net, input, target, idx, h)?;
        let abs = (*a - n).norm();
        let rel = relative_error(*a, n);
        report.max_abs_error = report.max_abs_error.max(abs);
        if rel >= report.max_rel_error {
            report.max_rel_error = rel;
            report.worst = label;
        }
    }
    Ok(report)
}

/// Conjugate gradients of `L = |d − (w a + b)|²` computed through the
/// quaternion product rule on `L = e* e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProductRuleGradient {
    pub d_weight: Quaternion,
    pub d_bias: Quaternion,
    /// Set when `e = 0`: the rotated direction `e*` is singular and the
    /// gradients are returned as their limit, zero.
    pub degenerate: bool,
}

/// Product-rule route for a single-term model `y = w a + b`:
///
/// `∂L/∂w* = e* (∂e/∂w*) + (∂e*/∂w^{e*}) e`, with `∂e/∂w* = ½ a*` and
/// `∂e*/∂w^{e*} = −a* e0 e⁻¹`; likewise for `b` with `½` and `−e0 e⁻¹`.
/// The bias does not affect the gradients' form, only `e`, so it is folded
/// into the target: pass `d − b` or use zero bias.
pub fn output_product_rule_gradient(
    w: Quaternion,
    a: Quaternion,
    d: Quaternion,
) -> ProductRuleGradient {
    let e = d - w * a;
    let Ok(e_inv) = e.inverse() else {
        return ProductRuleGradient {
            d_weight: Quaternion::ZERO,
            d_bias: Quaternion::ZERO,
            degenerate: true,
        };
    };
    let a_conj = a.conj();
    let de_dw = a_conj * 0.5;
    let de_conj_dw = -(a_conj * e.q0) * e_inv;
    let de_db = Quaternion::from_real(0.5);
    let de_conj_db = -(e_inv * e.q0);
    ProductRuleGradient {
        d_weight: e.conj() * de_dw + de_conj_dw * e,
        d_bias: e.conj() * de_db + de_conj_db * e,
        degenerate: false,
    }
}
