//! Teacher networks and the synthetic datasets they label.
//!
//! Dataset file layout:
//!
//! ```text
//! qds v1 n=<count> in=<n_in> out=<n_out> seed=<seed>
//! <4*n_in input components> <4*n_out target components>
//! ...
//! ```
//!
//! one record per line, space separated, 17 significant digits.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::{Activation, DenseLayer, Network};
use crate::quat::{QMatrix, QVector, Quaternion};
use crate::rng::{seeded, uniform_quaternion, unit_quaternion};
use crate::textfmt::{header_usize, parse_error, parse_real, push_real};

/// Full-scale training set size.
pub const TRAIN_SAMPLES: usize = 40_000;
/// Full-scale validation set size.
pub const VAL_SAMPLES: usize = 10_000;

/// Builds a network whose weights are independent uniformly random unit
/// quaternions and whose biases are zero. Hidden layers use `activation`;
/// the output layer has none.
pub fn make_teacher(shape: &[usize], activation: Activation, seed: u64) -> Result<Network> {
    let mut net = Network::zeros(shape, activation)?;
    let mut rng = seeded(seed);
    let layers: Vec<DenseLayer> = net
        .layers()
        .iter()
        .map(|l| DenseLayer {
            weights: QMatrix::from_fn(l.outputs(), l.inputs(), |_, _| unit_quaternion(&mut rng)),
            bias: QVector::zeros(l.outputs()),
            activation: l.activation,
        })
        .collect();
    net = Network::new(layers)?;
    Ok(net)
}

/// Like [`make_teacher`] but with biases drawn uniformly from `[-0.5, 0.5]`,
/// so that every parameter takes part in a gradient check.
pub fn make_random_network(shape: &[usize], activation: Activation, seed: u64) -> Result<Network> {
    let mut net = make_teacher(shape, activation, seed)?;
    let mut rng = seeded(seed ^ 0x9e37_79b9_7f4a_7c15);
    let layers: Vec<DenseLayer> = net
        .layers()
        .iter()
        .map(|l| DenseLayer {
            bias: QVector::new(
                (0..l.outputs())
                    .map(|_| uniform_quaternion(&mut rng, -0.5, 0.5))
                    .collect(),
            ),
            ..l.clone()
        })
        .collect();
    net = Network::new(layers)?;
    Ok(net)
}

/// One input/target pair with components uniform on `[-1, 1]`.
pub fn random_sample(n_in: usize, n_out: usize, seed: u64) -> (QVector, QVector) {
    let mut rng = seeded(seed);
    let mut draw = |n: usize| {
        QVector::new(
            (0..n)
                .map(|_| uniform_quaternion(&mut rng, -1.0, 1.0))
                .collect(),
        )
    };
    let x = draw(n_in);
    (x, draw(n_out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<QVector>,
    pub targets: Vec<QVector>,
    pub n_in: usize,
    pub n_out: usize,
    pub seed: u64,
}

impl Dataset {
    /// Checks counts and per-sample dimensions.
    pub fn new(
        inputs: Vec<QVector>,
        targets: Vec<QVector>,
        n_in: usize,
        n_out: usize,
        seed: u64,
    ) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::dims(
                "Dataset sample count",
                inputs.len(),
                targets.len(),
            ));
        }
        if let Some(x) = inputs.iter().find(|x| x.len() != n_in) {
            return Err(Error::dims("Dataset input width", n_in, x.len()));
        }
        if let Some(d) = targets.iter().find(|d| d.len() != n_out) {
            return Err(Error::dims("Dataset target width", n_out, d.len()));
        }
        Ok(Self {
            inputs,
            targets,
            n_in,
            n_out,
            seed,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn sample(&self, i: usize) -> (&QVector, &QVector) {
        (&self.inputs[i], &self.targets[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&QVector, &QVector)> {
        self.inputs.iter().zip(self.targets.iter())
    }
}

/// Draws `n` inputs with every component uniform on `[-1, 1]` and labels
/// them with `teacher`.
pub fn gen_dataset(teacher: &Network, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::InvalidConfig("dataset size must be positive".into()));
    }
    let mut rng = seeded(seed);
    let n_in = teacher.input_dim();
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    for _ in 0..n {
        let x = QVector::new(
            (0..n_in)
                .map(|_| uniform_quaternion(&mut rng, -1.0, 1.0))
                .collect(),
        );
        targets.push(teacher.predict(&x)?);
        inputs.push(x);
    }
    Dataset::new(inputs, targets, n_in, teacher.output_dim(), seed)
}

pub fn dataset_to_text(ds: &Dataset) -> String {
    let mut out = String::with_capacity(ds.len() * (ds.n_in + ds.n_out) * 4 * 24 + 64);
    let _ = writeln!(
        out,
        "qds v1 n={} in={} out={} seed={}",
        ds.len(),
        ds.n_in,
        ds.n_out,
        ds.seed
    );
    for (x, d) in ds.iter() {
        let mut first = true;
        for q in x.iter().chain(d.iter()) {
            for c in q.to_array() {
                if !first {
                    out.push(' ');
                }
                first = false;
                push_real(&mut out, c);
            }
        }
        out.push('\n');
    }
    out
}

pub fn dataset_from_text(text: &str, path: &Path) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(n, l)| (n + 1, l));
    let (hl, header) = lines
        .next()
        .ok_or_else(|| parse_error(path, 1, "empty dataset file"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 2 || tokens[0] != "qds" || tokens[1] != "v1" {
        return Err(parse_error(
            path,
            hl,
            "expected header 'qds v1 n=.. in=.. out=.. seed=..'",
        ));
    }
    let n = header_usize(path, hl, &tokens, "n")?;
    let n_in = header_usize(path, hl, &tokens, "in")?;
    let n_out = header_usize(path, hl, &tokens, "out")?;
    let seed_tok = crate::textfmt::header_field(path, hl, &tokens, "seed")?;
    let seed: u64 = seed_tok.parse().map_err(|_| {
        parse_error(
            path,
            hl,
            format!("field 'seed' is not an integer: '{seed_tok}'"),
        )
    })?;
    if n_in == 0 || n_out == 0 {
        return Err(parse_error(
            path,
            hl,
            "input and output widths must be positive",
        ));
    }

    let width = 4 * (n_in + n_out);
    let mut inputs = Vec::with_capacity(n);
    let mut targets = Vec::with_capacity(n);
    let mut last = hl;
    for (ln, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        last = ln;
        let record = inputs.len();
        let vals = line
            .split_whitespace()
            .map(|t| parse_real(path, ln, t))
            .collect::<Result<Vec<f64>>>()?;
        if vals.len() != width {
            return Err(parse_error(
                path,
                ln,
                format!(
                    "record {record}: expected {width} components, found {}",
                    vals.len()
                ),
            ));
        }
        let quats: Vec<Quaternion> = vals
            .chunks_exact(4)
            .map(|c| Quaternion::new(c[0], c[1], c[2], c[3]))
            .collect();
        inputs.push(QVector::new(quats[..n_in].to_vec()));
        targets.push(QVector::new(quats[n_in..].to_vec()));
    }
    if inputs.len() != n {
        return Err(parse_error(
            path,
            last,
            format!(
                "header declares {n} records but the file holds {}",
                inputs.len()
            ),
        ));
    }
    Dataset::new(inputs, targets, n_in, n_out, seed)
}

pub fn save_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f =
        std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    f.write_all(dataset_to_text(ds).as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    dataset_from_text(&text, path)
}
