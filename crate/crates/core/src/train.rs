//! Teacher-student training loop and its per-epoch metrics.
//!
//! Each epoch shuffles the training set with Fisher–Yates under the seed
//! `seed_shuffle + epoch`, then takes one SGD step per mini-batch using the
//! mean gradient over the batch (the last batch may be smaller). Losses in
//! the metrics are mean per-sample losses.
//!
//! The weight difference compares student and teacher positionally, same
//! layer and same index. With split odd activations a hidden unit can be
//! moved and left-multiplied by any of `±1, ±i, ±j, ±k` without changing the
//! network's function, and a student trained from a random start usually
//! lands on such a relabelled copy of the teacher. [`align_to_teacher`]
//! undoes the relabelling so the two can be compared directly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use serde::Serialize;

use crate::data::{gen_dataset, make_teacher, save_dataset, Dataset, TRAIN_SAMPLES, VAL_SAMPLES};
use crate::error::{Error, Result};
use crate::model_io::save_network;
use crate::nn::{batch_gradients, loss, Activation, DenseLayer, Network};
use crate::quat::Quaternion;
use crate::rng::seeded;

pub const CSV_HEADER: &str = "epoch,train_loss,val_loss,wdiff_mean,wdiff_min,wdiff_max";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    pub shape: Vec<usize>,
    pub activation: Activation,
    pub seed_teacher: u64,
    pub seed_student: u64,
    /// Training data uses this seed, validation data `seed_data + 1`.
    pub seed_data: u64,
    pub seed_shuffle: u64,
    pub train_size: usize,
    pub val_size: usize,
    pub out_dir: PathBuf,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 250,
            lr: 0.1,
            batch_size: 32,
            shape: vec![3, 3, 2, 2],
            activation: Activation::Tanhshrink,
            seed_teacher: 1,
            seed_student: 2,
            seed_data: 3,
            seed_shuffle: 4,
            train_size: TRAIN_SAMPLES,
            val_size: VAL_SAMPLES,
            out_dir: PathBuf::from("out"),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "lr must be a positive number, got {}",
                self.lr
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be at least 1".into()));
        }
        if self.train_size == 0 || self.val_size == 0 {
            return Err(Error::InvalidConfig(
                "dataset sizes must be positive".into(),
            ));
        }
        // Surfaces shape errors early.
        Network::zeros(&self.shape, self.activation)?;
        Ok(())
    }

    pub fn teacher(&self) -> Result<Network> {
        make_teacher(&self.shape, self.activation, self.seed_teacher)
    }

    /// Fresh student: same construction as a teacher, different seed.
    pub fn student(&self) -> Result<Network> {
        make_teacher(&self.shape, self.activation, self.seed_student)
    }
}

/// Statistics of `‖w_student − w_teacher‖` over every weight and bias.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightDiff {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

pub fn weight_diff(student: &Network, teacher: &Network) -> Result<WeightDiff> {
    if student.shape() != teacher.shape() {
        return Err(Error::InvalidConfig(format!(
            "student shape {:?} differs from teacher shape {:?}",
            student.shape(),
            teacher.shape()
        )));
    }
    let (mut sum, mut min, mut max, mut n) = (0.0, f64::INFINITY, 0.0f64, 0usize);
    for (s, t) in student.parameters().zip(teacher.parameters()) {
        let d = (*s - *t).norm();
        sum += d;
        min = min.min(d);
        max = max.max(d);
        n += 1;
    }
    Ok(WeightDiff {
        mean: sum / n as f64,
        min,
        max,
    })
}

/// Hidden widths above this are not searched by [`align_to_teacher`].
pub const MAX_ALIGN_WIDTH: usize = 8;

/// The units `±1, ±i, ±j, ±k`. Left multiplication by any of them permutes
/// and negates the four components, so it commutes with a split odd
/// activation.
pub fn signed_units() -> [Quaternion; 8] {
    let b = Quaternion::BASIS;
    [b[0], -b[0], b[1], -b[1], b[2], -b[2], b[3], -b[3]]
}

/// Relabels the hidden units of `student` to sit as close to `teacher` as
/// possible, layer by layer. Each hidden unit may be moved to another
/// position and left-multiplied by one of [`signed_units`], with the inverse
/// folded into the next layer's weights. The result computes the same
/// function as `student` because both supported activations are split and
/// odd.
pub fn align_to_teacher(student: &Network, teacher: &Network) -> Result<Network> {
    if student.shape() != teacher.shape() {
        return Err(Error::InvalidConfig(format!(
            "student shape {:?} differs from teacher shape {:?}",
            student.shape(),
            teacher.shape()
        )));
    }
    let units = signed_units();
    let mut layers: Vec<DenseLayer> = student.layers().to_vec();
    for l in 0..layers.len() - 1 {
        let (s, t) = (&layers[l], &teacher.layers()[l]);
        let m = s.outputs();
        if m > MAX_ALIGN_WIDTH {
            return Err(Error::InvalidConfig(format!(
                "hidden width {m} exceeds the alignment search limit {MAX_ALIGN_WIDTH}"
            )));
        }
        let unit_dist = |k: usize, i: usize, u: Quaternion| -> f64 {
            let w: f64 = (0..s.inputs())
                .map(|j| (u * s.weights[(i, j)] - t.weights[(k, j)]).norm_sqr())
                .sum();
            w + (u * s.bias[i] - t.bias[k]).norm_sqr()
        };
        // cost[k][i]: best (distance, unit) for student unit i standing in for teacher unit k.
        let cost: Vec<Vec<(f64, Quaternion)>> = (0..m)
            .map(|k| {
                (0..m)
                    .map(|i| {
                        units.iter().map(|&u| (unit_dist(k, i, u), u)).fold(
                            (f64::INFINITY, Quaternion::ONE),
                            |a, b| if b.0 < a.0 { b } else { a },
                        )
                    })
                    .collect()
            })
            .collect();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for_each_permutation(m, &mut |perm| {
            let c: f64 = perm.iter().enumerate().map(|(k, &i)| cost[k][i].0).sum();
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, perm.to_vec()));
            }
        });
        let perm = best.expect("at least one unit").1;
        let moves: Vec<(usize, Quaternion)> = perm
            .iter()
            .enumerate()
            .map(|(k, &i)| (i, cost[k][i].1))
            .collect();

        let old = layers[l].clone();
        let layer = &mut layers[l];
        for (k, &(i, u)) in moves.iter().enumerate() {
            for j in 0..old.inputs() {
                layer.weights[(k, j)] = u * old.weights[(i, j)];
            }
            layer.bias[k] = u * old.bias[i];
        }
        let old_next = layers[l + 1].clone();
        let next = &mut layers[l + 1];
        for r in 0..old_next.outputs() {
            for (k, &(i, u)) in moves.iter().enumerate() {
                next.weights[(r, k)] = old_next.weights[(r, i)] * u.conj();
            }
        }
    }
    Network::new(layers)
}

fn for_each_permutation(n: usize, f: &mut impl FnMut(&[usize])) {
    fn go(k: usize, items: &mut [usize], f: &mut impl FnMut(&[usize])) {
        if k == items.len() {
            f(items);
            return;
        }
        for i in k..items.len() {
            items.swap(k, i);
            go(k + 1, items, f);
            items.swap(k, i);
        }
    }
    let mut items: Vec<usize> = (0..n).collect();
    go(0, &mut items, f);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochMetrics {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub wdiff: Option<WeightDiff>,
}

impl EpochMetrics {
    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{:.16e},{:.16e}",
            self.epoch, self.train_loss, self.val_loss
        );
        match self.wdiff {
            Some(w) => {
                let _ = write!(row, ",{:.16e},{:.16e},{:.16e}", w.mean, w.min, w.max);
            }
            None => row.push_str(",,,"),
        }
        row
    }
}

pub fn metrics_to_csv(metrics: &[EpochMetrics]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for m in metrics {
        out.push_str(&m.csv_row());
        out.push('\n');
    }
    out
}

pub fn write_metrics_csv(metrics: &[EpochMetrics], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, metrics_to_csv(metrics)).map_err(|e| Error::io(path, e))
}

/// Mean per-sample loss of `net` over `ds`.
pub fn mean_loss(net: &Network, ds: &Dataset) -> Result<f64> {
    let mut sum = 0.0;
    for (x, d) in ds.iter() {
        sum += loss(&net.predict(x)?, d)?;
    }
    Ok(sum / ds.len() as f64)
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub student: Network,
    pub metrics: Vec<EpochMetrics>,
}

impl TrainOutcome {
    pub fn final_val_loss(&self) -> f64 {
        self.metrics.last().map_or(f64::NAN, |m| m.val_loss)
    }
}

fn check_dims(config: &TrainConfig, ds: &Dataset, which: &str) -> Result<()> {
    let (n_in, n_out) = (config.shape[0], config.shape[config.shape.len() - 1]);
    if ds.n_in != n_in || ds.n_out != n_out {
        return Err(Error::InvalidConfig(format!(
            "{which} dataset is {}→{} but the configured shape {:?} is {n_in}→{n_out}",
            ds.n_in, ds.n_out, config.shape
        )));
    }
    if ds.is_empty() {
        return Err(Error::InvalidConfig(format!("{which} dataset is empty")));
    }
    Ok(())
}

/// Trains `student` on `train`, evaluating on `val` after every epoch.
/// `on_epoch` sees each row as soon as it is computed.
pub fn train(
    config: &TrainConfig,
    mut student: Network,
    train: &Dataset,
    val: &Dataset,
    teacher: Option<&Network>,
    mut on_epoch: impl FnMut(&EpochMetrics),
) -> Result<TrainOutcome> {
    config.validate()?;
    if student.shape() != config.shape {
        return Err(Error::InvalidConfig(format!(
            "student shape {:?} differs from the configured shape {:?}",
            student.shape(),
            config.shape
        )));
    }
    check_dims(config, train, "training")?;
    check_dims(config, val, "validation")?;
    if let Some(t) = teacher {
        weight_diff(&student, t)?;
    }

    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut metrics = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let mut rng = seeded(config.seed_shuffle.wrapping_add(epoch as u64));
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for (b, idx) in order.chunks(config.batch_size).enumerate() {
            let (batch_loss, grads) =
                batch_gradients(&student, idx.iter().map(|&i| train.sample(i)))?;
            if !batch_loss.is_finite() {
                return Err(Error::NonFinite(format!(
                    "training loss is {batch_loss} at epoch {epoch}, batch {}",
                    b + 1
                )));
            }
            loss_sum += batch_loss * idx.len() as f64;
            student.apply_gradients(&grads, config.lr)?;
        }

        let val_loss = mean_loss(&student, val)?;
        if !val_loss.is_finite() {
            return Err(Error::NonFinite(format!(
                "validation loss is {val_loss} after epoch {epoch}"
            )));
        }
        let m = EpochMetrics {
            epoch,
            train_loss: loss_sum / train.len() as f64,
            val_loss,
            wdiff: teacher.map(|t| weight_diff(&student, t)).transpose()?,
        };
        on_epoch(&m);
        metrics.push(m);
    }
    Ok(TrainOutcome { student, metrics })
}

pub const TRAIN_FILE: &str = "train.qds";
pub const VAL_FILE: &str = "val.qds";
pub const TEACHER_FILE: &str = "teacher.qnn";
pub const STUDENT_FILE: &str = "student.qnn";
pub const METRICS_FILE: &str = "metrics.csv";

/// Teacher plus its training and validation sets, as the config describes.
pub fn generate(config: &TrainConfig) -> Result<(Network, Dataset, Dataset)> {
    config.validate()?;
    let teacher = config.teacher()?;
    let train = gen_dataset(&teacher, config.train_size, config.seed_data)?;
    let val = gen_dataset(&teacher, config.val_size, config.seed_data.wrapping_add(1))?;
    Ok((teacher, train, val))
}

/// Writes `train.qds`, `val.qds` and `teacher.qnn` into the output directory.
pub fn write_generated(config: &TrainConfig) -> Result<Vec<PathBuf>> {
    let (teacher, train, val) = generate(config)?;
    let dir = &config.out_dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = [
        dir.join(TRAIN_FILE),
        dir.join(VAL_FILE),
        dir.join(TEACHER_FILE),
    ];
    save_dataset(&train, &paths[0])?;
    save_dataset(&val, &paths[1])?;
    save_network(&teacher, &paths[2])?;
    Ok(paths.to_vec())
}
