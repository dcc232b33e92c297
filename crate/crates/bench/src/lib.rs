//! Fixtures shared by the benchmarks.

use quatprop::{gen_dataset, make_teacher, Activation, Dataset, Network};

/// A 3→3→2→2 tanhshrink student and `n` samples labelled by a teacher.
pub fn fixture(n: usize) -> (Network, Dataset) {
    let shape = [3, 3, 2, 2];
    let teacher = make_teacher(&shape, Activation::Tanhshrink, 1).expect("valid shape");
    let student = make_teacher(&shape, Activation::Tanhshrink, 2).expect("valid shape");
    let data = gen_dataset(&teacher, n, 3).expect("positive size");
    (student, data)
}
