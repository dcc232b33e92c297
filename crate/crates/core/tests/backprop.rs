use proptest::prelude::*;

use quatprop::data::{gen_dataset, make_random_network, make_teacher, random_sample};
use quatprop::ghr::{
    finite_difference_gradient, ghr_chain_rule, ghr_derivative, involution_traces, GhrDirection,
    QuatFunction,
};
use quatprop::model_io::{network_from_text, network_to_text};
use quatprop::nn::{batch_gradients, gradient_check, loss, sgd_step, Activation};
use quatprop::quat::Quaternion;
use quatprop::train::{align_to_teacher, generate, mean_loss, weight_diff, TrainConfig};

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Identity), Just(Activation::Tanhshrink)]
}

fn shape() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..4, 2..5)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn analytic_gradients_match_finite_differences(shape in shape(), act in activation(), seed in any::<u64>()) {
        let net = make_random_network(&shape, act, seed).unwrap();
        let (x, d) = random_sample(net.input_dim(), net.output_dim(), seed.wrapping_add(1));
        let report = gradient_check(&net, &x, &d, 1e-5).unwrap();
        prop_assert!(report.max_rel_error < 1e-6, "{report:?}");
    }

    #[test]
    fn serialization_round_trips(shape in shape(), act in activation(), seed in any::<u64>()) {
        let net = make_random_network(&shape, act, seed).unwrap();
        let back = network_from_text(&network_to_text(&net), std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back, net);
    }

    #[test]
    fn alignment_never_changes_the_function(seed in any::<u64>()) {
        let teacher = make_teacher(&[3, 3, 2, 2], Activation::Tanhshrink, seed).unwrap();
        let student = make_random_network(&[3, 3, 2, 2], Activation::Tanhshrink, seed ^ 1).unwrap();
        let aligned = align_to_teacher(&student, &teacher).unwrap();
        let (x, _) = random_sample(3, 2, seed);
        let gap = loss(&student.predict(&x).unwrap(), &aligned.predict(&x).unwrap()).unwrap();
        prop_assert!(gap < 1e-26);
        prop_assert!(weight_diff(&aligned, &teacher).unwrap().mean <= weight_diff(&student, &teacher).unwrap().mean + 1e-12);
    }

    #[test]
    fn chain_rule_matches_direct_derivative(
        c in prop::array::uniform4(-1.0f64..1.0),
        w in prop::array::uniform4(-1.0f64..1.0),
    ) {
        let (at, w) = (Quaternion::from_array(c), Quaternion::from_array(w));
        // f(g(q)) with g(q) = w q and f = |·|², against finite differences of the composite.
        let inner = QuatFunction::left_mul(w);
        let composite = QuatFunction::new(move |q| {
            let z = w * q;
            z * z.conj()
        });
        let dir = GhrDirection::identity();
        let outer = QuatFunction::norm_squared().partials_at(inner.eval(at)).unwrap();
        let traces = involution_traces(&inner.partials_at(at).unwrap(), dir);
        let chained = ghr_chain_rule(&outer, traces);
        let direct = ghr_derivative(&finite_difference_gradient(&composite, at, 1e-6).unwrap(), dir);
        prop_assert!(chained.max_abs_diff(direct) < 1e-7, "{chained} vs {direct}");
    }
}

#[test]
fn small_sgd_steps_decrease_the_batch_loss() {
    let mut failures = 0;
    for trial in 0..50u64 {
        let net = make_random_network(&[3, 3, 2, 2], Activation::Tanhshrink, 1000 + trial).unwrap();
        let teacher = make_teacher(&[3, 3, 2, 2], Activation::Tanhshrink, 2000 + trial).unwrap();
        let ds = gen_dataset(&teacher, 16, 3000 + trial).unwrap();
        let (before, grads) = batch_gradients(&net, ds.iter()).unwrap();
        let next = sgd_step(&net, &grads, 1e-3).unwrap();
        let (after, _) = batch_gradients(&next, ds.iter()).unwrap();
        if after >= before {
            failures += 1;
        }
    }
    assert_eq!(failures, 0);
}

#[test]
fn dataset_inputs_are_centred() {
    let teacher = make_teacher(&[3, 3, 2, 2], Activation::Tanhshrink, 1).unwrap();
    let n = 4000;
    let ds = gen_dataset(&teacher, n, 2).unwrap();
    // Uniform on [-1, 1] has variance 1/3; allow three standard errors.
    let bound = 3.0 * (1.0f64 / 3.0).sqrt() / (n as f64).sqrt();
    for slot in 0..3 {
        for comp in 0..4 {
            let mean = ds
                .inputs
                .iter()
                .map(|x| x[slot].component(comp))
                .sum::<f64>()
                / n as f64;
            assert!(
                mean.abs() < bound,
                "slot {slot} component {comp}: mean {mean}"
            );
        }
    }
}

#[test]
fn short_training_run_reduces_validation_loss() {
    let c = TrainConfig {
        epochs: 5,
        train_size: 2000,
        val_size: 500,
        ..TrainConfig::default()
    };
    let (teacher, tr, va) = generate(&c).unwrap();
    let student = c.student().unwrap();
    let start = mean_loss(&student, &va).unwrap();
    let out = quatprop::train(&c, student, &tr, &va, Some(&teacher), |_| {}).unwrap();
    assert!(
        out.final_val_loss() < 0.5 * start,
        "{start} -> {}",
        out.final_val_loss()
    );
}
