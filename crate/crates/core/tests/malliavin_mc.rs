use edgeworth_tv::malliavin::{ou_l, sample_state, sigma_tail, Accumulator};
use edgeworth_tv::moments::shipped;
use edgeworth_tv::seed::stream_rng;
use edgeworth_tv::splitting::{split, SplitRep};

fn reps() -> Vec<(String, SplitRep)> {
    shipped()
        .into_iter()
        .map(|d| (d.label().to_string(), split(&d.standardize().unwrap()).unwrap()))
        .collect()
}

#[test]
fn ou_of_sn_is_centered_for_every_law() {
    for (k, (label, rep)) in reps().iter().enumerate() {
        let mut acc = Accumulator::default();
        let mut rng = stream_rng(21, k as u64);
        for _ in 0..100_000 {
            acc.push(ou_l(&sample_state(rep, 8, &mut rng).unwrap())[0]);
        }
        assert!(acc.mean().abs() < 4.0 * acc.std_error(), "{label}: {} ± {}", acc.mean(), acc.std_error());
    }
}

#[test]
fn ou_norms_do_not_grow_with_n() {
    let (_, rep) = reps().swap_remove(1);
    for p in [2, 4] {
        let norms: Vec<f64> = [16, 64, 256]
            .iter()
            .map(|&n| {
                let mut rng = stream_rng(22, n as u64);
                let m = 20_000;
                let s: f64 = (0..m).map(|_| ou_l(&sample_state(&rep, n, &mut rng).unwrap())[0].abs().powi(p)).sum();
                (s / m as f64).powf(1.0 / p as f64)
            })
            .collect();
        // the excess kurtosis term decays like 1/n, so higher p may shrink
        assert!(norms.windows(2).all(|w| w[1] < 1.1 * w[0]), "p={p}: {norms:?}");
    }
}

#[test]
fn sigma_tail_respects_exact_value_and_bound() {
    for (label, rep) in reps() {
        for n in [10, 20, 40, 80, 160] {
            let st = sigma_tail(&rep, n, 200_000, 23 + n as u64);
            assert!(st.estimate <= st.exact_binomial + 4.0 * st.std_error, "{label} n={n}: {st:?}");
            assert!(st.exact_binomial <= st.exp_bound * (1.0 + 1e-12), "{label} n={n}: {st:?}");
        }
    }
}
