mod common;

use common::*;
use gcnmtr::linalg::{min_norm_step, DenseMatrix};
use gcnmtr::lm::{lm_step, update_scaling, ScalingDiagonal};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn undamped_square_step_is_the_linear_solve(seed in any::<u64>(), n in 1usize..20) {
        let mut r = rng(seed);
        let g = gaussian_matrix(&mut r, n, n);
        let jac = DenseMatrix::from_fn(n, n, |i, j| g[(i, j)] / (n as f64).sqrt() + if i == j { 2.0 } else { 0.0 });
        let f = gaussian_vec(&mut r, n);
        let d = ScalingDiagonal { d: gaussian_vec(&mut r, n).iter().map(|v| v.abs()).collect() };
        let s = lm_step(&jac, &f, &d, 0.0).unwrap();
        let (oracle, _) = min_norm_step(&jac, &f, None).unwrap();
        let diff: Vec<f64> = s.iter().zip(&oracle).map(|(a, b)| a - b).collect();
        prop_assert!(norm(&diff) <= 1e-10 * norm(&oracle));
    }

    #[test]
    fn damped_step_satisfies_normal_equations(seed in any::<u64>(), n in 1usize..20, m_frac in 0.0f64..1.5, log_lambda in -4.0f64..4.0) {
        let m = 1 + (n as f64 * m_frac) as usize;
        let mut r = rng(seed);
        let jac = gaussian_matrix(&mut r, m, n);
        let f = gaussian_vec(&mut r, m);
        let d = ScalingDiagonal { d: (0..n).map(|_| r.gen_range(0.5..2.0)).collect() };
        let lambda = 10f64.powf(log_lambda);
        let s = lm_step(&jac, &f, &d, lambda).unwrap();
        // (JᵀJ + λD²) s + Jᵀf
        let js = jac.matvec(&s);
        let jtjs = jac.matvec_transposed(&js);
        let jtf = jac.matvec_transposed(&f);
        let res: Vec<f64> = (0..n).map(|i| jtjs[i] + lambda * d.d[i] * d.d[i] * s[i] + jtf[i]).collect();
        prop_assert!(norm(&res) <= 1e-8 * norm(&jtf).max(f64::MIN_POSITIVE));
    }

    #[test]
    fn scaling_never_decreases(seed in any::<u64>(), n in 1usize..10, steps in 1usize..6) {
        let mut r = rng(seed);
        let mut d = ScalingDiagonal::zeros(n);
        for _ in 0..steps {
            let jac = gaussian_matrix(&mut r, 3, n);
            let next = update_scaling(&d, &jac).unwrap();
            for (a, b) in d.d.iter().zip(&next.d) {
                prop_assert!(b >= a);
            }
            d = next;
        }
    }
}

use rand::Rng;
