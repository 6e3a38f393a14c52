use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sorsketch::transforms::{coherence_of_matrix, fwht_inplace, OrthonormalTransform};

/// Normalized Sylvester matrix `H_n / sqrt(n)` built by the block recursion
/// `H_{2k} = [[H_k, H_k], [H_k, -H_k]]`.
fn sylvester(n: usize) -> Vec<Vec<f64>> {
    let mut h = vec![vec![1.0]];
    while h.len() < n {
        let k = h.len();
        let mut next = vec![vec![0.0; 2 * k]; 2 * k];
        for i in 0..k {
            for j in 0..k {
                next[i][j] = h[i][j];
                next[i][j + k] = h[i][j];
                next[i + k][j] = h[i][j];
                next[i + k][j + k] = -h[i][j];
            }
        }
        h = next;
    }
    let s = 1.0 / (n as f64).sqrt();
    h.into_iter().map(|row| row.into_iter().map(|v| v * s).collect()).collect()
}

fn random_vec(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()
}

#[test]
fn matches_dense_sylvester_at_n8() {
    let h = sylvester(8);
    let mut r = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let x = random_vec(&mut r, 8);
        let mut y = x.clone();
        fwht_inplace(&mut y).unwrap();
        for i in 0..8 {
            let dense: f64 = (0..8).map(|j| h[i][j] * x[j]).sum();
            assert!((dense - y[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn fast_and_materialized_agree_up_to_256() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for k in 0..=8 {
        let n = 1 << k;
        let t = OrthonormalTransform::walsh_hadamard(n).unwrap();
        let f = t.materialize().unwrap();
        let x = random_vec(&mut r, n);
        let fast = t.apply(&x).unwrap();
        let dense = &f * nalgebra::DVector::from_column_slice(&x);
        for i in 0..n {
            assert!((fast[i] - dense[i]).abs() < 1e-12);
        }
        let gram = f.transpose() * &f;
        assert!((gram - nalgebra::DMatrix::<f64>::identity(n, n)).abs().max() < 1e-10);
        assert!((coherence_of_matrix(&f) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn energy_preserved_up_to_2_16() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for k in 1..=16 {
        let n = 1usize << k;
        // 1000 vectors per size below 2^12, fewer above to bound runtime
        let count = if k <= 12 { 1000 } else { 50 };
        for _ in 0..count {
            let x = random_vec(&mut r, n);
            let mut y = x.clone();
            fwht_inplace(&mut y).unwrap();
            let nx: f64 = x.iter().map(|v| v * v).sum();
            let ny: f64 = y.iter().map(|v| v * v).sum();
            assert!((nx - ny).abs() <= 1e-10 * nx);
        }
    }
}

#[test]
fn permuted_identity_coherence_matches_materialized() {
    for n in [2, 3, 16, 100, 256] {
        let t = OrthonormalTransform::identity_permuted(n, n as u64).unwrap();
        let f = t.materialize().unwrap();
        assert!((coherence_of_matrix(&f) - (n as f64).sqrt()).abs() < 1e-12);
        assert_eq!(t.coherence(), (n as f64).sqrt());
    }
}

proptest! {
    #[test]
    fn involution(k in 0usize..11, seed in any::<u64>()) {
        let n = 1 << k;
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = random_vec(&mut r, n);
        let mut y = x.clone();
        fwht_inplace(&mut y).unwrap();
        fwht_inplace(&mut y).unwrap();
        for (a, b) in x.iter().zip(&y) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn linear(k in 1usize..9, a in -3.0f64..3.0, b in -3.0f64..3.0, seed in any::<u64>()) {
        let n = 1 << k;
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let x = random_vec(&mut r, n);
        let y = random_vec(&mut r, n);
        let t = OrthonormalTransform::walsh_hadamard(n).unwrap();
        let combo: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = t.apply(&combo).unwrap();
        let (tx, ty) = (t.apply(&x).unwrap(), t.apply(&y).unwrap());
        for i in 0..n {
            prop_assert!((lhs[i] - (a * tx[i] + b * ty[i])).abs() < 1e-10);
        }
    }
}
