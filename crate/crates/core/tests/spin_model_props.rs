use abtunnel::eigen::symmetric_eigen;
use abtunnel::spin_model::{build_hamiltonian, diagonalize, spectrum, BandedSymmetricMatrix};
use abtunnel::{Spin, SpinSystemParams};
use approx::assert_relative_eq;
use proptest::prelude::*;

fn system() -> impl Strategy<Value = SpinSystemParams> {
    (1u32..=24)
        .prop_flat_map(|two_s| (2u32..=two_s.max(2), Just(two_s), 1e-4f64..1.0, 0.0f64..3.0))
        .prop_filter("N <= 2S", |(n, two_s, _, _)| *n <= *two_s)
        .prop_map(|(n, two_s, lambda, h)| SpinSystemParams::new(n, Spin::from_twice(two_s as i64).unwrap(), lambda, h))
}

/// sqrt((S - m)(S + m + 1)) products written out in doubled quantum numbers.
fn ladder_oracle(two_s: u32, two_m: i64, n: u32) -> f64 {
    let ts = two_s as f64;
    (0..n)
        .map(|j| {
            let tm = (two_m + 2 * j as i64) as f64;
            (((ts - tm) / 2.0) * ((ts + tm) / 2.0 + 1.0)).sqrt()
        })
        .product()
}

/// Hamiltonian with the opposite field, built without the library.
fn reversed_field_matrix(p: &SpinSystemParams) -> BandedSymmetricMatrix {
    let two_s = p.spin.twice();
    let d = two_s as usize + 1;
    let s = p.s();
    let n = p.symmetry as usize;
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        let m = i as f64 - s;
        a[i * d + i] = m * m + p.field * s * m;
        if i + n < d {
            let c = -0.5 * p.lambda * ladder_oracle(two_s, 2 * i as i64 - two_s as i64, p.symmetry);
            a[i * d + i + n] = c;
            a[(i + n) * d + i] = c;
        }
    }
    BandedSymmetricMatrix::from_dense(two_s, p.symmetry, a)
}

/// Size of the spectrum; a backward-stable solver is accurate relative to this.
fn spectral_scale(e: &[f64]) -> f64 {
    e.iter().map(|x| x.abs()).fold(1.0, f64::max)
}

#[test]
fn odd_symmetry_splits_half_integer_levels() {
    let p = SpinSystemParams::new(3, Spin::from_twice(3).unwrap(), 0.01, 0.0);
    let e = spectrum(&p).unwrap().eigenvalues;
    // m = +-1/2 stay paired, the +-3/2 block splits by lambda * 3!
    assert_relative_eq!(e[1] - e[0], 0.0, epsilon = 1e-14);
    assert_relative_eq!(e[3] - e[2], 0.01 * 6.0, max_relative = 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hamiltonian_is_bitwise_symmetric(p in system()) {
        let h = build_hamiltonian(&p).unwrap();
        let d = h.dimension();
        for i in 0..d {
            for j in 0..d {
                prop_assert_eq!(h.entry(i, j).to_bits(), h.entry(j, i).to_bits());
            }
        }
    }

    #[test]
    fn field_reversal_leaves_spectrum_unchanged(p in system()) {
        let forward = spectrum(&p).unwrap().eigenvalues;
        let backward = diagonalize(&reversed_field_matrix(&p)).unwrap().eigenvalues;
        let scale = spectral_scale(&forward);
        for (a, b) in forward.iter().zip(&backward) {
            prop_assert!((a - b).abs() <= 1e-12 * scale, "{} vs {}", a, b);
        }
    }

    #[test]
    fn eigenvalue_sum_matches_trace(p in system()) {
        let s = p.s();
        let trace: f64 = (0..=p.spin.twice()).map(|i| {
            let m = i as f64 - s;
            m * m - p.field * s * m
        }).sum();
        let e = spectrum(&p).unwrap().eigenvalues;
        let sum: f64 = e.iter().sum();
        prop_assert!((sum - trace).abs() <= 1e-10 * spectral_scale(&e));
    }

    #[test]
    fn half_integer_spins_pair_at_zero_field(
        two_s in (1u32..=12).prop_map(|k| 2 * k + 1),
        n in (1u32..=3).prop_map(|k| 2 * k),
        lambda in 1e-3f64..1.0,
    ) {
        // odd powers of S+ break time reversal, so only even N pair up
        prop_assume!(n <= two_s);
        let p = SpinSystemParams::new(n, Spin::from_twice(two_s as i64).unwrap(), lambda, 0.0);
        let e = spectrum(&p).unwrap().eigenvalues;
        let scale = spectral_scale(&e);
        for pair in e.chunks_exact(2) {
            prop_assert!((pair[1] - pair[0]).abs() <= 1e-10 * scale);
        }
    }

    #[test]
    fn eigenvectors_have_small_residuals(p in system()) {
        let h = build_hamiltonian(&p).unwrap();
        let d = h.dimension();
        let eig = symmetric_eigen(h.as_slice(), d, true).unwrap();
        let v = eig.vectors.unwrap();
        let norm = h.as_slice().iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
        for (k, &lambda) in eig.values.iter().enumerate() {
            let col = &v[k * d..(k + 1) * d];
            for i in 0..d {
                let av: f64 = (0..d).map(|j| h.entry(i, j) * col[j]).sum();
                prop_assert!((av - lambda * col[i]).abs() <= 1e-12 * norm * d as f64);
            }
        }
    }
}

/// At tiny coupling the spectrum sits within the Weyl bound of the diagonal.
#[test]
fn weak_coupling_approaches_unperturbed_levels() {
    let lambda = 1e-8;
    for (n, two_s, h) in [(2, 20, 0.0), (2, 9, 0.4), (3, 10, 0.1), (4, 21, 0.25), (6, 12, 0.0)] {
        let p = SpinSystemParams::new(n, Spin::from_twice(two_s).unwrap(), lambda, h);
        let s = p.s();
        let mut unperturbed: Vec<f64> = (0..=two_s).map(|i| {
            let m = i as f64 - s;
            m * m - h * s * m
        }).collect();
        unperturbed.sort_by(f64::total_cmp);
        let max_ladder = (0..=two_s - n as i64).map(|i| ladder_oracle(two_s as u32, 2 * i - two_s, n)).fold(0.0, f64::max);
        let bound = lambda * max_ladder;
        let e = spectrum(&p).unwrap().eigenvalues;
        for (a, b) in e.iter().zip(&unperturbed) {
            assert!((a - b).abs() <= bound + 1e-12 * b.abs().max(1.0), "{a} vs {b} (bound {bound})");
        }
    }
}

#[test]
fn spin_one_block_by_hand() {
    let lambda = 0.37;
    let p = SpinSystemParams::new(2, Spin::from_twice(2).unwrap(), lambda, 0.0);
    let e = spectrum(&p).unwrap().eigenvalues;
    assert_relative_eq!(e[0], 0.0, epsilon = 1e-14);
    assert_relative_eq!(e[1], 1.0 - lambda, epsilon = 1e-14);
    assert_relative_eq!(e[2], 1.0 + lambda, epsilon = 1e-14);
}
