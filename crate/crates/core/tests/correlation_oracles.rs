use proptest::prelude::*;
use qpp_core::correlate::{self, kendall_counts, PairedSample};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// O(n²) pair enumeration.
fn brute_tau_b(x: &[f64], y: &[f64]) -> (u64, u64, u64, u64, f64) {
    let (mut c, mut d, mut tx, mut ty) = (0u64, 0u64, 0u64, 0u64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tx += 1;
            }
            if dy == 0.0 {
                ty += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                if (dx > 0.0) == (dy > 0.0) {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    let n0 = (x.len() * (x.len() - 1) / 2) as u64;
    let tau = (c as f64 - d as f64) / (((n0 - tx) as f64) * ((n0 - ty) as f64)).sqrt();
    (c, d, tx, ty, tau)
}

fn vector(rng: &mut ChaCha8Rng, n: usize, levels: Option<u32>) -> Vec<f64> {
    (0..n)
        .map(|_| match levels {
            Some(l) => rng.random_range(0..l) as f64,
            None => rng.random::<f64>(),
        })
        .collect()
}

#[test]
fn kendall_matches_pair_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    for case in 0..500 {
        let n = rng.random_range(3..=200);
        // half the cases draw from few levels so ties are common
        let levels = if case % 2 == 0 { None } else { Some(rng.random_range(2..12)) };
        let x = vector(&mut rng, n, levels);
        let y = vector(&mut rng, n, levels);
        let (c, d, tx, ty, tau) = brute_tau_b(&x, &y);
        let counts = kendall_counts(&x, &y).unwrap();
        assert_eq!(
            (counts.concordant, counts.discordant, counts.tied_x, counts.tied_y),
            (c, d, tx, ty),
            "case {case}"
        );
        let n0 = (n * (n - 1) / 2) as u64;
        if tx == n0 || ty == n0 {
            assert!(counts.tau_b().is_err());
            continue;
        }
        assert_eq!(counts.tau_b().unwrap(), tau, "case {case}");
        checked += 1;
    }
    assert!(checked >= 490);
}

proptest! {
    #[test]
    fn spearman_is_pearson_on_average_ranks(
        pairs in prop::collection::vec((0u8..20, -1e3f64..1e3), 3..200),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let s = PairedSample::from_vectors(x.clone(), y.clone()).unwrap();
        let rx = correlate::average_ranks(&x);
        let ry = correlate::average_ranks(&y);
        match (correlate::spearman(&s), correlate::pearson_coefficient(&rx, &ry)) {
            (Ok(rho), Ok(r)) => prop_assert!((rho.coefficient - r).abs() <= 1e-12, "{} vs {r}", rho.coefficient),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "disagree: {a:?} vs {b:?}"),
        }
    }

    #[test]
    fn average_ranks_sum_and_order(v in prop::collection::vec(0u8..10, 1..100)) {
        let x: Vec<f64> = v.iter().map(|&a| a as f64).collect();
        let r = correlate::average_ranks(&x);
        let n = x.len() as f64;
        prop_assert_eq!(r.iter().sum::<f64>(), n * (n + 1.0) / 2.0);
        for i in 0..x.len() {
            for j in 0..x.len() {
                if x[i] < x[j] {
                    prop_assert!(r[i] < r[j]);
                } else if x[i] == x[j] {
                    prop_assert_eq!(r[i], r[j]);
                }
            }
        }
    }
}
