use proptest::prelude::*;
use sqg_core::diagnostics::LogValue;
use sqg_core::grid::TorusGrid;
use sqg_core::random::band_limited;
use sqg_core::solver::{Force, SolverConfig};
use sqg_core::tangent::{
    dimension_bound, h1_gram_schmidt, lattice_eigenvalues, linearized_rhs, trace_pn_a, volume_and_trace_run,
    DimensionCount, TangentEnsemble, TangentOptions,
};
use sqg_core::{Phase, SpectralField};

fn exact(count: DimensionCount) -> u64 {
    match count {
        DimensionCount::Exact(n) => n,
        DimensionCount::Astronomical(v) => panic!("astronomical count {v}"),
    }
}

/// `H¹`-normalized cos/sin modes in the order of increasing `|k|`.
fn lattice_frame(g: TorusGrid, count: usize) -> Vec<SpectralField> {
    let mut ks: Vec<[i64; 2]> = Vec::new();
    for a in -3i64..=3 {
        for b in 0i64..=3 {
            if b > 0 || a > 0 {
                ks.push([a, b]);
            }
        }
    }
    ks.sort_by_key(|k| k[0] * k[0] + k[1] * k[1]);
    ks.iter()
        .flat_map(|&k| [Phase::Cos, Phase::Sin].map(|p| SpectralField::single_mode(g, k, 1.0, p).unwrap()))
        .map(|f| {
            let n = f.inner_h1(&f).sqrt();
            f.scale(1.0 / n)
        })
        .take(count)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn linearization_is_linear(seeds in prop::array::uniform3(any::<u64>()), a in -3.0f64..3.0, b in -3.0f64..3.0, kappa in 0.1f64..2.0) {
        let g = TorusGrid::square(16).unwrap();
        let theta = band_limited(g, 3, 1.0, seeds[0]).unwrap();
        let xi = band_limited(g, 3, 1.0, seeds[1]).unwrap();
        let eta = band_limited(g, 2, 1.0, seeds[2]).unwrap();
        let lhs = linearized_rhs(&theta, &xi.scale(a).axpy(b, &eta), kappa).unwrap();
        let rhs = linearized_rhs(&theta, &xi, kappa).unwrap().scale(a)
            .axpy(b, &linearized_rhs(&theta, &eta, kappa).unwrap());
        prop_assert!((&lhs - &rhs).l2_norm() <= 1e-12 * rhs.l2_norm().max(1.0));
    }

    #[test]
    fn gram_schmidt_log_volume_scales(seed in any::<u64>(), scales in prop::collection::vec(0.1f64..10.0, 3)) {
        let g = TorusGrid::square(16).unwrap();
        let xis: Vec<SpectralField> = (0..3).map(|i| band_limited(g, 3, 1.0, seed.wrapping_add(i)).unwrap()).collect();
        let scaled: Vec<SpectralField> = xis.iter().zip(&scales).map(|(x, s)| x.scale(*s)).collect();
        let (_, base) = h1_gram_schmidt(&xis).unwrap();
        let (frame, grown) = h1_gram_schmidt(&scaled).unwrap();
        let expect: f64 = scales.iter().map(|s| s.ln()).sum();
        prop_assert!((grown - base - expect).abs() < 1e-10);
        for (i, p) in frame.iter().enumerate() {
            for (j, q) in frame.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((p.inner_h1(q) - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bound_curve_is_positive_before_the_count_and_not_after(
        kappa in 0.3f64..3.0,
        m_a in 0.5f64..4.0,
        c10 in 0.1f64..2.0,
        c11 in 0.5f64..3.0,
    ) {
        let b = dimension_bound(kappa, LogValue::new(m_a), c10, c11).unwrap();
        let crossing = b.ratio.value().powi(2);
        prop_assume!(crossing > 2.0 && crossing < 1e7);
        let n = exact(b.count) as f64;
        prop_assert!(b.curve(0.5 * crossing) > 0.0);
        prop_assert!(b.curve(n) <= 1e-9 * b.curve(0.5 * crossing));
        prop_assert!(b.curve(4.0 * crossing) < 0.0);
        if n > crossing * (1.0 + 1e-12) {
            prop_assert_eq!(b.negative_at_bound(), Some(true));
        }
        prop_assert!(b.dominates(n as usize) && !b.dominates(n as usize + 1));
    }

    #[test]
    fn doubling_the_radius_multiplies_the_count_by_sixteen(kappa in 0.5f64..2.0, m_a in 1.0f64..6.0) {
        let one = exact(dimension_bound(kappa, LogValue::new(m_a), 1.0, 2.0).unwrap().count);
        let two = exact(dimension_bound(kappa, LogValue::new(2.0 * m_a), 1.0, 2.0).unwrap().count);
        prop_assert!(two <= 16 * one && two + 16 > 16 * one, "{one} -> {two}");
    }
}

#[test]
fn zero_base_traces_are_minus_kappa_times_eigenvalue_sums() {
    let g = TorusGrid::square(16).unwrap();
    let kappa = 0.7;
    let frame = lattice_frame(g, 12);
    let eig = lattice_eigenvalues(12);
    for m in 1..=12 {
        let tr = trace_pn_a(&SpectralField::zeros(g), &frame[..m], kappa).unwrap();
        let expect = -kappa * eig[..m].iter().sum::<f64>();
        assert!((tr - expect).abs() < 1e-12, "m = {m}: {tr} vs {expect}");
    }
    let full = trace_pn_a(&SpectralField::zeros(g), &frame, kappa).unwrap();
    assert!((full + kappa * (4.0 + 4.0 * 2f64.sqrt() + 8.0)).abs() < 1e-12);
}

#[test]
fn unforced_run_from_rest_has_one_dimensional_growth_set() {
    let g = TorusGrid::square(16).unwrap();
    let cfg = SolverConfig {
        dt: 1e-2,
        t_end: 0.5,
        snapshot_interval: 0.25,
        ..SolverConfig::default()
    };
    let ens = TangentEnsemble::random(g, 4, 9, TangentOptions::default()).unwrap();
    let run = volume_and_trace_run(&SpectralField::zeros(g), ens, &cfg, &Force::zero(g)).unwrap();
    assert_eq!(run.empirical_n, Some(1));
    assert!(run.averages.iter().all(|a| *a < 0.0));
}

#[test]
fn astronomical_counts_dominate_but_leave_the_sign_open() {
    let b = dimension_bound(1.0, LogValue::exp_of(40.0), 1.0, 1.0).unwrap();
    assert!(matches!(b.count, DimensionCount::Astronomical(_)));
    assert!(b.dominates(usize::MAX));
    assert_eq!(b.negative_at_bound(), None);
}
