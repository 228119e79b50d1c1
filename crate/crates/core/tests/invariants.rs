use greenrec_core::chain1d::{free_fixed_point, green_1d};
use greenrec_core::chain1d::PotentialSeq;
use greenrec_core::halfplane::{mobius_step, poincare_dist};
use greenrec_core::looptree::{fft_symbol, inverse_fft_symbol, loop_spectra, loop_green_root};
use greenrec_core::oracle::{build_truncation, eig_spectrum, green_from_eigen, solve_green, ModelDescriptor};
use greenrec_core::stream::Stream;
use greenrec_core::tree::{population_green, tree_fixed_point, PoolInit, PopulationConfig, TreeModel};
use greenrec_core::{HPoint, SpectralParam};
use num_complex::Complex64;
use proptest::prelude::*;

fn hpoint() -> impl Strategy<Value = HPoint> {
    (-5.0..5.0f64, -6.0..2.0f64).prop_map(|(re, e)| HPoint::new(re, 10f64.powf(e)).unwrap())
}

fn spectral() -> impl Strategy<Value = SpectralParam> {
    (-4.0..4.0f64, prop_oneof![Just(0.0), 1e-4..2.0f64]).prop_map(|(re, im)| SpectralParam::new(re, im).unwrap())
}

proptest! {
    #[test]
    fn mobius_step_never_expands(z1 in hpoint(), z2 in hpoint(), q in -3.0..3.0f64, lam in spectral()) {
        let after = poincare_dist(mobius_step(z1, q, lam).unwrap(), mobius_step(z2, q, lam).unwrap());
        prop_assert!(after <= poincare_dist(z1, z2) * (1.0 + 1e-10) + 1e-12);
    }

    #[test]
    fn mobius_step_stays_in_the_half_plane(z in hpoint(), q in -3.0..3.0f64, lam in spectral()) {
        prop_assert!(mobius_step(z, q, lam).unwrap().im() > 0.0);
    }

    #[test]
    fn fft_round_trip(bits in 0usize..9, seed in any::<u64>()) {
        let n = 1usize << bits;
        let mut s = Stream::at(seed, 1, 0, 1);
        let row: Vec<Complex64> = (0..n).map(|_| Complex64::new(s.unit() - 0.5, s.unit() - 0.5)).collect();
        let back = inverse_fft_symbol(&fft_symbol(&row).unwrap()).unwrap();
        for (a, b) in row.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn loop_spectra_are_mirror_symmetric(gamma in 0.0..2.0f64, re in -4.0..4.0f64, im in 1e-3..1.0f64, levels in 1usize..7) {
        let lam = SpectralParam::new(re, im).unwrap();
        for s in loop_spectra(gamma, lam, levels, HPoint::I).unwrap() {
            let n = s.len();
            for k in 0..n {
                prop_assert!(s.f[k].im > 0.0);
                prop_assert!((s.f[k] - s.f[(n - k) % n]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn elimination_lands_in_the_half_plane(depth in 1usize..8, k in 2usize..4, re in -4.0..4.0f64, im in 1e-4..1.0f64, seed in any::<u64>()) {
        let model = ModelDescriptor::KaryTree { k, disorder: None };
        let h = build_truncation(&model, depth.min(if k == 3 { 6 } else { 8 }), seed).unwrap();
        for v in [0, h.dim() - 1] {
            prop_assert!(solve_green(&h, Complex64::new(re, im), v).unwrap().im > 0.0);
        }
    }

    #[test]
    fn tree_fixed_point_solves_its_equation(k in 1usize..6, re in -4.0..4.0f64, im in 1e-4..2.0f64) {
        let lam = SpectralParam::new(re, im).unwrap();
        let z = tree_fixed_point(k, lam).unwrap().z();
        let residual = z + 1.0 / (k as f64 * z + lam.value());
        prop_assert!(residual.norm() < 1e-10 * (1.0 + z.norm()));
    }
}

#[test]
fn bipartite_spectra_are_symmetric() {
    for model in [
        ModelDescriptor::Chain { potential: None },
        ModelDescriptor::KaryTree { k: 2, disorder: None },
        ModelDescriptor::BoxNd { dim: 2, disorder: None },
    ] {
        let h = build_truncation(&model, 6, 0).unwrap();
        let ev = eig_spectrum(&h).unwrap();
        let n = ev.len();
        for i in 0..n {
            assert!((ev[i] + ev[n - 1 - i]).abs() < 1e-10, "{model:?}");
        }
    }
}

#[test]
fn long_chain_truncation_reaches_the_half_line_value() {
    let lam = SpectralParam::new(0.5, 0.05).unwrap();
    let h = build_truncation(&ModelDescriptor::Chain { potential: None }, 4000, 0).unwrap();
    let g = solve_green(&h, lam.value(), 0).unwrap();
    assert!((g - free_fixed_point(lam).unwrap().z()).norm() < 1e-6);
    let iterated = green_1d(&PotentialSeq::Zero, lam, 4000, HPoint::I).unwrap();
    assert!((g - iterated.z()).norm() < 1e-10);
}

#[test]
fn elimination_matches_the_spectral_sum() {
    let model = ModelDescriptor::BoxNd { dim: 2, disorder: None };
    let h = build_truncation(&model, 7, 0).unwrap();
    for (re, im) in [(0.3, 0.02), (-1.7, 0.5), (2.2, -0.1)] {
        let lam = Complex64::new(re, im);
        for v in [0, 10, h.dim() - 1] {
            let a = solve_green(&h, lam, v).unwrap();
            let b = green_from_eigen(&h, lam, v).unwrap();
            assert!((a - b).norm() < 1e-10);
        }
    }
}

#[test]
fn population_of_a_free_tree_is_degenerate() {
    let lam = SpectralParam::new(-0.4, 0.05).unwrap();
    let cfg = PopulationConfig { pool_size: 500, generations: 600, init: PoolInit::default(), monitor_p: None };
    let pool = population_green(&TreeModel::free(3), lam, &cfg, 11).unwrap();
    let z = tree_fixed_point(3, lam).unwrap().z();
    // every sample follows the same orbit
    assert!(pool.samples.iter().all(|s| s.z() == pool.samples[0].z()));
    assert!((pool.samples[0].z() - z).norm() < 1e-6);
}

#[test]
fn loop_root_is_continuous_in_gamma() {
    let lam = SpectralParam::new(0.1, 0.05).unwrap();
    let a = loop_green_root(0.5, lam, 2000).unwrap();
    let b = loop_green_root(0.5 + 1e-7, lam, 2000).unwrap();
    assert!((a.z() - b.z()).norm() < 1e-5);
}
