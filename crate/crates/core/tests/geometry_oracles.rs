mod common;

use gauss_embed::geometry::{kl_spherical, w2_spherical, GaussianView};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::oracles;

#[test]
fn kl_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..20 {
        let d = rng.random_range(1..5);
        let a: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (sa, sb) = (rng.random_range(0.2..3.0), rng.random_range(0.2..3.0));
        let closed = kl_spherical(GaussianView::new(&a, sa), GaussianView::new(&b, sb)).unwrap();
        let numeric = oracles::kl_quadrature(&a, sa, &b, sb);
        assert!(
            (closed - numeric).abs() <= 1e-8 * closed.max(1.0),
            "{closed} vs {numeric}"
        );
    }
}

#[test]
fn one_dimensional_spherical_w2_matches_quantile_coupling() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..5 {
        let (m1, m2) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let (s1, s2) = (rng.random_range(0.1..2.0), rng.random_range(0.1..2.0));
        let closed =
            w2_spherical(GaussianView::new(&[m1], s1), GaussianView::new(&[m2], s2)).unwrap();
        let numeric = oracles::w2_quantile_1d(m1, s1, m2, s2, 100_000);
        assert!((closed - numeric).abs() / closed < 2e-3);
    }
}

#[test]
fn f32_and_f64_agree() {
    let a = [0.3f64, -1.2, 0.7];
    let b = [1.0f64, 0.4, -0.1];
    let a32: Vec<f32> = a.iter().map(|&x| x as f32).collect();
    let b32: Vec<f32> = b.iter().map(|&x| x as f32).collect();
    let w64 = w2_spherical(GaussianView::new(&a, 0.8), GaussianView::new(&b, 1.3)).unwrap();
    let w32 = w2_spherical(
        GaussianView::new(&a32, 0.8f32),
        GaussianView::new(&b32, 1.3f32),
    )
    .unwrap();
    assert!((w64 - w32 as f64).abs() < 1e-5);
}
