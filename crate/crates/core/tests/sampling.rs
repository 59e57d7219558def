use modcma::configuration::BaseSampler;
use modcma::sampling::halton::radical_inverse;
use modcma::sampling::normal::{inverse_normal_cdf, normal_cdf};
use modcma::sampling::{quasi_uniform, Sampler, SamplerSpec};

fn spec(base: BaseSampler, mirrored: bool, orthogonal: bool) -> SamplerSpec {
    SamplerSpec {
        base,
        mirrored,
        orthogonal,
        dimension: 4,
        seed: 7,
    }
}

#[test]
fn radical_inverse_matches_hand_values() {
    let b2: Vec<f64> = (0..4).map(|i| radical_inverse(i, 2)).collect();
    assert_eq!(b2, vec![0.0, 0.5, 0.25, 0.75]);
    assert!((radical_inverse(4, 3) - 4.0 / 9.0).abs() < 1e-15);
    assert_eq!(
        quasi_uniform(BaseSampler::Halton, 3, 0).unwrap(),
        vec![0.0; 3]
    );
}

#[test]
fn normal_quantiles() {
    // reference values from a high-precision evaluation
    assert!((inverse_normal_cdf(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-9);
    let got = normal_cdf(1.0);
    assert!((got - 0.841_344_746_068_543).abs() < 1e-12, "{got:e}");
    assert_eq!(inverse_normal_cdf(1.0), None);
}

#[test]
fn sobol_points_stay_inside_the_cube() {
    for i in 0..256 {
        let u = quasi_uniform(BaseSampler::Sobol, 5, i).unwrap();
        assert!(u.iter().all(|&v| v > 0.0 && v < 1.0));
    }
}

#[test]
fn mirrored_pairs_and_orthogonal_blocks() {
    let mut s = Sampler::new(spec(BaseSampler::Gaussian, true, false)).unwrap();
    let batch = s.next_batch(6).unwrap();
    for pair in batch.chunks(2) {
        assert!((&pair[0] + &pair[1]).norm() < 1e-12);
    }
    let mut s = Sampler::new(spec(BaseSampler::Sobol, false, true)).unwrap();
    let batch = s.next_batch(4).unwrap();
    for i in 0..4 {
        for j in i + 1..4 {
            assert!(batch[i].dot(&batch[j]).abs() < 1e-10);
        }
    }
}

#[test]
fn samplers_are_seeded() {
    let draw = |seed| {
        Sampler::new(SamplerSpec {
            seed,
            ..spec(BaseSampler::Gaussian, false, false)
        })
        .unwrap()
        .next_batch(3)
        .unwrap()
    };
    assert_eq!(draw(1), draw(1));
    assert_ne!(draw(1), draw(2));
}
