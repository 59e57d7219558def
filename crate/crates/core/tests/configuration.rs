use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use modcma::configuration::{
    enumerate_all, BaseSampler, ConfigurationVector, ModuleCatalog, RestartRegime, SearchSpace,
};

#[test]
fn space_size_and_indexing() {
    assert_eq!(ModuleCatalog::standard().space_size(), 4608);
    let all: Vec<_> = enumerate_all().collect();
    let distinct: HashSet<String> = all.iter().map(|c| c.encode()).collect();
    assert_eq!(distinct.len(), 4608);
    for (i, c) in all.iter().enumerate() {
        assert_eq!(c.index(), i);
        assert_eq!(ConfigurationVector::from_index(i), Some(*c));
    }
    assert_eq!(ConfigurationVector::from_index(4608), None);
}

#[test]
fn decoding_names_the_offending_position() {
    let err = ConfigurationVector::decode("0000000000X")
        .unwrap_err()
        .to_string();
    assert!(err.contains("11"), "{err}");
    assert!(ConfigurationVector::decode("00000000003").is_err());
    assert!(ConfigurationVector::decode("0000000000").is_err());
    let c = ConfigurationVector::decode("10000000021").unwrap();
    assert!(c.active_update());
    assert_eq!(c.base_sampler(), BaseSampler::Halton);
    assert_eq!(c.restart(), RestartRegime::Ipop);
}

#[test]
fn reduced_space_enumerates_and_mutates_inside() {
    let space = SearchSpace::with_free_genes(ConfigurationVector::DEFAULT, &[0, 1, 10]);
    assert_eq!(space.size(), 12);
    assert_eq!(space.enumerate().count(), 12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let c = space.random(&mut rng);
        assert!(space.contains(&c));
        assert!(space.contains(&space.mutate(&c, 0.5, &mut rng)));
    }
}
