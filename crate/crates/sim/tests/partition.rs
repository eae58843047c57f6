use ema_sim::dataset::gaussian_blobs;
use ema_sim::{partition_indices, Dataset, PartitionSpec};
use proptest::prelude::*;

fn covers_exactly(parts: &[Vec<usize>], n: usize) -> bool {
    let mut all: Vec<usize> = parts.iter().flatten().copied().collect();
    all.sort_unstable();
    all == (0..n).collect::<Vec<_>>()
}

#[test]
fn iid_split_is_uniform() {
    let data = gaussian_blobs(4, 3, 2.0, 1000, 1);
    let parts = partition_indices(&data, PartitionSpec::Iid, 50, 7).unwrap();
    assert!(parts.iter().all(|p| p.len() == 20));
    assert!(covers_exactly(&parts, 1000));
    assert_eq!(parts, partition_indices(&data, PartitionSpec::Iid, 50, 7).unwrap());
    assert_ne!(parts, partition_indices(&data, PartitionSpec::Iid, 50, 8).unwrap());
}

#[test]
fn one_label_shard_per_client_sees_one_class() {
    let data = gaussian_blobs(2, 3, 2.0, 1000, 2);
    let parts = partition_indices(&data, PartitionSpec::LabelShard { shards_per_client: 1 }, 50, 3).unwrap();
    assert!(covers_exactly(&parts, 1000));
    for p in &parts {
        let first = data.label(p[0]);
        assert!(p.iter().all(|&i| data.label(i) == first));
    }
}

fn chi_square_to_global(data: &Dataset, parts: &[Vec<usize>]) -> f64 {
    let global: Vec<f64> = data
        .class_counts()
        .iter()
        .map(|&c| c as f64 / data.len() as f64)
        .collect();
    let per_client: Vec<f64> = parts
        .iter()
        .map(|p| {
            let mut counts = vec![0.0; data.n_classes()];
            for &i in p {
                counts[data.label(i)] += 1.0;
            }
            counts
                .iter()
                .zip(&global)
                .map(|(c, g)| (c / p.len() as f64 - g).powi(2) / g)
                .sum::<f64>()
        })
        .collect();
    per_client.iter().sum::<f64>() / per_client.len() as f64
}

#[test]
fn dirichlet_large_alpha_matches_global_proportions() {
    let data = gaussian_blobs(4, 3, 2.0, 20_000, 4);
    let parts = partition_indices(&data, PartitionSpec::Dirichlet { alpha: 1000.0 }, 10, 5).unwrap();
    assert!(covers_exactly(&parts, 20_000));
    let chi = chi_square_to_global(&data, &parts);
    assert!(chi < 0.05, "chi-square distance {chi}");
}

#[test]
fn dirichlet_small_alpha_is_skewed_but_nonempty() {
    let data = gaussian_blobs(4, 3, 2.0, 2000, 4);
    let parts = partition_indices(&data, PartitionSpec::Dirichlet { alpha: 0.05 }, 50, 5).unwrap();
    assert!(parts.iter().all(|p| !p.is_empty()));
    assert!(covers_exactly(&parts, 2000));
    assert!(chi_square_to_global(&data, &parts) > 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_client_gets_a_sample(
        samples in 5usize..300,
        clients in 1usize..40,
        kind in 0u8..3,
        seed in any::<u64>(),
    ) {
        prop_assume!(samples >= clients);
        let data = gaussian_blobs(3, 2, 1.0, samples, seed);
        let spec = match kind {
            0 => PartitionSpec::Iid,
            1 => PartitionSpec::LabelShard { shards_per_client: 2 },
            _ => PartitionSpec::Dirichlet { alpha: 0.3 },
        };
        let parts = partition_indices(&data, spec, clients, seed).unwrap();
        prop_assert_eq!(parts.len(), clients);
        prop_assert!(parts.iter().all(|p| !p.is_empty()));
        prop_assert!(covers_exactly(&parts, samples));
    }
}
