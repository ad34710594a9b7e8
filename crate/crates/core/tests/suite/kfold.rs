use std::collections::HashSet;

use preflearn::evaluation::kfold_split;
use proptest::prelude::*;

pub fn partitions() -> Result<(), String> {
    let strategy = (2usize..40, any::<u64>()).prop_flat_map(|(n, seed)| (Just(n), 2..=n, Just(seed)));
    super::run(200, strategy, |(n, k, seed)| {
        // Groups repeat, as they do when several orders share one group.
        let groups: Vec<i64> = (0..n as i64).flat_map(|g| [g * 7, g * 7]).collect();
        let folds = kfold_split(&groups, k, seed).unwrap();
        prop_assert_eq!(folds.len(), k);
        let mut seen = HashSet::new();
        for f in &folds {
            prop_assert!(!f.is_empty());
            for g in f {
                prop_assert!(seen.insert(*g), "group {} in two folds", g);
            }
        }
        prop_assert_eq!(seen, groups.iter().copied().collect::<HashSet<_>>());
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        prop_assert_eq!(kfold_split(&groups, k, seed).unwrap(), folds);
        Ok(())
    })
}
