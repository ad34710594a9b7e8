use std::collections::HashSet;

use preflearn::dataset::{extract_pairs, Order, OrderKind, OrderSet};
use proptest::prelude::*;

fn ranked(n: usize) -> OrderSet {
    OrderSet {
        orders: vec![Order {
            group: 0,
            kind: OrderKind::RankedList((0..n).map(|i| format!("o{i}")).collect()),
        }],
        higher_is_better: true,
    }
}

pub fn ranked_list_properties() -> Result<(), String> {
    super::run(100, (2usize..30).prop_flat_map(|n| Just(n).prop_perturb(|n, _| n)), |n| {
        let pairs = extract_pairs(&ranked(n));
        prop_assert_eq!(pairs.len(), n * (n - 1) / 2);
        let set: HashSet<(&str, &str)> = pairs.pairs.iter().map(|p| (p.preferred.as_str(), p.other.as_str())).collect();
        prop_assert_eq!(set.len(), pairs.len());
        for &(a, b) in &set {
            prop_assert!(!set.contains(&(b, a)), "both {} > {} and the reverse", a, b);
            prop_assert!(a != b);
        }
        // Transitivity: a > b and b > c imply a > c.
        for &(a, b) in &set {
            for &(b2, c) in &set {
                if b == b2 {
                    prop_assert!(set.contains(&(a, c)));
                }
            }
        }
        Ok(())
    })
}

pub fn rating_direction() -> Result<(), String> {
    let labels = proptest::collection::vec(0i32..5, 2..15);
    super::run(100, labels, |labels| {
        let ratings: Vec<(String, f64)> = labels.iter().enumerate().map(|(i, &l)| (format!("o{i}"), l as f64)).collect();
        let mut set = OrderSet {
            orders: vec![Order {
                group: 3,
                kind: OrderKind::Ratings(ratings),
            }],
            higher_is_better: true,
        };
        let up = extract_pairs(&set);
        set.higher_is_better = false;
        let down = extract_pairs(&set);
        let unequal = (0..labels.len())
            .flat_map(|i| (i + 1..labels.len()).map(move |j| (i, j)))
            .filter(|&(i, j)| labels[i] != labels[j])
            .count();
        prop_assert_eq!(up.len(), unequal);
        prop_assert_eq!(down.len(), unequal);
        for (u, d) in up.pairs.iter().zip(&down.pairs) {
            prop_assert_eq!(&u.preferred, &d.other);
            prop_assert_eq!(&u.other, &d.preferred);
            let label = |id: &str| labels[id[1..].parse::<usize>().unwrap()];
            prop_assert!(label(&u.preferred) > label(&u.other));
            prop_assert_eq!(u.group, 3);
        }
        Ok(())
    })
}
