use std::collections::{BTreeMap, HashMap};

use super::{InventoryMode, PrepInstance};

/// Within each primary sense, in corpus order, every fourth instance goes to dev.
pub fn split_train_dev(instances: &[PrepInstance]) -> (Vec<PrepInstance>, Vec<PrepInstance>) {
    let mut seen: HashMap<&str, usize> = HashMap::new();
    let mut train = Vec::new();
    let mut dev = Vec::new();
    for inst in instances {
        let n = seen.entry(inst.primary_sense().unwrap_or("")).or_insert(0);
        *n += 1;
        if n.is_multiple_of(4) {
            dev.push(inst.clone());
        } else {
            train.push(inst.clone());
        }
    }
    (train, dev)
}

/// `correct / total`, zero for an empty set.
pub fn accuracy_ratio(correct: usize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        correct as f64 / total as f64
    }
}

/// Most-frequent-sense baseline, globally or per preposition.
#[derive(Clone, Debug)]
pub struct MostFrequentSense {
    global: String,
    per_prep: BTreeMap<String, String>,
    mode: InventoryMode,
}

fn most_frequent(counts: &BTreeMap<&str, usize>) -> Option<String> {
    // BTreeMap iterates labels in order, so the first maximum is the
    // lexicographically smallest label.
    let mut best: Option<(&str, usize)> = None;
    for (label, n) in counts {
        if best.is_none_or(|(_, b)| *n > b) {
            best = Some((label, *n));
        }
    }
    best.map(|(l, _)| l.to_string())
}

impl MostFrequentSense {
    /// Counts primary senses of `train`; `None` when no instance has a gold sense.
    pub fn fit(train: &[PrepInstance], mode: InventoryMode) -> Option<Self> {
        let mut global: BTreeMap<&str, usize> = BTreeMap::new();
        let mut per: BTreeMap<String, BTreeMap<&str, usize>> = BTreeMap::new();
        for inst in train {
            if let Some(s) = inst.primary_sense() {
                *global.entry(s).or_default() += 1;
                *per.entry(inst.preposition()).or_default().entry(s).or_default() += 1;
            }
        }
        Some(Self {
            global: most_frequent(&global)?,
            per_prep: per
                .iter()
                .filter_map(|(p, c)| most_frequent(c).map(|l| (p.clone(), l)))
                .collect(),
            mode,
        })
    }

    pub fn predict(&self, inst: &PrepInstance) -> &str {
        match self.mode {
            InventoryMode::Unified => &self.global,
            InventoryMode::PerPreposition => self.per_prep.get(&inst.preposition()).unwrap_or(&self.global),
        }
    }
}

/// Accuracy of the most-frequent-sense baseline fitted on `train`.
pub fn most_frequent_sense(train: &[PrepInstance], eval: &[PrepInstance], mode: InventoryMode) -> f64 {
    let Some(mfs) = MostFrequentSense::fit(train, mode) else {
        return 0.0;
    };
    let correct = eval.iter().filter(|i| i.is_correct(mfs.predict(i))).count();
    accuracy_ratio(correct, eval.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Sentence, Span, Token};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn inst(prep: &str, senses: &[&str]) -> PrepInstance {
        let s = Arc::new(Sentence {
            id: "s".into(),
            tokens: vec![Token {
                index: 1,
                form: prep.into(),
                lemma: prep.into(),
                upos: "ADP".into(),
                head: 0,
                deprel: "ROOT".into(),
            }],
        });
        PrepInstance {
            sentence: s,
            span: Span::single(1),
            gold: Some(senses.iter().map(|s| s.to_string()).collect()),
        }
    }

    #[test]
    fn split_examples() {
        let eight: Vec<_> = (0..8).map(|_| inst("in", &["A"])).collect();
        let (t, d) = split_train_dev(&eight);
        assert_eq!((t.len(), d.len()), (6, 2));
        let three: Vec<_> = (0..3).map(|_| inst("in", &["A"])).collect();
        let (t, d) = split_train_dev(&three);
        assert_eq!((t.len(), d.len()), (3, 0));
    }

    #[test]
    fn split_uses_first_label_and_positions_divisible_by_four() {
        let data: Vec<_> = (0..8)
            .map(|i| inst(&format!("p{i}"), if i % 2 == 0 { &["A", "B"] } else { &["B"] }))
            .collect();
        let (_, dev) = split_train_dev(&data);
        let names: Vec<_> = dev.iter().map(|i| i.preposition()).collect();
        assert_eq!(names, vec!["p6", "p7"]);
    }

    #[test]
    fn mfs_hand_count() {
        let train = vec![
            inst("in", &["A"]),
            inst("in", &["A"]),
            inst("in", &["A"]),
            inst("in", &["B"]),
        ];
        let eval = vec![
            inst("in", &["A"]),
            inst("in", &["A"]),
            inst("in", &["B"]),
            inst("in", &["B"]),
        ];
        assert_eq!(most_frequent_sense(&train, &eval, InventoryMode::Unified), 0.5);
        let single = vec![inst("on", &["C"]); 3];
        assert_eq!(most_frequent_sense(&single, &single, InventoryMode::Unified), 1.0);
    }

    #[test]
    fn mfs_per_preposition_and_ties() {
        let train = vec![
            inst("in", &["B"]),
            inst("in", &["A"]),
            inst("on", &["C"]),
            inst("on", &["C"]),
        ];
        let mfs = MostFrequentSense::fit(&train, InventoryMode::PerPreposition).unwrap();
        assert_eq!(mfs.predict(&inst("in", &[])), "A");
        assert_eq!(mfs.predict(&inst("on", &[])), "C");
        assert_eq!(mfs.predict(&inst("at", &[])), "C");
    }

    #[test]
    fn mfs_counts_any_gold_as_correct() {
        let train = vec![inst("in", &["A"])];
        let eval = vec![inst("in", &["B", "A"])];
        assert_eq!(most_frequent_sense(&train, &eval, InventoryMode::Unified), 1.0);
    }

    proptest! {
        #[test]
        fn split_is_a_partition(labels in prop::collection::vec(0u8..4, 0..60)) {
            let data: Vec<_> = labels
                .iter()
                .enumerate()
                .map(|(i, l)| inst(&format!("p{i}"), &[["A", "B", "C", "D"][*l as usize]]))
                .collect();
            let (train, dev) = split_train_dev(&data);
            prop_assert_eq!(train.len() + dev.len(), data.len());
            let mut all: Vec<String> = train.iter().chain(&dev).map(|i| i.preposition()).collect();
            all.sort();
            all.dedup();
            prop_assert_eq!(all.len(), data.len());
            for sense in ["A", "B", "C", "D"] {
                let count = data.iter().filter(|i| i.primary_sense() == Some(sense)).count();
                let in_dev = dev.iter().filter(|i| i.primary_sense() == Some(sense)).count();
                prop_assert_eq!(in_dev, count / 4);
            }
        }

        #[test]
        fn mfs_ignores_order(labels in prop::collection::vec(0u8..3, 1..30), rot in 0usize..30) {
            let data: Vec<_> = labels.iter().map(|l| inst("in", &[["A", "B", "C"][*l as usize]])).collect();
            let mut rotated = data.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            prop_assert_eq!(
                most_frequent_sense(&data, &data, InventoryMode::Unified),
                most_frequent_sense(&rotated, &data, InventoryMode::Unified)
            );
        }
    }
}
