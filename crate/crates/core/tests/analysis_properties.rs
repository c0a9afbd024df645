#![allow(clippy::needless_range_loop)]

use heartflock::analysis::{normalize_confusion, read_counts_csv, write_rates_csv, AnalysisError};
use heartflock::Emotion;
use proptest::prelude::*;

fn counts() -> impl Strategy<Value = [[u64; 8]; 8]> {
    prop::array::uniform8(prop::array::uniform8(0u64..10_000))
}

proptest! {
    #[test]
    fn columns_are_stochastic(c in counts()) {
        prop_assume!(c.iter().flatten().any(|&v| v > 0));
        let out = normalize_confusion(&c).unwrap();
        for col in 0..8 {
            let total: u64 = (0..8).map(|r| c[r][col]).sum();
            let sum: f64 = (0..8).map(|r| out.rates[r][col]).sum();
            if total == 0 {
                prop_assert!(out.empty_columns.contains(&Emotion::ALL[col]));
                prop_assert_eq!(sum, 0.0);
            } else {
                prop_assert!((sum - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn scaling_counts_changes_nothing(c in counts(), k in 1u64..1000) {
        prop_assume!(c.iter().flatten().any(|&v| v > 0));
        let scaled = c.map(|row| row.map(|v| v * k));
        let (a, b) = (normalize_confusion(&c).unwrap(), normalize_confusion(&scaled).unwrap());
        for r in 0..8 {
            for col in 0..8 {
                prop_assert!((a.rates[r][col] - b.rates[r][col]).abs() <= 1e-15);
            }
        }
    }
}

#[test]
fn diagonal_counts_give_identity() {
    let mut c = [[0u64; 8]; 8];
    for (k, row) in c.iter_mut().enumerate() {
        row[k] = (k as u64 + 1) * 7;
    }
    let out = normalize_confusion(&c).unwrap();
    for r in 0..8 {
        for col in 0..8 {
            assert_eq!(out.rates[r][col], if r == col { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn all_zero_is_rejected() {
    assert!(matches!(normalize_confusion(&[[0; 8]; 8]), Err(AnalysisError::AllZero)));
}

#[test]
fn csv_labels_may_come_in_any_order() {
    let names = [
        "fear",
        "joy",
        "anger",
        "trust",
        "sadness",
        "disgust",
        "anticipation",
        "surprise",
    ];
    let mut text = format!("shown,{}\n", names.join(","));
    for (r, row) in names.iter().enumerate() {
        let cells: Vec<String> = (0..8).map(|c| ((r * 8 + c) % 5).to_string()).collect();
        text.push_str(&format!("{row},{}\n", cells.join(",")));
    }
    let counts = read_counts_csv(text.as_bytes()).unwrap();
    let fear = Emotion::Fear.index();
    let joy = Emotion::Joy.index();
    assert_eq!(counts[fear][fear], 0);
    assert_eq!(counts[fear][joy], 1);
    assert_eq!(counts[joy][fear], 3);

    let out = normalize_confusion(&counts).unwrap();
    let mut written = Vec::new();
    write_rates_csv(&mut written, &out.rates).unwrap();
    let written = String::from_utf8(written).unwrap();
    assert!(written.starts_with(",joy,sadness,fear,anger,trust,disgust,surprise,anticipation\n"));
    assert_eq!(written.lines().count(), 9);
}

#[test]
fn duplicate_or_unknown_labels_fail() {
    let header = "x,joy,joy,fear,anger,trust,disgust,surprise,anticipation\n";
    assert!(read_counts_csv(header.as_bytes()).is_err());
    let header = "x,joy,sadness,fear,anger,trust,disgust,surprise,awe\n";
    assert!(read_counts_csv(header.as_bytes()).is_err());
}
