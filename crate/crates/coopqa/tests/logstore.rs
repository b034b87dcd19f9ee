use coopqa::logstore::{load_history, read_all, save_history, RecordFilter, RecordStore, StoreError};
use coopqa_core::sampler::{sample_condition, ExposureHistory};
use coopqa_core::{ConditionCombo, GameRecord, Group};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn record(rng: &mut ChaCha8Rng, i: usize, group: Group) -> GameRecord {
    let answered = rng.gen_bool(0.8);
    let correct = answered && rng.gen_bool(0.5);
    GameRecord {
        player_id: format!("{}-{:03}", group.name(), i % 37),
        question_id: format!("q{:04}", i % 160),
        group,
        combo: ConditionCombo::from_index(rng.gen_range(0..8)),
        buzz_position_frac: if answered { rng.gen_range(0.01..=1.0) } else { 1.0 },
        answered,
        correct,
        points: match (answered, correct) {
            (true, true) => 10,
            (true, false) => -5,
            _ => 0,
        },
        active_players: if group == Group::Expert { rng.gen_range(1..6) } else { 1 },
        top_active_accuracy: if group == Group::Expert { rng.gen_range(0.0..=1.0) } else { 0.0 },
        guess_shown: rng.gen_bool(0.5).then(|| "Copernicus".to_string()),
        timestamp: i as u64 * 1000,
    }
}

fn records(n: usize, group: Group, seed: u64) -> Vec<GameRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| record(&mut rng, i, group)).collect()
}

#[test]
fn appended_records_are_all_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let expert = records(1983, Group::Expert, 1);
    let mut store = RecordStore::open(&path).unwrap();
    for r in &expert {
        store.append(r).unwrap();
    }
    let back = read_all(&path, &RecordFilter::default()).unwrap();
    assert_eq!(back.len(), 1983);
    assert_eq!(back, expert);
}

#[test]
fn group_filter_selects_novices() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let mut store = RecordStore::open(&path).unwrap();
    let novice = records(600, Group::Novice, 2);
    let expert = records(1983, Group::Expert, 3);
    // interleave so the filter cannot rely on position
    let mut mixed: Vec<&GameRecord> = Vec::new();
    let (mut n, mut e) = (novice.iter(), expert.iter());
    loop {
        match (n.next(), e.next(), e.next(), e.next()) {
            (None, None, _, _) => break,
            (a, b, c, d) => mixed.extend([a, b, c, d].into_iter().flatten()),
        }
    }
    store.append_all(mixed).unwrap();
    assert_eq!(read_all(&path, &RecordFilter::group(Group::Novice)).unwrap(), novice);
    assert_eq!(read_all(&path, &RecordFilter::group(Group::Expert)).unwrap().len(), 1983);
    let one = RecordFilter {
        player: Some("novice-005".into()),
        ..RecordFilter::group(Group::Novice)
    };
    let mine = read_all(&path, &one).unwrap();
    assert!(!mine.is_empty() && mine.iter().all(|r| r.player_id == "novice-005"));
}

#[test]
fn corrupt_line_is_reported_by_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let mut store = RecordStore::open(&path).unwrap();
    store.append_all(&records(10, Group::Novice, 4)).unwrap();
    drop(store);
    let mut text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    let broken = format!("{}\n{}\n", lines[..6].join("\n"), &lines[6][..lines[6].len() / 2]);
    text = broken + &lines[7..].join("\n") + "\n";
    std::fs::write(&path, text).unwrap();
    match read_all(&path, &RecordFilter::default()) {
        Err(StoreError::Corrupt { line, .. }) => assert_eq!(line, 7),
        other => panic!("{other:?}"),
    }
    let message = read_all(&path, &RecordFilter::default()).unwrap_err().to_string();
    assert!(message.contains(":7:"), "{message}");
}

#[test]
fn invalid_records_are_refused_and_nothing_is_written() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let mut store = RecordStore::open(&path).unwrap();
    let mut batch = records(5, Group::Novice, 5);
    batch[3].correct = true;
    batch[3].answered = false;
    assert!(matches!(store.append_all(&batch), Err(StoreError::Invalid { .. })));
    assert!(read_all(&path, &RecordFilter::default()).unwrap().is_empty());
}

#[test]
fn appends_never_rewrite_earlier_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("records.jsonl");
    let all = records(50, Group::Expert, 6);
    let mut store = RecordStore::open(&path).unwrap();
    store.append_all(&all[..20]).unwrap();
    let before = std::fs::read(&path).unwrap();
    drop(store);
    let mut store = RecordStore::open(&path).unwrap();
    store.append_all(&all[20..]).unwrap();
    let after = std::fs::read(&path).unwrap();
    assert_eq!(&after[..before.len()], &before[..]);
    assert_eq!(read_all(&path, &RecordFilter::default()).unwrap(), all);
}

#[test]
fn missing_store_reads_as_empty() {
    let dir = tempfile::tempdir().unwrap();
    assert!(read_all(&dir.path().join("nope.jsonl"), &RecordFilter::default()).unwrap().is_empty());
}

#[test]
fn exposure_history_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("history.json");
    assert_eq!(load_history(&path).unwrap(), None);
    let mut h = ExposureHistory::for_questions(160);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for p in ["a", "b", "c"] {
        for _ in 0..50 {
            sample_condition(&mut h, p, &mut rng);
        }
    }
    save_history(&path, &h).unwrap();
    assert_eq!(load_history(&path).unwrap(), Some(h));
}
