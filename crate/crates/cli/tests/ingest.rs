use galqr::simlab::{generate_case, SimConfig};
use galqr_cli::ingest::{export_long_csv, export_raw_csv, ingest_long_csv, read_raw};
use galqr_cli::synth::{simulate_activity, ActivityConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fs;
use std::path::Path;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn functional_rows(subjects: &[&str], reps: &[&str], times: &[f64]) -> String {
    let mut s = String::from("subject_id,replicate_id,time,value\n");
    for (i, sid) in subjects.iter().enumerate() {
        for (r, rid) in reps.iter().enumerate() {
            for (c, t) in times.iter().enumerate() {
                s.push_str(&format!("{sid},{rid},{t},{}\n", i * 100 + r * 10 + c));
            }
        }
    }
    s
}

#[test]
fn simulated_dataset_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = SimConfig { n: 25, j: 3, t: 40, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let ds = generate_case(&cfg, &mut rng).unwrap();
    let (f, s) = (dir.path().join("f.csv"), dir.path().join("s.csv"));
    export_long_csv(&ds, &f, &s).unwrap();
    let back = ingest_long_csv(&f, &s).unwrap();
    assert_eq!(back.grid, ds.grid);
    assert_eq!(back.w, ds.w);
    assert_eq!(back.z, ds.z);
    assert_eq!(back.y, ds.y);
    assert_eq!(back.subject_ids, ds.subject_ids);
}

#[test]
fn raw_export_keeps_invalid_masks() {
    let dir = tempfile::tempdir().unwrap();
    let raw = simulate_activity(&ActivityConfig { n: 3, n_short: 1, minutes: 200, ..Default::default() });
    let (f, s) = (dir.path().join("f.csv"), dir.path().join("s.csv"));
    export_raw_csv(&raw, &f, &s).unwrap();
    assert_eq!(read_raw(&f, &s).unwrap(), raw);
}

#[test]
fn missing_replicate_names_subject_and_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = functional_rows(&["a", "b"], &["1", "2"], &[0.0, 0.5, 1.0]);
    text.push_str("c,1,0,1\nc,1,0.5,1\nc,1,1,1\n");
    let f = write(dir.path(), "f.csv", &text);
    let s = write(dir.path(), "s.csv", "subject_id,y,z_1\na,1,0\nb,2,1\nc,3,0\n");
    let msg = ingest_long_csv(&f, &s).unwrap_err().to_string();
    assert!(msg.contains("subject c is missing replicate 2"), "{msg}");
}

#[test]
fn covariate_count_comes_from_the_scalar_header() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.csv", &functional_rows(&["a", "b"], &["1", "2"], &[0.0, 1.0, 2.0]));
    let s = write(dir.path(), "s.csv", "subject_id,y,z_1,z_2,z_3\na,1,0,1,2\nb,2,1,1,1\n");
    let ds = ingest_long_csv(&f, &s).unwrap();
    assert_eq!(ds.p(), 3);
    assert_eq!(ds.z[(0, 2)], 2.0);
    assert_eq!(ds.w[1][(1, 2)], 112.0);
}

#[test]
fn ragged_grids_list_offending_subjects() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = functional_rows(&["a"], &["1", "2"], &[0.0, 0.5, 1.0]);
    text.push_str("b,1,0,1\nb,1,1,1\nb,2,0,1\nb,2,0.5,1\nb,2,1,1\n");
    let f = write(dir.path(), "f.csv", &text);
    let s = write(dir.path(), "s.csv", "subject_id,y\na,1\nb,2\n");
    let msg = ingest_long_csv(&f, &s).unwrap_err().to_string();
    assert!(msg.contains("subject b, replicate 1"), "{msg}");
    assert!(!msg.contains("subject a"), "{msg}");
}

#[test]
fn duplicate_cells_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = functional_rows(&["a"], &["1"], &[0.0, 1.0]);
    text.push_str("a,1,1,5\n");
    let f = write(dir.path(), "f.csv", &text);
    let s = write(dir.path(), "s.csv", "subject_id,y\na,1\n");
    let msg = ingest_long_csv(&f, &s).unwrap_err().to_string();
    assert!(msg.contains("duplicate") && msg.contains("subject a, replicate 1, time 1"), "{msg}");
}

#[test]
fn gaps_in_covariate_names_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "f.csv", &functional_rows(&["a"], &["1"], &[0.0, 1.0]));
    let s = write(dir.path(), "s.csv", "subject_id,y,z_1,z_3\na,1,0,0\n");
    assert_eq!(ingest_long_csv(&f, &s).unwrap_err().exit_code(), 2);
}
