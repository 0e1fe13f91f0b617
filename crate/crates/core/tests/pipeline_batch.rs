use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use otdrimg::evalkit::SplitScheme;
use otdrimg::imaging::{content_hash, decode_png};
use otdrimg::ingest::csv_fallback::write_csv_fallback;
use otdrimg::ingest::mat::{write_mat_bytes, MatMatrix, MatWriteOptions};
use otdrimg::ingest::{EventClass, IngestConfig, REGION_COUNT, SERIES_LENGTH};
use otdrimg::pipeline::{
    demo_synthetic, run_batch, synthetic_sample, transform_sample, DatasetManifest, PipelineConfig, PipelineError,
};

fn config(out: &Path) -> PipelineConfig {
    PipelineConfig { output_dir: out.to_path_buf(), workers: 1, ..PipelineConfig::default() }
}

fn files_under(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(files_under(&p));
        } else {
            out.push(p);
        }
    }
    out.sort();
    out
}

#[test]
fn demo_writes_images_manifest_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = demo_synthetic(&config(dir.path()), 2, 9).unwrap();
    assert_eq!(outcome.exit_code(), 0);
    let m = &outcome.manifest;
    assert_eq!(m.rows.len(), 12);
    assert_eq!(m.header.census, [2; 6]);
    assert!(m.rows.windows(2).all(|w| w[0].sample_id < w[1].sample_id));
    for row in &m.rows {
        let bytes = fs::read(dir.path().join(&row.path)).unwrap();
        assert_eq!(row.checksum, format!("{:016x}", content_hash(&bytes)));
        let img = decode_png(&bytes).unwrap();
        assert_eq!((img.height(), img.width()), (224, 224));
        assert!(row.path.starts_with(&format!("images/{}/", row.event)));
        assert!(["train", "val", "test"].contains(&row.split.as_str()));
    }
    assert_eq!(&DatasetManifest::read(&dir.path().join("manifest.csv")).unwrap(), m);
    let stats = fs::read_to_string(dir.path().join("stats.txt")).unwrap();
    for key in
        ["input_bytes=11520000", "samples_processed=12", "samples_failed=0", "compression_ratio=", "wall_seconds="]
    {
        assert!(stats.contains(key), "{key} missing from\n{stats}");
    }
    assert!(!dir.path().join("errors.txt").exists());
}

#[test]
fn worker_count_and_reruns_do_not_change_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig { split: SplitScheme::KFold(2), ..config(a.path()) };
    let first = demo_synthetic(&cfg, 2, 4).unwrap();
    let second =
        demo_synthetic(&PipelineConfig { workers: 3, output_dir: b.path().into(), ..cfg.clone() }, 2, 4).unwrap();
    assert_eq!(first.manifest, second.manifest);
    let fa = files_under(&a.path().join("images"));
    let fb = files_under(&b.path().join("images"));
    assert_eq!(fa.len(), 12);
    for (x, y) in fa.iter().zip(&fb) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap());
    }
    let third = demo_synthetic(&PipelineConfig { seed: 5, ..cfg }, 2, 4).unwrap();
    assert_ne!(third.manifest.header.config_digest, first.manifest.header.config_digest);
}

#[test]
fn different_frequencies_give_different_images() {
    let cfg = PipelineConfig::default();
    let slow = transform_sample(&synthetic_sample(EventClass::Digging, 0, 1), &cfg).unwrap();
    let fast = transform_sample(&synthetic_sample(EventClass::Knocking, 0, 1), &cfg).unwrap();
    let l1: u64 = slow
        .to_interleaved()
        .iter()
        .zip(fast.to_interleaved())
        .map(|(a, b)| (*a as i64 - b as i64).unsigned_abs())
        .sum();
    assert!(l1 > 0);
}

fn sample_rows(seed: f64) -> Vec<f64> {
    (0..REGION_COUNT * SERIES_LENGTH).map(|i| ((i as f64) * 0.001 + seed).sin() * (1 + i % 7) as f64).collect()
}

fn write_dataset(root: &Path) {
    fs::create_dir_all(root.join("Digging")).unwrap();
    fs::create_dir_all(root.join("Walking")).unwrap();
    let good = MatMatrix::from_rows("data", REGION_COUNT, SERIES_LENGTH, &sample_rows(0.0)).unwrap();
    let other = MatMatrix::from_rows("data", REGION_COUNT, SERIES_LENGTH, &sample_rows(1.0)).unwrap();
    let opts = MatWriteOptions { compress: true, ..MatWriteOptions::default() };
    fs::write(root.join("Digging/good.mat"), write_mat_bytes(&[good, other], opts)).unwrap();
    fs::write(root.join("Digging/broken.mat"), b"MATLAB 5.0 MAT-file, but not really").unwrap();
    let wrong = MatMatrix::from_rows("data", 3, 4, &[0.0; 12]).unwrap();
    fs::write(root.join("Walking/small.mat"), write_mat_bytes(&[wrong], opts)).unwrap();
    let sample =
        otdrimg::ingest::RawSample::from_row_major("w".into(), EventClass::Walking, &sample_rows(2.0)).unwrap();
    let mut csv = Vec::new();
    write_csv_fallback(&[sample], &mut csv).unwrap();
    fs::write(root.join("Walking/walk.csv"), csv).unwrap();
}

#[test]
fn partial_failures_are_collected() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write_dataset(input.path());
    let cfg = PipelineConfig { ingest: IngestConfig::from_layout_dir(input.path()).unwrap(), ..config(out.path()) };
    let outcome = run_batch(&cfg).unwrap();
    assert_eq!(outcome.exit_code(), 1);
    let ids: Vec<&str> = outcome.manifest.rows.iter().map(|r| r.sample_id.as_str()).collect();
    assert_eq!(ids, ["Digging_good_0", "Digging_good_1", "Walking_walk_0"]);
    assert_eq!(outcome.failures.len(), 2);
    let errors = fs::read_to_string(out.path().join("errors.txt")).unwrap();
    assert!(errors.contains("broken.mat") && errors.contains("small.mat"), "{errors}");
    let stats = fs::read_to_string(out.path().join("stats.txt")).unwrap();
    let input_bytes: u64 = files_under(input.path()).iter().map(|p| fs::metadata(p).unwrap().len()).sum();
    assert!(stats.contains(&format!("input_bytes={input_bytes}\n")), "{stats}");

    // A clean rerun removes the stale error report.
    fs::remove_file(input.path().join("Digging/broken.mat")).unwrap();
    fs::remove_file(input.path().join("Walking/small.mat")).unwrap();
    assert_eq!(run_batch(&cfg).unwrap().exit_code(), 0);
    assert!(!out.path().join("errors.txt").exists());
}

#[test]
fn fatal_configuration_errors() {
    let out = tempfile::tempdir().unwrap();
    let missing = IngestConfig::from_toml("[[source]]\nevent = \"digging\"\npath = \"/nonexistent/otdr\"\n").unwrap();
    let cfg = PipelineConfig { ingest: missing, ..config(out.path()) };
    assert!(run_batch(&cfg).is_err());
    assert!(matches!(run_batch(&config(out.path())), Err(PipelineError::Config(_))));

    let input = tempfile::tempdir().unwrap();
    fs::create_dir_all(input.path().join("Digging/a")).unwrap();
    fs::create_dir_all(input.path().join("Digging/b")).unwrap();
    let m = MatMatrix::from_rows("data", REGION_COUNT, SERIES_LENGTH, &sample_rows(0.0)).unwrap();
    let bytes = write_mat_bytes(&[m], MatWriteOptions::default());
    fs::write(input.path().join("Digging/a/same.mat"), &bytes).unwrap();
    fs::write(input.path().join("Digging/b/same.mat"), &bytes).unwrap();
    let cfg = PipelineConfig { ingest: IngestConfig::from_layout_dir(input.path()).unwrap(), ..config(out.path()) };
    assert!(matches!(run_batch(&cfg), Err(PipelineError::Config(_))));
}

fn median_transform_seconds(cfg: &PipelineConfig) -> f64 {
    let sample = synthetic_sample(EventClass::Shaking, 0, 3);
    let mut times: Vec<f64> = (0..5)
        .map(|_| {
            let t = Instant::now();
            transform_sample(&sample, cfg).unwrap();
            t.elapsed().as_secs_f64()
        })
        .collect();
    times.sort_by(f64::total_cmp);
    times[2]
}

#[test]
fn doubling_paa_length_costs_at_most_five_times() {
    let small = PipelineConfig::default().with_paa_length(250);
    let large = PipelineConfig::default();
    median_transform_seconds(&large);
    let ratio = median_transform_seconds(&large) / median_transform_seconds(&small);
    assert!(ratio <= 5.0, "time ratio {ratio}");
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_otdrimg"))
}

#[test]
fn cli_demo_score_and_inspect() {
    let out = tempfile::tempdir().unwrap();
    let run =
        cli().args(["demo", "--n-per-class", "1", "--resolution", "64", "--out"]).arg(out.path()).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&run.stdout).contains("samples_processed=6"));
    let manifest = DatasetManifest::read(&out.path().join("manifest.csv")).unwrap();
    let img = decode_png(&fs::read(out.path().join(&manifest.rows[0].path)).unwrap()).unwrap();
    assert_eq!((img.height(), img.width()), (64, 64));

    let mut preds = String::from("sample_id,true_label,pred_label\n");
    for (i, r) in manifest.rows.iter().enumerate() {
        let pred = if i == 0 { (r.label + 1) % 6 } else { r.label };
        preds.push_str(&format!("{},{},{}\n", r.sample_id, r.label, pred));
    }
    let pred_path = out.path().join("preds.csv");
    fs::write(&pred_path, &preds).unwrap();
    let run = cli()
        .arg("score")
        .arg("--predictions")
        .arg(&pred_path)
        .arg("--manifest")
        .arg(out.path().join("manifest.csv"))
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let text = String::from_utf8(run.stdout).unwrap();
    assert!(text.contains(&format!("accuracy={}\n", 5.0 / 6.0)), "{text}");
    assert!(text.contains("samples=6\n"));

    fs::write(&pred_path, preds.replacen(&manifest.rows[1].sample_id, "ghost", 1)).unwrap();
    let run = cli()
        .arg("score")
        .arg("--predictions")
        .arg(&pred_path)
        .arg("--manifest")
        .arg(out.path().join("manifest.csv"))
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&run.stderr).contains("ghost"));

    let mixed = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/mixed.mat");
    let run = cli().arg("inspect-mat").arg("--path").arg(mixed).output().unwrap();
    assert_eq!(run.status.code(), Some(0));
    let listing = String::from_utf8(run.stdout).unwrap();
    assert!(listing.contains("data\tdouble\t2x3\tok"), "{listing}");
    assert!(listing.contains("skipped"));
}

#[test]
fn cli_transform_exit_codes() {
    let input = tempfile::tempdir().unwrap();
    let out = tempfile::tempdir().unwrap();
    write_dataset(input.path());
    let run = cli()
        .arg("transform")
        .arg("--input")
        .arg(input.path())
        .arg("--out")
        .arg(out.path())
        .args(["--split", "holdout"])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(1), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).contains("samples_processed=3"));

    let toml = input.path().join("sources.toml");
    fs::write(&toml, "[[source]]\nevent = \"Digging\"\npath = \"Digging/good.mat\"\n").unwrap();
    let run = cli()
        .arg("transform")
        .arg("--input")
        .arg(&toml)
        .arg("--out")
        .arg(out.path())
        .args(["--paa-len", "100", "--rp-epsilon", "0.05"])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));

    let run = cli().args(["transform", "--input", "/nonexistent/otdr", "--out"]).arg(out.path()).output().unwrap();
    assert_eq!(run.status.code(), Some(2));
    let run = cli()
        .arg("transform")
        .arg("--input")
        .arg(input.path())
        .arg("--out")
        .arg(out.path())
        .args(["--paa-len", "1"])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(2));
}
