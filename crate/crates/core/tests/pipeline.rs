use std::fs;

use forgeloc::imgcore::{evaluate, read_mask, MaskSource, Scores};
use forgeloc::pipeline::{format_report, run_pipeline, with_means, PipelineConfig, ReportRow, DETECTORS};
use forgeloc::synth::{emit_corpus, CorpusSpec};

fn scores(f: f64) -> Scores {
    Scores {
        precision: f,
        recall: f,
        f_measure: f,
    }
}

#[test]
fn means_follow_sorted_rows() {
    let rows = vec![
        ReportRow { image_id: "b".into(), detector: "fused", scores: scores(0.5) },
        ReportRow { image_id: "a".into(), detector: "fused", scores: scores(1.0) },
        ReportRow { image_id: "a".into(), detector: "prnu", scores: scores(0.0) },
    ];
    let out = with_means(rows);
    let order: Vec<(&str, &str)> = out.iter().map(|r| (r.image_id.as_str(), r.detector)).collect();
    assert_eq!(order, [("a", "prnu"), ("a", "fused"), ("b", "fused"), ("mean", "prnu"), ("mean", "fused")]);
    assert_eq!(out[4].scores.f_measure, 0.75);
    let text = format_report(&out);
    assert!(text.starts_with("image_id,detector,precision,recall,f_measure\n"));
    assert!(text.contains("mean,fused,0.750000,0.750000,0.750000"));
}

#[test]
fn pristine_corpus_scores_one_exactly_when_nothing_fires() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        width: 160,
        height: 160,
        cameras: 1,
        pristine_per_camera: 5,
        train_splices: 0,
        test_copymove: 0,
        test_splice: 0,
        test_inpaint: 0,
        ..Default::default()
    };
    emit_corpus(dir.path(), &spec).unwrap();
    // Without a test split every image is both trained on and analyzed.
    let manifest = dir.path().join("manifest.csv");
    let text = fs::read_to_string(&manifest).unwrap().replace(",train,", ",,");
    fs::write(&manifest, text).unwrap();
    let config = PipelineConfig {
        output_dir: dir.path().join("out"),
        ..Default::default()
    };
    let report = run_pipeline(&config, &manifest).unwrap();
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert_eq!(report.rows.len(), 5 * 4 + 4);
    assert!(!report.splicing_trained);
    for row in report.rows.iter().filter(|r| r.image_id != "mean") {
        let mask = read_mask(dir.path().join(format!("out/masks/{}/{}.png", row.detector, row.image_id)), MaskSource::Fused).unwrap();
        assert_eq!(row.scores.f_measure == 1.0, !mask.any(), "{row:?}");
    }
}

#[test]
fn mixed_corpus_fuses_at_least_as_well_as_the_detectors() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        width: 192,
        height: 192,
        cameras: 2,
        pristine_per_camera: 5,
        train_splices: 6,
        test_copymove: 7,
        test_splice: 7,
        test_inpaint: 6,
        seed: 11,
    };
    emit_corpus(dir.path(), &spec).unwrap();
    let config = PipelineConfig {
        output_dir: dir.path().join("out"),
        ..Default::default()
    };
    let report = run_pipeline(&config, dir.path().join("manifest.csv")).unwrap();
    assert!(report.errors.is_empty(), "{:?}", report.errors);
    assert_eq!(report.clusters, 2);
    assert_eq!(report.rows.len(), 20 * 4 + 4);
    let best = DETECTORS[..3].iter().map(|d| report.mean(d).unwrap()).fold(0.0, f64::max);
    let fused = report.mean("fused").unwrap();
    assert!(fused >= best - 0.05, "fused {fused} best single {best}");

    // Stored masks reproduce the reported scores.
    let row = &report.rows[3];
    assert_eq!(row.detector, "fused");
    let mask = read_mask(dir.path().join(format!("out/masks/fused/{}.png", row.image_id)), MaskSource::Fused).unwrap();
    let truth = read_mask(dir.path().join(format!("masks/{}.png", row.image_id)), MaskSource::GroundTruth).unwrap();
    assert_eq!(evaluate(&mask, &truth).unwrap(), row.scores);
    assert!(dir.path().join("out/report.csv").exists());
    assert!(dir.path().join("out/clusters.txt").exists());
}

#[test]
fn unreadable_images_are_recorded_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let spec = CorpusSpec {
        width: 160,
        height: 160,
        cameras: 1,
        pristine_per_camera: 5,
        train_splices: 0,
        test_copymove: 1,
        test_splice: 0,
        test_inpaint: 0,
        ..Default::default()
    };
    emit_corpus(dir.path(), &spec).unwrap();
    let manifest = dir.path().join("manifest.csv");
    let mut text = fs::read_to_string(&manifest).unwrap();
    text.push_str("ghost,images/ghost.png,,test,copymove,0\n");
    fs::write(&manifest, text).unwrap();
    let config = PipelineConfig {
        output_dir: dir.path().join("out"),
        ..Default::default()
    };
    let report = run_pipeline(&config, &manifest).unwrap();
    assert_eq!(report.errors.len(), 1);
    assert_eq!(report.errors[0].0, "ghost");
    assert_eq!(report.rows.len(), 4 + 4);
    assert!(fs::read_to_string(dir.path().join("out/errors.txt")).unwrap().starts_with("ghost\t"));
}

#[test]
fn empty_manifest_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.csv");
    fs::write(&manifest, "image_id,image_path\n").unwrap();
    let config = PipelineConfig {
        output_dir: dir.path().join("out"),
        ..Default::default()
    };
    assert!(run_pipeline(&config, &manifest).is_err());
}
