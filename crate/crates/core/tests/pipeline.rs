use std::fs;
use std::path::Path;

use wcp_core::features::{read_feature_csv, Label};
use wcp_core::imagecore::{save_image, ImageGrid, ValueDomain};
use wcp_core::pipeline::*;
use wcp_core::Error;

fn tiny_png(path: &Path) {
    let g = ImageGrid::from_fn(4, 4, ValueDomain::RawU8, |x, y| (x * 40 + y * 10) as f64).unwrap();
    save_image(&g, path).unwrap();
}

fn config_for(root: &Path, out: &Path) -> PipelineConfig {
    PipelineConfig {
        dataset_root: root.to_path_buf(),
        output: out.to_path_buf(),
        ..PipelineConfig::default()
    }
}

#[test]
fn config_parses_flat_toml_and_resolves_paths() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("data")).unwrap();
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        "dataset_root = \"data\"\noutput = \"out\"\nwindow = 9\nmodel = \"nakagami\"\n\
         classifiers = [\"svm\", \"tree\"]\nseed = 42\ndespeckle = \"median\"\n",
    )
    .unwrap();
    let c = PipelineConfig::load(&path).unwrap();
    assert_eq!(c.dataset_root, dir.path().join("data"));
    assert_eq!(c.window, 9);
    assert_eq!(c.model, ModelTag::Nakagami);
    assert_eq!(c.classifier_configs().len(), 2);
    assert_eq!(c.seed, 42);
    c.validate().unwrap();
    let back = PipelineConfig::from_toml(&c.to_toml().unwrap()).unwrap();
    assert_eq!(back, c);
}

#[test]
fn config_rejects_bad_values() {
    assert!(matches!(PipelineConfig::from_toml("windw = 13"), Err(Error::Config(_))));
    let dir = tempfile::tempdir().unwrap();
    let mut c = config_for(dir.path(), &dir.path().join("o"));
    c.window = 12;
    c.folds = 1;
    let msg = c.validate().unwrap_err().to_string();
    assert!(msg.contains("window") && msg.contains("folds"), "{msg}");
    c = config_for(&dir.path().join("missing"), &dir.path().join("o"));
    assert!(c.validate().is_err());
}

#[test]
fn folder_layout_gives_labels() {
    let dir = tempfile::tempdir().unwrap();
    for i in 0..3 {
        tiny_png(&dir.path().join(format!("benign/b{i}.png")));
    }
    for i in 0..2 {
        tiny_png(&dir.path().join(format!("Malignant/m{i}.png")));
    }
    tiny_png(&dir.path().join("malignant_extra_ignored.png"));
    let cases = ingest(&config_for(dir.path(), dir.path())).unwrap();
    assert_eq!(cases.len(), 5);
    assert_eq!(cases.iter().filter(|c| c.label == Label::Benign).count(), 3);
    assert!(cases.iter().all(|c| c.mask.is_none()));
    assert_eq!(cases[0].case_id, "m0");
}

#[test]
fn side_by_side_masks_are_attached() {
    let dir = tempfile::tempdir().unwrap();
    tiny_png(&dir.path().join("benign/b (1).png"));
    tiny_png(&dir.path().join("benign/b (1)_mask.png"));
    let cases = ingest(&config_for(dir.path(), dir.path())).unwrap();
    assert_eq!(cases.len(), 1);
    assert_eq!(cases[0].mask.as_deref(), Some(dir.path().join("benign/b (1)_mask.png").as_path()));
}

#[test]
fn manifest_with_mask_folder() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("images");
    tiny_png(&root.join("c1.png"));
    tiny_png(&root.join("c2.bmp"));
    tiny_png(&dir.path().join("masks/c1.png"));
    fs::write(dir.path().join("labels.csv"), "id,label\nc1,Malignant\nc2,benign\n").unwrap();
    let mut c = config_for(&root, dir.path());
    c.labels = Some(dir.path().join("labels.csv"));
    c.masks = Some(dir.path().join("masks"));
    let cases = ingest(&c).unwrap();
    assert_eq!(cases.len(), 2);
    assert_eq!(cases[0].mask.as_deref(), Some(dir.path().join("masks/c1.png").as_path()));
    assert!(cases[1].mask.is_none());
    assert_eq!(cases[1].image, root.join("c2.bmp"));
}

#[test]
fn manifest_problems_are_itemized() {
    let dir = tempfile::tempdir().unwrap();
    tiny_png(&dir.path().join("c1.png"));
    fs::write(dir.path().join("labels.csv"), "id,label\nc1,maybe\nghost,benign\n").unwrap();
    let mut c = config_for(dir.path(), dir.path());
    c.labels = Some(dir.path().join("labels.csv"));
    match ingest(&c) {
        Err(Error::Ingest(items)) => {
            assert_eq!(items.len(), 2);
            assert!(items[0].contains("maybe"));
            assert!(items[1].contains("ghost"));
        }
        other => panic!("{other:?}"),
    }
}

fn phantom_dir(cases: usize, root: &Path) {
    let spec = PhantomSpec {
        cases,
        ..PhantomSpec::default()
    };
    write_phantom_set(root, &spec).unwrap();
}

#[test]
fn six_case_phantom_run() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    phantom_dir(6, &data);
    let mut cfg = config_for(&data, &dir.path().join("out"));
    cfg.render_maps = true;
    let report = run_pipeline(&cfg).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    let text = fs::read_to_string(cfg.output.join(FEATURES_FILE)).unwrap();
    let (names, rows) = read_feature_csv(&text).unwrap();
    assert_eq!(names.len(), 132);
    assert_eq!(rows.len(), 6);
    assert!(text.lines().next().unwrap().ends_with(",case_id,label"));
    assert!(rows.iter().all(|r| r.values.iter().all(|v| v.is_finite())));
    assert_eq!(report.cv.unwrap().folds, 3);
    assert_eq!(report.classifiers.len(), 3);
    assert!(report.notes.iter().any(|n| n.contains("folds reduced")));

    let case = cfg.output.join("cases/phantom000");
    for f in ["normalized.png", "mask.png", "region.json", "cp_P2D4.wcpg", "wcp_P4D32.wcpg", "subband_P3D16.wcpg"] {
        assert!(case.join(f).is_file(), "{f}");
    }
    assert!(cfg.output.join("maps/phantom000_wcp_P2D8.png").is_file());
    assert!(cfg.output.join(MANIFEST_FILE).is_file());
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(cfg.output.join(REPORT_FILE)).unwrap()).unwrap();
    assert_eq!(json["config"]["window"], 13);
    assert_eq!(json["classifiers"][0]["classifier"]["kind"], "svm");
}

#[test]
fn corrupt_image_is_reported_and_skipped() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    phantom_dir(6, &data);
    fs::write(data.join("benign/phantom003.png"), b"\x89PNG\r\n\x1a\ntruncated").unwrap();
    let cfg = config_for(&data, &dir.path().join("out"));
    let report = run_pipeline(&cfg).unwrap();
    assert_eq!(report.succeeded, 5);
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].case_id, "phantom003");
    assert!(report.failures[0].error.contains("unreadable"), "{}", report.failures[0].error);
    let (_, rows) = read_feature_csv(&fs::read_to_string(cfg.output.join(FEATURES_FILE)).unwrap()).unwrap();
    assert_eq!(rows.len(), 5);
}

#[test]
fn rerun_is_byte_identical_and_worker_count_does_not_matter() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    phantom_dir(8, &data);
    let mut cfg = config_for(&data, &dir.path().join("out"));
    cfg.folds = 4;
    run_pipeline(&cfg).unwrap();
    let csv1 = fs::read(cfg.output.join(FEATURES_FILE)).unwrap();
    let json1 = fs::read(cfg.output.join(REPORT_FILE)).unwrap();
    cfg.workers = 1;
    run_pipeline(&cfg).unwrap();
    let csv2 = fs::read(cfg.output.join(FEATURES_FILE)).unwrap();
    let json2 = fs::read(cfg.output.join(REPORT_FILE)).unwrap();
    assert_eq!(csv1, csv2);
    // The report echoes the worker count; everything else must match.
    let strip = |b: &[u8]| String::from_utf8_lossy(b).replace("\"workers\": 1", "\"workers\": 0");
    assert_eq!(strip(&json1), strip(&json2));
}

#[test]
fn bmode_block_adds_columns_and_classify_reads_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    phantom_dir(4, &data);
    let mut cfg = config_for(&data, &dir.path().join("out"));
    cfg.bmode_block = true;
    cfg.masks = Some(data.join("masks"));
    let r = run_pipeline(&cfg).unwrap();
    assert_eq!(r.feature_count, 154);
    let again = classify_features_file(&cfg.output.join(FEATURES_FILE), &cfg).unwrap();
    assert_eq!(again.classifiers, r.classifiers);
}

#[test]
fn segment_stage_stops_early_and_rasters_render() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    phantom_dir(2, &data);
    let cfg = config_for(&data, &dir.path().join("out"));
    let cases = ingest(&cfg).unwrap();
    let (seg, fail) = run_cases(&cases, &cfg, Stage::Segment).unwrap();
    assert!(fail.is_empty());
    assert!(seg.iter().all(|a| a.subbands.is_none() && a.features.is_none()));
    let (tr, _) = run_cases(&cases, &cfg, Stage::Transform).unwrap();
    assert_eq!(tr[0].wcp.len(), 6);
    assert_eq!(render_rasters(&cfg.output.join("cases")).unwrap(), 2 * 18);
    assert!(cfg.output.join("cases/phantom001/cp_P4D16.png").is_file());
}

#[test]
fn phantom_segmentation_finds_the_lesion() {
    let spec = PhantomSpec::default();
    for i in 0..4 {
        let c = phantom_case(&spec, i).unwrap();
        let cfg = PipelineConfig::default();
        let region = lesion_region(&preprocess(&c.image, &cfg).unwrap(), None).unwrap();
        let inter = region.mask.pixels().filter(|&(x, y)| c.mask.get(x, y)).count() as f64;
        let union = (region.mask.count() + c.mask.count()) as f64 - inter;
        assert!(inter / union > 0.8, "case {i}: IoU {}", inter / union);
    }
}
