use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use mixscan::hocr::render_hocr;
use mixscan::imaging::{RasterImage, WHITE};
use mixscan::pipeline::{PipelineConfig, StageToggles};
use mixscan::recognizers::{RecognizerKind, RecognizerSpec};
use mixscan::{BBox, WordBox};

const TEXT: [&[&str]; 2] = [&["a", "move", "to", "stop"], &["more", "labour", "peers"]];

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mixscan"));
    c.env_remove("TMIXT_CONFIG");
    c
}

/// A page of ink blocks, one per word, with `marker` dark pixels in the top
/// row so pages differ.
fn page(marker: u32) -> (RasterImage, String) {
    let mut img = RasterImage::filled(400, 120, WHITE);
    for x in 0..marker {
        img.set(x, 0, 0);
    }
    let mut words = Vec::new();
    for (li, line) in TEXT.iter().enumerate() {
        let mut x = 20;
        for (wi, w) in line.iter().enumerate() {
            let bbox = BBox::new(x, 20 + 40 * li as u32, x + 10 * w.len() as u32, 32 + 40 * li as u32).unwrap();
            for yy in bbox.y0..bbox.y1 {
                for xx in bbox.x0..bbox.x1 {
                    img.set(xx, yy, 0);
                }
            }
            words.push(WordBox { text: w.to_string(), bbox, line_index: li, word_index: wi, confidence: None });
            x = bbox.x1 + 20;
        }
    }
    let hocr = render_hocr(&BBox::new(0, 0, img.width(), img.height()).unwrap(), &words);
    (img, hocr)
}

/// Writes `pages` page images into `dir/in`, labels into `dir/labels`, and a
/// mock config into `dir/config.json`.
fn setup(dir: &Path, pages: u32) -> std::path::PathBuf {
    let input = dir.join("in");
    let labels = dir.join("labels");
    std::fs::create_dir_all(&input).unwrap();
    std::fs::create_dir_all(&labels).unwrap();
    let mut script = BTreeMap::new();
    for p in 0..pages {
        let (img, hocr) = page(p + 1);
        img.save_pgm(input.join(format!("p{p}.pgm"))).unwrap();
        script.insert(img.fingerprint(), hocr);
        let label = TEXT.iter().map(|l| l.join(" ")).collect::<Vec<_>>().join("\n") + "\n";
        std::fs::write(labels.join(format!("p{p}.txt")), label).unwrap();
    }
    let words: Vec<&str> = TEXT.iter().flat_map(|l| l.iter().copied()).collect();
    std::fs::write(dir.join("words.txt"), words.join("\n")).unwrap();
    let mut cfg = PipelineConfig::new(
        RecognizerSpec::mock(RecognizerKind::MachinePrinted, script),
        RecognizerSpec::mock(RecognizerKind::Handwritten, BTreeMap::new()),
    );
    cfg.dictionary_paths = vec!["words.txt".into()];
    cfg.stages = StageToggles { enhance: false, deskew: false, rotate_select: false };
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&cfg).unwrap()).unwrap();
    path
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn transcribe_prints_text() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 1);
    let out = bin().arg("--config").arg(&cfg).arg("transcribe").arg(dir.path().join("in/p0.pgm")).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(stdout(&out), "a move to stop\nmore labour peers\n");
}

#[test]
fn transcribe_reads_config_from_env_and_emits_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 1);
    let out = bin()
        .env("TMIXT_CONFIG", &cfg)
        .args(["transcribe", "--json", "--nomination", "context"])
        .arg(dir.path().join("in/p0.pgm"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let record = mixscan::PageRecord::from_json(&stdout(&out)).unwrap();
    assert_eq!(record.options.len(), 7);
}

#[test]
fn run_then_evaluate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 3);
    let out_dir = dir.path().join("out");
    let run = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("run")
        .arg(dir.path().join("in"))
        .arg("--labels")
        .arg(dir.path().join("labels"))
        .arg("--out")
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(stdout(&run).contains("Levenshtein"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["per_doc"].as_object().unwrap().len(), 3);
    assert_eq!(report["corpus"]["lev_accuracy"], 1.0);

    let eval = bin().arg("evaluate").arg(&out_dir).arg(dir.path().join("labels")).arg("--json").output().unwrap();
    assert!(eval.status.success());
    let eval: serde_json::Value = serde_json::from_str(&stdout(&eval)).unwrap();
    assert_eq!(eval["corpus"]["f_score"], 1.0);
    assert_eq!(eval["options_fractions"][0], 1.0);

    let rep = bin().arg("report").arg(&out_dir).output().unwrap();
    assert!(rep.status.success());
    assert_eq!(stdout(&rep), "pages\t3\nsize1\t1.0000\nsize3\t0.0000\nsize4\t0.0000\n");
}

#[test]
fn partial_failure_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 2);
    std::fs::write(dir.path().join("in/zz.pgm"), b"P5\n2 2\n255\n").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("run")
        .arg(dir.path().join("in"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed zz"));
    assert!(dir.path().join("out/p1.txt").exists());
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("x.pgm");
    RasterImage::filled(4, 4, WHITE).save_pgm(&img).unwrap();
    let missing = bin().arg("transcribe").arg(&img).output().unwrap();
    assert_eq!(missing.status.code(), Some(2));

    let cfg = setup(dir.path(), 1);
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    json["rotation_candidates"] = serde_json::json!([0, 45]);
    std::fs::write(&cfg, json.to_string()).unwrap();
    let bad = bin().arg("--config").arg(&cfg).arg("transcribe").arg(&img).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("rotation"));
}

#[test]
fn build_labels_from_forms() {
    let dir = tempfile::tempdir().unwrap();
    let forms = dir.path().join("forms");
    std::fs::create_dir_all(&forms).unwrap();
    std::fs::write(forms.join("f1.txt"), "header\nOCR:\nA move to stop.\nCSR:\nA move\nto stop .\n").unwrap();
    let out = dir.path().join("labels");
    let status = bin().arg("build-labels").arg("--iam-dir").arg(&forms).arg("--out").arg(&out).output().unwrap();
    assert!(status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("1 labels"));
    assert_eq!(std::fs::read_to_string(out.join("f1.txt")).unwrap(), "A move to stop .\nA move\nto stop .\n");
    assert!(out.join("f1.json").exists());
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = setup(dir.path(), 1);
    let img = dir.path().join("in/p0.pgm");
    let bad = bin().arg("--config").arg(&cfg).args(["transcribe", "--rotation-candidates", "0,45"]).arg(&img).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    // an empty dictionary makes every word fail spell checking
    std::fs::write(dir.path().join("empty.txt"), "").unwrap();
    let out = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("transcribe")
        .arg("--dictionary-path")
        .arg(dir.path().join("empty.txt"))
        .arg("--json")
        .arg(&img)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let record = mixscan::PageRecord::from_json(&stdout(&out)).unwrap();
    assert!(record.options.values().all(|o| o.size().unwrap() == mixscan::OptionsSize::Four));
}
