use std::path::Path;
use std::process::{Command, Output};

use redund_core::eval::{read_report, ReportFormat};
use redund_core::mask::{write_pbm, GrayGrid, PixelMask};
use redund_core::service::read_manifest;

fn redund(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_redund")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = redund(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn ingest_images_and_masks() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::create_dir_all(d.join("imgs")).unwrap();
    std::fs::create_dir_all(d.join("masks")).unwrap();
    for id in ["b", "a"] {
        GrayGrid::from_fn(6, 4, |x, _| x as f64 / 6.0).unwrap().write_pgm(&d.join("imgs").join(format!("{id}.pgm"))).unwrap();
    }
    for k in [1, 0] {
        let m = PixelMask::from_fn(6, 4, |x, _| x <= k + 1).unwrap();
        write_pbm(&m, &d.join("masks").join(format!("a_{k}.pbm"))).unwrap();
    }
    ok(&["ingest", "--images", &p(d, "imgs"), "--masks", &p(d, "masks"), "--source", "test", "--out", &p(d, "m.jsonl")]);
    let recs = read_manifest(&d.join("m.jsonl")).unwrap();
    assert_eq!(recs.iter().map(|r| r.image_id.as_str()).collect::<Vec<_>>(), ["a", "b"]);
    assert_eq!((recs[0].width, recs[0].height), (6, 4));
    assert_eq!(recs[0].annotations.len(), 2);
    let first = redund_core::mask::decode_rle(&recs[0].annotations[0].mask).unwrap();
    assert_eq!(first.count(), 8);
    assert!(recs[0].resolved_path(d).is_file());
}

#[test]
fn plan_simulate_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--kind", "annotations", "--out", &p(d, "c"), "--images", "20", "--seed", "1"]);
    let m = p(d, "c/manifest.jsonl");

    let stdout = ok(&["plan", "--manifest", &m, "--method", "oracle", "--budget", "6", "--out", &p(d, "plan.csv")]);
    assert!(stdout.contains("6 of 20 images selected"));
    let text = std::fs::read_to_string(d.join("plan.csv")).unwrap();
    assert_eq!(text.lines().count(), 7);
    assert!(text.starts_with("rank,image_id,strategy,budget,extra\n1,"));

    ok(&["simulate", "--manifest", &m, "--method", "oracle", "--budget", "6", "--seeds", "5", "--out", &p(d, "sim.json")]);
    let sim: Vec<serde_json::Value> = read_report(&d.join("sim.json"), ReportFormat::Json).unwrap();
    assert_eq!(sim.len(), 3);
    assert_eq!(sim[1]["seeds_used"], 5);

    ok(&["curve", "--manifest", &m, "--strategy", "perfect", "--measure", "boundary", "--out", &p(d, "perfect.csv")]);
    let rows: Vec<redund_core::allocation::CurveRow> = read_report(&d.join("perfect.csv"), ReportFormat::Csv).unwrap();
    assert_eq!(rows.len(), 21);
    assert!((rows[20].captured_fraction - 1.0).abs() < 1e-12);

    ok(&["report", "--manifest", &m, "--out", &p(d, "div.csv")]);
    let div: Vec<redund_core::eval::DiversityRow> = read_report(&d.join("div.csv"), ReportFormat::Csv).unwrap();
    assert_eq!(div.len(), 100);

    let out = ok(&["report", "--manifest", &m, "--kind", "pr", "--method", "oracle", "--labels", &p(d, "c/labels.tsv"), "--out", &p(d, "pr.csv")]);
    assert!(out.contains("AP 1.0000"));
}

#[test]
fn external_scores_and_sos() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--kind", "annotations", "--out", &p(d, "c"), "--images", "5", "--seed", "2"]);
    let m = p(d, "c/manifest.jsonl");
    let ids: Vec<String> = read_manifest(Path::new(&m)).unwrap().into_iter().map(|r| r.image_id).collect();

    let sub: String = ids
        .iter()
        .enumerate()
        .map(|(i, id)| if i == 2 { format!("{id}\t0.1,0.2,0.5,0.1,0.1\n") } else { format!("{id}\t0.05,0.8,0.05,0.05,0.05\n") })
        .collect();
    std::fs::write(d.join("sub.tsv"), sub).unwrap();
    ok(&["plan", "--manifest", &m, "--strategy", "sos", "--subitizing", &p(d, "sub.tsv"), "--budget", "1", "--out", &p(d, "sos.csv")]);
    let text = std::fs::read_to_string(d.join("sos.csv")).unwrap();
    assert!(text.lines().nth(1).unwrap().contains(&ids[2]));

    let det: String = ids.iter().map(|id| format!("{id}\t0,0,5,5\t0.9\n{id}\t20,20,25,25\t0.5\n")).collect();
    std::fs::write(d.join("det.tsv"), det).unwrap();
    ok(&["score", "--manifest", &m, "--detections", &p(d, "det.tsv"), "--method", "feng", "--update-manifest"]);
    let recs = read_manifest(Path::new(&m)).unwrap();
    assert!(recs.iter().all(|r| (r.scores["feng"] - 0.4).abs() < 1e-12));
}

#[test]
fn usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&["synth", "--kind", "annotations", "--out", &p(d, "c"), "--images", "4"]);
    let m = p(d, "c/manifest.jsonl");
    let out = redund(&["plan", "--manifest", &m, "--budget", "2", "--out", &p(d, "x.csv")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("scores are required"));
    let out = redund(&["plan", "--manifest", &m, "--strategy", "wp-bb", "--budget", "2", "--out", &p(d, "x.csv")]);
    assert!(!out.status.success());
    let out = redund(&["curve", "--manifest", &m, "--strategy", "wp-seg", "--thresholds", "0.5,0.2", "--out", &p(d, "x.csv")]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("thresholds"));
    let out = redund(&["plan", "--manifest", &m, "--strategy", "status-quo", "--budget", "0", "--out", &p(d, "x.csv")]);
    assert!(!out.status.success());
    assert!(!d.join("x.csv").exists());
}
