//! Integration tests driving the `aula` binary end to end.

use std::path::Path;
use std::process::{Command, Output};

use aula_core::audio_io::Quadrant;
use aula_core::synth::{gen_quadrant_scenario, gen_voiced, write_wav};

fn aula() -> Command {
    Command::new(env!("CARGO_BIN_EXE_aula"))
}

fn run(cmd: &mut Command) -> (i32, String, String) {
    let Output {
        status,
        stdout,
        stderr,
    } = cmd.output().expect("binary runs");
    (
        status.code().expect("exit code"),
        String::from_utf8(stdout).expect("utf8 stdout"),
        String::from_utf8(stderr).expect("utf8 stderr"),
    )
}

fn json(text: &str) -> serde_json::Value {
    serde_json::from_str(text).expect("stdout is JSON")
}

fn tree(dir: &Path, files: &mut Vec<(String, Vec<u8>)>, root: &Path) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            tree(&path, files, root);
        } else {
            let rel = path.strip_prefix(root).unwrap().display().to_string();
            files.push((rel, std::fs::read(&path).unwrap()));
        }
    }
}

#[test]
fn end_to_end_corpus_training_analysis_correlation() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");

    let (code, out, _) = run(aula()
        .args(["synth", "--lectures", "4", "--clip-seconds", "2.0", "--out"])
        .arg(&corpus));
    assert_eq!(code, 0);
    assert_eq!(json(&out)["lectures_written"], 4);

    let knn = dir.path().join("knn.json");
    let (code, out, _) = run(aula()
        .args(["train", "noise", "--corpus"])
        .arg(&corpus)
        .arg("--out")
        .arg(&knn));
    assert_eq!(code, 0);
    let report = json(&out);
    assert_eq!(report["training_clips"], 80);
    let cv = report["cv_error"].as_f64().unwrap();
    assert!((0.0..=0.2).contains(&cv), "cv_error {cv}");
    assert!(knn.is_file());

    let male = dir.path().join("male.json");
    let female = dir.path().join("female.json");
    let (code, out, _) = run(aula()
        .args(["train", "gender", "--corpus"])
        .arg(&corpus)
        .arg("--out-male")
        .arg(&male)
        .arg("--out-female")
        .arg(&female));
    assert_eq!(code, 0);
    let report = json(&out);
    assert!(report["male_vectors"].as_u64().unwrap() > 0);
    assert!(report["female_vectors"].as_u64().unwrap() > 0);

    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(corpus.join("truth.json")).unwrap()).unwrap();
    let mut record_paths = Vec::new();
    for (lecture_id, expected) in truth.as_object().unwrap() {
        let record_path = dir.path().join(format!("{lecture_id}.json"));
        let (code, _, _) = run(aula()
            .args(["lecture", "--manifest"])
            .arg(corpus.join(lecture_id).join("manifest.json"))
            .arg("--knn")
            .arg(&knn)
            .arg("--gmm-male")
            .arg(&male)
            .arg("--gmm-female")
            .arg(&female)
            .arg("--out")
            .arg(&record_path));
        assert_eq!(code, 0);
        let doc: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&record_path).unwrap()).unwrap();
        let record = &doc["record"];
        assert_eq!(
            record["noise_label"], expected["noise_label"],
            "{lecture_id}"
        );
        assert_eq!(
            record["instructor_gender"], expected["gender"],
            "{lecture_id}"
        );
        let got = record["instructor_level_dba"].as_f64().unwrap();
        let planted = expected["instructor_level_dba"].as_f64().unwrap();
        assert!(
            (got - planted).abs() <= 1.0,
            "{lecture_id}: {got} vs {planted}"
        );
        record_paths.push(record_path);
    }

    let (code, out, _) = run(aula().arg("correlate").args(&record_paths));
    assert_eq!(code, 0);
    let report = json(&out);
    assert_eq!(report["report"]["lectures_used"], 4);
    assert_eq!(
        report["report"]["noise_vs_speech_level"]["diff_proportions"],
        1.0
    );
}

#[test]
fn synth_is_deterministic_and_asks_nothing_of_empty_corpora() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let (code, _, _) = run(aula()
            .args(["synth", "--lectures", "2", "--clip-seconds", "1.0", "--out"])
            .arg(out));
        assert_eq!(code, 0);
    }
    let mut files_a = Vec::new();
    let mut files_b = Vec::new();
    tree(&a, &mut files_a, &a);
    tree(&b, &mut files_b, &b);
    files_a.sort();
    files_b.sort();
    assert_eq!(files_a.len(), 2 * 20 + 2 + 1);
    assert_eq!(files_a, files_b);

    let empty = dir.path().join("empty");
    let (code, _, _) = run(aula()
        .args(["synth", "--lectures", "0", "--out"])
        .arg(&empty));
    assert_eq!(code, 0);
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(empty.join("truth.json")).unwrap()).unwrap();
    assert_eq!(truth, serde_json::json!({}));
}

#[test]
fn features_emits_spl_and_voice_rows() {
    let dir = tempfile::tempdir().unwrap();
    let voiced = dir.path().join("voiced.wav");
    let clip = gen_voiced(150.0, 1.0, 0.2, 16000).unwrap();
    write_wav(&voiced, &clip.samples, 16000).unwrap();

    let (code, out, _) = run(aula().arg("features").arg(&voiced));
    assert_eq!(code, 0);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "clip_id,frame_index,kind,level_dba,pitch,c0,c1,c2,c3,c4,c5,c6,c7,c8,c9,c10"
    );
    let body: Vec<&str> = lines.collect();
    let spl = body.iter().filter(|l| l.contains(",spl,")).count();
    let voice = body.iter().filter(|l| l.contains(",voice,")).count();
    assert!(spl > 0 && voice > 0, "spl {spl} voice {voice}");
    assert_eq!(spl + voice, body.len());

    // silence keeps its level rows but produces no voice rows
    let silent = dir.path().join("silent.wav");
    write_wav(&silent, &vec![0.0; 16000], 16000).unwrap();
    let (code, out, _) = run(aula().arg("features").arg(&silent));
    assert_eq!(code, 0);
    assert!(out.lines().skip(1).all(|l| l.contains(",spl,")));
    assert!(out.lines().count() > 1);

    // a missing input fails before any CSV is written
    let out_path = dir.path().join("dump.csv");
    let (code, stdout, stderr) = run(aula()
        .arg("features")
        .arg(&voiced)
        .arg(dir.path().join("missing.wav"))
        .arg("--out")
        .arg(&out_path));
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
    assert!(!out_path.exists());
    assert!(stderr.contains("missing.wav"));
}

#[test]
fn localize_reports_the_loudest_quadrant() {
    let dir = tempfile::tempdir().unwrap();
    let scene = gen_quadrant_scenario(Quadrant::FrontRight, 0.5, 8000, 11).unwrap();
    let mut paths = Vec::new();
    for (quadrant, clip) in &scene.clips {
        let path = dir.path().join(format!("{}.wav", quadrant.as_str()));
        write_wav(&path, &clip.samples, clip.sample_rate).unwrap();
        paths.push(path);
    }
    let (code, out, stderr) = run(aula()
        .arg("localize")
        .arg("--front-left")
        .arg(&paths[0])
        .arg("--front-right")
        .arg(&paths[1])
        .arg("--back-left")
        .arg(&paths[2])
        .arg("--back-right")
        .arg(&paths[3]));
    assert_eq!(code, 0);
    let report = json(&out);
    assert_eq!(report["report"]["verdict"], "front_right");
    assert_eq!(
        report["report"]["mean_levels_dba"]
            .as_array()
            .unwrap()
            .len(),
        4
    );
    assert!(stderr.contains("verdict: front_right"));

    // four copies of one clip cannot be localized
    let (code, _, stderr) = run(aula()
        .arg("localize")
        .arg("--front-left")
        .arg(&paths[0])
        .arg("--front-right")
        .arg(&paths[0])
        .arg("--back-left")
        .arg(&paths[0])
        .arg("--back-right")
        .arg(&paths[0]));
    assert_eq!(code, 2);
    assert!(stderr.contains("ambiguous"), "{stderr}");

    // missing and duplicated quadrant flags are usage errors
    let (code, _, _) = run(aula()
        .arg("localize")
        .arg("--front-left")
        .arg(&paths[0])
        .arg("--front-right")
        .arg(&paths[1])
        .arg("--back-left")
        .arg(&paths[2]));
    assert_eq!(code, 1);
    let (code, _, _) = run(aula()
        .arg("localize")
        .arg("--front-left")
        .arg(&paths[0])
        .arg("--front-left")
        .arg(&paths[1])
        .arg("--front-right")
        .arg(&paths[1])
        .arg("--back-left")
        .arg(&paths[2])
        .arg("--back-right")
        .arg(&paths[3]));
    assert_eq!(code, 1);
}

#[test]
fn correlate_rejects_a_single_record() {
    let dir = tempfile::tempdir().unwrap();
    let record = dir.path().join("one.json");
    std::fs::write(
        &record,
        r#"{"lecture_id": "solo", "noise_label": "noisy", "instructor_level_dba": 51.0,
            "speech_level": "low", "instructor_gender": "male", "clips": []}"#,
    )
    .unwrap();
    let (code, stdout, stderr) = run(aula().arg("correlate").arg(&record));
    assert_eq!(code, 2);
    assert!(stdout.is_empty());
    assert!(stderr.contains("at least 2"), "{stderr}");
}

#[test]
fn config_file_applies_and_flags_override_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"calibration_offset_db": 80.0, "knn_k": 7}"#).unwrap();

    let (code, out, _) = run(aula()
        .args(["synth", "--lectures", "0", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(dir.path().join("c1")));
    assert_eq!(code, 0);
    let report = json(&out);
    assert_eq!(report["config"]["calibration_offset_db"], 80.0);
    assert_eq!(report["config"]["knn_k"], 7);

    let (code, out, _) = run(aula()
        .args(["synth", "--lectures", "0", "--config"])
        .arg(&cfg)
        .args(["--calibration-offset-db", "90", "--out"])
        .arg(dir.path().join("c2")));
    assert_eq!(code, 0);
    assert_eq!(json(&out)["config"]["calibration_offset_db"], 90.0);

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"not_a_knob": 1}"#).unwrap();
    let (code, _, stderr) = run(aula()
        .args(["synth", "--lectures", "0", "--config"])
        .arg(&bad)
        .arg("--out")
        .arg(dir.path().join("c3")));
    assert_eq!(code, 2);
    assert!(stderr.contains("not_a_knob"), "{stderr}");
}

#[test]
fn usage_and_data_errors_use_distinct_exit_codes() {
    let (code, _, _) = run(aula().arg("frobnicate"));
    assert_eq!(code, 1);
    let (code, _, _) = run(&mut aula());
    assert_eq!(code, 1);
    let (code, out, _) = run(aula().arg("--help"));
    assert_eq!(code, 0);
    assert!(out.contains("localize"));

    let dir = tempfile::tempdir().unwrap();
    let garbage = dir.path().join("model.json");
    std::fs::write(&garbage, "not json").unwrap();
    let (code, _, stderr) = run(aula()
        .args(["lecture", "--manifest"])
        .arg(dir.path().join("missing_manifest.json"))
        .arg("--knn")
        .arg(&garbage)
        .arg("--gmm-male")
        .arg(&garbage)
        .arg("--gmm-female")
        .arg(&garbage));
    assert_eq!(code, 2);
    assert!(!stderr.is_empty());
}
