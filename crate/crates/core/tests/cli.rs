use std::process::Command;

use tutorbot::augment::{write_wav, Waveform};

fn tutorbot() -> Command {
    Command::new(env!("CARGO_BIN_EXE_tutorbot"))
}

#[test]
fn simulate_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let status = tutorbot()
        .args(["simulate", "--seed", "2", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("sim_2.tsv").exists());
    assert!(out.join("sim_2.timeline.jsonl").exists());

    let json = dir.path().join("report.json");
    let run = tutorbot()
        .args(["evalkit", "report", "--tolerance", "0.05", "--gold"])
        .arg(&out)
        .arg("--logs")
        .arg(out.join("logs"))
        .arg("--json")
        .arg(&json)
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = String::from_utf8(run.stdout).unwrap();
    assert!(table.contains("overall"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(json).unwrap()).unwrap();
    assert_eq!(report["tolerance"], 0.05);
    assert_eq!(report["counts"]["total"], 10);
}

#[test]
fn augment_writes_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let tone = Waveform::new((0..8000).map(|i| 0.2 * (i as f64 * 0.05).sin()).collect(), 16000);
    let noise = Waveform::new((0..16000).map(|i| 0.3 * ((i * 7919) % 200) as f64 / 100.0 - 0.3).collect(), 16000);
    write_wav(&dir.path().join("a.wav"), &tone).unwrap();
    write_wav(&dir.path().join("noise.wav"), &noise).unwrap();
    std::fs::write(dir.path().join("list.txt"), "a.wav\n").unwrap();
    let out = dir.path().join("out");
    let status = tutorbot()
        .args(["augment", "--levels", "5,10,20", "--seed", "4", "--noise"])
        .arg(dir.path().join("noise.wav"))
        .arg("--out")
        .arg(&out)
        .arg(dir.path().join("list.txt"))
        .status()
        .unwrap();
    assert!(status.success());
    for level in ["5", "10", "20"] {
        assert!(out.join(format!("a.snr{level}.wav")).exists());
    }
}

#[test]
fn broker_port_from_environment_is_rejected_when_invalid() {
    let run = tutorbot()
        .args(["broker"])
        .env("PORTNET_BROKER_PORT", "not-a-port")
        .output()
        .unwrap();
    assert!(!run.status.success());
}
