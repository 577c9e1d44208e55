//! Acceptance criterion 9: identical configurations reproduce reports byte
//! for byte, independent of parallel scheduling.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vrjp"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_to_file(args: &[&str], out: &Path) -> i32 {
    let output = bin()
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    output.status.code().expect("no signal")
}

#[test]
fn acceptance_9_reports_are_byte_identical() {
    let dir = std::env::temp_dir().join("vrjp-acceptance-9");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = configs().join("vrjp_k3.json");
    let cfg = cfg.to_str().unwrap();
    let linear = configs().join("linear_k3.json");
    let linear = linear.to_str().unwrap();

    let runs: Vec<(&str, Vec<&str>)> = vec![
        ("simulate", vec!["simulate", "--config", cfg, "--trials", "50", "--seed", "3"]),
        (
            "exchangeability",
            vec!["exchangeability", "--config", cfg, "--pairs", "300"],
        ),
        (
            "characterize",
            vec!["characterize", "--config", cfg, "--pairs", "200"],
        ),
        (
            "freedman",
            vec!["freedman", "--config", cfg, "--trials", "30000", "--grid", "0.3,0.5"],
        ),
        ("canonicalize", vec!["canonicalize", "--config", linear, "--pairs", "100"]),
    ];

    let mut all_identical = true;
    for (name, args) in &runs {
        let first = dir.join(format!("{name}-1"));
        let second = dir.join(format!("{name}-2"));
        let code_a = run_to_file(args, &first);
        let code_b = run_to_file(args, &second);
        assert_eq!(code_a, code_b, "{name}: exit codes differ across reruns");
        let bytes_a = std::fs::read(&first).unwrap();
        let bytes_b = std::fs::read(&second).unwrap();
        let identical = bytes_a == bytes_b;
        all_identical &= identical;
        assert!(identical, "{name}: reports differ between identical runs");
    }
    println!(
        "acceptance 9 (deterministic reports): {} — {} subcommands byte-identical across reruns",
        if all_identical { "PASS" } else { "FAIL" },
        runs.len()
    );
    assert!(all_identical);
}
