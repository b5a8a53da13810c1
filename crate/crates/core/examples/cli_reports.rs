//! Drives the command-line front end in-process and prints its reports.
//!
//! Run with `cargo run --example cli_reports`.

use std::io::Write;

fn main() {
    let dir = std::env::temp_dir().join("agency-cli-example");
    std::fs::create_dir_all(&dir).expect("temp dir");
    let instance = dir.join("instance.json");
    let mut f = std::fs::File::create(&instance).expect("create");
    f.write_all(
        br#"{
  "gammas": [0, 1, 2],
  "rewards": [0, 1, 4],
  "F": [[1, 0, 0], [0, 0.6, 0.4], [0, 0.2, 0.8]],
  "dist": {"kind": "uniform", "low": 0, "high": 1}
}"#,
    )
    .expect("write");
    let path = instance.to_str().expect("utf-8 path");

    for argv in [
        vec![
            "agency",
            "sweep-alpha",
            "--instance",
            path,
            "--steps",
            "5",
            "--format",
            "csv",
        ],
        vec![
            "agency",
            "verify",
            "--instance",
            path,
            "--theorem",
            "upper_n",
            "--format",
            "csv",
        ],
        vec!["agency", "reproduce", "gap", "--n", "6", "--format", "csv"],
    ] {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = agency::cli::run(argv.clone(), &mut out, &mut err);
        println!(
            "$ {}\n{}exit {code}\n",
            argv[1..].join(" "),
            String::from_utf8_lossy(&out)
        );
    }
}
