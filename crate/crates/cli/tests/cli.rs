//! End-to-end tests of the `logsan` binary: exit codes, file handling,
//! configuration precedence and the documented subcommand outputs.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const LOANS_CSV: &str = "\
case,activity,timestamp
Case1,Check Loan Req.,2024-01-02T09:05:00.000+00:00
Case1,Negotiate rate,2024-01-02T10:04:00.000+00:00
Case1,Set up contract,2024-01-02T10:45:00.000+00:00
Case1,Inform client,2024-01-02T14:08:00.000+00:00
Case2,Check Loan Req.,2024-01-03T11:14:00.000+00:00
Case2,Calculate rate,2024-01-03T11:22:00.000+00:00
Case2,Set up contract,2024-01-03T12:02:00.000+00:00
Case2,Mail contract,2024-01-03T13:27:00.000+00:00
Case3,Check Loan Req.,2024-01-04T08:11:00.000+00:00
Case3,Report fraud,2024-01-04T08:34:00.000+00:00
Case3,Block account,2024-01-04T08:38:00.000+00:00
Case3,Inform client,2024-01-04T09:24:00.000+00:00
";

fn logsan(args: &[&str]) -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_logsan"));
    cmd.args(args);
    cmd.env("RUST_LOG", "off");
    cmd.env_remove("LOGSAN_DATA_DIR");
    cmd
}

fn run(args: &[&str]) -> Output {
    logsan(args).output().expect("binary runs")
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn write_fixture(dir: &Path) -> PathBuf {
    let path = dir.join("loans.csv");
    std::fs::write(&path, LOANS_CSV).unwrap();
    path
}

/// case id → activity sequence, straight from an output CSV in default columns.
fn variants_of_csv(text: &str) -> HashMap<String, Vec<String>> {
    let mut traces: HashMap<String, Vec<String>> = HashMap::new();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    for record in reader.records() {
        let record = record.unwrap();
        traces
            .entry(record[0].to_string())
            .or_default()
            .push(record[1].to_string());
    }
    traces
}

#[test]
fn help_and_version_exit_zero() {
    assert_eq!(exit_code(&run(&["--help"])), 0);
    assert_eq!(exit_code(&run(&["--version"])), 0);
    assert_eq!(exit_code(&run(&["anonymize", "--help"])), 0);
}

#[test]
fn usage_errors_exit_one_with_a_diagnostic() {
    let output = run(&["sweep"]);
    assert_eq!(exit_code(&output), 1);
    assert!(stderr(&output).contains("--in"), "{}", stderr(&output));

    let output = run(&["--bogus-flag"]);
    assert_eq!(exit_code(&output), 1);
    assert!(stderr(&output).to_lowercase().contains("usage"));

    let output = run(&["frobnicate"]);
    assert_eq!(exit_code(&output), 1);
}

#[test]
fn data_errors_exit_two() {
    let output = run(&["stats", "--in", "/definitely/not/here.csv"]);
    assert_eq!(exit_code(&output), 2);
    assert!(stderr(&output).contains("not/here.csv"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "just,some\nnoise,rows\n").unwrap();
    let output = run(&["stats", "--in", bad.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn stats_prints_the_summary_row() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let output = run(&["stats", "--in", input.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0);
    assert_eq!(
        stdout(&output).trim(),
        "cases=3 variants=3 avg_cases_per_variant=1.0 max_cases_per_variant=1 activities=8 events=12"
    );
}

#[test]
fn anonymize_output_meets_the_k_postcondition() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out = dir.path().join("anon.csv");
    let report = dir.path().join("merges.csv");
    let output = run(&[
        "anonymize",
        "--in",
        input.to_str().unwrap(),
        "--k",
        "2",
        "--t",
        "1.0",
        "--distance",
        "levenshtein",
        "--out",
        out.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));

    let traces = variants_of_csv(&std::fs::read_to_string(&out).unwrap());
    assert_eq!(traces.len(), 3, "all cases survive");
    let mut counts: HashMap<Vec<String>, usize> = HashMap::new();
    for sequence in traces.values() {
        *counts.entry(sequence.clone()).or_default() += 1;
    }
    assert!(counts.values().all(|&c| c >= 2), "{counts:?}");

    let report_text = std::fs::read_to_string(&report).unwrap();
    assert!(report_text.starts_with("case,source_variant,target_variant,distance"));
    assert_eq!(report_text.lines().count(), 3, "two merges recorded");
}

#[test]
fn anonymize_writes_xes_when_the_out_extension_says_so() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let out = dir.path().join("anon.xes");
    let output = run(&[
        "anonymize",
        "--in",
        input.to_str().unwrap(),
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("<?xml"));

    // The XES file parses back with the same trace count.
    let output = run(&["stats", "--in", out.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 0);
    assert!(stdout(&output).contains("cases=3"));
}

#[test]
fn train_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let m1 = dir.path().join("m1.txt");
    let m2 = dir.path().join("m2.txt");
    let m3 = dir.path().join("m3.txt");
    for (path, seed) in [(&m1, "7"), (&m2, "7"), (&m3, "8")] {
        let output = run(&[
            "train",
            "--in",
            input.to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
            "--epochs",
            "5",
            "--seed",
            seed,
        ]);
        assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    }
    let b1 = std::fs::read(&m1).unwrap();
    assert!(String::from_utf8_lossy(&b1).starts_with("logsan-actvec v1"));
    assert_eq!(b1, std::fs::read(&m2).unwrap(), "same seed, same bytes");
    assert_ne!(b1, std::fs::read(&m3).unwrap(), "different seed differs");
}

#[test]
fn evaluate_reports_identity_values_for_an_unchanged_log() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let report = dir.path().join("metrics.csv");
    let output = run(&[
        "evaluate",
        "--original",
        input.to_str().unwrap(),
        "--anonymized",
        input.to_str().unwrap(),
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = std::fs::read_to_string(&report).unwrap();
    assert!(text.starts_with("metric,value,detail"));
    assert!(text.contains("behavioural_appropriateness,1,"));
    assert!(text.contains("truly_sampled_score,100,"));
    assert!(text.contains("total_duration_error,0,"));
    assert!(text.contains("top_1_follower_share,"));
}

#[test]
fn evaluate_adds_embedding_diagnostics_when_a_model_is_given() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let model = dir.path().join("model.txt");
    let output = run(&[
        "train",
        "--in",
        input.to_str().unwrap(),
        "--out",
        model.to_str().unwrap(),
        "--epochs",
        "5",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let output = run(&[
        "evaluate",
        "--original",
        input.to_str().unwrap(),
        "--anonymized",
        input.to_str().unwrap(),
        "--embedding-model",
        model.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("event_distance_avg,"), "{text}");
    assert!(text.contains("event_distance_stdev,"), "{text}");
}

#[test]
fn sweep_result_csv_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let sweep = |out: &Path, comparison: &Path| {
        let output = run(&[
            "sweep",
            "--in",
            input.to_str().unwrap(),
            "--k-values",
            "1,2",
            "--t-values",
            "0.5,1.0",
            "--epochs",
            "5",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
            "--comparison",
            comparison.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    };
    let (s1, c1) = (dir.path().join("s1.csv"), dir.path().join("c1.csv"));
    let (s2, c2) = (dir.path().join("s2.csv"), dir.path().join("c2.csv"));
    sweep(&s1, &c1);
    sweep(&s2, &c2);
    assert_eq!(std::fs::read(&s1).unwrap(), std::fs::read(&s2).unwrap());
    assert_eq!(std::fs::read(&c1).unwrap(), std::fs::read(&c2).unwrap());

    let text = std::fs::read_to_string(&s1).unwrap();
    assert_eq!(text.lines().count(), 9, "header + 2 measures × 4 settings");
    assert!(text.starts_with(
        "log,measure,k,t_close,behavioural_appropriateness,truly_sampled_score,\
         total_duration_error,merges,truncated,dropped,note"
    ));
    let comparison_text = std::fs::read_to_string(&c1).unwrap();
    assert_eq!(comparison_text.lines().count(), 5);
}

#[test]
fn relative_inputs_fall_back_to_the_data_directory() {
    let dir = tempfile::tempdir().unwrap();
    write_fixture(dir.path());
    let output = logsan(&["stats", "--in", "loans.csv"])
        .env("LOGSAN_DATA_DIR", dir.path())
        .current_dir("/")
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).contains("cases=3"));

    // Without the variable the same relative path is a data error.
    let output = logsan(&["stats", "--in", "loans.csv"])
        .current_dir("/")
        .output()
        .unwrap();
    assert_eq!(exit_code(&output), 2);
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let config = dir.path().join("run.conf");
    std::fs::write(
        &config,
        format!(
            "# experiment defaults\nin = {}\nk = 64\nt = 1.0\ndistance = levenshtein\n",
            input.display()
        ),
    )
    .unwrap();

    // k = 64 exceeds the trace count, so the config alone empties the log.
    let out = dir.path().join("from-config.csv");
    let output = run(&[
        "anonymize",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert_eq!(variants_of_csv(&std::fs::read_to_string(&out).unwrap()).len(), 0);

    // The --k flag overrides the config value.
    let output = run(&[
        "anonymize",
        "--config",
        config.to_str().unwrap(),
        "--k",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert_eq!(variants_of_csv(&std::fs::read_to_string(&out).unwrap()).len(), 3);
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_fixture(dir.path());
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "kay = 2\n").unwrap();
    let output = run(&[
        "anonymize",
        "--config",
        config.to_str().unwrap(),
        "--in",
        input.to_str().unwrap(),
        "--k",
        "2",
    ]);
    assert_eq!(exit_code(&output), 1);
    assert!(stderr(&output).contains("kay"), "{}", stderr(&output));
}

#[test]
fn custom_csv_columns_are_honored() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("renamed.csv");
    std::fs::write(
        &path,
        "Patient,Step,When\nP1,Admit,2024-05-01 08:00:00\nP1,Treat,2024-05-01 09:30:00\n",
    )
    .unwrap();
    let output = run(&[
        "stats",
        "--in",
        path.to_str().unwrap(),
        "--case-column",
        "Patient",
        "--activity-column",
        "Step",
        "--timestamp-column",
        "When",
        "--timestamp-format",
        "%Y-%m-%d %H:%M:%S",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", stderr(&output));
    assert!(stdout(&output).contains("cases=1"));
}
