use std::process::{Command, Output};

use coherent_cipher::helstrom::{eve_error, Priors};
use coherent_cipher::EncodingKind;

fn ccipher(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ccipher"))
        .args(args)
        .output()
        .expect("run ccipher")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn field(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("missing {key}"))
        .parse()
        .unwrap()
}

#[test]
fn pe_curve_sixty_four_rows() {
    let o = ccipher(&["pe-curve", "--nbar", "1", "--m-min", "1", "--m-max", "64"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("m,nbar,pe_eve,pe_bob,rank"));
    let rows = csv_rows(&text);
    assert_eq!(rows.len(), 64);
    let ms: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(ms, (1..=64).collect::<Vec<_>>());

    let last: f64 = rows[63][2].parse().unwrap();
    let engine = eve_error(64, 1.0, EncodingKind::Phase, Priors::equal())
        .unwrap()
        .pe;
    assert_eq!(last, engine);
    assert!((last - 0.4929013319549).abs() < 1e-12);
}

#[test]
fn pe_curve_rows_sorted_by_nbar_then_m() {
    let o = ccipher(&[
        "pe-curve", "--nbar", "10,1", "--m-min", "2", "--m-max", "8", "--m-step", "3",
    ]);
    let keys: Vec<(String, String)> = csv_rows(&stdout(&o))
        .into_iter()
        .map(|r| (r[1].clone(), r[0].clone()))
        .collect();
    let want: Vec<(String, String)> = ["1", "10"]
        .iter()
        .flat_map(|n| {
            ["2", "5", "8"]
                .iter()
                .map(move |m| (n.to_string(), m.to_string()))
        })
        .collect();
    assert_eq!(keys, want);
}

#[test]
fn pe_curve_vacuum_is_pure_guessing() {
    let o = ccipher(&["pe-curve", "--nbar", "0", "--m-max", "10"]);
    for r in csv_rows(&stdout(&o)) {
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.5);
    }
}

#[test]
fn pe_curve_rejects_empty_range() {
    let o = ccipher(&["pe-curve", "--m-min", "5", "--m-max", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(o.stdout.is_empty());
}

#[test]
fn probabilities_use_seventeen_significant_digits() {
    let o = ccipher(&["pe-curve", "--nbar", "1", "--m-max", "3"]);
    for r in csv_rows(&stdout(&o)) {
        for p in [&r[2], &r[3]] {
            let mantissa = p.split('e').next().unwrap();
            assert_eq!(mantissa.replace('.', "").len(), 17, "{p}");
        }
    }
}

#[test]
fn bob_error_examples() {
    let o = ccipher(&["bob-error", "--nbar", "0,1,1e6"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().next(), Some("nbar,pe_bob"));
    let rows = csv_rows(&text);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.5);
    assert!((rows[1][1].parse::<f64>().unwrap() - 0.0350632).abs() < 1e-6);
    assert_eq!(rows[2][1], "0.0000000000000000e0");
}

#[test]
fn bob_error_rejects_negative_energy() {
    assert_eq!(
        ccipher(&["bob-error", "--nbar", "-1"]).status.code(),
        Some(2)
    );
}

#[test]
fn simulate_rejects_non_power_of_two() {
    let o = ccipher(&["simulate", "--m", "3", "--nbar", "1", "--bits", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("power of two"), "{err}");
}

#[test]
fn simulate_is_byte_identical() {
    let args = [
        "simulate", "--m", "2", "--nbar", "100", "--bits", "10000", "--seed", "42",
    ];
    let a = ccipher(&args);
    let b = ccipher(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("rng=ChaCha20Rng"));
    assert_eq!(field(&text, "bits"), 10000.0);
}

#[test]
fn simulate_respects_helstrom_bound() {
    let o = ccipher(&[
        "simulate", "--m", "32", "--nbar", "1", "--bits", "100000", "--seed", "7",
    ]);
    let text = stdout(&o);
    let bound = eve_error(32, 1.0, EncodingKind::Phase, Priors::equal())
        .unwrap()
        .pe;
    assert_eq!(field(&text, "analytic_pe_eve_helstrom"), bound);
    assert!(field(&text, "eve_ber") >= bound - 3.0 * field(&text, "eve_se"));
}

#[test]
fn simulate_writes_report_to_file() {
    let path = std::env::temp_dir().join(format!("ccipher-sim-{}.txt", std::process::id()));
    let p = path.to_str().unwrap();
    let o = ccipher(&[
        "simulate", "--m", "4", "--nbar", "1", "--bits", "500", "--out", p,
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let to_stdout = ccipher(&[
        "simulate", "--m", "4", "--nbar", "1", "--bits", "500", "--out", "-",
    ]);
    assert_eq!(written, stdout(&to_stdout));
}

#[test]
fn simulate_accepts_hex_tap_mask() {
    let list = ccipher(&[
        "simulate",
        "--m",
        "4",
        "--nbar",
        "1",
        "--bits",
        "300",
        "--lfsr-taps",
        "16,14,13,11",
    ]);
    let mask = ccipher(&[
        "simulate",
        "--m",
        "4",
        "--nbar",
        "1",
        "--bits",
        "300",
        "--lfsr-taps",
        "0xB400",
    ]);
    assert_eq!(list.stdout, mask.stdout);
    let bad = ccipher(&["simulate", "--m", "4", "--nbar", "1", "--lfsr-seed", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn validate_defaults_pass() {
    let o = ccipher(&["validate"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let rows = csv_rows(&stdout(&o));
    assert_eq!(rows.len(), 2 * 8 * 3);
    assert!(rows.iter().all(|r| r.last().unwrap() == "pass"));
}

#[test]
fn validate_vacuum_is_trivial() {
    let o = ccipher(&["validate", "--nbar", "0", "--max-m", "4"]);
    assert_eq!(o.status.code(), Some(0));
    for r in csv_rows(&stdout(&o)) {
        assert_eq!(r[3].parse::<f64>().unwrap(), 0.5);
        assert_eq!(r[4].parse::<f64>().unwrap(), 0.5);
    }
}

#[test]
fn validate_reports_infeasible_dimension() {
    let o = ccipher(&["validate", "--nbar", "300", "--max-m", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("dimension 60025"), "{err}");
}

#[test]
fn unknown_flags_exit_two() {
    assert_eq!(ccipher(&["pe-curve", "--bogus"]).status.code(), Some(2));
    assert_eq!(ccipher(&[]).status.code(), Some(2));
    assert_eq!(ccipher(&["--help"]).status.code(), Some(0));
}
