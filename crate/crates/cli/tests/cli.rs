use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coboson(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coboson"))
        .args(args)
        .current_dir(dir)
        .env_remove("COBOSON_PRECISION")
        .env_remove("COBOSON_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Data rows of a comma-separated output, header lines and column names dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn small_spectrum(dir: &Path) {
    let out = coboson(
        &["spectrum", "synth", "--kind", "custom", "--weights", "0.4,0.25,0.15,0.1,0.06,0.04", "-o", "small.tsv"],
        dir,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn synth_refuses_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["spectrum", "synth", "--kind", "geometric", "--ratio", "0.9", "--size", "1000", "-o", "spec.tsv"];
    assert_eq!(code(&coboson(&args, dir.path())), 0);
    let first = fs::read(dir.path().join("spec.tsv")).unwrap();
    assert_eq!(code(&coboson(&args, dir.path())), 2);
    assert_eq!(fs::read(dir.path().join("spec.tsv")).unwrap(), first);
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&coboson(&forced, dir.path())), 0);
    assert_eq!(fs::read(dir.path().join("spec.tsv")).unwrap(), first);
}

#[test]
fn purity_sweep_symmetric_in_imbalance() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = ["spectrum", "synth", "--kind", "geometric", "--ratio", "0.9", "--size", "1000", "-o", "spec.tsv"];
    assert_eq!(code(&coboson(&synth, d)), 0);
    let out = coboson(&["purity", "--spectrum", "spec.tsv", "--n", "100", "--sweep-m", "-o", "fig1b.csv"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = fs::read_to_string(d.join("fig1b.csv")).unwrap();
    assert!(text.contains("# spectrum_fingerprint = "));
    assert!(text.contains("\nM,imbalance,purity,lower_bound,"));
    let r = rows(&text);
    assert_eq!(r.len(), 101);
    let log_p: Vec<f64> = r.iter().map(|row| row[4].parse().unwrap()).collect();
    let log_b: Vec<f64> = r.iter().map(|row| row[5].parse().unwrap()).collect();
    for m in 0..=100 {
        assert!((log_p[m] - log_p[100 - m]).abs() < 1e-9, "M={m}");
        assert!(log_p[m] >= log_b[m] - 1e-12, "M={m}");
    }
    assert_eq!(log_p[0], 0.0);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_spectrum(d);
    // usage: missing input, bad knob, unknown preset
    assert_eq!(code(&coboson(&["density", "--n", "2"], d)), 2);
    assert_eq!(code(&coboson(&["purity", "--spectrum", "small.tsv", "--n", "3", "--m", "5"], d)), 2);
    assert_eq!(code(&coboson(&["density", "--preset", "7", "--n", "2"], d)), 2);
    assert_eq!(code(&coboson(&["bell", "--spectrum", "small.tsv", "--j", "0", "--n", "2"], d)), 2);
    // numeric range: more pairs than states
    assert_eq!(code(&coboson(&["density", "--spectrum", "small.tsv", "--n", "7"], d)), 3);
    // oracle cap
    let big = ["spectrum", "synth", "--kind", "flat", "--size", "20", "-o", "big.tsv"];
    assert_eq!(code(&coboson(&big, d)), 0);
    let out = coboson(&["purity", "--spectrum", "big.tsv", "--n", "3", "--m", "1", "--check-oracle"], d);
    assert_eq!(code(&out), 4);
    // missing input file
    assert_eq!(code(&coboson(&["density", "--spectrum", "nope.tsv", "--n", "2"], d)), 1);
}

#[test]
fn precision_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_spectrum(d);
    let run = |mode: &str| {
        Command::new(env!("CARGO_BIN_EXE_coboson"))
            .args(["purity", "--spectrum", "small.tsv", "--n", "3", "--m", "1"])
            .current_dir(d)
            .env("COBOSON_PRECISION", mode)
            .output()
            .unwrap()
    };
    let bad = run("quad");
    assert_eq!(code(&bad), 2);
    let double = run("double");
    assert_eq!(code(&double), 0);
    assert!(stdout(&double).contains("# precision = double\n"));
}

#[test]
fn oracle_check_passes_on_small_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_spectrum(d);
    let out = coboson(&["purity", "--spectrum", "small.tsv", "--n", "3", "--sweep-m", "--check-oracle"], d);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for row in rows(&stdout(&out)) {
        let (p, o): (f64, f64) = (row[2].parse().unwrap(), row[7].parse().unwrap());
        assert!((p - o).abs() <= 1e-9 * o);
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_spectrum(d);
    let args = ["purity", "--spectrum", "small.tsv", "--n", "4", "--sweep-m"];
    let one = Command::new(env!("CARGO_BIN_EXE_coboson"))
        .args(args)
        .current_dir(d)
        .env("COBOSON_THREADS", "1")
        .output()
        .unwrap();
    let many = coboson(&[&args[..], &["--threads", "4"]].concat(), d);
    assert_eq!(code(&one), 0);
    assert_eq!(one.stdout, many.stdout);
}

#[test]
fn bell_sweep_within_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth = ["spectrum", "synth", "--kind", "geometric", "--ratio", "0.95", "--size", "400", "-o", "g.tsv"];
    assert_eq!(code(&coboson(&synth, d)), 0);
    let out = coboson(
        &["bell", "--spectrum", "g.tsv", "--j", "1", "--n-from", "10", "--n-to", "400", "--log-steps", "12", "--bounds"],
        d,
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = rows(&stdout(&out));
    let data: Vec<&Vec<String>> = r.iter().filter(|row| row[5] == "exact").collect();
    assert_eq!(data.len(), 12);
    let tsirelson = 2.0 * 2f64.sqrt();
    let mut last = f64::NEG_INFINITY;
    for row in &data {
        let chsh: f64 = row[4].parse().unwrap();
        assert!(chsh <= tsirelson && chsh >= -tsirelson);
        assert!(chsh >= last - 1e-12, "sweep is monotone for the leading state");
        last = chsh;
    }
    assert_eq!(r.iter().filter(|row| row[5].ends_with("-bound")).count(), 4);

    let approx = coboson(&["bell", "--spectrum", "g.tsv", "--n", "40", "--approx", "--dn1", "1", "--dn2", "1"], d);
    assert_eq!(code(&approx), 0);
    let row = &rows(&stdout(&approx))[0];
    assert_eq!(row[5], "approx");
    assert!(row[6].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn counts_and_density_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_spectrum(d);
    let dist = coboson(&["counts", "--spectrum", "small.tsv", "--n", "3", "--t", "2"], d);
    let p: Vec<f64> = rows(&stdout(&dist)).iter().map(|r| r[1].parse().unwrap()).collect();
    assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let dens = coboson(&["density", "--spectrum", "small.tsv", "--n", "3"], d);
    let nd: Vec<f64> = rows(&stdout(&dens)).iter().map(|r| r[3].parse().unwrap()).collect();
    let mean: f64 = p.iter().enumerate().map(|(k, x)| k as f64 * x).sum();
    assert!((mean - (nd[0] + nd[1])).abs() < 1e-12);
    let joint = coboson(&["counts", "--spectrum", "small.tsv", "--n", "3", "--t", "2", "--joint", "1"], d);
    let total: f64 = rows(&stdout(&joint)).iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn chi_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_spectrum(d);
    let dp = coboson(&["chi", "--spectrum", "small.tsv", "--k", "6"], d);
    let nt = coboson(&["chi", "--spectrum", "small.tsv", "--k", "6", "--method", "newton"], d);
    let (a, b) = (rows(&stdout(&dp)), rows(&stdout(&nt)));
    assert_eq!(a.len(), 7);
    for (x, y) in a.iter().zip(&b) {
        let (x, y): (f64, f64) = (x[1].parse().unwrap(), y[1].parse().unwrap());
        assert!((x - y).abs() < 1e-10 || (x.is_infinite() && y.is_infinite()));
    }
}

#[test]
fn spectrum_formats_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    small_spectrum(d);
    let inspect = |file: &str| {
        let out = coboson(&["spectrum", "inspect", "--spectrum", file], d);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        stdout(&out).lines().find(|l| l.starts_with("# spectrum_fingerprint")).unwrap().to_string()
    };
    let reference = inspect("small.tsv");
    for format in ["plain", "shells"] {
        let name = format!("small.{format}");
        let out = coboson(&["spectrum", "synth", "--kind", "custom", "--weights", "0.4,0.25,0.15,0.1,0.06,0.04", "--format", format, "-o", &name], d);
        assert_eq!(code(&out), 0);
        assert_eq!(inspect(&name), reference);
    }
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = coboson(&["verify"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("criterion,check,status,detail"));
    assert!(!text.contains(",FAIL,"));
}

#[test]
fn figures_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out_dir in [&a, &b] {
        for fig in ["fig1c", "fig5"] {
            let out = coboson(
                &["figures", fig, "--svg", "--n-max", "60", "--out-dir", out_dir.to_str().unwrap()],
                dir.path(),
            );
            assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        }
    }
    for name in ["fig1c.csv", "fig1c.svg", "fig5.csv", "fig5.svg"] {
        let (x, y) = (fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
    let again = coboson(&["figures", "fig1c", "--out-dir", a.to_str().unwrap()], dir.path());
    assert_eq!(code(&again), 2, "existing figure files are not replaced without --force");
}
