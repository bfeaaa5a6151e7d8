use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn kspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kspace"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = kspace(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    kspace(args).status.code().expect("exit code")
}

/// Strict read: comma separated, header present, every record complete, all
/// fields plain numbers, newline after the last row.
fn read_csv(text: &str, header: &[&str]) -> Vec<Vec<f64>> {
    assert!(text.ends_with('\n'), "final row not newline-terminated");
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), header);
    reader
        .records()
        .map(|r| {
            r.unwrap()
                .iter()
                .map(|v| {
                    assert!(!v.contains(' ') && !v.is_empty(), "field {v:?}");
                    v.parse::<f64>()
                        .unwrap_or_else(|_| panic!("not a number: {v:?}"))
                })
                .collect()
        })
        .collect()
}

fn json_file(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn tmp() -> (tempfile::TempDir, impl Fn(&str) -> PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().to_path_buf();
    (dir, move |name: &str| base.join(name))
}

#[test]
fn trajectory_b_reaches_asymptote() {
    let (_dir, path) = tmp();
    let out = path("b.csv");
    ok(&[
        "trajectory",
        "--preset",
        "B",
        "--c-end",
        "10000",
        "--out",
        out.to_str().unwrap(),
    ]);
    let rows = read_csv(&std::fs::read_to_string(&out).unwrap(), &["c", "c_p", "k"]);
    let last = rows.last().unwrap();
    assert_eq!(last[0], 10_000.0);
    let side = json_file(&out.with_extension("json"));
    let asym = side["asymptote"]["k_star"].as_f64().unwrap();
    assert!((asym - 0.229).abs() < 0.001, "{asym}");
    assert!((last[2] - asym).abs() <= 0.005);
    assert_eq!(side["scenario"]["cp0"], 200);
    assert_eq!(side["schema_version"], 1);
    assert_eq!(side["diagnostics"]["domain"], "c");
    assert!(side["version"].is_string());
}

#[test]
fn trajectory_a_saturates() {
    let text = ok(&["trajectory", "--preset", "A", "--c-end", "10000"]);
    let rows = read_csv(&text, &["c", "c_p", "k"]);
    assert!(rows.windows(2).all(|w| w[1][2] >= w[0][2]));
    assert!(rows.last().unwrap()[2] > rows[0][2]);
    let (_dir, path) = tmp();
    let out = path("a.csv");
    ok(&[
        "trajectory",
        "--preset",
        "A",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        json_file(&out.with_extension("json"))["asymptote"]["k_star"],
        1.0
    );
}

#[test]
fn trajectory_clean_stays_clean() {
    let text = ok(&[
        "trajectory",
        "--p-err",
        "0",
        "--cp0",
        "0",
        "--b",
        "5",
        "--r-prag",
        "1",
    ]);
    let rows = read_csv(&text, &["c", "c_p", "k"]);
    assert!(rows.iter().all(|r| r[1] == 0.0 && r[2] == 0.0));
}

#[test]
fn trajectory_singular_exit_and_fallback() {
    let out = kspace(&["trajectory", "--preset", "B", "--cp0", "900"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("integrate_in_time"));
    let text = ok(&[
        "trajectory",
        "--preset",
        "B",
        "--cp0",
        "900",
        "--time-domain",
        "--t-end",
        "2000",
    ]);
    let rows = read_csv(&text, &["c", "c_p", "k", "t"]);
    assert_eq!(rows.last().unwrap()[3], 2000.0);
    assert!((rows.last().unwrap()[2] - 0.229).abs() < 0.01);
}

#[test]
fn trajectory_normalized_and_json() {
    let text = ok(&[
        "trajectory",
        "--preset",
        "B",
        "--c-end",
        "2000",
        "--normalize",
    ]);
    let rows = read_csv(&text, &["c", "c_p", "k"]);
    assert_eq!((rows[0][0], rows[0][1]), (1.0, 0.2));
    assert_eq!(rows.last().unwrap()[0], 2.0);
    let doc: Value = serde_json::from_str(&ok(&[
        "trajectory",
        "--preset",
        "B",
        "--c-end",
        "2000",
        "--format",
        "json",
    ]))
    .unwrap();
    assert_eq!(doc["rows"][0]["c"], 1000.0);
    assert_eq!(doc["normalized"], false);
}

#[test]
fn trajectory_plots() {
    let (_dir, path) = tmp();
    let svg = path("b.svg");
    ok(&[
        "trajectory",
        "--preset",
        "B",
        "--emit-plot",
        svg.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&svg).unwrap();
    assert!(text.starts_with("<svg") && text.contains("asymptote"));
    let gp = path("b.gp");
    ok(&[
        "trajectory",
        "--preset",
        "B",
        "--emit-plot",
        gp.to_str().unwrap(),
    ]);
    assert!(std::fs::read_to_string(&gp).unwrap().contains("plot '"));
    read_csv(
        &std::fs::read_to_string(gp.with_extension("csv")).unwrap(),
        &["c", "c_p", "k"],
    );
}

fn fixed_point(args: &[&str]) -> Value {
    let mut all = vec!["fixed-point"];
    all.extend_from_slice(args);
    serde_json::from_str(&ok(&all)).unwrap()
}

#[test]
fn fixed_point_reports() {
    let b = fixed_point(&["--preset", "B"]);
    for key in ["k_up", "k_down"] {
        assert!((b[key].as_f64().unwrap() - 0.229).abs() <= 0.001);
    }
    assert_eq!(b["bistable"], false);
    assert!(b["residuals"]["up"].as_f64().unwrap().abs() <= 1e-9);
    assert_eq!(b["brackets"]["down"].as_array().unwrap().len(), 2);

    let h = fixed_point(&["--preset", "B", "--r-prag", "0.5", "--r-comp", "8"]);
    assert!((h["k_up"].as_f64().unwrap() - 0.031).abs() < 0.001);
    assert_eq!(h["k_down"], 1.0);
    assert_eq!(h["bistable"], true);

    assert_eq!(fixed_point(&["--p-err", "0"])["k_up"], 0.0);
}

fn sweep(args: &[&str]) -> Vec<Vec<f64>> {
    let mut all = vec!["sweep"];
    all.extend_from_slice(args);
    read_csv(&ok(&all), &["r_prag", "r_comp", "k_final"])
}

#[test]
fn sweep_examples() {
    let rows = sweep(&[
        "--p-err",
        "0.1",
        "--b",
        "7",
        "--r-prag-axis",
        "0:4:9",
        "--r-comp-axis",
        "0:4:9",
        "--k0",
        "contaminated",
    ]);
    assert_eq!(rows.len(), 81);
    assert!(rows.iter().filter(|r| r[0] <= 0.5).all(|r| r[2] == 1.0));
    assert!(rows.iter().any(|r| r[2] < 0.5));

    let rows = sweep(&["--k0", "clean", "--p-err", "0"]);
    assert!(!rows.is_empty() && rows.iter().all(|r| r[2] == 0.0));

    let rows = sweep(&[
        "--r-prag-axis",
        "0:0:1",
        "--r-comp-axis",
        "0:0:1",
        "--k0",
        "clean",
        "--p-err",
        "0.05",
        "--b",
        "11",
    ]);
    assert_eq!(rows, vec![vec![0.0, 0.0, 1.0]]);
}

#[test]
fn sweep_files_and_heatmap() {
    let (_dir, path) = tmp();
    let out = path("s.csv");
    let svg = path("s.svg");
    ok(&[
        "sweep",
        "--p-err",
        "0.1",
        "--b",
        "7",
        "--r-prag-axis",
        "0:2:3",
        "--r-comp-axis",
        "0:4:3",
        "--out",
        out.to_str().unwrap(),
        "--emit-plot",
        svg.to_str().unwrap(),
    ]);
    let side = json_file(&out.with_extension("json"));
    assert_eq!(side["r_comp_axis"], serde_json::json!([0.0, 2.0, 4.0]));
    assert_eq!(side["start"]["choice"], "contaminated");
    assert_eq!(
        std::fs::read_to_string(&svg)
            .unwrap()
            .matches("<title>")
            .count(),
        9
    );
    assert_eq!(
        code(&["sweep", "--p-err", "0.1", "--r-prag-axis", "0:1"]),
        1
    );
    assert_eq!(
        code(&["sweep", "--p-err", "0.1", "--r-prag-axis", "-1:1:3"]),
        2
    );
}

const SIM_HEADER: [&str; 5] = ["step", "c_mean", "k_min", "k_max", "k_mean"];

#[test]
fn simulate_single_epoch_band_collapses() {
    let rows = read_csv(
        &ok(&[
            "simulate", "--preset", "B", "--epochs", "1", "--steps", "2000",
        ]),
        &SIM_HEADER,
    );
    assert_eq!(rows.len(), 21);
    assert!(rows.iter().all(|r| r[2] == r[3] && r[3] == r[4]));
    assert_eq!(rows[0][1], 1000.0);
}

#[test]
fn simulate_sidecar_has_seeds() {
    let (_dir, path) = tmp();
    let out = path("sim.csv");
    ok(&[
        "simulate",
        "--preset",
        "B",
        "--steps",
        "500",
        "--epochs",
        "4",
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
    ]);
    let side = json_file(&out.with_extension("json"));
    assert_eq!(side["seed"], 42);
    assert_eq!(side["epoch_seeds"].as_array().unwrap().len(), 4);
    assert!(side.get("threads").is_none());
}

#[test]
fn simulate_c_overlaps_b_mean_field() {
    let (_dir, path) = tmp();
    let traj = path("b.csv");
    ok(&[
        "trajectory",
        "--preset",
        "B",
        "--c-end",
        "6000",
        "--out",
        traj.to_str().unwrap(),
    ]);
    let ode = read_csv(&std::fs::read_to_string(&traj).unwrap(), &["c", "c_p", "k"]);
    let ode_k = |c: f64| {
        let i = ode.partition_point(|r| r[0] < c).clamp(1, ode.len() - 1);
        let (a, b) = (&ode[i - 1], &ode[i]);
        a[2] + (b[2] - a[2]) * (c - a[0]) / (b[0] - a[0])
    };
    let env = read_csv(
        &ok(&[
            "simulate", "--preset", "C", "--steps", "9000", "--epochs", "20",
        ]),
        &SIM_HEADER,
    );
    let window: Vec<_> = env.iter().filter(|r| r[1] <= 5000.0).collect();
    let inside = window
        .iter()
        .filter(|r| (r[2] - 0.02..=r[3] + 0.02).contains(&ode_k(r[1])))
        .count();
    assert!(
        inside as f64 >= 0.95 * window.len() as f64,
        "{inside}/{}",
        window.len()
    );
}

fn compare(args: &[&str]) -> Value {
    let mut all = vec!["compare"];
    all.extend_from_slice(args);
    serde_json::from_str(&ok(&all)).unwrap()
}

#[test]
fn compare_examples() {
    let b = compare(&[
        "--preset", "B", "--steps", "9000", "--epochs", "20", "--seed", "7",
    ]);
    assert!(b["containment_fraction"].as_f64().unwrap() >= 0.95);
    assert_eq!(b["pass"], true);

    let (_dir, path) = tmp();
    let out = path("a.csv");
    let a = compare(&[
        "--preset",
        "A",
        "--steps",
        "9000",
        "--epochs",
        "20",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(a["pass"], true);
    let rows = read_csv(
        &std::fs::read_to_string(&out).unwrap(),
        &["step", "c_mean", "k_ode", "k_min", "k_max"],
    );
    let (first, last) = (&rows[0], rows.last().unwrap());
    assert!(
        last[2] > first[2] + 0.3 && last[3] > first[3] + 0.3,
        "{first:?} {last:?}"
    );

    let z = compare(&[
        "--p-err", "0", "--cp0", "0", "--b", "7", "--steps", "1000", "--epochs", "3",
    ]);
    assert_eq!(z["max_deviation"], 0.0);
}

#[test]
fn scenario_file_and_exit_codes() {
    let (_dir, path) = tmp();
    let file = path("b.txt");
    std::fs::write(
        &file,
        "p_err = 0.1\nb_min = 7\nb_max = 7\nr_prag = 2\nr_comp = 2\nc0 = 1000\ncp0 = 200\n",
    )
    .unwrap();
    let from_file = fixed_point(&["--scenario", file.to_str().unwrap()]);
    let from_preset = fixed_point(&["--preset", "B"]);
    assert_eq!(from_file["k_up"], from_preset["k_up"]);
    assert_eq!(from_file["scenario"], from_preset["scenario"]);

    std::fs::write(&file, "p_err = 0.1\nbogus = 1\n").unwrap();
    let out = kspace(&["fixed-point", "--scenario", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["trajectory", "--preset", "Z"]), 1);
    assert_eq!(
        code(&["trajectory", "--b", "3", "--b-min", "2", "--p-err", "0.1"]),
        1
    );
    assert_eq!(
        code(&[
            "fixed-point",
            "--scenario",
            path("missing.txt").to_str().unwrap()
        ]),
        1
    );
    assert_eq!(code(&["fixed-point"]), 2);
    assert_eq!(code(&["fixed-point", "--p-err", "1.5"]), 2);
    assert_eq!(
        code(&[
            "trajectory",
            "--p-err",
            "0.1",
            "--b-min",
            "2",
            "--b-max",
            "5"
        ]),
        2
    );
    assert_eq!(code(&["simulate", "--preset", "B", "--threads", "0"]), 1);
}

#[test]
fn outputs_are_replaced_atomically() {
    let (dir, path) = tmp();
    let out = path("x.csv");
    for _ in 0..2 {
        ok(&[
            "simulate",
            "--preset",
            "B",
            "--steps",
            "200",
            "--epochs",
            "2",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    let names: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    assert_eq!(names.len(), 2, "{names:?}");
}
