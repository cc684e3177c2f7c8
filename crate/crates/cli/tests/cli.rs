use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rdseg_core::{
    chan_vese_fitting, initial_indicator, solve_unrestricted, threshold_indicator, GrayImage,
    IntensityPair, SolverParams,
};

fn rdseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rdseg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit status")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// 32x32 disk with its config.
fn disk(dir: &Path, noise: &str) -> PathBuf {
    let out = rdseg(&[
        "synth",
        "--kind",
        "disk",
        "--size",
        "32",
        "--noise",
        noise,
        "--seed",
        "4",
        "--out",
        s(dir),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    dir.join("disk.conf")
}

fn write_pgm(path: &Path, w: usize, h: usize, pixels: Vec<u8>) {
    GrayImage::new(w, h, pixels).unwrap().write(path).unwrap();
}

#[test]
fn synth_is_deterministic_and_noise_free_disk_has_two_levels() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    disk(a.path(), "15");
    disk(b.path(), "15");
    for name in ["disk.pgm", "disk_truth.pgm", "disk.conf"] {
        assert_eq!(
            std::fs::read(a.path().join(name)).unwrap(),
            std::fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    disk(c.path(), "0");
    let img = GrayImage::read(&c.path().join("disk.pgm")).unwrap();
    let mut levels = img.pixels.clone();
    levels.sort_unstable();
    levels.dedup();
    assert_eq!(levels.len(), 2);
}

#[test]
fn concave_synth_writes_markers_and_selective_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = rdseg(&[
        "synth",
        "--kind",
        "concave",
        "--size",
        "48",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&out), 0);
    let conf = std::fs::read_to_string(dir.path().join("concave.conf")).unwrap();
    assert!(conf.contains("fitting = selective"));
    assert!(dir.path().join("concave_markers.txt").exists());
}

#[test]
fn segment_at_zero_is_sign_threshold_and_at_one_is_plain_solver() {
    let dir = tempfile::tempdir().unwrap();
    let conf = disk(dir.path(), "20");
    let img = GrayImage::read(&dir.path().join("disk.pgm")).unwrap();
    let f = chan_vese_fitting(
        &img.to_field(),
        IntensityPair::new(200.0 / 255.0, 60.0 / 255.0).unwrap(),
    );

    let zero = dir.path().join("zero");
    let out = rdseg(&[
        "segment",
        "--config",
        s(&conf),
        "--q",
        "0",
        "--lambda",
        "5",
        "--out",
        s(&zero),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let mask = GrayImage::read(&zero.join("mask.pgm")).unwrap();
    assert_eq!(
        mask.pixels,
        threshold_indicator(&initial_indicator(&f), 0.5).to_gray()
    );

    let one = dir.path().join("one");
    let out = rdseg(&[
        "segment",
        "--config",
        s(&conf),
        "--q",
        "1",
        "--lambda",
        "5",
        "--theta",
        "0.1",
        "--out",
        s(&one),
    ]);
    assert_eq!(code(&out), 0);
    let params = SolverParams {
        lambda: 5.0,
        theta: 0.1,
        ..Default::default()
    };
    let (state, _) = solve_unrestricted(&f, &params).unwrap();
    assert_eq!(
        GrayImage::read(&one.join("u.pgm")).unwrap(),
        GrayImage::from_unit_field(&state.u)
    );
    assert_eq!(
        GrayImage::read(&one.join("mask.pgm")).unwrap().pixels,
        threshold_indicator(&state.u, 0.5).to_gray()
    );
    let report = std::fs::read_to_string(one.join("report.txt")).unwrap();
    assert!(report.contains("converged true"));
    assert!(report.contains("rd_fraction 1"));
}

#[test]
fn segment_reruns_are_byte_identical_and_stay_in_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let conf = disk(dir.path(), "20");
    let runs: Vec<PathBuf> = (0..2).map(|k| dir.path().join(format!("run{k}"))).collect();
    for r in &runs {
        assert_eq!(
            code(&rdseg(&[
                "segment",
                "--config",
                s(&conf),
                "--q",
                "0.4",
                "--out",
                s(r)
            ])),
            0
        );
    }
    for name in ["u.pgm", "mask.pgm", "partition.pgm"] {
        assert_eq!(
            std::fs::read(runs[0].join(name)).unwrap(),
            std::fs::read(runs[1].join(name)).unwrap()
        );
    }
    let mut written: Vec<String> = std::fs::read_dir(&runs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    written.sort();
    assert_eq!(
        written,
        ["mask.pgm", "partition.pgm", "report.txt", "u.pgm"]
    );
    let mut top: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    top.sort();
    assert_eq!(
        top,
        ["disk.conf", "disk.pgm", "disk_truth.pgm", "run0", "run1"]
    );
}

#[test]
fn sweep_writes_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let conf = disk(dir.path(), "20");
    let res = dir.path().join("res");
    let out = rdseg(&[
        "sweep",
        "--config",
        s(&conf),
        "--q-list",
        "0.3,0.3,1",
        "--gt-max-outer",
        "3000",
        "--out",
        s(&res),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(res.join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "q,q_hat,rd_fraction,e1,e2,wall_time_s,outer_iterations,converged"
    );
    assert_eq!(lines.len(), 4);
    let without_time = |l: &str| {
        let mut cols: Vec<&str> = l.split(',').collect();
        cols.remove(5);
        cols.join(",")
    };
    assert_eq!(without_time(lines[1]), without_time(lines[2]));
    let full: Vec<&str> = lines[3].split(',').collect();
    assert_eq!(full[0], "1.0");
    assert!(full[3].parse::<f64>().unwrap() >= 0.9995, "{}", lines[3]);
    let summary = std::fs::read_to_string(res.join("summary.txt")).unwrap();
    assert!(summary.contains("mode serial"));
    assert!(summary.contains("time_saving"));
}

#[test]
fn parallel_sweep_matches_serial_apart_from_times() {
    let dir = tempfile::tempdir().unwrap();
    let conf = disk(dir.path(), "20");
    let strip = |p: PathBuf| -> Vec<String> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let mut cols: Vec<&str> = l.split(',').collect();
                cols.remove(5);
                cols.join(",")
            })
            .collect()
    };
    let mut tables = Vec::new();
    for mode in ["--serial", "--parallel"] {
        let res = dir.path().join(mode.trim_start_matches('-'));
        let args = [
            "sweep",
            "--config",
            s(&conf),
            "--q-list",
            "0,0.5,1",
            "--gt-max-outer",
            "500",
            mode,
            "--out",
            s(&res),
        ];
        assert_eq!(code(&rdseg(&args)), 0);
        tables.push(strip(res.join("sweep.csv")));
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn metrics_values() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    write_pgm(&p("a.pgm"), 2, 3, vec![255, 255, 255, 0, 0, 0]);
    write_pgm(&p("b.pgm"), 2, 3, vec![0, 0, 0, 255, 255, 255]);
    write_pgm(&p("c.pgm"), 2, 3, vec![255, 255, 255, 255, 0, 0]);
    write_pgm(&p("wide.pgm"), 3, 2, vec![0; 6]);
    write_pgm(&p("gray.pgm"), 2, 3, vec![0, 51, 255, 0, 0, 0]);
    let run = |args: &[&str]| {
        let out = rdseg(args);
        (
            code(&out),
            String::from_utf8_lossy(&out.stdout).trim().to_string(),
        )
    };
    assert_eq!(
        run(&["metrics", "e1", s(&p("a.pgm")), s(&p("a.pgm"))]),
        (0, "1.000000".into())
    );
    assert_eq!(
        run(&["metrics", "e1", s(&p("a.pgm")), s(&p("b.pgm"))]),
        (0, "0.000000".into())
    );
    assert_eq!(
        run(&["metrics", "e1", s(&p("a.pgm")), s(&p("c.pgm"))]),
        (0, "0.750000".into())
    );
    assert_eq!(
        run(&["metrics", "e2", s(&p("a.pgm")), s(&p("b.pgm"))]),
        (0, "6.00000e0".into())
    );
    assert_eq!(
        run(&["metrics", "e2", s(&p("gray.pgm")), s(&p("b.pgm"))]),
        (0, "4.04000e0".into())
    );
    assert_eq!(
        run(&["metrics", "e1", s(&p("a.pgm")), s(&p("wide.pgm"))]).0,
        1
    );
    assert_eq!(
        run(&["metrics", "e1", s(&p("gray.pgm")), s(&p("a.pgm"))]).0,
        1
    );
}

#[test]
fn exit_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let conf = disk(dir.path(), "20");
    let out_dir = dir.path().join("o");
    let o = s(&out_dir);

    // usage and config errors
    assert_eq!(code(&rdseg(&["segment", "--bogus"])), 1);
    assert_eq!(code(&rdseg(&[])), 1);
    assert_eq!(
        code(&rdseg(&[
            "segment",
            "--config",
            s(&conf),
            "--tau",
            "0.5",
            "--out",
            o
        ])),
        1
    );
    assert_eq!(
        code(&rdseg(&[
            "segment",
            "--config",
            s(&conf),
            "--q",
            "2",
            "--out",
            o
        ])),
        1
    );
    assert_eq!(
        code(&rdseg(&[
            "segment",
            "--image",
            s(&dir.path().join("disk.pgm")),
            "--out",
            o
        ])),
        1
    );
    let bad_key = dir.path().join("bad.conf");
    std::fs::write(&bad_key, "image = disk.pgm\nlamda = 3\n").unwrap();
    assert_eq!(
        code(&rdseg(&["segment", "--config", s(&bad_key), "--out", o])),
        1
    );
    assert_eq!(
        code(&rdseg(&[
            "segment",
            "--config",
            s(&conf),
            "--fitting",
            "selective",
            "--out",
            o
        ])),
        1
    );
    assert_eq!(code(&rdseg(&["--help"])), 0);

    // I/O errors
    assert_eq!(
        code(&rdseg(&[
            "segment",
            "--config",
            s(&dir.path().join("missing.conf")),
            "--out",
            o
        ])),
        2
    );
    assert_eq!(
        code(&rdseg(&[
            "segment",
            "--config",
            s(&conf),
            "--image",
            "/nonexistent.pgm",
            "--out",
            o
        ])),
        2
    );
    let junk = dir.path().join("junk.pgm");
    std::fs::write(&junk, b"P7\n").unwrap();
    assert_eq!(
        code(&rdseg(&[
            "segment",
            "--config",
            s(&conf),
            "--image",
            s(&junk),
            "--out",
            o
        ])),
        2
    );
    let markers = dir.path().join("m.txt");
    std::fs::write(&markers, "3 x\n").unwrap();
    let args = [
        "segment",
        "--config",
        s(&conf),
        "--fitting",
        "selective",
        "--markers",
        s(&markers),
        "--out",
        o,
    ];
    let out = rdseg(&args);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("marker"));

    // non-convergence only fails under --strict
    let capped = [
        "segment",
        "--config",
        s(&conf),
        "--max-outer",
        "1",
        "--delta",
        "1e-12",
        "--out",
        o,
    ];
    assert_eq!(code(&rdseg(&capped)), 0);
    let mut strict = capped.to_vec();
    strict.push("--strict");
    assert_eq!(code(&rdseg(&strict)), 3);
}
