use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use projwarp::image::{load_image, save_image};
use projwarp::synth;

fn projwarp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_projwarp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn write_matrix(path: &Path, text: &str) {
    fs::write(path, text).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn identity_warp_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let img = synth::natural_like(2, 40, 30);
    let src = dir.path().join("src.pgm");
    let dst = dir.path().join("dst.png");
    let m = dir.path().join("id.txt");
    save_image(&img, &src).unwrap();
    write_matrix(&m, "1 0 0\n0 1 0\n0 0 1\n");
    for kernel in ["nearest", "bilinear", "bicubic", "hermite"] {
        let out = projwarp(&[
            "warp",
            "--in",
            s(&src),
            "--matrix",
            s(&m),
            "--sampler",
            "point",
            "--kernel",
            kernel,
            "--out",
            s(&dst),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(load_image(&dst).unwrap(), img);
    }
}

#[test]
fn out_size_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.pgm");
    save_image(&synth::natural_like(3, 64, 64), &src).unwrap();
    let m = dir.path().join("m.txt");
    write_matrix(&m, "0.5 0 0 0 0.5 0 0 0 1");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let dst = dir.path().join(format!("o{threads}.pgm"));
        let out = projwarp(&[
            "warp",
            "--in",
            s(&src),
            "--matrix",
            s(&m),
            "--sampler",
            "fast:8:5",
            "--kernel",
            "bilinear",
            "--out",
            s(&dst),
            "--out-size",
            "32x20",
            "--threads",
            threads,
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push(fs::read(&dst).unwrap());
    }
    let img = load_image(dir.path().join("o1.pgm")).unwrap();
    assert_eq!((img.width(), img.height()), (32, 20));
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.pgm");
    save_image(&synth::natural_like(1, 16, 16), &src).unwrap();
    let ok = dir.path().join("ok.txt");
    write_matrix(&ok, "1 0 0 0 1 0 0 0 1");
    let dst = dir.path().join("o.pgm");
    let run = |matrix: &Path, sampler: &str, kernel: &str, input: &Path| {
        code(&projwarp(&[
            "warp",
            "--in",
            s(input),
            "--matrix",
            s(matrix),
            "--sampler",
            sampler,
            "--kernel",
            kernel,
            "--out",
            s(&dst),
        ]))
    };

    assert_eq!(code(&projwarp(&["warp"])), 1);
    assert_eq!(code(&projwarp(&["frobnicate"])), 1);
    assert_eq!(code(&projwarp(&["--help"])), 0);
    assert_eq!(run(&ok, "super:0", "bilinear", &src), 1);
    assert_eq!(run(&ok, "point", "lanczos", &src), 1);

    assert_eq!(
        run(&ok, "point", "bilinear", &dir.path().join("missing.pgm")),
        2
    );
    let bad = dir.path().join("bad.txt");
    write_matrix(&bad, "1 0 0 0 1 0 0 0");
    assert_eq!(run(&bad, "point", "bilinear", &src), 2);
    let garbage = dir.path().join("garbage.pgm");
    fs::write(&garbage, b"P5\n2 2\n65535\n\0\0\0\0\0\0\0\0").unwrap();
    assert_eq!(run(&ok, "point", "bilinear", &garbage), 2);

    let singular = dir.path().join("singular.txt");
    write_matrix(&singular, "1 2 3 2 4 6 0 0 1");
    assert_eq!(run(&singular, "point", "bilinear", &src), 3);
    // Backward map has its horizon at output x = 10.
    let horizon = dir.path().join("horizon.txt");
    write_matrix(&horizon, "1 0 0 0 1 0 0.1 0 1");
    assert_eq!(run(&horizon, "point", "bilinear", &src), 3);
}

#[test]
fn pyramid_dumps() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("src.pgm");
    save_image(&synth::natural_like(4, 16, 8), &src).unwrap();
    let mip = dir.path().join("mip");
    assert_eq!(
        code(&projwarp(&[
            "pyramid",
            "--in",
            s(&src),
            "--type",
            "mip",
            "--dump",
            s(&mip)
        ])),
        0
    );
    let mut names: Vec<_> = fs::read_dir(&mip)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        [
            "level_00.pgm",
            "level_01.pgm",
            "level_02.pgm",
            "level_03.pgm",
            "level_04.pgm"
        ]
    );
    let top = load_image(mip.join("level_04.pgm")).unwrap();
    assert_eq!((top.width(), top.height()), (1, 1));

    let rip = dir.path().join("rip");
    assert_eq!(
        code(&projwarp(&[
            "pyramid",
            "--in",
            s(&src),
            "--type",
            "rip",
            "--dump",
            s(&rip)
        ])),
        0
    );
    assert_eq!(fs::read_dir(&rip).unwrap().count(), 5 * 4);
    let e = load_image(rip.join("rip_04_01.pgm")).unwrap();
    assert_eq!((e.width(), e.height()), (1, 4));
    assert_eq!(
        code(&projwarp(&[
            "pyramid",
            "--in",
            s(&src),
            "--type",
            "box",
            "--dump",
            s(&rip)
        ])),
        1
    );
}

#[test]
fn bench_csv_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = projwarp(&[
        "synth",
        "--kind",
        "document",
        "--count",
        "2",
        "--size",
        "48",
        "--dir",
        s(&corpus),
    ]);
    assert_eq!(code(&out), 0);

    let csv = dir.path().join("r.csv");
    let methods = "point/nearest,point/bilinear,mip/bilinear";
    let run = projwarp(&[
        "bench",
        "--corpus",
        s(&corpus),
        "--seeds",
        "0,1",
        "--methods",
        methods,
        "--reps",
        "2",
        "--format",
        "csv",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "sampler,kernel,time_s,psnr_db,taps_per_pixel,samples_per_pixel,pyramid_s"
    );
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("point,nearest,"));
    assert!(lines[3].starts_with("mip,bilinear,"));

    let json = dir.path().join("r.json");
    let run = projwarp(&[
        "bench",
        "--corpus",
        s(&corpus),
        "--seeds",
        "1",
        "--methods",
        "all",
        "--reps",
        "1",
        "--format",
        "json",
        "--out",
        s(&json),
        "--crop",
        "32",
    ]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let text = fs::read_to_string(&json).unwrap();
    assert!(text.contains("\"sampler\": \"fast:16\""), "{text}");
    assert_eq!(text.matches("\"kernel\"").count(), 25);

    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let run = projwarp(&["bench", "--corpus", s(&empty), "--out", s(&csv)]);
    assert_eq!(code(&run), 1);
    let run = projwarp(&[
        "bench",
        "--corpus",
        s(&corpus),
        "--reps",
        "0",
        "--out",
        s(&csv),
    ]);
    assert_eq!(code(&run), 1);
}
