use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use linestat::cooccurrence::{accumulate_normalize, cooccurrence_histogram};
use linestat::phantom::{crossing_bars, paint_segments, segment_mask, Segment};
use linestat::pipeline::image_interest_set;
use linestat::raster_io::{load_raster, read_kernel, write_kernel, write_pgm, KernelHeader, RasterKind};
use linestat::{KernelKind, KernelVolume, RotationMode};
use tempfile::TempDir;

fn linestat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_linestat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = linestat(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Two small images of straight dark segments with 3-px-wide masks.
fn synthetic_manifest(dir: &Path) -> PathBuf {
    let scenes = [
        vec![
            Segment::new((5.0, 10.0), (58.0, 30.0)),
            Segment::new((12.0, 55.0), (40.0, 8.0)),
        ],
        vec![
            Segment::new((4.0, 40.0), (60.0, 44.0)),
            Segment::new((30.0, 3.0), (50.0, 60.0)),
        ],
    ];
    let mut lines = String::new();
    for (i, segs) in scenes.iter().enumerate() {
        let parts: Vec<(Segment, f64)> = segs.iter().map(|s| (*s, 0.3)).collect();
        write_pgm(dir.join(format!("img{i}.pgm")), &paint_segments(64, 64, &parts, 0.9, 1.5)).unwrap();
        write_pgm(dir.join(format!("mask{i}.pgm")), &segment_mask(64, 64, segs, 1.5)).unwrap();
        lines.push_str(&format!("img{i}.pgm;mask{i}.pgm\n"));
    }
    let manifest = dir.join("manifest.txt");
    fs::write(&manifest, lines).unwrap();
    manifest
}

#[test]
fn stats_matches_the_library_and_writes_a_stat_header() {
    let dir = TempDir::new().unwrap();
    let manifest = synthetic_manifest(dir.path());
    let out = dir.path().join("k.lck");
    ok(&["stats", "--manifest", s(&manifest), "--out", s(&out)]);

    let bytes = fs::read(&out).unwrap();
    assert!(bytes.starts_with(b"LCK1 65 16 stat group\n"));
    let (k, _) = read_kernel(&out).unwrap();
    assert!((k.l1_norm() - 1.0).abs() <= 1e-12);

    let histograms: Vec<KernelVolume> = (0..2)
        .map(|i| {
            let img = load_raster(dir.path().join(format!("img{i}.pgm")), RasterKind::Gray).unwrap();
            let mask = load_raster(dir.path().join(format!("mask{i}.pgm")), RasterKind::Mask).unwrap();
            let set = image_interest_set(&img, &mask, None, 16, Default::default()).unwrap();
            cooccurrence_histogram(&set, 65, RotationMode::Group).unwrap()
        })
        .collect();
    assert_eq!(k, accumulate_normalize(&histograms).unwrap());
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let dir = TempDir::new().unwrap();
    let manifest = synthetic_manifest(dir.path());
    let run = |threads: &str, name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut args = vec!["--threads", threads];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["--out", s(&out)]);
        ok(&args);
        fs::read(out).unwrap()
    };
    let stats = ["stats", "--manifest", s(&manifest), "--mode", "literal", "--d", "20"];
    assert_eq!(run("1", "s1.lck", &stats), run("4", "s4.lck", &stats));
    let mc = [
        "fpkernel", "--alpha", "0.05", "--d33", "0.002", "--d", "8", "--solver", "mc", "--samples", "20000",
        "--seed", "7", "--dt", "0.5",
    ];
    let a = run("1", "m1.lck", &mc);
    assert_eq!(a, run("4", "m4.lck", &mc));
    assert_eq!(a, run("4", "m4b.lck", &mc));
}

#[test]
fn compare_of_identical_kernels_prints_zero() {
    let dir = TempDir::new().unwrap();
    let manifest = synthetic_manifest(dir.path());
    let k = dir.path().join("k.lck");
    ok(&["stats", "--manifest", s(&manifest), "--d", "12", "--out", s(&k)]);
    assert_eq!(ok(&["compare", "--a", s(&k), "--b", s(&k)]), "0.0000\n");
}

#[test]
fn render_writes_clipped_slices() {
    let dir = TempDir::new().unwrap();
    let side = 5;
    let values: Vec<f64> = (0..side * side * 16).map(|i| (i % 23) as f64).collect();
    let k = KernelVolume::from_values(2, 16, values).unwrap().normalized_l1().unwrap();
    let path = dir.path().join("k.lck");
    write_kernel(&path, &k, &KernelHeader::for_kernel(&k, KernelKind::Stat, RotationMode::Group)).unwrap();
    let out = dir.path().join("slices");
    ok(&["render", "--kernel", s(&path), "--thetas", "-2,-1,0,1,2", "--out", s(&out)]);
    let clip = 0.2 * k.values().iter().cloned().fold(0.0, f64::max);
    for t in -2i64..=2 {
        let img = load_raster(out.join(format!("theta_{t}.pgm")), RasterKind::Labels).unwrap();
        assert_eq!((img.width(), img.height()), (side, side));
        let slice = k.slice((8 + t) as usize);
        for (v, px) in slice.iter().zip(img.values()) {
            assert_eq!(*px, ((v / clip).min(1.0) * 255.0).round());
        }
    }
    assert_eq!(fs::read_dir(&out).unwrap().count(), 5);
}

#[test]
fn cluster_separates_crossing_bars() {
    let dir = TempDir::new().unwrap();
    let ph = crossing_bars(101, 40f64.to_radians());
    let (img, seg, k) = (dir.path().join("img.pgm"), dir.path().join("seg.pgm"), dir.path().join("k.lck"));
    write_pgm(&img, &ph.image).unwrap();
    write_pgm(&seg, &ph.segmentation).unwrap();
    ok(&["fpkernel", "--alpha", "0.0024", "--d33", "0.0017", "--out", s(&k)]);
    assert!(fs::read(&k).unwrap().starts_with(b"LCK1 33 16 prob group\n"));
    let labels = dir.path().join("labels.pgm");
    ok(&[
        "cluster", "--image", s(&img), "--segmentation", s(&seg), "--kernel", s(&k), "--out", s(&labels),
    ]);
    let map = load_raster(&labels, RasterKind::Labels).unwrap();
    let mut used: Vec<u32> = map.values().iter().map(|&v| v as u32).filter(|&v| v > 0).collect();
    used.sort_unstable();
    used.dedup();
    assert_eq!(used, vec![1, 2]);
    let csv = fs::read_to_string(dir.path().join("labels.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("x;y;label"));
    for row in csv.lines().skip(1) {
        let f: Vec<&str> = row.split(';').collect();
        let (x, y, l): (usize, usize, i64) = (f[0].parse().unwrap(), f[1].parse().unwrap(), f[2].parse().unwrap());
        assert_eq!(map.get(x, y) as i64, l + 1);
    }
}

#[test]
fn thin_and_orientations_keep_the_raster_size() {
    let dir = TempDir::new().unwrap();
    synthetic_manifest(dir.path());
    let (mask, img) = (dir.path().join("mask0.pgm"), dir.path().join("img0.pgm"));
    let (c, o) = (dir.path().join("c.pgm"), dir.path().join("o.pgm"));
    ok(&["thin", "--mask", s(&mask), "--out", s(&c)]);
    ok(&["orientations", "--image", s(&img), "--out", s(&o)]);
    let c = load_raster(&c, RasterKind::Mask).unwrap();
    let o = load_raster(&o, RasterKind::Labels).unwrap();
    assert_eq!((c.width(), c.height(), o.width(), o.height()), (64, 64, 64, 64));
    assert!(c.count_nonzero() < load_raster(&mask, RasterKind::Mask).unwrap().count_nonzero());
    assert!(o.values().iter().all(|&b| b < 16.0));
}

#[test]
fn usage_and_data_errors_have_distinct_exit_codes() {
    assert_eq!(linestat(&["stats", "--bogus"]).status.code(), Some(1));
    assert_eq!(linestat(&["frobnicate"]).status.code(), Some(1));
    let missing_seed = linestat(&["fpkernel", "--alpha", "0.01", "--d33", "0.001", "--solver", "mc", "--out", "x.lck"]);
    assert_eq!(missing_seed.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing_seed.stderr).contains("--seed"));
    let unreadable = linestat(&["compare", "--a", "/nonexistent/a.lck", "--b", "/nonexistent/b.lck"]);
    assert_eq!(unreadable.status.code(), Some(2));
    assert_eq!(linestat(&["--help"]).status.code(), Some(0));
}
