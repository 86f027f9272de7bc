use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::process::Command;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use molrdf::cli::{analyze, run, AnalysisOptions, RunConfig};
use molrdf::geometry::{CellTensor, Vec3};
use molrdf::synthetic::{gen_trajectory, SyntheticConfig, SyntheticSystem};
use molrdf::trajectory_io::{
    open_history, parse_directives, parse_field, write_history_frame, write_history_header, Frame,
    FrameRead, MoleculeSpec, SiteSpec, Topology,
};

fn small(frames: usize, seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        n_frames: frames,
        seed,
        ..SyntheticConfig::default()
    }
}

fn generate(dir: &Path, cfg: &SyntheticConfig) {
    gen_trajectory(cfg, dir).unwrap();
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap()
}

fn molrdf(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_molrdf"))
        .arg("--dir")
        .arg(dir)
        .args(args)
        .output()
        .unwrap()
}

#[test]
fn generated_files_parse_back() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(5, 3);
    generate(dir.path(), &cfg);
    let topology = parse_field(&read(&dir.path().join("FIELD"))).unwrap();
    let system = SyntheticSystem::new(cfg.clone()).unwrap();
    assert_eq!(topology, system.topology);
    let d = parse_directives(&read(&dir.path().join("CONTROL"))).unwrap();
    assert_eq!(d, cfg.directives());
}

#[test]
fn written_positions_keep_center_separation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(10, 8);
    generate(dir.path(), &cfg);
    let topology = parse_field(&read(&dir.path().join("FIELD"))).unwrap();
    let text = read(&dir.path().join("HISTORY"));
    let mut reader = open_history(text.as_bytes(), Some(topology.total_sites())).unwrap();
    let mut system = SyntheticSystem::new(cfg.clone()).unwrap();
    let mut frames = 0;
    while let FrameRead::Frame(f) = reader.next_frame().unwrap() {
        let truth = system.next_frame();
        for (got, want) in f.positions.iter().zip(&truth.wrapped) {
            assert!((*got - *want).norm() < 1e-11);
        }
        let sep = f.cell.min_image_vector(truth.centers[0], truth.centers[1]).norm();
        assert!((sep - cfg.distance).abs() < 1e-9);
        frames += 1;
    }
    assert_eq!(frames, 10);
}

#[test]
fn generate_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = molrdf(&["generate", "--frames", "50", "--seed", "42"], d.path());
        assert!(out.status.success());
        assert!(String::from_utf8_lossy(&out.stdout).contains("bin 51"));
    }
    for f in ["CONTROL", "FIELD", "HISTORY"] {
        assert_eq!(read(&a.path().join(f)), read(&b.path().join(f)), "{f}");
    }
    let c = tempfile::tempdir().unwrap();
    generate(c.path(), &small(50, 43));
    assert_ne!(read(&a.path().join("HISTORY")), read(&c.path().join("HISTORY")));
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &small(40, 5));
    run(&RunConfig::in_dir(dir.path())).unwrap();
    let first = (read(&dir.path().join("RDF")), read(&dir.path().join("POP")));
    run(&RunConfig::in_dir(dir.path())).unwrap();
    assert_eq!(first, (read(&dir.path().join("RDF")), read(&dir.path().join("POP"))));
    let rows = |t: &str| t.lines().count();
    assert_eq!(rows(&first.0), rows(&first.1));
    assert_eq!(rows(&first.0), 1 + small(1, 0).directives().nbins());
}

#[test]
fn parallel_matches_sequential() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &small(300, 11));
    let seq = run(&RunConfig::in_dir(dir.path())).unwrap().analysis.table;
    let par = run(&RunConfig {
        parallel: true,
        ..RunConfig::in_dir(dir.path())
    })
    .unwrap()
    .analysis
    .table;
    assert_eq!(seq.pair_labels, par.pair_labels);
    assert_eq!(seq.frames_used, par.frames_used);
    for (a, b) in seq.g.iter().flatten().zip(par.g.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
    for (a, b) in seq.pop.iter().flatten().zip(par.pop.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn doubling_the_trajectory_leaves_results_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &small(30, 2));
    let once = run(&RunConfig::in_dir(dir.path())).unwrap().analysis.table;
    let history = read(&dir.path().join("HISTORY"));
    let body: String = history.lines().skip(2).map(|l| format!("{l}\n")).collect();
    fs::write(dir.path().join("HISTORY"), format!("{history}{body}")).unwrap();
    let twice = run(&RunConfig::in_dir(dir.path())).unwrap().analysis.table;
    assert_eq!(twice.frames_used, 60);
    for (a, b) in once.g.iter().flatten().zip(twice.g.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
    for (a, b) in once.pop.iter().flatten().zip(twice.pop.iter().flatten()) {
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn ideal_gas_population_follows_density() {
    let n = 100;
    let l = 16.0;
    let topology = Topology {
        molecules: vec![MoleculeSpec {
            name: "Gas".into(),
            count: n,
            sites: vec![SiteSpec {
                name: "X".into(),
                mass: 1.0,
                charge: 0.0,
                frozen: 0,
            }],
        }],
    };
    let cell = CellTensor::cubic(l).unwrap();
    let mut out = Vec::new();
    write_history_header(&mut out, "gas", 0, cell.imcon(), n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut next = || rng.gen_range(-0.5..0.5) * l;
    for k in 0..200 {
        let positions = (0..n).map(|_| Vec3::new(next(), next(), next())).collect();
        let frame = Frame {
            step: k + 1,
            cell,
            positions,
        };
        write_history_frame(&mut out, &frame, &topology, 0.001, None, None).unwrap();
    }
    let directives = parse_directives("gas\nfinish\npolyana\nrmax 6\ndr 0.2\nend polyana\n").unwrap();
    let table = analyze(
        &topology,
        &directives,
        BufReader::new(&out[..]),
        &AnalysisOptions::default(),
    )
    .unwrap()
    .table;
    // Neighbors within r of an ideal gas of density (N - 1) / V.
    let rho = (n - 1) as f64 / (l * l * l);
    let r = 6.0;
    let want = rho * 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
    let got = *table.pop[0].last().unwrap();
    assert!((got - want).abs() / want < 0.05, "{got} vs {want}");
}

#[test]
fn selection_past_the_end_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &small(800, 1));
    let control = "late start\nfinish\npolyana\n  start 1001\nend polyana\n";
    fs::write(dir.path().join("CONTROL"), control).unwrap();
    let err = run(&RunConfig::in_dir(dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    let out = molrdf(&[], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(!dir.path().join("RDF").exists());
}

#[test]
fn missing_input_exits_1_and_names_the_file() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &small(3, 1));
    fs::remove_file(dir.path().join("FIELD")).unwrap();
    let out = molrdf(&[], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FIELD"));
}

#[test]
fn atom_count_mismatch_is_fatal() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &small(3, 1));
    let field = read(&dir.path().join("FIELD")).replacen("NUMMOLS 1", "NUMMOLS 2", 1);
    fs::write(dir.path().join("FIELD"), field).unwrap();
    let out = molrdf(&[], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_arguments_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(molrdf(&["--frobnicate"], dir.path()).status.code(), Some(1));
    let out = molrdf(&["generate", "--distance", "20", "--cell", "30"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
}

#[test]
fn custom_file_names() {
    let dir = tempfile::tempdir().unwrap();
    generate(dir.path(), &small(5, 1));
    fs::rename(dir.path().join("HISTORY"), dir.path().join("traj.hist")).unwrap();
    let out = molrdf(&["--history", "traj.hist", "--rdf", "g.dat", "--pop", "n.dat"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("g.dat").exists());
    assert!(dir.path().join("n.dat").exists());
}
