use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command as Proc, Output};

use idslab::config::{parse_config, Command};
use idslab::{run, RunOptions};

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn idslab(args: &[&str], cache: &Path) -> Output {
    Proc::new(env!("CARGO_BIN_EXE_idslab"))
        .args(args)
        .env("IDSLAB_CACHE_DIR", cache)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SHIPPED: [(Command, &str); 8] = [
    (Command::Selftest, "selftest.toml"),
    (Command::Ids, "free_ids.toml"),
    (Command::HolderE, "holder_e.toml"),
    (Command::HolderLambda, "holder_lambda.toml"),
    (Command::WeakDisorder, "weak_disorder.toml"),
    (Command::Wegner, "wegner.toml"),
    (Command::CtDecay, "ct_decay.toml"),
    (Command::DosSeries, "dos_series.toml"),
];

#[test]
fn shipped_configs_parse_and_round_trip() {
    for (cmd, file) in SHIPPED {
        let text = fs::read_to_string(configs().join(file)).unwrap();
        let c = parse_config(cmd, &text).unwrap_or_else(|e| panic!("{file}: {e}"));
        let again = parse_config(cmd, &c.to_toml_with_io()).unwrap();
        assert_eq!(c, again, "{file}");
        assert_eq!(
            idslab::record::config_hash(&c),
            idslab::record::config_hash(&again)
        );
    }
}

#[test]
fn hash_ignores_formatting_but_not_values() {
    let text = fs::read_to_string(configs().join("wegner.toml")).unwrap();
    let a = parse_config(Command::Wegner, &text).unwrap();
    // Comments and spelled-out defaults do not change the hash.
    let reordered = format!("# comment\n{}", text.replace("slope_min = 0.8\n", ""));
    let b = parse_config(Command::Wegner, &reordered).unwrap();
    assert_eq!(
        idslab::record::config_hash(&a),
        idslab::record::config_hash(&b)
    );
    let c = parse_config(
        Command::Wegner,
        &text.replace("seed = 20240614", "seed = 1"),
    )
    .unwrap();
    assert_ne!(
        idslab::record::config_hash(&a),
        idslab::record::config_hash(&c)
    );
    assert_eq!(idslab::record::config_hash(&a).len(), 16);
}

const SMALL_IDS: &str = r#"
[model]
dimension = 2
size = 12
boundary = "periodic"
lambda = 0.7
seed = 9
law = "uniform"
a = -1.0
b = 1.0

[run]
realizations = 16
energies = { start = -5.0, stop = 5.0, step = 0.5 }
"#;

#[test]
fn cache_replays_byte_identical_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(Command::Ids, SMALL_IDS).unwrap();
    let opts = |out: &str| RunOptions {
        threads: Some(2),
        out_dir: Some(tmp.path().join(out)),
        cache_dir: Some(tmp.path().join("cache")),
        use_cache: true,
    };
    let first = run(&config, &opts("a")).unwrap();
    let second = run(&config, &opts("b")).unwrap();
    assert!(!first.cached);
    assert!(second.cached);
    assert_eq!(first.config_hash, second.config_hash);
    assert_eq!(first.files, second.files);
    for f in &first.files {
        assert_eq!(
            fs::read(tmp.path().join("a").join(&f.name)).unwrap(),
            fs::read(tmp.path().join("b").join(&f.name)).unwrap()
        );
    }
    let names: Vec<&str> = first.files.iter().map(|f| f.name.as_str()).collect();
    assert_eq!(names, ["ids.csv", "summary.json"]);

    // Disabling the cache recomputes and reproduces the same CSV.
    let fresh = run(
        &config,
        &RunOptions {
            use_cache: false,
            threads: Some(1),
            ..opts("c")
        },
    )
    .unwrap();
    assert!(!fresh.cached);
    assert_eq!(
        fs::read(tmp.path().join("a/ids.csv")).unwrap(),
        fs::read(tmp.path().join("c/ids.csv")).unwrap()
    );
}

#[test]
fn csv_carries_provenance_header() {
    let tmp = tempfile::tempdir().unwrap();
    let config = parse_config(Command::Ids, SMALL_IDS).unwrap();
    let rec = run(
        &config,
        &RunOptions {
            out_dir: Some(tmp.path().to_path_buf()),
            use_cache: false,
            ..RunOptions::new()
        },
    )
    .unwrap();
    let text = fs::read_to_string(tmp.path().join("ids.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        format!("# config_hash={} seed=9", rec.config_hash)
    );
    assert_eq!(
        lines.next().unwrap(),
        "lambda,E,mean,stderr,R,L,d,boundary,seed"
    );
    assert_eq!(lines.count(), 21);
    assert!(text.contains(",16,12,2,periodic,9"));
    let record: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("run_record.json")).unwrap()).unwrap();
    assert_eq!(record["config_hash"], rec.config_hash);
}

#[test]
fn free_chain_run_reports_reference_deviation() {
    let tmp = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(configs().join("free_ids.toml")).unwrap();
    let config = parse_config(Command::Ids, &text).unwrap();
    run(
        &config,
        &RunOptions {
            out_dir: Some(tmp.path().to_path_buf()),
            use_cache: false,
            ..RunOptions::new()
        },
    )
    .unwrap();
    let summary: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("summary.json")).unwrap()).unwrap();
    assert!(summary["n0_max_abs_dev"].as_f64().unwrap() <= 0.01);
    let free = fs::read_to_string(tmp.path().join("free_ids.csv")).unwrap();
    assert!(free.lines().nth(1) == Some("E,N0"));
    assert_eq!(free.lines().count(), 2 + 81);
}

#[test]
fn exit_status_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let out = |n: &str| tmp.path().join(n).to_string_lossy().into_owned();

    // Usage errors.
    assert_eq!(idslab(&["ids"], &cache).status.code(), Some(1));
    assert_eq!(
        idslab(&["bogus", "--config", "x"], &cache).status.code(),
        Some(1)
    );
    assert_eq!(
        idslab(&["ids", "--config", "/nonexistent.toml"], &cache)
            .status
            .code(),
        Some(1)
    );

    // Config errors name the key.
    let bad = write(
        tmp.path(),
        "bad.toml",
        &SMALL_IDS.replace("lambda = 0.7", "lambda = -0.5\ncolour = 1"),
    );
    let o = idslab(&["ids", "--config", &bad], &cache);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("model.lambda: lambda must be >= 0"), "{err}");
    assert!(err.contains("model.colour: unknown key"), "{err}");

    // Success, then a cached replay.
    let good = write(tmp.path(), "good.toml", SMALL_IDS);
    let o = idslab(&["ids", "--config", &good, "--out", &out("good")], &cache);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let o = idslab(
        &[
            "ids",
            "--config",
            &good,
            "--out",
            &out("good2"),
            "--threads",
            "1",
        ],
        &cache,
    );
    assert!(String::from_utf8_lossy(&o.stdout).contains("cached=true"));
    assert!(cache.read_dir().unwrap().count() >= 1);

    // A failing theorem verdict.
    let weg = fs::read_to_string(configs().join("wegner.toml"))
        .unwrap()
        .replace("realizations = 2000", "realizations = 50")
        .replace("slope_min = 0.8", "slope_min = 5.0")
        .replace("slope_max = 1.2", "slope_max = 6.0");
    let weg = write(tmp.path(), "weg.toml", &weg);
    assert_eq!(
        idslab(
            &[
                "wegner",
                "--config",
                &weg,
                "--no-cache",
                "--out",
                &out("weg")
            ],
            &cache
        )
        .status
        .code(),
        Some(3)
    );

    // A numerical failure: outside the spectrum every increment vanishes, so no
    // exponent exists. Nothing may be left behind.
    let flat = SMALL_IDS.replace(
        "energies = { start = -5.0, stop = 5.0, step = 0.5 }",
        "energies = { start = 7.0, stop = 9.0, step = 0.1 }",
    ) + "window = [7.0, 9.0]\nseparations = [0.2, 0.4, 0.8]\n";
    let flat = write(tmp.path(), "flat.toml", &flat);
    let o = idslab(
        &[
            "holder-e",
            "--config",
            &flat,
            "--no-cache",
            "--out",
            &out("flat"),
        ],
        &cache,
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("analysis:"));
    assert!(!tmp.path().join("flat").exists());
}

#[test]
fn selftest_command_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "st.toml", "[run]\nmodels = 8\n");
    let o = idslab(
        &[
            "selftest",
            "--config",
            &cfg,
            "--no-cache",
            "--out",
            &tmp.path().join("o").to_string_lossy(),
        ],
        tmp.path(),
    );
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = fs::read_to_string(tmp.path().join("o/selftest.csv")).unwrap();
    assert!(!csv.contains(",false,"), "{csv}");
}

#[test]
fn theorem_commands_write_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        (Command::CtDecay, "ct_decay.toml"),
        (Command::DosSeries, "dos_series.toml"),
    ] {
        let text = fs::read_to_string(configs().join(file)).unwrap();
        let config = parse_config(cmd, &text).unwrap();
        let dir = tmp.path().join(file);
        let rec = run(
            &config,
            &RunOptions {
                out_dir: Some(dir.clone()),
                use_cache: false,
                ..RunOptions::new()
            },
        )
        .unwrap();
        assert_eq!(rec.verdict, Some(true), "{file}");
        let v: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.join("verdict.json")).unwrap()).unwrap();
        for key in ["theorem", "window", "q_guaranteed", "q_hat", "ci", "pass"] {
            assert!(v.get(key).is_some(), "{file}: {key}");
        }
    }
    let s: serde_json::Value =
        serde_json::from_slice(&fs::read(tmp.path().join("dos_series.toml/summary.json")).unwrap())
            .unwrap();
    let raw = s["dos_series_raw"].as_f64().unwrap();
    assert!((s["dos_series_over_pi"].as_f64().unwrap() - raw / std::f64::consts::PI).abs() < 1e-15);
    assert_eq!(s["convergence"]["verdict"], true);
}
