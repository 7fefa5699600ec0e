use oddmc_core::format::{parse_structure, write_class, write_structure};
use oddmc_core::oracle::derive_structure;
use oddmc_core::structural::{hypercube_class, hypercube_tuple};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use tempfile::TempDir;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn oddmc(args: &[&str]) -> Run {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("oddmc").chain(args.iter().copied());
    let code = oddmc_cli::run(argv, &mut out, &mut err);
    Run {
        code,
        out: String::from_utf8(out).unwrap(),
        err: String::from_utf8(err).unwrap(),
    }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generated_hypercube_validates() {
    let dir = TempDir::new().unwrap();
    let h5 = dir.path().join("h5.struct");
    let run = oddmc(&["gen", "hypercube", "--k", "5", "--out", s(&h5)]);
    assert_eq!(run.code, 0, "{}", run.err);
    let run = oddmc(&["validate", s(&h5)]);
    assert_eq!((run.code, run.out.as_str()), (0, "valid\n"));
    assert_eq!(parse_structure(&fs::read_to_string(&h5).unwrap()).unwrap(), hypercube_tuple(5).unwrap());
}

#[test]
fn count_and_oracle_count_agree() {
    let dir = TempDir::new().unwrap();
    let h3 = write(dir.path(), "h3.struct", &write_structure(&hypercube_tuple(3).unwrap()));
    let cases = [
        ("E(x,y)", "x,y", "24\n"),
        ("x = x", "x", "8\n"),
        ("exists y. E(x,y) & !(x = y)", "x", "8\n"),
        ("E(x,y) -> E(y,x)", "x,y", "64\n"),
        ("exists z. E(x,z) & E(z,y)", "x,y", "32\n"),
    ];
    for (text, vars, expected) in cases {
        let f = write(dir.path(), "f.fo", text);
        for verb in ["count", "oracle-count"] {
            let run = oddmc(&[verb, "--structure", s(&h3), "--formula", s(&f), "--vars", vars]);
            assert_eq!((run.code, run.out.as_str()), (0, expected), "{verb} {text}: {}", run.err);
        }
    }
}

#[test]
fn default_variable_order_is_sorted_free_variables() {
    let dir = TempDir::new().unwrap();
    let h2 = write(dir.path(), "h2.struct", &write_structure(&hypercube_tuple(2).unwrap()));
    let f = write(dir.path(), "f.fo", "# edges\nE(y,x)\n");
    let run = oddmc(&["count", "--structure", s(&h2), "--formula", s(&f)]);
    assert_eq!(run.out, "8\n");
}

#[test]
fn class_check_reports_sat_with_witness_and_unsat() {
    let dir = TempDir::new().unwrap();
    let class = write(dir.path(), "hc.classnfa", &write_class(&hypercube_class()));
    let edge = write(dir.path(), "edge.fo", "exists x. exists y. E(x,y)\n");
    let witness = dir.path().join("w.struct");
    let run = oddmc(&["check", "--class", s(&class), "--formula", s(&edge), "--witness", s(&witness)]);
    assert_eq!(run.code, 0, "{}", run.err);
    assert_eq!(run.out, format!("SAT\nwitness: {}\n", witness.display()));
    let t = parse_structure(&fs::read_to_string(&witness).unwrap()).unwrap();
    assert!(!derive_structure(&t).unwrap().relations[0].is_empty());

    let triangle = write(dir.path(), "tri.fo", "exists x. exists y. exists z. E(x,y) & E(y,z) & E(z,x)");
    let run = oddmc(&["check", "--class", s(&class), "--formula", s(&triangle)]);
    assert_eq!((run.code, run.out.as_str()), (1, "UNSAT\n"));
}

#[test]
fn model_check_exit_codes() {
    let dir = TempDir::new().unwrap();
    let h2 = write(dir.path(), "h2.struct", &write_structure(&hypercube_tuple(2).unwrap()));
    let yes = write(dir.path(), "yes.fo", "forall x. exists y. E(x,y)");
    let no = write(dir.path(), "no.fo", "exists x. E(x,x)");
    assert_eq!(oddmc(&["model-check", "--structure", s(&h2), "--formula", s(&yes)]).code, 0);
    let run = oddmc(&["model-check", "--structure", s(&h2), "--formula", s(&no)]);
    assert_eq!((run.code, run.out.as_str()), (1, "false\n"));
}

#[test]
fn encode_decode_pad_and_binarize() {
    let dir = TempDir::new().unwrap();
    let text = write_structure(&hypercube_tuple(3).unwrap());
    let h3 = write(dir.path(), "h3.struct", &text);
    let ls = dir.path().join("h3.ls");
    assert_eq!(oddmc(&["encode", s(&h3), "--out", s(&ls)]).code, 0);
    assert_eq!(oddmc(&["validate", s(&ls)]).out, "valid\n");
    assert_eq!(oddmc(&["decode", s(&ls)]).out, text);

    let padded = dir.path().join("p.struct");
    assert_eq!(oddmc(&["pad", s(&h3), "--length", "6", "--out", s(&padded)]).code, 0);
    let f = write(dir.path(), "f.fo", "E(x,y)");
    let run = oddmc(&["count", "--structure", s(&padded), "--formula", s(&f), "--vars", "x,y"]);
    assert_eq!(run.out, "24\n");

    let binary = dir.path().join("b.struct");
    assert_eq!(oddmc(&["binarize", s(&h3), "--out", s(&binary)]).code, 0);
    let run = oddmc(&["count", "--structure", s(&binary), "--formula", s(&f), "--vars", "x,y"]);
    assert_eq!(run.out, "24\n");
}

#[test]
fn output_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let a = oddmc(&["gen", "hypercube", "--k", "4"]).out;
    let b = oddmc(&["gen", "hypercube", "--k", "4"]).out;
    assert_eq!(a, b);
    let h4 = write(dir.path(), "h4.struct", &a);
    assert_eq!(oddmc(&["binarize", s(&h4)]).out, oddmc(&["binarize", s(&h4)]).out);
    assert_eq!(oddmc(&["encode", s(&h4)]).out, oddmc(&["encode", s(&h4)]).out);
}

#[test]
fn input_errors_exit_with_two() {
    let dir = TempDir::new().unwrap();
    let run = oddmc(&["frobnicate"]);
    assert_eq!(run.code, 2);
    assert!(run.err.contains("Usage"));
    assert_eq!(oddmc(&["count", "--bogus"]).code, 2);
    assert_eq!(oddmc(&["validate", s(&dir.path().join("missing.odd"))]).code, 2);

    let h2 = write(dir.path(), "h2.struct", &write_structure(&hypercube_tuple(2).unwrap()));
    let unknown = write(dir.path(), "u.fo", "F(x)");
    let run = oddmc(&["count", "--structure", s(&h2), "--formula", s(&unknown)]);
    assert_eq!(run.code, 2);
    assert!(run.err.contains("unknown relation"), "{}", run.err);
    let syntax = write(dir.path(), "bad.fo", "exists x E(x,x)");
    let run = oddmc(&["count", "--structure", s(&h2), "--formula", s(&syntax)]);
    assert_eq!(run.code, 2);
    assert!(run.err.contains("line 1"), "{}", run.err);
}

#[test]
fn validate_reports_semantic_violations_with_one() {
    let dir = TempDir::new().unwrap();
    let bad = "alphabet: a\narity: 1\nwidth: 1\nlength: 1\nLAYER\nleft: 0\nright: 0\ninitial: 0\nfinal: 0\niflag: 0\nfflag: 1\nEND\n";
    let path = write(dir.path(), "bad.odd", bad);
    let run = oddmc(&["validate", s(&path)]);
    assert_eq!(run.code, 1);
    assert!(run.out.starts_with("invalid:"), "{}", run.out);
    let garbled = write(dir.path(), "garbled.odd", "alphabet: a\narity: one\n");
    assert_eq!(oddmc(&["validate", s(&garbled)]).code, 2);
}

#[test]
fn brute_force_bound_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let h6 = write(dir.path(), "h6.struct", &write_structure(&hypercube_tuple(6).unwrap()));
    let f = write(dir.path(), "f.fo", "a = a & b = b & c = c & d = d & e = e");
    let run = oddmc(&["oracle-count", "--structure", s(&h6), "--formula", s(&f)]);
    assert_eq!(run.code, 3, "{}", run.err);
    let run = oddmc(&["count", "--structure", s(&h6), "--formula", s(&f)]);
    assert_eq!((run.code, run.out.as_str()), (0, "1073741824\n"));
}

#[test]
fn binary_sets_the_process_exit_code() {
    let status = Command::new(env!("CARGO_BIN_EXE_oddmc")).arg("nope").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let status = Command::new(env!("CARGO_BIN_EXE_oddmc")).arg("--help").output().unwrap();
    assert_eq!(status.status.code(), Some(0));
}
