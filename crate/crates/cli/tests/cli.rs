use std::process::{Command, Output};

fn nhdss(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nhdss")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn exit_codes() {
    assert_eq!(nhdss(&["--help"]).status.code(), Some(0));
    assert_eq!(nhdss(&["--version"]).status.code(), Some(0));
    assert_eq!(nhdss(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(nhdss(&["encode", "x", "--scheme", "Z", "--k", "3", "--out", "o"]).status.code(), Some(1));
    // chi·p above one is a data error
    assert_eq!(nhdss(&["avail", "--k", "3", "--p", "0.5", "--chi", "3"]).status.code(), Some(2));
    assert_eq!(nhdss(&["restore", "/nonexistent/manifest.toml", "--out", "x"]).status.code(), Some(2));
}

#[test]
fn avail_prints_csv() {
    let o = nhdss(&["avail", "--k", "4", "--p", "0.6", "--chi", "1,1.3333333333333333"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "chi,p1,pr_nonhomo_enum,pr_homo_enum,pr_nonhomo_closed,pr_homo_closed"
    );
    assert_eq!(lines.count(), 2);
    assert!(text.contains("0.682560000000"));
}

#[test]
fn encode_repair_restore_by_label() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    let data: Vec<u8> = (0..=255).cycle().take(777).collect();
    std::fs::write(&input, &data).unwrap();
    let store = dir.path().join("store");
    let o = nhdss(&[
        "--seed",
        "3",
        "encode",
        input.to_str().unwrap(),
        "--scheme",
        "C",
        "--k",
        "4",
        "--out",
        store.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest = store.join("manifest.toml");
    let m = manifest.to_str().unwrap();

    std::fs::remove_file(store.join("node0.shard")).unwrap();
    let o = nhdss(&["repair", m, "--node", "super"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("fullreconstruct"));

    std::fs::remove_file(store.join("node2.shard")).unwrap();
    std::fs::remove_file(store.join("node3.shard")).unwrap();
    let o = nhdss(&["repair", m, "--node", "s2,s3", "--format", "json"]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["gamma"], report["measured_bytes"]);

    assert_eq!(nhdss(&["repair", m, "--node", "s9"]).status.code(), Some(2));
    assert_eq!(nhdss(&["check", m]).status.code(), Some(0));

    let out = dir.path().join("out.bin");
    assert!(nhdss(&["restore", m, "--out", out.to_str().unwrap()]).status.success());
    assert_eq!(std::fs::read(out).unwrap(), data);
}

#[test]
fn check_flags_nonconforming_store() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in.bin");
    std::fs::write(&input, b"hello").unwrap();
    let store = dir.path().join("store");
    assert!(nhdss(&["encode", input.to_str().unwrap(), "--scheme", "A", "--k", "3", "--out", store.to_str().unwrap()])
        .status
        .success());
    let manifest = store.join("manifest.toml");
    let text = std::fs::read_to_string(&manifest).unwrap();
    // swap one coefficient table entry so the stored code no longer matches
    // the rebuilt one
    let tampered = text.replacen("[[1, 0", "[[2, 0", 1);
    assert_ne!(text, tampered, "manifest layout changed");
    std::fs::write(&manifest, tampered).unwrap();
    let code = nhdss(&["check", manifest.to_str().unwrap()]).status.code();
    assert!(matches!(code, Some(2) | Some(3)), "{code:?}");
}

#[test]
fn bench_measured_section() {
    let o = nhdss(&["bench", "--measure"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("Scheme A   1-node   gamma=32 measured=32"), "{text}");
    assert!(text.contains("Scheme A   2-node   gamma=64 measured=64"), "{text}");
    assert!(text.contains("Scheme B   1-node   gamma=24 measured=24"), "{text}");
}
