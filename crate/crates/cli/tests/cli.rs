use std::io::Write;
use std::process::{Command, Output, Stdio};

fn tcas(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcas")).args(args).output().unwrap()
}

fn script(text: &str) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn fixture(name: &str) -> String {
    format!("{}/../core/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn run_detg_script() {
    let o = tcas(&["run", &fixture("detg.frm")]);
    assert_eq!(o.status.code(), Some(0));
    let golden = std::fs::read_to_string(fixture("detg_expansion.golden")).unwrap()
        + &std::fs::read_to_string(fixture("detg_value.golden")).unwrap();
    assert_eq!(stdout(&o), golden);
}

#[test]
fn run_bianchi_script() {
    let o = tcas(&["run", &fixture("bianchi.cdb"), "--width", "200"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.ends_with(
        "maxwell1:= \\partial_{\\alpha}{F_{\\beta \\gamma}} - \\partial_{\\beta}{F_{\\alpha \\gamma}} + \\partial_{\\gamma}{F_{\\alpha \\beta}};\n"
    ));
}

#[test]
fn latex_output() {
    let f = script("{a,b}::Indices(v).\nx := A_{a} B^{a};\n");
    let o = tcas(&["run", f.path().to_str().unwrap(), "--format", "latex"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "x:= {A}_{a} {B}^{a};\n");
}

#[test]
fn exit_codes() {
    let f = script("x := a + ;\n");
    let o = tcas(&["run", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 1, column"));

    let f = script("x := a;\n@canonicalise!(nope);\n");
    let o = tcas(&["run", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("statement 2"));

    let f = script("");
    let o = tcas(&["run", f.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
}

#[test]
fn dim_option() {
    let f = script("Indices i;\nTensors g;\nLocal t = g(i,i);\nsum;\nPrint;\n.end\n");
    let o = tcas(&["run", f.path().to_str().unwrap(), "--dim", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "t =\n   g(0,0) + g(1,1);\n");
}

#[test]
fn repl_session() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_tcas"))
        .arg("repl")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"{a,b}::Indices(v).\nx := A_{a}\n  B^{a};\n:show x\n:ctx\n:quit\ny := 1;\n")
        .unwrap();
    let o = child.wait_with_output().unwrap();
    let out = stdout(&o);
    assert!(out.starts_with("x:= A_{a} B^{a};\nx:= A_{a} B^{a};\n"));
    assert!(out.contains("indices v: a, b"));
    assert!(!out.contains("y:="));
}

#[test]
fn cloak_csv() {
    let o = tcas(&["cloak", "--geometry", "cylindrical", "--a", "1", "--b", "3", "--emit", "csv", "--sample", "r=2"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "geometry,component,expression,value");
    assert_eq!(rows[1], "cylindrical,eps_r,(-1 + r)/r,1/2");
    assert_eq!(rows[2], "cylindrical,eps_phi,r/(-1 + r),2");
    assert_eq!(rows[3], "cylindrical,eps_z,(-9/4 + 9/4*r)/r,9/8");
}

#[test]
fn cloak_symbolic_table_and_errors() {
    let o = tcas(&["cloak", "--geometry", "spherical"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("eps_theta  b/(b - a)"));
    let o = tcas(&["cloak", "--geometry", "spherical", "--a", "3", "--b", "2"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tcas(&["cloak", "--geometry", "toroidal"]);
    assert_eq!(o.status.code(), Some(2));
}
