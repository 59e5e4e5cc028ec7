use std::ffi::{c_char, CStr, CString};
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;
use std::ptr;

use stancetopic::lda::{train, EncodedCorpus, TrainConfig};
use stancetopic::synth::{separable_corpus, SeparableSpec};
use stancetopic::text::{TokenSequence, Vocabulary};
use stancetopic_ffi::*;

fn last_error() -> String {
    let p = st_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

fn write_model(dir: &Path) -> (CString, CString) {
    let spec = SeparableSpec {
        docs: 200,
        ..Default::default()
    };
    let c = separable_corpus(&spec);
    let docs: Vec<TokenSequence> = c.docs.clone();
    let vocab = Vocabulary::build(&docs, 10_000).unwrap();
    let enc = EncodedCorpus::encode(&vocab, &docs);
    let cfg = TrainConfig {
        topics: 2,
        burn_in: 20,
        total_iterations: 60,
        ..Default::default()
    };
    let out = train(&enc, &cfg).unwrap();
    let model = dir.join("model.bin");
    let vocab_path = dir.join("vocab.tsv");
    out.model.save(&model).unwrap();
    vocab.write_tsv(BufWriter::new(File::create(&vocab_path).unwrap())).unwrap();
    (cstr(model.to_str().unwrap()), cstr(vocab_path.to_str().unwrap()))
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(st_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn model_round_trip_and_inference() {
    let dir = tempfile::tempdir().unwrap();
    let (m, v) = write_model(dir.path());
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { st_model_load(m.as_ptr(), v.as_ptr(), &mut model) }, StStatus::Ok);
    let mut k = 0usize;
    assert_eq!(unsafe { st_model_num_topics(model, &mut k) }, StStatus::Ok);
    assert_eq!(k, 2);

    let text = cstr("t0w01 t0w02 t0w03 t0w04 t0w05 t0w06 t0w07 t0w08");
    let mut theta = [0.0f64; 2];
    let s = unsafe { st_model_infer_text(model, text.as_ptr(), 100, 3, theta.as_mut_ptr(), 2) };
    assert_eq!(s, StStatus::Ok);
    assert!((theta.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    assert!(theta[0].max(theta[1]) > 0.8, "{theta:?}");

    let mut again = [0.0f64; 2];
    unsafe { st_model_infer_text(model, text.as_ptr(), 100, 3, again.as_mut_ptr(), 2) };
    assert_eq!(theta, again);

    let mut small = [0.0f64; 1];
    let s = unsafe { st_model_infer_text(model, text.as_ptr(), 100, 3, small.as_mut_ptr(), 1) };
    assert_eq!(s, StStatus::BufferTooSmall);
    unsafe { st_model_free(model) };
}

#[test]
fn missing_model_reports_artifact() {
    let mut model = ptr::null_mut();
    let m = cstr("/nonexistent/model.bin");
    let v = cstr("/nonexistent/vocab.tsv");
    let s = unsafe { st_model_load(m.as_ptr(), v.as_ptr(), &mut model) };
    assert_eq!(s, StStatus::MissingArtifact);
    assert!(model.is_null());
    assert!(last_error().contains("train"), "{}", last_error());
}

#[test]
fn null_and_bad_utf8_are_rejected() {
    let mut model = ptr::null_mut();
    let s = unsafe { st_model_load(ptr::null(), ptr::null(), &mut model) };
    assert_eq!(s, StStatus::NullPointer);
    let mut k = 0usize;
    assert_eq!(unsafe { st_model_num_topics(ptr::null(), &mut k) }, StStatus::NullPointer);

    let mut lex = ptr::null_mut();
    assert_eq!(unsafe { st_lexicon_default(&mut lex) }, StStatus::Ok);
    let bad = [0xffu8 as c_char, 0];
    let mut stance = StStance::Unlabeled;
    assert_eq!(
        unsafe { st_lexicon_label(lex, bad.as_ptr(), &mut stance) },
        StStatus::InvalidUtf8
    );
    unsafe { st_lexicon_free(lex) };
    unsafe { st_model_free(ptr::null_mut()) };
}

#[test]
fn lexicon_labels_by_majority() {
    let mut lex = ptr::null_mut();
    assert_eq!(unsafe { st_lexicon_default(&mut lex) }, StStatus::Ok);
    let cases = [
        ("Enough is enough #gunsense", StStance::Control),
        ("Hands off #gunrights #votegunrights", StStance::Rights),
        ("no tags here", StStance::Unlabeled),
    ];
    for (text, want) in cases {
        let t = cstr(text);
        let mut got = StStance::Unlabeled;
        assert_eq!(unsafe { st_lexicon_label(lex, t.as_ptr(), &mut got) }, StStatus::Ok);
        assert_eq!(got, want, "{text}");
    }
    unsafe { st_lexicon_free(lex) };
}

#[test]
fn gazetteer_resolves_codes() {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { st_gazetteer_builtin(&mut g) }, StStatus::Ok);
    let mut code = [1 as c_char; 3];
    let loc = cstr("Austin, TX");
    assert_eq!(unsafe { st_gazetteer_resolve(g, loc.as_ptr(), code.as_mut_ptr()) }, StStatus::Ok);
    assert_eq!(unsafe { CStr::from_ptr(code.as_ptr()) }.to_str().unwrap(), "TX");
    let loc = cstr("somewhere over the rainbow");
    assert_eq!(unsafe { st_gazetteer_resolve(g, loc.as_ptr(), code.as_mut_ptr()) }, StStatus::Ok);
    assert_eq!(code[0], 0);
    unsafe { st_gazetteer_free(g) };

    let mut g = ptr::null_mut();
    let missing = cstr("/nonexistent/gazetteer.tsv");
    assert_eq!(unsafe { st_gazetteer_load(missing.as_ptr(), ptr::null(), &mut g) }, StStatus::Io);
    assert!(g.is_null());
}

#[test]
fn statistics_match_the_library() {
    let x = [1.0, 2.0, 3.0, 4.0, 5.0];
    let y = [2.1, 3.9, 6.2, 7.8, 10.1];
    let mut r = 0.0;
    assert_eq!(unsafe { st_pearson(x.as_ptr(), y.as_ptr(), 5, &mut r) }, StStatus::Ok);
    assert_eq!(r, stancetopic::stats::pearson(&x, &y).unwrap());
    let (mut b, mut a, mut r2) = (0.0, 0.0, 0.0);
    assert_eq!(
        unsafe { st_least_squares(x.as_ptr(), y.as_ptr(), 5, &mut b, &mut a, &mut r2) },
        StStatus::Ok
    );
    assert!((r2 - r * r).abs() < 1e-12);
    assert!((b - 1.99).abs() < 1e-9, "{b}");

    let c = [1.0, 1.0, 1.0];
    assert_eq!(unsafe { st_pearson(c.as_ptr(), x.as_ptr(), 3, &mut r) }, StStatus::Argument);
    assert!(!last_error().is_empty());
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("include/stancetopic.h")).unwrap();
    for sym in ["st_model_load", "st_lexicon_label", "st_gazetteer_resolve", "st_least_squares", "ST_STATUS_PANIC"] {
        assert!(h.contains(sym), "{sym} missing from header");
    }
}

#[test]
fn header_compiles_as_c() {
    let include = Path::new(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"stancetopic.h\"\nint main(void) { StModel *m = 0; size_t k = 0;\n\
         return st_model_num_topics(m, &k) == ST_STATUS_NULL_POINTER ? 0 : 1; }\n",
    )
    .unwrap();
    let status = std::process::Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(&include)
        .arg(&src)
        .status();
    match status {
        Ok(s) => assert!(s.success(), "header does not compile"),
        Err(e) => eprintln!("no C compiler available ({e}); skipped"),
    }
}
