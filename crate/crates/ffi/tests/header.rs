use std::path::{Path, PathBuf};
use std::process::Command;

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn header() -> String {
    std::fs::read_to_string(crate_dir().join("include/review_rating.h")).expect("header generated by build.rs")
}

fn exported_functions() -> Vec<String> {
    let src = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    src.lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap().to_string())
        .collect()
}

#[test]
fn header_declares_every_export() {
    let h = header();
    let fns = exported_functions();
    assert!(fns.len() >= 20, "{fns:?}");
    for f in &fns {
        assert!(h.contains(&format!("{f}(")), "{f} missing from header");
    }
    for ty in ["typedef struct RrLexicon RrLexicon;", "typedef struct RrModel RrModel;", "RR_STATUS_OK = 0"] {
        assert!(h.contains(ty), "{ty}");
    }
}

fn cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(&src, "#include \"review_rating.h\"\nint main(void) { return 0; }\n").unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(crate_dir().join("include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

/// Directory holding the library artifacts of this build.
fn artifact_dir() -> Option<PathBuf> {
    let exe = std::env::current_exe().ok()?;
    let deps = exe.parent()?;
    let dir = if deps.ends_with("deps") { deps.parent()? } else { deps };
    Some(dir.to_path_buf())
}

const C_PROGRAM: &str = r#"
#include <stdio.h>
#include <string.h>
#include "review_rating.h"

int main(void) {
    uint8_t preds[3] = {1, 5, 3};
    uint8_t truths[3] = {2, 5, 5};
    double mae = 0.0;
    if (rr_mae(preds, truths, 3, &mae) != RR_STATUS_OK) return 1;
    if (mae != 1.0) return 2;
    if (rr_mae(NULL, truths, 3, &mae) != RR_STATUS_NULL_POINTER) return 3;
    if (rr_last_error() == NULL) return 4;

    RrLexicon *lex = NULL;
    RrTagger *tagger = NULL;
    if (rr_lexicon_bundled(&lex) != RR_STATUS_OK) return 5;
    if (rr_tagger_bundled(&tagger) != RR_STATUS_OK) return 6;
    RrPhraseList *list = NULL;
    if (rr_extract_phrases(lex, tagger, "The food was good.", 0, &list) != RR_STATUS_OK) return 7;
    if (rr_phrase_list_len(list) != 2) return 8;
    RrPhrase p;
    if (rr_phrase_list_get(list, 0, &p) != RR_STATUS_OK) return 9;
    printf("%s %s %d\n", p.sentiment_word, p.target_word, p.polarity);
    rr_phrase_list_free(list);
    rr_tagger_free(tagger);
    rr_lexicon_free(lex);
    return 0;
}
"#;

#[test]
fn c_program_links_and_runs() {
    let Some(cc) = cc() else {
        eprintln!("no C compiler found; skipping");
        return;
    };
    let Some(lib) = artifact_dir().map(|d| d.join("libreview_rating_ffi.a")).filter(|p| p.exists()) else {
        eprintln!("static library not built in this profile; skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new(cc)
        .arg("-std=c99")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(&src)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(Path::new(&exe)).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "good food 1\n");
}
