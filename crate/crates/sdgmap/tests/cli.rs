use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::Arc;

use axum::body::Body;
use axum::http::Request;
use http_body_util::BodyExt;
use tower::ServiceExt;

use sdgmap::server::{router, AppState};
use sdgmap_core::{load_library, CompiledLibrary, TopN};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

fn sdgmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sdgmap"))
        .args(args)
        .env_remove("SDGMAP_QUERIES")
        .env_remove("SDGMAP_TOP_N")
        .env_remove("SDGMAP_WORKERS")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn classify_writes_augmented_csv_and_reports_throughput() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out.csv");
    let q = data("sample_queries.tsv");
    let input = data("mini_corpus.csv");
    let o = sdgmap(&[
        "classify",
        "--queries",
        s(&q),
        "--input",
        s(&input),
        "--top-n",
        "2",
        "--output",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("records/sec"));
    let text = std::fs::read_to_string(&out).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.ends_with(
        "sdg_top_1,sdg_top_2,sdg_score_1,sdg_score_2,sdg_matched_subqueries_1,sdg_matched_subqueries_2,\
         sdg_no_recognition,sdg_library_version"
    ));
    assert!(!header.contains("source_file"));
    assert_eq!(text.lines().count(), 16);

    let again = dir.path().join("again.csv");
    let o = sdgmap(&[
        "classify",
        "--queries",
        s(&q),
        "--input",
        s(&input),
        "--top-n",
        "2",
        "--output",
        s(&again),
        "--workers",
        "3",
    ]);
    assert!(o.status.success());
    assert_eq!(std::fs::read(&out).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn usage_errors_exit_one() {
    let q = data("sample_queries.tsv");
    let input = data("mini_corpus.csv");
    let o = sdgmap(&["classify", "--queries", s(&q), "--input", s(&input), "--top-n", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("between 1 and 17"));
    assert_eq!(sdgmap(&["classify", "--queries", s(&q)]).status.code(), Some(1));
    assert_eq!(sdgmap(&["--help"]).status.code(), Some(0));
    let o = sdgmap(&[
        "classify",
        "--queries",
        s(&q),
        "--input",
        s(&input),
        "--map",
        "colour=Title",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn data_errors_exit_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let lib = dir.path().join("bad.tsv");
    std::fs::write(
        &lib,
        "sdg_id\tsubquery_id\tlabel\tquery\n1\ta\t\tpoverty AND\n18\tb\t\tx\n",
    )
    .unwrap();
    let input = data("mini_corpus.csv");
    let o = sdgmap(&["classify", "--queries", s(&lib), "--input", s(&input)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("line 2") && err.contains("line 3"), "{err}");

    let bad_input = dir.path().join("papers.csv");
    std::fs::write(&bad_input, "Title,Abstract\nok,fine\n\"broken,row\n").unwrap();
    let o = sdgmap(&[
        "classify",
        "--queries",
        s(&data("sample_queries.tsv")),
        "--input",
        s(&bad_input),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("papers.csv"), "{}", stderr(&o));

    let o = sdgmap(&["classify", "--queries", "/nonexistent.tsv", "--input", s(&input)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn multiple_inputs_carry_their_source() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("scopus.csv");
    let b = dir.path().join("wos.tsv");
    std::fs::write(&a, "Title,Abstract\nPoverty alleviation,\n").unwrap();
    std::fs::write(&b, "TI\tAB\tDE\nGirls in primary schools\t\tgender equality\n").unwrap();
    let out = dir.path().join("out.csv");
    let o = sdgmap(&[
        "classify",
        "--queries",
        s(&data("sample_queries.tsv")),
        "--input",
        s(&a),
        s(&b),
        "--output",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(
        &header[..7],
        ["Title", "Abstract", "TI", "AB", "DE", "source_file", "source_row"]
    );
    assert!(lines
        .next()
        .unwrap()
        .starts_with("Poverty alleviation,,,,,scopus.csv,1,1,"));
    assert!(lines
        .next()
        .unwrap()
        .starts_with(",,Girls in primary schools,,gender equality,wos.tsv,1,"));
}

#[test]
fn jsonlike_output_feeds_summarize() {
    let dir = tempfile::tempdir().unwrap();
    let q = data("sample_queries.tsv");
    let input = data("mini_corpus.csv");
    let jsonl = dir.path().join("r.jsonl");
    let summary = dir.path().join("summary.csv");
    let o = sdgmap(&[
        "classify",
        "--queries",
        s(&q),
        "--input",
        s(&input),
        "--format",
        "jsonlike",
        "--output",
        s(&jsonl),
        "--summary",
        s(&summary),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&jsonl).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["row_index"], 0);
    assert_eq!(first["result"]["top_n"], 3);

    let o = sdgmap(&["summarize", "--results", s(&jsonl)]);
    assert!(o.status.success());
    assert_eq!(o.stdout, std::fs::read(&summary).unwrap());
    let o = sdgmap(&["summarize", "--results", s(&jsonl), "--top-n", "1"]);
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .starts_with("sdg_id,rank1_count\n1,5\n"));
}

#[test]
fn eval_writes_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("eval.csv");
    let o = sdgmap(&[
        "classify",
        "--queries",
        s(&data("sample_queries.tsv")),
        "--input",
        s(&data("mini_corpus.csv")),
        "--top-n",
        "1",
        "--output",
        s(&dir.path().join("o.csv")),
        "--eval",
        s(&data("mini_truth.csv")),
        "--eval-output",
        s(&table),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.lines().last().unwrap().starts_with("Overall,15,"));
    assert!(text.lines().last().unwrap().ends_with(",100,100"));
}

#[test]
fn env_overrides_apply() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let o = Command::new(env!("CARGO_BIN_EXE_sdgmap"))
        .args(["classify", "--input", s(&data("mini_corpus.csv")), "--output", s(&out)])
        .env("SDGMAP_QUERIES", data("sample_queries.tsv"))
        .env("SDGMAP_TOP_N", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().contains("sdg_top_1,sdg_score_1"));
    assert!(!text.contains("sdg_top_2"));
}

#[test]
fn import_elsevier_writes_a_loadable_library() {
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("elsevier.csv");
    std::fs::write(
        &src,
        "SDG,Query ID,Query\n1,1.1,\"TITLE-ABS-KEY({extreme poverty})\"\n1,1.2,\"TITLE-ABS-KEY(poverty W/2 trap*)\"\n",
    )
    .unwrap();
    let out = dir.path().join("lib.tsv");
    let report = dir.path().join("report.json");
    let o = sdgmap(&[
        "import-elsevier",
        "--source",
        s(&src),
        "--output",
        s(&out),
        "--report",
        s(&report),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("imported 1 of 2 rows"));
    let lib = load_library(&out).unwrap();
    assert_eq!(lib.len(), 1);
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&report).unwrap()).unwrap();
    assert_eq!(report["rejected"][0]["row"], 2);

    std::fs::write(&src, "foo,bar\n1,2\n").unwrap();
    let o = sdgmap(&["import-elsevier", "--source", s(&src), "--output", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("foo"));
}

#[tokio::test]
async fn http_export_matches_cli_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("cli.csv");
    let corpus = data("mini_corpus.csv");
    let q = data("sample_queries.tsv");
    let o = sdgmap(&[
        "classify",
        "--queries",
        s(&q),
        "--input",
        s(&corpus),
        "--output",
        s(&out),
    ]);
    assert!(o.status.success());

    let lib = CompiledLibrary::compile(load_library(&q).unwrap());
    let app = router(Arc::new(AppState::new(lib, TopN::default(), 1).unwrap()), 1 << 20);
    let boundary = "b0undary";
    let mut body =
        format!("--{boundary}\r\nContent-Disposition: form-data; name=\"files\"; filename=\"mini_corpus.csv\"\r\n\r\n")
            .into_bytes();
    body.extend(std::fs::read(&corpus).unwrap());
    body.extend(format!("\r\n--{boundary}--\r\n").into_bytes());
    let req = Request::post("/api/batch")
        .header("content-type", format!("multipart/form-data; boundary={boundary}"))
        .body(Body::from(body))
        .unwrap();
    let res = app.clone().oneshot(req).await.unwrap();
    let proposal: serde_json::Value =
        serde_json::from_slice(&res.into_body().collect().await.unwrap().to_bytes()).unwrap();
    let id = proposal["batch_id"].as_u64().unwrap();
    let req = Request::post(format!("/api/batch/{id}/run"))
        .body(Body::empty())
        .unwrap();
    assert!(app.clone().oneshot(req).await.unwrap().status().is_success());
    let req = Request::get(format!("/api/batch/{id}/export?format=csv"))
        .body(Body::empty())
        .unwrap();
    let bytes = app
        .oneshot(req)
        .await
        .unwrap()
        .into_body()
        .collect()
        .await
        .unwrap()
        .to_bytes();
    assert_eq!(bytes.to_vec(), std::fs::read(&out).unwrap());
}
