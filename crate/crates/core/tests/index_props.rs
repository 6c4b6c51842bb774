use std::collections::BTreeSet;

use hetmatch::index::{DocType, Document, IdfClamp, Index, VectorMode};
use hetmatch::simnet::ClampMode;
use hetmatch::textpipe::Pipeline;
use hetmatch::{Matcher64, WeightConfig64};
use proptest::prelude::*;

const WORDS: &[&str] = &[
    "river", "stone", "quick", "amber", "lunar", "maple", "cobalt", "ember", "fjord", "glade",
    "harbor", "ivory",
];

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS), 0..8).prop_map(|ws| ws.join(" "))
}

fn docs(doctype: DocType, prefix: &'static str) -> impl Strategy<Value = Vec<Document>> {
    prop::collection::vec((text(), text()), 1..12).prop_map(move |fields| {
        fields
            .into_iter()
            .enumerate()
            .map(|(i, (t, s))| {
                Document::new(format!("{prefix}{i:02}"), doctype)
                    .with("title", t)
                    .with("summary", s)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn document_frequency_never_decreases(batch in docs(DocType::B, "b")) {
        let mut index = Index::new(DocType::B, Pipeline::default());
        for doc in batch {
            let before: Vec<(String, u32)> = WORDS.iter()
                .map(|w| (w.to_string(), index.document_frequency("title", &hetmatch::textpipe::porter_stem(w))))
                .collect();
            index.add_document(doc).unwrap();
            for (w, df) in before {
                let now = index.document_frequency("title", &hetmatch::textpipe::porter_stem(&w));
                prop_assert!(now >= df);
            }
            if let Some(stats) = index.stats("title") {
                prop_assert_eq!(stats.doc_count, index.len());
            }
        }
    }

    #[test]
    fn rebuild_is_deterministic(batch in docs(DocType::B, "b")) {
        let one = Index::from_documents(DocType::B, Pipeline::default(), batch.clone()).unwrap();
        let mut reversed = batch;
        reversed.reverse();
        let two = Index::from_documents(DocType::B, Pipeline::default(), reversed).unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        one.save(d1.path()).unwrap();
        two.save(d2.path()).unwrap();
        for f in ["manifest.json", "documents.jsonl", "vectors.jsonl", "postings.json"] {
            prop_assert_eq!(
                std::fs::read(d1.path().join(f)).unwrap(),
                std::fs::read(d2.path().join(f)).unwrap()
            );
        }
    }

    #[test]
    fn candidates_cover_every_nonzero_similarity(a_docs in docs(DocType::A, "a"), b_docs in docs(DocType::B, "b")) {
        let a = Index::from_documents(DocType::A, Pipeline::default(), a_docs).unwrap();
        let b = Index::from_documents(DocType::B, Pipeline::default(), b_docs).unwrap();
        let mut cfg = WeightConfig64::uniform(["title", "summary"], ["title", "summary"], 1.0).unwrap();
        cfg.clamp = ClampMode::NONE;
        let m = Matcher64::new(&a, &b).with_modes(VectorMode::Tf, VectorMode::Tf);
        for a_id in a.ids() {
            let query = m.a_vectors(a_id, &cfg).unwrap();
            let mut cands = BTreeSet::new();
            for q in &query {
                for field in ["title", "summary"] {
                    cands.extend(b.candidates(q, field));
                }
            }
            for b_id in b.ids() {
                let s = m.score(a_id, b_id, &cfg).unwrap().score;
                if s != 0.0 {
                    prop_assert!(cands.contains(b_id), "{a_id}/{b_id} scored {s}");
                }
            }
        }
    }

    #[test]
    fn clamped_vectors_are_nonnegative(batch in docs(DocType::B, "b")) {
        let index = Index::from_documents(DocType::B, Pipeline::default(), batch).unwrap();
        for id in index.ids() {
            let v = index.component_vector::<f64>(id, "title", VectorMode::TfIdf, IdfClamp::Clamp).unwrap();
            prop_assert!(v.is_nonnegative());
        }
    }
}
