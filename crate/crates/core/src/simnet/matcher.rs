use std::marker::PhantomData;

use super::{rank, score, PairVectors, Ranked, SimilarityBreakdown, WeightConfig};
use crate::error::{Error, Result};
use crate::index::{IdfClamp, Index, VectorMode};
use crate::scalar::Scalar;
use crate::textpipe::TermVector;

/// Binds an A-side and a B-side index and pulls component vectors for the
/// network. Each side uses raw tf when it holds a single document and
/// tf-idf against its own field statistics otherwise.
#[derive(Debug, Clone, Copy)]
pub struct Matcher<'a, F: Scalar> {
    pub a_index: &'a Index,
    pub b_index: &'a Index,
    pub a_mode: VectorMode,
    pub b_mode: VectorMode,
    _scalar: PhantomData<F>,
}

impl<'a, F: Scalar> Matcher<'a, F> {
    pub fn new(a_index: &'a Index, b_index: &'a Index) -> Self {
        Matcher {
            a_index,
            b_index,
            a_mode: a_index.default_mode(),
            b_mode: b_index.default_mode(),
            _scalar: PhantomData,
        }
    }

    pub fn with_modes(mut self, a_mode: VectorMode, b_mode: VectorMode) -> Self {
        self.a_mode = a_mode;
        self.b_mode = b_mode;
        self
    }

    pub(crate) fn idf_clamp(cfg: &WeightConfig<F>) -> IdfClamp {
        if cfg.clamp.vectors {
            IdfClamp::Clamp
        } else {
            IdfClamp::Raw
        }
    }

    fn vectors(
        index: &Index,
        id: &str,
        fields: &[String],
        mode: VectorMode,
        clamp: IdfClamp,
    ) -> Result<Vec<TermVector<F>>> {
        if !index.contains(id) {
            return Err(Error::not_found(index.doctype().name(), id));
        }
        fields
            .iter()
            .map(|f| index.component_vector(id, f, mode, clamp))
            .collect()
    }

    pub fn a_vectors(&self, a_id: &str, cfg: &WeightConfig<F>) -> Result<Vec<TermVector<F>>> {
        Self::vectors(
            self.a_index,
            a_id,
            cfg.a_components(),
            self.a_mode,
            Self::idf_clamp(cfg),
        )
    }

    pub fn b_vectors(&self, b_id: &str, cfg: &WeightConfig<F>) -> Result<Vec<TermVector<F>>> {
        Self::vectors(
            self.b_index,
            b_id,
            cfg.b_components(),
            self.b_mode,
            Self::idf_clamp(cfg),
        )
    }

    pub fn pair_vectors(
        &self,
        a_id: &str,
        b_id: &str,
        cfg: &WeightConfig<F>,
    ) -> Result<PairVectors<F>> {
        Ok(PairVectors {
            a: self.a_vectors(a_id, cfg)?,
            b: self.b_vectors(b_id, cfg)?,
        })
    }

    pub fn score(
        &self,
        a_id: &str,
        b_id: &str,
        cfg: &WeightConfig<F>,
    ) -> Result<SimilarityBreakdown<F>> {
        score(&self.pair_vectors(a_id, b_id, cfg)?, cfg)
    }

    pub fn rank(&self, a_id: &str, cfg: &WeightConfig<F>, k: usize) -> Result<Vec<Ranked<F>>> {
        rank(
            &self.a_vectors(a_id, cfg)?,
            self.b_index,
            self.b_mode,
            cfg,
            k,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::index::{DocType, Document};
    use crate::textpipe::Pipeline;

    fn indexes() -> (Index, Index) {
        let a = Index::from_documents(
            DocType::A,
            Pipeline::default(),
            [Document::new("a1", DocType::A).with("title", "Space movie premiere")],
        )
        .unwrap();
        let b = Index::from_documents(
            DocType::B,
            Pipeline::default(),
            [
                Document::new("v1", DocType::B).with("title", "Cooking show"),
                Document::new("v2", DocType::B).with("title", "A space movie"),
                Document::new("v3", DocType::B).with("title", "Gardening"),
                Document::new("v4", DocType::B).with("title", "Cooking show"),
            ],
        )
        .unwrap();
        (a, b)
    }

    fn cfg() -> WeightConfig<f64> {
        let mut cfg = WeightConfig::new(["title"], ["title"]).unwrap();
        cfg.set_input_weight(0, 0, 1.0);
        cfg
    }

    #[test]
    fn rank_puts_sharer_first_and_fills_with_zeros() {
        let (a, b) = indexes();
        let m = Matcher::new(&a, &b);
        assert_eq!(m.a_mode, VectorMode::Tf);
        assert_eq!(m.b_mode, VectorMode::TfIdf);
        let ranked = m.rank("a1", &cfg(), 10).unwrap();
        assert_eq!(ranked.len(), 4);
        assert_eq!(ranked[0].b_id, "v2");
        assert!(ranked[0].score > 0.0);
        // the rest share nothing and tie at zero, ordered by id
        assert_eq!(
            ranked[1..]
                .iter()
                .map(|r| (r.b_id.as_str(), r.score))
                .collect::<Vec<_>>(),
            [("v1", 0.0), ("v3", 0.0), ("v4", 0.0)]
        );
        assert_eq!(m.rank("a1", &cfg(), 2).unwrap().len(), 2);
        assert!(m.rank("a1", &cfg(), 0).is_err());
    }

    #[test]
    fn identical_documents_tie_by_id() {
        let (_, b) = indexes();
        let a = Index::from_documents(
            DocType::A,
            Pipeline::default(),
            [Document::new("a1", DocType::A).with("title", "cooking")],
        )
        .unwrap();
        let ranked = Matcher::new(&a, &b).rank("a1", &cfg(), 2).unwrap();
        assert_eq!(ranked[0].b_id, "v1");
        assert_eq!(ranked[1].b_id, "v4");
        assert_eq!(ranked[0].score, ranked[1].score);
    }

    #[test]
    fn rank_matches_pairwise_score() {
        let (a, b) = indexes();
        let m = Matcher::new(&a, &b);
        for r in m.rank("a1", &cfg(), 4).unwrap() {
            assert_eq!(m.score("a1", &r.b_id, &cfg()).unwrap().score, r.score);
        }
    }

    #[test]
    fn unknown_ids_and_empty_corpus() {
        let (a, b) = indexes();
        let m = Matcher::new(&a, &b);
        assert!(matches!(
            m.rank("zz", &cfg(), 3),
            Err(Error::NotFound { .. })
        ));
        assert!(matches!(
            m.score("a1", "zz", &cfg()),
            Err(Error::NotFound { .. })
        ));
        let empty = Index::new(DocType::B, Pipeline::default());
        assert!(Matcher::new(&a, &empty)
            .rank("a1", &cfg(), 3)
            .unwrap()
            .is_empty());
    }
}
