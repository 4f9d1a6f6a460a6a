use super::{check_inputs, make_link, Alignment, AlignParams, CostModel, PathScore};
use crate::embed::{ensure_normalized, EmbeddingMatrix};
use crate::error::{Error, Result};

/// Largest document size the exhaustive aligner accepts.
pub const ORACLE_MAX_SENTENCES: usize = 8;

/// Exhaustive search over every monotonic complete cover. Intended as a test
/// oracle for the DP aligners.
///
/// Covers are enumerated depth-first with link shapes in ascending order, so
/// the first cover found among equal (cost, link count) candidates is the
/// lexicographically smallest.
pub fn brute_force_align(
    src: &EmbeddingMatrix,
    tgt: &EmbeddingMatrix,
    p: &AlignParams,
) -> Result<Alignment> {
    check_inputs(src, tgt, p)?;
    for (side, m) in [("src", src), ("tgt", tgt)] {
        if m.count() > ORACLE_MAX_SENTENCES {
            return Err(Error::InvalidParam {
                name: side,
                detail: format!(
                    "{} sentences exceeds the exhaustive limit of {ORACLE_MAX_SENTENCES}",
                    m.count()
                ),
            });
        }
    }
    let (src, tgt) = (ensure_normalized(src), ensure_normalized(tgt));
    let model = CostModel::new(&src, &tgt, p);
    let mut search = Search {
        model: &model,
        steps: model.steps(),
        n: src.count(),
        m: tgt.count(),
        path: Vec::new(),
        best: None,
    };
    search.visit(0, 0, PathScore::ZERO);
    let (_, steps) = search.best.expect("at least one cover always exists");

    let (mut i, mut j) = (0, 0);
    let links = steps
        .into_iter()
        .map(|(dm, dn)| {
            let link = make_link(i, j, dm, dn, model.link_cost(i, j, dm, dn));
            i += dm;
            j += dn;
            link
        })
        .collect();
    Ok(Alignment::new(links))
}

struct Search<'a> {
    model: &'a CostModel,
    steps: Vec<(usize, usize)>,
    n: usize,
    m: usize,
    path: Vec<(usize, usize)>,
    best: Option<(PathScore, Vec<(usize, usize)>)>,
}

impl Search<'_> {
    fn visit(&mut self, i: usize, j: usize, so_far: PathScore) {
        if i == self.n && j == self.m {
            if self.best.as_ref().is_none_or(|(b, _)| so_far.beats(b)) {
                self.best = Some((so_far, self.path.clone()));
            }
            return;
        }
        for k in 0..self.steps.len() {
            let (dm, dn) = self.steps[k];
            if i + dm > self.n || j + dn > self.m {
                continue;
            }
            let next = so_far.then(self.model.link_cost(i, j, dm, dn));
            self.path.push((dm, dn));
            self.visit(i + dm, j + dn, next);
            self.path.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: [f32; 2]) -> EmbeddingMatrix {
        EmbeddingMatrix::from_rows(2, &[v]).unwrap()
    }

    #[test]
    fn single_sentences_link_when_cheaper_than_two_skips() {
        let p = AlignParams::default();
        // cos 0.6 against a baseline of 1 - 0.6 = 0.4: cost 1.0 < 2.0
        let a = brute_force_align(&one([1.0, 0.0]), &one([0.6, 0.8]), &p).unwrap();
        assert_eq!(a.len(), 1);
        assert_eq!(a.links[0].shape(), (1, 1));

        // anti-parallel: baseline 2, link cost 1.0 > two skips at 0.25
        let cheap_skip = AlignParams {
            skip_penalty: 0.25,
            ..p
        };
        let a = brute_force_align(&one([1.0, 0.0]), &one([-1.0, 0.0]), &cheap_skip).unwrap();
        assert_eq!(a.len(), 2);
        assert!(a.links.iter().all(|l| l.is_null()));
        // the target-only null link (0, 1) sorts before (1, 0)
        assert_eq!(a.links[0].shape(), (0, 1));
        assert_eq!(a.total_cost(), 0.5);

        // exact tie (link cost 1.0 == two skips at 0.5) resolves to the finer cover
        let even = AlignParams {
            skip_penalty: 0.5,
            ..p
        };
        let a = brute_force_align(&one([1.0, 0.0]), &one([-1.0, 0.0]), &even).unwrap();
        assert_eq!(a.len(), 2);
    }

    #[test]
    fn empty_documents_give_empty_alignment() {
        let e = EmbeddingMatrix::empty(3).unwrap();
        assert!(brute_force_align(&e, &e, &AlignParams::default())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn oversized_documents_are_rejected() {
        let rows = vec![[1.0f32, 0.0]; 9];
        let big = EmbeddingMatrix::from_rows(2, &rows).unwrap();
        assert!(brute_force_align(&big, &one([1.0, 0.0]), &AlignParams::default()).is_err());
    }
}
