//! Frozen outputs of the deterministic offline providers.

use proptest::prelude::*;

use swiftmem_core::{Embedder, OfflineEmbedder, OfflineTagger, Tagger};

const PARAGRAPH: &str = include_str!("fixtures/paragraph.txt");
const EXPECTED_TAGS: &str = include_str!("fixtures/paragraph_tags.txt");

/// The fixture paragraph always produces exactly the committed tag list.
#[test]
fn fixture_paragraph_tags_match_golden_file() {
    let proposal = OfflineTagger.generate_tags(PARAGRAPH).unwrap();
    let got: Vec<&str> = proposal.tags.iter().map(|t| t.as_str()).collect();
    let expected: Vec<&str> = EXPECTED_TAGS.lines().filter(|l| !l.is_empty()).collect();
    assert_eq!(got, expected);
}

proptest! {
    /// The tagger is a pure function and every surviving tag obeys the tag
    /// grammar.
    #[test]
    fn tagger_is_pure_and_grammar_safe(content in "[ -~]{1,200}") {
        let first = OfflineTagger.generate_tags(&content);
        let second = OfflineTagger.generate_tags(&content);
        prop_assert_eq!(&first, &second);
        if let Ok(proposal) = first {
            for tag in &proposal.tags {
                // parse() re-validates the grammar
                prop_assert!(swiftmem_core::TagId::parse(tag.as_str()).is_ok());
            }
            prop_assert!(proposal.tags.len() <= 8);
            for (p, c) in &proposal.relations {
                prop_assert!(proposal.tags.contains(p) && proposal.tags.contains(c));
                prop_assert!(p != c);
            }
        }
    }

    /// The embedder is pure and always emits a unit vector.
    #[test]
    fn embedder_is_pure_and_unit_norm(text in ".{1,150}") {
        let embedder = OfflineEmbedder::new(48);
        let first = embedder.embed(&text);
        let second = embedder.embed(&text);
        prop_assert_eq!(&first, &second);
        if let Ok(v) = first {
            prop_assert_eq!(v.len(), 48);
            let norm = v.iter().map(|x| *x as f64 * *x as f64).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-6, "norm was {}", norm);
        }
    }
}
