//! Word-to-feature annotations for per-feature aggregation.

use super::ReportError;
use std::collections::{BTreeMap, BTreeSet};

/// The six visual concepts a word can be annotated with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Feature {
    Brightness,
    Color,
    Texture,
    Lines,
    Shape,
    Form,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::Brightness,
        Feature::Color,
        Feature::Texture,
        Feature::Lines,
        Feature::Shape,
        Feature::Form,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Feature::Brightness => "brightness",
            Feature::Color => "color",
            Feature::Texture => "texture",
            Feature::Lines => "lines",
            Feature::Shape => "shape",
            Feature::Form => "form",
        }
    }

    pub fn parse(token: &str) -> Option<Feature> {
        Feature::ALL.into_iter().find(|f| f.as_str() == token)
    }
}

/// Features assigned to each visual word. A word may carry several.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureAnnotation {
    by_word: BTreeMap<u32, BTreeSet<Feature>>,
}

impl FeatureAnnotation {
    /// Parse `word_id,feature` CSV text. A leading `word_id,feature`
    /// header line and blank lines are tolerated; repeated rows merge.
    pub fn parse_csv(text: &str) -> Result<Self, ReportError> {
        let mut by_word: BTreeMap<u32, BTreeSet<Feature>> = BTreeMap::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let row = raw.trim();
            if row.is_empty() || (line == 1 && row == "word_id,feature") {
                continue;
            }
            let (id_token, feature_token) =
                row.split_once(',').ok_or_else(|| ReportError::BadAnnotationRow {
                    line,
                    content: raw.to_owned(),
                })?;
            let word_id: u32 =
                id_token
                    .trim()
                    .parse()
                    .map_err(|_| ReportError::BadAnnotationRow {
                        line,
                        content: raw.to_owned(),
                    })?;
            let token = feature_token.trim();
            let feature = Feature::parse(token).ok_or_else(|| ReportError::UnknownFeature {
                token: token.to_owned(),
                line,
            })?;
            by_word.entry(word_id).or_default().insert(feature);
        }
        Ok(Self { by_word })
    }

    /// Words annotated with `feature`, ascending.
    pub fn words_of(&self, feature: Feature) -> Vec<u32> {
        self.by_word
            .iter()
            .filter(|(_, fs)| fs.contains(&feature))
            .map(|(&w, _)| w)
            .collect()
    }

    pub fn features_of(&self, word: u32) -> impl Iterator<Item = Feature> + '_ {
        self.by_word
            .get(&word)
            .into_iter()
            .flat_map(|fs| fs.iter().copied())
    }

    /// Drop annotations for words not accepted by `keep` (e.g. words
    /// whose probe was skipped and so carry no measurable metric).
    pub fn retain_words(&mut self, mut keep: impl FnMut(u32) -> bool) {
        self.by_word.retain(|&word, _| keep(word));
    }

    /// Number of annotated words.
    pub fn len(&self) -> usize {
        self.by_word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_word.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let with = FeatureAnnotation::parse_csv("word_id,feature\n3,color\n7,shape\n").unwrap();
        let without = FeatureAnnotation::parse_csv("3,color\n7,shape\n").unwrap();
        assert_eq!(with, without);
        assert_eq!(with.words_of(Feature::Color), vec![3]);
        assert_eq!(with.words_of(Feature::Shape), vec![7]);
        assert_eq!(with.len(), 2);
    }

    #[test]
    fn merges_repeated_rows_and_multi_feature_words() {
        let ann =
            FeatureAnnotation::parse_csv("5,color\n5,color\n5,texture\n9,texture\n").unwrap();
        assert_eq!(ann.len(), 2);
        assert_eq!(
            ann.features_of(5).collect::<Vec<_>>(),
            vec![Feature::Color, Feature::Texture]
        );
        assert_eq!(ann.words_of(Feature::Texture), vec![5, 9]);
    }

    #[test]
    fn retain_words_drops_filtered_annotations() {
        let mut ann = FeatureAnnotation::parse_csv("3,color\n7,shape\n9,color\n").unwrap();
        ann.retain_words(|w| w != 7);
        assert_eq!(ann.len(), 2);
        assert_eq!(ann.words_of(Feature::Shape), Vec::<u32>::new());
        assert_eq!(ann.words_of(Feature::Color), vec![3, 9]);
    }

    #[test]
    fn unknown_feature_is_an_error() {
        assert!(matches!(
            FeatureAnnotation::parse_csv("1,gloss\n"),
            Err(ReportError::UnknownFeature { token, line: 1 }) if token == "gloss"
        ));
    }

    #[test]
    fn malformed_rows_are_errors() {
        assert!(matches!(
            FeatureAnnotation::parse_csv("1,color\nshape\n"),
            Err(ReportError::BadAnnotationRow { line: 2, .. })
        ));
        assert!(matches!(
            FeatureAnnotation::parse_csv("x,color\n"),
            Err(ReportError::BadAnnotationRow { line: 1, .. })
        ));
    }

    #[test]
    fn feature_tokens_round_trip() {
        for f in Feature::ALL {
            assert_eq!(Feature::parse(f.as_str()), Some(f));
        }
        assert_eq!(Feature::parse("Brightness"), None, "tokens are lowercase");
    }
}
