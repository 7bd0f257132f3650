//! Network input assembly: `[topic || caption || visual]`.
//!
//! The topic segment is always present. Caption and visual segments can be
//! switched off for ablations; segment order never changes.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::dataset::{ImageCandidate, Topic};
use crate::embeddings::EmbeddingTable;
use crate::{Error, Result, TEXT_DIM, VISUAL_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureConfig {
    pub use_caption: bool,
    pub use_visual: bool,
}

impl FeatureConfig {
    pub const TOPIC_CAPTION: Self = Self {
        use_caption: true,
        use_visual: false,
    };
    pub const TOPIC_VISUAL: Self = Self {
        use_caption: false,
        use_visual: true,
    };
    pub const FULL: Self = Self {
        use_caption: true,
        use_visual: true,
    };

    pub fn input_dim(&self, dims: FeatureDims) -> usize {
        dims.text
            + if self.use_caption { dims.text } else { 0 }
            + if self.use_visual { dims.visual } else { 0 }
    }
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self::FULL
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("topic")?;
        if self.use_caption {
            f.write_str("+caption")?;
        }
        if self.use_visual {
            f.write_str("+vgg")?;
        }
        Ok(())
    }
}

impl FromStr for FeatureConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "topic+caption+vgg" => Ok(Self::FULL),
            "topic+caption" => Ok(Self::TOPIC_CAPTION),
            "topic+vgg" => Ok(Self::TOPIC_VISUAL),
            other => Err(Error::arg(alloc::format!(
                "unknown feature set '{other}' (expected topic+caption+vgg, topic+caption or topic+vgg)"
            ))),
        }
    }
}

/// Segment widths. [`Default`] gives 300-dim text and 1000-dim visual vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureDims {
    pub text: usize,
    pub visual: usize,
}

impl Default for FeatureDims {
    fn default() -> Self {
        Self {
            text: TEXT_DIM,
            visual: VISUAL_DIM,
        }
    }
}

/// Half-open index range of one segment inside an [`InputVector`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub offset: usize,
    pub len: usize,
}

impl Segment {
    pub fn range(&self) -> core::ops::Range<usize> {
        self.offset..self.offset + self.len
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub topic: Segment,
    pub caption: Option<Segment>,
    pub visual: Option<Segment>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InputVector {
    pub values: Vec<f64>,
    pub layout: Layout,
}

impl InputVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

pub fn build_input(
    topic: &[f64],
    caption: Option<&[f64]>,
    visual: Option<&[f64]>,
    config: FeatureConfig,
    dims: FeatureDims,
) -> Result<InputVector> {
    if caption.is_some() != config.use_caption {
        return Err(Error::arg(alloc::format!(
            "caption segment presence does not match feature config {config}"
        )));
    }
    if visual.is_some() != config.use_visual {
        return Err(Error::arg(alloc::format!(
            "visual segment presence does not match feature config {config}"
        )));
    }
    if topic.len() != dims.text {
        return Err(Error::dim("topic segment", dims.text, topic.len()));
    }
    let mut values = Vec::with_capacity(config.input_dim(dims));
    values.extend_from_slice(topic);
    let topic_seg = Segment {
        offset: 0,
        len: dims.text,
    };
    let caption_seg = match caption {
        Some(c) => {
            if c.len() != dims.text {
                return Err(Error::dim("caption segment", dims.text, c.len()));
            }
            let seg = Segment {
                offset: values.len(),
                len: c.len(),
            };
            values.extend_from_slice(c);
            Some(seg)
        }
        None => None,
    };
    let visual_seg = match visual {
        Some(v) => {
            if v.len() != dims.visual {
                return Err(Error::dim("visual segment", dims.visual, v.len()));
            }
            let seg = Segment {
                offset: values.len(),
                len: v.len(),
            };
            values.extend_from_slice(v);
            Some(seg)
        }
        None => None,
    };
    Ok(InputVector {
        values,
        layout: Layout {
            topic: topic_seg,
            caption: caption_seg,
            visual: visual_seg,
        },
    })
}

/// Mean-pooled topic terms, reused across all candidates of a topic.
pub fn topic_vector(topic: &Topic, table: &EmbeddingTable) -> Result<Vec<f64>> {
    Ok(table.mean_pool(&topic.terms)?.vector)
}

pub fn caption_vector(image: &ImageCandidate, table: &EmbeddingTable) -> Vec<f64> {
    table.mean_pool_or_zero(&image.caption_tokens).vector
}

pub fn featurize_pair(
    topic: &Topic,
    image: &ImageCandidate,
    table: &EmbeddingTable,
    config: FeatureConfig,
    dims: FeatureDims,
) -> Result<InputVector> {
    if topic.terms.is_empty() {
        return Err(Error::arg(alloc::format!(
            "topic {} has no terms",
            topic.id
        )));
    }
    if table.dimension() != dims.text {
        return Err(Error::dim("embedding table", dims.text, table.dimension()));
    }
    let topic_vec = topic_vector(topic, table)?;
    featurize_with_topic_vector(&topic_vec, image, table, config, dims)
}

/// [`featurize_pair`] with a precomputed topic segment.
pub fn featurize_with_topic_vector(
    topic_vec: &[f64],
    image: &ImageCandidate,
    table: &EmbeddingTable,
    config: FeatureConfig,
    dims: FeatureDims,
) -> Result<InputVector> {
    let caption = config.use_caption.then(|| caption_vector(image, table));
    let visual = config.use_visual.then_some(image.visual.as_slice());
    build_input(topic_vec, caption.as_deref(), visual, config, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    #[test]
    fn full_concatenation_layout() {
        let x = build_input(
            &[1.0; 300],
            Some(&[2.0; 300]),
            Some(&[3.0; 1000]),
            FeatureConfig::FULL,
            FeatureDims::default(),
        )
        .unwrap();
        assert_eq!(x.len(), 1600);
        assert!(x.values[..300].iter().all(|&v| v == 1.0));
        assert!(x.values[300..600].iter().all(|&v| v == 2.0));
        assert!(x.values[600..].iter().all(|&v| v == 3.0));
        assert_eq!(x.layout.caption.unwrap().range(), 300..600);
        assert_eq!(x.layout.visual.unwrap().range(), 600..1600);
    }

    #[test]
    fn ablation_lengths() {
        let dims = FeatureDims::default();
        let x = build_input(&[0.0; 300], None, Some(&[0.0; 1000]), FeatureConfig::TOPIC_VISUAL, dims)
            .unwrap();
        assert_eq!(x.len(), 1300);
        assert_eq!(x.layout.visual.unwrap().offset, 300);
        let x = build_input(&[0.0; 300], Some(&[0.0; 300]), None, FeatureConfig::TOPIC_CAPTION, dims)
            .unwrap();
        assert_eq!(x.len(), 600);
        assert_eq!(FeatureConfig::FULL.input_dim(dims), 1600);
    }

    #[test]
    fn presence_and_dimension_errors() {
        let dims = FeatureDims::default();
        let err = build_input(&[0.0; 300], None, None, FeatureConfig::FULL, dims).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let err = build_input(&[0.0; 300], Some(&[0.0; 299]), None, FeatureConfig::TOPIC_CAPTION, dims)
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { ref what, .. } if what == "caption segment"));
        let err = build_input(&[0.0; 3], Some(&[0.0; 300]), None, FeatureConfig::TOPIC_CAPTION, dims)
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { ref what, .. } if what == "topic segment"));
    }

    #[test]
    fn parse_and_display_round_trip() {
        for cfg in [FeatureConfig::FULL, FeatureConfig::TOPIC_CAPTION, FeatureConfig::TOPIC_VISUAL] {
            assert_eq!(cfg.to_string().parse::<FeatureConfig>().unwrap(), cfg);
        }
        assert!("caption".parse::<FeatureConfig>().is_err());
    }

    fn toy() -> (EmbeddingTable, FeatureDims) {
        let mut t = EmbeddingTable::new(2).unwrap();
        t.insert("surgery", vec![1.0, 3.0]).unwrap();
        t.insert("doctor", vec![0.0, 1.0]).unwrap();
        (t, FeatureDims { text: 2, visual: 3 })
    }

    #[test]
    fn featurize_single_term_topic_and_empty_caption() {
        let (table, dims) = toy();
        let topic = Topic::new("t", vec!["surgery".to_string()]);
        let image = ImageCandidate::new("i", vec![], vec![0.1, 0.2, 0.7], Some(2.0));
        let x = featurize_pair(&topic, &image, &table, FeatureConfig::FULL, dims).unwrap();
        assert_eq!(x.values, vec![1.0, 3.0, 0.0, 0.0, 0.1, 0.2, 0.7]);
    }

    #[test]
    fn featurize_requires_visual_dim() {
        let (table, dims) = toy();
        let topic = Topic::new("t", vec!["surgery".to_string()]);
        let image = ImageCandidate::new("i", vec!["doctor".to_string()], vec![0.5], None);
        assert!(featurize_pair(&topic, &image, &table, FeatureConfig::FULL, dims).is_err());
        let x = featurize_pair(&topic, &image, &table, FeatureConfig::TOPIC_CAPTION, dims).unwrap();
        assert_eq!(x.values, vec![1.0, 3.0, 0.0, 1.0]);
    }
}
