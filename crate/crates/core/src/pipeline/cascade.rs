use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{images_to_batch, Arousal, Image, MediaType, StyleLabel, Valence};
use crate::nn::Tensor;

use super::backend::checked_scores;
use super::registry::{ModelRegistry, Slot};
use super::PipelineError;

/// Resizes to `(h, w)` and lays the image out as an `(h, w, c)` tensor of
/// values in `[0, 1]`, RGB order (or luma when `c == 1`).
pub fn preprocess(image: &Image, input_shape: [usize; 3]) -> Result<Tensor<f32>, PipelineError> {
    let batch = images_to_batch(&[image], input_shape)?;
    Ok(batch.reshape(input_shape.to_vec())?)
}

pub fn preprocess_file(path: impl AsRef<Path>, input_shape: [usize; 3]) -> Result<Tensor<f32>, PipelineError> {
    preprocess(&Image::load(path)?, input_shape)
}

/// Winning class and its probability. Exact ties go to `tie_break` when it
/// is among the leaders, otherwise to the lexicographically first leader.
fn pick(scores: &[f64], classes: &[String], tie_break: Option<&str>) -> (String, f64) {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut leaders: Vec<&String> = classes
        .iter()
        .zip(scores)
        .filter(|(_, &s)| s == best)
        .map(|(c, _)| c)
        .collect();
    leaders.sort();
    let winner = tie_break
        .and_then(|t| leaders.iter().find(|c| c.as_str() == t))
        .unwrap_or(&leaders[0]);
    ((*winner).clone(), best)
}

fn run(registry: &ModelRegistry, slot: Slot, input: &Tensor<f32>, tie_break: Option<&str>) -> Result<(String, f64, String), PipelineError> {
    let backend = registry.get(slot)?;
    let scores = checked_scores(backend, input)?;
    let (name, conf) = pick(&scores, backend.classes(), tie_break);
    Ok((name, conf, backend.id().to_string()))
}

fn parse_label<T>(slot: Slot, name: &str, known: &[(&str, T)]) -> Result<T, PipelineError>
where
    T: Copy + std::str::FromStr,
{
    known
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| *v)
        .ok_or_else(|| PipelineError::Registry(format!("slot {slot} produced unknown class '{name}'")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MediaDecision {
    pub media_type: MediaType,
    pub confidence: f64,
    pub model: String,
}

pub fn classify_media_type(input: &Tensor<f32>, registry: &ModelRegistry) -> Result<MediaDecision, PipelineError> {
    let (name, confidence, model) = run(registry, Slot::MediaGate, input, Some("photograph"))?;
    let media_type = parse_label(
        Slot::MediaGate,
        &name,
        &[("artwork", MediaType::Artwork), ("photograph", MediaType::Photograph)],
    )?;
    Ok(MediaDecision {
        media_type,
        confidence,
        model,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmotionDecision {
    pub valence: Valence,
    pub valence_confidence: f64,
    pub arousal: Arousal,
    pub arousal_confidence: f64,
    pub valence_model: String,
    pub arousal_model: String,
}

/// Valence and arousal from the models for `media`; the two decisions are
/// independent.
pub fn classify_emotion(
    input: &Tensor<f32>,
    media: MediaType,
    registry: &ModelRegistry,
) -> Result<EmotionDecision, PipelineError> {
    let v_slot = Slot::valence_for(media);
    let a_slot = Slot::arousal_for(media);
    let (v_name, valence_confidence, valence_model) = run(registry, v_slot, input, Some("positive"))?;
    let (a_name, arousal_confidence, arousal_model) = run(registry, a_slot, input, Some("low"))?;
    Ok(EmotionDecision {
        valence: parse_label(v_slot, &v_name, &[("negative", Valence::Negative), ("positive", Valence::Positive)])?,
        valence_confidence,
        arousal: parse_label(a_slot, &a_name, &[("high", Arousal::High), ("low", Arousal::Low)])?,
        arousal_confidence,
        valence_model,
        arousal_model,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StyleDecision {
    pub style: StyleLabel,
    pub confidence: f64,
    pub model: String,
}

/// Style of an artwork. Calling it for a photograph is an error.
pub fn classify_style(
    input: &Tensor<f32>,
    media: MediaType,
    registry: &ModelRegistry,
) -> Result<StyleDecision, PipelineError> {
    if media != MediaType::Artwork {
        return Err(PipelineError::StyleOfPhotograph);
    }
    let (name, confidence, model) = run(registry, Slot::ArtStyle, input, None)?;
    let style = registry.styles().parse(&name)?;
    Ok(StyleDecision {
        style,
        confidence,
        model,
    })
}

/// Result of the whole cascade for one image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageAnalysis {
    pub media_type: MediaType,
    pub media_confidence: f64,
    pub valence: Valence,
    pub valence_confidence: f64,
    pub arousal: Arousal,
    pub arousal_confidence: f64,
    /// Present exactly for artworks.
    pub style: Option<StyleLabel>,
    pub style_confidence: Option<f64>,
    /// Backend identifiers in call order.
    pub models: Vec<String>,
}

#[derive(Serialize)]
struct AnalysisRecord<'a> {
    media_type: &'a str,
    valence: &'a str,
    arousal: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    style: Option<&'a str>,
    media_confidence: f64,
    valence_confidence: f64,
    arousal_confidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    style_confidence: Option<f64>,
    models: &'a [String],
}

impl ImageAnalysis {
    /// Single-line JSON record with `+V`/`-V` and `+A`/`-A` symbols.
    pub fn to_record(&self) -> String {
        let rec = AnalysisRecord {
            media_type: self.media_type.as_str(),
            valence: self.valence.symbol(),
            arousal: self.arousal.symbol(),
            style: self.style.as_ref().map(StyleLabel::as_str),
            media_confidence: self.media_confidence,
            valence_confidence: self.valence_confidence,
            arousal_confidence: self.arousal_confidence,
            style_confidence: self.style_confidence,
            models: &self.models,
        };
        serde_json::to_string(&rec).expect("analysis record serialises")
    }

    /// Checks style presence against media type and confidence ranges.
    pub fn is_well_formed(&self) -> bool {
        let conf_ok = |c: f64| (0.0..=1.0).contains(&c);
        (self.style.is_some() == (self.media_type == MediaType::Artwork))
            && (self.style.is_some() == self.style_confidence.is_some())
            && conf_ok(self.media_confidence)
            && conf_ok(self.valence_confidence)
            && conf_ok(self.arousal_confidence)
            && self.style_confidence.is_none_or(conf_ok)
    }
}

/// Gate, then the media-specific emotion models, then style for artworks.
pub fn analyze(image: &Image, registry: &ModelRegistry) -> Result<ImageAnalysis, PipelineError> {
    let shape = registry.input_shape().ok_or(PipelineError::MissingSlot(Slot::MediaGate))?;
    let input = preprocess(image, shape)?;
    let media = classify_media_type(&input, registry)?;
    let emotion = classify_emotion(&input, media.media_type, registry)?;
    let mut models = vec![media.model, emotion.valence_model, emotion.arousal_model];
    let (style, style_confidence) = match media.media_type {
        MediaType::Artwork => {
            let s = classify_style(&input, media.media_type, registry)?;
            models.push(s.model);
            (Some(s.style), Some(s.confidence))
        }
        MediaType::Photograph => (None, None),
    };
    Ok(ImageAnalysis {
        media_type: media.media_type,
        media_confidence: media.confidence,
        valence: emotion.valence,
        valence_confidence: emotion.valence_confidence,
        arousal: emotion.arousal,
        arousal_confidence: emotion.arousal_confidence,
        style,
        style_confidence,
        models,
    })
}

pub fn analyze_file(path: impl AsRef<Path>, registry: &ModelRegistry) -> Result<ImageAnalysis, PipelineError> {
    analyze(&Image::load(path)?, registry)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::StyleSet;
    use crate::pipeline::FixedBackend;

    fn registry(gate: [f64; 2]) -> ModelRegistry {
        let mut r = ModelRegistry::default();
        let b = |id: &str, classes: &[&str], s: &[f64]| Arc::new(FixedBackend::new(id, classes, s));
        r.insert(Slot::MediaGate, b("gate", &["artwork", "photograph"], &gate)).unwrap();
        r.insert(Slot::PhotoValence, b("pv", &["negative", "positive"], &[0.2, 0.8])).unwrap();
        r.insert(Slot::PhotoArousal, b("pa", &["high", "low"], &[0.7, 0.3])).unwrap();
        r.insert(Slot::ArtValence, b("av", &["negative", "positive"], &[0.6, 0.4])).unwrap();
        r.insert(Slot::ArtArousal, b("aa", &["high", "low"], &[0.1, 0.9])).unwrap();
        let styles = StyleSet::default();
        let mut one_hot = vec![0.0; styles.names().len()];
        one_hot[4] = 1.0;
        let names: Vec<&str> = styles.names().iter().map(String::as_str).collect();
        r.insert(Slot::ArtStyle, b("style", &names, &one_hot)).unwrap();
        r
    }

    fn input() -> Tensor<f32> {
        Tensor::zeros(vec![16, 16, 3])
    }

    #[test]
    fn gate_argmax_and_tie() {
        let d = classify_media_type(&input(), &registry([0.9, 0.1])).unwrap();
        assert_eq!((d.media_type, d.confidence), (MediaType::Artwork, 0.9));
        let d = classify_media_type(&input(), &registry([0.5, 0.5])).unwrap();
        assert_eq!(d.media_type, MediaType::Photograph);
    }

    #[test]
    fn photo_emotion_composition() {
        let e = classify_emotion(&input(), MediaType::Photograph, &registry([0.1, 0.9])).unwrap();
        assert_eq!((e.valence, e.arousal), (Valence::Positive, Arousal::High));
        assert_eq!((e.valence_model.as_str(), e.arousal_model.as_str()), ("pv", "pa"));
    }

    #[test]
    fn artwork_routes_to_art_models_and_style() {
        let img = Image::filled(20, 20, [0.3, 0.3, 0.3]);
        let a = analyze(&img, &registry([0.9, 0.1])).unwrap();
        assert_eq!(a.models, vec!["gate", "av", "aa", "style"]);
        assert_eq!((a.valence, a.arousal), (Valence::Negative, Arousal::Low));
        assert_eq!(a.style.as_ref().unwrap().as_str(), StyleSet::default().names()[4]);
        assert_eq!(a.style_confidence, Some(1.0));
        assert!(a.is_well_formed());
    }

    #[test]
    fn photograph_has_no_style() {
        let img = Image::filled(20, 20, [0.3, 0.3, 0.3]);
        let a = analyze(&img, &registry([0.2, 0.8])).unwrap();
        assert!(a.style.is_none() && a.is_well_formed());
        assert!(!a.to_record().contains("style"));
        assert!(a.to_record().contains("\"valence\":\"+V\""));
        assert!(matches!(
            classify_style(&input(), MediaType::Photograph, &registry([0.2, 0.8])),
            Err(PipelineError::StyleOfPhotograph)
        ));
    }

    #[test]
    fn style_tie_goes_to_first_name() {
        let classes: Vec<String> = vec!["b".into(), "a".into(), "c".into()];
        assert_eq!(pick(&[0.4, 0.4, 0.2], &classes, None).0, "a");
    }

    #[test]
    fn preprocess_gray_and_range() {
        let gray = Image::filled(5, 7, [0.5, 0.5, 0.5]);
        let t = preprocess(&gray, [16, 16, 3]).unwrap();
        assert_eq!(t.shape(), &[16, 16, 3]);
        assert!(t.data().iter().all(|&v| (v - 0.5).abs() < 1e-6));
        assert_eq!(preprocess(&gray, [16, 16, 3]).unwrap(), t);
    }

    #[test]
    fn missing_file_names_path() {
        let err = preprocess_file("/nonexistent/x.png", [16, 16, 3]).unwrap_err();
        assert!(err.to_string().contains("/nonexistent/x.png"));
    }
}
