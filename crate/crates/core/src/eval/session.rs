use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::MediaType;
use crate::metadata::EmotionQuadrant;

use super::EvalError;

pub const SESSION_IMAGES: usize = 16;
pub const CLIPS_PER_IMAGE: usize = 3;
pub const SESSION_SLOTS: usize = SESSION_IMAGES * CLIPS_PER_IMAGE;
/// Images drawn per (quadrant, media type) cell.
pub const PER_CELL: usize = 2;
/// Pool images required per (quadrant, media type) cell.
pub const MIN_POOL_PER_CELL: usize = 4;

/// How the music for one clip slot was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    MatchedEmotionStyle,
    MatchedEmotion,
    /// Second matched-emotion clip, used for photographs.
    MatchedEmotionExtra,
    MismatchedEmotion,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::MatchedEmotionStyle,
        Condition::MatchedEmotion,
        Condition::MatchedEmotionExtra,
        Condition::MismatchedEmotion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::MatchedEmotionStyle => "matched_emotion_style",
            Condition::MatchedEmotion => "matched_emotion",
            Condition::MatchedEmotionExtra => "matched_emotion_extra",
            Condition::MismatchedEmotion => "mismatched_emotion",
        }
    }

    /// The three conditions rated for one image of the given media type.
    pub fn for_media(media: MediaType) -> [Condition; 3] {
        match media {
            MediaType::Artwork => [
                Condition::MatchedEmotionStyle,
                Condition::MatchedEmotion,
                Condition::MismatchedEmotion,
            ],
            MediaType::Photograph => [
                Condition::MatchedEmotionExtra,
                Condition::MatchedEmotion,
                Condition::MismatchedEmotion,
            ],
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, EvalError> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| EvalError::InvalidArgument(format!("unknown condition '{s}'")))
    }
}

/// A candidate study image with its annotations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolImage {
    pub id: String,
    pub media_type: MediaType,
    pub quadrant: EmotionQuadrant,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub style: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipSlot {
    pub clip_id: String,
    pub condition: Condition,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionItem {
    pub image_id: String,
    pub media_type: MediaType,
    pub quadrant: EmotionQuadrant,
    pub clips: Vec<ClipSlot>,
}

/// Server-side plan. Only [`SessionPlan::view`] is shown to subjects.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionPlan {
    pub subject: String,
    pub seed: u64,
    pub items: Vec<SessionItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViewItem {
    pub index: usize,
    pub image_id: String,
    pub image_url: String,
    pub clip_ids: Vec<String>,
    pub clip_urls: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub subject: String,
    pub slots: usize,
    pub items: Vec<ViewItem>,
}

impl SessionPlan {
    pub fn slots(&self) -> usize {
        self.items.iter().map(|i| i.clips.len()).sum()
    }

    pub fn find_clip(&self, clip_id: &str) -> Option<(&SessionItem, &ClipSlot)> {
        self.items
            .iter()
            .find_map(|item| item.clips.iter().find(|c| c.clip_id == clip_id).map(|c| (item, c)))
    }

    pub fn item(&self, image_id: &str) -> Option<&SessionItem> {
        self.items.iter().find(|i| i.image_id == image_id)
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            subject: self.subject.clone(),
            slots: self.slots(),
            items: self
                .items
                .iter()
                .enumerate()
                .map(|(index, item)| ViewItem {
                    index,
                    image_id: item.image_id.clone(),
                    image_url: format!("/v1/image/{}", item.image_id),
                    clip_ids: item.clips.iter().map(|c| c.clip_id.clone()).collect(),
                    clip_urls: item.clips.iter().map(|c| format!("/v1/clip/{}", c.clip_id)).collect(),
                })
                .collect(),
        }
    }
}

fn cell_name(q: EmotionQuadrant, m: MediaType) -> String {
    format!("{} {}", m.as_str(), q.symbol())
}

/// Draws 2 images per (quadrant, media type) cell, shuffles image order and
/// the per-image condition order, and assigns opaque clip ids.
pub fn build_session(pool: &[PoolImage], subject: &str, seed: u64) -> Result<SessionPlan, EvalError> {
    let mut seen = BTreeSet::new();
    for p in pool {
        if !seen.insert(p.id.as_str()) {
            return Err(EvalError::Pool(format!("duplicate image id '{}'", p.id)));
        }
    }
    let mut cells: BTreeMap<(EmotionQuadrant, MediaType), Vec<&PoolImage>> = BTreeMap::new();
    for p in pool {
        cells.entry((p.quadrant, p.media_type)).or_default().push(p);
    }
    let mut deficient = Vec::new();
    for q in EmotionQuadrant::ALL {
        for m in [MediaType::Artwork, MediaType::Photograph] {
            let have = cells.get(&(q, m)).map_or(0, Vec::len);
            if have < MIN_POOL_PER_CELL {
                deficient.push(format!("{}: {have} of {MIN_POOL_PER_CELL}", cell_name(q, m)));
            }
        }
    }
    if !deficient.is_empty() {
        return Err(EvalError::Pool(format!("insufficient images in {}", deficient.join(", "))));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut items = Vec::with_capacity(SESSION_IMAGES);
    for (&(quadrant, media_type), candidates) in &mut cells {
        candidates.sort_by(|a, b| a.id.cmp(&b.id));
        for p in candidates.choose_multiple(&mut rng, PER_CELL) {
            items.push(SessionItem {
                image_id: p.id.clone(),
                media_type,
                quadrant,
                clips: Vec::new(),
            });
        }
    }
    items.shuffle(&mut rng);
    let mut used = BTreeSet::new();
    for item in &mut items {
        let mut conditions = Condition::for_media(item.media_type);
        conditions.shuffle(&mut rng);
        item.clips = conditions
            .into_iter()
            .map(|condition| {
                let clip_id = loop {
                    let id = format!("c{:016x}", rng.gen::<u64>());
                    if used.insert(id.clone()) {
                        break id;
                    }
                };
                ClipSlot { clip_id, condition }
            })
            .collect();
    }
    Ok(SessionPlan {
        subject: subject.to_string(),
        seed,
        items,
    })
}

/// Balance, per-image condition permutation, id uniqueness and blindness.
pub fn check_session(plan: &SessionPlan) -> Result<(), EvalError> {
    let fail = |msg: String| Err(EvalError::Session(msg));
    if plan.items.len() != SESSION_IMAGES {
        return fail(format!("{} images, expected {SESSION_IMAGES}", plan.items.len()));
    }
    let mut cells: BTreeMap<(EmotionQuadrant, MediaType), usize> = BTreeMap::new();
    let mut images = BTreeSet::new();
    let mut clips = BTreeSet::new();
    for item in &plan.items {
        *cells.entry((item.quadrant, item.media_type)).or_default() += 1;
        if !images.insert(&item.image_id) {
            return fail(format!("image '{}' appears twice", item.image_id));
        }
        let got: BTreeSet<Condition> = item.clips.iter().map(|c| c.condition).collect();
        let want: BTreeSet<Condition> = Condition::for_media(item.media_type).into_iter().collect();
        if item.clips.len() != CLIPS_PER_IMAGE || got != want {
            return fail(format!("image '{}' conditions are not a permutation", item.image_id));
        }
        for c in &item.clips {
            if !clips.insert(&c.clip_id) {
                return fail(format!("clip id '{}' appears twice", c.clip_id));
            }
        }
    }
    for q in EmotionQuadrant::ALL {
        for m in [MediaType::Artwork, MediaType::Photograph] {
            let n = cells.get(&(q, m)).copied().unwrap_or(0);
            if n != PER_CELL {
                return fail(format!("{} has {n} images, expected {PER_CELL}", cell_name(q, m)));
            }
        }
    }
    let view = serde_json::to_string(&plan.view()).expect("view serialises");
    for c in Condition::ALL {
        if view.contains(c.as_str()) {
            return fail(format!("view exposes condition '{c}'"));
        }
    }
    if view.contains("condition") {
        return fail("view exposes a condition field".into());
    }
    Ok(())
}
