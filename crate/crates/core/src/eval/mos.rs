use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::data::MediaType;

use super::ratings::RatingRecord;
use super::session::Condition;
use super::ttest::{paired_t_test, TTestResult};
use super::EvalError;

/// Report columns: (A) mismatched emotion, (B) matched emotion, (C) matched
/// emotion and style.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    Baseline,
    Existing,
    OurApproach,
}

impl Column {
    pub const ALL: [Column; 3] = [Column::Baseline, Column::Existing, Column::OurApproach];

    pub fn of(condition: Condition) -> Column {
        match condition {
            Condition::MismatchedEmotion => Column::Baseline,
            Condition::MatchedEmotion | Condition::MatchedEmotionExtra => Column::Existing,
            Condition::MatchedEmotionStyle => Column::OurApproach,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Column::Baseline => 'A',
            Column::Existing => 'B',
            Column::OurApproach => 'C',
        }
    }

    pub fn header(self) -> &'static str {
        match self {
            Column::Baseline => "(A) Baseline Approach",
            Column::Existing => "(B) Existing Approach",
            Column::OurApproach => "(C) Our Approach",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Column::Baseline => "baseline",
            Column::Existing => "existing",
            Column::OurApproach => "our_approach",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MosCell {
    pub mean: f64,
    pub count: u64,
}

/// One media type's row. Cells without ratings are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MosRow {
    pub baseline: Option<MosCell>,
    pub existing: Option<MosCell>,
    pub our_approach: Option<MosCell>,
}

impl MosRow {
    pub fn get(&self, c: Column) -> Option<MosCell> {
        match c {
            Column::Baseline => self.baseline,
            Column::Existing => self.existing,
            Column::OurApproach => self.our_approach,
        }
    }

    fn slot(&mut self, c: Column) -> &mut Option<MosCell> {
        match c {
            Column::Baseline => &mut self.baseline,
            Column::Existing => &mut self.existing,
            Column::OurApproach => &mut self.our_approach,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MosReport {
    pub artworks: MosRow,
    pub photographs: MosRow,
}

impl MosReport {
    pub fn row(&self, media: MediaType) -> &MosRow {
        match media {
            MediaType::Artwork => &self.artworks,
            MediaType::Photograph => &self.photographs,
        }
    }

    pub fn cell(&self, media: MediaType, column: Column) -> Option<MosCell> {
        self.row(media).get(column)
    }
}

/// Mean rating per (media type, column) cell.
pub fn mos(records: &[RatingRecord]) -> MosReport {
    let mut sums: BTreeMap<(MediaType, Column), (u64, u64)> = BTreeMap::new();
    for r in records {
        let e = sums.entry((r.media_type, Column::of(r.condition))).or_default();
        e.0 += r.rating as u64;
        e.1 += 1;
    }
    let mut report = MosReport::default();
    for ((media, column), (sum, count)) in sums {
        let row = match media {
            MediaType::Artwork => &mut report.artworks,
            MediaType::Photograph => &mut report.photographs,
        };
        *row.slot(column) = Some(MosCell {
            mean: sum as f64 / count as f64,
            count,
        });
    }
    report
}

/// Each subject's mean rating within one cell.
pub fn per_subject_means(records: &[RatingRecord], media: MediaType, column: Column) -> BTreeMap<String, f64> {
    let mut acc: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.media_type == media && Column::of(r.condition) == column) {
        let e = acc.entry(&r.subject).or_default();
        e.0 += r.rating as u64;
        e.1 += 1;
    }
    acc.into_iter()
        .map(|(s, (sum, n))| (s.to_string(), sum as f64 / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTest {
    /// "B vs. C" or "A vs. B".
    pub comparison: String,
    pub media_type: MediaType,
    pub subjects: usize,
    /// `None` when fewer than two subjects rated both cells.
    pub result: Option<TTestResult>,
}

/// Paired tests on per-subject means: B vs. C for artworks and A vs. B for
/// both media types. The later column is the first sample.
pub fn study_t_tests(records: &[RatingRecord], alpha: f64) -> Result<Vec<StudyTest>, EvalError> {
    let plan = [
        (MediaType::Artwork, Column::Existing, Column::OurApproach),
        (MediaType::Artwork, Column::Baseline, Column::Existing),
        (MediaType::Photograph, Column::Baseline, Column::Existing),
    ];
    let mut out = Vec::new();
    for (media, lo, hi) in plan {
        let lo_means = per_subject_means(records, media, lo);
        let hi_means = per_subject_means(records, media, hi);
        let (a, b): (Vec<f64>, Vec<f64>) = hi_means
            .iter()
            .filter_map(|(s, &h)| lo_means.get(s).map(|&l| (h, l)))
            .unzip();
        let result = if a.len() >= 2 { Some(paired_t_test(&a, &b, alpha)?) } else { None };
        out.push(StudyTest {
            comparison: format!("{} vs. {}", lo.letter(), hi.letter()),
            media_type: media,
            subjects: a.len(),
            result,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub records: usize,
    pub subjects: usize,
    pub mos: MosReport,
    pub tests: Vec<StudyTest>,
}

pub fn study_report(records: &[RatingRecord], alpha: f64) -> Result<StudyReport, EvalError> {
    let subjects = records.iter().map(|r| r.subject.as_str()).collect::<std::collections::BTreeSet<_>>().len();
    Ok(StudyReport {
        records: records.len(),
        subjects,
        mos: mos(records),
        tests: study_t_tests(records, alpha)?,
    })
}

fn media_label(m: MediaType) -> &'static str {
    match m {
        MediaType::Artwork => "Artworks",
        MediaType::Photograph => "Photographs",
    }
}

impl StudyReport {
    pub fn mos_csv(&self) -> String {
        let mut out = String::from("media_type,column,header,mean,count\n");
        for m in [MediaType::Artwork, MediaType::Photograph] {
            for c in Column::ALL {
                let (mean, count) = match self.mos.cell(m, c) {
                    Some(cell) => (cell.mean.to_string(), cell.count),
                    None => (String::new(), 0),
                };
                let _ = writeln!(out, "{},{},{},{mean},{count}", m.as_str(), c.key(), c.header());
            }
        }
        out
    }

    pub fn tests_csv(&self) -> String {
        let mut out = String::from("comparison,media_type,subjects,t,df,p,reject,degenerate\n");
        for t in &self.tests {
            match &t.result {
                Some(r) => {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        t.comparison,
                        t.media_type.as_str(),
                        t.subjects,
                        r.t,
                        r.df,
                        r.p,
                        r.reject as u8,
                        r.degenerate as u8
                    );
                }
                None => {
                    let _ = writeln!(out, "{},{},{},,,,,", t.comparison, t.media_type.as_str(), t.subjects);
                }
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Mean opinion score ({} records, {} subjects)", self.records, self.subjects);
        let _ = write!(out, "{:<14}", "");
        for c in Column::ALL {
            let _ = write!(out, "{:>24}", c.header());
        }
        out.push('\n');
        for m in [MediaType::Artwork, MediaType::Photograph] {
            let _ = write!(out, "{:<14}", media_label(m));
            for c in Column::ALL {
                let cell = match self.mos.cell(m, c) {
                    Some(cell) => format!("{:.2} (n={})", cell.mean, cell.count),
                    None => "-".to_string(),
                };
                let _ = write!(out, "{cell:>24}");
            }
            out.push('\n');
        }
        out.push_str("\nPaired t-tests (two-tailed)\n");
        for t in &self.tests {
            let _ = write!(out, "{:<8} {:<12} ", t.comparison, media_label(t.media_type));
            match &t.result {
                Some(r) => {
                    let p = if r.p < 0.001 { "p < .001".to_string() } else { format!("p = {:.3}", r.p) };
                    let _ = writeln!(out, "H = {} t({}) = {:.2}, {p}", r.reject as u8, r.df, r.t);
                }
                None => {
                    let _ = writeln!(out, "not enough paired subjects ({})", t.subjects);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(subject: &str, image: &str, media: MediaType, condition: Condition, rating: u8) -> RatingRecord {
        RatingRecord {
            subject: subject.into(),
            image_id: image.into(),
            media_type: media,
            condition,
            rating,
            timestamp: 0,
        }
    }

    #[test]
    fn cell_means_and_absent_cells() {
        let a = MediaType::Artwork;
        let r = vec![
            rec("s1", "i1", a, Condition::MatchedEmotion, 4),
            rec("s1", "i2", a, Condition::MatchedEmotion, 4),
            rec("s2", "i1", a, Condition::MatchedEmotion, 3),
            rec("s2", "i9", MediaType::Photograph, Condition::MismatchedEmotion, 5),
        ];
        let m = mos(&r);
        let b = m.artworks.existing.unwrap();
        assert!((b.mean - 11.0 / 3.0).abs() < 1e-15);
        assert_eq!(format!("{:.4}", b.mean), "3.6667");
        assert_eq!(b.count, 3);
        assert_eq!(m.photographs.baseline.unwrap().mean, 5.0);
        assert!(m.artworks.our_approach.is_none());
        let json = serde_json::to_string(&m).unwrap();
        for key in ["baseline", "existing", "our_approach"] {
            assert!(json.contains(key));
        }
    }

    #[test]
    fn photograph_extra_counts_as_existing() {
        let p = MediaType::Photograph;
        let r = vec![
            rec("s1", "i", p, Condition::MatchedEmotion, 4),
            rec("s1", "i", p, Condition::MatchedEmotionExtra, 2),
        ];
        assert_eq!(mos(&r).photographs.existing.unwrap().mean, 3.0);
    }

    #[test]
    fn report_layout() {
        let a = MediaType::Artwork;
        let mut r = Vec::new();
        for (s, (b, c)) in [(4, 5), (3, 5), (3, 4)].into_iter().enumerate() {
            let s = format!("s{s}");
            r.push(rec(&s, "i", a, Condition::MatchedEmotion, b));
            r.push(rec(&s, "i", a, Condition::MatchedEmotionStyle, c));
        }
        let report = study_report(&r, 0.05).unwrap();
        assert_eq!(report.subjects, 3);
        let bc = &report.tests[0];
        assert_eq!(bc.comparison, "B vs. C");
        assert!(bc.result.unwrap().t > 0.0);
        assert!(report.tests[1].result.is_none());
        let text = report.to_text();
        assert!(text.contains("(A) Baseline Approach"));
        assert!(text.contains("(B) Existing Approach"));
        assert!(text.contains("(C) Our Approach"));
        assert!(report.mos_csv().contains("artwork,our_approach,(C) Our Approach,4.666666666666667,3"));
        assert!(report.tests_csv().starts_with("comparison,media_type"));
    }
}
