use std::collections::BTreeMap;

use serde::Serialize;

use super::EvalError;

/// `counts[i][j]` = items of true class i predicted as j.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        self.correct() as f64 / self.total() as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in &self.classes {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            out.push_str(c);
            for n in row {
                out.push_str(&format!(",{n}"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn accuracy(predictions: &[usize], labels: &[usize], classes: &[String]) -> Result<ConfusionMatrix, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::Empty("no predictions"));
    }
    if predictions.len() != labels.len() {
        return Err(EvalError::LengthMismatch {
            left: predictions.len(),
            right: labels.len(),
        });
    }
    let k = classes.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (&p, &l) in predictions.iter().zip(labels) {
        if p >= k || l >= k {
            return Err(EvalError::UnknownClass(format!("index {}", p.max(l))));
        }
        counts[l][p] += 1;
    }
    Ok(ConfusionMatrix {
        classes: classes.to_vec(),
        counts,
    })
}

/// Accuracy over class names. The class list is the sorted union of both sides.
pub fn accuracy_by_name(predictions: &[String], labels: &[String]) -> Result<ConfusionMatrix, EvalError> {
    let classes: Vec<String> = labels
        .iter()
        .chain(predictions)
        .cloned()
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = classes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let p: Vec<usize> = predictions.iter().map(|c| index[c.as_str()]).collect();
    let l: Vec<usize> = labels.iter().map(|c| index[c.as_str()]).collect();
    accuracy(&p, &l, &classes)
}

/// Labels from a text file: one per line, blank lines and `#` comments skipped.
/// A line `id,label` keeps only the label.
pub fn parse_label_lines(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| l.rsplit(',').next().unwrap_or(l).trim().to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn all_correct_is_diagonal() {
        let classes = names(&["a", "b", "c"]);
        let m = accuracy(&[0, 1, 2, 2], &[0, 1, 2, 2], &classes).unwrap();
        assert_eq!(m.accuracy(), 1.0);
        assert_eq!(m.counts, vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 2]]);
    }

    #[test]
    fn two_thirds() {
        let m = accuracy(&[1, 0, 1], &[1, 1, 1], &names(&["0", "1"])).unwrap();
        assert!((m.accuracy() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.counts[1][0], 1);
    }

    #[test]
    fn errors() {
        let c = names(&["a"]);
        assert!(matches!(accuracy(&[], &[], &c), Err(EvalError::Empty(_))));
        assert!(accuracy(&[0], &[0, 0], &c).is_err());
        assert!(accuracy(&[1], &[0], &c).is_err());
    }

    #[test]
    fn label_files() {
        let labels = parse_label_lines("# header\nimg1,positive\n\nnegative\n");
        assert_eq!(labels, ["positive", "negative"]);
        let m = accuracy_by_name(&names(&["positive", "positive"]), &labels).unwrap();
        assert_eq!(m.classes, ["negative", "positive"]);
        assert_eq!(m.accuracy(), 0.5);
        assert!(m.to_csv().starts_with("true\\predicted,negative,positive\n"));
    }
}
