pub const DEFAULT_MIN_DELTA: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStop {
    Continue,
    Stop,
}

/// Tracks a validation metric where larger is better.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopState {
    pub best: Option<f64>,
    pub epochs_since_improvement: usize,
    pub patience: usize,
    pub min_delta: f64,
}

impl EarlyStopState {
    pub fn new(patience: usize) -> Self {
        Self::with_min_delta(patience, DEFAULT_MIN_DELTA)
    }

    pub fn with_min_delta(patience: usize, min_delta: f64) -> Self {
        Self {
            best: None,
            epochs_since_improvement: 0,
            patience: patience.max(1),
            min_delta,
        }
    }

    /// Improvement must exceed `min_delta` strictly.
    pub fn update(&mut self, metric: f64) -> EarlyStop {
        let improved = match self.best {
            None => true,
            Some(best) => metric - best > self.min_delta,
        };
        if improved {
            self.best = Some(metric);
            self.epochs_since_improvement = 0;
        } else {
            self.epochs_since_improvement += 1;
        }
        if self.epochs_since_improvement >= self.patience {
            EarlyStop::Stop
        } else {
            EarlyStop::Continue
        }
    }
}

pub fn early_stop_update(state: &mut EarlyStopState, val_metric: f64) -> EarlyStop {
    state.update(val_metric)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(metrics: &[f64], patience: usize) -> Vec<EarlyStop> {
        let mut s = EarlyStopState::new(patience);
        metrics.iter().map(|&m| s.update(m)).collect()
    }

    #[test]
    fn rising_metric_continues() {
        assert!(run(&[0.5, 0.6, 0.7], 2).iter().all(|&d| d == EarlyStop::Continue));
    }

    #[test]
    fn plateau_stops_after_patience() {
        assert_eq!(
            run(&[0.7, 0.69, 0.69], 2),
            vec![EarlyStop::Continue, EarlyStop::Continue, EarlyStop::Stop]
        );
    }

    #[test]
    fn exact_min_delta_is_not_improvement() {
        let mut s = EarlyStopState::with_min_delta(1, 0.25);
        assert_eq!(s.update(0.5), EarlyStop::Continue);
        assert_eq!(s.update(0.75), EarlyStop::Stop);
        let mut s = EarlyStopState::with_min_delta(1, 0.25);
        s.update(0.5);
        assert_eq!(s.update(0.8), EarlyStop::Continue);
        assert_eq!(s.epochs_since_improvement, 0);
    }
}
