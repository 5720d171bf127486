/// Outcome of reporting one epoch's validation loss.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    NoImprovement,
    Stop,
}

/// Stops once the best loss has failed to drop by more than `min_delta`
/// for `patience` consecutive epochs.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    min_delta: f64,
    patience: usize,
    best: f64,
    best_epoch: Option<usize>,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(min_delta: f64, patience: usize) -> Self {
        EarlyStopping {
            min_delta,
            patience,
            best: f64::INFINITY,
            best_epoch: None,
            wait: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> Verdict {
        if loss < self.best - self.min_delta {
            self.best = loss;
            self.best_epoch = Some(epoch);
            self.wait = 0;
            return Verdict::Improved;
        }
        self.wait += 1;
        if self.wait >= self.patience {
            Verdict::Stop
        } else {
            Verdict::NoImprovement
        }
    }

    pub fn best_epoch(&self) -> Option<usize> {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

/// Runs the rule over a loss sequence (epochs numbered from 1), capped at
/// `max_epochs`. Returns (epochs run, best epoch).
pub fn simulate(losses: &[f64], min_delta: f64, patience: usize, max_epochs: usize) -> (usize, Option<usize>) {
    let mut es = EarlyStopping::new(min_delta, patience);
    let mut ran = 0;
    for (i, &loss) in losses.iter().take(max_epochs).enumerate() {
        ran = i + 1;
        if es.observe(ran, loss) == Verdict::Stop {
            break;
        }
    }
    (ran, es.best_epoch())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripted_sequence() {
        let losses = [0.50, 0.49, 0.4899, 0.48991];
        assert_eq!(simulate(&losses, 5e-6, 2, 4), (4, Some(3)));
        // One more flat epoch exhausts the patience.
        assert_eq!(
            simulate(&[0.50, 0.49, 0.4899, 0.48991, 0.4899], 5e-6, 2, 10),
            (5, Some(3))
        );
    }

    #[test]
    fn gains_within_min_delta_do_not_count() {
        assert_eq!(simulate(&[1.0, 0.999_999, 0.999_998], 5e-6, 2, 10), (3, Some(1)));
    }

    #[test]
    fn zero_patience_stops_at_first_stall() {
        assert_eq!(simulate(&[1.0, 1.0, 0.5], 0.0, 0, 10), (2, Some(1)));
    }
}
