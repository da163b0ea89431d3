use serde::{Deserialize, Serialize};

/// Edit attempts made through the editor's modify commands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditLedger {
    pub attempts: u64,
    pub successes: u64,
    /// Successes that needed the trailing-whitespace fallback.
    #[serde(default)]
    pub fallbacks: u64,
}

impl EditLedger {
    pub fn record(&mut self, success: bool, fallback: bool) {
        self.attempts += 1;
        if success {
            self.successes += 1;
            if fallback {
                self.fallbacks += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &EditLedger) {
        self.attempts += other.attempts;
        self.successes += other.successes;
        self.fallbacks += other.fallbacks;
    }
}

/// Success ratio, or `None` when no edit was attempted.
pub fn adherence(ledger: &EditLedger) -> Option<f64> {
    (ledger.attempts > 0).then(|| ledger.successes as f64 / ledger.attempts as f64)
}

/// Total successes over total attempts.
pub fn micro_adherence<'a>(ledgers: impl IntoIterator<Item = &'a EditLedger>) -> Option<f64> {
    let mut total = EditLedger::default();
    for l in ledgers {
        total.merge(l);
    }
    adherence(&total)
}

/// Mean of per-ledger ratios; ledgers without attempts are left out.
pub fn macro_adherence<'a>(ledgers: impl IntoIterator<Item = &'a EditLedger>) -> Option<f64> {
    let ratios: Vec<f64> = ledgers.into_iter().filter_map(adherence).collect();
    (!ratios.is_empty()).then(|| ratios.iter().sum::<f64>() / ratios.len() as f64)
}
