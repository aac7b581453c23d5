//! Haptics identification quiz: a labeled training pass, then nine unlabeled
//! trials (three per reaction type) in seeded random order.
//!
//! Headless playback hands the descriptor to the responder instead of
//! driving a motor.

use std::io::{BufRead, Write};
use std::path::Path;

use anyhow::{bail, Context};
use nudge_core::{haptic_sequence_for, HapticSequence, ReactionType};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const TRAINING_PLAYS: usize = 2;
pub const TRIALS_PER_TYPE: usize = 3;

pub trait Responder {
    /// Labeled playback during training.
    fn train(&mut self, _kind: ReactionType, _seq: &HapticSequence) {}

    /// Answer for an unlabeled trial; `None` aborts the quiz.
    fn identify(&mut self, trial: usize, seq: &HapticSequence) -> Option<ReactionType>;
}

/// Rows are the true sequence, columns the answer, both in `ReactionType::ALL` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u32; 3]; 3],
    pub rates: [[f64; 3]; 3],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u32; 3]; 3]) -> Self {
        let mut rates = [[0.0; 3]; 3];
        for (r, row) in counts.iter().enumerate() {
            let n: u32 = row.iter().sum();
            if n > 0 {
                for c in 0..3 {
                    rates[r][c] = f64::from(row[c]) / f64::from(n);
                }
            }
        }
        ConfusionMatrix { counts, rates }
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    pub fn accuracy(&self, kind: ReactionType) -> f64 {
        self.rates[kind.index()][kind.index()]
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:<12}", "true\\answer");
        for k in ReactionType::ALL {
            out.push_str(&format!("{:>12}", k.label()));
        }
        out.push('\n');
        for k in ReactionType::ALL {
            out.push_str(&format!("{:<12}", k.label()));
            for c in 0..3 {
                out.push_str(&format!("{:>6} ({:.2})", self.counts[k.index()][c], self.rates[k.index()][c]));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, thiserror::Error)]
#[error("quiz aborted after {answered} of {} trials", TRIALS_PER_TYPE * 3)]
pub struct QuizAborted {
    pub answered: usize,
    pub partial: ConfusionMatrix,
}

/// The nine test trials for `seed`.
pub fn trial_order(seed: u64) -> Vec<ReactionType> {
    let mut trials: Vec<ReactionType> = ReactionType::ALL
        .iter()
        .flat_map(|&k| std::iter::repeat_n(k, TRIALS_PER_TYPE))
        .collect();
    trials.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    trials
}

pub fn haptics_quiz(seed: u64, responder: &mut dyn Responder) -> Result<ConfusionMatrix, QuizAborted> {
    for kind in ReactionType::ALL {
        let seq = haptic_sequence_for(kind);
        for _ in 0..TRAINING_PLAYS {
            responder.train(kind, &seq);
        }
    }
    let mut counts = [[0u32; 3]; 3];
    for (i, truth) in trial_order(seed).into_iter().enumerate() {
        match responder.identify(i, &haptic_sequence_for(truth)) {
            Some(answer) => counts[truth.index()][answer.index()] += 1,
            None => {
                return Err(QuizAborted {
                    answered: i,
                    partial: ConfusionMatrix::from_counts(counts),
                })
            }
        }
    }
    Ok(ConfusionMatrix::from_counts(counts))
}

/// Which reaction a descriptor belongs to, if any.
pub fn decode(seq: &HapticSequence) -> Option<ReactionType> {
    ReactionType::ALL.into_iter().find(|&k| haptic_sequence_for(k) == *seq)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum Policy {
    /// Always right.
    Perfect,
    /// Ignores the sequence.
    Uniform,
    /// Always gives the same answer.
    Fixed { answer: ReactionType },
    /// Row-stochastic: answers column c for true row r with probability `matrix[r][c]`.
    Matrix { matrix: [[f64; 3]; 3] },
}

/// Responder file:
///
/// ```toml
/// policy = "matrix"
/// seed = 11
/// abort_after = 5        # optional
/// matrix = [[0.9, 0.1, 0.0], [0.1, 0.8, 0.1], [0.0, 0.3, 0.7]]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponderScript {
    #[serde(flatten)]
    pub policy: Policy,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub abort_after: Option<usize>,
}

impl ResponderScript {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let s: ResponderScript = toml::from_str(text)?;
        if let Policy::Matrix { matrix } = &s.policy {
            for row in matrix {
                if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    bail!("each matrix row must be probabilities summing to 1");
                }
            }
        }
        Ok(s)
    }

    pub fn from_file(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

pub struct ScriptedResponder {
    script: ResponderScript,
    rng: ChaCha8Rng,
    answered: usize,
}

impl ScriptedResponder {
    pub fn new(script: ResponderScript) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(script.seed);
        ScriptedResponder { script, rng, answered: 0 }
    }

    pub fn policy(policy: Policy, seed: u64) -> Self {
        Self::new(ResponderScript { policy, seed, abort_after: None })
    }
}

impl Responder for ScriptedResponder {
    fn identify(&mut self, _trial: usize, seq: &HapticSequence) -> Option<ReactionType> {
        if self.script.abort_after.is_some_and(|n| self.answered >= n) {
            return None;
        }
        self.answered += 1;
        let answer = match &self.script.policy {
            Policy::Perfect => decode(seq)?,
            Policy::Uniform => ReactionType::ALL[self.rng.gen_range(0..3)],
            Policy::Fixed { answer } => *answer,
            Policy::Matrix { matrix } => {
                let row = matrix[decode(seq)?.index()];
                let x: f64 = self.rng.gen();
                let mut acc = 0.0;
                let mut pick = 2;
                for (c, p) in row.iter().enumerate() {
                    acc += p;
                    if x < acc {
                        pick = c;
                        break;
                    }
                }
                ReactionType::ALL[pick]
            }
        };
        Some(answer)
    }
}

/// Prints each descriptor and reads answers from a terminal. `q` or EOF aborts.
pub struct InteractiveResponder<R, W> {
    input: R,
    output: W,
}

impl<R: BufRead, W: Write> InteractiveResponder<R, W> {
    pub fn new(input: R, output: W) -> Self {
        InteractiveResponder { input, output }
    }

    fn show(&mut self, seq: &HapticSequence) {
        let _ = writeln!(self.output, "  vibrate {:?}", seq.vibrate_pattern());
        let _ = writeln!(self.output, "  {}", serde_json::to_string(seq).unwrap_or_default());
    }
}

impl<R: BufRead, W: Write> Responder for InteractiveResponder<R, W> {
    fn train(&mut self, kind: ReactionType, seq: &HapticSequence) {
        let _ = writeln!(self.output, "training: {} {}", kind.emoji(), kind.label());
        self.show(seq);
    }

    fn identify(&mut self, trial: usize, seq: &HapticSequence) -> Option<ReactionType> {
        loop {
            let _ = writeln!(self.output, "trial {}:", trial + 1);
            self.show(seq);
            let _ = write!(self.output, "answer [h]and_raise / [c]onfused / c[o]nfident / [q]uit: ");
            let _ = self.output.flush();
            let mut line = String::new();
            if self.input.read_line(&mut line).ok()? == 0 {
                return None;
            }
            match line.trim() {
                "q" | "quit" => return None,
                "h" => return Some(ReactionType::HandRaise),
                "c" => return Some(ReactionType::Confused),
                "o" => return Some(ReactionType::Confident),
                other => {
                    if let Ok(k) = other.parse() {
                        return Some(k);
                    }
                    let _ = writeln!(self.output, "not a reaction: {other:?}");
                }
            }
        }
    }
}
