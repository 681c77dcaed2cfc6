//! Seeded generators for report corpora and labeled sets with known structure.
//!
//! The field generator builds sentences from *concepts*. Each concept belongs
//! to one label and has a surface form plus three companion tokens that only
//! co-occur with it. Some concepts have two interchangeable surface forms
//! drawn with equal probability, so both forms see identical context
//! distributions. A sentence is `lead concept companion companion [at depth]`
//! with a label-specific lead word.
//!
//! Raw report text is decorated with the punctuation noise the cleaning rules
//! remove, so cleaned sentences contain only lexicon tokens.

use std::collections::BTreeSet;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::classifier::{Label, LabeledSentence};
use crate::corpus::Report;
use crate::embedding::WordVectors;
use crate::mining::{TimelineEntry, WellTimeline};
use crate::seeding::{self, Rng};
use crate::tensor::Tensor;

const LEADS: [[&str; 4]; 3] = [
    ["observed", "experienced", "encountered", "sustained"],
    ["noticed", "erratic", "fluctuating", "increasing"],
    ["performed", "pumped", "reamed", "worked"],
];

const SINGLE_SURFACES: [&str; 30] = [
    "kick",
    "blowout",
    "washout",
    "twistoff",
    "fishing",
    "losses",
    "influx",
    "collapse",
    "overpull",
    "drag",
    "pressure",
    "vibration",
    "cuttings",
    "gas",
    "seepage",
    "pitgain",
    "sweep",
    "backream",
    "wiper",
    "flowcheck",
    "reaming",
    "jarring",
    "spotting",
    "cementing",
    "logging",
    "survey",
    "connection",
    "slugging",
    "displacement",
    "squeeze",
];

const PAIRED_SURFACES: [(&str, &str); 10] = [
    ("stuck", "stuckpipe"),
    ("packoff", "packedoff"),
    ("torque", "rotarytorque"),
    ("spp", "standpipe"),
    ("pooh", "tripout"),
    ("rih", "tripin"),
    ("circ", "circulate"),
    ("lcm", "pill"),
    ("bha", "assembly"),
    ("mud", "fluid"),
];

/// Concepts per label, taken in order from singles then pairs.
const CONCEPTS_PER_LABEL: [(usize, usize); 3] = [(8, 4), (8, 3), (14, 3)];

const DEPTHS: [&str; 8] = ["450m", "900m", "1250m", "1600m", "2100m", "2450m", "2900m", "3300m"];

const SYLLABLES: [&str; 16] = [
    "ka", "lo", "mi", "ne", "ru", "sa", "te", "vo", "di", "fa", "go", "hu", "ji", "po", "ze", "bi",
];

#[derive(Debug, Clone)]
struct Concept {
    label: Label,
    surfaces: Vec<String>,
    companions: [String; 3],
}

/// The token inventory behind the generators.
#[derive(Debug, Clone)]
pub struct Lexicon {
    concepts: Vec<Concept>,
}

impl Default for Lexicon {
    fn default() -> Self {
        Lexicon::new()
    }
}

impl Lexicon {
    pub fn new() -> Self {
        let mut singles = SINGLE_SURFACES.iter();
        let mut pairs = PAIRED_SURFACES.iter();
        let mut concepts = Vec::new();
        let mut companion = 0usize;
        for (label, &(n_single, n_pair)) in Label::ALL.into_iter().zip(&CONCEPTS_PER_LABEL) {
            let surfaces = (0..n_single)
                .map(|_| vec![singles.next().expect("enough single surfaces").to_string()])
                .chain((0..n_pair).map(|_| {
                    let (a, b) = pairs.next().expect("enough paired surfaces");
                    vec![a.to_string(), b.to_string()]
                }));
            for surfaces in surfaces {
                let companions = std::array::from_fn(|_| {
                    companion += 1;
                    syllable_word(companion)
                });
                concepts.push(Concept {
                    label,
                    surfaces,
                    companions,
                });
            }
        }
        Lexicon { concepts }
    }

    /// Token pairs with identical context distributions.
    pub fn interchangeable_pairs(&self) -> Vec<(String, String)> {
        self.concepts
            .iter()
            .filter(|c| c.surfaces.len() == 2)
            .map(|c| (c.surfaces[0].clone(), c.surfaces[1].clone()))
            .collect()
    }

    /// Every token the generators can emit, sorted.
    pub fn tokens(&self) -> BTreeSet<String> {
        let mut out: BTreeSet<String> = LEADS.iter().flatten().map(|s| s.to_string()).collect();
        out.extend(DEPTHS.iter().map(|s| s.to_string()));
        out.insert("at".into());
        for c in &self.concepts {
            out.extend(c.surfaces.iter().cloned());
            out.extend(c.companions.iter().cloned());
        }
        out
    }

    /// A clean token sequence for a sentence of `label`.
    pub fn sentence<R: rand::Rng + ?Sized>(&self, label: Label, rng: &mut R) -> Vec<String> {
        let concepts: Vec<&Concept> = self.concepts.iter().filter(|c| c.label == label).collect();
        let concept = concepts.choose(rng).expect("every label has concepts");
        let mut tokens = vec![LEADS[label.id()].choose(rng).expect("leads").to_string()];
        tokens.push(concept.surfaces.choose(rng).expect("surface").clone());
        let mut comps: Vec<&String> = concept.companions.iter().collect();
        comps.shuffle(rng);
        tokens.extend(comps.into_iter().take(2).cloned());
        if rng.gen_bool(0.5) {
            tokens.push("at".into());
            tokens.push(DEPTHS.choose(rng).expect("depths").to_string());
        }
        tokens
    }
}

/// A pronounceable token that cannot collide with the English word lists.
fn syllable_word(index: usize) -> String {
    let mut n = index;
    let mut word = String::from("q");
    loop {
        word.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
        if n == 0 {
            break;
        }
    }
    word
}

/// Wraps tokens in the kinds of noise the cleaning rules strip. The first
/// and last tokens only get noise that cannot merge with sentence punctuation.
fn decorate<R: rand::Rng + ?Sized>(tokens: &[String], rng: &mut R) -> String {
    let mut parts: Vec<String> = Vec::with_capacity(tokens.len() + 2);
    if rng.gen_bool(0.1) {
        parts.push("\u{2022}".into());
    }
    if rng.gen_bool(0.05) {
        parts.push("====".into());
    }
    let last = tokens.len().saturating_sub(1);
    for (i, t) in tokens.iter().enumerate() {
        let roll: f64 = rng.gen();
        let piece = if roll < 0.08 {
            format!("({t})")
        } else if roll < 0.12 {
            format!("[{t}]")
        } else if roll < 0.18 && i < last {
            format!("{t},")
        } else if roll < 0.21 && i < last {
            format!("{t}-")
        } else if roll < 0.23 {
            format!("#{t}")
        } else {
            t.clone()
        };
        parts.push(piece);
        if i < last && rng.gen_bool(0.03) {
            parts.push("/".into());
        }
    }
    parts.join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldConfig {
    pub wells: usize,
    pub operators: usize,
    /// Inclusive range of report days per well.
    pub min_days: usize,
    pub max_days: usize,
    /// Expected share of a well's days that are NPT.
    pub npt_share: f64,
    pub seed: u64,
}

impl Default for FieldConfig {
    fn default() -> Self {
        FieldConfig {
            wells: 50,
            operators: 5,
            min_days: 10,
            max_days: 30,
            npt_share: 0.25,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticField {
    pub reports: Vec<Report>,
    /// Gold label of every sentence, in report then sentence order.
    pub sentence_labels: Vec<Label>,
    pub lexicon: Lexicon,
}

/// One report per day per well. NPT day counts scale with the number of
/// report days, and NPT reports carry more EVENT and SYMPTOM sentences.
pub fn generate_field(config: &FieldConfig) -> SyntheticField {
    let lexicon = Lexicon::new();
    let mut rng = seeding::substream(config.seed, "synthetic-field");
    let start = NaiveDate::from_ymd_opt(2016, 1, 4).expect("valid date");
    let mut reports = Vec::new();
    let mut sentence_labels = Vec::new();
    for w in 0..config.wells {
        let well_id = format!("W{:03}", w + 1);
        let days = rng.gen_range(config.min_days..=config.max_days);
        let jitter: f64 = rng.gen_range(-1.5..=1.5);
        let npt_days = ((config.npt_share * days as f64 + jitter).round().max(0.0) as usize).min(days);
        let mut day_ids: Vec<usize> = (0..days).collect();
        day_ids.shuffle(&mut rng);
        let npt: BTreeSet<usize> = day_ids.into_iter().take(npt_days).collect();

        let first_op = rng.gen_range(0..config.operators.max(1));
        let handover = rng.gen_bool(0.5).then(|| rng.gen_range(1..days.max(2)));
        let second_op = (first_op + 1 + rng.gen_range(0..config.operators.max(2) - 1)) % config.operators.max(1);
        let offset = Duration::days(rng.gen_range(0..365));

        for day in 0..days {
            let is_npt = npt.contains(&day);
            let op = match handover {
                Some(h) if day >= h => second_op,
                _ => first_op,
            };
            let (n_sentences, mix) = if is_npt {
                (rng.gen_range(2..=4), [0.35, 0.3, 0.35])
            } else {
                (rng.gen_range(1..=2), [0.05, 0.1, 0.85])
            };
            let mut text = String::new();
            for s in 0..n_sentences {
                let label = draw_label(mix, &mut rng);
                let tokens = lexicon.sentence(label, &mut rng);
                if s > 0 {
                    text.push_str(if rng.gen_bool(0.2) { "\n" } else { " " });
                }
                text.push_str(&decorate(&tokens, &mut rng));
                text.push('.');
                sentence_labels.push(label);
            }
            reports.push(Report {
                well_id: well_id.clone(),
                date: start + offset + Duration::days(day as i64),
                operator_id: format!("OP{:02}", op + 1),
                npt: is_npt,
                text,
            });
        }
    }
    SyntheticField {
        reports,
        sentence_labels,
        lexicon,
    }
}

fn draw_label<R: rand::Rng + ?Sized>(mix: [f64; 3], rng: &mut R) -> Label {
    let u: f64 = rng.gen::<f64>() * mix.iter().sum::<f64>();
    let mut acc = 0.0;
    for (label, p) in Label::ALL.into_iter().zip(mix) {
        acc += p;
        if u < acc {
            return label;
        }
    }
    Label::Action
}

/// Exact per-label counts for `n` records: floor of each share, remainder
/// handed out by largest fractional part.
pub fn label_counts(n: usize, mix: [f64; 3]) -> [usize; 3] {
    let total: f64 = mix.iter().sum();
    let exact = mix.map(|p| p / total * n as f64);
    let mut counts = exact.map(|e| e.floor() as usize);
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())));
    let mut missing = n - counts.iter().sum::<usize>();
    for c in order.into_iter().cycle() {
        if missing == 0 {
            break;
        }
        counts[c] += 1;
        missing -= 1;
    }
    counts
}

/// Labeled sentences whose label is fixed by their lead word and concept, so
/// the classes are separable. Records are shuffled.
pub fn separable_labeled_set(n: usize, mix: [f64; 3], seed: u64) -> Vec<LabeledSentence> {
    let lexicon = Lexicon::new();
    let mut rng = seeding::substream(seed, "synthetic-labeled");
    let mut out = Vec::with_capacity(n);
    for (label, count) in Label::ALL.into_iter().zip(label_counts(n, mix)) {
        for _ in 0..count {
            out.push(LabeledSentence::new(lexicon.sentence(label, &mut rng), label));
        }
    }
    out.shuffle(&mut rng);
    out
}

/// A two-class task where only token order carries the label.
#[derive(Debug, Clone)]
pub struct OrderTask {
    pub train: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
    pub vectors: WordVectors,
}

pub const ORDER_FIRST: &str = "alpha";
pub const ORDER_SECOND: &str = "omega";
const ORDER_FILLERS: [&str; 8] = ["rig", "crew", "shift", "line", "deck", "yard", "hose", "tank"];

/// Every filler bag appears twice: `alpha … omega` labeled EVENT and
/// `omega … alpha` labeled SYMPTOM. Both members of a pair land in the same
/// split, so an order-blind model scores exactly 50% on the test set.
pub fn order_task(train_pairs: usize, test_pairs: usize, dim: usize, seed: u64) -> OrderTask {
    let mut rng = seeding::substream(seed, "synthetic-order");
    let make = |n: usize, rng: &mut Rng| {
        let mut out = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let len = rng.gen_range(4..=7);
            let fillers: Vec<String> = (0..len - 2)
                .map(|_| ORDER_FILLERS.choose(rng).expect("fillers").to_string())
                .collect();
            let i = rng.gen_range(0..len - 1);
            let j = rng.gen_range(i + 1..len);
            for (first, second, label) in [
                (ORDER_FIRST, ORDER_SECOND, Label::Event),
                (ORDER_SECOND, ORDER_FIRST, Label::Symptom),
            ] {
                let mut tokens = Vec::with_capacity(len);
                let mut rest = fillers.iter();
                for p in 0..len {
                    tokens.push(if p == i {
                        first.to_string()
                    } else if p == j {
                        second.to_string()
                    } else {
                        rest.next().expect("filler count matches").clone()
                    });
                }
                out.push(LabeledSentence::new(tokens, label));
            }
        }
        out
    };
    let mut train = make(train_pairs, &mut rng);
    let test = make(test_pairs, &mut rng);
    train.shuffle(&mut rng);

    let tokens: Vec<String> = [ORDER_FIRST, ORDER_SECOND]
        .into_iter()
        .chain(ORDER_FILLERS)
        .map(str::to_owned)
        .collect();
    let table = Tensor::uniform(&[tokens.len(), dim], 1.0, &mut rng);
    let vectors = WordVectors::new(tokens, table).expect("distinct tokens");
    OrderTask { train, test, vectors }
}

/// One report per well; the first `npt_wells` wells (in shuffled order)
/// report NPT.
pub fn npt_fixture(wells: usize, npt_wells: usize, seed: u64) -> Vec<Report> {
    let mut rng = seeding::substream(seed, "synthetic-npt");
    let mut ids: Vec<usize> = (0..wells).collect();
    ids.shuffle(&mut rng);
    let npt: BTreeSet<usize> = ids.into_iter().take(npt_wells).collect();
    let date = NaiveDate::from_ymd_opt(2017, 3, 1).expect("valid date");
    (0..wells)
        .map(|w| Report {
            well_id: format!("W{:03}", w + 1),
            date,
            operator_id: format!("OP{:02}", w % 7 + 1),
            npt: npt.contains(&w),
            text: if npt.contains(&w) {
                "observed stuck pipe at 900m.".into()
            } else {
                "performed wiper trip.".into()
            },
        })
        .collect()
}

const TIMELINE_SENTENCES: [&str; 6] = [
    "observed stuck pipe",
    "noticed erratic torque",
    "pumped lcm pill",
    "circ bottoms up",
    "noticed high spp",
    "reamed tight spot",
];

/// Random labeled timelines with `n_sentences` entries spread across wells and
/// operators, for oracle comparisons.
pub fn random_timelines(n_sentences: usize, wells: usize, operators: usize, seed: u64) -> Vec<WellTimeline> {
    let mut rng = seeding::substream(seed, "synthetic-timelines");
    let mut timelines: Vec<WellTimeline> = (0..wells)
        .map(|w| WellTimeline {
            well_id: format!("W{:03}", w + 1),
            entries: Vec::new(),
        })
        .collect();
    let start = NaiveDate::from_ymd_opt(2018, 6, 1).expect("valid date");
    for report_index in 0..n_sentences {
        let w = rng.gen_range(0..wells);
        let t = &mut timelines[w];
        let label = Label::ALL[rng.gen_range(0..3)];
        let mut probabilities = vec![0.1; 3];
        probabilities[label.id()] = 0.8;
        let day = t.entries.len() as i64 / 2;
        t.entries.push(TimelineEntry {
            date: start + Duration::days(day),
            operator_id: format!("OP{:02}", rng.gen_range(0..operators) + 1),
            report_index,
            sentence_index: 0,
            sentence: TIMELINE_SENTENCES.choose(&mut rng).expect("sentences").to_string(),
            label,
            probabilities,
        });
    }
    timelines.retain(|t| !t.entries.is_empty());
    timelines
}
