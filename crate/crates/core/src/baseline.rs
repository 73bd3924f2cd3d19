//! Verb-noun word-matching baseline.
//!
//! Tasks and patent titles are reduced to sets of (verb, noun) lemma pairs
//! by lexicon lookup. A task's exposure is the share of its pairs that also
//! occur anywhere in the patent title pool.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::text::{parse_word_list, tokenize};

/// Tokens after a verb that are searched for its noun.
pub const PAIR_WINDOW: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VerbNounPair {
    pub verb: String,
    pub noun: String,
}

impl VerbNounPair {
    pub fn new(verb: &str, noun: &str) -> VerbNounPair {
        VerbNounPair {
            verb: verb.to_string(),
            noun: noun.to_string(),
        }
    }
}

impl fmt::Display for VerbNounPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.verb, self.noun)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicons {
    verbs: HashSet<String>,
    nouns: HashSet<String>,
    lemmas: HashMap<String, String>,
}

impl Lexicons {
    pub fn new<V, N, L>(verbs: V, nouns: N, lemmas: L) -> Lexicons
    where
        V: IntoIterator<Item = String>,
        N: IntoIterator<Item = String>,
        L: IntoIterator<Item = (String, String)>,
    {
        Lexicons {
            verbs: verbs.into_iter().collect(),
            nouns: nouns.into_iter().collect(),
            lemmas: lemmas.into_iter().collect(),
        }
    }

    /// Parse the three data files: verb list, noun list, and a tab-separated
    /// `inflected<TAB>lemma` map.
    pub fn parse(verbs: &str, nouns: &str, lemmas: &str) -> Lexicons {
        let lemma_pairs = lemmas
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .filter_map(|l| {
                let (from, to) = l.split_once('\t')?;
                Some((from.trim().to_lowercase(), to.trim().to_lowercase()))
            });
        Lexicons::new(parse_word_list(verbs), parse_word_list(nouns), lemma_pairs)
    }

    pub fn load_dir(dir: &Path) -> std::io::Result<Lexicons> {
        let read = |name: &str| std::fs::read_to_string(dir.join(name));
        Ok(Lexicons::parse(&read("verbs.txt")?, &read("nouns.txt")?, &read("lemmas.tsv")?))
    }

    /// The shipped lexicons.
    pub fn bundled() -> Lexicons {
        Lexicons::parse(
            include_str!("../data/verbs.txt"),
            include_str!("../data/nouns.txt"),
            include_str!("../data/lemmas.tsv"),
        )
    }

    pub fn is_empty(&self) -> bool {
        self.verbs.is_empty() || self.nouns.is_empty()
    }

    /// Lemma for a lowercase token: explicit map first, then plural and
    /// inflection suffixes stripped when the stem is a known word.
    pub fn lemma(&self, token: &str) -> String {
        if let Some(l) = self.lemmas.get(token) {
            return l.clone();
        }
        if self.known(token) {
            return token.to_string();
        }
        let candidates = [
            token.strip_suffix("ies").map(|s| format!("{s}y")),
            token.strip_suffix("es").map(str::to_string),
            token.strip_suffix('s').map(str::to_string),
            token.strip_suffix("ing").map(str::to_string),
            token.strip_suffix("ing").map(|s| format!("{s}e")),
            token.strip_suffix("ed").map(str::to_string),
            token.strip_suffix('d').map(str::to_string),
        ];
        candidates
            .into_iter()
            .flatten()
            .find(|c| self.known(c))
            .unwrap_or_else(|| token.to_string())
    }

    fn known(&self, word: &str) -> bool {
        self.verbs.contains(word) || self.nouns.contains(word)
    }
}

/// Pair each lexicon verb with the nearest lexicon noun among the next
/// [`PAIR_WINDOW`] tokens.
pub fn extract_verb_noun_pairs(text: &str, lexicons: &Lexicons) -> BTreeSet<VerbNounPair> {
    let lemmas: Vec<String> = tokenize(text).iter().map(|t| lexicons.lemma(t)).collect();
    let mut pairs = BTreeSet::new();
    for (i, word) in lemmas.iter().enumerate() {
        if !lexicons.verbs.contains(word) {
            continue;
        }
        let window = &lemmas[i + 1..lemmas.len().min(i + 1 + PAIR_WINDOW)];
        if let Some(noun) = window.iter().find(|w| lexicons.nouns.contains(*w)) {
            pairs.insert(VerbNounPair::new(word, noun));
        }
    }
    pairs
}

/// Share of the task's pairs found in the patent pool; zero for a task
/// without pairs.
pub fn word_match_exposure(task_pairs: &BTreeSet<VerbNounPair>, patent_pairs: &HashSet<VerbNounPair>) -> f64 {
    if task_pairs.is_empty() {
        return 0.0;
    }
    let hits = task_pairs.iter().filter(|p| patent_pairs.contains(*p)).count();
    hits as f64 / task_pairs.len() as f64
}

/// Union of pairs over a set of patent titles.
pub fn pair_pool<'a, I>(titles: I, lexicons: &Lexicons) -> HashSet<VerbNounPair>
where
    I: IntoIterator<Item = &'a str>,
{
    titles
        .into_iter()
        .flat_map(|t| extract_verb_noun_pairs(t, lexicons))
        .collect()
}
