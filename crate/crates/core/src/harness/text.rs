use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bitext::Side;

const EN_WORDS: &[&str] = &[
    "the", "river", "market", "village", "teacher", "opened", "new", "road", "water", "season",
    "farmers", "school", "children", "price", "rice", "rain", "city", "bridge", "morning",
    "people", "health", "center", "report", "said", "would", "from", "after", "near", "local",
    "family", "house", "small", "large", "today", "week", "festival", "temple", "boat", "fish",
];

const KHMER_FIRST: u32 = 0x1780;
const KHMER_CONSONANTS: u32 = 35;
const KHMER_VOWELS: [char; 6] = ['\u{17B6}', '\u{17B7}', '\u{17B8}', '\u{17BB}', '\u{17C1}', '\u{17C4}'];

/// Base-26 letters for `id`, always at least two characters.
fn latin_tag(mut id: usize) -> String {
    let mut out = Vec::new();
    loop {
        out.push((b'a' + (id % 26) as u8) as char);
        id /= 26;
        if id == 0 && out.len() >= 2 {
            break;
        }
    }
    out.into_iter().rev().collect()
}

fn khmer_tag(mut id: usize) -> String {
    let mut out = Vec::new();
    loop {
        let c = KHMER_FIRST + (id as u32 % KHMER_CONSONANTS);
        out.push(char::from_u32(c).unwrap());
        id /= KHMER_CONSONANTS as usize;
        if id == 0 && out.len() >= 2 {
            break;
        }
    }
    out.into_iter().rev().collect()
}

/// English-looking sentence whose first token encodes `id`, so distinct ids
/// never collide.
fn src_sentence<R: Rng + ?Sized>(id: usize, rng: &mut R) -> String {
    let n = rng.random_range(3..=11);
    let mut words = vec![format!("q{}", latin_tag(id))];
    words.extend((0..n).map(|_| EN_WORDS[rng.random_range(0..EN_WORDS.len())].to_string()));
    words.join(" ")
}

/// Khmer-script sentence whose first token encodes `id`.
fn tgt_sentence<R: Rng + ?Sized>(id: usize, rng: &mut R) -> String {
    let n = rng.random_range(3..=9);
    let mut words = vec![khmer_tag(id)];
    for _ in 0..n {
        let len = rng.random_range(1..=3);
        let mut w = String::new();
        for _ in 0..len {
            w.push(char::from_u32(KHMER_FIRST + rng.random_range(0..KHMER_CONSONANTS)).unwrap());
            w.push(KHMER_VOWELS[rng.random_range(0..KHMER_VOWELS.len())]);
        }
        words.push(w);
    }
    words.join(" ")
}

/// `n` sentences for one side with ids `first_id..first_id + n`,
/// deterministic in `seed`.
pub fn gen_sentences(side: Side, first_id: usize, n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(match side {
        Side::Src => 1,
        Side::Tgt => 2,
    });
    (first_id..first_id + n)
        .map(|id| match side {
            Side::Src => src_sentence(id, &mut rng),
            Side::Tgt => tgt_sentence(id, &mut rng),
        })
        .collect()
}
