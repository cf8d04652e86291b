//! English Snowball (Porter2) stemmer.
//!
//! Words made only of `a-z` and apostrophes are stemmed; anything else
//! (digits, non-ASCII letters, upper case) is returned unchanged.

/// Stems a single lowercase word.
pub fn stem(word: &str) -> String {
    if !word.bytes().all(|b| b.is_ascii_lowercase() || b == b'\'') {
        return word.to_string();
    }
    if let Some(fixed) = exception1(word) {
        return fixed.to_string();
    }
    if word.len() < 3 {
        return word.to_string();
    }

    let mut s = Stemmer::new(word);
    s.step_1a();
    if !s.is_exception2() {
        s.step_1b();
        s.step_1c();
        s.step_2();
        s.step_3();
        s.step_4();
        s.step_5();
    }
    s.finish()
}

fn exception1(word: &str) -> Option<&'static str> {
    Some(match word {
        "skis" => "ski",
        "skies" => "sky",
        "dying" => "die",
        "lying" => "lie",
        "tying" => "tie",
        "idly" => "idl",
        "gently" => "gentl",
        "ugly" => "ugli",
        "early" => "earli",
        "only" => "onli",
        "singly" => "singl",
        "sky" => "sky",
        "news" => "news",
        "howe" => "howe",
        "atlas" => "atlas",
        "cosmos" => "cosmos",
        "bias" => "bias",
        "andes" => "andes",
        _ => return None,
    })
}

const EXCEPTION2: [&[u8]; 8] =
    [b"inning", b"outing", b"canning", b"herring", b"earring", b"proceed", b"exceed", b"succeed"];

const DOUBLES: [&[u8]; 9] = [b"bb", b"dd", b"ff", b"gg", b"mm", b"nn", b"pp", b"rr", b"tt"];

fn is_vowel(b: u8) -> bool {
    matches!(b, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn is_valid_li(b: u8) -> bool {
    matches!(b, b'c' | b'd' | b'e' | b'g' | b'h' | b'k' | b'm' | b'n' | b'r' | b't')
}

/// Returns the longest entry of `table` that `w` ends with. Tables list
/// suffixes longest first.
fn longest_suffix<'a, V: Copy>(w: &[u8], table: &'a [(&'a [u8], V)]) -> Option<(usize, V)> {
    table.iter().find(|(suffix, _)| w.ends_with(suffix)).map(|(suffix, v)| (w.len() - suffix.len(), *v))
}

struct Stemmer {
    w: Vec<u8>,
    p1: usize,
    p2: usize,
}

impl Stemmer {
    fn new(word: &str) -> Self {
        let mut w: Vec<u8> = word.as_bytes().to_vec();
        if w.first() == Some(&b'\'') {
            w.remove(0);
        }
        if w.first() == Some(&b'y') {
            w[0] = b'Y';
        }
        for i in 1..w.len() {
            if w[i] == b'y' && is_vowel(w[i - 1]) {
                w[i] = b'Y';
            }
        }
        let p1 = [&b"gener"[..], b"commun", b"arsen"]
            .iter()
            .find(|p| w.starts_with(p))
            .map_or_else(|| region_start(&w, 0), |p| p.len());
        let p2 = region_start(&w, p1);
        Stemmer { w, p1, p2 }
    }

    fn replace_from(&mut self, start: usize, with: &[u8]) {
        self.w.truncate(start);
        self.w.extend_from_slice(with);
    }

    fn has_vowel(&self, end: usize) -> bool {
        self.w[..end].iter().any(|&b| is_vowel(b))
    }

    /// Whether `w[..end]` ends in a short syllable.
    fn ends_short(&self, end: usize) -> bool {
        let w = &self.w[..end];
        match end {
            0 | 1 => false,
            2 => is_vowel(w[0]) && !is_vowel(w[1]),
            n => {
                let (a, b, c) = (w[n - 3], w[n - 2], w[n - 1]);
                !is_vowel(a) && is_vowel(b) && !is_vowel(c) && !matches!(c, b'w' | b'x' | b'Y')
            }
        }
    }

    fn step_1a(&mut self) {
        // apostrophe suffixes
        const APOS: [(&[u8], ()); 3] = [(b"'s'", ()), (b"'s", ()), (b"'", ())];
        if let Some((start, ())) = longest_suffix(&self.w, &APOS) {
            self.w.truncate(start);
        }

        #[derive(Clone, Copy)]
        enum Rule {
            Sses,
            Ies,
            Keep,
            S,
        }
        const TABLE: [(&[u8], Rule); 6] = [
            (b"sses", Rule::Sses),
            (b"ied", Rule::Ies),
            (b"ies", Rule::Ies),
            (b"ss", Rule::Keep),
            (b"us", Rule::Keep),
            (b"s", Rule::S),
        ];
        match longest_suffix(&self.w, &TABLE) {
            Some((start, Rule::Sses)) => self.replace_from(start, b"ss"),
            Some((start, Rule::Ies)) => {
                let with: &[u8] = if start >= 2 { b"i" } else { b"ie" };
                self.replace_from(start, with);
            }
            Some((start, Rule::S)) => {
                if start >= 1 && self.has_vowel(start - 1) {
                    self.w.truncate(start);
                }
            }
            Some((_, Rule::Keep)) | None => {}
        }
    }

    fn is_exception2(&self) -> bool {
        EXCEPTION2.iter().any(|e| self.w == *e)
    }

    fn step_1b(&mut self) {
        const TABLE: [(&[u8], bool); 6] =
            [(b"eedly", true), (b"ingly", false), (b"edly", false), (b"eed", true), (b"ing", false), (b"ed", false)];
        let Some((start, is_eed)) = longest_suffix(&self.w, &TABLE) else {
            return;
        };
        if is_eed {
            if start >= self.p1 {
                self.replace_from(start, b"ee");
            }
            return;
        }
        if !self.has_vowel(start) {
            return;
        }
        self.w.truncate(start);
        if self.w.ends_with(b"at") || self.w.ends_with(b"bl") || self.w.ends_with(b"iz") {
            self.w.push(b'e');
        } else if DOUBLES.iter().any(|d| self.w.ends_with(d)) {
            self.w.pop();
        } else if self.w.len() == self.p1 && self.ends_short(self.w.len()) {
            self.w.push(b'e');
        }
    }

    fn step_1c(&mut self) {
        let n = self.w.len();
        if n >= 3 && matches!(self.w[n - 1], b'y' | b'Y') && !is_vowel(self.w[n - 2]) {
            self.w[n - 1] = b'i';
        }
    }

    fn step_2(&mut self) {
        #[derive(Clone, Copy)]
        enum Rule {
            To(&'static [u8]),
            Ogi,
            Li,
        }
        use Rule::*;
        const TABLE: [(&[u8], Rule); 24] = [
            (b"ization", To(b"ize")),
            (b"ational", To(b"ate")),
            (b"fulness", To(b"ful")),
            (b"ousness", To(b"ous")),
            (b"iveness", To(b"ive")),
            (b"tional", To(b"tion")),
            (b"biliti", To(b"ble")),
            (b"lessli", To(b"less")),
            (b"entli", To(b"ent")),
            (b"ation", To(b"ate")),
            (b"alism", To(b"al")),
            (b"aliti", To(b"al")),
            (b"ousli", To(b"ous")),
            (b"iviti", To(b"ive")),
            (b"fulli", To(b"ful")),
            (b"enci", To(b"ence")),
            (b"anci", To(b"ance")),
            (b"abli", To(b"able")),
            (b"izer", To(b"ize")),
            (b"ator", To(b"ate")),
            (b"alli", To(b"al")),
            (b"bli", To(b"ble")),
            (b"ogi", Ogi),
            (b"li", Li),
        ];
        let Some((start, rule)) = longest_suffix(&self.w, &TABLE) else {
            return;
        };
        if start < self.p1 {
            return;
        }
        match rule {
            To(with) => self.replace_from(start, with),
            Ogi => {
                if start >= 1 && self.w[start - 1] == b'l' {
                    self.replace_from(start, b"og");
                }
            }
            Li => {
                if start >= 1 && is_valid_li(self.w[start - 1]) {
                    self.w.truncate(start);
                }
            }
        }
    }

    fn step_3(&mut self) {
        #[derive(Clone, Copy)]
        enum Rule {
            To(&'static [u8]),
            DeleteInR2,
        }
        use Rule::*;
        const TABLE: [(&[u8], Rule); 9] = [
            (b"ational", To(b"ate")),
            (b"tional", To(b"tion")),
            (b"alize", To(b"al")),
            (b"icate", To(b"ic")),
            (b"iciti", To(b"ic")),
            (b"ative", DeleteInR2),
            (b"ical", To(b"ic")),
            (b"ness", To(b"")),
            (b"ful", To(b"")),
        ];
        let Some((start, rule)) = longest_suffix(&self.w, &TABLE) else {
            return;
        };
        if start < self.p1 {
            return;
        }
        match rule {
            To(with) => self.replace_from(start, with),
            DeleteInR2 => {
                if start >= self.p2 {
                    self.w.truncate(start);
                }
            }
        }
    }

    fn step_4(&mut self) {
        const TABLE: [(&[u8], bool); 18] = [
            (b"ement", false),
            (b"ment", false),
            (b"ence", false),
            (b"ance", false),
            (b"able", false),
            (b"ible", false),
            (b"ent", false),
            (b"ant", false),
            (b"ism", false),
            (b"ate", false),
            (b"iti", false),
            (b"ous", false),
            (b"ive", false),
            (b"ize", false),
            (b"ion", true),
            (b"al", false),
            (b"er", false),
            (b"ic", false),
        ];
        let Some((start, is_ion)) = longest_suffix(&self.w, &TABLE) else {
            return;
        };
        if start < self.p2 {
            return;
        }
        if is_ion && !(start >= 1 && matches!(self.w[start - 1], b's' | b't')) {
            return;
        }
        self.w.truncate(start);
    }

    fn step_5(&mut self) {
        let n = self.w.len();
        if n == 0 {
            return;
        }
        let start = n - 1;
        match self.w[start] {
            b'e' => {
                if start >= self.p2 || (start >= self.p1 && !self.ends_short(start)) {
                    self.w.truncate(start);
                }
            }
            b'l' if start >= self.p2 && start >= 1 && self.w[start - 1] == b'l' => {
                self.w.truncate(start);
            }
            _ => {}
        }
    }

    fn finish(mut self) -> String {
        for b in self.w.iter_mut() {
            if *b == b'Y' {
                *b = b'y';
            }
        }
        String::from_utf8(self.w).expect("ascii")
    }
}

/// Position just after the first non-vowel that follows a vowel, searching
/// from `from`; the word length when there is none.
fn region_start(w: &[u8], from: usize) -> usize {
    let mut i = from;
    while i < w.len() && !is_vowel(w[i]) {
        i += 1;
    }
    while i < w.len() && is_vowel(w[i]) {
        i += 1;
    }
    if i < w.len() {
        i + 1
    } else {
        w.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn short_words_unchanged() {
        for w in ["at", "a", "", "by", "is"] {
            assert_eq!(stem(w), w);
        }
    }

    #[test]
    fn common_examples() {
        assert_eq!(stem("running"), "run");
        assert_eq!(stem("generously"), "generous");
        assert_eq!(stem("movie"), "movi");
        assert_eq!(stem("accha"), "accha");
    }

    #[test]
    fn non_letters_pass_through() {
        assert_eq!(stem("gr8"), "gr8");
        assert_eq!(stem("caf\u{e9}s"), "caf\u{e9}s");
        assert_eq!(stem("\u{915}\u{94d}\u{92f}\u{93e}"), "\u{915}\u{94d}\u{92f}\u{93e}");
    }

    #[test]
    fn exceptional_forms() {
        assert_eq!(stem("skies"), "sky");
        assert_eq!(stem("news"), "news");
        assert_eq!(stem("succeeded"), "succeed");
        assert_eq!(stem("outings"), "outing");
    }

    #[test]
    fn regions() {
        assert_eq!(region_start(b"beautiful", 0), 5);
        assert_eq!(region_start(b"beautiful", 5), 7);
        assert_eq!(region_start(b"beauty", 5), 6);
        assert_eq!(region_start(b"animadversion", 0), 2);
        assert_eq!(region_start(b"animadversion", 2), 4);
    }

    #[test]
    fn apostrophes() {
        assert_eq!(stem("'tis"), "tis");
        assert_eq!(stem("dog's"), "dog");
        assert_eq!(stem("dogs'"), "dog");
    }
}
