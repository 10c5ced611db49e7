//! Porter's suffix-stripping stemmer, original 1980 rule set.
//!
//! Words of two letters or fewer and tokens containing anything other than
//! ASCII lowercase letters are returned unchanged.

/// Stems one lowercase token.
pub fn stem(token: &str) -> String {
    if token.len() <= 2 || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.to_string();
    }
    let mut w = Word { b: token.as_bytes().to_vec() };
    w.step1a();
    w.step1b();
    w.step1c();
    w.step2();
    w.step3();
    w.step4();
    w.step5a();
    w.step5b();
    String::from_utf8(w.b).expect("ascii in, ascii out")
}

type Condition = fn(&Word, usize) -> bool;

struct Word {
    b: Vec<u8>,
}

impl Word {
    fn is_consonant(&self, i: usize) -> bool {
        match self.b[i] {
            b'a' | b'e' | b'i' | b'o' | b'u' => false,
            b'y' => i == 0 || !self.is_consonant(i - 1),
            _ => true,
        }
    }

    /// Number of VC sequences in the first `len` letters.
    fn measure(&self, len: usize) -> usize {
        let mut m = 0;
        let mut i = 0;
        while i < len && self.is_consonant(i) {
            i += 1;
        }
        loop {
            while i < len && !self.is_consonant(i) {
                i += 1;
            }
            if i >= len {
                return m;
            }
            while i < len && self.is_consonant(i) {
                i += 1;
            }
            m += 1;
        }
    }

    fn has_vowel(&self, len: usize) -> bool {
        (0..len).any(|i| !self.is_consonant(i))
    }

    fn ends_double_consonant(&self, len: usize) -> bool {
        len >= 2 && self.b[len - 1] == self.b[len - 2] && self.is_consonant(len - 1)
    }

    /// consonant-vowel-consonant ending where the last consonant is not w, x or y.
    fn ends_cvc(&self, len: usize) -> bool {
        len >= 3
            && self.is_consonant(len - 3)
            && !self.is_consonant(len - 2)
            && self.is_consonant(len - 1)
            && !matches!(self.b[len - 1], b'w' | b'x' | b'y')
    }

    fn ends_with(&self, suffix: &str) -> bool {
        self.b.ends_with(suffix.as_bytes())
    }

    fn replace_suffix(&mut self, suffix_len: usize, replacement: &str) {
        self.b.truncate(self.b.len() - suffix_len);
        self.b.extend_from_slice(replacement.as_bytes());
    }

    /// Applies the first rule whose suffix matches, if its condition holds on the stem.
    fn apply_rules(&mut self, rules: &[(&str, &str)], cond: Condition) -> bool {
        for &(suffix, replacement) in rules {
            if self.ends_with(suffix) {
                let stem_len = self.b.len() - suffix.len();
                if cond(self, stem_len) {
                    self.replace_suffix(suffix.len(), replacement);
                    return true;
                }
                return false;
            }
        }
        false
    }

    fn step1a(&mut self) {
        if self.ends_with("sses") {
            self.replace_suffix(4, "ss");
        } else if self.ends_with("ies") {
            self.replace_suffix(3, "i");
        } else if self.ends_with("ss") {
        } else if self.ends_with("s") {
            self.replace_suffix(1, "");
        }
    }

    fn step1b(&mut self) {
        if self.ends_with("eed") {
            if self.measure(self.b.len() - 3) > 0 {
                self.replace_suffix(1, "");
            }
            return;
        }
        let stripped = if self.ends_with("ed") && self.has_vowel(self.b.len() - 2) {
            self.replace_suffix(2, "");
            true
        } else if self.ends_with("ing") && self.has_vowel(self.b.len() - 3) {
            self.replace_suffix(3, "");
            true
        } else {
            false
        };
        if !stripped {
            return;
        }
        let len = self.b.len();
        if self.ends_with("at") || self.ends_with("bl") || self.ends_with("iz") {
            self.b.push(b'e');
        } else if self.ends_double_consonant(len) && !matches!(self.b[len - 1], b'l' | b's' | b'z') {
            self.b.pop();
        } else if self.measure(len) == 1 && self.ends_cvc(len) {
            self.b.push(b'e');
        }
    }

    fn step1c(&mut self) {
        let len = self.b.len();
        if self.ends_with("y") && self.has_vowel(len - 1) {
            self.b[len - 1] = b'i';
        }
    }

    fn step2(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("ational", "ate"),
            ("tional", "tion"),
            ("enci", "ence"),
            ("anci", "ance"),
            ("izer", "ize"),
            ("abli", "able"),
            ("alli", "al"),
            ("entli", "ent"),
            ("eli", "e"),
            ("ousli", "ous"),
            ("ization", "ize"),
            ("ation", "ate"),
            ("ator", "ate"),
            ("alism", "al"),
            ("iveness", "ive"),
            ("fulness", "ful"),
            ("ousness", "ous"),
            ("aliti", "al"),
            ("iviti", "ive"),
            ("biliti", "ble"),
        ];
        self.apply_rules(RULES, |w, len| w.measure(len) > 0);
    }

    fn step3(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("icate", "ic"),
            ("ative", ""),
            ("alize", "al"),
            ("iciti", "ic"),
            ("ical", "ic"),
            ("ful", ""),
            ("ness", ""),
        ];
        self.apply_rules(RULES, |w, len| w.measure(len) > 0);
    }

    fn step4(&mut self) {
        const RULES: &[(&str, &str)] = &[
            ("al", ""),
            ("ance", ""),
            ("ence", ""),
            ("er", ""),
            ("ic", ""),
            ("able", ""),
            ("ible", ""),
            ("ant", ""),
            ("ement", ""),
            ("ment", ""),
            ("ent", ""),
            ("ion", ""),
            ("ou", ""),
            ("ism", ""),
            ("ate", ""),
            ("iti", ""),
            ("ous", ""),
            ("ive", ""),
            ("ize", ""),
        ];
        self.apply_rules(RULES, |w, len| {
            if w.measure(len) <= 1 {
                return false;
            }
            // "ion" additionally needs the stem to end in s or t
            if w.b[len..].starts_with(b"ion") {
                return len > 0 && matches!(w.b[len - 1], b's' | b't');
            }
            true
        });
    }

    fn step5a(&mut self) {
        if !self.ends_with("e") {
            return;
        }
        let len = self.b.len() - 1;
        let m = self.measure(len);
        if m > 1 || (m == 1 && !self.ends_cvc(len)) {
            self.b.pop();
        }
    }

    fn step5b(&mut self) {
        let len = self.b.len();
        if self.measure(len) > 1 && self.ends_double_consonant(len) && self.b[len - 1] == b'l' {
            self.b.pop();
        }
    }
}
