use std::collections::BTreeSet;

pub const DEFAULT_COLORS: &str = include_str!("../../data/colors.txt");
pub const DEFAULT_SIZES: &str = include_str!("../../data/sizes.txt");
pub const DEFAULT_NUMBERS: &str = include_str!("../../data/numbers.txt");

pub(crate) fn word_list(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim().to_lowercase())
        .filter(|l| !l.is_empty())
        .collect()
}

/// Lexeme lists that refine attribute tuples into color, count and size.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskVocab {
    colors: BTreeSet<String>,
    sizes: BTreeSet<String>,
    number_words: BTreeSet<String>,
}

impl TaskVocab {
    pub fn builtin() -> Self {
        Self::from_texts(DEFAULT_COLORS, DEFAULT_SIZES, DEFAULT_NUMBERS)
    }

    pub fn from_texts(colors: &str, sizes: &str, numbers: &str) -> Self {
        Self {
            colors: word_list(colors),
            sizes: word_list(sizes),
            number_words: word_list(numbers),
        }
    }

    pub fn is_color(&self, lexeme: &str) -> bool {
        self.colors.contains(lexeme)
    }

    pub fn is_size(&self, lexeme: &str) -> bool {
        self.sizes.contains(lexeme)
    }

    /// Digit strings and number words.
    pub fn is_count(&self, lexeme: &str) -> bool {
        (!lexeme.is_empty() && lexeme.bytes().all(|b| b.is_ascii_digit()))
            || self.number_words.contains(lexeme)
    }

    pub fn colors(&self) -> impl Iterator<Item = &str> {
        self.colors.iter().map(String::as_str)
    }

    pub fn sizes(&self) -> impl Iterator<Item = &str> {
        self.sizes.iter().map(String::as_str)
    }

    pub fn number_words(&self) -> impl Iterator<Item = &str> {
        self.number_words.iter().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_lists_have_expected_sizes() {
        let v = TaskVocab::builtin();
        assert!(v.colors().count() >= 30);
        assert_eq!(v.sizes().count(), 20);
        assert_eq!(v.number_words().count(), 20);
    }

    #[test]
    fn count_detection() {
        let v = TaskVocab::builtin();
        assert!(v.is_count("two"));
        assert!(v.is_count("twenty"));
        assert!(v.is_count("42"));
        assert!(!v.is_count("4x4"));
        assert!(!v.is_count(""));
        assert!(!v.is_count("many"));
    }
}
