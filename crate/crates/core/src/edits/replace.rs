use super::{EditError, Splice};

/// Byte offsets of every occurrence of `needle`, overlapping ones included.
pub fn occurrences(haystack: &str, needle: &str) -> Vec<usize> {
    let mut found = Vec::new();
    if needle.is_empty() {
        return found;
    }
    let mut from = 0;
    while let Some(pos) = haystack[from..].find(needle) {
        let at = from + pos;
        found.push(at);
        // Resume one character later so overlapping matches are seen.
        let step = haystack[at..].chars().next().map_or(1, char::len_utf8);
        from = at + step;
        if from > haystack.len() {
            break;
        }
    }
    found
}

/// Replace the single occurrence of `old` in `content` with `new`.
pub fn replace_unique(content: &str, old: &str, new: &str) -> Result<Splice, EditError> {
    if old.is_empty() {
        return Err(EditError::EmptySearch);
    }
    match occurrences(content, old).as_slice() {
        [] => Err(EditError::NotFound),
        [start] => Ok(Splice::new(content, *start, old.len(), new, false)),
        many => Err(EditError::Ambiguous(many.len())),
    }
}

pub fn apply_string_replace(content: &str, old: &str, new: &str) -> Result<String, EditError> {
    replace_unique(content, old, new).map(|s| s.text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unique_match_is_replaced() {
        assert_eq!(apply_string_replace("a\nb\nc\n", "b", "B").unwrap(), "a\nB\nc\n");
    }

    #[test]
    fn repeated_text_is_ambiguous() {
        assert_eq!(apply_string_replace("x x", "x", "y"), Err(EditError::Ambiguous(2)));
    }

    #[test]
    fn identity_replacement_succeeds() {
        assert_eq!(apply_string_replace("abc", "abc", "abc").unwrap(), "abc");
    }

    #[test]
    fn missing_and_empty_search() {
        assert_eq!(apply_string_replace("abc", "z", "y"), Err(EditError::NotFound));
        assert_eq!(apply_string_replace("abc", "", "y"), Err(EditError::EmptySearch));
    }

    #[test]
    fn overlapping_occurrences_count() {
        assert_eq!(occurrences("aaa", "aa"), vec![0, 1]);
        assert_eq!(apply_string_replace("aaa", "aa", "b"), Err(EditError::Ambiguous(2)));
        assert_eq!(occurrences("ééé", "éé"), vec![0, 2]);
    }

    #[test]
    fn splice_reports_region() {
        let s = replace_unique("hello world", "world", "there").unwrap();
        assert_eq!((s.start, s.removed_len, s.inserted_len, s.fallback), (6, 5, 5, false));
    }
}
