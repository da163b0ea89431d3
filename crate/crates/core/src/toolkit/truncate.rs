/// Inserted where the middle of long output was dropped.
pub const ELISION_MARKER: &str = "\n\n[... output truncated ...]\n\n";

/// Shorten `text` to at most `cap` characters, keeping up to `head`
/// characters from the start and filling the rest of the cap from the end.
/// Returns the text and whether anything was removed.
pub fn truncate_middle(text: &str, cap: usize, head: usize) -> (String, bool) {
    let total = text.chars().count();
    if total <= cap {
        return (text.to_string(), false);
    }
    let marker_len = ELISION_MARKER.chars().count();
    if cap <= marker_len {
        return (text.chars().take(cap).collect(), true);
    }
    let head = head.min(cap - marker_len);
    let tail = cap - marker_len - head;
    let mut out: String = text.chars().take(head).collect();
    out.push_str(ELISION_MARKER);
    out.extend(text.chars().skip(total - tail));
    (out, true)
}
