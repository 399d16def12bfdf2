//! Character-offset helpers. Spans in this crate count Unicode scalar values,
//! not bytes.

use crate::corpus::Span;

/// Number of characters in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Byte offsets of every character boundary, for repeated slicing by
/// character offset.
#[derive(Debug, Clone)]
pub struct CharIndex<'a> {
    text: &'a str,
    // boundaries[i] is the byte offset of char i; the last entry is text.len().
    boundaries: alloc::vec::Vec<usize>,
}

impl<'a> CharIndex<'a> {
    pub fn new(text: &'a str) -> Self {
        let mut boundaries: alloc::vec::Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        boundaries.push(text.len());
        CharIndex { text, boundaries }
    }

    pub fn len(&self) -> usize {
        self.boundaries.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slice by character span. Panics if the span is out of range.
    pub fn slice(&self, span: Span) -> &'a str {
        &self.text[self.boundaries[span.start]..self.boundaries[span.end]]
    }

    pub fn get(&self, span: Span) -> Option<&'a str> {
        if span.start <= span.end && span.end <= self.len() {
            Some(self.slice(span))
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_by_characters() {
        let idx = CharIndex::new("né. ok");
        assert_eq!(idx.len(), 6);
        assert_eq!(idx.slice(Span { start: 0, end: 3 }), "né.");
        assert_eq!(idx.slice(Span { start: 4, end: 6 }), "ok");
        assert!(idx.get(Span { start: 4, end: 7 }).is_none());
    }
}
