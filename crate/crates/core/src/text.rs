//! Character-offset helpers.
//!
//! Every offset exchanged by this crate counts Unicode scalar values, not
//! bytes. These helpers translate between the two.

/// Byte positions of every char boundary in a string, plus the final length.
#[derive(Debug, Clone)]
pub struct CharIndex {
    bounds: Vec<usize>,
}

impl CharIndex {
    pub fn new(text: &str) -> Self {
        let mut bounds: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
        bounds.push(text.len());
        Self { bounds }
    }

    /// Number of chars in the indexed string.
    pub fn len(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Byte offset of char position `pos` (`pos == len()` is allowed).
    pub fn byte(&self, pos: usize) -> usize {
        self.bounds[pos]
    }

    /// Slice `text` by char range. `text` must be the string this index was built from.
    pub fn slice<'a>(&self, text: &'a str, start: usize, end: usize) -> &'a str {
        &text[self.bounds[start]..self.bounds[end]]
    }

    /// Char position of a byte offset that lies on a char boundary.
    pub fn char_at_byte(&self, byte: usize) -> usize {
        self.bounds
            .binary_search(&byte)
            .expect("byte offset is not on a char boundary")
    }
}

/// Slice by char range without keeping an index around.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let mut iter = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
    let s = iter.nth(start)?;
    if end == start {
        return Some(&text[s..s]);
    }
    let e = iter.nth(end - start - 1)?;
    Some(&text[s..e])
}
