/// Lowercases and splits on whitespace; punctuation becomes its own token,
/// except that an apostrophe followed by a letter or digit opens a clitic
/// token (`PersonX's` → `personx`, `'s`).
pub fn tokenize(text: &str) -> Vec<String> {
    let lower = text.to_lowercase();
    let chars: Vec<char> = lower.chars().collect();
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, tokens: &mut Vec<String>| {
        if !cur.is_empty() {
            tokens.push(std::mem::take(cur));
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            flush(&mut cur, &mut tokens);
        } else if c.is_alphanumeric() {
            cur.push(c);
        } else if c == '\'' && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric()) {
            flush(&mut cur, &mut tokens);
            cur.push(c);
        } else {
            flush(&mut cur, &mut tokens);
            tokens.push(c.to_string());
        }
    }
    flush(&mut cur, &mut tokens);
    tokens
}

#[cfg(test)]
mod tests {
    use super::tokenize;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn examples() {
        assert_eq!(toks("Video recording."), ["video", "recording", "."]);
        assert!(toks("").is_empty());
        assert_eq!(toks("PersonX's goal"), ["personx", "'s", "goal"]);
    }

    #[test]
    fn whitespace_and_punctuation() {
        assert_eq!(toks("  to   eat,\tthen\nsleep!! "), ["to", "eat", ",", "then", "sleep", "!", "!"]);
        assert_eq!(toks("'quoted'"), ["'quoted", "'"]);
        assert_eq!(toks("don't"), ["don", "'t"]);
        assert_eq!(toks("Café 42"), ["café", "42"]);
    }
}
