//! Speech I/O hooks. Only text implementations ship; audio front ends plug in
//! behind the same traits.

/// Turns captured input into an utterance. `None` means nothing was heard.
pub trait Transcriber {
    fn transcribe(&mut self, raw: &str) -> Option<String>;
}

/// Plays robot dialogue.
pub trait Synthesizer {
    fn speak(&mut self, text: &str);
}

/// Typed input: trims whitespace and ignores blank lines.
#[derive(Debug, Default, Clone, Copy)]
pub struct TextTranscriber;

impl Transcriber for TextTranscriber {
    fn transcribe(&mut self, raw: &str) -> Option<String> {
        let t = raw.trim();
        (!t.is_empty()).then(|| t.to_string())
    }
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SilentSynthesizer;

impl Synthesizer for SilentSynthesizer {
    fn speak(&mut self, _text: &str) {}
}
