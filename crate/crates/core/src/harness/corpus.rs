//! Loader for a directory of short speech recordings.
//!
//! Files are `<speaker>_<anything>.wav`, mono, 16-bit PCM or 32-bit float,
//! at the dataset sample rate. They are taken in lexicographic order and
//! zero-padded or truncated to the dataset duration. The text before the
//! first underscore names the speaker, so splits can be made speaker-disjoint.

use std::path::Path;

use crate::error::{invalid, Result};
use crate::signal::AudioBuffer;

#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    clips: Vec<AudioBuffer>,
    speakers: Vec<String>,
}

impl Corpus {
    pub fn load(dir: impl AsRef<Path>, sample_rate: u32, duration_s: f64) -> Result<Self> {
        let mut paths: Vec<_> = std::fs::read_dir(dir.as_ref())?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")))
            .collect();
        paths.sort();
        if paths.is_empty() {
            return invalid(format!("no WAV files in {}", dir.as_ref().display()));
        }
        let n = (duration_s * sample_rate as f64).round() as usize;
        let mut clips = Vec::with_capacity(paths.len());
        let mut speakers = Vec::with_capacity(paths.len());
        for p in &paths {
            let b = AudioBuffer::read_wav(p)?;
            if !b.is_mono() || b.sample_rate() != sample_rate {
                return invalid(format!("{}: expected mono at {sample_rate} Hz", p.display()));
            }
            let mut s = b.into_samples();
            s.resize(n, 0.0);
            clips.push(AudioBuffer::mono(s, sample_rate)?);
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            speakers.push(stem.split('_').next().unwrap_or_default().to_string());
        }
        Ok(Self { clips, speakers })
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }

    pub fn get(&self, i: usize) -> Result<&AudioBuffer> {
        self.clips
            .get(i)
            .map_or_else(|| invalid(format!("corpus index {i} out of range")), Ok)
    }

    pub fn speaker(&self, i: usize) -> &str {
        &self.speakers[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::WavEncoding;

    #[test]
    fn loads_sorted_and_padded() {
        let dir = tempfile::tempdir().unwrap();
        for (name, len) in [("bob_yes.wav", 100), ("amy_no.wav", 3000)] {
            AudioBuffer::mono(vec![0.25; len], 16000)
                .unwrap()
                .write_wav(dir.path().join(name), WavEncoding::Pcm16)
                .unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let c = Corpus::load(dir.path(), 16000, 0.1).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.speaker(0), "amy");
        assert_eq!(c.get(0).unwrap().len(), 1600);
        assert_eq!(c.get(1).unwrap().samples()[150], 0.0);
        assert!(Corpus::load(dir.path(), 8000, 0.1).is_err());
    }
}
