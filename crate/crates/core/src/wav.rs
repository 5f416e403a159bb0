//! Multichannel WAV I/O (PCM 16/24-bit and 32-bit float).

use std::path::Path;

use crate::error::{CoreError, Result};

/// Read a multichannel WAV file into per-channel f64 signals, normalized to
/// [-1, 1] for integer formats. Rejects sample rates other than `expected_rate`
/// when one is given.
pub fn read_multichannel(path: &Path, expected_rate: Option<u32>) -> Result<(Vec<Vec<f64>>, u32)> {
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| CoreError::Wav(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    if let Some(rate) = expected_rate {
        if spec.sample_rate != rate {
            return Err(CoreError::SampleRate {
                found: spec.sample_rate,
                expected: rate,
            });
        }
    }
    let channels = spec.channels as usize;
    let mut out = vec![Vec::new(); channels];
    match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => {
            for (i, s) in reader.samples::<i16>().enumerate() {
                let v = s.map_err(|e| CoreError::Wav(e.to_string()))?;
                out[i % channels].push(v as f64 / 32768.0);
            }
        }
        (hound::SampleFormat::Int, 24) => {
            for (i, s) in reader.samples::<i32>().enumerate() {
                let v = s.map_err(|e| CoreError::Wav(e.to_string()))?;
                out[i % channels].push(v as f64 / 8_388_608.0);
            }
        }
        (hound::SampleFormat::Float, 32) => {
            for (i, s) in reader.samples::<f32>().enumerate() {
                let v = s.map_err(|e| CoreError::Wav(e.to_string()))?;
                out[i % channels].push(v as f64);
            }
        }
        (fmt, bits) => {
            return Err(CoreError::Wav(format!(
                "unsupported sample format {fmt:?} at {bits} bits (expected pcm16, pcm24 or float32)"
            )));
        }
    }
    Ok((out, spec.sample_rate))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WavFormat {
    Float32,
    Pcm16,
    Pcm24,
}

/// Write per-channel f64 signals as an interleaved WAV file.
pub fn write_multichannel(
    path: &Path,
    channels: &[Vec<f64>],
    sample_rate: u32,
    format: WavFormat,
) -> Result<()> {
    if channels.is_empty() {
        return Err(CoreError::EmptyInput("wav write: no channels"));
    }
    let len = channels[0].len();
    for (c, ch) in channels.iter().enumerate() {
        if ch.len() != len {
            return Err(CoreError::ChannelLengthMismatch {
                channel: c,
                got: ch.len(),
                expected: len,
            });
        }
    }
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: match format {
            WavFormat::Float32 => 32,
            WavFormat::Pcm16 => 16,
            WavFormat::Pcm24 => 24,
        },
        sample_format: match format {
            WavFormat::Float32 => hound::SampleFormat::Float,
            _ => hound::SampleFormat::Int,
        },
    };
    let mut writer =
        hound::WavWriter::create(path, spec).map_err(|e| CoreError::Wav(e.to_string()))?;
    for t in 0..len {
        for ch in channels {
            match format {
                WavFormat::Float32 => writer
                    .write_sample(ch[t] as f32)
                    .map_err(|e| CoreError::Wav(e.to_string()))?,
                WavFormat::Pcm16 => {
                    let v = (ch[t] * 32767.0).round().clamp(-32768.0, 32767.0) as i16;
                    writer
                        .write_sample(v)
                        .map_err(|e| CoreError::Wav(e.to_string()))?;
                }
                WavFormat::Pcm24 => {
                    let v = (ch[t] * 8_388_607.0).round().clamp(-8_388_608.0, 8_388_607.0) as i32;
                    writer
                        .write_sample(v)
                        .map_err(|e| CoreError::Wav(e.to_string()))?;
                }
            }
        }
    }
    writer
        .finalize()
        .map_err(|e| CoreError::Wav(e.to_string()))?;
    Ok(())
}
