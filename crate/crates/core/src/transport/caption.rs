use flate2::{Compress, Compression, Decompress, FlushCompress, FlushDecompress, Status};

use super::TransportError;

/// Raw DEFLATE (RFC 1951) at maximum compression.
pub fn compress_caption(text: &[u8]) -> Vec<u8> {
    let mut enc = Compress::new(Compression::best(), false);
    let mut out = Vec::with_capacity(text.len() / 2 + 64);
    loop {
        let consumed = enc.total_in() as usize;
        let status = enc.compress_vec(&text[consumed..], &mut out, FlushCompress::Finish).expect("in-memory deflate cannot fail");
        match status {
            Status::StreamEnd => return out,
            _ => out.reserve(out.capacity().max(64)),
        }
    }
}

/// Inverse of [`compress_caption`]. The input must be one complete stream
/// with no trailing bytes.
pub fn decompress_caption(stream: &[u8]) -> Result<Vec<u8>, TransportError> {
    let mut dec = Decompress::new(false);
    let mut out = Vec::with_capacity(stream.len() * 4 + 64);
    loop {
        let consumed = dec.total_in() as usize;
        let before = dec.total_out();
        let status = dec
            .decompress_vec(&stream[consumed..], &mut out, FlushDecompress::None)
            .map_err(|e| TransportError::MalformedCaption(e.to_string()))?;
        match status {
            Status::StreamEnd => {
                if dec.total_in() as usize != stream.len() {
                    return Err(TransportError::MalformedCaption("trailing bytes after end of stream".into()));
                }
                return Ok(out);
            }
            _ => {
                let stalled = dec.total_in() as usize == consumed && dec.total_out() == before;
                if stalled && out.len() < out.capacity() {
                    return Err(TransportError::MalformedCaption("unexpected end of stream".into()));
                }
                out.reserve(out.capacity().max(64));
            }
        }
    }
}
