// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Wire frames exchanged between ranks.
//!
//! ```text
//! magic      4 bytes  "BSPF"
//! version    u32      1
//! length     u64      payload length in bytes
//! tag        u32      routine tag
//! superstep  u64
//! payload    `length` bytes
//! ```
//!
//! All integers are little-endian. Payloads are either a table in the table
//! wire format or a numeric array (`domain u8, count u64, values`), optionally
//! preceded by a one-byte status for results computed at a root rank.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const FRAME_MAGIC: [u8; 4] = *b"BSPF";
pub const FRAME_VERSION: u32 = 1;
pub const FRAME_HEADER_LEN: usize = 28;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub tag: u32,
    pub superstep: u64,
    pub payload: Vec<u8>,
}

impl Frame {
    pub fn wire_len(&self) -> usize {
        FRAME_HEADER_LEN + self.payload.len()
    }

    pub fn encode_header(&self) -> [u8; FRAME_HEADER_LEN] {
        let mut h = [0u8; FRAME_HEADER_LEN];
        h[0..4].copy_from_slice(&FRAME_MAGIC);
        h[4..8].copy_from_slice(&FRAME_VERSION.to_le_bytes());
        h[8..16].copy_from_slice(&(self.payload.len() as u64).to_le_bytes());
        h[16..20].copy_from_slice(&self.tag.to_le_bytes());
        h[20..28].copy_from_slice(&self.superstep.to_le_bytes());
        h
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.wire_len());
        out.extend_from_slice(&self.encode_header());
        out.extend_from_slice(&self.payload);
        out
    }
}

pub fn write_frame<W: Write>(w: &mut W, frame: &Frame) -> std::io::Result<()> {
    w.write_all(&frame.encode_header())?;
    w.write_all(&frame.payload)?;
    w.flush()
}

/// Reads one frame. `Ok(None)` on a clean end of stream before any header byte.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Frame>> {
    let mut h = [0u8; FRAME_HEADER_LEN];
    let mut filled = 0;
    while filled < FRAME_HEADER_LEN {
        match r.read(&mut h[filled..]) {
            Ok(0) if filled == 0 => return Ok(None),
            Ok(0) => return Err(Error::Transport("stream closed inside frame header".into())),
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    if h[0..4] != FRAME_MAGIC {
        return Err(Error::CorruptPayload("bad frame magic".into()));
    }
    let version = u32::from_le_bytes(h[4..8].try_into().unwrap());
    if version != FRAME_VERSION {
        return Err(Error::CorruptPayload(format!("unsupported frame version {version}")));
    }
    let len = u64::from_le_bytes(h[8..16].try_into().unwrap());
    let tag = u32::from_le_bytes(h[16..20].try_into().unwrap());
    let superstep = u64::from_le_bytes(h[20..28].try_into().unwrap());
    let len = usize::try_from(len).map_err(|_| Error::CorruptPayload("frame too long".into()))?;
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload)
        .map_err(|e| Error::Transport(format!("stream closed inside frame payload: {e}")))?;
    Ok(Some(Frame {
        tag,
        superstep,
        payload,
    }))
}
