//! MSB-first bit reader and writer used by the header and side-info codecs.

/// Reads big-endian bit fields out of a byte slice.
///
/// `position` is always relative to the start of `data`; callers that need
/// absolute file offsets add their own base.
#[derive(Debug, Clone)]
pub struct BitReader<'a> {
    data: &'a [u8],
    position: usize,
}

impl<'a> BitReader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, position: 0 }
    }

    /// Current bit position.
    pub fn position(&self) -> usize {
        self.position
    }

    pub fn remaining(&self) -> usize {
        (self.data.len() * 8).saturating_sub(self.position)
    }

    /// Reads `count` bits (at most 32). Returns `None` past the end of data.
    pub fn read(&mut self, count: u32) -> Option<u32> {
        debug_assert!(count <= 32);
        if (count as usize) > self.remaining() {
            return None;
        }
        let mut value: u32 = 0;
        for _ in 0..count {
            let byte = self.data[self.position / 8];
            let bit = (byte >> (7 - (self.position % 8))) & 1;
            value = (value << 1) | u32::from(bit);
            self.position += 1;
        }
        Some(value)
    }

    pub fn read_bool(&mut self) -> Option<bool> {
        self.read(1).map(|b| b == 1)
    }
}

/// Appends big-endian bit fields to a growable buffer.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl BitWriter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }

    /// Writes the low `count` bits of `value`, most significant first.
    pub fn write(&mut self, count: u32, value: u32) {
        debug_assert!(count <= 32);
        debug_assert!(count == 32 || value >> count == 0, "value wider than field");
        for i in (0..count).rev() {
            let bit = ((value >> i) & 1) as u8;
            if self.bit_len % 8 == 0 {
                self.bytes.push(0);
            }
            if bit == 1 {
                let last = self.bytes.last_mut().expect("byte pushed above");
                *last |= 1 << (7 - (self.bit_len % 8));
            }
            self.bit_len += 1;
        }
    }

    pub fn write_bool(&mut self, bit: bool) {
        self.write(1, u32::from(bit));
    }

    /// Finishes the buffer, zero-padding the final partial byte.
    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }
}

/// Reads `count` bits starting at absolute bit `offset` of `data`.
pub fn read_bits_at(data: &[u8], offset: u64, count: u32) -> Option<u32> {
    let start = usize::try_from(offset).ok()?;
    let mut reader = BitReader::new(data);
    if start > data.len() * 8 {
        return None;
    }
    reader.position = start;
    reader.read(count)
}

/// Overwrites `count` bits at absolute bit `offset` of `data` with the low
/// bits of `value`. Bits outside the span are untouched.
pub fn write_bits_at(data: &mut [u8], offset: u64, count: u32, value: u32) {
    let start = offset as usize;
    assert!(start + count as usize <= data.len() * 8, "bit span out of range");
    for i in 0..count as usize {
        let bit = ((value >> (count as usize - 1 - i)) & 1) as u8;
        let pos = start + i;
        let mask = 1u8 << (7 - (pos % 8));
        if bit == 1 {
            data[pos / 8] |= mask;
        } else {
            data[pos / 8] &= !mask;
        }
    }
}
