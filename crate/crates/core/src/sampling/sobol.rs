//! Sobol sequence with Joe-Kuo direction numbers (new-joe-kuo-6.21201).

/// Dimensions covered by the built-in direction-number table.
pub const MAX_DIMENSION: usize = 21;

const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2..=21; dimension 1 is the van der Corput sequence.
const DIRECTIONS: [(u32, u32, &[u32]); MAX_DIMENSION - 1] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

/// Direction numbers `v_1..v_32` for one coordinate, left-aligned in a `u32`.
fn direction_vector(coordinate: usize) -> [u32; BITS] {
    let mut v = [0u32; BITS];
    if coordinate == 0 {
        for (k, vk) in v.iter_mut().enumerate() {
            *vk = 1 << (BITS - 1 - k);
        }
        return v;
    }
    let (s, a, m) = DIRECTIONS[coordinate - 1];
    let s = s as usize;
    for k in 0..s.min(BITS) {
        v[k] = m[k] << (BITS - 1 - k);
    }
    for k in s..BITS {
        let mut value = v[k - s] ^ (v[k - s] >> s);
        for j in 1..s {
            if (a >> (s - 1 - j)) & 1 == 1 {
                value ^= v[k - j];
            }
        }
        v[k] = value;
    }
    v
}

/// Direction tables for a fixed dimension.
#[derive(Debug, Clone)]
pub struct SobolTable {
    directions: Vec<[u32; BITS]>,
}

impl SobolTable {
    /// `None` when `dimension` exceeds [`MAX_DIMENSION`].
    pub fn new(dimension: usize) -> Option<Self> {
        if dimension > MAX_DIMENSION {
            return None;
        }
        Some(SobolTable {
            directions: (0..dimension).map(direction_vector).collect(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.directions.len()
    }

    /// Integer point at `index` (direct, not Gray-code, ordering).
    pub fn point_bits(&self, index: u64, out: &mut [u32]) {
        for (o, v) in out.iter_mut().zip(&self.directions) {
            let mut x = 0u32;
            let mut n = index;
            let mut k = 0;
            while n != 0 && k < BITS {
                if n & 1 == 1 {
                    x ^= v[k];
                }
                n >>= 1;
                k += 1;
            }
            *o = x;
        }
    }
}

/// Maps a 32-bit Sobol coordinate to the midpoint of its cell, strictly inside (0, 1).
pub fn to_unit(bits: u32) -> f64 {
    (bits as f64 + 0.5) / 4_294_967_296.0
}

#[cfg(test)]
pub(crate) fn polynomial(coordinate: usize) -> Option<(u32, u32, &'static [u32])> {
    coordinate.checked_sub(1).map(|i| DIRECTIONS[i])
}
