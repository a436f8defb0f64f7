use crate::transforms::AbcVector;

/// Upper-leg gate signals; each lower leg is the complement.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct SwitchState {
    pub s_a: bool,
    pub s_b: bool,
    pub s_c: bool,
}

impl SwitchState {
    pub const fn new(s_a: bool, s_b: bool, s_c: bool) -> Self {
        Self { s_a, s_b, s_c }
    }

    pub fn from_bits(bits: [u8; 3]) -> Self {
        Self::new(bits[0] != 0, bits[1] != 0, bits[2] != 0)
    }

    pub fn to_bits(self) -> [u8; 3] {
        [self.s_a as u8, self.s_b as u8, self.s_c as u8]
    }

    pub fn legs(self) -> [bool; 3] {
        [self.s_a, self.s_b, self.s_c]
    }

    /// Number of legs that differ from `other`.
    pub fn transitions_from(self, other: SwitchState) -> usize {
        self.legs()
            .iter()
            .zip(other.legs())
            .filter(|(a, b)| **a != *b)
            .count()
    }
}

/// Line-to-neutral voltages of a star load with isolated neutral.
pub fn vsi_phase_voltages(s: SwitchState, v_dc: f64) -> AbcVector {
    let [a, b, c] = s.to_bits().map(f64::from);
    AbcVector::new(
        v_dc * (2.0 * a - b - c) / 3.0,
        v_dc * (2.0 * b - c - a) / 3.0,
        v_dc * (2.0 * c - a - b) / 3.0,
    )
}
