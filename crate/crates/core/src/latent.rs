//! Latent weather states.
//!
//! States are stored zero-based: local state index 0 is the heavy-rain mode
//! (written as `1` in files), index 1 the light-rain mode (`2`). The all-India
//! state uses 0 = active, 1 = break/pre-onset, 2 = normal (`1`, `2`, `3`).

use crate::error::{Error, Result};

pub const N_LOCAL_STATES: usize = 2;
pub const N_GLOBAL_STATES: usize = 3;

pub const HEAVY: u8 = 0;
pub const LIGHT: u8 = 1;
pub const ACTIVE: u8 = 0;
pub const BREAK: u8 = 1;
pub const NORMAL: u8 = 2;

/// Binary local field `Z` (S x T, location-major) and ternary series `U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatentState {
    n_locations: usize,
    n_days: usize,
    z: Vec<u8>,
    u: Vec<u8>,
}

impl LatentState {
    pub fn new(n_locations: usize, n_days: usize, z: Vec<u8>, u: Vec<u8>) -> Result<Self> {
        if z.len() != n_locations * n_days || u.len() != n_days {
            return Err(Error::Dimension(format!(
                "latent state with {} z and {} u entries for {} locations x {} days",
                z.len(),
                u.len(),
                n_locations,
                n_days
            )));
        }
        if let Some(i) = z.iter().position(|&k| k as usize >= N_LOCAL_STATES) {
            return Err(Error::Validation(format!(
                "z at (s={}, t={}) is outside {{1, 2}}",
                i / n_days.max(1),
                i % n_days.max(1)
            )));
        }
        if let Some(t) = u.iter().position(|&l| l as usize >= N_GLOBAL_STATES) {
            return Err(Error::Validation(format!("u at t={t} is outside {{1, 2, 3}}")));
        }
        Ok(Self { n_locations, n_days, z, u })
    }

    pub fn constant(n_locations: usize, n_days: usize, z: u8, u: u8) -> Self {
        Self::new(n_locations, n_days, vec![z; n_locations * n_days], vec![u; n_days]).expect("constant state in range")
    }

    pub fn n_locations(&self) -> usize {
        self.n_locations
    }

    pub fn n_days(&self) -> usize {
        self.n_days
    }

    #[inline]
    pub fn z(&self, s: usize, t: usize) -> u8 {
        self.z[s * self.n_days + t]
    }

    #[inline]
    pub fn set_z(&mut self, s: usize, t: usize, k: u8) {
        self.z[s * self.n_days + t] = k;
    }

    #[inline]
    pub fn u(&self, t: usize) -> u8 {
        self.u[t]
    }

    #[inline]
    pub fn set_u(&mut self, t: usize, l: u8) {
        self.u[t] = l;
    }

    pub fn z_series(&self, s: usize) -> &[u8] {
        &self.z[s * self.n_days..(s + 1) * self.n_days]
    }

    pub fn z_values(&self) -> &[u8] {
        &self.z
    }

    pub fn u_series(&self) -> &[u8] {
        &self.u
    }

    /// Exchanges the two local labels at one location.
    pub fn swap_local_labels(&mut self, s: usize) {
        let n = self.n_days;
        for k in &mut self.z[s * n..(s + 1) * n] {
            *k = 1 - *k;
        }
    }

    /// Number of locations in the heavy state on day `t`.
    pub fn heavy_count(&self, t: usize) -> usize {
        (0..self.n_locations).filter(|&s| self.z(s, t) == HEAVY).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_range_states() {
        assert!(LatentState::new(1, 2, vec![0, 2], vec![0, 0]).is_err());
        assert!(LatentState::new(1, 2, vec![0, 1], vec![0, 3]).is_err());
        assert!(LatentState::new(1, 2, vec![0], vec![0, 0]).is_err());
    }

    #[test]
    fn label_swap() {
        let mut st = LatentState::new(2, 2, vec![0, 1, 1, 1], vec![0, 2]).unwrap();
        st.swap_local_labels(0);
        assert_eq!(st.z_series(0), &[1, 0]);
        assert_eq!(st.z_series(1), &[1, 1]);
        assert_eq!(st.heavy_count(1), 1);
    }
}
