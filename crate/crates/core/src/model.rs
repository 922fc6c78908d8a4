//! Finite torus models of lattice actions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::group::{GroupElement, GroupSpec};
use crate::subset::FiniteSubset;

/// A finite action of a group on points `0..num_points()`.
pub trait GroupAction: Send + Sync {
    fn group(&self) -> GroupSpec;
    fn num_points(&self) -> usize;
    fn act(&self, g: &GroupElement, x: usize) -> Result<usize>;
}

/// `(Z_{N_0} x ... x Z_{N_{d-1}})` with `T_g x = x + g`, points indexed row-major.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteModel {
    group: GroupSpec,
    moduli: Vec<i64>,
}

impl FiniteModel {
    pub fn new(group: GroupSpec, moduli: Vec<i64>) -> Result<Self> {
        if !group.is_lattice() {
            return Err(Error::Unsupported(format!("torus models need a lattice, got {group}")));
        }
        if moduli.len() != group.rank() {
            return Err(Error::usage(format!("{group} needs {} moduli", group.rank())));
        }
        if moduli.iter().any(|&m| m < 1) {
            return Err(Error::usage("torus moduli must be positive"));
        }
        let total = moduli.iter().try_fold(1usize, |acc, &m| acc.checked_mul(m as usize));
        if total.is_none_or(|t| t > 1 << 26) {
            return Err(Error::usage("torus has too many points"));
        }
        Ok(FiniteModel { group, moduli })
    }

    /// `(Z_n)^d`.
    pub fn torus(d: u32, n: i64) -> Result<Self> {
        FiniteModel::new(GroupSpec::lattice(d)?, vec![n; d as usize])
    }

    pub fn moduli(&self) -> &[i64] {
        &self.moduli
    }

    pub fn dimension(&self) -> usize {
        self.moduli.len()
    }

    /// Sets of coordinate diameter at least this radius may wrap around.
    pub fn guard_radius(&self) -> i64 {
        self.moduli.iter().copied().min().unwrap_or(1) / 2
    }

    /// Rejects shapes whose coordinate diameter reaches the guard radius.
    pub fn check_guard(&self, set: &FiniteSubset) -> Result<()> {
        if set.group() != self.group {
            return Err(Error::MixedGroups {
                left: self.group,
                right: set.group(),
            });
        }
        let diameter = set.coordinate_diameter();
        if diameter >= self.guard_radius() {
            return Err(Error::WrapGuard(format!(
                "set of diameter {diameter} does not fit the guard radius {} of the torus {:?}",
                self.guard_radius(),
                self.moduli
            )));
        }
        Ok(())
    }

    /// Residue coordinates of point `x`.
    pub fn point_coords(&self, mut x: usize) -> Vec<i64> {
        let mut coords = vec![0; self.moduli.len()];
        for (c, &m) in coords.iter_mut().zip(&self.moduli).rev() {
            *c = (x % m as usize) as i64;
            x /= m as usize;
        }
        coords
    }

    /// Row-major index of the residue class of `coords`.
    pub fn point_index(&self, coords: &[i64]) -> usize {
        coords
            .iter()
            .zip(&self.moduli)
            .fold(0usize, |acc, (&c, &m)| acc * m as usize + c.rem_euclid(m) as usize)
    }

    /// Point for the group element `g` applied to the origin.
    pub fn point_of(&self, g: &GroupElement) -> usize {
        self.point_index(g.coords())
    }

    /// Image `T_H x`, in the order of `H`.
    pub fn orbit_points(&self, h: &FiniteSubset, x: usize) -> Result<Vec<usize>> {
        h.iter().map(|g| self.act(g, x)).collect()
    }
}

impl GroupAction for FiniteModel {
    fn group(&self) -> GroupSpec {
        self.group
    }

    fn num_points(&self) -> usize {
        self.moduli.iter().map(|&m| m as usize).product()
    }

    fn act(&self, g: &GroupElement, x: usize) -> Result<usize> {
        if g.group() != self.group {
            return Err(Error::MixedGroups {
                left: self.group,
                right: g.group(),
            });
        }
        let mut coords = self.point_coords(x);
        for (c, &d) in coords.iter_mut().zip(g.coords()) {
            *c += d;
        }
        Ok(self.point_index(&coords))
    }
}
