//! Symmetrization of two directional word alignments.
//!
//! Both inputs are expected in source-major orientation: a link `(s, t)`
//! always names the source word first, whichever direction the aligner ran.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::corpus_io::AlignmentSet;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum GrowMode {
    /// `grow-diag-final`: the final step adds a link if either word is unaligned.
    #[default]
    GrowDiagFinal,
    /// `grow-diag-final-and`: the final step requires both words unaligned.
    GrowDiagFinalAnd,
}

impl FromStr for GrowMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gdf" | "grow-diag-final" => Ok(GrowMode::GrowDiagFinal),
            "gdfa" | "grow-diag-final-and" => Ok(GrowMode::GrowDiagFinalAnd),
            _ => Err(Error::invalid(format!("unknown symmetrization mode {:?}", s))),
        }
    }
}

impl fmt::Display for GrowMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GrowMode::GrowDiagFinal => "gdf",
            GrowMode::GrowDiagFinalAnd => "gdfa",
        })
    }
}

fn check_dims(a: &AlignmentSet, b: &AlignmentSet) -> Result<()> {
    if a.src_len() != b.src_len() || a.tgt_len() != b.tgt_len() {
        return Err(Error::invalid(format!(
            "alignment dimensions differ: {}x{} vs {}x{}",
            a.src_len(),
            a.tgt_len(),
            b.src_len(),
            b.tgt_len()
        )));
    }
    Ok(())
}

pub fn intersect(a2b: &AlignmentSet, b2a: &AlignmentSet) -> Result<AlignmentSet> {
    check_dims(a2b, b2a)?;
    Ok(AlignmentSet::from_set_unchecked(
        a2b.src_len(),
        a2b.tgt_len(),
        a2b.points().intersection(b2a.points()).copied().collect(),
    ))
}

pub fn union_align(a2b: &AlignmentSet, b2a: &AlignmentSet) -> Result<AlignmentSet> {
    check_dims(a2b, b2a)?;
    Ok(AlignmentSet::from_set_unchecked(
        a2b.src_len(),
        a2b.tgt_len(),
        a2b.points().union(b2a.points()).copied().collect(),
    ))
}

const NEIGHBORS: [(isize, isize); 8] = [
    (-1, 0),
    (0, -1),
    (1, 0),
    (0, 1),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

struct Grower {
    points: BTreeSet<(usize, usize)>,
    src_aligned: Vec<bool>,
    tgt_aligned: Vec<bool>,
}

impl Grower {
    fn add(&mut self, (s, t): (usize, usize)) {
        self.points.insert((s, t));
        self.src_aligned[s] = true;
        self.tgt_aligned[t] = true;
    }

    fn has_neighbor(&self, (s, t): (usize, usize)) -> bool {
        NEIGHBORS.iter().any(|&(ds, dt)| {
            match (s.checked_add_signed(ds), t.checked_add_signed(dt)) {
                (Some(ns), Some(nt)) => self.points.contains(&(ns, nt)),
                _ => false,
            }
        })
    }
}

/// Grows the intersection toward the union.
///
/// The grow-diag phase sweeps the remaining union links in row-major order,
/// adding any link that touches a current link (8-neighbourhood) and covers
/// an unaligned source or target word, until a sweep adds nothing. The final
/// phase then makes one row-major sweep over what is left.
pub fn grow_diag_final(a2b: &AlignmentSet, b2a: &AlignmentSet, mode: GrowMode) -> Result<AlignmentSet> {
    let inter = intersect(a2b, b2a)?;
    let union = union_align(a2b, b2a)?;

    let mut g = Grower {
        points: BTreeSet::new(),
        src_aligned: vec![false; inter.src_len()],
        tgt_aligned: vec![false; inter.tgt_len()],
    };
    for p in inter.iter() {
        g.add(p);
    }

    loop {
        let mut added = false;
        for p in union.iter() {
            if g.points.contains(&p) {
                continue;
            }
            if (!g.src_aligned[p.0] || !g.tgt_aligned[p.1]) && g.has_neighbor(p) {
                g.add(p);
                added = true;
            }
        }
        if !added {
            break;
        }
    }

    for p in union.iter() {
        if g.points.contains(&p) {
            continue;
        }
        let (src_free, tgt_free) = (!g.src_aligned[p.0], !g.tgt_aligned[p.1]);
        let take = match mode {
            GrowMode::GrowDiagFinal => src_free || tgt_free,
            GrowMode::GrowDiagFinalAnd => src_free && tgt_free,
        };
        if take {
            g.add(p);
        }
    }

    Ok(AlignmentSet::from_set_unchecked(
        inter.src_len(),
        inter.tgt_len(),
        g.points,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(n: usize, m: usize, pts: &[(usize, usize)]) -> AlignmentSet {
        AlignmentSet::new(n, m, pts.iter().copied()).unwrap()
    }

    fn pts(a: &AlignmentSet) -> Vec<(usize, usize)> {
        a.iter().collect()
    }

    #[test]
    fn set_operations() {
        let a = set(2, 2, &[(0, 0), (1, 1)]);
        assert_eq!(pts(&intersect(&a, &a).unwrap()), vec![(0, 0), (1, 1)]);
        let (x, y) = (set(2, 2, &[(0, 0)]), set(2, 2, &[(1, 1)]));
        assert!(intersect(&x, &y).unwrap().is_empty());
        assert_eq!(pts(&union_align(&x, &y).unwrap()), vec![(0, 0), (1, 1)]);
        let (x, y) = (set(2, 2, &[(0, 0), (1, 0)]), set(2, 2, &[(0, 0), (1, 1)]));
        assert_eq!(pts(&intersect(&x, &y).unwrap()), vec![(0, 0)]);
        assert!(union_align(&set(2, 2, &[]), &set(2, 2, &[])).unwrap().is_empty());
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let (x, y) = (set(2, 2, &[]), set(2, 3, &[]));
        assert!(intersect(&x, &y).is_err());
        assert!(union_align(&x, &y).is_err());
        assert!(grow_diag_final(&x, &y, GrowMode::GrowDiagFinal).is_err());
    }

    #[test]
    fn identical_inputs_are_fixed_points() {
        let a = set(3, 3, &[(0, 1), (1, 0), (2, 2)]);
        assert_eq!(grow_diag_final(&a, &a, GrowMode::GrowDiagFinal).unwrap(), a);
    }

    #[test]
    fn grow_adds_vertical_and_diagonal_neighbours() {
        // Intersection {(0,0)}. Row-major sweep reaches (1,0) first: it
        // neighbours (0,0) and source word 1 is free, so it is added; (1,1)
        // follows because target word 1 is still free.
        let a2b = set(2, 2, &[(0, 0), (1, 1)]);
        let b2a = set(2, 2, &[(0, 0), (1, 0)]);
        let out = grow_diag_final(&a2b, &b2a, GrowMode::GrowDiagFinal).unwrap();
        assert_eq!(pts(&out), vec![(0, 0), (1, 0), (1, 1)]);
    }

    #[test]
    fn final_step_fills_unaligned_words() {
        let a2b = set(2, 2, &[(0, 1)]);
        let b2a = set(2, 2, &[(1, 0)]);
        let out = grow_diag_final(&a2b, &b2a, GrowMode::GrowDiagFinal).unwrap();
        assert_eq!(pts(&out), vec![(0, 1), (1, 0)]);
        let out = grow_diag_final(&a2b, &b2a, GrowMode::GrowDiagFinalAnd).unwrap();
        assert_eq!(pts(&out), vec![(0, 1), (1, 0)]);
    }

    #[test]
    fn final_and_is_stricter() {
        // (0,0) in both; (2,1) only in a2b and far away; (2,0) only in b2a.
        // grow: (2,0)? not adjacent to (0,0). final gdf: (2,0) src 2 free -> add;
        // then (2,1): tgt 1 free -> add. gdfa: (2,0) tgt 0 aligned -> skip;
        // (2,1) both free -> add.
        let a2b = set(3, 2, &[(0, 0), (2, 1)]);
        let b2a = set(3, 2, &[(0, 0), (2, 0)]);
        let gdf = grow_diag_final(&a2b, &b2a, GrowMode::GrowDiagFinal).unwrap();
        assert_eq!(pts(&gdf), vec![(0, 0), (2, 0), (2, 1)]);
        let gdfa = grow_diag_final(&a2b, &b2a, GrowMode::GrowDiagFinalAnd).unwrap();
        assert_eq!(pts(&gdfa), vec![(0, 0), (2, 1)]);
    }

    #[test]
    fn mode_names() {
        assert_eq!("gdf".parse::<GrowMode>().unwrap(), GrowMode::GrowDiagFinal);
        assert_eq!("grow-diag-final-and".parse::<GrowMode>().unwrap(), GrowMode::GrowDiagFinalAnd);
        assert!("diag".parse::<GrowMode>().is_err());
    }
}
