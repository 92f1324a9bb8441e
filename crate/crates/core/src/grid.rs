//! Uniform grids over bounded domains in H^n = R^{4n}.
//!
//! A domain is realized as a masked box: the grid spans the domain's
//! bounding box, nodes outside the domain are Exterior (value pinned
//! to 0), in-domain nodes with an exterior or out-of-grid axis
//! neighbor are Boundary, and the rest are Interior.

use std::fmt;
use std::path::Path;

use crate::error::CoreError;

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

impl Domain {
    /// Real dimension 4n.
    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } => center.len(),
            Domain::Box { lo, .. } => lo.len(),
        }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        match self {
            Domain::Ball { center, radius } => {
                if center.is_empty() || center.len() % 4 != 0 {
                    return Err(CoreError::InvalidInput(
                        "ball center must live in R^{4n}".into(),
                    ));
                }
                if !radius.is_finite() || *radius <= 0.0 {
                    return Err(CoreError::InvalidInput("ball radius must be positive".into()));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return Err(CoreError::InvalidInput("ball center must be finite".into()));
                }
            }
            Domain::Box { lo, hi } => {
                if lo.is_empty() || lo.len() % 4 != 0 || lo.len() != hi.len() {
                    return Err(CoreError::InvalidInput(
                        "box bounds must be equal-length vectors in R^{4n}".into(),
                    ));
                }
                for (a, b) in lo.iter().zip(hi) {
                    if !a.is_finite() || !b.is_finite() || a >= b {
                        return Err(CoreError::InvalidInput(
                            "box bounds must satisfy lo < hi on every axis".into(),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// Closed-domain membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Domain::Ball { center, radius } => {
                let d2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
                d2 <= radius * radius
            }
            Domain::Box { lo, hi } => {
                x.iter().zip(lo.iter().zip(hi)).all(|(v, (a, b))| *a <= *v && *v <= *b)
            }
        }
    }

    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Domain::Ball { center, radius } => (
                center.iter().map(|c| c - radius).collect(),
                center.iter().map(|c| c + radius).collect(),
            ),
            Domain::Box { lo, hi } => (lo.clone(), hi.clone()),
        }
    }

    /// Length s in (0, smax] at which the ray x + s e (e a unit
    /// vector) crosses the domain boundary, or None if the segment
    /// stays inside. `x` must be in the domain.
    pub fn ray_exit(&self, x: &[f64], e: &[f64], smax: f64) -> Option<f64> {
        match self {
            Domain::Ball { center, radius } => {
                let d: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
                let b: f64 = e.iter().zip(&d).map(|(u, v)| u * v).sum();
                let c0: f64 = d.iter().map(|v| v * v).sum::<f64>() - radius * radius;
                let disc = (b * b - c0).max(0.0);
                let s = (-b + disc.sqrt()).max(0.0);
                (s <= smax).then_some(s)
            }
            Domain::Box { lo, hi } => {
                let mut s = f64::INFINITY;
                for (a, ea) in e.iter().enumerate() {
                    if *ea > 0.0 {
                        s = s.min((hi[a] - x[a]) / ea);
                    } else if *ea < 0.0 {
                        s = s.min((lo[a] - x[a]) / ea);
                    }
                }
                let s = s.max(0.0);
                (s <= smax).then_some(s)
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeMask {
    Interior,
    Boundary,
    Exterior,
}

impl NodeMask {
    pub fn in_domain(self) -> bool {
        self != NodeMask::Exterior
    }

    fn as_str(self) -> &'static str {
        match self {
            NodeMask::Interior => "interior",
            NodeMask::Boundary => "boundary",
            NodeMask::Exterior => "exterior",
        }
    }

    fn parse(s: &str) -> Result<Self, CoreError> {
        match s {
            "interior" => Ok(NodeMask::Interior),
            "boundary" => Ok(NodeMask::Boundary),
            "exterior" => Ok(NodeMask::Exterior),
            other => Err(CoreError::InvalidInput(format!("unknown mask label {other:?}"))),
        }
    }
}

impl fmt::Display for NodeMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Scalar samples on a uniform grid over a domain's bounding box,
/// with the domain recorded through the node mask.
#[derive(Clone, Debug)]
pub struct GridFunction {
    n: usize,
    shape: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    values: Vec<f64>,
    mask: Vec<NodeMask>,
}

impl GridFunction {
    /// Sample `f` on a `points_per_axis`^{4n} grid over the domain's
    /// bounding box. Exterior nodes carry the value 0.
    pub fn from_domain(
        domain: &Domain,
        points_per_axis: usize,
        f: impl Fn(&[f64]) -> f64,
    ) -> Result<GridFunction, CoreError> {
        domain.validate()?;
        if points_per_axis < 2 {
            return Err(CoreError::InvalidInput("need at least 2 points per axis".into()));
        }
        let dim = domain.dim();
        let (lo, hi) = domain.bounding_box();
        let shape = vec![points_per_axis; dim];
        let len: usize = shape.iter().product();
        let mut g = GridFunction {
            n: dim / 4,
            shape,
            lo,
            hi,
            values: vec![0.0; len],
            mask: vec![NodeMask::Exterior; len],
        };
        let mut in_domain = vec![false; len];
        for idx in 0..len {
            in_domain[idx] = domain.contains(&g.coords(idx));
        }
        g.remask(&in_domain);
        for idx in 0..len {
            if g.mask[idx].in_domain() {
                let v = f(&g.coords(idx));
                if !v.is_finite() {
                    return Err(CoreError::NonFiniteEvaluation(g.coords(idx)));
                }
                g.values[idx] = v;
            }
        }
        Ok(g)
    }

    /// Recompute the mask from an in-domain predicate per node: nodes
    /// outside become Exterior (value reset to 0), in-domain nodes
    /// with an exterior or out-of-grid axis neighbor become Boundary,
    /// the rest Interior.
    pub fn remask(&mut self, in_domain: &[bool]) {
        assert_eq!(in_domain.len(), self.len());
        let dim = self.dim();
        let mut multi = vec![0usize; dim];
        for idx in 0..self.len() {
            if !in_domain[idx] {
                self.mask[idx] = NodeMask::Exterior;
                self.values[idx] = 0.0;
                continue;
            }
            self.unindex(idx, &mut multi);
            let mut boundary = false;
            'axes: for a in 0..dim {
                for step in [-1isize, 1] {
                    let ia = multi[a] as isize + step;
                    if ia < 0 || ia as usize >= self.shape[a] {
                        boundary = true;
                        break 'axes;
                    }
                    let nb = idx.wrapping_add_signed(step * self.stride(a) as isize);
                    if !in_domain[nb] {
                        boundary = true;
                        break 'axes;
                    }
                }
            }
            self.mask[idx] = if boundary { NodeMask::Boundary } else { NodeMask::Interior };
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.shape[axis] - 1) as f64
    }

    pub fn max_spacing(&self) -> f64 {
        (0..self.dim()).map(|a| self.spacing(a)).fold(0.0, f64::max)
    }

    fn stride(&self, axis: usize) -> usize {
        self.shape[axis + 1..].iter().product()
    }

    pub fn index_of(&self, multi: &[usize]) -> usize {
        debug_assert_eq!(multi.len(), self.shape.len());
        let mut idx = 0;
        for (i, m) in multi.iter().zip(&self.shape) {
            debug_assert!(i < m);
            idx = idx * m + i;
        }
        idx
    }

    pub fn unindex(&self, idx: usize, multi: &mut [usize]) {
        let mut rest = idx;
        for a in (0..self.shape.len()).rev() {
            multi[a] = rest % self.shape[a];
            rest /= self.shape[a];
        }
    }

    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.shape[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + i as f64 * self.spacing(axis)
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mut multi = vec![0usize; self.dim()];
        self.unindex(idx, &mut multi);
        multi.iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect()
    }

    pub fn value(&self, idx: usize) -> f64 {
        self.values[idx]
    }

    pub fn set_value(&mut self, idx: usize, v: f64) {
        self.values[idx] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn replace_values(&mut self, values: Vec<f64>) {
        assert_eq!(values.len(), self.values.len());
        self.values = values;
    }

    pub fn mask(&self, idx: usize) -> NodeMask {
        self.mask[idx]
    }

    pub fn set_mask(&mut self, idx: usize, m: NodeMask) {
        self.mask[idx] = m;
        if m == NodeMask::Exterior {
            self.values[idx] = 0.0;
        }
    }

    pub fn masks(&self) -> &[NodeMask] {
        &self.mask
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.mask[i] == NodeMask::Interior).collect()
    }

    pub fn same_layout(&self, other: &GridFunction) -> bool {
        self.shape == other.shape
            && self.lo.iter().zip(&other.lo).all(|(a, b)| a == b)
            && self.hi.iter().zip(&other.hi).all(|(a, b)| a == b)
    }

    /// Largest |self - other| over nodes that are in-domain in both.
    pub fn max_abs_diff(&self, other: &GridFunction) -> Result<f64, CoreError> {
        if !self.same_layout(other) {
            return Err(CoreError::GridMismatch("layouts differ".into()));
        }
        Ok((0..self.len())
            .filter(|&i| self.mask[i].in_domain() && other.mask[i].in_domain())
            .map(|i| (self.values[i] - other.values[i]).abs())
            .fold(0.0, f64::max))
    }

    /// Multilinear interpolation weights at `x` as (node, weight)
    /// pairs summing to 1. Corners at exterior nodes are excluded and
    /// the weights renormalized over the rest; fails if `x` leaves
    /// the bounding box or only exterior corners remain.
    pub fn interpolation_plan(&self, x: &[f64]) -> Result<Vec<(usize, f64)>, CoreError> {
        let dim = self.dim();
        assert_eq!(x.len(), dim);
        let mut base = vec![0usize; dim];
        let mut frac = vec![0.0f64; dim];
        for a in 0..dim {
            let h = self.spacing(a);
            let t = (x[a] - self.lo[a]) / h;
            if t < -1e-9 || t > (self.shape[a] - 1) as f64 + 1e-9 {
                return Err(CoreError::StencilOutOfBox(format!(
                    "coordinate {} on axis {a} is outside [{}, {}]",
                    x[a], self.lo[a], self.hi[a]
                )));
            }
            let mut i = t.floor().max(0.0) as usize;
            let mut f = t - i as f64;
            if f < 1e-9 {
                f = 0.0;
            } else if f > 1.0 - 1e-9 {
                i += 1;
                f = 0.0;
            }
            if i >= self.shape[a] - 1 {
                i = self.shape[a] - 1;
                f = 0.0;
            }
            base[a] = i;
            frac[a] = f;
        }
        let split: Vec<usize> = (0..dim).filter(|&a| frac[a] > 0.0).collect();
        let mut plan = Vec::with_capacity(1 << split.len());
        let mut wsum = 0.0;
        let mut corner = base.clone();
        for bits in 0..(1usize << split.len()) {
            let mut w = 1.0;
            for (b, &a) in split.iter().enumerate() {
                if bits & (1 << b) != 0 {
                    corner[a] = base[a] + 1;
                    w *= frac[a];
                } else {
                    corner[a] = base[a];
                    w *= 1.0 - frac[a];
                }
            }
            let idx = self.index_of(&corner);
            if self.mask[idx].in_domain() && w > 0.0 {
                plan.push((idx, w));
                wsum += w;
            }
        }
        if wsum <= 1e-12 {
            return Err(CoreError::Degeneracy(format!(
                "all interpolation corners near {x:?} are exterior"
            )));
        }
        for (_, w) in &mut plan {
            *w /= wsum;
        }
        Ok(plan)
    }

    /// Multilinear interpolation of the grid values at `x`.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64, CoreError> {
        Ok(self
            .interpolation_plan(x)?
            .iter()
            .map(|&(idx, w)| w * self.values[idx])
            .sum())
    }

    pub fn to_csv_string(&self) -> String {
        let dim = self.dim();
        let mut out = String::new();
        for a in 0..dim {
            out.push_str(&format!("i{a},"));
        }
        for a in 0..dim {
            out.push_str(&format!("x{a},"));
        }
        out.push_str("value,mask\n");
        let mut multi = vec![0usize; dim];
        for idx in 0..self.len() {
            self.unindex(idx, &mut multi);
            for &i in &multi {
                out.push_str(&format!("{i},"));
            }
            for (a, &i) in multi.iter().enumerate() {
                out.push_str(&format!("{},", self.coord(a, i)));
            }
            out.push_str(&format!("{},{}\n", self.values[idx], self.mask[idx]));
        }
        out
    }

    pub fn from_csv_string(text: &str) -> Result<GridFunction, CoreError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| CoreError::InvalidInput("empty grid CSV".into()))?;
        let cols: Vec<&str> = header.split(',').collect();
        if cols.len() < 4 || (cols.len() - 2) % 2 != 0 {
            return Err(CoreError::InvalidInput("malformed grid CSV header".into()));
        }
        let dim = (cols.len() - 2) / 2;
        if dim % 4 != 0 {
            return Err(CoreError::InvalidInput(format!(
                "grid dimension {dim} is not a multiple of 4"
            )));
        }
        for a in 0..dim {
            if cols[a] != format!("i{a}") || cols[dim + a] != format!("x{a}") {
                return Err(CoreError::InvalidInput("malformed grid CSV header".into()));
            }
        }
        if cols[2 * dim] != "value" || cols[2 * dim + 1] != "mask" {
            return Err(CoreError::InvalidInput("malformed grid CSV header".into()));
        }
        let mut rows: Vec<(Vec<usize>, Vec<f64>, f64, NodeMask)> = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols.len() {
                return Err(CoreError::InvalidInput(format!(
                    "row {}: expected {} fields, got {}",
                    lineno + 2,
                    cols.len(),
                    fields.len()
                )));
            }
            let bad = |what: &str| {
                CoreError::InvalidInput(format!("row {}: bad {what}", lineno + 2))
            };
            let mut multi = Vec::with_capacity(dim);
            for f in &fields[..dim] {
                multi.push(f.parse::<usize>().map_err(|_| bad("index"))?);
            }
            let mut coords = Vec::with_capacity(dim);
            for f in &fields[dim..2 * dim] {
                coords.push(f.parse::<f64>().map_err(|_| bad("coordinate"))?);
            }
            let value = fields[2 * dim].parse::<f64>().map_err(|_| bad("value"))?;
            let mask = NodeMask::parse(fields[2 * dim + 1])?;
            rows.push((multi, coords, value, mask));
        }
        if rows.is_empty() {
            return Err(CoreError::InvalidInput("grid CSV has no data rows".into()));
        }
        let mut shape = vec![0usize; dim];
        for (multi, _, _, _) in &rows {
            for a in 0..dim {
                shape[a] = shape[a].max(multi[a] + 1);
            }
        }
        let len: usize = shape.iter().product();
        if rows.len() != len {
            return Err(CoreError::InvalidInput(format!(
                "grid CSV has {} rows but the index ranges imply {len}",
                rows.len()
            )));
        }
        let mut lo = vec![f64::NAN; dim];
        let mut hi = vec![f64::NAN; dim];
        for (multi, coords, _, _) in &rows {
            for a in 0..dim {
                if multi[a] == 0 {
                    lo[a] = coords[a];
                }
                if multi[a] + 1 == shape[a] {
                    hi[a] = coords[a];
                }
            }
        }
        if lo.iter().chain(&hi).any(|v| !v.is_finite()) {
            return Err(CoreError::InvalidInput("grid CSV bounds are incomplete".into()));
        }
        let mut g = GridFunction {
            n: dim / 4,
            shape,
            lo,
            hi,
            values: vec![0.0; len],
            mask: vec![NodeMask::Exterior; len],
        };
        let mut seen = vec![false; len];
        for (multi, _, value, mask) in rows {
            if multi.iter().zip(&g.shape).any(|(i, m)| i >= m) {
                return Err(CoreError::InvalidInput("grid CSV index out of range".into()));
            }
            let idx = g.index_of(&multi);
            if seen[idx] {
                return Err(CoreError::InvalidInput("grid CSV repeats a node".into()));
            }
            seen[idx] = true;
            g.values[idx] = value;
            g.mask[idx] = mask;
        }
        Ok(g)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CoreError> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<GridFunction, CoreError> {
        GridFunction::from_csv_string(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn unit_ball(dim: usize) -> Domain {
        Domain::Ball { center: vec![0.0; dim], radius: 1.0 }
    }

    #[test]
    fn ball_masks_follow_the_neighbor_rule() {
        let g = GridFunction::from_domain(&unit_ball(4), 5, |x| x[0]).unwrap();
        assert_eq!(g.mask(g.index_of(&[2, 2, 2, 2])), NodeMask::Interior);
        // on-sphere node at the grid edge
        assert_eq!(g.mask(g.index_of(&[4, 2, 2, 2])), NodeMask::Boundary);
        // on-sphere node with an exterior neighbor
        assert_eq!(g.mask(g.index_of(&[3, 3, 3, 3])), NodeMask::Boundary);
        // strictly interior with all neighbors in the closed ball
        assert_eq!(g.mask(g.index_of(&[3, 2, 2, 2])), NodeMask::Interior);
        // corner of the bounding box
        assert_eq!(g.mask(g.index_of(&[0, 0, 0, 0])), NodeMask::Exterior);
        assert_eq!(g.value(g.index_of(&[0, 0, 0, 0])), 0.0);
        let x = g.coords(g.index_of(&[4, 2, 2, 2]));
        assert_eq!(x, vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn box_grid_has_one_interior_node_at_three_points_per_axis() {
        let dom = Domain::Box { lo: vec![-1.0; 4], hi: vec![1.0; 4] };
        let g = GridFunction::from_domain(&dom, 3, |_| 0.0).unwrap();
        let interior = g.interior_indices();
        assert_eq!(interior, vec![g.index_of(&[1, 1, 1, 1])]);
        assert_eq!(
            g.masks().iter().filter(|m| **m == NodeMask::Boundary).count(),
            g.len() - 1
        );
    }

    #[test]
    fn ray_exit_examples() {
        let ball = unit_ball(4);
        let e0 = [1.0, 0.0, 0.0, 0.0];
        let s = ball.ray_exit(&[0.0; 4], &e0, 2.0).unwrap();
        assert!((s - 1.0).abs() <= 1e-12);
        let s = ball.ray_exit(&[0.5, 0.0, 0.0, 0.0], &e0, 2.0).unwrap();
        assert!((s - 0.5).abs() <= 1e-12);
        assert!(ball.ray_exit(&[0.0; 4], &e0, 0.5).is_none());
        let diag = [0.5f64.sqrt(), 0.5f64.sqrt(), 0.0, 0.0];
        let s = ball.ray_exit(&[0.0; 4], &diag, 2.0).unwrap();
        assert!((s - 1.0).abs() <= 1e-12);

        let dom = Domain::Box { lo: vec![-1.0; 4], hi: vec![1.0; 4] };
        let s = dom.ray_exit(&[0.3, 0.0, 0.0, 0.0], &e0, 2.0).unwrap();
        assert!((s - 0.7).abs() <= 1e-12);
        let back = [-1.0, 0.0, 0.0, 0.0];
        let s = dom.ray_exit(&[0.3, 0.0, 0.0, 0.0], &back, 2.0).unwrap();
        assert!((s - 1.3).abs() <= 1e-12);
    }

    #[test]
    fn interpolation_reproduces_multilinear_data() {
        let dom = Domain::Box { lo: vec![-1.0; 4], hi: vec![1.0; 4] };
        let f = |x: &[f64]| 0.3 + x[0] - 2.0 * x[1] + 0.5 * x[2] * x[3];
        let g = GridFunction::from_domain(&dom, 5, f).unwrap();
        let mut rng = crate::sampling::rng_from_seed(31);
        for _ in 0..50 {
            let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
            assert!((g.interpolate(&x).unwrap() - f(&x)).abs() <= 1e-12);
        }
        // exact node hit after a tiny perturbation snaps to the node value
        let idx = g.index_of(&[1, 2, 3, 0]);
        let mut x = g.coords(idx);
        x[0] += 1e-12;
        assert_eq!(g.interpolate(&x).unwrap(), g.value(idx));
        // outside the box
        assert!(matches!(
            g.interpolate(&[1.5, 0.0, 0.0, 0.0]),
            Err(CoreError::StencilOutOfBox(_))
        ));
    }

    #[test]
    fn interpolation_skips_exterior_corners() {
        let g = GridFunction::from_domain(&unit_ball(4), 5, |x| x[0] + 2.0).unwrap();
        // a point inside the ball whose grid cell pokes outside
        let x = [0.85, 0.3, 0.1, 0.2];
        assert!(unit_ball(4).contains(&x));
        let v = g.interpolate(&x).unwrap();
        let in_vals: Vec<f64> = (0..g.len())
            .filter(|&i| g.mask(i).in_domain())
            .map(|i| g.value(i))
            .collect();
        let min = in_vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = in_vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(v >= min && v <= max, "v={v}");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut rng = crate::sampling::rng_from_seed(32);
        let mut g = GridFunction::from_domain(&unit_ball(4), 5, |_| 0.0).unwrap();
        for idx in 0..g.len() {
            if g.mask(idx).in_domain() {
                g.set_value(idx, rng.gen_range(-1.0..1.0) * 1e3);
            }
        }
        let text = g.to_csv_string();
        let h = GridFunction::from_csv_string(&text).unwrap();
        assert!(g.same_layout(&h));
        for idx in 0..g.len() {
            assert_eq!(g.value(idx).to_bits(), h.value(idx).to_bits());
            assert_eq!(g.mask(idx), h.mask(idx));
        }
        assert_eq!(text, h.to_csv_string());

        let dir = std::env::temp_dir().join(format!("grid-csv-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("ball.csv");
        g.write_csv(&path).unwrap();
        let k = GridFunction::read_csv(&path).unwrap();
        assert_eq!(k.to_csv_string(), text);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(GridFunction::from_csv_string("").is_err());
        assert!(GridFunction::from_csv_string("i0,x0,value,mask\n").is_err());
        let g = GridFunction::from_domain(&unit_ball(4), 3, |_| 1.0).unwrap();
        let text = g.to_csv_string();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.remove(5);
        assert!(GridFunction::from_csv_string(&lines.join("\n")).is_err());
        let dup = format!("{text}{}", text.lines().nth(1).unwrap());
        assert!(GridFunction::from_csv_string(&dup).is_err());
    }

    #[test]
    fn values_are_finite_on_the_domain() {
        let g = GridFunction::from_domain(&unit_ball(8), 3, |x| x.iter().sum()).unwrap();
        assert_eq!(g.n(), 2);
        for idx in 0..g.len() {
            if g.mask(idx).in_domain() {
                assert!(g.value(idx).is_finite());
            }
        }
        let r = GridFunction::from_domain(&unit_ball(4), 5, |x| 1.0 / (x[0] - 1.0));
        assert!(matches!(r, Err(CoreError::NonFiniteEvaluation(_))));
    }
}
