//! Regular grids over probability simplices.

/// All points of the probability simplex in `dim` coordinates whose entries
/// are multiples of `1/(res-1)`. `res` is the number of points per axis.
pub fn simplex_grid(dim: usize, res: usize) -> Vec<Vec<f64>> {
    assert!(dim >= 1, "simplex needs at least one coordinate");
    let steps = res.max(2) - 1;
    let mut out = Vec::new();
    let mut counts = vec![0usize; dim];
    fill(&mut counts, 0, steps, steps, &mut out);
    out
}

fn fill(counts: &mut [usize], k: usize, left: usize, steps: usize, out: &mut Vec<Vec<f64>>) {
    if k == counts.len() - 1 {
        counts[k] = left;
        out.push(counts.iter().map(|&c| c as f64 / steps as f64).collect());
        return;
    }
    for c in (0..=left).rev() {
        counts[k] = c;
        fill(counts, k + 1, left - c, steps, out);
    }
}

/// Resolution of the refinement grid used to certify a construction made at
/// resolution `res`: every original grid point is kept and every cell is
/// halved.
pub fn refined(res: usize) -> usize {
    2 * (res.max(2) - 1) + 1
}
