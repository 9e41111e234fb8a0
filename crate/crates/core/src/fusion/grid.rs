use super::{FusionError, Result};

/// Largest model count the exhaustive grid accepts.
pub const GRID_MAX_MODELS: usize = 4;

/// All points of the simplex grid with spacing `1/K`, `K = ceil(1/step)`,
/// in lexicographically descending order of the integer coordinates.
pub fn grid_points(m: usize, step: f64) -> Result<Vec<Vec<f64>>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(FusionError::InvalidStep(step));
    }
    if m > GRID_MAX_MODELS {
        return Err(FusionError::GridTooLarge { models: m });
    }
    let k = (1.0 / step - 1e-9).ceil() as usize;
    let mut out = Vec::new();
    let mut counts = vec![0usize; m];
    compositions(k, 0, &mut counts, &mut |c| {
        out.push(c.iter().map(|&x| x as f64 / k as f64).collect());
    });
    Ok(out)
}

fn compositions(
    remaining: usize,
    pos: usize,
    counts: &mut [usize],
    emit: &mut impl FnMut(&[usize]),
) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        emit(counts);
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        compositions(remaining - c, pos + 1, counts, emit);
    }
}
