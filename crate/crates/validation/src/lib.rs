//! Series checks shared by the acceptance run.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    NonIncreasing,
    NonDecreasing,
}

/// Indices `k` where step `k -> k+1` moves the wrong way by more than `slack`.
pub fn monotone_violations(xs: &[f64], dir: Direction, slack: f64) -> Vec<usize> {
    xs.windows(2)
        .enumerate()
        .filter(|(_, w)| match dir {
            Direction::NonIncreasing => w[1] > w[0] + slack,
            Direction::NonDecreasing => w[1] < w[0] - slack,
        })
        .map(|(k, _)| k)
        .collect()
}

/// True when the largest value sits strictly inside the series and beats both ends.
pub fn has_interior_max(xs: &[f64]) -> bool {
    if xs.len() < 3 {
        return false;
    }
    let (k, &top) = xs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty");
    k > 0 && k + 1 < xs.len() && top > xs[0] && top > xs[xs.len() - 1]
}

/// Sign changes of a series, ignoring exact zeros.
pub fn sign_change_count(xs: &[f64]) -> usize {
    let signs: Vec<f64> = xs.iter().filter(|x| **x != 0.0).map(|x| x.signum()).collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}
