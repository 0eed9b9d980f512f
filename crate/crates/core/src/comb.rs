//! Small combinatorial helpers: factorial tables, binomials, and
//! lexicographic enumeration of bounded integer tuples.

/// Natural logarithms of factorials `ln(k!)` for `k = 0..=n`, by compensated
/// cumulative summation. The compensation keeps the absolute error of each
/// entry at a few ulps of the summands rather than of the running total,
/// which matters for the 1e-12 norm guarantees at N ~ 100.
pub fn ln_factorials(n: usize) -> Vec<f64> {
    let mut table = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    let mut comp = 0.0f64;
    table.push(0.0);
    for k in 1..=n {
        let term = (k as f64).ln() - comp;
        let next = acc + term;
        comp = (next - acc) - term;
        acc = next;
        table.push(acc);
    }
    table
}

/// Exact binomial coefficient in `u128`; panics on overflow, which does not
/// occur for the parameter ranges used here (N <= ~60, d <= 7).
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Exact multinomial coefficient `n! / (parts[0]! parts[1]! ...)` where the
/// parts must sum to `n`. Returns `None` on u128 overflow.
pub fn multinomial_exact(n: usize, parts: &[usize]) -> Option<u128> {
    debug_assert_eq!(parts.iter().sum::<usize>(), n);
    let mut acc: u128 = 1;
    let mut remaining = n;
    for &p in parts {
        acc = acc.checked_mul(binomial(remaining, p))?;
        remaining -= p;
    }
    Some(acc)
}

pub fn gcd(a: usize, b: usize) -> usize {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// All `len`-tuples of nonnegative integers with sum at most `max_sum`, in
/// lexicographic order. This is the Dicke-label ordering.
pub fn tuples_with_sum_at_most(len: usize, max_sum: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; len];
    rec_bounded(&mut out, &mut cur, 0, max_sum);
    out
}

fn rec_bounded(out: &mut Vec<Vec<usize>>, cur: &mut Vec<usize>, pos: usize, budget: usize) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for v in 0..=budget {
        cur[pos] = v;
        rec_bounded(out, cur, pos + 1, budget - v);
    }
    cur[pos] = 0;
}

/// Visits every `len`-tuple of nonnegative integers with sum exactly `total`,
/// in lexicographic order.
pub fn for_each_composition<F: FnMut(&[usize])>(len: usize, total: usize, mut f: F) {
    let mut cur = vec![0usize; len];
    rec_exact(&mut cur, 0, total, &mut f);
}

fn rec_exact<F: FnMut(&[usize])>(cur: &mut Vec<usize>, pos: usize, budget: usize, f: &mut F) {
    if pos + 1 == cur.len() {
        cur[pos] = budget;
        f(cur);
        cur[pos] = 0;
        return;
    }
    for v in 0..=budget {
        cur[pos] = v;
        rec_exact(cur, pos + 1, budget - v, f);
    }
    cur[pos] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_values() {
        assert_eq!(binomial(3, 1), 3);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(8, 2), 28);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(2, 5), 0);
    }

    #[test]
    fn ln_factorial_matches_exact() {
        let table = ln_factorials(20);
        let mut exact: u128 = 1;
        for (k, &entry) in table.iter().enumerate().skip(1) {
            exact *= k as u128;
            let rel = (entry - (exact as f64).ln()).abs() / entry.max(1.0);
            assert!(rel < 1e-14, "k = {k}: rel = {rel}");
        }
    }

    #[test]
    fn bounded_tuples_lexicographic_and_complete() {
        let labels = tuples_with_sum_at_most(2, 2);
        assert_eq!(
            labels,
            vec![
                vec![0, 0],
                vec![0, 1],
                vec![0, 2],
                vec![1, 0],
                vec![1, 1],
                vec![2, 0]
            ]
        );
    }

    #[test]
    fn composition_count_matches_binomial() {
        let mut count = 0usize;
        for_each_composition(4, 6, |c| {
            assert_eq!(c.iter().sum::<usize>(), 6);
            count += 1;
        });
        assert_eq!(count as u128, binomial(6 + 3, 3));
    }

    #[test]
    fn multinomial_exact_values() {
        assert_eq!(multinomial_exact(4, &[2, 1, 1]), Some(12));
        assert_eq!(multinomial_exact(2, &[0, 1, 1]), Some(2));
        assert_eq!(multinomial_exact(6, &[6, 0, 0]), Some(1));
    }
}
