//! Integer partitions: counting and listing.

/// Number of partitions of `n` into parts of size at most `max_part`
/// (equivalently, into at most `max_part` parts). `None` means unbounded.
pub fn count_bounded(n: i64, max_part: Option<u32>) -> u64 {
    if n < 0 {
        return 0;
    }
    let n = n as usize;
    let top = max_part.map_or(n, |m| (m as usize).min(n));
    let mut table = vec![0u64; n + 1];
    table[0] = 1;
    for part in 1..=top {
        for total in part..=n {
            table[total] += table[total - part];
        }
    }
    table[n]
}

/// All partitions of `n` with parts in descending order, each part at most
/// `max_part`. Listed in reverse lexicographic order.
pub fn list(n: u32, max_part: Option<u32>) -> Vec<Vec<u32>> {
    fn go(rest: u32, cap: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(prefix.clone());
            return;
        }
        for part in (1..=cap.min(rest)).rev() {
            prefix.push(part);
            go(rest - part, part, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(n, max_part.unwrap_or(n), &mut Vec::new(), &mut out);
    out
}

/// Partitions of `n` into at most `max_len` parts.
pub fn list_with_len(n: u32, max_len: usize) -> Vec<Vec<u32>> {
    list(n, None).into_iter().filter(|p| p.len() <= max_len).collect()
}
