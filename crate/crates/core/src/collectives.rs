//! Communication primitives shared by the schedulers. All of them run as
//! committed rounds (or routing calls) on a [`RoundLedger`].

use crate::error::ModelViolation;
use crate::sim::{Budget, RoundLedger, Word};

/// One round in which every machine sends its word to every machine.
/// Returns the words in machine order, as every machine now knows them.
pub fn all_gather(ledger: &mut RoundLedger, values: &[Word]) -> Result<Vec<Word>, ModelViolation> {
    let n = ledger.n();
    assert_eq!(values.len(), n);
    let batch = values
        .iter()
        .map(|&v| (0..n).map(|dst| (dst, v)).collect())
        .collect();
    let inboxes = ledger.commit_round(batch, Budget::PerPair)?;
    Ok(inboxes[0].iter().map(|&(_, v)| v).collect())
}

/// Every machine learns the concatenation of all `sets`, in machine order.
///
/// One round to broadcast the counts, then `ceil(sum / n)` phases of two
/// rounds: global message `k*n + i'` is dealt to machine `i'`, which then
/// broadcasts it.
pub fn multiple_broadcast(
    ledger: &mut RoundLedger,
    sets: &[Vec<Word>],
) -> Result<Vec<Word>, ModelViolation> {
    Ok(multiple_broadcast_views(ledger, sets)?.swap_remove(0))
}

/// [`multiple_broadcast`], returning the sequence as assembled by each
/// machine from its own inbox.
pub fn multiple_broadcast_views(
    ledger: &mut RoundLedger,
    sets: &[Vec<Word>],
) -> Result<Vec<Vec<Word>>, ModelViolation> {
    let n = ledger.n();
    assert_eq!(sets.len(), n);
    let counts = all_gather(
        ledger,
        &sets.iter().map(|s| s.len() as Word).collect::<Vec<_>>(),
    )?;
    let mut offsets = Vec::with_capacity(n);
    let mut total = 0usize;
    for &c in &counts {
        offsets.push(total);
        total += c as usize;
    }
    let mut out = vec![vec![0; total]; n];
    for phase in 0..total.div_ceil(n) {
        let lo = phase * n;
        let hi = lo + n;
        let deal = sets
            .iter()
            .zip(&offsets)
            .map(|(set, &off)| {
                set.iter()
                    .enumerate()
                    .map(|(k, &w)| (off + k, w))
                    .filter(|&(pos, _)| pos >= lo && pos < hi)
                    .map(|(pos, w)| (pos - lo, (pos, w)))
                    .collect()
            })
            .collect();
        let held = ledger.commit_round(deal, Budget::PerPair)?;
        let bcast = held
            .iter()
            .map(|inbox| {
                inbox
                    .iter()
                    .flat_map(|&(_, item)| (0..n).map(move |dst| (dst, item)))
                    .collect()
            })
            .collect();
        let got = ledger.commit_round(bcast, Budget::PerPair)?;
        for (view, inbox) in out.iter_mut().zip(got) {
            for (_, (pos, w)) in inbox {
                view[pos] = w;
            }
        }
    }
    Ok(out)
}

/// Distributed search for the minimum index `j0` with
/// `sum_{j <= j0} sum_i values[i][j] >= x`; `None` if the total is below `x`.
///
/// `values[i]` is machine `i`'s column. The index range is padded with zero
/// dummies to `n^c`; each of the `c` levels splits the current range into
/// `n` blocks, collects the `n` block-end prefix sums at machines
/// `0..n` and broadcasts them (two rounds), then keeps the block after the
/// last prefix below `x`.
pub fn nary_search(
    ledger: &mut RoundLedger,
    values: &[Vec<u64>],
    x: u64,
) -> Result<Option<usize>, ModelViolation> {
    let n = ledger.n();
    assert_eq!(values.len(), n);
    let len = values[0].len();
    assert!(
        values.iter().all(|v| v.len() == len),
        "ragged search instance"
    );
    if len == 0 {
        return Ok(None);
    }
    let local_prefix: Vec<Vec<u64>> = values
        .iter()
        .map(|col| {
            col.iter()
                .scan(0u64, |acc, &v| {
                    *acc += v;
                    Some(*acc)
                })
                .collect()
        })
        .collect();
    let prefix_at = |i: usize, l: usize| local_prefix[i][l.min(len - 1)];
    if n == 1 {
        return Ok((0..len).find(|&l| prefix_at(0, l) >= x));
    }
    let mut block = n;
    while block < len {
        block = block.saturating_mul(n);
    }
    let mut base = 0usize;
    loop {
        let sub = block / n;
        let ends: Vec<usize> = (0..n).map(|k| base + (k + 1) * sub - 1).collect();
        let partial = (0..n)
            .map(|i| {
                ends.iter()
                    .enumerate()
                    .map(|(k, &l)| (k, prefix_at(i, l)))
                    .collect()
            })
            .collect();
        let collected = ledger.commit_round(partial, Budget::PerPair)?;
        let sums: Vec<Word> = collected
            .iter()
            .map(|inbox| inbox.iter().map(|&(_, v)| v).sum())
            .collect();
        let sums = all_gather(ledger, &sums)?;
        let below = sums.iter().rposition(|&s| s < x);
        let next = below.map_or(0, |k| k + 1);
        if next == n {
            // only reachable on the first level: the whole range is below x
            return Ok(None);
        }
        base += next * sub;
        if sub == 1 {
            return Ok((base < len).then_some(base));
        }
        block = sub;
    }
}
