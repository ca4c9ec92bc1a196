//! Free products of finite cyclic groups in alternating-syllable normal form.

pub(crate) fn multiply(orders: &[u32], x: &[(u32, u32)], y: &[(u32, u32)]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = x.to_vec();
    let mut rest = y.iter().copied();
    for (f, e) in rest.by_ref() {
        match out.last_mut() {
            Some(last) if last.0 == f => {
                let sum = (last.1 + e) % orders[f as usize];
                if sum == 0 {
                    out.pop();
                    continue;
                }
                last.1 = sum;
                break;
            }
            _ => {
                out.push((f, e));
                break;
            }
        }
    }
    out.extend(rest);
    out
}

pub(crate) fn invert(orders: &[u32], x: &[(u32, u32)]) -> Vec<(u32, u32)> {
    x.iter().rev().map(|&(f, e)| (f, orders[f as usize] - e)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cascade_cancellation() {
        let orders = [2, 3];
        // (a b) * (b^2 a) = identity
        let x = vec![(0, 1), (1, 1)];
        let y = vec![(1, 2), (0, 1)];
        assert!(multiply(&orders, &x, &y).is_empty());
        // (a b) * (b a) = a b^2 a
        let y = vec![(1, 1), (0, 1)];
        assert_eq!(multiply(&orders, &x, &y), vec![(0, 1), (1, 2), (0, 1)]);
    }
}
