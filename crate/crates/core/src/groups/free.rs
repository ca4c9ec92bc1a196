/// Concatenates two freely reduced words and cancels at the junction.
pub(crate) fn reduce_concat(x: &[i32], y: &[i32]) -> Vec<i32> {
    let mut cut = 0;
    while cut < x.len() && cut < y.len() && x[x.len() - 1 - cut] == -y[cut] {
        cut += 1;
    }
    let mut out = Vec::with_capacity(x.len() + y.len() - 2 * cut);
    out.extend_from_slice(&x[..x.len() - cut]);
    out.extend_from_slice(&y[cut..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancels_fully() {
        assert!(reduce_concat(&[1, 2], &[-2, -1]).is_empty());
        assert_eq!(reduce_concat(&[1, 2], &[-2, 1]), vec![1, 1]);
        assert_eq!(reduce_concat(&[], &[2]), vec![2]);
    }
}
