use crate::partition::Grouping;

use super::linalg::norm2;

/// Weighted group norm `sum_j sqrt(m_j) * ||beta_{G_j}||_2`.
pub fn group_penalty(beta: &[f64], grouping: &Grouping) -> f64 {
    let mut block = Vec::with_capacity(grouping.largest_group());
    grouping
        .groups()
        .iter()
        .map(|members| {
            block.clear();
            block.extend(members.iter().map(|&j| beta[j]));
            (members.len() as f64).sqrt() * norm2(&block)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_vector() {
        let g = Grouping::new(vec![vec![0, 1], vec![2]], 3, 2).unwrap();
        assert_eq!(group_penalty(&[0.0; 3], &g), 0.0);
    }

    #[test]
    fn singletons_give_l1() {
        let beta = [1.5, -2.0, 0.0, 0.25];
        assert_eq!(group_penalty(&beta, &Grouping::singletons(4)), 3.75);
    }

    #[test]
    fn pair_three_four() {
        let g = Grouping::new(vec![vec![0, 1]], 2, 2).unwrap();
        let v = group_penalty(&[3.0, 4.0], &g);
        assert!((v - 7.0710678).abs() < 1e-7);
        assert!((v - 2f64.sqrt() * 5.0).abs() < 1e-15);
    }
}
