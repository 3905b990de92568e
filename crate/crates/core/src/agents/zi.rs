use rand::Rng;

use super::PriceBounds;
use crate::market::{uniform_between, Side};

/// Budget-constrained random quote: buyers bid uniformly on `[price_min, limit]`,
/// sellers ask uniformly on `[limit, price_max]`.
pub fn zi_quote<R: Rng + ?Sized>(side: Side, limit: f64, bounds: PriceBounds, rng: &mut R) -> f64 {
    match side {
        Side::Buyer => uniform_between(rng, bounds.min, limit),
        Side::Seller => uniform_between(rng, limit, bounds.max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::rng_from_seed;

    const BOUNDS: PriceBounds = PriceBounds {
        min: 0.0,
        max: 100.0,
    };

    #[test]
    fn degenerate_intervals() {
        let mut rng = rng_from_seed(5);
        assert_eq!(zi_quote(Side::Buyer, 0.0, BOUNDS, &mut rng), 0.0);
        assert_eq!(zi_quote(Side::Seller, 100.0, BOUNDS, &mut rng), 100.0);
    }

    #[test]
    fn buyer_mean_is_half_the_limit() {
        let mut rng = rng_from_seed(11);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| zi_quote(Side::Buyer, 80.0, BOUNDS, &mut rng))
            .sum::<f64>()
            / n as f64;
        assert!((mean - 40.0).abs() < 1.0, "mean {mean}");
    }

    #[test]
    fn quotes_respect_budget() {
        let mut rng = rng_from_seed(2);
        for i in 0..10_000 {
            let limit = (i % 101) as f64;
            let b = zi_quote(Side::Buyer, limit, BOUNDS, &mut rng);
            let s = zi_quote(Side::Seller, limit, BOUNDS, &mut rng);
            assert!((0.0..=limit).contains(&b));
            assert!((limit..=100.0).contains(&s));
        }
    }
}
