use std::collections::BTreeSet;

use proptest::prelude::*;

use cdasim::engine::simulate;
use cdasim::netgraph::build_network;
use cdasim::{MarketConfig, Model, Side, TradePriceRule};

fn model() -> impl Strategy<Value = Model> {
    prop_oneof![Just(Model::Zi), Just(Model::Zip), Just(Model::Gd)]
}

fn config() -> impl Strategy<Value = MarketConfig> {
    let rule = prop_oneof![
        Just(TradePriceRule::Midpoint),
        Just(TradePriceRule::BuyerPrice),
        Just(TradePriceRule::SellerPrice),
        Just(TradePriceRule::UniformRandom),
    ];
    (
        1usize..20,
        1u64..60,
        1u64..5,
        model(),
        any::<u64>(),
        any::<bool>(),
        rule,
    )
        .prop_map(
            |(half, rounds, days, model, seed, forced, trade_price_rule)| MarketConfig {
                n_traders: 2 * half,
                rounds_per_day: rounds,
                n_days: days,
                model,
                seed,
                gd_forced_trade: forced,
                trade_price_rule,
                ..MarketConfig::default()
            },
        )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trades_respect_limits_and_schedule(config in config()) {
        let log = simulate(&config).unwrap();
        let traders = &log.market.traders;
        let mut per_day = BTreeSet::new();
        for t in &log.trades {
            let (b, s) = (&traders[t.buyer_id], &traders[t.seller_id]);
            prop_assert_eq!(b.side, Side::Buyer);
            prop_assert_eq!(s.side, Side::Seller);
            prop_assert!(t.bid >= t.ask);
            prop_assert!(t.ask <= t.price && t.price <= t.bid);
            prop_assert!(t.price <= b.limit && t.price >= s.limit);
            prop_assert!(t.day < config.n_days);
            prop_assert_eq!(t.step / config.rounds_per_day, t.day);
            // a trader trades at most once per day
            prop_assert!(per_day.insert((t.day, t.buyer_id)));
            prop_assert!(per_day.insert((t.day, t.seller_id)));
        }
        prop_assert!(log.trades.windows(2).all(|w| w[0].step < w[1].step));
        prop_assert_eq!(log.shouts.len() as u64 % 2, 0);
    }

    #[test]
    fn network_matches_trades(config in config()) {
        let log = simulate(&config).unwrap();
        let net = build_network(&log);
        let pairs: BTreeSet<(usize, usize)> = log.trades.iter().map(|t| (t.buyer_id, t.seller_id)).collect();
        prop_assert_eq!(net.n_edges(), pairs.len());
        let total: u64 = net.edges().map(|e| e.2).sum();
        prop_assert_eq!(total as usize, log.trades.len());
        prop_assert_eq!(net.degrees().iter().sum::<usize>(), 2 * pairs.len());
    }

    #[test]
    fn same_seed_same_log(config in config()) {
        prop_assert_eq!(simulate(&config).unwrap(), simulate(&config).unwrap());
    }
}
