//! One spot market per router, driven by a market maker that fills every
//! order and moves the quote multiplicatively: a trade of `w` units executes
//! at `S * exp(w / lambda)`, where `lambda` is the market depth. The rule
//! makes circular trading a no-op and keeps prices strictly positive.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketError {
    #[error("initial price must be positive and finite, got {0}")]
    BadInitialPrice(f64),
    #[error("liquidity must be positive and finite, got {0}")]
    BadLiquidity(f64),
    #[error("trade volume must be finite, got {0}")]
    NonFiniteVolume(f64),
    #[error("price impact exp({exponent}) leaves the representable range (price {price})")]
    PriceRange { exponent: f64, price: f64 },
}

/// State of a single router market.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    price: f64,
    initial_price: f64,
    liquidity: f64,
}

/// Record of one executed trade. `volume` is signed (positive buys from the
/// market maker), `unit_price` is the post-impact transaction price, and
/// `cash_delta` is the signed change to the trader's cash, `-volume * unit_price`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trade {
    pub volume: f64,
    pub unit_price: f64,
    pub cash_delta: f64,
    pub new_quote: f64,
}

impl MarketState {
    pub fn new(initial_price: f64, liquidity: f64) -> Result<Self, MarketError> {
        if !(initial_price.is_finite() && initial_price > 0.0) {
            return Err(MarketError::BadInitialPrice(initial_price));
        }
        if !(liquidity.is_finite() && liquidity > 0.0) {
            return Err(MarketError::BadLiquidity(liquidity));
        }
        Ok(MarketState {
            price: initial_price,
            initial_price,
            liquidity,
        })
    }

    /// Last transaction price (the current quote).
    pub fn price(&self) -> f64 {
        self.price
    }

    pub fn initial_price(&self) -> f64 {
        self.initial_price
    }

    pub fn liquidity(&self) -> f64 {
        self.liquidity
    }

    /// Executes a signed volume against the market maker and updates the
    /// quote. Zero volume is an identity: prices change only through trading.
    pub fn execute(&mut self, volume: f64) -> Result<Trade, MarketError> {
        if !volume.is_finite() {
            return Err(MarketError::NonFiniteVolume(volume));
        }
        let exponent = volume / self.liquidity;
        let unit_price = self.price * exponent.exp();
        if !(unit_price.is_finite() && unit_price > 0.0) {
            return Err(MarketError::PriceRange {
                exponent,
                price: unit_price,
            });
        }
        self.price = unit_price;
        Ok(Trade {
            volume,
            unit_price,
            cash_delta: -volume * unit_price,
            new_quote: unit_price,
        })
    }

    /// Outstanding reserved volume implied by the quote:
    /// `lambda * ln(price / initial_price)`. Equals the cumulative signed
    /// traded volume up to floating-point accumulation.
    pub fn implied_load(&self) -> f64 {
        self.liquidity * (self.price / self.initial_price).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn market(price: f64, liquidity: f64) -> MarketState {
        MarketState::new(price, liquidity).unwrap()
    }

    #[test]
    fn zero_volume_is_identity() {
        let mut m = market(10.0, 10.0);
        let t = m.execute(0.0).unwrap();
        assert_eq!(m.price(), 10.0);
        assert_eq!(t.cash_delta, 0.0);
        assert_eq!(t.unit_price, 10.0);
    }

    #[test]
    fn unit_liquidity_trade_moves_price_by_e() {
        let mut m = market(10.0, 10.0);
        let t = m.execute(10.0).unwrap();
        // 10 * e^1
        assert_relative_eq!(t.unit_price, 27.182818284590452, epsilon = 1e-12);
        assert_relative_eq!(m.price(), 27.182818284590452, epsilon = 1e-12);
        assert_relative_eq!(t.cash_delta, -271.82818284590452, epsilon = 1e-9);
    }

    #[test]
    fn buy_then_sell_returns_to_start() {
        let mut m = market(10.0, 10.0);
        m.execute(5.0).unwrap();
        m.execute(-5.0).unwrap();
        assert_relative_eq!(m.price(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn relative_change_is_price_independent() {
        let mut a = market(10.0, 7.0);
        let mut b = market(123.0, 7.0);
        let ta = a.execute(3.0).unwrap();
        let tb = b.execute(3.0).unwrap();
        assert_relative_eq!(ta.unit_price / 10.0, tb.unit_price / 123.0, epsilon = 1e-12);
        assert_relative_eq!(ta.unit_price / 10.0, (3.0f64 / 7.0).exp(), epsilon = 1e-12);
    }

    #[test]
    fn implied_load_trivial_cases() {
        let m = market(10.0, 10.0);
        assert_eq!(m.implied_load(), 0.0);

        let mut m = market(10.0, 10.0);
        // push the price to exactly 10 e
        m.execute(10.0).unwrap();
        assert_relative_eq!(m.implied_load(), 10.0, epsilon = 1e-9);
    }

    #[test]
    fn implied_load_telescopes_over_trades() {
        let mut m = market(10.0, 10.0);
        m.execute(3.0).unwrap();
        m.execute(4.0).unwrap();
        m.execute(-2.0).unwrap();
        assert_abs_diff_eq!(m.implied_load(), 5.0, epsilon = 1e-9);
    }

    #[test]
    fn rejects_bad_construction() {
        assert!(MarketState::new(0.0, 1.0).is_err());
        assert!(MarketState::new(-1.0, 1.0).is_err());
        assert!(MarketState::new(10.0, 0.0).is_err());
        assert!(MarketState::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn rejects_non_finite_volume() {
        let mut m = market(10.0, 10.0);
        assert!(matches!(
            m.execute(f64::NAN),
            Err(MarketError::NonFiniteVolume(_))
        ));
        assert!(m.execute(f64::INFINITY).is_err());
    }

    #[test]
    fn reports_range_error_on_overflow_and_underflow() {
        let mut m = market(10.0, 1.0);
        let before = m.price();
        assert!(matches!(
            m.execute(1000.0),
            Err(MarketError::PriceRange { .. })
        ));
        // failed trades leave the quote untouched
        assert_eq!(m.price(), before);
        assert!(matches!(
            m.execute(-10000.0),
            Err(MarketError::PriceRange { .. })
        ));
        assert_eq!(m.price(), before);
    }
}
