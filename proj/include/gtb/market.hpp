#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gtb/resources.hpp"
#include "gtb/rng.hpp"

namespace gtb::market {

inline constexpr int kMaxPrice = 10;          // price levels 0..10
inline constexpr int kNumPriceLevels = kMaxPrice + 1;
inline constexpr int kOrderLifetime = 50;     // steps until expiry
inline constexpr int kMaxOpenPerResource = 5; // per agent per resource

enum class Side : int { kBid = 0, kAsk = 1 };

struct Order {
  std::int64_t id;  // submission sequence number, unique per book
  int agent;
  Side side;
  Resource resource;
  int price;
  int placed_at;
  int expires_at;
};

struct Trade {
  int t;
  Resource resource;
  int price;
  int buyer;
  int seller;
  std::int64_t bid_id;
  std::int64_t ask_id;
};

enum class SubmitError {
  kNone,
  kBadPrice,
  kEscrowInsufficient,
  kOpenOrderLimit,
};

struct SubmitResult {
  SubmitError error = SubmitError::kNone;
  std::optional<Trade> trade;
  bool ok() const { return error == SubmitError::kNone; }
};

// Coin escrowed for open bids and units escrowed for open asks, per agent.
struct Escrow {
  double coin = 0.0;
  std::array<int, kNumResources> units{};
};

// Continuous double auction over the two resources. Each order is for one
// unit. The book owns the escrow ledger and moves value between wallets and
// escrow itself, so wallet + escrow totals are conserved by construction on
// every path (submit, match, expire).
class OrderBook {
 public:
  explicit OrderBook(int num_agents);

  // Escrows from wallets[agent] and either executes one trade against the
  // best resting counterparty or rests the order. A trade settles both
  // sides' wallets immediately at the resting order's price; a bid that
  // escrowed more than the execution price is refunded the difference.
  // Errors indicate the caller failed to pre-check affordability or limits.
  SubmitResult submit_order(int agent, Side side, Resource resource, int price,
                            int t, std::span<Wallet> wallets, Rng& rng);

  // Removes orders with expires_at <= t, refunding escrow in full.
  // Returns the number of orders expired.
  int expire_orders(int t, std::span<Wallet> wallets);

  bool can_submit(int agent, Side side, Resource resource, int price,
                  const Wallet& wallet) const;

  int open_orders(int agent, Resource resource) const;
  const std::vector<Order>& resting(Side side, Resource resource) const;
  const Escrow& escrow(int agent) const { return escrow_[agent]; }
  const std::vector<Trade>& trades() const { return trades_; }

  // Open bid/ask counts per price level for one resource; `for_agent`
  // splits the counts into that agent's own orders vs everyone else's.
  struct LevelCounts {
    std::array<int, kNumPriceLevels> own_bids{};
    std::array<int, kNumPriceLevels> own_asks{};
    std::array<int, kNumPriceLevels> other_bids{};
    std::array<int, kNumPriceLevels> other_asks{};
  };
  LevelCounts level_counts(Resource resource, std::optional<int> for_agent) const;

  // Historical mean trade price for the resource, 0 until the first trade.
  double average_trade_price(Resource resource) const;
  std::array<int, kNumPriceLevels> trade_counts(Resource resource) const;

 private:
  Order* find_match(Side incoming_side, Resource resource, int price, Rng& rng);
  void remove_order(Side side, Resource resource, std::int64_t id);

  int num_agents_;
  std::int64_t next_id_ = 0;
  // Flat per-(side, resource) vectors; sizes stay under 5 * N so linear
  // scans beat any ordered structure here.
  std::array<std::array<std::vector<Order>, kNumResources>, 2> open_;
  std::vector<Escrow> escrow_;
  std::vector<Trade> trades_;
  // Running stats so observations never rescan the trade history.
  std::array<double, kNumResources> price_sum_{};
  std::array<int, kNumResources> trade_n_{};
  std::array<std::array<int, kNumPriceLevels>, kNumResources> level_trades_{};
};

// Flattened, fixed-size observation features of the book. Counts are raw;
// normalization happens at observation assembly.
struct MarketSummary {
  struct PerResource {
    OrderBook::LevelCounts levels;
    double avg_trade_price = 0.0;
    std::array<int, kNumPriceLevels> trade_counts{};
  };
  std::array<PerResource, kNumResources> res;
};

MarketSummary market_observation(const OrderBook& book, std::optional<int> for_agent);

}  // namespace gtb::market
