#include "gtb/market.hpp"

#include <algorithm>

namespace gtb::market {

OrderBook::OrderBook(int num_agents) : num_agents_(num_agents), escrow_(num_agents) {
  if (num_agents < 1) throw ContractViolation("OrderBook: num_agents < 1");
}

int OrderBook::open_orders(int agent, Resource resource) const {
  int n = 0;
  for (int side = 0; side < 2; ++side) {
    for (const Order& o : open_[side][static_cast<int>(resource)]) {
      if (o.agent == agent) ++n;
    }
  }
  return n;
}

const std::vector<Order>& OrderBook::resting(Side side, Resource resource) const {
  return open_[static_cast<int>(side)][static_cast<int>(resource)];
}

bool OrderBook::can_submit(int agent, Side side, Resource resource, int price,
                           const Wallet& wallet) const {
  if (price < 0 || price > kMaxPrice) return false;
  if (open_orders(agent, resource) >= kMaxOpenPerResource) return false;
  if (side == Side::kBid) return wallet.coin >= static_cast<double>(price);
  return wallet.units(resource) >= 1;
}

Order* OrderBook::find_match(Side incoming_side, Resource resource, int price,
                             Rng& rng) {
  // Counterparty side: a bid matches resting asks priced <= bid, an ask
  // matches resting bids priced >= ask. Best price first, then earliest
  // placed_at; remaining ties resolved uniformly at random.
  const Side counter = incoming_side == Side::kBid ? Side::kAsk : Side::kBid;
  std::vector<Order>& book = open_[static_cast<int>(counter)][static_cast<int>(resource)];
  Order* best = nullptr;
  int tied = 0;
  for (Order& o : book) {
    bool crosses = incoming_side == Side::kBid ? (o.price <= price) : (o.price >= price);
    if (!crosses) continue;
    if (best == nullptr) {
      best = &o;
      tied = 1;
      continue;
    }
    bool better;
    if (o.price != best->price) {
      better = incoming_side == Side::kBid ? (o.price < best->price)
                                           : (o.price > best->price);
    } else if (o.placed_at != best->placed_at) {
      better = o.placed_at < best->placed_at;
    } else {
      // Same price and timestep: reservoir-sample among the tied orders so
      // each is equally likely regardless of book position.
      ++tied;
      better = uniform_below(rng, static_cast<std::uint64_t>(tied)) == 0;
      if (better) best = &o;
      continue;
    }
    if (better) {
      best = &o;
      tied = 1;
    }
  }
  return best;
}

void OrderBook::remove_order(Side side, Resource resource, std::int64_t id) {
  std::vector<Order>& book = open_[static_cast<int>(side)][static_cast<int>(resource)];
  for (std::size_t i = 0; i < book.size(); ++i) {
    if (book[i].id == id) {
      book.erase(book.begin() + static_cast<std::ptrdiff_t>(i));
      return;
    }
  }
  throw ContractViolation("OrderBook: removing unknown order");
}

SubmitResult OrderBook::submit_order(int agent, Side side, Resource resource,
                                     int price, int t, std::span<Wallet> wallets,
                                     Rng& rng) {
  SubmitResult result;
  if (agent < 0 || agent >= num_agents_) throw ContractViolation("submit: bad agent");
  if (price < 0 || price > kMaxPrice) {
    result.error = SubmitError::kBadPrice;
    return result;
  }
  if (open_orders(agent, resource) >= kMaxOpenPerResource) {
    result.error = SubmitError::kOpenOrderLimit;
    return result;
  }
  Wallet& w = wallets[agent];
  if (side == Side::kBid ? (w.coin < static_cast<double>(price))
                         : (w.units(resource) < 1)) {
    result.error = SubmitError::kEscrowInsufficient;
    return result;
  }

  // Escrow first; matching then settles out of escrow on both sides.
  Escrow& esc = escrow_[agent];
  if (side == Side::kBid) {
    w.coin -= price;
    esc.coin += price;
  } else {
    w.units(resource) -= 1;
    esc.units[static_cast<int>(resource)] += 1;
  }

  const Order incoming{next_id_++, agent, side,  resource,
                       price,      t,     t + kOrderLifetime};

  Order* counter = find_match(side, resource, price, rng);
  if (counter == nullptr) {
    open_[static_cast<int>(side)][static_cast<int>(resource)].push_back(incoming);
    return result;
  }

  // The resting order was placed first, so the trade executes at its price.
  const Order resting_order = *counter;
  const int exec_price = resting_order.price;
  const Order& bid = side == Side::kBid ? incoming : resting_order;
  const Order& ask = side == Side::kBid ? resting_order : incoming;

  Escrow& bid_esc = escrow_[bid.agent];
  Escrow& ask_esc = escrow_[ask.agent];
  // Buyer escrowed its own bid price; anything above the execution price is
  // returned to the buyer's wallet.
  bid_esc.coin -= bid.price;
  wallets[bid.agent].coin += bid.price - exec_price;
  wallets[ask.agent].coin += exec_price;
  ask_esc.units[static_cast<int>(resource)] -= 1;
  wallets[bid.agent].units(resource) += 1;

  remove_order(resting_order.side, resource, resting_order.id);
  result.trade = Trade{t,         resource,  exec_price, bid.agent,
                       ask.agent, bid.id,    ask.id};
  trades_.push_back(*result.trade);
  price_sum_[static_cast<int>(resource)] += exec_price;
  trade_n_[static_cast<int>(resource)] += 1;
  level_trades_[static_cast<int>(resource)][exec_price] += 1;
  return result;
}

int OrderBook::expire_orders(int t, std::span<Wallet> wallets) {
  int expired = 0;
  for (int side = 0; side < 2; ++side) {
    for (int r = 0; r < kNumResources; ++r) {
      std::vector<Order>& book = open_[side][r];
      for (std::size_t i = 0; i < book.size();) {
        if (book[i].expires_at <= t) {
          const Order& o = book[i];
          Escrow& esc = escrow_[o.agent];
          if (o.side == Side::kBid) {
            esc.coin -= o.price;
            wallets[o.agent].coin += o.price;
          } else {
            esc.units[r] -= 1;
            wallets[o.agent].units(o.resource) += 1;
          }
          book.erase(book.begin() + static_cast<std::ptrdiff_t>(i));
          ++expired;
        } else {
          ++i;
        }
      }
    }
  }
  return expired;
}

OrderBook::LevelCounts OrderBook::level_counts(Resource resource,
                                               std::optional<int> for_agent) const {
  LevelCounts c;
  for (const Order& o : open_[static_cast<int>(Side::kBid)][static_cast<int>(resource)]) {
    const bool own = for_agent && o.agent == *for_agent;
    (own ? c.own_bids : c.other_bids)[o.price] += 1;
  }
  for (const Order& o : open_[static_cast<int>(Side::kAsk)][static_cast<int>(resource)]) {
    const bool own = for_agent && o.agent == *for_agent;
    (own ? c.own_asks : c.other_asks)[o.price] += 1;
  }
  return c;
}

double OrderBook::average_trade_price(Resource resource) const {
  const int r = static_cast<int>(resource);
  return trade_n_[r] > 0 ? price_sum_[r] / trade_n_[r] : 0.0;
}

std::array<int, kNumPriceLevels> OrderBook::trade_counts(Resource resource) const {
  return level_trades_[static_cast<int>(resource)];
}

MarketSummary market_observation(const OrderBook& book, std::optional<int> for_agent) {
  MarketSummary s;
  for (int r = 0; r < kNumResources; ++r) {
    const auto res = static_cast<Resource>(r);
    s.res[r].levels = book.level_counts(res, for_agent);
    s.res[r].avg_trade_price = book.average_trade_price(res);
    s.res[r].trade_counts = book.trade_counts(res);
  }
  return s;
}

}  // namespace gtb::market
