#pragma once

#include <string>

#include "gtb/common.hpp"

namespace gtb {

enum class Resource : int { kStone = 0, kWood = 1 };
inline constexpr int kNumResources = 2;

inline const char* resource_name(Resource r) {
  return r == Resource::kStone ? "stone" : "wood";
}

inline Resource parse_resource(const std::string& s) {
  if (s == "stone") return Resource::kStone;
  if (s == "wood") return Resource::kWood;
  throw ConfigError("unknown resource: " + s);
}

// Freely spendable holdings of one agent. Escrowed amounts live in the
// order book's ledger, not here, so a wallet is always what the agent may
// still commit.
struct Wallet {
  double coin = 0.0;
  int stone = 0;
  int wood = 0;

  int& units(Resource r) { return r == Resource::kStone ? stone : wood; }
  int units(Resource r) const { return r == Resource::kStone ? stone : wood; }
};

}  // namespace gtb
