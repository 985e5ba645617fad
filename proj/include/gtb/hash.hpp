#pragma once

#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>

namespace gtb {

// FNV-1a 64-bit. Used for config fingerprints and world-state digests in
// episode logs; stability across runs matters, cryptographic strength does not.
class Fnv1a {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ULL;
    }
  }
  void update(std::string_view s) { update(s.data(), s.size()); }
  void update(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    update(&bits, sizeof(bits));
  }
  void update(std::uint64_t v) { update(&v, sizeof(v)); }
  void update(std::int64_t v) { update(&v, sizeof(v)); }
  void update(int v) { update(static_cast<std::int64_t>(v)); }

  std::uint64_t digest() const { return h_; }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

inline std::uint64_t fnv1a(std::string_view s) {
  Fnv1a h;
  h.update(s);
  return h.digest();
}

std::string hex64(std::uint64_t v);

}  // namespace gtb
