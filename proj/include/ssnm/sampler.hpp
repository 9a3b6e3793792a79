#ifndef SSNM_SAMPLER_HPP
#define SSNM_SAMPLER_HPP

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace ssnm {

// Uniform index draws on {0, ..., n-1}. std::uniform_int_distribution is
// implementation defined, so the bounded draw is done here with Lemire's
// multiply-and-reject method on top of std::mt19937_64. The stream of
// indices is then fixed by the seed alone.
class IndexSampler {
 public:
  static constexpr std::string_view algorithm_id = "mt19937_64+lemire-bounded";

  explicit IndexSampler(std::uint64_t seed) : engine_(seed) {}

  std::size_t operator()(std::size_t n) {
    const auto range = static_cast<std::uint64_t>(n);
    unsigned __int128 m = static_cast<unsigned __int128>(engine_()) * range;
    auto low = static_cast<std::uint64_t>(m);
    if (low < range) {
      const std::uint64_t threshold = (0 - range) % range;
      while (low < threshold) {
        m = static_cast<unsigned __int128>(engine_()) * range;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::size_t>(m >> 64);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ssnm

#endif
