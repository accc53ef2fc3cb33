#include "dysflm/training.hpp"

#include <algorithm>
#include <numeric>

namespace dysflm {

std::vector<std::vector<std::size_t>> make_batch_order(std::size_t n,
                                                       std::size_t micro_batch,
                                                       std::uint64_t seed,
                                                       int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng = make_rng(seed, "shuffle", static_cast<std::uint64_t>(epoch));
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t i = 0; i < n; i += micro_batch) {
    std::vector<std::size_t> b(order.begin() + static_cast<long>(i),
                               order.begin() +
                                   static_cast<long>(std::min(n, i + micro_batch)));
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace dysflm
