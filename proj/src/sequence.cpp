#include "cvxspec/sequence.hpp"

#include <cmath>

#include "cvxspec/dyadic.hpp"

namespace cvxspec {

const char* condition_text(SequenceCondition c) {
  switch (c) {
    case SequenceCondition::StrictlyIncreasing:
      return "l_k > l_{k-1}";
    case SequenceCondition::ExceedsPowerOfTwo:
      return "l_k > 2^k";
    case SequenceCondition::QuarticDominates:
      return "((l_k)^2 + l_k)k + 1 < (l_k)^4";
    case SequenceCondition::CellsFitInPrevious:
      return "2^{-W_{k-1}-1} > 100*2^{-(l_k)^2}";
    case SequenceCondition::ProductBound:
      return "D_1...D_{k-1} > 2^{-l_k}";
  }
  return "?";
}

std::string SequenceCheck::message() const {
  if (ok) return {};
  return std::string(condition_text(*condition)) + " violated at k=" + std::to_string(k);
}

std::int64_t width_exponent(std::int64_t l, std::size_t k, double h) {
  const std::int64_t base = l * l + l;
  if (h == 1.0) return static_cast<std::int64_t>(k) * base;
  if (!(h > 1.0 && h < 2.0)) throw std::domain_error("Hölder level must lie in [1,2)");
  // Smallest n with n (h-1) >= base, decided exactly.
  const Dyadic gap = Dyadic::from_double(h - 1.0);
  const Dyadic target(base);
  auto n = static_cast<std::int64_t>(std::ceil(static_cast<double>(base) / (h - 1.0)));
  while (Dyadic(n) * gap < target) ++n;
  while (n > 0 && Dyadic(n - 1) * gap >= target) --n;
  return n;
}

namespace {

double level_or_one(const SequenceOptions& opts) { return opts.holder_level.value_or(1.0); }

// Checks entry k (1-based) given the earlier entries.
std::optional<SequenceCondition> check_entry(const std::vector<std::int64_t>& e, std::size_t k, double h) {
  const __int128 l = e[k - 1];
  if (l <= 0) return SequenceCondition::ExceedsPowerOfTwo;
  if (k >= 2 && l <= e[k - 2]) return SequenceCondition::StrictlyIncreasing;
  if (k >= 126 || l <= (static_cast<__int128>(1) << k)) return SequenceCondition::ExceedsPowerOfTwo;
  if (l > 1'000'000) return SequenceCondition::QuarticDominates;  // beyond exact-int range; never needed
  if ((l * l + l) * static_cast<__int128>(k) + 1 >= l * l * l * l) return SequenceCondition::QuarticDominates;
  if (k >= 2) {
    const std::int64_t prev_w = width_exponent(e[k - 2], k - 1, h);
    // 2^(-prev_w-1) > 100 * 2^(-l^2)  <=>  l^2 - prev_w - 1 >= 7
    if (l * l - prev_w - 1 < 7) return SequenceCondition::CellsFitInPrevious;
    // D_i = 2^(l_i^2 - W_i - 2); need sum_{i<k} log2 D_i > -l_k.
    __int128 log_product = 0;
    for (std::size_t i = 1; i < k; ++i) {
      const __int128 li = e[i - 1];
      log_product += li * li - width_exponent(e[i - 1], i, h) - 2;
    }
    if (log_product <= -l) return SequenceCondition::ProductBound;
  }
  return std::nullopt;
}

}  // namespace

SequenceCheck validate_sequence(const std::vector<std::int64_t>& entries, const SequenceOptions& opts) {
  const double h = level_or_one(opts);
  for (std::size_t k = 1; k <= entries.size(); ++k) {
    if (auto bad = check_entry(entries, k, h)) return SequenceCheck{false, k, bad};
  }
  return {};
}

ScaleSequence::ScaleSequence(std::vector<std::int64_t> entries, const SequenceOptions& opts) {
  auto check = validate_sequence(entries, opts);
  if (!check.ok) throw SequenceError(std::move(check));
  entries_ = std::move(entries);
}

ScaleSequence ScaleSequence::smallest(std::size_t depth, const SequenceOptions& opts, std::int64_t max_entry) {
  // Later conditions only get harder when earlier entries grow, so the
  // greedy choice of the smallest feasible entry is lexicographically minimal.
  const double h = level_or_one(opts);
  std::vector<std::int64_t> e;
  for (std::size_t k = 1; k <= depth; ++k) {
    std::optional<SequenceCondition> last;
    bool found = false;
    for (std::int64_t l = e.empty() ? 1 : e.back() + 1; l <= max_entry; ++l) {
      e.push_back(l);
      last = check_entry(e, k, h);
      if (!last) {
        found = true;
        break;
      }
      e.pop_back();
    }
    if (!found) {
      throw SequenceError(SequenceCheck{false, k, last.value_or(SequenceCondition::ExceedsPowerOfTwo)});
    }
  }
  ScaleSequence out;
  out.entries_ = std::move(e);
  return out;
}

}  // namespace cvxspec
