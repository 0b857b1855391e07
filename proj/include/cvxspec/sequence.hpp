#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cvxspec {

/// Which growth condition a sequence entry violates, in checking order.
enum class SequenceCondition {
  StrictlyIncreasing,  // l_k > l_{k-1}
  ExceedsPowerOfTwo,   // l_k > 2^k
  QuarticDominates,    // ((l_k)^2 + l_k) k + 1 < (l_k)^4
  CellsFitInPrevious,  // 2^(-W_{k-1} - 1) > 100 * 2^(-(l_k)^2)
  ProductBound,        // D_1 ... D_{k-1} > 2^(-l_k)
};

const char* condition_text(SequenceCondition c);

struct SequenceCheck {
  bool ok = true;
  std::size_t k = 0;  // 1-based index of the first failing entry
  std::optional<SequenceCondition> condition;

  /// e.g. "l_k > 2^k violated at k=2"; empty when ok.
  std::string message() const;
};

/// Options for validate_sequence.
///
/// Without a Hölder level the interval widths are the h = 1 widths
/// W_k = k((l_k)^2 + l_k), which gives the published conditions verbatim. With
/// h in (1, 2) the conditions on consecutive generations use the widths of the
/// h-level Cantor scheme, W_k = ceil(((l_k)^2 + l_k) / (h - 1)).
struct SequenceOptions {
  std::optional<double> holder_level;
};

/// log2 of the interval width of generation k: w_k = 2^-W.
std::int64_t width_exponent(std::int64_t l, std::size_t k, double h);

SequenceCheck validate_sequence(const std::vector<std::int64_t>& entries, const SequenceOptions& opts = {});

class SequenceError : public std::invalid_argument {
 public:
  explicit SequenceError(SequenceCheck check) : std::invalid_argument(check.message()), check_(std::move(check)) {}
  const SequenceCheck& check() const { return check_; }

 private:
  SequenceCheck check_;
};

/// An admissible scale sequence l_1 < ... < l_K.
class ScaleSequence {
 public:
  ScaleSequence() = default;
  /// Throws SequenceError naming the first violated condition.
  explicit ScaleSequence(std::vector<std::int64_t> entries, const SequenceOptions& opts = {});

  /// Lexicographically smallest admissible sequence of the given depth with
  /// entries <= max_entry. Throws SequenceError when none exists.
  static ScaleSequence smallest(std::size_t depth, const SequenceOptions& opts = {}, std::int64_t max_entry = 64);

  const std::vector<std::int64_t>& entries() const { return entries_; }
  std::size_t depth() const { return entries_.size(); }
  std::int64_t operator[](std::size_t k) const { return entries_.at(k); }

 private:
  std::vector<std::int64_t> entries_;
};

}  // namespace cvxspec
