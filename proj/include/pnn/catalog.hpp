// Known dimensions and membership facts for small architectures, used as a
// hermetic oracle for the computed results.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pnn/network.hpp"

namespace pnn {

enum class FactSource { table1, ah, typical_rank, width1 };

std::string to_string(FactSource s);

enum class Confidence { proven, remark };

struct KnownFact {
  Architecture arch;
  std::optional<std::uint64_t> dim;
  std::uint64_t edim = 0;
  std::uint64_t ambient = 0;
  std::optional<bool> filling;
  /// M = V; nullopt when not recorded.
  std::optional<bool> manifold_equals_variety;
  Confidence confidence = Confidence::proven;
  FactSource source = FactSource::table1;
  /// Architecture the fact was looked up under after the width-1 rewrite.
  std::optional<Architecture> rewritten_from;

  [[nodiscard]] std::optional<std::int64_t> defect() const;
};

/// The 27 shallow architectures with widths in {1, 2, 3} and r = 2.
const std::vector<KnownFact>& table1();

/// min{d0 d1, binom(d0 + r - 1, r)} corrected for the exceptional cases:
/// r = 2 with 2 <= d1 < d0 (rank <= d1 symmetric matrices), (5,7):3,
/// (3,5):4, (4,9):4, (5,14):4.
std::uint64_t ah_expected_dim(int d0, int d1, int r);
bool ah_exceptional(int d0, int d1, int r);

/// (d0, ..., 1, d_{i+1}, ..., d_L) with d_i = 1 for some 0 < i < L becomes
/// (d0, ..., 1, 1, ..., 1, d_L). Returns the input when no hidden layer has
/// width 1 or nothing changes.
Architecture width1_normalize(const Architecture& arch);

/// The 27 shallow rows first, then the AH theorem for single-output shallow networks,
/// then the width-1 rule (dim of the prefix up to the first width-1 hidden
/// layer plus d_L - 1, when that prefix has a known dimension).
std::optional<KnownFact> lookup(const Architecture& arch);

enum class ClosureStatus { strict, equal, unknown };

std::string to_string(ClosureStatus s);

struct TypicalRankFact {
  bool filling = false;
  /// Euclidean closure of the manifold against the whole space.
  ClosureStatus closure = ClosureStatus::unknown;
  /// The printed chain of closures for this (d0, r).
  std::string chain;
};

/// Filling facts for (2,d1,1):3,4,5, (3,d1,1):4,5 and (4,d1,1):3 coming from
/// typical real symmetric ranks. nullopt outside those families or below the
/// filling threshold.
std::optional<TypicalRankFact> typical_rank_filling(int d0, int d1, int r);

/// Non-increasing widths with d_L > 1: expected dimension is conjectured,
/// never asserted by the catalog.
bool conjecture_nonincreasing_applies(const Architecture& arch);

}  // namespace pnn
