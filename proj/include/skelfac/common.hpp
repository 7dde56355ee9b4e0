#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace skelfac {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IdList = std::vector<Index>;

/// Error type for all user-facing failures (bad inputs, singular pivots,
/// violated structural invariants).  Internal logic errors use assertions.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

/// Deterministic 64-bit mix, used to derive independent substream seeds
/// from a single user-provided seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline Vector gather(const Vector& x, const IdList& ids) {
  Vector out(static_cast<Index>(ids.size()));
  for (std::size_t k = 0; k < ids.size(); ++k) out[static_cast<Index>(k)] = x[ids[k]];
  return out;
}

inline void scatter(Vector& x, const IdList& ids, const Vector& v) {
  for (std::size_t k = 0; k < ids.size(); ++k) x[ids[k]] = v[static_cast<Index>(k)];
}

inline void scatter_add(Vector& x, const IdList& ids, const Vector& v) {
  for (std::size_t k = 0; k < ids.size(); ++k) x[ids[k]] += v[static_cast<Index>(k)];
}

}  // namespace skelfac
