#pragma once

#include <array>
#include <stdexcept>
#include <string>

namespace eprsim {

enum class ErrorCode {
  Domain = 1,
  SingularContext,
  InadmissiblePhases,
  EmptyContext,
  InfeasibleHiddenAllocation,
  Parse,
};

class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

private:
  ErrorCode code_;
};

struct DomainError : Error {
  explicit DomainError(const std::string& what) : Error(ErrorCode::Domain, what) {}
};

// A transition probability under the renormalization root is 0 or 1, so the
// entanglement coefficient is undefined; the message names the vanishing factor.
struct SingularContext : Error {
  explicit SingularContext(const std::string& what) : Error(ErrorCode::SingularContext, what) {}
};

// Phase assignment produced an entry outside [0,1] or broke normalization.
struct InadmissiblePhases : Error {
  InadmissiblePhases(const std::string& what, int i, int j, double residual)
      : Error(ErrorCode::InadmissiblePhases, what), i(i), j(j), residual(residual) {}
  int i, j;         // offending entry; (0,0) means the normalization check
  double residual;  // distance from the violated bound
};

struct EmptyContext : Error {
  explicit EmptyContext(const std::string& what) : Error(ErrorCode::EmptyContext, what) {}
};

struct InfeasibleHiddenAllocation : Error {
  explicit InfeasibleHiddenAllocation(const std::string& what)
      : Error(ErrorCode::InfeasibleHiddenAllocation, what) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& what) : Error(ErrorCode::Parse, what) {}
};

// Outcome index convention, fixed globally: index 1 -> value +1, index 2 -> -1.
constexpr int outcome_value(int index) { return index == 1 ? +1 : -1; }

constexpr bool valid_index(int index) { return index == 1 || index == 2; }

// Joint outcome (b = b_i, b' = b'_j).
struct OutcomePair {
  int i, j;
  OutcomePair(int i, int j) : i(i), j(j) {
    if (!valid_index(i) || !valid_index(j)) throw DomainError("outcome indices must be 1 or 2");
  }
  bool operator==(const OutcomePair&) const = default;
};

// Joint setting outcome (a = a_k, a' = a'_l).
struct SettingPair {
  int k, l;
  SettingPair(int k, int l) : k(k), l(l) {
    if (!valid_index(k) || !valid_index(l)) throw DomainError("setting indices must be 1 or 2");
  }
  bool operator==(const SettingPair&) const = default;
};

// 2x2 grid of reals addressed with 1-based pair indices, row-major (11,12,21,22).
struct Grid2x2 {
  std::array<double, 4> v{};

  static constexpr std::size_t slot(int i, int j) {
    return static_cast<std::size_t>((i - 1) * 2 + (j - 1));
  }
  static Grid2x2 of(double a11, double a12, double a21, double a22) {
    return Grid2x2{{a11, a12, a21, a22}};
  }

  double& operator()(int i, int j) { return v[slot(i, j)]; }
  double operator()(int i, int j) const { return v[slot(i, j)]; }

  double sum() const { return v[0] + v[1] + v[2] + v[3]; }
  bool operator==(const Grid2x2&) const = default;
};

// All four 1-based index pairs in row-major order, for range-for loops.
inline constexpr std::array<std::pair<int, int>, 4> kIndexPairs{
    {{1, 1}, {1, 2}, {2, 1}, {2, 2}}};

}  // namespace eprsim
