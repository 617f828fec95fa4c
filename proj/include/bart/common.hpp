#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bart {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;
using Eigen::VectorXd;
using Eigen::VectorXi;

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Error taxonomy matching the CLI exit codes: config=2, data=3, sampling=4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double logsumexp(const std::vector<double>& v) {
  double mx = kNegInf;
  for (double x : v)
    if (x > mx) mx = x;
  if (!std::isfinite(mx)) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Normalizes log weights to probabilities; all -inf yields an empty result.
inline std::vector<double> softmax(const std::vector<double>& logw) {
  double lse = logsumexp(logw);
  if (!std::isfinite(lse)) return {};
  std::vector<double> out(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) out[i] = std::exp(logw[i] - lse);
  return out;
}

// Shortest round-trip decimal form; used for every number we emit so that
// serialize -> parse -> serialize is byte identical.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  (void)ec;
  return std::string(buf, ptr);
}

inline double parse_double(const std::string& s) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("unparseable number: '" + s + "'");
  return v;
}

}  // namespace bart
