#pragma once

// Naive reference implementations used as test oracles. Nothing here calls
// into the library code paths being checked.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

inline double token_f1(const std::string& a, const std::string& b) {
  auto counts = [](const std::string& s) {
    std::map<std::string, int> c;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) {
      for (auto& ch : tok) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      ++c[tok];
    }
    return c;
  };
  const auto ca = counts(a);
  const auto cb = counts(b);
  int na = 0, nb = 0, common = 0;
  for (const auto& [t, k] : ca) na += k;
  for (const auto& [t, k] : cb) nb += k;
  if (na == 0 && nb == 0) return 1.0;
  if (na == 0 || nb == 0) return 0.0;
  for (const auto& [t, k] : ca) {
    if (auto it = cb.find(t); it != cb.end()) common += std::min(k, it->second);
  }
  if (common == 0) return 0.0;
  const double p = static_cast<double>(common) / na;
  const double r = static_cast<double>(common) / nb;
  return 2 * p * r / (p + r);
}

/// Expected utility of every hypothesis, straight from the definition.
inline std::vector<double> expected(const Matrix& m, const std::vector<double>& w, bool exclude_self,
                                    const std::vector<int>* members = nullptr) {
  const std::size_t n = m.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t h = 0; h < n; ++h) {
    double num = 0.0, den = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (exclude_self && y == h) continue;
      if (members && (*members)[y] != (*members)[h]) continue;
      num += w[y] * m[h][y];
      den += w[y];
    }
    out[h] = den > 0 ? num / den : 0.0;
  }
  return out;
}

/// Lowest index among the maxima of `v` restricted to `allowed` (all if empty).
inline std::size_t argmax(const std::vector<double>& v, const std::vector<bool>& allowed = {}) {
  std::size_t best = v.size();
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!allowed.empty() && !allowed[i]) continue;
    if (best == v.size() || v[i] > v[best]) best = i;
  }
  return best;
}

inline std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int less = 0, equal = 0;
    for (double x : v) {
      if (x < v[i]) ++less;
      if (x == v[i]) ++equal;
    }
    r[i] = 1.0 + less + (equal - 1) / 2.0;
  }
  return r;
}

inline std::optional<double> pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= n, mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return sab / std::sqrt(saa) / std::sqrt(sbb);
}

inline std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b) {
  return pearson(ranks(a), ranks(b));
}

struct CoCorc {
  double co = 0.0;
  std::optional<double> corc;
};

/// CO and CORC of standard MBR over labelled spaces, from the definitions.
/// The conditional reference drops self-comparisons; standard MBR keeps them.
inline CoCorc standard_co_corc(const std::vector<Matrix>& matrices, const std::vector<std::vector<std::string>>& labels) {
  double hits = 0.0;
  double rho_sum = 0.0;
  int rho_spaces = 0;
  for (std::size_t s = 0; s < matrices.size(); ++s) {
    const auto& m = matrices[s];
    const auto& lab = labels[s];
    const std::size_t n = m.size();
    const std::vector<double> w(n, 1.0);
    const auto scores = expected(m, w, false);
    const std::size_t pick = argmax(scores);

    std::map<std::string, int> ids;
    std::vector<int> cluster(n);
    for (std::size_t i = 0; i < n; ++i) cluster[i] = ids.try_emplace(lab[i], static_cast<int>(ids.size())).first->second;
    const auto cond = expected(m, w, true, &cluster);

    std::vector<bool> same(n);
    int members = 0;
    for (std::size_t i = 0; i < n; ++i) members += (same[i] = cluster[i] == cluster[pick]) ? 1 : 0;
    if (members >= 2 && argmax(cond, same) == pick) hits += 1.0;

    double sum = 0.0;
    int defined = 0;
    for (const auto& [name, id] : ids) {
      std::vector<double> a, b;
      for (std::size_t i = 0; i < n; ++i) {
        if (cluster[i] == id) a.push_back(scores[i]), b.push_back(cond[i]);
      }
      if (a.size() < 2) continue;
      if (auto rho = spearman(a, b)) sum += *rho, ++defined;
    }
    if (defined > 0) rho_sum += sum / defined, ++rho_spaces;
  }
  CoCorc out;
  out.co = hits / static_cast<double>(matrices.size());
  if (rho_spaces > 0) out.corc = rho_sum / rho_spaces;
  return out;
}

/// E[exp(-(h - Y)^2 / (2 b^2))] for a two-component Gaussian mixture, by
/// composite Simpson quadrature over `intervals` subintervals.
inline double rbf_expectation_quadrature(const double w[2], const double mu[2], const double sd[2], double b, double h,
                                         int intervals = 1'000'000) {
  const double lo = std::min(mu[0] - 12 * sd[0], mu[1] - 12 * sd[1]);
  const double hi = std::max(mu[0] + 12 * sd[0], mu[1] + 12 * sd[1]);
  const double step = (hi - lo) / intervals;
  auto f = [&](double y) {
    double p = 0;
    for (int c = 0; c < 2; ++c) {
      const double z = (y - mu[c]) / sd[c];
      p += w[c] * std::exp(-0.5 * z * z) / (sd[c] * std::sqrt(2 * std::numbers::pi));
    }
    return p * std::exp(-(h - y) * (h - y) / (2 * b * b));
  };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < intervals; ++i) sum += f(lo + i * step) * (i % 2 ? 4.0 : 2.0);
  return sum * step / 3.0;
}

}  // namespace oracle
