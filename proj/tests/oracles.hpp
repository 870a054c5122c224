// Independent scalar oracles for the derived expected values. These are
// deliberately naive transcriptions working on plain nested vectors, kept
// separate from the library code paths they check.
#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // [collaborator][element]

inline Vec mean(const Mat& sets) {
  Vec out(sets[0].size(), 0.0);
  for (const auto& s : sets) {
    for (std::size_t j = 0; j < s.size(); ++j) {
      out[j] += s[j];
    }
  }
  for (auto& v : out) {
    v /= static_cast<double>(sets.size());
  }
  return out;
}

inline double norm_l2(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    acc += (a[j] - b[j]) * (a[j] - b[j]);
  }
  return std::sqrt(acc);
}

inline double norm_l1(const Vec& a, const Vec& b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    acc += std::fabs(a[j] - b[j]);
  }
  return acc;
}

inline Vec axpy(const Vec& weights, const Mat& sets) {
  Vec out(sets[0].size(), 0.0);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] += weights[i] * sets[i][j];
    }
  }
  return out;
}

// Eqs. 2-3: inverse distance to the mean, normalized; uniform when every
// distance is zero.
inline Vec similarity(const Mat& params, double eps, bool l1 = false) {
  const std::size_t k = params.size();
  Vec center = mean(params);
  Vec dist(k);
  double dist_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    dist[c] = l1 ? norm_l1(params[c], center) : norm_l2(params[c], center);
    dist_sum += dist[c];
  }
  Vec u(k);
  if (dist_sum == 0.0) {
    for (auto& x : u) x = 1.0 / static_cast<double>(k);
    return u;
  }
  double sim_sum = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    u[c] = dist_sum / (dist[c] + eps);
    sim_sum += u[c];
  }
  for (auto& x : u) x /= sim_sum;
  return u;
}

// Eq. 4.
inline Vec sample_share(const std::vector<long long>& counts) {
  double total = 0.0;
  for (auto n : counts) total += static_cast<double>(n);
  Vec v(counts.size());
  for (std::size_t c = 0; c < counts.size(); ++c) {
    v[c] = static_cast<double>(counts[c]) / total;
  }
  return v;
}

// Eq. 5.
inline Vec combine(const Vec& u, const Vec& v) {
  double denom = 0.0;
  for (std::size_t c = 0; c < u.size(); ++c) denom += u[c] + v[c];
  Vec w(u.size());
  for (std::size_t c = 0; c < u.size(); ++c) w[c] = (u[c] + v[c]) / denom;
  return w;
}

// Eq. 6 under the scalar-drift reading: divide by (mean drift + eps), then
// renormalize. Returns {pre_norm, final}.
inline std::pair<Vec, Vec> regularize(const Vec& w, const Mat& prev,
                                      const Mat& cur, double eps,
                                      bool l1 = false) {
  double drift = 0.0;
  for (std::size_t c = 0; c < prev.size(); ++c) {
    drift += l1 ? norm_l1(prev[c], cur[c]) : norm_l2(prev[c], cur[c]);
  }
  drift /= static_cast<double>(prev.size());
  Vec pre(w.size());
  double sum = 0.0;
  for (std::size_t c = 0; c < w.size(); ++c) {
    pre[c] = w[c] / (drift + eps);
    sum += pre[c];
  }
  Vec fin(w.size());
  for (std::size_t c = 0; c < w.size(); ++c) fin[c] = pre[c] / sum;
  return {pre, fin};
}

struct AggregateOut {
  Vec master;
  Vec final_weights;
};

// Full Algorithm-1 transcription on one scope unit. When round > onset the
// regularizer runs (prev required); the master is the convex combination of
// the inputs under the final weights.
inline AggregateOut aggregate_unit(const Mat& params,
                                   const std::vector<long long>& counts,
                                   const Mat& prev, int round, int onset,
                                   double eps, bool l1 = false) {
  Vec u = similarity(params, eps, l1);
  Vec v = sample_share(counts);
  Vec w = combine(u, v);
  Vec fin = w;
  if (round > onset) {
    fin = regularize(w, prev, params, eps, l1).second;
  }
  return {axpy(fin, params), fin};
}

// Trapezoid over the normalized x axis.
inline double trapezoid_auc(const Vec& xs, const Vec& ys) {
  if (xs.size() == 1) return ys[0];
  const double span = xs.back() - xs.front();
  double auc = 0.0;
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    auc += (xs[i + 1] - xs[i]) / span * 0.5 * (ys[i] + ys[i + 1]);
  }
  return auc;
}

// Central finite differences of a scalar function of a parameter vector.
inline Vec finite_difference(const std::function<double(const Vec&)>& f,
                             Vec at, double h = 1e-5) {
  Vec grad(at.size());
  for (std::size_t j = 0; j < at.size(); ++j) {
    const double keep = at[j];
    at[j] = keep + h;
    const double fp = f(at);
    at[j] = keep - h;
    const double fm = f(at);
    at[j] = keep;
    grad[j] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace oracle
