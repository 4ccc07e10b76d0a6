#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "seqcd/error.hpp"
#include "seqcd/graph.hpp"
#include "seqcd/random.hpp"

namespace seqcd {

struct EigenPair {
  double eigenvalue = 0.0;
  Eigen::VectorXd eigenvector;  // unit norm
  double residual = 0.0;        // ||M u - lambda u||_2
  std::size_t iterations = 0;
};

enum class EigenMethod {
  Lanczos,  // full-reorthogonalized Krylov iteration (default)
  Power,    // shifted power iteration
};

struct SpectralOptions {
  double tol = 1e-8;
  std::size_t max_iter = 0;  // 0: 10 n + 1000
  EigenMethod method = EigenMethod::Lanczos;
};

/// Gains at or below this are treated as zero (indivisible).
inline constexpr double kGainEpsilon = 1e-12;

namespace detail {

inline void check_square_symmetric(const Eigen::MatrixXd& m) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::NotSquare, "matrix is not square");
  if (m.rows() == 0) throw Error(ErrorCode::InvalidArgument, "matrix is empty");
}

inline std::size_t default_max_iter(std::size_t n, std::size_t requested) {
  return requested != 0 ? requested : 10 * n + 1000;
}

/// Entries in [0.5, 1.5) hashed from a running counter, so start vectors are
/// deterministic but carry no structure a graph could be orthogonal to.
inline Eigen::VectorXd hashed_vector(Eigen::Index n, std::uint64_t& counter) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    v(i) = static_cast<double>(splitmix64(0x5eed5eedULL + counter++) >> 11) * 0x1.0p-53 + 0.5;
  return v;
}

}  // namespace detail

/// Algebraically largest eigenpair by power iteration on M + sigma I, where
/// sigma is the Gershgorin bound on |lambda|, so every shifted eigenvalue is
/// non-negative. The start vector is hashed, which keeps runs
/// bit-reproducible.
inline EigenPair leading_eigenpair(const Eigen::MatrixXd& m, double tol = 1e-8, std::size_t max_iter = 0) {
  detail::check_square_symmetric(m);
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  const auto n = m.rows();
  max_iter = detail::default_max_iter(static_cast<std::size_t>(n), max_iter);

  const double shift = m.cwiseAbs().rowwise().sum().maxCoeff();
  std::uint64_t counter = 0;
  Eigen::VectorXd x = detail::hashed_vector(n, counter).normalized();

  double lambda = 0.0;
  double residual = std::numeric_limits<double>::infinity();
  for (std::size_t it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd mx = m * x;
    lambda = x.dot(mx);
    residual = (mx - lambda * x).norm();
    if (residual <= tol) return {lambda, x, residual, it};
    x = mx + shift * x;
    const double norm = x.norm();
    if (norm == 0.0) break;
    x /= norm;
  }
  throw NoConvergenceError("power iteration stopped after " + std::to_string(max_iter) +
                               " iterations, residual " + std::to_string(residual),
                           residual);
}

/// Same contract as leading_eigenpair, computed by Lanczos with full
/// reorthogonalization. The Krylov dimension is capped at n, where the
/// tridiagonal projection is exact.
inline EigenPair lanczos_leading_eigenpair(const Eigen::MatrixXd& m, double tol = 1e-8) {
  detail::check_square_symmetric(m);
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  const auto n = m.rows();
  if (n == 1) return {m(0, 0), Eigen::VectorXd::Ones(1), 0.0, 1};

  Eigen::MatrixXd q(n, n);
  // The first hashed vector starts the iteration. Later ones restart it,
  // orthogonal to the basis so far, when a Krylov space closes early.
  std::uint64_t draws = 0;
  auto fresh_vector = [&](Eigen::Index dim_so_far) {
    for (;;) {
      Eigen::VectorXd v = detail::hashed_vector(n, draws);
      for (int pass = 0; pass < 2 && dim_so_far > 0; ++pass) {
        const auto basis = q.leftCols(dim_so_far);
        v -= basis * (basis.transpose() * v);
      }
      const double norm = v.norm();
      if (norm > 1e-8) return Eigen::VectorXd(v / norm);
    }
  };

  std::vector<double> alpha;
  std::vector<double> beta;  // beta[j] couples q_j and q_{j+1}
  alpha.reserve(static_cast<std::size_t>(n));
  beta.reserve(static_cast<std::size_t>(n));

  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  Eigen::Index dim = 0;
  double ritz = 0.0;
  Eigen::VectorXd ritz_coeffs;

  auto solve_projection = [&](Eigen::Index k) {
    Eigen::VectorXd diag(k);
    Eigen::VectorXd sub(std::max<Eigen::Index>(k - 1, 0));
    for (Eigen::Index i = 0; i < k; ++i) diag(i) = alpha[static_cast<std::size_t>(i)];
    for (Eigen::Index i = 0; i + 1 < k; ++i) sub(i) = beta[static_cast<std::size_t>(i)];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    ritz = es.eigenvalues()(k - 1);
    ritz_coeffs = es.eigenvectors().col(k - 1);
  };

  q.col(0) = fresh_vector(0);
  for (Eigen::Index j = 0; j < n; ++j) {
    Eigen::VectorXd w = m * q.col(j);
    const double a = q.col(j).dot(w);
    alpha.push_back(a);
    w -= a * q.col(j);
    if (j > 0) w -= beta[static_cast<std::size_t>(j - 1)] * q.col(j - 1);
    for (int pass = 0; pass < 2; ++pass) {
      const auto basis = q.leftCols(j + 1);
      w -= basis * (basis.transpose() * w);
    }
    const double b = w.norm();
    dim = j + 1;

    const bool breakdown = b <= 1e-12 * scale;
    const bool full = dim == n;
    if (full) {
      solve_projection(dim);
      break;
    }
    if (breakdown) {
      beta.push_back(0.0);
      q.col(j + 1) = fresh_vector(dim);
      continue;
    }
    if (dim % 5 == 0) {
      solve_projection(dim);
      if (b * std::abs(ritz_coeffs(dim - 1)) <= 0.5 * tol) break;
    }
    beta.push_back(b);
    q.col(j + 1) = w / b;
  }

  EigenPair out;
  out.eigenvalue = ritz;
  out.eigenvector = q.leftCols(dim) * ritz_coeffs;
  out.eigenvector.normalize();
  out.residual = (m * out.eigenvector - ritz * out.eigenvector).norm();
  out.iterations = static_cast<std::size_t>(dim);
  return out;
}

inline EigenPair leading_eigenpair(const Eigen::MatrixXd& m, const SpectralOptions& opt) {
  if (opt.method == EigenMethod::Power) return leading_eigenpair(m, opt.tol, opt.max_iter);
  return lanczos_leading_eigenpair(m, opt.tol);
}

struct Bisection {
  SignVector signs;          // s[0] == +1
  double score = 0.0;        // s^T B s / 4m after refinement
  double eigen_score = 0.0;  // score of the raw eigenvector-sign split
  double eigenvalue = 0.0;
  bool divisible = false;    // score > 0
  // Best refined split with both sides non-empty, kept even when its gain is
  // not positive. Empty when lambda_1 <= tol or the community is a singleton.
  SignVector proper_signs;
  double proper_score = 0.0;
};

namespace detail {

/// Greedy single-vertex moves followed by Kernighan-Lin passes. A greedy step
/// flips the vertex whose move raises s^T B s the most, until no move helps.
/// A pass then moves every vertex once, best move first even when it lowers
/// the score, and keeps the best prefix; passes repeat while a prefix gains.
/// Flips never empty a side that started non-empty. Returns the number of
/// flips kept.
inline std::size_t refine_signs(const Eigen::MatrixXd& b, SignVector& s) {
  const auto n = b.rows();
  Eigen::VectorXd sv(n);
  Eigen::Index plus = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    sv(i) = s[static_cast<std::size_t>(i)];
    plus += sv(i) > 0 ? 1 : 0;
  }
  const bool proper = plus > 0 && plus < n;
  Eigen::VectorXd r = b * sv;
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double threshold = 1e-12 * scale;

  auto blocked = [&](Eigen::Index i) { return proper && (sv(i) > 0 ? plus == 1 : plus == n - 1); };
  auto gain_of = [&](Eigen::Index i) { return -4.0 * sv(i) * (r(i) - b(i, i) * sv(i)); };
  auto flip = [&](Eigen::Index i) {
    plus += sv(i) > 0 ? -1 : 1;
    sv(i) = -sv(i);
    r += 2.0 * sv(i) * b.col(i);
  };

  std::size_t flips = 0;
  const auto limit = static_cast<std::size_t>(n) * static_cast<std::size_t>(n) + 1;
  while (flips < limit) {
    Eigen::Index best = -1;
    double best_gain = threshold;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (blocked(i)) continue;
      const double g = gain_of(i);
      if (g > best_gain) {
        best_gain = g;
        best = i;
      }
    }
    if (best < 0) break;
    flip(best);
    ++flips;
  }

  std::vector<Eigen::Index> order;
  std::vector<char> moved(static_cast<std::size_t>(n));
  for (Eigen::Index pass = 0; pass < n; ++pass) {
    order.clear();
    std::fill(moved.begin(), moved.end(), 0);
    double total = 0.0, best_total = threshold;
    std::size_t best_len = 0;
    for (Eigen::Index step = 0; step < n; ++step) {
      Eigen::Index pick = -1;
      double pick_gain = -std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < n; ++i) {
        if (moved[static_cast<std::size_t>(i)] || blocked(i)) continue;
        const double g = gain_of(i);
        if (g > pick_gain) {
          pick_gain = g;
          pick = i;
        }
      }
      if (pick < 0) break;
      flip(pick);
      moved[static_cast<std::size_t>(pick)] = 1;
      order.push_back(pick);
      total += pick_gain;
      if (total > best_total) {
        best_total = total;
        best_len = order.size();
      }
    }
    for (std::size_t k = order.size(); k > best_len; --k) flip(order[k - 1]);
    if (best_len == 0) break;
    flips += best_len;
  }
  for (Eigen::Index i = 0; i < n; ++i) s[static_cast<std::size_t>(i)] = sv(i) > 0 ? 1 : -1;
  return flips;
}

inline void normalize_orientation(SignVector& s) {
  if (!s.empty() && s[0] < 0)
    for (int& x : s) x = -x;
}

/// Best split among the n - 1 thresholds of the sorted eigenvector: vertices
/// with the largest entries go to the +1 side one at a time.
inline SignVector sweep_split(const Eigen::MatrixXd& b, const Eigen::VectorXd& u) {
  const auto n = b.rows();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index x, Eigen::Index y) { return u(x) > u(y); });

  Eigen::VectorXd sv = -Eigen::VectorXd::Ones(n);
  Eigen::VectorXd r = b * sv;
  double q = 0.0, best_q = -std::numeric_limits<double>::infinity();
  std::size_t best_len = 1;
  for (std::size_t k = 0; k + 1 < order.size(); ++k) {
    const Eigen::Index i = order[k];
    q += -4.0 * sv(i) * (r(i) - b(i, i) * sv(i));
    sv(i) = 1.0;
    r += 2.0 * b.col(i);
    if (q > best_q) {
      best_q = q;
      best_len = k + 1;
    }
  }
  SignVector s(static_cast<std::size_t>(n), -1);
  for (std::size_t k = 0; k < best_len; ++k) s[static_cast<std::size_t>(order[k])] = 1;
  return s;
}

}  // namespace detail

/// Leading-eigenvector split of a (generalized) modularity matrix. The sign
/// split and the best sweep cut are both refined, and the better one is kept. When lambda_1 <= tol or the
/// refined gain is not positive, `signs` is all-ones with score 0; the refined
/// split itself stays available as `proper_signs` whenever lambda_1 > tol.
inline Bisection bisect(const ModularityMatrix& bm, const SpectralOptions& opt = {}) {
  const std::size_t n = bm.size();
  if (n == 0) throw Error(ErrorCode::EmptySubset, "cannot bisect an empty community");
  Bisection out;
  out.signs.assign(n, 1);
  if (n == 1) return out;

  const EigenPair ep = leading_eigenpair(bm.values, opt);
  out.eigenvalue = ep.eigenvalue;
  if (ep.eigenvalue <= opt.tol) return out;

  SignVector s(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = ep.eigenvector(static_cast<Eigen::Index>(i));
    s[i] = (std::abs(x) < 1e-12 || x > 0.0) ? 1 : -1;
  }
  out.eigen_score = detail::quadratic_form(bm.values, s) / (2.0 * bm.two_m);
  detail::refine_signs(bm.values, s);
  double score = detail::quadratic_form(bm.values, s) / (2.0 * bm.two_m);
  SignVector swept = detail::sweep_split(bm.values, ep.eigenvector);
  detail::refine_signs(bm.values, swept);
  const double swept_score = detail::quadratic_form(bm.values, swept) / (2.0 * bm.two_m);
  if (swept_score > score + kGainEpsilon) {
    s = std::move(swept);
    score = swept_score;
  }
  detail::normalize_orientation(s);
  if (std::find(s.begin(), s.end(), -1) != s.end()) {
    out.proper_signs = s;
    out.proper_score = score;
  }
  if (score <= kGainEpsilon) return out;

  out.signs = std::move(s);
  out.score = score;
  out.divisible = true;
  return out;
}

/// Exact maximizer of s^T B s / 4m over all 2^(n-1) splits with s[0] = +1,
/// enumerated in Gray-code order. Test oracle; n <= 20.
inline Bisection brute_force_bisect(const ModularityMatrix& bm) {
  const std::size_t n = bm.size();
  if (n == 0) throw Error(ErrorCode::EmptySubset, "cannot bisect an empty community");
  if (n > 20) throw Error(ErrorCode::TooLarge, "brute force is limited to 20 vertices, got " + std::to_string(n));

  const Eigen::MatrixXd& b = bm.values;
  const auto nn = static_cast<Eigen::Index>(n);
  Eigen::VectorXd sv = Eigen::VectorXd::Ones(nn);
  Eigen::VectorXd r = b * sv;
  double q = sv.dot(r);

  Bisection best;
  best.signs.assign(n, 1);
  best.score = q / (2.0 * bm.two_m);
  double best_q = q;
  Eigen::VectorXd best_sv = sv;

  const std::uint64_t total = std::uint64_t{1} << (n - 1);
  for (std::uint64_t code = 1; code < total; ++code) {
    // Gray code: flip the lowest set bit position, shifted past vertex 0.
    const auto bit = static_cast<Eigen::Index>(__builtin_ctzll(code)) + 1;
    q += -4.0 * sv(bit) * (r(bit) - b(bit, bit) * sv(bit));
    sv(bit) = -sv(bit);
    r += 2.0 * sv(bit) * b.col(bit);
    if (q > best_q) {
      best_q = q;
      best_sv = sv;
    }
  }
  for (std::size_t i = 0; i < n; ++i) best.signs[i] = best_sv(static_cast<Eigen::Index>(i)) > 0 ? 1 : -1;
  best.score = detail::quadratic_form(b, best.signs) / (2.0 * bm.two_m);
  best.eigen_score = best.score;
  best.divisible = best.score > kGainEpsilon;
  return best;
}

}  // namespace seqcd
