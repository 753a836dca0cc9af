#include "newsfactor/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "newsfactor/error.hpp"

namespace newsfactor::linalg {
namespace {

constexpr double kPivotTolerance = 1e-12;

void require_square(const Matrix& m, std::string_view name) {
  if (m.rows() != m.cols() || m.rows() < 1) {
    std::ostringstream msg;
    msg << name << " must be square and non-empty, got " << m.rows() << "x"
        << m.cols();
    throw DimensionError(msg.str());
  }
}

// Zero everything below the first subdiagonal.
void zero_below_subdiagonal(Matrix& t) {
  const Eigen::Index n = t.rows();
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = j + 2; i < n; ++i) t(i, j) = 0.0;
  }
}

}  // namespace

void require_finite(const Matrix& m, std::string_view name) {
  if (!m.allFinite()) {
    throw DataError(std::string(name) + " contains non-finite entries");
  }
}

SchurFactors hessenberg_reduce(const Matrix& a) {
  require_square(a, "hessenberg_reduce input");
  require_finite(a, "hessenberg_reduce input");
  const Eigen::Index n = a.rows();
  Matrix h = a;
  Matrix q = Matrix::Identity(n, n);

  for (Eigen::Index k = 0; k + 2 < n; ++k) {
    const Eigen::Index len = n - k - 1;
    Vector v = h.col(k).tail(len);
    const double tail_norm = v.tail(len - 1).norm();
    if (tail_norm == 0.0) continue;  // column already in Hessenberg shape

    const double alpha = (v(0) >= 0.0 ? -1.0 : 1.0) * v.norm();
    v(0) -= alpha;
    v.normalize();

    // h <- P h P, q <- q P with P = I - 2 v v'
    auto rows = h.bottomRows(len);
    rows.noalias() -= 2.0 * v * (v.transpose() * rows);
    auto cols = h.rightCols(len);
    cols.noalias() -= 2.0 * (cols * v) * v.transpose();
    auto qcols = q.rightCols(len);
    qcols.noalias() -= 2.0 * (qcols * v) * v.transpose();

    h(k + 1, k) = alpha;
    h.col(k).tail(len - 1).setZero();
  }
  zero_below_subdiagonal(h);
  return {std::move(q), std::move(h)};
}

SchurFactors real_schur(const Matrix& b) {
  SchurFactors hf = hessenberg_reduce(b);
  Matrix& h = hf.t;
  Matrix& v = hf.q;
  const int nn = static_cast<int>(h.rows());
  const double eps = std::numeric_limits<double>::epsilon();

  // Subdiagonal entries that close a 2x2 block for a complex pair.
  std::vector<bool> complex_block(static_cast<std::size_t>(nn), false);

  double norm = 0.0;
  for (int i = 0; i < nn; ++i) {
    for (int j = std::max(i - 1, 0); j < nn; ++j) norm += std::abs(h(i, j));
  }

  const long max_sweeps = 30L * nn;
  long sweeps = 0;
  int n = nn - 1;
  int iter = 0;
  double exshift = 0.0;
  double p = 0, q = 0, r = 0, s = 0, z = 0, w = 0, x = 0, y = 0;

  while (n >= 0) {
    // Find the start of the unreduced trailing block.
    int l = n;
    while (l > 0) {
      s = std::abs(h(l - 1, l - 1)) + std::abs(h(l, l));
      if (s == 0.0) s = norm;
      if (std::abs(h(l, l - 1)) < eps * s) {
        h(l, l - 1) = 0.0;
        break;
      }
      --l;
    }

    if (l == n) {
      // One real eigenvalue deflated.
      h(n, n) += exshift;
      --n;
      iter = 0;
    } else if (l == n - 1) {
      // 2x2 block deflated.
      w = h(n, n - 1) * h(n - 1, n);
      p = (h(n - 1, n - 1) - h(n, n)) / 2.0;
      q = p * p + w;
      z = std::sqrt(std::abs(q));
      h(n, n) += exshift;
      h(n - 1, n - 1) += exshift;

      if (q >= 0) {
        // Real pair: rotate the block to upper triangular.
        z = p >= 0 ? p + z : p - z;
        x = h(n, n - 1);
        s = std::abs(x) + std::abs(z);
        p = x / s;
        q = z / s;
        r = std::sqrt(p * p + q * q);
        p /= r;
        q /= r;
        for (int j = n - 1; j < nn; ++j) {
          z = h(n - 1, j);
          h(n - 1, j) = q * z + p * h(n, j);
          h(n, j) = q * h(n, j) - p * z;
        }
        for (int i = 0; i <= n; ++i) {
          z = h(i, n - 1);
          h(i, n - 1) = q * z + p * h(i, n);
          h(i, n) = q * h(i, n) - p * z;
        }
        for (int i = 0; i < nn; ++i) {
          z = v(i, n - 1);
          v(i, n - 1) = q * z + p * v(i, n);
          v(i, n) = q * v(i, n) - p * z;
        }
        h(n, n - 1) = 0.0;
      } else {
        complex_block[static_cast<std::size_t>(n)] = true;
      }
      n -= 2;
      iter = 0;
    } else {
      if (++sweeps > max_sweeps) {
        std::ostringstream msg;
        msg << "real_schur: QR iteration did not converge within " << max_sweeps
            << " sweeps; " << (nn - 1 - n) << " of " << nn
            << " eigenvalues deflated";
        throw ConvergenceError(msg.str());
      }

      // Shift from the trailing 2x2 block.
      x = h(n, n);
      y = h(n - 1, n - 1);
      w = h(n, n - 1) * h(n - 1, n);

      // Exceptional shifts break cycles.
      if (iter == 10) {
        exshift += x;
        for (int i = 0; i <= n; ++i) h(i, i) -= x;
        s = std::abs(h(n, n - 1)) + std::abs(h(n - 1, n - 2));
        x = y = 0.75 * s;
        w = -0.4375 * s * s;
      }
      if (iter == 30) {
        s = (y - x) / 2.0;
        s = s * s + w;
        if (s > 0) {
          s = std::sqrt(s);
          if (y < x) s = -s;
          s = x - w / ((y - x) / 2.0 + s);
          for (int i = 0; i <= n; ++i) h(i, i) -= s;
          exshift += s;
          x = y = w = 0.964;
        }
      }
      ++iter;

      // Look for two consecutive small subdiagonal elements.
      int m = n - 2;
      while (m >= l) {
        z = h(m, m);
        r = x - z;
        s = y - z;
        p = (r * s - w) / h(m + 1, m) + h(m, m + 1);
        q = h(m + 1, m + 1) - z - r - s;
        r = h(m + 2, m + 1);
        s = std::abs(p) + std::abs(q) + std::abs(r);
        p /= s;
        q /= s;
        r /= s;
        if (m == l) break;
        if (std::abs(h(m, m - 1)) * (std::abs(q) + std::abs(r)) <
            eps * (std::abs(p) * (std::abs(h(m - 1, m - 1)) + std::abs(z) +
                                  std::abs(h(m + 1, m + 1))))) {
          break;
        }
        --m;
      }
      for (int i = m + 2; i <= n; ++i) {
        h(i, i - 2) = 0.0;
        if (i > m + 2) h(i, i - 3) = 0.0;
      }

      // Double-shift QR step on rows l..n, columns m..n.
      for (int k = m; k <= n - 1; ++k) {
        const bool notlast = (k != n - 1);
        if (k != m) {
          p = h(k, k - 1);
          q = h(k + 1, k - 1);
          r = notlast ? h(k + 2, k - 1) : 0.0;
          x = std::abs(p) + std::abs(q) + std::abs(r);
          if (x == 0.0) continue;
          p /= x;
          q /= x;
          r /= x;
        }
        s = std::sqrt(p * p + q * q + r * r);
        if (p < 0) s = -s;
        if (s == 0) continue;

        if (k != m) {
          h(k, k - 1) = -s * x;
        } else if (l != m) {
          h(k, k - 1) = -h(k, k - 1);
        }
        p += s;
        x = p / s;
        y = q / s;
        z = r / s;
        q /= p;
        r /= p;

        for (int j = k; j < nn; ++j) {
          p = h(k, j) + q * h(k + 1, j);
          if (notlast) {
            p += r * h(k + 2, j);
            h(k + 2, j) -= p * z;
          }
          h(k, j) -= p * x;
          h(k + 1, j) -= p * y;
        }
        for (int i = 0; i <= std::min(n, k + 3); ++i) {
          p = x * h(i, k) + y * h(i, k + 1);
          if (notlast) {
            p += z * h(i, k + 2);
            h(i, k + 2) -= p * r;
          }
          h(i, k) -= p;
          h(i, k + 1) -= p * q;
        }
        for (int i = 0; i < nn; ++i) {
          p = x * v(i, k) + y * v(i, k + 1);
          if (notlast) {
            p += z * v(i, k + 2);
            v(i, k + 2) -= p * r;
          }
          v(i, k) -= p;
          v(i, k + 1) -= p * q;
        }
      }
    }
  }

  zero_below_subdiagonal(h);
  for (int i = 1; i < nn; ++i) {
    if (!complex_block[static_cast<std::size_t>(i)]) h(i, i - 1) = 0.0;
  }
  return hf;
}

SchurFactors sylvester_schur(const Matrix& b) {
  return real_schur(b.transpose());
}

Vector gauss_solve(Matrix m, Vector rhs, std::string_view context) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n || rhs.size() != n) {
    throw DimensionError(std::string(context) + ": non-conformable system");
  }
  Vector row_scale = m.cwiseAbs().rowwise().maxCoeff();

  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    m.col(k).tail(n - k).cwiseAbs().maxCoeff(&piv);
    piv += k;
    if (piv != k) {
      m.row(k).swap(m.row(piv));
      std::swap(rhs(k), rhs(piv));
      std::swap(row_scale(k), row_scale(piv));
    }
    const double pivot = m(k, k);
    if (!(std::abs(pivot) >= kPivotTolerance * row_scale(k)) || pivot == 0.0) {
      std::ostringstream msg;
      msg << context << ": singular pivot " << pivot << " at elimination step "
          << k;
      throw SingularityError(msg.str());
    }
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double factor = m(i, k) / pivot;
      if (factor == 0.0) continue;
      m.row(i).tail(n - k) -= factor * m.row(k).tail(n - k);
      rhs(i) -= factor * rhs(k);
    }
  }
  for (Eigen::Index k = n - 1; k >= 0; --k) {
    const double acc = m.row(k).tail(n - k - 1).dot(rhs.tail(n - k - 1));
    rhs(k) = (rhs(k) - acc) / m(k, k);
  }
  return rhs;
}

Matrix back_substitute(const Matrix& h, const Matrix& s, const Matrix& f) {
  const Eigen::Index d = h.rows();
  const Eigen::Index ns = s.rows();
  if (h.cols() != d || s.cols() != ns || f.rows() != d || f.cols() != ns ||
      d < 1 || ns < 1) {
    throw DimensionError("back_substitute: non-conformable H, S, F");
  }
  const Matrix eye = Matrix::Identity(d, d);
  Matrix y = Matrix::Zero(d, ns);

  Eigen::Index k = ns - 1;
  while (k >= 0) {
    const Eigen::Index done = ns - k - 1;  // resolved columns right of k
    if (k > 0 && s(k, k - 1) != 0.0) {
      // Columns k-1 and k are coupled through a 2x2 block.
      Vector acc_hi = Vector::Zero(d);
      Vector acc_lo = Vector::Zero(d);
      if (done > 0) {
        acc_hi = y.rightCols(done) * s.row(k - 1).tail(done).transpose();
        acc_lo = y.rightCols(done) * s.row(k).tail(done).transpose();
      }
      Vector rhs(2 * d);
      rhs.head(d) = f.col(k - 1) - h * acc_hi;
      rhs.tail(d) = f.col(k) - h * acc_lo;

      Matrix block(2 * d, 2 * d);
      block.topLeftCorner(d, d) = s(k - 1, k - 1) * h + eye;
      block.topRightCorner(d, d) = s(k - 1, k) * h;
      block.bottomLeftCorner(d, d) = s(k, k - 1) * h;
      block.bottomRightCorner(d, d) = s(k, k) * h + eye;

      std::ostringstream ctx;
      ctx << "back_substitute: 2x2 block at columns " << (k - 1) << "," << k
          << " has an eigenvalue product of -1";
      const Vector sol = gauss_solve(std::move(block), std::move(rhs), ctx.str());
      y.col(k - 1) = sol.head(d);
      y.col(k) = sol.tail(d);
      k -= 2;
    } else {
      Vector rhs = f.col(k);
      if (done > 0) {
        rhs.noalias() -= h * (y.rightCols(done) * s.row(k).tail(done).transpose());
      }
      std::ostringstream ctx;
      ctx << "back_substitute: column " << k << " (s_kk = " << s(k, k)
          << ") has an eigenvalue product lambda(A) * s_kk of -1";
      y.col(k) = gauss_solve(s(k, k) * h + eye, std::move(rhs), ctx.str());
      k -= 1;
    }
  }
  return y;
}

Matrix solve_sylvester(const SylvesterProblem& p) {
  require_square(p.a, "Sylvester coefficient a");
  require_square(p.b, "Sylvester coefficient b");
  if (p.c.rows() != p.a.rows() || p.c.cols() != p.b.rows()) {
    std::ostringstream msg;
    msg << "Sylvester right-hand side must be " << p.a.rows() << "x"
        << p.b.rows() << ", got " << p.c.rows() << "x" << p.c.cols();
    throw DimensionError(msg.str());
  }
  require_finite(p.c, "Sylvester right-hand side");

  const SchurFactors ha = hessenberg_reduce(p.a);
  std::shared_ptr<const SchurFactors> sb = p.b_schur;
  if (!sb) {
    sb = std::make_shared<const SchurFactors>(sylvester_schur(p.b));
  } else if (sb->t.rows() != p.b.rows() || sb->q.rows() != p.b.rows()) {
    throw DimensionError("precomputed Schur factors do not match b");
  }

  const Matrix f = ha.q.transpose() * p.c * sb->q;
  const Matrix y = back_substitute(ha.t, sb->t, f);
  return ha.q * y * sb->q.transpose();
}

Matrix kronecker_oracle(const SylvesterProblem& p) {
  require_square(p.a, "Sylvester coefficient a");
  require_square(p.b, "Sylvester coefficient b");
  const Eigen::Index d = p.a.rows();
  const Eigen::Index s = p.b.rows();
  if (p.c.rows() != d || p.c.cols() != s) {
    throw DimensionError("kronecker_oracle: right-hand side shape mismatch");
  }
  if (d * s > kMaxOracleUnknowns) {
    throw DimensionError("kronecker_oracle: d*s exceeds the dense oracle limit");
  }

  const Eigen::Index ds = d * s;
  Matrix k = Matrix::Identity(ds, ds);
  for (Eigen::Index j = 0; j < s; ++j) {
    for (Eigen::Index l = 0; l < s; ++l) {
      k.block(j * d, l * d, d, d) += p.b(l, j) * p.a;
    }
  }
  const Eigen::FullPivLU<Matrix> lu(k);
  if (!lu.isInvertible()) {
    throw SingularityError("kronecker_oracle: (B' kron A + I) is singular");
  }
  const Vector vec_c = Eigen::Map<const Vector>(p.c.data(), ds);
  const Vector vec_x = lu.solve(vec_c);
  return Eigen::Map<const Matrix>(vec_x.data(), d, s);
}

}  // namespace newsfactor::linalg
