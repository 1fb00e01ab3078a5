#include "jacolip/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <tuple>

namespace jacolip {

DenseMatrix DenseMatrix::identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

DenseMatrix DenseMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t r = rows.size();
    std::size_t c = r ? rows.begin()->size() : 0;
    DenseMatrix m(r, c);
    std::size_t i = 0;
    for (const auto& row : rows) {
        if (row.size() != c) throw FatalError("from_rows: ragged initializer");
        std::size_t j = 0;
        for (double v : row) m(i, j++) = v;
        ++i;
    }
    return m;
}

bool DenseMatrix::bit_equal(const DenseMatrix& o) const {
    if (!same_shape(o)) return false;
    return std::memcmp(data_.data(), o.data_.data(), data_.size() * sizeof(double)) == 0;
}

DenseMatrix DenseMatrix::transpose() const {
    DenseMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

SparseMatrix SparseMatrix::from_triplets(
    std::size_t rows, std::size_t cols,
    std::vector<std::tuple<std::size_t, std::size_t, double>> triplets) {
    std::sort(triplets.begin(), triplets.end(),
              [](const auto& a, const auto& b) {
                  return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                                          : std::get<1>(a) < std::get<1>(b);
              });
    SparseMatrix m(rows, cols);
    std::size_t prev_r = rows, prev_c = cols;  // sentinel: no previous entry
    for (const auto& [r, c, v] : triplets) {
        if (r >= rows || c >= cols) throw FatalError("from_triplets: index out of range");
        if (r == prev_r && c == prev_c) {
            m.values_.back() += v;
            continue;
        }
        m.cols_idx_.push_back(c);
        m.values_.push_back(v);
        m.offsets_[r + 1]++;
        prev_r = r;
        prev_c = c;
    }
    for (std::size_t r = 0; r < rows; ++r) m.offsets_[r + 1] += m.offsets_[r];
    return m;
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> t;
    t.reserve(n);
    for (std::size_t i = 0; i < n; ++i) t.emplace_back(i, i, 1.0);
    return from_triplets(n, n, std::move(t));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
    for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
        if (cols_idx_[k] == c) return values_[k];
    return 0.0;
}

DenseMatrix SparseMatrix::densify() const {
    DenseMatrix d(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t k = offsets_[r]; k < offsets_[r + 1]; ++k)
            d(r, cols_idx_[k]) = values_[k];
    return d;
}

std::uint64_t Rng::mix(std::uint64_t z) {
    z = (z ^ (z >> 33)) * 0xff51afd7ed558ccdULL;
    z = (z ^ (z >> 33)) * 0xc4ceb9fe1a85ec53ULL;
    return z ^ (z >> 33);
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw FatalError("matmul: shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ") * (" + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
    DenseMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double* orow = out.row_ptr(i);
        for (std::size_t k = 0; k < a.cols(); ++k) {
            double av = a(i, k);
            if (av == 0.0) continue;
            const double* brow = b.row_ptr(k);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
    if (a.cols() != b.rows())
        throw FatalError("spmm: shape mismatch (" + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ") * (" + std::to_string(b.rows()) + "x" +
                         std::to_string(b.cols()) + ")");
    DenseMatrix out(a.rows(), b.cols());
    const auto& off = a.offsets();
    const auto& ci = a.col_indices();
    const auto& v = a.values();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        double* orow = out.row_ptr(r);
        for (std::size_t k = off[r]; k < off[r + 1]; ++k) {
            double av = v[k];
            const double* brow = b.row_ptr(ci[k]);
            for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

std::vector<double> row_l2_norms(const DenseMatrix& m) {
    std::vector<double> out(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        double s = 0.0;
        const double* row = m.row_ptr(r);
        for (std::size_t c = 0; c < m.cols(); ++c) s += row[c] * row[c];
        out[r] = std::sqrt(s);
    }
    return out;
}

double norm_inf2(const DenseMatrix& m) {
    if (m.empty()) throw FatalError("norm_inf2: empty matrix");
    double best = 0.0;
    for (double v : row_l2_norms(m)) best = std::max(best, v);
    return best;
}

double frobenius(const DenseMatrix& m) {
    double s = 0.0;
    for (double v : m.data()) s += v * v;
    return std::sqrt(s);
}

DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw FatalError("add: shape mismatch");
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] += b.data()[i];
    return out;
}

DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b) {
    if (!a.same_shape(b)) throw FatalError("sub: shape mismatch");
    DenseMatrix out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= b.data()[i];
    return out;
}

DenseMatrix scale(const DenseMatrix& a, double c) {
    DenseMatrix out = a;
    for (double& v : out.data()) v *= c;
    return out;
}

void add_in_place(DenseMatrix& a, const DenseMatrix& b, double c) {
    if (!a.same_shape(b)) throw FatalError("add_in_place: shape mismatch");
    for (std::size_t i = 0; i < a.size(); ++i) a.data()[i] += c * b.data()[i];
}

double sym_eig_max(const DenseMatrix& s) {
    if (s.rows() != s.cols()) throw FatalError("sym_eig_max: not square");
    std::size_t n = s.rows();
    DenseMatrix a = s;
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double sn = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
        }
    }
    double best = a(0, 0);
    for (std::size_t i = 1; i < n; ++i) best = std::max(best, a(i, i));
    return best;
}

double spectral_norm(const DenseMatrix& j) {
    // Work with the smaller Gram matrix.
    const DenseMatrix jt = j.transpose();
    DenseMatrix gram = (j.rows() <= j.cols()) ? matmul(j, jt) : matmul(jt, j);
    double lam = sym_eig_max(gram);
    return std::sqrt(std::max(0.0, lam));
}

void check_finite(const DenseMatrix& m, const std::string& what) {
    for (double v : m.data())
        if (!std::isfinite(v)) throw FatalError(what + ": non-finite entry");
}

}  // namespace jacolip
