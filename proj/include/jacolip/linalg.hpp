#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace jacolip {

// Fatal contract violations (shape mismatches, bad files, ...) throw this.
struct FatalError : std::runtime_error {
    explicit FatalError(const std::string& msg) : std::runtime_error(msg) {}
};

// Dense row-major matrix of doubles. Immutable-by-convention once handed
// to another module; all kernels use a fixed left-to-right accumulation
// order so identical inputs give bit-identical outputs.
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static DenseMatrix identity(std::size_t n);
    static DenseMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row_ptr(std::size_t r) { return data_.data() + r * cols_; }
    const double* row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const DenseMatrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
    bool bit_equal(const DenseMatrix& o) const;

    DenseMatrix transpose() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// CSR sparse matrix. Column indices strictly increase within a row.
class SparseMatrix {
public:
    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), offsets_(rows + 1, 0) {}

    // Builds from (row, col, value) triplets; duplicates are summed.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<std::tuple<std::size_t, std::size_t, double>> triplets);
    static SparseMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nnz() const { return values_.size(); }

    const std::vector<std::size_t>& offsets() const { return offsets_; }
    const std::vector<std::size_t>& col_indices() const { return cols_idx_; }
    const std::vector<double>& values() const { return values_; }

    double at(std::size_t r, std::size_t c) const;
    DenseMatrix densify() const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> cols_idx_;
    std::vector<double> values_;
};

// Splittable counter-based PRNG (splitmix64 core). Identical seed gives
// an identical stream on every platform; split() derives an independent
// stream from a tag without disturbing the parent.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ 0x5851f42d4c957f2dULL)) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    // Standard normal via Box-Muller; the spare is cached so draws come in
    // a fixed order regardless of platform.
    double normal();

    Rng split(std::uint64_t tag) const { return Rng(mix(state_ ^ mix(tag + 0x632be59bd9b4e019ULL))); }

private:
    static std::uint64_t mix(std::uint64_t z);
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);

// Max over rows of the row l2-norm.
double norm_inf2(const DenseMatrix& m);
std::vector<double> row_l2_norms(const DenseMatrix& m);
double frobenius(const DenseMatrix& m);

// Elementwise helpers; shapes must match.
DenseMatrix add(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix sub(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix scale(const DenseMatrix& a, double c);
void add_in_place(DenseMatrix& a, const DenseMatrix& b, double c = 1.0);

// Largest eigenvalue of a small symmetric matrix (cyclic Jacobi).
double sym_eig_max(const DenseMatrix& s);
// Spectral norm sqrt(lambda_max(J J^T)).
double spectral_norm(const DenseMatrix& j);

void check_finite(const DenseMatrix& m, const std::string& what);

}  // namespace jacolip
