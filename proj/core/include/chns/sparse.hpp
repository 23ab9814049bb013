#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace chns {

struct Triplet {
    int row = 0;
    int col = 0;
    double value = 0.0;
};

/// Compressed-row sparse matrix. Column indices are strictly increasing within
/// each row and duplicates are summed on construction.
class SparseMat {
public:
    SparseMat() = default;
    SparseMat(int rows, int cols) : rows_(rows), cols_(cols), row_ptr_(rows + 1, 0) {}

    static SparseMat from_triplets(int rows, int cols, std::vector<Triplet> entries);
    static SparseMat identity(int n);
    static SparseMat diagonal(std::span<const double> d);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t nnz() const { return vals_.size(); }

    std::span<const int> row_offsets() const { return row_ptr_; }
    std::span<const int> col_indices() const { return col_idx_; }
    std::span<const double> values() const { return vals_; }
    std::span<double> values() { return vals_; }

    double coeff(int r, int c) const;

    void multiply(std::span<const double> x, std::span<double> y) const;  // y = A x
    std::vector<double> multiply(std::span<const double> x) const;
    /// y += alpha * A x
    void multiply_add(std::span<const double> x, std::span<double> y, double alpha = 1.0) const;

    SparseMat transposed() const;
    SparseMat scaled(double s) const;
    std::vector<double> diagonal_values() const;
    std::vector<double> row_sums() const;

    /// alpha*A + beta*B with merged sparsity patterns.
    static SparseMat axpby(double alpha, const SparseMat& a, double beta, const SparseMat& b);
    static SparseMat matmul(const SparseMat& a, const SparseMat& b);

    SparseMat block(int row_begin, int row_end, int col_begin, int col_end) const;

    /// Zero all entries in rows/columns flagged by mask (size rows()); when
    /// unit_diagonal is set a 1 is placed on the masked diagonal. Square only.
    SparseMat eliminate(std::span<const std::uint8_t> mask, bool unit_diagonal) const;
    /// Zero entries of masked rows (mask size rows()).
    SparseMat zero_rows(std::span<const std::uint8_t> mask) const;
    /// Zero entries of masked columns (mask size cols()).
    SparseMat zero_cols(std::span<const std::uint8_t> mask) const;

    /// Drop stored entries with |value| <= threshold.
    SparseMat pruned(double threshold = 0.0) const;

    std::vector<double> to_dense() const;  // row-major rows() x cols()

    double max_abs() const;

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> row_ptr_;
    std::vector<int> col_idx_;
    std::vector<double> vals_;
};

}  // namespace chns
