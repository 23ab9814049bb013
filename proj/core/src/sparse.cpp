#include "chns/sparse.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <stdexcept>

namespace chns {

SparseMat SparseMat::from_triplets(int rows, int cols, std::vector<Triplet> entries) {
    SparseMat m(rows, cols);
    std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
        return a.row != b.row ? a.row < b.row : a.col < b.col;
    });

    m.col_idx_.reserve(entries.size());
    m.vals_.reserve(entries.size());
    for (std::size_t k = 0; k < entries.size();) {
        const int r = entries[k].row;
        const int c = entries[k].col;
        assert(r >= 0 && r < rows && c >= 0 && c < cols);
        double v = 0.0;
        while (k < entries.size() && entries[k].row == r && entries[k].col == c) {
            v += entries[k].value;
            ++k;
        }
        m.row_ptr_[r + 1]++;
        m.col_idx_.push_back(c);
        m.vals_.push_back(v);
    }
    for (int r = 0; r < rows; ++r) m.row_ptr_[r + 1] += m.row_ptr_[r];
    return m;
}

SparseMat SparseMat::identity(int n) {
    SparseMat m(n, n);
    m.col_idx_.resize(n);
    m.vals_.assign(n, 1.0);
    for (int i = 0; i < n; ++i) {
        m.col_idx_[i] = i;
        m.row_ptr_[i + 1] = i + 1;
    }
    return m;
}

SparseMat SparseMat::diagonal(std::span<const double> d) {
    const int n = static_cast<int>(d.size());
    SparseMat m = identity(n);
    for (int i = 0; i < n; ++i) m.vals_[i] = d[i];
    return m;
}

double SparseMat::coeff(int r, int c) const {
    for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
        if (col_idx_[k] == c) return vals_[k];
    return 0.0;
}

void SparseMat::multiply(std::span<const double> x, std::span<double> y) const {
    assert(static_cast<int>(x.size()) == cols_ && static_cast<int>(y.size()) == rows_);
    for (int r = 0; r < rows_; ++r) {
        double acc = 0.0;
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += vals_[k] * x[col_idx_[k]];
        y[r] = acc;
    }
}

std::vector<double> SparseMat::multiply(std::span<const double> x) const {
    std::vector<double> y(rows_);
    multiply(x, y);
    return y;
}

void SparseMat::multiply_add(std::span<const double> x, std::span<double> y, double alpha) const {
    assert(static_cast<int>(x.size()) == cols_ && static_cast<int>(y.size()) == rows_);
    for (int r = 0; r < rows_; ++r) {
        double acc = 0.0;
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) acc += vals_[k] * x[col_idx_[k]];
        y[r] += alpha * acc;
    }
}

SparseMat SparseMat::transposed() const {
    SparseMat t(cols_, rows_);
    t.col_idx_.resize(nnz());
    t.vals_.resize(nnz());
    std::vector<int> count(cols_, 0);
    for (int c : col_idx_) count[c]++;
    for (int c = 0; c < cols_; ++c) t.row_ptr_[c + 1] = t.row_ptr_[c] + count[c];
    std::vector<int> next(t.row_ptr_.begin(), t.row_ptr_.end() - 1);
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const int pos = next[col_idx_[k]]++;
            t.col_idx_[pos] = r;
            t.vals_[pos] = vals_[k];
        }
    }
    return t;
}

SparseMat SparseMat::scaled(double s) const {
    SparseMat m = *this;
    for (double& v : m.vals_) v *= s;
    return m;
}

std::vector<double> SparseMat::diagonal_values() const {
    std::vector<double> d(rows_, 0.0);
    for (int r = 0; r < std::min(rows_, cols_); ++r) d[r] = coeff(r, r);
    return d;
}

std::vector<double> SparseMat::row_sums() const {
    std::vector<double> s(rows_, 0.0);
    for (int r = 0; r < rows_; ++r)
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) s[r] += vals_[k];
    return s;
}

SparseMat SparseMat::axpby(double alpha, const SparseMat& a, double beta, const SparseMat& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
        throw std::invalid_argument("SparseMat::axpby: dimension mismatch");
    SparseMat m(a.rows_, a.cols_);
    m.col_idx_.reserve(a.nnz() + b.nnz());
    m.vals_.reserve(a.nnz() + b.nnz());
    for (int r = 0; r < a.rows_; ++r) {
        int ka = a.row_ptr_[r], kb = b.row_ptr_[r];
        const int ea = a.row_ptr_[r + 1], eb = b.row_ptr_[r + 1];
        while (ka < ea || kb < eb) {
            int c;
            double v;
            if (kb >= eb || (ka < ea && a.col_idx_[ka] < b.col_idx_[kb])) {
                c = a.col_idx_[ka];
                v = alpha * a.vals_[ka++];
            } else if (ka >= ea || b.col_idx_[kb] < a.col_idx_[ka]) {
                c = b.col_idx_[kb];
                v = beta * b.vals_[kb++];
            } else {
                c = a.col_idx_[ka];
                v = alpha * a.vals_[ka++] + beta * b.vals_[kb++];
            }
            m.col_idx_.push_back(c);
            m.vals_.push_back(v);
        }
        m.row_ptr_[r + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
}

SparseMat SparseMat::matmul(const SparseMat& a, const SparseMat& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("SparseMat::matmul: dimension mismatch");
    SparseMat m(a.rows_, b.cols_);
    std::vector<double> acc(b.cols_, 0.0);
    std::vector<int> marker(b.cols_, -1);
    std::vector<int> cols;
    for (int r = 0; r < a.rows_; ++r) {
        cols.clear();
        for (int ka = a.row_ptr_[r]; ka < a.row_ptr_[r + 1]; ++ka) {
            const int j = a.col_idx_[ka];
            const double av = a.vals_[ka];
            for (int kb = b.row_ptr_[j]; kb < b.row_ptr_[j + 1]; ++kb) {
                const int c = b.col_idx_[kb];
                if (marker[c] != r) {
                    marker[c] = r;
                    acc[c] = 0.0;
                    cols.push_back(c);
                }
                acc[c] += av * b.vals_[kb];
            }
        }
        std::sort(cols.begin(), cols.end());
        for (int c : cols) {
            m.col_idx_.push_back(c);
            m.vals_.push_back(acc[c]);
        }
        m.row_ptr_[r + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
}

SparseMat SparseMat::block(int row_begin, int row_end, int col_begin, int col_end) const {
    SparseMat m(row_end - row_begin, col_end - col_begin);
    for (int r = row_begin; r < row_end; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            const int c = col_idx_[k];
            if (c >= col_begin && c < col_end) {
                m.col_idx_.push_back(c - col_begin);
                m.vals_.push_back(vals_[k]);
            }
        }
        m.row_ptr_[r - row_begin + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
}

SparseMat SparseMat::eliminate(std::span<const std::uint8_t> mask, bool unit_diagonal) const {
    assert(rows_ == cols_ && static_cast<int>(mask.size()) == rows_);
    SparseMat m(rows_, cols_);
    for (int r = 0; r < rows_; ++r) {
        if (mask[r]) {
            if (unit_diagonal) {
                m.col_idx_.push_back(r);
                m.vals_.push_back(1.0);
            }
        } else {
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                if (!mask[col_idx_[k]]) {
                    m.col_idx_.push_back(col_idx_[k]);
                    m.vals_.push_back(vals_[k]);
                }
            }
        }
        m.row_ptr_[r + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
}

SparseMat SparseMat::zero_rows(std::span<const std::uint8_t> mask) const {
    assert(static_cast<int>(mask.size()) == rows_);
    SparseMat m(rows_, cols_);
    for (int r = 0; r < rows_; ++r) {
        if (!mask[r]) {
            for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
                m.col_idx_.push_back(col_idx_[k]);
                m.vals_.push_back(vals_[k]);
            }
        }
        m.row_ptr_[r + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
}

SparseMat SparseMat::zero_cols(std::span<const std::uint8_t> mask) const {
    assert(static_cast<int>(mask.size()) == cols_);
    SparseMat m(rows_, cols_);
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (!mask[col_idx_[k]]) {
                m.col_idx_.push_back(col_idx_[k]);
                m.vals_.push_back(vals_[k]);
            }
        }
        m.row_ptr_[r + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
}

SparseMat SparseMat::pruned(double threshold) const {
    SparseMat m(rows_, cols_);
    for (int r = 0; r < rows_; ++r) {
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
            if (std::abs(vals_[k]) > threshold) {
                m.col_idx_.push_back(col_idx_[k]);
                m.vals_.push_back(vals_[k]);
            }
        }
        m.row_ptr_[r + 1] = static_cast<int>(m.col_idx_.size());
    }
    return m;
}

std::vector<double> SparseMat::to_dense() const {
    std::vector<double> d(static_cast<std::size_t>(rows_) * cols_, 0.0);
    for (int r = 0; r < rows_; ++r)
        for (int k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k)
            d[static_cast<std::size_t>(r) * cols_ + col_idx_[k]] += vals_[k];
    return d;
}

double SparseMat::max_abs() const {
    double m = 0.0;
    for (double v : vals_) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace chns
