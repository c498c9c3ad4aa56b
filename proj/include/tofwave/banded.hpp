#pragma once

#include <complex>
#include <vector>

namespace tofwave {

// General band matrix in LAPACK layout with room for pivot fill-in.
template <class T>
class BandedMatrix {
 public:
  BandedMatrix() = default;
  BandedMatrix(int n, int kl, int ku);

  int size() const { return n_; }
  int kl() const { return kl_; }
  int ku() const { return ku_; }
  bool in_band(int i, int j) const { return j - i <= ku_ && i - j <= kl_; }

  T& at(int i, int j) { return ab_[static_cast<size_t>(j) * ldab_ + kl_ + ku_ + i - j]; }
  T at(int i, int j) const { return ab_[static_cast<size_t>(j) * ldab_ + kl_ + ku_ + i - j]; }
  void add(int i, int j, T v) { at(i, j) += v; }

  std::vector<T> multiply(const std::vector<T>& x) const;
  std::vector<T> multiply_transposed(const std::vector<T>& x) const;
  double max_abs_row_sum() const;

  T* data() { return ab_.data(); }
  const T* data() const { return ab_.data(); }
  int ldab() const { return ldab_; }

 private:
  int n_ = 0, kl_ = 0, ku_ = 0, ldab_ = 0;
  std::vector<T> ab_;
};

// Partial-pivoting LU of a band matrix (LAPACK gbtrf/gbtrs).
template <class T>
class BandedLU {
 public:
  BandedLU() = default;
  explicit BandedLU(BandedMatrix<T> a);

  bool ok() const { return info_ == 0; }
  int info() const { return info_; }
  int size() const { return a_.size(); }

  void solve_in_place(std::vector<T>& b, bool transposed = false) const;
  std::vector<T> solve(std::vector<T> b, bool transposed = false) const {
    solve_in_place(b, transposed);
    return b;
  }

 private:
  BandedMatrix<T> a_;
  std::vector<int> ipiv_;
  int info_ = -1;
};

// Product of two band matrices, band widths add.
template <class T>
BandedMatrix<T> band_product(const BandedMatrix<T>& a, const BandedMatrix<T>& b);

extern template class BandedMatrix<double>;
extern template class BandedMatrix<std::complex<double>>;
extern template class BandedLU<double>;
extern template class BandedLU<std::complex<double>>;

}  // namespace tofwave
