#include "tofwave/banded.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

extern "C" {
void dgbtrf_(const int* m, const int* n, const int* kl, const int* ku, double* ab, const int* ldab,
             int* ipiv, int* info);
void dgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const double* ab, const int* ldab, const int* ipiv, double* b, const int* ldb,
             int* info);
void zgbtrf_(const int* m, const int* n, const int* kl, const int* ku, std::complex<double>* ab,
             const int* ldab, int* ipiv, int* info);
void zgbtrs_(const char* trans, const int* n, const int* kl, const int* ku, const int* nrhs,
             const std::complex<double>* ab, const int* ldab, const int* ipiv,
             std::complex<double>* b, const int* ldb, int* info);
}

namespace tofwave {

template <class T>
BandedMatrix<T>::BandedMatrix(int n, int kl, int ku)
    : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
      ab_(static_cast<size_t>(n) * (2 * kl + ku + 1), T(0)) {}

template <class T>
std::vector<T> BandedMatrix<T>::multiply(const std::vector<T>& x) const {
  if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("band multiply: size");
  std::vector<T> y(n_, T(0));
  for (int i = 0; i < n_; ++i) {
    const int j0 = std::max(0, i - kl_), j1 = std::min(n_ - 1, i + ku_);
    T s(0);
    for (int j = j0; j <= j1; ++j) s += at(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

template <class T>
std::vector<T> BandedMatrix<T>::multiply_transposed(const std::vector<T>& x) const {
  if (static_cast<int>(x.size()) != n_) throw std::invalid_argument("band multiply: size");
  std::vector<T> y(n_, T(0));
  for (int j = 0; j < n_; ++j) {
    const int i0 = std::max(0, j - ku_), i1 = std::min(n_ - 1, j + kl_);
    T s(0);
    for (int i = i0; i <= i1; ++i) s += at(i, j) * x[i];
    y[j] = s;
  }
  return y;
}

template <class T>
double BandedMatrix<T>::max_abs_row_sum() const {
  double best = 0.0;
  for (int i = 0; i < n_; ++i) {
    double s = 0.0;
    for (int j = std::max(0, i - kl_); j <= std::min(n_ - 1, i + ku_); ++j) s += std::abs(at(i, j));
    best = std::max(best, s);
  }
  return best;
}

namespace {
void gbtrf(int n, int kl, int ku, double* ab, int ldab, int* ipiv, int* info) {
  dgbtrf_(&n, &n, &kl, &ku, ab, &ldab, ipiv, info);
}
void gbtrf(int n, int kl, int ku, std::complex<double>* ab, int ldab, int* ipiv, int* info) {
  zgbtrf_(&n, &n, &kl, &ku, ab, &ldab, ipiv, info);
}
void gbtrs(char tr, int n, int kl, int ku, const double* ab, int ldab, const int* ipiv, double* b,
           int* info) {
  const int one = 1;
  dgbtrs_(&tr, &n, &kl, &ku, &one, ab, &ldab, ipiv, b, &n, info);
}
void gbtrs(char tr, int n, int kl, int ku, const std::complex<double>* ab, int ldab,
           const int* ipiv, std::complex<double>* b, int* info) {
  const int one = 1;
  zgbtrs_(&tr, &n, &kl, &ku, &one, ab, &ldab, ipiv, b, &n, info);
}
}  // namespace

template <class T>
BandedLU<T>::BandedLU(BandedMatrix<T> a) : a_(std::move(a)), ipiv_(a_.size()) {
  gbtrf(a_.size(), a_.kl(), a_.ku(), a_.data(), a_.ldab(), ipiv_.data(), &info_);
}

template <class T>
void BandedLU<T>::solve_in_place(std::vector<T>& b, bool transposed) const {
  if (info_ != 0) throw std::runtime_error("banded solve on a singular factorization");
  if (static_cast<int>(b.size()) != a_.size()) throw std::invalid_argument("band solve: size");
  int info = 0;
  gbtrs(transposed ? 'T' : 'N', a_.size(), a_.kl(), a_.ku(), a_.data(), a_.ldab(), ipiv_.data(),
        b.data(), &info);
  if (info != 0) throw std::runtime_error("gbtrs failed");
}

template <class T>
BandedMatrix<T> band_product(const BandedMatrix<T>& a, const BandedMatrix<T>& b) {
  const int n = a.size();
  BandedMatrix<T> c(n, a.kl() + b.kl(), a.ku() + b.ku());
  for (int i = 0; i < n; ++i) {
    for (int k = std::max(0, i - a.kl()); k <= std::min(n - 1, i + a.ku()); ++k) {
      const T aik = a.at(i, k);
      if (aik == T(0)) continue;
      for (int j = std::max(0, k - b.kl()); j <= std::min(n - 1, k + b.ku()); ++j)
        c.add(i, j, aik * b.at(k, j));
    }
  }
  return c;
}

template class BandedMatrix<double>;
template class BandedMatrix<std::complex<double>>;
template class BandedLU<double>;
template class BandedLU<std::complex<double>>;
template BandedMatrix<double> band_product(const BandedMatrix<double>&, const BandedMatrix<double>&);
template BandedMatrix<std::complex<double>> band_product(const BandedMatrix<std::complex<double>>&,
                                                         const BandedMatrix<std::complex<double>>&);

}  // namespace tofwave
