#include "dsttkit/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <numeric>

#include "dsttkit/errors.hpp"

namespace dstt {

namespace {

std::size_t pow_sz(int base, int exp) {
  std::size_t r = 1;
  for (int i = 0; i < exp; ++i) r *= static_cast<std::size_t>(base);
  return r;
}

void check_order(int m) {
  if (m < 1 || m > 3) throw DimensionError("input order must be 1, 2, or 3");
}

std::vector<std::vector<int>> permutations_of(int k) {
  std::vector<int> p(k);
  std::iota(p.begin(), p.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(p);
  } while (std::next_permutation(p.begin(), p.end()));
  return out;
}

}  // namespace

TensorOneM::TensorOneM(int nout, int nin, int m)
    : nout_(nout), nin_(nin), m_(m) {
  check_order(m);
  if (nout < 1 || nin < 1) throw DimensionError("dimensions must be positive");
  entries_.assign(static_cast<std::size_t>(nout) * pow_sz(nin, m), 0.0);
}

TensorOneM TensorOneM::from_entries(int nout, int nin, int m,
                                    std::vector<double> entries,
                                    bool symmetrize) {
  TensorOneM t(nout, nin, m);
  if (entries.size() != t.entries_.size())
    throw DimensionError("entry count does not match tensor shape");
  t.entries_ = std::move(entries);
  if (symmetrize) t.symmetrize_inputs();
  return t;
}

double& TensorOneM::at(int i, int a) {
  if (m_ != 1) throw DimensionError("at(i,a) requires order 1");
  return entries_[static_cast<std::size_t>(i) * nin_ + a];
}

double& TensorOneM::at(int i, int a, int b) {
  if (m_ != 2) throw DimensionError("at(i,a,b) requires order 2");
  return entries_[(static_cast<std::size_t>(i) * nin_ + a) * nin_ + b];
}

double& TensorOneM::at(int i, int a, int b, int c) {
  if (m_ != 3) throw DimensionError("at(i,a,b,c) requires order 3");
  return entries_[((static_cast<std::size_t>(i) * nin_ + a) * nin_ + b) * nin_ +
                  c];
}

double TensorOneM::at(int i, int a) const {
  return const_cast<TensorOneM*>(this)->at(i, a);
}
double TensorOneM::at(int i, int a, int b) const {
  return const_cast<TensorOneM*>(this)->at(i, a, b);
}
double TensorOneM::at(int i, int a, int b, int c) const {
  return const_cast<TensorOneM*>(this)->at(i, a, b, c);
}

Eigen::Map<const RowMatrixXd> TensorOneM::as_matrix() const {
  return {entries_.data(), nout_, static_cast<Eigen::Index>(pow_sz(nin_, m_))};
}

Eigen::Map<RowMatrixXd> TensorOneM::as_matrix() {
  return {entries_.data(), nout_, static_cast<Eigen::Index>(pow_sz(nin_, m_))};
}

Eigen::VectorXd TensorOneM::as_vector() const {
  if (nin_ != 1) throw DimensionError("as_vector requires scalar input slots");
  return Eigen::Map<const Eigen::VectorXd>(entries_.data(), nout_);
}

void TensorOneM::symmetrize_inputs() {
  if (m_ == 1) return;
  const int n = nin_;
  if (m_ == 2) {
    for (int i = 0; i < nout_; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
          const double avg = 0.5 * (at(i, a, b) + at(i, b, a));
          at(i, a, b) = avg;
          at(i, b, a) = avg;
        }
    return;
  }
  // One average per index class, written back to every member slot, so the
  // result is exactly symmetric and the operation is idempotent.
  for (int i = 0; i < nout_; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c) {
          const double avg = (at(i, a, b, c) + at(i, a, c, b) + at(i, b, a, c) +
                              at(i, b, c, a) + at(i, c, a, b) + at(i, c, b, a)) /
                             6.0;
          at(i, a, b, c) = avg;
          at(i, a, c, b) = avg;
          at(i, b, a, c) = avg;
          at(i, b, c, a) = avg;
          at(i, c, a, b) = avg;
          at(i, c, b, a) = avg;
        }
}

double TensorOneM::input_symmetry_defect() const {
  if (m_ == 1) return 0.0;
  const int n = nin_;
  double worst = 0.0;
  if (m_ == 2) {
    for (int i = 0; i < nout_; ++i)
      for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b)
          worst = std::max(worst, std::abs(at(i, a, b) - at(i, b, a)));
    return worst;
  }
  for (int i = 0; i < nout_; ++i)
    for (int a = 0; a < n; ++a)
      for (int b = a; b < n; ++b)
        for (int c = b; c < n; ++c) {
          const double ref = at(i, a, b, c);
          for (double other : {at(i, a, c, b), at(i, b, a, c), at(i, b, c, a),
                               at(i, c, a, b), at(i, c, b, a)}) {
            worst = std::max(worst, std::abs(other - ref));
          }
        }
  return worst;
}

bool TensorOneM::is_input_symmetric(double tol) const {
  return input_symmetry_defect() <= tol;
}

bool TensorOneM::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [](double v) { return std::isfinite(v); });
}

namespace {
void check_same_shape(const TensorOneM& a, const TensorOneM& b) {
  if (a.nout() != b.nout() || a.nin() != b.nin() || a.order() != b.order())
    throw DimensionError("tensor shapes differ");
}
}  // namespace

TensorOneM& TensorOneM::operator+=(const TensorOneM& rhs) {
  check_same_shape(*this, rhs);
  for (std::size_t k = 0; k < entries_.size(); ++k)
    entries_[k] += rhs.entries_[k];
  return *this;
}

TensorOneM& TensorOneM::operator-=(const TensorOneM& rhs) {
  check_same_shape(*this, rhs);
  for (std::size_t k = 0; k < entries_.size(); ++k)
    entries_[k] -= rhs.entries_[k];
  return *this;
}

TensorOneM& TensorOneM::operator*=(double s) {
  for (double& v : entries_) v *= s;
  return *this;
}

double frobenius_inner(const TensorOneM& a, const TensorOneM& b) {
  check_same_shape(a, b);
  const Eigen::Map<const Eigen::VectorXd> va(a.data(), a.size());
  const Eigen::Map<const Eigen::VectorXd> vb(b.data(), b.size());
  return va.dot(vb);
}

double frobenius_norm(const TensorOneM& a) {
  const Eigen::Map<const Eigen::VectorXd> va(a.data(), a.size());
  return va.norm();
}

TensorOneM rank1_outer(const Eigen::VectorXd& u, const Eigen::VectorXd& v,
                       int m) {
  check_order(m);
  const int nout = static_cast<int>(u.size());
  const int nin = static_cast<int>(v.size());
  std::vector<double> w{1.0};
  for (int s = 0; s < m; ++s) {
    std::vector<double> nxt(w.size() * nin);
    for (std::size_t a = 0; a < w.size(); ++a)
      for (int j = 0; j < nin; ++j) nxt[a * nin + j] = w[a] * v[j];
    w = std::move(nxt);
  }
  TensorOneM t(nout, nin, m);
  for (int i = 0; i < nout; ++i)
    for (std::size_t a = 0; a < w.size(); ++a)
      t.data()[i * w.size() + a] = u[i] * w[a];
  return t;
}

Eigen::VectorXd contract_full(const TensorOneM& a, const Eigen::VectorXd& x) {
  if (x.size() != a.nin()) throw DimensionError("contract_full: length of x");
  std::vector<double> cur(a.data(), a.data() + a.size());
  std::size_t rows = a.size();
  for (int s = 0; s < a.order(); ++s) {
    rows /= a.nin();
    Eigen::Map<const RowMatrixXd> X(cur.data(), rows, a.nin());
    const Eigen::VectorXd nxt = X * x;
    cur.assign(nxt.data(), nxt.data() + rows);
  }
  return Eigen::Map<const Eigen::VectorXd>(cur.data(), a.nout());
}

Eigen::MatrixXd contract_all_but_one_input(const TensorOneM& a,
                                           const Eigen::VectorXd& x) {
  if (x.size() != a.nin())
    throw DimensionError("contract_all_but_one_input: length of x");
  std::vector<double> cur(a.data(), a.data() + a.size());
  std::size_t rows = a.size();
  for (int s = 0; s < a.order() - 1; ++s) {
    rows /= a.nin();
    Eigen::Map<const RowMatrixXd> X(cur.data(), rows, a.nin());
    const Eigen::VectorXd nxt = X * x;
    cur.assign(nxt.data(), nxt.data() + rows);
  }
  return Eigen::Map<const RowMatrixXd>(cur.data(), a.nout(), a.nin());
}

namespace {

// Moves the last input slot to the front: dst(i, a, b..) = src(i, b.., a).
std::vector<double> rotate_inputs_right(const std::vector<double>& src,
                                        int nout, std::vector<int>& dims) {
  const int m = static_cast<int>(dims.size());
  if (m == 1) return src;
  std::vector<std::size_t> stride(m);
  stride[m - 1] = 1;
  for (int s = m - 2; s >= 0; --s)
    stride[s] = stride[s + 1] * static_cast<std::size_t>(dims[s + 1]);
  const std::size_t block = stride[0] * static_cast<std::size_t>(dims[0]);

  std::vector<int> ndims(m);
  ndims[0] = dims[m - 1];
  for (int s = 1; s < m; ++s) ndims[s] = dims[s - 1];

  std::vector<double> dst(src.size());
  std::vector<int> idx(m, 0);  // destination input indices
  for (int i = 0; i < nout; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * block;
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t flat = 0; flat < block; ++flat) {
      std::size_t soff = base + static_cast<std::size_t>(idx[0]) * stride[m - 1];
      for (int s = 1; s < m; ++s)
        soff += static_cast<std::size_t>(idx[s]) * stride[s - 1];
      dst[base + flat] = src[soff];
      for (int s = m - 1; s >= 0; --s) {
        if (++idx[s] < ndims[s]) break;
        idx[s] = 0;
      }
    }
  }
  return dst;
}

}  // namespace

TensorOneM change_basis(const TensorOneM& a, const Eigen::MatrixXd& r) {
  if (r.cols() != a.nin()) throw DimensionError("change_basis: R columns");
  const int k = static_cast<int>(r.rows());
  const int m = a.order();
  std::vector<double> cur(a.data(), a.data() + a.size());
  std::vector<int> dims(m, a.nin());
  for (int round = 0; round < m; ++round) {
    std::size_t lead = a.nout();
    for (int s = 0; s < m - 1; ++s) lead *= static_cast<std::size_t>(dims[s]);
    Eigen::Map<const RowMatrixXd> X(cur.data(), lead, dims[m - 1]);
    const RowMatrixXd Y = X * r.transpose();
    cur.assign(Y.data(), Y.data() + lead * static_cast<std::size_t>(k));
    dims[m - 1] = k;
    cur = rotate_inputs_right(cur, a.nout(), dims);
    std::rotate(dims.rbegin(), dims.rbegin() + 1, dims.rend());
  }
  return TensorOneM::from_entries(a.nout(), k, m, std::move(cur));
}

void dump_csv(const TensorOneM& a, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  const int m = a.order();
  const int n = a.nin();
  std::vector<int> idx(m, 0);
  const std::size_t block = a.size() / static_cast<std::size_t>(a.nout());
  for (int i = 0; i < a.nout(); ++i) {
    std::fill(idx.begin(), idx.end(), 0);
    for (std::size_t flat = 0; flat < block; ++flat) {
      std::fprintf(f, "%d", i + 1);
      for (int s = 0; s < m; ++s) std::fprintf(f, ",%d", idx[s] + 1);
      std::fprintf(f, ",%.16e\n",
                   a.data()[static_cast<std::size_t>(i) * block + flat]);
      for (int s = m - 1; s >= 0; --s) {
        if (++idx[s] < n) break;
        idx[s] = 0;
      }
    }
  }
  std::fclose(f);
}

TensorOneM load_csv(const std::string& path, int nout, int nin, int m) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open for reading: " + path);
  TensorOneM t(nout, nin, m);
  char line[256];
  std::size_t count = 0;
  while (std::fgets(line, sizeof line, f)) {
    if (line[0] == '\n' || line[0] == '\0') continue;
    int idx[4] = {0, 0, 0, 0};
    double value = 0.0;
    int got = 0;
    switch (m) {
      case 1:
        got = std::sscanf(line, "%d,%d,%lf", &idx[0], &idx[1], &value);
        break;
      case 2:
        got = std::sscanf(line, "%d,%d,%d,%lf", &idx[0], &idx[1], &idx[2],
                          &value);
        break;
      default:
        got = std::sscanf(line, "%d,%d,%d,%d,%lf", &idx[0], &idx[1], &idx[2],
                          &idx[3], &value);
        break;
    }
    if (got != m + 2) {
      std::fclose(f);
      throw IoError("malformed tensor CSV row in " + path);
    }
    std::size_t off = static_cast<std::size_t>(idx[0] - 1);
    for (int s = 0; s < m; ++s) {
      if (idx[s + 1] < 1 || idx[s + 1] > nin) {
        std::fclose(f);
        throw IoError("tensor CSV index out of range in " + path);
      }
      off = off * static_cast<std::size_t>(nin) +
            static_cast<std::size_t>(idx[s + 1] - 1);
    }
    if (idx[0] < 1 || idx[0] > nout) {
      std::fclose(f);
      throw IoError("tensor CSV index out of range in " + path);
    }
    t.data()[off] = value;
    ++count;
  }
  std::fclose(f);
  if (count != t.size()) throw IoError("tensor CSV row count mismatch: " + path);
  return t;
}

SymmetricEvenTensor::SymmetricEvenTensor(int dim, int order)
    : n_(dim), order_(order) {
  if (dim < 1 || order < 2 || order > 6 || order % 2 != 0)
    throw DimensionError("SymmetricEvenTensor: bad shape");
  entries_.assign(pow_sz(dim, order), 0.0);
}

SymmetricEvenTensor SymmetricEvenTensor::square_of(const TensorOneM& phi) {
  SymmetricEvenTensor sq(phi.nin(), 2 * phi.order());
  const auto X = phi.as_matrix();  // nout x nin^m
  const RowMatrixXd G = X.transpose() * X;
  std::copy(G.data(), G.data() + G.size(), sq.entries_.begin());
  sq.symmetrize();
  return sq;
}

std::size_t SymmetricEvenTensor::offset(std::span<const int> idx) const {
  std::size_t off = 0;
  for (int s = 0; s < order_; ++s)
    off = off * static_cast<std::size_t>(n_) + static_cast<std::size_t>(idx[s]);
  return off;
}

double& SymmetricEvenTensor::at(std::span<const int> idx) {
  return entries_[offset(idx)];
}

double SymmetricEvenTensor::at(std::span<const int> idx) const {
  return entries_[offset(idx)];
}

double SymmetricEvenTensor::value(const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw DimensionError("value: length of x");
  std::vector<double> cur = entries_;
  std::size_t rows = cur.size();
  for (int s = 0; s < order_; ++s) {
    rows /= n_;
    Eigen::Map<const RowMatrixXd> X(cur.data(), rows, n_);
    const Eigen::VectorXd nxt = X * x;
    cur.assign(nxt.data(), nxt.data() + rows);
  }
  return cur[0];
}

Eigen::VectorXd SymmetricEvenTensor::contract_all_but_first(
    const Eigen::VectorXd& x) const {
  if (x.size() != n_) throw DimensionError("contract_all_but_first: x");
  std::vector<double> cur = entries_;
  std::size_t rows = cur.size();
  for (int s = 0; s < order_ - 1; ++s) {
    rows /= n_;
    Eigen::Map<const RowMatrixXd> X(cur.data(), rows, n_);
    const Eigen::VectorXd nxt = X * x;
    cur.assign(nxt.data(), nxt.data() + rows);
  }
  return Eigen::Map<const Eigen::VectorXd>(cur.data(), n_);
}

void SymmetricEvenTensor::symmetrize() {
  const auto perms = permutations_of(order_);
  std::vector<double> sym(entries_.size(), 0.0);
  std::vector<int> idx(order_, 0);
  const double inv = 1.0 / static_cast<double>(perms.size());
  std::vector<int> pidx(order_);
  for (std::size_t flat = 0; flat < entries_.size(); ++flat) {
    double acc = 0.0;
    for (const auto& p : perms) {
      for (int s = 0; s < order_; ++s) pidx[s] = idx[p[s]];
      acc += entries_[offset(pidx)];
    }
    sym[flat] = acc * inv;
    for (int s = order_ - 1; s >= 0; --s) {
      if (++idx[s] < n_) break;
      idx[s] = 0;
    }
  }
  entries_ = std::move(sym);
}

double SymmetricEvenTensor::symmetry_defect() const {
  SymmetricEvenTensor sym = *this;
  sym.symmetrize();
  double worst = 0.0;
  for (std::size_t k = 0; k < entries_.size(); ++k)
    worst = std::max(worst, std::abs(entries_[k] - sym.entries_[k]));
  return worst;
}

}  // namespace dstt
