#include "tlas/problems/dataset.hpp"

#include <Eigen/SVD>

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

namespace tlas {

static_assert(std::endian::native == std::endian::little, "DOND IO assumes a little-endian host");

void DonDataset::validate() const {
  const Index ns = samples();
  if (ns == 0) throw Error("dataset has no samples");
  if (u.rows() != ns) throw Error("dataset: targets and sensors disagree on the sample count");
  if (static_cast<Index>(xi.size()) != ns) throw Error("dataset: coordinates missing for some samples");
  for (const Matrix& x : xi) {
    if (x.rows() != points() || x.cols() != dim()) throw Error("dataset: inconsistent coordinate shapes");
  }
  if (!u.allFinite()) throw Error("dataset: non-finite target values");
}

bool DonDataset::shared_grid() const {
  for (std::size_t j = 1; j < xi.size(); ++j) {
    if (xi[j] != xi[0]) return false;
  }
  return true;
}

DonDataset DonDataset::slice(Index begin, Index count) const {
  if (begin < 0 || count < 0 || begin + count > samples()) throw Error("dataset slice out of range");
  DonDataset out;
  out.y = y.middleRows(begin, count);
  out.u = u.middleRows(begin, count);
  out.xi.assign(xi.begin() + begin, xi.begin() + begin + count);
  out.metadata = metadata;
  return out;
}

namespace {

template <class T>
void put(std::ofstream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("DOND file truncated");
  return v;
}

void put_block(std::ofstream& os, const Matrix& m) {
  os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
}

void get_block(std::ifstream& is, Matrix& m) {
  is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  if (!is) throw Error("DOND file truncated");
}

}  // namespace

void write_dond(const std::string& path, const DonDataset& data) {
  data.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os.write("DOND", 4);
  put<std::uint32_t>(os, kDondVersion);
  put<std::uint64_t>(os, static_cast<std::uint64_t>(data.samples()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(data.sensors()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(data.points()));
  put<std::uint64_t>(os, static_cast<std::uint64_t>(data.dim()));
  put_block(os, data.y);
  for (const Matrix& x : data.xi) put_block(os, x);
  put_block(os, data.u);
  if (!os) throw Error("write to '" + path + "' failed");
}

DonDataset read_dond(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "DOND", 4) != 0) throw Error("'" + path + "' is not a DOND file");
  const auto version = get<std::uint32_t>(is);
  if (version != kDondVersion) throw Error("unsupported DOND version " + std::to_string(version));
  const auto ns = static_cast<Index>(get<std::uint64_t>(is));
  const auto m = static_cast<Index>(get<std::uint64_t>(is));
  const auto nc = static_cast<Index>(get<std::uint64_t>(is));
  const auto d = static_cast<Index>(get<std::uint64_t>(is));
  constexpr Index limit = Index{1} << 40;
  if (ns <= 0 || m <= 0 || nc <= 0 || d <= 0 || ns > limit || m > limit || nc > limit || d > 16) {
    throw Error("DOND header has invalid sizes");
  }
  DonDataset data;
  data.y.resize(ns, m);
  get_block(is, data.y);
  data.xi.assign(static_cast<std::size_t>(ns), Matrix(nc, d));
  for (Matrix& x : data.xi) get_block(is, x);
  data.u.resize(ns, nc);
  get_block(is, data.u);
  data.validate();
  return data;
}

PodBasis pod_basis(const Matrix& targets, Index p, const Matrix& points) {
  const Index ns = targets.rows(), nc = targets.cols();
  if (p < 1 || p > std::min(ns, nc)) {
    throw Error("POD rank " + std::to_string(p) + " exceeds min(samples, points) = " + std::to_string(std::min(ns, nc)));
  }
  if (points.rows() != nc) throw Error("POD grid does not match the target width");
  PodBasis pod;
  pod.mean = targets.colwise().mean().transpose();
  const Eigen::MatrixXd snapshots = (targets.rowwise() - pod.mean.transpose()).transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(snapshots, Eigen::ComputeThinU);
  Matrix basis = svd.matrixU().leftCols(p);
  for (Index k = 0; k < p; ++k) {
    Index arg = 0;
    basis.col(k).cwiseAbs().maxCoeff(&arg);
    if (basis(arg, k) < 0.0) basis.col(k) *= -1.0;
  }
  pod.basis = std::move(basis);
  pod.points = points;
  return pod;
}

DonObjective::DonObjective(const DonDataset& data, const DonSpec& spec) : spec_(spec), layout_(spec.layout()) {
  data.validate();
  spec_.validate();
  if (!data.shared_grid()) throw Error("DeepONet training needs all samples on one coordinate grid");
  if (spec_.branch.input_width() != data.sensors()) {
    throw Error("branch input width " + std::to_string(spec_.branch.input_width()) + " does not match " +
                std::to_string(data.sensors()) + " sensors");
  }
  if (spec_.has_pod_trunk() && spec_.pod->basis.rows() != data.points()) {
    throw Error("POD basis does not match the dataset grid");
  }
  y_ = data.y;
  grid_ = data.xi.front();
  u_ = data.u;
}

ad::Var DonObjective::loss(ad::Tape& tape) const {
  const ad::Var pred = don_predict_tape(tape, spec_, layout_, y_, grid_);
  const double scale = 1.0 / static_cast<double>(u_.size());
  return tape.scale(tape.sum(tape.square(tape.sub(pred, tape.constant(u_)))), scale);
}

double DonObjective::value(const Vector& theta) const {
  if (theta.size() != size()) throw Error("parameter vector has the wrong length");
  return ad::evaluate([this](ad::Tape& t) { return loss(t); }, theta);
}

Evaluation DonObjective::evaluate(const Vector& theta, const std::vector<char>* active) const {
  if (theta.size() != size()) throw Error("parameter vector has the wrong length");
  auto vg = ad::reverse_grad([this](ad::Tape& t) { return loss(t); }, theta, active);
  return Evaluation{vg.loss, std::move(vg.grad)};
}

Matrix DonObjective::predict(const Vector& theta) const { return don_predict(spec_, theta, y_, grid_); }

double don_loss(const DonDataset& data, const DonSpec& spec, const Vector& theta) {
  data.validate();
  if (!data.shared_grid()) throw Error("DeepONet loss needs all samples on one coordinate grid");
  const Matrix pred = don_predict(spec, theta, data.y, data.xi.front());
  if (pred.rows() != data.u.rows() || pred.cols() != data.u.cols()) throw Error("prediction shape mismatch");
  return (pred - data.u).squaredNorm() / static_cast<double>(data.u.size());
}

}  // namespace tlas
