#include "tlas/network/boundary.hpp"

#include <vector>

namespace tlas {

namespace {

std::vector<ad::Jet2> constants(std::span<const double> x) {
  std::vector<ad::Jet2> out;
  out.reserve(x.size());
  for (double v : x) out.push_back(ad::Jet2::constant(v));
  return out;
}

}  // namespace

double BoundaryWrapper::extension_at(std::span<const double> x) const {
  const auto jx = constants(x);
  return extension(jx).value();
}

double BoundaryWrapper::length_factor_at(std::span<const double> x) const {
  const auto jx = constants(x);
  return length_factor(jx).value();
}

double wrap_exact_bc(const BoundaryWrapper& wrapper, double u_raw, std::span<const double> x) {
  return wrapper.extension_at(x) + wrapper.length_factor_at(x) * u_raw;
}

ad::Jet2 wrap_exact_bc(const BoundaryWrapper& wrapper, const ad::Jet2& u_raw, std::span<const double> x) {
  std::vector<ad::Jet2> jx;
  jx.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const int c = static_cast<int>(i);
    jx.push_back(u_raw.tracks(c) ? ad::Jet2::variable(x[i], c, u_raw.has_second()) : ad::Jet2::constant(x[i]));
  }
  return wrapper.extension(jx) + wrapper.length_factor(jx) * u_raw;
}

BoundaryJets boundary_jets(const BoundaryWrapper& wrapper, const Matrix& points, const ad::JetSpec& spec) {
  const Index n = points.rows();
  BoundaryJets bc;
  bc.spec = spec;
  bc.g_value.resize(n, 1);
  bc.l_value.resize(n, 1);
  bc.g_first.assign(spec.first.size(), Matrix(n, 1));
  bc.l_first.assign(spec.first.size(), Matrix(n, 1));
  bc.g_second.assign(spec.second.size(), Matrix(n, 1));
  bc.l_second.assign(spec.second.size(), Matrix(n, 1));
  const bool second = !spec.second.empty();
  std::vector<ad::Jet2> jx(static_cast<std::size_t>(points.cols()));
  for (Index r = 0; r < n; ++r) {
    for (Index c = 0; c < points.cols(); ++c) {
      const int coord = static_cast<int>(c);
      jx[static_cast<std::size_t>(c)] = spec.first_slot(coord) >= 0 ? ad::Jet2::variable(points(r, c), coord, second)
                                                                     : ad::Jet2::constant(points(r, c));
    }
    const ad::Jet2 g = wrapper.extension(jx);
    const ad::Jet2 l = wrapper.length_factor(jx);
    bc.g_value(r, 0) = g.value();
    bc.l_value(r, 0) = l.value();
    for (std::size_t k = 0; k < spec.first.size(); ++k) {
      bc.g_first[k](r, 0) = g.tracks(spec.first[k]) ? g.d1(spec.first[k]) : 0.0;
      bc.l_first[k](r, 0) = l.tracks(spec.first[k]) ? l.d1(spec.first[k]) : 0.0;
    }
    for (std::size_t k = 0; k < spec.second.size(); ++k) {
      const auto [i, j] = spec.second[k];
      bc.g_second[k](r, 0) = g.tracks(i) && g.tracks(j) ? g.d2(i, j) : 0.0;
      bc.l_second[k](r, 0) = l.tracks(i) && l.tracks(j) ? l.d2(i, j) : 0.0;
    }
  }
  return bc;
}

ad::JetVar wrap_exact_bc(ad::Tape& tape, const BoundaryJets& bc, const ad::JetVar& u) {
  if (u.value.cols() != 1 || u.value.rows() != bc.g_value.rows()) {
    throw Error("boundary wrap: jet batch does not match the precomputed points");
  }
  if (u.spec.first != bc.spec.first || u.spec.second != bc.spec.second) {
    throw Error("boundary wrap: jet channels differ from the precomputed channels");
  }
  const ad::Var l = tape.constant(bc.l_value);
  ad::JetVar out;
  out.spec = u.spec;
  out.value = tape.add(tape.constant(bc.g_value), tape.mul(l, u.value));
  out.first.resize(u.first.size());
  out.second.resize(u.second.size());
  std::vector<ad::Var> l_first(u.first.size());
  for (std::size_t k = 0; k < u.first.size(); ++k) {
    l_first[k] = tape.constant(bc.l_first[k]);
    // (l u)_i = l_i u + l u_i
    out.first[k] = tape.constant(bc.g_first[k]) + tape.mul(l_first[k], u.value) + tape.mul(l, u.first[k]);
  }
  for (std::size_t k = 0; k < u.second.size(); ++k) {
    const auto [i, j] = u.spec.second[k];
    const std::size_t si = static_cast<std::size_t>(u.spec.first_slot(i));
    const std::size_t sj = static_cast<std::size_t>(u.spec.first_slot(j));
    // (l u)_ij = l_ij u + l_i u_j + l_j u_i + l u_ij
    out.second[k] = tape.constant(bc.g_second[k]) + tape.mul(tape.constant(bc.l_second[k]), u.value) +
                    tape.mul(l_first[si], u.first[sj]) + tape.mul(l_first[sj], u.first[si]) +
                    tape.mul(l, u.second[k]);
  }
  return out;
}

}  // namespace tlas
