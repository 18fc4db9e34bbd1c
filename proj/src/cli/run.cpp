#include "tlas/cli/run.hpp"

#include "tlas/problems/adv.hpp"

#include <openssl/evp.h>

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace tlas::cli {

namespace {

PinnKind pinn_kind(ProblemKind k) {
  switch (k) {
    case ProblemKind::Burgers: return PinnKind::Burgers;
    case ProblemKind::DiffusionAdvection: return PinnKind::DiffusionAdvection;
    default: return PinnKind::AllenCahn;
  }
}

}  // namespace

Experiment::Experiment(const RunConfig& cfg) : cfg_(cfg) {
  const auto& p = cfg_.problem;
  if (is_pinn(p.kind)) {
    pinn_ = make_pinn_problem(pinn_kind(p.kind), p.points);
    reference_ = &pinn_reference(*pinn_, p.reference_grid);
    auto obj = std::make_unique<PinnObjective>(*pinn_, cfg_.network);
    layout_ = obj->layout();
    objective_ = std::move(obj);
    return;
  }
  if (p.kind == ProblemKind::Adv) {
    DonDataset all = gen_adv_dataset(p.train_samples + p.test_samples, p.data_seed);
    train_ = all.slice(0, p.train_samples);
    test_ = all.slice(p.train_samples, p.test_samples);
  } else {
    train_ = read_dond(p.train_file);
    test_ = read_dond(p.test_file);
  }
  DonSpec spec;
  spec.branch = cfg_.network;
  if (p.pod > 0) {
    if (!train_->shared_grid()) throw Error("a POD trunk needs all training samples on one grid");
    spec.pod = std::make_shared<PodBasis>(pod_basis(train_->u, p.pod, train_->xi.front()));
    spec.latent = p.pod;
  } else {
    spec.trunk = NetworkSpec::mlp(p.trunk, cfg_.network.hidden);
    spec.latent = p.trunk.back();
  }
  don_ = spec;
  layout_ = spec.layout();
  objective_ = std::make_unique<DonObjective>(*train_, spec);
  test_objective_ = std::make_unique<DonObjective>(*test_, spec);
}

std::optional<Decomposition> Experiment::decomposition() const {
  if (cfg_.optimizer == OptimizerKind::Lbfgs) return std::nullopt;
  const SchwarzConfig s = cfg_.resolved_schwarz();
  if (don_) return decompose(*don_, s.subdomains, s.overlap);
  return decompose(cfg_.network, s.subdomains, s.overlap);
}

Vector Experiment::initial(std::uint64_t seed) const { return init_xavier(layout_, seed); }

double Experiment::error(const Vector& theta) const {
  if (pinn_) return relative_l2_error(pinn_predict(*pinn_, cfg_.network, theta, reference_->points), reference_->values);
  const Matrix pred = test_objective_->predict(theta);
  return relative_l2_error(Eigen::Map<const Vector>(pred.data(), pred.size()),
                           Eigen::Map<const Vector>(test_->u.data(), test_->u.size()));
}

RunResult Experiment::run(std::uint64_t seed, int inner_threads, Vector* final_theta) const {
  RunResult result;
  result.seed = seed;
  Vector theta = initial(seed);
  const Index gammas = gamma_columns(cfg_);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  result.rows.push_back(RunRow{0, objective_->value(theta), error(theta), std::vector<double>(gammas, nan), 0.0, 0, 0.0});

  CostLedger ledger(objective_->size());
  const auto start = std::chrono::steady_clock::now();
  auto callback = [&](EpochRecord& rec, const Vector& t) {
    rec.error = error(t);
    RunRow row{rec.epoch, rec.loss_end, rec.error, {}, rec.gradient_evaluations, rec.update_cost, 0.0};
    if (gammas > 0) {
      row.gammas = rec.gammas.size() == static_cast<std::size_t>(gammas)
                       ? rec.gammas
                       : std::vector<double>(gammas, rec.gammas.empty() ? nan : rec.gammas.front());
    }
    if (cfg_.wall_clock) {
      row.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    }
    result.rows.push_back(std::move(row));
    return true;
  };

  EpochTrace trace;
  if (cfg_.optimizer == OptimizerKind::Lbfgs) {
    trace = train_lbfgs(*objective_, theta, cfg_.lbfgs, cfg_.epochs, cfg_.tolerance, ledger, callback);
  } else {
    SchwarzConfig s = cfg_.resolved_schwarz();
    if (s.threads == 0) s.threads = std::max(1, inner_threads);
    trace = train_tl(*objective_, theta, *decomposition(), s, ledger, callback);
  }
  result.violations = trace.violations();
  if (final_theta) *final_theta = std::move(theta);
  return result;
}

std::vector<RunResult> run_seeds(const Experiment& experiment, int workers) {
  const auto& seeds = experiment.config().seeds;
  const int n = static_cast<int>(seeds.size());
  const int pool = std::clamp(workers, 1, n);
  const int inner = std::max(1, workers / pool);
  std::vector<RunResult> results(seeds.size());
  std::vector<std::exception_ptr> errors(seeds.size());
  std::atomic<int> next{0};
  auto work = [&] {
    for (int i = next++; i < n; i = next++) {
      try {
        results[i] = experiment.run(seeds[i], inner);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 1; t < pool; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

Index gamma_columns(const RunConfig& cfg) {
  return cfg.optimizer == OptimizerKind::Lbfgs ? 0 : cfg.schwarz.subdomains;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

void write_run_csv(const std::string& path, const RunResult& result, Index gammas) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << "epoch,loss,rel_error";
  for (Index s = 1; s <= gammas; ++s) os << ",gamma_" << s;
  os << ",cum_ge,cum_uc,wall_ms\n";
  for (const auto& r : result.rows) {
    os << r.epoch << ',' << format_number(r.loss) << ',' << format_number(r.rel_error);
    for (Index s = 0; s < gammas; ++s) os << ',' << format_number(r.gammas.at(static_cast<std::size_t>(s)));
    os << ',' << format_number(r.cum_ge) << ',' << r.cum_uc << ',' << format_number(r.wall_ms) << '\n';
  }
  if (!os) throw Error("write to '" + path + "' failed");
}

namespace {

double parse_double(const std::string& s, const std::string& path) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
    throw Error("'" + path + "': bad number '" + s + "'");
  }
  return v;
}

}  // namespace

std::vector<RunRow> read_run_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw Error("'" + path + "' is empty");
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) header.push_back(f);
  }
  const std::size_t cols = header.size();
  if (cols < 6 || header[0] != "epoch" || header[1] != "loss" || header[2] != "rel_error" ||
      header[cols - 3] != "cum_ge" || header[cols - 2] != "cum_uc" || header[cols - 1] != "wall_ms") {
    throw Error("'" + path + "' is not a run CSV");
  }
  std::vector<RunRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string x;
    while (std::getline(ss, x, ',')) f.push_back(x);
    if (f.size() != cols) throw Error("'" + path + "': row with " + std::to_string(f.size()) + " fields");
    RunRow r;
    r.epoch = static_cast<Index>(parse_double(f[0], path));
    r.loss = parse_double(f[1], path);
    r.rel_error = parse_double(f[2], path);
    for (std::size_t k = 3; k + 3 < cols; ++k) r.gammas.push_back(parse_double(f[k], path));
    r.cum_ge = parse_double(f[cols - 3], path);
    r.cum_uc = static_cast<std::int64_t>(parse_double(f[cols - 2], path));
    r.wall_ms = parse_double(f[cols - 1], path);
    rows.push_back(std::move(r));
  }
  return rows;
}

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), md, &len, EVP_sha1(), nullptr) != 1) throw Error("SHA-1 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

}  // namespace tlas::cli
