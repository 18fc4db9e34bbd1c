#include "tlas/cli/config.hpp"

#include "tlas/decomposition/decomposition.hpp"
#include "tlas/network/deeponet.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace tlas::cli {

namespace pt = boost::property_tree;

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "lbfgs") return OptimizerKind::Lbfgs;
  if (name == "sl") return OptimizerKind::Sl;
  if (name == "tl") return OptimizerKind::Tl;
  throw ConfigError("optimizer.kind: unknown optimizer '" + name + "' (expected lbfgs, sl or tl)");
}

std::string to_string(OptimizerKind k) {
  switch (k) {
    case OptimizerKind::Lbfgs: return "lbfgs";
    case OptimizerKind::Sl: return "sl";
    case OptimizerKind::Tl: return "tl";
  }
  return "?";
}

ProblemKind parse_problem(const std::string& name) {
  if (name == "burgers") return ProblemKind::Burgers;
  if (name == "da") return ProblemKind::DiffusionAdvection;
  if (name == "ac") return ProblemKind::AllenCahn;
  if (name == "adv") return ProblemKind::Adv;
  if (name == "dond") return ProblemKind::Dond;
  throw ConfigError("problem.kind: unknown problem '" + name + "' (expected burgers, da, ac, adv or dond)");
}

std::string to_string(ProblemKind k) {
  switch (k) {
    case ProblemKind::Burgers: return "burgers";
    case ProblemKind::DiffusionAdvection: return "da";
    case ProblemKind::AllenCahn: return "ac";
    case ProblemKind::Adv: return "adv";
    case ProblemKind::Dond: return "dond";
  }
  return "?";
}

bool is_pinn(ProblemKind k) {
  return k == ProblemKind::Burgers || k == ProblemKind::DiffusionAdvection || k == ProblemKind::AllenCahn;
}

SchwarzConfig RunConfig::resolved_schwarz() const {
  SchwarzConfig s = schwarz;
  s.global = s.local = s.coarse = lbfgs;
  s.max_epochs = epochs;
  s.tolerance = tolerance;
  if (optimizer == OptimizerKind::Sl) {
    s.overlap = 0;
    s.coarse_iters = 0;
    s.sync = SyncStrategy::SingleDamped;
  }
  return s;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s{
      {"problem", {"kind", "points", "reference_grid", "train_samples", "test_samples", "data_seed", "train_file",
                   "test_file", "pod", "trunk"}},
      {"network", {"widths", "activation", "adaptive_slope", "skip"}},
      {"optimizer", {"kind", "epochs", "tolerance", "memory", "momentum", "c1", "c2", "max_evals"}},
      {"schwarz", {"subdomains", "overlap", "local_iters", "coarse_iters", "sync", "global_steps", "gamma_halvings",
                   "local_tolerance", "coarse_tolerance", "threads", "restart_global"}},
      {"run", {"seeds", "output", "wall_clock"}},
      {"manifest", {}},
  };
  return s;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  bool has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

  std::string str(const std::string& key, const std::string& fallback) const {
    return tree_.get<std::string>(key, fallback);
  }

  Index integer(const std::string& key, Index fallback, Index lo) const {
    if (!has(key)) return fallback;
    const Index v = parse_integer(key, tree_.get<std::string>(key));
    if (v < lo) throw ConfigError(key + ": must be at least " + std::to_string(lo));
    return v;
  }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    const std::string s = tree_.get<std::string>(key);
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) throw ConfigError(key + ": '" + s + "' is not a number");
    return v;
  }

  bool boolean(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const std::string s = tree_.get<std::string>(key);
    if (s == "true" || s == "1" || s == "yes") return true;
    if (s == "false" || s == "0" || s == "no") return false;
    throw ConfigError(key + ": '" + s + "' is not a boolean");
  }

  std::vector<Index> list(const std::string& key, const std::vector<Index>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<Index> out;
    std::stringstream ss(tree_.get<std::string>(key));
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_integer(key, trim(item)));
    return out;
  }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t") - b + 1);
  }

  static Index parse_integer(const std::string& key, const std::string& s) {
    Index v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || end != s.data() + s.size()) {
      throw ConfigError(key + ": '" + s + "' is not an integer");
    }
    return v;
  }

  const pt::ptree& tree_;
};

void check_schema(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) throw ConfigError("unknown section [" + section + "]");
    if (section == "manifest") continue;
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside a section");
    for (const auto& kv : body) {
      if (!it->second.count(kv.first)) throw ConfigError("unknown key " + section + "." + kv.first);
    }
  }
}

template <typename F>
auto wrap(const std::string& field, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(field + ": " + e.what());
  }
}

std::vector<Index> default_widths(ProblemKind k) {
  if (k == ProblemKind::Adv) return {40, 64, 64, 64, 64, 64, 64, 64, 16};
  if (k == ProblemKind::Dond) return {};
  return {2, 20, 20, 20, 20, 1};
}

std::string join(const std::vector<Index>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::string fmt(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream is(text);
    pt::read_ini(is, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("malformed config: ") + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  check_schema(tree);
  const Reader r(tree);
  RunConfig c;

  auto& p = c.problem;
  p.kind = parse_problem(r.str("problem.kind", "burgers"));
  p.points = r.integer("problem.points", 1000, 1);
  p.reference_grid = r.integer("problem.reference_grid", 256, 2);
  p.train_samples = r.integer("problem.train_samples", 1000, 1);
  p.test_samples = r.integer("problem.test_samples", 1000, 1);
  p.data_seed = static_cast<std::uint64_t>(r.integer("problem.data_seed", 0, 0));
  p.train_file = r.str("problem.train_file", "");
  p.test_file = r.str("problem.test_file", "");
  p.pod = r.integer("problem.pod", 16, 0);
  p.trunk = r.list("problem.trunk", {});
  if (p.kind == ProblemKind::Dond && (p.train_file.empty() || p.test_file.empty())) {
    throw ConfigError("problem.train_file: dond problems need train_file and test_file");
  }
  if (!is_pinn(p.kind) && p.pod == 0 && p.trunk.empty()) {
    throw ConfigError("problem.trunk: needed when pod = 0");
  }
  if (p.pod > 0 && !p.trunk.empty()) throw ConfigError("problem.trunk: give either pod > 0 or a trunk, not both");

  auto& n = c.network;
  n.widths = r.list("network.widths", default_widths(p.kind));
  if (n.widths.empty()) throw ConfigError("network.widths: required for this problem");
  n.hidden = wrap("network.activation", [&] {
    return parse_activation(r.str("network.activation", p.kind == ProblemKind::Adv ? "relu" : "tanh"));
  });
  n.adaptive_slope = r.boolean("network.adaptive_slope", is_pinn(p.kind));
  n.skip = r.boolean("network.skip", is_pinn(p.kind));
  wrap("network.widths", [&] {
    n.validate();
    return 0;
  });
  if (is_pinn(p.kind) && (n.input_width() != 2 || n.output_width() != 1)) {
    throw ConfigError("network.widths: PINN networks map 2 inputs to 1 output");
  }

  c.optimizer = parse_optimizer(r.str("optimizer.kind", "tl"));
  c.epochs = r.integer("optimizer.epochs", 100, 0);
  c.tolerance = r.real("optimizer.tolerance", 0.0);
  c.lbfgs.memory = r.integer("optimizer.memory", 3, 0);
  c.lbfgs.momentum = r.real("optimizer.momentum", 0.9);
  c.lbfgs.wolfe.c1 = r.real("optimizer.c1", 1e-4);
  c.lbfgs.wolfe.c2 = r.real("optimizer.c2", 0.9);
  c.lbfgs.wolfe.max_evals = static_cast<int>(r.integer("optimizer.max_evals", 25, 1));
  wrap("optimizer", [&] {
    c.lbfgs.validate();
    return 0;
  });
  if (c.tolerance < 0.0) throw ConfigError("optimizer.tolerance: must be non-negative");

  auto& s = c.schwarz;
  s.subdomains = r.integer("schwarz.subdomains", 2, 1);
  s.overlap = r.integer("schwarz.overlap", c.optimizer == OptimizerKind::Tl ? 1 : 0, 0);
  s.local_iters = r.integer("schwarz.local_iters", 50, 0);
  s.coarse_iters = r.integer("schwarz.coarse_iters", c.optimizer == OptimizerKind::Tl ? 25 : 0, 0);
  s.sync = wrap("schwarz.sync", [&] {
    return parse_sync(r.str("schwarz.sync", c.optimizer == OptimizerKind::Sl ? "single-damped" : "sequential"));
  });
  s.global_steps = r.integer("schwarz.global_steps", 1, 1);
  s.gamma_halvings = static_cast<int>(r.integer("schwarz.gamma_halvings", 12, 0));
  s.local_tolerance = r.real("schwarz.local_tolerance", 0.0);
  s.coarse_tolerance = r.real("schwarz.coarse_tolerance", 0.0);
  s.threads = static_cast<int>(r.integer("schwarz.threads", 0, 0));
  s.restart_global = r.boolean("schwarz.restart_global", true);
  if (c.optimizer == OptimizerKind::Sl) {
    if (s.overlap != 0) throw ConfigError("schwarz.overlap: the sl optimizer has no overlap");
    if (s.coarse_iters != 0) throw ConfigError("schwarz.coarse_iters: the sl optimizer has no coarse level");
    if (s.sync != SyncStrategy::SingleDamped) throw ConfigError("schwarz.sync: the sl optimizer uses single-damped");
  }
  wrap("schwarz", [&] {
    c.resolved_schwarz().validate();
    return 0;
  });
  if (c.optimizer != OptimizerKind::Lbfgs) {
    const SchwarzConfig rs = c.resolved_schwarz();
    wrap("schwarz.subdomains", [&] {
      if (p.pod == 0 && !is_pinn(p.kind)) {
        DonSpec d;
        d.branch = n;
        d.trunk = NetworkSpec::mlp(p.trunk, n.hidden);
        d.latent = p.trunk.back();
        return decompose(d, rs.subdomains, rs.overlap).subdomains;
      }
      return decompose(n, rs.subdomains, rs.overlap).subdomains;
    });
  }

  std::vector<Index> seeds = r.list("run.seeds", {1});
  if (seeds.empty()) throw ConfigError("run.seeds: at least one seed");
  c.seeds.clear();
  for (Index v : seeds) {
    if (v < 0) throw ConfigError("run.seeds: seeds must be non-negative");
    c.seeds.push_back(static_cast<std::uint64_t>(v));
  }
  c.output = r.str("run.output", "run");
  if (c.output.empty()) throw ConfigError("run.output: must not be empty");
  c.wall_clock = r.boolean("run.wall_clock", true);
  return c;
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

std::string render_config(const RunConfig& c) {
  std::ostringstream os;
  const auto& p = c.problem;
  os << "[problem]\n";
  os << "kind = " << to_string(p.kind) << "\n";
  if (is_pinn(p.kind)) {
    os << "points = " << p.points << "\n";
    os << "reference_grid = " << p.reference_grid << "\n";
  } else {
    if (p.kind == ProblemKind::Adv) {
      os << "train_samples = " << p.train_samples << "\n";
      os << "test_samples = " << p.test_samples << "\n";
      os << "data_seed = " << p.data_seed << "\n";
    } else {
      os << "train_file = " << p.train_file << "\n";
      os << "test_file = " << p.test_file << "\n";
    }
    os << "pod = " << p.pod << "\n";
    if (!p.trunk.empty()) os << "trunk = " << join(p.trunk) << "\n";
  }
  const auto& n = c.network;
  os << "\n[network]\n";
  os << "widths = " << join(n.widths) << "\n";
  os << "activation = " << to_string(n.hidden) << "\n";
  os << "adaptive_slope = " << (n.adaptive_slope ? "true" : "false") << "\n";
  os << "skip = " << (n.skip ? "true" : "false") << "\n";

  os << "\n[optimizer]\n";
  os << "kind = " << to_string(c.optimizer) << "\n";
  os << "epochs = " << c.epochs << "\n";
  os << "tolerance = " << fmt(c.tolerance) << "\n";
  os << "memory = " << c.lbfgs.memory << "\n";
  os << "momentum = " << fmt(c.lbfgs.momentum) << "\n";
  os << "c1 = " << fmt(c.lbfgs.wolfe.c1) << "\n";
  os << "c2 = " << fmt(c.lbfgs.wolfe.c2) << "\n";
  os << "max_evals = " << c.lbfgs.wolfe.max_evals << "\n";

  if (c.optimizer != OptimizerKind::Lbfgs) {
    const auto& s = c.schwarz;
    os << "\n[schwarz]\n";
    os << "subdomains = " << s.subdomains << "\n";
    os << "overlap = " << s.overlap << "\n";
    os << "local_iters = " << s.local_iters << "\n";
    os << "coarse_iters = " << s.coarse_iters << "\n";
    os << "sync = " << to_string(s.sync) << "\n";
    os << "global_steps = " << s.global_steps << "\n";
    os << "gamma_halvings = " << s.gamma_halvings << "\n";
    os << "local_tolerance = " << fmt(s.local_tolerance) << "\n";
    os << "coarse_tolerance = " << fmt(s.coarse_tolerance) << "\n";
    os << "threads = " << s.threads << "\n";
    os << "restart_global = " << (s.restart_global ? "true" : "false") << "\n";
  }

  os << "\n[run]\n";
  std::vector<Index> seeds(c.seeds.begin(), c.seeds.end());
  os << "seeds = " << join(seeds) << "\n";
  os << "output = " << c.output << "\n";
  os << "wall_clock = " << (c.wall_clock ? "true" : "false") << "\n";
  return os.str();
}

}  // namespace tlas::cli
