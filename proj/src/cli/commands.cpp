#include "tlas/cli/commands.hpp"

#include "tlas/problems/adv.hpp"
#include "tlas/problems/hammersley.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace tlas::cli {

namespace fs = std::filesystem;

namespace {

std::string seed_csv(const std::string& dir, std::uint64_t seed) {
  return (fs::path(dir) / ("seed_" + std::to_string(seed) + ".csv")).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << text;
  if (!os) throw Error("write to '" + path + "' failed");
}

std::string manifest_text(const RunConfig& cfg) {
  const std::string config = render_config(cfg);
  std::ostringstream os;
  os << config << "\n[manifest]\n";
  os << "config_sha1 = " << git_blob_sha1(config) << "\n";
  if (cfg.problem.kind == ProblemKind::Dond) {
    os << "train_file_sha1 = " << git_blob_sha1(read_file(cfg.problem.train_file)) << "\n";
    os << "test_file_sha1 = " << git_blob_sha1(read_file(cfg.problem.test_file)) << "\n";
  }
  return os.str();
}

std::string problem_block(const RunConfig& cfg) {
  const std::string text = render_config(cfg);
  return text.substr(0, text.find("\n[network]"));
}

}  // namespace

std::vector<RunResult> cmd_train(const RunConfig& cfg, int workers, std::ostream& log) {
  fs::create_directories(cfg.output);
  const Experiment experiment(cfg);
  std::vector<RunResult> results = run_seeds(experiment, workers);
  const Index gammas = gamma_columns(cfg);
  for (const auto& r : results) {
    write_run_csv(seed_csv(cfg.output, r.seed), r, gammas);
    const RunRow& last = r.rows.back();
    log << "seed " << r.seed << ": epochs " << last.epoch << ", loss " << format_number(last.loss) << ", rel_error "
        << format_number(last.rel_error) << ", g_e " << format_number(last.cum_ge) << ", UC " << last.cum_uc;
    if (r.violations > 0) log << ", monotonicity violations " << r.violations;
    log << "\n";
  }
  write_text((fs::path(cfg.output) / "manifest.ini").string(), manifest_text(cfg));
  return results;
}

void cmd_gendata(const GendataOptions& opts, std::ostream& log) {
  if (opts.train_samples < 1 || opts.test_samples < 1) throw ConfigError("sample counts must be positive");
  if (opts.grid < 2) throw ConfigError("grid must have at least 2 points per axis");
  fs::create_directories(opts.output);
  const DonDataset all = gen_adv_dataset(opts.train_samples + opts.test_samples, opts.seed, opts.grid);
  const std::pair<const char*, DonDataset> splits[] = {{"train", all.slice(0, opts.train_samples)},
                                                       {"test", all.slice(opts.train_samples, opts.test_samples)}};
  for (const auto& [name, data] : splits) {
    const fs::path file = fs::path(opts.output) / ("adv_" + std::string(name) + ".dond");
    write_dond(file.string(), data);
    nlohmann::ordered_json meta;
    meta["format"] = "DOND";
    meta["version"] = kDondVersion;
    meta["problem"] = "adv";
    meta["split"] = name;
    meta["seed"] = opts.seed;
    meta["samples"] = data.samples();
    meta["sensors"] = data.sensors();
    meta["points"] = data.points();
    meta["dim"] = data.dim();
    meta["grid"] = opts.grid;
    meta["first_sample"] = name == std::string("train") ? 0 : opts.train_samples;
    meta["metadata"] = all.metadata;
    const AdvRanges ranges;
    meta["ranges"] = {{"a", ranges.a}, {"h1", ranges.h1}, {"h2", ranges.h2},
                      {"c1", ranges.c1}, {"c2", ranges.c2}, {"w", ranges.w}};
    meta["sha1"] = git_blob_sha1(read_file(file.string()));
    write_text(file.string() + ".json", meta.dump(2) + "\n");
    log << "wrote " << file.string() << " (" << data.samples() << " samples)\n";
  }
}

NtkReport cmd_ntk(const RunConfig& cfg, const NtkOptions& opts, std::ostream& log) {
  if (opts.samples < 1 || opts.points < 1) throw ConfigError("sample and point counts must be positive");
  const Experiment experiment(cfg);
  const std::uint64_t seed = cfg.seeds.front();
  Vector theta = experiment.initial(seed);
  if (opts.epochs > 0) {
    RunConfig short_run = cfg;
    short_run.epochs = opts.epochs;
    const Experiment trainer(short_run);
    trainer.run(seed, 1, &theta);
  }
  NtkReport report;
  if (const PinnProblem* problem = experiment.pinn()) {
    const Matrix points = hammersley_interior(opts.samples, problem->dim(), problem->lower, problem->upper);
    report = ntk_condition(*problem, cfg.network, theta, points, opts.target);
  } else {
    const DonDataset& test = *experiment.test_data();
    DonSpec spec = *experiment.don();
    const Index ns = std::min(opts.samples, test.samples());
    const Index grid = test.points();
    const Index q = std::min(opts.points, grid);
    std::vector<Index> rows;
    for (Index k = 0; k < q; ++k) rows.push_back(k * grid / q);
    Matrix xi(q, test.dim());
    for (Index k = 0; k < q; ++k) xi.row(k) = test.xi.front().row(rows[static_cast<std::size_t>(k)]);
    if (spec.pod) {
      auto sub = std::make_shared<PodBasis>();
      sub->mean.resize(q);
      sub->basis.resize(q, spec.pod->latent());
      for (Index k = 0; k < q; ++k) {
        sub->mean(k) = spec.pod->mean(rows[static_cast<std::size_t>(k)]);
        sub->basis.row(k) = spec.pod->basis.row(rows[static_cast<std::size_t>(k)]);
      }
      sub->points = xi;
      spec.pod = sub;
    }
    report = ntk_condition(spec, theta, test.y.topRows(ns), xi);
  }
  std::ostringstream csv;
  csv << "scope,layer,dimension,log10_condition,singular\n";
  csv << "all,," << report.dimension << ',' << format_number(report.log10_condition) << ','
      << (report.singular ? 1 : 0) << '\n';
  if (opts.layers) {
    for (std::size_t l = 0; l < report.layer_log10_condition.size(); ++l) {
      csv << "layer," << l << ',' << report.dimension << ',' << format_number(report.layer_log10_condition[l]) << ','
          << (report.layer_singular[l] ? 1 : 0) << '\n';
    }
  }
  if (!opts.output.empty()) {
    const fs::path parent = fs::path(opts.output).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    write_text(opts.output, csv.str());
  }
  log << "NTK dimension " << report.dimension << ", log10 condition " << format_number(report.log10_condition)
      << (report.singular ? " (singular)" : "") << "\n";
  return report;
}

Reach reach_in_rows(const std::vector<RunRow>& rows, double target) {
  for (const auto& r : rows) {
    if (r.epoch > 0 && r.rel_error <= target) return Reach{r.epoch, r.cum_ge, r.cum_uc};
  }
  return {};
}

std::vector<CompareEntry> compare_runs(
    const std::vector<std::pair<std::string, std::vector<std::vector<RunRow>>>>& runs,
    const std::vector<std::uint64_t>& seeds) {
  if (runs.empty()) throw Error("nothing to compare");
  std::vector<CompareEntry> out;
  for (std::size_t s = 0; s < seeds.size(); ++s) {
    const auto& base_rows = runs.front().second.at(s);
    if (base_rows.size() < 2) throw Error("baseline run of seed " + std::to_string(seeds[s]) + " has no epochs");
    const double target = base_rows.back().rel_error;
    const Reach base = reach_in_rows(base_rows, target);
    for (const auto& [name, per_seed] : runs) {
      CompareEntry e;
      e.run = name;
      e.seed = seeds[s];
      e.target = target;
      e.reach = reach_in_rows(per_seed.at(s), target);
      if (e.reach.reached()) {
        e.speedup_ge = speedup(base.gradient_evaluations, e.reach.gradient_evaluations);
        e.speedup_uc = speedup(static_cast<double>(base.update_cost), static_cast<double>(e.reach.update_cost));
      }
      out.push_back(std::move(e));
    }
  }
  return out;
}

std::vector<CompareEntry> cmd_compare(const std::vector<std::string>& inputs, const std::string& output, int workers,
                                      std::ostream& log) {
  if (inputs.empty()) throw ConfigError("compare needs at least one run");
  std::vector<std::pair<std::string, std::vector<std::vector<RunRow>>>> runs;
  std::vector<std::uint64_t> seeds;
  std::string problem;
  for (const auto& input : inputs) {
    RunConfig cfg;
    std::string dir;
    if (fs::is_directory(input)) {
      cfg = load_config((fs::path(input) / "manifest.ini").string());
      dir = input;
    } else {
      cfg = load_config(input);
      cmd_train(cfg, workers, log);
      dir = cfg.output;
    }
    if (runs.empty()) {
      seeds = cfg.seeds;
      problem = problem_block(cfg);
    } else if (problem_block(cfg) != problem) {
      throw ConfigError("'" + input + "' uses a different problem than the baseline");
    }
    std::vector<std::vector<RunRow>> per_seed;
    for (std::uint64_t s : seeds) per_seed.push_back(read_run_csv(seed_csv(dir, s)));
    runs.emplace_back(input, std::move(per_seed));
  }
  std::vector<CompareEntry> entries = compare_runs(runs, seeds);

  std::ostringstream csv;
  csv << "run,seed,target,epoch,cum_ge,cum_uc,speedup_ge,speedup_uc\n";
  log << std::left << std::setw(32) << "run" << std::setw(6) << "seed" << std::setw(14) << "target" << std::setw(14)
      << "g_e" << std::setw(16) << "UC" << std::setw(10) << "S(g_e)" << "S(UC)\n";
  for (const auto& e : entries) {
    csv << e.run << ',' << e.seed << ',' << format_number(e.target) << ',';
    log << std::setw(32) << e.run << std::setw(6) << e.seed << std::setw(14) << format_number(e.target);
    if (e.reach.reached()) {
      csv << e.reach.epoch << ',' << format_number(e.reach.gradient_evaluations) << ',' << e.reach.update_cost << ','
          << format_number(e.speedup_ge) << ',' << format_number(e.speedup_uc) << '\n';
      std::ostringstream ge, sg, su;
      ge << std::setprecision(6) << e.reach.gradient_evaluations;
      sg << std::setprecision(4) << e.speedup_ge;
      su << std::setprecision(4) << e.speedup_uc;
      log << std::setw(14) << ge.str() << std::setw(16) << e.reach.update_cost << std::setw(10) << sg.str() << su.str()
          << "\n";
    } else {
      csv << "not reached,,,,\n";
      log << "not reached\n";
    }
  }
  if (!output.empty()) write_text(output, csv.str());
  return entries;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"tlas: two-level additive Schwarz preconditioned LBFGS for scientific ML"};
  app.require_subcommand(1);

  std::string config_path;
  auto* train = app.add_subcommand("train", "train every seed of a configuration");
  train->add_option("config", config_path, "INI configuration")->required();

  GendataOptions gen;
  auto* gendata = app.add_subcommand("gendata", "generate the advection dataset");
  gendata->add_option("--samples", gen.train_samples, "training samples")->capture_default_str();
  gendata->add_option("--test-samples", gen.test_samples, "test samples")->capture_default_str();
  gendata->add_option("--seed", gen.seed, "parameter seed")->capture_default_str();
  gendata->add_option("--grid", gen.grid, "grid points per axis")->capture_default_str();
  gendata->add_option("-o,--out", gen.output, "output directory")->capture_default_str();

  NtkOptions ntk;
  std::string target = "residual";
  auto* ntkcmd = app.add_subcommand("ntk", "condition number of the neural tangent kernel");
  ntkcmd->add_option("config", config_path, "INI configuration")->required();
  ntkcmd->add_option("--samples", ntk.samples, "PINN points or DON input functions")->capture_default_str();
  ntkcmd->add_option("--points", ntk.points, "DON grid points per input function")->capture_default_str();
  ntkcmd->add_flag("--layer", ntk.layers, "add one row per layer");
  ntkcmd->add_option("--target", target, "PINN output: residual or solution")->capture_default_str();
  ntkcmd->add_option("--epochs", ntk.epochs, "train this many epochs first")->capture_default_str();
  ntkcmd->add_option("-o,--out", ntk.output, "report CSV")->capture_default_str();

  std::vector<std::string> inputs;
  std::string summary;
  auto* compare = app.add_subcommand("compare", "speedups against the first run");
  compare->add_option("runs", inputs, "run directories or configurations; the first is the baseline")->required();
  compare->add_option("-o,--out", summary, "summary CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  int workers = 1;
  try {
    workers = thread_count_from_env();
  } catch (const Error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (*train) {
      const RunConfig cfg = load_config(config_path);
      const auto results = cmd_train(cfg, workers, std::cout);
      for (const auto& r : results) {
        if (r.violations > 0) {
          std::cerr << "error: seed " << r.seed << " broke loss monotonicity\n";
          return 2;
        }
      }
    } else if (*gendata) {
      cmd_gendata(gen, std::cout);
    } else if (*ntkcmd) {
      try {
        ntk.target = parse_ntk_target(target);
      } catch (const Error& e) {
        throw ConfigError(std::string("--target: ") + e.what());
      }
      cmd_ntk(load_config(config_path), ntk, std::cout);
    } else if (*compare) {
      cmd_compare(inputs, summary, workers, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace tlas::cli
