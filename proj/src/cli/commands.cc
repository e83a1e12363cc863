#include "dfgan/cli.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "dfgan/checkpoint.h"
#include "dfgan/errors.h"
#include "dfgan/gradcheck_suite.h"
#include "dfgan/plot.h"
#include "dfgan/theory.h"

namespace dfgan {

namespace fs = std::filesystem;
using OJson = nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kSampleStream = 6;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void write_samples(const fs::path& path, const RealMatrix& samples) {
  std::ostringstream os;
  for (Eigen::Index c = 0; c < samples.cols(); ++c) os << (c ? ",x" : "x") << c;
  os << '\n';
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    for (Eigen::Index c = 0; c < samples.cols(); ++c) {
      os << (c ? "," : "") << format_real(samples(i, c));
    }
    os << '\n';
  }
  write_file(path, os.str());
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const DegenerateBatchError*>(&e)) {
    return kExitUsage;
  }
  return kExitNumeric;
}

std::string csv_cell(const OJson& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string quoted = "\"";
  for (char c : s) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

void set_path(OJson& doc, const std::string& dotted, const OJson& value) {
  OJson* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot - start);
    if (key.empty()) throw ConfigError("sweep axis '" + dotted + "' has an empty component");
    if (!node->is_object()) throw ConfigError("sweep axis '" + dotted + "' crosses a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key)) (*node)[key] = OJson::object();
    node = &(*node)[key];
    start = dot + 1;
  }
}

void print_record(std::ostream& os, const MetricsRecord& r) {
  os << "iter " << r.iter << "  loss_d " << r.loss_d << "  loss_g " << r.loss_g << "  grad_norm_g "
     << r.grad_norm_g << "  hist_jsd " << r.hist_jsd << "  modes " << r.modes_covered
     << "  hq " << r.hq_fraction << '\n';
}

}  // namespace

fs::path RunPaths::checkpoint(std::size_t iter) const {
  return checkpoint_dir() / ("iter_" + std::to_string(iter) + ".ckpt");
}

std::vector<MetricsRecord> run_experiment(const RunConfig& cfg, const fs::path& out_dir,
                                          const std::optional<fs::path>& resume, std::ostream* log) {
  cfg.validate();
  const RunPaths paths{out_dir};
  fs::create_directories(paths.checkpoint_dir());

  const TrainData data = make_train_data(cfg);
  TrainState state = init_state(cfg.train, cfg.model);
  if (resume) {
    restore_state(state, load_checkpoint(*resume));
    if (state.iteration > cfg.train.iters) {
      throw ConfigError("checkpoint iteration " + std::to_string(state.iteration) +
                        " exceeds train.iters");
    }
  }

  OJson manifest;
  manifest["config"] = config_to_json(cfg);
  manifest["code_version"] = kCodeVersion;
  manifest["rng_generator"] = std::string(Rng::kGeneratorId);
  manifest["started_at"] = utc_now();
  manifest["finished_at"] = nullptr;
  manifest["status"] = "running";
  manifest["resumed_from"] = resume ? OJson(resume->string()) : OJson(nullptr);
  manifest["start_iteration"] = state.iteration;
  manifest["outputs"] = {{"config", "config.json"},
                         {"metrics", "metrics.csv"},
                         {"samples", "samples.csv"},
                         {"final_checkpoint", "final.ckpt"},
                         {"checkpoints", "checkpoints"}};
  write_file(paths.manifest(), manifest.dump(2) + "\n");
  write_file(paths.config(), normalized_config(cfg));

  CsvSink sink(paths.metrics(), resume.has_value());
  TrainHooks hooks;
  hooks.on_record = [&](const MetricsRecord& r) {
    sink.emit(r);
    if (log) print_record(*log, r);
  };
  hooks.on_iteration = [&](const TrainState& s) {
    if (cfg.checkpoint_every > 0 && s.iteration % cfg.checkpoint_every == 0) {
      save_checkpoint(paths.checkpoint(s.iteration), checkpoint_from_state(s));
    }
  };

  std::vector<MetricsRecord> records;
  try {
    records = run_training(cfg.train, cfg.metrics, data, state, hooks);
    save_checkpoint(paths.final_checkpoint(), checkpoint_from_state(state));
    Rng sample_rng(mix_seed(cfg.train.seed, kSampleStream));
    write_samples(paths.samples(), generate_samples(state, cfg.metrics.eval_samples, sample_rng));
  } catch (const std::exception& e) {
    manifest["finished_at"] = utc_now();
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    write_file(paths.manifest(), manifest.dump(2) + "\n");
    throw;
  }
  manifest["finished_at"] = utc_now();
  manifest["status"] = "completed";
  manifest["end_iteration"] = state.iteration;
  write_file(paths.manifest(), manifest.dump(2) + "\n");
  return records;
}

RunConfig config_from_manifest(const fs::path& run_dir) {
  const fs::path path = RunPaths{run_dir}.manifest();
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!manifest.contains("config")) throw ConfigError(path.string() + ": no config snapshot");
  return parse_config(manifest["config"].dump());
}

SweepSpec parse_sweep(const std::string& document) {
  OJson root;
  try {
    root = OJson::parse(document);
  } catch (const OJson::parse_error& e) {
    throw ConfigError(std::string("sweep grid parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("sweep grid must be a JSON object");
  SweepSpec spec;
  for (auto it = root.begin(); it != root.end(); ++it) {
    if (it.key() == "base") {
      if (!it->is_object()) throw ConfigError("sweep base must be an object");
      spec.base = *it;
    } else if (it.key() == "axes") {
      if (!it->is_object()) throw ConfigError("sweep axes must be an object");
      for (auto ax = it->begin(); ax != it->end(); ++ax) {
        if (!ax->is_array() || ax->empty()) {
          throw ConfigError("sweep axis '" + ax.key() + "' must be a non-empty array");
        }
        spec.axes.emplace_back(ax.key(), std::vector<OJson>(ax->begin(), ax->end()));
      }
    } else {
      throw ConfigError("unknown key '" + it.key() + "' in sweep grid");
    }
  }
  return spec;
}

std::vector<SweepCell> run_sweep(const SweepSpec& spec, const fs::path& out_dir, std::size_t jobs) {
  std::size_t total = 1;
  for (const auto& axis : spec.axes) total *= axis.second.size();
  fs::create_directories(out_dir);

  std::vector<SweepCell> cells(total);
  for (std::size_t i = 0; i < total; ++i) {
    cells[i].index = i;
    std::size_t rest = i;
    cells[i].values.resize(spec.axes.size());
    for (std::size_t a = spec.axes.size(); a-- > 0;) {
      const auto& values = spec.axes[a].second;
      cells[i].values[a] = values[rest % values.size()];
      rest /= values.size();
    }
    char name[32];
    std::snprintf(name, sizeof(name), "cell_%04zu", i);
    cells[i].dir = out_dir / name;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < total; i = next++) {
      SweepCell& cell = cells[i];
      try {
        OJson doc = spec.base;
        for (std::size_t a = 0; a < spec.axes.size(); ++a) {
          set_path(doc, spec.axes[a].first, cell.values[a]);
        }
        fs::create_directories(cell.dir);
        const RunConfig cfg = parse_config(doc.dump());
        const auto records = run_experiment(cfg, cell.dir);
        cell.terminal = records.back();
      } catch (const std::exception& e) {
        cell.error = e.what();
        cell.status = exit_code_for(e);
        std::error_code ec;
        fs::create_directories(cell.dir, ec);
        std::ofstream(cell.dir / "error.txt") << cell.error << '\n';
      }
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(jobs, 1, total);
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream summary;
  summary << "cell";
  for (const auto& axis : spec.axes) summary << ',' << axis.first;
  summary << ",status," << kMetricsCsvHeader << '\n';
  for (const SweepCell& cell : cells) {
    summary << cell.index;
    for (const OJson& v : cell.values) summary << ',' << csv_cell(v);
    summary << ',' << (cell.error.empty() ? "ok" : "failed") << ',';
    if (cell.terminal) {
      summary << to_csv_row(*cell.terminal);
    } else {
      summary << std::string(9, ',');
    }
    summary << '\n';
  }
  write_file(out_dir / "summary.csv", summary.str());
  return cells;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Distribution-filtering GAN toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_path;
  std::string resume_path;
  auto* train = app.add_subcommand("train", "Train a model and write a run directory");
  train->add_option("--config", config_path, "JSON config file (defaults when omitted)");
  train->add_option("--out", out_path, "Output directory")->required();
  train->add_option("--resume", resume_path, "Checkpoint to continue from");

  std::string run_dir;
  auto* reproduce = app.add_subcommand("reproduce", "Re-run a run directory and compare metrics");
  reproduce->add_option("--run", run_dir, "Existing run directory")->required();
  reproduce->add_option("--out", out_path, "Output directory for the re-run")->required();

  TheoremOptions verify_opts;
  std::uint64_t verify_seed = 0;
  long long trials = static_cast<long long>(verify_opts.trials);
  auto* verify = app.add_subcommand("verify", "Check filtered-distribution matching on random tori");
  verify->add_option("--trials", trials, "Number of random trials");
  verify->add_option("--max-grid", verify_opts.max_grid, "Largest number of grid cells")
      ->check(CLI::Range(std::size_t{2}, std::size_t{4096}));
  verify->add_flag("--include-degenerate", verify_opts.include_degenerate,
                   "Add constructed degenerate noise distributions");
  verify->add_option("--seed", verify_seed, "Random seed");

  std::string component;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--component", component, "Restrict to one component or prefix");

  std::string grid_path;
  std::size_t jobs = 1;
  auto* sweep = app.add_subcommand("sweep", "Run a grid of configurations");
  sweep->add_option("--grid", grid_path, "Sweep grid JSON")->required();
  sweep->add_option("--out", out_path, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Cells run in parallel")->check(CLI::PositiveNumber);

  std::string csv_path;
  PlotOptions plot_opts;
  auto* plot = app.add_subcommand("plot", "Render metrics.csv as SVG");
  plot->add_option("--csv", csv_path, "Metrics CSV")->required();
  plot->add_option("--out", out_path, "Output SVG path")->required();
  plot->add_flag("--log-grad", plot_opts.log_grad_norm, "Log scale for grad_norm_g");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) {
      RunConfig cfg = config_path.empty() ? parse_config("") : load_config(config_path);
      apply_seed_override(cfg, std::getenv("DFGAN_SEED"));
      std::optional<fs::path> resume;
      if (!resume_path.empty()) resume = resume_path;
      const auto records = run_experiment(cfg, out_path, resume, &out);
      out << "wrote " << records.size() << " metrics rows to "
          << RunPaths{out_path}.metrics().string() << '\n';
      return kExitOk;
    }
    if (*reproduce) {
      const RunConfig cfg = config_from_manifest(run_dir);
      run_experiment(cfg, out_path);
      const std::string a = read_file(RunPaths{run_dir}.metrics());
      const std::string b = read_file(RunPaths{out_path}.metrics());
      if (a == b) {
        out << "metrics.csv reproduced byte-identically (" << a.size() << " bytes)\n";
        return kExitOk;
      }
      std::size_t at = 0;
      while (at < a.size() && at < b.size() && a[at] == b[at]) ++at;
      out << "metrics.csv differs from the original at byte " << at << '\n';
      return kExitVerification;
    }
    if (*verify) {
      if (trials < 1) {
        err << "verify: --trials must be >= 1\n";
        return kExitUsage;
      }
      verify_opts.trials = static_cast<std::size_t>(trials);
      Rng rng(verify_seed);
      const auto start = std::chrono::steady_clock::now();
      const TheoremReport report = verify_theorem(verify_opts, rng);
      const double ms =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
              .count();
      OJson doc;
      doc["trials"] = report.trials;
      doc["passed"] = report.passed;
      doc["max_grid"] = verify_opts.max_grid;
      doc["residual_tolerance"] = verify_opts.residual_tolerance;
      doc["worst_residual"] = report.worst_residual;
      doc["worst_condition"] = report.worst_condition;
      doc["degenerate_total"] = report.degenerate_total;
      doc["degenerate_flagged"] = report.degenerate_flagged;
      doc["failures"] = report.failures;
      doc["runtime_ms"] = ms;
      doc["result"] = report.ok() ? "pass" : "fail";
      out << doc.dump(2) << '\n';
      return report.ok() ? kExitOk : kExitVerification;
    }
    if (*gradcheck) {
      const auto results = run_gradcheck_suite(component);
      bool all = true;
      for (const auto& r : results) {
        char line[160];
        std::snprintf(line, sizeof(line), "%-34s max_rel_error %.3e  %s", r.name.c_str(),
                      r.result.max_rel_error, r.passed() ? "ok" : "FAIL");
        out << line;
        if (!r.passed()) {
          out << "  (" << r.result.worst_param << "[" << r.result.worst_index << "] analytic "
              << r.result.worst_analytic << " numeric " << r.result.worst_numeric << ")";
        }
        out << '\n';
        all = all && r.passed();
      }
      return all ? kExitOk : kExitVerification;
    }
    if (*sweep) {
      const auto cells = run_sweep(parse_sweep(read_file(grid_path)), out_path, jobs);
      int status = kExitOk;
      for (const auto& c : cells) {
        if (!c.error.empty()) {
          err << "cell " << c.index << " failed: " << c.error << '\n';
          status = std::max(status, c.status);
        }
      }
      out << "ran " << cells.size() << " cells; summary at "
          << (fs::path(out_path) / "summary.csv").string() << '\n';
      return status;
    }
    if (*plot) {
      plot_metrics(csv_path, out_path, plot_opts);
      out << "wrote " << out_path << '\n';
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e);
  }
  return kExitUsage;
}

}  // namespace dfgan
