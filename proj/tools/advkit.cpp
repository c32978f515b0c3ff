// advkit command-line front end: gen-data, train, attack, uap, eval, plot.

#include <CLI11.hpp>

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "advkit/advkit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

using namespace advkit;

constexpr std::string_view kManifestFormat = "advkit-manifest-v1";

// ---------------------------------------------------------------------------
// Option registry: binds flags to variables, fills unset ones from a JSON config
// and serializes the resolved values back for the manifest.

class Options {
 public:
  explicit Options(CLI::App* app) : app_(app) {
    app_->add_option("--config", config_path_, "JSON config (flat or an advkit manifest)");
  }

  template <class T>
  CLI::Option* add(const std::string& name, T& var, const std::string& desc) {
    getters_.emplace_back(name, [&var] { return json(var); });
    return app_->add_option("--" + name, var, desc)->capture_default_str();
  }

  CLI::Option* flag(const std::string& name, bool& var, const std::string& desc) {
    getters_.emplace_back(name, [&var] { return json(var); });
    return app_->add_flag("--" + name, var, desc);
  }

  void apply_config() {
    if (config_path_.empty()) return;
    std::ifstream in(config_path_);
    if (!in) throw Error(ErrorKind::io, "cannot read config " + config_path_);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw Error(ErrorKind::parse, config_path_ + ": " + e.what());
    }
    if (j.is_object() && j.value("format", std::string{}) == kManifestFormat) {
      if (j.value("command", std::string{}) != app_->get_name())
        throw Error(ErrorKind::validation, "manifest was written by '" + j.value("command", std::string{}) +
                                               "', not '" + app_->get_name() + "'");
      j = j.at("config");
    }
    if (!j.is_object()) throw Error(ErrorKind::parse, config_path_ + ": config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
      CLI::Option* opt = nullptr;
      try {
        opt = app_->get_option("--" + key);
      } catch (const CLI::OptionNotFound&) {
        throw Error(ErrorKind::validation, "unknown config key '" + key + "'");
      }
      if (opt->count() > 0) continue;  // the command line wins
      if (value.is_array() && opt->get_items_expected_max() > 1) {
        std::vector<std::string> items;
        for (const auto& e : value) items.push_back(scalar_text(key, e));
        opt->add_result(items);
      } else {
        opt->add_result(scalar_text(key, value));
      }
      opt->run_callback();
    }
  }

  json resolved() const {
    json j = json::object();
    for (const auto& [name, get] : getters_) j[name] = get();
    return j;
  }

 private:
  static std::string scalar_text(const std::string& key, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return format_real(v.get<double>());
    if (v.is_array()) {
      std::string s;
      for (const auto& e : v) s += (s.empty() ? "" : ",") + scalar_text(key, e);
      return s;
    }
    throw Error(ErrorKind::parse, "config key '" + key + "' has an unsupported value");
  }

  CLI::App* app_;
  std::string config_path_;
  std::vector<std::pair<std::string, std::function<json()>>> getters_;
};

// ---------------------------------------------------------------------------
// Shared helpers

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw Error(ErrorKind::validation, what + ": '" + item + "' is not a positive integer");
    }
  }
  return out;
}

fs::path require_dir(const std::string& dir) {
  if (dir.empty()) throw Error(ErrorKind::validation, "--out-dir is required");
  if (!fs::is_directory(dir)) throw Error(ErrorKind::io, "output directory does not exist: " + dir);
  return fs::path(dir);
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw Error(ErrorKind::io, "cannot write " + p.string());
  return out;
}

double resolve_eps(double eps, double eps_255) {
  if (eps != 0.0 && eps_255 != 0.0) throw Error(ErrorKind::validation, "give either --eps or --eps-255, not both");
  return eps_255 != 0.0 ? eps_255 / 255.0 : eps;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct Run {
  explicit Run(std::string cmd) : command(std::move(cmd)) {}

  std::string command;
  std::string started = utc_now();
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  json results = json::object();

  void write(const Options& opts, std::uint64_t seed, const fs::path& path) const {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json m{{"format", kManifestFormat},
           {"command", command},
           {"version", kVersion},
           {"seed", seed},
           {"config", opts.resolved()},
           {"inputs", inputs},
           {"outputs", outputs},
           {"results", results},
           {"wall_clock", {{"started_utc", started}, {"elapsed_s", elapsed}}}};
    auto out = open_out(path);
    out << m.dump(2) << '\n';
  }
};

LabeledDataset load_nonempty(const std::string& path) {
  auto d = load_dataset(path);
  if (d.empty()) throw Error(ErrorKind::data, path + " contains no samples");
  return d;
}

void check_compatible(const Classifier& model, const LabeledDataset& d, const std::string& path) {
  if (d.dim() != model.input_dim())
    throw Error(ErrorKind::input_shape, path + ": dimension " + std::to_string(d.dim()) + " but the model expects " +
                                            std::to_string(model.input_dim()));
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataArgs {
  std::uint64_t seed = 0;
  std::size_t classes = 10;
  std::size_t dim = 20;
  std::size_t per_class = 100;
  double spread = 1.0;
  std::size_t embed_dim = 0;
  double embed_noise = 0.0;
  double test_fraction = 0.25;
  std::string idx_images, idx_labels;
  std::size_t limit = 0;
  std::string out_dir;
};

void cmd_gen_data(const GenDataArgs& a, const Options& opts) {
  Run run("gen-data");
  const auto dir = require_dir(a.out_dir);
  LabeledDataset data;
  if (!a.idx_images.empty() || !a.idx_labels.empty()) {
    if (a.idx_images.empty() || a.idx_labels.empty())
      throw Error(ErrorKind::validation, "--idx-images and --idx-labels must be given together");
    data = load_idx(a.idx_images, a.idx_labels);
    data.seed = a.seed;
    run.inputs = {a.idx_images, a.idx_labels};
    if (a.limit > 0) data = subsample(data, a.limit, derive_seed(a.seed, "limit"));
  } else {
    data = gen_blobs(a.seed, a.classes, a.dim, a.per_class, a.spread);
    if (a.embed_dim > 0) data = embed_isometric(data, a.embed_dim, a.embed_noise, a.seed);
  }
  data.validate();
  auto [train, test] = split(data, a.test_fraction, derive_seed(a.seed, "split"));
  for (const auto& [name, part] : {std::pair{"train", &train}, std::pair{"test", &test}}) {
    const auto json_path = dir / (std::string(name) + ".json");
    const auto csv_path = dir / (std::string(name) + ".csv");
    save_dataset(*part, json_path.string());
    auto csv = open_out(csv_path);
    write_dataset_csv(csv, *part);
    run.outputs.push_back(json_path.string());
    run.outputs.push_back(csv_path.string());
  }
  run.results = {{"n_train", train.size()}, {"n_test", test.size()}, {"num_classes", data.num_classes},
                 {"dim", data.dim()}};
  run.write(opts, a.seed, dir / "gen-data.manifest.json");
  std::cout << "wrote " << train.size() << " train / " << test.size() << " test samples to " << dir.string() << '\n';
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string train, test;
  std::string hidden = "64";
  std::size_t epochs = 50;
  double lr = 0.05;
  std::size_t batch = 32;
  std::uint64_t seed = 0;
  std::string out_dir;
};

void cmd_train(const TrainArgs& a, const Options& opts) {
  Run run("train");
  const auto dir = require_dir(a.out_dir);
  const auto train = load_nonempty(a.train);
  run.inputs.push_back(a.train);
  std::vector<std::size_t> widths{train.dim()};
  for (std::size_t h : parse_size_list(a.hidden, "--hidden")) widths.push_back(h);
  widths.push_back(train.num_classes);

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.learning_rate = a.lr;
  cfg.batch_size = a.batch;
  cfg.seed = derive_seed(a.seed, "train");
  const auto trained = train_classifier(train, widths, cfg);

  const auto model_path = dir / "model.json";
  save_classifier(trained.model, model_path.string());
  const auto csv_path = dir / "train_report.csv";
  auto csv = open_out(csv_path);
  csv << "split,n_samples,accuracy\n"
      << "train," << train.size() << ',' << format_real(trained.train_accuracy) << '\n';
  run.results["train_accuracy"] = trained.train_accuracy;
  if (!a.test.empty()) {
    const auto test = load_nonempty(a.test);
    check_compatible(trained.model, test, a.test);
    run.inputs.push_back(a.test);
    const double acc = accuracy(trained.model, test);
    csv << "test," << test.size() << ',' << format_real(acc) << '\n';
    run.results["test_accuracy"] = acc;
    std::cout << "test accuracy " << acc << '\n';
  }
  run.outputs = {model_path.string(), csv_path.string()};
  run.write(opts, a.seed, dir / "train.manifest.json");
  std::cout << "train accuracy " << trained.train_accuracy << "; model written to " << model_path.string() << '\n';
}

// ---------------------------------------------------------------------------
// attack

struct AttackArgs {
  std::string model, data;
  std::string attack = "kfool";
  std::size_t k = 1;
  std::string norm = "l2";
  double eps = 0.0;
  double eps_255 = 0.0;
  std::size_t max_iter = 100;
  double overshoot = 0.02;
  bool clamp = false;
  std::size_t pgd_steps = 50;
  double pgd_step_size = 0.01;
  std::string k_values;
  std::size_t limit = 0;
  std::uint64_t seed = 0;
  bool timing = false;
  std::string out_dir;
};

void cmd_attack(const AttackArgs& a, const Options& opts) {
  Run run("attack");
  const auto dir = require_dir(a.out_dir);
  const auto kind = parse_attack(a.attack);
  const auto model = load_classifier(a.model);
  auto data = load_nonempty(a.data);
  check_compatible(model, data, a.data);
  run.inputs = {a.model, a.data};
  if (a.limit > 0) data = subsample(data, a.limit, derive_seed(a.seed, "limit"));

  AttackConfig cfg;
  cfg.k = a.k;
  cfg.norm = parse_norm(a.norm);
  cfg.eps = resolve_eps(a.eps, a.eps_255);
  cfg.max_iter = a.max_iter;
  cfg.overshoot = a.overshoot;
  cfg.clamp_pixels = a.clamp;
  cfg.pgd_steps = a.pgd_steps;
  cfg.pgd_step_size = a.pgd_step_size;
  cfg.validate(model.num_classes());

  auto k_values = parse_size_list(a.k_values, "--k-values");
  if (k_values.empty())
    for (std::size_t k = 1; k <= std::min(model.num_classes(), std::max<std::size_t>(a.k, 5)); ++k)
      k_values.push_back(k);

  const auto labels = clean_predictions(model, data);
  std::vector<PerturbationResult> results;
  results.reserve(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    results.push_back(run_attack(kind, model, data.point(i), labels[i], cfg));
    if (!a.timing) results.back().elapsed_s = 0.0;
  }
  const auto report = build_report(model, data, results, k_values, std::string(to_string(kind)), a.seed);

  const auto samples_path = dir / "samples.csv";
  {
    auto out = open_out(samples_path);
    out << "index,label,success,iterations,l2,linf,time_s\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
      const auto& r = results[i];
      out << i << ',' << labels[i] << ',' << (r.success ? 1 : 0) << ',' << r.iterations << ','
          << format_real(r.l2_norm) << ',' << format_real(r.linf_norm) << ',' << format_real(r.elapsed_s) << '\n';
    }
  }
  const auto report_path = dir / "report.csv";
  {
    auto out = open_out(report_path);
    write_report_csv(out, report_rows(report));
  }
  run.outputs = {samples_path.string(), report_path.string()};
  for (const auto& [k, fr] : report.fr_table) run.results["FR"][std::to_string(k)] = fr;
  run.results["rho2"] = report.rho2;
  run.results["rhoinf"] = report.rhoinf;
  run.results["failures"] = report.failures;
  run.write(opts, a.seed, dir / "attack.manifest.json");

  std::cout << to_string(kind) << " on " << data.size() << " samples:";
  for (const auto& [k, fr] : report.fr_table) std::cout << " FR_" << k << '=' << fr;
  std::cout << " rho2=" << report.rho2 << " rhoinf=" << report.rhoinf << '\n';
}

// ---------------------------------------------------------------------------
// uap

struct UapArgs {
  std::string model, train, test;
  std::size_t k = 1;
  double eps = 0.0;
  double eps_255 = 0.0;
  std::string norm = "linf";
  double delta = 0.2;
  std::size_t epochs = 10;
  std::string inner = "kfool";
  std::size_t max_iter = 100;
  double overshoot = 0.02;
  std::string sizes;
  std::string k_values;
  std::uint64_t seed = 0;
  std::string out_dir;
};

void cmd_uap(const UapArgs& a, const Options& opts) {
  Run run("uap");
  const auto dir = require_dir(a.out_dir);
  const auto model = load_classifier(a.model);
  const auto train = load_nonempty(a.train);
  const auto test = load_nonempty(a.test);
  check_compatible(model, train, a.train);
  check_compatible(model, test, a.test);
  run.inputs = {a.model, a.train, a.test};

  KuapConfig cfg;
  cfg.k = a.k;
  cfg.eps = resolve_eps(a.eps, a.eps_255);
  cfg.norm = parse_norm(a.norm);
  cfg.delta = a.delta;
  cfg.max_epochs = a.epochs;
  cfg.inner_attack = parse_inner(a.inner);
  cfg.inner.max_iter = a.max_iter;
  cfg.inner.overshoot = a.overshoot;
  cfg.shuffle_seed = derive_seed(a.seed, "uap-shuffle");
  cfg.validate(model.num_classes());

  auto sizes = parse_size_list(a.sizes, "--sizes");
  if (sizes.empty()) sizes.push_back(train.size());
  auto k_values = parse_size_list(a.k_values, "--k-values");
  if (k_values.empty()) k_values.push_back(a.k);
  for (std::size_t k : k_values)
    if (k > model.num_classes()) throw Error(ErrorKind::validation, "--k-values entries must be <= C");

  std::vector<SweepRow> rows;
  UniversalPerturbation last;
  for (std::size_t n : sizes) {
    if (n > train.size())
      throw Error(ErrorKind::validation, "--sizes entry " + std::to_string(n) + " exceeds the " +
                                             std::to_string(train.size()) + " training samples");
    const auto subset = subsample(train, n, derive_seed(a.seed, "uap-size-" + std::to_string(n)));
    last = universal_search(model, subset, cfg);
    for (std::size_t k : k_values)
      rows.push_back({n, k, evaluate_universal(model, test, last.v, k), evaluate_universal(model, subset, last.v, k),
                      last.epochs_run, a.seed});
  }

  const auto uap_path = dir / "uap.json";
  save_universal(last, uap_path.string());
  const auto sweep_path = dir / "sweep.csv";
  {
    auto out = open_out(sweep_path);
    write_sweep_csv(out, rows);
  }
  run.outputs = {uap_path.string(), sweep_path.string()};
  run.results["inner_failures"] = last.inner_failures;
  run.results["updates"] = last.updates;
  run.write(opts, a.seed, dir / "uap.manifest.json");
  for (const auto& r : rows)
    std::cout << "train_size=" << r.train_size << " UFR_" << r.k << " test=" << r.ufr_test << " train=" << r.ufr_train
              << " epochs=" << r.epochs_run << '\n';
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string model, data, uap;
  std::string k_values;
  std::uint64_t seed = 0;
  std::string out_dir;
};

void cmd_eval(const EvalArgs& a, const Options& opts) {
  Run run("eval");
  const auto dir = require_dir(a.out_dir);
  const auto model = load_classifier(a.model);
  const auto data = load_nonempty(a.data);
  check_compatible(model, data, a.data);
  run.inputs = {a.model, a.data};

  auto k_values = parse_size_list(a.k_values, "--k-values");
  if (k_values.empty())
    for (std::size_t k = 1; k <= std::min<std::size_t>(model.num_classes(), 5); ++k) k_values.push_back(k);

  const auto csv_path = dir / "eval.csv";
  auto out = open_out(csv_path);
  out << "metric,k,value\n";
  for (std::size_t k : k_values) {
    if (k > model.num_classes()) throw Error(ErrorKind::validation, "--k-values entries must be <= C");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
      hits += in_top_k(forward_logits(model, data.inputs[i]), data.labels[i], k);
    const double acc = static_cast<double>(hits) / static_cast<double>(data.size());
    out << "accuracy," << k << ',' << format_real(acc) << '\n';
    run.results["accuracy"][std::to_string(k)] = acc;
  }
  if (!a.uap.empty()) {
    const auto u = load_universal(a.uap);
    run.inputs.push_back(a.uap);
    for (std::size_t k : k_values) {
      const double ufr = evaluate_universal(model, data, u.v, k);
      out << "ufr," << k << ',' << format_real(ufr) << '\n';
      run.results["ufr"][std::to_string(k)] = ufr;
    }
  }
  out.close();
  run.outputs = {csv_path.string()};
  run.write(opts, a.seed, dir / "eval.manifest.json");
  std::cout << "wrote " << csv_path.string() << '\n';
}

// ---------------------------------------------------------------------------
// plot

struct PlotArgs {
  std::vector<std::string> inputs;
  std::string kind = "fr";
  std::string title;
  std::string out;
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot read " + path);
  return in;
}

std::string plot_svg(const PlotArgs& a) {
  if (a.kind == "fr" || a.kind == "rho") {
    std::vector<ReportRow> rows;
    for (const auto& p : a.inputs) {
      auto in = open_in(p);
      try {
        for (auto& r : read_report_csv(in)) rows.push_back(std::move(r));
      } catch (const Error& e) {
        throw Error(e.kind(), p + ": " + e.what());
      }
    }
    if (rows.empty()) throw Error(ErrorKind::data, "empty plot: no report rows");
    if (a.kind == "fr") {
      std::map<std::string, svg::Series> by_attack;
      std::vector<std::string> order;
      for (const auto& r : rows) {
        if (!by_attack.count(r.attack)) order.push_back(r.attack);
        auto& s = by_attack[r.attack];
        s.name = r.attack;
        s.points.emplace_back(static_cast<double>(r.k), r.fr);
      }
      std::vector<svg::Series> series;
      for (const auto& n : order) series.push_back(by_attack[n]);
      return svg::line_chart(a.title.empty() ? "Fooling rate vs k" : a.title, "k", "FR_k", series);
    }
    std::vector<svg::Bar> bars;
    std::vector<std::string> seen;
    for (const auto& r : rows) {
      if (std::find(seen.begin(), seen.end(), r.attack) != seen.end()) continue;
      seen.push_back(r.attack);
      bars.push_back({r.attack, r.rho2});
    }
    return svg::bar_chart(a.title.empty() ? "Average relative L2 norm" : a.title, "rho_2", bars);
  }
  if (a.kind == "ufr-size") {
    std::vector<SweepRow> rows;
    for (const auto& p : a.inputs) {
      auto in = open_in(p);
      try {
        for (auto& r : read_sweep_csv(in)) rows.push_back(r);
      } catch (const Error& e) {
        throw Error(e.kind(), p + ": " + e.what());
      }
    }
    if (rows.empty()) throw Error(ErrorKind::data, "empty plot: no sweep rows");
    std::map<std::size_t, svg::Series> by_k;
    for (const auto& r : rows) {
      auto& s = by_k[r.k];
      s.name = "UFR_" + std::to_string(r.k);
      s.points.emplace_back(static_cast<double>(r.train_size), r.ufr_test);
    }
    std::vector<svg::Series> series;
    for (auto& [k, s] : by_k) series.push_back(std::move(s));
    return svg::line_chart(a.title.empty() ? "Test UFR vs training size" : a.title, "training samples", "UFR",
                           series);
  }
  throw Error(ErrorKind::validation, "unknown plot kind '" + a.kind + "' (expected fr, rho or ufr-size)");
}

void cmd_plot(const PlotArgs& a, const Options& opts) {
  Run run("plot");
  if (a.out.empty()) throw Error(ErrorKind::validation, "--out is required");
  const auto doc = plot_svg(a);
  {
    auto out = open_out(a.out);
    out << doc;
  }
  run.inputs = a.inputs;
  run.outputs = {a.out};
  run.write(opts, 0, a.out + ".manifest.json");
  std::cout << "wrote " << a.out << '\n';
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::degenerate:
    case ErrorKind::cancelled:
    case ErrorKind::generation: return 1;
    default: return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"advkit: Top-k adversarial perturbations and universal perturbations for small classifiers"};
  app.set_version_flag("--version", std::string(advkit::kVersion));
  app.require_subcommand(1);

  GenDataArgs gd;
  auto* gen = app.add_subcommand("gen-data", "Generate a blob dataset or import IDX files, then split");
  Options gen_opts(gen);
  gen_opts.add("seed", gd.seed, "Root seed");
  gen_opts.add("classes", gd.classes, "Number of blob classes");
  gen_opts.add("dim", gd.dim, "Input dimension");
  gen_opts.add("per-class", gd.per_class, "Samples per class");
  gen_opts.add("spread", gd.spread, "Blob standard deviation");
  gen_opts.add("embed-dim", gd.embed_dim, "Embed blobs isometrically into this many dimensions (0 = off)");
  gen_opts.add("embed-noise", gd.embed_noise, "Ambient-space noise standard deviation after embedding");
  gen_opts.add("test-fraction", gd.test_fraction, "Held-out fraction");
  gen_opts.add("idx-images", gd.idx_images, "IDX image file (instead of blobs)");
  gen_opts.add("idx-labels", gd.idx_labels, "IDX label file");
  gen_opts.add("limit", gd.limit, "Keep a seeded subsample of this many IDX samples (0 = all)");
  gen_opts.add("out-dir", gd.out_dir, "Output directory (must exist)");

  TrainArgs tr;
  auto* train = app.add_subcommand("train", "Train an MLP classifier");
  Options train_opts(train);
  train_opts.add("train", tr.train, "Training dataset JSON");
  train_opts.add("test", tr.test, "Optional test dataset JSON");
  train_opts.add("hidden", tr.hidden, "Comma-separated hidden widths (empty = linear)");
  train_opts.add("epochs", tr.epochs, "SGD epochs");
  train_opts.add("lr", tr.lr, "Learning rate");
  train_opts.add("batch", tr.batch, "Minibatch size");
  train_opts.add("seed", tr.seed, "Root seed");
  train_opts.add("out-dir", tr.out_dir, "Output directory (must exist)");

  AttackArgs at;
  auto* attack = app.add_subcommand("attack", "Run a per-sample attack and report FR_k and rho");
  Options attack_opts(attack);
  attack_opts.add("model", at.model, "Model JSON");
  attack_opts.add("data", at.data, "Dataset JSON to attack");
  attack_opts.add("attack", at.attack, "kfool | deepfool | fgsm | topk-pgd");
  attack_opts.add("k", at.k, "Top-k depth");
  attack_opts.add("norm", at.norm, "l2 | linf");
  attack_opts.add("eps", at.eps, "Budget for fgsm / topk-pgd");
  attack_opts.add("eps-255", at.eps_255, "Budget on the 0..255 pixel scale (divided by 255)");
  attack_opts.add("max-iter", at.max_iter, "Iteration cap");
  attack_opts.add("overshoot", at.overshoot, "Overshoot eta");
  attack_opts.flag("clamp", at.clamp, "Clamp to the dataset bounds");
  attack_opts.add("pgd-steps", at.pgd_steps, "PGD steps");
  attack_opts.add("pgd-step-size", at.pgd_step_size, "PGD step size");
  attack_opts.add("k-values", at.k_values, "Comma-separated k values to report (default 1..max(k,5))");
  attack_opts.add("limit", at.limit, "Attack a seeded subsample of this many samples (0 = all)");
  attack_opts.add("seed", at.seed, "Root seed");
  attack_opts.flag("timing", at.timing, "Record wall-clock times (makes CSVs non-reproducible)");
  attack_opts.add("out-dir", at.out_dir, "Output directory (must exist)");

  UapArgs ua;
  auto* uap = app.add_subcommand("uap", "Train a universal perturbation (kUAP or the UAP baseline)");
  Options uap_opts(uap);
  uap_opts.add("model", ua.model, "Model JSON");
  uap_opts.add("train", ua.train, "Training dataset JSON");
  uap_opts.add("test", ua.test, "Held-out dataset JSON");
  uap_opts.add("k", ua.k, "Top-k depth");
  uap_opts.add("eps", ua.eps, "Budget");
  uap_opts.add("eps-255", ua.eps_255, "Budget on the 0..255 pixel scale (divided by 255)");
  uap_opts.add("norm", ua.norm, "l2 | linf");
  uap_opts.add("delta", ua.delta, "Stop once the training UFR exceeds 1 - delta");
  uap_opts.add("epochs", ua.epochs, "Maximum passes over the training data");
  uap_opts.add("inner", ua.inner, "kfool | deepfool");
  uap_opts.add("max-iter", ua.max_iter, "Inner attack iteration cap");
  uap_opts.add("overshoot", ua.overshoot, "Inner attack overshoot");
  uap_opts.add("sizes", ua.sizes, "Comma-separated training-set sizes to sweep");
  uap_opts.add("k-values", ua.k_values, "Comma-separated k values for UFR (default: k)");
  uap_opts.add("seed", ua.seed, "Root seed");
  uap_opts.add("out-dir", ua.out_dir, "Output directory (must exist)");

  EvalArgs ev;
  auto* eval = app.add_subcommand("eval", "Top-k accuracy and, given a perturbation file, UFR_k");
  Options eval_opts(eval);
  eval_opts.add("model", ev.model, "Model JSON");
  eval_opts.add("data", ev.data, "Dataset JSON");
  eval_opts.add("uap", ev.uap, "Universal perturbation JSON");
  eval_opts.add("k-values", ev.k_values, "Comma-separated k values (default 1..5)");
  eval_opts.add("seed", ev.seed, "Root seed");
  eval_opts.add("out-dir", ev.out_dir, "Output directory (must exist)");

  PlotArgs pl;
  auto* plot = app.add_subcommand("plot", "Render report or sweep CSVs as SVG");
  Options plot_opts(plot);
  plot_opts.add("input", pl.inputs, "Input CSV (repeatable)");
  plot_opts.add("kind", pl.kind, "fr | rho | ufr-size");
  plot_opts.add("title", pl.title, "Chart title");
  plot_opts.add("out", pl.out, "Output SVG path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (gen->parsed()) {
      gen_opts.apply_config();
      cmd_gen_data(gd, gen_opts);
    } else if (train->parsed()) {
      train_opts.apply_config();
      cmd_train(tr, train_opts);
    } else if (attack->parsed()) {
      attack_opts.apply_config();
      cmd_attack(at, attack_opts);
    } else if (uap->parsed()) {
      uap_opts.apply_config();
      cmd_uap(ua, uap_opts);
    } else if (eval->parsed()) {
      eval_opts.apply_config();
      cmd_eval(ev, eval_opts);
    } else if (plot->parsed()) {
      plot_opts.apply_config();
      cmd_plot(pl, plot_opts);
    }
  } catch (const advkit::Error& e) {
    std::cerr << "error [" << advkit::to_string(e.kind()) << "]: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const CLI::Error& e) {
    std::cerr << "error [usage]: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
