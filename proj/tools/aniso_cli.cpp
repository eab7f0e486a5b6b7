// Command-line entry point for the probing pipeline.
//
// Exit codes: 0 success, 1 validation error, 2 infeasible probes present,
// 3 internal error.

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "aniso/aniso.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitInternal = 3;

/// Flags bound to optionals so that only flags actually given override the
/// config file.
struct RunFlags {
  std::string config;
  std::optional<std::string> catalog, output, exchange;
  std::optional<std::vector<double>> sizes;
  std::optional<int> crop, margin;
  std::optional<std::vector<int>> offsets;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;

  void attach(CLI::App* sub) {
    sub->add_option("-c,--config", config, "JSON config file (overrides defaults)");
    sub->add_option("--catalog", catalog, "Catalog root directory");
    sub->add_option("-o,--output", output, "Run output root");
    sub->add_option("--exchange", exchange, "Detector exchange directory (default <output>/exchange)");
    sub->add_option("--sizes", sizes, "Target sizes as proportions of the crop")->delimiter(',');
    sub->add_option("--crop", crop, "Crop dimension in pixels");
    sub->add_option("--margin", margin, "Border margin suppressed at sampling time");
    sub->add_option("--offsets", offsets, "Master offset list")->delimiter(',');
    sub->add_option("--seed", seed, "Experiment seed");
    sub->add_option("-j,--workers", workers, "Worker threads");
  }

  aniso::RunConfig resolve() const {
    aniso::RunConfig cfg;
    if (!config.empty()) {
      std::ifstream in(config);
      if (!in) aniso::fail(aniso::ErrorKind::MissingArtifact, "missing config file " + config);
      nlohmann::json j;
      try {
        in >> j;
      } catch (const nlohmann::json::exception& e) {
        aniso::fail(aniso::ErrorKind::Validation, "config is not valid JSON: " + std::string(e.what()));
      }
      aniso::apply_config(cfg, j);
    }
    if (catalog) cfg.catalog_root = *catalog;
    if (output) cfg.output_root = *output;
    if (exchange) cfg.exchange_dir = *exchange;
    if (sizes) cfg.plan.sizes = *sizes;
    if (crop) cfg.plan.crop_dimension = *crop;
    if (margin) cfg.plan.margin = *margin;
    if (offsets) cfg.plan.master_offsets = *offsets;
    if (seed) cfg.plan.seed = *seed;
    if (workers) cfg.workers = *workers;
    return cfg;
  }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) aniso::fail(aniso::ErrorKind::MissingArtifact, "missing file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int exit_code_for(aniso::ErrorKind k) {
  switch (k) {
    case aniso::ErrorKind::InfeasibleProbe: return kExitInfeasible;
    case aniso::ErrorKind::Io: return kExitInternal;
    default: return kExitValidation;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spatial anisotropy probing harness"};
  app.require_subcommand(1);
  std::function<int()> action;

  // catalog-validate
  auto* validate = app.add_subcommand("catalog-validate", "Load and validate a scene catalog");
  RunFlags validate_flags;
  validate_flags.attach(validate);
  validate->callback([&] {
    action = [&] {
      auto cfg = validate_flags.resolve();
      auto catalog = aniso::load_catalog(cfg.catalog_root);
      auto pairs = aniso::compatible_pairs(catalog, cfg.plan.margin);
      std::cout << "catalog ok: " << catalog.backgrounds.size() << " backgrounds, "
                << catalog.targets.size() << " targets, " << pairs.size()
                << " compatible pairs at margin " << cfg.plan.margin << "\n";
      return kExitOk;
    };
  });

  // plan
  auto* plan = app.add_subcommand("plan", "Sample insertion points and plan every probe");
  RunFlags plan_flags;
  plan_flags.attach(plan);
  plan->callback([&] {
    action = [&] {
      auto s = aniso::run_plan(plan_flags.resolve());
      std::cout << "pairs " << s.pairs << ", test images " << s.test_images << ", probes "
                << s.probes << ", infeasible " << s.skipped << "\n";
      return s.skipped ? kExitInfeasible : kExitOk;
    };
  });

  // generate
  auto* generate = app.add_subcommand("generate", "Composite test images and write probe crops");
  RunFlags gen_flags;
  gen_flags.attach(generate);
  bool no_crops = false;
  generate->add_flag("--no-crops", no_crops, "Skip writing probe crops (enough for mock-run)");
  generate->callback([&] {
    action = [&] {
      auto cfg = gen_flags.resolve();
      cfg.write_crops = !no_crops;
      auto m = aniso::run_generate(cfg);
      std::cout << "wrote " << m.probes.size() << " probe crops\n";
      return kExitOk;
    };
  });

  // mock-run
  auto* mock = app.add_subcommand("mock-run", "Run the built-in degradation-profile detector");
  RunFlags mock_flags;
  mock_flags.attach(mock);
  std::optional<double> p0, delta, lambda, kappa, label_acc;
  std::optional<std::uint64_t> mock_seed;
  mock->add_option("--p0", p0, "Base detection probability");
  mock->add_option("--delta", delta, "Border penalty magnitude");
  mock->add_option("--lambda", lambda, "Penalty decay length (pixels)");
  mock->add_option("--kappa", kappa, "Corner multiplier");
  mock->add_option("--label-accuracy", label_acc, "Probability of the correct label");
  mock->add_option("--mock-seed", mock_seed, "Detector seed");
  mock->callback([&] {
    action = [&] {
      auto cfg = mock_flags.resolve();
      if (p0) cfg.mock.p0 = *p0;
      if (delta) cfg.mock.delta = *delta;
      if (lambda) cfg.mock.lambda = *lambda;
      if (kappa) cfg.mock.kappa = *kappa;
      if (label_acc) cfg.mock.label_accuracy = *label_acc;
      if (mock_seed) cfg.mock_seed = *mock_seed;
      auto n = aniso::run_mock(cfg);
      std::cout << "wrote " << n << " mock predictions\n";
      return kExitOk;
    };
  });

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "Score predictions and aggregate per offset cell");
  RunFlags eval_flags;
  eval_flags.attach(evaluate);
  evaluate->callback([&] {
    action = [&] {
      auto s = aniso::run_evaluate(eval_flags.resolve());
      std::cout << "probes " << s.probes << ", covered " << s.covered << ", coverage "
                << s.coverage() << ", records " << s.records << "\n";
      return kExitOk;
    };
  });

  // report
  auto* report = app.add_subcommand("report", "Render per-cell metric heatmaps");
  RunFlags report_flags;
  report_flags.attach(report);
  std::vector<std::string> metric_names{"r_t", "r_a", "c_t", "c_a", "s_t", "s_a"};
  report->add_option("--metrics", metric_names, "Metrics to render")->delimiter(',');
  report->callback([&] {
    action = [&] {
      std::vector<aniso::Metric> metrics;
      for (const auto& m : metric_names) metrics.push_back(aniso::metric_from_string(m));
      auto n = aniso::run_report(report_flags.resolve(), metrics);
      std::cout << "wrote " << n << " heatmaps\n";
      return kExitOk;
    };
  });

  // border-calc
  auto* border = app.add_subcommand("border-calc", "Padding contamination through a layer stack");
  std::string arch_path, csv_path, input_size = "800x800";
  bool verify = false;
  border->add_option("arch", arch_path, "Architecture file (one 'kernel stride padding' per line)")
      ->required();
  border->add_option("--input", input_size, "Input size WxH");
  border->add_option("--csv", csv_path, "Also write the report as CSV");
  border->add_flag("--verify", verify, "Cross-check against the dense taint simulation");
  border->callback([&] {
    action = [&] {
      auto layers = aniso::border::parse_architecture(read_file(arch_path));
      aniso::border::InputSize in;
      char x = 0;
      std::istringstream is(input_size);
      if (!(is >> in.width >> x >> in.height) || (x != 'x' && x != 'X'))
        aniso::fail(aniso::ErrorKind::InvalidInput, "input size must look like 800x800");
      auto report = aniso::border::affected_band(layers, in);
      auto rf = aniso::border::compose_rf(layers);
      std::cout << aniso::border::format_table(layers, report);
      std::cout << "receptive field " << rf.rf_size << ", jump " << rf.jump << ", start "
                << rf.start.value() << "\n";
      if (!csv_path.empty())
        std::ofstream(csv_path, std::ios::binary) << aniso::border::format_csv(layers, report);
      if (verify) {
        auto oracle = aniso::border::taint_oracle(layers, in);
        if (!(oracle == report)) {
          std::cerr << "taint simulation disagrees with the analytic report\n";
          return kExitInternal;
        }
        std::cout << "verified against taint simulation\n";
      }
      return kExitOk;
    };
  });

  // bias-map
  auto* bias = app.add_subcommand("bias-map", "Sum annotation masks on a standard grid");
  std::string ann_path, bias_out = "bias";
  int bias_size = aniso::kDensitySize;
  bias->add_option("annotations", ann_path,
                   "JSONL: {\"width\",\"height\",\"masks\":[{width,height,counts}]} per image")
      ->required();
  bias->add_option("-o,--output", bias_out, "Output directory");
  bias->add_option("--size", bias_size, "Standard grid size")->check(CLI::PositiveNumber);
  bias->callback([&] {
    action = [&] {
      std::vector<aniso::ImageAnnotations> anns;
      std::istringstream in(read_file(ann_path));
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
          auto j = nlohmann::json::parse(line);
          aniso::ImageAnnotations a;
          a.width = j.at("width").get<int>();
          a.height = j.at("height").get<int>();
          for (const auto& m : j.at("masks")) a.masks.push_back(aniso::rle_from_json(m));
          anns.push_back(std::move(a));
        } catch (const nlohmann::json::exception& e) {
          aniso::fail(aniso::ErrorKind::Validation,
                      ann_path + ":" + std::to_string(lineno) + ": " + e.what());
        }
      }
      auto d = aniso::density_map(anns, bias_size);
      aniso::write_density(d, bias_out);
      std::cout << "density map over " << d.images << " images, " << d.masks << " masks -> "
                << bias_out << "\n";
      return kExitOk;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }

  try {
    return action();
  } catch (const aniso::Error& e) {
    std::cerr << "error (" << aniso::to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
}
