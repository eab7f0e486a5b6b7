// Writes a small synthetic catalog (procedural backgrounds, ellipse cutouts).

#include <iostream>

#include <CLI11.hpp>

#include "aniso/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic scene catalog"};
  std::string out;
  aniso::fixture::Options opt;
  app.add_option("out", out, "Catalog root to create")->required();
  app.add_option("--scenes", opt.scenes, "Number of backgrounds")->check(CLI::PositiveNumber);
  app.add_option("--targets", opt.targets, "Number of target cutouts")->check(CLI::PositiveNumber);
  app.add_option("--side", opt.width, "Background side in pixels")->check(CLI::Range(1600, 8000));
  app.add_option("--seed", opt.seed, "Generator seed");
  CLI11_PARSE(app, argc, argv);
  opt.height = opt.width;
  try {
    auto c = aniso::fixture::make_catalog(out, opt);
    std::cout << "wrote " << c.backgrounds.size() << " backgrounds and " << c.targets.size()
              << " targets to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
