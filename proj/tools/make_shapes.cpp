// make_shapes: writes the synthetic shape/colour dataset used by the examples.
#include <iostream>

#include <CLI11.hpp>

#include "cdga/dataset/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Write a synthetic multi-domain shapes dataset"};
  std::string out;
  cdga::ShapesDatasetSpec spec;
  app.add_option("out", out, "Output directory")->required();
  app.add_option("--domains", spec.domains, "Domain names");
  app.add_option("--classes", spec.classes, "Class names");
  app.add_option("--per-cell", spec.per_cell, "Images per (domain, class)");
  app.add_option("--size", spec.image_size, "Image side length");
  app.add_option("--seed", spec.seed, "Seed");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }
  try {
    std::cout << cdga::write_shapes_dataset(out, spec) << " images written to " << out << '\n';
  } catch (const std::exception& e) {
    std::cerr << "make_shapes: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
