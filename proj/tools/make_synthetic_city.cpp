// Writes the synthetic 94-tract city fixture.

#include <CLI11.hpp>

#include <iostream>

#include "vulnatlas/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic city fixture"};
  std::string out = "fixtures/synthetic_city";
  vulnatlas::synth::CityOptions options;
  app.add_option("--out", out, "Output directory");
  app.add_option("--seed", options.seed, "Generator seed");
  app.add_option("--noise", options.noise, "Noise as a fraction of the typology spread");
  CLI11_PARSE(app, argc, argv);
  const auto truth = vulnatlas::synth::write_city(out, options);
  std::size_t in_city = 0;
  for (bool b : truth.in_city) in_city += b ? 1 : 0;
  std::cout << "wrote " << truth.geoids.size() << " cells (" << in_city << " in the city) to " << out << "\n";
  return 0;
}
