// Writes the synthetic test fixture: trajectories.csv, pois.csv and
// truth_visits.csv (planted stays), or a Geolife-style PLT tree with --plt.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "visitscope/ingest.hpp"
#include "visitscope/synth.hpp"
#include "visitscope/visits.hpp"

namespace vs = visitscope;
namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"generate a synthetic mobility population with planted stays"};
  vs::synth::PopulationParams p;
  std::string out = "fixture";
  bool plt = false;
  app.add_option("--out,-o", out, "output directory");
  app.add_option("--users", p.users, "number of users");
  app.add_option("--days", p.days, "days of data per user");
  app.add_option("--pois", p.pois, "number of PoIs");
  app.add_option("--seed", p.seed, "random seed");
  app.add_flag("--plt", plt, "write a PLT tree instead of trajectories.csv");
  CLI11_PARSE(app, argc, argv);

  const auto pop = vs::synth::generate_population(p);
  fs::create_directories(out);
  if (plt) {
    vs::synth::write_plt_corpus(fs::path(out) / "Data", pop.records);
  } else {
    std::ofstream f(fs::path(out) / "trajectories.csv", std::ios::binary);
    vs::synth::write_trajectory_csv(f, pop.records);
  }
  {
    std::ofstream f(fs::path(out) / "pois.csv", std::ios::binary);
    vs::ingest::write_pois_csv(f, pop.pois);
  }
  {
    std::ofstream f(fs::path(out) / "truth_visits.csv", std::ios::binary);
    vs::visits::write_visits_csv(f, pop.truth);
  }
  std::cerr << pop.records.size() << " records, " << pop.pois.size() << " PoIs, " << pop.truth.size()
            << " planted stays\n";
  return 0;
}
