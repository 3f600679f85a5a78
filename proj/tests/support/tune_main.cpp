// Runs the synthetic experiment for a list of seeds with config overrides.
// usage: experiment_tune WORKDIR SEED[,SEED...] [key=value ...]
#include <cstdio>

#include <spdlog/spdlog.h>

#include "experiment.hpp"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s WORKDIR SEEDS [key=value ...]\n", argv[0]);
    return 2;
  }
  spdlog::set_level(spdlog::level::warn);
  if (std::getenv("LID_VERBOSE")) spdlog::set_level(spdlog::level::info);
  lid::RunConfig cfg;
  for (int i = 3; i < argc; ++i) cfg.apply_override(argv[i]);
  for (const auto& s : lid::split(argv[2], ',')) {
    cfg.seed = static_cast<std::uint64_t>(lid::parse_int(s));
    const auto r = lid::experiment::run(cfg, std::filesystem::path(argv[1]) / ("seed" + s));
    std::printf("seed %s | base in %.3f cross %.3f f1sd %.3f (%.0fs) | adv in %.3f cross %.3f f1sd %.3f (%.0fs) | "
                "tree %.3f held %d r %.3f | %s\n",
                s.c_str(), r.baseline.in_domain, r.baseline.cross_domain, r.baseline.cross_f1_std,
                r.baseline.seconds, r.adversarial.in_domain, r.adversarial.cross_domain,
                r.adversarial.cross_f1_std, r.adversarial.seconds, r.tree_distance, r.held_out_placed ? 1 : 0,
                r.pearson_geo, r.ward_newick.c_str());
    for (const auto& row : r.baseline.lengths)
      std::printf("   base %s %s %.3f\n", row.domain.c_str(), row.length.c_str(), row.balanced_accuracy);
    for (const auto& row : r.adversarial.lengths)
      std::printf("   adv  %s %s %.3f\n", row.domain.c_str(), row.length.c_str(), row.balanced_accuracy);
    std::fflush(stdout);
  }
}
