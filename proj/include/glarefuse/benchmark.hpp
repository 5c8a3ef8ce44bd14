#pragma once

#include "glarefuse/synth.hpp"

#include <cstdint>
#include <filesystem>

namespace glarefuse {

// On-disk benchmark layout:
//   <out_dir>/images/<id>.png
//   <out_dir>/truth.jsonl   one ground-truth record per image
//   <out_dir>/glare.jsonl   one glare-region record per image
struct BenchmarkSpec {
    std::filesystem::path out_dir;
    int domains = 3;
    int images_per_domain = 50;
    std::uint64_t seed = 1;
    SceneSpec scene;  // template; per-image seed, domain and blob counts vary
};

void write_benchmark(const BenchmarkSpec& spec);

}  // namespace glarefuse
