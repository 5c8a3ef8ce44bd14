#include "glarefuse/benchmark.hpp"

#include "glarefuse/detection_io.hpp"
#include "glarefuse/image_io.hpp"
#include "glarefuse/rng.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace glarefuse {

void write_benchmark(const BenchmarkSpec& spec) {
    if (spec.domains < 1 || spec.images_per_domain < 1)
        throw std::invalid_argument("write_benchmark: domain and image counts must be positive");
    if (spec.out_dir.empty())
        throw std::invalid_argument("write_benchmark: out_dir must be set");

    namespace fs = std::filesystem;
    fs::create_directories(spec.out_dir / "images");

    std::string truth_lines, glare_lines;
    for (int d = 0; d < spec.domains; ++d) {
        const std::string domain = "dom" + std::to_string(d);
        for (int i = 0; i < spec.images_per_domain; ++i) {
            char idx[16];
            std::snprintf(idx, sizeof idx, "%03d", i);
            const std::string id = domain + "_" + idx;

            SceneSpec s = spec.scene;
            s.domain = domain;
            s.seed = stable_hash(spec.seed, id);
            // Mild per-domain and per-image variation so domains differ.
            s.background_intensity =
                std::clamp(spec.scene.background_intensity + 6 * d, 0, 150);
            SplitRng vary(stable_hash(s.seed, "vary"));
            s.n_heads = std::max(1, spec.scene.n_heads + vary.uniform_int(-2, 2));
            s.n_glare = std::max(1, spec.scene.n_glare + vary.uniform_int(-1, 1));

            Scene scene = generate_scene(s);
            scene.truth.image_id = id;
            write_png(spec.out_dir / "images" / (id + ".png"), scene.image);
            truth_lines += ground_truth_to_json(scene.truth).dump() + "\n";
            glare_lines += region_record_to_json(id, scene.glare_regions).dump() + "\n";
        }
    }
    write_text_file(spec.out_dir / "truth.jsonl", truth_lines);
    write_text_file(spec.out_dir / "glare.jsonl", glare_lines);
}

}  // namespace glarefuse
