// Writes u, g and v = max(u, g) on [-3, 3] for the reference parameter sets,
// one CSV per set, plus a JSON index with the free boundaries.
//
//   figure_data [out_dir]

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "ctlstop/ctlstop.hpp"

using namespace ctlstop;

namespace {

void write_curve(const std::filesystem::path& file, const Generator& gen, const GameModel& m) {
    const PiecewiseV v = build_v(gen, m);
    std::ofstream out(file);
    out << "x,u,g,v\n";
    char line[128];
    for (int i = 0; i <= 1200; ++i) {
        const double x = -3.0 + 6.0 * i / 1200.0;
        std::snprintf(line, sizeof line, "%.6f,%.12g,%.12g,%.12g\n", x, eval_u(gen, x), m.g(x), v(x));
        out << line;
    }
}

}  // namespace

int main(int argc, char** argv) {
    const std::filesystem::path dir = argc > 1 ? argv[1] : ".";
    std::filesystem::create_directories(dir);
    nlohmann::json index = nlohmann::json::array();

    for (const QuadParams& p : {QuadParams{1, 1, 0.5, 0}, QuadParams{1, 0.1, 0.2, 0}, QuadParams{4, 0.1, 1, 0}}) {
        const auto r = classify_regime_I(p);
        const std::string name = std::string("quadratic_") + to_string(r.tag) + ".csv";
        write_curve(dir / name, r.generator, p.model());
        index.push_back({{"file", name},
                         {"params", {p.delta, p.kappa, p.lambda, p.mu}},
                         {"alpha", r.alpha},
                         {"beta", r.beta}});
    }
    for (double lambda : {1.0, 1.5, 10.0}) {
        const KinkParams p{0.5, lambda};
        const auto r = classify_regime_II(p);
        const std::string name = std::string("kink_") + to_string(r.tag) + ".csv";
        write_curve(dir / name, r.generator, p.model());
        nlohmann::json e{{"file", name}, {"params", {p.delta, p.lambda}}, {"alpha", r.alpha}};
        e["beta"] = r.beta ? nlohmann::json(*r.beta) : nlohmann::json();
        index.push_back(e);
    }
    std::ofstream(dir / "figures.json") << index.dump(2) << "\n";
    std::printf("%s\n", (dir / "figures.json").string().c_str());
    return 0;
}
