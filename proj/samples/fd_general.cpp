// Grid solution for a model without a closed form: mean-reverting drift
// b(x) = -x/2 with the truncated-parabola payoff. Prints the regions read off
// the discrete solution.
//
//   fd_general [lambda] [nodes]

#include <cstdio>
#include <cstdlib>

#include "ctlstop/ctlstop.hpp"

using namespace ctlstop;

namespace {

void print_set(const char* name, const IntervalSet& s) {
    std::printf("%-6s", name);
    if (s.empty()) std::printf(" (empty)");
    for (const auto& i : s) std::printf(" [%.4f, %.4f]", i.lo, i.hi);
    std::printf("\n");
}

}  // namespace

int main(int argc, char** argv) {
    const double lambda = argc > 1 ? std::atof(argv[1]) : 3.0;
    GridProblem prob;
    prob.model = make_kink_model(0.5, lambda);
    prob.model.drift = {0.0, -0.5};
    prob.far_field = default_far_field(prob.model);
    prob.L = 5.0;
    prob.N = argc > 2 ? std::atol(argv[2]) : 2001;

    try {
        const auto sol = solve(prob);
        const auto rs = extract_discrete_regions(sol);
        std::printf("h = %.4g, %d controller updates, max residual %.3g%s\n", prob.h(), sol.outer_iterations,
                    sol.max_residual, sol.upwinded ? ", upwinded" : "");
        print_set("W", rs.waiting);
        print_set("C", rs.control);
        print_set("S_W", rs.stop_wait);
        print_set("S_C", rs.stop_control);
        std::printf("kinks ");
        for (double k : rs.kinks) std::printf(" %.4f", k);
        std::printf("\nu(0) = %.6f\n", sol.u[static_cast<std::size_t>(prob.N / 2)]);
    } catch (const Error& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    }
    return 0;
}
