#pragma once

// Scenario drivers shared by the unit tests and the acceptance runner.

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "prefnav/experiments.hpp"
#include "prefnav/intent.hpp"

namespace scenario {

using namespace prefnav;

/// Simulates a random episode prefix (observations from the simulated
/// human, robot moves following the human's heading or wandering) and
/// returns the largest gap between the library posterior and the
/// enumeration oracle seen at any point of the prefix.
inline double posterior_prefix_gap(const World& world, std::uint64_t seed, InferenceModel model,
                                   int* observations = nullptr) {
    Rng rng(seed);
    const ProblemInstance inst = sample_instance(rng, world);
    const HumanParams human{inst.gamma_h};
    const double beta = 0.2;
    const bool goal_only = model == InferenceModel::goal_only;
    const GroundTruthIntent truth{inst.goal(), inst.preference};

    GridCell s = inst.start;
    Belief belief = Belief::uniform(world, inst.goals, world.polytope_of(s), model);
    oracle::PosteriorOracle ref(world, inst.goals, world.polytope_of(s), inst.gamma_h, beta, goal_only);

    auto gap = [&] {
        double worst = 0;
        const auto& want = ref.probs();
        if (want.size() != belief.probs().size()) return 1.0;
        for (std::size_t i = 0; i < want.size(); ++i) worst = std::max(worst, std::abs(want[i] - belief.probs()[i]));
        return worst;
    };

    double worst = gap();
    const int length = 1 + static_cast<int>(uniform_index(rng, 12));
    for (int t = 0; t < length; ++t) {
        const Observation o = sample_human_observation(rng, world, s, truth, human);
        belief = belief_update(belief, world, s, o, human);
        ref.observe(s, o.heading);
        if (observations) ++*observations;
        worst = std::max(worst, gap());

        Action a = o.action();
        if (uniform01(rng) < 0.3) {
            const auto heads = admissible_headings(world, s);
            a = kActions[static_cast<std::size_t>(heads[uniform_index(rng, heads.size())])];
        }
        const Crossing c = edge_crossed(world, s, a);
        s = apply_action(world, s, a);
        if (c.kind != Crossing::Kind::none) {
            std::optional<EdgeRef> via;
            if (c.kind == Crossing::Kind::edge) via = c.edge;
            belief = reanchor_belief(belief, world, world.polytope_of(s), via, beta);
            ref.move(world.polytope_of(s), via);
            worst = std::max(worst, gap());
        }
        if (s == inst.goal()) break;
    }
    return worst;
}

}  // namespace scenario
