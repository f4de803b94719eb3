#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfxcert/dataset.hpp"
#include "cfxcert/interval.hpp"
#include "cfxcert/nn.hpp"

namespace cfxcert {

enum class RobustFlag { yes, no, not_checked };
std::string robust_flag_name(RobustFlag f);

struct CfxQuery {
    const FFNN* model = nullptr;
    Vector x;
    int observed_class = 0;
    // Plausibility source: binaries for one-hot/ordinal groups, their sum
    // and prefix rows. Null means every feature is continuous in [0,1].
    const FeatureSpec* spec = nullptr;
    std::vector<std::string> frozen; // feature names pinned to their value in x
};

// Classifies x to fill observed_class and validates widths, the output
// mode (two-logit or single-sigmoid) and the frozen names.
CfxQuery make_cfx_query(const FFNN& model, const Vector& x, const FeatureSpec* spec = nullptr,
                        std::vector<std::string> frozen = {});

struct CfxResult {
    std::optional<Vector> x_prime;
    double distance = 0.0; // normalized L1, meaningful only when x_prime is set
    double epsilon = 0.0;
    std::size_t iterations = 0;
    RobustFlag robust = RobustFlag::not_checked;
    std::string reason; // why x_prime is absent
};

// Minimal-distance counterfactual of the concrete network by MILP:
// x' in [0,1]^n under the feature-spec plausibility rows, flipped class
// enforced with margin epsilon on the deciding logit difference (or the
// sigmoid pre-activation). Infeasibility is a result, not an error.
CfxResult generate_cfx(const CfxQuery& q, double epsilon = 0.0);

// Margin-schedule loop: gate on soundness of the shift set at x, then
// raise epsilon from 0 by eps_step until the generated candidate verifies
// as robust, the margin exceeds eps_max, the iteration budget runs out,
// or generation goes infeasible (larger margins only shrink the feasible
// region, so the loop stops early then).
CfxResult generate_robust_cfx(const CfxQuery& q, const PlausibleShiftSet& shifts,
                              std::size_t max_iterations = 101, double eps_step = 0.2,
                              double eps_max = 20.0);

// Keeps exactly the candidates the interval abstraction classifies as
// 1 - c (propagation only); order preserved.
std::vector<Vector> filter_robust(const FFNN& model, const PlausibleShiftSet& shifts,
                                  const Vector& x, int c, const std::vector<Vector>& candidates);

nlohmann::json cfx_to_json(const CfxResult& r);

} // namespace cfxcert
