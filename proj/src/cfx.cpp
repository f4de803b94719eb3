#include "cfxcert/cfx.hpp"

#include <algorithm>
#include <cmath>

#include "cfxcert/common.hpp"
#include "cfxcert/eval.hpp"
#include "cfxcert/jsonio.hpp"
#include "cfxcert/log.hpp"
#include "cfxcert/milp.hpp"

namespace cfxcert {

namespace {

// Strictness pad on the flip constraint. Solutions land on binding
// constraints; the pad keeps the flipped class strict after the polish
// LP's 1e-7 feasibility slack, so classify() agrees on the result.
constexpr double kFlipGuard = 1e-6;

bool binary_kind(FeatureKind k) {
    return k == FeatureKind::ordinal || k == FeatureKind::discrete;
}

} // namespace

std::string robust_flag_name(RobustFlag f) {
    switch (f) {
    case RobustFlag::yes:
        return "yes";
    case RobustFlag::no:
        return "no";
    default:
        return "not-checked";
    }
}

CfxQuery make_cfx_query(const FFNN& model, const Vector& x, const FeatureSpec* spec,
                        std::vector<std::string> frozen) {
    model.validate();
    if (x.size() != model.input_size())
        throw ShapeError("query input width differs from the model");
    bool two_logit_pair = model.output_mode == OutputMode::two_logit && model.output_size() == 2;
    bool sigmoid = model.output_mode == OutputMode::single_sigmoid && model.output_size() == 1;
    if (!two_logit_pair && !sigmoid)
        throw ConfigError("counterfactuals need a two-logit or single-sigmoid binary model");
    if (spec && spec->encoded_width() != model.input_size())
        throw ShapeError("feature spec encodes a different width than the model input");
    for (const std::string& name : frozen) {
        if (!spec)
            throw ConfigError("frozen features need a feature spec to resolve names");
        if (!spec->find(name))
            throw ConfigError("frozen feature '" + name + "' is not in the spec");
    }
    CfxQuery q;
    q.model = &model;
    q.x = x;
    q.observed_class = classify(model, x);
    q.spec = spec;
    q.frozen = std::move(frozen);
    return q;
}

CfxResult generate_cfx(const CfxQuery& q, double epsilon) {
    if (!q.model)
        throw ConfigError("query has no model");
    if (epsilon < 0.0 || !std::isfinite(epsilon))
        throw ConfigError("margin must be a finite non-negative value");
    const FFNN& model = *q.model;
    const std::size_t n = model.input_size();

    INN point = make_point_inn(model);
    Vector lo(n, 0.0), hi(n, 1.0);
    InnEncoding enc = encode_inn_box(point, lo, hi);
    LinearProgram& lp = enc.problem.lp;
    const auto& xv = enc.input_vars();

    std::vector<bool> frozen_col(n, false);
    if (q.spec) {
        for (const std::string& name : q.frozen) {
            auto ci = q.spec->find(name);
            if (!ci)
                throw ConfigError("frozen feature '" + name + "' is not in the spec");
            std::size_t off = q.spec->offset_of(*ci);
            for (std::size_t i = 0; i < q.spec->columns[*ci].width(); ++i)
                frozen_col[off + i] = true;
        }
        std::size_t off = 0;
        for (const FeatureColumn& col : q.spec->columns) {
            std::size_t w = col.width();
            if (binary_kind(col.kind)) {
                for (std::size_t i = 0; i < w; ++i)
                    if (!frozen_col[off + i])
                        enc.problem.binaries.push_back(xv[off + i]);
                if (col.kind == FeatureKind::ordinal) {
                    // leading-ones code: each level allows the next
                    for (std::size_t i = 0; i + 1 < w; ++i)
                        lp.add_constraint({{xv[off + i], 1.0}, {xv[off + i + 1], -1.0}},
                                          Relation::ge, 0.0);
                } else {
                    std::vector<std::pair<std::size_t, double>> sum;
                    for (std::size_t i = 0; i < w; ++i)
                        sum.push_back({xv[off + i], 1.0});
                    lp.add_constraint(sum, Relation::eq, 1.0);
                }
            }
            off += w;
        }
    }
    for (std::size_t i = 0; i < n; ++i)
        if (frozen_col[i]) {
            lp.lower[xv[i]] = q.x[i];
            lp.upper[xv[i]] = q.x[i];
        }

    // normalized L1: one slack above |x'_i - x_i| per movable feature
    for (std::size_t i = 0; i < n; ++i) {
        if (frozen_col[i])
            continue;
        std::size_t d = lp.add_var(0.0, LinearProgram::inf, 1.0 / static_cast<double>(n));
        lp.add_constraint({{d, 1.0}, {xv[i], -1.0}}, Relation::ge, -q.x[i]);
        lp.add_constraint({{d, 1.0}, {xv[i], 1.0}}, Relation::ge, q.x[i]);
    }

    const int desired = 1 - q.observed_class;
    const auto& ov = enc.output_vars();
    if (model.output_mode == OutputMode::two_logit) {
        lp.add_constraint({{ov[static_cast<std::size_t>(desired)], 1.0},
                           {ov[static_cast<std::size_t>(1 - desired)], -1.0}},
                          Relation::ge, epsilon + kFlipGuard);
    } else {
        lp.add_constraint({{ov[0], desired == 1 ? 1.0 : -1.0}}, Relation::ge,
                          epsilon + kFlipGuard);
    }
    lp.sense = Sense::minimize;

    CfxResult res;
    res.epsilon = epsilon;
    res.iterations = 1;
    MilpResult mr = solve_milp(enc.problem);
    if (mr.status != MilpStatus::optimal) {
        res.reason = "no counterfactual exists at margin " + format_double(epsilon);
        return res;
    }

    // Polish: pin every binary to its rounded value and re-solve the pure
    // LP so the continuous part is feasible to LP precision.
    LinearProgram polish = lp;
    for (std::size_t b : enc.problem.binaries) {
        double v = std::round(std::clamp(mr.x[b], 0.0, 1.0));
        polish.lower[b] = v;
        polish.upper[b] = v;
    }
    LpResult pr = solve_lp(polish);
    const Vector& sol = pr.status == LpStatus::optimal ? pr.x : mr.x;

    Vector xp(n);
    for (std::size_t i = 0; i < n; ++i)
        xp[i] = std::clamp(sol[xv[i]], lp.lower[xv[i]], lp.upper[xv[i]]);
    if (classify(model, xp) != desired) {
        log::warn("counterfactual landed on the decision boundary; reporting absent");
        res.reason = "solver returned a boundary point at margin " + format_double(epsilon);
        return res;
    }
    res.x_prime = std::move(xp);
    res.distance = normalized_l1(q.x, *res.x_prime);
    return res;
}

CfxResult generate_robust_cfx(const CfxQuery& q, const PlausibleShiftSet& shifts,
                              std::size_t max_iterations, double eps_step, double eps_max) {
    if (max_iterations == 0)
        throw ConfigError("need at least one iteration");
    if (eps_step <= 0.0 || eps_max < 0.0)
        throw ConfigError("margin schedule needs eps_step > 0 and eps_max >= 0");
    if (!q.model)
        throw ConfigError("query has no model");

    RobustnessChecker checker(*q.model, shifts);
    CfxResult res;
    if (!checker.sound_at(q.x)) {
        res.reason = "shift set is unsound at the input; no robust counterfactual can exist";
        return res;
    }

    const int desired = 1 - q.observed_class;
    double eps = 0.0;
    std::size_t it = 0;
    while (it < max_iterations && eps <= eps_max + 1e-12) {
        ++it;
        CfxResult cand = generate_cfx(q, eps);
        if (!cand.x_prime) {
            // larger margins only shrink the feasible region
            cand.iterations = it;
            cand.reason += "; abandoning the schedule";
            return cand;
        }
        if (checker.verdict(*cand.x_prime) == std::optional<int>(desired)) {
            cand.iterations = it;
            cand.robust = RobustFlag::yes;
            return cand;
        }
        log::debug("margin " + format_double(eps) + " produced a non-robust candidate");
        eps += eps_step;
    }
    res.iterations = it;
    res.epsilon = eps - eps_step;
    res.robust = RobustFlag::no;
    res.reason = "margin schedule exhausted without a robust counterfactual";
    return res;
}

std::vector<Vector> filter_robust(const FFNN& model, const PlausibleShiftSet& shifts,
                                  const Vector& x, int c, const std::vector<Vector>& candidates) {
    if (x.size() != model.input_size())
        throw ShapeError("input width differs from the model");
    INN inn = build_abstraction(model, shifts);
    std::vector<Vector> kept;
    for (const Vector& cand : candidates) {
        if (cand.size() != x.size())
            throw ShapeError("candidate width differs from the input");
        if (inn_classify(inn, cand) == std::optional<int>(1 - c))
            kept.push_back(cand);
    }
    return kept;
}

nlohmann::json cfx_to_json(const CfxResult& r) {
    nlohmann::json j;
    if (r.x_prime) {
        nlohmann::json arr = nlohmann::json::array();
        for (double v : *r.x_prime)
            arr.push_back(format_double(v));
        j["x_prime"] = arr;
    } else {
        j["x_prime"] = nullptr;
    }
    j["distance"] = format_double(r.distance);
    j["epsilon"] = format_double(r.epsilon);
    j["iterations"] = r.iterations;
    j["robust"] = robust_flag_name(r.robust);
    j["reason"] = r.reason;
    return j;
}

} // namespace cfxcert
